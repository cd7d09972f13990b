//! MNIST in IDX form and the label-ordered MNIST-ol stream.
//!
//! Parsing works on byte slices so it stays allocation-only; reading the
//! files is the harness's job.

use alloc::vec::Vec;

use crate::error::{Error, ParseErrorKind, Result};
use crate::math::Rng;

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;
pub const NUM_CLASSES: usize = 10;

/// One labelled input.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    /// Pixels scaled into `[0, 1]`.
    pub features: Vec<f64>,
    pub label: u8,
    /// Row of the source dataset this example came from.
    pub source: usize,
}

/// Images kept as raw bytes; [`Dataset::features`] scales them by 1/255.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    rows: usize,
    cols: usize,
    pixels: Vec<u8>,
    labels: Vec<u8>,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Cursor<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, offset: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let available = self.bytes.len() - self.offset;
        if available < n {
            return Err(Error::Parse {
                offset: self.offset,
                kind: ParseErrorKind::Truncated { needed: n, available },
            });
        }
        let out = &self.bytes[self.offset..self.offset + n];
        self.offset += n;
        Ok(out)
    }

    fn u32_be(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn magic(&mut self, expected: u32) -> Result<()> {
        let offset = self.offset;
        let found = self.u32_be()?;
        if found != expected {
            return Err(Error::Parse {
                offset,
                kind: ParseErrorKind::BadMagic { found, expected },
            });
        }
        Ok(())
    }
}

/// Parsed `idx3-ubyte` image file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages> {
    let mut cur = Cursor::new(bytes);
    cur.magic(IMAGE_MAGIC)?;
    let count = cur.u32_be()? as usize;
    let rows = cur.u32_be()? as usize;
    let cols = cur.u32_be()? as usize;
    let pixels = cur.take(count * rows * cols)?.to_vec();
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels,
    })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let mut cur = Cursor::new(bytes);
    cur.magic(LABEL_MAGIC)?;
    let count = cur.u32_be()? as usize;
    let start = cur.offset;
    let labels = cur.take(count)?;
    if let Some(pos) = labels.iter().position(|&l| l as usize >= NUM_CLASSES) {
        return Err(Error::Parse {
            offset: start + pos,
            kind: ParseErrorKind::BadLabel(labels[pos]),
        });
    }
    Ok(labels.to_vec())
}

impl Dataset {
    /// Parse an image file and its label file.
    pub fn from_idx_bytes(images: &[u8], labels: &[u8]) -> Result<Self> {
        let images = parse_idx_images(images)?;
        let labels = parse_idx_labels(labels)?;
        if images.count != labels.len() {
            return Err(Error::Parse {
                offset: 4,
                kind: ParseErrorKind::CountMismatch {
                    images: images.count,
                    labels: labels.len(),
                },
            });
        }
        Ok(Self {
            rows: images.rows,
            cols: images.cols,
            pixels: images.pixels,
            labels,
        })
    }

    /// Build from raw row-major pixels; used by tests and synthetic data.
    pub fn from_raw(rows: usize, cols: usize, pixels: Vec<u8>, labels: Vec<u8>) -> Result<Self> {
        if pixels.len() != rows * cols * labels.len() {
            return Err(Error::DimensionMismatch {
                expected: rows * cols * labels.len(),
                actual: pixels.len(),
            });
        }
        if let Some(&l) = labels.iter().find(|&&l| l as usize >= NUM_CLASSES) {
            return Err(Error::InvalidArgument(alloc::format!("label {l} out of range")));
        }
        Ok(Self {
            rows,
            cols,
            pixels,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.rows * self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn raw_image(&self, i: usize) -> &[u8] {
        let d = self.dim();
        &self.pixels[i * d..(i + 1) * d]
    }

    pub fn features(&self, i: usize) -> Vec<f64> {
        self.raw_image(i).iter().map(|&p| p as f64 / 255.0).collect()
    }

    pub fn example(&self, i: usize) -> Example {
        Example {
            features: self.features(i),
            label: self.label(i),
            source: i,
        }
    }

    pub fn examples(&self) -> Vec<Example> {
        (0..self.len()).map(|i| self.example(i)).collect()
    }

    /// Row indices of each class, ascending.
    pub fn class_indices(&self) -> Vec<Vec<usize>> {
        let mut out = alloc::vec![Vec::new(); NUM_CLASSES];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l as usize].push(i);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LabelOrder {
    Ascending,
    Descending,
}

impl LabelOrder {
    pub fn name(self) -> &'static str {
        match self {
            LabelOrder::Ascending => "ascending",
            LabelOrder::Descending => "descending",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "ascending" => Some(LabelOrder::Ascending),
            "descending" => Some(LabelOrder::Descending),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamConfig {
    pub per_class: usize,
    pub order: LabelOrder,
    pub seed: u64,
}

/// Subsample `per_class` rows of every class and lay them out as one block
/// per label in the configured order.
///
/// Sampling draws classes 0..9 in turn from a generator seeded with
/// `cfg.seed`; inside a block the sampled order is kept.
pub fn build_mnist_ol(dataset: &Dataset, cfg: &StreamConfig) -> Result<Vec<Example>> {
    if cfg.per_class == 0 {
        return Err(Error::InvalidArgument("per_class must be >= 1".into()));
    }
    let classes = dataset.class_indices();
    let mut rng = Rng::new(cfg.seed);
    let mut blocks = Vec::with_capacity(NUM_CLASSES);
    for (label, rows) in classes.iter().enumerate() {
        if rows.len() < cfg.per_class {
            return Err(Error::InvalidArgument(alloc::format!(
                "class {label} has {} examples, {} requested",
                rows.len(),
                cfg.per_class
            )));
        }
        let picks = rng.sample_indices(rows.len(), cfg.per_class);
        blocks.push(picks.into_iter().map(|p| rows[p]).collect::<Vec<_>>());
    }
    if cfg.order == LabelOrder::Descending {
        blocks.reverse();
    }
    Ok(blocks
        .into_iter()
        .flatten()
        .map(|i| dataset.example(i))
        .collect())
}
