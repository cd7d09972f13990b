//! Loading the four standard MNIST IDX files from a local directory.

use std::path::Path;

use rehearse_core::data::Dataset;

use crate::error::{HarnessError, Result};

pub const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
pub const TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
pub const TEST_LABELS: &str = "t10k-labels-idx1-ubyte";

#[derive(Debug, Clone)]
pub struct Mnist {
    pub train: Dataset,
    pub test: Dataset,
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| HarnessError::io(path, e))
}

/// Parse one image/label file pair.
pub fn load_idx(images: &Path, labels: &Path) -> Result<Dataset> {
    let (img, lab) = (read(images)?, read(labels)?);
    Dataset::from_idx_bytes(&img, &lab)
        .map_err(|e| HarnessError::Data(format!("{} / {}: {e}", images.display(), labels.display())))
}

/// Load train and test splits from `dir`, which must hold the four
/// uncompressed files under their usual names.
pub fn load_mnist_dir(dir: &Path) -> Result<Mnist> {
    if !dir.is_dir() {
        return Err(HarnessError::Usage(format!("data directory {} does not exist", dir.display())));
    }
    let missing: Vec<&str> = [TRAIN_IMAGES, TRAIN_LABELS, TEST_IMAGES, TEST_LABELS]
        .into_iter()
        .filter(|f| !dir.join(f).is_file())
        .collect();
    if !missing.is_empty() {
        return Err(HarnessError::Data(format!(
            "{} is missing {}",
            dir.display(),
            missing.join(", ")
        )));
    }
    Ok(Mnist {
        train: load_idx(&dir.join(TRAIN_IMAGES), &dir.join(TRAIN_LABELS))?,
        test: load_idx(&dir.join(TEST_IMAGES), &dir.join(TEST_LABELS))?,
    })
}
