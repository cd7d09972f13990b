//! Which stored examples can a one-column update disturb?
//!
//! Conditioned on the neuron `g = G(x_new)` that learning `x_new` will move,
//! stored history splits into three disjoint sets:
//!
//! * `s1`: no neuron is clipped at `x`,
//! * `s2`: the only clipped neuron at `x` is `g`,
//! * `s3`: some neuron other than `g` is clipped at `x`.
//!
//! Examples in `s3` sit on a flat piece of the unit held by a column the update
//! never touches, so with hard clipping their output cannot change. Rehearsal
//! therefore only needs `s1 ∪ s2`.
//!
//! [`InterferenceIndex`] answers that query without touching the parameters:
//! it keeps, per neuron, the ids clipped there plus a per-example count of
//! clipped neurons, and is patched column by column after each update.
//! [`partition_bruteforce`] recomputes everything from scratch and serves as
//! its oracle.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use crate::data::Example;
use crate::error::{Error, Result};
use crate::minout::{ClipVariant, TouchedNeurons, UnitParams};

pub type ExampleId = usize;

/// Append-only history. Ids are dense and equal insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExampleStore {
    examples: Vec<Example>,
}

impl ExampleStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, example: Example) -> ExampleId {
        self.examples.push(example);
        self.examples.len() - 1
    }

    pub fn get(&self, id: ExampleId) -> Option<&Example> {
        self.examples.get(id)
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ExampleId, &Example)> {
        self.examples.iter().enumerate()
    }
}

/// Three-way split of stored ids relative to a selected neuron.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Partition {
    /// `G(x_new)`, the neuron the update is allowed to move.
    pub selected: usize,
    pub s1: Vec<ExampleId>,
    pub s2: Vec<ExampleId>,
    pub s3: Vec<ExampleId>,
}

impl Partition {
    /// `s1 ∪ s2`, ascending.
    pub fn interfered(&self) -> Vec<ExampleId> {
        merge_sorted(&self.s1, &self.s2)
    }

    pub fn len(&self) -> usize {
        self.s1.len() + self.s2.len() + self.s3.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// True when the three sets are disjoint and cover exactly `0..n`.
    pub fn is_partition_of(&self, n: usize) -> bool {
        let mut seen = alloc::vec![false; n];
        for &id in self.s1.iter().chain(&self.s2).chain(&self.s3) {
            if id >= n || seen[id] {
                return false;
            }
            seen[id] = true;
        }
        seen.into_iter().all(|s| s)
    }
}

fn merge_sorted(a: &[ExampleId], b: &[ExampleId]) -> Vec<ExampleId> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

fn classify(status: &[bool], selected: usize) -> u8 {
    let mut clipped = status.iter().enumerate().filter(|(_, &c)| c).map(|(j, _)| j);
    match (clipped.next(), clipped.next()) {
        (None, _) => 1,
        (Some(j), None) if j == selected => 2,
        _ => 3,
    }
}

/// Recompute the partition of `store` for `x_new` from clip statuses.
pub fn partition_bruteforce(
    store: &ExampleStore,
    unit: &UnitParams,
    x_new: &[f64],
    variant: ClipVariant,
    tau: f64,
) -> Result<Partition> {
    let selected = unit.select_neuron(x_new, variant)?;
    partition_bruteforce_at(store, unit, selected, variant, tau)
}

/// As [`partition_bruteforce`] with the selected neuron given directly.
pub fn partition_bruteforce_at(
    store: &ExampleStore,
    unit: &UnitParams,
    selected: usize,
    variant: ClipVariant,
    tau: f64,
) -> Result<Partition> {
    let mut part = Partition {
        selected,
        ..Partition::default()
    };
    for (id, ex) in store.iter() {
        let status = unit.clip_status(&ex.features, variant, tau)?;
        match classify(&status, selected) {
            1 => part.s1.push(id),
            2 => part.s2.push(id),
            _ => part.s3.push(id),
        }
    }
    debug_assert!(part.is_partition_of(store.len()));
    Ok(part)
}

/// Per-unit bookkeeping: neuron -> ids clipped there, id -> clipped count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterferenceIndex {
    clipped_at: Vec<BTreeSet<ExampleId>>,
    counter: BTreeMap<ExampleId, usize>,
    unclipped: BTreeSet<ExampleId>,
}

impl InterferenceIndex {
    pub fn new(neurons: usize) -> Self {
        Self {
            clipped_at: alloc::vec![BTreeSet::new(); neurons],
            counter: BTreeMap::new(),
            unclipped: BTreeSet::new(),
        }
    }

    /// Full rebuild from the store; the reference for incremental upkeep.
    pub fn rebuild(store: &ExampleStore, unit: &UnitParams, variant: ClipVariant, tau: f64) -> Result<Self> {
        let mut index = Self::new(unit.neurons());
        for (id, ex) in store.iter() {
            let status = unit.clip_status(&ex.features, variant, tau)?;
            index.insert(id, &status)?;
        }
        Ok(index)
    }

    pub fn neurons(&self) -> usize {
        self.clipped_at.len()
    }

    pub fn len(&self) -> usize {
        self.counter.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counter.is_empty()
    }

    pub fn contains(&self, id: ExampleId) -> bool {
        self.counter.contains_key(&id)
    }

    /// Number of clipped neurons recorded for `id`.
    pub fn clipped_count(&self, id: ExampleId) -> Option<usize> {
        self.counter.get(&id).copied()
    }

    /// Ids filed under neuron `j`.
    pub fn clipped_at(&self, j: usize) -> &BTreeSet<ExampleId> {
        &self.clipped_at[j]
    }

    pub fn insert(&mut self, id: ExampleId, status: &[bool]) -> Result<()> {
        if status.len() != self.neurons() {
            return Err(Error::DimensionMismatch {
                expected: self.neurons(),
                actual: status.len(),
            });
        }
        if self.counter.contains_key(&id) {
            return Err(Error::InvalidArgument(alloc::format!("example {id} already indexed")));
        }
        let mut count = 0;
        for (j, _) in status.iter().enumerate().filter(|(_, &c)| c) {
            self.clipped_at[j].insert(id);
            count += 1;
        }
        self.counter.insert(id, count);
        if count == 0 {
            self.unclipped.insert(id);
        }
        Ok(())
    }

    /// The interfered set `s1 ∪ s2` for selected neuron `g`, ascending.
    pub fn query(&self, g: usize) -> Result<Vec<ExampleId>> {
        self.check_neuron(g)?;
        let s2: Vec<ExampleId> = self.clipped_at[g]
            .iter()
            .copied()
            .filter(|id| self.counter[id] == 1)
            .collect();
        let s1: Vec<ExampleId> = self.unclipped.iter().copied().collect();
        Ok(merge_sorted(&s1, &s2))
    }

    /// Full partition for selected neuron `g` as seen by the index.
    pub fn partition(&self, g: usize) -> Result<Partition> {
        self.check_neuron(g)?;
        let mut part = Partition {
            selected: g,
            ..Partition::default()
        };
        for (&id, &count) in &self.counter {
            match count {
                0 => part.s1.push(id),
                1 if self.clipped_at[g].contains(&id) => part.s2.push(id),
                _ => part.s3.push(id),
            }
        }
        Ok(part)
    }

    fn check_neuron(&self, g: usize) -> Result<()> {
        if g >= self.neurons() {
            return Err(Error::InvalidArgument(alloc::format!(
                "neuron {g} out of range 0..{}",
                self.neurons()
            )));
        }
        Ok(())
    }

    fn set_status(&mut self, id: ExampleId, j: usize, clipped: bool) -> bool {
        let was = self.clipped_at[j].contains(&id);
        if was == clipped {
            return false;
        }
        let count = self.counter.get_mut(&id).expect("indexed id");
        if clipped {
            self.clipped_at[j].insert(id);
            if *count == 0 {
                self.unclipped.remove(&id);
            }
            *count += 1;
        } else {
            self.clipped_at[j].remove(&id);
            *count -= 1;
            if *count == 0 {
                self.unclipped.insert(id);
            }
        }
        true
    }

    /// Re-evaluate clip status at every touched neuron for every indexed
    /// example. Returns the number of status flips.
    ///
    /// Untouched columns keep their pre-activations, so after this call the
    /// index equals [`InterferenceIndex::rebuild`] provided `touched` covers
    /// every column changed since the previous refresh.
    pub fn refresh(
        &mut self,
        store: &ExampleStore,
        unit: &UnitParams,
        touched: &TouchedNeurons,
        variant: ClipVariant,
        tau: f64,
    ) -> Result<usize> {
        let ids: Vec<ExampleId> = self.counter.keys().copied().collect();
        let mut flips = 0;
        for j in touched.iter() {
            self.check_neuron(j)?;
            for &id in &ids {
                let ex = store
                    .get(id)
                    .ok_or_else(|| Error::Precondition(alloc::format!("indexed example {id} missing from store")))?;
                if ex.features.len() != unit.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: unit.dim(),
                        actual: ex.features.len(),
                    });
                }
                let clipped = variant.is_clipped(unit.preactivation_at(&ex.features, j), tau);
                if self.set_status(id, j, clipped) {
                    flips += 1;
                }
            }
        }
        Ok(flips)
    }

    /// Plain-text dump: per-neuron clipped counts and a histogram of the
    /// per-example counters.
    pub fn report(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "examples: {}", self.len());
        for (j, set) in self.clipped_at.iter().enumerate() {
            let _ = writeln!(out, "neuron {j}: {} clipped", set.len());
        }
        let mut histogram: BTreeMap<usize, usize> = BTreeMap::new();
        for &count in self.counter.values() {
            *histogram.entry(count).or_default() += 1;
        }
        let _ = writeln!(out, "clipped-neuron counts:");
        for (count, examples) in histogram {
            let _ = writeln!(out, "  {count}: {examples}");
        }
        out
    }
}

/// Outcome of checking that a one-column update left `s3` alone.
#[derive(Debug, Clone, PartialEq)]
pub struct NonInterferenceReport {
    pub checked: usize,
    /// `s3` ids whose output changed at all (hard clipping only).
    pub violations: Vec<ExampleId>,
    pub max_abs_delta: f64,
    /// Whether exact equality was asserted (hard clipping) or only measured.
    pub exact: bool,
}

impl NonInterferenceReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Compare unit outputs on `partition.s3` before and after an update.
///
/// Errors if the two units differ anywhere outside column
/// `partition.selected`.
pub fn verify_noninterference(
    before: &UnitParams,
    after: &UnitParams,
    store: &ExampleStore,
    partition: &Partition,
    variant: ClipVariant,
) -> Result<NonInterferenceReport> {
    check_single_column_update(before, after, partition.selected)?;
    let exact = variant == ClipVariant::HardMaxoutClip0;
    let mut report = NonInterferenceReport {
        checked: 0,
        violations: Vec::new(),
        max_abs_delta: 0.0,
        exact,
    };
    for &id in &partition.s3 {
        let ex = store
            .get(id)
            .ok_or_else(|| Error::Precondition(alloc::format!("partition id {id} missing from store")))?;
        let h = before.output(&ex.features, variant)?;
        let h_after = after.output(&ex.features, variant)?;
        report.checked += 1;
        report.max_abs_delta = report.max_abs_delta.max((h_after - h).abs());
        if exact && h.to_bits() != h_after.to_bits() {
            report.violations.push(id);
        }
    }
    Ok(report)
}

/// Errors unless `after` matches `before` bit-for-bit outside column `g`.
pub fn check_single_column_update(before: &UnitParams, after: &UnitParams, g: usize) -> Result<()> {
    if before.dim() != after.dim() || before.neurons() != after.neurons() {
        return Err(Error::Precondition("units differ in shape".into()));
    }
    for j in (0..before.neurons()).filter(|&j| j != g) {
        let same_col = before
            .column(j)
            .iter()
            .zip(after.column(j))
            .all(|(a, b)| a.to_bits() == b.to_bits());
        if !same_col || before.bias()[j].to_bits() != after.bias()[j].to_bits() {
            return Err(Error::Precondition(alloc::format!(
                "parameters changed at column {j}, only {g} may change"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Rng;
    use crate::minout::{FitConfig, Init};
    use alloc::vec;
    use ClipVariant::*;

    fn ex(features: Vec<f64>, label: u8) -> Example {
        Example {
            features,
            label,
            source: 0,
        }
    }

    fn hand_unit() -> UnitParams {
        UnitParams::from_parts(1, 2, vec![1.0, -1.0], vec![-1.0, -1.0]).unwrap()
    }

    fn hand_store() -> ExampleStore {
        let mut store = ExampleStore::new();
        store.push(ex(vec![0.0], 0)); // a: z = (-1, -1)
        store.push(ex(vec![1.5], 0)); // b: z = (0, -2.5)
        store.push(ex(vec![-1.5], 0)); // c: z = (-2.5, 0)
        store
    }

    #[test]
    fn hand_partition() {
        let part = partition_bruteforce(&hand_store(), &hand_unit(), &[2.0], HardMaxoutClip0, 0.1).unwrap();
        assert_eq!(part.selected, 0);
        assert_eq!(part.s1, vec![0]);
        assert_eq!(part.s2, vec![1]);
        assert_eq!(part.s3, vec![2]);
        assert_eq!(part.interfered(), vec![0, 1]);
    }

    #[test]
    fn empty_store_partition() {
        let part = partition_bruteforce(&ExampleStore::new(), &hand_unit(), &[2.0], HardMaxoutClip0, 0.1).unwrap();
        assert!(part.s1.is_empty() && part.s2.is_empty() && part.s3.is_empty());
    }

    #[test]
    fn multiply_clipped_history_is_all_s3() {
        // Columns (1,0) and (0,1) with bias -1: both clip once x0, x1 >= 1.
        let unit = UnitParams::from_parts(2, 2, vec![1.0, 0.0, 0.0, 1.0], vec![-1.0, -1.0]).unwrap();
        let mut store = ExampleStore::new();
        for i in 0..20 {
            let t = 1.0 + i as f64 * 0.25;
            store.push(ex(vec![t, 2.0 * t], 0));
        }
        for x_new in [[5.0, 0.0], [0.0, 5.0]] {
            let part = partition_bruteforce(&store, &unit, &x_new, HardMaxoutClip0, 0.1).unwrap();
            assert!(part.s1.is_empty() && part.s2.is_empty());
            assert_eq!(part.s3.len(), 20);
        }
    }

    #[test]
    fn insert_examples() {
        let mut index = InterferenceIndex::new(3);
        index.insert(0, &[false, false, false]).unwrap();
        assert_eq!(index.clipped_count(0), Some(0));
        assert!((0..3).all(|j| !index.clipped_at(j).contains(&0)));
        index.insert(1, &[true, false, true]).unwrap();
        assert_eq!(index.clipped_count(1), Some(2));
        assert!(index.clipped_at(0).contains(&1) && index.clipped_at(2).contains(&1));
        assert!(!index.clipped_at(1).contains(&1));
        assert!(matches!(index.insert(1, &[false; 3]), Err(Error::InvalidArgument(_))));
        assert!(matches!(index.insert(2, &[false; 2]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn insert_matches_rebuild() {
        let mut rng = Rng::new(4);
        let unit = UnitParams::init(5, 6, Init::Uniform { scale: 1.0 }, &mut rng).unwrap();
        let mut store = ExampleStore::new();
        let mut index = InterferenceIndex::new(6);
        for _ in 0..300 {
            let x: Vec<f64> = (0..5).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let status = unit.clip_status(&x, HardMaxoutClip0, 0.1).unwrap();
            let id = store.push(ex(x, 0));
            index.insert(id, &status).unwrap();
        }
        assert_eq!(index, InterferenceIndex::rebuild(&store, &unit, HardMaxoutClip0, 0.1).unwrap());
    }

    #[test]
    fn query_examples() {
        let store = hand_store();
        let unit = hand_unit();
        let index = InterferenceIndex::rebuild(&store, &unit, HardMaxoutClip0, 0.1).unwrap();
        assert_eq!(index.query(0).unwrap(), vec![0, 1]);
        // b is clipped only at 0; c is clipped only at 1.
        assert_eq!(index.query(1).unwrap(), vec![0, 2]);
        assert!(index.query(2).is_err());
        assert!(InterferenceIndex::new(4).query(1).unwrap().is_empty());
    }

    #[test]
    fn refresh_with_nothing_touched_is_identity() {
        let store = hand_store();
        let unit = hand_unit();
        let mut index = InterferenceIndex::rebuild(&store, &unit, HardMaxoutClip0, 0.1).unwrap();
        let before = index.clone();
        let flips = index
            .refresh(&store, &unit, &TouchedNeurons::new(2), HardMaxoutClip0, 0.1)
            .unwrap();
        assert_eq!(flips, 0);
        assert_eq!(index, before);
    }

    #[test]
    fn refresh_after_tiny_update_keeps_index() {
        let store = hand_store();
        let mut unit = hand_unit();
        let mut index = InterferenceIndex::rebuild(&store, &unit, HardMaxoutClip0, 0.1).unwrap();
        let before = index.clone();
        unit.bias_mut()[1] -= 1e-3;
        let mut touched = TouchedNeurons::new(2);
        touched.mark(1);
        assert_eq!(index.refresh(&store, &unit, &touched, HardMaxoutClip0, 0.1).unwrap(), 0);
        assert_eq!(index, before);
    }

    #[test]
    fn refresh_after_large_update_matches_rebuild() {
        let mut rng = Rng::new(8);
        let mut unit = UnitParams::init(4, 5, Init::Uniform { scale: 1.0 }, &mut rng).unwrap();
        let mut store = ExampleStore::new();
        for _ in 0..200 {
            store.push(ex((0..4).map(|_| rng.uniform(-1.0, 1.0)).collect(), 0));
        }
        for variant in [HardMaxoutClip0, SigmoidMinout] {
            let mut index = InterferenceIndex::rebuild(&store, &unit, variant, 0.1).unwrap();
            // Flip the sign of a column: most statuses at neuron 3 change.
            unit.column_mut(3).iter_mut().for_each(|w| *w = -*w * 3.0);
            unit.bias_mut()[3] = -unit.bias()[3] + 0.7;
            let mut touched = TouchedNeurons::new(5);
            touched.mark(3);
            let flips = index.refresh(&store, &unit, &touched, variant, 0.1).unwrap();
            assert!(flips > 0);
            assert_eq!(index, InterferenceIndex::rebuild(&store, &unit, variant, 0.1).unwrap());
        }
    }

    #[test]
    fn index_partition_matches_bruteforce_under_training() {
        let mut rng = Rng::new(15);
        let mut unit = UnitParams::init(6, 4, Init::Uniform { scale: 0.5 }, &mut rng).unwrap();
        let mut store = ExampleStore::new();
        let mut index = InterferenceIndex::new(4);
        let cfg = FitConfig::for_variant(SigmoidMinout);
        for step in 0..150 {
            let x: Vec<f64> = (0..6).map(|_| rng.uniform(0.0, 1.0)).collect();
            let g = unit.select_neuron(&x, SigmoidMinout).unwrap();
            let oracle = partition_bruteforce(&store, &unit, &x, SigmoidMinout, 0.1).unwrap();
            assert_eq!(index.partition(g).unwrap(), oracle, "step {step}");
            assert_eq!(index.query(g).unwrap(), oracle.interfered());
            let mut touched = TouchedNeurons::new(4);
            let target = (step % 3 == 0) as u8 as f64;
            unit.fit_example(&x, target, &cfg, SigmoidMinout, &mut touched).unwrap();
            index.refresh(&store, &unit, &touched, SigmoidMinout, 0.1).unwrap();
            let status = unit.clip_status(&x, SigmoidMinout, 0.1).unwrap();
            let id = store.push(ex(x, 0));
            index.insert(id, &status).unwrap();
        }
    }

    #[test]
    fn partition_depends_on_new_example_only_through_selection() {
        let mut rng = Rng::new(16);
        let unit = UnitParams::init(3, 4, Init::Uniform { scale: 1.0 }, &mut rng).unwrap();
        let mut store = ExampleStore::new();
        for _ in 0..100 {
            store.push(ex((0..3).map(|_| rng.uniform(-1.0, 1.0)).collect(), 0));
        }
        let mut by_selection: BTreeMap<usize, Partition> = BTreeMap::new();
        for _ in 0..200 {
            let x: Vec<f64> = (0..3).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let part = partition_bruteforce(&store, &unit, &x, HardMaxoutClip0, 0.1).unwrap();
            assert!(part.is_partition_of(store.len()));
            if let Some(prev) = by_selection.get(&part.selected) {
                assert_eq!(prev, &part);
            } else {
                by_selection.insert(part.selected, part);
            }
        }
        assert!(by_selection.len() > 1);
    }

    #[test]
    fn hand_theorem_instance() {
        let store = hand_store();
        let before = hand_unit();
        let part = partition_bruteforce(&store, &before, &[2.0], HardMaxoutClip0, 0.1).unwrap();
        let mut after = before.clone();
        after.column_mut(0)[0] = 123.0;
        after.bias_mut()[0] = -77.0;
        let report = verify_noninterference(&before, &after, &store, &part, HardMaxoutClip0).unwrap();
        assert!(report.holds());
        assert_eq!(report.checked, 1);
        assert_eq!(after.output(&[-1.5], HardMaxoutClip0).unwrap(), 0.0);
    }

    #[test]
    fn unchanged_unit_has_zero_deltas() {
        let mut rng = Rng::new(17);
        let unit = UnitParams::init(3, 4, Init::Uniform { scale: 1.0 }, &mut rng).unwrap();
        let mut store = ExampleStore::new();
        for _ in 0..50 {
            store.push(ex((0..3).map(|_| rng.uniform(-1.0, 1.0)).collect(), 0));
        }
        for variant in [HardMaxoutClip0, SigmoidMinout] {
            let part = partition_bruteforce(&store, &unit, &[0.1, 0.2, 0.3], variant, 0.1).unwrap();
            let report = verify_noninterference(&unit, &unit, &store, &part, variant).unwrap();
            assert_eq!(report.max_abs_delta, 0.0);
            assert!(report.holds());
            assert_eq!(report.exact, variant == HardMaxoutClip0);
        }
    }

    #[test]
    fn verify_rejects_multi_column_update() {
        let store = hand_store();
        let before = hand_unit();
        let part = partition_bruteforce(&store, &before, &[2.0], HardMaxoutClip0, 0.1).unwrap();
        let mut after = before.clone();
        after.bias_mut()[1] += 1.0;
        assert!(matches!(
            verify_noninterference(&before, &after, &store, &part, HardMaxoutClip0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn report_lists_neurons_and_histogram() {
        let index = InterferenceIndex::rebuild(&hand_store(), &hand_unit(), HardMaxoutClip0, 0.1).unwrap();
        let text = index.report();
        assert!(text.contains("examples: 3"));
        assert!(text.contains("neuron 0: 1 clipped"));
        assert!(text.contains("  0: 1"));
        assert!(text.contains("  1: 2"));
    }
}
