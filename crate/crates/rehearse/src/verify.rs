//! `verify` subcommand: randomized theorem and oracle suites, plus an
//! optional index-versus-brute-force check on real data.

use std::fmt;

use rehearse_core::checks::{minout_gradient_suite, mirror_suite, mlp_gradient_suite, theorem_suite};

use crate::error::Result;
use crate::experiment::execute;
use crate::spec::{ExperimentSpec, MethodArg};

pub const THEOREM_INSTANCES: usize = 500;
pub const GRADIENT_PROBES: usize = 200;
pub const MIRROR_PROBES: usize = 1000;

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub lines: Vec<CheckLine>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.passed)
    }

    pub fn failed_names(&self) -> Vec<&'static str> {
        self.lines.iter().filter(|l| !l.passed).map(|l| l.name).collect()
    }
}

pub fn theorem_check(seed: u64) -> Result<CheckLine> {
    let r = theorem_suite(seed, THEOREM_INSTANCES)?;
    Ok(CheckLine {
        name: "theorem",
        passed: r.passed() && r.instances == THEOREM_INSTANCES,
        detail: format!(
            "{} instances, {} s3 outputs compared, {} violations, {} mirror violations",
            r.instances, r.s3_checked, r.violations, r.mirror_violations
        ),
    })
}

pub fn gradient_check(seed: u64) -> Result<CheckLine> {
    let m = minout_gradient_suite(seed, GRADIENT_PROBES)?;
    let p = mlp_gradient_suite(seed.wrapping_add(1), GRADIENT_PROBES, 12, 8, 10)?;
    Ok(CheckLine {
        name: "gradients",
        passed: m.passed() && p.passed(),
        detail: format!(
            "minout {} probes ({} skipped) max rel err {:.2e} max abs err {:.2e}; mlp {} probes ({} skipped) max rel err {:.2e} max abs err {:.2e}",
            m.probes, m.skipped, m.max_rel_err, m.max_abs_err, p.probes, p.skipped, p.max_rel_err, p.max_abs_err
        ),
    })
}

pub fn mirror_check(seed: u64) -> Result<CheckLine> {
    let r = mirror_suite(seed, MIRROR_PROBES)?;
    Ok(CheckLine {
        name: "mirror",
        passed: r.mismatches == 0 && r.probes == MIRROR_PROBES,
        detail: format!("{} probes, {} mismatches", r.probes, r.mismatches),
    })
}

/// Full conditional run with debug checks; every step's index partition
/// must equal the brute-force one.
pub fn index_check(spec: &ExperimentSpec) -> Result<CheckLine> {
    let spec = ExperimentSpec {
        method: MethodArg::Conditional,
        debug_checks: true,
        ..spec.clone()
    };
    let run = execute(&spec)?;
    let s = &run.summary;
    Ok(CheckLine {
        name: "index",
        passed: s.index_mismatches == 0 && s.index_checks == s.stream_len * 10,
        detail: format!(
            "{} stream steps, {} comparisons, {} mismatches",
            s.stream_len, s.index_checks, s.index_mismatches
        ),
    })
}

/// Run the data-free suites, and the index check when `data` is given.
pub fn run_verify(seed: u64, data: Option<&ExperimentSpec>) -> Result<VerifyReport> {
    let mut lines = vec![theorem_check(seed)?, gradient_check(seed)?, mirror_check(seed)?];
    if let Some(spec) = data {
        lines.push(index_check(spec)?);
    }
    Ok(VerifyReport { lines })
}
