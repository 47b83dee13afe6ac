//! Support for the acceptance suite: locating the cardiotocography file and
//! collecting per-criterion outcomes.

use std::path::PathBuf;
use std::time::Instant;

use efsvm::data::{load_dataset, Dataset, FileFormat};
use efsvm::experiment::ExperimentConfig;

/// Environment variable naming the cardiotocography CSV or ARFF file.
pub const CTG_ENV: &str = "EFSVM_CTG_DATA";

/// `$EFSVM_CTG_DATA`, else `data/CTG.csv` at the workspace root.
pub fn ctg_path() -> Option<PathBuf> {
    if let Some(p) = std::env::var_os(CTG_ENV).map(PathBuf::from) {
        return p.is_file().then_some(p);
    }
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/CTG.csv");
    p.is_file().then_some(p)
}

/// Loads the cardiotocography records with the default experiment options.
pub fn load_ctg() -> Result<(Dataset, ExperimentConfig), String> {
    let path = ctg_path().ok_or_else(|| {
        format!("cardiotocography data not found: set {CTG_ENV} or place it at data/CTG.csv")
    })?;
    let cfg = ExperimentConfig {
        data: Some(path.clone()),
        ..ExperimentConfig::default()
    };
    let ds = load_dataset(&path, FileFormat::from_path(&path), &cfg.load_options())
        .map_err(|e| format!("{}: {e}", path.display()))?;
    Ok((ds, cfg))
}

/// Result of one acceptance criterion.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub details: Vec<String>,
    pub seconds: f64,
}

/// Accumulates checks for one criterion.
pub struct Criterion {
    id: u8,
    title: &'static str,
    start: Instant,
    failures: usize,
    details: Vec<String>,
}

impl Criterion {
    pub fn new(id: u8, title: &'static str) -> Self {
        Criterion {
            id,
            title,
            start: Instant::now(),
            failures: 0,
            details: Vec::new(),
        }
    }

    /// Records one check; failing checks are listed in the output.
    pub fn check(&mut self, ok: bool, what: impl Into<String>) -> bool {
        let what = what.into();
        if !ok {
            self.failures += 1;
            self.details.push(format!("FAIL {what}"));
        }
        ok
    }

    pub fn note(&mut self, what: impl Into<String>) {
        self.details.push(what.into());
    }

    /// Marks the criterion failed because a prerequisite is missing.
    pub fn blocked(mut self, why: impl Into<String>) -> Outcome {
        self.failures += 1;
        self.details.push(format!("BLOCKED {}", why.into()));
        self.finish(f64::INFINITY)
    }

    /// Closes the criterion; exceeding `budget_seconds` fails it.
    pub fn finish(mut self, budget_seconds: f64) -> Outcome {
        let seconds = self.start.elapsed().as_secs_f64();
        if budget_seconds.is_finite() && seconds > budget_seconds {
            self.failures += 1;
            self.details
                .push(format!("FAIL runtime {seconds:.1}s exceeds {budget_seconds:.0}s"));
        }
        Outcome {
            id: self.id,
            title: self.title,
            passed: self.failures == 0,
            details: self.details,
            seconds,
        }
    }
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "[{}] criterion {}: {} ({:.2}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.seconds
        )
    }
}
