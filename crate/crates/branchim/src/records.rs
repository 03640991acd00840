//! Result records, their provenance and their on-disk forms.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::io::{ensure_dir, format_number, CsvTable};

pub const JSONL_FILE: &str = "results.jsonl";
pub const SUMMARY_FILE: &str = "summary.csv";

/// Columns of `summary.csv`.
pub const SUMMARY_HEADER: [&str; 10] = [
    "experiment",
    "metric",
    "analytic",
    "empirical",
    "se",
    "p_value",
    "tolerance_kind",
    "tolerance",
    "pass",
    "seed",
];

/// Slack added to standard-error bands so that deterministic samples
/// (zero standard error) are not failed by rounding in the analytic value.
const ROUNDING: f64 = 1e-12;

/// A declared acceptance rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum Tolerance {
    /// `|analytic − empirical| ≤ k · se`.
    SeBand(f64),
    /// `p > min`.
    PValue(f64),
    /// `|analytic − empirical| ≤ max`.
    Absolute(f64),
    /// `|analytic − empirical| ≤ max · |analytic|`.
    Relative(f64),
    /// The empirical value must be positive (used for boolean checks).
    Holds(f64),
}

impl Tolerance {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::SeBand(_) => "se-band",
            Self::PValue(_) => "p-value",
            Self::Absolute(_) => "absolute",
            Self::Relative(_) => "relative",
            Self::Holds(_) => "holds",
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            Self::SeBand(x) | Self::PValue(x) | Self::Absolute(x) | Self::Relative(x) | Self::Holds(x) => x,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: Option<u64>,
    pub replicates: Option<u64>,
    /// Crate name and version of every module that produced the record.
    pub versions: Vec<(String, String)>,
}

impl Provenance {
    pub fn new(seed: Option<u64>, replicates: Option<u64>) -> Self {
        Self {
            seed,
            replicates,
            versions: vec![
                ("branchim".into(), env!("CARGO_PKG_VERSION").into()),
                ("branchim-core".into(), branchim_core::VERSION.into()),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub experiment: String,
    pub metric: String,
    pub analytic: Option<f64>,
    pub empirical: Option<f64>,
    pub se: Option<f64>,
    pub p_value: Option<f64>,
    pub tolerance: Option<Tolerance>,
    /// Present exactly when a tolerance is declared.
    pub pass: Option<bool>,
    pub provenance: Provenance,
    /// Free-form parameters (limit descriptors, model constants, …).
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub details: Map<String, Value>,
}

impl ResultRecord {
    fn base(experiment: &str, metric: &str, provenance: &Provenance) -> Self {
        Self {
            experiment: experiment.into(),
            metric: metric.into(),
            analytic: None,
            empirical: None,
            se: None,
            p_value: None,
            tolerance: None,
            pass: None,
            provenance: provenance.clone(),
            details: Map::new(),
        }
    }

    /// Informational value without a pass/fail verdict.
    pub fn report(experiment: &str, metric: &str, provenance: &Provenance, analytic: Option<f64>, empirical: Option<f64>) -> Self {
        Self {
            analytic,
            empirical,
            ..Self::base(experiment, metric, provenance)
        }
    }

    /// Moment test. Without a standard error (fewer than two samples) no
    /// verdict is given.
    pub fn se_band(
        experiment: &str,
        metric: &str,
        provenance: &Provenance,
        analytic: f64,
        empirical: f64,
        se: Option<f64>,
        k: f64,
    ) -> Self {
        let mut r = Self::base(experiment, metric, provenance);
        r.analytic = Some(analytic);
        r.empirical = Some(empirical);
        r.se = se;
        if let Some(se) = se {
            r.tolerance = Some(Tolerance::SeBand(k));
            r.pass = Some((analytic - empirical).abs() <= k * se + ROUNDING * analytic.abs().max(1.0));
        }
        r
    }

    pub fn p_value(experiment: &str, metric: &str, provenance: &Provenance, statistic: f64, p: f64, min: f64) -> Self {
        let mut r = Self::base(experiment, metric, provenance);
        r.empirical = Some(statistic);
        r.p_value = Some(p);
        r.tolerance = Some(Tolerance::PValue(min));
        r.pass = Some(p > min);
        r
    }

    pub fn absolute(experiment: &str, metric: &str, provenance: &Provenance, analytic: f64, empirical: f64, max: f64) -> Self {
        let mut r = Self::base(experiment, metric, provenance);
        r.analytic = Some(analytic);
        r.empirical = Some(empirical);
        r.tolerance = Some(Tolerance::Absolute(max));
        r.pass = Some((analytic - empirical).abs() <= max);
        r
    }

    pub fn relative(experiment: &str, metric: &str, provenance: &Provenance, analytic: f64, empirical: f64, max: f64) -> Self {
        let mut r = Self::base(experiment, metric, provenance);
        r.analytic = Some(analytic);
        r.empirical = Some(empirical);
        r.tolerance = Some(Tolerance::Relative(max));
        r.pass = Some((analytic - empirical).abs() <= max * analytic.abs());
        r
    }

    /// A yes/no property, recorded as 1 or 0.
    pub fn holds(experiment: &str, metric: &str, provenance: &Provenance, ok: bool) -> Self {
        let mut r = Self::base(experiment, metric, provenance);
        r.empirical = Some(if ok { 1.0 } else { 0.0 });
        r.tolerance = Some(Tolerance::Holds(0.5));
        r.pass = Some(ok);
        r
    }

    pub fn with_detail(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.details.insert(key.into(), value.into());
        self
    }

    /// `false` only for a declared tolerance that failed.
    pub fn ok(&self) -> bool {
        self.pass != Some(false)
    }

    /// One-line human-readable form.
    pub fn describe(&self) -> String {
        let f = |x: Option<f64>| x.map(|v| format!("{v:.6e}")).unwrap_or_else(|| "-".into());
        format!(
            "{} analytic={} empirical={} se={} p={} tol={:?}",
            self.metric,
            f(self.analytic),
            f(self.empirical),
            f(self.se),
            f(self.p_value),
            self.tolerance
        )
    }

    fn summary_row(&self) -> Vec<String> {
        let num = |x: Option<f64>| x.map(format_number).unwrap_or_default();
        vec![
            self.experiment.clone(),
            self.metric.clone(),
            num(self.analytic),
            num(self.empirical),
            num(self.se),
            num(self.p_value),
            self.tolerance.map(|t| t.kind().to_string()).unwrap_or_default(),
            num(self.tolerance.map(|t| t.value())),
            self.pass.map(|p| p.to_string()).unwrap_or_default(),
            self.provenance.seed.map(|s| s.to_string()).unwrap_or_default(),
        ]
    }
}

/// `true` when no declared tolerance failed.
pub fn all_pass(records: &[ResultRecord]) -> bool {
    records.iter().all(ResultRecord::ok)
}

pub fn to_jsonl(records: &[ResultRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn from_jsonl(text: &str) -> Result<Vec<ResultRecord>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

/// Writes `results.jsonl`, `summary.csv` and every table into `dir`.
pub fn emit_results(records: &[ResultRecord], tables: &[CsvTable], dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    let jsonl = dir.join(JSONL_FILE);
    let mut f = BufWriter::new(File::create(&jsonl).map_err(|e| Error::io(&jsonl, e))?);
    f.write_all(to_jsonl(records)?.as_bytes())
        .and_then(|_| f.flush())
        .map_err(|e| Error::io(&jsonl, e))?;

    let summary = dir.join(SUMMARY_FILE);
    let mut w = csv::Writer::from_path(&summary)?;
    w.write_record(SUMMARY_HEADER)?;
    for r in records {
        w.write_record(r.summary_row())?;
    }
    w.flush().map_err(|e| Error::io(&summary, e))?;

    for t in tables {
        t.write(dir)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prov() -> Provenance {
        Provenance::new(Some(3), Some(10))
    }

    #[test]
    fn verdicts() {
        let p = prov();
        assert_eq!(ResultRecord::se_band("e", "m", &p, 1.0, 1.2, Some(0.1), 3.0).pass, Some(true));
        assert_eq!(ResultRecord::se_band("e", "m", &p, 1.0, 1.4, Some(0.1), 3.0).pass, Some(false));
        let single = ResultRecord::se_band("e", "m", &p, 1.0, 1.4, None, 3.0);
        assert_eq!((single.pass, single.tolerance), (None, None));
        assert!(single.ok());
        assert_eq!(ResultRecord::p_value("e", "m", &p, 0.1, 0.02, 0.01).pass, Some(true));
        assert_eq!(ResultRecord::relative("e", "m", &p, 0.5, 0.56, 0.1).pass, Some(false));
        assert_eq!(ResultRecord::report("e", "m", &p, Some(1.0), None).pass, None);
    }

    #[test]
    fn jsonl_round_trip() {
        let r = ResultRecord::absolute("e", "m", &prov(), 0.25, 0.25 + 1e-13, 1e-12).with_detail("shape", 2.0);
        let text = to_jsonl(std::slice::from_ref(&r)).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert_eq!(from_jsonl(&text).unwrap(), vec![r]);
    }

    #[test]
    fn empty_results_still_have_headers() {
        let dir = tempfile::tempdir().unwrap();
        emit_results(&[], &[], dir.path()).unwrap();
        assert_eq!(std::fs::read_to_string(dir.path().join(JSONL_FILE)).unwrap(), "");
        let summary = std::fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap();
        assert_eq!(summary.trim_end(), SUMMARY_HEADER.join(","));
    }
}
