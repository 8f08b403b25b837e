use super::config::ExperimentConfig;
use crate::diagnostics::{write_table, BoundTable, ErrorCurve};
use crate::error::{Error, Result};
use crate::polychaos::PceSurrogate;
use serde::Serialize;
use std::path::{Path, PathBuf};

/// Expected ratios, one row per observed case.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioTable {
    pub cases: Vec<String>,
    pub orders: Vec<usize>,
    pub mean: Vec<Vec<f64>>,
    pub std: Vec<Vec<f64>>,
    /// The same diagnostic for the exact map.
    pub exact_mean: Vec<f64>,
    pub exact_std: Vec<f64>,
}

impl RatioTable {
    pub fn get(&self, case: &str, n: usize) -> Option<f64> {
        let i = self.cases.iter().position(|c| c == case)?;
        let j = self.orders.iter().position(|&o| o == n)?;
        Some(self.mean[i][j])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tables {
    pub bounds: BoundTable,
    pub lipschitz: BoundTable,
    pub expected_ratio: RatioTable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curves {
    pub pushforward: Vec<ErrorCurve>,
    pub composed: Vec<ErrorCurve>,
    pub updated: Vec<ErrorCurve>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictabilityRow {
    pub case: String,
    pub n: usize,
    /// `kde` for the estimated push-forward, `exact` for a closed form.
    pub reference: String,
    pub c_mean: f64,
    pub c_std: f64,
    pub violation_mean: f64,
    pub violation_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyRow {
    pub case: String,
    pub n: usize,
    pub expected_ratio: f64,
    pub proposals: usize,
    pub accepted_min: usize,
    pub accepted_mean: f64,
    pub bound_mean: f64,
    pub ks_mean: f64,
    pub ks_std: f64,
    pub ks_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurrogateInfo {
    pub n: usize,
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pce: Option<PceSurrogate>,
    /// Exact push-forward density at `q = 0`, for piecewise-linear surrogates.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub central_density: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub predictability: Vec<PredictabilityRow>,
    pub consistency: Vec<ConsistencyRow>,
    pub surrogates: Vec<SurrogateInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Meta {
    pub software: String,
    pub replicates: usize,
    pub replicate_seeds: Vec<u64>,
}

/// Wall-clock; kept out of `report.json` so that file is reproducible.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub replicate_seconds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub tables: Tables,
    pub curves: Curves,
    pub diagnostics: Diagnostics,
    pub meta: Meta,
    #[serde(skip)]
    pub timing: Timing,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn pushforward_curve(&self, reference: &str, r: f64) -> Option<&ErrorCurve> {
        self.curves.pushforward.iter().find(|c| c.reference == reference && c.order == r)
    }

    pub fn composed_curve(&self, p: f64) -> Option<&ErrorCurve> {
        self.curves.composed.iter().find(|c| c.order == p)
    }

    pub fn updated_curve(&self, case: &str, p: f64) -> Option<&ErrorCurve> {
        self.curves.updated.iter().find(|c| c.reference == case && c.order == p)
    }
}

pub const OUTPUT_FILES: [&str; 7] = [
    "bounds.csv",
    "lipschitz.csv",
    "expected_ratio.csv",
    "pushforward_error.csv",
    "composed_error.csv",
    "updated_error.csv",
    "report.json",
];

/// Writes the CSV tables, `report.json` and `timing.json` into `dir`.
pub fn emit_tables(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = |name: &str| dir.join(name);
    report.tables.bounds.write_csv(&path("bounds.csv"))?;
    report.tables.lipschitz.write_csv(&path("lipschitz.csv"))?;
    let er = &report.tables.expected_ratio;
    let rows = er
        .cases
        .iter()
        .zip(&er.mean)
        .map(|(c, m)| (vec![c.clone()], m.clone()))
        .collect();
    write_table(&path("expected_ratio.csv"), &["case\\n"], &er.orders, rows)?;
    ErrorCurve::write_csv(&path("pushforward_error.csv"), "r\\n", &er.orders, &report.curves.pushforward)?;
    ErrorCurve::write_csv(&path("composed_error.csv"), "p\\n", &er.orders, &report.curves.composed)?;
    ErrorCurve::write_csv(&path("updated_error.csv"), "p\\n", &er.orders, &report.curves.updated)?;
    let json = path("report.json");
    std::fs::write(&json, report.to_json()?).map_err(|e| Error::io(&json, e))?;
    let timing = path("timing.json");
    let text = serde_json::to_string_pretty(&report.timing)? + "\n";
    std::fs::write(&timing, text).map_err(|e| Error::io(&timing, e))?;
    Ok(OUTPUT_FILES.iter().map(|f| path(f)).collect())
}
