//! Output artifacts. JSON is canonical; every artifact carries the schema
//! version, the tool that wrote it and the fully resolved run config, so a
//! file alone is enough to reproduce it. CSV writers are flat projections.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use steinhaus_core::energy::ConcentrationResult;
use steinhaus_core::montecarlo::{gaussian_targets, HISTOGRAM_BINS, HISTOGRAM_MAX};
use steinhaus_core::{EnergyReport, HarperRow, SampleSummary};

use crate::LabError;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL: &str = "rmf-lab";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub schema_version: u32,
    pub tool: String,
    pub tool_version: String,
    pub command: String,
}

impl Header {
    pub fn new(command: &str) -> Self {
        Header {
            schema_version: SCHEMA_VERSION,
            tool: TOOL.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            command: command.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub n: u32,
    pub set: String,
    pub set_size: usize,
    pub rho: f64,
    pub mode: String,
    pub reps: u32,
    pub seed: u64,
    pub phases: String,
    pub threads: usize,
    pub format: String,
    pub out: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Histogram {
    pub bins: usize,
    pub range: [f64; 2],
    pub counts: Vec<u64>,
    pub overflow: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateArtifact {
    #[serde(flatten)]
    pub header: Header,
    pub plan: SimulateConfig,
    pub mean_re: f64,
    pub mean_im: f64,
    pub m1: f64,
    pub m2: f64,
    pub pseudo_m2_re: f64,
    pub pseudo_m2_im: f64,
    pub m4: f64,
    pub se_mean_re: f64,
    pub se_mean_im: f64,
    pub se_m1: f64,
    pub se_m2: f64,
    pub se_pseudo_m2_re: f64,
    pub se_pseudo_m2_im: f64,
    pub se_m4: f64,
    pub ks_re: f64,
    pub ks_im: f64,
    pub ks_reject_1pct: bool,
    pub degenerate: bool,
    pub histogram: Histogram,
    pub runtime_seconds: Option<f64>,
}

impl SimulateArtifact {
    pub fn new(plan: SimulateConfig, s: &SampleSummary, runtime_seconds: Option<f64>) -> Self {
        SimulateArtifact {
            header: Header::new("simulate"),
            plan,
            mean_re: s.mean.re,
            mean_im: s.mean.im,
            m1: s.m1,
            m2: s.m2,
            pseudo_m2_re: s.pseudo_m2.re,
            pseudo_m2_im: s.pseudo_m2.im,
            m4: s.m4,
            se_mean_re: s.se_mean_re,
            se_mean_im: s.se_mean_im,
            se_m1: s.se_m1,
            se_m2: s.se_m2,
            se_pseudo_m2_re: s.se_pseudo_m2_re,
            se_pseudo_m2_im: s.se_pseudo_m2_im,
            se_m4: s.se_m4,
            ks_re: s.ks_re,
            ks_im: s.ks_im,
            ks_reject_1pct: s.ks_reject_1pct,
            degenerate: s.degenerate,
            histogram: Histogram {
                bins: HISTOGRAM_BINS,
                range: [0.0, HISTOGRAM_MAX],
                counts: s.histogram.clone(),
                overflow: s.histogram_overflow,
            },
            runtime_seconds,
        }
    }

    pub fn pseudo_m2_abs(&self) -> f64 {
        self.pseudo_m2_re.hypot(self.pseudo_m2_im)
    }

    /// Real-valued statistics as (name, value), in output order.
    pub fn statistics(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("mean_re", self.mean_re),
            ("mean_im", self.mean_im),
            ("m1", self.m1),
            ("m2", self.m2),
            ("pseudo_m2_re", self.pseudo_m2_re),
            ("pseudo_m2_im", self.pseudo_m2_im),
            ("m4", self.m4),
            ("se_mean_re", self.se_mean_re),
            ("se_mean_im", self.se_mean_im),
            ("se_m1", self.se_m1),
            ("se_m2", self.se_m2),
            ("se_pseudo_m2_re", self.se_pseudo_m2_re),
            ("se_pseudo_m2_im", self.se_pseudo_m2_im),
            ("se_m4", self.se_m4),
            ("ks_re", self.ks_re),
            ("ks_im", self.ks_im),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarperConfig {
    pub x_grid: Vec<u32>,
    pub reps: u32,
    pub seed: u64,
    pub phases: String,
    pub threads: usize,
    pub format: String,
    pub out: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarperPoint {
    pub x: u32,
    pub ratio: f64,
    pub se: f64,
}

impl From<HarperRow> for HarperPoint {
    fn from(r: HarperRow) -> Self {
        HarperPoint { x: r.x, ratio: r.ratio, se: r.se }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarperArtifact {
    #[serde(flatten)]
    pub header: Header,
    pub plan: HarperConfig,
    pub rows: Vec<HarperPoint>,
    pub runtime_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyConfig {
    pub n: u32,
    pub mode: String,
    pub exclude_swaps: bool,
    pub weights: Option<String>,
    pub cap: u32,
    pub threads: usize,
    pub out: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyArtifact {
    #[serde(flatten)]
    pub header: Header,
    pub plan: EnergyConfig,
    pub exact_count: u64,
    pub weighted_sum: Option<f64>,
    pub normalizer: Option<f64>,
    pub ratio: Option<f64>,
    pub runtime_seconds: Option<f64>,
}

impl EnergyArtifact {
    pub fn new(plan: EnergyConfig, r: &EnergyReport, runtime_seconds: Option<f64>) -> Self {
        EnergyArtifact {
            header: Header::new("energy"),
            plan,
            exact_count: r.exact_count,
            weighted_sum: r.weighted_sum,
            normalizer: r.normalizer,
            ratio: r.ratio,
            runtime_seconds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrationConfig {
    pub n_grid: Vec<u32>,
    pub rho: f64,
    pub reps: u32,
    pub seed: u64,
    pub mode: String,
    pub exclude_swaps: bool,
    pub cap: u32,
    pub threads: usize,
    pub format: String,
    pub out: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrationPoint {
    #[serde(rename = "N")]
    pub n: u32,
    pub mean_sq: f64,
    pub se: f64,
    pub target: f64,
    /// Absent when the target is zero.
    pub ratio: Option<f64>,
}

impl From<&ConcentrationResult> for ConcentrationPoint {
    fn from(r: &ConcentrationResult) -> Self {
        ConcentrationPoint {
            n: r.limit,
            mean_sq: r.mean_sq,
            se: r.se,
            target: r.target,
            ratio: r.ratio.is_finite().then_some(r.ratio),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationArtifact {
    #[serde(flatten)]
    pub header: Header,
    pub plan: ConcentrationConfig,
    pub rows: Vec<ConcentrationPoint>,
    /// Fitted growth exponent of `mean_sq` in `N`; absent with fewer than
    /// three grid points or a zero second moment.
    pub exponent: Option<f64>,
    pub runtime_seconds: Option<f64>,
}

/// Canonical JSON text: pretty-printed with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String, LabError> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| LabError::Internal(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), LabError> {
    fs::write(path, text).map_err(|e| LabError::io(path, e))
}

fn csv_text(write: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> Result<String, LabError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    write(&mut w).map_err(|e| LabError::Internal(format!("csv: {e}")))?;
    let bytes = w.into_inner().map_err(|e| LabError::Internal(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| LabError::Internal(e.to_string()))
}

pub fn simulate_csv(a: &SimulateArtifact) -> Result<String, LabError> {
    csv_text(|w| {
        w.write_record(["statistic", "value"])?;
        for (name, value) in a.statistics() {
            w.write_record([name, &value.to_string()])?;
        }
        w.write_record(["degenerate", &a.degenerate.to_string()])?;
        w.write_record(["ks_reject_1pct", &a.ks_reject_1pct.to_string()])?;
        Ok(())
    })
}

pub fn harper_csv(rows: &[HarperPoint]) -> Result<String, LabError> {
    csv_text(|w| {
        w.write_record(["x", "ratio", "se"])?;
        for r in rows {
            w.write_record([r.x.to_string(), r.ratio.to_string(), r.se.to_string()])?;
        }
        Ok(())
    })
}

pub fn concentration_csv(rows: &[ConcentrationPoint]) -> Result<String, LabError> {
    csv_text(|w| {
        w.write_record(["N", "mean_sq", "se", "target", "ratio"])?;
        for r in rows {
            let ratio = r.ratio.map(|x| x.to_string()).unwrap_or_default();
            w.write_record([
                r.n.to_string(),
                r.mean_sq.to_string(),
                r.se.to_string(),
                r.target.to_string(),
                ratio,
            ])?;
        }
        Ok(())
    })
}

/// Reads a `simulate` artifact, rejecting anything else with a schema error
/// that names the file.
pub fn read_simulate(path: &Path) -> Result<SimulateArtifact, LabError> {
    let schema = |message: String| LabError::Schema { path: path.to_path_buf(), message };
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| schema(format!("not a JSON artifact: {e}")))?;
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        Some(v) => return Err(schema(format!("schema version {v}, expected {SCHEMA_VERSION}"))),
        None => return Err(schema("missing schema_version".into())),
    }
    match value.get("command").and_then(|v| v.as_str()) {
        Some("simulate") => {}
        Some(other) => return Err(schema(format!("`{other}` artifact, expected a simulate artifact"))),
        None => return Err(schema("missing command".into())),
    }
    serde_json::from_value(value).map_err(|e| schema(format!("malformed simulate artifact: {e}")))
}

pub const REPORT_COLUMNS: [&str; 15] = [
    "source", "mode", "n", "rho", "set", "set_size", "reps", "seed", "m2", "se_m2", "m4", "se_m4",
    "pseudo_m2_abs", "ks_re", "ks_im",
];

/// Side-by-side comparison of simulate runs plus a `CN(0,1)` target row.
pub fn report_csv(runs: &[(PathBuf, SimulateArtifact)]) -> Result<String, LabError> {
    csv_text(|w| {
        w.write_record(REPORT_COLUMNS)?;
        for (path, a) in runs {
            let p = &a.plan;
            w.write_record([
                path.display().to_string(),
                p.mode.clone(),
                p.n.to_string(),
                p.rho.to_string(),
                p.set.clone(),
                p.set_size.to_string(),
                p.reps.to_string(),
                p.seed.to_string(),
                a.m2.to_string(),
                a.se_m2.to_string(),
                a.m4.to_string(),
                a.se_m4.to_string(),
                a.pseudo_m2_abs().to_string(),
                a.ks_re.to_string(),
                a.ks_im.to_string(),
            ])?;
        }
        let g = gaussian_targets();
        w.write_record([
            "target".to_string(),
            "CN(0,1)".to_string(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            g.m2.to_string(),
            String::new(),
            g.m4.to_string(),
            String::new(),
            g.pseudo_m2.norm().to_string(),
            "0".to_string(),
            "0".to_string(),
        ])?;
        Ok(())
    })
}

pub fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), LabError> {
    match out {
        Some(path) => write_text(path, text),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| LabError::io("<stdout>", e)),
    }
}
