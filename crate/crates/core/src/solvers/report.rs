use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::SolverConfig;
use crate::error::{Error, Result};
use crate::objective::{DualState, PrimalState};
use crate::vecops::IndexSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Diht,
    Sdiht,
    Iht,
    Htp,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [SolverKind::Diht, SolverKind::Sdiht, SolverKind::Iht, SolverKind::Htp];

    pub fn id(&self) -> &'static str {
        match self {
            SolverKind::Diht => "diht",
            SolverKind::Sdiht => "sdiht",
            SolverKind::Iht => "iht",
            SolverKind::Htp => "htp",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        SolverKind::ALL.into_iter().find(|s| s.id() == id)
    }

    pub fn is_dual(&self) -> bool {
        matches!(self, SolverKind::Diht | SolverKind::Sdiht)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIters,
    GapTolerance,
    RelativePrimalChange,
    TargetReached,
    /// The support chosen by a pursuit step repeated.
    SupportStable,
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: usize,
    pub seconds: f64,
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    pub support: IndexSet,
    /// `‖α^(t) - α_ref‖` when a reference dual point was supplied.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alpha_dist: Option<f64>,
}

#[derive(Serialize)]
struct CsvRow {
    t: usize,
    seconds: f64,
    primal: f64,
    dual: f64,
    gap: f64,
    nnz: usize,
    support_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub solver: SolverKind,
    pub config: SolverConfig,
    pub seed: u64,
    pub rows: Vec<TraceRow>,
    pub primal_state: PrimalState,
    pub dual_state: DualState,
    /// Number of iterations performed.
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub diverged: bool,
    /// Solver loop wall time in seconds.
    pub seconds: f64,
    pub metadata: BTreeMap<String, String>,
}

impl RunReport {
    pub fn last_row(&self) -> &TraceRow {
        self.rows.last().expect("reports always hold the t = 0 row")
    }

    pub fn final_primal(&self) -> f64 {
        self.last_row().primal
    }

    pub fn final_dual(&self) -> f64 {
        self.last_row().dual
    }

    pub fn final_gap(&self) -> f64 {
        self.last_row().gap
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        for row in &self.rows {
            writer
                .serialize(CsvRow {
                    t: row.t,
                    seconds: row.seconds,
                    primal: row.primal,
                    dual: row.dual,
                    gap: row.gap,
                    nnz: row.support.len(),
                    support_hash: format!("{:016x}", row.support.fingerprint()),
                })
                .map_err(csv_error)?;
        }
        writer.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("reports serialize");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io("<csv>", io),
        other => Error::Config(format!("csv serialization failed: {other:?}")),
    }
}
