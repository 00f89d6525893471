//! Per-iteration solver records.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceKind {
    Sdr,
    Socp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    /// Relaxed objective (SDR) or exact power (SOCP), watts.
    pub objective_w: f64,
    pub first_time_s: f64,
    pub second_time_s: f64,
    pub status: String,
    pub recovery_violation: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    pub kind: TraceKind,
    pub rows: Vec<TraceRow>,
    pub converged: bool,
    /// Outer iterations until the stopping rule fired.
    pub iterations: usize,
    /// SDR only: the final relaxed objective, watts.
    pub relaxed_objective_w: Option<f64>,
}

impl SolveTrace {
    pub fn new(kind: TraceKind) -> Self {
        SolveTrace {
            kind,
            rows: Vec::new(),
            converged: false,
            iterations: 0,
            relaxed_objective_w: None,
        }
    }

    pub fn push(&mut self, row: TraceRow) {
        self.rows.push(row);
    }

    pub fn objectives(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.objective_w).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        match self.kind {
            TraceKind::Sdr => {
                w.write_record(["iter", "relaxed_objective_w", "p2_1_time_s", "p2_2_time_s", "status"])?;
                for r in &self.rows {
                    w.write_record([
                        r.iter.to_string(),
                        r.objective_w.to_string(),
                        r.first_time_s.to_string(),
                        r.second_time_s.to_string(),
                        r.status.clone(),
                    ])?;
                }
            }
            TraceKind::Socp => {
                w.write_record(["iter", "power_w", "p3_1_time_s", "p3_2_time_s", "recovery_violation_flag"])?;
                for r in &self.rows {
                    w.write_record([
                        r.iter.to_string(),
                        r.objective_w.to_string(),
                        r.first_time_s.to_string(),
                        r.second_time_s.to_string(),
                        r.recovery_violation.to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}
