//! Episode metrics, batch aggregation, and result persistence.
//!
//! Per-episode time series go to CSV (one row per control step), per-episode
//! summaries to a JSON-lines file for plotting, the batch table to a summary
//! CSV, and the exact configuration plus seed to a metadata file so any run
//! can be reproduced from its output directory alone.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::cost::Command;
use crate::sim_harness::Wrench;
use crate::srbd_model::State;
use crate::{Error, Result};

/// Everything logged at one control step.
#[derive(Debug, Clone, Copy)]
pub struct StepRecord {
    pub t: f64,
    pub state: State,
    pub command: Command,
    /// Step frequency the controller chose, Hz.
    pub freq_hz: f64,
    /// Realized stage cost of the applied input.
    pub stage_cost: f64,
    pub solve_ms: f64,
    pub wrench: Wrench,
}

/// Full trace of one episode plus its termination status.
#[derive(Debug, Clone)]
pub struct EpisodeMetrics {
    pub records: Vec<StepRecord>,
    pub fall: bool,
    pub fall_time: Option<f64>,
    pub episode_seed: u64,
    /// Hash of the episode's scheduled disturbance trace over the full
    /// duration, fall or not; paired variants must agree on it.
    pub(crate) scheduled_disturbance_hash: u64,
}

impl EpisodeMetrics {
    pub(crate) fn new(episode_seed: u64, scheduled_disturbance_hash: u64) -> Self {
        Self {
            records: Vec::new(),
            fall: false,
            fall_time: None,
            episode_seed,
            scheduled_disturbance_hash,
        }
    }

    pub(crate) fn push(&mut self, record: StepRecord) {
        self.records.push(record);
    }

    pub(crate) fn mark_fall(&mut self, t: f64) {
        self.fall = true;
        self.fall_time = Some(t);
    }

    pub fn success(&self) -> bool {
        !self.fall
    }

    /// Mean 3-D velocity tracking error over the logged steps.
    pub fn mean_velocity_error(&self) -> f64 {
        self.mean_velocity_error_after(0.0)
    }

    /// Mean velocity tracking error over steps with `t >= t0`.
    pub fn mean_velocity_error_after(&self, t0: f64) -> f64 {
        let mut total = 0.0;
        let mut count = 0usize;
        for r in self.records.iter().filter(|r| r.t >= t0) {
            total += (r.state.v_c - r.command.velocity).norm();
            count += 1;
        }
        if count == 0 {
            0.0
        } else {
            total / count as f64
        }
    }

    /// Per-step mean of the realized stage cost (partial episodes average
    /// over the steps they actually ran).
    pub fn mean_stage_cost(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().map(|r| r.stage_cost).sum::<f64>() / self.records.len() as f64
    }

    pub fn mean_solve_ms(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().map(|r| r.solve_ms).sum::<f64>() / self.records.len() as f64
    }

    /// Hash of the scheduled disturbance realization; equal hashes mean the
    /// episode saw (or would have seen) the identical wrench trace.
    pub fn disturbance_hash(&self) -> u64 {
        self.scheduled_disturbance_hash
    }

    /// CSV with one row per control step: time, the 12 state components, the
    /// commanded velocity, the chosen frequency, the realized stage cost,
    /// the solve time, and the applied wrench.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(
            "t,p_x,p_y,p_z,v_x,v_y,v_z,roll,pitch,yaw,omega_x,omega_y,omega_z,\
             cmd_vx,cmd_vy,cmd_vz,theta1_hz,stage_cost,solve_ms,\
             dist_fx,dist_fy,dist_fz,dist_tx,dist_ty,dist_tz\n",
        );
        for r in &self.records {
            let s = r.state.as_array();
            write!(out, "{}", r.t).unwrap();
            for v in s {
                write!(out, ",{v}").unwrap();
            }
            write!(
                out,
                ",{},{},{},{},{},{}",
                r.command.velocity.x,
                r.command.velocity.y,
                r.command.velocity.z,
                r.freq_hz,
                r.stage_cost,
                r.solve_ms
            )
            .unwrap();
            for axis in 0..3 {
                write!(out, ",{}", r.wrench.force[axis]).unwrap();
            }
            for axis in 0..3 {
                write!(out, ",{}", r.wrench.torque[axis]).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Per-episode summary line for the JSON-lines output.
#[derive(Debug, Clone, Serialize)]
pub struct EpisodeSummary {
    pub episode: usize,
    pub seed: u64,
    pub variant: String,
    pub steps: usize,
    pub fall: bool,
    pub fall_time: Option<f64>,
    pub mean_stage_cost: f64,
    pub mean_velocity_error: f64,
    pub mean_solve_ms: f64,
}

/// Aggregate over one variant's episodes.
#[derive(Debug, Clone)]
pub struct VariantSummary {
    pub name: String,
    pub mean_cost: f64,
    pub success_rate: f64,
    pub mean_solve_ms: f64,
    pub episodes: Vec<EpisodeMetrics>,
}

impl VariantSummary {
    pub(crate) fn aggregate(name: String, episodes: Vec<EpisodeMetrics>) -> Self {
        let n = episodes.len().max(1) as f64;
        let mean_cost = episodes.iter().map(|e| e.mean_stage_cost()).sum::<f64>() / n;
        let successes = episodes.iter().filter(|e| e.success()).count();
        let mean_solve_ms = episodes.iter().map(|e| e.mean_solve_ms()).sum::<f64>() / n;
        Self {
            name,
            mean_cost,
            success_rate: 100.0 * successes as f64 / n,
            mean_solve_ms,
            episodes,
        }
    }
}

/// FNV-1a over the bit patterns of a wrench sequence.
pub(crate) fn hash_wrench_trace<I: Iterator<Item = Wrench>>(trace: I) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |v: f64| {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01B3);
        }
    };
    for w in trace {
        for axis in 0..3 {
            eat(w.force[axis]);
            eat(w.torque[axis]);
        }
    }
    h
}

/// Batch result: one row per controller variant.
#[derive(Debug, Clone)]
pub struct BatchSummary {
    pub rows: Vec<VariantSummary>,
}

impl BatchSummary {
    pub fn row(&self, name: &str) -> Option<&VariantSummary> {
        self.rows.iter().find(|r| r.name == name)
    }

    /// Table with the batch statistics per variant.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("description,mean_cost,success_rate_percent,mean_solve_ms\n");
        for row in &self.rows {
            writeln!(
                out,
                "{},{},{},{}",
                row.name, row.mean_cost, row.success_rate, row.mean_solve_ms
            )
            .unwrap();
        }
        out
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Persists a batch run: per-episode CSVs, a JSON-lines summary, the batch
/// table, and a metadata file with the exact configuration for reproduction.
pub fn emit_results(
    summary: &BatchSummary,
    config_toml: &str,
    out_dir: impl AsRef<Path>,
) -> Result<()> {
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut jsonl = String::new();
    for variant in &summary.rows {
        for (i, ep) in variant.episodes.iter().enumerate() {
            let csv_name = if summary.rows.len() == 1 {
                format!("episode_{i:03}.csv")
            } else {
                format!("{}_episode_{i:03}.csv", variant.name.replace([' ', '/'], "_"))
            };
            write_file(&dir.join(&csv_name), &ep.to_csv())?;

            let line = EpisodeSummary {
                episode: i,
                seed: ep.episode_seed,
                variant: variant.name.clone(),
                steps: ep.records.len(),
                fall: ep.fall,
                fall_time: ep.fall_time,
                mean_stage_cost: ep.mean_stage_cost(),
                mean_velocity_error: ep.mean_velocity_error(),
                mean_solve_ms: ep.mean_solve_ms(),
            };
            jsonl.push_str(&serde_json::to_string(&line).expect("summary serializes"));
            jsonl.push('\n');
        }
    }
    write_file(&dir.join("episodes.jsonl"), &jsonl)?;
    write_file(&dir.join("summary.csv"), &summary.to_csv())?;
    write_file(&dir.join("metadata.toml"), config_toml)?;
    Ok(())
}
