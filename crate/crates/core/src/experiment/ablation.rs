//! Wall-clock comparison of the two optimizers on identical synthetic fusion
//! problems, reported as FW/IP time ratios per (p, tolerance) cell.
//!
//! Both optimizers run with locality disabled for parity (one shared weight
//! vector each) and are measured to the same objective tolerance: each
//! method runs once to exhaustion with an execution trace, the best hinge
//! value reached by either defines the problem's reference optimum, and a
//! cell's time is the first moment the method's hinge entered the relative
//! tolerance band around that optimum. Cells where a method never enters
//! the band are marked unconverged instead of reporting a meaningless
//! ratio. (The duality-gap and objective-change stopping rules the
//! optimizers use in production either fire immediately or never on
//! piecewise-linear objectives, so they cannot anchor a fair clock.)

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::{
    optimize_frank_wolfe_traced, optimize_interior_point_traced, OptimizerConfig, TracePoint,
    P_GRID,
};
use crate::scorespace::{ScoreMatrix, Stage};

pub const ABLATION_TOLERANCES: [f64; 3] = [1e-2, 1e-3, 1e-4];
pub const ABLATION_P_ROWS: [f64; 4] = [32.0 / 31.0, 8.0 / 7.0, 2.0, 100.0];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationConfig {
    pub p_values: Vec<f64>,
    pub tolerances: Vec<f64>,
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub ip_max_epochs: usize,
    pub fw_max_iters: usize,
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self {
            p_values: ABLATION_P_ROWS.to_vec(),
            tolerances: ABLATION_TOLERANCES.to_vec(),
            n: 500,
            d: 4,
            seed: 42,
            ip_max_epochs: 2000,
            fw_max_iters: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AblationCell {
    pub p: f64,
    pub tolerance: f64,
    /// Wall-clock seconds until the hinge entered the tolerance band
    /// (NaN when it never did).
    pub ip_seconds: f64,
    pub fw_seconds: f64,
    pub ip_converged: bool,
    pub fw_converged: bool,
    /// FW/IP wall-clock ratio; None when either side never reached the band.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationTable {
    pub p_values: Vec<f64>,
    pub tolerances: Vec<f64>,
    /// Row-major: cells[p_index][tolerance_index].
    pub cells: Vec<Vec<AblationCell>>,
}

impl AblationTable {
    pub fn cell(&self, p: f64, tolerance: f64) -> Option<&AblationCell> {
        let pi = self.p_values.iter().position(|&v| v == p)?;
        let ti = self.tolerances.iter().position(|&v| v == tolerance)?;
        Some(&self.cells[pi][ti])
    }

    /// CSV in the ablation layout: one row per p, one column per tolerance,
    /// cells carrying the FW/IP multiplier.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p");
        for t in &self.tolerances {
            write!(out, ",tol={t:e}").unwrap();
        }
        out.push('\n');
        for (pi, &p) in self.p_values.iter().enumerate() {
            write!(out, "{}", p_label(p)).unwrap();
            for cell in &self.cells[pi] {
                match cell.ratio {
                    Some(r) => write!(out, ",{r:.3}").unwrap(),
                    None => out.push_str(",unconverged"),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Human label for grid exponents (the small fractions print as fractions).
fn p_label(p: f64) -> String {
    for (num, den) in [(32, 31), (16, 15), (8, 7), (4, 3)] {
        if (p - num as f64 / den as f64).abs() < 1e-12 {
            return format!("{num}/{den}");
        }
    }
    if p.fract() == 0.0 {
        format!("{}", p as i64)
    } else {
        format!("{p}")
    }
}

fn close_to_any(value: f64, pool: &[f64]) -> bool {
    pool.iter().any(|&g| (value - g).abs() <= 1e-12)
}

/// Synthetic fusion problem in the trim-normalized score space the real
/// pipeline feeds the optimizers: columns of unequal quality whose fused
/// margins straddle the unit hinge kink, so neither optimizer faces a
/// trivially flat or trivially linear objective.
fn synthetic_problem(n: usize, d: usize, seed: u64) -> Result<(ScoreMatrix, DMatrix<f64>, Vec<i8>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || {
        let u1: f64 = rng.random_range(1e-12..1.0);
        let u2: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        (-2.0 * u1.ln()).sqrt() * u2.cos()
    };
    let mut values = DMatrix::zeros(n, d);
    for i in 0..n {
        for j in 0..d {
            let mean = 0.55 - 0.35 * (j as f64 / (d.max(2) - 1) as f64);
            values[(i, j)] = (mean + 0.25 * normal()).clamp(0.001, 0.999);
        }
    }
    let scores = ScoreMatrix::new(
        values,
        (0..d).map(|j| format!("l{j}")).collect(),
        Stage::Normalized,
    )?;
    let x = DMatrix::from_fn(n, 2, |_, _| normal());
    Ok((scores, x, vec![1i8; n]))
}

/// First trace moment at which the hinge enters the tolerance band.
fn crossing_time(trace: &[TracePoint], target: f64) -> Option<f64> {
    trace
        .iter()
        .find(|point| point.hinge <= target)
        .map(|point| point.seconds.max(1e-12))
}

pub fn timing_ablation(config: &AblationConfig) -> Result<AblationTable> {
    if config.p_values.is_empty() || config.tolerances.is_empty() {
        return Err(Error::InvalidInput("empty ablation grid".into()));
    }
    for &p in &config.p_values {
        if !close_to_any(p, &P_GRID) {
            return Err(Error::InvalidInput(format!("p = {p} not in the exponent grid")));
        }
    }
    for &t in &config.tolerances {
        if !close_to_any(t, &ABLATION_TOLERANCES) {
            return Err(Error::InvalidInput(format!(
                "tolerance {t} not in {ABLATION_TOLERANCES:?}"
            )));
        }
    }
    if config.n < 2 || config.d < 1 {
        return Err(Error::InvalidInput("ablation needs n >= 2, d >= 1".into()));
    }

    let (scores, features, labels) = synthetic_problem(config.n, config.d, config.seed)?;

    let mut cells = Vec::with_capacity(config.p_values.len());
    for &p in &config.p_values {
        // one exhaustive traced run per optimizer; every tolerance column is
        // read off the same pair of traces
        let ip_config = OptimizerConfig {
            p_base: p,
            locality_enabled: false,
            max_epochs: config.ip_max_epochs,
            tolerance: 1e-300,
            ..Default::default()
        };
        let (_, _, ip_trace) =
            optimize_interior_point_traced(&scores, &features, &labels, &ip_config)?;
        let fw_config = OptimizerConfig {
            p_base: p,
            locality_enabled: false,
            max_epochs: config.fw_max_iters,
            tolerance: 1e-300,
            ..Default::default()
        };
        let (_, _, fw_trace) = optimize_frank_wolfe_traced(&scores, &labels, p, &fw_config)?;

        let best_hinge = ip_trace
            .iter()
            .chain(fw_trace.iter())
            .map(|t| t.hinge)
            .fold(f64::INFINITY, f64::min);

        let mut row = Vec::with_capacity(config.tolerances.len());
        for &tolerance in &config.tolerances {
            let target = best_hinge + tolerance * best_hinge.abs().max(1.0);
            let ip_time = crossing_time(&ip_trace, target);
            let fw_time = crossing_time(&fw_trace, target);
            let ratio = match (ip_time, fw_time) {
                (Some(ip), Some(fw)) => Some(fw / ip),
                _ => None,
            };
            row.push(AblationCell {
                p,
                tolerance,
                ip_seconds: ip_time.unwrap_or(f64::NAN),
                fw_seconds: fw_time.unwrap_or(f64::NAN),
                ip_converged: ip_time.is_some(),
                fw_converged: fw_time.is_some(),
                ratio,
            });
        }
        cells.push(row);
    }

    Ok(AblationTable {
        p_values: config.p_values.clone(),
        tolerances: config.tolerances.clone(),
        cells,
    })
}
