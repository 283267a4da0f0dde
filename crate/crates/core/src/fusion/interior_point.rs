//! First-order interior-point descent on the hinge loss with a log-barrier
//! enforcing the lp-ball constraint.
//!
//! Each epoch sweeps the samples once: hinge subgradient plus barrier
//! gradient, a capped fixed-rate update, and a radial pull-back whenever the
//! step leaves the open ball. The barrier parameter decays geometrically at
//! epoch boundaries. With locality enabled every sample owns an independent
//! weight row (rows update in parallel); with locality disabled one shared
//! vector is updated through the same per-sample sweep, reproducing the
//! global method.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fusion::locality::LocalityIndex;
use crate::fusion::objective::lp_norm;
use crate::fusion::{LocalWeightSet, OptimizeReport, OptimizerConfig, TracePoint};
use crate::scorespace::ScoreMatrix;
use std::time::Instant;

/// Iterates are kept at lp norm <= 1 - this margin so the barrier stays
/// finite; the printed initialization and projection sit exactly on the
/// boundary, where the barrier is undefined.
const INTERIOR_MARGIN: f64 = 1e-6;

/// Per-update step cap. Near the boundary the barrier gradient scales like
/// mu / margin and a raw fixed-rate step would catapult the weight across
/// the ball; hinge gradients alone never come close to this bound.
const STEP_CAP: f64 = 0.1;

/// Tolerated per-row constraint violation after an epoch.
const FEASIBILITY_SLACK: f64 = 1e-9;

/// |x|^e with a fast path for integer exponents.
#[inline(always)]
fn abs_pow(x: f64, e: f64, e_int: Option<i32>) -> f64 {
    match e_int {
        Some(k) => x.abs().powi(k),
        None => x.abs().powf(e),
    }
}

#[inline(always)]
fn int_exponent(e: f64) -> Option<i32> {
    if e.fract() == 0.0 && e > 0.0 && e <= 512.0 {
        Some(e as i32)
    } else {
        None
    }
}

/// Per-row optimizer state kept flat and allocation-free across epochs.
struct RowState {
    /// Current weights, length d.
    w: Vec<f64>,
    /// Sum of |w_j|^p carried between epochs (recomputed after each update).
    pth: f64,
}

/// One sample's update: hinge + barrier gradient step (norm-capped), then a
/// radial pull-back into the open ball. Returns the hinge + barrier
/// objective contribution at the new point.
#[inline]
#[allow(clippy::too_many_arguments)]
fn update_row(
    state: &mut RowState,
    s: &[f64],
    y: i8,
    p: f64,
    p_int: Option<i32>,
    pm1: f64,
    pm1_int: Option<i32>,
    mu: f64,
    lr: f64,
) -> f64 {
    let d = state.w.len();
    let yf = f64::from(y);

    // hinge subgradient: -y s when the margin is strictly violated
    let mut dot = 0.0;
    for j in 0..d {
        dot += s[j] * state.w[j];
    }
    let active = 1.0 - yf * dot > 0.0;

    // barrier gradient scale from the carried pth power
    let slack = 1.0 - state.pth;
    debug_assert!(slack > 0.0);
    let barrier_scale = mu * p / slack;

    // capped gradient step
    let mut step = [0.0f64; 8];
    let mut step_sq = 0.0;
    for j in 0..d {
        let hinge_g = if active { -yf * s[j] } else { 0.0 };
        let barrier_g =
            barrier_scale * abs_pow(state.w[j], pm1, pm1_int) * state.w[j].signum();
        let g = lr * (hinge_g + barrier_g);
        step[j] = g;
        step_sq += g * g;
    }
    let scale = if step_sq > STEP_CAP * STEP_CAP {
        STEP_CAP / step_sq.sqrt()
    } else {
        1.0
    };
    for j in 0..d {
        state.w[j] -= scale * step[j];
    }

    // recompute the pth power; pull back radially if the step left the ball
    let mut pth = 0.0;
    for j in 0..d {
        pth += abs_pow(state.w[j], p, p_int);
    }
    if !pth.is_finite() || pth > interior_pth(p) {
        let norm = pth.powf(1.0 / p);
        let target = if norm.is_finite() && norm > 0.0 {
            (1.0 - INTERIOR_MARGIN) / norm
        } else {
            0.0
        };
        for j in 0..d {
            state.w[j] *= target;
        }
        pth = 0.0;
        for j in 0..d {
            pth += abs_pow(state.w[j], p, p_int);
        }
    }
    state.pth = pth;

    // objective contribution at the new point
    let mut new_dot = 0.0;
    for j in 0..d {
        new_dot += s[j] * state.w[j];
    }
    let hinge = (1.0 - yf * new_dot).max(0.0);
    hinge - mu * (1.0 - pth).ln()
}

/// pth-power radius of the interior shell.
#[inline(always)]
fn interior_pth(p: f64) -> f64 {
    (1.0 - INTERIOR_MARGIN).powf(p)
}

/// Uniform direction at half radius: strictly interior, symmetric across
/// learners.
fn initial_row(d: usize, p: f64, p_int: Option<i32>) -> RowState {
    let ones = DVector::from_element(d, 1.0);
    let value = 0.5 / lp_norm(&ones, p);
    let w = vec![value; d];
    let pth = d as f64 * abs_pow(value, p, p_int);
    RowState { w, pth }
}

pub fn optimize_interior_point(
    scores: &ScoreMatrix,
    features: &DMatrix<f64>,
    labels: &[i8],
    config: &OptimizerConfig,
) -> Result<(LocalWeightSet, OptimizeReport)> {
    let (set, report, _) = optimize_interior_point_inner(scores, features, labels, config, false)?;
    Ok((set, report))
}

/// Same optimizer, additionally recording (cumulative seconds, total hinge)
/// after every epoch for timing instrumentation.
pub fn optimize_interior_point_traced(
    scores: &ScoreMatrix,
    features: &DMatrix<f64>,
    labels: &[i8],
    config: &OptimizerConfig,
) -> Result<(LocalWeightSet, OptimizeReport, Vec<TracePoint>)> {
    optimize_interior_point_inner(scores, features, labels, config, true)
}

fn optimize_interior_point_inner(
    scores: &ScoreMatrix,
    features: &DMatrix<f64>,
    labels: &[i8],
    config: &OptimizerConfig,
    traced: bool,
) -> Result<(LocalWeightSet, OptimizeReport, Vec<TracePoint>)> {
    config.validate()?;
    crate::fusion::check_standardized(scores, "weight optimization")?;
    let n = scores.nrows();
    let d = scores.ncols();
    if d > 8 {
        return Err(Error::InvalidInput(format!(
            "optimizer supports up to 8 learners, got {d}"
        )));
    }
    if features.nrows() != n || labels.len() != n {
        return Err(Error::InvalidInput(format!(
            "misaligned inputs: {} score rows, {} feature rows, {} labels",
            n,
            features.nrows(),
            labels.len()
        )));
    }
    if labels.iter().any(|&y| y != 1 && y != -1) {
        return Err(Error::InvalidInput("labels must be +1 or -1".into()));
    }

    // flat row-major copy of the score rows for cache-friendly sweeps
    let score_rows: Vec<f64> = (0..n)
        .flat_map(|i| (0..d).map(move |j| scores.values()[(i, j)]))
        .collect();

    if config.locality_enabled {
        optimize_local(&score_rows, features, labels, config, n, d, traced)
    } else {
        optimize_shared(&score_rows, features, labels, config, n, d, traced)
    }
}

#[allow(clippy::too_many_arguments)]
fn optimize_local(
    score_rows: &[f64],
    features: &DMatrix<f64>,
    labels: &[i8],
    config: &OptimizerConfig,
    n: usize,
    d: usize,
    traced: bool,
) -> Result<(LocalWeightSet, OptimizeReport, Vec<TracePoint>)> {
    let index = LocalityIndex::fit(features, config.locality_k)?;
    let local_p: Vec<f64> = (0..n)
        .map(|i| index.exponent_for_row(i, config.p_base))
        .collect();
    let p_int: Vec<Option<i32>> = local_p.iter().map(|&p| int_exponent(p)).collect();
    let pm1_int: Vec<Option<i32>> = local_p.iter().map(|&p| int_exponent(p - 1.0)).collect();

    let mut rows: Vec<RowState> = local_p
        .iter()
        .map(|&p| initial_row(d, p, int_exponent(p)))
        .collect();
    let mut mu = config.mu0;
    let mut prev_objective = f64::INFINITY;
    let mut report = OptimizeReport {
        final_objective: f64::INFINITY,
        epochs_used: 0,
        max_constraint_violation: 0.0,
        converged: false,
    };
    let mut trace = Vec::new();
    let clock = Instant::now();

    for epoch in 1..=config.max_epochs {
        // rows are independent given mu; updates run in parallel and the
        // objective is reduced in row order afterwards so results do not
        // depend on the partitioning
        let contributions: Vec<f64> = rows
            .par_iter_mut()
            .with_min_len(128)
            .enumerate()
            .map(|(i, state)| {
                update_row(
                    state,
                    &score_rows[i * d..(i + 1) * d],
                    labels[i],
                    local_p[i],
                    p_int[i],
                    local_p[i] - 1.0,
                    pm1_int[i],
                    mu,
                    config.learning_rate,
                )
            })
            .collect();
        let total: f64 = contributions.iter().sum();
        if !total.is_finite() {
            return Err(Error::NumericalFailure(format!(
                "objective became non-finite at epoch {epoch} (mu = {mu})"
            )));
        }

        // iterates live in the (1 - margin) shell, so the constraint holds
        // by construction; verify against the carried pth powers
        let violation = rows
            .iter()
            .zip(&local_p)
            .map(|(state, &p)| (state.pth.powf(1.0 / p) - 1.0).max(0.0))
            .fold(0.0, f64::max);
        debug_assert!(
            violation <= FEASIBILITY_SLACK,
            "constraint violated by {violation} after epoch {epoch}"
        );
        report.max_constraint_violation = report.max_constraint_violation.max(violation);
        report.epochs_used = epoch;
        report.final_objective = total;
        if traced {
            let hinge: f64 = rows
                .iter()
                .enumerate()
                .map(|(i, state)| {
                    let mut dot = 0.0;
                    for j in 0..d {
                        dot += score_rows[i * d + j] * state.w[j];
                    }
                    (1.0 - f64::from(labels[i]) * dot).max(0.0)
                })
                .sum();
            trace.push(TracePoint {
                seconds: clock.elapsed().as_secs_f64(),
                hinge,
            });
        }

        if (prev_objective - total).abs() < config.tolerance {
            report.converged = true;
            break;
        }
        prev_objective = total;
        mu *= config.beta;
    }

    let weights = DMatrix::from_fn(n, d, |i, j| rows[i].w[j]);
    let set = LocalWeightSet::new(
        weights,
        DVector::from_column_slice(&local_p),
        features.clone(),
        false,
    );
    Ok((set, report, trace))
}

#[allow(clippy::too_many_arguments)]
fn optimize_shared(
    score_rows: &[f64],
    features: &DMatrix<f64>,
    labels: &[i8],
    config: &OptimizerConfig,
    n: usize,
    d: usize,
    traced: bool,
) -> Result<(LocalWeightSet, OptimizeReport, Vec<TracePoint>)> {
    let p = config.p_base;
    let p_int = int_exponent(p);
    let pm1 = p - 1.0;
    let pm1_int = int_exponent(pm1);
    let mut state = initial_row(d, p, p_int);
    let mut mu = config.mu0;
    let mut prev_objective = f64::INFINITY;
    let mut report = OptimizeReport {
        final_objective: f64::INFINITY,
        epochs_used: 0,
        max_constraint_violation: 0.0,
        converged: false,
    };
    let mut trace = Vec::new();
    let clock = Instant::now();

    for epoch in 1..=config.max_epochs {
        for i in 0..n {
            update_row(
                &mut state,
                &score_rows[i * d..(i + 1) * d],
                labels[i],
                p,
                p_int,
                pm1,
                pm1_int,
                mu,
                config.learning_rate,
            );
        }
        let mut hinge_sum = 0.0;
        for i in 0..n {
            let mut dot = 0.0;
            for j in 0..d {
                dot += score_rows[i * d + j] * state.w[j];
            }
            hinge_sum += (1.0 - f64::from(labels[i]) * dot).max(0.0);
        }
        let total = hinge_sum - n as f64 * mu * (1.0 - state.pth).ln();
        if !total.is_finite() {
            return Err(Error::NumericalFailure(format!(
                "objective became non-finite at epoch {epoch} (mu = {mu})"
            )));
        }

        let violation = (state.pth.powf(1.0 / p) - 1.0).max(0.0);
        debug_assert!(
            violation <= FEASIBILITY_SLACK,
            "constraint violated by {violation} after epoch {epoch}"
        );
        report.max_constraint_violation = report.max_constraint_violation.max(violation);
        report.epochs_used = epoch;
        report.final_objective = total;
        if traced {
            trace.push(TracePoint {
                seconds: clock.elapsed().as_secs_f64(),
                hinge: hinge_sum,
            });
        }

        if (prev_objective - total).abs() < config.tolerance {
            report.converged = true;
            break;
        }
        prev_objective = total;
        mu *= config.beta;
    }

    let weights = DMatrix::from_fn(n, d, |_, j| state.w[j]);
    let set = LocalWeightSet::new(
        weights,
        DVector::from_element(n, p),
        features.clone(),
        true,
    );
    Ok((set, report, trace))
}
