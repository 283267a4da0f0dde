//! Projection-free Frank-Wolfe over the lp ball for the global hinge problem.
//!
//! The linear minimization oracle is closed-form through the dual norm
//! q = p / (p - 1): the minimizing vertex has components
//! v_j = -sign(g_j) (|g_j| / ||g||_q)^(q-1). Steps follow the 2/(t+2)
//! schedule and the run stops once the duality gap <g, w - v> falls below the
//! tolerance.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fusion::objective::{hinge_loss_and_gradient, lp_norm};
use crate::fusion::{LocalWeightSet, OptimizeReport, OptimizerConfig, TracePoint};
use crate::scorespace::ScoreMatrix;
use std::time::Instant;

pub fn optimize_frank_wolfe(
    scores: &ScoreMatrix,
    labels: &[i8],
    p: f64,
    config: &OptimizerConfig,
) -> Result<(DVector<f64>, OptimizeReport)> {
    let (w, report, _) = optimize_frank_wolfe_inner(scores, labels, p, config, false)?;
    Ok((w, report))
}

/// Same optimizer, additionally recording (cumulative seconds, total hinge)
/// after every iteration for timing instrumentation.
pub fn optimize_frank_wolfe_traced(
    scores: &ScoreMatrix,
    labels: &[i8],
    p: f64,
    config: &OptimizerConfig,
) -> Result<(DVector<f64>, OptimizeReport, Vec<TracePoint>)> {
    optimize_frank_wolfe_inner(scores, labels, p, config, true)
}

fn optimize_frank_wolfe_inner(
    scores: &ScoreMatrix,
    labels: &[i8],
    p: f64,
    config: &OptimizerConfig,
    traced: bool,
) -> Result<(DVector<f64>, OptimizeReport, Vec<TracePoint>)> {
    if !(p > 1.0) {
        return Err(Error::InvalidInput(format!(
            "Frank-Wolfe needs p > 1 for the dual-norm oracle, got {p}"
        )));
    }
    crate::fusion::check_standardized(scores, "weight optimization")?;
    let n = scores.nrows();
    let d = scores.ncols();
    if labels.len() != n {
        return Err(Error::InvalidInput(format!(
            "misaligned inputs: {n} score rows, {} labels",
            labels.len()
        )));
    }
    if labels.iter().any(|&y| y != 1 && y != -1) {
        return Err(Error::InvalidInput("labels must be +1 or -1".into()));
    }

    let q = p / (p - 1.0);
    let score_rows: Vec<DVector<f64>> = (0..n).map(|i| scores.row(i)).collect();

    let ones = DVector::from_element(d, 1.0);
    let mut w = &ones / lp_norm(&ones, p);
    let mut report = OptimizeReport {
        final_objective: total_hinge(&score_rows, labels, &w),
        epochs_used: 0,
        max_constraint_violation: 0.0,
        converged: false,
    };
    let mut trace = Vec::new();
    let clock = Instant::now();

    for t in 0..config.max_epochs {
        // the hinge total falls out of the same pass that builds the gradient
        let mut grad = DVector::zeros(d);
        let mut hinge = 0.0;
        for (s, &y) in score_rows.iter().zip(labels) {
            let margin = 1.0 - f64::from(y) * s.dot(&w);
            if margin > 0.0 {
                hinge += margin;
                grad.axpy(-f64::from(y), s, 1.0);
            }
        }
        if traced {
            trace.push(TracePoint {
                seconds: clock.elapsed().as_secs_f64(),
                hinge,
            });
        }

        let gnorm_q = dual_norm(&grad, q);
        if gnorm_q == 0.0 {
            // flat region: every active loss vanished, nothing to improve
            report.converged = true;
            break;
        }
        let vertex = DVector::from_fn(d, |j, _| {
            -grad[j].signum() * (grad[j].abs() / gnorm_q).powf(q - 1.0)
        });

        let gap = grad.dot(&w) + gnorm_q; // <g, w - v>
        report.epochs_used = t + 1;
        if gap <= config.tolerance {
            report.converged = true;
            break;
        }

        let step = 2.0 / (t as f64 + 2.0);
        w = &w * (1.0 - step) + vertex * step;

        let violation = (lp_norm(&w, p) - 1.0).max(0.0);
        debug_assert!(violation <= 1e-9);
        report.max_constraint_violation = report.max_constraint_violation.max(violation);
    }

    report.final_objective = total_hinge(&score_rows, labels, &w);
    if !report.final_objective.is_finite() {
        return Err(Error::NumericalFailure("hinge objective not finite".into()));
    }
    Ok((w, report, trace))
}

/// Package a global Frank-Wolfe solution in the shared-weight layout used by
/// the fusion front end.
pub fn weight_set_from_global(
    w: &DVector<f64>,
    p: f64,
    anchor_features: &DMatrix<f64>,
) -> LocalWeightSet {
    let n = anchor_features.nrows().max(1);
    let weights = DMatrix::from_fn(n, w.len(), |_, j| w[j]);
    let anchors = if anchor_features.nrows() == 0 {
        DMatrix::zeros(1, 1)
    } else {
        anchor_features.clone()
    };
    LocalWeightSet::new(weights, DVector::from_element(n, p), anchors, true)
}

fn total_hinge(score_rows: &[DVector<f64>], labels: &[i8], w: &DVector<f64>) -> f64 {
    score_rows
        .iter()
        .zip(labels)
        .map(|(s, &y)| hinge_loss_and_gradient(s, y, w).0)
        .sum()
}

fn dual_norm(g: &DVector<f64>, q: f64) -> f64 {
    g.iter().map(|v| v.abs().powf(q)).sum::<f64>().powf(1.0 / q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn zscored(values: DMatrix<f64>) -> ScoreMatrix {
        let ids = (0..values.ncols()).map(|j| format!("l{j}")).collect();
        ScoreMatrix::new(values, ids, crate::scorespace::Stage::ZScored).unwrap()
    }

    fn config() -> OptimizerConfig {
        OptimizerConfig {
            max_epochs: 5000,
            tolerance: 1e-6,
            locality_enabled: false,
            ..Default::default()
        }
    }

    #[test]
    fn one_dimensional_problem_hits_a_vertex() {
        let s = zscored(DMatrix::from_row_slice(3, 1, &[0.4, 0.3, 0.5]));
        let y = vec![1i8; 3];
        let (w, _) = optimize_frank_wolfe(&s, &y, 2.0, &config()).unwrap();
        assert!((w[0].abs() - 1.0).abs() <= 1e-9, "got {}", w[0]);
        assert!(w[0] > 0.0);
    }

    #[test]
    fn identical_columns_get_equal_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 20;
        let col: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s = zscored(DMatrix::from_fn(n, 2, |i, _| col[i]));
        let y = vec![1i8; n];
        let (w, _) = optimize_frank_wolfe(&s, &y, 2.0, &config()).unwrap();
        assert!(
            (w[0] - w[1]).abs() <= 1e-6,
            "symmetric columns should get symmetric weights: {w:?}"
        );
    }

    #[test]
    fn iterates_stay_in_ball_for_every_grid_p() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 30;
        let s = zscored(DMatrix::from_fn(n, 3, |_, _| rng.random_range(-1.5..1.5)));
        let y: Vec<i8> = (0..n).map(|i| if i % 3 == 0 { -1 } else { 1 }).collect();
        for &p in crate::fusion::P_GRID.iter() {
            let (w, report) = optimize_frank_wolfe(&s, &y, p, &config()).unwrap();
            assert!(lp_norm(&w, p) <= 1.0 + 1e-9, "p = {p}");
            assert!(report.max_constraint_violation <= 1e-9);
        }
    }

    #[test]
    fn rejects_p_at_or_below_one() {
        let s = zscored(DMatrix::from_row_slice(2, 2, &[0.1, 0.2, 0.3, 0.4]));
        let y = vec![1i8, 1];
        assert!(optimize_frank_wolfe(&s, &y, 1.0, &config()).is_err());
        assert!(optimize_frank_wolfe(&s, &y, 0.5, &config()).is_err());
    }

    #[test]
    fn vertex_has_unit_dual_pairing() {
        // the oracle vertex must satisfy <g, v> = -||g||_q and ||v||_p = 1
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for &p in &[4.0 / 3.0, 2.0, 8.0, 100.0] {
            let q = p / (p - 1.0);
            let g = DVector::from_fn(4, |_, _| rng.random_range(-2.0..2.0));
            let gq = dual_norm(&g, q);
            let v = DVector::from_fn(4, |j, _| {
                -g[j].signum() * (g[j].abs() / gq).powf(q - 1.0)
            });
            assert!((lp_norm(&v, p) - 1.0).abs() <= 1e-9, "p = {p}");
            assert!((g.dot(&v) + gq).abs() <= 1e-9 * gq.max(1.0), "p = {p}");
        }
    }
}
