//! Hinge and barrier primitives shared by both optimizers.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// |x|^e with a fast path for integer exponents (the grid contains 2, 4, 8,
/// 10 and 100, and their p-1 companions).
#[inline]
fn abs_pow(x: f64, e: f64) -> f64 {
    let a = x.abs();
    if e == 0.0 {
        return 1.0;
    }
    if e.fract() == 0.0 && e > 0.0 && e <= 512.0 {
        a.powi(e as i32)
    } else {
        a.powf(e)
    }
}

/// Sum of |w_j|^p.
#[inline]
pub fn lp_norm_pth_power(w: &DVector<f64>, p: f64) -> f64 {
    w.iter().map(|&v| abs_pow(v, p)).sum()
}

/// The lp norm for p >= 1.
pub fn lp_norm(w: &DVector<f64>, p: f64) -> f64 {
    lp_norm_pth_power(w, p).powf(1.0 / p)
}

/// Radial projection onto the unit lp ball: w unchanged inside, w / ||w||_p
/// outside.
pub fn project_onto_lp_ball(w: &DVector<f64>, p: f64) -> DVector<f64> {
    let norm = lp_norm(w, p);
    if norm <= 1.0 {
        w.clone()
    } else {
        w / norm
    }
}

/// Hinge loss max(0, 1 - y <s, w>) and its subgradient, which is -y s when
/// the loss is strictly positive and zero otherwise (the kink counts as
/// inactive).
pub fn hinge_loss_and_gradient(
    s: &DVector<f64>,
    y: i8,
    w: &DVector<f64>,
) -> (f64, DVector<f64>) {
    let margin = 1.0 - f64::from(y) * s.dot(w);
    if margin > 0.0 {
        (margin, s * (-f64::from(y)))
    } else {
        (0.0, DVector::zeros(s.len()))
    }
}

/// Value of the barrier term -mu ln(1 - ||w||_p^p); requires a strictly
/// interior point.
pub fn barrier_value(w: &DVector<f64>, p: f64, mu: f64) -> Result<f64> {
    let slack = 1.0 - lp_norm_pth_power(w, p);
    if slack <= 0.0 {
        return Err(Error::InfeasiblePoint(format!(
            "||w||_p^p = {} is not strictly inside the unit ball",
            1.0 - slack
        )));
    }
    Ok(-mu * slack.ln())
}

/// Exact gradient of the barrier term: component j is
/// mu p |w_j|^(p-1) sign(w_j) / (1 - ||w||_p^p). Sign-carrying powers keep
/// fractional exponents defined for negative components.
pub fn barrier_gradient(w: &DVector<f64>, p: f64, mu: f64) -> Result<DVector<f64>> {
    let slack = 1.0 - lp_norm_pth_power(w, p);
    if slack <= 0.0 {
        return Err(Error::InfeasiblePoint(format!(
            "||w||_p^p = {} is not strictly inside the unit ball",
            1.0 - slack
        )));
    }
    let scale = mu * p / slack;
    Ok(DVector::from_fn(w.len(), |j, _| {
        scale * abs_pow(w[j], p - 1.0) * w[j].signum()
    }))
}

/// Barrier gradient reusing a precomputed ||w||_p^p (saves one pass in the
/// optimizer's hot loop). Caller guarantees strict interiority.
#[inline]
pub(crate) fn barrier_gradient_with_power(
    w: &DVector<f64>,
    p: f64,
    mu: f64,
    pth_power: f64,
) -> DVector<f64> {
    let slack = 1.0 - pth_power;
    debug_assert!(slack > 0.0);
    let scale = mu * p / slack;
    DVector::from_fn(w.len(), |j, _| {
        scale * abs_pow(w[j], p - 1.0) * w[j].signum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn vec(vals: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(vals)
    }

    #[test]
    fn hinge_inactive_margin() {
        let (loss, grad) = hinge_loss_and_gradient(&vec(&[1.0, 1.0]), 1, &vec(&[1.0, 1.0]));
        assert_abs_diff_eq!(loss, 0.0);
        assert!(grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn hinge_active_closed_form() {
        let (loss, grad) = hinge_loss_and_gradient(&vec(&[1.0, 0.0]), 1, &vec(&[0.0, 0.0]));
        assert_abs_diff_eq!(loss, 1.0);
        assert_abs_diff_eq!(grad[0], -1.0);
        assert_abs_diff_eq!(grad[1], 0.0);
    }

    #[test]
    fn hinge_boundary_counts_inactive() {
        // <s, w> = 1 exactly: strict inequality treats the kink as inactive
        let (loss, grad) = hinge_loss_and_gradient(&vec(&[1.0]), 1, &vec(&[1.0]));
        assert_abs_diff_eq!(loss, 0.0);
        assert_abs_diff_eq!(grad[0], 0.0);
    }

    #[test]
    fn barrier_gradient_zero_at_origin() {
        let g = barrier_gradient(&vec(&[0.0, 0.0]), 2.0, 1.0).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn barrier_gradient_p2_closed_form() {
        // -ln(1 - ||w||_2^2), w = [0.5, 0]: d/dw_0 = 2*0.5 / (1 - 0.25) = 4/3
        let g = barrier_gradient(&vec(&[0.5, 0.0]), 2.0, 1.0).unwrap();
        assert_abs_diff_eq!(g[0], 4.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g[1], 0.0);
    }

    #[test]
    fn barrier_blows_up_near_boundary() {
        let g1 = barrier_gradient(&vec(&[0.99, 0.0]), 2.0, 1.0).unwrap();
        let g2 = barrier_gradient(&vec(&[0.9999, 0.0]), 2.0, 1.0).unwrap();
        assert!(g2.norm() > 50.0 * g1.norm() / 100.0);
        assert!(g2.norm() > g1.norm());
        assert!(barrier_gradient(&vec(&[1.0, 0.0]), 2.0, 1.0).is_err());
        assert!(barrier_gradient(&vec(&[1.5, 0.0]), 2.0, 1.0).is_err());
    }

    #[test]
    fn projection_identity_inside() {
        let w = vec(&[0.3, 0.4]);
        let out = project_onto_lp_ball(&w, 2.0);
        assert_eq!(out.as_slice(), w.as_slice());
    }

    #[test]
    fn projection_rescales_outside() {
        let out = project_onto_lp_ball(&vec(&[3.0, 4.0]), 2.0);
        assert_abs_diff_eq!(out[0], 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(out[1], 0.8, epsilon = 1e-12);
    }

    #[test]
    fn projection_high_p() {
        let out = project_onto_lp_ball(&vec(&[2.0, 2.0]), 100.0);
        assert_abs_diff_eq!(lp_norm(&out, 100.0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out[0], out[1], epsilon = 1e-15);
    }

    /// Central finite differences of the barrier, the independent oracle for
    /// the analytic gradient.
    fn barrier_fd(w: &DVector<f64>, p: f64, mu: f64, h: f64) -> DVector<f64> {
        DVector::from_fn(w.len(), |j, _| {
            let mut hi = w.clone();
            let mut lo = w.clone();
            hi[j] += h;
            lo[j] -= h;
            (barrier_value(&hi, p, mu).unwrap() - barrier_value(&lo, p, mu).unwrap()) / (2.0 * h)
        })
    }

    #[test]
    fn barrier_gradient_matches_finite_differences_on_grid() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(71);
        for &p in crate::fusion::P_GRID.iter() {
            for _ in 0..20 {
                let d = rng.random_range(2..=4);
                let raw = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
                let norm = lp_norm(&raw, p);
                let w = raw * (rng.random_range(0.1..0.85) / norm.max(1e-12));
                let analytic = barrier_gradient(&w, p, 1.7).unwrap();
                let numeric = barrier_fd(&w, p, 1.7, 1e-6);
                for j in 0..d {
                    let denom = analytic[j].abs().max(1e-6);
                    assert!(
                        (analytic[j] - numeric[j]).abs() / denom <= 1e-4,
                        "p={p} j={j}: {} vs {}",
                        analytic[j],
                        numeric[j]
                    );
                }
            }
        }
    }

    proptest! {
        #[test]
        fn projected_points_feasible_for_all_grid_p(
            seed in 0u64..300,
            scale in 0.1f64..20.0,
        ) {
            use rand::prelude::*;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let d = rng.random_range(1..=4);
            let w = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0) * scale);
            for &p in crate::fusion::P_GRID.iter() {
                let out = project_onto_lp_ball(&w, p);
                prop_assert!(lp_norm(&out, p) <= 1.0 + 1e-12);
            }
        }
    }
}
