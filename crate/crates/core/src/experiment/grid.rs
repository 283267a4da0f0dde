//! Hyperparameter grid definition and the argmax-with-tiebreak selection
//! shared by every tuned method.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::P_GRID;

/// Cartesian hyperparameter grid. The defaults cover the full exponent and
/// trim grids with desk-scale learner grids.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HyperGrid {
    pub p_values: Vec<f64>,
    pub rhos: Vec<u32>,
    pub width_multipliers: Vec<f64>,
    pub kpca_dims: Vec<usize>,
    pub gmm_components: Vec<usize>,
}

impl Default for HyperGrid {
    fn default() -> Self {
        Self {
            p_values: P_GRID.to_vec(),
            rhos: (1..=10).collect(),
            width_multipliers: vec![0.25, 0.5, 1.0],
            kpca_dims: vec![2, 6, 10],
            gmm_components: vec![1, 2, 3],
        }
    }
}

impl HyperGrid {
    pub fn validate(&self) -> Result<()> {
        if self.p_values.is_empty()
            || self.rhos.is_empty()
            || self.width_multipliers.is_empty()
            || self.kpca_dims.is_empty()
            || self.gmm_components.is_empty()
        {
            return Err(Error::InvalidInput("empty hyperparameter grid axis".into()));
        }
        if self.p_values.iter().any(|&p| p <= 1.0) {
            return Err(Error::InvalidInput("grid p values must exceed 1".into()));
        }
        if self.rhos.iter().any(|&r| !(1..=10).contains(&r)) {
            return Err(Error::InvalidInput("rho grid must lie in 1..=10".into()));
        }
        if self.width_multipliers.iter().any(|&m| m <= 0.0) {
            return Err(Error::InvalidInput("width multipliers must be positive".into()));
        }
        if self.kpca_dims.iter().any(|&d| d == 0) || self.gmm_components.iter().any(|&k| k == 0) {
            return Err(Error::InvalidInput("learner grid entries must be positive".into()));
        }
        Ok(())
    }

    /// Drop KPCA dimensions the training size cannot support (the centered
    /// kernel has rank at most n_train - 1), keeping at least one entry.
    pub fn clamped_for(&self, n_train: usize) -> Self {
        let cap = n_train.saturating_sub(1).max(1);
        let mut kpca_dims: Vec<usize> = self
            .kpca_dims
            .iter()
            .copied()
            .filter(|&d| d <= cap)
            .collect();
        if kpca_dims.is_empty() {
            kpca_dims.push(cap.min(*self.kpca_dims.iter().min().unwrap()));
        }
        Self {
            kpca_dims,
            ..self.clone()
        }
    }
}

/// One grid configuration, carrying the grid indices used for the
/// deterministic lexicographic tie-break.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    /// Norm exponent; absent for methods that do not optimize weights.
    pub p_base: Option<f64>,
    pub rho: u32,
    pub width_multiplier: f64,
    pub kpca_dim: usize,
    pub gmm_components: usize,
    #[serde(skip)]
    pub order: (usize, usize, usize, usize, usize, usize),
}

/// Tuning criterion evaluated on validation data; all are maximized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TuningCriterion {
    /// Mean positive relative margin above the percentile threshold,
    /// computed on normal-only validation scores.
    Rpau,
    /// Best G-mean against pseudo-negative validation samples.
    PseudoNegGmean,
    /// Validation AUC against real labels (non-pure scenario).
    NonPureValAuc,
}

/// Running argmax keeping the lexicographically-first grid point on ties, so
/// the outcome is independent of evaluation order.
#[derive(Debug, Clone)]
pub struct GridSelection<T> {
    best: Option<(f64, GridPoint, T)>,
}

impl<T> GridSelection<T> {
    pub fn new() -> Self {
        Self { best: None }
    }

    pub fn offer(&mut self, score: f64, point: GridPoint, payload: T) {
        let better = match &self.best {
            None => true,
            Some((s, p, _)) => score > *s || (score == *s && point.order < p.order),
        };
        if better {
            self.best = Some((score, point, payload));
        }
    }

    pub fn into_best(self) -> Option<(f64, GridPoint, T)> {
        self.best
    }
}

impl<T> Default for GridSelection<T> {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(order: (usize, usize, usize, usize, usize, usize)) -> GridPoint {
        GridPoint {
            p_base: Some(2.0),
            rho: 1,
            width_multiplier: 1.0,
            kpca_dim: 2,
            gmm_components: 1,
            order,
        }
    }

    #[test]
    fn singleton_grid_returns_its_only_point() {
        let mut sel = GridSelection::new();
        sel.offer(0.3, point((0, 0, 0, 0, 0, 0)), "only");
        let (score, _, payload) = sel.into_best().unwrap();
        assert_eq!(score, 0.3);
        assert_eq!(payload, "only");
    }

    #[test]
    fn strictly_better_score_wins() {
        let mut sel = GridSelection::new();
        sel.offer(0.3, point((0, 0, 0, 0, 0, 0)), "a");
        sel.offer(0.5, point((1, 0, 0, 0, 0, 0)), "b");
        sel.offer(0.4, point((2, 0, 0, 0, 0, 0)), "c");
        assert_eq!(sel.into_best().unwrap().2, "b");
    }

    #[test]
    fn ties_break_to_lexicographically_first_tuple() {
        let mut sel = GridSelection::new();
        // offered out of order: the earlier tuple must still win
        sel.offer(0.5, point((1, 3, 0, 0, 0, 0)), "later");
        sel.offer(0.5, point((1, 2, 0, 0, 0, 0)), "earlier");
        sel.offer(0.5, point((2, 0, 0, 0, 0, 0)), "larger-first-axis");
        assert_eq!(sel.into_best().unwrap().2, "earlier");
    }

    #[test]
    fn default_grid_is_valid_and_clamps() {
        let grid = HyperGrid::default();
        grid.validate().unwrap();
        assert_eq!(grid.p_values.len(), 9);
        assert_eq!(grid.rhos.len(), 10);
        let clamped = grid.clamped_for(7);
        assert_eq!(clamped.kpca_dims, vec![2, 6]);
        let tiny = grid.clamped_for(2);
        assert_eq!(tiny.kpca_dims, vec![1]);
    }

    #[test]
    fn empty_axis_rejected() {
        let grid = HyperGrid {
            p_values: vec![],
            ..Default::default()
        };
        assert!(grid.validate().is_err());
    }
}
