//! B-spline bases on the unit interval.
//!
//! Two knot layouts are provided: clamped (boundary knots repeated
//! `degree + 1` times, used for the time-varying coefficients) and uniform
//! extended knots (equispaced everywhere, used by the penalized smoother so
//! that linear coefficient sequences reproduce straight lines exactly).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BasisError {
    #[error("u = {0} is outside [0, 1]")]
    Domain(f64),
    #[error("need at least degree + 1 = {needed} basis functions, got {got}")]
    TooFewFunctions { needed: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KnotLayout {
    Clamped,
    UniformExtended,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BSplineBasis {
    degree: usize,
    n_basis: usize,
    layout: KnotLayout,
    knots: Vec<f64>,
}

impl BSplineBasis {
    /// Clamped basis with equispaced interior knots.
    pub fn clamped(degree: usize, n_basis: usize) -> Result<Self, BasisError> {
        Self::check(degree, n_basis)?;
        let n_interior = n_basis - degree - 1;
        let mut knots = vec![0.0; degree + 1];
        knots.extend((1..=n_interior).map(|i| i as f64 / (n_interior + 1) as f64));
        knots.extend(std::iter::repeat_n(1.0, degree + 1));
        Ok(Self {
            degree,
            n_basis,
            layout: KnotLayout::Clamped,
            knots,
        })
    }

    /// Basis on equispaced knots that extend `degree` steps past each end of
    /// [0, 1].
    pub fn uniform_extended(degree: usize, n_basis: usize) -> Result<Self, BasisError> {
        Self::check(degree, n_basis)?;
        let steps = (n_basis - degree) as f64;
        let knots = (0..n_basis + degree + 1)
            .map(|j| (j as f64 - degree as f64) / steps)
            .collect();
        Ok(Self {
            degree,
            n_basis,
            layout: KnotLayout::UniformExtended,
            knots,
        })
    }

    fn check(degree: usize, n_basis: usize) -> Result<(), BasisError> {
        if n_basis < degree + 1 {
            return Err(BasisError::TooFewFunctions {
                needed: degree + 1,
                got: n_basis,
            });
        }
        Ok(())
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    pub fn layout(&self) -> KnotLayout {
        self.layout
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Knot span `i` with `knots[i] <= u < knots[i + 1]`, restricted to the
    /// spans that cover [0, 1]; `u = 1` maps to the last span.
    fn span(&self, u: f64) -> usize {
        let (lo, hi) = (self.degree, self.n_basis - 1);
        if u >= self.knots[hi + 1] {
            return hi;
        }
        // knots[lo..=hi+1] is sorted; find last index with knots[i] <= u
        let slice = &self.knots[lo..=hi + 1];
        let pos = slice.partition_point(|&k| k <= u);
        (lo + pos - 1).min(hi)
    }

    /// Values of all basis functions at `u`.
    pub fn eval(&self, u: f64) -> Result<Vec<f64>, BasisError> {
        let mut out = vec![0.0; self.n_basis];
        self.eval_into(u, &mut out)?;
        Ok(out)
    }

    /// Writes basis values into `out` (length `n_basis`), returning the index
    /// of the first possibly-nonzero function.
    pub fn eval_into(&self, u: f64, out: &mut [f64]) -> Result<usize, BasisError> {
        if !(0.0..=1.0).contains(&u) {
            return Err(BasisError::Domain(u));
        }
        debug_assert_eq!(out.len(), self.n_basis);
        out.iter_mut().for_each(|v| *v = 0.0);
        let p = self.degree;
        let span = self.span(u);
        let k = &self.knots;

        // Triangular de Boor scheme for the p + 1 functions nonzero on `span`.
        let mut local = vec![0.0; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        local[0] = 1.0;
        for j in 1..=p {
            left[j] = u - k[span + 1 - j];
            right[j] = k[span + j] - u;
            let mut saved = 0.0;
            for r in 0..j {
                let denom = right[r + 1] + left[j - r];
                let temp = if denom == 0.0 { 0.0 } else { local[r] / denom };
                local[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            local[j] = saved;
        }
        let first = span - p;
        out[first..=span].copy_from_slice(&local);
        Ok(first)
    }

    /// Row-major `n_points x n_basis` matrix of basis values at `points`.
    pub fn design_matrix(&self, points: &[f64]) -> Result<Vec<f64>, BasisError> {
        let mut m = vec![0.0; points.len() * self.n_basis];
        for (row, &u) in m.chunks_exact_mut(self.n_basis).zip(points) {
            self.eval_into(u, row)?;
        }
        Ok(m)
    }

    /// Greville abscissae, the knot averages at which linear coefficients
    /// reproduce the identity function.
    pub fn greville(&self) -> Vec<f64> {
        (0..self.n_basis)
            .map(|j| {
                self.knots[j + 1..=j + self.degree].iter().sum::<f64>() / self.degree.max(1) as f64
            })
            .collect()
    }
}

/// Evaluates `sum_j coef[j] * B_j(u)`.
pub fn combine(values: &[f64], coef: &[f64]) -> f64 {
    values.iter().zip(coef).map(|(b, c)| b * c).sum()
}
