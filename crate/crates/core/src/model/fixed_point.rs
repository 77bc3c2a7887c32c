//! Fixed-point solves over whole profiles.
//!
//! The unknown is a profile `x` with `x = sweep(x)`. Plain or damped
//! iteration of `sweep` stalls or locks into 2-cycles on the stiffer
//! configurations, so the solver mixes the last few iterates (Anderson
//! acceleration) and restarts its history when a step blows up.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Convergence {
    /// Sweeps evaluated.
    pub iterations: usize,
    /// `max_i |sweep(x)_i - x_i|` at the last iterate.
    pub residual: f64,
}

impl Convergence {
    pub(crate) fn exact() -> Self {
        Self {
            iterations: 1,
            residual: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Anderson {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Past iterates kept for mixing.
    pub memory: usize,
    /// Weight of the plain sweep in each update.
    pub damping: f64,
}

impl Anderson {
    pub(crate) fn with_tolerance(tolerance: f64) -> Self {
        Self {
            tolerance,
            max_iterations: 10_000,
            memory: 8,
            damping: 0.5,
        }
    }

    /// Iterates until `max |sweep(x) - x| < tolerance` and returns `sweep(x)`.
    /// Iterates are kept in `[0, 1]`.
    pub(crate) fn solve<F>(&self, init: Vec<f64>, mut sweep: F) -> Result<(Vec<f64>, Convergence)>
    where
        F: FnMut(&[f64]) -> Vec<f64>,
    {
        let dim = init.len();
        let mut x = DVector::from_vec(init);
        let mut xs: Vec<DVector<f64>> = Vec::new();
        let mut fs: Vec<DVector<f64>> = Vec::new();
        let mut last = f64::INFINITY;
        for iteration in 1..=self.max_iterations {
            let y = DVector::from_vec(sweep(x.as_slice()));
            let f = &y - &x;
            let residual = f.amax();
            if residual < self.tolerance {
                return Ok((y.data.into(), Convergence { iterations: iteration, residual }));
            }
            if !residual.is_finite() || residual > 10.0 * last {
                xs.clear();
                fs.clear();
            }
            last = residual;
            xs.push(x.clone());
            fs.push(f.clone());
            if xs.len() > self.memory + 1 {
                xs.remove(0);
                fs.remove(0);
            }
            let mut next = &x + self.damping * &f;
            let m = xs.len() - 1;
            if m > 0 {
                let df = DMatrix::from_fn(dim, m, |i, j| fs[j + 1][i] - fs[j][i]);
                let dx = DMatrix::from_fn(dim, m, |i, j| xs[j + 1][i] - xs[j][i]);
                if let Ok(gamma) = df.clone().svd(true, true).solve(&f, 1e-12) {
                    next -= (dx + self.damping * df) * gamma;
                }
            }
            x = next.map(|v| if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 });
        }
        Err(Error::NonConvergence {
            iterations: self.max_iterations,
            residual: last,
        })
    }
}
