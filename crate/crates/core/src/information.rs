//! The information matrix `M(w) = sum_i w_i x_i x_i^T`, its Cholesky factor,
//! the log-determinant `phi(w)` and the variance function
//! `d(i, j, w) = x_i^T M(w)^{-1} x_j`.
//!
//! The factor is built in square-root form: `R` is the triangular factor of a
//! QR decomposition of the stacked rows `sqrt(w_i) x_i^T`, accumulated one row
//! at a time with Givens rotations, so `M = R^T R` without ever squaring the
//! condition number of the design. Variance values come from whitened points
//! `z_i = R^{-T} x_i`, with `d(i, j, w) = z_i . z_j`. No inverse is formed.

use std::cell::OnceCell;

use crate::error::{Error, Result};
use crate::space::DesignSpace;
use crate::weights::DesignWeights;

/// A diagonal entry of the triangular factor below this multiple of `max_j M_jj`
/// marks `M(w)` as singular.
pub const DEGENERACY_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct InformationState<'s> {
    space: &'s DesignSpace,
    weights: DesignWeights,
    /// Row-major symmetric `m x m`.
    matrix: Vec<f64>,
    /// Row-major lower triangular `L = R^T` with `L L^T = M`.
    factor: Vec<f64>,
    log_det: f64,
    d_all: OnceCell<Vec<f64>>,
}

/// Builds `M(w)` and its factorization. Fails if `w` leaves the nonsingular region.
pub fn make_state(space: &DesignSpace, weights: DesignWeights) -> Result<InformationState<'_>> {
    InformationState::new(space, weights)
}

impl<'s> InformationState<'s> {
    pub fn new(space: &'s DesignSpace, weights: DesignWeights) -> Result<Self> {
        if weights.len() != space.len() {
            return Err(Error::InvalidWeights(format!(
                "{} weights for a space of {} points",
                weights.len(),
                space.len()
            )));
        }
        let m = space.dim();
        let matrix = information_matrix(space, weights.as_slice());
        let factor = square_root_factor(space, weights.as_slice(), &matrix)?;
        let log_det = 2.0 * (0..m).map(|j| factor[j * m + j].ln()).sum::<f64>();
        Ok(Self {
            space,
            weights,
            matrix,
            factor,
            log_det,
            d_all: OnceCell::new(),
        })
    }

    /// A new state on the same space.
    pub fn with_weights(&self, weights: DesignWeights) -> Result<Self> {
        Self::new(self.space, weights)
    }

    pub fn space(&self) -> &'s DesignSpace {
        self.space
    }

    pub fn weights(&self) -> &DesignWeights {
        &self.weights
    }

    pub fn into_weights(self) -> DesignWeights {
        self.weights
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn factor(&self) -> &[f64] {
        &self.factor
    }

    /// `phi(w) = log det M(w)`.
    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// `z = L^{-1} x_i`.
    pub fn whitened(&self, i: usize) -> Vec<f64> {
        let mut z = vec![0.0; self.dim()];
        self.whiten_into(self.space.point(i), &mut z);
        z
    }

    fn whiten_into(&self, x: &[f64], z: &mut [f64]) {
        let m = self.dim();
        for r in 0..m {
            let row = &self.factor[r * m..r * m + r];
            let acc: f64 = row.iter().zip(&z[..r]).map(|(l, v)| l * v).sum();
            z[r] = (x[r] - acc) / self.factor[r * m + r];
        }
    }

    /// `d(i, w) = x_i^T M^{-1} x_i`.
    pub fn d_value(&self, i: usize) -> f64 {
        if let Some(all) = self.d_all.get() {
            return all[i];
        }
        self.whitened(i).iter().map(|v| v * v).sum()
    }

    /// `d(i, j, w) = x_i^T M^{-1} x_j`.
    pub fn d_cross(&self, i: usize, j: usize) -> f64 {
        let (zi, zj) = (self.whitened(i), self.whitened(j));
        zi.iter().zip(&zj).map(|(a, b)| a * b).sum()
    }

    /// `(d(j), d(k), d(j, k))` from one pair of whitenings.
    pub fn d_pair(&self, j: usize, k: usize) -> (f64, f64, f64) {
        let (zj, zk) = (self.whitened(j), self.whitened(k));
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        (dot(&zj, &zj), dot(&zk, &zk), dot(&zj, &zk))
    }

    /// `d(i, w)` for every candidate, computed once per state.
    pub fn d_all(&self) -> &[f64] {
        self.d_all.get_or_init(|| {
            let mut z = vec![0.0; self.dim()];
            self.space
                .points()
                .map(|x| {
                    self.whiten_into(x, &mut z);
                    z.iter().map(|v| v * v).sum()
                })
                .collect()
        })
    }

    /// `(i, d(i, w))` over the support only.
    pub fn d_support(&self) -> Vec<(usize, f64)> {
        let all = self.d_all.get();
        let mut z = vec![0.0; self.dim()];
        self.weights
            .support_iter()
            .map(|i| {
                let d = match all {
                    Some(all) => all[i],
                    None => {
                        self.whiten_into(self.space.point(i), &mut z);
                        z.iter().map(|v| v * v).sum()
                    }
                };
                (i, d)
            })
            .collect()
    }

    /// `sum_i w_i d(i, w)`, which equals `m` up to rounding.
    pub fn weighted_mean_d(&self) -> f64 {
        self.d_support()
            .into_iter()
            .map(|(i, d)| self.weights.get(i) * d)
            .sum()
    }
}

/// `sum_i w_i x_i x_i^T` over positive weights, row-major.
pub fn information_matrix(space: &DesignSpace, w: &[f64]) -> Vec<f64> {
    let m = space.dim();
    let mut mat = vec![0.0; m * m];
    for (i, &wi) in w.iter().enumerate() {
        if wi <= 0.0 {
            continue;
        }
        let x = space.point(i);
        for r in 0..m {
            let s = wi * x[r];
            for c in 0..=r {
                mat[r * m + c] += s * x[c];
            }
        }
    }
    for r in 0..m {
        for c in 0..r {
            mat[c * m + r] = mat[r * m + c];
        }
    }
    mat
}

/// Lower triangular `L` with `L L^T = M(w)`, from Givens QR of `diag(sqrt(w)) X`.
fn square_root_factor(space: &DesignSpace, w: &[f64], matrix: &[f64]) -> Result<Vec<f64>> {
    let m = space.dim();
    // upper triangular R, row-major
    let mut r = vec![0.0f64; m * m];
    let mut row = vec![0.0f64; m];
    for (i, &wi) in w.iter().enumerate() {
        if wi <= 0.0 {
            continue;
        }
        let scale = wi.sqrt();
        row.iter_mut()
            .zip(space.point(i))
            .for_each(|(a, x)| *a = scale * x);
        for j in 0..m {
            let a = row[j];
            if a == 0.0 {
                continue;
            }
            let rjj = r[j * m + j];
            let h = rjj.hypot(a);
            let (c, s) = (rjj / h, a / h);
            r[j * m + j] = h;
            for k in j + 1..m {
                let (rk, ak) = (r[j * m + k], row[k]);
                r[j * m + k] = c * rk + s * ak;
                row[k] = c * ak - s * rk;
            }
        }
    }
    let max_diag = (0..m).map(|j| matrix[j * m + j]).fold(0.0, f64::max);
    let floor = DEGENERACY_FLOOR * max_diag;
    let mut l = vec![0.0; m * m];
    for j in 0..m {
        let pivot = r[j * m + j];
        if pivot.is_nan() || pivot <= floor {
            return Err(Error::SingularInformation { pivot, floor });
        }
        for k in j..m {
            l[k * m + j] = r[j * m + k];
        }
    }
    Ok(l)
}
