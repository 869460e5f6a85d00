//! Independent oracles and random instance generators for integration tests.
//!
//! Everything here is computed with nalgebra (LU, SVD) from the raw points,
//! never through the crate's own factorization.

#![allow(dead_code)]

use cocktail_core::{DesignSpace, DesignWeights, SpaceFamily};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn info_matrix(space: &DesignSpace, w: &[f64]) -> DMatrix<f64> {
    let m = space.dim();
    let mut mat = DMatrix::zeros(m, m);
    for (i, &wi) in w.iter().enumerate() {
        if wi != 0.0 {
            let x = DVector::from_column_slice(space.point(i));
            mat += wi * &x * x.transpose();
        }
    }
    mat
}

/// `log det M(w)` via LU; `-inf` when the determinant is not positive.
pub fn lu_log_det(space: &DesignSpace, w: &[f64]) -> f64 {
    log_det_of(&info_matrix(space, w))
}

pub fn log_det_of(mat: &DMatrix<f64>) -> f64 {
    let det = mat.clone().lu().determinant();
    if det > 0.0 {
        det.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// Whitening of `M(w)` from an SVD of the stacked rows `sqrt(w_i) x_i^T`:
/// `M = V S^2 V^T`, `z = S^{-1} V^T x`.
pub struct Whitener {
    pub log_det: f64,
    map: DMatrix<f64>,
}

impl Whitener {
    pub fn new(space: &DesignSpace, w: &[f64]) -> Self {
        let support: Vec<usize> = (0..w.len()).filter(|&i| w[i] > 0.0).collect();
        let m = space.dim();
        let a = DMatrix::from_fn(support.len(), m, |r, c| w[support[r]].sqrt() * space.point(support[r])[c]);
        let svd = a.svd(false, true);
        let v_t = svd.v_t.expect("requested V^T");
        let sigma = svd.singular_values;
        let log_det = 2.0 * sigma.iter().map(|s| s.ln()).sum::<f64>();
        let mut map = v_t;
        for (r, s) in sigma.iter().enumerate() {
            map.row_mut(r).unscale_mut(*s);
        }
        Self { log_det, map }
    }

    pub fn whiten(&self, x: &[f64]) -> DVector<f64> {
        &self.map * DVector::from_column_slice(x)
    }
}

/// `x_i^T M^{-1} x_i` for every candidate, via SVD whitening.
pub fn oracle_d(space: &DesignSpace, w: &[f64]) -> Vec<f64> {
    let wh = Whitener::new(space, w);
    space.points().map(|p| wh.whiten(p).norm_squared()).collect()
}

pub fn svd_log_det(space: &DesignSpace, w: &[f64]) -> f64 {
    Whitener::new(space, w).log_det
}

/// Uniform points in `[-1, 1]^m`.
pub fn random_space(rng: &mut ChaCha8Rng, m: usize, n: usize) -> DesignSpace {
    loop {
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..m).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        if let Ok(space) = DesignSpace::new(pts) {
            return space;
        }
    }
}

/// A random space: usually uniform random points, sometimes a builtin family.
pub fn fuzz_space(rng: &mut ChaCha8Rng) -> DesignSpace {
    if rng.random_bool(0.25) {
        let family = SpaceFamily::ALL[rng.random_range(0..4)];
        let size = match family {
            SpaceFamily::X4 => rng.random_range(3..=12),
            f => rng.random_range(f.dim()..=120),
        };
        family.build(size).unwrap()
    } else {
        let m = rng.random_range(2..=8);
        let n = rng.random_range(m..=200);
        random_space(rng, m, n)
    }
}

/// Random positive weights on a random subset of at least `m` points,
/// resampled until `M(w)` is comfortably nonsingular.
pub fn random_weights(rng: &mut ChaCha8Rng, space: &DesignSpace) -> DesignWeights {
    let (n, m) = (space.len(), space.dim());
    loop {
        let k = rng.random_range(m..=n);
        let subset = rand::seq::index::sample(rng, n, k).into_vec();
        let mut w = vec![0.0; n];
        for i in subset {
            w[i] = rng.random_range(0.05..1.0);
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= total);
        if lu_log_det(space, &w).is_finite() && cocktail_core::make_state(space, DesignWeights::new(w.clone()).unwrap()).is_ok() {
            return DesignWeights::new(w).unwrap();
        }
    }
}

/// `log det M(w + delta (e_k - e_j))`, evaluated as `log det M(w)` plus the LU
/// log-determinant of the whitened `I + delta (z_k z_k^T - z_j z_j^T)`.
pub struct ExchangeLine {
    base: f64,
    dir: DMatrix<f64>,
}

impl ExchangeLine {
    pub fn new(space: &DesignSpace, w: &[f64], j: usize, k: usize) -> Self {
        let wh = Whitener::new(space, w);
        let (zj, zk) = (wh.whiten(space.point(j)), wh.whiten(space.point(k)));
        Self {
            base: wh.log_det,
            dir: &zk * zk.transpose() - &zj * zj.transpose(),
        }
    }

    pub fn log_det(&self, delta: f64) -> f64 {
        let m = self.dir.nrows();
        self.base + log_det_of(&(DMatrix::identity(m, m) + delta * &self.dir))
    }
}

/// `log det M((1 - delta) w + delta e_i)` through the whitened `(1 - delta) I + delta z z^T`.
pub struct VertexLine {
    base: f64,
    vertex: DMatrix<f64>,
}

impl VertexLine {
    pub fn new(space: &DesignSpace, w: &[f64], i: usize) -> Self {
        let wh = Whitener::new(space, w);
        let z = wh.whiten(space.point(i));
        Self {
            base: wh.log_det,
            vertex: &z * z.transpose(),
        }
    }

    pub fn log_det(&self, delta: f64) -> f64 {
        let m = self.vertex.nrows();
        let t = (1.0 - delta) * DMatrix::identity(m, m) + delta * &self.vertex;
        self.base + log_det_of(&t)
    }
}

/// Grid maximum `(value, delta)` of `f` over `points` evenly spaced deltas in `[lo, hi]`.
pub fn grid_max(lo: f64, hi: f64, points: usize, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut best = (f64::NEG_INFINITY, lo);
    for g in 0..points {
        let delta = lo + (hi - lo) * g as f64 / (points - 1) as f64;
        let v = f(delta);
        if v > best.0 {
            best = (v, delta);
        }
    }
    best
}

pub fn grid_max_exchange(space: &DesignSpace, w: &[f64], j: usize, k: usize, points: usize) -> (f64, f64) {
    let line = ExchangeLine::new(space, w, j, k);
    grid_max(-w[k], w[j], points, |d| line.log_det(d))
}

pub fn grid_max_vertex(space: &DesignSpace, w: &[f64], i: usize, points: usize) -> (f64, f64) {
    let line = VertexLine::new(space, w, i);
    grid_max(0.0, 1.0, points, |d| line.log_det(d))
}
