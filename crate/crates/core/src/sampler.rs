//! White-noise loads, field samples, and covariances.
//!
//! Sample k draws its standard normal vector from a ChaCha8 stream selected by k, so any sample
//! can be regenerated on its own and batches do not depend on the worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::AssembledSystem;
use crate::error::{Error, Result};
use crate::linalg::{inv_triple_product_factored, CholeskyFactor, DenseMatrix};
use crate::mesh::Mesh1D;

/// Standard normal vector of length n for sample k.
pub fn standard_normal(n: usize, seed: u64, k: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// b⁽ᵏ⁾ = L z⁽ᵏ⁾ for k = 0..m.
pub fn draw_noise(l: &CholeskyFactor, m: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = l.dim();
    (0..m)
        .into_par_iter()
        .map(|k| l.lower_mul(&standard_normal(n, seed, k as u64)))
        .collect()
}

/// Field samples at the unknowns; exterior values are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub coords: Vec<f64>,
    pub level: u32,
    pub seed: u64,
    pub samples: Vec<Vec<f64>>,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// u⁽ᵏ⁾ = A⁻¹ L z⁽ᵏ⁾ / μ.
pub fn sample_fields(sys: &AssembledSystem, m: usize, seed: u64) -> Result<SampleBatch> {
    let n = sys.mesh.n_unknowns();
    let inv_mu = 1.0 / sys.ctx.mu();
    let samples: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|k| {
            let mut u = sys.chol_m.lower_mul(&standard_normal(n, seed, k as u64));
            sys.chol_a.solve_in_place(&mut u);
            u.iter_mut().for_each(|v| *v *= inv_mu);
            u
        })
        .collect();
    if samples.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::domain("non-finite sample value"));
    }
    Ok(SampleBatch { coords: sys.mesh.unknown_coords(), level: sys.mesh.level(), seed, samples })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceKind {
    Analytic,
    Empirical,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceMeta {
    pub kappa: f64,
    pub mu: f64,
    pub s_lower: f64,
    pub s_upper: f64,
    pub level: u32,
    pub m: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct CovarianceResult {
    pub kind: CovarianceKind,
    pub matrix: DenseMatrix,
    pub coords: Vec<f64>,
    pub r_int: f64,
    pub meta: CovarianceMeta,
}

fn meta(sys: &AssembledSystem, m: Option<usize>) -> CovarianceMeta {
    let p = sys.ctx.profile();
    CovarianceMeta {
        kappa: sys.ctx.kappa(),
        mu: sys.ctx.mu(),
        s_lower: p.s_lower(),
        s_upper: p.s_upper(),
        level: sys.mesh.level(),
        m,
    }
}

/// C = A⁻¹ M A⁻ᵀ / μ².
pub fn analytic_covariance(sys: &AssembledSystem) -> Result<CovarianceResult> {
    let mut c = inv_triple_product_factored(&sys.chol_a, &sys.m)?;
    let mu = sys.ctx.mu();
    c.scale(1.0 / (mu * mu));
    Ok(CovarianceResult {
        kind: CovarianceKind::Analytic,
        matrix: c,
        coords: sys.mesh.unknown_coords(),
        r_int: sys.mesh.r_int(),
        meta: meta(sys, None),
    })
}

/// (1/m) Σ v vᵀ; the mean is known to be zero.
pub fn second_moment(vectors: &[Vec<f64>], n: usize) -> Result<DenseMatrix> {
    let mut c = DenseMatrix::zeros(n, n);
    if vectors.is_empty() {
        return Ok(c);
    }
    for v in vectors {
        if v.len() != n {
            return Err(Error::Dimension(format!("vector of length {} for N = {n}", v.len())));
        }
        for i in 0..n {
            let vi = v[i];
            let row = &mut c.row_mut(i)[..=i];
            for (cij, vj) in row.iter_mut().zip(v) {
                *cij += vi * vj;
            }
        }
    }
    c.scale(1.0 / vectors.len() as f64);
    c.symmetrize_from_lower();
    Ok(c)
}

/// Empirical covariance of a batch drawn from `sys`.
pub fn empirical_covariance(sys: &AssembledSystem, batch: &SampleBatch) -> Result<CovarianceResult> {
    Ok(CovarianceResult {
        kind: CovarianceKind::Empirical,
        matrix: second_moment(&batch.samples, batch.dim())?,
        coords: batch.coords.clone(),
        r_int: sys.mesh.r_int(),
        meta: meta(sys, Some(batch.len())),
    })
}

/// One row of a covariance matrix paired with the node coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceSlice {
    pub x0_requested: f64,
    pub x0: f64,
    pub index: usize,
    pub snapped: bool,
    pub coords: Vec<f64>,
    pub values: Vec<f64>,
}

/// Row of C at the node of x0; off-node x0 is moved to the nearest node with a warning.
pub fn covariance_slice(c: &CovarianceResult, x0: f64) -> Result<CovarianceSlice> {
    let r = c.r_int;
    if !(x0 >= -r && x0 <= r) {
        return Err(Error::domain(format!("slice point {x0} lies outside D = [-{r}, {r}]")));
    }
    let n = c.coords.len();
    let step = if n > 1 { c.coords[1] - c.coords[0] } else { 1.0 };
    let index = (((x0 + r) / step).round() as usize).min(n - 1);
    let node = c.coords[index];
    let snapped = (node - x0).abs() > 1e-12 * step.max(1.0);
    if snapped {
        log::warn!("slice point {x0} is not a node; using nearest node {node}");
    }
    Ok(CovarianceSlice {
        x0_requested: x0,
        x0: if snapped { node } else { x0 },
        index,
        snapped,
        coords: c.coords.clone(),
        values: c.matrix.row(index).to_vec(),
    })
}

/// Slice at the node nearest to x0 of a mesh's unknowns, for callers without a result.
pub fn slice_index(mesh: &Mesh1D, x0: f64) -> Option<usize> {
    mesh.nearest_unknown(x0).map(|(i, _)| i)
}
