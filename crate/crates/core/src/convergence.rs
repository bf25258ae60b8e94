//! Strong-error estimates from coupled samples on three nested meshes.
//!
//! The finest level draws z, forms b = L z, and coarser loads are obtained by successive
//! restriction b_c = Pᵀ b_f. Per-sample solves run in parallel; per-sample errors are reduced
//! in index order so the report does not depend on the worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_stiffness, AssemblyOptions, PairOrders};
use crate::error::{Error, Result};
use crate::kernel::KernelContext;
use crate::linalg::{CholeskyFactor, DenseMatrix};
use crate::mesh::Mesh1D;
use crate::quadrature::{gauss_legendre_01, QuadratureConfig};
use crate::sampler::standard_normal;

/// Coarse-to-fine nodal interpolation between consecutive uniform levels.
///
/// Unknown i of the fine mesh sits at coarse position i/2: even indices coincide with a coarse
/// node, odd ones are midpoints. Both meshes share the unknown interval, so no fine unknown
/// needs a constrained coarse value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Injection {
    n_coarse: usize,
    n_fine: usize,
}

impl Injection {
    pub fn n_coarse(&self) -> usize {
        self.n_coarse
    }

    pub fn n_fine(&self) -> usize {
        self.n_fine
    }

    /// P u_c.
    pub fn prolong(&self, uc: &[f64]) -> Vec<f64> {
        assert_eq!(uc.len(), self.n_coarse, "prolong dimension");
        (0..self.n_fine)
            .map(|i| if i % 2 == 0 { uc[i / 2] } else { 0.5 * (uc[i / 2] + uc[i / 2 + 1]) })
            .collect()
    }

    /// Pᵀ b_f.
    pub fn restrict(&self, bf: &[f64]) -> Vec<f64> {
        assert_eq!(bf.len(), self.n_fine, "restrict dimension");
        (0..self.n_coarse)
            .map(|j| {
                let i = 2 * j;
                let mut v = bf[i];
                if i > 0 {
                    v += 0.5 * bf[i - 1];
                }
                if i + 1 < self.n_fine {
                    v += 0.5 * bf[i + 1];
                }
                v
            })
            .collect()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut p = DenseMatrix::zeros(self.n_fine, self.n_coarse);
        for j in 0..self.n_coarse {
            let mut e = vec![0.0; self.n_coarse];
            e[j] = 1.0;
            for (i, v) in self.prolong(&e).into_iter().enumerate() {
                p[(i, j)] = v;
            }
        }
        p
    }
}

/// Injection from `coarse` to `fine`; the fine mesh must be one level finer on the same domain.
pub fn injection(coarse: &Mesh1D, fine: &Mesh1D) -> Result<Injection> {
    if fine.level() != coarse.level() + 1
        || fine.r_int() != coarse.r_int()
        || fine.r_ext() != coarse.r_ext()
    {
        return Err(Error::Dimension(format!(
            "meshes at levels {} and {} are not consecutive on one domain",
            coarse.level(),
            fine.level()
        )));
    }
    Ok(Injection { n_coarse: coarse.n_unknowns(), n_fine: fine.n_unknowns() })
}

/// Loads on every level for one sample, finest first: b₀ = L z, b_{j+1} = P_jᵀ b_j.
pub fn coupled_load(l_fine: &CholeskyFactor, chain: &[Injection], seed: u64, k: u64) -> Vec<Vec<f64>> {
    let mut loads = vec![l_fine.lower_mul(&standard_normal(l_fine.dim(), seed, k))];
    for p in chain {
        let next = p.restrict(loads.last().expect("non-empty"));
        loads.push(next);
    }
    loads
}

/// `coupled_load` for k = 0..m.
pub fn coupled_loads(
    l_fine: &CholeskyFactor,
    chain: &[Injection],
    m: usize,
    seed: u64,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let mut expected = l_fine.dim();
    for p in chain {
        if p.n_fine != expected {
            return Err(Error::Dimension("injection chain does not match the hierarchy".into()));
        }
        expected = p.n_coarse;
    }
    Ok((0..m).into_par_iter().map(|k| coupled_load(l_fine, chain, seed, k as u64)).collect())
}

/// E = [(1/m) Σ d_kᵀ M d_k]^{1/2} with d_k = U_f⁽ᵏ⁾ − P U_c⁽ᵏ⁾.
pub fn level_error(
    fine: &[Vec<f64>],
    coarse: &[Vec<f64>],
    p: &Injection,
    m_fine: &DenseMatrix,
) -> Result<f64> {
    if fine.len() != coarse.len() || fine.is_empty() {
        return Err(Error::Dimension(format!(
            "batches of {} and {} samples",
            fine.len(),
            coarse.len()
        )));
    }
    let mut sum = 0.0;
    for (uf, uc) in fine.iter().zip(coarse) {
        if uf.len() != p.n_fine || uc.len() != p.n_coarse || m_fine.rows() != p.n_fine {
            return Err(Error::Dimension("sample length does not match the injection".into()));
        }
        let d: Vec<f64> = uf.iter().zip(p.prolong(uc)).map(|(a, b)| a - b).collect();
        sum += m_fine.bilinear(&d, &d);
    }
    Ok((sum / fine.len() as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    #[default]
    MassMatrix,
    Quadrature,
}

/// Squared L2 norm over D of the piecewise-linear function with nodal values d (zero outside).
fn squared_norm(mesh: &Mesh1D, d: &[f64], norm: NormKind, points: usize) -> Result<f64> {
    let h = mesh.h();
    let mut sum = 0.0;
    match norm {
        NormKind::MassMatrix => {
            // Element-wise dᵀMd: h/3 (a² + ab + b²).
            for w in d.windows(2) {
                sum += h / 3.0 * (w[0] * w[0] + w[0] * w[1] + w[1] * w[1]);
            }
        }
        NormKind::Quadrature => {
            let rule = gauss_legendre_01(points)?;
            for w in d.windows(2) {
                for (x, wq) in rule.iter() {
                    let v = w[0] * (1.0 - x) + w[1] * x;
                    sum += h * wq * v * v;
                }
            }
        }
    }
    Ok(sum)
}

/// Parameters of a rate estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceSettings {
    /// Three consecutive levels, finest first.
    pub levels: Vec<u32>,
    pub m: usize,
    pub seed: u64,
    pub norm: NormKind,
    /// Gauss points per element for the quadrature norm.
    pub quad_points: usize,
}

impl Default for ConvergenceSettings {
    fn default() -> Self {
        Self { levels: vec![9, 8, 7], m: 1000, seed: 2024, norm: NormKind::MassMatrix, quad_points: 3 }
    }
}

impl ConvergenceSettings {
    pub fn validate(&self) -> Result<()> {
        let ok = self.levels.len() == 3
            && self.levels[0] == self.levels[1] + 1
            && self.levels[1] == self.levels[2] + 1;
        if !ok {
            return Err(Error::config(format!(
                "convergence.levels = {:?} must be three consecutive levels, finest first",
                self.levels
            )));
        }
        if self.m == 0 {
            return Err(Error::config("convergence.m must be positive"));
        }
        if self.quad_points == 0 || self.quad_points > 64 {
            return Err(Error::config("convergence.quad_points must lie in 1..=64"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    pub levels: [u32; 3],
    pub m: usize,
    pub seed: u64,
    pub norm: NormKind,
    /// E_ℓ and E_{ℓ−1}.
    pub errors: [f64; 2],
    pub rate: f64,
    pub orders: Vec<PairOrders>,
    /// Per-sample squared differences for (ℓ, ℓ−1) and (ℓ−1, ℓ−2).
    #[serde(skip)]
    pub per_sample: Vec<[f64; 2]>,
}

struct Level {
    mesh: Mesh1D,
    chol_a: CholeskyFactor,
    chol_m: CholeskyFactor,
    orders: PairOrders,
}

/// Runs coupled sampling on the three levels and returns r̂ = log2(E_{ℓ−1}/E_ℓ).
pub fn estimate_rate(
    r_int: f64,
    r_ext: f64,
    ctx: &KernelContext,
    quad: &QuadratureConfig,
    opts: &AssemblyOptions,
    settings: &ConvergenceSettings,
) -> Result<RateReport> {
    settings.validate()?;
    let mut levels = Vec::with_capacity(3);
    for &l in &settings.levels {
        let stage = format!("assembly at level {l}");
        let mesh = Mesh1D::build_uniform(r_int, r_ext, l).map_err(|e| e.in_stage(&stage))?;
        let sys = assemble_stiffness(&mesh, ctx, quad, opts).map_err(|e| e.in_stage(&stage))?;
        log::info!("assembled level {l}: N = {}", mesh.n_unknowns());
        levels.push(Level {
            mesh,
            chol_a: sys.chol_a,
            chol_m: sys.chol_m,
            orders: sys.quadrature.orders,
        });
    }
    let p01 = injection(&levels[1].mesh, &levels[0].mesh)?;
    let p12 = injection(&levels[2].mesh, &levels[1].mesh)?;
    let chain = [p01, p12];
    let inv_mu = 1.0 / ctx.mu();

    let per_sample: Vec<Result<[f64; 2]>> = (0..settings.m)
        .into_par_iter()
        .map(|k| {
            let loads = coupled_load(&levels[0].chol_m, &chain, settings.seed, k as u64);
            let u: Vec<Vec<f64>> = loads
                .into_iter()
                .zip(&levels)
                .map(|(mut b, lv)| {
                    lv.chol_a.solve_in_place(&mut b);
                    b.iter_mut().for_each(|v| *v *= inv_mu);
                    b
                })
                .collect();
            let d0: Vec<f64> = u[0].iter().zip(p01.prolong(&u[1])).map(|(a, b)| a - b).collect();
            let d1: Vec<f64> = u[1].iter().zip(p12.prolong(&u[2])).map(|(a, b)| a - b).collect();
            Ok([
                squared_norm(&levels[0].mesh, &d0, settings.norm, settings.quad_points)?,
                squared_norm(&levels[1].mesh, &d1, settings.norm, settings.quad_points)?,
            ])
        })
        .collect();
    let per_sample: Vec<[f64; 2]> =
        per_sample.into_iter().collect::<Result<_>>().map_err(|e| e.in_stage("sampling"))?;

    let m = settings.m as f64;
    let e0 = (per_sample.iter().map(|v| v[0]).sum::<f64>() / m).sqrt();
    let e1 = (per_sample.iter().map(|v| v[1]).sum::<f64>() / m).sqrt();
    if !(e0 > 0.0 && e1 > 0.0 && e0.is_finite() && e1.is_finite()) {
        return Err(Error::domain(format!("level errors {e0}, {e1} are not positive")).in_stage("rate"));
    }
    Ok(RateReport {
        levels: [settings.levels[0], settings.levels[1], settings.levels[2]],
        m: settings.m,
        seed: settings.seed,
        norm: settings.norm,
        errors: [e0, e1],
        rate: (e1 / e0).log2(),
        orders: levels.iter().map(|l| l.orders).collect(),
        per_sample,
    })
}
