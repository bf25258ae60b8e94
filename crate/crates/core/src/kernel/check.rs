//! Sweeps that record the empirical constants of the kernel's two-regime bounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{bessel, KernelContext};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RangeStats {
    pub count: usize,
    pub min: f64,
    pub max: f64,
}

impl RangeStats {
    fn new() -> Self {
        Self { count: 0, min: f64::INFINITY, max: f64::NEG_INFINITY }
    }

    fn push(&mut self, v: f64) {
        self.count += 1;
        self.min = self.min.min(v);
        self.max = self.max.max(v);
    }

    pub fn ratio(&self) -> f64 {
        self.max / self.min
    }

    /// Non-empty, strictly positive and finite.
    pub fn is_positive_interval(&self) -> bool {
        self.count > 0 && self.min > 0.0 && self.max.is_finite()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TwoRegimeReport {
    pub z0: f64,
    pub kappa: f64,
    /// γ·r^{1+2β} for r ≤ z0/κ.
    pub near: RangeStats,
    /// γ·r^{1/2}·e^{κr} for r ≥ z0/κ.
    pub far: RangeStats,
    /// Largest relative deviation of γ·r^{1+2β} from its r → 0 limit at r = `limit_r`.
    pub limit_r: f64,
    pub limit_max_rel_err: f64,
}

/// Samples `pairs` point pairs in [−r_ext, r_ext]. Half the pairs are uniform; the other
/// half place y at a log-uniform distance below z0/κ so the near regime is well covered.
pub fn two_regime_sweep(
    ctx: &KernelContext,
    r_ext: f64,
    pairs: usize,
    z0: f64,
    seed: u64,
) -> TwoRegimeReport {
    let kappa = ctx.kappa();
    let r0 = z0 / kappa;
    let limit_r = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut near = RangeStats::new();
    let mut far = RangeStats::new();
    let mut limit_err: f64 = 0.0;
    for k in 0..pairs {
        let x = rng.gen_range(-r_ext..r_ext);
        let y = if k % 2 == 0 {
            rng.gen_range(-r_ext..r_ext)
        } else {
            let r = (rng.gen_range((1e-8f64).ln()..r0.ln())).exp();
            let y = if rng.gen::<bool>() { x + r } else { x - r };
            if y.abs() > r_ext {
                x - (y - x)
            } else {
                y
            }
        };
        let r = (x - y).abs();
        if r == 0.0 {
            continue;
        }
        let beta = ctx.beta(x, y);
        let g = ctx.gamma_for(beta, r);
        if r <= r0 {
            near.push(g * r.powf(1.0 + 2.0 * beta));
        }
        if r >= r0 {
            far.push(g * r.sqrt() * (kappa * r).exp());
        }
        let yl = if x + limit_r <= r_ext { x + limit_r } else { x - limit_r };
        let bl = ctx.beta(x, yl);
        let rl = (x - yl).abs();
        let lim = KernelContext::near_field_limit(bl);
        let got = ctx.gamma_for(bl, rl) * rl.powf(1.0 + 2.0 * bl);
        limit_err = limit_err.max(((got - lim) / lim).abs());
    }
    TwoRegimeReport { z0, kappa, near, far, limit_r, limit_max_rel_err: limit_err }
}

#[derive(Debug, Clone, Serialize)]
pub struct BesselBoundRow {
    pub nu: f64,
    /// K_ν(z)·z^ν over z ≤ z0.
    pub small: RangeStats,
    /// K_ν(z)·z^{1/2}·e^z over z ≥ z0.
    pub large: RangeStats,
}

/// Records K_ν(z)·z^ν on (0, z0] and K_ν(z)·z^{1/2}e^z on [z0, z_max] for each ν.
pub fn bessel_bound_sweep(nus: &[f64], z0: f64, z_max: f64) -> Vec<BesselBoundRow> {
    let points = 400;
    nus.iter()
        .map(|&nu| {
            let mut small = RangeStats::new();
            let mut large = RangeStats::new();
            for i in 0..=points {
                let t = i as f64 / points as f64;
                let z = (1e-8f64.ln() + t * (z0.ln() - 1e-8f64.ln())).exp();
                let (k, scaled) = bessel::bessel_k_parts(nu, z);
                let k = if scaled { k * (-z).exp() } else { k };
                small.push(k * z.powf(nu));
                let z = z0 + t * (z_max - z0);
                let (k, scaled) = bessel::bessel_k_parts(nu, z);
                let ks = if scaled { k } else { k * z.exp() };
                large.push(ks * z.sqrt());
            }
            BesselBoundRow { nu, small, large }
        })
        .collect()
}
