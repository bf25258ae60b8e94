//! Closed-form Matérn covariance baselines in one dimension.

use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::kernel::bessel_k;

/// Matérn parameters together with the fractional order they were derived from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaternParams {
    pub nu: f64,
    pub kappa: f64,
    pub sigma2: f64,
    /// Order s (or its spatial average) behind ν = 2s − 1/2.
    pub s: f64,
    pub mu: f64,
}

impl MaternParams {
    /// Parameters of the Whittle–Matérn field of order s in one dimension.
    pub fn from_order(s: f64, kappa: f64, mu: f64) -> Result<Self> {
        let sigma2 = whittle_variance(s, kappa, mu)?;
        Ok(Self { nu: 2.0 * s - 0.5, kappa, sigma2, s, mu })
    }
}

/// σ² = Γ(ν) / (√(4π) κ^{2ν} Γ(ν + 1/2) μ²) with ν = 2s − 1/2.
pub fn whittle_variance(s: f64, kappa: f64, mu: f64) -> Result<f64> {
    let nu = 2.0 * s - 0.5;
    if !(nu > 0.0) {
        return Err(Error::domain(format!(
            "smoothness nonpositive; need s > d/4 = 0.25 (got s = {s})"
        )));
    }
    if !(kappa > 0.0 && kappa.is_finite()) || !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::domain(format!("need kappa > 0 and mu > 0 (got {kappa}, {mu})")));
    }
    Ok(gamma(nu)
        / ((4.0 * std::f64::consts::PI).sqrt() * kappa.powf(2.0 * nu) * gamma(nu + 0.5) * mu * mu))
}

/// ϱ(r) = 2^{1−ν} σ² / Γ(ν) · (κr)^ν K_ν(κr), with ϱ(0) = σ².
pub fn matern_cov(r: f64, p: &MaternParams) -> f64 {
    let z = p.kappa * r.abs();
    if z == 0.0 {
        return p.sigma2;
    }
    match bessel_k(p.nu, z) {
        Ok(k) => 2f64.powf(1.0 - p.nu) * p.sigma2 / gamma(p.nu) * z.powf(p.nu) * k,
        // Only reachable for z beyond the representable range, where ϱ has underflowed.
        Err(_) => 0.0,
    }
}

/// (r, ϱ(r)) on `points` equally spaced distances in [0, r_max].
pub fn matern_curve(p: &MaternParams, r_max: f64, points: usize) -> Vec<(f64, f64)> {
    let step = if points > 1 { r_max / (points - 1) as f64 } else { 0.0 };
    (0..points)
        .map(|i| {
            let r = step * i as f64;
            (r, matern_cov(r, p))
        })
        .collect()
}
