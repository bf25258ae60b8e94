//! Modified Bessel function of the second kind K_ν(z) for real order ν ∈ [0, 2], z > 0.
//!
//! Temme's series for z ≤ 2 and Steed's continued fraction for z > 2 give K_μ and K_{μ+1}
//! with |μ| ≤ 1/2; forward recurrence then reaches ν.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const EPS: f64 = 1e-16;
const MAX_ITER: usize = 10_000;

pub const MAX_ORDER: f64 = 2.0;

/// K_ν(z). Returns a domain error for z ≤ 0 or ν outside [0, 2].
pub fn bessel_k(nu: f64, z: f64) -> Result<f64> {
    check_args(nu, z)?;
    let (k, scaled) = bessel_k_parts(nu, z);
    Ok(if scaled { k * (-z).exp() } else { k })
}

/// e^z·K_ν(z), finite for large z.
pub fn bessel_k_scaled(nu: f64, z: f64) -> Result<f64> {
    check_args(nu, z)?;
    let (k, scaled) = bessel_k_parts(nu, z);
    Ok(if scaled { k } else { k * z.exp() })
}

fn check_args(nu: f64, z: f64) -> Result<()> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::domain(format!("bessel_k requires z > 0, got {z}")));
    }
    if !(0.0..=MAX_ORDER).contains(&nu) {
        return Err(Error::domain(format!(
            "bessel_k order {nu} outside supported window [0, {MAX_ORDER}]"
        )));
    }
    Ok(())
}

/// Unchecked evaluation. The flag says whether the value carries the factor e^z.
pub(crate) fn bessel_k_parts(nu: f64, z: f64) -> (f64, bool) {
    let n = (nu + 0.5).floor();
    let mu = nu - n;
    let (mut k0, mut k1, scaled) = if z <= 2.0 {
        let (a, b) = temme_series(mu, z);
        (a, b, false)
    } else {
        let (a, b) = steed_cf2_scaled(mu, z);
        (a, b, true)
    };
    for i in 0..n as usize {
        let k2 = 2.0 * (mu + i as f64 + 1.0) / z * k1 + k0;
        k0 = k1;
        k1 = k2;
    }
    (k0, scaled)
}

/// Returns (1/Γ(1+μ), 1/Γ(1−μ), g1, g2) with
/// g1 = (1/Γ(1−μ) − 1/Γ(1+μ))/(2μ) and g2 = (1/Γ(1−μ) + 1/Γ(1+μ))/2.
fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    if mu.abs() < 1e-3 {
        // Taylor coefficients of 1/Γ(1+z).
        const A2: f64 = -0.655_878_071_520_253_9;
        const A3: f64 = -0.042_002_635_034_095_24;
        const A4: f64 = 0.166_538_611_382_291_5;
        const A5: f64 = -0.042_197_734_555_544_34;
        let m2 = mu * mu;
        let g1 = -(EULER_GAMMA + A3 * m2 + A5 * m2 * m2);
        let g2 = 1.0 + A2 * m2 + A4 * m2 * m2;
        (g2 - mu * g1, g2 + mu * g1, g1, g2)
    } else {
        let gp = 1.0 / statrs::function::gamma::gamma(1.0 + mu);
        let gm = 1.0 / statrs::function::gamma::gamma(1.0 - mu);
        (gp, gm, (gm - gp) / (2.0 * mu), 0.5 * (gm + gp))
    }
}

/// (K_μ(z), K_{μ+1}(z)) for |μ| ≤ 1/2, 0 < z ≤ 2.
fn temme_series(mu: f64, z: f64) -> (f64, f64) {
    let half = 0.5 * z;
    let pimu = PI * mu;
    let fact = if pimu.abs() < EPS { 1.0 } else { pimu / pimu.sin() };
    let d = -half.ln();
    let e = mu * d;
    let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
    let (gampl, gammi, g1, g2) = temme_gammas(mu);
    let mut ff = fact * (g1 * e.cosh() + g2 * fact2 * d);
    let mut sum = ff;
    let ee = e.exp();
    let mut p = 0.5 * ee / gampl;
    let mut q = 0.5 / (ee * gammi);
    let mut c = 1.0;
    let dd = half * half;
    let mut sum1 = p;
    let mu2 = mu * mu;
    for i in 1..MAX_ITER {
        let fi = i as f64;
        ff = (fi * ff + p + q) / (fi * fi - mu2);
        c *= dd / fi;
        p /= fi - mu;
        q /= fi + mu;
        let del = c * ff;
        sum += del;
        sum1 += c * (p - fi * ff);
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    (sum, sum1 * 2.0 / z)
}

/// (e^z K_μ(z), e^z K_{μ+1}(z)) for |μ| ≤ 1/2, z ≥ 2.
fn steed_cf2_scaled(mu: f64, z: f64) -> (f64, f64) {
    let mu2 = mu * mu;
    let mut b = 2.0 * (1.0 + z);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25 - mu2;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..MAX_ITER {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            break;
        }
    }
    h *= a1;
    let kmu = (PI / (2.0 * z)).sqrt() / s;
    let k1 = kmu * (mu + z + 0.5 - h) / z;
    (kmu, k1)
}
