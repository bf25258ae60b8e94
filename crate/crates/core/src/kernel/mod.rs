//! The heterogeneous nonlocal kernel in one dimension.
//!
//! With β = (s(x)+s(y))/2, ν = 1/2 + β and r = |x−y|:
//!
//! * C(x,y) = 2^ν κ^ν / (2√π |Γ(−β)|)
//! * Φ(x,y) = C·K_ν(κr)·r^ν, finite at r = 0
//! * γ(x,y) = Φ / r^{2ν}

pub mod bessel;
pub mod check;

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

pub use bessel::{bessel_k, bessel_k_scaled};

use crate::error::{Error, Result};
use crate::smoothness::SmoothnessProfile;

/// Below this value of κr, Φ uses its r → 0 limit.
///
/// The direct product K_ν(κr)·r^ν stays accurate far below this; the limit itself carries a
/// relative error of order (κr)^{2ν}, so the switch sits where that term is negligible.
pub const PHI_LIMIT_THRESHOLD: f64 = 1e-12;

fn sqrt_pi() -> f64 {
    PI.sqrt()
}

/// |Γ(−β)| = Γ(1−β)/β for β ∈ (0, 1).
pub fn abs_gamma_neg(beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::domain(format!("abs_gamma_neg requires 0 < beta < 1, got {beta}")));
    }
    Ok(abs_gamma_neg_unchecked(beta))
}

fn abs_gamma_neg_unchecked(beta: f64) -> f64 {
    gamma(1.0 - beta) / beta
}

/// C as a function of β alone.
fn prefactor_for(kappa: f64, beta: f64) -> f64 {
    let nu = 0.5 + beta;
    (2.0 * kappa).powf(nu) / (2.0 * sqrt_pi() * abs_gamma_neg_unchecked(beta))
}

/// κ, μ and the smoothness profile; evaluates C, Φ and γ.
#[derive(Debug, Clone)]
pub struct KernelContext {
    kappa: f64,
    mu: f64,
    profile: SmoothnessProfile,
}

impl KernelContext {
    pub fn new(kappa: f64, mu: f64, profile: SmoothnessProfile) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::config(format!("kernel.kappa must be positive, got {kappa}")));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::config(format!("kernel.mu must be positive, got {mu}")));
        }
        Ok(Self { kappa, mu, profile })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn profile(&self) -> &SmoothnessProfile {
        &self.profile
    }

    pub fn beta(&self, x: f64, y: f64) -> f64 {
        self.profile.beta(x, y)
    }

    pub fn nu(&self, x: f64, y: f64) -> f64 {
        0.5 + self.beta(x, y)
    }

    pub fn prefactor_c(&self, x: f64, y: f64) -> f64 {
        prefactor_for(self.kappa, self.beta(x, y))
    }

    pub fn phi(&self, x: f64, y: f64) -> f64 {
        self.phi_for(self.beta(x, y), (x - y).abs())
    }

    /// Φ for a given β and distance r ≥ 0.
    pub fn phi_for(&self, beta: f64, r: f64) -> f64 {
        FixedOrderKernel::new(self.kappa, beta).phi(r)
    }

    /// lim_{r→0} Φ = C·2^{ν−1}Γ(ν)κ^{−ν}.
    pub fn phi_limit(&self, beta: f64) -> f64 {
        FixedOrderKernel::new(self.kappa, beta).phi_limit
    }

    /// γ(x, y). Evaluating on the diagonal is an error.
    pub fn gamma_kernel(&self, x: f64, y: f64) -> Result<f64> {
        let r = (x - y).abs();
        if !(r > 0.0) {
            return Err(Error::domain(format!("kernel evaluated on the diagonal at x = y = {x}")));
        }
        Ok(self.gamma_for(self.beta(x, y), r))
    }

    /// γ for a given β and r > 0.
    pub fn gamma_for(&self, beta: f64, r: f64) -> f64 {
        FixedOrderKernel::new(self.kappa, beta).gamma(r)
    }

    /// The unnormalised kernel 2^{1/2+β}/(√π|Γ(−β)|)·(κr)^ν K_ν(κr), computed independently of Φ.
    pub fn w_tilde(&self, x: f64, y: f64) -> f64 {
        let beta = self.beta(x, y);
        let nu = 0.5 + beta;
        let z = self.kappa * (x - y).abs();
        let abs_g = gamma(-beta).abs();
        2f64.powf(0.5 + beta) / (sqrt_pi() * abs_g)
            * z.powf(nu)
            * bessel::bessel_k(nu, z).unwrap_or(0.0)
    }

    /// lim_{r→0} γ·r^{1+2β} = 2^{2β}Γ(ν)/(2√π|Γ(−β)|), independent of κ.
    pub fn near_field_limit(beta: f64) -> f64 {
        let nu = 0.5 + beta;
        4f64.powf(beta) * gamma(nu) / (2.0 * sqrt_pi() * abs_gamma_neg_unchecked(beta))
    }
}

/// Kernel with β frozen: the per-point work is one Bessel evaluation.
#[derive(Debug, Clone, Copy)]
pub struct FixedOrderKernel {
    pub kappa: f64,
    pub beta: f64,
    pub nu: f64,
    pub prefactor: f64,
    pub phi_limit: f64,
}

impl FixedOrderKernel {
    pub fn new(kappa: f64, beta: f64) -> Self {
        let nu = 0.5 + beta;
        let prefactor = prefactor_for(kappa, beta);
        let phi_limit = prefactor * 2f64.powf(nu - 1.0) * gamma(nu) * kappa.powf(-nu);
        Self { kappa, beta, nu, prefactor, phi_limit }
    }

    pub fn phi(&self, r: f64) -> f64 {
        let z = self.kappa * r;
        if z < PHI_LIMIT_THRESHOLD {
            return self.phi_limit;
        }
        let (k, scaled) = bessel::bessel_k_parts(self.nu, z);
        let k = if scaled { k * (-z).exp() } else { k };
        self.prefactor * k * r.powf(self.nu)
    }

    pub fn gamma(&self, r: f64) -> f64 {
        let z = self.kappa * r;
        let (k, scaled) = bessel::bessel_k_parts(self.nu, z);
        let k = if scaled { k * (-z).exp() } else { k };
        self.prefactor * k * r.powf(-self.nu)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ctx(profile: SmoothnessProfile, kappa: f64) -> KernelContext {
        KernelContext::new(kappa, 1.0, profile).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn abs_gamma_neg_values() {
        assert!(rel(abs_gamma_neg(0.5).unwrap(), 2.0 * sqrt_pi()) < 1e-14);
        for &b in &[0.05, 0.35, 0.6, 0.85, 0.99] {
            let v = abs_gamma_neg(b).unwrap();
            // Reflection: Γ(1−β)Γ(β) = π/sin(πβ).
            let reflected = PI / ((PI * b).sin() * gamma(b)) / b;
            assert!(rel(v, reflected) < 1e-13, "beta={b}");
            assert!(rel(v, gamma(-b).abs()) < 1e-13);
        }
        // Γ(0.65) = 1.38479510...; |Γ(−0.35)| = Γ(0.65)/0.35.
        assert!(rel(abs_gamma_neg(0.35).unwrap(), 1.384_795_102_026_509_9 / 0.35) < 1e-10);
        assert!(abs_gamma_neg(0.0).is_err());
        assert!(abs_gamma_neg(1.0).is_err());
    }

    #[test]
    fn prefactor_examples() {
        let c = ctx(SmoothnessProfile::constant(0.5).unwrap(), 1.0);
        assert!(rel(c.prefactor_c(0.3, -1.0), 1.0 / (2.0 * PI)) < 1e-14);
        assert!(c.prefactor_c(0.3, 0.3).is_finite());
        let step = ctx(SmoothnessProfile::step(0.35, 0.85).unwrap(), 2.5);
        let want = 2f64.powf(1.1) / (2.0 * sqrt_pi() * gamma(0.4) / 0.6) * 2.5f64.powf(1.1);
        assert!(rel(step.prefactor_c(-1.0, 1.0), want) < 1e-14);
    }

    #[test]
    fn phi_limit_and_continuity() {
        let c = ctx(SmoothnessProfile::constant(0.5).unwrap(), 1.0);
        assert!(rel(c.phi(0.2, 0.2), 1.0 / (2.0 * PI)) < 1e-14);
        for &beta in &[0.35, 0.5, 0.6, 0.85] {
            let k = FixedOrderKernel::new(2.5, beta);
            for &r in &[1e-13, 1e-11, 1e-9] {
                let d = rel(k.phi(r), k.phi_limit);
                let bound = 2.0 * (2.5 * r).powf(2.0 * k.nu.min(1.0)) * (1.0 + (2.5 * r).ln().abs());
                assert!(d < bound.max(1e-13), "beta={beta} r={r} d={d}");
            }
        }
    }

    #[test]
    fn phi_large_argument_bound() {
        let c = ctx(SmoothnessProfile::constant(0.5).unwrap(), 2.5);
        for &r in &[8.0, 10.0, 20.0] {
            let beta = 0.5;
            let nu = 1.0;
            let cc = c.prefactor_c(0.0, r);
            let asym = cc * (PI / (2.0 * 2.5 * r)).sqrt() * (-2.5 * r).exp() * r.powf(nu);
            // K_1(z) ≥ √(π/2z)e^{−z}; the gap is 3/(8z) to leading order.
            let phi = c.phi_for(beta, r);
            assert!(phi >= asym * (1.0 - 1e-8));
            assert!(rel(phi, asym * (1.0 + 3.0 / (8.0 * 2.5 * r))) < 0.01);
        }
    }

    #[test]
    fn gamma_examples() {
        let c = ctx(SmoothnessProfile::constant(0.5).unwrap(), 1.0);
        let r = 1e-7;
        assert!(rel(c.gamma_kernel(0.0, r).unwrap() * r * r, 1.0 / (2.0 * PI)) < 1e-6);
        assert!(rel(KernelContext::near_field_limit(0.5), 1.0 / (2.0 * PI)) < 1e-14);
        assert!(c.gamma_kernel(0.3, 0.3).is_err());
    }

    #[test]
    fn gamma_relativistic_closed_form() {
        // s = 1/2: γ = κK_1(κr)/(2πr).
        let c = ctx(SmoothnessProfile::constant(0.5).unwrap(), 2.5);
        for &r in &[0.01, 0.3, 2.0] {
            let want = 2.5 * bessel_k(1.0, 2.5 * r).unwrap() / (2.0 * PI * r);
            assert!(rel(c.gamma_for(0.5, r), want) < 1e-14);
        }
    }

    #[test]
    fn kernel_with_zero_bessel_is_finite() {
        let c = ctx(SmoothnessProfile::constant(0.5).unwrap(), 500.0);
        assert_eq!(c.gamma_for(0.5, 3.0), 0.0);
    }

    #[test]
    fn context_validation() {
        let p = SmoothnessProfile::constant(0.5).unwrap();
        assert!(KernelContext::new(0.0, 1.0, p.clone()).is_err());
        assert!(KernelContext::new(1.0, -1.0, p).is_err());
    }

    fn any_profile() -> impl Strategy<Value = SmoothnessProfile> {
        prop_oneof![
            Just(SmoothnessProfile::step(0.35, 0.85).unwrap()),
            Just(SmoothnessProfile::gaussian_bump(0.35, 0.85, 0.9, 3.0).unwrap()),
            Just(SmoothnessProfile::oscillatory_ramp(0.44075, 0.7594, 0.15, 3.0).unwrap()),
            (0.05f64..0.95).prop_map(|s| SmoothnessProfile::constant(s).unwrap()),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn symmetric_kernel(p in any_profile(), x in -4.0f64..4.0, y in -4.0f64..4.0) {
            prop_assume!(x != y);
            let c = ctx(p, 2.5);
            prop_assert_eq!(c.gamma_kernel(x, y).unwrap(), c.gamma_kernel(y, x).unwrap());
            prop_assert_eq!(c.phi(x, y), c.phi(y, x));
            prop_assert_eq!(c.prefactor_c(x, y), c.prefactor_c(y, x));
            prop_assert!(c.gamma_kernel(x, y).unwrap() > 0.0);
        }

        #[test]
        fn consistent_with_unnormalised_kernel(p in any_profile(), x in -4.0f64..4.0, y in -4.0f64..4.0) {
            prop_assume!((x - y).abs() > 1e-9);
            let c = ctx(p, 2.5);
            let r = (x - y).abs();
            let beta = c.beta(x, y);
            let lhs = 2.0 * c.gamma_kernel(x, y).unwrap() * r.powf(1.0 + 2.0 * beta);
            let rhs = c.w_tilde(x, y);
            prop_assert!(rel(lhs, rhs) < 1e-12, "lhs={} rhs={}", lhs, rhs);
        }
    }
}
