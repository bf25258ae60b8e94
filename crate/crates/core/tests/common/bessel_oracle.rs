//! K_ν(z) from its integral representation ∫₀^∞ e^{−z cosh t} cosh(νt) dt.

#![allow(dead_code)]

use varmatern::quadrature::gauss_legendre_01;

/// e^z K_ν(z) by composite 20-point Gauss on a truncated interval.
pub fn scaled(nu: f64, z: f64) -> f64 {
    let rule = gauss_legendre_01(20).unwrap();
    let integrand = |t: f64| {
        let s = (0.5 * t).sinh();
        (-2.0 * z * s * s).exp() * (nu * t).cosh()
    };
    let mut t_max = 1.0;
    while integrand(t_max) > 1e-22 {
        t_max += 1.0;
    }
    let width = (0.5 / z.sqrt()).min(0.25);
    let panels = (t_max / width).ceil() as usize;
    rule.integrate_composite(0.0, t_max, panels, integrand)
}

pub fn value(nu: f64, z: f64) -> f64 {
    scaled(nu, z) * (-z).exp()
}
