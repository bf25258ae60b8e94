//! Gauss–Legendre rules on [0,1] and the order-selection rule for near-field blocks.

use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule1D {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule1D {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Integrates `f` over [a, b].
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let len = b - a;
        self.iter().map(|(x, w)| w * f(a + len * x)).sum::<f64>() * len
    }

    /// Composite rule: `panels` equal sub-intervals of [a, b].
    pub fn integrate_composite(
        &self,
        a: f64,
        b: f64,
        panels: usize,
        mut f: impl FnMut(f64) -> f64,
    ) -> f64 {
        let width = (b - a) / panels as f64;
        (0..panels)
            .map(|p| {
                let lo = a + width * p as f64;
                let hi = if p + 1 == panels { b } else { lo + width };
                self.integrate(lo, hi, &mut f)
            })
            .sum()
    }
}

/// Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
fn legendre_rule(n: usize) -> QuadratureRule1D {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                let (_, d) = legendre_and_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    QuadratureRule1D { nodes, weights }
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn build_01(n: usize) -> QuadratureRule1D {
    let r = legendre_rule(n);
    let mut nodes: Vec<f64> = r.nodes.iter().map(|x| 0.5 * (1.0 + x)).collect();
    let mut weights: Vec<f64> = r.weights.iter().map(|w| 0.5 * w).collect();
    // Force exact mirror symmetry about 1/2.
    for i in 0..n / 2 {
        let j = n - 1 - i;
        nodes[j] = 1.0 - nodes[i];
        let w = 0.5 * (weights[i] + weights[j]);
        weights[i] = w;
        weights[j] = w;
    }
    QuadratureRule1D { nodes, weights }
}

/// Gauss–Legendre rule with `n` points mapped to [0,1]. Rules are cached.
pub fn gauss_legendre_01(n: usize) -> Result<&'static QuadratureRule1D> {
    static RULES: OnceLock<Vec<QuadratureRule1D>> = OnceLock::new();
    if !(1..=MAX_ORDER).contains(&n) {
        return Err(Error::domain(format!(
            "quadrature order {n} outside 1..={MAX_ORDER}"
        )));
    }
    let rules = RULES.get_or_init(|| (1..=MAX_ORDER).map(build_01).collect());
    Ok(&rules[n - 1])
}

/// How the Duffy grading exponent is chosen for a near-field element pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Grading {
    /// Upper bound of β over the two elements of the pair.
    #[default]
    Local,
    /// Global upper bound s̄ of the profile.
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub c: f64,
    pub n_min: usize,
    pub n_max: usize,
    pub n_override: Option<usize>,
    /// Target convergence rate r in the order rule; `None` means 2·s_lower − 1/2.
    pub target_rate: Option<f64>,
    pub grading: Grading,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            n_min: 4,
            n_max: MAX_ORDER,
            n_override: None,
            target_rate: None,
            grading: Grading::Local,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::config(format!("quadrature.c must be positive, got {}", self.c)));
        }
        if self.n_min < 1 || self.n_max > MAX_ORDER || self.n_min > self.n_max {
            return Err(Error::config(format!(
                "quadrature.n_min/n_max must satisfy 1 <= n_min <= n_max <= {MAX_ORDER}, got {}/{}",
                self.n_min, self.n_max
            )));
        }
        if let Some(n) = self.n_override {
            if !(1..=MAX_ORDER).contains(&n) {
                return Err(Error::config(format!(
                    "quadrature.n_override must lie in 1..={MAX_ORDER}, got {n}"
                )));
            }
        }
        Ok(())
    }

    /// Order used for a mesh of width `h` and a profile with the given bounds.
    pub fn order_for(&self, h: f64, s_lower: f64, s_upper: f64) -> usize {
        if let Some(n) = self.n_override {
            return n;
        }
        let r = self.target_rate.unwrap_or(2.0 * s_lower - 0.5);
        quadrature_order_clamped(h, s_upper, r, self.c, self.n_min, self.n_max)
    }
}

/// n = ceil(c·ln(1/h)·(r + 2·s_upper)) clamped to [4, 64].
pub fn quadrature_order(h: f64, s_upper: f64, c: f64, target_rate: f64) -> usize {
    quadrature_order_clamped(h, s_upper, target_rate, c, 4, MAX_ORDER)
}

fn quadrature_order_clamped(
    h: f64,
    s_upper: f64,
    r: f64,
    c: f64,
    n_min: usize,
    n_max: usize,
) -> usize {
    let raw = (c * (1.0 / h).ln() * (r + 2.0 * s_upper)).ceil();
    if !raw.is_finite() || raw < n_min as f64 {
        n_min
    } else if raw > n_max as f64 {
        n_max
    } else {
        raw as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_orders_closed_form() {
        let r1 = gauss_legendre_01(1).unwrap();
        assert_eq!(r1.nodes, vec![0.5]);
        assert!((r1.weights[0] - 1.0).abs() < 1e-15);
        let r2 = gauss_legendre_01(2).unwrap();
        let d = 0.5 / 3f64.sqrt();
        assert!((r2.nodes[0] - (0.5 - d)).abs() < 1e-15);
        assert!((r2.nodes[1] - (0.5 + d)).abs() < 1e-15);
        assert!((r2.weights[0] - 0.5).abs() < 1e-15);
        assert!((r2.weights[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn exactness_degree() {
        for n in 1..=MAX_ORDER {
            let rule = gauss_legendre_01(n).unwrap();
            let total: f64 = rule.weights.iter().sum();
            assert!((total - 1.0).abs() < 1e-13, "n={n}");
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            for p in [0, 1, 2 * n - 1] {
                let q: f64 = rule.iter().map(|(x, w)| w * x.powi(p as i32)).sum();
                let exact = 1.0 / (p as f64 + 1.0);
                assert!((q - exact).abs() < 1e-13, "n={n} p={p} err={}", q - exact);
            }
        }
        let r8 = gauss_legendre_01(8).unwrap();
        let q: f64 = r8.iter().map(|(x, w)| w * x.powi(7)).sum();
        assert!((q - 0.125).abs() < 1e-14);
    }

    #[test]
    fn nodes_symmetric_weights_palindromic() {
        for n in 1..=MAX_ORDER {
            let r = gauss_legendre_01(n).unwrap();
            for i in 0..n {
                let j = n - 1 - i;
                assert!((r.nodes[i] + r.nodes[j] - 1.0).abs() <= f64::EPSILON);
                assert_eq!(r.weights[i], r.weights[j]);
            }
            assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
            assert!(r.nodes[0] > 0.0 && r.nodes[n - 1] < 1.0);
        }
    }

    #[test]
    fn order_out_of_range() {
        assert!(gauss_legendre_01(0).is_err());
        assert!(gauss_legendre_01(65).is_err());
    }

    #[test]
    fn order_rule_examples() {
        assert_eq!(quadrature_order(2f64.powi(-8), 0.85, 1.0, 0.5), 13);
        assert_eq!(quadrature_order(0.999, 0.85, 1.0, 0.5), 4);
        assert_eq!(quadrature_order(1e-300, 0.85, 1.0, 0.5), 64);
        let step = (2f64.ln() * 2.2).ceil() as i64;
        for level in 4..12 {
            let a = quadrature_order(2f64.powi(-level), 0.85, 1.0, 0.5) as i64;
            let b = quadrature_order(2f64.powi(-level - 1), 0.85, 1.0, 0.5) as i64;
            assert!((b - a - step).abs() <= 1, "level {level}: {a} -> {b}");
        }
    }

    #[test]
    fn config_defaults_and_override() {
        let mut cfg = QuadratureConfig::default();
        assert_eq!(cfg.order_for(2f64.powi(-8), 0.5, 0.85), 13);
        cfg.n_override = Some(20);
        assert_eq!(cfg.order_for(2f64.powi(-8), 0.5, 0.85), 20);
        cfg.n_override = Some(70);
        assert!(cfg.validate().is_err());
    }
}
