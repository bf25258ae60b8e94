//! Element-pair blocks of the nonlocal form.
//!
//! Near-field pairs use Duffy transforms that split off r^{−2ν} analytically and grade the
//! radial variables with a grading order σ: ξ = ζ^{1/(3−2σ)} and, on the identical element,
//! 1 − η = t^{1/(2−2σ)}. Remaining powers of ζ and t have exponents proportional to σ − β,
//! so they vanish wherever β = σ.

use crate::kernel::{FixedOrderKernel, KernelContext};
use crate::mesh::AffineMap;
use crate::quadrature::QuadratureRule1D;

/// Kernel evaluation needed by the block integrators.
pub(crate) trait PairKernel: Sync {
    fn beta(&self, x: f64, y: f64) -> f64;
    fn phi(&self, beta: f64, r: f64) -> f64;
    fn gamma(&self, beta: f64, r: f64) -> f64;
}

impl PairKernel for KernelContext {
    fn beta(&self, x: f64, y: f64) -> f64 {
        KernelContext::beta(self, x, y)
    }

    fn phi(&self, beta: f64, r: f64) -> f64 {
        self.phi_for(beta, r)
    }

    fn gamma(&self, beta: f64, r: f64) -> f64 {
        self.gamma_for(beta, r)
    }
}

impl PairKernel for FixedOrderKernel {
    fn beta(&self, _x: f64, _y: f64) -> f64 {
        self.beta
    }

    fn phi(&self, _beta: f64, r: f64) -> f64 {
        FixedOrderKernel::phi(self, r)
    }

    fn gamma(&self, _beta: f64, r: f64) -> f64 {
        FixedOrderKernel::gamma(self, r)
    }
}

/// Well-separated elements with positively oriented maps; node order is
/// (left, right) of the first element followed by (left, right) of the second.
pub(crate) fn disjoint<K: PairKernel>(
    k: &K,
    t1: AffineMap,
    t2: AffineMap,
    rule: &QuadratureRule1D,
) -> [[f64; 4]; 4] {
    let mut out = [[0.0; 4]; 4];
    let jac = (t1.jacobian * t2.jacobian).abs();
    for (xh, wx) in rule.iter() {
        let x = t1.apply(xh);
        for (yh, wy) in rule.iter() {
            let y = t2.apply(yh);
            let beta = k.beta(x, y);
            let g = k.gamma(beta, (x - y).abs());
            let w = wx * wy * jac * g;
            let v = [1.0 - xh, xh, -(1.0 - yh), -yh];
            for a in 0..4 {
                let wa = w * v[a];
                for b in a..4 {
                    out[a][b] += wa * v[b];
                }
            }
        }
    }
    mirror(&mut out);
    out
}

/// Vertex-sharing pair. `tl` maps 0 to the shared vertex from the left element, `tr` from the
/// right one; `g`, `gp` are the reference slopes of the three local hats on each element.
#[allow(clippy::too_many_arguments)]
pub(crate) fn adjacent<K: PairKernel>(
    k: &K,
    tl: AffineMap,
    tr: AffineMap,
    h: f64,
    g: [f64; 3],
    gp: [f64; 3],
    sigma: f64,
    rule: &QuadratureRule1D,
) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    let q = 3.0 - 2.0 * sigma;
    let ln_h = h.ln();
    for (zeta, wz) in rule.iter() {
        let xi = zeta.powf(1.0 / q);
        let ln_zeta = zeta.ln();
        for (eta, we) in rule.iter() {
            let r = h * xi * (1.0 + eta);
            let one_eta_ln = (1.0 + eta).ln();
            // T1: x̂ = ξ, ŷ = ξη. T2: x̂ = ξη, ŷ = ξ.
            for half in 0..2 {
                let (xh, yh) = if half == 0 { (xi, xi * eta) } else { (xi * eta, xi) };
                let x = tl.apply(xh);
                let y = tr.apply(yh);
                let beta = k.beta(x, y);
                let expo = (1.0 - 2.0 * beta) * ln_h + 2.0 * (sigma - beta) / q * ln_zeta
                    - (1.0 + 2.0 * beta) * one_eta_ln;
                let f = wz * we / q * expo.exp() * k.phi(beta, r);
                let p = if half == 0 {
                    [g[0] - gp[0] * eta, g[1] - gp[1] * eta, g[2] - gp[2] * eta]
                } else {
                    [g[0] * eta - gp[0], g[1] * eta - gp[1], g[2] * eta - gp[2]]
                };
                for a in 0..3 {
                    for b in a..3 {
                        out[a][b] += f * p[a] * p[b];
                    }
                }
            }
        }
    }
    mirror(&mut out);
    out
}

/// Identical element with positively oriented map; `g` are the reference hat slopes.
pub(crate) fn identical<K: PairKernel>(
    k: &K,
    t: AffineMap,
    h: f64,
    g: [f64; 2],
    sigma: f64,
    rule: &QuadratureRule1D,
) -> [[f64; 2]; 2] {
    let q = 3.0 - 2.0 * sigma;
    let p = 2.0 - 2.0 * sigma;
    let ln_h = h.ln();
    let mut total = 0.0;
    for (zeta, wz) in rule.iter() {
        let xi = zeta.powf(1.0 / q);
        let ln_zeta = zeta.ln();
        for (tt, wt) in rule.iter() {
            let w = tt.powf(1.0 / p);
            let eta = 1.0 - w;
            let r = h * xi * w;
            let ln_t = tt.ln();
            for half in 0..2 {
                let (xh, yh) = if half == 0 { (xi, xi * eta) } else { (xi * eta, xi) };
                let beta = k.beta(t.apply(xh), t.apply(yh));
                let expo = (1.0 - 2.0 * beta) * ln_h
                    + (2.0 * sigma - 2.0 * beta) / q * ln_zeta
                    + (2.0 * sigma - 2.0 * beta) / p * ln_t;
                total += wz * wt / (p * q) * expo.exp() * k.phi(beta, r);
            }
        }
    }
    [
        [total * g[0] * g[0], total * g[0] * g[1]],
        [total * g[1] * g[0], total * g[1] * g[1]],
    ]
}

fn mirror<const K: usize>(m: &mut [[f64; K]; K]) {
    for a in 0..K {
        for b in 0..a {
            m[a][b] = m[b][a];
        }
    }
}
