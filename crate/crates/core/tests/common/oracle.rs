//! Reference values for singular element-pair blocks.
//!
//! The untransformed integrals are split into geometric layers toward the singular set, each
//! layer integrated by a high-order tensor Gauss rule, and the truncated remainder removed by
//! one Richardson step with the known leading exponent. Distances are formed analytically in
//! reference coordinates. Valid when β is constant on the pair.

#![allow(dead_code)]

use varmatern::kernel::KernelContext;
use varmatern::quadrature::gauss_legendre_01;

const LAYERS: usize = 44;
const POINTS: usize = 20;

fn tensor(
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    mut f: impl FnMut(f64, f64) -> [f64; 9],
) -> [f64; 9] {
    let rule = gauss_legendre_01(POINTS).unwrap();
    let (dx, dy) = (x1 - x0, y1 - y0);
    let mut acc = [0.0; 9];
    for (u, wu) in rule.iter() {
        for (v, wv) in rule.iter() {
            let vals = f(x0 + dx * u, y0 + dy * v);
            let w = wu * wv * dx * dy;
            for (a, b) in acc.iter_mut().zip(vals) {
                *a += w * b;
            }
        }
    }
    acc
}

fn add(a: &mut [f64; 9], b: [f64; 9]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

fn richardson(coarse: [f64; 9], fine: [f64; 9], p: f64) -> [f64; 9] {
    let f = 2f64.powf(p);
    let mut out = [0.0; 9];
    for i in 0..9 {
        out[i] = (f * fine[i] - coarse[i]) / (f - 1.0);
    }
    out
}

/// 3×3 block of two touching elements of width h, node order (left outer, shared, right outer).
/// `beta` is the constant value of β on the pair; the block depends only on distances.
pub fn adjacent_block(ctx: &KernelContext, h: f64, beta: f64) -> [[f64; 3]; 3] {
    // x = x_shared − h·x̂, y = x_shared + h·ŷ, r = h(x̂ + ŷ).
    let integrand = |xh: f64, yh: f64| -> [f64; 9] {
        let r = h * (xh + yh);
        let g = ctx.gamma_for(beta, r) * h * h;
        let d = [xh, yh - xh, -yh];
        let mut out = [0.0; 9];
        for a in 0..3 {
            for b in 0..3 {
                out[3 * a + b] = g * d[a] * d[b];
            }
        }
        out
    };
    let partial = |layers: usize| {
        let mut acc = [0.0; 9];
        for k in 0..layers {
            let hi = 0.5f64.powi(k as i32);
            let lo = 0.5 * hi;
            add(&mut acc, tensor(lo, hi, 0.0, lo, integrand));
            add(&mut acc, tensor(0.0, lo, lo, hi, integrand));
            add(&mut acc, tensor(lo, hi, lo, hi, integrand));
        }
        acc
    };
    let v = richardson(partial(LAYERS), partial(LAYERS + 1), 3.0 - 2.0 * beta);
    [[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]]
}

/// 2×2 block of an element of width h with itself for constant β.
pub fn identical_block(ctx: &KernelContext, h: f64, beta: f64) -> [[f64; 2]; 2] {
    // By symmetry, twice the part with x̂ > ŷ; u = x̂ − ŷ, ŷ = v(1 − u).
    let integrand = |u: f64, _v: f64| -> [f64; 9] {
        let r = h * u;
        let mut out = [0.0; 9];
        out[0] = 2.0 * h * h * (1.0 - u) * u * u * ctx.gamma_for(beta, r);
        out
    };
    let partial = |layers: usize| {
        let mut acc = [0.0; 9];
        for k in 0..layers {
            let hi = 0.5f64.powi(k as i32);
            add(&mut acc, tensor(0.5 * hi, hi, 0.0, 1.0, integrand));
        }
        acc
    };
    let d = richardson(partial(LAYERS), partial(LAYERS + 1), 2.0 - 2.0 * beta)[0];
    [[d, -d], [-d, d]]
}

/// Largest entry-wise difference relative to the largest entry.
pub fn max_rel_diff<const K: usize>(got: &[[f64; K]; K], want: &[[f64; K]; K]) -> f64 {
    let scale = want.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst: f64 = 0.0;
    for a in 0..K {
        for b in 0..K {
            worst = worst.max((got[a][b] - want[a][b]).abs());
        }
    }
    worst / scale
}
