//! Dense assembly of the stiffness matrix A = A1 + A2 and the mass matrix M.
//!
//! A1 is the weighted mass ∫ κ^{2s} ψ_i ψ_j over interior elements. A2 sums the nonlocal form
//! over all element pairs; an unordered pair of distinct elements is computed once and
//! counted twice. Pairs in which neither element touches an unknown are skipped.

mod blocks;

use std::collections::HashMap;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{FixedOrderKernel, KernelContext};
use crate::linalg::{cholesky, CholeskyFactor, DenseMatrix};
use crate::mesh::{Mesh1D, PairKind};
use crate::quadrature::{gauss_legendre_01, Grading, QuadratureConfig, QuadratureRule1D};

use blocks::PairKernel;

/// Element-pair block with the global node ids it couples.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalBlock<const K: usize> {
    pub nodes: [usize; K],
    pub values: [[f64; K]; K],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssemblyOptions {
    /// Bitwise-reproducible accumulation order.
    pub deterministic: bool,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self { deterministic: true, threads: None }
    }
}

/// Quadrature orders and grading actually used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairOrders {
    pub n_identical: usize,
    pub n_adjacent: usize,
    pub n_disjoint: usize,
    pub n_mass: usize,
    pub grading: Grading,
}

impl PairOrders {
    pub fn uniform(n: usize, grading: Grading) -> Self {
        Self { n_identical: n, n_adjacent: n, n_disjoint: n, n_mass: n.max(4), grading }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct QuadratureInfo {
    pub orders: PairOrders,
    pub c: f64,
    pub target_rate: f64,
}

#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub mesh: Mesh1D,
    pub ctx: KernelContext,
    pub a: DenseMatrix,
    pub m: DenseMatrix,
    pub a1: DenseMatrix,
    pub quadrature: QuadratureInfo,
    pub chol_a: CholeskyFactor,
    pub chol_m: CholeskyFactor,
}

/// ∫_D ψ_i ψ_j over the unknowns.
pub fn assemble_plain_mass(mesh: &Mesh1D) -> DenseMatrix {
    let n = mesh.n_unknowns();
    let h = mesh.h();
    let mut m = DenseMatrix::zeros(n, n);
    for e in mesh.interior_elements() {
        let [a, b] = mesh.element_nodes(e);
        for (i, j, v) in [(a, a, h / 3.0), (b, b, h / 3.0), (a, b, h / 6.0), (b, a, h / 6.0)] {
            if let (Some(i), Some(j)) = (mesh.unknown_index(i), mesh.unknown_index(j)) {
                m[(i, j)] += v;
            }
        }
    }
    m
}

/// ∫ κ^{2s(x)} ψ_i ψ_j over interior elements by per-element Gauss quadrature.
pub fn assemble_weighted_mass(
    mesh: &Mesh1D,
    ctx: &KernelContext,
    rule: &QuadratureRule1D,
) -> DenseMatrix {
    let n = mesh.n_unknowns();
    let h = mesh.h();
    let ln_k2 = 2.0 * ctx.kappa().ln();
    let mut m = DenseMatrix::zeros(n, n);
    for e in mesh.interior_elements() {
        let t = mesh.element_map(e);
        let mut local = [[0.0; 2]; 2];
        for (xh, w) in rule.iter() {
            let weight = w * h * (ln_k2 * ctx.profile().eval(t.apply(xh))).exp();
            let phi = [1.0 - xh, xh];
            for a in 0..2 {
                for b in 0..2 {
                    local[a][b] += weight * phi[a] * phi[b];
                }
            }
        }
        let nodes = mesh.element_nodes(e);
        for a in 0..2 {
            for b in 0..2 {
                if let (Some(i), Some(j)) = (mesh.unknown_index(nodes[a]), mesh.unknown_index(nodes[b]))
                {
                    m[(i, j)] += local[a][b];
                }
            }
        }
    }
    m
}

fn rule(n: usize) -> Result<&'static QuadratureRule1D> {
    gauss_legendre_01(n)
}

/// Grading order σ for a near-field pair.
fn grading_order(mesh: &Mesh1D, ctx: &KernelContext, e1: usize, e2: usize, grading: Grading) -> f64 {
    let p = ctx.profile();
    match grading {
        Grading::Global => p.s_upper(),
        Grading::Local => {
            let (a1, b1) = mesh.element_bounds(e1);
            let (a2, b2) = mesh.element_bounds(e2);
            0.5 * (p.upper_bound_on(a1, b1) + p.upper_bound_on(a2, b2))
        }
    }
}

fn check_finite<const K: usize>(b: &LocalBlock<K>, e1: usize, e2: usize) -> Result<()> {
    if b.values.iter().flatten().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Assembly { e1, e2, msg: "non-finite block entry".into() })
    }
}

fn disjoint_generic<K: PairKernel>(
    k: &K,
    mesh: &Mesh1D,
    e1: usize,
    e2: usize,
    rule: &QuadratureRule1D,
) -> LocalBlock<4> {
    let [a, b] = mesh.element_nodes(e1);
    let [c, d] = mesh.element_nodes(e2);
    let values = blocks::disjoint(k, mesh.element_map(e1), mesh.element_map(e2), rule);
    LocalBlock { nodes: [a, b, c, d], values }
}

fn adjacent_generic<K: PairKernel>(
    k: &K,
    mesh: &Mesh1D,
    e_left: usize,
    sigma: f64,
    rule: &QuadratureRule1D,
) -> Result<LocalBlock<3>> {
    let e_right = e_left + 1;
    let tl = mesh.reversed_map(e_left);
    let tr = mesh.element_map(e_right);
    if tl.apply(0.0) != tr.apply(0.0) {
        return Err(Error::Assembly {
            e1: e_left,
            e2: e_right,
            msg: "element maps do not share the image of 0".into(),
        });
    }
    let [outer_l, shared] = mesh.element_nodes(e_left);
    let [_, outer_r] = mesh.element_nodes(e_right);
    let nodes = [outer_l, shared, outer_r];
    let slope = |t: crate::mesh::AffineMap, id: usize| {
        mesh.hat_eval(id, t.apply(1.0)) - mesh.hat_eval(id, t.apply(0.0))
    };
    let g = nodes.map(|id| slope(tl, id));
    let gp = nodes.map(|id| slope(tr, id));
    let values = blocks::adjacent(k, tl, tr, mesh.h(), g, gp, sigma, rule);
    Ok(LocalBlock { nodes, values })
}

fn identical_generic<K: PairKernel>(
    k: &K,
    mesh: &Mesh1D,
    e: usize,
    sigma: f64,
    rule: &QuadratureRule1D,
) -> LocalBlock<2> {
    let t = mesh.element_map(e);
    let nodes = mesh.element_nodes(e);
    let g = nodes.map(|id| mesh.hat_eval(id, t.apply(1.0)) - mesh.hat_eval(id, t.apply(0.0)));
    let values = blocks::identical(k, t, mesh.h(), g, sigma, rule);
    LocalBlock { nodes, values }
}

/// Block of a disjoint pair by a tensor Gauss rule of order n.
pub fn pair_block_disjoint(
    mesh: &Mesh1D,
    ctx: &KernelContext,
    e1: usize,
    e2: usize,
    n: usize,
) -> Result<LocalBlock<4>> {
    if mesh.classify_pair(e1, e2) != PairKind::Disjoint {
        return Err(Error::Assembly { e1, e2, msg: "pair is not disjoint".into() });
    }
    let b = disjoint_generic(ctx, mesh, e1, e2, rule(n)?);
    check_finite(&b, e1, e2)?;
    Ok(b)
}

/// Block of the vertex-sharing pair (e_left, e_left + 1) with local grading.
pub fn pair_block_adjacent(
    mesh: &Mesh1D,
    ctx: &KernelContext,
    e_left: usize,
    e_right: usize,
    n: usize,
) -> Result<LocalBlock<3>> {
    pair_block_adjacent_graded(mesh, ctx, e_left, e_right, n, Grading::Local)
}

pub fn pair_block_adjacent_graded(
    mesh: &Mesh1D,
    ctx: &KernelContext,
    e_left: usize,
    e_right: usize,
    n: usize,
    grading: Grading,
) -> Result<LocalBlock<3>> {
    if e_right != e_left + 1 {
        return Err(Error::Assembly {
            e1: e_left,
            e2: e_right,
            msg: "adjacent pair must be (e, e + 1)".into(),
        });
    }
    let sigma = grading_order(mesh, ctx, e_left, e_right, grading);
    let b = adjacent_generic(ctx, mesh, e_left, sigma, rule(n)?)?;
    check_finite(&b, e_left, e_right)?;
    Ok(b)
}

/// Block of an element with itself, with local grading.
pub fn pair_block_identical(
    mesh: &Mesh1D,
    ctx: &KernelContext,
    e: usize,
    n: usize,
) -> Result<LocalBlock<2>> {
    pair_block_identical_graded(mesh, ctx, e, n, Grading::Local)
}

pub fn pair_block_identical_graded(
    mesh: &Mesh1D,
    ctx: &KernelContext,
    e: usize,
    n: usize,
    grading: Grading,
) -> Result<LocalBlock<2>> {
    let sigma = grading_order(mesh, ctx, e, e, grading);
    let b = identical_generic(ctx, mesh, e, sigma, rule(n)?);
    check_finite(&b, e, e)?;
    Ok(b)
}

/// Block of any pair, widened to a common representation.
#[derive(Debug, Clone)]
enum AnyBlock {
    Two(LocalBlock<2>),
    Three(LocalBlock<3>),
    Four(LocalBlock<4>),
}

impl AnyBlock {
    fn scatter(&self, mesh: &Mesh1D, factor: f64, out: &mut DenseMatrix) {
        fn go<const K: usize>(b: &LocalBlock<K>, mesh: &Mesh1D, f: f64, out: &mut DenseMatrix) {
            for a in 0..K {
                let Some(i) = mesh.unknown_index(b.nodes[a]) else { continue };
                for c in 0..K {
                    if let Some(j) = mesh.unknown_index(b.nodes[c]) {
                        out[(i, j)] += f * b.values[a][c];
                    }
                }
            }
        }
        match self {
            AnyBlock::Two(b) => go(b, mesh, factor, out),
            AnyBlock::Three(b) => go(b, mesh, factor, out),
            AnyBlock::Four(b) => go(b, mesh, factor, out),
        }
    }

    /// Same values re-attached to the nodes of another pair with identical geometry class.
    fn relocated(&self, mesh: &Mesh1D, e1: usize, e2: usize) -> AnyBlock {
        match self {
            AnyBlock::Two(b) => AnyBlock::Two(LocalBlock { nodes: mesh.element_nodes(e1), values: b.values }),
            AnyBlock::Three(b) => {
                let [l, s] = mesh.element_nodes(e1);
                let [_, r] = mesh.element_nodes(e2);
                AnyBlock::Three(LocalBlock { nodes: [l, s, r], values: b.values })
            }
            AnyBlock::Four(b) => {
                let [a, c] = mesh.element_nodes(e1);
                let [d, f] = mesh.element_nodes(e2);
                AnyBlock::Four(LocalBlock { nodes: [a, c, d, f], values: b.values })
            }
        }
    }

    fn is_finite(&self) -> bool {
        match self {
            AnyBlock::Two(b) => b.values.iter().flatten().all(|v| v.is_finite()),
            AnyBlock::Three(b) => b.values.iter().flatten().all(|v| v.is_finite()),
            AnyBlock::Four(b) => b.values.iter().flatten().all(|v| v.is_finite()),
        }
    }
}

struct PairPlan<'a> {
    mesh: &'a Mesh1D,
    ctx: &'a KernelContext,
    orders: PairOrders,
    near: &'a QuadratureRule1D,
    adj: &'a QuadratureRule1D,
    far: &'a QuadratureRule1D,
}

impl PairPlan<'_> {
    /// Block for e1 ≤ e2.
    fn block<K: PairKernel>(&self, k: &K, e1: usize, e2: usize, fixed_sigma: Option<f64>) -> Result<AnyBlock> {
        let sigma = |a, b| {
            fixed_sigma.unwrap_or_else(|| grading_order(self.mesh, self.ctx, a, b, self.orders.grading))
        };
        let b = match self.mesh.classify_pair(e1, e2) {
            PairKind::Identical => AnyBlock::Two(identical_generic(k, self.mesh, e1, sigma(e1, e1), self.near)),
            PairKind::VertexSharing => AnyBlock::Three(adjacent_generic(k, self.mesh, e1, sigma(e1, e2), self.adj)?),
            PairKind::Disjoint => AnyBlock::Four(disjoint_generic(k, self.mesh, e1, e2, self.far)),
        };
        if !b.is_finite() {
            return Err(Error::Assembly { e1, e2, msg: "non-finite block entry".into() });
        }
        Ok(b)
    }
}

fn factor(e1: usize, e2: usize) -> f64 {
    if e1 == e2 {
        1.0
    } else {
        2.0
    }
}

/// Unordered pairs (e1 ≤ e2) with e1 as the row, restricted to pairs touching an unknown.
fn pairs_for_row<'a>(mesh: &'a Mesh1D, active: &'a [bool], e1: usize) -> impl Iterator<Item = usize> + 'a {
    let row_active = active[e1];
    (e1..mesh.n_elements()).filter(move |&e2| row_active || active[e2])
}

fn run_in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        Some(n) if n > 0 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::config(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        _ => Ok(f()),
    }
}

fn assemble_pairs<K: PairKernel>(
    plan: &PairPlan<'_>,
    k: &K,
    fixed_sigma: Option<f64>,
    use_cache: bool,
    opts: &AssemblyOptions,
) -> Result<DenseMatrix> {
    let mesh = plan.mesh;
    let n = mesh.n_unknowns();
    let ne = mesh.n_elements();
    let active: Vec<bool> = (0..ne).map(|e| mesh.element_has_unknown(e)).collect();

    let profile = plan.ctx.profile();
    let classes: Option<Vec<usize>> = if use_cache {
        (0..ne)
            .map(|e| {
                let (a, b) = mesh.element_bounds(e);
                profile.piece_id(0.5 * (a + b))
            })
            .collect()
    } else {
        None
    };

    let mut out = DenseMatrix::zeros(n, n);
    if let Some(classes) = classes {
        // Piecewise-constant order: a block depends only on the offset and the element classes.
        let mut reps: HashMap<(usize, usize, usize), (usize, usize)> = HashMap::new();
        for e1 in 0..ne {
            for e2 in pairs_for_row(mesh, &active, e1) {
                reps.entry((e2 - e1, classes[e1], classes[e2])).or_insert((e1, e2));
            }
        }
        let mut keys: Vec<_> = reps.into_iter().collect();
        keys.sort_by_key(|(k, _)| *k);
        let computed: Vec<Result<AnyBlock>> = run_in_pool(opts.threads, || {
            keys.par_iter().map(|(_, (e1, e2))| plan.block(k, *e1, *e2, fixed_sigma)).collect()
        })?;
        let mut table = HashMap::with_capacity(keys.len());
        for ((key, _), b) in keys.iter().zip(computed) {
            table.insert(*key, b?);
        }
        for e1 in 0..ne {
            for e2 in pairs_for_row(mesh, &active, e1) {
                let b = &table[&(e2 - e1, classes[e1], classes[e2])];
                b.relocated(mesh, e1, e2).scatter(mesh, factor(e1, e2), &mut out);
            }
        }
        return Ok(out);
    }

    let rows: Vec<usize> = (0..ne).filter(|&e| active[e] || active[e..].iter().any(|&a| a)).collect();
    let compute_row = |e1: usize| -> Result<Vec<(usize, AnyBlock)>> {
        pairs_for_row(mesh, &active, e1)
            .map(|e2| plan.block(k, e1, e2, fixed_sigma).map(|b| (e2, b)))
            .collect()
    };
    if opts.deterministic {
        let chunk = 32;
        for group in rows.chunks(chunk) {
            let results: Vec<Result<Vec<(usize, AnyBlock)>>> =
                run_in_pool(opts.threads, || group.par_iter().map(|&e1| compute_row(e1)).collect())?;
            for (&e1, row) in group.iter().zip(results) {
                for (e2, b) in row? {
                    b.scatter(mesh, factor(e1, e2), &mut out);
                }
            }
        }
    } else {
        let shared = Mutex::new(out);
        run_in_pool(opts.threads, || {
            rows.par_iter().try_for_each(|&e1| -> Result<()> {
                let row = compute_row(e1)?;
                let mut guard = shared.lock().expect("assembly buffer poisoned");
                for (e2, b) in row {
                    b.scatter(mesh, factor(e1, e2), &mut guard);
                }
                Ok(())
            })
        })??;
        out = shared.into_inner().expect("assembly buffer poisoned");
    }
    Ok(out)
}

/// The nonlocal part A2 through the variable-order kernel.
pub fn assemble_nonlocal(
    mesh: &Mesh1D,
    ctx: &KernelContext,
    orders: PairOrders,
    opts: &AssemblyOptions,
) -> Result<DenseMatrix> {
    let plan = PairPlan {
        mesh,
        ctx,
        orders,
        near: rule(orders.n_identical)?,
        adj: rule(orders.n_adjacent)?,
        far: rule(orders.n_disjoint)?,
    };
    let cache = ctx.profile().piece_id(0.0).is_some();
    assemble_pairs(&plan, ctx, None, cache, opts)
}

/// A2 with β frozen at `beta`: an independent path for constant-order problems.
pub fn assemble_nonlocal_fixed_order(
    mesh: &Mesh1D,
    ctx: &KernelContext,
    beta: f64,
    orders: PairOrders,
    opts: &AssemblyOptions,
) -> Result<DenseMatrix> {
    let k = FixedOrderKernel::new(ctx.kappa(), beta);
    let plan = PairPlan {
        mesh,
        ctx,
        orders,
        near: rule(orders.n_identical)?,
        adj: rule(orders.n_adjacent)?,
        far: rule(orders.n_disjoint)?,
    };
    assemble_pairs(&plan, &k, Some(beta), false, opts)
}

/// Orders chosen by the quadrature configuration for this mesh and profile.
pub fn orders_for(mesh: &Mesh1D, ctx: &KernelContext, quad: &QuadratureConfig) -> PairOrders {
    let p = ctx.profile();
    let n = quad.order_for(mesh.h(), p.s_lower(), p.s_upper());
    PairOrders::uniform(n, quad.grading)
}

/// Full system: A = A1 + A2, M, and both Cholesky factors.
pub fn assemble_stiffness(
    mesh: &Mesh1D,
    ctx: &KernelContext,
    quad: &QuadratureConfig,
    opts: &AssemblyOptions,
) -> Result<AssembledSystem> {
    quad.validate()?;
    let orders = orders_for(mesh, ctx, quad);
    let a1 = assemble_weighted_mass(mesh, ctx, rule(orders.n_mass)?);
    let a2 = assemble_nonlocal(mesh, ctx, orders, opts)?;
    let mut a = a1.add(&a2);
    a.symmetrize_from_lower();
    let m = assemble_plain_mass(mesh);
    let chol_a = cholesky(&a)?;
    let chol_m = cholesky(&m)?;
    let p = ctx.profile();
    Ok(AssembledSystem {
        mesh: mesh.clone(),
        ctx: ctx.clone(),
        a,
        m,
        a1,
        quadrature: QuadratureInfo {
            orders,
            c: quad.c,
            target_rate: quad.target_rate.unwrap_or(2.0 * p.s_lower() - 0.5),
        },
        chol_a,
        chol_m,
    })
}

/// Plain mass over interior elements; equals the mass over D.
pub fn interior_mass(mesh: &Mesh1D) -> DenseMatrix {
    assemble_plain_mass(mesh)
}
