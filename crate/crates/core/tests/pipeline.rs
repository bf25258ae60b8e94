use varmatern::assembly::{
    assemble_nonlocal, assemble_nonlocal_fixed_order, assemble_stiffness, orders_for, AssembledSystem,
    AssemblyOptions,
};
use varmatern::convergence::{estimate_rate, ConvergenceSettings, NormKind};
use varmatern::kernel::KernelContext;
use varmatern::mesh::Mesh1D;
use varmatern::quadrature::QuadratureConfig;
use varmatern::reference::{matern_cov, MaternParams};
use varmatern::sampler::{analytic_covariance, covariance_slice};
use varmatern::smoothness::SmoothnessProfile;

fn system(r_ext: f64, level: u32, profile: SmoothnessProfile, quad: &QuadratureConfig) -> AssembledSystem {
    let mesh = Mesh1D::build_uniform(3.0, r_ext, level).unwrap();
    let ctx = KernelContext::new(2.5, 1.0, profile).unwrap();
    assemble_stiffness(&mesh, &ctx, quad, &AssemblyOptions::default()).unwrap()
}

fn c00(sys: &AssembledSystem) -> f64 {
    let c = analytic_covariance(sys).unwrap();
    let s = covariance_slice(&c, 0.0).unwrap();
    s.values[s.index]
}

#[test]
fn exterior_truncation_barely_moves_the_centre_variance() {
    let p = SmoothnessProfile::constant(0.5).unwrap();
    let q = QuadratureConfig::default();
    let a = c00(&system(4.0, 4, p.clone(), &q));
    let b = c00(&system(5.0, 4, p, &q));
    assert!(((a - b) / b).abs() < 0.02, "{a} vs {b}");
}

#[test]
fn quadrature_order_robustness() {
    let p = SmoothnessProfile::step(0.35, 0.85).unwrap();
    let mesh = Mesh1D::build_uniform(3.0, 4.0, 6).unwrap();
    let ctx = KernelContext::new(2.5, 1.0, p.clone()).unwrap();
    let n = orders_for(&mesh, &ctx, &QuadratureConfig::default()).n_identical;
    let at = |n: usize| {
        let q = QuadratureConfig { n_override: Some(n), ..Default::default() };
        c00(&system(4.0, 6, p.clone(), &q))
    };
    let (a, b) = (at(n), at(n + 4));
    assert!(((a - b) / b).abs() < 1e-6, "n={n}: {a} vs {b}");
}

#[test]
fn constant_order_cross_check_at_default_orders() {
    let mesh = Mesh1D::build_uniform(3.0, 4.0, 5).unwrap();
    let ctx = KernelContext::new(2.5, 1.0, SmoothnessProfile::constant(0.5).unwrap()).unwrap();
    let orders = orders_for(&mesh, &ctx, &QuadratureConfig::default());
    let opts = AssemblyOptions::default();
    let a = assemble_nonlocal(&mesh, &ctx, orders, &opts).unwrap();
    let b = assemble_nonlocal_fixed_order(&mesh, &ctx, 0.5, orders, &opts).unwrap();
    let scale = b.max_abs();
    for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
        assert!((x - y).abs() <= 1e-12 * scale);
    }
}

#[test]
fn discrete_covariance_tracks_matern_away_from_boundary() {
    let sys = system(4.0, 6, SmoothnessProfile::constant(0.7).unwrap(), &QuadratureConfig::default());
    let c = analytic_covariance(&sys).unwrap();
    let s = covariance_slice(&c, 0.0).unwrap();
    let p = MaternParams::from_order(0.7, 2.5, 1.0).unwrap();
    for (y, v) in s.coords.iter().zip(&s.values) {
        if y.abs() <= 1.5 {
            assert!((v - matern_cov(y.abs(), &p)).abs() < 0.02 * p.sigma2.max(0.1), "y={y}");
        }
    }
}

fn rate_with(profile: SmoothnessProfile, levels: Vec<u32>, m: usize, seed: u64, norm: NormKind) -> (f64, [f64; 2]) {
    let ctx = KernelContext::new(2.5, 1.0, profile).unwrap();
    let s = ConvergenceSettings { levels, m, seed, norm, quad_points: 3 };
    let r = estimate_rate(3.0, 4.0, &ctx, &QuadratureConfig::default(), &AssemblyOptions::default(), &s)
        .unwrap();
    (r.rate, r.errors)
}

#[test]
fn coupled_errors_shrink_with_level() {
    let p = SmoothnessProfile::constant(0.5).unwrap();
    let (_, e7) = rate_with(p.clone(), vec![7, 6, 5], 200, 1, NormKind::MassMatrix);
    assert!(e7[0] < e7[1]);
    let (_, e8) = rate_with(p, vec![8, 7, 6], 200, 1, NormKind::MassMatrix);
    assert!(e8[0] < e8[1] && e8[1] < e7[1] * 1.05);
}

#[test]
fn rate_respects_theoretical_floor() {
    for p in [
        SmoothnessProfile::step(0.35, 0.85).unwrap(),
        SmoothnessProfile::gaussian_bump(0.35, 0.85, 0.9, 3.0).unwrap(),
        SmoothnessProfile::oscillatory_ramp(0.44075, 0.7594, 0.15, 3.0).unwrap(),
        SmoothnessProfile::constant(0.5).unwrap(),
    ] {
        let floor = 2.0 * p.s_lower() - 0.5 - 0.15;
        let (r, _) = rate_with(p, vec![7, 6, 5], 300, 5, NormKind::MassMatrix);
        assert!(r >= floor, "rate {r} below {floor}");
    }
}

#[test]
fn disjoint_seed_groups_agree() {
    let p = SmoothnessProfile::constant(0.5).unwrap();
    let (a, _) = rate_with(p.clone(), vec![7, 6, 5], 500, 100, NormKind::MassMatrix);
    let (b, _) = rate_with(p, vec![7, 6, 5], 500, 200, NormKind::MassMatrix);
    assert!((a - b).abs() < 0.1, "{a} vs {b}");
}

#[test]
fn quadrature_norm_agrees_with_mass_norm() {
    let p = SmoothnessProfile::constant(0.5).unwrap();
    let (_, em) = rate_with(p.clone(), vec![6, 5, 4], 200, 3, NormKind::MassMatrix);
    let (_, eq) = rate_with(p, vec![6, 5, 4], 200, 3, NormKind::Quadrature);
    for k in 0..2 {
        assert!(((em[k] - eq[k]) / em[k]).abs() < 0.1);
    }
}
