//! The spatially varying fractional order s(x).

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre_01;

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileKind {
    Constant { s: f64 },
    /// s_lower for x ≤ 0, s_upper for x > 0.
    Step { s_lower: f64, s_upper: f64 },
    GaussianBump { s_lower: f64, s_upper: f64, sigma: f64, r_int: f64 },
    OscillatoryRamp { a: f64, b: f64, omega: f64, r_int: f64 },
    /// Piecewise-linear through sorted knots, constant beyond the ends.
    Tabulated { xs: Vec<f64>, ss: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessProfile {
    kind: ProfileKind,
    s_lower: f64,
    s_upper: f64,
}

fn check_order(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::config(format!("{name} must lie in (0, 1), got {v}")))
    }
}

fn check_spread(s_lower: f64, s_upper: f64) -> Result<()> {
    check_order("s_lower", s_lower)?;
    check_order("s_upper", s_upper)?;
    if s_lower >= s_upper {
        return Err(Error::config(format!(
            "s_lower must be below s_upper, got {s_lower} >= {s_upper}"
        )));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(format!("{name} must be positive, got {v}")))
    }
}

impl SmoothnessProfile {
    pub fn constant(s: f64) -> Result<Self> {
        check_order("s", s)?;
        Ok(Self { kind: ProfileKind::Constant { s }, s_lower: s, s_upper: s })
    }

    pub fn step(s_lower: f64, s_upper: f64) -> Result<Self> {
        check_spread(s_lower, s_upper)?;
        Ok(Self { kind: ProfileKind::Step { s_lower, s_upper }, s_lower, s_upper })
    }

    pub fn gaussian_bump(s_lower: f64, s_upper: f64, sigma: f64, r_int: f64) -> Result<Self> {
        check_spread(s_lower, s_upper)?;
        check_positive("sigma", sigma)?;
        check_positive("r_int", r_int)?;
        Ok(Self {
            kind: ProfileKind::GaussianBump { s_lower, s_upper, sigma, r_int },
            s_lower,
            s_upper,
        })
    }

    /// Bounds are computed from the formula on a fine grid.
    pub fn oscillatory_ramp(a: f64, b: f64, omega: f64, r_int: f64) -> Result<Self> {
        check_positive("r_int", r_int)?;
        if !(a.is_finite() && b.is_finite() && omega.is_finite()) {
            return Err(Error::config("ramp parameters must be finite"));
        }
        let kind = ProfileKind::OscillatoryRamp { a, b, omega, r_int };
        let samples = 200_000;
        let dx = 2.0 * r_int / samples as f64;
        let (mut lo, mut hi) = (a.min(b), a.max(b));
        let (mut x_lo, mut x_hi) = (None, None);
        for i in 0..=samples {
            let x = -r_int + dx * i as f64;
            let v = eval_kind(&kind, x);
            if v < lo {
                lo = v;
                x_lo = Some(x);
            }
            if v > hi {
                hi = v;
                x_hi = Some(x);
            }
        }
        if let Some(x) = x_lo {
            lo = lo.min(-golden_max(|t| -eval_kind(&kind, t), x - dx, x + dx));
        }
        if let Some(x) = x_hi {
            hi = hi.max(golden_max(|t| eval_kind(&kind, t), x - dx, x + dx));
        }
        check_order("ramp minimum", lo)?;
        check_order("ramp maximum", hi)?;
        Ok(Self { kind, s_lower: lo, s_upper: hi })
    }

    pub fn tabulated(points: &[(f64, f64)]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::config("tabulated profile needs at least one point"));
        }
        let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        let ss: Vec<f64> = points.iter().map(|p| p.1).collect();
        if xs.iter().any(|x| !x.is_finite()) {
            return Err(Error::config("tabulated profile has a non-finite coordinate"));
        }
        if xs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("tabulated profile coordinates must be strictly increasing"));
        }
        for &s in &ss {
            check_order("tabulated s", s)?;
        }
        let s_lower = ss.iter().copied().fold(f64::INFINITY, f64::min);
        let s_upper = ss.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self { kind: ProfileKind::Tabulated { xs, ss }, s_lower, s_upper })
    }

    /// Reads a two-column CSV (x, s) with a header row.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read profile table {}: {e}", path.display())))?;
        let mut points = Vec::new();
        for (lineno, line) in text.lines().enumerate().skip(1) {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let parse = |c: Option<&str>| -> Result<f64> {
                c.and_then(|v| v.parse().ok()).ok_or_else(|| {
                    Error::config(format!("{}:{}: expected two numbers", path.display(), lineno + 1))
                })
            };
            let x = parse(cols.next())?;
            let s = parse(cols.next())?;
            points.push((x, s));
        }
        Self::tabulated(&points)
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    pub fn s_lower(&self) -> f64 {
        self.s_lower
    }

    pub fn s_upper(&self) -> f64 {
        self.s_upper
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, ProfileKind::Constant { .. })
    }

    pub fn eval(&self, x: f64) -> f64 {
        eval_kind(&self.kind, x)
    }

    /// β(x, y) = (s(x) + s(y)) / 2.
    pub fn beta(&self, x: f64, y: f64) -> f64 {
        0.5 * (self.eval(x) + self.eval(y))
    }

    /// Identifier of the constant piece containing `x`, for piecewise-constant profiles.
    pub fn piece_id(&self, x: f64) -> Option<usize> {
        match self.kind {
            ProfileKind::Constant { .. } => Some(0),
            ProfileKind::Step { .. } => Some(usize::from(x > 0.0)),
            _ => None,
        }
    }

    /// Coordinates where the profile is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            ProfileKind::Constant { .. } => vec![],
            ProfileKind::Step { .. } => vec![0.0],
            ProfileKind::GaussianBump { r_int, .. } | ProfileKind::OscillatoryRamp { r_int, .. } => {
                vec![-r_int, *r_int]
            }
            ProfileKind::Tabulated { xs, .. } => xs.clone(),
        }
    }

    /// Upper bound of s on the closed interval [a, b].
    pub fn upper_bound_on(&self, a: f64, b: f64) -> f64 {
        match &self.kind {
            ProfileKind::Constant { s } => *s,
            ProfileKind::Step { s_lower, s_upper } => {
                if b > 0.0 {
                    *s_upper
                } else {
                    *s_lower
                }
            }
            ProfileKind::Tabulated { xs, ss } => {
                let inner = xs
                    .iter()
                    .zip(ss)
                    .filter(|(x, _)| **x > a && **x < b)
                    .map(|(_, s)| *s);
                inner.fold(self.eval(a).max(self.eval(b)), f64::max)
            }
            _ => {
                let samples = 64;
                (0..=samples)
                    .map(|i| self.eval(a + (b - a) * i as f64 / samples as f64))
                    .fold(f64::NEG_INFINITY, f64::max)
                    .min(self.s_upper)
            }
        }
    }

    /// Mean of s over [a, b] by composite Gauss quadrature split at the breakpoints.
    pub fn average_s(&self, a: f64, b: f64) -> Result<f64> {
        if !(b > a) {
            return Err(Error::domain(format!("empty averaging interval [{a}, {b}]")));
        }
        let rule = gauss_legendre_01(16)?;
        let mut cuts = vec![a];
        cuts.extend(self.breakpoints().into_iter().filter(|&p| p > a && p < b));
        cuts.push(b);
        let total: f64 = cuts
            .windows(2)
            .map(|w| rule.integrate_composite(w[0], w[1], 64, |x| self.eval(x)))
            .sum();
        Ok(total / (b - a))
    }
}

/// Maximum of a unimodal function on [a, b] by golden-section search.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    for _ in 0..80 {
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    f(c).max(f(d)).max(f(0.5 * (a + b)))
}

fn eval_kind(kind: &ProfileKind, x: f64) -> f64 {
    match kind {
        ProfileKind::Constant { s } => *s,
        ProfileKind::Step { s_lower, s_upper } => {
            if x <= 0.0 {
                *s_lower
            } else {
                *s_upper
            }
        }
        ProfileKind::GaussianBump { s_lower, s_upper, sigma, r_int } => {
            if x.abs() > *r_int {
                return *s_lower;
            }
            let tail = (-(r_int / sigma).powi(2)).exp();
            let g = (-(x / sigma).powi(2)).exp();
            (s_lower + (s_upper - s_lower) * (g - tail) / (1.0 - tail)).clamp(*s_lower, *s_upper)
        }
        ProfileKind::OscillatoryRamp { a, b, omega, r_int } => {
            if x <= -r_int {
                *a
            } else if x >= *r_int {
                *b
            } else {
                let t = x + r_int;
                a + (b - a) / (2.0 * r_int) * t
                    + omega * (4.0 * std::f64::consts::PI * t / r_int).sin()
            }
        }
        ProfileKind::Tabulated { xs, ss } => {
            let n = xs.len();
            if x <= xs[0] {
                return ss[0];
            }
            if x >= xs[n - 1] {
                return ss[n - 1];
            }
            let j = xs.partition_point(|&k| k <= x);
            let (x0, x1) = (xs[j - 1], xs[j]);
            let t = (x - x0) / (x1 - x0);
            ss[j - 1] + t * (ss[j] - ss[j - 1])
        }
    }
}

/// Profile block of the JSON configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Constant {
        s: f64,
    },
    Step {
        s_lower: f64,
        s_upper: f64,
    },
    GaussianBump {
        s_lower: f64,
        s_upper: f64,
        /// Defaults to 0.3·r_int.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<f64>,
        /// Defaults to the domain's interior radius.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r_int: Option<f64>,
    },
    OscillatoryRamp {
        a: f64,
        b: f64,
        omega: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r_int: Option<f64>,
    },
    Tabulated {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        points: Option<Vec<(f64, f64)>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        csv: Option<PathBuf>,
    },
}

impl ProfileSpec {
    /// Default parameters for each kind name, used when the kind is switched from the CLI.
    pub fn default_for_kind(kind: &str) -> Option<Self> {
        Some(match kind {
            "constant" => ProfileSpec::Constant { s: 0.5 },
            "step" => ProfileSpec::Step { s_lower: 0.35, s_upper: 0.85 },
            "gaussian_bump" | "bump" => ProfileSpec::GaussianBump {
                s_lower: 0.35,
                s_upper: 0.85,
                sigma: None,
                r_int: None,
            },
            "oscillatory_ramp" | "ramp" => ProfileSpec::OscillatoryRamp {
                a: 0.44075,
                b: 0.7594,
                omega: 0.15,
                r_int: None,
            },
            _ => return None,
        })
    }

    pub fn build(&self, domain_r_int: f64) -> Result<SmoothnessProfile> {
        match self {
            ProfileSpec::Constant { s } => SmoothnessProfile::constant(*s),
            ProfileSpec::Step { s_lower, s_upper } => SmoothnessProfile::step(*s_lower, *s_upper),
            ProfileSpec::GaussianBump { s_lower, s_upper, sigma, r_int } => {
                let r = r_int.unwrap_or(domain_r_int);
                SmoothnessProfile::gaussian_bump(*s_lower, *s_upper, sigma.unwrap_or(0.3 * r), r)
            }
            ProfileSpec::OscillatoryRamp { a, b, omega, r_int } => {
                SmoothnessProfile::oscillatory_ramp(*a, *b, *omega, r_int.unwrap_or(domain_r_int))
            }
            ProfileSpec::Tabulated { points, csv } => match (points, csv) {
                (Some(p), None) => SmoothnessProfile::tabulated(p),
                (None, Some(path)) => SmoothnessProfile::from_csv(path),
                _ => Err(Error::config(
                    "tabulated profile needs exactly one of profile.points or profile.csv",
                )),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn standard_profiles() -> Vec<SmoothnessProfile> {
        vec![
            SmoothnessProfile::step(0.35, 0.85).unwrap(),
            SmoothnessProfile::gaussian_bump(0.35, 0.85, 0.9, 3.0).unwrap(),
            SmoothnessProfile::oscillatory_ramp(0.44075, 0.7594, 0.15, 3.0).unwrap(),
            SmoothnessProfile::step(0.65, 0.85).unwrap(),
            SmoothnessProfile::gaussian_bump(0.65, 0.85, 0.9, 3.0).unwrap(),
            SmoothnessProfile::oscillatory_ramp(0.6705, 0.8297, 0.05, 3.0).unwrap(),
        ]
    }

    #[test]
    fn eval_examples() {
        let step = SmoothnessProfile::step(0.35, 0.85).unwrap();
        assert_eq!(step.eval(-1.0), 0.35);
        assert_eq!(step.eval(0.0), 0.35);
        assert_eq!(step.eval(1e-300), 0.85);
        let bump = SmoothnessProfile::gaussian_bump(0.35, 0.85, 0.9, 3.0).unwrap();
        assert!((bump.eval(0.0) - 0.85).abs() < 1e-15);
        assert!((bump.eval(3.0) - 0.35).abs() < 1e-15);
        assert_eq!(bump.eval(3.5), 0.35);
        let ramp = SmoothnessProfile::oscillatory_ramp(0.44075, 0.7594, 0.15, 3.0).unwrap();
        assert!((ramp.eval(3.0) - 0.7594).abs() < 1e-15);
        assert!((ramp.eval(-3.0) - 0.44075).abs() < 1e-15);
        assert_eq!(ramp.eval(10.0), 0.7594);
    }

    #[test]
    fn beta_examples() {
        let step = SmoothnessProfile::step(0.35, 0.85).unwrap();
        assert!((step.beta(-1.0, 1.0) - 0.6).abs() < 1e-15);
        assert_eq!(step.beta(2.0, 2.0), step.eval(2.0));
        let c = SmoothnessProfile::constant(0.5).unwrap();
        assert_eq!(c.beta(-3.0, 1.7), 0.5);
    }

    #[test]
    fn ramp_bounds_near_nominal() {
        let ramp = SmoothnessProfile::oscillatory_ramp(0.44075, 0.7594, 0.15, 3.0).unwrap();
        assert!((ramp.s_lower() - 0.35).abs() < 0.02, "{}", ramp.s_lower());
        assert!((ramp.s_upper() - 0.85).abs() < 0.02, "{}", ramp.s_upper());
        let ramp = SmoothnessProfile::oscillatory_ramp(0.6705, 0.8297, 0.05, 3.0).unwrap();
        assert!((ramp.s_lower() - 0.65).abs() < 0.02, "{}", ramp.s_lower());
        assert!((ramp.s_upper() - 0.85).abs() < 0.02, "{}", ramp.s_upper());
    }

    #[test]
    fn averages() {
        let step = SmoothnessProfile::step(0.35, 0.85).unwrap();
        assert!((step.average_s(-4.0, 4.0).unwrap() - 0.6).abs() < 1e-12);
        let c = SmoothnessProfile::constant(0.5).unwrap();
        assert!((c.average_s(-1.0, 7.0).unwrap() - 0.5).abs() < 1e-14);
        let step = SmoothnessProfile::step(0.65, 0.85).unwrap();
        assert!((2.0 * step.average_s(-4.0, 4.0).unwrap() - 0.5 - 1.0).abs() < 1e-12);
        assert!(c.average_s(1.0, 1.0).is_err());
    }

    #[test]
    fn bump_average_matches_erf_closed_form() {
        // ∫_{-R}^{R} e^{-(x/σ)²} dx = σ√π·erf(R/σ).
        let (lo, hi, sigma, r) = (0.35, 0.85, 0.9, 3.0);
        let bump = SmoothnessProfile::gaussian_bump(lo, hi, sigma, r).unwrap();
        let tail = (-(r / sigma).powi(2)).exp();
        let gauss = sigma * std::f64::consts::PI.sqrt() * statrs::function::erf::erf(r / sigma);
        let inside = lo * 2.0 * r + (hi - lo) * (gauss - 2.0 * r * tail) / (1.0 - tail);
        let want = (inside + lo * 2.0) / 8.0;
        let got = bump.average_s(-4.0, 4.0).unwrap();
        assert!(((got - want) / want).abs() < 1e-10, "{got} {want}");
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(SmoothnessProfile::constant(1.0).is_err());
        assert!(SmoothnessProfile::constant(0.0).is_err());
        assert!(SmoothnessProfile::step(0.85, 0.35).is_err());
        assert!(SmoothnessProfile::gaussian_bump(0.3, 0.8, -1.0, 3.0).is_err());
        assert!(SmoothnessProfile::oscillatory_ramp(0.1, 0.9, 0.3, 3.0).is_err());
        assert!(SmoothnessProfile::tabulated(&[(0.0, 0.5), (0.0, 0.6)]).is_err());
        assert!(SmoothnessProfile::tabulated(&[(0.0, 1.5)]).is_err());
    }

    #[test]
    fn tabulated_interpolation_and_csv() {
        let t = SmoothnessProfile::tabulated(&[(-1.0, 0.4), (1.0, 0.8)]).unwrap();
        assert_eq!(t.eval(-5.0), 0.4);
        assert_eq!(t.eval(5.0), 0.8);
        assert!((t.eval(0.0) - 0.6).abs() < 1e-15);
        assert_eq!((t.s_lower(), t.s_upper()), (0.4, 0.8));

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        std::fs::write(&path, "x,s\n-1,0.4\n1,0.8\n").unwrap();
        assert_eq!(SmoothnessProfile::from_csv(&path).unwrap(), t);
        std::fs::write(&path, "x,s\n-1,abc\n").unwrap();
        assert!(SmoothnessProfile::from_csv(&path).is_err());
    }

    #[test]
    fn bounds_on_fine_grid() {
        for p in standard_profiles() {
            for i in 0..=80_000 {
                let x = -4.0 + 8.0 * i as f64 / 80_000.0;
                let v = p.eval(x);
                assert!(v >= p.s_lower() && v <= p.s_upper(), "{p:?} at {x}: {v}");
            }
        }
    }

    #[test]
    fn local_upper_bound() {
        let step = SmoothnessProfile::step(0.35, 0.85).unwrap();
        assert_eq!(step.upper_bound_on(-0.25, 0.0), 0.35);
        assert_eq!(step.upper_bound_on(0.0, 0.25), 0.85);
        let bump = SmoothnessProfile::gaussian_bump(0.35, 0.85, 0.9, 3.0).unwrap();
        let ub = bump.upper_bound_on(0.5, 0.75);
        assert!((ub - bump.eval(0.5)).abs() < 1e-15);
        assert!((bump.upper_bound_on(-0.1, 0.1) - 0.85).abs() < 1e-15);
    }

    #[test]
    fn spec_build_and_serde() {
        let spec: ProfileSpec =
            serde_json::from_str(r#"{"kind": "step", "s_lower": 0.35, "s_upper": 0.85}"#).unwrap();
        assert_eq!(spec.build(3.0).unwrap(), SmoothnessProfile::step(0.35, 0.85).unwrap());
        let bump = ProfileSpec::default_for_kind("gaussian_bump").unwrap().build(3.0).unwrap();
        assert_eq!(bump, SmoothnessProfile::gaussian_bump(0.35, 0.85, 0.3 * 3.0, 3.0).unwrap());
        assert!(serde_json::from_str::<ProfileSpec>(r#"{"kind": "step", "s": 0.3}"#).is_err());
        let t = ProfileSpec::Tabulated { points: None, csv: None };
        assert!(t.build(3.0).is_err());
    }

    proptest! {
        #[test]
        fn beta_symmetric_and_bounded(x in -4.0f64..4.0, y in -4.0f64..4.0, which in 0usize..6) {
            let p = &standard_profiles()[which];
            let b = p.beta(x, y);
            prop_assert_eq!(b, p.beta(y, x));
            prop_assert!(b >= p.s_lower() && b <= p.s_upper());
        }

        #[test]
        fn continuous_profiles(x in -4.0f64..4.0, which in 1usize..3) {
            let p = &standard_profiles()[which];
            let d = (p.eval(x) - p.eval(x + 1e-9)).abs();
            prop_assert!(d < 1e-7);
        }

        #[test]
        fn constant_profile_is_flat(s in 0.01f64..0.99, x in -100.0f64..100.0) {
            let p = SmoothnessProfile::constant(s).unwrap();
            prop_assert_eq!(p.eval(x), s);
        }
    }
}
