//! Run configuration: JSON file, built-in defaults, and dotted-path overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::assembly::AssemblyOptions;
use crate::convergence::ConvergenceSettings;
use crate::error::{Error, Result};
use crate::kernel::KernelContext;
use crate::mesh::Mesh1D;
use crate::quadrature::QuadratureConfig;
use crate::smoothness::{ProfileSpec, SmoothnessProfile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainConfig {
    pub r_int: f64,
    pub r_ext: f64,
    pub level: u32,
}

impl Default for DomainConfig {
    fn default() -> Self {
        Self { r_int: 3.0, r_ext: 4.0, level: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    pub kappa: f64,
    pub mu: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self { kappa: 2.5, mu: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub m: usize,
    pub seed: u64,
    /// Number of samples written to the samples CSV (the first ones by index).
    pub emit: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self { m: 1000, seed: 2024, emit: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Also write full matrices in VWM1 form.
    pub binary: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: PathBuf::from("out"), binary: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CovarianceConfig {
    pub slices: Vec<f64>,
    /// Add empirical slices from `sampling.m` draws next to the analytic ones.
    pub empirical: bool,
}

impl Default for CovarianceConfig {
    fn default() -> Self {
        Self { slices: vec![-1.5, 0.0, 1.5], empirical: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaternConfig {
    pub r_max: f64,
    pub points: usize,
}

impl Default for MaternConfig {
    fn default() -> Self {
        Self { r_max: 3.0, points: 301 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelCheckConfig {
    pub pairs: usize,
    pub z0: f64,
    pub seed: u64,
}

impl Default for KernelCheckConfig {
    fn default() -> Self {
        Self { pairs: 10_000, z0: 1.0, seed: 7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub kernel: KernelConfig,
    pub profile: ProfileSpec,
    pub quadrature: QuadratureConfig,
    pub assembly: AssemblyOptions,
    pub sampling: SamplingConfig,
    pub outputs: OutputConfig,
    pub covariance: CovarianceConfig,
    pub matern: MaternConfig,
    pub convergence: ConvergenceSettings,
    pub kernel_check: KernelCheckConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            domain: DomainConfig::default(),
            kernel: KernelConfig::default(),
            profile: ProfileSpec::Step { s_lower: 0.35, s_upper: 0.85 },
            quadrature: QuadratureConfig::default(),
            assembly: AssemblyOptions::default(),
            sampling: SamplingConfig::default(),
            outputs: OutputConfig::default(),
            covariance: CovarianceConfig::default(),
            matern: MaternConfig::default(),
            convergence: ConvergenceSettings::default(),
            kernel_check: KernelCheckConfig::default(),
        }
    }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(format!("{key} must be positive and finite, got {v}")))
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::config(format!("config {}: {e}", path.display())))
    }

    /// Checks every numeric range; the returned error names the offending key.
    pub fn validate(&self) -> Result<()> {
        positive("domain.r_int", self.domain.r_int)?;
        positive("domain.r_ext", self.domain.r_ext)?;
        self.mesh()?;
        positive("kernel.kappa", self.kernel.kappa)?;
        positive("kernel.mu", self.kernel.mu)?;
        self.smoothness()?;
        self.quadrature.validate()?;
        if self.assembly.threads == Some(0) {
            return Err(Error::config("assembly.threads must be at least 1"));
        }
        if self.sampling.emit > self.sampling.m {
            log::debug!("sampling.emit exceeds sampling.m; all samples are written");
        }
        positive("matern.r_max", self.matern.r_max)?;
        if self.matern.points < 2 {
            return Err(Error::config("matern.points must be at least 2"));
        }
        for &x in &self.covariance.slices {
            if !(x.abs() <= self.domain.r_int) {
                return Err(Error::config(format!(
                    "covariance.slices entry {x} lies outside [-{r}, {r}]",
                    r = self.domain.r_int
                )));
            }
        }
        self.convergence.validate()?;
        positive("kernel_check.z0", self.kernel_check.z0)?;
        Ok(())
    }

    pub fn mesh(&self) -> Result<Mesh1D> {
        Mesh1D::build_uniform(self.domain.r_int, self.domain.r_ext, self.domain.level)
    }

    pub fn smoothness(&self) -> Result<SmoothnessProfile> {
        self.profile.build(self.domain.r_int).map_err(|e| match e {
            Error::Domain(msg) | Error::Config(msg) => Error::config(format!("profile: {msg}")),
            other => other,
        })
    }

    pub fn kernel_context(&self) -> Result<KernelContext> {
        KernelContext::new(self.kernel.kappa, self.kernel.mu, self.smoothness()?)
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// Sets the value at a dotted path such as `kernel.kappa`.
    ///
    /// The raw text is read as JSON when possible; a comma-separated list becomes an array.
    pub fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        let mut root = self.to_json();
        let parts: Vec<&str> = key.split('.').collect();
        if parts.iter().any(|p| p.is_empty()) {
            return Err(Error::config(format!("malformed configuration key `{key}`")));
        }
        let (last, parents) = parts.split_last().expect("non-empty");
        let mut node = &mut root;
        for p in parents {
            node = node
                .get_mut(*p)
                .filter(|v| v.is_object())
                .ok_or_else(|| Error::config(format!("unknown configuration key `{key}`")))?;
        }
        let obj = node.as_object_mut().expect("checked object");
        obj.insert((*last).to_string(), parse_value(raw));
        *self = serde_json::from_value(root)
            .map_err(|e| Error::config(format!("invalid value for `{key}`: {e}")))?;
        Ok(())
    }

    /// Replaces the profile block by the defaults of another kind.
    pub fn set_profile_kind(&mut self, kind: &str) -> Result<()> {
        self.profile = ProfileSpec::default_for_kind(kind)
            .ok_or_else(|| Error::config(format!("unknown profile.kind `{kind}`")))?;
        Ok(())
    }
}

fn parse_value(raw: &str) -> Value {
    if let Ok(v) = serde_json::from_str::<Value>(raw) {
        return v;
    }
    if raw.contains(',') {
        let items: Option<Vec<Value>> =
            raw.split(',').map(|s| serde_json::from_str::<Value>(s.trim()).ok()).collect();
        if let Some(items) = items {
            return Value::Array(items);
        }
    }
    Value::String(raw.to_string())
}
