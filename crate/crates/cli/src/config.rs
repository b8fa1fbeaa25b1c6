//! Run configuration: loading from TOML or JSON, defaults, validation.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use serde::{Deserialize, Serialize};

use regfrac::discretization::AssemblyConfig;
use regfrac::{Domain, Expr, FracParams, MeasureData, Mesh, PVQuadratureConfig, Point};

/// Everything a run depends on. `output_dir` and `threads` are not
/// serialized: they do not influence any computed value, and leaving them
/// out keeps reports byte-identical across output locations.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_domain")]
    pub domain: Domain,
    #[serde(default)]
    pub mesh: MeshSpec,
    #[serde(default)]
    pub problem: Option<Problem>,
    #[serde(default)]
    pub checks: Vec<String>,
    #[serde(default)]
    pub operator: Option<OperatorSpec>,
    #[serde(default)]
    pub fit: FitSpec,
    #[serde(default)]
    pub quadrature: PVQuadratureConfig,
    #[serde(default)]
    pub assembly: AssemblyConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir", skip_serializing)]
    pub output_dir: PathBuf,
    #[serde(default = "default_threads", skip_serializing)]
    pub threads: usize,
}

fn default_alpha() -> f64 {
    0.75
}

fn default_domain() -> Domain {
    Domain::Interval { a: -1.0, b: 1.0 }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("regfrac-out")
}

fn default_threads() -> usize {
    1
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            alpha: default_alpha(),
            domain: default_domain(),
            mesh: MeshSpec::default(),
            problem: None,
            checks: Vec::new(),
            operator: None,
            fit: FitSpec::default(),
            quadrature: PVQuadratureConfig::default(),
            assembly: AssemblyConfig::default(),
            seed: 0,
            output_dir: default_output_dir(),
            threads: default_threads(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    /// Interior nodes (interval) or radial layers (disk).
    #[serde(default = "default_n")]
    pub n: usize,
    /// Grading exponent `q >= 1`.
    #[serde(default = "default_q")]
    pub q: f64,
}

fn default_n() -> usize {
    128
}

fn default_q() -> f64 {
    2.0
}

impl Default for MeshSpec {
    fn default() -> Self {
        MeshSpec { n: default_n(), q: default_q() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Problem {
    Classical {
        f: Expr,
    },
    WeakL2 {
        f: Expr,
    },
    VeryWeak {
        #[serde(default)]
        atoms: Vec<Atom>,
        #[serde(default)]
        density: Option<Expr>,
    },
    NonzeroBoundary {
        f: Expr,
        g: Expr,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub point: Vec<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    #[serde(default)]
    pub expr: Option<Expr>,
    #[serde(default)]
    pub points: Vec<Vec<f64>>,
    #[serde(default)]
    pub grid: Option<Grid>,
}

/// `count` equally spaced points from `from` to `to` inclusive, along the
/// first coordinate axis through the domain center.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub from: f64,
    pub to: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSpec {
    /// Window `(rho_lo, rho_hi)`; defaults to `(1e-3, 1e-1)` times half the
    /// diameter.
    #[serde(default)]
    pub window: Option<(f64, f64)>,
    /// Expected exponent; when set, `fit-decay` fails outside `tolerance`.
    #[serde(default)]
    pub expected: Option<f64>,
    #[serde(default = "default_fit_tolerance")]
    pub tolerance: f64,
}

fn default_fit_tolerance() -> f64 {
    0.05
}

impl Default for FitSpec {
    fn default() -> Self {
        FitSpec { window: None, expected: None, tolerance: default_fit_tolerance() }
    }
}

impl RunConfig {
    /// Reads a config file; the format follows the extension (`.toml` or
    /// `.json`). A JSON report written by a previous run is accepted too:
    /// its embedded `config` object is used.
    pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        match ext.as_deref() {
            Some("toml") => toml::from_str(&text).with_context(|| format!("invalid config {}", path.display())),
            Some("json") => {
                let mut value: serde_json::Value =
                    serde_json::from_str(&text).with_context(|| format!("invalid JSON in {}", path.display()))?;
                if let Some(embedded) = value.get_mut("config").filter(|c| c.is_object()) {
                    value = embedded.take();
                }
                serde_json::from_value(value).with_context(|| format!("invalid config {}", path.display()))
            }
            _ => bail!("config {} must have a .toml or .json extension", path.display()),
        }
    }
}

/// Validated geometry and parameters shared by all subcommands.
pub struct Setup {
    pub domain: Domain,
    pub params: FracParams,
    pub mesh: Arc<Mesh>,
}

impl Setup {
    pub fn new(cfg: &RunConfig) -> anyhow::Result<Setup> {
        let domain = match cfg.domain {
            Domain::Interval { a, b } => Domain::interval(a, b)?,
            Domain::Disk { center, radius } => Domain::disk(center, radius)?,
        };
        let params = FracParams::new(cfg.alpha, domain.dim())?;
        let mesh = Arc::new(Mesh::graded(domain, cfg.mesh.n, cfg.mesh.q)?);
        cfg.quadrature.validate()?;
        if cfg.assembly.gauss_order == 0 || cfg.assembly.duffy_order == 0 {
            bail!("assembly quadrature orders must be positive");
        }
        if cfg.threads == 0 {
            bail!("--threads must be at least 1");
        }
        if !(cfg.fit.tolerance > 0.0) {
            bail!("fit.tolerance must be positive");
        }
        Ok(Setup { domain, params, mesh })
    }

    pub fn point(&self, coords: &[f64]) -> anyhow::Result<Point> {
        let p = match (self.domain.dim(), coords) {
            (1, [x]) => Point::on_line(*x),
            (2, [x, y]) => Point::new(*x, *y),
            (d, c) => bail!("point {c:?} has {} coordinates, domain has dimension {d}", c.len()),
        };
        if !(self.domain.rho(p) > 0.0) {
            bail!("point {coords:?} is not strictly inside the domain");
        }
        Ok(p)
    }

    pub fn measure(&self, atoms: &[Atom], density: Option<&Expr>) -> anyhow::Result<MeasureData> {
        let atoms = atoms.iter().map(|a| Ok((self.point(&a.point)?, a.weight))).collect::<anyhow::Result<Vec<_>>>()?;
        MeasureData::new(atoms, density.cloned(), &self.domain, self.params.beta()).map_err(|e| anyhow!(e))
    }

    /// Evaluation points of `operator-eval`, explicit points first.
    pub fn operator_points(&self, spec: &OperatorSpec) -> anyhow::Result<Vec<Point>> {
        let mut pts = spec.points.iter().map(|c| self.point(c)).collect::<anyhow::Result<Vec<_>>>()?;
        if let Some(g) = spec.grid {
            if g.count == 0 {
                bail!("operator.grid.count must be positive");
            }
            let center = match self.domain {
                Domain::Interval { a, b } => Point::on_line(0.5 * (a + b)),
                Domain::Disk { center, .. } => center,
            };
            for k in 0..g.count {
                let t = if g.count == 1 { g.from } else { g.from + (g.to - g.from) * k as f64 / (g.count - 1) as f64 };
                let p = Point::new(t, center.y);
                let coords = if self.domain.dim() == 1 { vec![p.x] } else { vec![p.x, p.y] };
                pts.push(self.point(&coords)?);
            }
        }
        if pts.is_empty() {
            bail!("operator-eval needs operator.points or operator.grid");
        }
        Ok(pts)
    }
}
