//! Run configuration: JSON file, `--set` overrides, validation.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use allen_cahn::connections::eps1_star;
use allen_cahn::potential::{Family, PotentialSpec, DEFAULT_CAP, DEFAULT_MOLLIFY_RADIUS};

/// A potential parameter: a number, or a multiple of a named constant
/// (`"eps1_star"`, `"sigma_star"`, `"1.5*sigma_star"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Value(f64),
    Symbol(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<Param>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps1: Option<Param>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps2: Option<Param>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mollify_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap_value: Option<f64>,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        Self {
            family: "W1".into(),
            eps: Some(Param::Symbol("sqrt3/6".into())),
            eps1: None,
            eps2: None,
            mollify_radius: None,
            cap_value: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathConfig {
    /// Node count of computed connections.
    #[serde(rename = "N")]
    pub n: usize,
}

impl Default for PathConfig {
    fn default() -> Self {
        Self { n: 2001 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "R")]
    pub r_half: f64,
    pub mu: f64,
    pub eta: f64,
    pub h: f64,
    pub r: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            r_half: 6.0,
            mu: 3.0,
            eta: 0.75,
            h: 0.1,
            r: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_iter: usize,
    pub tol_rel: f64,
    pub fold_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iter: 50_000,
            tol_rel: 1e-10,
            fold_every: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    pub eps_flow: f64,
    pub t_end: f64,
    pub x2_split: f64,
    pub half_width: f64,
    pub half_height: f64,
    pub h: f64,
    pub dt_safety: f64,
    /// Amplitude of the symmetry-breaking bump added to `u1` at the junction.
    pub x1_tilt: f64,
    /// Connection labels (as written by `connections`) for the two phases.
    pub top: String,
    pub bottom: String,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            eps_flow: 1.0,
            t_end: 1.0,
            x2_split: -1.5,
            half_width: 10.0,
            half_height: 3.0,
            h: 0.04,
            dt_safety: 0.2,
            x1_tilt: 1e-6,
            top: "e2_plus".into(),
            bottom: "e1_plus".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShootingConfig {
    pub n_scan: usize,
    pub u2_max: f64,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        Self {
            n_scan: 301,
            u2_max: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossingConfig {
    pub eps_bracket: [f64; 2],
    pub sigma_bracket: [f64; 2],
}

impl Default for CrossingConfig {
    fn default() -> Self {
        Self {
            eps_bracket: [0.1, 2.0],
            sigma_bracket: [0.5, 1.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub emit_svg: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            emit_svg: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub potential: PotentialConfig,
    #[serde(default)]
    pub path: PathConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub flow: FlowConfig,
    #[serde(default)]
    pub shooting: ShootingConfig,
    #[serde(default)]
    pub crossing: CrossingConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
    #[serde(default)]
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

/// Sets `value` at the dotted `key` of a JSON object, creating objects on
/// the way. The value is parsed as JSON and taken as a string otherwise.
pub fn apply_override(doc: &mut serde_json::Value, key: &str, raw: &str) -> Result<()> {
    let value = serde_json::from_str(raw).unwrap_or_else(|_| serde_json::Value::String(raw.into()));
    let mut cur = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (k, part) in parts.iter().enumerate() {
        if part.is_empty() {
            bail!("empty segment in override key `{key}`");
        }
        let obj = cur.as_object_mut().ok_or_else(|| {
            anyhow!(
                "override `{key}`: `{}` is not an object",
                parts[..k].join(".")
            )
        })?;
        if k + 1 == parts.len() {
            obj.insert((*part).to_string(), value);
            return Ok(());
        }
        cur = obj.entry(*part).or_insert_with(|| serde_json::json!({}));
    }
    unreachable!("split yields at least one segment")
}

fn check(ok: bool, field: &str, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        bail!("{field}: {msg}")
    }
}

impl RunConfig {
    /// Parses a config document with overrides applied first. Errors name
    /// the offending field path.
    pub fn from_json_str(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut doc: serde_json::Value =
            serde_json::from_str(text).context("config is not valid JSON")?;
        if !doc.is_object() {
            bail!("config must be a JSON object");
        }
        for (k, v) in overrides {
            apply_override(&mut doc, k, v)?;
        }
        let cfg: RunConfig = serde_path_to_error::deserialize(doc)
            .map_err(|e| anyhow!("{}: {}", e.path(), e.inner()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::from_json_str(&text, overrides)
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.potential;
        check(
            matches!(p.family.as_str(), "W1" | "W2"),
            "potential.family",
            "must be \"W1\" or \"W2\"",
        )?;
        if let Some(r) = p.mollify_radius {
            check(
                r > 0.0 && r < 0.5,
                "potential.mollify_radius",
                "must lie in (0, 0.5)",
            )?;
        }
        if let Some(c) = p.cap_value {
            check(
                c >= 10.0 && c.is_finite(),
                "potential.cap_value",
                "must be finite and at least 10",
            )?;
        }
        for (name, v) in [("eps", &p.eps), ("eps1", &p.eps1), ("eps2", &p.eps2)] {
            if let Some(Param::Symbol(s)) = v {
                parse_symbol(s).map_err(|e| anyhow!("potential.{name}: {e}"))?;
            }
            if let Some(Param::Value(x)) = v {
                check(
                    *x > 0.0 && x.is_finite(),
                    &format!("potential.{name}"),
                    "must be positive",
                )?;
            }
        }
        check(
            self.path.n >= 101 && self.path.n % 2 == 1,
            "path.N",
            "must be odd and at least 101",
        )?;
        let g = &self.grid;
        check(g.r_half > 0.0, "grid.R", "must be positive")?;
        check(g.h > 0.0 && g.h <= g.r_half, "grid.h", "must lie in (0, R]")?;
        check(
            g.eta > 0.5 && g.eta < g.mu,
            "grid.eta",
            "must satisfy 1/2 < eta < mu",
        )?;
        check(g.r > 0.0 && g.r < 1.0, "grid.r", "must lie in (0, 1)")?;
        let s = &self.solver;
        check(s.max_iter >= 1, "solver.max_iter", "must be at least 1")?;
        check(
            s.tol_rel > 0.0 && s.tol_rel < 1.0,
            "solver.tol_rel",
            "must lie in (0, 1)",
        )?;
        check(s.fold_every >= 1, "solver.fold_every", "must be at least 1")?;
        let f = &self.flow;
        check(f.eps_flow > 0.0, "flow.eps_flow", "must be positive")?;
        check(f.t_end > 0.0, "flow.t_end", "must be positive")?;
        check(f.h > 0.0, "flow.h", "must be positive")?;
        check(
            f.half_width > 0.0 && f.half_height > 0.0,
            "flow.half_width",
            "extents must be positive",
        )?;
        check(
            f.x2_split.abs() < f.half_height,
            "flow.x2_split",
            "must lie inside the strip",
        )?;
        check(
            f.dt_safety > 0.0 && f.dt_safety <= 1.0,
            "flow.dt_safety",
            "must lie in (0, 1]",
        )?;
        check(
            f.x1_tilt.is_finite() && f.x1_tilt.abs() <= 0.1,
            "flow.x1_tilt",
            "must be finite and at most 0.1 in size",
        )?;
        check(
            self.shooting.n_scan >= 2,
            "shooting.n_scan",
            "must be at least 2",
        )?;
        check(
            self.shooting.u2_max > 0.0,
            "shooting.u2_max",
            "must be positive",
        )?;
        for (name, b) in [
            ("crossing.eps_bracket", self.crossing.eps_bracket),
            ("crossing.sigma_bracket", self.crossing.sigma_bracket),
        ] {
            check(
                b[0] > 0.0 && b[1] > b[0],
                name,
                "must be an increasing pair of positive numbers",
            )?;
        }
        Ok(())
    }

    /// SHA-256 of the serialized config.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    /// Resolves symbolic parameters. `sigma_star` is read from the
    /// `sigma_star.json` artifact in the output directory.
    pub fn potential_spec(&self) -> Result<PotentialSpec> {
        let p = &self.potential;
        let value = |name: &str, v: &Option<Param>| self.resolve(name, v);
        let family = match p.family.as_str() {
            "W1" => Family::W1 {
                eps: value("eps", &p.eps)?,
            },
            _ => Family::W2 {
                eps1: value("eps1", &p.eps1)?,
                eps2: value("eps2", &p.eps2)?,
            },
        };
        let small = match family {
            Family::W1 { eps } => eps,
            Family::W2 { eps1, .. } => eps1,
        };
        let radius = p
            .mollify_radius
            .unwrap_or(DEFAULT_MOLLIFY_RADIUS.min(0.25 * small));
        Ok(PotentialSpec::new(
            family,
            radius,
            p.cap_value.unwrap_or(DEFAULT_CAP),
        )?)
    }

    /// Value of the potential parameter `name`, resolving symbols.
    pub fn resolve(&self, name: &str, v: &Option<Param>) -> Result<f64> {
        match v {
            None => bail!("potential.{name} is required for {}", self.potential.family),
            Some(Param::Value(x)) => Ok(*x),
            Some(Param::Symbol(s)) => {
                let (factor, constant) = parse_symbol(s)?;
                Ok(factor * self.constant(constant)?)
            }
        }
    }

    fn constant(&self, name: Constant) -> Result<f64> {
        match name {
            Constant::Sqrt3Over6 => Ok(3f64.sqrt() / 6.0),
            Constant::Eps1Star => Ok(eps1_star()),
            Constant::SigmaStar => {
                let path = self.outputs.dir.join("sigma_star.json");
                let text = std::fs::read_to_string(&path).map_err(|_| {
                    anyhow!(
                        "missing prerequisite artifact {}: run `sigma-star` first",
                        path.display()
                    )
                })?;
                let doc: serde_json::Value = serde_json::from_str(&text)?;
                doc.pointer("/quadrature/parameter")
                    .and_then(|v| v.as_f64())
                    .ok_or_else(|| anyhow!("{} has no quadrature root", path.display()))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Constant {
    Sqrt3Over6,
    Eps1Star,
    SigmaStar,
}

fn parse_symbol(s: &str) -> Result<(f64, Constant)> {
    let (factor, name) = match s.split_once('*') {
        Some((f, n)) => (
            f.trim()
                .parse::<f64>()
                .map_err(|_| anyhow!("bad factor in `{s}`"))?,
            n.trim(),
        ),
        None => (1.0, s.trim()),
    };
    let constant = match name {
        "sqrt3/6" => Constant::Sqrt3Over6,
        "eps1_star" => Constant::Eps1Star,
        "sigma_star" => Constant::SigmaStar,
        other => bail!("unknown constant `{other}` (expected sqrt3/6, eps1_star or sigma_star)"),
    };
    if !(factor > 0.0 && factor.is_finite()) {
        bail!("factor in `{s}` must be positive");
    }
    Ok((factor, constant))
}
