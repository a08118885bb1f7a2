//! File-backed run configuration (TOML). Every section rejects unknown keys
//! and errors carry the `section.key` path.

use std::path::{Path, PathBuf};

use serde::de::{DeserializeOwned, Deserializer};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::elliptic::EllipticConfig;
use crate::error::{Error, Result};
use crate::fields::{DensityField, GridSpec};
use crate::jko::{ModelParams, W2Backend, W2StepConfig};
use crate::potentials::{EntropyKind, EntropySpec, ReactionSpec};
use crate::scenarios::InitPreset;
use crate::scheme::{SchemeConfig, BLOWUP_FACTOR};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    #[serde(default = "one")]
    pub dim: usize,
    pub lengths: Vec<f64>,
    pub cells: Vec<usize>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    /// `-Lap c + Lambda c = rho` with no-flux walls.
    Neumann,
    /// `-Lap c = rho`, `c = 0` on the boundary.
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub chi: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_bc")]
    pub bc: BoundaryCondition,
    /// `Lambda`; Neumann only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_screen: Option<f64>,
}

fn default_lambda() -> f64 {
    1.01
}
fn default_bc() -> BoundaryCondition {
    BoundaryCondition::Neumann
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyName {
    Boltzmann,
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropySection {
    pub kind: EntropyName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    /// Defaults to `0`, or to the built-in regularization when the family
    /// needs one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

impl Default for EntropySection {
    fn default() -> Self {
        Self {
            kind: EntropyName::Boltzmann,
            m: None,
            delta: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReactionSection {
    pub alpha: f64,
    pub beta: f64,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    pub tau: f64,
    pub t_final: f64,
    /// Defaults to `quantile1d` in 1d and `entropic` in 2d.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<W2Backend>,
    #[serde(default = "default_outer")]
    pub outer_iters: usize,
    /// Absolute regularizations; empty selects the grid default.
    #[serde(default)]
    pub eps_schedule: Vec<f64>,
    #[serde(default = "yes")]
    pub enforce_thresholds: bool,
    #[serde(default)]
    pub el_residual: bool,
    #[serde(default = "default_sentinel")]
    pub sentinel_factor: f64,
}

fn default_outer() -> usize {
    3
}
fn yes() -> bool {
    true
}
fn default_sentinel() -> f64 {
    BLOWUP_FACTOR
}

/// Initial density: a named preset with its parameters, or a snapshot CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum InitSection {
    Csv { csv: PathBuf },
    Preset(InitPreset),
}

impl<'de> Deserialize<'de> for InitSection {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let table = toml::Table::deserialize(d)?;
        if table.contains_key("csv") {
            if let Some(k) = table.keys().find(|k| *k != "csv") {
                return Err(D::Error::custom(format!("unknown field `{k}` next to `csv`")));
            }
            let csv = table["csv"]
                .as_str()
                .ok_or_else(|| D::Error::custom("`csv` must be a path string"))?;
            return Ok(InitSection::Csv { csv: csv.into() });
        }
        InitPreset::deserialize(toml::Value::Table(table))
            .map(InitSection::Preset)
            .map_err(|e| D::Error::custom(e.message()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// Snapshot every this many steps (plus the first and last); `0`
    /// keeps only those two.
    #[serde(default = "default_every")]
    pub save_every: usize,
    #[serde(default = "default_formats")]
    pub formats: Vec<SnapshotFormat>,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_every() -> usize {
    10
}
fn default_formats() -> Vec<SnapshotFormat> {
    vec![SnapshotFormat::Csv]
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            save_every: default_every(),
            formats: default_formats(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub domain: DomainSection,
    pub model: ModelSection,
    pub entropy: EntropySection,
    pub reaction: ReactionSection,
    pub scheme: SchemeSection,
    pub init: InitSection,
    pub output: OutputSection,
}

const SECTIONS: [&str; 7] = ["domain", "model", "entropy", "reaction", "scheme", "init", "output"];

fn section<T: DeserializeOwned>(table: &mut toml::Table, name: &str) -> Result<Option<T>> {
    let Some(value) = table.remove(name) else {
        return Ok(None);
    };
    T::deserialize(value).map(Some).map_err(|e| {
        let msg = e.message().to_string();
        let path = field_in(&msg).map_or_else(|| name.to_string(), |f| format!("{name}.{f}"));
        Error::Config(format!("{path}: {msg}"))
    })
}

fn required<T: DeserializeOwned>(table: &mut toml::Table, name: &str) -> Result<T> {
    section(table, name)?.ok_or_else(|| Error::Config(format!("{name}: missing section [{name}]")))
}

/// The key named by a serde message such as "missing field `beta`".
fn field_in(msg: &str) -> Option<&str> {
    let start = msg.find('`')? + 1;
    let len = msg[start..].find('`')?;
    Some(&msg[start..start + len])
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        if let Some(k) = table.keys().find(|k| !SECTIONS.contains(&k.as_str())) {
            return Err(Error::Config(format!("{k}: unknown section")));
        }
        let cfg = RunConfig {
            domain: required(&mut table, "domain")?,
            model: required(&mut table, "model")?,
            entropy: section(&mut table, "entropy")?.unwrap_or_default(),
            reaction: required(&mut table, "reaction")?,
            scheme: required(&mut table, "scheme")?,
            init: required(&mut table, "init")?,
            output: section(&mut table, "output")?.unwrap_or_default(),
        };
        cfg.grid()?;
        cfg.model_params()?;
        cfg.scheme_config()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn grid(&self) -> Result<GridSpec> {
        let d = &self.domain;
        if d.lengths.len() != d.dim || d.cells.len() != d.dim {
            return Err(Error::Config(format!(
                "domain: dim = {} needs that many lengths and cells",
                d.dim
            )));
        }
        GridSpec::new(&d.lengths, &d.cells).map_err(|e| Error::Config(format!("domain: {e}")))
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        let m = &self.model;
        let elliptic = match m.bc {
            BoundaryCondition::Neumann => EllipticConfig::NeumannScreened {
                lambda: m.lambda_screen.unwrap_or(1.0),
            },
            BoundaryCondition::Dirichlet => {
                if m.lambda_screen.is_some() {
                    return Err(Error::Config(
                        "model.lambda_screen: only used with bc = \"neumann\"".into(),
                    ));
                }
                EllipticConfig::DirichletPoisson
            }
        };
        let e = &self.entropy;
        let kind = match (e.kind, e.m) {
            (EntropyName::Boltzmann, None) => EntropyKind::Boltzmann,
            (EntropyName::Boltzmann, Some(_)) => {
                return Err(Error::Config("entropy.m: only used with kind = \"power\"".into()))
            }
            (EntropyName::Power, Some(m)) => EntropyKind::Power { m },
            (EntropyName::Power, None) => return Err(Error::Config("entropy.m: missing field `m`".into())),
        };
        let entropy = match e.delta {
            Some(delta) => EntropySpec::new(kind, delta),
            None => EntropySpec::new(kind, 0.0).map(EntropySpec::regularized_if_needed),
        }
        .map_err(|err| Error::Config(format!("entropy: {err}")))?;
        let r = &self.reaction;
        let reaction =
            ReactionSpec::new(r.alpha, r.beta, r.r).map_err(|err| Error::Config(format!("reaction: {err}")))?;
        let params = ModelParams {
            chi: m.chi,
            lambda: m.lambda,
            elliptic,
            entropy,
            reaction,
        };
        params
            .validate()
            .map_err(|err| Error::Config(format!("model: {err}")))?;
        Ok(params)
    }

    pub fn backend(&self) -> W2Backend {
        self.scheme.backend.unwrap_or(if self.domain.dim == 1 {
            W2Backend::Quantile1d
        } else {
            W2Backend::Entropic
        })
    }

    pub fn scheme_config(&self) -> Result<SchemeConfig> {
        let s = &self.scheme;
        let mut w2 = W2StepConfig::new(self.backend(), s.tau);
        w2.outer_fixed_point_iters = s.outer_iters;
        w2.eps_schedule = s.eps_schedule.clone();
        w2.validate().map_err(|e| Error::Config(format!("scheme: {e}")))?;
        if self.domain.dim != 1 && w2.backend == W2Backend::Quantile1d {
            return Err(Error::Config("scheme.backend: quantile1d needs dim = 1".into()));
        }
        if s.el_residual && w2.backend != W2Backend::Quantile1d {
            return Err(Error::Config("scheme.el_residual: needs the quantile1d backend".into()));
        }
        if !(s.t_final > 0.0) {
            return Err(Error::Config(format!("scheme.t_final: must be > 0, got {}", s.t_final)));
        }
        if !(s.sentinel_factor > 1.0) {
            return Err(Error::Config(format!(
                "scheme.sentinel_factor: must be > 1, got {}",
                s.sentinel_factor
            )));
        }
        if self.output.formats.is_empty() {
            return Err(Error::Config("output.formats: needs at least one format".into()));
        }
        Ok(SchemeConfig {
            tau: s.tau,
            t_final: s.t_final,
            model: self.model_params()?,
            w2,
            enforce_thresholds: s.enforce_thresholds,
            el_residual: s.el_residual,
            sentinel_factor: s.sentinel_factor,
        })
    }

    /// Builds `rho0`; relative CSV paths resolve against `base`.
    pub fn initial_density(&self, base: &Path) -> Result<DensityField> {
        let grid = self.grid()?;
        match &self.init {
            InitSection::Preset(p) => p
                .build(grid, &self.model_params()?.reaction)
                .map_err(|e| Error::Config(format!("init: {e}"))),
            InitSection::Csv { csv } => {
                let path = if csv.is_absolute() { csv.clone() } else { base.join(csv) };
                let rho = DensityField::read_csv(&path)
                    .map_err(|e| Error::Config(format!("init.csv: {}: {e}", path.display())))?;
                if rho.grid() != &grid {
                    return Err(Error::Config(format!(
                        "init.csv: {} does not match the [domain] grid",
                        path.display()
                    )));
                }
                Ok(rho)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
[domain]
lengths = [1.0]
cells = [64]

[model]
chi = 0.5

[reaction]
alpha = 1.0
beta = 1.0
r = 2.0

[scheme]
tau = 0.01
t_final = 0.1

[init]
preset = "bump"
height = 2.0
"#;

    #[test]
    fn parses_with_defaults() {
        let cfg = RunConfig::from_toml_str(BASIC).unwrap();
        assert_eq!(cfg.backend(), W2Backend::Quantile1d);
        assert!(cfg.scheme.enforce_thresholds);
        assert_eq!(cfg.output, OutputSection::default());
        match cfg.init {
            InitSection::Preset(InitPreset::Bump { height, center, .. }) => {
                assert_eq!(height, 2.0);
                assert_eq!(center, 0.35);
            }
            ref other => panic!("{other:?}"),
        }
    }

    #[test]
    fn round_trips() {
        let cfg = RunConfig::from_toml_str(BASIC).unwrap();
        let again = RunConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.hash(), again.hash());
        assert_eq!(cfg.hash().len(), 64);
    }

    #[test]
    fn errors_name_the_field() {
        let err = RunConfig::from_toml_str(&BASIC.replace("beta = 1.0\n", "")).unwrap_err();
        assert!(err.to_string().contains("reaction.beta"), "{err}");
        let err = RunConfig::from_toml_str(&BASIC.replace("chi = 0.5", "chi = 0.5\ngamma = 1")).unwrap_err();
        assert!(err.to_string().contains("model.gamma"), "{err}");
        let err = RunConfig::from_toml_str(&format!("{BASIC}\n[extra]\nx = 1\n")).unwrap_err();
        assert!(err.to_string().contains("extra"), "{err}");
        let err = RunConfig::from_toml_str(&BASIC.replace("r = 2.0", "r = 1.0")).unwrap_err();
        assert!(err.to_string().contains("reaction"), "{err}");
    }

    #[test]
    fn csv_init_is_exclusive() {
        let text = BASIC.replace("preset = \"bump\"\nheight = 2.0", "csv = \"rho.csv\"");
        let cfg = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg.init, InitSection::Csv { csv: "rho.csv".into() });
        let text = BASIC.replace("preset = \"bump\"", "csv = \"rho.csv\"");
        assert!(RunConfig::from_toml_str(&text).is_err());
    }
}
