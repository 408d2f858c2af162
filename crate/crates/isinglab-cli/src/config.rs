//! TOML experiment configuration. Every table rejects unknown keys.

use std::path::{Path, PathBuf};

use isinglab::lattice::{BoundaryKind, Point, Region};
use isinglab::model::{Boundary, Field, Interaction, Model, Wall};
use isinglab::rfield::Disorder;
use isinglab::sampler::Observable;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub max_exact_sites: Option<usize>,
    pub out: Option<PathBuf>,
    pub model: Option<ModelConfig>,
    pub exact: Option<ExactConfig>,
    pub sample: Option<SampleConfig>,
    pub contour: Option<ContourConfig>,
    pub coarse: Option<CoarseConfig>,
    pub rfield: Option<RfieldConfig>,
    pub audit: Option<AuditConfig>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(rename = "box")]
    pub box_: Option<String>,
    /// lower corner of the box; centred by default
    pub lo: Option<Vec<i32>>,
    /// explicit site list, instead of a box
    pub sites: Option<Vec<Point>>,
    pub interaction: Option<Interaction>,
    pub field: Option<Field>,
    pub wall: Option<Wall>,
    pub bc: Option<Boundary>,
    pub beta: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExactConfig {
    pub wall_lambda_max: Option<f64>,
    pub wall_points: Option<usize>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub sweeps: Option<usize>,
    pub burn_in: Option<usize>,
    pub thin: Option<usize>,
    pub chain: Option<u64>,
    pub observables: Option<Vec<Observable>>,
    pub profile: Option<bool>,
    pub exact_check: Option<bool>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourConfig {
    #[serde(rename = "box")]
    pub box_: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Lemma {
    Geo1,
    Geo2,
    Census,
    Covering,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoarseConfig {
    pub lemma: Option<Lemma>,
    pub rect: Option<String>,
    pub lambda: Option<f64>,
    pub levels: Option<Vec<u32>>,
    pub samples: Option<usize>,
    #[serde(rename = "box")]
    pub box_: Option<String>,
    pub ell_max: Option<u32>,
    pub sizes: Option<Vec<usize>>,
    pub eps: Option<f64>,
    pub ladder_depth: Option<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Animal,
    Tail,
    Joint,
    BadEvent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Inner,
    Exterior,
    Edge,
}

impl Kind {
    pub fn boundary(self) -> BoundaryKind {
        match self {
            Kind::Inner => BoundaryKind::Inner,
            Kind::Exterior => BoundaryKind::Exterior,
            Kind::Edge => BoundaryKind::Edge,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RfieldConfig {
    pub task: Option<Task>,
    pub dist: Option<Disorder>,
    pub eps: Option<f64>,
    pub dim: Option<usize>,
    pub k_max: Option<usize>,
    pub kind: Option<Kind>,
    pub seeds: Option<usize>,
    pub set: Option<Vec<Point>>,
    pub set_prime: Option<Vec<Point>>,
    pub samples: Option<usize>,
    pub lambdas: Option<Vec<f64>>,
    pub c: Option<f64>,
    pub fields: Option<usize>,
    pub sizes: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    pub suite: Option<String>,
    #[serde(rename = "box")]
    pub box_: Option<String>,
    pub draws: Option<usize>,
    pub tolerance: Option<f64>,
}

/// Reads and validates a config file; errors carry the offending key path.
pub fn load(path: &Path) -> Result<FileConfig, String> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    parse(&raw).map_err(|e| format!("{}: {e}", path.display()))
}

pub fn parse(raw: &str) -> Result<FileConfig, String> {
    let toml_err = |e: toml::de::Error| e.to_string().trim_end().to_string();
    let de = toml::Deserializer::parse(raw).map_err(toml_err)?;
    let cfg: FileConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner().to_string();
        let inner = inner.trim_end();
        if path == "." {
            inner.to_string()
        } else {
            format!("at `{path}`: {inner}")
        }
    })?;
    // unit variants of tagged enums drop extra keys silently; a round trip exposes them
    let raw_value: toml::Value = toml::from_str(raw).map_err(toml_err)?;
    let typed = toml::Value::try_from(&cfg).map_err(|e| e.to_string())?;
    match unknown_key(&raw_value, &typed, "") {
        Some(p) => Err(format!("at `{p}`: unknown key")),
        None => Ok(cfg),
    }
}

fn unknown_key(raw: &toml::Value, typed: &toml::Value, path: &str) -> Option<String> {
    let join = |k: &str| if path.is_empty() { k.to_string() } else { format!("{path}.{k}") };
    match (raw, typed) {
        (toml::Value::Table(r), toml::Value::Table(t)) => r.iter().find_map(|(k, v)| match t.get(k) {
            None => Some(join(k)),
            Some(tv) => unknown_key(v, tv, &join(k)),
        }),
        (toml::Value::Array(r), toml::Value::Array(t)) => r
            .iter()
            .zip(t)
            .enumerate()
            .find_map(|(i, (a, b))| unknown_key(a, b, &format!("{path}[{i}]"))),
        _ => None,
    }
}

/// Side lengths from "NxM" (any dimension).
pub fn parse_dims(s: &str) -> Result<Vec<i32>, String> {
    let dims: Result<Vec<i32>, _> = s.split(['x', 'X']).map(|t| t.trim().parse::<i32>()).collect();
    match dims {
        Ok(v) if !v.is_empty() && v.iter().all(|k| *k >= 1) => Ok(v),
        _ => Err(format!("bad box `{s}`: expected side lengths like 3x3")),
    }
}

/// The box with the given side lengths, lower corner −⌊(k−1)/2⌋ unless `lo` is given.
pub fn box_region(dims: &[i32], lo: Option<&[i32]>) -> Result<Region, String> {
    let lo: Vec<i32> = match lo {
        Some(l) if l.len() == dims.len() => l.to_vec(),
        Some(l) => {
            return Err(format!(
                "lower corner {l:?} does not match box dimension {}",
                dims.len()
            ))
        }
        None => dims.iter().map(|k| -((k - 1) / 2)).collect(),
    };
    let hi: Vec<i32> = lo.iter().zip(dims).map(|(l, k)| l + k - 1).collect();
    Ok(Region::rect(&lo, &hi))
}

/// Model overrides given on the command line.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct ModelArgs {
    /// Box side lengths, e.g. 3x3
    #[arg(long = "box", value_name = "NxM")]
    pub box_: Option<String>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Nearest-neighbour coupling
    #[arg(long)]
    pub j: Option<f64>,
    /// Constant field
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long, value_enum)]
    pub bc: Option<BcArg>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum BcArg {
    Plus,
    Minus,
    Free,
}

/// Builds the model from the file table and flag overrides.
pub fn resolve_model(file: Option<&ModelConfig>, args: &ModelArgs) -> Result<Model, String> {
    let f = file.cloned().unwrap_or_default();
    let region = match (&args.box_, &f.sites, &f.box_) {
        (Some(b), _, _) => box_region(&parse_dims(b)?, f.lo.as_deref())?,
        (None, Some(s), _) => {
            let d = s.first().map(|p| p.dim()).ok_or("model.sites is empty")?;
            if s.iter().any(|p| p.dim() != d) {
                return Err("model.sites mixes dimensions".into());
            }
            Region::from_points(d, s.clone())
        }
        (None, None, Some(b)) => box_region(&parse_dims(b)?, f.lo.as_deref())?,
        (None, None, None) => return Err("no model region: set model.box, model.sites or --box".into()),
    };
    let interaction = match args.j {
        Some(j) => Interaction::nn(j),
        None => f.interaction.unwrap_or(Interaction::nn(1.0)),
    };
    let bc = match args.bc {
        Some(BcArg::Plus) => Boundary::Plus,
        Some(BcArg::Minus) => Boundary::Minus,
        Some(BcArg::Free) => Boundary::Free,
        None => f.bc.unwrap_or(Boundary::Free),
    };
    let mut m = Model::new(region, interaction, bc).with_beta(args.beta.or(f.beta).unwrap_or(1.0));
    match args.h {
        Some(h) => m = m.with_field(Field::Constant { h }),
        None => {
            if let Some(field) = f.field {
                m = m.with_field(field);
            }
        }
    }
    if let Some(w) = f.wall {
        m = m.with_wall(w);
    }
    m.validate().map_err(|e| e.to_string())?;
    Ok(m)
}
