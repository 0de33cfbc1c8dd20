//! JSON experiment configuration: a versioned file with one experiment per
//! file. Parsing goes through the library constructors, so invalid
//! integrands or geometries are rejected before any work starts.

use serde::{Deserialize, Serialize};

use strainhom::error::{Error, Result};
use strainhom::integrand::Integrand;
use strainhom::solver::StructureFamily;
use strainhom::structure::Rect;
use strainhom::tensor::{RigidMotion, SymMatrix, Vector};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigFile {
    pub schema_version: u32,
    #[serde(flatten)]
    pub experiment: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentConfig {
    Homogenize(HomogenizeConfig),
    Nonlocal(NonlocalConfig),
    Properties(PropertiesConfig),
}

impl ExperimentConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentConfig::Homogenize(_) => "homogenize",
            ExperimentConfig::Nonlocal(_) => "nonlocal",
            ExperimentConfig::Properties(_) => "properties",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogenizeConfig {
    pub structure: StructureFamily,
    pub integrand: IntegrandSpec,
    pub ks: Vec<usize>,
    pub data: DatumSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlocalConfig {
    pub omega: Rect,
    pub eta: f64,
    pub gamma: f64,
    pub epsilons: Vec<f64>,
    #[serde(default = "default_theta_nodes")]
    pub theta_nodes: usize,
    pub u1: MotionSpec,
    pub tiles: Vec<MotionSpec>,
}

fn default_theta_nodes() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertiesConfig {
    pub structure: StructureFamily,
    pub integrand: IntegrandSpec,
    pub seed: u64,
    #[serde(default = "default_growth_samples")]
    pub growth_samples: usize,
}

fn default_growth_samples() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum IntegrandSpec {
    PurePower { p: f64, weight: f64 },
    Quadratic { c: Vec<Vec<f64>>, alpha: f64, beta: f64 },
}

impl IntegrandSpec {
    pub fn build(&self) -> Result<Integrand> {
        match self {
            IntegrandSpec::PurePower { p, weight } => Integrand::pure_power(*p, *weight),
            IntegrandSpec::Quadratic { c, alpha, beta } => {
                Integrand::quadratic(c.clone(), *alpha, *beta)
            }
        }
    }
}

/// Boundary data: either an explicit list of symmetric matrices (full rows)
/// or a seeded random sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DatumSpec {
    Explicit { matrices: Vec<Vec<Vec<f64>>> },
    Sampled { count: usize, seed: u64 },
}

impl DatumSpec {
    /// Resolve to concrete matrices; `seed_override` replaces the stored
    /// seed of a sampled spec.
    pub fn resolve(&self, n: usize, seed_override: Option<u64>) -> Result<Vec<SymMatrix>> {
        match self {
            DatumSpec::Explicit { matrices } => {
                matrices.iter().map(|rows| SymMatrix::new(n, rows)).collect()
            }
            DatumSpec::Sampled { count, seed } => {
                use rand::{Rng, SeedableRng};
                let mut rng =
                    rand_chacha::ChaCha8Rng::seed_from_u64(seed_override.unwrap_or(*seed));
                let d = strainhom::integrand::sym_dim(n);
                Ok((0..*count)
                    .map(|_| {
                        let coords: Vec<f64> =
                            (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
                        strainhom::integrand::sym_from_coords(n, &coords)
                    })
                    .collect())
            }
        }
    }
}

/// 3-D rigid motion in axial form, `x -> alpha ∧ x + beta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionSpec {
    pub alpha: [f64; 3],
    pub beta: [f64; 3],
}

impl MotionSpec {
    pub fn build(&self) -> RigidMotion {
        RigidMotion::from_axial(
            &Vector::from_xyz(self.alpha[0], self.alpha[1], self.alpha[2]),
            &Vector::from_xyz(self.beta[0], self.beta[1], self.beta[2]),
        )
    }
}

pub fn parse(text: &str) -> Result<ConfigFile> {
    let cfg: ConfigFile = serde_json::from_str(text)
        .map_err(|e| Error::InvalidParameter(format!("config parse error: {e}")))?;
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(Error::InvalidParameter(format!(
            "unsupported schema version {} (expected {SCHEMA_VERSION})",
            cfg.schema_version
        )));
    }
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &ConfigFile) -> Result<()> {
    match &cfg.experiment {
        ExperimentConfig::Homogenize(h) => {
            if h.ks.is_empty() {
                return Err(Error::InvalidParameter("ks must be nonempty".into()));
            }
            h.integrand.build()?;
            let n = h.structure.dim();
            h.data.resolve(n, None)?;
        }
        ExperimentConfig::Nonlocal(nl) => {
            if nl.epsilons.is_empty() {
                return Err(Error::InvalidParameter("epsilons must be nonempty".into()));
            }
            let grid = strainhom::structure::TileGrid::new(nl.omega, nl.eta)?;
            for &eps in &nl.epsilons {
                grid.cylinders_per_side(eps)?;
            }
            if nl.tiles.len() != grid.tile_count() {
                return Err(Error::InvalidParameter(format!(
                    "expected {} tile motions, got {}",
                    grid.tile_count(),
                    nl.tiles.len()
                )));
            }
        }
        ExperimentConfig::Properties(p) => {
            p.integrand.build()?;
        }
    }
    Ok(())
}

/// Canonical serialization used for the provenance hash, so that formatting
/// of the input file does not matter but every field does.
pub fn canonical_string(cfg: &ConfigFile) -> String {
    serde_json::to_string(cfg).expect("config serialization cannot fail")
}
