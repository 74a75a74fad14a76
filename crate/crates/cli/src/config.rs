//! Experiment configuration documents.
//!
//! A config is a TOML file with a fixed `schema_version`, optional global
//! knobs and one `[params]` table whose shape depends on the subcommand.
//! Unknown keys are errors everywhere.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Deserialize;

use histsim::depth::GateCountModel;
use histsim::freefermion::SingleParticleState;
use histsim::hamiltonians::{build_aubry_andre_spin, build_xy_spin, random_pauli_hamiltonian, AubryAndreParams, Boundary, XYParams};
use histsim::protocols::{cell_rng, EstimatorConfig, Mode};
use histsim::qcore::{PauliSum, StateVector};
use histsim::vhd::TrainConfig;

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Must name the subcommand when present.
    pub kind: Option<String>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub dense_cap: Option<usize>,
    #[serde(default)]
    pub params: toml::Table,
}

impl ExperimentConfig {
    pub fn empty() -> Self {
        ExperimentConfig { schema_version: SCHEMA_VERSION, kind: None, seed: None, threads: None, dense_cap: None, params: toml::Table::new() }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let cfg: ExperimentConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "schema_version: expected {SCHEMA_VERSION}, got {}",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn check_kind(&self, command: &str) -> Result<(), CliError> {
        match &self.kind {
            Some(k) if k != command => {
                Err(CliError::Config(format!("kind: config is for `{k}`, not `{command}`")))
            }
            _ => Ok(()),
        }
    }

    /// Kind-specific parameters, with `params.` prefixed to error paths.
    pub fn params<T: DeserializeOwned>(&self) -> Result<T, CliError> {
        toml::Value::Table(self.params.clone())
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(format!("params: {}", e.message())))
    }
}

fn nonempty<T>(what: &str, v: &[T]) -> Result<(), CliError> {
    if v.is_empty() {
        return Err(CliError::Config(format!("params.{what}: grid must not be empty")));
    }
    Ok(())
}

/// Either an explicit list or an inclusive `{ lo, hi, step }` range.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range { lo: f64, hi: f64, step: f64 },
}

impl Grid {
    pub fn values(&self, what: &str) -> Result<Vec<f64>, CliError> {
        let v = match self {
            Grid::List(v) => v.clone(),
            Grid::Range { lo, hi, step } => {
                if !(*step > 0.0 && hi >= lo) {
                    return Err(CliError::Config(format!("params.{what}: need lo <= hi and step > 0")));
                }
                histsim::freefermion::SweepGrid::range(*lo, *hi, *step)
            }
        };
        nonempty(what, &v)?;
        Ok(v)
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    AubryAndre {
        n: usize,
        #[serde(default = "default_j")]
        j: f64,
        lambda: f64,
        #[serde(default = "default_boundary")]
        boundary: Boundary,
    },
    Xy {
        n: usize,
        ax: Vec<f64>,
        ay: Vec<f64>,
        az: Vec<f64>,
    },
    /// Explicit `[[coeff, "word"], ...]` list.
    Pauli {
        terms: Vec<(f64, String)>,
    },
    /// Random real Pauli sum drawn from the run seed.
    Random {
        n: usize,
        terms: usize,
    },
}

fn default_j() -> f64 {
    2.0
}

fn default_boundary() -> Boundary {
    Boundary::Periodic
}

pub fn pauli_sum(terms: &[(f64, String)], what: &str) -> Result<PauliSum, CliError> {
    let first = terms.first().ok_or_else(|| CliError::Config(format!("params.{what}: empty term list")))?;
    let mut h = PauliSum::new(first.1.len());
    for (c, w) in terms {
        h.add(*c, w).map_err(|e| CliError::Config(format!("params.{what}: {e}")))?;
    }
    Ok(h)
}

impl ModelSpec {
    pub fn build(&self, seed: u64) -> Result<PauliSum, CliError> {
        let cfg = |e: histsim::Error| CliError::Config(format!("params.model: {e}"));
        match self {
            ModelSpec::AubryAndre { n, j, lambda, boundary } => {
                build_aubry_andre_spin(&AubryAndreParams::new(*n, *j, *lambda, *boundary)).map_err(cfg)
            }
            ModelSpec::Xy { n, ax, ay, az } => {
                build_xy_spin(&XYParams { n: *n, ax: ax.clone(), ay: ay.clone(), az: az.clone() }).map_err(cfg)
            }
            ModelSpec::Pauli { terms } => pauli_sum(terms, "model.terms"),
            ModelSpec::Random { n, terms } => random_pauli_hamiltonian(*n, *terms, &mut cell_rng(seed, 0)).map_err(cfg),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateSpec {
    Basis { index: usize },
    /// Haar-random state drawn from the run seed.
    Random,
    /// Single excitation spread evenly over 1-based `sites`.
    Sites { sites: Vec<usize> },
}

impl StateSpec {
    pub fn build(&self, n: usize, seed: u64) -> Result<StateVector, CliError> {
        let cfg = |e: histsim::Error| CliError::Config(format!("params.state: {e}"));
        match self {
            StateSpec::Basis { index } => StateVector::basis(n, *index).map_err(cfg),
            StateSpec::Random => StateVector::random(n, &mut cell_rng(seed, 1)).map_err(cfg),
            StateSpec::Sites { sites } => {
                SingleParticleState::localized(n, sites).and_then(|s| s.to_spin_state()).map_err(cfg)
            }
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSpec {
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default)]
    pub shots: u64,
}

fn default_mode() -> Mode {
    Mode::Exact
}

impl Default for EstimatorSpec {
    fn default() -> Self {
        EstimatorSpec { mode: Mode::Exact, shots: 0 }
    }
}

impl EstimatorSpec {
    pub fn config(&self, seed: u64) -> Result<EstimatorConfig, CliError> {
        match self.mode {
            Mode::Exact => Ok(EstimatorConfig::exact()),
            Mode::Sampled if self.shots == 0 => {
                Err(CliError::Config("params.estimator.shots: sampled mode needs shots > 0".into()))
            }
            Mode::Sampled => Ok(EstimatorConfig::sampled(self.shots, seed)),
        }
    }
}

/// `history` and `entanglement`: a dense model, a state and a `(m, eps)` grid.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenseParams {
    pub model: ModelSpec,
    pub state: StateSpec,
    pub m: Vec<usize>,
    pub epsilon: Grid,
    /// Observable for the fluctuation bound, `[[coeff, "word"], ...]`.
    #[serde(default)]
    pub observable: Option<Vec<(f64, String)>>,
}

impl DenseParams {
    pub fn validate(&self) -> Result<(), CliError> {
        nonempty("m", &self.m)?;
        if self.m.contains(&0) {
            return Err(CliError::Config("params.m: clock sizes must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateFParams {
    pub model: ModelSpec,
    pub state: StateSpec,
    pub o1: Vec<(f64, String)>,
    pub o2: Vec<(f64, String)>,
    #[serde(default)]
    pub omega: f64,
    pub m: Vec<usize>,
    pub epsilon: Grid,
    #[serde(default)]
    pub estimator: EstimatorSpec,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoschmidtParams {
    pub model: ModelSpec,
    pub state: StateSpec,
    pub m: Vec<usize>,
    pub epsilon: Grid,
    #[serde(default)]
    pub estimator: EstimatorSpec,
}

/// Free-fermion sweep; the defaults reproduce the n = 200 echo study.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FfSweepParams {
    pub n: usize,
    pub j: f64,
    pub boundary: Boundary,
    pub lambda: Grid,
    pub log_n: Vec<u32>,
    pub epsilon: Grid,
    /// 1-based sites of the initial single-particle state.
    pub sites: Vec<usize>,
    /// 1-based bond of the hopping observable.
    pub bond: (usize, usize),
    /// Field strengths evaluated between checkpoints of the output file.
    pub chunk: usize,
}

impl Default for FfSweepParams {
    fn default() -> Self {
        FfSweepParams {
            n: 200,
            j: 2.0,
            boundary: Boundary::Periodic,
            lambda: Grid::Range { lo: 0.1, hi: 3.5, step: 0.05 },
            log_n: (1..=10).collect(),
            epsilon: Grid::Range { lo: 0.05, hi: 1.95, step: 0.1 },
            sites: vec![99, 100, 101],
            bond: (100, 101),
            chunk: 8,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VhdParams {
    pub n: usize,
    pub j: f64,
    pub lambdas: Vec<f64>,
    pub layers: usize,
    /// Layer counts for the minimum-loss sweep; empty skips it.
    pub layer_sweep: Vec<usize>,
    pub train: TrainConfig,
}

impl Default for VhdParams {
    fn default() -> Self {
        VhdParams {
            n: 6,
            j: 2.0,
            lambdas: vec![1.0, 2.0, 3.0],
            layers: 18,
            layer_sweep: Vec::new(),
            train: TrainConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagCircuitSpec {
    pub n: usize,
    pub layers: usize,
    pub m: usize,
    #[serde(default)]
    pub entanglement_only: bool,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DepthParams {
    pub model: GateCountModel,
    /// System sizes used as table keys; `l` defaults to the size when `l_per_site` is set.
    pub n: Vec<usize>,
    pub log_n: Vec<u32>,
    pub l_per_site: bool,
    pub diagonalized: Vec<DiagCircuitSpec>,
}

impl Default for DepthParams {
    fn default() -> Self {
        DepthParams {
            model: GateCountModel::default(),
            n: vec![6, 20, 100],
            log_n: (1..=12).collect(),
            l_per_site: true,
            diagonalized: vec![DiagCircuitSpec { n: 6, layers: 3, m: 4, entanglement_only: false }],
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchParams {
    pub n: usize,
    pub m: usize,
    pub epsilon: f64,
    pub shots: Vec<u64>,
    /// Shots per cell; the shadow protocol reads them as snapshot counts.
    /// Independent seeds per shot count give the empirical spread.
    pub repeats: u64,
}

impl Default for BenchParams {
    fn default() -> Self {
        BenchParams { n: 2, m: 2, epsilon: 0.6, shots: vec![256, 1024, 4096, 16384], repeats: 32 }
    }
}

impl BenchParams {
    pub fn validate(&self) -> Result<(), CliError> {
        nonempty("shots", &self.shots)?;
        if self.shots.contains(&0) || self.repeats < 2 || self.m == 0 || self.n == 0 {
            return Err(CliError::Config("params: need n, m >= 1, shots > 0 and repeats >= 2".into()));
        }
        Ok(())
    }
}
