//! Scenario files: parsing, validation and construction of the input state.

use std::path::Path;

use laserchan::fock::{required_dim_coherent, required_dim_thermal};
use laserchan::{
    coherent_mixture, coherent_state, number_state, thermal_state, Complex64, DensityMatrix, DiagonalState,
    LaserParams,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Dimension ceiling for auto-retry when neither the environment nor the
/// config sets one.
pub const DEFAULT_MAX_DIM: usize = 2048;
pub const MAX_DIM_ENV: &str = "LASERCHAN_MAX_DIM";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub g: f64,
    pub kappa: f64,
    pub t_grid: Vec<f64>,
    pub initial_state: InitialState,
    pub out_dim: usize,
    /// Ceiling for the doubled-basis retry; [`MAX_DIM_ENV`] takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_dim: Option<usize>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    Number { n: usize },
    Coherent { re: f64, im: f64 },
    Thermal { nbar: f64 },
    Diagonal { probs: Vec<f64> },
    CoherentMixture { weights: Vec<f64>, amps: Vec<[f64; 2]> },
}

/// Pass thresholds used by `validate`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Frobenius distance between Kraus and master-equation states.
    pub frobenius: f64,
    /// Closed form against evolved-state observables (relative for `<n>`).
    pub observable: f64,
    /// Residuals of the two `T` identities.
    pub identity: f64,
    /// Trace defect of every accepted evolved state.
    pub trace_defect: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { frobenius: 1e-6, observable: 1e-6, identity: 1e-12, trace_defect: 1e-10 }
    }
}

/// A constructed input state on whichever representation suits it.
#[derive(Debug, Clone)]
pub enum State {
    Dense(DensityMatrix),
    Diagonal(DiagonalState),
}

impl State {
    pub fn to_dense(&self) -> Result<DensityMatrix, CliError> {
        match self {
            State::Dense(rho) => Ok(rho.clone()),
            State::Diagonal(p) => Ok(DensityMatrix::from_diagonal(p)?),
        }
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." {
                CliError::Config(inner.to_string())
            } else {
                CliError::Config(format!("field `{path}`: {inner}"))
            }
        })?;
        config.check()?;
        Ok(config)
    }

    fn check(&self) -> Result<(), CliError> {
        let bad = |field: &str, msg: String| Err(CliError::Config(format!("field `{field}`: {msg}")));
        LaserParams::new(self.g, self.kappa).map_err(|e| CliError::Config(format!("fields `g`, `kappa`: {e}")))?;
        if self.t_grid.is_empty() {
            return bad("t_grid", "must hold at least one time".into());
        }
        for (i, t) in self.t_grid.iter().enumerate() {
            if !(t.is_finite() && *t >= 0.0) {
                return bad(&format!("t_grid[{i}]"), format!("time {t} must be finite and >= 0"));
            }
            if i > 0 && *t <= self.t_grid[i - 1] {
                return bad(&format!("t_grid[{i}]"), format!("times must be strictly ascending ({t} after {})", self.t_grid[i - 1]));
            }
        }
        if self.out_dim < 2 {
            return bad("out_dim", format!("must be >= 2, got {}", self.out_dim));
        }
        if let Some(m) = self.max_dim {
            if m < 2 {
                return bad("max_dim", format!("must be >= 2, got {m}"));
            }
        }
        let tol = &self.tolerances;
        for (name, v) in [
            ("frobenius", tol.frobenius),
            ("observable", tol.observable),
            ("identity", tol.identity),
            ("trace_defect", tol.trace_defect),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(&format!("tolerances.{name}"), format!("must be positive, got {v}"));
            }
        }
        self.build_state().map(|_| ())
    }

    pub fn params(&self) -> LaserParams {
        LaserParams::new(self.g, self.kappa).expect("checked at load time")
    }

    /// Ceiling for the doubled-basis retry: environment, then config, then
    /// [`DEFAULT_MAX_DIM`]. Never below `out_dim`.
    pub fn max_dim(&self) -> Result<usize, CliError> {
        let env = match std::env::var(MAX_DIM_ENV) {
            Ok(v) => Some(v.trim().parse::<usize>().ok().filter(|d| *d >= 2).ok_or_else(|| {
                CliError::Config(format!("{MAX_DIM_ENV}={v:?} is not an integer >= 2"))
            })?),
            Err(_) => None,
        };
        let ceiling = env.or(self.max_dim).unwrap_or(DEFAULT_MAX_DIM);
        Ok(ceiling.max(self.out_dim))
    }

    /// The initial state on a basis just large enough to hold it.
    pub fn build_state(&self) -> Result<State, CliError> {
        let field = |e: laserchan::Error| CliError::Config(format!("field `initial_state`: {e}"));
        Ok(match &self.initial_state {
            InitialState::Number { n } => {
                let mut probs = vec![0.0; n + 1];
                probs[*n] = 1.0;
                // Validates n against the supported basis size.
                number_state(*n, n + 1).map_err(field)?;
                State::Diagonal(DiagonalState::new(probs).map_err(field)?)
            }
            InitialState::Coherent { re, im } => {
                let z = checked_amplitude(*re, *im)?;
                State::Dense(coherent_state(z, required_dim_coherent(z)).map_err(field)?)
            }
            InitialState::Thermal { nbar } => {
                if !(nbar.is_finite() && *nbar >= 0.0) {
                    return Err(CliError::Config(format!("field `initial_state.nbar`: must be finite and >= 0, got {nbar}")));
                }
                State::Diagonal(thermal_state(*nbar, required_dim_thermal(*nbar)).map_err(field)?)
            }
            InitialState::Diagonal { probs } => State::Diagonal(DiagonalState::new(probs.clone()).map_err(field)?),
            InitialState::CoherentMixture { weights, amps } => {
                let zs = amps
                    .iter()
                    .map(|[re, im]| checked_amplitude(*re, *im))
                    .collect::<Result<Vec<_>, _>>()?;
                let dim = zs.iter().map(|z| required_dim_coherent(*z)).max().unwrap_or(1);
                State::Dense(coherent_mixture(weights, &zs, dim).map_err(field)?)
            }
        })
    }
}

fn checked_amplitude(re: f64, im: f64) -> Result<Complex64, CliError> {
    if re.is_finite() && im.is_finite() {
        Ok(Complex64::new(re, im))
    } else {
        Err(CliError::Config(format!("field `initial_state`: amplitude ({re}, {im}) is not finite")))
    }
}
