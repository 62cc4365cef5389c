//! `evolve`: one observable record per grid time.

use std::io::Write;

use laserchan::channel::grow_until_fits;
use laserchan::fock::{MAX_DENSE_DIM, MAX_DIAGONAL_DIM};
use laserchan::{evolve_diagonal, evolve_fock, LaserParams, PhotonStatistics};
use rayon::prelude::*;

use crate::config::{ScenarioConfig, State};
use crate::error::CliError;

pub const CSV_HEADER: [&str; 7] =
    ["t", "n_mean", "n2_normal", "g2", "entropy_nats", "trace_defect", "offdiag_ratio"];

/// Below this mean photon number `g2` is reported as undefined.
const G2_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub t: f64,
    pub n_mean: f64,
    pub n2_normal: f64,
    pub g2: Option<f64>,
    pub entropy_nats: f64,
    pub trace_defect: f64,
    pub offdiag_ratio: f64,
}

impl Record {
    pub fn observe(t: f64, state: &State) -> Result<Self, CliError> {
        let (stats, entropy, offdiag): (&dyn PhotonStatistics, f64, f64) = match state {
            State::Dense(rho) => (rho, rho.von_neumann_entropy()?, rho.offdiag_ratio()),
            State::Diagonal(p) => (p, p.entropy(), 0.0),
        };
        let n = stats.expect_n();
        let n2 = stats.expect_a2dag_a2();
        Ok(Self {
            t,
            n_mean: n,
            n2_normal: n2,
            g2: (n >= G2_CUTOFF).then(|| n2 / (n * n)),
            entropy_nats: entropy,
            trace_defect: stats.trace_defect(),
            offdiag_ratio: offdiag,
        })
    }

    fn fields(&self) -> [String; 7] {
        [
            num(self.t),
            num(self.n_mean),
            num(self.n2_normal),
            self.g2.map(num).unwrap_or_default(),
            num(self.entropy_nats),
            num(self.trace_defect),
            num(self.offdiag_ratio),
        ]
    }
}

/// 17 significant digits: enough to round-trip any double.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// State at time `t`, doubling the output basis from `out_dim` up to
/// `ceiling` until the tail check passes. `t = 0` returns the input as is.
pub fn evolve_point(
    state: &State,
    params: &LaserParams,
    t: f64,
    out_dim: usize,
    ceiling: usize,
) -> Result<(State, usize), CliError> {
    if t == 0.0 {
        let dim = match state {
            State::Dense(rho) => rho.dim(),
            State::Diagonal(p) => p.dim(),
        };
        return Ok((state.clone(), dim));
    }
    let overflow = |source: laserchan::Error| match source {
        e @ laserchan::Error::TruncationOverflow { .. } => CliError::Truncation { t, ceiling, source: e },
        e => CliError::Library(e),
    };
    match state {
        State::Dense(rho) => {
            let top = ceiling.min(MAX_DENSE_DIM);
            grow_until_fits(out_dim.min(top), top, |d| evolve_fock(rho, params, t, d))
                .map(|(s, d)| (State::Dense(s), d))
                .map_err(overflow)
        }
        State::Diagonal(p) => {
            let top = ceiling.min(MAX_DIAGONAL_DIM);
            grow_until_fits(out_dim.min(top), top, |d| evolve_diagonal(p, params, t, d))
                .map(|(s, d)| (State::Diagonal(s), d))
                .map_err(overflow)
        }
    }
}

pub struct Run {
    pub records: Vec<Record>,
    pub dims: Vec<usize>,
    pub ceiling: usize,
    pub initial: Record,
}

/// Evaluates every grid point (in parallel) and returns them in grid order.
/// The first failing point in grid order decides the error.
pub fn run(config: &ScenarioConfig) -> Result<Run, CliError> {
    let params = config.params();
    let state = config.build_state()?;
    let ceiling = config.max_dim()?;
    let results: Vec<Result<(Record, usize), CliError>> = config
        .t_grid
        .par_iter()
        .map(|&t| {
            let (evolved, dim) = evolve_point(&state, &params, t, config.out_dim, ceiling)?;
            Ok((Record::observe(t, &evolved)?, dim))
        })
        .collect();
    let mut records = Vec::with_capacity(results.len());
    let mut dims = Vec::with_capacity(results.len());
    for r in results {
        let (rec, dim) = r?;
        records.push(rec);
        dims.push(dim);
    }
    Ok(Run { records, dims, ceiling, initial: Record::observe(0.0, &state)? })
}

pub fn write_csv<W: Write>(out: W, records: &[Record]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn summary(config: &ScenarioConfig, run: &Run) -> serde_json::Value {
    use laserchan::channel::{equivalent_temperature, steady_state};
    use laserchan::entropy::steady_entropy;
    use laserchan::heisenberg::{g2_infinity, moment_growth_rate};

    let params = config.params();
    let steady = steady_state(&params, 2).ok().map(|_| {
        let (g, kappa) = (params.gain(), params.loss());
        serde_json::json!({
            "n_mean": g / (kappa - g),
            "entropy_nats": steady_entropy(&params).ok(),
            "temperature": equivalent_temperature(&params).ok(),
        })
    });
    let init = &run.initial;
    let g2_inf = init.g2.and_then(|g2_0| g2_infinity(&params, init.n_mean, g2_0).ok());
    serde_json::json!({
        "g": config.g,
        "kappa": config.kappa,
        "regime": params.regime().as_str(),
        "initial_state": config.initial_state,
        "out_dim": config.out_dim,
        "max_dim": run.ceiling,
        "points": run.records.len(),
        "dims_used": run.dims,
        "initial": {
            "n_mean": init.n_mean,
            "g2": init.g2,
            "entropy_nats": init.entropy_nats,
        },
        "final": run.records.last().map(|r| serde_json::json!({
            "t": r.t,
            "n_mean": r.n_mean,
            "g2": r.g2,
            "entropy_nats": r.entropy_nats,
            "trace_defect": r.trace_defect,
        })),
        "max_trace_defect": run.records.iter().map(|r| r.trace_defect).fold(0.0, f64::max),
        "steady_state": steady,
        "g2_infinity": g2_inf,
        "growth_rate_n": moment_growth_rate(&params, 1).ok(),
    })
}
