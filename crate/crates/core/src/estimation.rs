//! Pseudo-maximum-likelihood fitting, information criteria and model
//! selection.

use crate::copula::{Family, NU_MAX, NU_MIN};
use crate::error::{MagmarError, Result};
use crate::model::{neg_log_likelihood, MagmarSpec, DEFAULT_INIT};
use crate::model_string::parse_model_string;
use crate::optim::{nelder_mead, Minimum, NelderMeadOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Value substituted for a non-finite or invalid likelihood during the search.
pub const NLL_PENALTY: f64 = 1e10;

/// Slack kept between a transformed boundary and the mapped value, so
/// boundary parameters (gumbel 1, nu 2 or 100) have a finite image.
const BOUNDARY_GAP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    /// `rho` in (-1, 1), mapped by `atanh`.
    Correlation,
    /// Gumbel parameter `>= 1`, mapped by `ln(rho - 1)`.
    GumbelTheta,
    /// Degrees of freedom in `[2, 100]`, mapped by a scaled logit.
    DegreesOfFreedom,
}

impl Domain {
    pub fn to_real(self, v: f64) -> f64 {
        match self {
            Domain::Correlation => v.atanh(),
            Domain::GumbelTheta => (v - 1.0).max(BOUNDARY_GAP).ln(),
            Domain::DegreesOfFreedom => {
                let s = ((v - NU_MIN) / (NU_MAX - NU_MIN)).clamp(BOUNDARY_GAP, 1.0 - BOUNDARY_GAP);
                (s / (1.0 - s)).ln()
            }
        }
    }

    pub fn from_real(self, x: f64) -> f64 {
        match self {
            Domain::Correlation => x.tanh(),
            Domain::GumbelTheta => 1.0 + x.exp(),
            Domain::DegreesOfFreedom => NU_MIN + (NU_MAX - NU_MIN) / (1.0 + (-x).exp()),
        }
    }

    fn domains(family: Family) -> &'static [Domain] {
        match family {
            Family::Normal => &[Domain::Correlation],
            Family::T => &[Domain::Correlation, Domain::DegreesOfFreedom],
            Family::Gumbel => &[Domain::GumbelTheta],
            Family::Independence => &[],
        }
    }
}

/// Parameters of a spec in both coordinate systems.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    pub constrained: Vec<f64>,
    pub domains: Vec<Domain>,
    pub unconstrained: Vec<f64>,
}

fn domains_of(spec: &MagmarSpec) -> Vec<Domain> {
    spec.ar().iter().chain(spec.mag().iter()).flat_map(|c| Domain::domains(c.family()).iter().copied()).collect()
}

pub fn to_unconstrained(spec: &MagmarSpec) -> ParamVector {
    let constrained = spec.params();
    let domains = domains_of(spec);
    let unconstrained = constrained.iter().zip(&domains).map(|(&v, d)| d.to_real(v)).collect();
    ParamVector { constrained, domains, unconstrained }
}

/// Spec with the families of `skeleton` and parameters mapped back from `x`.
pub fn from_unconstrained(x: &[f64], skeleton: &MagmarSpec) -> Result<MagmarSpec> {
    if let Some(bad) = x.iter().find(|v| !v.is_finite()) {
        return Err(MagmarError::Params(format!("non-finite unconstrained value {bad}")));
    }
    let domains = domains_of(skeleton);
    if x.len() != domains.len() {
        return Err(MagmarError::DimensionMismatch { expected: domains.len(), got: x.len() });
    }
    let params: Vec<f64> = x.iter().zip(&domains).map(|(&v, d)| d.from_real(v)).collect();
    skeleton.with_params(&params)
}

pub fn count_params(spec: &MagmarSpec) -> usize {
    spec.n_params()
}

/// `(AIC, BIC)` = `(2k + 2 nLL, k ln(n) + 2 nLL)`.
pub fn information_criteria(nll: f64, n_params: usize, n_obs: usize) -> (f64, f64) {
    let k = n_params as f64;
    (2.0 * k + 2.0 * nll, k * (n_obs as f64).ln() + 2.0 * nll)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Aic,
    Bic,
}

impl FromStr for Criterion {
    type Err = MagmarError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "aic" => Ok(Criterion::Aic),
            "bic" => Ok(Criterion::Bic),
            _ => Err(MagmarError::Params(format!("unknown criterion '{s}' (expected aic or bic)"))),
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Aic => "aic",
            Criterion::Bic => "bic",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub spec: MagmarSpec,
    pub nll: f64,
    pub aic: f64,
    pub bic: f64,
    pub n_params: usize,
    pub n_obs: usize,
    pub converged: bool,
    /// Likelihood evaluations over all starts.
    pub iterations: usize,
}

impl FitResult {
    pub fn criterion(&self, c: Criterion) -> f64 {
        match c {
            Criterion::Aic => self.aic,
            Criterion::Bic => self.bic,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Value for the unseen initial innovations.
    pub init: f64,
    /// Random starting points in addition to the skeleton's own parameters.
    pub restarts: usize,
    pub seed: u64,
    pub simplex: NelderMeadOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { init: DEFAULT_INIT, restarts: 5, seed: 1, simplex: NelderMeadOptions::default() }
    }
}

fn random_start(domains: &[Domain], rng: &mut ChaCha8Rng) -> Vec<f64> {
    domains
        .iter()
        .map(|d| match d {
            Domain::Correlation => rng.gen_range(-1.5..1.5),
            Domain::GumbelTheta => rng.gen_range(-2.5..1.5),
            Domain::DegreesOfFreedom => rng.gen_range(-4.0..0.0),
        })
        .collect()
}

/// Penalized objective in unconstrained coordinates.
pub fn objective(x: &[f64], skeleton: &MagmarSpec, series: &[f64], init: f64) -> f64 {
    match from_unconstrained(x, skeleton).and_then(|s| neg_log_likelihood(&s, series, init)) {
        Ok(v) if v.is_finite() => v,
        _ => NLL_PENALTY,
    }
}

/// Fits the parameters of `skeleton` to `series` by pseudo-maximum
/// likelihood. The skeleton's own parameters are the first starting point,
/// followed by `restarts` random ones and a final restart from the best.
pub fn fit(skeleton: &MagmarSpec, series: &[f64], opts: &FitOptions) -> Result<FitResult> {
    let required = skeleton.s() + 10;
    if series.len() <= required {
        return Err(MagmarError::SeriesTooShort { len: series.len(), required });
    }
    let start = to_unconstrained(skeleton);
    let f = |x: &[f64]| objective(x, skeleton, series, opts.init);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts = vec![start.unconstrained.clone()];
    if !start.domains.is_empty() {
        starts.extend((0..opts.restarts).map(|_| random_start(&start.domains, &mut rng)));
    }
    let mut evals = 0;
    let mut best: Option<Minimum> = None;
    for x0 in &starts {
        let m = nelder_mead(f, x0, opts.simplex);
        evals += m.evals;
        if best.as_ref().is_none_or(|b| m.f < b.f) {
            best = Some(m);
        }
    }
    let mut best = best.expect("at least one start");
    if !start.domains.is_empty() {
        // A fresh simplex around the optimum guards against premature collapse.
        let polish = nelder_mead(f, &best.x, NelderMeadOptions { initial_step: 0.1, ..opts.simplex });
        evals += polish.evals;
        if polish.f <= best.f {
            best = Minimum { converged: polish.converged, ..polish };
        }
    }
    if best.f >= NLL_PENALTY {
        return Err(MagmarError::Optimizer {
            message: "no start produced a finite likelihood".into(),
            best_nll: best.f,
        });
    }
    let spec = from_unconstrained(&best.x, skeleton)?;
    let nll = neg_log_likelihood(&spec, series, opts.init)?;
    let n_params = spec.n_params();
    let (aic, bic) = information_criteria(nll, n_params, series.len());
    Ok(FitResult { spec, nll, aic, bic, n_params, n_obs: series.len(), converged: best.converged, iterations: evals })
}

/// One candidate of a [`select`] run.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub model: String,
    pub result: Result<FitResult>,
}

/// Fits every candidate and ranks them by `criterion` (ascending), ties
/// broken by fewer parameters and then by model string. Failed candidates
/// are kept, after all successful ones. `jobs` bounds the worker threads
/// (0 means the rayon default).
pub fn select(
    models: &[String],
    series: &[f64],
    criterion: Criterion,
    opts: &FitOptions,
    jobs: usize,
) -> Result<Vec<Candidate>> {
    if models.is_empty() {
        return Err(MagmarError::Params("no candidate models".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| MagmarError::Params(format!("cannot start worker pool: {e}")))?;
    let mut out: Vec<Candidate> = pool.install(|| {
        models
            .par_iter()
            .map(|m| Candidate { model: m.clone(), result: parse_model_string(m).and_then(|s| fit(&s, series, opts)) })
            .collect()
    });
    out.sort_by(|a, b| match (&a.result, &b.result) {
        (Ok(x), Ok(y)) => x
            .criterion(criterion)
            .total_cmp(&y.criterion(criterion))
            .then(x.n_params.cmp(&y.n_params))
            .then(a.model.cmp(&b.model)),
        (Ok(_), Err(_)) => std::cmp::Ordering::Less,
        (Err(_), Ok(_)) => std::cmp::Ordering::Greater,
        (Err(_), Err(_)) => a.model.cmp(&b.model),
    });
    Ok(out)
}
