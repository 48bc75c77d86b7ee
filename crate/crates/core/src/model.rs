//! The MAGMAR(p,q) process: simulation, innovation recovery, conditional
//! densities and the pseudo-likelihood.
//!
//! The updating equation links the AR D-vine and the MAG D-vine through one
//! uniform value per time step:
//!
//! ```text
//! R_ar((U_{t-1}, ..., U_{t-p}), U_t) = R_mag^{-1}((w_{t-1}, ..., w_{t-q}), w_t)
//! ```

use crate::copula::{CopulaSpec, Family};
use crate::dvine::{self, PairCopulaSequence, VineState};
use crate::error::{MagmarError, Result};
use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Default value for unseen pseudo-observations and innovations.
pub const DEFAULT_INIT: f64 = 0.5;
pub const DEFAULT_BURN_IN: usize = 500;

/// A MAGMAR(p,q) model: `p` AR pair copulas and `q` MAG pair copulas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagmarSpec {
    ar: PairCopulaSequence,
    mag: PairCopulaSequence,
}

impl MagmarSpec {
    pub fn new(ar: Vec<CopulaSpec>, mag: Vec<CopulaSpec>) -> Self {
        MagmarSpec { ar: ar.into(), mag: mag.into() }
    }

    /// Spec with the given families at their default parameters.
    pub fn from_families(ar: &[Family], mag: &[Family]) -> Self {
        let make = |fams: &[Family]| -> Vec<CopulaSpec> {
            fams.iter().map(|&f| CopulaSpec::new(f, &f.default_params()).expect("defaults are valid")).collect()
        };
        MagmarSpec::new(make(ar), make(mag))
    }

    pub fn p(&self) -> usize {
        self.ar.len()
    }

    pub fn q(&self) -> usize {
        self.mag.len()
    }

    /// Number of leading observations consumed as initial conditions.
    pub fn s(&self) -> usize {
        self.p().max(self.q())
    }

    pub fn ar(&self) -> &PairCopulaSequence {
        &self.ar
    }

    pub fn mag(&self) -> &PairCopulaSequence {
        &self.mag
    }

    pub fn ar_families(&self) -> Vec<Family> {
        self.ar.iter().map(CopulaSpec::family).collect()
    }

    pub fn mag_families(&self) -> Vec<Family> {
        self.mag.iter().map(CopulaSpec::family).collect()
    }

    /// Free parameters, summed over all slots.
    pub fn n_params(&self) -> usize {
        self.ar.iter().chain(self.mag.iter()).map(|c| c.family().n_params()).sum()
    }

    /// All parameters, AR slots first, each slot in its family's order.
    pub fn params(&self) -> Vec<f64> {
        self.ar.iter().chain(self.mag.iter()).flat_map(|c| c.params()).collect()
    }

    /// Same families with new parameters laid out as in [`params`](Self::params).
    pub fn with_params(&self, params: &[f64]) -> Result<Self> {
        if params.len() != self.n_params() {
            return Err(MagmarError::Params(format!(
                "{} expects {} parameters, got {}",
                self,
                self.n_params(),
                params.len()
            )));
        }
        let mut rest = params;
        let mut take = |seq: &[CopulaSpec]| -> Result<Vec<CopulaSpec>> {
            seq.iter()
                .map(|c| {
                    let k = c.family().n_params();
                    let (head, tail) = rest.split_at(k);
                    rest = tail;
                    CopulaSpec::new(c.family(), head)
                })
                .collect()
        };
        let ar = take(&self.ar)?;
        let mag = take(&self.mag)?;
        Ok(MagmarSpec::new(ar, mag))
    }

    pub fn is_all_independence(&self) -> bool {
        self.ar.is_all_independence() && self.mag.is_all_independence()
    }

    /// Canonical model string, e.g. `MAGMAR(4,1)-ging-t`.
    pub fn model_string(&self) -> String {
        let codes = |seq: &[CopulaSpec]| seq.iter().map(|c| c.family().code()).collect::<String>();
        let mut s = format!("MAGMAR({},{})-{}", self.p(), self.q(), codes(&self.ar));
        if self.q() > 0 {
            s.push('-');
            s.push_str(&codes(&self.mag));
        }
        s
    }
}

impl fmt::Display for MagmarSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.model_string())
    }
}

/// Where a pseudo-observation series came from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Origin {
    pub source: Option<String>,
    pub transform: Option<String>,
}

/// Time-ordered values strictly inside (0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoSeries {
    values: Vec<f64>,
    #[serde(default)]
    pub origin: Origin,
}

impl PseudoSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = values.iter().find(|&&v| !(v > 0.0 && v < 1.0)) {
            return Err(MagmarError::NotInUnitInterval(bad));
        }
        Ok(PseudoSeries { values, origin: Origin::default() })
    }

    pub fn with_origin(mut self, source: Option<String>, transform: Option<String>) -> Self {
        self.origin = Origin { source, transform };
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// The conditioning information needed for the next step: the last `p`
/// pseudo-observations and the last `q` innovations, most recent first.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub u_hist: Vec<f64>,
    pub w_hist: Vec<f64>,
    pub t: usize,
}

impl ModelState {
    pub fn new(u_hist: Vec<f64>, w_hist: Vec<f64>, t: usize) -> Result<Self> {
        if let Some(&bad) = u_hist.iter().chain(&w_hist).find(|&&v| !(v > 0.0 && v < 1.0)) {
            return Err(MagmarError::NotInUnitInterval(bad));
        }
        Ok(ModelState { u_hist, w_hist, t })
    }

    /// State with every slot set to `init`.
    pub fn initial(spec: &MagmarSpec, init: f64) -> Self {
        ModelState { u_hist: vec![init; spec.p()], w_hist: vec![init; spec.q()], t: 0 }
    }

    fn check(&self, spec: &MagmarSpec) -> Result<()> {
        if self.u_hist.len() != spec.p() {
            return Err(MagmarError::DimensionMismatch { expected: spec.p(), got: self.u_hist.len() });
        }
        if self.w_hist.len() != spec.q() {
            return Err(MagmarError::DimensionMismatch { expected: spec.q(), got: self.w_hist.len() });
        }
        Ok(())
    }

    /// Innovation implied by observing `u` next.
    pub fn innovation(&self, spec: &MagmarSpec, u: f64) -> Result<f64> {
        self.check(spec)?;
        let a = dvine::fwd_raw(&spec.ar, &self.u_hist, u);
        Ok(dvine::fwd_raw(&spec.mag, &self.w_hist, a))
    }

    /// Moves to the next time step after observing `u`.
    pub fn advance(&mut self, spec: &MagmarSpec, u: f64) -> Result<()> {
        let w = self.innovation(spec, u)?;
        if !self.u_hist.is_empty() {
            self.u_hist.pop();
            self.u_hist.insert(0, u);
        }
        if !self.w_hist.is_empty() {
            self.w_hist.pop();
            self.w_hist.insert(0, w);
        }
        self.t += 1;
        Ok(())
    }
}

/// A simulated path together with the innovations that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub series: PseudoSeries,
    pub innovations: Vec<f64>,
}

/// Draws `n` iid uniforms on the open unit interval.
pub fn uniform_innovations(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.sample(Open01)).collect()
}

/// Runs the updating equation on the given innovations, starting from a
/// history where every unseen value equals `init`.
pub fn path_from_innovations(spec: &MagmarSpec, innovations: &[f64], init: f64) -> Result<Vec<f64>> {
    let mut ar = VineState::new(&spec.ar);
    let mut mag = VineState::new(&spec.mag);
    for _ in 0..spec.p() {
        ar.push(init);
    }
    for _ in 0..spec.q() {
        mag.push(init);
    }
    let mut out = Vec::with_capacity(innovations.len());
    for &w in innovations {
        let v = mag.inverse(w)?;
        let u = ar.inverse(v)?;
        ar.push(u);
        mag.push(w);
        out.push(u);
    }
    Ok(out)
}

/// Simulates `t` values after discarding `burn_in` warm-up steps.
///
/// The returned innovations are aligned with the returned path.
pub fn simulate(spec: &MagmarSpec, t: usize, seed: u64, burn_in: usize) -> Result<Simulation> {
    if t == 0 {
        return Err(MagmarError::Params("simulation length must be at least 1".into()));
    }
    let w = uniform_innovations(t + burn_in, seed);
    let path = path_from_innovations(spec, &w, DEFAULT_INIT)?;
    let series = PseudoSeries::new(path[burn_in..].to_vec())?
        .with_origin(None, Some(format!("simulate {spec} seed={seed} burn_in={burn_in}")));
    Ok(Simulation { series, innovations: w[burn_in..].to_vec() })
}

fn check_series(spec: &MagmarSpec, series: &[f64]) -> Result<()> {
    if series.len() <= spec.s() {
        return Err(MagmarError::SeriesTooShort { len: series.len(), required: spec.s() });
    }
    match series.iter().find(|&&u| !(u > 0.0 && u < 1.0)) {
        Some(&u) => Err(MagmarError::NotInUnitInterval(u)),
        None => Ok(()),
    }
}

/// Recovers `w_1..w_T` from the observations, seeding the first `s` slots
/// with `init`.
pub fn recover_innovations(spec: &MagmarSpec, series: &[f64], init: f64) -> Result<Vec<f64>> {
    recover_innovations_seeded(spec, series, &vec![init; spec.s()])
}

/// As [`recover_innovations`] with explicit values for the first `s`
/// innovations (oldest first).
pub fn recover_innovations_seeded(spec: &MagmarSpec, series: &[f64], initial: &[f64]) -> Result<Vec<f64>> {
    check_series(spec, series)?;
    let s = spec.s();
    if initial.len() != s {
        return Err(MagmarError::DimensionMismatch { expected: s, got: initial.len() });
    }
    let mut ar = VineState::new(&spec.ar);
    let mut mag = VineState::new(&spec.mag);
    for i in 0..s {
        ar.push(series[i]);
        mag.push(initial[i]);
    }
    let mut out = initial.to_vec();
    out.reserve(series.len() - s);
    for &u in &series[s..] {
        let (a, _) = ar.step(u);
        // The MAG history holds innovations, not the values fed in.
        let w = mag.transform_value(a);
        mag.push(w);
        out.push(w);
    }
    Ok(out)
}

/// Log conditional density of the next observation at `x` given `state`.
///
/// This is the log-derivative of `x -> R_mag(w_hist, R_ar(u_hist, x))`, so it
/// collects one pair-copula density per AR lag and one per MAG lag.
pub fn conditional_ln_density(spec: &MagmarSpec, x: f64, state: &ModelState) -> Result<f64> {
    state.check(spec)?;
    let a = dvine::fwd_raw(&spec.ar, &state.u_hist, x);
    Ok(dvine::conditional_ln_density_raw(&spec.ar, &state.u_hist, x)
        + dvine::conditional_ln_density_raw(&spec.mag, &state.w_hist, a))
}

pub fn conditional_density(spec: &MagmarSpec, x: f64, state: &ModelState) -> Result<f64> {
    conditional_ln_density(spec, x, state).map(f64::exp)
}

fn require_11(spec: &MagmarSpec, what: &str) -> Result<(CopulaSpec, CopulaSpec)> {
    if spec.p() != 1 || spec.q() != 1 {
        return Err(MagmarError::Unsupported(format!("{what} is only available for MAGMAR(1,1), got {spec}")));
    }
    Ok((spec.ar[0], spec.mag[0]))
}

/// Joint conditional density of `(U_{t-1}, U_t) = (z, w)` given the state
/// at time `t - 2` (which holds `u_{t-2}` and `w_{t-2}`). MAGMAR(1,1) only.
pub fn joint_conditional_density(spec: &MagmarSpec, z: f64, w: f64, state: &ModelState) -> Result<f64> {
    let (phi, theta) = require_11(spec, "joint conditional density")?;
    state.check(spec)?;
    let (u2, w2) = (state.u_hist[0], state.w_hist[0]);
    let hz = phi.h2(z, u2);
    let a = theta.h2(hz, w2);
    Ok(theta.density(hz, w2) * phi.density(z, u2) * theta.density(phi.h2(w, z), a) * phi.density(w, z))
}

/// Density of `(U_{t-k}, U_t) = (z, w)` with the `k - 1` values in between
/// held fixed. `state` is the state at time `t - k - 1` and `intermediates`
/// lists `u_{t-k+1}, ..., u_{t-1}` oldest first. MAGMAR(1,1) only.
///
/// The innovation `w_{t-1}` is a function of `z`: it is recovered by running
/// the innovation recursion from `w_{t-k}(z)` through the intermediates.
pub fn partial_pair_density_lag_k(
    spec: &MagmarSpec,
    z: f64,
    w: f64,
    state: &ModelState,
    intermediates: &[f64],
    k: usize,
) -> Result<f64> {
    let (phi, theta) = require_11(spec, "partial pair density")?;
    state.check(spec)?;
    if k == 0 || intermediates.len() != k - 1 {
        return Err(MagmarError::DimensionMismatch { expected: k.saturating_sub(1), got: intermediates.len() });
    }
    let (u_prev, w_prev) = (state.u_hist[0], state.w_hist[0]);
    let hz = phi.h2(z, u_prev);
    let mut w_last = theta.h2(hz, w_prev);
    let mut u_last = z;
    for &u in intermediates {
        w_last = theta.h2(phi.h2(u, u_last), w_last);
        u_last = u;
    }
    Ok(theta.density(hz, w_prev)
        * phi.density(z, u_prev)
        * theta.density(phi.h2(w, u_last), w_last)
        * phi.density(w, u_last))
}

/// Per-step conditional log densities `ln f(u_i | F_{i-1})` for
/// `i = s+1..T` (the first `s` innovations are set to `init`).
pub fn conditional_log_densities(spec: &MagmarSpec, series: &[f64], init: f64) -> Result<Vec<f64>> {
    check_series(spec, series)?;
    if !(init > 0.0 && init < 1.0) {
        return Err(MagmarError::NotInUnitInterval(init));
    }
    let s = spec.s();
    let mut ar = VineState::new(&spec.ar);
    let mut mag = VineState::new(&spec.mag);
    for &u in &series[..s] {
        ar.push(u);
        mag.push(init);
    }
    let mut out = Vec::with_capacity(series.len() - s);
    for &u in &series[s..] {
        let (a, lj_ar) = ar.step(u);
        let (w, lj_mag) = mag.transform(a);
        mag.push(w);
        out.push(lj_ar + lj_mag);
    }
    Ok(out)
}

/// Pseudo negative log-likelihood: `-sum ln f(u_i | F_{i-1})` over
/// `i = s+1..T`, the initial marginal term dropped.
pub fn neg_log_likelihood(spec: &MagmarSpec, series: &[f64], init: f64) -> Result<f64> {
    let s = spec.s();
    let mut total = 0.0;
    for (j, l) in conditional_log_densities(spec, series, init)?.into_iter().enumerate() {
        if !l.is_finite() {
            return Err(MagmarError::NonFiniteDensity { index: s + j });
        }
        total -= l;
    }
    Ok(total)
}
