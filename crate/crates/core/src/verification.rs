//! Independent oracles for properties of the model: nesting of the Gaussian
//! ARMA(1,1), distributional facts about the MAG(1) process, and the
//! truncated moving-aggregate representation of the AR(1) normal copula
//! model.

use crate::copula::{clamp_unit, CopulaSpec};
use crate::error::{MagmarError, Result};
use crate::model::{path_from_innovations, uniform_innovations, MagmarSpec, DEFAULT_INIT};
use crate::quadrature::integrate;
use crate::special::{norm_cdf, norm_quantile};

/// Linear ARMA(1,1): `X_t = ar X_{t-1} + e_t + ma e_{t-1}`, `Var(e_t) = innovation_variance`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmaParams {
    pub ar: f64,
    pub ma: f64,
    pub innovation_variance: f64,
}

/// ARMA(1,1) parameters of the normal-normal MAGMAR(1,1) model with AR
/// correlation `alpha` and MAG correlation `beta`, on the `Phi^-1` scale.
pub fn implied_arma_params(alpha: f64, beta: f64) -> Result<ArmaParams> {
    if !(alpha.abs() < 1.0 && beta.abs() < 1.0) {
        return Err(MagmarError::Domain {
            family: "normal",
            message: format!("alpha = {alpha}, beta = {beta} violates |alpha| < 1, |beta| < 1"),
        });
    }
    Ok(ArmaParams {
        ar: alpha,
        ma: beta / (1.0 - beta * beta).sqrt(),
        innovation_variance: (1.0 - alpha * alpha) * (1.0 - beta * beta),
    })
}

/// Runs the ARMA(1,1) recursion on `e_t = sqrt(var) Phi^-1(w_t)` from
/// `X_0 = e_0 = 0`.
pub fn arma_path_oracle(arma: &ArmaParams, innovations: &[f64]) -> Vec<f64> {
    let sd = arma.innovation_variance.sqrt();
    let (mut x, mut e_prev) = (0.0, 0.0);
    innovations
        .iter()
        .map(|&w| {
            let e = sd * norm_quantile(w);
            x = arma.ar * x + e + arma.ma * e_prev;
            e_prev = e;
            x
        })
        .collect()
}

/// Largest gap between `Phi^-1` of the normal-normal MAGMAR(1,1) path and the
/// ARMA oracle on the same innovations.
pub fn arma_nesting_gap(alpha: f64, beta: f64, innovations: &[f64]) -> Result<f64> {
    let arma = implied_arma_params(alpha, beta)?;
    let spec = MagmarSpec::new(vec![CopulaSpec::normal(alpha)?], vec![CopulaSpec::normal(beta)?]);
    let path = path_from_innovations(&spec, innovations, DEFAULT_INIT)?;
    let oracle = arma_path_oracle(&arma, innovations);
    Ok(path.iter().zip(&oracle).map(|(u, x)| (norm_quantile(*u) - x).abs()).fold(0.0, f64::max))
}

/// `P(U_t <= a, U_{t-1} <= b)` for the MAG(1) process
/// `U_t = h2_inv(w_t, w_{t-1})`, i.e. `int_0^1 C(a, h2(b, w)) dw`.
pub fn mag1_pair_cdf(theta: &CopulaSpec, a: f64, b: f64) -> Result<f64> {
    integrate(|w| theta.cdf(a, theta.h2(b, w)), 0.0, 1.0, 1e-8)
}

/// Simulates `n` values of the MAG(1) process (`n + 1` innovations, so every
/// value uses a genuine predecessor).
pub fn simulate_mag1(theta: &CopulaSpec, n: usize, seed: u64) -> Result<Vec<f64>> {
    let w = uniform_innovations(n + 1, seed);
    w.windows(2).map(|p| theta.h2_inv(p[1], p[0])).collect()
}

/// One-sample Kolmogorov-Smirnov statistic against the uniform distribution.
pub fn ks_statistic_uniform(sample: &[f64]) -> f64 {
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    x.iter().enumerate().map(|(i, &v)| ((i + 1) as f64 / n - v).max(v - i as f64 / n)).fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.627_6 / (n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformityCheck {
    pub statistic: f64,
    pub critical: f64,
    pub pass: bool,
}

/// KS test of the MAG(1) marginal against the uniform distribution.
pub fn mag1_uniformity_check(theta: &CopulaSpec, n: usize, seed: u64) -> Result<UniformityCheck> {
    if n < 10_000 {
        return Err(MagmarError::Params(format!("uniformity check needs n >= 10000, got {n}")));
    }
    let v = simulate_mag1(theta, n, seed)?;
    let statistic = ks_statistic_uniform(&v);
    let critical = ks_critical_1pct(n);
    Ok(UniformityCheck { statistic, critical, pass: statistic < critical })
}

/// Grid used for empirical pair-copula comparisons.
pub const COPULA_GRID: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

/// Empirical copula of `(x_i, y_i)` at every grid point (row-major in `x`).
/// Values are assumed to be uniform already; no ranking is applied.
pub fn empirical_pair_copula(x: &[f64], y: &[f64], grid: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mut out = vec![0.0; grid.len() * grid.len()];
    for (&a, &b) in x.iter().zip(y) {
        for (i, &ga) in grid.iter().enumerate() {
            if a <= ga {
                for (j, &gb) in grid.iter().enumerate() {
                    if b <= gb {
                        out[i * grid.len() + j] += 1.0;
                    }
                }
            }
        }
    }
    out.iter_mut().for_each(|v| *v /= n);
    out
}

pub fn sup_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Sup-norm gap between the empirical copulas of `(V_t, V_{t-1})` over two
/// disjoint windows of `window` pairs from one MAG(1) path.
pub fn mag1_window_gap(theta: &CopulaSpec, window: usize, seed: u64) -> Result<f64> {
    let v = simulate_mag1(theta, 2 * window + 2, seed)?;
    let pairs = |s: &[f64]| {
        let now: Vec<f64> = s[1..].to_vec();
        let prev: Vec<f64> = s[..s.len() - 1].to_vec();
        empirical_pair_copula(&now, &prev, &COPULA_GRID)
    };
    let first = pairs(&v[..window + 1]);
    let second = pairs(&v[window + 1..]);
    Ok(sup_norm(&first, &second))
}

/// `A_{t,n} = Phi(sqrt(1 - phi^2) sum_{i=0}^{n} phi^i Phi^-1(v_{t-i}))`.
///
/// `v` is the raw innovation sequence when `mag` is `None` (MAGMAR(1,0)) and
/// the MAG(1)-filtered sequence `h2_inv(w_s, w_{s-1})` otherwise, with the
/// innovation before index 0 set to the model's initial value. `w` is time
/// ordered and `t < w.len()`, `n <= t`.
pub fn truncated_mag_representation(phi: f64, mag: Option<&CopulaSpec>, w: &[f64], t: usize, n: usize) -> Result<f64> {
    if phi.abs() >= 1.0 {
        return Err(MagmarError::Domain { family: "normal", message: format!("phi = {phi} violates |phi| < 1") });
    }
    if t >= w.len() || n > t {
        return Err(MagmarError::Params(format!("need n <= t < {} (got t = {t}, n = {n})", w.len())));
    }
    let v = |s: usize| -> Result<f64> {
        match mag {
            None => Ok(w[s]),
            Some(c) => c.h2_inv(w[s], if s == 0 { DEFAULT_INIT } else { w[s - 1] }),
        }
    };
    let mut sum = 0.0;
    let mut pow = 1.0;
    for i in 0..=n {
        sum += pow * norm_quantile(v(t - i)?);
        pow *= phi;
    }
    Ok(clamp_unit(norm_cdf((1.0 - phi * phi).sqrt() * sum)))
}
