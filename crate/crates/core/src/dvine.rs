//! Stationary D-vines over lagged values and their Rosenblatt functions.
//!
//! Conditioning vectors are always ordered most-recent-first. For a path
//! `y0, y1, ..., yd` (`y0` newest), copula `seq[k - 1]` joins the pair at
//! distance `k`, first argument the newer variable:
//!
//! * `rosenblatt_fwd(seq, u, x)` is `F(x | u)` where `x` is newer than every
//!   element of `u` and `u[0]` is adjacent to `x`;
//! * `rosenblatt_bwd(seq, u, x)` is `F(x | u)` where `x` is older than every
//!   element of `u` and `u[d - 1]` is adjacent to `x`.
//!
//! [`VineState`] evaluates the same quantities incrementally along a time
//! series in `O(d)` work per step.

use crate::copula::{clamp_unit, CopulaSpec};
use crate::error::{MagmarError, Result};
use serde::{Deserialize, Serialize};
use std::ops::Deref;

/// Per-lag pair copulas of a stationary D-vine. Position `k - 1` governs the
/// lag-`k` partial pair. An empty sequence is the identity (no conditioning).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PairCopulaSequence(Vec<CopulaSpec>);

impl PairCopulaSequence {
    pub fn new(copulas: Vec<CopulaSpec>) -> Self {
        PairCopulaSequence(copulas)
    }

    pub fn into_inner(self) -> Vec<CopulaSpec> {
        self.0
    }

    pub fn is_all_independence(&self) -> bool {
        self.0.iter().all(CopulaSpec::is_independence)
    }
}

impl Deref for PairCopulaSequence {
    type Target = [CopulaSpec];
    fn deref(&self) -> &[CopulaSpec] {
        &self.0
    }
}

impl From<Vec<CopulaSpec>> for PairCopulaSequence {
    fn from(v: Vec<CopulaSpec>) -> Self {
        PairCopulaSequence(v)
    }
}

fn check_dim(seq: &[CopulaSpec], u: &[f64]) -> Result<()> {
    if u.len() != seq.len() {
        return Err(MagmarError::DimensionMismatch { expected: seq.len(), got: u.len() });
    }
    Ok(())
}

pub(crate) fn fwd_raw(seq: &[CopulaSpec], u: &[f64], x: f64) -> f64 {
    let d = u.len();
    if d == 0 {
        return clamp_unit(x);
    }
    seq[d - 1].h2(fwd_raw(seq, &u[..d - 1], x), bwd_raw(seq, &u[..d - 1], u[d - 1]))
}

pub(crate) fn bwd_raw(seq: &[CopulaSpec], u: &[f64], x: f64) -> f64 {
    let d = u.len();
    if d == 0 {
        return clamp_unit(x);
    }
    seq[d - 1].h1(fwd_raw(seq, &u[1..], u[0]), bwd_raw(seq, &u[1..], x))
}

/// Conditional CDF of `x` given the older values `u` (most recent first).
pub fn rosenblatt_fwd(seq: &[CopulaSpec], u: &[f64], x: f64) -> Result<f64> {
    check_dim(seq, u)?;
    Ok(fwd_raw(seq, u, x))
}

/// Conditional CDF of an older value `x` given the newer values `u`
/// (most recent first, so `u[d - 1]` is adjacent to `x`).
pub fn rosenblatt_bwd(seq: &[CopulaSpec], u: &[f64], x: f64) -> Result<f64> {
    check_dim(seq, u)?;
    Ok(bwd_raw(seq, u, x))
}

/// Inverse of [`rosenblatt_fwd`] in its last argument.
///
/// The outermost h-function is peeled first: with `b_k` the backward value of
/// the lag-`k` conditioning variable, `R_d(u, x) = h2_k(R_{d-1}(u, x), b_d)`,
/// so `x = R_{d-1}^{-1}(u, h2_inv_d(w, b_d))`.
pub fn rosenblatt_fwd_inv(seq: &[CopulaSpec], u: &[f64], w: f64) -> Result<f64> {
    check_dim(seq, u)?;
    let mut y = clamp_unit(w);
    for d in (1..=u.len()).rev() {
        let b = bwd_raw(seq, &u[..d - 1], u[d - 1]);
        y = seq[d - 1].h2_inv(y, b)?;
    }
    Ok(y)
}

/// Log of `dR/dx` for [`rosenblatt_fwd`]: the conditional log density of `x`
/// given `u` under the D-vine.
pub fn conditional_ln_density(seq: &[CopulaSpec], u: &[f64], x: f64) -> Result<f64> {
    check_dim(seq, u)?;
    Ok(conditional_ln_density_raw(seq, u, x))
}

pub(crate) fn conditional_ln_density_raw(seq: &[CopulaSpec], u: &[f64], x: f64) -> f64 {
    (1..=u.len())
        .map(|k| {
            let a = fwd_raw(seq, &u[..k - 1], x);
            let b = bwd_raw(seq, &u[..k - 1], u[k - 1]);
            seq[k - 1].ln_density(a, b)
        })
        .sum()
}

/// Log D-vine copula density of `window` (length `d + 1`, newest first).
pub fn dvine_log_density(seq: &[CopulaSpec], window: &[f64]) -> Result<f64> {
    if window.len() != seq.len() + 1 {
        return Err(MagmarError::DimensionMismatch { expected: seq.len() + 1, got: window.len() });
    }
    // Chain rule: density of window[j] given everything older than it.
    Ok((0..seq.len()).map(|j| conditional_ln_density_raw(seq, &window[j + 1..], window[j])).sum())
}

/// Incremental D-vine evaluation along a time series.
///
/// After values `y_1..y_t` have been pushed, `diag[j]` holds
/// `F(y_{t-j} | y_{t-j+1}, ..., y_t)`, the backward Rosenblatt value of the
/// lag-`(j + 1)` observation. That is exactly what the next forward step and
/// its inverse need, so each step costs `O(d)` h-function calls.
#[derive(Debug, Clone)]
pub struct VineState<'a> {
    seq: &'a [CopulaSpec],
    diag: Vec<f64>,
    fwd: Vec<f64>,
    // side[k]: h1 at level k of the last forward chain, the next diag[k].
    side: Vec<f64>,
}

impl<'a> VineState<'a> {
    pub fn new(seq: &'a [CopulaSpec]) -> Self {
        let n = seq.len() + 1;
        VineState { seq, diag: Vec::with_capacity(n - 1), fwd: vec![0.0; n], side: vec![0.0; n] }
    }

    /// Builds the state from a history given most-recent-first.
    pub fn from_history(seq: &'a [CopulaSpec], history: &[f64]) -> Self {
        let mut s = Self::new(seq);
        for &y in history.iter().rev() {
            s.push(y);
        }
        s
    }

    /// Number of conditioning values currently in use (at most `d`).
    pub fn depth(&self) -> usize {
        self.diag.len()
    }

    fn forward_chain(&mut self, x: f64) -> f64 {
        let m = self.diag.len();
        self.fwd[0] = clamp_unit(x);
        let mut ln_jac = 0.0;
        for k in 1..=m {
            let (h2, h1, ln_c) = self.seq[k - 1].eval_pair(self.fwd[k - 1], self.diag[k - 1]);
            ln_jac += ln_c;
            self.fwd[k] = h2;
            self.side[k] = h1;
        }
        ln_jac
    }

    /// Forward Rosenblatt value of `x` given the stored history and the log
    /// of its derivative in `x`.
    pub fn transform(&mut self, x: f64) -> (f64, f64) {
        let ln_jac = self.forward_chain(x);
        (self.fwd[self.diag.len()], ln_jac)
    }

    /// Forward Rosenblatt value of `x`, without the density.
    pub fn transform_value(&mut self, x: f64) -> f64 {
        let m = self.diag.len();
        self.fwd[0] = clamp_unit(x);
        for k in 1..=m {
            self.fwd[k] = self.seq[k - 1].h2(self.fwd[k - 1], self.diag[k - 1]);
        }
        self.fwd[m]
    }

    /// Inverse forward Rosenblatt function at `w` given the stored history.
    pub fn inverse(&self, w: f64) -> Result<f64> {
        let mut y = clamp_unit(w);
        for k in (1..=self.diag.len()).rev() {
            y = self.seq[k - 1].h2_inv(y, self.diag[k - 1])?;
        }
        Ok(y)
    }

    /// Appends `y` as the newest observation.
    pub fn push(&mut self, y: f64) {
        if self.seq.is_empty() {
            return;
        }
        // Only the levels that feed the new diagonal are needed.
        let len = (self.diag.len() + 1).min(self.seq.len());
        self.fwd[0] = clamp_unit(y);
        for k in 1..len {
            let (h2, h1, _) = self.seq[k - 1].eval_pair(self.fwd[k - 1], self.diag[k - 1]);
            self.fwd[k] = h2;
            self.side[k] = h1;
        }
        self.shift_in(y);
    }

    /// Forward value and log-Jacobian of `x` (as [`transform`](Self::transform)),
    /// then appends `x` to the history.
    pub fn step(&mut self, x: f64) -> (f64, f64) {
        let ln_jac = self.forward_chain(x);
        let v = self.fwd[self.diag.len()];
        if !self.seq.is_empty() {
            self.shift_in(x);
        }
        (v, ln_jac)
    }

    // Needs self.side to hold the h1 values of the forward chain of y.
    fn shift_in(&mut self, y: f64) {
        if self.diag.len() < self.seq.len() {
            self.diag.push(0.0);
        }
        let len = self.diag.len();
        self.diag[1..len].copy_from_slice(&self.side[1..len]);
        self.diag[0] = clamp_unit(y);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{norm_cdf, norm_quantile};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn normals(r: &[f64]) -> Vec<CopulaSpec> {
        r.iter().map(|&x| CopulaSpec::normal(x).unwrap()).collect()
    }

    /// Correlation matrix of (y0, y1, y2) implied by partial correlations
    /// rho1 (lag 1) and rho2 (lag 2 given the middle value).
    fn gaussian_corr(r1: f64, r2: f64) -> [[f64; 3]; 3] {
        let r02 = r2 * (1.0 - r1 * r1) + r1 * r1;
        [[1.0, r1, r02], [r1, 1.0, r1], [r02, r1, 1.0]]
    }

    fn det3(m: &[[f64; 3]; 3]) -> f64 {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    #[allow(clippy::needless_range_loop)]
    fn inv3(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
        let d = det3(m);
        let mut r = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let (a, b) = ((j + 1) % 3, (j + 2) % 3);
                let (c, e) = ((i + 1) % 3, (i + 2) % 3);
                r[i][j] = (m[a][c] * m[b][e] - m[a][e] * m[b][c]) / d;
            }
        }
        r
    }

    #[test]
    fn base_case_is_h_function() {
        let c = CopulaSpec::gumbel(2.3).unwrap();
        let seq = [c];
        assert_eq!(rosenblatt_fwd(&seq, &[0.4], 0.7).unwrap(), c.h2(0.7, 0.4));
        assert_eq!(rosenblatt_bwd(&seq, &[0.4], 0.7).unwrap(), c.h1(0.4, 0.7));
    }

    #[test]
    fn independence_is_identity() {
        let seq = vec![CopulaSpec::independence(); 4];
        let u = [0.1, 0.8, 0.3, 0.6];
        assert_eq!(rosenblatt_fwd(&seq, &u, 0.42).unwrap(), 0.42);
        assert_eq!(rosenblatt_fwd_inv(&seq, &u, 0.42).unwrap(), 0.42);
        assert_eq!(dvine_log_density(&seq, &[0.5, 0.1, 0.8, 0.3, 0.6]).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        let seq = normals(&[0.3, 0.2]);
        assert!(matches!(
            rosenblatt_fwd(&seq, &[0.5], 0.5),
            Err(MagmarError::DimensionMismatch { expected: 2, got: 1 })
        ));
        assert!(dvine_log_density(&seq, &[0.5, 0.5]).is_err());
    }

    #[test]
    fn gaussian_conditional_cdf_oracle() {
        // Oracle: conditional normal of z0 given (z1, z2) from the 3x3
        // correlation matrix implied by the partial correlations.
        let (r1, r2) = (0.6, 0.3);
        let seq = normals(&[r1, r2]);
        let s = gaussian_corr(r1, r2);
        for &(u1, u2, x) in &[(0.3, 0.8, 0.55), (0.9, 0.1, 0.2), (0.5, 0.5, 0.5), (0.05, 0.7, 0.97)] {
            let (z1, z2, z0) = (norm_quantile(u1), norm_quantile(u2), norm_quantile(x));
            // Regression coefficients of z0 on (z1, z2).
            let det = 1.0 - s[1][2] * s[1][2];
            let b1 = (s[0][1] - s[0][2] * s[1][2]) / det;
            let b2 = (s[0][2] - s[0][1] * s[1][2]) / det;
            let var = 1.0 - (b1 * s[0][1] + b2 * s[0][2]);
            let expected = norm_cdf((z0 - b1 * z1 - b2 * z2) / var.sqrt());
            let got = rosenblatt_fwd(&seq, &[u1, u2], x).unwrap();
            assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
            // Backward: z2 (oldest) given (z0, z1) with z1 adjacent.
            let b0 = (s[2][0] - s[2][1] * s[0][1]) / (1.0 - s[0][1] * s[0][1]);
            let b1 = (s[2][1] - s[2][0] * s[0][1]) / (1.0 - s[0][1] * s[0][1]);
            let var = 1.0 - (b0 * s[2][0] + b1 * s[2][1]);
            let expected = norm_cdf((z2 - b0 * z0 - b1 * z1) / var.sqrt());
            let got = rosenblatt_bwd(&seq, &[x, u1], u2).unwrap();
            assert!((got - expected).abs() < 1e-12, "bwd {got} vs {expected}");
        }
    }

    #[test]
    fn gaussian_density_oracle() {
        let (r1, r2) = (0.6, 0.3);
        let seq = normals(&[r1, r2]);
        let s = gaussian_corr(r1, r2);
        let si = inv3(&s);
        for w in [[0.3, 0.8, 0.55], [0.9, 0.1, 0.2], [0.5, 0.5, 0.5]] {
            let z: Vec<f64> = w.iter().map(|&u| norm_quantile(u)).collect();
            let mut quad = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    quad += z[i] * (si[i][j] - if i == j { 1.0 } else { 0.0 }) * z[j];
                }
            }
            let expected = -0.5 * det3(&s).ln() - 0.5 * quad;
            let got = dvine_log_density(&seq, &w).unwrap();
            assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
        }
    }

    #[test]
    fn single_pair_density() {
        let c = CopulaSpec::t(0.4, 5.0).unwrap();
        let v = dvine_log_density(&[c], &[0.2, 0.9]).unwrap();
        assert!((v - c.ln_density(0.2, 0.9)).abs() < 1e-15);
    }

    #[test]
    fn marginalizes_last_coordinate() {
        use crate::quadrature::integrate;
        let seq = vec![CopulaSpec::gumbel(1.8).unwrap(), CopulaSpec::t(0.3, 6.0).unwrap()];
        for (a, b) in [(0.3, 0.7), (0.85, 0.2)] {
            let full = integrate(|x| dvine_log_density(&seq, &[a, b, x]).unwrap().exp(), 0.0, 1.0, 1e-9).unwrap();
            let short = dvine_log_density(&seq[..1], &[a, b]).unwrap().exp();
            assert!((full - short).abs() < 1e-5, "{full} vs {short}");
        }
    }

    #[test]
    fn fwd_strictly_increasing() {
        let seq =
            vec![CopulaSpec::gumbel(2.0).unwrap(), CopulaSpec::normal(-0.4).unwrap(), CopulaSpec::t(0.5, 3.0).unwrap()];
        let u = [0.2, 0.9, 0.6];
        let mut prev = 0.0;
        for i in 1..200 {
            let v = rosenblatt_fwd(&seq, &u, i as f64 / 200.0).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    // Moderate dependence: with strong pairs chained over several lags the
    // intermediate conditional values leave [EPS, 1 - EPS] and get clamped,
    // which caps the attainable roundtrip accuracy.
    fn random_copula(rng: &mut ChaCha8Rng) -> CopulaSpec {
        match rng.gen_range(0..4) {
            0 => CopulaSpec::normal(rng.gen_range(-0.7..0.7)).unwrap(),
            1 => CopulaSpec::t(rng.gen_range(-0.7..0.7), rng.gen_range(2.0..30.0)).unwrap(),
            2 => CopulaSpec::gumbel(rng.gen_range(1.0..2.5)).unwrap(),
            _ => CopulaSpec::independence(),
        }
    }

    #[test]
    fn inverse_roundtrip_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let d = rng.gen_range(1..=4);
            let seq: Vec<CopulaSpec> = (0..d).map(|_| random_copula(&mut rng)).collect();
            let u: Vec<f64> = (0..d).map(|_| rng.gen_range(0.02..0.98)).collect();
            let w = rng.gen_range(0.01..0.99);
            let x = rosenblatt_fwd_inv(&seq, &u, w).unwrap();
            worst = worst.max((rosenblatt_fwd(&seq, &u, x).unwrap() - w).abs());
        }
        assert!(worst <= 1e-7, "worst residual {worst}");
    }

    #[test]
    fn d1_inverse_is_closed_form() {
        let rho: f64 = -0.35;
        let c = CopulaSpec::normal(rho).unwrap();
        let got = rosenblatt_fwd_inv(&[c], &[0.8], 0.3).unwrap();
        let closed = norm_cdf(norm_quantile(0.3) * (1.0 - rho * rho).sqrt() + rho * norm_quantile(0.8));
        assert!((got - closed).abs() < 1e-15);
    }

    #[test]
    fn vine_state_matches_direct_recursion() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let d = rng.gen_range(1..=5);
            let seq: Vec<CopulaSpec> = (0..d).map(|_| random_copula(&mut rng)).collect();
            let series: Vec<f64> = (0..12).map(|_| rng.gen_range(0.01..0.99)).collect();
            let mut state = VineState::new(&seq);
            for t in 0..series.len() {
                let m = t.min(d);
                let hist: Vec<f64> = (1..=m).map(|j| series[t - j]).collect();
                let x = series[t];
                let (val, ln_jac) = state.transform(x);
                let direct = fwd_raw(&seq[..m], &hist, x);
                let direct_ln = conditional_ln_density_raw(&seq[..m], &hist, x);
                assert!((val - direct).abs() < 1e-13);
                assert!((ln_jac - direct_ln).abs() < 1e-10);
                if m > 0 {
                    let inv = state.inverse(val).unwrap();
                    assert!((fwd_raw(&seq[..m], &hist, inv) - val).abs() < 1e-7);
                }
                if t % 2 == 0 {
                    state.push(x);
                } else {
                    assert_eq!(state.step(x), (val, ln_jac));
                }
                assert_eq!(state.depth(), (t + 1).min(d));
            }
        }
    }
}
