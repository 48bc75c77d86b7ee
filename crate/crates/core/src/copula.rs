//! Bivariate copula families used as building blocks of every model:
//! normal, Student-t, Gumbel and independence.
//!
//! Argument convention: `h2(u1, u2) = dC/du2` is the conditional CDF of `U1`
//! given `U2 = u2`, `h1(u1, u2) = dC/du1` the conditional CDF of `U2` given
//! `U1 = u1`. `h2_inv(w, u2)` solves `h2(x, u2) = w` for `x`, and
//! `h1_inv(w, u1)` solves `h1(u1, x) = w`.
//!
//! All inputs are clamped into `[EPS, 1 - EPS]` before evaluation.

use crate::error::{MagmarError, Result};
use crate::quadrature;
use crate::special::{norm_cdf, norm_quantile, t_cdf, t_ln_norm_const, t_quantile};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use std::fmt;

/// Clamp distance from the unit-interval boundary.
pub const EPS: f64 = 1e-10;

pub const NU_MIN: f64 = 2.0;
pub const NU_MAX: f64 = 100.0;

#[inline]
pub fn clamp_unit(u: f64) -> f64 {
    if u.is_nan() {
        return u;
    }
    u.clamp(EPS, 1.0 - EPS)
}

/// A value strictly inside the open unit interval.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct UnitValue(f64);

impl UnitValue {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(UnitValue(value))
        } else {
            Err(MagmarError::NotInUnitInterval(value))
        }
    }

    /// Clamps into `[EPS, 1 - EPS]` instead of rejecting boundary values.
    pub fn clamped(value: f64) -> Self {
        UnitValue(clamp_unit(if value.is_nan() { 0.5 } else { value }))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for UnitValue {
    type Error = MagmarError;
    fn try_from(v: f64) -> Result<Self> {
        UnitValue::new(v)
    }
}

impl From<UnitValue> for f64 {
    fn from(u: UnitValue) -> f64 {
        u.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Normal,
    T,
    Gumbel,
    Independence,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Normal, Family::T, Family::Gumbel, Family::Independence];

    /// Single-letter tag used in model strings.
    pub fn code(self) -> char {
        match self {
            Family::Normal => 'n',
            Family::T => 't',
            Family::Gumbel => 'g',
            Family::Independence => 'i',
        }
    }

    pub fn from_code(c: char) -> Option<Family> {
        match c {
            'n' => Some(Family::Normal),
            't' => Some(Family::T),
            'g' => Some(Family::Gumbel),
            'i' => Some(Family::Independence),
            _ => None,
        }
    }

    pub fn n_params(self) -> usize {
        match self {
            Family::Normal | Family::Gumbel => 1,
            Family::T => 2,
            Family::Independence => 0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Normal => "normal",
            Family::T => "t",
            Family::Gumbel => "gumbel",
            Family::Independence => "independence",
        }
    }

    /// A valid parameter vector used when a family is needed but not yet fitted.
    pub fn default_params(self) -> Vec<f64> {
        match self {
            Family::Normal => vec![0.0],
            Family::T => vec![0.0, 10.0],
            Family::Gumbel => vec![1.5],
            Family::Independence => vec![],
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Normal { rho: f64, s: f64 },
    T { rho: f64, nu: f64, s: f64, ln_c: f64 },
    Gumbel { theta: f64 },
    Independence,
}

/// A validated bivariate copula: family plus parameters.
///
/// Construction goes through [`CopulaSpec::new`] (or the per-family
/// helpers), so every value of this type lies inside its parameter domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CopulaRecord", into = "CopulaRecord")]
pub struct CopulaSpec {
    kind: Kind,
}

#[derive(Serialize, Deserialize)]
struct CopulaRecord {
    family: Family,
    params: Vec<f64>,
}

impl TryFrom<CopulaRecord> for CopulaSpec {
    type Error = MagmarError;
    fn try_from(r: CopulaRecord) -> Result<Self> {
        CopulaSpec::new(r.family, &r.params)
    }
}

impl From<CopulaSpec> for CopulaRecord {
    fn from(c: CopulaSpec) -> Self {
        CopulaRecord { family: c.family(), params: c.params() }
    }
}

/// Checks a family/parameter combination against its domain.
pub fn validate(family: Family, params: &[f64]) -> Result<()> {
    let err = |message: String| Err(MagmarError::Domain { family: family.name(), message });
    if params.len() != family.n_params() {
        return err(format!("expected {} parameter(s), got {}", family.n_params(), params.len()));
    }
    if params.iter().any(|p| !p.is_finite()) {
        return err("parameters must be finite".into());
    }
    match family {
        Family::Normal | Family::T => {
            let rho = params[0];
            if !(rho > -1.0 && rho < 1.0) {
                return err(format!("rho = {rho} violates -1 < rho < 1"));
            }
            if family == Family::T {
                let nu = params[1];
                if !(NU_MIN..=NU_MAX).contains(&nu) {
                    return err(format!("nu = {nu} violates {NU_MIN} <= nu <= {NU_MAX}"));
                }
            }
        }
        Family::Gumbel => {
            let rho = params[0];
            if rho < 1.0 {
                return err(format!("rho = {rho} violates rho >= 1"));
            }
        }
        Family::Independence => {}
    }
    Ok(())
}

impl CopulaSpec {
    pub fn new(family: Family, params: &[f64]) -> Result<Self> {
        validate(family, params)?;
        let kind = match family {
            Family::Normal => {
                let rho = params[0];
                Kind::Normal { rho, s: (1.0 - rho * rho).sqrt() }
            }
            Family::T => {
                let (rho, nu) = (params[0], params[1]);
                let ln_c = ln_gamma(0.5 * (nu + 2.0)) + ln_gamma(0.5 * nu)
                    - 2.0 * ln_gamma(0.5 * (nu + 1.0))
                    - 0.5 * (1.0 - rho * rho).ln();
                Kind::T { rho, nu, s: (1.0 - rho * rho).sqrt(), ln_c }
            }
            Family::Gumbel => Kind::Gumbel { theta: params[0] },
            Family::Independence => Kind::Independence,
        };
        Ok(CopulaSpec { kind })
    }

    pub fn normal(rho: f64) -> Result<Self> {
        Self::new(Family::Normal, &[rho])
    }

    pub fn t(rho: f64, nu: f64) -> Result<Self> {
        Self::new(Family::T, &[rho, nu])
    }

    pub fn gumbel(rho: f64) -> Result<Self> {
        Self::new(Family::Gumbel, &[rho])
    }

    pub fn independence() -> Self {
        CopulaSpec { kind: Kind::Independence }
    }

    pub fn family(&self) -> Family {
        match self.kind {
            Kind::Normal { .. } => Family::Normal,
            Kind::T { .. } => Family::T,
            Kind::Gumbel { .. } => Family::Gumbel,
            Kind::Independence => Family::Independence,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match self.kind {
            Kind::Normal { rho, .. } => vec![rho],
            Kind::T { rho, nu, .. } => vec![rho, nu],
            Kind::Gumbel { theta } => vec![theta],
            Kind::Independence => vec![],
        }
    }

    pub fn is_independence(&self) -> bool {
        matches!(self.kind, Kind::Independence)
    }

    /// Copula distribution function `C(u1, u2)`.
    pub fn cdf(&self, u1: f64, u2: f64) -> f64 {
        let (u1, u2) = (clamp_unit(u1), clamp_unit(u2));
        match self.kind {
            Kind::Independence => u1 * u2,
            Kind::Normal { rho, .. } => bvn_upper(-norm_quantile(u1), -norm_quantile(u2), rho).clamp(0.0, u1.min(u2)),
            Kind::Gumbel { theta } => {
                let a = -u1.ln();
                let b = -u2.ln();
                (-(a.powf(theta) + b.powf(theta)).powf(1.0 / theta)).exp()
            }
            Kind::T { rho, nu, s, .. } => {
                // No closed form for non-integer nu. Integrate h2 over the
                // second margin on the t scale, y = x2 - r / (1 - r):
                // C = int_{-inf}^{x2} T_{nu+1}((x1 - rho y) / sigma(y)) t_nu(y) dy.
                let x1 = t_quantile(u1, nu);
                let x2 = t_quantile(u2, nu);
                let ln_k = t_ln_norm_const(nu);
                let f = |r: f64| {
                    let d = r / (1.0 - r);
                    let y = x2 - d;
                    let scale = ((nu + y * y) / (nu + 1.0)).sqrt() * s;
                    let dens = (ln_k - 0.5 * (nu + 1.0) * (y * y / nu).ln_1p()).exp();
                    t_cdf((x1 - rho * y) / scale, nu + 1.0) * dens / ((1.0 - r) * (1.0 - r))
                };
                quadrature::integrate(f, 0.0, 1.0, 1e-14).unwrap_or(f64::NAN).clamp(0.0, u1.min(u2))
            }
        }
    }

    /// Log copula density.
    pub fn ln_density(&self, u1: f64, u2: f64) -> f64 {
        let (u1, u2) = (clamp_unit(u1), clamp_unit(u2));
        match self.kind {
            Kind::Independence => 0.0,
            Kind::Normal { rho, s } => {
                let x1 = norm_quantile(u1);
                let x2 = norm_quantile(u2);
                let s2 = s * s;
                -s.ln() - (rho * rho * (x1 * x1 + x2 * x2) - 2.0 * rho * x1 * x2) / (2.0 * s2)
            }
            Kind::T { rho, nu, s, ln_c, .. } => {
                let x1 = t_quantile(u1, nu);
                let x2 = t_quantile(u2, nu);
                let q = (x1 * x1 - 2.0 * rho * x1 * x2 + x2 * x2) / (nu * s * s);
                ln_c - 0.5 * (nu + 2.0) * q.ln_1p()
                    + 0.5 * (nu + 1.0) * ((x1 * x1 / nu).ln_1p() + (x2 * x2 / nu).ln_1p())
            }
            Kind::Gumbel { theta } => {
                let a = -u1.ln();
                let b = -u2.ln();
                let ln_a = a.ln();
                let ln_b = b.ln();
                let ln_sum = ln_add_exp(theta * ln_a, theta * ln_b);
                let s = (ln_sum / theta).exp();
                -s + a + b + (theta - 1.0) * (ln_a + ln_b) + (2.0 / theta - 2.0) * ln_sum + ((theta - 1.0) / s).ln_1p()
            }
        }
    }

    pub fn density(&self, u1: f64, u2: f64) -> f64 {
        self.ln_density(u1, u2).exp()
    }

    /// `dC/du2`: conditional CDF of `U1` at `u1` given `U2 = u2`.
    pub fn h2(&self, u1: f64, u2: f64) -> f64 {
        let (u1, u2) = (clamp_unit(u1), clamp_unit(u2));
        let h = match self.kind {
            Kind::Independence => u1,
            Kind::Normal { rho, s } => norm_cdf((norm_quantile(u1) - rho * norm_quantile(u2)) / s),
            Kind::T { rho, nu, s, .. } => {
                let x1 = t_quantile(u1, nu);
                let x2 = t_quantile(u2, nu);
                let scale = ((nu + x2 * x2) / (nu + 1.0)).sqrt() * s;
                t_cdf((x1 - rho * x2) / scale, nu + 1.0)
            }
            Kind::Gumbel { theta } => gumbel_h(theta, u1, u2),
        };
        clamp_unit(h)
    }

    /// `(h2(u1, u2), h1(u1, u2), ln c(u1, u2))` sharing the quantile
    /// transforms between the three.
    pub fn eval_pair(&self, u1: f64, u2: f64) -> (f64, f64, f64) {
        let (u1, u2) = (clamp_unit(u1), clamp_unit(u2));
        match self.kind {
            Kind::Independence => (u1, u2, 0.0),
            Kind::Normal { rho, s } => {
                let x1 = norm_quantile(u1);
                let x2 = norm_quantile(u2);
                let ln_c = -s.ln() - (rho * rho * (x1 * x1 + x2 * x2) - 2.0 * rho * x1 * x2) / (2.0 * s * s);
                (clamp_unit(norm_cdf((x1 - rho * x2) / s)), clamp_unit(norm_cdf((x2 - rho * x1) / s)), ln_c)
            }
            Kind::T { rho, nu, s, ln_c } => {
                let x1 = t_quantile(u1, nu);
                let x2 = t_quantile(u2, nu);
                let q = (x1 * x1 - 2.0 * rho * x1 * x2 + x2 * x2) / (nu * s * s);
                let l1 = (x1 * x1 / nu).ln_1p();
                let l2 = (x2 * x2 / nu).ln_1p();
                let ln_dens = ln_c - 0.5 * (nu + 2.0) * q.ln_1p() + 0.5 * (nu + 1.0) * (l1 + l2);
                let sc2 = ((nu + x2 * x2) / (nu + 1.0)).sqrt() * s;
                let sc1 = ((nu + x1 * x1) / (nu + 1.0)).sqrt() * s;
                (
                    clamp_unit(t_cdf((x1 - rho * x2) / sc2, nu + 1.0)),
                    clamp_unit(t_cdf((x2 - rho * x1) / sc1, nu + 1.0)),
                    ln_dens,
                )
            }
            Kind::Gumbel { theta } => {
                (clamp_unit(gumbel_h(theta, u1, u2)), clamp_unit(gumbel_h(theta, u2, u1)), self.ln_density(u1, u2))
            }
        }
    }

    /// `dC/du1`: conditional CDF of `U2` at `u2` given `U1 = u1`.
    pub fn h1(&self, u1: f64, u2: f64) -> f64 {
        // All supported families are exchangeable.
        self.h2(u2, u1)
    }

    /// Solves `h2(x, u2) = w` for `x`.
    pub fn h2_inv(&self, w: f64, u2: f64) -> Result<f64> {
        let (w, u2) = (clamp_unit(w), clamp_unit(u2));
        let x = match self.kind {
            Kind::Independence => w,
            Kind::Normal { rho, s } => norm_cdf(norm_quantile(w) * s + rho * norm_quantile(u2)),
            Kind::T { rho, nu, s, .. } => {
                let x2 = t_quantile(u2, nu);
                let scale = ((nu + x2 * x2) / (nu + 1.0)).sqrt() * s;
                t_cdf(t_quantile(w, nu + 1.0) * scale + rho * x2, nu)
            }
            Kind::Gumbel { theta } => gumbel_h_inv(theta, w, u2)?,
        };
        Ok(clamp_unit(x))
    }

    /// Solves `h1(u1, x) = w` for `x`.
    pub fn h1_inv(&self, w: f64, u1: f64) -> Result<f64> {
        self.h2_inv(w, u1)
    }
}

impl fmt::Display for CopulaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params: Vec<String> = self.params().iter().map(|p| format!("{p}")).collect();
        write!(f, "{}({})", self.family(), params.join(", "))
    }
}

#[inline]
fn ln_add_exp(x: f64, y: f64) -> f64 {
    let m = x.max(y);
    m + ((x - m).exp() + (y - m).exp()).ln()
}

/// Gumbel `dC/du2` evaluated in logs.
fn gumbel_h(theta: f64, u1: f64, u2: f64) -> f64 {
    let a = -u1.ln();
    let b = -u2.ln();
    let ln_a = a.ln();
    let ln_b = b.ln();
    let ln_sum = ln_add_exp(theta * ln_a, theta * ln_b);
    let s = (ln_sum / theta).exp();
    (-s + (1.0 - theta) * ln_sum / theta + (theta - 1.0) * ln_b + b).exp()
}

fn gumbel_ln_density(theta: f64, u1: f64, u2: f64) -> f64 {
    CopulaSpec { kind: Kind::Gumbel { theta } }.ln_density(u1, u2)
}

/// Bracketed Newton iteration for the Gumbel inverse h-function.
fn gumbel_h_inv(theta: f64, w: f64, u2: f64) -> Result<f64> {
    const MAX_ITER: usize = 200;
    const TOL: f64 = 1e-10;
    let f = |x: f64| gumbel_h(theta, x, u2) - w;
    let (mut lo, mut hi) = (EPS, 1.0 - EPS);
    let f_lo = f(lo);
    if f_lo >= 0.0 {
        return Ok(lo);
    }
    if f(hi) <= 0.0 {
        return Ok(hi);
    }
    let mut x = w;
    for _ in 0..MAX_ITER {
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let slope = gumbel_ln_density(theta, x, u2).exp();
        let mut next = x - fx / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let step = (next - x).abs();
        x = next;
        if step < TOL * 1e-3 || hi - lo < TOL * 1e-3 {
            return Ok(x);
        }
    }
    let residual = f(x);
    if residual.abs() < TOL {
        Ok(x)
    } else {
        Err(MagmarError::RootFinding { residual })
    }
}

const GL_X: [[f64; 10]; 3] = [
    [-0.932_469_514_203_152_2, -0.661_209_386_466_264_7, -0.238_619_186_083_197, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [
        -0.981_560_634_246_719_1,
        -0.904_117_256_370_475,
        -0.769_902_674_194_305,
        -0.587_317_954_286_617_1,
        -0.367_831_498_998_180_2,
        -0.125_233_408_511_469_2,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        -0.993_128_599_185_094_9,
        -0.963_971_927_277_913_8,
        -0.912_234_428_251_326,
        -0.839_116_971_822_218_8,
        -0.746_331_906_460_150_8,
        -0.636_053_680_726_515,
        -0.510_867_001_950_827_1,
        -0.373_706_088_715_419_6,
        -0.227_785_851_141_645_1,
        -0.076_526_521_133_497_3,
    ],
];
const GL_W: [[f64; 10]; 3] = [
    [0.171_324_492_379_170_5, 0.360_761_573_048_138_4, 0.467_913_934_572_690_4, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [
        0.047_175_336_386_511_77,
        0.106_939_325_995_318_3,
        0.160_078_328_543_346_4,
        0.203_167_426_723_065_9,
        0.233_492_536_538_354_7,
        0.249_147_045_813_402_9,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        0.017_614_007_139_152_12,
        0.040_601_429_800_386_94,
        0.062_672_048_334_109_06,
        0.083_276_741_576_704_75,
        0.101_930_119_817_240_4,
        0.118_194_531_961_518_4,
        0.131_688_638_449_176_6,
        0.142_096_109_318_382_1,
        0.149_172_986_472_603_7,
        0.152_753_387_130_725_9,
    ],
];

/// Upper bivariate normal probability `P(X > h, Y > k)` with correlation `r`
/// (Drezner-Wesolowsky with Genz's refinements).
pub(crate) fn bvn_upper(h: f64, k: f64, r: f64) -> f64 {
    use std::f64::consts::PI;
    let two_pi = 2.0 * PI;
    let (ng, lg) = if r.abs() < 0.3 {
        (0, 3)
    } else if r.abs() < 0.75 {
        (1, 6)
    } else {
        (2, 10)
    };
    let mut k = k;
    let mut hk = h * k;
    let mut bvn = 0.0;
    if r.abs() < 0.925 {
        let hs = 0.5 * (h * h + k * k);
        let asr = r.asin();
        for i in 0..lg {
            for sign in [-1.0, 1.0] {
                let sn = (asr * (sign * GL_X[ng][i] + 1.0) / 2.0).sin();
                bvn += GL_W[ng][i] * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
            }
        }
        return bvn * asr / (2.0 * two_pi) + norm_cdf(-h) * norm_cdf(-k);
    }
    if r < 0.0 {
        k = -k;
        hk = -hk;
    }
    if r.abs() < 1.0 {
        let as_ = (1.0 - r) * (1.0 + r);
        let mut a = as_.sqrt();
        let bs = (h - k) * (h - k);
        let c = (4.0 - hk) / 8.0;
        let d = (12.0 - hk) / 16.0;
        bvn = a
            * (-(bs / as_ + hk) / 2.0).exp()
            * (1.0 - c * (bs - as_) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as_ * as_ / 5.0);
        if hk > -160.0 {
            let b = bs.sqrt();
            bvn -=
                (-hk / 2.0).exp() * two_pi.sqrt() * norm_cdf(-b / a) * b * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
        }
        a /= 2.0;
        for i in 0..lg {
            for sign in [-1.0, 1.0] {
                let xs = (a * (sign * GL_X[ng][i] + 1.0)).powi(2);
                let rs = (1.0 - xs).sqrt();
                let asr = -(bs / xs + hk) / 2.0;
                if asr > -100.0 {
                    bvn += a
                        * GL_W[ng][i]
                        * asr.exp()
                        * ((-hk * (1.0 - rs) / (2.0 * (1.0 + rs))).exp() / rs - (1.0 + c * xs * (1.0 + d * xs)));
                }
            }
        }
        bvn = -bvn / two_pi;
    }
    if r > 0.0 {
        bvn + norm_cdf(-h.max(k))
    } else {
        -bvn + (norm_cdf(-h) - norm_cdf(-k)).max(0.0)
    }
}
