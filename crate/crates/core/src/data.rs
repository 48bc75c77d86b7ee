//! Loading level series, growth rates, pseudo-observations and lag
//! diagnostics.

use crate::error::{MagmarError, Result};
use crate::model::PseudoSeries;
use serde::Serialize;
use std::path::Path;
use std::str::FromStr;

/// Dated observations, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries {
    pub dates: Vec<String>,
    pub values: Vec<f64>,
}

impl RawSeries {
    pub fn new(dates: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(MagmarError::DimensionMismatch { expected: dates.len(), got: values.len() });
        }
        if let Some(i) = (1..dates.len()).find(|&i| dates[i] <= dates[i - 1]) {
            return Err(MagmarError::data(
                None,
                format!("dates must be strictly increasing: '{}' follows '{}'", dates[i], dates[i - 1]),
            ));
        }
        Ok(RawSeries { dates, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Names of the columns read by [`load_csv`].
#[derive(Debug, Clone)]
pub struct ColumnSpec {
    pub date: String,
    pub value: String,
}

impl Default for ColumnSpec {
    fn default() -> Self {
        ColumnSpec { date: "date".into(), value: "value".into() }
    }
}

/// Reads a headed CSV file. Errors name the offending line (1-based, header
/// is line 1).
pub fn load_csv(path: &Path, columns: &ColumnSpec) -> Result<RawSeries> {
    let file = std::fs::File::open(path).map_err(|e| MagmarError::Io(format!("{}: {e}", path.display())))?;
    read_csv(file, columns)
}

pub fn read_csv<R: std::io::Read>(input: R, columns: &ColumnSpec) -> Result<RawSeries> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers().map_err(|e| MagmarError::data(Some(1), e.to_string()))?.clone();
    if headers.is_empty() {
        return Err(MagmarError::data(None, "empty file"));
    }
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| MagmarError::data(Some(1), format!("missing column '{name}' in header")))
    };
    let (di, vi) = (find(&columns.date)?, find(&columns.value)?);
    let mut dates = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize);
            MagmarError::data(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line() as usize);
        let (Some(d), Some(v)) = (record.get(di), record.get(vi)) else {
            return Err(MagmarError::data(line, "missing field"));
        };
        let x: f64 = v.parse().map_err(|_| MagmarError::data(line, format!("'{v}' is not a number")))?;
        if !x.is_finite() {
            return Err(MagmarError::data(line, format!("'{v}' is not finite")));
        }
        dates.push(d.to_string());
        values.push(x);
    }
    if values.is_empty() {
        return Err(MagmarError::data(None, "no data rows"));
    }
    RawSeries::new(dates, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Growth {
    /// `ln(x_t / x_{t-1})`
    #[default]
    Log,
    /// `x_t / x_{t-1} - 1`
    Pct,
}

impl FromStr for Growth {
    type Err = MagmarError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "log" => Ok(Growth::Log),
            "pct" => Ok(Growth::Pct),
            _ => Err(MagmarError::Params(format!("unknown growth convention '{s}' (expected log or pct)"))),
        }
    }
}

/// Period-on-period growth; dated by the later period.
pub fn growth_rates(raw: &RawSeries, kind: Growth) -> Result<RawSeries> {
    if raw.len() < 2 {
        return Err(MagmarError::SeriesTooShort { len: raw.len(), required: 1 });
    }
    if let Some(i) = raw.values.iter().position(|&v| v <= 0.0) {
        return Err(MagmarError::data(
            None,
            format!("non-positive level {} at {} (growth rates need positive levels)", raw.values[i], raw.dates[i]),
        ));
    }
    let values = raw
        .values
        .windows(2)
        .map(|w| match kind {
            Growth::Log => (w[1] / w[0]).ln(),
            Growth::Pct => w[1] / w[0] - 1.0,
        })
        .collect();
    Ok(RawSeries { dates: raw.dates[1..].to_vec(), values })
}

/// Sorted sample defining the rescaled empirical CDF and its inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMarginal {
    sorted: Vec<f64>,
}

impl EmpiricalMarginal {
    pub fn new(sample: &[f64]) -> Result<Self> {
        if sample.is_empty() {
            return Err(MagmarError::data(None, "empty sample"));
        }
        if sample.iter().any(|v| v.is_nan()) {
            return Err(MagmarError::data(None, "sample contains NaN"));
        }
        let mut sorted = sample.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(EmpiricalMarginal { sorted })
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Inverse of `x -> rank(x) / (n + 1)`, interpolating linearly between
    /// order statistics and clamped to the sample range.
    pub fn quantile(&self, u: f64) -> f64 {
        let n = self.sorted.len();
        let r = u * (n + 1) as f64;
        if r <= 1.0 {
            return self.sorted[0];
        }
        if r >= n as f64 {
            return self.sorted[n - 1];
        }
        let lo = r.floor();
        let i = lo as usize - 1;
        let frac = r - lo;
        self.sorted[i] + frac * (self.sorted[i + 1] - self.sorted[i])
    }
}

/// Average ranks (1-based) with ties sharing the mean of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// `u_i = rank(x_i) / (n + 1)` with average ranks for ties.
pub fn pseudo_observations(x: &[f64]) -> Result<(PseudoSeries, EmpiricalMarginal)> {
    if x.len() < 2 {
        return Err(MagmarError::SeriesTooShort { len: x.len(), required: 1 });
    }
    let marginal = EmpiricalMarginal::new(x)?;
    let n1 = (x.len() + 1) as f64;
    let u = average_ranks(x).into_iter().map(|r| r / n1).collect();
    Ok((PseudoSeries::new(u)?, marginal))
}

pub fn back_transform(u: &[f64], marginal: &EmpiricalMarginal) -> Vec<f64> {
    u.iter().map(|&v| marginal.quantile(v)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LagDiagnostic {
    pub lag: usize,
    pub acf: f64,
    pub kendall_tau: f64,
}

/// Sample autocorrelation at lag `k`.
pub fn acf(x: &[f64], k: usize) -> f64 {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let denom: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    let num: f64 = (0..n - k).map(|t| (x[t] - mean) * (x[t + k] - mean)).sum();
    num / denom
}

/// Kendall's tau-b in `O(n log n)` (Knight's algorithm).
pub fn kendall_tau(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let tx = tied_pairs(&pairs, |a, b| a.0 == b.0);
    let txy = tied_pairs(&pairs, |a, b| a == b);
    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let swaps = merge_count(&mut ys);
    let ty = tied_pairs(&ys, |a, b| a == b);
    let n0 = (n as u64) * (n as u64 - 1) / 2;
    let s = n0 as f64 - tx as f64 - ty as f64 + txy as f64 - 2.0 * swaps as f64;
    s / (((n0 - tx) as f64) * ((n0 - ty) as f64)).sqrt()
}

/// Pairs within runs of equal neighbours in sorted `v`.
fn tied_pairs<T>(v: &[T], eq: impl Fn(&T, &T) -> bool) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for i in 1..v.len() {
        if eq(&v[i], &v[i - 1]) {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Sorts `v` and returns the number of inversions (strictly decreasing pairs).
fn merge_count(v: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = merge_count(&mut v[..mid]) + merge_count(&mut v[mid..]);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            merged.push(v[j]);
            count += (mid - i) as u64;
            j += 1;
        } else {
            merged.push(v[i]);
            i += 1;
        }
    }
    merged.extend_from_slice(&v[i..mid]);
    merged.extend_from_slice(&v[j..]);
    v.copy_from_slice(&merged);
    count
}

/// ACF and Kendall's tau of `(u_t, u_{t+k})` for `k = 0..=max_lag`.
pub fn diagnostics(u: &[f64], max_lag: usize) -> Result<Vec<LagDiagnostic>> {
    if u.len() <= max_lag + 2 {
        return Err(MagmarError::SeriesTooShort { len: u.len(), required: max_lag + 2 });
    }
    Ok((0..=max_lag)
        .map(|k| LagDiagnostic { lag: k, acf: acf(u, k), kendall_tau: kendall_tau(&u[..u.len() - k], &u[k..]) })
        .collect())
}
