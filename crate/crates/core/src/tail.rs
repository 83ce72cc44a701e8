//! Tail-index estimators over descending order statistics.
//!
//! `X_{i:n}` denotes the i-th largest of n sample values (1-based). Every
//! estimator here is built from log-spacings `ln(X_{i:n} / X_{r:n})` or from
//! ratios of spacings, so multiplying the sample by a positive constant leaves
//! the estimate unchanged. Logs are taken of ratios rather than differenced
//! after the fact to keep that invariance tight in floating point.
//!
//! Estimators never return NaN or infinity: a sample that violates an
//! estimator's preconditions yields [`Error::InsufficientSample`] or
//! [`Error::DegenerateSample`].

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::vocab::VocabTable;

/// A positive sample together with its descending order statistics.
#[derive(Clone, Debug)]
pub struct TailSample {
    desc: Vec<f64>,
}

impl TailSample {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::NonPositiveInput(*bad));
        }
        values.sort_unstable_by(|a, b| b.total_cmp(a));
        Ok(TailSample { desc: values })
    }

    pub fn len(&self) -> usize {
        self.desc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.desc.is_empty()
    }

    /// `X_{i:n}`, 1-based.
    pub fn order_stat(&self, i: usize) -> f64 {
        self.desc[i - 1]
    }

    /// Values in descending order.
    pub fn descending(&self) -> &[f64] {
        &self.desc
    }

    fn require(&self, needed: usize, what: &str) -> Result<()> {
        if needed > self.len() {
            return Err(Error::InsufficientSample(format!(
                "{what} needs {needed} order statistics, sample has {}",
                self.len()
            )));
        }
        Ok(())
    }

    /// `ln(X_{i:n} / X_{r:n})`
    fn log_spacing(&self, i: usize, r: usize) -> f64 {
        (self.order_stat(i) / self.order_stat(r)).ln()
    }
}

fn positive_k(k: usize, what: &str) -> Result<()> {
    if k == 0 {
        return Err(Error::InsufficientSample(format!("{what} needs k >= 1")));
    }
    Ok(())
}

fn finite(p: f64, what: &str) -> Result<f64> {
    if p.is_finite() {
        Ok(p)
    } else {
        Err(Error::DegenerateSample(format!("{what} evaluated to {p}")))
    }
}

/// Pickands estimator with spacing parameter `m`:
/// `(1/ln 2) ln((X_{m} - X_{2m}) / (X_{2m} - X_{4m}))`.
pub fn pickands(sample: &TailSample, m: usize) -> Result<f64> {
    positive_k(m, "pickands")?;
    sample.require(4 * m, "pickands")?;
    let (x1, x2, x4) = (
        sample.order_stat(m),
        sample.order_stat(2 * m),
        sample.order_stat(4 * m),
    );
    let upper = x1 - x2;
    let lower = x2 - x4;
    if lower == 0.0 || upper == 0.0 {
        return Err(Error::DegenerateSample(
            "pickands spacings contain ties".into(),
        ));
    }
    finite((upper / lower).ln() / std::f64::consts::LN_2, "pickands")
}

/// Hill estimator: `(1/k) Σ_{i<=k} ln X_{i} - ln X_{k+1}`.
pub fn hill(sample: &TailSample, k: usize) -> Result<f64> {
    positive_k(k, "hill")?;
    sample.require(k + 1, "hill")?;
    let sum: f64 = (1..=k).map(|i| sample.log_spacing(i, k + 1)).sum();
    finite(sum / k as f64, "hill")
}

/// `UH_i = X_{i+1} · H_i` for `i = 1..=count`, where `H_i` is the Hill
/// estimate at `i`. Returned as `UH_i / X_{count+1}` (all share one scale).
fn scaled_uh(sample: &TailSample, count: usize) -> Vec<f64> {
    let reference = sample.order_stat(count + 1);
    let mut out = Vec::with_capacity(count);
    // running Σ_{j<=i} ln(X_j / ref); H_i = that/i - ln(X_{i+1}/ref)
    let mut acc = 0.0;
    for i in 1..=count {
        acc += (sample.order_stat(i) / reference).ln();
        let next = sample.order_stat(i + 1) / reference;
        let h = acc / i as f64 - next.ln();
        out.push(next * h);
    }
    out
}

/// Adapted Hill estimator: Hill's formula applied to the `UH_i` statistics,
/// `(1/k) Σ_{i<=k} ln UH_i - ln UH_{k+1}`.
pub fn adapted_hill(sample: &TailSample, k: usize) -> Result<f64> {
    positive_k(k, "adapted hill")?;
    sample.require(k + 2, "adapted hill")?;
    let uh = scaled_uh(sample, k + 1);
    if let Some(i) = uh.iter().position(|&u| u.is_nan() || u <= 0.0) {
        return Err(Error::DegenerateSample(format!(
            "adapted hill: UH_{} = {} is not positive",
            i + 1,
            uh[i]
        )));
    }
    let last = uh[k];
    let sum: f64 = uh[..k].iter().map(|&u| (u / last).ln()).sum();
    finite(sum / k as f64, "adapted hill")
}

/// j-th log-spacing moment `M_j = (1/k) Σ_{i<=k} (ln X_{i} - ln X_{k+1})^j`.
pub fn log_moment(sample: &TailSample, k: usize, j: u32) -> Result<f64> {
    positive_k(k, "log moment")?;
    sample.require(k + 1, "log moment")?;
    let sum: f64 = (1..=k)
        .map(|i| sample.log_spacing(i, k + 1).powi(j as i32))
        .sum();
    Ok(sum / k as f64)
}

/// `(M_1, M_2, 1 - M_1²/M_2)`. The last term is formed as `Var/M_2` from a
/// centered variance, which avoids cancellation when the spacings are close.
fn moment_terms(sample: &TailSample, k: usize, what: &str) -> Result<(f64, f64, f64)> {
    let m1 = log_moment(sample, k, 1)?;
    let m2 = log_moment(sample, k, 2)?;
    if m2 == 0.0 {
        return Err(Error::DegenerateSample(format!("{what}: M_2 = 0")));
    }
    let var = (1..=k)
        .map(|i| (sample.log_spacing(i, k + 1) - m1).powi(2))
        .sum::<f64>()
        / k as f64;
    if var == 0.0 {
        return Err(Error::DegenerateSample(format!("{what}: M_1^2 = M_2")));
    }
    Ok((m1, m2, var / m2))
}

/// Moment estimator: `M_1 + 1 - (1/2)(1 - M_1²/M_2)^{-1}`.
pub fn moment_estimator(sample: &TailSample, k: usize) -> Result<f64> {
    let (m1, _, shrink) = moment_terms(sample, k, "moment")?;
    finite(m1 + 1.0 - 0.5 / shrink, "moment")
}

/// Peng's estimator: `M_2/(2 M_1) + 1 - (1/2)(1 - M_1²/M_2)^{-1}`.
pub fn peng_estimator(sample: &TailSample, k: usize) -> Result<f64> {
    let (m1, m2, shrink) = moment_terms(sample, k, "peng")?;
    if m1 == 0.0 {
        return Err(Error::DegenerateSample("peng: M_1 = 0".into()));
    }
    finite(m2 / (2.0 * m1) + 1.0 - 0.5 / shrink, "peng")
}

/// QQ estimator: the negated least-squares slope of `ln X_{i}` against
/// `ln(i/(k+1))` over the top `k` order statistics.
pub fn qq_estimator(sample: &TailSample, k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::InsufficientSample(format!(
            "qq needs k >= 2, got {k}"
        )));
    }
    sample.require(k, "qq")?;
    let kf = k as f64;
    let plot: Vec<f64> = (1..=k).map(|i| (i as f64 / (kf + 1.0)).ln()).collect();
    // logs relative to X_{k}; the braces Σ_j ln X_j - k ln X_i are unchanged
    let logs: Vec<f64> = (1..=k).map(|i| sample.log_spacing(i, k)).collect();
    let log_sum: f64 = logs.iter().sum();
    let numer: f64 = plot
        .iter()
        .zip(&logs)
        .map(|(u, l)| u * (log_sum - kf * l))
        .sum();
    let plot_sum: f64 = plot.iter().sum();
    let plot_sq: f64 = plot.iter().map(|u| u * u).sum();
    let denom = kf * plot_sq - plot_sum * plot_sum;
    finite(numer / denom, "qq")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TailMethod {
    Pickands,
    Hill,
    AdaptedHill,
    Moment,
    Qq,
    Peng,
}

impl TailMethod {
    pub const ALL: [TailMethod; 6] = [
        TailMethod::Pickands,
        TailMethod::Hill,
        TailMethod::AdaptedHill,
        TailMethod::Moment,
        TailMethod::Qq,
        TailMethod::Peng,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TailMethod::Pickands => "pickands",
            TailMethod::Hill => "hill",
            TailMethod::AdaptedHill => "adapted-hill",
            TailMethod::Moment => "moment",
            TailMethod::Qq => "qq",
            TailMethod::Peng => "peng",
        }
    }

    /// Runs the estimator with order count `k` (the spacing `M` for Pickands).
    pub fn estimate(self, sample: &TailSample, k: usize) -> Result<f64> {
        match self {
            TailMethod::Pickands => pickands(sample, k),
            TailMethod::Hill => hill(sample, k),
            TailMethod::AdaptedHill => adapted_hill(sample, k),
            TailMethod::Moment => moment_estimator(sample, k),
            TailMethod::Qq => qq_estimator(sample, k),
            TailMethod::Peng => peng_estimator(sample, k),
        }
    }
}

impl fmt::Display for TailMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TailMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TailMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown estimator `{s}`")))
    }
}

/// Which vocabulary column becomes the tail sample.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum InputMode {
    /// Word occurrence counts.
    #[default]
    Counts,
    /// Ranks `1..=V`.
    Ranks,
}

impl InputMode {
    pub fn name(self) -> &'static str {
        match self {
            InputMode::Counts => "counts",
            InputMode::Ranks => "ranks",
        }
    }
}

impl fmt::Display for InputMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InputMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "counts" => Ok(InputMode::Counts),
            "ranks" => Ok(InputMode::Ranks),
            _ => Err(Error::InvalidParameter(format!("unknown input mode `{s}`"))),
        }
    }
}

/// Result of one estimator run. `k` is the spacing `M` for Pickands.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailEstimate {
    pub method: TailMethod,
    pub n: usize,
    pub k: usize,
    pub p: f64,
}

impl fmt::Display for TailEstimate {
    /// `method k n p`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {}", self.method, self.k, self.n, self.p)
    }
}

impl FromStr for TailEstimate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let fields: Vec<&str> = s.split_whitespace().collect();
        let [method, k, n, p] = fields[..] else {
            return Err(Error::parse(1, "expected `method k n p`"));
        };
        let num = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| Error::parse(1, format!("bad integer `{v}`")))
        };
        Ok(TailEstimate {
            method: method.parse()?,
            k: num(k)?,
            n: num(n)?,
            p: p.parse()
                .map_err(|_| Error::parse(1, format!("bad exponent `{p}`")))?,
        })
    }
}

/// Order count used for a vocabulary of `v` words: `max(2, floor(fraction·v))`,
/// reduced to `max(1, floor(k/4))` for Pickands.
pub fn order_count(method: TailMethod, v: usize, k_fraction: f64) -> usize {
    let k = ((k_fraction * v as f64).floor() as usize).max(2);
    match method {
        TailMethod::Pickands => (k / 4).max(1),
        _ => k,
    }
}

/// Builds the tail sample from `vocab` and runs `method` on it.
pub fn estimate_alpha(
    vocab: &VocabTable,
    method: TailMethod,
    k_fraction: f64,
    mode: InputMode,
) -> Result<TailEstimate> {
    if vocab.is_empty() {
        return Err(Error::EmptyVocab);
    }
    if !(k_fraction > 0.0 && k_fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "k fraction must lie in (0, 1], got {k_fraction}"
        )));
    }
    let values: Vec<f64> = match mode {
        InputMode::Counts => vocab.counts().map(|c| c as f64).collect(),
        InputMode::Ranks => (1..=vocab.len()).map(|r| r as f64).collect(),
    };
    let sample = TailSample::new(values)?;
    let k = order_count(method, sample.len(), k_fraction);
    let p = method.estimate(&sample, k)?;
    Ok(TailEstimate {
        method,
        n: sample.len(),
        k,
        p,
    })
}
