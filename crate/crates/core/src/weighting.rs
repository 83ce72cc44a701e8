//! Per-record loss weights.
//!
//! The classic scheme weights a record by its own co-occurrence mass,
//! `(x / x_max)^α` capped at 1. The extremal scheme ignores the mass and uses
//! the unigram counts of the two words instead,
//! `(X_i / max X)^α · (X_j / max X)^α`, with no cap since `X_i <= max X`.

use std::fmt;

use crate::cooccur::CoocRecord;
use crate::error::{Error, Result};
use crate::vocab::VocabTable;

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "weighting exponent must be positive and finite, got {alpha}"
        )))
    }
}

fn check_positive(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveInput(x))
    }
}

pub fn classic_weight(x: f64, x_max: f64, alpha: f64) -> Result<f64> {
    check_positive(x)?;
    if x < x_max {
        Ok((x / x_max).powf(alpha))
    } else {
        Ok(1.0)
    }
}

pub fn extremal_weight(x_i: f64, x_j: f64, max_count: f64, alpha: f64) -> Result<f64> {
    check_positive(x_i)?;
    check_positive(x_j)?;
    for x in [x_i, x_j] {
        if x > max_count {
            return Err(Error::OutOfRange {
                value: x,
                max: max_count,
            });
        }
    }
    Ok((x_i / max_count).powf(alpha) * (x_j / max_count).powf(alpha))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassicGlove {
    x_max: f64,
    alpha: f64,
}

impl ClassicGlove {
    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Product-Zipf weighting over unigram counts. Holds the per-word factor
/// `(X_i / max X)^α` so a record weight is one multiplication.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtremalProduct {
    alpha: f64,
    counts: Vec<f64>,
    max_count: f64,
    factors: Vec<f64>,
}

impl ExtremalProduct {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn max_count(&self) -> f64 {
        self.max_count
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum WeightingScheme {
    ClassicGlove(ClassicGlove),
    ExtremalProduct(ExtremalProduct),
}

impl WeightingScheme {
    pub fn classic(x_max: f64, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(x_max > 0.0 && x_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "x_max must be positive, got {x_max}"
            )));
        }
        Ok(WeightingScheme::ClassicGlove(ClassicGlove { x_max, alpha }))
    }

    /// Extremal weighting over `counts` (indexed like the vocabulary).
    pub fn extremal<I: IntoIterator<Item = u64>>(alpha: f64, counts: I) -> Result<Self> {
        check_alpha(alpha)?;
        let counts: Vec<f64> = counts.into_iter().map(|c| c as f64).collect();
        if let Some(&bad) = counts.iter().find(|&&c| c <= 0.0) {
            return Err(Error::NonPositiveInput(bad));
        }
        let max_count = counts.iter().copied().fold(0.0, f64::max);
        if counts.is_empty() {
            return Err(Error::EmptyVocab);
        }
        let factors = counts
            .iter()
            .map(|&c| (c / max_count).powf(alpha))
            .collect();
        Ok(WeightingScheme::ExtremalProduct(ExtremalProduct {
            alpha,
            counts,
            max_count,
            factors,
        }))
    }

    pub fn extremal_from_vocab(vocab: &VocabTable, alpha: f64) -> Result<Self> {
        Self::extremal(alpha, vocab.counts())
    }

    pub fn alpha(&self) -> f64 {
        match self {
            WeightingScheme::ClassicGlove(c) => c.alpha,
            WeightingScheme::ExtremalProduct(e) => e.alpha,
        }
    }

    /// Weight of one record under this scheme.
    pub fn record_weight(&self, record: &CoocRecord) -> Result<f64> {
        match self {
            WeightingScheme::ClassicGlove(c) => classic_weight(record.x, c.x_max, c.alpha),
            WeightingScheme::ExtremalProduct(e) => {
                let (i, j) = (record.i as usize, record.j as usize);
                match (e.factors.get(i), e.factors.get(j)) {
                    (Some(fi), Some(fj)) => Ok(fi * fj),
                    _ => Err(Error::SizeMismatch {
                        expected: e.factors.len(),
                        found: i.max(j) + 1,
                    }),
                }
            }
        }
    }
}

pub fn record_weight(scheme: &WeightingScheme, record: &CoocRecord) -> Result<f64> {
    scheme.record_weight(record)
}

impl fmt::Display for WeightingScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightingScheme::ClassicGlove(c) => {
                write!(f, "classic x_max={} alpha={}", c.x_max, c.alpha)
            }
            WeightingScheme::ExtremalProduct(e) => write!(
                f,
                "extremal alpha={} words={} max_count={}",
                e.alpha,
                e.counts.len(),
                e.max_count
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classic_values() {
        assert_eq!(classic_weight(100.0, 100.0, 0.75).unwrap(), 1.0);
        assert_eq!(classic_weight(250.0, 100.0, 0.75).unwrap(), 1.0);
        assert!((classic_weight(1.0, 100.0, 0.75).unwrap() - 10f64.powf(-1.5)).abs() < 1e-12);
        assert!(matches!(
            classic_weight(0.0, 100.0, 0.75),
            Err(Error::NonPositiveInput(_))
        ));
        assert!(matches!(
            classic_weight(-2.0, 100.0, 0.75),
            Err(Error::NonPositiveInput(_))
        ));
    }

    #[test]
    fn extremal_values() {
        assert_eq!(extremal_weight(7.0, 7.0, 7.0, 2.3).unwrap(), 1.0);
        assert!((extremal_weight(50.0, 50.0, 100.0, 0.375).unwrap() - 0.594604).abs() < 1e-6);
        assert!(matches!(
            extremal_weight(101.0, 5.0, 100.0, 1.0),
            Err(Error::OutOfRange { .. })
        ));
        assert!(matches!(
            extremal_weight(0.0, 5.0, 100.0, 1.0),
            Err(Error::NonPositiveInput(_))
        ));
    }

    #[test]
    fn scheme_record_weights() {
        let classic = WeightingScheme::classic(100.0, 0.75).unwrap();
        assert_eq!(
            classic
                .record_weight(&CoocRecord::new(0, 1, 100.0))
                .unwrap(),
            1.0
        );

        let ext = WeightingScheme::extremal(1.0, [3, 2, 1]).unwrap();
        let w = ext.record_weight(&CoocRecord::new(1, 2, 9.0)).unwrap();
        assert!((w - 2.0 / 9.0).abs() < 1e-15);
        assert_eq!(ext.record_weight(&CoocRecord::new(0, 0, 0.1)).unwrap(), 1.0);
        assert!(matches!(
            ext.record_weight(&CoocRecord::new(0, 3, 1.0)),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn extremal_weight_ignores_record_mass() {
        let ext = WeightingScheme::extremal(0.6, [40, 9, 3]).unwrap();
        let a = ext.record_weight(&CoocRecord::new(1, 2, 0.25)).unwrap();
        let b = ext.record_weight(&CoocRecord::new(1, 2, 1e6)).unwrap();
        assert_eq!(a, b);
        let direct = extremal_weight(9.0, 3.0, 40.0, 0.6).unwrap();
        assert_eq!(a, direct);
    }

    #[test]
    fn construction_rejects_bad_exponents() {
        for alpha in [0.0, -0.5, f64::NAN, f64::INFINITY] {
            assert!(WeightingScheme::classic(100.0, alpha).is_err());
            assert!(WeightingScheme::extremal(alpha, [3, 1]).is_err());
        }
        assert!(WeightingScheme::classic(0.0, 0.75).is_err());
        assert!(WeightingScheme::extremal(0.5, [3, 0]).is_err());
        assert!(matches!(
            WeightingScheme::extremal(0.5, std::iter::empty()),
            Err(Error::EmptyVocab)
        ));
    }

    #[test]
    fn max_count_is_recomputed() {
        let WeightingScheme::ExtremalProduct(e) =
            WeightingScheme::extremal(1.0, [2, 9, 4]).unwrap()
        else {
            unreachable!()
        };
        assert_eq!(e.max_count(), 9.0);
    }
}
