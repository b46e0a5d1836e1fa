//! Confusion-matrix metrics with an explicit undefined value.

use serde::{Deserialize, Serialize};
use std::fmt;

/// A ratio that may be undefined because its denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Ratio {
    Value(f64),
    Undefined(UndefinedTag),
}

/// Serialized as the string `"undefined"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UndefinedTag {
    Undefined,
}

impl Ratio {
    pub const UNDEFINED: Ratio = Ratio::Undefined(UndefinedTag::Undefined);

    pub fn of(num: u64, den: u64) -> Ratio {
        if den == 0 {
            Ratio::UNDEFINED
        } else {
            Ratio::Value(num as f64 / den as f64)
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Ratio::Value(v) => Some(v),
            Ratio::Undefined(_) => None,
        }
    }

    pub fn is_undefined(self) -> bool {
        self.value().is_none()
    }

    /// The value, with undefined ranked as 0 for comparisons.
    pub fn or_zero(self) -> f64 {
        self.value().unwrap_or(0.0)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ratio::Value(v) => write!(f, "{v:.6}"),
            Ratio::Undefined(_) => f.write_str("undefined"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub fpr: Ratio,
    pub fnr: Ratio,
    pub precision: Ratio,
    pub recall: Ratio,
    pub f1: Ratio,
}

impl Metrics {
    pub fn from_counts(tp: u64, fp: u64, tn: u64, fn_: u64) -> Metrics {
        let fpr = Ratio::of(fp, fp + tn);
        let fnr = Ratio::of(fn_, tp + fn_);
        // recall is defined through fnr so that recall = 1 - fnr holds exactly
        let recall = match fnr {
            Ratio::Value(v) => Ratio::Value(1.0 - v),
            u => u,
        };
        let precision = Ratio::of(tp, tp + fp);
        let f1 = match (precision, recall) {
            (Ratio::Value(p), Ratio::Value(r)) if p + r > 0.0 => Ratio::Value(2.0 * p * r / (p + r)),
            _ => Ratio::UNDEFINED,
        };
        Metrics {
            tp,
            fp,
            tn,
            fn_,
            fpr,
            fnr,
            precision,
            recall,
            f1,
        }
    }

    /// Counts from gold labels and positive-class probabilities at
    /// threshold 0.5.
    pub fn from_predictions(labels: &[u8], probs: &[f64]) -> Metrics {
        assert_eq!(labels.len(), probs.len());
        let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
        for (&y, &p) in labels.iter().zip(probs) {
            match (y == 1, p >= 0.5) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (false, false) => tn += 1,
                (true, false) => fn_ += 1,
            }
        }
        Metrics::from_counts(tp, fp, tn, fn_)
    }

    /// The five reported ratios, in table order.
    pub fn ratios(&self) -> [(&'static str, Ratio); 5] {
        [
            ("fpr", self.fpr),
            ("fnr", self.fnr),
            ("precision", self.precision),
            ("recall", self.recall),
            ("f1", self.f1),
        ]
    }
}

/// Median of `values`; the mean of the middle two for even lengths.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of nothing");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
