use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub macro_f1: f64,
}

pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check(pred, truth)?;
    let correct = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(correct as f64 / truth.len() as f64)
}

/// Unweighted mean of per-class F1. Classes that occur in neither the
/// predictions nor the truth are left out of the mean.
pub fn macro_f1(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check(pred, truth)?;
    let classes = pred.iter().chain(truth).max().map_or(0, |&c| c + 1);
    let mut tp = vec![0usize; classes];
    let mut fp = vec![0usize; classes];
    let mut fn_ = vec![0usize; classes];
    for (&p, &t) in pred.iter().zip(truth) {
        if p == t {
            tp[p] += 1;
        } else {
            fp[p] += 1;
            fn_[t] += 1;
        }
    }
    let mut sum = 0.0;
    let mut counted = 0;
    for c in 0..classes {
        if tp[c] + fp[c] + fn_[c] == 0 {
            continue;
        }
        counted += 1;
        sum += 2.0 * tp[c] as f64 / (2 * tp[c] + fp[c] + fn_[c]) as f64;
    }
    Ok(sum / counted as f64)
}

pub fn metrics(pred: &[usize], truth: &[usize]) -> Result<Metrics> {
    Ok(Metrics { accuracy: accuracy(pred, truth)?, macro_f1: macro_f1(pred, truth)? })
}

fn check(pred: &[usize], truth: &[usize]) -> Result<()> {
    if truth.is_empty() {
        return Err(Error::Empty("no samples to evaluate".into()));
    }
    if pred.len() != truth.len() {
        return Err(Error::Shape(format!("{} predictions for {} labels", pred.len(), truth.len())));
    }
    Ok(())
}
