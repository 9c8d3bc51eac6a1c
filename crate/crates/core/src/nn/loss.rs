//! Classification loss and prediction helpers outside the tape.

use super::Matrix;
use crate::{Error, Result, Scalar};

/// Mean softmax cross-entropy and its gradient with respect to the logits.
pub fn softmax_cross_entropy<T: Scalar>(logits: &Matrix<T>, labels: &[usize]) -> Result<(T, Matrix<T>)> {
    if labels.len() != logits.rows() {
        return Err(Error::Shape(format!("{} labels for {} rows", labels.len(), logits.rows())));
    }
    if labels.is_empty() {
        return Err(Error::Empty("cross-entropy over zero rows".into()));
    }
    let n = T::from_usize(labels.len()).unwrap();
    let mut grad = Matrix::zeros(logits.rows(), logits.cols());
    let mut total = T::zero();
    for (i, &y) in labels.iter().enumerate() {
        let (loss, p) = super::tape::softmax_row(logits.row(i), y)?;
        total = total + loss;
        for (j, pj) in p.into_iter().enumerate() {
            let t = if j == y { T::one() } else { T::zero() };
            grad[(i, j)] = (pj - t) / n;
        }
    }
    Ok((total / n, grad))
}

/// Row-wise argmax; ties go to the lowest index.
pub fn argmax_rows<T: Scalar>(m: &Matrix<T>) -> Vec<usize> {
    (0..m.rows())
        .map(|i| {
            let row = m.row(i);
            let mut best = 0;
            for j in 1..row.len() {
                if row[j] > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}
