//! Batch normalization over node rows.

use super::{Matrix, ParamId, ParamStore, Tape, Var};
use crate::{Result, Scalar};

pub const BN_MOMENTUM: f64 = 0.1;
pub const BN_EPS: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct BatchNorm {
    pub gamma: ParamId,
    pub beta: ParamId,
    pub running_mean: ParamId,
    pub running_var: ParamId,
    pub dim: usize,
}

impl BatchNorm {
    pub fn new<T: Scalar>(store: &mut ParamStore<T>, name: &str, dim: usize) -> Self {
        Self {
            gamma: store.add(format!("{name}.gamma"), Matrix::filled(1, dim, T::one())),
            beta: store.add(format!("{name}.beta"), Matrix::zeros(1, dim)),
            running_mean: store.add_buffer(format!("{name}.running_mean"), Matrix::zeros(1, dim)),
            running_var: store.add_buffer(format!("{name}.running_var"), Matrix::filled(1, dim, T::one())),
            dim,
        }
    }

    /// Normalizes with batch statistics. `weights` gives each row's
    /// multiplicity when rows stand for several identical nodes. The running
    /// statistics update is queued on the tape.
    pub fn forward_train<T: Scalar>(
        &self,
        tape: &mut Tape<T>,
        store: &ParamStore<T>,
        x: Var,
        weights: Option<Vec<T>>,
    ) -> Result<Var> {
        let total = match &weights {
            Some(w) => w.iter().copied().sum(),
            None => T::from_usize(tape.shape(x).0).unwrap(),
        };
        let g = tape.param(store, self.gamma);
        let b = tape.param(store, self.beta);
        let eps = T::from_f64_lossy(BN_EPS);
        let (out, mean, var) = tape.batch_norm_train(x, g, b, weights, eps)?;
        let mom = T::from_f64_lossy(BN_MOMENTUM);
        let keep = T::one() - mom;
        let correction = if total > T::one() { total / (total - T::one()) } else { T::one() };
        let rm = store.value(self.running_mean);
        let rv = store.value(self.running_var);
        let new_mean: Vec<T> = rm.row(0).iter().zip(&mean).map(|(&r, &m)| keep * r + mom * m).collect();
        let new_var: Vec<T> = rv.row(0).iter().zip(&var).map(|(&r, &v)| keep * r + mom * v * correction).collect();
        tape.record_buffer_update(self.running_mean, Matrix::row_vector(&new_mean));
        tape.record_buffer_update(self.running_var, Matrix::row_vector(&new_var));
        Ok(out)
    }

    /// Normalizes with the running statistics.
    pub fn forward_eval<T: Scalar>(&self, tape: &mut Tape<T>, store: &ParamStore<T>, x: Var) -> Result<Var> {
        let g = tape.param(store, self.gamma);
        let b = tape.param(store, self.beta);
        let mean = store.value(self.running_mean).row(0).to_vec();
        let var = store.value(self.running_var).row(0).to_vec();
        tape.batch_norm_eval(x, g, b, &mean, &var, T::from_f64_lossy(BN_EPS))
    }

    /// Untaped inference-mode evaluation.
    pub fn apply_eval<T: Scalar>(&self, store: &ParamStore<T>, x: &Matrix<T>) -> Matrix<T> {
        let eps = T::from_f64_lossy(BN_EPS);
        let (g, b) = (store.value(self.gamma), store.value(self.beta));
        let (m, v) = (store.value(self.running_mean), store.value(self.running_var));
        let mut out = x.clone();
        for i in 0..out.rows() {
            for (j, o) in out.row_mut(i).iter_mut().enumerate() {
                *o = (*o - m[(0, j)]) / (v[(0, j)] + eps).sqrt() * g[(0, j)] + b[(0, j)];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighted_rows_match_expanded_batch() {
        let mut store = ParamStore::<f64>::new();
        let bn = BatchNorm::new(&mut store, "bn", 2);
        *store.value_mut(bn.gamma) = Matrix::from_rows(&[vec![1.5, -0.5]]);
        let unique = Matrix::from_rows(&[vec![1.0, 2.0], vec![-1.0, 0.5], vec![3.0, 3.0]]);
        let w = vec![2.0, 1.0, 3.0];
        let expanded_idx = vec![0, 0, 1, 2, 2, 2];

        let mut t1 = Tape::new();
        let x1 = t1.leaf(unique.clone());
        let y1 = bn.forward_train(&mut t1, &store, x1, Some(w)).unwrap();
        let mut t2 = Tape::new();
        let x2 = t2.leaf(unique.clone());
        let g2 = t2.gather(x2, expanded_idx.clone()).unwrap();
        let y2 = bn.forward_train(&mut t2, &store, g2, None).unwrap();
        for (r, &u) in expanded_idx.iter().enumerate() {
            for j in 0..2 {
                assert!((t1.value(y1)[(u, j)] - t2.value(y2)[(r, j)]).abs() < 1e-12);
            }
        }
        // gradients through the weighted path must equal the expanded ones
        let up = Matrix::from_rows(&[vec![0.3, -1.0], vec![2.0, 0.1], vec![-0.7, 0.4]]);
        let mut up_exp = Matrix::zeros(6, 2);
        for (r, &u) in expanded_idx.iter().enumerate() {
            let c = [2.0, 1.0, 3.0][u];
            for j in 0..2 {
                up_exp[(r, j)] = up[(u, j)] / c;
            }
        }
        let b1 = t1.backward(y1, &up).unwrap();
        let b2 = t2.backward(y2, &up_exp).unwrap();
        assert!(b1.wrt(x1).unwrap().max_abs_diff(b2.wrt(x2).unwrap()) < 1e-12);
        assert!(b1.params.get(bn.gamma).unwrap().max_abs_diff(b2.params.get(bn.gamma).unwrap()) < 1e-12);
        // same running statistics
        let u1 = t1.take_buffer_updates();
        let u2 = t2.take_buffer_updates();
        for (a, b) in u1.iter().zip(&u2) {
            assert!(a.1.max_abs_diff(&b.1) < 1e-12);
        }
    }

    #[test]
    fn eval_paths_agree() {
        let mut store = ParamStore::<f64>::new();
        let bn = BatchNorm::new(&mut store, "bn", 1);
        *store.value_mut(bn.running_mean) = Matrix::from_rows(&[vec![0.5]]);
        *store.value_mut(bn.running_var) = Matrix::from_rows(&[vec![4.0]]);
        let x = Matrix::from_rows(&[vec![2.5], vec![0.5]]);
        let mut tape = Tape::new();
        let xv = tape.leaf(x.clone());
        let y = bn.forward_eval(&mut tape, &store, xv).unwrap();
        assert!(tape.value(y).max_abs_diff(&bn.apply_eval(&store, &x)) < 1e-15);
        assert!((tape.value(y)[(0, 0)] - 2.0 / (4.0f64 + 1e-5).sqrt()).abs() < 1e-12);
    }
}
