//! Adam optimizer.

use super::{Gradients, Matrix, ParamStore};
use crate::{Error, Result, Scalar};

#[derive(Clone, Debug)]
pub struct Adam<T> {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Option<Matrix<T>>>,
    v: Vec<Option<Matrix<T>>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(lr: f64) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, step: 0, m: Vec::new(), v: Vec::new() }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One update of every trainable parameter that has a gradient.
    /// Non-finite gradients abort the step before anything is modified.
    pub fn step(&mut self, store: &mut ParamStore<T>, grads: &Gradients<T>) -> Result<()> {
        for (id, g) in grads.iter() {
            if !g.is_finite() {
                return Err(Error::NonFinite(format!("gradient of {}", store.name(id))));
            }
            if g.shape() != store.value(id).shape() {
                return Err(Error::Shape(format!("gradient shape for {}", store.name(id))));
            }
        }
        if self.m.len() < store.len() {
            self.m.resize(store.len(), None);
            self.v.resize(store.len(), None);
        }
        self.step += 1;
        let (b1, b2) = (T::from_f64_lossy(self.beta1), T::from_f64_lossy(self.beta2));
        let c1 = T::one() - b1.powi(self.step as i32);
        let c2 = T::one() - b2.powi(self.step as i32);
        let lr = T::from_f64_lossy(self.lr);
        let eps = T::from_f64_lossy(self.eps);
        for (id, g) in grads.iter() {
            if !store.is_trainable(id) {
                continue;
            }
            let i = id.index();
            let m = self.m[i].get_or_insert_with(|| Matrix::zeros(g.rows(), g.cols()));
            let v = self.v[i].get_or_insert_with(|| Matrix::zeros(g.rows(), g.cols()));
            let p = store.value_mut(id);
            for (((pv, mv), vv), &gv) in p
                .as_mut_slice()
                .iter_mut()
                .zip(m.as_mut_slice())
                .zip(v.as_mut_slice())
                .zip(g.as_slice())
            {
                *mv = b1 * *mv + (T::one() - b1) * gv;
                *vv = b2 * *vv + (T::one() - b2) * gv * gv;
                let mhat = *mv / c1;
                let vhat = *vv / c2;
                *pv = *pv - lr * mhat / (vhat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr() {
        let mut store = ParamStore::<f64>::new();
        let w = store.add("w", Matrix::from_rows(&[vec![1.0, -1.0]]));
        let mut g = Gradients::zeros_like(&store);
        g.accumulate(w, &Matrix::from_rows(&[vec![0.5, -3.0]]));
        let mut opt = Adam::new(0.1);
        opt.step(&mut store, &g).unwrap();
        let v = store.value(w);
        assert!((v[(0, 0)] - 0.9).abs() < 1e-6);
        assert!((v[(0, 1)] + 0.9).abs() < 1e-6);
    }

    #[test]
    fn minimizes_quadratic() {
        let mut store = ParamStore::<f64>::new();
        let w = store.add("w", Matrix::from_rows(&[vec![5.0]]));
        let mut opt = Adam::new(0.1);
        for _ in 0..500 {
            let mut g = Gradients::zeros_like(&store);
            let x = store.value(w)[(0, 0)];
            g.accumulate(w, &Matrix::from_rows(&[vec![2.0 * (x - 2.0)]]));
            opt.step(&mut store, &g).unwrap();
        }
        assert!((store.value(w)[(0, 0)] - 2.0).abs() < 1e-2);
    }

    #[test]
    fn non_finite_gradient_is_rejected() {
        let mut store = ParamStore::<f64>::new();
        let w = store.add("w", Matrix::from_rows(&[vec![1.0]]));
        let mut g = Gradients::zeros_like(&store);
        g.accumulate(w, &Matrix::from_rows(&[vec![f64::NAN]]));
        assert!(Adam::new(0.1).step(&mut store, &g).is_err());
        assert_eq!(store.value(w)[(0, 0)], 1.0);
    }

    #[test]
    fn buffers_are_not_stepped() {
        let mut store = ParamStore::<f64>::new();
        let b = store.add_buffer("b", Matrix::from_rows(&[vec![1.0]]));
        let mut g = Gradients::zeros_like(&store);
        g.accumulate(b, &Matrix::from_rows(&[vec![1.0]]));
        Adam::new(0.1).step(&mut store, &g).unwrap();
        assert_eq!(store.value(b)[(0, 0)], 1.0);
    }
}
