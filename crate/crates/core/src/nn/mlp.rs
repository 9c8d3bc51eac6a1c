//! Fully connected layers.

use rand::Rng;

use super::{Matrix, ParamId, ParamStore, Tape, Var};
use crate::{Error, Result, Scalar};

/// Affine map `x W^T + b` with `W: out x in`.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Dense {
    pub weight: ParamId,
    pub bias: ParamId,
    pub input: usize,
    pub output: usize,
}

impl Dense {
    pub fn new<T: Scalar, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        name: &str,
        input: usize,
        output: usize,
        rng: &mut R,
    ) -> Self {
        let weight = store.add_glorot(format!("{name}.weight"), output, input, rng);
        let bias = store.add(format!("{name}.bias"), Matrix::zeros(1, output));
        Self { weight, bias, input, output }
    }

    pub fn forward<T: Scalar>(&self, tape: &mut Tape<T>, store: &ParamStore<T>, x: Var) -> Result<Var> {
        let w = tape.param(store, self.weight);
        let b = tape.param(store, self.bias);
        tape.linear(x, w, b)
    }

    /// Untaped evaluation.
    pub fn apply<T: Scalar>(&self, store: &ParamStore<T>, x: &Matrix<T>) -> Result<Matrix<T>> {
        if x.cols() != self.input {
            return Err(Error::Shape(format!("dense expects {} inputs, got {}", self.input, x.cols())));
        }
        let mut out = x.matmul_t(store.value(self.weight));
        let b = store.value(self.bias);
        for i in 0..out.rows() {
            for (o, &bv) in out.row_mut(i).iter_mut().zip(b.row(0)) {
                *o = *o + bv;
            }
        }
        Ok(out)
    }
}

/// Stack of dense layers with ReLU between consecutive layers and no
/// activation on the output.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

impl Mlp {
    /// `dims = [in, h1, ..., out]`.
    pub fn new<T: Scalar, R: Rng + ?Sized>(store: &mut ParamStore<T>, name: &str, dims: &[usize], rng: &mut R) -> Self {
        assert!(dims.len() >= 2, "an MLP needs at least one layer");
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, d)| Dense::new(store, &format!("{name}.{i}"), d[0], d[1], rng))
            .collect();
        Self { layers }
    }

    /// The usual two-layer `in -> hidden -> out` block.
    pub fn two_layer<T: Scalar, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        name: &str,
        input: usize,
        hidden: usize,
        output: usize,
        rng: &mut R,
    ) -> Self {
        Self::new(store, name, &[input, hidden, output], rng)
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().output
    }

    pub fn forward<T: Scalar>(&self, tape: &mut Tape<T>, store: &ParamStore<T>, x: Var) -> Result<Var> {
        let mut h = x;
        for (i, layer) in self.layers.iter().enumerate() {
            if i > 0 {
                h = tape.relu(h);
            }
            h = layer.forward(tape, store, h)?;
        }
        Ok(h)
    }

    pub fn apply<T: Scalar>(&self, store: &ParamStore<T>, x: &Matrix<T>) -> Result<Matrix<T>> {
        let mut h = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            if i > 0 {
                h = h.map(T::relu);
            }
            h = layer.apply(store, &h)?;
        }
        Ok(h)
    }

    /// Single-vector evaluation.
    pub fn apply_vec<T: Scalar>(&self, store: &ParamStore<T>, x: &[T]) -> Result<Vec<T>> {
        Ok(self.apply(store, &Matrix::row_vector(x))?.into_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn taped_and_untaped_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut store = ParamStore::<f64>::new();
        let mlp = Mlp::two_layer(&mut store, "m", 3, 5, 2, &mut rng);
        let x = Matrix::from_rows(&[vec![0.3, -1.0, 2.0], vec![1.0, 1.0, 1.0]]);
        let mut tape = Tape::new();
        let xv = tape.leaf(x.clone());
        let y = mlp.forward(&mut tape, &store, xv).unwrap();
        assert!(tape.value(y).max_abs_diff(&mlp.apply(&store, &x).unwrap()) < 1e-15);
        assert_eq!(mlp.apply_vec(&store, x.row(1)).unwrap(), mlp.apply(&store, &x).unwrap().row(1));
    }

    #[test]
    fn rejects_wrong_width() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut store = ParamStore::<f64>::new();
        let mlp = Mlp::two_layer(&mut store, "m", 3, 4, 2, &mut rng);
        assert!(mlp.apply(&store, &Matrix::zeros(1, 2)).is_err());
    }
}
