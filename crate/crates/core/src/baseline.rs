//! Message-passing baseline: mean-of-neighbors aggregation merged with the
//! node's own state.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::graph::Graph;
use crate::nn::{Matrix, Mlp, ParamStore};
use crate::{Error, Result, Scalar};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GnnVariant {
    /// `a_v = mean_u mlp1(h_u)`, `h_v' = mlp2(h_v + a_v)`.
    #[default]
    MeanMerge,
    /// `h_v' = 1/(|N(v)|+1) * sum over N(v) ∪ {v} of mlp(h_u)`.
    Integrated,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GnnLayer {
    MeanMerge { mlp1: Mlp, mlp2: Mlp },
    Integrated { mlp: Mlp },
}

impl GnnLayer {
    pub fn new<T: Scalar, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        name: &str,
        variant: GnnVariant,
        hidden: usize,
        rng: &mut R,
    ) -> Self {
        match variant {
            GnnVariant::MeanMerge => GnnLayer::MeanMerge {
                mlp1: Mlp::two_layer(store, &format!("{name}.mlp1"), hidden, hidden, hidden, rng),
                mlp2: Mlp::two_layer(store, &format!("{name}.mlp2"), hidden, hidden, hidden, rng),
            },
            GnnVariant::Integrated => {
                GnnLayer::Integrated { mlp: Mlp::two_layer(store, &format!("{name}.mlp"), hidden, hidden, hidden, rng) }
            }
        }
    }

    pub fn variant(&self) -> GnnVariant {
        match self {
            GnnLayer::MeanMerge { .. } => GnnVariant::MeanMerge,
            GnnLayer::Integrated { .. } => GnnVariant::Integrated,
        }
    }
}

/// One layer over every node (before batch normalization). Isolated nodes
/// aggregate to zero.
pub fn gnn_layer_forward<T: Scalar>(layer: &GnnLayer, store: &ParamStore<T>, g: &Graph<T>, h: &Matrix<T>) -> Result<Matrix<T>> {
    if h.rows() != g.n() {
        return Err(Error::Shape(format!("{} feature rows for {} nodes", h.rows(), g.n())));
    }
    if g.n() == 0 {
        return Ok(Matrix::zeros(0, h.cols()));
    }
    let mut out = Vec::with_capacity(g.n());
    match layer {
        GnnLayer::MeanMerge { mlp1, mlp2 } => {
            let m1 = mlp1.apply(store, h)?;
            for v in 0..g.n() {
                let mut z = h.row(v).to_vec();
                let deg = T::from_usize(g.degree(v)).unwrap();
                for &u in g.neighbors(v) {
                    for (a, &b) in z.iter_mut().zip(m1.row(u)) {
                        *a = *a + b / deg;
                    }
                }
                out.push(z);
            }
            mlp2.apply(store, &Matrix::from_rows(&out))
        }
        GnnLayer::Integrated { mlp } => {
            let m = mlp.apply(store, h)?;
            for v in 0..g.n() {
                let scale = T::from_usize(g.degree(v) + 1).unwrap();
                let mut z: Vec<T> = m.row(v).iter().map(|&x| x / scale).collect();
                for &u in g.neighbors(v) {
                    for (a, &b) in z.iter_mut().zip(m.row(u)) {
                        *a = *a + b / scale;
                    }
                }
                out.push(z);
            }
            Ok(Matrix::from_rows(&out))
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Readout {
    #[default]
    Sum,
    Mean,
}

/// Column-wise sum or mean of node rows.
pub fn readout<T: Scalar>(h: &Matrix<T>, mode: Readout) -> Result<Vec<T>> {
    if h.rows() == 0 {
        return Err(Error::Empty("readout over a graph with no nodes".into()));
    }
    let sums = h.column_sums();
    Ok(match mode {
        Readout::Sum => sums,
        Readout::Mean => {
            let n = T::from_usize(h.rows()).unwrap();
            sums.into_iter().map(|s| s / n).collect()
        }
    })
}
