//! k-hop aggregation layer: per-root updates over ring decompositions.
//!
//! The functions here follow the per-root procedure literally and serve as
//! the reference for the compiled engine in [`crate::plan`].

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{ring_decompose, Graph};
use crate::nn::{Matrix, Mlp, ParamStore};
use crate::{Error, Result, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateKind {
    Across,
    Within,
}

/// Index of an UPDATE module inside a layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModuleKey {
    pub level: usize,
    pub kind: UpdateKind,
}

impl ModuleKey {
    pub fn across(level: usize) -> Self {
        Self { level, kind: UpdateKind::Across }
    }

    pub fn within(level: usize) -> Self {
        Self { level, kind: UpdateKind::Within }
    }
}

impl std::fmt::Display for ModuleKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.kind {
            UpdateKind::Across => "across",
            UpdateKind::Within => "within",
        };
        write!(f, "{}.{kind}", self.level)
    }
}

/// `UPDATE(w, S) = outer(self(x_w) + sum_{u in S} nbr(x_u))`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateModule {
    pub outer: Mlp,
    pub self_mlp: Mlp,
    pub nbr: Mlp,
}

impl UpdateModule {
    pub fn new<T: Scalar, R: Rng + ?Sized>(store: &mut ParamStore<T>, name: &str, hidden: usize, rng: &mut R) -> Self {
        Self {
            self_mlp: Mlp::two_layer(store, &format!("{name}.self"), hidden, hidden, hidden, rng),
            nbr: Mlp::two_layer(store, &format!("{name}.nbr"), hidden, hidden, hidden, rng),
            outer: Mlp::two_layer(store, &format!("{name}.outer"), hidden, hidden, hidden, rng),
        }
    }
}

/// One k-hop aggregation layer with its 2k UPDATE modules.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KHopLayer {
    pub k: usize,
    pub hidden: usize,
    pub modules: Vec<(ModuleKey, UpdateModule)>,
}

impl KHopLayer {
    pub fn new<T: Scalar, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        name: &str,
        k: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::ZeroRadius);
        }
        let modules = Self::stage_order(k)
            .into_iter()
            .map(|key| (key, UpdateModule::new(store, &format!("{name}.{key}"), hidden, rng)))
            .collect();
        Ok(Self { k, hidden, modules })
    }

    /// Modules in execution order: `(k, within)`, then `(i, across)`,
    /// `(i, within)` for `i = k-1 ..= 1`, then `(0, across)`.
    pub fn stage_order(k: usize) -> Vec<ModuleKey> {
        let mut order = vec![ModuleKey::within(k)];
        for i in (1..k).rev() {
            order.push(ModuleKey::across(i));
            order.push(ModuleKey::within(i));
        }
        order.push(ModuleKey::across(0));
        order
    }

    pub fn module(&self, key: ModuleKey) -> Option<&UpdateModule> {
        self.modules.iter().find(|(k, _)| *k == key).map(|(_, m)| m)
    }
}

/// Inner representations for a single root's neighborhood.
#[derive(Clone, Debug, Default)]
pub struct InnerState<T> {
    pub x: HashMap<usize, Vec<T>>,
}

/// Applies one UPDATE module to `x_w` and the multiset `s`.
pub fn update_module_apply<T: Scalar>(m: &UpdateModule, store: &ParamStore<T>, xw: &[T], s: &[&[T]]) -> Result<Vec<T>> {
    let mut z = m.self_mlp.apply_vec(store, xw)?;
    for x in s {
        let t = m.nbr.apply_vec(store, x)?;
        for (a, b) in z.iter_mut().zip(t) {
            *a = *a + b;
        }
    }
    m.outer.apply_vec(store, &z)
}

/// The new representation of root `v` computed from pre-layer features `h`.
pub fn khop_root_update<T: Scalar>(
    layer: &KHopLayer,
    store: &ParamStore<T>,
    g: &Graph<T>,
    h: &Matrix<T>,
    v: usize,
) -> Result<Vec<T>> {
    if h.rows() != g.n() {
        return Err(Error::Shape(format!("{} feature rows for {} nodes", h.rows(), g.n())));
    }
    let rd = ring_decompose(g, v, layer.k)?;
    let mut state = InnerState { x: rd.members().iter().map(|m| (m.node, h.row(m.node).to_vec())).collect() };
    let module = |key| layer.module(key).ok_or_else(|| Error::Config(format!("missing module {key}")));

    let within = |state: &mut InnerState<T>, level: usize| -> Result<()> {
        let m = module(ModuleKey::within(level))?;
        let mut fresh = Vec::new();
        for mem in rd.level_members(level) {
            if mem.within.is_empty() {
                continue;
            }
            let s: Vec<&[T]> = mem.within.iter().map(|u| state.x[u].as_slice()).collect();
            fresh.push((mem.node, update_module_apply(m, store, &state.x[&mem.node], &s)?));
        }
        // synchronous: every update above read the same snapshot
        for (u, x) in fresh {
            state.x.insert(u, x);
        }
        Ok(())
    };

    within(&mut state, layer.k)?;
    for i in (1..layer.k).rev() {
        let m = module(ModuleKey::across(i))?;
        for mem in rd.level_members(i) {
            if mem.across.is_empty() {
                continue;
            }
            let s: Vec<&[T]> = mem.across.iter().map(|u| state.x[u].as_slice()).collect();
            let x = update_module_apply(m, store, &state.x[&mem.node], &s)?;
            state.x.insert(mem.node, x);
        }
        within(&mut state, i)?;
    }
    let root = rd.member(v).expect("root is a member");
    let s: Vec<&[T]> = root.across.iter().map(|u| state.x[u].as_slice()).collect();
    update_module_apply(module(ModuleKey::across(0))?, store, &state.x[&v], &s)
}

/// Layer output for every node (before batch normalization), roots in
/// ascending order.
pub fn khop_layer_forward<T: Scalar>(layer: &KHopLayer, store: &ParamStore<T>, g: &Graph<T>, h: &Matrix<T>) -> Result<Matrix<T>> {
    let order: Vec<usize> = (0..g.n()).collect();
    khop_layer_forward_in_order(layer, store, g, h, &order)
}

/// As [`khop_layer_forward`] but visiting roots in the given order.
pub fn khop_layer_forward_in_order<T: Scalar>(
    layer: &KHopLayer,
    store: &ParamStore<T>,
    g: &Graph<T>,
    h: &Matrix<T>,
    order: &[usize],
) -> Result<Matrix<T>> {
    let mut out = Matrix::zeros(g.n(), layer.hidden);
    for &v in order {
        let row = khop_root_update(layer, store, g, h, v)?;
        out.row_mut(v).copy_from_slice(&row);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(k: usize) -> (ParamStore<f64>, KHopLayer) {
        let mut rng = ChaCha8Rng::seed_from_u64(k as u64 + 40);
        let mut store = ParamStore::new();
        let layer = KHopLayer::new(&mut store, "l", k, 3, &mut rng).unwrap();
        (store, layer)
    }

    #[test]
    fn module_index_set() {
        for k in 1..=4 {
            let keys = KHopLayer::stage_order(k);
            assert_eq!(keys.len(), 2 * k);
            assert!(keys.contains(&ModuleKey::across(0)));
            assert!(keys.contains(&ModuleKey::within(k)));
            assert!(!keys.contains(&ModuleKey::across(k)));
            assert!(!keys.contains(&ModuleKey::within(0)));
        }
        assert_eq!(
            KHopLayer::stage_order(2),
            vec![ModuleKey::within(2), ModuleKey::across(1), ModuleKey::within(1), ModuleKey::across(0)]
        );
    }

    #[test]
    fn empty_multiset_update() {
        let (store, layer) = setup(1);
        let m = layer.module(ModuleKey::across(0)).unwrap();
        let xw = [0.3, -0.2, 1.0];
        let expect = m.outer.apply_vec(&store, &m.self_mlp.apply_vec(&store, &xw).unwrap()).unwrap();
        assert_eq!(update_module_apply(m, &store, &xw, &[]).unwrap(), expect);
    }

    #[test]
    fn update_ignores_multiset_order() {
        let (store, layer) = setup(1);
        let m = layer.module(ModuleKey::within(1)).unwrap();
        let (a, b, c) = ([1.0, 0.0, 2.0], [-0.5, 0.5, 0.1], [0.0, 3.0, -1.0]);
        let x = [0.2, 0.2, 0.2];
        let p = update_module_apply(m, &store, &x, &[&a, &b, &c]).unwrap();
        let q = update_module_apply(m, &store, &x, &[&c, &a, &b]).unwrap();
        for (u, v) in p.iter().zip(&q) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn five_node_trace() {
        // v1..v5 as 0..4
        let (store, layer) = setup(2);
        let g = Graph::<f64>::from_edges(5, &[(0, 1), (0, 2), (1, 2), (1, 3), (1, 4)]).unwrap();
        let h = Matrix::from_rows(&[
            vec![0.1, 0.2, 0.3],
            vec![-1.0, 0.5, 0.0],
            vec![0.7, 0.7, -0.4],
            vec![1.5, -0.3, 0.2],
            vec![0.0, 0.9, 1.1],
        ]);
        let m = |key| layer.module(key).unwrap();
        let up = |key, w: &[f64], s: &[&[f64]]| update_module_apply(m(key), &store, w, s).unwrap();
        let x2 = up(ModuleKey::across(1), h.row(1), &[h.row(3), h.row(4)]);
        let x3 = h.row(2).to_vec();
        let x2w = up(ModuleKey::within(1), &x2, &[&x3]);
        let x3w = up(ModuleKey::within(1), &x3, &[&x2]);
        let hv = up(ModuleKey::across(0), h.row(0), &[&x2w, &x3w]);
        assert_eq!(khop_root_update(&layer, &store, &g, &h, 0).unwrap(), hv);
    }

    #[test]
    fn isolated_root() {
        let (store, layer) = setup(2);
        let g = Graph::<f64>::from_edges(1, &[]).unwrap();
        let h = Matrix::from_rows(&[vec![0.4, -0.1, 0.8]]);
        let m = layer.module(ModuleKey::across(0)).unwrap();
        let expect = m.outer.apply_vec(&store, &m.self_mlp.apply_vec(&store, h.row(0)).unwrap()).unwrap();
        assert_eq!(khop_root_update(&layer, &store, &g, &h, 0).unwrap(), expect);
    }

    #[test]
    fn star_root_reads_untransformed_leaves() {
        let (store, layer) = setup(2);
        let g = crate::graph::star(4);
        let h = Matrix::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![1.0, 1.0, 0.0],
            vec![0.5, 0.5, 0.5],
        ]);
        let leaves: Vec<&[f64]> = (1..5).map(|i| h.row(i)).collect();
        let expect = update_module_apply(layer.module(ModuleKey::across(0)).unwrap(), &store, h.row(0), &leaves).unwrap();
        assert_eq!(khop_root_update(&layer, &store, &g.with_features(h.clone()).unwrap(), &h, 0).unwrap(), expect);
    }

    #[test]
    fn root_order_does_not_matter() {
        let (store, layer) = setup(3);
        let g = crate::graph::triangular_prism();
        let h = Matrix::from_vec(6, 3, (0..18).map(|i| (i as f64 * 0.37).sin()).collect());
        let a = khop_layer_forward(&layer, &store, &g, &h).unwrap();
        let b = khop_layer_forward_in_order(&layer, &store, &g, &h, &[4, 1, 5, 0, 3, 2]).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
    }
}
