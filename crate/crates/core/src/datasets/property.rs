//! Balanced 4-regular graph datasets labeled by an exact property oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{disjoint_union, random_bipartite_regular, random_permutation, random_regular, Graph, GraphProperty};
use crate::{Error, Result};

pub const PROPERTY_NODES: usize = 60;
pub const PROPERTY_DEGREE: usize = 4;
pub const PER_CLASS: usize = 400;
const SAMPLE_BUDGET: usize = 2_000_000;

/// Graphs with label 1 when the property holds and 0 otherwise, satisfying
/// graphs first.
#[derive(Clone, Debug)]
pub struct PropertyDataset {
    pub property: GraphProperty,
    pub seed: u64,
    pub graphs: Vec<Graph<f64>>,
}

impl PropertyDataset {
    pub fn labels(&self) -> Vec<usize> {
        self.graphs.iter().map(|g| g.graph_label().expect("labeled")).collect()
    }
}

/// 400 satisfying and 400 violating 4-regular graphs on 60 nodes, with
/// constant node features.
pub fn gen_property_dataset(property: GraphProperty, seed: u64) -> Result<PropertyDataset> {
    gen_property_dataset_sized(property, seed, PER_CLASS)
}

/// As [`gen_property_dataset`] with `per_class` graphs of each label.
pub fn gen_property_dataset_sized(property: GraphProperty, seed: u64, per_class: usize) -> Result<PropertyDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graphs = Vec::with_capacity(2 * per_class);
    for satisfied in [true, false] {
        for _ in 0..per_class {
            let g = sample(property, satisfied, &mut rng)?;
            if property.holds(&g) != satisfied || g.regular_degree() != Some(PROPERTY_DEGREE) || g.n() != PROPERTY_NODES {
                return Err(Error::Dataset(format!("generator produced a mislabeled {} graph", property.name())));
            }
            graphs.push(g.with_graph_label(satisfied as usize));
        }
    }
    Ok(PropertyDataset { property, seed, graphs })
}

fn sample<R: Rng>(property: GraphProperty, satisfied: bool, rng: &mut R) -> Result<Graph<f64>> {
    let (n, d) = (PROPERTY_NODES, PROPERTY_DEGREE);
    match (property, satisfied) {
        (GraphProperty::Connectivity, false) => {
            let a = random_regular::<f64, _>(n / 2, d, rng)?;
            let b = random_regular::<f64, _>(n / 2, d, rng)?;
            let perm = random_permutation(n, rng);
            disjoint_union(&a, &b).permute(&perm)
        }
        (GraphProperty::Bipartiteness, true) => {
            let g = random_bipartite_regular::<f64, _>(n / 2, d, rng)?;
            let perm = random_permutation(n, rng);
            g.permute(&perm)
        }
        _ => {
            for _ in 0..SAMPLE_BUDGET {
                let g = random_regular::<f64, _>(n, d, rng)?;
                if property.holds(&g) == satisfied {
                    return Ok(g);
                }
            }
            Err(Error::BudgetExhausted { attempts: SAMPLE_BUDGET, what: format!("{} sample", property.name()) })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_datasets_are_balanced_and_audited() {
        for p in GraphProperty::ALL {
            let d = gen_property_dataset_sized(p, 4, 6).unwrap();
            let labels = d.labels();
            assert_eq!(labels.iter().filter(|&&l| l == 1).count(), 6);
            assert_eq!(labels.len(), 12);
            for g in &d.graphs {
                assert_eq!(p.holds(g) as usize, g.graph_label().unwrap());
                assert_eq!(g.regular_degree(), Some(4));
                assert!(g.features().as_slice().iter().all(|&x| x == 1.0));
            }
        }
    }
}
