//! Seeded random graphs and the built-in verification corpus.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{complete, lollipop, path, torus_grid, tree_plus_k5, Graph};

/// Random connected graph on `n` vertices: a random recursive tree (vertex
/// `i` attaches to a uniform earlier vertex) plus each remaining pair with
/// probability `p`.
pub fn random_connected(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if n < 2 {
        return Err(Error::pre("random_connected needs n >= 2"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::pre(format!("edge probability {p} outside [0,1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = std::collections::BTreeSet::new();
    for i in 1..n {
        edges.insert((rng.random_range(0..i), i));
    }
    for u in 0..n {
        for v in u + 1..n {
            if !edges.contains(&(u, v)) && rng.random_bool(p) {
                edges.insert((u, v));
            }
        }
    }
    Graph::new(n, edges)
}

/// `count` random connected graphs with `n` uniform in `n_range` and edge
/// density drawn per graph, all derived from `seed`.
pub fn random_corpus(
    count: usize,
    n_range: std::ops::RangeInclusive<usize>,
    seed: u64,
) -> Vec<Graph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(n_range.clone());
            let p = rng.random_range(0.0..0.3);
            random_connected(n, p, rng.random()).expect("valid parameters")
        })
        .collect()
}

/// A named graph of the built-in corpus.
#[derive(Debug, Clone)]
pub struct Entry {
    pub name: String,
    pub graph: Graph,
}

/// Families with known structure plus a few random graphs.
pub fn builtin() -> Vec<Entry> {
    let mut out = Vec::new();
    let mut push = |name: String, graph: Graph| out.push(Entry { name, graph });
    for n in [2, 3, 5, 8] {
        push(format!("path({n})"), path(n).unwrap());
    }
    for n in [3, 4, 6] {
        push(format!("complete({n})"), complete(n).unwrap());
    }
    for k in [3, 4] {
        push(format!("torus_grid({k})"), torus_grid(k).unwrap());
    }
    for (c, l) in [(4, 2), (4, 3), (5, 4)] {
        push(format!("lollipop({c},{l})"), lollipop(c, l).unwrap());
    }
    push("tree_plus_k5(9,1)".into(), tree_plus_k5(9, 1).unwrap());
    for seed in 0..4 {
        push(
            format!("random(10,0.25,{seed})"),
            random_connected(10, 0.25, seed).unwrap(),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_graphs_are_connected_and_seeded() {
        for seed in 0..20 {
            let g = random_connected(15, 0.1, seed).unwrap();
            assert!(g.is_connected());
            assert_eq!(g.edges(), random_connected(15, 0.1, seed).unwrap().edges());
        }
        assert_eq!(random_connected(6, 1.0, 3).unwrap().edge_count(), 15);
        assert_eq!(random_connected(6, 0.0, 3).unwrap().edge_count(), 5);
    }

    #[test]
    fn corpus_sizes() {
        let c = random_corpus(10, 4..=50, 9);
        assert!(c
            .iter()
            .all(|g| (4..=50).contains(&g.n()) && g.is_connected()));
        assert!(builtin().iter().all(|e| e.graph.is_connected()));
    }
}
