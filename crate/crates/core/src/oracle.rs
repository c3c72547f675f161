//! Slow, independent reference computations used to check the fast paths.
//!
//! Nothing here is used by the pipeline itself. Each routine takes a
//! different route from the production code it checks: tree-edit distance by
//! enumerating every valid node mapping, H0 deaths by Kruskal's algorithm,
//! and Betti numbers by ranks of explicit boundary matrices at a fixed scale.

use thiserror::Error;

use crate::metric::Metric;
use crate::ted::EditCosts;
use crate::tree::SyntaxTree;

/// Largest tree accepted by [`ted_oracle`].
pub const ORACLE_MAX_NODES: usize = 8;
/// Largest point count accepted by [`betti_numbers_at`].
pub const BETTI_MAX_POINTS: usize = 40;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("oracle input of size {size} exceeds the limit of {limit}")]
    TooLarge { size: usize, limit: usize },
}

struct Flat<'a> {
    labels: Vec<&'a str>,
    // ancestors[i] has bit k set when node k is a proper ancestor of node i
    ancestors: Vec<u32>,
}

fn flatten(tree: &SyntaxTree) -> Flat<'_> {
    let mut labels = Vec::new();
    let mut ancestors = Vec::new();
    let mut stack = vec![(tree, 0u32)];
    while let Some((node, anc)) = stack.pop() {
        let idx = labels.len();
        labels.push(node.label.as_str());
        ancestors.push(anc);
        let mine = anc | (1 << idx);
        for child in node.children.iter().rev() {
            stack.push((child, mine));
        }
    }
    Flat { labels, ancestors }
}

/// Exact tree-edit distance with unit costs, by exhaustive search over all
/// mappings that preserve ancestry and preorder.
pub fn ted_oracle(t1: &SyntaxTree, t2: &SyntaxTree) -> Result<u64, OracleError> {
    ted_oracle_with(t1, t2, EditCosts::UNIT)
}

pub fn ted_oracle_with(
    t1: &SyntaxTree,
    t2: &SyntaxTree,
    costs: EditCosts,
) -> Result<u64, OracleError> {
    for t in [t1, t2] {
        let size = t.size();
        if size > ORACLE_MAX_NODES {
            return Err(OracleError::TooLarge {
                size,
                limit: ORACLE_MAX_NODES,
            });
        }
    }
    let a = flatten(t1);
    let b = flatten(t2);
    let mut best = u64::MAX;
    let mut pairs = Vec::new();
    search(&a, &b, 0, 0, &mut pairs, costs, &mut best);
    Ok(best)
}

fn search(
    a: &Flat<'_>,
    b: &Flat<'_>,
    i: usize,
    min_j: usize,
    pairs: &mut Vec<(usize, usize)>,
    costs: EditCosts,
    best: &mut u64,
) {
    if i == a.labels.len() {
        let matched = pairs.len() as u64;
        let relabels = pairs
            .iter()
            .filter(|&&(x, y)| a.labels[x] != b.labels[y])
            .count() as u64;
        let cost = relabels * costs.relabel
            + (a.labels.len() as u64 - matched) * costs.delete
            + (b.labels.len() as u64 - matched) * costs.insert;
        *best = (*best).min(cost);
        return;
    }
    // Node i stays unmapped.
    search(a, b, i + 1, min_j, pairs, costs, best);
    // Node i maps to some j after every previously mapped target (preorder).
    for j in min_j..b.labels.len() {
        let consistent = pairs.iter().all(|&(x, y)| {
            let a_anc = a.ancestors[i] & (1 << x) != 0;
            let b_anc = b.ancestors[j] & (1 << y) != 0;
            a_anc == b_anc
        });
        if consistent {
            pairs.push((i, j));
            search(a, b, i + 1, j + 1, pairs, costs, best);
            pairs.pop();
        }
    }
}

/// Minimum-spanning-tree edge weights by Kruskal's algorithm, ascending.
pub fn mst_edge_weights(m: &impl Metric) -> Vec<f64> {
    let n = m.len();
    let mut edges: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            edges.push((m.dist(i, j), i, j));
        }
    }
    edges.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut weights = Vec::with_capacity(n.saturating_sub(1));
    for (w, i, j) in edges {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri != rj {
            parent[ri] = rj;
            weights.push(w);
        }
    }
    weights
}

/// Betti numbers (β0, β1) over Z2 of the Vietoris–Rips complex at scale `r`
/// (simplices whose pairwise distances are all `<= r`).
pub fn betti_numbers_at(m: &impl Metric, r: f64) -> Result<(usize, usize), OracleError> {
    let n = m.len();
    if n > BETTI_MAX_POINTS {
        return Err(OracleError::TooLarge {
            size: n,
            limit: BETTI_MAX_POINTS,
        });
    }
    let mut edge_index = vec![usize::MAX; n * n];
    let mut boundary1 = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if m.dist(i, j) <= r {
                edge_index[i * n + j] = boundary1.len();
                boundary1.push(BitRow::from_ones(n, &[i, j]));
            }
        }
    }
    let n_edges = boundary1.len();
    let mut boundary2 = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if edge_index[i * n + j] == usize::MAX {
                continue;
            }
            for k in (j + 1)..n {
                let ik = edge_index[i * n + k];
                let jk = edge_index[j * n + k];
                if ik != usize::MAX && jk != usize::MAX {
                    boundary2.push(BitRow::from_ones(n_edges, &[edge_index[i * n + j], ik, jk]));
                }
            }
        }
    }
    let rank1 = rank(boundary1);
    let rank2 = rank(boundary2);
    Ok((n - rank1, n_edges - rank1 - rank2))
}

#[derive(Clone)]
struct BitRow(Vec<u64>);

impl BitRow {
    fn from_ones(width: usize, ones: &[usize]) -> Self {
        let mut words = vec![0u64; width.div_ceil(64).max(1)];
        for &k in ones {
            words[k / 64] ^= 1 << (k % 64);
        }
        Self(words)
    }

    fn highest(&self) -> Option<usize> {
        self.0
            .iter()
            .enumerate()
            .rev()
            .find(|(_, w)| **w != 0)
            .map(|(i, w)| i * 64 + 63 - w.leading_zeros() as usize)
    }

    fn xor(&mut self, other: &BitRow) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a ^= b;
        }
    }
}

/// Rank over Z2 by Gaussian elimination on the highest set bit.
fn rank(vectors: Vec<BitRow>) -> usize {
    let mut basis: std::collections::HashMap<usize, BitRow> = std::collections::HashMap::new();
    for mut v in vectors {
        while let Some(h) = v.highest() {
            match basis.get(&h) {
                Some(b) => v.xor(b),
                None => {
                    basis.insert(h, v);
                    break;
                }
            }
        }
    }
    basis.len()
}
