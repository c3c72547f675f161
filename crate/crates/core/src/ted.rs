//! Exact ordered tree-edit distance (Zhang–Shasha keyroot dynamic program).
//!
//! Time is O(|T1|·|T2|·min(depth, leaves)²) and memory O(|T1|·|T2|).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tree::SyntaxTree;

/// Default refusal threshold on the node count of either input tree.
pub const DEFAULT_MAX_NODES: usize = 50_000;

/// Per-operation costs. `relabel <= insert + delete` keeps the distance a metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditCosts {
    pub relabel: u64,
    pub insert: u64,
    pub delete: u64,
}

impl Default for EditCosts {
    fn default() -> Self {
        Self::UNIT
    }
}

impl EditCosts {
    pub const UNIT: EditCosts = EditCosts {
        relabel: 1,
        insert: 1,
        delete: 1,
    };

    pub fn new(relabel: u64, insert: u64, delete: u64) -> Result<Self, TedError> {
        if relabel > insert.saturating_add(delete) {
            return Err(TedError::InvalidCosts {
                relabel,
                insert,
                delete,
            });
        }
        Ok(Self {
            relabel,
            insert,
            delete,
        })
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TedError {
    #[error("tree with {nodes} nodes exceeds the size guard of {limit}")]
    TooLarge { nodes: usize, limit: usize },
    #[error("relabel cost {relabel} exceeds insert {insert} + delete {delete}")]
    InvalidCosts {
        relabel: u64,
        insert: u64,
        delete: u64,
    },
}

/// Configured distance function.
#[derive(Debug, Clone, Copy)]
pub struct TreeEditDistance {
    pub costs: EditCosts,
    pub max_nodes: usize,
}

impl Default for TreeEditDistance {
    fn default() -> Self {
        Self {
            costs: EditCosts::UNIT,
            max_nodes: DEFAULT_MAX_NODES,
        }
    }
}

impl TreeEditDistance {
    pub fn new(costs: EditCosts) -> Self {
        Self {
            costs,
            ..Self::default()
        }
    }

    pub fn with_max_nodes(mut self, max_nodes: usize) -> Self {
        self.max_nodes = max_nodes;
        self
    }

    pub fn distance(&self, t1: &SyntaxTree, t2: &SyntaxTree) -> Result<u64, TedError> {
        let a = self.index(t1)?;
        let b = self.index(t2)?;
        Ok(self.distance_indexed(&a, &b))
    }

    /// Flattens and checks a tree once so it can be compared many times.
    pub fn index(&self, tree: &SyntaxTree) -> Result<PostorderTree, TedError> {
        let nodes = tree.size();
        if nodes > self.max_nodes {
            return Err(TedError::TooLarge {
                nodes,
                limit: self.max_nodes,
            });
        }
        Ok(PostorderTree::new(tree))
    }

    pub fn distance_indexed(&self, a: &PostorderTree, b: &PostorderTree) -> u64 {
        zhang_shasha(a, b, self.costs)
    }
}

/// Tree-edit distance with the given costs and the default size guard.
pub fn ted(t1: &SyntaxTree, t2: &SyntaxTree, costs: EditCosts) -> Result<u64, TedError> {
    TreeEditDistance::new(costs).distance(t1, t2)
}

/// A tree laid out in postorder with interned labels, leftmost-leaf
/// descendants and keyroots precomputed.
#[derive(Debug, Clone)]
pub struct PostorderTree {
    labels: Vec<u64>,
    names: Vec<Box<str>>,
    leftmost: Vec<usize>,
    keyroots: Vec<usize>,
}

impl PostorderTree {
    pub fn new(tree: &SyntaxTree) -> Self {
        let mut labels = Vec::new();
        let mut names = Vec::new();
        let mut leftmost = Vec::new();
        // (node, next child index, leftmost leaf of this node once known)
        let mut stack: Vec<(&SyntaxTree, usize, Option<usize>)> = vec![(tree, 0, None)];
        while let Some((node, next, lml)) = stack.pop() {
            if next < node.children.len() {
                stack.push((node, next + 1, lml));
                stack.push((&node.children[next], 0, None));
                continue;
            }
            let idx = labels.len();
            let lml = lml.unwrap_or(idx);
            labels.push(label_key(&node.label));
            names.push(node.label.as_str().into());
            leftmost.push(lml);
            if let Some(parent) = stack.last_mut() {
                if parent.2.is_none() {
                    parent.2 = Some(lml);
                }
            }
        }
        // A keyroot is the highest node for each distinct leftmost leaf.
        let n = labels.len();
        let mut seen = vec![false; n];
        let mut keyroots = Vec::new();
        for i in (0..n).rev() {
            if !seen[leftmost[i]] {
                seen[leftmost[i]] = true;
                keyroots.push(i);
            }
        }
        keyroots.reverse();
        Self {
            labels,
            names,
            leftmost,
            keyroots,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn same_label(&self, i: usize, other: &PostorderTree, j: usize) -> bool {
        self.labels[i] == other.labels[j] && self.names[i] == other.names[j]
    }
}

// Digest first, full string only on digest match.
fn label_key(label: &str) -> u64 {
    use std::hash::{Hash, Hasher};
    let mut h = std::collections::hash_map::DefaultHasher::new();
    label.hash(&mut h);
    h.finish()
}

fn zhang_shasha(a: &PostorderTree, b: &PostorderTree, costs: EditCosts) -> u64 {
    let (n, m) = (a.len(), b.len());
    let mut tree_dist = vec![0u64; n * m];
    let mut forest = vec![0u64; (n + 1) * (m + 1)];
    for &i in &a.keyroots {
        for &j in &b.keyroots {
            forest_distance(a, b, i, j, costs, &mut tree_dist, &mut forest);
        }
    }
    tree_dist[(n - 1) * m + (m - 1)]
}

fn forest_distance(
    a: &PostorderTree,
    b: &PostorderTree,
    i: usize,
    j: usize,
    costs: EditCosts,
    tree_dist: &mut [u64],
    forest: &mut [u64],
) {
    let m = b.len();
    let li = a.leftmost[i];
    let lj = b.leftmost[j];
    let rows = i - li + 2;
    let cols = j - lj + 2;
    // forest[x * cols + y] is the distance between a[li..li+x) and b[lj..lj+y).
    forest[0] = 0;
    for x in 1..rows {
        forest[x * cols] = forest[(x - 1) * cols] + costs.delete;
    }
    for y in 1..cols {
        forest[y] = forest[y - 1] + costs.insert;
    }
    for x in 1..rows {
        let ai = li + x - 1;
        for y in 1..cols {
            let bj = lj + y - 1;
            let del = forest[(x - 1) * cols + y] + costs.delete;
            let ins = forest[x * cols + y - 1] + costs.insert;
            if a.leftmost[ai] == li && b.leftmost[bj] == lj {
                let sub = if a.same_label(ai, b, bj) {
                    0
                } else {
                    costs.relabel
                };
                let ren = forest[(x - 1) * cols + y - 1] + sub;
                let d = del.min(ins).min(ren);
                forest[x * cols + y] = d;
                tree_dist[ai * m + bj] = d;
            } else {
                let px = a.leftmost[ai] - li;
                let py = b.leftmost[bj] - lj;
                let sub = forest[px * cols + py] + tree_dist[ai * m + bj];
                forest[x * cols + y] = del.min(ins).min(sub);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::python::parse_program;

    fn t(s: &str) -> SyntaxTree {
        SyntaxTree::from_bracket(s).unwrap()
    }

    #[test]
    fn identical_is_zero() {
        let a = t("{a{b{c}}{d}}");
        assert_eq!(ted(&a, &a, EditCosts::UNIT).unwrap(), 0);
    }

    #[test]
    fn small_cases() {
        assert_eq!(ted(&t("{a}"), &t("{b}"), EditCosts::UNIT).unwrap(), 1);
        assert_eq!(ted(&t("{a}"), &t("{a{b}}"), EditCosts::UNIT).unwrap(), 1);
        assert_eq!(
            ted(&t("{a{b}{c}}"), &t("{a{c}{b}}"), EditCosts::UNIT).unwrap(),
            2
        );
        // Classic Zhang–Shasha example.
        let f = t("{f{d{a}{c{b}}}{e}}");
        let g = t("{f{c{d{a}{b}}}{e}}");
        assert_eq!(ted(&f, &g, EditCosts::UNIT).unwrap(), 2);
    }

    #[test]
    fn weighted_costs() {
        let costs = EditCosts::new(3, 2, 2).unwrap();
        assert_eq!(ted(&t("{a}"), &t("{b}"), costs).unwrap(), 3);
        assert_eq!(ted(&t("{a}"), &t("{a{b}{c}}"), costs).unwrap(), 4);
        assert!(EditCosts::new(5, 2, 2).is_err());
    }

    #[test]
    fn hello_goodbye() {
        let a = parse_program("a = 'Hello World'\nprint(a)").unwrap();
        let b = parse_program("a = 'Goodbye World'\nprint(a)").unwrap();
        assert_eq!(ted(&a, &b, EditCosts::UNIT).unwrap(), 1);
    }

    #[test]
    fn variable_interchange() {
        let a = parse_program("a=1\nb=2\nc=3\nprint(a+b+c)").unwrap();
        let b = parse_program("b=1\na=2\nc=3\nprint(a+b+c)").unwrap();
        assert_eq!(ted(&a, &b, EditCosts::UNIT).unwrap(), 2);
    }

    #[test]
    fn size_guard() {
        let big = t("{a{b}{c}{d}}");
        let err = TreeEditDistance::default()
            .with_max_nodes(3)
            .distance(&big, &big)
            .unwrap_err();
        assert_eq!(err, TedError::TooLarge { nodes: 4, limit: 3 });
    }
}
