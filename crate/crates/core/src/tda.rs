//! Vietoris–Rips persistent homology in dimensions 0 and 1 over Z2.
//!
//! A simplex enters the filtration at the largest pairwise distance among its
//! vertices (`d(i,j) <= r`, non-strict). Simplices of equal value are ordered
//! by dimension, then by their vertices compared from the largest index down
//! (the combinatorial number system index). The tie order only decides which
//! zero-length pairs appear; reported non-trivial intervals do not depend on it.
//!
//! H0 is read off a union-find pass over the sorted edges. H1 is computed by
//! reducing the coboundary matrix of edges against triangles, processing edges
//! from the end of the filtration backwards. Edges that kill an H0 class are
//! cleared beforehand, and columns are reduced lazily: a column is rebuilt from
//! the list of original edges summed into it, so triangles are enumerated on
//! the fly and never stored.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Submission, SubmissionContent};
use crate::metric::Metric;

/// Default upper bound on points accepted by [`vr_h1`].
pub const DEFAULT_MAX_POINTS: usize = 2_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersistencePair {
    pub dim: u8,
    pub birth: f64,
    /// `f64::INFINITY` when the class never dies within the filtration.
    pub death: f64,
}

impl PersistencePair {
    pub fn is_infinite(&self) -> bool {
        self.death.is_infinite()
    }

    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiltrationConfig {
    /// Highest homology dimension, 0 or 1.
    pub max_dim: u8,
    /// Largest filtration value; `None` uses the largest matrix entry, which
    /// builds the full complex.
    pub r_max: Option<f64>,
    pub max_points: usize,
}

impl Default for FiltrationConfig {
    fn default() -> Self {
        Self {
            max_dim: 1,
            r_max: None,
            max_points: DEFAULT_MAX_POINTS,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum TdaError {
    #[error("{n} points exceed the triangle enumeration guard of {limit}")]
    TooManyPoints { n: usize, limit: usize },
    #[error("homology dimension {0} is not supported (max 1)")]
    Dimension(u8),
    #[error("radii must be strictly increasing (position {0})")]
    BadRadii(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key {
    value: f64,
    index: u64,
}

impl Eq for Key {}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Binomial coefficients C(v, k) for k <= 3.
struct Binomials {
    table: Vec<[u64; 4]>,
}

impl Binomials {
    fn new(n: usize) -> Self {
        let table = (0..=n as u64)
            .map(|v| {
                [
                    1,
                    v,
                    v * v.saturating_sub(1) / 2,
                    v * v.saturating_sub(1) * v.saturating_sub(2) / 6,
                ]
            })
            .collect();
        Self { table }
    }

    fn edge(&self, i: usize, j: usize) -> u64 {
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        self.table[hi][2] + lo as u64
    }

    fn triangle(&self, a: usize, b: usize, c: usize) -> u64 {
        let mut v = [a, b, c];
        v.sort_unstable();
        self.table[v[2]][3] + self.table[v[1]][2] + v[0] as u64
    }
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    key: Key,
    i: usize,
    j: usize,
}

fn sorted_edges(m: &impl Metric, binom: &Binomials, r_max: f64) -> Vec<Edge> {
    let n = m.len();
    let mut edges = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for j in 0..n {
        for i in 0..j {
            let value = m.dist(i, j);
            if value <= r_max {
                edges.push(Edge {
                    key: Key {
                        value,
                        index: binom.edge(i, j),
                    },
                    i,
                    j,
                });
            }
        }
    }
    edges.sort_unstable_by_key(|e| e.key);
    edges
}

/// Union-find pass: H0 pairs plus, for each edge, whether it merged two
/// components.
fn components(n: usize, edges: &[Edge]) -> (Vec<PersistencePair>, Vec<bool>) {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut pairs = Vec::with_capacity(n);
    let mut merges = vec![false; edges.len()];
    for (k, e) in edges.iter().enumerate() {
        let (a, b) = (find(&mut parent, e.i), find(&mut parent, e.j));
        if a != b {
            // Every component is born at 0; roots are the smallest vertex of
            // their component, and the one with the larger root dies.
            let (elder, younger) = if a < b { (a, b) } else { (b, a) };
            parent[younger] = elder;
            merges[k] = true;
            pairs.push(PersistencePair {
                dim: 0,
                birth: 0.0,
                death: e.key.value,
            });
        }
    }
    let roots = (0..n).filter(|&v| find(&mut parent, v) == v).count();
    pairs.extend((0..roots).map(|_| PersistencePair {
        dim: 0,
        birth: 0.0,
        death: f64::INFINITY,
    }));
    (pairs, merges)
}

/// Connected components: `n` pairs born at 0, with finite deaths at the
/// minimum-spanning-tree edge lengths and one infinite pair.
pub fn vr_h0(m: &impl Metric) -> Vec<PersistencePair> {
    let n = m.len();
    let binom = Binomials::new(n);
    let edges = sorted_edges(m, &binom, f64::INFINITY);
    components(n, &edges).0
}

/// One-dimensional classes (loops) of the filtration up to `config.r_max`.
/// Zero-length intervals are omitted; classes alive at `r_max` get an
/// infinite death.
pub fn vr_h1(m: &impl Metric, config: &FiltrationConfig) -> Result<Vec<PersistencePair>, TdaError> {
    let n = m.len();
    if n > config.max_points {
        return Err(TdaError::TooManyPoints {
            n,
            limit: config.max_points,
        });
    }
    if n < 3 {
        return Ok(Vec::new());
    }
    let r_max = config.r_max.unwrap_or_else(|| m.max_dist());
    let binom = Binomials::new(n);
    let edges = sorted_edges(m, &binom, r_max);
    let (_, merges) = components(n, &edges);
    Ok(Coboundary {
        m,
        binom: &binom,
        edges: &edges,
        r_max,
    }
    .reduce(&merges))
}

/// Both dimensions, H0 first.
pub fn persistence(
    m: &impl Metric,
    config: &FiltrationConfig,
) -> Result<Vec<PersistencePair>, TdaError> {
    if config.max_dim > 1 {
        return Err(TdaError::Dimension(config.max_dim));
    }
    let mut pairs = vr_h0(m);
    if config.max_dim == 1 {
        pairs.extend(vr_h1(m, config)?);
    }
    Ok(pairs)
}

struct Coboundary<'a, M: Metric> {
    m: &'a M,
    binom: &'a Binomials,
    edges: &'a [Edge],
    r_max: f64,
}

impl<M: Metric> Coboundary<'_, M> {
    /// Triangles containing edge `e` that enter by `r_max`.
    fn column(&self, e: &Edge, out: &mut Vec<Key>) {
        for k in 0..self.m.len() {
            if k == e.i || k == e.j {
                continue;
            }
            let value = e
                .key
                .value
                .max(self.m.dist(e.i, k))
                .max(self.m.dist(e.j, k));
            if value <= self.r_max {
                out.push(Key {
                    value,
                    index: self.binom.triangle(e.i, e.j, k),
                });
            }
        }
    }

    fn reduce(&self, merges: &[bool]) -> Vec<PersistencePair> {
        let mut pairs = Vec::new();
        // Pivot triangle index -> the original edges summed into that column.
        let mut pivots: HashMap<u64, Vec<usize>> = HashMap::new();
        let mut scratch = Vec::new();
        for (pos, edge) in self.edges.iter().enumerate().rev() {
            if merges[pos] {
                continue;
            }
            scratch.clear();
            self.column(edge, &mut scratch);
            let first = scratch.iter().min().copied();
            let pivot = match first {
                None => None,
                Some(p) if !pivots.contains_key(&p.index) => {
                    pivots.insert(p.index, vec![pos]);
                    Some(p)
                }
                Some(_) => {
                    let mut heap: BinaryHeap<Reverse<Key>> =
                        scratch.drain(..).map(Reverse).collect();
                    let mut summed = vec![pos];
                    loop {
                        let Some(p) = peek_pivot(&mut heap) else {
                            break None;
                        };
                        match pivots.get(&p.index) {
                            Some(other) => {
                                for &f in other {
                                    self.column(&self.edges[f], &mut scratch);
                                    heap.extend(scratch.drain(..).map(Reverse));
                                    toggle(&mut summed, f);
                                }
                            }
                            None => {
                                pivots.insert(p.index, summed);
                                break Some(p);
                            }
                        }
                    }
                }
            };
            match pivot {
                Some(p) if p.value > edge.key.value => pairs.push(PersistencePair {
                    dim: 1,
                    birth: edge.key.value,
                    death: p.value,
                }),
                Some(_) => {}
                None => pairs.push(PersistencePair {
                    dim: 1,
                    birth: edge.key.value,
                    death: f64::INFINITY,
                }),
            }
        }
        pairs.sort_by(|a, b| {
            a.birth
                .total_cmp(&b.birth)
                .then(a.death.total_cmp(&b.death))
        });
        pairs
    }
}

/// Smallest entry with odd multiplicity, left on the heap.
fn peek_pivot(heap: &mut BinaryHeap<Reverse<Key>>) -> Option<Key> {
    loop {
        let Reverse(top) = heap.pop()?;
        let mut count = 1;
        while heap.peek() == Some(&Reverse(top)) {
            heap.pop();
            count += 1;
        }
        if count % 2 == 1 {
            heap.push(Reverse(top));
            return Some(top);
        }
    }
}

fn toggle(set: &mut Vec<usize>, item: usize) {
    match set.iter().position(|&x| x == item) {
        Some(i) => {
            set.swap_remove(i);
        }
        None => set.push(item),
    }
}

/// Count of `dim` classes alive at each radius (`birth <= r < death`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BettiCurve {
    pub dim: u8,
    pub radii: Vec<f64>,
    pub counts: Vec<usize>,
}

pub fn betti_curve(
    pairs: &[PersistencePair],
    dim: u8,
    radii: &[f64],
) -> Result<BettiCurve, TdaError> {
    if let Some(k) =
        (1..radii.len()).find(|&k| radii[k].partial_cmp(&radii[k - 1]) != Some(Ordering::Greater))
    {
        return Err(TdaError::BadRadii(k));
    }
    let counts = radii
        .iter()
        .map(|&r| {
            pairs
                .iter()
                .filter(|p| p.dim == dim && p.birth <= r && r < p.death)
                .count()
        })
        .collect();
    Ok(BettiCurve {
        dim,
        radii: radii.to_vec(),
        counts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogPoint {
    pub dim: u8,
    pub log_birth: f64,
    pub log_death: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Birth,
    Death,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub dim: u8,
    pub axis: Axis,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Persistence diagram in `log10(1 + x)` coordinates, with marginal
/// histograms of both coordinates per dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogDiagram {
    pub points: Vec<LogPoint>,
    /// Pairs left out because their death is infinite.
    pub n_infinite: usize,
    pub histogram: Vec<HistogramBin>,
}

pub const DEFAULT_HISTOGRAM_BINS: usize = 20;

pub fn log_diagram(pairs: &[PersistencePair], bins: usize) -> LogDiagram {
    let bins = bins.max(1);
    let points: Vec<LogPoint> = pairs
        .iter()
        .filter(|p| !p.is_infinite())
        .map(|p| LogPoint {
            dim: p.dim,
            log_birth: (1.0 + p.birth).log10(),
            log_death: (1.0 + p.death).log10(),
        })
        .collect();
    let n_infinite = pairs.len() - points.len();
    let mut dims: Vec<u8> = points.iter().map(|p| p.dim).collect();
    dims.sort_unstable();
    dims.dedup();
    let mut histogram = Vec::new();
    for dim in dims {
        let of_dim: Vec<&LogPoint> = points.iter().filter(|p| p.dim == dim).collect();
        // Shared range for both axes so the marginals line up with the diagram.
        let top = of_dim
            .iter()
            .map(|p| p.log_death.max(p.log_birth))
            .fold(0.0, f64::max);
        let width = if top > 0.0 {
            top / bins as f64
        } else {
            1.0 / bins as f64
        };
        for axis in [Axis::Birth, Axis::Death] {
            let mut counts = vec![0usize; bins];
            for p in &of_dim {
                let v = match axis {
                    Axis::Birth => p.log_birth,
                    Axis::Death => p.log_death,
                };
                let b = ((v / width) as usize).min(bins - 1);
                counts[b] += 1;
            }
            histogram.extend(
                counts
                    .into_iter()
                    .enumerate()
                    .map(|(b, count)| HistogramBin {
                        dim,
                        axis,
                        lo: b as f64 * width,
                        hi: (b + 1) as f64 * width,
                        count,
                    }),
            );
        }
    }
    LogDiagram {
        points,
        n_infinite,
        histogram,
    }
}

/// Assignment-target orders of the variable-renaming cycle: the six
/// permutations of `a, b, c` and the twelve states with two adjacent targets
/// sharing a name, each one relabel away from its neighbours.
pub const RENAME_CYCLE_STATES: [&str; 18] = [
    "abc", "bac", "bca", "cba", "cab", "acb", //
    "aac", "bbc", "baa", "bcc", "bba", "cca", "caa", "cbb", "aab", "ccb", "abb", "acc",
];

/// Adjacent pairs of the renaming cycle, as indices into [`RENAME_CYCLE_STATES`].
pub fn rename_cycle_adjacency() -> Vec<(usize, usize)> {
    const EDGES: [(&str, &str); 24] = [
        ("abc", "abb"),
        ("abc", "acc"),
        ("abc", "aac"),
        ("abc", "bbc"),
        ("bac", "aac"),
        ("bac", "bbc"),
        ("bac", "bcc"),
        ("bac", "baa"),
        ("bca", "bcc"),
        ("bca", "baa"),
        ("bca", "cca"),
        ("bca", "bba"),
        ("cba", "cca"),
        ("cba", "bba"),
        ("cba", "caa"),
        ("cba", "cbb"),
        ("cab", "cbb"),
        ("cab", "caa"),
        ("cab", "ccb"),
        ("cab", "aab"),
        ("acb", "ccb"),
        ("acb", "aab"),
        ("acb", "abb"),
        ("acb", "acc"),
    ];
    let pos = |s: &str| {
        RENAME_CYCLE_STATES
            .iter()
            .position(|&x| x == s)
            .expect("known state")
    };
    EDGES.iter().map(|&(a, b)| (pos(a), pos(b))).collect()
}

/// Source of one renaming state, e.g. `"bac"` gives
/// `b = 1\na = 2\nc = 3\nprint(a+b+c)\n`.
pub fn rename_cycle_source(state: &str) -> String {
    let mut src = String::new();
    for (name, value) in state.chars().zip(1..) {
        src.push_str(&format!("{name} = {value}\n"));
    }
    src.push_str("print(a+b+c)\n");
    src
}

/// The 18 renaming programs as a single-question corpus, in
/// [`RENAME_CYCLE_STATES`] order.
pub fn rename_cycle_fixture() -> Corpus {
    let corpus = Corpus::assemble(
        RENAME_CYCLE_STATES
            .iter()
            .enumerate()
            .map(|(rep, state)| Submission {
                question_id: 0,
                repetition: rep as u32,
                session_id: None,
                source_path: None,
                origin: (*state).to_owned(),
                content: SubmissionContent::Source(rename_cycle_source(state)),
            })
            .collect(),
    );
    debug_assert!(corpus.error_log.is_empty());
    corpus
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::RealMatrix;

    fn square() -> RealMatrix {
        RealMatrix::euclidean(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    }

    fn equilateral() -> RealMatrix {
        RealMatrix::from_fn(3, |_, _| 1.0).unwrap()
    }

    fn finite_deaths(pairs: &[PersistencePair]) -> Vec<f64> {
        pairs
            .iter()
            .filter(|p| !p.is_infinite())
            .map(|p| p.death)
            .collect()
    }

    #[test]
    fn h0_simultaneous_merge() {
        let pairs = vr_h0(&equilateral());
        assert_eq!(pairs.len(), 3);
        assert_eq!(finite_deaths(&pairs), [1.0, 1.0]);
        assert_eq!(pairs.iter().filter(|p| p.is_infinite()).count(), 1);
        assert!(pairs.iter().all(|p| p.birth == 0.0 && p.dim == 0));
    }

    #[test]
    fn h0_line() {
        let m = RealMatrix::euclidean(&[[0.0, 0.0], [1.0, 0.0], [3.0, 0.0]]);
        assert_eq!(finite_deaths(&vr_h0(&m)), [1.0, 2.0]);
    }

    #[test]
    fn h0_single_point() {
        let m = RealMatrix::from_row_major(1, vec![0.0]).unwrap();
        let pairs = vr_h0(&m);
        assert_eq!(pairs.len(), 1);
        assert!(pairs[0].is_infinite());
    }

    #[test]
    fn h1_square() {
        let pairs = vr_h1(&square(), &FiltrationConfig::default()).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].birth, 1.0);
        assert!((pairs[0].death - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn h1_triangle_fills_immediately() {
        assert!(vr_h1(&equilateral(), &FiltrationConfig::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn h1_censored_by_r_max() {
        let config = FiltrationConfig {
            r_max: Some(1.2),
            ..Default::default()
        };
        let pairs = vr_h1(&square(), &config).unwrap();
        assert_eq!(pairs.len(), 1);
        assert!(pairs[0].is_infinite());
    }

    #[test]
    fn h1_point_guard() {
        let config = FiltrationConfig {
            max_points: 3,
            ..Default::default()
        };
        assert_eq!(
            vr_h1(&square(), &config),
            Err(TdaError::TooManyPoints { n: 4, limit: 3 })
        );
    }

    #[test]
    fn hexagon_has_one_loop() {
        let pts: Vec<[f64; 2]> = (0..6)
            .map(|k| {
                let t = k as f64 * std::f64::consts::PI / 3.0;
                [t.cos(), t.sin()]
            })
            .collect();
        let pairs = vr_h1(&RealMatrix::euclidean(&pts), &FiltrationConfig::default()).unwrap();
        assert_eq!(pairs.len(), 1);
        assert!((pairs[0].birth - 1.0).abs() < 1e-12);
        assert!((pairs[0].death - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn betti_counts() {
        let pairs = vr_h0(&equilateral());
        let curve = betti_curve(&pairs, 0, &[0.0, 0.5, 1.0, 2.0]).unwrap();
        assert_eq!(curve.counts, [3, 3, 1, 1]);
        assert_eq!(betti_curve(&[], 1, &[0.0, 1.0]).unwrap().counts, [0, 0]);
        let h1 = vr_h1(&square(), &FiltrationConfig::default()).unwrap();
        assert_eq!(
            betti_curve(&h1, 1, &[0.5, 1.0, 1.2, 1.5]).unwrap().counts,
            [0, 1, 1, 0]
        );
        assert_eq!(betti_curve(&h1, 1, &[1.0, 0.5]), Err(TdaError::BadRadii(1)));
    }

    #[test]
    fn log_coordinates() {
        let pairs = [
            PersistencePair {
                dim: 1,
                birth: 1.0,
                death: 2f64.sqrt(),
            },
            PersistencePair {
                dim: 0,
                birth: 0.0,
                death: 3.0,
            },
            PersistencePair {
                dim: 0,
                birth: 0.0,
                death: f64::INFINITY,
            },
        ];
        let d = log_diagram(&pairs, 4);
        assert_eq!(d.n_infinite, 1);
        assert_eq!(d.points.len(), 2);
        assert!((d.points[0].log_birth - 2f64.log10()).abs() < 1e-15);
        assert!((d.points[0].log_death - (1.0 + 2f64.sqrt()).log10()).abs() < 1e-15);
        assert_eq!(d.points[1].log_birth, 0.0);
        // 2 dims × 2 axes × 4 bins, one point per (dim, axis).
        assert_eq!(d.histogram.len(), 16);
        for dim in [0, 1] {
            for axis in [Axis::Birth, Axis::Death] {
                let total: usize = d
                    .histogram
                    .iter()
                    .filter(|b| b.dim == dim && b.axis == axis)
                    .map(|b| b.count)
                    .sum();
                assert_eq!(total, 1);
            }
        }
    }

    #[test]
    fn fixture_shape() {
        let corpus = rename_cycle_fixture();
        assert_eq!(corpus.len(), 18);
        assert_eq!(rename_cycle_adjacency().len(), 24);
        assert_eq!(
            rename_cycle_source("bac"),
            "b = 1\na = 2\nc = 3\nprint(a+b+c)\n"
        );
    }
}
