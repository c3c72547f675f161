//! Two-dimensional metric MDS by stress majorization (SMACOF).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::metric::Metric;

pub const DEFAULT_RESTARTS: usize = 4;
pub const DEFAULT_MAX_ITERATIONS: usize = 300;
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub points: Vec<[f64; 2]>,
    pub raw_stress: f64,
    /// `raw_stress / n`.
    pub avg_stress: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Restart that produced this embedding.
    pub restart: usize,
    /// Raw stress of the starting configuration followed by the stress after
    /// each majorization step.
    #[serde(skip)]
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MdsOptions {
    pub seed: u64,
    pub restarts: usize,
    pub max_iterations: usize,
    /// Stop once the relative stress decrease of a step falls below this.
    pub tolerance: f64,
}

impl Default for MdsOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            restarts: DEFAULT_RESTARTS,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

/// Raw stress `Σ_{i<j} (d_ij - ‖p_i - p_j‖)²` and its per-point average.
pub fn stress(m: &impl Metric, points: &[[f64; 2]]) -> (f64, f64) {
    assert_eq!(m.len(), points.len(), "one point per matrix row");
    let n = points.len();
    let raw: f64 = (0..n)
        .map(|i| {
            (i + 1..n)
                .map(|j| {
                    let e = m.dist(i, j) - euclid(points[i], points[j]);
                    e * e
                })
                .sum::<f64>()
        })
        .sum();
    (raw, average(raw, n))
}

fn average(raw: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        raw / n as f64
    }
}

fn euclid(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Best of `restarts` seeded SMACOF runs with the default stopping rule.
pub fn mds_embed(m: &impl Metric, seed: u64, restarts: usize) -> Embedding {
    mds_embed_with(
        m,
        &MdsOptions {
            seed,
            restarts,
            ..Default::default()
        },
    )
}

pub fn mds_embed_with(m: &impl Metric, options: &MdsOptions) -> Embedding {
    let runs: Vec<Embedding> = (0..options.restarts.max(1))
        .into_par_iter()
        .map(|restart| smacof(m, random_start(m, options.seed, restart), restart, options))
        .collect();
    runs.into_iter()
        .reduce(|best, run| {
            if run.raw_stress < best.raw_stress {
                run
            } else {
                best
            }
        })
        .expect("at least one restart")
}

/// Uniform points in a square whose side matches the mean target distance.
fn random_start(m: &impl Metric, seed: u64, restart: usize) -> Vec<[f64; 2]> {
    let n = m.len();
    let pairs = n * n.saturating_sub(1) / 2;
    let mean = if pairs == 0 {
        1.0
    } else {
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| m.dist(i, j))
            .sum::<f64>()
            / pairs as f64
    };
    let side = if mean > 0.0 { mean } else { 1.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    (0..n)
        .map(|_| {
            [
                rng.gen_range(-0.5..0.5) * side,
                rng.gen_range(-0.5..0.5) * side,
            ]
        })
        .collect()
}

/// SMACOF from a given start. Each step is the Guttman transform, which never
/// increases the stress.
pub fn smacof(
    m: &impl Metric,
    start: Vec<[f64; 2]>,
    restart: usize,
    options: &MdsOptions,
) -> Embedding {
    let n = m.len();
    assert_eq!(start.len(), n, "one starting point per matrix row");
    let mut x = start;
    let mut next = vec![[0.0; 2]; n];
    let mut current = stress(m, &x).0;
    let mut history = vec![current];
    let mut converged = n < 2 || current == 0.0;
    let mut iterations = 0;
    while !converged && iterations < options.max_iterations {
        for i in 0..n {
            let mut acc = [0.0; 2];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let e = euclid(x[i], x[j]);
                if e > 0.0 {
                    let w = m.dist(i, j) / e;
                    acc[0] += w * (x[i][0] - x[j][0]);
                    acc[1] += w * (x[i][1] - x[j][1]);
                }
            }
            next[i] = [acc[0] / n as f64, acc[1] / n as f64];
        }
        std::mem::swap(&mut x, &mut next);
        iterations += 1;
        let updated = stress(m, &x).0;
        history.push(updated);
        converged = updated == 0.0 || (current - updated) / current < options.tolerance;
        current = updated;
    }
    Embedding {
        raw_stress: current,
        avg_stress: average(current, n),
        points: x,
        iterations,
        converged,
        restart,
        history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::RealMatrix;

    fn pairwise_ok(m: &RealMatrix, e: &Embedding, tol: f64) -> bool {
        let n = m.len();
        (0..n).all(|i| {
            (i + 1..n).all(|j| (euclid(e.points[i], e.points[j]) - m.dist(i, j)).abs() <= tol)
        })
    }

    #[test]
    fn equilateral_is_exact() {
        let m = RealMatrix::from_fn(3, |_, _| 1.0).unwrap();
        let e = mds_embed(&m, 0, 4);
        assert!(e.raw_stress < 1e-9, "{}", e.raw_stress);
        assert!(pairwise_ok(&m, &e, 1e-5));
        assert_eq!(e.avg_stress, e.raw_stress / 3.0);
    }

    #[test]
    fn tetrahedron_is_not_planar() {
        let m = RealMatrix::from_fn(4, |_, _| 1.0).unwrap();
        let e = mds_embed(&m, 0, 8);
        assert!(e.raw_stress > 1e-3, "{}", e.raw_stress);
    }

    #[test]
    fn coincident_points_cost_everything() {
        let m = RealMatrix::euclidean(&[[0.0, 0.0], [3.0, 4.0], [6.0, 8.0]]);
        let (raw, avg) = stress(&m, &[[1.0, 1.0]; 3]);
        assert_eq!(raw, 25.0 + 100.0 + 25.0);
        assert_eq!(avg, 50.0);
    }

    #[test]
    fn stress_is_rigid_invariant() {
        let m = RealMatrix::from_fn(4, |i, j| (i + j) as f64).unwrap();
        let p = [[0.0, 0.0], [1.0, 2.0], [-1.0, 0.5], [3.0, -2.0]];
        let (t, c, s) = (0.7f64, 0.7f64.cos(), 0.7f64.sin());
        let moved: Vec<[f64; 2]> = p
            .iter()
            .map(|q| [c * q[0] - s * q[1] + t, s * q[0] + c * q[1] - 5.0])
            .collect();
        let (a, b) = (stress(&m, &p).0, stress(&m, &moved).0);
        assert!((a - b).abs() < 1e-9 * a.max(1.0));
    }

    #[test]
    fn history_never_increases() {
        let m = RealMatrix::from_fn(12, |i, j| ((i * 7 + j * 7) % 5 + 1) as f64).unwrap();
        let e = mds_embed(&m, 3, 2);
        for w in e.history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * e.history[0], "{} -> {}", w[0], w[1]);
        }
        assert_eq!(e.history.len(), e.iterations + 1);
    }

    #[test]
    fn deterministic() {
        let m = RealMatrix::from_fn(10, |i, j| (i as f64 - j as f64).abs().sqrt()).unwrap();
        assert_eq!(mds_embed(&m, 9, 4), mds_embed(&m, 9, 4));
    }

    #[test]
    fn tiny_inputs() {
        let one = RealMatrix::from_row_major(1, vec![0.0]).unwrap();
        let e = mds_embed(&one, 0, 4);
        assert_eq!(e.points.len(), 1);
        assert_eq!(e.raw_stress, 0.0);
        assert!(e.converged);
    }
}
