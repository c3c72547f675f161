//! The read-only view of a finite metric space shared by the statistics,
//! topology and embedding modules.

use thiserror::Error;

/// A finite set of points with pairwise dissimilarities.
pub trait Metric: Sync {
    fn len(&self) -> usize;

    fn dist(&self, i: usize, j: usize) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Largest pairwise entry, 0 for fewer than two points.
    fn max_dist(&self) -> f64 {
        let n = self.len();
        let mut max = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                max = max.max(self.dist(i, j));
            }
        }
        max
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MetricError {
    #[error("expected {expected} entries for a {n}x{n} matrix, got {got}")]
    Shape {
        n: usize,
        expected: usize,
        got: usize,
    },
    #[error("entry ({i},{j}) = {value} is negative or not finite")]
    Invalid { i: usize, j: usize, value: f64 },
    #[error("entry ({i},{j}) = {a} differs from ({j},{i}) = {b}")]
    Asymmetric { i: usize, j: usize, a: f64, b: f64 },
    #[error("diagonal entry ({i},{i}) = {value} is not zero")]
    Diagonal { i: usize, value: f64 },
}

/// Dense real-valued symmetric dissimilarity matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    n: usize,
    values: Vec<f64>,
}

impl RealMatrix {
    /// Row-major construction, validated for symmetry, zero diagonal and
    /// non-negative finite entries.
    pub fn from_row_major(n: usize, values: Vec<f64>) -> Result<Self, MetricError> {
        if values.len() != n * n {
            return Err(MetricError::Shape {
                n,
                expected: n * n,
                got: values.len(),
            });
        }
        for i in 0..n {
            let d = values[i * n + i];
            if d != 0.0 {
                return Err(MetricError::Diagonal { i, value: d });
            }
            for j in 0..n {
                let a = values[i * n + j];
                if !a.is_finite() || a < 0.0 {
                    return Err(MetricError::Invalid { i, j, value: a });
                }
                let b = values[j * n + i];
                if a != b {
                    return Err(MetricError::Asymmetric { i, j, a, b });
                }
            }
        }
        Ok(Self { n, values })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self, MetricError> {
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = f(i, j);
                values[i * n + j] = d;
                values[j * n + i] = d;
            }
        }
        Self::from_row_major(n, values)
    }

    /// Euclidean distances between points in the plane.
    pub fn euclidean(points: &[[f64; 2]]) -> Self {
        Self::from_fn(points.len(), |i, j| {
            let dx = points[i][0] - points[j][0];
            let dy = points[i][1] - points[j][1];
            dx.hypot(dy)
        })
        .expect("euclidean distances are a valid matrix")
    }

    /// Copies any metric into a dense matrix.
    pub fn from_metric(m: &impl Metric) -> Self {
        let n = m.len();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                values[i * n + j] = m.dist(i, j);
            }
        }
        Self { n, values }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// Restriction to the given indices, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let k = indices.len();
        let mut values = Vec::with_capacity(k * k);
        for &i in indices {
            for &j in indices {
                values.push(self.values[i * self.n + j]);
            }
        }
        Self { n: k, values }
    }
}

impl Metric for RealMatrix {
    fn len(&self) -> usize {
        self.n
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }
}

impl<M: Metric + ?Sized> Metric for &M {
    fn len(&self) -> usize {
        (**self).len()
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        (**self).dist(i, j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(matches!(
            RealMatrix::from_row_major(2, vec![0.0, 1.0, 2.0, 0.0]),
            Err(MetricError::Asymmetric { .. })
        ));
        assert!(matches!(
            RealMatrix::from_row_major(2, vec![0.0, -1.0, -1.0, 0.0]),
            Err(MetricError::Invalid { .. })
        ));
        assert!(matches!(
            RealMatrix::from_row_major(1, vec![1.0]),
            Err(MetricError::Diagonal { .. })
        ));
        assert!(matches!(
            RealMatrix::from_row_major(2, vec![0.0]),
            Err(MetricError::Shape { .. })
        ));
    }

    #[test]
    fn euclidean_and_select() {
        let m = RealMatrix::euclidean(&[[0.0, 0.0], [3.0, 4.0], [0.0, 1.0]]);
        assert_eq!(m.dist(0, 1), 5.0);
        assert_eq!(m.max_dist(), 5.0);
        let s = m.select(&[2, 0]);
        assert_eq!(s.len(), 2);
        assert_eq!(s.dist(0, 1), 1.0);
    }
}
