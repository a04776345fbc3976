//! Exact k-nearest-neighbour search.
//!
//! Two backends share one ordering contract: neighbours are sorted by
//! distance, and equal distances are resolved by ascending dataset index.
//! The brute-force backend accepts any metric; the k-d tree is only built
//! for the Euclidean metric and returns exactly the same lists.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kdtree::KdTree;

/// A set of points of common dimension, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    /// Builds a point set from flat row-major coordinates.
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        if coords.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        if coords.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: coords.len() % dim,
            });
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFiniteCoordinate { index: pos / dim });
        }
        Ok(PointSet { dim, coords })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyPointSet)?;
        let dim = first.as_ref().len();
        let mut coords = Vec::with_capacity(dim * rows.len());
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            coords.extend_from_slice(row);
        }
        PointSet::new(dim, coords)
    }

    /// One-dimensional points.
    pub fn from_line(xs: &[f64]) -> Result<Self> {
        PointSet::new(1, xs.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// A new set holding the points at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        PointSet::new(self.dim, coords)
    }
}

pub type DistanceFn = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;

#[derive(Clone, Default)]
pub enum Metric {
    #[default]
    Euclidean,
    Custom(Arc<DistanceFn>),
}

impl Metric {
    pub fn custom<F>(f: F) -> Self
    where
        F: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        Metric::Custom(Arc::new(f))
    }

    #[inline]
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => euclidean(a, b),
            Metric::Custom(f) => f(a, b),
        }
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self, Metric::Euclidean)
    }
}

impl fmt::Debug for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Euclidean => f.write_str("Euclidean"),
            Metric::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Euclidean distance. Every backend reports distances through this
/// function so that equal inputs give bit-identical outputs.
#[inline]
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Neighbours of a query, nearest first.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborList {
    pub indices: Vec<usize>,
    pub distances: Vec<f64>,
}

impl NeighborList {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Total order on (distance, index) candidates.
#[inline]
pub(crate) fn cmp_candidate(a: (f64, usize), b: (f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

#[derive(Debug, Clone)]
enum Backend {
    BruteForce,
    KdTree(KdTree),
}

/// An immutable, queryable index over a point set.
#[derive(Debug, Clone)]
pub struct Index {
    points: PointSet,
    metric: Metric,
    backend: Backend,
}

impl Index {
    /// Builds a k-d tree for the Euclidean metric, brute force otherwise.
    pub fn build(points: PointSet, metric: Metric) -> Self {
        let backend = if metric.is_euclidean() {
            Backend::KdTree(KdTree::build(&points))
        } else {
            Backend::BruteForce
        };
        Index { points, metric, backend }
    }

    /// Always scans every point.
    pub fn brute_force(points: PointSet, metric: Metric) -> Self {
        Index {
            points,
            metric,
            backend: Backend::BruteForce,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn is_accelerated(&self) -> bool {
        matches!(self.backend, Backend::KdTree(_))
    }

    fn check(&self, query: &[f64], k: usize) -> Result<()> {
        if query.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: query.len(),
            });
        }
        if query.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFiniteCoordinate { index: 0 });
        }
        if k == 0 || k > self.len() {
            return Err(Error::KOutOfRange { k, n: self.len() });
        }
        Ok(())
    }

    pub fn knn_query(&self, query: &[f64], k: usize) -> Result<NeighborList> {
        self.check(query, k)?;
        let found = match &self.backend {
            Backend::BruteForce => self.brute_knn(query, k),
            Backend::KdTree(tree) => tree.knn(&self.points, query, k),
        };
        let (distances, indices) = found.into_iter().unzip();
        Ok(NeighborList { indices, distances })
    }

    pub fn kth_neighbor_distance(&self, query: &[f64], k: usize) -> Result<f64> {
        let list = self.knn_query(query, k)?;
        Ok(list.distances[k - 1])
    }

    fn brute_knn(&self, query: &[f64], k: usize) -> Vec<(f64, usize)> {
        let mut all: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (self.metric.distance(query, p), i))
            .collect();
        if k < all.len() {
            all.select_nth_unstable_by(k - 1, |a, b| cmp_candidate(*a, *b));
            all.truncate(k);
        }
        all.sort_unstable_by(|a, b| cmp_candidate(*a, *b));
        all
    }
}
