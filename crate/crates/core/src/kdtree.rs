//! Euclidean k-d tree backing [`crate::nn_index::Index`].
//!
//! In one dimension the tree degenerates to a sorted array, which is
//! searched by expanding outwards from the query's insertion position.

use std::collections::BinaryHeap;

use crate::nn_index::{cmp_candidate, euclidean, PointSet};

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone)]
pub(crate) enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

#[derive(Debug, Clone)]
pub(crate) enum KdTree {
    /// Points sorted by (coordinate, index).
    Line { order: Vec<usize>, xs: Vec<f64> },
    Tree { perm: Vec<usize>, nodes: Vec<Node> },
}

impl KdTree {
    pub(crate) fn build(points: &PointSet) -> Self {
        if points.dim() == 1 {
            let mut order: Vec<usize> = (0..points.len()).collect();
            let xs = points.coords();
            order.sort_unstable_by(|&a, &b| xs[a].total_cmp(&xs[b]).then(a.cmp(&b)));
            let sorted = order.iter().map(|&i| xs[i]).collect();
            return KdTree::Line { order, xs: sorted };
        }
        let mut perm: Vec<usize> = (0..points.len()).collect();
        let mut nodes = Vec::new();
        let len = perm.len();
        build_node(points, &mut perm, 0, len, &mut nodes);
        KdTree::Tree { perm, nodes }
    }

    pub(crate) fn knn(&self, points: &PointSet, query: &[f64], k: usize) -> Vec<(f64, usize)> {
        match self {
            KdTree::Line { order, xs } => line_knn(order, xs, query[0], k),
            KdTree::Tree { perm, nodes } => {
                let mut heap = BinaryHeap::with_capacity(k + 1);
                search(points, perm, nodes, 0, query, k, &mut heap);
                let mut out: Vec<(f64, usize)> = heap.into_iter().map(|c| (c.0, c.1)).collect();
                out.sort_unstable_by(|a, b| cmp_candidate(*a, *b));
                out
            }
        }
    }
}

fn build_node(
    points: &PointSet,
    perm: &mut [usize],
    start: usize,
    end: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let id = nodes.len();
    if end - start <= LEAF_SIZE {
        nodes.push(Node::Leaf { start, end });
        return id;
    }
    // split on the axis of largest spread
    let dim = points.dim();
    let mut best = (0, f64::NEG_INFINITY);
    for axis in 0..dim {
        let (lo, hi) = perm[start..end].iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            let c = points.point(i)[axis];
            (lo.min(c), hi.max(c))
        });
        if hi - lo > best.1 {
            best = (axis, hi - lo);
        }
    }
    let axis = best.0;
    let mid = start + (end - start) / 2;
    perm[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
        points.point(a)[axis].total_cmp(&points.point(b)[axis])
    });
    let value = points.point(perm[mid])[axis];
    nodes.push(Node::Leaf { start: 0, end: 0 });
    let left = build_node(points, perm, start, mid, nodes);
    let right = build_node(points, perm, mid, end, nodes);
    nodes[id] = Node::Split { axis, value, left, right };
    id
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate(f64, usize);

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        cmp_candidate((self.0, self.1), (other.0, other.1))
    }
}

fn search(
    points: &PointSet,
    perm: &[usize],
    nodes: &[Node],
    node: usize,
    query: &[f64],
    k: usize,
    heap: &mut BinaryHeap<Candidate>,
) {
    match nodes[node] {
        Node::Leaf { start, end } => {
            for &i in &perm[start..end] {
                let c = Candidate(euclidean(query, points.point(i)), i);
                if heap.len() < k {
                    heap.push(c);
                } else if c < *heap.peek().unwrap() {
                    heap.pop();
                    heap.push(c);
                }
            }
        }
        Node::Split { axis, value, left, right } => {
            let diff = query[axis] - value;
            let (near, far) = if diff <= 0.0 { (left, right) } else { (right, left) };
            search(points, perm, nodes, near, query, k, heap);
            // the far side can only hold points at distance >= |diff|; keep
            // exploring on equality so index ties are still resolved
            if heap.len() < k || diff.abs() <= heap.peek().unwrap().0 {
                search(points, perm, nodes, far, query, k, heap);
            }
        }
    }
}

/// Walks outwards from a position in the sorted array, yielding candidates
/// in (distance, index) order. Runs of equal distance are buffered and
/// emitted by ascending index.
struct Side<'a> {
    order: &'a [usize],
    xs: &'a [f64],
    q: f64,
    /// next position to read, moving left when `leftward`
    cursor: isize,
    leftward: bool,
    block: Vec<usize>,
    block_dist: f64,
    block_pos: usize,
}

impl<'a> Side<'a> {
    fn dist_at(&self, pos: isize) -> Option<f64> {
        if pos < 0 || pos as usize >= self.xs.len() {
            None
        } else {
            Some(euclidean(&[self.q], &[self.xs[pos as usize]]))
        }
    }

    fn step(&self) -> isize {
        if self.leftward {
            -1
        } else {
            1
        }
    }

    fn head(&mut self) -> Option<(f64, usize)> {
        if self.block_pos >= self.block.len() {
            let d = self.dist_at(self.cursor)?;
            self.block.clear();
            self.block_pos = 0;
            self.block_dist = d;
            while let Some(dn) = self.dist_at(self.cursor) {
                if dn != d {
                    break;
                }
                self.block.push(self.order[self.cursor as usize]);
                self.cursor += self.step();
            }
            self.block.sort_unstable();
        }
        Some((self.block_dist, self.block[self.block_pos]))
    }

    fn advance(&mut self) {
        self.block_pos += 1;
    }
}

fn line_knn(order: &[usize], xs: &[f64], q: f64, k: usize) -> Vec<(f64, usize)> {
    let p = xs.partition_point(|&x| x < q) as isize;
    let mut left = Side {
        order,
        xs,
        q,
        cursor: p - 1,
        leftward: true,
        block: Vec::new(),
        block_dist: 0.0,
        block_pos: 0,
    };
    let mut right = Side {
        order,
        xs,
        q,
        cursor: p,
        leftward: false,
        block: Vec::new(),
        block_dist: 0.0,
        block_pos: 0,
    };
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let take_left = match (left.head(), right.head()) {
            (Some(l), Some(r)) => cmp_candidate(l, r).is_lt(),
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => break,
        };
        if take_left {
            out.push(left.head().unwrap());
            left.advance();
        } else {
            out.push(right.head().unwrap());
            right.advance();
        }
    }
    out
}
