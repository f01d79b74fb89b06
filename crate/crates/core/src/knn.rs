//! k-nearest-neighbor regression with uniform or inverse-distance weights.
//!
//! Neighbors are ranked by `(distance, training index)`, a total order, so
//! all three search structures return the same neighbor list in the same
//! order and produce bit-identical predictions.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    Uniform,
    InverseDistance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    Linear,
    Sorted1d,
    BallTree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnnConfig {
    pub k: usize,
    pub weighting: Weighting,
    pub search: SearchMode,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self { k: 2, weighting: Weighting::InverseDistance, search: SearchMode::BallTree }
    }
}

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Neighbor {
    dist: f64,
    index: usize,
}

impl Eq for Neighbor {}
impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Neighbor {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist.total_cmp(&other.dist).then(self.index.cmp(&other.index))
    }
}

fn euclidean(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq)]
struct Ball {
    center: Vec<f64>,
    radius: f64,
    /// Range into `BallTree::order`.
    start: usize,
    end: usize,
    children: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
struct BallTree {
    order: Vec<usize>,
    nodes: Vec<Ball>,
}

impl BallTree {
    fn build(xs: ArrayView2<'_, f64>) -> Self {
        let mut tree = BallTree { order: (0..xs.nrows()).collect(), nodes: Vec::new() };
        tree.build_node(xs, 0, xs.nrows());
        tree
    }

    fn build_node(&mut self, xs: ArrayView2<'_, f64>, start: usize, end: usize) -> usize {
        let d = xs.ncols();
        let m = (end - start) as f64;
        let mut center = vec![0.0; d];
        for &i in &self.order[start..end] {
            for (c, v) in center.iter_mut().zip(xs.row(i)) {
                *c += v / m;
            }
        }
        let cview = ArrayView1::from(&center[..]);
        let radius = self.order[start..end].iter().map(|&i| euclidean(xs.row(i), cview)).fold(0.0, f64::max);
        let id = self.nodes.len();
        self.nodes.push(Ball { center, radius, start, end, children: None });
        if end - start > LEAF_SIZE {
            // Split on the dimension of largest spread at the median.
            let spread = |j: usize| {
                let (lo, hi) = self.order[start..end]
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| (lo.min(xs[[i, j]]), hi.max(xs[[i, j]])));
                hi - lo
            };
            let dim = (0..d).max_by(|&a, &b| spread(a).total_cmp(&spread(b)).then(b.cmp(&a))).unwrap_or(0);
            let mid = start + (end - start) / 2;
            self.order[start..end].sort_by(|&a, &b| xs[[a, dim]].total_cmp(&xs[[b, dim]]).then(a.cmp(&b)));
            let left = self.build_node(xs, start, mid);
            let right = self.build_node(xs, mid, end);
            self.nodes[id].children = Some((left, right));
        }
        id
    }

    fn query(&self, xs: ArrayView2<'_, f64>, q: ArrayView1<'_, f64>, k: usize) -> Vec<Neighbor> {
        let mut heap: BinaryHeap<Neighbor> = BinaryHeap::with_capacity(k + 1);
        self.visit(0, xs, q, k, &mut heap);
        heap.into_sorted_vec()
    }

    fn visit(&self, id: usize, xs: ArrayView2<'_, f64>, q: ArrayView1<'_, f64>, k: usize, heap: &mut BinaryHeap<Neighbor>) {
        let node = &self.nodes[id];
        let to_center = euclidean(q, ArrayView1::from(&node.center[..]));
        let lower = (to_center - node.radius).max(0.0);
        if heap.len() == k {
            let worst = heap.peek().map_or(f64::INFINITY, |n| n.dist);
            // Slack keeps exact-distance ties reachable despite rounding in `lower`.
            if lower > worst + 1e-12 * worst.max(1.0) {
                return;
            }
        }
        match node.children {
            None => {
                for &i in &self.order[node.start..node.end] {
                    let cand = Neighbor { dist: euclidean(xs.row(i), q), index: i };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if cand < *heap.peek().expect("heap is full") {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
            Some((l, r)) => {
                let dl = euclidean(q, ArrayView1::from(&self.nodes[l].center[..]));
                let dr = euclidean(q, ArrayView1::from(&self.nodes[r].center[..]));
                let (first, second) = if dl <= dr { (l, r) } else { (r, l) };
                self.visit(first, xs, q, k, heap);
                self.visit(second, xs, q, k, heap);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Index {
    Linear,
    /// Training indices sorted by `(x, index)`.
    Sorted(Vec<usize>),
    Ball(BallTree),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    xs: Array2<f64>,
    ys: Array1<f64>,
    cfg: KnnConfig,
    index: Index,
}

pub fn fit_knn(xs: ArrayView2<'_, f64>, ys: ArrayView1<'_, f64>, cfg: &KnnConfig) -> Result<KnnModel> {
    if cfg.k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    if xs.nrows() != ys.len() {
        return Err(invalid("feature rows and targets differ in length"));
    }
    if cfg.k > ys.len() {
        return Err(invalid(format!("k = {} exceeds the {} stored samples", cfg.k, ys.len())));
    }
    let index = match cfg.search {
        SearchMode::Linear => Index::Linear,
        SearchMode::Sorted1d => {
            if xs.ncols() != 1 {
                return Err(invalid("sorted-1d search requires exactly one feature"));
            }
            let mut order: Vec<usize> = (0..ys.len()).collect();
            order.sort_by(|&a, &b| xs[[a, 0]].total_cmp(&xs[[b, 0]]).then(a.cmp(&b)));
            Index::Sorted(order)
        }
        SearchMode::BallTree => Index::Ball(BallTree::build(xs)),
    };
    Ok(KnnModel { xs: xs.to_owned(), ys: ys.to_owned(), cfg: *cfg, index })
}

impl KnnModel {
    pub fn n_samples(&self) -> usize {
        self.ys.len()
    }

    pub fn config(&self) -> &KnnConfig {
        &self.cfg
    }

    fn neighbors(&self, q: ArrayView1<'_, f64>) -> Vec<Neighbor> {
        let k = self.cfg.k;
        match &self.index {
            Index::Linear => {
                let mut all: Vec<Neighbor> = self
                    .xs
                    .rows()
                    .into_iter()
                    .enumerate()
                    .map(|(index, row)| Neighbor { dist: euclidean(row, q), index })
                    .collect();
                all.sort_unstable();
                all.truncate(k);
                all
            }
            Index::Sorted(order) => self.sorted_neighbors(order, q),
            Index::Ball(tree) => tree.query(self.xs.view(), q, k),
        }
    }

    /// Two-pointer expansion around the query's insertion point, then every
    /// point tied with the k-th distance is gathered before the final
    /// `(distance, index)` sort.
    fn sorted_neighbors(&self, order: &[usize], q: ArrayView1<'_, f64>) -> Vec<Neighbor> {
        let k = self.cfg.k;
        let n = order.len();
        let dist = |pos: usize| euclidean(self.xs.row(order[pos]), q);
        let split = order.partition_point(|&i| self.xs[[i, 0]] < q[0]);
        let (mut lo, mut hi) = (split, split); // window [lo, hi)
        while hi - lo < k {
            let take_left = match (lo > 0, hi < n) {
                (true, true) => dist(lo - 1) <= dist(hi),
                (true, false) => true,
                (false, true) => false,
                (false, false) => break,
            };
            if take_left {
                lo -= 1;
            } else {
                hi += 1;
            }
        }
        let kth = (lo..hi).map(dist).fold(0.0, f64::max);
        while lo > 0 && dist(lo - 1) <= kth {
            lo -= 1;
        }
        while hi < n && dist(hi) <= kth {
            hi += 1;
        }
        let mut cands: Vec<Neighbor> = (lo..hi).map(|p| Neighbor { dist: dist(p), index: order[p] }).collect();
        cands.sort_unstable();
        cands.truncate(k);
        cands
    }

    pub fn predict_one(&self, q: ArrayView1<'_, f64>) -> f64 {
        let nb = self.neighbors(q);
        match self.cfg.weighting {
            Weighting::Uniform => nb.iter().map(|n| self.ys[n.index]).sum::<f64>() / nb.len() as f64,
            Weighting::InverseDistance => {
                let exact: Vec<f64> = nb.iter().filter(|n| n.dist == 0.0).map(|n| self.ys[n.index]).collect();
                if !exact.is_empty() {
                    return exact.iter().sum::<f64>() / exact.len() as f64;
                }
                let (num, den) = nb
                    .iter()
                    .fold((0.0, 0.0), |(num, den), n| (num + self.ys[n.index] / n.dist, den + 1.0 / n.dist));
                num / den
            }
        }
    }

    pub fn predict(&self, xs: ArrayView2<'_, f64>) -> Vec<f64> {
        xs.rows().into_iter().map(|r| self.predict_one(r)).collect()
    }
}
