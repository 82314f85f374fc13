//! Graph-based association: KNN graphs and minimum spanning trees built from
//! dissimilarities, the common-edge count statistic, and its permutation
//! test.

use std::collections::BTreeSet;

use crate::error::{AssocError, Result};
use crate::geometry::SquareMatrix;
use crate::inference::{permutation_test, PermutationStatistic, TestPlan, TestResult};

/// How a proximity graph was built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    /// k nearest neighbors, stored undirected (union of directed choices).
    Knn(usize),
    /// k successive edge-disjoint minimum spanning trees; k > 1 is an
    /// experimental extension, the usual statistic uses k = 1.
    Mst(usize),
}

/// Undirected edge set over n observations.
#[derive(Debug, Clone)]
pub struct NeighborGraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    kind: GraphKind,
}

fn norm_edge(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

impl NeighborGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
}

/// Undirected union of each node's k nearest neighbors. Distance ties are
/// broken by smaller index so the construction is deterministic.
pub fn knn_graph(d: &SquareMatrix, k: usize) -> Result<NeighborGraph> {
    let n = d.n();
    if k < 1 || k > n.saturating_sub(1) {
        return Err(AssocError::InvalidK { k, n });
    }
    let values = d.values();
    let mut edges = BTreeSet::new();
    let mut order: Vec<usize> = Vec::with_capacity(n - 1);
    for i in 0..n {
        order.clear();
        order.extend((0..n).filter(|&j| j != i));
        order.sort_by(|&a, &b| {
            values[(i, a)]
                .partial_cmp(&values[(i, b)])
                .unwrap()
                .then(a.cmp(&b))
        });
        for &j in order.iter().take(k) {
            edges.insert(norm_edge(i, j));
        }
    }
    Ok(NeighborGraph {
        n,
        edges,
        kind: GraphKind::Knn(k),
    })
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            false
        } else {
            self.0[ra] = rb;
            true
        }
    }
}

/// Minimum spanning tree by Kruskal's algorithm; ties broken by
/// lexicographic edge order.
pub fn mst(d: &SquareMatrix) -> Result<NeighborGraph> {
    k_mst(d, 1)
}

/// k successive edge-disjoint minimum spanning trees (orthogonal MSTs).
pub fn k_mst(d: &SquareMatrix, k: usize) -> Result<NeighborGraph> {
    let n = d.n();
    if n < 2 {
        return Err(AssocError::TooFewObservations { needed: 2, found: n });
    }
    if k < 1 || n.saturating_sub(1) * k > n * (n - 1) / 2 {
        return Err(AssocError::InvalidK { k, n });
    }
    let values = d.values();
    let mut all: Vec<(usize, usize)> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            all.push((i, j));
        }
    }
    all.sort_by(|&(a, b), &(c, e)| {
        values[(a, b)]
            .partial_cmp(&values[(c, e)])
            .unwrap()
            .then((a, b).cmp(&(c, e)))
    });
    let mut edges = BTreeSet::new();
    for _ in 0..k {
        let mut uf = UnionFind::new(n);
        let mut taken = 0;
        for &(i, j) in &all {
            if edges.contains(&(i, j)) {
                continue;
            }
            if uf.union(i, j) {
                edges.insert((i, j));
                taken += 1;
                if taken == n - 1 {
                    break;
                }
            }
        }
        if taken != n - 1 {
            return Err(AssocError::DegenerateTable(format!(
                "cannot build {k} edge-disjoint spanning trees on {n} nodes"
            )));
        }
    }
    Ok(NeighborGraph {
        n,
        edges,
        kind: GraphKind::Mst(k),
    })
}

/// Number of edges shared by two graphs over the same observations.
pub fn common_edges(g1: &NeighborGraph, g2: &NeighborGraph) -> Result<usize> {
    if g1.n != g2.n {
        return Err(AssocError::DimensionMismatch(format!(
            "graphs over {} and {} nodes",
            g1.n, g2.n
        )));
    }
    Ok(g1.edges.intersection(&g2.edges).count())
}

/// Common-edge statistic with node relabeling of the second graph.
pub struct GraphStatistic {
    n: usize,
    edges1: BTreeSet<(usize, usize)>,
    edges2: Vec<(usize, usize)>,
    observed: f64,
}

/// Prepares the Friedman-Rafsky-style common-edge statistic for the two
/// dissimilarity matrices.
pub fn graph_statistic(
    dx: &SquareMatrix,
    dy: &SquareMatrix,
    kind: GraphKind,
) -> Result<GraphStatistic> {
    if dx.n() != dy.n() {
        return Err(AssocError::DimensionMismatch(format!(
            "{} vs {} observations",
            dx.n(),
            dy.n()
        )));
    }
    let build = |d: &SquareMatrix| -> Result<NeighborGraph> {
        match kind {
            GraphKind::Knn(k) => knn_graph(d, k),
            GraphKind::Mst(k) => k_mst(d, k),
        }
    };
    let g1 = build(dx)?;
    let g2 = build(dy)?;
    let observed = common_edges(&g1, &g2)? as f64;
    Ok(GraphStatistic {
        n: dx.n(),
        edges1: g1.edges,
        edges2: g2.edges.into_iter().collect(),
        observed,
    })
}

impl PermutationStatistic for GraphStatistic {
    fn n(&self) -> usize {
        self.n
    }

    fn observed(&self) -> f64 {
        self.observed
    }

    fn permuted(&self, perm: &[usize]) -> f64 {
        self.edges2
            .iter()
            .filter(|&&(i, j)| self.edges1.contains(&norm_edge(perm[i], perm[j])))
            .count() as f64
    }
}

/// Builds both graphs and tests the common-edge count by permuting the node
/// labels of the second graph.
pub fn graph_test(
    dx: &SquareMatrix,
    dy: &SquareMatrix,
    kind: GraphKind,
    plan: &TestPlan,
) -> Result<TestResult> {
    let stat = graph_statistic(dx, dy, kind)?;
    permutation_test(&stat, plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{pairwise_distance, DataTable};
    use nalgebra::DMatrix;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn line_distances(points: &[f64]) -> SquareMatrix {
        let n = points.len();
        let m = DMatrix::from_fn(n, n, |i, j| (points[i] - points[j]).abs());
        SquareMatrix::distance(m).unwrap()
    }

    #[test]
    fn knn_collinear_points() {
        let d = line_distances(&[0.0, 1.0, 3.0]);
        let g = knn_graph(&d, 1).unwrap();
        let expected: BTreeSet<_> = [(0, 1), (1, 2)].into_iter().collect();
        assert_eq!(g.edges(), &expected);
    }

    #[test]
    fn knn_full_k_is_complete() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let pts: Vec<f64> = (0..6).map(|_| rng.gen()).collect();
        let d = line_distances(&pts);
        let g = knn_graph(&d, 5).unwrap();
        assert_eq!(g.edge_count(), 15);
    }

    #[test]
    fn knn_duplicate_points_deterministic() {
        let d = line_distances(&[0.0, 0.0, 0.0, 1.0]);
        let a = knn_graph(&d, 1).unwrap();
        let b = knn_graph(&d, 1).unwrap();
        assert_eq!(a.edges(), b.edges());
        // index tie-break: node 0 picks node 1, nodes 1 and 2 pick node 0
        assert!(a.edges().contains(&(0, 1)));
    }

    #[test]
    fn knn_invalid_k() {
        let d = line_distances(&[0.0, 1.0, 2.0]);
        assert!(matches!(knn_graph(&d, 0), Err(AssocError::InvalidK { .. })));
        assert!(matches!(knn_graph(&d, 3), Err(AssocError::InvalidK { .. })));
    }

    #[test]
    fn knn_degree_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let pts: Vec<f64> = (0..10).map(|_| rng.gen()).collect();
        let d = line_distances(&pts);
        for k in 1..5 {
            let g = knn_graph(&d, k).unwrap();
            let n = 10;
            assert!(g.edge_count() >= (n * k).div_ceil(2));
            assert!(g.edge_count() <= n * k);
        }
    }

    #[test]
    fn mst_unique_tree() {
        let m = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0]);
        let d = SquareMatrix::distance(m).unwrap();
        let g = mst(&d).unwrap();
        let expected: BTreeSet<_> = [(0, 1), (1, 2)].into_iter().collect();
        assert_eq!(g.edges(), &expected);
    }

    #[test]
    fn mst_two_points() {
        let d = line_distances(&[0.0, 2.0]);
        let g = mst(&d).unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn mst_weight_matches_bruteforce() {
        // exhaustive check over all labeled spanning trees via Prufer sequences
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for n in [4usize, 5, 6] {
            let pts: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen(), rng.gen()]).collect();
            let t = DataTable::from_rows(&pts).unwrap();
            let d = pairwise_distance(&t, 1.0).unwrap();
            let g = mst(&d).unwrap();
            let weight: f64 = g.edges().iter().map(|&(i, j)| d.values()[(i, j)]).sum();
            let best = bruteforce_mst_weight(d.values());
            assert!((weight - best).abs() < 1e-12, "n={n}: {weight} vs {best}");
        }
    }

    fn bruteforce_mst_weight(d: &DMatrix<f64>) -> f64 {
        let n = d.nrows();
        let mut best = f64::INFINITY;
        let total = n.pow((n - 2) as u32);
        for code in 0..total {
            // decode a Prufer sequence into a tree
            let mut seq = Vec::with_capacity(n - 2);
            let mut c = code;
            for _ in 0..(n - 2) {
                seq.push(c % n);
                c /= n;
            }
            let mut degree = vec![1usize; n];
            for &s in &seq {
                degree[s] += 1;
            }
            let mut weight = 0.0;
            let mut deg = degree.clone();
            let mut seq_iter = seq.iter();
            let mut leaves: std::collections::BinaryHeap<std::cmp::Reverse<usize>> = (0..n)
                .filter(|&i| deg[i] == 1)
                .map(std::cmp::Reverse)
                .collect();
            for _ in 0..(n - 2) {
                let std::cmp::Reverse(leaf) = leaves.pop().unwrap();
                let &s = seq_iter.next().unwrap();
                weight += d[(leaf, s)];
                deg[s] -= 1;
                if deg[s] == 1 {
                    leaves.push(std::cmp::Reverse(s));
                }
            }
            let std::cmp::Reverse(a) = leaves.pop().unwrap();
            let std::cmp::Reverse(b) = leaves.pop().unwrap();
            weight += d[(a, b)];
            best = best.min(weight);
        }
        best
    }

    #[test]
    fn common_edges_basics() {
        let d = line_distances(&[0.0, 1.0, 3.0, 7.0]);
        let g = knn_graph(&d, 2).unwrap();
        assert_eq!(common_edges(&g, &g).unwrap(), g.edge_count());
        let other = line_distances(&[0.0, 1.0, 3.0]);
        let g3 = knn_graph(&other, 1).unwrap();
        assert!(matches!(
            common_edges(&g, &g3),
            Err(AssocError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn monotone_transform_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let pts: Vec<Vec<f64>> = (0..12).map(|_| vec![rng.gen(), rng.gen()]).collect();
        let t = DataTable::from_rows(&pts).unwrap();
        let d = pairwise_distance(&t, 1.0).unwrap();
        let cubed = SquareMatrix::distance(d.values().map(|v| v * v * v)).unwrap();
        for k in [1usize, 3] {
            assert_eq!(
                knn_graph(&d, k).unwrap().edges(),
                knn_graph(&cubed, k).unwrap().edges()
            );
        }
        assert_eq!(mst(&d).unwrap().edges(), mst(&cubed).unwrap().edges());
    }

    #[test]
    fn simultaneous_relabeling_preserves_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let n = 10;
        let pts1: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen(), rng.gen()]).collect();
        let pts2: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen(), rng.gen()]).collect();
        let d1 = pairwise_distance(&DataTable::from_rows(&pts1).unwrap(), 1.0).unwrap();
        let d2 = pairwise_distance(&DataTable::from_rows(&pts2).unwrap(), 1.0).unwrap();
        let base = graph_statistic(&d1, &d2, GraphKind::Knn(3)).unwrap();
        // relabel both inputs by the same permutation
        let perm: Vec<usize> = vec![3, 1, 4, 0, 9, 5, 8, 2, 7, 6];
        let relabel = |d: &SquareMatrix| {
            SquareMatrix::distance(DMatrix::from_fn(n, n, |i, j| {
                d.values()[(perm[i], perm[j])]
            }))
            .unwrap()
        };
        let relabeled = graph_statistic(&relabel(&d1), &relabel(&d2), GraphKind::Knn(3)).unwrap();
        assert_eq!(base.observed(), relabeled.observed());
    }

    #[test]
    fn graph_test_identical_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let pts: Vec<Vec<f64>> = (0..30).map(|_| vec![rng.gen(), rng.gen()]).collect();
        let t = DataTable::from_rows(&pts).unwrap();
        let d = pairwise_distance(&t, 1.0).unwrap();
        let res = graph_test(&d, &d, GraphKind::Knn(3), &TestPlan::permutation(199, 9)).unwrap();
        assert!((res.p_value - 1.0 / 200.0).abs() < 1e-12);
    }

    #[test]
    fn k_mst_edge_disjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        let pts: Vec<Vec<f64>> = (0..8).map(|_| vec![rng.gen(), rng.gen()]).collect();
        let t = DataTable::from_rows(&pts).unwrap();
        let d = pairwise_distance(&t, 1.0).unwrap();
        let g1 = mst(&d).unwrap();
        let g2 = k_mst(&d, 2).unwrap();
        assert_eq!(g2.edge_count(), 2 * 7);
        assert!(g1.edges().is_subset(g2.edges()));
    }
}
