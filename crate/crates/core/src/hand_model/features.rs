//! Dense matching encoding: classical multidimensional scaling of surface
//! geodesic distances.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{DMatrix, Vector3};

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All-pairs shortest-path distances over an undirected graph whose edges
/// are weighted by Euclidean length.
pub fn geodesic_distances(vertices: &[Vector3<f64>], edges: &[(usize, usize)]) -> DMatrix<f64> {
    let n = vertices.len();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(a, b) in edges {
        let w = (vertices[a] - vertices[b]).norm();
        adj[a].push((b, w));
        adj[b].push((a, w));
    }
    let mut out = DMatrix::from_element(n, n, f64::INFINITY);
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    for src in 0..n {
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        dist[src] = 0.0;
        heap.push(Entry(0.0, src));
        while let Some(Entry(d, u)) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &(v, w) in &adj[u] {
                let nd = d + w;
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(Entry(nd, v));
                }
            }
        }
        for (j, d) in dist.iter().enumerate() {
            out[(src, j)] = *d;
        }
    }
    out
}

/// Classical MDS: top-`dims` coordinates of the double-centered squared
/// distance matrix. Only the first three dimensions are returned.
pub fn mds_embedding(distances: &DMatrix<f64>, dims: usize) -> Vec<Vector3<f64>> {
    let n = distances.nrows();
    let sq = distances.map(|d| d * d);
    let row_mean: Vec<f64> = (0..n).map(|i| sq.row(i).mean()).collect();
    let total = row_mean.iter().sum::<f64>() / n as f64;
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_mean[i] - row_mean[j] + total));
    let eig = b.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &c| eig.eigenvalues[c].total_cmp(&eig.eigenvalues[a]));
    let mut out = vec![Vector3::zeros(); n];
    for (axis, &k) in order.iter().take(dims.min(3)).enumerate() {
        let scale = eig.eigenvalues[k].max(0.0).sqrt();
        for (i, o) in out.iter_mut().enumerate() {
            o[axis] = eig.eigenvectors[(i, k)] * scale;
        }
    }
    out
}

/// Per-axis min-max normalization into `[0, 1]^3`.
pub(crate) fn normalize_unit_cube(points: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
    let mut lo = Vector3::repeat(f64::INFINITY);
    let mut hi = Vector3::repeat(f64::NEG_INFINITY);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let span = (hi - lo).map(|s| if s > 0.0 { s } else { 1.0 });
    points
        .iter()
        .map(|p| (p - lo).component_div(&span).map(|c| c.clamp(0.0, 1.0)))
        .collect()
}
