//! Shortest-path distances on weighted graphs and Riemannian distance
//! matrices on meshes.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::length::FixedLength;
use crate::manifold::{MetricField, SpatialMesh};

/// Undirected graph in CSR form with fixed-point edge weights.
#[derive(Debug, Clone)]
pub struct Graph {
    offsets: Vec<usize>,
    adj: Vec<usize>,
    weights: Vec<FixedLength>,
}

impl Graph {
    /// Builds from an undirected edge list; parallel edges keep the
    /// smallest weight.
    pub fn from_edges(n: usize, edges: &[(usize, usize, FixedLength)]) -> Result<Self> {
        let mut directed: Vec<(usize, usize, FixedLength)> = Vec::with_capacity(2 * edges.len());
        for &(a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidArgument(format!("edge ({a}, {b}) out of range")));
            }
            if a == b {
                continue;
            }
            directed.push((a, b, w));
            directed.push((b, a, w));
        }
        directed.sort_unstable();
        directed.dedup_by(|x, y| x.0 == y.0 && x.1 == y.1);
        let mut offsets = vec![0usize; n + 1];
        for &(a, _, _) in &directed {
            offsets[a + 1] += 1;
        }
        for v in 0..n {
            offsets[v + 1] += offsets[v];
        }
        Ok(Graph {
            offsets,
            adj: directed.iter().map(|e| e.1).collect(),
            weights: directed.iter().map(|e| e.2).collect(),
        })
    }

    /// Complete graph on the points of `d`, weighted by `d`.
    pub fn complete(d: &DistanceMatrix) -> Result<Self> {
        let n = d.len();
        let mut edges = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for k in 0..i {
                edges.push((i, k, d.fixed(i, k)));
            }
        }
        Self::from_edges(n, &edges)
    }

    /// Mesh graph with edge lengths measured by `metric`.
    pub fn from_mesh(mesh: &SpatialMesh, metric: &MetricField) -> Result<Self> {
        if metric.len() != mesh.len() || metric.dim() != mesh.dim() {
            return Err(Error::InvalidArgument("metric does not match mesh".into()));
        }
        let edges = mesh
            .edges()
            .iter()
            .map(|&(a, b)| Ok((a, b, FixedLength::from_f64(metric.edge_length(mesh, a, b))?)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_edges(mesh.len(), &edges)
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, FixedLength)> + '_ {
        let r = self.offsets[v]..self.offsets[v + 1];
        self.adj[r.clone()].iter().copied().zip(self.weights[r].iter().copied())
    }

    /// Single-source shortest paths; unreachable vertices get `INFINITY`.
    pub fn shortest_paths(&self, source: usize) -> Vec<FixedLength> {
        self.shortest_paths_within(source, FixedLength::INFINITY)
    }

    /// Shortest paths, abandoning the search beyond `limit`.
    pub fn shortest_paths_within(&self, source: usize, limit: FixedLength) -> Vec<FixedLength> {
        let mut dist = vec![FixedLength::INFINITY; self.len()];
        let mut heap = BinaryHeap::new();
        dist[source] = FixedLength::ZERO;
        heap.push(Reverse((FixedLength::ZERO, source)));
        while let Some(Reverse((d, v))) = heap.pop() {
            if d > dist[v] {
                continue;
            }
            for (w, len) in self.neighbors(v) {
                let nd = d + len;
                if nd < dist[w] && nd <= limit {
                    dist[w] = nd;
                    heap.push(Reverse((nd, w)));
                }
            }
        }
        dist
    }

    /// Distances from each source to every vertex, in parallel.
    pub fn rows(&self, sources: &[usize]) -> Result<Vec<Vec<FixedLength>>> {
        if let Some(&s) = sources.iter().find(|&&s| s >= self.len()) {
            return Err(Error::InvalidArgument(format!("source {s} out of range")));
        }
        let rows: Vec<Vec<FixedLength>> = sources.par_iter().map(|&s| self.shortest_paths(s)).collect();
        for (i, row) in rows.iter().enumerate() {
            if let Some(u) = row.iter().position(|d| d.is_infinite()) {
                return Err(Error::Disconnected {
                    from: sources[i],
                    unreachable: u,
                });
            }
        }
        Ok(rows)
    }

    /// Distance matrix between `points` (graph vertices).
    pub fn distance_matrix(&self, points: &[usize]) -> Result<DistanceMatrix> {
        let rows = self.rows(points)?;
        let n = points.len();
        let mut values = Vec::with_capacity(n * n);
        for row in &rows {
            values.extend(points.iter().map(|&p| row[p]));
        }
        DistanceMatrix::from_fixed(points.iter().map(|&v| PointId::vertex(v)).collect(), values)
    }
}

/// Label of a sample point: a vertex, optionally tagged with a time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PointId {
    pub vertex: usize,
    /// Time tag in fixed-point ticks.
    pub time: Option<FixedLength>,
}

impl PointId {
    pub fn vertex(v: usize) -> Self {
        PointId { vertex: v, time: None }
    }

    pub fn at(v: usize, t: FixedLength) -> Self {
        PointId {
            vertex: v,
            time: Some(t),
        }
    }
}

impl Serialize for FixedLength {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.to_f64())
    }
}

impl<'de> Deserialize<'de> for FixedLength {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let x = f64::deserialize(d)?;
        FixedLength::from_f64(x).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.time {
            None => write!(f, "v{}", self.vertex),
            Some(t) => write!(f, "v{}@{}", self.vertex, t),
        }
    }
}

/// Symmetric matrix of pairwise distances on a finite point set.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    points: Vec<PointId>,
    values: Vec<FixedLength>,
}

impl DistanceMatrix {
    /// Checks zero diagonal and exact symmetry.
    pub fn from_fixed(points: Vec<PointId>, values: Vec<FixedLength>) -> Result<Self> {
        let n = points.len();
        if values.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "{} values for {n} points",
                values.len()
            )));
        }
        for i in 0..n {
            if values[i * n + i] != FixedLength::ZERO {
                return Err(Error::InvalidArgument(format!("nonzero diagonal at {i}")));
            }
            for j in 0..i {
                if values[i * n + j] != values[j * n + i] {
                    return Err(Error::InvalidArgument(format!("asymmetric entry ({i}, {j})")));
                }
                if values[i * n + j].is_infinite() {
                    return Err(Error::Disconnected {
                        from: i,
                        unreachable: j,
                    });
                }
            }
        }
        Ok(DistanceMatrix { points, values })
    }

    /// Quantizes a dense `f64` matrix (row-major) to fixed point.
    pub fn from_f64(points: Vec<PointId>, values: &[f64]) -> Result<Self> {
        let fixed = values
            .iter()
            .map(|&x| FixedLength::from_f64(x))
            .collect::<Result<Vec<_>>>()?;
        Self::from_fixed(points, fixed)
    }

    /// Builds from a symmetric function of index pairs (evaluated once per pair).
    pub fn from_fn(points: Vec<PointId>, mut f: impl FnMut(usize, usize) -> FixedLength) -> Result<Self> {
        let n = points.len();
        let mut values = vec![FixedLength::ZERO; n * n];
        for i in 0..n {
            for j in 0..i {
                let d = f(i, j);
                values[i * n + j] = d;
                values[j * n + i] = d;
            }
        }
        Self::from_fixed(points, values)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[PointId] {
        &self.points
    }

    pub fn fixed(&self, i: usize, j: usize) -> FixedLength {
        self.values[i * self.len() + j]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.fixed(i, j).to_f64()
    }

    pub fn map(&self, f: impl Fn(FixedLength) -> FixedLength) -> Result<Self> {
        let n = self.len();
        Self::from_fn(self.points.clone(), |i, j| f(self.values[i * n + j]))
    }

    /// Restriction to a subset of indices.
    pub fn select(&self, idx: &[usize]) -> Self {
        let m = idx.len();
        let mut values = Vec::with_capacity(m * m);
        for &i in idx {
            values.extend(idx.iter().map(|&j| self.fixed(i, j)));
        }
        DistanceMatrix {
            points: idx.iter().map(|&i| self.points[i]).collect(),
            values,
        }
    }

    /// Number of ordered triples violating the triangle inequality.
    pub fn triangle_violations(&self) -> usize {
        let n = self.len();
        let mut bad = 0;
        for i in 0..n {
            for j in 0..n {
                let dij = self.fixed(i, j);
                for k in 0..n {
                    if dij > self.fixed(i, k) + self.fixed(k, j) {
                        bad += 1;
                    }
                }
            }
        }
        bad
    }

    /// CSV with a header row of point ids; the first column repeats them.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("point");
        for p in &self.points {
            let _ = write!(out, ",{p}");
        }
        out.push('\n');
        for (i, p) in self.points.iter().enumerate() {
            let _ = write!(out, "{p}");
            for j in 0..self.len() {
                let _ = write!(out, ",{:?}", self.get(i, j));
            }
            out.push('\n');
        }
        out
    }
}

/// Distance matrix between mesh vertices under `metric`.
pub fn distance_matrix(mesh: &SpatialMesh, metric: &MetricField, sources: &[usize]) -> Result<DistanceMatrix> {
    Graph::from_mesh(mesh, metric)?.distance_matrix(sources)
}

/// Largest entry.
pub fn diameter(d: &DistanceMatrix) -> f64 {
    d.values.iter().copied().max().unwrap_or(FixedLength::ZERO).to_f64()
}

/// Halves the spacing of a polar mesh. Old vertex `(ring i, sector k)`
/// maps to `(ring 2i, sector 2k)`; see [`embedding`].
pub fn refine(mesh: &SpatialMesh) -> Result<SpatialMesh> {
    let layout = mesh
        .layout()
        .ok_or_else(|| Error::InvalidArgument("refine needs a mesh with a ring layout".into()))?;
    layout.refined().build()
}

/// Index in `refine(mesh)` of each vertex of `mesh`.
pub fn embedding(mesh: &SpatialMesh) -> Result<Vec<usize>> {
    let layout = mesh
        .layout()
        .ok_or_else(|| Error::InvalidArgument("embedding needs a mesh with a ring layout".into()))?;
    let fine = layout.refined();
    let (s0, s1) = (layout.ring_starts(), fine.ring_starts());
    let mut map = Vec::with_capacity(mesh.len());
    for (i, ring) in layout.rings.iter().enumerate() {
        for k in 0..ring.sectors {
            map.push(s1[2 * i] + if i == 0 { 0 } else { 2 * k });
        }
    }
    debug_assert_eq!(map.len(), s0[layout.rings.len()]);
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::disk_mesh;

    #[test]
    fn single_point_diameter() {
        let d = DistanceMatrix::from_fixed(vec![PointId::vertex(0)], vec![FixedLength::ZERO]).unwrap();
        assert_eq!(diameter(&d), 0.0);
    }

    #[test]
    fn flat_disk_diameter() {
        let m = disk_mesh(4).unwrap();
        let id = MetricField::identity(&m);
        let b = m.boundary_vertices();
        let pts = [b[0], b[b.len() / 2], b[b.len() / 4], b[3 * b.len() / 4], 0];
        let d = distance_matrix(&m, &id, &pts).unwrap();
        assert!((diameter(&d) - 2.0).abs() < 0.04, "{}", diameter(&d));
    }

    #[test]
    fn scaled_metric_doubles_distances() {
        let m = disk_mesh(2).unwrap();
        let id = MetricField::identity(&m);
        let pts: Vec<usize> = (0..m.len()).step_by(7).collect();
        let d1 = distance_matrix(&m, &id, &pts).unwrap();
        let d4 = distance_matrix(&m, &id.scaled(4.0), &pts).unwrap();
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                // each edge rounds to the nearest tick independently
                assert!((d4.get(i, j) - 2.0 * d1.get(i, j)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn axioms_hold_exactly() {
        let m = disk_mesh(1).unwrap();
        let g = MetricField::from_fn(&m, |_, x| {
            vec![1.0 + x[0].abs(), 0.3 * x[1], 0.3 * x[1], 1.0 + x[1] * x[1]]
        })
        .unwrap();
        let pts: Vec<usize> = (0..m.len()).step_by(3).collect();
        let d = distance_matrix(&m, &g, &pts).unwrap();
        assert_eq!(d.triangle_violations(), 0);
    }

    #[test]
    fn refinement_preserves_flags_and_shortens() {
        let m0 = disk_mesh(1).unwrap();
        let m1 = refine(&m0).unwrap();
        let emb = embedding(&m0).unwrap();
        for (v, &e) in emb.iter().enumerate() {
            assert_eq!(m0.coord(v), m1.coord(e));
            assert_eq!(m0.is_boundary(v), m1.is_boundary(e));
        }
        let pts0: Vec<usize> = (0..m0.len()).step_by(5).collect();
        let pts1: Vec<usize> = pts0.iter().map(|&v| emb[v]).collect();
        let d0 = distance_matrix(&m0, &MetricField::identity(&m0), &pts0).unwrap();
        let d1 = distance_matrix(&m1, &MetricField::identity(&m1), &pts1).unwrap();
        for i in 0..pts0.len() {
            for j in 0..pts0.len() {
                // the finer ball graph drops some long coarse edges, so
                // monotonicity holds up to the dilation slack
                assert!(
                    d1.get(i, j) <= d0.get(i, j) * 1.03 + 1e-9,
                    "{} > {}",
                    d1.get(i, j),
                    d0.get(i, j)
                );
            }
        }
    }

    #[test]
    fn error_shrinks_under_refinement() {
        let mut prev = f64::INFINITY;
        let mut mesh = disk_mesh(1).unwrap();
        for _ in 0..3 {
            let b = mesh.boundary_vertices();
            let pts: Vec<usize> = (0..8).map(|k| b[k * b.len() / 8]).collect();
            let d = distance_matrix(&mesh, &MetricField::identity(&mesh), &pts).unwrap();
            let mut err = 0.0f64;
            for i in 0..pts.len() {
                for j in 0..i {
                    let (a, c) = (mesh.coord(pts[i]), mesh.coord(pts[j]));
                    let e = ((a[0] - c[0]).powi(2) + (a[1] - c[1]).powi(2)).sqrt();
                    err = err.max((d.get(i, j) - e) / e);
                }
            }
            assert!(err >= -1e-12);
            assert!(err <= prev * 1.05, "{err} vs {prev}");
            prev = err;
            mesh = refine(&mesh).unwrap();
        }
    }

    #[test]
    fn csv_has_header_of_ids() {
        let m = disk_mesh(0).unwrap();
        let d = distance_matrix(&m, &MetricField::identity(&m), &[0, 5]).unwrap();
        let csv = d.to_csv();
        assert!(csv.starts_with("point,v0,v5\n"));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn disconnected_graph_is_reported() {
        let g = Graph::from_edges(3, &[(0, 1, FixedLength::from_ticks(1))]).unwrap();
        assert!(matches!(g.distance_matrix(&[0, 2]), Err(Error::Disconnected { .. })));
    }
}
