//! Discretized Riemannian manifolds with boundary and the integral
//! quantities of static spacetimes `-h^2 dt^2 + sigma` built over them.
//!
//! Every field is sampled per vertex; integrals use vertex-lumped
//! quadrature (value at the vertex times its cell weight).

mod disk;
pub mod io;

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub use disk::{disk_mesh, DiskMeshBuilder, RadialZone, Ring, RingLayout};

/// Graph discretization of a compact manifold-with-boundary in one chart.
#[derive(Debug, Clone)]
pub struct SpatialMesh {
    dim: usize,
    coords: Vec<f64>,
    edges: Vec<(usize, usize)>,
    boundary: Vec<usize>,
    boundary_facets: Vec<Vec<usize>>,
    cell_weights: Vec<f64>,
    radial: Option<Vec<f64>>,
    layout: Option<RingLayout>,
    // CSR adjacency: neighbours of v are adj[offsets[v]..offsets[v + 1]].
    offsets: Vec<usize>,
    adj: Vec<usize>,
}

/// Raw parts of a mesh, as read from a file or produced by a builder.
#[derive(Debug, Clone, Default)]
pub struct MeshParts {
    pub dim: usize,
    pub vertices: Vec<Vec<f64>>,
    pub edges: Vec<(usize, usize)>,
    pub boundary: Vec<usize>,
    pub boundary_facets: Vec<Vec<usize>>,
    pub cell_weights: Vec<f64>,
    pub radial: Option<Vec<f64>>,
}

impl SpatialMesh {
    /// Validates the mesh invariants: connected edge graph, every boundary
    /// vertex on an edge, positive cell weights.
    pub fn new(parts: MeshParts) -> Result<Self> {
        Self::with_layout(parts, None)
    }

    pub(crate) fn with_layout(parts: MeshParts, layout: Option<RingLayout>) -> Result<Self> {
        let MeshParts {
            dim,
            vertices,
            edges,
            boundary,
            boundary_facets,
            cell_weights,
            radial,
        } = parts;
        if dim == 0 {
            return Err(Error::InvalidMesh("dimension must be at least 1".into()));
        }
        let n = vertices.len();
        if n == 0 {
            return Err(Error::InvalidMesh("mesh has no vertices".into()));
        }
        let mut coords = Vec::with_capacity(n * dim);
        for (i, v) in vertices.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::InvalidMesh(format!(
                    "vertex {i} has {} coordinates, expected {dim}",
                    v.len()
                )));
            }
            coords.extend_from_slice(v);
        }
        if cell_weights.len() != n {
            return Err(Error::InvalidMesh(format!(
                "{} cell weights for {n} vertices",
                cell_weights.len()
            )));
        }
        if let Some(i) = cell_weights.iter().position(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidMesh(format!("cell weight of vertex {i} is not positive")));
        }
        if let Some(r) = &radial {
            if r.len() != n {
                return Err(Error::InvalidMesh("radial coordinate length mismatch".into()));
            }
        }
        let mut norm_edges = Vec::with_capacity(edges.len());
        for &(a, b) in &edges {
            if a >= n || b >= n || a == b {
                return Err(Error::InvalidMesh(format!("bad edge ({a}, {b})")));
            }
            norm_edges.push((a.min(b), a.max(b)));
        }
        norm_edges.sort_unstable();
        norm_edges.dedup();

        let mut degree = vec![0usize; n];
        for &(a, b) in &norm_edges {
            degree[a] += 1;
            degree[b] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for v in 0..n {
            offsets[v + 1] = offsets[v] + degree[v];
        }
        let mut fill = offsets.clone();
        let mut adj = vec![0usize; offsets[n]];
        for &(a, b) in &norm_edges {
            adj[fill[a]] = b;
            fill[a] += 1;
            adj[fill[b]] = a;
            fill[b] += 1;
        }

        let mut boundary = boundary;
        boundary.sort_unstable();
        boundary.dedup();
        for &b in &boundary {
            if b >= n {
                return Err(Error::InvalidMesh(format!("boundary vertex {b} out of range")));
            }
            if degree[b] == 0 && n > 1 {
                return Err(Error::InvalidMesh(format!("boundary vertex {b} lies on no edge")));
            }
        }
        for f in &boundary_facets {
            if f.len() != dim || f.iter().any(|&v| v >= n) {
                return Err(Error::InvalidMesh(format!(
                    "boundary facet {f:?} must list {dim} valid vertices"
                )));
            }
        }

        let mesh = SpatialMesh {
            dim,
            coords,
            edges: norm_edges,
            boundary,
            boundary_facets,
            cell_weights,
            radial,
            layout,
            offsets,
            adj,
        };
        if let Some(v) = mesh.first_unreachable() {
            return Err(Error::Disconnected {
                from: 0,
                unreachable: v,
            });
        }
        Ok(mesh)
    }

    fn first_unreachable(&self) -> Option<usize> {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in self.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.iter().position(|s| !s)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.cell_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cell_weights.is_empty()
    }

    pub fn coord(&self, v: usize) -> &[f64] {
        &self.coords[v * self.dim..(v + 1) * self.dim]
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn boundary_vertices(&self) -> &[usize] {
        &self.boundary
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary.binary_search(&v).is_ok()
    }

    pub fn boundary_facets(&self) -> &[Vec<usize>] {
        &self.boundary_facets
    }

    pub fn cell_weights(&self) -> &[f64] {
        &self.cell_weights
    }

    pub fn cell_weight(&self, v: usize) -> f64 {
        self.cell_weights[v]
    }

    /// Radius (or other radial parameter) attached by the builder.
    pub fn radial(&self) -> Option<&[f64]> {
        self.radial.as_deref()
    }

    /// Polar ring layout, present for meshes built by [`DiskMeshBuilder`].
    pub fn layout(&self) -> Option<&RingLayout> {
        self.layout.as_ref()
    }

    /// Sum of cell weights (coordinate volume of the chart domain).
    pub fn coordinate_volume(&self) -> f64 {
        self.cell_weights.iter().sum()
    }

    pub fn to_parts(&self) -> MeshParts {
        MeshParts {
            dim: self.dim,
            vertices: (0..self.len()).map(|v| self.coord(v).to_vec()).collect(),
            edges: self.edges.clone(),
            boundary: self.boundary.clone(),
            boundary_facets: self.boundary_facets.clone(),
            cell_weights: self.cell_weights.clone(),
            radial: self.radial.clone(),
        }
    }

    /// Vertex nearest to `point` in chart coordinates.
    pub fn nearest_vertex(&self, point: &[f64]) -> usize {
        (0..self.len())
            .map(|v| {
                let d: f64 = self.coord(v).iter().zip(point).map(|(a, b)| (a - b) * (a - b)).sum();
                (d, v)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, v)| v)
            .unwrap_or(0)
    }
}

/// Per-vertex symmetric n×n tensor in chart coordinates, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricField {
    dim: usize,
    data: Vec<f64>,
}

impl MetricField {
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() % (dim * dim) != 0 {
            return Err(Error::InvalidArgument(format!(
                "tensor data of length {} is not a multiple of {dim}x{dim}",
                data.len()
            )));
        }
        Ok(MetricField { dim, data })
    }

    pub fn constant(mesh: &SpatialMesh, tensor: &[f64]) -> Result<Self> {
        let dim = mesh.dim();
        if tensor.len() != dim * dim {
            return Err(Error::InvalidArgument("tensor has wrong size".into()));
        }
        let mut data = Vec::with_capacity(mesh.len() * dim * dim);
        for _ in 0..mesh.len() {
            data.extend_from_slice(tensor);
        }
        Ok(MetricField { dim, data })
    }

    /// The chart's Euclidean metric.
    pub fn identity(mesh: &SpatialMesh) -> Self {
        let dim = mesh.dim();
        let mut eye = vec![0.0; dim * dim];
        for i in 0..dim {
            eye[i * dim + i] = 1.0;
        }
        Self::constant(mesh, &eye).expect("identity has the right shape")
    }

    pub fn from_fn(mesh: &SpatialMesh, mut f: impl FnMut(usize, &[f64]) -> Vec<f64>) -> Result<Self> {
        let dim = mesh.dim();
        let mut data = Vec::with_capacity(mesh.len() * dim * dim);
        for v in 0..mesh.len() {
            let t = f(v, mesh.coord(v));
            if t.len() != dim * dim {
                return Err(Error::InvalidArgument(format!(
                    "tensor at vertex {v} has {} entries",
                    t.len()
                )));
            }
            data.extend_from_slice(&t);
        }
        Ok(MetricField { dim, data })
    }

    /// `base` multiplied pointwise by `factor(v)^2`.
    pub fn conformal(base: &MetricField, factors: &[f64]) -> Result<Self> {
        if factors.len() != base.len() {
            return Err(Error::InvalidArgument(format!(
                "{} conformal factors for {} tensors",
                factors.len(),
                base.len()
            )));
        }
        let block = base.dim * base.dim;
        let mut data = base.data.clone();
        for (v, &c) in factors.iter().enumerate() {
            let c2 = c * c;
            for x in &mut data[v * block..(v + 1) * block] {
                *x *= c2;
            }
        }
        Ok(MetricField { dim: base.dim, data })
    }

    pub fn scaled(&self, c: f64) -> Self {
        MetricField {
            dim: self.dim,
            data: self.data.iter().map(|x| x * c).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of vertices carrying a tensor.
    pub fn len(&self) -> usize {
        self.data.len() / (self.dim * self.dim)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn tensor(&self, v: usize) -> &[f64] {
        let b = self.dim * self.dim;
        &self.data[v * b..(v + 1) * b]
    }

    pub fn row_major(&self) -> &[f64] {
        &self.data
    }

    fn matrix(&self, v: usize) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, self.tensor(v))
    }

    /// Checks symmetry and positive-definiteness at every vertex.
    pub fn validate(&self) -> Result<()> {
        for v in 0..self.len() {
            let t = self.tensor(v);
            let n = self.dim;
            for i in 0..n {
                for j in 0..i {
                    let (a, b) = (t[i * n + j], t[j * n + i]);
                    if (a - b).abs() > 1e-12 * (a.abs() + b.abs()).max(1e-300) {
                        return Err(Error::NotPositiveDefinite { vertex: v });
                    }
                }
            }
            if sqrt_det(&self.matrix(v)).is_none() {
                return Err(Error::NotPositiveDefinite { vertex: v });
            }
        }
        Ok(())
    }

    fn check_mesh(&self, mesh: &SpatialMesh) -> Result<()> {
        if self.dim != mesh.dim() || self.len() != mesh.len() {
            return Err(Error::InvalidArgument(format!(
                "metric of dim {} on {} vertices does not match mesh of dim {} on {} vertices",
                self.dim,
                self.len(),
                mesh.dim(),
                mesh.len()
            )));
        }
        Ok(())
    }

    /// Quadratic form `v^T S v` with `S` the average of the endpoint tensors.
    /// Symmetric in `(a, b)` bit for bit.
    pub fn edge_quadratic(&self, mesh: &SpatialMesh, a: usize, b: usize) -> f64 {
        let n = self.dim;
        let (ta, tb) = (self.tensor(a), self.tensor(b));
        let (xa, xb) = (mesh.coord(a), mesh.coord(b));
        let mut q = 0.0;
        for i in 0..n {
            let vi = xb[i] - xa[i];
            for j in 0..n {
                let vj = xb[j] - xa[j];
                q += vi * (0.5 * (ta[i * n + j] + tb[i * n + j])) * vj;
            }
        }
        q
    }

    /// Length of the straight chart segment from `a` to `b`.
    pub fn edge_length(&self, mesh: &SpatialMesh, a: usize, b: usize) -> f64 {
        self.edge_quadratic(mesh, a, b).max(0.0).sqrt()
    }

    /// True if `self >= c * other` as quadratic forms at every vertex
    /// (up to a relative slack `tol`).
    pub fn dominates(&self, other: &MetricField, c: f64, tol: f64) -> bool {
        if self.dim != other.dim || self.len() != other.len() {
            return false;
        }
        (0..self.len()).all(|v| {
            let diff = self.matrix(v) - other.matrix(v) * c;
            let scale = self.matrix(v).norm().max(f64::MIN_POSITIVE);
            SymmetricEigen::new(diff).eigenvalues.iter().all(|&e| e >= -tol * scale)
        })
    }
}

/// `sqrt(det M)` via Cholesky, `None` if `M` is not positive-definite.
fn sqrt_det(m: &DMatrix<f64>) -> Option<f64> {
    let chol = m.clone().cholesky()?;
    let l = chol.l_dirty();
    Some((0..m.nrows()).map(|i| l[(i, i)]).product())
}

/// Positive scalar lapse `h` per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Lapse(Vec<f64>);

impl Lapse {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((v, &x)) = values.iter().enumerate().find(|(_, x)| !(**x > 0.0) || !x.is_finite()) {
            return Err(Error::NonPositiveLapse { vertex: v, value: x });
        }
        Ok(Lapse(values))
    }

    pub fn unit(n: usize) -> Self {
        Lapse(vec![1.0; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn is_unit(&self) -> bool {
        self.0.iter().all(|&h| h == 1.0)
    }
}

/// `[t0, t1] x M` with `g = -h^2 dt^2 + sigma`.
#[derive(Debug, Clone)]
pub struct StaticSpacetime {
    pub t0: f64,
    pub t1: f64,
    pub mesh: Arc<SpatialMesh>,
    pub sigma: MetricField,
    pub lapse: Lapse,
}

impl StaticSpacetime {
    pub fn new(t0: f64, t1: f64, mesh: Arc<SpatialMesh>, sigma: MetricField, lapse: Lapse) -> Result<Self> {
        if !(t0 < t1) || !t0.is_finite() || !t1.is_finite() {
            return Err(Error::InvalidArgument(format!("time interval [{t0}, {t1}] is empty")));
        }
        sigma.check_mesh(&mesh)?;
        if lapse.values().len() != mesh.len() {
            return Err(Error::InvalidArgument("lapse length does not match mesh".into()));
        }
        Ok(StaticSpacetime {
            t0,
            t1,
            mesh,
            sigma,
            lapse,
        })
    }

    /// Generalized product `-dt^2 + sigma`.
    pub fn product(t0: f64, t1: f64, mesh: Arc<SpatialMesh>, sigma: MetricField) -> Result<Self> {
        let n = mesh.len();
        Self::new(t0, t1, mesh, sigma, Lapse::unit(n))
    }

    pub fn height(&self) -> f64 {
        self.t1 - self.t0
    }
}

/// Replaces `-h^2 dt^2 + sigma` by `-dt^2 + sigma / h^2`; the null
/// distance of the two is the same.
pub fn conformal_reduce(st: &StaticSpacetime) -> StaticSpacetime {
    if st.lapse.is_unit() {
        return st.clone();
    }
    let factors: Vec<f64> = st.lapse.values().iter().map(|h| 1.0 / h).collect();
    let sigma = MetricField::conformal(&st.sigma, &factors).expect("lapse matches metric");
    StaticSpacetime {
        t0: st.t0,
        t1: st.t1,
        mesh: st.mesh.clone(),
        sigma,
        lapse: Lapse::unit(st.mesh.len()),
    }
}

/// Riemannian volume `sum sqrt(det sigma) * w`.
pub fn volume(mesh: &SpatialMesh, metric: &MetricField) -> Result<f64> {
    metric.check_mesh(mesh)?;
    let mut total = 0.0;
    for v in 0..mesh.len() {
        let s = sqrt_det(&metric.matrix(v)).ok_or(Error::NotPositiveDefinite { vertex: v })?;
        total += s * mesh.cell_weight(v);
    }
    Ok(total)
}

/// `sqrt(det sigma) * w` per vertex.
pub fn vertex_volumes(mesh: &SpatialMesh, metric: &MetricField) -> Result<Vec<f64>> {
    metric.check_mesh(mesh)?;
    (0..mesh.len())
        .map(|v| {
            let s = sqrt_det(&metric.matrix(v)).ok_or(Error::NotPositiveDefinite { vertex: v })?;
            Ok(s * mesh.cell_weight(v))
        })
        .collect()
}

/// Volume restricted to vertices selected by `include`.
pub fn partial_volume(mesh: &SpatialMesh, metric: &MetricField, include: impl Fn(usize) -> bool) -> Result<f64> {
    metric.check_mesh(mesh)?;
    let mut total = 0.0;
    for v in (0..mesh.len()).filter(|&v| include(v)) {
        let s = sqrt_det(&metric.matrix(v)).ok_or(Error::NotPositiveDefinite { vertex: v })?;
        total += s * mesh.cell_weight(v);
    }
    Ok(total)
}

/// (n-1)-volume of the boundary; `closed` is set when the mesh has no
/// boundary facets, in which case `value` is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryArea {
    pub value: f64,
    pub closed: bool,
}

pub fn boundary_area(mesh: &SpatialMesh, metric: &MetricField) -> Result<BoundaryArea> {
    metric.check_mesh(mesh)?;
    if mesh.boundary_facets().is_empty() {
        log::warn!("boundary_area called on a mesh without boundary facets");
        return Ok(BoundaryArea {
            value: 0.0,
            closed: true,
        });
    }
    let n = mesh.dim();
    let k = n - 1;
    let mut total = 0.0;
    for facet in mesh.boundary_facets() {
        if k == 0 {
            total += 1.0;
            continue;
        }
        // average tensor over the facet vertices
        let mut avg = DMatrix::<f64>::zeros(n, n);
        for &v in facet {
            avg += metric.matrix(v);
        }
        avg /= facet.len() as f64;
        let x0 = mesh.coord(facet[0]);
        let e = DMatrix::from_fn(n, k, |i, c| mesh.coord(facet[c + 1])[i] - x0[i]);
        let gram = e.transpose() * &avg * &e;
        let det = gram.determinant().max(0.0);
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        total += det.sqrt() / fact;
    }
    Ok(BoundaryArea {
        value: total,
        closed: false,
    })
}

/// Largest |eigenvalue| of `g0^{-1} g1` (operator norm of `g1` measured by `g0`).
pub fn tensor_operator_norm(g1: &[f64], g0: &[f64], dim: usize) -> Option<f64> {
    let m0 = DMatrix::from_row_slice(dim, dim, g0);
    let m1 = DMatrix::from_row_slice(dim, dim, g1);
    let chol = m0.cholesky()?;
    let l = chol.l();
    let linv = l.clone().try_inverse()?;
    let sym = &linv * m1 * linv.transpose();
    let sym = (&sym + sym.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym).eigenvalues;
    Some(eig.iter().fold(0.0f64, |m, e| m.max(e.abs())))
}

/// `sum |g1|_{g0}^{p/2} sqrt(det g0) w` with the operator norm.
pub fn lp_tensor_norm(mesh: &SpatialMesh, g1: &MetricField, g0: &MetricField, p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::InvalidArgument(format!("exponent p must be positive, got {p}")));
    }
    g0.check_mesh(mesh)?;
    g1.check_mesh(mesh)?;
    let mut total = 0.0;
    for v in 0..mesh.len() {
        let m0 = g0.matrix(v);
        let vol = sqrt_det(&m0).ok_or(Error::NotPositiveDefinite { vertex: v })?;
        let norm = tensor_operator_norm(g1.tensor(v), g0.tensor(v), mesh.dim())
            .ok_or(Error::NotPositiveDefinite { vertex: v })?;
        total += norm.powf(p / 2.0) * vol * mesh.cell_weight(v);
    }
    Ok(total)
}
