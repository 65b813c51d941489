//! The four radial disk families (boundary collapse, time blow-up, bubble,
//! spline), their meshes and slabs, and their limit spaces as quotients of
//! finite metric spaces.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convergence::{gh_upper_from_uniform, gh_upper_via_map, sample_points};
use crate::error::{Error, Result};
use crate::geodesic::{distance_matrix, DistanceMatrix, Graph, PointId};
use crate::length::FixedLength;
use crate::manifold::{
    conformal_reduce, disk_mesh, DiskMeshBuilder, Lapse, MetricField, RadialZone, SpatialMesh, StaticSpacetime,
};
use crate::nulldist::{null_distance_matrix, time_ticks, SpacetimePoint};
use crate::swif::SwifCase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExampleId {
    #[serde(rename = "ex31-space-collapse")]
    SpaceCollapse,
    #[serde(rename = "ex32-time-blowup")]
    TimeBlowup,
    #[serde(rename = "ex33-bubble")]
    Bubble,
    #[serde(rename = "ex34-spline")]
    Spline,
}

impl ExampleId {
    pub const ALL: [ExampleId; 4] = [
        ExampleId::SpaceCollapse,
        ExampleId::TimeBlowup,
        ExampleId::Bubble,
        ExampleId::Spline,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExampleId::SpaceCollapse => "ex31-space-collapse",
            ExampleId::TimeBlowup => "ex32-time-blowup",
            ExampleId::Bubble => "ex33-bubble",
            ExampleId::Spline => "ex34-spline",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            ExampleId::SpaceCollapse => "spatial factor 1/j in a boundary collar; boundary collapses to the time axis",
            ExampleId::TimeBlowup => "lapse j in a boundary collar; same null distance as the collapse family",
            ExampleId::Bubble => "factor j on the r < 1/j core; a unit bubble hangs off the time axis",
            ExampleId::Spline => "critical blow-up 1/(r(1 - ln r)); taxi square attached to the time axis",
        }
    }

    /// j values used by experiments.
    pub fn default_ladder(self) -> &'static [f64] {
        match self {
            ExampleId::Spline => &[1e2, 1e3, 1e4],
            _ => &[10.0, 20.0, 50.0, 100.0],
        }
    }
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExampleId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExampleId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::UnknownExample(s.to_string()))
    }
}

/// What the profile argument measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RadialVariable {
    /// `s = 1 - |x|`.
    BoundaryDistance,
    /// `r = |x|`.
    Radius,
}

/// Piecewise radial function of one family member.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialProfile {
    kind: ExampleId,
    j: f64,
    lambda: f64,
}

fn check_j(j: f64) -> Result<()> {
    if !(j >= 2.0) || !j.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "family index j must be at least 2, got {j}"
        )));
    }
    Ok(())
}

/// Spatial factor `f_j`: `1/j` on `s <= 1/j`, linear up to 1 at `s = 3/(2j)`.
/// Evaluated as `1 / h_j` of [`family_time_blowup`] so the two families
/// reduce to bitwise equal metrics.
pub fn family_no_control_space(j: f64) -> Result<RadialProfile> {
    check_j(j)?;
    Ok(RadialProfile {
        kind: ExampleId::SpaceCollapse,
        j,
        lambda: 0.0,
    })
}

/// Lapse `h_j`: `j` on `s <= 1/j`, reciprocal-linear down to 1 at `s = 3/(2j)`.
pub fn family_time_blowup(j: f64) -> Result<RadialProfile> {
    check_j(j)?;
    Ok(RadialProfile {
        kind: ExampleId::TimeBlowup,
        j,
        lambda: 0.0,
    })
}

/// `j` on `r <= 1/j`, then `max(1, j exp(-2 j^2 (r - 1/j)))` up to `3/(2j)`.
pub fn family_bubble(j: f64) -> Result<RadialProfile> {
    check_j(j)?;
    Ok(RadialProfile {
        kind: ExampleId::Bubble,
        j,
        lambda: 0.0,
    })
}

/// Cap `j^l / (1 + l ln j)` on `r <= j^-l`, `1/(r(1 - ln r))` up to `1/j`,
/// then `max(1, A exp(-2 j^2 (r - 1/j)))` with `A = j/(1 + ln j)`.
pub fn family_spline(j: f64, lambda: f64) -> Result<RadialProfile> {
    check_j(j)?;
    if !(lambda > 1.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "spline exponent must exceed 1, got {lambda}"
        )));
    }
    Ok(RadialProfile {
        kind: ExampleId::Spline,
        j,
        lambda,
    })
}

fn collar_lapse(j: f64, branch: usize, s: f64) -> f64 {
    match branch {
        0 => j,
        1 => 1.0 / (1.0 / j + (1.0 - 1.0 / j) * (s - 1.0 / j) * 2.0 * j),
        _ => 1.0,
    }
}

impl RadialProfile {
    pub fn kind(&self) -> ExampleId {
        self.kind
    }

    pub fn j(&self) -> f64 {
        self.j
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn variable(&self) -> RadialVariable {
        match self.kind {
            ExampleId::SpaceCollapse | ExampleId::TimeBlowup => RadialVariable::BoundaryDistance,
            _ => RadialVariable::Radius,
        }
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        let j = self.j;
        match self.kind {
            ExampleId::Spline => vec![j.powf(-self.lambda), 1.0 / j, 1.5 / j],
            _ => vec![1.0 / j, 1.5 / j],
        }
    }

    /// Formula of branch `i` evaluated anywhere.
    pub fn branch(&self, i: usize, x: f64) -> f64 {
        let j = self.j;
        match self.kind {
            ExampleId::TimeBlowup => collar_lapse(j, i, x),
            ExampleId::SpaceCollapse => 1.0 / collar_lapse(j, i, x),
            ExampleId::Bubble => match i {
                0 => j,
                1 => (j * (-2.0 * j * j * (x - 1.0 / j)).exp()).max(1.0),
                _ => 1.0,
            },
            ExampleId::Spline => {
                let l = self.lambda;
                match i {
                    0 => j.powf(l) / (1.0 + l * j.ln()),
                    1 => 1.0 / (x * (1.0 - x.ln())),
                    2 => (j / (1.0 + j.ln()) * (-2.0 * j * j * (x - 1.0 / j)).exp()).max(1.0),
                    _ => 1.0,
                }
            }
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        let i = self.breakpoints().iter().take_while(|&&b| x > b).count();
        self.branch(i, x)
    }

    /// Value at a chart point of the unit disk.
    pub fn at(&self, coord: &[f64]) -> f64 {
        let r = coord.iter().map(|c| c * c).sum::<f64>().sqrt();
        match self.variable() {
            RadialVariable::BoundaryDistance => self.value((1.0 - r).max(0.0)),
            RadialVariable::Radius => self.value(r),
        }
    }

    /// Largest relative jump between neighbouring branches at a breakpoint.
    pub fn continuity_residual(&self) -> f64 {
        self.breakpoints()
            .iter()
            .enumerate()
            .map(|(i, &b)| {
                let (l, r) = (self.branch(i, b), self.branch(i + 1, b));
                (l - r).abs() / l.abs().max(1.0)
            })
            .fold(0.0, f64::max)
    }
}

pub const DEFAULT_SPLINE_LAMBDA: f64 = 1.2;

/// A family at a fixed mesh resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Family {
    pub id: ExampleId,
    /// Base level of the polar mesh; feature bands get `4 * 2^level` rings.
    pub level: u32,
    pub spline_lambda: f64,
}

impl Family {
    pub fn new(id: ExampleId, level: u32) -> Self {
        Family {
            id,
            level,
            spline_lambda: DEFAULT_SPLINE_LAMBDA,
        }
    }

    pub fn with_spline_lambda(mut self, lambda: f64) -> Self {
        self.spline_lambda = lambda;
        self
    }

    pub fn profile(&self, j: f64) -> Result<RadialProfile> {
        match self.id {
            ExampleId::SpaceCollapse => family_no_control_space(j),
            ExampleId::TimeBlowup => family_time_blowup(j),
            ExampleId::Bubble => family_bubble(j),
            ExampleId::Spline => family_spline(j, self.spline_lambda),
        }
    }

    /// Whether a chart point lies where the j-th member differs from flat.
    pub fn in_feature(&self, j: f64, coord: &[f64]) -> bool {
        let r = coord.iter().map(|c| c * c).sum::<f64>().sqrt();
        match self.id {
            ExampleId::SpaceCollapse | ExampleId::TimeBlowup => 1.0 - r < 1.5 / j,
            _ => r < 1.5 / j,
        }
    }

    pub fn mesh_builder(&self, j: f64) -> Result<DiskMeshBuilder> {
        let p = self.profile(j)?;
        let rings = 4usize << self.level;
        let band = (2.0 / j).min(1.0);
        let b = DiskMeshBuilder::new(self.level);
        Ok(match self.id {
            // the collar is long and thin: stretch its cells along the circle
            ExampleId::SpaceCollapse | ExampleId::TimeBlowup => b.max_aspect(4.0).zone(RadialZone::Uniform {
                from: 1.0 - band,
                to: 1.0,
                intervals: rings,
            }),
            ExampleId::Bubble => b.zone(RadialZone::Uniform {
                from: 0.0,
                to: band,
                intervals: rings,
            }),
            ExampleId::Spline => {
                let cap = p.breakpoints()[0];
                b.zone(RadialZone::Uniform {
                    from: 0.0,
                    to: cap,
                    intervals: 4,
                })
                .zone(RadialZone::Geometric {
                    from: cap,
                    to: band,
                    ratio: 1.0 + 4.0 / rings as f64,
                })
            }
        })
    }

    pub fn mesh(&self, j: f64) -> Result<SpatialMesh> {
        self.mesh_builder(j)?.build()
    }

    /// The j-th member on `[0, 1] x mesh`.
    pub fn spacetime(&self, j: f64, mesh: Arc<SpatialMesh>) -> Result<StaticSpacetime> {
        let p = self.profile(j)?;
        let values: Vec<f64> = (0..mesh.len()).map(|v| p.at(mesh.coord(v))).collect();
        let flat = MetricField::identity(&mesh);
        match self.id {
            ExampleId::TimeBlowup => StaticSpacetime::new(0.0, 1.0, mesh, flat, Lapse::new(values)?),
            _ => {
                let sigma = MetricField::conformal(&flat, &values)?;
                StaticSpacetime::product(0.0, 1.0, mesh, sigma)
            }
        }
    }

    /// Member and flat limit on the member's own mesh.
    pub fn swif_case(&self, j: f64) -> Result<SwifCase> {
        let mesh = Arc::new(self.mesh(j)?);
        let approx = self.spacetime(j, mesh.clone())?;
        let limit = flat_slab(mesh)?;
        Ok(SwifCase { j, approx, limit })
    }
}

/// `-dt^2 + sigma_flat` on `[0, 1] x mesh`.
pub fn flat_slab(mesh: Arc<SpatialMesh>) -> Result<StaticSpacetime> {
    let sigma = MetricField::identity(&mesh);
    StaticSpacetime::product(0.0, 1.0, mesh, sigma)
}

/// Vertex `index` of component `component` of a [`GluedSpace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct GluedPoint {
    pub component: usize,
    pub index: usize,
}

impl GluedPoint {
    pub fn new(component: usize, index: usize) -> Self {
        GluedPoint { component, index }
    }
}

/// Disjoint union of metric graphs with identified vertices. Distances are
/// shortest paths in the quotient graph, so a chain may jump between
/// identified vertices at no cost.
#[derive(Debug, Clone)]
pub struct GluedSpace {
    graph: Graph,
    offsets: Vec<usize>,
    class_of: Vec<usize>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

impl GluedSpace {
    pub fn new(components: &[Graph], identifications: &[(GluedPoint, GluedPoint)]) -> Result<Self> {
        let mut offsets = Vec::with_capacity(components.len() + 1);
        let mut total = 0;
        for c in components {
            offsets.push(total);
            total += c.len();
        }
        offsets.push(total);
        let global = |p: GluedPoint| -> Result<usize> {
            match components.get(p.component) {
                Some(c) if p.index < c.len() => Ok(offsets[p.component] + p.index),
                _ => Err(Error::InvalidArgument(format!("glued point {p:?} does not exist"))),
            }
        };
        let mut parent: Vec<usize> = (0..total).collect();
        for &(a, b) in identifications {
            let (ra, rb) = (find(&mut parent, global(a)?), find(&mut parent, global(b)?));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut class_of = vec![usize::MAX; total];
        let mut classes = 0;
        for g in 0..total {
            let r = find(&mut parent, g);
            if class_of[r] == usize::MAX {
                class_of[r] = classes;
                classes += 1;
            }
            class_of[g] = class_of[r];
        }
        let mut edges = Vec::new();
        for (c, comp) in components.iter().enumerate() {
            for v in 0..comp.len() {
                for (w, len) in comp.neighbors(v) {
                    if v < w {
                        edges.push((class_of[offsets[c] + v], class_of[offsets[c] + w], len));
                    }
                }
            }
        }
        Ok(GluedSpace {
            graph: Graph::from_edges(classes, &edges)?,
            offsets,
            class_of,
        })
    }

    pub fn point_count(&self) -> usize {
        self.class_of.len()
    }

    pub fn class_count(&self) -> usize {
        self.graph.len()
    }

    /// The quotient graph.
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn class(&self, p: GluedPoint) -> Result<usize> {
        match self.offsets.get(p.component + 1) {
            Some(&end) if self.offsets[p.component] + p.index < end => {
                Ok(self.class_of[self.offsets[p.component] + p.index])
            }
            _ => Err(Error::InvalidArgument(format!("glued point {p:?} does not exist"))),
        }
    }

    pub fn distance_fixed(&self, p: GluedPoint, q: GluedPoint) -> Result<FixedLength> {
        let (x, y) = (self.class(p)?, self.class(q)?);
        let d = self.graph.shortest_paths(x)[y];
        if d.is_infinite() {
            return Err(Error::Disconnected {
                from: x,
                unreachable: y,
            });
        }
        Ok(d)
    }

    /// Distances between `points`; disconnected pairs are an error.
    pub fn matrix(&self, points: &[GluedPoint]) -> Result<DistanceMatrix> {
        let classes = points.iter().map(|&p| self.class(p)).collect::<Result<Vec<_>>>()?;
        let rows: Vec<Vec<FixedLength>> = classes
            .par_iter()
            .map(|&c| {
                let row = self.graph.shortest_paths(c);
                classes.iter().map(|&k| row[k]).collect()
            })
            .collect();
        let mut values = Vec::with_capacity(points.len() * points.len());
        for (i, row) in rows.into_iter().enumerate() {
            if let Some(k) = row.iter().position(|d| d.is_infinite()) {
                return Err(Error::Disconnected {
                    from: classes[i],
                    unreachable: classes[k],
                });
            }
            values.extend(row);
        }
        let ids = points
            .iter()
            .map(|p| PointId::vertex(self.offsets[p.component] + p.index))
            .collect();
        DistanceMatrix::from_fixed(ids, values)
    }
}

pub fn glued_distance(space: &GluedSpace, p: GluedPoint, q: GluedPoint) -> Result<f64> {
    Ok(space.distance_fixed(p, q)?.to_f64())
}

/// Inputs for [`build_limit_space`]. Slabs are `[0, 1] x disk` with the
/// flat null distance, sampled at `times`.
#[derive(Debug, Clone)]
pub struct LimitParams {
    pub mesh: Arc<SpatialMesh>,
    pub times: Vec<f64>,
    /// Main-slab vertices that may be queried (taxi limit only; the other
    /// limits answer for every vertex).
    pub probes: Vec<usize>,
    /// Mesh level of the bubble disk.
    pub core_level: u32,
    /// Depth factor of the taxi square.
    pub taxi_factor: f64,
    pub taxi_steps: usize,
}

impl LimitParams {
    pub fn new(mesh: Arc<SpatialMesh>, times: Vec<f64>) -> Self {
        LimitParams {
            mesh,
            times,
            probes: Vec::new(),
            core_level: 3,
            taxi_factor: DEFAULT_SPLINE_LAMBDA,
            taxi_steps: 16,
        }
    }
}

/// Spatial position of a limit point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Place {
    /// Vertex of the main disk.
    Main(usize),
    /// Vertex of the bubble disk.
    Core(usize),
    /// Depth index of the taxi square; `taxi_steps` is the attached edge.
    Taxi(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct LimitPoint {
    /// Index into the limit's `times`.
    pub time: usize,
    pub place: Place,
}

/// Limit space of a family over a finite set of times.
///
/// The collapse and bubble limits are products: the quotient of the slab by
/// time-preserving identifications has null distance
/// `max(d_Q(x, y), |t - s|)` with `d_Q` the spatial quotient (boundary
/// collapsed to a point, or the bubble boundary glued to the center), so
/// only the spatial quotient is stored. The taxi limit is not a product and
/// is glued directly from a complete graph on the probed slab points and a
/// lattice for the square.
#[derive(Debug, Clone)]
pub struct LimitSpace {
    pub id: ExampleId,
    pub times: Vec<f64>,
    pub space: GluedSpace,
    pub core_mesh: Option<Arc<SpatialMesh>>,
    probes: Vec<usize>,
    taxi_steps: usize,
}

const MAIN: usize = 0;
const SECOND: usize = 1;

impl LimitSpace {
    fn glued(&self, p: LimitPoint) -> Result<GluedPoint> {
        if p.time >= self.times.len() {
            return Err(Error::InvalidArgument(format!(
                "time index {} outside the limit",
                p.time
            )));
        }
        let bad = || Error::InvalidArgument(format!("{p:?} is not a point of the {} limit", self.id));
        match (self.id, p.place) {
            (ExampleId::Spline, Place::Main(v)) => {
                let i = self.probes.iter().position(|&u| u == v).ok_or_else(bad)?;
                Ok(GluedPoint::new(MAIN, p.time * (self.probes.len() + 1) + i))
            }
            (ExampleId::Spline, Place::Taxi(i)) if i <= self.taxi_steps => {
                Ok(GluedPoint::new(SECOND, p.time * (self.taxi_steps + 1) + i))
            }
            (ExampleId::Spline, _) => Err(bad()),
            (_, Place::Main(v)) => Ok(GluedPoint::new(MAIN, v)),
            (ExampleId::Bubble, Place::Core(u)) => Ok(GluedPoint::new(SECOND, u)),
            _ => Err(bad()),
        }
    }

    pub fn matrix(&self, points: &[LimitPoint]) -> Result<DistanceMatrix> {
        let glued = points.iter().map(|&p| self.glued(p)).collect::<Result<Vec<_>>>()?;
        if self.id == ExampleId::Spline {
            return self.space.matrix(&glued);
        }
        let mut spatial_points = Vec::new();
        let idx: Vec<usize> = glued.iter().map(|&g| push_unique(&mut spatial_points, g)).collect();
        let spatial = self.space.matrix(&spatial_points)?;
        let st: Vec<SpacetimePoint> = points
            .iter()
            .zip(&idx)
            .map(|(p, &x)| SpacetimePoint::new(self.times[p.time], x))
            .collect();
        null_distance_matrix(&spatial, &st)
    }

    pub fn distance(&self, p: LimitPoint, q: LimitPoint) -> Result<f64> {
        Ok(self.matrix(&[p, q])?.get(0, 1))
    }
}

fn center_vertex(mesh: &SpatialMesh) -> usize {
    mesh.nearest_vertex(&vec![0.0; mesh.dim()])
}

/// Collapse quotient (space collapse, time blow-up), bubble disk glued by
/// its boundary circles to the time axis (bubble), or taxi square attached
/// along depth 1 to the time axis (spline).
pub fn build_limit_space(id: ExampleId, params: &LimitParams) -> Result<LimitSpace> {
    let mesh = &params.mesh;
    let times = &params.times;
    if times.is_empty() {
        return Err(Error::InvalidArgument("limit space needs at least one time".into()));
    }
    let flat = Graph::from_mesh(mesh, &MetricField::identity(mesh))?;
    let mut core_mesh = None;
    let mut probes = Vec::new();
    let space = match id {
        ExampleId::SpaceCollapse | ExampleId::TimeBlowup => {
            let b = mesh.boundary_vertices();
            let ident: Vec<_> = b
                .iter()
                .map(|&v| (GluedPoint::new(MAIN, b[0]), GluedPoint::new(MAIN, v)))
                .collect();
            GluedSpace::new(&[flat], &ident)?
        }
        ExampleId::Bubble => {
            let core = Arc::new(disk_mesh(params.core_level)?);
            let center = center_vertex(mesh);
            let ident: Vec<_> = core
                .boundary_vertices()
                .iter()
                .map(|&v| (GluedPoint::new(MAIN, center), GluedPoint::new(SECOND, v)))
                .collect();
            let g = Graph::from_mesh(&core, &MetricField::identity(&core))?;
            core_mesh = Some(core);
            GluedSpace::new(&[flat, g], &ident)?
        }
        ExampleId::Spline => {
            if !(params.taxi_factor > 0.0) || params.taxi_steps == 0 {
                return Err(Error::InvalidArgument(
                    "taxi square needs a positive factor and steps".into(),
                ));
            }
            if let Some(&v) = params.probes.iter().find(|&&v| v >= mesh.len()) {
                return Err(Error::InvalidArgument(format!("probe vertex {v} outside the mesh")));
            }
            probes = params.probes.clone();
            probes.sort_unstable();
            probes.dedup();
            let mut vertices = probes.clone();
            vertices.push(center_vertex(mesh));
            let nv = vertices.len();
            let spatial = flat.distance_matrix(&vertices)?;
            let points: Vec<SpacetimePoint> = times
                .iter()
                .flat_map(|&t| (0..nv).map(move |x| SpacetimePoint::new(t, x)))
                .collect();
            let slab = Graph::complete(&null_distance_matrix(&spatial, &points)?)?;
            let ns = params.taxi_steps + 1;
            let step = FixedLength::from_f64(params.taxi_factor / params.taxi_steps as f64)?;
            let ticks = times.iter().map(|&t| time_ticks(t)).collect::<Result<Vec<_>>>()?;
            let mut edges = Vec::new();
            for k in 0..times.len() {
                for i in 0..ns {
                    if i + 1 < ns {
                        edges.push((k * ns + i, k * ns + i + 1, step));
                    }
                    if k + 1 < times.len() {
                        let dt = FixedLength::from_ticks(ticks[k].abs_diff(ticks[k + 1]));
                        edges.push((k * ns + i, (k + 1) * ns + i, dt));
                    }
                }
            }
            let taxi = Graph::from_edges(times.len() * ns, &edges)?;
            let ident: Vec<_> = (0..times.len())
                .map(|k| {
                    (
                        GluedPoint::new(MAIN, k * nv + nv - 1),
                        GluedPoint::new(SECOND, k * ns + ns - 1),
                    )
                })
                .collect();
            GluedSpace::new(&[slab, taxi], &ident)?
        }
    };
    Ok(LimitSpace {
        id,
        times: times.clone(),
        space,
        core_mesh,
        probes,
        taxi_steps: params.taxi_steps,
    })
}

/// Sampling for [`gh_to_limit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GhParams {
    /// Spatial samples, half inside the feature region.
    pub samples: usize,
    /// Time levels `k / time_steps`; a power of two keeps them exact.
    pub time_steps: usize,
    pub core_level: u32,
    pub taxi_steps: usize,
    pub seed: u64,
}

impl Default for GhParams {
    fn default() -> Self {
        GhParams {
            samples: 48,
            time_steps: 8,
            core_level: 3,
            taxi_steps: 16,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GhRow {
    pub j: f64,
    /// Correspondence bound to the family's limit space.
    pub gh_to_limit: f64,
    /// Half the uniform distance to the flat slab on the same points.
    pub gh_to_flat: f64,
    pub points: usize,
}

/// Spatial samples of the j-th mesh: half in the feature region, half
/// outside, deterministic in `seed`.
pub fn family_samples(family: &Family, j: f64, mesh: &SpatialMesh, count: usize, seed: u64) -> Vec<usize> {
    let (inside, outside): (Vec<usize>, Vec<usize>) =
        (0..mesh.len()).partition(|&v| family.in_feature(j, mesh.coord(v)));
    let half = count / 2;
    let mut out: Vec<usize> = sample_points(inside.len(), half, seed)
        .into_iter()
        .map(|i| inside[i])
        .collect();
    out.extend(
        sample_points(outside.len(), count - out.len().min(count), seed ^ 0x5bd1_e995)
            .into_iter()
            .map(|i| outside[i]),
    );
    out.sort_unstable();
    out.dedup();
    out
}

/// GH upper bounds from the j-th member to its limit space and to the flat slab.
pub fn gh_to_limit(family: &Family, j: f64, params: &GhParams) -> Result<GhRow> {
    if params.time_steps == 0 || params.samples < 2 {
        return Err(Error::InvalidArgument(
            "need at least two samples and one time step".into(),
        ));
    }
    let mesh = Arc::new(family.mesh(j)?);
    let reduced = conformal_reduce(&family.spacetime(j, mesh.clone())?);
    let samples = family_samples(family, j, &mesh, params.samples, params.seed);
    let times: Vec<f64> = (0..=params.time_steps)
        .map(|k| k as f64 / params.time_steps as f64)
        .collect();
    let points: Vec<SpacetimePoint> = times
        .iter()
        .flat_map(|&t| (0..samples.len()).map(move |x| SpacetimePoint::new(t, x)))
        .collect();
    let dj = null_distance_matrix(&distance_matrix(&mesh, &reduced.sigma, &samples)?, &points)?;
    let flat = null_distance_matrix(
        &distance_matrix(&mesh, &MetricField::identity(&mesh), &samples)?,
        &points,
    )?;
    let gh_to_flat = gh_upper_from_uniform(&dj, &flat)?;

    // where each sample lands in the limit
    let core = match family.id {
        ExampleId::Bubble => Some(disk_mesh(params.core_level)?),
        _ => None,
    };
    let cap = family.profile(j)?.breakpoints()[0];
    let mut probes = Vec::new();
    let places: Vec<Place> = samples
        .iter()
        .map(|&v| {
            let x = mesh.coord(v);
            let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
            match family.id {
                ExampleId::Bubble if r < 1.0 / j => {
                    let scaled: Vec<f64> = x.iter().map(|c| c * j).collect();
                    Place::Core(core.as_ref().expect("bubble core").nearest_vertex(&scaled))
                }
                ExampleId::Spline if r < 1.0 / j => {
                    // radial length from r out to 1/j, in taxi depth units
                    let len = ((1.0 - r.max(cap).ln()) / (1.0 + j.ln())).ln();
                    let depth = (1.0 - len / family.spline_lambda).clamp(0.0, 1.0);
                    Place::Taxi((depth * params.taxi_steps as f64).round() as usize)
                }
                _ => {
                    probes.push(v);
                    Place::Main(v)
                }
            }
        })
        .collect();
    let mut lp = LimitParams::new(mesh.clone(), times.clone());
    lp.probes = probes;
    lp.core_level = params.core_level;
    lp.taxi_factor = family.spline_lambda;
    lp.taxi_steps = params.taxi_steps;
    let limit = build_limit_space(family.id, &lp)?;
    let mut targets = Vec::new();
    let mut map = Vec::with_capacity(points.len());
    for time in 0..times.len() {
        for &place in &places {
            map.push(push_unique(&mut targets, LimitPoint { time, place }));
        }
    }
    let target = limit.matrix(&targets)?;
    Ok(GhRow {
        j,
        gh_to_limit: gh_upper_via_map(&dj, &target, &map)?,
        gh_to_flat,
        points: points.len(),
    })
}

fn push_unique<T: PartialEq + Copy>(list: &mut Vec<T>, x: T) -> usize {
    match list.iter().position(|&y| y == x) {
        Some(i) => i,
        None => {
            list.push(x);
            list.len() - 1
        }
    }
}

/// `int_0^1 f^p 2 pi r dr` of a radial-variable profile by composite
/// Gauss-Legendre on each branch (the boundary-distance variable is
/// converted to `r = 1 - s`).
pub fn disk_integral(profile: &RadialProfile, p: f64) -> f64 {
    const NODES: [(f64, f64); 5] = [
        (0.0, 0.568_888_888_888_888_9),
        (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
        (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
        (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
        (0.906_179_845_938_664, 0.236_926_885_056_189_1),
    ];
    let radial = profile.variable() == RadialVariable::Radius;
    let mut cuts: Vec<f64> = profile
        .breakpoints()
        .into_iter()
        .map(|b| if radial { b } else { 1.0 - b })
        .filter(|&b| b > 0.0 && b < 1.0)
        .collect();
    cuts.push(0.0);
    cuts.push(1.0);
    cuts.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        // geometric subdivision resolves the 1/r-type branches near 0
        let pieces = 256;
        let ratio = if a > 0.0 {
            (b / a).powf(1.0 / pieces as f64)
        } else {
            0.0
        };
        for k in 0..pieces {
            let (lo, hi) = if a > 0.0 {
                (
                    a * ratio.powi(k),
                    if k + 1 == pieces { b } else { a * ratio.powi(k + 1) },
                )
            } else {
                (
                    a + (b - a) * k as f64 / pieces as f64,
                    a + (b - a) * (k + 1) as f64 / pieces as f64,
                )
            };
            let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            for (x, wt) in NODES {
                let r = mid + half * x;
                let arg = if radial { r } else { 1.0 - r };
                total += wt * half * profile.value(arg).powf(p) * 2.0 * PI * r;
            }
        }
    }
    total
}
