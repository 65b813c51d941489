//! Null distance on static spacetimes with the coordinate time function.
//!
//! Two routes: the closed form `max(d_sigma~(x, y), |t - s|)` over a
//! spatial distance matrix of the reduced metric `sigma / h^2`, and a
//! brute-force shortest path over a causal grid (the oracle).
//!
//! The grid has time levels `t0 + k * dt`. From every spatial vertex `x`
//! we precompute its reduced-metric ball of radius `window * dt`; each `y`
//! in it at graph distance `d` gives causal edges `(k, x) <-> (k +- m, y)`
//! of weight `m * dt` with `m = ceil(d / dt)`, the shortest time lapse
//! that lets a causal curve cover `d`. Larger lapses are dominated by
//! `m` plus purely temporal steps, so they are implied rather than stored.
//! Every edge weight is at least the spatial graph distance and at least
//! the time change, so the oracle never undershoots the closed form, which
//! is therefore an exact A* heuristic.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geodesic::{DistanceMatrix, Graph, PointId};
use crate::length::FixedLength;
use crate::manifold::{conformal_reduce, StaticSpacetime};

/// Ceiling on `levels * vertices` of a causal grid.
pub const MAX_SPACETIME_VERTICES: usize = 2_000_000;
/// Ceiling on stored cone entries.
pub const MAX_CONE_ENTRIES: usize = 200_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpacetimePoint {
    pub t: f64,
    pub x: usize,
}

impl SpacetimePoint {
    pub fn new(t: f64, x: usize) -> Self {
        SpacetimePoint { t, x }
    }
}

/// Time in signed fixed-point ticks, so time gaps are exact integers.
pub fn time_ticks(t: f64) -> Result<i64> {
    if !t.is_finite() || t.abs() >= FixedLength::MAX_EXACT {
        return Err(Error::InvalidArgument(format!("time {t} out of range")));
    }
    Ok((t * (1u64 << FixedLength::FRACTION_BITS) as f64).round() as i64)
}

fn time_gap(t: f64, s: f64) -> Result<FixedLength> {
    Ok(FixedLength::from_ticks(time_ticks(t)?.abs_diff(time_ticks(s)?)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Orientation {
    Future,
    Past,
}

/// Broken curve through the given points, each piece a causal segment.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseCausalPath {
    pub points: Vec<SpacetimePoint>,
}

impl PiecewiseCausalPath {
    pub fn new(points: Vec<SpacetimePoint>) -> Self {
        PiecewiseCausalPath { points }
    }

    pub fn orientations(&self) -> Vec<Orientation> {
        self.points
            .windows(2)
            .map(|w| {
                if w[1].t >= w[0].t {
                    Orientation::Future
                } else {
                    Orientation::Past
                }
            })
            .collect()
    }
}

/// Sum of `|t_i - t_{i-1}|` over the pieces. A piece is causal when its
/// time change is positive and at least the reduced spatial distance of
/// its endpoints (minus `tol`).
pub fn null_length(path: &PiecewiseCausalPath, spatial: impl Fn(usize, usize) -> f64, tol: f64) -> Result<f64> {
    let mut total = FixedLength::ZERO;
    for (i, w) in path.points.windows(2).enumerate() {
        let dt = time_gap(w[0].t, w[1].t)?;
        let d = spatial(w[0].x, w[1].x);
        if dt == FixedLength::ZERO || dt.to_f64() < d - tol {
            return Err(Error::NonCausalSegment { index: i });
        }
        total += dt;
    }
    Ok(total.to_f64())
}

/// `d + max(0, |t - s| - d)` with `d = d_spatial(p.x, q.x)`; `p.x` and
/// `q.x` index the matrix. Evaluated in fixed point, so it equals
/// `max(d, |t - s|)` exactly.
pub fn null_distance_static(d_spatial: &DistanceMatrix, p: SpacetimePoint, q: SpacetimePoint) -> Result<f64> {
    Ok(null_static_fixed(d_spatial, p, q)?.to_f64())
}

fn null_static_fixed(d_spatial: &DistanceMatrix, p: SpacetimePoint, q: SpacetimePoint) -> Result<FixedLength> {
    if p.x >= d_spatial.len() || q.x >= d_spatial.len() {
        return Err(Error::InvalidArgument("point index outside the distance matrix".into()));
    }
    let d = d_spatial.fixed(p.x, q.x);
    let dt = time_gap(p.t, q.t)?;
    Ok(d + (dt - d))
}

/// Null-distance matrix over spacetime points whose `x` index `d_spatial`.
pub fn null_distance_matrix(d_spatial: &DistanceMatrix, points: &[SpacetimePoint]) -> Result<DistanceMatrix> {
    let ids = points
        .iter()
        .map(|p| {
            Ok(PointId::at(
                d_spatial.points().get(p.x).map(|id| id.vertex).unwrap_or(p.x),
                FixedLength::from_ticks(time_ticks(p.t)?.max(0) as u64),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut err = None;
    let m = DistanceMatrix::from_fn(ids, |i, j| match null_static_fixed(d_spatial, points[i], points[j]) {
        Ok(v) => v,
        Err(e) => {
            err = Some(e);
            FixedLength::ZERO
        }
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok(m),
    }
}

/// Grid resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridParams {
    /// Time step; `t1 - t0` must be an integer multiple of it.
    pub time_step: f64,
    /// Cone reach in time steps.
    pub window: u32,
}

impl GridParams {
    /// Largest dyadic step dividing the slab that is at most a quarter of
    /// `spacing`, with the given window. Spacelike returns cost one step of
    /// parity plus one rounding step per cone hop, so the step must sit
    /// well below the spatial resolution.
    pub fn for_spacing(st: &StaticSpacetime, spacing: f64, window: u32) -> Self {
        let mut dt = st.height();
        while dt > 0.25 * spacing {
            dt *= 0.5;
        }
        GridParams { time_step: dt, window }
    }
}

/// `[t0, t1] x M` causal grid for the reduced metric `sigma / h^2`.
#[derive(Debug, Clone)]
pub struct SpacetimeGrid {
    t0: f64,
    dt: FixedLength,
    levels: usize,
    window: u32,
    spatial: Graph,
    cone_offsets: Vec<usize>,
    cone_vertex: Vec<u32>,
    cone_steps: Vec<u32>,
    cell: f64,
}

impl SpacetimeGrid {
    pub fn new(st: &StaticSpacetime, params: GridParams) -> Result<Self> {
        let reduced = conformal_reduce(st);
        let n = reduced.mesh.len();
        let dt = params.time_step;
        if !(dt > 0.0) || params.window == 0 {
            return Err(Error::InvalidArgument("time step and window must be positive".into()));
        }
        let k = st.height() / dt;
        let kr = k.round();
        if (k - kr).abs() > 1e-9 * k.max(1.0) || kr < 1.0 {
            return Err(Error::InvalidArgument(format!(
                "slab height {} is not a multiple of the time step {dt}",
                st.height()
            )));
        }
        let levels = kr as usize + 1;
        let total = levels.saturating_mul(n);
        if total > MAX_SPACETIME_VERTICES {
            return Err(Error::ResourceCap {
                what: "spacetime grid vertices",
                requested: total,
                cap: MAX_SPACETIME_VERTICES,
            });
        }
        let spatial = Graph::from_mesh(&reduced.mesh, &reduced.sigma)?;
        let dt_fixed = FixedLength::from_f64(dt)?;
        if dt_fixed.to_f64() != dt {
            return Err(Error::InvalidArgument(format!(
                "time step {dt} is not representable in fixed point; use a dyadic value"
            )));
        }
        let reach = dt_fixed * params.window as u64;

        let mut cone_offsets = Vec::with_capacity(n + 1);
        let mut cone_vertex = Vec::new();
        let mut cone_steps = Vec::new();
        cone_offsets.push(0);
        for x in 0..n {
            let dist = spatial.shortest_paths_within(x, reach);
            for (y, d) in dist.iter().enumerate() {
                if y == x || d.is_infinite() {
                    continue;
                }
                let m = d.ticks().div_ceil(dt_fixed.ticks());
                cone_vertex.push(y as u32);
                cone_steps.push(m as u32);
            }
            if cone_vertex.len() > MAX_CONE_ENTRIES {
                return Err(Error::ResourceCap {
                    what: "causal cone entries",
                    requested: cone_vertex.len(),
                    cap: MAX_CONE_ENTRIES,
                });
            }
            cone_offsets.push(cone_vertex.len());
        }

        let mut cell = dt;
        for x in 0..n {
            if let Some(shortest) = spatial.neighbors(x).map(|(_, w)| w).min() {
                cell = cell.max(shortest.to_f64());
            }
        }

        Ok(SpacetimeGrid {
            t0: st.t0,
            dt: dt_fixed,
            levels,
            window: params.window,
            spatial,
            cone_offsets,
            cone_vertex,
            cone_steps,
            cell,
        })
    }

    pub(crate) fn dt_fixed(&self) -> FixedLength {
        self.dt
    }

    pub fn time_step(&self) -> f64 {
        self.dt.to_f64()
    }

    pub fn window(&self) -> u32 {
        self.window
    }

    pub fn level_count(&self) -> usize {
        self.levels
    }

    pub fn time_levels(&self) -> Vec<f64> {
        (0..self.levels).map(|k| self.level_time(k)).collect()
    }

    pub fn level_time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt.to_f64()
    }

    pub fn vertex_count(&self) -> usize {
        self.levels * self.spatial.len()
    }

    pub fn spatial_len(&self) -> usize {
        self.spatial.len()
    }

    /// Spatial graph of the reduced metric.
    pub fn spatial_graph(&self) -> &Graph {
        &self.spatial
    }

    /// Resolution scale: the larger of the time step and the longest
    /// shortest-incident-edge in the reduced metric.
    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    /// Number of stored cone entries (for diagnostics and equality checks).
    pub fn cone_entries(&self) -> usize {
        self.cone_vertex.len()
    }

    /// True if both grids hold identical levels, weights and cones.
    pub fn same_as(&self, other: &SpacetimeGrid) -> bool {
        self.t0 == other.t0
            && self.dt == other.dt
            && self.levels == other.levels
            && self.cone_offsets == other.cone_offsets
            && self.cone_vertex == other.cone_vertex
            && self.cone_steps == other.cone_steps
    }

    pub fn level_of(&self, t: f64) -> Result<usize> {
        let k = (t - self.t0) / self.dt.to_f64();
        let kr = k.round();
        if (k - kr).abs() > 1e-9 * k.abs().max(1.0) || kr < 0.0 || kr as usize >= self.levels {
            return Err(Error::InvalidArgument(format!("time {t} is not a grid level")));
        }
        Ok(kr as usize)
    }

    pub(crate) fn check_point(&self, p: SpacetimePoint) -> Result<usize> {
        if p.x >= self.spatial.len() {
            return Err(Error::InvalidArgument(format!("vertex {} out of range", p.x)));
        }
        self.level_of(p.t)
    }

    pub(crate) fn cone(&self, x: usize) -> impl Iterator<Item = (usize, u64)> + '_ {
        let r = self.cone_offsets[x]..self.cone_offsets[x + 1];
        self.cone_vertex[r.clone()]
            .iter()
            .zip(&self.cone_steps[r])
            .map(|(&y, &m)| (y as usize, m as u64))
    }

    /// Shortest causal-grid path; exact in fixed point.
    pub fn oracle_fixed(&self, p: SpacetimePoint, q: SpacetimePoint) -> Result<FixedLength> {
        let kp = self.check_point(p)?;
        let kq = self.check_point(q)?;
        if kp == kq && p.x == q.x {
            return Ok(FixedLength::ZERO);
        }
        let n = self.spatial.len();
        let to_target = self.spatial.shortest_paths(q.x);
        let dt = self.dt;
        // heuristic in ticks: max(spatial distance, time gap)
        let h = |k: usize, x: usize| -> FixedLength {
            let gap = dt * (k.abs_diff(kq) as u64);
            to_target[x].max(gap)
        };
        let idx = |k: usize, x: usize| k * n + x;
        let mut g = vec![FixedLength::INFINITY; self.levels * n];
        let mut heap = BinaryHeap::new();
        g[idx(kp, p.x)] = FixedLength::ZERO;
        heap.push(Reverse((h(kp, p.x), FixedLength::ZERO, kp, p.x)));
        while let Some(Reverse((_, gv, k, x))) = heap.pop() {
            if gv > g[idx(k, x)] {
                continue;
            }
            if k == kq && x == q.x {
                return Ok(gv);
            }
            let mut relax = |k2: usize, y: usize, w: FixedLength, heap: &mut BinaryHeap<_>| {
                let ng = gv + w;
                let i = idx(k2, y);
                if ng < g[i] {
                    g[i] = ng;
                    heap.push(Reverse((ng + h(k2, y), ng, k2, y)));
                }
            };
            if k + 1 < self.levels {
                relax(k + 1, x, dt, &mut heap);
            }
            if k > 0 {
                relax(k - 1, x, dt, &mut heap);
            }
            for (y, m) in self.cone(x) {
                let w = dt * m;
                if k + (m as usize) < self.levels {
                    relax(k + m as usize, y, w, &mut heap);
                }
                if k >= m as usize {
                    relax(k - m as usize, y, w, &mut heap);
                }
            }
        }
        unreachable!("temporal edges connect every level and the spatial graph is connected")
    }

    /// Oracle matrix over grid points.
    pub fn oracle_matrix(&self, points: &[SpacetimePoint]) -> Result<DistanceMatrix> {
        let ids = points
            .iter()
            .map(|p| Ok(PointId::at(p.x, self.dt * self.check_point(*p)? as u64)))
            .collect::<Result<Vec<_>>>()?;
        let pairs: Vec<(usize, usize)> = (0..points.len()).flat_map(|i| (0..i).map(move |j| (i, j))).collect();
        use rayon::prelude::*;
        let vals = pairs
            .par_iter()
            .map(|&(i, j)| self.oracle_fixed(points[i], points[j]))
            .collect::<Result<Vec<_>>>()?;
        let n = points.len();
        let mut values = vec![FixedLength::ZERO; n * n];
        for (&(i, j), v) in pairs.iter().zip(vals) {
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
        DistanceMatrix::from_fixed(ids, values)
    }

    /// Closed-form value on the grid's own spatial graph, for comparison.
    pub fn formula(&self, p: SpacetimePoint, q: SpacetimePoint) -> Result<f64> {
        self.check_point(p)?;
        self.check_point(q)?;
        let d = self.spatial.shortest_paths(p.x)[q.x];
        Ok(d.max(time_gap(p.t, q.t)?).to_f64())
    }
}

/// Shortest path over the causal grid between two grid points.
pub fn null_distance_oracle(grid: &SpacetimeGrid, p: SpacetimePoint, q: SpacetimePoint) -> Result<f64> {
    Ok(grid.oracle_fixed(p, q)?.to_f64())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CausalKind {
    CausalFuture,
    CausalPast,
    Spacelike,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CausalRelation {
    pub kind: CausalKind,
    /// `| |t - s| - d |` lies within one grid cell.
    pub marginal: bool,
}

/// Where `q` sits relative to `p`.
pub fn causal_relation(grid: &SpacetimeGrid, p: SpacetimePoint, q: SpacetimePoint) -> Result<CausalRelation> {
    grid.check_point(p)?;
    grid.check_point(q)?;
    let d = grid.spatial.shortest_paths(p.x)[q.x].to_f64();
    let gap = time_gap(p.t, q.t)?.to_f64();
    let kind = if gap >= d {
        if q.t >= p.t {
            CausalKind::CausalFuture
        } else {
            CausalKind::CausalPast
        }
    } else {
        CausalKind::Spacelike
    };
    Ok(CausalRelation {
        kind,
        marginal: (gap - d).abs() <= grid.cell_size(),
    })
}
