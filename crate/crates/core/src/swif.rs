//! Intrinsic-flat upper bounds: area-factor constants, product
//! overestimates of Hausdorff measures, the glued space Z and the per-j
//! bound table.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::convergence::{good_set_from_cells, sample_cell_volumes, sample_points};
use crate::error::{Error, Result};
use crate::geodesic::{distance_matrix, Graph};
use crate::length::FixedLength;
use crate::manifold::{boundary_area, conformal_reduce, volume, MetricField, StaticSpacetime};
use crate::nulldist::{SpacetimeGrid, SpacetimePoint};

/// Volume of the Euclidean unit n-ball, `pi^{n/2} / Gamma(n/2 + 1)`.
pub fn unit_ball_volume(n: u32) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    // Gamma(n/2 + 1) by the recurrence from Gamma(1) = 1 or Gamma(1/2) = sqrt(pi)
    let (mut x, mut gamma) = if n % 2 == 0 { (1.0, 1.0) } else { (0.5, PI.sqrt()) };
    let target = n as f64 / 2.0 + 1.0;
    while x < target {
        gamma *= x;
        x += 1.0;
    }
    Ok(PI.powf(n as f64 / 2.0) / gamma)
}

/// `C_n = 2^n / omega_n`.
pub fn area_factor(n: u32) -> Result<f64> {
    Ok(2f64.powi(n as i32) / unit_ball_volume(n)?)
}

/// `(V, A)`: `V = vol * (t1 - t0)`, `A = area(boundary) * (t1 - t0) + 2 vol`,
/// all in the reduced metric.
pub fn hausdorff_overestimates(slab: &StaticSpacetime) -> Result<(f64, f64)> {
    let reduced = conformal_reduce(slab);
    let vol = volume(&reduced.mesh, &reduced.sigma)?;
    let area = boundary_area(&reduced.mesh, &reduced.sigma)?.value;
    let height = reduced.height();
    Ok((vol * height, area * height + 2.0 * vol))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlatBoundInputs {
    pub n: u32,
    /// Bound on the (n+1)-measure of the slab.
    pub v: f64,
    /// Bound on the (n+1)-measure outside the good slab.
    pub vp: f64,
    /// Bound on the n-measure of the slab boundary.
    pub a: f64,
    /// Gluing height.
    pub h: f64,
    pub delta: f64,
}

/// `2 C_{n+1} V' + C_{n+2} H V + C_{n+1} H A`.
pub fn flat_bound(inp: &FlatBoundInputs) -> Result<f64> {
    let FlatBoundInputs { n, v, vp, a, h, delta } = *inp;
    if [v, vp, a, h, delta].iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "flat bound inputs must be nonnegative: {inp:?}"
        )));
    }
    if h < delta {
        return Err(Error::InvalidArgument(format!(
            "gluing height {h} is below delta {delta}"
        )));
    }
    let c1 = area_factor(n + 1)?;
    let c2 = area_factor(n + 2)?;
    Ok(2.0 * c1 * vp + c2 * h * v + c1 * h * a)
}

/// Point of Z: a grid point of L and a height level. Levels `0..=H`
/// discretize `[0, H]`; level `H + 1` is the glued copy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZPoint {
    pub point: SpacetimePoint,
    pub level: usize,
}

/// `(L x [0, H]) ⊔ (L x {H + 1})` with `(x, H) ~ (x, H + 1)` for `x` in W.
/// Moves in L are causal-grid hops of `g1` at height 0 and of `g2`
/// elsewhere; height moves cost their height change.
#[derive(Debug, Clone)]
pub struct ZSpace<'a> {
    g1: &'a SpacetimeGrid,
    g2: &'a SpacetimeGrid,
    height_steps: usize,
    dh: FixedLength,
    in_w: Vec<bool>,
    bound_graph: Graph,
}

/// Ceiling on Z-grid vertices.
pub const MAX_Z_VERTICES: usize = 2_000_000;

impl<'a> ZSpace<'a> {
    /// `in_w[x]` selects the spatial vertices of W (W is taken as the full
    /// time slab over them).
    pub fn new(
        g1: &'a SpacetimeGrid,
        g2: &'a SpacetimeGrid,
        height: f64,
        height_steps: usize,
        in_w: Vec<bool>,
    ) -> Result<Self> {
        if g1.level_count() != g2.level_count()
            || g1.spatial_len() != g2.spatial_len()
            || g1.dt_fixed() != g2.dt_fixed()
            || g1.level_time(0) != g2.level_time(0)
        {
            return Err(Error::InvalidArgument("Z needs two grids of the same shape".into()));
        }
        if in_w.len() != g1.spatial_len() {
            return Err(Error::InvalidArgument("W mask does not match the mesh".into()));
        }
        if height_steps == 0 || !(height > 0.0) {
            return Err(Error::InvalidArgument("Z needs a positive height".into()));
        }
        let total = (height_steps + 2).saturating_mul(g1.vertex_count());
        if total > MAX_Z_VERTICES {
            return Err(Error::ResourceCap {
                what: "Z grid vertices",
                requested: total,
                cap: MAX_Z_VERTICES,
            });
        }
        // edge-wise minimum of both spatial graphs: a consistent A* bound
        let n = g1.spatial_len();
        let mut edges = Vec::new();
        for x in 0..n {
            for (y, w) in g1.spatial_graph().neighbors(x).chain(g2.spatial_graph().neighbors(x)) {
                if x < y {
                    edges.push((x, y, w));
                }
            }
        }
        edges.sort_unstable_by_key(|e| (e.0, e.1, e.2));
        let bound_graph = Graph::from_edges(n, &edges)?;
        Ok(ZSpace {
            g1,
            g2,
            height_steps,
            dh: FixedLength::from_f64(height / height_steps as f64)?,
            in_w,
            bound_graph,
        })
    }

    pub fn height_step(&self) -> f64 {
        self.dh.to_f64()
    }

    pub fn top_level(&self) -> usize {
        self.height_steps
    }

    pub fn copy_level(&self) -> usize {
        self.height_steps + 1
    }

    fn canonical(&self, level: usize, x: usize) -> usize {
        if level == self.copy_level() && self.in_w[x] {
            self.height_steps
        } else {
            level
        }
    }

    fn grid_for(&self, level: usize) -> &SpacetimeGrid {
        if level == 0 {
            self.g1
        } else {
            self.g2
        }
    }

    pub fn distance_fixed(&self, p: ZPoint, q: ZPoint) -> Result<FixedLength> {
        let kp = self.g1.check_point(p.point)?;
        let kq = self.g1.check_point(q.point)?;
        if p.level > self.copy_level() || q.level > self.copy_level() {
            return Err(Error::InvalidArgument("height level outside Z".into()));
        }
        let lp = self.canonical(p.level, p.point.x);
        let lq = self.canonical(q.level, q.point.x);
        let n = self.g1.spatial_len();
        let levels = self.g1.level_count();
        let layers = self.height_steps + 2;
        let dt = self.g1.dt_fixed();
        let to_target = self.bound_graph.shortest_paths(q.point.x);
        let heur = |k: usize, x: usize| to_target[x].max(dt * k.abs_diff(kq) as u64);
        let idx = |l: usize, k: usize, x: usize| (l * levels + k) * n + x;
        let mut g = vec![FixedLength::INFINITY; layers * levels * n];
        let mut heap = BinaryHeap::new();
        g[idx(lp, kp, p.point.x)] = FixedLength::ZERO;
        heap.push(Reverse((heur(kp, p.point.x), FixedLength::ZERO, lp, kp, p.point.x)));
        while let Some(Reverse((_, gv, l, k, x))) = heap.pop() {
            if gv > g[idx(l, k, x)] {
                continue;
            }
            if l == lq && k == kq && x == q.point.x {
                return Ok(gv);
            }
            let mut relax = |l2: usize, k2: usize, y: usize, w: FixedLength, heap: &mut BinaryHeap<_>| {
                let l2 = self.canonical(l2, y);
                let ng = gv + w;
                let i = idx(l2, k2, y);
                if ng < g[i] {
                    g[i] = ng;
                    heap.push(Reverse((ng + heur(k2, y), ng, l2, k2, y)));
                }
            };
            // moves inside L at this height; a merged W node also moves in the copy
            let mut spatial_layers = vec![l];
            if l == self.height_steps && self.in_w[x] {
                spatial_layers.push(self.copy_level());
            }
            for &ls in &spatial_layers {
                let grid = self.grid_for(ls);
                if k + 1 < levels {
                    relax(ls, k + 1, x, dt, &mut heap);
                }
                if k > 0 {
                    relax(ls, k - 1, x, dt, &mut heap);
                }
                for (y, m) in grid.cone(x) {
                    let w = dt * m;
                    let m = m as usize;
                    if k + m < levels {
                        relax(ls, k + m, y, w, &mut heap);
                    }
                    if k >= m {
                        relax(ls, k - m, y, w, &mut heap);
                    }
                }
            }
            if l < self.height_steps {
                relax(l + 1, k, x, self.dh, &mut heap);
            }
            if l > 0 && l <= self.height_steps {
                relax(l - 1, k, x, self.dh, &mut heap);
            }
        }
        unreachable!("temporal and height edges connect Z")
    }
}

/// Shortest `L_Z` length between two Z points.
pub fn z_distance(z: &ZSpace<'_>, p: ZPoint, q: ZPoint) -> Result<f64> {
    Ok(z.distance_fixed(p, q)?.to_f64())
}

/// One member of a sequence together with its limit on the same mesh.
#[derive(Debug, Clone)]
pub struct SwifCase {
    pub j: f64,
    pub approx: StaticSpacetime,
    pub limit: StaticSpacetime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SwifParams {
    pub lambda: f64,
    pub kappa: f64,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SwifRow {
    pub j: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub delta_hat: f64,
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(rename = "Vp")]
    pub vp: f64,
    #[serde(rename = "A")]
    pub a: f64,
    pub bound: f64,
    /// Value of the bound with zero excess volume and zero defect.
    pub floor: f64,
    pub excess_volume: f64,
    /// `volume(sigma_hat_j) / volume(sigma_inf)`.
    pub volume_ratio: f64,
    /// `sigma~_j >= (1 - 1/j) sigma~_inf` held at every vertex.
    pub below_hypothesis: bool,
}

/// Per-j flat-distance bound table.
pub fn swif_pipeline(cases: &[SwifCase], params: &SwifParams) -> Result<Vec<SwifRow>> {
    cases.par_iter().map(|c| swif_row(c, params)).collect()
}

fn swif_row(case: &SwifCase, params: &SwifParams) -> Result<SwifRow> {
    let SwifParams {
        lambda,
        kappa,
        samples,
        seed,
    } = *params;
    if !(case.j > 1.0) {
        return Err(Error::InvalidArgument(format!(
            "sequence index must exceed 1, got {}",
            case.j
        )));
    }
    let approx = conformal_reduce(&case.approx);
    let limit = conformal_reduce(&case.limit);
    if !std::sync::Arc::ptr_eq(&approx.mesh, &limit.mesh) && approx.mesh.len() != limit.mesh.len() {
        return Err(Error::InvalidArgument(
            "sequence member and limit use different meshes".into(),
        ));
    }
    let mesh = &approx.mesh;
    let factor = 1.0 - 1.0 / case.j;
    let below = approx.sigma.dominates(&limit.sigma, factor, 1e-12);
    if !below {
        log::warn!("j = {}: sigma_j >= (1 - 1/j) sigma_inf fails somewhere", case.j);
    }
    let hat: MetricField = approx.sigma.scaled(1.0 / factor);
    let pts = sample_points(mesh.len(), samples, seed);
    let dj = distance_matrix(mesh, &hat, &pts)?;
    let dinf = distance_matrix(mesh, &limit.sigma, &pts)?;
    let vol_hat = volume(mesh, &hat)?;
    let vol_inf = volume(mesh, &limit.sigma)?;
    let cells = sample_cell_volumes(mesh, &hat, &pts)?;
    let good = good_set_from_cells(&dj, &dinf, lambda, kappa, &cells, vol_hat, vol_inf)?;

    let height = approx.height();
    let area = boundary_area(mesh, &hat)?.value;
    let v = vol_hat * height;
    let a = area * height + 2.0 * vol_hat;
    let vp = (vol_inf / kappa + good.excess_volume) * height;
    let h = 4.0 * lambda + 4.0 * good.delta_estimate;
    let bound = flat_bound(&FlatBoundInputs {
        n: mesh.dim() as u32,
        v,
        vp,
        a,
        h,
        delta: good.delta_estimate,
    })?;
    let floor = flat_bound(&FlatBoundInputs {
        n: mesh.dim() as u32,
        v,
        vp: vol_inf / kappa * height,
        a,
        h: 4.0 * lambda,
        delta: 0.0,
    })?;
    Ok(SwifRow {
        j: case.j,
        lambda,
        kappa,
        delta_hat: good.delta_estimate,
        h,
        v,
        vp,
        a,
        bound,
        floor,
        excess_volume: good.excess_volume,
        volume_ratio: vol_hat / vol_inf,
        below_hypothesis: below,
    })
}

/// CSV with the columns `j,lambda,kappa,delta_hat,H,V,Vp,A,bound`.
pub fn swif_csv(rows: &[SwifRow]) -> String {
    let mut out = String::from("j,lambda,kappa,delta_hat,H,V,Vp,A,bound\n");
    for r in rows {
        out.push_str(&format!(
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}\n",
            r.j, r.lambda, r.kappa, r.delta_hat, r.h, r.v, r.vp, r.a, r.bound
        ));
    }
    out
}
