//! Polar meshes of the closed unit 2-disk.
//!
//! Vertices sit on concentric rings; ring `i` carries `sectors` equally
//! spaced vertices starting at angle 0. Edges join every pair of vertices
//! closer than `connect * min(s_a, s_b)` where `s` is the local spacing, so
//! the graph contains diagonal and longer edges and its dilation against
//! Euclidean distance stays near 1.

use std::f64::consts::PI;

use super::{MeshParts, SpatialMesh};
use crate::error::{Error, Result};

/// Hard ceiling on mesh size.
pub const MAX_MESH_VERTICES: usize = 2_000_000;

const DEFAULT_CONNECT: f64 = 3.75;
const GRADING: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ring {
    pub radius: f64,
    pub sectors: usize,
}

/// Ring radii and sector counts. Ring 0 is always the center (radius 0,
/// one vertex); the last ring is the boundary circle `r = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RingLayout {
    pub rings: Vec<Ring>,
    pub connect: f64,
}

impl RingLayout {
    /// Hexagonal-like layout: `4 * 2^level` rings, ring `k` with `6k` sectors.
    pub fn uniform(level: u32) -> Self {
        let r = 4usize << level;
        let mut rings = vec![Ring {
            radius: 0.0,
            sectors: 1,
        }];
        for k in 1..=r {
            rings.push(Ring {
                radius: k as f64 / r as f64,
                sectors: 6 * k,
            });
        }
        RingLayout {
            rings,
            connect: DEFAULT_CONNECT,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.rings.iter().map(|r| r.sectors).sum()
    }

    /// Index of the first vertex of each ring (plus the total at the end).
    pub fn ring_starts(&self) -> Vec<usize> {
        let mut starts = Vec::with_capacity(self.rings.len() + 1);
        let mut acc = 0;
        for r in &self.rings {
            starts.push(acc);
            acc += r.sectors;
        }
        starts.push(acc);
        starts
    }

    /// Doubles sectors on every ring and inserts a ring halfway between
    /// consecutive rings. Old vertex `(ring i, sector k)` becomes
    /// `(ring 2i, sector 2k)` at the identical position.
    pub fn refined(&self) -> Self {
        let mut rings = vec![self.rings[0]];
        for w in self.rings.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let mid = if lo.radius == 0.0 {
                hi.sectors
            } else {
                lo.sectors + hi.sectors
            };
            rings.push(Ring {
                radius: 0.5 * (lo.radius + hi.radius),
                sectors: mid,
            });
            rings.push(Ring {
                radius: hi.radius,
                sectors: 2 * hi.sectors,
            });
        }
        RingLayout {
            rings,
            connect: self.connect,
        }
    }

    fn position(&self, ring: usize, sector: usize) -> [f64; 2] {
        let Ring { radius, sectors } = self.rings[ring];
        if radius == 0.0 {
            return [0.0, 0.0];
        }
        let th = 2.0 * PI * (sector as f64 / sectors as f64);
        [radius * th.cos(), radius * th.sin()]
    }

    fn radial_spacing(&self, i: usize) -> f64 {
        let r = &self.rings;
        let below = if i > 0 { r[i].radius - r[i - 1].radius } else { 0.0 };
        let above = if i + 1 < r.len() {
            r[i + 1].radius - r[i].radius
        } else {
            0.0
        };
        below.max(above)
    }

    fn local_spacing(&self, i: usize) -> f64 {
        let ring = self.rings[i];
        let arc = if ring.radius == 0.0 {
            0.0
        } else {
            2.0 * PI * ring.radius / ring.sectors as f64
        };
        self.radial_spacing(i).max(arc)
    }

    /// Builds the mesh, failing above [`MAX_MESH_VERTICES`].
    pub fn build(&self) -> Result<SpatialMesh> {
        let n = self.vertex_count();
        if n > MAX_MESH_VERTICES {
            return Err(Error::ResourceCap {
                what: "mesh vertices",
                requested: n,
                cap: MAX_MESH_VERTICES,
            });
        }
        let nr = self.rings.len();
        if nr < 2
            || self.rings[0]
                != (Ring {
                    radius: 0.0,
                    sectors: 1,
                })
        {
            return Err(Error::InvalidMesh("layout must start with the center".into()));
        }
        if self.rings.windows(2).any(|w| !(w[0].radius < w[1].radius)) {
            return Err(Error::InvalidMesh("ring radii must increase".into()));
        }
        let starts = self.ring_starts();
        let spacing: Vec<f64> = (0..nr).map(|i| self.local_spacing(i)).collect();

        let mut vertices = Vec::with_capacity(n);
        let mut radial = Vec::with_capacity(n);
        let mut cell_weights = Vec::with_capacity(n);
        for (i, ring) in self.rings.iter().enumerate() {
            let lo = if i == 0 {
                0.0
            } else {
                0.5 * (self.rings[i - 1].radius + ring.radius)
            };
            let hi = if i + 1 == nr {
                ring.radius
            } else {
                0.5 * (ring.radius + self.rings[i + 1].radius)
            };
            let w = PI * (hi * hi - lo * lo) / ring.sectors as f64;
            for k in 0..ring.sectors {
                vertices.push(self.position(i, k).to_vec());
                radial.push(ring.radius);
                cell_weights.push(w);
            }
        }

        let mut edges = Vec::new();
        for i in 0..nr {
            let ri = self.rings[i].radius;
            for k in 0..self.rings[i].sectors {
                let a = starts[i] + k;
                let pa = self.position(i, k);
                let reach = self.connect * spacing[i];
                let th = if ri == 0.0 {
                    0.0
                } else {
                    2.0 * PI * (k as f64 / self.rings[i].sectors as f64)
                };
                let visit = |l: usize, edges: &mut Vec<(usize, usize)>| {
                    let rl = self.rings[l].radius;
                    let m = self.rings[l].sectors;
                    let limit = self.connect * spacing[i].min(spacing[l]);
                    let mut test = |s: usize| {
                        let b = starts[l] + s;
                        if b <= a {
                            return;
                        }
                        let pb = self.position(l, s);
                        let d = ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2)).sqrt();
                        if d <= limit {
                            edges.push((a, b));
                        }
                    };
                    if ri == 0.0 || rl == 0.0 {
                        (0..m).for_each(&mut test);
                        return;
                    }
                    let c = (ri * ri + rl * rl - reach * reach) / (2.0 * ri * rl);
                    if c <= -1.0 {
                        (0..m).for_each(&mut test);
                        return;
                    }
                    let half = c.min(1.0).acos();
                    let lo = ((th - half) / (2.0 * PI) * m as f64).floor() as i64;
                    let hi = ((th + half) / (2.0 * PI) * m as f64).ceil() as i64;
                    if (hi - lo + 1) as usize >= m {
                        (0..m).for_each(&mut test);
                    } else {
                        for s in lo..=hi {
                            test(s.rem_euclid(m as i64) as usize);
                        }
                    }
                };
                visit(i, &mut edges);
                for l in (0..i).rev() {
                    if ri - self.rings[l].radius > reach {
                        break;
                    }
                    visit(l, &mut edges);
                }
                for l in i + 1..nr {
                    if self.rings[l].radius - ri > reach {
                        break;
                    }
                    visit(l, &mut edges);
                }
            }
        }

        let outer = nr - 1;
        let m = self.rings[outer].sectors;
        let boundary: Vec<usize> = (0..m).map(|k| starts[outer] + k).collect();
        let boundary_facets = (0..m)
            .map(|k| vec![starts[outer] + k, starts[outer] + (k + 1) % m])
            .collect();

        SpatialMesh::with_layout(
            MeshParts {
                dim: 2,
                vertices,
                edges,
                boundary,
                boundary_facets,
                cell_weights,
                radial: Some(radial),
            },
            Some(self.clone()),
        )
    }
}

/// The uniform disk mesh at a refinement level (level 0 has 61 vertices,
/// each level roughly quadruples the count).
pub fn disk_mesh(level: u32) -> Result<SpatialMesh> {
    RingLayout::uniform(level).build()
}

/// Radial band that needs extra rings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialZone {
    /// At least `intervals` equal ring gaps in `[from, to]`.
    Uniform { from: f64, to: f64, intervals: usize },
    /// Ring radii growing geometrically by `ratio` from `from` to `to`.
    Geometric { from: f64, to: f64, ratio: f64 },
}

/// Graded polar mesh: uniform base rings plus feature zones; ring gaps
/// relax away from the zones at slope `GRADING - 1`.
#[derive(Debug, Clone)]
pub struct DiskMeshBuilder {
    level: u32,
    zones: Vec<RadialZone>,
    max_aspect: f64,
    connect: f64,
}

impl DiskMeshBuilder {
    pub fn new(level: u32) -> Self {
        DiskMeshBuilder {
            level,
            zones: Vec::new(),
            max_aspect: 1.0,
            connect: DEFAULT_CONNECT,
        }
    }

    pub fn zone(mut self, zone: RadialZone) -> Self {
        self.zones.push(zone);
        self
    }

    /// Allowed ratio of angular to radial spacing inside refined bands.
    pub fn max_aspect(mut self, aspect: f64) -> Self {
        self.max_aspect = aspect.max(1.0);
        self
    }

    pub fn connect(mut self, factor: f64) -> Self {
        self.connect = factor;
        self
    }

    /// Target ring gap at radius `r`: the base gap, shrunk near zones and
    /// relaxing away from them with slope `GRADING - 1`.
    fn target_gap(&self, r: f64, h: f64) -> f64 {
        let mut s = h;
        for z in &self.zones {
            let (from, to, inner) = match *z {
                RadialZone::Uniform { from, to, intervals } => (from, to, (to - from) / intervals.max(1) as f64),
                RadialZone::Geometric { from, to, ratio } => (from, to, r.clamp(from, to) * (ratio - 1.0)),
            };
            let dist = if r < from { from - r } else { (r - to).max(0.0) };
            s = s.min(inner + (GRADING - 1.0) * dist);
        }
        s
    }

    pub fn layout(&self) -> Result<RingLayout> {
        let base = 4usize << self.level;
        let h = 1.0 / base as f64;
        let mut radii: Vec<f64> = (0..=base).map(|k| k as f64 / base as f64).collect();
        for z in &self.zones {
            match *z {
                RadialZone::Uniform { from, to, intervals } => {
                    check_band(from, to)?;
                    let n = intervals.max(1);
                    for k in 0..=n {
                        radii.push(from + (to - from) * (k as f64 / n as f64));
                    }
                }
                RadialZone::Geometric { from, to, ratio } => {
                    check_band(from, to)?;
                    if !(ratio > 1.0) || from <= 0.0 {
                        return Err(Error::InvalidArgument(
                            "geometric zone needs ratio > 1 and a positive start".into(),
                        ));
                    }
                    let mut r = from;
                    while r < to {
                        radii.push(r);
                        r *= ratio;
                    }
                    radii.push(to);
                }
            }
        }
        radii.sort_by(f64::total_cmp);
        // merge radii closer than a tiny fraction of their scale
        let mut merged: Vec<f64> = Vec::with_capacity(radii.len());
        for r in radii {
            match merged.last() {
                Some(&last) if r - last <= 1e-9 * r.max(1e-6) => {}
                _ => merged.push(r),
            }
        }
        // fill each gap so ring spacing follows the target gap: equal steps
        // of the integral of 1 / target_gap
        const SUB: usize = 64;
        let mut radii = Vec::with_capacity(merged.len());
        for w in merged.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mut cum = vec![0.0; SUB + 1];
            for k in 0..SUB {
                let r = a + (b - a) * (k as f64 + 0.5) / SUB as f64;
                cum[k + 1] = cum[k] + (b - a) / SUB as f64 / self.target_gap(r, h);
            }
            let total = cum[SUB];
            let n = ((total - 0.25).ceil() as usize).max(1);
            if radii.len() + n > MAX_MESH_VERTICES {
                return Err(Error::ResourceCap {
                    what: "mesh rings",
                    requested: radii.len() + n,
                    cap: MAX_MESH_VERTICES,
                });
            }
            radii.push(a);
            let mut k = 0;
            for i in 1..n {
                let target = total * i as f64 / n as f64;
                while cum[k + 1] < target {
                    k += 1;
                }
                let frac = (target - cum[k]) / (cum[k + 1] - cum[k]);
                radii.push(a + (b - a) * (k as f64 + frac) / SUB as f64);
            }
        }
        radii.push(1.0);
        let nr = radii.len();
        let mut rings = Vec::with_capacity(nr);
        for i in 0..nr {
            if i == 0 {
                rings.push(Ring {
                    radius: 0.0,
                    sectors: 1,
                });
                continue;
            }
            let below = radii[i] - radii[i - 1];
            let above = if i + 1 < nr { radii[i + 1] - radii[i] } else { below };
            let s_rad = below.max(above);
            let arc = (PI / 3.0) * h.min(self.max_aspect * s_rad);
            let sectors = ((2.0 * PI * radii[i] / arc).ceil() as usize).max(6);
            rings.push(Ring {
                radius: radii[i],
                sectors,
            });
        }
        Ok(RingLayout {
            rings,
            connect: self.connect,
        })
    }

    pub fn build(&self) -> Result<SpatialMesh> {
        self.layout()?.build()
    }
}

fn check_band(from: f64, to: f64) -> Result<()> {
    if !(0.0 <= from && from < to && to <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "radial band [{from}, {to}] must lie in [0, 1]"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_sizes() {
        assert_eq!(disk_mesh(0).unwrap().len(), 61);
        assert_eq!(disk_mesh(1).unwrap().len(), 217);
        assert_eq!(RingLayout::uniform(5).vertex_count(), 1 + 3 * 128 * 129);
    }

    #[test]
    fn weights_sum_to_pi() {
        for level in 0..4 {
            let m = disk_mesh(level).unwrap();
            assert!((m.coordinate_volume() - PI).abs() < 1e-12);
        }
    }

    #[test]
    fn refinement_embeds_old_vertices() {
        let l0 = RingLayout::uniform(1);
        let l1 = l0.refined();
        assert_eq!(l1.vertex_count(), RingLayout::uniform(2).vertex_count());
        let s0 = l0.ring_starts();
        let s1 = l1.ring_starts();
        let (m0, m1) = (l0.build().unwrap(), l1.build().unwrap());
        for i in 0..l0.rings.len() {
            for k in 0..l0.rings[i].sectors {
                let old = s0[i] + k;
                let new = s1[2 * i] + if i == 0 { 0 } else { 2 * k };
                assert_eq!(m0.coord(old), m1.coord(new));
                assert_eq!(m0.is_boundary(old), m1.is_boundary(new));
            }
        }
    }

    #[test]
    fn graded_layout_respects_zones() {
        let j = 100.0;
        let b = DiskMeshBuilder::new(2)
            .zone(RadialZone::Uniform {
                from: 0.0,
                to: 1.0 / j,
                intervals: 4,
            })
            .zone(RadialZone::Uniform {
                from: 1.0 / j,
                to: 1.5 / j,
                intervals: 4,
            });
        let lay = b.layout().unwrap();
        let inside = lay
            .rings
            .iter()
            .filter(|r| r.radius > 0.0 && r.radius <= 1.0 / j)
            .count();
        assert!(inside >= 4);
        for w in lay.rings.windows(3) {
            let g0 = w[1].radius - w[0].radius;
            let g1 = w[2].radius - w[1].radius;
            assert!(g1 <= 2.0 * g0 && g0 <= 2.0 * g1, "{g0} {g1}");
        }
        let m = lay.build().unwrap();
        assert!((m.coordinate_volume() - PI).abs() < 1e-10);
    }
}
