//! Comparing distance functions on a common sample set: uniform and
//! Gromov-Hausdorff bounds, Hölder fits, lower-bound checks, good sets and
//! pointwise convergence.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geodesic::DistanceMatrix;
use crate::length::FixedLength;
use crate::manifold::{MetricField, SpatialMesh};

fn same_size(a: &DistanceMatrix, b: &DistanceMatrix) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::PointSetMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

/// `sup |d1 - d2|` over all pairs.
pub fn uniform_distance(d1: &DistanceMatrix, d2: &DistanceMatrix) -> Result<f64> {
    same_size(d1, d2)?;
    let n = d1.len();
    let mut worst = FixedLength::ZERO;
    for i in 0..n {
        for j in 0..i {
            worst = worst.max(d1.fixed(i, j).abs_diff(d2.fixed(i, j)));
        }
    }
    Ok(worst.to_f64())
}

/// Half the uniform distance, a Gromov-Hausdorff upper bound for two
/// metrics on the same set.
pub fn gh_upper_from_uniform(d1: &DistanceMatrix, d2: &DistanceMatrix) -> Result<f64> {
    Ok(0.5 * uniform_distance(d1, d2)?)
}

/// Half the distortion of the correspondence generated by `map` (source
/// index to target index). Target points outside the image are paired
/// with a preimage of their nearest image point, so the correspondence is
/// total on both sides and the value is a genuine GH upper bound.
pub fn gh_upper_via_map(source: &DistanceMatrix, target: &DistanceMatrix, map: &[usize]) -> Result<f64> {
    if map.is_empty() || source.is_empty() {
        return Err(Error::InvalidArgument("correspondence map is empty".into()));
    }
    if map.len() != source.len() {
        return Err(Error::PointSetMismatch {
            left: source.len(),
            right: map.len(),
        });
    }
    if let Some(&b) = map.iter().find(|&&b| b >= target.len()) {
        return Err(Error::InvalidArgument(format!(
            "map sends a point to {b}, outside the target"
        )));
    }
    let mut preimage: Vec<Option<usize>> = vec![None; target.len()];
    for (a, &b) in map.iter().enumerate() {
        preimage[b].get_or_insert(a);
    }
    let image: Vec<usize> = (0..target.len()).filter(|&b| preimage[b].is_some()).collect();
    let mut pairs: Vec<(usize, usize)> = map.iter().enumerate().map(|(a, &b)| (a, b)).collect();
    for b in 0..target.len() {
        if preimage[b].is_none() {
            let nearest = image
                .iter()
                .copied()
                .min_by_key(|&c| (target.fixed(b, c), c))
                .expect("image is nonempty");
            pairs.push((preimage[nearest].expect("image point has a preimage"), b));
        }
    }
    use rayon::prelude::*;
    let worst = (0..pairs.len())
        .into_par_iter()
        .map(|i| {
            let (a, b) = pairs[i];
            pairs[..i]
                .iter()
                .map(|&(a2, b2)| source.fixed(a, a2).abs_diff(target.fixed(b, b2)))
                .max()
                .unwrap_or(FixedLength::ZERO)
        })
        .max()
        .unwrap_or(FixedLength::ZERO);
    Ok(0.5 * worst.to_f64())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolderFit {
    pub alpha: f64,
    /// Smallest `C` with `d1 <= C * d0^alpha` on all sampled pairs.
    pub constant: f64,
    pub worst_pair: Option<(usize, usize)>,
    /// Some pair has `d0 = 0` but `d1 > 0`.
    pub unbounded: bool,
}

/// Best constant in `d1 <= C d0^alpha`.
pub fn holder_fit(d0: &DistanceMatrix, d1: &DistanceMatrix, alpha: f64) -> Result<HolderFit> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    same_size(d0, d1)?;
    let n = d0.len();
    let mut fit = HolderFit {
        alpha,
        constant: 0.0,
        worst_pair: None,
        unbounded: false,
    };
    let mut any_positive = false;
    for i in 0..n {
        for j in 0..i {
            let (a, b) = (d0.get(i, j), d1.get(i, j));
            if a == 0.0 {
                if b > 0.0 {
                    fit.unbounded = true;
                    fit.constant = f64::INFINITY;
                    fit.worst_pair = Some((i, j));
                }
                continue;
            }
            any_positive = true;
            let c = b / a.powf(alpha);
            if !fit.unbounded && (fit.worst_pair.is_none() || c > fit.constant) {
                fit.constant = c;
                fit.worst_pair = Some((i, j));
            }
        }
    }
    if !any_positive {
        return Err(Error::InvalidArgument(
            "reference distances vanish off the diagonal".into(),
        ));
    }
    Ok(fit)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerBoundReport {
    /// `max (d_inf - d_j)_+`.
    pub violation: f64,
    pub margin: f64,
    pub passed: bool,
    pub worst_pair: Option<(usize, usize)>,
}

pub fn lower_bound_check(dj: &DistanceMatrix, dinf: &DistanceMatrix, margin: f64) -> Result<LowerBoundReport> {
    same_size(dj, dinf)?;
    let mut worst = FixedLength::ZERO;
    let mut pair = None;
    for i in 0..dj.len() {
        for j in 0..i {
            let v = dinf.fixed(i, j) - dj.fixed(i, j);
            if v > worst {
                worst = v;
                pair = Some((i, j));
            }
        }
    }
    let violation = worst.to_f64();
    Ok(LowerBoundReport {
        violation,
        margin,
        passed: violation <= margin,
        worst_pair: pair,
    })
}

/// Steps tried for the distance-defect estimate, as fractions of lambda.
pub const DELTA_SCHEDULE: [f64; 5] = [0.0, 0.125, 0.25, 0.5, 1.0];

/// Subset of samples on which two distance functions nearly agree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoodSet {
    /// Sample indices kept.
    pub members: Vec<usize>,
    pub removed: Vec<usize>,
    pub lambda: f64,
    pub kappa: f64,
    /// Schedule value of the defect that met the volume target. A search
    /// parameter, not a computed bound.
    pub delta_estimate: f64,
    /// `max |d_j - d_inf|` over member pairs.
    pub max_deviation: f64,
    /// Volume of the removed sample cells under the metric of `d_j`.
    pub excess_volume: f64,
    /// `vol_inf / kappa + |vol_j - vol_inf|`.
    pub target_volume: f64,
}

/// Volume attributed to each sample: mesh vertices are assigned to their
/// nearest sample in chart coordinates.
pub fn sample_cell_volumes(mesh: &SpatialMesh, metric: &MetricField, samples: &[usize]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    let vols = crate::manifold::vertex_volumes(mesh, metric)?;
    let mut cells = vec![0.0; samples.len()];
    for (v, &vol) in vols.iter().enumerate() {
        let x = mesh.coord(v);
        let owner = (0..samples.len())
            .min_by(|&a, &b| {
                let da: f64 = mesh
                    .coord(samples[a])
                    .iter()
                    .zip(x)
                    .map(|(p, q)| (p - q) * (p - q))
                    .sum();
                let db: f64 = mesh
                    .coord(samples[b])
                    .iter()
                    .zip(x)
                    .map(|(p, q)| (p - q) * (p - q))
                    .sum();
                da.total_cmp(&db)
            })
            .expect("samples nonempty");
        cells[owner] += vol;
    }
    Ok(cells)
}

/// Greedy good set. Samples are the vertices named by the points of
/// `dj`/`dinf`; their cell volumes come from [`sample_cell_volumes`].
pub fn good_set(
    mesh: &SpatialMesh,
    dj: &DistanceMatrix,
    dinf: &DistanceMatrix,
    lambda: f64,
    kappa: f64,
    metric_j: &MetricField,
    metric_inf: &MetricField,
) -> Result<GoodSet> {
    let samples: Vec<usize> = dj.points().iter().map(|p| p.vertex).collect();
    let cells = sample_cell_volumes(mesh, metric_j, &samples)?;
    let vol_j = crate::manifold::volume(mesh, metric_j)?;
    let vol_inf = crate::manifold::volume(mesh, metric_inf)?;
    good_set_from_cells(dj, dinf, lambda, kappa, &cells, vol_j, vol_inf)
}

/// [`good_set`] with precomputed sample cell volumes.
pub fn good_set_from_cells(
    dj: &DistanceMatrix,
    dinf: &DistanceMatrix,
    lambda: f64,
    kappa: f64,
    cells: &[f64],
    vol_j: f64,
    vol_inf: f64,
) -> Result<GoodSet> {
    same_size(dj, dinf)?;
    if !(lambda > 0.0) || !(kappa > 1.0) {
        return Err(Error::InvalidArgument(format!(
            "need lambda > 0 and kappa > 1, got {lambda}, {kappa}"
        )));
    }
    if cells.len() != dj.len() {
        return Err(Error::PointSetMismatch {
            left: dj.len(),
            right: cells.len(),
        });
    }
    let n = dj.len();
    let target = vol_inf / kappa + (vol_j - vol_inf).abs();
    let mut best_excess = f64::INFINITY;
    for frac in DELTA_SCHEDULE {
        let delta = frac * lambda;
        let threshold = 2.0 * lambda + 2.0 * delta;
        let mut bad: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..n {
            for j in 0..i {
                if dj.fixed(i, j).abs_diff(dinf.fixed(i, j)).to_f64() >= threshold {
                    bad[i].push(j);
                    bad[j].push(i);
                }
            }
        }
        let mut count: Vec<usize> = bad.iter().map(Vec::len).collect();
        let mut alive = vec![true; n];
        let mut removed = Vec::new();
        let mut excess = 0.0;
        loop {
            // most violations first; ties go to the smaller cell
            let pick = (0..n).filter(|&i| alive[i] && count[i] > 0).max_by(|&a, &b| {
                count[a]
                    .cmp(&count[b])
                    .then(cells[b].total_cmp(&cells[a]))
                    .then(b.cmp(&a))
            });
            let Some(i) = pick else { break };
            alive[i] = false;
            removed.push(i);
            excess += cells[i];
            for &k in &bad[i] {
                if alive[k] {
                    count[k] -= 1;
                }
            }
        }
        best_excess = best_excess.min(excess);
        if excess <= target {
            let members: Vec<usize> = (0..n).filter(|&i| alive[i]).collect();
            let mut dev = FixedLength::ZERO;
            for (a, &i) in members.iter().enumerate() {
                for &j in &members[..a] {
                    dev = dev.max(dj.fixed(i, j).abs_diff(dinf.fixed(i, j)));
                }
            }
            removed.sort_unstable();
            return Ok(GoodSet {
                members,
                removed,
                lambda,
                kappa,
                delta_estimate: delta,
                max_deviation: dev.to_f64(),
                excess_volume: excess,
                target_volume: target,
            });
        }
    }
    Err(Error::Infeasible {
        excess: best_excess,
        target,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointwiseReport {
    pub converged: usize,
    pub total: usize,
    pub fraction: f64,
}

/// Fraction of `pairs` with `|d_j - d_inf| < eps` for the last matrix of
/// the sequence.
pub fn pointwise_report(
    sequence: &[DistanceMatrix],
    dinf: &DistanceMatrix,
    pairs: &[(usize, usize)],
    eps: f64,
) -> Result<PointwiseReport> {
    let last = sequence
        .last()
        .ok_or_else(|| Error::InvalidArgument("empty sequence".into()))?;
    same_size(last, dinf)?;
    let converged = pairs
        .iter()
        .filter(|&&(i, j)| (last.get(i, j) - dinf.get(i, j)).abs() < eps)
        .count();
    Ok(PointwiseReport {
        converged,
        total: pairs.len(),
        fraction: if pairs.is_empty() {
            1.0
        } else {
            converged as f64 / pairs.len() as f64
        },
    })
}

fn seed_fraction(seed: u64, salt: u64) -> f64 {
    // splitmix64
    let mut z = seed.wrapping_add(salt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64
}

/// `count` distinct indices below `n` from a golden-ratio sequence.
pub fn sample_points(n: usize, count: usize, seed: u64) -> Vec<usize> {
    if count >= n {
        return (0..n).collect();
    }
    let phi = 0.618_033_988_749_894_9;
    let mut x = seed_fraction(seed, 1);
    let mut taken = vec![false; n];
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        x = (x + phi).fract();
        let mut i = ((x * n as f64) as usize).min(n - 1);
        while taken[i] {
            i = (i + 1) % n;
        }
        taken[i] = true;
        out.push(i);
    }
    out
}

/// Up to `max_pairs` distinct unordered pairs `(i, j)`, `i > j`, from the
/// 2-D R2 low-discrepancy sequence; all pairs if there are few enough.
pub fn sample_pairs(n: usize, max_pairs: usize, seed: u64) -> Vec<(usize, usize)> {
    let total = n * n.saturating_sub(1) / 2;
    if total <= max_pairs {
        return (0..n).flat_map(|i| (0..i).map(move |j| (i, j))).collect();
    }
    // plastic-number constants of the R2 sequence
    let g = 1.324_717_957_244_746;
    let (a1, a2) = (1.0 / g, 1.0 / (g * g));
    let (mut x, mut y) = (seed_fraction(seed, 2), seed_fraction(seed, 3));
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::with_capacity(max_pairs);
    while out.len() < max_pairs {
        x = (x + a1).fract();
        y = (y + a2).fract();
        let i = ((x * n as f64) as usize).min(n - 1);
        let j = ((y * n as f64) as usize).min(n - 1);
        if i == j {
            continue;
        }
        let p = (i.max(j), i.min(j));
        if seen.insert(p) {
            out.push(p);
        }
    }
    out
}
