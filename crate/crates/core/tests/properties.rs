mod common;

use std::sync::Arc;

use proptest::prelude::*;
use rand::Rng;

use nullmetric::convergence::{holder_fit, uniform_distance};
use nullmetric::examples::{GluedPoint, GluedSpace};
use nullmetric::geodesic::{distance_matrix, DistanceMatrix, Graph};
use nullmetric::manifold::{disk_mesh, MetricField, SpatialMesh};
use nullmetric::nulldist::{null_distance_matrix, null_distance_static, SpacetimePoint};
use nullmetric::swif::{flat_bound, FlatBoundInputs};
use nullmetric::FixedLength;

fn mesh() -> Arc<SpatialMesh> {
    use std::sync::OnceLock;
    static M: OnceLock<Arc<SpatialMesh>> = OnceLock::new();
    M.get_or_init(|| Arc::new(disk_mesh(0).unwrap())).clone()
}

fn conformal(m: &SpatialMesh, factors: &[f64]) -> MetricField {
    let f: Vec<f64> = (0..m.len()).map(|v| factors[v % factors.len()]).collect();
    MetricField::conformal(&MetricField::identity(m), &f).unwrap()
}

fn axioms(d: &DistanceMatrix) -> std::result::Result<(), TestCaseError> {
    let n = d.len();
    for i in 0..n {
        prop_assert_eq!(d.fixed(i, i), FixedLength::ZERO);
        for j in 0..n {
            prop_assert_eq!(d.fixed(i, j), d.fixed(j, i));
        }
    }
    prop_assert_eq!(d.triangle_violations(), 0);
    Ok(())
}

fn times(ks: &[u8]) -> Vec<f64> {
    ks.iter().map(|&k| k as f64 / 16.0).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fixed_length_is_monotone_and_saturating(a in 0.0f64..4000.0, b in 0.0f64..4000.0) {
        let (x, y) = (FixedLength::from_f64(a).unwrap(), FixedLength::from_f64(b).unwrap());
        prop_assert_eq!(a <= b, x <= y || x.to_f64() == y.to_f64());
        prop_assert_eq!(x + y, y + x);
        prop_assert!((x + y).to_f64() >= x.to_f64().max(y.to_f64()));
        prop_assert_eq!(FixedLength::INFINITY + x, FixedLength::INFINITY);
        prop_assert!(FixedLength::from_f64(1e6).is_err());
    }

    #[test]
    fn mesh_distances_are_metrics(factors in prop::collection::vec(0.2f64..5.0, 1..12),
                                  sources in prop::collection::vec(0usize..61, 2..20)) {
        let m = mesh();
        let d = distance_matrix(&m, &conformal(&m, &factors), &sources).unwrap();
        axioms(&d)?;
    }

    #[test]
    fn static_null_distances_are_metrics(factors in prop::collection::vec(0.2f64..5.0, 1..12),
                                         ks in prop::collection::vec(0u8..=16, 1..5)) {
        let m = mesh();
        let d = distance_matrix(&m, &conformal(&m, &factors), &[0, 7, 19, 33, 60]).unwrap();
        let pts: Vec<SpacetimePoint> = times(&ks)
            .into_iter()
            .flat_map(|t| (0..5).map(move |i| SpacetimePoint::new(t, i)))
            .collect();
        let nd = null_distance_matrix(&d, &pts).unwrap();
        axioms(&nd)?;
        // the static formula is max(spatial, time gap)
        for (a, p) in pts.iter().enumerate() {
            for (b, q) in pts.iter().enumerate() {
                let want = d.get(p.x, q.x).max((p.t - q.t).abs());
                prop_assert!((nd.get(a, b) - want).abs() < 1e-11);
                prop_assert!((null_distance_static(&d, *p, *q).unwrap() - nd.get(a, b)).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn conformal_scaling_scales_distances(c in 0.1f64..10.0) {
        let m = mesh();
        let id = MetricField::identity(&m);
        let pts = [0usize, 10, 30, 60];
        let d1 = distance_matrix(&m, &id, &pts).unwrap();
        let dc = distance_matrix(&m, &id.scaled(c * c), &pts).unwrap();
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                // one rounding per edge on paths of at most a few dozen edges
                prop_assert!((dc.get(i, j) - c * d1.get(i, j)).abs() <= 1e-9 * (1.0 + c));
            }
        }
    }

    #[test]
    fn gluing_never_lengthens(pairs in prop::collection::vec((0usize..61, 0usize..61), 1..6),
                              probes in prop::collection::vec((0usize..2, 0usize..61), 2..12)) {
        let m = mesh();
        let g = Graph::from_mesh(&m, &MetricField::identity(&m)).unwrap();
        let ids: Vec<(GluedPoint, GluedPoint)> = pairs
            .iter()
            .map(|&(a, b)| (GluedPoint::new(0, a), GluedPoint::new(1, b)))
            .collect();
        let glued = GluedSpace::new(&[g.clone(), g.clone()], &ids).unwrap();
        let pts: Vec<GluedPoint> = probes.iter().map(|&(c, v)| GluedPoint::new(c, v)).collect();
        let d = glued.matrix(&pts).unwrap();
        axioms(&d)?;
        let direct = g.distance_matrix(&(0..m.len()).collect::<Vec<_>>()).unwrap();
        for (i, p) in pts.iter().enumerate() {
            for (k, q) in pts.iter().enumerate() {
                if p.component == q.component {
                    prop_assert!(d.fixed(i, k) <= direct.fixed(p.index, q.index));
                }
            }
        }
        for &(a, b) in &pairs {
            prop_assert_eq!(glued.distance_fixed(GluedPoint::new(0, a), GluedPoint::new(1, b)).unwrap(), FixedLength::ZERO);
        }
    }

    #[test]
    fn flat_bound_is_monotone_and_linear(v in 0.0f64..10.0, vp in 0.0f64..10.0, a in 0.0f64..10.0,
                                         h in 0.0f64..2.0, s in 0.0f64..3.0, n in 1u32..4) {
        let base = FlatBoundInputs { n, v, vp, a, h, delta: 0.0 };
        let b = flat_bound(&base).unwrap();
        for bumped in [
            FlatBoundInputs { v: v + 1.0, ..base },
            FlatBoundInputs { vp: vp + 1.0, ..base },
            FlatBoundInputs { a: a + 1.0, ..base },
            FlatBoundInputs { h: h + 0.5, ..base },
        ] {
            prop_assert!(flat_bound(&bumped).unwrap() >= b);
        }
        let scaled = FlatBoundInputs { v: s * v, vp: s * vp, a: s * a, ..base };
        prop_assert!((flat_bound(&scaled).unwrap() - s * b).abs() <= 1e-9 * (1.0 + s * b));
    }

    #[test]
    fn null_deviation_is_at_most_twice_the_spatial_one(seed in any::<u64>(), k in 0.0f64..0.3,
                                                      ks in prop::collection::vec(0u8..=16, 1..5)) {
        let mut rng = common::rng(seed);
        let (_, d1) = common::random_metric(&mut rng, 12);
        let noise: Vec<f64> = (0..144).map(|_| rng.random_range(-k..=k)).collect();
        let d2 = common::matrix_from(12, |i, j| (d1.get(i, j) + noise[i * 12 + j]).max(0.0));
        let kk = uniform_distance(&d1, &d2).unwrap();
        let pts: Vec<SpacetimePoint> = times(&ks)
            .into_iter()
            .flat_map(|t| (0..12).map(move |i| SpacetimePoint::new(t, i)))
            .collect();
        let n1 = null_distance_matrix(&d1, &pts).unwrap();
        let n2 = null_distance_matrix(&d2, &pts).unwrap();
        prop_assert!(uniform_distance(&n1, &n2).unwrap() <= 2.0 * kk + 1e-12);
    }

    #[test]
    fn holder_constant_transfers_to_the_slab(seed in any::<u64>(), alpha in 0.2f64..=1.0,
                                             beta in 0.2f64..=1.0, height in 0.1f64..3.0) {
        let mut rng = common::rng(seed);
        let (_, d0) = common::random_metric(&mut rng, 10);
        let scale: f64 = rng.random_range(0.2..3.0);
        let d1 = common::matrix_from(10, |i, j| scale * d0.get(i, j).powf(beta));
        let fit = holder_fit(&d0, &d1, alpha).unwrap();
        let pts: Vec<SpacetimePoint> = (0..30)
            .map(|i| SpacetimePoint::new(height * rng.random::<f64>(), i % 10))
            .collect();
        let n0 = null_distance_matrix(&d0, &pts).unwrap();
        let n1 = null_distance_matrix(&d1, &pts).unwrap();
        if !fit.unbounded {
            let slab = holder_fit(&n0, &n1, alpha).unwrap();
            prop_assert!(slab.constant <= fit.constant.max(height.powf(1.0 - alpha)) + 1e-9);
        }
    }
}
