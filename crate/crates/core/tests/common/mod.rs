#![allow(dead_code)]

//! Oracles written from the family definitions, independent of the library's
//! profile and quadrature code.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nullmetric::geodesic::{DistanceMatrix, PointId};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Adaptive Simpson on `[a, b]`.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50)
}

/// Where `A exp(-2 j^2 (r - 1/j))` falls to 1.
fn decay_end(j: f64, a: f64) -> f64 {
    1.0 / j + a.ln() / (2.0 * j * j)
}

/// `int_0^1 f^p 2 pi r dr` for the spline factor with cap exponent `lam`.
pub fn spline_disk_integral(j: f64, lam: f64, p: f64) -> f64 {
    let l = j.ln();
    let cap_r = j.powf(-lam);
    let cap = PI * cap_r * cap_r * (j.powf(lam) / (1.0 + lam * l)).powf(p);
    // r = e^-u on the middle branch: f = e^u / (1 + u), dr = -e^-u du
    let middle = simpson(
        &|u: f64| 2.0 * PI * (u.exp() / (1.0 + u)).powf(p) * (-2.0 * u).exp(),
        l,
        lam * l,
        1e-12,
    );
    let a = j / (1.0 + l);
    let r_end = decay_end(j, a);
    let bridge = simpson(
        &|r: f64| 2.0 * PI * r * (a * (-2.0 * j * j * (r - 1.0 / j)).exp()).powf(p),
        1.0 / j,
        r_end,
        1e-13,
    );
    cap + middle + bridge + PI * (1.0 - r_end * r_end)
}

/// `int f dr` over the middle spline branch: `ln((1 + lam ln j)/(1 + ln j))`.
pub fn spline_radial_length(j: f64, lam: f64) -> f64 {
    ((1.0 + lam * j.ln()) / (1.0 + j.ln())).ln()
}

/// `int_0^1 f^p 2 pi r dr` for the bubble factor.
pub fn bubble_disk_integral(j: f64, p: f64) -> f64 {
    let core = PI / (j * j) * j.powf(p);
    let r_end = decay_end(j, j);
    let bridge = simpson(
        &|r: f64| 2.0 * PI * r * (j * (-2.0 * j * j * (r - 1.0 / j)).exp()).powf(p),
        1.0 / j,
        r_end,
        1e-13,
    );
    core + bridge + PI * (1.0 - r_end * r_end)
}

/// `int_{1/j}^{3/(2j)} bridge dr` in closed form.
pub fn bubble_bridge_length(j: f64) -> f64 {
    1.0 / j - 1.0 / (2.0 * j * j) - j.ln() / (2.0 * j * j)
}

/// Euclidean distance matrix of random points in the unit square.
pub fn random_metric(rng: &mut ChaCha8Rng, n: usize) -> (Vec<[f64; 2]>, DistanceMatrix) {
    let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
    let d = matrix_from(n, |i, k| {
        ((pts[i][0] - pts[k][0]).powi(2) + (pts[i][1] - pts[k][1]).powi(2)).sqrt()
    });
    (pts, d)
}

pub fn matrix_from(n: usize, f: impl Fn(usize, usize) -> f64) -> DistanceMatrix {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..i {
            let x = f(i, k);
            v[i * n + k] = x;
            v[k * n + i] = x;
        }
    }
    DistanceMatrix::from_f64((0..n).map(PointId::vertex).collect(), &v).unwrap()
}
