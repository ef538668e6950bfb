//! A finite-dimensional gradient flow along which the Morse index goes up.
//!
//! `M = S¹ × S² ⊂ ℝ² × ℝ³` with coordinates `p = (x, y, z, w, u)` and
//! `F(p) = y(u + 2)`. The meridian `{z = w = 0, u = −1}` is invariant, and on
//! it the flow from the index-1 point `(0, 1, 0, 0, −1)` runs to the index-2
//! point `(0, −1, 0, 0, −1)`.

use nalgebra::{Matrix3, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub type Point = [f64; 5];

pub fn toy_f(p: &Point) -> f64 {
    p[1] * (p[4] + 2.0)
}

/// Ambient gradient of `F` in ℝ⁵.
fn ambient_gradient(p: &Point) -> Point {
    [0.0, p[4] + 2.0, 0.0, 0.0, p[1]]
}

/// Orthogonal projection onto `T_p M`.
pub fn project_tangent(p: &Point, v: &Point) -> Point {
    let a = v[0] * p[0] + v[1] * p[1];
    let b = v[2] * p[2] + v[3] * p[3] + v[4] * p[4];
    [
        v[0] - a * p[0],
        v[1] - a * p[1],
        v[2] - b * p[2],
        v[3] - b * p[3],
        v[4] - b * p[4],
    ]
}

/// Riemannian gradient of `F` on `M`.
pub fn toy_gradient(p: &Point) -> Point {
    project_tangent(p, &ambient_gradient(p))
}

/// Puts each factor back on its unit sphere.
pub fn retract(p: &Point) -> Point {
    let r1 = (p[0] * p[0] + p[1] * p[1]).sqrt();
    let r2 = (p[2] * p[2] + p[3] * p[3] + p[4] * p[4]).sqrt();
    [p[0] / r1, p[1] / r1, p[2] / r2, p[3] / r2, p[4] / r2]
}

fn norm(v: &Point) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn axpy(p: &Point, s: f64, v: &Point) -> Point {
    std::array::from_fn(|k| p[k] + s * v[k])
}

/// Orthonormal basis of `T_p M`: one vector for `S¹`, two for `S²`.
fn tangent_basis(p: &Point) -> [Point; 3] {
    let e1 = [-p[1], p[0], 0.0, 0.0, 0.0];
    let q = [p[2], p[3], p[4]];
    // any axis not parallel to q
    let axis = if q[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let d: f64 = (0..3).map(|k| axis[k] * q[k]).sum();
    let mut a: [f64; 3] = std::array::from_fn(|k| axis[k] - d * q[k]);
    let n = a.iter().map(|c| c * c).sum::<f64>().sqrt();
    a.iter_mut().for_each(|c| *c /= n);
    let b = [
        q[1] * a[2] - q[2] * a[1],
        q[2] * a[0] - q[0] * a[2],
        q[0] * a[1] - q[1] * a[0],
    ];
    [
        e1,
        [0.0, 0.0, a[0], a[1], a[2]],
        [0.0, 0.0, b[0], b[1], b[2]],
    ]
}

/// Exponential map of the product of round spheres.
fn exp_map(p: &Point, v: &Point) -> Point {
    let mut out = *p;
    for (lo, hi) in [(0usize, 2usize), (2, 5)] {
        let t: f64 = (lo..hi).map(|k| v[k] * v[k]).sum::<f64>().sqrt();
        if t > 0.0 {
            for k in lo..hi {
                out[k] = p[k] * t.cos() + v[k] / t * t.sin();
            }
        }
    }
    out
}

/// Intrinsic Hessian in an orthonormal tangent basis, by central
/// differences of the projected gradient along geodesics.
pub fn toy_hessian(p: &Point) -> [[f64; 3]; 3] {
    let basis = tangent_basis(p);
    let h = 1e-5;
    let mut m = [[0.0; 3]; 3];
    for j in 0..3 {
        let plus = exp_map(p, &basis[j].map(|c| h * c));
        let minus = exp_map(p, &basis[j].map(|c| -h * c));
        let gp = toy_gradient(&plus);
        let gm = toy_gradient(&minus);
        for i in 0..3 {
            let d: f64 = (0..5).map(|k| basis[i][k] * (gp[k] - gm[k])).sum();
            m[i][j] = d / (2.0 * h);
        }
    }
    // symmetrize away the O(h²) asymmetry
    for i in 0..3 {
        for j in 0..i {
            let s = 0.5 * (m[i][j] + m[j][i]);
            m[i][j] = s;
            m[j][i] = s;
        }
    }
    m
}

pub fn hessian_eigenvalues(p: &Point) -> [f64; 3] {
    let h = toy_hessian(p);
    let m = Matrix3::from_fn(|i, j| h[i][j]);
    let mut e: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    [e[0], e[1], e[2]]
}

/// The critical points as listed, with their expected Morse indices.
pub const CRITICAL_POINTS: [(Point, usize); 4] = [
    ([0.0, -1.0, 0.0, 0.0, 1.0], 0),
    ([0.0, 1.0, 0.0, 0.0, -1.0], 1),
    ([0.0, -1.0, 0.0, 0.0, -1.0], 2),
    ([0.0, 1.0, 0.0, 0.0, 1.0], 3),
];

/// Classical RK4 for `ṗ = −∇F(p)`, retracting after every step. Returns the
/// endpoint and the samples `(t, p)` taken every `every` steps.
pub fn integrate_flow(p0: Point, dt: f64, t_end: f64, every: usize) -> (Point, Vec<(f64, Point)>) {
    let rhs = |p: &Point| toy_gradient(p).map(|c| -c);
    let steps = (t_end / dt).round() as usize;
    let mut p = retract(&p0);
    let mut samples = vec![(0.0, p)];
    for s in 1..=steps {
        let k1 = rhs(&p);
        let k2 = rhs(&axpy(&p, 0.5 * dt, &k1));
        let k3 = rhs(&axpy(&p, 0.5 * dt, &k2));
        let k4 = rhs(&axpy(&p, dt, &k3));
        let next: Point =
            std::array::from_fn(|k| p[k] + dt / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]));
        p = retract(&next);
        if every > 0 && s % every == 0 {
            samples.push((s as f64 * dt, p));
        }
    }
    (p, samples)
}

/// Exact flow on the meridian through `(sin δ, cos δ, 0, 0, −1)`:
/// `y = −tanh(t − t₀)`, `x = sech(t − t₀)` with `tanh t₀ = cos δ`, i.e.
/// `t₀ = ln cot(δ/2)`.
pub fn meridian_exact(delta: f64, t: f64) -> Point {
    let t0 = (0.5 * delta).tan().recip().ln();
    let s = t - t0;
    [1.0 / s.cosh(), -s.tanh(), 0.0, 0.0, -1.0]
}

#[derive(Clone, Debug, Serialize)]
pub struct CriticalPointReport {
    pub point: Point,
    pub value: f64,
    pub gradient_norm: f64,
    pub hessian_eigenvalues: [f64; 3],
    pub index: usize,
    pub expected_index: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ToyReport {
    pub critical_points: Vec<CriticalPointReport>,
    /// Start offset along the meridian from the index-1 point.
    pub meridian_delta: f64,
    pub meridian_end: Point,
    /// Distance of the meridian endpoint from `(0, −1, 0, 0, −1)`.
    pub meridian_endpoint_error: f64,
    /// Largest deviation from the closed-form meridian solution.
    pub meridian_max_error: f64,
    /// Largest `|⟨f′, ∇F⟩|/(|f′||∇F|) − 1` along `f(s) = (cos s, sin s, 0, 0, −1)`,
    /// i.e. how far the listed curve is from being tangent to the gradient.
    pub meridian_tangency_defect: f64,
    pub jitter_seed: u64,
    pub jitter_start: Point,
    pub jitter_end: Point,
    /// Index of the critical point nearest to the jittered endpoint.
    pub jitter_end_index: usize,
    pub jitter_end_distance: f64,
}

impl ToyReport {
    pub fn indices_ok(&self) -> bool {
        self.critical_points
            .iter()
            .all(|c| c.index == c.expected_index && c.gradient_norm < 1e-12)
    }
}

pub fn run_toy(seed: u64, jitter: f64, dt: f64, t_end: f64) -> ToyReport {
    let critical_points = CRITICAL_POINTS
        .iter()
        .map(|(p, expected)| {
            let ev = hessian_eigenvalues(p);
            CriticalPointReport {
                point: *p,
                value: toy_f(p),
                gradient_norm: norm(&toy_gradient(p)),
                hessian_eigenvalues: ev,
                index: ev.iter().filter(|e| **e < 0.0).count(),
                expected_index: *expected,
            }
        })
        .collect();

    // The index-1 point is itself stationary, so start a hair down the meridian.
    let delta: f64 = 1e-6;
    let start = [delta.sin(), delta.cos(), 0.0, 0.0, -1.0];
    let (end, samples) = integrate_flow(start, dt, t_end, 10);
    let target = CRITICAL_POINTS[2].0;
    let dist = |a: &Point, b: &Point| norm(&std::array::from_fn(|k| a[k] - b[k]));
    let meridian_max_error = samples
        .iter()
        .map(|(t, p)| dist(p, &meridian_exact(delta, *t)))
        .fold(0.0, f64::max);
    let meridian_tangency_defect = (1..100)
        .map(|i| {
            let s = -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * i as f64 / 100.0;
            let p = [s.cos(), s.sin(), 0.0, 0.0, -1.0];
            let tangent = [-s.sin(), s.cos(), 0.0, 0.0, 0.0];
            let g = toy_gradient(&p);
            let c: f64 =
                (0..5).map(|k| tangent[k] * g[k]).sum::<f64>() / (norm(&g) * norm(&tangent));
            (c.abs() - 1.0).abs()
        })
        .fold(0.0, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = CRITICAL_POINTS[1].0;
    let basis = tangent_basis(&base);
    let mut v = [0.0; 5];
    for b in &basis {
        let c: f64 = rng.gen_range(-1.0..1.0);
        v = axpy(&v, c * jitter, b);
    }
    let jitter_start = exp_map(&base, &v);
    let (jitter_end, _) = integrate_flow(jitter_start, dt, t_end, 0);
    let (jitter_end_index, jitter_end_distance) = CRITICAL_POINTS
        .iter()
        .map(|(p, idx)| (*idx, dist(p, &jitter_end)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();

    ToyReport {
        critical_points,
        meridian_delta: delta,
        meridian_end: end,
        meridian_endpoint_error: dist(&end, &target),
        meridian_max_error,
        meridian_tangency_defect,
        jitter_seed: seed,
        jitter_start,
        jitter_end,
        jitter_end_index,
        jitter_end_distance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hessian_matches_closed_form() {
        // On a product of unit spheres the intrinsic Hessian is the tangential
        // part of D²F minus ⟨∇F, p⟩ on each factor. At (0, ±1, 0, 0, ±1) this
        // is diagonal with entries −y(u+2), −yu, −yu.
        for (p, _) in CRITICAL_POINTS {
            let (y, u) = (p[1], p[4]);
            let mut expect = [-y * (u + 2.0), -y * u, -y * u];
            expect.sort_by(f64::total_cmp);
            let got = hessian_eigenvalues(&p);
            for k in 0..3 {
                assert!(
                    (got[k] - expect[k]).abs() < 1e-8,
                    "{p:?}: {got:?} vs {expect:?}"
                );
            }
        }
    }

    #[test]
    fn listed_points_are_critical_with_expected_indices() {
        let r = run_toy(7, 1e-3, 1e-3, 60.0);
        assert!(r.indices_ok(), "{:?}", r.critical_points);
    }

    #[test]
    fn meridian_flow_reaches_index_two_point() {
        let r = run_toy(7, 1e-3, 1e-3, 60.0);
        assert!(
            r.meridian_endpoint_error < 1e-6,
            "{}",
            r.meridian_endpoint_error
        );
        assert!(r.meridian_max_error < 1e-8, "{}", r.meridian_max_error);
        assert!(r.meridian_tangency_defect < 1e-12);
    }

    #[test]
    fn jittered_flow_reaches_minimum_and_is_seeded() {
        let a = run_toy(3, 1e-3, 1e-3, 60.0);
        assert_eq!(a.jitter_end_index, 0);
        assert!(a.jitter_end_distance < 1e-6);
        let b = run_toy(3, 1e-3, 1e-3, 60.0);
        assert_eq!(a.jitter_end, b.jitter_end);
    }

    #[test]
    fn flow_decreases_f() {
        let (_, s) = integrate_flow([0.3, 0.9, 0.1, -0.4, 0.2], 1e-3, 5.0, 1);
        assert!(s
            .windows(2)
            .all(|w| toy_f(&w[1].1) <= toy_f(&w[0].1) + 1e-15));
    }
}
