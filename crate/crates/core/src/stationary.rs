//! The two nonconstant critical points used throughout: the torus-symmetric
//! solution `u^{−∞}` (a function of η, vanishing on the Clifford torus) and
//! the ground state (a function of geodesic distance to a pole, vanishing on
//! an equator).
//!
//! Both are found as 1D boundary-value problems on half the interval with an
//! odd reflection across the midpoint. The 1D operator is the finite-volume
//! radial part of the 3D Laplacian, built from the same expressions as
//! [`TorusGrid`], so an η-profile solved with `n = n_eta` lifts to an exact
//! critical point of the discrete 3D energy.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{ScalarField, TorusGrid};
use crate::potential::{heteroclinic, DoubleWell};

/// Which 1D reduction a profile lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileCoordinate {
    /// η ∈ (0, π/2), density `cos η sin η`, odd about π/4.
    Eta,
    /// Geodesic distance r ∈ (0, π) from a pole, density `sin² r`, odd about π/2.
    Geodesic,
}

impl ProfileCoordinate {
    pub fn length(self) -> f64 {
        match self {
            ProfileCoordinate::Eta => FRAC_PI_2,
            ProfileCoordinate::Geodesic => PI,
        }
    }

    /// Measure of the orbit of one point under the symmetry group
    /// (`4π²` for the torus angles, `4π` for the unit 2-sphere).
    pub fn orbit_area(self) -> f64 {
        match self {
            ProfileCoordinate::Eta => 4.0 * PI * PI,
            ProfileCoordinate::Geodesic => 4.0 * PI,
        }
    }
}

/// Cell-centred 1D grid with finite-volume metric data.
#[derive(Clone, Debug)]
pub(crate) struct RadialGrid {
    pub h: f64,
    pub nodes: Vec<f64>,
    /// Cell volumes `∫ density` over each cell.
    pub vol: Vec<f64>,
    /// Density at the `n + 1` faces; zero at both ends.
    pub face: Vec<f64>,
    /// `1/cos²` and `1/sin²` of the node (η grids only; empty otherwise).
    pub inv_cos2: Vec<f64>,
    pub inv_sin2: Vec<f64>,
}

impl RadialGrid {
    pub fn new(coordinate: ProfileCoordinate, n: usize) -> Self {
        match coordinate {
            ProfileCoordinate::Eta => Self::eta(n),
            ProfileCoordinate::Geodesic => Self::geodesic(n),
        }
    }

    /// Same expressions as `TorusGrid`, so values agree bit for bit.
    fn eta(n: usize) -> Self {
        let h = FRAC_PI_2 / n as f64;
        let nodes: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * h).collect();
        let sin: Vec<f64> = nodes.iter().map(|e| e.sin()).collect();
        let cos: Vec<f64> = (0..n).map(|i| sin[n - 1 - i]).collect();
        let cell = h.sin();
        let vol = (0..n).map(|i| cell * (cos[i] * sin[i])).collect();
        let face_sin: Vec<f64> = (0..=n).map(|f| (f as f64 * h).sin()).collect();
        let mut face: Vec<f64> = (0..=n).map(|f| face_sin[f] * face_sin[n - f]).collect();
        face[0] = 0.0;
        face[n] = 0.0;
        Self {
            h,
            nodes,
            vol,
            face,
            inv_cos2: cos.iter().map(|c| 1.0 / (c * c)).collect(),
            inv_sin2: sin.iter().map(|s| 1.0 / (s * s)).collect(),
        }
    }

    fn geodesic(n: usize) -> Self {
        let h = PI / n as f64;
        let nodes: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * h).collect();
        // ∫ sin² over [r − h/2, r + h/2] = h/2 − cos(2r) sin(h)/2
        let vol = nodes
            .iter()
            .map(|r| 0.5 * h - 0.5 * (2.0 * r).cos() * h.sin())
            .collect();
        let mut face: Vec<f64> = (0..=n).map(|f| (f as f64 * h).sin().powi(2)).collect();
        face[0] = 0.0;
        face[n] = 0.0;
        let inv_sin2 = nodes.iter().map(|r| 1.0 / r.sin().powi(2)).collect();
        Self {
            h,
            nodes,
            vol,
            face,
            inv_cos2: Vec::new(),
            inv_sin2,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Coupling to the lower and upper neighbour: `F_face / (h V_i)`.
    pub fn coupling(&self, i: usize) -> (f64, f64) {
        let d = self.h * self.vol[i];
        (self.face[i] / d, self.face[i + 1] / d)
    }

    /// Radial Laplacian of `u` on the full interval.
    pub fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let (lo, up) = self.coupling(i);
                let mut acc = 0.0;
                if i + 1 < n {
                    acc += up * (u[i + 1] - u[i]);
                }
                if i > 0 {
                    acc -= lo * (u[i] - u[i - 1]);
                }
                acc
            })
            .collect()
    }

    /// Pointwise `|u′|²`, each face's share split evenly between its cells.
    pub fn gradient_density(&self, u: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let (lo, up) = self.coupling(i);
                let mut acc = 0.0;
                if i + 1 < n {
                    acc += 0.5 * up * (u[i + 1] - u[i]).powi(2);
                }
                if i > 0 {
                    acc += 0.5 * lo * (u[i] - u[i - 1]).powi(2);
                }
                acc
            })
            .collect()
    }
}

/// A 1D critical point on the full interval, odd about the midpoint.
#[derive(Clone, Debug)]
pub struct RadialProfile {
    pub coordinate: ProfileCoordinate,
    pub eps: f64,
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    /// Max-norm of `ε²Δu − W′(u)` at convergence.
    pub residual: f64,
    pub newton_iterations: usize,
}

impl RadialProfile {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn radial_grid(&self) -> RadialGrid {
        RadialGrid::new(self.coordinate, self.len())
    }

    /// Energy of the field obtained by rotating the profile, i.e. the 3D
    /// energy `∫ ε|∇u|²/2 + W(u)/ε` of its lift to S³.
    pub fn energy(&self, w: &DoubleWell) -> f64 {
        let (dir, pot) = self.energy_split(w);
        dir + pot
    }

    /// `(Dirichlet part, potential part)` of [`RadialProfile::energy`].
    pub fn energy_split(&self, w: &DoubleWell) -> (f64, f64) {
        let g = self.radial_grid();
        let grad = g.gradient_density(&self.values);
        let a = self.coordinate.orbit_area();
        let mut dir = 0.0;
        let mut pot = 0.0;
        for i in 0..self.len() {
            dir += g.vol[i] * 0.5 * self.eps * grad[i];
            pot += g.vol[i] * w.w(self.values[i]) / self.eps;
        }
        (a * dir, a * pot)
    }

    /// `∫ |ε|∇u|²/2 − W(u)/ε|` of the lifted field.
    pub fn discrepancy(&self, w: &DoubleWell) -> f64 {
        let g = self.radial_grid();
        let grad = g.gradient_density(&self.values);
        let s: f64 = (0..self.len())
            .map(|i| g.vol[i] * (0.5 * self.eps * grad[i] - w.w(self.values[i]) / self.eps).abs())
            .sum();
        s * self.coordinate.orbit_area()
    }

    /// Max-norm of `ε²Δu − W′(u)` over the full interval.
    pub fn pde_residual(&self, w: &DoubleWell) -> f64 {
        let g = self.radial_grid();
        let lap = g.laplacian(&self.values);
        lap.iter()
            .zip(&self.values)
            .map(|(l, u)| (self.eps * self.eps * l - w.dw(*u)).abs())
            .fold(0.0, f64::max)
    }

    /// Profile value at coordinate `s`, by monotone cubic (PCHIP)
    /// interpolation, extended evenly across both ends of the interval.
    pub fn value_at(&self, s: f64) -> f64 {
        let len = self.coordinate.length();
        let n = self.len();
        let mid = 0.5 * len;
        // Odd symmetry: evaluate on the first half only.
        if s > mid {
            return -self.value_at(len - s);
        }
        if s == mid {
            return 0.0;
        }
        let s = s.abs();
        let h = len / n as f64;
        let x = s / h - 0.5;
        let node = |k: isize| -> f64 {
            // even ghost across s = 0
            let k = if k < 0 { -k - 1 } else { k };
            self.values[k as usize]
        };
        let k = x.floor() as isize;
        let t = x - k as f64;
        let (y0, y1) = (node(k), node(k + 1));
        let slope = |j: isize| -> f64 {
            let dl = node(j) - node(j - 1);
            let dr = node(j + 1) - node(j);
            if dl * dr <= 0.0 {
                0.0
            } else {
                2.0 * dl * dr / (dl + dr)
            }
        };
        let (m0, m1) = (slope(k), slope(k + 1));
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1
    }

    /// Two-column CSV `coordinate,value`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("coordinate,value\n");
        for (x, v) in self.nodes.iter().zip(&self.values) {
            let _ = writeln!(s, "{x:.17e},{v:.17e}");
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Tridiagonal solve (Thomas algorithm); `a` sub-, `b` main, `c` super-diagonal.
pub(crate) fn thomas(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    cp[0] = c[0] / b[0];
    dp[0] = d[0] / b[0];
    for i in 1..n {
        let m = b[i] - a[i] * cp[i - 1];
        cp[i] = if i + 1 < n { c[i] / m } else { 0.0 };
        dp[i] = (d[i] - a[i] * dp[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 200;

fn half_residual(g: &RadialGrid, w: &DoubleWell, eps: f64, u: &[f64]) -> Vec<f64> {
    let m = u.len();
    let e2 = eps * eps;
    (0..m)
        .map(|i| {
            let (lo, up) = g.coupling(i);
            // Odd ghost across the midpoint face.
            let next = if i + 1 < m { u[i + 1] } else { -u[i] };
            let mut lap = up * (next - u[i]);
            if i > 0 {
                lap -= lo * (u[i] - u[i - 1]);
            }
            e2 * lap - w.dw(u[i])
        })
        .collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

fn solve_odd(
    coordinate: ProfileCoordinate,
    w: &DoubleWell,
    eps: f64,
    n: usize,
) -> Result<RadialProfile> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Config(format!("eps must be positive, got {eps}")));
    }
    if n < 16 || !n.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "profile resolution must be even and at least 16, got {n}"
        )));
    }
    let g = RadialGrid::new(coordinate, n);
    let m = n / 2;
    let mid = 0.5 * coordinate.length();
    let e2 = eps * eps;
    let mut u: Vec<f64> = g.nodes[..m]
        .iter()
        .map(|s| heteroclinic(w, eps, mid - s))
        .collect();
    let mut r = half_residual(&g, w, eps, &u);
    let mut norm = max_abs(&r);
    let mut iterations = 0;
    while norm >= NEWTON_TOL {
        if iterations == NEWTON_MAX_ITER {
            return Err(Error::NewtonFailed {
                residual: norm,
                iterations,
            });
        }
        iterations += 1;
        let mut a = vec![0.0; m];
        let mut b = vec![0.0; m];
        let mut c = vec![0.0; m];
        for i in 0..m {
            let (lo, up) = g.coupling(i);
            let up_diag = if i + 1 < m { up } else { 2.0 * up };
            b[i] = -e2 * (lo + up_diag) - w.d2w(u[i]);
            if i > 0 {
                a[i] = e2 * lo;
            }
            if i + 1 < m {
                c[i] = e2 * up;
            }
        }
        let rhs: Vec<f64> = r.iter().map(|x| -x).collect();
        let delta = thomas(&a, &b, &c, &rhs);
        // Backtracking on the residual max-norm.
        let mut step = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(x, d)| x + step * d).collect();
            let tr = half_residual(&g, w, eps, &trial);
            let tn = max_abs(&tr);
            if tn < norm || step < 1e-6 {
                u = trial;
                r = tr;
                norm = tn;
                break;
            }
            step *= 0.5;
        }
        if !norm.is_finite() {
            return Err(Error::NewtonFailed {
                residual: norm,
                iterations,
            });
        }
    }
    if max_abs(&u) < 1e-6 {
        return Err(Error::WrongBranch(format!(
            "Newton converged to the trivial solution u = 0 (eps = {eps} is too large for a layer)"
        )));
    }
    if let Some(i) = u.iter().position(|&x| x <= 0.0) {
        return Err(Error::WrongBranch(format!(
            "profile changes sign on the half interval at node {i}"
        )));
    }
    // Far from the layer 1 − u can fall below half an ulp and round to 1.
    if u.iter().any(|&x| x > 1.0) {
        return Err(Error::WrongBranch("profile exceeds 1".into()));
    }
    let mut values = u.clone();
    values.extend(u.iter().rev().map(|x| -x));
    Ok(RadialProfile {
        coordinate,
        eps,
        nodes: g.nodes,
        values,
        residual: norm,
        newton_iterations: iterations,
    })
}

/// The torus-symmetric critical point `u^{−∞}`: positive on `η < π/4`,
/// odd under `η ↦ π/2 − η`, solved on `n` cells of `(0, π/2)`.
pub fn solve_torus_symmetric(w: &DoubleWell, eps: f64, n: usize) -> Result<RadialProfile> {
    solve_odd(ProfileCoordinate::Eta, w, eps, n)
}

/// The ground state: radial about a pole, positive for `r < π/2`, odd under
/// `r ↦ π − r`, solved on `n` cells of `(0, π)`.
pub fn solve_ground_state(w: &DoubleWell, eps: f64, n: usize) -> Result<RadialProfile> {
    solve_odd(ProfileCoordinate::Geodesic, w, eps, n)
}

/// Embed a profile as a field on the grid.
///
/// η-profiles ignore `pole`; when the profile resolution equals `n_eta` the
/// nodal values are copied, otherwise they are interpolated. Geodesic
/// profiles are evaluated at `arccos⟨x, pole⟩`. Both are exactly odd under the
/// corresponding reflection of the grid.
pub fn lift_profile(
    p: &RadialProfile,
    grid: &Arc<TorusGrid>,
    pole: Option<[f64; 4]>,
) -> Result<ScalarField> {
    match p.coordinate {
        ProfileCoordinate::Eta => {
            let n = grid.n_eta();
            let slab: Vec<f64> = if p.len() == n {
                p.values.clone()
            } else {
                let mut s = vec![0.0; n];
                for i in 0..n.div_ceil(2) {
                    s[i] = p.value_at(grid.eta_nodes()[i]);
                    s[n - 1 - i] = -s[i];
                }
                if n % 2 == 1 {
                    s[n / 2] = 0.0;
                }
                s
            };
            let per = grid.n_phi1() * grid.n_phi2();
            let mut values = Vec::with_capacity(grid.len());
            for v in slab {
                values.extend(std::iter::repeat_n(v, per));
            }
            ScalarField::new(grid.clone(), values)
        }
        ProfileCoordinate::Geodesic => {
            let y = pole.ok_or_else(|| Error::Config("geodesic profile needs a pole".into()))?;
            let norm = y.iter().map(|c| c * c).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-10 {
                return Err(Error::Config(format!("pole {y:?} is not a unit vector")));
            }
            let values = grid
                .positions()
                .iter()
                .map(|x| {
                    let d: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
                    let r = d.abs().min(1.0).acos();
                    let v = p.value_at(r);
                    if d < 0.0 {
                        -v
                    } else {
                        v
                    }
                })
                .collect();
            ScalarField::new(grid.clone(), values)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, laplace_beltrami_with, AngularScheme, Isometry};
    use crate::potential::sigma;

    #[test]
    fn torus_profile_at_small_eps() {
        let w = DoubleWell::standard();
        let p = solve_torus_symmetric(&w, 0.05, 512).unwrap();
        assert!(p.residual < 1e-10);
        assert!(p.pde_residual(&w) < 1e-10);
        assert_eq!(p.value_at(std::f64::consts::FRAC_PI_4), 0.0);
        assert!((p.value_at(0.0) - 1.0).abs() < 1e-3);
        for i in 0..p.len() {
            assert_eq!(p.values[p.len() - 1 - i], -p.values[i]);
        }
        assert!(p.values.iter().all(|v| v.abs() < 1.0));
        assert!(p.newton_iterations < 50);
    }

    #[test]
    fn ground_state_boundary_and_monotonicity() {
        let w = DoubleWell::standard();
        let p = solve_ground_state(&w, 0.05, 512).unwrap();
        assert_eq!(p.value_at(FRAC_PI_2), 0.0);
        let n = p.len();
        // strictly decreasing across the layer
        for i in n / 2 - 40..n / 2 + 40 {
            assert!(p.values[i + 1] < p.values[i]);
        }
    }

    #[test]
    fn energies_are_ordered_and_near_limits() {
        let w = DoubleWell::standard();
        let s2 = 2.0 * sigma(&w);
        let t = solve_torus_symmetric(&w, 0.05, 512).unwrap().energy(&w) / s2;
        let g = solve_ground_state(&w, 0.05, 512).unwrap().energy(&w) / s2;
        assert!(t > g && g > 0.0);
        assert!((t / (2.0 * PI * PI) - 1.0).abs() < 0.025, "{t}");
        assert!((g / (4.0 * PI) - 1.0).abs() < 0.025, "{g}");
    }

    #[test]
    fn discrepancy_shrinks_with_eps() {
        let w = DoubleWell::standard();
        let d = |e: f64| solve_torus_symmetric(&w, e, 1024).unwrap().discrepancy(&w);
        assert!(d(0.05) < d(0.1));
    }

    #[test]
    fn trivial_branch_rejected_for_large_eps() {
        let w = DoubleWell::standard();
        let r = solve_torus_symmetric(&w, 0.5, 128);
        assert!(matches!(r, Err(Error::WrongBranch(_))), "{r:?}");
    }

    #[test]
    fn lifted_eta_profile_is_exact_discrete_critical_point() {
        let w = DoubleWell::standard();
        let eps = 0.1;
        let g = build_grid(32, 16, 16).unwrap();
        let p = solve_torus_symmetric(&w, eps, 32).unwrap();
        let u = lift_profile(&p, &g, None).unwrap();
        let lap = laplace_beltrami_with(&u, AngularScheme::SecondOrder);
        let res = lap
            .values()
            .iter()
            .zip(u.values())
            .map(|(l, v)| (eps * eps * l - w.dw(*v)).abs())
            .fold(0.0, f64::max);
        assert!(res < 1e-10, "{res}");
    }

    #[test]
    fn lifted_eta_profile_symmetries() {
        let w = DoubleWell::standard();
        let g = build_grid(24, 8, 8).unwrap();
        let p = solve_torus_symmetric(&w, 0.1, 64).unwrap();
        let u = lift_profile(&p, &g, None).unwrap();
        let s = crate::geometry::apply_isometry(&Isometry::swap_s(), &u).unwrap();
        assert_eq!(s.values(), u.map(|v| -v).values());
        for k in 0..8 {
            let th = k as f64 * g.d_phi1();
            let r = crate::geometry::apply_isometry(&Isometry::rho(th), &u).unwrap();
            assert_eq!(r.values(), u.values());
            let t = crate::geometry::apply_isometry(&Isometry::tau(th), &u).unwrap();
            assert_eq!(t.values(), u.values());
        }
    }

    #[test]
    fn geodesic_lift_vanishes_on_equator() {
        let w = DoubleWell::standard();
        let g = build_grid(16, 16, 16).unwrap();
        let p = solve_ground_state(&w, 0.1, 256).unwrap();
        let y = [0.5, 0.5, 0.5, 0.5];
        let u = lift_profile(&p, &g, Some(y)).unwrap();
        for (x, v) in g.positions().iter().zip(u.values()) {
            let d: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
            if d.abs() < 1e-14 {
                assert!(v.abs() < 1e-10);
            }
            assert!(v.abs() <= 1.0);
            assert!(v * d >= 0.0);
        }
        assert!(lift_profile(&p, &g, Some([1.0, 1.0, 0.0, 0.0])).is_err());
        assert!(lift_profile(&p, &g, None).is_err());
    }

    #[test]
    fn interpolation_reproduces_nodes() {
        let w = DoubleWell::standard();
        let p = solve_ground_state(&w, 0.1, 128).unwrap();
        for (x, v) in p.nodes.iter().zip(&p.values) {
            assert!((p.value_at(*x) - v).abs() < 1e-14);
        }
    }

    #[test]
    fn csv_has_two_columns() {
        let w = DoubleWell::standard();
        let p = solve_torus_symmetric(&w, 0.1, 64).unwrap();
        let csv = p.to_csv();
        assert_eq!(csv.lines().count(), 65);
        assert!(csv.lines().skip(1).all(|l| l.split(',').count() == 2));
    }
}
