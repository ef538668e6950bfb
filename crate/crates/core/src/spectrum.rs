//! Negative spectrum of the linearized Allen–Cahn operator at a symmetric
//! critical point.
//!
//! For a background `u(η)` (or `u(r)`) the second variation separates into
//! Fourier modes `(k₁, k₂)` in the torus angles (or spherical harmonics of
//! degree ℓ). Each mode is a 1D Sturm–Liouville problem on the same
//! finite-volume grid as the profile, solved here by Sturm bisection and
//! inverse iteration on the symmetrized tridiagonal matrix.
//!
//! Sign convention: reported eigenvalues are those of
//! `−ℒ_ε = −Δ + W″(u)/ε²`, so a negative value is an unstable direction.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{apply_isometry, inner, Isometry, ScalarField, TorusGrid};
use crate::potential::DoubleWell;
use crate::stationary::{ProfileCoordinate, RadialGrid, RadialProfile};

/// Eigenvalues with `|λ| ≤ DEFAULT_ZERO_TOL` are treated as kernel
/// directions (Killing fields of the background) and not counted.
pub const DEFAULT_ZERO_TOL: f64 = 0.25;

/// Angular label of a separated mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    /// Fourier indices `(|k₁|, |k₂|)` in φ₁, φ₂.
    Torus(usize, usize),
    /// Spherical-harmonic degree on the geodesic spheres.
    Legendre(usize),
}

impl Mode {
    /// Number of independent 3D eigenfunctions sharing this radial factor.
    pub fn multiplicity(self) -> usize {
        match self {
            Mode::Torus(a, b) => (if a > 0 { 2 } else { 1 }) * (if b > 0 { 2 } else { 1 }),
            Mode::Legendre(l) => 2 * l + 1,
        }
    }

    fn shell(self) -> usize {
        match self {
            Mode::Torus(a, b) => a.max(b),
            Mode::Legendre(l) => l,
        }
    }

    fn labels(self) -> (usize, usize) {
        match self {
            Mode::Torus(a, b) => (a, b),
            Mode::Legendre(l) => (l, 0),
        }
    }
}

/// The 1D operator `A = Δ_radial − angular/metric − W″(u)/ε²` of one mode.
#[derive(Clone, Debug)]
pub struct ModeOperator {
    pub mode: Mode,
    grid: RadialGrid,
    /// Potential `q_i` so that `−A = −Δ_radial + q`.
    q: Vec<f64>,
}

impl ModeOperator {
    pub fn new(profile: &RadialProfile, w: &DoubleWell, mode: Mode) -> Result<Self> {
        let grid = RadialGrid::new(profile.coordinate, profile.len());
        let e2 = profile.eps * profile.eps;
        let q = match (profile.coordinate, mode) {
            (ProfileCoordinate::Eta, Mode::Torus(k1, k2)) => {
                let (a, b) = ((k1 * k1) as f64, (k2 * k2) as f64);
                (0..grid.len())
                    .map(|i| {
                        a * grid.inv_cos2[i] + b * grid.inv_sin2[i] + w.d2w(profile.values[i]) / e2
                    })
                    .collect()
            }
            (ProfileCoordinate::Geodesic, Mode::Legendre(l)) => {
                let a = (l * (l + 1)) as f64;
                (0..grid.len())
                    .map(|i| a * grid.inv_sin2[i] + w.d2w(profile.values[i]) / e2)
                    .collect()
            }
            (c, m) => {
                return Err(Error::Config(format!(
                    "mode {m:?} does not separate on a {c:?} profile"
                )))
            }
        };
        Ok(Self { mode, grid, q })
    }

    /// A constant background `u ≡ value` on an `n`-cell grid.
    pub fn constant(
        coordinate: ProfileCoordinate,
        n: usize,
        value: f64,
        eps: f64,
        w: &DoubleWell,
        mode: Mode,
    ) -> Result<Self> {
        let g = RadialGrid::new(coordinate, n);
        let p = RadialProfile {
            coordinate,
            eps,
            nodes: g.nodes.clone(),
            values: vec![value; n],
            residual: 0.0,
            newton_iterations: 0,
        };
        Self::new(&p, w, mode)
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// Apply `A` (not `−A`) to a nodal vector.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let mut out = self.grid.laplacian(f);
        for (o, (q, v)) in out.iter_mut().zip(self.q.iter().zip(f)) {
            *o -= q * v;
        }
        out
    }

    /// Weighted inner product `Σ V_i f_i g_i`.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.grid
            .vol
            .iter()
            .zip(f.iter().zip(g))
            .map(|(v, (a, b))| v * a * b)
            .sum()
    }

    /// Symmetric tridiagonal `V^{1/2}(−A)V^{−1/2}`: (diagonal, off-diagonal).
    fn symmetric_form(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.len();
        let g = &self.grid;
        let d = (0..n)
            .map(|i| {
                let (lo, up) = g.coupling(i);
                lo + up + self.q[i]
            })
            .collect();
        let e = (0..n - 1)
            .map(|i| -g.face[i + 1] / (g.h * (g.vol[i] * g.vol[i + 1]).sqrt()))
            .collect();
        (d, e)
    }
}

/// One eigenpair of `−A` for a mode.
#[derive(Clone, Debug)]
pub struct Eigenpair {
    pub mode: Mode,
    /// 0 for the lowest eigenvalue within the mode.
    pub level: usize,
    pub eigenvalue: f64,
    /// Radial factor, unit norm in the weighted inner product.
    pub eigenfunction: Vec<f64>,
}

/// Number of eigenvalues of the symmetric tridiagonal `(d, e)` below `x`.
fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let tiny = f64::MIN_POSITIVE.sqrt();
    let mut count = 0;
    let mut q = d[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..d.len() {
        if q.abs() < tiny {
            q = -tiny;
        }
        q = d[i] - x - e[i - 1] * e[i - 1] / q;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn gershgorin(d: &[f64], e: &[f64]) -> (f64, f64) {
    let n = d.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    (lo, hi)
}

/// The `k`-th smallest eigenvalue (0-based), bisected to full precision.
fn bisect(d: &[f64], e: &[f64], k: usize, bounds: (f64, f64)) -> f64 {
    let (mut lo, mut hi) = bounds;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return mid;
        }
        if sturm_count(d, e, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

/// Solve `(T − λ)x = b` for tridiagonal `T` by Gaussian elimination with
/// partial pivoting.
fn shifted_solve(d: &[f64], e: &[f64], lambda: f64, b: &[f64]) -> Vec<f64> {
    let n = d.len();
    // Row i holds entries at columns i, i+1, i+2 after pivoting.
    let mut r0: Vec<f64> = d.iter().map(|x| x - lambda).collect();
    let mut r1: Vec<f64> = (0..n).map(|i| if i + 1 < n { e[i] } else { 0.0 }).collect();
    let mut r2 = vec![0.0; n];
    let mut sub: Vec<f64> = (0..n).map(|i| if i > 0 { e[i - 1] } else { 0.0 }).collect();
    let mut rhs = b.to_vec();
    let tiny = f64::EPSILON * d.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1.0);
    for i in 0..n - 1 {
        let l = sub[i + 1];
        if l.abs() > r0[i].abs() {
            // swap rows i and i+1
            let (a0, a1, a2) = (r0[i], r1[i], r2[i]);
            r0[i] = l;
            r1[i] = r0[i + 1];
            r2[i] = r1[i + 1];
            let m = a0 / l;
            r0[i + 1] = a1 - m * r1[i];
            r1[i + 1] = a2 - m * r2[i];
            rhs.swap(i, i + 1);
            rhs[i + 1] -= m * rhs[i];
        } else {
            if r0[i].abs() < tiny {
                r0[i] = tiny;
            }
            let m = l / r0[i];
            r0[i + 1] -= m * r1[i];
            r1[i + 1] -= m * r2[i];
            rhs[i + 1] -= m * rhs[i];
        }
        sub[i + 1] = 0.0;
    }
    if r0[n - 1].abs() < tiny {
        r0[n - 1] = tiny;
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        if i + 1 < n {
            s -= r1[i] * x[i + 1];
        }
        if i + 2 < n {
            s -= r2[i] * x[i + 2];
        }
        x[i] = s / r0[i];
    }
    x
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

/// The `count` lowest eigenpairs of `−A`.
pub fn mode_spectrum(op: &ModeOperator, count: usize) -> Vec<Eigenpair> {
    let (d, e) = op.symmetric_form();
    let count = count.min(d.len());
    let bounds = gershgorin(&d, &e);
    (0..count)
        .map(|k| {
            let lambda = bisect(&d, &e, k, bounds);
            let mut y = vec![1.0; d.len()];
            for _ in 0..4 {
                y = shifted_solve(&d, &e, lambda, &y);
                normalize(&mut y);
            }
            // back to nodal values, unit weighted norm
            let mut f: Vec<f64> = y
                .iter()
                .zip(&op.grid.vol)
                .map(|(a, v)| a / v.sqrt())
                .collect();
            let imax = (0..f.len())
                .max_by(|&a, &b| f[a].abs().total_cmp(&f[b].abs()))
                .unwrap_or(0);
            if f[imax] < 0.0 {
                f.iter_mut().for_each(|x| *x = -*x);
            }
            Eigenpair {
                mode: op.mode,
                level: k,
                eigenvalue: lambda,
                eigenfunction: f,
            }
        })
        .collect()
}

/// Number of eigenvalues of `−A` below `x`.
pub fn count_below(op: &ModeOperator, x: f64) -> usize {
    let (d, e) = op.symmetric_form();
    sturm_count(&d, &e, x)
}

/// Negative spectrum of a background, with multiplicities.
#[derive(Clone, Debug)]
pub struct SpectrumResult {
    pub profile: Arc<RadialProfile>,
    /// Every negative and near-zero eigenpair, plus the lowest nonnegative
    /// one of each scanned mode, ordered by mode then level.
    pub entries: Vec<Eigenpair>,
    /// Negative eigenvalues counted with multiplicity.
    pub morse_index: usize,
    /// Near-zero eigenvalues counted with multiplicity (not in the index).
    pub nullity: usize,
    pub zero_tol: f64,
    pub k_max: usize,
}

impl SpectrumResult {
    /// Negative eigenvalues with multiplicity, ascending.
    pub fn negative_eigenvalues(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .entries
            .iter()
            .filter(|p| p.eigenvalue < -self.zero_tol)
            .flat_map(|p| std::iter::repeat_n(p.eigenvalue, p.mode.multiplicity()))
            .collect();
        out.sort_by(f64::total_cmp);
        out
    }

    pub fn find(&self, mode: Mode, level: usize) -> Option<&Eigenpair> {
        self.entries
            .iter()
            .find(|p| p.mode == mode && p.level == level)
    }

    /// CSV `k1,k2,lambda,multiplicity` (ℓ in `k1` for Legendre modes).
    pub fn to_csv(&self) -> String {
        let mut s =
            String::from("# eigenvalues of -L = -Laplacian + W''(u)/eps^2; negative = unstable\n");
        s.push_str("k1,k2,lambda,multiplicity\n");
        for p in &self.entries {
            let (a, b) = p.mode.labels();
            let _ = writeln!(s, "{a},{b},{:.17e},{}", p.eigenvalue, p.mode.multiplicity());
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Scan all modes up to `k_max` and count negative eigenvalues.
pub fn morse_index(
    profile: &RadialProfile,
    w: &DoubleWell,
    k_max: usize,
) -> Result<SpectrumResult> {
    morse_index_with(profile, w, k_max, DEFAULT_ZERO_TOL)
}

pub fn morse_index_with(
    profile: &RadialProfile,
    w: &DoubleWell,
    k_max: usize,
    zero_tol: f64,
) -> Result<SpectrumResult> {
    if k_max < 3 {
        return Err(Error::Config(format!(
            "k_max must be at least 3, got {k_max}"
        )));
    }
    let modes: Vec<Mode> = match profile.coordinate {
        ProfileCoordinate::Eta => (0..=k_max)
            .flat_map(|a| (0..=k_max).map(move |b| Mode::Torus(a, b)))
            .collect(),
        ProfileCoordinate::Geodesic => (0..=k_max).map(Mode::Legendre).collect(),
    };
    let mut entries = Vec::new();
    let mut morse = 0;
    let mut nullity = 0;
    for mode in modes {
        let op = ModeOperator::new(profile, w, mode)?;
        let below = count_below(&op, zero_tol);
        let pairs = mode_spectrum(&op, below + 1);
        for p in pairs {
            if p.eigenvalue < -zero_tol {
                if mode.shell() == k_max {
                    return Err(Error::CutoffViolated {
                        k_max,
                        mode: mode.labels(),
                        eigenvalue: p.eigenvalue,
                    });
                }
                morse += mode.multiplicity();
            } else if p.eigenvalue <= zero_tol {
                nullity += mode.multiplicity();
            }
            entries.push(p);
        }
    }
    Ok(SpectrumResult {
        profile: Arc::new(profile.clone()),
        entries,
        morse_index: morse,
        nullity,
        zero_tol,
        k_max,
    })
}

/// Morse index of the constant `u ≡ value` over the torus modes up to
/// `k_max`, resolved on `n` cells.
pub fn constant_morse_index(
    value: f64,
    eps: f64,
    w: &DoubleWell,
    n: usize,
    k_max: usize,
    zero_tol: f64,
) -> Result<usize> {
    let mut index = 0;
    for a in 0..=k_max {
        for b in 0..=k_max {
            let mode = Mode::Torus(a, b);
            let op = ModeOperator::constant(ProfileCoordinate::Eta, n, value, eps, w, mode)?;
            index += count_below(&op, -zero_tol) * mode.multiplicity();
        }
    }
    Ok(index)
}

/// The oriented, L²-orthonormal unstable basis `φ₁ … φ₅` on `grid`.
///
/// `φ₁ > 0` comes from mode (0,0); `φ₂ = g(η) cos φ₁` and `φ₃ = g(η) sin φ₁`
/// from mode (1,0) with `g > 0`; `φ₄ = φ₂∘s` and `φ₅ = φ₃∘s` are produced by
/// permuting nodes. The basis transforms like `(1, x₁, x₂, x₃, x₄)`.
pub fn unstable_basis(spec: &SpectrumResult, grid: &Arc<TorusGrid>) -> Result<[ScalarField; 5]> {
    if spec.morse_index != 5 {
        return Err(Error::IndexNotFive(spec.morse_index));
    }
    if spec.profile.coordinate != ProfileCoordinate::Eta {
        return Err(Error::Orientation(
            "basis needs a torus-symmetric background".into(),
        ));
    }
    if grid.n_eta() != spec.profile.len() || grid.n_phi1() != grid.n_phi2() {
        return Err(Error::Config(format!(
            "basis grid must have n_eta = {} and n_phi1 = n_phi2, got {:?}",
            spec.profile.len(),
            grid.dims()
        )));
    }
    let neg: Vec<&Eigenpair> = spec
        .entries
        .iter()
        .filter(|p| p.eigenvalue < -spec.zero_tol)
        .collect();
    let has = |m: Mode| neg.iter().any(|p| p.mode == m && p.level == 0);
    if neg.len() != 3
        || !has(Mode::Torus(0, 0))
        || !has(Mode::Torus(1, 0))
        || !has(Mode::Torus(0, 1))
    {
        return Err(Error::Orientation(format!(
            "unstable modes are not (0,0), (1,0), (0,1): {:?}",
            neg.iter().map(|p| (p.mode, p.level)).collect::<Vec<_>>()
        )));
    }
    let g0 = &spec.find(Mode::Torus(0, 0), 0).unwrap().eigenfunction;
    let g1 = &spec.find(Mode::Torus(1, 0), 0).unwrap().eigenfunction;
    if g0.iter().any(|&v| v <= 0.0) {
        return Err(Error::Orientation(
            "principal eigenfunction changes sign".into(),
        ));
    }
    let trig = grid.trig_phi1();
    let build = |f: &dyn Fn(usize, usize) -> f64| -> Result<ScalarField> {
        let (n, n1, n2) = grid.dims();
        let mut v = Vec::with_capacity(grid.len());
        for i in 0..n {
            for j1 in 0..n1 {
                for _ in 0..n2 {
                    v.push(f(i, j1));
                }
            }
        }
        let mut field = ScalarField::new(grid.clone(), v)?;
        let norm = inner(&field, &field).sqrt();
        field.values_mut().iter_mut().for_each(|x| *x /= norm);
        Ok(field)
    };
    let phi1 = build(&|i, _| g0[i])?;
    let phi2 = build(&|i, j| g1[i] * trig[j].0)?;
    let phi3 = build(&|i, j| g1[i] * trig[j].1)?;
    let s = Isometry::swap_s();
    let phi4 = apply_isometry(&s, &phi2)?;
    let phi5 = apply_isometry(&s, &phi3)?;
    Ok([phi1, phi2, phi3, phi4, phi5])
}
