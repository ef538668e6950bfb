//! Laplace–Beltrami operator and the shifted Helmholtz solve.
//!
//! The η part is a finite-volume flux form
//! `(Δ_η u)_i = [F_{i+½}(u_{i+1} − u_i) − F_{i−½}(u_i − u_{i−1})] / (Δη · V_i)`
//! with face metric `F = cos η sin η` and exact cell volume `V_i`. Both
//! coordinate circles carry zero face metric, so no pole closure is needed and
//! the operator is symmetric in the quadrature inner product.
//!
//! Angular second derivatives come in two flavours: spectral (exact on every
//! resolved Fourier mode) or centred second-order differences. The Helmholtz
//! solve diagonalizes either one by FFT and inverts it exactly.

use std::sync::Arc;

use rustfft::num_complex::Complex64;

use super::{ScalarField, TorusGrid};
use crate::error::{Error, Result};

/// How angular second derivatives are discretized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngularScheme {
    /// Multiply the k-th Fourier coefficient by `−k²`.
    #[default]
    Spectral,
    /// Centred differences `(u_{j+1} − 2u_j + u_{j−1}) / Δφ²`. The implicit
    /// operator is then an M-matrix, which gives a discrete maximum principle.
    SecondOrder,
}

impl AngularScheme {
    /// Symbol of `−∂²_φ` for wavenumber index `k` on an `n`-point periodic grid.
    pub fn symbol(self, k: usize, n: usize) -> f64 {
        let ks = if k <= n / 2 {
            k as f64
        } else {
            k as f64 - n as f64
        };
        match self {
            AngularScheme::Spectral => ks * ks,
            AngularScheme::SecondOrder => {
                let d = 2.0 * std::f64::consts::PI / n as f64;
                let s = (0.5 * ks * d).sin();
                4.0 * s * s / (d * d)
            }
        }
    }
}

/// η coupling coefficients: `lower[i] = F_{i−½}/(Δη V_i)`, `upper[i] = F_{i+½}/(Δη V_i)`.
pub(crate) struct EtaStencil {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub inv_cos2: Vec<f64>,
    pub inv_sin2: Vec<f64>,
}

impl EtaStencil {
    pub fn new(grid: &TorusGrid) -> Self {
        let n = grid.n_eta();
        let h = grid.d_eta();
        let cell = h.sin();
        let face = grid.face_metric();
        let mut lower = Vec::with_capacity(n);
        let mut upper = Vec::with_capacity(n);
        for i in 0..n {
            let vol = cell * (grid.cos_eta()[i] * grid.sin_eta()[i]);
            lower.push(face[i] / (h * vol));
            upper.push(face[i + 1] / (h * vol));
        }
        Self {
            lower,
            upper,
            inv_cos2: grid.cos_eta().iter().map(|c| 1.0 / (c * c)).collect(),
            inv_sin2: grid.sin_eta().iter().map(|s| 1.0 / (s * s)).collect(),
        }
    }
}

fn eta_part(grid: &TorusGrid, st: &EtaStencil, u: &[f64], out: &mut [f64]) {
    let n = grid.n_eta();
    let per = grid.n_phi1() * grid.n_phi2();
    for i in 0..n {
        let base = i * per;
        for q in 0..per {
            let c = u[base + q];
            let mut acc = 0.0;
            if i + 1 < n {
                acc += st.upper[i] * (u[base + per + q] - c);
            }
            if i > 0 {
                acc -= st.lower[i] * (c - u[base - per + q]);
            }
            out[base + q] = acc;
        }
    }
}

/// Apply Δ_g with spectral angular derivatives.
pub fn laplace_beltrami(f: &ScalarField) -> ScalarField {
    laplace_beltrami_with(f, AngularScheme::Spectral)
}

/// Apply Δ_g with the chosen angular discretization.
pub fn laplace_beltrami_with(f: &ScalarField, scheme: AngularScheme) -> ScalarField {
    let grid = f.grid().clone();
    let st = EtaStencil::new(&grid);
    let u = f.values();
    let mut out = vec![0.0; u.len()];
    eta_part(&grid, &st, u, &mut out);
    match scheme {
        AngularScheme::SecondOrder => {
            let (n, n1, n2) = grid.dims();
            let (i1, i2) = (
                1.0 / (grid.d_phi1() * grid.d_phi1()),
                1.0 / (grid.d_phi2() * grid.d_phi2()),
            );
            for i in 0..n {
                let c1 = st.inv_cos2[i] * i1;
                let c2 = st.inv_sin2[i] * i2;
                for j1 in 0..n1 {
                    let jp = (j1 + 1) % n1;
                    let jm = (j1 + n1 - 1) % n1;
                    for j2 in 0..n2 {
                        let kp = (j2 + 1) % n2;
                        let km = (j2 + n2 - 1) % n2;
                        let idx = grid.index(i, j1, j2);
                        let v = u[idx];
                        let d1 = u[grid.index(i, jp, j2)] - 2.0 * v + u[grid.index(i, jm, j2)];
                        let d2 = u[grid.index(i, j1, kp)] - 2.0 * v + u[grid.index(i, j1, km)];
                        out[idx] += c1 * d1 + c2 * d2;
                    }
                }
            }
        }
        AngularScheme::Spectral => {
            let mut spec = forward_fft(&grid, u);
            let sym = symbols(&grid, scheme);
            let (n, n1, n2) = grid.dims();
            let m2 = half(n2);
            for i in 0..n {
                for k2 in 0..m2 {
                    for k1 in 0..n1 {
                        let m = sym.0[k1] * st.inv_cos2[i] + sym.1[k2] * st.inv_sin2[i];
                        spec[(i * m2 + k2) * n1 + k1] *= -m;
                    }
                }
            }
            let ang = inverse_fft(&grid, spec);
            for (o, a) in out.iter_mut().zip(ang) {
                *o += a;
            }
        }
    }
    f.with_values(out)
}

/// Symbols for `k1 ∈ 0..n1` and the non-negative half `k2 ∈ 0..=n2/2`.
fn symbols(grid: &TorusGrid, scheme: AngularScheme) -> (Vec<f64>, Vec<f64>) {
    let (_, n1, n2) = grid.dims();
    (
        (0..n1).map(|k| scheme.symbol(k, n1)).collect(),
        (0..half(n2)).map(|k| scheme.symbol(k, n2)).collect(),
    )
}

/// Number of retained φ₂ wavenumbers of a real signal.
pub(crate) fn half(n2: usize) -> usize {
    n2 / 2 + 1
}

/// Real FFT along φ₂ and complex FFT along φ₁ of every η-slab. Output layout
/// is `[i][k2][k1]` with `k2 ∈ 0..=n2/2`.
pub(crate) fn forward_fft(grid: &TorusGrid, u: &[f64]) -> Vec<Complex64> {
    let (n, n1, n2) = grid.dims();
    let m2 = half(n2);
    let fwd = &grid.fft.fwd2;
    let mut row_in = fwd.make_input_vec();
    let mut row_out = fwd.make_output_vec();
    let mut scratch = fwd.make_scratch_vec();
    let mut out = vec![Complex64::new(0.0, 0.0); n * n1 * m2];
    for i in 0..n {
        let dst = &mut out[i * n1 * m2..(i + 1) * n1 * m2];
        for j1 in 0..n1 {
            let start = (i * n1 + j1) * n2;
            row_in.copy_from_slice(&u[start..start + n2]);
            fwd.process_with_scratch(&mut row_in, &mut row_out, &mut scratch)
                .expect("real FFT buffer sizes");
            for (k2, c) in row_out.iter().enumerate() {
                dst[k2 * n1 + j1] = *c;
            }
        }
    }
    grid.fft.fwd1.process(&mut out);
    out
}

/// Inverse of [`forward_fft`], scaled by `1/(n1 n2)`.
pub(crate) fn inverse_fft(grid: &TorusGrid, mut spec: Vec<Complex64>) -> Vec<f64> {
    let (n, n1, n2) = grid.dims();
    let m2 = half(n2);
    grid.fft.inv1.process(&mut spec);
    let inv = &grid.fft.inv2;
    let mut row_in = inv.make_input_vec();
    let mut row_out = inv.make_output_vec();
    let mut scratch = inv.make_scratch_vec();
    let scale = 1.0 / (n1 * n2) as f64;
    let mut out = vec![0.0; n * n1 * n2];
    for i in 0..n {
        let src = &spec[i * n1 * m2..(i + 1) * n1 * m2];
        for j1 in 0..n1 {
            for (k2, c) in row_in.iter_mut().enumerate() {
                *c = src[k2 * n1 + j1];
            }
            // the mean and Nyquist coefficients of a real row are real
            row_in[0].im = 0.0;
            row_in[m2 - 1].im = 0.0;
            inv.process_with_scratch(&mut row_in, &mut row_out, &mut scratch)
                .expect("real FFT buffer sizes");
            let start = (i * n1 + j1) * n2;
            for (o, v) in out[start..start + n2].iter_mut().zip(&row_out) {
                *o = v * scale;
            }
        }
    }
    out
}

/// Solve `(Id − c Δ) f = b` exactly for the discrete operator of `scheme`.
///
/// Each Fourier mode `(k1, k2)` decouples into one tridiagonal system in η,
/// which is strictly diagonally dominant for `c > 0`.
pub fn helmholtz_solve(b: &ScalarField, c: f64, scheme: AngularScheme) -> Result<ScalarField> {
    let plan = HelmholtzPlan::new(b.grid(), c, scheme)?;
    Ok(b.with_values(plan.solve(b.values())))
}

/// A factorized `Id − c Δ` for repeated solves with the same shift.
///
/// The Thomas elimination factors of every mode are stored in `[i][mode]`
/// order so that both sweeps run over contiguous memory.
pub struct HelmholtzPlan {
    grid: Arc<TorusGrid>,
    c: f64,
    scheme: AngularScheme,
    sub: Vec<f64>,
    cprime: Vec<f64>,
    inv_denom: Vec<f64>,
}

impl HelmholtzPlan {
    pub fn new(grid: &Arc<TorusGrid>, c: f64, scheme: AngularScheme) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::Config(format!(
                "Helmholtz shift must be positive, got {c}"
            )));
        }
        let st = EtaStencil::new(grid);
        let (n, n1, n2) = grid.dims();
        let m2 = half(n2);
        let per = n1 * m2;
        let (s1, s2) = symbols(grid, scheme);
        let sub: Vec<f64> = st.lower.iter().map(|l| -c * l).collect();
        let mut cprime = vec![0.0; n * per];
        let mut inv_denom = vec![0.0; n * per];
        for i in 0..n {
            let base = 1.0 + c * (st.lower[i] + st.upper[i]);
            let sup = -c * st.upper[i];
            for k2 in 0..m2 {
                for k1 in 0..n1 {
                    let q = k2 * n1 + k1;
                    let diag = base + c * (s1[k1] * st.inv_cos2[i] + s2[k2] * st.inv_sin2[i]);
                    let denom = if i == 0 {
                        diag
                    } else {
                        diag - sub[i] * cprime[(i - 1) * per + q]
                    };
                    assert!(denom > 0.0, "singular Helmholtz system");
                    inv_denom[i * per + q] = 1.0 / denom;
                    cprime[i * per + q] = sup / denom;
                }
            }
        }
        Ok(Self {
            grid: grid.clone(),
            c,
            scheme,
            sub,
            cprime,
            inv_denom,
        })
    }

    pub fn shift(&self) -> f64 {
        self.c
    }

    pub fn scheme(&self) -> AngularScheme {
        self.scheme
    }

    /// Returns `f` with `(Id − cΔ) f = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let grid = &self.grid;
        let (n, n1, n2) = grid.dims();
        let per = n1 * half(n2);
        let mut spec = forward_fft(grid, b);
        for q in 0..per {
            spec[q] *= self.inv_denom[q];
        }
        for i in 1..n {
            let (prev, cur) = spec.split_at_mut(i * per);
            let prev = &prev[(i - 1) * per..];
            let sub = self.sub[i];
            let inv = &self.inv_denom[i * per..(i + 1) * per];
            for q in 0..per {
                cur[q] = (cur[q] - prev[q] * sub) * inv[q];
            }
        }
        for i in (0..n - 1).rev() {
            let (cur, next) = spec.split_at_mut((i + 1) * per);
            let cur = &mut cur[i * per..];
            let cp = &self.cprime[i * per..(i + 1) * per];
            for q in 0..per {
                cur[q] -= next[q] * cp[q];
            }
        }
        inverse_fft(grid, spec)
    }
}

/// Pointwise `|∇u|²` consistent with the second-order operator: summing it
/// against the quadrature weights reproduces `−⟨u, Δu⟩` exactly.
pub fn dirichlet_density(f: &ScalarField) -> Vec<f64> {
    let grid = f.grid();
    let st = EtaStencil::new(grid);
    let (n, n1, n2) = grid.dims();
    let per = n1 * n2;
    let u = f.values();
    let (i1, i2) = (
        1.0 / (grid.d_phi1() * grid.d_phi1()),
        1.0 / (grid.d_phi2() * grid.d_phi2()),
    );
    let mut out = vec![0.0; u.len()];
    for i in 0..n {
        let c1 = 0.5 * st.inv_cos2[i] * i1;
        let c2 = 0.5 * st.inv_sin2[i] * i2;
        let (up, lo) = (0.5 * st.upper[i], 0.5 * st.lower[i]);
        let slab = &u[i * per..(i + 1) * per];
        for j1 in 0..n1 {
            let jp = if j1 + 1 == n1 { 0 } else { j1 + 1 };
            let jm = if j1 == 0 { n1 - 1 } else { j1 - 1 };
            let row = &slab[j1 * n2..(j1 + 1) * n2];
            let rp = &slab[jp * n2..(jp + 1) * n2];
            let rm = &slab[jm * n2..(jm + 1) * n2];
            let base = i * per + j1 * n2;
            for j2 in 0..n2 {
                let kp = if j2 + 1 == n2 { 0 } else { j2 + 1 };
                let km = if j2 == 0 { n2 - 1 } else { j2 - 1 };
                let v = row[j2];
                let mut acc = 0.0;
                if i + 1 < n {
                    let d = u[base + per + j2] - v;
                    acc += up * d * d;
                }
                if i > 0 {
                    let d = v - u[base - per + j2];
                    acc += lo * d * d;
                }
                let a = rp[j2] - v;
                let b = v - rm[j2];
                let p = row[kp] - v;
                let m = v - row[km];
                acc += c1 * (a * a + b * b) + c2 * (p * p + m * m);
                out[base + j2] = acc;
            }
        }
    }
    out
}

/// `∫|∇u|² dμ = −⟨u, Δu⟩` for the chosen angular scheme.
pub fn dirichlet_energy(f: &ScalarField, scheme: AngularScheme) -> f64 {
    let lap = laplace_beltrami_with(f, scheme);
    -super::inner(f, &lap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, inner, integrate};

    fn rayleigh(f: &ScalarField, scheme: AngularScheme) -> f64 {
        inner(&laplace_beltrami_with(f, scheme), f) / inner(f, f)
    }

    #[test]
    fn constant_is_harmonic() {
        let g = build_grid(12, 8, 10).unwrap();
        let f = ScalarField::constant(&g, 2.5);
        for scheme in [AngularScheme::Spectral, AngularScheme::SecondOrder] {
            let r = laplace_beltrami_with(&f, scheme).max_abs();
            assert!(r < 1e-10, "{scheme:?}: {r:e}");
        }
    }

    #[test]
    fn first_harmonic_eigenvalue() {
        let g = build_grid(64, 64, 64).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[0]);
        let lam = rayleigh(&f, AngularScheme::Spectral);
        assert!((lam + 3.0).abs() < 1e-3, "{lam}");
    }

    #[test]
    fn second_harmonic_eigenvalue() {
        let g = build_grid(64, 32, 32).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[0] * x[2]);
        let lam = rayleigh(&f, AngularScheme::Spectral);
        assert!((lam + 8.0).abs() < 5e-3, "{lam}");
    }

    #[test]
    fn convergence_order_on_x1() {
        let err = |n: usize| {
            let g = build_grid(n, n, n).unwrap();
            let f = ScalarField::from_fn(&g, |x| x[0]);
            (rayleigh(&f, AngularScheme::Spectral) + 3.0).abs()
        };
        let order = (err(32) / err(64)).log2();
        assert!(order >= 1.9, "order {order}");
    }

    #[test]
    fn schemes_agree_to_angular_order() {
        // The two angular discretizations differ by O(Δφ²) on smooth fields.
        let diff = |n: usize| {
            let g = build_grid(16, n, n).unwrap();
            let f = ScalarField::from_fn(&g, |x| x[0] * x[3] + x[1]);
            let a = laplace_beltrami_with(&f, AngularScheme::Spectral);
            let b = laplace_beltrami_with(&f, AngularScheme::SecondOrder);
            a.max_abs_diff(&b)
        };
        let (d1, d2) = (diff(16), diff(32));
        assert!(d1 / d2 > 3.5, "{d1} {d2}");
    }

    #[test]
    fn operator_is_symmetric() {
        let g = build_grid(10, 8, 12).unwrap();
        let f = ScalarField::from_fn(&g, |x| (x[0] + 2.0 * x[3]).sin() + x[1] * x[2]);
        let h = ScalarField::from_fn(&g, |x| (x[2] - x[1]).cos() * x[0]);
        for scheme in [AngularScheme::Spectral, AngularScheme::SecondOrder] {
            let a = inner(&laplace_beltrami_with(&f, scheme), &h);
            let b = inner(&f, &laplace_beltrami_with(&h, scheme));
            assert!((a - b).abs() < 1e-11 * a.abs().max(1.0), "{a} {b}");
        }
    }

    #[test]
    fn laplacian_integrates_to_zero() {
        let g = build_grid(10, 8, 8).unwrap();
        let f = ScalarField::from_fn(&g, |x| (3.0 * x[0] * x[3]).exp());
        for scheme in [AngularScheme::Spectral, AngularScheme::SecondOrder] {
            let total = integrate(&laplace_beltrami_with(&f, scheme)).unwrap();
            assert!(total.abs() < 1e-11, "{total}");
        }
    }

    #[test]
    fn helmholtz_round_trip() {
        let g = build_grid(16, 12, 8).unwrap();
        let b = ScalarField::from_fn(&g, |x| (x[0] - x[3]).sin() + x[1] * x[1] * x[2]);
        for scheme in [AngularScheme::Spectral, AngularScheme::SecondOrder] {
            let c = 0.37;
            let f = helmholtz_solve(&b, c, scheme).unwrap();
            let lap = laplace_beltrami_with(&f, scheme);
            let back = f.zip_map(&lap, |a, l| a - c * l);
            assert!(back.max_abs_diff(&b) < 1e-12, "{}", back.max_abs_diff(&b));
        }
    }

    #[test]
    fn helmholtz_on_constants_and_harmonics() {
        let g = build_grid(64, 32, 32).unwrap();
        let one = ScalarField::constant(&g, 1.0);
        let f = helmholtz_solve(&one, 0.8, AngularScheme::Spectral).unwrap();
        assert!(f.max_abs_diff(&one) < 1e-13);

        let c = 0.25;
        let x1 = ScalarField::from_fn(&g, |x| x[0]);
        let f = helmholtz_solve(&x1, c, AngularScheme::Spectral).unwrap();
        let expected = x1.map(|v| v / (1.0 + 3.0 * c));
        let rel = f.max_abs_diff(&expected) / expected.max_abs();
        assert!(rel < 5e-3, "{rel}");
    }

    #[test]
    fn helmholtz_rejects_nonpositive_shift() {
        let g = build_grid(4, 4, 4).unwrap();
        let one = ScalarField::constant(&g, 1.0);
        assert!(helmholtz_solve(&one, 0.0, AngularScheme::Spectral).is_err());
        assert!(helmholtz_solve(&one, -1.0, AngularScheme::Spectral).is_err());
    }

    #[test]
    fn density_sums_to_dirichlet_energy() {
        let g = build_grid(12, 10, 8).unwrap();
        let f = ScalarField::from_fn(&g, |x| (2.0 * x[0] + x[2] * x[3]).tanh());
        let dens = f.with_values(dirichlet_density(&f));
        let total = integrate(&dens).unwrap();
        let d = dirichlet_energy(&f, AngularScheme::SecondOrder);
        assert!((total - d).abs() < 1e-12 * d, "{total} {d}");
    }
}
