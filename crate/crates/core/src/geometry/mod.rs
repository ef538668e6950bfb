//! The round 3-sphere in toroidal coordinates.
//!
//! A point of S³ ⊂ ℝ⁴ is written
//! `x = (cos η cos φ₁, cos η sin φ₁, sin η cos φ₂, sin η sin φ₂)` with
//! `η ∈ [0, π/2]` and periodic `φ₁, φ₂`. The metric is
//! `dη² + cos²η dφ₁² + sin²η dφ₂²` and the volume density is `cos η sin η`.
//! The Clifford torus `x₁² + x₂² = x₃² + x₄²` is the level set `η = π/4`.
//!
//! The η direction is cell-centred, so no node sits on the coordinate
//! circles `η ∈ {0, π/2}`; the angular directions are uniform and periodic.

mod isometry;
mod laplace;

pub use isometry::{apply_isometry, Isometry, Projector, SignedIsometry, SymmetryGroup};
pub use laplace::{
    dirichlet_density, dirichlet_energy, helmholtz_solve, laplace_beltrami, laplace_beltrami_with,
    AngularScheme, HelmholtzPlan,
};

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::Arc;

use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub(crate) struct FftPlans {
    pub fwd1: Arc<dyn Fft<f64>>,
    pub inv1: Arc<dyn Fft<f64>>,
    pub fwd2: Arc<dyn RealToComplex<f64>>,
    pub inv2: Arc<dyn ComplexToReal<f64>>,
}

/// Discretization of S³ in toroidal coordinates.
pub struct TorusGrid {
    n_eta: usize,
    n_phi1: usize,
    n_phi2: usize,
    d_eta: f64,
    d_phi1: f64,
    d_phi2: f64,
    eta: Vec<f64>,
    cos_eta: Vec<f64>,
    sin_eta: Vec<f64>,
    /// Quadrature weight of any node in η-slab `i`.
    slab_weight: Vec<f64>,
    /// `cos η sin η` at the `n_eta + 1` cell faces; zero at both coordinate circles.
    face_metric: Vec<f64>,
    trig1: Vec<(f64, f64)>,
    trig2: Vec<(f64, f64)>,
    pub(crate) fft: FftPlans,
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("n_eta", &self.n_eta)
            .field("n_phi1", &self.n_phi1)
            .field("n_phi2", &self.n_phi2)
            .finish()
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dims() == other.dims()
    }
}

/// `(cos, sin)` of `2πj/n` for even `n`, built from one quadrant so that the
/// reflections of the circle map the table onto itself without rounding.
fn periodic_trig(n: usize) -> Vec<(f64, f64)> {
    let d = 2.0 * PI / n as f64;
    let half = n / 2;
    let mut t = vec![(0.0, 0.0); n];
    for j in 0..=half / 2 {
        t[j] = if n.is_multiple_of(4) {
            let q = n / 4;
            let cos = |k: usize| {
                if 2 * k <= q {
                    (k as f64 * d).cos()
                } else {
                    ((q - k) as f64 * d).sin()
                }
            };
            (cos(j), cos(q - j))
        } else {
            ((j as f64 * d).cos(), (j as f64 * d).sin())
        };
    }
    t[0].1 = 0.0;
    for j in half / 2 + 1..=half {
        let (c, s) = t[half - j];
        t[j] = (-c, s);
    }
    t[half].1 = 0.0;
    for j in half + 1..n {
        let (c, s) = t[n - j];
        t[j] = (c, -s);
    }
    t
}

/// Build a grid with `n_eta` cells in η ∈ (0, π/2) and `n_phi1 × n_phi2`
/// periodic angular nodes.
///
/// Angular dimensions must be even so that `φ ↦ −φ` and `φ ↦ π − φ` are node
/// permutations.
pub fn build_grid(n_eta: usize, n_phi1: usize, n_phi2: usize) -> Result<Arc<TorusGrid>> {
    TorusGrid::new(n_eta, n_phi1, n_phi2).map(Arc::new)
}

impl TorusGrid {
    pub fn new(n_eta: usize, n_phi1: usize, n_phi2: usize) -> Result<Self> {
        if n_eta < 4 || n_phi1 < 4 || n_phi2 < 4 {
            return Err(Error::Config(format!(
                "grid dimensions must be >= 4, got ({n_eta}, {n_phi1}, {n_phi2})"
            )));
        }
        if !n_phi1.is_multiple_of(2) || !n_phi2.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "angular dimensions must be even, got n_phi1 = {n_phi1}, n_phi2 = {n_phi2}"
            )));
        }
        let d_eta = FRAC_PI_2 / n_eta as f64;
        let d_phi1 = 2.0 * PI / n_phi1 as f64;
        let d_phi2 = 2.0 * PI / n_phi2 as f64;
        let eta: Vec<f64> = (0..n_eta).map(|i| (i as f64 + 0.5) * d_eta).collect();
        let sin_eta: Vec<f64> = eta.iter().map(|e| e.sin()).collect();
        // cos η_i = sin η_{n-1-i}, written this way so the η ↦ π/2 − η mirror is exact.
        let cos_eta: Vec<f64> = (0..n_eta).map(|i| sin_eta[n_eta - 1 - i]).collect();
        // Exact cell integral of cos η sin η: sin(Δη)·cos η_i·sin η_i.
        let cell_factor = d_eta.sin();
        let slab_weight = (0..n_eta)
            .map(|i| cos_eta[i] * sin_eta[i] * cell_factor * d_phi1 * d_phi2)
            .collect();
        let face_sin: Vec<f64> = (0..=n_eta).map(|f| (f as f64 * d_eta).sin()).collect();
        let mut face_metric: Vec<f64> = (0..=n_eta)
            .map(|f| face_sin[f] * face_sin[n_eta - f])
            .collect();
        face_metric[0] = 0.0;
        face_metric[n_eta] = 0.0;
        let trig1 = periodic_trig(n_phi1);
        let trig2 = periodic_trig(n_phi2);

        let mut planner = FftPlanner::new();
        let mut real = RealFftPlanner::new();
        let fft = FftPlans {
            fwd1: planner.plan_fft_forward(n_phi1),
            inv1: planner.plan_fft_inverse(n_phi1),
            fwd2: real.plan_fft_forward(n_phi2),
            inv2: real.plan_fft_inverse(n_phi2),
        };
        Ok(Self {
            n_eta,
            n_phi1,
            n_phi2,
            d_eta,
            d_phi1,
            d_phi2,
            eta,
            cos_eta,
            sin_eta,
            slab_weight,
            face_metric,
            trig1,
            trig2,
            fft,
        })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n_eta, self.n_phi1, self.n_phi2)
    }

    pub fn n_eta(&self) -> usize {
        self.n_eta
    }

    pub fn n_phi1(&self) -> usize {
        self.n_phi1
    }

    pub fn n_phi2(&self) -> usize {
        self.n_phi2
    }

    pub fn len(&self) -> usize {
        self.n_eta * self.n_phi1 * self.n_phi2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn d_eta(&self) -> f64 {
        self.d_eta
    }

    pub fn d_phi1(&self) -> f64 {
        self.d_phi1
    }

    pub fn d_phi2(&self) -> f64 {
        self.d_phi2
    }

    /// Cell-centred η nodes.
    pub fn eta_nodes(&self) -> &[f64] {
        &self.eta
    }

    pub fn cos_eta(&self) -> &[f64] {
        &self.cos_eta
    }

    pub fn sin_eta(&self) -> &[f64] {
        &self.sin_eta
    }

    pub(crate) fn face_metric(&self) -> &[f64] {
        &self.face_metric
    }

    pub fn phi1(&self, j: usize) -> f64 {
        j as f64 * self.d_phi1
    }

    pub fn phi2(&self, j: usize) -> f64 {
        j as f64 * self.d_phi2
    }

    /// Flat index of node `(i_eta, i_phi1, i_phi2)`.
    #[inline]
    pub fn index(&self, i_eta: usize, i_phi1: usize, i_phi2: usize) -> usize {
        (i_eta * self.n_phi1 + i_phi1) * self.n_phi2 + i_phi2
    }

    #[inline]
    pub fn unindex(&self, idx: usize) -> (usize, usize, usize) {
        let i2 = idx % self.n_phi2;
        let rest = idx / self.n_phi2;
        (rest / self.n_phi1, rest % self.n_phi1, i2)
    }

    /// Quadrature weight of a node in slab `i_eta`; the same for every angle.
    ///
    /// The η factor is the exact integral of the volume density over the cell,
    /// so constants and `x_k²` integrate without error.
    #[inline]
    pub fn slab_weight(&self, i_eta: usize) -> f64 {
        self.slab_weight[i_eta]
    }

    /// Quadrature weights for every node, in field index order.
    pub fn weights(&self) -> Vec<f64> {
        let per_slab = self.n_phi1 * self.n_phi2;
        self.slab_weight
            .iter()
            .flat_map(|&w| std::iter::repeat_n(w, per_slab))
            .collect()
    }

    /// `(cos φ₁, sin φ₁)` at every φ₁ node, exactly symmetric under
    /// `φ ↦ −φ`, `φ ↦ π − φ` and (when `4 | n`) quarter turns.
    pub fn trig_phi1(&self) -> &[(f64, f64)] {
        &self.trig1
    }

    /// As [`TorusGrid::trig_phi1`] for φ₂.
    pub fn trig_phi2(&self) -> &[(f64, f64)] {
        &self.trig2
    }

    /// Embedding of node `(i, j1, j2)` into ℝ⁴.
    pub fn embed(&self, i_eta: usize, i_phi1: usize, i_phi2: usize) -> [f64; 4] {
        let (c, s) = (self.cos_eta[i_eta], self.sin_eta[i_eta]);
        let (c1, s1) = self.trig1[i_phi1];
        let (c2, s2) = self.trig2[i_phi2];
        [c * c1, c * s1, s * c2, s * s2]
    }

    /// Embedding of an arbitrary coordinate triple.
    pub fn embed_coords(eta: f64, phi1: f64, phi2: f64) -> [f64; 4] {
        let (c, s) = (eta.cos(), eta.sin());
        [
            c * phi1.cos(),
            c * phi1.sin(),
            s * phi2.cos(),
            s * phi2.sin(),
        ]
    }

    /// All node positions in field index order.
    pub fn positions(&self) -> Vec<[f64; 4]> {
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.n_eta {
            let (c, s) = (self.cos_eta[i], self.sin_eta[i]);
            for &(c1, s1) in &self.trig1 {
                for &(c2, s2) in &self.trig2 {
                    out.push([c * c1, c * s1, s * c2, s * s2]);
                }
            }
        }
        out
    }

    /// Volume of S³ as seen by this grid's quadrature.
    pub fn volume(&self) -> f64 {
        self.slab_weight.iter().sum::<f64>() * (self.n_phi1 * self.n_phi2) as f64
    }
}

/// A real function sampled at every node of a [`TorusGrid`].
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: Arc<TorusGrid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Arc<TorusGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Config(format!(
                "field has {} values but the grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: &Arc<TorusGrid>, value: f64) -> Self {
        Self {
            values: vec![value; grid.len()],
            grid: grid.clone(),
        }
    }

    pub fn zeros(grid: &Arc<TorusGrid>) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Sample `f` at the embedded position of every node.
    pub fn from_fn(grid: &Arc<TorusGrid>, f: impl Fn([f64; 4]) -> f64) -> Self {
        let values = grid.positions().into_iter().map(f).collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    /// Sample `f(η, φ₁, φ₂)` at every node.
    pub fn from_coords(grid: &Arc<TorusGrid>, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.n_eta() {
            let eta = grid.eta_nodes()[i];
            for j1 in 0..grid.n_phi1() {
                for j2 in 0..grid.n_phi2() {
                    values.push(f(eta, grid.phi1(j1), grid.phi2(j2)));
                }
            }
        }
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self {
            grid: self.grid.clone(),
            values,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        self.with_values(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert!(Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid);
        self.with_values(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    /// `self + scale * other`, in place.
    pub fn axpy(&mut self, scale: f64, other: &Self) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += scale * b;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::NonFinite { index }),
            None => Ok(()),
        }
    }
}

/// Midpoint quadrature `Σ f_i w_i` over S³.
///
/// Summation runs slab by slab in index order, so the result does not depend
/// on how the caller produced the field.
pub fn integrate(f: &ScalarField) -> Result<f64> {
    f.check_finite()?;
    Ok(integrate_unchecked(f.grid(), f.values()))
}

pub(crate) fn integrate_unchecked(grid: &TorusGrid, values: &[f64]) -> f64 {
    let per_slab = grid.n_phi1() * grid.n_phi2();
    values
        .chunks_exact(per_slab)
        .enumerate()
        .map(|(i, slab)| grid.slab_weight(i) * slab.iter().sum::<f64>())
        .sum()
}

/// `∫ f g dμ`.
pub fn inner(f: &ScalarField, g: &ScalarField) -> f64 {
    let grid = f.grid();
    let per_slab = grid.n_phi1() * grid.n_phi2();
    f.values()
        .chunks_exact(per_slab)
        .zip(g.values().chunks_exact(per_slab))
        .enumerate()
        .map(|(i, (a, b))| grid.slab_weight(i) * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_dimensions() {
        assert!(matches!(build_grid(3, 8, 8), Err(Error::Config(_))));
        assert!(matches!(build_grid(8, 7, 8), Err(Error::Config(_))));
        assert!(matches!(build_grid(8, 8, 9), Err(Error::Config(_))));
        assert!(build_grid(4, 4, 4).is_ok());
    }

    #[test]
    fn index_layout() {
        let g = build_grid(4, 4, 4).unwrap();
        assert_eq!(g.len(), 64);
        assert_eq!(g.index(0, 0, 1), 1);
        assert_eq!(g.index(0, 1, 0), 4);
        assert_eq!(g.index(1, 0, 0), 16);
        for idx in 0..g.len() {
            let (i, j1, j2) = g.unindex(idx);
            assert_eq!(g.index(i, j1, j2), idx);
        }
    }

    #[test]
    fn nodes_lie_on_the_sphere() {
        let g = build_grid(8, 6, 10).unwrap();
        for x in g.positions() {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            assert!((r2 - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn volume_is_two_pi_squared() {
        let g = build_grid(64, 64, 64).unwrap();
        let one = ScalarField::constant(&g, 1.0);
        let vol = integrate(&one).unwrap();
        assert!((vol - 2.0 * PI * PI).abs() < 1e-5, "{vol}");
    }

    #[test]
    fn coordinate_square_integrates_to_quarter_volume() {
        let g = build_grid(64, 64, 64).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[0] * x[0]);
        let v = integrate(&f).unwrap();
        assert!((v - PI * PI / 2.0).abs() < 1e-5, "{v}");
    }

    #[test]
    fn odd_function_integrates_to_zero() {
        let g = build_grid(16, 16, 16).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[0]);
        assert!(integrate(&f).unwrap().abs() < 1e-14);
    }

    #[test]
    fn half_space_volume() {
        let g = build_grid(32, 16, 16).unwrap();
        let f = ScalarField::from_coords(&g, |eta, _, _| if eta < PI / 4.0 { 1.0 } else { 0.0 });
        let v = integrate(&f).unwrap();
        assert!((v - PI * PI).abs() < 1e-12, "{v}");
    }

    #[test]
    fn non_finite_rejected() {
        let g = build_grid(4, 4, 4).unwrap();
        let mut f = ScalarField::zeros(&g);
        f.values_mut()[5] = f64::NAN;
        assert!(matches!(integrate(&f), Err(Error::NonFinite { index: 5 })));
    }

    #[test]
    fn mirror_is_exact() {
        let g = build_grid(10, 8, 8).unwrap();
        let n = g.n_eta();
        for i in 0..n {
            assert_eq!(g.cos_eta()[i], g.sin_eta()[n - 1 - i]);
            assert_eq!(g.slab_weight(i), g.slab_weight(n - 1 - i));
        }
    }

    #[test]
    fn trig_tables_are_accurate_and_exactly_symmetric() {
        for n in [4, 6, 8, 10, 16, 64] {
            let t = periodic_trig(n);
            for j in 0..n {
                let a = 2.0 * PI * j as f64 / n as f64;
                assert!((t[j].0 - a.cos()).abs() < 1e-15 && (t[j].1 - a.sin()).abs() < 1e-15);
                assert_eq!(t[(n - j) % n], (t[j].0, -t[j].1));
                assert_eq!(t[(n / 2 + n - j) % n], (-t[j].0, t[j].1));
                if n % 4 == 0 {
                    assert_eq!(t[(j + n / 4) % n], (-t[j].1, t[j].0));
                }
            }
        }
    }
}
