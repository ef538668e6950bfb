//! Isometries of S³ that preserve the toroidal grid.
//!
//! Every element handled here has the form `P = D ∘ Sᵃ` where `S` is the
//! swap `s(x) = (x₃, x₄, x₁, x₂)` and `D` acts in each coordinate plane by
//! `φ ↦ ±φ + c`. This group contains the rotations `ρ^θ`, `τ^θ`, the swap,
//! and every reflection `r_v` with `v` in one of the two coordinate planes.
//! On a grid whose angular spacing divides every shift, `P` is a node
//! permutation and acts on fields without interpolation.

use std::f64::consts::{PI, TAU};

use super::{ScalarField, TorusGrid};
use crate::error::{Error, Result};

const ANGLE_TOL: f64 = 1e-9;

fn wrap(angle: f64) -> f64 {
    let a = angle.rem_euclid(TAU);
    if TAU - a < ANGLE_TOL {
        0.0
    } else {
        a
    }
}

fn same_angle(a: f64, b: f64) -> bool {
    let d = (a - b).rem_euclid(TAU);
    d < ANGLE_TOL || TAU - d < ANGLE_TOL
}

/// One planar factor `φ ↦ ±φ + shift`.
#[derive(Clone, Copy, Debug)]
struct PlaneMap {
    flip: bool,
    shift: f64,
}

impl PlaneMap {
    const ID: PlaneMap = PlaneMap {
        flip: false,
        shift: 0.0,
    };

    fn sign(self) -> f64 {
        if self.flip {
            -1.0
        } else {
            1.0
        }
    }

    /// `self ∘ other`.
    fn then_after(self, other: PlaneMap) -> PlaneMap {
        PlaneMap {
            flip: self.flip ^ other.flip,
            shift: wrap(self.shift + self.sign() * other.shift),
        }
    }

    fn inverse(self) -> PlaneMap {
        PlaneMap {
            flip: self.flip,
            shift: wrap(-self.sign() * self.shift),
        }
    }

    fn apply(self, (a, b): (f64, f64)) -> (f64, f64) {
        // R_shift · diag(1, ±1)
        let b = if self.flip { -b } else { b };
        let (s, c) = self.shift.sin_cos();
        (c * a - s * b, s * a + c * b)
    }

    fn same(self, other: PlaneMap) -> bool {
        self.flip == other.flip && same_angle(self.shift, other.shift)
    }

    fn index_map(self, n: usize, spacing: f64) -> Result<(bool, usize)> {
        let steps = self.shift / spacing;
        let r = steps.round();
        if (steps - r).abs() > 1e-7 {
            return Err(Error::NonCommensurate {
                angle: self.shift,
                spacing,
            });
        }
        Ok((self.flip, (r as i64).rem_euclid(n as i64) as usize))
    }
}

/// An isometry of S³ that permutes the nodes of a commensurate grid.
#[derive(Clone, Copy, Debug)]
pub struct Isometry {
    swap: bool,
    p1: PlaneMap,
    p2: PlaneMap,
}

impl PartialEq for Isometry {
    fn eq(&self, other: &Self) -> bool {
        self.swap == other.swap && self.p1.same(other.p1) && self.p2.same(other.p2)
    }
}

impl Isometry {
    pub fn identity() -> Self {
        Self {
            swap: false,
            p1: PlaneMap::ID,
            p2: PlaneMap::ID,
        }
    }

    /// Rotation by `theta` in the `(x₁, x₂)` plane.
    pub fn rho(theta: f64) -> Self {
        Self {
            p1: PlaneMap {
                flip: false,
                shift: wrap(theta),
            },
            ..Self::identity()
        }
    }

    /// Rotation by `theta` in the `(x₃, x₄)` plane.
    pub fn tau(theta: f64) -> Self {
        Self {
            p2: PlaneMap {
                flip: false,
                shift: wrap(theta),
            },
            ..Self::identity()
        }
    }

    /// `s(x) = (x₃, x₄, x₁, x₂)`.
    pub fn swap_s() -> Self {
        Self {
            swap: true,
            ..Self::identity()
        }
    }

    /// Reflection `r_v(x) = x − 2⟨x, v⟩v` for a unit `v` lying in one of the
    /// coordinate planes.
    pub fn reflect(v: [f64; 4]) -> Result<Self> {
        let norm: f64 = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Config(format!(
                "reflection vector {v:?} is not unit length"
            )));
        }
        // In a plane, r_v maps angle φ to 2α + π − φ where α is the angle of v.
        let flip_with = |a: f64, b: f64| PlaneMap {
            flip: true,
            shift: wrap(2.0 * b.atan2(a) + PI),
        };
        if v[2].abs() < 1e-12 && v[3].abs() < 1e-12 {
            Ok(Self {
                p1: flip_with(v[0], v[1]),
                ..Self::identity()
            })
        } else if v[0].abs() < 1e-12 && v[1].abs() < 1e-12 {
            Ok(Self {
                p2: flip_with(v[2], v[3]),
                ..Self::identity()
            })
        } else {
            Err(Error::Config(format!(
                "reflection vector {v:?} must lie in the (x1,x2) or (x3,x4) plane"
            )))
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Isometry) -> Isometry {
        // D_P S^a D_Q S^b = D_P (S^a D_Q S^a) S^(a+b); conjugating by S swaps the planes.
        let (q1, q2) = if self.swap {
            (other.p2, other.p1)
        } else {
            (other.p1, other.p2)
        };
        Isometry {
            swap: self.swap ^ other.swap,
            p1: self.p1.then_after(q1),
            p2: self.p2.then_after(q2),
        }
    }

    pub fn inverse(&self) -> Isometry {
        // (D Sᵃ)⁻¹ = Sᵃ D⁻¹ = (Sᵃ D⁻¹ Sᵃ) Sᵃ
        let (i1, i2) = (self.p1.inverse(), self.p2.inverse());
        let (p1, p2) = if self.swap { (i2, i1) } else { (i1, i2) };
        Isometry {
            swap: self.swap,
            p1,
            p2,
        }
    }

    pub fn is_identity(&self) -> bool {
        *self == Isometry::identity()
    }

    /// Image of a point of ℝ⁴.
    pub fn apply_point(&self, x: [f64; 4]) -> [f64; 4] {
        let x = if self.swap {
            [x[2], x[3], x[0], x[1]]
        } else {
            x
        };
        let (a, b) = self.p1.apply((x[0], x[1]));
        let (c, d) = self.p2.apply((x[2], x[3]));
        [a, b, c, d]
    }

    /// Orthogonal matrix of the isometry, column `j` the image of `e_j`.
    pub fn matrix(&self) -> [[f64; 4]; 4] {
        let mut m = [[0.0; 4]; 4];
        for j in 0..4 {
            let mut e = [0.0; 4];
            e[j] = 1.0;
            let col = self.apply_point(e);
            for i in 0..4 {
                m[i][j] = col[i];
            }
        }
        m
    }

    /// Action on an unstable-manifold coordinate `a ∈ ℝ⁵`: the first entry
    /// is fixed and the last four transform like a point of ℝ⁴.
    pub fn apply_direction(&self, a: [f64; 5]) -> [f64; 5] {
        let y = self.apply_point([a[1], a[2], a[3], a[4]]);
        [a[0], y[0], y[1], y[2], y[3]]
    }

    /// Node permutation: entry `k` is the index of `P(node k)`.
    pub fn node_map(&self, grid: &TorusGrid) -> Result<Vec<usize>> {
        let (n, n1, n2) = grid.dims();
        if self.swap && n1 != n2 {
            return Err(Error::Config(format!(
                "swap isometry needs n_phi1 == n_phi2, got {n1} and {n2}"
            )));
        }
        let (f1, c1) = self.p1.index_map(n1, grid.d_phi1())?;
        let (f2, c2) = self.p2.index_map(n2, grid.d_phi2())?;
        let plane = |j: usize, flip: bool, c: usize, m: usize| {
            let j = if flip { (m - j) % m } else { j };
            (j + c) % m
        };
        let mut out = Vec::with_capacity(grid.len());
        for i in 0..n {
            for j1 in 0..n1 {
                for j2 in 0..n2 {
                    let (ti, a, b) = if self.swap {
                        (n - 1 - i, j2, j1)
                    } else {
                        (i, j1, j2)
                    };
                    out.push(grid.index(ti, plane(a, f1, c1, n1), plane(b, f2, c2, n2)));
                }
            }
        }
        Ok(out)
    }
}

/// Returns `f ∘ P⁻¹`: the field pushed forward by the isometry.
pub fn apply_isometry(p: &Isometry, f: &ScalarField) -> Result<ScalarField> {
    let map = p.node_map(f.grid())?;
    let src = f.values();
    let mut out = vec![0.0; src.len()];
    for (k, &t) in map.iter().enumerate() {
        out[t] = src[k];
    }
    Ok(f.with_values(out))
}

/// An isometry optionally composed with `u ↦ −u`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignedIsometry {
    pub iso: Isometry,
    pub negate: bool,
}

impl SignedIsometry {
    pub fn plain(iso: Isometry) -> Self {
        Self { iso, negate: false }
    }

    pub fn negated(iso: Isometry) -> Self {
        Self { iso, negate: true }
    }

    pub fn compose(&self, other: &SignedIsometry) -> SignedIsometry {
        SignedIsometry {
            iso: self.iso.compose(&other.iso),
            negate: self.negate ^ other.negate,
        }
    }

    /// `±(f ∘ P⁻¹)`.
    pub fn apply(&self, f: &ScalarField) -> Result<ScalarField> {
        let g = apply_isometry(&self.iso, f)?;
        Ok(if self.negate { g.map(|v| -v) } else { g })
    }

    /// Action on `a ∈ ℝ⁵`, consistent with the field action on
    /// `u + Σ a_j φ_j` when `u` is odd under the negated elements.
    pub fn apply_direction(&self, a: [f64; 5]) -> [f64; 5] {
        let b = self.iso.apply_direction(a);
        if self.negate {
            b.map(|v| -v)
        } else {
            b
        }
    }

    /// Conjugate `g ↦ R g R⁻¹`.
    pub fn conjugate_by(&self, r: &Isometry) -> SignedIsometry {
        SignedIsometry {
            iso: r.compose(&self.iso).compose(&r.inverse()),
            negate: self.negate,
        }
    }
}

/// A finite group of signed isometries used to project fields onto
/// symmetric ones.
#[derive(Clone, Debug)]
pub struct SymmetryGroup {
    elements: Vec<SignedIsometry>,
}

impl SymmetryGroup {
    /// Closure of `generators` under composition.
    pub fn generate(generators: &[SignedIsometry]) -> Result<Self> {
        let mut elements = vec![SignedIsometry::plain(Isometry::identity())];
        let mut frontier = elements.clone();
        while let Some(g) = frontier.pop() {
            for h in generators {
                let gh = g.compose(h);
                if !elements.contains(&gh) {
                    if elements.len() >= 4096 {
                        return Err(Error::Config(
                            "symmetry group is too large (is an angle irrational?)".into(),
                        ));
                    }
                    elements.push(gh);
                    frontier.push(gh);
                }
            }
        }
        let id = SignedIsometry::negated(Isometry::identity());
        if elements.contains(&id) {
            return Err(Error::Config(
                "symmetry group contains u -> -u; only the zero field is invariant".into(),
            ));
        }
        Ok(Self { elements })
    }

    pub fn elements(&self) -> &[SignedIsometry] {
        &self.elements
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn conjugate_by(&self, r: &Isometry) -> SymmetryGroup {
        SymmetryGroup {
            elements: self.elements.iter().map(|g| g.conjugate_by(r)).collect(),
        }
    }

    /// Precomputed node maps for fast repeated projection on one grid.
    pub fn projector(&self, grid: &TorusGrid) -> Result<Projector> {
        let maps = self
            .elements
            .iter()
            .map(|g| g.iso.node_map(grid))
            .collect::<Result<Vec<_>>>()?;
        let signs = self.elements.iter().map(|g| g.negate).collect();
        Ok(Projector { maps, signs })
    }

    /// Average of `±f ∘ g⁻¹` over the group.
    pub fn project(&self, f: &ScalarField) -> Result<ScalarField> {
        let mut out = f.clone();
        self.projector(f.grid())?.project_in_place(&mut out);
        Ok(out)
    }
}

/// Group average computed once per orbit.
///
/// Every orbit is averaged in a fixed element order and the mean is then
/// written to all orbit members with the element's sign, so the projected
/// field is exactly invariant (and exactly odd under negated elements), not
/// just invariant to round-off.
#[derive(Clone, Debug)]
pub struct Projector {
    /// `maps[g][k]` = index of `g(node k)`.
    maps: Vec<Vec<usize>>,
    signs: Vec<bool>,
}

impl Projector {
    pub fn project_in_place(&self, f: &mut ScalarField) {
        let order = self.maps.len() as f64;
        let vals = f.values_mut();
        let mut done = vec![false; vals.len()];
        for k in 0..vals.len() {
            if done[k] {
                continue;
            }
            let mut sum = 0.0;
            for (map, &neg) in self.maps.iter().zip(&self.signs) {
                let v = vals[map[k]];
                sum += if neg { -v } else { v };
            }
            let mut mean = sum / order;
            // a node fixed by a negated element can only carry zero
            let conflict = self
                .maps
                .iter()
                .zip(&self.signs)
                .any(|(m, &neg)| neg && m[k] == k);
            if conflict || mean == 0.0 {
                mean = 0.0;
            }
            for (map, &neg) in self.maps.iter().zip(&self.signs) {
                let t = map[k];
                vals[t] = if neg { -mean } else { mean };
                done[t] = true;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, integrate, laplace_beltrami_with, AngularScheme};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn close4(a: [f64; 4], b: [f64; 4]) -> bool {
        a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn explicit_actions_on_points() {
        let x = [0.1, 0.2, 0.3, 0.4];
        assert!(close4(
            Isometry::swap_s().apply_point(x),
            [0.3, 0.4, 0.1, 0.2]
        ));
        let r1 = Isometry::reflect([1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(close4(r1.apply_point(x), [-0.1, 0.2, 0.3, 0.4]));
        let r2 = Isometry::reflect([0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(close4(r2.apply_point(x), [0.1, -0.2, 0.3, 0.4]));
        let r4 = Isometry::reflect([0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(close4(r4.apply_point(x), [0.1, 0.2, 0.3, -0.4]));
        let rv = Isometry::reflect([FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0, 0.0]).unwrap();
        assert!(close4(rv.apply_point(x), [0.2, 0.1, 0.3, 0.4]));
        let rw = Isometry::reflect([0.0, 0.0, FRAC_1_SQRT_2, -FRAC_1_SQRT_2]).unwrap();
        assert!(close4(rw.apply_point(x), [0.1, 0.2, 0.4, 0.3]));
        let rho = Isometry::rho(PI / 2.0);
        assert!(close4(rho.apply_point(x), [-0.2, 0.1, 0.3, 0.4]));
    }

    #[test]
    fn reflection_matches_formula() {
        let v = [0.6, 0.8, 0.0, 0.0];
        let r = Isometry::reflect(v).unwrap();
        let x = [0.3, -0.5, 0.7, 0.1];
        let d: f64 = x.iter().zip(&v).map(|(a, b)| a * b).sum();
        let expected = [x[0] - 2.0 * d * v[0], x[1] - 2.0 * d * v[1], x[2], x[3]];
        assert!(close4(r.apply_point(x), expected));
    }

    #[test]
    fn reflect_rejects_bad_vectors() {
        assert!(Isometry::reflect([0.5, 0.5, 0.5, 0.5]).is_err());
        assert!(Isometry::reflect([2.0, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn composition_matches_point_action() {
        let a = Isometry::rho(0.3).compose(&Isometry::swap_s());
        let b = Isometry::reflect([0.0, 0.0, 0.8, 0.6])
            .unwrap()
            .compose(&Isometry::tau(1.1));
        let x = [0.5, -0.1, 0.2, 0.83];
        let ab = a.compose(&b);
        assert!(close4(ab.apply_point(x), a.apply_point(b.apply_point(x))));
        assert!(close4(ab.inverse().apply_point(ab.apply_point(x)), x));
        assert!(ab.compose(&ab.inverse()).is_identity());
    }

    #[test]
    fn swap_is_an_involution_on_fields() {
        let g = build_grid(6, 8, 8).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[0] + 2.0 * x[1] * x[2] - x[3].powi(3));
        let s = Isometry::swap_s();
        let back = apply_isometry(&s, &apply_isometry(&s, &f).unwrap()).unwrap();
        assert_eq!(back.values(), f.values());
    }

    #[test]
    fn rotation_shifts_phi1_index() {
        let g = build_grid(4, 8, 6).unwrap();
        let f = ScalarField::from_coords(&g, |e, p1, p2| e + 10.0 * p1 + 100.0 * p2);
        let r = apply_isometry(&Isometry::rho(g.d_phi1()), &f).unwrap();
        for i in 0..4 {
            for j1 in 0..8 {
                for j2 in 0..6 {
                    let from = f.values()[g.index(i, j1, j2)];
                    assert_eq!(r.values()[g.index(i, (j1 + 1) % 8, j2)], from);
                }
            }
        }
    }

    #[test]
    fn reflection_negates_coordinate_exactly() {
        let g = build_grid(6, 8, 8).unwrap();
        let x1 = ScalarField::from_coords(&g, |e, p1, _| e.cos() * p1.cos());
        let r = Isometry::reflect([1.0, 0.0, 0.0, 0.0]).unwrap();
        let y = apply_isometry(&r, &x1).unwrap();
        // The pushed-forward field equals the pointwise formula −x₁ up to the
        // rounding of cos at the permuted angles.
        let expect = x1.map(|v| -v);
        assert!(y.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn non_commensurate_rotation_rejected() {
        let g = build_grid(4, 8, 8).unwrap();
        let f = ScalarField::zeros(&g);
        assert!(matches!(
            apply_isometry(&Isometry::rho(0.1), &f),
            Err(Error::NonCommensurate { .. })
        ));
    }

    #[test]
    fn isometries_preserve_integrals_and_commute_with_laplacian() {
        let g = build_grid(8, 8, 8).unwrap();
        let f = ScalarField::from_fn(&g, |x| (x[0] + 0.3 * x[3]).exp() * x[1]);
        let isos = [
            Isometry::rho(g.d_phi1() * 3.0),
            Isometry::tau(g.d_phi2()),
            Isometry::swap_s(),
            Isometry::reflect([FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0, 0.0]).unwrap(),
            Isometry::reflect([0.0, 0.0, 1.0, 0.0]).unwrap(),
        ];
        let lap = laplace_beltrami_with(&f, AngularScheme::SecondOrder);
        for p in isos {
            let pf = apply_isometry(&p, &f).unwrap();
            assert!((integrate(&pf).unwrap() - integrate(&f).unwrap()).abs() < 1e-13);
            for scheme in [AngularScheme::SecondOrder, AngularScheme::Spectral] {
                let a = laplace_beltrami_with(&pf, scheme);
                let b = apply_isometry(&p, &laplace_beltrami_with(&f, scheme)).unwrap();
                assert!(a.max_abs_diff(&b) < 1e-11 * lap.max_abs(), "{p:?}");
            }
        }
    }

    #[test]
    fn direction_action_matches_rotation_convention() {
        let theta = 0.4;
        let a = [0.1, 1.0, 0.0, 0.5, 0.0];
        let b = Isometry::rho(theta).apply_direction(a);
        assert!((b[1] - theta.cos()).abs() < 1e-15 && (b[2] - theta.sin()).abs() < 1e-15);
        assert_eq!(b[0], 0.1);
        let s = Isometry::swap_s().apply_direction([1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(s, [1.0, 4.0, 5.0, 2.0, 3.0]);
    }

    #[test]
    fn group_generation_and_exact_projection() {
        let g = build_grid(8, 8, 8).unwrap();
        let rv = Isometry::reflect([FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0, 0.0]).unwrap();
        let rw = Isometry::reflect([0.0, 0.0, FRAC_1_SQRT_2, -FRAC_1_SQRT_2]).unwrap();
        let grp = SymmetryGroup::generate(&[
            SignedIsometry::plain(rv),
            SignedIsometry::plain(rw),
            SignedIsometry::negated(Isometry::swap_s()),
        ])
        .unwrap();
        assert_eq!(grp.order(), 8);
        let f = ScalarField::from_fn(&g, |x| (x[0] - 0.7 * x[2] + x[1] * x[3]).sin());
        let p = grp.project(&f).unwrap();
        for e in grp.elements() {
            let q = e.apply(&p).unwrap();
            assert_eq!(q.values(), p.values());
        }
    }

    #[test]
    fn group_with_negated_identity_rejected() {
        let r = SignedIsometry::negated(Isometry::identity());
        assert!(SymmetryGroup::generate(&[r]).is_err());
    }
}
