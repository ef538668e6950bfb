//! Diagnostics of the diffuse interface: energy measure, discrepancy, nodal
//! set, equator fit and the sphere/torus/constant classification.

use std::f64::consts::{FRAC_PI_4, PI};
use std::io::Write;
use std::sync::Arc;

use nalgebra::{Matrix4, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{energy_densities, measure};
use crate::geometry::{integrate_unchecked, ScalarField, TorusGrid};
use crate::potential::{heteroclinic, sigma, DoubleWell};

/// `∫ |ε|∇u|²/2 − W(u)/ε| dμ`.
pub fn discrepancy(f: &ScalarField, eps: f64, w: &DoubleWell) -> f64 {
    measure(f, eps, w).1
}

/// Zero crossings of `f` along every grid line, linearly interpolated in
/// the coordinates and embedded in S³.
pub fn extract_nodal(f: &ScalarField) -> Vec<[f64; 4]> {
    let grid = f.grid();
    let (n, n1, n2) = grid.dims();
    let u = f.values();
    let eta = grid.eta_nodes();
    let (h1, h2) = (grid.d_phi1(), grid.d_phi2());
    let mut out = Vec::new();
    let mut push = |e: f64, p1: f64, p2: f64| {
        let x = TorusGrid::embed_coords(e, p1, p2);
        let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        out.push(x.map(|c| c / r));
    };
    // fraction of the way from a to b at which the linear interpolant vanishes
    let cross = |a: f64, b: f64| -> Option<f64> {
        if (a > 0.0 && b <= 0.0) || (a < 0.0 && b >= 0.0) {
            Some(a / (a - b))
        } else if a == 0.0 && b != 0.0 {
            Some(0.0)
        } else {
            None
        }
    };
    for i in 0..n {
        for j1 in 0..n1 {
            for j2 in 0..n2 {
                let v = u[grid.index(i, j1, j2)];
                let (p1, p2) = (grid.phi1(j1), grid.phi2(j2));
                if i + 1 < n {
                    if let Some(t) = cross(v, u[grid.index(i + 1, j1, j2)]) {
                        push(eta[i] + t * (eta[i + 1] - eta[i]), p1, p2);
                    }
                }
                if let Some(t) = cross(v, u[grid.index(i, (j1 + 1) % n1, j2)]) {
                    push(eta[i], p1 + t * h1, p2);
                }
                if let Some(t) = cross(v, u[grid.index(i, j1, (j2 + 1) % n2)]) {
                    push(eta[i], p1, p2 + t * h2);
                }
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EquatorFit {
    /// Unit normal of the best-fitting great sphere.
    pub y: [f64; 4],
    /// Smallest eigenvalue of `Σ x xᵀ` divided by the point count.
    pub residual: f64,
    /// Too few points, or the two smallest eigenvalues nearly coincide.
    pub degenerate: bool,
}

/// Fits `S³ ∩ y^⊥` to `points` by the smallest eigenvector of the
/// second-moment matrix. The sign of `y` is left as the eigensolver returns
/// it; see [`orient`].
pub fn fit_equator(points: &[[f64; 4]]) -> EquatorFit {
    let mut m = Matrix4::<f64>::zeros();
    for x in points {
        for a in 0..4 {
            for b in 0..4 {
                m[(a, b)] += x[a] * x[b];
            }
        }
    }
    let count = points.len().max(1) as f64;
    let eig = SymmetricEigen::new(m);
    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let (l0, l1) = (eig.eigenvalues[order[0]], eig.eigenvalues[order[1]]);
    let col = eig.eigenvectors.column(order[0]);
    let y = [col[0], col[1], col[2], col[3]];
    let norm = y.iter().map(|c| c * c).sum::<f64>().sqrt();
    EquatorFit {
        y: y.map(|c| c / norm),
        residual: l0.max(0.0) / count,
        degenerate: points.len() < 10 || (l1 - l0) < 1e-3 * count,
    }
}

/// Flips `y` so that `f` is positive on `{⟨x, y⟩ > 0}` on average.
pub fn orient(y: [f64; 4], f: &ScalarField) -> [f64; 4] {
    let pos = f.grid().positions();
    let s: Vec<f64> = pos
        .iter()
        .zip(f.values())
        .map(|(x, v)| v * (0..4).map(|k| x[k] * y[k]).sum::<f64>())
        .collect();
    if integrate_unchecked(f.grid(), &s) < 0.0 {
        y.map(|c| -c)
    } else {
        y
    }
}

/// Angle between two unit vectors, in radians.
pub fn angle_between(a: [f64; 4], b: [f64; 4]) -> f64 {
    let d: f64 = (0..4).map(|k| a[k] * b[k]).sum();
    d.clamp(-1.0, 1.0).acos()
}

/// The three quadratic level-set functions `x₁²+x₂²−½`, `x₁x₂−x₃x₄` and
/// `x₁x₂+x₃x₄`, whose zero sets are `T_c`, `T_+` and `T_−`.
fn level_functions(x: [f64; 4]) -> [f64; 3] {
    let a = x[0] * x[1];
    let b = x[2] * x[3];
    [x[0] * x[0] + x[1] * x[1] - 0.5, a - b, a + b]
}

/// Energy-weighted mean squares of the level functions, and whether the
/// measure is too spread out to carry a layer.
fn raw_statistic(f: &ScalarField, eps: f64, w: &DoubleWell) -> (f64, bool) {
    let grid = f.grid();
    let (kin, pot) = energy_densities(f, eps, w);
    let rho: Vec<f64> = kin.iter().zip(&pot).map(|(k, p)| k + p).collect();
    let mass = integrate_unchecked(grid, &rho);
    let mean = mass / grid.volume();
    let peak = rho.iter().fold(0.0_f64, |m, v| m.max(*v));
    let low_confidence = !(mass > 0.0) || peak < 3.0 * mean;
    if !(mass > 0.0) {
        return (0.0, true);
    }
    let pos = grid.positions();
    let mut m = [0.0; 3];
    for (k, mk) in m.iter_mut().enumerate() {
        let g: Vec<f64> = pos
            .iter()
            .zip(&rho)
            .map(|(x, r)| {
                let h = level_functions(*x)[k];
                r * h * h
            })
            .collect();
        *mk = integrate_unchecked(grid, &g) / mass;
    }
    (0.5 * (m[1] + m[2]) - m[0], low_confidence)
}

/// Affine calibration of the torus statistic on one grid and `ε`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TorusCalibration {
    /// Raw statistic on a synthetic layer at `T_c`.
    pub at_clifford: f64,
    /// Mean raw statistic on synthetic layers at `T_+` and `T_−`.
    pub at_rotated: f64,
}

/// Heteroclinic layer `u = q(d/ε)` across a Clifford torus, where `d` is the
/// signed distance to `{y_a² + y_b² = ½}` in rotated coordinates `y = Rx`.
pub fn synthetic_layer(
    grid: &Arc<TorusGrid>,
    eps: f64,
    w: &DoubleWell,
    level: impl Fn([f64; 4]) -> f64,
) -> ScalarField {
    ScalarField::from_fn(grid, |x| {
        let c = (level(x) + 0.5).clamp(0.0, 1.0).sqrt();
        heteroclinic(w, eps, FRAC_PI_4 - c.acos())
    })
}

impl TorusCalibration {
    pub fn new(grid: &Arc<TorusGrid>, eps: f64, w: &DoubleWell) -> Self {
        let raw = |k: usize| {
            let f = synthetic_layer(grid, eps, w, |x| level_functions(x)[k]);
            raw_statistic(&f, eps, w).0
        };
        Self {
            at_clifford: raw(0),
            at_rotated: 0.5 * (raw(1) + raw(2)),
        }
    }

    /// Continuum values for an infinitely thin layer: `1/16` and `−1/32`.
    pub fn thin_layer() -> Self {
        Self {
            at_clifford: 1.0 / 16.0,
            at_rotated: -1.0 / 32.0,
        }
    }

    fn scale(&self, raw: f64) -> f64 {
        let mid = 0.5 * (self.at_clifford + self.at_rotated);
        let half = 0.5 * (self.at_clifford - self.at_rotated);
        ((raw - mid) / half).clamp(-1.0, 1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TorusStatistic {
    /// About `+1` for a layer at `T_c`, `−1` at `T_±`; clamped to `[−1, 1]`.
    pub value: f64,
    pub low_confidence: bool,
}

pub fn torus_statistic(f: &ScalarField, eps: f64, w: &DoubleWell) -> TorusStatistic {
    torus_statistic_with(f, eps, w, &TorusCalibration::new(f.grid(), eps, w))
}

pub fn torus_statistic_with(
    f: &ScalarField,
    eps: f64,
    w: &DoubleWell,
    cal: &TorusCalibration,
) -> TorusStatistic {
    let (raw, low_confidence) = raw_statistic(f, eps, w);
    TorusStatistic {
        value: cal.scale(raw),
        low_confidence,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InterfaceKind {
    ConstantPlus,
    ConstantMinus,
    Sphere,
    Torus,
    Unresolved,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Thresholds {
    /// `max|u ∓ 1|` below this is a constant.
    pub constant_band: f64,
    /// Largest equator-fit residual accepted for a sphere.
    pub sphere_residual: f64,
    /// Relative band around `4π`.
    pub sphere_area_band: f64,
    /// Relative band around `2π²`.
    pub torus_area_band: f64,
    /// Smallest `|torus_statistic|` that counts as decisive.
    pub torus_decisive: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            constant_band: 0.05,
            sphere_residual: 0.01,
            sphere_area_band: 0.1,
            torus_area_band: 0.1,
            torus_decisive: 0.5,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InterfaceReport {
    pub time: f64,
    /// `time` minus the moment the energy crossed `2σ·5π`, once known.
    pub shifted_time: Option<f64>,
    pub kind: InterfaceKind,
    pub area_proxy: f64,
    pub discrepancy: f64,
    /// `area_proxy` over the area of the surface of the reported kind.
    pub multiplicity_proxy: Option<f64>,
    /// Oriented normal of the fitted equator (spheres only).
    pub equator_normal: Option<[f64; 4]>,
    pub fit_residual: f64,
    pub torus_statistic: f64,
    pub torus_low_confidence: bool,
    /// Share of the energy measure in each η slab.
    pub eta_histogram: Vec<f64>,
    pub nodal_points: Vec<[f64; 4]>,
    pub thresholds: Thresholds,
}

impl InterfaceReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Writes one JSON object per line.
pub fn write_jsonl(reports: &[InterfaceReport], out: &mut impl Write) -> std::io::Result<()> {
    for r in reports {
        writeln!(out, "{}", r.to_json())?;
    }
    Ok(())
}

/// Classifier with the torus calibration and thresholds fixed for one grid
/// and `ε`.
pub struct Classifier {
    pub eps: f64,
    pub w: DoubleWell,
    pub sigma: f64,
    pub thresholds: Thresholds,
    pub calibration: TorusCalibration,
}

impl Classifier {
    pub fn new(grid: &Arc<TorusGrid>, eps: f64, w: &DoubleWell, thresholds: Thresholds) -> Self {
        Self {
            eps,
            w: w.clone(),
            sigma: sigma(w),
            thresholds,
            calibration: TorusCalibration::new(grid, eps, w),
        }
    }

    pub fn classify(&self, f: &ScalarField, time: f64) -> Result<InterfaceReport> {
        f.check_finite()?;
        let grid = f.grid();
        let th = &self.thresholds;
        let (kin, pot) = energy_densities(f, self.eps, &self.w);
        let rho: Vec<f64> = kin.iter().zip(&pot).map(|(k, p)| k + p).collect();
        let (parts, discrepancy) = measure(f, self.eps, &self.w);
        let energy = parts.total();
        let area_proxy = energy / (2.0 * self.sigma);

        let per = grid.n_phi1() * grid.n_phi2();
        let eta_histogram: Vec<f64> = rho
            .chunks_exact(per)
            .enumerate()
            .map(|(i, s)| {
                grid.slab_weight(i) * s.iter().sum::<f64>() / energy.max(f64::MIN_POSITIVE)
            })
            .collect();

        let nodal_points = extract_nodal(f);
        let fit = fit_equator(&nodal_points);
        let stat = torus_statistic_with(f, self.eps, &self.w, &self.calibration);

        let u = f.values();
        let near = |c: f64| u.iter().all(|v| (v - c).abs() < th.constant_band);
        let sphere_area = 4.0 * PI;
        let torus_area = 2.0 * PI * PI;
        let in_band = |a: f64, target: f64, band: f64| (a / target - 1.0).abs() <= band;
        let kind = if near(1.0) {
            InterfaceKind::ConstantPlus
        } else if near(-1.0) {
            InterfaceKind::ConstantMinus
        } else if !fit.degenerate
            && fit.residual < th.sphere_residual
            && in_band(area_proxy, sphere_area, th.sphere_area_band)
        {
            InterfaceKind::Sphere
        } else if !stat.low_confidence
            && stat.value.abs() >= th.torus_decisive
            && in_band(area_proxy, torus_area, th.torus_area_band)
        {
            InterfaceKind::Torus
        } else {
            InterfaceKind::Unresolved
        };
        let (equator_normal, multiplicity_proxy) = match kind {
            InterfaceKind::Sphere => (Some(orient(fit.y, f)), Some(area_proxy / sphere_area)),
            InterfaceKind::Torus => (None, Some(area_proxy / torus_area)),
            _ => (None, None),
        };
        Ok(InterfaceReport {
            time,
            shifted_time: None,
            kind,
            area_proxy,
            discrepancy,
            multiplicity_proxy,
            equator_normal,
            fit_residual: fit.residual,
            torus_statistic: stat.value,
            torus_low_confidence: stat.low_confidence,
            eta_histogram,
            nodal_points,
            thresholds: *th,
        })
    }
}

/// One-off classification with default thresholds.
pub fn classify(f: &ScalarField, eps: f64, w: &DoubleWell) -> Result<InterfaceReport> {
    if !(eps > 0.0) {
        return Err(Error::Config(format!("eps must be positive, got {eps}")));
    }
    Classifier::new(f.grid(), eps, w, Thresholds::default()).classify(f, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{apply_isometry, build_grid, Isometry};
    use crate::stationary::{lift_profile, solve_ground_state, solve_torus_symmetric};

    fn unit(v: [f64; 4]) -> [f64; 4] {
        let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        v.map(|c| c / n)
    }

    #[test]
    fn discrepancy_of_constants() {
        let w = DoubleWell::standard();
        let g = build_grid(8, 8, 8).unwrap();
        assert_eq!(discrepancy(&ScalarField::constant(&g, 1.0), 0.1, &w), 0.0);
        let d0 = discrepancy(&ScalarField::zeros(&g), 0.1, &w);
        assert!((d0 - 2.0 * PI * PI * 0.25 / 0.1).abs() < 1e-12);
    }

    #[test]
    fn nodal_set_of_torus_profile() {
        let w = DoubleWell::standard();
        let n = 32;
        let g = build_grid(n, 32, 32).unwrap();
        let p = solve_torus_symmetric(&w, 0.1, n).unwrap();
        let f = lift_profile(&p, &g, None).unwrap();
        let pts = extract_nodal(&f);
        assert!(!pts.is_empty());
        for x in &pts {
            let r: f64 = x.iter().map(|c| c * c).sum::<f64>().sqrt();
            assert!((r - 1.0).abs() < 1e-12);
            assert!((x[0] * x[0] + x[1] * x[1] - 0.5).abs() < 2.0 * g.d_eta());
        }
        let fit = fit_equator(&pts);
        // second moments of T_c are all 1/4
        assert!(fit.residual > 0.2, "{}", fit.residual);
    }

    #[test]
    fn constant_half_has_no_nodal_points() {
        let g = build_grid(8, 8, 8).unwrap();
        assert!(extract_nodal(&ScalarField::constant(&g, 0.5)).is_empty());
    }

    #[test]
    fn exact_equator_samples() {
        let y = unit([1.0, -2.0, 0.5, 3.0]);
        // orthonormal basis of y^⊥ by Gram–Schmidt
        let mut basis: Vec<[f64; 4]> = Vec::new();
        for e in 0..4 {
            let mut v = [0.0; 4];
            v[e] = 1.0;
            for b in std::iter::once(&y).chain(basis.iter()) {
                let d: f64 = (0..4).map(|k| v[k] * b[k]).sum();
                for k in 0..4 {
                    v[k] -= d * b[k];
                }
            }
            let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            if n > 1e-6 && basis.len() < 3 {
                basis.push(v.map(|c| c / n));
            }
        }
        let mut pts = Vec::new();
        for i in 0..20 {
            for j in 0..10 {
                let (a, b) = (2.0 * PI * i as f64 / 20.0, PI * (j as f64 + 0.5) / 10.0);
                let c = [b.sin() * a.cos(), b.sin() * a.sin(), b.cos()];
                pts.push(std::array::from_fn(|k| {
                    (0..3).map(|m| c[m] * basis[m][k]).sum()
                }));
            }
        }
        let fit = fit_equator(&pts);
        assert!(fit.residual < 1e-24, "{}", fit.residual);
        assert!(angle_between(fit.y, y).min(angle_between(fit.y, y.map(|c| -c))) < 1e-10);

        // 1% coordinate noise
        let mut state = 12345u64;
        let mut noise = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * 0.02
        };
        let noisy: Vec<[f64; 4]> = pts.iter().map(|x| unit(x.map(|c| c + noise()))).collect();
        let fit = fit_equator(&noisy);
        assert!(angle_between(fit.y, y).min(angle_between(fit.y, y.map(|c| -c))) < 0.05);
    }

    #[test]
    fn calibration_matches_thin_layer_limit() {
        let w = DoubleWell::standard();
        let g = build_grid(48, 48, 48).unwrap();
        let cal = TorusCalibration::new(&g, 0.05, &w);
        let thin = TorusCalibration::thin_layer();
        assert!(
            (cal.at_clifford - thin.at_clifford).abs() < 0.1 * thin.at_clifford,
            "{cal:?}"
        );
        assert!(
            (cal.at_rotated - thin.at_rotated).abs() < 0.1 * thin.at_rotated.abs(),
            "{cal:?}"
        );
    }

    #[test]
    fn torus_statistic_separates_clifford_tori() {
        let w = DoubleWell::standard();
        let eps = 0.1;
        let g = build_grid(32, 32, 32).unwrap();
        let cal = TorusCalibration::new(&g, eps, &w);
        // T_+ as the level set x₁x₂ = x₃x₄, independent of the calibration layers
        let tp = ScalarField::from_fn(&g, |x| {
            let h = x[0] * x[1] - x[2] * x[3];
            (h / (eps * 1.2)).tanh()
        });
        let s = torus_statistic_with(&tp, eps, &w, &cal);
        assert!(s.value < -0.9, "{s:?}");
        let p = solve_torus_symmetric(&w, eps, 32).unwrap();
        let tc = lift_profile(&p, &g, None).unwrap();
        let s = torus_statistic_with(&tc, eps, &w, &cal);
        assert!(s.value > 0.9 && !s.low_confidence, "{s:?}");
        let s = torus_statistic_with(&ScalarField::constant(&g, 0.5), eps, &w, &cal);
        assert!(s.low_confidence);
    }

    #[test]
    fn classify_lifted_solutions() {
        let w = DoubleWell::standard();
        let eps = 0.1;
        let g = build_grid(32, 32, 32).unwrap();
        let c = Classifier::new(&g, eps, &w, Thresholds::default());

        let p = solve_torus_symmetric(&w, eps, 32).unwrap();
        let r = c
            .classify(&lift_profile(&p, &g, None).unwrap(), 0.0)
            .unwrap();
        assert_eq!(r.kind, InterfaceKind::Torus);
        assert!(r.torus_statistic > 0.9);

        let pole = unit([1.0, 1.0, -1.0, -1.0]);
        let gs = solve_ground_state(&w, eps, 64).unwrap();
        let f = lift_profile(&gs, &g, Some(pole)).unwrap();
        let r = c.classify(&f, 0.0).unwrap();
        assert_eq!(
            r.kind,
            InterfaceKind::Sphere,
            "{} {}",
            r.fit_residual,
            r.area_proxy
        );
        assert!(angle_between(r.equator_normal.unwrap(), pole) < 0.05);

        // equivariance under a commensurate rotation
        let rot = Isometry::rho(2.0 * PI / 8.0).compose(&Isometry::tau(-2.0 * PI / 4.0));
        let r2 = c.classify(&apply_isometry(&rot, &f).unwrap(), 0.0).unwrap();
        assert!(
            angle_between(
                r2.equator_normal.unwrap(),
                rot.apply_point(r.equator_normal.unwrap())
            ) < 1e-9
        );
        assert!((r2.fit_residual - r.fit_residual).abs() < 1e-12);
        assert!((r2.area_proxy - r.area_proxy).abs() < 1e-10 * r.area_proxy);

        let r = c.classify(&ScalarField::constant(&g, 1.0), 0.0).unwrap();
        assert_eq!(r.kind, InterfaceKind::ConstantPlus);
        let r = c.classify(&ScalarField::constant(&g, -0.99), 0.0).unwrap();
        assert_eq!(r.kind, InterfaceKind::ConstantMinus);
    }

    #[test]
    fn report_serializes_with_fixed_keys() {
        let w = DoubleWell::standard();
        let g = build_grid(8, 8, 8).unwrap();
        let r = classify(&ScalarField::constant(&g, 1.0), 0.2, &w).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        for key in [
            "area_proxy",
            "discrepancy",
            "nodal_points",
            "kind",
            "equator_normal",
            "fit_residual",
            "eta_histogram",
            "torus_statistic",
        ] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["kind"], "constant_plus");
        let mut buf = Vec::new();
        write_jsonl(&[r.clone(), r], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2);
    }
}
