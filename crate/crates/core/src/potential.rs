//! Double-well potentials, the layer constant σ, and the heteroclinic profile.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Beyond `|t| > T_MAX` every potential is continued by its second-order
/// Taylor polynomial at `±T_MAX`.
pub const T_MAX: f64 = 2.0;

#[derive(Clone)]
enum Kind {
    /// `scale · (1 − t²)² / 4`
    Quartic {
        scale: f64,
    },
    Custom {
        w: RealFn,
        dw: RealFn,
        d2w: RealFn,
    },
}

/// A symmetric double-well potential `W` with wells at `±1`.
#[derive(Clone)]
pub struct DoubleWell {
    kind: Kind,
}

impl fmt::Debug for DoubleWell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::Quartic { scale } => write!(f, "DoubleWell::Quartic({scale})"),
            Kind::Custom { .. } => f.write_str("DoubleWell::Custom"),
        }
    }
}

impl Default for DoubleWell {
    fn default() -> Self {
        Self::standard()
    }
}

impl DoubleWell {
    /// `W(t) = (1 − t²)² / 4`.
    pub fn standard() -> Self {
        Self {
            kind: Kind::Quartic { scale: 1.0 },
        }
    }

    /// `c · (1 − t²)² / 4` for `c > 0`.
    pub fn scaled(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Config(format!(
                "potential scale must be positive, got {c}"
            )));
        }
        Ok(Self {
            kind: Kind::Quartic { scale: c },
        })
    }

    /// A user-supplied well, given by `W`, `W′` and `W″` on `[−2, 2]`.
    /// The defining properties are checked by sampling.
    pub fn custom(
        w: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dw: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2w: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let well = Self {
            kind: Kind::Custom {
                w: Arc::new(w),
                dw: Arc::new(dw),
                d2w: Arc::new(d2w),
            },
        };
        well.validate()?;
        Ok(well)
    }

    pub fn is_standard(&self) -> bool {
        matches!(self.kind, Kind::Quartic { scale } if scale == 1.0)
    }

    /// `W(−t) = W(t)`, so `u ↦ −u` maps critical points to critical points.
    pub fn is_even(&self) -> bool {
        match self.kind {
            Kind::Quartic { .. } => true,
            Kind::Custom { .. } => (0..=400).all(|k| {
                let t = k as f64 * 5e-3;
                (self.w(t) - self.w(-t)).abs() <= 1e-12 * (1.0 + self.w(t).abs())
            }),
        }
    }

    fn core(&self, t: f64) -> (f64, f64, f64) {
        match &self.kind {
            Kind::Quartic { scale } => {
                let a = 1.0 - t * t;
                (
                    scale * 0.25 * a * a,
                    scale * (t * t * t - t),
                    scale * (3.0 * t * t - 1.0),
                )
            }
            Kind::Custom { w, dw, d2w } => (w(t), dw(t), d2w(t)),
        }
    }

    /// `(W, W′, W″)` at `t`, including the continuation outside `[−2, 2]`.
    #[inline]
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        if t.abs() <= T_MAX {
            return self.core(t);
        }
        let s = t.signum();
        let (w0, w1, w2) = self.core(s * T_MAX);
        let d = t - s * T_MAX;
        (w0 + w1 * d + 0.5 * w2 * d * d, w1 + w2 * d, w2)
    }

    #[inline]
    pub fn w(&self, t: f64) -> f64 {
        match self.kind {
            Kind::Quartic { scale } if t.abs() <= T_MAX => {
                let a = 1.0 - t * t;
                scale * 0.25 * a * a
            }
            _ => self.eval(t).0,
        }
    }

    #[inline]
    pub fn dw(&self, t: f64) -> f64 {
        match self.kind {
            Kind::Quartic { scale } if t.abs() <= T_MAX => scale * (t * t * t - t),
            _ => self.eval(t).1,
        }
    }

    #[inline]
    pub fn d2w(&self, t: f64) -> f64 {
        match self.kind {
            Kind::Quartic { scale } if t.abs() <= T_MAX => scale * (3.0 * t * t - 1.0),
            _ => self.eval(t).2,
        }
    }

    /// `max |W″|` on `[−1, 1]`, the smallest admissible convex-splitting
    /// stabilization.
    pub fn max_curvature_on_wells(&self) -> f64 {
        (0..=2000)
            .map(|k| self.d2w(-1.0 + k as f64 * 1e-3).abs())
            .fold(0.0, f64::max)
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: &str| {
            Err(Error::Config(format!(
                "not a double-well potential: {what}"
            )))
        };
        if self.w(1.0).abs() > 1e-12 || self.w(-1.0).abs() > 1e-12 {
            return bad("W(±1) must vanish");
        }
        if self.dw(0.0).abs() > 1e-12 {
            return bad("W'(0) must vanish");
        }
        if !(self.d2w(1.0) > 0.0 && self.d2w(-1.0) > 0.0) {
            return bad("wells must be nondegenerate");
        }
        for k in 1..4000 {
            let t = k as f64 * 5e-4;
            let (wp, dwp, _) = self.eval(t);
            let (wm, _, _) = self.eval(-t);
            if !wp.is_finite() || wp < 0.0 {
                return bad(&format!("W({t}) = {wp} is negative"));
            }
            if (wp - wm).abs() > 1e-12 * (1.0 + wp.abs()) {
                return bad(&format!("W is not even at t = {t}"));
            }
            if t < 1.0 && t * dwp >= 0.0 {
                return bad(&format!("t W'(t) must be negative on (0,1), fails at {t}"));
            }
        }
        Ok(())
    }
}

/// `σ = ∫₋₁¹ √(W/2) dt` by adaptive Simpson quadrature (absolute error < 1e-10).
pub fn sigma(w: &DoubleWell) -> f64 {
    if let Kind::Quartic { scale } = w.kind {
        // ∫ (1 − t²)/(2√2) dt = √2/3
        return scale.sqrt() * std::f64::consts::SQRT_2 / 3.0;
    }
    sigma_adaptive(w, 1e-12)
}

/// Adaptive Simpson quadrature of the σ integrand, independent of the
/// closed form available for quartic wells.
pub fn sigma_adaptive(w: &DoubleWell, tol: f64) -> f64 {
    let f = |t: f64| (w.w(t).max(0.0) * 0.5).sqrt();
    adaptive_simpson(&f, -1.0, 1.0, tol)
}

/// Composite Gauss–Legendre (5 points per panel) σ quadrature on `panels`
/// equal panels.
pub fn sigma_fixed(w: &DoubleWell, panels: usize) -> f64 {
    const X: [f64; 5] = [
        -0.906_179_845_938_664,
        -0.538_469_310_105_683,
        0.0,
        0.538_469_310_105_683,
        0.906_179_845_938_664,
    ];
    const C: [f64; 5] = [
        0.236_926_885_056_189,
        0.478_628_670_499_366,
        0.568_888_888_888_889,
        0.478_628_670_499_366,
        0.236_926_885_056_189,
    ];
    let h = 2.0 / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let mid = -1.0 + (p as f64 + 0.5) * h;
        for (x, c) in X.iter().zip(C) {
            sum += c * (w.w(mid + 0.5 * h * x).max(0.0) * 0.5).sqrt();
        }
    }
    0.5 * h * sum
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// The heteroclinic layer `ℍ_ε(t)`: the odd solution of `ε²ℍ″ = W′(ℍ)`
/// connecting `−1` to `+1`.
///
/// Quartic wells use the closed form `tanh(√c·t/(ε√2))`; other wells
/// integrate `ε ℍ′ = √(2W(ℍ))` from `ℍ(0) = 0` with RK4.
pub fn heteroclinic(w: &DoubleWell, eps: f64, t: f64) -> f64 {
    if let Kind::Quartic { scale } = w.kind {
        return (scale.sqrt() * t / (eps * std::f64::consts::SQRT_2)).tanh();
    }
    let s = (t / eps).abs();
    let rhs = |h: f64| (2.0 * w.w(h).max(0.0)).sqrt();
    let steps = ((s / 1e-3).ceil() as usize).max(1);
    let ds = s / steps as f64;
    let mut h = 0.0f64;
    for _ in 0..steps {
        let k1 = rhs(h);
        let k2 = rhs(h + 0.5 * ds * k1);
        let k3 = rhs(h + 0.5 * ds * k2);
        let k4 = rhs(h + ds * k3);
        h = (h + ds / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).min(1.0);
    }
    h.copysign(t)
}

/// Derivative `ℍ_ε′(t) = √(2W(ℍ))/ε`.
pub fn heteroclinic_slope(w: &DoubleWell, eps: f64, t: f64) -> f64 {
    (2.0 * w.w(heteroclinic(w, eps, t)).max(0.0)).sqrt() / eps
}
