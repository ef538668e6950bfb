//! Parabolic Allen–Cahn flow `∂_t u = Δu − W′(u)/ε²` on the grid.
//!
//! Time is measured so that the flow is the L² gradient flow of `E_ε/ε`,
//! hence `dE/dt = −∫ ε |∂_t u|²`. Both schemes solve one shifted Helmholtz
//! problem per step with second-order angular differences; the implicit
//! operator is then an M-matrix and the update obeys a discrete maximum
//! principle.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{
    dirichlet_density, inner, AngularScheme, HelmholtzPlan, Projector, ScalarField, SymmetryGroup,
    TorusGrid,
};
use crate::potential::DoubleWell;
use crate::stationary::{lift_profile, RadialProfile};

/// Nodes may exceed `|u| = 1` by this much before the maximum principle is
/// considered violated; the FFT solve is exact only to round-off.
pub const MAX_PRINCIPLE_SLACK: f64 = 1e-12;

/// Largest double below 1. Round-off excursions past `±1` within
/// [`MAX_PRINCIPLE_SLACK`] are cut off here, which only lowers `W`.
pub const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

/// Relative tolerance on a per-step energy increase.
pub const ENERGY_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// `(Id − dtΔ)u⁺ = u − (dt/ε²)W′(u)`; needs `dt ≤ ε²/2`.
    Imex,
    /// `(Id + dtS/ε² − dtΔ)u⁺ = u + (dt/ε²)(Su − W′(u))`; unconditionally
    /// energy stable for `S ≥ max|W″|` on `[−1, 1]`.
    ConvexSplit,
}

/// Stop once `area_proxy` has stayed within `band` (relative) of `target`
/// for `min_duration` time units.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Plateau {
    pub target: f64,
    pub band: f64,
    pub min_duration: f64,
}

#[derive(Clone, Debug)]
pub struct StepperConfig {
    pub eps: f64,
    pub dt: f64,
    pub scheme: Scheme,
    pub stabilization: f64,
    pub t_end: f64,
    /// Call the observer every this many steps (0 = only at the ends).
    pub snapshot_every: usize,
    /// Append an [`EnergyRow`] every this many steps.
    pub log_every: usize,
    /// Project onto invariant fields after every step.
    pub symmetrize: Option<SymmetryGroup>,
    /// Stop when `∫ε|∂_t u|² < tol_stationary · E₀`.
    pub tol_stationary: f64,
    pub plateau: Option<Plateau>,
    /// Stop once `max|u ∓ 1|` drops below this.
    pub stop_on_constant: Option<f64>,
}

impl StepperConfig {
    /// Convex splitting with `S = 2`, `dt = 0.1 ε²`.
    pub fn new(eps: f64) -> Self {
        Self {
            eps,
            dt: 0.1 * eps * eps,
            scheme: Scheme::ConvexSplit,
            stabilization: 2.0,
            t_end: 50.0,
            snapshot_every: 0,
            log_every: 1,
            symmetrize: None,
            tol_stationary: 1e-8,
            plateau: None,
            stop_on_constant: None,
        }
    }

    pub fn validate(&self, w: &DoubleWell) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad(format!("eps must be positive, got {}", self.eps));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if self.log_every == 0 {
            return bad("log_every must be at least 1".into());
        }
        match self.scheme {
            Scheme::Imex => {
                let limit = 0.5 * self.eps * self.eps;
                if self.dt > limit {
                    return Err(Error::TimeStepTooLarge { dt: self.dt, limit });
                }
            }
            Scheme::ConvexSplit => {
                let need = w.max_curvature_on_wells();
                if self.stabilization < need - 1e-12 {
                    return bad(format!(
                        "stabilization {} is below max |W''| = {need} on [-1, 1]",
                        self.stabilization
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Dirichlet and potential parts of `E_ε`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyParts {
    pub dirichlet: f64,
    pub potential: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.dirichlet + self.potential
    }
}

/// Pointwise `(ε|∇u|²/2, W(u)/ε)`.
pub fn energy_densities(f: &ScalarField, eps: f64, w: &DoubleWell) -> (Vec<f64>, Vec<f64>) {
    let grad = dirichlet_density(f);
    let kin = grad.into_iter().map(|g| 0.5 * eps * g).collect();
    let pot = f.values().iter().map(|&u| w.w(u) / eps).collect();
    (kin, pot)
}

/// `E_ε(u) = ∫ ε|∇u|²/2 + W(u)/ε` with the gradient of the flow's operator.
pub fn energy(f: &ScalarField, eps: f64, w: &DoubleWell) -> EnergyParts {
    measure(f, eps, w).0
}

/// Energy parts and `∫|ε|∇u|²/2 − W(u)/ε|`, summed slab by slab.
pub(crate) fn measure(f: &ScalarField, eps: f64, w: &DoubleWell) -> (EnergyParts, f64) {
    let grid = f.grid();
    let grad = dirichlet_density(f);
    let per = grid.n_phi1() * grid.n_phi2();
    let (mut kin, mut pot, mut disc) = (0.0, 0.0, 0.0);
    for (i, (g, u)) in grad
        .chunks_exact(per)
        .zip(f.values().chunks_exact(per))
        .enumerate()
    {
        let (mut k, mut p, mut d) = (0.0, 0.0, 0.0);
        for (gv, uv) in g.iter().zip(u) {
            let a = 0.5 * eps * gv;
            let b = w.w(*uv) / eps;
            k += a;
            p += b;
            d += (a - b).abs();
        }
        let wt = grid.slab_weight(i);
        kin += wt * k;
        pot += wt * p;
        disc += wt * d;
    }
    (
        EnergyParts {
            dirichlet: kin,
            potential: pot,
        },
        disc,
    )
}

#[derive(Clone, Debug)]
pub struct FlowState {
    pub time: f64,
    pub field: ScalarField,
    pub energy: f64,
    pub step_count: usize,
}

impl FlowState {
    pub fn new(field: ScalarField, eps: f64, w: &DoubleWell) -> Result<Self> {
        field.check_finite()?;
        let e = energy(&field, eps, w).total();
        Ok(Self {
            time: 0.0,
            field,
            energy: e,
            step_count: 0,
        })
    }
}

/// Default radius of the unstable ball: `0.1 ‖u^{−∞}‖_{L²}`.
pub fn default_r_max(critical: &ScalarField) -> f64 {
    0.1 * inner(critical, critical).sqrt()
}

/// Largest `r` with `max|u + r Σ d_j φ_j| ≤ 1` for a unit direction `d`.
///
/// Where `u` has saturated to `±1` in floating point any outward
/// perturbation is inadmissible, so this can be far below
/// [`default_r_max`] at small `ε`.
pub fn admissible_radius(critical: &ScalarField, basis: &[ScalarField; 5], d: [f64; 5]) -> f64 {
    let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut best = f64::INFINITY;
    for k in 0..critical.values().len() {
        let p: f64 = d
            .iter()
            .zip(basis)
            .map(|(c, phi)| c / norm * phi.values()[k])
            .sum();
        let u = critical.values()[k];
        let room = if p > 0.0 { 1.0 - u } else { 1.0 + u };
        if p != 0.0 {
            best = best.min(room / p.abs());
        }
    }
    best
}

/// `u^{−∞} + Σ a_j φ_j`, the linear approximation of the unstable-manifold
/// point with coordinates `a`, at time 0.
pub fn init_unstable(
    profile: &RadialProfile,
    grid: &Arc<TorusGrid>,
    basis: &[ScalarField; 5],
    a: [f64; 5],
    r_max: f64,
    w: &DoubleWell,
) -> Result<FlowState> {
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > r_max * (1.0 + 1e-12) {
        return Err(Error::Config(format!(
            "|a| = {norm} exceeds the unstable-ball radius {r_max}"
        )));
    }
    let mut field = lift_profile(profile, grid, None)?;
    for (aj, phi) in a.iter().zip(basis) {
        if *aj != 0.0 {
            field.axpy(*aj, phi);
        }
    }
    let m = field.max_abs();
    if m >= 1.0 {
        return Err(Error::AmplitudeTooLarge { max_abs: m });
    }
    FlowState::new(field, profile.eps, w)
}

/// A prepared time stepper: factorized implicit operator and projector.
pub struct Stepper {
    cfg: StepperConfig,
    w: DoubleWell,
    plan: HelmholtzPlan,
    projector: Option<Projector>,
}

/// Result of one step.
#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub state: FlowState,
    /// `∫ ε |(u⁺ − u)/dt|²`.
    pub dissipation: f64,
    pub parts: EnergyParts,
    pub discrepancy: f64,
    pub max_abs_u: f64,
}

impl Stepper {
    pub fn new(cfg: &StepperConfig, w: &DoubleWell, grid: &Arc<TorusGrid>) -> Result<Self> {
        cfg.validate(w)?;
        let e2 = cfg.eps * cfg.eps;
        let c = match cfg.scheme {
            Scheme::Imex => cfg.dt,
            Scheme::ConvexSplit => cfg.dt / (1.0 + cfg.dt * cfg.stabilization / e2),
        };
        let plan = HelmholtzPlan::new(grid, c, AngularScheme::SecondOrder)?;
        let projector = match &cfg.symmetrize {
            Some(g) => Some(g.projector(grid)?),
            None => None,
        };
        Ok(Self {
            cfg: cfg.clone(),
            w: w.clone(),
            plan,
            projector,
        })
    }

    pub fn config(&self) -> &StepperConfig {
        &self.cfg
    }

    /// Advance one step, checking finiteness, the maximum principle and
    /// energy decrease.
    pub fn step(&self, state: &FlowState) -> Result<StepOutcome> {
        let cfg = &self.cfg;
        let (dt, e2) = (cfg.dt, cfg.eps * cfg.eps);
        let u = state.field.values();
        let rhs: Vec<f64> = match cfg.scheme {
            Scheme::Imex => u.iter().map(|&v| v - dt / e2 * self.w.dw(v)).collect(),
            Scheme::ConvexSplit => {
                let s = cfg.stabilization;
                let a = 1.0 + dt * s / e2;
                u.iter()
                    .map(|&v| (v + dt / e2 * (s * v - self.w.dw(v))) / a)
                    .collect()
            }
        };
        let mut next = state.field.with_values(self.plan.solve(&rhs));
        if let Some(p) = &self.projector {
            p.project_in_place(&mut next);
        }
        let step = state.step_count + 1;
        next.check_finite()?;
        let max_abs_u = next.max_abs();
        // only a violation if the previous state still obeyed the bound
        if max_abs_u > 1.0 + MAX_PRINCIPLE_SLACK
            && state.field.max_abs() <= 1.0 + MAX_PRINCIPLE_SLACK
        {
            return Err(Error::MaximumPrinciple {
                step,
                max_abs: max_abs_u,
            });
        }
        let max_abs_u = if max_abs_u >= 1.0 && state.field.max_abs() < 1.0 {
            next.values_mut()
                .iter_mut()
                .for_each(|v| *v = v.clamp(-BELOW_ONE, BELOW_ONE));
            next.max_abs()
        } else {
            max_abs_u
        };
        let (parts, discrepancy) = measure(&next, cfg.eps, &self.w);
        let e = parts.total();
        if e > state.energy + ENERGY_SLACK * state.energy.abs() {
            return Err(Error::EnergyIncreased {
                step,
                before: state.energy,
                after: e,
            });
        }
        let grid = next.grid();
        let per = grid.n_phi1() * grid.n_phi2();
        let dissipation = cfg.eps
            * next
                .values()
                .chunks_exact(per)
                .zip(u.chunks_exact(per))
                .enumerate()
                .map(|(i, (a, b))| {
                    let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                    grid.slab_weight(i) * s
                })
                .sum::<f64>()
            / (dt * dt);
        Ok(StepOutcome {
            state: FlowState {
                time: state.time + dt,
                field: next,
                energy: e,
                step_count: step,
            },
            dissipation,
            parts,
            discrepancy,
            max_abs_u,
        })
    }
}

/// One step with a freshly prepared [`Stepper`].
pub fn step(state: &FlowState, cfg: &StepperConfig, w: &DoubleWell) -> Result<FlowState> {
    Ok(Stepper::new(cfg, w, state.field.grid())?.step(state)?.state)
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct EnergyRow {
    pub step: usize,
    pub time: f64,
    pub energy: f64,
    pub area_proxy: f64,
    pub dissipation: f64,
    pub discrepancy: f64,
    pub max_abs_u: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EndTime,
    Stationary,
    Plateau,
    Constant,
}

#[derive(Clone, Debug)]
pub struct EnergyLog {
    pub sigma: f64,
    pub rows: Vec<EnergyRow>,
    /// `Σ dt ∫ε|∂_t u|²` over every step, logged or not.
    pub total_dissipated: f64,
    pub initial_energy: f64,
    pub stop: StopReason,
    /// Longest stretch (time units) with `area_proxy` inside the plateau band.
    pub longest_plateau: f64,
    /// `true` if every step strictly lowered the energy.
    pub strictly_decreasing: bool,
    /// Largest `max|u|` seen at any step.
    pub max_abs_u: f64,
}

impl EnergyLog {
    pub fn final_energy(&self) -> f64 {
        self.rows.last().map_or(self.initial_energy, |r| r.energy)
    }

    /// Relative mismatch `|ΔE + Σ dt ∫ε|∂_t u|²| / |ΔE|`.
    pub fn dissipation_defect(&self) -> f64 {
        let de = self.final_energy() - self.initial_energy;
        (de + self.total_dissipated).abs() / de.abs()
    }

    pub const CSV_HEADER: &'static str =
        "step,time,energy,area_proxy,dissipation,discrepancy,max_abs_u";

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.rows.len() * 120);
        s.push_str(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                r.step, r.time, r.energy, r.area_proxy, r.dissipation, r.discrepancy, r.max_abs_u
            );
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Run until `t_end`, stationarity, a plateau, or a constant state.
pub fn run(
    state: FlowState,
    cfg: &StepperConfig,
    w: &DoubleWell,
) -> Result<(FlowState, EnergyLog)> {
    run_observed(state, cfg, w, |_| Ok(()))
}

/// As [`run`], calling `observe` on the initial state, every
/// `snapshot_every` steps, and on the final state.
pub fn run_observed(
    mut state: FlowState,
    cfg: &StepperConfig,
    w: &DoubleWell,
    mut observe: impl FnMut(&FlowState) -> Result<()>,
) -> Result<(FlowState, EnergyLog)> {
    let stepper = Stepper::new(cfg, w, state.field.grid())?;
    let sigma = crate::potential::sigma(w);
    let e0 = state.energy;
    let disc0 = measure(&state.field, cfg.eps, w).1;
    let mut log = EnergyLog {
        sigma,
        rows: vec![EnergyRow {
            step: state.step_count,
            time: state.time,
            energy: e0,
            area_proxy: e0 / (2.0 * sigma),
            dissipation: 0.0,
            discrepancy: disc0,
            max_abs_u: state.field.max_abs(),
        }],
        total_dissipated: 0.0,
        initial_energy: e0,
        stop: StopReason::EndTime,
        longest_plateau: 0.0,
        strictly_decreasing: true,
        max_abs_u: state.field.max_abs(),
    };
    observe(&state)?;
    let mut plateau_start: Option<f64> = None;
    let t_stop = state.time + cfg.t_end - 0.5 * cfg.dt;
    loop {
        if state.time >= t_stop {
            log.stop = StopReason::EndTime;
            break;
        }
        let out = stepper.step(&state)?;
        log.total_dissipated += cfg.dt * out.dissipation;
        if !(out.state.energy < state.energy) {
            log.strictly_decreasing = false;
        }
        log.max_abs_u = log.max_abs_u.max(out.max_abs_u);
        state = out.state;
        let area = state.energy / (2.0 * sigma);

        let mut stop = None;
        if out.dissipation < cfg.tol_stationary * e0.abs() {
            stop = Some(StopReason::Stationary);
        }
        if let Some(p) = &cfg.plateau {
            if (area / p.target - 1.0).abs() <= p.band {
                let start = *plateau_start.get_or_insert(state.time);
                log.longest_plateau = log.longest_plateau.max(state.time - start);
                if state.time - start >= p.min_duration {
                    stop = Some(StopReason::Plateau);
                }
            } else {
                plateau_start = None;
            }
        }
        if let Some(band) = cfg.stop_on_constant {
            let u = state.field.values();
            let near = |c: f64| u.iter().all(|v| (v - c).abs() < band);
            if near(1.0) || near(-1.0) {
                stop = Some(StopReason::Constant);
            }
        }
        if state.step_count.is_multiple_of(cfg.log_every) || stop.is_some() {
            log.rows.push(EnergyRow {
                step: state.step_count,
                time: state.time,
                energy: state.energy,
                area_proxy: area,
                dissipation: out.dissipation,
                discrepancy: out.discrepancy,
                max_abs_u: out.max_abs_u,
            });
        }
        if cfg.snapshot_every > 0 && state.step_count.is_multiple_of(cfg.snapshot_every) && stop.is_none() {
            observe(&state)?;
        }
        if let Some(reason) = stop {
            log.stop = reason;
            break;
        }
    }
    if log.rows.last().map(|r| r.step) != Some(state.step_count) {
        let disc = measure(&state.field, cfg.eps, w).1;
        log.rows.push(EnergyRow {
            step: state.step_count,
            time: state.time,
            energy: state.energy,
            area_proxy: state.energy / (2.0 * sigma),
            dissipation: f64::NAN,
            discrepancy: disc,
            max_abs_u: state.field.max_abs(),
        });
    }
    observe(&state)?;
    Ok((state, log))
}

/// Number of times the logged energy passes through `level`.
pub fn level_crossings(log: &EnergyLog, level: f64) -> usize {
    log.rows
        .windows(2)
        .filter(|p| (p[0].energy - level) * (p[1].energy - level) < 0.0 || p[1].energy == level)
        .count()
}

/// Time at which the energy equals `2σ·5π`, by linear interpolation between
/// the bracketing rows.
pub fn normalize_time(log: &EnergyLog, sigma: f64) -> Result<f64> {
    crossing_time(log, 2.0 * sigma * 5.0 * std::f64::consts::PI)
}

/// First time at which the logged energy reaches `level` from above.
pub fn crossing_time(log: &EnergyLog, level: f64) -> Result<f64> {
    for r in &log.rows {
        if r.energy == level {
            return Ok(r.time);
        }
    }
    for p in log.rows.windows(2) {
        let (a, b) = (&p[0], &p[1]);
        if a.energy > level && b.energy < level {
            let s = (a.energy - level) / (a.energy - b.energy);
            return Ok(a.time + s * (b.time - a.time));
        }
    }
    let (min, max) = log
        .rows
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
            (lo.min(r.energy), hi.max(r.energy))
        });
    Err(Error::LevelNotCrossed { level, min, max })
}
