//! Shared preparation for 3D flow runs: the torus critical point, its
//! unstable basis, a classifier, and the stabilizer of a direction.

use std::f64::consts::PI;
use std::io::Write as _;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::snapshot::write_snapshot;
use crate::error::{Error, Result};
use crate::flow::{
    admissible_radius, default_r_max, init_unstable, level_crossings, normalize_time, run_observed,
    EnergyLog, FlowState, Plateau, StepperConfig, StopReason,
};
use crate::geometry::{
    build_grid, integrate, Isometry, ScalarField, SignedIsometry, SymmetryGroup, TorusGrid,
};
use crate::interface::{write_jsonl, Classifier, InterfaceKind, InterfaceReport};
use crate::potential::{sigma, DoubleWell};
use crate::spectrum::{morse_index_with, unstable_basis, SpectrumResult};
use crate::stationary::{lift_profile, solve_ground_state, solve_torus_symmetric, RadialProfile};

/// Everything a flow from the unstable manifold of `u^{−∞}` needs at one `ε`.
pub struct FlowSetup {
    pub cfg: ExperimentConfig,
    pub eps: f64,
    pub w: DoubleWell,
    pub sigma: f64,
    pub grid: Arc<TorusGrid>,
    pub profile: RadialProfile,
    pub spectrum: SpectrumResult,
    pub basis: [ScalarField; 5],
    pub critical: ScalarField,
    pub r_max: f64,
    /// Unstable eigenvalue of the ground state (negative).
    pub ground_eigenvalue: f64,
    /// `E_ε/2σ` of the ground state, the level of the sphere plateau.
    pub ground_area: f64,
    pub plateau_duration: f64,
    pub classifier: Classifier,
}

impl FlowSetup {
    pub fn new(cfg: &ExperimentConfig, eps: f64) -> Result<Self> {
        let w = DoubleWell::standard();
        let grid = build_grid(cfg.n_eta, cfg.n_phi1, cfg.n_phi2)?;
        let profile = solve_torus_symmetric(&w, eps, cfg.n_eta)?;
        let spectrum = morse_index_with(&profile, &w, cfg.k_max, cfg.zero_tol)?;
        let basis = unstable_basis(&spectrum, &grid)?;
        let critical = lift_profile(&profile, &grid, None)?;
        let r_max = cfg.r_max.or(default_r_max(&critical));
        let ground = solve_ground_state(&w, eps, cfg.profile_n)?;
        let gspec = morse_index_with(&ground, &w, cfg.k_max, cfg.zero_tol)?;
        let ground_eigenvalue = *gspec.negative_eigenvalues().first().ok_or_else(|| {
            Error::Config(format!(
                "ground state at eps = {eps} has no unstable eigenvalue"
            ))
        })?;
        let plateau_duration = cfg.plateau_duration.or(5.0 / ground_eigenvalue.abs());
        let classifier = Classifier::new(&grid, eps, &w, cfg.thresholds);
        let ground_area = ground.energy(&w) / (2.0 * sigma(&w));
        Ok(Self {
            cfg: cfg.clone(),
            eps,
            sigma: sigma(&w),
            w,
            grid,
            profile,
            spectrum,
            basis,
            critical,
            r_max,
            ground_eigenvalue,
            ground_area,
            plateau_duration,
            classifier,
        })
    }

    /// `|a|` for direction `d`: the configured amplitude, or the smaller of
    /// `r_max` and half the radius at which `max|u|` would reach 1.
    pub fn amplitude(&self, d: [f64; 5]) -> f64 {
        self.cfg.amplitude.or(self
            .r_max
            .min(0.5 * admissible_radius(&self.critical, &self.basis, d)))
    }

    /// Stepper settings from the configuration, with no symmetry, plateau
    /// or constant stop.
    pub fn stepper_config(&self) -> StepperConfig {
        let c = &self.cfg;
        StepperConfig {
            eps: self.eps,
            dt: c.dt_for(self.eps),
            scheme: c.scheme,
            stabilization: c.stabilization,
            t_end: c.t_end,
            snapshot_every: c.snapshot_every,
            log_every: c.log_every,
            symmetrize: None,
            tol_stationary: c.tol_stationary,
            plateau: None,
            stop_on_constant: None,
        }
    }

    /// Tracking of the plateau at the ground-state level (`4π` up to
    /// `O(ε)`), without stopping the run.
    pub fn sphere_plateau_tracking(&self) -> Plateau {
        Plateau {
            target: self.ground_area,
            band: self.cfg.plateau_band,
            min_duration: f64::INFINITY,
        }
    }

    /// Stabilizer of `a` when `symmetrize` is on.
    pub fn symmetry_for(&self, a: [f64; 5], allow_negated: bool) -> Result<Option<SymmetryGroup>> {
        if !self.cfg.symmetrize {
            return Ok(None);
        }
        stabilizer(a, &self.w, &self.grid, allow_negated)
    }

    /// Flow from `u^{−∞} + Σ a_j φ_j`, classifying every observed state.
    /// With `out` set, writes the energy log, reports, snapshots and a
    /// summary there.
    pub fn flow(
        &self,
        a: [f64; 5],
        scfg: &StepperConfig,
        out: Option<&Path>,
    ) -> Result<FlowRecord> {
        let mut state = init_unstable(
            &self.profile,
            &self.grid,
            &self.basis,
            a,
            self.r_max,
            &self.w,
        )?;
        let mut symmetry_defect = 0.0;
        if let Some(g) = &scfg.symmetrize {
            let p = g.project(&state.field)?;
            symmetry_defect = p.max_abs_diff(&state.field);
            state = FlowState::new(p, self.eps, &self.w)?;
        }
        let snap_dir = match out {
            Some(dir) if self.cfg.write_snapshots => {
                let d = dir.join("snapshots");
                std::fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
                Some(d)
            }
            _ => None,
        };
        let mut reports: Vec<InterfaceReport> = Vec::new();
        let (end, log) = run_observed(state, scfg, &self.w, |st| {
            if reports.last().is_some_and(|r| r.time == st.time) {
                return Ok(());
            }
            reports.push(self.classifier.classify(&st.field, st.time)?);
            if let Some(d) = &snap_dir {
                write_snapshot(
                    &d.join(format!("step_{:08}.acs3", st.step_count)),
                    &st.field,
                    self.eps,
                    st.time,
                )?;
            }
            Ok(())
        })?;
        let t_norm = normalize_time(&log, self.sigma).ok();
        if let Some(t0) = t_norm {
            for r in &mut reports {
                r.shifted_time = Some(r.time - t0);
            }
        }
        let record = FlowRecord {
            eps: self.eps,
            a,
            amplitude: a.iter().map(|x| x * x).sum::<f64>().sqrt(),
            group_order: scfg.symmetrize.as_ref().map_or(1, |g| g.order()),
            symmetry_defect,
            crossings: level_crossings(&log, 2.0 * self.sigma * 5.0 * PI),
            t_norm,
            log,
            reports,
            final_state: end,
        };
        if let Some(dir) = out {
            record.write(dir)?;
        }
        Ok(record)
    }
}

/// Result of one flow run.
pub struct FlowRecord {
    pub eps: f64,
    pub a: [f64; 5],
    pub amplitude: f64,
    pub group_order: usize,
    /// `max|Pu₀ − u₀|` for the symmetry projection of the initial field.
    pub symmetry_defect: f64,
    pub log: EnergyLog,
    pub reports: Vec<InterfaceReport>,
    pub final_state: FlowState,
    /// Time at which the energy crosses `2σ·5π`.
    pub t_norm: Option<f64>,
    /// Number of crossings of `2σ·5π` in the logged energy.
    pub crossings: usize,
}

#[derive(Serialize)]
struct FlowSummary<'a> {
    eps: f64,
    dims: (usize, usize, usize),
    a: [f64; 5],
    amplitude: f64,
    group_order: usize,
    symmetry_defect: f64,
    steps: usize,
    final_time: f64,
    stop: StopReason,
    initial_energy: f64,
    final_energy: f64,
    final_area_proxy: f64,
    dissipation_defect: f64,
    strictly_decreasing: bool,
    max_abs_u: f64,
    longest_plateau: f64,
    t_normalization: Option<f64>,
    level_crossings: usize,
    kind_sequence: Vec<InterfaceKind>,
    /// Without nodal points, which are in `reports.jsonl`.
    terminal: &'a InterfaceReport,
}

impl FlowRecord {
    pub fn terminal(&self) -> &InterfaceReport {
        self.reports
            .last()
            .expect("the final state is always classified")
    }

    /// Snapshot classifications with consecutive repeats collapsed.
    pub fn kind_sequence(&self) -> Vec<InterfaceKind> {
        let mut out: Vec<InterfaceKind> = Vec::new();
        for r in &self.reports {
            if out.last() != Some(&r.kind) {
                out.push(r.kind);
            }
        }
        out
    }

    /// `+1` or `−1` for runs ending near a constant, otherwise the sign of
    /// `∫u` of the final state.
    pub fn terminal_sign(&self) -> f64 {
        match self.terminal().kind {
            InterfaceKind::ConstantPlus => 1.0,
            InterfaceKind::ConstantMinus => -1.0,
            _ => {
                let m = integrate(&self.final_state.field).unwrap_or(0.0);
                if m >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }

    pub fn summary_json(&self) -> String {
        let mut terminal = self.terminal().clone();
        terminal.nodal_points.clear();
        let last = self.log.rows.last().expect("log has the initial row");
        let s = FlowSummary {
            eps: self.eps,
            dims: self.final_state.field.grid().dims(),
            a: self.a,
            amplitude: self.amplitude,
            group_order: self.group_order,
            symmetry_defect: self.symmetry_defect,
            steps: self.final_state.step_count,
            final_time: self.final_state.time,
            stop: self.log.stop,
            initial_energy: self.log.initial_energy,
            final_energy: self.log.final_energy(),
            final_area_proxy: last.area_proxy,
            dissipation_defect: self.log.dissipation_defect(),
            strictly_decreasing: self.log.strictly_decreasing,
            max_abs_u: self.log.max_abs_u,
            longest_plateau: self.log.longest_plateau,
            t_normalization: self.t_norm,
            level_crossings: self.crossings,
            kind_sequence: self.kind_sequence(),
            terminal: &terminal,
        };
        serde_json::to_string_pretty(&s).expect("summary serializes")
    }

    /// `energy.csv`, `reports.jsonl` and `summary.json` in `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.log.write_csv(&dir.join("energy.csv"))?;
        let path = dir.join("reports.jsonl");
        let mut f =
            std::io::BufWriter::new(std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?);
        write_jsonl(&self.reports, &mut f)
            .and_then(|_| f.flush())
            .map_err(|e| Error::io(&path, e))?;
        let path = dir.join("summary.json");
        std::fs::write(&path, self.summary_json()).map_err(|e| Error::io(&path, e))
    }
}

fn angle(x: f64, y: f64) -> f64 {
    y.atan2(x)
}

fn fixes(g: &SignedIsometry, a: [f64; 5]) -> bool {
    let b = g.apply_direction(a);
    let scale = a.iter().map(|x| x.abs()).fold(0.0, f64::max);
    a.iter()
        .zip(&b)
        .all(|(x, y)| (x - y).abs() <= 1e-10 * scale)
}

/// The symmetry group generated by the grid-commensurate isometries that
/// fix `a`, or `None` if only the identity does.
///
/// Candidates are the reflections of each coordinate plane that fix its
/// component of `a`, and (for an even potential with `allow_negated`) the
/// element `ρ^α τ^β s` composed with `u ↦ −u`, which fixes `a` when
/// `a₁ = 0` and both plane components have equal length. Because `u^{−∞}`
/// is odd under `s`, plain `s` is never a candidate.
pub fn stabilizer(
    a: [f64; 5],
    w: &DoubleWell,
    grid: &TorusGrid,
    allow_negated: bool,
) -> Result<Option<SymmetryGroup>> {
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::Config("direction must be nonzero".into()));
    }
    let tol = 1e-12 * norm;
    let mut cand = Vec::new();
    for (k, (x, y)) in [(a[1], a[2]), (a[3], a[4])].into_iter().enumerate() {
        let unit = |c: [f64; 2]| {
            let mut v = [0.0; 4];
            v[2 * k] = c[0];
            v[2 * k + 1] = c[1];
            v
        };
        let len = x.hypot(y);
        if len > tol {
            cand.push(Isometry::reflect(unit([-y / len, x / len]))?);
        } else {
            cand.push(Isometry::reflect(unit([1.0, 0.0]))?);
            cand.push(Isometry::reflect(unit([0.0, 1.0]))?);
        }
    }
    let mut gens: Vec<SignedIsometry> = cand.into_iter().map(SignedIsometry::plain).collect();
    let (l1, l2) = (a[1].hypot(a[2]), a[3].hypot(a[4]));
    if allow_negated && w.is_even() && a[0].abs() <= tol && l1 > tol && (l1 - l2).abs() <= tol {
        let alpha = angle(a[1], a[2]) - angle(-a[3], -a[4]);
        let beta = angle(a[3], a[4]) - angle(-a[1], -a[2]);
        let g = Isometry::rho(alpha)
            .compose(&Isometry::tau(beta))
            .compose(&Isometry::swap_s());
        gens.push(SignedIsometry::negated(g));
    }
    gens.retain(|g| fixes(g, a) && g.iso.node_map(grid).is_ok());
    if gens.is_empty() {
        return Ok(None);
    }
    let group = match SymmetryGroup::generate(&gens) {
        Ok(g) => g,
        Err(_) => {
            gens.retain(|g| !g.negate);
            SymmetryGroup::generate(&gens)?
        }
    };
    Ok((group.order() > 1).then_some(group))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Arc<TorusGrid> {
        build_grid(8, 16, 16).unwrap()
    }

    #[test]
    fn q_direction_has_order_eight() {
        let q = [0.0, 0.5, 0.5, -0.5, -0.5];
        let g = stabilizer(q, &DoubleWell::standard(), &grid(), true)
            .unwrap()
            .unwrap();
        assert_eq!(g.order(), 8);
        assert!(g.elements().iter().all(|e| fixes(e, q)));
        assert!(g.elements().iter().any(|e| e.negate));
        let plain = stabilizer(q, &DoubleWell::standard(), &grid(), false)
            .unwrap()
            .unwrap();
        assert_eq!(plain.order(), 4);
    }

    #[test]
    fn orbit_directions_keep_the_negated_element() {
        let h = 0.5f64.sqrt();
        for (i, j) in [(0, 0), (1, 3), (5, 2), (7, 7)] {
            let (t1, t2) = (PI * i as f64 / 4.0, PI * j as f64 / 4.0);
            let a = [
                0.0,
                h * t1.cos(),
                h * t1.sin(),
                -h * t2.cos(),
                -h * t2.sin(),
            ];
            let g = stabilizer(a, &DoubleWell::standard(), &grid(), true)
                .unwrap()
                .unwrap();
            assert_eq!(g.order(), 8, "{i} {j}");
            assert!(g.elements().iter().any(|e| e.negate));
        }
    }

    #[test]
    fn first_axis_is_fixed_by_all_plane_reflections() {
        let g = stabilizer(
            [1.0, 0.0, 0.0, 0.0, 0.0],
            &DoubleWell::standard(),
            &grid(),
            true,
        )
        .unwrap()
        .unwrap();
        assert_eq!(g.order(), 16);
        assert!(g.elements().iter().all(|e| !e.negate));
    }

    #[test]
    fn incommensurate_reflections_are_dropped() {
        let t = 0.3f64;
        let a = [0.0, t.cos(), t.sin(), 0.0, 0.0];
        let g = stabilizer(a, &DoubleWell::standard(), &grid(), true)
            .unwrap()
            .unwrap();
        assert_eq!(g.order(), 4);
    }
}
