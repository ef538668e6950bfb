//! The named experiments. Each `cmd_*` writes under
//! `output_dir/<command>/`, echoes the resolved configuration there, and
//! returns its records.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::setup::{FlowRecord, FlowSetup};
use super::snapshot::{read_snapshot, write_snapshot};
use super::toy::{run_toy, ToyReport};
use crate::error::{Error, Result};
use crate::flow::{energy, StopReason};
use crate::geometry::{build_grid, Isometry};
use crate::interface::{angle_between, Classifier, InterfaceKind, InterfaceReport};
use crate::potential::{sigma, DoubleWell};
use crate::spectrum::{constant_morse_index, morse_index_with, unstable_basis};
use crate::stationary::{lift_profile, solve_ground_state, solve_torus_symmetric};

fn mkdir(p: &Path) -> Result<()> {
    std::fs::create_dir_all(p).map_err(|e| Error::io(p, e))
}

fn write(p: &Path, text: &str) -> Result<()> {
    std::fs::write(p, text).map_err(|e| Error::io(p, e))
}

fn write_json(p: &Path, v: &impl Serialize) -> Result<()> {
    write(
        p,
        &serde_json::to_string_pretty(v).expect("records serialize"),
    )
}

/// `output_dir/name`, created, with `config.resolved` inside.
fn command_dir(cfg: &ExperimentConfig, name: &str) -> Result<PathBuf> {
    let d = cfg.output_dir.join(name);
    mkdir(&d)?;
    write(&d.join("config.resolved"), &cfg.resolved())?;
    Ok(d)
}

fn eps_dir(root: &Path, eps: f64) -> Result<PathBuf> {
    let d = root.join(format!("eps_{eps}"));
    mkdir(&d)?;
    Ok(d)
}

#[derive(Clone, Debug, Serialize)]
pub struct StationaryRecord {
    pub eps: f64,
    pub profile_n: usize,
    pub torus_area_proxy: f64,
    /// Relative error against `2π²`.
    pub torus_area_error: f64,
    pub torus_residual: f64,
    pub torus_discrepancy: f64,
    pub torus_newton_iterations: usize,
    pub ground_area_proxy: f64,
    /// Relative error against `4π`.
    pub ground_area_error: f64,
    pub ground_residual: f64,
    pub ground_discrepancy: f64,
    pub ground_newton_iterations: usize,
    /// Area proxies of the 3D lifts on the configured grid.
    pub torus_area_proxy_3d: f64,
    pub ground_area_proxy_3d: f64,
}

/// Both 1D critical points for each `ε`, their energies and residuals.
pub fn cmd_stationary(cfg: &ExperimentConfig) -> Result<Vec<StationaryRecord>> {
    let root = command_dir(cfg, "stationary")?;
    let w = DoubleWell::standard();
    let two_sigma = 2.0 * sigma(&w);
    let grid = build_grid(cfg.n_eta, cfg.n_phi1, cfg.n_phi2)?;
    let mut out = Vec::new();
    for &eps in &cfg.eps {
        let dir = eps_dir(&root, eps)?;
        let torus = solve_torus_symmetric(&w, eps, cfg.profile_n)?;
        let ground = solve_ground_state(&w, eps, cfg.profile_n)?;
        torus.write_csv(&dir.join("torus_profile.csv"))?;
        ground.write_csv(&dir.join("ground_profile.csv"))?;
        let ta = torus.energy(&w) / two_sigma;
        let ga = ground.energy(&w) / two_sigma;
        let pole = [0.5; 4];
        let t3 = energy(&lift_profile(&torus, &grid, None)?, eps, &w).total() / two_sigma;
        let g3 = energy(&lift_profile(&ground, &grid, Some(pole))?, eps, &w).total() / two_sigma;
        out.push(StationaryRecord {
            eps,
            profile_n: cfg.profile_n,
            torus_area_proxy: ta,
            torus_area_error: ta / (2.0 * PI * PI) - 1.0,
            torus_residual: torus.pde_residual(&w),
            torus_discrepancy: torus.discrepancy(&w),
            torus_newton_iterations: torus.newton_iterations,
            ground_area_proxy: ga,
            ground_area_error: ga / (4.0 * PI) - 1.0,
            ground_residual: ground.pde_residual(&w),
            ground_discrepancy: ground.discrepancy(&w),
            ground_newton_iterations: ground.newton_iterations,
            torus_area_proxy_3d: t3,
            ground_area_proxy_3d: g3,
        });
    }
    write_json(&root.join("summary.json"), &out)?;
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumRecord {
    pub eps: f64,
    pub torus_index: usize,
    pub torus_nullity: usize,
    pub torus_negative: Vec<f64>,
    /// `max − min` over the second to fifth negative eigenvalues.
    pub torus_spread_2_5: f64,
    pub ground_index: usize,
    pub ground_negative: Vec<f64>,
    pub constant_plus_index: usize,
    pub constant_minus_index: usize,
}

/// Morse indices of the torus solution, the ground state and the
/// constants, plus the unstable basis on the flow grid.
pub fn cmd_spectrum(cfg: &ExperimentConfig) -> Result<Vec<SpectrumRecord>> {
    let root = command_dir(cfg, "spectrum")?;
    let w = DoubleWell::standard();
    let mut out = Vec::new();
    for &eps in &cfg.eps {
        let dir = eps_dir(&root, eps)?;
        let torus = solve_torus_symmetric(&w, eps, cfg.profile_n)?;
        let ts = morse_index_with(&torus, &w, cfg.k_max, cfg.zero_tol)?;
        ts.write_csv(&dir.join("torus_spectrum.csv"))?;
        let ground = solve_ground_state(&w, eps, cfg.profile_n)?;
        let gs = morse_index_with(&ground, &w, cfg.k_max, cfg.zero_tol)?;
        gs.write_csv(&dir.join("ground_spectrum.csv"))?;
        let neg = ts.negative_eigenvalues();
        let spread = if neg.len() >= 5 {
            let s = &neg[1..5];
            s.iter().cloned().fold(f64::MIN, f64::max) - s.iter().cloned().fold(f64::MAX, f64::min)
        } else {
            f64::NAN
        };
        let cp = constant_morse_index(1.0, eps, &w, cfg.profile_n, cfg.k_max, cfg.zero_tol)?;
        let cm = constant_morse_index(-1.0, eps, &w, cfg.profile_n, cfg.k_max, cfg.zero_tol)?;

        let grid = build_grid(cfg.n_eta, cfg.n_phi1, cfg.n_phi2)?;
        let coarse = solve_torus_symmetric(&w, eps, cfg.n_eta)?;
        let basis = unstable_basis(
            &morse_index_with(&coarse, &w, cfg.k_max, cfg.zero_tol)?,
            &grid,
        )?;
        for (j, phi) in basis.iter().enumerate() {
            write_snapshot(&dir.join(format!("basis_phi{}.acs3", j + 1)), phi, eps, 0.0)?;
        }
        out.push(SpectrumRecord {
            eps,
            torus_index: ts.morse_index,
            torus_nullity: ts.nullity,
            torus_negative: neg,
            torus_spread_2_5: spread,
            ground_index: gs.morse_index,
            ground_negative: gs.negative_eigenvalues(),
            constant_plus_index: cp,
            constant_minus_index: cm,
        });
    }
    write_json(&root.join("summary.json"), &out)?;
    Ok(out)
}

/// One flow per `ε` from `u^{−∞}` in the configured direction.
pub fn cmd_flow(cfg: &ExperimentConfig) -> Result<Vec<FlowRecord>> {
    let root = command_dir(cfg, "flow")?;
    let mut out = Vec::new();
    for &eps in &cfg.eps {
        let dir = eps_dir(&root, eps)?;
        let setup = FlowSetup::new(cfg, eps)?;
        let d = cfg.direction;
        let r = setup.amplitude(d);
        let n = d.iter().map(|x| x * x).sum::<f64>().sqrt();
        let a = d.map(|x| r * x / n);
        let mut scfg = setup.stepper_config();
        scfg.symmetrize = setup.symmetry_for(a, true)?;
        scfg.plateau = Some(setup.sphere_plateau_tracking());
        out.push(setup.flow(a, &scfg, Some(&dir))?);
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepSample {
    /// Arc parameter in `[0, 1]`.
    pub s: f64,
    pub a: [f64; 5],
    /// `+1` toward `u ≡ 1`, `−1` toward `u ≡ −1`.
    pub sign: f64,
    /// `false` if the run ended before reaching a constant; the sign is
    /// then that of `∫u`.
    pub decided: bool,
    pub stop: StopReason,
    pub final_time: f64,
    pub longest_plateau: f64,
    pub final_energy: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub eps: f64,
    pub radius: f64,
    pub through: [f64; 5],
    pub samples: Vec<SweepSample>,
    pub bracket: (f64, f64),
    pub width: f64,
    pub threshold: f64,
    pub iterations: usize,
    /// Terminal sign is nondecreasing in `s` over all samples.
    pub monotone: bool,
    pub center: SweepSample,
    /// `5/|λ|` for the ground state's unstable eigenvalue `λ`.
    pub plateau_required: f64,
    pub ground_eigenvalue: f64,
}

/// `a(s) = r(−cos πs e₁ + sin πs p)` for unit `p ⊥ e₁`.
pub fn sweep_point(r: f64, p: [f64; 5], s: f64) -> [f64; 5] {
    let t = PI * s;
    [
        -r * t.cos(),
        r * t.sin() * p[1],
        r * t.sin() * p[2],
        r * t.sin() * p[3],
        r * t.sin() * p[4],
    ]
}

/// Bisects the path from `−r e₁` to `r e₁` through `r p` for the threshold
/// between flows ending at `u ≡ −1` and `u ≡ 1`.
pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepReport>> {
    let root = command_dir(cfg, "sweep")?;
    let mut p = cfg.direction;
    p[0] = 0.0;
    let n = p.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 {
        return Err(Error::Config(
            "sweep direction must have a nonzero component orthogonal to e1".into(),
        ));
    }
    let p = p.map(|x| x / n);
    let mut out = Vec::new();
    for &eps in &cfg.eps {
        let dir = eps_dir(&root, eps)?;
        let setup = FlowSetup::new(cfg, eps)?;
        let r = match cfg.amplitude {
            super::config::Auto::Value(r) => r,
            super::config::Auto::Auto => (0..=32)
                .map(|k| setup.amplitude(sweep_point(1.0, p, k as f64 / 32.0)))
                .fold(f64::INFINITY, f64::min),
        };
        let sample = |s: f64, out: Option<&Path>| -> Result<SweepSample> {
            let a = sweep_point(r, p, s);
            let mut scfg = setup.stepper_config();
            scfg.symmetrize = setup.symmetry_for(a, false)?;
            scfg.tol_stationary = 0.0;
            scfg.stop_on_constant = Some(cfg.thresholds.constant_band);
            scfg.plateau = Some(setup.sphere_plateau_tracking());
            let rec = setup.flow(a, &scfg, out)?;
            Ok(SweepSample {
                s,
                a,
                sign: rec.terminal_sign(),
                decided: rec.log.stop == StopReason::Constant,
                stop: rec.log.stop,
                final_time: rec.final_state.time,
                longest_plateau: rec.log.longest_plateau,
                final_energy: rec.log.final_energy(),
            })
        };
        let mut samples = vec![sample(0.0, None)?, sample(1.0, None)?];
        if !(samples[0].decided
            && samples[1].decided
            && samples[0].sign < 0.0
            && samples[1].sign > 0.0)
        {
            return Err(Error::SweepEndpoints(format!(
                "expected u -> -1 at s = 0 and u -> 1 at s = 1, got signs {} ({:?}) and {} ({:?}); raise amplitude or t_end",
                samples[0].sign, samples[0].stop, samples[1].sign, samples[1].stop
            )));
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let mut iterations = 0;
        while hi - lo >= cfg.sweep_tol && iterations < cfg.sweep_max_iter {
            let mid = 0.5 * (lo + hi);
            let smp = sample(mid, None)?;
            if smp.sign < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            samples.push(smp);
            iterations += 1;
        }
        let threshold = 0.5 * (lo + hi);
        let center = sample(threshold, Some(&dir.join("center")))?;
        let mut sorted: Vec<&SweepSample> = samples.iter().collect();
        sorted.sort_by(|a, b| a.s.total_cmp(&b.s));
        let monotone = sorted.windows(2).all(|w| w[0].sign <= w[1].sign);
        let mut csv = String::from("s,sign,decided,stop,final_time,longest_plateau,final_energy\n");
        for x in &samples {
            csv.push_str(&format!(
                "{:.17e},{},{},{:?},{:.17e},{:.17e},{:.17e}\n",
                x.s, x.sign, x.decided, x.stop, x.final_time, x.longest_plateau, x.final_energy
            ));
        }
        write(&dir.join("sweep.csv"), &csv)?;
        let report = SweepReport {
            eps,
            radius: r,
            through: p,
            samples,
            bracket: (lo, hi),
            width: hi - lo,
            threshold,
            iterations,
            monotone,
            center,
            plateau_required: 5.0 / setup.ground_eigenvalue.abs(),
            ground_eigenvalue: setup.ground_eigenvalue,
        };
        write_json(&dir.join("summary.json"), &report)?;
        out.push(report);
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct ForwardLimitRecord {
    pub i: usize,
    pub j: usize,
    pub theta1: f64,
    pub theta2: f64,
    pub a: [f64; 5],
    pub kind: InterfaceKind,
    /// Oriented equator normal `y_p`, for sphere limits.
    pub y: Option<[f64; 4]>,
    pub fit_residual: f64,
    pub group_order: usize,
    pub stop: StopReason,
    pub final_time: f64,
    pub plateau_duration: f64,
    pub final_energy: f64,
    pub final_area_proxy: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OrbitReport {
    pub eps: f64,
    pub radius: f64,
    pub records: Vec<ForwardLimitRecord>,
    /// Largest angle between `ρ(2π/n₁) y_p` and `y` of the `ρ`-rotated direction.
    pub rho_deviation: f64,
    /// As `rho_deviation` for `τ(2π/n₂)`.
    pub tau_deviation: f64,
    /// Largest angle between `y_{−p}` and `−y_p`.
    pub odd_deviation: f64,
    pub all_sphere: bool,
}

/// Point of the orbit `p₂² + p₃² = ½ = p₄² + p₅²` at angles `(θ₁, θ₂)`.
pub fn orbit_point(theta1: f64, theta2: f64) -> [f64; 5] {
    let h = 0.5f64.sqrt();
    [
        0.0,
        h * theta1.cos(),
        h * theta1.sin(),
        -h * theta2.cos(),
        -h * theta2.sin(),
    ]
}

/// Forward limits over an `orbit_n1 × orbit_n2` grid of the orbit, run in
/// parallel, with the equivariance and oddness checks.
pub fn cmd_orbit(cfg: &ExperimentConfig) -> Result<Vec<OrbitReport>> {
    let root = command_dir(cfg, "orbit")?;
    let (n1, n2) = (cfg.orbit_n1, cfg.orbit_n2);
    let mut out = Vec::new();
    for &eps in &cfg.eps {
        let dir = eps_dir(&root, eps)?;
        let setup = FlowSetup::new(cfg, eps)?;
        let angles = |i: usize, j: usize| {
            (
                2.0 * PI * i as f64 / n1 as f64,
                2.0 * PI * j as f64 / n2 as f64,
            )
        };
        let r = cfg.amplitude.or((0..n1)
            .flat_map(|i| (0..n2).map(move |j| (i, j)))
            .map(|(i, j)| {
                let (t1, t2) = angles(i, j);
                setup.amplitude(orbit_point(t1, t2))
            })
            .fold(f64::INFINITY, f64::min));
        let cells: Vec<(usize, usize)> =
            (0..n1).flat_map(|i| (0..n2).map(move |j| (i, j))).collect();
        let records = cells
            .par_iter()
            .map(|&(i, j)| -> Result<ForwardLimitRecord> {
                let (t1, t2) = angles(i, j);
                let a = orbit_point(t1, t2).map(|x| r * x);
                let mut scfg = setup.stepper_config();
                scfg.symmetrize = setup.symmetry_for(a, true)?;
                scfg.plateau = Some(setup.sphere_plateau_tracking());
                let run_dir = dir.join(format!("run_{i}_{j}"));
                let rec = setup.flow(a, &scfg, Some(&run_dir))?;
                let t = rec.terminal();
                Ok(ForwardLimitRecord {
                    i,
                    j,
                    theta1: t1,
                    theta2: t2,
                    a,
                    kind: t.kind,
                    y: t.equator_normal,
                    fit_residual: t.fit_residual,
                    group_order: rec.group_order,
                    stop: rec.log.stop,
                    final_time: rec.final_state.time,
                    plateau_duration: rec.log.longest_plateau,
                    final_energy: rec.log.final_energy(),
                    final_area_proxy: t.area_proxy,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let y = |i: usize, j: usize| records[(i % n1) * n2 + j % n2].y;
        let dev = |a: Option<[f64; 4]>, b: Option<[f64; 4]>| match (a, b) {
            (Some(a), Some(b)) => angle_between(a, b),
            _ => PI,
        };
        let rho = Isometry::rho(2.0 * PI / n1 as f64);
        let tau = Isometry::tau(2.0 * PI / n2 as f64);
        let mut rho_deviation: f64 = 0.0;
        let mut tau_deviation: f64 = 0.0;
        let mut odd_deviation: f64 = 0.0;
        for &(i, j) in &cells {
            let yp = y(i, j);
            rho_deviation = rho_deviation.max(dev(yp.map(|v| rho.apply_point(v)), y(i + 1, j)));
            tau_deviation = tau_deviation.max(dev(yp.map(|v| tau.apply_point(v)), y(i, j + 1)));
            if n1 % 2 == 0 && n2 % 2 == 0 {
                odd_deviation =
                    odd_deviation.max(dev(yp.map(|v| v.map(|c| -c)), y(i + n1 / 2, j + n2 / 2)));
            }
        }
        let report = OrbitReport {
            eps,
            radius: r,
            all_sphere: records.iter().all(|x| x.kind == InterfaceKind::Sphere),
            records,
            rho_deviation,
            tau_deviation,
            odd_deviation,
        };
        write_json(&dir.join("summary.json"), &report)?;
        out.push(report);
    }
    Ok(out)
}

/// The finite-dimensional example on `S¹ × S²`.
pub fn cmd_toy(cfg: &ExperimentConfig) -> Result<ToyReport> {
    let root = command_dir(cfg, "toy")?;
    let report = run_toy(cfg.seed, cfg.toy_jitter, cfg.toy_dt, cfg.toy_t_end);
    write_json(&root.join("toy.json"), &report)?;
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct InspectReport {
    pub dims: (usize, usize, usize),
    pub eps: f64,
    pub time: f64,
    pub min: f64,
    pub max: f64,
    pub energy: f64,
    pub report: InterfaceReport,
}

/// Classify a stored snapshot with the thresholds of `cfg`.
pub fn inspect(path: &Path, cfg: &ExperimentConfig) -> Result<InspectReport> {
    let snap = read_snapshot(path)?;
    let w = DoubleWell::standard();
    let f = &snap.field;
    let classifier = Classifier::new(f.grid(), snap.eps, &w, cfg.thresholds);
    let mut report = classifier.classify(f, snap.time)?;
    report.nodal_points.clear();
    Ok(InspectReport {
        dims: snap.dims(),
        eps: snap.eps,
        time: snap.time,
        min: f.values().iter().cloned().fold(f64::INFINITY, f64::min),
        max: f.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        energy: energy(f, snap.eps, &w).total(),
        report,
    })
}
