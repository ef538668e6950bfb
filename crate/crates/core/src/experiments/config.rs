//! Flat `key = value` experiment configuration.
//!
//! Blank lines and `#` comments are ignored, unknown keys are rejected, and
//! [`ExperimentConfig::resolved`] echoes every value including defaults.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::flow::Scheme;
use crate::interface::Thresholds;

/// A value that is either given or derived at run time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Auto<T> {
    Auto,
    Value(T),
}

impl<T: Copy> Auto<T> {
    pub fn or(self, default: T) -> T {
        match self {
            Auto::Auto => default,
            Auto::Value(v) => v,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub eps: Vec<f64>,
    pub n_eta: usize,
    pub n_phi1: usize,
    pub n_phi2: usize,
    /// Resolution of the 1D profiles for `stationary` and `spectrum`.
    pub profile_n: usize,
    pub k_max: usize,
    pub zero_tol: f64,

    pub scheme: Scheme,
    pub stabilization: f64,
    /// Defaults to `0.1 ε²`.
    pub dt: Auto<f64>,
    pub t_end: f64,
    pub snapshot_every: usize,
    pub log_every: usize,
    pub write_snapshots: bool,
    /// Project onto the stabilizer of the initial direction after each step.
    pub symmetrize: bool,
    pub tol_stationary: f64,
    pub plateau_band: f64,
    /// Defaults to `5/|λ|` for the ground state's unstable eigenvalue.
    pub plateau_duration: Auto<f64>,

    pub direction: [f64; 5],
    /// `|a|`; defaults to the smaller of `r_max` and half the admissible radius.
    pub amplitude: Auto<f64>,
    /// Defaults to `0.1 ‖u^{−∞}‖`.
    pub r_max: Auto<f64>,

    pub sweep_tol: f64,
    pub sweep_max_iter: usize,
    pub orbit_n1: usize,
    pub orbit_n2: usize,

    pub thresholds: Thresholds,

    pub seed: u64,
    pub toy_jitter: f64,
    pub toy_dt: f64,
    pub toy_t_end: f64,

    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            eps: vec![0.1, 0.05],
            n_eta: 32,
            n_phi1: 32,
            n_phi2: 32,
            profile_n: 512,
            k_max: 5,
            zero_tol: crate::spectrum::DEFAULT_ZERO_TOL,
            scheme: Scheme::ConvexSplit,
            stabilization: 2.0,
            dt: Auto::Auto,
            t_end: 30.0,
            snapshot_every: 500,
            log_every: 10,
            write_snapshots: true,
            symmetrize: true,
            tol_stationary: 1e-8,
            plateau_band: 0.02,
            plateau_duration: Auto::Auto,
            direction: [0.0, 0.5, 0.5, -0.5, -0.5],
            amplitude: Auto::Auto,
            r_max: Auto::Auto,
            sweep_tol: 1e-6,
            sweep_max_iter: 40,
            orbit_n1: 8,
            orbit_n2: 8,
            thresholds: Thresholds::default(),
            seed: 0,
            toy_jitter: 1e-3,
            toy_dt: 1e-3,
            toy_t_end: 60.0,
            output_dir: PathBuf::from("out"),
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

fn auto<T: std::str::FromStr>(key: &str, v: &str) -> Result<Auto<T>> {
    if v == "auto" {
        Ok(Auto::Auto)
    } else {
        num(key, v).map(Auto::Value)
    }
}

fn boolean(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "on" | "yes" => Ok(true),
        "false" | "off" | "no" => Ok(false),
        _ => Err(Error::Config(format!(
            "{key}: expected true/false, got {v:?}"
        ))),
    }
}

fn list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|s| num(key, s.trim())).collect()
}

fn show_auto<T: std::fmt::Display>(a: &Auto<T>) -> String {
    match a {
        Auto::Auto => "auto".into(),
        Auto::Value(v) => v.to_string(),
    }
}

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        let mut seen = std::collections::HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "line {}: expected `key = value`, got {raw:?}",
                    lineno + 1
                ))
            })?;
            let (k, v) = (k.trim(), v.trim());
            if !seen.insert(k.to_string()) {
                return Err(Error::Config(format!(
                    "line {}: duplicate key {k}",
                    lineno + 1
                )));
            }
            c.set(k, v)
                .map_err(|e| Error::Config(format!("line {}: {}", lineno + 1, strip(e))))?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, k: &str, v: &str) -> Result<()> {
        match k {
            "eps" => self.eps = list(k, v)?,
            "n_eta" => self.n_eta = num(k, v)?,
            "n_phi1" => self.n_phi1 = num(k, v)?,
            "n_phi2" => self.n_phi2 = num(k, v)?,
            "profile_n" => self.profile_n = num(k, v)?,
            "k_max" => self.k_max = num(k, v)?,
            "zero_tol" => self.zero_tol = num(k, v)?,
            "scheme" => {
                self.scheme = match v {
                    "imex" => Scheme::Imex,
                    "convex_split" => Scheme::ConvexSplit,
                    _ => {
                        return Err(Error::Config(format!(
                            "scheme: expected imex or convex_split, got {v:?}"
                        )))
                    }
                }
            }
            "stabilization" => self.stabilization = num(k, v)?,
            "dt" => self.dt = auto(k, v)?,
            "t_end" => self.t_end = num(k, v)?,
            "snapshot_every" => self.snapshot_every = num(k, v)?,
            "log_every" => self.log_every = num(k, v)?,
            "write_snapshots" => self.write_snapshots = boolean(k, v)?,
            "symmetrize" => self.symmetrize = boolean(k, v)?,
            "tol_stationary" => self.tol_stationary = num(k, v)?,
            "plateau_band" => self.plateau_band = num(k, v)?,
            "plateau_duration" => self.plateau_duration = auto(k, v)?,
            "direction" => {
                let d = list(k, v)?;
                self.direction = d.try_into().map_err(|d: Vec<f64>| {
                    Error::Config(format!("direction: expected 5 numbers, got {}", d.len()))
                })?;
            }
            "amplitude" => self.amplitude = auto(k, v)?,
            "r_max" => self.r_max = auto(k, v)?,
            "sweep_tol" => self.sweep_tol = num(k, v)?,
            "sweep_max_iter" => self.sweep_max_iter = num(k, v)?,
            "orbit_n1" => self.orbit_n1 = num(k, v)?,
            "orbit_n2" => self.orbit_n2 = num(k, v)?,
            "constant_band" => self.thresholds.constant_band = num(k, v)?,
            "sphere_residual" => self.thresholds.sphere_residual = num(k, v)?,
            "sphere_area_band" => self.thresholds.sphere_area_band = num(k, v)?,
            "torus_area_band" => self.thresholds.torus_area_band = num(k, v)?,
            "torus_decisive" => self.thresholds.torus_decisive = num(k, v)?,
            "seed" => self.seed = num(k, v)?,
            "toy_jitter" => self.toy_jitter = num(k, v)?,
            "toy_dt" => self.toy_dt = num(k, v)?,
            "toy_t_end" => self.toy_t_end = num(k, v)?,
            "output_dir" => self.output_dir = PathBuf::from(v),
            _ => return Err(Error::Config(format!("unknown key {k:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.eps.is_empty() || self.eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return bad("eps must be a non-empty list of positive numbers");
        }
        if self.n_eta < 4 || self.n_phi1 < 4 || self.n_phi2 < 4 {
            return bad("grid dimensions must be at least 4");
        }
        if self.profile_n < 16 || !self.profile_n.is_multiple_of(2) {
            return bad("profile_n must be even and at least 16");
        }
        if self.log_every == 0 {
            return bad("log_every must be at least 1");
        }
        if !(self.t_end > 0.0) {
            return bad("t_end must be positive");
        }
        if let Auto::Value(dt) = self.dt {
            if !(dt > 0.0) {
                return bad("dt must be positive");
            }
        }
        if self.direction.iter().all(|x| *x == 0.0) {
            return bad("direction must be nonzero");
        }
        if !(self.sweep_tol > 0.0) || self.orbit_n1 == 0 || self.orbit_n2 == 0 {
            return bad("sweep_tol, orbit_n1 and orbit_n2 must be positive");
        }
        Ok(())
    }

    /// Time step for a given `ε`.
    pub fn dt_for(&self, eps: f64) -> f64 {
        self.dt.or(0.1 * eps * eps)
    }

    /// `key = value` text with every setting, defaults included.
    pub fn resolved(&self) -> String {
        let t = &self.thresholds;
        let scheme = match self.scheme {
            Scheme::Imex => "imex",
            Scheme::ConvexSplit => "convex_split",
        };
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("eps", join(&self.eps));
        kv("n_eta", self.n_eta.to_string());
        kv("n_phi1", self.n_phi1.to_string());
        kv("n_phi2", self.n_phi2.to_string());
        kv("profile_n", self.profile_n.to_string());
        kv("k_max", self.k_max.to_string());
        kv("zero_tol", self.zero_tol.to_string());
        kv("scheme", scheme.into());
        kv("stabilization", self.stabilization.to_string());
        kv("dt", show_auto(&self.dt));
        kv("t_end", self.t_end.to_string());
        kv("snapshot_every", self.snapshot_every.to_string());
        kv("log_every", self.log_every.to_string());
        kv("write_snapshots", self.write_snapshots.to_string());
        kv("symmetrize", self.symmetrize.to_string());
        kv("tol_stationary", self.tol_stationary.to_string());
        kv("plateau_band", self.plateau_band.to_string());
        kv("plateau_duration", show_auto(&self.plateau_duration));
        kv("direction", join(&self.direction));
        kv("amplitude", show_auto(&self.amplitude));
        kv("r_max", show_auto(&self.r_max));
        kv("sweep_tol", self.sweep_tol.to_string());
        kv("sweep_max_iter", self.sweep_max_iter.to_string());
        kv("orbit_n1", self.orbit_n1.to_string());
        kv("orbit_n2", self.orbit_n2.to_string());
        kv("constant_band", t.constant_band.to_string());
        kv("sphere_residual", t.sphere_residual.to_string());
        kv("sphere_area_band", t.sphere_area_band.to_string());
        kv("torus_area_band", t.torus_area_band.to_string());
        kv("torus_decisive", t.torus_decisive.to_string());
        kv("seed", self.seed.to_string());
        kv("toy_jitter", self.toy_jitter.to_string());
        kv("toy_dt", self.toy_dt.to_string());
        kv("toy_t_end", self.toy_t_end.to_string());
        kv("output_dir", self.output_dir.display().to_string());
        s
    }
}

fn strip(e: Error) -> String {
    match e {
        Error::Config(m) => m,
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_values() {
        let c = ExperimentConfig::parse(
            "# a comment\n\neps = 0.1, 0.05  # trailing\nn_eta = 16\nscheme = imex\ndt = 0.001\nsymmetrize = off\n",
        )
        .unwrap();
        assert_eq!(c.eps, vec![0.1, 0.05]);
        assert_eq!(c.n_eta, 16);
        assert_eq!(c.scheme, Scheme::Imex);
        assert_eq!(c.dt, Auto::Value(0.001));
        assert!(!c.symmetrize);
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        for bad in [
            "colour = red",
            "eps 0.1",
            "n_eta = many",
            "direction = 1, 2",
            "eps = 0.1\neps = 0.2",
            "eps = -1",
        ] {
            let e = ExperimentConfig::parse(bad).unwrap_err();
            assert!(e.is_config(), "{bad}: {e}");
        }
    }

    #[test]
    fn resolved_echo_round_trips() {
        let c = ExperimentConfig::parse("eps = 0.07\namplitude = 0.01\nsweep_tol = 1e-5").unwrap();
        let text = c.resolved();
        assert!(text.contains("dt = auto"));
        assert!(text.contains("constant_band = 0.05"));
        assert_eq!(ExperimentConfig::parse(&text).unwrap(), c);
    }
}
