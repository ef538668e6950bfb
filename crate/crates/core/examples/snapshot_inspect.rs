//! Write the lifted ground state to a snapshot, read it back and classify it.
//!
//! `cargo run --release --example snapshot_inspect`

use s3ac::experiments::{inspect, read_snapshot, write_snapshot, ExperimentConfig};
use s3ac::geometry::build_grid;
use s3ac::potential::DoubleWell;
use s3ac::stationary::{lift_profile, solve_ground_state};

fn main() -> s3ac::Result<()> {
    let eps = 0.1;
    let w = DoubleWell::standard();
    let g = build_grid(32, 32, 32)?;
    let pole = [0.5, 0.5, -0.5, -0.5];
    let u = lift_profile(&solve_ground_state(&w, eps, 512)?, &g, Some(pole))?;
    let path = std::env::temp_dir().join("s3ac_ground.acs3");
    write_snapshot(&path, &u, eps, 0.0)?;
    let back = read_snapshot(&path)?;
    assert_eq!(back.field.values(), u.values());
    let r = inspect(&path, &ExperimentConfig::default())?;
    println!(
        "{:?}: kind {:?}, area {:.4}, y {:?}, residual {:.2e}",
        r.dims, r.report.kind, r.report.area_proxy, r.report.equator_normal, r.report.fit_residual
    );
    Ok(())
}
