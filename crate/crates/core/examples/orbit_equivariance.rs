//! Forward limits over a grid on the orbit of unstable directions and the
//! equivariance and oddness of `p ↦ y_p`.
//!
//! `cargo run --release --example orbit_equivariance`

use s3ac::experiments::{cmd_orbit, ExperimentConfig};

fn main() -> s3ac::Result<()> {
    let out = std::env::temp_dir().join("s3ac_orbit_example");
    let cfg = ExperimentConfig::parse(&format!(
        "eps = 0.15\nn_eta = 16\nn_phi1 = 16\nn_phi2 = 16\norbit_n1 = 4\norbit_n2 = 4\n\
         snapshot_every = 0\nwrite_snapshots = false\noutput_dir = {}",
        out.display()
    ))?;
    for r in cmd_orbit(&cfg)? {
        for x in &r.records {
            println!(
                "({}, {})  {:?}  y = {:?}",
                x.i,
                x.j,
                x.kind,
                x.y.map(|y| y.map(|c| (c * 1e6).round() / 1e6))
            );
        }
        println!(
            "rho deviation {:.2e}, tau deviation {:.2e}, oddness {:.2e}",
            r.rho_deviation, r.tau_deviation, r.odd_deviation
        );
    }
    Ok(())
}
