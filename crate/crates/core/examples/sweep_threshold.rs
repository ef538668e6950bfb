//! Bisection for the separatrix between the flows to `u ≡ −1` and `u ≡ 1`
//! on the path from `−r e₁` to `r e₁` through `r q`.
//!
//! `cargo run --release --example sweep_threshold`

use s3ac::experiments::{cmd_sweep, ExperimentConfig};

fn main() -> s3ac::Result<()> {
    let out = std::env::temp_dir().join("s3ac_sweep_example");
    let cfg = ExperimentConfig::parse(&format!(
        "eps = 0.15\nn_eta = 16\nn_phi1 = 16\nn_phi2 = 16\nsweep_tol = 1e-4\nsnapshot_every = 0\n\
         write_snapshots = false\noutput_dir = {}",
        out.display()
    ))?;
    for r in cmd_sweep(&cfg)? {
        for s in &r.samples {
            println!(
                "s = {:.8}  sign {:+}  stop {:?} at t = {:.2}",
                s.s, s.sign, s.stop, s.final_time
            );
        }
        println!(
            "threshold {:.8} (width {:.1e}), monotone {}, plateau at center {:.2} (5/|lambda| = {:.2})",
            r.threshold, r.width, r.monotone, r.center.longest_plateau, r.plateau_required
        );
    }
    println!("outputs in {}", out.display());
    Ok(())
}
