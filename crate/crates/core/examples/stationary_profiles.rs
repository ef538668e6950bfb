//! Torus-symmetric and ground-state critical points for several `ε`, with
//! their energies in units of `2σ` against `2π²` and `4π`.
//!
//! `cargo run --release --example stationary_profiles`

use std::f64::consts::PI;

use s3ac::potential::{sigma, DoubleWell};
use s3ac::stationary::{solve_ground_state, solve_torus_symmetric};

fn main() -> s3ac::Result<()> {
    let w = DoubleWell::standard();
    let two_sigma = 2.0 * sigma(&w);
    println!(
        "{:>6} {:>12} {:>9} {:>12} {:>9}",
        "eps", "torus", "err", "ground", "err"
    );
    for eps in [0.1, 0.05, 0.02] {
        let t = solve_torus_symmetric(&w, eps, 1024)?.energy(&w) / two_sigma;
        let g = solve_ground_state(&w, eps, 1024)?.energy(&w) / two_sigma;
        println!(
            "{eps:>6} {t:>12.6} {:>+9.4} {g:>12.6} {:>+9.4}",
            t / (2.0 * PI * PI) - 1.0,
            g / (4.0 * PI) - 1.0
        );
    }
    Ok(())
}
