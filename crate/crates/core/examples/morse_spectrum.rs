//! Negative spectrum of the torus solution and of the ground state.
//!
//! `cargo run --release --example morse_spectrum -- 0.05`

use s3ac::potential::DoubleWell;
use s3ac::spectrum::{constant_morse_index, morse_index, DEFAULT_ZERO_TOL};
use s3ac::stationary::{solve_ground_state, solve_torus_symmetric};

fn main() -> s3ac::Result<()> {
    let eps: f64 = std::env::args()
        .nth(1)
        .map_or(0.05, |s| s.parse().expect("eps"));
    let w = DoubleWell::standard();
    let torus = morse_index(&solve_torus_symmetric(&w, eps, 512)?, &w, 5)?;
    let ground = morse_index(&solve_ground_state(&w, eps, 512)?, &w, 5)?;
    println!(
        "torus  index {}: {:?}",
        torus.morse_index,
        torus.negative_eigenvalues()
    );
    println!(
        "ground index {}: {:?}",
        ground.morse_index,
        ground.negative_eigenvalues()
    );
    for c in [1.0, -1.0] {
        println!(
            "u = {c:+}  index {}",
            constant_morse_index(c, eps, &w, 512, 5, DEFAULT_ZERO_TOL)?
        );
    }
    print!("{}", torus.to_csv());
    Ok(())
}
