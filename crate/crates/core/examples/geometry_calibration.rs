//! Volume of the grid and the first Laplace-Beltrami eigenvalue on `x₁`.
//!
//! `cargo run --release --example geometry_calibration`

use std::f64::consts::PI;

use s3ac::geometry::{build_grid, inner, laplace_beltrami, ScalarField};

fn main() -> s3ac::Result<()> {
    let mut prev = None;
    for n in [16, 32, 64] {
        let g = build_grid(n, n, n)?;
        let x1 = ScalarField::from_fn(&g, |x| x[0]);
        let lam = inner(&laplace_beltrami(&x1), &x1) / inner(&x1, &x1);
        let err = (lam + 3.0).abs();
        let order = prev.map(|p: f64| (p / err).log2());
        println!(
            "{n:>3}^3  volume - 2pi^2 = {:+.2e}  lambda(x1) = {lam:.8}  order {}",
            g.volume() - 2.0 * PI * PI,
            order.map_or("-".into(), |o| format!("{o:.3}"))
        );
        prev = Some(err);
    }
    Ok(())
}
