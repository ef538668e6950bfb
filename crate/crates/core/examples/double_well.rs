//! Surface tension and the heteroclinic layer of `W(t) = (1 − t²)²/4`.
//!
//! `cargo run --release --example double_well -- 0.05`

use s3ac::potential::{heteroclinic, heteroclinic_slope, sigma, DoubleWell};

fn main() {
    let eps: f64 = std::env::args()
        .nth(1)
        .map_or(0.05, |s| s.parse().expect("eps"));
    let w = DoubleWell::standard();
    let s = sigma(&w);
    println!("sigma = {s:.15}  (sqrt(2)/3 = {:.15})", 2f64.sqrt() / 3.0);
    println!("{:>8} {:>12} {:>14}", "t/eps", "h", "kin - pot");
    for k in -4..=4 {
        let t = k as f64 * eps;
        let h = heteroclinic(&w, eps, t);
        let d = heteroclinic_slope(&w, eps, t);
        println!(
            "{k:>8} {h:>12.8} {:>14.2e}",
            0.5 * eps * d * d - w.w(h) / eps
        );
    }
}
