//! `F = y(u + 2)` on `S¹ × S²`: critical points, indices, and the meridian
//! flow from the index-1 point to the index-2 point.
//!
//! `cargo run --release --example toy_model`

use s3ac::experiments::run_toy;

fn main() {
    let r = run_toy(0, 1e-3, 1e-3, 60.0);
    for c in &r.critical_points {
        println!(
            "{:?}  F = {:+}  index {}  hessian {:?}",
            c.point, c.value, c.index, c.hessian_eigenvalues
        );
    }
    println!(
        "meridian end {:?}, error {:.1e}",
        r.meridian_end, r.meridian_endpoint_error
    );
    println!(
        "jittered start ends at the index-{} point (distance {:.1e})",
        r.jitter_end_index, r.jitter_end_distance
    );
}
