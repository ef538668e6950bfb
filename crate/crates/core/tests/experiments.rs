use std::f64::consts::PI;

use proptest::prelude::*;

use s3ac::experiments::snapshot::{decode_snapshot, encode_snapshot};
use s3ac::experiments::{
    cmd_flow, cmd_spectrum, cmd_stationary, orbit_point, stabilizer, sweep_point, ExperimentConfig,
    FlowSetup,
};
use s3ac::geometry::{build_grid, ScalarField};
use s3ac::interface::InterfaceKind;
use s3ac::potential::DoubleWell;

fn cfg(extra: &str, dir: &std::path::Path) -> ExperimentConfig {
    ExperimentConfig::parse(&format!("{extra}\noutput_dir = {}", dir.display())).unwrap()
}

#[test]
fn stationary_energies_approach_their_limits_in_order() {
    let d = tempfile::tempdir().unwrap();
    let c = cfg(
        "eps = 0.1, 0.05, 0.02\nprofile_n = 512\nn_eta = 16\nn_phi1 = 16\nn_phi2 = 16",
        d.path(),
    );
    let recs = cmd_stationary(&c).unwrap();
    for w in recs.windows(2) {
        assert!(w[1].torus_area_proxy > w[0].torus_area_proxy);
        assert!(w[1].ground_area_error.abs() < w[0].ground_area_error.abs());
    }
    for r in &recs {
        assert!(r.torus_area_proxy > r.ground_area_proxy);
        assert!(r.torus_area_proxy < 2.0 * PI * PI);
        assert!(r.torus_residual < 1e-9 && r.ground_residual < 1e-9);
    }
    assert!(d
        .path()
        .join("stationary/eps_0.02/torus_profile.csv")
        .exists());
}

#[test]
fn spectrum_command_indices_and_basis_files() {
    let d = tempfile::tempdir().unwrap();
    let c = cfg(
        "eps = 0.15\nprofile_n = 256\nn_eta = 16\nn_phi1 = 16\nn_phi2 = 16",
        d.path(),
    );
    let r = cmd_spectrum(&c).unwrap().remove(0);
    assert_eq!(
        (
            r.torus_index,
            r.ground_index,
            r.constant_plus_index,
            r.constant_minus_index
        ),
        (5, 1, 0, 0)
    );
    assert!(r.torus_spread_2_5 < 1e-8);
    for j in 1..=5 {
        assert!(d
            .path()
            .join(format!("spectrum/eps_0.15/basis_phi{j}.acs3"))
            .exists());
    }
}

#[test]
fn first_axis_directions_end_at_constants() {
    let d = tempfile::tempdir().unwrap();
    for (sign, want) in [
        (1.0, InterfaceKind::ConstantPlus),
        (-1.0, InterfaceKind::ConstantMinus),
    ] {
        let c = cfg(
            &format!(
                "eps = 0.15\nn_eta = 16\nn_phi1 = 16\nn_phi2 = 16\nt_end = 20\nwrite_snapshots = false\n\
                 direction = {sign}, 0, 0, 0, 0"
            ),
            d.path(),
        );
        let r = cmd_flow(&c).unwrap().remove(0);
        assert_eq!(r.terminal().kind, want);
        assert!(r.log.final_energy() < 1e-6);
        assert_eq!(r.terminal_sign(), sign);
        assert!(r.log.strictly_decreasing && r.log.max_abs_u < 1.0);
    }
}

#[test]
fn symmetric_projection_keeps_the_initial_field() {
    let d = tempfile::tempdir().unwrap();
    let c = cfg(
        "eps = 0.15\nn_eta = 16\nn_phi1 = 16\nn_phi2 = 16\nt_end = 0.01",
        d.path(),
    );
    let s = FlowSetup::new(&c, 0.15).unwrap();
    for (i, j) in [(0, 0), (1, 2), (3, 7)] {
        let a = orbit_point(PI * i as f64 / 4.0, PI * j as f64 / 4.0).map(|x| 0.1 * x);
        let mut sc = s.stepper_config();
        sc.symmetrize = s.symmetry_for(a, true).unwrap();
        let rec = s.flow(a, &sc, None).unwrap();
        assert_eq!(rec.group_order, 8);
        assert!(rec.symmetry_defect < 1e-12, "{}", rec.symmetry_defect);
    }
}

#[test]
fn sweep_path_endpoints_and_midpoint() {
    let q = [0.0, 0.5, 0.5, -0.5, -0.5];
    assert_eq!(sweep_point(2.0, q, 0.0), [-2.0, 0.0, 0.0, 0.0, 0.0]);
    let mid = sweep_point(2.0, q, 0.5);
    assert!(mid[0].abs() < 1e-15 && (mid[1] - 1.0).abs() < 1e-15);
    assert!((sweep_point(2.0, q, 1.0)[0] - 2.0).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn snapshot_round_trip_is_bit_exact(
        n in 2usize..6, m in 2usize..5, eps in 1e-3f64..1.0, time in 0.0f64..100.0, seed in any::<u64>()
    ) {
        let g = build_grid(2 * n, 2 * m, 2 * m).unwrap();
        let mut x = seed;
        let vals: Vec<f64> = (0..g.len())
            .map(|_| {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                f64::from_bits((x >> 2) | 0x3000_0000_0000_0000)
            })
            .collect();
        let f = ScalarField::new(g, vals).unwrap();
        let bytes = encode_snapshot(&f, eps, time);
        let back = decode_snapshot(&bytes).unwrap();
        prop_assert_eq!(back.eps.to_bits(), eps.to_bits());
        prop_assert_eq!(back.time.to_bits(), time.to_bits());
        prop_assert!(back.field.values().iter().zip(f.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
        prop_assert!(decode_snapshot(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn stabilizer_elements_fix_the_direction(i in 0usize..8, j in 0usize..8, r in 0.01f64..1.0) {
        let g = build_grid(8, 16, 16).unwrap();
        let a = orbit_point(PI * i as f64 / 4.0, PI * j as f64 / 4.0).map(|x| r * x);
        let grp = stabilizer(a, &DoubleWell::standard(), &g, true).unwrap().unwrap();
        for e in grp.elements() {
            let b = e.apply_direction(a);
            prop_assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-12));
        }
    }

    #[test]
    fn config_echo_round_trips(eps in 0.01f64..0.3, n in 4usize..64, seed in any::<u64>(), band in 0.001f64..0.2) {
        let c = ExperimentConfig::parse(&format!("eps = {eps}\nn_eta = {n}\nseed = {seed}\nconstant_band = {band}")).unwrap();
        prop_assert_eq!(ExperimentConfig::parse(&c.resolved()).unwrap(), c);
    }
}
