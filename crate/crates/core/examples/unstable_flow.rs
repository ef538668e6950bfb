//! Flow from the torus solution along `q = (0, ½, ½, −½, −½)` down to an
//! equatorial sphere, printing the classification of each snapshot.
//!
//! `cargo run --release --example unstable_flow -- [config]`

use s3ac::experiments::{ExperimentConfig, FlowSetup};

fn main() -> s3ac::Result<()> {
    let cfg = match std::env::args().nth(1) {
        Some(p) => ExperimentConfig::load(p.as_ref())?,
        None => ExperimentConfig::parse(
            "eps = 0.1\nn_eta = 32\nn_phi1 = 32\nn_phi2 = 32\nsnapshot_every = 250",
        )?,
    };
    let setup = FlowSetup::new(&cfg, cfg.eps[0])?;
    let r = setup.amplitude(cfg.direction);
    let n = cfg.direction.iter().map(|x| x * x).sum::<f64>().sqrt();
    let a = cfg.direction.map(|x| r * x / n);
    let mut scfg = setup.stepper_config();
    scfg.symmetrize = setup.symmetry_for(a, true)?;
    scfg.plateau = Some(setup.sphere_plateau_tracking());
    let rec = setup.flow(a, &scfg, None)?;
    for rep in &rec.reports {
        println!(
            "t = {:6.3}  shifted {:>8}  {:<14} area {:8.4}  y {:?}",
            rep.time,
            rep.shifted_time.map_or("-".into(), |s| format!("{s:.3}")),
            format!("{:?}", rep.kind),
            rep.area_proxy,
            rep.equator_normal
        );
    }
    println!(
        "stop {:?}, dissipation defect {:.3e}, crossings of 2 sigma 5 pi: {}",
        rec.log.stop,
        rec.log.dissipation_defect(),
        rec.crossings
    );
    Ok(())
}
