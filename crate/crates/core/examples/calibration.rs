//! Re-fit a trained 1/√x net for five epochs on inputs drawn from the narrow
//! band it will actually see.
//!
//! cargo run --release --example calibration [epochs]

use nnlut::lut::nn_to_lut;
use nnlut::metrics::l1_error_curve;
use nnlut::net::{calibrate, finalize_net, fit_target, TrainConfig};
use nnlut::targets::{rsqrt_ref, Interval, TargetKind, TargetSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn run(epochs: usize) -> nnlut::Result<()> {
    let spec = TargetSpec::default_for(TargetKind::Rsqrt);
    let cfg = TrainConfig {
        epochs,
        ..TrainConfig::default()
    };
    let (net, _) = fit_target(&spec, &cfg)?;
    let band = Interval::new(0.5, 2.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let samples: Vec<f64> = (0..4096).map(|_| rng.gen_range(band.lo..band.hi)).collect();

    let (tuned, trace) = calibrate(&net, &samples, rsqrt_ref, &TrainConfig::calibration())?;
    println!(
        "loss on recorded inputs: {:.3e} -> {:.3e}",
        trace.initial_loss(),
        trace.final_loss()
    );
    for (name, n) in [("trained", &net), ("calibrated", &tuned)] {
        let lut = nn_to_lut(&finalize_net(n))?;
        let r = l1_error_curve(|x| lut.eval(x), rsqrt_ref, band, 10_000, name)?;
        println!("{name:<11} mean L1 on [0.5, 2]: {:.3e}  max {:.3e}", r.mean_l1, r.max_abs);
    }
    Ok(())
}

fn main() -> nnlut::Result<()> {
    let epochs = std::env::args().nth(1).map_or(1000, |a| a.parse().expect("epochs"));
    run(epochs)
}
