//! A 1/√x table trained on (0.1, 1024) reused below 1 by scaling the input by
//! 2^10 and the output by 2^5.
//!
//! cargo run --release --example input_scaling [epochs]

use nnlut::composite::{scaled_rsqrt_counted, ScaledRsqrt};
use nnlut::lut::nn_to_lut;
use nnlut::net::{finalize_net, fit_target, TrainConfig};
use nnlut::targets::{rsqrt_ref, Interval, TargetKind, TargetSpec};

fn worst_relative(sr: &ScaledRsqrt, range: Interval) -> nnlut::Result<(f64, u32)> {
    let mut worst = 0f64;
    let mut scalings = 0;
    for x in range.linspace(20_000) {
        let (y, k) = scaled_rsqrt_counted(sr, x)?;
        let r = rsqrt_ref(x)?;
        worst = worst.max((y - r).abs() / r);
        scalings = scalings.max(k);
    }
    Ok((worst, scalings))
}

pub fn run(epochs: usize) -> nnlut::Result<()> {
    let spec = TargetSpec::default_for(TargetKind::Rsqrt).with_range(Interval::new(1.0, 1024.0)?)?;
    let cfg = TrainConfig {
        epochs,
        ..TrainConfig::default()
    };
    let (net, _) = fit_target(&spec, &cfg)?;
    let sr = ScaledRsqrt::with_defaults(nn_to_lut(&finalize_net(&net))?);
    for (lo, hi) in [(1.0, 1024.0), (1e-3, 1.0), (1e-6, 1e-3)] {
        let (err, k) = worst_relative(&sr, Interval::new(lo, hi)?)?;
        println!("[{lo:e}, {hi:e}]  max relative error {err:.3e}  scalings up to {k}");
    }
    Ok(())
}

fn main() -> nnlut::Result<()> {
    let epochs = std::env::args().nth(1).map_or(1000, |a| a.parse().expect("epochs"));
    run(epochs)
}
