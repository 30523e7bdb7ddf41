//! Mean L1 error of trained tables against the equally spaced least-squares
//! baseline, both with 16 entries, for all four targets.
//!
//! cargo run --release --example linear_vs_nn_lut [epochs]

use nnlut::lut::{fit_linear_lut, nn_to_lut};
use nnlut::metrics::{compare, l1_error_curve};
use nnlut::net::{finalize_net, fit_target, TrainConfig};
use nnlut::targets::{Interval, TargetKind, TargetSpec};

pub fn run(epochs: usize) -> nnlut::Result<()> {
    let cfg = TrainConfig {
        epochs,
        ..TrainConfig::default()
    };
    println!("{:<7}{:>18}{:>12}{:>12}{:>9}", "target", "range", "NN-LUT", "Linear", "ratio");
    for kind in [TargetKind::Gelu, TargetKind::Exp, TargetKind::Recip, TargetKind::Rsqrt] {
        let spec = TargetSpec::default_for(kind);
        let (net, _) = fit_target(&spec, &cfg)?;
        let nn = nn_to_lut(&finalize_net(&net))?;
        let lin = fit_linear_lut(|x| kind.eval(x), spec.input_range, 16)?;
        // EXP is scored where it matters for softmax
        let range = match kind {
            TargetKind::Exp => Interval::new(-10.0, 0.0)?,
            _ => spec.input_range,
        };
        let a = l1_error_curve(|x| nn.eval(x), |x| kind.eval(x), range, 10_000, "nn")?;
        let b = l1_error_curve(|x| lin.eval(x), |x| kind.eval(x), range, 10_000, "linear")?;
        let cmp = compare(&a, &b)?;
        println!(
            "{:<7}{:>18}{:>12.3e}{:>12.3e}{:>9.3}",
            kind.name(),
            format!("[{}, {}]", range.lo, range.hi),
            a.mean_l1,
            b.mean_l1,
            cmp.aggregate_ratio
        );
    }
    Ok(())
}

fn main() -> nnlut::Result<()> {
    let epochs = std::env::args().nth(1).map_or(1000, |a| a.parse().expect("epochs"));
    run(epochs)
}
