//! Lower a trained reciprocal table to binary16 parameters and to 32-bit
//! fixed point, and measure what each step costs in accuracy.
//!
//! cargo run --release --example precision_lowering [epochs]

use nnlut::lut::{int32_scale_for, nn_to_lut, to_fp16, to_int32, Lut};
use nnlut::metrics::l1_error_curve;
use nnlut::net::{finalize_net, fit_target, TrainConfig};
use nnlut::targets::{recip_ref, TargetKind, TargetSpec};

pub fn run(epochs: usize) -> nnlut::Result<()> {
    let spec = TargetSpec::default_for(TargetKind::Recip);
    let cfg = TrainConfig {
        epochs,
        ..TrainConfig::default()
    };
    let (net, _) = fit_target(&spec, &cfg)?;
    let fp32 = nn_to_lut(&finalize_net(&net))?;
    let fp16 = to_fp16(&fp32)?;
    // finest power-of-two input step whose output codes never saturate
    let int32 = to_int32(&fp32, int32_scale_for(&fp32, spec.input_range)?)?;
    let q = int32.quant().expect("int32 tables carry scales");
    println!("int32 scales: s_in {:e}, s_slope {:e}, s_out {:e}", q.s_in, q.s_slope, q.s_out);

    let tables: [(&str, &Lut); 3] = [("binary32", &fp32), ("binary16", &fp16), ("int32", &int32)];
    for (name, lut) in tables {
        let r = l1_error_curve(|x| lut.eval(x), recip_ref, spec.input_range, 20_000, name)?;
        let drift = l1_error_curve(
            |x| lut.eval(x),
            |x| Ok(fp32.eval_exact(x)),
            spec.input_range,
            20_000,
            name,
        )?;
        println!(
            "{name:<9} mean L1 vs 1/x {:.3e}   max drift from binary64 table {:.3e}",
            r.mean_l1, drift.max_abs
        );
        for w in lut.warnings() {
            println!("  warning: {w}");
        }
    }
    Ok(())
}

fn main() -> nnlut::Result<()> {
    let epochs = std::env::args().nth(1).map_or(1000, |a| a.parse().expect("epochs"));
    run(epochs)
}
