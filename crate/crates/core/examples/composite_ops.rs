//! Softmax, LayerNorm and GELU assembled from trained tables, compared with
//! their binary64 definitions on random vectors.
//!
//! cargo run --release --example composite_ops [epochs]

use nnlut::composite::{lut_gelu, lut_layernorm, lut_softmax, ScaledRsqrt};
use nnlut::lut::{nn_to_lut, Lut};
use nnlut::net::{finalize_net, fit_target, TrainConfig};
use nnlut::targets::{gelu_ref, layernorm_ref, softmax_ref, TargetKind, TargetSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn table(kind: TargetKind, cfg: &TrainConfig) -> nnlut::Result<Lut> {
    let (net, _) = fit_target(&TargetSpec::default_for(kind), cfg)?;
    nn_to_lut(&finalize_net(&net))
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn run(epochs: usize) -> nnlut::Result<()> {
    let cfg = TrainConfig {
        epochs,
        ..TrainConfig::default()
    };
    let gelu = table(TargetKind::Gelu, &cfg)?;
    let exp = table(TargetKind::Exp, &cfg)?;
    let div = table(TargetKind::Recip, &cfg)?;
    let rsqrt = ScaledRsqrt::with_defaults(table(TargetKind::Rsqrt, &cfg)?);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let (mut sm, mut ln, mut scalings) = (0f64, 0f64, 0);
    for _ in 0..200 {
        let v: Vec<f64> = (0..128).map(|_| unit.sample(&mut rng)).collect();
        let (p, _) = lut_softmax(&v, &exp, &div)?;
        sm = sm.max(max_diff(&p, &softmax_ref(&v)?));
        let w: Vec<f64> = v.iter().map(|x| 0.5 + 0.3 * x).collect();
        let (y, d) = lut_layernorm(&w, &rsqrt)?;
        ln = ln.max(max_diff(&y, &layernorm_ref(&w)?));
        scalings += d.rsqrt_scalings;
    }
    println!("softmax   max abs error over 200 vectors: {sm:.3e}");
    println!("layernorm max abs error over 200 vectors: {ln:.3e} ({scalings} rescaled variances)");

    let mut g = 0f64;
    for x in (-500..=500).map(|i| f64::from(i) / 100.0) {
        g = g.max((lut_gelu(&gelu, x) - gelu_ref(x)?).abs());
    }
    println!("gelu      max abs error on [-5, 5]: {g:.3e}");
    Ok(())
}

fn main() -> nnlut::Result<()> {
    let epochs = std::env::args().nth(1).map_or(1000, |a| a.parse().expect("epochs"));
    run(epochs)
}
