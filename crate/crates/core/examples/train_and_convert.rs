//! Train a 15-neuron GELU approximator, convert it into a 16-entry table and
//! confirm the two agree everywhere, then store both as hashed artifacts.
//!
//! cargo run --release --example train_and_convert [epochs]

use nnlut::artifact::{Artifact, LutDoc, NetDoc, Provenance};
use nnlut::lut::{equivalence_deviation, nn_to_lut, EQUIVALENCE_TOL};
use nnlut::net::{finalize_net, fit_target, TrainConfig};
use nnlut::targets::{TargetKind, TargetSpec};

pub fn run(epochs: usize) -> nnlut::Result<()> {
    let spec = TargetSpec::default_for(TargetKind::Gelu);
    let cfg = TrainConfig {
        epochs,
        ..TrainConfig::default()
    };
    let (net, trace) = fit_target(&spec, &cfg)?;
    println!(
        "trained {} epochs: L1 {:.3e} -> {:.3e}",
        epochs,
        trace.initial_loss(),
        trace.final_loss()
    );

    let fin = finalize_net(&net);
    let lut = nn_to_lut(&fin)?;
    println!("{:>12} {:>12} {:>12}", "from", "slope", "intercept");
    let mut from = f64::NEG_INFINITY;
    for i in 0..lut.entries() {
        println!("{:>12.5} {:>12.6} {:>12.6}", from, lut.slopes()[i], lut.intercepts()[i]);
        from = lut.breakpoints().get(i).copied().unwrap_or(f64::INFINITY);
    }

    // the table must reproduce the network well outside the training range
    let grid = spec.input_range.widened(3.0).linspace(100_000);
    let dev = equivalence_deviation(&fin, &lut, &grid);
    println!("max relative deviation from the net: {dev:.2e} (limit {EQUIVALENCE_TOL:e})");
    assert!(dev <= EQUIVALENCE_TOL);

    let dir = std::env::temp_dir().join("nnlut-example");
    std::fs::create_dir_all(&dir)?;
    let net_art = Artifact::new(
        NetDoc::new(spec, &fin, trace.final_loss()),
        Provenance::new(vec!["example train_and_convert".into()], Some(cfg.seed), vec![]),
        vec![],
    )?;
    let lut_art = Artifact::new(
        LutDoc::new(Some(spec.kind), &lut),
        Provenance::new(
            vec!["example train_and_convert".into()],
            None,
            vec![net_art.hash().to_string()],
        ),
        vec![],
    )?;
    let lut_path = dir.join("gelu.lut.json");
    net_art.write(&dir.join("gelu.net.json"))?;
    lut_art.write(&lut_path)?;
    let back = Artifact::<LutDoc>::read(&lut_path)?;
    assert_eq!(back.payload.to_lut()?, lut);
    println!("wrote {} (hash {})", lut_path.display(), &back.hash()[..16]);
    Ok(())
}

fn main() -> nnlut::Result<()> {
    let epochs = std::env::args().nth(1).map_or(1000, |a| a.parse().expect("epochs"));
    run(epochs)
}
