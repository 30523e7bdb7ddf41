//! Relative cycle breakdown of a base-size encoder with integer-only kernels
//! versus table lookups, across sequence lengths.
//!
//! cargo run --example cycle_model [nonlinear-lanes]

use nnlut::cost::{published, render_table, sweep, CostParams, WorkloadSpec};

pub fn run(lanes: u32) -> nnlut::Result<()> {
    let params = CostParams {
        nonlinear_lanes: lanes,
        ..CostParams::default()
    };
    let reports = sweep(&WorkloadSpec::roberta_base(1), &published::SEQ_LENS, &params)?;
    println!("model, {lanes} lane(s) per non-linear unit:");
    print!("{}", render_table(&reports));
    println!("\npublished speedup: {:?}", published::SPEEDUP);
    Ok(())
}

fn main() -> nnlut::Result<()> {
    let lanes = std::env::args().nth(1).map_or(1, |a| a.parse().expect("lanes"));
    run(lanes)
}
