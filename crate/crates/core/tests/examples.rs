//! Runs every cargo example on a short training schedule.

#![allow(dead_code)]

const EPOCHS: usize = 3;

#[path = "../examples/train_and_convert.rs"]
mod train_and_convert;
#[path = "../examples/linear_vs_nn_lut.rs"]
mod linear_vs_nn_lut;
#[path = "../examples/precision_lowering.rs"]
mod precision_lowering;
#[path = "../examples/input_scaling.rs"]
mod input_scaling;
#[path = "../examples/calibration.rs"]
mod calibration;
#[path = "../examples/composite_ops.rs"]
mod composite_ops;
#[path = "../examples/cycle_model.rs"]
mod cycle_model;

#[test]
fn train_and_convert_runs() {
    train_and_convert::run(EPOCHS).unwrap();
}

#[test]
fn linear_vs_nn_lut_runs() {
    linear_vs_nn_lut::run(EPOCHS).unwrap();
}

#[test]
fn precision_lowering_runs() {
    precision_lowering::run(EPOCHS).unwrap();
}

#[test]
fn input_scaling_runs() {
    input_scaling::run(EPOCHS).unwrap();
}

#[test]
fn calibration_runs() {
    calibration::run(EPOCHS).unwrap();
}

#[test]
fn composite_ops_runs() {
    composite_ops::run(EPOCHS).unwrap();
}

#[test]
fn cycle_model_runs() {
    for lanes in [1, 16] {
        cycle_model::run(lanes).unwrap();
    }
}
