//! NNLUT_SEED handling. Kept in its own test binary because it mutates the
//! process environment.

use nnlut::artifact::{Artifact, NetDoc};
use nnlut::cli::{exit, run, SEED_ENV};
use tempfile::TempDir;

fn train(out: &std::path::Path, seed: &str) -> i32 {
    let args = [
        "nnlut", "train", "--target", "recip", "--seed", seed, "--epochs", "1", "--dataset-size",
        "500", "--out", out.to_str().unwrap(),
    ];
    run(args, &mut Vec::new())
}

#[test]
fn environment_seed_overrides_flag() {
    let dir = TempDir::new().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));

    std::env::set_var(SEED_ENV, "18446744073709551615");
    assert_eq!(train(&a, "3"), exit::OK);
    assert_eq!(train(&b, "5"), exit::OK);
    std::env::remove_var(SEED_ENV);
    assert_eq!(train(&c, "3"), exit::OK);

    let [a, b, c] = [a, b, c].map(|p| Artifact::<NetDoc>::read(&p).unwrap());
    assert_eq!(a.manifest.provenance.seed.as_deref(), Some("18446744073709551615"));
    assert_eq!(a.payload, b.payload);
    assert_ne!(a.payload, c.payload);
    assert_eq!(c.manifest.provenance.seed.as_deref(), Some("3"));

    std::env::set_var(SEED_ENV, "-1");
    assert_eq!(train(&dir.path().join("d"), "3"), exit::USAGE);
    std::env::remove_var(SEED_ENV);
}
