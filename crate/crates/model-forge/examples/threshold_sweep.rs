//! Scores the bundled scenario across a grid of classification thresholds.
//!
//! Raising the threshold can only turn wanted decisions into other ones,
//! so false positives fall monotonically while false negatives rise.
//!
//! ```bash
//! cargo run --example threshold_sweep
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use model_forge::metamodel::Scalar;
use model_forge::simkernel::NullSink;
use model_forge::{assemble_artifact, load_model, run_artifact};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn main() {
    let reference = load_model(fixture("atr_reference.json")).expect("bundled model loads");
    let specific = load_model(fixture("maritime_specific.json")).expect("bundled model loads");
    let artifact = assemble_artifact(&specific, &reference).expect("bundled pair assembles");

    println!("{:>5}  {:>15}  {:>15}", "h", "false positives", "false negatives");
    for step in 0..=12 {
        let h = step as f64 * 0.5;
        let mut overrides = BTreeMap::new();
        overrides.insert("h".to_owned(), Scalar::Real(h));
        let report = run_artifact(&artifact, &overrides, &mut NullSink)
            .expect("run succeeds")
            .report;
        println!(
            "{h:>5}  {:>15}  {:>15}",
            report.false_positives, report.false_negatives
        );
    }
}
