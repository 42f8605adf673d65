//! Compares the two noise-onset policies on the bundled scenario.
//!
//! The controller's activation raises the background noise. Whether the
//! raised level already applies at the activation step or only after it
//! changes the score: the later onset yields 3 false positives starting at
//! t=3, the literal onset yields 4 starting at t=2.
//!
//! ```bash
//! cargo run --example noise_policies
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

    for policy in ["after", "at"] {
        let mut overrides = BTreeMap::new();
        overrides.insert("noise_onset".to_owned(), Scalar::Text(policy.to_owned()));
        let report = run_artifact(&artifact, &overrides, &mut NullSink)
            .expect("run succeeds")
            .report;
        let first = report
            .first_false_positive
            .map(|t| format!(" (first at t={t})"))
            .unwrap_or_default();
        println!(
            "noise_onset={policy:5}  false positives: {}{first}, false negatives: {}",
            report.false_positives, report.false_negatives
        );
    }
}
