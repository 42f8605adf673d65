//! Replaces the builtin threshold classifier with the bundled external
//! hook process and shows that the score does not change — concrete
//! resources behind one service are interchangeable as long as they honor
//! the same contract.
//!
//! Requires `python3` on the PATH.
//!
//! ```bash
//! cargo run --example external_classifier
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use model_forge::behavior::{BehaviorBinding, BindingKind, Role};
use model_forge::metamodel::Id;
use model_forge::simkernel::NullSink;
use model_forge::{assemble_artifact, attach_behavior, load_model, run_artifact};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn main() {
    let reference = load_model(fixture("atr_reference.json")).expect("bundled model loads");
    let specific = load_model(fixture("maritime_specific.json")).expect("bundled model loads");

    let builtin = assemble_artifact(&specific, &reference).expect("bundled pair assembles");
    let builtin_report = run_artifact(&builtin, &BTreeMap::new(), &mut NullSink)
        .expect("builtin run succeeds")
        .report;

    // Rebind the classifier block to the external hook script.
    let hook = fixture("hooks/threshold_classifier.py");
    let (hooked, warnings) = attach_behavior(
        &specific,
        BehaviorBinding {
            block_id: Id::new("threshold_tcu"),
            kind: BindingKind::Exec,
            target: format!("python3 {}", hook.display()),
            role: Role::Classifier,
        },
    )
    .expect("rebinding succeeds");
    for w in &warnings {
        println!("{w}");
    }

    let external = assemble_artifact(&hooked, &reference).expect("hooked pair assembles");
    let external_report = run_artifact(&external, &BTreeMap::new(), &mut NullSink)
        .expect("hooked run succeeds")
        .report;

    println!(
        "builtin : {} false positives, {} false negatives",
        builtin_report.false_positives, builtin_report.false_negatives
    );
    println!(
        "external: {} false positives, {} false negatives",
        external_report.false_positives, external_report.false_negatives
    );
    assert_eq!(builtin_report, external_report);
    println!("identical scores — the classifier is replaceable");
}
