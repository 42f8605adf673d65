//! Lists the alternative groups of the bundled reference, derives a
//! specific model choosing the remote classifier, and prints the coverage
//! report.
//!
//! ```bash
//! cargo run --example derive_configuration
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use model_forge::derivation::Coverage;
use model_forge::metamodel::Id;
use model_forge::{
    alternative_groups, completeness, derive_specific, load_model, validate_specific, Selection,
};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn main() {
    let reference = load_model(fixture("atr_reference.json")).expect("bundled model loads");

    println!("alternative groups:");
    for group in alternative_groups(&reference) {
        let leaves: Vec<&str> = group.leaves.iter().map(|l| l.as_str()).collect();
        println!(
            "  {} (rooted at {}): {}",
            group.service_id,
            group.root_id,
            leaves.join(", ")
        );
    }

    // Unlike the bundled selection, pick the HTTP-backed classifier.
    let selection = Selection {
        select: BTreeMap::from([(Id::new("target_classification"), Id::new("remote_tcu"))]),
        params: BTreeMap::new(),
    };
    let specific = derive_specific(&reference, &selection, "remote_variant").unwrap();
    println!(
        "\nderived `{}` with blocks: {}",
        specific.id,
        specific
            .blocks
            .iter()
            .map(|b| b.id.as_str())
            .collect::<Vec<_>>()
            .join(", ")
    );

    let diagnostics = validate_specific(&specific, &reference);
    println!("conformance findings: {}", diagnostics.len());

    println!("\ncoverage:");
    for entry in completeness(&specific, &reference).entries {
        let status = match &entry.coverage {
            Coverage::Resolved { system: Some(id) } => format!("resolved by {id}"),
            Coverage::Resolved { system: None } => "resolved via functions".to_owned(),
            Coverage::Missing => "missing".to_owned(),
            Coverage::Ambiguous { candidates } => format!("ambiguous: {candidates:?}"),
        };
        println!("  {}: {status}", entry.service_id);
    }
}
