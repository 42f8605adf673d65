//! Loads the bundled reference model, runs the alignment checks, and shows
//! what the validator reports once the model is damaged.
//!
//! ```bash
//! cargo run --example validate_model
//! ```

use std::path::PathBuf;

use model_forge::metamodel::Id;
use model_forge::{load_model, validate_reference};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn main() {
    let model = load_model(fixture("atr_reference.json")).expect("bundled model loads");

    let diagnostics = validate_reference(&model);
    println!(
        "`{}`: {} blocks, {} findings",
        model.id,
        model.blocks.len(),
        diagnostics.len()
    );
    for d in &diagnostics {
        println!("  {d}");
    }

    // Remove one justification and watch rule R1 fire.
    let mut damaged = model.clone();
    damaged
        .relations
        .retain(|r| !(r.source == Id::new("mcu") && r.target == Id::new("movement_control")));
    println!("\nafter removing the trace of `mcu`:");
    for d in validate_reference(&damaged) {
        println!("  {d}");
    }

    // Bind behavior to an abstract block and watch rule R5 fire.
    let mut damaged = model.clone();
    let binding = damaged
        .behaviors
        .iter_mut()
        .find(|b| b.block_id == Id::new("threshold_tcu"))
        .expect("fixture binds the threshold classifier");
    binding.block_id = Id::new("classifier");
    println!("\nafter binding behavior to the abstract `classifier`:");
    for d in validate_reference(&damaged) {
        println!("  {d}");
    }
}
