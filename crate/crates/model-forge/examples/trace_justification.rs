//! Walks the justification chain of every System block upward to the
//! Capability that demands it.
//!
//! ```bash
//! cargo run --example trace_justification
//! ```

use std::path::PathBuf;

use model_forge::metamodel::BlockKind;
use model_forge::{load_model, trace_chain};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn main() {
    let model = load_model(fixture("atr_reference.json")).expect("bundled model loads");

    for block in model.blocks.iter().filter(|b| b.kind == BlockKind::System) {
        let chain = trace_chain(&model, &block.id).expect("block exists");
        let path: Vec<String> = chain
            .blocks
            .iter()
            .map(|b| format!("{} ({})", b.id, b.kind))
            .collect();
        let status = if chain.complete { "" } else { "  [incomplete]" };
        println!("{}{status}", path.join(" -> "));
    }
}
