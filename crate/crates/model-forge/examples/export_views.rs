//! Renders every view of the bundled reference model as a DOT graph.
//!
//! ```bash
//! cargo run --example export_views -- out/views
//! ```

use std::path::PathBuf;

use model_forge::cli::dot::render_view;
use model_forge::load_model;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn main() {
    let out_dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "views".to_owned()));
    std::fs::create_dir_all(&out_dir).expect("creating the output directory");

    let model = load_model(fixture("atr_reference.json")).expect("bundled model loads");
    for view in &model.views {
        let path = out_dir.join(format!("{}.dot", view.name));
        std::fs::write(&path, render_view(&model, view)).expect("writing the graph");
        println!("wrote {}", path.display());
    }

    let taxonomy = model
        .views
        .iter()
        .find(|v| v.name == "resource_taxonomy")
        .expect("bundled model has a resource taxonomy");
    println!("\n{}", render_view(&model, taxonomy));
}
