//! DOT rendering for views: Taxonomy views show inheritance and trace
//! edges, Structure views show composition, Connectivity views show
//! connectivity. Output is deterministic (nodes and edges sorted).

use crate::metamodel::{Model, RelationKind, View, Viewpoint};

fn escape(text: &str) -> String {
    text.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Renders one view as a directed graph.
pub fn render_view(model: &Model, view: &View) -> String {
    let mut out = String::new();
    out.push_str(&format!("digraph \"{}\" {{\n", escape(&view.name)));
    out.push_str("  rankdir=BT;\n");
    out.push_str("  node [shape=box];\n");

    let mut members: Vec<_> = view.members.iter().collect();
    members.sort();
    members.dedup();
    for id in &members {
        if let Some(block) = model.block(id) {
            out.push_str(&format!(
                "  \"{}\" [label=\"{}\\n({})\"];\n",
                escape(id.as_str()),
                escape(&block.name),
                block.kind
            ));
        }
    }

    let kinds: &[RelationKind] = match view.viewpoint {
        Viewpoint::Taxonomy => &[RelationKind::Inheritance, RelationKind::Trace],
        Viewpoint::Structure => &[RelationKind::Composition],
        Viewpoint::Connectivity => &[RelationKind::Connectivity],
    };

    let mut edges: Vec<_> = model
        .relations
        .iter()
        .filter(|r| kinds.contains(&r.kind))
        .filter(|r| members.contains(&&r.source) && members.contains(&&r.target))
        .collect();
    edges.sort();
    for rel in edges {
        let attrs = match rel.kind {
            RelationKind::Inheritance => " [arrowhead=onormal]",
            RelationKind::Trace => " [style=dashed]",
            _ => "",
        };
        out.push_str(&format!(
            "  \"{}\" -> \"{}\"{attrs};\n",
            escape(rel.source.as_str()),
            escape(rel.target.as_str())
        ));
    }

    out.push_str("}\n");
    out
}
