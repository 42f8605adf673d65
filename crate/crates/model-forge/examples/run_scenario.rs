//! Assembles the bundled configuration into an executable artifact and
//! runs it, printing each step and the final score.
//!
//! ```bash
//! cargo run --example run_scenario
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use model_forge::simkernel::{EventSink, ScoreReport, StepRecord};
use model_forge::{assemble_artifact, load_model, run_artifact};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

struct Printer;

impl EventSink for Printer {
    fn on_step(&mut self, record: &StepRecord) {
        let s = &record.state;
        let decisions: Vec<String> = record
            .classifications
            .iter()
            .map(|c| format!("target {} -> {}", c.target, c.decision))
            .collect();
        println!(
            "t={} actual={} deviation={}  {}",
            s.time,
            s.actual_position,
            s.deviation,
            decisions.join(", ")
        );
    }

    fn on_report(&mut self, report: &ScoreReport) {
        println!(
            "score: {} false positives, {} false negatives",
            report.false_positives, report.false_negatives
        );
    }
}

fn main() {
    let reference = load_model(fixture("atr_reference.json")).expect("bundled model loads");
    let specific = load_model(fixture("maritime_specific.json")).expect("bundled model loads");

    let artifact = assemble_artifact(&specific, &reference).expect("bundled pair assembles");
    println!("artifact `{}` members:", artifact.id);
    for member in &artifact.members {
        println!(
            "  {} as {} via {} `{}`",
            member.block_id, member.binding.role, member.binding.kind, member.binding.target
        );
    }
    println!();

    let result = run_artifact(&artifact, &BTreeMap::new(), &mut Printer).expect("run succeeds");
    if let Some(t) = result.report.first_false_positive {
        println!("first false positive at t={t}");
    }
}
