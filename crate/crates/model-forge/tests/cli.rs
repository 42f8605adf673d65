//! End-to-end tests of the `model-forge` binary: exit codes, diagnostic
//! lines, report wording, and pipeline determinism.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use model_forge::metamodel::{Id, RelationKind};
use model_forge::{load_model, save_model};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn forge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_model-forge"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn forge_with_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_model-forge"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary spawns");
    child
        .stdin
        .take()
        .unwrap()
        .write_all(input.as_bytes())
        .expect("stdin accepts input");
    child.wait_with_output().expect("binary finishes")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

fn path_str(path: &Path) -> String {
    path.to_str().unwrap().to_owned()
}

// ---------------------------------------------------------------- validate

#[test]
fn validate_clean_reference_is_silent_and_zero() {
    let out = forge(&["validate", &path_str(&fixture("atr_reference.json"))]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out), "");
}

#[test]
fn validate_clean_specific_against_reference_is_zero() {
    let out = forge(&[
        "validate",
        &path_str(&fixture("maritime_specific.json")),
        &path_str(&fixture("atr_reference.json")),
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "");
}

#[test]
fn validate_reports_a_removed_trace_with_status_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut model = load_model(fixture("atr_reference.json")).unwrap();
    model
        .relations
        .retain(|r| !(r.kind == RelationKind::Trace && r.source == Id::new("mcu")));
    let broken = dir.path().join("broken.json");
    save_model(&model, &broken).unwrap();

    let out = forge(&["validate", &path_str(&broken)]);
    assert_eq!(code(&out), 1);
    let text = stdout(&out);
    assert!(text.contains("error E-TRACE-MISSING mcu:"), "{text}");
    assert_eq!(text.lines().count(), 1);
}

#[test]
fn validate_missing_file_is_a_usage_error() {
    let out = forge(&["validate", "/nonexistent/nowhere.json"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn warnings_fail_only_under_strict() {
    let dir = tempfile::tempdir().unwrap();
    let mut model = load_model(fixture("atr_reference.json")).unwrap();
    model.behaviors.retain(|b| b.block_id != Id::new("remote_tcu"));
    let warned = dir.path().join("warned.json");
    save_model(&model, &warned).unwrap();

    let out = forge(&["validate", &path_str(&warned)]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("warning W-NO-BEHAVIOR remote_tcu:"));

    let out = forge(&["validate", &path_str(&warned), "--strict"]);
    assert_eq!(code(&out), 1);
}

// ------------------------------------------------------------------ derive

#[test]
fn derive_reproduces_the_bundled_specific_model_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("maritime_specific.json");
    let out = forge(&[
        "derive",
        &path_str(&fixture("atr_reference.json")),
        &path_str(&fixture("selection.json")),
        &path_str(&out_path),
    ]);
    assert_eq!(code(&out), 0, "stdout: {}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("complete: yes"), "{text}");
    assert!(text.contains("target_classification"), "{text}");

    let derived = std::fs::read(&out_path).unwrap();
    let bundled = std::fs::read(fixture("maritime_specific.json")).unwrap();
    assert_eq!(derived, bundled);
}

#[test]
fn derive_without_a_required_choice_fails_with_selection_missing() {
    let dir = tempfile::tempdir().unwrap();
    let selection = dir.path().join("empty.json");
    std::fs::write(&selection, "{\"select\": {}, \"params\": {}}\n").unwrap();
    let out = forge(&[
        "derive",
        &path_str(&fixture("atr_reference.json")),
        &path_str(&selection),
        &path_str(&dir.path().join("out.json")),
    ]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("E-SELECTION-MISSING"), "{}", stdout(&out));
}

#[test]
fn derive_to_an_unwritable_path_is_a_usage_error() {
    let out = forge(&[
        "derive",
        &path_str(&fixture("atr_reference.json")),
        &path_str(&fixture("selection.json")),
        "/nonexistent-dir/out.json",
    ]);
    assert_eq!(code(&out), 2);
}

// --------------------------------------------------------------------- run

const BASELINE_REPORT: &str = "false positives: 3 (first at t=3)\nfalse negatives: 0\n";

fn run_args(extra: &[&str]) -> Vec<String> {
    let mut args = vec![
        "run".to_owned(),
        path_str(&fixture("maritime_specific.json")),
        path_str(&fixture("atr_reference.json")),
    ];
    args.extend(extra.iter().map(|s| (*s).to_owned()));
    args
}

fn forge_owned(args: &[String]) -> Output {
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    forge(&refs)
}

#[test]
fn run_with_the_bundled_params_prints_the_pinned_report() {
    let params = path_str(&fixture("maritime_params.json"));
    let out = forge_owned(&run_args(&["--params", &params]));
    assert_eq!(code(&out), 0, "stdout: {}", stdout(&out));
    let text = stdout(&out);
    assert!(text.ends_with(BASELINE_REPORT), "{text}");
    assert_eq!(text.matches("\nt=").count(), 6, "one progress block per step");
    assert!(text.contains("tunable parameters:"));
    assert!(text.contains("constant parameters:"));
}

#[test]
fn run_with_a_raised_threshold_flips_the_errors() {
    let out = forge_owned(&run_args(&["--set", "h=4"]));
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(
        text.ends_with("false positives: 0\nfalse negatives: 3 (first at t=0)\n"),
        "{text}"
    );
}

#[test]
fn run_under_the_literal_onset_policy() {
    let out = forge_owned(&run_args(&["--policy", "at"]));
    assert_eq!(code(&out), 0);
    assert!(
        stdout(&out).ends_with("false positives: 4 (first at t=2)\nfalse negatives: 0\n"),
        "{}",
        stdout(&out)
    );
}

#[test]
fn set_overrides_the_params_file_and_the_last_flag_wins() {
    let params = path_str(&fixture("maritime_params.json"));
    let out = forge_owned(&run_args(&["--params", &params, "--set", "h=10", "--set", "h=4"]));
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("false negatives: 3"), "{}", stdout(&out));
}

#[test]
fn interactive_defaults_match_the_non_interactive_run() {
    let baseline = forge_owned(&run_args(&[]));
    let args = run_args(&["--interactive"]);
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let accepted_defaults = forge_with_stdin(&refs, "\n\n");
    let typed_values = forge_with_stdin(&refs, "2\n3\n");

    assert_eq!(code(&accepted_defaults), 0);
    assert_eq!(code(&typed_values), 0);
    for out in [&accepted_defaults, &typed_values] {
        let text = stdout(out);
        assert!(text.contains("t_i ["), "prompt missing: {text}");
        assert!(text.contains(BASELINE_REPORT.trim_end()), "{text}");
    }
    // Identical simulation output: compare everything from the first step on.
    let tail = |s: &str| s[s.find("\nt=0").unwrap()..].to_owned();
    assert_eq!(tail(&stdout(&accepted_defaults)), tail(&stdout(&baseline)));
    assert_eq!(tail(&stdout(&typed_values)), tail(&stdout(&baseline)));
}

#[test]
fn run_refuses_a_specific_model_with_a_missing_param_value() {
    let dir = tempfile::tempdir().unwrap();
    let mut model = load_model(fixture("maritime_specific.json")).unwrap();
    model
        .blocks
        .iter_mut()
        .find(|b| b.id == Id::new("threshold_tcu"))
        .unwrap()
        .params
        .remove("h");
    let broken = dir.path().join("no_threshold.json");
    save_model(&model, &broken).unwrap();

    let out = forge(&[
        "run",
        &path_str(&broken),
        &path_str(&fixture("atr_reference.json")),
    ]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("E-PARAM-MISSING"), "{}", stdout(&out));
}

#[test]
fn unknown_set_names_fail_the_run() {
    let out = forge_owned(&run_args(&["--set", "warp=9"]));
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("E-PARAM-UNKNOWN"), "{}", stdout(&out));
}

// ------------------------------------------------------------------ export

#[test]
fn export_renders_capability_nodes_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("strategic.dot");
    let args = [
        "export",
        &path_str(&fixture("atr_reference.json")),
        "--view",
        "strategic_taxonomy",
        &path_str(&out_path),
    ];
    let out = forge(&args);
    assert_eq!(code(&out), 0);
    let first = std::fs::read(&out_path).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    assert!(text.contains("digraph \"strategic_taxonomy\""), "{text}");
    assert!(text.contains("Autonomous Survey\\n(Capability)"), "{text}");

    let out = forge(&args);
    assert_eq!(code(&out), 0);
    assert_eq!(std::fs::read(&out_path).unwrap(), first);
}

#[test]
fn export_all_writes_one_file_per_view() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("views");
    let out = forge(&[
        "export",
        &path_str(&fixture("atr_reference.json")),
        "--all",
        &path_str(&out_dir),
    ]);
    assert_eq!(code(&out), 0);
    let mut names: Vec<String> = std::fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "operational_connectivity.dot",
            "resource_taxonomy.dot",
            "service_structure.dot",
            "service_taxonomy.dot",
            "strategic_taxonomy.dot",
        ]
    );
}

#[test]
fn export_of_an_unknown_view_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = forge(&[
        "export",
        &path_str(&fixture("atr_reference.json")),
        "--view",
        "nonexistent",
        &path_str(&dir.path().join("x.dot")),
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn export_needs_exactly_one_selector() {
    let dir = tempfile::tempdir().unwrap();
    let out = forge(&[
        "export",
        &path_str(&fixture("atr_reference.json")),
        &path_str(&dir.path().join("x.dot")),
    ]);
    assert_eq!(code(&out), 2);
}

// ------------------------------------------------------------ whole pipeline

#[test]
fn unknown_subcommands_are_usage_errors() {
    let out = forge(&["frobnicate"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn the_pipeline_is_deterministic_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let reference = path_str(&fixture("atr_reference.json"));
    let selection = path_str(&fixture("selection.json"));

    let derive_once = |name: &str| -> Vec<u8> {
        let out_path = dir.path().join(name);
        let out = forge(&["derive", &reference, &selection, &path_str(&out_path)]);
        assert_eq!(code(&out), 0);
        std::fs::read(&out_path).unwrap()
    };
    // Identical content regardless of output location or repetition.
    assert_eq!(derive_once("maritime_specific.json"), derive_once("maritime_specific.json"));

    let derived = dir.path().join("maritime_specific.json");
    let validate = forge(&["validate", &path_str(&derived), &reference]);
    assert_eq!(code(&validate), 0);

    let run = |_: u32| {
        let out = forge(&["run", &path_str(&derived), &reference]);
        assert_eq!(code(&out), 0);
        stdout(&out)
    };
    assert_eq!(run(1), run(2));
}
