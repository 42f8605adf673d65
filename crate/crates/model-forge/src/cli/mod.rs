//! The `model-forge` command line: validate models, derive specific models
//! from selections, run executable artifacts, and export views as DOT.
//!
//! Exit status: 0 for success or a clean model, 1 for diagnostics with
//! errors or a failed run, 2 for usage and I/O errors. Warnings alone never
//! fail a command unless `--strict` is set.

pub mod dot;

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::behavior::{assemble_artifact, run_artifact, ExecutableArtifact};
use crate::derivation::{completeness, derive_specific, Coverage};
use crate::metamodel::{Model, ModelKind, Scalar};
use crate::simkernel::{EventSink, Outcome, ScoreReport, StepRecord};
use crate::store::{load_model, load_params, load_selection, save_model};
use crate::validation::{clean_of_errors, validate_reference, validate_specific, Diagnostic};

/// Process exit status of a subcommand.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    /// Success, or a model with no findings worse than allowed.
    Clean,
    /// Diagnostics with errors, or a failed derivation/run.
    Findings,
    /// Usage or I/O errors.
    Usage,
}

impl ExitStatus {
    pub fn code(self) -> u8 {
        match self {
            ExitStatus::Clean => 0,
            ExitStatus::Findings => 1,
            ExitStatus::Usage => 2,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "model-forge",
    version,
    about = "Validate layered models, derive scenario configurations, and run them"
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Check a model against the alignment rules
    Validate {
        /// Model file to check
        model: PathBuf,
        /// Reference model; when given, `model` is checked as a specific
        /// model against it
        reference: Option<PathBuf>,
        /// Treat warnings as failures
        #[arg(long)]
        strict: bool,
    },
    /// Instantiate a specific model from a reference and a selection
    Derive {
        /// Reference model file
        reference: PathBuf,
        /// Selection file (JSON: {"select": {...}, "params": {...}})
        selection: PathBuf,
        /// Output path; the file stem becomes the new model's id
        out: PathBuf,
    },
    /// Assemble the executable artifact of a specific model and run it
    Run {
        /// Specific model file
        specific: PathBuf,
        /// Its reference model file
        reference: PathBuf,
        /// Parameter file (JSON object name -> value)
        #[arg(long)]
        params: Option<PathBuf>,
        /// Override one parameter (repeatable, last one wins)
        #[arg(long = "set", value_name = "NAME=VALUE")]
        set: Vec<String>,
        /// Prompt for each tunable parameter
        #[arg(long)]
        interactive: bool,
        /// Noise onset policy: `after` (default) raises noise strictly after
        /// controller activation, `at` raises it from the activation step on
        #[arg(long, value_enum)]
        policy: Option<Policy>,
    },
    /// Export views as DOT directed graphs
    Export {
        /// Model file
        model: PathBuf,
        /// Export a single view by name
        #[arg(long)]
        view: Option<String>,
        /// Export every view into the output directory
        #[arg(long)]
        all: bool,
        /// Output file (--view) or directory (--all)
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Policy {
    After,
    At,
}

/// Parses arguments and dispatches; returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            // clap renders its own message; usage problems exit with 2.
            let code = if err.exit_code() == 0 { 0 } else { 2 };
            let _ = err.print();
            return code as u8;
        }
    };
    let status = match cli.command {
        CliCommand::Validate { model, reference, strict } => {
            cmd_validate(&model, reference.as_deref(), strict)
        }
        CliCommand::Derive { reference, selection, out } => {
            cmd_derive(&reference, &selection, &out)
        }
        CliCommand::Run { specific, reference, params, set, interactive, policy } => cmd_run(
            &specific,
            &reference,
            params.as_deref(),
            &set,
            interactive,
            policy,
        ),
        CliCommand::Export { model, view, all, out } => cmd_export(&model, view.as_deref(), all, &out),
    };
    status.code()
}

fn print_diagnostics(diags: &[Diagnostic]) {
    for d in diags {
        println!("{d}");
    }
}

/// Loads a model, mapping I/O failures to Usage and format/integrity
/// failures to printed diagnostics with Findings.
fn load_or_report(path: &Path) -> Result<Model, ExitStatus> {
    match load_model(path) {
        Ok(model) => Ok(model),
        Err(err) if err.is_io() => {
            eprintln!("error: {err}");
            Err(ExitStatus::Usage)
        }
        Err(err) => {
            print_diagnostics(&err.diagnostics());
            Err(ExitStatus::Findings)
        }
    }
}

/// `validate <model> [reference] [--strict]`
pub fn cmd_validate(model_path: &Path, reference_path: Option<&Path>, strict: bool) -> ExitStatus {
    let model = match load_or_report(model_path) {
        Ok(m) => m,
        Err(status) => return status,
    };

    let diags = match reference_path {
        None => {
            if model.kind != ModelKind::Reference {
                vec![Diagnostic::error(
                    "E-MODEL-KIND",
                    model.id.clone(),
                    "model is not a reference model; pass its reference to validate it as specific",
                )]
            } else {
                validate_reference(&model)
            }
        }
        Some(ref_path) => {
            let reference = match load_or_report(ref_path) {
                Ok(m) => m,
                Err(status) => return status,
            };
            if model.kind != ModelKind::Specific || model.parent_ref.as_ref() != Some(&reference.id)
            {
                vec![Diagnostic::error(
                    "E-MODEL-KIND",
                    model.id.clone(),
                    format!("model is not a specific model derived from `{}`", reference.id),
                )]
            } else {
                validate_specific(&model, &reference)
            }
        }
    };

    print_diagnostics(&diags);
    if !clean_of_errors(&diags) || (strict && !diags.is_empty()) {
        ExitStatus::Findings
    } else {
        ExitStatus::Clean
    }
}

/// `derive <reference> <selection> <out>`
pub fn cmd_derive(reference_path: &Path, selection_path: &Path, out_path: &Path) -> ExitStatus {
    let reference = match load_or_report(reference_path) {
        Ok(m) => m,
        Err(status) => return status,
    };
    let ref_diags = validate_reference(&reference);
    if !clean_of_errors(&ref_diags) {
        print_diagnostics(&ref_diags);
        return ExitStatus::Findings;
    }
    let selection = match load_selection(selection_path) {
        Ok(s) => s,
        Err(err) if err.is_io() => {
            eprintln!("error: {err}");
            return ExitStatus::Usage;
        }
        Err(err) => {
            print_diagnostics(&err.diagnostics());
            return ExitStatus::Findings;
        }
    };
    let Some(model_id) = out_path.file_stem().and_then(|s| s.to_str()).filter(|s| !s.is_empty())
    else {
        eprintln!("error: output path has no usable file stem for the model id");
        return ExitStatus::Usage;
    };

    let specific = match derive_specific(&reference, &selection, model_id) {
        Ok(m) => m,
        Err(err) => {
            println!("error {err}");
            return ExitStatus::Findings;
        }
    };
    if let Err(err) = save_model(&specific, out_path) {
        eprintln!("error: {err}");
        return ExitStatus::Usage;
    }

    let report = completeness(&specific, &reference);
    let width = report
        .entries
        .iter()
        .map(|e| e.service_id.as_str().len())
        .chain(["service".len()])
        .max()
        .unwrap_or(7);
    println!("{:width$}  resolution", "service");
    for entry in &report.entries {
        let resolution = match &entry.coverage {
            Coverage::Resolved { system: Some(id) } => id.to_string(),
            Coverage::Resolved { system: None } => "via functions".to_owned(),
            Coverage::Missing => "missing".to_owned(),
            Coverage::Ambiguous { candidates } => format!(
                "ambiguous ({})",
                candidates.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(", ")
            ),
        };
        println!("{:width$}  {resolution}", entry.service_id);
    }
    println!("complete: {}", if report.complete { "yes" } else { "no" });
    ExitStatus::Clean
}

fn parse_scalar(text: &str) -> Scalar {
    serde_json::from_str::<Scalar>(text).unwrap_or_else(|_| Scalar::Text(text.to_owned()))
}

/// Sink that renders one progress block per step and the final score.
struct ConsoleSink;

impl EventSink for ConsoleSink {
    fn on_step(&mut self, record: &StepRecord) {
        let s = &record.state;
        println!("t={}", s.time);
        println!(
            "  p_desired={} p_actual={} p_deviation={}",
            s.desired_position, s.actual_position, s.deviation
        );
        println!("  v_active={} v_actual={}", s.active_velocity, s.actual_velocity);
        for c in &record.classifications {
            let marker = match c.outcome {
                Outcome::Correct => "",
                Outcome::FalsePositive => " [false positive]",
                Outcome::FalseNegative => " [false negative]",
            };
            println!(
                "  target {}: s={} N={} -> {}{}",
                c.target, c.strength, c.noise, c.decision, marker
            );
        }
    }

    fn on_report(&mut self, report: &ScoreReport) {
        println!("{}", render_score(report));
    }
}

/// The fixed report wording asserted by golden tests.
pub fn render_score(report: &ScoreReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("false positives: {}", report.false_positives));
    if let Some(t) = report.first_false_positive {
        out.push_str(&format!(" (first at t={t})"));
    }
    out.push('\n');
    out.push_str(&format!("false negatives: {}", report.false_negatives));
    if let Some(t) = report.first_false_negative {
        out.push_str(&format!(" (first at t={t})"));
    }
    out
}

fn prompt_tunables(
    artifact: &ExecutableArtifact,
    overrides: &mut BTreeMap<String, Scalar>,
) -> Result<(), ExitStatus> {
    let stdin = std::io::stdin();
    let mut lines = stdin.lock().lines();
    for entry in artifact.param_schema.iter().filter(|e| e.tunable) {
        let current = overrides.get(&entry.name).unwrap_or(&entry.default);
        print!("{} [{}]: ", entry.name, current);
        let _ = std::io::stdout().flush();
        match lines.next() {
            Some(Ok(line)) => {
                let line = line.trim();
                if !line.is_empty() {
                    overrides.insert(entry.name.clone(), parse_scalar(line));
                }
            }
            Some(Err(err)) => {
                eprintln!("error: failed to read parameter input: {err}");
                return Err(ExitStatus::Usage);
            }
            None => break, // end of input keeps the remaining defaults
        }
    }
    Ok(())
}

/// `run <specific> <reference> [--params file] [--set name=value ...]
/// [--interactive] [--policy at|after]`
pub fn cmd_run(
    specific_path: &Path,
    reference_path: &Path,
    params_path: Option<&Path>,
    sets: &[String],
    interactive: bool,
    policy: Option<Policy>,
) -> ExitStatus {
    let specific = match load_or_report(specific_path) {
        Ok(m) => m,
        Err(status) => return status,
    };
    let reference = match load_or_report(reference_path) {
        Ok(m) => m,
        Err(status) => return status,
    };
    let diags = validate_specific(&specific, &reference);
    if !clean_of_errors(&diags) {
        print_diagnostics(&diags);
        return ExitStatus::Findings;
    }

    let artifact = match assemble_artifact(&specific, &reference) {
        Ok(a) => a,
        Err(err) => {
            println!("error {err}");
            return ExitStatus::Findings;
        }
    };

    // Parameter layering: file, then --set in order, then prompts/--policy.
    let mut overrides: BTreeMap<String, Scalar> = BTreeMap::new();
    if let Some(path) = params_path {
        match load_params(path) {
            Ok(file_params) => overrides.extend(file_params),
            Err(err) if err.is_io() => {
                eprintln!("error: {err}");
                return ExitStatus::Usage;
            }
            Err(err) => {
                print_diagnostics(&err.diagnostics());
                return ExitStatus::Findings;
            }
        }
    }
    for pair in sets {
        let Some((name, value)) = pair.split_once('=') else {
            eprintln!("error: --set expects NAME=VALUE, got `{pair}`");
            return ExitStatus::Usage;
        };
        overrides.insert(name.to_owned(), parse_scalar(value));
    }
    if interactive {
        if let Err(status) = prompt_tunables(&artifact, &mut overrides) {
            return status;
        }
    }
    if let Some(policy) = policy {
        let value = match policy {
            Policy::After => "after",
            Policy::At => "at",
        };
        overrides.insert("noise_onset".to_owned(), Scalar::Text(value.to_owned()));
    }

    let resolved = match artifact.resolve_params(&overrides) {
        Ok(r) => r,
        Err(err) => {
            println!("error {err}");
            return ExitStatus::Findings;
        }
    };
    println!("tunable parameters:");
    for entry in artifact.param_schema.iter().filter(|e| e.tunable) {
        println!("  {} = {}", entry.name, resolved[&entry.name]);
    }
    println!("constant parameters:");
    for entry in artifact.param_schema.iter().filter(|e| !e.tunable) {
        println!("  {} = {}", entry.name, resolved[&entry.name]);
    }

    match run_artifact(&artifact, &overrides, &mut ConsoleSink) {
        Ok(_result) => ExitStatus::Clean,
        Err(err) => {
            println!("error {err}");
            ExitStatus::Findings
        }
    }
}

/// `export <model> (--view name | --all) <out>`
pub fn cmd_export(model_path: &Path, view: Option<&str>, all: bool, out_path: &Path) -> ExitStatus {
    if view.is_some() == all {
        eprintln!("error: pass exactly one of --view <name> or --all");
        return ExitStatus::Usage;
    }
    let model = match load_or_report(model_path) {
        Ok(m) => m,
        Err(status) => return status,
    };

    if let Some(name) = view {
        let Some(view) = model.views.iter().find(|v| v.name == name) else {
            println!("error: no view named `{name}` in model `{}`", model.id);
            return ExitStatus::Findings;
        };
        let rendered = dot::render_view(&model, view);
        if let Err(err) = std::fs::write(out_path, rendered) {
            eprintln!("error: cannot write {}: {err}", out_path.display());
            return ExitStatus::Usage;
        }
        return ExitStatus::Clean;
    }

    if let Err(err) = std::fs::create_dir_all(out_path) {
        eprintln!("error: cannot create {}: {err}", out_path.display());
        return ExitStatus::Usage;
    }
    let mut views: Vec<_> = model.views.iter().collect();
    views.sort_by(|a, b| a.name.cmp(&b.name));
    for view in views {
        let rendered = dot::render_view(&model, view);
        let file = out_path.join(format!("{}.dot", view.name));
        if let Err(err) = std::fs::write(&file, rendered) {
            eprintln!("error: cannot write {}: {err}", file.display());
            return ExitStatus::Usage;
        }
    }
    ExitStatus::Clean
}
