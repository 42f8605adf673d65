//! model-forge: a model-to-execution toolchain.
//!
//! The crate takes a layered reference model through validation, scenario
//! derivation, behavior binding, and deterministic simulation:
//!
//! 1. [`metamodel`] defines the type system — four layers (Strategic,
//!    Operational, Services, Resources), six block kinds, typed relations,
//!    and the legality rules for derivation traces between layers.
//! 2. [`store`] loads and saves models in a strict, canonical JSON format.
//! 3. [`validation`] enforces the alignment discipline: every block is
//!    justified upward to a Capability, inheritance trees are well-formed,
//!    and specific models conform to their reference model.
//! 4. [`derivation`] computes alternative groups from inheritance trees and
//!    instantiates specific models from a selection map.
//! 5. [`behavior`] binds executable behavior to concrete System blocks and
//!    assembles the runnable artifact, with external decision hooks over
//!    process pipes or HTTP.
//! 6. [`simkernel`] runs the bundled maritime scenario: discrete-time
//!    vehicle kinematics under drift, deadbeat correction, threshold
//!    classification under activation-coupled noise, and
//!    false-positive/negative scoring.
//! 7. [`cli`] exposes the whole pipeline as the `model-forge` binary
//!    (`validate`, `derive`, `run`, `export`).
//!
//! ## Runnable examples
//!
//! Each major capability has a runnable example:
//!
//! ```bash
//! cargo run --example build_reference        # construct and save a model in code
//! cargo run --example validate_model         # alignment checks + diagnostics
//! cargo run --example trace_justification    # walk trace chains to capabilities
//! cargo run --example derive_configuration   # alternative groups + derivation
//! cargo run --example run_scenario           # assemble and run the simulation
//! cargo run --example noise_policies         # compare the two noise-onset policies
//! cargo run --example threshold_sweep        # score across a threshold grid
//! cargo run --example external_classifier    # swap the classifier for an Exec hook
//! cargo run --example export_views           # render views as DOT graphs
//! ```
//!
//! The bundled models live in `fixtures/`; see the README for the file
//! formats and the CLI grammar.

pub mod behavior;
pub mod cli;
pub mod derivation;
pub mod metamodel;
pub mod simkernel;
pub mod store;
pub mod validation;

pub use behavior::{
    assemble_artifact, attach_behavior, run_artifact, BehaviorBinding, BehaviorError,
    BindingKind, ExecutableArtifact, Role,
};
pub use derivation::{
    alternative_groups, completeness, derive_specific, AlternativeGroup, CoverageReport,
    DeriveError, Selection,
};
pub use metamodel::{
    allowed_trace, check_relation, layer_of, Block, BlockKind, Id, Layer, Model, ModelKind,
    Relation, RelationKind, Scalar, View, Viewpoint,
};
pub use simkernel::{
    run_simulation, EventSink, NoiseOnset, ScoreReport, SimParams, SimResult, TargetSpec, Vec3,
};
pub use store::{load_model, parse_model, render_model, save_model, StoreError};
pub use validation::{
    clean_of_errors, trace_chain, validate_reference, validate_specific, Diagnostic, Severity,
};
