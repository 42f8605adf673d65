//! Binds executable behavior to concrete System blocks and assembles the
//! runnable artifact.
//!
//! An artifact has one runtime (the built-in kernel set). Each member block
//! is bound either to a registered builtin kernel or, for the classifier
//! role only, to an external decision hook: a spawned process speaking
//! line-delimited JSON, or an HTTP endpoint receiving the same body per
//! POST. Hook failures abort the run with the failing step index; nothing
//! is ever defaulted on a failed classification.
//!
//! Exec hook contract: the command is spawned once per run. Per query one
//! line of JSON is written to its stdin:
//! `{"t": int, "j": int, "s": number, "N": number, "h": number}`
//! and one line is read from its stdout: `{"decision": "wanted"|"other"}`.
//! Nonzero exit or a malformed line is a hook failure.
//!
//! Http hook contract: the same request body is POSTed per query to the
//! bound URL; a 200 response with the same response body is expected.
//! Requests time out after 5 seconds.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::derivation::effective_params;
use crate::metamodel::{string_enum, Block, BlockKind, Id, Model, ParamDecl, ParamType, Scalar, PARAM_PREFIX};
use crate::simkernel::{
    run_with_classifier, ClassifierFault, ClassifyQuery, Decision, EventSink, NoiseOnset,
    SimError, SimParams, SimResult, TargetClassifier, TargetSpec, ThresholdClassifier, Vec3,
};
use crate::validation::Diagnostic;

string_enum! {
    /// How a binding's target is interpreted.
    BindingKind {
        Builtin => "Builtin",
        Exec => "Exec",
        Http => "Http",
    }
}

string_enum! {
    /// The function a bound block performs in a simulation artifact.
    Role {
        Plant => "Plant",
        Controller => "Controller",
        Classifier => "Classifier",
        Target => "Target",
    }
}

/// Executable behavior attached to one non-abstract System block. The
/// target is a kernel name (Builtin), a command line (Exec), or a URL
/// (Http).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BehaviorBinding {
    pub block_id: Id,
    pub kind: BindingKind,
    pub target: String,
    pub role: Role,
}

/// The built-in kernels this runtime provides, with the role each one
/// implements. Builtin binding targets must name one of these.
pub const BUILTIN_KERNELS: &[(&str, Role)] = &[
    ("plant.auv", Role::Plant),
    ("mcu.deadbeat", Role::Controller),
    ("tcu.threshold", Role::Classifier),
    ("env.targets", Role::Target),
];

fn builtin_role(name: &str) -> Option<Role> {
    BUILTIN_KERNELS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, role)| *role)
}

#[derive(Debug, Error)]
pub enum BehaviorError {
    #[error("E-UNKNOWN-BLOCK: no block `{0}` in the model")]
    UnknownBlock(Id),
    #[error("E-NOT-SYSTEM: block `{block}` is a {kind}, only System blocks take behavior")]
    NotSystem { block: Id, kind: BlockKind },
    #[error("E-ABSTRACT-BEHAVIOR: abstract block `{0}` cannot take behavior")]
    AbstractBehavior(Id),
    #[error("E-LEAF-NO-BEHAVIOR: block `{0}` has no behavior binding")]
    LeafNoBehavior(Id),
    #[error("E-ROLE-CARDINALITY: {0}")]
    RoleCardinality(String),
    #[error("E-RUNTIME-MISMATCH: block `{block}`: {reason}")]
    RuntimeMismatch { block: Id, reason: String },
    #[error("E-PARAM-CONFLICT: param `{name}` is declared by both `{first}` and `{second}`")]
    ParamConflict { name: String, first: Id, second: Id },
    #[error("E-PARAM-MISSING: no value for param `{0}`")]
    ParamMissing(String),
    #[error("E-PARAM-TYPE: param `{name}` expects {expected}, got {got}")]
    ParamType {
        name: String,
        expected: ParamType,
        got: String,
    },
    #[error("E-PARAM-TYPE: {0}")]
    ParamInvalid(String),
    #[error("E-PARAM-UNKNOWN: `{0}` is not in the artifact's param schema")]
    ParamUnknown(String),
    #[error("E-HOOK-FAILURE: step t={step}: {reason}")]
    HookFailure { step: u32, reason: String },
}

impl BehaviorError {
    pub fn code(&self) -> &'static str {
        match self {
            BehaviorError::UnknownBlock(_) => "E-UNKNOWN-BLOCK",
            BehaviorError::NotSystem { .. } => "E-NOT-SYSTEM",
            BehaviorError::AbstractBehavior(_) => "E-ABSTRACT-BEHAVIOR",
            BehaviorError::LeafNoBehavior(_) => "E-LEAF-NO-BEHAVIOR",
            BehaviorError::RoleCardinality(_) => "E-ROLE-CARDINALITY",
            BehaviorError::RuntimeMismatch { .. } => "E-RUNTIME-MISMATCH",
            BehaviorError::ParamConflict { .. } => "E-PARAM-CONFLICT",
            BehaviorError::ParamMissing(_) => "E-PARAM-MISSING",
            BehaviorError::ParamType { .. } | BehaviorError::ParamInvalid(_) => "E-PARAM-TYPE",
            BehaviorError::ParamUnknown(_) => "E-PARAM-UNKNOWN",
            BehaviorError::HookFailure { .. } => "E-HOOK-FAILURE",
        }
    }
}

/// Records a binding on a model, replacing any previous binding for the
/// same block (reported as a `W-REBIND` warning).
pub fn attach_behavior(
    model: &Model,
    binding: BehaviorBinding,
) -> Result<(Model, Vec<Diagnostic>), BehaviorError> {
    let block = model
        .block(&binding.block_id)
        .ok_or_else(|| BehaviorError::UnknownBlock(binding.block_id.clone()))?;
    if block.kind != BlockKind::System {
        return Err(BehaviorError::NotSystem {
            block: block.id.clone(),
            kind: block.kind,
        });
    }
    if block.is_abstract {
        return Err(BehaviorError::AbstractBehavior(block.id.clone()));
    }

    let mut updated = model.clone();
    let mut warnings = Vec::new();
    if let Some(pos) = updated
        .behaviors
        .iter()
        .position(|b| b.block_id == binding.block_id)
    {
        warnings.push(Diagnostic::warning(
            "W-REBIND",
            binding.block_id.clone(),
            format!("replacing the existing binding of `{}`", binding.block_id),
        ));
        updated.behaviors[pos] = binding;
    } else {
        updated.behaviors.push(binding);
    }
    Ok((updated, warnings))
}

/// The single runtime this artifact kind supports.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Runtime {
    Builtin,
}

impl fmt::Display for Runtime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Builtin")
    }
}

/// One bound block inside an artifact.
#[derive(Clone, Debug, PartialEq)]
pub struct ArtifactMember {
    pub block_id: Id,
    pub binding: BehaviorBinding,
}

/// One entry of the artifact's parameter schema. `block` records which
/// member declared it; names are global across the artifact.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamEntry {
    pub name: String,
    pub block: Id,
    pub ty: ParamType,
    pub tunable: bool,
    pub default: Scalar,
}

/// The runnable description of a specific model: every bound block exactly
/// once, plus the synthesized parameter schema.
#[derive(Clone, Debug, PartialEq)]
pub struct ExecutableArtifact {
    pub id: Id,
    pub model_id: Id,
    pub runtime: Runtime,
    pub members: Vec<ArtifactMember>,
    pub param_schema: Vec<ParamEntry>,
}

impl ExecutableArtifact {
    pub fn member_with_role(&self, role: Role) -> Option<&ArtifactMember> {
        self.members.iter().find(|m| m.binding.role == role)
    }

    pub fn schema_entry(&self, name: &str) -> Option<&ParamEntry> {
        self.param_schema.iter().find(|e| e.name == name)
    }

    /// Overlays overrides on the schema defaults and type-checks the
    /// result. Unknown names and type mismatches are rejected.
    pub fn resolve_params(
        &self,
        overrides: &BTreeMap<String, Scalar>,
    ) -> Result<BTreeMap<String, Scalar>, BehaviorError> {
        for name in overrides.keys() {
            if self.schema_entry(name).is_none() {
                return Err(BehaviorError::ParamUnknown(name.clone()));
            }
        }
        let mut resolved = BTreeMap::new();
        for entry in &self.param_schema {
            let value = overrides.get(&entry.name).unwrap_or(&entry.default);
            if !entry.ty.accepts(value) {
                return Err(BehaviorError::ParamType {
                    name: entry.name.clone(),
                    expected: entry.ty,
                    got: value.type_name().to_owned(),
                });
            }
            resolved.insert(entry.name.clone(), value.clone());
        }
        Ok(resolved)
    }
}

/// Assembles the executable artifact for a specific model.
///
/// Every block of the specific model must carry a binding executable under
/// the builtin runtime; Exec and Http bindings are admitted only for the
/// classifier role, where they act as decision hooks behind the runtime's
/// message contract. Exactly one plant, one controller, and one classifier
/// plus at least one target are required.
///
/// Expects a specific model that passes `validate_specific` against the
/// given reference; the reference supplies the param schema declarations.
pub fn assemble_artifact(
    specific: &Model,
    reference: &Model,
) -> Result<ExecutableArtifact, BehaviorError> {
    let mut members = Vec::new();
    for block in &specific.blocks {
        let binding = specific
            .binding_for(&block.id)
            .ok_or_else(|| BehaviorError::LeafNoBehavior(block.id.clone()))?;
        check_runtime(block, binding)?;
        members.push(ArtifactMember {
            block_id: block.id.clone(),
            binding: binding.clone(),
        });
    }
    members.sort_by(|a, b| a.block_id.cmp(&b.block_id));

    let count = |role: Role| members.iter().filter(|m| m.binding.role == role).count();
    for role in [Role::Plant, Role::Controller, Role::Classifier] {
        let n = count(role);
        if n != 1 {
            return Err(BehaviorError::RoleCardinality(format!(
                "expected exactly one {role} member, found {n}"
            )));
        }
    }
    if count(Role::Target) == 0 {
        return Err(BehaviorError::RoleCardinality(
            "expected at least one Target member, found 0".into(),
        ));
    }

    let mut param_schema: Vec<ParamEntry> = Vec::new();
    for member in &members {
        let block = specific
            .block(&member.block_id)
            .expect("members come from the specific model");
        // The schema declarations live on the referenced block (with
        // inheritance); a block without a resolvable reference falls back
        // to its own declarations.
        let declarations = match block.params.get("ref").and_then(Scalar::as_text) {
            Some(ref_id) if reference.block(&Id::new(ref_id)).is_some() => {
                effective_params(reference, &Id::new(ref_id))
            }
            _ => block.params.clone(),
        };
        for (key, descriptor) in &declarations {
            let Some(name) = key.strip_prefix(PARAM_PREFIX) else {
                continue;
            };
            let decl = match descriptor {
                Scalar::Text(text) => ParamDecl::parse(text).map_err(BehaviorError::ParamInvalid)?,
                other => {
                    return Err(BehaviorError::ParamInvalid(format!(
                        "descriptor `{key}` of `{}` must be text, got {}",
                        block.id,
                        other.type_name()
                    )))
                }
            };
            if let Some(existing) = param_schema.iter().find(|e| e.name == name) {
                return Err(BehaviorError::ParamConflict {
                    name: name.to_owned(),
                    first: existing.block.clone(),
                    second: block.id.clone(),
                });
            }
            let default = block
                .params
                .get(name)
                .cloned()
                .ok_or_else(|| BehaviorError::ParamMissing(format!("{}.{name}", block.id)))?;
            param_schema.push(ParamEntry {
                name: name.to_owned(),
                block: block.id.clone(),
                ty: decl.ty,
                tunable: decl.tunable,
                default,
            });
        }
    }

    Ok(ExecutableArtifact {
        id: Id::new(format!("{}.artifact", specific.id)),
        model_id: specific.id.clone(),
        runtime: Runtime::Builtin,
        members,
        param_schema,
    })
}

fn check_runtime(block: &Block, binding: &BehaviorBinding) -> Result<(), BehaviorError> {
    match binding.kind {
        BindingKind::Builtin => match builtin_role(&binding.target) {
            None => Err(BehaviorError::RuntimeMismatch {
                block: block.id.clone(),
                reason: format!("`{}` is not a registered builtin kernel", binding.target),
            }),
            Some(role) if role != binding.role => Err(BehaviorError::RuntimeMismatch {
                block: block.id.clone(),
                reason: format!(
                    "kernel `{}` implements the {role} role, binding declares {}",
                    binding.target, binding.role
                ),
            }),
            Some(_) => Ok(()),
        },
        BindingKind::Exec | BindingKind::Http => {
            if binding.role == Role::Classifier {
                Ok(())
            } else {
                Err(BehaviorError::RuntimeMismatch {
                    block: block.id.clone(),
                    reason: format!(
                        "{} bindings are hook-capable for the Classifier role only, not {}",
                        binding.kind, binding.role
                    ),
                })
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Parameter resolution into kernel configuration
// ---------------------------------------------------------------------------

struct ParamReader<'a> {
    values: &'a BTreeMap<String, Scalar>,
}

impl<'a> ParamReader<'a> {
    fn get(&self, name: &str) -> Result<&'a Scalar, BehaviorError> {
        self.values
            .get(name)
            .ok_or_else(|| BehaviorError::ParamMissing(name.to_owned()))
    }

    fn time(&self, name: &str) -> Result<u32, BehaviorError> {
        let value = self.get(name)?;
        let n = value.as_integer().ok_or_else(|| BehaviorError::ParamType {
            name: name.to_owned(),
            expected: ParamType::Int,
            got: value.type_name().to_owned(),
        })?;
        u32::try_from(n).map_err(|_| {
            BehaviorError::ParamInvalid(format!("param `{name}` must be a nonnegative time, got {n}"))
        })
    }

    fn real(&self, name: &str) -> Result<f64, BehaviorError> {
        let value = self.get(name)?;
        value.as_real().ok_or_else(|| BehaviorError::ParamType {
            name: name.to_owned(),
            expected: ParamType::Real,
            got: value.type_name().to_owned(),
        })
    }

    fn vec3(&self, name: &str) -> Result<Vec3, BehaviorError> {
        let value = self.get(name)?;
        value
            .as_vec3()
            .map(Vec3::from)
            .ok_or_else(|| BehaviorError::ParamType {
                name: name.to_owned(),
                expected: ParamType::Vec3,
                got: value.type_name().to_owned(),
            })
    }

    fn text(&self, name: &str) -> Result<&'a str, BehaviorError> {
        let value = self.get(name)?;
        value.as_text().ok_or_else(|| BehaviorError::ParamType {
            name: name.to_owned(),
            expected: ParamType::Text,
            got: value.type_name().to_owned(),
        })
    }
}

/// Builds the kernel configuration from resolved artifact params. The
/// builtin kernels consume fixed names: the plant reads `t0`, `t_n`, `dt`,
/// `p_desired0`, `v_desired`, `v_passive`; the controller reads `t_i`; the
/// classifier reads `h`, `N0`, `dN`, `noise_onset`; targets contribute
/// `s_<j>`/`truth_<j>` pairs with contiguous indices.
pub fn build_sim_params(
    resolved: &BTreeMap<String, Scalar>,
) -> Result<SimParams, BehaviorError> {
    let reader = ParamReader { values: resolved };

    let mut targets = Vec::new();
    for key in resolved.keys() {
        let Some(index) = key.strip_prefix("s_").and_then(|s| s.parse::<u32>().ok()) else {
            continue;
        };
        let strength = reader.real(key)?;
        let wanted = match reader.text(&format!("truth_{index}"))? {
            "wanted" => true,
            "other" => false,
            other => {
                return Err(BehaviorError::ParamInvalid(format!(
                    "truth_{index} must be `wanted` or `other`, got `{other}`"
                )))
            }
        };
        targets.push(TargetSpec { index, strength, wanted });
    }

    let noise_onset = match reader.text("noise_onset")? {
        "after" => NoiseOnset::AfterActivation,
        "at" => NoiseOnset::AtActivation,
        other => {
            return Err(BehaviorError::ParamInvalid(format!(
                "noise_onset must be `after` or `at`, got `{other}`"
            )))
        }
    };

    let params = SimParams {
        start_time: reader.time("t0")?,
        activation_time: reader.time("t_i")?,
        end_time: reader.time("t_n")?,
        time_step: reader.real("dt")?,
        desired_start: reader.vec3("p_desired0")?,
        desired_velocity: reader.vec3("v_desired")?,
        passive_velocity: reader.vec3("v_passive")?,
        threshold: reader.real("h")?,
        base_noise: reader.real("N0")?,
        noise_increase: reader.real("dN")?,
        targets,
        noise_onset,
    };
    params.validate().map_err(|e| match e {
        SimError::Params(msg) => BehaviorError::ParamInvalid(msg),
        SimError::Classifier { time, reason } => BehaviorError::HookFailure { step: time, reason },
    })?;
    Ok(params)
}

/// Runs an assembled artifact: resolves params against the schema, builds
/// the kernel configuration, dispatches the classifier binding (builtin
/// rule, spawned process, or HTTP endpoint), and forwards per-step records
/// and the final report to the sink in order.
pub fn run_artifact(
    artifact: &ExecutableArtifact,
    overrides: &BTreeMap<String, Scalar>,
    sink: &mut dyn EventSink,
) -> Result<SimResult, BehaviorError> {
    let resolved = artifact.resolve_params(overrides)?;
    let params = build_sim_params(&resolved)?;

    let classifier = artifact
        .member_with_role(Role::Classifier)
        .expect("assembly guarantees one classifier");

    let map_err = |e: SimError| match e {
        SimError::Params(msg) => BehaviorError::ParamInvalid(msg),
        SimError::Classifier { time, reason } => BehaviorError::HookFailure { step: time, reason },
    };

    match classifier.binding.kind {
        BindingKind::Builtin => {
            run_with_classifier(&params, &mut ThresholdClassifier, sink).map_err(map_err)
        }
        BindingKind::Exec => {
            let mut hook = ExecHook::spawn(&classifier.binding.target).map_err(|reason| {
                BehaviorError::HookFailure { step: params.start_time, reason }
            })?;
            let result = run_with_classifier(&params, &mut hook, sink).map_err(map_err)?;
            hook.finish().map_err(|reason| BehaviorError::HookFailure {
                step: params.end_time,
                reason,
            })?;
            Ok(result)
        }
        BindingKind::Http => {
            let mut hook = HttpHook::new(&classifier.binding.target);
            run_with_classifier(&params, &mut hook, sink).map_err(map_err)
        }
    }
}

// ---------------------------------------------------------------------------
// Decision hooks
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct HookRequest {
    t: u32,
    j: u32,
    s: f64,
    #[serde(rename = "N")]
    noise: f64,
    h: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HookResponse {
    decision: String,
}

fn parse_decision(line: &str) -> Result<Decision, String> {
    let response: HookResponse = serde_json::from_str(line)
        .map_err(|e| format!("malformed hook reply `{}`: {e}", line.trim_end()))?;
    match response.decision.as_str() {
        "wanted" => Ok(Decision::Wanted),
        "other" => Ok(Decision::Other),
        other => Err(format!("unknown decision `{other}`")),
    }
}

fn request_body(query: &ClassifyQuery) -> String {
    serde_json::to_string(&HookRequest {
        t: query.time,
        j: query.target,
        s: query.strength,
        noise: query.noise,
        h: query.threshold,
    })
    .expect("hook requests always serialize")
}

/// Classifier backed by a child process speaking line-delimited JSON.
pub struct ExecHook {
    child: Child,
    stdin: Option<ChildStdin>,
    stdout: BufReader<ChildStdout>,
}

impl ExecHook {
    /// Spawns the configured command line (whitespace-separated argv, no
    /// shell quoting) with piped stdin/stdout.
    pub fn spawn(command_line: &str) -> Result<Self, String> {
        let mut words = command_line.split_whitespace();
        let program = words
            .next()
            .ok_or_else(|| "empty hook command line".to_owned())?;
        let mut child = Command::new(program)
            .args(words)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| format!("failed to spawn `{program}`: {e}"))?;
        let stdin = child.stdin.take().expect("stdin was piped");
        let stdout = BufReader::new(child.stdout.take().expect("stdout was piped"));
        Ok(Self {
            child,
            stdin: Some(stdin),
            stdout,
        })
    }

    /// Closes the hook's stdin and reaps it, failing on a nonzero exit.
    pub fn finish(&mut self) -> Result<(), String> {
        drop(self.stdin.take());
        let status = self
            .child
            .wait()
            .map_err(|e| format!("failed to wait for hook: {e}"))?;
        if status.success() {
            Ok(())
        } else {
            Err(format!("hook exited with {status}"))
        }
    }
}

impl TargetClassifier for ExecHook {
    fn decide(&mut self, query: &ClassifyQuery) -> Result<Decision, ClassifierFault> {
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| ClassifierFault("hook stdin already closed".into()))?;
        writeln!(stdin, "{}", request_body(query))
            .and_then(|()| stdin.flush())
            .map_err(|e| ClassifierFault(format!("failed to write query: {e}")))?;
        let mut line = String::new();
        let n = self
            .stdout
            .read_line(&mut line)
            .map_err(|e| ClassifierFault(format!("failed to read reply: {e}")))?;
        if n == 0 {
            return Err(ClassifierFault("hook closed its stdout".into()));
        }
        parse_decision(&line).map_err(ClassifierFault)
    }
}

impl Drop for ExecHook {
    fn drop(&mut self) {
        drop(self.stdin.take());
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Classifier backed by an HTTP endpoint (plain http, 5 s timeout).
pub struct HttpHook {
    url: String,
    agent: ureq::Agent,
}

impl HttpHook {
    pub fn new(url: &str) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(5)))
            .http_status_as_error(false)
            .build();
        Self {
            url: url.to_owned(),
            agent: config.into(),
        }
    }
}

impl TargetClassifier for HttpHook {
    fn decide(&mut self, query: &ClassifyQuery) -> Result<Decision, ClassifierFault> {
        let mut response = self
            .agent
            .post(&self.url)
            .content_type("application/json")
            .send(request_body(query))
            .map_err(|e| ClassifierFault(format!("request to {} failed: {e}", self.url)))?;
        if response.status() != 200 {
            return Err(ClassifierFault(format!(
                "endpoint {} answered status {}",
                self.url,
                response.status()
            )));
        }
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(|e| ClassifierFault(format!("failed to read reply body: {e}")))?;
        parse_decision(&body).map_err(ClassifierFault)
    }
}
