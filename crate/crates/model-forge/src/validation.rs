//! Alignment discipline checks: every block justified upward to business
//! demand, inheritance trees well-formed, and specific models conformant to
//! their reference model.
//!
//! All findings are [`Diagnostic`]s with stable codes so the CLI exit status
//! and tests can assert on them precisely. Reference-level rules:
//!
//! - R1 `E-TRACE-MISSING` — every block except Capabilities and
//!   OperationalPerformers carries at least one outgoing Trace edge.
//! - R2 `E-TRACE-KIND` — every Trace edge is a legal derivation step.
//! - R3 `E-CYCLE` — the Trace and Inheritance edge sets are acyclic.
//! - R4 `E-INHERIT-KIND` — inheritance joins System blocks only.
//! - R5 `E-ABSTRACT-BEHAVIOR` — abstract blocks carry no behavior binding.
//! - R6 `W-NO-BEHAVIOR` — non-abstract System blocks should carry one
//!   (warning here; an error at artifact assembly).
//! - R7 `W-UNPRESENTED` — every block appears in some view of its layer.
//!
//! Specific-level rules (checked against the parent reference):
//!
//! - S1 `E-DANGLING-REF` — every block links (param `ref`) to an existing
//!   reference block of identical kind.
//! - S2 `E-SELECTION-MISSING` / `E-SELECTION-AMBIGUOUS` — each usable
//!   alternative group is resolved by exactly one present leaf.
//! - S3 `E-ABSTRACT-IN-SPECIFIC` — no abstract blocks appear.
//! - S4 `E-PARAM-MISSING` — every param declared required by the reference
//!   block's schema has a value.

use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::derivation;
use crate::metamodel::{check_relation, Block, BlockKind, Id, Model, RelationKind, Scalar};

use thiserror::Error;

/// Severity of a finding. Warnings never fail a pipeline run on their own.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

/// One finding, rendered as `<severity> <code> <subject>: <message>`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub code: &'static str,
    pub message: String,
    pub subject: Id,
    pub severity: Severity,
}

impl Diagnostic {
    pub fn error(code: &'static str, subject: Id, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            subject,
            severity: Severity::Error,
        }
    }

    pub fn warning(code: &'static str, subject: Id, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            subject,
            severity: Severity::Warning,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {}: {}",
            self.severity, self.code, self.subject, self.message
        )
    }
}

impl PartialOrd for Diagnostic {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Diagnostic {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.code, &self.subject, &self.message, self.severity).cmp(&(
            other.code,
            &other.subject,
            &other.message,
            other.severity,
        ))
    }
}

/// True when no diagnostic in the list is an error.
pub fn clean_of_errors(diags: &[Diagnostic]) -> bool {
    !diags.iter().any(Diagnostic::is_error)
}

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error("E-UNKNOWN-BLOCK: no block `{0}` in the model")]
    UnknownBlock(Id),
}

impl ValidationError {
    pub fn code(&self) -> &'static str {
        match self {
            ValidationError::UnknownBlock(_) => "E-UNKNOWN-BLOCK",
        }
    }
}

/// Checks a reference model against rules R1-R7. The returned list is sorted
/// and order-independent: permuting the model's blocks or relations yields
/// the same multiset. An empty list means the model is clean.
pub fn validate_reference(model: &Model) -> Vec<Diagnostic> {
    let mut diags = Vec::new();

    // R2, R4 plus layer rules, edge by edge.
    for rel in &model.relations {
        diags.extend(check_relation(model, rel));
    }

    // R1: upward justification.
    let needs_trace = |kind: BlockKind| {
        !matches!(kind, BlockKind::Capability | BlockKind::OperationalPerformer)
    };
    for block in &model.blocks {
        if needs_trace(block.kind)
            && !model
                .relations_of(RelationKind::Trace)
                .any(|r| r.source == block.id)
        {
            diags.push(Diagnostic::error(
                "E-TRACE-MISSING",
                block.id.clone(),
                format!("{} `{}` has no outgoing trace edge", block.kind, block.id),
            ));
        }
    }

    // R3: acyclicity of the trace and inheritance subgraphs.
    for kind in [RelationKind::Trace, RelationKind::Inheritance] {
        diags.extend(cycle_diagnostics(model, kind));
    }

    // R5/R6: behavior bindings versus abstractness.
    for block in &model.blocks {
        let bound = model.binding_for(&block.id).is_some();
        if block.is_abstract && bound {
            diags.push(Diagnostic::error(
                "E-ABSTRACT-BEHAVIOR",
                block.id.clone(),
                format!("abstract block `{}` must not carry a behavior binding", block.id),
            ));
        }
        if block.kind == BlockKind::System && !block.is_abstract && !bound {
            diags.push(Diagnostic::warning(
                "W-NO-BEHAVIOR",
                block.id.clone(),
                format!("non-abstract System `{}` has no behavior binding yet", block.id),
            ));
        }
    }

    // R7: presentation coverage.
    for block in &model.blocks {
        let presented = model
            .views
            .iter()
            .any(|v| v.layer == block.layer() && v.members.contains(&block.id));
        if !presented {
            diags.push(Diagnostic::warning(
                "W-UNPRESENTED",
                block.id.clone(),
                format!("block `{}` appears in no view of layer {}", block.id, block.layer()),
            ));
        }
    }

    diags.sort();
    diags
}

/// Checks a specific model against its reference (rules S1-S4).
pub fn validate_specific(specific: &Model, reference: &Model) -> Vec<Diagnostic> {
    let mut diags = Vec::new();

    // S1: reference links resolve and preserve the block kind.
    for block in &specific.blocks {
        match block.params.get("ref").and_then(Scalar::as_text) {
            None => diags.push(Diagnostic::error(
                "E-DANGLING-REF",
                block.id.clone(),
                format!("block `{}` carries no `ref` link into the reference model", block.id),
            )),
            Some(ref_id) => match reference.block(&Id::new(ref_id)) {
                None => diags.push(Diagnostic::error(
                    "E-DANGLING-REF",
                    block.id.clone(),
                    format!("`ref` target `{ref_id}` does not exist in reference `{}`", reference.id),
                )),
                Some(target) if target.kind != block.kind => diags.push(Diagnostic::error(
                    "E-DANGLING-REF",
                    block.id.clone(),
                    format!(
                        "`ref` target `{ref_id}` is a {} but the block is a {}",
                        target.kind, block.kind
                    ),
                )),
                Some(_) => {}
            },
        }
    }

    // S2: every usable alternative group resolved by exactly one leaf.
    let referenced: HashMap<&str, usize> = {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for block in &specific.blocks {
            if let Some(ref_id) = block.params.get("ref").and_then(Scalar::as_text) {
                *counts.entry(ref_id).or_default() += 1;
            }
        }
        counts
    };
    for group in derivation::alternative_groups(reference) {
        if group.leaves.is_empty() {
            continue;
        }
        let present: Vec<&Id> = group
            .leaves
            .iter()
            .filter(|leaf| referenced.contains_key(leaf.as_str()))
            .collect();
        match present.len() {
            1 => {}
            0 => diags.push(Diagnostic::error(
                "E-SELECTION-MISSING",
                group.service_id.clone(),
                format!(
                    "no concrete alternative for service `{}` (group rooted at `{}`)",
                    group.service_id, group.root_id
                ),
            )),
            _ => diags.push(Diagnostic::error(
                "E-SELECTION-AMBIGUOUS",
                group.service_id.clone(),
                format!(
                    "service `{}` is resolved by more than one alternative: {}",
                    group.service_id,
                    present
                        .iter()
                        .map(|id| id.as_str())
                        .collect::<Vec<_>>()
                        .join(", ")
                ),
            )),
        }
    }

    // S3: no abstract blocks in a specific model.
    for block in &specific.blocks {
        if block.is_abstract {
            diags.push(Diagnostic::error(
                "E-ABSTRACT-IN-SPECIFIC",
                block.id.clone(),
                format!("abstract block `{}` may not appear in a specific model", block.id),
            ));
        }
    }

    // S4: required params (per the reference block's schema) have values.
    for block in &specific.blocks {
        let Some(ref_id) = block.params.get("ref").and_then(Scalar::as_text) else {
            continue; // already reported by S1
        };
        let ref_id = Id::new(ref_id);
        if reference.block(&ref_id).is_none() {
            continue; // already reported by S1
        }
        for (name, _decl) in derivation::effective_params(reference, &ref_id)
            .iter()
            .filter_map(|(k, v)| {
                k.strip_prefix(crate::metamodel::PARAM_PREFIX)
                    .map(|name| (name, v))
            })
        {
            if !block.params.contains_key(name) {
                diags.push(Diagnostic::error(
                    "E-PARAM-MISSING",
                    block.id.clone(),
                    format!("required param `{name}` of block `{}` has no value", block.id),
                ));
            }
        }
    }

    diags.sort();
    diags
}

/// A justification chain: the blocks from a starting block upward along
/// Trace edges. `complete` is true when the chain ends at a Capability.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceChain<'a> {
    pub blocks: Vec<&'a Block>,
    pub complete: bool,
}

/// Walks Trace edges upward from `block_id` to a Capability, taking the
/// lexicographically smallest target id whenever several traces leave one
/// block. If no Capability is reachable the chain stops at the last
/// reachable block and is flagged incomplete.
pub fn trace_chain<'a>(model: &'a Model, block_id: &Id) -> Result<TraceChain<'a>, ValidationError> {
    let start = model
        .block(block_id)
        .ok_or_else(|| ValidationError::UnknownBlock(block_id.clone()))?;

    let mut blocks = vec![start];
    let mut visited: HashSet<&Id> = HashSet::new();
    visited.insert(&start.id);
    let mut current = start;

    loop {
        if current.kind == BlockKind::Capability {
            return Ok(TraceChain { blocks, complete: true });
        }
        let next = model
            .relations_of(RelationKind::Trace)
            .filter(|r| r.source == current.id)
            .map(|r| &r.target)
            .min();
        match next.and_then(|id| model.block(id)) {
            Some(block) if visited.insert(&block.id) => {
                blocks.push(block);
                current = block;
            }
            // Dead end, dangling target, or a trace cycle: stop here.
            _ => return Ok(TraceChain { blocks, complete: false }),
        }
    }
}

/// One `E-CYCLE` diagnostic per strongly connected component of the given
/// edge-kind subgraph, with the smallest block id as subject.
fn cycle_diagnostics(model: &Model, kind: RelationKind) -> Vec<Diagnostic> {
    let mut index_of: HashMap<&Id, usize> = HashMap::new();
    for block in &model.blocks {
        let next = index_of.len();
        index_of.entry(&block.id).or_insert(next);
    }
    let ids: Vec<&Id> = {
        let mut v: Vec<(&Id, usize)> = index_of.iter().map(|(id, i)| (*id, *i)).collect();
        v.sort_by_key(|(_, i)| *i);
        v.into_iter().map(|(id, _)| id).collect()
    };
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); ids.len()];
    for rel in model.relations_of(kind) {
        if let (Some(&s), Some(&t)) = (index_of.get(&rel.source), index_of.get(&rel.target)) {
            adjacency[s].push(t);
        }
    }

    let mut diags = Vec::new();
    for scc in tarjan_sccs(&adjacency) {
        if scc.len() < 2 {
            continue; // self-loops are impossible (source != target at load)
        }
        let mut members: Vec<&Id> = scc.iter().map(|&i| ids[i]).collect();
        members.sort();
        diags.push(Diagnostic::error(
            "E-CYCLE",
            (*members[0]).clone(),
            format!(
                "{} edges form a cycle through: {}",
                kind,
                members
                    .iter()
                    .map(|id| id.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        ));
    }
    diags
}

/// Iterative Tarjan strongly-connected-components over an adjacency list.
fn tarjan_sccs(adjacency: &[Vec<usize>]) -> Vec<Vec<usize>> {
    #[derive(Clone)]
    struct NodeState {
        index: Option<usize>,
        lowlink: usize,
        on_stack: bool,
    }

    let n = adjacency.len();
    let mut state = vec![
        NodeState { index: None, lowlink: 0, on_stack: false };
        n
    ];
    let mut next_index = 0;
    let mut stack: Vec<usize> = Vec::new();
    let mut sccs: Vec<Vec<usize>> = Vec::new();

    for root in 0..n {
        if state[root].index.is_some() {
            continue;
        }
        // Explicit DFS stack of (node, next-neighbor position).
        let mut work: Vec<(usize, usize)> = vec![(root, 0)];
        while let Some(&mut (v, ref mut ni)) = work.last_mut() {
            if *ni == 0 {
                state[v].index = Some(next_index);
                state[v].lowlink = next_index;
                next_index += 1;
                stack.push(v);
                state[v].on_stack = true;
            }
            if let Some(&w) = adjacency[v].get(*ni) {
                *ni += 1;
                if state[w].index.is_none() {
                    work.push((w, 0));
                } else if state[w].on_stack {
                    state[v].lowlink = state[v].lowlink.min(state[w].index.unwrap());
                }
            } else {
                work.pop();
                if let Some(&(parent, _)) = work.last() {
                    let child_low = state[v].lowlink;
                    state[parent].lowlink = state[parent].lowlink.min(child_low);
                }
                if state[v].lowlink == state[v].index.unwrap() {
                    let mut scc = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        state[w].on_stack = false;
                        scc.push(w);
                        if w == v {
                            break;
                        }
                    }
                    sccs.push(scc);
                }
            }
        }
    }
    sccs
}
