//! Computes alternative groups from a reference model's inheritance trees
//! and instantiates specific models from a selection map.
//!
//! An alternative group is one inheritance tree of System blocks serving one
//! service; deriving a specific model means picking exactly one concrete
//! leaf per group, resolving its inherited parameters, and copying the
//! result together with its wiring and behavior binding.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metamodel::{
    Block, BlockKind, Id, Layer, Model, ModelKind, RelationKind, Scalar, View, Viewpoint,
    PARAM_PREFIX,
};

/// One inheritance tree of System blocks serving one service. `leaves` are
/// the non-abstract members (including the root when it is concrete),
/// sorted by id; a group without leaves offers no usable alternative.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlternativeGroup {
    pub service_id: Id,
    pub root_id: Id,
    pub leaves: Vec<Id>,
}

/// A derivation configuration: the chosen System per service, plus value
/// overrides keyed `"block.param"`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Selection {
    pub select: BTreeMap<Id, Id>,
    #[serde(default)]
    pub params: BTreeMap<String, Scalar>,
}

#[derive(Debug, Error)]
pub enum DeriveError {
    #[error("E-SELECTION-MISSING: service `{0}` offers several alternatives and none was selected")]
    SelectionMissing(Id),
    #[error("E-SELECTION-ABSTRACT: `{chosen}` is abstract and cannot realize service `{service}`")]
    SelectionAbstract { service: Id, chosen: Id },
    #[error("E-SELECTION-FOREIGN: `{chosen}` is not an alternative for service `{service}`")]
    SelectionForeign { service: Id, chosen: Id },
    #[error("E-SELECTION-FOREIGN: selection names unknown service `{0}`")]
    UnknownService(Id),
    #[error("E-PARAM-MISSING: block `{block}` has no value for required param `{name}`")]
    ParamMissing { block: Id, name: String },
    #[error("E-PARAM-FOREIGN: override `{0}` does not address a declared param of a selected block")]
    ParamForeign(String),
}

impl DeriveError {
    pub fn code(&self) -> &'static str {
        match self {
            DeriveError::SelectionMissing(_) => "E-SELECTION-MISSING",
            DeriveError::SelectionAbstract { .. } => "E-SELECTION-ABSTRACT",
            DeriveError::SelectionForeign { .. } | DeriveError::UnknownService(_) => {
                "E-SELECTION-FOREIGN"
            }
            DeriveError::ParamMissing { .. } => "E-PARAM-MISSING",
            DeriveError::ParamForeign(_) => "E-PARAM-FOREIGN",
        }
    }
}

/// Roots of inheritance trees: System blocks that inherit from nothing.
fn inheritance_roots(model: &Model) -> Vec<&Block> {
    model
        .blocks
        .iter()
        .filter(|b| b.kind == BlockKind::System)
        .filter(|b| {
            !model
                .relations_of(RelationKind::Inheritance)
                .any(|r| r.source == b.id)
        })
        .collect()
}

/// All members of the inheritance tree rooted at `root`, the root included.
fn tree_members(model: &Model, root: &Id) -> Vec<Id> {
    let mut members = vec![root.clone()];
    let mut seen: HashSet<Id> = members.iter().cloned().collect();
    let mut queue = vec![root.clone()];
    while let Some(parent) = queue.pop() {
        for rel in model.relations_of(RelationKind::Inheritance) {
            if rel.target == parent && seen.insert(rel.source.clone()) {
                members.push(rel.source.clone());
                queue.push(rel.source.clone());
            }
        }
    }
    members.sort();
    members
}

/// One group per (inheritance root, served service) pair, sorted by
/// (service id, root id). Leaves are computed by transitive inheritance
/// closure; abstract-only trees yield a group with no leaves.
pub fn alternative_groups(reference: &Model) -> Vec<AlternativeGroup> {
    let mut groups = Vec::new();
    for root in inheritance_roots(reference) {
        let services: Vec<&Id> = reference
            .relations_of(RelationKind::Trace)
            .filter(|r| r.source == root.id)
            .filter(|r| {
                reference.block(&r.target).is_some_and(|b| {
                    matches!(
                        b.kind,
                        BlockKind::ServiceSpecification | BlockKind::ServiceFunction
                    )
                })
            })
            .map(|r| &r.target)
            .collect();
        if services.is_empty() {
            continue;
        }
        let leaves: Vec<Id> = tree_members(reference, &root.id)
            .into_iter()
            .filter(|id| reference.block(id).is_some_and(|b| !b.is_abstract))
            .collect();
        for service in services {
            groups.push(AlternativeGroup {
                service_id: service.clone(),
                root_id: root.id.clone(),
                leaves: leaves.clone(),
            });
        }
    }
    groups.sort_by(|a, b| (&a.service_id, &a.root_id).cmp(&(&b.service_id, &b.root_id)));
    groups
}

/// A block's parameters with inheritance applied: parent defaults flow down
/// the inheritance chain and are shadowed by child values (leaf wins). When
/// a block inherits from several parents the chain follows the smallest
/// parent id.
pub fn effective_params(model: &Model, block_id: &Id) -> BTreeMap<String, Scalar> {
    let mut chain = Vec::new();
    let mut seen: HashSet<Id> = HashSet::new();
    let mut current = block_id.clone();
    while seen.insert(current.clone()) {
        chain.push(current.clone());
        let parent = model
            .relations_of(RelationKind::Inheritance)
            .filter(|r| r.source == current)
            .map(|r| &r.target)
            .min();
        match parent {
            Some(p) => current = p.clone(),
            None => break,
        }
    }

    let mut params = BTreeMap::new();
    for id in chain.iter().rev() {
        if let Some(block) = model.block(id) {
            params.extend(block.params.iter().map(|(k, v)| (k.clone(), v.clone())));
        }
    }
    params
}

/// Instantiates a specific model from a reference and a selection.
///
/// Every group with two or more leaves must be covered by the selection;
/// singleton groups select themselves. Each chosen leaf is copied with its
/// effective params (minus the schema declarations, plus a `ref` link back
/// to the reference block), its behavior binding, and the connectivity
/// among chosen blocks. The result always passes `validate_specific`.
pub fn derive_specific(
    reference: &Model,
    selection: &Selection,
    model_id: impl Into<Id>,
) -> Result<Model, DeriveError> {
    let groups = alternative_groups(reference);

    let known_services: HashSet<&Id> = groups.iter().map(|g| &g.service_id).collect();
    for service in selection.select.keys() {
        if !known_services.contains(service) {
            return Err(DeriveError::UnknownService(service.clone()));
        }
    }

    let mut chosen: Vec<Id> = Vec::new();
    for group in groups.iter().filter(|g| !g.leaves.is_empty()) {
        let leaf = match selection.select.get(&group.service_id) {
            Some(id) if group.leaves.contains(id) => id.clone(),
            Some(id) if tree_members(reference, &group.root_id).contains(id) => {
                return Err(DeriveError::SelectionAbstract {
                    service: group.service_id.clone(),
                    chosen: id.clone(),
                })
            }
            Some(id) => {
                return Err(DeriveError::SelectionForeign {
                    service: group.service_id.clone(),
                    chosen: id.clone(),
                })
            }
            None if group.leaves.len() == 1 => group.leaves[0].clone(),
            None => return Err(DeriveError::SelectionMissing(group.service_id.clone())),
        };
        if !chosen.contains(&leaf) {
            chosen.push(leaf);
        }
    }
    chosen.sort();

    // Overrides must address a selected block and a declared param.
    let mut overrides: BTreeMap<(Id, String), Scalar> = BTreeMap::new();
    for (key, value) in &selection.params {
        let (block, name) = key
            .split_once('.')
            .ok_or_else(|| DeriveError::ParamForeign(key.clone()))?;
        let block = Id::new(block);
        if !chosen.contains(&block) {
            return Err(DeriveError::ParamForeign(key.clone()));
        }
        overrides.insert((block, name.to_owned()), value.clone());
    }

    let mut specific = Model::new(model_id, ModelKind::Specific);
    specific.parent_ref = Some(reference.id.clone());

    for leaf_id in &chosen {
        let source = reference
            .block(leaf_id)
            .expect("chosen leaves come from the reference");
        let inherited = effective_params(reference, leaf_id);

        let mut params: BTreeMap<String, Scalar> = inherited
            .iter()
            .filter(|(k, _)| !k.starts_with(PARAM_PREFIX))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        for ((block, name), value) in overrides.range((leaf_id.clone(), String::new())..) {
            if block != leaf_id {
                break;
            }
            if !inherited.contains_key(&format!("{PARAM_PREFIX}{name}")) {
                return Err(DeriveError::ParamForeign(format!("{block}.{name}")));
            }
            params.insert(name.clone(), value.clone());
        }
        for decl_name in inherited
            .keys()
            .filter_map(|k| k.strip_prefix(PARAM_PREFIX))
        {
            if !params.contains_key(decl_name) {
                return Err(DeriveError::ParamMissing {
                    block: leaf_id.clone(),
                    name: decl_name.to_owned(),
                });
            }
        }
        params.insert("ref".to_owned(), Scalar::Text(leaf_id.as_str().to_owned()));

        specific.blocks.push(Block {
            id: leaf_id.clone(),
            name: source.name.clone(),
            kind: BlockKind::System,
            is_abstract: false,
            params,
            doc: source.doc.clone(),
        });
    }

    let chosen_set: HashSet<&Id> = chosen.iter().collect();
    specific.relations.extend(
        reference
            .relations_of(RelationKind::Connectivity)
            .filter(|r| chosen_set.contains(&r.source) && chosen_set.contains(&r.target))
            .cloned(),
    );
    specific.behaviors.extend(
        chosen
            .iter()
            .filter_map(|id| reference.binding_for(id))
            .cloned(),
    );
    specific.views.push(View {
        name: "configuration".to_owned(),
        viewpoint: Viewpoint::Connectivity,
        layer: Layer::Resources,
        members: chosen.clone(),
    });

    specific.canonicalize();
    Ok(specific)
}

/// How one service of the reference is realized by a specific model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Coverage {
    /// Exactly one concrete System realizes the service; `system` is None
    /// for a specification that is covered through its service functions.
    Resolved { system: Option<Id> },
    Missing,
    Ambiguous { candidates: Vec<Id> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverageEntry {
    pub service_id: Id,
    pub kind: BlockKind,
    pub coverage: Coverage,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverageReport {
    pub entries: Vec<CoverageEntry>,
    pub complete: bool,
}

/// Lists every service of the reference with its resolution status in the
/// specific model. A service with direct System alternatives resolves via
/// exactly one present leaf; a specification without direct alternatives
/// resolves when all of its refining service functions do.
pub fn completeness(specific: &Model, reference: &Model) -> CoverageReport {
    let groups = alternative_groups(reference);
    let present: HashSet<&str> = specific
        .blocks
        .iter()
        .filter_map(|b| b.params.get("ref").and_then(Scalar::as_text))
        .collect();

    let direct = |service: &Id| -> Option<Coverage> {
        let mut leaves: Vec<&Id> = Vec::new();
        let mut has_group = false;
        for group in groups.iter().filter(|g| &g.service_id == service) {
            has_group = true;
            leaves.extend(group.leaves.iter());
        }
        if !has_group {
            return None;
        }
        let found: Vec<Id> = leaves
            .into_iter()
            .filter(|l| present.contains(l.as_str()))
            .cloned()
            .collect();
        Some(match found.len() {
            0 => Coverage::Missing,
            1 => Coverage::Resolved {
                system: Some(found[0].clone()),
            },
            _ => Coverage::Ambiguous { candidates: found },
        })
    };

    let mut services: Vec<&Block> = reference
        .blocks
        .iter()
        .filter(|b| {
            matches!(
                b.kind,
                BlockKind::ServiceSpecification | BlockKind::ServiceFunction
            )
        })
        .collect();
    services.sort_by(|a, b| a.id.cmp(&b.id));

    let mut entries = Vec::new();
    for service in &services {
        let coverage = match direct(&service.id) {
            Some(c) => c,
            None if service.kind == BlockKind::ServiceSpecification => {
                let refiners: Vec<&Id> = reference
                    .relations_of(RelationKind::Trace)
                    .filter(|r| r.target == service.id)
                    .filter(|r| {
                        reference
                            .block(&r.source)
                            .is_some_and(|b| b.kind == BlockKind::ServiceFunction)
                    })
                    .map(|r| &r.source)
                    .collect();
                let all_resolved = !refiners.is_empty()
                    && refiners.iter().all(|f| {
                        matches!(direct(f), Some(Coverage::Resolved { .. }))
                    });
                if all_resolved {
                    Coverage::Resolved { system: None }
                } else {
                    Coverage::Missing
                }
            }
            None => Coverage::Missing,
        };
        entries.push(CoverageEntry {
            service_id: service.id.clone(),
            kind: service.kind,
            coverage,
        });
    }

    let complete = entries
        .iter()
        .all(|e| matches!(e.coverage, Coverage::Resolved { .. }));
    CoverageReport { entries, complete }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metamodel::Relation;
    use crate::validation::validate_specific;

    fn block(id: &str, kind: BlockKind) -> Block {
        Block::new(id, id.to_uppercase(), kind)
    }

    fn abstract_system(id: &str) -> Block {
        let mut b = block(id, BlockKind::System);
        b.is_abstract = true;
        b
    }

    /// capability <- activity <- service, served by an inheritance tree
    /// base(abstract) <- {left, right}, plus a singleton system `solo`
    /// serving a second service.
    fn reference_with_alternatives() -> Model {
        let mut m = Model::new("ref", ModelKind::Reference);
        m.blocks.push(block("cap", BlockKind::Capability));
        m.blocks.push(block("act", BlockKind::OperationalActivity));
        m.blocks.push(block("svc", BlockKind::ServiceSpecification));
        m.blocks.push(block("fun", BlockKind::ServiceFunction));
        let mut base = abstract_system("base");
        base.params.insert("param:gain".into(), Scalar::Text("real tunable".into()));
        base.params.insert("gain".into(), Scalar::Integer(1));
        m.blocks.push(base);
        m.blocks.push(block("left", BlockKind::System));
        let mut right = block("right", BlockKind::System);
        right.params.insert("gain".into(), Scalar::Integer(2));
        m.blocks.push(right);
        m.blocks.push(block("solo", BlockKind::System));
        m.relations.push(Relation::new(RelationKind::Trace, "act", "cap"));
        m.relations.push(Relation::new(RelationKind::Trace, "svc", "act"));
        m.relations.push(Relation::new(RelationKind::Trace, "fun", "svc"));
        m.relations.push(Relation::new(RelationKind::Trace, "base", "svc"));
        m.relations.push(Relation::new(RelationKind::Trace, "left", "svc"));
        m.relations.push(Relation::new(RelationKind::Trace, "right", "svc"));
        m.relations.push(Relation::new(RelationKind::Trace, "solo", "fun"));
        m.relations.push(Relation::new(RelationKind::Inheritance, "left", "base"));
        m.relations.push(Relation::new(RelationKind::Inheritance, "right", "base"));
        m.relations.push(Relation::new(RelationKind::Connectivity, "left", "solo"));
        m.relations.push(Relation::new(RelationKind::Connectivity, "right", "solo"));
        m
    }

    #[test]
    fn groups_follow_inheritance_roots() {
        let m = reference_with_alternatives();
        let groups = alternative_groups(&m);
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].service_id, Id::new("fun"));
        assert_eq!(groups[0].leaves, vec![Id::new("solo")]);
        assert_eq!(groups[1].service_id, Id::new("svc"));
        assert_eq!(groups[1].root_id, Id::new("base"));
        assert_eq!(groups[1].leaves, vec![Id::new("left"), Id::new("right")]);
    }

    #[test]
    fn singleton_non_abstract_system_is_its_own_group() {
        let mut m = Model::new("m", ModelKind::Reference);
        m.blocks.push(block("fun", BlockKind::ServiceFunction));
        m.blocks.push(block("only", BlockKind::System));
        m.relations.push(Relation::new(RelationKind::Trace, "only", "fun"));
        let groups = alternative_groups(&m);
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].leaves, vec![Id::new("only")]);
    }

    #[test]
    fn childless_abstract_system_yields_an_unusable_group() {
        let mut m = Model::new("m", ModelKind::Reference);
        m.blocks.push(block("fun", BlockKind::ServiceFunction));
        m.blocks.push(abstract_system("lonely"));
        m.relations.push(Relation::new(RelationKind::Trace, "lonely", "fun"));
        let groups = alternative_groups(&m);
        assert_eq!(groups.len(), 1);
        assert!(groups[0].leaves.is_empty());
    }

    fn select(pairs: &[(&str, &str)]) -> Selection {
        Selection {
            select: pairs
                .iter()
                .map(|(s, c)| (Id::new(*s), Id::new(*c)))
                .collect(),
            params: BTreeMap::new(),
        }
    }

    #[test]
    fn derive_copies_selected_leaves_with_ref_links() {
        let m = reference_with_alternatives();
        let specific = derive_specific(&m, &select(&[("svc", "right")]), "spec").unwrap();
        let ids: Vec<&str> = specific.blocks.iter().map(|b| b.id.as_str()).collect();
        assert_eq!(ids, ["right", "solo"]);
        let right = specific.block(&Id::new("right")).unwrap();
        assert_eq!(right.params.get("ref"), Some(&Scalar::Text("right".into())));
        // Connectivity among chosen blocks is carried over; the other arm is not.
        assert_eq!(specific.relations.len(), 1);
        assert_eq!(specific.relations[0].source, Id::new("right"));
        assert!(validate_specific(&specific, &m).is_empty());
    }

    #[test]
    fn derive_requires_a_choice_for_multi_leaf_groups() {
        let m = reference_with_alternatives();
        let err = derive_specific(&m, &select(&[]), "spec").unwrap_err();
        assert_eq!(err.code(), "E-SELECTION-MISSING");
    }

    #[test]
    fn derive_rejects_abstract_choices() {
        let m = reference_with_alternatives();
        let err = derive_specific(&m, &select(&[("svc", "base")]), "spec").unwrap_err();
        assert_eq!(err.code(), "E-SELECTION-ABSTRACT");
    }

    #[test]
    fn derive_rejects_foreign_choices() {
        let m = reference_with_alternatives();
        let err = derive_specific(&m, &select(&[("svc", "solo")]), "spec").unwrap_err();
        assert_eq!(err.code(), "E-SELECTION-FOREIGN");
        let err = derive_specific(&m, &select(&[("nowhere", "left")]), "spec").unwrap_err();
        assert_eq!(err.code(), "E-SELECTION-FOREIGN");
    }

    #[test]
    fn derive_applies_inheritance_then_overrides() {
        let m = reference_with_alternatives();
        // left inherits gain=1 from base; right shadows it with 2.
        let specific = derive_specific(&m, &select(&[("svc", "left")]), "spec").unwrap();
        let left = specific.block(&Id::new("left")).unwrap();
        assert_eq!(left.params.get("gain"), Some(&Scalar::Integer(1)));

        let specific = derive_specific(&m, &select(&[("svc", "right")]), "spec").unwrap();
        let right = specific.block(&Id::new("right")).unwrap();
        assert_eq!(right.params.get("gain"), Some(&Scalar::Integer(2)));

        let mut sel = select(&[("svc", "right")]);
        sel.params.insert("right.gain".into(), Scalar::Real(0.5));
        let specific = derive_specific(&m, &sel, "spec").unwrap();
        let right = specific.block(&Id::new("right")).unwrap();
        assert_eq!(right.params.get("gain"), Some(&Scalar::Real(0.5)));
    }

    #[test]
    fn three_level_shadowing_is_leaf_wins() {
        let mut m = Model::new("m", ModelKind::Reference);
        m.blocks.push(block("fun", BlockKind::ServiceFunction));
        let mut top = abstract_system("a_top");
        top.params.insert("x".into(), Scalar::Integer(1));
        top.params.insert("y".into(), Scalar::Integer(1));
        top.params.insert("z".into(), Scalar::Integer(1));
        let mut mid = abstract_system("b_mid");
        mid.params.insert("y".into(), Scalar::Integer(2));
        mid.params.insert("z".into(), Scalar::Integer(2));
        let mut leaf = block("c_leaf", BlockKind::System);
        leaf.params.insert("z".into(), Scalar::Integer(3));
        m.blocks.extend([top, mid, leaf]);
        m.relations.push(Relation::new(RelationKind::Trace, "a_top", "fun"));
        m.relations.push(Relation::new(RelationKind::Inheritance, "b_mid", "a_top"));
        m.relations.push(Relation::new(RelationKind::Inheritance, "c_leaf", "b_mid"));
        let params = effective_params(&m, &Id::new("c_leaf"));
        assert_eq!(params.get("x"), Some(&Scalar::Integer(1)));
        assert_eq!(params.get("y"), Some(&Scalar::Integer(2)));
        assert_eq!(params.get("z"), Some(&Scalar::Integer(3)));
    }

    #[test]
    fn derive_rejects_overrides_for_undeclared_params() {
        let m = reference_with_alternatives();
        let mut sel = select(&[("svc", "right")]);
        sel.params.insert("right.bogus".into(), Scalar::Integer(9));
        let err = derive_specific(&m, &sel, "spec").unwrap_err();
        assert_eq!(err.code(), "E-PARAM-FOREIGN");
    }

    #[test]
    fn derive_reports_missing_required_params() {
        let mut m = reference_with_alternatives();
        // Declare a required param without a default anywhere in the tree.
        m.blocks
            .iter_mut()
            .find(|b| b.id == Id::new("left"))
            .unwrap()
            .params
            .insert("param:rate".into(), Scalar::Text("real".into()));
        let err = derive_specific(&m, &select(&[("svc", "left")]), "spec").unwrap_err();
        assert_eq!(err.code(), "E-PARAM-MISSING");
    }

    #[test]
    fn derivation_is_deterministic() {
        let m = reference_with_alternatives();
        let sel = select(&[("svc", "left")]);
        let a = derive_specific(&m, &sel, "spec").unwrap();
        let b = derive_specific(&m, &sel, "spec").unwrap();
        assert_eq!(a, b);
        let ra = crate::store::render_model(&a).unwrap();
        let rb = crate::store::render_model(&b).unwrap();
        assert_eq!(ra, rb);
    }

    #[test]
    fn completeness_reports_every_service() {
        let m = reference_with_alternatives();
        let specific = derive_specific(&m, &select(&[("svc", "left")]), "spec").unwrap();
        let report = completeness(&specific, &m);
        assert!(report.complete);
        let by_id: BTreeMap<&str, &Coverage> = report
            .entries
            .iter()
            .map(|e| (e.service_id.as_str(), &e.coverage))
            .collect();
        assert_eq!(
            by_id["svc"],
            &Coverage::Resolved { system: Some(Id::new("left")) }
        );
        assert_eq!(
            by_id["fun"],
            &Coverage::Resolved { system: Some(Id::new("solo")) }
        );
    }

    #[test]
    fn completeness_flags_missing_alternatives() {
        let m = reference_with_alternatives();
        let mut specific = derive_specific(&m, &select(&[("svc", "left")]), "spec").unwrap();
        specific.blocks.retain(|b| b.id != Id::new("left"));
        specific.relations.clear();
        specific.views.clear();
        specific.behaviors.clear();
        let report = completeness(&specific, &m);
        assert!(!report.complete);
        let svc = report
            .entries
            .iter()
            .find(|e| e.service_id == Id::new("svc"))
            .unwrap();
        assert_eq!(svc.coverage, Coverage::Missing);
    }

    #[test]
    fn completeness_of_a_reference_without_services_is_vacuous() {
        let mut m = Model::new("empty", ModelKind::Reference);
        m.blocks.push(block("cap", BlockKind::Capability));
        let mut specific = Model::new("spec", ModelKind::Specific);
        specific.parent_ref = Some(Id::new("empty"));
        let report = completeness(&specific, &m);
        assert!(report.entries.is_empty());
        assert!(report.complete);
    }
}
