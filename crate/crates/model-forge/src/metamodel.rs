//! The layered type system: layers, block kinds, relations, views, and the
//! legality rules for derivation traces between layers.
//!
//! Everything here is immutable after model load and safe to share across
//! threads. Operations are pure functions.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::behavior::BehaviorBinding;
use crate::validation::Diagnostic;

/// Identifier for blocks, models, and services. Nonempty, unique within its
/// namespace (block ids within a model, model ids within a workspace).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Id(String);

impl Id {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Id {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(&self.0)
    }
}

impl From<&str> for Id {
    fn from(s: &str) -> Self {
        Self::new(s)
    }
}

impl From<String> for Id {
    fn from(s: String) -> Self {
        Self(s)
    }
}

/// Defines a fieldless enum with exact string names plus `Display`,
/// `FromStr`, and strict serde impls. Unknown strings are rejected with an
/// "unknown kind" error so the store can classify them precisely.
macro_rules! string_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl std::str::FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(format!(
                        concat!("unknown kind `{}` for ", stringify!($name)),
                        other
                    )),
                }
            }
        }

        impl Serialize for $name {
            fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
                ser.serialize_str(self.as_str())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
                let s = String::deserialize(de)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

pub(crate) use string_enum;

string_enum! {
    /// The four layers this toolchain models, ordered top to bottom.
    Layer {
        Strategic => "Strategic",
        Operational => "Operational",
        Services => "Services",
        Resources => "Resources",
    }
}

string_enum! {
    /// Block kinds; each kind lives on exactly one layer.
    BlockKind {
        Capability => "Capability",
        OperationalActivity => "OperationalActivity",
        OperationalPerformer => "OperationalPerformer",
        ServiceSpecification => "ServiceSpecification",
        ServiceFunction => "ServiceFunction",
        System => "System",
    }
}

string_enum! {
    /// Edge kinds. Trace edges point from the derived (lower) block to its
    /// source (upper) block; Inheritance from child System to parent System.
    RelationKind {
        Trace => "Trace",
        Inheritance => "Inheritance",
        Composition => "Composition",
        Connectivity => "Connectivity",
    }
}

string_enum! {
    /// Presentation viewpoints for views.
    Viewpoint {
        Taxonomy => "Taxonomy",
        Structure => "Structure",
        Connectivity => "Connectivity",
    }
}

string_enum! {
    /// Whether a model is a domain reference or a scenario instantiation.
    ModelKind {
        Reference => "Reference",
        Specific => "Specific",
    }
}

/// The layer hosting a block kind.
pub fn layer_of(kind: BlockKind) -> Layer {
    match kind {
        BlockKind::Capability => Layer::Strategic,
        BlockKind::OperationalActivity | BlockKind::OperationalPerformer => Layer::Operational,
        BlockKind::ServiceSpecification | BlockKind::ServiceFunction => Layer::Services,
        BlockKind::System => Layer::Resources,
    }
}

/// Whether a Trace edge from a block of `source_kind` (the derived, lower
/// block) to a block of `target_kind` (its source) is legal.
///
/// Exactly five ordered pairs are legal: activities trace to capabilities,
/// service specifications to activities, service functions to their
/// specification (intra-layer refinement), and systems to either service
/// specifications or service functions.
pub fn allowed_trace(source_kind: BlockKind, target_kind: BlockKind) -> bool {
    use BlockKind::*;
    matches!(
        (source_kind, target_kind),
        (OperationalActivity, Capability)
            | (ServiceSpecification, OperationalActivity)
            | (ServiceFunction, ServiceSpecification)
            | (System, ServiceSpecification)
            | (System, ServiceFunction)
    )
}

/// A scalar parameter value.
#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Integer(i64),
    Real(f64),
    Text(String),
    Vec3([f64; 3]),
}

impl Scalar {
    pub fn type_name(&self) -> &'static str {
        match self {
            Scalar::Integer(_) => "int",
            Scalar::Real(_) => "real",
            Scalar::Text(_) => "text",
            Scalar::Vec3(_) => "vec3",
        }
    }

    /// Numeric value, widening integers to reals.
    pub fn as_real(&self) -> Option<f64> {
        match self {
            Scalar::Integer(n) => Some(*n as f64),
            Scalar::Real(r) => Some(*r),
            _ => None,
        }
    }

    pub fn as_integer(&self) -> Option<i64> {
        match self {
            Scalar::Integer(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Scalar::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_vec3(&self) -> Option<[f64; 3]> {
        match self {
            Scalar::Vec3(v) => Some(*v),
            _ => None,
        }
    }

    /// True when every numeric component is finite. Non-finite reals cannot
    /// round-trip through the document format and are rejected at save time.
    pub fn is_finite(&self) -> bool {
        match self {
            Scalar::Real(r) => r.is_finite(),
            Scalar::Vec3(v) => v.iter().all(|c| c.is_finite()),
            _ => true,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Integer(n) => write!(f, "{n}"),
            Scalar::Real(r) => write!(f, "{r}"),
            Scalar::Text(s) => f.write_str(s),
            Scalar::Vec3([x, y, z]) => write!(f, "({x},{y},{z})"),
        }
    }
}

impl Serialize for Scalar {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        match self {
            Scalar::Integer(n) => ser.serialize_i64(*n),
            Scalar::Real(r) => ser.serialize_f64(*r),
            Scalar::Text(s) => ser.serialize_str(s),
            Scalar::Vec3(v) => v.serialize(ser),
        }
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        struct ScalarVisitor;

        impl<'de> serde::de::Visitor<'de> for ScalarVisitor {
            type Value = Scalar;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an integer, a real, a string, or a [x, y, z] array")
            }

            fn visit_i64<E: serde::de::Error>(self, n: i64) -> Result<Scalar, E> {
                Ok(Scalar::Integer(n))
            }

            fn visit_u64<E: serde::de::Error>(self, n: u64) -> Result<Scalar, E> {
                i64::try_from(n)
                    .map(Scalar::Integer)
                    .map_err(|_| E::custom("integer out of range"))
            }

            fn visit_f64<E: serde::de::Error>(self, r: f64) -> Result<Scalar, E> {
                Ok(Scalar::Real(r))
            }

            fn visit_str<E: serde::de::Error>(self, s: &str) -> Result<Scalar, E> {
                Ok(Scalar::Text(s.to_owned()))
            }

            fn visit_seq<A: serde::de::SeqAccess<'de>>(self, mut seq: A) -> Result<Scalar, A::Error> {
                let mut components = [0.0f64; 3];
                for (i, slot) in components.iter_mut().enumerate() {
                    *slot = seq
                        .next_element::<f64>()?
                        .ok_or_else(|| serde::de::Error::custom(format!(
                            "vec3 needs exactly 3 components, got {i}"
                        )))?;
                }
                if seq.next_element::<serde_json::Value>()?.is_some() {
                    return Err(serde::de::Error::custom(
                        "vec3 needs exactly 3 components, got more",
                    ));
                }
                Ok(Scalar::Vec3(components))
            }
        }

        de.deserialize_any(ScalarVisitor)
    }
}

/// Prefix marking a param-schema declaration inside a block's param map.
/// `param:h` declares a required parameter `h`; its value is a descriptor
/// like `"real tunable"` and the default lives under the plain key `h`.
pub const PARAM_PREFIX: &str = "param:";

/// Declared type of a schema parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamType {
    Int,
    Real,
    Text,
    Vec3,
}

impl ParamType {
    pub fn as_str(self) -> &'static str {
        match self {
            ParamType::Int => "int",
            ParamType::Real => "real",
            ParamType::Text => "text",
            ParamType::Vec3 => "vec3",
        }
    }

    /// Whether a value satisfies this type. Integers widen to reals; the
    /// reverse narrowing is rejected.
    pub fn accepts(self, value: &Scalar) -> bool {
        matches!(
            (self, value),
            (ParamType::Int, Scalar::Integer(_))
                | (ParamType::Real, Scalar::Integer(_))
                | (ParamType::Real, Scalar::Real(_))
                | (ParamType::Text, Scalar::Text(_))
                | (ParamType::Vec3, Scalar::Vec3(_))
        )
    }
}

impl fmt::Display for ParamType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A parsed `param:` descriptor: the declared type plus whether the value is
/// tunable at run time (as opposed to fixed from the model).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamDecl {
    pub ty: ParamType,
    pub tunable: bool,
}

impl ParamDecl {
    /// Parses a descriptor such as `"real"` or `"int tunable"`.
    pub fn parse(descriptor: &str) -> Result<Self, String> {
        let mut words = descriptor.split_whitespace();
        let ty = match words.next() {
            Some("int") => ParamType::Int,
            Some("real") => ParamType::Real,
            Some("text") => ParamType::Text,
            Some("vec3") => ParamType::Vec3,
            other => {
                return Err(format!(
                    "unknown param type `{}` (expected int, real, text, or vec3)",
                    other.unwrap_or("")
                ))
            }
        };
        let tunable = match words.next() {
            None => false,
            Some("tunable") => true,
            Some(other) => return Err(format!("unknown param flag `{other}`")),
        };
        if words.next().is_some() {
            return Err("trailing tokens in param descriptor".to_owned());
        }
        Ok(ParamDecl { ty, tunable })
    }
}

/// One model element on exactly one layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub id: Id,
    pub name: String,
    pub kind: BlockKind,
    /// Only System blocks may be abstract (they form inheritance trees).
    #[serde(rename = "abstract")]
    pub is_abstract: bool,
    pub params: BTreeMap<String, Scalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doc: Option<String>,
}

impl Block {
    pub fn new(id: impl Into<Id>, name: impl Into<String>, kind: BlockKind) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
            kind,
            is_abstract: false,
            params: BTreeMap::new(),
            doc: None,
        }
    }

    pub fn layer(&self) -> Layer {
        layer_of(self.kind)
    }

    /// The param-schema declarations carried by this block alone (no
    /// inheritance). Malformed descriptors are reported as errors.
    pub fn param_decls(&self) -> impl Iterator<Item = (&str, Result<ParamDecl, String>)> {
        self.params.iter().filter_map(|(key, value)| {
            let name = key.strip_prefix(PARAM_PREFIX)?;
            let decl = match value {
                Scalar::Text(descr) => ParamDecl::parse(descr),
                other => Err(format!(
                    "param descriptor must be text, got {}",
                    other.type_name()
                )),
            };
            Some((name, decl))
        })
    }
}

/// A typed edge between two blocks of the containing model.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Relation {
    pub kind: RelationKind,
    pub source: Id,
    pub target: Id,
}

impl Relation {
    pub fn new(kind: RelationKind, source: impl Into<Id>, target: impl Into<Id>) -> Self {
        Self {
            kind,
            source: source.into(),
            target: target.into(),
        }
    }
}

/// A presentation record: which blocks of one layer a diagram shows. Views
/// carry no constraints beyond layer membership.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct View {
    pub name: String,
    pub viewpoint: Viewpoint,
    pub layer: Layer,
    pub members: Vec<Id>,
}

/// A named set of blocks, relations, views, and behavior bindings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Model {
    pub id: Id,
    pub kind: ModelKind,
    /// Present iff kind = Specific: the reference model this was derived from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_ref: Option<Id>,
    pub blocks: Vec<Block>,
    pub relations: Vec<Relation>,
    pub views: Vec<View>,
    pub behaviors: Vec<BehaviorBinding>,
}

impl Model {
    pub fn new(id: impl Into<Id>, kind: ModelKind) -> Self {
        Self {
            id: id.into(),
            kind,
            parent_ref: None,
            blocks: Vec::new(),
            relations: Vec::new(),
            views: Vec::new(),
            behaviors: Vec::new(),
        }
    }

    pub fn block(&self, id: &Id) -> Option<&Block> {
        self.blocks.iter().find(|b| &b.id == id)
    }

    pub fn binding_for(&self, block_id: &Id) -> Option<&BehaviorBinding> {
        self.behaviors.iter().find(|b| &b.block_id == block_id)
    }

    pub fn relations_of(&self, kind: RelationKind) -> impl Iterator<Item = &Relation> {
        self.relations.iter().filter(move |r| r.kind == kind)
    }

    /// Sorts blocks by id, relations by (kind, source, target), views by
    /// name, and bindings by block id, so rendering is byte-deterministic.
    pub fn canonicalize(&mut self) {
        self.blocks.sort_by(|a, b| a.id.cmp(&b.id));
        self.relations.sort();
        self.views.sort_by(|a, b| a.name.cmp(&b.name));
        self.behaviors.sort_by(|a, b| a.block_id.cmp(&b.block_id));
    }

    /// Structural invariants every model must satisfy before it can be
    /// saved or validated: unique nonempty ids, resolvable and well-formed
    /// edges, view members on the view's layer, abstractness restricted to
    /// System blocks, parent links matching the model kind, at most one
    /// behavior binding per block, and finite numeric params.
    pub fn integrity(&self) -> Vec<Diagnostic> {
        let mut diags = Vec::new();
        let mut seen: HashSet<&Id> = HashSet::new();

        match (self.kind, &self.parent_ref) {
            (ModelKind::Reference, Some(_)) => diags.push(Diagnostic::error(
                "E-PARSE",
                self.id.clone(),
                "a reference model must not carry parent_ref",
            )),
            (ModelKind::Specific, None) => diags.push(Diagnostic::error(
                "E-PARSE",
                self.id.clone(),
                "a specific model must carry parent_ref",
            )),
            _ => {}
        }

        for block in &self.blocks {
            if block.id.is_empty() {
                diags.push(Diagnostic::error(
                    "E-PARSE",
                    block.id.clone(),
                    "block id must be nonempty",
                ));
            }
            if !seen.insert(&block.id) {
                diags.push(Diagnostic::error(
                    "E-DUP-ID",
                    block.id.clone(),
                    format!("duplicate block id `{}`", block.id),
                ));
            }
            if block.is_abstract && block.kind != BlockKind::System {
                diags.push(Diagnostic::error(
                    "E-ABSTRACT-KIND",
                    block.id.clone(),
                    format!("{} blocks cannot be abstract", block.kind),
                ));
            }
            for (key, value) in &block.params {
                if !value.is_finite() {
                    diags.push(Diagnostic::error(
                        "E-PARSE",
                        block.id.clone(),
                        format!("param `{key}` has a non-finite value"),
                    ));
                }
            }
        }

        let ids: HashSet<&Id> = self.blocks.iter().map(|b| &b.id).collect();
        let mut edges: HashSet<&Relation> = HashSet::new();
        for rel in &self.relations {
            for endpoint in [&rel.source, &rel.target] {
                if !ids.contains(endpoint) {
                    diags.push(Diagnostic::error(
                        "E-DANGLING-LINK",
                        endpoint.clone(),
                        format!(
                            "{} relation {} -> {} references a missing block",
                            rel.kind, rel.source, rel.target
                        ),
                    ));
                }
            }
            if rel.source == rel.target {
                diags.push(Diagnostic::error(
                    "E-SELF-LINK",
                    rel.source.clone(),
                    format!("{} relation may not loop onto its source", rel.kind),
                ));
            }
            if !edges.insert(rel) {
                diags.push(Diagnostic::error(
                    "E-DUP-REL",
                    rel.source.clone(),
                    format!(
                        "duplicate {} relation {} -> {}",
                        rel.kind, rel.source, rel.target
                    ),
                ));
            }
        }

        for view in &self.views {
            for member in &view.members {
                match self.block(member) {
                    None => diags.push(Diagnostic::error(
                        "E-DANGLING-LINK",
                        member.clone(),
                        format!("view `{}` references a missing block", view.name),
                    )),
                    Some(block) if block.layer() != view.layer => {
                        diags.push(Diagnostic::error(
                            "E-VIEW-LAYER",
                            member.clone(),
                            format!(
                                "view `{}` is on layer {} but member `{}` lives on {}",
                                view.name,
                                view.layer,
                                member,
                                block.layer()
                            ),
                        ))
                    }
                    Some(_) => {}
                }
            }
        }

        let mut bound: HashSet<&Id> = HashSet::new();
        for binding in &self.behaviors {
            if !ids.contains(&binding.block_id) {
                diags.push(Diagnostic::error(
                    "E-DANGLING-LINK",
                    binding.block_id.clone(),
                    "behavior binding references a missing block",
                ));
            }
            if !bound.insert(&binding.block_id) {
                diags.push(Diagnostic::error(
                    "E-DUP-BINDING",
                    binding.block_id.clone(),
                    format!("block `{}` carries more than one binding", binding.block_id),
                ));
            }
        }

        diags.sort();
        diags
    }
}

/// Checks a single edge against the relation rules: Trace endpoints must
/// pass [`allowed_trace`], Inheritance joins two System blocks, and
/// Composition/Connectivity join blocks on one layer. Unresolved endpoints
/// yield `E-DANGLING-LINK` instead of panicking.
pub fn check_relation(model: &Model, rel: &Relation) -> Vec<Diagnostic> {
    let (source, target) = match (model.block(&rel.source), model.block(&rel.target)) {
        (Some(s), Some(t)) => (s, t),
        _ => {
            return vec![Diagnostic::error(
                "E-DANGLING-LINK",
                rel.source.clone(),
                format!(
                    "{} relation {} -> {} references a missing block",
                    rel.kind, rel.source, rel.target
                ),
            )]
        }
    };

    let mut diags = Vec::new();
    match rel.kind {
        RelationKind::Trace => {
            if !allowed_trace(source.kind, target.kind) {
                diags.push(Diagnostic::error(
                    "E-TRACE-KIND",
                    rel.source.clone(),
                    format!(
                        "trace from {} `{}` to {} `{}` is not a legal derivation step",
                        source.kind, source.id, target.kind, target.id
                    ),
                ));
            }
        }
        RelationKind::Inheritance => {
            if source.kind != BlockKind::System || target.kind != BlockKind::System {
                diags.push(Diagnostic::error(
                    "E-INHERIT-KIND",
                    rel.source.clone(),
                    format!(
                        "inheritance is restricted to System blocks, got {} -> {}",
                        source.kind, target.kind
                    ),
                ));
            }
        }
        RelationKind::Composition | RelationKind::Connectivity => {
            if source.layer() != target.layer() {
                diags.push(Diagnostic::error(
                    "E-LAYER-MISMATCH",
                    rel.source.clone(),
                    format!(
                        "{} relation must stay on one layer, got {} -> {}",
                        rel.kind,
                        source.layer(),
                        target.layer()
                    ),
                ));
            }
        }
    }
    diags
}
