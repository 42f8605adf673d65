//! Acceptance suite: one test per release criterion, each printing a
//! pass line (`cargo test --test acceptance -- --nocapture` to see them).
//!
//! The bundled models and parameter files under `fixtures/` are the
//! subjects; every expected value here is pinned exactly.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use model_forge::behavior::{BehaviorBinding, BindingKind, Role};
use model_forge::metamodel::{
    Block, BlockKind, Id, Layer, Model, ModelKind, Relation, RelationKind, Scalar, View,
    Viewpoint,
};
use model_forge::simkernel::{run_simulation, NoiseOnset, NullSink, SimParams, TargetSpec, Vec3};
use model_forge::{
    assemble_artifact, attach_behavior, derive_specific, load_model, parse_model, render_model,
    run_artifact, validate_reference, validate_specific, Diagnostic, Selection,
};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn bundled_pair() -> (Model, Model) {
    let reference = load_model(fixture("atr_reference.json")).expect("reference loads");
    let specific = load_model(fixture("maritime_specific.json")).expect("specific loads");
    (specific, reference)
}

fn bundled_selection() -> Selection {
    model_forge::store::load_selection(fixture("selection.json")).expect("selection loads")
}

fn run_bundled(overrides: &[(&str, Scalar)]) -> model_forge::SimResult {
    let (specific, reference) = bundled_pair();
    let artifact = assemble_artifact(&specific, &reference).expect("bundled pair assembles");
    let overrides: BTreeMap<String, Scalar> = overrides
        .iter()
        .map(|(k, v)| ((*k).to_owned(), v.clone()))
        .collect();
    run_artifact(&artifact, &overrides, &mut NullSink).expect("run succeeds")
}

fn pass(n: u32, what: &str) {
    println!("criterion {n} ({what}): PASS");
}

#[test]
fn criterion_1_scoring_reproduction() {
    let params = model_forge::store::load_params(fixture("maritime_params.json"))
        .expect("params file loads");
    let started = Instant::now();
    let (specific, reference) = bundled_pair();
    let artifact = assemble_artifact(&specific, &reference).expect("bundled pair assembles");
    let result = run_artifact(&artifact, &params, &mut NullSink).expect("run succeeds");
    let elapsed = started.elapsed();

    assert_eq!(result.report.false_positives, 3);
    assert_eq!(result.report.first_false_positive, Some(3));
    assert_eq!(result.report.false_negatives, 0);
    assert_eq!(result.report.first_false_negative, None);
    assert!(elapsed.as_secs_f64() < 1.0, "run took {elapsed:?}");
    pass(1, "baseline scoring: 3 false positives, first at t=3, none missed");
}

#[test]
fn criterion_2_final_position_matches_the_desired_track() {
    let result = run_bundled(&[]);
    let last = &result.steps.last().unwrap().state;
    assert_eq!(last.time, 5);
    assert_eq!(last.actual_position, Vec3::new(10.0, 0.0, 0.0));
    assert_eq!(last.desired_position, Vec3::new(10.0, 0.0, 0.0));
    assert_eq!(last.deviation, Vec3::ZERO);
    pass(2, "the controller lands the run exactly on the desired end position");
}

#[test]
fn criterion_3_literal_onset_policy_variant() {
    let result = run_bundled(&[("noise_onset", Scalar::Text("at".into()))]);
    assert_eq!(result.report.false_positives, 4);
    assert_eq!(result.report.first_false_positive, Some(2));
    assert_eq!(result.report.false_negatives, 0);
    pass(3, "onset-at-activation policy: 4 false positives, first at t=2");
}

#[test]
fn criterion_4_deadbeat_property_suite() {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let ivec = |rng: &mut StdRng| {
        Vec3::new(
            rng.gen_range(-5..=5) as f64,
            rng.gen_range(-5..=5) as f64,
            rng.gen_range(-5..=5) as f64,
        )
    };
    for case in 0..200 {
        let end_time = rng.gen_range(1..=20u32);
        let activation_time = rng.gen_range(0..end_time);
        let passive_velocity = ivec(&mut rng);
        let params = SimParams {
            start_time: 0,
            activation_time,
            end_time,
            time_step: 1.0,
            desired_start: ivec(&mut rng),
            desired_velocity: ivec(&mut rng),
            passive_velocity,
            threshold: 0.0,
            base_noise: 0.0,
            noise_increase: 0.0,
            targets: vec![TargetSpec { index: 0, strength: 1.0, wanted: true }],
            noise_onset: NoiseOnset::AfterActivation,
        };
        let result = run_simulation(&params, &mut NullSink).expect("run succeeds");
        for record in &result.steps {
            let s = &record.state;
            if s.time <= activation_time {
                // Pre-activation drift accumulates linearly.
                assert_eq!(
                    s.deviation,
                    passive_velocity * (s.time as f64),
                    "case {case}: drift at t={} with t_i={activation_time}",
                    s.time
                );
            } else {
                // One step after activation the deviation is exactly zero.
                assert_eq!(
                    s.deviation,
                    Vec3::ZERO,
                    "case {case}: deviation at t={} with t_i={activation_time}",
                    s.time
                );
            }
        }
    }
    pass(4, "deadbeat convergence and linear pre-activation drift over 200 random runs");
}

/// Asserts that `diags` is nonempty and consists solely of `code`.
fn assert_only(diags: &[Diagnostic], code: &str, what: &str) {
    assert!(!diags.is_empty(), "{what}: expected {code}, got nothing");
    for d in diags {
        assert_eq!(d.code, code, "{what}: unexpected {d}");
    }
}

#[test]
fn criterion_5_validation_mutation_suite() {
    let (specific, reference) = bundled_pair();
    assert_eq!(validate_reference(&reference), vec![], "reference fixture must be clean");
    assert_eq!(
        validate_specific(&specific, &reference),
        vec![],
        "specific fixture must be clean"
    );

    // R1: a System loses its upward justification.
    let mut m = reference.clone();
    m.relations
        .retain(|r| !(r.kind == RelationKind::Trace && r.source == Id::new("mcu")));
    assert_only(&validate_reference(&m), "E-TRACE-MISSING", "R1");

    // R2: a trace edge jumps across layers.
    let mut m = reference.clone();
    for r in &mut m.relations {
        if r.kind == RelationKind::Trace && r.source == Id::new("mcu") {
            r.target = Id::new("autonomous_survey");
        }
    }
    assert_only(&validate_reference(&m), "E-TRACE-KIND", "R2");

    // R3: inheritance runs in a circle.
    let mut m = reference.clone();
    m.relations
        .push(Relation::new(RelationKind::Inheritance, "mcu", "deadbeat_mcu"));
    assert_only(&validate_reference(&m), "E-CYCLE", "R3");

    // R4: inheritance from a System to a service block.
    let mut m = reference.clone();
    m.relations.push(Relation::new(
        RelationKind::Inheritance,
        "threshold_tcu",
        "signal_acquisition",
    ));
    assert_only(&validate_reference(&m), "E-INHERIT-KIND", "R4");

    // R5: behavior bound to an abstract block.
    let mut m = reference.clone();
    m.behaviors.push(BehaviorBinding {
        block_id: Id::new("classifier"),
        kind: BindingKind::Builtin,
        target: "tcu.threshold".into(),
        role: Role::Classifier,
    });
    assert_only(&validate_reference(&m), "E-ABSTRACT-BEHAVIOR", "R5");

    // R6: a concrete System without behavior.
    let mut m = reference.clone();
    m.behaviors.retain(|b| b.block_id != Id::new("remote_tcu"));
    assert_only(&validate_reference(&m), "W-NO-BEHAVIOR", "R6");

    // R7: a block vanishes from every view of its layer.
    let mut m = reference.clone();
    for view in &mut m.views {
        view.members.retain(|id| id != &Id::new("targets"));
    }
    assert_only(&validate_reference(&m), "W-UNPRESENTED", "R7");

    // S1: a block links to a reference id that does not exist.
    let mut s = specific.clone();
    let mut stray = Block::new("stray", "Stray", BlockKind::System);
    stray.params.insert("ref".into(), Scalar::Text("ghost".into()));
    s.blocks.push(stray);
    assert_only(&validate_specific(&s, &reference), "E-DANGLING-REF", "S1");

    // S2 missing: the selected classifier disappears.
    let mut s = specific.clone();
    s.blocks.retain(|b| b.id != Id::new("threshold_tcu"));
    s.relations.retain(|r| r.target != Id::new("threshold_tcu"));
    s.behaviors.retain(|b| b.block_id != Id::new("threshold_tcu"));
    for view in &mut s.views {
        view.members.retain(|id| id != &Id::new("threshold_tcu"));
    }
    assert_only(&validate_specific(&s, &reference), "E-SELECTION-MISSING", "S2-missing");

    // S2 ambiguous: both classifier alternatives are present.
    let mut s = specific.clone();
    let mut second = Block::new("remote_tcu", "Remote TCU", BlockKind::System);
    for (key, value) in [
        ("N0", Scalar::Integer(0)),
        ("dN", Scalar::Integer(1)),
        ("h", Scalar::Integer(3)),
        ("noise_onset", Scalar::Text("after".into())),
        ("ref", Scalar::Text("remote_tcu".into())),
    ] {
        second.params.insert(key.into(), value);
    }
    s.blocks.push(second);
    assert_only(
        &validate_specific(&s, &reference),
        "E-SELECTION-AMBIGUOUS",
        "S2-ambiguous",
    );

    // S3: an abstract block sneaks into the configuration.
    let mut s = specific.clone();
    let mut ghost = Block::new("ghost_classifier", "Ghost", BlockKind::System);
    ghost.is_abstract = true;
    for (key, value) in [
        ("N0", Scalar::Integer(0)),
        ("dN", Scalar::Integer(1)),
        ("h", Scalar::Integer(3)),
        ("noise_onset", Scalar::Text("after".into())),
        ("ref", Scalar::Text("classifier".into())),
    ] {
        ghost.params.insert(key.into(), value);
    }
    s.blocks.push(ghost);
    assert_only(&validate_specific(&s, &reference), "E-ABSTRACT-IN-SPECIFIC", "S3");

    // S4: a required parameter loses its value.
    let mut s = specific.clone();
    s.blocks
        .iter_mut()
        .find(|b| b.id == Id::new("threshold_tcu"))
        .unwrap()
        .params
        .remove("h");
    assert_only(&validate_specific(&s, &reference), "E-PARAM-MISSING", "S4");

    pass(5, "each alignment rule fires exactly for its canonical mutation");
}

#[test]
fn criterion_6_derivation_round_trip() {
    let (_, reference) = bundled_pair();
    let groups = model_forge::alternative_groups(&reference);
    let multi: Vec<_> = groups.iter().filter(|g| g.leaves.len() > 1).collect();
    assert_eq!(multi.len(), 1, "the fixture offers exactly one real choice");

    // Every accepted selection: one leaf per multi-leaf group.
    for leaf in &multi[0].leaves {
        let mut selection = Selection::default();
        selection
            .select
            .insert(multi[0].service_id.clone(), leaf.clone());
        let derived = derive_specific(&reference, &selection, "variant").expect("derivable");
        assert_eq!(
            validate_specific(&derived, &reference),
            vec![],
            "derived model must conform for leaf {leaf}"
        );
        let again = derive_specific(&reference, &selection, "variant").expect("derivable");
        assert_eq!(
            render_model(&derived).unwrap(),
            render_model(&again).unwrap(),
            "repeated derivation must be byte-identical"
        );
    }

    // The bundled selection reproduces the bundled specific model exactly.
    let derived = derive_specific(&reference, &bundled_selection(), "maritime_specific")
        .expect("bundled selection derives");
    let bundled_bytes = std::fs::read_to_string(fixture("maritime_specific.json")).unwrap();
    assert_eq!(render_model(&derived).unwrap(), bundled_bytes);
    pass(6, "derivation conforms, is deterministic, and reproduces the bundled model");
}

// -- randomized model generation for the store round-trip ------------------

fn scalar_strategy() -> impl Strategy<Value = Scalar> {
    prop_oneof![
        any::<i64>().prop_map(Scalar::Integer),
        (-1.0e9f64..1.0e9).prop_map(Scalar::Real),
        "[a-z0-9 ]{0,12}".prop_map(Scalar::Text),
        prop::array::uniform3(-1.0e6f64..1.0e6).prop_map(Scalar::Vec3),
    ]
}

fn kind_strategy() -> impl Strategy<Value = BlockKind> {
    prop::sample::select(BlockKind::ALL.to_vec())
}

fn relation_kind_strategy() -> impl Strategy<Value = RelationKind> {
    prop::sample::select(RelationKind::ALL.to_vec())
}

fn viewpoint_strategy() -> impl Strategy<Value = Viewpoint> {
    prop::sample::select(Viewpoint::ALL.to_vec())
}

prop_compose! {
    fn block_strategy(index: usize)(
        kind in kind_strategy(),
        is_abstract in any::<bool>(),
        params in prop::collection::btree_map("[a-z_]{1,8}", scalar_strategy(), 0..4),
        doc in prop::option::of("[a-zA-Z .]{0,24}"),
    ) -> Block {
        let mut b = Block::new(format!("b{index:02}"), format!("Block {index}"), kind);
        b.is_abstract = is_abstract && kind == BlockKind::System;
        b.params = params;
        b.doc = doc;
        b
    }
}

fn model_strategy() -> impl Strategy<Value = Model> {
    (1usize..10).prop_flat_map(|n| {
        let blocks: Vec<_> = (0..n).map(block_strategy).collect();
        let relations = prop::collection::vec(
            (0..n, 0..n, relation_kind_strategy()),
            0..(2 * n),
        );
        let views = prop::collection::vec(
            (
                viewpoint_strategy(),
                prop::sample::select(Layer::ALL.to_vec()),
                prop::collection::vec(0..n, 0..n),
            ),
            0..3,
        );
        let behaviors = prop::collection::vec(0..n, 0..n);
        (blocks, relations, views, behaviors).prop_map(move |(blocks, relations, views, behaviors)| {
            let mut m = Model::new("random", ModelKind::Reference);
            m.blocks = blocks;
            for (s, t, kind) in relations {
                if s == t {
                    continue;
                }
                let rel = Relation::new(kind, m.blocks[s].id.clone(), m.blocks[t].id.clone());
                if !m.relations.contains(&rel) {
                    m.relations.push(rel);
                }
            }
            for (i, (viewpoint, layer, members)) in views.into_iter().enumerate() {
                let members: Vec<Id> = {
                    let mut seen = std::collections::BTreeSet::new();
                    members
                        .into_iter()
                        .map(|ix| &m.blocks[ix])
                        .filter(|b| b.layer() == layer)
                        .map(|b| b.id.clone())
                        .filter(|id| seen.insert(id.clone()))
                        .collect()
                };
                m.views.push(View {
                    name: format!("view{i}"),
                    viewpoint,
                    layer,
                    members,
                });
            }
            let mut bound = std::collections::BTreeSet::new();
            for ix in behaviors {
                let block = &m.blocks[ix];
                if block.is_abstract || !bound.insert(block.id.clone()) {
                    continue;
                }
                m.behaviors.push(BehaviorBinding {
                    block_id: block.id.clone(),
                    kind: BindingKind::Builtin,
                    target: "tcu.threshold".into(),
                    role: Role::Classifier,
                });
            }
            m.canonicalize();
            m
        })
    })
}

#[test]
fn criterion_7_store_round_trip() {
    // The bundled files are already canonical: parse -> render is identity
    // on the bytes, and parse(render(m)) is structural identity.
    for name in ["atr_reference.json", "maritime_specific.json"] {
        let bytes = std::fs::read_to_string(fixture(name)).unwrap();
        let model = parse_model(&bytes).expect("fixture parses");
        assert_eq!(render_model(&model).unwrap(), bytes, "{name} must be canonical");
    }

    let mut runner = proptest::test_runner::TestRunner::new(proptest::test_runner::Config {
        cases: 100,
        ..proptest::test_runner::Config::default()
    });
    runner
        .run(&model_strategy(), |model| {
            prop_assert_eq!(&model.integrity(), &vec![], "generated models are valid");
            let rendered = render_model(&model).unwrap();
            let parsed = parse_model(&rendered).unwrap();
            prop_assert_eq!(&parsed, &model, "structural round trip");
            let rerendered = render_model(&parsed).unwrap();
            prop_assert_eq!(rendered, rerendered, "byte-level fixpoint");
            Ok(())
        })
        .unwrap();
    pass(7, "canonical fixtures and 100 random models round-trip bit-exactly");
}

#[test]
fn criterion_8_hook_substitutability() {
    let (specific, reference) = bundled_pair();
    let builtin = assemble_artifact(&specific, &reference).expect("assembles");
    let builtin_result =
        run_artifact(&builtin, &BTreeMap::new(), &mut NullSink).expect("builtin run");

    let hook_script = fixture("hooks/threshold_classifier.py");
    let (hooked_model, _warnings) = attach_behavior(
        &specific,
        BehaviorBinding {
            block_id: Id::new("threshold_tcu"),
            kind: BindingKind::Exec,
            target: format!("python3 {}", hook_script.display()),
            role: Role::Classifier,
        },
    )
    .expect("rebinding succeeds");
    let hooked = assemble_artifact(&hooked_model, &reference).expect("assembles");
    let hooked_result = run_artifact(&hooked, &BTreeMap::new(), &mut NullSink).expect("hook run");

    assert_eq!(hooked_result.report, builtin_result.report);
    assert_eq!(hooked_result.steps, builtin_result.steps);
    pass(8, "the external threshold hook scores identically to the builtin classifier");
}

#[test]
fn criterion_9_threshold_monotonicity() {
    let (specific, reference) = bundled_pair();
    let artifact = assemble_artifact(&specific, &reference).expect("assembles");
    let mut previous: Option<(u32, u32)> = None;
    for step in 0..=12u32 {
        let mut overrides = BTreeMap::new();
        overrides.insert("h".to_owned(), Scalar::Real(step as f64 * 0.5));
        let report = run_artifact(&artifact, &overrides, &mut NullSink)
            .expect("run succeeds")
            .report;
        if let Some((fp, fn_)) = previous {
            assert!(
                report.false_positives <= fp,
                "false positives must not rise with h"
            );
            assert!(
                report.false_negatives >= fn_,
                "false negatives must not fall with h"
            );
        }
        previous = Some((report.false_positives, report.false_negatives));
    }
    pass(9, "false positives fall and false negatives rise monotonically in h");
}
