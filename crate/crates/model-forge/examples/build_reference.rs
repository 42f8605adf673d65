//! Builds the bundled maritime target-recognition reference model in code,
//! validates it, and saves it in the canonical format.
//!
//! ```bash
//! cargo run --example build_reference -- out/atr_reference.json
//! ```

use model_forge::behavior::{BehaviorBinding, BindingKind, Role};
use model_forge::metamodel::{
    Block, BlockKind, Id, Layer, Model, ModelKind, Relation, RelationKind, Scalar, View,
    Viewpoint,
};
use model_forge::{save_model, validate_reference};

fn block(id: &str, name: &str, kind: BlockKind, doc: &str) -> Block {
    let mut b = Block::new(id, name, kind);
    if !doc.is_empty() {
        b.doc = Some(doc.to_owned());
    }
    b
}

fn with_params(mut block: Block, params: &[(&str, Scalar)]) -> Block {
    for (key, value) in params {
        block.params.insert((*key).to_owned(), value.clone());
    }
    block
}

fn text(s: &str) -> Scalar {
    Scalar::Text(s.to_owned())
}

/// The bundled reference model: two capabilities refined down to a vehicle
/// plant, a movement controller tree, a classifier tree with two concrete
/// alternatives, and the surveyed targets.
pub fn atr_reference() -> Model {
    let mut m = Model::new("atr_reference", ModelKind::Reference);

    // Strategic layer.
    m.blocks.push(block(
        "autonomous_survey",
        "Autonomous Survey",
        BlockKind::Capability,
        "Survey an area of water without direct operator control.",
    ));
    m.blocks.push(block(
        "target_recognition",
        "Target Recognition",
        BlockKind::Capability,
        "Tell wanted objects apart from everything else the sensors pick up.",
    ));

    // Operational layer.
    m.blocks.push(block(
        "operate_auv",
        "Operate AUV",
        BlockKind::OperationalActivity,
        "Drive the vehicle along a planned track.",
    ));
    m.blocks.push(block(
        "classify_targets",
        "Classify Targets",
        BlockKind::OperationalActivity,
        "Decide for each received signal whether it belongs to a wanted object.",
    ));
    m.blocks.push(block(
        "auv_operator",
        "AUV Operator",
        BlockKind::OperationalPerformer,
        "Supervises the mission and reviews the scoring report.",
    ));

    // Services layer.
    m.blocks.push(block(
        "vehicle_services",
        "Vehicle Services",
        BlockKind::ServiceSpecification,
        "",
    ));
    m.blocks.push(block(
        "target_classification",
        "Target Classification",
        BlockKind::ServiceSpecification,
        "",
    ));
    m.blocks.push(block(
        "movement_control",
        "Movement Control",
        BlockKind::ServiceFunction,
        "Keeps the vehicle on its desired track.",
    ));
    m.blocks.push(block(
        "vehicle_kinematics",
        "Vehicle Kinematics",
        BlockKind::ServiceFunction,
        "Position integration under active and passive velocities.",
    ));
    m.blocks.push(block(
        "signal_acquisition",
        "Signal Acquisition",
        BlockKind::ServiceFunction,
        "Delivers one signal strength per known target and step.",
    ));

    // Resources layer: the movement-controller tree.
    let mut mcu = with_params(
        block(
            "mcu",
            "Movement Control Unit",
            BlockKind::System,
            "Holds off until its activation step, then corrects the motion.",
        ),
        &[
            ("param:t_i", text("int tunable")),
            ("t_i", Scalar::Integer(2)),
        ],
    );
    mcu.is_abstract = true;
    m.blocks.push(mcu);
    m.blocks.push(block(
        "deadbeat_mcu",
        "Deadbeat MCU",
        BlockKind::System,
        "Cancels drift and the accumulated deviation within one step.",
    ));

    // The classifier tree with two concrete alternatives.
    let mut classifier = with_params(
        block(
            "classifier",
            "Target Classification Unit",
            BlockKind::System,
            "Compares signal strength plus background noise against a threshold.",
        ),
        &[
            ("param:h", text("real tunable")),
            ("h", Scalar::Integer(3)),
            ("param:N0", text("real")),
            ("N0", Scalar::Integer(0)),
            ("param:dN", text("real")),
            ("dN", Scalar::Integer(1)),
            ("param:noise_onset", text("text")),
            ("noise_onset", text("after")),
        ],
    );
    classifier.is_abstract = true;
    m.blocks.push(classifier);
    m.blocks.push(block(
        "threshold_tcu",
        "Threshold TCU",
        BlockKind::System,
        "In-process implementation of the threshold rule.",
    ));
    m.blocks.push(block(
        "remote_tcu",
        "Remote TCU",
        BlockKind::System,
        "Delegates each decision to an HTTP endpoint.",
    ));

    // The vehicle plant and the signal environment.
    m.blocks.push(with_params(
        block(
            "auv_plant",
            "AUV Plant",
            BlockKind::System,
            "Discrete-time kinematics of the vehicle under a constant current.",
        ),
        &[
            ("param:t0", text("int")),
            ("t0", Scalar::Integer(0)),
            ("param:t_n", text("int")),
            ("t_n", Scalar::Integer(5)),
            ("param:dt", text("real")),
            ("dt", Scalar::Integer(1)),
            ("param:p_desired0", text("vec3")),
            ("p_desired0", Scalar::Vec3([0.0, 0.0, 0.0])),
            ("param:v_desired", text("vec3")),
            ("v_desired", Scalar::Vec3([2.0, 0.0, 0.0])),
            ("param:v_passive", text("vec3")),
            ("v_passive", Scalar::Vec3([0.0, 1.0, 0.0])),
        ],
    ));
    m.blocks.push(with_params(
        block(
            "targets",
            "Survey Targets",
            BlockKind::System,
            "One wanted and one unwanted object near the threshold margin.",
        ),
        &[
            ("param:s_0", text("real")),
            ("s_0", Scalar::Integer(3)),
            ("param:truth_0", text("text")),
            ("truth_0", text("wanted")),
            ("param:s_1", text("real")),
            ("s_1", Scalar::Integer(2)),
            ("param:truth_1", text("text")),
            ("truth_1", text("other")),
        ],
    ));

    // Derivation traces, layer by layer.
    let traces = [
        ("operate_auv", "autonomous_survey"),
        ("classify_targets", "target_recognition"),
        ("vehicle_services", "operate_auv"),
        ("target_classification", "classify_targets"),
        ("movement_control", "vehicle_services"),
        ("vehicle_kinematics", "vehicle_services"),
        ("signal_acquisition", "target_classification"),
        ("mcu", "movement_control"),
        ("deadbeat_mcu", "movement_control"),
        ("classifier", "target_classification"),
        ("threshold_tcu", "target_classification"),
        ("remote_tcu", "target_classification"),
        ("auv_plant", "vehicle_kinematics"),
        ("targets", "signal_acquisition"),
    ];
    for (source, target) in traces {
        m.relations.push(Relation::new(RelationKind::Trace, source, target));
    }

    for (child, parent) in [
        ("deadbeat_mcu", "mcu"),
        ("threshold_tcu", "classifier"),
        ("remote_tcu", "classifier"),
    ] {
        m.relations.push(Relation::new(RelationKind::Inheritance, child, parent));
    }

    // Wiring among the resources, and the operator on the operational layer.
    for (source, target) in [
        ("deadbeat_mcu", "auv_plant"),
        ("deadbeat_mcu", "threshold_tcu"),
        ("deadbeat_mcu", "remote_tcu"),
        ("targets", "threshold_tcu"),
        ("targets", "remote_tcu"),
        ("auv_operator", "operate_auv"),
    ] {
        m.relations.push(Relation::new(RelationKind::Connectivity, source, target));
    }

    // Service decomposition.
    for (whole, part) in [
        ("vehicle_services", "movement_control"),
        ("vehicle_services", "vehicle_kinematics"),
        ("target_classification", "signal_acquisition"),
    ] {
        m.relations.push(Relation::new(RelationKind::Composition, whole, part));
    }

    let view = |name: &str, viewpoint, layer, members: &[&str]| View {
        name: name.to_owned(),
        viewpoint,
        layer,
        members: members.iter().map(|id| Id::new(*id)).collect(),
    };
    m.views.push(view(
        "strategic_taxonomy",
        Viewpoint::Taxonomy,
        Layer::Strategic,
        &["autonomous_survey", "target_recognition"],
    ));
    m.views.push(view(
        "operational_connectivity",
        Viewpoint::Connectivity,
        Layer::Operational,
        &["auv_operator", "classify_targets", "operate_auv"],
    ));
    m.views.push(view(
        "service_taxonomy",
        Viewpoint::Taxonomy,
        Layer::Services,
        &[
            "movement_control",
            "signal_acquisition",
            "target_classification",
            "vehicle_kinematics",
            "vehicle_services",
        ],
    ));
    m.views.push(view(
        "service_structure",
        Viewpoint::Structure,
        Layer::Services,
        &[
            "movement_control",
            "signal_acquisition",
            "target_classification",
            "vehicle_kinematics",
            "vehicle_services",
        ],
    ));
    m.views.push(view(
        "resource_taxonomy",
        Viewpoint::Taxonomy,
        Layer::Resources,
        &[
            "auv_plant",
            "classifier",
            "deadbeat_mcu",
            "mcu",
            "remote_tcu",
            "targets",
            "threshold_tcu",
        ],
    ));

    // Executable behavior for every concrete System block.
    let bind = |block: &str, kind, target: &str, role| BehaviorBinding {
        block_id: Id::new(block),
        kind,
        target: target.to_owned(),
        role,
    };
    m.behaviors.push(bind("auv_plant", BindingKind::Builtin, "plant.auv", Role::Plant));
    m.behaviors.push(bind(
        "deadbeat_mcu",
        BindingKind::Builtin,
        "mcu.deadbeat",
        Role::Controller,
    ));
    m.behaviors.push(bind(
        "threshold_tcu",
        BindingKind::Builtin,
        "tcu.threshold",
        Role::Classifier,
    ));
    m.behaviors.push(bind(
        "remote_tcu",
        BindingKind::Http,
        "http://127.0.0.1:8900/classify",
        Role::Classifier,
    ));
    m.behaviors.push(bind("targets", BindingKind::Builtin, "env.targets", Role::Target));

    m.canonicalize();
    m
}

fn main() {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "atr_reference.json".to_owned());

    let model = atr_reference();
    let diagnostics = validate_reference(&model);
    for d in &diagnostics {
        println!("{d}");
    }
    if !diagnostics.is_empty() {
        std::process::exit(1);
    }

    save_model(&model, &out).expect("saving the model");
    println!(
        "wrote `{}` ({} blocks, {} relations, {} views, {} bindings)",
        out,
        model.blocks.len(),
        model.relations.len(),
        model.views.len(),
        model.behaviors.len()
    );
}
