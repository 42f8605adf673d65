//! Discrete-time simulation kernel: vehicle kinematics under constant
//! drift, a deadbeat correction controller, threshold classification under
//! activation-coupled noise, and false-positive/negative scoring.
//!
//! Time is a unit-stepped natural grid `start_time..=end_time`; velocities
//! are piecewise constant on `[t, t+1)`. The controller is inactive before
//! `activation_time` and from then on sets the active velocity so that the
//! accumulated position deviation is cancelled within one step (deadbeat):
//! once active, `deviation(t) = 0` for all `t >= activation_time + 1`.
//!
//! Everything here is pure and deterministic; identical parameters produce
//! identical results including event order.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

/// A 3-component vector (width, height, depth).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from([x, y, z]: [f64; 3]) -> Self {
        Self { x, y, z }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.x, self.y, self.z)
    }
}

/// When the controller's noise penalty starts affecting classification.
///
/// `AfterActivation` (the default) applies the increased noise strictly
/// after the activation step; `AtActivation` applies it from the activation
/// step on. Both are supported because they disagree on exactly one step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NoiseOnset {
    #[default]
    AfterActivation,
    AtActivation,
}

/// One signal source with its ground truth.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TargetSpec {
    pub index: u32,
    pub strength: f64,
    pub wanted: bool,
}

/// The full run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct SimParams {
    pub start_time: u32,
    /// Step at which the movement controller activates.
    pub activation_time: u32,
    pub end_time: u32,
    pub time_step: f64,
    pub desired_start: Vec3,
    pub desired_velocity: Vec3,
    /// Constant drift acting on the vehicle (for example a current).
    pub passive_velocity: Vec3,
    /// Classification threshold.
    pub threshold: f64,
    /// Background noise while the controller is inactive.
    pub base_noise: f64,
    /// Additional noise caused by the active controller.
    pub noise_increase: f64,
    pub targets: Vec<TargetSpec>,
    pub noise_onset: NoiseOnset,
}

impl SimParams {
    /// Checks the structural invariants: ordered times, a positive finite
    /// step, finite values, and a nonempty target list with contiguous
    /// indices starting at 0.
    pub fn validate(&self) -> Result<(), SimError> {
        let fail = |msg: String| Err(SimError::Params(msg));
        if !(self.start_time <= self.activation_time && self.activation_time <= self.end_time) {
            return fail(format!(
                "times must satisfy start <= activation <= end, got {} / {} / {}",
                self.start_time, self.activation_time, self.end_time
            ));
        }
        if !(self.time_step > 0.0 && self.time_step.is_finite()) {
            return fail(format!("time_step must be positive and finite, got {}", self.time_step));
        }
        for (name, v) in [
            ("desired_start", self.desired_start),
            ("desired_velocity", self.desired_velocity),
            ("passive_velocity", self.passive_velocity),
        ] {
            if !v.is_finite() {
                return fail(format!("{name} must be finite"));
            }
        }
        for (name, s) in [
            ("threshold", self.threshold),
            ("base_noise", self.base_noise),
            ("noise_increase", self.noise_increase),
        ] {
            if !s.is_finite() {
                return fail(format!("{name} must be finite, got {s}"));
            }
        }
        if self.targets.is_empty() {
            return fail("at least one target is required".into());
        }
        let mut indices: Vec<u32> = self.targets.iter().map(|t| t.index).collect();
        indices.sort_unstable();
        if indices.iter().enumerate().any(|(i, &j)| j != i as u32) {
            return fail(format!("target indices must be 0..{} contiguous", self.targets.len() - 1));
        }
        if self.targets.iter().any(|t| !t.strength.is_finite()) {
            return fail("target strengths must be finite".into());
        }
        Ok(())
    }
}

/// Snapshot of the vehicle at one step. The recorded velocities are the
/// ones applied on the interval starting at `time`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimState {
    pub time: u32,
    pub desired_position: Vec3,
    pub actual_position: Vec3,
    /// Always `actual_position - desired_position`.
    pub deviation: Vec3,
    pub active_velocity: Vec3,
    /// Always `active_velocity + passive_velocity`.
    pub actual_velocity: Vec3,
}

/// A classifier's verdict for one signal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    Wanted,
    Other,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Wanted => "wanted",
            Decision::Other => "other",
        })
    }
}

/// Decision versus ground truth.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Correct,
    /// An unwanted target classified as wanted.
    FalsePositive,
    /// A wanted target classified as other.
    FalseNegative,
}

/// One classification event.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Classification {
    pub time: u32,
    pub target: u32,
    pub strength: f64,
    pub noise: f64,
    pub decision: Decision,
    pub wanted: bool,
    pub outcome: Outcome,
}

impl Classification {
    fn from_decision(time: u32, target: &TargetSpec, noise: f64, decision: Decision) -> Self {
        let outcome = match (decision, target.wanted) {
            (Decision::Wanted, false) => Outcome::FalsePositive,
            (Decision::Other, true) => Outcome::FalseNegative,
            _ => Outcome::Correct,
        };
        Self {
            time,
            target: target.index,
            strength: target.strength,
            noise,
            decision,
            wanted: target.wanted,
            outcome,
        }
    }
}

/// State snapshot plus the classification of every target at that step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub state: SimState,
    pub classifications: Vec<Classification>,
}

/// Aggregated classification errors over a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ScoreReport {
    pub false_positives: u32,
    pub false_negatives: u32,
    pub first_false_positive: Option<u32>,
    pub first_false_negative: Option<u32>,
}

/// Per-step records plus the final score.
#[derive(Clone, Debug, PartialEq)]
pub struct SimResult {
    pub steps: Vec<StepRecord>,
    pub report: ScoreReport,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation parameters: {0}")]
    Params(String),
    #[error("classifier failed at t={time}: {reason}")]
    Classifier { time: u32, reason: String },
}

/// Receives run events in step order on the caller's thread.
pub trait EventSink {
    fn on_step(&mut self, _record: &StepRecord) {}
    fn on_report(&mut self, _report: &ScoreReport) {}
}

/// Sink that discards everything.
pub struct NullSink;

impl EventSink for NullSink {}

/// One classification query as seen by a pluggable classifier.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassifyQuery {
    pub time: u32,
    pub target: u32,
    pub strength: f64,
    pub noise: f64,
    pub threshold: f64,
}

/// A pluggable decision source. The kernel computes noise and ground truth;
/// the classifier only turns evidence into a decision.
pub trait TargetClassifier {
    fn decide(&mut self, query: &ClassifyQuery) -> Result<Decision, ClassifierFault>;
}

/// Failure reported by an external classifier.
#[derive(Debug)]
pub struct ClassifierFault(pub String);

/// The built-in rule: wanted iff `strength + noise >= threshold`. Ties
/// classify as wanted.
pub struct ThresholdClassifier;

impl TargetClassifier for ThresholdClassifier {
    fn decide(&mut self, query: &ClassifyQuery) -> Result<Decision, ClassifierFault> {
        Ok(if query.strength + query.noise >= query.threshold {
            Decision::Wanted
        } else {
            Decision::Other
        })
    }
}

/// Where the vehicle is supposed to be at step `t`: the start position plus
/// the desired velocity integrated over the elapsed steps.
pub fn desired_position(params: &SimParams, t: u32) -> Vec3 {
    assert!(
        params.start_time <= t && t <= params.end_time,
        "t={t} outside the simulation range"
    );
    params.desired_start
        + params.desired_velocity * ((t - params.start_time) as f64 * params.time_step)
}

/// The controller's commanded velocity for the interval starting at `t`.
/// Before activation it is the desired velocity; from activation on it also
/// cancels the drift and the observed deviation within one step.
pub fn active_velocity(params: &SimParams, t: u32, deviation: Vec3) -> Vec3 {
    if t < params.activation_time {
        params.desired_velocity
    } else {
        params.desired_velocity - params.passive_velocity - deviation * (1.0 / params.time_step)
    }
}

/// Background noise level at step `t` under the configured onset policy.
pub fn noise_at(params: &SimParams, t: u32) -> f64 {
    let raised = match params.noise_onset {
        NoiseOnset::AtActivation => t >= params.activation_time,
        NoiseOnset::AfterActivation => t > params.activation_time,
    };
    if raised {
        params.base_noise + params.noise_increase
    } else {
        params.base_noise
    }
}

/// Classifies one target at step `t` with the built-in threshold rule.
pub fn classify(params: &SimParams, t: u32, target: &TargetSpec) -> Classification {
    let noise = noise_at(params, t);
    let decision = if target.strength + noise >= params.threshold {
        Decision::Wanted
    } else {
        Decision::Other
    };
    Classification::from_decision(t, target, noise, decision)
}

/// The state at the start of a run: the vehicle sits on its desired start
/// position with zero deviation.
pub fn initial_state(params: &SimParams) -> SimState {
    observe(params, params.start_time, params.desired_start, Vec3::ZERO)
}

fn observe(params: &SimParams, t: u32, actual: Vec3, deviation: Vec3) -> SimState {
    let active = active_velocity(params, t, deviation);
    SimState {
        time: t,
        desired_position: desired_position(params, t),
        actual_position: actual,
        deviation,
        active_velocity: active,
        actual_velocity: active + params.passive_velocity,
    }
}

/// Advances the state by one step. The velocities applied on `[t, t+1)` are
/// recomputed from the observed deviation at `t` and recorded in the
/// returned state.
pub fn step(params: &SimParams, state: &SimState) -> SimState {
    assert!(state.time < params.end_time, "cannot step past the end of the run");
    let active = active_velocity(params, state.time, state.deviation);
    let actual_velocity = active + params.passive_velocity;
    let t = state.time + 1;
    let actual_position = state.actual_position + actual_velocity * params.time_step;
    let desired = desired_position(params, t);
    SimState {
        time: t,
        desired_position: desired,
        actual_position,
        deviation: actual_position - desired,
        active_velocity: active,
        actual_velocity,
    }
}

/// Counts false positives/negatives over recorded steps and the first step
/// at which each occurred.
pub fn score(steps: &[StepRecord]) -> ScoreReport {
    let mut report = ScoreReport::default();
    for record in steps {
        for c in &record.classifications {
            match c.outcome {
                Outcome::FalsePositive => {
                    report.false_positives += 1;
                    report.first_false_positive.get_or_insert(c.time);
                }
                Outcome::FalseNegative => {
                    report.false_negatives += 1;
                    report.first_false_negative.get_or_insert(c.time);
                }
                Outcome::Correct => {}
            }
        }
    }
    report
}

/// Runs the simulation with the built-in threshold classifier.
///
/// Iterates `t = start..=end`; at each step the deviation is observed, the
/// velocities for the coming interval are computed, every target is
/// classified, the record is emitted to the sink, and the state advances.
/// The final report aggregates all classification errors.
pub fn run_simulation(params: &SimParams, sink: &mut dyn EventSink) -> Result<SimResult, SimError> {
    run_with_classifier(params, &mut ThresholdClassifier, sink)
}

/// Runs the simulation with a pluggable classifier (for external decision
/// hooks). A classifier fault aborts the run with the failing step index.
pub fn run_with_classifier(
    params: &SimParams,
    classifier: &mut dyn TargetClassifier,
    sink: &mut dyn EventSink,
) -> Result<SimResult, SimError> {
    params.validate()?;
    let mut steps = Vec::with_capacity((params.end_time - params.start_time + 1) as usize);
    let mut state = initial_state(params);
    loop {
        let current = observe(params, state.time, state.actual_position, state.deviation);
        let mut classifications = Vec::with_capacity(params.targets.len());
        for target in &params.targets {
            let noise = noise_at(params, current.time);
            let decision = classifier
                .decide(&ClassifyQuery {
                    time: current.time,
                    target: target.index,
                    strength: target.strength,
                    noise,
                    threshold: params.threshold,
                })
                .map_err(|fault| SimError::Classifier {
                    time: current.time,
                    reason: fault.0,
                })?;
            classifications.push(Classification::from_decision(
                current.time,
                target,
                noise,
                decision,
            ));
        }
        let record = StepRecord {
            state: current,
            classifications,
        };
        sink.on_step(&record);
        steps.push(record);
        if state.time == params.end_time {
            break;
        }
        state = step(params, &state);
    }
    let report = score(&steps);
    sink.on_report(&report);
    Ok(SimResult { steps, report })
}
