use thiserror::Error;

use crate::potential::PlanePoint;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid potential spec: {0}")]
    InvalidSpec(String),

    #[error("non-finite input point ({u1}, {u2})")]
    NonFinite { u1: f64, u2: f64 },

    #[error("point ({}, {}) is {distance:.3e} from a pole, inside the mollification zone", point.u1, point.u2)]
    InsideMollificationZone { point: PlanePoint, distance: f64 },

    #[error("Newton refinement of the minimum diverged from ({}, {})", start.u1, start.u2)]
    NewtonDiverged { start: PlanePoint },

    #[error(
        "no C0 disk radius qualifies; last tried {radius}: {reason} at ({}, {})",
        sample.u1, sample.u2
    )]
    NoQualifyingC0 {
        radius: f64,
        reason: String,
        sample: PlanePoint,
    },

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("abscissae are not strictly increasing at node {index}")]
    NonMonotoneAbscissae { index: usize },

    #[error("potential vanishes at interior node {index} (W = {value:.3e})")]
    SpuriousMinimum { index: usize, value: f64 },

    #[error("path approaches a pole within {distance:.3e} (mollification radius {radius:.3e})")]
    PoleApproach { distance: f64, radius: f64 },

    #[error("potential vanishes on the open axis segment near u1 = {at}")]
    AxisMinimum { at: f64 },

    #[error("closed-form actions are singular: {0}")]
    SingularParameters(String),

    #[error("no sign change of the action gap in the bracket")]
    NoSignChange { table: Vec<(f64, f64)> },

    #[error("paths cross each other near node {index}")]
    CrossingPaths { index: usize },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("field is not equivariant: max deviation {deviation:.3e}")]
    NotEquivariant { deviation: f64 },

    #[error("energy increased by {increase:.3e} after {stage}")]
    EnergyIncrease { stage: &'static str, increase: f64 },

    #[error("ordering violation: {0}")]
    Ordering(String),

    #[error("missing minimal connections: {0}")]
    MissingConnections(String),

    #[error("blow-up at t = {time}: |u| = {norm} exceeds {limit}")]
    BlowUp { time: f64, norm: f64, limit: f64 },

    #[error("need at least {needed} junction samples after the transient, have {have}")]
    TooFewSamples { needed: usize, have: usize },

    #[error("no bracket for the wave speed: misses {misses:?}")]
    NoSpeedBracket { misses: Vec<(f64, f64)> },

    #[error("mismatched inputs: {0}")]
    Mismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
