use thiserror::Error;

use crate::model::EventId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid generator `{name}`: {}", violations.join("; "))]
    InvalidGenerator { name: String, violations: Vec<String> },

    #[error("event {0} has conflicting controllable/observable flags across alphabets")]
    FlagConflict(EventId),

    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    #[error("event {event} is not in the alphabet of `{generator}`")]
    UnknownEvent { event: EventId, generator: String },

    #[error("selfloop on event {event} collides with a non-selfloop transition at state {state}")]
    SelfloopCollision { event: EventId, state: usize },

    #[error("containment precondition violated: {0}")]
    Containment(String),

    #[error("state {state} is not a member of uncertainty set {uset}")]
    NotInUncertaintySet { state: usize, uset: usize },

    #[error("supervisor is not relatively observable: event {event} enabled at state {enabled} and disabled at state {disabled} of uncertainty set {uset}")]
    Lemma1Violation {
        uset: usize,
        enabled: usize,
        disabled: usize,
        event: EventId,
    },

    #[error("supervisor is empty")]
    EmptySupervisor,

    #[error("natural observer check failed: {0}")]
    NotObserver(String),

    #[error("pipeline {stage} `{unit}`: {message}")]
    Pipeline {
        stage: String,
        unit: String,
        message: String,
    },

    #[error("schema error in {context}: {message}")]
    Schema { context: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
