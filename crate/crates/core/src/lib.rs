//! Partial-observation supervisory control for discrete-event systems:
//! synthesis of the supremal controllable and relatively observable
//! supervisor, uncertainty-set observers, and localization of the supervisor
//! into one local controller per controllable event.

pub mod dot;
pub mod error;
pub mod fixtures;
pub mod heterarchical;
pub mod io;
pub mod localization;
pub mod model;
pub mod ops;
pub mod partial_obs;
pub mod report;
pub mod synthesis;

pub use error::{Error, Result};
pub use model::{Alphabet, Event, EventId, Generator, GeneratorParts, StateId};
