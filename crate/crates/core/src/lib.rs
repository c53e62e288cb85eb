//! Black-box exploration of API behaviour.
//!
//! The explorer generates sequences of abstract operations, executes them
//! against a system through an adapter, keeps the sequences that exhibit one
//! of seven general meta-properties, and shrinks those to minimal examples.
//! Operations are described by an [`amos::Amos`] catalogue that carries no
//! behavioural information of its own.

pub mod amos;
pub mod bench;
pub mod executor;
pub mod explorer;
pub mod genseq;
pub mod metaprops;
pub mod openapi;
pub mod refsut;
pub mod report;
pub mod rng;
pub mod shrinker;
pub mod value;

/// Catalogues and documents shipped with the crate.
pub mod fixtures {
    pub const PERSONS_AMOS: &str = include_str!("../fixtures/persons.amos.json");
    pub const GROUPS_AMOS: &str = include_str!("../fixtures/groups.amos.json");
    pub const GROUPS_OPENAPI: &str = include_str!("../fixtures/groups.openapi.json");
}

pub use amos::{Amos, OperationSpec, ParamSchema};
pub use executor::{Adapter, ExecutionTrace, Observation};
pub use explorer::{explore, ExplorationConfig, ExplorationResult, GeneratedExample};
pub use genseq::{CandidateSequence, ModePolicy, Param, SymbolicRef};
pub use metaprops::{MetaPropertyId, QueryContext};
