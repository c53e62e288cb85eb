use serde_json::Value;

use super::{Adapter, Observation, TransportError};
use crate::amos::OperationSpec;

/// A system hosted in the same process.
pub trait Sut {
    fn handle(&mut self, handler: &str, params: Option<&Value>) -> Observation;

    /// Handles a reset key. Returns false for keys the system does not know.
    fn reset(&mut self, key: &str) -> bool;

    /// Advances the system's clock.
    fn advance(&mut self, _ms: u64) {}
}

/// Drives a [`Sut`] directly, routing by the operation's in-process handler
/// name (or its key when no handler is declared).
#[derive(Debug, Clone)]
pub struct InProcessAdapter<S> {
    sut: S,
}

impl<S: Sut> InProcessAdapter<S> {
    pub fn new(sut: S) -> Self {
        InProcessAdapter { sut }
    }

    pub fn sut(&self) -> &S {
        &self.sut
    }

    pub fn sut_mut(&mut self) -> &mut S {
        &mut self.sut
    }

    pub fn into_inner(self) -> S {
        self.sut
    }
}

impl<S: Sut> Adapter for InProcessAdapter<S> {
    fn invoke(&mut self, op: &OperationSpec, params: Option<&Value>) -> Result<Observation, TransportError> {
        let handler = op
            .translation
            .in_process
            .as_ref()
            .map_or(op.key.as_str(), |t| t.handler.as_str());
        Ok(self.sut.handle(handler, params))
    }

    fn reset(&mut self, key: &str) -> Result<(), TransportError> {
        if self.sut.reset(key) {
            Ok(())
        } else {
            Err(TransportError::UnknownReset(key.to_string()))
        }
    }

    fn sleep(&mut self, ms: u64) {
        self.sut.advance(ms);
    }
}
