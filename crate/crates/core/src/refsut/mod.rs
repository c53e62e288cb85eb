//! Reference systems used for exploration: a persons registry in three
//! variants and a groups service with paging and asynchronous deletion.
//! All time is simulated, so asynchronous effects are deterministic.

mod groups;
mod persons;
mod server;

use std::str::FromStr;

use serde_json::Value;
use thiserror::Error;

use crate::executor::{Observation, Sut};

pub use groups::{GroupsConfig, GroupsSut};
pub use persons::{PersonsSut, PersonsVariant};
pub use server::SutServer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SutId {
    Persons(PersonsVariant),
    Groups,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown reference system `{0}`; expected persons-v1, persons-v2, persons-v3 or groups")]
pub struct UnknownSut(pub String);

impl FromStr for SutId {
    type Err = UnknownSut;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "persons-v1" => SutId::Persons(PersonsVariant::V1),
            "persons-v2" => SutId::Persons(PersonsVariant::V2),
            "persons-v3" => SutId::Persons(PersonsVariant::V3),
            "groups" => SutId::Groups,
            other => return Err(UnknownSut(other.to_string())),
        })
    }
}

impl SutId {
    pub fn as_str(self) -> &'static str {
        match self {
            SutId::Persons(v) => v.id(),
            SutId::Groups => "groups",
        }
    }
}

/// Any of the reference systems.
#[derive(Debug, Clone)]
pub enum AnySut {
    Persons(PersonsSut),
    Groups(GroupsSut),
}

impl AnySut {
    pub fn new(id: SutId, groups: GroupsConfig) -> Self {
        match id {
            SutId::Persons(v) => AnySut::Persons(PersonsSut::new(v)),
            SutId::Groups => AnySut::Groups(GroupsSut::new(groups)),
        }
    }

    pub fn id(&self) -> SutId {
        match self {
            AnySut::Persons(p) => SutId::Persons(p.variant()),
            AnySut::Groups(_) => SutId::Groups,
        }
    }
}

impl Sut for AnySut {
    fn handle(&mut self, handler: &str, params: Option<&Value>) -> Observation {
        match self {
            AnySut::Persons(s) => s.handle(handler, params),
            AnySut::Groups(s) => s.handle(handler, params),
        }
    }

    fn reset(&mut self, key: &str) -> bool {
        match self {
            AnySut::Persons(s) => s.reset(key),
            AnySut::Groups(s) => s.reset(key),
        }
    }

    fn advance(&mut self, ms: u64) {
        match self {
            AnySut::Persons(s) => s.advance(ms),
            AnySut::Groups(s) => s.advance(ms),
        }
    }
}
