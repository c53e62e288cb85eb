use std::collections::BTreeMap;

use serde_json::{json, Value};

use crate::executor::{Observation, Sut};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PersonsVariant {
    /// Posting overwrites an existing person of the same name.
    V1,
    /// Posting a name that exists fails.
    V2,
    /// As V2, and a person must be older than 64 with a non-empty name.
    V3,
}

impl PersonsVariant {
    pub fn id(self) -> &'static str {
        match self {
            PersonsVariant::V1 => "persons-v1",
            PersonsVariant::V2 => "persons-v2",
            PersonsVariant::V3 => "persons-v3",
        }
    }

    pub fn accepts(self, name: &str, age: i64) -> bool {
        match self {
            PersonsVariant::V3 => age > 64 && !name.is_empty(),
            _ => true,
        }
    }
}

/// In-memory person registry indexed by name.
#[derive(Debug, Clone)]
pub struct PersonsSut {
    variant: PersonsVariant,
    store: BTreeMap<String, Value>,
    requests: u64,
}

fn failure(status: u16, reason: &str) -> Observation {
    Observation::json(status, &json!({ "reason": reason }))
}

impl PersonsSut {
    pub fn new(variant: PersonsVariant) -> Self {
        PersonsSut {
            variant,
            store: BTreeMap::new(),
            requests: 0,
        }
    }

    pub fn variant(&self) -> PersonsVariant {
        self.variant
    }

    pub fn requests(&self) -> u64 {
        self.requests
    }

    pub fn len(&self) -> usize {
        self.store.len()
    }

    pub fn is_empty(&self) -> bool {
        self.store.is_empty()
    }

    fn post(&mut self, params: Option<&Value>) -> Observation {
        let Some(person) = params.filter(|p| p.is_object()) else {
            return failure(400, "malformed person");
        };
        let (Some(name), Some(age)) = (
            person.get("name").and_then(Value::as_str),
            person.get("age").and_then(Value::as_i64),
        ) else {
            return failure(400, "malformed person");
        };
        if !self.variant.accepts(name, age) {
            return failure(422, "invalid person");
        }
        if self.variant != PersonsVariant::V1 && self.store.contains_key(name) {
            return failure(409, "person already exists");
        }
        self.store.insert(name.to_string(), person.clone());
        Observation::json(201, &json!({ "message": "person added" }))
    }

    fn get(&self) -> Observation {
        Observation::json(200, &Value::Array(self.store.values().cloned().collect()))
    }

    fn delete(&mut self, params: Option<&Value>) -> Observation {
        let Some(name) = params.and_then(|p| p.get("name")).and_then(Value::as_str) else {
            return failure(400, "malformed request");
        };
        self.store.remove(name);
        Observation::json(200, &json!({ "message": "person deleted" }))
    }
}

impl Sut for PersonsSut {
    fn handle(&mut self, handler: &str, params: Option<&Value>) -> Observation {
        self.requests += 1;
        match handler {
            "post-person" => self.post(params),
            "get-persons" => self.get(),
            "delete-person" => self.delete(params),
            _ => failure(404, "unknown operation"),
        }
    }

    fn reset(&mut self, key: &str) -> bool {
        if key != "reset" {
            return false;
        }
        self.requests += 1;
        self.store.clear();
        true
    }
}
