use std::collections::BTreeMap;

use serde_json::{json, Value};

use crate::executor::{Observation, Sut};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupsConfig {
    /// Simulated time between a delete request and the entity disappearing.
    pub async_delete_latency_ms: u64,
    pub page_size: usize,
    /// Simulated time consumed by each request.
    pub request_ms: u64,
}

impl Default for GroupsConfig {
    fn default() -> Self {
        GroupsConfig {
            async_delete_latency_ms: 0,
            page_size: 20,
            request_ms: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Group {
    name: String,
    path: String,
    /// Simulated time at which a pending deletion takes effect.
    removal_at: Option<u64>,
}

/// Group registry with duplicate rejection, paging and asynchronous
/// deletion on a simulated clock. Ids increase and are never reused.
#[derive(Debug, Clone)]
pub struct GroupsSut {
    cfg: GroupsConfig,
    clock: u64,
    next_id: u64,
    groups: BTreeMap<u64, Group>,
    requests: u64,
}

fn failure(status: u16, reason: &str) -> Observation {
    Observation::json(status, &json!({ "reason": reason }))
}

impl GroupsSut {
    pub fn new(cfg: GroupsConfig) -> Self {
        GroupsSut {
            cfg,
            clock: 0,
            next_id: 1,
            groups: BTreeMap::new(),
            requests: 0,
        }
    }

    pub fn config(&self) -> GroupsConfig {
        self.cfg
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn requests(&self) -> u64 {
        self.requests
    }

    /// Number of entities currently listed, including pending deletions.
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Creates `n` groups directly, bypassing the request path.
    pub fn seed_groups(&mut self, n: usize) {
        for i in 0..n {
            let id = self.next_id;
            self.next_id += 1;
            self.groups.insert(
                id,
                Group {
                    name: format!("seed-{i}"),
                    path: format!("seed-{i}"),
                    removal_at: None,
                },
            );
        }
    }

    fn settle(&mut self) {
        let now = self.clock;
        self.groups.retain(|_, g| g.removal_at.is_none_or(|t| t > now));
    }

    fn tick(&mut self) {
        self.requests += 1;
        self.clock += self.cfg.request_ms;
        self.settle();
    }

    fn post(&mut self, params: Option<&Value>) -> Observation {
        let field = |k: &str| params.and_then(|p| p.get(k)).and_then(Value::as_str);
        let (Some(name), Some(path)) = (field("name"), field("path")) else {
            return failure(400, "name and path are required");
        };
        if name.is_empty() || path.is_empty() {
            return failure(400, "name and path can't be blank");
        }
        if self.groups.values().any(|g| g.name == name && g.path == path) {
            return failure(400, "has already been taken");
        }
        let id = self.next_id;
        self.next_id += 1;
        self.groups.insert(
            id,
            Group {
                name: name.to_string(),
                path: path.to_string(),
                removal_at: None,
            },
        );
        Observation::json(201, &json!({ "message": "created", "name": name, "path": path }))
    }

    fn get(&self, params: Option<&Value>) -> Observation {
        let page = match params.and_then(|p| p.get("page")) {
            None => 1,
            Some(v) => match v.as_u64() {
                Some(p) if p >= 1 => p as usize,
                _ => return failure(400, "page must be a positive integer"),
            },
        };
        let items: Vec<Value> = self
            .groups
            .iter()
            .skip((page - 1).saturating_mul(self.cfg.page_size))
            .take(self.cfg.page_size)
            .map(|(id, g)| json!({ "id": id, "name": g.name, "path": g.path }))
            .collect();
        Observation::json(200, &Value::Array(items))
    }

    fn delete(&mut self, params: Option<&Value>) -> Observation {
        let Some(id) = params.and_then(|p| p.get("id")).and_then(Value::as_u64) else {
            return failure(400, "id is required");
        };
        let at = self.clock + self.cfg.async_delete_latency_ms;
        match self.groups.get_mut(&id) {
            Some(g) if g.removal_at.is_none() => {
                g.removal_at = Some(at);
                Observation::json(202, &json!({ "message": "202 Accepted" }))
            }
            _ => failure(404, "404 Group Not Found"),
        }
    }
}

impl Sut for GroupsSut {
    fn handle(&mut self, handler: &str, params: Option<&Value>) -> Observation {
        self.tick();
        let obs = match handler {
            "post-groups" => self.post(params),
            "get-groups" => self.get(params),
            "delete-groups" => self.delete(params),
            _ => failure(404, "unknown operation"),
        };
        if self.cfg.async_delete_latency_ms == 0 {
            self.settle();
        }
        obs
    }

    /// Issues a delete for every entity; they disappear after the latency.
    fn reset(&mut self, key: &str) -> bool {
        if key != "reset" {
            return false;
        }
        self.tick();
        let at = self.clock + self.cfg.async_delete_latency_ms;
        for g in self.groups.values_mut() {
            g.removal_at.get_or_insert(at);
        }
        if self.cfg.async_delete_latency_ms == 0 {
            self.settle();
        }
        true
    }

    fn advance(&mut self, ms: u64) {
        self.clock += ms;
        self.settle();
    }
}
