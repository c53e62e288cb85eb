use std::io;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use serde_json::{json, Map, Value};
use tiny_http::{Header, Method, Response, Server};

use super::AnySut;
use crate::executor::{Observation, Sut};

/// Serves a reference system over HTTP on a background thread.
///
/// Routes: `POST /persons`, `GET /persons`, `DELETE /persons/{name}`,
/// `POST /groups`, `GET /groups?page=N`, `DELETE /groups/{id}` and
/// `POST /__reset`.
pub struct SutServer {
    server: Arc<Server>,
    base_url: String,
    sut: Arc<Mutex<AnySut>>,
    thread: Option<JoinHandle<()>>,
}

impl SutServer {
    /// Binds `addr` (use port 0 for an ephemeral port) and starts serving.
    pub fn start(sut: AnySut, addr: &str) -> io::Result<Self> {
        let server = Server::http(addr).map_err(|e| io::Error::other(e.to_string()))?;
        let port = server
            .server_addr()
            .to_ip()
            .map(|a| a.port())
            .ok_or_else(|| io::Error::other("not an ip listener"))?;
        let host = addr.rsplit_once(':').map_or("127.0.0.1", |(h, _)| h);
        let host = if host == "0.0.0.0" { "127.0.0.1" } else { host };
        let server = Arc::new(server);
        let sut = Arc::new(Mutex::new(sut));
        let thread = {
            let server = Arc::clone(&server);
            let sut = Arc::clone(&sut);
            std::thread::spawn(move || serve(&server, &sut))
        };
        Ok(SutServer {
            server,
            base_url: format!("http://{host}:{port}"),
            sut,
            thread: Some(thread),
        })
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    /// Access to the served system, e.g. to seed state.
    pub fn with_sut<R>(&self, f: impl FnOnce(&mut AnySut) -> R) -> R {
        f(&mut self.sut.lock().expect("server thread panicked"))
    }

    /// Blocks until the server thread exits (it only does on shutdown).
    pub fn join(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for SutServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

fn serve(server: &Server, sut: &Mutex<AnySut>) {
    for mut request in server.incoming_requests() {
        let mut raw = Vec::new();
        let obs = match request.as_reader().read_to_end(&mut raw) {
            Ok(_) => {
                let mut sut = sut.lock().expect("handler panicked");
                dispatch(&mut sut, request.method(), request.url(), &raw)
            }
            Err(_) => Observation::json(400, &json!({ "reason": "unreadable body" })),
        };
        let header = Header::from_bytes(&b"Content-Type"[..], &b"application/json"[..]).expect("static header");
        let response = Response::from_data(obs.body).with_status_code(obs.status).with_header(header);
        let _ = request.respond(response);
    }
}

fn not_found() -> Observation {
    Observation::json(404, &json!({ "reason": "no such route" }))
}

fn dispatch(sut: &mut AnySut, method: &Method, url: &str, raw: &[u8]) -> Observation {
    use crate::executor::http_percent_decode as decode;

    let (path, query) = url.split_once('?').unwrap_or((url, ""));
    let mut query_params = Map::new();
    for pair in query.split('&').filter(|p| !p.is_empty()) {
        let (k, v) = pair.split_once('=').unwrap_or((pair, ""));
        let v = decode(v);
        let value = v.parse::<i64>().map(Value::from).unwrap_or(Value::String(v));
        query_params.insert(decode(k), value);
    }
    let body = if raw.is_empty() {
        None
    } else {
        match serde_json::from_slice::<Value>(raw) {
            Ok(v) => Some(v),
            Err(_) => return Observation::json(400, &json!({ "reason": "malformed json" })),
        }
    };
    let segments: Vec<&str> = path.trim_start_matches('/').splitn(2, '/').collect();

    if *method == Method::Post && path.starts_with("/__") {
        return if sut.reset(&decode(&path[3..])) {
            Observation::json(200, &json!({ "message": "reset" }))
        } else {
            not_found()
        };
    }

    let with_query = |body: Option<Value>| -> Option<Value> {
        if query_params.is_empty() {
            return body;
        }
        let mut m = match body {
            Some(Value::Object(m)) => m,
            _ => Map::new(),
        };
        m.extend(query_params.clone());
        Some(Value::Object(m))
    };

    let (collection, handler_prefix) = match (&*sut, segments[0]) {
        (AnySut::Persons(_), "persons") => ("persons", "person"),
        (AnySut::Groups(_), "groups") => ("groups", "groups"),
        _ => return not_found(),
    };
    let item = segments.get(1).copied();
    match (method, item) {
        (Method::Post, None) => sut.handle(&format!("post-{handler_prefix}"), with_query(body).as_ref()),
        (Method::Get, None) => sut.handle(&format!("get-{collection}"), with_query(None).as_ref()),
        (Method::Delete, Some(raw_item)) => {
            let item = decode(raw_item);
            let params = match collection {
                "persons" => json!({ "name": item }),
                _ => match item.parse::<u64>() {
                    Ok(id) => json!({ "id": id }),
                    Err(_) => return not_found(),
                },
            };
            sut.handle(&format!("delete-{handler_prefix}"), Some(&params))
        }
        _ => not_found(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refsut::{GroupsConfig, SutId};

    #[test]
    fn routes_persons() {
        let mut sut = AnySut::new("persons-v2".parse::<SutId>().unwrap(), GroupsConfig::default());
        let post = dispatch(&mut sut, &Method::Post, "/persons", br#"{"name":"x","age":3}"#);
        assert_eq!(post.status, 201);
        let get = dispatch(&mut sut, &Method::Get, "/persons", b"");
        assert_eq!(get.body, br#"[{"age":3,"name":"x"}]"#.to_vec());
        let del = dispatch(&mut sut, &Method::Delete, "/persons/x", b"");
        assert_eq!(del.status, 200);
        assert_eq!(dispatch(&mut sut, &Method::Get, "/persons", b"").body, b"[]".to_vec());
        assert_eq!(dispatch(&mut sut, &Method::Get, "/groups", b"").status, 404);
    }

    #[test]
    fn routes_groups_paging_and_reset() {
        let mut sut = AnySut::new(SutId::Groups, GroupsConfig::default());
        if let AnySut::Groups(g) = &mut sut {
            g.seed_groups(21);
        }
        let p2 = dispatch(&mut sut, &Method::Get, "/groups?page=2", b"");
        assert_eq!(p2.body_value().as_array().unwrap().len(), 1);
        assert_eq!(dispatch(&mut sut, &Method::Delete, "/groups/abc", b"").status, 404);
        assert_eq!(dispatch(&mut sut, &Method::Post, "/__reset", b"").status, 200);
        assert_eq!(dispatch(&mut sut, &Method::Get, "/groups", b"").body, b"[]".to_vec());
    }
}
