//! The seven meta-properties, the sequence shapes they require, and their
//! evaluation over execution traces.

use std::cell::{OnceCell, RefCell};
use std::fmt;
use std::str::FromStr;

use flate2::{Compress, Compression, FlushCompress, Status};
use serde_json::Value;
use thiserror::Error;

use crate::executor::ExecutionTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MetaPropertyId {
    /// Response equality: the same call repeated gives the same response.
    MpR1,
    /// Response inequality: a call gives a different response after other
    /// calls were made.
    MpR2,
    /// State identity without any observed change.
    MpS1,
    /// State mutation.
    MpS2,
    /// State identity with an observed change along the way.
    MpS3,
    /// State mutation where the state grew.
    MpS4,
    /// State mutation where the state shrank, after a setup prefix.
    MpS5,
}

impl MetaPropertyId {
    pub const ALL: [MetaPropertyId; 7] = [
        MetaPropertyId::MpR1,
        MetaPropertyId::MpR2,
        MetaPropertyId::MpS1,
        MetaPropertyId::MpS2,
        MetaPropertyId::MpS3,
        MetaPropertyId::MpS4,
        MetaPropertyId::MpS5,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetaPropertyId::MpR1 => "MP-R-1",
            MetaPropertyId::MpR2 => "MP-R-2",
            MetaPropertyId::MpS1 => "MP-S-1",
            MetaPropertyId::MpS2 => "MP-S-2",
            MetaPropertyId::MpS3 => "MP-S-3",
            MetaPropertyId::MpS4 => "MP-S-4",
            MetaPropertyId::MpS5 => "MP-S-5",
        }
    }

    pub fn is_state_based(self) -> bool {
        !matches!(self, MetaPropertyId::MpR1 | MetaPropertyId::MpR2)
    }
}

impl fmt::Display for MetaPropertyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown meta-property `{0}`; valid ids are MP-R-1, MP-R-2, MP-S-1, MP-S-2, MP-S-3, MP-S-4, MP-S-5")]
pub struct UnknownMetaProperty(pub String);

impl FromStr for MetaPropertyId {
    type Err = UnknownMetaProperty;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MetaPropertyId::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| UnknownMetaProperty(s.to_string()))
    }
}

/// Structural constraint a candidate must satisfy for a property.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Shape {
    /// All steps are the same operation with the same parameters.
    Repeated,
    /// First and last steps identical, free steps in between.
    Bracketed,
    /// Free body, instrumented with state observations. `setup` demands a
    /// non-empty leading setup prefix.
    Free { setup: bool },
}

impl Shape {
    /// Minimum number of steps in a candidate of this shape.
    pub fn min_len(self) -> usize {
        match self {
            Shape::Repeated | Shape::Bracketed => 2,
            Shape::Free { setup: false } => 1,
            Shape::Free { setup: true } => 2,
        }
    }

    pub fn instrumented(self) -> bool {
        matches!(self, Shape::Free { .. })
    }
}

pub fn shape_constraints(prop: MetaPropertyId) -> Shape {
    match prop {
        MetaPropertyId::MpR1 => Shape::Repeated,
        MetaPropertyId::MpR2 => Shape::Bracketed,
        MetaPropertyId::MpS5 => Shape::Free { setup: true },
        _ => Shape::Free { setup: false },
    }
}

/// Designates the operation used to observe state.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryContext {
    pub query_op: String,
    pub query_params: Option<Value>,
}

impl QueryContext {
    pub fn new(query_op: impl Into<String>) -> Self {
        QueryContext {
            query_op: query_op.into(),
            query_params: None,
        }
    }
}

/// Outcome of one invocation: status code plus canonical body bytes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Observation {
    pub status: u16,
    pub body: Vec<u8>,
}

impl Observation {
    /// Builds an observation from a JSON body, canonicalizing it.
    pub fn json(status: u16, body: &Value) -> Self {
        Observation {
            status,
            body: crate::value::canonical_json(body).into_bytes(),
        }
    }

    pub fn from_raw(status: u16, raw: &[u8]) -> Self {
        Observation {
            status,
            body: crate::value::canonical_body(raw),
        }
    }

    pub fn body_value(&self) -> Value {
        if self.body.is_empty() {
            return Value::Null;
        }
        serde_json::from_slice(&self.body)
            .unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&self.body).into_owned()))
    }

    pub fn is_success(&self) -> bool {
        (200..300).contains(&self.status)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSnapshot {
    pub observation: Observation,
    size: OnceCell<u64>,
}

impl StateSnapshot {
    pub fn new(observation: Observation) -> Self {
        StateSnapshot {
            observation,
            size: OnceCell::new(),
        }
    }

    /// `state_size` of the body, computed on first use: only the
    /// size-comparing properties need it.
    pub fn size(&self) -> u64 {
        *self.size.get_or_init(|| state_size(&self.observation.body))
    }
}

/// Bytes a gzip member adds around the deflate stream when it carries no
/// optional fields: 10-byte header plus CRC-32 and length trailer.
const GZIP_FRAMING: u64 = 18;

thread_local! {
    static DEFLATE: RefCell<Compress> = RefCell::new(Compress::new(Compression::new(6), false));
}

/// Gzip-compressed length of `body` under a fixed configuration: level 6,
/// no file name or comment, zero timestamp, unknown OS byte.
///
/// The header has a fixed length under that configuration, so only the
/// deflate stream is produced; the compressor is reused per thread.
pub fn state_size(body: &[u8]) -> u64 {
    DEFLATE.with(|c| {
        let mut c = c.borrow_mut();
        c.reset();
        let mut sink = [0u8; 4096];
        loop {
            let consumed = c.total_in() as usize;
            let status = c
                .compress(&body[consumed..], &mut sink, FlushCompress::Finish)
                .expect("deflate into a buffer cannot fail");
            if status == Status::StreamEnd {
                break;
            }
        }
        GZIP_FRAMING + c.total_out()
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("{0} needs a query context")]
    MissingQueryContext(MetaPropertyId),
    #[error("trace has {found} snapshots, expected {expected}")]
    MissingSnapshots { expected: usize, found: usize },
}

/// Decides whether `trace` exhibits `prop`. Aborted traces never conform.
pub fn evaluate(
    prop: MetaPropertyId,
    trace: &ExecutionTrace,
    ctx: Option<&QueryContext>,
) -> Result<bool, EvalError> {
    if trace.error.is_some() {
        return Ok(false);
    }
    let obs: Vec<&Observation> = trace.steps.iter().map(|s| &s.observation).collect();
    match prop {
        MetaPropertyId::MpR1 => Ok(obs.len() >= 2 && obs.windows(2).all(|w| w[0] == w[1])),
        MetaPropertyId::MpR2 => Ok(obs.len() >= 2 && obs[0] != obs[obs.len() - 1]),
        _ => {
            if ctx.is_none() {
                return Err(EvalError::MissingQueryContext(prop));
            }
            let expected = trace.steps.len() + 1;
            let snaps = match &trace.snapshots {
                Some(s) if s.len() == expected => s,
                other => {
                    return Err(EvalError::MissingSnapshots {
                        expected,
                        found: other.as_ref().map_or(0, |s| s.len()),
                    })
                }
            };
            Ok(evaluate_snapshots(prop, snaps, trace.setup_len))
        }
    }
}

/// State-based evaluation over `N + 1` snapshots.
pub fn evaluate_snapshots(prop: MetaPropertyId, snaps: &[StateSnapshot], setup_len: usize) -> bool {
    let Some(last) = snaps.last() else {
        return false;
    };
    let first = &snaps[0];
    let changed = last.observation != first.observation;
    match prop {
        MetaPropertyId::MpS1 => snaps.iter().all(|s| s.observation == first.observation),
        MetaPropertyId::MpS2 => changed,
        MetaPropertyId::MpS3 => {
            !changed && snaps[1..snaps.len() - 1].iter().any(|s| s.observation != first.observation)
        }
        MetaPropertyId::MpS4 => changed && last.size() > first.size(),
        MetaPropertyId::MpS5 => {
            if setup_len == 0 || setup_len >= snaps.len() - 1 {
                return false;
            }
            let base = &snaps[setup_len];
            last.observation != base.observation && last.size() < base.size()
        }
        MetaPropertyId::MpR1 | MetaPropertyId::MpR2 => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn snap(body: &str) -> StateSnapshot {
        StateSnapshot::new(Observation::from_raw(200, body.as_bytes()))
    }

    #[test]
    fn ids_round_trip_through_text() {
        for p in MetaPropertyId::ALL {
            assert_eq!(p.as_str().parse::<MetaPropertyId>().unwrap(), p);
        }
        assert!("MP-X-9".parse::<MetaPropertyId>().is_err());
    }

    #[test]
    fn shapes() {
        assert_eq!(shape_constraints(MetaPropertyId::MpR1), Shape::Repeated);
        assert_eq!(shape_constraints(MetaPropertyId::MpR1).min_len(), 2);
        assert_eq!(shape_constraints(MetaPropertyId::MpR2), Shape::Bracketed);
        assert_eq!(shape_constraints(MetaPropertyId::MpS5), Shape::Free { setup: true });
        assert_eq!(shape_constraints(MetaPropertyId::MpS3).min_len(), 1);
    }

    #[test]
    fn empty_body_gzip_size_is_pinned() {
        // 10-byte header + 2-byte empty deflate block + 8-byte trailer.
        assert_eq!(state_size(b""), 20);
    }

    #[test]
    fn state_size_matches_a_full_gzip_encoding() {
        use flate2::GzBuilder;
        use std::io::Write;

        let mut rng = crate::rng::Rng::new(9);
        for len in [0, 1, 17, 300, 5000, 70_000] {
            let body: Vec<u8> = (0..len).map(|_| b"ab{}[]\":,0123"[rng.below(13)]).collect();
            let mut enc = GzBuilder::new()
                .mtime(0)
                .operating_system(255)
                .write(Vec::new(), Compression::new(6));
            enc.write_all(&body).unwrap();
            assert_eq!(state_size(&body), enc.finish().unwrap().len() as u64, "{len} bytes");
        }
    }

    #[test]
    fn state_size_is_deterministic_and_tracks_entropy() {
        let body = br#"[{"id":1,"name":"x"}]"#;
        assert_eq!(state_size(body), state_size(body));
        let repeated = vec![b'q'; 1000];
        let mut rng = crate::rng::Rng::new(5);
        let noisy: Vec<u8> = (0..1000).map(|_| b"abcdefghijklmnopqrstuvwxyz0123456789"[rng.below(36)]).collect();
        assert!(state_size(&repeated) < state_size(&noisy));
    }

    #[test]
    fn mp_s3_needs_an_intermediate_change() {
        let s = snap("[]");
        let s2 = snap(r#"[{"name":""}]"#);
        assert!(evaluate_snapshots(MetaPropertyId::MpS3, &[s.clone(), s2, s.clone()], 0));
        assert!(!evaluate_snapshots(MetaPropertyId::MpS3, &[s.clone(), s.clone(), s.clone()], 0));
        assert!(evaluate_snapshots(MetaPropertyId::MpS1, &[s.clone(), s.clone(), s], 0));
    }

    #[test]
    fn mp_s4_strict_increase() {
        let a = StateSnapshot {
            observation: Observation::json(200, &json!([])),
            size: 10.into(),
        };
        let b = StateSnapshot {
            observation: Observation::json(200, &json!([1])),
            size: 14.into(),
        };
        assert!(evaluate_snapshots(MetaPropertyId::MpS4, &[a.clone(), b.clone()], 0));
        assert!(evaluate_snapshots(MetaPropertyId::MpS2, &[a.clone(), b.clone()], 0));
        assert!(!evaluate_snapshots(MetaPropertyId::MpS4, &[b, a], 0));
    }

    #[test]
    fn mp_s5_measures_from_setup_end() {
        let empty = snap("[]");
        let one = snap(r#"[{"name":"abc","age":3}]"#);
        // setup adds a person, body removes it
        let snaps = [empty.clone(), one.clone(), empty.clone()];
        assert!(evaluate_snapshots(MetaPropertyId::MpS5, &snaps, 1));
        assert!(!evaluate_snapshots(MetaPropertyId::MpS5, &snaps, 0));
        assert!(!evaluate_snapshots(MetaPropertyId::MpS5, &[empty.clone(), one.clone(), one], 1));
    }
}
