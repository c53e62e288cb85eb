//! Runs candidate sequences against a system through an adapter.

mod http;
mod inprocess;

use serde_json::{Map, Value};
use thiserror::Error;

use crate::amos::{conforms, Amos, OperationSpec, Paging};
use crate::genseq::{generate_value, resolve_params, Bindings, CandidateSequence, ResolveError, Source};
use crate::metaprops::StateSnapshot;
use crate::rng::Rng;

pub use self::http::{translate_http, HttpAdapter, TranslateError, WireRequest, DEFAULT_TIMEOUT_MS};
pub use self::inprocess::{InProcessAdapter, Sut};
pub(crate) use self::http::percent_decode as http_percent_decode;
pub use crate::metaprops::Observation;

/// Upper bound on pages fetched for one ranged call.
pub const MAX_PAGES: u64 = 10_000;

/// Failure to talk to the system at all. Error responses from the system
/// are observations, not transport errors.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("cannot reach {0}")]
    Unreachable(String),
    #[error("request timed out: {0}")]
    Timeout(String),
    #[error("transport failure: {0}")]
    Io(String),
    #[error(transparent)]
    Translate(#[from] TranslateError),
    #[error("operation `{0}` has no translation for this adapter")]
    NoTranslation(String),
    #[error("reset key `{0}` is not supported by the adapter")]
    UnknownReset(String),
}

impl TransportError {
    /// Whether a retry could plausibly succeed.
    pub fn is_retriable(&self) -> bool {
        matches!(
            self,
            TransportError::Unreachable(_) | TransportError::Timeout(_) | TransportError::Io(_)
        )
    }
}

pub trait Adapter {
    /// Performs one invocation of `op` with fully concrete parameters.
    fn invoke(&mut self, op: &OperationSpec, params: Option<&Value>) -> Result<Observation, TransportError>;

    /// Passes a reset key that is not itself a catalogue operation.
    fn reset(&mut self, key: &str) -> Result<(), TransportError>;

    /// Waits `ms` milliseconds of the system's time.
    fn sleep(&mut self, ms: u64);
}

impl<A: Adapter + ?Sized> Adapter for &mut A {
    fn invoke(&mut self, op: &OperationSpec, params: Option<&Value>) -> Result<Observation, TransportError> {
        (**self).invoke(op, params)
    }

    fn reset(&mut self, key: &str) -> Result<(), TransportError> {
        (**self).reset(key)
    }

    fn sleep(&mut self, ms: u64) {
        (**self).sleep(ms)
    }
}

impl<A: Adapter + ?Sized> Adapter for Box<A> {
    fn invoke(&mut self, op: &OperationSpec, params: Option<&Value>) -> Result<Observation, TransportError> {
        (**self).invoke(op, params)
    }

    fn reset(&mut self, key: &str) -> Result<(), TransportError> {
        (**self).reset(key)
    }

    fn sleep(&mut self, ms: u64) {
        (**self).sleep(ms)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub op: String,
    pub params: Option<Value>,
    pub observation: Observation,
}

/// Resolution failure that aborted a trace at `step`.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("step {step}: {error}")]
pub struct StepError {
    pub step: usize,
    pub error: ResolveError,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionTrace {
    pub steps: Vec<TraceStep>,
    /// `steps.len() + 1` state observations when instrumented.
    pub snapshots: Option<Vec<StateSnapshot>>,
    pub setup_len: usize,
    pub bindings: Bindings,
    pub error: Option<StepError>,
}

/// Invokes `op`, aggregating pages when it is a ranged operation.
pub fn call_operation(
    adapter: &mut dyn Adapter,
    op: &OperationSpec,
    params: Option<&Value>,
) -> Result<Observation, TransportError> {
    match (&op.annotations.paging, op.annotations.ranged) {
        (Some(paging), true) => fetch_ranged_with(adapter, op, params, paging),
        _ => adapter.invoke(op, params),
    }
}

/// Fetches pages 1, 2, ... until a page comes back shorter than the page
/// size and returns the concatenation. The status is that of page 1.
pub fn fetch_ranged(
    op: &OperationSpec,
    adapter: &mut dyn Adapter,
    params: Option<&Value>,
) -> Result<Observation, TransportError> {
    match &op.annotations.paging {
        Some(paging) => fetch_ranged_with(adapter, op, params, paging),
        None => adapter.invoke(op, params),
    }
}

fn fetch_ranged_with(
    adapter: &mut dyn Adapter,
    op: &OperationSpec,
    params: Option<&Value>,
    paging: &Paging,
) -> Result<Observation, TransportError> {
    let base = match params {
        Some(Value::Object(m)) => m.clone(),
        _ => Map::new(),
    };
    let mut items = Vec::new();
    let mut status = None;
    for page in 1..=MAX_PAGES {
        let mut p = base.clone();
        p.insert(paging.page_param.clone(), Value::from(page));
        let obs = adapter.invoke(op, Some(&Value::Object(p)))?;
        let Value::Array(page_items) = obs.body_value() else {
            // Not a list: nothing (more) to aggregate.
            if page == 1 {
                return Ok(obs);
            }
            break;
        };
        status.get_or_insert(obs.status);
        let short = (page_items.len() as u64) < paging.page_size;
        items.extend(page_items);
        if short {
            break;
        }
    }
    Ok(Observation::json(status.expect("at least one page"), &Value::Array(items)))
}

/// Outcome of a soft reset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResetOutcome {
    Done,
    /// No reset is configured; state carries over between trials.
    NotConfigured,
}

pub const NO_RESET_WARNING: &str =
    "no reset strategy configured: state carries over between trials and examples may not be minimal";

/// Dispatches the catalogue's reset key and waits the configured sleep.
pub fn soft_reset(adapter: &mut dyn Adapter, amos: &Amos) -> Result<ResetOutcome, TransportError> {
    let Some(reset) = &amos.reset else {
        return Ok(ResetOutcome::NotConfigured);
    };
    match amos.operation(&reset.key) {
        Some(op) => {
            call_operation(adapter, op, None)?;
        }
        None => adapter.reset(&reset.key)?,
    }
    if reset.sleep_ms > 0 {
        adapter.sleep(reset.sleep_ms);
    }
    Ok(ResetOutcome::Done)
}

/// Parameters used for the query operation: the context's, or the minimal
/// value of the operation's schema.
pub fn query_params(ctx: &crate::metaprops::QueryContext, amos: &Amos) -> Option<Value> {
    if ctx.query_params.is_some() {
        return ctx.query_params.clone();
    }
    let op = amos.operation(&ctx.query_op)?;
    let schema = op.parameters.as_ref()?;
    generate_value(schema, &mut Rng::new(0), 0, &amos.schemas).ok()
}

fn snapshot(
    adapter: &mut dyn Adapter,
    query: &OperationSpec,
    params: Option<&Value>,
) -> Result<StateSnapshot, TransportError> {
    Ok(StateSnapshot::new(call_operation(adapter, query, params)?))
}

/// Executes `cand` step by step, binding each step's parameters and
/// response. With a query context the state is observed before the first
/// step and after every step.
pub fn execute_candidate(
    cand: &CandidateSequence,
    adapter: &mut dyn Adapter,
    amos: &Amos,
    ctx: Option<&crate::metaprops::QueryContext>,
) -> Result<ExecutionTrace, TransportError> {
    let query = match ctx {
        Some(c) => Some((
            amos.operation(&c.query_op)
                .ok_or_else(|| TransportError::NoTranslation(c.query_op.clone()))?,
            query_params(c, amos),
        )),
        None => None,
    };
    let mut trace = ExecutionTrace {
        steps: Vec::with_capacity(cand.steps.len()),
        snapshots: query.as_ref().map(|_| Vec::with_capacity(cand.steps.len() + 1)),
        setup_len: cand.setup_len,
        bindings: Bindings::default(),
        error: None,
    };
    if let (Some((q, qp)), Some(snaps)) = (&query, trace.snapshots.as_mut()) {
        snaps.push(snapshot(adapter, q, qp.as_ref())?);
    }
    for (i, step) in cand.steps.iter().enumerate() {
        let op = amos
            .operation(&step.op)
            .ok_or_else(|| TransportError::NoTranslation(step.op.clone()))?;
        let params = match &step.params {
            None => None,
            Some(tree) => {
                if let Some(r) = tree.refs().into_iter().find(|r| r.step >= i) {
                    trace.error = Some(StepError {
                        step: i,
                        error: ResolveError::Unbound {
                            step: r.step,
                            origin: r.source,
                        },
                    });
                    break;
                }
                let resolved = resolve_params(tree, &trace.bindings).and_then(|v| {
                    // A reference whose runtime value has the wrong shape
                    // (e.g. an error body) cannot form a request.
                    let fits = match &op.parameters {
                        Some(schema) if !tree.refs().is_empty() => {
                            conforms(&v, schema, &amos.schemas).unwrap_or(false)
                        }
                        _ => true,
                    };
                    if fits {
                        Ok(v)
                    } else {
                        Err(ResolveError::Mismatch { op: op.key.clone() })
                    }
                });
                match resolved {
                    Ok(v) => Some(v),
                    Err(error) => {
                        trace.error = Some(StepError { step: i, error });
                        break;
                    }
                }
            }
        };
        let observation = call_operation(adapter, op, params.as_ref())?;
        if let Some(p) = &params {
            trace.bindings.bind(i, Source::Param, p.clone());
        }
        trace.bindings.bind(i, Source::Response, observation.body_value());
        trace.steps.push(TraceStep {
            op: step.op.clone(),
            params,
            observation,
        });
        if let (Some((q, qp)), Some(snaps)) = (&query, trace.snapshots.as_mut()) {
            snaps.push(snapshot(adapter, q, qp.as_ref())?);
        }
    }
    Ok(trace)
}
