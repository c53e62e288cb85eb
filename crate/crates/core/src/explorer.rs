//! The exploration loop: generate, execute, select, shrink, deduplicate.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::amos::{validate_amos, Amos};
use crate::executor::{
    execute_candidate, soft_reset, Adapter, ExecutionTrace, ResetOutcome, TransportError, NO_RESET_WARNING,
};
use crate::genseq::{generate_candidate, CandidateSequence, GenError, ModePolicy, Param, Source, Step};
use crate::metaprops::{evaluate, shape_constraints, MetaPropertyId, QueryContext};
use crate::rng::{derive_seed, Rng};
use crate::shrinker::{shrink_example, ShrinkBudget, ShrinkError};
use crate::value::{format_path, lookup};

/// Trial sizes are drawn from `0..SIZE_LIMIT`.
pub const SIZE_LIMIT: usize = 100;

/// Attempts per trial before a transport failure ends the session.
pub const TRANSPORT_ATTEMPTS: usize = 3;

/// Size for one trial, drawn uniformly from the trial's own stream so that
/// every trial of a session samples the whole size range.
pub fn trial_size(rng: &mut Rng) -> usize {
    rng.below(SIZE_LIMIT)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationConfig {
    pub props: Vec<MetaPropertyId>,
    pub tests_per_iteration: usize,
    pub iterations: usize,
    pub seed: u64,
    pub mode_policy: ModePolicy,
    pub ctx: Option<QueryContext>,
    pub shrink_budget: ShrinkBudget,
}

impl Default for ExplorationConfig {
    fn default() -> Self {
        ExplorationConfig {
            props: vec![MetaPropertyId::MpR1, MetaPropertyId::MpR2],
            tests_per_iteration: 100,
            iterations: 5,
            seed: 0,
            mode_policy: ModePolicy::ReferencesAllowed,
            ctx: None,
            shrink_budget: ShrinkBudget::default(),
        }
    }
}

/// A referenced binding of an example with the value seen when the example
/// was last executed.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolBinding {
    pub symbol: String,
    pub step: usize,
    pub source: Source,
    pub op: String,
    pub sample: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedExample {
    pub prop: MetaPropertyId,
    pub steps: Vec<Step>,
    pub setup_len: usize,
    pub query: Option<QueryContext>,
    pub symbols: Vec<SymbolBinding>,
    pub key: String,
    pub truncated: bool,
}

impl GeneratedExample {
    /// Number of operations shown to a reader, counting the state
    /// observations of state-based properties.
    pub fn reported_len(&self) -> usize {
        if self.prop.is_state_based() {
            2 * self.steps.len() + 1
        } else {
            self.steps.len()
        }
    }

    pub fn symbol_for(&self, step: usize, source: Source) -> Option<&SymbolBinding> {
        self.symbols.iter().find(|s| s.step == step && s.source == source)
    }

    pub fn candidate(&self) -> CandidateSequence {
        CandidateSequence {
            steps: self.steps.clone(),
            shape: shape_constraints(self.prop),
            setup_len: self.setup_len,
        }
    }

    /// The operation a reader should associate the example with.
    pub fn subject(&self) -> &str {
        match &self.query {
            Some(q) => &q.query_op,
            None => self.steps.first().map_or("", |s| s.op.as_str()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropResult {
    pub prop: MetaPropertyId,
    pub examples: Vec<GeneratedExample>,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExplorationResult {
    /// One entry per explored property, in id order.
    pub props: Vec<PropResult>,
    pub warnings: Vec<String>,
}

impl ExplorationResult {
    pub fn examples(&self, prop: MetaPropertyId) -> &[GeneratedExample] {
        self.props
            .iter()
            .find(|p| p.prop == prop)
            .map_or(&[], |p| p.examples.as_slice())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExploreError {
    #[error("{0} needs a query operation")]
    MissingQuery(MetaPropertyId),
    #[error("query operation `{0}` is not in the catalogue")]
    UnknownQuery(String),
    #[error("invalid catalogue: {0}")]
    InvalidAmos(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Generation(#[from] GenError),
    #[error("session error: {0}")]
    Transport(#[from] TransportError),
}

fn structure(p: &Param, out: &mut String) {
    match p {
        Param::Lit(_) => out.push('v'),
        Param::Ref(r) => {
            out.push_str(&format!("r({},{},{})", r.step, r.source.as_str(), format_path(&r.path)));
        }
        Param::Map(m) => {
            out.push('{');
            for (k, v) in m {
                out.push_str(&format!("{k:?}:"));
                structure(v, out);
                out.push(',');
            }
            out.push('}');
        }
        Param::List(l) => {
            out.push('[');
            for v in l {
                structure(v, out);
                out.push(',');
            }
            out.push(']');
        }
    }
}

/// Hash of an example's structure: operation order, literal/reference
/// markers and reference paths. Concrete values do not contribute.
pub fn canonical_key(steps: &[Step], setup_len: usize) -> String {
    let mut s = format!("setup={setup_len};");
    for step in steps {
        s.push_str(&step.op);
        s.push('(');
        if let Some(p) = &step.params {
            structure(p, &mut s);
        }
        s.push_str(");");
    }
    let digest = Sha256::digest(s.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Symbols for every binding the steps refer to, lettered in binding order
/// (a step's parameters bind before its response).
pub fn bind_symbols(steps: &[Step], trace: &ExecutionTrace) -> Vec<SymbolBinding> {
    let referenced: BTreeSet<(usize, Source)> = steps
        .iter()
        .filter_map(|s| s.params.as_ref())
        .flat_map(|p| p.refs().into_iter().map(|r| (r.step, r.source)))
        .collect();
    referenced
        .into_iter()
        .enumerate()
        .map(|(n, (step, source))| SymbolBinding {
            symbol: crate::genseq::symbol_name(n),
            step,
            source,
            op: steps[step].op.clone(),
            sample: trace.bindings.get(step, source).cloned().unwrap_or(Value::Null),
        })
        .collect()
}

/// Value a reference had in the example's sample execution.
pub fn sample_at<'a>(ex: &'a GeneratedExample, r: &crate::genseq::SymbolicRef) -> Option<&'a Value> {
    ex.symbol_for(r.step, r.source).and_then(|s| lookup(&s.sample, &r.path))
}

fn reset_with_retry(adapter: &mut dyn Adapter, amos: &Amos) -> Result<ResetOutcome, TransportError> {
    let mut last = None;
    for _ in 0..TRANSPORT_ATTEMPTS {
        match soft_reset(adapter, amos) {
            Ok(o) => return Ok(o),
            Err(e) if e.is_retriable() => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Resets (when configured) and executes, retrying transport failures.
pub fn run_trial(
    cand: &CandidateSequence,
    adapter: &mut dyn Adapter,
    amos: &Amos,
    ctx: Option<&QueryContext>,
) -> Result<ExecutionTrace, TransportError> {
    let mut last = None;
    for _ in 0..TRANSPORT_ATTEMPTS {
        reset_with_retry(adapter, amos)?;
        match execute_candidate(cand, adapter, amos, ctx) {
            Ok(t) => return Ok(t),
            Err(e) if e.is_retriable() => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

pub fn check_config(amos: &Amos, config: &ExplorationConfig) -> Result<(), ExploreError> {
    let violations = validate_amos(amos);
    if !violations.is_empty() {
        let text: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(ExploreError::InvalidAmos(text.join("; ")));
    }
    if config.tests_per_iteration == 0 || config.iterations == 0 {
        return Err(ExploreError::Config("tests and iterations must be positive".into()));
    }
    if let Some(ctx) = &config.ctx {
        if amos.operation(&ctx.query_op).is_none() {
            return Err(ExploreError::UnknownQuery(ctx.query_op.clone()));
        }
    }
    if let Some(p) = config.props.iter().find(|p| p.is_state_based()) {
        if config.ctx.is_none() {
            return Err(ExploreError::MissingQuery(*p));
        }
    }
    Ok(())
}

/// Runs `iterations` rounds per property. A round ends at the first
/// conforming candidate whose shrunken form is structurally new.
pub fn explore(amos: &Amos, adapter: &mut dyn Adapter, config: &ExplorationConfig) -> Result<ExplorationResult, ExploreError> {
    check_config(amos, config)?;
    let mut result = ExplorationResult::default();
    if amos.reset.is_none() {
        result.warnings.push(NO_RESET_WARNING.to_string());
    }
    let props: BTreeSet<MetaPropertyId> = config.props.iter().copied().collect();
    for prop in props {
        let shape = shape_constraints(prop);
        let ctx = if prop.is_state_based() { config.ctx.as_ref() } else { None };
        let prop_index = MetaPropertyId::ALL.iter().position(|p| *p == prop).expect("listed") as u64;
        let mut known: BTreeMap<String, ()> = BTreeMap::new();
        let mut examples = Vec::new();
        let mut trials = 0;
        for round in 0..config.iterations {
            for t in 0..config.tests_per_iteration {
                trials += 1;
                let mut rng = Rng::new(derive_seed(config.seed, &[prop_index, round as u64, t as u64]));
                let size = trial_size(&mut rng);
                let cand = generate_candidate(amos, shape, &mut rng, size, config.mode_policy)?;
                let trace = run_trial(&cand, adapter, amos, ctx)?;
                if !evaluate(prop, &trace, ctx).unwrap_or(false) {
                    continue;
                }
                let outcome = match shrink_example(&cand, &trace, prop, ctx, adapter, amos, config.shrink_budget) {
                    Ok(o) => o,
                    Err(ShrinkError::NotReproducible) => continue,
                    Err(ShrinkError::Transport(e)) => return Err(e.into()),
                };
                let key = canonical_key(&outcome.candidate.steps, outcome.candidate.setup_len);
                if known.contains_key(&key) {
                    continue;
                }
                known.insert(key.clone(), ());
                examples.push(GeneratedExample {
                    prop,
                    symbols: bind_symbols(&outcome.candidate.steps, &outcome.trace),
                    steps: outcome.candidate.steps,
                    setup_len: outcome.candidate.setup_len,
                    query: ctx.cloned(),
                    key,
                    truncated: outcome.truncated,
                });
                break;
            }
        }
        result.props.push(PropResult { prop, examples, trials });
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genseq::SymbolicRef;
    use serde_json::json;

    fn step(op: &str, params: Option<Value>) -> Step {
        Step {
            op: op.into(),
            params: params.as_ref().map(Param::from_value),
        }
    }

    #[test]
    fn key_ignores_values() {
        let a = [step("get", None), step("post", Some(json!({"name": "x"}))), step("get", None)];
        let b = [step("get", None), step("post", Some(json!({"name": "y"}))), step("get", None)];
        assert_eq!(canonical_key(&a, 0), canonical_key(&b, 0));
    }

    #[test]
    fn key_depends_on_order_and_mode() {
        let pg = [step("post", None), step("get", None)];
        let gp = [step("get", None), step("post", None)];
        assert_ne!(canonical_key(&pg, 0), canonical_key(&gp, 0));
        let lit = [step("get", None), step("delete", Some(json!({"id": 1})))];
        let mut by_ref = lit.clone();
        by_ref[1].params = Some(Param::Map(
            [(
                "id".to_string(),
                Param::Ref(SymbolicRef {
                    step: 0,
                    source: Source::Response,
                    path: vec![],
                }),
            )]
            .into(),
        ));
        assert_ne!(canonical_key(&lit, 0), canonical_key(&by_ref, 0));
    }
}
