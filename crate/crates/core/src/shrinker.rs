//! Greedy reduction of property-conforming candidates.
//!
//! Each attempt is re-executed from a reset state and kept only if the
//! property still holds. The loop alternates step removal and value
//! simplification until neither makes progress, which leaves a 1-minimal
//! example: no single removal closure and no single listed value shrink
//! preserves the property.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::Value;
use thiserror::Error;

use crate::amos::{resolve, Amos, ParamSchema};
use crate::executor::{execute_candidate, soft_reset, Adapter, ExecutionTrace, TransportError};
use crate::genseq::{check_shape, generate_value, minimal_int, Bindings, CandidateSequence, Param};
use crate::metaprops::{evaluate, MetaPropertyId, QueryContext, Shape};
use crate::rng::Rng;
use crate::value::{value_size, PathStep};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShrinkBudget {
    pub max_reexecutions: usize,
}

impl Default for ShrinkBudget {
    fn default() -> Self {
        ShrinkBudget { max_reexecutions: 500 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkOutcome {
    pub candidate: CandidateSequence,
    /// Execution of `candidate` that last confirmed the property.
    pub trace: ExecutionTrace,
    /// True when the budget ran out before a fixpoint was reached.
    pub truncated: bool,
    pub executions: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShrinkError {
    #[error("the candidate no longer exhibits the property after a reset")]
    NotReproducible,
    #[error(transparent)]
    Transport(#[from] TransportError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("step {0} is pinned by the sequence shape")]
pub struct NotRemovable(pub usize);

fn pinned(cand: &CandidateSequence, index: usize) -> bool {
    match cand.shape {
        Shape::Repeated => true,
        Shape::Bracketed => index == 0 || index + 1 == cand.steps.len(),
        Shape::Free { .. } => false,
    }
}

/// The step at `index` plus every later step that refers, directly or
/// transitively, to a step in the set.
pub fn removal_closure(cand: &CandidateSequence, index: usize) -> Result<BTreeSet<usize>, NotRemovable> {
    closure_of(cand, [index])
}

fn closure_of(cand: &CandidateSequence, seeds: impl IntoIterator<Item = usize>) -> Result<BTreeSet<usize>, NotRemovable> {
    let mut set: BTreeSet<usize> = seeds.into_iter().collect();
    if let Some(&p) = set.iter().find(|&&i| pinned(cand, i)) {
        return Err(NotRemovable(p));
    }
    let first = *set.iter().next().expect("at least one seed");
    for j in first + 1..cand.steps.len() {
        if set.contains(&j) {
            continue;
        }
        let depends = cand.steps[j]
            .params
            .as_ref()
            .is_some_and(|p| p.refs().iter().any(|r| set.contains(&r.step)));
        if depends {
            if pinned(cand, j) {
                return Err(NotRemovable(j));
            }
            set.insert(j);
        }
    }
    Ok(set)
}

/// Removes `closure` and renumbers the surviving references.
pub fn apply_removal(cand: &CandidateSequence, closure: &BTreeSet<usize>) -> CandidateSequence {
    let shift = |i: usize| i - closure.range(..i).count();
    let steps = cand
        .steps
        .iter()
        .enumerate()
        .filter(|(i, _)| !closure.contains(i))
        .map(|(_, s)| {
            let mut s = s.clone();
            if let Some(p) = s.params.as_mut() {
                for r in p.refs_mut() {
                    r.step = shift(r.step);
                }
            }
            s
        })
        .collect();
    CandidateSequence {
        steps,
        shape: cand.shape,
        setup_len: cand.setup_len - closure.range(..cand.setup_len).count(),
    }
}

/// Simpler conforming values, most aggressive first.
pub fn shrink_value(value: &Value, schema: &ParamSchema, schemas: &BTreeMap<String, ParamSchema>) -> Vec<Value> {
    let Ok(schema) = resolve(schema, schemas) else {
        return Vec::new();
    };
    let mut out: Vec<Value> = Vec::new();
    match (schema, value) {
        (ParamSchema::Int { min, max }, Value::Number(n)) => {
            let Some(v) = n.as_i64() else { return out };
            let t = minimal_int(*min, *max);
            if v != t {
                out.push(t.into());
                let d = v - t;
                let mut k = d / 2;
                while k != 0 {
                    out.push((v - k).into());
                    k /= 2;
                }
            }
        }
        (ParamSchema::String { min_len, .. }, Value::String(s)) => {
            let chars: Vec<char> = s.chars().collect();
            let lo = min_len.unwrap_or(0) as usize;
            if chars.len() > lo {
                out.push(chars[..lo].iter().collect::<String>().into());
                let mut k = chars.len() / 2;
                while k >= 1 {
                    if chars.len() - k >= lo {
                        for start in (0..chars.len()).step_by(k) {
                            let end = (start + k).min(chars.len());
                            if chars.len() - (end - start) < lo {
                                continue;
                            }
                            let shorter: String = chars[..start].iter().chain(&chars[end..]).collect();
                            out.push(shorter.into());
                        }
                    }
                    k /= 2;
                }
            }
            for (i, c) in chars.iter().enumerate() {
                if *c != 'a' {
                    let mut simpler = chars.clone();
                    simpler[i] = 'a';
                    out.push(simpler.into_iter().collect::<String>().into());
                }
            }
        }
        (ParamSchema::Bool, Value::Bool(true)) => out.push(false.into()),
        (ParamSchema::Enum { values }, v) => {
            if let Some(i) = values.iter().position(|x| x == v) {
                out.extend(values[..i].iter().cloned());
            }
        }
        (ParamSchema::Map { fields }, Value::Object(m)) => {
            for (name, field) in fields {
                if !field.required && m.contains_key(name) {
                    let mut smaller = m.clone();
                    smaller.remove(name);
                    out.push(Value::Object(smaller));
                }
            }
            for (name, field) in fields {
                if let Some(v) = m.get(name) {
                    for c in shrink_value(v, &field.schema, schemas) {
                        let mut smaller = m.clone();
                        smaller.insert(name.clone(), c);
                        out.push(Value::Object(smaller));
                    }
                }
            }
        }
        (ParamSchema::Vector { of, min_len, .. }, Value::Array(items)) => {
            let lo = min_len.unwrap_or(0) as usize;
            if items.len() > lo {
                for i in 0..items.len() {
                    let mut smaller = items.clone();
                    smaller.remove(i);
                    out.push(Value::Array(smaller));
                }
            }
            for (i, item) in items.iter().enumerate() {
                for c in shrink_value(item, of, schemas) {
                    let mut smaller = items.clone();
                    smaller[i] = c;
                    out.push(Value::Array(smaller));
                }
            }
        }
        _ => {}
    }
    let mut seen = BTreeSet::new();
    out.retain(|c| c != value && seen.insert(crate::value::canonical_json(c)));
    out
}

/// Distance of a value from the schema's simplest value.
fn value_measure(value: &Value, schema: &ParamSchema, schemas: &BTreeMap<String, ParamSchema>) -> u64 {
    let Ok(schema) = resolve(schema, schemas) else {
        return value_size(value);
    };
    match (schema, value) {
        (ParamSchema::Int { min, max }, Value::Number(n)) => match n.as_i64() {
            Some(v) => v.abs_diff(minimal_int(*min, *max)),
            None => value_size(value),
        },
        (ParamSchema::Enum { values }, v) => values.iter().position(|x| x == v).unwrap_or(values.len()) as u64,
        (ParamSchema::Map { fields }, Value::Object(m)) => m
            .iter()
            .map(|(k, v)| {
                match fields.get(k) {
                    Some(f) => value_measure(v, &f.schema, schemas),
                    None => value_size(v),
                }
                .saturating_add(1)
            })
            .fold(0, u64::saturating_add),
        (ParamSchema::Vector { of, .. }, Value::Array(items)) => {
            items.iter().map(|v| value_measure(v, of, schemas).saturating_add(1)).fold(0, u64::saturating_add)
        }
        _ => value_size(value),
    }
}

fn param_measure(p: &Param, schema: &ParamSchema, schemas: &BTreeMap<String, ParamSchema>) -> u64 {
    let resolved = resolve(schema, schemas).unwrap_or(schema);
    match (p, resolved) {
        (Param::Lit(v), _) => value_measure(v, resolved, schemas),
        (Param::Ref(_), _) => {
            generate_value(resolved, &mut Rng::new(0), 0, schemas)
                .map(|v| value_measure(&v, resolved, schemas))
                .unwrap_or(0)
                .saturating_add(1)
        }
        (Param::Map(m), ParamSchema::Map { fields }) => m
            .iter()
            .map(|(k, p)| fields.get(k).map_or(0, |f| param_measure(p, &f.schema, schemas)).saturating_add(1))
            .fold(0, u64::saturating_add),
        (Param::List(l), ParamSchema::Vector { of, .. }) => l.iter().map(|p| param_measure(p, of, schemas).saturating_add(1)).fold(0, u64::saturating_add),
        _ => 1,
    }
}

/// Ordering key for candidates: fewer steps first, then simpler values.
pub fn candidate_measure(cand: &CandidateSequence, amos: &Amos) -> (usize, u64) {
    let total = cand
        .steps
        .iter()
        .map(|s| match (&s.params, amos.operation(&s.op).and_then(|o| o.parameters.as_ref())) {
            (Some(p), Some(schema)) => param_measure(p, schema, &amos.schemas),
            _ => 0,
        })
        .fold(0, u64::saturating_add);
    (cand.steps.len(), total)
}

fn node_at_mut<'a>(p: &'a mut Param, path: &[PathStep]) -> Option<&'a mut Param> {
    match path.split_first() {
        None => Some(p),
        Some((PathStep::Key(k), rest)) => match p {
            Param::Map(m) => node_at_mut(m.get_mut(k)?, rest),
            _ => None,
        },
        Some((PathStep::Index(i), rest)) => match p {
            Param::List(l) => node_at_mut(l.get_mut(*i)?, rest),
            _ => None,
        },
    }
}

/// Replacement subtrees for one node, most aggressive first.
fn node_edits(node: &Param, schema: &ParamSchema, schemas: &BTreeMap<String, ParamSchema>) -> Vec<Param> {
    let Ok(resolved) = resolve(schema, schemas) else {
        return Vec::new();
    };
    match node {
        Param::Lit(v) => shrink_value(v, resolved, schemas).iter().map(Param::from_value).collect(),
        Param::Ref(_) => generate_value(resolved, &mut Rng::new(0), 0, schemas)
            .map(|v| vec![Param::from_value(&v)])
            .unwrap_or_default(),
        Param::Map(m) => match resolved {
            // Keys outside the schema (possible after inlining a reference)
            // and optional fields can go.
            ParamSchema::Map { fields } => m
                .keys()
                .filter(|k| fields.get(*k).is_none_or(|f| !f.required))
                .map(|k| {
                    let mut smaller = m.clone();
                    smaller.remove(k);
                    Param::Map(smaller)
                })
                .collect(),
            _ => Vec::new(),
        },
        Param::List(l) => match resolved {
            ParamSchema::Vector { min_len, .. } if l.len() > min_len.unwrap_or(0) as usize => (0..l.len())
                .map(|i| {
                    let mut smaller = l.clone();
                    smaller.remove(i);
                    Param::List(smaller)
                })
                .collect(),
            _ => Vec::new(),
        },
    }
}

/// Paths to every node of a parameter tree, parents before children.
fn node_paths(p: &Param, schema: &ParamSchema, schemas: &BTreeMap<String, ParamSchema>) -> Vec<(Vec<PathStep>, ParamSchema)> {
    fn walk(
        p: &Param,
        schema: &ParamSchema,
        schemas: &BTreeMap<String, ParamSchema>,
        path: &mut Vec<PathStep>,
        out: &mut Vec<(Vec<PathStep>, ParamSchema)>,
    ) {
        let resolved = resolve(schema, schemas).unwrap_or(schema).clone();
        out.push((path.clone(), resolved.clone()));
        match (p, &resolved) {
            (Param::Map(m), ParamSchema::Map { fields }) => {
                for (k, child) in m {
                    if let Some(f) = fields.get(k) {
                        path.push(PathStep::Key(k.clone()));
                        walk(child, &f.schema, schemas, path, out);
                        path.pop();
                    }
                }
            }
            (Param::List(l), ParamSchema::Vector { of, .. }) => {
                for (i, child) in l.iter().enumerate() {
                    path.push(PathStep::Index(i));
                    walk(child, of, schemas, path, out);
                    path.pop();
                }
            }
            _ => {}
        }
    }
    let mut out = Vec::new();
    walk(p, schema, schemas, &mut Vec::new(), &mut out);
    out
}

/// Steps that must carry identical parameters to `index` under the shape.
fn mirrors(cand: &CandidateSequence, index: usize) -> Vec<usize> {
    let last = cand.steps.len() - 1;
    match cand.shape {
        Shape::Repeated => (0..cand.steps.len()).collect(),
        Shape::Bracketed if index == 0 || index == last => vec![0, last],
        _ => vec![index],
    }
}

struct Runner<'a> {
    adapter: &'a mut dyn Adapter,
    amos: &'a Amos,
    prop: MetaPropertyId,
    ctx: Option<&'a QueryContext>,
    used: usize,
    budget: usize,
}

enum Attempt {
    Holds(ExecutionTrace),
    Fails,
    OutOfBudget,
}

impl Runner<'_> {
    fn attempt(&mut self, cand: &CandidateSequence) -> Result<Attempt, ShrinkError> {
        if check_shape(cand, self.amos).is_err() {
            return Ok(Attempt::Fails);
        }
        if self.used >= self.budget {
            return Ok(Attempt::OutOfBudget);
        }
        self.used += 1;
        soft_reset(self.adapter, self.amos)?;
        let trace = execute_candidate(cand, self.adapter, self.amos, self.ctx)?;
        let holds = evaluate(self.prop, &trace, self.ctx).unwrap_or(false);
        Ok(if holds { Attempt::Holds(trace) } else { Attempt::Fails })
    }
}

/// Shrinks `cand`, whose execution `trace` exhibited `prop`, to a 1-minimal
/// example. With a reset configured the candidate is first re-verified from
/// a reset state; without one, shrinking proceeds from the discovering
/// trace on a best-effort basis.
pub fn shrink_example(
    cand: &CandidateSequence,
    trace: &ExecutionTrace,
    prop: MetaPropertyId,
    ctx: Option<&QueryContext>,
    adapter: &mut dyn Adapter,
    amos: &Amos,
    budget: ShrinkBudget,
) -> Result<ShrinkOutcome, ShrinkError> {
    let mut runner = Runner {
        adapter,
        amos,
        prop,
        ctx,
        used: 0,
        budget: budget.max_reexecutions,
    };
    let mut best = cand.clone();
    let mut best_trace = trace.clone();
    if amos.reset.is_some() {
        match runner.attempt(&best)? {
            Attempt::Holds(t) => best_trace = t,
            Attempt::Fails => return Err(ShrinkError::NotReproducible),
            Attempt::OutOfBudget => {
                return Ok(ShrinkOutcome {
                    candidate: best,
                    trace: best_trace,
                    truncated: true,
                    executions: runner.used,
                })
            }
        }
    }

    let mut truncated = false;
    'fixpoint: loop {
        let current = candidate_measure(&best, amos);
        let base = best.clone();
        let base_bindings = best_trace.bindings.clone();
        for next in removal_attempts(&base, &base_bindings).chain(value_attempts(&base, amos)) {
            if candidate_measure(&next, amos) >= current {
                continue;
            }
            match runner.attempt(&next)? {
                Attempt::Holds(t) => {
                    best = next;
                    best_trace = t;
                    continue 'fixpoint;
                }
                Attempt::Fails => {}
                Attempt::OutOfBudget => {
                    truncated = true;
                    break 'fixpoint;
                }
            }
        }
        break;
    }
    Ok(ShrinkOutcome {
        candidate: best,
        trace: best_trace,
        truncated,
        executions: runner.used,
    })
}

/// Removal attempts: everything removable at once, then halving chunk
/// sizes down to single steps. Each chunk is tried with its dependent steps
/// and, when it has dependents, again with their references replaced by
/// the values they resolved to in `bindings`.
fn removal_attempts(cand: &CandidateSequence, bindings: &Bindings) -> impl Iterator<Item = CandidateSequence> {
    let removable: Vec<usize> = (0..cand.steps.len()).filter(|&i| !pinned(cand, i)).collect();
    let mut sizes = Vec::new();
    let mut k = removable.len();
    while k > 1 {
        sizes.push(k);
        k /= 2;
    }
    if !removable.is_empty() {
        sizes.push(1);
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for k in sizes {
        for chunk in removable.chunks(k) {
            if let Ok(closure) = closure_of(cand, chunk.iter().copied()) {
                if seen.insert(closure.clone()) {
                    out.push(apply_removal(cand, &closure));
                }
                let exact: BTreeSet<usize> = chunk.iter().copied().collect();
                if closure != exact {
                    if let Some(inlined) = remove_inlining(cand, &exact, bindings) {
                        out.push(inlined);
                    }
                }
            }
        }
    }
    out.into_iter()
}

/// Removes `removed` after replacing every reference into it by the value
/// it resolved to; `None` when some reference did not resolve.
fn remove_inlining(cand: &CandidateSequence, removed: &BTreeSet<usize>, bindings: &Bindings) -> Option<CandidateSequence> {
    fn inline(p: &mut Param, removed: &BTreeSet<usize>, bindings: &Bindings) -> bool {
        match p {
            Param::Ref(r) if removed.contains(&r.step) => match bindings.resolve_ref(r) {
                Ok(v) => {
                    let v = v.clone();
                    *p = Param::from_value(&v);
                    true
                }
                Err(_) => false,
            },
            Param::Map(m) => m.values_mut().all(|c| inline(c, removed, bindings)),
            Param::List(l) => l.iter_mut().all(|c| inline(c, removed, bindings)),
            _ => true,
        }
    }
    let mut next = cand.clone();
    for (j, step) in next.steps.iter_mut().enumerate() {
        if let (false, Some(p)) = (removed.contains(&j), step.params.as_mut()) {
            if !inline(p, removed, bindings) {
                return None;
            }
        }
    }
    Some(apply_removal(&next, removed))
}

/// Value simplifications in step order, one node edit at a time.
fn value_attempts<'a>(cand: &'a CandidateSequence, amos: &'a Amos) -> impl Iterator<Item = CandidateSequence> + 'a {
    let mut out = Vec::new();
    for (i, step) in cand.steps.iter().enumerate() {
        let mirror = mirrors(cand, i);
        if mirror[0] != i {
            continue;
        }
        let (Some(params), Some(schema)) = (&step.params, amos.operation(&step.op).and_then(|o| o.parameters.as_ref()))
        else {
            continue;
        };
        for (path, node_schema) in node_paths(params, schema, &amos.schemas) {
            let mut probe = params.clone();
            let node = node_at_mut(&mut probe, &path).expect("path from walk").clone();
            for edit in node_edits(&node, &node_schema, &amos.schemas) {
                let mut next = cand.clone();
                for &m in &mirror {
                    let p = next.steps[m].params.as_mut().expect("mirrored steps share parameters");
                    *node_at_mut(p, &path).expect("mirrored steps share structure") = edit.clone();
                }
                out.push(next);
            }
        }
    }
    out.into_iter()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genseq::{Source, Step, SymbolicRef};
    use serde_json::json;

    fn s(op: &str) -> Step {
        Step {
            op: op.into(),
            params: None,
        }
    }

    fn refers(op: &str, step: usize) -> Step {
        Step {
            op: op.into(),
            params: Some(Param::Ref(SymbolicRef {
                step,
                source: Source::Response,
                path: vec![],
            })),
        }
    }

    #[test]
    fn closure_follows_dependents() {
        let cand = CandidateSequence {
            steps: vec![s("get"), s("post"), s("get"), refers("delete", 1)],
            shape: Shape::Free { setup: false },
            setup_len: 0,
        };
        assert_eq!(removal_closure(&cand, 1).unwrap(), BTreeSet::from([1, 3]));
        assert_eq!(removal_closure(&cand, 2).unwrap(), BTreeSet::from([2]));
        let after = apply_removal(&cand, &BTreeSet::from([0]));
        assert_eq!(after.steps[2], refers("delete", 0));
    }

    #[test]
    fn bracket_ends_are_pinned() {
        let cand = CandidateSequence {
            steps: vec![s("get"), s("post"), s("get")],
            shape: Shape::Bracketed,
            setup_len: 0,
        };
        assert_eq!(removal_closure(&cand, 0), Err(NotRemovable(0)));
        assert!(removal_closure(&cand, 1).is_ok());
    }

    #[test]
    fn int_halves_toward_bound() {
        let t = BTreeMap::new();
        let got = shrink_value(&json!(64), &ParamSchema::int(Some(0), None), &t);
        assert_eq!(got, vec![json!(0), json!(32), json!(48), json!(56), json!(60), json!(62), json!(63)]);
        let got = shrink_value(&json!(70), &ParamSchema::int(Some(65), Some(130)), &t);
        assert!(got.iter().all(|v| v.as_i64().unwrap() >= 65));
        assert_eq!(got[0], json!(65));
    }

    #[test]
    fn measures_saturate_on_extreme_ints() {
        let t = BTreeMap::new();
        let v = json!([i64::MIN, i64::MAX, i64::MAX]);
        let schema = ParamSchema::Vector {
            of: Box::new(ParamSchema::int(None, None)),
            min_len: None,
            max_len: None,
        };
        assert_eq!(value_measure(&v, &schema, &t), u64::MAX);
        assert_eq!(value_size(&v), u64::MAX);
    }

    #[test]
    fn string_substrings() {
        let got = shrink_value(&json!("ab"), &ParamSchema::string(), &BTreeMap::new());
        for want in ["", "a", "b"] {
            assert!(got.contains(&json!(want)), "missing {want}");
        }
        let bounded = ParamSchema::String {
            min_len: Some(2),
            max_len: None,
        };
        assert!(shrink_value(&json!("xyz"), &bounded, &BTreeMap::new())
            .iter()
            .all(|v| v.as_str().unwrap().chars().count() >= 2));
    }
}
