//! The symbolic-reference experiment: how many MP-S-3 candidates each
//! configuration needs before one conforms, on the persons systems.

pub mod stats;

use std::fmt::Write as _;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::amos::{parse_amos, Amos};
use crate::executor::InProcessAdapter;
use crate::explorer::{run_trial, trial_size};
use crate::fixtures::PERSONS_AMOS;
use crate::genseq::{generate_candidate, ModePolicy};
use crate::metaprops::{evaluate, shape_constraints, MetaPropertyId, QueryContext};
use crate::refsut::{PersonsSut, PersonsVariant};
use crate::rng::{derive_seed, Rng};

pub use stats::{mann_whitney_u, summarize, vargha_delaney_a, MannWhitney, Summary};

pub const PROPERTY: MetaPropertyId = MetaPropertyId::MpS3;
pub const QUERY_OP: &str = "get-persons";
pub const DEFAULT_RUNS: usize = 200;
pub const DEFAULT_BUDGET: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    A,
    B,
    C,
    D,
}

impl Label {
    pub const ALL: [Label; 4] = [Label::A, Label::B, Label::C, Label::D];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::A => "A",
            Label::B => "B",
            Label::C => "C",
            Label::D => "D",
        }
    }

    pub fn mode_policy(self) -> ModePolicy {
        match self {
            Label::A | Label::C => ModePolicy::RandomOnly,
            Label::B | Label::D => ModePolicy::ReferencesAllowed,
        }
    }

    pub fn variant(self) -> PersonsVariant {
        match self {
            Label::A | Label::B => PersonsVariant::V1,
            Label::C | Label::D => PersonsVariant::V3,
        }
    }

    fn index(self) -> u64 {
        self as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchConfig {
    pub label: Label,
    pub runs: usize,
    pub budget: usize,
}

impl BenchConfig {
    pub fn new(label: Label, runs: usize, budget: usize) -> Self {
        assert!(runs > 0 && budget > 0, "runs and budget must be positive");
        BenchConfig { label, runs, budget }
    }

    pub fn all(runs: usize, budget: usize) -> Vec<BenchConfig> {
        Label::ALL.iter().map(|&l| BenchConfig::new(l, runs, budget)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchSample {
    /// Candidates executed up to and including the first conforming one,
    /// or the budget when none conformed.
    pub tests_used: usize,
    pub found: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigResult {
    pub config: BenchConfig,
    /// Samples in run order.
    pub samples: Vec<BenchSample>,
}

impl ConfigResult {
    pub fn tests_used(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.tests_used as f64).collect()
    }

    pub fn summary(&self) -> Summary {
        summarize(&self.tests_used())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub first: Label,
    pub second: Label,
    /// Â of the first configuration's counts over the second's.
    pub a: f64,
    pub test: MannWhitney,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub configs: Vec<ConfigResult>,
}

/// Pairs reported in the comparison table.
pub const PAIRS: [(Label, Label); 6] = [
    (Label::A, Label::B),
    (Label::B, Label::C),
    (Label::A, Label::C),
    (Label::B, Label::D),
    (Label::A, Label::D),
    (Label::C, Label::D),
];

impl ExperimentResult {
    pub fn get(&self, label: Label) -> Option<&ConfigResult> {
        self.configs.iter().find(|c| c.config.label == label)
    }

    pub fn compare(&self, first: Label, second: Label) -> Option<Comparison> {
        let x = self.get(first)?.tests_used();
        let y = self.get(second)?.tests_used();
        Some(Comparison {
            first,
            second,
            a: vargha_delaney_a(&x, &y),
            test: mann_whitney_u(&x, &y),
        })
    }

    pub fn comparisons(&self) -> Vec<Comparison> {
        PAIRS.iter().filter_map(|&(a, b)| self.compare(a, b)).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("config,run,tests_used,found\n");
        for c in &self.configs {
            for (run, s) in c.samples.iter().enumerate() {
                let _ = writeln!(out, "{},{},{},{}", c.config.label.as_str(), run, s.tests_used, s.found);
            }
        }
        out
    }

    /// Summary table followed by the pairwise comparison table.
    pub fn render_tables(&self) -> String {
        let mut out = String::from("config      min       q1   median     mean       q3      max\n");
        for c in &self.configs {
            let s = c.summary();
            let _ = writeln!(
                out,
                "{:<6} {:>8.1} {:>8.1} {:>8.1} {:>8.1} {:>8.1} {:>8.1}",
                c.config.label.as_str(),
                s.min,
                s.q1,
                s.median,
                s.mean,
                s.q3,
                s.max
            );
        }
        out.push_str("\npair   p-value        A-measure\n");
        for cmp in self.comparisons() {
            let _ = writeln!(
                out,
                "{}-{}    {:<14.6e} {:.5}",
                cmp.first.as_str(),
                cmp.second.as_str(),
                cmp.test.p,
                cmp.a
            );
        }
        out
    }
}

fn persons_amos() -> Amos {
    parse_amos(PERSONS_AMOS).expect("bundled catalogue parses")
}

/// One run: a fresh system, candidates until the first conforming one.
pub fn run_once(amos: &Amos, config: BenchConfig, seed: u64) -> BenchSample {
    let mut adapter = InProcessAdapter::new(PersonsSut::new(config.label.variant()));
    let ctx = QueryContext::new(QUERY_OP);
    let shape = shape_constraints(PROPERTY);
    for t in 0..config.budget {
        let mut rng = Rng::new(derive_seed(seed, &[t as u64]));
        let size = trial_size(&mut rng);
        let cand = generate_candidate(amos, shape, &mut rng, size, config.label.mode_policy())
            .expect("persons catalogue always generates");
        let trace = run_trial(&cand, &mut adapter, amos, Some(&ctx)).expect("in-process calls cannot fail");
        if evaluate(PROPERTY, &trace, Some(&ctx)).unwrap_or(false) {
            return BenchSample {
                tests_used: t + 1,
                found: true,
            };
        }
    }
    BenchSample {
        tests_used: config.budget,
        found: false,
    }
}

pub fn run_seed(master_seed: u64, label: Label, run: usize) -> u64 {
    derive_seed(master_seed, &[label.index(), run as u64])
}

fn run_config(amos: &Amos, config: BenchConfig, master_seed: u64, execution: Execution) -> ConfigResult {
    let one = |run: usize| run_once(amos, config, run_seed(master_seed, config.label, run));
    let samples = match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..config.runs).into_par_iter().map(one).collect(),
        _ => (0..config.runs).map(one).collect(),
    };
    ConfigResult { config, samples }
}

/// Runs every configuration; each run gets its own system and seed, so the
/// samples do not depend on `execution`.
pub fn run_experiment_with(configs: &[BenchConfig], master_seed: u64, execution: Execution) -> ExperimentResult {
    let amos = persons_amos();
    ExperimentResult {
        configs: configs
            .iter()
            .map(|&c| run_config(&amos, c, master_seed, execution))
            .collect(),
    }
}

pub fn run_experiment(configs: &[BenchConfig], master_seed: u64) -> ExperimentResult {
    run_experiment_with(configs, master_seed, Execution::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exhausted_budget_is_reported() {
        let amos = persons_amos();
        let sample = run_once(&amos, BenchConfig::new(Label::C, 1, 1), 3);
        if !sample.found {
            assert_eq!(sample.tests_used, 1);
        }
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let configs = BenchConfig::all(4, 50);
        let seq = run_experiment_with(&configs, 11, Execution::Sequential);
        let par = run_experiment_with(&configs, 11, Execution::Parallel);
        assert_eq!(seq, par);
        assert_eq!(seq.to_csv().lines().count(), 1 + 16);
    }
}
