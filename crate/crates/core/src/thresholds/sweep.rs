//! Randomized sweep over instances whose heaviest key carries at least 3/7 of
//! the weight: every one must admit an optimal equal-to root, and every
//! optimal less-than-rooted tree must transform into one.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::eval::cost;
use crate::instance::Instance;
use crate::optimal::{Dp, KeyMask, Oracle, TiePreference, MAX_ORACLE_KEYS};
use crate::transform::transform_to_eq_root;
use crate::tree::{TestKind, Tree};

use super::scan::in_pool;
use super::{meets_three_sevenths, ThresholdError, ThresholdReport, Verdict};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepConfig {
    pub n_min: usize,
    pub n_max: usize,
    pub samples: u64,
    pub seed: u64,
    /// Weights other than the boosted one are drawn from `1..=max_weight`.
    pub max_weight: u64,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
    /// Also run the transformation on every optimal less-than-rooted tree.
    pub transform: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_min: 2,
            n_max: 9,
            samples: 10_000,
            seed: 0,
            max_weight: 100,
            jobs: None,
            transform: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TransformFailure {
    pub instance: Vec<u64>,
    pub tree: String,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TheoremSweep {
    pub samples: u64,
    pub eq_strict: u64,
    pub ties: u64,
    /// Instances with a heavy key and no optimal equal-to root.
    pub failures: Vec<ThresholdReport>,
    /// Instances where the dynamic program and the oracle disagree.
    pub solver_mismatches: Vec<ThresholdReport>,
    pub transforms_checked: u64,
    pub transform_failures: Vec<TransformFailure>,
    /// Per key count, the sampled instance closest to the 3/7 boundary.
    pub frontier: BTreeMap<usize, ThresholdReport>,
}

impl TheoremSweep {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
            && self.solver_mismatches.is_empty()
            && self.transform_failures.is_empty()
    }

    fn merge(mut self, other: TheoremSweep) -> TheoremSweep {
        self.samples += other.samples;
        self.eq_strict += other.eq_strict;
        self.ties += other.ties;
        self.failures.extend(other.failures);
        self.solver_mismatches.extend(other.solver_mismatches);
        self.transforms_checked += other.transforms_checked;
        self.transform_failures.extend(other.transform_failures);
        for (n, report) in other.frontier {
            self.offer_frontier(n, report);
        }
        self
    }

    fn offer_frontier(&mut self, n: usize, report: ThresholdReport) {
        match self.frontier.get(&n) {
            Some(current) if report.cmp_for_min(current).is_ge() => {}
            _ => {
                self.frontier.insert(n, report);
            }
        }
    }

    fn sort(&mut self) {
        self.failures.sort_by(|a, b| a.weights.cmp(&b.weights));
        self.solver_mismatches.sort_by(|a, b| a.weights.cmp(&b.weights));
        self.transform_failures
            .sort_by(|a, b| (&a.instance, &a.tree).cmp(&(&b.instance, &b.tree)));
    }
}

/// Instance number `index` of a sweep: `n` and the weights are uniform, then
/// one random key is raised to at least `3/4` of the others' total, which puts
/// the heaviest key at 3/7 of the total or above. Half of the instances sit
/// exactly on that boundary.
pub fn sweep_instance(config: &SweepConfig, index: u64) -> Result<Instance, ThresholdError> {
    if config.n_min < 1 || config.n_min > config.n_max {
        return Err(ThresholdError::NoKeys);
    }
    if config.max_weight == 0 {
        return Err(ThresholdError::InvalidRange { lo: 1, hi: 0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index);
    let n = rng.gen_range(config.n_min..=config.n_max);
    let mut weights: Vec<u64> = (0..n).map(|_| rng.gen_range(1..=config.max_weight)).collect();
    let boosted = rng.gen_range(0..n);
    let rest: u64 = weights.iter().sum::<u64>() - weights[boosted];
    let floor = (3 * rest).div_ceil(4);
    weights[boosted] = if rng.gen_bool(0.5) {
        floor
    } else {
        floor + rng.gen_range(0..=rest.max(1))
    };
    let inst = Instance::new(weights)?;
    debug_assert!(meets_three_sevenths(&inst));
    Ok(inst)
}

pub fn theorem_sweep(config: &SweepConfig) -> Result<TheoremSweep, ThresholdError> {
    if config.n_max > MAX_ORACLE_KEYS {
        return Err(ThresholdError::Opt(crate::optimal::OptError::TooManyKeys {
            n: config.n_max,
            max: MAX_ORACLE_KEYS,
        }));
    }
    let blank = Instance::new(vec![0])?;
    let mut out = in_pool(config.jobs, || {
        (0..config.samples)
            .into_par_iter()
            .map_init(
                || Oracle::new(&blank).expect("one key"),
                |oracle, index| check_one(config, oracle, index),
            )
            .try_reduce(TheoremSweep::default, |a, b| Ok(a.merge(b)))
    })?;
    out.sort();
    Ok(out)
}

fn check_one(
    config: &SweepConfig,
    oracle: &mut Oracle,
    index: u64,
) -> Result<TheoremSweep, ThresholdError> {
    let inst = sweep_instance(config, index)?;
    let mut out = TheoremSweep {
        samples: 1,
        ..TheoremSweep::default()
    };
    if inst.n() < 2 {
        return Ok(out);
    }
    let dp = Dp::new(&inst);
    let (e, l) = dp.rooted_costs()?;
    let report = ThresholdReport::from_costs(&inst, e, l);
    oracle.refill(&inst)?;
    if ThresholdReport::from_oracle(oracle, &inst)? != report {
        out.solver_mismatches.push(report.clone());
    }
    match report.verdict {
        Verdict::EqStrict => out.eq_strict += 1,
        Verdict::LtStrict => out.failures.push(report.clone()),
        Verdict::Tie => {
            out.ties += 1;
            if config.transform {
                check_transforms(&inst, oracle, &dp, report.optimum(), &mut out);
            }
        }
    }
    out.offer_frontier(inst.n(), report);
    Ok(out)
}

/// Transforms every distinct optimal less-than-rooted tree the solvers build.
fn check_transforms(inst: &Instance, oracle: &Oracle, dp: &Dp, optimum: u64, out: &mut TheoremSweep) {
    let full = KeyMask::full(inst.n());
    let mut trees: Vec<Tree> = Vec::new();
    for pref in [TiePreference::PreferEq, TiePreference::PreferLt] {
        let from_oracle = oracle
            .rooted_tree(full, TestKind::Lt, pref)
            .expect("n >= 2");
        let from_dp = dp.optimal_rooted_tree(TestKind::Lt, pref).expect("n >= 2");
        for tree in [from_oracle, from_dp] {
            if !trees.contains(&tree) {
                trees.push(tree);
            }
        }
    }
    for tree in trees {
        out.transforms_checked += 1;
        let failure = |error: String| TransformFailure {
            instance: inst.weights().to_vec(),
            tree: tree.to_string(),
            error,
        };
        match transform_to_eq_root(&tree, inst) {
            Err(err) => out.transform_failures.push(failure(err.to_string())),
            Ok((result, trace)) => {
                let problem = if result.kind() != Some(TestKind::Eq) {
                    Some(format!("output {result} is not equal-to rooted"))
                } else if cost(&result, inst) != Ok(optimum) {
                    Some(format!("output {result} does not cost the optimum {optimum}"))
                } else { trace.steps.iter().find(|s| !s.respects_bound()).map(|step| format!(
                        "{} changed the cost by {} against bound {:?}",
                        step.case, step.cost_delta, step.bound
                    )) };
                if let Some(problem) = problem {
                    out.transform_failures.push(failure(problem));
                }
            }
        }
    }
}
