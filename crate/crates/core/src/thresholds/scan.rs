//! Witness searches near the two thresholds.
//!
//! Small grids are enumerated exhaustively, evaluating each weight vector or
//! its reversal (costs are invariant under reversing the key order). Larger
//! grids are searched by randomized hill climbing with occasional downhill
//! moves. All comparisons between candidates are exact.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::instance::Instance;
use crate::optimal::{Oracle, MAX_ORACLE_KEYS};

use super::{below_quarter, meets_three_sevenths, ThresholdError, ThresholdReport, Verdict};

/// Violations kept per scan; the count is always exact.
const MAX_KEPT_VIOLATIONS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Exhaustive,
    HillClimb,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanOptions {
    pub seed: u64,
    /// Independent hill-climbing runs.
    pub restarts: usize,
    /// Proposals per run.
    pub steps: usize,
    /// Largest grid (`max_weight^n` vectors) enumerated exhaustively.
    pub exhaustive_limit: u64,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            restarts: 16,
            steps: 4000,
            exhaustive_limit: 1 << 21,
            jobs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ScanResult {
    pub n: usize,
    pub max_weight: u64,
    pub strategy: Strategy,
    pub evaluated: u64,
    pub best: Option<ThresholdReport>,
    pub violation_count: u64,
    pub violations: Vec<ThresholdReport>,
}

/// Which threshold a scan approaches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Target {
    /// Highest ratio among instances whose optimal trees all have less-than
    /// roots; any at 3/7 or above is a violation.
    Plus,
    /// Lowest ratio among instances with an optimal equal-to root; any below
    /// 1/4 is a violation.
    Minus,
}

impl Target {
    fn candidate(self, report: &ThresholdReport) -> bool {
        match self {
            Target::Plus => report.verdict == Verdict::LtStrict,
            Target::Minus => report.verdict.eq_optimal(),
        }
    }

    fn violation(self, inst: &Instance, report: &ThresholdReport) -> bool {
        self.candidate(report)
            && match self {
                Target::Plus => meets_three_sevenths(inst),
                Target::Minus => below_quarter(inst),
            }
    }

    /// `Less` when `a` is the better witness.
    fn cmp(self, a: &ThresholdReport, b: &ThresholdReport) -> Ordering {
        match self {
            Target::Plus => a.cmp_for_max(b),
            Target::Minus => a.cmp_for_min(b),
        }
    }

    /// `Less` when `a` is the better search state: candidates beat
    /// non-candidates, then the ratio decides.
    fn cmp_states(self, a: &ThresholdReport, b: &ThresholdReport) -> Ordering {
        self.candidate(b)
            .cmp(&self.candidate(a))
            .then_with(|| self.cmp(a, b))
    }
}

#[derive(Debug, Clone, Default)]
struct Tally {
    evaluated: u64,
    best: Option<ThresholdReport>,
    violation_count: u64,
    violations: Vec<ThresholdReport>,
}

impl Tally {
    fn record(&mut self, target: Target, inst: &Instance, report: ThresholdReport) {
        self.evaluated += 1;
        if target.violation(inst, &report) {
            self.violation_count += 1;
            if self.violations.len() < MAX_KEPT_VIOLATIONS {
                self.violations.push(report.clone());
            }
        }
        if target.candidate(&report)
            && self
                .best
                .as_ref()
                .is_none_or(|best| target.cmp(&report, best).is_lt())
        {
            self.best = Some(report);
        }
    }

    fn merge(mut self, other: Tally, target: Target) -> Tally {
        self.evaluated += other.evaluated;
        self.violation_count += other.violation_count;
        self.violations.extend(other.violations);
        self.violations.sort_by(|a, b| target.cmp(a, b));
        self.violations.truncate(MAX_KEPT_VIOLATIONS);
        self.best = match (self.best, other.best) {
            (Some(a), Some(b)) => Some(if target.cmp(&b, &a).is_lt() { b } else { a }),
            (a, b) => a.or(b),
        };
        self
    }
}

/// Highest `w_max / W` among lt-strict instances with `n` keys and weights in
/// `1..=max_weight`, reporting any lt-strict instance at 3/7 or above.
pub fn scan_lambda_plus(
    n: usize,
    max_weight: u64,
    options: &ScanOptions,
) -> Result<ScanResult, ThresholdError> {
    scan(Target::Plus, n, max_weight, options)
}

/// Lowest `w_max / W` among instances with an optimal equal-to root, with `n`
/// keys and weights in `1..=max_weight`, reporting any such instance below 1/4.
pub fn scan_lambda_minus(
    n: usize,
    max_weight: u64,
    options: &ScanOptions,
) -> Result<ScanResult, ThresholdError> {
    scan(Target::Minus, n, max_weight, options)
}

fn scan(
    target: Target,
    n: usize,
    max_weight: u64,
    options: &ScanOptions,
) -> Result<ScanResult, ThresholdError> {
    if max_weight == 0 {
        return Err(ThresholdError::InvalidRange { lo: 1, hi: 0 });
    }
    if n < 2 {
        return Err(ThresholdError::NoKeys);
    }
    if n > MAX_ORACLE_KEYS {
        return Err(ThresholdError::Opt(crate::optimal::OptError::TooManyKeys {
            n,
            max: MAX_ORACLE_KEYS,
        }));
    }
    // Overflow of the grid size means "too large to enumerate".
    let grid = u32::try_from(n)
        .ok()
        .and_then(|n| max_weight.checked_pow(n))
        .filter(|&size| size <= options.exhaustive_limit);
    let (strategy, tally) = match grid {
        Some(size) => (
            Strategy::Exhaustive,
            in_pool(options.jobs, || exhaustive(target, n, max_weight, size))?,
        ),
        None => (
            Strategy::HillClimb,
            in_pool(options.jobs, || hill_climb(target, n, max_weight, options))?,
        ),
    };
    let mut violations = tally.violations;
    violations.sort_by(|a, b| target.cmp(a, b));
    Ok(ScanResult {
        n,
        max_weight,
        strategy,
        evaluated: tally.evaluated,
        best: tally.best,
        violation_count: tally.violation_count,
        violations,
    })
}

/// Runs `work` on a pool of `jobs` threads, or the global pool.
pub(crate) fn in_pool<T: Send>(
    jobs: Option<usize>,
    work: impl FnOnce() -> Result<T, ThresholdError> + Send,
) -> Result<T, ThresholdError> {
    match jobs {
        None => work(),
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .expect("thread pool")
            .install(work),
    }
}

/// Weight vector number `index` of the grid `1..=max_weight` in base
/// `max_weight`, first key most significant.
fn decode(mut index: u64, n: usize, max_weight: u64) -> Vec<u64> {
    let mut weights = vec![0; n];
    for w in weights.iter_mut().rev() {
        *w = index % max_weight + 1;
        index /= max_weight;
    }
    weights
}

fn exhaustive(target: Target, n: usize, max_weight: u64, size: u64) -> Result<Tally, ThresholdError> {
    let blank = Instance::new(vec![0; n])?;
    (0..size)
        .into_par_iter()
        .map_init(
            || Oracle::new(&blank).expect("n is within the oracle's range"),
            |oracle, index| -> Result<Tally, ThresholdError> {
                let weights = decode(index, n, max_weight);
                let mut tally = Tally::default();
                if weights.iter().rev().lt(weights.iter()) {
                    return Ok(tally);
                }
                let inst = Instance::new(weights)?;
                oracle.refill(&inst)?;
                tally.record(target, &inst, ThresholdReport::from_oracle(oracle, &inst)?);
                Ok(tally)
            },
        )
        .try_reduce(Tally::default, |a, b| Ok(a.merge(b, target)))
}

fn hill_climb(
    target: Target,
    n: usize,
    max_weight: u64,
    options: &ScanOptions,
) -> Result<Tally, ThresholdError> {
    (0..options.restarts as u64)
        .into_par_iter()
        .map(|run| climb(target, n, max_weight, options, run))
        .try_reduce(Tally::default, |a, b| Ok(a.merge(b, target)))
}

/// One run: propose single-weight changes, keep improvements, accept a
/// worse state with a probability that decays to zero over the run.
fn climb(
    target: Target,
    n: usize,
    max_weight: u64,
    options: &ScanOptions,
    run: u64,
) -> Result<Tally, ThresholdError> {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    rng.set_stream(run);
    let mut weights: Vec<u64> = (0..n).map(|_| rng.gen_range(1..=max_weight)).collect();
    let mut inst = Instance::new(weights.clone())?;
    let mut oracle = Oracle::new(&inst)?;
    let mut current = ThresholdReport::from_oracle(&oracle, &inst)?;
    let mut tally = Tally::default();
    tally.record(target, &inst, current.clone());

    for step in 0..options.steps {
        let key = rng.gen_range(0..n);
        let old = weights[key];
        weights[key] = if rng.gen_bool(0.5) {
            rng.gen_range(1..=max_weight)
        } else if rng.gen_bool(0.5) {
            (old + 1).min(max_weight)
        } else {
            old.saturating_sub(1).max(1)
        };
        if weights[key] == old {
            continue;
        }
        inst = Instance::new(weights.clone())?;
        oracle.refill(&inst)?;
        let proposal = ThresholdReport::from_oracle(&oracle, &inst)?;
        tally.record(target, &inst, proposal.clone());
        let downhill = 0.2 * (1.0 - step as f64 / options.steps as f64);
        if target.cmp_states(&proposal, &current).is_le() || rng.gen_bool(downhill) {
            current = proposal;
        } else {
            weights[key] = old;
        }
    }
    Ok(tally)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    fn exhaustive_only() -> ScanOptions {
        ScanOptions {
            exhaustive_limit: u64::MAX,
            ..ScanOptions::default()
        }
    }

    #[test]
    fn decode_covers_the_grid() {
        assert_eq!(decode(0, 3, 4), vec![1, 1, 1]);
        assert_eq!(decode(63, 3, 4), vec![4, 4, 4]);
        assert_eq!(decode(6, 3, 4), vec![1, 2, 3]);
    }

    #[test]
    fn three_keys_are_never_lt_strict() {
        let res = scan_lambda_plus(3, 6, &exhaustive_only()).unwrap();
        assert_eq!(res.strategy, Strategy::Exhaustive);
        assert_eq!(res.best, None);
        assert_eq!(res.violation_count, 0);
        // 6^3 vectors, palindromes counted once
        assert_eq!(res.evaluated, (216 + 36) / 2);
    }

    #[test]
    fn four_unit_keys_are_lt_strict() {
        let res = scan_lambda_plus(4, 1, &exhaustive_only()).unwrap();
        let best = res.best.unwrap();
        assert_eq!((best.weights, best.l, best.e), (vec![1, 1, 1, 1], 8, 9));
        assert_eq!(best.max_ratio, Ratio::new(1, 4));
    }

    #[test]
    fn plus_scan_stays_below_three_sevenths() {
        for n in 4..=5 {
            let res = scan_lambda_plus(n, 5, &exhaustive_only()).unwrap();
            assert_eq!(res.violation_count, 0);
            let best = res.best.unwrap();
            assert!(best.max_ratio < Ratio::new(3, 7), "{best:?}");
        }
    }

    #[test]
    fn minus_scan_respects_one_quarter() {
        let res = scan_lambda_minus(6, 4, &exhaustive_only()).unwrap();
        assert_eq!(res.violation_count, 0, "{:?}", res.violations);
        assert!(res.best.unwrap().max_ratio >= Ratio::new(1, 4));
    }

    #[test]
    fn hill_climb_is_deterministic_and_sound() {
        let options = ScanOptions {
            seed: 3,
            restarts: 4,
            steps: 300,
            exhaustive_limit: 0,
            jobs: Some(2),
        };
        let a = scan_lambda_plus(7, 20, &options).unwrap();
        let b = scan_lambda_plus(7, 20, &ScanOptions { jobs: Some(1), ..options.clone() }).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.strategy, Strategy::HillClimb);
        assert_eq!(a.violation_count, 0);
        let best = a.best.unwrap();
        assert_eq!(best.verdict, Verdict::LtStrict);
        assert!(best.max_ratio < Ratio::new(3, 7));
        let check = ThresholdReport::with_oracle(&Instance::new(best.weights.clone()).unwrap()).unwrap();
        assert_eq!(check, best);
    }
}
