//! Empirical checks of the weight thresholds: a heaviest key below 1/4 of the
//! total never admits an equal-to root, and one at 3/7 or above always does.
//!
//! Ratios are exact: [`Ratio<u64>`] values built from integer weights and
//! compared by cross-multiplication, never floats.

mod scan;
mod sweep;

use std::cmp::Ordering;
use std::fmt;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::instance::{Instance, InstanceError};
use crate::optimal::{Dp, KeyMask, OptError, Oracle};

pub use scan::{scan_lambda_minus, scan_lambda_plus, ScanOptions, ScanResult, Strategy};
pub use sweep::{sweep_instance, theorem_sweep, SweepConfig, TheoremSweep, TransformFailure};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ThresholdError {
    #[error("invalid weight range [{lo}, {hi}]")]
    InvalidRange { lo: u64, hi: u64 },
    #[error("an instance needs at least one key")]
    NoKeys,
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Opt(#[from] OptError),
}

/// Which root test types reach the optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// Every optimal tree has an equal-to root.
    EqStrict,
    /// Every optimal tree has a less-than root.
    LtStrict,
    Tie,
}

impl Verdict {
    pub fn from_costs(e: u64, l: u64) -> Self {
        match e.cmp(&l) {
            Ordering::Less => Verdict::EqStrict,
            Ordering::Greater => Verdict::LtStrict,
            Ordering::Equal => Verdict::Tie,
        }
    }

    /// Some optimal tree has an equal-to root.
    pub fn eq_optimal(self) -> bool {
        self != Verdict::LtStrict
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::EqStrict => "eq-strict",
            Verdict::LtStrict => "lt-strict",
            Verdict::Tie => "tie",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `w_max / W` in lowest terms. An all-zero instance has ratio 1, since every
/// key is a heaviest key.
pub fn max_ratio(inst: &Instance) -> Ratio<u64> {
    if inst.total() == 0 {
        Ratio::from_integer(1)
    } else {
        Ratio::new(inst.max_weight(), inst.total())
    }
}

/// `"p/q"`, with the denominator always written.
pub fn ratio_string(ratio: &Ratio<u64>) -> String {
    format!("{}/{}", ratio.numer(), ratio.denom())
}

fn serialize_ratio<S: Serializer>(ratio: &Ratio<u64>, serializer: S) -> Result<S::Ok, S::Error> {
    serializer.serialize_str(&ratio_string(ratio))
}

/// `w_max >= 3/7 W`.
pub fn meets_three_sevenths(inst: &Instance) -> bool {
    inst.max_ratio_at_least(3, 7)
}

/// `w_max < W/4`.
pub fn below_quarter(inst: &Instance) -> bool {
    !inst.max_ratio_at_least(1, 4)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ThresholdReport {
    #[serde(rename = "instance")]
    pub weights: Vec<u64>,
    #[serde(serialize_with = "serialize_ratio")]
    pub max_ratio: Ratio<u64>,
    #[serde(rename = "E")]
    pub e: u64,
    #[serde(rename = "L")]
    pub l: u64,
    pub verdict: Verdict,
}

impl ThresholdReport {
    pub fn from_costs(inst: &Instance, e: u64, l: u64) -> Self {
        Self {
            weights: inst.weights().to_vec(),
            max_ratio: max_ratio(inst),
            e,
            l,
            verdict: Verdict::from_costs(e, l),
        }
    }

    /// `E` and `L` from the exhaustive oracle; needs `2 <= n <= 15`.
    pub fn with_oracle(inst: &Instance) -> Result<Self, ThresholdError> {
        let oracle = Oracle::new(inst)?;
        Self::from_oracle(&oracle, inst)
    }

    /// Reads `E` and `L` off an oracle already filled for `inst`.
    pub fn from_oracle(oracle: &Oracle, inst: &Instance) -> Result<Self, ThresholdError> {
        let (e, l) = oracle.rooted_costs(KeyMask::full(inst.n()))?;
        Ok(Self::from_costs(inst, e, l))
    }

    /// `E` and `L` from the dynamic program; needs `n >= 2`.
    pub fn with_dp(inst: &Instance) -> Result<Self, ThresholdError> {
        let (e, l) = Dp::new(inst).rooted_costs()?;
        Ok(Self::from_costs(inst, e, l))
    }

    pub fn w_max(&self) -> u64 {
        self.weights.iter().copied().max().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.weights.iter().sum()
    }

    pub fn optimum(&self) -> u64 {
        self.e.min(self.l)
    }

    /// Higher ratio first, then the lexicographically smallest weights.
    pub fn cmp_for_max(&self, other: &Self) -> Ordering {
        other
            .max_ratio
            .cmp(&self.max_ratio)
            .then_with(|| self.weights.cmp(&other.weights))
    }

    /// Lower ratio first, then the lexicographically smallest weights.
    pub fn cmp_for_min(&self, other: &Self) -> Ordering {
        self.max_ratio
            .cmp(&other.max_ratio)
            .then_with(|| self.weights.cmp(&other.weights))
    }
}

/// Outcome of checking that a heavy key admits an equal-to root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TheoremCheck {
    Holds,
    /// `w_max < 3/7 W`, so nothing is claimed.
    NotApplicable,
    Fails,
}

impl TheoremCheck {
    pub fn passed(self) -> bool {
        self != TheoremCheck::Fails
    }
}

/// Whether `E = min(E, L)` when `w_max >= 3/7 W`, using the dynamic program.
pub fn check_theorem(inst: &Instance) -> Result<TheoremCheck, ThresholdError> {
    if !meets_three_sevenths(inst) {
        return Ok(TheoremCheck::NotApplicable);
    }
    let report = ThresholdReport::with_dp(inst)?;
    Ok(if report.verdict.eq_optimal() {
        TheoremCheck::Holds
    } else {
        TheoremCheck::Fails
    })
}

/// True unless the instance has a heavy key and still no optimal equal-to
/// root. Instances below 3/7 pass vacuously; see [`check_theorem`] to tell
/// the two apart. Needs `n >= 2`.
pub fn verify_theorem(inst: &Instance) -> Result<bool, ThresholdError> {
    Ok(check_theorem(inst)?.passed())
}

/// `n` weights drawn uniformly from `lo..=hi` by ChaCha8 seeded with `seed`.
pub fn gen_random_instance(n: usize, range: (u64, u64), seed: u64) -> Result<Instance, ThresholdError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_instance(&mut rng, n, range)
}

pub(crate) fn random_instance(
    rng: &mut impl Rng,
    n: usize,
    (lo, hi): (u64, u64),
) -> Result<Instance, ThresholdError> {
    if lo > hi {
        return Err(ThresholdError::InvalidRange { lo, hi });
    }
    if n == 0 {
        return Err(ThresholdError::NoKeys);
    }
    let weights = (0..n).map(|_| rng.gen_range(lo..=hi)).collect();
    Ok(Instance::new(weights)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(w: &[u64]) -> Instance {
        Instance::new(w.to_vec()).unwrap()
    }

    #[test]
    fn pinned_reports() {
        let cases: [(&[u64], u64, u64, Verdict, &str); 4] = [
            (&[3, 4, 3], 16, 17, Verdict::EqStrict, "2/5"),
            (&[1, 1, 1, 1], 9, 8, Verdict::LtStrict, "1/4"),
            (&[1, 1, 1, 1, 1], 13, 12, Verdict::LtStrict, "1/5"),
            (&[3, 2, 2], 11, 11, Verdict::Tie, "3/7"),
        ];
        for (w, e, l, verdict, ratio) in cases {
            for report in [
                ThresholdReport::with_oracle(&inst(w)).unwrap(),
                ThresholdReport::with_dp(&inst(w)).unwrap(),
            ] {
                assert_eq!((report.e, report.l, report.verdict), (e, l, verdict), "{w:?}");
                assert_eq!(ratio_string(&report.max_ratio), ratio);
            }
        }
    }

    #[test]
    fn report_json() {
        let report = ThresholdReport::with_oracle(&inst(&[3, 2, 2])).unwrap();
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(
            json,
            serde_json::json!({"instance": [3, 2, 2], "maxRatio": "3/7", "E": 11, "L": 11, "verdict": "tie"})
        );
        assert_eq!(ratio_string(&Ratio::new(4, 2)), "2/1");
    }

    #[test]
    fn theorem_examples() {
        assert_eq!(check_theorem(&inst(&[9, 1, 1, 1, 1, 1, 1])), Ok(TheoremCheck::Holds));
        assert_eq!(ThresholdReport::with_dp(&inst(&[9, 1, 1, 1, 1, 1, 1])).unwrap().e, 31);
        assert_eq!(check_theorem(&inst(&[3, 2, 2])), Ok(TheoremCheck::Holds));
        let eight = inst(&[8, 3, 4, 3, 2, 9, 8, 7]);
        assert_eq!(max_ratio(&eight), Ratio::new(9, 44));
        assert_eq!(check_theorem(&eight), Ok(TheoremCheck::NotApplicable));
        assert_eq!(verify_theorem(&eight), Ok(true));
    }

    #[test]
    fn threshold_predicates_are_exact() {
        assert!(meets_three_sevenths(&inst(&[3, 2, 2])));
        assert!(!meets_three_sevenths(&inst(&[3, 2, 3])));
        assert!(!below_quarter(&inst(&[1, 1, 1, 1])));
        assert!(below_quarter(&inst(&[1, 1, 1, 1, 1])));
        assert_eq!(max_ratio(&inst(&[0, 0])), Ratio::from_integer(1));
    }

    #[test]
    fn random_instances() {
        assert_eq!(
            gen_random_instance(8, (1, 100), 42),
            gen_random_instance(8, (1, 100), 42)
        );
        assert_ne!(
            gen_random_instance(8, (1, 100), 42),
            gen_random_instance(8, (1, 100), 43)
        );
        assert_eq!(gen_random_instance(5, (1, 1), 9).unwrap().weights(), &[1; 5]);
        let i = gen_random_instance(8, (1, 100), 42).unwrap();
        assert!(i.weights().iter().all(|w| (1..=100).contains(w)));
        assert_eq!(
            gen_random_instance(3, (5, 4), 0),
            Err(ThresholdError::InvalidRange { lo: 5, hi: 4 })
        );
        assert_eq!(gen_random_instance(0, (1, 2), 0), Err(ThresholdError::NoKeys));
    }
}
