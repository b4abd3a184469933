//! Exact optimal trees.
//!
//! Two independent solvers: [`oracle`] minimizes over every key subset
//! reachable by any sequence of tests (exponential, `n <= 15`), and [`dp`]
//! only visits subproblems "interval minus its `h` heaviest keys", testing
//! equality only against the heaviest remaining key. The oracle is the ground
//! truth the dynamic program is checked against.

pub mod dp;
pub mod oracle;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::tree::{TestKind, Tree};

pub use dp::{dp_opt, dp_opt_rooted, Dp, Subproblem};
pub use oracle::{oracle_opt, oracle_opt_rooted, KeyMask, Oracle, MAX_ORACLE_KEYS};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OptError {
    #[error("empty key set")]
    EmptySet,
    #[error("the exhaustive oracle supports at most {max} keys, got {n}")]
    TooManyKeys { n: usize, max: usize },
    #[error("key set {0:#b} is not a subset of the instance's keys")]
    ForeignKeys(u32),
    #[error("a rooted optimum needs at least two keys")]
    NoSuchTree,
}

/// Which root test types attain the optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootKind {
    Leaf,
    Eq,
    Lt,
    Both,
}

impl RootKind {
    pub fn from_costs(eq: u64, lt: u64) -> Self {
        match eq.cmp(&lt) {
            std::cmp::Ordering::Less => RootKind::Eq,
            std::cmp::Ordering::Greater => RootKind::Lt,
            std::cmp::Ordering::Equal => RootKind::Both,
        }
    }

    pub fn admits(self, kind: TestKind) -> bool {
        matches!(
            (self, kind),
            (RootKind::Both, _) | (RootKind::Eq, TestKind::Eq) | (RootKind::Lt, TestKind::Lt)
        )
    }

    pub fn labels(self) -> &'static [&'static str] {
        match self {
            RootKind::Leaf => &["leaf"],
            RootKind::Eq => &["eq"],
            RootKind::Lt => &["lt"],
            RootKind::Both => &["eq", "lt"],
        }
    }
}

impl Serialize for RootKind {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.labels().serialize(serializer)
    }
}

/// Which optimal tree to reconstruct when several root choices tie.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TiePreference {
    #[default]
    PreferEq,
    PreferLt,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OptResult {
    pub cost: u64,
    #[serde(rename = "rootKinds")]
    pub root_kind: RootKind,
    pub tree: Tree,
}
