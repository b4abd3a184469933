//! Optimal search trees with 2-way comparisons (equal-to and less-than tests)
//! in the successful-query model.
//!
//! - [`instance`], [`tree`], [`eval`], [`lemmas`], [`dot`]: instances, trees,
//!   cost by search simulation, splicing, side weights.
//! - [`rotations`]: containment-checked rotations and test insertion.
//! - [`optimal`]: an exhaustive subset oracle and the heaviest-first dynamic
//!   program, with restricted-root variants.
//! - [`transform`]: rewrites an optimal less-than-rooted tree whose heaviest
//!   key carries at least 3/7 of the weight into an equal-to-rooted tree of no
//!   greater cost.
//! - [`thresholds`]: sweeps and witness searches around the weight thresholds
//!   1/4 and 3/7.

pub mod dot;
pub mod eval;
pub mod instance;
pub mod lemmas;
pub mod optimal;
pub mod rotations;
pub mod thresholds;
pub mod transform;
pub mod tree;

pub use eval::{cost, cost_on, search, splice_redundant, SearchOutcome, TreeError};
pub use instance::{Instance, InstanceError, Key};
pub use lemmas::{check_eq_root_max_weight, check_side_weight_monotonicity, side_weight};
pub use optimal::{dp_opt, dp_opt_rooted, oracle_opt, oracle_opt_rooted, OptResult, RootKind};
pub use thresholds::{gen_random_instance, verify_theorem, ThresholdReport, Verdict};
pub use transform::{transform_to_eq_root, TransformError, TransformTrace};
pub use tree::{Branch, Path, TestKind, Tree};
