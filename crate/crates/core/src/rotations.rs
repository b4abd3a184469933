//! Local rearrangements of search trees.
//!
//! A binary test is identified with the set of keys taking one of its
//! branches. Lifting a child test `B` (on branch `A` of its parent) above the
//! parent, with subtree `X` on the `B` side, gives
//!
//! ```text
//!        A                 B
//!      /   \             /   \
//!     B     Z    =>     X     A
//!    / \                     / \
//!   X   Y                   Y   Z
//! ```
//!
//! which routes every query identically iff `B ⊆ A` over the queries reaching
//! the parent. [`rotate_up`] checks that condition before rewriting.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::eval::keys_reaching;
use crate::instance::Key;
use crate::tree::{Branch, Path, PathError, TestKind, Tree};

/// A set of keys, as the outcome set of a generalized test.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase", tag = "set", content = "key")]
pub enum GeneralTest {
    /// `{k}`
    Singleton(Key),
    /// `K \ {k}`
    AllBut(Key),
    /// `(-inf, k)`
    Below(Key),
    /// `[k, inf)`
    AtLeast(Key),
    Explicit(BTreeSet<Key>),
    Excluding(BTreeSet<Key>),
}

impl GeneralTest {
    pub fn contains(&self, query: Key) -> bool {
        match self {
            GeneralTest::Singleton(k) => query == *k,
            GeneralTest::AllBut(k) => query != *k,
            GeneralTest::Below(k) => query < *k,
            GeneralTest::AtLeast(k) => query >= *k,
            GeneralTest::Explicit(set) => set.contains(&query),
            GeneralTest::Excluding(set) => !set.contains(&query),
        }
    }

    pub fn complement(&self) -> GeneralTest {
        match self {
            GeneralTest::Singleton(k) => GeneralTest::AllBut(*k),
            GeneralTest::AllBut(k) => GeneralTest::Singleton(*k),
            GeneralTest::Below(k) => GeneralTest::AtLeast(*k),
            GeneralTest::AtLeast(k) => GeneralTest::Below(*k),
            GeneralTest::Explicit(set) => GeneralTest::Excluding(set.clone()),
            GeneralTest::Excluding(set) => GeneralTest::Explicit(set.clone()),
        }
    }

    /// Keys taking `branch` of a test of `kind` on `key`.
    pub fn of_branch(kind: TestKind, key: Key, branch: Branch) -> GeneralTest {
        let yes = match kind {
            TestKind::Eq => GeneralTest::Singleton(key),
            TestKind::Lt => GeneralTest::Below(key),
        };
        match branch {
            Branch::Yes => yes,
            Branch::No => yes.complement(),
        }
    }

    /// Whether this set is one a single equal-to or less-than test realizes.
    pub fn is_implementable(&self) -> bool {
        !matches!(self, GeneralTest::Explicit(_) | GeneralTest::Excluding(_))
    }
}

impl fmt::Display for GeneralTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |set: &BTreeSet<Key>| {
            set.iter()
                .map(|k| k.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        match self {
            GeneralTest::Singleton(k) => write!(f, "{{{k}}}"),
            GeneralTest::AllBut(k) => write!(f, "K\\{{{k}}}"),
            GeneralTest::Below(k) => write!(f, "(-inf,{k})"),
            GeneralTest::AtLeast(k) => write!(f, "[{k},inf)"),
            GeneralTest::Explicit(set) => write!(f, "{{{}}}", list(set)),
            GeneralTest::Excluding(set) => write!(f, "K\\{{{}}}", list(set)),
        }
    }
}

/// `inner ⊆ outer`, over the queries in `universe`.
///
/// `outer` must already be oriented to the branch on which the inner test
/// sits (use the complement when the inner test hangs off the `no` branch).
pub fn containment_holds(outer: &GeneralTest, inner: &GeneralTest, universe: &[Key]) -> bool {
    universe
        .iter()
        .all(|&q| !inner.contains(q) || outer.contains(q))
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RotationError {
    #[error("rotation at {path} would change the search: {inner} is not contained in {outer}")]
    ContainmentViolation {
        path: Path,
        outer: GeneralTest,
        inner: GeneralTest,
    },
    #[error("{0} is not a test node below another test")]
    NotRotatable(Path),
    #[error(transparent)]
    Path(#[from] PathError),
}

/// One logged rewrite.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RotationStep {
    pub rule: &'static str,
    pub path: Path,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lifted: Option<Branch>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key: Option<Key>,
}

/// Lifts the test at `child_path` above its parent, keeping the child's
/// `lifted` branch as its own and hanging the parent (with the child's other
/// branch in the child's old place) off the remaining branch.
///
/// `keys` is the query set of the whole tree; containment is checked over the
/// queries that reach the parent. The lifted subtree moves up one level, the
/// parent's other subtree moves down one level, and the child's other subtree
/// keeps its depth.
pub fn rotate_up(
    tree: &Tree,
    keys: &[Key],
    child_path: &Path,
    lifted: Branch,
) -> Result<Tree, RotationError> {
    let (parent_path, side) = child_path
        .parent()
        .ok_or_else(|| RotationError::NotRotatable(child_path.clone()))?;
    let parent = tree
        .get(&parent_path)
        .ok_or_else(|| PathError(parent_path.clone()))?;
    let child = tree
        .get(child_path)
        .ok_or_else(|| PathError(child_path.clone()))?;
    let (Some(parent_kind), Some(child_kind)) = (parent.kind(), child.kind()) else {
        return Err(RotationError::NotRotatable(child_path.clone()));
    };

    let outer = GeneralTest::of_branch(parent_kind, parent.key(), side);
    let inner = GeneralTest::of_branch(child_kind, child.key(), lifted);
    let universe = keys_reaching(tree, &parent_path, keys);
    if !containment_holds(&outer, &inner, &universe) {
        return Err(RotationError::ContainmentViolation {
            path: child_path.clone(),
            outer,
            inner,
        });
    }

    let x = child.child(lifted).expect("test node").clone();
    let y = child.child(lifted.flip()).expect("test node").clone();
    let z = parent.child(side.flip()).expect("test node").clone();
    let lowered = Tree::test_with(parent_kind, parent.key(), side, y, z);
    let top = Tree::test_with(child_kind, child.key(), lifted, x, lowered);
    Ok(tree.replace_at(&parent_path, top)?)
}

/// Path and lifted branch of the rotation undoing `rotate_up(_, _, child_path, lifted)`.
pub fn inverse_rotation(child_path: &Path, lifted: Branch) -> Option<(Path, Branch)> {
    let (parent_path, side) = child_path.parent()?;
    Some((parent_path.child(lifted.flip()), side.flip()))
}

/// Inserts `<key` at `position` with a copy of the subtree found there on
/// each branch.
///
/// Queries below `key` use the first copy and the rest use the second, so the
/// subtree is fractured into two copies one level deeper. If `key` does not
/// split the queries reaching `position`, one copy is a redundant branch that
/// [`crate::eval::splice_redundant`] removes again.
pub fn insert_lt_test(tree: &Tree, key: Key, position: &Path) -> Result<Tree, PathError> {
    let subtree = tree
        .get(position)
        .ok_or_else(|| PathError(position.clone()))?
        .clone();
    tree.replace_at(position, Tree::lt(key, subtree.clone(), subtree))
}
