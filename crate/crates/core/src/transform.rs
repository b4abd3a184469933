//! Rewriting an optimal less-than-rooted tree into an equal-to-rooted tree of
//! no greater cost, when the heaviest key carries at least 3/7 of the weight.
//!
//! Notation, for a tree `T = <r(L, T2)` with the heaviest key `m` in `L`:
//! after `L` is itself rewritten to `=m(m, T1)`, the root of `T2` is `?i` with
//! `T3` on its `=`/`>=` side and `T4` on the other. In Case 2, `?j` is the
//! root of `T4` with `T5` on its `=`/`>=` side, and `?k` is the root of the
//! other side of `?j` with subtrees `T6` (`=`/`>=`) and `T7`.
//!
//! * Case 1, `3 w(T3) >= w(T2)`: lift `=m` to the root, then lift `?i` under
//!   its `!=` branch; the cost changes by exactly `w(T1) + w(T4) - w_m`.
//! * Case 2, `3 w(T3) < w(T2)`: with `b1 < b2 < b3` the sorted keys of
//!   `i, j, k`, build `=m(m, <b2(<r(T1, ?b1), G))` where `G` holds `?b3` and,
//!   when `?b2` is an equal-to test, `=b2`. The cost rises by at most
//!   `w(T1) - w_m + 2 w(T3)`.
//!
//! Every inequality the argument borrows from optimality is re-checked on the
//! input, and [`TransformError::PreconditionViolated`] reports the first one
//! that fails instead of emitting a wrong tree.

use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::eval::{cost_on, is_irreducible, partition, redundant_branches, splice_redundant, validate, TreeError};
use crate::instance::{Instance, Key};
use crate::rotations::{rotate_up, RotationError, RotationStep};
use crate::tree::{Branch, Path, TestKind, Tree};

/// Which branch of the case analysis produced a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseLabel {
    /// A child of the less-than root is a leaf; the root becomes `=leaf`.
    Base,
    /// The left subtree is rewritten recursively first.
    InductiveDescent,
    Case1,
    Case2T4Leaf,
    Case2_1_1,
    Case2_1_2,
    Case2_2_1,
    Case2_2_2,
    Case2_2_3,
    Case2_2_4,
}

impl CaseLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            CaseLabel::Base => "base-r∈{2,n}",
            CaseLabel::InductiveDescent => "inductive-descent",
            CaseLabel::Case1 => "case1",
            CaseLabel::Case2T4Leaf => "case2-T4leaf",
            CaseLabel::Case2_1_1 => "case2-2.1.1",
            CaseLabel::Case2_1_2 => "case2-2.1.2",
            CaseLabel::Case2_2_1 => "case2-2.2.1",
            CaseLabel::Case2_2_2 => "case2-2.2.2",
            CaseLabel::Case2_2_3 => "case2-2.2.3",
            CaseLabel::Case2_2_4 => "case2-2.2.4",
        }
    }

    pub fn all() -> [CaseLabel; 10] {
        use CaseLabel::*;
        [
            Base,
            InductiveDescent,
            Case1,
            Case2T4Leaf,
            Case2_1_1,
            Case2_1_2,
            Case2_2_1,
            Case2_2_2,
            Case2_2_3,
            Case2_2_4,
        ]
    }

    pub fn is_case2(self) -> bool {
        !matches!(
            self,
            CaseLabel::Base | CaseLabel::InductiveDescent | CaseLabel::Case1
        )
    }
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for CaseLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

/// Depth condition met by a Case 2 construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DepthCondition {
    /// `T3` moves down at most 2 and `T5` keeps its depth.
    #[serde(rename = "j1")]
    J1,
    /// `?j` is an equal-to test and `T3`, `T5` move down at most 1 each.
    #[serde(rename = "j2")]
    J2,
}

/// The named subtrees of the Case 2 configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Piece {
    T1,
    T3,
    T5,
    T6,
    T7,
}

impl Piece {
    /// Depth of the piece's root below the rewritten subtree's root.
    fn original_depth(self) -> usize {
        match self {
            Piece::T1 | Piece::T3 => 2,
            Piece::T5 => 3,
            Piece::T6 | Piece::T7 => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TraceStep {
    #[serde(rename = "caseLabel")]
    pub case: CaseLabel,
    /// Cost change of the whole tree caused by this step.
    pub cost_delta: i64,
    /// Case 1: the exact predicted delta. Case 2: the upper bound on it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<i64>,
    /// Recursion depth of the subtree the step rewrote.
    pub level: usize,
    /// Whether the step ran on the mirrored key order.
    pub mirrored: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub condition: Option<DepthCondition>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub fractured: Vec<Piece>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub rotations: Vec<RotationStep>,
}

impl TraceStep {
    fn new(case: CaseLabel, cost_delta: i64, level: usize, mirrored: bool) -> Self {
        Self {
            case,
            cost_delta,
            bound: None,
            level,
            mirrored,
            condition: None,
            fractured: Vec::new(),
            rotations: Vec::new(),
        }
    }

    /// Case 1 deltas equal their prediction, Case 2 deltas stay within the
    /// bound, all of them are non-positive, and bookkeeping steps are free.
    pub fn respects_bound(&self) -> bool {
        match (self.case, self.bound) {
            (CaseLabel::Base | CaseLabel::InductiveDescent, _) => self.cost_delta == 0,
            (CaseLabel::Case1, Some(exact)) => self.cost_delta == exact && exact <= 0,
            (_, Some(bound)) => self.cost_delta <= bound && self.cost_delta <= 0,
            (_, None) => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TransformTrace {
    pub steps: Vec<TraceStep>,
    pub input_cost: u64,
    pub output_cost: u64,
}

impl TransformTrace {
    pub fn total_delta(&self) -> i64 {
        self.steps.iter().map(|s| s.cost_delta).sum()
    }

    pub fn cases(&self) -> Vec<CaseLabel> {
        self.steps.iter().map(|s| s.case).collect()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TransformError {
    #[error(transparent)]
    InvalidTree(#[from] TreeError),
    #[error("input tree has redundant branches at {0:?}")]
    NotIrreducible(Vec<Path>),
    #[error("an equal-to root needs at least two keys")]
    TooFewKeys,
    #[error("heaviest key weighs {max_weight}, below 3/7 of the total {total}")]
    MaxWeightTooSmall { max_weight: u64, total: u64 },
    #[error("input is not optimal: {inequality} fails at {location}")]
    PreconditionViolated { inequality: String, location: String },
    #[error("no subcase applies: {0}")]
    SubcaseUnreachable(String),
    #[error(transparent)]
    Rotation(#[from] RotationError),
    #[error("{case} changed the cost by {delta}, outside its bound {bound}")]
    BoundViolated { case: CaseLabel, delta: i64, bound: i64 },
}

/// Rewrites `tree` into an equal-to-rooted tree of no greater cost.
///
/// The input must be valid and irreducible for all keys of `inst`, and
/// optimal; its heaviest key must weigh at least `3/7` of the total. Trees
/// already rooted at an equal-to test are returned unchanged with an empty
/// trace. The output is spliced to irreducibility.
pub fn transform_to_eq_root(
    tree: &Tree,
    inst: &Instance,
) -> Result<(Tree, TransformTrace), TransformError> {
    let keys: Vec<Key> = inst.keys().collect();
    validate(tree, inst, &keys)?;
    let redundant = redundant_branches(tree, &keys);
    if !redundant.is_empty() {
        return Err(TransformError::NotIrreducible(redundant));
    }
    let input_cost = cost_on(tree, inst, &keys)?;
    let mut steps = Vec::new();
    let out = Rewriter {
        inst,
        level: 0,
        mirrored: false,
    }
    .rewrite(tree, &keys, &mut steps)?;
    let out = splice_redundant(&out, inst, &keys)?;
    let output_cost = cost_on(&out, inst, &keys)?;
    let trace = TransformTrace {
        steps,
        input_cost,
        output_cost,
    };
    debug_assert_eq!(
        trace.total_delta(),
        output_cost as i64 - input_cost as i64,
        "step deltas must account for the whole cost change"
    );
    debug_assert!(out.kind() == Some(TestKind::Eq) || tree.is_leaf());
    Ok((out, trace))
}

fn signed(x: u64) -> i64 {
    i64::try_from(x).expect("costs fit in i64")
}

fn violated(inequality: impl Into<String>, location: impl Into<String>) -> TransformError {
    TransformError::PreconditionViolated {
        inequality: inequality.into(),
        location: location.into(),
    }
}

/// A subtree whose keys and weight are known.
#[derive(Debug, Clone)]
struct Part {
    tree: Tree,
    keys: Vec<Key>,
    weight: u64,
}

/// A test of the Case 2 configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    I,
    J,
    K,
}

#[derive(Debug, Clone, Copy)]
struct ConfigTest {
    role: Role,
    kind: TestKind,
    key: Key,
}

/// Case 2 tree shape with holes for the named subtrees.
enum Skeleton {
    Slot,
    Test(TestKind, Key, Box<Skeleton>, Box<Skeleton>),
}

impl Skeleton {
    fn test(kind: TestKind, key: Key, yes: Skeleton, no: Skeleton) -> Self {
        Skeleton::Test(kind, key, Box::new(yes), Box::new(no))
    }

    /// A test with `child` on the `=`/`>=` side and `other` on the remaining one.
    fn keyed(kind: TestKind, key: Key, child: Skeleton, other: Skeleton) -> Self {
        match Branch::key_side(kind) {
            Branch::Yes => Skeleton::test(kind, key, child, other),
            Branch::No => Skeleton::test(kind, key, other, child),
        }
    }
}

#[derive(Debug)]
struct Placement {
    piece: Piece,
    depth: usize,
    keys: usize,
}

struct Rewriter<'a> {
    inst: &'a Instance,
    level: usize,
    mirrored: bool,
}

impl Rewriter<'_> {
    fn step(&self, case: CaseLabel, cost_delta: i64) -> TraceStep {
        TraceStep::new(case, cost_delta, self.level, self.mirrored)
    }

    fn cost(&self, tree: &Tree, keys: &[Key]) -> Result<u64, TransformError> {
        Ok(cost_on(tree, self.inst, keys)?)
    }

    /// Rewrites a valid irreducible tree over `keys`.
    fn rewrite(
        &self,
        tree: &Tree,
        keys: &[Key],
        steps: &mut Vec<TraceStep>,
    ) -> Result<Tree, TransformError> {
        let total = self.inst.weight_of(keys);
        let max_weight = keys.iter().map(|&k| self.inst.weight(k)).max().unwrap_or(0);
        if u128::from(max_weight) * 7 < u128::from(total) * 3 {
            return Err(TransformError::MaxWeightTooSmall { max_weight, total });
        }
        let Tree::Lt { key: r, lt, ge } = tree else {
            return if tree.is_leaf() {
                Err(TransformError::TooFewKeys)
            } else {
                Ok(tree.clone())
            };
        };

        if let Tree::Leaf { key } = **lt {
            steps.push(self.step(CaseLabel::Base, 0));
            return Ok(Tree::eq(key, Tree::leaf(key), (**ge).clone()));
        }
        if let Tree::Leaf { key } = **ge {
            steps.push(self.step(CaseLabel::Base, 0));
            return Ok(Tree::eq(key, Tree::leaf(key), (**lt).clone()));
        }

        let heavy_on_left = keys
            .iter()
            .any(|&k| k < *r && self.inst.weight(k) == max_weight);
        if !heavy_on_left {
            let n = self.inst.n();
            let mirror_inst = self.inst.mirrored();
            let mirror_keys: Vec<Key> = keys.iter().rev().map(|&k| n + 1 - k).collect();
            let out = Rewriter {
                inst: &mirror_inst,
                level: self.level,
                mirrored: !self.mirrored,
            }
            .rebalance(&tree.mirrored(n), &mirror_keys, steps)?;
            return Ok(out.mirrored(n));
        }
        self.rebalance(tree, keys, steps)
    }

    /// `tree = <r(L, T2)` with a heaviest key in `L` and neither child a leaf.
    fn rebalance(
        &self,
        tree: &Tree,
        keys: &[Key],
        steps: &mut Vec<TraceStep>,
    ) -> Result<Tree, TransformError> {
        let Tree::Lt { key: r, lt, ge } = tree else {
            unreachable!("rebalance is only entered at a less-than root")
        };
        let r = *r;
        let (left_keys, _) = partition(tree, keys);
        let max_weight = self.inst.weight(
            self.inst
                .max_weight_key_in(keys)
                .expect("non-empty key set"),
        );

        let mut left = if lt.kind() == Some(TestKind::Lt) {
            steps.push(self.step(CaseLabel::InductiveDescent, 0));
            let before = self.cost(lt, &left_keys)?;
            let mut nested = Vec::new();
            let out = Rewriter {
                inst: self.inst,
                level: self.level + 1,
                mirrored: self.mirrored,
            }
            .rewrite(lt, &left_keys, &mut nested)?;
            let out = splice_redundant(&out, self.inst, &left_keys)?;
            debug_assert_eq!(
                nested.iter().map(|s| s.cost_delta).sum::<i64>(),
                signed(self.cost(&out, &left_keys)?) - signed(before)
            );
            steps.extend(nested);
            out
        } else {
            (**lt).clone()
        };

        // The rewritten left subtree is optimal and equal-to rooted, so its
        // root tests a heaviest key (any two-key tree can be re-rooted).
        let Tree::Eq { key: m, .. } = &left else {
            unreachable!("the left subtree is equal-to rooted after descent")
        };
        if self.inst.weight(*m) != max_weight {
            if left_keys.len() == 2 {
                let other = *left_keys.iter().find(|&&k| k != *m).expect("two keys");
                left = Tree::eq(other, Tree::leaf(other), Tree::leaf(*m));
            } else {
                return Err(violated(
                    format!("w({m}) = max weight {max_weight}"),
                    "root of the rewritten left subtree",
                ));
            }
        }
        let current = Tree::lt(r, left, (**ge).clone());
        let ctx = ProofContext::new(self.inst, keys, &current)?;
        let (out, mut step) = if ctx.is_case1() {
            apply_case1(&ctx)?
        } else {
            apply_case2(&ctx)?
        };
        step.level = self.level;
        step.mirrored = self.mirrored;
        steps.push(step);
        Ok(out)
    }
}

/// The configuration `<r(=m(m, T1), T2)` a case rewrite starts from, with the
/// named subtrees and their key sets resolved.
#[derive(Debug, Clone)]
pub struct ProofContext<'a> {
    inst: &'a Instance,
    keys: Vec<Key>,
    tree: Tree,
    r: Key,
    m: Key,
    i_kind: TestKind,
    i_key: Key,
    t1: Part,
    t2: Part,
    t3: Part,
    t4: Part,
}

impl<'a> ProofContext<'a> {
    /// Resolves `tree = <r(=m(m, T1), T2)` over `keys`, checking that `m` is a
    /// heaviest key, that it weighs at least 3/7 of the total and that
    /// `w(T2) >= w_m`.
    pub fn new(inst: &'a Instance, keys: &[Key], tree: &Tree) -> Result<Self, TransformError> {
        validate(tree, inst, keys)?;
        let shape = || {
            TransformError::SubcaseUnreachable(format!("{tree} is not of the form <r(=m(m, T1), T2)"))
        };
        let Tree::Lt { key: r, lt, ge } = tree else {
            return Err(shape());
        };
        let Tree::Eq { key: m, no: t1, .. } = &**lt else {
            return Err(shape());
        };
        let Some(i_kind) = ge.kind() else {
            return Err(shape());
        };
        let (r, m) = (*r, *m);
        let total = inst.weight_of(keys);
        let max_weight = keys.iter().map(|&k| inst.weight(k)).max().unwrap_or(0);
        let w_m = inst.weight(m);
        if u128::from(max_weight) * 7 < u128::from(total) * 3 {
            return Err(TransformError::MaxWeightTooSmall { max_weight, total });
        }
        if w_m != max_weight {
            return Err(violated(
                format!("w({m}) = max weight {max_weight}"),
                "root of the left subtree",
            ));
        }

        let part = |tree: &Tree, keys: Vec<Key>| Part {
            tree: tree.clone(),
            weight: inst.weight_of(&keys),
            keys,
        };
        let (left_keys, right_keys) = partition(tree, keys);
        let t1_keys = left_keys.into_iter().filter(|&k| k != m).collect();
        let t1 = part(t1, t1_keys);
        let t2 = part(ge, right_keys);
        if t2.weight < w_m {
            return Err(violated(
                format!("w(T2) = {} >= w_m = {w_m}", t2.weight),
                format!("right subtree of <{r}"),
            ));
        }
        let side = Branch::key_side(i_kind);
        let (yes_keys, no_keys) = partition(ge, &t2.keys);
        let (t3_keys, t4_keys) = match side {
            Branch::Yes => (yes_keys, no_keys),
            Branch::No => (no_keys, yes_keys),
        };
        let t3 = part(ge.child(side).expect("test"), t3_keys);
        let t4 = part(ge.child(side.flip()).expect("test"), t4_keys);
        Ok(Self {
            inst,
            keys: keys.to_vec(),
            tree: tree.clone(),
            r,
            m,
            i_kind,
            i_key: ge.key(),
            t1,
            t2,
            t3,
            t4,
        })
    }

    /// `3 w(T3) >= w(T2)`.
    pub fn is_case1(&self) -> bool {
        3 * u128::from(self.t3.weight) >= u128::from(self.t2.weight)
    }

    pub fn heaviest(&self) -> Key {
        self.m
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    fn w_m(&self) -> u64 {
        self.inst.weight(self.m)
    }

    fn part(&self, tree: &Tree, keys: Vec<Key>) -> Part {
        let weight = self.inst.weight_of(&keys);
        Part { tree: tree.clone(), keys, weight }
    }

    fn cost(&self, tree: &Tree) -> Result<u64, TransformError> {
        Ok(cost_on(tree, self.inst, &self.keys)?)
    }

    /// Lifts `=m` to the root, then the `T2` root (of `kind`) under its `!=`
    /// branch, keeping that test's `=`/`>=` subtree on the same side.
    fn double_rotation(
        &self,
        tree: &Tree,
        kind: TestKind,
    ) -> Result<(Tree, Vec<RotationStep>), TransformError> {
        let keys = &self.keys;
        let first = Path(vec![Branch::Yes]);
        let lifted = rotate_up(tree, keys, &first, Branch::Yes)?;
        let second = Path(vec![Branch::No, Branch::No]);
        let side = Branch::key_side(kind);
        let out = rotate_up(&lifted, keys, &second, side)?;
        let log = vec![
            RotationStep {
                rule: "rotate-up",
                path: first,
                lifted: Some(Branch::Yes),
                key: None,
            },
            RotationStep {
                rule: "rotate-up",
                path: second,
                lifted: Some(side),
                key: None,
            },
        ];
        Ok((out, log))
    }

    /// Splices, re-measures the step on the spliced tree and checks its bound.
    fn finish(&self, out: Tree, mut step: TraceStep) -> Result<(Tree, TraceStep), TransformError> {
        let keys = &self.keys;
        let spliced = splice_redundant(&out, self.inst, keys)?;
        step.cost_delta -= signed(self.cost(&out)?) - signed(self.cost(&spliced)?);
        if !step.respects_bound() {
            return Err(TransformError::BoundViolated {
                case: step.case,
                delta: step.cost_delta,
                bound: step.bound.unwrap_or(0),
            });
        }
        debug_assert!(is_irreducible(&spliced, keys));
        Ok((spliced, step))
    }

    /// The general Case 2 construction; `T4` has at least three leaves.
    fn case2(&self) -> Result<(Tree, TraceStep), TransformError> {
        let (r, m, i_kind, i_key) = (self.r, self.m, self.i_kind, self.i_key);
        let (t1, t3, t4, keys) = (&self.t1, &self.t3, &self.t4, &self.keys);

        // A less-than root of T4 with a leaf child is an equal-to test on that
        // leaf in disguise.
        let j_node = match &t4.tree {
            Tree::Lt { lt, ge, .. } if lt.is_leaf() => {
                Tree::eq(lt.key(), (**lt).clone(), (**ge).clone())
            }
            Tree::Lt { lt, ge, .. } if ge.is_leaf() => {
                Tree::eq(ge.key(), (**ge).clone(), (**lt).clone())
            }
            other => other.clone(),
        };
        let j_kind = j_node.kind().expect("T4 has at least three leaves");
        let j_side = Branch::key_side(j_kind);
        let (j_yes, j_no) = partition(&j_node, &t4.keys);
        let (t5_keys, rest_keys) = match j_side {
            Branch::Yes => (j_yes, j_no),
            Branch::No => (j_no, j_yes),
        };
        let t5 = self.part(j_node.child(j_side).expect("test"), t5_keys);
        let k_node = j_node.child(j_side.flip()).expect("test");
        let Some(k_kind) = k_node.kind() else {
            return Err(TransformError::SubcaseUnreachable(
                "the != / < branch of ?j is a leaf although T4 has three leaves".into(),
            ));
        };
        let k_side = Branch::key_side(k_kind);
        let (k_yes, k_no) = partition(k_node, &rest_keys);
        let (t6_keys, t7_keys) = match k_side {
            Branch::Yes => (k_yes, k_no),
            Branch::No => (k_no, k_yes),
        };
        let t6 = self.part(k_node.child(k_side).expect("test"), t6_keys);
        let t7 = self.part(k_node.child(k_side.flip()).expect("test"), t7_keys);

        // Less-than thresholds are moved to the smallest key on their >=
        // side, which keeps the routing and makes i, j, k pairwise distinct.
        let canonical = |kind: TestKind, key: Key, key_side: &Part| match kind {
            TestKind::Eq => key,
            TestKind::Lt => key_side.keys[0],
        };
        let tests = [
                ConfigTest {
                    role: Role::I,
                    kind: i_kind,
                    key: canonical(i_kind, i_key, t3),
                },
                ConfigTest {
                    role: Role::J,
                    kind: j_kind,
                    key: canonical(j_kind, j_node.key(), &t5),
                },
                ConfigTest {
                    role: Role::K,
                    kind: k_kind,
                    key: canonical(k_kind, k_node.key(), &t6),
                },
            ];
        let mut sorted = tests;
        sorted.sort_by_key(|t| t.key);
        let [b1, b2, b3] = sorted;
        if b1.key == b2.key || b2.key == b3.key {
            return Err(TransformError::SubcaseUnreachable(format!(
                "tests on keys {}, {}, {} are not distinct",
                b1.key, b2.key, b3.key
            )));
        }
        if r >= b2.key {
            return Err(TransformError::SubcaseUnreachable(format!(
                "<{r} and <{} coincide",
                b2.key
            )));
        }

        use Skeleton::Slot;
        let q1 = Skeleton::test(b1.kind, b1.key, Slot, Slot);
        let (case, g) = match (b2.kind, b2.role) {
            (TestKind::Lt, Role::I) => {
                return Err(TransformError::SubcaseUnreachable(
                    "?b2 = <i cannot be the middle key".into(),
                ))
            }
            (TestKind::Lt, role) => {
                let case = if role == Role::J {
                    CaseLabel::Case2_1_1
                } else {
                    CaseLabel::Case2_1_2
                };
                (case, Skeleton::test(b3.kind, b3.key, Slot, Slot))
            }
            (TestKind::Eq, role) => {
                let (case, b3_first) = match role {
                    Role::I if j_kind == TestKind::Eq => (CaseLabel::Case2_2_1, false),
                    Role::I => (CaseLabel::Case2_2_2, true),
                    Role::J => (CaseLabel::Case2_2_3, b3.role == Role::I),
                    Role::K => (CaseLabel::Case2_2_4, true),
                };
                let g = if b3_first {
                    Skeleton::keyed(
                        b3.kind,
                        b3.key,
                        Slot,
                        Skeleton::test(TestKind::Eq, b2.key, Slot, Slot),
                    )
                } else {
                    Skeleton::test(
                        TestKind::Eq,
                        b2.key,
                        Slot,
                        Skeleton::test(b3.kind, b3.key, Slot, Slot),
                    )
                };
                (case, g)
            }
        };
        let skeleton = Skeleton::test(
            TestKind::Lt,
            b2.key,
            Skeleton::test(TestKind::Lt, r, Slot, q1),
            g,
        );

        let pieces = [
            (Piece::T1, t1),
            (Piece::T3, t3),
            (Piece::T5, &t5),
            (Piece::T6, &t6),
            (Piece::T7, &t7),
        ];
        let keys_below_m: Vec<Key> = keys.iter().copied().filter(|&k| k != m).collect();
        let mut placements = Vec::new();
        let below = self.fill(&skeleton, &keys_below_m, 1, &pieces, m, &mut placements)?;
        let out = Tree::eq(m, Tree::leaf(m), below);

        let moves = |piece: Piece| {
            placements
                .iter()
                .filter(|p| p.piece == piece && p.keys > 0)
                .map(|p| p.depth as i64 - piece.original_depth() as i64)
                .max()
        };
        for piece in [Piece::T6, Piece::T7] {
            if moves(piece).is_some_and(|d| d > 0) {
                return Err(TransformError::SubcaseUnreachable(format!(
                    "{case}: {piece:?} moved down"
                )));
            }
        }
        let t3_down = moves(Piece::T3).unwrap_or(0);
        let t5_down = moves(Piece::T5).unwrap_or(0);
        let condition = if t3_down <= 2 && t5_down <= 0 {
            DepthCondition::J1
        } else if j_kind == TestKind::Eq && t3_down <= 1 && t5_down <= 1 {
            if t5.weight > t3.weight {
                return Err(violated(
                    format!("w_j = {} <= w(T3) = {}", t5.weight, t3.weight),
                    format!("?j = ={}", j_node.key()),
                ));
            }
            DepthCondition::J2
        } else {
            return Err(TransformError::SubcaseUnreachable(format!(
                "{case}: T3 moved {t3_down}, T5 moved {t5_down}"
            )));
        };

        let mut fractured: Vec<Piece> = Vec::new();
        for p in &placements {
            let copies = placements
                .iter()
                .filter(|q| q.piece == p.piece && q.keys > 0)
                .count();
            if copies > 1 && !fractured.contains(&p.piece) {
                fractured.push(p.piece);
            }
        }
        let mut step = TraceStep::new(case, 0, 0, false);
        step.condition = Some(condition);
        step.fractured = fractured;
        if matches!(case, CaseLabel::Case2_2_1 | CaseLabel::Case2_2_2 | CaseLabel::Case2_2_3 | CaseLabel::Case2_2_4) {
            step.rotations.push(RotationStep {
                rule: "insert-lt",
                path: Path(vec![Branch::No]),
                lifted: None,
                key: Some(b2.key),
            });
        }
        Ok((out, step))
    }

    /// Fills every slot with the named subtree holding all keys that reach it.
    /// Slots reached by no key get a placeholder leaf, removed by splicing.
    fn fill(
        &self,
        skeleton: &Skeleton,
        keys: &[Key],
        depth: usize,
        pieces: &[(Piece, &Part)],
        filler: Key,
        placements: &mut Vec<Placement>,
    ) -> Result<Tree, TransformError> {
        match skeleton {
            Skeleton::Test(kind, key, yes, no) => {
                let node = Tree::test(*kind, *key, Tree::leaf(filler), Tree::leaf(filler));
                let (y, n) = partition(&node, keys);
                Ok(Tree::test(
                    *kind,
                    *key,
                    self.fill(yes, &y, depth + 1, pieces, filler, placements)?,
                    self.fill(no, &n, depth + 1, pieces, filler, placements)?,
                ))
            }
            Skeleton::Slot if keys.is_empty() => Ok(Tree::leaf(filler)),
            Skeleton::Slot => {
                let (piece, part) = pieces
                    .iter()
                    .find(|(_, part)| keys.iter().all(|k| part.keys.contains(k)))
                    .ok_or_else(|| {
                        TransformError::SubcaseUnreachable(format!(
                            "slot at depth {depth} receives keys {keys:?} from several subtrees"
                        ))
                    })?;
                placements.push(Placement {
                    piece: *piece,
                    depth,
                    keys: keys.len(),
                });
                Ok(part.tree.clone())
            }
        }
    }
}

/// Case 1: lifts `=m` to the root and `?i` under its `!=` branch. The cost
/// changes by exactly `w(T1) + w(T4) - w_m`.
pub fn apply_case1(ctx: &ProofContext) -> Result<(Tree, TraceStep), TransformError> {
    if !ctx.is_case1() {
        return Err(violated(
            format!("3 w(T3) = {} >= w(T2) = {}", 3 * ctx.t3.weight, ctx.t2.weight),
            "Case 1",
        ));
    }
    let bound = signed(ctx.t1.weight) + signed(ctx.t4.weight) - signed(ctx.w_m());
    let before = ctx.cost(&ctx.tree)?;
    let (out, rotations) = ctx.double_rotation(&ctx.tree, ctx.i_kind)?;
    let mut step = TraceStep::new(CaseLabel::Case1, signed(ctx.cost(&out)?) - signed(before), 0, false);
    step.bound = Some(bound);
    step.rotations = rotations;
    ctx.finish(out, step)
}

/// Case 2: rebuilds the top of the tree around `=m`, `<b2` and `<r`. The cost
/// rises by at most `w(T1) - w_m + 2 w(T3)`.
pub fn apply_case2(ctx: &ProofContext) -> Result<(Tree, TraceStep), TransformError> {
    if ctx.is_case1() {
        return Err(violated(
            format!("3 w(T3) = {} < w(T2) = {}", 3 * ctx.t3.weight, ctx.t2.weight),
            "Case 2",
        ));
    }
    let bound = signed(ctx.t1.weight) - signed(ctx.w_m()) + 2 * signed(ctx.t3.weight);
    let before = signed(ctx.cost(&ctx.tree)?);
    let (t3, t4) = (&ctx.t3, &ctx.t4);
    if let Tree::Leaf { key: j } = t4.tree {
        let Tree::Lt { lt: left, .. } = &ctx.tree else {
            unreachable!("checked by ProofContext::new")
        };
        let replaced = Tree::lt(ctx.r, (**left).clone(), Tree::eq(j, Tree::leaf(j), t3.tree.clone()));
        let (out, rotations) = ctx.double_rotation(&replaced, TestKind::Eq)?;
        let mut step = TraceStep::new(CaseLabel::Case2T4Leaf, signed(ctx.cost(&out)?) - before, 0, false);
        step.bound = Some(bound);
        step.rotations = rotations;
        return ctx.finish(out, step);
    }
    if t4.tree.leaf_count() == 2 {
        let leaves = t4.tree.leaves();
        let (wk, wj) = (ctx.inst.weight(leaves[0]), ctx.inst.weight(leaves[1]));
        let inequality = if wk.max(wj) > t3.weight {
            format!("w_k = {wk}, w_j = {wj} <= w(T3) = {}", t3.weight)
        } else {
            format!(
                "w(T2) = {} <= 3 w(T3) = {} contradicts 3 w(T3) < w(T2)",
                ctx.t2.weight,
                3 * t3.weight
            )
        };
        return Err(violated(inequality, "T4 with two leaves"));
    }
    let (out, mut step) = ctx.case2()?;
    step.cost_delta = signed(ctx.cost(&out)?) - before;
    step.bound = Some(bound);
    ctx.finish(out, step)
}
