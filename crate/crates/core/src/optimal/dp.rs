//! Dynamic program over "interval minus its heaviest keys".
//!
//! Subproblem `(i, j, h)` is the key interval `[i, j]` with its `h` heaviest
//! keys removed, "heaviest" meaning first in the order weight descending,
//! index ascending. An equal-to test always probes the heaviest remaining key,
//! which turns `(i, j, h)` into `(i, j, h + 1)`. A less-than test at `t`
//! splits it into `(i, t - 1, h_L)` and `(t, j, h - h_L)`, where `h_L` counts
//! the removed keys below `t`; the removed keys of each side are again the
//! heaviest of that side, so the state space stays closed. Thresholds are
//! canonical: `t` is the smallest remaining key of the right part.
//!
//! Restricting equal-to tests to the heaviest key never loses the optimum,
//! but the cheapest equal-to-rooted tree may probe another key at its root:
//! a different heaviest key when weights tie, or any key when that tree is not
//! optimal. [`Dp::rooted_costs`] covers both by solving the instance without
//! each candidate root key.

use crate::instance::{Instance, Key};
use crate::tree::{TestKind, Tree};

use super::{OptError, OptResult, RootKind, TiePreference};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Subproblem {
    pub i: Key,
    pub j: Key,
    pub h: usize,
}

impl Subproblem {
    pub fn new(i: Key, j: Key, h: usize) -> Self {
        debug_assert!(1 <= i && i <= j && h <= j - i + 1);
        Self { i, j, h }
    }

    pub fn len(self) -> usize {
        self.j - self.i + 1
    }

    pub fn remaining(self) -> usize {
        self.len() - self.h
    }

    pub fn is_empty(self) -> bool {
        self.remaining() == 0
    }
}

/// A candidate split of a subproblem.
#[derive(Debug, Clone, Copy)]
struct Split {
    key: Key,
    left: Subproblem,
    right: Subproblem,
}

#[derive(Debug, Clone)]
pub struct Dp {
    inst: Instance,
    /// Keys of each interval `[i, j]` in heaviest-first order.
    orders: Vec<Vec<Key>>,
    values: Vec<u64>,
}

impl Dp {
    pub fn new(inst: &Instance) -> Self {
        let n = inst.n();
        let mut dp = Dp {
            inst: inst.clone(),
            orders: vec![Vec::new(); n * n],
            values: vec![u64::MAX; n * n * (n + 1)],
        };
        for i in 1..=n {
            for j in i..=n {
                let mut order: Vec<Key> = (i..=j).collect();
                order.sort_by(|&a, &b| inst.tie_order(a, b));
                dp.orders[(i - 1) * n + (j - 1)] = order;
            }
        }
        for len in 1..=n {
            for i in 1..=n + 1 - len {
                let j = i + len - 1;
                for h in (0..=len).rev() {
                    let sub = Subproblem::new(i, j, h);
                    let value = if sub.remaining() <= 1 {
                        0
                    } else {
                        let eq = dp.value(Subproblem::new(i, j, h + 1));
                        let lt = dp
                            .splits(sub)
                            .map(|s| dp.value(s.left) + dp.value(s.right))
                            .min()
                            .expect("two remaining keys always split");
                        dp.weight(sub) + eq.min(lt)
                    };
                    let idx = dp.index(sub);
                    dp.values[idx] = value;
                }
            }
        }
        dp
    }

    pub fn instance(&self) -> &Instance {
        &self.inst
    }

    fn index(&self, sub: Subproblem) -> usize {
        let n = self.inst.n();
        ((sub.i - 1) * n + (sub.j - 1)) * (n + 1) + sub.h
    }

    fn order(&self, i: Key, j: Key) -> &[Key] {
        &self.orders[(i - 1) * self.inst.n() + (j - 1)]
    }

    /// The keys removed from `[i, j]`.
    pub fn removed(&self, sub: Subproblem) -> &[Key] {
        &self.order(sub.i, sub.j)[..sub.h]
    }

    /// The keys of the subproblem, ascending.
    pub fn keys(&self, sub: Subproblem) -> Vec<Key> {
        let removed = self.removed(sub);
        (sub.i..=sub.j).filter(|k| !removed.contains(k)).collect()
    }

    /// Heaviest remaining key.
    pub fn heaviest(&self, sub: Subproblem) -> Option<Key> {
        self.order(sub.i, sub.j).get(sub.h).copied()
    }

    pub fn weight(&self, sub: Subproblem) -> u64 {
        self.order(sub.i, sub.j)[sub.h..]
            .iter()
            .map(|&k| self.inst.weight(k))
            .sum()
    }

    /// Optimal cost of a subproblem.
    pub fn value(&self, sub: Subproblem) -> u64 {
        let value = self.values[self.index(sub)];
        debug_assert_ne!(value, u64::MAX, "subproblem {sub:?} read before it was filled");
        value
    }

    fn splits(&self, sub: Subproblem) -> impl Iterator<Item = Split> + '_ {
        let removed = self.removed(sub);
        let mut removed_below = 0;
        let mut remaining_below = 0;
        (sub.i..=sub.j).filter_map(move |t| {
            let is_removed = removed.contains(&t);
            let split = (!is_removed && remaining_below > 0).then(|| Split {
                key: t,
                left: Subproblem::new(sub.i, t - 1, removed_below),
                right: Subproblem::new(t, sub.j, sub.h - removed_below),
            });
            if is_removed {
                removed_below += 1;
            } else {
                remaining_below += 1;
            }
            split
        })
    }

    fn full(&self) -> Subproblem {
        Subproblem::new(1, self.inst.n(), 0)
    }

    /// `(E, L)` for a subproblem with at least two keys, where the equal-to
    /// root may only probe the first heaviest key in the tie order.
    pub fn rooted_costs_of(&self, sub: Subproblem) -> Result<(u64, u64), OptError> {
        if sub.remaining() < 2 {
            return Err(OptError::NoSuchTree);
        }
        let eq = self.value(Subproblem::new(sub.i, sub.j, sub.h + 1));
        let lt = self
            .splits(sub)
            .map(|s| self.value(s.left) + self.value(s.right))
            .min()
            .expect("two remaining keys always split");
        let w = self.weight(sub);
        Ok((w + eq, w + lt))
    }

    /// `(E, L)` for the whole instance.
    pub fn rooted_costs(&self) -> Result<(u64, u64), OptError> {
        let (_, lt) = self.rooted_costs_of(self.full())?;
        let (_, rest) = self.best_eq_root(lt);
        Ok((self.inst.total() + rest, lt))
    }

    /// The root key of a cheapest equal-to-rooted tree and the optimal cost
    /// of the other keys. Heaviest keys are tried first; the remaining keys
    /// only matter when that tree would cost more than `lt`. Ties go to the
    /// smallest key.
    fn best_eq_root(&self, lt: u64) -> (Key, u64) {
        let w_max = self.inst.max_weight();
        let best_among = |heavy: bool| {
            self.inst
                .keys()
                .filter(|&k| (self.inst.weight(k) == w_max) == heavy)
                .map(|k| {
                    let rest = self.without(k);
                    (k, rest.value(rest.full()))
                })
                .min_by_key(|&(k, rest)| (rest, k))
        };
        let heavy = best_among(true).expect("some key is heaviest");
        if self.inst.total() + heavy.1 <= lt {
            return heavy;
        }
        match best_among(false) {
            Some(light) if (light.1, light.0) < (heavy.1, heavy.0) => light,
            _ => heavy,
        }
    }

    /// The program for the instance with `key` removed, keys renumbered.
    fn without(&self, key: Key) -> Dp {
        let mut weights = self.inst.weights().to_vec();
        weights.remove(key - 1);
        Dp::new(&Instance::new(weights).expect("a sub-instance of a valid instance"))
    }

    pub fn solve(&self, pref: TiePreference) -> OptResult {
        let full = self.full();
        let (root_kind, tree) = match self.rooted_costs() {
            Ok((eq, lt)) => {
                let root_kind = RootKind::from_costs(eq, lt);
                let kind = match (root_kind, pref) {
                    (RootKind::Eq, _) | (RootKind::Both, TiePreference::PreferEq) => TestKind::Eq,
                    _ => TestKind::Lt,
                };
                (root_kind, self.optimal_rooted_tree(kind, pref).expect("two keys"))
            }
            Err(_) => (RootKind::Leaf, self.tree(full, pref)),
        };
        OptResult {
            cost: self.value(full),
            root_kind,
            tree,
        }
    }

    /// A cheapest tree for the whole instance whose root is a `kind` test.
    pub fn optimal_rooted_tree(&self, kind: TestKind, pref: TiePreference) -> Result<Tree, OptError> {
        let full = self.full();
        if full.remaining() < 2 {
            return Err(OptError::NoSuchTree);
        }
        Ok(match kind {
            TestKind::Eq => {
                let (_, lt) = self.rooted_costs_of(full)?;
                let (key, _) = self.best_eq_root(lt);
                let rest = self.without(key);
                let rest = rest.tree(rest.full(), pref);
                let shift = |k: Key| if k >= key { k + 1 } else { k };
                Tree::eq(key, Tree::leaf(key), rest.map_keys(&shift))
            }
            TestKind::Lt => self.rooted_tree(full, kind, pref),
        })
    }

    pub fn tree(&self, sub: Subproblem, pref: TiePreference) -> Tree {
        match sub.remaining() {
            0 => panic!("empty subproblem {sub:?}"),
            1 => Tree::leaf(self.heaviest(sub).expect("one key remains")),
            _ => {
                let (eq, lt) = self.rooted_costs_of(sub).expect("two keys remain");
                let kind = match (eq.cmp(&lt), pref) {
                    (std::cmp::Ordering::Less, _)
                    | (std::cmp::Ordering::Equal, TiePreference::PreferEq) => TestKind::Eq,
                    _ => TestKind::Lt,
                };
                self.rooted_tree(sub, kind, pref)
            }
        }
    }

    pub fn rooted_tree(&self, sub: Subproblem, kind: TestKind, pref: TiePreference) -> Tree {
        match kind {
            TestKind::Eq => {
                let key = self.heaviest(sub).expect("non-empty subproblem");
                let rest = Subproblem::new(sub.i, sub.j, sub.h + 1);
                Tree::eq(key, Tree::leaf(key), self.tree(rest, pref))
            }
            TestKind::Lt => {
                let split = self
                    .splits(sub)
                    .min_by_key(|s| self.value(s.left) + self.value(s.right))
                    .expect("two remaining keys always split");
                Tree::lt(
                    split.key,
                    self.tree(split.left, pref),
                    self.tree(split.right, pref),
                )
            }
        }
    }
}

pub fn dp_opt(inst: &Instance) -> OptResult {
    Dp::new(inst).solve(TiePreference::default())
}

/// Optimal cost among trees whose root is a `kind` test; needs `n >= 2`.
pub fn dp_opt_rooted(inst: &Instance, kind: TestKind) -> Result<u64, OptError> {
    let (eq, lt) = Dp::new(inst).rooted_costs()?;
    Ok(match kind {
        TestKind::Eq => eq,
        TestKind::Lt => lt,
    })
}
