//! Exhaustive ground truth over key subsets.
//!
//! `opt(S) = 0` for a single key, otherwise
//! `W(S) + min( min_{k in S} opt(S \ {k}),  min_t opt(S_<t) + opt(S_>=t) )`
//! where `=k` puts leaf `k` on its yes branch and `t` ranges over keys of `S`
//! other than the smallest. Testing keys outside `S`, or thresholds that do
//! not split `S`, only adds redundant branches, so this ranges over every
//! irreducible tree. The table is indexed by bitmask and filled in increasing
//! mask order, which visits every subset before its supersets.

use std::fmt;

use crate::instance::{Instance, Key};
use crate::tree::{TestKind, Tree};

use super::{OptError, OptResult, RootKind, TiePreference};

pub const MAX_ORACLE_KEYS: usize = 15;

/// A set of keys; bit `k - 1` stands for key `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KeyMask(pub u32);

impl KeyMask {
    pub fn full(n: usize) -> Self {
        assert!(n <= 31, "key masks hold at most 31 keys");
        KeyMask(((1u64 << n) - 1) as u32)
    }

    pub fn from_keys(keys: &[Key]) -> Self {
        KeyMask(keys.iter().fold(0, |acc, &k| acc | (1 << (k - 1))))
    }

    pub fn keys(self) -> Vec<Key> {
        (0..32)
            .filter(|bit| self.0 & (1 << bit) != 0)
            .map(|bit| bit as Key + 1)
            .collect()
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, key: Key) -> bool {
        (1..=32).contains(&key) && self.0 & (1 << (key - 1)) != 0
    }

    pub fn without(self, key: Key) -> Self {
        KeyMask(self.0 & !(1 << (key - 1)))
    }

    /// Keys of `self` below `key`.
    pub fn below(self, key: Key) -> Self {
        KeyMask(self.0 & ((1u32 << (key - 1)) - 1))
    }
}

impl fmt::Display for KeyMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let keys: Vec<String> = self.keys().iter().map(|k| k.to_string()).collect();
        write!(f, "{{{}}}", keys.join(","))
    }
}

/// Optimal costs of every subset of an instance's keys.
#[derive(Debug, Clone)]
pub struct Oracle {
    weights: Vec<u64>,
    /// Optimal cost per subset.
    costs: Vec<u64>,
    /// Total weight per subset.
    loads: Vec<u64>,
}

impl Oracle {
    pub fn new(inst: &Instance) -> Result<Self, OptError> {
        let mut oracle = Oracle {
            weights: Vec::new(),
            costs: Vec::new(),
            loads: Vec::new(),
        };
        oracle.refill(inst)?;
        Ok(oracle)
    }

    /// Recomputes the table for another instance, reusing the buffers.
    pub fn refill(&mut self, inst: &Instance) -> Result<(), OptError> {
        let n = inst.n();
        if n > MAX_ORACLE_KEYS {
            return Err(OptError::TooManyKeys {
                n,
                max: MAX_ORACLE_KEYS,
            });
        }
        let size = 1usize << n;
        self.weights.clear();
        self.weights.extend_from_slice(inst.weights());
        self.costs.clear();
        self.costs.resize(size, 0);
        self.loads.clear();
        self.loads.resize(size, 0);

        for mask in 1..size as u32 {
            let low = mask & mask.wrapping_neg();
            let load = self.loads[(mask ^ low) as usize] + self.weights[low.trailing_zeros() as usize];
            self.loads[mask as usize] = load;
            if mask == low {
                continue;
            }
            let (eq, lt) = self.best_children(mask);
            self.costs[mask as usize] = load + eq.min(lt);
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    /// Cheapest children cost below an equal-to root and below a less-than
    /// root, for a set with at least two keys.
    fn best_children(&self, mask: u32) -> (u64, u64) {
        let mut eq = u64::MAX;
        let mut bits = mask;
        while bits != 0 {
            let bit = bits & bits.wrapping_neg();
            eq = eq.min(self.costs[(mask ^ bit) as usize]);
            bits ^= bit;
        }
        let mut lt = u64::MAX;
        let mut bits = mask & (mask - 1);
        while bits != 0 {
            let bit = bits & bits.wrapping_neg();
            let left = mask & (bit - 1);
            lt = lt.min(self.costs[left as usize] + self.costs[(mask ^ left) as usize]);
            bits ^= bit;
        }
        (eq, lt)
    }

    fn check(&self, set: KeyMask) -> Result<(), OptError> {
        if set.is_empty() {
            return Err(OptError::EmptySet);
        }
        if set.0 & !KeyMask::full(self.n()).0 != 0 {
            return Err(OptError::ForeignKeys(set.0));
        }
        Ok(())
    }

    pub fn cost(&self, set: KeyMask) -> Result<u64, OptError> {
        self.check(set)?;
        Ok(self.costs[set.0 as usize])
    }

    pub fn weight(&self, set: KeyMask) -> u64 {
        self.loads[set.0 as usize]
    }

    /// `(E, L)`: optimal cost with an equal-to root and with a less-than root.
    pub fn rooted_costs(&self, set: KeyMask) -> Result<(u64, u64), OptError> {
        self.check(set)?;
        if set.len() < 2 {
            return Err(OptError::NoSuchTree);
        }
        let (eq, lt) = self.best_children(set.0);
        let load = self.loads[set.0 as usize];
        Ok((load + eq, load + lt))
    }

    pub fn rooted_cost(&self, set: KeyMask, kind: TestKind) -> Result<u64, OptError> {
        let (eq, lt) = self.rooted_costs(set)?;
        Ok(match kind {
            TestKind::Eq => eq,
            TestKind::Lt => lt,
        })
    }

    pub fn root_kind(&self, set: KeyMask) -> Result<RootKind, OptError> {
        self.check(set)?;
        if set.len() == 1 {
            return Ok(RootKind::Leaf);
        }
        let (eq, lt) = self.rooted_costs(set)?;
        Ok(RootKind::from_costs(eq, lt))
    }

    pub fn solve(&self, set: KeyMask, pref: TiePreference) -> Result<OptResult, OptError> {
        Ok(OptResult {
            cost: self.cost(set)?,
            root_kind: self.root_kind(set)?,
            tree: self.tree(set, pref)?,
        })
    }

    /// An optimal tree for `set`.
    pub fn tree(&self, set: KeyMask, pref: TiePreference) -> Result<Tree, OptError> {
        self.check(set)?;
        if set.len() == 1 {
            return Ok(Tree::leaf(set.keys()[0]));
        }
        let (eq, lt) = self.rooted_costs(set)?;
        let kind = match (eq.cmp(&lt), pref) {
            (std::cmp::Ordering::Less, _) | (std::cmp::Ordering::Equal, TiePreference::PreferEq) => {
                TestKind::Eq
            }
            _ => TestKind::Lt,
        };
        self.rooted_tree(set, kind, pref)
    }

    /// An optimal tree for `set` among those whose root is a `kind` test.
    /// Equal-to roots test the heaviest key attaining the minimum (smallest
    /// index on ties); less-than roots use the smallest optimal threshold.
    pub fn rooted_tree(
        &self,
        set: KeyMask,
        kind: TestKind,
        pref: TiePreference,
    ) -> Result<Tree, OptError> {
        let target = self.rooted_cost(set, kind)? - self.weight(set);
        let keys = set.keys();
        match kind {
            TestKind::Eq => {
                let key = keys
                    .iter()
                    .copied()
                    .filter(|&k| self.costs[set.without(k).0 as usize] == target)
                    .min_by(|&a, &b| {
                        self.weights[b - 1]
                            .cmp(&self.weights[a - 1])
                            .then(a.cmp(&b))
                    })
                    .expect("the minimum is attained");
                Ok(Tree::eq(
                    key,
                    Tree::leaf(key),
                    self.tree(set.without(key), pref)?,
                ))
            }
            TestKind::Lt => {
                let (key, left) = keys[1..]
                    .iter()
                    .map(|&t| (t, set.below(t)))
                    .find(|&(_, left)| {
                        let right = KeyMask(set.0 ^ left.0);
                        self.costs[left.0 as usize] + self.costs[right.0 as usize] == target
                    })
                    .expect("the minimum is attained");
                let right = KeyMask(set.0 ^ left.0);
                Ok(Tree::lt(key, self.tree(left, pref)?, self.tree(right, pref)?))
            }
        }
    }
}

/// Optimal tree over the keys in `set`.
pub fn oracle_opt(set: KeyMask, inst: &Instance) -> Result<OptResult, OptError> {
    Oracle::new(inst)?.solve(set, TiePreference::default())
}

/// Optimal cost over the keys in `set` among trees rooted at a `kind` test.
pub fn oracle_opt_rooted(set: KeyMask, inst: &Instance, kind: TestKind) -> Result<u64, OptError> {
    Oracle::new(inst)?.rooted_cost(set, kind)
}
