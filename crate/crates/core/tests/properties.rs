use proptest::prelude::*;

use twcst::eval::{cost_by_node_load, is_irreducible, validate};
use twcst::lemmas::{check_eq_root_max_weight, check_side_weight_monotonicity};
use twcst::optimal::{Dp, KeyMask, Oracle, TiePreference};
use twcst::rotations::{inverse_rotation, rotate_up};
use twcst::{cost, cost_on, search, splice_redundant, Branch, Instance, Key, Path, TestKind, Tree};

fn instance(max_n: usize, max_w: u64) -> impl Strategy<Value = Instance> {
    prop::collection::vec(0..=max_w, 1..=max_n).prop_map(|w| Instance::new(w).unwrap())
}

/// A valid tree over `keys` whose shape is driven by `choices`; less-than
/// thresholds may leave one side without keys, so the tree can be reducible.
fn build(keys: &[Key], choices: &mut impl Iterator<Item = u32>) -> Tree {
    if keys.len() == 1 {
        return Tree::leaf(keys[0]);
    }
    let c = choices.next().unwrap_or(0);
    if c.is_multiple_of(3) {
        let k = keys[(c as usize / 3) % keys.len()];
        let rest: Vec<Key> = keys.iter().copied().filter(|&x| x != k).collect();
        Tree::eq(k, Tree::leaf(k), build(&rest, choices))
    } else {
        let at = 1 + (c as usize / 3) % (keys.len() - 1);
        Tree::lt(
            keys[at],
            build(&keys[..at], choices),
            build(&keys[at..], choices),
        )
    }
}

/// Wraps `tree` so some branches receive no keys.
fn with_dead_branches(tree: Tree, n: usize, choices: &mut impl Iterator<Item = u32>) -> Tree {
    match choices.next().unwrap_or(0) % 4 {
        0 => Tree::lt(1, Tree::leaf(1), tree),
        1 => Tree::lt(n, tree, Tree::leaf(n)),
        _ => tree,
    }
}

fn instance_and_tree() -> impl Strategy<Value = (Instance, Tree)> {
    (instance(9, 20), prop::collection::vec(any::<u32>(), 32)).prop_map(|(inst, choices)| {
        let keys: Vec<Key> = inst.keys().collect();
        let mut it = choices.into_iter();
        let tree = build(&keys, &mut it);
        (inst, tree)
    })
}

fn depth(tree: &Tree, key: Key) -> u64 {
    search(tree, key).depth as u64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn leaf_depth_cost_equals_node_load_cost((inst, tree) in instance_and_tree()) {
        let keys: Vec<Key> = inst.keys().collect();
        prop_assert_eq!(cost(&tree, &inst), cost_by_node_load(&tree, &inst, &keys));
    }

    #[test]
    fn every_key_reaches_its_leaf((inst, tree) in instance_and_tree()) {
        let keys: Vec<Key> = inst.keys().collect();
        prop_assert!(validate(&tree, &inst, &keys).is_ok());
        for k in inst.keys() {
            prop_assert_eq!(search(&tree, k).key, k);
        }
    }

    #[test]
    fn splice_is_idempotent_and_never_costs_more(
        (inst, tree) in instance_and_tree(),
        extra in prop::collection::vec(any::<u32>(), 4),
    ) {
        let keys: Vec<Key> = inst.keys().collect();
        let tree = with_dead_branches(tree, inst.n(), &mut extra.into_iter());
        let once = splice_redundant(&tree, &inst, &keys).unwrap();
        let twice = splice_redundant(&once, &inst, &keys).unwrap();
        prop_assert_eq!(&once, &twice);
        prop_assert!(is_irreducible(&once, &keys));
        prop_assert!(cost(&once, &inst).unwrap() <= cost(&tree, &inst).unwrap());
        for k in inst.keys() {
            prop_assert_eq!(search(&once, k).key, k);
        }
    }

    #[test]
    fn rotations_move_depths_by_one_and_invert(
        (inst, tree) in instance_and_tree(),
        pick in any::<prop::sample::Index>(),
        lift_yes in any::<bool>(),
    ) {
        let keys: Vec<Key> = inst.keys().collect();
        let candidates: Vec<Path> = tree
            .preorder()
            .into_iter()
            .filter(|(path, node)| !path.is_empty() && !node.is_leaf())
            .map(|(path, _)| path)
            .collect();
        if candidates.is_empty() {
            return Ok(());
        }
        let child_path = pick.get(&candidates).clone();
        let lifted = if lift_yes { Branch::Yes } else { Branch::No };
        let Ok(rotated) = rotate_up(&tree, &keys, &child_path, lifted) else {
            return Ok(());
        };
        let (parent_path, side) = child_path.parent().unwrap();
        let mut expected = cost(&tree, &inst).unwrap() as i64;
        for k in inst.keys() {
            let before = depth(&tree, k);
            let after = depth(&rotated, k);
            let moved = after as i64 - before as i64;
            // Queries into the lifted subtree rise, queries into the parent's
            // other subtree sink, the rest stay put.
            let want = if is_below(&tree, k, &child_path.child(lifted)) {
                -1
            } else if is_below(&tree, k, &parent_path.child(side.flip())) {
                1
            } else {
                0
            };
            prop_assert_eq!(moved, want, "key {}", k);
            expected += moved * inst.weight(k) as i64;
        }
        prop_assert_eq!(cost(&rotated, &inst).unwrap() as i64, expected);
        let (back_path, back_lift) = inverse_rotation(&child_path, lifted).unwrap();
        prop_assert_eq!(rotate_up(&rotated, &keys, &back_path, back_lift).unwrap(), tree);
    }

    #[test]
    fn cost_is_invariant_under_mirroring((inst, tree) in instance_and_tree()) {
        let n = inst.n();
        let mirrored = tree.mirrored(n);
        prop_assert_eq!(cost(&mirrored, &inst.mirrored()), cost(&tree, &inst));
        prop_assert_eq!(mirrored.mirrored(n), tree);
    }

    #[test]
    fn dp_matches_oracle(inst in instance(9, 6)) {
        let oracle = Oracle::new(&inst).unwrap();
        let full = KeyMask::full(inst.n());
        let dp = Dp::new(&inst);
        let optimum = oracle.cost(full).unwrap();
        prop_assert_eq!(dp.solve(TiePreference::PreferEq).cost, optimum);
        if inst.n() >= 2 {
            prop_assert_eq!(dp.rooted_costs().unwrap(), oracle.rooted_costs(full).unwrap());
        }
        for pref in [TiePreference::PreferEq, TiePreference::PreferLt] {
            let tree = dp.solve(pref).tree;
            prop_assert_eq!(cost(&tree, &inst).unwrap(), optimum);
            let tree = oracle.tree(full, pref).unwrap();
            prop_assert_eq!(cost(&tree, &inst).unwrap(), optimum);
        }
        let mirror = Oracle::new(&inst.mirrored()).unwrap();
        prop_assert_eq!(mirror.rooted_costs(full).ok(), oracle.rooted_costs(full).ok());
    }

    #[test]
    fn optimal_trees_satisfy_the_lemmas(inst in instance(9, 6)) {
        let oracle = Oracle::new(&inst).unwrap();
        let full = KeyMask::full(inst.n());
        for pref in [TiePreference::PreferEq, TiePreference::PreferLt] {
            let mut trees = vec![oracle.tree(full, pref).unwrap()];
            if inst.n() >= 2 {
                for kind in [TestKind::Eq, TestKind::Lt] {
                    if oracle.rooted_cost(full, kind).unwrap() == oracle.cost(full).unwrap() {
                        trees.push(oracle.rooted_tree(full, kind, pref).unwrap());
                    }
                }
            }
            for tree in trees {
                let keys: Vec<Key> = inst.keys().collect();
                prop_assert_eq!(cost_on(&tree, &inst, &keys).unwrap(), oracle.cost(full).unwrap());
                prop_assert!(check_side_weight_monotonicity(&tree, &inst).is_ok(), "{}", tree);
                if inst.n() > 2 {
                    prop_assert!(check_eq_root_max_weight(&tree, &inst), "{}", tree);
                }
            }
        }
    }
}

/// Whether the search for `k` passes through `path`.
fn is_below(tree: &Tree, k: Key, path: &Path) -> bool {
    let mut node = tree;
    for &branch in &path.0 {
        let Some(kind) = node.kind() else {
            return false;
        };
        let taken = if kind.passes(node.key(), k) {
            Branch::Yes
        } else {
            Branch::No
        };
        if taken != branch {
            return false;
        }
        node = node.child(branch).unwrap();
    }
    true
}
