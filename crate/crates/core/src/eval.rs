//! Search simulation, validity, cost and splicing.
//!
//! Cost is defined by simulating the search for every key of the key set, so
//! it is well defined for reducible trees (e.g. with fractured copies of a
//! subtree) as long as every key ends at its own leaf.

use serde::Serialize;
use thiserror::Error;

use crate::instance::{Instance, Key};
use crate::tree::{Branch, Path, Tree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SearchOutcome {
    pub key: Key,
    /// Number of tests executed before reaching a leaf.
    pub depth: usize,
    pub terminal_leaf: Key,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("node at {path} names key {key}, outside 1..={n}")]
    KeyOutOfRange { key: Key, n: usize, path: Path },
    #[error("search for key {key} ends at leaf {reached}")]
    InvalidTree { key: Key, reached: Key },
    #[error("empty key set")]
    EmptyKeySet,
}

pub fn search(tree: &Tree, query: Key) -> SearchOutcome {
    let mut node = tree;
    let mut depth = 0;
    while let Some(branch) = node.route(query) {
        node = node.child(branch).expect("test nodes have both children");
        depth += 1;
    }
    SearchOutcome {
        key: query,
        depth,
        terminal_leaf: node.key(),
    }
}

/// Checks node keys against the instance and that every key of `keys`
/// reaches its own leaf.
pub fn validate(tree: &Tree, inst: &Instance, keys: &[Key]) -> Result<(), TreeError> {
    if keys.is_empty() {
        return Err(TreeError::EmptyKeySet);
    }
    for (path, node) in tree.preorder() {
        if !inst.contains(node.key()) {
            return Err(TreeError::KeyOutOfRange {
                key: node.key(),
                n: inst.n(),
                path,
            });
        }
    }
    for &key in keys {
        let outcome = search(tree, key);
        if outcome.terminal_leaf != key {
            return Err(TreeError::InvalidTree {
                key,
                reached: outcome.terminal_leaf,
            });
        }
    }
    Ok(())
}

/// `cost(T) = sum of w_k * depth(k)` over all keys of the instance.
pub fn cost(tree: &Tree, inst: &Instance) -> Result<u64, TreeError> {
    cost_on(tree, inst, &inst.keys().collect::<Vec<_>>())
}

/// Cost restricted to the queries in `keys`.
pub fn cost_on(tree: &Tree, inst: &Instance, keys: &[Key]) -> Result<u64, TreeError> {
    validate(tree, inst, keys)?;
    Ok(keys
        .iter()
        .map(|&k| inst.weight(k) * search(tree, k).depth as u64)
        .sum())
}

/// Cost computed as the sum, over internal nodes, of the weight of the
/// queries that reach the node. Equal to [`cost_on`] for valid trees.
pub fn cost_by_node_load(tree: &Tree, inst: &Instance, keys: &[Key]) -> Result<u64, TreeError> {
    validate(tree, inst, keys)?;
    fn load(node: &Tree, inst: &Instance, keys: &[Key]) -> u64 {
        match node.children() {
            None => 0,
            Some((yes, no)) => {
                let (y, n) = partition(node, keys);
                inst.weight_of(keys) + load(yes, inst, &y) + load(no, inst, &n)
            }
        }
    }
    Ok(load(tree, inst, keys))
}

/// Splits `keys` by the test at `node` into (yes, no) parts.
pub fn partition(node: &Tree, keys: &[Key]) -> (Vec<Key>, Vec<Key>) {
    keys.iter()
        .partition(|&&k| node.route(k) == Some(Branch::Yes))
}

/// Keys of `keys` whose search passes through the node at `path`.
pub fn keys_reaching(tree: &Tree, path: &Path, keys: &[Key]) -> Vec<Key> {
    keys.iter()
        .copied()
        .filter(|&k| {
            let mut node = tree;
            for &step in &path.0 {
                match node.route(k) {
                    Some(b) if b == step => node = node.child(b).expect("test node"),
                    _ => return false,
                }
            }
            true
        })
        .collect()
}

/// Topmost branches that no query of `keys` traverses.
pub fn redundant_branches(tree: &Tree, keys: &[Key]) -> Vec<Path> {
    fn walk(node: &Tree, path: Path, keys: &[Key], out: &mut Vec<Path>) {
        if let Some((yes, no)) = node.children() {
            let (y, n) = partition(node, keys);
            for (branch, child, part) in [(Branch::Yes, yes, y), (Branch::No, no, n)] {
                let child_path = path.child(branch);
                if part.is_empty() {
                    out.push(child_path);
                } else {
                    walk(child, child_path, &part, out);
                }
            }
        }
    }
    let mut out = Vec::new();
    walk(tree, Path::root(), keys, &mut out);
    out
}

pub fn is_irreducible(tree: &Tree, keys: &[Key]) -> bool {
    redundant_branches(tree, keys).is_empty()
}

/// Removes every redundant branch by linking its sibling to the grandparent.
/// The result searches every key of `keys` exactly as before, minus the
/// skipped tests, so its cost is never higher.
pub fn splice_redundant(tree: &Tree, inst: &Instance, keys: &[Key]) -> Result<Tree, TreeError> {
    validate(tree, inst, keys)?;
    fn splice(node: &Tree, keys: &[Key]) -> Tree {
        match node.children() {
            None => node.clone(),
            Some((yes, no)) => {
                let (y, n) = partition(node, keys);
                if y.is_empty() {
                    splice(no, keys)
                } else if n.is_empty() {
                    splice(yes, keys)
                } else {
                    let kind = node.kind().expect("test node");
                    Tree::test(kind, node.key(), splice(yes, &y), splice(no, &n))
                }
            }
        }
    }
    Ok(splice(tree, keys))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Tree {
        s.parse().unwrap()
    }

    fn inst(w: &[u64]) -> Instance {
        Instance::new(w.to_vec()).unwrap()
    }

    fn all(inst: &Instance) -> Vec<Key> {
        inst.keys().collect()
    }

    #[test]
    fn two_leaves_cost_total_weight() {
        let i = inst(&[5, 3]);
        assert_eq!(cost(&t("=1(1,2)"), &i), Ok(8));
    }

    #[test]
    fn single_leaf_costs_nothing() {
        assert_eq!(cost(&Tree::leaf(1), &inst(&[7])), Ok(0));
    }

    #[test]
    fn search_reports_depth() {
        let tree = t("<3(=1(1,2),=4(4,3))");
        assert_eq!(
            search(&tree, 2),
            SearchOutcome {
                key: 2,
                depth: 2,
                terminal_leaf: 2
            }
        );
        assert_eq!(search(&Tree::leaf(1), 1).depth, 0);
    }

    #[test]
    fn invalid_tree_is_reported() {
        let i = inst(&[1, 1, 1]);
        assert_eq!(
            cost(&t("<2(1,=2(3,2))"), &i),
            Err(TreeError::InvalidTree { key: 2, reached: 3 })
        );
        assert!(matches!(
            cost(&t("<2(1,=5(2,3))"), &i),
            Err(TreeError::KeyOutOfRange { key: 5, .. })
        ));
        assert_eq!(cost_on(&Tree::leaf(1), &i, &[]), Err(TreeError::EmptyKeySet));
    }

    #[test]
    fn node_load_cost_matches_leaf_depths() {
        let i = inst(&[8, 3, 4, 3, 2, 9, 8, 7]);
        let tree = t("<6(<3(=1(1,2),=3(3,<5(4,5))),<8(=6(6,7),8))");
        let keys = all(&i);
        assert_eq!(cost_on(&tree, &i, &keys), cost_by_node_load(&tree, &i, &keys));
    }

    #[test]
    fn splice_drops_dead_branch() {
        let i = inst(&[1, 1]);
        let tree = t("<2(1,<2(1,2))");
        assert_eq!(redundant_branches(&tree, &all(&i)), vec![Path(vec![Branch::No, Branch::Yes])]);
        assert!(!is_irreducible(&tree, &all(&i)));
        let spliced = splice_redundant(&tree, &i, &all(&i)).unwrap();
        assert_eq!(spliced, t("<2(1,2)"));
        assert!(is_irreducible(&spliced, &all(&i)));
    }

    #[test]
    fn splice_is_identity_on_irreducible() {
        let i = inst(&[8, 3, 4, 3, 2, 9, 8, 7]);
        let tree = t("<6(<3(=1(1,2),=3(3,<5(4,5))),<8(=6(6,7),8))");
        assert!(is_irreducible(&tree, &all(&i)));
        assert_eq!(splice_redundant(&tree, &i, &all(&i)).unwrap(), tree);
    }

    #[test]
    fn keys_reaching_follows_the_path() {
        let tree = t("<3(=1(1,2),=4(4,3))");
        let keys = [1, 2, 3, 4];
        assert_eq!(keys_reaching(&tree, &Path::root(), &keys), vec![1, 2, 3, 4]);
        assert_eq!(keys_reaching(&tree, &Path(vec![Branch::No]), &keys), vec![3, 4]);
        assert_eq!(
            keys_reaching(&tree, &Path(vec![Branch::Yes, Branch::No]), &keys),
            vec![2]
        );
    }
}
