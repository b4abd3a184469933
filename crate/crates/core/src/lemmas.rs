//! Side weights and the structural properties every optimal tree has:
//! side weights never increase from parent to child, and (for `n > 2`) an
//! equal-to root always tests a maximum-weight key.

use serde::Serialize;

use crate::instance::Instance;
use crate::tree::{Branch, Path, Tree};

/// Total weight of the keys in the leaves of `tree`.
pub fn subtree_weight(tree: &Tree, inst: &Instance) -> u64 {
    tree.leaves().iter().map(|&k| inst.weight(k)).sum()
}

/// `0` for a leaf, `w_k` for `=k`, and `min(w(L), w(R))` for a less-than test.
pub fn side_weight(node: &Tree, inst: &Instance) -> u64 {
    match node {
        Tree::Leaf { .. } => 0,
        Tree::Eq { key, .. } => inst.weight(*key),
        Tree::Lt { lt, ge, .. } => subtree_weight(lt, inst).min(subtree_weight(ge, inst)),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SideWeightViolation {
    pub parent: Path,
    pub child: Path,
    pub parent_side_weight: u64,
    pub child_side_weight: u64,
}

/// Checks `sw(parent) >= sw(child)` on every edge, returning the first
/// violating edge in preorder.
pub fn check_side_weight_monotonicity(
    tree: &Tree,
    inst: &Instance,
) -> Result<(), SideWeightViolation> {
    for (path, node) in tree.preorder() {
        let Some((yes, no)) = node.children() else {
            continue;
        };
        let parent_sw = side_weight(node, inst);
        for (branch, child) in [(Branch::Yes, yes), (Branch::No, no)] {
            let child_sw = side_weight(child, inst);
            if child_sw > parent_sw {
                return Err(SideWeightViolation {
                    child: path.child(branch),
                    parent: path,
                    parent_side_weight: parent_sw,
                    child_side_weight: child_sw,
                });
            }
        }
    }
    Ok(())
}

/// True unless the root is an equal-to test on a key lighter than the
/// heaviest key of the instance. Only meaningful as a property of optimal
/// trees when `n > 2`.
pub fn check_eq_root_max_weight(tree: &Tree, inst: &Instance) -> bool {
    match tree {
        Tree::Eq { key, .. } => inst.weight(*key) == inst.max_weight(),
        _ => true,
    }
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

    #[test]
    fn side_weight_by_node_type() {
        let i = inst(&[8, 3, 4, 3, 2, 9, 8, 7]);
        assert_eq!(side_weight(&Tree::leaf(3), &i), 0);
        assert_eq!(side_weight(&t("=6(6,<8(7,8))"), &i), 9);
        // subtree weights 10 and 7
        let i = inst(&[4, 6, 7]);
        assert_eq!(side_weight(&t("<3(=1(1,2),3)"), &i), 7);
    }

    #[test]
    fn single_leaf_is_monotone() {
        assert_eq!(check_side_weight_monotonicity(&Tree::leaf(1), &inst(&[1])), Ok(()));
    }

    #[test]
    fn light_root_over_heavy_child_violates() {
        let i = inst(&[1, 1, 5]);
        let err = check_side_weight_monotonicity(&t("=1(1,=3(3,2))"), &i).unwrap_err();
        assert_eq!(err.parent, Path::root());
        assert_eq!(err.child, Path(vec![Branch::No]));
        assert_eq!((err.parent_side_weight, err.child_side_weight), (1, 5));
    }

    #[test]
    fn eq_root_must_test_heaviest() {
        let i = inst(&[5, 1, 1]);
        assert!(!check_eq_root_max_weight(&t("=2(2,<2(1,3))"), &i));
        assert!(check_eq_root_max_weight(&t("=1(1,<3(2,3))"), &i));
        assert!(check_eq_root_max_weight(&t("<2(1,=2(2,3))"), &i));
        assert!(check_eq_root_max_weight(&Tree::leaf(1), &inst(&[1])));
    }
}
