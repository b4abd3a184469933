//! Graphviz export.
//!
//! Nodes are named `n<i>` where `i` is the preorder index. Tests are labeled
//! `=k` or `<k`; leaves are labeled `k (w)` when weights are known, `k`
//! otherwise.

use std::fmt::Write;

use crate::instance::Instance;
use crate::tree::{Branch, Tree};

pub fn render(tree: &Tree, inst: Option<&Instance>) -> String {
    let nodes = tree.preorder();
    let index_of = |path: &crate::tree::Path| {
        nodes
            .iter()
            .position(|(p, _)| p == path)
            .expect("child paths are in the preorder listing")
    };

    let mut out = String::from("digraph twcst {\n  node [fontname=\"Helvetica\"];\n");
    for (i, (_, node)) in nodes.iter().enumerate() {
        let (label, shape) = match node.kind() {
            Some(kind) => (format!("{}{}", kind.symbol(), node.key()), "ellipse"),
            None => match inst.filter(|inst| inst.contains(node.key())) {
                Some(inst) => (format!("{} ({})", node.key(), inst.weight(node.key())), "box"),
                None => (node.key().to_string(), "box"),
            },
        };
        writeln!(out, "  n{i} [label=\"{label}\", shape={shape}];").unwrap();
    }
    for (i, (path, node)) in nodes.iter().enumerate() {
        let Some(kind) = node.kind() else { continue };
        for branch in [Branch::Yes, Branch::No] {
            let child = index_of(&path.child(branch));
            writeln!(out, "  n{i} -> n{child} [label=\"{}\"];", branch.label(kind)).unwrap();
        }
    }
    out.push_str("}\n");
    out
}

/// `(id, label)` pairs of the node statements in DOT text produced by
/// [`render`].
pub fn node_labels(dot: &str) -> Vec<(String, String)> {
    dot.lines()
        .map(str::trim)
        .filter(|line| line.starts_with('n') && !line.contains("->"))
        .filter_map(|line| {
            let (id, rest) = line.split_once(' ')?;
            let label = rest.split_once("label=\"")?.1.split_once('"')?.0;
            Some((id.to_string(), label.to_string()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eq_test_with_two_leaves() {
        let tree: Tree = "=1(1,2)".parse().unwrap();
        let inst = Instance::new(vec![5, 3]).unwrap();
        let dot = render(&tree, Some(&inst));
        assert_eq!(
            node_labels(&dot),
            vec![
                ("n0".into(), "=1".into()),
                ("n1".into(), "1 (5)".into()),
                ("n2".into(), "2 (3)".into())
            ]
        );
        assert_eq!(dot.matches("->").count(), 2);
        assert!(dot.contains("n0 -> n1 [label=\"yes\"]"));
        assert!(dot.contains("n0 -> n2 [label=\"no\"]"));
    }

    #[test]
    fn preorder_ids_and_lt_edges() {
        let tree: Tree = "<3(=1(1,2),3)".parse().unwrap();
        let dot = render(&tree, None);
        let labels: Vec<String> = node_labels(&dot).into_iter().map(|(_, l)| l).collect();
        assert_eq!(labels, ["<3", "=1", "1", "2", "3"]);
        assert!(dot.contains("n0 -> n1 [label=\"lt\"]"));
        assert!(dot.contains("n0 -> n4 [label=\"ge\"]"));
    }
}
