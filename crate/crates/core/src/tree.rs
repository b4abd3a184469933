//! Search trees with 2-way comparisons.
//!
//! A node is a leaf naming a key, an equal-to test `=k` (`yes` iff query == k)
//! or a less-than test `<k` (`yes` iff query < k; keys equal to `k` go to the
//! `ge` side). Trees serialize as
//! `{"kind": "leaf"|"eq"|"lt", "key": k, "yes"/"no" | "lt"/"ge": subtree}`.
//!
//! A compact text form is also supported for tests and the CLI: a leaf is its
//! key, `=k(Y,N)` is an equal-to test and `<k(L,G)` a less-than test, e.g.
//! `<3(=1(1,2),=4(4,3))`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::Key;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Tree {
    Leaf {
        key: Key,
    },
    Eq {
        key: Key,
        yes: Box<Tree>,
        no: Box<Tree>,
    },
    Lt {
        key: Key,
        lt: Box<Tree>,
        ge: Box<Tree>,
    },
}

/// The two comparison types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestKind {
    Eq,
    Lt,
}

impl TestKind {
    /// Outcome of the test on `key` for `query`: `true` is the yes branch.
    pub fn passes(self, key: Key, query: Key) -> bool {
        match self {
            TestKind::Eq => query == key,
            TestKind::Lt => query < key,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            TestKind::Eq => "=",
            TestKind::Lt => "<",
        }
    }
}

/// A branch of a test node. For `<k`, `Yes` is the `<` side and `No` the `>=`
/// side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    #[serde(alias = "lt")]
    Yes,
    #[serde(alias = "ge")]
    No,
}

impl Branch {
    pub fn flip(self) -> Self {
        match self {
            Branch::Yes => Branch::No,
            Branch::No => Branch::Yes,
        }
    }

    /// The branch taken by a query equal to the tested key: `=` for equal-to
    /// tests, `>=` for less-than tests.
    pub fn key_side(kind: TestKind) -> Self {
        match kind {
            TestKind::Eq => Branch::Yes,
            TestKind::Lt => Branch::No,
        }
    }

    fn from_outcome(yes: bool) -> Self {
        if yes {
            Branch::Yes
        } else {
            Branch::No
        }
    }

    pub fn label(self, kind: TestKind) -> &'static str {
        match (kind, self) {
            (TestKind::Eq, Branch::Yes) => "yes",
            (TestKind::Eq, Branch::No) => "no",
            (TestKind::Lt, Branch::Yes) => "lt",
            (TestKind::Lt, Branch::No) => "ge",
        }
    }
}

/// A node address: branch labels from the root.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Path(pub Vec<Branch>);

impl Path {
    pub fn root() -> Self {
        Self(Vec::new())
    }

    pub fn child(&self, branch: Branch) -> Self {
        let mut steps = self.0.clone();
        steps.push(branch);
        Self(steps)
    }

    pub fn parent(&self) -> Option<(Path, Branch)> {
        let (&last, rest) = self.0.split_last()?;
        Some((Path(rest.to_vec()), last))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "root");
        }
        let labels: Vec<&str> = self
            .0
            .iter()
            .map(|b| match b {
                Branch::Yes => "yes",
                Branch::No => "no",
            })
            .collect();
        write!(f, "{}", labels.join("/"))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("no node at path {0}")]
pub struct PathError(pub Path);

impl Tree {
    pub fn leaf(key: Key) -> Self {
        Tree::Leaf { key }
    }

    pub fn eq(key: Key, yes: Tree, no: Tree) -> Self {
        Tree::Eq {
            key,
            yes: Box::new(yes),
            no: Box::new(no),
        }
    }

    pub fn lt(key: Key, lt: Tree, ge: Tree) -> Self {
        Tree::Lt {
            key,
            lt: Box::new(lt),
            ge: Box::new(ge),
        }
    }

    /// A test node of the given kind with `yes`/`no` children.
    pub fn test(kind: TestKind, key: Key, yes: Tree, no: Tree) -> Self {
        match kind {
            TestKind::Eq => Tree::eq(key, yes, no),
            TestKind::Lt => Tree::lt(key, yes, no),
        }
    }

    /// A test node with children given by branch.
    pub fn test_with(kind: TestKind, key: Key, branch: Branch, child: Tree, other: Tree) -> Self {
        match branch {
            Branch::Yes => Tree::test(kind, key, child, other),
            Branch::No => Tree::test(kind, key, other, child),
        }
    }

    pub fn key(&self) -> Key {
        match self {
            Tree::Leaf { key } | Tree::Eq { key, .. } | Tree::Lt { key, .. } => *key,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Tree::Leaf { .. })
    }

    /// Test kind of an internal node, `None` for leaves.
    pub fn kind(&self) -> Option<TestKind> {
        match self {
            Tree::Leaf { .. } => None,
            Tree::Eq { .. } => Some(TestKind::Eq),
            Tree::Lt { .. } => Some(TestKind::Lt),
        }
    }

    pub fn child(&self, branch: Branch) -> Option<&Tree> {
        match (self, branch) {
            (Tree::Leaf { .. }, _) => None,
            (Tree::Eq { yes, .. }, Branch::Yes) | (Tree::Lt { lt: yes, .. }, Branch::Yes) => {
                Some(yes)
            }
            (Tree::Eq { no, .. }, Branch::No) | (Tree::Lt { ge: no, .. }, Branch::No) => Some(no),
        }
    }

    fn child_mut(&mut self, branch: Branch) -> Option<&mut Tree> {
        match (self, branch) {
            (Tree::Leaf { .. }, _) => None,
            (Tree::Eq { yes, .. }, Branch::Yes) | (Tree::Lt { lt: yes, .. }, Branch::Yes) => {
                Some(yes)
            }
            (Tree::Eq { no, .. }, Branch::No) | (Tree::Lt { ge: no, .. }, Branch::No) => Some(no),
        }
    }

    /// `(yes, no)` children of a test node.
    pub fn children(&self) -> Option<(&Tree, &Tree)> {
        match self {
            Tree::Leaf { .. } => None,
            Tree::Eq { yes, no, .. } => Some((yes, no)),
            Tree::Lt { lt, ge, .. } => Some((lt, ge)),
        }
    }

    /// Which branch a query takes at this node; `None` at a leaf.
    pub fn route(&self, query: Key) -> Option<Branch> {
        self.kind()
            .map(|kind| Branch::from_outcome(kind.passes(self.key(), query)))
    }

    pub fn get(&self, path: &Path) -> Option<&Tree> {
        path.0
            .iter()
            .try_fold(self, |node, &branch| node.child(branch))
    }

    pub fn get_mut(&mut self, path: &Path) -> Option<&mut Tree> {
        let mut node = self;
        for &branch in &path.0 {
            node = node.child_mut(branch)?;
        }
        Some(node)
    }

    /// A copy of `self` with the subtree at `path` replaced.
    pub fn replace_at(&self, path: &Path, subtree: Tree) -> Result<Tree, PathError> {
        let mut out = self.clone();
        *out.get_mut(path).ok_or_else(|| PathError(path.clone()))? = subtree;
        Ok(out)
    }

    /// Leaf labels in left-to-right order.
    pub fn leaves(&self) -> Vec<Key> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<Key>) {
        match self.children() {
            None => out.push(self.key()),
            Some((a, b)) => {
                a.collect_leaves(out);
                b.collect_leaves(out);
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self.children() {
            None => 1,
            Some((a, b)) => a.leaf_count() + b.leaf_count(),
        }
    }

    pub fn node_count(&self) -> usize {
        match self.children() {
            None => 1,
            Some((a, b)) => 1 + a.node_count() + b.node_count(),
        }
    }

    pub fn height(&self) -> usize {
        match self.children() {
            None => 0,
            Some((a, b)) => 1 + a.height().max(b.height()),
        }
    }

    /// Nodes in preorder (node before its yes subtree, then its no subtree),
    /// with their paths.
    pub fn preorder(&self) -> Vec<(Path, &Tree)> {
        let mut out = Vec::new();
        let mut stack = vec![(Path::root(), self)];
        while let Some((path, node)) = stack.pop() {
            if let Some((yes, no)) = node.children() {
                stack.push((path.child(Branch::No), no));
                stack.push((path.child(Branch::Yes), yes));
            }
            out.push((path, node));
        }
        out
    }

    /// The tree for the reversed key order of an `n`-key instance.
    ///
    /// `=k` becomes `=(n+1-k)`; `<k` becomes `<(n+2-k)` with its branches
    /// swapped, since `q < k` iff `n+1-q >= n+2-k`.
    pub fn mirrored(&self, n: usize) -> Tree {
        match self {
            Tree::Leaf { key } => Tree::leaf(n + 1 - key),
            Tree::Eq { key, yes, no } => Tree::eq(n + 1 - key, yes.mirrored(n), no.mirrored(n)),
            Tree::Lt { key, lt, ge } => Tree::lt(n + 2 - key, ge.mirrored(n), lt.mirrored(n)),
        }
    }

    /// Applies an order-preserving relabeling to every key and threshold.
    pub fn map_keys(&self, f: &impl Fn(Key) -> Key) -> Tree {
        match self {
            Tree::Leaf { key } => Tree::leaf(f(*key)),
            Tree::Eq { key, yes, no } => Tree::eq(f(*key), yes.map_keys(f), no.map_keys(f)),
            Tree::Lt { key, lt, ge } => Tree::lt(f(*key), lt.map_keys(f), ge.map_keys(f)),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("tree serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tree::Leaf { key } => write!(f, "{key}"),
            Tree::Eq { key, yes, no } => write!(f, "={key}({yes},{no})"),
            Tree::Lt { key, lt, ge } => write!(f, "<{key}({lt},{ge})"),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("malformed tree text at byte {pos}: {msg}")]
pub struct ParseTreeError {
    pub pos: usize,
    pub msg: &'static str,
}

impl FromStr for Tree {
    type Err = ParseTreeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let compact: Vec<u8> = s.bytes().filter(|b| !b.is_ascii_whitespace()).collect();
        let mut parser = CompactParser {
            text: &compact,
            pos: 0,
        };
        let tree = parser.tree()?;
        if parser.pos != compact.len() {
            return Err(parser.error("trailing input"));
        }
        Ok(tree)
    }
}

struct CompactParser<'a> {
    text: &'a [u8],
    pos: usize,
}

impl CompactParser<'_> {
    fn error(&self, msg: &'static str) -> ParseTreeError {
        ParseTreeError { pos: self.pos, msg }
    }

    fn peek(&self) -> Option<u8> {
        self.text.get(self.pos).copied()
    }

    fn expect(&mut self, byte: u8, msg: &'static str) -> Result<(), ParseTreeError> {
        if self.peek() == Some(byte) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(msg))
        }
    }

    fn number(&mut self) -> Result<Key, ParseTreeError> {
        let start = self.pos;
        while self.peek().is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.text[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| self.error("expected a key"))
    }

    fn tree(&mut self) -> Result<Tree, ParseTreeError> {
        let kind = match self.peek() {
            Some(b'=') => TestKind::Eq,
            Some(b'<') => TestKind::Lt,
            _ => return self.number().map(Tree::leaf),
        };
        self.pos += 1;
        let key = self.number()?;
        self.expect(b'(', "expected '('")?;
        let yes = self.tree()?;
        self.expect(b',', "expected ','")?;
        let no = self.tree()?;
        self.expect(b')', "expected ')'")?;
        Ok(Tree::test(kind, key, yes, no))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Tree {
        s.parse().unwrap()
    }

    #[test]
    fn compact_text_round_trips() {
        for s in ["1", "=1(1,2)", "<3(=1(1,2),=4(4,3))", "<2(1,<3(2,=3(3,4)))"] {
            assert_eq!(t(s).to_string(), s);
        }
        assert_eq!(t(" < 2 ( 1 , 2 ) "), Tree::lt(2, Tree::leaf(1), Tree::leaf(2)));
        assert!("<2(1,2".parse::<Tree>().is_err());
        assert!("=a(1,2)".parse::<Tree>().is_err());
        assert!("1,2".parse::<Tree>().is_err());
    }

    #[test]
    fn json_schema() {
        let tree = t("<2(1,=2(2,3))");
        let json: serde_json::Value = serde_json::from_str(&tree.to_json()).unwrap();
        assert_eq!(
            json,
            serde_json::json!({
                "kind": "lt", "key": 2,
                "lt": {"kind": "leaf", "key": 1},
                "ge": {"kind": "eq", "key": 2,
                       "yes": {"kind": "leaf", "key": 2},
                       "no": {"kind": "leaf", "key": 3}}
            })
        );
        assert_eq!(Tree::from_json(&tree.to_json()).unwrap(), tree);
        assert!(Tree::from_json(r#"{"kind": "eq", "key": 1, "lt": {"kind":"leaf","key":1}}"#).is_err());
    }

    #[test]
    fn paths_address_nodes() {
        let tree = t("<3(=1(1,2),=4(4,3))");
        let p = Path(vec![Branch::No, Branch::Yes]);
        assert_eq!(tree.get(&p), Some(&Tree::leaf(4)));
        assert_eq!(tree.get(&Path(vec![Branch::Yes, Branch::Yes, Branch::Yes])), None);
        let replaced = tree.replace_at(&p, Tree::leaf(9)).unwrap();
        assert_eq!(replaced.to_string(), "<3(=1(1,2),=4(9,3))");
        assert!(tree.replace_at(&Path(vec![Branch::Yes; 3]), Tree::leaf(1)).is_err());
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, r#"["no","yes"]"#);
        let parsed: Path = serde_json::from_str(r#"["ge","lt"]"#).unwrap();
        assert_eq!(parsed, p);
    }

    #[test]
    fn counts_and_preorder() {
        let tree = t("<3(=1(1,2),=4(4,3))");
        assert_eq!(tree.leaves(), vec![1, 2, 4, 3]);
        assert_eq!(tree.leaf_count(), 4);
        assert_eq!(tree.node_count(), 7);
        assert_eq!(tree.height(), 2);
        let keys: Vec<String> = tree
            .preorder()
            .iter()
            .map(|(_, node)| match node.kind() {
                Some(kind) => format!("{}{}", kind.symbol(), node.key()),
                None => node.key().to_string(),
            })
            .collect();
        assert_eq!(keys, ["<3", "=1", "1", "2", "=4", "4", "3"]);
    }

    #[test]
    fn mirroring() {
        // keys 1..4 reversed
        let tree = t("<3(=1(1,2),=4(4,3))");
        let m = tree.mirrored(4);
        assert_eq!(m.to_string(), "<3(=1(1,2),=4(4,3))");
        let tree = t("<2(1,<4(=2(2,3),4))");
        assert_eq!(tree.mirrored(4).to_string(), "<4(<2(1,=3(3,2)),4)");
        assert_eq!(tree.mirrored(4).mirrored(4), tree);
    }
}
