//! The parenthesis encoding of full binary trees.
//!
//! Every non-root vertex contributes one symbol in depth-first order: `(` for
//! a left (type 1) child and `)` for a right (type 2) child. Equivalently a
//! father encodes as `( E(left) ) E(right)` and a leaf as the empty string, so
//! each adjacent `()` marks a left leaf.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::combinatorics::narayana;
use crate::error::{Error, Result};
use crate::tree::{MultitypeTree, Node};

/// Default cap on the number of trees `enumerate_full_binary_trees` builds.
pub const DEFAULT_TREE_CAP: u64 = 2_000_000;

/// A nonempty balanced string over `(` and `)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ParenString(String);

impl ParenString {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Number of matched pairs.
    pub fn pairs(&self) -> usize {
        self.0.len() / 2
    }

    /// Number of adjacent `()` occurrences.
    pub fn nestings(&self) -> usize {
        self.0.matches("()").count()
    }
}

impl FromStr for ParenString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::Parse("empty parenthesis string".into()));
        }
        let mut depth = 0i64;
        for (i, ch) in s.bytes().enumerate() {
            match ch {
                b'(' => depth += 1,
                b')' => depth -= 1,
                _ => {
                    return Err(Error::Parse(format!(
                        "unexpected character {:?} at offset {i}",
                        ch as char
                    )))
                }
            }
            if depth < 0 {
                return Err(Error::Parse(format!("unmatched `)` at offset {i}")));
            }
        }
        if depth != 0 {
            return Err(Error::Parse(format!("{depth} unclosed `(`")));
        }
        Ok(ParenString(s.to_string()))
    }
}

impl TryFrom<String> for ParenString {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ParenString> for String {
    fn from(p: ParenString) -> String {
        p.0
    }
}

impl fmt::Display for ParenString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Father and leaf counts of a full binary tree with a type-1 root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FatherCounts {
    /// Type-1 fathers, root included.
    pub left_fathers: usize,
    pub right_fathers: usize,
    pub left_leaves: usize,
    pub right_leaves: usize,
}

/// Checks that the tree is a full binary tree with a type-1 father root.
fn check_full_binary(tree: &MultitypeTree) -> Result<()> {
    if tree.types() != 2 {
        return Err(Error::Encoding(format!(
            "full binary trees have 2 types, not {}",
            tree.types()
        )));
    }
    let root = tree.root();
    if root.ty != 1 {
        return Err(Error::Encoding("root must have type 1".into()));
    }
    if root.child_count == 0 {
        return Err(Error::Encoding("a single leaf has no encoding".into()));
    }
    for (i, node) in tree.nodes().iter().enumerate() {
        if node.child_count != 0 && node.child_count != 2 {
            return Err(Error::Encoding(format!(
                "vertex {} has {} children",
                crate::tree::format_address(&tree.address(i)),
                node.child_count
            )));
        }
        if node.parent.is_some() && node.ty != node.rank {
            return Err(Error::Encoding(format!(
                "vertex {} of type {} is child number {}",
                crate::tree::format_address(&tree.address(i)),
                node.ty,
                node.rank
            )));
        }
    }
    Ok(())
}

pub fn encode_parens(tree: &MultitypeTree) -> Result<ParenString> {
    check_full_binary(tree)?;
    let s = tree
        .nodes()
        .iter()
        .skip(1)
        .map(|n| if n.ty == 1 { '(' } else { ')' })
        .collect();
    Ok(ParenString(s))
}

/// The unique full binary tree whose encoding is `s`.
pub fn decode_parens(s: &ParenString) -> MultitypeTree {
    enum Step {
        /// Parse the subtree rooted at this vertex.
        Vertex(usize),
        /// The left subtree of this father is done; consume `)` and add the right child.
        Right(usize),
    }

    let bytes = s.as_str().as_bytes();
    let mut nodes = vec![Node {
        parent: None,
        rank: 0,
        ty: 1,
        child_count: 0,
    }];
    let mut pos = 0usize;
    let mut stack = vec![Step::Vertex(0)];
    while let Some(step) = stack.pop() {
        match step {
            Step::Vertex(v) => {
                if bytes.get(pos) == Some(&b'(') {
                    pos += 1;
                    nodes[v].child_count = 2;
                    nodes.push(Node {
                        parent: Some(v),
                        rank: 1,
                        ty: 1,
                        child_count: 0,
                    });
                    let left = nodes.len() - 1;
                    stack.push(Step::Right(v));
                    stack.push(Step::Vertex(left));
                }
            }
            Step::Right(v) => {
                debug_assert_eq!(bytes.get(pos), Some(&b')'));
                pos += 1;
                nodes.push(Node {
                    parent: Some(v),
                    rank: 2,
                    ty: 2,
                    child_count: 0,
                });
                stack.push(Step::Vertex(nodes.len() - 1));
            }
        }
    }
    // `S -> ( S ) S | empty` applied at the root consumes a balanced string whole.
    debug_assert_eq!(pos, bytes.len());
    MultitypeTree::from_nodes_unchecked(2, nodes)
}

/// Father and leaf counts, with `left_leaves == right_fathers + 1` and
/// `right_leaves == left_fathers`.
pub fn fathers_leaves(tree: &MultitypeTree) -> Result<FatherCounts> {
    check_full_binary(tree).map_err(|e| Error::arg(e.to_string()))?;
    let mut counts = FatherCounts {
        left_fathers: 0,
        right_fathers: 0,
        left_leaves: 0,
        right_leaves: 0,
    };
    for node in tree.nodes() {
        match (node.ty, node.child_count) {
            (1, 2) => counts.left_fathers += 1,
            (2, 2) => counts.right_fathers += 1,
            (1, 0) => counts.left_leaves += 1,
            _ => counts.right_leaves += 1,
        }
    }
    Ok(counts)
}

/// All full binary trees with `n` left fathers (root included) and `m` right
/// fathers, ordered by their encodings. There are `N(n+m, m+1)` of them.
pub fn enumerate_full_binary_trees(n: usize, m: usize, cap: u64) -> Result<Vec<MultitypeTree>> {
    Ok(enumerate_encodings(n, m, cap)?
        .iter()
        .map(decode_parens)
        .collect())
}

/// Encodings of [`enumerate_full_binary_trees`], in lexicographic order.
pub fn enumerate_encodings(n: usize, m: usize, cap: u64) -> Result<Vec<ParenString>> {
    if n == 0 {
        return Err(Error::arg("a type-1 root father needs n >= 1"));
    }
    let count = narayana((n + m) as u64, (m + 1) as u64)?;
    if count > BigUint::from(cap) {
        return Err(Error::Resource {
            what: "full binary tree count",
            requested: count.to_string(),
            cap,
        });
    }
    let mut memo = HashMap::new();
    let mut out: Vec<ParenString> = subtree_encodings(1, n, m, &mut memo)
        .iter()
        .map(|s| ParenString(s.clone()))
        .collect();
    out.sort();
    Ok(out)
}

/// Encodings `E(v)` of every subtree whose root has type `ty` and which holds
/// `n` type-1 and `m` type-2 fathers, the root included.
fn subtree_encodings(
    ty: u32,
    n: usize,
    m: usize,
    memo: &mut HashMap<(u32, usize, usize), Vec<String>>,
) -> Vec<String> {
    if let Some(hit) = memo.get(&(ty, n, m)) {
        return hit.clone();
    }
    let mut out = Vec::new();
    if n == 0 && m == 0 {
        out.push(String::new());
    } else {
        // The root is a father: take it out of the budget of its own type.
        let (rest_n, rest_m) = match ty {
            1 if n > 0 => (n - 1, m),
            2 if m > 0 => (n, m - 1),
            _ => (usize::MAX, usize::MAX),
        };
        if rest_n != usize::MAX {
            for left_n in 0..=rest_n {
                for left_m in 0..=rest_m {
                    let lefts = subtree_encodings(1, left_n, left_m, memo);
                    if lefts.is_empty() {
                        continue;
                    }
                    let rights = subtree_encodings(2, rest_n - left_n, rest_m - left_m, memo);
                    for l in &lefts {
                        for r in &rights {
                            out.push(format!("({l}){r}"));
                        }
                    }
                }
            }
        }
    }
    memo.insert((ty, n, m), out.clone());
    out
}
