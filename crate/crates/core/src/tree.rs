//! Planar multitype trees stored in depth-first order.
//!
//! A vertex is identified by its Ulam-Harris address: the root is the empty
//! word and the `i`-th child of `u` is `u.i`. Addresses are not stored; each
//! node keeps its parent index and its rank among its siblings, so the address
//! of any node can be rebuilt by walking to the root.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vertex type, `1..=r`.
pub type VertexType = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Node {
    /// Index of the parent in the depth-first sequence, `None` for the root.
    pub parent: Option<usize>,
    /// Position among the siblings, starting at 1. Zero for the root.
    pub rank: u32,
    pub ty: VertexType,
    pub child_count: u32,
}

/// First invariant a node sequence breaks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeViolation {
    Empty,
    RootNotFirst,
    /// A node references a parent that is missing or not earlier in the sequence.
    NotPrefixClosed {
        node: usize,
    },
    /// `u.i` is present but `u.j` for some `j < i` is not.
    SiblingGap {
        node: usize,
    },
    /// The sequence is not the depth-first order of the vertex set.
    NotDepthFirst {
        node: usize,
    },
    TypeOutOfRange {
        node: usize,
        ty: VertexType,
    },
    ChildCountMismatch {
        node: usize,
        stored: u32,
        actual: u32,
    },
}

impl fmt::Display for TreeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeViolation::Empty => write!(f, "tree has no vertices"),
            TreeViolation::RootNotFirst => write!(f, "first vertex is not the root"),
            TreeViolation::NotPrefixClosed { node } => {
                write!(f, "vertex #{node} has no parent earlier in the sequence")
            }
            TreeViolation::SiblingGap { node } => {
                write!(f, "vertex #{node} has a missing elder sibling")
            }
            TreeViolation::NotDepthFirst { node } => {
                write!(f, "vertex #{node} is out of depth-first order")
            }
            TreeViolation::TypeOutOfRange { node, ty } => {
                write!(f, "vertex #{node} has type {ty} outside 1..=r")
            }
            TreeViolation::ChildCountMismatch {
                node,
                stored,
                actual,
            } => write!(
                f,
                "vertex #{node} records {stored} children but has {actual}"
            ),
        }
    }
}

/// A finite `r`-type planar tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultitypeTree {
    types: u32,
    nodes: Vec<Node>,
}

impl MultitypeTree {
    /// Wraps a node sequence without checking it; see [`MultitypeTree::validate`].
    pub fn from_nodes_unchecked(types: u32, nodes: Vec<Node>) -> Self {
        Self { types, nodes }
    }

    pub fn from_nodes(types: u32, nodes: Vec<Node>) -> Result<Self> {
        let tree = Self::from_nodes_unchecked(types, nodes);
        tree.validate()
            .map_err(|v| Error::arg(format!("invalid tree: {v}")))?;
        Ok(tree)
    }

    /// A single vertex of type `ty`.
    pub fn singleton(types: u32, ty: VertexType) -> Self {
        Self {
            types,
            nodes: vec![Node {
                parent: None,
                rank: 0,
                ty,
                child_count: 0,
            }],
        }
    }

    /// Builds a tree from `(address, type)` pairs listed in depth-first order.
    pub fn from_addresses(types: u32, records: &[(Vec<u32>, VertexType)]) -> Result<Self> {
        let mut index: HashMap<&[u32], usize> = HashMap::with_capacity(records.len());
        let mut nodes = Vec::with_capacity(records.len());
        for (i, (addr, ty)) in records.iter().enumerate() {
            let (parent, rank) = match addr.split_last() {
                None => (None, 0),
                Some((&last, prefix)) => {
                    let p = *index.get(prefix).ok_or_else(|| {
                        Error::arg(format!(
                            "invalid tree: {}",
                            TreeViolation::NotPrefixClosed { node: i }
                        ))
                    })?;
                    (Some(p), last)
                }
            };
            if index.insert(addr.as_slice(), i).is_some() {
                return Err(Error::arg(format!(
                    "invalid tree: duplicate address {}",
                    format_address(addr)
                )));
            }
            nodes.push(Node {
                parent,
                rank,
                ty: *ty,
                child_count: 0,
            });
        }
        for i in 0..nodes.len() {
            if let Some(p) = nodes[i].parent {
                nodes[p].child_count = nodes[p].child_count.max(nodes[i].rank);
            }
        }
        Self::from_nodes(types, nodes)
    }

    /// Checks every structural invariant and reports the first violation.
    pub fn validate(&self) -> std::result::Result<(), TreeViolation> {
        let root = self.nodes.first().ok_or(TreeViolation::Empty)?;
        if root.parent.is_some() {
            return Err(TreeViolation::RootNotFirst);
        }
        // Stack of (node, children seen so far) along the current root path.
        let mut path: Vec<(usize, u32)> = Vec::new();
        let mut actual = vec![0u32; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            if node.ty == 0 || node.ty > self.types {
                return Err(TreeViolation::TypeOutOfRange {
                    node: i,
                    ty: node.ty,
                });
            }
            if i == 0 {
                path.push((0, 0));
                continue;
            }
            let p = match node.parent {
                Some(p) if p < i => p,
                _ => return Err(TreeViolation::NotPrefixClosed { node: i }),
            };
            while path.last().is_some_and(|&(top, _)| top != p) {
                path.pop();
            }
            let Some(top) = path.last_mut() else {
                return Err(TreeViolation::NotDepthFirst { node: i });
            };
            if node.rank <= top.1 {
                return Err(TreeViolation::NotDepthFirst { node: i });
            }
            if node.rank != top.1 + 1 {
                return Err(TreeViolation::SiblingGap { node: i });
            }
            top.1 = node.rank;
            actual[p] += 1;
            path.push((i, 0));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if node.child_count != actual[i] {
                return Err(TreeViolation::ChildCountMismatch {
                    node: i,
                    stored: node.child_count,
                    actual: actual[i],
                });
            }
        }
        Ok(())
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }

    pub fn types(&self) -> u32 {
        self.types
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    /// Number of edges.
    pub fn edge_count(&self) -> usize {
        self.nodes.len().saturating_sub(1)
    }

    /// Generation of every node, indexed like [`MultitypeTree::nodes`].
    pub fn depths(&self) -> Vec<usize> {
        let mut depth = vec![0usize; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            if let Some(p) = node.parent {
                depth[i] = depth[p] + 1;
            }
        }
        depth
    }

    pub fn height(&self) -> usize {
        self.depths().into_iter().max().unwrap_or(0)
    }

    /// Ulam-Harris address of node `i`.
    pub fn address(&self, i: usize) -> Vec<u32> {
        let mut addr = Vec::new();
        let mut cur = i;
        while let Some(p) = self.nodes[cur].parent {
            addr.push(self.nodes[cur].rank);
            cur = p;
        }
        addr.reverse();
        addr
    }

    /// Child indices per node, in sibling order.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut kids: Vec<Vec<usize>> = self
            .nodes
            .iter()
            .map(|n| Vec::with_capacity(n.child_count as usize))
            .collect();
        for (i, node) in self.nodes.iter().enumerate() {
            if let Some(p) = node.parent {
                kids[p].push(i);
            }
        }
        kids
    }

    /// Children types are weakly increasing at every vertex.
    pub fn is_type_ordered(&self) -> bool {
        let mut last: Vec<VertexType> = vec![0; self.nodes.len()];
        for node in &self.nodes {
            if let Some(p) = node.parent {
                if node.ty < last[p] {
                    return false;
                }
                last[p] = node.ty;
            }
        }
        true
    }

    /// Heights visited by the depth-first walk along the edges, sampled at
    /// integer times; `2 * edge_count() + 1` values.
    pub fn contour(&self) -> ContourPath {
        let depth = self.depths();
        let mut heights = Vec::with_capacity(2 * self.edge_count() + 1);
        let mut h = 0usize;
        heights.push(0);
        for &d in depth.iter().skip(1) {
            while h + 1 > d {
                h -= 1;
                heights.push(h);
            }
            h += 1;
            heights.push(h);
        }
        while h > 0 {
            h -= 1;
            heights.push(h);
        }
        ContourPath { heights }
    }

    /// Line records `address<TAB>type` in depth-first order, preceded by a
    /// `#types<TAB>r` header. The root address is written as `-`, others as
    /// dot-separated ranks.
    pub fn to_records(&self) -> String {
        let mut out = format!("#types\t{}\n", self.types);
        let mut addr: Vec<u32> = Vec::new();
        let depth = self.depths();
        for (i, node) in self.nodes.iter().enumerate() {
            addr.truncate(depth[i].saturating_sub(1));
            if node.parent.is_some() {
                addr.push(node.rank);
            }
            out.push_str(&format_address(&addr));
            out.push('\t');
            out.push_str(&node.ty.to_string());
            out.push('\n');
        }
        out
    }

    /// Parses [`MultitypeTree::to_records`] output. Without a header the
    /// number of types is the largest type present.
    pub fn from_records(text: &str) -> Result<Self> {
        let mut types = None;
        let mut records = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("#types") {
                let r = rest
                    .trim()
                    .parse::<u32>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
                types = Some(r);
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            let (Some(a), Some(t), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(Error::Parse(format!(
                    "line {}: expected `address<TAB>type`",
                    lineno + 1
                )));
            };
            let addr = parse_address(a.trim())
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            let ty = t
                .trim()
                .parse::<u32>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            records.push((addr, ty));
        }
        let types = types.unwrap_or_else(|| records.iter().map(|r| r.1).max().unwrap_or(1));
        Self::from_addresses(types, &records)
    }
}

pub fn format_address(addr: &[u32]) -> String {
    if addr.is_empty() {
        return "-".to_string();
    }
    addr.iter()
        .map(u32::to_string)
        .collect::<Vec<_>>()
        .join(".")
}

pub fn parse_address(s: &str) -> std::result::Result<Vec<u32>, String> {
    if s == "-" {
        return Ok(Vec::new());
    }
    s.split('.')
        .map(|t| match t.parse::<u32>() {
            Ok(0) => Err("address components start at 1".to_string()),
            Ok(v) => Ok(v),
            Err(e) => Err(format!("bad address `{s}`: {e}")),
        })
        .collect()
}

/// Multiplicity of each type `1..=r` in `word`.
pub fn counter_map(word: &[VertexType], types: u32) -> Result<Vec<u64>> {
    let mut counts = vec![0u64; types as usize];
    for &t in word {
        if t == 0 || t > types {
            return Err(Error::arg(format!("type {t} outside 1..={types}")));
        }
        counts[(t - 1) as usize] += 1;
    }
    Ok(counts)
}

/// Integer-time samples of the contour function.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContourPath {
    heights: Vec<usize>,
}

impl ContourPath {
    pub fn heights(&self) -> &[usize] {
        &self.heights
    }

    /// Period of the continuous contour, `2 * edges`.
    pub fn period(&self) -> usize {
        self.heights.len() - 1
    }

    pub fn max_height(&self) -> usize {
        self.heights.iter().copied().max().unwrap_or(0)
    }

    /// Endpoints at zero and unit steps.
    pub fn is_well_formed(&self) -> bool {
        self.heights.first() == Some(&0)
            && self.heights.last() == Some(&0)
            && self.heights.windows(2).all(|w| w[0].abs_diff(w[1]) == 1)
    }

    /// CSV with a `step,height` header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,height\n");
        for (i, h) in self.heights.iter().enumerate() {
            out.push_str(&format!("{i},{h}\n"));
        }
        out
    }
}

/// The single-type planar tree `{0, 1, 11, 12, 2, 21, 211, 212, 213, 3}`.
pub fn example_contour_tree() -> MultitypeTree {
    let recs: Vec<(Vec<u32>, VertexType)> = [
        &[][..],
        &[1],
        &[1, 1],
        &[1, 2],
        &[2],
        &[2, 1],
        &[2, 1, 1],
        &[2, 1, 2],
        &[2, 1, 3],
        &[3],
    ]
    .iter()
    .map(|a| (a.to_vec(), 1))
    .collect();
    MultitypeTree::from_addresses(1, &recs).expect("valid example tree")
}
