//! Offspring distributions and the seeded Galton-Watson tree sampler.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{MultitypeTree, Node, VertexType};

/// Tolerance for probability tables summing to one.
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

/// Default vertex budget of [`sample_tree`].
pub const DEFAULT_MAX_VERTICES: usize = 1_000_000;

/// Per-type law of the child-count vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffspringDistribution {
    types: u32,
    /// `tables[i]` is the law of type `i + 1`, sorted by count vector.
    tables: Vec<Vec<(Vec<u32>, f64)>>,
}

impl OffspringDistribution {
    /// Rejects tables that do not sum to one; nothing is renormalized.
    pub fn new(types: u32, tables: Vec<BTreeMap<Vec<u32>, f64>>) -> Result<Self> {
        if types == 0 {
            return Err(Error::arg("at least one type is required"));
        }
        if tables.len() != types as usize {
            return Err(Error::arg(format!(
                "{} offspring tables for {types} types",
                tables.len()
            )));
        }
        let mut out = Vec::with_capacity(tables.len());
        for (i, table) in tables.into_iter().enumerate() {
            let mut total = 0.0;
            for (alpha, &p) in &table {
                if alpha.len() != types as usize {
                    return Err(Error::arg(format!(
                        "type {}: count vector {alpha:?} has {} components",
                        i + 1,
                        alpha.len()
                    )));
                }
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::arg(format!(
                        "type {}: probability {p} of {alpha:?} outside [0, 1]",
                        i + 1
                    )));
                }
                total += p;
            }
            if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
                return Err(Error::arg(format!(
                    "type {}: probabilities sum to {total}",
                    i + 1
                )));
            }
            out.push(table.into_iter().collect());
        }
        Ok(Self { types, tables: out })
    }

    pub fn types(&self) -> u32 {
        self.types
    }

    /// Support points of type `ty` in key order.
    pub fn table(&self, ty: VertexType) -> &[(Vec<u32>, f64)] {
        &self.tables[(ty - 1) as usize]
    }

    /// Inverse-CDF draw over the support in key order, for `u` in `[0, 1)`.
    fn pick(&self, ty: VertexType, u: f64) -> &[u32] {
        let table = self.table(ty);
        let mut acc = 0.0;
        for (alpha, p) in table {
            acc += p;
            if u < acc {
                return alpha;
            }
        }
        // Rounding left a sliver above the accumulated mass; take the last
        // point carrying positive probability.
        table
            .iter()
            .rev()
            .find(|(_, p)| *p > 0.0)
            .map(|(a, _)| a.as_slice())
            .expect("table sums to one")
    }
}

/// Parameters of the two-type model with survivals. Type 1 dies with `p0`,
/// survives as one type-1 child with `p1` and fathers a (type 1, type 2) pair
/// with `p2`; type 2 likewise with `q0`, `q1`, `q2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalParams {
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
    pub q0: f64,
    pub q1: f64,
    pub q2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criticality {
    AlmostSurelyFinite,
    PossiblyInfinite,
}

impl SurvivalParams {
    pub fn new(p0: f64, p1: f64, p2: f64, q0: f64, q1: f64, q2: f64) -> Result<Self> {
        let params = Self {
            p0,
            p1,
            p2,
            q0,
            q1,
            q2,
        };
        params.check()?;
        Ok(params)
    }

    /// The model without survivals: `p1 = q1 = 0`.
    pub fn without_survivals(p2: f64, q2: f64) -> Result<Self> {
        Self::new(1.0 - p2, 0.0, p2, 1.0 - q2, 0.0, q2)
    }

    /// Parses `p0,p1,p2,q0,q1,q2`.
    pub fn parse_list(s: &str) -> Result<Self> {
        let vals = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("`{t}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let [p0, p1, p2, q0, q1, q2] = vals[..] else {
            return Err(Error::Parse(format!(
                "expected six comma-separated probabilities, got {}",
                vals.len()
            )));
        };
        Self::new(p0, p1, p2, q0, q1, q2)
    }

    pub fn check(&self) -> Result<()> {
        let all = [self.p0, self.p1, self.p2, self.q0, self.q1, self.q2];
        if all.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::arg(format!(
                "probabilities must lie in [0, 1]: {all:?}"
            )));
        }
        for (name, v) in [
            ("p0", self.p0),
            ("p2", self.p2),
            ("q0", self.q0),
            ("q2", self.q2),
        ] {
            if v <= 0.0 {
                return Err(Error::arg(format!("{name} must be positive")));
            }
        }
        let sp = self.p0 + self.p1 + self.p2;
        let sq = self.q0 + self.q1 + self.q2;
        if (sp - 1.0).abs() > PROBABILITY_TOLERANCE || (sq - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(Error::arg(format!(
                "p and q must each sum to 1 (got {sp} and {sq})"
            )));
        }
        Ok(())
    }

    pub fn has_survivals(&self) -> bool {
        self.p1 > 0.0 || self.q1 > 0.0
    }

    /// `p0 q0 - p2 q2 >= 0` means the tree is finite almost surely.
    pub fn classify(&self) -> Criticality {
        if self.p0 * self.q0 - self.p2 * self.q2 >= 0.0 {
            Criticality::AlmostSurelyFinite
        } else {
            Criticality::PossiblyInfinite
        }
    }

    /// `P = p0 / (p0 + p2)`.
    pub fn big_p(&self) -> f64 {
        self.p0 / (self.p0 + self.p2)
    }

    /// `Q = q0 / (q0 + q2)`.
    pub fn big_q(&self) -> f64 {
        self.q0 / (self.q0 + self.q2)
    }

    pub fn distribution(&self) -> OffspringDistribution {
        survival_distribution(self).expect("validated parameters")
    }
}

pub fn classify(params: &SurvivalParams) -> Criticality {
    params.classify()
}

/// The two-type offspring law of the survival model.
pub fn survival_distribution(params: &SurvivalParams) -> Result<OffspringDistribution> {
    params.check()?;
    let t1 = BTreeMap::from([
        (vec![0, 0], params.p0),
        (vec![1, 0], params.p1),
        (vec![1, 1], params.p2),
    ]);
    let t2 = BTreeMap::from([
        (vec![0, 0], params.q0),
        (vec![0, 1], params.q1),
        (vec![1, 1], params.q2),
    ]);
    OffspringDistribution::new(2, vec![t1, t2])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SampleStatus {
    /// Every leaf came from a zero-offspring draw.
    Complete,
    /// The vertex budget ran out; the tree is the depth-first prefix.
    Truncated,
}

impl SampleStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SampleStatus::Complete => "complete",
            SampleStatus::Truncated => "truncated",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub tree: MultitypeTree,
    pub status: SampleStatus,
    pub rng_seed: u64,
    pub vertex_count: usize,
    pub edge_count: usize,
}

/// Samples a tree depth-first with an explicit stack.
///
/// Each vertex draws its count vector `alpha` and receives `alpha[0]` type-1
/// children, then `alpha[1]` type-2 children, and so on. The generator is
/// ChaCha8 seeded from `seed`; one uniform per vertex, in depth-first order.
/// When `max_vertices` vertices exist and more are pending, generation stops
/// and the depth-first prefix is returned, with child counts cut to the
/// children actually generated.
pub fn sample_tree(
    dist: &OffspringDistribution,
    root_type: VertexType,
    seed: u64,
    max_vertices: usize,
) -> Result<SampleOutcome> {
    if max_vertices < 1 {
        return Err(Error::arg("max_vertices must be at least 1"));
    }
    if root_type == 0 || root_type > dist.types() {
        return Err(Error::arg(format!(
            "root type {root_type} outside 1..={}",
            dist.types()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes: Vec<Node> = Vec::new();
    // Pending vertices as (parent, rank, type), next one on top.
    let mut stack: Vec<(Option<usize>, u32, VertexType)> = vec![(None, 0, root_type)];
    let mut status = SampleStatus::Complete;
    while let Some((parent, rank, ty)) = stack.pop() {
        if nodes.len() == max_vertices {
            status = SampleStatus::Truncated;
            break;
        }
        let alpha = dist.pick(ty, rng.random::<f64>());
        let total: u32 = alpha.iter().sum();
        let me = nodes.len();
        nodes.push(Node {
            parent,
            rank,
            ty,
            child_count: total,
        });
        let mut r = total;
        for (k, &count) in alpha.iter().enumerate().rev() {
            for _ in 0..count {
                stack.push((Some(me), r, k as VertexType + 1));
                r -= 1;
            }
        }
    }
    if status == SampleStatus::Truncated {
        for node in nodes.iter_mut() {
            node.child_count = 0;
        }
        for i in 1..nodes.len() {
            let p = nodes[i].parent.expect("non-root");
            nodes[p].child_count += 1;
        }
    }
    let vertex_count = nodes.len();
    Ok(SampleOutcome {
        tree: MultitypeTree::from_nodes_unchecked(dist.types(), nodes),
        status,
        rng_seed: seed,
        vertex_count,
        edge_count: vertex_count - 1,
    })
}

/// Seed of replicate `index` under `master`: output `index` of a SplitMix64
/// stream started at `master`. Replicates can be rerun in isolation with
/// [`sample_tree`] and this seed.
pub fn replicate_seed(master: u64, index: u64) -> u64 {
    const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `f` on replicates `0..count` in parallel, results in replicate order.
pub fn map_replicates<T, F>(
    dist: &OffspringDistribution,
    root_type: VertexType,
    master_seed: u64,
    count: usize,
    max_vertices: usize,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(SampleOutcome) -> T + Sync,
{
    (0..count as u64)
        .into_par_iter()
        .map(|j| {
            sample_tree(
                dist,
                root_type,
                replicate_seed(master_seed, j),
                max_vertices,
            )
            .map(&f)
        })
        .collect()
}

/// Depth profile: entry `n` counts generation-`n` vertices per type.
pub fn generation_counts(tree: &MultitypeTree) -> Vec<Vec<u64>> {
    let r = tree.types() as usize;
    let mut out: Vec<Vec<u64>> = Vec::new();
    for (node, depth) in tree.nodes().iter().zip(tree.depths()) {
        if out.len() <= depth {
            out.resize_with(depth + 1, || vec![0; r]);
        }
        out[depth][(node.ty - 1) as usize] += 1;
    }
    out
}

/// Father and survival counts `(D1, D2, S1, S2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct FatherSurvivalCounts {
    pub d1: u64,
    pub d2: u64,
    pub s1: u64,
    pub s2: u64,
}

/// Counts fathers and survivals, rejecting vertices the survival model cannot
/// produce.
pub fn count_fathers_survivals(tree: &MultitypeTree) -> Result<FatherSurvivalCounts> {
    if tree.types() != 2 {
        return Err(Error::arg("the survival model has two types"));
    }
    let mut counts = FatherSurvivalCounts::default();
    let kids = tree.children();
    for (i, node) in tree.nodes().iter().enumerate() {
        let types: Vec<VertexType> = kids[i].iter().map(|&k| tree.nodes()[k].ty).collect();
        match (node.ty, types.as_slice()) {
            (_, []) => {}
            (1, [1]) => counts.s1 += 1,
            (2, [2]) => counts.s2 += 1,
            (1, [1, 2]) => counts.d1 += 1,
            (2, [1, 2]) => counts.d2 += 1,
            (ty, got) => {
                return Err(Error::arg(format!(
                    "vertex {} of type {ty} has children of types {got:?}",
                    crate::tree::format_address(&tree.address(i))
                )))
            }
        }
    }
    Ok(counts)
}

pub fn edge_count(tree: &MultitypeTree) -> usize {
    tree.edge_count()
}
