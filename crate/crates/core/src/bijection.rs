//! Bijection between full binary trees with `c + 1` left fathers and `d` right
//! fathers, and `2 x d` decompositions with entries bounded by `c`.
//!
//! The encoding of such a tree has `d + 1` nestings `()` and `c` separated
//! couples. Between consecutive nestings the separated symbols always read
//! `)...)(...(`, since a `(` directly followed by a `)` would be a nesting.
//! Writing `after(k)` for the separated symbols placed after the `k`-th
//! nesting, the matrix is
//!
//! * `top[i]    = #')' in after(i + 2)` (1-based column `i + 1`),
//! * `bottom[i] = #'(' in after(i + 1)`,
//!
//! and the remaining `c - top[0]` closes sit between the first two nestings,
//! the remaining `c - bottom[0]` opens before the first one.

use crate::combinatorics::Decomposition;
use crate::error::{Error, Result};
use crate::parens::{decode_parens, encode_parens, ParenString};
use crate::tree::MultitypeTree;

/// Separated symbol counts of one gap between nestings.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Gap {
    closes: u32,
    opens: u32,
}

/// Splits an encoding into its `nestings + 1` gaps.
fn gaps(s: &ParenString) -> Result<Vec<Gap>> {
    let b = s.as_str().as_bytes();
    let mut out = vec![Gap::default()];
    let mut i = 0;
    while i < b.len() {
        if b[i] == b'(' && b.get(i + 1) == Some(&b')') {
            out.push(Gap::default());
            i += 2;
            continue;
        }
        let gap = out.last_mut().expect("nonempty");
        if b[i] == b'(' {
            gap.opens += 1;
        } else {
            if gap.opens > 0 {
                return Err(Error::Internal(format!(
                    "`(` followed by `)` outside a nesting in {s}"
                )));
            }
            gap.closes += 1;
        }
        i += 1;
    }
    Ok(out)
}

pub fn parens_to_decomposition(s: &ParenString) -> Result<Decomposition> {
    let gaps = gaps(s)?;
    // gaps[k] holds the symbols between nesting k and nesting k + 1.
    let d = gaps.len() - 2;
    let c = (s.pairs() - (d + 1)) as u32;
    if d == 0 {
        return Ok(Decomposition::empty(c));
    }
    let suffix_closes = |k: usize| gaps[k..].iter().map(|g| g.closes).sum::<u32>();
    let suffix_opens = |k: usize| gaps[k..].iter().map(|g| g.opens).sum::<u32>();
    let top = (1..=d).map(|i| suffix_closes(i + 1)).collect();
    let bottom = (1..=d).map(suffix_opens).collect();
    Decomposition::new(c, top, bottom)
        .map_err(|e| Error::Internal(format!("encoding {s} gave an invalid matrix: {e}")))
}

/// Decomposition of a full binary tree with a type-1 root.
pub fn tree_to_decomposition(tree: &MultitypeTree) -> Result<Decomposition> {
    let s = encode_parens(tree).map_err(|e| Error::arg(e.to_string()))?;
    parens_to_decomposition(&s)
}

pub fn decomposition_to_parens(dec: &Decomposition) -> Result<ParenString> {
    // Re-validate: the public constructor is the only way in, but the
    // serialized form can be deserialized directly.
    let dec = Decomposition::new(dec.c(), dec.top().to_vec(), dec.bottom().to_vec())?;
    let (d, c) = (dec.d(), dec.c());
    let (top, bottom) = (dec.top(), dec.bottom());
    let mut gaps = vec![Gap::default(); d + 2];
    if d == 0 {
        gaps[0].opens = c;
        gaps[1].closes = c;
    } else {
        gaps[0].opens = c - bottom[0];
        gaps[1].closes = c - top[0];
        for k in 1..d {
            gaps[k].opens = bottom[k - 1] - bottom[k];
            gaps[k + 1].closes = top[k - 1] - top[k];
        }
        gaps[d].opens = bottom[d - 1];
        gaps[d + 1].closes = top[d - 1];
    }
    let mut s = String::with_capacity(2 * (c as usize + d + 1));
    for (k, g) in gaps.iter().enumerate() {
        s.extend(std::iter::repeat_n(')', g.closes as usize));
        s.extend(std::iter::repeat_n('(', g.opens as usize));
        if k <= d {
            s.push_str("()");
        }
    }
    s.parse()
        .map_err(|e| Error::Internal(format!("matrix produced an unbalanced string: {e}")))
}

pub fn decomposition_to_tree(dec: &Decomposition) -> Result<MultitypeTree> {
    Ok(decode_parens(&decomposition_to_parens(dec)?))
}
