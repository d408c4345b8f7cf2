//! Integer partitions, set partitions and the index-tuple families used by the
//! diagonal derivative formulas.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// An integer partition, kept both as its weakly decreasing parts and as the
/// multiplicity of every part value.
#[derive(Clone, Debug)]
pub struct Partition {
    parts: Vec<usize>,
    // mult[h] = number of parts equal to h; mult[0] is unused
    mult: Vec<usize>,
}

impl Partition {
    /// Builds a partition from weakly decreasing positive parts.
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.contains(&0) {
            return Err(Error::InvalidPartition(format!("{parts:?} has a zero part")));
        }
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidPartition(format!("{parts:?} is not weakly decreasing")));
        }
        Ok(Self::from_sorted(parts))
    }

    /// Sorts the given positive parts and drops zeros.
    pub fn from_unsorted(mut parts: Vec<usize>) -> Self {
        parts.retain(|&p| p > 0);
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Self::from_sorted(parts)
    }

    fn from_sorted(parts: Vec<usize>) -> Self {
        let max = parts.first().copied().unwrap_or(0);
        let mut mult = vec![0; max + 1];
        for &p in &parts {
            mult[p] += 1;
        }
        Self { parts, mult }
    }

    pub fn empty() -> Self {
        Self { parts: Vec::new(), mult: vec![0] }
    }

    /// The one-part partition `(r)`.
    pub fn single(r: usize) -> Self {
        if r == 0 {
            Self::empty()
        } else {
            Self::from_sorted(vec![r])
        }
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn weight(&self) -> usize {
        self.parts.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn max_part(&self) -> usize {
        self.parts.first().copied().unwrap_or(0)
    }

    pub fn multiplicity(&self, h: usize) -> usize {
        self.mult.get(h).copied().unwrap_or(0)
    }

    /// `(h, m_h)` for every part value present, ascending in `h`.
    pub fn multiplicities(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.mult.iter().enumerate().skip(1).filter(|(_, &m)| m > 0).map(|(h, &m)| (h, m))
    }

    /// Ferrers-diagram transpose.
    pub fn conjugate(&self) -> Self {
        let cols = self.max_part();
        let parts = (1..=cols).map(|c| self.parts.iter().filter(|&&p| p >= c).count()).collect();
        Self::from_sorted(parts)
    }

    /// Whether `self` dominates `other`: every prefix sum of `self` is at
    /// least the matching prefix sum of `other`.
    pub fn dominates(&self, other: &Partition) -> Result<bool> {
        if self.weight() != other.weight() {
            return Err(Error::Incomparable { left: self.to_string(), right: other.to_string() });
        }
        let n = self.len().max(other.len());
        let (mut a, mut b) = (0usize, 0usize);
        for i in 0..n {
            a += self.parts.get(i).copied().unwrap_or(0);
            b += other.parts.get(i).copied().unwrap_or(0);
            if a < b {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `λ − dε_h`: one part equal to `h` is replaced by `h − d`.
    pub fn lower_part(&self, h: usize, d: usize) -> Option<Self> {
        if d > h || self.multiplicity(h) == 0 {
            return None;
        }
        let mut parts = self.parts.clone();
        let pos = parts.iter().position(|&p| p == h)?;
        parts[pos] = h - d;
        Some(Self::from_unsorted(parts))
    }

    /// Removes one part equal to `h`.
    pub fn remove_part(&self, h: usize) -> Option<Self> {
        self.lower_part(h, h)
    }

    /// Adds one part.
    pub fn with_part(&self, h: usize) -> Self {
        let mut parts = self.parts.clone();
        parts.push(h);
        Self::from_unsorted(parts)
    }

    /// Multiset union of the parts; this is the product rule of every
    /// multiplicative basis.
    pub fn union(&self, other: &Partition) -> Self {
        let mut parts = self.parts.clone();
        parts.extend_from_slice(&other.parts);
        Self::from_unsorted(parts)
    }

    /// `∏_h m_h!`
    pub fn multiplicity_factorials(&self) -> BigInt {
        self.multiplicities().map(|(_, m)| factorial(m)).product()
    }
}

impl PartialEq for Partition {
    fn eq(&self, other: &Self) -> bool {
        self.parts == other.parts
    }
}

impl Eq for Partition {}

impl Hash for Partition {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.parts.hash(state);
    }
}

impl Ord for Partition {
    /// Weight first, then reverse-lexicographic: `(2,2)` sorts before
    /// `(2,1,1)` within the same weight.
    fn cmp(&self, other: &Self) -> Ordering {
        self.weight().cmp(&other.weight()).then_with(|| other.parts.cmp(&self.parts))
    }
}

impl PartialOrd for Partition {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "]")
    }
}

impl FromStr for Partition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let inner = s
            .trim()
            .strip_prefix('[')
            .and_then(|s| s.strip_suffix(']'))
            .ok_or_else(|| Error::InvalidPartition(format!("expected [p1,p2,...], got {s:?}")))?;
        if inner.trim().is_empty() {
            return Ok(Self::empty());
        }
        let parts = inner
            .split(',')
            .map(|t| {
                t.trim().parse::<usize>().map_err(|e| Error::InvalidPartition(format!("{t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(parts)
    }
}

impl Serialize for Partition {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// All partitions of `r` in reverse-lexicographic order. `r = 0` yields the
/// single empty partition.
pub fn enumerate_partitions(r: usize) -> Vec<Partition> {
    partitions_bounded(r, r)
}

/// Partitions of `r` whose parts do not exceed `max_part`, reverse-lex.
pub fn partitions_bounded(r: usize, max_part: usize) -> Vec<Partition> {
    fn go(rest: usize, cap: usize, prefix: &mut Vec<usize>, out: &mut Vec<Partition>) {
        if rest == 0 {
            out.push(Partition::from_sorted(prefix.clone()));
            return;
        }
        for p in (1..=cap.min(rest)).rev() {
            prefix.push(p);
            go(rest - p, p, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(r, max_part, &mut Vec::new(), &mut out);
    out
}

/// The coincidence pattern of a simple derivative `∏_q ∂_{i_q}`: the part
/// `s_p` counts how often the `p`-th distinct index repeats.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct DerivativePattern(pub Partition);

impl DerivativePattern {
    pub fn new(sigma: Partition) -> Self {
        Self(sigma)
    }

    pub fn order(&self) -> usize {
        self.0.weight()
    }

    pub fn partition(&self) -> &Partition {
        &self.0
    }

    /// A concrete index map `q ↦ i_q` realizing the pattern: the `p`-th part
    /// is carried by index `p` (0-based), repeated `s_p` times.
    pub fn index_map(&self) -> Vec<usize> {
        self.0
            .parts()
            .iter()
            .enumerate()
            .flat_map(|(p, &s)| std::iter::repeat_n(p, s))
            .collect()
    }

    /// Per-variable derivative orders in `nvars` variables, parts assigned to
    /// the lowest indices.
    pub fn orders(&self, nvars: usize) -> Result<Vec<u32>> {
        if self.0.len() > nvars {
            return Err(Error::Invalid(format!(
                "pattern {} needs {} distinct variables, only {nvars} available",
                self.0,
                self.0.len()
            )));
        }
        let mut orders = vec![0u32; nvars];
        for (i, &s) in self.0.parts().iter().enumerate() {
            orders[i] = s as u32;
        }
        Ok(orders)
    }
}

/// Element `(a, b)` of `A_{K,ν}`: `a + Σ_{k∈K} b_k = |K| + ν + 1`, all
/// entries positive.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexTupleA {
    pub a: usize,
    pub b: BTreeMap<usize, usize>,
}

/// Element `(a, c)` of `B_{J,α}`: `c_β ≥ |J_β|` for `β ≠ α` and
/// `a + Σ c_β = Σ |J_β|`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexTupleB {
    pub a: usize,
    pub c: BTreeMap<usize, usize>,
}

/// Compositions of `total` into `parts` positive integers, first entry
/// descending.
pub fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn go(rest: usize, slots: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            if rest >= 1 {
                prefix.push(rest);
                out.push(prefix.clone());
                prefix.pop();
            }
            return;
        }
        if rest < slots {
            return;
        }
        for first in (1..=rest - (slots - 1)).rev() {
            prefix.push(first);
            go(rest - first, slots - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if parts == 0 {
        if total == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    go(total, parts, &mut Vec::new(), &mut out);
    out
}

/// Weak compositions (non-negative entries) of every total `≤ max_total` into
/// `parts` slots.
fn weak_compositions_up_to(max_total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn go(rest: usize, slots: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 0 {
            out.push(prefix.clone());
            return;
        }
        for v in 0..=rest {
            prefix.push(v);
            go(rest - v, slots - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(max_total, parts, &mut Vec::new(), &mut out);
    out
}

/// Enumerates `A_{K,ν}`, `a` descending, then `b` ascending.
pub fn enumerate_a(k: &[usize], nu: usize) -> Vec<IndexTupleA> {
    let mut out: Vec<IndexTupleA> = compositions(k.len() + nu + 1, k.len() + 1)
        .into_iter()
        .map(|comp| IndexTupleA {
            a: comp[0],
            b: k.iter().copied().zip(comp[1..].iter().copied()).collect(),
        })
        .collect();
    out.sort_by(|x, y| y.a.cmp(&x.a).then_with(|| x.b.cmp(&y.b)));
    out
}

/// Enumerates `B_{J,α}` for blocks of the given sizes, ordered like
/// [`enumerate_a`]; `alpha` indexes `block_sizes`.
pub fn enumerate_b(block_sizes: &[usize], alpha: usize) -> Vec<IndexTupleB> {
    assert!(alpha < block_sizes.len(), "block index out of range");
    let others: Vec<usize> = (0..block_sizes.len()).filter(|&b| b != alpha).collect();
    let own = block_sizes[alpha];
    if own == 0 {
        return Vec::new();
    }
    let mut out: Vec<IndexTupleB> = weak_compositions_up_to(own - 1, others.len())
        .into_iter()
        .map(|extra| {
            let spent: usize = extra.iter().sum();
            IndexTupleB {
                a: own - spent,
                c: others.iter().zip(&extra).map(|(&b, &e)| (b, block_sizes[b] + e)).collect(),
            }
        })
        .collect();
    out.sort_by(|x, y| y.a.cmp(&x.a).then_with(|| x.c.cmp(&y.c)));
    out
}

/// Enumerates `Ξ_{α,c}`: `κ_β = 0` where `c_β = 0`, else `1 ≤ κ_β ≤ c_β`.
pub fn enumerate_xi(c: &BTreeMap<usize, usize>) -> Vec<BTreeMap<usize, usize>> {
    let mut out = vec![BTreeMap::new()];
    for (&beta, &cb) in c {
        let range: Vec<usize> = if cb == 0 { vec![0] } else { (1..=cb).collect() };
        out = out
            .into_iter()
            .flat_map(|m| {
                range.iter().map(move |&k| {
                    let mut m = m.clone();
                    m.insert(beta, k);
                    m
                })
            })
            .collect();
    }
    out
}

/// All set partitions of `{0..n}` as restricted growth strings
/// (`rgs[i]` is the block of element `i`).
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn go(i: usize, n: usize, max: usize, rgs: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == n {
            out.push(rgs.clone());
            return;
        }
        for b in 0..=max {
            rgs.push(b);
            go(i + 1, n, if b == max { max + 1 } else { max }, rgs, out);
            rgs.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, 0, &mut Vec::new(), &mut out);
    out
}

/// `|X^λ_ι|`: the number of set partitions of `{1..r}` into blocks whose
/// sizes form `λ` and inside which the labels `ι(q)` of `σ` are distinct.
/// Brute force over all set partitions, intended for `r ≤ 8`.
pub fn count_x(sigma: &DerivativePattern, lambda: &Partition) -> u64 {
    let r = sigma.order();
    if r != lambda.weight() {
        return 0;
    }
    let labels = sigma.index_map();
    let mut count = 0u64;
    for rgs in set_partitions(r) {
        let nblocks = rgs.iter().max().map_or(0, |m| m + 1);
        if nblocks != lambda.len() {
            continue;
        }
        let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); nblocks];
        for (q, &b) in rgs.iter().enumerate() {
            blocks[b].push(labels[q]);
        }
        let sizes = Partition::from_unsorted(blocks.iter().map(Vec::len).collect());
        if &sizes != lambda {
            continue;
        }
        let distinct = blocks.iter().all(|blk| {
            let mut s = blk.clone();
            s.sort_unstable();
            s.windows(2).all(|w| w[0] != w[1])
        });
        if distinct {
            count += 1;
        }
    }
    count
}

pub fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// `n!/(n−k)!`, zero when `k > n`.
pub fn falling_factorial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    ((n - k + 1)..=n).fold(BigInt::one(), |acc, v| acc * BigInt::from(v))
}

/// Binomial coefficient with `C(n, k) = 0` for `k > n`.
pub fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    falling_factorial(n, k) / factorial(k)
}
