//! Divided-difference operators evaluated where variables coincide.
//!
//! On a block `J` of equal coordinates the operators only see the
//! symmetrized derivatives `∂_J^σ φ`, combined into `∂_J^g φ`. The closed
//! forms here evaluate `D_I` and `D_d` at any coincidence pattern through
//! those combinations, with no limits taken.

use std::collections::BTreeMap;
use std::fmt;

use itertools::Itertools;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::combinatorics::{binomial, enumerate_a, enumerate_b, enumerate_partitions, enumerate_xi, factorial, Partition};
use crate::divided_difference_ops::apply_dhat;
use crate::error::{Error, Result};
use crate::exact_algebra::{format_rational, RationalFuncX, SparsePoly, UniPoly};
use crate::oracle::{uni_derivative, FunctionOracle, Scalar};
use crate::symmetric_basis::u_hat;

/// Default relative tolerance for grouping floating coordinates into blocks.
pub const DEFAULT_GROUPING_TOLERANCE: f64 = 1e-9;

/// A set partition of the variable indices into blocks `H_α` of equal
/// value. Blocks are sorted, and ordered by their smallest index.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CoincidencePattern {
    nvars: usize,
    blocks: Vec<Vec<usize>>,
}

impl CoincidencePattern {
    pub fn new(nvars: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; nvars];
        let mut blocks: Vec<Vec<usize>> = blocks
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b
            })
            .collect();
        for b in &blocks {
            if b.is_empty() {
                return Err(Error::Pattern("empty block".into()));
            }
            for &i in b {
                if i >= nvars {
                    return Err(Error::VariableOutOfRange { index: i, nvars });
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::Pattern(format!("index {} in two blocks", i + 1)));
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::Pattern(format!("index {} in no block", i + 1)));
        }
        blocks.sort_by_key(|b| b[0]);
        Ok(Self { nvars, blocks })
    }

    /// Every variable in its own block.
    pub fn generic(nvars: usize) -> Self {
        Self { nvars, blocks: (0..nvars).map(|i| vec![i]).collect() }
    }

    /// One block holding every variable.
    pub fn total(nvars: usize) -> Self {
        Self { nvars, blocks: vec![(0..nvars).collect()] }
    }

    /// Consecutive blocks of the given sizes: `[2, 1]` is `{1,2}{3}`.
    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        let mut next = 0;
        let blocks = sizes
            .iter()
            .map(|&s| {
                let b: Vec<usize> = (next..next + s).collect();
                next += s;
                b
            })
            .collect();
        Self::new(next, blocks)
    }

    /// Groups equal coordinates: exact equality for exact scalars, relative
    /// tolerance `rel_tol` otherwise. Also returns the point with every block
    /// snapped to the value of its lowest index.
    pub fn detect<S: Scalar>(point: &[S], rel_tol: f64) -> (Self, Vec<S>) {
        let n = point.len();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        if S::is_exact() {
            for i in 0..n {
                match blocks.iter_mut().find(|b| point[b[0]] == point[i]) {
                    Some(b) => b.push(i),
                    None => blocks.push(vec![i]),
                }
            }
        } else {
            let vals: Vec<f64> = point.iter().map(Scalar::to_f64).collect();
            let order: Vec<usize> = (0..n).sorted_by(|&a, &b| vals[a].total_cmp(&vals[b])).collect();
            for (pos, &i) in order.iter().enumerate() {
                let close = pos > 0 && {
                    let j = order[pos - 1];
                    (vals[i] - vals[j]).abs() <= rel_tol * vals[i].abs().max(vals[j].abs())
                };
                if close {
                    blocks.last_mut().expect("previous block").push(i);
                } else {
                    blocks.push(vec![i]);
                }
            }
        }
        let pattern = Self::new(n, blocks).expect("grouping covers every index once");
        let mut snapped = point.to_vec();
        for b in &pattern.blocks {
            for &i in &b[1..] {
                snapped[i] = point[b[0]].clone();
            }
        }
        (pattern, snapped)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    pub fn is_generic(&self) -> bool {
        self.blocks.len() == self.nvars
    }

    /// Block values `y_α`, after checking that `point` is constant on blocks
    /// and that distinct blocks carry distinct values.
    pub fn values<S: Scalar>(&self, point: &[S]) -> Result<Vec<S>> {
        if point.len() != self.nvars {
            return Err(Error::NvarsMismatch { left: self.nvars, right: point.len() });
        }
        check_blocks(&self.blocks, point)
    }
}

impl fmt::Display for CoincidencePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.blocks {
            write!(f, "{{{}}}", b.iter().map(|i| i + 1).join(","))?;
        }
        Ok(())
    }
}

impl Serialize for CoincidencePattern {
    fn serialize<Ser: serde::Serializer>(&self, s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        s.collect_seq(self.blocks.iter().map(|b| b.iter().map(|i| i + 1).collect::<Vec<_>>()))
    }
}

fn check_blocks<S: Scalar>(blocks: &[Vec<usize>], point: &[S]) -> Result<Vec<S>> {
    let mut values: Vec<S> = Vec::with_capacity(blocks.len());
    for b in blocks {
        let y = &point[b[0]];
        if b.iter().any(|&i| &point[i] != y) {
            return Err(Error::Pattern(format!("block {{{}}} is not constant", b.iter().map(|i| i + 1).join(","))));
        }
        if values.contains(y) {
            return Err(Error::Pattern("two blocks share a value; merge them".into()));
        }
        values.push(y.clone());
    }
    Ok(values)
}

/// Coefficients of `∂_J^g = Σ_{σ⊢g} c_σ ∂_J^σ`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DiagDerivativeCombo {
    pub g: usize,
    #[serde(serialize_with = "serialize_terms")]
    pub terms: BTreeMap<Partition, BigRational>,
}

fn serialize_terms<Ser: serde::Serializer>(
    terms: &BTreeMap<Partition, BigRational>,
    s: Ser,
) -> std::result::Result<Ser::Ok, Ser::Error> {
    s.collect_map(terms.iter().map(|(k, v)| (k.to_string(), format_rational(v))))
}

impl DiagDerivativeCombo {
    pub fn coefficient(&self, sigma: &Partition) -> BigRational {
        self.terms.get(sigma).cloned().unwrap_or_else(BigRational::zero)
    }

    fn from_terms(g: usize, terms: BTreeMap<Partition, BigRational>) -> Self {
        Self { g, terms: terms.into_iter().filter(|(_, c)| !c.is_zero()).collect() }
    }
}

fn ratio(n: BigInt, d: BigInt) -> BigRational {
    BigRational::new(n, d)
}

fn sign(k: usize) -> BigRational {
    if k.is_multiple_of(2) {
        BigRational::one()
    } else {
        -BigRational::one()
    }
}

/// `c_σ = (−1)^{g−l} g (l−1)! / ∏_h h!^{m_h} m_h!`.
pub fn diag_combo(g: usize) -> DiagDerivativeCombo {
    assert!(g >= 1, "∂^g needs g ≥ 1");
    let terms = enumerate_partitions(g)
        .into_iter()
        .map(|sigma| {
            let l = sigma.len();
            let den: BigInt = sigma
                .multiplicities()
                .map(|(h, m)| factorial(h).pow(m as u32) * factorial(m))
                .product();
            let c = sign(g - l) * ratio(BigInt::from(g) * factorial(l - 1), den);
            (sigma, c)
        })
        .collect();
    DiagDerivativeCombo::from_terms(g, terms)
}

/// Polynomials in the formal symbols `w_1, w_2, ...`, a monomial `∏ w_{λ_q}`
/// keyed by `λ`.
type WPoly = BTreeMap<Partition, BigRational>;

fn wpoly_add_scaled(acc: &mut WPoly, p: &WPoly, factor: &BigRational, part: usize) {
    for (m, c) in p {
        *acc.entry(m.with_part(part)).or_insert_with(BigRational::zero) += c * factor;
    }
}

/// `∂^g = (−1)^g g Σ_t ((t−1)!/g!) B_{g,t}(−w_1, −w_2, ...)`, with `B` the
/// exponential partial Bell polynomials from
/// `B_{n,k} = Σ_i C(n−1, i−1) x_i B_{n−i,k−1}`.
pub fn diag_combo_via_bell(g: usize) -> DiagDerivativeCombo {
    assert!(g >= 1, "∂^g needs g ≥ 1");
    // bell[k][n] = B_{n,k}(−w)
    let mut bell: Vec<Vec<WPoly>> = vec![vec![WPoly::new(); g + 1]; g + 1];
    bell[0][0].insert(Partition::empty(), BigRational::one());
    for k in 1..=g {
        for n in k..=g {
            let mut acc = WPoly::new();
            for i in 1..=(n - k + 1) {
                let factor = -BigRational::from_integer(binomial(n - 1, i - 1));
                wpoly_add_scaled(&mut acc, &bell[k - 1][n - i], &factor, i);
            }
            bell[k][n] = acc;
        }
    }
    let mut terms = WPoly::new();
    let g_fact = factorial(g);
    for (t, row) in bell.iter().enumerate().skip(1) {
        let weight = sign(g) * ratio(BigInt::from(g) * factorial(t - 1), g_fact.clone());
        for (m, c) in &row[g] {
            *terms.entry(m.clone()).or_insert_with(BigRational::zero) += c * &weight;
        }
    }
    DiagDerivativeCombo::from_terms(g, terms)
}

/// Builds `∂^g` from `∂^1, ..., ∂^{g−1}`: the limit of the divided
/// difference relation gives
/// `−(−1)^g (g−1)! ∂^g = ∂_j^g + Σ_{μ<g} ((g−1)!/μ!) (−1)^{g−μ} ∂_j^μ ∂^{g−μ}`,
/// where `∂_j^μ` prepends a part `μ`.
pub fn diag_combo_via_recursion(g: usize) -> DiagDerivativeCombo {
    assert!(g >= 1, "∂^g needs g ≥ 1");
    let mut combos: Vec<DiagDerivativeCombo> =
        vec![DiagDerivativeCombo::from_terms(1, [(Partition::single(1), BigRational::one())].into())];
    for h in 2..=g {
        let mut acc = WPoly::new();
        acc.insert(Partition::single(h), BigRational::one());
        for mu in 1..h {
            let factor = ratio(factorial(h - 1), factorial(mu)) * sign(h - mu);
            let lower = &combos[h - mu - 1];
            wpoly_add_scaled(&mut acc, &lower.terms, &factor, mu);
        }
        let scale = (-sign(h) * BigRational::from_integer(factorial(h - 1))).recip();
        let terms = acc.into_iter().map(|(m, c)| (m, c * &scale)).collect();
        combos.push(DiagDerivativeCombo::from_terms(h, terms));
    }
    combos.pop().expect("g ≥ 1")
}

fn check_block_constant<S: Scalar>(block: &[usize], point: &[S]) -> Result<()> {
    let Some(&first) = block.first() else {
        return Err(Error::Pattern("empty block".into()));
    };
    for &i in block {
        if i >= point.len() {
            return Err(Error::VariableOutOfRange { index: i, nvars: point.len() });
        }
        if point[i] != point[first] {
            return Err(Error::Pattern(format!("coordinates {} and {} differ", first + 1, i + 1)));
        }
    }
    Ok(())
}

/// `∂_J^σ φ`: the parts of `σ`, largest first, differentiate the lowest
/// indices of `J`. Any other assignment gives the same value on the block.
pub fn symmetrized_partial<S: Scalar>(
    block: &[usize],
    sigma: &Partition,
    phi: &FunctionOracle,
    point: &[S],
) -> Result<S> {
    if sigma.len() > block.len() {
        return Err(Error::Pattern(format!("{sigma} has more parts than the block has indices ({})", block.len())));
    }
    check_block_constant(block, point)?;
    let sorted: Vec<usize> = block.iter().copied().sorted().collect();
    partial_with_assignment(&sorted, sigma.parts(), phi, point)
}

/// `∏ ∂_{indices[q]}^{parts[q]} φ`, no symmetry assumed.
pub fn partial_with_assignment<S: Scalar>(
    indices: &[usize],
    parts: &[usize],
    phi: &FunctionOracle,
    point: &[S],
) -> Result<S> {
    let mut orders = vec![0u32; point.len()];
    for (&i, &p) in indices.iter().zip(parts) {
        orders[i] += p as u32;
    }
    phi.partial(&orders, point)
}

/// `∂_J^g φ` on a block of equal coordinates; needs `g ≤ |J|`.
pub fn diag_derivative<S: Scalar>(block: &[usize], g: usize, phi: &FunctionOracle, point: &[S]) -> Result<S> {
    if g == 0 || g > block.len() {
        return Err(Error::Pattern(format!("∂^{g} is defined on blocks of size ≥ {g}, got {}", block.len())));
    }
    let combo = diag_combo(g);
    let mut acc = S::zero();
    for (sigma, c) in &combo.terms {
        acc = acc + S::from_rational(c) * symmetrized_partial(block, sigma, phi, point)?;
    }
    Ok(acc)
}

/// `D_I φ = Σ_{i∈I} φ_i / ∏_{j∈I∖i} (x_j − x_i)` at distinct coordinates.
pub fn generic_di<S: Scalar>(set: &[usize], phi: &FunctionOracle, point: &[S]) -> Result<S> {
    let mut acc = S::zero();
    for &i in set {
        let mut den = S::one();
        for &j in set.iter().filter(|&&j| j != i) {
            den = den * (point[j].clone() - point[i].clone());
        }
        if den.is_zero() {
            return Err(Error::Pattern(format!(
                "coordinates in {{{}}} coincide; use the coincident-block formula",
                set.iter().map(|k| k + 1).join(",")
            )));
        }
        let mut orders = vec![0u32; point.len()];
        orders[i] = 1;
        acc = acc + phi.partial(&orders, point)? / den;
    }
    Ok(acc)
}

/// `D_d φ = d! Σ_{|I|=d} D_I φ` at distinct coordinates.
pub fn generic_dd<S: Scalar>(d: usize, phi: &FunctionOracle, point: &[S]) -> Result<S> {
    let n = point.len();
    if d == 0 || d > n {
        return Err(Error::OperatorOrder { d, nvars: n });
    }
    let subsets: Vec<Vec<usize>> = (0..n).combinations(d).collect();
    let sum = subsets
        .par_iter()
        .map(|set| generic_di(set, phi, point))
        .try_reduce(S::zero, |a, b| Ok(a + b))?;
    Ok(S::from_rational(&BigRational::from_integer(factorial(d))) * sum)
}

/// `D_I φ` when the coordinates of `J ⊆ I` share the value `y` and the rest
/// of `I` is distinct, with `p = |J|`:
/// `Σ_{k∈I∖J} φ_k / ((y−x_k)^p ∏_{l∈I∖(J∪k)} (x_l−x_k))
///  + Σ_{A_{I∖J,p−1}} (−1)^{p−a} ∂_J^a φ / ∏_k (x_k−y)^{b_k}`.
pub fn apply_di_one_block<S: Scalar>(
    set: &[usize],
    block: &[usize],
    phi: &FunctionOracle,
    point: &[S],
) -> Result<S> {
    if block.iter().any(|j| !set.contains(j)) {
        return Err(Error::Pattern("block is not inside the index set".into()));
    }
    check_block_constant(block, point)?;
    let y = point[block[0]].clone();
    let p = block.len();
    let rest: Vec<usize> = set.iter().copied().filter(|k| !block.contains(k)).collect();
    for (q, &k) in rest.iter().enumerate() {
        if point[k] == y || rest[..q].iter().any(|&l| point[l] == point[k]) {
            return Err(Error::Pattern(format!(
                "coordinate {} coincides with another; use a coarser pattern",
                k + 1
            )));
        }
    }

    let mut acc = S::zero();
    for &k in &rest {
        let xk = &point[k];
        let mut den = (y.clone() - xk.clone()).powu(p);
        for &l in rest.iter().filter(|&&l| l != k) {
            den = den * (point[l].clone() - xk.clone());
        }
        let mut orders = vec![0u32; point.len()];
        orders[k] = 1;
        acc = acc + phi.partial(&orders, point)? / den;
    }

    let mut diag: BTreeMap<usize, S> = BTreeMap::new();
    for tuple in enumerate_a(&rest, p - 1) {
        let da = match diag.get(&tuple.a) {
            Some(v) => v.clone(),
            None => {
                let v = diag_derivative(block, tuple.a, phi, point)?;
                diag.insert(tuple.a, v.clone());
                v
            }
        };
        let mut den = S::one();
        for (&k, &b) in &tuple.b {
            den = den * (point[k].clone() - y.clone()).powu(b);
        }
        acc = acc + S::from_rational(&sign(p - tuple.a)) * da / den;
    }
    Ok(acc)
}

/// `D_I φ` for `I` split into blocks `J_α` of equal coordinates with
/// distinct values `y_α`:
/// `Σ_α Σ_{B_{J,α}} ∏_{β≠α} C(c_β−1, |J_β|−1) (−1)^{|J_α|−a} ∂_{J_α}^a φ
///  / ∏_{β≠α} (y_β − y_α)^{c_β}`.
pub fn apply_di_general<S: Scalar>(blocks: &[Vec<usize>], phi: &FunctionOracle, point: &[S]) -> Result<S> {
    if blocks.iter().any(Vec::is_empty) {
        return Err(Error::Pattern("empty block".into()));
    }
    let values = check_blocks(blocks, point)?;
    let sizes: Vec<usize> = blocks.iter().map(Vec::len).collect();
    let mut acc = S::zero();
    for (alpha, block) in blocks.iter().enumerate() {
        let mut diag: BTreeMap<usize, S> = BTreeMap::new();
        for tuple in enumerate_b(&sizes, alpha) {
            let mut coeff = sign(sizes[alpha] - tuple.a);
            let mut den = S::one();
            for (&beta, &c) in &tuple.c {
                coeff *= BigRational::from_integer(binomial(c - 1, sizes[beta] - 1));
                den = den * (values[beta].clone() - values[alpha].clone()).powu(c);
            }
            let da = match diag.get(&tuple.a) {
                Some(v) => v.clone(),
                None => {
                    let v = diag_derivative(block, tuple.a, phi, point)?;
                    diag.insert(tuple.a, v.clone());
                    v
                }
            };
            acc = acc + S::from_rational(&coeff) * da / den;
        }
    }
    Ok(acc)
}

/// Which closed form evaluated an operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormulaBranch {
    Generic,
    OneBlock,
    General,
    TotalDiagonal,
}

impl fmt::Display for FormulaBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FormulaBranch::Generic => "generic",
            FormulaBranch::OneBlock => "one-block",
            FormulaBranch::General => "general",
            FormulaBranch::TotalDiagonal => "total-diagonal",
        })
    }
}

/// `D_I φ` with the blocks of `I` read off the point by exact equality,
/// dispatched to the narrowest applicable formula.
pub fn apply_di_at<S: Scalar>(set: &[usize], phi: &FunctionOracle, point: &[S]) -> Result<(FormulaBranch, S)> {
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for &i in set {
        match blocks.iter_mut().find(|b| point[b[0]] == point[i]) {
            Some(b) => b.push(i),
            None => blocks.push(vec![i]),
        }
    }
    let nontrivial: Vec<&Vec<usize>> = blocks.iter().filter(|b| b.len() > 1).collect();
    match nontrivial.as_slice() {
        [] => Ok((FormulaBranch::Generic, generic_di(set, phi, point)?)),
        [block] => Ok((FormulaBranch::OneBlock, apply_di_one_block(set, block, phi, point)?)),
        _ => Ok((FormulaBranch::General, apply_di_general(&blocks, phi, point)?)),
    }
}

/// `C_{α,c} = Σ_{κ∈Ξ_{α,c}} (−1)^{Σ(c_β−κ_β)} C(|H_α|, d−Σκ)
///  ∏_{c_β>0} C(c_β−1, κ_β−1) C(|H_β|, κ_β)`.
pub fn dd_multiplier(d: usize, sizes: &[usize], alpha: usize, c: &BTreeMap<usize, usize>) -> BigRational {
    let mut total = BigInt::zero();
    for kappa in enumerate_xi(c) {
        let spent: usize = kappa.values().sum();
        if spent > d {
            continue;
        }
        let slack: usize = c.iter().map(|(b, cb)| cb - kappa[b]).sum();
        let mut term = binomial(sizes[alpha], d - spent);
        for (&beta, &cb) in c.iter().filter(|(_, cb)| **cb > 0) {
            let k = kappa[&beta];
            term *= binomial(cb - 1, k - 1) * binomial(sizes[beta], k);
        }
        if slack % 2 == 1 {
            term = -term;
        }
        total += term;
    }
    BigRational::from_integer(total)
}

/// Weak compositions of every total `< bound` over `slots`.
fn weak_vectors_below(bound: usize, slots: usize) -> Vec<Vec<usize>> {
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
    if bound > 0 {
        go(bound - 1, slots, &mut Vec::new(), &mut out);
    }
    out
}

/// `D_d φ = d! Σ_α Σ_{c ≥ 0, Σc < d} C_{α,c} ∂_{H_α}^{d−Σc} φ / ∏_β (y_β − y_α)^{c_β}`
/// at a point with coincidence pattern `pattern`.
pub fn apply_dd_at_point<S: Scalar>(
    d: usize,
    pattern: &CoincidencePattern,
    phi: &FunctionOracle,
    point: &[S],
) -> Result<S> {
    let n = pattern.nvars();
    if d == 0 || d > n {
        return Err(Error::OperatorOrder { d, nvars: n });
    }
    let values = pattern.values(point)?;
    let sizes = pattern.block_sizes();
    let m = sizes.len();
    let mut acc = S::zero();
    for (alpha, block) in pattern.blocks().iter().enumerate() {
        let others: Vec<usize> = (0..m).filter(|&b| b != alpha).collect();
        let mut diag: BTreeMap<usize, S> = BTreeMap::new();
        for extra in weak_vectors_below(d, others.len()) {
            let a = d - extra.iter().sum::<usize>();
            if a > sizes[alpha] {
                continue;
            }
            let c: BTreeMap<usize, usize> = others.iter().copied().zip(extra.iter().copied()).collect();
            let coeff = dd_multiplier(d, &sizes, alpha, &c);
            if coeff.is_zero() {
                continue;
            }
            let mut den = S::one();
            for (&beta, &cb) in &c {
                den = den * (values[beta].clone() - values[alpha].clone()).powu(cb);
            }
            let da = match diag.get(&a) {
                Some(v) => v.clone(),
                None => {
                    let v = diag_derivative(block, a, phi, point)?;
                    diag.insert(a, v.clone());
                    v
                }
            };
            acc = acc + S::from_rational(&coeff) * da / den;
        }
    }
    Ok(S::from_rational(&BigRational::from_integer(factorial(d))) * acc)
}

/// `D̂_d φ = ∂_{[N]}^d φ` with every coordinate equal to `a`.
pub fn total_diagonal_dhat<S: Scalar>(d: usize, phi: &FunctionOracle, a: &S) -> Result<S> {
    let n = phi.arity();
    if d == 0 || d > n {
        return Err(Error::OperatorOrder { d, nvars: n });
    }
    let point = vec![a.clone(); n];
    let all: Vec<usize> = (0..n).collect();
    diag_derivative(&all, d, phi, &point)
}

/// `(−1)^{d−1} f^{(d)}(a) / (d−1)!`, the value of `D̂_d` on the trace of `f`
/// at the diagonal point `(a, ..., a)`.
pub fn trace_diagonal_value(d: usize, f_derivative_d: f64) -> f64 {
    let s = if d % 2 == 1 { 1.0 } else { -1.0 };
    let fact: f64 = (1..d).map(|k| k as f64).product();
    s * f_derivative_d / fact
}

/// Exact version of [`trace_diagonal_value`] for a polynomial `f`.
pub fn trace_diagonal_value_exact(d: usize, f: &UniPoly, a: &BigRational) -> BigRational {
    sign(d - 1) * uni_derivative(f, d).evaluate(a) / BigRational::from_integer(factorial(d - 1))
}

/// An evaluated `D_d φ` together with how it was obtained.
#[derive(Clone, Debug, Serialize)]
pub struct DiagonalEvaluation<S> {
    pub pattern: CoincidencePattern,
    pub branch: FormulaBranch,
    pub value: S,
}

/// `D_d φ` at an arbitrary point: detects the coincidence pattern, snaps
/// floating coordinates within `rel_tol`, and picks the closed form.
pub fn eval_dd<S: Scalar>(d: usize, phi: &FunctionOracle, point: &[S], rel_tol: f64) -> Result<DiagonalEvaluation<S>> {
    let (pattern, snapped) = CoincidencePattern::detect(point, rel_tol);
    let (branch, value) = if pattern.is_generic() {
        (FormulaBranch::Generic, generic_dd(d, phi, &snapped)?)
    } else if pattern.blocks().len() == 1 {
        let n = pattern.nvars();
        let scale = BigRational::from_integer(factorial(d) * binomial(n, d));
        (FormulaBranch::TotalDiagonal, S::from_rational(&scale) * total_diagonal_dhat(d, phi, &snapped[0])?)
    } else {
        let branch = if pattern.blocks().iter().filter(|b| b.len() > 1).count() == 1 {
            FormulaBranch::OneBlock
        } else {
            FormulaBranch::General
        };
        (branch, apply_dd_at_point(d, &pattern, phi, &snapped)?)
    };
    Ok(DiagonalEvaluation { pattern, branch, value })
}

/// Coordinates `û_1, ..., û_h` in the variables of one block of size `h`.
#[derive(Clone, Debug)]
pub struct BlockChart {
    pub indices: Vec<usize>,
    /// `û_r^{h}` in `h` variables, `r = 1..=h`.
    pub coordinates: Vec<SparsePoly>,
}

/// Local coordinates near a point with the given pattern: per block, the
/// normalized `û_r` of the block variables. Moving along `û_d` of block `α`
/// differentiates `φ` by `∂_{H_α}^d`.
#[derive(Clone, Debug)]
pub struct LocalChart {
    pub pattern: CoincidencePattern,
    pub blocks: Vec<BlockChart>,
}

pub fn local_coordinates(pattern: &CoincidencePattern) -> Result<LocalChart> {
    let blocks = pattern
        .blocks()
        .iter()
        .map(|b| {
            let h = b.len();
            let coordinates = (1..=h).map(|r| u_hat(r, h)).collect::<Result<Vec<_>>>()?;
            Ok(BlockChart { indices: b.clone(), coordinates })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LocalChart { pattern: pattern.clone(), blocks })
}

/// Derivatives of `φ` along the chart directions: `∂_{H_α}^d φ` for
/// `d = 1..=|H_α|`, per block.
pub fn chart_derivatives<S: Scalar>(
    pattern: &CoincidencePattern,
    phi: &FunctionOracle,
    point: &[S],
) -> Result<Vec<Vec<S>>> {
    pattern.values(point)?;
    pattern
        .blocks()
        .iter()
        .map(|b| (1..=b.len()).map(|d| diag_derivative(b, d, phi, point)).collect())
        .collect()
}

/// [`chart_derivatives`] for the trace of `f`, from `f^{(d)}(y_α)` alone:
/// `(−1)^{d−1} f^{(d)}(y_α) / (d−1)!`.
pub fn trace_chart_derivatives(
    pattern: &CoincidencePattern,
    f_derivative: &dyn Fn(usize, f64) -> f64,
    values: &[f64],
) -> Result<Vec<Vec<f64>>> {
    if values.len() != pattern.blocks().len() {
        return Err(Error::Pattern(format!("{} values for {} blocks", values.len(), pattern.blocks().len())));
    }
    Ok(pattern
        .block_sizes()
        .iter()
        .zip(values)
        .map(|(&h, &y)| (1..=h).map(|d| trace_diagonal_value(d, f_derivative(d, y))).collect())
        .collect())
}

/// `Σ_σ c_σ ∂^σ` applied to `p` as a differential operator with its indices
/// frozen to the lowest ones of `block`.
fn frozen_diag_operator(g: usize, block: &[usize], p: &SparsePoly) -> Result<SparsePoly> {
    let mut out = SparsePoly::zero(p.nvars());
    for (sigma, c) in &diag_combo(g).terms {
        let mut orders = vec![0u32; p.nvars()];
        for (&i, &part) in block.iter().zip(sigma.parts()) {
            orders[i] += part as u32;
        }
        out = &out + &p.derivative(&orders)?.scale(c);
    }
    Ok(out)
}

/// The two sides of the composition warning: chaining the diagonal-only
/// formulas of `D̂_{d1}` and `D̂_{d2}` versus the true `D̂_{d1} D̂_{d2} φ`, both
/// at `(a, ..., a)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompositionCheck {
    pub naive: BigRational,
    pub true_value: BigRational,
}

impl CompositionCheck {
    pub fn differs(&self) -> bool {
        self.naive != self.true_value
    }
}

pub fn composition_check(d1: usize, d2: usize, phi: &SparsePoly, a: &BigRational) -> Result<CompositionCheck> {
    let n = phi.nvars();
    let all: Vec<usize> = (0..n).collect();
    let point = vec![a.clone(); n];
    let naive = frozen_diag_operator(d1, &all, &frozen_diag_operator(d2, &all, phi)?)?.evaluate(&point)?;
    let true_value = apply_dhat(d1, &apply_dhat(d2, phi)?)?.evaluate(&point)?;
    Ok(CompositionCheck { naive, true_value })
}

/// Checks, as rational functions of `x_j, x_{k_1}, ..., x_{k_m}`, that
/// `∂_j^ν (ψ'(x_j) / ∏_k (x_k − x_j)) = Σ_{A_{K,ν}} ν! ψ^{(a)}(x_j) / ((a−1)! ∏_k (x_k − x_j)^{b_k})`.
pub fn check_derivative_with_denominator(k_size: usize, nu: usize, psi: &UniPoly) -> Result<bool> {
    let n = k_size + 1;
    let in_xj = |f: &UniPoly| -> Result<SparsePoly> {
        let xj = SparsePoly::var(n, 0)?;
        let mut out = SparsePoly::zero(n);
        let mut power = SparsePoly::one(n);
        for c in f.coeffs() {
            out = &out + &power.scale(c);
            power = &power * &xj;
        }
        Ok(out)
    };
    let diff = |k: usize| -> Result<SparsePoly> { SparsePoly::var_difference(n, k, 0) };
    let ks: Vec<usize> = (1..n).collect();

    let mut den = SparsePoly::one(n);
    for &k in &ks {
        den = &den * &diff(k)?;
    }
    let mut lhs = RationalFuncX::new(in_xj(&uni_derivative(psi, 1))?, den)?;
    for _ in 0..nu {
        lhs = lhs.partial_derivative(0)?;
    }

    let nu_fact = BigRational::from_integer(factorial(nu));
    let mut rhs = RationalFuncX::from_poly(SparsePoly::zero(n));
    for tuple in enumerate_a(&ks, nu) {
        let coeff = &nu_fact / BigRational::from_integer(factorial(tuple.a - 1));
        let mut den = SparsePoly::one(n);
        for (&k, &b) in &tuple.b {
            den = &den * &diff(k)?.pow(b as u32);
        }
        rhs = rhs.add(&RationalFuncX::new(in_xj(&uni_derivative(psi, tuple.a))?.scale(&coeff), den)?)?;
    }
    lhs.equals(&rhs)
}

/// Largest `|coefficient|` difference between two combos, for reports.
pub fn combo_distance(a: &DiagDerivativeCombo, b: &DiagDerivativeCombo) -> BigRational {
    a.terms
        .keys()
        .chain(b.terms.keys())
        .map(|s| (a.coefficient(s) - b.coefficient(s)).abs())
        .max()
        .unwrap_or_else(BigRational::zero)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::divided_difference_ops::apply_dd;
    use crate::exact_algebra::{integer, poly, rational};
    use crate::oracle::monomial_uni;
    use crate::symmetric_basis::{elementary_all, power_sum};

    fn p(s: &str) -> Partition {
        s.parse().unwrap()
    }

    fn q(n: i64, d: i64) -> BigRational {
        rational(n, d)
    }

    fn ints(v: &[i64]) -> Vec<BigRational> {
        v.iter().map(|&x| integer(x)).collect()
    }

    #[test]
    fn combo_low_orders() {
        assert_eq!(diag_combo(1).terms, [(p("[1]"), q(1, 1))].into());
        assert_eq!(diag_combo(2).terms, [(p("[1,1]"), q(1, 1)), (p("[2]"), q(-1, 1))].into());
        assert_eq!(
            diag_combo(3).terms,
            [(p("[1,1,1]"), q(1, 1)), (p("[2,1]"), q(-3, 2)), (p("[3]"), q(1, 2))].into()
        );
    }

    #[test]
    fn three_constructions_agree() {
        for g in 1..=7 {
            let direct = diag_combo(g);
            assert_eq!(diag_combo_via_bell(g), direct, "bell g={g}");
            assert_eq!(diag_combo_via_recursion(g), direct, "recursion g={g}");
        }
    }

    #[test]
    fn trace_combo_is_single_part() {
        // only σ = (g) survives on a trace function
        for g in 1..=6 {
            let c = diag_combo(g).coefficient(&Partition::single(g));
            assert_eq!(c, sign(g - 1) / BigRational::from_integer(factorial(g - 1)));
        }
    }

    #[test]
    fn pattern_detection_exact_and_float() {
        let (pat, _) = CoincidencePattern::detect(&ints(&[2, 5, 2, 7]), 0.0);
        assert_eq!(pat.to_string(), "{1,3}{2}{4}");
        let (pat, snapped) = CoincidencePattern::detect(&[1.0, 3.0, 1.0 + 1e-12, 3.5], DEFAULT_GROUPING_TOLERANCE);
        assert_eq!(pat.to_string(), "{1,3}{2}{4}");
        assert_eq!(snapped[2], 1.0);
        let (pat, _) = CoincidencePattern::detect(&[1.0, 1.0 + 1e-6], DEFAULT_GROUPING_TOLERANCE);
        assert!(pat.is_generic());
        assert!(CoincidencePattern::new(3, vec![vec![0, 1], vec![1, 2]]).is_err());
        assert!(CoincidencePattern::new(3, vec![vec![0, 1]]).is_err());
    }

    #[test]
    fn pattern_values_reject_shared_values() {
        let pat = CoincidencePattern::from_sizes(&[2, 1]).unwrap();
        assert!(pat.values(&ints(&[1, 1, 1])).is_err());
        assert!(pat.values(&ints(&[1, 2, 3])).is_err());
        assert_eq!(pat.values(&ints(&[1, 1, 3])).unwrap(), ints(&[1, 3]));
    }

    #[test]
    fn symmetrized_partial_examples() {
        // e_2 in 4 variables, J = {1,2}
        let e2 = FunctionOracle::polynomial(elementary_all(2, 4));
        let pt = ints(&[3, 3, 5, 7]);
        assert_eq!(symmetrized_partial(&[0, 1], &p("[1,1]"), &e2, &pt).unwrap(), integer(1));
        assert_eq!(symmetrized_partial(&[0, 1], &p("[2]"), &e2, &pt).unwrap(), integer(0));
        let e3 = FunctionOracle::polynomial(elementary_all(3, 4));
        // e_1(x_3, x_4) = 12
        assert_eq!(symmetrized_partial(&[0, 1], &p("[1,1]"), &e3, &pt).unwrap(), integer(12));
        let tr = FunctionOracle::trace_poly(4, monomial_uni(4));
        assert!(symmetrized_partial(&[0, 1], &p("[2,1]"), &tr, &pt).unwrap().is_zero());
        assert!(symmetrized_partial(&[0, 1], &p("[1,1,1]"), &tr, &pt).is_err());
    }

    #[test]
    fn symmetrized_partial_is_assignment_free() {
        let phi = FunctionOracle::polynomial(&power_sum(3, 4) * &elementary_all(2, 4));
        let pt = ints(&[2, 2, 2, -1]);
        let reference = symmetrized_partial(&[0, 1, 2], &p("[2,1]"), &phi, &pt).unwrap();
        for perm in [0usize, 1, 2].into_iter().permutations(3) {
            assert_eq!(partial_with_assignment(&perm, &[2, 1], &phi, &pt).unwrap(), reference);
        }
    }

    #[test]
    fn one_block_of_two_squares() {
        let phi = FunctionOracle::polynomial(poly(2, &[(1, &[2, 0]), (1, &[0, 2])]));
        let pt = ints(&[4, 4]);
        assert_eq!(apply_di_one_block(&[0, 1], &[0, 1], &phi, &pt).unwrap(), integer(-2));
        // generic D_I x²+y² = −2 everywhere
        assert_eq!(generic_di(&[0, 1], &phi, &ints(&[1, 9])).unwrap(), integer(-2));
    }

    #[test]
    fn singleton_block_is_generic() {
        let phi = FunctionOracle::polynomial(&power_sum(4, 4) + &elementary_all(3, 4));
        let pt = ints(&[1, 3, -2, 6]);
        let set = [0, 1, 2, 3];
        let generic = generic_di(&set, &phi, &pt).unwrap();
        assert_eq!(apply_di_one_block(&set, &[2], &phi, &pt).unwrap(), generic);
        let singles: Vec<Vec<usize>> = set.iter().map(|&i| vec![i]).collect();
        assert_eq!(apply_di_general(&singles, &phi, &pt).unwrap(), generic);
    }

    #[test]
    fn general_matches_one_block() {
        let phi = FunctionOracle::polynomial(&power_sum(5, 5) + &(&elementary_all(2, 5) * &elementary_all(2, 5)));
        let pt = ints(&[2, 2, 2, -1, 5]);
        let set = [0, 1, 2, 3, 4];
        let one = apply_di_one_block(&set, &[0, 1, 2], &phi, &pt).unwrap();
        let general = apply_di_general(&[vec![0, 1, 2], vec![3], vec![4]], &phi, &pt).unwrap();
        assert_eq!(one, general);
    }

    #[test]
    fn one_block_rejects_extra_coincidence() {
        let phi = FunctionOracle::polynomial(power_sum(3, 4));
        assert!(apply_di_one_block(&[0, 1, 2, 3], &[0, 1], &phi, &ints(&[1, 1, 4, 4])).is_err());
        assert!(apply_di_one_block(&[0, 1, 2, 3], &[0, 1], &phi, &ints(&[1, 1, 1, 4])).is_err());
    }

    #[test]
    fn block_formulas_match_exact_operator() {
        // D_I φ as a polynomial, evaluated at coincident points
        let phi_poly = &power_sum(4, 5) + &(&elementary_all(2, 5) * &elementary_all(1, 5));
        let phi = FunctionOracle::polynomial(phi_poly.clone());
        let set = [0, 1, 2, 3];
        let di = crate::divided_difference_ops::apply_di(&set, &phi_poly, true)
            .unwrap()
            .into_polynomial()
            .unwrap();
        for pt in [[3, 3, 1, 7, 2], [3, 3, 3, 7, 2], [3, 3, 7, 7, 2], [3, 3, 3, 3, 9], [2, -1, 3, 4, 0]] {
            let pt = ints(&pt);
            let (_, v) = apply_di_at(&set, &phi, &pt).unwrap();
            assert_eq!(v, di.evaluate(&pt).unwrap(), "at {pt:?}");
        }
    }

    #[test]
    fn dd_multiplier_simple_cases() {
        // all c_β ≤ 1: C(|H_α|, a) ∏_{c_β=1} |H_β|
        let sizes = [3, 2, 4];
        let c: BTreeMap<usize, usize> = [(1, 1), (2, 1)].into();
        assert_eq!(dd_multiplier(4, &sizes, 0, &c), BigRational::from_integer(binomial(3, 2) * 2 * 4));
        let c: BTreeMap<usize, usize> = [(1, 0), (2, 1)].into();
        assert_eq!(dd_multiplier(2, &sizes, 0, &c), BigRational::from_integer(binomial(3, 1) * 4));
    }

    #[test]
    fn dd_low_orders_match_displayed_forms() {
        let phi = FunctionOracle::polynomial(&power_sum(3, 5) + &(&elementary_all(2, 5) * &elementary_all(2, 5)));
        let pat = CoincidencePattern::new(5, vec![vec![0, 2], vec![1, 3, 4]]).unwrap();
        let pt = ints(&[2, 5, 2, 5, 5]);
        let y = pat.values(&pt).unwrap();
        let sizes = pat.block_sizes();
        let d1: Vec<BigRational> = pat.blocks().iter().map(|b| diag_derivative(b, 1, &phi, &pt).unwrap()).collect();
        let expected1: BigRational = (0..2).map(|a| BigRational::from_integer(sizes[a].into()) * &d1[a]).sum();
        assert_eq!(apply_dd_at_point(1, &pat, &phi, &pt).unwrap(), expected1);

        let mut expected2 = BigRational::zero();
        for a in 0..2 {
            let b = 1 - a;
            let h = |k: usize| BigRational::from_integer(sizes[k].into());
            expected2 += integer(2) * h(a) * h(b) * &d1[a] / (&y[b] - &y[a]);
            expected2 += h(a) * (h(a) - integer(1)) * diag_derivative(&pat.blocks()[a], 2, &phi, &pt).unwrap();
        }
        assert_eq!(apply_dd_at_point(2, &pat, &phi, &pt).unwrap(), expected2);
    }

    #[test]
    fn dd_at_point_matches_exact_operator() {
        let phi_poly = &power_sum(5, 5) + &(&elementary_all(3, 5) * &elementary_all(1, 5));
        let phi = FunctionOracle::polynomial(phi_poly.clone());
        for d in 1..=5 {
            let dd = apply_dd(d, &phi_poly).unwrap();
            for pt in [[1, 1, 1, 4, 4], [0, 2, 0, 2, 0], [3, 3, 3, 3, 3], [1, 2, 3, 4, 5], [1, 1, 2, 3, 4]] {
                let pt = ints(&pt);
                let (pat, _) = CoincidencePattern::detect(&pt, 0.0);
                let exact = dd.evaluate(&pt).unwrap();
                assert_eq!(apply_dd_at_point(d, &pat, &phi, &pt).unwrap(), exact, "d={d} at {pat}");
                assert_eq!(eval_dd(d, &phi, &pt, 0.0).unwrap().value, exact);
            }
        }
    }

    #[test]
    fn generic_pattern_matches_generic_formula_in_floats() {
        let phi = FunctionOracle::polynomial(&power_sum(4, 4) + &elementary_all(2, 4));
        let pt = [0.3, -1.2, 2.5, 0.9];
        let pat = CoincidencePattern::generic(4);
        for d in 1..=4 {
            let a = apply_dd_at_point(d, &pat, &phi, &pt).unwrap();
            let b = generic_dd(d, &phi, &pt).unwrap();
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "d={d}: {a} vs {b}");
        }
    }

    #[test]
    fn total_diagonal_examples() {
        let cube = FunctionOracle::trace_poly(3, monomial_uni(3));
        assert_eq!(total_diagonal_dhat(3, &cube, &integer(1)).unwrap(), integer(3));
        let square = FunctionOracle::trace_poly(3, monomial_uni(2));
        assert_eq!(total_diagonal_dhat(1, &square, &integer(2)).unwrap(), integer(4));
        // D_2 e_2 = 2!·C(3,2)·... = 6 in three variables, so D̂_2 e_2 = 1
        let e2 = FunctionOracle::polynomial(elementary_all(2, 3));
        assert_eq!(total_diagonal_dhat(2, &e2, &integer(1)).unwrap(), integer(1));
        assert_eq!(apply_dhat(2, &elementary_all(2, 3)).unwrap(), SparsePoly::one(3));
    }

    #[test]
    fn total_diagonal_of_trace_function() {
        let f = monomial_uni(5);
        let tr = FunctionOracle::trace_poly(5, f.clone());
        for d in 1..=5 {
            let a = q(3, 2);
            assert_eq!(total_diagonal_dhat(d, &tr, &a).unwrap(), trace_diagonal_value_exact(d, &f, &a));
        }
        let exp = FunctionOracle::trace_fn(4, Arc::new(|_, x: f64| x.exp()));
        for d in 1..=4 {
            let v: f64 = total_diagonal_dhat(d, &exp, &0.5).unwrap();
            assert!((v - trace_diagonal_value(d, 0.5f64.exp())).abs() < 1e-12);
        }
    }

    #[test]
    fn charts() {
        let generic = local_coordinates(&CoincidencePattern::generic(3)).unwrap();
        assert!(generic.blocks.iter().all(|b| b.coordinates.len() == 1));
        assert_eq!(generic.blocks[0].coordinates[0], poly(1, &[(1, &[1])]));

        let pair = local_coordinates(&CoincidencePattern::total(2)).unwrap();
        let diff = poly(2, &[(1, &[1, 0]), (-1, &[0, 1])]);
        assert_eq!(pair.blocks[0].coordinates[1], (&diff * &diff).scale(&q(-1, 4)));

        let pat = CoincidencePattern::from_sizes(&[2, 1]).unwrap();
        let tr = FunctionOracle::trace_fn(3, Arc::new(|k, x: f64| if k == 0 { x.sin() } else { (x + k as f64 * std::f64::consts::FRAC_PI_2).sin() }));
        let pt = [0.4, 0.4, 1.3];
        let direct = chart_derivatives(&pat, &tr, &pt).unwrap();
        let via_f = trace_chart_derivatives(&pat, &|k, x| (x + k as f64 * std::f64::consts::FRAC_PI_2).sin(), &[0.4, 1.3]).unwrap();
        assert_eq!(direct.len(), 2);
        for (a, b) in direct.iter().flatten().zip(via_f.iter().flatten()) {
            assert!((a - b).abs() < 1e-12);
        }
        // {f'(y1), −f''(y1), f'(y2)}
        assert!((via_f[0][1] + (-(0.4f64).sin())).abs() < 1e-12);
    }

    #[test]
    fn naive_composition_differs() {
        let check = composition_check(1, 1, &elementary_all(2, 3), &integer(1)).unwrap();
        assert_eq!(check.naive, integer(0));
        assert_eq!(check.true_value, q(2, 3));
        assert!(check.differs());
    }

    #[test]
    fn derivative_with_denominator_identity() {
        let psi = UniPoly::new(ints(&[3, -1, 0, 2, 1, -4, 1]));
        for k in 0..=2 {
            for nu in 0..=4 {
                assert!(check_derivative_with_denominator(k, nu, &psi).unwrap(), "|K|={k} ν={nu}");
            }
        }
    }
}
