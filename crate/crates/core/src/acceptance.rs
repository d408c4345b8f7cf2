//! The acceptance suite: one check per criterion, each reporting pass/fail
//! at its stated tolerance together with its runtime against the budget.

use std::fmt;
use std::time::{Duration, Instant};

use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotic_lab::{decay_table, derivative_constant, derivative_constant_symbolic, limit_to_power_sum, ConjectureStatus};
use crate::combinatorics::{enumerate_partitions, factorial, DerivativePattern, Partition};
use crate::diagonal_calculus::{
    diag_combo, diag_combo_via_bell, diag_combo_via_recursion, total_diagonal_dhat, trace_diagonal_value_exact,
};
use crate::divided_difference_ops::{apply_dd, apply_dd_etilde, apply_dhat, check_duality, dd_elementary_factor};
use crate::error::Result;
use crate::exact_algebra::{DecayOrder, RationalOfN, SparsePoly, UniPoly};
use crate::numeric_harness::{integer_point, jacobian_batch, limit_check, rationals, LimitOperator, NumericPolicy};
use crate::oracle::{monomial_uni, FunctionOracle};
use crate::symmetric_basis::{
    build_u, check_diagonal_vanishing, diagonal_restriction, elementary_all, Basis, SymExpr,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Evidence that is reported but never fails the suite.
    Report,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Report => "REPORT",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub title: &'static str,
    pub tolerance: &'static str,
    pub status: Status,
    pub detail: String,
    pub elapsed_secs: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget_secs: Option<f64>,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let budget = self.budget_secs.map(|b| format!(" (budget {b:.0}s)")).unwrap_or_default();
        write!(
            f,
            "criterion {:>2} {:<6} {} | tol {} | {:.2}s{} | {}",
            self.id, self.status, self.title, self.tolerance, self.elapsed_secs, budget, self.detail
        )
    }
}

/// What a check found: whether it holds, and a one-line summary.
struct Outcome {
    ok: bool,
    detail: String,
}

impl Outcome {
    fn new(ok: bool, detail: impl Into<String>) -> Self {
        Self { ok, detail: detail.into() }
    }
}

pub struct Criterion {
    pub id: usize,
    pub title: &'static str,
    pub tolerance: &'static str,
    budget: Option<Duration>,
    /// Never fails the suite; see [`Status::Report`].
    report_only: bool,
    check: fn() -> Result<Outcome>,
}

impl Criterion {
    pub fn run(&self) -> CriterionResult {
        let start = Instant::now();
        let outcome = (self.check)();
        let elapsed = start.elapsed();
        let in_budget = self.budget.is_none_or(|b| elapsed <= b);
        let (ok, mut detail) = match outcome {
            Ok(o) => (o.ok, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !in_budget {
            detail = format!("over budget; {detail}");
        }
        let status = match (self.report_only, ok && in_budget) {
            (true, _) => Status::Report,
            (false, true) => Status::Pass,
            (false, false) => Status::Fail,
        };
        CriterionResult {
            id: self.id,
            title: self.title,
            tolerance: self.tolerance,
            status,
            detail,
            elapsed_secs: elapsed.as_secs_f64(),
            budget_secs: self.budget.map(|b| b.as_secs_f64()),
        }
    }
}

pub fn criteria() -> Vec<Criterion> {
    let secs = Duration::from_secs;
    vec![
        Criterion {
            id: 1,
            title: "duality D_d u_r = delta_{d,r}, N <= 6",
            tolerance: "exact",
            budget: Some(secs(30)),
            report_only: false,
            check: duality,
        },
        Criterion {
            id: 2,
            title: "D_d on e_h and et_lambda, lambda |- r <= 5, N <= 6",
            tolerance: "exact",
            budget: Some(secs(60)),
            report_only: false,
            check: operator_on_elementary,
        },
        Criterion {
            id: 3,
            title: "derivatives of order d != r kill u_r on the diagonal, N <= 5",
            tolerance: "exact",
            budget: Some(secs(60)),
            report_only: false,
            check: diagonal_vanishing,
        },
        Criterion {
            id: 4,
            title: "three constructions of the diagonal combination, g <= 6",
            tolerance: "exact",
            budget: None,
            report_only: false,
            check: combo_constructions,
        },
        Criterion {
            id: 5,
            title: "coincident-point formulas are limits of generic ones, 12 cases",
            tolerance: "rel 1e-7",
            budget: Some(secs(120)),
            report_only: false,
            check: limit_consistency,
        },
        Criterion {
            id: 6,
            title: "total-diagonal value of trace functions, deg f <= 6, d <= 4, N <= 6",
            tolerance: "exact",
            budget: None,
            report_only: false,
            check: trace_total_diagonal,
        },
        Criterion {
            id: 7,
            title: "chain rule through u coordinates, 20 points, N in {2,3,4}",
            tolerance: "rel 1e-9",
            budget: None,
            report_only: false,
            check: chain_rule,
        },
        Criterion {
            id: 8,
            title: "pure derivative constants and mixed decay >= r+1, r <= 6",
            tolerance: "exact",
            budget: None,
            report_only: false,
            check: pure_normalization,
        },
        Criterion {
            id: 9,
            title: "decay order >= r + l(sigma) - 1 for sigma |- r <= 6 (conjecture evidence)",
            tolerance: "exact",
            budget: Some(secs(300)),
            report_only: true,
            check: conjecture_evidence,
        },
        Criterion {
            id: 10,
            title: "u-hat_r tends to (-1)^(r-1) p_r / r, r <= 4, N in 2..6",
            tolerance: "exact",
            budget: None,
            report_only: false,
            check: power_sum_limit,
        },
        Criterion {
            id: 11,
            title: "derivative constants equal symbolic derivatives of u_r, r <= 5",
            tolerance: "exact",
            budget: None,
            report_only: false,
            check: two_pipelines,
        },
    ]
}

/// Runs every criterion in order.
pub fn run_all() -> Vec<CriterionResult> {
    criteria().iter().map(Criterion::run).collect()
}

/// No criterion failed; reports never count as failures.
pub fn all_passed(results: &[CriterionResult]) -> bool {
    results.iter().all(|r| r.status != Status::Fail)
}

fn duality() -> Result<Outcome> {
    let reports = (1..=6).map(check_duality).collect::<Result<Vec<_>>>()?;
    let bad: Vec<String> =
        reports.iter().flat_map(|r| r.failures.iter().map(move |f| format!("N={} d={} r={}", r.nvars, f.d, f.r))).collect();
    let pairs: usize = (1..=6).map(|n| n * n).sum();
    Ok(Outcome::new(bad.is_empty(), if bad.is_empty() { format!("{pairs} pairs exact") } else { bad.join(", ") }))
}

fn operator_on_elementary() -> Result<Outcome> {
    let mut cases: Vec<(usize, usize, Partition)> = Vec::new();
    for n in 1..=6 {
        for d in 1..=n {
            for r in 1..=5 {
                for lambda in enumerate_partitions(r).into_iter().filter(|l| l.max_part() <= n) {
                    cases.push((n, d, lambda));
                }
            }
        }
    }
    let etilde_bad: Vec<String> = cases
        .par_iter()
        .map(|(n, d, lambda)| {
            let expr = SymExpr::basis_element(*n, Basis::ETilde, lambda.clone())?;
            let direct = apply_dd(*d, &expr.expand()?)?;
            let via_rule = apply_dd_etilde(*d, &expr)?.expand()?;
            Ok((direct != via_rule).then(|| format!("N={n} d={d} et{lambda}")))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let mut elementary_bad = Vec::new();
    let mut elementary_cases = 0;
    for n in 1..=6 {
        for d in 1..=n {
            for h in 0..=n {
                elementary_cases += 1;
                let image = apply_dd(d, &elementary_all(h, n))?;
                let expected = if h >= d {
                    elementary_all(h - d, n).scale(&dd_elementary_factor(d, h, n))
                } else {
                    SparsePoly::zero(n)
                };
                if image != expected {
                    elementary_bad.push(format!("N={n} d={d} e_{h}"));
                }
            }
        }
    }
    let bad: Vec<String> = elementary_bad.into_iter().chain(etilde_bad).collect();
    let detail = if bad.is_empty() {
        format!("{elementary_cases} e_h cases, {} et_lambda cases exact", cases.len())
    } else {
        bad.join(", ")
    };
    Ok(Outcome::new(bad.is_empty(), detail))
}

fn diagonal_vanishing() -> Result<Outcome> {
    let mut cases: Vec<(usize, usize, Partition)> = Vec::new();
    for n in 1..=5 {
        for r in 1..=n {
            for d in (1..=n.max(r + 1)).filter(|&d| d != r) {
                for sigma in enumerate_partitions(d).into_iter().filter(|s| s.len() <= n) {
                    cases.push((n, r, sigma));
                }
            }
        }
    }
    let mut bad: Vec<String> = cases
        .par_iter()
        .map(|(n, r, sigma)| {
            let ok = check_diagonal_vanishing(*r, &DerivativePattern::new(sigma.clone()), *n)?;
            Ok((!ok).then(|| format!("N={n} r={r} sigma={sigma}")))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let t = SparsePoly::var(1, 0)?;
    for n in 1..=5 {
        for r in 1..=n {
            let restricted = diagonal_restriction(build_u(r, n)?.poly())?;
            let expected = if r == 1 { t.clone() } else { SparsePoly::zero(1) };
            if restricted != expected {
                bad.push(format!("u_{r}(a,...,a) in N={n}"));
            }
        }
    }
    let detail = if bad.is_empty() { format!("{} patterns vanish; u_r(a,...,a) correct", cases.len()) } else { bad.join(", ") };
    Ok(Outcome::new(bad.is_empty(), detail))
}

fn combo_constructions() -> Result<Outcome> {
    let mut bad = Vec::new();
    for g in 1..=6 {
        let direct = diag_combo(g);
        if diag_combo_via_bell(g) != direct {
            bad.push(format!("bell g={g}"));
        }
        if diag_combo_via_recursion(g) != direct {
            bad.push(format!("recursion g={g}"));
        }
    }
    let q = |n: i64, d: i64| BigRational::new(n.into(), d.into());
    let p = |s: &str| s.parse::<Partition>();
    let two = diag_combo(2);
    let three = diag_combo(3);
    let hand = two.coefficient(&p("[1,1]")?) == q(1, 1)
        && two.coefficient(&p("[2]")?) == q(-1, 1)
        && three.coefficient(&p("[1,1,1]")?) == q(1, 1)
        && three.coefficient(&p("[2,1]")?) == q(-3, 2)
        && three.coefficient(&p("[3]")?) == q(1, 2);
    if !hand {
        bad.push("hand values for g = 2, 3".into());
    }
    let detail = if bad.is_empty() { "direct, Bell and recursion agree; hand values match".to_string() } else { bad.join(", ") };
    Ok(Outcome::new(bad.is_empty(), detail))
}

fn e_lambda(parts: &[usize], n: usize) -> SparsePoly {
    parts.iter().fold(SparsePoly::one(n), |acc, &h| &acc * &elementary_all(h, n))
}

/// The configured limit cases: operator, oracle, coincident target.
pub fn limit_cases() -> Vec<(LimitOperator, FunctionOracle, Vec<BigRational>)> {
    use LimitOperator::{Order, Subset};
    let e = |parts: &[usize], n: usize| FunctionOracle::polynomial(e_lambda(parts, n));
    let tr = |k: usize, n: usize| FunctionOracle::trace_poly(n, monomial_uni(k));
    vec![
        (Subset(vec![0, 1]), tr(2, 2), integer_point(&[3, 3])),
        (Order(2), e(&[1, 1], 2), integer_point(&[3, 3])),
        (Subset(vec![0, 1, 2]), e(&[3], 3), integer_point(&[2, 2, 5])),
        (Subset(vec![0, 1, 2]), tr(4, 3), integer_point(&[1, 1, -2])),
        (Order(2), e(&[2, 1], 3), rationals(&[(1, 2), (1, 2), (3, 1)])),
        (Order(3), tr(5, 3), integer_point(&[2, 2, 2])),
        (Subset(vec![0, 1, 2, 3]), e(&[2, 2], 4), integer_point(&[1, 1, 3, 3])),
        (Subset(vec![0, 1, 2]), e(&[3, 1], 4), integer_point(&[2, 2, 2, 5])),
        (Order(2), tr(6, 4), integer_point(&[1, 1, 1, 4])),
        (Order(3), e(&[3, 2], 4), integer_point(&[-1, -1, 2, 2])),
        (Order(4), tr(5, 4), rationals(&[(3, 2), (3, 2), (3, 2), (3, 2)])),
        (Order(1), e(&[4, 1], 4), integer_point(&[1, 2, 2, 2])),
    ]
}

fn limit_consistency() -> Result<Outcome> {
    let policy = NumericPolicy::default();
    let cases = limit_cases();
    let reports = cases
        .par_iter()
        .map(|(op, phi, target)| limit_check(op, phi, target, &policy))
        .collect::<Result<Vec<_>>>()?;
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    for r in &reports {
        let rel = if r.value_formula != 0.0 { r.abs_err / r.value_formula.abs() } else { r.abs_err };
        worst = worst.max(rel);
        let order_ok = r.observed_order.is_none_or(|p| p >= 1.0 - 1e-3);
        if !(rel < 1e-7 && order_ok) {
            bad.push(format!("{} rel {rel:.2e}", r.case));
        }
    }
    let detail = if bad.is_empty() {
        format!("{} cases, worst rel err {worst:.2e}", reports.len())
    } else {
        bad.join("; ")
    };
    Ok(Outcome::new(bad.is_empty(), detail))
}

fn trace_total_diagonal() -> Result<Outcome> {
    let q = |n: i64, d: i64| BigRational::new(n.into(), d.into());
    let mut fs: Vec<UniPoly> = (0..=6).map(monomial_uni).collect();
    fs.push(UniPoly::new(vec![q(3, 1), q(-1, 1), q(1, 2), q(0, 1), q(2, 1), q(-5, 3), q(1, 1)]));
    let points = [q(-1, 1), q(0, 1), q(1, 2), q(2, 1)];
    let mut cases = Vec::new();
    for (fi, f) in fs.iter().enumerate() {
        for n in 1..=6 {
            for d in 1..=4.min(n) {
                cases.push((fi, f.clone(), n, d));
            }
        }
    }
    let bad: Vec<String> = cases
        .par_iter()
        .map(|(fi, f, n, d)| {
            let oracle = FunctionOracle::trace_poly(*n, f.clone());
            let poly = oracle.to_polynomial().expect("trace of a polynomial");
            let image = apply_dhat(*d, &poly)?;
            let mut failures = Vec::new();
            for a in &points {
                let expected = trace_diagonal_value_exact(*d, f, a);
                let diagonal = vec![a.clone(); *n];
                let via_operator = image.evaluate(&diagonal)?;
                let via_combo = total_diagonal_dhat(*d, &oracle, a)?;
                if via_operator != expected || via_combo != expected {
                    failures.push(format!("f#{fi} N={n} d={d} a={a}"));
                }
            }
            Ok(failures)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let detail = if bad.is_empty() { format!("{} (f, N, d) cases at 4 points exact", cases.len()) } else { bad.join(", ") };
    Ok(Outcome::new(bad.is_empty(), detail))
}

fn chain_rule() -> Result<Outcome> {
    let policy = NumericPolicy::default();
    let mut worst = 0.0f64;
    let mut checked = 0;
    let mut bad = Vec::new();
    for n in 2..=4 {
        for r in 1..=4 {
            for lambda in enumerate_partitions(r).into_iter().filter(|l| l.max_part() <= n) {
                let phi = FunctionOracle::polynomial(e_lambda(lambda.parts(), n));
                let seed = 1000 * n as u64 + r as u64;
                for report in jacobian_batch(&phi, 20, seed, &policy)? {
                    checked += 1;
                    worst = worst.max(report.max_rel_err);
                    if report.max_rel_err >= 1e-9 || report.exact_agree != Some(true) {
                        bad.push(format!("N={n} e{lambda} at {:?}", report.point));
                    }
                }
            }
        }
    }
    let detail = if bad.is_empty() {
        format!("{checked} points, exact shadows agree, worst rel err {worst:.2e}")
    } else {
        bad.join("; ")
    };
    Ok(Outcome::new(bad.is_empty(), detail))
}

fn pure_normalization() -> Result<Outcome> {
    let mut bad = Vec::new();
    for r in 1..=6 {
        let c = derivative_constant(&Partition::single(r))?;
        let mut den = vec![BigRational::zero(); r + 1];
        den[r] = BigRational::one();
        let sign: i64 = if r % 2 == 1 { 1 } else { -1 };
        let expected = RationalOfN::new(
            UniPoly::constant(BigRational::from_integer(factorial(r - 1) * sign)),
            UniPoly::new(den),
        )?;
        if c.value != expected {
            bad.push(format!("r={r}: {}", c.value.pretty()));
        }
    }
    let rows = decay_table(6)?;
    for row in rows.iter().filter(|row| row.sigma.len() > 1) {
        if row.decay_order < DecayOrder::Finite(row.r as i64 + 1) {
            bad.push(format!("sigma={} decays like N^-{}", row.sigma, row.decay_order));
        }
    }
    let detail = if bad.is_empty() { "pure constants exact; every mixed order >= r+1".to_string() } else { bad.join(", ") };
    Ok(Outcome::new(bad.is_empty(), detail))
}

fn conjecture_evidence() -> Result<Outcome> {
    let rows = decay_table(6)?;
    let violations: Vec<String> = rows
        .iter()
        .filter(|r| r.status == ConjectureStatus::Violates)
        .map(|r| format!("VIOLATES sigma={} order {} < {}", r.sigma, r.decay_order, r.conjectured_order))
        .collect();
    let meets = rows.iter().filter(|r| r.status == ConjectureStatus::Meets).count();
    let detail = if violations.is_empty() {
        format!("{} patterns, none below the conjectured order ({meets} with equality)", rows.len())
    } else {
        violations.join(", ")
    };
    Ok(Outcome::new(violations.is_empty(), detail))
}

fn power_sum_limit() -> Result<Outcome> {
    let samples: Vec<usize> = (2..=6).collect();
    let mut bad = Vec::new();
    let mut skipped = Vec::new();
    for r in 1..=4 {
        let report = limit_to_power_sum(r, &samples)?;
        if !report.pass() {
            bad.push(format!("r={r}"));
        }
        if !report.skipped.is_empty() {
            skipped.push(format!("r={r}: N in {:?}", report.skipped));
        }
    }
    let detail = if bad.is_empty() {
        let note = if skipped.is_empty() { String::new() } else { format!("; no u_r for {}", skipped.join(", ")) };
        format!("decay >= 1 everywhere, equal only for r=1{note}")
    } else {
        bad.join(", ")
    };
    Ok(Outcome::new(bad.is_empty(), detail))
}

fn two_pipelines() -> Result<Outcome> {
    let mut cases = Vec::new();
    for r in 1..=5 {
        for sigma in enumerate_partitions(r) {
            for n in r..=6 {
                cases.push((sigma.clone(), n));
            }
        }
    }
    let bad: Vec<String> = cases
        .par_iter()
        .map(|(sigma, n)| {
            let closed = derivative_constant(sigma)?.value.evaluate_int(*n as i64)?;
            let symbolic = derivative_constant_symbolic(sigma, *n)?;
            Ok((closed != symbolic).then(|| format!("sigma={sigma} N={n}")))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let detail = if bad.is_empty() { format!("{} (sigma, N) pairs agree", cases.len()) } else { bad.join(", ") };
    Ok(Outcome::new(bad.is_empty(), detail))
}
