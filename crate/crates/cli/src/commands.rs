//! One function per subcommand, each returning a [`CommandResult`].

use anyhow::{bail, ensure, Context, Result};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde_json::{json, Value};

use symcoord::acceptance;
use symcoord::asymptotic_lab::{decay_table, derivative_constant, ConjectureStatus, DecayRow};
use symcoord::combinatorics::Partition;
use symcoord::diagonal_calculus::{
    combo_distance, diag_combo, diag_combo_via_bell, diag_combo_via_recursion, eval_dd, FormulaBranch,
};
use symcoord::divided_difference_ops::{apply_dd, apply_di, check_duality, Image};
use symcoord::exact_algebra::{format_rational, RationalOfN, UniPoly};
use symcoord::numeric_harness::{jacobian_batch, limit_check, LimitOperator, NumericPolicy};
use symcoord::symmetric_basis::{build_u_normalized, Basis, NormalizationTag};

use crate::inputs::{parse_indices, parse_phi, parse_point, read_poly, Point};
use crate::report::{CommandResult, Payload, Status};

/// Basis choice for `expand-u`; `x` is the expanded polynomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum OutBasis {
    X,
    #[value(alias = "etilde")]
    Et,
    E,
    M,
    P,
    U,
}

pub fn expand_u(nvars: usize, r: usize, basis: OutBasis, tag: NormalizationTag) -> Result<CommandResult> {
    let (etilde, poly) = build_u_normalized(r, nvars, tag)?;
    let body = match basis {
        OutBasis::X => poly.to_text(),
        OutBasis::Et => etilde.to_string(),
        other => {
            let target = match other {
                OutBasis::E => Basis::Elementary,
                OutBasis::M => Basis::Monomial,
                OutBasis::P => Basis::Power,
                _ => Basis::U,
            };
            etilde.convert(target)?.to_string()
        }
    };
    Ok(CommandResult::new(Status::Report, Payload::Text(body)))
}

pub fn check_duality_cmd(nvars: usize) -> Result<CommandResult> {
    let report = check_duality(nvars)?;
    // Integral entries print as JSON numbers.
    let matrix: Vec<Vec<Value>> = report
        .matrix
        .iter()
        .map(|row| row.iter().map(|c| c.parse::<i64>().map_or_else(|_| json!(c), |n| json!(n))).collect())
        .collect();
    let payload = json!({
        "nvars": report.nvars,
        "matrix": matrix,
        "failures": report.failures,
        "pass": report.passed,
    });
    Ok(CommandResult::pass_if(report.passed, Payload::Json(payload)))
}

/// The dual of the `d`-th coordinate under `tag` is `D_d / factor`.
pub fn apply_d(
    poly_path: &str,
    expected_nvars: Option<usize>,
    d: Option<usize>,
    subset: Option<&str>,
    tag: NormalizationTag,
) -> Result<CommandResult> {
    let p = read_poly(poly_path)?;
    let n = p.nvars();
    if let Some(m) = expected_nvars {
        ensure!(m == n, "--N {m} does not match the polynomial's {n} variables");
    }
    let body = match (d, subset) {
        (Some(_), Some(_)) => bail!("--d and --subset are exclusive"),
        (None, None) => bail!("one of --d or --subset is required"),
        (Some(d), None) => {
            let scale = BigRational::one() / tag.factor(d, n);
            apply_dd(d, &p)?.scale(&scale).to_text()
        }
        (None, Some(s)) => match apply_di(&parse_indices(s, n)?, &p, false)? {
            Image::Polynomial(q) => q.to_text(),
            Image::Rational(f) => match f.as_polynomial() {
                Some(q) => q.to_text(),
                None => format!("numerator\n{}denominator\n{}", f.numerator().to_text(), f.denominator().to_text()),
            },
        },
    };
    Ok(CommandResult::new(Status::Report, Payload::Text(body)))
}

pub fn diag_combo_cmd(g: usize) -> Result<CommandResult> {
    ensure!(g >= 1, "--g must be at least 1");
    let direct = diag_combo(g);
    let agree = combo_distance(&direct, &diag_combo_via_bell(g)) == BigRational::zero()
        && combo_distance(&direct, &diag_combo_via_recursion(g)) == BigRational::zero();
    let mut payload = serde_json::to_value(&direct)?;
    payload["constructions_agree"] = json!(agree);
    Ok(CommandResult::pass_if(agree, Payload::Json(payload)))
}

pub fn eval_d(
    nvars: usize,
    d: usize,
    point: &str,
    phi: Option<&str>,
    tolerance: f64,
    tag: NormalizationTag,
) -> Result<CommandResult> {
    let phi = phi.map_or_else(|| parse_phi(&format!("e:[{nvars}]"), nvars), |s| parse_phi(s, nvars))?;
    let point = parse_point(point)?;
    ensure!(point.len() == nvars, "point has {} coordinates, expected {nvars}", point.len());
    ensure!((1..=nvars).contains(&d), "--d must lie in 1..={nvars}");
    let inv = BigRational::one() / tag.factor(d, nvars);

    let (pattern, branch, value, exact) = match point {
        Point::Exact(x) if phi.is_exact() => {
            let ev = eval_dd(d, &phi, &x, 0.0)?;
            (ev.pattern, ev.branch, json!(format_rational(&(ev.value * &inv))), true)
        }
        Point::Exact(x) => {
            let xf: Vec<f64> = x.iter().map(|q| q.to_f64().unwrap_or(f64::NAN)).collect();
            let ev = eval_dd(d, &phi, &xf, tolerance)?;
            (ev.pattern, ev.branch, json!(ev.value * inv.to_f64().unwrap_or(f64::NAN)), false)
        }
        Point::Float(xf) => {
            let ev = eval_dd(d, &phi, &xf, tolerance)?;
            (ev.pattern, ev.branch, json!(ev.value * inv.to_f64().unwrap_or(f64::NAN)), false)
        }
    };
    let payload = json!({
        "d": d,
        "nvars": nvars,
        "oracle": phi.kind_name(),
        "pattern": pattern.to_string(),
        "blocks": pattern,
        "branch": branch,
        "exact": exact,
        "value": value,
    });
    let mut result = CommandResult::new(Status::Report, Payload::Json(payload));
    if branch == FormulaBranch::TotalDiagonal {
        result = result.with_diagnostic("all coordinates coincide; value is d!·C(N,d) times the diagonal D̂_d");
    }
    Ok(result)
}

/// Reads `--trace-poly` and `--poly` into a single oracle specification.
pub fn phi_spec(phi: Option<String>, trace_poly: Option<String>, poly: Option<String>) -> Result<Option<String>> {
    let given: Vec<String> = [phi, trace_poly.map(|c| format!("trace:{c}")), poly].into_iter().flatten().collect();
    match given.len() {
        0 => Ok(None),
        1 => Ok(given.into_iter().next()),
        _ => bail!("give at most one of --phi, --trace-poly, --poly"),
    }
}

pub fn jacobian_check_cmd(nvars: usize, seed: u64, count: usize, phi: Option<&str>) -> Result<CommandResult> {
    ensure!(nvars >= 1, "--N must be at least 1");
    ensure!(count >= 1, "--count must be at least 1");
    let phi = match phi {
        Some(s) => parse_phi(s, nvars)?,
        None => parse_phi(&format!("e:[{}]", nvars.min(2)), nvars)?,
    };
    let policy = NumericPolicy::default();
    let reports = jacobian_batch(&phi, count, seed, &policy)?;
    let pass = reports.iter().all(|r| r.pass);
    let max_rel_err = reports.iter().map(|r| r.max_rel_err).fold(0.0, f64::max);
    let payload = json!({
        "nvars": nvars,
        "seed": seed,
        "oracle": phi.kind_name(),
        "max_rel_err": max_rel_err,
        "pass": pass,
        "points": reports,
    });
    Ok(CommandResult::pass_if(pass, Payload::Json(payload))
        .with_diagnostic("∂φ/∂u_d = D_d φ is invariant under rescaling u_d, so normalization does not enter"))
}

/// Default target: variable `i` sits at `i+1`, then `J` collapses onto its
/// smallest member's value.
fn collapse_target(nvars: usize, j: &[usize]) -> Vec<BigRational> {
    let mut x: Vec<BigRational> = (1..=nvars as i64).map(|v| BigRational::from_integer(v.into())).collect();
    let y = x[*j.iter().min().expect("nonempty")].clone();
    for &i in j {
        x[i] = y.clone();
    }
    x
}

pub fn limit_check_cmd(
    nvars: usize,
    j: &str,
    i: Option<&str>,
    d: Option<usize>,
    point: Option<&str>,
    phi: Option<&str>,
) -> Result<CommandResult> {
    let j = parse_indices(j, nvars)?;
    let op = match (i, d) {
        (Some(i), None) => LimitOperator::Subset(parse_indices(i, nvars)?),
        (None, Some(d)) => {
            ensure!((1..=nvars).contains(&d), "--d must lie in 1..={nvars}");
            LimitOperator::Order(d)
        }
        _ => bail!("give exactly one of --I or --d"),
    };
    let target = match point {
        Some(p) => match parse_point(p)? {
            Point::Exact(x) => {
                ensure!(x.len() == nvars, "point has {} coordinates, expected {nvars}", x.len());
                let mut x = x;
                let y = x[*j.iter().min().expect("nonempty")].clone();
                for &k in &j {
                    x[k] = y.clone();
                }
                x
            }
            Point::Float(_) => bail!("limit targets must be rational"),
        },
        None => collapse_target(nvars, &j),
    };
    let phi = match phi {
        Some(s) => parse_phi(s, nvars)?,
        None => parse_phi(&format!("e:[{nvars}]"), nvars)?,
    };
    let report = limit_check(&op, &phi, &target, &NumericPolicy::default())?;
    let target_text: Vec<String> = target.iter().map(format_rational).collect();
    let mut payload = serde_json::to_value(&report)?;
    payload["target"] = json!(target_text);
    Ok(CommandResult::pass_if(report.pass, Payload::Json(payload)))
}

pub fn decay_table_cmd(rmax: usize) -> Result<CommandResult> {
    ensure!(rmax >= 1, "--rmax must be at least 1");
    let rows = decay_table(rmax)?;
    let mut table = vec![DecayRow::tsv_header().split('\t').map(String::from).collect::<Vec<_>>()];
    table.extend(rows.iter().map(|r| r.to_tsv().split('\t').map(String::from).collect()));
    let violations = rows.iter().filter(|r| r.status == ConjectureStatus::Violates).count();
    let mut result = CommandResult::new(Status::Report, Payload::Tsv(table));
    if violations > 0 {
        result = result.with_diagnostic(format!("{violations} pattern(s) decay slower than conjectured"));
    }
    Ok(result)
}

/// Scale of the `tag` coordinate relative to `u_r`, as a function of `N`.
fn factor_of_n(tag: NormalizationTag, r: usize) -> RationalOfN {
    let sign = if r % 2 == 1 { 1 } else { -1 };
    let hat = RationalOfN::from_poly(UniPoly::falling_factorial(r));
    let int = |n: i64| BigRational::from_integer(n.into());
    match tag {
        NormalizationTag::Paper => RationalOfN::constant(BigRational::one()),
        NormalizationTag::Hat => hat,
        NormalizationTag::SignedPower => hat.scale(&int(sign * r as i64)),
        NormalizationTag::Taylor => {
            let fact: i64 = (1..r as i64).product();
            hat.scale(&(int(sign) / int(fact)))
        }
    }
}

pub fn derivative_constant_cmd(r: usize, sigma: &str, tag: NormalizationTag) -> Result<CommandResult> {
    let sigma: Partition = sigma.parse().with_context(|| format!("bad partition {sigma:?}"))?;
    ensure!(sigma.weight() == r, "sigma {sigma} has weight {}, expected r = {r}", sigma.weight());
    let c = derivative_constant(&sigma)?;
    let value = c.value.mul(&factor_of_n(tag, r));
    Ok(CommandResult::new(Status::Report, Payload::Text(format!("{value}\n")))
        .with_diagnostic(format!("decay order {}", value.decay_order())))
}

pub fn selftest() -> Result<CommandResult> {
    let results = acceptance::run_all();
    let body: String = results.iter().map(|r| format!("{r}\n")).collect();
    let failed = results.iter().filter(|r| r.status == acceptance::Status::Fail).count();
    let mut result = CommandResult::pass_if(acceptance::all_passed(&results), Payload::Text(body));
    if failed > 0 {
        result = result.with_diagnostic(format!("{failed} criterion/criteria failed"));
    }
    Ok(result)
}
