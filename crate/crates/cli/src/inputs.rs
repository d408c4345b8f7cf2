//! Parsing of test functions, points and index lists from the command line.

use std::fs;
use std::io::Read;

use anyhow::{anyhow, bail, Context, Result};
use num_rational::BigRational;

use symcoord::combinatorics::Partition;
use symcoord::exact_algebra::{parse_rational, SparsePoly, UniPoly};
use symcoord::oracle::FunctionOracle;
use symcoord::symmetric_basis::{Basis, SymExpr};

/// Reads a polynomial in the exact text format from a path, or stdin for `-`.
pub fn read_poly(path: &str) -> Result<SparsePoly> {
    let text = if path == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).context("reading stdin")?;
        s
    } else {
        fs::read_to_string(path).with_context(|| format!("reading {path}"))?
    };
    Ok(SparsePoly::from_text(&text)?)
}

/// `c0,c1,...` as the polynomial `Σ c_k x^k`.
pub fn parse_coeffs(s: &str) -> Result<UniPoly> {
    let coeffs = s
        .split(',')
        .map(|t| parse_rational(t).ok_or_else(|| anyhow!("bad coefficient {t:?}")))
        .collect::<Result<Vec<BigRational>>>()?;
    Ok(UniPoly::new(coeffs))
}

/// A test function in `nvars` variables: `trace:c0,c1,...`, a basis element
/// such as `e:[2,1]` or `p:[3]`, or a path to a polynomial file.
pub fn parse_phi(spec: &str, nvars: usize) -> Result<FunctionOracle> {
    if let Some(coeffs) = spec.strip_prefix("trace:") {
        return Ok(FunctionOracle::trace_poly(nvars, parse_coeffs(coeffs)?));
    }
    if let Some((letter, lambda)) = spec.split_once(':') {
        if let Ok(basis) = letter.parse::<Basis>() {
            let lambda: Partition = lambda.parse()?;
            let p = SymExpr::basis_element(nvars, basis, lambda)?.expand()?;
            return Ok(FunctionOracle::polynomial(p));
        }
    }
    let p = read_poly(spec)?;
    if p.nvars() != nvars {
        bail!("{spec} has {} variables, expected {nvars}", p.nvars());
    }
    Ok(FunctionOracle::polynomial(p))
}

/// A point given as comma-separated coordinates.
pub enum Point {
    Exact(Vec<BigRational>),
    Float(Vec<f64>),
}

impl Point {
    pub fn len(&self) -> usize {
        match self {
            Point::Exact(v) => v.len(),
            Point::Float(v) => v.len(),
        }
    }
}

/// Integers and `n/d` stay exact; anything with a decimal point or exponent
/// makes the whole point floating.
pub fn parse_point(s: &str) -> Result<Point> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if let Some(exact) = parts.iter().map(|t| parse_rational(t)).collect::<Option<Vec<_>>>() {
        return Ok(Point::Exact(exact));
    }
    let floats = parts
        .iter()
        .map(|t| t.parse::<f64>().map_err(|e| anyhow!("bad coordinate {t:?}: {e}")))
        .collect::<Result<Vec<_>>>()?;
    Ok(Point::Float(floats))
}

/// 1-based comma-separated indices, returned 0-based.
pub fn parse_indices(s: &str, nvars: usize) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for t in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let i: usize = t.parse().with_context(|| format!("bad index {t:?}"))?;
        if i == 0 || i > nvars {
            bail!("index {i} outside 1..={nvars}");
        }
        if out.contains(&(i - 1)) {
            bail!("index {i} repeated");
        }
        out.push(i - 1);
    }
    if out.is_empty() {
        bail!("empty index list");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_stay_exact_when_possible() {
        assert!(matches!(parse_point("1, 2/3, -4").unwrap(), Point::Exact(_)));
        assert!(matches!(parse_point("1.5,2").unwrap(), Point::Float(_)));
        assert!(parse_point("a,b").is_err());
    }

    #[test]
    fn indices_are_one_based() {
        assert_eq!(parse_indices("1,3", 3).unwrap(), vec![0, 2]);
        assert!(parse_indices("0", 3).is_err());
        assert!(parse_indices("2,2", 3).is_err());
    }

    #[test]
    fn phi_specs() {
        assert_eq!(parse_phi("trace:0,0,1", 3).unwrap().kind_name(), "trace");
        let e21 = parse_phi("e:[2,1]", 3).unwrap();
        assert_eq!(e21.as_polynomial().unwrap().degree(), Some(3));
        assert!(parse_phi("/nonexistent/file", 3).is_err());
    }
}
