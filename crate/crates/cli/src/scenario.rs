//! Scenario files.
//!
//! One `key = value` entry per line; `#` starts a comment. Recognized keys:
//!
//! ```text
//! name    = flagship
//! vars    = x, y                       variable names (or `dim = 2` for x1, x2)
//! pi      = dx^dy                      Poisson bivector
//! star    = moyal | kontsevich2 | explicit
//! order   = 2                          truncation order N
//! C1      = [ (1/2, (1,0), (0,1)), (-1/2, (0,1), (1,0)) ]    explicit terms
//! P0      = [[x, x], [1-x, 1-x]]       rank-one projection
//! model { b = 1, lattice = Z, pi_star = [[1]], autos = [[-1]] }
//! orbit t0 = (1/2)u                    orbit query against the model
//! seed    = 7
//! checks  = assoc, lift, curvature_theorem
//! ```
//!
//! A `model { ... }` block may span several lines. An explicit operator term
//! `(c, a, b)` stands for `c ∂^a ⊗ ∂^b`, with `c` a polynomial literal.

use std::collections::BTreeMap;

use deformq::classes::{CohomModel, QMat, TwistedClass, ZMat};
use deformq::coeffring::{default_names, PolyFun};
use deformq::diffop::MultiDiffOp;
use deformq::literal::{parse_poly_at, Pos};
use deformq::matdef::{is_idempotent, Mat};
use deformq::poisson::{is_poisson, parse_multivector_at, Multivector};
use deformq::star::{kontsevich2, moyal, StarProduct};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{line}:{column}: {message}")]
    At {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Missing(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

fn at(pos: Pos, message: impl Into<String>) -> ScenarioError {
    ScenarioError::At {
        line: pos.line,
        column: pos.column,
        message: message.into(),
    }
}

fn core_at(pos: Pos, e: deformq::Error) -> ScenarioError {
    match e {
        deformq::Error::Parse { line, column, message } => ScenarioError::At { line, column, message },
        other => at(pos, other.to_string()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Check {
    Assoc,
    Bimodule,
    Classes,
    Connection,
    CurvatureTheorem,
    FibredBracket,
    Lift,
    Orbit,
    PoissonGauge,
    PoissonIdentities,
    Tau,
}

impl Check {
    pub const ALL: [Check; 11] = [
        Check::Assoc,
        Check::Bimodule,
        Check::Classes,
        Check::Connection,
        Check::CurvatureTheorem,
        Check::FibredBracket,
        Check::Lift,
        Check::Orbit,
        Check::PoissonGauge,
        Check::PoissonIdentities,
        Check::Tau,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Assoc => "assoc",
            Check::Bimodule => "bimodule",
            Check::Classes => "classes",
            Check::Connection => "connection",
            Check::CurvatureTheorem => "curvature_theorem",
            Check::FibredBracket => "fibred_bracket",
            Check::Lift => "lift",
            Check::Orbit => "orbit",
            Check::PoissonGauge => "poisson_gauge",
            Check::PoissonIdentities => "poisson_identities",
            Check::Tau => "tau",
        }
    }

    pub fn from_name(name: &str) -> Option<Check> {
        Check::ALL.into_iter().find(|c| c.name() == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StarKind {
    Moyal,
    Kontsevich2,
    Explicit,
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub names: Vec<String>,
    pub pi: Multivector,
    pub star_kind: StarKind,
    pub star: StarProduct,
    pub p0: Option<Mat>,
    pub model: Option<CohomModel>,
    pub orbit_queries: Vec<TwistedClass>,
    pub checks: Vec<Check>,
    pub seed: Option<u64>,
}

impl Scenario {
    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn order(&self) -> usize {
        self.star.order()
    }
}

/// A value with the position of its first character.
#[derive(Clone, Debug)]
struct Entry {
    key_pos: Pos,
    value: String,
    value_pos: Pos,
}

#[derive(Default)]
struct Raw {
    entries: BTreeMap<String, Entry>,
    ops: BTreeMap<usize, Entry>,
    model: Option<Entry>,
    orbits: Vec<Entry>,
}

const KEYS: [&str; 8] = ["name", "dim", "vars", "pi", "star", "order", "P0", "checks"];

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("")
}

fn leading_ws(s: &str) -> usize {
    s.chars().take_while(|c| c.is_whitespace()).count()
}

fn parse_raw(text: &str) -> Result<Raw, ScenarioError> {
    let mut raw = Raw::default();
    let lines: Vec<&str> = text.lines().collect();
    let mut i = 0;
    while i < lines.len() {
        let line_no = i + 1;
        let line = strip_comment(lines[i]);
        i += 1;
        if line.trim().is_empty() {
            continue;
        }
        let indent = leading_ws(line);
        let key_pos = Pos { line: line_no, column: indent + 1 };
        let body = &line[line.char_indices().nth(indent).map_or(line.len(), |(b, _)| b)..];

        if let Some(rest) = body.strip_prefix("model") {
            if rest.trim_start().starts_with('{') {
                let open = body.find('{').unwrap();
                let mut block = body[open..].to_string();
                let value_pos = Pos { line: line_no, column: indent + body[..open].chars().count() + 1 };
                while !block.contains('}') {
                    if i == lines.len() {
                        return Err(at(key_pos, "unterminated model block"));
                    }
                    block.push(' ');
                    block.push_str(strip_comment(lines[i]));
                    i += 1;
                }
                let close = block.find('}').unwrap();
                if !block[close + 1..].trim().is_empty() {
                    return Err(at(key_pos, "unexpected text after model block"));
                }
                if raw.model.is_some() {
                    return Err(at(key_pos, "duplicate model block"));
                }
                raw.model = Some(Entry { key_pos, value: block[..=close].to_string(), value_pos });
                continue;
            }
        }

        let Some(eq) = body.find('=') else {
            return Err(at(key_pos, "expected `key = value`"));
        };
        let key = body[..eq].trim();
        let after = &body[eq + 1..];
        let value_col = indent + body[..eq + 1].chars().count() + leading_ws(after) + 1;
        let value_pos = Pos { line: line_no, column: value_col };
        let entry = Entry { key_pos, value: after.trim().to_string(), value_pos };
        if entry.value.is_empty() && key != "checks" {
            return Err(at(value_pos, format!("missing value for `{key}`")));
        }

        if key == "orbit t0" || key.split_whitespace().collect::<Vec<_>>() == ["orbit", "t0"] {
            raw.orbits.push(entry);
        } else if let Some(r) = key.strip_prefix('C').and_then(|r| r.parse::<usize>().ok()) {
            if r == 0 {
                return Err(at(key_pos, "C0 is the pointwise product and cannot be given"));
            }
            if raw.ops.insert(r, entry).is_some() {
                return Err(at(key_pos, format!("duplicate key `{key}`")));
            }
        } else if KEYS.contains(&key) || key == "seed" {
            if raw.entries.insert(key.to_string(), entry).is_some() {
                return Err(at(key_pos, format!("duplicate key `{key}`")));
            }
        } else {
            return Err(at(key_pos, format!("unknown key `{key}`")));
        }
    }
    Ok(raw)
}

/// Splits `[a, b, ...]` (or `(a, b, ...)`) at top-level commas; returns the
/// items with their absolute positions.
fn split_list(text: &str, pos: Pos, open: char, close: char) -> Result<Vec<(String, Pos)>, ScenarioError> {
    let t = text.trim_end();
    let chars: Vec<char> = t.chars().collect();
    if chars.first() != Some(&open) || chars.last() != Some(&close) {
        return Err(at(pos, format!("expected `{open} ... {close}`")));
    }
    let mut items = Vec::new();
    let mut depth = 0i32;
    let mut start = 1;
    let inner_end = chars.len() - 1;
    for (k, &c) in chars.iter().enumerate().take(inner_end).skip(1) {
        match c {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => {
                depth -= 1;
                if depth < 0 {
                    return Err(at(Pos { line: pos.line, column: pos.column + k }, "unbalanced bracket"));
                }
            }
            ',' if depth == 0 => {
                items.push((start, k));
                start = k + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(at(pos, "unbalanced bracket"));
    }
    items.push((start, inner_end));
    let mut out = Vec::new();
    for (a, b) in items {
        let piece: String = chars[a..b].iter().collect();
        let lead = leading_ws(&piece);
        let item = piece.trim().to_string();
        if item.is_empty() {
            if out.is_empty() && b == inner_end {
                return Ok(out);
            }
            return Err(at(Pos { line: pos.line, column: pos.column + a }, "empty list item"));
        }
        out.push((item, Pos { line: pos.line, column: pos.column + a + lead }));
    }
    Ok(out)
}

fn parse_rational(text: &str, pos: Pos) -> Result<BigRational, ScenarioError> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let t = t.strip_prefix('(').and_then(|s| s.strip_suffix(')')).unwrap_or(&t);
    let bad = || at(pos, format!("invalid rational `{text}`"));
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n, d),
        None => (t, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(at(pos, "zero denominator"));
    }
    Ok(BigRational::new(num, den))
}

fn parse_usize(e: &Entry, what: &str) -> Result<usize, ScenarioError> {
    e.value.parse().map_err(|_| at(e.value_pos, format!("{what} must be a non-negative integer")))
}

/// One component `q u + r` of a class vector, e.g. `(1/2)u`, `3 - 2u`.
fn parse_class_component(text: &str, pos: Pos) -> Result<(BigRational, BigRational), ScenarioError> {
    let t: String = text.chars().filter(|c| !c.is_whitespace() && *c != '*' && *c != '·').collect();
    let mut twist = BigRational::zero();
    let mut plain = BigRational::zero();
    let mut terms = Vec::new();
    let mut depth = 0;
    let mut start = 0;
    for (k, c) in t.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            '+' | '-' if depth == 0 && k > 0 => {
                terms.push(&t[start..k]);
                start = k;
            }
            _ => {}
        }
    }
    terms.push(&t[start..]);
    for term in terms {
        let (sign, body) = match term.strip_prefix('-') {
            Some(b) => (-BigRational::one(), b),
            None => (BigRational::one(), term.strip_prefix('+').unwrap_or(term)),
        };
        if body.is_empty() {
            return Err(at(pos, format!("invalid class `{text}`")));
        }
        if let Some(coef) = body.strip_suffix('u') {
            let c = if coef.is_empty() { BigRational::one() } else { parse_rational(coef, pos)? };
            twist += sign * c;
        } else {
            plain += sign * parse_rational(body, pos)?;
        }
    }
    Ok((twist, plain))
}

/// A class vector: a single component, or `[c1, c2, ...]`.
pub fn parse_class(text: &str, pos: Pos) -> Result<TwistedClass, ScenarioError> {
    let items = if text.trim_start().starts_with('[') {
        split_list(text, pos, '[', ']')?
    } else {
        vec![(text.trim().to_string(), pos)]
    };
    let mut class = TwistedClass { plain: Vec::new(), twist: Vec::new() };
    for (item, p) in items {
        let (q, r) = parse_class_component(&item, p)?;
        class.twist.push(q);
        class.plain.push(r);
    }
    Ok(class)
}

fn parse_rational_matrix(text: &str, pos: Pos) -> Result<QMat, ScenarioError> {
    split_list(text, pos, '[', ']')?
        .into_iter()
        .map(|(row, p)| {
            split_list(&row, p, '[', ']')?
                .into_iter()
                .map(|(x, q)| parse_rational(&x, q))
                .collect()
        })
        .collect()
}

fn nesting_depth(text: &str) -> usize {
    text.trim_start().chars().take_while(|&c| c == '[' || c.is_whitespace()).filter(|&c| c == '[').count()
}

fn to_integer_matrix(m: QMat, pos: Pos) -> Result<ZMat, ScenarioError> {
    m.into_iter()
        .map(|row| {
            row.into_iter()
                .map(|x| {
                    if x.is_integer() {
                        Ok(x.to_integer())
                    } else {
                        Err(at(pos, "automorphism entries must be integers"))
                    }
                })
                .collect()
        })
        .collect()
}

fn parse_model(e: &Entry) -> Result<CohomModel, ScenarioError> {
    let fields = split_list(&e.value, e.value_pos, '{', '}')?;
    let mut b = None;
    let mut pi_star = None;
    let mut autos = Vec::new();
    for (field, pos) in fields {
        let Some((k, v)) = field.split_once('=') else {
            return Err(at(pos, "expected `key = value` in model"));
        };
        let vpos = Pos { line: pos.line, column: pos.column + k.chars().count() + 1 + leading_ws(v) };
        let v = v.trim();
        match k.trim() {
            "b" => b = Some(v.parse::<usize>().map_err(|_| at(vpos, "b must be a non-negative integer"))?),
            "lattice" => {
                if v != "Z" {
                    return Err(at(vpos, "only the standard lattice `Z` is supported"));
                }
            }
            "pi_star" => pi_star = Some(parse_rational_matrix(v, vpos)?),
            "autos" => {
                autos = match nesting_depth(v) {
                    0 | 1 if v.replace(' ', "") == "[]" => Vec::new(),
                    2 => vec![to_integer_matrix(parse_rational_matrix(v, vpos)?, vpos)?],
                    3 => split_list(v, vpos, '[', ']')?
                        .into_iter()
                        .map(|(m, p)| to_integer_matrix(parse_rational_matrix(&m, p)?, p))
                        .collect::<Result<_, _>>()?,
                    _ => return Err(at(vpos, "autos must be a matrix or a list of matrices")),
                }
            }
            other => return Err(at(pos, format!("unknown model key `{other}`"))),
        }
    }
    let b = b.ok_or_else(|| at(e.key_pos, "model needs `b`"))?;
    let pi_star = match pi_star {
        Some(m) => m,
        None => CohomModel::symplectic(b).pi_star().clone(),
    };
    CohomModel::new(b, pi_star, autos).map_err(|err| core_at(e.value_pos, err))
}

fn parse_projection(e: &Entry, names: &[String]) -> Result<Mat, ScenarioError> {
    let rows = split_list(&e.value, e.value_pos, '[', ']')?;
    let mut polys = Vec::new();
    for (row, p) in rows {
        let cells = split_list(&row, p, '[', ']')?;
        let mut out = Vec::new();
        for (cell, q) in cells {
            out.push(parse_poly_at(&cell, names, q).map_err(|err| core_at(q, err))?);
        }
        polys.push(out);
    }
    let n = polys.len();
    if polys.iter().any(|r| r.len() != n) {
        return Err(at(e.value_pos, "P0 must be a square matrix"));
    }
    let m = Mat::from_polys(polys).map_err(|err| core_at(e.value_pos, err))?;
    if !is_idempotent(&m) {
        return Err(at(e.value_pos, "P0 is not idempotent"));
    }
    Ok(m)
}

fn parse_multi_index(text: &str, pos: Pos, dim: usize) -> Result<Vec<u32>, ScenarioError> {
    let parts = split_list(text, pos, '(', ')')?;
    if parts.len() != dim {
        return Err(at(pos, format!("dimension mismatch: multi-index has {} entries, expected {dim}", parts.len())));
    }
    parts
        .into_iter()
        .map(|(x, p)| x.parse::<u32>().map_err(|_| at(p, "multi-index entries must be non-negative integers")))
        .collect()
}

fn parse_operator(e: &Entry, names: &[String]) -> Result<MultiDiffOp, ScenarioError> {
    let dim = names.len();
    let mut op = MultiDiffOp::zero(dim, 2);
    for (term, pos) in split_list(&e.value, e.value_pos, '[', ']')? {
        let parts = split_list(&term, pos, '(', ')')?;
        if parts.len() != 3 {
            return Err(at(pos, "expected `(coefficient, left index, right index)`"));
        }
        let c = parse_poly_at(&parts[0].0, names, parts[0].1).map_err(|err| core_at(parts[0].1, err))?;
        let a = parse_multi_index(&parts[1].0, parts[1].1, dim)?;
        let b = parse_multi_index(&parts[2].0, parts[2].1, dim)?;
        let left = MultiDiffOp::derivative(dim, a, PolyFun::one(dim));
        let right = MultiDiffOp::derivative(dim, b, PolyFun::one(dim));
        op.add_assign_ref(&left.tensor(&right).mul_poly(&c));
    }
    Ok(op)
}

fn parse_names(raw: &Raw) -> Result<(Vec<String>, Pos), ScenarioError> {
    match (raw.entries.get("vars"), raw.entries.get("dim")) {
        (Some(v), dim) => {
            let names: Vec<String> = v.value.split(',').map(|s| s.trim().to_string()).collect();
            if names.iter().any(|n| n.is_empty() || !n.chars().all(|c| c.is_alphanumeric() || c == '_')) {
                return Err(at(v.value_pos, "variable names must be identifiers"));
            }
            if let Some(d) = dim {
                let d_val = parse_usize(d, "dim")?;
                if d_val != names.len() {
                    return Err(at(d.value_pos, format!("dimension mismatch: dim = {d_val} but {} variables", names.len())));
                }
            }
            Ok((names, v.key_pos))
        }
        (None, Some(d)) => Ok((default_names(parse_usize(d, "dim")?), d.key_pos)),
        (None, None) => Err(ScenarioError::Missing("scenario needs `vars` or `dim`".into())),
    }
}

/// Parses and validates a scenario. `order` overrides the file's truncation
/// order.
pub fn parse_scenario(text: &str, order: Option<usize>) -> Result<Scenario, ScenarioError> {
    let raw = parse_raw(text)?;
    let (names, _) = parse_names(&raw)?;
    let dim = names.len();
    let get = |k: &str| raw.entries.get(k);

    let name = get("name").map_or_else(|| "scenario".to_string(), |e| e.value.clone());
    let pi_entry = get("pi").ok_or_else(|| ScenarioError::Missing("scenario needs `pi`".into()))?;
    let pi = parse_multivector_at(&pi_entry.value, &names, pi_entry.value_pos).map_err(|e| core_at(pi_entry.value_pos, e))?;
    if pi.degree() != 2 && !pi.is_zero() {
        return Err(at(pi_entry.value_pos, "pi must be a bivector"));
    }
    let pi = if pi.is_zero() { Multivector::zero(dim, 2) } else { pi };
    if pi.dim() != dim {
        return Err(at(pi_entry.value_pos, "dimension mismatch"));
    }
    if !is_poisson(&pi) {
        return Err(at(pi_entry.value_pos, "not Poisson: [pi, pi] != 0"));
    }

    let file_order = get("order").map(|e| parse_usize(e, "order")).transpose()?;
    let star_entry = get("star");
    let kind = match star_entry.map(|e| e.value.as_str()) {
        None | Some("moyal") => StarKind::Moyal,
        Some("kontsevich2") => StarKind::Kontsevich2,
        Some("explicit") => StarKind::Explicit,
        Some(other) => return Err(at(star_entry.unwrap().value_pos, format!("unknown star `{other}`"))),
    };
    if kind != StarKind::Explicit {
        if let Some((_, e)) = raw.ops.iter().next() {
            return Err(at(e.key_pos, "operator terms require `star = explicit`"));
        }
    }
    let star_pos = star_entry.map_or(pi_entry.value_pos, |e| e.value_pos);
    let star = match kind {
        StarKind::Moyal => {
            let n = order.or(file_order).unwrap_or(2);
            moyal(&pi, n).map_err(|e| core_at(star_pos, e))?
        }
        StarKind::Kontsevich2 => {
            let n = order.or(file_order).unwrap_or(2);
            if n > 2 {
                return Err(at(star_pos, format!("kontsevich2 is available up to order 2, not {n}")));
            }
            kontsevich2(&pi).map_err(|e| core_at(star_pos, e))?.truncate(n)
        }
        StarKind::Explicit => {
            let top = raw.ops.keys().next_back().copied().unwrap_or(0);
            let n = order.or(file_order).unwrap_or(top);
            let mut ops = vec![MultiDiffOp::product(dim, 2)];
            for r in 1..=n {
                ops.push(match raw.ops.get(&r) {
                    Some(e) => parse_operator(e, &names)?,
                    None => MultiDiffOp::zero(dim, 2),
                });
            }
            StarProduct::new(ops, pi.clone()).map_err(|e| core_at(star_pos, e))?
        }
    };

    let p0 = get("P0").map(|e| parse_projection(e, &names)).transpose()?;
    let model = raw.model.as_ref().map(parse_model).transpose()?;
    let mut orbit_queries = Vec::new();
    for e in &raw.orbits {
        let Some(m) = &model else {
            return Err(at(e.key_pos, "orbit query without a model"));
        };
        let q = parse_class(&e.value, e.value_pos)?;
        if q.rank() != m.rank() {
            return Err(at(e.value_pos, format!("dimension mismatch: class has {} entries, model has b = {}", q.rank(), m.rank())));
        }
        orbit_queries.push(q);
    }

    let mut checks = Vec::new();
    if let Some(e) = get("checks") {
        let mut col = e.value_pos.column;
        for part in e.value.split(',') {
            let c = part.trim();
            let p = Pos { line: e.value_pos.line, column: col + leading_ws(part) };
            col += part.chars().count() + 1;
            if c.is_empty() {
                continue;
            }
            let check = Check::from_name(c).ok_or_else(|| at(p, format!("unknown check `{c}`")))?;
            if !checks.contains(&check) {
                checks.push(check);
            }
        }
    }
    let seed = get("seed")
        .map(|e| e.value.parse::<u64>().map_err(|_| at(e.value_pos, "seed must be a non-negative integer")))
        .transpose()?;

    Ok(Scenario {
        name,
        names,
        pi,
        star_kind: kind,
        star,
        p0,
        model,
        orbit_queries,
        checks,
        seed,
    })
}

/// Reads the `model { ... }` block of a file.
pub fn parse_model_file(text: &str) -> Result<CohomModel, ScenarioError> {
    let raw = parse_raw(text)?;
    let e = raw.model.as_ref().ok_or_else(|| ScenarioError::Missing("file has no model block".into()))?;
    parse_model(e)
}
