use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use super::GaussianRational;
use crate::error::{ensure_dim, Error, Result};

/// Exponent vector of a monomial, ordered graded-lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn one(dim: usize) -> Self {
        Monomial(vec![0; dim])
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Polynomial in `dim` variables with Gaussian-rational coefficients.
///
/// Zero coefficients are never stored, so structural equality is
/// mathematical equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PolyFun {
    dim: usize,
    terms: BTreeMap<Monomial, GaussianRational>,
}

impl PolyFun {
    pub fn zero(dim: usize) -> Self {
        PolyFun {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(dim: usize) -> Self {
        PolyFun::constant(dim, GaussianRational::one())
    }

    pub fn constant(dim: usize, c: GaussianRational) -> Self {
        PolyFun::monomial(dim, Monomial::one(dim), c)
    }

    pub fn from_int(dim: usize, n: i64) -> Self {
        PolyFun::constant(dim, GaussianRational::from_int(n))
    }

    /// The coordinate function `x_{index}` (0-based).
    pub fn var(dim: usize, index: usize) -> Self {
        assert!(index < dim, "variable index {index} out of range for dim {dim}");
        let mut e = vec![0; dim];
        e[index] = 1;
        PolyFun::monomial(dim, Monomial(e), GaussianRational::one())
    }

    pub fn monomial(dim: usize, exps: Monomial, c: GaussianRational) -> Self {
        assert_eq!(exps.0.len(), dim);
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(exps, c);
        }
        PolyFun { dim, terms }
    }

    pub fn from_terms<I>(dim: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (Monomial, GaussianRational)>,
    {
        let mut p = PolyFun::zero(dim);
        for (m, c) in terms {
            assert_eq!(m.0.len(), dim);
            p.add_term(m, &c);
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in ascending graded-lex order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &GaussianRational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> GaussianRational {
        self.terms.get(m).cloned().unwrap_or_else(GaussianRational::zero)
    }

    pub fn constant_term(&self) -> GaussianRational {
        self.coeff(&Monomial::one(self.dim))
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.degree() == 0)
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().next_back().map(Monomial::degree)
    }

    pub(crate) fn add_term(&mut self, m: Monomial, c: &GaussianRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(v) => {
                *v += c;
                if v.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c.clone());
            }
        }
    }

    pub fn add_assign_ref(&mut self, other: &PolyFun) {
        assert_eq!(self.dim, other.dim, "polynomial dimension mismatch");
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c);
        }
    }

    pub fn sub_assign_ref(&mut self, other: &PolyFun) {
        assert_eq!(self.dim, other.dim, "polynomial dimension mismatch");
        for (m, c) in &other.terms {
            self.add_term(m.clone(), &-c);
        }
    }

    /// Adds `c * other` in place.
    pub fn add_scaled(&mut self, c: &GaussianRational, other: &PolyFun) {
        assert_eq!(self.dim, other.dim, "polynomial dimension mismatch");
        if c.is_zero() {
            return;
        }
        for (m, v) in &other.terms {
            self.add_term(m.clone(), &(c * v));
        }
    }

    pub fn checked_add(&self, other: &PolyFun) -> Result<PolyFun> {
        ensure_dim(self.dim, other.dim)?;
        Ok(self + other)
    }

    pub fn checked_mul(&self, other: &PolyFun) -> Result<PolyFun> {
        ensure_dim(self.dim, other.dim)?;
        Ok(self * other)
    }

    pub fn scale(&self, c: &GaussianRational) -> PolyFun {
        if c.is_zero() {
            return PolyFun::zero(self.dim);
        }
        PolyFun {
            dim: self.dim,
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    pub fn pow(&self, n: u32) -> PolyFun {
        let mut acc = PolyFun::one(self.dim);
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// Partial derivative along variable `index` (0-based).
    pub fn partial(&self, index: usize) -> Result<PolyFun> {
        if index >= self.dim {
            return Err(Error::IndexOutOfRange {
                index,
                dim: self.dim,
            });
        }
        Ok(self.partial_multi(&unit_index(self.dim, index)))
    }

    /// Mixed partial derivative `∂^a` for an exponent vector `a`.
    pub fn partial_multi(&self, a: &[u32]) -> PolyFun {
        assert_eq!(a.len(), self.dim);
        if a.iter().all(|&k| k == 0) {
            return self.clone();
        }
        let mut out = PolyFun::zero(self.dim);
        'terms: for (m, c) in &self.terms {
            let mut factor = GaussianRational::one();
            let mut e = m.0.clone();
            for (v, &k) in a.iter().enumerate() {
                if e[v] < k {
                    continue 'terms;
                }
                for j in 0..k {
                    factor = &factor * &GaussianRational::from_int(i64::from(e[v] - j));
                }
                e[v] -= k;
            }
            out.add_term(Monomial(e), &(c * &factor));
        }
        out
    }

    /// Value at a point with Gaussian-rational coordinates.
    pub fn eval(&self, point: &[GaussianRational]) -> GaussianRational {
        assert_eq!(point.len(), self.dim);
        let mut total = GaussianRational::zero();
        for (m, c) in &self.terms {
            let mut v = c.clone();
            for (x, &k) in point.iter().zip(&m.0) {
                for _ in 0..k {
                    v = &v * x;
                }
            }
            total += &v;
        }
        total
    }

    /// Renders the polynomial using the supplied variable names,
    /// highest graded-lex term first.
    pub fn display_with(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (k, (m, c)) in self.terms.iter().rev().enumerate() {
            let (neg, mag) = if c.is_negative_real() {
                (true, -c)
            } else {
                (false, c.clone())
            };
            if k == 0 {
                if neg {
                    out.push('-');
                }
            } else if neg {
                out.push_str(" - ");
            } else {
                out.push_str(" + ");
            }
            let mono = monomial_string(m, names);
            if mono.is_empty() {
                out.push_str(&mag.to_string());
            } else if mag.is_one() {
                out.push_str(&mono);
            } else {
                out.push_str(&format!("{mag}*{mono}"));
            }
        }
        out
    }
}

pub(crate) fn unit_index(dim: usize, index: usize) -> Vec<u32> {
    let mut e = vec![0; dim];
    e[index] = 1;
    e
}

fn monomial_string(m: &Monomial, names: &[String]) -> String {
    let mut parts = Vec::new();
    for (v, &k) in m.0.iter().enumerate() {
        let name = names
            .get(v)
            .cloned()
            .unwrap_or_else(|| format!("x{}", v + 1));
        match k {
            0 => {}
            1 => parts.push(name),
            _ => parts.push(format!("{name}^{k}")),
        }
    }
    parts.join("*")
}

/// Default variable names `x1..xd`.
pub fn default_names(dim: usize) -> Vec<String> {
    (1..=dim).map(|i| format!("x{i}")).collect()
}

impl fmt::Display for PolyFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_with(&default_names(self.dim)))
    }
}

impl<'a> Add<&'a PolyFun> for &'a PolyFun {
    type Output = PolyFun;
    fn add(self, rhs: &PolyFun) -> PolyFun {
        let mut out = self.clone();
        out.add_assign_ref(rhs);
        out
    }
}

impl Add for PolyFun {
    type Output = PolyFun;
    fn add(mut self, rhs: PolyFun) -> PolyFun {
        self.add_assign_ref(&rhs);
        self
    }
}

impl<'a> Sub<&'a PolyFun> for &'a PolyFun {
    type Output = PolyFun;
    fn sub(self, rhs: &PolyFun) -> PolyFun {
        let mut out = self.clone();
        out.sub_assign_ref(rhs);
        out
    }
}

impl Sub for PolyFun {
    type Output = PolyFun;
    fn sub(mut self, rhs: PolyFun) -> PolyFun {
        self.sub_assign_ref(&rhs);
        self
    }
}

impl<'a> Mul<&'a PolyFun> for &'a PolyFun {
    type Output = PolyFun;
    fn mul(self, rhs: &PolyFun) -> PolyFun {
        assert_eq!(self.dim, rhs.dim, "polynomial dimension mismatch");
        let mut out = PolyFun::zero(self.dim);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), &(ca * cb));
            }
        }
        out
    }
}

impl Mul for PolyFun {
    type Output = PolyFun;
    fn mul(self, rhs: PolyFun) -> PolyFun {
        &self * &rhs
    }
}

impl Neg for &PolyFun {
    type Output = PolyFun;
    fn neg(self) -> PolyFun {
        PolyFun {
            dim: self.dim,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl Neg for PolyFun {
    type Output = PolyFun;
    fn neg(self) -> PolyFun {
        -&self
    }
}

pub fn poly_add(p: &PolyFun, q: &PolyFun) -> Result<PolyFun> {
    p.checked_add(q)
}

pub fn poly_mul(p: &PolyFun, q: &PolyFun) -> Result<PolyFun> {
    p.checked_mul(q)
}

/// Partial derivative along the 0-based variable `index`.
pub fn partial(p: &PolyFun, index: usize) -> Result<PolyFun> {
    p.partial(index)
}
