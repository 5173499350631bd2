//! Multivector calculus on an affine chart: Schouten bracket, Poisson
//! differential, Hamiltonian vector fields and the Koszul bracket of
//! 1-forms.
//!
//! A `k`-vector is stored as a superfunction `Σ A^I ξ_I` over sorted index
//! tuples `I = (i_1 < … < i_k)`, where `ξ_i` stands for `∂_i` and
//! `ξ_I = ∂_{i_1} ∧ … ∧ ∂_{i_k}`.
//!
//! # Schouten bracket convention
//!
//! With `∂^R/∂ξ_i` the right derivative in the odd variables, let
//!
//! ```text
//! S(P, Q) = Σ_i (∂^R P/∂ξ_i) ∧ ∂_i Q − (−1)^{(p−1)(q−1)} (∂^R Q/∂ξ_i) ∧ ∂_i P
//! ```
//!
//! (the graded-Lie form). The bracket used throughout is
//! `[P, Q] = (−1)^{p−1} S(P, Q)`. It restricts to the Lie bracket on vector
//! fields, gives `[X, f] = X(f)`, satisfies `[Q, P] = (−1)^{pq} [P, Q]` and
//! `[π, X] = L_X π`, so `d_π = [π, ·]` sends a vector field `X` to `L_X π`.
//! `[π, π] = 0` is equivalent to the Jacobi identity and `d_π ∘ d_π = 0`.
//! For a bivector, `[π, π](df, dg, dh) = −2 ({f,{g,h}} + cyclic)` with
//! `{f, g} = π(df, dg)`.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;

use crate::coeffring::{default_names, unit_index, GaussianRational, PolyFun};
use crate::diffop::{BidiffOp, DiffOp, MultiDiffOp};
use crate::error::{ensure_dim, Error, Result};
use crate::literal::{parse_expr, Expr, Pos};
use crate::series::{Coefficient, EquivalenceTransform, TruncatedSeries};

/// Antisymmetric contravariant tensor with polynomial components.
///
/// Zero multivectors compare equal whatever their nominal degree (the
/// bracket of two functions is the zero of degree −1, stored as degree 0).
#[derive(Clone, Debug)]
pub struct Multivector {
    dim: usize,
    degree: usize,
    components: BTreeMap<Vec<usize>, PolyFun>,
}

/// Sign of the permutation sorting `idx`, or `None` on a repeated index.
fn sort_sign(idx: &mut [usize]) -> Option<i64> {
    let mut sign = 1;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some(sign)
    }
}

impl Multivector {
    pub fn zero(dim: usize, degree: usize) -> Self {
        Multivector {
            dim,
            degree,
            components: BTreeMap::new(),
        }
    }

    /// Degree-0 multivector.
    pub fn function(f: PolyFun) -> Self {
        let mut m = Multivector::zero(f.dim(), 0);
        m.add_component(vec![], &f);
        m
    }

    pub fn vector_field(components: &[PolyFun]) -> Self {
        let dim = components.len();
        let mut m = Multivector::zero(dim, 1);
        for (i, c) in components.iter().enumerate() {
            m.add_component(vec![i], c);
        }
        m
    }

    /// Adds `c · ∂_{idx[0]} ∧ … ∧ ∂_{idx[k-1]}`; the indices need not be
    /// sorted, the sign of the sorting permutation is applied.
    pub fn add_component(&mut self, mut idx: Vec<usize>, c: &PolyFun) {
        assert_eq!(idx.len(), self.degree, "component has wrong degree");
        assert_eq!(c.dim(), self.dim, "component has wrong dimension");
        assert!(idx.iter().all(|&i| i < self.dim), "index out of range");
        let Some(sign) = sort_sign(&mut idx) else {
            return;
        };
        if c.is_zero() {
            return;
        }
        let c = if sign < 0 { -c } else { c.clone() };
        match self.components.get_mut(&idx) {
            Some(v) => {
                v.add_assign_ref(&c);
                if v.is_zero() {
                    self.components.remove(&idx);
                }
            }
            None => {
                self.components.insert(idx, c);
            }
        }
    }

    /// Bivector from its (upper-triangular) entries `π^{ij}`, `i < j`.
    pub fn bivector(dim: usize, entries: &[((usize, usize), PolyFun)]) -> Self {
        let mut m = Multivector::zero(dim, 2);
        for ((i, j), c) in entries {
            m.add_component(vec![*i, *j], c);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.components.is_empty()
    }

    pub fn components(&self) -> impl Iterator<Item = (&Vec<usize>, &PolyFun)> {
        self.components.iter()
    }

    /// Component along sorted `idx`; handles unsorted input with its sign.
    pub fn component(&self, idx: &[usize]) -> PolyFun {
        let mut sorted = idx.to_vec();
        match sort_sign(&mut sorted) {
            None => PolyFun::zero(self.dim),
            Some(s) => {
                let c = self
                    .components
                    .get(&sorted)
                    .cloned()
                    .unwrap_or_else(|| PolyFun::zero(self.dim));
                if s < 0 {
                    -c
                } else {
                    c
                }
            }
        }
    }

    /// Full antisymmetric bivector entry `π^{ij}`.
    pub fn entry(&self, i: usize, j: usize) -> PolyFun {
        assert_eq!(self.degree, 2);
        self.component(&[i, j])
    }

    /// The function of a degree-0 multivector.
    pub fn as_function(&self) -> PolyFun {
        assert_eq!(self.degree, 0);
        self.component(&[])
    }

    /// Vector-field components of a degree-1 multivector.
    pub fn as_vector(&self) -> Vec<PolyFun> {
        assert_eq!(self.degree, 1);
        (0..self.dim).map(|i| self.component(&[i])).collect()
    }

    pub fn is_constant(&self) -> bool {
        self.components.values().all(PolyFun::is_constant)
    }

    pub fn add(&self, other: &Multivector) -> Multivector {
        assert_eq!(self.dim, other.dim, "multivector dimension mismatch");
        if self.is_zero() && self.degree != other.degree {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        assert_eq!(self.degree, other.degree, "multivector degree mismatch");
        let mut out = self.clone();
        for (k, c) in &other.components {
            out.add_component(k.clone(), c);
        }
        out
    }

    pub fn sub(&self, other: &Multivector) -> Multivector {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Multivector {
        self.scale(&GaussianRational::from_int(-1))
    }

    pub fn scale(&self, c: &GaussianRational) -> Multivector {
        self.mul_fn(&PolyFun::constant(self.dim, c.clone()))
    }

    /// Multiplies every component by the function `f`.
    pub fn mul_fn(&self, f: &PolyFun) -> Multivector {
        let mut out = Multivector::zero(self.dim, self.degree);
        for (k, c) in &self.components {
            out.add_component(k.clone(), &(c * f));
        }
        out
    }

    pub fn wedge(&self, other: &Multivector) -> Multivector {
        assert_eq!(self.dim, other.dim, "multivector dimension mismatch");
        let mut out = Multivector::zero(self.dim, self.degree + other.degree);
        for (i, a) in &self.components {
            for (j, b) in &other.components {
                let mut idx = i.clone();
                idx.extend_from_slice(j);
                out.add_component(idx, &(a * b));
            }
        }
        out
    }

    fn partial_x(&self, v: usize) -> Multivector {
        let mut out = Multivector::zero(self.dim, self.degree);
        for (k, c) in &self.components {
            out.add_component(k.clone(), &c.partial(v).expect("index in range"));
        }
        out
    }

    /// Right derivative with respect to the odd variable `ξ_v`.
    fn right_odd_derivative(&self, v: usize) -> Multivector {
        let mut out = Multivector::zero(self.dim, self.degree.saturating_sub(1));
        if self.degree == 0 {
            return out;
        }
        for (k, c) in &self.components {
            if let Some(pos) = k.iter().position(|&i| i == v) {
                let mut rest = k.clone();
                rest.remove(pos);
                let moves = self.degree - 1 - pos;
                let c = if moves % 2 == 1 { -c } else { c.clone() };
                out.add_component(rest, &c);
            }
        }
        out
    }

    /// Contracts with `k` one-forms: `A(α_1, …, α_k)`.
    pub fn contract(&self, forms: &[&OneForm]) -> PolyFun {
        assert_eq!(forms.len(), self.degree, "wrong number of 1-forms");
        let mut out = PolyFun::zero(self.dim);
        for (idx, c) in &self.components {
            let det = determinant(idx, forms);
            out.add_assign_ref(&(c * &det));
        }
        out
    }

    /// `(f, g) ↦ π(df, dg)` as a bidifferential operator.
    pub fn to_bidiff(&self) -> BidiffOp {
        assert_eq!(self.degree, 2);
        let mut op = MultiDiffOp::zero(self.dim, 2);
        for (idx, c) in &self.components {
            let (i, j) = (idx[0], idx[1]);
            op.add_term(vec![unit_index(self.dim, i), unit_index(self.dim, j)], c);
            op.add_term(vec![unit_index(self.dim, j), unit_index(self.dim, i)], &-c);
        }
        op
    }

    /// Reads a bivector off a skew biderivation `B(f,g) = π(df,dg)`.
    pub fn from_biderivation(op: &BidiffOp) -> Result<Multivector> {
        op.ensure_arity(2)?;
        let dim = op.dim();
        let mut out = Multivector::zero(dim, 2);
        for (key, c) in op.terms() {
            let (Some(i), Some(j)) = (single_index(&key[0]), single_index(&key[1])) else {
                return Err(Error::NotBivector(format!(
                    "term of derivative order ({}, {})",
                    key[0].iter().sum::<u32>(),
                    key[1].iter().sum::<u32>()
                )));
            };
            if i < j {
                out.add_component(vec![i, j], c);
            }
        }
        if out.to_bidiff() != *op {
            return Err(Error::NotBivector("operator is not antisymmetric".into()));
        }
        Ok(out)
    }

    /// Renders with literal syntax, e.g. `z*dx^dy + x*dy^dz`.
    pub fn display_with(&self, names: &[String]) -> String {
        if self.components.is_empty() {
            return "0".into();
        }
        let parts: Vec<String> = self
            .components
            .iter()
            .map(|(idx, c)| {
                if idx.is_empty() {
                    return c.display_with(names);
                }
                let wedge: Vec<String> = idx.iter().map(|&i| format!("d{}", names[i])).collect();
                let wedge = wedge.join("^");
                if c.is_constant() && c.constant_term() == GaussianRational::from_int(1) {
                    wedge
                } else {
                    format!("({})*{}", c.display_with(names), wedge)
                }
            })
            .collect();
        parts.join(" + ")
    }
}

fn single_index(a: &[u32]) -> Option<usize> {
    if a.iter().sum::<u32>() != 1 {
        return None;
    }
    a.iter().position(|&k| k == 1)
}

fn determinant(idx: &[usize], forms: &[&OneForm]) -> PolyFun {
    let k = idx.len();
    let dim = forms.first().map(|f| f.dim()).unwrap_or(0);
    if k == 0 {
        return PolyFun::one(dim.max(1));
    }
    let mut perm: Vec<usize> = (0..k).collect();
    let mut total = PolyFun::zero(dim);
    permutations(&mut perm, 0, &mut |p| {
        let mut q = p.to_vec();
        let sign = sort_sign(&mut q).expect("permutation");
        let mut term = PolyFun::constant(dim, GaussianRational::from_int(sign));
        for (l, &s) in p.iter().enumerate() {
            term = &term * &forms[s].comps[idx[l]];
        }
        total.add_assign_ref(&term);
    });
    total
}

fn permutations(p: &mut Vec<usize>, start: usize, f: &mut dyn FnMut(&[usize])) {
    if start == p.len() {
        f(p);
        return;
    }
    for i in start..p.len() {
        p.swap(start, i);
        permutations(p, start + 1, f);
        p.swap(start, i);
    }
}

impl PartialEq for Multivector {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.components == other.components
            && (self.degree == other.degree || self.components.is_empty())
    }
}

impl Eq for Multivector {}

impl Coefficient for Multivector {
    fn zero_like(&self) -> Self {
        Multivector::zero(self.dim, self.degree)
    }
    fn is_zero(&self) -> bool {
        self.components.is_empty()
    }
    fn add_ref(&self, other: &Self) -> Self {
        self.add(other)
    }
    fn neg_ref(&self) -> Self {
        self.neg()
    }
}

impl fmt::Display for Multivector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_with(&default_names(self.dim)))
    }
}

/// Schouten bracket `[A, B]` of a `p`-vector and a `q`-vector; see the
/// module documentation for the sign convention.
pub fn schouten(a: &Multivector, b: &Multivector) -> Result<Multivector> {
    ensure_dim(a.dim, b.dim)?;
    let (p, q) = (a.degree, b.degree);
    let out_degree = (p + q).saturating_sub(1);
    if p + q == 0 {
        return Ok(Multivector::zero(a.dim, 0));
    }
    let mut out = Multivector::zero(a.dim, out_degree);
    let swap_sign = if (p as i64 - 1) * (q as i64 - 1) % 2 == 0 {
        -1
    } else {
        1
    };
    for v in 0..a.dim {
        let first = a.right_odd_derivative(v).wedge(&b.partial_x(v));
        let second = b.right_odd_derivative(v).wedge(&a.partial_x(v));
        out = out.add(&first);
        out = if swap_sign < 0 {
            out.sub(&second)
        } else {
            out.add(&second)
        };
    }
    if p % 2 == 0 {
        out = out.neg();
    }
    out.degree = out_degree;
    Ok(out)
}

/// `[π, π] = 0`.
pub fn is_poisson(pi: &Multivector) -> bool {
    pi.degree == 2 && schouten(pi, pi).map(|s| s.is_zero()).unwrap_or(false)
}

/// Poisson differential `d_π = [π, ·]`; rejects non-Poisson `π`.
pub fn d_pi(pi: &Multivector, a: &Multivector) -> Result<Multivector> {
    if pi.degree != 2 || !is_poisson(pi) {
        return Err(Error::NotPoisson);
    }
    schouten(pi, a)
}

/// `π̃(α) = π(·, α)`, i.e. `π̃(α)^i = Σ_j π^{ij} α_j`.
pub fn sharp(pi: &Multivector, alpha: &OneForm) -> Multivector {
    assert_eq!(pi.degree, 2);
    let dim = pi.dim;
    let comps: Vec<PolyFun> = (0..dim)
        .map(|i| {
            let mut acc = PolyFun::zero(dim);
            for j in 0..dim {
                acc.add_assign_ref(&(&pi.entry(i, j) * &alpha.comps[j]));
            }
            acc
        })
        .collect();
    Multivector::vector_field(&comps)
}

/// Hamiltonian vector field `X_f = π̃(df) = π(·, df)`.
pub fn hamiltonian(pi: &Multivector, f: &PolyFun) -> Multivector {
    sharp(pi, &OneForm::exact(f))
}

/// Koszul bracket `[α, β] = −L_{π̃α} β + L_{π̃β} α − d(π(α, β))`.
pub fn koszul(pi: &Multivector, alpha: &OneForm, beta: &OneForm) -> OneForm {
    let xa = sharp(pi, alpha);
    let xb = sharp(pi, beta);
    let pab = pi.contract(&[alpha, beta]);
    beta.lie_derivative(&xa)
        .neg()
        .add(&alpha.lie_derivative(&xb))
        .sub(&OneForm::exact(&pab))
}

/// Differential 1-form `Σ α_i dx_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OneForm {
    pub comps: Vec<PolyFun>,
}

impl OneForm {
    pub fn new(comps: Vec<PolyFun>) -> Self {
        OneForm { comps }
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn zero(dim: usize) -> Self {
        OneForm::new(vec![PolyFun::zero(dim); dim])
    }

    /// `df`.
    pub fn exact(f: &PolyFun) -> Self {
        OneForm::new(
            (0..f.dim())
                .map(|i| f.partial(i).expect("index in range"))
                .collect(),
        )
    }

    /// `dx_i`.
    pub fn coordinate(dim: usize, i: usize) -> Self {
        OneForm::exact(&PolyFun::var(dim, i))
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(PolyFun::is_zero)
    }

    pub fn add(&self, other: &OneForm) -> OneForm {
        OneForm::new(self.comps.iter().zip(&other.comps).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &OneForm) -> OneForm {
        OneForm::new(self.comps.iter().zip(&other.comps).map(|(a, b)| a - b).collect())
    }

    pub fn neg(&self) -> OneForm {
        OneForm::new(self.comps.iter().map(|a| -a).collect())
    }

    pub fn mul_fn(&self, f: &PolyFun) -> OneForm {
        OneForm::new(self.comps.iter().map(|a| a * f).collect())
    }

    /// `ι_X α = α(X)`.
    pub fn pair(&self, x: &Multivector) -> PolyFun {
        let mut acc = PolyFun::zero(self.dim());
        for (i, a) in self.comps.iter().enumerate() {
            acc.add_assign_ref(&(a * &x.component(&[i])));
        }
        acc
    }

    /// Exterior derivative: `(dα)_{ij} = ∂_i α_j − ∂_j α_i`.
    pub fn d(&self) -> TwoForm {
        let dim = self.dim();
        let mut w = TwoForm::zero(dim);
        for i in 0..dim {
            for j in (i + 1)..dim {
                let v = &self.comps[j].partial(i).expect("in range")
                    - &self.comps[i].partial(j).expect("in range");
                w.set(i, j, v);
            }
        }
        w
    }

    /// Lie derivative by Cartan's formula `L_X = ι_X d + d ι_X`.
    pub fn lie_derivative(&self, x: &Multivector) -> OneForm {
        let dalpha = self.d();
        let dim = self.dim();
        let contracted = OneForm::new(
            (0..dim)
                .map(|j| {
                    let mut acc = PolyFun::zero(dim);
                    for i in 0..dim {
                        acc.add_assign_ref(&(&x.component(&[i]) * &dalpha.get(i, j)));
                    }
                    acc
                })
                .collect(),
        );
        contracted.add(&OneForm::exact(&self.pair(x)))
    }
}

/// Differential 2-form stored as an antisymmetric matrix `ω_{ij}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoForm {
    entries: Vec<Vec<PolyFun>>,
}

impl TwoForm {
    pub fn zero(dim: usize) -> Self {
        TwoForm {
            entries: vec![vec![PolyFun::zero(dim); dim]; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    /// Sets `ω_{ij} = v` and `ω_{ji} = −v`.
    pub fn set(&mut self, i: usize, j: usize, v: PolyFun) {
        self.entries[j][i] = -&v;
        self.entries[i][j] = v;
    }

    pub fn get(&self, i: usize, j: usize) -> PolyFun {
        self.entries[i][j].clone()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().flatten().all(PolyFun::is_zero)
    }

    /// `dω = 0`.
    pub fn is_closed(&self) -> bool {
        let n = self.dim();
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    let s = &(&self.entries[j][k].partial(i).expect("in range")
                        + &self.entries[k][i].partial(j).expect("in range"))
                        + &self.entries[i][j].partial(k).expect("in range");
                    if !s.is_zero() {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// `ω(X, Y)` for vector fields.
    pub fn eval(&self, x: &Multivector, y: &Multivector) -> PolyFun {
        let n = self.dim();
        let mut acc = PolyFun::zero(n);
        for i in 0..n {
            for j in 0..n {
                acc.add_assign_ref(
                    &(&(&self.entries[i][j] * &x.component(&[i])) * &y.component(&[j])),
                );
            }
        }
        acc
    }
}

/// `π^*ω`, the bivector `(α, β) ↦ ω(π̃α, π̃β)`.
pub fn pi_star_two_form(pi: &Multivector, omega: &TwoForm) -> Multivector {
    let n = pi.dim;
    let mut out = Multivector::zero(n, 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let xi = sharp(pi, &OneForm::coordinate(n, i));
            let xj = sharp(pi, &OneForm::coordinate(n, j));
            out.add_component(vec![i, j], &omega.eval(&xi, &xj));
        }
    }
    out
}

/// Formal bivector `π_λ = π + λπ_1 + …`.
pub type FormalPoisson = TruncatedSeries<Multivector>;

/// Integrability diagnostics of a formal bivector.
#[derive(Clone, Debug, PartialEq)]
pub struct FormalPoissonReport {
    /// `(order, coefficient of λ^order in [π_λ, π_λ])` for nonzero defects.
    pub defects: Vec<(usize, Multivector)>,
    /// `d_π π_1 = [π, π_1]`, when the series has a first-order term.
    pub d_pi_pi1: Option<Multivector>,
}

impl FormalPoissonReport {
    pub fn is_integrable(&self) -> bool {
        self.defects.is_empty()
    }
}

pub fn check_formal_poisson(pl: &FormalPoisson) -> Result<FormalPoissonReport> {
    let sq = pl.mul_with(pl, |a, b| schouten(a, b).expect("same dimension"))?;
    let defects = sq
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(k, c)| (k, c.clone()))
        .collect();
    let d_pi_pi1 = if pl.order() >= 1 {
        Some(schouten(pl.coeff(0), pl.coeff(1))?)
    } else {
        None
    };
    Ok(FormalPoissonReport { defects, d_pi_pi1 })
}

/// True if `T(fg) = T(f)T(g)` holds as an identity of operators, i.e. `T`
/// is the exponential of a series of derivations. Returns the first order
/// where multiplicativity fails.
pub fn first_non_multiplicative_order(t: &EquivalenceTransform) -> Option<usize> {
    let dim = t.dim();
    let mu = MultiDiffOp::product(dim, 2);
    for k in 1..=t.order() {
        let lhs = t.map(k).apply_ops(&[&mu]);
        let mut rhs = MultiDiffOp::zero(dim, 2);
        for u in 0..=k {
            rhs.add_assign_ref(&t.map(u).tensor(&t.map(k - u)));
        }
        if lhs != rhs {
            return Some(k);
        }
    }
    None
}

/// Gauge action of `T ∈ exp(Σ D_r λ^r)` on a formal bivector:
/// `π'_λ(df, dg) = T^{-1} π_λ(d T f, d T g)`.
pub fn gauge_formal_poisson(t: &EquivalenceTransform, pl: &FormalPoisson) -> Result<FormalPoisson> {
    if pl.order() != t.order() {
        return Err(Error::OrderMismatch {
            left: t.order(),
            right: pl.order(),
        });
    }
    ensure_dim(t.dim(), pl.coeff(0).dim())?;
    if let Some(k) = first_non_multiplicative_order(t) {
        return Err(Error::NotDerivation(k));
    }
    let ops = pl.map(|m| m.to_bidiff());
    let conj = t.conjugate(&ops)?;
    let coeffs = conj
        .coeffs()
        .iter()
        .map(Multivector::from_biderivation)
        .collect::<Result<Vec<_>>>()?;
    Ok(TruncatedSeries::new(coeffs))
}

/// Generators `D_r = L_{X_r}` for vector fields `X_r`, checked to be
/// derivations.
pub fn derivation_generators(fields: &[Multivector]) -> Result<Vec<DiffOp>> {
    fields
        .iter()
        .enumerate()
        .map(|(r, x)| {
            if x.degree != 1 {
                return Err(Error::NotDerivation(r + 1));
            }
            Ok(MultiDiffOp::vector_field(&x.as_vector()))
        })
        .collect()
}

/// Parses the multivector literal syntax, e.g.
/// `z * dx^dy + x * dy^dz + y * dz^dx`.
pub fn parse_multivector(text: &str, names: &[String]) -> Result<Multivector> {
    parse_multivector_at(text, names, Pos { line: 1, column: 1 })
}

pub fn parse_multivector_at(text: &str, names: &[String], origin: Pos) -> Result<Multivector> {
    let e = parse_expr(text, names, origin)?;
    let dim = names.len();
    let parts = eval_super(&e, dim, origin)?;
    let nonzero: Vec<&Multivector> = parts.values().filter(|m| !m.is_zero()).collect();
    match nonzero.as_slice() {
        [] => Ok(Multivector::zero(dim, parts.keys().copied().max().unwrap_or(0))),
        [one] => Ok((*one).clone()),
        _ => Err(origin.error("multivector literal mixes different degrees")),
    }
}

/// Evaluates to a mixed-degree superfunction keyed by degree.
fn eval_super(e: &Expr, dim: usize, origin: Pos) -> Result<BTreeMap<usize, Multivector>> {
    let single = |m: Multivector| {
        let mut out = BTreeMap::new();
        out.insert(m.degree, m);
        out
    };
    Ok(match e {
        Expr::Num(c) => single(Multivector::function(PolyFun::constant(dim, c.clone()))),
        Expr::Var(i) => single(Multivector::function(PolyFun::var(dim, *i))),
        Expr::Dir(i) => {
            let mut comps = vec![PolyFun::zero(dim); dim];
            comps[*i] = PolyFun::one(dim);
            single(Multivector::vector_field(&comps))
        }
        Expr::Add(a, b) | Expr::Sub(a, b) => {
            let mut out = eval_super(a, dim, origin)?;
            let rhs = eval_super(b, dim, origin)?;
            let neg = matches!(e, Expr::Sub(..));
            for (deg, m) in rhs {
                let m = if neg { m.neg() } else { m };
                let entry = out.entry(deg).or_insert_with(|| Multivector::zero(dim, deg));
                *entry = entry.add(&m);
            }
            out
        }
        Expr::Neg(a) => eval_super(a, dim, origin)?
            .into_iter()
            .map(|(d, m)| (d, m.neg()))
            .collect(),
        Expr::Mul(a, b) => {
            let lhs = eval_super(a, dim, origin)?;
            let rhs = eval_super(b, dim, origin)?;
            let mut out: BTreeMap<usize, Multivector> = BTreeMap::new();
            for ma in lhs.values() {
                for mb in rhs.values() {
                    let w = ma.wedge(mb);
                    let entry = out
                        .entry(w.degree)
                        .or_insert_with(|| Multivector::zero(dim, w.degree));
                    *entry = entry.add(&w);
                }
            }
            out
        }
        Expr::Pow(a, n) => {
            let base = eval_super(a, dim, origin)?;
            if base.keys().any(|&d| d > 0) {
                return Err(origin.error("powers of directions are not allowed"));
            }
            let f = base.get(&0).map(|m| m.as_function()).unwrap_or_else(|| PolyFun::zero(dim));
            single(Multivector::function(f.pow(*n)))
        }
        Expr::Div(a, b, pos) => {
            let den = eval_super(b, dim, origin)?;
            let den = match (den.len(), den.get(&0)) {
                (1, Some(m)) => m.as_function(),
                _ => return Err(pos.error("division only by a nonzero constant")),
            };
            if !den.is_constant() || den.constant_term().is_zero() {
                return Err(pos.error("division only by a nonzero constant"));
            }
            let inv = den.constant_term().inv().expect("nonzero");
            eval_super(a, dim, origin)?
                .into_iter()
                .map(|(d, m)| (d, m.scale(&inv)))
                .collect()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::literal::parse_poly;

    fn names() -> Vec<String> {
        vec!["x".into(), "y".into(), "z".into()]
    }

    fn p(s: &str) -> PolyFun {
        parse_poly(s, &names()).unwrap()
    }

    fn mv(s: &str) -> Multivector {
        parse_multivector(s, &names()).unwrap()
    }

    fn su2() -> Multivector {
        mv("z * dx^dy + x * dy^dz + y * dz^dx")
    }

    #[test]
    fn parses_multivectors() {
        let pi = su2();
        assert_eq!(pi.degree(), 2);
        assert_eq!(pi.entry(0, 1), p("z"));
        assert_eq!(pi.entry(2, 0), p("y"));
        assert_eq!(pi.entry(0, 2), p("-y"));
        assert!(parse_multivector("dx + dx^dy", &names()).is_err());
        assert_eq!(mv("x^2"), Multivector::function(p("x^2")));
    }

    #[test]
    fn schouten_examples() {
        let names2: Vec<String> = vec!["x".into(), "y".into()];
        let pi = parse_multivector("dx^dy", &names2).unwrap();
        assert!(schouten(&pi, &pi).unwrap().is_zero());
        assert!(schouten(&su2(), &su2()).unwrap().is_zero());
        let dx = mv("dx");
        let f = Multivector::function(p("x^2"));
        assert_eq!(schouten(&dx, &f).unwrap(), Multivector::function(p("2*x")));
        let g = Multivector::function(p("y"));
        assert!(schouten(&f, &g).unwrap().is_zero());
    }

    #[test]
    fn schouten_extends_lie_bracket() {
        // [x∂y, y∂x] = x∂x − y∂y
        let a = mv("x*dy");
        let b = mv("y*dx");
        assert_eq!(schouten(&a, &b).unwrap(), mv("x*dx - y*dy"));
    }

    #[test]
    fn d_pi_of_vector_field_is_lie_derivative() {
        // d_π X = L_X π for π = ∂x∧∂y, X = x∂x: L_X π = −∂x∧∂y
        let names2: Vec<String> = vec!["x".into(), "y".into()];
        let pi = parse_multivector("dx^dy", &names2).unwrap();
        let x = parse_multivector("x*dx", &names2).unwrap();
        let expected = parse_multivector("-dx^dy", &names2).unwrap();
        assert_eq!(d_pi(&pi, &x).unwrap(), expected);
    }

    #[test]
    fn d_pi_examples() {
        let names2: Vec<String> = vec!["x".into(), "y".into()];
        let pi = parse_multivector("dx^dy", &names2).unwrap();
        let f = Multivector::function(PolyFun::var(2, 0));
        let df = d_pi(&pi, &f).unwrap();
        assert_eq!(df.degree(), 1);
        assert!(!df.is_zero());
        assert!(d_pi(&pi, &df).unwrap().is_zero());
        let c = parse_multivector("3*dx - dy", &names2).unwrap();
        assert!(d_pi(&pi, &c).unwrap().is_zero());
        assert!(d_pi(&pi, &pi).unwrap().is_zero());
        let bad = mv("x*dx^dy + y^2*dy^dz + z*dz^dx + x*y*dx^dz");
        let g = Multivector::function(p("x"));
        assert_eq!(d_pi(&bad, &g), Err(Error::NotPoisson));
    }

    #[test]
    fn jacobiator_oracle_constant() {
        // Non-Poisson bivector: compare [π,π](df,dg,dh) with the Jacobiator.
        let pi = mv("x*dx^dy + y^2*dy^dz + z*dz^dx + x*y*dx^dz");
        let br = |f: &PolyFun, g: &PolyFun| pi.contract(&[&OneForm::exact(f), &OneForm::exact(g)]);
        let (f, g, h) = (p("x + y*z"), p("y^2 - x"), p("z*x + 1"));
        let jac = &(&br(&f, &br(&g, &h)) + &br(&g, &br(&h, &f))) + &br(&h, &br(&f, &g));
        let sq = schouten(&pi, &pi).unwrap();
        let lhs = sq.contract(&[&OneForm::exact(&f), &OneForm::exact(&g), &OneForm::exact(&h)]);
        assert!(!jac.is_zero());
        assert_eq!(lhs, jac.scale(&GaussianRational::from_int(-2)));
    }

    #[test]
    fn hamiltonian_examples() {
        let names2: Vec<String> = vec!["x".into(), "y".into()];
        let pi = parse_multivector("dx^dy", &names2).unwrap();
        // X_x = π(·, dx): component y is π(dy, dx) = −1
        let xh = hamiltonian(&pi, &PolyFun::var(2, 0));
        assert_eq!(xh, parse_multivector("-dy", &names2).unwrap());
        assert!(hamiltonian(&pi, &PolyFun::from_int(2, 5)).is_zero());
        // su(2), f = z: X_z^i = π^{iz}
        let xz = hamiltonian(&su2(), &p("z"));
        assert_eq!(xz, mv("-y*dx + x*dy"));
    }

    #[test]
    fn koszul_examples() {
        let pi = su2();
        let df = OneForm::exact(&p("x*y"));
        assert!(koszul(&pi, &df, &df).is_zero());
        // constant π on ℝ², α = dx, β = dy: all Lie terms vanish, d(π(dx,dy)) = 0
        let names2: Vec<String> = vec!["x".into(), "y".into()];
        let c = parse_multivector("dx^dy", &names2).unwrap();
        assert!(koszul(&c, &OneForm::coordinate(2, 0), &OneForm::coordinate(2, 1)).is_zero());
        // [df, dg] = d{f, g}
        let (f, g) = (p("x*z"), p("y^2"));
        let bracket = pi.contract(&[&OneForm::exact(&f), &OneForm::exact(&g)]);
        assert_eq!(koszul(&pi, &OneForm::exact(&f), &OneForm::exact(&g)), OneForm::exact(&bracket));
    }

    #[test]
    fn formal_poisson_checks() {
        let names4: Vec<String> = (1..=4).map(|i| format!("x{i}")).collect();
        let pi = parse_multivector("dx1^dx2 + dx3^dx4", &names4).unwrap();
        let pi1 = parse_multivector("2*dx1^dx3 - dx2^dx4", &names4).unwrap();
        let r = check_formal_poisson(&TruncatedSeries::constant(pi.clone(), 2)).unwrap();
        assert!(r.is_integrable());
        let pl = TruncatedSeries::new(vec![pi.clone(), pi1, Multivector::zero(4, 2)]);
        assert!(check_formal_poisson(&pl).unwrap().is_integrable());
        // su(2) with π1 = x ∂y∧∂z... choose π1 with d_π π1 ≠ 0
        let pi1_bad = mv("x^2*dx^dy");
        let bad = TruncatedSeries::new(vec![su2(), pi1_bad.clone()]);
        let r = check_formal_poisson(&bad).unwrap();
        assert_eq!(r.defects[0].0, 1);
        let d = r.d_pi_pi1.unwrap();
        assert!(!d.is_zero());
        assert_eq!(r.defects[0].1, d.scale(&GaussianRational::from_int(2)));
    }

    #[test]
    fn gauge_shifts_first_order_term() {
        let names2: Vec<String> = vec!["x".into(), "y".into()];
        let pi = parse_multivector("dx^dy", &names2).unwrap();
        let x = parse_multivector("x*dx", &names2).unwrap();
        let pl = TruncatedSeries::new(vec![pi.clone(), Multivector::zero(2, 2), Multivector::zero(2, 2)]);
        let gens = derivation_generators(&[x.clone()]).unwrap();
        let t = EquivalenceTransform::exp(&gens, 2, 2).unwrap();
        let out = gauge_formal_poisson(&t, &pl).unwrap();
        assert_eq!(out.coeff(0), &pi);
        assert_eq!(*out.coeff(1), d_pi(&pi, &x).unwrap().neg());
        let id = EquivalenceTransform::identity(2, 2);
        assert_eq!(gauge_formal_poisson(&id, &pl).unwrap(), pl);
        let not_aut = EquivalenceTransform::first_order(MultiDiffOp::derivative(2, vec![2, 0], PolyFun::one(2)), 2).unwrap();
        assert_eq!(gauge_formal_poisson(&not_aut, &pl), Err(Error::NotDerivation(1)));
    }

    #[test]
    fn intertwining_closed_forms() {
        let names4: Vec<String> = (1..=4).map(|i| format!("x{i}")).collect();
        let pi = parse_multivector("dx1^dx2 + dx3^dx4", &names4).unwrap();
        // ω = d(x1^2 x3 dx2 + x4 dx1) is closed
        let alpha = OneForm::new(vec![
            parse_poly("x4", &names4).unwrap(),
            parse_poly("x1^2*x3", &names4).unwrap(),
            PolyFun::zero(4),
            parse_poly("x2*x3", &names4).unwrap(),
        ]);
        let omega = alpha.d();
        assert!(omega.is_closed());
        let b = pi_star_two_form(&pi, &omega);
        assert!(!b.is_zero());
        assert!(d_pi(&pi, &b).unwrap().is_zero());
    }

    mod laws {
        use super::*;
        use crate::random::{random_multivector, random_one_form, random_poly};
        use proptest::prelude::*;
        use rand::SeedableRng;
        use rand_chacha::ChaCha8Rng;

        fn sign(e: usize) -> GaussianRational {
            GaussianRational::from_int(if e % 2 == 0 { 1 } else { -1 })
        }

        fn shifted(d: usize) -> usize {
            // parity of d − 1
            (d + 1) % 2
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn graded_antisymmetry(seed in any::<u64>(), p in 0usize..=3, q in 0usize..=3) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = random_multivector(&mut rng, 3, p, 2);
                let b = random_multivector(&mut rng, 3, q, 2);
                let ab = schouten(&a, &b).unwrap();
                let ba = schouten(&b, &a).unwrap();
                prop_assert_eq!(ba, ab.scale(&sign(p * q)));
            }

            #[test]
            fn graded_jacobi(seed in any::<u64>(), p in 0usize..=2, q in 0usize..=2, r in 0usize..=2) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = random_multivector(&mut rng, 3, p, 2);
                let b = random_multivector(&mut rng, 3, q, 2);
                let c = random_multivector(&mut rng, 3, r, 2);
                let lhs = schouten(&a, &schouten(&b, &c).unwrap()).unwrap();
                let t1 = schouten(&schouten(&a, &b).unwrap(), &c).unwrap().scale(&sign(shifted(p)));
                let t2 = schouten(&b, &schouten(&a, &c).unwrap())
                    .unwrap()
                    .scale(&sign(shifted(p) * shifted(q)));
                prop_assert_eq!(lhs, t1.add(&t2));
            }

            #[test]
            fn d_pi_squares_to_zero(seed in any::<u64>(), k in 0usize..=2) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = random_multivector(&mut rng, 3, k, 2);
                for pi in [su2(), mv("dx^dy + x*dy^dz")] {
                    let da = d_pi(&pi, &a).unwrap();
                    prop_assert!(d_pi(&pi, &da).unwrap().is_zero());
                }
            }

            #[test]
            fn koszul_jacobi_and_anchor(seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let pi = su2();
                let a = random_one_form(&mut rng, 3, 1);
                let b = random_one_form(&mut rng, 3, 1);
                let c = random_one_form(&mut rng, 3, 1);
                let k = |u: &OneForm, v: &OneForm| koszul(&pi, u, v);
                let jac = k(&a, &k(&b, &c)).add(&k(&b, &k(&c, &a))).add(&k(&c, &k(&a, &b)));
                prop_assert!(jac.is_zero());
                // −π̃ is a homomorphism into the Lie algebra of vector fields
                let lhs = sharp(&pi, &k(&a, &b)).neg();
                let rhs = schouten(&sharp(&pi, &a).neg(), &sharp(&pi, &b).neg()).unwrap();
                prop_assert_eq!(lhs, rhs);
            }

            #[test]
            fn exact_forms_bracket(seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let pi = su2();
                let f = random_poly(&mut rng, 3, 3, 3);
                let g = random_poly(&mut rng, 3, 3, 3);
                let bracket = pi.contract(&[&OneForm::exact(&f), &OneForm::exact(&g)]);
                prop_assert_eq!(koszul(&pi, &OneForm::exact(&f), &OneForm::exact(&g)), OneForm::exact(&bracket));
                // X_f(g) = −{f, g}
                let xf = hamiltonian(&pi, &f);
                let xfg = OneForm::exact(&g).pair(&xf);
                prop_assert_eq!(xfg, -&bracket);
            }
        }
    }
}
