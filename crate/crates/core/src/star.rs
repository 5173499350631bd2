//! Star products `f ⋆ g = Σ_r C_r(f, g) λ^r` as truncated lists of
//! bidifferential operators.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};

use crate::coeffring::{unit_index, GaussianRational, Monomial, PolyFun};
use crate::diffop::{factorial, BidiffOp, MultiDiffOp, SlotIndex};
use crate::error::{ensure_dim, Error, Result};
use crate::linalg;
use crate::poisson::{is_poisson, Multivector, TwoForm};
use crate::series::{EquivalenceTransform, TruncatedSeries};

/// `⋆ = Σ_{r=0..N} C_r λ^r` with `C_0` the pointwise product.
#[derive(Clone, Debug, PartialEq)]
pub struct StarProduct {
    dim: usize,
    ops: Vec<BidiffOp>,
    claimed_pi: Multivector,
}

impl StarProduct {
    /// From `C_0..C_N`; `C_0` must be the pointwise product.
    pub fn new(ops: Vec<BidiffOp>, claimed_pi: Multivector) -> Result<Self> {
        let dim = claimed_pi.dim();
        if claimed_pi.degree() != 2 && !claimed_pi.is_zero() {
            return Err(Error::NotBivector(format!("degree {}", claimed_pi.degree())));
        }
        if ops.is_empty() {
            return Err(Error::Invalid("a star product needs at least C_0".into()));
        }
        for op in &ops {
            op.ensure_arity(2)?;
            ensure_dim(dim, op.dim())?;
        }
        if ops[0] != MultiDiffOp::product(dim, 2) {
            return Err(Error::Invalid("C_0 must be the pointwise product".into()));
        }
        Ok(StarProduct { dim, ops, claimed_pi })
    }

    /// From `C_0..C_N`, taking the bracket read off `C_1` as claimed bivector.
    pub fn from_ops(ops: Vec<BidiffOp>) -> Result<Self> {
        let dim = ops.first().map(MultiDiffOp::dim).unwrap_or(0);
        let pi = if ops.len() > 1 {
            Multivector::from_biderivation(&ops[1].skew())?
        } else {
            Multivector::zero(dim, 2)
        };
        StarProduct::new(ops, pi)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.ops.len() - 1
    }

    pub fn op(&self, r: usize) -> &BidiffOp {
        &self.ops[r]
    }

    pub fn ops(&self) -> &[BidiffOp] {
        &self.ops
    }

    pub fn claimed_pi(&self) -> &Multivector {
        &self.claimed_pi
    }

    pub fn as_series(&self) -> TruncatedSeries<BidiffOp> {
        TruncatedSeries::new(self.ops.clone())
    }

    pub fn truncate(&self, order: usize) -> StarProduct {
        StarProduct {
            dim: self.dim,
            ops: self.ops[..=order.min(self.order())].to_vec(),
            claimed_pi: self.claimed_pi.clone(),
        }
    }

    /// `F ⋆ G` for series truncated at the star product's order.
    pub fn mul(&self, f: &TruncatedSeries<PolyFun>, g: &TruncatedSeries<PolyFun>) -> Result<TruncatedSeries<PolyFun>> {
        if f.order() != self.order() || g.order() != self.order() {
            return Err(Error::OrderMismatch {
                left: self.order(),
                right: if f.order() != self.order() { f.order() } else { g.order() },
            });
        }
        ensure_dim(self.dim, f.coeff(0).dim())?;
        ensure_dim(self.dim, g.coeff(0).dim())?;
        let n = self.order();
        let mut out = vec![PolyFun::zero(self.dim); n + 1];
        for (r, op) in self.ops.iter().enumerate() {
            for a in 0..=(n - r) {
                for b in 0..=(n - r - a) {
                    let (fa, gb) = (f.coeff(a), g.coeff(b));
                    if fa.is_zero() || gb.is_zero() {
                        continue;
                    }
                    out[r + a + b].add_assign_ref(&op.eval(&[fa, gb]));
                }
            }
        }
        Ok(TruncatedSeries::new(out))
    }

    /// `f ⋆ g` for plain functions.
    pub fn mul_fn(&self, f: &PolyFun, g: &PolyFun) -> TruncatedSeries<PolyFun> {
        TruncatedSeries::new(self.ops.iter().map(|op| op.eval(&[f, g])).collect())
    }

    /// Coefficients of `λ^k` in `(f⋆g)⋆h − f⋆(g⋆h)` as tridifferential
    /// operators; only nonzero orders are listed.
    pub fn assoc_defect(&self) -> Vec<(usize, MultiDiffOp)> {
        (0..=self.order())
            .map(|k| (k, self.assoc_defect_at(k)))
            .filter(|(_, d)| !d.is_zero())
            .collect()
    }

    pub fn assoc_defect_at(&self, k: usize) -> MultiDiffOp {
        assoc_at(&self.ops, k, self.dim)
    }

    /// First order `r ≥ 1` where `C_r(1, ·)` or `C_r(·, 1)` is nonzero.
    pub fn unit_defect(&self) -> Option<usize> {
        let zero = vec![0u32; self.dim];
        (1..=self.order()).find(|&r| self.ops[r].terms().any(|(k, _)| k[0] == zero || k[1] == zero))
    }

    /// Checks `C_1(x_i, x_j) − C_1(x_j, x_i) = π^{ij}` for all coordinate
    /// pairs against the claimed bivector.
    pub fn commutator_holds(&self) -> bool {
        if self.order() == 0 {
            return self.claimed_pi.is_zero();
        }
        let c1 = &self.ops[1];
        for i in 0..self.dim {
            for j in 0..self.dim {
                let (xi, xj) = (PolyFun::var(self.dim, i), PolyFun::var(self.dim, j));
                let lhs = &c1.eval(&[&xi, &xj]) - &c1.eval(&[&xj, &xi]);
                let rhs = if i == j { PolyFun::zero(self.dim) } else { self.claimed_pi.entry(i, j) };
                if lhs != rhs {
                    return false;
                }
            }
        }
        true
    }
}

fn assoc_at(ops: &[BidiffOp], k: usize, dim: usize) -> MultiDiffOp {
    let id = MultiDiffOp::identity(dim);
    let mut acc = MultiDiffOp::zero(dim, 3);
    for p in 0..=k {
        let (cp, cq) = (&ops[p], &ops[k - p]);
        if cp.is_zero() || cq.is_zero() {
            continue;
        }
        acc.add_assign_ref(&cp.apply_ops(&[cq, &id]));
        acc.sub_assign_ref(&cp.apply_ops(&[&id, cq]));
    }
    acc
}

/// `F ⋆ G` mod `λ^{N+1}`.
pub fn star_mul(s: &StarProduct, f: &TruncatedSeries<PolyFun>, g: &TruncatedSeries<PolyFun>) -> Result<TruncatedSeries<PolyFun>> {
    s.mul(f, g)
}

pub fn assoc_defect(s: &StarProduct) -> Vec<(usize, MultiDiffOp)> {
    s.assoc_defect()
}

/// Product of constant-coefficient bidifferential symbols: derivatives
/// add slotwise, coefficients multiply.
fn symbol_mul(a: &BidiffOp, b: &BidiffOp) -> BidiffOp {
    let mut out = MultiDiffOp::zero(a.dim(), 2);
    for (ka, ca) in a.terms() {
        for (kb, cb) in b.terms() {
            let key: SlotIndex = ka
                .iter()
                .zip(kb)
                .map(|(x, y)| x.iter().zip(y).map(|(u, v)| u + v).collect())
                .collect();
            out.add_term(key, &(ca * cb));
        }
    }
    out
}

fn require_constant(pi: &Multivector) -> Result<()> {
    if pi.is_constant() {
        Ok(())
    } else {
        Err(Error::NonConstant)
    }
}

/// Moyal product of a constant bivector:
/// `C_r = (1/r!) (1/2)^r π^{i_1 j_1}…π^{i_r j_r} ∂_{i_1…i_r} ⊗ ∂_{j_1…j_r}`.
pub fn moyal(pi: &Multivector, order: usize) -> Result<StarProduct> {
    moyal_formal(&[pi.clone()], order)
}

/// Moyal formula applied λ-linearly to a formal constant bivector
/// `π_0 + λπ_1 + …`.
pub fn moyal_formal(pis: &[Multivector], order: usize) -> Result<StarProduct> {
    let first = pis.first().ok_or_else(|| Error::Invalid("empty bivector series".into()))?;
    let dim = first.dim();
    for p in pis {
        require_constant(p)?;
        ensure_dim(dim, p.dim())?;
        if p.degree() != 2 && !p.is_zero() {
            return Err(Error::NotBivector(format!("degree {}", p.degree())));
        }
    }
    let mut symbol = vec![MultiDiffOp::zero(dim, 2); order + 1];
    for (k, p) in pis.iter().enumerate().take(order + 1) {
        symbol[k] = if p.is_zero() { MultiDiffOp::zero(dim, 2) } else { p.to_bidiff() };
    }
    let symbol = TruncatedSeries::new(symbol);
    let mut ops = vec![MultiDiffOp::zero(dim, 2); order + 1];
    let mut power = TruncatedSeries::constant(MultiDiffOp::product(dim, 2), order);
    ops[0] = MultiDiffOp::product(dim, 2);
    for r in 1..=order {
        power = power.mul_with(&symbol, symbol_mul)?;
        let w = (factorial(r as u32) * GaussianRational::from_int(1 << r)).inv().expect("nonzero");
        // λ^r · power, truncated
        for k in 0..=(order - r) {
            ops[r + k].add_assign_ref(&power.coeff(k).scale(&w));
        }
    }
    StarProduct::new(ops, first.clone())
}

/// Second-order shapes of the ansatz for `C_2`.
fn kontsevich_shapes(pi: &Multivector) -> [BidiffOp; 3] {
    let dim = pi.dim();
    let e = |i: usize| unit_index(dim, i);
    let add = |a: &[u32], b: &[u32]| -> Vec<u32> { a.iter().zip(b).map(|(x, y)| x + y).collect() };
    let mut s1 = MultiDiffOp::zero(dim, 2);
    let mut s2 = MultiDiffOp::zero(dim, 2);
    let mut s3 = MultiDiffOp::zero(dim, 2);
    for i in 0..dim {
        for j in 0..dim {
            let pij = pi.entry(i, j);
            for k in 0..dim {
                for l in 0..dim {
                    let pkl = pi.entry(k, l);
                    s1.add_term(vec![add(&e(i), &e(k)), add(&e(j), &e(l))], &(&pij * &pkl));
                    let c = &pkl * &pij.partial(l).expect("in range");
                    s2.add_term(vec![add(&e(i), &e(k)), e(j)], &c);
                    s3.add_term(vec![e(i), add(&e(j), &e(k))], &c);
                }
            }
        }
    }
    [s1, s2, s3]
}

/// Coefficient vector of an operator, keyed by (slot index, monomial).
fn coefficient_map(op: &MultiDiffOp) -> BTreeMap<(SlotIndex, Monomial), GaussianRational> {
    let mut out = BTreeMap::new();
    for (k, c) in op.terms() {
        for (m, v) in c.terms() {
            out.insert((k.clone(), m.clone()), v.clone());
        }
    }
    out
}

/// Order-2 star product of a polynomial Poisson bivector:
/// `C_1 = ½π` and `C_2` solved from the λ²-associativity constraint within
/// the ansatz `w_1 ππ ∂∂⊗∂∂ + w_2 π∂π ∂∂⊗∂ + w_3 π∂π ∂⊗∂∂`.
pub fn kontsevich2(pi: &Multivector) -> Result<StarProduct> {
    if !is_poisson(pi) {
        return Err(Error::NotPoisson);
    }
    let dim = pi.dim();
    let c1 = pi.to_bidiff().scale(&GaussianRational::from_ratio(1, 2));
    let base = vec![MultiDiffOp::product(dim, 2), c1.clone(), MultiDiffOp::zero(dim, 2)];
    let shapes = kontsevich_shapes(pi);
    let constant = coefficient_map(&assoc_at(&base, 2, dim));
    let columns: Vec<BTreeMap<_, _>> = shapes
        .iter()
        .map(|s| {
            let ops = vec![MultiDiffOp::product(dim, 2), MultiDiffOp::zero(dim, 2), s.clone()];
            coefficient_map(&assoc_at(&ops, 2, dim))
        })
        .collect();
    let keys: BTreeSet<_> = constant.keys().chain(columns.iter().flat_map(|c| c.keys())).cloned().collect();
    let zero = GaussianRational::zero();
    let mut a = Vec::with_capacity(keys.len());
    let mut b = Vec::with_capacity(keys.len());
    for key in &keys {
        a.push(columns.iter().map(|c| c.get(key).unwrap_or(&zero).clone()).collect());
        b.push(-constant.get(key).unwrap_or(&zero));
    }
    let w = linalg::solve(&a, &b, shapes.len()).ok_or_else(|| {
        Error::AnsatzUnsolvable(format!("{} associativity constraints at order 2 are inconsistent", keys.len()))
    })?;
    let mut c2 = MultiDiffOp::zero(dim, 2);
    for (wk, s) in w.iter().zip(&shapes) {
        c2.add_assign_ref(&s.scale(wk));
    }
    let s = StarProduct::new(vec![MultiDiffOp::product(dim, 2), c1, c2], pi.clone())?;
    if let Some((k, d)) = s.assoc_defect().into_iter().next() {
        return Err(Error::AnsatzUnsolvable(format!(
            "defect at order {k}: {}",
            d.first_term().unwrap_or_default()
        )));
    }
    Ok(s)
}

/// Weights `(w_1, w_2, w_3)` of the solved order-2 ansatz, for inspection.
pub fn kontsevich2_weights(pi: &Multivector) -> Result<Vec<GaussianRational>> {
    let s = kontsevich2(pi)?;
    let shapes = kontsevich_shapes(pi);
    let target = coefficient_map(s.op(2));
    let maps: Vec<_> = shapes.iter().map(coefficient_map).collect();
    let keys: BTreeSet<_> = target.keys().chain(maps.iter().flat_map(|m| m.keys())).cloned().collect();
    let zero = GaussianRational::zero();
    let a: Vec<Vec<_>> = keys.iter().map(|k| maps.iter().map(|m| m.get(k).unwrap_or(&zero).clone()).collect()).collect();
    let b: Vec<_> = keys.iter().map(|k| target.get(k).unwrap_or(&zero).clone()).collect();
    linalg::solve(&a, &b, 3).ok_or_else(|| Error::AnsatzUnsolvable("weights".into()))
}

/// The bivector `(df, dg) ↦ C_1(f, g) − C_1(g, f)`.
pub fn bracket_of(s: &StarProduct) -> Result<Multivector> {
    if s.order() == 0 {
        return Ok(Multivector::zero(s.dim, 2));
    }
    Multivector::from_biderivation(&s.ops[1].skew())
}

/// `f ⋆' g = T^{-1}(T f ⋆ T g)`.
pub fn apply_equivalence(t: &EquivalenceTransform, s: &StarProduct) -> Result<StarProduct> {
    ensure_dim(t.dim(), s.dim)?;
    let t = if t.order() == s.order() {
        t.clone()
    } else {
        let mut maps = t.maps().to_vec();
        maps.resize(s.order(), MultiDiffOp::zero(s.dim, 1));
        EquivalenceTransform::new(s.dim, maps)?
    };
    let ops = t.conjugate(&s.as_series())?.into_coeffs();
    StarProduct::new(ops, s.claimed_pi.clone())
}

fn binomial_multi(m: &[u32], a: &[u32]) -> GaussianRational {
    let mut acc = GaussianRational::one();
    for (&mi, &ai) in m.iter().zip(a) {
        let mut c = 1i64;
        for k in 0..ai {
            c = c * i64::from(mi - k) / i64::from(k + 1);
        }
        acc = &acc * &GaussianRational::from_int(c);
    }
    acc
}

/// First-order map `T_1` with `C_1 + δT_1` skew, where
/// `δT(f, g) = f T(g) − T(fg) + T(f) g`.
pub fn c1_normalizer(c1: &BidiffOp) -> Result<MultiDiffOp> {
    let dim = c1.dim();
    let sym = c1.symmetric_part();
    let zero = vec![0u32; dim];
    let mut t = MultiDiffOp::zero(dim, 1);
    let mut seen: BTreeSet<Vec<u32>> = BTreeSet::new();
    for (k, c) in sym.terms() {
        let (a, b) = (&k[0], &k[1]);
        if *a == zero && *b == zero {
            t.add_term(vec![zero.clone()], &-c);
            continue;
        }
        if *a == zero || *b == zero {
            return Err(Error::NormalizationFailure(format!(
                "symmetric part of C_1 has a term without derivatives in one argument: {}",
                sym.first_term().unwrap_or_default()
            )));
        }
        let m: Vec<u32> = a.iter().zip(b).map(|(x, y)| x + y).collect();
        if seen.insert(m.clone()) {
            let w = binomial_multi(&m, a).inv().expect("nonzero binomial");
            t.add_term(vec![m], &c.scale(&w));
        }
    }
    let delta = coboundary(&t);
    if !c1.add(&delta).symmetric_part().is_zero() {
        return Err(Error::NormalizationFailure(
            "symmetric part of C_1 is not a Hochschild coboundary".into(),
        ));
    }
    Ok(t)
}

/// `δT(f, g) = f T(g) − T(fg) + T(f) g`.
pub fn coboundary(t: &MultiDiffOp) -> BidiffOp {
    let dim = t.dim();
    let id = MultiDiffOp::identity(dim);
    let mut out = id.tensor(t);
    out.add_assign_ref(&t.tensor(&id));
    out.sub_assign_ref(&t.apply_ops(&[&MultiDiffOp::product(dim, 2)]));
    out
}

/// Equivalent star product with `C_1 = ½{·,·}`, together with the
/// transformation `id + λT_1` used.
pub fn normalize_c1(s: &StarProduct) -> Result<(EquivalenceTransform, StarProduct)> {
    if s.order() == 0 {
        return Ok((EquivalenceTransform::identity(s.dim, 0), s.clone()));
    }
    let t1 = c1_normalizer(&s.ops[1])?;
    let t = EquivalenceTransform::first_order(t1, s.order())?;
    let out = apply_equivalence(&t, s)?;
    Ok((t, out))
}

/// `τ(df, dg) = (C_2 − C_2')(f, g) − (C_2 − C_2')(g, f)` after normalizing
/// both star products to `C_1 = C_1' = ½{·,·}`.
pub fn tau(s: &StarProduct, s2: &StarProduct) -> Result<Multivector> {
    ensure_dim(s.dim, s2.dim)?;
    if s.order() < 2 || s2.order() < 2 {
        return Err(Error::OrderMismatch {
            left: s.order(),
            right: s2.order(),
        });
    }
    let (_, a) = normalize_c1(&s.truncate(2))?;
    let (_, b) = normalize_c1(&s2.truncate(2))?;
    if a.ops[1] != b.ops[1] {
        let diff = a.ops[1].sub(&b.ops[1]);
        return Err(Error::C1Mismatch(diff.first_term().unwrap_or_default()));
    }
    Multivector::from_biderivation(&a.ops[2].sub(&b.ops[2]).skew())
}

/// Constant bivector as a matrix `Π = (π^{ij})`.
fn constant_matrix(pi: &Multivector) -> Result<linalg::Matrix> {
    require_constant(pi)?;
    let n = pi.dim();
    Ok((0..n).map(|i| (0..n).map(|j| pi.entry(i, j).constant_term()).collect()).collect())
}

/// The 2-form `τ̃ = Π^{-T} τ Π^{-1}`, characterised by
/// `τ̃(X_f, X_g) = τ(df, dg)`.
pub fn tau_tilde_of(tau: &Multivector, pi: &Multivector) -> Result<TwoForm> {
    let m = constant_matrix(pi)?;
    let inv = linalg::invert(&m).ok_or(Error::Degenerate)?;
    let n = pi.dim();
    let mut out = TwoForm::zero(n);
    for a in 0..n {
        for b in (a + 1)..n {
            let mut acc = PolyFun::zero(n);
            for i in 0..n {
                for j in 0..n {
                    let c = &inv[i][a] * &inv[j][b];
                    if !c.is_zero() {
                        acc.add_assign_ref(&tau.entry(i, j).scale(&c));
                    }
                }
            }
            out.set(a, b, acc);
        }
    }
    Ok(out)
}

pub fn tau_tilde(s: &StarProduct, s2: &StarProduct, pi: &Multivector) -> Result<TwoForm> {
    tau_tilde_of(&tau(s, s2)?, pi)
}
