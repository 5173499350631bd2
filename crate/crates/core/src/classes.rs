//! Bookkeeping for characteristic classes in a finite-dimensional model.
//!
//! Degree-two cohomology is modeled as `ℚ^b` with the standard integral
//! lattice `ℤ^b`. Classes may carry rational multiples of the formal unit
//! `u = 2π/im`; a class vector is stored as `twist·u + plain`, and `u` is
//! never evaluated.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{ensure_dim, Error, Result};

pub type QVec = Vec<BigRational>;
pub type QMat = Vec<Vec<BigRational>>;
pub type ZMat = Vec<Vec<BigInt>>;

/// Upper bound on the number of group elements enumerated by orbit searches.
pub const MAX_GROUP_SIZE: usize = 4096;

pub fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn is_integral(v: &[BigRational]) -> bool {
    v.iter().all(BigRational::is_integer)
}

fn mat_vec(m: &QMat, v: &[BigRational]) -> QVec {
    m.iter()
        .map(|row| row.iter().zip(v).fold(BigRational::zero(), |acc, (a, b)| acc + a * b))
        .collect()
}

fn zmat_vec(m: &ZMat, v: &[BigRational]) -> QVec {
    m.iter()
        .map(|row| {
            row.iter()
                .zip(v)
                .fold(BigRational::zero(), |acc, (a, b)| acc + BigRational::from_integer(a.clone()) * b)
        })
        .collect()
}

fn zmat_mul(a: &ZMat, b: &ZMat) -> ZMat {
    let n = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..n)
                .map(|j| row.iter().zip(b).fold(BigInt::zero(), |acc, (x, r)| acc + x * &r[j]))
                .collect()
        })
        .collect()
}

fn zidentity(b: usize) -> ZMat {
    (0..b)
        .map(|i| (0..b).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect()
}

/// Inverse over ℚ by Gauss–Jordan elimination.
fn rational_inverse(m: &ZMat) -> Option<QMat> {
    let n = m.len();
    let mut aug: QMat = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r: QVec = row.iter().cloned().map(BigRational::from_integer).collect();
            r.extend((0..n).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }));
            r
        })
        .collect();
    for col in 0..n {
        let p = (col..n).find(|&r| !aug[r][col].is_zero())?;
        aug.swap(col, p);
        let inv = aug[col][col].recip();
        for v in aug[col].iter_mut() {
            *v = &*v * &inv;
        }
        let pivot = aug[col].clone();
        for (r, row) in aug.iter_mut().enumerate() {
            if r != col && !row[col].is_zero() {
                let factor = row[col].clone();
                for (v, pv) in row.iter_mut().zip(&pivot) {
                    *v = &*v - &factor * pv;
                }
            }
        }
    }
    Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Inverse of a unimodular integer matrix.
fn unimodular_inverse(m: &ZMat) -> Option<ZMat> {
    let inv = rational_inverse(m)?;
    inv.into_iter()
        .map(|row| row.into_iter().map(|x| x.is_integer().then(|| x.to_integer())).collect())
        .collect()
}

/// Integer solution `k` of `a k = c`, if one exists.
///
/// Column operations bring `a` to a lower echelon form `a U = H`; then
/// `H y = c` is solved by forward substitution and `k = U y`.
pub fn integer_solution(a: &ZMat, c: &[BigInt]) -> Option<Vec<BigInt>> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut h = a.clone();
    let mut u = zidentity(cols);
    let mut pivots = Vec::new();
    let mut col = 0;
    for r in 0..rows {
        if col == cols {
            break;
        }
        loop {
            let nonzero: Vec<usize> = (col..cols).filter(|&j| !h[r][j].is_zero()).collect();
            if nonzero.len() <= 1 {
                if let Some(&j) = nonzero.first() {
                    swap_cols(&mut h, &mut u, col, j);
                    pivots.push((r, col));
                    col += 1;
                }
                break;
            }
            // Euclidean step between the two entries of smallest magnitude.
            let j = *nonzero.iter().min_by_key(|&&j| h[r][j].abs()).unwrap();
            let k = *nonzero.iter().find(|&&k| k != j).unwrap();
            let q = h[r][k].div_floor(&h[r][j]);
            for m in [&mut h, &mut u] {
                for row in m.iter_mut() {
                    let t = &row[j] * &q;
                    row[k] -= t;
                }
            }
        }
    }
    let mut y = vec![BigInt::zero(); cols];
    for &(r, j) in &pivots {
        let partial = (0..j).fold(BigInt::zero(), |acc, i| acc + &h[r][i] * &y[i]);
        let rest = &c[r] - partial;
        let (q, rem) = rest.div_rem(&h[r][j]);
        if !rem.is_zero() {
            return None;
        }
        y[j] = q;
    }
    let check = (0..rows).all(|r| (0..cols).fold(BigInt::zero(), |acc, i| acc + &h[r][i] * &y[i]) == c[r]);
    if !check {
        return None;
    }
    Some(
        u.iter()
            .map(|row| row.iter().zip(&y).fold(BigInt::zero(), |acc, (a, b)| acc + a * b))
            .collect(),
    )
}

fn swap_cols(h: &mut ZMat, u: &mut ZMat, a: usize, b: usize) {
    for row in h.iter_mut().chain(u.iter_mut()) {
        row.swap(a, b);
    }
}

/// A class vector `twist·u + plain` with `u = 2π/im`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TwistedClass {
    pub plain: QVec,
    pub twist: QVec,
}

impl TwistedClass {
    pub fn zero(b: usize) -> Self {
        TwistedClass {
            plain: vec![BigRational::zero(); b],
            twist: vec![BigRational::zero(); b],
        }
    }

    pub fn plain(v: QVec) -> Self {
        let b = v.len();
        TwistedClass { plain: v, twist: vec![BigRational::zero(); b] }
    }

    /// `u·v`.
    pub fn twisted(v: QVec) -> Self {
        let b = v.len();
        TwistedClass { plain: vec![BigRational::zero(); b], twist: v }
    }

    pub fn from_ints(plain: &[i64], twist: &[i64]) -> Self {
        TwistedClass {
            plain: plain.iter().map(|&n| rat(n)).collect(),
            twist: twist.iter().map(|&n| rat(n)).collect(),
        }
    }

    pub fn rank(&self) -> usize {
        self.plain.len()
    }

    pub fn is_zero(&self) -> bool {
        self.plain.iter().chain(&self.twist).all(Zero::is_zero)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        ensure_dim(self.rank(), other.rank())?;
        let add = |a: &QVec, b: &QVec| a.iter().zip(b).map(|(x, y)| x + y).collect();
        Ok(TwistedClass {
            plain: add(&self.plain, &other.plain),
            twist: add(&self.twist, &other.twist),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        TwistedClass {
            plain: self.plain.iter().map(|x| -x).collect(),
            twist: self.twist.iter().map(|x| -x).collect(),
        }
    }

    fn transform(&self, g: &ZMat) -> Self {
        TwistedClass {
            plain: zmat_vec(g, &self.plain),
            twist: zmat_vec(g, &self.twist),
        }
    }
}

fn fmt_rational(x: &BigRational) -> String {
    if x.is_integer() {
        x.to_string()
    } else {
        format!("({x})")
    }
}

fn fmt_twist(q: &BigRational) -> String {
    if q.is_one() {
        "u".into()
    } else if (-q).is_one() {
        "-u".into()
    } else {
        format!("{}u", fmt_rational(q))
    }
}

fn fmt_component(q: &BigRational, r: &BigRational) -> String {
    match (q.is_zero(), r.is_zero()) {
        (true, _) => r.to_string(),
        (false, true) => fmt_twist(q),
        (false, false) if r.is_negative() => format!("{} - {}", fmt_twist(q), fmt_rational(&-r)),
        (false, false) => format!("{} + {}", fmt_twist(q), fmt_rational(r)),
    }
}

impl fmt::Display for TwistedClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.twist.iter().zip(&self.plain).map(|(q, r)| fmt_component(q, r)).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// Cohomology model: `ℚ^b` with lattice `ℤ^b`, the map `π*` into the
/// Poisson-cohomology model, and generators of the lattice automorphisms
/// induced by diffeomorphisms.
#[derive(Clone, Debug, PartialEq)]
pub struct CohomModel {
    b: usize,
    pi_star: QMat,
    autos: Vec<ZMat>,
}

impl CohomModel {
    pub fn new(b: usize, pi_star: QMat, autos: Vec<ZMat>) -> Result<Self> {
        ensure_dim(pi_star.len(), b)?;
        for row in &pi_star {
            ensure_dim(row.len(), b)?;
        }
        for g in &autos {
            ensure_dim(g.len(), b)?;
            for row in g {
                ensure_dim(row.len(), b)?;
            }
            if unimodular_inverse(g).is_none() {
                return Err(Error::Invalid("lattice automorphism must be invertible over the integers".into()));
            }
        }
        Ok(CohomModel { b, pi_star, autos })
    }

    /// The symplectic model: `π*` is the identity and only the identity
    /// automorphism is known.
    pub fn symplectic(b: usize) -> Self {
        let id = zidentity(b).into_iter().map(|r| r.into_iter().map(BigRational::from_integer).collect()).collect();
        CohomModel { b, pi_star: id, autos: Vec::new() }
    }

    pub fn rank(&self) -> usize {
        self.b
    }

    pub fn pi_star(&self) -> &QMat {
        &self.pi_star
    }

    pub fn autos(&self) -> &[ZMat] {
        &self.autos
    }

    pub fn in_lattice(&self, v: &[BigRational]) -> bool {
        v.len() == self.b && is_integral(v)
    }

    fn require_lattice(&self, c1: &[BigRational]) -> Result<()> {
        ensure_dim(c1.len(), self.b)?;
        if !is_integral(c1) {
            return Err(Error::NotInLattice);
        }
        Ok(())
    }

    /// Elements of the group generated by the automorphisms and their
    /// inverses, in breadth-first order starting at the identity.
    pub fn group_elements(&self) -> Result<Vec<ZMat>> {
        let mut gens = Vec::new();
        for g in &self.autos {
            gens.push(g.clone());
            gens.push(unimodular_inverse(g).expect("validated on construction"));
        }
        let id = zidentity(self.b);
        let mut seen = BTreeSet::from([id.clone()]);
        let mut order = vec![id.clone()];
        let mut queue = VecDeque::from([id]);
        while let Some(h) = queue.pop_front() {
            for g in &gens {
                let next = zmat_mul(g, &h);
                if seen.insert(next.clone()) {
                    if seen.len() > MAX_GROUP_SIZE {
                        return Err(Error::Invalid(format!(
                            "automorphism group has more than {MAX_GROUP_SIZE} elements"
                        )));
                    }
                    order.push(next.clone());
                    queue.push_back(next);
                }
            }
        }
        Ok(order)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassMode {
    /// Leading coefficient is the symplectic class `[ω]`.
    Symplectic,
    /// Coefficients are the classes of the terms of a formal Poisson structure.
    Poisson,
}

/// Truncated series `Σ c_r λ^r` of class vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct CharClassSeries {
    pub mode: ClassMode,
    pub coeffs: Vec<TwistedClass>,
}

impl CharClassSeries {
    pub fn new(mode: ClassMode, coeffs: Vec<TwistedClass>) -> Result<Self> {
        let Some(first) = coeffs.first() else {
            return Err(Error::Invalid("class series needs a λ⁰ coefficient".into()));
        };
        let b = first.rank();
        for c in &coeffs {
            ensure_dim(c.rank(), b)?;
        }
        Ok(CharClassSeries { mode, coeffs })
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn rank(&self) -> usize {
        self.coeffs[0].rank()
    }
}

/// The semiclassical limit: the `λ¹` coefficient.
pub fn semiclassical_s(c: &CharClassSeries) -> Result<TwistedClass> {
    c.coeffs
        .get(1)
        .cloned()
        .ok_or(Error::OrderMismatch { left: c.order(), right: 1 })
}

/// `α + u·c1`.
pub fn phi_hat_symplectic(m: &CohomModel, alpha: &TwistedClass, c1: &[BigRational]) -> Result<TwistedClass> {
    m.require_lattice(c1)?;
    alpha.add(&TwistedClass::twisted(c1.to_vec()))
}

/// `α − u·π*(c1)`.
///
/// The sign is opposite to [`phi_hat_symplectic`] even when `π*` is the
/// identity; both maps are kept in the form in which they are usually
/// stated.
pub fn phi_hat_poisson(m: &CohomModel, alpha: &TwistedClass, c1: &[BigRational]) -> Result<TwistedClass> {
    m.require_lattice(c1)?;
    alpha.sub(&TwistedClass::twisted(mat_vec(&m.pi_star, c1)))
}

/// A class of deformations of the zero Poisson structure: either the trivial
/// deformation or a class in the stratum `m ≥ 1` whose leading term is
/// `λ^m π_m`.
#[derive(Clone, Debug, PartialEq)]
pub enum ZeroStratumClass {
    Trivial,
    Stratum { m: usize, class: TwistedClass },
}

/// Action on a stratum class, with the model's `π*` standing for `π_m*`.
/// The trivial class is fixed.
pub fn phi_hat_zero_stratum(
    model: &CohomModel,
    alpha: &ZeroStratumClass,
    c1: &[BigRational],
) -> Result<ZeroStratumClass> {
    model.require_lattice(c1)?;
    match alpha {
        ZeroStratumClass::Trivial => Ok(ZeroStratumClass::Trivial),
        ZeroStratumClass::Stratum { m: 0, .. } => Err(Error::Invalid("strata are numbered from 1".into())),
        ZeroStratumClass::Stratum { m, class } => Ok(ZeroStratumClass::Stratum {
            m: *m,
            class: phi_hat_poisson(model, class, c1)?,
        }),
    }
}

/// Whether `(im/2π)·t0` can be moved into the lattice by the automorphism
/// group. `t0` must be a pure multiple of `u`; a nonzero plain part gives
/// `false`.
///
/// Every automorphism preserves `ℤ^b`, so this holds exactly when the
/// `u`-coefficient of `t0` is integral.
pub fn orbit_equivalent(m: &CohomModel, t0: &TwistedClass) -> bool {
    t0.rank() == m.b && t0.plain.iter().all(Zero::is_zero) && m.in_lattice(&t0.twist)
}

/// Whether some automorphism `g` satisfies `(im/2π)(c − g·c2) ∈ ℤ^b`.
/// This is an equivalence relation on class vectors.
pub fn classes_related(m: &CohomModel, c: &TwistedClass, c2: &TwistedClass) -> Result<bool> {
    ensure_dim(c.rank(), m.b)?;
    ensure_dim(c2.rank(), m.b)?;
    for g in m.group_elements()? {
        if orbit_equivalent(m, &c.sub(&c2.transform(&g))?) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// `c − c2`, defined when both series share mode, order and `λ⁰` class.
pub fn relative_class(c: &CharClassSeries, c2: &CharClassSeries) -> Result<CharClassSeries> {
    if c.mode != c2.mode {
        return Err(Error::Invalid("class series have different modes".into()));
    }
    if c.order() != c2.order() {
        return Err(Error::OrderMismatch { left: c.order(), right: c2.order() });
    }
    if c.coeffs[0] != c2.coeffs[0] {
        return Err(Error::Invalid(format!(
            "λ⁰ classes differ: {} vs {}",
            c.coeffs[0], c2.coeffs[0]
        )));
    }
    let coeffs = c.coeffs.iter().zip(&c2.coeffs).map(|(a, b)| a.sub(b)).collect::<Result<_>>()?;
    CharClassSeries::new(c.mode, coeffs)
}

/// Whether `α = u·π*(k)` for an integer vector `k`, the sufficient
/// condition for shifting an extendable first-order term by `α`. `false`
/// means only that the condition is not met.
pub fn poisson_def_extension_check(m: &CohomModel, alpha: &TwistedClass) -> Result<bool> {
    ensure_dim(alpha.rank(), m.b)?;
    if alpha.plain.iter().any(|x| !x.is_zero()) {
        return Ok(false);
    }
    let den = m
        .pi_star
        .iter()
        .flatten()
        .chain(&alpha.twist)
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let scale = BigRational::from_integer(den);
    let a: ZMat = m
        .pi_star
        .iter()
        .map(|row| row.iter().map(|x| (x * &scale).to_integer()).collect())
        .collect();
    let c: Vec<BigInt> = alpha.twist.iter().map(|x| (x * &scale).to_integer()).collect();
    Ok(integer_solution(&a, &c).is_some())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(v: &[i64]) -> QVec {
        v.iter().map(|&n| rat(n)).collect()
    }

    fn zm(rows: &[&[i64]]) -> ZMat {
        rows.iter().map(|r| r.iter().map(|&n| BigInt::from(n)).collect()).collect()
    }

    fn qm(rows: &[&[i64]]) -> QMat {
        rows.iter().map(|r| q(r)).collect()
    }

    fn series(mode: ClassMode, coeffs: &[&[i64]]) -> CharClassSeries {
        CharClassSeries::new(mode, coeffs.iter().map(|c| TwistedClass::plain(q(c))).collect()).unwrap()
    }

    #[test]
    fn semiclassical_limit() {
        let c = series(ClassMode::Symplectic, &[&[1], &[3], &[5]]);
        assert_eq!(semiclassical_s(&c).unwrap(), TwistedClass::plain(q(&[3])));
        let flat = series(ClassMode::Symplectic, &[&[1], &[0]]);
        assert!(semiclassical_s(&flat).unwrap().is_zero());
        let short = series(ClassMode::Symplectic, &[&[1]]);
        assert!(matches!(semiclassical_s(&short), Err(Error::OrderMismatch { .. })));
    }

    #[test]
    fn symplectic_action() {
        let m = CohomModel::symplectic(1);
        let zero = TwistedClass::zero(1);
        assert_eq!(phi_hat_symplectic(&m, &zero, &q(&[0])).unwrap(), zero);
        assert_eq!(phi_hat_symplectic(&m, &zero, &q(&[1])).unwrap(), TwistedClass::twisted(q(&[1])));
        assert_eq!(phi_hat_symplectic(&m, &zero, &[ratio(1, 2)]), Err(Error::NotInLattice));
    }

    #[test]
    fn poisson_action() {
        let alpha = TwistedClass::from_ints(&[2, 1], &[0, 0]);
        let trivial = CohomModel::new(2, qm(&[&[0, 0], &[0, 0]]), vec![]).unwrap();
        assert_eq!(phi_hat_poisson(&trivial, &alpha, &q(&[5, -3])).unwrap(), alpha);
        let m = CohomModel::symplectic(2);
        assert_eq!(
            phi_hat_poisson(&m, &alpha, &q(&[1, 0])).unwrap(),
            TwistedClass::from_ints(&[2, 1], &[-1, 0])
        );
        // Same model, opposite sign to the symplectic action.
        assert_eq!(
            phi_hat_symplectic(&m, &alpha, &q(&[1, 0])).unwrap(),
            TwistedClass::from_ints(&[2, 1], &[1, 0])
        );
    }

    #[test]
    fn zero_stratum_action() {
        let m = CohomModel::symplectic(1);
        let class = ZeroStratumClass::Stratum { m: 2, class: TwistedClass::plain(q(&[4])) };
        assert_eq!(phi_hat_zero_stratum(&m, &class, &q(&[0])).unwrap(), class);
        assert_eq!(phi_hat_zero_stratum(&m, &ZeroStratumClass::Trivial, &q(&[7])).unwrap(), ZeroStratumClass::Trivial);
        assert_eq!(
            phi_hat_zero_stratum(&m, &class, &q(&[1])).unwrap(),
            ZeroStratumClass::Stratum { m: 2, class: TwistedClass::from_ints(&[4], &[-1]) }
        );
        let bad = ZeroStratumClass::Stratum { m: 0, class: TwistedClass::zero(1) };
        assert!(phi_hat_zero_stratum(&m, &bad, &q(&[1])).is_err());
    }

    #[test]
    fn orbit_examples() {
        let m = CohomModel::symplectic(1);
        assert!(orbit_equivalent(&m, &TwistedClass::zero(1)));
        assert!(orbit_equivalent(&m, &TwistedClass::twisted(q(&[3]))));
        assert!(!orbit_equivalent(&m, &TwistedClass::twisted(vec![ratio(1, 2)])));
        let flip = CohomModel::new(1, qm(&[&[1]]), vec![zm(&[&[-1]])]).unwrap();
        assert_eq!(flip.group_elements().unwrap().len(), 2);
        assert!(orbit_equivalent(&flip, &TwistedClass::twisted(q(&[-2]))));
    }

    #[test]
    fn relation_uses_the_group() {
        let swap = CohomModel::new(2, qm(&[&[1, 0], &[0, 1]]), vec![zm(&[&[0, 1], &[1, 0]])]).unwrap();
        let a = TwistedClass::from_ints(&[1, 0], &[0, 0]);
        let b = TwistedClass::from_ints(&[0, 1], &[0, 0]);
        assert!(classes_related(&swap, &a, &b).unwrap());
        assert!(!classes_related(&CohomModel::symplectic(2), &a, &b).unwrap());
        let half = TwistedClass { plain: q(&[0, 1]), twist: vec![ratio(1, 2), rat(3)] };
        assert!(!classes_related(&swap, &a, &half).unwrap());
        let shear = CohomModel::new(2, qm(&[&[1, 0], &[0, 1]]), vec![zm(&[&[1, 1], &[0, 1]])]).unwrap();
        assert!(shear.group_elements().is_err());
        assert!(CohomModel::new(1, qm(&[&[1]]), vec![zm(&[&[2]])]).is_err());
    }

    #[test]
    fn relative_classes() {
        let c = series(ClassMode::Symplectic, &[&[1], &[3]]);
        let c2 = series(ClassMode::Symplectic, &[&[1], &[5]]);
        assert!(relative_class(&c, &c).unwrap().coeffs.iter().all(TwistedClass::is_zero));
        let t = relative_class(&c, &c2).unwrap();
        assert!(t.coeffs[0].is_zero());
        assert_eq!(t.coeffs[1], TwistedClass::plain(q(&[-2])));
        let other = series(ClassMode::Symplectic, &[&[2], &[5]]);
        assert!(relative_class(&c, &other).is_err());
        let poisson = series(ClassMode::Poisson, &[&[1], &[3]]);
        assert!(relative_class(&c, &poisson).is_err());
    }

    #[test]
    fn relative_class_matches_tau() {
        use crate::poisson::parse_multivector;
        use crate::star::{moyal, moyal_formal, tau};

        let names: Vec<String> = vec!["x".into(), "y".into()];
        let pi = parse_multivector("dx^dy", &names).unwrap();
        let rho = parse_multivector("3*dx^dy", &names).unwrap();
        let s = moyal(&pi, 2).unwrap();
        let s2 = moyal_formal(&[pi.clone(), rho.clone()], 2).unwrap();
        let t = tau(&s, &s2).unwrap();

        // One basis class: the constant bivector dx^dy.
        let coeff = |m: &crate::poisson::Multivector| {
            let c = m.entry(0, 1);
            assert!(c.is_constant());
            let k = c.constant_term();
            assert!(k.is_real());
            k.re
        };
        let ch = CharClassSeries::new(
            ClassMode::Poisson,
            vec![TwistedClass::plain(vec![coeff(&pi)]), TwistedClass::zero(1)],
        )
        .unwrap();
        let ch2 = CharClassSeries::new(
            ClassMode::Poisson,
            vec![TwistedClass::plain(vec![coeff(&pi)]), TwistedClass::plain(vec![coeff(&rho)])],
        )
        .unwrap();
        let t0 = semiclassical_s(&relative_class(&ch, &ch2).unwrap()).unwrap();
        assert_eq!(t0, TwistedClass::plain(vec![coeff(&t)]));
    }

    #[test]
    fn integer_systems() {
        let a = zm(&[&[2, 0], &[0, 3]]);
        let c = |v: &[i64]| v.iter().map(|&n| BigInt::from(n)).collect::<Vec<_>>();
        assert_eq!(integer_solution(&a, &c(&[4, 9])), Some(c(&[2, 3])));
        assert_eq!(integer_solution(&a, &c(&[3, 9])), None);
        let b = zm(&[&[2, 3]]);
        let k = integer_solution(&b, &c(&[1])).unwrap();
        assert_eq!(&k[0] * 2 + &k[1] * 3, BigInt::from(1));
        let singular = zm(&[&[1, 1], &[1, 1]]);
        assert_eq!(integer_solution(&singular, &c(&[1, 2])), None);
    }

    #[test]
    fn extension_condition() {
        let m = CohomModel::new(2, qm(&[&[2, 0], &[1, 1]]), vec![]).unwrap();
        assert!(poisson_def_extension_check(&m, &TwistedClass::zero(2)).unwrap());
        let image = TwistedClass::twisted(mat_vec(m.pi_star(), &q(&[1, 0])));
        assert!(poisson_def_extension_check(&m, &image).unwrap());
        assert!(!poisson_def_extension_check(&m, &TwistedClass::twisted(q(&[1, 0]))).unwrap());
        assert!(!poisson_def_extension_check(&m, &TwistedClass::twisted(vec![ratio(1, 3), rat(0)])).unwrap());
        assert!(!poisson_def_extension_check(&m, &TwistedClass::plain(q(&[2, 1]))).unwrap());
    }

    #[test]
    fn display() {
        let c = TwistedClass { plain: vec![rat(3), rat(0), rat(-1)], twist: vec![ratio(1, 2), rat(2), rat(0)] };
        assert_eq!(c.to_string(), "[(1/2)u + 3, 2u, -1]");
        assert_eq!(TwistedClass::from_ints(&[0, 2, -3], &[-1, 1, -2]).to_string(), "[-u, u + 2, -2u - 3]");
    }

    fn small_vec(b: usize) -> impl Strategy<Value = QVec> {
        prop::collection::vec((-5i64..=5, 1i64..=3), b).prop_map(|v| v.into_iter().map(|(n, d)| ratio(n, d)).collect())
    }

    fn lattice_vec(b: usize) -> impl Strategy<Value = QVec> {
        prop::collection::vec(-5i64..=5, b).prop_map(|v| q(&v))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn actions_are_group_actions(
            plain in small_vec(2), twist in small_vec(2),
            c in lattice_vec(2), c2 in lattice_vec(2),
            p in prop::collection::vec(-3i64..=3, 4),
        ) {
            let alpha = TwistedClass { plain, twist };
            let sum: QVec = c.iter().zip(&c2).map(|(a, b)| a + b).collect();
            let sym = CohomModel::symplectic(2);
            let pm = CohomModel::new(2, qm(&[&p[..2], &p[2..]]), vec![]).unwrap();
            let twice = phi_hat_symplectic(&sym, &phi_hat_symplectic(&sym, &alpha, &c).unwrap(), &c2).unwrap();
            prop_assert_eq!(twice, phi_hat_symplectic(&sym, &alpha, &sum).unwrap());
            let twice = phi_hat_poisson(&pm, &phi_hat_poisson(&pm, &alpha, &c).unwrap(), &c2).unwrap();
            prop_assert_eq!(twice, phi_hat_poisson(&pm, &alpha, &sum).unwrap());
            prop_assert_eq!(phi_hat_poisson(&pm, &alpha, &q(&[0, 0])).unwrap(), alpha.clone());
            // With π* = id the two actions differ only by the sign of the shift.
            let a = phi_hat_symplectic(&sym, &alpha, &c).unwrap().sub(&alpha).unwrap();
            let b = phi_hat_poisson(&sym, &alpha, &c).unwrap().sub(&alpha).unwrap();
            prop_assert_eq!(a, b.neg());
        }

        #[test]
        fn relation_is_an_equivalence(
            a in small_vec(2), b in small_vec(2), c in small_vec(2),
            ta in lattice_vec(2), tb in lattice_vec(2),
        ) {
            let m = CohomModel::new(2, qm(&[&[1, 0], &[0, 1]]), vec![zm(&[&[0, 1], &[1, 0]]), zm(&[&[-1, 0], &[0, 1]])]).unwrap();
            let x = TwistedClass::twisted(a.clone());
            let y = TwistedClass::twisted(a.iter().rev().zip(&ta).map(|(u, v)| u + v).collect());
            let z = TwistedClass::twisted(b.iter().zip(&tb).map(|(u, v)| u + v).collect());
            let w = TwistedClass::twisted(c);
            prop_assert!(classes_related(&m, &x, &x).unwrap());
            prop_assert!(classes_related(&m, &x, &y).unwrap());
            for (p, r) in [(&x, &z), (&y, &z), (&x, &w), (&z, &w)] {
                prop_assert_eq!(classes_related(&m, p, r).unwrap(), classes_related(&m, r, p).unwrap());
            }
            if classes_related(&m, &x, &z).unwrap() {
                prop_assert!(classes_related(&m, &y, &z).unwrap());
            }
        }
    }
}
