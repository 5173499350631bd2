//! Truncated formal power series in the deformation parameter λ and
//! equivalence transformations `T = id + Σ T_r λ^r`.

use std::fmt;

use crate::coeffring::PolyFun;
use crate::diffop::{factorial, DiffOp, MultiDiffOp};
use crate::error::{Error, Result};

/// Additive structure needed from series coefficients.
pub trait Coefficient: Clone + PartialEq + fmt::Debug {
    fn zero_like(&self) -> Self;
    fn is_zero(&self) -> bool;
    fn add_ref(&self, other: &Self) -> Self;
    fn neg_ref(&self) -> Self;
    fn sub_ref(&self, other: &Self) -> Self {
        self.add_ref(&other.neg_ref())
    }
}

impl Coefficient for PolyFun {
    fn zero_like(&self) -> Self {
        PolyFun::zero(self.dim())
    }
    fn is_zero(&self) -> bool {
        PolyFun::is_zero(self)
    }
    fn add_ref(&self, other: &Self) -> Self {
        self + other
    }
    fn neg_ref(&self) -> Self {
        -self
    }
    fn sub_ref(&self, other: &Self) -> Self {
        self - other
    }
}

/// `c_0 + c_1 λ + … + c_N λ^N`, exact modulo `λ^{N+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedSeries<T> {
    coeffs: Vec<T>,
}

impl<T: Coefficient> TruncatedSeries<T> {
    /// Builds a series of order `coeffs.len() - 1`.
    pub fn new(coeffs: Vec<T>) -> Self {
        assert!(!coeffs.is_empty(), "series needs at least one coefficient");
        TruncatedSeries { coeffs }
    }

    /// The constant series `c` at the given order.
    pub fn constant(c: T, order: usize) -> Self {
        let zero = c.zero_like();
        let mut coeffs = vec![c];
        coeffs.resize(order + 1, zero);
        TruncatedSeries { coeffs }
    }

    /// Pads with zeros or truncates to `order`.
    pub fn from_partial(mut coeffs: Vec<T>, order: usize, zero: T) -> Self {
        coeffs.resize(order + 1, zero);
        TruncatedSeries { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> &T {
        &self.coeffs[k]
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Coefficient::is_zero)
    }

    /// Index of the first nonzero coefficient.
    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    pub fn truncate(&self, order: usize) -> Self {
        let zero = self.coeffs[0].zero_like();
        TruncatedSeries::from_partial(self.coeffs.clone(), order, zero)
    }

    fn check_order(&self, other: &Self) -> Result<()> {
        if self.order() == other.order() {
            Ok(())
        } else {
            Err(Error::OrderMismatch {
                left: self.order(),
                right: other.order(),
            })
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        Ok(self.zip_with(other, T::add_ref))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        Ok(self.zip_with(other, T::sub_ref))
    }

    pub fn neg(&self) -> Self {
        self.map(T::neg_ref)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&T, &T) -> T) -> Self {
        TruncatedSeries {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn map<U: Coefficient>(&self, f: impl Fn(&T) -> U) -> TruncatedSeries<U> {
        TruncatedSeries {
            coeffs: self.coeffs.iter().map(f).collect(),
        }
    }

    /// Cauchy product truncated at the common order, with the bilinear
    /// coefficient product `mul`.
    pub fn mul_with<U, V>(
        &self,
        other: &TruncatedSeries<U>,
        mul: impl Fn(&T, &U) -> V,
    ) -> Result<TruncatedSeries<V>>
    where
        U: Coefficient,
        V: Coefficient,
    {
        if self.order() != other.order() {
            return Err(Error::OrderMismatch {
                left: self.order(),
                right: other.order(),
            });
        }
        let n = self.order();
        let mut coeffs: Vec<V> = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let mut acc: Option<V> = None;
            for i in 0..=k {
                let term = mul(&self.coeffs[i], &other.coeffs[k - i]);
                acc = Some(match acc {
                    None => term,
                    Some(a) => a.add_ref(&term),
                });
            }
            coeffs.push(acc.expect("k >= 0"));
        }
        Ok(TruncatedSeries { coeffs })
    }
}

/// Cauchy product of two series with a coefficient product `mul`.
pub fn series_mul<T: Coefficient>(
    a: &TruncatedSeries<T>,
    b: &TruncatedSeries<T>,
    mul: impl Fn(&T, &T) -> T,
) -> Result<TruncatedSeries<T>> {
    a.mul_with(b, mul)
}

impl<T: Coefficient + fmt::Display> fmt::Display for TruncatedSeries<T> {
    /// Prints `c0 + λ*(c1) + λ^2*(c2)`, omitting zero higher coefficients.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.coeffs[0])?;
        for (k, c) in self.coeffs.iter().enumerate().skip(1) {
            if c.is_zero() {
                continue;
            }
            if k == 1 {
                write!(f, " + λ*({c})")?;
            } else {
                write!(f, " + λ^{k}*({c})")?;
            }
        }
        Ok(())
    }
}

/// `T = id + Σ_{r≥1} T_r λ^r` with linear differential operators `T_r`.
#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceTransform {
    dim: usize,
    maps: Vec<DiffOp>,
}

impl EquivalenceTransform {
    pub fn identity(dim: usize, order: usize) -> Self {
        EquivalenceTransform {
            dim,
            maps: vec![MultiDiffOp::zero(dim, 1); order],
        }
    }

    /// From `T_1..T_N`; every map must be a linear operator of dimension `dim`.
    pub fn new(dim: usize, maps: Vec<DiffOp>) -> Result<Self> {
        for m in &maps {
            m.ensure_arity(1)?;
            crate::error::ensure_dim(dim, m.dim())?;
        }
        Ok(EquivalenceTransform { dim, maps })
    }

    /// `id + λ D` truncated at `order`.
    pub fn first_order(d: DiffOp, order: usize) -> Result<Self> {
        let dim = d.dim();
        let mut maps = vec![MultiDiffOp::zero(dim, 1); order];
        if order >= 1 {
            maps[0] = d;
        }
        EquivalenceTransform::new(dim, maps)
    }

    /// `exp(Σ_r D_r λ^r)` truncated at `order`, for generators `D_1, D_2, …`.
    pub fn exp(generators: &[DiffOp], dim: usize, order: usize) -> Result<Self> {
        for g in generators {
            g.ensure_arity(1)?;
            crate::error::ensure_dim(dim, g.dim())?;
        }
        let mut gen = vec![MultiDiffOp::zero(dim, 1); order + 1];
        for (r, g) in generators.iter().enumerate() {
            if r < order {
                gen[r + 1] = g.clone();
            }
        }
        let gen = TruncatedSeries::new(gen);
        let mut total = TruncatedSeries::constant(MultiDiffOp::identity(dim), order);
        let mut power = total.clone();
        for k in 1..=order as u32 {
            power = power.mul_with(&gen, compose)?;
            let inv = factorial(k).inv().expect("nonzero");
            total = total.add(&power.map(|op| op.scale(&inv)))?;
        }
        EquivalenceTransform::from_operator_series(&total)
    }

    fn from_operator_series(s: &TruncatedSeries<DiffOp>) -> Result<Self> {
        let dim = s.coeff(0).dim();
        if *s.coeff(0) != MultiDiffOp::identity(dim) {
            return Err(Error::Invalid("transformation must start with the identity".into()));
        }
        EquivalenceTransform::new(dim, s.coeffs()[1..].to_vec())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.maps.len()
    }

    /// `T_r` for `r ≥ 1`; `T_0` is the identity.
    pub fn map(&self, r: usize) -> DiffOp {
        if r == 0 {
            MultiDiffOp::identity(self.dim)
        } else {
            self.maps[r - 1].clone()
        }
    }

    pub fn maps(&self) -> &[DiffOp] {
        &self.maps
    }

    pub fn is_identity(&self) -> bool {
        self.maps.iter().all(MultiDiffOp::is_zero)
    }

    /// The full operator series `T_0 + T_1 λ + …`.
    pub fn as_series(&self) -> TruncatedSeries<DiffOp> {
        TruncatedSeries::new((0..=self.order()).map(|r| self.map(r)).collect())
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &EquivalenceTransform) -> Result<Self> {
        let s = self.as_series().mul_with(&other.as_series(), compose)?;
        EquivalenceTransform::from_operator_series(&s)
    }

    /// Order-by-order inverse: `U_k = -Σ_{r=1..k} T_r ∘ U_{k-r}`.
    pub fn inverse(&self) -> Self {
        let mut inv: Vec<DiffOp> = vec![MultiDiffOp::identity(self.dim)];
        for k in 1..=self.order() {
            let mut acc = MultiDiffOp::zero(self.dim, 1);
            for r in 1..=k {
                acc.sub_assign_ref(&compose(&self.maps[r - 1], &inv[k - r]));
            }
            inv.push(acc);
        }
        EquivalenceTransform {
            dim: self.dim,
            maps: inv.split_off(1),
        }
    }

    /// Applies `T` λ-linearly to a series of functions.
    pub fn apply(&self, f: &TruncatedSeries<PolyFun>) -> Result<TruncatedSeries<PolyFun>> {
        self.as_series().mul_with(f, |op, g| op.apply(g))
    }

    /// Applies `T` to a single function, giving a series at order N.
    pub fn apply_fn(&self, f: &PolyFun) -> TruncatedSeries<PolyFun> {
        TruncatedSeries::new((0..=self.order()).map(|r| self.map(r).apply(f)).collect())
    }

    /// Transports a series of bidifferential operators:
    /// `B'(f, g) = T^{-1}(B(Tf, Tg))`, i.e.
    /// `B'_k = Σ_{p+q+u+v=k} (T^{-1})_p ∘ B_q ∘ (T_u ⊗ T_v)`.
    pub fn conjugate(&self, ops: &TruncatedSeries<MultiDiffOp>) -> Result<TruncatedSeries<MultiDiffOp>> {
        if ops.order() != self.order() {
            return Err(Error::OrderMismatch {
                left: self.order(),
                right: ops.order(),
            });
        }
        let n = self.order();
        let inv = self.inverse();
        let dim = self.dim;
        let arity = ops.coeff(0).arity();
        let mut out = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let mut acc = MultiDiffOp::zero(dim, arity);
            for q in 0..=k {
                let b = ops.coeff(q);
                if b.is_zero() {
                    continue;
                }
                for (args, used) in slot_maps(self, arity, k - q) {
                    let refs: Vec<&DiffOp> = args.iter().collect();
                    let inner = b.apply_ops(&refs);
                    if inner.is_zero() {
                        continue;
                    }
                    let p = k - q - used;
                    acc.add_assign_ref(&inv.map(p).apply_ops(&[&inner]));
                }
            }
            out.push(acc);
        }
        Ok(TruncatedSeries::new(out))
    }

    /// True if `T_r` is a vector field (first-order, no zeroth-order term).
    pub fn is_derivation_at(&self, r: usize) -> bool {
        self.maps[r - 1].split_first_order().1.is_zero()
    }
}

/// All choices `(T_{u_1}, …, T_{u_a})` with `Σ u_i ≤ budget`, paired with
/// the total order used.
fn slot_maps(t: &EquivalenceTransform, arity: usize, budget: usize) -> Vec<(Vec<DiffOp>, usize)> {
    let mut out = vec![(Vec::new(), 0usize)];
    for _ in 0..arity {
        let mut next = Vec::new();
        for (args, used) in &out {
            for u in 0..=(budget - used) {
                let m = t.map(u);
                if u > 0 && m.is_zero() {
                    continue;
                }
                let mut a = args.clone();
                a.push(m);
                next.push((a, used + u));
            }
        }
        out = next;
    }
    out
}

/// Composition `a ∘ b` of linear differential operators.
pub fn compose(a: &DiffOp, b: &DiffOp) -> DiffOp {
    a.apply_ops(&[b])
}

/// Inverse of an equivalence transformation.
pub fn invert_transform(t: &EquivalenceTransform) -> EquivalenceTransform {
    t.inverse()
}

impl fmt::Display for EquivalenceTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("id")?;
        for (k, m) in self.maps.iter().enumerate() {
            if !m.is_zero() {
                write!(f, " + λ^{}*({})", k + 1, m)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffring::GaussianRational;
    use crate::literal::parse_poly;
    use proptest::prelude::*;

    fn names() -> Vec<String> {
        vec!["x".into(), "y".into()]
    }

    fn p(s: &str) -> PolyFun {
        parse_poly(s, &names()).unwrap()
    }

    fn s(cs: &[&str]) -> TruncatedSeries<PolyFun> {
        TruncatedSeries::new(cs.iter().map(|c| p(c)).collect())
    }

    fn mul(a: &PolyFun, b: &PolyFun) -> PolyFun {
        a * b
    }

    #[test]
    fn cauchy_product_examples() {
        assert_eq!(series_mul(&s(&["1", "x"]), &s(&["1", "-x"]), mul).unwrap(), s(&["1", "0"]));
        assert_eq!(series_mul(&s(&["x", "0", "0"]), &s(&["y", "0", "0"]), mul).unwrap(), s(&["x*y", "0", "0"]));
        assert_eq!(series_mul(&s(&["1", "1", "0"]), &s(&["1", "1", "0"]), mul).unwrap(), s(&["1", "2", "1"]));
        assert_eq!(
            series_mul(&s(&["1"]), &s(&["1", "1"]), mul),
            Err(Error::OrderMismatch { left: 0, right: 1 })
        );
    }

    #[test]
    fn print_format() {
        assert_eq!(s(&["x", "y", "1"]).to_string(), "x1 + λ*(x2) + λ^2*(1)");
    }

    fn dx() -> DiffOp {
        MultiDiffOp::derivative(2, vec![1, 0], PolyFun::one(2))
    }

    #[test]
    fn inverse_examples() {
        let id = EquivalenceTransform::identity(2, 2);
        assert_eq!(invert_transform(&id), id);

        let t1 = EquivalenceTransform::first_order(dx(), 1).unwrap();
        let expected1 = EquivalenceTransform::first_order(dx().neg(), 1).unwrap();
        assert_eq!(invert_transform(&t1), expected1);

        let t2 = EquivalenceTransform::first_order(dx(), 2).unwrap();
        let dxx = MultiDiffOp::derivative(2, vec![2, 0], PolyFun::one(2));
        let expected2 = EquivalenceTransform::new(2, vec![dx().neg(), dxx]).unwrap();
        let inv = invert_transform(&t2);
        assert_eq!(inv, expected2);
        // direct composition check at order 2
        assert!(t2.compose(&inv).unwrap().is_identity());
        assert!(inv.compose(&t2).unwrap().is_identity());
    }

    #[test]
    fn exp_of_vector_field() {
        // exp(λ x∂x) applied to x gives x(1 + λ + λ²/2)
        let xdx = MultiDiffOp::vector_field(&[p("x"), p("0")]);
        let t = EquivalenceTransform::exp(&[xdx], 2, 2).unwrap();
        assert_eq!(t.apply_fn(&p("x")), s(&["x", "x", "1/2*x"]));
        assert!(t.is_derivation_at(1));
        assert!(!t.is_derivation_at(2));
    }

    fn arb_op() -> impl Strategy<Value = DiffOp> {
        prop::collection::vec((0u32..3, 0u32..3, -2i64..=2, 0u32..2, 0u32..2), 1..4).prop_map(|ts| {
            MultiDiffOp::from_terms(
                2,
                1,
                ts.into_iter().map(|(a, b, c, ex, ey)| {
                    (
                        vec![vec![a, b]],
                        PolyFun::monomial(
                            2,
                            crate::coeffring::Monomial(vec![ex, ey]),
                            GaussianRational::from_int(c),
                        ),
                    )
                }),
            )
        })
    }

    fn arb_poly() -> impl Strategy<Value = PolyFun> {
        prop::collection::vec((0u32..4, 0u32..4, -3i64..=3), 0..5).prop_map(|ts| {
            PolyFun::from_terms(
                2,
                ts.into_iter().filter(|(a, b, _)| a + b <= 3).map(|(a, b, c)| {
                    (crate::coeffring::Monomial(vec![a, b]), GaussianRational::from_int(c))
                }),
            )
        })
    }

    proptest! {
        #[test]
        fn inverse_is_two_sided(t1 in arb_op(), t2 in arb_op(), f in arb_poly()) {
            let t = EquivalenceTransform::new(2, vec![t1, t2]).unwrap();
            let inv = t.inverse();
            let fs = TruncatedSeries::constant(f.clone(), 2);
            prop_assert_eq!(t.apply(&inv.apply(&fs).unwrap()).unwrap(), fs.clone());
            prop_assert_eq!(inv.apply(&t.apply(&fs).unwrap()).unwrap(), fs);
        }

        #[test]
        fn series_mul_associative(a in prop::collection::vec(arb_poly(), 3),
                                  b in prop::collection::vec(arb_poly(), 3),
                                  c in prop::collection::vec(arb_poly(), 3)) {
            let (a, b, c) = (TruncatedSeries::new(a), TruncatedSeries::new(b), TruncatedSeries::new(c));
            let left = series_mul(&series_mul(&a, &b, mul).unwrap(), &c, mul).unwrap();
            let right = series_mul(&a, &series_mul(&b, &c, mul).unwrap(), mul).unwrap();
            prop_assert_eq!(left, right);
        }
    }
}
