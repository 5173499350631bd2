//! Multidifferential operators with polynomial coefficients.
//!
//! An operator of arity `k` is a finite sum
//! `(f_1, ..., f_k) ↦ Σ c(x) · ∂^{a_1} f_1 ⋯ ∂^{a_k} f_k`.
//! Arity 0 operators are plain polynomials, arity 1 are linear differential
//! operators, arity 2 bidifferential operators and so on. Composition
//! expands derivatives of products with the Leibniz rule, so every
//! identity between operators is decided exactly by comparing term maps.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::One;

use crate::coeffring::{default_names, GaussianRational, PolyFun};
use crate::error::{Error, Result};

/// Multi-indices for each argument slot.
pub type SlotIndex = Vec<Vec<u32>>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiDiffOp {
    dim: usize,
    arity: usize,
    terms: BTreeMap<SlotIndex, PolyFun>,
}

/// Bidifferential operator `(f, g) ↦ Σ c ∂^a f ∂^b g`.
pub type BidiffOp = MultiDiffOp;
/// Linear differential operator `f ↦ Σ c ∂^a f`.
pub type DiffOp = MultiDiffOp;

impl MultiDiffOp {
    pub fn zero(dim: usize, arity: usize) -> Self {
        MultiDiffOp {
            dim,
            arity,
            terms: BTreeMap::new(),
        }
    }

    /// Arity-0 operator holding the polynomial `p`.
    pub fn constant(p: PolyFun) -> Self {
        let mut op = MultiDiffOp::zero(p.dim(), 0);
        op.add_term(Vec::new(), &p);
        op
    }

    /// The identity `f ↦ f`.
    pub fn identity(dim: usize) -> Self {
        MultiDiffOp::derivative(dim, vec![0; dim], PolyFun::one(dim))
    }

    /// `f ↦ c · ∂^a f`.
    pub fn derivative(dim: usize, a: Vec<u32>, c: PolyFun) -> Self {
        let mut op = MultiDiffOp::zero(dim, 1);
        op.add_term(vec![a], &c);
        op
    }

    /// Pointwise product `(f_1..f_k) ↦ f_1 ⋯ f_k`.
    pub fn product(dim: usize, arity: usize) -> Self {
        let mut op = MultiDiffOp::zero(dim, arity);
        op.add_term(vec![vec![0; dim]; arity], &PolyFun::one(dim));
        op
    }

    /// First-order operator `f ↦ Σ X^i ∂_i f` of a vector field.
    pub fn vector_field(components: &[PolyFun]) -> Self {
        let dim = components.len();
        let mut op = MultiDiffOp::zero(dim, 1);
        for (i, c) in components.iter().enumerate() {
            op.add_term(vec![crate::coeffring::unit_index(dim, i)], c);
        }
        op
    }

    pub fn from_terms<I>(dim: usize, arity: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (SlotIndex, PolyFun)>,
    {
        let mut op = MultiDiffOp::zero(dim, arity);
        for (k, c) in terms {
            op.add_term(k, &c);
        }
        op
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn arity(&self) -> usize {
        self.arity
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

    pub fn terms(&self) -> impl Iterator<Item = (&SlotIndex, &PolyFun)> {
        self.terms.iter()
    }

    pub fn coeff(&self, key: &SlotIndex) -> PolyFun {
        self.terms
            .get(key)
            .cloned()
            .unwrap_or_else(|| PolyFun::zero(self.dim))
    }

    /// The polynomial carried by an arity-0 operator.
    pub fn as_poly(&self) -> PolyFun {
        assert_eq!(self.arity, 0, "as_poly on operator of arity {}", self.arity);
        self.coeff(&Vec::new())
    }

    /// Highest derivative order appearing in slot `slot`.
    pub fn slot_order(&self, slot: usize) -> u32 {
        self.terms
            .keys()
            .map(|k| k[slot].iter().sum())
            .max()
            .unwrap_or(0)
    }

    pub fn add_term(&mut self, key: SlotIndex, c: &PolyFun) {
        debug_assert_eq!(key.len(), self.arity);
        assert_eq!(c.dim(), self.dim, "operator dimension mismatch");
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&key) {
            Some(v) => {
                v.add_assign_ref(c);
                if v.is_zero() {
                    self.terms.remove(&key);
                }
            }
            None => {
                self.terms.insert(key, c.clone());
            }
        }
    }

    pub fn add_assign_ref(&mut self, other: &MultiDiffOp) {
        self.check_compatible(other);
        for (k, c) in &other.terms {
            self.add_term(k.clone(), c);
        }
    }

    pub fn sub_assign_ref(&mut self, other: &MultiDiffOp) {
        self.check_compatible(other);
        for (k, c) in &other.terms {
            self.add_term(k.clone(), &-c);
        }
    }

    fn check_compatible(&self, other: &MultiDiffOp) {
        assert_eq!(self.dim, other.dim, "operator dimension mismatch");
        assert_eq!(self.arity, other.arity, "operator arity mismatch");
    }

    pub fn add(&self, other: &MultiDiffOp) -> MultiDiffOp {
        let mut out = self.clone();
        out.add_assign_ref(other);
        out
    }

    pub fn sub(&self, other: &MultiDiffOp) -> MultiDiffOp {
        let mut out = self.clone();
        out.sub_assign_ref(other);
        out
    }

    pub fn neg(&self) -> MultiDiffOp {
        self.scale(&GaussianRational::from_int(-1))
    }

    pub fn scale(&self, c: &GaussianRational) -> MultiDiffOp {
        self.mul_poly(&PolyFun::constant(self.dim, c.clone()))
    }

    /// Multiplies every coefficient by the function `p`.
    pub fn mul_poly(&self, p: &PolyFun) -> MultiDiffOp {
        let mut out = MultiDiffOp::zero(self.dim, self.arity);
        for (k, c) in &self.terms {
            out.add_term(k.clone(), &(c * p));
        }
        out
    }

    /// Reorders argument slots: slot `i` of the result is slot `perm[i]`
    /// of `self`.
    pub fn permute(&self, perm: &[usize]) -> MultiDiffOp {
        assert_eq!(perm.len(), self.arity);
        let mut out = MultiDiffOp::zero(self.dim, self.arity);
        for (k, c) in &self.terms {
            let key = perm.iter().map(|&p| k[p].clone()).collect();
            out.add_term(key, c);
        }
        out
    }

    /// `(f, g) ↦ B(g, f)` for a bidifferential operator.
    pub fn swap_args(&self) -> MultiDiffOp {
        self.permute(&[1, 0])
    }

    /// Tensor product: `(f.., g..) ↦ A(f..) · B(g..)`.
    pub fn tensor(&self, other: &MultiDiffOp) -> MultiDiffOp {
        assert_eq!(self.dim, other.dim, "operator dimension mismatch");
        let mut out = MultiDiffOp::zero(self.dim, self.arity + other.arity);
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                let mut key = ka.clone();
                key.extend(kb.iter().cloned());
                out.add_term(key, &(ca * cb));
            }
        }
        out
    }

    /// The operator `∂^m ∘ self`, expanded by the Leibniz rule.
    pub fn derive(&self, m: &[u32]) -> MultiDiffOp {
        assert_eq!(m.len(), self.dim);
        if m.iter().all(|&k| k == 0) {
            return self.clone();
        }
        let splits = leibniz_splits(m, self.arity + 1);
        let mut out = MultiDiffOp::zero(self.dim, self.arity);
        for (key, c) in &self.terms {
            for (parts, weight) in &splits {
                let dc = c.partial_multi(&parts[0]);
                if dc.is_zero() {
                    continue;
                }
                let new_key: SlotIndex = key
                    .iter()
                    .zip(&parts[1..])
                    .map(|(a, p)| a.iter().zip(p).map(|(x, y)| x + y).collect())
                    .collect();
                out.add_term(new_key, &dc.scale(weight));
            }
        }
        out
    }

    /// Substitutes operators into every slot:
    /// `self(args[0](..), args[1](..), ...)`. The arguments of the result
    /// are the concatenated arguments of `args`, in order.
    pub fn apply_ops(&self, args: &[&MultiDiffOp]) -> MultiDiffOp {
        assert_eq!(args.len(), self.arity, "wrong number of operator arguments");
        let total: usize = args.iter().map(|a| a.arity).sum();
        let mut out = MultiDiffOp::zero(self.dim, total);
        let mut cache: Vec<BTreeMap<Vec<u32>, MultiDiffOp>> = vec![BTreeMap::new(); args.len()];
        for (key, c) in &self.terms {
            let mut acc = MultiDiffOp::constant(c.clone());
            for (s, a) in key.iter().enumerate() {
                let d = cache[s]
                    .entry(a.clone())
                    .or_insert_with(|| args[s].derive(a));
                if d.is_zero() {
                    acc = MultiDiffOp::zero(self.dim, acc.arity + d.arity);
                    break;
                }
                acc = acc.tensor(d);
            }
            if acc.arity == total {
                out.add_assign_ref(&acc);
            }
        }
        out
    }

    /// Evaluates the operator on concrete functions.
    pub fn eval(&self, args: &[&PolyFun]) -> PolyFun {
        assert_eq!(args.len(), self.arity, "wrong number of arguments");
        let mut out = PolyFun::zero(self.dim);
        let mut cache: Vec<BTreeMap<Vec<u32>, PolyFun>> = vec![BTreeMap::new(); args.len()];
        for (key, c) in &self.terms {
            let mut acc = c.clone();
            for (s, a) in key.iter().enumerate() {
                let d = cache[s]
                    .entry(a.clone())
                    .or_insert_with(|| args[s].partial_multi(a));
                acc = &acc * d;
                if acc.is_zero() {
                    break;
                }
            }
            out.add_assign_ref(&acc);
        }
        out
    }

    /// Evaluates a linear operator on one function.
    pub fn apply(&self, f: &PolyFun) -> PolyFun {
        self.eval(&[f])
    }

    /// Splits into the part with first-order derivatives in every slot and
    /// the remainder.
    pub fn split_first_order(&self) -> (MultiDiffOp, MultiDiffOp) {
        let mut first = MultiDiffOp::zero(self.dim, self.arity);
        let mut rest = MultiDiffOp::zero(self.dim, self.arity);
        for (k, c) in &self.terms {
            if k.iter().all(|a| a.iter().sum::<u32>() == 1) {
                first.add_term(k.clone(), c);
            } else {
                rest.add_term(k.clone(), c);
            }
        }
        (first, rest)
    }

    /// `(f, g) ↦ B(f, g) - B(g, f)`.
    pub fn skew(&self) -> MultiDiffOp {
        assert_eq!(self.arity, 2);
        self.sub(&self.swap_args())
    }

    /// `(f, g) ↦ (B(f, g) + B(g, f)) / 2`.
    pub fn symmetric_part(&self) -> MultiDiffOp {
        assert_eq!(self.arity, 2);
        self.add(&self.swap_args())
            .scale(&GaussianRational::from_ratio(1, 2))
    }

    /// Compact rendering of the first term, used in diagnostics.
    pub fn first_term(&self) -> Option<String> {
        self.terms.iter().next().map(|(k, c)| render_term(k, c))
    }

    pub fn ensure_arity(&self, arity: usize) -> Result<()> {
        if self.arity == arity {
            Ok(())
        } else {
            Err(Error::Invalid(format!(
                "expected operator of arity {arity}, got {}",
                self.arity
            )))
        }
    }
}

fn render_term(key: &SlotIndex, c: &PolyFun) -> String {
    let names = default_names(c.dim());
    let slots: Vec<String> = key
        .iter()
        .map(|a| {
            let parts: Vec<String> = a
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(v, &k)| {
                    if k == 1 {
                        format!("d{}", names[v])
                    } else {
                        format!("d{}^{}", names[v], k)
                    }
                })
                .collect();
            if parts.is_empty() {
                "1".to_string()
            } else {
                parts.join("")
            }
        })
        .collect();
    format!("({})*[{}]", c.display_with(&names), slots.join(" ⊗ "))
}

impl fmt::Display for MultiDiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self.terms.iter().map(|(k, c)| render_term(k, c)).collect();
        f.write_str(&parts.join(" + "))
    }
}

/// All ways of distributing the multi-index `m` over `bins` factors, with
/// their multinomial weights.
fn leibniz_splits(m: &[u32], bins: usize) -> Vec<(Vec<Vec<u32>>, GaussianRational)> {
    let dim = m.len();
    let mut out = vec![(vec![vec![0u32; dim]; bins], GaussianRational::one())];
    for (v, &n) in m.iter().enumerate() {
        if n == 0 {
            continue;
        }
        let comps = compositions(n, bins);
        let mut next = Vec::with_capacity(out.len() * comps.len());
        for (parts, w) in &out {
            for comp in &comps {
                let mut p = parts.clone();
                for (b, &k) in comp.iter().enumerate() {
                    p[b][v] = k;
                }
                next.push((p, w * &multinomial(n, comp)));
            }
        }
        out = next;
    }
    out
}

fn compositions(n: u32, bins: usize) -> Vec<Vec<u32>> {
    if bins == 1 {
        return vec![vec![n]];
    }
    let mut out = Vec::new();
    for first in 0..=n {
        for mut rest in compositions(n - first, bins - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn multinomial(n: u32, parts: &[u32]) -> GaussianRational {
    let mut num: i64 = 1;
    for k in 2..=i64::from(n) {
        num *= k;
    }
    let mut den: i64 = 1;
    for &p in parts {
        for k in 2..=i64::from(p) {
            den *= k;
        }
    }
    GaussianRational::from_int(num / den)
}

pub(crate) fn factorial(n: u32) -> GaussianRational {
    let mut acc = GaussianRational::one();
    for k in 2..=i64::from(n) {
        acc = &acc * &GaussianRational::from_int(k);
    }
    acc
}

impl crate::series::Coefficient for MultiDiffOp {
    fn zero_like(&self) -> Self {
        MultiDiffOp::zero(self.dim, self.arity)
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn add_ref(&self, other: &Self) -> Self {
        MultiDiffOp::add(self, other)
    }
    fn neg_ref(&self) -> Self {
        MultiDiffOp::neg(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::literal::parse_poly;

    fn names() -> Vec<String> {
        vec!["x".into(), "y".into()]
    }

    fn p(s: &str) -> PolyFun {
        parse_poly(s, &names()).unwrap()
    }

    #[test]
    fn derive_expands_leibniz() {
        // d/dx (x * f * g) = f g + x f' g + x f g'
        let op = MultiDiffOp::product(2, 2).mul_poly(&p("x"));
        let d = op.derive(&[1, 0]);
        let f = p("x^2 + y");
        let g = p("x*y");
        let expected = (&(&p("x") * &f) * &g).partial(0).unwrap();
        assert_eq!(d.eval(&[&f, &g]), expected);
        assert_eq!(d.len(), 3);
    }

    #[test]
    fn composition_matches_evaluation() {
        let b = MultiDiffOp::from_terms(
            2,
            2,
            [
                (vec![vec![1, 0], vec![0, 1]], p("y")),
                (vec![vec![0, 0], vec![2, 0]], p("1/2")),
            ],
        );
        let d = MultiDiffOp::derivative(2, vec![0, 1], p("x"));
        let composed = d.apply_ops(&[&b]);
        let swapped = b.apply_ops(&[&d, &MultiDiffOp::identity(2)]);
        let f = p("x^3*y + 2");
        let g = p("x^2*y^2 - y");
        assert_eq!(composed.eval(&[&f, &g]), d.apply(&b.eval(&[&f, &g])));
        assert_eq!(swapped.eval(&[&f, &g]), b.eval(&[&d.apply(&f), &g]));
    }

    #[test]
    fn skew_of_symmetric_is_zero() {
        let b = MultiDiffOp::product(2, 2);
        assert!(b.skew().is_zero());
        assert_eq!(b.symmetric_part(), b);
    }
}
