//! Matrices over a deformed algebra: idempotent lifting, fullness, the maps
//! `J(s) = qP ⋆ s` and `I(L) = qP ⋆ L ⋆ qP`, the induced product on the
//! corner `P0 M_n P0` and the induced product on functions for rank one.
//!
//! Matrix entries are multidifferential operators of a common arity. Arity
//! zero is an ordinary matrix of functions; higher arities let the same
//! code compute operators such as `(f, g) ↦ I(f P0) ⋆ I(g P0)` symbolically.

use std::fmt;

use crate::coeffring::{default_names, PolyFun};
use crate::diffop::MultiDiffOp;
use crate::error::{ensure_dim, Error, Result};
use crate::series::{Coefficient, TruncatedSeries};
use crate::star::StarProduct;

/// `rows × cols` matrix of operators with a common arity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    dim: usize,
    arity: usize,
    entries: Vec<MultiDiffOp>,
}

/// Matrix of polynomial functions (arity zero).
pub type MatPoly = Mat;

/// Formal power series of matrices.
pub type MatSeries = TruncatedSeries<Mat>;

impl Mat {
    pub fn zero(rows: usize, cols: usize, dim: usize, arity: usize) -> Self {
        Mat {
            rows,
            cols,
            dim,
            arity,
            entries: vec![MultiDiffOp::zero(dim, arity); rows * cols],
        }
    }

    pub fn from_polys(rows: Vec<Vec<PolyFun>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map(Vec::len).unwrap_or(0);
        let dim = rows.first().and_then(|row| row.first()).map(PolyFun::dim).unwrap_or(0);
        let mut m = Mat::zero(r, c, dim, 0);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != c {
                return Err(Error::DimensionMismatch { left: c, right: row.len() });
            }
            for (j, p) in row.into_iter().enumerate() {
                ensure_dim(dim, p.dim())?;
                m.entries[i * c + j] = MultiDiffOp::constant(p);
            }
        }
        Ok(m)
    }

    pub fn column(entries: &[PolyFun]) -> Result<Self> {
        Mat::from_polys(entries.iter().map(|p| vec![p.clone()]).collect())
    }

    pub fn identity(n: usize, dim: usize) -> Self {
        let mut m = Mat::zero(n, n, dim, 0);
        for i in 0..n {
            m.entries[i * n + i] = MultiDiffOp::constant(PolyFun::one(dim));
        }
        m
    }

    /// The operator matrix `(self_{ij} · op)` for a function matrix `self`.
    pub fn times_op(&self, op: &MultiDiffOp) -> Mat {
        assert_eq!(self.arity, 0);
        let mut out = Mat::zero(self.rows, self.cols, self.dim, op.arity());
        for (o, e) in out.entries.iter_mut().zip(&self.entries) {
            *o = op.mul_poly(&e.as_poly());
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn get(&self, i: usize, j: usize) -> &MultiDiffOp {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, op: MultiDiffOp) {
        assert_eq!(op.arity(), self.arity);
        self.entries[i * self.cols + j] = op;
    }

    /// Function entry of an arity-zero matrix.
    pub fn poly(&self, i: usize, j: usize) -> PolyFun {
        self.get(i, j).as_poly()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(MultiDiffOp::is_zero)
    }

    fn zip(&self, other: &Mat, f: impl Fn(&MultiDiffOp, &MultiDiffOp) -> MultiDiffOp) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "matrix shape mismatch");
        Mat {
            rows: self.rows,
            cols: self.cols,
            dim: self.dim,
            arity: self.arity.max(other.arity),
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn add(&self, other: &Mat) -> Mat {
        self.zip(other, MultiDiffOp::add)
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        self.zip(other, MultiDiffOp::sub)
    }

    pub fn neg(&self) -> Mat {
        self.map(MultiDiffOp::neg)
    }

    pub fn map(&self, f: impl Fn(&MultiDiffOp) -> MultiDiffOp) -> Mat {
        let entries: Vec<MultiDiffOp> = self.entries.iter().map(f).collect();
        let arity = entries.first().map(MultiDiffOp::arity).unwrap_or(self.arity);
        Mat {
            rows: self.rows,
            cols: self.cols,
            dim: self.dim,
            arity,
            entries,
        }
    }

    /// Ordinary matrix product; entries multiply pointwise and their
    /// argument lists concatenate.
    pub fn mul(&self, other: &Mat) -> Mat {
        self.star_term(&MultiDiffOp::product(self.dim, 2), other)
    }

    /// `Σ_k C(self_{ik}, other_{kj})` for a bidifferential operator `C`.
    pub fn star_term(&self, c: &MultiDiffOp, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matrix shape mismatch");
        let arity = self.arity + other.arity;
        let mut out = Mat::zero(self.rows, other.cols, self.dim, arity);
        let concrete = arity == 0;
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = MultiDiffOp::zero(self.dim, arity);
                for k in 0..self.cols {
                    let (a, b) = (self.get(i, k), other.get(k, j));
                    if a.is_zero() || b.is_zero() {
                        continue;
                    }
                    if concrete {
                        acc.add_assign_ref(&MultiDiffOp::constant(c.eval(&[&a.as_poly(), &b.as_poly()])));
                    } else {
                        acc.add_assign_ref(&c.apply_ops(&[a, b]));
                    }
                }
                out.entries[i * out.cols + j] = acc;
            }
        }
        out
    }

    pub fn trace(&self) -> MultiDiffOp {
        let mut acc = MultiDiffOp::zero(self.dim, self.arity);
        for i in 0..self.rows.min(self.cols) {
            acc.add_assign_ref(self.get(i, i));
        }
        acc
    }

    /// `out_i = Σ_j self_{ij}(x_j, rest…)`: evaluates a matrix whose first
    /// argument slot reads the column entry `x_j`.
    pub fn apply_to_column(&self, x: &[PolyFun], rest: &[&PolyFun]) -> Vec<PolyFun> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let mut acc = PolyFun::zero(self.dim);
                for (j, xj) in x.iter().enumerate() {
                    let mut args = vec![xj];
                    args.extend_from_slice(rest);
                    acc.add_assign_ref(&self.get(i, j).eval(&args));
                }
                acc
            })
            .collect()
    }

    /// Evaluates every entry on the same arguments.
    pub fn eval(&self, args: &[&PolyFun]) -> Mat {
        let mut out = Mat::zero(self.rows, self.cols, self.dim, 0);
        for (o, e) in out.entries.iter_mut().zip(&self.entries) {
            *o = MultiDiffOp::constant(e.eval(args));
        }
        out
    }

    /// First nonzero entry, rendered for diagnostics.
    pub fn first_term(&self) -> Option<String> {
        self.entries.iter().enumerate().find(|(_, e)| !e.is_zero()).map(|(k, e)| {
            format!("[{},{}] {}", k / self.cols, k % self.cols, e.first_term().unwrap_or_default())
        })
    }
}

impl Coefficient for Mat {
    fn zero_like(&self) -> Self {
        Mat::zero(self.rows, self.cols, self.dim, self.arity)
    }
    fn is_zero(&self) -> bool {
        Mat::is_zero(self)
    }
    fn add_ref(&self, other: &Self) -> Self {
        self.add(other)
    }
    fn neg_ref(&self) -> Self {
        self.neg()
    }
}

impl fmt::Display for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = default_names(self.dim);
        f.write_str("[")?;
        for i in 0..self.rows {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str("[")?;
            for j in 0..self.cols {
                if j > 0 {
                    f.write_str(", ")?;
                }
                if self.arity == 0 {
                    f.write_str(&self.poly(i, j).display_with(&names))?;
                } else {
                    write!(f, "{}", self.get(i, j))?;
                }
            }
            f.write_str("]")?;
        }
        f.write_str("]")
    }
}

/// `(A ⋆ B)_{ij} = Σ_k A_{ik} ⋆ B_{kj}` mod `λ^{N+1}`.
pub fn mat_star(s: &StarProduct, a: &MatSeries, b: &MatSeries) -> Result<MatSeries> {
    let n = s.order();
    if a.order() != n || b.order() != n {
        return Err(Error::OrderMismatch {
            left: n,
            right: if a.order() != n { a.order() } else { b.order() },
        });
    }
    ensure_dim(s.dim(), a.coeff(0).dim)?;
    ensure_dim(s.dim(), b.coeff(0).dim)?;
    if a.coeff(0).cols != b.coeff(0).rows {
        return Err(Error::DimensionMismatch {
            left: a.coeff(0).cols,
            right: b.coeff(0).rows,
        });
    }
    let template = Mat::zero(a.coeff(0).rows, b.coeff(0).cols, s.dim(), a.coeff(0).arity + b.coeff(0).arity);
    let mut out = vec![template; n + 1];
    for r in 0..=n {
        let c = s.op(r);
        if c.is_zero() {
            continue;
        }
        for i in 0..=(n - r) {
            if a.coeff(i).is_zero() {
                continue;
            }
            for j in 0..=(n - r - i) {
                if b.coeff(j).is_zero() {
                    continue;
                }
                let term = a.coeff(i).star_term(c, b.coeff(j));
                out[r + i + j] = out[r + i + j].add(&term);
            }
        }
    }
    Ok(TruncatedSeries::new(out))
}

fn constant_series(m: &Mat, order: usize) -> MatSeries {
    TruncatedSeries::constant(m.clone(), order)
}

pub fn is_idempotent(p0: &Mat) -> bool {
    p0.arity == 0 && p0.rows == p0.cols && p0.mul(p0) == *p0
}

/// `P0` is full when its trace is a nonzero constant.
pub fn is_full(p0: &Mat) -> bool {
    let t = p0.trace().as_poly();
    t.is_constant() && !t.is_zero()
}

/// Idempotent `qP = P0 + O(λ)` with `qP ⋆ qP = qP` mod `λ^{N+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct LiftedIdempotent {
    p0: Mat,
    qp: MatSeries,
    star: StarProduct,
}

/// Newton iteration `E ← 3E⋆E − 2E⋆E⋆E` from `E = P0`; each step doubles
/// the order of the idempotency defect.
pub fn lift_idempotent(p0: &Mat, s: &StarProduct) -> Result<LiftedIdempotent> {
    if !is_idempotent(p0) {
        return Err(Error::NotIdempotent);
    }
    ensure_dim(s.dim(), p0.dim)?;
    let n = s.order();
    let mut e = constant_series(p0, n);
    let steps = usize::BITS - n.leading_zeros();
    for _ in 0..steps {
        let e2 = mat_star(s, &e, &e)?;
        let e3 = mat_star(s, &e2, &e)?;
        e = e2.map(|m| m.map(|x| x.scale(&3.into()))).sub(&e3.map(|m| m.map(|x| x.scale(&2.into()))))?;
    }
    let lifted = LiftedIdempotent {
        p0: p0.clone(),
        qp: e,
        star: s.clone(),
    };
    debug_assert!(lifted.defect().is_zero());
    Ok(lifted)
}

impl LiftedIdempotent {
    pub fn p0(&self) -> &Mat {
        &self.p0
    }

    pub fn qp(&self) -> &MatSeries {
        &self.qp
    }

    pub fn star(&self) -> &StarProduct {
        &self.star
    }

    pub fn order(&self) -> usize {
        self.star.order()
    }

    pub fn size(&self) -> usize {
        self.p0.rows
    }

    pub fn dim(&self) -> usize {
        self.p0.dim
    }

    /// `qP ⋆ qP − qP`.
    pub fn defect(&self) -> MatSeries {
        mat_star(&self.star, &self.qp, &self.qp)
            .and_then(|sq| sq.sub(&self.qp))
            .expect("consistent shapes")
    }

    /// Full iff `P0` is (trace criterion applied to the leading term).
    pub fn is_full(&self) -> bool {
        is_full(self.qp.coeff(0))
    }

    fn check_image(&self, x: &Mat) -> Result<()> {
        if self.p0.mul(x) != *x {
            return Err(Error::NotInImage);
        }
        Ok(())
    }

    fn check_corner(&self, x: &Mat) -> Result<()> {
        if self.p0.mul(x).mul(&self.p0) != *x {
            return Err(Error::NotInCorner);
        }
        Ok(())
    }

    /// `J(s) = qP ⋆ s` for `s` with `P0 s = s` (columns or matrices).
    pub fn j_map(&self, s0: &Mat) -> Result<MatSeries> {
        self.check_image(s0)?;
        mat_star(&self.star, &self.qp, &constant_series(s0, self.order()))
    }

    /// `J` on a series whose coefficients lie in the image of `P0`.
    pub fn j_series(&self, s: &MatSeries) -> Result<MatSeries> {
        for c in s.coeffs() {
            self.check_image(c)?;
        }
        mat_star(&self.star, &self.qp, s)
    }

    /// Order-by-order inverse of `J`; fails if `y` is not in its image.
    pub fn j_inverse(&self, y: &MatSeries) -> Result<MatSeries> {
        let n = self.order();
        let mut s: Vec<Mat> = vec![y.coeff(0).zero_like(); n + 1];
        for k in 0..=n {
            let partial = TruncatedSeries::new(s.clone());
            let rest = mat_star(&self.star, &self.qp, &partial)?;
            let sk = y.coeff(k).sub(rest.coeff(k));
            self.check_image(&sk)?;
            s[k] = sk;
        }
        Ok(TruncatedSeries::new(s))
    }

    /// `I(L) = qP ⋆ L ⋆ qP` for `L` in the corner `P0 M_n P0`.
    pub fn i_map(&self, l0: &Mat) -> Result<MatSeries> {
        self.check_corner(l0)?;
        self.i_series_unchecked(&constant_series(l0, self.order()))
    }

    pub fn i_series(&self, l: &MatSeries) -> Result<MatSeries> {
        for c in l.coeffs() {
            self.check_corner(c)?;
        }
        self.i_series_unchecked(l)
    }

    fn i_series_unchecked(&self, l: &MatSeries) -> Result<MatSeries> {
        let left = mat_star(&self.star, &self.qp, l)?;
        mat_star(&self.star, &left, &self.qp)
    }

    /// Order-by-order inverse of `I`; fails if `y` is not in its image.
    pub fn i_inverse(&self, y: &MatSeries) -> Result<MatSeries> {
        let n = self.order();
        let mut l: Vec<Mat> = vec![y.coeff(0).zero_like(); n + 1];
        for k in 0..=n {
            let rest = self.i_series_unchecked(&TruncatedSeries::new(l.clone()))?;
            let lk = y.coeff(k).sub(rest.coeff(k));
            self.check_corner(&lk)?;
            l[k] = lk;
        }
        Ok(TruncatedSeries::new(l))
    }

    /// `Ψ(f) = f P0` as a matrix of linear operators in `f`.
    pub fn psi_operator(&self) -> Mat {
        self.p0.times_op(&MultiDiffOp::identity(self.dim()))
    }

    /// `S = P0 x` as a matrix of linear operators; column `j` reads `x_j`.
    pub fn section_operator(&self) -> Mat {
        self.psi_operator()
    }
}

/// The product `L ⋆' S = I^{-1}(I(L) ⋆ I(S))` on the corner algebra.
#[derive(Clone, Debug)]
pub struct CornerStar<'a> {
    lifted: &'a LiftedIdempotent,
}

pub fn induced_star(lifted: &LiftedIdempotent) -> CornerStar<'_> {
    CornerStar { lifted }
}

impl CornerStar<'_> {
    /// Product of two corner series.
    pub fn mul(&self, a: &MatSeries, b: &MatSeries) -> Result<MatSeries> {
        let ia = self.lifted.i_series(a)?;
        let ib = self.lifted.i_series(b)?;
        let prod = mat_star(&self.lifted.star, &ia, &ib)?;
        self.lifted.i_inverse(&prod)
    }

    /// `B_0 … B_N` evaluated on two corner elements.
    pub fn terms(&self, l0: &Mat, s0: &Mat) -> Result<MatSeries> {
        let n = self.lifted.order();
        self.mul(&constant_series(l0, n), &constant_series(s0, n))
    }

    /// `B_1(L, S) − B_1(S, L)`.
    pub fn bracket(&self, l0: &Mat, s0: &Mat) -> Result<Mat> {
        let ls = self.terms(l0, s0)?;
        let sl = self.terms(s0, l0)?;
        Ok(ls.coeff(1).sub(sl.coeff(1)))
    }
}

/// Matrix bracket `{M, N} = C_1(M, N) − C_1(N, M)` with `C_1` applied
/// through matrix multiplication.
pub fn matrix_bracket(s: &StarProduct, m: &Mat, n: &Mat) -> Result<Mat> {
    if s.order() < 1 {
        return Err(Error::OrderMismatch { left: s.order(), right: 1 });
    }
    ensure_dim(s.dim(), m.dim)?;
    ensure_dim(s.dim(), n.dim)?;
    let c1 = s.op(1);
    Ok(m.star_term(c1, n).sub(&n.star_term(c1, m)))
}

/// Defect `{L, S}' − P0 {L, S} P0` of the bracket on the corner algebra.
pub fn fibred_bracket_defect(lifted: &LiftedIdempotent, l0: &Mat, s0: &Mat) -> Result<Mat> {
    let induced = induced_star(lifted).bracket(l0, s0)?;
    let p0 = &lifted.p0;
    let expected = p0.mul(&matrix_bracket(&lifted.star, l0, s0)?).mul(p0);
    Ok(induced.sub(&expected))
}

/// Defect `{Ψf, Ψg}' − Ψ{f, g}` with `Ψ(f) = f P0`.
pub fn psi_bracket_defect(lifted: &LiftedIdempotent, f: &PolyFun, g: &PolyFun) -> Result<Mat> {
    let p0 = &lifted.p0;
    let psi = |h: &PolyFun| p0.times_op(&MultiDiffOp::constant(h.clone()));
    let induced = induced_star(lifted).bracket(&psi(f), &psi(g))?;
    let c1 = lifted.star.op(1);
    let fg = &c1.eval(&[f, g]) - &c1.eval(&[g, f]);
    Ok(induced.sub(&psi(&fg)))
}

/// The product on functions induced through the center of the corner:
/// `f ⋆' g = Ψ^{-1}(I^{-1}(I(f P0) ⋆ I(g P0)))` with `Ψ(f) = f P0`, computed
/// as bidifferential operators.
pub fn center_star(lifted: &LiftedIdempotent) -> Result<StarProduct> {
    let tr = lifted.p0.trace().as_poly();
    if tr != PolyFun::one(lifted.dim()) {
        return Err(Error::RankNotOne(format!("trace of P0 is {tr}")));
    }
    let n = lifted.order();
    let psi = constant_series(&lifted.psi_operator(), n);
    let ipsi = lifted.i_series_unchecked(&psi)?;
    let prod = mat_star(&lifted.star, &ipsi, &ipsi)?;
    let back = lifted.i_inverse(&prod)?;
    let mut ops = Vec::with_capacity(n + 1);
    for (k, m) in back.coeffs().iter().enumerate() {
        let t = m.trace();
        if lifted.p0.times_op(&t) != *m {
            return Err(Error::RankNotOne(format!("order {k} is not a multiple of P0")));
        }
        ops.push(t);
    }
    StarProduct::new(ops, lifted.star.claimed_pi().clone())
}
