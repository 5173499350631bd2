//! Bimodule quantization of a line bundle given by a rank-one projection.
//!
//! Sections are columns `s` with `P0 s = s`. Both module actions are stored
//! as series of `n × n` matrices of bidifferential operators whose first
//! slot reads the column entry `x_j` of an arbitrary column `x` (the section
//! being `P0 x`) and whose second slot reads the function.

use crate::coeffring::PolyFun;
use crate::diffop::MultiDiffOp;
use crate::error::{Error, Result};
use crate::matdef::{center_star, mat_star, LiftedIdempotent, Mat, MatSeries};
use crate::poisson::{koszul, Multivector, OneForm};
use crate::series::{EquivalenceTransform, TruncatedSeries};
use crate::star::{normalize_c1, tau, StarProduct};

/// Section columns up to order `N`: `coeffs[k]` is the `λ^k` column.
pub type SectionSeries = Vec<Vec<PolyFun>>;

#[derive(Clone, Debug)]
pub struct QuantizedLineBundle {
    lifted: LiftedIdempotent,
    center: StarProduct,
    normalizer: EquivalenceTransform,
    normalized_center: StarProduct,
    right: MatSeries,
    left: MatSeries,
}

fn require_rank_one(p0: &Mat) -> Result<()> {
    let tr = p0.trace().as_poly();
    if tr != PolyFun::one(p0.dim()) {
        return Err(Error::RankNotOne(format!("trace of P0 is {tr}")));
    }
    Ok(())
}

/// Right action `s • f = J^{-1}(J(s) ⋆ f)` and left action
/// `f •' s = J^{-1}(I(f P0) ⋆ J(s))`, with `⋆'` the induced product on
/// functions.
pub fn quantize_line_bundle(lifted: &LiftedIdempotent) -> Result<QuantizedLineBundle> {
    require_rank_one(lifted.p0())?;
    let n = lifted.order();
    let dim = lifted.dim();
    let size = lifted.size();
    let center = center_star(lifted)?;
    let (normalizer, normalized_center) = normalize_c1(&center)?;

    let section = TruncatedSeries::constant(lifted.section_operator(), n);
    let js = lifted.j_series(&section)?;
    let f_diag = TruncatedSeries::constant(Mat::identity(size, dim).times_op(&MultiDiffOp::identity(dim)), n);
    let right = lifted.j_inverse(&mat_star(lifted.star(), &js, &f_diag)?)?;

    let psi = TruncatedSeries::constant(lifted.psi_operator(), n);
    let ipsi = lifted.i_series(&psi)?;
    let left_fx = lifted.j_inverse(&mat_star(lifted.star(), &ipsi, &js)?)?;
    let left = left_fx.map(|m| m.map(|op| op.swap_args()));

    Ok(QuantizedLineBundle {
        lifted: lifted.clone(),
        center,
        normalizer,
        normalized_center,
        right,
        left,
    })
}

fn act(ops: &MatSeries, s: &SectionSeries, f: &[PolyFun]) -> SectionSeries {
    let n = ops.order();
    let size = s[0].len();
    let dim = f[0].dim();
    let mut out = vec![vec![PolyFun::zero(dim); size]; n + 1];
    for r in 0..=n {
        for a in 0..=(n - r) {
            for b in 0..=(n - r - a) {
                if s[a].iter().all(PolyFun::is_zero) || f[b].is_zero() {
                    continue;
                }
                let v = ops.coeff(r).apply_to_column(&s[a], &[&f[b]]);
                for (o, x) in out[r + a + b].iter_mut().zip(v) {
                    o.add_assign_ref(&x);
                }
            }
        }
    }
    out
}

impl QuantizedLineBundle {
    pub fn lifted(&self) -> &LiftedIdempotent {
        &self.lifted
    }

    pub fn base_star(&self) -> &StarProduct {
        self.lifted.star()
    }

    /// The induced product on functions before normalization.
    pub fn corner_star(&self) -> &StarProduct {
        &self.center
    }

    /// The induced product normalized to `C_1' = C_1`.
    pub fn normalized_corner_star(&self) -> &StarProduct {
        &self.normalized_center
    }

    pub fn normalizer(&self) -> &EquivalenceTransform {
        &self.normalizer
    }

    pub fn order(&self) -> usize {
        self.lifted.order()
    }

    /// Right action operators `R_r`, slots `(x, f)`.
    pub fn right_ops(&self) -> &MatSeries {
        &self.right
    }

    /// Left action operators `R_r'`, slots `(x, f)`.
    pub fn left_ops(&self) -> &MatSeries {
        &self.left
    }

    fn check_section(&self, s: &[PolyFun]) -> Result<()> {
        let col = Mat::column(s)?;
        if self.lifted.p0().mul(&col) != col {
            return Err(Error::NotInImage);
        }
        Ok(())
    }

    /// `S • F` for series of sections and functions.
    pub fn right_act(&self, s: &SectionSeries, f: &[PolyFun]) -> Result<SectionSeries> {
        self.check_series(s, f)?;
        Ok(act(&self.right, s, f))
    }

    /// `F •' S` for the unnormalized induced product.
    pub fn left_act(&self, f: &[PolyFun], s: &SectionSeries) -> Result<SectionSeries> {
        self.check_series(s, f)?;
        Ok(act(&self.left, s, f))
    }

    /// `F •'' S = T(F) •' S`, the left action of the normalized product.
    pub fn left_act_normalized(&self, f: &[PolyFun], s: &SectionSeries) -> Result<SectionSeries> {
        let tf = self.normalizer.apply(&TruncatedSeries::new(f.to_vec()))?;
        self.left_act(tf.coeffs(), s)
    }

    fn check_series(&self, s: &SectionSeries, f: &[PolyFun]) -> Result<()> {
        let n = self.order();
        if s.len() != n + 1 || f.len() != n + 1 {
            return Err(Error::OrderMismatch {
                left: n,
                right: s.len().min(f.len()).saturating_sub(1),
            });
        }
        for c in s {
            self.check_section(c)?;
        }
        Ok(())
    }

    /// Names of the bimodule relations violated on the given data:
    /// `(f⋆'g)•'s = f•'(g•'s)`, `s•(f⋆g) = (s•f)•g`, `(f•'s)•g = f•'(s•g)`.
    pub fn bimodule_violations(&self, f: &PolyFun, g: &PolyFun, s: &[PolyFun]) -> Result<Vec<&'static str>> {
        let n = self.order();
        let lift = |p: &PolyFun| TruncatedSeries::constant(p.clone(), n).into_coeffs();
        let (fs, gs) = (lift(f), lift(g));
        let mut ss = vec![vec![PolyFun::zero(f.dim()); s.len()]; n + 1];
        ss[0] = s.to_vec();
        let mut bad = Vec::new();

        let fg_corner = self.normalized_center.mul_fn(f, g).into_coeffs();
        let lhs = self.left_act_normalized(&fg_corner, &ss)?;
        let rhs = self.left_act_normalized(&fs, &self.left_act_normalized(&gs, &ss)?)?;
        if lhs != rhs {
            bad.push("left");
        }
        let fg = self.base_star().mul_fn(f, g).into_coeffs();
        let lhs = self.right_act(&ss, &fg)?;
        let rhs = self.right_act(&self.right_act(&ss, &fs)?, &gs)?;
        if lhs != rhs {
            bad.push("right");
        }
        let lhs = self.right_act(&self.left_act_normalized(&fs, &ss)?, &gs)?;
        let rhs = self.left_act_normalized(&fs, &self.right_act(&ss, &gs)?)?;
        if lhs != rhs {
            bad.push("bimodule");
        }
        Ok(bad)
    }
}

/// Contravariant connection `D(s, f) = D_{df} s` on sections of `P0`,
/// stored as an operator matrix in `(x, f)` with `s = P0 x`.
#[derive(Clone, Debug, PartialEq)]
pub struct ContravariantConnection {
    p0: Mat,
    pi: Multivector,
    op: Mat,
}

/// `R(s, f) = R_1(s, f) − R_1''(f, s)`, with `•''` the left action of the
/// normalized induced product.
pub fn extract_connection(q: &QuantizedLineBundle) -> Result<ContravariantConnection> {
    if q.order() < 1 {
        return Err(Error::OrderMismatch { left: q.order(), right: 1 });
    }
    let dim = q.lifted.dim();
    let t1 = q.normalizer.map(1);
    let shift = q.lifted.p0().times_op(&MultiDiffOp::identity(dim).tensor(&t1));
    let op = q.right.coeff(1).sub(q.left.coeff(1)).sub(&shift);
    Ok(ContravariantConnection {
        p0: q.lifted.p0().clone(),
        pi: q.base_star().claimed_pi().clone(),
        op,
    })
}

/// `D(s, f) = P0 {s, f}` with `{s, f}_i = π(ds_i, df)`.
pub fn adapted_connection(p0: &Mat, pi: &Multivector) -> Result<ContravariantConnection> {
    require_rank_one(p0)?;
    let dim = p0.dim();
    let size = p0.rows();
    let id = MultiDiffOp::identity(dim);
    let bracket = if pi.is_zero() { MultiDiffOp::zero(dim, 2) } else { pi.to_bidiff() };
    let mut op = Mat::zero(size, size, dim, 2);
    for i in 0..size {
        for j in 0..size {
            let mut acc = MultiDiffOp::zero(dim, 2);
            for k in 0..size {
                let inner = bracket.apply_ops(&[&id.mul_poly(&p0.poly(k, j)), &id]);
                acc.add_assign_ref(&inner.mul_poly(&p0.poly(i, k)));
            }
            op.set(i, j, acc);
        }
    }
    Ok(ContravariantConnection {
        p0: p0.clone(),
        pi: pi.clone(),
        op,
    })
}

impl ContravariantConnection {
    pub fn p0(&self) -> &Mat {
        &self.p0
    }

    pub fn pi(&self) -> &Multivector {
        &self.pi
    }

    /// Operator matrix in the slots `(x, f)`.
    pub fn operator(&self) -> &Mat {
        &self.op
    }

    pub fn eval(&self, s: &[PolyFun], f: &PolyFun) -> Vec<PolyFun> {
        self.op.apply_to_column(s, &[f])
    }

    /// `D_α s = Σ_i α_i D(s, x_i)`.
    pub fn along(&self, alpha: &OneForm, s: &[PolyFun]) -> Vec<PolyFun> {
        let dim = self.p0.dim();
        let mut out = vec![PolyFun::zero(dim); s.len()];
        for (i, a) in alpha.comps.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let v = self.eval(s, &PolyFun::var(dim, i));
            for (o, x) in out.iter_mut().zip(v) {
                o.add_assign_ref(&(&x * a));
            }
        }
        out
    }

    /// Spanning sections `P0 e_l`.
    pub fn spanning_sections(&self) -> Vec<Vec<PolyFun>> {
        let n = self.p0.rows();
        (0..n).map(|l| (0..n).map(|i| self.p0.poly(i, l)).collect()).collect()
    }
}

/// Names of the connection axioms violated at `(s, f, g)`:
/// `D(s, fg) = D(s, f)g + D(s, g)f`, `D(sf, g) = D(s, g)f + s{f, g}` and
/// `P0 D(s, f) = D(s, f)`.
pub fn connection_violations(d: &ContravariantConnection, s: &[PolyFun], f: &PolyFun, g: &PolyFun) -> Vec<&'static str> {
    let mut bad = Vec::new();
    let fg = f * g;
    let (dsf, dsg) = (d.eval(s, f), d.eval(s, g));
    let lhs = d.eval(s, &fg);
    let rhs: Vec<PolyFun> = dsf.iter().zip(&dsg).map(|(a, b)| &(a * g) + &(b * f)).collect();
    if lhs != rhs {
        bad.push("leibniz_function");
    }
    let bracket = d.pi.contract(&[&OneForm::exact(f), &OneForm::exact(g)]);
    let sf: Vec<PolyFun> = s.iter().map(|x| x * f).collect();
    let lhs = d.eval(&sf, g);
    let rhs: Vec<PolyFun> = dsg.iter().zip(s).map(|(a, x)| &(a * f) + &(x * &bracket)).collect();
    if lhs != rhs {
        bad.push("leibniz_section");
    }
    let col = Mat::column(&dsf).expect("nonempty section");
    if d.p0.mul(&col) != col {
        bad.push("sectional");
    }
    bad
}

/// `Θ(α, β)s = D_α D_β s − D_β D_α s + D_{[α,β]} s`.
pub fn curvature(d: &ContravariantConnection, alpha: &OneForm, beta: &OneForm, s: &[PolyFun]) -> Vec<PolyFun> {
    let ab = d.along(alpha, &d.along(beta, s));
    let ba = d.along(beta, &d.along(alpha, s));
    let k = d.along(&koszul(&d.pi, alpha, beta), s);
    ab.iter()
        .zip(&ba)
        .zip(&k)
        .map(|((x, y), z)| &(x - y) + z)
        .collect()
}

/// One comparison `τ(x_i, x_j) s_l` against `Θ(dx_i, dx_j) s_l`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureComparison {
    pub pair: (usize, usize),
    pub section: usize,
    pub tau_side: Vec<PolyFun>,
    pub curvature_side: Vec<PolyFun>,
}

impl CurvatureComparison {
    pub fn holds(&self) -> bool {
        self.tau_side == self.curvature_side
    }

    /// `τ(f, g) s = −Θ_R(df, dg) s`.
    pub fn holds_negated(&self) -> bool {
        self.tau_side.iter().zip(&self.curvature_side).all(|(a, b)| a == &-b)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureReport {
    pub tau: Multivector,
    pub comparisons: Vec<CurvatureComparison>,
}

impl CurvatureReport {
    pub fn passed(&self) -> bool {
        self.comparisons.iter().all(CurvatureComparison::holds)
    }

    pub fn first_failure(&self) -> Option<&CurvatureComparison> {
        self.comparisons.iter().find(|c| !c.holds())
    }

    pub fn passed_negated(&self) -> bool {
        self.comparisons.iter().all(CurvatureComparison::holds_negated)
    }
}

/// Compares `τ(f, g) s` with `Θ_R(df, dg) s` for all coordinate pairs and
/// spanning sections, with `τ` computed from the base and the induced
/// product on functions.
pub fn curvature_theorem_check(q: &QuantizedLineBundle) -> Result<CurvatureReport> {
    let t = tau(q.base_star(), q.corner_star())?;
    let conn = extract_connection(q)?;
    let dim = q.lifted.dim();
    let mut comparisons = Vec::new();
    for i in 0..dim {
        for j in (i + 1)..dim {
            let (a, b) = (OneForm::coordinate(dim, i), OneForm::coordinate(dim, j));
            let tij = t.entry(i, j);
            for (l, s) in conn.spanning_sections().iter().enumerate() {
                comparisons.push(CurvatureComparison {
                    pair: (i, j),
                    section: l,
                    tau_side: s.iter().map(|x| x * &tij).collect(),
                    curvature_side: curvature(&conn, &a, &b, s),
                });
            }
        }
    }
    Ok(CurvatureReport { tau: t, comparisons })
}

/// The bivector `K` with `Θ_D(df, dg) s = K(df, dg) s` on sections.
pub fn poisson_chern_representative(d: &ContravariantConnection) -> Result<Multivector> {
    require_rank_one(&d.p0)?;
    let dim = d.p0.dim();
    let n = d.p0.rows();
    let sections = d.spanning_sections();
    let mut out = Multivector::zero(dim, 2);
    for i in 0..dim {
        for j in (i + 1)..dim {
            let (a, b) = (OneForm::coordinate(dim, i), OneForm::coordinate(dim, j));
            let cols: Vec<Vec<PolyFun>> = sections.iter().map(|s| curvature(d, &a, &b, s)).collect();
            let rows: Vec<Vec<PolyFun>> = (0..n).map(|r| (0..n).map(|l| cols[l][r].clone()).collect()).collect();
            let m = Mat::from_polys(rows)?;
            let c = m.trace().as_poly();
            if d.p0.times_op(&MultiDiffOp::constant(c.clone())) != m {
                return Err(Error::CurvatureNotScalar);
            }
            out.add_component(vec![i, j], &c);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::literal::parse_poly;
    use crate::matdef::lift_idempotent;
    use crate::poisson::{d_pi, parse_multivector};
    use crate::random::random_poly;
    use crate::star::moyal;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn n2() -> Vec<String> {
        vec!["x".into(), "y".into()]
    }

    fn p(s: &str) -> PolyFun {
        parse_poly(s, &n2()).unwrap()
    }

    fn bundle(p0: &Mat) -> QuantizedLineBundle {
        let s = moyal(&parse_multivector("dx^dy", &n2()).unwrap(), 2).unwrap();
        quantize_line_bundle(&lift_idempotent(p0, &s).unwrap()).unwrap()
    }

    fn flagship() -> Mat {
        Mat::from_polys(vec![vec![p("x"), p("x")], vec![p("1-x"), p("1-x")]]).unwrap()
    }

    fn mixed() -> Mat {
        Mat::from_polys(vec![vec![p("1-x*y"), p("x")], vec![p("y-x*y^2"), p("x*y")]]).unwrap()
    }

    #[test]
    fn constant_projection() {
        let p0 = Mat::from_polys(vec![vec![p("1"), p("0")], vec![p("0"), p("0")]]).unwrap();
        let q = bundle(&p0);
        let s = vec![p("x^2 + y"), p("0")];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (f, g) = (random_poly(&mut rng, 2, 2, 3), random_poly(&mut rng, 2, 2, 3));
        assert!(q.bimodule_violations(&f, &g, &s).unwrap().is_empty());
        let base = q.base_star().mul_fn(&s[0], &f);
        let mut ss = vec![vec![PolyFun::zero(2); 2]; 3];
        ss[0] = s.clone();
        let right = q.right_act(&ss, &TruncatedSeries::constant(f.clone(), 2).into_coeffs()).unwrap();
        for k in 0..3 {
            assert_eq!(right[k][0], base.coeff(k).clone());
        }
        let report = curvature_theorem_check(&q).unwrap();
        assert!(report.passed());
        assert!(report.tau.is_zero());
    }

    #[test]
    fn units_and_leading_order() {
        let q = bundle(&flagship());
        let s = vec![p("x*y"), p("y - x*y")];
        let mut ss = vec![vec![PolyFun::zero(2); 2]; 3];
        ss[0] = s.clone();
        let one = TruncatedSeries::constant(PolyFun::one(2), 2).into_coeffs();
        assert_eq!(q.right_act(&ss, &one).unwrap(), ss);
        assert_eq!(q.left_act(&one, &ss).unwrap(), ss);
        let f = TruncatedSeries::constant(p("x+y^2"), 2).into_coeffs();
        let r = q.right_act(&ss, &f).unwrap();
        assert_eq!(r[0], s.iter().map(|x| x * &f[0]).collect::<Vec<_>>());
    }

    #[test]
    fn flagship_connection_is_adapted() {
        for p0 in [flagship(), mixed()] {
            let q = bundle(&p0);
            let r = extract_connection(&q).unwrap();
            let adapted = adapted_connection(&p0, &parse_multivector("dx^dy", &n2()).unwrap()).unwrap();
            assert_eq!(r.operator(), adapted.operator());
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let (f, g) = (random_poly(&mut rng, 2, 2, 3), random_poly(&mut rng, 2, 2, 3));
            for s in r.spanning_sections() {
                assert!(q.bimodule_violations(&f, &g, &s).unwrap().is_empty());
                assert!(connection_violations(&r, &s, &f, &g).is_empty());
                assert!(r.eval(&s, &PolyFun::from_int(2, 4)).iter().all(PolyFun::is_zero));
            }
        }
    }

    #[test]
    fn curvature_theorem_on_mixed_projection() {
        let q = bundle(&mixed());
        let report = curvature_theorem_check(&q).unwrap();
        // The two sides agree up to a global sign, and the sign is not zero.
        assert!(report.passed_negated(), "{:?}", report.first_failure());
        assert!(!report.tau.is_zero());
        assert!(!report.passed());
        let conn = extract_connection(&q).unwrap();
        let k = poisson_chern_representative(&conn).unwrap();
        assert_eq!(k, report.tau.neg());
        let pi = parse_multivector("dx^dy", &n2()).unwrap();
        assert!(d_pi(&pi, &k).unwrap().is_zero());
    }

    #[test]
    fn curvature_is_tensorial_and_antisymmetric() {
        let conn = adapted_connection(&mixed(), &parse_multivector("dx^dy", &n2()).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_poly(&mut rng, 2, 2, 3);
        let a = OneForm::new(vec![p("y"), p("x^2")]);
        let b = OneForm::new(vec![p("1"), p("x*y")]);
        for s in conn.spanning_sections() {
            assert!(curvature(&conn, &a, &a, &s).iter().all(PolyFun::is_zero));
            let lhs = curvature(&conn, &a.mul_fn(&f), &b, &s);
            let rhs: Vec<PolyFun> = curvature(&conn, &a, &b, &s).iter().map(|x| x * &f).collect();
            assert_eq!(lhs, rhs);
            let ab = curvature(&conn, &a, &b, &s);
            let ba = curvature(&conn, &b, &a, &s);
            assert_eq!(ab, ba.iter().map(|x| -x).collect::<Vec<_>>());
        }
        let skewed = ContravariantConnection {
            pi: conn.pi.neg(),
            ..conn.clone()
        };
        let s = &conn.spanning_sections()[0];
        assert_eq!(connection_violations(&skewed, s, &p("x"), &p("y")), vec!["leibniz_section"]);
        let zero = adapted_connection(&mixed(), &Multivector::zero(2, 2)).unwrap();
        assert!(zero.operator().is_zero());
    }

    #[test]
    fn rank_checks() {
        let p0 = Mat::identity(2, 2);
        assert!(matches!(adapted_connection(&p0, &Multivector::zero(2, 2)), Err(Error::RankNotOne(_))));
    }
}
