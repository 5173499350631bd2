//! Verification suites run against a scenario.

use std::sync::OnceLock;
use std::time::Instant;

use deformq::classes::{
    classes_related, orbit_equivalent, phi_hat_poisson, phi_hat_symplectic, phi_hat_zero_stratum, rat, CohomModel,
    QVec, TwistedClass, ZeroStratumClass,
};
use deformq::coeffring::PolyFun;
use deformq::diffop::MultiDiffOp;
use deformq::lbquant::{
    adapted_connection, connection_violations, curvature_theorem_check, extract_connection,
    poisson_chern_representative, quantize_line_bundle, QuantizedLineBundle,
};
use deformq::matdef::{fibred_bracket_defect, is_full, lift_idempotent, psi_bracket_defect, LiftedIdempotent, Mat};
use deformq::poisson::{d_pi, derivation_generators, gauge_formal_poisson, koszul, schouten, sharp, Multivector};
use deformq::random::{random_multivector, random_one_form, random_poly};
use deformq::series::{EquivalenceTransform, TruncatedSeries};
use deformq::star::{apply_equivalence, tau};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::report::{CheckResult, Report, Status};
use crate::scenario::{Check, Scenario};

/// Random samples drawn by the sampling checks.
pub const SAMPLES: usize = 20;

type Outcome = (Status, String);

struct Context<'a> {
    sc: &'a Scenario,
    seed: u64,
    lifted: OnceLock<Result<LiftedIdempotent, String>>,
    bundle: OnceLock<Result<QuantizedLineBundle, String>>,
}

impl Context<'_> {
    fn rng(&self, check: Check) -> ChaCha8Rng {
        // FNV-1a of the check name keeps streams independent of check order.
        let h = check
            .name()
            .bytes()
            .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3));
        ChaCha8Rng::seed_from_u64(self.seed ^ h)
    }

    fn fmt_poly(&self, p: &PolyFun) -> String {
        p.display_with(&self.sc.names)
    }

    fn fmt_mv(&self, m: &Multivector) -> String {
        m.display_with(&self.sc.names)
    }

    fn fmt_column(&self, v: &[PolyFun]) -> String {
        let parts: Vec<String> = v.iter().map(|p| self.fmt_poly(p)).collect();
        format!("({})", parts.join(", "))
    }

    fn fmt_mat(&self, m: &Mat) -> String {
        let rows: Vec<String> = (0..m.rows())
            .map(|i| {
                let cells: Vec<String> = (0..m.cols()).map(|j| self.fmt_poly(&m.poly(i, j))).collect();
                format!("[{}]", cells.join(", "))
            })
            .collect();
        format!("[{}]", rows.join(", "))
    }

    fn lifted(&self) -> Result<&LiftedIdempotent, String> {
        self.lifted
            .get_or_init(|| {
                let p0 = self.sc.p0.as_ref().ok_or("scenario has no projection P0")?;
                lift_idempotent(p0, &self.sc.star).map_err(|e| e.to_string())
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn bundle(&self) -> Result<&QuantizedLineBundle, String> {
        self.bundle
            .get_or_init(|| quantize_line_bundle(self.lifted()?).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(Clone::clone)
    }

    fn random_corner(&self, rng: &mut ChaCha8Rng, p0: &Mat) -> Mat {
        let n = p0.rows();
        let m = Mat::from_polys(
            (0..n)
                .map(|_| (0..n).map(|_| random_poly(rng, self.sc.dim(), 2, 3)).collect())
                .collect(),
        )
        .expect("square matrix");
        p0.mul(&m).mul(p0)
    }
}

fn pass(detail: impl Into<String>) -> Outcome {
    (Status::Pass, detail.into())
}

fn fail(detail: impl Into<String>) -> Outcome {
    (Status::Fail, detail.into())
}

fn skipped(detail: impl Into<String>) -> Outcome {
    (Status::Skipped, detail.into())
}

fn needs_bundle(e: String) -> Outcome {
    if e.contains("no projection") {
        skipped(e)
    } else {
        fail(e)
    }
}

fn check_assoc(cx: &Context) -> Outcome {
    let s = &cx.sc.star;
    if let Some((k, op)) = s.assoc_defect().first() {
        return fail(format!(
            "associativity defect at order {k}: {}",
            op.first_term().unwrap_or_default()
        ));
    }
    if let Some(k) = s.unit_defect() {
        return fail(format!("unit defect at order {k}"));
    }
    if !s.commutator_holds() {
        return fail("f*g - g*f != lambda pi(df, dg) on coordinate pairs");
    }
    pass(format!("associative, unital and bracket-compatible mod lambda^{}", s.order() + 1))
}

fn check_lift(cx: &Context) -> Outcome {
    let lifted = match cx.lifted() {
        Ok(l) => l,
        Err(e) => return needs_bundle(e),
    };
    let defect = lifted.defect();
    if let Some(k) = defect.coeffs().iter().position(|m| !m.is_zero()) {
        return fail(format!("qP*qP - qP at order {k}: {}", cx.fmt_mat(defect.coeff(k))));
    }
    let p0 = lifted.p0();
    if is_full(p0) != lifted.is_full() {
        return fail("fullness of P0 and qP disagree");
    }
    let corrections = lifted.qp().coeffs()[1..].iter().filter(|m| !m.is_zero()).count();
    pass(format!(
        "qP*qP = qP mod lambda^{}; full = {}; nonzero corrections = {corrections}",
        lifted.order() + 1,
        is_full(p0)
    ))
}

fn check_fibred_bracket(cx: &Context) -> Outcome {
    let lifted = match cx.lifted() {
        Ok(l) => l,
        Err(e) => return needs_bundle(e),
    };
    if lifted.order() < 1 {
        return skipped("needs order >= 1");
    }
    let mut rng = cx.rng(Check::FibredBracket);
    let p0 = lifted.p0();
    for i in 0..SAMPLES {
        let l0 = cx.random_corner(&mut rng, p0);
        let s0 = cx.random_corner(&mut rng, p0);
        match fibred_bracket_defect(lifted, &l0, &s0) {
            Ok(d) if d.is_zero() => {}
            Ok(d) => return fail(format!("corner pair {i}: {{L,S}}' - P0{{L,S}}P0 = {}", cx.fmt_mat(&d))),
            Err(e) => return fail(e.to_string()),
        }
    }
    for i in 0..SAMPLES {
        let f = random_poly(&mut rng, cx.sc.dim(), 2, 3);
        let g = random_poly(&mut rng, cx.sc.dim(), 2, 3);
        match psi_bracket_defect(lifted, &f, &g) {
            Ok(d) if d.is_zero() => {}
            Ok(d) => return fail(format!("function pair {i}: {{fP0,gP0}}' - {{f,g}}P0 = {}", cx.fmt_mat(&d))),
            Err(e) => return fail(e.to_string()),
        }
    }
    pass(format!("{SAMPLES} corner pairs and {SAMPLES} function pairs"))
}

fn check_bimodule(cx: &Context) -> Outcome {
    let q = match cx.bundle() {
        Ok(q) => q,
        Err(e) => return needs_bundle(e),
    };
    let mut rng = cx.rng(Check::Bimodule);
    let sections = adapted_connection(q.lifted().p0(), &cx.sc.pi).map(|d| d.spanning_sections());
    let sections = match sections {
        Ok(s) => s,
        Err(e) => return fail(e.to_string()),
    };
    let pairs = 5;
    for i in 0..pairs {
        let f = random_poly(&mut rng, cx.sc.dim(), 3, 3);
        let g = random_poly(&mut rng, cx.sc.dim(), 3, 3);
        for (l, s) in sections.iter().enumerate() {
            match q.bimodule_violations(&f, &g, s) {
                Ok(v) if v.is_empty() => {}
                Ok(v) => return fail(format!("pair {i}, section {}: {} relation fails", l + 1, v.join(", "))),
                Err(e) => return fail(e.to_string()),
            }
        }
    }
    pass(format!("left, right and bimodule relations on {pairs} pairs x {} sections", sections.len()))
}

fn check_connection(cx: &Context) -> Outcome {
    let q = match cx.bundle() {
        Ok(q) => q,
        Err(e) => return needs_bundle(e),
    };
    let r = match extract_connection(q) {
        Ok(r) => r,
        Err(e) => return fail(e.to_string()),
    };
    let mut rng = cx.rng(Check::Connection);
    for i in 0..SAMPLES / 2 {
        let f = random_poly(&mut rng, cx.sc.dim(), 3, 3);
        let g = random_poly(&mut rng, cx.sc.dim(), 3, 3);
        for (l, s) in r.spanning_sections().iter().enumerate() {
            let bad = connection_violations(&r, s, &f, &g);
            if !bad.is_empty() {
                return fail(format!("pair {i}, section {}: {}", l + 1, bad.join(", ")));
            }
        }
    }
    let adapted = match adapted_connection(q.lifted().p0(), &cx.sc.pi) {
        Ok(a) => a,
        Err(e) => return fail(e.to_string()),
    };
    let sections = r.spanning_sections();
    for k in 0..cx.sc.dim() {
        let x = PolyFun::var(cx.sc.dim(), k);
        for (l, s) in sections.iter().enumerate() {
            let (got, want) = (r.eval(s, &x), adapted.eval(s, &x));
            if got != want {
                return fail(format!(
                    "R(s{}, {}) = {} but P0{{s, f}} = {}",
                    l + 1,
                    cx.sc.names[k],
                    cx.fmt_column(&got),
                    cx.fmt_column(&want)
                ));
            }
        }
    }
    if r.operator() != adapted.operator() {
        return fail("R differs from the adapted connection P0{s, f}");
    }
    pass(format!(
        "Leibniz identities on {} pairs; R = P0{{s, f}} termwise",
        SAMPLES / 2
    ))
}

fn check_curvature(cx: &Context) -> Outcome {
    let q = match cx.bundle() {
        Ok(q) => q,
        Err(e) => return needs_bundle(e),
    };
    if q.order() < 2 {
        return skipped("needs order >= 2");
    }
    let report = match curvature_theorem_check(q) {
        Ok(r) => r,
        Err(e) => return fail(e.to_string()),
    };
    let pch = extract_connection(q).and_then(|d| poisson_chern_representative(&d));
    let tau_text = match pch {
        Ok(k) => format!("tau = {}; curvature scalar = {}", cx.fmt_mv(&report.tau), cx.fmt_mv(&k)),
        Err(e) => return fail(format!("curvature representative: {e}")),
    };
    let Some(c) = report.first_failure() else {
        return pass(format!("{tau_text}; {} comparisons", report.comparisons.len()));
    };
    let (i, j) = c.pair;
    let mut detail = format!(
        "{tau_text}; first failing term: tau({x}, {y}) s{l} = {a} but Theta_R(d{x}, d{y}) s{l} = {b}",
        x = cx.sc.names[i],
        y = cx.sc.names[j],
        l = c.section + 1,
        a = cx.fmt_column(&c.tau_side),
        b = cx.fmt_column(&c.curvature_side),
    );
    if report.passed_negated() {
        detail.push_str("; tau(f,g)s = -Theta_R(df,dg)s holds on all comparisons");
    }
    fail(detail)
}

fn check_tau(cx: &Context) -> Outcome {
    let pi = &cx.sc.pi;
    let base = &cx.sc.star;
    if base.order() < 2 {
        return skipped("needs order >= 2");
    }
    let (other, label) = match cx.bundle() {
        Ok(q) => (q.corner_star().clone(), "induced product"),
        Err(e) if e.contains("no projection") => (base.clone(), "the scenario product"),
        Err(e) => return fail(e),
    };
    let t = match tau(base, &other) {
        Ok(t) => t,
        Err(e) => return fail(e.to_string()),
    };
    match d_pi(pi, &t) {
        Ok(d) if d.is_zero() => {}
        Ok(d) => return fail(format!("d_pi tau = {}", cx.fmt_mv(&d))),
        Err(e) => return fail(e.to_string()),
    }
    let mut rng = cx.rng(Check::Tau);
    let trials = 3;
    for i in 0..trials {
        let x = random_multivector(&mut rng, cx.sc.dim(), 1, 2);
        let gen = MultiDiffOp::vector_field(&x.as_vector());
        let shifted = EquivalenceTransform::first_order(gen, base.order())
            .and_then(|tr| apply_equivalence(&tr, base))
            .and_then(|s| tau(&s, &other));
        let expected = d_pi(pi, &x).map(|dx| t.sub(&dx));
        match (shifted, expected) {
            (Ok(a), Ok(b)) if a == b => {}
            (Ok(a), Ok(b)) => {
                return fail(format!(
                    "gauge trial {i}: tau = {} but tau - d_pi X = {}",
                    cx.fmt_mv(&a),
                    cx.fmt_mv(&b)
                ))
            }
            (Err(e), _) | (_, Err(e)) => return fail(e.to_string()),
        }
    }
    pass(format!(
        "tau against {label} = {}; d_pi-closed; shifts by -d_pi X in {trials} gauge trials",
        cx.fmt_mv(&t)
    ))
}

fn check_poisson_gauge(cx: &Context) -> Outcome {
    let pi = &cx.sc.pi;
    let dim = cx.sc.dim();
    let n = cx.sc.order().max(1);
    let mut rng = cx.rng(Check::PoissonGauge);
    let trials = 3;
    for i in 0..trials {
        let y = random_multivector(&mut rng, dim, 1, 2);
        let x = random_multivector(&mut rng, dim, 1, 2);
        let outcome = (|| {
            let pi1 = d_pi(pi, &y)?;
            let mut coeffs = vec![Multivector::zero(dim, 2); n + 1];
            coeffs[0] = pi.clone();
            coeffs[1] = pi1.clone();
            let gens = derivation_generators(&[x.clone()])?;
            let tr = EquivalenceTransform::exp(&gens, dim, n)?;
            let out = gauge_formal_poisson(&tr, &TruncatedSeries::new(coeffs))?;
            let expected = pi1.sub(&d_pi(pi, &x)?);
            Ok::<_, deformq::Error>((out.coeff(0) == pi, out.coeff(1).clone(), expected))
        })();
        match outcome {
            Ok((true, got, want)) if got == want => {}
            Ok((true, got, want)) => {
                return fail(format!(
                    "trial {i}: pi_1' = {} but pi_1 - d_pi X = {}",
                    cx.fmt_mv(&got),
                    cx.fmt_mv(&want)
                ))
            }
            Ok((false, ..)) => return fail(format!("trial {i}: gauge changed pi_0")),
            Err(e) => return fail(e.to_string()),
        }
    }
    pass(format!("pi_1 -> pi_1 - d_pi X in {trials} trials"))
}

fn check_poisson_identities(cx: &Context) -> Outcome {
    let pi = &cx.sc.pi;
    let dim = cx.sc.dim();
    let mut rng = cx.rng(Check::PoissonIdentities);
    let trials = 8;
    let sign = |e: usize| deformq::coeffring::GaussianRational::from_int(if e % 2 == 0 { 1 } else { -1 });
    for i in 0..trials {
        let (p, q, r) = (i % 3, (i / 3) % 3, (i + 1) % 3);
        let a = random_multivector(&mut rng, dim, p, 2);
        let b = random_multivector(&mut rng, dim, q, 2);
        let c = random_multivector(&mut rng, dim, r, 2);
        let res = (|| {
            let lhs = schouten(&a, &schouten(&b, &c)?)?;
            let sp = (p + 1) % 2;
            let sq = (q + 1) % 2;
            let rhs = schouten(&schouten(&a, &b)?, &c)?
                .scale(&sign(sp))
                .add(&schouten(&b, &schouten(&a, &c)?)?.scale(&sign(sp * sq)));
            if lhs != rhs {
                return Ok(Some("graded Jacobi"));
            }
            if !d_pi(pi, &d_pi(pi, &a)?)?.is_zero() {
                return Ok(Some("d_pi^2 = 0"));
            }
            let (u, v, w) = (
                random_one_form(&mut rng, dim, 1),
                random_one_form(&mut rng, dim, 1),
                random_one_form(&mut rng, dim, 1),
            );
            let k = |s: &_, t: &_| koszul(pi, s, t);
            if !k(&u, &k(&v, &w)).add(&k(&v, &k(&w, &u))).add(&k(&w, &k(&u, &v))).is_zero() {
                return Ok(Some("Koszul Jacobi"));
            }
            let hom = sharp(pi, &k(&u, &v)).neg() == schouten(&sharp(pi, &u).neg(), &sharp(pi, &v).neg())?;
            Ok::<_, deformq::Error>((!hom).then_some("anchor homomorphism"))
        })();
        match res {
            Ok(None) => {}
            Ok(Some(law)) => return fail(format!("{law} fails on sample {i}")),
            Err(e) => return fail(e.to_string()),
        }
    }
    pass(format!("graded Jacobi, d_pi^2 = 0, Koszul Jacobi, anchor on {trials} samples"))
}

fn lattice_vectors(b: usize, bound: i64) -> Vec<QVec> {
    let mut out = vec![Vec::new()];
    for _ in 0..b {
        out = out
            .into_iter()
            .flat_map(|v: QVec| {
                (-bound..=bound).map(move |k| {
                    let mut w = v.clone();
                    w.push(rat(k));
                    w
                })
            })
            .collect();
    }
    out
}

fn action_laws(m: &CohomModel) -> Result<Option<String>, deformq::Error> {
    let b = m.rank();
    let alpha = TwistedClass::from_ints(&vec![1; b], &vec![0; b]);
    let zero = vec![rat(0); b];
    type Action = fn(&CohomModel, &TwistedClass, &[num_rational::BigRational]) -> deformq::Result<TwistedClass>;
    let actions: [(&str, Action); 2] = [("symplectic", phi_hat_symplectic), ("poisson", phi_hat_poisson)];
    let vecs = lattice_vectors(b, 1);
    for (name, act) in actions {
        if act(m, &alpha, &zero)? != alpha {
            return Ok(Some(format!("{name} action is not the identity at c1 = 0")));
        }
        for c in &vecs {
            for c2 in &vecs {
                let sum: QVec = c.iter().zip(c2).map(|(x, y)| x + y).collect();
                if act(m, &act(m, &alpha, c)?, c2)? != act(m, &alpha, &sum)? {
                    return Ok(Some(format!("{name} action is not additive")));
                }
            }
        }
    }
    for c in &vecs {
        if phi_hat_zero_stratum(m, &ZeroStratumClass::Trivial, c)? != ZeroStratumClass::Trivial {
            return Ok(Some("zero class moved".into()));
        }
    }
    Ok(None)
}

fn check_classes(cx: &Context) -> Outcome {
    let Some(m) = &cx.sc.model else {
        return skipped("scenario has no model");
    };
    match action_laws(m) {
        Ok(None) => {}
        Ok(Some(e)) => return fail(e),
        Err(e) => return fail(e.to_string()),
    }
    let b = m.rank();
    let e1 = TwistedClass::twisted((0..b).map(|i| rat(i64::from(i == 0))).collect());
    match classes_related(m, &e1, &TwistedClass::zero(b)) {
        Ok(true) => pass(format!("lattice actions and orbit relation on b = {b}")),
        Ok(false) => fail("integral shift not related to zero"),
        Err(e) => fail(e.to_string()),
    }
}

fn check_orbit(cx: &Context) -> Outcome {
    let Some(m) = &cx.sc.model else {
        return skipped("scenario has no model");
    };
    if cx.sc.orbit_queries.is_empty() {
        return skipped("no orbit queries");
    }
    let answers: Vec<String> = cx
        .sc
        .orbit_queries
        .iter()
        .map(|q| {
            let verdict = if orbit_equivalent(m, q) { "integral" } else { "not integral" };
            format!("t0 = {q}: {verdict}")
        })
        .collect();
    pass(answers.join("; "))
}

fn run_one(cx: &Context, check: Check) -> Outcome {
    match check {
        Check::Assoc => check_assoc(cx),
        Check::Bimodule => check_bimodule(cx),
        Check::Classes => check_classes(cx),
        Check::Connection => check_connection(cx),
        Check::CurvatureTheorem => check_curvature(cx),
        Check::FibredBracket => check_fibred_bracket(cx),
        Check::Lift => check_lift(cx),
        Check::Orbit => check_orbit(cx),
        Check::PoissonGauge => check_poisson_gauge(cx),
        Check::PoissonIdentities => check_poisson_identities(cx),
        Check::Tau => check_tau(cx),
    }
}

/// Runs every requested check concurrently; results are ordered by name.
pub fn run_checks(sc: &Scenario, seed: u64) -> Report {
    let cx = Context {
        sc,
        seed,
        lifted: OnceLock::new(),
        bundle: OnceLock::new(),
    };
    let mut checks: Vec<CheckResult> = std::thread::scope(|scope| {
        let handles: Vec<_> = sc
            .checks
            .iter()
            .map(|&check| {
                let cx = &cx;
                scope.spawn(move || {
                    let start = Instant::now();
                    let (status, detail) = run_one(cx, check);
                    CheckResult {
                        name: check.name().to_string(),
                        status,
                        detail,
                        elapsed_ms: Some(start.elapsed().as_millis()),
                    }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("check panicked")).collect()
    });
    checks.sort_by(|a, b| a.name.cmp(&b.name));
    Report {
        scenario: sc.name.clone(),
        seed,
        checks,
    }
}
