//! Seeded random test data: polynomials, 1-forms and multivectors with small
//! integer coefficients.

use rand::Rng;

use crate::coeffring::{GaussianRational, Monomial, PolyFun};
use crate::poisson::{Multivector, OneForm};

/// Random polynomial of total degree at most `max_degree` with up to
/// `max_terms` terms and integer coefficients in `-3..=3`.
pub fn random_poly<R: Rng + ?Sized>(rng: &mut R, dim: usize, max_degree: u32, max_terms: usize) -> PolyFun {
    let n = rng.gen_range(1..=max_terms.max(1));
    let terms = (0..n).map(|_| {
        let mut exps = vec![0u32; dim];
        let deg = rng.gen_range(0..=max_degree);
        for _ in 0..deg {
            if dim > 0 {
                exps[rng.gen_range(0..dim)] += 1;
            }
        }
        (Monomial(exps), GaussianRational::from_int(rng.gen_range(-3..=3)))
    });
    PolyFun::from_terms(dim, terms)
}

pub fn random_one_form<R: Rng + ?Sized>(rng: &mut R, dim: usize, max_degree: u32) -> OneForm {
    OneForm::new((0..dim).map(|_| random_poly(rng, dim, max_degree, 3)).collect())
}

/// Random `degree`-vector; every sorted index tuple gets a random component.
pub fn random_multivector<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    degree: usize,
    max_degree: u32,
) -> Multivector {
    let mut m = Multivector::zero(dim, degree);
    for idx in index_tuples(dim, degree) {
        let c = random_poly(rng, dim, max_degree, 3);
        m.add_component(idx, &c);
    }
    m
}

/// Sorted `k`-subsets of `0..dim`.
pub fn index_tuples(dim: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, dim: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..dim {
            cur.push(i);
            go(i + 1, dim, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, dim, k, &mut Vec::new(), &mut out);
    out
}
