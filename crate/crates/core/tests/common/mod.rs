#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use weylflow::series::Monomial;
use weylflow::{ExactScalar, GradedSeries, MultiIndex, Realization};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn small_rational(rng: &mut ChaCha8Rng) -> BigRational {
    let mut num = rng.gen_range(-4i64..=4);
    if num == 0 {
        num = 1;
    }
    let den = rng.gen_range(1i64..=3);
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// A p-only polynomial with at most `terms` monomials of degree <= `degree`.
pub fn random_poly(rng: &mut ChaCha8Rng, n: usize, degree: u32, terms: usize, allow_constant: bool) -> GradedSeries {
    let count = rng.gen_range(0..=terms);
    let lo = if allow_constant { 0 } else { 1 };
    let mut out = Vec::new();
    for _ in 0..count {
        let d = rng.gen_range(lo..=degree);
        let mut idx = vec![0u32; n];
        for _ in 0..d {
            idx[rng.gen_range(0..n)] += 1;
        }
        out.push((
            Monomial::new(MultiIndex::zero(n), MultiIndex::from_vec(idx)),
            ExactScalar::real(small_rational(rng)),
        ));
    }
    GradedSeries::from_terms(n, 0, None, out).expect("dimension matches")
}

pub struct Shape {
    pub n: usize,
    pub degree: u32,
    pub terms: usize,
    pub with_chi: bool,
    pub random_metric: bool,
}

pub fn random_realization(rng: &mut ChaCha8Rng, shape: &Shape) -> Realization {
    let n = shape.n;
    let phi = (0..n)
        .map(|_| (0..n).map(|_| random_poly(rng, n, shape.degree, shape.terms, true)).collect())
        .collect();
    let chi = (0..n)
        .map(|_| {
            if shape.with_chi {
                random_poly(rng, n, shape.degree, shape.terms, true)
            } else {
                GradedSeries::zero(n, 0)
            }
        })
        .collect();
    let metric = (0..n)
        .map(|_| if shape.random_metric && rng.gen_bool(0.5) { -1 } else { 1 })
        .collect();
    Realization::new(metric, phi, chi, None).expect("random realization is valid")
}

/// One-dimensional realization whose phi has a nonconstant part, so two of
/// them generically do not commute.
pub fn random_1d(rng: &mut ChaCha8Rng, degree: u32, with_chi: bool) -> Realization {
    loop {
        let phi = random_poly(rng, 1, degree, 3, true);
        if phi.max_p_degree().unwrap_or(0) < 1 {
            continue;
        }
        let chi = if with_chi {
            random_poly(rng, 1, degree, 2, true)
        } else {
            GradedSeries::zero(1, 0)
        };
        return Realization::new(vec![1], vec![vec![phi]], vec![chi], None).expect("valid");
    }
}

pub fn ident(n: usize, kmax: u32) -> Vec<GradedSeries> {
    (0..n).map(|mu| GradedSeries::p_var(n, kmax, mu)).collect()
}
