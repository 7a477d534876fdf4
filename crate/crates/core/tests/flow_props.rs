mod common;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

use common::{ident, random_1d, random_realization, rng, Shape};
use weylflow::flows::{
    compose_flows, compute_flow, compute_h, compute_j, exp_field, higher_corrections, linear_closed_form,
    recover_generator,
};
use weylflow::series::Monomial;
use weylflow::{ExactScalar, FlowError, GradedSeries, LinearRealization, Realization};

/// `s(k, p) -> s(c k, p)`.
fn rescale_k(s: &GradedSeries, c: &BigRational) -> GradedSeries {
    let terms: Vec<(Monomial, ExactScalar)> = s
        .terms()
        .map(|(m, v)| {
            let w = num_traits::pow(c.clone(), m.k.degree() as usize);
            (m.clone(), v.scale(&w))
        })
        .collect();
    GradedSeries::from_terms(s.n(), s.kmax(), s.pmax(), terms).unwrap()
}

fn shape_for(n: usize) -> Shape {
    Shape { n, degree: 2, terms: 2, with_chi: true, random_metric: true }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn scaling_the_realization_rescales_k(seed in any::<u64>(), n in 1usize..=2, num in -3i64..=3, den in 1i64..=3) {
        prop_assume!(num != 0);
        let c = BigRational::new(BigInt::from(num), BigInt::from(den));
        let r = random_realization(&mut rng(seed), &shape_for(n));
        let kmax = 3;
        let base = compute_flow(&r, kmax).unwrap();
        let scaled = compute_flow(&r.scaled(&ExactScalar::real(c.clone())), kmax).unwrap();
        for mu in 0..n {
            prop_assert_eq!(&scaled.j[mu], &rescale_k(&base.j[mu], &c));
        }
        prop_assert_eq!(scaled.h, rescale_k(&base.h, &c));
    }

    #[test]
    fn negated_flow_is_the_inverse(seed in any::<u64>(), n in 1usize..=2) {
        let r = random_realization(&mut rng(seed), &shape_for(n));
        let kmax = if n == 1 { 5 } else { 3 };
        let j = compute_j(&r, kmax).unwrap();
        let jinv = compute_j(&r.negated(), kmax).unwrap();
        prop_assert_eq!(compose_flows(&j, &jinv).unwrap(), ident(n, kmax));
        prop_assert_eq!(compose_flows(&jinv, &j).unwrap(), ident(n, kmax));
    }

    #[test]
    fn generator_of_a_single_flow_is_its_field(seed in any::<u64>(), n in 1usize..=2) {
        let r = random_realization(&mut rng(seed), &shape_for(n));
        let kmax = if n == 1 { 4 } else { 3 };
        let j = compute_j(&r, kmax).unwrap();
        let g = recover_generator(&j).unwrap();
        prop_assert_eq!(&g, &r.vector_field(kmax));
        prop_assert!(higher_corrections(&g).iter().all(GradedSeries::is_zero));
        for (mu, jm) in j.iter().enumerate() {
            prop_assert_eq!(&exp_field(&g, &GradedSeries::p_var(n, kmax, mu)).unwrap(), jm);
        }
    }

    #[test]
    fn recovered_generator_reproduces_a_composition(seed in any::<u64>()) {
        let mut g = rng(seed);
        let kmax = 4;
        let j1 = compute_j(&random_1d(&mut g, 2, false), kmax).unwrap();
        let j2 = compute_j(&random_1d(&mut g, 2, false), kmax).unwrap();
        let j3 = compose_flows(&j1, &j2).unwrap();
        let gen = recover_generator(&j3).unwrap();
        prop_assert_eq!(exp_field(&gen, &GradedSeries::p_var(1, kmax, 0)).unwrap(), j3[0].clone());
    }
}

#[test]
fn linear_realizations_match_the_matrix_exponential() {
    let mut g = rng(0x51);
    for _ in 0..10 {
        let n = 2 + (rand::Rng::gen_range(&mut g, 0..2usize));
        let a: Vec<Vec<BigRational>> = (0..n)
            .map(|_| (0..n).map(|_| common::small_rational(&mut g)).collect())
            .collect();
        let lr = LinearRealization::new(a).unwrap();
        let fr = compute_flow(&lr.to_realization(), 8).unwrap();
        assert_eq!(fr.phi, linear_closed_form(&lr, 8));
    }
}

#[test]
fn nilpotent_linear_flow_terminates() {
    let z = BigRational::zero();
    let one = BigRational::one();
    let lr = LinearRealization::new(vec![vec![z.clone(), one], vec![z.clone(), z]]).unwrap();
    let phi = compute_flow(&lr.to_realization(), 8).unwrap().phi;
    assert_eq!(phi.iter().filter_map(GradedSeries::max_k_degree).max(), Some(1));
}

#[test]
fn phase_without_chi_vanishes() {
    let mut g = rng(0x52);
    let r = random_realization(&mut g, &Shape { n: 2, degree: 2, terms: 2, with_chi: false, random_metric: true });
    assert!(compute_h(&r, 4).unwrap().is_zero());
}

#[test]
fn k_dependent_entries_are_rejected() {
    let k = GradedSeries::k_var(1, 1, 0);
    let err = Realization::euclidean(vec![vec![k]]).unwrap_err();
    assert!(matches!(err, FlowError::EntryDependsOnK(_)));
}

#[test]
fn compose_rejects_mismatched_orders() {
    let r = random_1d(&mut rng(0x53), 2, false);
    let j2 = compute_j(&r, 2).unwrap();
    let j3 = compute_j(&r, 3).unwrap();
    assert!(matches!(compose_flows(&j2, &j3), Err(FlowError::OrderMismatch(2, 3))));
}
