mod common;

use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use common::{random_realization, rng, Shape};
use weylflow::flows::compute_phi;
use weylflow::weyl::coordinate_exponent;
use weylflow::{AlgebraSignature, ExactScalar, GradedSeries, MultiIndex, WeylElement};

const KMAX: u32 = 2;

fn signature() -> impl Strategy<Value = AlgebraSignature> {
    prop_oneof![
        Just(AlgebraSignature::euclidean(2)),
        Just(AlgebraSignature::new(vec![-1, 1]).unwrap()),
    ]
}

fn scalar() -> impl Strategy<Value = ExactScalar> {
    (-4i64..=4, 1i64..=3, -2i64..=2).prop_map(|(a, b, im)| {
        ExactScalar::new(
            BigRational::new(BigInt::from(a), BigInt::from(b)),
            BigRational::from_integer(BigInt::from(im)),
        )
    })
}

type RawTerm = ([u32; 2], [u32; 2], [u32; 2], ExactScalar);

fn raw_terms() -> impl Strategy<Value = Vec<RawTerm>> {
    prop::collection::vec(
        (prop::array::uniform2(0u32..=2), prop::array::uniform2(0u32..=2), prop::array::uniform2(0u32..=1), scalar()),
        0..4,
    )
}

fn element(sig: &AlgebraSignature, raw: &[RawTerm]) -> WeylElement {
    raw.iter().fold(WeylElement::zero(sig, KMAX), |acc, (x, p, k, c)| {
        let m = WeylElement::monomial(
            sig,
            KMAX,
            MultiIndex::from_vec(x.to_vec()),
            MultiIndex::from_vec(p.to_vec()),
            MultiIndex::from_vec(k.to_vec()),
            c.clone(),
        );
        acc.add(&m).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn product_is_associative(sig in signature(), a in raw_terms(), b in raw_terms(), c in raw_terms()) {
        let (a, b, c) = (element(&sig, &a), element(&sig, &b), element(&sig, &c));
        let left = a.mul(&b).unwrap().mul(&c).unwrap();
        let right = a.mul(&b.mul(&c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn product_distributes(sig in signature(), a in raw_terms(), b in raw_terms(), c in raw_terms()) {
        let (a, b, c) = (element(&sig, &a), element(&sig, &b), element(&sig, &c));
        let left = a.mul(&b.add(&c).unwrap()).unwrap();
        let right = a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn pure_momenta_and_pure_coordinates_commute(sig in signature(), a in raw_terms(), b in raw_terms(), x_side in any::<bool>()) {
        let strip = |raw: &[RawTerm]| -> Vec<RawTerm> {
            raw.iter()
                .map(|(x, p, k, c)| if x_side { (*x, [0, 0], *k, c.clone()) } else { ([0, 0], *p, *k, c.clone()) })
                .collect()
        };
        let (a, b) = (element(&sig, &strip(&a)), element(&sig, &strip(&b)));
        prop_assert!(a.commutator(&b).unwrap().is_zero());
    }

    #[test]
    fn normal_product_is_commutative(sig in signature(), a in raw_terms(), b in raw_terms()) {
        let (a, b) = (element(&sig, &a), element(&sig, &b));
        prop_assert_eq!(a.normal_product(&b).unwrap(), b.normal_product(&a).unwrap());
    }
}

#[test]
fn canonical_commutator_carries_the_metric() {
    let sig = AlgebraSignature::new(vec![-1, 1]).unwrap();
    for mu in 0..2 {
        for nu in 0..2 {
            let c = WeylElement::p_var(&sig, 1, mu).commutator(&WeylElement::x_var(&sig, 1, nu)).unwrap();
            let expected = if mu == nu {
                let eta = if mu == 0 { -1 } else { 1 };
                WeylElement::constant(&sig, 1, ExactScalar::i().scale(&BigRational::from_integer(BigInt::from(-eta))))
            } else {
                WeylElement::zero(&sig, 1)
            };
            assert_eq!(c, expected, "[p_{mu}, x_{nu}]");
        }
    }
}

/// `[p_mu, .]` applied m times to `exp(i k x phi)` and restricted to x = 0
/// gives `(eta_mu phi_mu(k, p))^m`.
#[test]
fn iterated_momentum_commutators_give_powers_of_phi() {
    let mut g = rng(0x77);
    for case in 0..6 {
        let n = 1 + case % 2;
        let kmax = if n == 1 { 5 } else { 4 };
        let shape = Shape { n, degree: 2, terms: 2, with_chi: false, random_metric: case % 3 == 0 };
        let r = random_realization(&mut g, &shape);
        let sig = AlgebraSignature::of(&r);
        let e = coordinate_exponent(&r, kmax).unwrap().exp(kmax).unwrap();
        let phi = compute_phi(&r, kmax).unwrap();
        for (mu, phi_mu) in phi.iter().enumerate() {
            let step = phi_mu.scale(&r.eta(mu));
            let mut power = GradedSeries::one(n, kmax);
            for m in 0..=4 {
                let lhs = e.ad_p_iterate(mu, m).unwrap().set_x_zero();
                let rhs = WeylElement::from_series(&sig, &power).unwrap();
                assert_eq!(lhs, rhs, "case {case}, mu {mu}, m {m}");
                power = power.try_mul(&step).unwrap();
            }
        }
    }
}
