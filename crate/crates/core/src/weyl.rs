//! Brute-force Weyl–Heisenberg algebra used as an independent oracle.
//!
//! Elements are stored normal-ordered: a key `(x, p, k)` means the operator
//! `x^x p^p` with every coordinate to the left of every momentum, times the
//! central parameters `k^k`. Products are reordered with the closed form
//!
//! ```text
//! p^b x^c = sum_j C(b,j) C(c,j) j! (-i eta)^j x^(c-j) p^(b-j)
//! ```
//!
//! per coordinate; distinct coordinates commute. Nothing here calls the flow
//! combinators; only their output series are compared against.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{AlgebraError, OracleError};
use crate::flows::{self, FlowResult, Realization};
use crate::index::MultiIndex;
use crate::scalar::{rational_to_string, ExactScalar};
use crate::series::{GradedSeries, Monomial};

/// Dimension and diagonal metric of `[p_mu, x_nu] = -i eta_mu_nu`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AlgebraSignature {
    pub n: usize,
    pub metric: Vec<i32>,
}

impl AlgebraSignature {
    pub fn new(metric: Vec<i32>) -> Result<Self, OracleError> {
        if let Some(&bad) = metric.iter().find(|&&m| m != 1 && m != -1) {
            return Err(crate::error::FlowError::InvalidMetric(bad).into());
        }
        Ok(Self {
            n: metric.len(),
            metric,
        })
    }

    pub fn euclidean(n: usize) -> Self {
        Self {
            n,
            metric: vec![1; n],
        }
    }

    pub fn of(r: &Realization) -> Self {
        Self {
            n: r.n(),
            metric: r.metric().to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WeylMonomial {
    pub x: MultiIndex,
    pub p: MultiIndex,
    pub k: MultiIndex,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeylElement {
    sig: AlgebraSignature,
    kmax: u32,
    terms: BTreeMap<WeylMonomial, ExactScalar>,
}

fn binomial(n: u32, k: u32) -> BigInt {
    (0..k).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - i) / BigInt::from(i + 1))
}

fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// `(j, C(b,j) C(c,j) j! (-eta)^j)` for `p^b x^c`; the `i^j` is applied by
/// the caller.
fn reorder_terms(b: u32, c: u32, eta: i32) -> Vec<(u32, BigInt)> {
    (0..=b.min(c))
        .map(|j| {
            let mut coef = binomial(b, j) * binomial(c, j) * factorial(j);
            if (-eta).pow(j) < 0 {
                coef = -coef;
            }
            (j, coef)
        })
        .collect()
}

impl WeylElement {
    pub fn zero(sig: &AlgebraSignature, kmax: u32) -> Self {
        Self {
            sig: sig.clone(),
            kmax,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(sig: &AlgebraSignature, kmax: u32, c: ExactScalar) -> Self {
        let n = sig.n;
        Self::monomial(sig, kmax, MultiIndex::zero(n), MultiIndex::zero(n), MultiIndex::zero(n), c)
    }

    pub fn one(sig: &AlgebraSignature, kmax: u32) -> Self {
        Self::constant(sig, kmax, ExactScalar::one())
    }

    pub fn monomial(
        sig: &AlgebraSignature,
        kmax: u32,
        x: MultiIndex,
        p: MultiIndex,
        k: MultiIndex,
        c: ExactScalar,
    ) -> Self {
        let mut e = Self::zero(sig, kmax);
        e.add_term(WeylMonomial { x, p, k }, c);
        e
    }

    pub fn x_var(sig: &AlgebraSignature, kmax: u32, mu: usize) -> Self {
        let n = sig.n;
        Self::monomial(sig, kmax, MultiIndex::unit(n, mu), MultiIndex::zero(n), MultiIndex::zero(n), ExactScalar::one())
    }

    pub fn p_var(sig: &AlgebraSignature, kmax: u32, mu: usize) -> Self {
        let n = sig.n;
        Self::monomial(sig, kmax, MultiIndex::zero(n), MultiIndex::unit(n, mu), MultiIndex::zero(n), ExactScalar::one())
    }

    pub fn k_var(sig: &AlgebraSignature, kmax: u32, mu: usize) -> Self {
        let n = sig.n;
        Self::monomial(sig, kmax, MultiIndex::zero(n), MultiIndex::zero(n), MultiIndex::unit(n, mu), ExactScalar::one())
    }

    /// Embeds a polynomial series in `p` and `k` (no coordinates).
    pub fn from_series(sig: &AlgebraSignature, s: &GradedSeries) -> Result<Self, OracleError> {
        if s.n() != sig.n {
            return Err(AlgebraError::DimensionMismatch { expected: sig.n, found: s.n() }.into());
        }
        if s.pmax().is_some() {
            return Err(OracleError::NotPolynomial);
        }
        let mut e = Self::zero(sig, s.kmax());
        for (m, c) in s.terms() {
            e.add_term(
                WeylMonomial {
                    x: MultiIndex::zero(sig.n),
                    p: m.p.clone(),
                    k: m.k.clone(),
                },
                c.clone(),
            );
        }
        Ok(e)
    }

    /// The coordinate-free part as a series; fails if any `x` survives.
    pub fn to_series(&self) -> Result<GradedSeries, OracleError> {
        if self.terms.keys().any(|m| !m.x.is_zero()) {
            return Err(AlgebraError::Malformed("element still contains coordinates".into()).into());
        }
        Ok(GradedSeries::from_terms(
            self.sig.n,
            self.kmax,
            None,
            self.terms
                .iter()
                .map(|(m, c)| (Monomial::new(m.k.clone(), m.p.clone()), c.clone())),
        )?)
    }

    pub fn signature(&self) -> &AlgebraSignature {
        &self.sig
    }

    pub fn kmax(&self) -> u32 {
        self.kmax
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&WeylMonomial, &ExactScalar)> {
        self.terms.iter()
    }

    pub fn min_k_degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.k.degree()).min()
    }

    fn add_term(&mut self, m: WeylMonomial, c: ExactScalar) {
        if c.is_zero() || m.k.degree() > self.kmax {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += &c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    fn check_sig(&self, other: &Self) -> Result<(), OracleError> {
        if self.sig != other.sig {
            return Err(OracleError::SignatureMismatch);
        }
        Ok(())
    }

    pub fn truncate(&self, kmax: u32) -> Self {
        let mut e = Self::zero(&self.sig, kmax.min(self.kmax));
        for (m, c) in &self.terms {
            e.add_term(m.clone(), c.clone());
        }
        e
    }

    pub fn scale(&self, c: &ExactScalar) -> Self {
        let mut e = Self::zero(&self.sig, self.kmax);
        for (m, v) in &self.terms {
            e.add_term(m.clone(), v * c);
        }
        e
    }

    pub fn neg(&self) -> Self {
        self.scale(&-ExactScalar::one())
    }

    pub fn add(&self, other: &Self) -> Result<Self, OracleError> {
        self.check_sig(other)?;
        let mut e = Self::zero(&self.sig, self.kmax.min(other.kmax));
        for (m, c) in self.terms.iter().chain(&other.terms) {
            e.add_term(m.clone(), c.clone());
        }
        Ok(e)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, OracleError> {
        self.add(&other.neg())
    }

    /// Operator product `self * other`, brought back to normal order.
    pub fn mul(&self, other: &Self) -> Result<Self, OracleError> {
        self.check_sig(other)?;
        let n = self.sig.n;
        let kmax = self.kmax.min(other.kmax);
        let mut acc: HashMap<WeylMonomial, ExactScalar> = HashMap::new();
        for (ma, ca) in &self.terms {
            let ka = ma.k.degree();
            for (mb, cb) in &other.terms {
                if ka + mb.k.degree() > kmax {
                    continue;
                }
                let k = ma.k.add(&mb.k);
                let base = ca * cb;
                // every combination of per-coordinate contraction counts
                let per_coord: Vec<Vec<(u32, BigInt)>> = (0..n)
                    .map(|mu| reorder_terms(ma.p.get(mu), mb.x.get(mu), self.sig.metric[mu]))
                    .collect();
                let mut choice = vec![0usize; n];
                loop {
                    let mut coef = BigInt::one();
                    let mut x = Vec::with_capacity(n);
                    let mut p = Vec::with_capacity(n);
                    let mut total_j = 0;
                    for mu in 0..n {
                        let (j, c) = &per_coord[mu][choice[mu]];
                        coef *= c;
                        total_j += j;
                        x.push(ma.x.get(mu) + mb.x.get(mu) - j);
                        p.push(ma.p.get(mu) - j + mb.p.get(mu));
                    }
                    let c = base.scale(&BigRational::from_integer(coef)).times_i_pow(total_j);
                    let key = WeylMonomial {
                        x: MultiIndex::from_vec(x),
                        p: MultiIndex::from_vec(p),
                        k: k.clone(),
                    };
                    match acc.get_mut(&key) {
                        Some(v) => *v += &c,
                        None => {
                            acc.insert(key, c);
                        }
                    }
                    // odometer over the choices
                    let mut mu = 0;
                    while mu < n {
                        choice[mu] += 1;
                        if choice[mu] < per_coord[mu].len() {
                            break;
                        }
                        choice[mu] = 0;
                        mu += 1;
                    }
                    if mu == n {
                        break;
                    }
                }
            }
        }
        let mut e = Self::zero(&self.sig, kmax);
        e.terms = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        Ok(e)
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &Self) -> Result<Self, OracleError> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    /// Product of normal-ordered symbols: factors are multiplied as if
    /// commuting, so `x`'s stay left of `p`'s. This builds `:F G:`.
    pub fn normal_product(&self, other: &Self) -> Result<Self, OracleError> {
        self.check_sig(other)?;
        let mut e = Self::zero(&self.sig, self.kmax.min(other.kmax));
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                e.add_term(
                    WeylMonomial {
                        x: ma.x.add(&mb.x),
                        p: ma.p.add(&mb.p),
                        k: ma.k.add(&mb.k),
                    },
                    ca * cb,
                );
            }
        }
        Ok(e)
    }

    fn exp_with(
        &self,
        kmax: u32,
        mul: impl Fn(&Self, &Self) -> Result<Self, OracleError>,
    ) -> Result<Self, OracleError> {
        if self.min_k_degree() == Some(0) {
            return Err(OracleError::NonTruncatingExponent);
        }
        let e = self.truncate(kmax);
        let mut acc = Self::one(&self.sig, e.kmax);
        let mut power = acc.clone();
        for r in 1..=e.kmax {
            power = mul(&power, &e)?.scale(&ExactScalar::ratio(1, r as i64));
            if power.is_zero() {
                break;
            }
            acc = acc.add(&power)?;
        }
        Ok(acc)
    }

    /// `sum_{r <= kmax} self^r / r!` with operator products.
    pub fn exp(&self, kmax: u32) -> Result<Self, OracleError> {
        self.exp_with(kmax, Self::mul)
    }

    /// `:exp(self):`, the exponential of a normal-ordered symbol.
    pub fn normal_exp(&self, kmax: u32) -> Result<Self, OracleError> {
        self.exp_with(kmax, Self::normal_product)
    }

    /// `[p_mu, self]`.
    pub fn ad_p(&self, mu: usize) -> Result<Self, OracleError> {
        if mu >= self.sig.n {
            return Err(AlgebraError::IndexOutOfRange { index: mu, n: self.sig.n }.into());
        }
        Self::p_var(&self.sig, self.kmax, mu).commutator(self)
    }

    /// `m`-fold `[p_mu, .]`.
    pub fn ad_p_iterate(&self, mu: usize, m: u32) -> Result<Self, OracleError> {
        (0..m).try_fold(self.clone(), |e, _| e.ad_p(mu))
    }

    /// Keeps only the terms without coordinates (evaluation at `x = 0`).
    pub fn set_x_zero(&self) -> Self {
        let mut e = Self::zero(&self.sig, self.kmax);
        for (m, c) in &self.terms {
            if m.x.is_zero() {
                e.add_term(m.clone(), c.clone());
            }
        }
        e
    }
}

#[derive(Serialize)]
struct WeylTermJson {
    x: Vec<u32>,
    p: Vec<u32>,
    k: Vec<u32>,
    re: String,
    im: String,
}

impl Serialize for WeylElement {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let terms: Vec<WeylTermJson> = self
            .terms
            .iter()
            .map(|(m, c)| WeylTermJson {
                x: m.x.as_slice().to_vec(),
                p: m.p.as_slice().to_vec(),
                k: m.k.as_slice().to_vec(),
                re: rational_to_string(&c.re),
                im: rational_to_string(&c.im),
            })
            .collect();
        let mut st = serializer.serialize_struct("WeylElement", 4)?;
        st.serialize_field("n", &self.sig.n)?;
        st.serialize_field("metric", &self.sig.metric)?;
        st.serialize_field("kmax", &self.kmax)?;
        st.serialize_field("terms", &terms)?;
        st.end()
    }
}

/// `:exp(i x_a phi_a): exp(i h)` assembled as a normal-ordered symbol.
pub fn normal_order_of_flow(fr: &FlowResult, sig: &AlgebraSignature) -> Result<WeylElement, OracleError> {
    if fr.n() != sig.n || fr.phi.len() != sig.n {
        return Err(AlgebraError::DimensionMismatch { expected: sig.n, found: fr.n() }.into());
    }
    let i = ExactScalar::i();
    let mut x_phi = WeylElement::zero(sig, fr.kmax);
    for (a, ph) in fr.phi.iter().enumerate() {
        let term = WeylElement::x_var(sig, fr.kmax, a).normal_product(&WeylElement::from_series(sig, ph)?)?;
        x_phi = x_phi.add(&term)?;
    }
    let left = x_phi.scale(&i).normal_exp(fr.kmax)?;
    let right = WeylElement::from_series(sig, &fr.h)?.scale(&i).normal_exp(fr.kmax)?;
    left.normal_product(&right)
}

/// `i k_b x_a phi_ab(p)` as an operator.
pub fn coordinate_exponent(r: &Realization, kmax: u32) -> Result<WeylElement, OracleError> {
    let sig = AlgebraSignature::of(r);
    let mut acc = WeylElement::zero(&sig, kmax);
    for a in 0..r.n() {
        for b in 0..r.n() {
            let entry = WeylElement::from_series(&sig, &r.phi(a, b).with_kmax(kmax))?;
            let term = WeylElement::x_var(&sig, kmax, a)
                .mul(&entry)?
                .mul(&WeylElement::k_var(&sig, kmax, b))?;
            acc = acc.add(&term)?;
        }
    }
    Ok(acc.scale(&ExactScalar::i()))
}

/// `i k_a chi_a(p)` as an operator.
pub fn momentum_exponent(r: &Realization, kmax: u32) -> Result<WeylElement, OracleError> {
    let sig = AlgebraSignature::of(r);
    let mut acc = WeylElement::zero(&sig, kmax);
    for a in 0..r.n() {
        let entry = WeylElement::from_series(&sig, &r.chi(a).with_kmax(kmax))?;
        acc = acc.add(&entry.mul(&WeylElement::k_var(&sig, kmax, a))?)?;
    }
    Ok(acc.scale(&ExactScalar::i()))
}

/// Outcome of an oracle comparison: `discrepancy = lhs - rhs`.
#[derive(Clone, Debug, Serialize)]
pub struct Verification {
    pub equal: bool,
    pub discrepancy: WeylElement,
}

impl Verification {
    fn compare(lhs: &WeylElement, rhs: &WeylElement) -> Result<Self, OracleError> {
        let discrepancy = lhs.sub(rhs)?;
        Ok(Self {
            equal: discrepancy.is_zero(),
            discrepancy,
        })
    }
}

/// Expands the full exponential by operator products and compares it with
/// the normal-ordered form built from the flow engine's output.
pub fn verify_normal_ordering(r: &Realization, kmax: u32) -> Result<Verification, OracleError> {
    if !r.is_polynomial() {
        return Err(OracleError::NotPolynomial);
    }
    let sig = AlgebraSignature::of(r);
    let exponent = coordinate_exponent(r, kmax)?.add(&momentum_exponent(r, kmax)?)?;
    let lhs = exponent.exp(kmax)?;
    let rhs = normal_order_of_flow(&flows::compute_flow(r, kmax)?, &sig)?;
    Verification::compare(&lhs, &rhs)
}

/// `exp(A + B + [A,B]/2 + ([A,[A,B]] + [B,[B,A]])/12)` through k-order 3.
pub fn bch_reference(a: &WeylElement, b: &WeylElement, kmax: u32) -> Result<WeylElement, OracleError> {
    if kmax > 3 {
        return Err(OracleError::BchOrderTooHigh(kmax));
    }
    if a.min_k_degree() == Some(0) || b.min_k_degree() == Some(0) {
        return Err(OracleError::NonTruncatingExponent);
    }
    let a = a.truncate(kmax);
    let b = b.truncate(kmax);
    let ab = a.commutator(&b)?;
    let third = a.commutator(&ab)?.add(&b.commutator(&b.commutator(&a)?)?)?;
    let z = a
        .add(&b)?
        .add(&ab.scale(&ExactScalar::ratio(1, 2)))?
        .add(&third.scale(&ExactScalar::ratio(1, 12)))?;
    z.exp(kmax)
}

/// Compares `exp(i h)` from the flow engine with the BCH product of
/// `A = -i k_b x_a phi_ab` and `B = -A + i k_a chi_a`.
pub fn verify_bch(r: &Realization, kmax: u32) -> Result<Verification, OracleError> {
    if !r.is_polynomial() {
        return Err(OracleError::NotPolynomial);
    }
    let kmax = kmax.min(3);
    let sig = AlgebraSignature::of(r);
    let x_part = coordinate_exponent(r, kmax)?;
    let a = x_part.neg();
    let b = x_part.add(&momentum_exponent(r, kmax)?)?;
    let lhs = bch_reference(&a, &b, kmax)?;
    let h = flows::compute_h(r, kmax)?;
    let rhs = WeylElement::from_series(&sig, &h)?.scale(&ExactScalar::i()).exp(kmax)?;
    Verification::compare(&lhs, &rhs)
}

/// `exp(A) exp(B)` against `exp(i h)` with plain operator products, at any
/// order.
pub fn verify_phase_product(r: &Realization, kmax: u32) -> Result<Verification, OracleError> {
    if !r.is_polynomial() {
        return Err(OracleError::NotPolynomial);
    }
    let sig = AlgebraSignature::of(r);
    let x_part = coordinate_exponent(r, kmax)?;
    let b = x_part.add(&momentum_exponent(r, kmax)?)?;
    let lhs = x_part.neg().exp(kmax)?.mul(&b.exp(kmax)?)?;
    let h = flows::compute_h(r, kmax)?;
    let rhs = WeylElement::from_series(&sig, &h)?.scale(&ExactScalar::i()).exp(kmax)?;
    Verification::compare(&lhs, &rhs)
}
