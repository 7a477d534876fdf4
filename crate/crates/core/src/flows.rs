//! Flow series of exponentials linear in the coordinates.
//!
//! For the exponent `i k_b x_a phi_ab(p) + i k_a chi_a(p)` the conjugated
//! momenta `J_mu(k, p)`, the normal-ordered exponents `phi_mu(k, p)` and the
//! phase `h(k, p)` are all obtained from one first-order operator
//!
//! ```text
//! O = sum_{a,b} k_a eta_bb phi_ba(p) d/dp_b
//! ```
//!
//! which is `ad` of `-i k_a x_b phi_ba(p)` under `[p_mu, x_nu] = -i eta_mu_nu`.
//! Then `J = exp(O) p`, `phi_mu = ((exp(O) - 1)/O)(k_b phi_mu_b)` and
//! `h = ((exp(O) - 1)/O)(k_b chi_b)`. The quotient is always the series
//! `sum_r O^r/(r+1)!`; it never divides by an operator.
//!
//! Everything is graded by total k-degree, so one formal parameter `lambda`
//! scaling all `k` is the same as the total k-order.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{AlgebraError, FlowError};
use crate::index::MultiIndex;
use crate::scalar::ExactScalar;
use crate::series::{check_identity_shape, GradedSeries};

/// Input of the flow engine: dimension, diagonal metric, `phi_ab(p)` and
/// `chi_a(p)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Realization {
    n: usize,
    metric: Vec<i32>,
    phi: Vec<Vec<GradedSeries>>,
    chi: Vec<GradedSeries>,
    pmax: Option<u32>,
}

impl Realization {
    /// `phi[a][b]` is the entry `phi_ab`. Without `pmax` every entry must be an
    /// exact polynomial.
    pub fn new(
        metric: Vec<i32>,
        phi: Vec<Vec<GradedSeries>>,
        chi: Vec<GradedSeries>,
        pmax: Option<u32>,
    ) -> Result<Self, FlowError> {
        let n = metric.len();
        if let Some(&bad) = metric.iter().find(|&&m| m != 1 && m != -1) {
            return Err(FlowError::InvalidMetric(bad));
        }
        if phi.len() != n {
            return Err(FlowError::ComponentCount { expected: n, found: phi.len() });
        }
        if chi.len() != n {
            return Err(FlowError::ComponentCount { expected: n, found: chi.len() });
        }
        let mut norm_phi = Vec::with_capacity(n);
        for (a, row) in phi.into_iter().enumerate() {
            if row.len() != n {
                return Err(FlowError::ComponentCount { expected: n, found: row.len() });
            }
            let mut norm_row = Vec::with_capacity(n);
            for (b, e) in row.into_iter().enumerate() {
                let name = format!("phi[{a}][{b}]");
                let e = normalize_entry(e, n, pmax, &name)?;
                if pmax.is_some() && !e.k_slice(0).filter(|m| m.p.is_zero()).is_zero() {
                    return Err(FlowError::TruncationUnsafe(name));
                }
                norm_row.push(e);
            }
            norm_phi.push(norm_row);
        }
        let chi = chi
            .into_iter()
            .enumerate()
            .map(|(a, e)| normalize_entry(e, n, pmax, &format!("chi[{a}]")))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            n,
            metric,
            phi: norm_phi,
            chi,
            pmax,
        })
    }

    /// Realization with the all-plus metric and zero `chi`.
    pub fn euclidean(phi: Vec<Vec<GradedSeries>>) -> Result<Self, FlowError> {
        let n = phi.len();
        Self::new(vec![1; n], phi, vec![GradedSeries::zero(n, 0); n], None)
    }

    pub fn with_chi(self, chi: Vec<GradedSeries>) -> Result<Self, FlowError> {
        Self::new(self.metric, self.phi, chi, self.pmax)
    }

    pub fn with_metric(self, metric: Vec<i32>) -> Result<Self, FlowError> {
        Self::new(metric, self.phi, self.chi, self.pmax)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn metric(&self) -> &[i32] {
        &self.metric
    }

    pub fn eta(&self, mu: usize) -> ExactScalar {
        ExactScalar::from(self.metric[mu] as i64)
    }

    pub fn phi(&self, a: usize, b: usize) -> &GradedSeries {
        &self.phi[a][b]
    }

    pub fn chi(&self, a: usize) -> &GradedSeries {
        &self.chi[a]
    }

    pub fn pmax(&self) -> Option<u32> {
        self.pmax
    }

    pub fn is_polynomial(&self) -> bool {
        self.pmax.is_none()
    }

    pub fn has_chi(&self) -> bool {
        self.chi.iter().any(|c| !c.is_zero())
    }

    fn map_entries(&self, f: impl Fn(&GradedSeries) -> GradedSeries) -> Self {
        Self {
            n: self.n,
            metric: self.metric.clone(),
            phi: self.phi.iter().map(|row| row.iter().map(&f).collect()).collect(),
            chi: self.chi.iter().map(&f).collect(),
            pmax: self.pmax,
        }
    }

    /// `phi -> -phi`, `chi -> -chi`: generates the inverse flow.
    pub fn negated(&self) -> Self {
        self.map_entries(GradedSeries::neg)
    }

    pub fn scaled(&self, c: &ExactScalar) -> Self {
        self.map_entries(|e| e.scale(c))
    }

    fn lift(&self, e: &GradedSeries, kmax: u32) -> GradedSeries {
        e.with_kmax(kmax).with_pmax(self.pmax)
    }

    /// `sum_b k_b phi_mu_b(p)`.
    pub fn phi_pairing(&self, mu: usize, kmax: u32) -> GradedSeries {
        self.pairing(&self.phi[mu], kmax)
    }

    /// `sum_b k_b chi_b(p)`.
    pub fn chi_pairing(&self, kmax: u32) -> GradedSeries {
        self.pairing(&self.chi, kmax)
    }

    fn pairing(&self, entries: &[GradedSeries], kmax: u32) -> GradedSeries {
        let mut acc = GradedSeries::zero(self.n, kmax).with_pmax(self.pmax);
        for (b, e) in entries.iter().enumerate() {
            let term = self.lift(e, kmax).shift_k(&MultiIndex::unit(self.n, b));
            acc = acc.try_add(&term).expect("same dimension");
        }
        acc
    }

    /// Components of `O` as a vector field: `V_b = eta_bb sum_a k_a phi_ba(p)`.
    pub fn vector_field(&self, kmax: u32) -> Vec<GradedSeries> {
        (0..self.n)
            .map(|b| self.phi_pairing(b, kmax).scale(&self.eta(b)))
            .collect()
    }

    fn identity(&self, kmax: u32) -> Vec<GradedSeries> {
        (0..self.n)
            .map(|mu| GradedSeries::p_var(self.n, kmax, mu).with_pmax(self.pmax))
            .collect()
    }
}

fn normalize_entry(
    e: GradedSeries,
    n: usize,
    pmax: Option<u32>,
    name: &str,
) -> Result<GradedSeries, FlowError> {
    if e.n() != n {
        return Err(AlgebraError::DimensionMismatch { expected: n, found: e.n() }.into());
    }
    if !e.is_k_free() {
        return Err(FlowError::EntryDependsOnK(name.to_string()));
    }
    if e.pmax().is_some() && pmax.is_none() {
        return Err(FlowError::NonPolynomialInput(name.to_string()));
    }
    Ok(e.with_kmax(0).with_pmax(pmax))
}

/// `sum_b field[b] * d f / dp_b`.
pub fn apply_field(field: &[GradedSeries], f: &GradedSeries) -> Result<GradedSeries, AlgebraError> {
    let mut acc = GradedSeries::zero(f.n(), f.kmax()).with_pmax(f.pmax());
    for (b, v) in field.iter().enumerate() {
        let d = f.dp(b)?;
        if d.is_zero() || v.is_zero() {
            continue;
        }
        acc = acc.try_add(&v.try_mul(&d)?)?;
    }
    Ok(acc)
}

/// `sum_r field^r(f) * weight(r)` for a field of k-degree at least one, so
/// the sum stops by itself once the k-order passes `kmax`.
fn field_series(
    field: &[GradedSeries],
    f: &GradedSeries,
    weight: impl Fn(u32) -> BigRational,
) -> Result<GradedSeries, AlgebraError> {
    debug_assert!(field.iter().all(|v| v.min_k_degree().is_none_or(|d| d >= 1)));
    let mut acc = GradedSeries::zero(f.n(), f.kmax()).with_pmax(f.pmax());
    let mut power = f.clone();
    let mut r = 0u32;
    while !power.is_zero() {
        acc = acc.try_add(&power.scale(&ExactScalar::real(weight(r))))?;
        power = apply_field(field, &power)?;
        r += 1;
    }
    Ok(acc)
}

fn factorial(r: u32) -> BigInt {
    (1..=r).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// `exp(field)(f) = sum_r field^r(f)/r!`, truncated at `f`'s k-order.
pub fn exp_field(field: &[GradedSeries], f: &GradedSeries) -> Result<GradedSeries, AlgebraError> {
    field_series(field, f, |r| BigRational::new(BigInt::one(), factorial(r)))
}

/// `((exp(field) - 1)/field)(f) = sum_r field^r(f)/(r+1)!`.
pub fn exp_minus_one_over(field: &[GradedSeries], f: &GradedSeries) -> Result<GradedSeries, AlgebraError> {
    field_series(field, f, |r| BigRational::new(BigInt::one(), factorial(r + 1)))
}

/// One application of `O = k_a O_a` to `f`.
pub fn apply_o(r: &Realization, f: &GradedSeries) -> Result<GradedSeries, FlowError> {
    check_n(r.n, f.n())?;
    Ok(apply_field(&r.vector_field(f.kmax()), &f.clone().with_pmax(min_opt(f.pmax(), r.pmax)))?)
}

fn min_opt(a: Option<u32>, b: Option<u32>) -> Option<u32> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

fn check_n(expected: usize, found: usize) -> Result<(), FlowError> {
    if expected != found {
        return Err(AlgebraError::DimensionMismatch { expected, found }.into());
    }
    Ok(())
}

/// `J_mu = exp(O)(p_mu)` through k-order `kmax`.
pub fn compute_j(r: &Realization, kmax: u32) -> Result<Vec<GradedSeries>, FlowError> {
    let field = r.vector_field(kmax);
    r.identity(kmax)
        .iter()
        .map(|p| exp_field(&field, p).map_err(FlowError::from))
        .collect()
}

/// Both routes to the normal-ordered exponents: `eta_mu (J_mu - p_mu)` and
/// `((exp(O)-1)/O)(k_b phi_mu_b)`.
pub fn phi_two_ways(
    r: &Realization,
    kmax: u32,
) -> Result<(Vec<GradedSeries>, Vec<GradedSeries>), FlowError> {
    let j = compute_j(r, kmax)?;
    let field = r.vector_field(kmax);
    let from_j = phi_from_j(r, &j)?;
    let combinator = (0..r.n)
        .map(|mu| exp_minus_one_over(&field, &r.phi_pairing(mu, kmax)).map_err(FlowError::from))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((from_j, combinator))
}

fn phi_from_j(r: &Realization, j: &[GradedSeries]) -> Result<Vec<GradedSeries>, FlowError> {
    j.iter()
        .zip(r.identity(j[0].kmax()))
        .enumerate()
        .map(|(mu, (jm, p))| Ok(jm.try_sub(&p)?.scale(&r.eta(mu))))
        .collect()
}

/// Normal-ordered exponents `phi_mu(k, p)`, checked by both routes.
pub fn compute_phi(r: &Realization, kmax: u32) -> Result<Vec<GradedSeries>, FlowError> {
    let (from_j, combinator) = phi_two_ways(r, kmax)?;
    for (mu, (a, b)) in from_j.iter().zip(&combinator).enumerate() {
        if a != b {
            return Err(FlowError::InconsistentPhi(mu));
        }
    }
    Ok(from_j)
}

/// `h = ((exp(O)-1)/O)(k_b chi_b)`.
pub fn compute_h(r: &Realization, kmax: u32) -> Result<GradedSeries, FlowError> {
    Ok(exp_minus_one_over(&r.vector_field(kmax), &r.chi_pairing(kmax))?)
}

/// `J`, `phi` and `h` at one truncation order.
///
/// Invariants: `J_mu - p_mu` and `h` start at k-order one, `phi_mu` equals
/// `eta_mu (J_mu - p_mu)`, and every coefficient is real.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowResult {
    pub kmax: u32,
    #[serde(rename = "J")]
    pub j: Vec<GradedSeries>,
    pub phi: Vec<GradedSeries>,
    pub h: GradedSeries,
}

impl FlowResult {
    pub fn n(&self) -> usize {
        self.j.len()
    }

    pub fn is_real(&self) -> bool {
        self.j.iter().chain(&self.phi).all(GradedSeries::is_real) && self.h.is_real()
    }

    /// Checks the structural invariants against the metric used to build it.
    pub fn check(&self, metric: &[i32]) -> Result<(), FlowError> {
        check_identity_shape(&self.j)?;
        if self.h.min_k_degree() == Some(0) {
            return Err(AlgebraError::Malformed("h has a k-order 0 term".into()).into());
        }
        for (mu, (jm, ph)) in self.j.iter().zip(&self.phi).enumerate() {
            let p = GradedSeries::p_var(self.n(), jm.kmax(), mu).with_pmax(jm.pmax());
            let expect = jm.try_sub(&p)?.scale(&ExactScalar::from(metric[mu] as i64));
            if &expect != ph {
                return Err(FlowError::InconsistentPhi(mu));
            }
        }
        if !self.is_real() {
            return Err(AlgebraError::Malformed("complex coefficient in a flow series".into()).into());
        }
        Ok(())
    }
}

pub fn compute_flow(r: &Realization, kmax: u32) -> Result<FlowResult, FlowError> {
    let j = compute_j(r, kmax)?;
    let phi = compute_phi(r, kmax)?;
    let h = compute_h(r, kmax)?;
    Ok(FlowResult { kmax, j, phi, h })
}

/// `sum_b k_b d f / dk_b`.
fn k_euler(f: &GradedSeries) -> Result<GradedSeries, AlgebraError> {
    let n = f.n();
    let mut acc = GradedSeries::zero(n, f.kmax()).with_pmax(f.pmax());
    for b in 0..n {
        acc = acc.try_add(&f.dk(b)?.shift_k(&MultiIndex::unit(n, b)))?;
    }
    Ok(acc)
}

/// `sum_b k_b dJ_mu/dk_b - eta_mu sum_b k_b phi_mu_b(J)` for every `mu`.
pub fn ode_residual_j(r: &Realization, j: &[GradedSeries]) -> Result<Vec<GradedSeries>, FlowError> {
    if j.len() != r.n {
        return Err(FlowError::ComponentCount { expected: r.n, found: j.len() });
    }
    let kmax = j.iter().map(GradedSeries::kmax).min().unwrap_or(0);
    (0..r.n)
        .map(|mu| {
            let lhs = k_euler(&j[mu])?;
            let rhs = r.phi_pairing(mu, kmax).substitute_p(j)?.scale(&r.eta(mu));
            Ok(lhs.try_sub(&rhs)?)
        })
        .collect()
}

/// `sum_b k_b dh/dk_b - sum_b k_b chi_b(J)`.
pub fn ode_residual_h(
    r: &Realization,
    j: &[GradedSeries],
    h: &GradedSeries,
) -> Result<GradedSeries, FlowError> {
    if j.len() != r.n {
        return Err(FlowError::ComponentCount { expected: r.n, found: j.len() });
    }
    let kmax = j.iter().map(GradedSeries::kmax).fold(h.kmax(), u32::min);
    let lhs = k_euler(h)?;
    let rhs = r.chi_pairing(kmax).substitute_p(j)?;
    Ok(lhs.try_sub(&rhs)?)
}

/// The explicit third-order expansion of `J_mu`, written out as nested
/// index sums rather than through the operator series.
pub fn third_order_j(r: &Realization) -> Result<Vec<GradedSeries>, FlowError> {
    const ORDER: u32 = 3;
    let n = r.n;
    let lifted: Vec<Vec<GradedSeries>> = (0..n)
        .map(|a| (0..n).map(|b| r.lift(&r.phi[a][b], ORDER)).collect())
        .collect();
    let k = |a: usize| MultiIndex::unit(n, a);

    // one application of k_a' eta_b'b' phi_b'a' d/dp_b'
    let nest = |inner: &GradedSeries| -> Result<GradedSeries, FlowError> {
        let mut acc = GradedSeries::zero(n, ORDER).with_pmax(r.pmax);
        for a in 0..n {
            for b in 0..n {
                let d = inner.dp(b)?;
                let coef = lifted[b][a].scale(&r.eta(b)).shift_k(&k(a));
                acc = acc.try_add(&coef.try_mul(&d)?)?;
            }
        }
        Ok(acc)
    };

    let half = ExactScalar::ratio(1, 2);
    let sixth = ExactScalar::ratio(1, 6);
    (0..n)
        .map(|mu| {
            let mut first = GradedSeries::zero(n, ORDER).with_pmax(r.pmax);
            for a in 0..n {
                first = first.try_add(&lifted[mu][a].scale(&r.eta(mu)).shift_k(&k(a)))?;
            }
            let second = nest(&first)?;
            let third = nest(&second)?;
            let p = GradedSeries::p_var(n, ORDER, mu).with_pmax(r.pmax);
            Ok(p.try_add(&first)?
                .try_add(&second.scale(&half))?
                .try_add(&third.scale(&sixth))?)
        })
        .collect()
}

/// A realization `k_a phi_mu_a(p) = lambda (A p)_mu` with a constant matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearRealization {
    a: Vec<Vec<BigRational>>,
}

impl LinearRealization {
    pub fn new(a: Vec<Vec<BigRational>>) -> Result<Self, FlowError> {
        let n = a.len();
        if let Some(row) = a.iter().find(|row| row.len() != n) {
            return Err(FlowError::ComponentCount { expected: n, found: row.len() });
        }
        Ok(Self { a })
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn matrix(&self) -> &[Vec<BigRational>] {
        &self.a
    }

    fn mat_mul(x: &[Vec<BigRational>], y: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
        let n = x.len();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).fold(BigRational::zero(), |acc, l| acc + &x[i][l] * &y[l][j]))
                    .collect()
            })
            .collect()
    }

    fn linear_form(&self, row: &[BigRational], kmax: u32) -> GradedSeries {
        let n = self.n();
        let mut s = GradedSeries::zero(n, kmax);
        for (b, c) in row.iter().enumerate() {
            s = s
                .try_add(&GradedSeries::monomial(
                    n,
                    kmax,
                    MultiIndex::zero(n),
                    MultiIndex::unit(n, b),
                    ExactScalar::real(c.clone()),
                ))
                .expect("same dimension");
        }
        s
    }

    /// The same vector field as a general [`Realization`] with `lambda = k_0`:
    /// `phi_mu_0 = (A p)_mu`, every other column zero, all-plus metric.
    pub fn to_realization(&self) -> Realization {
        let n = self.n();
        let phi = (0..n)
            .map(|mu| {
                (0..n)
                    .map(|b| {
                        if b == 0 {
                            self.linear_form(&self.a[mu], 0)
                        } else {
                            GradedSeries::zero(n, 0)
                        }
                    })
                    .collect()
            })
            .collect();
        Realization::euclidean(phi).expect("well-formed linear realization")
    }
}

/// `phi_mu = sum_{r=1..kmax} lambda^r/r! (A^r p)_mu` with `lambda = k_0`.
pub fn linear_closed_form(lr: &LinearRealization, kmax: u32) -> Vec<GradedSeries> {
    let n = lr.n();
    let mut out = vec![GradedSeries::zero(n, kmax); n];
    let mut power = lr.a.clone();
    for r in 1..=kmax {
        let weight = ExactScalar::real(BigRational::new(BigInt::one(), factorial(r)));
        let mut lambda_r = vec![0; n];
        lambda_r[0] = r;
        let shift = MultiIndex::from_vec(lambda_r);
        for (mu, slot) in out.iter_mut().enumerate() {
            let term = lr.linear_form(&power[mu], kmax).scale(&weight).shift_k(&shift);
            *slot = slot.try_add(&term).expect("same dimension");
        }
        if power.iter().flatten().all(Zero::is_zero) {
            break;
        }
        power = LinearRealization::mat_mul(&power, &lr.a);
    }
    out
}

/// `J3_mu(k, p) = J1_mu(k, J2(k, p))`.
pub fn compose_flows(j1: &[GradedSeries], j2: &[GradedSeries]) -> Result<Vec<GradedSeries>, FlowError> {
    if j1.len() != j2.len() {
        return Err(FlowError::ComponentCount { expected: j1.len(), found: j2.len() });
    }
    let order = |j: &[GradedSeries]| j.first().map(GradedSeries::kmax).unwrap_or(0);
    if order(j1) != order(j2) {
        return Err(FlowError::OrderMismatch(order(j1), order(j2)));
    }
    check_identity_shape(j1)?;
    check_identity_shape(j2)?;
    j1.iter()
        .map(|f| f.substitute_p(j2).map_err(FlowError::from))
        .collect()
}

/// Graded vector field `G` with `exp(G . d/dp)(p_mu) = J_mu` through the
/// truncation order of `J`, built one k-order at a time.
///
/// The k-order 1 slice is `dJ/dlambda` at `lambda = 0`; higher slices are
/// the corrections a lambda-independent generator cannot supply.
pub fn recover_generator(j: &[GradedSeries]) -> Result<Vec<GradedSeries>, FlowError> {
    check_identity_shape(j)?;
    let n = j.len();
    let kmax = j.iter().map(GradedSeries::kmax).min().unwrap_or(0);
    let ident: Vec<GradedSeries> = (0..n)
        .map(|mu| GradedSeries::p_var(n, kmax, mu).with_pmax(j[mu].pmax()))
        .collect();
    let mut g: Vec<GradedSeries> = j
        .iter()
        .map(|jm| GradedSeries::zero(n, kmax).with_pmax(jm.pmax()))
        .collect();
    for order in 1..=kmax {
        for mu in 0..n {
            let flowed = exp_field(&g, &ident[mu])?;
            let missing = j[mu].truncate(kmax).try_sub(&flowed)?.k_slice(order);
            g[mu] = g[mu].try_add(&missing)?;
        }
    }
    Ok(g)
}

/// Part of a recovered generator above k-order one.
pub fn higher_corrections(g: &[GradedSeries]) -> Vec<GradedSeries> {
    g.iter().map(|s| s.filter(|m| m.k.degree() >= 2)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mono(n: usize, k: &[u32], p: &[u32], c: ExactScalar) -> GradedSeries {
        GradedSeries::monomial(n, 0, MultiIndex::from_vec(k.to_vec()), MultiIndex::from_vec(p.to_vec()), c)
    }

    fn p_pow(e: u32) -> GradedSeries {
        mono(1, &[0], &[e], ExactScalar::one())
    }

    /// `sum_r coeffs[r] k^r p^(r + shift)` in one dimension.
    fn series_1d(kmax: u32, terms: &[(u32, u32, ExactScalar)]) -> GradedSeries {
        let mut s = GradedSeries::zero(1, kmax);
        for (kd, pd, c) in terms {
            s = s
                .try_add(&GradedSeries::monomial(
                    1,
                    kmax,
                    MultiIndex::from_vec(vec![*kd]),
                    MultiIndex::from_vec(vec![*pd]),
                    c.clone(),
                ))
                .unwrap();
        }
        s
    }

    fn quadratic() -> Realization {
        Realization::euclidean(vec![vec![p_pow(2)]]).unwrap()
    }

    #[test]
    fn apply_o_examples() {
        let r = quadratic();
        let p = GradedSeries::p_var(1, 3, 0);
        let o1 = apply_o(&r, &p).unwrap();
        assert_eq!(o1, series_1d(3, &[(1, 2, ExactScalar::one())]));
        let p2 = series_1d(3, &[(0, 2, ExactScalar::one())]);
        assert_eq!(apply_o(&r, &p2).unwrap(), series_1d(3, &[(1, 3, ExactScalar::from(2))]));
        let o2 = apply_o(&r, &o1).unwrap();
        assert_eq!(o2, series_1d(3, &[(2, 3, ExactScalar::from(2))]));
        let o3 = apply_o(&r, &o2).unwrap();
        assert_eq!(o3, series_1d(3, &[(3, 4, ExactScalar::from(6))]));
        assert!(apply_o(&r, &GradedSeries::p_var(2, 3, 0)).is_err());
    }

    #[test]
    fn j_for_quadratic_is_geometric() {
        let j = compute_j(&quadratic(), 3).unwrap();
        let expect = series_1d(
            3,
            &[(0, 1, ExactScalar::one()), (1, 2, ExactScalar::one()), (2, 3, ExactScalar::one()), (3, 4, ExactScalar::one())],
        );
        assert_eq!(j, vec![expect]);
    }

    #[test]
    fn zero_phi_gives_identity() {
        let r = Realization::euclidean(vec![vec![GradedSeries::zero(2, 0); 2]; 2]).unwrap();
        let j = compute_j(&r, 4).unwrap();
        assert_eq!(j, vec![GradedSeries::p_var(2, 4, 0), GradedSeries::p_var(2, 4, 1)]);
        assert!(compute_phi(&r, 4).unwrap().iter().all(GradedSeries::is_zero));
        assert!(compute_h(&r, 4).unwrap().is_zero());
        assert_eq!(third_order_j(&r).unwrap(), compute_j(&r, 3).unwrap());
    }

    #[test]
    fn linear_1d_is_exponential() {
        let a = ExactScalar::ratio(-3, 2);
        let r = Realization::euclidean(vec![vec![mono(1, &[0], &[1], a.clone())]]).unwrap();
        let j = compute_j(&r, 4).unwrap();
        let mut expect = Vec::new();
        let mut fact = 1i64;
        for e in 0..=4u32 {
            if e > 0 {
                fact *= e as i64;
            }
            expect.push((e, 1, a.pow(e).scale(&BigRational::new(1.into(), fact.into()))));
        }
        assert_eq!(j[0], series_1d(4, &expect));
        let phi = compute_phi(&r, 4).unwrap();
        assert_eq!(phi[0], series_1d(4, &expect[1..]));
    }

    #[test]
    fn h_examples() {
        let c = ExactScalar::ratio(5, 3);
        let r = quadratic().with_chi(vec![mono(1, &[0], &[0], c.clone())]).unwrap();
        assert_eq!(compute_h(&r, 4).unwrap(), series_1d(4, &[(1, 0, c)]));

        let r = quadratic().with_chi(vec![p_pow(1)]).unwrap();
        let expect = series_1d(
            4,
            &[
                (1, 1, ExactScalar::one()),
                (2, 2, ExactScalar::ratio(1, 2)),
                (3, 3, ExactScalar::ratio(1, 3)),
                (4, 4, ExactScalar::ratio(1, 4)),
            ],
        );
        let h = compute_h(&r, 4).unwrap();
        assert_eq!(h, expect);
        assert!(compute_h(&quadratic(), 4).unwrap().is_zero());
    }

    #[test]
    fn residual_examples() {
        let r = quadratic();
        let j = compute_j(&r, 5).unwrap();
        assert!(ode_residual_j(&r, &j).unwrap().iter().all(GradedSeries::is_zero));

        let ident = vec![GradedSeries::p_var(1, 3, 0)];
        let res = ode_residual_j(&r, &ident).unwrap();
        assert_eq!(res[0], series_1d(3, &[(1, 2, ExactScalar::from(-1))]));

        let short = vec![series_1d(2, &[(0, 1, ExactScalar::one()), (1, 2, ExactScalar::one())])];
        let res = ode_residual_j(&r, &short).unwrap();
        assert_eq!(res[0], series_1d(2, &[(2, 3, ExactScalar::from(-2))]));
    }

    #[test]
    fn residual_h_examples() {
        let r = quadratic().with_chi(vec![p_pow(1)]).unwrap();
        let j = compute_j(&r, 4).unwrap();
        let h = compute_h(&r, 4).unwrap();
        assert!(ode_residual_h(&r, &j, &h).unwrap().is_zero());

        let zero_h = GradedSeries::zero(1, 4);
        let res = ode_residual_h(&r, &j, &zero_h).unwrap();
        assert_eq!(res.k_slice(1), series_1d(4, &[(1, 1, ExactScalar::from(-1))]));

        // h truncated at order 3 but checked at order 4: the missing
        // k^4 p^4 / 4 term shows up as -4 * (1/4) k^4 p^4.
        let low = h.truncate(3).with_kmax(4);
        let res = ode_residual_h(&r, &j, &low).unwrap();
        assert_eq!(res, series_1d(4, &[(4, 4, ExactScalar::from(-1))]));
    }

    #[test]
    fn third_order_matches_quadratic() {
        let r = quadratic();
        assert_eq!(third_order_j(&r).unwrap(), compute_j(&r, 3).unwrap());
    }

    #[test]
    fn metric_enters_through_o() {
        let r = quadratic().with_metric(vec![-1]).unwrap();
        let j = compute_j(&r, 3).unwrap();
        // flow of -p^2: p/(1 + kp)
        let expect = series_1d(
            3,
            &[(0, 1, ExactScalar::one()), (1, 2, ExactScalar::from(-1)), (2, 3, ExactScalar::one()), (3, 4, ExactScalar::from(-1))],
        );
        assert_eq!(j[0], expect);
        let phi = compute_phi(&r, 3).unwrap();
        assert_eq!(phi[0], expect.try_sub(&GradedSeries::p_var(1, 3, 0)).unwrap().neg());
        assert_eq!(third_order_j(&r).unwrap(), j);
    }

    #[test]
    fn linear_closed_form_examples() {
        let zero = LinearRealization::new(vec![vec![BigRational::zero(); 2]; 2]).unwrap();
        assert!(linear_closed_form(&zero, 5).iter().all(GradedSeries::is_zero));

        let one = BigRational::one();
        let nil = LinearRealization::new(vec![vec![BigRational::zero(), one.clone()], vec![BigRational::zero(); 2]]).unwrap();
        for kmax in 1..6 {
            let phi = linear_closed_form(&nil, kmax);
            let expect = GradedSeries::monomial(2, kmax, MultiIndex::unit(2, 0), MultiIndex::unit(2, 1), ExactScalar::one());
            assert_eq!(phi[0], expect);
            assert!(phi[1].is_zero());
            assert_eq!(compute_phi(&nil.to_realization(), kmax).unwrap(), phi);
        }
    }

    #[test]
    fn compose_with_inverse_is_identity() {
        let r = quadratic();
        for kmax in 0..6 {
            let j1 = compute_j(&r, kmax).unwrap();
            let j2 = compute_j(&r.negated(), kmax).unwrap();
            let j3 = compose_flows(&j1, &j2).unwrap();
            assert_eq!(j3, vec![GradedSeries::p_var(1, kmax, 0)]);
            assert!(recover_generator(&j3).unwrap().iter().all(GradedSeries::is_zero));
        }
        let ident = vec![GradedSeries::p_var(1, 4, 0)];
        let j1 = compute_j(&r, 4).unwrap();
        assert_eq!(compose_flows(&j1, &ident).unwrap(), j1);
        assert!(matches!(
            compose_flows(&j1, &compute_j(&r, 3).unwrap()),
            Err(FlowError::OrderMismatch(4, 3))
        ));
    }

    #[test]
    fn composition_of_linear_flows_adds_rates() {
        let lin = |c: i64| Realization::euclidean(vec![vec![mono(1, &[0], &[1], ExactScalar::from(c))]]).unwrap();
        let j3 = compose_flows(&compute_j(&lin(2), 6).unwrap(), &compute_j(&lin(-5), 6).unwrap()).unwrap();
        assert_eq!(j3, compute_j(&lin(-3), 6).unwrap());
        let g = recover_generator(&j3).unwrap();
        assert_eq!(g[0], series_1d(6, &[(1, 1, ExactScalar::from(-3))]));
    }

    #[test]
    fn generator_round_trip() {
        let r = quadratic();
        let j = compute_j(&r, 5).unwrap();
        assert_eq!(recover_generator(&j).unwrap(), r.vector_field(5));
    }

    #[test]
    fn shape_violations_are_rejected() {
        let bad = vec![GradedSeries::p_var(1, 3, 0).scale(&ExactScalar::from(2))];
        assert!(recover_generator(&bad).is_err());
        assert!(compose_flows(&bad, &bad).is_err());
    }

    #[test]
    fn realization_validation() {
        assert!(matches!(
            Realization::new(vec![2], vec![vec![p_pow(2)]], vec![GradedSeries::zero(1, 0)], None),
            Err(FlowError::InvalidMetric(2))
        ));
        let with_k = GradedSeries::k_var(1, 1, 0);
        assert!(matches!(
            Realization::euclidean(vec![vec![with_k]]),
            Err(FlowError::EntryDependsOnK(_))
        ));
        let capped = p_pow(2).with_pmax(Some(6));
        assert!(matches!(
            Realization::euclidean(vec![vec![capped.clone()]]),
            Err(FlowError::NonPolynomialInput(_))
        ));
        let constant = mono(1, &[0], &[0], ExactScalar::one());
        assert!(matches!(
            Realization::new(vec![1], vec![vec![constant]], vec![GradedSeries::zero(1, 0)], Some(6)),
            Err(FlowError::TruncationUnsafe(_))
        ));
        assert!(Realization::new(vec![1], vec![vec![capped]], vec![GradedSeries::zero(1, 0)], Some(6)).is_ok());
    }

    #[test]
    fn capped_realization_is_order_exact() {
        // phi = p^2 known only through p^6 still gives the exact low p-degrees.
        let r = Realization::new(vec![1], vec![vec![p_pow(2)]], vec![GradedSeries::zero(1, 0)], Some(4)).unwrap();
        let j = compute_j(&r, 5).unwrap();
        let full = compute_j(&quadratic(), 5).unwrap();
        assert_eq!(j[0], full[0].clone().with_pmax(Some(4)));
    }
}
