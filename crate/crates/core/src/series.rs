//! Multivariate series in momenta `p_0..p_{n-1}`, graded and truncated by
//! total degree in the deformation parameters `k_0..k_{n-1}`.
//!
//! A `GradedSeries` is a sparse map `(k-index, p-index) -> ExactScalar`.
//!
//! Invariants:
//! - no stored coefficient is zero;
//! - every k-index has total degree `<= kmax`;
//! - with `pmax` set, every p-index has total degree `<= pmax`.
//!
//! Equality is term-map equality together with `n`, `kmax` and `pmax`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::AlgebraError;
use crate::index::{write_power_product, MultiIndex};
use crate::scalar::{parse_rational, rational_to_string, ExactScalar};

/// Key of one series term. Field order gives the canonical display order:
/// graded-lex on the k-index, then graded-lex on the p-index.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    pub k: MultiIndex,
    pub p: MultiIndex,
}

impl Monomial {
    pub fn new(k: MultiIndex, p: MultiIndex) -> Self {
        Self { k, p }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "SeriesJson", try_from = "SeriesJson")]
pub struct GradedSeries {
    n: usize,
    kmax: u32,
    pmax: Option<u32>,
    terms: BTreeMap<Monomial, ExactScalar>,
}

fn min_cap(a: Option<u32>, b: Option<u32>) -> Option<u32> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

impl GradedSeries {
    pub fn zero(n: usize, kmax: u32) -> Self {
        Self {
            n,
            kmax,
            pmax: None,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, kmax: u32, c: ExactScalar) -> Self {
        Self::monomial(n, kmax, MultiIndex::zero(n), MultiIndex::zero(n), c)
    }

    pub fn one(n: usize, kmax: u32) -> Self {
        Self::constant(n, kmax, ExactScalar::one())
    }

    /// The coordinate function `p_i`.
    pub fn p_var(n: usize, kmax: u32, i: usize) -> Self {
        Self::monomial(n, kmax, MultiIndex::zero(n), MultiIndex::unit(n, i), ExactScalar::one())
    }

    /// The deformation parameter `k_i`.
    pub fn k_var(n: usize, kmax: u32, i: usize) -> Self {
        Self::monomial(n, kmax, MultiIndex::unit(n, i), MultiIndex::zero(n), ExactScalar::one())
    }

    pub fn monomial(n: usize, kmax: u32, k: MultiIndex, p: MultiIndex, c: ExactScalar) -> Self {
        let mut s = Self::zero(n, kmax);
        s.add_term(Monomial::new(k, p), c);
        s
    }

    /// Builds a series from arbitrary terms, summing duplicates and dropping
    /// zeros and anything beyond the truncation.
    pub fn from_terms(
        n: usize,
        kmax: u32,
        pmax: Option<u32>,
        terms: impl IntoIterator<Item = (Monomial, ExactScalar)>,
    ) -> Result<Self, AlgebraError> {
        let mut s = Self {
            n,
            kmax,
            pmax,
            terms: BTreeMap::new(),
        };
        for (m, c) in terms {
            if m.k.len() != n || m.p.len() != n {
                return Err(AlgebraError::DimensionMismatch {
                    expected: n,
                    found: m.k.len().max(m.p.len()),
                });
            }
            s.add_term(m, c);
        }
        Ok(s)
    }

    /// Returns a copy with a p-degree cap applied.
    pub fn with_pmax(mut self, pmax: Option<u32>) -> Self {
        self.pmax = pmax;
        if let Some(cap) = pmax {
            self.terms.retain(|m, _| m.p.degree() <= cap);
        }
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kmax(&self) -> u32 {
        self.kmax
    }

    pub fn pmax(&self) -> Option<u32> {
        self.pmax
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in canonical order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &ExactScalar)> {
        self.terms.iter()
    }

    pub fn coeff(&self, k: &MultiIndex, p: &MultiIndex) -> ExactScalar {
        self.terms
            .get(&Monomial::new(k.clone(), p.clone()))
            .cloned()
            .unwrap_or_default()
    }

    fn admits(&self, m: &Monomial) -> bool {
        m.k.degree() <= self.kmax && self.pmax.is_none_or(|cap| m.p.degree() <= cap)
    }

    /// Adds `c` to the coefficient of `m`, keeping the invariants.
    pub(crate) fn add_term(&mut self, m: Monomial, c: ExactScalar) {
        if c.is_zero() || !self.admits(&m) {
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

    fn check_dim(&self, other: &Self) -> Result<(), AlgebraError> {
        if self.n != other.n {
            return Err(AlgebraError::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(())
    }

    fn check_index(&self, i: usize) -> Result<(), AlgebraError> {
        if i >= self.n {
            return Err(AlgebraError::IndexOutOfRange { index: i, n: self.n });
        }
        Ok(())
    }

    pub fn is_real(&self) -> bool {
        self.terms.values().all(ExactScalar::is_real)
    }

    /// Smallest total k-degree present, `None` for the zero series.
    pub fn min_k_degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.k.degree()).min()
    }

    pub fn max_k_degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.k.degree()).max()
    }

    pub fn max_p_degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.p.degree()).max()
    }

    /// True when no term carries a power of `k`.
    pub fn is_k_free(&self) -> bool {
        self.terms.keys().all(|m| m.k.is_zero())
    }

    /// The homogeneous part of k-degree exactly `d`.
    pub fn k_slice(&self, d: u32) -> Self {
        self.filter(|m| m.k.degree() == d)
    }

    pub fn filter(&self, mut keep: impl FnMut(&Monomial) -> bool) -> Self {
        Self {
            n: self.n,
            kmax: self.kmax,
            pmax: self.pmax,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| keep(m))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Lowers the truncation order to `min(kmax, self.kmax)`.
    pub fn truncate(&self, kmax: u32) -> Self {
        let kmax = kmax.min(self.kmax);
        let mut s = self.filter(|m| m.k.degree() <= kmax);
        s.kmax = kmax;
        s
    }

    /// Re-labels the truncation order. Raising it is only meaningful when the
    /// series is exact at higher orders (e.g. a polynomial input).
    pub fn with_kmax(&self, kmax: u32) -> Self {
        let mut s = self.truncate(kmax);
        s.kmax = kmax;
        s
    }

    pub fn map_coeffs(&self, mut f: impl FnMut(&ExactScalar) -> ExactScalar) -> Self {
        let mut s = Self::zero(self.n, self.kmax);
        s.pmax = self.pmax;
        for (m, c) in &self.terms {
            s.add_term(m.clone(), f(c));
        }
        s
    }

    pub fn scale(&self, c: &ExactScalar) -> Self {
        self.map_coeffs(|x| x * c)
    }

    pub fn neg(&self) -> Self {
        self.map_coeffs(|x| -x)
    }

    /// Coefficient-wise sum; truncation is the smaller of the two.
    pub fn try_add(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check_dim(other)?;
        let mut s = Self::zero(self.n, self.kmax.min(other.kmax));
        s.pmax = min_cap(self.pmax, other.pmax);
        for (m, c) in self.terms.iter().chain(other.terms.iter()) {
            s.add_term(m.clone(), c.clone());
        }
        Ok(s)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.try_add(&other.neg())
    }

    /// Truncated Cauchy product.
    pub fn try_mul(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check_dim(other)?;
        let kmax = self.kmax.min(other.kmax);
        let pmax = min_cap(self.pmax, other.pmax);
        let mut by_degree: Vec<Vec<(&Monomial, &ExactScalar, u32)>> = vec![Vec::new(); kmax as usize + 1];
        for (m, c) in &other.terms {
            let d = m.k.degree();
            if d <= kmax {
                by_degree[d as usize].push((m, c, m.p.degree()));
            }
        }
        let mut acc: HashMap<Monomial, ExactScalar> = HashMap::new();
        for (ma, ca) in &self.terms {
            let da = ma.k.degree();
            if da > kmax {
                continue;
            }
            let pa = ma.p.degree();
            for bucket in &by_degree[..=(kmax - da) as usize] {
                for &(mb, cb, pb) in bucket {
                    if pmax.is_some_and(|cap| pa + pb > cap) {
                        continue;
                    }
                    let key = Monomial::new(ma.k.add(&mb.k), ma.p.add(&mb.p));
                    let prod = ca * cb;
                    match acc.get_mut(&key) {
                        Some(v) => *v += &prod,
                        None => {
                            acc.insert(key, prod);
                        }
                    }
                }
            }
        }
        let terms = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        Ok(Self {
            n: self.n,
            kmax,
            pmax,
            terms,
        })
    }

    pub fn pow(&self, e: u32) -> Result<Self, AlgebraError> {
        let mut acc = Self::one(self.n, self.kmax).with_pmax(self.pmax);
        for _ in 0..e {
            acc = acc.try_mul(self)?;
        }
        Ok(acc)
    }

    /// Multiplies by the monomial `k^shift`, dropping what passes `kmax`.
    pub fn shift_k(&self, shift: &MultiIndex) -> Self {
        let mut s = Self::zero(self.n, self.kmax);
        s.pmax = self.pmax;
        for (m, c) in &self.terms {
            s.add_term(Monomial::new(m.k.add(shift), m.p.clone()), c.clone());
        }
        s
    }

    /// Exact partial derivative with respect to `p_beta`.
    pub fn dp(&self, beta: usize) -> Result<Self, AlgebraError> {
        self.check_index(beta)?;
        let mut s = Self::zero(self.n, self.kmax);
        s.pmax = self.pmax;
        for (m, c) in &self.terms {
            let e = m.p.get(beta);
            if let Some(p) = m.p.decremented(beta) {
                s.add_term(Monomial::new(m.k.clone(), p), c * &ExactScalar::from(e as i64));
            }
        }
        Ok(s)
    }

    /// Exact partial derivative with respect to `k_beta`. The result keeps the
    /// input's truncation order, so its top order is always empty.
    pub fn dk(&self, beta: usize) -> Result<Self, AlgebraError> {
        self.check_index(beta)?;
        let mut s = Self::zero(self.n, self.kmax);
        s.pmax = self.pmax;
        for (m, c) in &self.terms {
            let e = m.k.get(beta);
            if let Some(k) = m.k.decremented(beta) {
                s.add_term(Monomial::new(k, m.p.clone()), c * &ExactScalar::from(e as i64));
            }
        }
        Ok(s)
    }

    /// Replaces every `p_mu` by `subs[mu]`, expanding and truncating.
    ///
    /// k-dependence of `self` is kept as a multiplicative factor. When `self`
    /// carries a p-degree cap, every substitute must be `p_mu + O(k)`.
    pub fn substitute_p(&self, subs: &[GradedSeries]) -> Result<Self, AlgebraError> {
        if subs.len() != self.n {
            return Err(AlgebraError::DimensionMismatch {
                expected: self.n,
                found: subs.len(),
            });
        }
        for s in subs {
            self.check_dim(s)?;
        }
        if self.pmax.is_some() {
            check_identity_shape(subs)?;
        }
        let kmax = subs.iter().map(|s| s.kmax).fold(self.kmax, u32::min);
        let pmax = subs.iter().map(|s| s.pmax).fold(self.pmax, min_cap);
        let subs: Vec<Self> = subs.iter().map(|s| s.truncate(kmax).with_pmax(pmax)).collect();

        let mut cache: HashMap<MultiIndex, Self> = HashMap::new();
        let one = Self::one(self.n, kmax).with_pmax(pmax);
        cache.insert(MultiIndex::zero(self.n), one);

        let mut out = Self::zero(self.n, kmax);
        out.pmax = pmax;
        for (m, c) in &self.terms {
            if m.k.degree() > kmax {
                continue;
            }
            let prod = power_product(&m.p, &subs, &mut cache)?;
            for (pm, pc) in prod.shift_k(&m.k).terms {
                out.add_term(pm, &pc * c);
            }
        }
        Ok(out)
    }

    /// Numeric value at `(k, p)`; exact coefficients are converted last.
    pub fn eval(&self, k: &[f64], p: &[f64]) -> Result<Complex64, AlgebraError> {
        for len in [k.len(), p.len()] {
            if len != self.n {
                return Err(AlgebraError::DimensionMismatch {
                    expected: self.n,
                    found: len,
                });
            }
        }
        let mut total = Complex64::new(0.0, 0.0);
        for (m, c) in &self.terms {
            let mut mono = 1.0;
            for i in 0..self.n {
                mono *= k[i].powi(m.k.get(i) as i32) * p[i].powi(m.p.get(i) as i32);
            }
            total += c.to_complex() * mono;
        }
        Ok(total)
    }
}

/// Checks that every `subs[mu]` equals `p_mu` at k-order 0.
pub fn check_identity_shape(subs: &[GradedSeries]) -> Result<(), AlgebraError> {
    for (mu, s) in subs.iter().enumerate() {
        let base = s.k_slice(0);
        let expected = GradedSeries::p_var(s.n, s.kmax, mu).with_pmax(s.pmax);
        if base != expected {
            return Err(AlgebraError::NotIdentityShape {
                component: mu,
                reason: format!("k-order 0 part is {base}, expected p_{mu}"),
            });
        }
    }
    Ok(())
}

fn power_product(
    idx: &MultiIndex,
    subs: &[GradedSeries],
    cache: &mut HashMap<MultiIndex, GradedSeries>,
) -> Result<GradedSeries, AlgebraError> {
    if let Some(s) = cache.get(idx) {
        return Ok(s.clone());
    }
    let mu = (0..idx.len()).rev().find(|&i| idx.get(i) > 0).expect("nonzero index");
    let lower = idx.decremented(mu).expect("positive entry");
    let prev = power_product(&lower, subs, cache)?;
    let s = prev.try_mul(&subs[mu])?;
    cache.insert(idx.clone(), s.clone());
    Ok(s)
}

impl fmt::Display for GradedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let (negative, mag) = if c.is_real() && c.re < num_rational::BigRational::zero() {
                (true, -c.clone())
            } else {
                (false, c.clone())
            };
            match (i, negative) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let mut body = String::new();
            let mut first = true;
            write_power_product(&mut body, "k", &m.k, &mut first)?;
            write_power_product(&mut body, "p", &m.p, &mut first)?;
            if mag.is_one() && !body.is_empty() {
                f.write_str(&body)?;
            } else if body.is_empty() {
                write!(f, "{mag}")?;
            } else {
                write!(f, "{mag}*{body}")?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermJson {
    pub k: Vec<u32>,
    pub p: Vec<u32>,
    pub re: String,
    pub im: String,
}

/// Wire form of a series; terms appear in canonical order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeriesJson {
    pub n: usize,
    pub kmax: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pmax: Option<u32>,
    pub terms: Vec<TermJson>,
}

impl From<GradedSeries> for SeriesJson {
    fn from(s: GradedSeries) -> Self {
        SeriesJson {
            n: s.n,
            kmax: s.kmax,
            pmax: s.pmax,
            terms: s
                .terms
                .iter()
                .map(|(m, c)| TermJson {
                    k: m.k.as_slice().to_vec(),
                    p: m.p.as_slice().to_vec(),
                    re: rational_to_string(&c.re),
                    im: rational_to_string(&c.im),
                })
                .collect(),
        }
    }
}

impl TryFrom<SeriesJson> for GradedSeries {
    type Error = AlgebraError;

    fn try_from(j: SeriesJson) -> Result<Self, AlgebraError> {
        let mut terms = Vec::with_capacity(j.terms.len());
        for t in j.terms {
            let m = Monomial::new(MultiIndex::from_vec(t.k), MultiIndex::from_vec(t.p));
            if m.k.degree() > j.kmax || j.pmax.is_some_and(|cap| m.p.degree() > cap) {
                return Err(AlgebraError::Malformed(format!(
                    "term {:?}/{:?} exceeds the declared truncation",
                    m.k, m.p
                )));
            }
            let c = ExactScalar::new(parse_rational(&t.re)?, parse_rational(&t.im)?);
            terms.push((m, c));
        }
        GradedSeries::from_terms(j.n, j.kmax, j.pmax, terms)
    }
}
