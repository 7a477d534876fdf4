//! Plane-wave action, a small realization library and flow composition.
//!
//! The action `x_mu |> f = x_mu f`, `p_mu |> f = -i df/dx_mu` sends the plane
//! wave with momentum `q` to the plane wave with momentum `J(k, q)` times the
//! phase `exp(i h(k, q))`, so evaluating the flow series at `p = q` is all
//! that is needed.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{FlowError, OracleError};
use crate::flows::{self, FlowResult, LinearRealization, Realization};
use crate::index::MultiIndex;
use crate::scalar::ExactScalar;
use crate::series::GradedSeries;
use crate::weyl::{self, AlgebraSignature, Verification, WeylElement};

/// Deformed momentum and phase of a plane wave after the action.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneWaveImage {
    pub k: Vec<f64>,
    pub q: Vec<f64>,
    #[serde(rename = "J")]
    pub jq: Vec<f64>,
    #[serde(rename = "h")]
    pub hq: f64,
    #[serde(rename = "kmax")]
    pub kmax_used: u32,
}

/// Evaluates an already computed flow at one `(k, q)`.
pub fn image_from_flow(fr: &FlowResult, k: &[f64], q: &[f64]) -> Result<PlaneWaveImage, FlowError> {
    let jq = fr
        .j
        .iter()
        .map(|j| j.eval(k, q).map(|z| z.re))
        .collect::<Result<Vec<_>, _>>()?;
    let hq = fr.h.eval(k, q)?.re;
    Ok(PlaneWaveImage {
        k: k.to_vec(),
        q: q.to_vec(),
        jq,
        hq,
        kmax_used: fr.kmax,
    })
}

/// `exp(i k_b x_a phi_ab + i k_a chi_a) |> exp(i q x)`; `q` is the momentum
/// eigenvalue of the incoming wave. No convergence check is made.
pub fn act_on_plane_wave(
    r: &Realization,
    k: &[f64],
    q: &[f64],
    kmax: u32,
) -> Result<PlaneWaveImage, FlowError> {
    let fr = FlowResult {
        kmax,
        j: flows::compute_j(r, kmax)?,
        phi: Vec::new(),
        h: flows::compute_h(r, kmax)?,
    };
    image_from_flow(&fr, k, q)
}

/// One flow computation, many evaluation points.
pub fn act_on_plane_waves(
    r: &Realization,
    points: &[(Vec<f64>, Vec<f64>)],
    kmax: u32,
) -> Result<Vec<PlaneWaveImage>, FlowError> {
    let fr = FlowResult {
        kmax,
        j: flows::compute_j(r, kmax)?,
        phi: Vec::new(),
        h: flows::compute_h(r, kmax)?,
    };
    points.iter().map(|(k, q)| image_from_flow(&fr, k, q)).collect()
}

/// Known analytic `J(k, p)` for one-dimensional families.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClosedForm {
    /// `phi = p^l`: `J = p (1 - (l-1) k p^(l-1))^(-1/(l-1))`.
    PowerLaw { l: u32 },
    /// `phi = a p`: `J = exp(k a) p`.
    Linear { a: BigRational },
}

impl ClosedForm {
    /// Exact Taylor coefficients in `k` through `kmax`.
    pub fn taylor(&self, kmax: u32) -> GradedSeries {
        let mut s = GradedSeries::zero(1, kmax);
        match self {
            ClosedForm::PowerLaw { l } => {
                // (1 - u)^(-s) = sum_r (s)_r / r! u^r, s = 1/(l-1), u = (l-1) k p^(l-1)
                let m = BigInt::from(l - 1);
                let rate = BigRational::new(BigInt::one(), m.clone());
                let mut coef = BigRational::one();
                for r in 0..=kmax {
                    let term = GradedSeries::monomial(
                        1,
                        kmax,
                        MultiIndex::from_vec(vec![r]),
                        MultiIndex::from_vec(vec![1 + r * (l - 1)]),
                        ExactScalar::real(coef.clone()),
                    );
                    s = s.try_add(&term).expect("1D");
                    let rr = BigRational::from_integer(BigInt::from(r));
                    coef = coef * (&rate + &rr) / (rr + BigRational::one())
                        * BigRational::from_integer(m.clone());
                }
            }
            ClosedForm::Linear { a } => {
                let mut coef = BigRational::one();
                for r in 0..=kmax {
                    let term = GradedSeries::monomial(
                        1,
                        kmax,
                        MultiIndex::from_vec(vec![r]),
                        MultiIndex::from_vec(vec![1]),
                        ExactScalar::real(coef.clone()),
                    );
                    s = s.try_add(&term).expect("1D");
                    coef = coef * a / BigRational::from_integer(BigInt::from(r + 1));
                }
            }
        }
        s
    }

    /// Floating-point value of the closed form.
    pub fn eval(&self, k: f64, p: f64) -> f64 {
        match self {
            ClosedForm::PowerLaw { l } => {
                let m = (*l - 1) as f64;
                p * (1.0 - m * k * p.powi(*l as i32 - 1)).powf(-1.0 / m)
            }
            ClosedForm::Linear { a } => (k * a.to_f64().unwrap_or(f64::NAN)).exp() * p,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NamedRealization {
    pub name: String,
    pub description: String,
    pub realization: Realization,
    pub kmax: u32,
    pub closed_form_j: Option<ClosedForm>,
}

fn p_power(n: usize, mu: usize, e: u32, c: ExactScalar) -> GradedSeries {
    let mut idx = vec![0; n];
    idx[mu] = e;
    GradedSeries::monomial(n, 0, MultiIndex::zero(n), MultiIndex::from_vec(idx), c)
}

/// One-dimensional `phi(p) = p^l`, `l >= 2`.
pub fn power_law_family(l: u32, kmax: u32) -> Result<NamedRealization, FlowError> {
    if l < 2 {
        return Err(FlowError::InvalidParameter(format!("power-law exponent must be >= 2, got {l}")));
    }
    let realization = Realization::euclidean(vec![vec![p_power(1, 0, l, ExactScalar::one())]])?;
    Ok(NamedRealization {
        name: format!("power-law-{l}"),
        description: format!("phi(p) = p^{l} in one dimension"),
        realization,
        kmax,
        closed_form_j: Some(ClosedForm::PowerLaw { l }),
    })
}

/// One-dimensional `phi(p) = a p`.
pub fn linear_family(a: BigRational, kmax: u32) -> NamedRealization {
    let realization = Realization::euclidean(vec![vec![p_power(1, 0, 1, ExactScalar::real(a.clone()))]])
        .expect("1D linear realization");
    NamedRealization {
        name: "linear-1d".into(),
        description: format!("phi(p) = {a}*p in one dimension; J = p exp(a k)"),
        realization,
        kmax,
        closed_form_j: Some(ClosedForm::Linear { a }),
    }
}

/// The built-in realizations shipped with the CLI.
///
/// Only the power-law and linear families come with closed forms; the
/// remaining entries are small hand-made test realizations.
pub fn builtin_examples() -> Vec<NamedRealization> {
    let mut out = Vec::new();
    for l in 2..=4 {
        out.push(power_law_family(l, 5).expect("l >= 2"));
    }
    out.push(linear_family(BigRational::one(), 6));

    let one = ExactScalar::one();
    let nil = LinearRealization::new(vec![
        vec![BigRational::from_integer(0.into()), BigRational::one()],
        vec![BigRational::from_integer(0.into()); 2],
    ])
    .expect("square");
    out.push(NamedRealization {
        name: "linear-nilpotent-2d".into(),
        description: "phi_00 = p_1, other entries zero: a nilpotent linear flow".into(),
        realization: nil.to_realization(),
        kmax: 4,
        closed_form_j: None,
    });

    let quad = Realization::euclidean(vec![vec![p_power(1, 0, 2, one.clone())]])
        .and_then(|r| r.with_chi(vec![p_power(1, 0, 1, one.clone())]))
        .expect("1D");
    out.push(NamedRealization {
        name: "quadratic-with-phase".into(),
        description: "phi(p) = p^2, chi(p) = p; h = -log(1 - k p)".into(),
        realization: quad,
        kmax: 5,
        closed_form_j: Some(ClosedForm::PowerLaw { l: 2 }),
    });

    let phase_only = Realization::euclidean(vec![vec![GradedSeries::zero(1, 0)]])
        .and_then(|r| r.with_chi(vec![p_power(1, 0, 1, one.clone())]))
        .expect("1D");
    out.push(NamedRealization {
        name: "phase-only".into(),
        description: "phi = 0, chi(p) = p: the exponential of a function of p".into(),
        realization: phase_only,
        kmax: 4,
        closed_form_j: None,
    });

    let half = ExactScalar::ratio(1, 2);
    let z = || GradedSeries::zero(2, 0);
    let mixed = Realization::new(
        vec![-1, 1],
        vec![
            vec![p_power(2, 0, 1, one.clone()), p_power(2, 1, 1, half.clone())],
            vec![z(), p_power(2, 0, 2, one.clone()).try_add(&p_power(2, 1, 0, one.clone())).expect("2D")],
        ],
        vec![p_power(2, 1, 1, one.clone()), p_power(2, 0, 2, half)],
        None,
    )
    .expect("2D");
    out.push(NamedRealization {
        name: "mixed-signature-2d".into(),
        description: "two dimensions with metric (-1, +1), quadratic entries and nonzero chi".into(),
        realization: mixed,
        kmax: 3,
        closed_form_j: None,
    });
    out
}

pub fn builtin_example(name: &str) -> Option<NamedRealization> {
    builtin_examples().into_iter().find(|e| e.name == name)
}

/// Everything learned from composing two coordinate-linear exponentials.
#[derive(Clone, Debug, Serialize)]
pub struct CompositionReport {
    pub kmax: u32,
    #[serde(rename = "J1")]
    pub j1: Vec<GradedSeries>,
    #[serde(rename = "J2")]
    pub j2: Vec<GradedSeries>,
    #[serde(rename = "J3")]
    pub j3: Vec<GradedSeries>,
    pub generator: Vec<GradedSeries>,
    pub order_one_generator: Vec<GradedSeries>,
    pub higher_corrections_vanish: bool,
    pub oracle: Verification,
}

/// Composes the flows of `r1` and `r2`, recovers the generator of the
/// product and checks `exp(A1) exp(A2) = :exp(i x (J3 - p)):` with the
/// Weyl-algebra oracle.
pub fn composition_demo(r1: &Realization, r2: &Realization, kmax: u32) -> Result<CompositionReport, OracleError> {
    if r1.has_chi() || r2.has_chi() {
        return Err(OracleError::NonzeroChi);
    }
    if r1.metric() != r2.metric() {
        return Err(OracleError::SignatureMismatch);
    }
    let j1 = flows::compute_j(r1, kmax)?;
    let j2 = flows::compute_j(r2, kmax)?;
    let j3 = flows::compose_flows(&j1, &j2)?;
    let generator = flows::recover_generator(&j3)?;
    let order_one_generator: Vec<GradedSeries> = generator.iter().map(|g| g.k_slice(1)).collect();
    let higher_corrections_vanish = flows::higher_corrections(&generator).iter().all(GradedSeries::is_zero);

    let sig = AlgebraSignature::of(r1);
    let lhs = weyl::coordinate_exponent(r1, kmax)?
        .exp(kmax)?
        .mul(&weyl::coordinate_exponent(r2, kmax)?.exp(kmax)?)?;
    let phi3 = j3
        .iter()
        .enumerate()
        .map(|(mu, j)| {
            let p = GradedSeries::p_var(j.n(), kmax, mu);
            Ok(j.try_sub(&p)?.scale(&r1.eta(mu)))
        })
        .collect::<Result<Vec<_>, crate::error::AlgebraError>>()?;
    let fr = FlowResult {
        kmax,
        j: j3.clone(),
        phi: phi3,
        h: GradedSeries::zero(r1.n(), kmax),
    };
    let rhs = weyl::normal_order_of_flow(&fr, &sig)?;
    let discrepancy: WeylElement = lhs.sub(&rhs)?;
    Ok(CompositionReport {
        kmax,
        j1,
        j2,
        j3,
        generator,
        order_one_generator,
        higher_corrections_vanish,
        oracle: Verification {
            equal: discrepancy.is_zero(),
            discrepancy,
        },
    })
}
