//! Realization files: TOML with one polynomial expression per entry.
//!
//! ```toml
//! name = "quadratic"
//! dimension = 1
//! metric = [1]          # optional, defaults to all +1
//! kmax = 4              # optional, defaults to 4 with a warning
//! # pmax = 8            # optional p-degree cap
//! phi = [["p_0^2"]]     # phi[a][b] is the entry phi_ab
//! chi = ["p_0"]         # optional, defaults to zeros
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::applications::NamedRealization;
use crate::error::{FlowError, ParseError};
use crate::expr::{expr_from_series, lower_to_series, parse_expression};
use crate::flows::Realization;
use crate::series::GradedSeries;

pub const DEFAULT_KMAX: u32 = 4;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Vec<i32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kmax: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pmax: Option<u32>,
    pub phi: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<Vec<String>>,
}

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("cannot read spec file: {0}")]
    Toml(String),
    #[error("in {entry}: {source}")]
    Expression {
        entry: String,
        #[source]
        source: ParseError,
    },
    #[error("spec shape: {0}")]
    Shape(String),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

/// A spec turned into a realization, plus anything worth warning about.
#[derive(Clone, Debug)]
pub struct LoadedSpec {
    pub name: Option<String>,
    pub realization: Realization,
    pub kmax: u32,
    pub warnings: Vec<String>,
}

impl SpecFile {
    pub fn from_toml(text: &str) -> Result<Self, SpecError> {
        toml::from_str(text).map_err(|e| SpecError::Toml(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec files always serialize")
    }

    pub fn load(&self) -> Result<LoadedSpec, SpecError> {
        let n = self.dimension;
        let mut warnings = Vec::new();
        let kmax = self.kmax.unwrap_or_else(|| {
            warnings.push(format!("kmax not given, using {DEFAULT_KMAX}"));
            DEFAULT_KMAX
        });
        if self.phi.len() != n || self.phi.iter().any(|row| row.len() != n) {
            return Err(SpecError::Shape(format!("phi must be a {n}x{n} matrix")));
        }
        let metric = self.metric.clone().unwrap_or_else(|| vec![1; n]);
        if metric.len() != n {
            return Err(SpecError::Shape(format!("metric must have {n} entries")));
        }
        let chi_src = self.chi.clone().unwrap_or_else(|| vec!["0".into(); n]);
        if chi_src.len() != n {
            return Err(SpecError::Shape(format!("chi must have {n} entries")));
        }

        let mut lower = |entry: String, src: &str| -> Result<GradedSeries, SpecError> {
            let e = parse_expression(src, n).map_err(|source| SpecError::Expression {
                entry: entry.clone(),
                source,
            })?;
            let (s, w) = lower_to_series(&e, n, 0, self.pmax);
            warnings.extend(w.into_iter().map(|w| format!("{entry}: {w}")));
            Ok(s)
        };
        let mut phi = Vec::with_capacity(n);
        for (a, row) in self.phi.iter().enumerate() {
            let mut out = Vec::with_capacity(n);
            for (b, src) in row.iter().enumerate() {
                out.push(lower(format!("phi[{a}][{b}]"), src)?);
            }
            phi.push(out);
        }
        let chi = chi_src
            .iter()
            .enumerate()
            .map(|(a, src)| lower(format!("chi[{a}]"), src))
            .collect::<Result<Vec<_>, _>>()?;
        let realization = Realization::new(metric, phi, chi, self.pmax)?;
        Ok(LoadedSpec {
            name: self.name.clone(),
            realization,
            kmax,
            warnings,
        })
    }

    /// Writes a realization back out as a spec.
    pub fn from_realization(name: Option<String>, r: &Realization, kmax: u32) -> Self {
        let n = r.n();
        let text = |s: &GradedSeries| {
            expr_from_series(s)
                .expect("realization entries are real polynomials")
                .to_string()
        };
        SpecFile {
            name,
            dimension: n,
            metric: Some(r.metric().to_vec()),
            kmax: Some(kmax),
            pmax: r.pmax(),
            phi: (0..n).map(|a| (0..n).map(|b| text(r.phi(a, b))).collect()).collect(),
            chi: Some((0..n).map(|a| text(r.chi(a))).collect()),
        }
    }

    pub fn from_named(ex: &NamedRealization) -> Self {
        Self::from_realization(Some(ex.name.clone()), &ex.realization, ex.kmax)
    }
}
