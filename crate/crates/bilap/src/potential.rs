//! Real-valued potentials W on the vertices, and the non-decreasing
//! comparison functions q with their power-growth certificates.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{CertificateError, OperatorError};
use crate::graph::MagneticGraph;

/// A real potential, either radial in the distance from the root or
/// tabulated per vertex id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    Zero,
    Constant {
        value: f64,
    },
    /// W(x) = -r(x)^exponent.
    NegRadialPow {
        exponent: f64,
    },
    Table {
        values: BTreeMap<String, f64>,
    },
}

impl Potential {
    pub fn value(&self, g: &MagneticGraph, idx: usize) -> Result<f64, OperatorError> {
        match self {
            Potential::Zero => Ok(0.0),
            Potential::Constant { value } => Ok(*value),
            Potential::NegRadialPow { exponent } => Ok(-(g.radius_of(idx) as f64).powf(*exponent)),
            Potential::Table { values } => values
                .get(g.id(idx))
                .copied()
                .ok_or_else(|| OperatorError::PotentialUndefined(g.id(idx).to_owned())),
        }
    }
}

/// q(s) = coeff * s^exponent + offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QFunction {
    pub coeff: f64,
    pub exponent: f64,
    pub offset: f64,
}

impl QFunction {
    pub fn eval(&self, s: f64) -> f64 {
        self.coeff * s.powf(self.exponent) + self.offset
    }

    /// q(s) = s + 1 with certificate q(s) <= 2 s for s >= 1.
    pub fn affine() -> (Self, QCertificate) {
        let q = QFunction {
            coeff: 1.0,
            exponent: 1.0,
            offset: 1.0,
        };
        (q, QCertificate::new(q, 1.0, 2.0, 1.0))
    }

    /// q(s) = sqrt(s) + 1 with certificate q(s) <= 2 sqrt(s) for s >= 1.
    pub fn sqrt_affine() -> (Self, QCertificate) {
        let q = QFunction {
            coeff: 1.0,
            exponent: 0.5,
            offset: 1.0,
        };
        (q, QCertificate::new(q, 0.5, 2.0, 1.0))
    }

    /// Constant q with alpha = 0 certificate.
    pub fn constant(c: f64) -> (Self, QCertificate) {
        let q = QFunction {
            coeff: 0.0,
            exponent: 0.0,
            offset: c,
        };
        (q, QCertificate::new(q, 0.0, c, 0.0))
    }

    /// q(s) = s^alpha + 1 with certificate q(s) <= 2 s^alpha for s >= 1.
    pub fn power_affine(alpha: f64) -> (Self, QCertificate) {
        let q = QFunction {
            coeff: 1.0,
            exponent: alpha,
            offset: 1.0,
        };
        (q, QCertificate::new(q, alpha, 2.0, 1.0))
    }
}

/// A claim that q is non-decreasing and q(s) <= c_q * s^alpha for s >= s0,
/// verifiable on the integer grid actually used downstream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QCertificate {
    pub q: QFunction,
    pub alpha: f64,
    pub c_q: f64,
    pub s0: f64,
    #[serde(default)]
    pub monotone_certified: bool,
}

impl QCertificate {
    pub fn new(q: QFunction, alpha: f64, c_q: f64, s0: f64) -> Self {
        Self {
            q,
            alpha,
            c_q,
            s0,
            monotone_certified: false,
        }
    }

    /// Check positivity, monotonicity and the growth bound on the integer
    /// grid 0..=grid_max (distances take integer values, and the q-bound is
    /// only ever evaluated at even integers 2n).
    pub fn validate(&self, grid_max: u32) -> Result<QCertificate, CertificateError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(CertificateError::AlphaOutOfRange(self.alpha));
        }
        if self.c_q <= 0.0 {
            return Err(CertificateError::NonPositiveCq(self.c_q));
        }
        let mut prev = f64::NEG_INFINITY;
        for s in 0..=grid_max {
            let v = self.q.eval(s as f64);
            if v <= 0.0 {
                return Err(CertificateError::NotPositive { s, value: v });
            }
            if v < prev {
                return Err(CertificateError::NotMonotone {
                    s: s - 1,
                    next_s: s,
                    prev,
                    next: v,
                });
            }
            prev = v;
            if (s as f64) >= self.s0 {
                // Slack of one part in 1e12 absorbs powf jitter at equality
                // cases like s + 1 = 2s at s = 1.
                let bound = self.c_q * (s as f64).powf(self.alpha);
                if v > bound * (1.0 + 1e-12) {
                    return Err(CertificateError::BoundViolated { s, q: v, bound });
                }
            }
        }
        Ok(QCertificate {
            monotone_certified: true,
            ..*self
        })
    }
}
