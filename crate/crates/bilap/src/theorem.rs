//! Hypothesis checker for the self-adjointness criterion.
//!
//! Decides whether a (family, potential, q, alpha) instance satisfies the
//! hypotheses: mu bounded below, W minorized by -q(r) with q non-decreasing
//! of power growth s^alpha, and the ball growth condition on d_n p_n. A
//! verdict of `Satisfied` means the criterion applies (the operator is
//! essentially self-adjoint on finitely supported functions); anything else
//! means the criterion is silent, never that self-adjointness fails.
//!
//! Boundedness of an infinite sequence is undecidable from finite data, so
//! verdicts distinguish closed-form certification from empirical evidence
//! truncated at the horizon.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{CertificateError, FamilyError, OperatorError};
use crate::family::{growth_table, FamilySpec, GraphFamily, GrowthStats};
use crate::manifest::RunManifest;
use crate::potential::{Potential, QCertificate, QFunction};

#[derive(Debug, Error)]
pub enum CheckError {
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("alpha = {0} outside [0, 1]")]
    AlphaOutOfRange(f64),
    #[error("growth table needs n_max >= 1 within the vertex budget")]
    HorizonTooSmall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Satisfied,
    NotSatisfied,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaCase {
    Zero,
    Positive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvidenceSource {
    FromGrowthModel,
    EmpiricalToHorizon,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvidenceRow {
    pub n: u32,
    pub d_n: u32,
    pub p_n: f64,
    /// n^{alpha-1} d_n p_n in the positive case, d_n p_n / n when alpha = 0.
    pub seq: f64,
    pub beta_n: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinorantWitness {
    pub vertex: String,
    pub r: u32,
    pub w: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinorantCheck {
    pub pass: bool,
    pub checked_to: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<MinorantWitness>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KWitness {
    pub k: f64,
    pub from_n: u32,
    pub threshold: f64,
    pub within_horizon: bool,
}

/// The smallest C1 < 1 with beta_n <= C1 for n >= N1, as far as evidenced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BetaBound {
    pub c1: f64,
    pub n1: u32,
    pub source: EvidenceSource,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthCheck {
    pub outcome: Verdict,
    pub source: EvidenceSource,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<KWitness>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<RunManifest>,
    pub family: String,
    pub verdict: Verdict,
    pub alpha: f64,
    pub alpha_case: AlphaCase,
    pub mu_floor_used: f64,
    pub q_monotone_certified: bool,
    pub w_minorant_checked_to: u32,
    pub minorant: MinorantCheck,
    pub growth: GrowthCheck,
    pub evidence: Vec<EvidenceRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_bound: Option<BetaBound>,
    pub notes: Vec<String>,
}

/// External instance description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceDoc {
    pub family: FamilySpec,
    pub potential: Potential,
    pub q: QFunction,
    pub alpha: f64,
    pub c_q: f64,
    pub s0: f64,
    #[serde(default = "default_n_max")]
    pub n_max: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_vertices: Option<u64>,
}

fn default_n_max() -> u32 {
    20
}

const EXPONENT_TOL: f64 = 1e-12;
const K_MARGIN: f64 = 1e-9;

/// Verify W(x) >= -q(r(x)) on the ball of the given radius; on failure the
/// first violating vertex (in radius order) is returned.
pub fn check_minorant(
    family: &GraphFamily,
    w: &Potential,
    qc: &QCertificate,
    horizon: u32,
) -> Result<MinorantCheck, CheckError> {
    let g = family.generate(horizon)?;
    for i in g.vertices_by_radius() {
        let r = g.radius_of(i);
        let wx = w.value(&g, i)?;
        let bound = -qc.q.eval(r as f64);
        if wx < bound {
            return Ok(MinorantCheck {
                pass: false,
                checked_to: horizon,
                witness: Some(MinorantWitness {
                    vertex: g.id(i).to_owned(),
                    r,
                    w: wx,
                    bound,
                }),
            });
        }
    }
    Ok(MinorantCheck {
        pass: true,
        checked_to: horizon,
        witness: None,
    })
}

/// Smallest suffix maximum of `values[n-1]` over n in [N, n_max], returned as
/// (best K, earliest N attaining it).
fn min_suffix_max(values: &[f64]) -> (f64, u32) {
    let mut suffix = vec![0.0; values.len()];
    let mut acc = f64::NEG_INFINITY;
    for i in (0..values.len()).rev() {
        acc = acc.max(values[i]);
        suffix[i] = acc;
    }
    let best = suffix.iter().copied().fold(f64::INFINITY, f64::min);
    let from = suffix.iter().position(|&v| v == best).unwrap_or(0);
    (best, from as u32 + 1)
}

fn tail_non_increasing(values: &[f64]) -> bool {
    let start = values.len() - (values.len() / 4).max(1);
    values[start.saturating_sub(1)..]
        .windows(2)
        .all(|w| w[1] <= w[0] + 1e-12)
}

/// The growth case analysis: bounded {n^{alpha-1} d_n p_n} for alpha > 0, or
/// an eventual bound d_n p_n / n <= K < mu_floor/2 for alpha = 0. Closed-form
/// growth models certify the verdict by exponent arithmetic; otherwise the
/// evidence is empirical to the horizon and unbounded-looking tails are
/// reported inconclusive.
pub fn check_growth(
    family: &GraphFamily,
    alpha: f64,
    n_max: u32,
) -> Result<(GrowthCheck, Vec<EvidenceRow>, Option<BetaBound>), CheckError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(CheckError::AlphaOutOfRange(alpha));
    }
    let n_eff = n_max.min(family.feasible_horizon().saturating_sub(1) / 2);
    if n_eff == 0 {
        return Err(CheckError::HorizonTooSmall);
    }
    let stats = growth_table(family, n_eff)?;
    let mu_floor = family.generate(1)?.mu_floor();
    let threshold = mu_floor / 2.0;

    let rows: Vec<EvidenceRow> = stats
        .iter()
        .map(|s: &GrowthStats| EvidenceRow {
            n: s.n,
            d_n: s.d_n,
            p_n: s.p_n,
            seq: if alpha > 0.0 {
                (s.n as f64).powf(alpha - 1.0) * s.d_n as f64 * s.p_n
            } else {
                s.dnpn_over_n
            },
            beta_n: s.beta_n,
        })
        .collect();

    let model = family.growth_model();
    let growth = match (alpha > 0.0, model) {
        (true, Some(m)) => {
            let (e, c) = m.product_leading();
            let total = alpha - 1.0 + e;
            let outcome = if total <= EXPONENT_TOL {
                Verdict::Satisfied
            } else {
                Verdict::NotSatisfied
            };
            GrowthCheck {
                outcome,
                source: EvidenceSource::FromGrowthModel,
                detail: format!("d_n p_n ~ {c} n^{e}; bounded iff alpha - 1 + {e} = {total} <= 0"),
                k: None,
            }
        }
        (true, None) => {
            let seq: Vec<f64> = rows.iter().map(|r| r.seq).collect();
            let sup = seq.iter().copied().fold(0.0, f64::max);
            if tail_non_increasing(&seq) {
                GrowthCheck {
                    outcome: Verdict::Satisfied,
                    source: EvidenceSource::EmpiricalToHorizon,
                    detail: format!(
                        "sup over n <= {n_eff} is {sup}; tail non-increasing at the horizon"
                    ),
                    k: None,
                }
            } else {
                GrowthCheck {
                    outcome: Verdict::Inconclusive,
                    source: EvidenceSource::EmpiricalToHorizon,
                    detail: format!(
                        "sequence still increasing at the horizon n = {n_eff} (sup {sup})"
                    ),
                    k: None,
                }
            }
        }
        (false, model) => {
            let seq: Vec<f64> = rows.iter().map(|r| r.seq).collect();
            let (k_best, from_n) = min_suffix_max(&seq);
            let within = k_best < threshold - K_MARGIN;
            let k = Some(KWitness {
                k: k_best,
                from_n,
                threshold,
                within_horizon: within,
            });
            match model {
                Some(m) => {
                    let (e, c) = m.product_leading();
                    if e < 1.0 - EXPONENT_TOL {
                        GrowthCheck {
                            outcome: Verdict::Satisfied,
                            source: EvidenceSource::FromGrowthModel,
                            detail: format!(
                                "d_n p_n / n ~ {c} n^{} -> 0, any K < mu_floor/2 works eventually",
                                e - 1.0
                            ),
                            k,
                        }
                    } else if e <= 1.0 + EXPONENT_TOL {
                        let limit = c;
                        let outcome = if limit < threshold - K_MARGIN {
                            Verdict::Satisfied
                        } else if limit > threshold + K_MARGIN {
                            Verdict::NotSatisfied
                        } else {
                            Verdict::Inconclusive
                        };
                        GrowthCheck {
                            outcome,
                            source: EvidenceSource::FromGrowthModel,
                            detail: format!(
                                "d_n p_n / n -> {limit}; threshold mu_floor/2 = {threshold}"
                            ),
                            k,
                        }
                    } else {
                        GrowthCheck {
                            outcome: Verdict::NotSatisfied,
                            source: EvidenceSource::FromGrowthModel,
                            detail: format!("d_n p_n / n ~ {c} n^{} is unbounded", e - 1.0),
                            k,
                        }
                    }
                }
                None => {
                    if within && tail_non_increasing(&seq) {
                        GrowthCheck {
                            outcome: Verdict::Satisfied,
                            source: EvidenceSource::EmpiricalToHorizon,
                            detail: format!("K = {k_best} < {threshold} from n = {from_n}"),
                            k,
                        }
                    } else {
                        GrowthCheck {
                            outcome: Verdict::Inconclusive,
                            source: EvidenceSource::EmpiricalToHorizon,
                            detail: format!(
                                "no K below mu_floor/2 = {threshold} evidenced up to n = {n_eff}"
                            ),
                            k,
                        }
                    }
                }
            }
        }
    };

    // Tightest evidenced beta_n bound below 1 and its onset, feeding the
    // localization estimates downstream.
    let betas: Vec<f64> = rows.iter().map(|r| r.beta_n).collect();
    let beta_bound = {
        let mut suffix = vec![0.0; betas.len()];
        let mut acc = f64::NEG_INFINITY;
        for i in (0..betas.len()).rev() {
            acc = acc.max(betas[i]);
            suffix[i] = acc;
        }
        suffix.iter().position(|&v| v < 1.0).map(|i| {
            let certified = match model {
                Some(m) => {
                    let (e, c) = m.product_leading();
                    e < 1.0 - EXPONENT_TOL
                        || (e <= 1.0 + EXPONENT_TOL && 2.0 * c / mu_floor < 1.0 - EXPONENT_TOL)
                }
                None => false,
            };
            BetaBound {
                c1: suffix[i],
                n1: i as u32 + 1,
                source: if certified {
                    EvidenceSource::FromGrowthModel
                } else {
                    EvidenceSource::EmpiricalToHorizon
                },
            }
        })
    };

    Ok((growth, rows, beta_bound))
}

/// Run every sub-check and combine verdicts. `Satisfied` requires all of:
/// certificate valid on the grid, minorant holds on the checked ball, and
/// the growth condition for the alpha case.
pub fn check_theorem(
    family: &GraphFamily,
    w: &Potential,
    qc: &QCertificate,
    n_max: u32,
) -> Result<HypothesisReport, CheckError> {
    if !(0.0..=1.0).contains(&qc.alpha) {
        return Err(CheckError::AlphaOutOfRange(qc.alpha));
    }
    let n_eff = n_max.min(family.feasible_horizon().saturating_sub(1) / 2);
    if n_eff == 0 {
        return Err(CheckError::HorizonTooSmall);
    }
    let horizon = 2 * n_eff + 1;
    let mut notes = Vec::new();
    if n_eff < n_max {
        notes.push(format!(
            "evidence truncated at n = {n_eff}: ball growth exhausts the vertex budget"
        ));
    }

    let (q_ok, cert_outcome) = match qc.validate(2 * horizon) {
        Ok(_) => (true, Verdict::Satisfied),
        Err(e @ CertificateError::BoundViolated { .. }) => {
            notes.push(format!("certificate: {e}"));
            (false, Verdict::Inconclusive)
        }
        Err(e @ CertificateError::AlphaOutOfRange(_)) => {
            return Err(CheckError::AlphaOutOfRange(match e {
                CertificateError::AlphaOutOfRange(a) => a,
                _ => unreachable!(),
            }))
        }
        Err(e) => {
            notes.push(format!("certificate: {e}"));
            (false, Verdict::NotSatisfied)
        }
    };

    let minorant = check_minorant(family, w, qc, horizon)?;
    let (growth, evidence, beta_bound) = check_growth(family, qc.alpha, n_eff)?;
    let g = family.generate(1)?;

    let minorant_outcome = if minorant.pass {
        Verdict::Satisfied
    } else {
        Verdict::NotSatisfied
    };
    let outcomes = [cert_outcome, minorant_outcome, growth.outcome];
    let verdict = if outcomes.contains(&Verdict::NotSatisfied) {
        Verdict::NotSatisfied
    } else if outcomes.contains(&Verdict::Inconclusive) {
        Verdict::Inconclusive
    } else {
        Verdict::Satisfied
    };

    Ok(HypothesisReport {
        manifest: None,
        family: family.name().to_owned(),
        verdict,
        alpha: qc.alpha,
        alpha_case: if qc.alpha > 0.0 {
            AlphaCase::Positive
        } else {
            AlphaCase::Zero
        },
        mu_floor_used: g.mu_floor(),
        q_monotone_certified: q_ok,
        w_minorant_checked_to: horizon,
        minorant,
        growth,
        evidence,
        beta_bound,
        notes,
    })
}

/// Check an instance as described on disk.
pub fn check_instance(doc: &InstanceDoc) -> Result<HypothesisReport, CheckError> {
    let mut family = GraphFamily::build_example(&doc.family)?;
    if let Some(budget) = doc.max_vertices {
        family = family.with_budget(budget);
    }
    let qc = QCertificate::new(doc.q, doc.alpha, doc.c_q, doc.s0);
    check_theorem(&family, &doc.potential, &qc, doc.n_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_line_unit() -> GraphFamily {
        GraphFamily::build_example(&FamilySpec::HalfLineUnit).unwrap()
    }

    fn tree(kappa: f64, alpha: f64) -> (GraphFamily, Potential, QCertificate) {
        let f = GraphFamily::build_example(&FamilySpec::RadialTree {
            kappa,
            alpha: Some(alpha),
        })
        .unwrap()
        .with_budget(200_000);
        let w = f.potential_model().unwrap().clone();
        let (_, qc) = QFunction::power_affine(alpha);
        (f, w, qc)
    }

    #[test]
    fn minorant_examples() {
        let f = half_line_unit();
        let (_, qc) = QFunction::affine();
        let w = Potential::NegRadialPow { exponent: 1.0 };
        assert!(check_minorant(&f, &w, &qc, 30).unwrap().pass);

        let sqr = GraphFamily::build_example(&FamilySpec::HalfLineSqrt).unwrap();
        let (_, qs) = QFunction::sqrt_affine();
        let ws = Potential::NegRadialPow { exponent: 0.5 };
        assert!(check_minorant(&sqr, &ws, &qs, 30).unwrap().pass);

        // W(k) = -k^2 against q(s) = s + 1 first fails at k = 2: -4 < -3.
        let wq = Potential::NegRadialPow { exponent: 2.0 };
        let check = check_minorant(&f, &wq, &qc, 30).unwrap();
        assert!(!check.pass);
        let witness = check.witness.unwrap();
        assert_eq!(witness.vertex, "2");
        assert_eq!(witness.w, -4.0);
        assert_eq!(witness.bound, -3.0);
    }

    #[test]
    fn unit_half_line_instance_is_satisfied() {
        let f = half_line_unit();
        let w = Potential::NegRadialPow { exponent: 1.0 };
        let (_, qc) = QFunction::affine();
        let report = check_theorem(&f, &w, &qc, 20).unwrap();
        assert_eq!(report.verdict, Verdict::Satisfied);
        assert_eq!(report.alpha_case, AlphaCase::Positive);
        assert_eq!(report.growth.source, EvidenceSource::FromGrowthModel);
        // The sequence n^{alpha-1} d_n p_n is constantly 2.
        for row in &report.evidence {
            assert_eq!(row.seq, 2.0);
        }
        let bb = report.beta_bound.unwrap();
        assert!(bb.c1 < 1.0);
        assert_eq!(bb.n1, 3); // beta_n = 2/n drops below 1 at n = 3
    }

    #[test]
    fn sqrt_half_line_instance_is_satisfied() {
        let f = GraphFamily::build_example(&FamilySpec::HalfLineSqrt).unwrap();
        let w = Potential::NegRadialPow { exponent: 0.5 };
        let (_, qc) = QFunction::sqrt_affine();
        let report = check_theorem(&f, &w, &qc, 20).unwrap();
        assert_eq!(report.verdict, Verdict::Satisfied);
    }

    #[test]
    fn tree_exponent_arithmetic_decides() {
        let (f, w, qc) = tree(0.5, 0.5);
        let report = check_theorem(&f, &w, &qc, 20).unwrap();
        assert_eq!(report.verdict, Verdict::Satisfied, "{:?}", report.growth);

        let (f, w, qc) = tree(0.0, 1.0);
        let report = check_theorem(&f, &w, &qc, 20).unwrap();
        assert_eq!(report.verdict, Verdict::Satisfied);

        // alpha - 1 + kappa = 0.3 > 0: unbounded.
        let (f, w, qc) = tree(0.5, 0.8);
        let report = check_theorem(&f, &w, &qc, 20).unwrap();
        assert_eq!(report.verdict, Verdict::NotSatisfied);
    }

    #[test]
    fn steep_tree_with_alpha_zero_not_satisfied() {
        let f = GraphFamily::build_example(&FamilySpec::RadialTree {
            kappa: 1.5,
            alpha: None,
        })
        .unwrap()
        .with_budget(100_000);
        let w = Potential::Zero;
        let (_, qc) = QFunction::constant(2.0);
        let report = check_theorem(&f, &w, &qc, 20).unwrap();
        assert_eq!(report.verdict, Verdict::NotSatisfied);
        assert_eq!(report.alpha_case, AlphaCase::Zero);
    }

    #[test]
    fn alpha_zero_empirical_k_on_unit_half_line() {
        let f = half_line_unit();
        let (growth, _, _) = check_growth(&f, 0.0, 10).unwrap();
        // Closed form certifies; K witness comes from the table: the suffix
        // max of 2/n is minimized at the horizon.
        let k = growth.k.unwrap();
        assert!(k.k <= 2.0 / 10.0 + 1e-12);
        assert!(k.within_horizon);
        assert_eq!(growth.outcome, Verdict::Satisfied);
    }

    #[test]
    fn empirical_growth_without_a_model() {
        // A long finite path has no closed-form model; the alpha = 0 case is
        // evidenced with K = 2/n_max and a non-increasing tail.
        let path = half_line_unit().generate(60).unwrap();
        let fam = GraphFamily::from_graph("finite_path", path);
        let (growth, _, _) = check_growth(&fam, 0.0, 25).unwrap();
        assert_eq!(growth.outcome, Verdict::Satisfied);
        assert_eq!(growth.source, EvidenceSource::EmpiricalToHorizon);
        let k = growth.k.unwrap();
        assert!(k.within_horizon);
        assert!(k.k <= 2.0 / 25.0 + 1e-12);

        // A finite piece of an unbounded-degree tree: the sequence is still
        // increasing at the horizon, so the empirical verdict stays open.
        let tree = GraphFamily::build_example(&FamilySpec::RadialTree {
            kappa: 1.0,
            alpha: None,
        })
        .unwrap()
        .generate(9)
        .unwrap();
        let fam = GraphFamily::from_graph("finite_tree", tree);
        let (growth, rows, _) = check_growth(&fam, 1.0, 4).unwrap();
        assert_eq!(growth.outcome, Verdict::Inconclusive);
        assert_eq!(growth.source, EvidenceSource::EmpiricalToHorizon);
        assert!(rows.windows(2).all(|w| w[0].seq < w[1].seq));
    }

    #[test]
    fn report_serializes_deterministically() {
        let f = half_line_unit();
        let w = Potential::NegRadialPow { exponent: 1.0 };
        let (_, qc) = QFunction::affine();
        let a = serde_json::to_string(&check_theorem(&f, &w, &qc, 12).unwrap()).unwrap();
        let b = serde_json::to_string(&check_theorem(&f, &w, &qc, 12).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn alpha_out_of_range_is_an_input_error() {
        let f = half_line_unit();
        let w = Potential::Zero;
        let (q, _) = QFunction::affine();
        let qc = QCertificate::new(q, 1.2, 2.0, 1.0);
        assert!(matches!(
            check_theorem(&f, &w, &qc, 10),
            Err(CheckError::AlphaOutOfRange(_))
        ));
    }
}
