//! The piecewise-linear cut-off family
//! `chi_n(x) = min(max((2n - r(x)) / n, 0), 1)`.
//!
//! Values are rationals with denominator n: `chi_n(x) = k/n` with
//! `k = clamp(2n - r(x), 0, n)`. The property checker works on the integer
//! numerators, so every check below is exact, free of rounding slack.

use serde::{Deserialize, Serialize};

use crate::amplitude::RealAmplitudes;
use crate::error::{FamilyError, OperatorError};
use crate::family::GraphFamily;
use crate::graph::MagneticGraph;

/// Integer numerator k with chi_n = k/n.
pub fn chi_numerator(n: u32, r: u32) -> u32 {
    let two_n = 2 * n as i64;
    (two_n - r as i64).clamp(0, n as i64) as u32
}

/// chi_n at a vertex of the graph.
pub fn chi_value(g: &MagneticGraph, n: u32, idx: usize) -> f64 {
    chi_numerator(n, g.radius_of(idx)) as f64 / n as f64
}

/// chi_n looked up by vertex id.
pub fn chi(g: &MagneticGraph, n: u32, id: &str) -> Result<f64, OperatorError> {
    let idx = g
        .index_of(id)
        .ok_or_else(|| OperatorError::UnknownVertex(id.to_owned()))?;
    Ok(chi_value(g, n, idx))
}

/// chi_n materialized as a finitely supported real function. The graph must
/// cover B(x0, 2n), otherwise the support would be silently truncated.
pub fn chi_as_amplitudes(g: &MagneticGraph, n: u32) -> Result<RealAmplitudes, OperatorError> {
    let available = g.horizon().unwrap_or(u32::MAX);
    if available < 2 * n {
        return Err(OperatorError::HorizonShortfall {
            needed: 2 * n,
            available,
        });
    }
    Ok(RealAmplitudes::from_pairs(
        (0..g.len()).map(|i| (i, chi_value(g, n, i))),
    ))
}

/// A single property violation, with enough context to locate it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CutoffViolation {
    pub property: String,
    pub vertex: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub neighbor: Option<String>,
    pub values: Vec<f64>,
}

/// Result of checking the cut-off properties at one index n.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CutoffReport {
    pub n: u32,
    pub checked_vertices: u64,
    pub checked_edges: u64,
    pub support_size: u64,
    pub pass: bool,
    pub violations: Vec<CutoffViolation>,
}

/// Verify, vertex by vertex and edge by edge on B(x0, 2n+1):
/// range [0,1]; identically 1 on B(x0,n); identically 0 off B(x0,2n); finite
/// support; the finitized pointwise limit (chi_n = 1 wherever r <= n); the
/// slope bound |chi_n(x) - chi_n(y)| <= 1/n on edges; and the neighbor ratio
/// bound chi_n(y) <= 2 chi_n(x) with its consequence
/// chi_n(x) + chi_n(y) <= 3 chi_n(x).
pub fn check_cutoff_properties(family: &GraphFamily, n: u32) -> Result<CutoffReport, FamilyError> {
    assert!(n >= 1);
    let g = family.generate(2 * n + 1)?;
    let mut violations = Vec::new();
    let mut support_size = 0u64;

    let chi_of = |i: usize| chi_numerator(n, g.radius_of(i));

    for i in 0..g.len() {
        let r = g.radius_of(i);
        let k = chi_of(i);
        if k > n {
            violations.push(CutoffViolation {
                property: "range".into(),
                vertex: g.id(i).into(),
                neighbor: None,
                values: vec![k as f64 / n as f64],
            });
        }
        if r <= n && k != n {
            violations.push(CutoffViolation {
                property: "one_on_inner_ball".into(),
                vertex: g.id(i).into(),
                neighbor: None,
                values: vec![k as f64 / n as f64],
            });
        }
        if r >= 2 * n && k != 0 {
            violations.push(CutoffViolation {
                property: "zero_off_double_ball".into(),
                vertex: g.id(i).into(),
                neighbor: None,
                values: vec![k as f64 / n as f64],
            });
        }
        // Finitized pointwise limit: the index n already saturates x.
        if n >= r && k != n {
            violations.push(CutoffViolation {
                property: "pointwise_limit".into(),
                vertex: g.id(i).into(),
                neighbor: None,
                values: vec![k as f64 / n as f64],
            });
        }
        if k > 0 {
            support_size += 1;
            // Finite support: everything nonzero sits strictly inside
            // B(x0, 2n).
            if r >= 2 * n {
                violations.push(CutoffViolation {
                    property: "finite_support".into(),
                    vertex: g.id(i).into(),
                    neighbor: None,
                    values: vec![k as f64 / n as f64, r as f64],
                });
            }
        }
    }

    let mut checked_edges = 0u64;
    for x in 0..g.len() {
        let kx = chi_of(x);
        for h in g.neighbors(x) {
            let y = h.to;
            if x < y {
                checked_edges += 1;
                // Slope bound, exact in integers: |kx - ky| <= 1.
                let ky = chi_of(y);
                if kx.abs_diff(ky) > 1 {
                    violations.push(CutoffViolation {
                        property: "edge_slope".into(),
                        vertex: g.id(x).into(),
                        neighbor: Some(g.id(y).into()),
                        values: vec![kx as f64 / n as f64, ky as f64 / n as f64],
                    });
                }
            }
            let ky = chi_of(y);
            if kx > 0 {
                if ky > 2 * kx {
                    violations.push(CutoffViolation {
                        property: "neighbor_ratio".into(),
                        vertex: g.id(x).into(),
                        neighbor: Some(g.id(y).into()),
                        values: vec![kx as f64 / n as f64, ky as f64 / n as f64],
                    });
                }
                if kx + ky > 3 * kx {
                    violations.push(CutoffViolation {
                        property: "neighbor_sum".into(),
                        vertex: g.id(x).into(),
                        neighbor: Some(g.id(y).into()),
                        values: vec![kx as f64 / n as f64, ky as f64 / n as f64],
                    });
                }
            }
        }
    }

    Ok(CutoffReport {
        n,
        checked_vertices: g.len() as u64,
        checked_edges,
        support_size,
        pass: violations.is_empty(),
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::FamilySpec;

    #[test]
    fn formula_values_on_the_half_line() {
        let f = GraphFamily::build_example(&FamilySpec::HalfLineUnit).unwrap();
        let g = f.generate(10).unwrap();
        // n = 2, r = 3: (4 - 3)/2 = 0.5.
        assert_eq!(chi(&g, 2, "3").unwrap(), 0.5);
        // 1 on the inner ball, 0 beyond 2n.
        assert_eq!(chi(&g, 2, "0").unwrap(), 1.0);
        assert_eq!(chi(&g, 2, "2").unwrap(), 1.0);
        assert_eq!(chi(&g, 2, "4").unwrap(), 0.0);
        assert_eq!(chi(&g, 2, "7").unwrap(), 0.0);
        assert!(matches!(
            chi(&g, 2, "99"),
            Err(OperatorError::UnknownVertex(_))
        ));
    }

    #[test]
    fn amplitude_form_matches_the_spec_rows() {
        let f = GraphFamily::build_example(&FamilySpec::HalfLineUnit).unwrap();
        let g = f.generate(8).unwrap();
        let chi1 = chi_as_amplitudes(&g, 1).unwrap();
        let vals: Vec<f64> = (0..4)
            .map(|k| chi1.get(g.index_of(&k.to_string()).unwrap()))
            .collect();
        assert_eq!(vals, vec![1.0, 1.0, 0.0, 0.0]);
        let chi2 = chi_as_amplitudes(&g, 2).unwrap();
        let vals: Vec<f64> = (0..6)
            .map(|k| chi2.get(g.index_of(&k.to_string()).unwrap()))
            .collect();
        assert_eq!(vals, vec![1.0, 1.0, 1.0, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn amplitude_form_needs_the_double_ball() {
        let f = GraphFamily::build_example(&FamilySpec::HalfLineUnit).unwrap();
        let g = f.generate(5).unwrap();
        assert!(matches!(
            chi_as_amplitudes(&g, 3),
            Err(OperatorError::HorizonShortfall { needed: 6, .. })
        ));
    }

    #[test]
    fn support_on_binary_tree_is_levels_zero_and_one() {
        let f = GraphFamily::build_example(&FamilySpec::RadialTree {
            kappa: 0.0,
            alpha: None,
        })
        .unwrap();
        let report = check_cutoff_properties(&f, 1).unwrap();
        assert!(report.pass);
        assert_eq!(report.support_size, 3); // root plus two children
    }

    #[test]
    fn properties_hold_on_example_families() {
        let half = GraphFamily::build_example(&FamilySpec::HalfLineUnit).unwrap();
        let sqrt = GraphFamily::build_example(&FamilySpec::HalfLineSqrt).unwrap();
        for f in [&half, &sqrt] {
            for n in 1..=20 {
                let report = check_cutoff_properties(f, n).unwrap();
                assert!(report.pass, "{} n={n}: {:?}", f.name(), report.violations);
            }
        }
    }

    #[test]
    fn slope_bound_attained_with_equality_in_the_ramp() {
        let f = GraphFamily::build_example(&FamilySpec::HalfLineUnit).unwrap();
        let g = f.generate(12).unwrap();
        let n = 5;
        // Consecutive ramp vertices differ by exactly 1/n: exact on the
        // integer numerators, within rounding of the f64 quotients.
        assert_eq!(chi_numerator(n, 7) - chi_numerator(n, 8), 1);
        let a = chi(&g, n, "7").unwrap();
        let b = chi(&g, n, "8").unwrap();
        assert!(((a - b) - 1.0 / n as f64).abs() < 1e-15);
        let report = check_cutoff_properties(&f, n).unwrap();
        assert!(report.pass);
    }

    #[test]
    fn ratio_bound_vacuous_at_zero_base() {
        let f = GraphFamily::build_example(&FamilySpec::HalfLineUnit).unwrap();
        let g = f.generate(6).unwrap();
        // n = 1: chi(r=1) = 1, chi(r=2) = 0; the ratio rule with base 0 is
        // vacuous and the sum bound holds as 1 + 0 <= 3.
        assert_eq!(chi(&g, 1, "1").unwrap(), 1.0);
        assert_eq!(chi(&g, 1, "2").unwrap(), 0.0);
        let report = check_cutoff_properties(&f, 1).unwrap();
        assert!(report.pass);
    }
}
