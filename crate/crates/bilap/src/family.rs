//! Graph families: lazy generators for infinite graphs.
//!
//! An infinite graph is represented by a generator that yields the induced
//! graph on the ball `B(x0, N)` for any horizon N. Every operation that the
//! underlying theory states on the whole vertex set takes an explicit horizon
//! and fails loudly when the budget cannot accommodate it; sup-type
//! quantities are never silently approximated.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::FamilyError;
use crate::graph::{EdgeSpec, MagneticGraph};
use crate::potential::Potential;

/// External description of a built-in family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builder", rename_all = "snake_case")]
pub enum FamilySpec {
    /// Half-line with unit edge weights and unit measure.
    HalfLineUnit,
    /// Half-line with b(k, k+1) = sqrt(k+1) and unit measure.
    HalfLineSqrt,
    /// Radial tree: every vertex at level n has floor(n^kappa) + 1 forward
    /// neighbors; unit weights and measure. `alpha` parametrizes the bundled
    /// radial potential W = -r^alpha, when present.
    RadialTree {
        kappa: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
    },
}

#[derive(Debug, Clone)]
enum FamilyKind {
    HalfLine { sqrt_weights: bool },
    RadialTree { kappa: f64 },
    Finite(Arc<MagneticGraph>),
}

/// A closed form `coeff * (n + shift)^exponent + offset`, optionally with the
/// power part floored, covering every growth law the built-in families need.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub coeff: f64,
    pub exponent: f64,
    pub shift: f64,
    pub offset: f64,
    pub floored: bool,
}

impl ClosedForm {
    pub fn constant(c: f64) -> Self {
        Self {
            coeff: 0.0,
            exponent: 0.0,
            shift: 0.0,
            offset: c,
            floored: false,
        }
    }

    pub fn eval(&self, n: u32) -> f64 {
        let base = (n as f64 + self.shift).powf(self.exponent) * self.coeff;
        let base = if self.floored { base.floor() } else { base };
        base + self.offset
    }

    /// Leading asymptotic exponent e with value ~ c * n^e, and c.
    pub fn leading(&self) -> (f64, f64) {
        if self.coeff == 0.0 || self.exponent == 0.0 {
            (0.0, self.coeff + self.offset)
        } else {
            (self.exponent, self.coeff)
        }
    }
}

/// Closed-form growth data for d_n and p_n, used for certified verdicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthModel {
    pub dn: ClosedForm,
    pub pn: ClosedForm,
    pub dn_formula: String,
    pub pn_formula: String,
}

impl GrowthModel {
    /// Leading exponent and coefficient of the product d_n * p_n.
    pub fn product_leading(&self) -> (f64, f64) {
        let (ed, cd) = self.dn.leading();
        let (ep, cp) = self.pn.leading();
        (ed + ep, cd * cp)
    }
}

/// Per-n growth statistics over balls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthStats {
    pub n: u32,
    /// Max combinatorial degree over B(x0, n).
    pub d_n: u32,
    /// Max edge weight reachable from B(x0, n); the inner max ranges over
    /// all neighbors, including ones a layer outside the ball.
    pub p_n: f64,
    /// d_{2n} p_{2n} / (mu_floor * n); note the index 2n.
    pub beta_n: f64,
    pub dnpn_over_n: f64,
}

/// Lazy generator of an infinite graph plus optional closed-form models.
#[derive(Debug, Clone)]
pub struct GraphFamily {
    name: String,
    kind: FamilyKind,
    max_vertices: u64,
    growth_model: Option<GrowthModel>,
    potential_model: Option<Potential>,
}

pub const DEFAULT_VERTEX_BUDGET: u64 = 2_000_000;

/// floor(n^kappa) with a snap against powf jitter at perfect powers.
fn floor_pow(n: u32, kappa: f64) -> u64 {
    let t = (n as f64).powf(kappa);
    let snapped = t.round();
    if (t - snapped).abs() < 1e-9 {
        snapped as u64
    } else {
        t.floor() as u64
    }
}

impl GraphFamily {
    /// Build one of the example families.
    pub fn build_example(spec: &FamilySpec) -> Result<Self, FamilyError> {
        match spec {
            FamilySpec::HalfLineUnit => Ok(Self {
                name: "half_line_unit".into(),
                kind: FamilyKind::HalfLine {
                    sqrt_weights: false,
                },
                max_vertices: DEFAULT_VERTEX_BUDGET,
                growth_model: Some(GrowthModel {
                    dn: ClosedForm::constant(2.0),
                    pn: ClosedForm::constant(1.0),
                    dn_formula: "2".into(),
                    pn_formula: "1".into(),
                }),
                potential_model: Some(Potential::NegRadialPow { exponent: 1.0 }),
            }),
            FamilySpec::HalfLineSqrt => Ok(Self {
                name: "half_line_sqrt".into(),
                kind: FamilyKind::HalfLine { sqrt_weights: true },
                max_vertices: DEFAULT_VERTEX_BUDGET,
                growth_model: Some(GrowthModel {
                    dn: ClosedForm::constant(2.0),
                    pn: ClosedForm {
                        coeff: 1.0,
                        exponent: 0.5,
                        shift: 1.0,
                        offset: 0.0,
                        floored: false,
                    },
                    dn_formula: "2".into(),
                    pn_formula: "sqrt(n + 1)".into(),
                }),
                potential_model: Some(Potential::NegRadialPow { exponent: 0.5 }),
            }),
            FamilySpec::RadialTree { kappa, alpha } => {
                if *kappa < 0.0 {
                    return Err(FamilyError::NegativeKappa(*kappa));
                }
                Ok(Self {
                    name: format!("radial_tree(kappa={kappa})"),
                    kind: FamilyKind::RadialTree { kappa: *kappa },
                    max_vertices: DEFAULT_VERTEX_BUDGET,
                    growth_model: Some(GrowthModel {
                        dn: ClosedForm {
                            coeff: 1.0,
                            exponent: *kappa,
                            shift: 0.0,
                            offset: 2.0,
                            floored: true,
                        },
                        pn: ClosedForm::constant(1.0),
                        dn_formula: format!("floor(n^{kappa}) + 2"),
                        pn_formula: "1".into(),
                    }),
                    potential_model: alpha.map(|a| Potential::NegRadialPow { exponent: a }),
                })
            }
        }
    }

    /// Wrap a standalone finite graph as a family: generation saturates at
    /// the graph's own extent, where every vertex is complete.
    pub fn from_graph(name: &str, graph: MagneticGraph) -> Self {
        Self {
            name: name.to_owned(),
            kind: FamilyKind::Finite(Arc::new(graph.as_complete())),
            max_vertices: DEFAULT_VERTEX_BUDGET,
            growth_model: None,
            potential_model: None,
        }
    }

    pub fn with_budget(mut self, max_vertices: u64) -> Self {
        self.max_vertices = max_vertices;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn growth_model(&self) -> Option<&GrowthModel> {
        self.growth_model.as_ref()
    }

    pub fn potential_model(&self) -> Option<&Potential> {
        self.potential_model.as_ref()
    }

    /// Number of vertices in B(x0, N), without generating it.
    pub fn ball_size(&self, horizon: u32) -> u64 {
        match &self.kind {
            FamilyKind::HalfLine { .. } => horizon as u64 + 1,
            FamilyKind::RadialTree { kappa } => {
                let mut total: u64 = 1;
                let mut level: u64 = 1;
                for n in 0..horizon {
                    level = level.saturating_mul(floor_pow(n, *kappa) + 1);
                    total = total.saturating_add(level);
                }
                total
            }
            FamilyKind::Finite(g) => {
                (0..g.len()).filter(|&i| g.radius_of(i) <= horizon).count() as u64
            }
        }
    }

    /// Largest horizon whose ball fits the vertex budget.
    pub fn feasible_horizon(&self) -> u32 {
        match &self.kind {
            FamilyKind::HalfLine { .. } => {
                u32::try_from(self.max_vertices.saturating_sub(1)).unwrap_or(u32::MAX)
            }
            FamilyKind::RadialTree { .. } => {
                let mut h = 0;
                while self.ball_size(h + 1) <= self.max_vertices {
                    h += 1;
                }
                h
            }
            FamilyKind::Finite(_) => u32::MAX,
        }
    }

    /// Generate the induced graph on B(x0, N). Pure: equal N gives an
    /// identical graph.
    pub fn generate(&self, horizon: u32) -> Result<MagneticGraph, FamilyError> {
        let needed = self.ball_size(horizon);
        if needed > self.max_vertices {
            return Err(FamilyError::InsufficientHorizon {
                requested: horizon,
                needed,
                budget: self.max_vertices,
            });
        }
        match &self.kind {
            FamilyKind::HalfLine { sqrt_weights } => {
                let n = horizon as usize;
                let vertices = (0..=n).map(|k| (k.to_string(), 1.0)).collect();
                let edges = (0..n)
                    .map(|k| EdgeSpec {
                        u: k.to_string(),
                        v: (k + 1).to_string(),
                        b: if *sqrt_weights {
                            ((k + 1) as f64).sqrt()
                        } else {
                            1.0
                        },
                        theta: 0.0,
                    })
                    .collect();
                Ok(MagneticGraph::new("0", 1.0, vertices, edges)?.with_horizon(horizon))
            }
            FamilyKind::RadialTree { kappa } => {
                // Breadth-first ids: the root is "0", children are numbered
                // in generation order, so indices sort by level.
                let mut vertices: Vec<(String, f64)> = vec![("0".into(), 1.0)];
                let mut edges: Vec<EdgeSpec> = Vec::new();
                let mut level: Vec<usize> = vec![0];
                let mut next_id = 1usize;
                for n in 0..horizon {
                    let children = floor_pow(n, *kappa) + 1;
                    let mut next_level = Vec::with_capacity(level.len() * children as usize);
                    for &parent in &level {
                        for _ in 0..children {
                            let id = next_id.to_string();
                            next_id += 1;
                            vertices.push((id.clone(), 1.0));
                            edges.push(EdgeSpec {
                                u: vertices[parent].0.clone(),
                                v: id,
                                b: 1.0,
                                theta: 0.0,
                            });
                            next_level.push(vertices.len() - 1);
                        }
                    }
                    level = next_level;
                }
                Ok(MagneticGraph::new("0", 1.0, vertices, edges)?.with_horizon(horizon))
            }
            FamilyKind::Finite(g) => {
                if horizon >= g.max_radius() {
                    // The whole universe: every vertex is complete.
                    Ok(g.as_ref().clone())
                } else {
                    Ok(g.induced_ball(horizon)?)
                }
            }
        }
    }
}

/// Growth statistics for n = 1..=n_max, from one generation at horizon
/// 2*n_max + 1 (beta_n reads stats at index 2n, and the inner max of p_n
/// must see edges leaving the ball).
pub fn growth_table(family: &GraphFamily, n_max: u32) -> Result<Vec<GrowthStats>, FamilyError> {
    assert!(n_max >= 1, "growth stats need n >= 1");
    let horizon = 2 * n_max + 1;
    let g = family.generate(horizon)?;
    let mu_floor = g.mu_floor();

    // Degrees are exact only where the vertex is complete; every radius we
    // read (<= 2*n_max) is below the generation horizon.
    let top = 2 * n_max;
    let mut max_deg = vec![0u32; (top + 1) as usize];
    let mut max_b = vec![0.0f64; (top + 1) as usize];
    for i in 0..g.len() {
        let r = g.radius_of(i);
        if r > top {
            continue;
        }
        debug_assert!(g.is_complete(i));
        let deg = g.degree(i) as u32;
        let slot = r as usize;
        max_deg[slot] = max_deg[slot].max(deg);
        for h in g.neighbors(i) {
            if h.b > max_b[slot] {
                max_b[slot] = h.b;
            }
        }
    }
    // Prefix maxima: stats over balls are maxima over nested spheres.
    for r in 1..=top as usize {
        max_deg[r] = max_deg[r].max(max_deg[r - 1]);
        if max_b[r - 1] > max_b[r] {
            max_b[r] = max_b[r - 1];
        }
    }

    Ok((1..=n_max)
        .map(|n| {
            let d_n = max_deg[n as usize];
            let p_n = max_b[n as usize];
            let d2n = max_deg[(2 * n) as usize] as f64;
            let p2n = max_b[(2 * n) as usize];
            GrowthStats {
                n,
                d_n,
                p_n,
                beta_n: d2n * p2n / (mu_floor * n as f64),
                dnpn_over_n: d_n as f64 * p_n / n as f64,
            }
        })
        .collect())
}

/// Growth statistics for a single n.
pub fn growth_stats(family: &GraphFamily, n: u32) -> Result<GrowthStats, FamilyError> {
    Ok(growth_table(family, n)?.pop().expect("n >= 1"))
}
