//! Property-based numerical verification of the operator identities and the
//! cut-off estimate machinery, on randomized finitely supported amplitudes.
//!
//! Identities are checked to a relative residual (scale-free against the
//! largest participating term); inequalities are reported with their observed
//! max ratio LHS/RHS, which doubles as sharpness data — a check that "passes"
//! with ratio near zero usually means the harness is not stressing it, so an
//! adversarial sampler concentrates mass on the cut-off ramp where the
//! estimates are least slack. Same seed, same report bytes.

use std::collections::BTreeMap;
use std::rc::Rc;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amplitude::{Amplitudes, RealAmplitudes};
use crate::cutoff::chi_as_amplitudes;
use crate::error::{FamilyError, OperatorError};
use crate::family::{growth_table, GraphFamily};
use crate::graph::MagneticGraph;
use crate::manifest::RunManifest;
use crate::operator::{apply_laplacian, apply_p, inner, norm, norm_sq, plain_laplacian_at};
use crate::potential::{QCertificate, QFunction};

#[derive(Debug, Error)]
pub enum LabError {
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("unknown check name `{0}`")]
    UnknownCheck(String),
}

/// Trial regime for one lab run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialConfig {
    /// Trials per family for graph checks; total trials for scalar checks.
    pub trials: u64,
    /// Cut-off indices to cycle through (clamped per family by the budget).
    pub n_range: Vec<u32>,
    /// Support radius for sampled amplitudes; defaults to 2n+1 so supports
    /// straddle the cut-off ramp.
    pub support_radius: Option<u32>,
    pub seed: u64,
    /// Relative tolerance: identities pass at residual <= tolerance,
    /// inequalities at ratio <= 1 + tolerance.
    pub tolerance: f64,
    /// Max sampled support size per trial.
    pub max_support: usize,
    /// Vertex budget per generated ball.
    pub vertex_budget: u64,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            trials: 200,
            n_range: (1..=10).collect(),
            support_radius: None,
            seed: 0,
            tolerance: 1e-10,
            max_support: 24,
            vertex_budget: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Identity,
    Inequality,
    Positivity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Hash, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    ProductRule,
    ExpansionIdentity,
    CutoffPBound,
    CutoffMultiplierBound,
    LocalizationBound,
    LocalizationHalfEpsilon,
    PairingPSquaredBound,
    PairingMultiplierSquaredBound,
    RadialQBound,
    ScalarSumSquare,
    YoungInequality,
    GreenFirstOrder,
    GreenSecondOrder,
    FormPositivity,
}

impl CheckName {
    pub fn all() -> Vec<CheckName> {
        use CheckName::*;
        vec![
            ProductRule,
            ExpansionIdentity,
            CutoffPBound,
            CutoffMultiplierBound,
            LocalizationBound,
            LocalizationHalfEpsilon,
            PairingPSquaredBound,
            PairingMultiplierSquaredBound,
            RadialQBound,
            ScalarSumSquare,
            YoungInequality,
            GreenFirstOrder,
            GreenSecondOrder,
            FormPositivity,
        ]
    }

    pub fn as_str(&self) -> &'static str {
        use CheckName::*;
        match self {
            ProductRule => "product_rule",
            ExpansionIdentity => "expansion_identity",
            CutoffPBound => "cutoff_p_bound",
            CutoffMultiplierBound => "cutoff_multiplier_bound",
            LocalizationBound => "localization_bound",
            LocalizationHalfEpsilon => "localization_half_epsilon",
            PairingPSquaredBound => "pairing_p_squared_bound",
            PairingMultiplierSquaredBound => "pairing_multiplier_squared_bound",
            RadialQBound => "radial_q_bound",
            ScalarSumSquare => "scalar_sum_square",
            YoungInequality => "young_inequality",
            GreenFirstOrder => "green_first_order",
            GreenSecondOrder => "green_second_order",
            FormPositivity => "form_positivity",
        }
    }

    pub fn parse(s: &str) -> Result<CheckName, LabError> {
        CheckName::all()
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| LabError::UnknownCheck(s.to_owned()))
    }

    fn statement(&self) -> &'static str {
        use CheckName::*;
        match self {
            ProductRule => "D(psi u) = psi D u - P_psi[u] + u L psi  (D magnetic, L plain)",
            ExpansionIdentity => {
                "|chi Du|^2 = |D(chi u)|^2 + 2Re(chi Du, P_chi[u]) - 2Re(chi Du, u L chi) \
                 + 2Re(P_chi[u], u L chi) - |P_chi[u]|^2 - |u L chi|^2"
            }
            CutoffPBound => "|P_chi_n[u]| <= 2 beta_n |u|",
            CutoffMultiplierBound => "|u L chi_n| <= beta_n |u|",
            LocalizationBound => {
                "|chi_n D u|^2 <= (1-eps)^-1 |D(chi_n u)|^2 + (9+4eps)/((1-eps)eps) beta_n^2 |u|^2"
            }
            LocalizationHalfEpsilon => "|chi_n D u|^2 <= 2 |D(chi_n u)|^2 + 44 beta_n^2 |u|^2",
            PairingPSquaredBound => "|(D u, P_{chi_n^2}[u])| <= 6 beta_n |chi_n D u| |u|",
            PairingMultiplierSquaredBound => "|(D u, u L(chi_n^2))| <= 3 beta_n |chi_n D u| |u|",
            RadialQBound => {
                "((q o r) chi_n u, chi_n u) <= q(2n) |u|^2 <= c_q 2^alpha n^alpha |u|^2"
            }
            ScalarSumSquare => "(a_1 + ... + a_N)^2 <= N (a_1^2 + ... + a_N^2)",
            YoungInequality => "a b <= eps a^2 + b^2 / (4 eps)",
            GreenFirstOrder => "(D u, v) = (u, D v)",
            GreenSecondOrder => "(D^2 u, v) = (D u, D v) = (u, D^2 v)",
            FormPositivity => "(D u, u) >= 0",
        }
    }

    fn kind(&self) -> CheckKind {
        use CheckName::*;
        match self {
            ProductRule | ExpansionIdentity | GreenFirstOrder | GreenSecondOrder => {
                CheckKind::Identity
            }
            FormPositivity => CheckKind::Positivity,
            _ => CheckKind::Inequality,
        }
    }
}

/// Worst case observed for a check: the amplitude and where it happened.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Witness {
    pub family: String,
    pub n: u32,
    pub trial: u64,
    pub value: f64,
    pub support: BTreeMap<String, [f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub statement: String,
    pub kind: CheckKind,
    pub trials: u64,
    /// Max relative residual (identities), max ratio LHS/RHS (inequalities),
    /// or max positivity defect -Re(Du,u)/|u|^2.
    pub metric: f64,
    pub threshold: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst: Option<Witness>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<RunManifest>,
    pub seed: u64,
    pub tolerance: f64,
    pub families: Vec<String>,
    pub checks: Vec<CheckResult>,
    pub all_passed: bool,
}

/// The example families the acceptance regime runs against; the radial tree
/// is budget-capped and the harness clamps its usable cut-off indices.
pub fn default_families(budget: u64) -> Vec<GraphFamily> {
    use crate::family::FamilySpec::*;
    vec![
        GraphFamily::build_example(&HalfLineUnit)
            .unwrap()
            .with_budget(budget),
        GraphFamily::build_example(&HalfLineSqrt)
            .unwrap()
            .with_budget(budget),
        GraphFamily::build_example(&RadialTree {
            kappa: 0.5,
            alpha: Some(0.5),
        })
        .unwrap()
        .with_budget(budget),
    ]
}

struct Acc {
    name: CheckName,
    trials: u64,
    metric: f64,
    threshold: f64,
    worst: Option<Witness>,
}

impl Acc {
    fn new(name: CheckName, threshold: f64) -> Self {
        Self {
            name,
            trials: 0,
            metric: 0.0,
            threshold,
            worst: None,
        }
    }

    fn record(
        &mut self,
        value: f64,
        family: &str,
        n: u32,
        trial: u64,
        u: Option<(&Amplitudes, &MagneticGraph)>,
    ) {
        self.trials += 1;
        if value > self.metric || self.worst.is_none() {
            self.metric = self.metric.max(value);
            let support = u
                .map(|(u, g)| {
                    u.iter()
                        .map(|(i, v)| (g.id(i).to_owned(), [v.re, v.im]))
                        .collect()
                })
                .unwrap_or_default();
            self.worst = Some(Witness {
                family: family.to_owned(),
                n,
                trial,
                value,
                support,
            });
        }
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            name: self.name.as_str().to_owned(),
            statement: self.name.statement().to_owned(),
            kind: self.name.kind(),
            trials: self.trials,
            metric: self.metric,
            threshold: self.threshold,
            pass: self.metric <= self.threshold,
            worst: self.worst,
        }
    }
}

/// Per-family state: generated balls and growth data, cached across trials.
struct FamilyCtx {
    family: GraphFamily,
    graphs: BTreeMap<u32, Rc<MagneticGraph>>,
    betas: BTreeMap<u32, f64>,
}

impl FamilyCtx {
    fn new(family: GraphFamily) -> Self {
        Self {
            family,
            graphs: BTreeMap::new(),
            betas: BTreeMap::new(),
        }
    }

    fn graph(&mut self, horizon: u32) -> Result<Rc<MagneticGraph>, FamilyError> {
        if let Some(g) = self.graphs.get(&horizon) {
            return Ok(g.clone());
        }
        let g = Rc::new(self.family.generate(horizon)?);
        self.graphs.insert(horizon, g.clone());
        Ok(g)
    }

    /// Cut-off indices from the requested range that fit the budget: a trial
    /// at index n needs horizon 2n+3 (ramp-straddling support, two margin
    /// layers, growth stats at 2n).
    fn usable_ns(&self, range: &[u32]) -> Vec<u32> {
        let h = self.family.feasible_horizon();
        range
            .iter()
            .copied()
            .filter(|&n| n >= 1 && 2 * n + 3 <= h)
            .collect()
    }

    fn ensure_betas(&mut self, ns: &[u32]) -> Result<(), FamilyError> {
        let max_n = match ns.iter().max() {
            Some(&m) => m,
            None => return Ok(()),
        };
        if self.betas.contains_key(&max_n) {
            return Ok(());
        }
        for row in growth_table(&self.family, max_n)? {
            self.betas.insert(row.n, row.beta_n);
        }
        Ok(())
    }

    fn beta(&self, n: u32) -> f64 {
        self.betas[&n]
    }
}

fn mix(seed: u64, parts: &[u64]) -> u64 {
    // SplitMix64 chain; stable across platforms and runs.
    let mut z = seed;
    for &p in parts {
        z = z.wrapping_add(0x9e3779b97f4a7c15).wrapping_add(p);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^= z >> 31;
    }
    z
}

fn check_tag(name: CheckName) -> u64 {
    name.as_str().bytes().fold(0xcbf29ce484222325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x100000001b3)
    })
}

fn trial_rng(
    cfg: &TrialConfig,
    name: CheckName,
    family_idx: u64,
    n: u32,
    trial: u64,
) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(
        cfg.seed,
        &[check_tag(name), family_idx, n as u64, trial],
    ))
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(-1.0..=1.0)
}

/// Sample a finitely supported complex amplitude inside B(x0, rmax), with
/// independent components uniform in [-1, 1]. The adversarial annulus
/// restricts supports to the cut-off ramp.
fn sample_amplitudes(
    g: &MagneticGraph,
    rmax: u32,
    max_support: usize,
    annulus: Option<(u32, u32)>,
    rng: &mut ChaCha8Rng,
) -> Amplitudes {
    let mut pool: Vec<usize> = (0..g.len())
        .filter(|&i| {
            let r = g.radius_of(i);
            match annulus {
                Some((lo, hi)) => r >= lo && r <= hi && r <= rmax,
                None => r <= rmax,
            }
        })
        .collect();
    if pool.is_empty() {
        pool = (0..g.len()).filter(|&i| g.radius_of(i) <= rmax).collect();
    }
    let k = rng.random_range(1..=max_support.min(pool.len()));
    // Partial Fisher-Yates for k distinct vertices.
    let len = pool.len();
    for j in 0..k {
        let pick = rng.random_range(j..len);
        pool.swap(j, pick);
    }
    Amplitudes::from_pairs(
        pool[..k]
            .iter()
            .map(|&i| (i, Complex64::new(uniform(rng), uniform(rng)))),
    )
}

fn sample_real(
    g: &MagneticGraph,
    rmax: u32,
    max_support: usize,
    rng: &mut ChaCha8Rng,
) -> RealAmplitudes {
    let mut pool: Vec<usize> = (0..g.len()).filter(|&i| g.radius_of(i) <= rmax).collect();
    let k = rng.random_range(1..=max_support.min(pool.len()));
    let len = pool.len();
    for j in 0..k {
        let pick = rng.random_range(j..len);
        pool.swap(j, pick);
    }
    RealAmplitudes::from_pairs(pool[..k].iter().map(|&i| (i, uniform(rng))))
}

fn squared(psi: &RealAmplitudes) -> RealAmplitudes {
    RealAmplitudes::from_pairs(psi.iter().map(|(i, v)| (i, v * v)))
}

/// u * (L psi) evaluated on the support of u only.
fn mul_plain_laplacian(
    g: &MagneticGraph,
    u: &Amplitudes,
    psi: &RealAmplitudes,
) -> Result<Amplitudes, OperatorError> {
    let lpsi = plain_laplacian_at(g, psi, u.support())?;
    Ok(u.mul_real(&lpsi))
}

fn rel_residual(diff: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

const EPS_GRID: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

/// Run the selected checks over the given families; equal inputs produce a
/// byte-identical report.
pub fn run_suite(
    cfg: &TrialConfig,
    families: &[GraphFamily],
    suite: &[CheckName],
) -> Result<LabReport, LabError> {
    let mut ctxs: Vec<FamilyCtx> = families
        .iter()
        .map(|f| FamilyCtx::new(f.clone().with_budget(cfg.vertex_budget)))
        .collect();
    let mut checks = Vec::new();
    for &name in suite {
        checks.push(run_check(cfg, &mut ctxs, name)?.finish());
    }
    let all_passed = checks.iter().all(|c| c.pass);
    Ok(LabReport {
        manifest: None,
        seed: cfg.seed,
        tolerance: cfg.tolerance,
        families: families.iter().map(|f| f.name().to_owned()).collect(),
        checks,
        all_passed,
    })
}

fn run_check(cfg: &TrialConfig, ctxs: &mut [FamilyCtx], name: CheckName) -> Result<Acc, LabError> {
    use CheckName::*;
    let tol_identity = cfg.tolerance;
    let tol_ratio = 1.0 + cfg.tolerance;
    match name {
        ProductRule => {
            let mut acc = Acc::new(name, tol_identity);
            for_each_trial(cfg, ctxs, name, |ctx, fi, n, t| {
                let rmax = cfg.support_radius.unwrap_or(2 * n + 1);
                let g = ctx.graph((rmax + 2).max(2 * n))?;
                let mut rng = trial_rng(cfg, name, fi, n, t);
                let u = sample_amplitudes(&g, rmax, cfg.max_support, None, &mut rng);
                let psi = if t % 2 == 0 {
                    chi_as_amplitudes(&g, n)?
                } else {
                    sample_real(&g, rmax, cfg.max_support, &mut rng)
                };
                let lhs = apply_laplacian(&g, &u.mul_real(&psi))?;
                let t1 = apply_laplacian(&g, &u)?.mul_real(&psi);
                let t2 = apply_p(&g, &psi, &u)?;
                let t3 = mul_plain_laplacian(&g, &u, &psi)?;
                let rhs = t1.sub(&t2).add_scaled(Complex64::new(1.0, 0.0), &t3);
                let scale = lhs
                    .sup_norm()
                    .max(t1.sup_norm())
                    .max(t2.sup_norm())
                    .max(t3.sup_norm());
                let res = rel_residual(lhs.sub(&rhs).sup_norm(), scale);
                acc.record(res, ctx.family.name(), n, t, Some((&u, g.as_ref())));
                Ok(())
            })?;
            Ok(acc)
        }
        ExpansionIdentity => {
            let mut acc = Acc::new(name, tol_identity);
            for_each_trial(cfg, ctxs, name, |ctx, fi, n, t| {
                let rmax = cfg.support_radius.unwrap_or(2 * n + 1);
                let g = ctx.graph((rmax + 2).max(2 * n))?;
                let mut rng = trial_rng(cfg, name, fi, n, t);
                let u = sample_amplitudes(&g, rmax, cfg.max_support, None, &mut rng);
                let chi = chi_as_amplitudes(&g, n)?;
                let du = apply_laplacian(&g, &u)?;
                let chi_du = du.mul_real(&chi);
                let p = apply_p(&g, &chi, &u)?;
                let u_lchi = mul_plain_laplacian(&g, &u, &chi)?;
                let d_chiu = apply_laplacian(&g, &u.mul_real(&chi))?;
                let lhs = norm_sq(&g, &chi_du);
                let terms = [
                    norm_sq(&g, &d_chiu),
                    2.0 * inner(&g, &chi_du, &p).re,
                    -2.0 * inner(&g, &chi_du, &u_lchi).re,
                    2.0 * inner(&g, &p, &u_lchi).re,
                    -norm_sq(&g, &p),
                    -norm_sq(&g, &u_lchi),
                ];
                let rhs: f64 = terms.iter().sum();
                let scale = terms.iter().map(|v| v.abs()).fold(lhs.abs(), f64::max);
                let res = rel_residual((lhs - rhs).abs(), scale);
                acc.record(res, ctx.family.name(), n, t, Some((&u, g.as_ref())));
                Ok(())
            })?;
            Ok(acc)
        }
        CutoffPBound | CutoffMultiplierBound => {
            let mut acc = Acc::new(name, tol_ratio);
            for_each_trial_with_beta(cfg, ctxs, name, |ctx, fi, n, t| {
                let rmax = cfg.support_radius.unwrap_or(2 * n + 1);
                let g = ctx.graph((2 * n + 1).max(rmax + 2))?;
                let mut rng = trial_rng(cfg, name, fi, n, t);
                let annulus = if t % 4 == 3 {
                    Some((n + 1, (2 * n).saturating_sub(1).max(n + 1)))
                } else {
                    None
                };
                let u = sample_amplitudes(&g, rmax, cfg.max_support, annulus, &mut rng);
                let chi = chi_as_amplitudes(&g, n)?;
                let beta = ctx.beta(n);
                let nu = norm(&g, &u);
                let value = if nu == 0.0 {
                    0.0
                } else if name == CheckName::CutoffPBound {
                    let p = apply_p(&g, &chi, &u)?;
                    ratio(norm(&g, &p), 2.0 * beta * nu)
                } else {
                    let u_lchi = mul_plain_laplacian(&g, &u, &chi)?;
                    ratio(norm(&g, &u_lchi), beta * nu)
                };
                acc.record(value, ctx.family.name(), n, t, Some((&u, g.as_ref())));
                Ok(())
            })?;
            Ok(acc)
        }
        LocalizationBound | LocalizationHalfEpsilon => {
            let mut acc = Acc::new(name, tol_ratio);
            for_each_trial_with_beta(cfg, ctxs, name, |ctx, fi, n, t| {
                let rmax = cfg.support_radius.unwrap_or(2 * n + 1);
                let g = ctx.graph((2 * n + 1).max(rmax + 2))?;
                let mut rng = trial_rng(cfg, name, fi, n, t);
                let annulus = if t % 4 == 3 {
                    Some((n + 1, (2 * n).saturating_sub(1).max(n + 1)))
                } else {
                    None
                };
                let u = sample_amplitudes(&g, rmax, cfg.max_support, annulus, &mut rng);
                let chi = chi_as_amplitudes(&g, n)?;
                let beta = ctx.beta(n);
                let du = apply_laplacian(&g, &u)?;
                let lhs = norm_sq(&g, &du.mul_real(&chi));
                let d_chiu_sq = norm_sq(&g, &apply_laplacian(&g, &u.mul_real(&chi))?);
                let uu = norm_sq(&g, &u);
                let value = if uu == 0.0 {
                    0.0
                } else if name == CheckName::LocalizationHalfEpsilon {
                    // The eps = 1/2 instance with its literal constants.
                    ratio(lhs, 2.0 * d_chiu_sq + 44.0 * beta * beta * uu)
                } else {
                    EPS_GRID
                        .iter()
                        .map(|&eps| {
                            let rhs = d_chiu_sq / (1.0 - eps)
                                + (9.0 + 4.0 * eps) / ((1.0 - eps) * eps) * beta * beta * uu;
                            ratio(lhs, rhs)
                        })
                        .fold(0.0, f64::max)
                };
                acc.record(value, ctx.family.name(), n, t, Some((&u, g.as_ref())));
                Ok(())
            })?;
            Ok(acc)
        }
        PairingPSquaredBound | PairingMultiplierSquaredBound => {
            let mut acc = Acc::new(name, tol_ratio);
            for_each_trial_with_beta(cfg, ctxs, name, |ctx, fi, n, t| {
                let rmax = cfg.support_radius.unwrap_or(2 * n + 1);
                let g = ctx.graph((2 * n + 1).max(rmax + 2))?;
                let mut rng = trial_rng(cfg, name, fi, n, t);
                let annulus = if t % 4 == 3 {
                    Some((n + 1, (2 * n).saturating_sub(1).max(n + 1)))
                } else {
                    None
                };
                let u = sample_amplitudes(&g, rmax, cfg.max_support, annulus, &mut rng);
                let chi = chi_as_amplitudes(&g, n)?;
                let chi_sq = squared(&chi);
                let beta = ctx.beta(n);
                let du = apply_laplacian(&g, &u)?;
                let rhs_core = norm(&g, &du.mul_real(&chi)) * norm(&g, &u);
                let value = if rhs_core == 0.0 {
                    0.0
                } else if name == CheckName::PairingPSquaredBound {
                    let p2 = apply_p(&g, &chi_sq, &u)?;
                    ratio(inner(&g, &du, &p2).norm(), 6.0 * beta * rhs_core)
                } else {
                    let u_lchi2 = mul_plain_laplacian(&g, &u, &chi_sq)?;
                    ratio(inner(&g, &du, &u_lchi2).norm(), 3.0 * beta * rhs_core)
                };
                acc.record(value, ctx.family.name(), n, t, Some((&u, g.as_ref())));
                Ok(())
            })?;
            Ok(acc)
        }
        RadialQBound => {
            let mut acc = Acc::new(name, tol_ratio);
            let certs: Vec<(QFunction, QCertificate)> = vec![
                QFunction::affine(),
                QFunction::sqrt_affine(),
                QFunction::constant(3.0),
            ];
            for_each_trial(cfg, ctxs, name, |ctx, fi, n, t| {
                let rmax = cfg.support_radius.unwrap_or(2 * n + 1);
                let g = ctx.graph((rmax + 2).max(2 * n))?;
                let mut rng = trial_rng(cfg, name, fi, n, t);
                let u = sample_amplitudes(&g, rmax, cfg.max_support, None, &mut rng);
                let chi = chi_as_amplitudes(&g, n)?;
                let chi_u = u.mul_real(&chi);
                let uu = norm_sq(&g, &u);
                let mut value: f64 = 0.0;
                for (q, cert) in &certs {
                    // ((q o r) chi u, chi u), summed over the product support.
                    let lhs: f64 = chi_u
                        .iter()
                        .map(|(i, v)| g.mu(i) * q.eval(g.radius_of(i) as f64) * v.norm_sqr())
                        .sum();
                    let mid = q.eval(2.0 * n as f64) * uu;
                    if uu > 0.0 {
                        value = value.max(ratio(lhs, mid));
                        // Certificate side for n past the onset s0/2.
                        if n as f64 >= cert.s0 / 2.0 {
                            let k3 = cert.c_q * 2f64.powf(cert.alpha);
                            let rhs = k3 * (n as f64).powf(cert.alpha) * uu;
                            value = value.max(ratio(mid, rhs));
                        }
                    }
                }
                acc.record(value, ctx.family.name(), n, t, Some((&u, g.as_ref())));
                Ok(())
            })?;
            Ok(acc)
        }
        ScalarSumSquare => {
            let mut acc = Acc::new(name, tol_ratio);
            for t in 0..cfg.trials {
                let mut rng = trial_rng(cfg, name, 0, 0, t);
                let len = rng.random_range(1..=8usize);
                let mut a: Vec<f64> = (0..len).map(|_| uniform(&mut rng)).collect();
                if t % 5 == 4 {
                    // Equality case: all entries equal.
                    let v = a[0];
                    a.iter_mut().for_each(|x| *x = v);
                }
                let sum: f64 = a.iter().sum();
                let sum_sq: f64 = a.iter().map(|x| x * x).sum();
                let value = ratio(sum * sum, len as f64 * sum_sq);
                acc.record(value, "scalars", 0, t, None);
            }
            Ok(acc)
        }
        YoungInequality => {
            let mut acc = Acc::new(name, tol_ratio);
            for t in 0..cfg.trials {
                let mut rng = trial_rng(cfg, name, 0, 0, t);
                let eps = rng.random_range(0.01..0.99);
                let a = uniform(&mut rng);
                let b = if t % 5 == 4 {
                    2.0 * eps * a
                } else {
                    uniform(&mut rng)
                };
                let lhs = a * b;
                let rhs = eps * a * a + b * b / (4.0 * eps);
                let value = if lhs <= 0.0 { 0.0 } else { ratio(lhs, rhs) };
                acc.record(value, "scalars", 0, t, None);
            }
            Ok(acc)
        }
        GreenFirstOrder => {
            let mut acc = Acc::new(name, tol_identity);
            for_each_trial_fixed_radius(cfg, ctxs, name, 6, |ctx, g, fi, t| {
                let mut rng = trial_rng(cfg, name, fi, 0, t);
                let u = sample_amplitudes(g, 6, cfg.max_support, None, &mut rng);
                let v = sample_amplitudes(g, 6, cfg.max_support, None, &mut rng);
                let du = apply_laplacian(g, &u)?;
                let dv = apply_laplacian(g, &v)?;
                let a = inner(g, &du, &v);
                let b = inner(g, &u, &dv);
                let scale = (norm(g, &du) * norm(g, &v)).max(norm(g, &u) * norm(g, &dv));
                let res = rel_residual((a - b).norm(), scale);
                acc.record(res, ctx.family.name(), 0, t, Some((&u, g)));
                Ok(())
            })?;
            Ok(acc)
        }
        GreenSecondOrder => {
            let mut acc = Acc::new(name, tol_identity);
            for_each_trial_fixed_radius(cfg, ctxs, name, 6, |ctx, g, fi, t| {
                let mut rng = trial_rng(cfg, name, fi, 0, t);
                let u = sample_amplitudes(g, 6, cfg.max_support, None, &mut rng);
                let v = sample_amplitudes(g, 6, cfg.max_support, None, &mut rng);
                let du = apply_laplacian(g, &u)?;
                let dv = apply_laplacian(g, &v)?;
                let ddu = apply_laplacian(g, &du)?;
                let ddv = apply_laplacian(g, &dv)?;
                let a = inner(g, &ddu, &v);
                let b = inner(g, &du, &dv);
                let c = inner(g, &u, &ddv);
                let scale = (norm(g, &ddu) * norm(g, &v))
                    .max(norm(g, &du) * norm(g, &dv))
                    .max(norm(g, &u) * norm(g, &ddv));
                let res = rel_residual((a - b).norm().max((b - c).norm()), scale);
                acc.record(res, ctx.family.name(), 0, t, Some((&u, g)));
                Ok(())
            })?;
            Ok(acc)
        }
        FormPositivity => {
            let mut acc = Acc::new(name, 1e-12);
            for_each_trial_fixed_radius(cfg, ctxs, name, 6, |ctx, g, fi, t| {
                let mut rng = trial_rng(cfg, name, fi, 0, t);
                let u = sample_amplitudes(g, 6, cfg.max_support, None, &mut rng);
                let du = apply_laplacian(g, &u)?;
                let form = inner(g, &du, &u);
                let uu = norm_sq(g, &u);
                let defect = if uu == 0.0 {
                    0.0
                } else {
                    (-form.re / uu).max(0.0)
                };
                acc.record(defect, ctx.family.name(), 0, t, Some((&u, g)));
                Ok(())
            })?;
            Ok(acc)
        }
    }
}

fn for_each_trial(
    cfg: &TrialConfig,
    ctxs: &mut [FamilyCtx],
    name: CheckName,
    mut body: impl FnMut(&mut FamilyCtx, u64, u32, u64) -> Result<(), LabError>,
) -> Result<(), LabError> {
    let _ = name;
    for (fi, ctx) in ctxs.iter_mut().enumerate() {
        let ns = ctx.usable_ns(&cfg.n_range);
        if ns.is_empty() {
            continue;
        }
        for t in 0..cfg.trials {
            let n = ns[(t % ns.len() as u64) as usize];
            body(ctx, fi as u64, n, t)?;
        }
    }
    Ok(())
}

fn for_each_trial_with_beta(
    cfg: &TrialConfig,
    ctxs: &mut [FamilyCtx],
    name: CheckName,
    mut body: impl FnMut(&mut FamilyCtx, u64, u32, u64) -> Result<(), LabError>,
) -> Result<(), LabError> {
    let _ = name;
    for (fi, ctx) in ctxs.iter_mut().enumerate() {
        let ns = ctx.usable_ns(&cfg.n_range);
        if ns.is_empty() {
            continue;
        }
        ctx.ensure_betas(&ns)?;
        for t in 0..cfg.trials {
            let n = ns[(t % ns.len() as u64) as usize];
            body(ctx, fi as u64, n, t)?;
        }
    }
    Ok(())
}

fn for_each_trial_fixed_radius(
    cfg: &TrialConfig,
    ctxs: &mut [FamilyCtx],
    name: CheckName,
    radius: u32,
    mut body: impl FnMut(&FamilyCtx, &MagneticGraph, u64, u64) -> Result<(), LabError>,
) -> Result<(), LabError> {
    let _ = name;
    for (fi, ctx) in ctxs.iter_mut().enumerate() {
        // Margin for a double application on supports inside B(radius).
        let horizon = (radius + 3).min(ctx.family.feasible_horizon());
        if horizon < radius + 3 {
            continue;
        }
        let g = ctx.graph(horizon)?;
        for t in 0..cfg.trials {
            body(ctx, &g, fi as u64, t)?;
        }
    }
    Ok(())
}
