//! Numerical probes for deficiency indices: does (H -+ i nu) have square
//! summable kernel elements?
//!
//! Two desk-scale diagnostics, neither of which proves anything:
//! - recurrence shooting on banded half-line families, classifying the
//!   growth of every solution of the vertex equations;
//! - a Glazman-style truncation diagnostic, tracking the smallest singular
//!   value of the exact interior-rows operator across growing horizons.
//!
//! A square summable kernel element restricted to a ball satisfies every
//! retained interior row exactly, so shooting growth classes carry the
//! usable signal; the sigma_min sequence is reported raw.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::ProbeError;
use crate::family::GraphFamily;
use crate::manifest::RunManifest;
use crate::operator::{assemble_truncation, Boundary};
use crate::potential::Potential;
use crate::svd::min_singular_value;

pub const PROBE_CAVEAT: &str =
    "heuristic numerical evidence, not a proof: conclusions describe observed \
     finite-horizon behavior only";

/// Which kernel to probe: (H - i nu) for Plus, (H + i nu) for Minus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn lambda(&self, nu: f64) -> Complex64 {
        match self {
            Sign::Plus => Complex64::new(0.0, nu),
            Sign::Minus => Complex64::new(0.0, -nu),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthClass {
    Divergent,
    Undetermined,
    SquareSummableCandidate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionLabel {
    Basis0,
    Basis1,
    MinimalGrowth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conclusion {
    ConsistentWithDeltaZero,
    DefectSuspected,
    Inconclusive,
}

/// Tunable thresholds; the defaults are deliberately crude and deterministic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeThresholds {
    /// Divergent when partial norms grow by this factor over the last
    /// quarter of the horizon.
    pub divergence_factor: f64,
    /// Square-summable candidate when tail increments decay geometrically
    /// at this ratio or better.
    pub decay_ratio: f64,
    /// Global rescale trigger for the shooting recurrence.
    pub rescale_threshold: f64,
    /// Re-orthogonalization cadence for the minimal-growth run.
    pub reorth_every: u32,
    /// Dense SVD column cap.
    pub svd_cap: usize,
    /// Defect suspected when sigma_min decays by this ratio across three
    /// successive horizons.
    pub sigma_decay_threshold: f64,
    /// Bounded-below verdict when min sigma >= fraction * max sigma.
    pub sigma_floor_fraction: f64,
}

impl Default for ProbeThresholds {
    fn default() -> Self {
        Self {
            divergence_factor: 10.0,
            decay_ratio: 0.99,
            rescale_threshold: 1e100,
            reorth_every: 20,
            svd_cap: 4000,
            sigma_decay_threshold: 0.7,
            sigma_floor_fraction: 0.5,
        }
    }
}

/// One solution of the vertex equations (H u)(k) = lambda u(k) on a
/// half-line, stored in a rescaled frame: true u(k) = values[k] e^{log_scale}.
#[derive(Debug, Clone)]
pub struct ShootingSolution {
    pub nu: f64,
    pub sign: Sign,
    pub label: SolutionLabel,
    pub values: Vec<Complex64>,
    pub log_scale: f64,
    pub partial_norms: Vec<f64>,
    pub growth_class: GrowthClass,
    pub max_residual_rel: f64,
}

/// Per-solution summary embedded in reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShootingDiagnostic {
    pub label: SolutionLabel,
    pub growth_class: GrowthClass,
    pub log_scale: f64,
    pub max_residual_rel: f64,
    /// Partial-norm growth over the last quarter of the horizon.
    pub tail_growth: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HorizonDiagnostic {
    pub horizon: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solutions: Option<Vec<ShootingDiagnostic>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<RunManifest>,
    pub method: String,
    pub family: String,
    pub nu: f64,
    pub sign: Sign,
    pub horizons: Vec<u32>,
    pub diagnostics: Vec<HorizonDiagnostic>,
    pub conclusion: Conclusion,
    pub caveat: String,
}

/// The half-line data the recurrence runs on.
struct Band {
    mu: Vec<f64>,
    b: Vec<f64>,
    phase: Vec<Complex64>,
    w: Vec<f64>,
}

impl Band {
    /// Laplacian row at k: (coefficient of u(k-1), u(k), u(k+1)).
    fn lap_row(&self, k: usize) -> (Complex64, Complex64, Complex64) {
        let bm = if k == 0 { 0.0 } else { self.b[k - 1] };
        let bp = self.b[k];
        let m = self.mu[k];
        let lm = if k == 0 {
            Complex64::ZERO
        } else {
            -bm * self.phase[k - 1].conj() / m
        };
        (
            lm,
            Complex64::new((bm + bp) / m, 0.0),
            -bp * self.phase[k] / m,
        )
    }

    /// Row k of H on the five points k-2..k+2 (composition of two Laplacian
    /// rows plus the diagonal potential term).
    fn h_row(&self, k: usize) -> [Complex64; 5] {
        let (lkm, lk0, lkp) = self.lap_row(k);
        let mut row = [Complex64::ZERO; 5];
        if k >= 1 {
            let (lm_m, lm_0, lm_p) = self.lap_row(k - 1);
            // through m = k-1
            if k >= 2 {
                row[0] += lkm * lm_m;
            }
            row[1] += lkm * lm_0;
            row[2] += lkm * lm_p;
        }
        // through m = k
        row[1] += lk0 * lkm;
        row[2] += lk0 * lk0;
        row[3] += lk0 * lkp;
        // through m = k+1
        let (lp_m, lp_0, lp_p) = self.lap_row(k + 1);
        row[2] += lkp * lp_m;
        row[3] += lkp * lp_0;
        row[4] += lkp * lp_p;
        row[2] += Complex64::new(self.w[k], 0.0);
        row
    }
}

fn extract_band(family: &GraphFamily, w: &Potential, horizon: u32) -> Result<Band, ProbeError> {
    let g = family.generate(horizon)?;
    let len = horizon as usize + 1;
    if g.len() != len {
        return Err(ProbeError::NotHalfLine(format!(
            "{} vertices in a ball of radius {horizon}",
            g.len()
        )));
    }
    let mut mu = vec![0.0; len];
    let mut b = vec![0.0; len]; // b[k] joins k and k+1; last entry unused
    let mut phase = vec![Complex64::new(1.0, 0.0); len];
    let mut wv = vec![0.0; len];
    for k in 0..len {
        let idx = g
            .index_of(&k.to_string())
            .ok_or_else(|| ProbeError::NotHalfLine(format!("missing vertex {k}")))?;
        if g.radius_of(idx) != k as u32 {
            return Err(ProbeError::NotHalfLine(k.to_string()));
        }
        let expected = if k == 0 || k == len - 1 { 1 } else { 2 };
        if g.degree(idx) != expected {
            return Err(ProbeError::NotHalfLine(g.id(idx).to_owned()));
        }
        mu[k] = g.mu(idx);
        wv[k] = w.value(&g, idx)?;
        for h in g.neighbors(idx) {
            let to_r = g.radius_of(h.to);
            if to_r != k as u32 + 1 && (k == 0 || to_r != k as u32 - 1) {
                return Err(ProbeError::NotHalfLine(g.id(idx).to_owned()));
            }
            if to_r == k as u32 + 1 {
                b[k] = h.b;
                phase[k] = h.phase;
            }
        }
    }
    Ok(Band {
        mu,
        b,
        phase,
        w: wv,
    })
}

struct Trajectory {
    values: Vec<Complex64>,
    log_scale: f64,
}

impl Trajectory {
    fn new(u0: Complex64, u1: Complex64, len: usize) -> Self {
        let mut values = vec![Complex64::ZERO; len];
        values[0] = u0;
        values[1] = u1;
        Self {
            values,
            log_scale: 0.0,
        }
    }

    fn rescale_all(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
        self.log_scale -= factor.ln();
    }

    fn max_abs(&self, upto: usize) -> f64 {
        self.values[..=upto]
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }
}

/// Advance one trajectory through the equation at k, producing u(k+2).
fn step(traj: &mut Trajectory, band: &Band, lambda: Complex64, k: usize) {
    let row = band.h_row(k);
    let mut acc = lambda * traj.values[k];
    for (off, coeff) in row.iter().enumerate().take(4) {
        let j = k as i64 + off as i64 - 2;
        if j >= 0 {
            acc -= coeff * traj.values[j as usize];
        }
    }
    traj.values[k + 2] = acc / row[4];
}

fn window_inner(a: &Trajectory, b: &Trajectory, end: usize) -> Complex64 {
    let lo = end.saturating_sub(3);
    (lo..=end).map(|i| a.values[i] * b.values[i].conj()).sum()
}

/// Forward-solve from one pair of initial data. Returns the raw trajectory
/// with overflow rescaling only (no final normalization).
fn evolve_single(
    band: &Band,
    lambda: Complex64,
    init: (Complex64, Complex64),
    horizon: usize,
    thresholds: &ProbeThresholds,
) -> Trajectory {
    let mut traj = Trajectory::new(init.0, init.1, horizon + 1);
    for k in 0..=horizon - 2 {
        step(&mut traj, band, lambda, k);
        let recent = traj.values[k + 2].norm().max(traj.values[k + 1].norm());
        if recent > thresholds.rescale_threshold {
            let m = traj.max_abs(k + 2);
            traj.rescale_all(1.0 / m);
        }
    }
    traj
}

/// Evolve the basis pair together, periodically purging the second
/// trajectory of the dominant direction; its end state is the least-growing
/// combination the re-orthogonalization can isolate.
fn evolve_minimal(
    band: &Band,
    lambda: Complex64,
    horizon: usize,
    thresholds: &ProbeThresholds,
) -> Trajectory {
    let one = Complex64::new(1.0, 0.0);
    let mut s1 = Trajectory::new(one, Complex64::ZERO, horizon + 1);
    let mut s2 = Trajectory::new(Complex64::ZERO, one, horizon + 1);
    for k in 0..=horizon - 2 {
        step(&mut s1, band, lambda, k);
        step(&mut s2, band, lambda, k);
        let end = k + 2;
        let recent = s1.values[end].norm().max(s2.values[end].norm());
        if recent > thresholds.rescale_threshold {
            // Shared scale keeps the pair combinable.
            let m = s1.max_abs(end).max(s2.max_abs(end));
            s1.rescale_all(1.0 / m);
            s2.rescale_all(1.0 / m);
            s2.log_scale = s1.log_scale;
        }
        if end % thresholds.reorth_every as usize == 0 {
            let n1 = window_inner(&s1, &s1, end).re;
            let n2 = window_inner(&s2, &s2, end).re;
            if n2 > n1 {
                std::mem::swap(&mut s1, &mut s2);
            }
            let n1 = window_inner(&s1, &s1, end).re;
            if n1 > 0.0 {
                let c = window_inner(&s2, &s1, end) / n1;
                for i in 0..=end {
                    let v = s1.values[i];
                    s2.values[i] -= c * v;
                }
            }
        }
    }
    s2
}

fn finish_solution(
    mut traj: Trajectory,
    band: &Band,
    lambda: Complex64,
    nu: f64,
    sign: Sign,
    label: SolutionLabel,
    thresholds: &ProbeThresholds,
) -> ShootingSolution {
    let horizon = traj.values.len() - 1;
    // Normalize the stored frame to max 1 for readable output.
    let m = traj.max_abs(horizon);
    if m > 0.0 {
        traj.rescale_all(1.0 / m);
    }

    let mut partial_norms = Vec::with_capacity(horizon + 1);
    let mut acc = 0.0;
    for k in 0..=horizon {
        acc += band.mu[k] * traj.values[k].norm_sqr();
        partial_norms.push(acc);
    }

    // The construction enforces each equation; re-evaluate them all as an
    // independent residual check.
    let mut max_residual = 0.0f64;
    for k in 0..=horizon - 2 {
        let row = band.h_row(k);
        let mut r = -lambda * traj.values[k];
        for (off, coeff) in row.iter().enumerate() {
            let j = k as i64 + off as i64 - 2;
            if j >= 0 {
                r += coeff * traj.values[j as usize];
            }
        }
        max_residual = max_residual.max(r.norm());
    }

    let growth_class = classify_growth(&partial_norms, thresholds);
    ShootingSolution {
        nu,
        sign,
        label,
        values: traj.values,
        log_scale: traj.log_scale,
        partial_norms,
        growth_class,
        max_residual_rel: max_residual,
    }
}

fn classify_growth(partial_norms: &[f64], thresholds: &ProbeThresholds) -> GrowthClass {
    let len = partial_norms.len();
    let quarter_start = len - len / 4;
    let p_start = partial_norms[quarter_start - 1];
    let p_end = partial_norms[len - 1];
    if p_end > p_start * thresholds.divergence_factor || (p_start == 0.0 && p_end > 0.0) {
        return GrowthClass::Divergent;
    }
    // Geometric decay of the tail increments.
    let mut prev_inc: Option<f64> = None;
    let mut decaying = true;
    for k in quarter_start..len {
        let inc = partial_norms[k] - partial_norms[k - 1];
        if let Some(p) = prev_inc {
            if p == 0.0 {
                if inc > 0.0 {
                    decaying = false;
                    break;
                }
            } else if inc / p > thresholds.decay_ratio {
                decaying = false;
                break;
            }
        }
        prev_inc = Some(inc);
    }
    if decaying {
        GrowthClass::SquareSummableCandidate
    } else {
        GrowthClass::Undetermined
    }
}

/// Shoot from both free initial data and the re-orthogonalized minimal
/// combination; the solution space of the vertex equations on a half-line is
/// exactly two-dimensional (the equations at k = 0, 1 already determine
/// u(2) and u(3)).
pub fn shoot(
    family: &GraphFamily,
    w: &Potential,
    nu: f64,
    sign: Sign,
    horizon: u32,
    thresholds: &ProbeThresholds,
) -> Result<Vec<ShootingSolution>, ProbeError> {
    if nu == 0.0 {
        return Err(ProbeError::ZeroNu);
    }
    if horizon < 10 {
        return Err(ProbeError::HorizonTooSmall(horizon, 10));
    }
    let band = extract_band(family, w, horizon)?;
    let lambda = sign.lambda(nu);
    let h = horizon as usize;
    let one = Complex64::new(1.0, 0.0);
    let e0 = evolve_single(&band, lambda, (one, Complex64::ZERO), h, thresholds);
    let e1 = evolve_single(&band, lambda, (Complex64::ZERO, one), h, thresholds);
    let minimal = evolve_minimal(&band, lambda, h, thresholds);
    Ok(vec![
        finish_solution(
            e0,
            &band,
            lambda,
            nu,
            sign,
            SolutionLabel::Basis0,
            thresholds,
        ),
        finish_solution(
            e1,
            &band,
            lambda,
            nu,
            sign,
            SolutionLabel::Basis1,
            thresholds,
        ),
        finish_solution(
            minimal,
            &band,
            lambda,
            nu,
            sign,
            SolutionLabel::MinimalGrowth,
            thresholds,
        ),
    ])
}

/// Raw trajectory from explicit initial data; for linearity diagnostics.
pub fn shoot_raw(
    family: &GraphFamily,
    w: &Potential,
    nu: f64,
    sign: Sign,
    horizon: u32,
    init: (Complex64, Complex64),
    thresholds: &ProbeThresholds,
) -> Result<(Vec<Complex64>, f64), ProbeError> {
    if nu == 0.0 {
        return Err(ProbeError::ZeroNu);
    }
    if horizon < 10 {
        return Err(ProbeError::HorizonTooSmall(horizon, 10));
    }
    let band = extract_band(family, w, horizon)?;
    let traj = evolve_single(&band, sign.lambda(nu), init, horizon as usize, thresholds);
    Ok((traj.values, traj.log_scale))
}

fn tail_growth(partial_norms: &[f64]) -> f64 {
    let len = partial_norms.len();
    let p_start = partial_norms[len - len / 4 - 1];
    let p_end = partial_norms[len - 1];
    if p_start == 0.0 {
        f64::INFINITY
    } else {
        p_end / p_start
    }
}

/// Shooting probe with report and conclusion.
pub fn shooting_report(
    family: &GraphFamily,
    w: &Potential,
    nu: f64,
    sign: Sign,
    horizon: u32,
    thresholds: &ProbeThresholds,
) -> Result<ProbeReport, ProbeError> {
    let solutions = shoot(family, w, nu, sign, horizon, thresholds)?;
    let diags: Vec<ShootingDiagnostic> = solutions
        .iter()
        .map(|s| ShootingDiagnostic {
            label: s.label,
            growth_class: s.growth_class,
            log_scale: s.log_scale,
            max_residual_rel: s.max_residual_rel,
            tail_growth: tail_growth(&s.partial_norms),
        })
        .collect();
    let conclusion = if solutions
        .iter()
        .any(|s| s.growth_class == GrowthClass::SquareSummableCandidate)
    {
        Conclusion::DefectSuspected
    } else if solutions
        .iter()
        .all(|s| s.growth_class == GrowthClass::Divergent)
    {
        Conclusion::ConsistentWithDeltaZero
    } else {
        Conclusion::Inconclusive
    };
    Ok(ProbeReport {
        manifest: None,
        method: "shooting".into(),
        family: family.name().to_owned(),
        nu,
        sign,
        horizons: vec![horizon],
        diagnostics: vec![HorizonDiagnostic {
            horizon,
            sigma_min: None,
            solutions: Some(diags),
        }],
        conclusion,
        caveat: PROBE_CAVEAT.into(),
    })
}

/// Rectangular least-residual diagnostic: sigma_min of the exact
/// interior-rows operator of (H - lambda) across growing horizons.
pub fn rectangular_residual(
    family: &GraphFamily,
    w: &Potential,
    nu: f64,
    sign: Sign,
    horizons: &[u32],
    thresholds: &ProbeThresholds,
) -> Result<ProbeReport, ProbeError> {
    if nu == 0.0 {
        return Err(ProbeError::ZeroNu);
    }
    if horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ProbeError::HorizonsNotIncreasing);
    }
    let lambda = sign.lambda(nu);
    let mut diagnostics = Vec::new();
    let mut sigmas = Vec::new();
    for &n in horizons {
        if n < 6 {
            return Err(ProbeError::HorizonTooSmall(n, 6));
        }
        let op = assemble_truncation(family, w, n, Boundary::InteriorRows)?;
        if op.ncols > thresholds.svd_cap {
            return Err(ProbeError::SvdDimensionCap {
                columns: op.ncols,
                cap: thresholds.svd_cap,
            });
        }
        let shifted = op.shifted_diagonal(lambda);
        let dense = shifted.to_dense();
        let sigma = min_singular_value(&dense, shifted.nrows, shifted.ncols);
        sigmas.push(sigma);
        diagnostics.push(HorizonDiagnostic {
            horizon: n,
            sigma_min: Some(sigma),
            solutions: None,
        });
    }

    // Decreasing toward zero across >= 3 successive horizons suggests a
    // defect; a sequence bounded below is consistent with delta = 0.
    let decays = sigmas
        .windows(2)
        .rev()
        .take_while(|w| w[1] <= w[0] * thresholds.sigma_decay_threshold)
        .count();
    let max = sigmas.iter().copied().fold(0.0, f64::max);
    let min = sigmas.iter().copied().fold(f64::INFINITY, f64::min);
    let conclusion = if decays >= 2 {
        Conclusion::DefectSuspected
    } else if min >= thresholds.sigma_floor_fraction * max && min > 0.0 {
        Conclusion::ConsistentWithDeltaZero
    } else {
        Conclusion::Inconclusive
    };
    Ok(ProbeReport {
        manifest: None,
        method: "rectangular_residual".into(),
        family: family.name().to_owned(),
        nu,
        sign,
        horizons: horizons.to_vec(),
        diagnostics,
        conclusion,
        caveat: PROBE_CAVEAT.into(),
    })
}

/// The deficiency indices do not depend on nu; re-run at several nu and
/// require agreeing conclusions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub nus: Vec<f64>,
    pub runs: Vec<ProbeReport>,
    pub agreed: bool,
    pub conclusion: Conclusion,
}

pub fn consistency_probe(
    family: &GraphFamily,
    w: &Potential,
    sign: Sign,
    shooting_horizon: u32,
    thresholds: &ProbeThresholds,
) -> Result<ConsistencyReport, ProbeError> {
    let nus = vec![0.5, 1.0, 2.0];
    let mut runs = Vec::new();
    for &nu in &nus {
        runs.push(shooting_report(
            family,
            w,
            nu,
            sign,
            shooting_horizon,
            thresholds,
        )?);
    }
    let first = runs[0].conclusion;
    let agreed = runs.iter().all(|r| r.conclusion == first);
    Ok(ConsistencyReport {
        nus,
        runs,
        agreed,
        conclusion: if agreed {
            first
        } else {
            Conclusion::Inconclusive
        },
    })
}

/// CSV of (k, |u(k)|, P_k) in the solution's rescaled frame.
pub fn shooting_csv(solution: &ShootingSolution) -> String {
    let mut out = String::from("k,abs_u,partial_norm\n");
    for (k, (v, p)) in solution
        .values
        .iter()
        .zip(&solution.partial_norms)
        .enumerate()
    {
        out.push_str(&format!("{k},{:e},{:e}\n", v.norm(), p));
    }
    out
}
