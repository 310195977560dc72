//! The formal operators acting on finitely supported amplitudes.
//!
//! All evaluation obeys the margin rule: an operator value is computed at a
//! vertex only when that vertex carries its full neighbor set in the supplied
//! graph. Callers that need values near the generation boundary must enlarge
//! the horizon; boundary values are never silently zero-filled.

use num_complex::Complex64;

use crate::amplitude::{Amplitudes, RealAmplitudes};
use crate::error::{OperatorError, ProbeError};
use crate::family::GraphFamily;
use crate::graph::MagneticGraph;
use crate::potential::Potential;

fn require_complete(g: &MagneticGraph, x: usize) -> Result<(), OperatorError> {
    if g.is_complete(x) {
        Ok(())
    } else {
        Err(OperatorError::MarginViolation(g.id(x).to_owned()))
    }
}

/// Support of u plus one neighbor layer, sorted and deduplicated.
fn support_with_layer(g: &MagneticGraph, u: &Amplitudes) -> Vec<usize> {
    let mut verts: Vec<usize> = u.support().collect();
    for x in u.support() {
        for h in g.neighbors(x) {
            verts.push(h.to);
        }
    }
    verts.sort_unstable();
    verts.dedup();
    verts
}

/// (Delta_theta u)(x) = (1/mu(x)) sum_y b(x,y) (u(x) - e^{i theta(x,y)} u(y)).
/// Assumes completeness of x has been checked.
fn laplacian_value(g: &MagneticGraph, u: &Amplitudes, x: usize) -> Complex64 {
    let ux = u.get(x);
    let mut acc = Complex64::ZERO;
    for h in g.neighbors(x) {
        acc += h.b * (ux - h.phase * u.get(h.to));
    }
    acc / g.mu(x)
}

/// The magnetic Laplacian, evaluated on the support of u plus one layer.
pub fn apply_laplacian(g: &MagneticGraph, u: &Amplitudes) -> Result<Amplitudes, OperatorError> {
    let verts = support_with_layer(g, u);
    let mut out = Amplitudes::new();
    for x in verts {
        require_complete(g, x)?;
        out.set(x, laplacian_value(g, u, x));
    }
    Ok(out)
}

/// The magnetic bi-Laplacian, by double application (two-layer margin).
pub fn apply_bilaplacian(g: &MagneticGraph, u: &Amplitudes) -> Result<Amplitudes, OperatorError> {
    apply_laplacian(g, &apply_laplacian(g, u)?)
}

/// H u = Delta_theta^2 u + W u.
pub fn apply_h(
    g: &MagneticGraph,
    w: &Potential,
    u: &Amplitudes,
) -> Result<Amplitudes, OperatorError> {
    let mut out = apply_bilaplacian(g, u)?;
    for (x, ux) in u.iter() {
        let wx = w.value(g, x)?;
        out.set(x, out.get(x) + wx * ux);
    }
    Ok(out)
}

/// (P_psi[u])(x) = (1/mu(x)) sum_y b(x,y) (psi(x)-psi(y)) (u(x) - e^{i theta} u(y)).
/// psi is real; this is only ever used with cut-offs and real multipliers.
pub fn apply_p(
    g: &MagneticGraph,
    psi: &RealAmplitudes,
    u: &Amplitudes,
) -> Result<Amplitudes, OperatorError> {
    let verts = support_with_layer(g, u);
    let mut out = Amplitudes::new();
    for x in verts {
        require_complete(g, x)?;
        let ux = u.get(x);
        let px = psi.get(x);
        let mut acc = Complex64::ZERO;
        for h in g.neighbors(x) {
            let dpsi = px - psi.get(h.to);
            if dpsi != 0.0 {
                acc += h.b * dpsi * (ux - h.phase * u.get(h.to));
            }
        }
        out.set(x, acc / g.mu(x));
    }
    Ok(out)
}

/// The plain (theta = 0) Laplacian of a real function, on its support plus
/// one layer. Feeds the u * Delta(psi) term of the product rule.
pub fn apply_plain_laplacian(
    g: &MagneticGraph,
    psi: &RealAmplitudes,
) -> Result<RealAmplitudes, OperatorError> {
    let mut verts: Vec<usize> = psi.support().collect();
    for x in psi.support() {
        for h in g.neighbors(x) {
            verts.push(h.to);
        }
    }
    verts.sort_unstable();
    verts.dedup();
    let mut out = RealAmplitudes::new();
    for x in verts {
        require_complete(g, x)?;
        let px = psi.get(x);
        let mut acc = 0.0;
        for h in g.neighbors(x) {
            acc += h.b * (px - psi.get(h.to));
        }
        out.set(x, acc / g.mu(x));
    }
    Ok(out)
}

/// Plain Laplacian of psi at selected vertices only (cheaper than the full
/// support sweep when psi is a wide cut-off and u is narrow).
pub fn plain_laplacian_at(
    g: &MagneticGraph,
    psi: &RealAmplitudes,
    vertices: impl IntoIterator<Item = usize>,
) -> Result<RealAmplitudes, OperatorError> {
    let mut out = RealAmplitudes::new();
    for x in vertices {
        require_complete(g, x)?;
        let px = psi.get(x);
        let mut acc = 0.0;
        for h in g.neighbors(x) {
            acc += h.b * (px - psi.get(h.to));
        }
        out.set(x, acc / g.mu(x));
    }
    Ok(out)
}

/// The weighted inner product (u, v) = sum_x mu(x) u(x) conj(v(x)).
pub fn inner(g: &MagneticGraph, u: &Amplitudes, v: &Amplitudes) -> Complex64 {
    // Iterate the smaller support.
    let (a, b, swap) = if u.len() <= v.len() {
        (u, v, false)
    } else {
        (v, u, true)
    };
    let mut acc = Complex64::ZERO;
    for (x, ax) in a.iter() {
        let bx = b.get(x);
        if bx != Complex64::ZERO {
            acc += g.mu(x) * if swap { bx * ax.conj() } else { ax * bx.conj() };
        }
    }
    acc
}

/// Squared weighted norm, summed directly (exact real, no conjugation noise).
pub fn norm_sq(g: &MagneticGraph, u: &Amplitudes) -> f64 {
    u.iter().map(|(x, v)| g.mu(x) * v.norm_sqr()).sum()
}

pub fn norm(g: &MagneticGraph, u: &Amplitudes) -> f64 {
    norm_sq(g, u).sqrt()
}

pub fn norm_sq_real(g: &MagneticGraph, u: &RealAmplitudes) -> f64 {
    u.iter().map(|(x, v)| g.mu(x) * v * v).sum()
}

/// Boundary convention for truncated matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Square Hermitian matrix of H on B(x0, N) with u = 0 outside.
    Dirichlet,
    /// Rectangular: columns B(x0, N), rows B(x0, N-2); each retained row is
    /// the exact full-graph equation.
    InteriorRows,
}

/// A truncated operator in coordinate form.
///
/// Entries are stated in the mu-orthonormal basis e_x = delta_x / sqrt(mu(x)),
/// so the Dirichlet matrix is exactly Hermitian as stored and Euclidean
/// coordinate norms coincide with the weighted amplitude norms.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    pub nrows: usize,
    pub ncols: usize,
    /// (row, col, value), sorted by (row, col).
    pub entries: Vec<(usize, usize, Complex64)>,
    pub hermitian: bool,
    /// Vertex ids per row index; rows are a prefix of the columns.
    pub row_ids: Vec<String>,
    pub col_ids: Vec<String>,
    pub row_mu: Vec<f64>,
    pub col_mu: Vec<f64>,
}

impl SparseOperator {
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![Complex64::ZERO; self.nrows];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    /// Column-major dense copy.
    pub fn to_dense(&self) -> Vec<Complex64> {
        let mut dense = vec![Complex64::ZERO; self.nrows * self.ncols];
        for &(r, c, v) in &self.entries {
            dense[c * self.nrows + r] = v;
        }
        dense
    }

    /// Subtract `shift` on the diagonal (row i, column i); rows are a prefix
    /// of the columns so index i names the same vertex on both sides.
    pub fn shifted_diagonal(&self, shift: Complex64) -> SparseOperator {
        let mut out = self.clone();
        let mut present = vec![false; self.nrows];
        for e in &mut out.entries {
            if e.0 == e.1 {
                e.2 -= shift;
                present[e.0] = true;
            }
        }
        for (i, seen) in present.iter().enumerate() {
            if !seen {
                out.entries.push((i, i, -shift));
            }
        }
        out.entries.sort_by_key(|e| (e.0, e.1));
        out.hermitian = self.hermitian && shift.im == 0.0;
        out
    }
}

/// Assemble the truncation of H = Delta_theta^2 + W over a family ball.
///
/// Dirichlet needs the family out to N+2 so that every retained row is the
/// exact equation for the zero-extended amplitude; interior rows need N.
pub fn assemble_truncation(
    family: &GraphFamily,
    w: &Potential,
    n: u32,
    boundary: Boundary,
) -> Result<SparseOperator, ProbeError> {
    if n < 4 {
        return Err(ProbeError::HorizonTooSmall(n, 4));
    }
    let g = match boundary {
        Boundary::Dirichlet => family.generate(n + 2)?,
        Boundary::InteriorRows => family.generate(n)?,
    };
    assemble_on_graph(&g, w, n, boundary).map_err(ProbeError::from)
}

fn assemble_on_graph(
    g: &MagneticGraph,
    w: &Potential,
    n: u32,
    boundary: Boundary,
) -> Result<SparseOperator, OperatorError> {
    let avail = g.horizon().unwrap_or(u32::MAX);
    let needed = match boundary {
        Boundary::Dirichlet => n.saturating_add(2),
        Boundary::InteriorRows => n,
    };
    if avail < needed {
        return Err(OperatorError::HorizonShortfall {
            needed,
            available: avail,
        });
    }

    let order = g.vertices_by_radius();
    let cols: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| g.radius_of(i) <= n)
        .collect();
    let row_radius = match boundary {
        Boundary::Dirichlet => n,
        Boundary::InteriorRows => n.saturating_sub(2),
    };
    // Balls are prefixes of the radius ordering, so rows are a column prefix.
    let nrows = cols
        .iter()
        .take_while(|&&i| g.radius_of(i) <= row_radius)
        .count();

    let mut col_pos = vec![usize::MAX; g.len()];
    for (p, &i) in cols.iter().enumerate() {
        col_pos[i] = p;
    }

    let mut entries: Vec<(usize, usize, Complex64)> = Vec::new();
    for (cp, &z) in cols.iter().enumerate() {
        // First application on the delta column: values at z and neighbors.
        // Off-center values need only the single connecting edge and are
        // exact regardless of completeness; the center needs all its edges.
        let mut first: Vec<(usize, Complex64)> = Vec::with_capacity(g.degree(z) + 1);
        let center_ok = g.is_complete(z);
        if center_ok {
            let deg_w: f64 = g.neighbors(z).iter().map(|h| h.b).sum();
            first.push((z, Complex64::new(deg_w / g.mu(z), 0.0)));
        }
        for h in g.neighbors(z) {
            // theta(y, z) is the reverse orientation: conjugate phase.
            let val = -h.b * h.phase.conj() / g.mu(h.to);
            first.push((h.to, val));
        }
        first.sort_unstable_by_key(|e| e.0);
        let lookup = |x: usize| -> Complex64 {
            first
                .binary_search_by_key(&x, |e| e.0)
                .map(|k| first[k].1)
                .unwrap_or(Complex64::ZERO)
        };

        // Rows within stencil reach: z, neighbors, second neighbors.
        let mut rows: Vec<usize> = Vec::new();
        rows.push(z);
        for h in g.neighbors(z) {
            rows.push(h.to);
            for h2 in g.neighbors(h.to) {
                rows.push(h2.to);
            }
        }
        rows.sort_unstable();
        rows.dedup();

        for x in rows {
            if g.radius_of(x) > row_radius {
                continue;
            }
            debug_assert!(g.is_complete(x), "rows must be interior");
            // If x or one of its neighbors coincides with z, the center value
            // of the first application is required and z must be complete.
            let uses_center = x == z || g.neighbors(x).iter().any(|h| h.to == z);
            if uses_center && !center_ok {
                return Err(OperatorError::MarginViolation(g.id(z).to_owned()));
            }
            let vx = lookup(x);
            let mut acc = Complex64::ZERO;
            for h in g.neighbors(x) {
                acc += h.b * (vx - h.phase * lookup(h.to));
            }
            let mut val = acc / g.mu(x);
            if x == z {
                val += w.value(g, z)?;
            }
            // mu-orthonormal basis scaling.
            let val = val * (g.mu(x) / g.mu(z)).sqrt();
            if val != Complex64::ZERO {
                entries.push((col_pos[x], cp, val));
            }
        }
    }

    if boundary == Boundary::Dirichlet {
        // Exact Hermiticity: keep the upper triangle, mirror conjugates, and
        // store the (mathematically real) diagonal without imaginary dust.
        let mut herm: Vec<(usize, usize, Complex64)> = Vec::with_capacity(entries.len());
        for &(r, c, v) in &entries {
            if r < c {
                herm.push((r, c, v));
                herm.push((c, r, v.conj()));
            } else if r == c {
                herm.push((r, c, Complex64::new(v.re, 0.0)));
            }
        }
        entries = herm;
    }
    entries.sort_by_key(|e| (e.0, e.1));

    let row_ids = cols[..nrows].iter().map(|&i| g.id(i).to_owned()).collect();
    let col_ids = cols.iter().map(|&i| g.id(i).to_owned()).collect();
    let row_mu = cols[..nrows].iter().map(|&i| g.mu(i)).collect();
    let col_mu = cols.iter().map(|&i| g.mu(i)).collect();
    Ok(SparseOperator {
        nrows,
        ncols: cols.len(),
        entries,
        hermitian: boundary == Boundary::Dirichlet,
        row_ids,
        col_ids,
        row_mu,
        col_mu,
    })
}
