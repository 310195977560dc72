//! Dense singular values via one-sided Jacobi on complex matrices.
//!
//! The probe only needs singular values of desk-scale matrices, so the
//! routine orthogonalizes columns in place and reads the values off as
//! column norms. The matrix is implicitly conjugate-transposed first when
//! that makes it tall, which keeps the column count at min(m, n) and avoids
//! chasing rank-deficient zero columns.

use num_complex::Complex64;

const SWEEP_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 60;

/// Singular values of a dense column-major m x n matrix, descending.
pub fn singular_values(a: &[Complex64], m: usize, n: usize) -> Vec<f64> {
    assert_eq!(a.len(), m * n, "dense shape mismatch");
    if m == 0 || n == 0 {
        return Vec::new();
    }
    // Work on the tall orientation: columns of A, or of A^H when m < n.
    let (rows, cols, mut work) = if m >= n {
        (m, n, a.to_vec())
    } else {
        let mut t = vec![Complex64::ZERO; m * n];
        for i in 0..m {
            for j in 0..n {
                t[i * n + j] = a[j * m + i].conj();
            }
        }
        (n, m, t)
    };

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols - 1 {
            for q in p + 1..cols {
                // Column inner products: alpha = |a_p|^2, beta = |a_q|^2,
                // gamma = a_p^H a_q.
                let (mut alpha, mut beta) = (0.0f64, 0.0f64);
                let mut gamma = Complex64::ZERO;
                for i in 0..rows {
                    let ap = work[p * rows + i];
                    let aq = work[q * rows + i];
                    alpha += ap.norm_sqr();
                    beta += aq.norm_sqr();
                    gamma += ap.conj() * aq;
                }
                let g = gamma.norm();
                if g <= SWEEP_TOL * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                // Rotate the phase of column q so the pair problem is real,
                // then apply the classical symmetric Jacobi rotation.
                let phase = gamma / g;
                let tau = (beta - alpha) / (2.0 * g);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let ap = work[p * rows + i];
                    let aq = work[q * rows + i] * phase.conj();
                    work[p * rows + i] = c * ap - s * aq;
                    work[q * rows + i] = s * ap + c * aq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sigma: Vec<f64> = (0..cols)
        .map(|j| {
            (0..rows)
                .map(|i| work[j * rows + i].norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    sigma.sort_by(|x, y| y.partial_cmp(x).expect("finite singular values"));
    sigma
}

/// Smallest of the min(m, n) singular values.
pub fn min_singular_value(a: &[Complex64], m: usize, n: usize) -> f64 {
    singular_values(a, m, n).last().copied().unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn diagonal_matrix() {
        let a = vec![c(3.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-2.0, 0.0)];
        let s = singular_values(&a, 2, 2);
        assert!((s[0] - 3.0).abs() < 1e-14);
        assert!((s[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn known_two_by_two() {
        // [[1, 1], [0, 1]] has sigma = sqrt((3 +- sqrt(5))/2).
        let a = vec![c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)];
        let s = singular_values(&a, 2, 2);
        let hi = ((3.0 + 5.0f64.sqrt()) / 2.0).sqrt();
        let lo = ((3.0 - 5.0f64.sqrt()) / 2.0).sqrt();
        assert!((s[0] - hi).abs() < 1e-12);
        assert!((s[1] - lo).abs() < 1e-12);
    }

    #[test]
    fn unitary_column_phases_do_not_change_values() {
        let a = vec![
            c(0.6, 0.8),
            c(0.1, -0.4),
            c(-0.3, 0.2),
            c(0.9, 0.0),
            c(0.2, 0.7),
            c(-0.5, -0.1),
        ];
        let s1 = singular_values(&a, 3, 2);
        let phase = c(0.0, 1.0);
        let mut b = a.clone();
        for v in b[3..6].iter_mut() {
            *v *= phase;
        }
        let s2 = singular_values(&b, 3, 2);
        for (x, y) in s1.iter().zip(&s2) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn frobenius_norm_is_preserved() {
        // Deterministic pseudo-random complex entries.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        for &(m, n) in &[(7usize, 7usize), (9, 4), (4, 9)] {
            let a: Vec<Complex64> = (0..m * n).map(|_| c(next(), next())).collect();
            let frob: f64 = a.iter().map(|v| v.norm_sqr()).sum();
            let s = singular_values(&a, m, n);
            assert_eq!(s.len(), m.min(n));
            let sum_sq: f64 = s.iter().map(|v| v * v).sum();
            assert!(
                (frob - sum_sq).abs() < 1e-10 * frob.max(1.0),
                "{m}x{n}: {frob} vs {sum_sq}"
            );
        }
    }

    #[test]
    fn matvec_norm_bounded_by_extreme_values() {
        let mut state = 42u64;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let (m, n) = (8usize, 5usize);
        let a: Vec<Complex64> = (0..m * n).map(|_| c(next(), next())).collect();
        let s = singular_values(&a, m, n);
        let (smax, smin) = (s[0], s[n - 1]);
        for _ in 0..20 {
            let x: Vec<Complex64> = (0..n).map(|_| c(next(), next())).collect();
            let xn: f64 = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            let mut y = vec![Complex64::ZERO; m];
            for j in 0..n {
                for i in 0..m {
                    y[i] += a[j * m + i] * x[j];
                }
            }
            let yn: f64 = y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            assert!(yn <= smax * xn * (1.0 + 1e-10));
            assert!(yn >= smin * xn * (1.0 - 1e-10));
        }
    }

    #[test]
    fn rank_deficient_wide_matrix() {
        // 2x4 with identical rows: one nonzero singular value.
        let a = vec![
            c(1.0, 0.0),
            c(1.0, 0.0),
            c(2.0, 0.0),
            c(2.0, 0.0),
            c(3.0, 0.0),
            c(3.0, 0.0),
            c(4.0, 0.0),
            c(4.0, 0.0),
        ];
        let s = singular_values(&a, 2, 4);
        assert_eq!(s.len(), 2);
        let expect = (2.0f64 * (1.0 + 4.0 + 9.0 + 16.0)).sqrt();
        assert!((s[0] - expect).abs() < 1e-12);
        assert!(s[1] < 1e-12);
    }
}
