//! Property tests for the structural invariants: metric consistency against
//! an independent oracle, generator monotonicity, document round-trips,
//! operator symmetry on random magnetic graphs, and SVD identities.

// Index loops mirror the matrix notation of the oracles.
#![allow(clippy::needless_range_loop)]

use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bilap::graph::{EdgeSpec, MagneticGraph};
use bilap::io::{load_graph, save_graph};
use bilap::operator::{apply_laplacian, inner, norm_sq};
use bilap::svd::singular_values;
use bilap::{growth_table, Amplitudes, FamilySpec, GraphFamily};

/// Deterministic random connected magnetic graph: a random tree plus a few
/// extra edges, with random weights, phases and measures.
fn random_graph(n: usize, seed: u64) -> MagneticGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vertices: Vec<(String, f64)> = (0..n)
        .map(|k| (k.to_string(), rng.random_range(0.5..2.5)))
        .collect();
    let mut edges = Vec::new();
    for k in 1..n {
        let parent = rng.random_range(0..k);
        edges.push(EdgeSpec {
            u: parent.to_string(),
            v: k.to_string(),
            b: rng.random_range(0.2..3.0),
            theta: rng.random_range(-3.1..=3.1),
        });
    }
    let extras = rng.random_range(0..=n / 2);
    for _ in 0..extras {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b
            && !edges.iter().any(|e| {
                (e.u == a.to_string() && e.v == b.to_string())
                    || (e.u == b.to_string() && e.v == a.to_string())
            })
        {
            edges.push(EdgeSpec {
                u: a.to_string(),
                v: b.to_string(),
                b: rng.random_range(0.2..3.0),
                theta: rng.random_range(-3.1..=3.1),
            });
        }
    }
    MagneticGraph::new("0", 0.5, vertices, edges).expect("random graph is valid")
}

fn random_amplitudes(g: &MagneticGraph, rng: &mut ChaCha8Rng) -> Amplitudes {
    Amplitudes::from_pairs((0..g.len()).filter_map(|i| {
        if rng.random_bool(0.6) {
            Some((
                i,
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            ))
        } else {
            None
        }
    }))
}

#[test]
fn shared_types_are_send_sync_and_generators_pure() {
    fn assert_send_sync<T: Send + Sync>() {}
    assert_send_sync::<MagneticGraph>();
    assert_send_sync::<GraphFamily>();
    assert_send_sync::<Amplitudes>();
    assert_send_sync::<bilap::Potential>();
    assert_send_sync::<bilap::QCertificate>();
    assert_send_sync::<bilap::SparseOperator>();

    // Equal horizons give identical graphs, byte for byte.
    let family = GraphFamily::build_example(&FamilySpec::RadialTree {
        kappa: 0.5,
        alpha: None,
    })
    .unwrap();
    let a = save_graph(&family.generate(6).unwrap());
    let b = save_graph(&family.generate(6).unwrap());
    assert_eq!(a, b);
}

/// Floyd-Warshall all-pairs distances, the oracle for BFS.
fn floyd_warshall(g: &MagneticGraph) -> Vec<Vec<u32>> {
    let n = g.len();
    const INF: u32 = u32::MAX / 4;
    let mut d = vec![vec![INF; n]; n];
    for i in 0..n {
        d[i][i] = 0;
        for h in g.neighbors(i) {
            d[i][h.to] = 1;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bfs_distance_matches_floyd_warshall(n in 2usize..12, seed in any::<u64>()) {
        let g = random_graph(n, seed);
        let oracle = floyd_warshall(&g);
        for i in 0..n {
            for j in 0..n {
                let d = g.distance(&i.to_string(), &j.to_string()).unwrap();
                prop_assert_eq!(d, oracle[i][j]);
            }
        }
    }

    #[test]
    fn distance_is_a_metric(n in 2usize..12, seed in any::<u64>()) {
        let g = random_graph(n, seed);
        let d = floyd_warshall(&g);
        for i in 0..n {
            prop_assert_eq!(d[i][i], 0);
            for j in 0..n {
                prop_assert_eq!(d[i][j], d[j][i]);
                for k in 0..n {
                    prop_assert!(d[i][j] <= d[i][k] + d[k][j]);
                }
            }
        }
    }

    #[test]
    fn document_round_trip(n in 1usize..10, seed in any::<u64>()) {
        let g = random_graph(n.max(1), seed);
        let saved = save_graph(&g);
        let reloaded = load_graph(&saved).unwrap();
        // Canonical documents are fixed points.
        prop_assert_eq!(save_graph(&reloaded), saved);
        prop_assert_eq!(reloaded.len(), g.len());
        for i in 0..g.len() {
            prop_assert_eq!(reloaded.mu(i), g.mu(i));
            prop_assert_eq!(reloaded.degree(i), g.degree(i));
        }
    }

    #[test]
    fn green_identity_and_positivity_on_random_graphs(n in 2usize..14, seed in any::<u64>()) {
        let g = random_graph(n, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcdef);
        let u = random_amplitudes(&g, &mut rng);
        let v = random_amplitudes(&g, &mut rng);
        let du = apply_laplacian(&g, &u).unwrap();
        let dv = apply_laplacian(&g, &v).unwrap();
        let a = inner(&g, &du, &v);
        let b = inner(&g, &u, &dv);
        let scale = norm_sq(&g, &du).sqrt() * norm_sq(&g, &v).sqrt() + 1e-30;
        prop_assert!((a - b).norm() <= 1e-12 * scale);
        let form = inner(&g, &du, &u);
        let uu = norm_sq(&g, &u);
        prop_assert!(form.re >= -1e-12 * uu);
        prop_assert!(form.im.abs() <= 1e-12 * (uu + scale));
    }

    #[test]
    fn generator_nesting(kappa in 0.0f64..1.2, small in 1u32..5, extra in 1u32..4) {
        let family = GraphFamily::build_example(&FamilySpec::RadialTree { kappa, alpha: None })
            .unwrap()
            .with_budget(100_000);
        let large = small + extra;
        if family.ball_size(large) > 100_000 {
            return Ok(());
        }
        let gs = family.generate(small).unwrap();
        let gl = family.generate(large).unwrap();
        for i in 0..gs.len() {
            let j = gl.index_of(gs.id(i)).expect("vertices persist");
            prop_assert_eq!(gs.mu(i), gl.mu(j));
            prop_assert_eq!(gs.radius_of(i), gl.radius_of(j));
            for h in gs.neighbors(i) {
                let jt = gl.index_of(gs.id(h.to)).unwrap();
                let hh = gl.neighbors(j).iter().find(|e| e.to == jt).unwrap();
                prop_assert_eq!(h.b, hh.b);
                prop_assert_eq!(h.theta, hh.theta);
            }
        }
    }

    #[test]
    fn growth_stats_are_monotone(kappa in 0.0f64..1.2) {
        let family = GraphFamily::build_example(&FamilySpec::RadialTree { kappa, alpha: None })
            .unwrap()
            .with_budget(200_000);
        let n_max = ((family.feasible_horizon().saturating_sub(1)) / 2).clamp(1, 6);
        let rows = growth_table(&family, n_max).unwrap();
        for w in rows.windows(2) {
            prop_assert!(w[0].d_n <= w[1].d_n);
            prop_assert!(w[0].p_n <= w[1].p_n);
            prop_assert!(w[1].beta_n >= 0.0);
        }
    }

    #[test]
    fn operators_are_linear_in_u(n in 3usize..12, seed in any::<u64>()) {
        use bilap::operator::apply_p;
        use bilap::RealAmplitudes;
        let g = random_graph(n, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let u = random_amplitudes(&g, &mut rng);
        let v = random_amplitudes(&g, &mut rng);
        let a = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let combo = u.scaled(a).add_scaled(Complex64::new(1.0, 0.0), &v);
        let lhs = apply_laplacian(&g, &combo).unwrap();
        let rhs = apply_laplacian(&g, &u)
            .unwrap()
            .scaled(a)
            .add_scaled(Complex64::new(1.0, 0.0), &apply_laplacian(&g, &v).unwrap());
        let scale = lhs.sup_norm().max(rhs.sup_norm()) + 1e-30;
        prop_assert!(lhs.sub(&rhs).sup_norm() <= 1e-12 * scale);

        // P is real-linear in its multiplier.
        let psi1 = RealAmplitudes::from_pairs((0..g.len()).map(|i| {
            (i, rng.random_range(-1.0..1.0))
        }));
        let psi2 = RealAmplitudes::from_pairs((0..g.len()).map(|i| {
            (i, rng.random_range(-1.0..1.0))
        }));
        let c: f64 = rng.random_range(-2.0..2.0);
        let psum = RealAmplitudes::from_pairs(
            (0..g.len()).map(|i| (i, c * psi1.get(i) + psi2.get(i))),
        );
        let lhs = apply_p(&g, &psum, &u).unwrap();
        let rhs = apply_p(&g, &psi1, &u)
            .unwrap()
            .scaled(Complex64::new(c, 0.0))
            .add_scaled(Complex64::new(1.0, 0.0), &apply_p(&g, &psi2, &u).unwrap());
        let scale = lhs.sup_norm().max(rhs.sup_norm()) + 1e-30;
        prop_assert!(lhs.sub(&rhs).sup_norm() <= 1e-12 * scale);
    }

    #[test]
    fn zero_phase_keeps_real_amplitudes_real(n in 2usize..10, seed in any::<u64>()) {
        // With theta = 0 the operator reduces to the plain Laplacian and
        // maps real amplitudes to real amplitudes.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vertices: Vec<(String, f64)> = (0..n)
            .map(|k| (k.to_string(), rng.random_range(0.5..2.0)))
            .collect();
        let edges: Vec<EdgeSpec> = (1..n)
            .map(|k| EdgeSpec {
                u: rng.random_range(0..k).to_string(),
                v: k.to_string(),
                b: rng.random_range(0.2..2.0),
                theta: 0.0,
            })
            .collect();
        let g = MagneticGraph::new("0", 0.5, vertices, edges).unwrap();
        let u = Amplitudes::from_pairs(
            (0..n).map(|i| (i, Complex64::new(rng.random_range(-1.0..1.0), 0.0))),
        );
        let du = apply_laplacian(&g, &u).unwrap();
        for (_, v) in du.iter() {
            prop_assert_eq!(v.im, 0.0);
        }
    }

    #[test]
    fn svd_frobenius_identity(m in 1usize..9, n in 1usize..9, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<Complex64> = (0..m * n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let s = singular_values(&a, m, n);
        prop_assert_eq!(s.len(), m.min(n));
        let frob: f64 = a.iter().map(|v| v.norm_sqr()).sum();
        let sum_sq: f64 = s.iter().map(|v| v * v).sum();
        prop_assert!((frob - sum_sq).abs() <= 1e-10 * frob.max(1.0));
        // Descending order.
        for w in s.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn svd_extreme_values_bound_the_matvec(m in 2usize..8, n in 2usize..8, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<Complex64> = (0..m * n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let s = singular_values(&a, m, n);
        let x: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let xn: f64 = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let mut y = vec![Complex64::ZERO; m];
        for j in 0..n {
            for i in 0..m {
                y[i] += a[j * m + i] * x[j];
            }
        }
        let yn: f64 = y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        prop_assert!(yn <= s[0] * xn * (1.0 + 1e-9) + 1e-12);
        if m >= n {
            prop_assert!(yn >= s[n - 1] * xn * (1.0 - 1e-9) - 1e-12);
        }
    }
}
