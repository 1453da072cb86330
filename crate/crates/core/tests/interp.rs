use hyperrom::cases::{analytic_solution_1d, case, CaseName, Target};
use hyperrom::interp::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn set_from_columns(cols: &[Vec<f64>]) -> NonlinearSnapshotSet {
    let n = cols[0].len();
    NonlinearSnapshotSet {
        target: Target::G,
        order: 0,
        n_cand: n,
        data: cols.concat(),
        indices: (0..cols.len()).map(|i| (i, i, i)).collect(),
    }
}

fn line(n: usize) -> Vec<[f64; 2]> {
    (0..n).map(|i| [i as f64 / (n - 1).max(1) as f64, 0.0]).collect()
}

fn random_pod(n: usize, l: usize, seed: u64) -> PodBasis {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols: Vec<Vec<f64>> = (0..l).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    pod_modes(&set_from_columns(&cols), &vec![1.0 / n as f64; n], l).unwrap()
}

#[test]
fn order_zero_is_pointwise_definition() {
    let c = case(CaseName::Elliptic2d);
    let zeta = vec![vec![0.1, -0.3], vec![0.5, 0.2], vec![-0.7, 0.9]];
    let mus = vec![vec![1.0, 2.0], vec![3.0, 1.5], vec![6.0, 4.0]];
    let s = taylor_snapshots(&c, Target::G, 0, &zeta, &mus).unwrap();
    assert_eq!(s.len(), 3);
    for n in 0..3 {
        for x in 0..2 {
            let g = mus[n][0] * (mus[n][1] * zeta[n][x]).sin().exp();
            assert!((s.column(n)[x] - g).abs() < 1e-14);
        }
    }
}

#[test]
fn order_one_matches_hand_rolled_expansion() {
    // elliptic g = μ₁ exp(sin(μ₂ u)) with explicit partials
    let c = case(CaseName::Elliptic2d);
    let zeta = vec![vec![0.2, -0.4], vec![0.6, 0.1]];
    let mus = vec![vec![1.5, 2.5], vec![4.0, 1.2]];
    let s = taylor_snapshots(&c, Target::G, 1, &zeta, &mus).unwrap();
    assert_eq!(s.len(), 4);
    for n in 0..2 {
        for m in 0..2 {
            for x in 0..2 {
                let (u, um) = (zeta[n][x], zeta[m][x]);
                let (a, b) = (mus[n][0], mus[n][1]);
                let e = (b * u).sin().exp();
                let g = a * e;
                let gu = a * b * (b * u).cos() * e;
                let ga = e;
                let gb = a * u * (b * u).cos() * e;
                let want = g + gu * (um - u) + ga * (mus[m][0] - a) + gb * (mus[m][1] - b);
                let got = s.column(m + 2 * n)[x];
                assert!((got - want).abs() < 1e-12 * want.abs().max(1.0), "m={m} n={n} x={x}");
            }
        }
    }
    // analytic1d has no μ dependence in g
    let c = case(CaseName::Analytic1d);
    let zeta = vec![vec![0.0, 0.3], vec![0.8, 0.05]];
    let mus = vec![vec![1.0], vec![7.0]];
    let s = taylor_snapshots(&c, Target::G, 1, &zeta, &mus).unwrap();
    for n in 0..2 {
        for m in 0..2 {
            for x in 0..2 {
                let u = zeta[n][x];
                let want = 1.0 - 1.0 / (1.0 + u).powi(2) + 2.0 / (1.0 + u).powi(3) * (zeta[m][x] - u);
                assert!((s.column(m + 2 * n)[x] - want).abs() < 1e-14);
            }
        }
    }
}

#[test]
fn higher_orders_nest_order_zero() {
    let c = case(CaseName::Cdr2d);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 4;
    let zeta: Vec<Vec<f64>> = (0..n).map(|_| (0..6).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let mus: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random_range(0.0..20.0), rng.random_range(0.0..20.0)]).collect();
    for t in [Target::G, Target::GU, Target::f(0), Target::fu(1)] {
        let s0 = taylor_snapshots(&c, t, 0, &zeta, &mus).unwrap();
        let s1 = taylor_snapshots(&c, t, 1, &zeta, &mus).unwrap();
        let s2 = taylor_snapshots(&c, t, 2, &zeta, &mus).unwrap();
        assert_eq!((s1.len(), s2.len()), (n * n, n * n * n));
        for i in 0..n {
            assert_eq!(s0.column(i), s1.column(i + n * i));
            assert_eq!(s0.column(i), s2.column(i + n * i + n * n * i));
        }
    }
}

#[test]
fn order_two_matches_second_order_expansion() {
    // cdr f¹ = -μ₁u²: exact quadratic in u, bilinear in (u, μ₁); no mixed term is included
    let c = case(CaseName::Cdr2d);
    let zeta = vec![vec![0.3], vec![-0.2], vec![0.7]];
    let mus = vec![vec![2.0, 1.0], vec![5.0, 3.0], vec![11.0, 0.5]];
    let s = taylor_snapshots(&c, Target::f(0), 2, &zeta, &mus).unwrap();
    for (col, &(m, n, k)) in s.indices.iter().enumerate() {
        let (u, a) = (zeta[n][0], mus[n][0]);
        let (dm, dk) = (zeta[m][0] - u, zeta[k][0] - u);
        let want = -a * u * u - 2.0 * a * u * dm - u * u * (mus[m][0] - a) + 0.5 * (-2.0 * a) * dk * dm;
        assert!((s.column(col)[0] - want).abs() < 1e-12, "{m} {n} {k}");
    }
}

#[test]
fn missing_derivatives_are_reported() {
    let c = case(CaseName::Analytic1d);
    let r = taylor_snapshots(&c, Target::f(0), 0, &[vec![0.1]], &[vec![1.0]]);
    assert!(matches!(r, Err(InterpError::DerivativeUnavailable(_))));
}

#[test]
fn pod_single_snapshot() {
    let col = vec![1.0, 2.0, -1.0, 0.5];
    let w = vec![0.1, 0.2, 0.3, 0.4];
    let pod = pod_compress(&set_from_columns(&[col.clone()]), 1, &w).unwrap();
    let nrm2: f64 = col.iter().zip(&w).map(|(c, w)| w * c * c).sum();
    assert!((pod.lambdas[0] - nrm2).abs() < 1e-14);
    let ratio = pod.mode(0)[0] / col[0];
    for (m, c) in pod.mode(0).iter().zip(&col) {
        assert!((m - ratio * c).abs() < 1e-14);
    }
    assert!(matches!(pod_compress(&set_from_columns(&[col]), 2, &w), Err(InterpError::RankCollapse { rank: 1, .. })));
}

#[test]
fn pod_orthogonal_pair_is_degenerate() {
    let w = vec![0.25; 4];
    let pod = pod_compress(&set_from_columns(&[vec![1.0, 1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, -1.0]]), 2, &w).unwrap();
    assert!((pod.lambdas[0] - pod.lambdas[1]).abs() < 1e-14);
    // each mode lies in the plane of the two snapshots
    for m in 0..2 {
        let v = pod.mode(m);
        assert!((v[0] - v[1]).abs() < 1e-14 && (v[2] + v[3]).abs() < 1e-14);
    }
}

fn weighted_reconstruction_error(pod: &PodBasis, cols: &[Vec<f64>], w: &[f64], m: usize) -> f64 {
    let mut err = 0.0;
    let raw: Vec<Vec<f64>> = (0..m).map(|k| pod.raw_mode(k)).collect();
    for c in cols {
        let mut r = c.clone();
        for phi in &raw {
            let a: f64 = phi.iter().zip(c).zip(w).map(|((p, c), w)| p * c * w).sum();
            r.iter_mut().zip(phi).for_each(|(r, p)| *r -= a * p);
        }
        err += r.iter().zip(w).map(|(r, w)| w * r * r).sum::<f64>();
    }
    err.sqrt()
}

#[test]
fn pod_full_rank_reconstruction_and_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 40;
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5) / n as f64).collect();
    let cols: Vec<Vec<f64>> = (0..10).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let pod = pod_compress(&set_from_columns(&cols), 10, &w).unwrap();
    assert!(pod.lambdas.windows(2).all(|l| l[0] >= l[1]));
    for i in 0..10 {
        for j in 0..10 {
            let g: f64 = pod.raw_mode(i).iter().zip(pod.raw_mode(j)).zip(&w).map(|((a, b), w)| a * b * w).sum();
            assert!((g - if i == j { 1.0 } else { 0.0 }).abs() < 1e-9);
        }
    }
    let total: f64 = cols.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    let errs: Vec<f64> = (0..=10).map(|m| weighted_reconstruction_error(&pod, &cols, &w, m)).collect();
    assert!(errs[10] < 1e-8 * total);
    assert!(errs.windows(2).all(|e| e[1] <= e[0] + 1e-12));
}

#[test]
fn pod_routes_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let n = 30;
    let w = vec![1.0 / n as f64; n];
    let cols: Vec<Vec<f64>> = (0..20).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let doubled: Vec<Vec<f64>> = cols.iter().chain(&cols).cloned().collect();
    let a = pod_modes(&set_from_columns(&cols), &w, 8).unwrap();
    let b = pod_modes(&set_from_columns(&doubled), &w, 8).unwrap();
    for m in 0..8 {
        assert!((a.lambdas[m] - b.lambdas[m]).abs() < 1e-12 * a.lambdas[0]);
        let s = a.mode(m).iter().zip(b.mode(m)).map(|(x, y)| x * y).sum::<f64>().signum();
        assert!(a.mode(m).iter().zip(b.mode(m)).all(|(x, y)| (x - s * y).abs() < 1e-9));
    }
}

#[test]
fn constant_mode_selects_first_candidate() {
    let pod = pod_modes(&set_from_columns(&[vec![1.0; 5]]), &[0.2; 5], 1).unwrap();
    let sys = eim_select(&pod, 1, 0, &line(5)).unwrap();
    assert_eq!(sys.points, vec![0]);
    assert!(sys.psi(0).iter().all(|&v| (v - 1.0).abs() < 1e-15));
    assert_eq!(sys.b[(0, 0)], 1.0);
    assert_eq!(lebesgue_constant(&sys, 1), 1.0);
}

#[test]
fn monomials_on_three_points() {
    let x = [0.0, 0.5, 1.0];
    let modes: Vec<f64> = x.iter().chain(x.iter().map(|v| v * v).collect::<Vec<_>>().iter()).copied().collect();
    let pod = PodBasis { target: Target::G, order: 0, n_cand: 3, modes, lambdas: vec![1.0, 1.0], rank: 2, dropped: 0 };
    let sys = eim_select(&pod, 2, 0, &line(3)).unwrap();
    assert_eq!(sys.points, vec![2, 1]);
    assert_eq!(sys.coords[1], [0.5, 0.0]);
    // ψ₂ = (x² - x) / (-1/4)
    assert_eq!(sys.psi(1), &[0.0, 1.0, 0.0]);
    assert_eq!(sys.b[(1, 0)], 0.5);
}

#[test]
fn coefficients_solve_the_point_system() {
    let sys = eim_select(&random_pod(50, 8, 2), 6, 2, &line(50)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let v: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
    let beta = interp_coefficients(&sys, &v);
    for i in 0..6 {
        let bi: f64 = (0..6).map(|j| sys.b[(i, j)] * beta[j]).sum();
        assert!((bi - v[i]).abs() < 1e-12);
    }
    assert!(interp_coefficients(&sys, &[0.0; 6]).iter().all(|&b| b == 0.0));
    for k in 0..6 {
        let beta = interp_coefficients(&sys, &sys.gather(sys.psi(k))[..6]);
        for (j, b) in beta.iter().enumerate() {
            assert!((b - if j == k { 1.0 } else { 0.0 }).abs() < 1e-14);
        }
    }
}

#[test]
fn next_function_peaks_at_next_point() {
    let sys = eim_select(&random_pod(60, 7, 8), 5, 2, &line(60)).unwrap();
    let (_, err) = interpolate_and_error(&sys, sys.psi(5), 5);
    assert!((err - 1.0).abs() < 1e-14);
    let (gm, _) = interpolate_and_error(&sys, sys.psi(5), 5);
    let resid: Vec<f64> = sys.psi(5).iter().zip(&gm).map(|(a, b)| (a - b).abs()).collect();
    let argmax = (0..60).fold(0, |a, i| if resid[i] > resid[a] { i } else { a });
    assert_eq!(argmax, sys.points[5]);
}

#[test]
fn lebesgue_brute_force_and_bounds() {
    let sys = eim_select(&random_pod(25, 6, 11), 6, 0, &line(25)).unwrap();
    // characteristic functions: L_j(y_i) = δ_ij, L_j ∈ span ψ₁..ψ₃
    let m = 3;
    let mut brute = 0.0f64;
    let char_fns: Vec<Vec<f64>> = (0..m)
        .map(|j| {
            let mut rhs = vec![0.0; m];
            rhs[j] = 1.0;
            // solve B c = e_j by hand
            let mut c = vec![0.0; m];
            for i in 0..m {
                c[i] = rhs[i] - (0..i).map(|k| sys.b[(i, k)] * c[k]).sum::<f64>();
            }
            (0..25).map(|x| (0..m).map(|k| c[k] * sys.psi(k)[x]).sum()).collect()
        })
        .collect();
    for x in 0..25 {
        brute = brute.max(char_fns.iter().map(|l| l[x].abs()).sum());
    }
    assert!((lebesgue_constant(&sys, m) - brute).abs() < 1e-13);
    for m in 1..=6 {
        let l = lebesgue_constant(&sys, m);
        assert!(l >= 1.0 - 1e-14 && l <= (2f64.powi(m as i32) - 1.0) + 1e-12);
    }
}

#[test]
fn estimator_is_exact_inside_the_enriched_space() {
    let sys = eim_select(&random_pod(80, 10, 13), 6, 4, &line(80)).unwrap();
    let (m, p) = (6, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let coef: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
    let inside = sys.expand(&coef);
    let est = error_estimator(&sys, &sys.gather(&inside), m, p);
    assert!(est.estimate < 1e-13);

    let mut both = vec![0.0; m + 2];
    both[m] = 1.0;
    both[m + 1] = 1.0;
    let target = sys.expand(&both);
    let est = error_estimator(&sys, &sys.gather(&target), m, p);
    assert!((est.e[0] - 1.0).abs() < 1e-12 && (est.e[1] - 1.0).abs() < 1e-12);
    assert!(est.e[2..].iter().all(|e| e.abs() < 1e-12));
    assert_eq!(est.estimate, est.e.iter().map(|e| e.abs()).sum::<f64>());
    let (_, err) = interpolate_and_error(&sys, &target, m);
    assert!(err <= est.estimate + 1e-10);

    // a single extra function attains the bound
    let mut one = vec![0.0; m + 1];
    one[m] = -2.5;
    let target = sys.expand(&one);
    let est = error_estimator(&sys, &sys.gather(&target), m, 1);
    let (_, err) = interpolate_and_error(&sys, &target, m);
    assert!((est.estimate - err).abs() < 1e-10);
}

#[test]
fn degenerate_and_oversized_requests() {
    let pod = PodBasis {
        target: Target::G,
        order: 0,
        n_cand: 3,
        modes: vec![1.0, 0.0, 0.0, 2.0, 0.0, 0.0],
        lambdas: vec![1.0, 1.0],
        rank: 2,
        dropped: 0,
    };
    assert!(matches!(eim_select(&pod, 2, 0, &line(3)), Err(InterpError::DegenerateResidual { selected: 1, .. })));
    let sys = build_system(&pod, 2, 0, &line(3), RankPolicy::KeepM).unwrap();
    assert_eq!((sys.m, sys.p), (1, 0));
    assert!(matches!(eim_select(&pod, 2, 1, &line(3)), Err(InterpError::RankCollapse { .. })));
}

#[test]
fn analytic1d_foeim_converges_in_m() {
    let c = case(CaseName::Analytic1d);
    let (cand, w) = candidate_grid_1d(1000, 0.0, 2.0);
    let mus: Vec<Vec<f64>> = [0.4, 2.1, 4.0, 6.5, 9.0].iter().map(|&m| vec![m]).collect();
    let zeta: Vec<Vec<f64>> =
        mus.iter().map(|m| cand.iter().map(|x| analytic_solution_1d(x[0], m[0])).collect()).collect();
    let snaps = taylor_snapshots(&c, Target::G, 1, &zeta, &mus).unwrap();
    let pod = pod_modes(&snaps, &w, 15).unwrap();
    let sys = build_system(&pod, 12, 3, &cand, RankPolicy::KeepM).unwrap();
    for sn in 0..5 {
        let g = snaps.column(sn + 5 * sn);
        let e: Vec<f64> = (1..=sys.m).map(|m| interpolate_and_error(&sys, g, m).1).collect();
        assert!(e[sys.m - 1] < 1e-2 * e[0], "{e:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn b_is_unit_lower_triangular_and_in_span_targets_are_exact(seed in 0u64..10_000, n in 8usize..60, l in 1usize..8) {
        let l = l.min(n);
        let pod = random_pod(n, l, seed);
        prop_assume!(pod.len() == l);
        let sys = eim_select(&pod, l, 0, &line(n)).unwrap();
        for i in 0..l {
            prop_assert_eq!(sys.b[(i, i)], 1.0);
            for j in 0..l {
                prop_assert!(sys.b[(i, j)].abs() <= 1.0);
                if j > i { prop_assert_eq!(sys.b[(i, j)], 0.0); }
            }
            prop_assert_eq!(sys.psi(i).iter().fold(0.0f64, |a, v| a.max(v.abs())), 1.0);
        }
        let mut pts = sys.points.clone();
        pts.sort();
        pts.dedup();
        prop_assert_eq!(pts.len(), l);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 77);
        let coef: Vec<f64> = (0..l).map(|_| rng.random_range(-3.0..3.0)).collect();
        let f = sys.expand(&coef);
        let (_, err) = interpolate_and_error(&sys, &f, l);
        let scale = f.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        prop_assert!(err <= 1e-11 * scale.max(1.0));
    }

    #[test]
    fn estimator_bounds_first_component(seed in 0u64..10_000) {
        let sys = eim_select(&random_pod(40, 9, seed), 5, 4, &line(40)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f: Vec<f64> = (0..40).map(|_| rng.random_range(-1.0..1.0)).collect();
        let est = error_estimator(&sys, &sys.gather(&f), 5, 4);
        prop_assert!(est.estimate.is_finite());
        prop_assert!(est.estimate >= est.e[0].abs());
    }
}
