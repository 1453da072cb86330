use hyperrom::cases::{case, CaseDefinition, CaseName, Order, Target};
use hyperrom::mesh_fem::*;
use hyperrom::rom::*;
use hyperrom::snapshots_rb::*;

struct Fixture {
    space: FESpace,
    case: CaseDefinition,
    ops: AffineOperators,
    snaps: SnapshotSet,
    rb: RBSpace,
}

fn fixture(name: CaseName, mus: Vec<Vec<f64>>) -> Fixture {
    let space = build_fe_space(2, 8, 8, 2, 4).unwrap();
    let case = case(name);
    let ops = assemble_affine(&space, &case).unwrap();
    let snaps = compute_snapshots(&space, &case, &ops, &mus, NewtonConfig::default(), &FomCache::in_memory()).unwrap();
    let rb = orthonormalize_rb(&space, &ops, &snaps.columns).unwrap();
    Fixture { space, case, ops, snaps, rb }
}

fn elliptic(n: usize) -> Fixture {
    let all = [[1.0, 1.0], [6.0, 6.0], [1.0, 6.0], [6.0, 1.0], [3.5, 3.5], [2.0, 4.5]];
    fixture(CaseName::Elliptic2d, all[..n].iter().map(|m| m.to_vec()).collect())
}

impl Fixture {
    fn rom(&self, spec: &SchemeSpec) -> RomOperators {
        offline_assemble(&self.space, &self.case, &self.ops, &self.rb, &self.snaps, spec).unwrap()
    }

    fn fom(&self, mu: &[f64]) -> (Vec<f64>, f64) {
        let sol = fom_newton_solve(&self.space, &self.case, &self.ops, mu, NewtonConfig::default(), None).unwrap();
        let s = fom_output(&self.space, &self.ops, &sol.nodal);
        (sol.nodal, s)
    }
}

#[test]
fn reduced_affine_matches_quadrature_integrals() {
    let fx = elliptic(4);
    let red = reduce_affine(&fx.space, &fx.ops, &fx.rb);
    let n = fx.rb.dim();
    // the Laplacian is the X Gram matrix, so an X-orthonormal basis gives the identity
    for i in 0..n {
        for j in 0..n {
            let t = if i == j { 1.0 } else { 0.0 };
            assert!((red.a[0][(i, j)] - t).abs() < 1e-10);
        }
    }
    let w = fx.space.quad_weights();
    let pts = fx.space.quad_points();
    for i in 0..n {
        let (mut l, mut o) = (0.0, 0.0);
        for q in 0..w.len() {
            let z = fx.rb.values[(q, i)];
            l += w[q] * fx.case.source(pts[q]) * z;
            o += w[q] * z;
        }
        assert!((red.load[i] - l).abs() < 1e-12 * (1.0 + l.abs()));
        assert!((red.output[i] - o).abs() < 1e-12 * (1.0 + o.abs()));
    }
}

#[test]
fn single_function_coupling_is_the_moment_of_the_normalized_snapshot() {
    let fx = elliptic(1);
    let spec = SchemeSpec { residual_mult: 1, p_mult: 0, ..Scheme::EimGn.spec() };
    let rom = fx.rom(&spec);
    let term = &rom.residual[0];
    assert_eq!((term.m, term.p), (1, 0));
    assert_eq!((term.c.rows(), term.c.cols()), (1, 1));
    let uq = fx.space.values_at_quadrature(&fx.snaps.columns[0]);
    let mu = &fx.snaps.mus[0];
    let g: Vec<f64> = uq.iter().map(|&u| fx.case.eval_target(Target::G, u, mu, Order::default()).unwrap()).collect();
    let top = (0..g.len()).fold(0, |b, i| if g[i].abs() > g[b].abs() { i } else { b });
    assert_eq!(term.points, vec![top]);
    let w = fx.space.quad_weights();
    let oracle: f64 = (0..g.len()).map(|q| w[q] * g[q] / g[top] * fx.rb.values[(q, 0)]).sum();
    assert!((term.c[(0, 0)] - oracle).abs() < 1e-12 * oracle.abs().max(1.0));
}

#[test]
fn point_rows_are_basis_traces() {
    let fx = elliptic(3);
    let rom = fx.rom(&Scheme::FoeimGn.spec());
    for term in &rom.residual {
        assert_eq!((term.q.rows(), term.q.cols()), (term.m + term.p, 3));
        assert_eq!((term.c.rows(), term.c.cols()), (3, term.m));
        for (j, z) in fx.rb.basis.iter().enumerate() {
            let at = fx.space.eval_fields_at_points(z, &term.coords).unwrap();
            for (i, v) in at.iter().enumerate() {
                assert!((term.q[(i, j)] - v).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn galerkin_reproduces_sample_solutions() {
    let fx = elliptic(4);
    let red = reduce_affine(&fx.space, &fx.ops, &fx.rb);
    for (mu, col) in fx.snaps.mus.iter().zip(&fx.snaps.columns) {
        let sol = online_gn_reference(&fx.space, &fx.case, &fx.rb, &red, mu, OnlineConfig::default()).unwrap();
        let proj = fx.rb.project(&fx.space, &fx.ops, col);
        for (a, b) in sol.alpha.iter().zip(&proj) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        let s = fom_output(&fx.space, &fx.ops, col);
        assert!((sol.output - s).abs() < 1e-9 * s.abs());
    }
}

#[test]
fn hyperreduced_solvers_track_galerkin() {
    let fx = elliptic(6);
    let red = reduce_affine(&fx.space, &fx.ops, &fx.rb);
    let mu = [2.7, 5.1];
    let gn = online_gn_reference(&fx.space, &fx.case, &fx.rb, &red, &mu, OnlineConfig::default()).unwrap();
    let (_, s_fom) = fx.fom(&mu);
    let err = |scheme: Scheme| {
        let rom = fx.rom(&scheme.spec());
        let sol = online_solve(&rom, &fx.case, &mu, OnlineConfig::default()).unwrap();
        assert!(sol.final_step <= 1e-10);
        (sol.output - s_fom).abs()
    };
    let (eim, soeim, gnh) = (err(Scheme::EimGn), err(Scheme::SoeimGn), err(Scheme::GnSoeim));
    assert!((gn.output - s_fom).abs() < eim);
    assert!(soeim < eim && gnh < eim);
    assert!(soeim < 0.02 * s_fom.abs() && gnh < 0.02 * s_fom.abs());
}

#[test]
fn hgn_jacobian_matches_finite_differences() {
    for fx in [
        elliptic(4),
        fixture(CaseName::Cdr2d, vec![vec![2.0, 3.0], vec![15.0, 5.0], vec![8.0, 18.0]]),
    ] {
        let rom = fx.rom(&Scheme::FoeimGn.spec());
        let mu = fx.snaps.mus[1].clone();
        let alpha: Vec<f64> = (0..rom.n).map(|i| 0.3 - 0.2 * i as f64).collect();
        let (_, j) = hgn_system(&rom, &fx.case, &mu, &alpha).unwrap();
        let h = 1e-6;
        for k in 0..rom.n {
            let mut ap = alpha.clone();
            let mut am = alpha.clone();
            ap[k] += h;
            am[k] -= h;
            let rp = hgn_system(&rom, &fx.case, &mu, &ap).unwrap().0;
            let rm = hgn_system(&rom, &fx.case, &mu, &am).unwrap().0;
            for i in 0..rom.n {
                let fd = (rp[i] - rm[i]) / (2.0 * h);
                assert!((fd - j[(i, k)]).abs() < 1e-6 * (1.0 + fd.abs()), "{:?} J[{i},{k}]", fx.case.name);
            }
        }
    }
}

#[test]
fn cdr_hyperreduction_converges() {
    let fx = fixture(
        CaseName::Cdr2d,
        vec![vec![2.0, 3.0], vec![15.0, 5.0], vec![8.0, 18.0], vec![18.0, 18.0], vec![10.0, 10.0]],
    );
    let red = reduce_affine(&fx.space, &fx.ops, &fx.rb);
    let mu = [6.0, 12.0];
    let gn = online_gn_reference(&fx.space, &fx.case, &fx.rb, &red, &mu, OnlineConfig::default()).unwrap();
    let rom = fx.rom(&Scheme::SoeimGn.spec());
    assert_eq!(rom.residual.len(), 3);
    let sol = online_hgn(&rom, &fx.case, &mu, OnlineConfig::default()).unwrap();
    assert!((sol.output - gn.output).abs() < 1e-3 * gn.output.abs());
    assert!(residual_estimate(&rom, &fx.case, &mu, &sol.alpha).unwrap().is_finite());
}

#[test]
fn gnh_requires_jacobian_systems() {
    let fx = elliptic(2);
    let rom = fx.rom(&Scheme::EimGn.spec());
    assert!(matches!(online_gnh(&rom, &fx.case, &[2.0, 2.0], OnlineConfig::default()), Err(RomError::MissingSystem(_))));
}

#[test]
fn artifacts_round_trip_and_detect_tampering() {
    let fx = elliptic(3);
    let rom = fx.rom(&Scheme::GnSoeim.spec());
    let dir = tempfile::tempdir().unwrap();
    let meta = save_artifacts(&rom, dir.path()).unwrap();
    assert!(meta.hashes.contains_key("C_NM_g.romx"));
    assert!(meta.hashes.contains_key("Cgu_001.romx"));
    let back = load_artifacts(dir.path()).unwrap();
    let mu = [4.0, 2.0];
    let a = online_solve(&rom, &fx.case, &mu, OnlineConfig::default()).unwrap();
    let b = online_solve(&back, &fx.case, &mu, OnlineConfig::default()).unwrap();
    assert_eq!(a, b);

    // deterministic: saving again gives the same bytes
    let dir2 = tempfile::tempdir().unwrap();
    save_artifacts(&rom, dir2.path()).unwrap();
    for f in meta.hashes.keys().chain(std::iter::once(&"meta.json".to_string())) {
        assert_eq!(std::fs::read(dir.path().join(f)).unwrap(), std::fs::read(dir2.path().join(f)).unwrap());
    }

    let path = dir.path().join("Q_MN_g.romx");
    let mut bytes = std::fs::read(&path).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 1;
    std::fs::write(&path, bytes).unwrap();
    assert!(matches!(load_artifacts(dir.path()), Err(RomError::ArtifactMismatch(_))));
    std::fs::remove_file(&path).unwrap();
    assert!(matches!(load_artifacts(dir.path()), Err(RomError::ArtifactMismatch(_))));
}

#[test]
fn online_solvers_cover_the_cdr_box_and_gnh_matches_hgn() {
    let fx = fixture(
        CaseName::Cdr2d,
        vec![vec![0.0, 0.0], vec![20.0, 0.0], vec![0.0, 20.0], vec![20.0, 20.0], vec![10.0, 10.0]],
    );
    let red = reduce_affine(&fx.space, &fx.ops, &fx.rb);
    let roms: Vec<RomOperators> = [Scheme::EimGn, Scheme::SoeimGn, Scheme::GnSoeim].iter().map(|s| fx.rom(&s.spec())).collect();
    for i in 0..5 {
        for j in 0..5 {
            let mu = [5.0 * i as f64, 5.0 * j as f64];
            online_gn_reference(&fx.space, &fx.case, &fx.rb, &red, &mu, OnlineConfig::default()).unwrap();
            for rom in &roms {
                online_solve(rom, &fx.case, &mu, OnlineConfig::default()).unwrap();
            }
            // same hyperreduced residual, different Jacobian: same root
            let gnh = online_gnh(&roms[2], &fx.case, &mu, OnlineConfig::default()).unwrap();
            let hgn = online_hgn(&roms[2], &fx.case, &mu, OnlineConfig::default()).unwrap();
            for (a, b) in gnh.alpha.iter().zip(&hgn.alpha) {
                assert!((a - b).abs() < 1e-8 * (1.0 + b.abs()), "{mu:?}: {a} vs {b}");
            }
        }
    }
}
