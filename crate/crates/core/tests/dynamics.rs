use nalgebra::{DMatrix, DVector};
use splitstab::dynamics::{
    integrate_general, integrate_model, reduce_to_model, Force, GeneralIntegrator, GeneralProblem,
};
use splitstab::{catalog_scheme, transfer_matrix, SplittingScheme};

fn spd3() -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.5, 0.2, 0.1, 0.2, 1.0])
}

fn stiff3() -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[5.0, -1.0, 0.0, -1.0, 4.0, -0.5, 0.0, -0.5, 3.0])
}

fn cubic_problem() -> GeneralProblem {
    GeneralProblem::new(spd3(), stiff3(), Force::Cubic { delta: 0.7 }).unwrap()
}

fn step(scheme: &SplittingScheme, pb: &GeneralProblem, h: f64, z: &[f64]) -> Vec<f64> {
    let r = integrate_general(scheme, pb, h, 1, z).unwrap();
    r.state(1).to_vec()
}

#[test]
fn cubic_force_step_is_reversible() {
    let pb = cubic_problem();
    let z0 = [0.4, -0.2, 0.9, 0.1, 0.5, -0.3];
    for name in ["rkr", "krk", "verlet_pos"] {
        let s = catalog_scheme(name, None).unwrap();
        let fwd = integrate_general(&s, &pb, 0.3, 200, &z0).unwrap();
        let back = integrate_general(&s, &pb, -0.3, 200, fwd.state(200)).unwrap();
        for (a, b) in back.state(200).iter().zip(z0) {
            assert!((a - b).abs() < 1e-10, "{name}: {a} vs {b}");
        }
    }
}

#[test]
fn step_map_is_symplectic() {
    // J^T Omega J = Omega for a central-difference Jacobian of one step
    let pb = cubic_problem();
    let s = catalog_scheme("krkm", Some(2)).unwrap();
    let z0 = [0.3, -0.4, 0.2, 0.6, -0.1, 0.25];
    let n = z0.len();
    let d = 1e-6;
    let mut jac = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut zp = z0;
        let mut zm = z0;
        zp[j] += d;
        zm[j] -= d;
        let (fp, fm) = (step(&s, &pb, 0.8, &zp), step(&s, &pb, 0.8, &zm));
        for i in 0..n {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * d);
        }
    }
    let mut omega = DMatrix::zeros(n, n);
    for i in 0..3 {
        omega[(i, i + 3)] = 1.0;
        omega[(i + 3, i)] = -1.0;
    }
    let defect = (jac.transpose() * &omega * &jac - &omega).amax();
    assert!(defect < 1e-7, "{defect}");
    assert!((jac.determinant() - 1.0).abs() < 1e-7);
}

#[test]
fn composed_scheme_equals_substeps() {
    let pb = cubic_problem();
    let s = catalog_scheme("krk", None).unwrap();
    let s4 = s.compose_substeps(4).unwrap();
    let z0 = [1.0, 0.0, -0.5, 0.0, 0.2, 0.0];
    let one = integrate_general(&s4, &pb, 1.2, 50, &z0).unwrap();
    let many = integrate_general(&s, &pb, 0.3, 200, &z0).unwrap();
    for (a, b) in one.state(50).iter().zip(many.state(200)) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn linear_modes_follow_model_problem() {
    // B shares the M-orthogonal eigenvectors of A: B = 0.4 A - 0.1 M
    let a = stiff3();
    let m = spd3();
    let b = &a * 0.4 - &m * 0.1;
    let pb = GeneralProblem::new(m, a, Force::Linear(b)).unwrap();
    let red = reduce_to_model(&pb).unwrap();
    let scheme = catalog_scheme("rkrm", Some(2)).unwrap();
    let h = 0.9;
    let steps = 40;
    let z0 = [0.5, -1.0, 0.3, 0.2, 0.0, 0.4];
    let traj = integrate_general(&scheme, &pb, h, steps, &z0).unwrap();
    for (i, mode) in red.modes.iter().enumerate() {
        // eps = 0.4 - 0.1 / lambda for this B
        assert!((mode.eps - (0.4 - 0.1 / mode.lambda)).abs() < 1e-10);
        let start = red.modal_state(&z0[..3], &z0[3..], i);
        let model = integrate_model(&scheme, mode.eps, mode.frequency * h, steps, start).unwrap();
        let end = traj.state(steps);
        let got = red.modal_state(&end[..3], &end[3..], i);
        let want = model.state(steps);
        assert!(
            (got.q - want[0]).abs() < 1e-9 && (got.p - want[1]).abs() < 1e-9,
            "mode {i}"
        );
    }
}

#[test]
fn unstable_mode_grows_at_model_rate() {
    // a single mode pushed past beta: growth per step matches the model
    let pb = GeneralProblem::new(
        DMatrix::identity(2, 2),
        DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0])),
        Force::Linear(DMatrix::from_diagonal(&DVector::from_vec(vec![0.1, 16.0]))),
    )
    .unwrap();
    let s = catalog_scheme("rkr", None).unwrap();
    let h = 0.5;
    let red = reduce_to_model(&pb).unwrap();
    let fast = red.modes[1];
    assert!((fast.eps - 4.0).abs() < 1e-12);
    let p = transfer_matrix(&s, fast.eps, fast.frequency * h).semitrace();
    let lambda = p.abs() + (p * p - 1.0).sqrt();
    let traj = integrate_general(&s, &pb, h, 200, &[1.0, 1.0, 0.0, 0.0]).unwrap();
    assert!(
        (traj.empirical_growth - lambda).abs() < 1e-6,
        "{} vs {lambda}",
        traj.empirical_growth
    );
}

#[test]
fn integrator_reuses_its_basis() {
    let pb = cubic_problem();
    let it = GeneralIntegrator::new(&pb).unwrap();
    let s = catalog_scheme("rkr", None).unwrap();
    let mut q = DVector::from_vec(vec![0.1, 0.2, 0.3]);
    let mut p = DVector::from_vec(vec![0.0, 0.0, 0.0]);
    for _ in 0..10 {
        it.step(&s, 0.2, &mut q, &mut p);
    }
    let r = integrate_general(&s, &pb, 0.2, 10, &[0.1, 0.2, 0.3, 0.0, 0.0, 0.0]).unwrap();
    for (a, b) in q.iter().chain(p.iter()).zip(r.state(10)) {
        assert_eq!(a, b);
    }
}

#[test]
fn scalar_rotation_with_zero_force() {
    let pb = GeneralProblem::new(
        DMatrix::from_element(1, 1, 4.0),
        DMatrix::from_element(1, 1, 9.0),
        Force::Cubic { delta: 0.0 },
    )
    .unwrap();
    // q'' = -(9/4) q, frequency 1.5
    let s = catalog_scheme("lt_rk", None).unwrap();
    let t: f64 = 2.0;
    let r = integrate_general(&s, &pb, t, 1, &[1.0, 0.0]).unwrap();
    assert!((r.state(1)[0] - (1.5 * t).cos()).abs() < 1e-14);
    assert!((r.state(1)[1] + 4.0 * 1.5 * (1.5 * t).sin()).abs() < 1e-13);
}
