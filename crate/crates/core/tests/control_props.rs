use nalgebra::{Complex, DMatrix};
use pipenav::characterization::INCH;
use pipenav::control::lqr::{care_residual, RESIDUAL_TOL};
use pipenav::control::*;
use pipenav::plant::{Plant, PlantConfig, RobotState};
use pipenav::protocol::rna::{Branch, Configuration};
use proptest::prelude::*;

/// Stability check that avoids eigenvalues altogether: `A` is Hurwitz iff
/// `A'X + XA = -I` has a symmetric positive definite solution. Solved by
/// Kronecker vectorisation.
fn lyapunov_certifies_stable(a: &DMatrix<f64>) -> bool {
    let n = a.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let at = a.transpose();
    let lhs = eye.kronecker(&at) + at.kronecker(&eye);
    let rhs = DMatrix::from_fn(n * n, 1, |i, _| if i % (n + 1) == 0 { -1.0 } else { 0.0 });
    let Some(x) = lhs.lu().solve(&rhs) else {
        return false;
    };
    let x = DMatrix::from_column_slice(n, n, x.as_slice());
    let sym = (&x + x.transpose()) * 0.5;
    sym.cholesky().is_some()
}

/// Distance to uncontrollability by the PBH test: the smallest singular value
/// of `[A - lambda I, B]` over the eigenvalues of `A`.
fn pbh_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let (n, m) = (a.nrows(), b.ncols());
    a.complex_eigenvalues()
        .iter()
        .map(|&lambda| {
            let h = DMatrix::<Complex<f64>>::from_fn(n, n + m, |i, j| {
                if j < n {
                    Complex::from(a[(i, j)]) - if i == j { lambda } else { Complex::from(0.0) }
                } else {
                    Complex::from(b[(i, j - n)])
                }
            });
            h.singular_values().min()
        })
        .fold(f64::INFINITY, f64::min)
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-2.0f64..2.0, rows * cols).prop_map(move |v| DMatrix::from_row_slice(rows, cols, &v))
}

fn pair() -> impl Strategy<Value = (DMatrix<f64>, DMatrix<f64>, Vec<f64>, Vec<f64>)> {
    (2usize..=4, 1usize..=3).prop_flat_map(|(n, m)| {
        (
            matrix(n, n),
            matrix(n, m),
            prop::collection::vec(0.1f64..10.0, n),
            prop::collection::vec(0.1f64..10.0, m),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, max_global_rejects: 1 << 16, ..ProptestConfig::default() })]

    #[test]
    fn care_residual_small_on_random_pairs((a, b, q, r) in pair()) {
        // Close to uncontrollability |P| reaches 1e5 and evaluating the
        // residual in f64 is itself noisier than 1e-8.
        prop_assume!(pbh_distance(&a, &b) >= 0.4);
        let q = DMatrix::from_diagonal(&q.into());
        let r = DMatrix::from_diagonal(&r.into());
        let g = synthesize_lqr(&a, &b, &q, &r).unwrap();
        let res = care_residual(&a, &b, &q, &r, &g.p);
        prop_assert!(res < RESIDUAL_TOL, "residual {res}");
        prop_assert!(lyapunov_certifies_stable(&(&a - &b * &g.k)));
    }

    #[test]
    fn any_pair_stabilizes_or_reports_residual((a, b, q, r) in pair()) {
        prop_assume!(pbh_distance(&a, &b) > 1e-6);
        let q = DMatrix::from_diagonal(&q.into());
        let r = DMatrix::from_diagonal(&r.into());
        match synthesize_lqr(&a, &b, &q, &r) {
            Ok(g) => {
                prop_assert!(g.residual < RESIDUAL_TOL);
                prop_assert!(lyapunov_certifies_stable(&(&a - &b * &g.k)));
            }
            Err(ControlError::Synthesis { residual, .. }) => prop_assert!(residual >= RESIDUAL_TOL),
            Err(e) => prop_assert!(false, "unexpected {e:?}"),
        }
    }

    #[test]
    fn integral_term_never_exceeds_clamp(
        error in prop_oneof![100.0f64..1e4, -1e4f64..-100.0],
        clamp in 0.5f64..10.0,
        ki in 0.1f64..50.0,
    ) {
        let mut pid = Pid::new(PidGains { kp: 0.5, ki, kd: 0.0, integral_clamp: clamp, output_clamp: 12.0 });
        for _ in 0..5_000 {
            let out = pid.step(error, 1e-3);
            prop_assert!(pid.integral_term().abs() <= clamp + 1e-12);
            prop_assert!(out.abs() <= 12.0);
        }
    }
}

#[test]
fn scalar_care_hand_solution() {
    let one = DMatrix::from_element(1, 1, 1.0);
    let g = synthesize_lqr(&DMatrix::zeros(1, 1), &one, &one, &one).unwrap();
    assert!((g.p[(0, 0)] - 1.0).abs() < 1e-12);
    assert!((g.k[(0, 0)] - 1.0).abs() < 1e-12);
}

#[test]
fn default_plant_gains_are_stable() {
    let plant = PlantConfig::default();
    let gains = ControllerGains::synthesize(&ControlConfig::default(), &plant).unwrap();
    assert!(gains.lqr.residual < RESIDUAL_TOL);
    assert!(gains.lqr.spectral_abscissa() < -0.01);
    let a_cl = plant.stabilizing_a() - plant.stabilizing_b() * &gains.lqr.k;
    assert!(lyapunov_certifies_stable(&a_cl));
}

#[test]
fn origin_with_zero_speed_gives_exactly_zero() {
    let plant = PlantConfig::default();
    let gains = ControllerGains::synthesize(&ControlConfig::default(), &plant).unwrap();
    let mut c = LqrPidController::new(gains);
    for _ in 0..10 {
        assert_eq!(c.step(&RobotState::default(), 0.0, 1e-3), [0.0; 3]);
    }
}

/// Drives a plan through the plant, integrating body rotation from wheel
/// rates independently of the steerer.
fn steer(config: Configuration, diameter: f64) -> (Steerer, RobotState, f64) {
    let cfg = PlantConfig::default();
    let dt = cfg.dt;
    let r = cfg.wheel_radius;
    let plan = SteeringPlan::for_configuration(&config, diameter, SteeringParams::default()).unwrap();
    let p = plan.axis.pattern();
    let norm2: f64 = p.iter().map(|v| v * v).sum();
    let mut plant = Plant::new(cfg, RobotState::default());
    let mut steerer = Steerer::new(plan);
    let mut rotation = 0.0;
    loop {
        let out = steerer.step(&plant.state, r, dt).unwrap();
        let w = plant.state.wheel_rates;
        rotation += r * (p[0] * w[0] + p[1] * w[1] + p[2] * w[2]) / (diameter / 2.0 * norm2) * dt;
        if out.done {
            break;
        }
        plant.step(out.voltages).unwrap();
    }
    (steerer, plant.state, rotation)
}

#[test]
fn bend_and_tee_rotation_and_heading() {
    let cases = [
        (Configuration::Bend90, 9.0, 90, 90),
        (Configuration::Bend90, 22.0, 90, 90),
        (Configuration::Bend45, 14.0, 45, 45),
        (Configuration::Bend135, 12.0, 135, 135),
        (Configuration::TJunction { branch: Branch::Left }, 12.0, 90, 90),
        (Configuration::TJunction { branch: Branch::Right }, 15.0, -90, 270),
    ];
    for (config, d_in, target_deg, yaw_after) in cases {
        let (steerer, state, rotation) = steer(config, d_in * INCH);
        let err = (rotation.to_degrees() - target_deg as f64).abs();
        assert!(
            err <= 0.5,
            "{config:?} at {d_in} in: rotation {} deg",
            rotation.to_degrees()
        );
        assert_eq!(steerer.plan.heading_after(state.heading).yaw_deg, yaw_after);
    }
}
