mod common;

use common::{admissible_families, gaussian, heat, line, random_flux};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use weakdiff::potentials::{eval_beta, CoefficientField, PotentialSpec, RegularizedPotential};
use weakdiff::state::{integrate_state, midpoint_states, FieldPreset, Integrand, Trajectory};
use weakdiff::variational::*;

/// Minimizer of the regularized heat functional from dense normal equations.
///
/// With `j = r²/2` the regularized integrand is `(cȳ − w)²/(2c)` with
/// `c = 1/(1+λ) + σ`, and `ȳ_k = y₀ − Δt A (Σ_{l<k} w_l + ½ w_k)`.
fn dense_heat_minimizer(data: &weakdiff::state::ProblemData, lambda: f64, sigma: f64) -> Vec<Vec<f64>> {
    let n = data.nodes();
    let steps = data.steps();
    let dt = data.dt();
    let m = data.op().grid().weights();
    let k = data.op().stiffness().to_dense();
    let a = DMatrix::from_fn(n, n, |i, j| k[i][j] / m[i]);
    let c = 1.0 / (1.0 + lambda) + sigma;

    let size = n * steps;
    let mut s = DMatrix::zeros(size, size);
    for row in 0..steps {
        for col in 0..=row {
            let coef = if col == row { -0.5 * dt } else { -dt };
            s.view_mut((row * n, col * n), (n, n)).copy_from(&(&a * coef));
        }
    }
    let y0 = DVector::from_column_slice(data.y0());
    let s0 = DVector::from_fn(size, |r, _| y0[r % n]);
    let scale = DVector::from_fn(size, |r, _| (dt * m[r % n] / c).sqrt());
    let l = DMatrix::from_diagonal(&scale) * (s * c - DMatrix::identity(size, size));
    let l0 = scale.component_mul(&(s0 * c));
    let lt = l.transpose();
    let w = (&lt * &l).lu().solve(&(-(&lt * l0))).unwrap();
    (0..steps).map(|k| w.rows(k * n, n).iter().copied().collect()).collect()
}

#[test]
fn heat_minimizer_matches_dense_normal_equations() {
    let data = line(16, 0.1, 8, &FieldPreset::zero(), &gaussian(0.5, 0.15));
    let pot = PotentialSpec::quadratic();
    let (lambda, sigma) = (1e-2, 1e-2);
    let reg = RegularizedPotential::new(&pot, lambda, sigma).unwrap();
    let start = vec![vec![0.0; data.nodes()]; data.steps()];
    let (w, _, stats) = inner_minimize(&start, &data, &reg, &SolverConfig::default()).unwrap();
    assert!(stats.converged);
    let oracle = dense_heat_minimizer(&data, lambda, sigma);
    let scale = oracle.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    for (a, b) in w.iter().flatten().zip(oracle.iter().flatten()) {
        assert!((a - b).abs() <= 1e-6 * scale, "{a} vs {b}");
    }
}

#[test]
fn accepted_values_never_increase() {
    let data = heat(40);
    let pot = PotentialSpec::log_type(CoefficientField::constant(1.0)).unwrap();
    let reg = RegularizedPotential::new(&pot, 1e-2, 1e-3).unwrap();
    let start = vec![vec![0.0; data.nodes()]; data.steps()];
    let (_, _, stats) = inner_minimize(&start, &data, &reg, &SolverConfig::default()).unwrap();
    assert!(stats.history.len() > 2);
    for p in stats.history.windows(2) {
        assert!(p[1] <= p[0] + 1e-12, "{} after {}", p[1], p[0]);
    }
    assert!(stats.converged && stats.grad_norm <= SolverConfig::default().grad_tol);
}

#[test]
fn iteration_cap_is_a_flag_not_an_error() {
    let data = heat(20);
    let pot = PotentialSpec::log_type(CoefficientField::constant(1.0)).unwrap();
    let reg = RegularizedPotential::new(&pot, 1e-3, 1e-4).unwrap();
    let cfg = SolverConfig {
        max_inner_iters: 1,
        grad_tol: 1e-300,
        ..SolverConfig::default()
    };
    let start = vec![vec![0.0; data.nodes()]; data.steps()];
    let (_, _, stats) = inner_minimize(&start, &data, &reg, &cfg).unwrap();
    assert!(!stats.converged);
    assert_eq!(stats.iterations, 1);
}

#[test]
fn inner_minimize_needs_smoothing() {
    let data = heat(4);
    let pot = PotentialSpec::quadratic();
    let reg = RegularizedPotential::new(&pot, 1e-2, 0.0).unwrap();
    let start = vec![vec![0.0; data.nodes()]; 4];
    assert!(inner_minimize(&start, &data, &reg, &SolverConfig::default()).is_err());
}

#[test]
fn both_inner_methods_reach_the_same_minimizer() {
    let data = line(32, 0.1, 10, &FieldPreset::zero(), &gaussian(0.5, 0.1));
    let pot = PotentialSpec::exp_type(CoefficientField::constant(1.0)).unwrap();
    let reg = RegularizedPotential::new(&pot, 1e-1, 1e-2).unwrap();
    let start = vec![vec![0.0; data.nodes()]; data.steps()];
    let solve = |method| {
        let cfg = SolverConfig { method, max_inner_iters: 5000, ..SolverConfig::default() };
        let (w, _, stats) = inner_minimize(&start, &data, &reg, &cfg).unwrap();
        assert!(stats.converged, "{method:?}");
        (w, stats)
    };
    let (newton, ns) = solve(InnerMethod::NewtonCg);
    let (accel, acs) = solve(InnerMethod::Accelerated);
    assert!(ns.cg_iterations > 0 && acs.cg_iterations == 0);
    let scale = newton.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    for (a, b) in newton.iter().flatten().zip(accel.iter().flatten()) {
        assert!((a - b).abs() <= 1e-5 * scale, "{a} vs {b}");
    }
}

/// Trajectory with arbitrary states and `w = ȳ + shift`.
fn planted(data: &weakdiff::state::ProblemData, shift: f64) -> Trajectory {
    let n = data.nodes();
    let y: Vec<Vec<f64>> = (0..=data.steps())
        .map(|k| (0..n).map(|i| ((i + 3 * k) as f64 * 0.37).sin()).collect())
        .collect();
    let mut traj = Trajectory { y, w: vec![] };
    traj.w = midpoint_states(&traj)
        .into_iter()
        .map(|yb| yb.into_iter().map(|v| v + shift).collect())
        .collect();
    traj
}

#[test]
fn quadratic_gap_examples() {
    let data = line(16, 0.5, 6, &FieldPreset::zero(), &gaussian(0.5, 0.2));
    let pot = PotentialSpec::quadratic();
    let exact = Integrand::Exact(&pot);
    let zero = pointwise_gap(&planted(&data, 0.0), &data, &exact).unwrap();
    assert!(zero.total.abs() < 1e-14);
    // |Q| = T · |Ω| = 0.5
    let one = pointwise_gap(&planted(&data, 1.0), &data, &exact).unwrap();
    assert!((one.total - 0.25).abs() < 1e-12, "{}", one.total);
}

#[test]
fn planted_selection_has_no_gap() {
    let data = line(16, 0.5, 6, &FieldPreset::zero(), &gaussian(0.5, 0.2));
    let pot = PotentialSpec::log_type(CoefficientField::constant(1.0)).unwrap();
    let mut traj = planted(&data, 0.0);
    let xs = data.op().grid().coords().to_vec();
    let mid = midpoint_states(&traj);
    for (k, (wk, yb)) in traj.w.iter_mut().zip(&mid).enumerate() {
        for i in 0..data.nodes() {
            wk[i] = eval_beta(&pot, data.time(k + 1), xs[i], yb[i]).midpoint();
        }
    }
    let gap = pointwise_gap(&traj, &data, &Integrand::Exact(&pot)).unwrap();
    assert!(gap.total.abs() < 1e-8 && gap.infinite_at.is_none(), "{gap:?}");
    assert!(inclusion_violation(&traj, &data, &pot) < 1e-12);
}

#[test]
fn flux_outside_conjugate_domain_gives_infinite_gap() {
    let data = line(8, 0.5, 3, &FieldPreset::zero(), &gaussian(0.5, 0.2));
    let pot = PotentialSpec::abs_value();
    let mut traj = planted(&data, 0.0);
    traj.w = vec![vec![0.0; data.nodes()]; 3];
    traj.w[1][4] = 2.0;
    let gap = pointwise_gap(&traj, &data, &Integrand::Exact(&pot)).unwrap();
    assert_eq!(gap.total, f64::INFINITY);
    assert_eq!(gap.infinite_at, Some((2, 4)));
}

#[test]
fn energy_residual_examples() {
    let data = line(32, 0.5, 20, &FieldPreset::zero(), &FieldPreset::zero());
    let still = integrate_state(&vec![vec![0.0; 33]; 20], &data).unwrap();
    assert_eq!(energy_identity_residual(&still, &data).unwrap(), 0.0);

    let data = line(32, 0.5, 20, &gaussian(0.3, 0.2), &gaussian(0.6, 0.1));
    let traj = integrate_state(&random_flux(4, 20, 33, 1.0), &data).unwrap();
    assert!(energy_identity_residual(&traj, &data).unwrap() < 1e-9);
    let bumped = |eps: f64| {
        let mut t = traj.clone();
        t.y[20][10] += eps;
        energy_identity_residual(&t, &data).unwrap()
    };
    // An interior perturbation of y_K changes both sides affinely in eps.
    let (r1, r2) = (bumped(1e-4), bumped(2e-4));
    assert!(r1 > 1e-9 && (r2 / r1 - 2.0).abs() < 1e-2, "{r1} {r2}");
}

#[test]
fn zero_data_short_circuits() {
    let data = line(16, 0.5, 10, &FieldPreset::zero(), &FieldPreset::zero());
    for pot in admissible_families() {
        let (traj, report) = continuation_solve(&data, &pot, &SolverConfig::default()).unwrap();
        assert!(report.short_circuit);
        assert_eq!(report.pointwise_gap, 0.0);
        assert!(traj.y.iter().chain(&traj.w).flatten().all(|&v| v == 0.0));
        let verdict = verify_weak_solution(&traj, &data, &pot, &Tolerances::default()).unwrap();
        assert!(verdict.holds);
        assert_eq!(verdict.constraint_residual, 0.0);
        assert_eq!(verdict.energy_identity_residual, 0.0);
    }
}

#[test]
fn heat_case_is_certified_and_shifted_flux_is_not() {
    let data = heat(100);
    let pot = PotentialSpec::quadratic();
    let (traj, report) = continuation_solve(&data, &pot, &SolverConfig::default()).unwrap();
    assert!(report.verdict && report.pointwise_gap < 1e-8, "{report:?}");
    assert!(report.pointwise_gap >= -1e-9);
    assert!(verify_weak_solution(&traj, &data, &pot, &Tolerances::default()).unwrap().holds);

    let mut shifted = traj.clone();
    shifted.w.iter_mut().flatten().for_each(|w| *w += 1.0);
    let v = verify_weak_solution(&shifted, &data, &pot, &Tolerances::default()).unwrap();
    assert!(!v.holds);
    // ½|Q| with |Q| = 0.1
    assert!((v.pointwise_gap - 0.05).abs() < 1e-4, "{}", v.pointwise_gap);
}

#[test]
fn unregularized_functional_of_the_heat_solution_vanishes() {
    let data = heat(50);
    let pot = PotentialSpec::quadratic();
    let (_, report) = continuation_solve(&data, &pot, &SolverConfig::default()).unwrap();
    assert!((report.functional - report.pointwise_gap).abs() < 1e-9);
}

#[test]
fn non_coercive_potential_is_warned_about() {
    let data = line(16, 0.1, 10, &FieldPreset::zero(), &gaussian(0.5, 0.1));
    let cfg = SolverConfig {
        lambda_schedule: vec![1e-1],
        sigma_schedule: vec![1e-1],
        ..SolverConfig::default()
    };
    let (_, report) = continuation_solve(&data, &PotentialSpec::abs_value(), &cfg).unwrap();
    assert!(report.warnings.iter().any(|w| w.contains("coercive")), "{:?}", report.warnings);
}

#[test]
fn config_validation_names_fields() {
    let bad = SolverConfig {
        lambda_schedule: vec![1e-2, 1e-1],
        grad_tol: 0.0,
        shrink: 1.0,
        ..SolverConfig::default()
    };
    let fields: Vec<_> = bad.validate().into_iter().map(|(f, _)| f).collect();
    assert_eq!(fields, ["lambda_schedule", "grad_tol", "shrink"]);
    assert!(SolverConfig::default().validate().is_empty());
    assert_eq!(SolverConfig::default().stages()[..2], [(1e-1, 1e-1), (1e-1, 1e-2)]);
}

fn small() -> weakdiff::state::ProblemData {
    line(8, 0.4, 5, &gaussian(0.3, 0.3), &gaussian(0.5, 0.2))
}

fn flux() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-2.0..2.0f64, 9), 5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn functional_matches_gap_quadrature(w in flux(), family in 0usize..4) {
        let data = small();
        let pot = &admissible_families()[family];
        let reg = RegularizedPotential::new(pot, 1e-2, 1e-2).unwrap();
        let integrand = Integrand::Regularized(reg);
        let value = eval_functional(&w, &data, &integrand).unwrap();
        let traj = integrate_state(&w, &data).unwrap();
        let gap = pointwise_gap(&traj, &data, &integrand).unwrap().total;
        prop_assert!(value >= -1e-9 && gap >= -1e-9);
        prop_assert!((value - gap).abs() <= 1e-9 * (1.0 + gap.abs()), "{} vs {}", value, gap);
    }

    #[test]
    fn reduced_functional_is_convex(w1 in flux(), w2 in flux(), theta in 0.01..0.99f64, family in 0usize..4) {
        let data = small();
        let pot = &admissible_families()[family];
        let reg = RegularizedPotential::new(pot, 1e-2, 1e-2).unwrap();
        let integrand = Integrand::Regularized(reg);
        let j = |w: &[Vec<f64>]| eval_functional(w, &data, &integrand).unwrap();
        let mix: Vec<Vec<f64>> = w1.iter().zip(&w2)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| theta * x + (1.0 - theta) * y).collect())
            .collect();
        let (jm, j1, j2) = (j(&mix), j(&w1), j(&w2));
        prop_assert!(jm <= theta * j1 + (1.0 - theta) * j2 + 1e-9 * (1.0 + j1.abs() + j2.abs()));
    }

    #[test]
    fn exact_gap_is_nonnegative(w in flux(), family in 0usize..4) {
        let data = small();
        let pot = &admissible_families()[family];
        let traj = integrate_state(&w, &data).unwrap();
        let gap = pointwise_gap(&traj, &data, &Integrand::Exact(pot)).unwrap();
        prop_assert!(gap.total >= -1e-9 && gap.worst >= -1e-9);
    }
}
