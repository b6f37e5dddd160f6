use gradstate::fem::FemSystem;
use gradstate::linalg::GmresOptions;
use gradstate::problems::{self, ProblemSpec, ScalarField};
use gradstate::projections::BoxSet;
use gradstate::solvers::{solve, Algorithm, KktContext, SolverConfig, SolverReport};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn system(spec: &ProblemSpec<f64>, level: usize) -> FemSystem<f64> {
    FemSystem::laplacian(&spec.mesh(level).unwrap()).unwrap()
}

fn zero_problem() -> ProblemSpec<f64> {
    ProblemSpec {
        name: "zero".into(),
        target: ScalarField::Zero,
        source: ScalarField::Zero,
        exact_control: None,
        exact_state: None,
        ..problems::example2()
    }
}

fn loose(spec: &ProblemSpec<f64>) -> ProblemSpec<f64> {
    ProblemSpec { box_set: BoxSet { lower: -1e6, upper: 1e6 }, delta: 1e12, ..spec.clone() }
}

fn dense(m: &gradstate::linalg::CsrMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m.get(i, j))
}

fn m_norm_diff(sys: &FemSystem<f64>, a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    sys.mass_norm(&d)
}

#[test]
fn zero_data_converges_at_first_iteration() {
    let spec = zero_problem();
    let sys = system(&spec, 2);
    for algo in Algorithm::ALL {
        let r = solve(algo, &spec, &sys, &SolverConfig::default()).unwrap();
        assert_eq!(r.iterations, 1, "{algo}");
        assert!(r.converged);
        assert_eq!(r.residual, 0.0, "{algo}");
        assert!(r.final_u.iter().chain(&r.final_y).all(|&v| v == 0.0));
    }
}

#[test]
fn p_subproblem_zero_right_hand_side() {
    let spec = problems::example1::<f64>();
    let sys = system(&spec, 2);
    let ctx = KktContext::new(&spec, &sys, 1.0, 1e-10).unwrap();
    let lambda = ctx.myd.clone();
    let mu: Vec<f64> = ctx.mf.iter().map(|v| ctx.alpha * v).collect();
    let pc = ctx.preconditioner().unwrap();
    let sub = ctx.solve_p_subproblem(&pc, &lambda, &mu, &GmresOptions::default(), None).unwrap();
    assert!(sub.p.iter().chain(&sub.y).all(|v| v.abs() < 1e-14));
}

#[test]
fn p_subproblem_residual_oracle() {
    let spec = problems::example1::<f64>();
    let sys = system(&spec, 2);
    let ctx = KktContext::new(&spec, &sys, 0.1, 1e-10).unwrap();
    let n = ctx.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let lambda: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.1..0.1)).collect();
    let mu: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.1..0.1)).collect();
    let tol = 1e-10;
    let opts = GmresOptions { tol, ..GmresOptions::default() };
    let sub = ctx.solve_p_subproblem(&ctx.preconditioner().unwrap(), &lambda, &mu, &opts, None).unwrap();
    assert!(sub.converged);
    // [[M, -αK], [K, M]] [p; y] = [μ - αMf; My_d - λ]
    let (m, k) = (&sys.mass, &sys.stiffness);
    let (mp, ky, kp, my) = (m.mul_vec(&sub.p), k.mul_vec(&sub.y), k.mul_vec(&sub.p), m.mul_vec(&sub.y));
    let mut res = 0.0;
    let mut rhs = 0.0;
    for i in 0..n {
        let b1 = mu[i] - ctx.alpha * ctx.mf[i];
        let b2 = ctx.myd[i] - lambda[i];
        res += (mp[i] - ctx.alpha * ky[i] - b1).powi(2) + (kp[i] + my[i] - b2).powi(2);
        rhs += b1 * b1 + b2 * b2;
    }
    assert!(res.sqrt() <= tol * rhs.sqrt() * 1.0001);
    assert!(sub.gradient_error < 1e-6);
}

#[test]
fn unconstrained_instance_matches_direct_kkt_solve() {
    let spec = loose(&problems::example1::<f64>());
    let sys = system(&spec, 2);
    let ctx = KktContext::new(&spec, &sys, spec.alpha, 1e-10).unwrap();
    let n = ctx.dim();
    let (m, k) = (dense(&sys.mass), dense(&sys.stiffness));
    let mut a = DMatrix::zeros(3 * n, 3 * n);
    a.view_mut((0, 0), (n, n)).copy_from(&m);
    a.view_mut((0, 2 * n), (n, n)).copy_from(&k);
    a.view_mut((n, n), (n, n)).copy_from(&(&m * spec.alpha));
    a.view_mut((n, 2 * n), (n, n)).copy_from(&(-&m));
    a.view_mut((2 * n, 0), (n, n)).copy_from(&k);
    a.view_mut((2 * n, n), (n, n)).copy_from(&(-&m));
    let mut b = DVector::zeros(3 * n);
    b.rows_mut(0, n).copy_from(&DVector::from_column_slice(&ctx.myd));
    b.rows_mut(2 * n, n).copy_from(&DVector::from_column_slice(&ctx.mf));
    let x = a.lu().solve(&b).unwrap();
    let u_ref: Vec<f64> = x.rows(n, n).iter().copied().collect();
    let y_ref: Vec<f64> = x.rows(0, n).iter().copied().collect();

    let cfg = SolverConfig { outer_tol: 1e-10, ..SolverConfig::default() };
    let r = solve(Algorithm::Dabcd, &spec, &sys, &cfg).unwrap();
    assert!(r.converged);
    assert!(m_norm_diff(&sys, &r.final_u, &u_ref) < 1e-6);
    assert!(m_norm_diff(&sys, &r.final_y, &y_ref) < 1e-6);
    // αMu - Mp = 0
    let s: Vec<f64> = (0..n).map(|i| spec.alpha * r.final_u[i] - r.final_p[i]).collect();
    assert!(sys.mass_norm(&s) < 1e-6);
}

#[test]
fn dual_objective_vanishes_at_zero() {
    let spec = problems::example1::<f64>();
    let sys = system(&spec, 2);
    let zero_f = ProblemSpec { source: ScalarField::Zero, ..spec.clone() };
    let ctx = KktContext::new(&zero_f, &sys, 1.0, 1e-10).unwrap();
    let z = vec![0.0; ctx.dim()];
    assert!(ctx.dual_objective(&z, &z, &z).unwrap().abs() < 1e-12);
    let zero = zero_problem();
    let ctx = KktContext::new(&zero, &sys, 1.0, 1e-10).unwrap();
    assert_eq!(ctx.dual_objective(&z, &z, &z).unwrap(), 0.0);
}

/// Projected gradient on the reduced control problem `min_u J(S(u), u)`, `u ∈ [a, b]`,
/// with the gradient constraint switched off; dense linear algebra throughout.
fn reduced_qp_oracle(ctx: &KktContext<f64>) -> (Vec<f64>, f64) {
    let n = ctx.dim();
    let m = dense(&ctx.sys.mass);
    let k_inv = dense(&ctx.sys.stiffness).try_inverse().unwrap();
    let s = &k_inv * &m;
    let y0 = &s * DVector::from_column_slice(&ctx.f);
    let yd = DVector::from_column_slice(&ctx.yd);
    let h = s.transpose() * &m * &s + &m * ctx.alpha;
    let g0 = s.transpose() * &m * (&y0 - &yd);
    let step = 1.0 / h.clone().symmetric_eigen().eigenvalues.max();
    let mut u = DVector::zeros(n);
    for _ in 0..200_000 {
        let grad = &h * &u + &g0;
        let next = (&u - grad * step).map(|v| v.clamp(ctx.box_set.lower, ctx.box_set.upper));
        let done = (&next - &u).norm() < 1e-15;
        u = next;
        if done {
            break;
        }
    }
    let y = &s * &u + &y0;
    let yv: Vec<f64> = y.iter().copied().collect();
    let uv: Vec<f64> = u.iter().copied().collect();
    let j = ctx.primal_objective(&yv, &uv);
    (uv, j)
}

#[test]
fn strong_duality_against_dense_qp() {
    let spec = ProblemSpec { delta: 1e12, ..problems::example2::<f64>() };
    let sys = system(&spec, 1);
    assert!(sys.num_dofs() <= 60);
    let ctx = KktContext::new(&spec, &sys, spec.alpha, 1e-12).unwrap();
    let (u_ref, j_ref) = reduced_qp_oracle(&ctx);
    let cfg = SolverConfig { outer_tol: 1e-9, max_iter: 5000, ..SolverConfig::default() };
    let r = solve(Algorithm::Dabcd, &spec, &sys, &cfg).unwrap();
    assert!(r.converged);
    let f = *r.objective_history.last().unwrap();
    assert!((f + j_ref).abs() < 1e-7 * (1.0 + j_ref.abs()), "F = {f}, J = {j_ref}");
    assert!(m_norm_diff(&sys, &r.final_u, &u_ref) < 1e-5);
}

#[test]
fn majorization_operator_is_positive_semidefinite() {
    let spec = problems::example2::<f64>();
    for level in 0..=2 {
        let sys = system(&spec, level);
        let m_inv = dense(&sys.mass).try_inverse().unwrap();
        let n = sys.num_dofs();
        let d_lambda = DMatrix::identity(n, n) * sys.sigma - &m_inv;
        let w_inv = DMatrix::from_diagonal(&DVector::from_iterator(n, sys.lumped.iter().map(|w| 1.0 / w)));
        let d_mu = (w_inv * sys.c_n - &m_inv) / spec.alpha;
        for d in [d_lambda, d_mu] {
            let scale = d.norm();
            assert!(d.symmetric_eigen().eigenvalues.min() >= -1e-12 * scale, "level {level}");
        }
    }
}

fn converged_point(spec: &ProblemSpec<f64>, sys: &FemSystem<f64>) -> SolverReport<f64> {
    let cfg = SolverConfig { outer_tol: 1e-8, max_iter: 3000, ..SolverConfig::default() };
    solve(Algorithm::Dabcd, spec, sys, &cfg).unwrap()
}

#[test]
fn eta_d_perturbation_band() {
    let spec = problems::example2::<f64>();
    let sys = system(&spec, 2);
    let ctx = KktContext::new(&spec, &sys, spec.alpha, 1e-10).unwrap();
    let r = converged_point(&spec, &sys);
    assert!(r.converged);
    let base = ctx.residual_eta_d(&r.final_y, &r.final_u, &r.final_p, &r.final_lambda, &r.final_mu).unwrap();
    assert!(base < 1e-8);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut bump = |v: &[f64]| -> Vec<f64> { v.iter().map(|x| x + 1e-3 * rng.gen_range(-1.0..1.0)).collect() };
    let (y, u, p) = (bump(&r.final_y), bump(&r.final_u), bump(&r.final_p));
    let eta = ctx.residual_eta_d(&y, &u, &p, &r.final_lambda, &r.final_mu).unwrap();
    assert!((1e-5..=1e-1).contains(&eta), "{eta}");
}

#[test]
fn eta_c_and_eta_h_perturbation_band() {
    let spec = problems::example2::<f64>();
    let sys = system(&spec, 2);
    let ctx = KktContext::new(&spec, &sys, spec.alpha, 1e-10).unwrap();
    let r = converged_point(&spec, &sys);
    let (y, u, p) = (&r.final_y, &r.final_u, &r.final_p);
    // Dual multipliers are functionals; the splitting residuals take them as is
    // for ADMM and through M for ihADMM.
    let lam_h = ctx.mass_solve(&r.final_lambda).unwrap();
    let mu_h = ctx.mass_solve(&r.final_mu).unwrap();
    let c = ctx.residual_eta_c(y, u, p, y, u, &r.final_lambda, &r.final_mu).unwrap();
    let h = ctx.residual_eta_h(y, u, p, y, u, &lam_h, &mu_h).unwrap();
    assert!(c < 1e-7 && h < 1e-7, "{c} {h}");
    let terms = ctx.eta_c_terms(y, u, p, y, u, &r.final_lambda, &r.final_mu).unwrap();
    assert_eq!((terms[3], terms[4]), (0.0, 0.0));
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let z: Vec<f64> = y.iter().map(|v| v + 1e-3 * rng.gen_range(-1.0..1.0)).collect();
    let up: Vec<f64> = u.iter().map(|v| v + 1e-3 * rng.gen_range(-1.0..1.0)).collect();
    let c = ctx.residual_eta_c(y, &up, p, &z, u, &r.final_lambda, &r.final_mu).unwrap();
    assert!((1e-5..=1e-1).contains(&c), "{c}");
    let h = ctx.residual_eta_h(y, &up, p, &z, u, &lam_h, &mu_h).unwrap();
    assert!(h > 1e-7 && h <= 1e-1, "{h}");
}

#[test]
fn update_lambda_trivial_cases() {
    let spec = zero_problem();
    let sys = system(&spec, 2);
    let ctx = KktContext::new(&spec, &sys, 1.0, 1e-10).unwrap();
    let z = vec![0.0; ctx.dim()];
    assert!(ctx.update_lambda(&z, &z).unwrap().lambda.iter().all(|&v| v == 0.0));
    assert!(ctx.update_mu(&z, &z).unwrap().mu.iter().all(|&v| v == 0.0));
    // q/α inside the box gives μ̃ = 0
    let inside = vec![0.2 * ctx.alpha; ctx.dim()];
    assert!(ctx.update_mu(&inside, &z).unwrap().mu.iter().all(|&v| v.abs() < 1e-15));
}

#[test]
fn recover_control_basics() {
    let spec = problems::example2::<f64>();
    let sys = system(&spec, 2);
    let ctx = KktContext::new(&spec, &sys, 0.5, 1e-10).unwrap();
    let p: Vec<f64> = (0..ctx.dim()).map(|i| i as f64 * 0.01).collect();
    let z = vec![0.0; ctx.dim()];
    let u = ctx.recover_control(&p, &z).unwrap();
    assert!(u.iter().zip(&p).all(|(a, b)| (a - 2.0 * b).abs() < 1e-15));
    assert!(ctx.recover_control(&z, &z).unwrap().iter().all(|&v| v == 0.0));
}

#[test]
fn inexactness_certificates_respect_schedule() {
    let spec = problems::example1::<f64>();
    let sys = system(&spec, 3);
    let r = solve(Algorithm::Dabcd, &spec, &sys, &SolverConfig::default()).unwrap();
    for (k, (&err, &eps)) in r.subproblem_errors.iter().zip(&r.eps_schedule).enumerate() {
        assert!(err <= eps, "iteration {}: {err} > {eps}", k + 1);
    }
    assert_eq!(r.residual, *r.residual_history.last().unwrap());
}

#[test]
fn baselines_satisfy_dual_metric_loosely() {
    let spec = problems::example2::<f64>();
    let sys = system(&spec, 2);
    let ctx = KktContext::new(&spec, &sys, spec.alpha, 1e-10).unwrap();
    let cfg = SolverConfig { max_iter: 2000, ..SolverConfig::default() };
    let r = solve(Algorithm::Admm, &spec, &sys, &cfg).unwrap();
    assert!(r.converged);
    let eta = ctx.residual_eta_d(&r.final_y, &r.final_u, &r.final_p, &r.final_lambda, &r.final_mu).unwrap();
    assert!(eta <= 10.0 * cfg.outer_tol, "{eta}");
}

#[test]
fn feasible_companions_lie_in_the_constraint_sets() {
    let spec = problems::example2::<f64>();
    let sys = system(&spec, 2);
    let cfg = SolverConfig { max_iter: 2000, ..SolverConfig::default() };
    for algo in Algorithm::ALL {
        let r = solve(algo, &spec, &sys, &cfg).unwrap();
        assert!(sys.grad_metric.quad_form(&r.final_z) <= spec.delta * (1.0 + 1e-9), "{algo}");
        assert!(r.final_w.iter().all(|&w| w >= spec.box_set.lower && w <= spec.box_set.upper), "{algo}");
        if algo == Algorithm::Dabcd {
            assert!(m_norm_diff(&sys, &r.final_z, &r.final_y) < 1e-2);
            assert!(m_norm_diff(&sys, &r.final_w, &r.final_u) < 1e-2);
        }
    }
}

#[test]
fn max_iter_reached_is_flagged() {
    let spec = problems::example2::<f64>();
    let sys = system(&spec, 2);
    let cfg = SolverConfig { max_iter: 1, ..SolverConfig::default() };
    for algo in Algorithm::ALL {
        let r = solve(algo, &spec, &sys, &cfg).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(!r.converged);
        assert!(r.residual >= cfg.outer_tol);
    }
}

#[test]
fn report_json_round_trip() {
    let spec = problems::example2::<f64>();
    let sys = system(&spec, 1);
    let r = solve(Algorithm::Ihadmm, &spec, &sys, &SolverConfig::default()).unwrap();
    let text = r.to_json().unwrap();
    for key in [
        "\"iterations\"",
        "\"residual_history\"",
        "\"objective_history\"",
        "\"wall_time_seconds\"",
        "\"algorithm\"",
        "\"level\"",
        "\"alpha\"",
    ] {
        assert!(text.contains(key), "{key}");
    }
    assert_eq!(SolverReport::<f64>::from_json(&text).unwrap(), r);
}

#[test]
fn solves_are_deterministic() {
    let spec = problems::example1::<f64>();
    let sys = system(&spec, 2);
    for algo in Algorithm::ALL {
        let a = solve(algo, &spec, &sys, &SolverConfig::default()).unwrap();
        let b = solve(algo, &spec, &sys, &SolverConfig::default()).unwrap();
        assert_eq!(a.residual_history, b.residual_history);
        assert_eq!(a.final_u, b.final_u);
    }
}

#[test]
fn single_precision_solve() {
    let spec = problems::example2::<f32>();
    let sys = FemSystem::laplacian(&spec.mesh(2).unwrap()).unwrap();
    let cfg = SolverConfig { outer_tol: 1e-3, ..SolverConfig::default() };
    let r = solve(Algorithm::Dabcd, &spec, &sys, &cfg).unwrap();
    assert!(r.converged, "{}", r.residual);
}
