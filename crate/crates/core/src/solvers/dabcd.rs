use std::time::Instant;

use super::kkt::KktContext;
use super::{effective_alpha, Algorithm, SolverConfig, SolverReport};
use crate::error::Result;
use crate::fem::FemSystem;
use crate::linalg::GmresOptions;
use crate::problems::ProblemSpec;
use crate::scalar::vec::norm2;
use crate::scalar::Scalar;

/// Inexact accelerated block coordinate descent on the dual problem in
/// `(p, λ, μ)`, with momentum on all three blocks.
///
/// Each iteration solves the p-subproblem by preconditioned GMRES until the
/// gradient certificate is within `ε_k` (or the GMRES tolerance floor is hit),
/// then takes the closed-form λ and μ updates at the new `p̃`. The residual is
/// evaluated at the tilde iterates with the saddle-solve state `ỹ` and the
/// recovered control `ũ`.
pub fn fe_dabcd<T: Scalar>(
    problem: &ProblemSpec<T>,
    sys: &FemSystem<T>,
    config: &SolverConfig,
) -> Result<SolverReport<T>> {
    config.validate()?;
    let setup = Instant::now();
    let alpha = effective_alpha(problem, config);
    let ctx = KktContext::new(problem, sys, alpha, T::lit(config.projection_tol))?;
    let precond = ctx.preconditioner()?;
    let mut report = SolverReport::new(Algorithm::Dabcd, problem, sys, alpha);
    report.setup_time_seconds = setup.elapsed().as_secs_f64();

    let start = Instant::now();
    let n = ctx.dim();
    let zeros = vec![T::zero(); n];
    let (mut p, mut lambda, mut mu) = (zeros.clone(), zeros.clone(), zeros.clone());
    let (mut p_prev, mut lambda_prev, mut mu_prev) = (zeros.clone(), zeros.clone(), zeros);
    let mut warm: Option<Vec<T>> = None;
    let mut t = T::one();
    let floor = T::lit(config.gmres_floor);

    for k in 1..=config.max_iter {
        let eps_k = T::lit(config.eps_k(k));
        let rhs_norm = norm2(&ctx.p_rhs(&lambda, &mu)).as_f64();
        let mut opts = GmresOptions {
            tol: T::lit(config.gmres_tol(k, rhs_norm)),
            max_iter: config.gmres_max_iter,
            restart: config.gmres_restart,
        };
        let mut inner = 0;
        let sub = loop {
            let sub = ctx.solve_p_subproblem(&precond, &lambda, &mu, &opts, warm.as_deref())?;
            inner += sub.iterations;
            if sub.gradient_error <= eps_k || opts.tol <= floor {
                break sub;
            }
            warm = Some(sub.p.iter().chain(&sub.y).copied().collect());
            opts.tol = (opts.tol * T::lit(0.1)).max(floor);
        };
        warm = Some(sub.p.iter().chain(&sub.y).copied().collect());
        let lam = ctx.update_lambda(&sub.p, &lambda)?;
        let mu_up = ctx.update_mu(&sub.p, &mu)?;
        let u = ctx.recover_control(&sub.p, &mu_up.mu)?;
        let eta = ctx.residual_eta_d(&sub.y, &u, &sub.p, &lam.lambda, &mu_up.mu)?;

        report.iterations = k;
        report.residual = eta.as_f64();
        report.residual_history.push(eta.as_f64());
        report.inner_gmres_iters.push(inner);
        report.newton_iters.push(lam.newton_iters);
        report.eps_schedule.push(eps_k.as_f64());
        let err = sub.gradient_error.max(lam.solve_residual).max(mu_up.solve_residual);
        report.subproblem_errors.push(err.as_f64());
        if config.record_objective {
            report.objective_history.push(ctx.dual_objective(&sub.p, &lam.lambda, &mu_up.mu)?.as_f64());
        }

        let converged = eta < T::lit(config.outer_tol);
        let last = converged || k == config.max_iter;
        if last {
            report.converged = converged;
            report.final_y = sub.y;
            report.final_u = u;
            report.final_p = sub.p;
            report.final_lambda = lam.lambda;
            report.final_mu = mu_up.mu;
            report.final_z = lam.state;
            report.final_w = mu_up.control;
            break;
        }

        let t_next = (T::one() + (T::one() + T::lit(4.0) * t * t).sqrt()) / T::lit(2.0);
        let beta = (t - T::one()) / t_next;
        extrapolate(&mut p, &sub.p, &mut p_prev, beta);
        extrapolate(&mut lambda, &lam.lambda, &mut lambda_prev, beta);
        extrapolate(&mut mu, &mu_up.mu, &mut mu_prev, beta);
        t = t_next;
    }
    report.wall_time_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// `x = x̃ + β (x̃ - x̃_prev)`, then `x̃_prev = x̃`.
fn extrapolate<T: Scalar>(x: &mut [T], tilde: &[T], prev: &mut [T], beta: T) {
    for i in 0..x.len() {
        x[i] = tilde[i] + beta * (tilde[i] - prev[i]);
    }
    prev.copy_from_slice(tilde);
}
