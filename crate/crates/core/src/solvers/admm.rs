use std::time::Instant;

use super::kkt::KktContext;
use super::{effective_alpha, Algorithm, SolverConfig, SolverReport};
use crate::error::Result;
use crate::fem::FemSystem;
use crate::linalg::{interleaved_order, CsrMatrix, SkylineLdl};
use crate::problems::ProblemSpec;
use crate::projections::{project_box, project_ellipsoid};
use crate::scalar::Scalar;

/// Classical ADMM on the primal problem with splitting copies `z = y`, `w = u`.
///
/// Step 1 solves the coupled system
/// `[[M + σI, 0, K], [0, αM + σI, -M], [K, -M, 0]] [y; u; p] = [My_d - λ + σz; σw - μ; Mf]`
/// with one sparse `LDLᵀ` factorization computed at setup.
pub fn admm<T: Scalar>(problem: &ProblemSpec<T>, sys: &FemSystem<T>, config: &SolverConfig) -> Result<SolverReport<T>> {
    config.validate()?;
    let setup = Instant::now();
    let alpha = effective_alpha(problem, config);
    let sigma = T::lit(config.admm_sigma);
    let ctx = KktContext::new(problem, sys, alpha, T::lit(config.projection_tol))?;
    let n = ctx.dim();
    let (m, k) = (&sys.mass, &sys.stiffness);
    let a11 = m.shifted(sigma);
    let a22 = m.scaled(alpha).shifted(sigma);
    let neg_m = m.scaled(-T::one());
    let block = CsrMatrix::from_blocks(
        &[n, n, n],
        &[(0, 0, &a11), (0, 2, k), (1, 1, &a22), (1, 2, &neg_m), (2, 0, k), (2, 1, &neg_m)],
    )?;
    let factor = SkylineLdl::factor_indefinite(&block, interleaved_order(m, 3))?;
    let mut report = SolverReport::new(Algorithm::Admm, problem, sys, alpha);
    report.setup_time_seconds = setup.elapsed().as_secs_f64();

    let start = Instant::now();
    let zeros = vec![T::zero(); n];
    let (mut z, mut w, mut lambda, mut mu) = (zeros.clone(), zeros.clone(), zeros.clone(), zeros);
    let inv_sigma = sigma.recip();
    for it in 1..=config.max_iter {
        let rhs: Vec<T> = (0..n)
            .map(|i| ctx.myd[i] - lambda[i] + sigma * z[i])
            .chain((0..n).map(|i| sigma * w[i] - mu[i]))
            .chain(ctx.mf.iter().copied())
            .collect();
        let x = factor.solve_refined(&block, &rhs, 1)?;
        let (y, rest) = x.split_at(n);
        let (u, p) = rest.split_at(n);
        let zy: Vec<T> = (0..n).map(|i| y[i] + inv_sigma * lambda[i]).collect();
        let proj = project_ellipsoid(&zy, &ctx.ellipsoid, ctx.projection_tol)?;
        z = proj.x;
        let wu: Vec<T> = (0..n).map(|i| u[i] + inv_sigma * mu[i]).collect();
        w = project_box(&wu, &ctx.box_set);
        for i in 0..n {
            lambda[i] += sigma * (y[i] - z[i]);
            mu[i] += sigma * (u[i] - w[i]);
        }
        let eta = ctx.residual_eta_c(y, u, p, &z, &w, &lambda, &mu)?;
        report.iterations = it;
        report.residual = eta.as_f64();
        report.residual_history.push(eta.as_f64());
        report.newton_iters.push(proj.newton_iters);
        if config.record_objective {
            report.objective_history.push(ctx.primal_objective(y, u).as_f64());
        }
        let converged = eta < T::lit(config.outer_tol);
        if converged || it == config.max_iter {
            report.converged = converged;
            report.final_y = y.to_vec();
            report.final_u = u.to_vec();
            report.final_p = p.to_vec();
            break;
        }
    }
    report.final_lambda = lambda;
    report.final_mu = mu;
    report.final_z = z;
    report.final_w = w;
    report.wall_time_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}
