use std::time::Instant;

use super::kkt::KktContext;
use super::{effective_alpha, Algorithm, SolverConfig, SolverReport};
use crate::error::Result;
use crate::fem::FemSystem;
use crate::linalg::{interleaved_order, CsrMatrix, SkylineLdl};
use crate::problems::ProblemSpec;
use crate::projections::{project_box, project_ellipsoid, WeightedEllipsoid};
use crate::scalar::Scalar;

/// Inexact heterogeneous ADMM: mass-weighted multiplier terms, with the
/// splitting steps shifted by `(1/σ) W⁻¹ M` times the multipliers.
///
/// Step 1 solves `[[(1+σ)M, K], [K, -M/(α+σ)]] [y; p] = [M(y_d - λ + σz); M(σw - μ)/(α+σ) + Mf]`
/// and sets `u = (p + σw - μ)/(σ + α)`. The z-step projects in the `W` norm
/// unless `ihadmm_weighted_projection` is off.
pub fn ihadmm<T: Scalar>(
    problem: &ProblemSpec<T>,
    sys: &FemSystem<T>,
    config: &SolverConfig,
) -> Result<SolverReport<T>> {
    config.validate()?;
    let setup = Instant::now();
    let alpha = effective_alpha(problem, config);
    let sigma = T::lit(config.admm_sigma);
    let ctx = KktContext::new(problem, sys, alpha, T::lit(config.projection_tol))?;
    let n = ctx.dim();
    let (m, k) = (&sys.mass, &sys.stiffness);
    let inv_as = (alpha + sigma).recip();
    let a11 = m.scaled(T::one() + sigma);
    let a22 = m.scaled(-inv_as);
    let block = CsrMatrix::from_blocks(&[n, n], &[(0, 0, &a11), (0, 1, k), (1, 0, k), (1, 1, &a22)])?;
    let factor = SkylineLdl::factor_indefinite(&block, interleaved_order(m, 2))?;
    let weighted = match config.ihadmm_weighted_projection {
        true => Some(WeightedEllipsoid::new(&ctx.ellipsoid, &sys.lumped)?),
        false => None,
    };
    let mut report = SolverReport::new(Algorithm::Ihadmm, problem, sys, alpha);
    report.setup_time_seconds = setup.elapsed().as_secs_f64();

    let start = Instant::now();
    let zeros = vec![T::zero(); n];
    let (mut z, mut w, mut lambda, mut mu) = (zeros.clone(), zeros.clone(), zeros.clone(), zeros);
    let inv_sigma = sigma.recip();
    let w_diag = &sys.lumped;
    for it in 1..=config.max_iter {
        let top: Vec<T> = (0..n).map(|i| ctx.yd[i] - lambda[i] + sigma * z[i]).collect();
        let bottom: Vec<T> = (0..n).map(|i| inv_as * (sigma * w[i] - mu[i])).collect();
        let mb = m.mul_vec(&bottom);
        let rhs: Vec<T> = m.mul_vec(&top).into_iter().chain((0..n).map(|i| mb[i] + ctx.mf[i])).collect();
        let x = factor.solve_refined(&block, &rhs, 1)?;
        let (y, p) = x.split_at(n);
        let u: Vec<T> = (0..n).map(|i| inv_as * (p[i] + sigma * w[i] - mu[i])).collect();
        let ml = m.mul_vec(&lambda);
        let mm = m.mul_vec(&mu);
        let zy: Vec<T> = (0..n).map(|i| y[i] + inv_sigma * ml[i] / w_diag[i]).collect();
        let proj = match &weighted {
            Some(c) => c.project(&zy, ctx.projection_tol)?,
            None => project_ellipsoid(&zy, &ctx.ellipsoid, ctx.projection_tol)?,
        };
        z = proj.x;
        let wu: Vec<T> = (0..n).map(|i| u[i] + inv_sigma * mm[i] / w_diag[i]).collect();
        w = project_box(&wu, &ctx.box_set);
        for i in 0..n {
            lambda[i] += sigma * (y[i] - z[i]);
            mu[i] += sigma * (u[i] - w[i]);
        }
        let eta = ctx.residual_eta_h(y, &u, p, &z, &w, &lambda, &mu)?;
        report.iterations = it;
        report.residual = eta.as_f64();
        report.residual_history.push(eta.as_f64());
        report.newton_iters.push(proj.newton_iters);
        if config.record_objective {
            report.objective_history.push(ctx.primal_objective(y, &u).as_f64());
        }
        let converged = eta < T::lit(config.outer_tol);
        if converged || it == config.max_iter {
            report.converged = converged;
            report.final_y = y.to_vec();
            report.final_u = u;
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
