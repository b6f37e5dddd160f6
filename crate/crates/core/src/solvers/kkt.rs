use crate::error::{check_len, Result};
use crate::fem::FemSystem;
use crate::linalg::{gmres, spd_factorize, GmresOptions, SaddleOperator, SaddlePreconditioner, SpdFactor};
use crate::problems::ProblemSpec;
use crate::projections::{
    project_box, project_ellipsoid, prox_support_ellipsoid, support_function_box, support_function_ellipsoid, BoxSet,
    EllipsoidSet,
};
use crate::scalar::vec::{dot, norm2, sub};
use crate::scalar::Scalar;

/// Discrete problem data shared by all three methods: nodal data, their mass
/// images, the constraint sets and a factorization of the mass matrix.
#[derive(Debug, Clone)]
pub struct KktContext<'a, T> {
    pub sys: &'a FemSystem<T>,
    pub alpha: T,
    pub yd: Vec<T>,
    pub f: Vec<T>,
    pub myd: Vec<T>,
    pub mf: Vec<T>,
    pub ellipsoid: EllipsoidSet<T>,
    pub box_set: BoxSet<T>,
    pub mass_factor: SpdFactor<T>,
    pub projection_tol: T,
}

#[derive(Debug, Clone)]
pub struct PSubproblem<T> {
    pub p: Vec<T>,
    pub y: Vec<T>,
    /// Relative residual of the saddle system.
    pub relres: T,
    pub iterations: usize,
    pub converged: bool,
    /// `‖∇_p‖` of the p-subproblem objective at `p`.
    pub gradient_error: T,
}

#[derive(Debug, Clone)]
pub struct LambdaUpdate<T> {
    pub lambda: Vec<T>,
    /// `Π_C(σ d)`, the state estimate in `C` paired with `lambda`.
    pub state: Vec<T>,
    pub newton_iters: usize,
    /// Residual of the mass solve for `d`.
    pub solve_residual: T,
}

#[derive(Debug, Clone)]
pub struct MuUpdate<T> {
    pub mu: Vec<T>,
    /// `Π_S(q / α)`, the control estimate in `S` paired with `mu`.
    pub control: Vec<T>,
    /// Residual of the mass solve for `s`.
    pub solve_residual: T,
}

impl<'a, T: Scalar> KktContext<'a, T> {
    pub fn new(problem: &ProblemSpec<T>, sys: &'a FemSystem<T>, alpha: T, projection_tol: T) -> Result<Self> {
        problem.with_alpha(alpha).validate()?;
        let (yd, f) = problem.data_vectors(sys)?;
        Self::from_data(sys, alpha, yd, f, problem.box_set, problem.delta, projection_tol)
    }

    pub fn from_data(
        sys: &'a FemSystem<T>,
        alpha: T,
        yd: Vec<T>,
        f: Vec<T>,
        box_set: BoxSet<T>,
        delta: T,
        projection_tol: T,
    ) -> Result<Self> {
        check_len(sys.num_dofs(), yd.len())?;
        check_len(sys.num_dofs(), f.len())?;
        Ok(Self {
            sys,
            alpha,
            myd: sys.mass.mul_vec(&yd),
            mf: sys.mass.mul_vec(&f),
            yd,
            f,
            ellipsoid: EllipsoidSet::new(sys.grad_metric.clone(), delta)?,
            box_set: BoxSet::new(box_set.lower, box_set.upper)?,
            mass_factor: spd_factorize(&sys.mass)?,
            projection_tol,
        })
    }

    pub fn dim(&self) -> usize {
        self.sys.num_dofs()
    }

    pub fn mass_solve(&self, b: &[T]) -> Result<Vec<T>> {
        self.mass_factor.solve(b)
    }

    /// `vᵀ M⁻¹ v`
    pub fn inverse_mass_sq(&self, v: &[T]) -> Result<T> {
        Ok(dot(v, &self.mass_solve(v)?))
    }

    pub fn preconditioner(&self) -> Result<SaddlePreconditioner<T>> {
        SaddlePreconditioner::new(&self.sys.mass, &self.sys.stiffness, self.alpha)
    }

    /// Solves `[[M, -αK], [K, M]] [p; y] = [μ - αMf; My_d - λ]` by
    /// right-preconditioned GMRES to relative residual `tol`.
    pub fn solve_p_subproblem(
        &self,
        precond: &SaddlePreconditioner<T>,
        lambda: &[T],
        mu: &[T],
        opts: &GmresOptions<T>,
        warm: Option<&[T]>,
    ) -> Result<PSubproblem<T>> {
        let n = self.dim();
        check_len(n, lambda.len())?;
        check_len(n, mu.len())?;
        let rhs = self.p_rhs(lambda, mu);
        let op = SaddleOperator::new(&self.sys.mass, &self.sys.stiffness, self.alpha)?;
        let out = gmres(&op, precond, &rhs, warm, opts)?;
        let (p, y) = out.x.split_at(n);
        let gradient_error = norm2(&self.p_gradient(p, lambda, mu)?);
        Ok(PSubproblem {
            p: p.to_vec(),
            y: y.to_vec(),
            relres: out.relative_residual,
            iterations: out.iterations,
            converged: out.converged,
            gradient_error,
        })
    }

    pub fn p_rhs(&self, lambda: &[T], mu: &[T]) -> Vec<T> {
        let top = (0..self.dim()).map(|i| mu[i] - self.alpha * self.mf[i]);
        let bottom = (0..self.dim()).map(|i| self.myd[i] - lambda[i]);
        top.chain(bottom).collect()
    }

    /// `K M⁻¹ (K p - M y_d + λ) + (1/α)(M p - μ) + M f`
    pub fn p_gradient(&self, p: &[T], lambda: &[T], mu: &[T]) -> Result<Vec<T>> {
        let kp = self.sys.stiffness.mul_vec(p);
        let r: Vec<T> = (0..self.dim()).map(|i| kp[i] - self.myd[i] + lambda[i]).collect();
        let kmr = self.sys.stiffness.mul_vec(&self.mass_solve(&r)?);
        let mp = self.sys.mass.mul_vec(p);
        let inv_alpha = self.alpha.recip();
        Ok((0..self.dim()).map(|i| kmr[i] + inv_alpha * (mp[i] - mu[i]) + self.mf[i]).collect())
    }

    /// `λ̃ = d - (1/σ) Π_C(σ d)` with `M d = (1/σ) M y_d + M λ - (1/σ)(K p̃ + λ)`.
    pub fn update_lambda(&self, p_tilde: &[T], lambda_k: &[T]) -> Result<LambdaUpdate<T>> {
        check_len(self.dim(), p_tilde.len())?;
        check_len(self.dim(), lambda_k.len())?;
        let sigma = self.sys.sigma;
        let inv_sigma = sigma.recip();
        let kp = self.sys.stiffness.mul_vec(p_tilde);
        let ml = self.sys.mass.mul_vec(lambda_k);
        let rhs: Vec<T> =
            (0..self.dim()).map(|i| inv_sigma * self.myd[i] + ml[i] - inv_sigma * (kp[i] + lambda_k[i])).collect();
        let d = self.mass_solve(&rhs)?;
        let solve_residual = norm2(&sub(&self.sys.mass.mul_vec(&d), &rhs));
        let (lambda, proj) = prox_support_ellipsoid(&d, sigma, &self.ellipsoid, self.projection_tol)?;
        Ok(LambdaUpdate { lambda, newton_iters: proj.newton_iters, state: proj.x, solve_residual })
    }

    /// `μ̃ = (1/c_n) W (q - α Π_S(q/α))` with `q = p̃ + c_n W⁻¹ μ - s`, `M s = μ`.
    pub fn update_mu(&self, p_tilde: &[T], mu_k: &[T]) -> Result<MuUpdate<T>> {
        check_len(self.dim(), p_tilde.len())?;
        check_len(self.dim(), mu_k.len())?;
        let c = self.sys.c_n;
        let w = &self.sys.lumped;
        let s = self.mass_solve(mu_k)?;
        let solve_residual = norm2(&sub(&self.sys.mass.mul_vec(&s), mu_k));
        let q: Vec<T> = (0..self.dim()).map(|i| p_tilde[i] + c * mu_k[i] / w[i] - s[i]).collect();
        let inv_alpha = self.alpha.recip();
        let scaled: Vec<T> = q.iter().map(|&v| v * inv_alpha).collect();
        let proj = project_box(&scaled, &self.box_set);
        let mu = (0..self.dim()).map(|i| w[i] / c * (q[i] - self.alpha * proj[i])).collect();
        Ok(MuUpdate { mu, control: proj, solve_residual })
    }

    /// `u = (1/α)(p - M⁻¹ μ)`
    pub fn recover_control(&self, p: &[T], mu: &[T]) -> Result<Vec<T>> {
        check_len(self.dim(), p.len())?;
        let s = self.mass_solve(mu)?;
        let inv_alpha = self.alpha.recip();
        Ok(p.iter().zip(&s).map(|(&pi, &si)| inv_alpha * (pi - si)).collect())
    }

    /// `F(p, λ, μ) = ½‖Kp + λ - My_d‖²_{M⁻¹} + (1/2α)‖Mp - μ‖²_{M⁻¹} + δ*_C(λ) + δ*_S(μ)
    /// + (Mf, p) - ½‖y_d‖²_M`
    pub fn dual_objective(&self, p: &[T], lambda: &[T], mu: &[T]) -> Result<T> {
        check_len(self.dim(), p.len())?;
        let half = T::lit(0.5);
        let kp = self.sys.stiffness.mul_vec(p);
        let mp = self.sys.mass.mul_vec(p);
        let a: Vec<T> = (0..self.dim()).map(|i| kp[i] + lambda[i] - self.myd[i]).collect();
        let b: Vec<T> = (0..self.dim()).map(|i| mp[i] - mu[i]).collect();
        Ok(half * self.inverse_mass_sq(&a)?
            + half / self.alpha * self.inverse_mass_sq(&b)?
            + support_function_ellipsoid(lambda, &self.ellipsoid)?
            + support_function_box(mu, &self.box_set)
            + dot(&self.mf, p)
            - half * dot(&self.yd, &self.myd))
    }

    /// `J(y, u) = ½‖y - y_d‖²_M + (α/2)‖u‖²_M`
    pub fn primal_objective(&self, y: &[T], u: &[T]) -> T {
        let half = T::lit(0.5);
        let e = sub(y, &self.yd);
        half * self.sys.mass.quad_form(&e) + half * self.alpha * self.sys.mass.quad_form(u)
    }

    fn project_c(&self, v: &[T]) -> Result<Vec<T>> {
        Ok(project_ellipsoid(v, &self.ellipsoid, self.projection_tol)?.x)
    }

    /// Terms `r_1..r_4` of the dual method's residual.
    pub fn eta_d_terms(&self, y: &[T], u: &[T], p: &[T], lambda: &[T], mu: &[T]) -> Result<[T; 4]> {
        let n = self.dim();
        for v in [y, u, p, lambda, mu] {
            check_len(n, v.len())?;
        }
        let one = T::one();
        let sys = self.sys;
        let my = sys.mass.mul_vec(y);
        let kp = sys.stiffness.mul_vec(p);
        let r1: Vec<T> = (0..n).map(|i| my[i] - self.myd[i] + kp[i] + lambda[i]).collect();
        let y_lam: Vec<T> = (0..n).map(|i| y[i] + lambda[i]).collect();
        let r2 = sub(y, &self.project_c(&y_lam)?);
        let u_mu: Vec<T> = (0..n).map(|i| u[i] + mu[i]).collect();
        let r3 = sub(u, &project_box(&u_mu, &self.box_set));
        let r4 = self.state_residual(y, u);
        Ok([
            norm2(&r1) / (one + norm2(&self.myd)),
            norm2(&r2) / (one + norm2(y)),
            norm2(&r3) / (one + norm2(u)),
            norm2(&r4) / (one + norm2(&self.mf)),
        ])
    }

    pub fn residual_eta_d(&self, y: &[T], u: &[T], p: &[T], lambda: &[T], mu: &[T]) -> Result<T> {
        Ok(max_of(&self.eta_d_terms(y, u, p, lambda, mu)?))
    }

    /// `K y - M u - M f`
    fn state_residual(&self, y: &[T], u: &[T]) -> Vec<T> {
        let ky = self.sys.stiffness.mul_vec(y);
        let mu = self.sys.mass.mul_vec(u);
        (0..self.dim()).map(|i| ky[i] - mu[i] - self.mf[i]).collect()
    }

    /// Terms `γ_1..γ_7` of the ADMM residual.
    #[allow(clippy::too_many_arguments)]
    pub fn eta_c_terms(&self, y: &[T], u: &[T], p: &[T], z: &[T], w: &[T], lambda: &[T], mu: &[T]) -> Result<[T; 7]> {
        self.splitting_terms(y, u, p, z, w, lambda, mu, false)
    }

    /// Terms `ζ_1..ζ_7` of the ihADMM residual (mass-weighted multipliers and gaps).
    #[allow(clippy::too_many_arguments)]
    pub fn eta_h_terms(&self, y: &[T], u: &[T], p: &[T], z: &[T], w: &[T], lambda: &[T], mu: &[T]) -> Result<[T; 7]> {
        self.splitting_terms(y, u, p, z, w, lambda, mu, true)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn residual_eta_c(&self, y: &[T], u: &[T], p: &[T], z: &[T], w: &[T], lambda: &[T], mu: &[T]) -> Result<T> {
        Ok(max_of(&self.eta_c_terms(y, u, p, z, w, lambda, mu)?))
    }

    #[allow(clippy::too_many_arguments)]
    pub fn residual_eta_h(&self, y: &[T], u: &[T], p: &[T], z: &[T], w: &[T], lambda: &[T], mu: &[T]) -> Result<T> {
        Ok(max_of(&self.eta_h_terms(y, u, p, z, w, lambda, mu)?))
    }

    #[allow(clippy::too_many_arguments)]
    fn splitting_terms(
        &self,
        y: &[T],
        u: &[T],
        p: &[T],
        z: &[T],
        w: &[T],
        lambda: &[T],
        mu: &[T],
        weighted: bool,
    ) -> Result<[T; 7]> {
        let n = self.dim();
        for v in [y, u, p, z, w, lambda, mu] {
            check_len(n, v.len())?;
        }
        let one = T::one();
        let m = &self.sys.mass;
        let (lam, muw) = if weighted { (m.mul_vec(lambda), m.mul_vec(mu)) } else { (lambda.to_vec(), mu.to_vec()) };
        let my = m.mul_vec(y);
        let mu_ = m.mul_vec(u);
        let mp = m.mul_vec(p);
        let kp = self.sys.stiffness.mul_vec(p);
        let g1: Vec<T> = (0..n).map(|i| my[i] - self.myd[i] + kp[i] + lam[i]).collect();
        let g2: Vec<T> = (0..n).map(|i| self.alpha * mu_[i] - mp[i] + muw[i]).collect();
        let g3 = self.state_residual(y, u);
        let (g4, g5) = if weighted { (m.mul_vec(&sub(y, z)), m.mul_vec(&sub(u, w))) } else { (sub(y, z), sub(u, w)) };
        let z_lam: Vec<T> = (0..n).map(|i| z[i] + lam[i]).collect();
        let g6 = sub(z, &self.project_c(&z_lam)?);
        let w_mu: Vec<T> = (0..n).map(|i| w[i] + muw[i]).collect();
        let g7 = sub(w, &project_box(&w_mu, &self.box_set));
        Ok([
            norm2(&g1) / (one + norm2(&self.myd)),
            norm2(&g2) / (one + norm2(&mu_)),
            norm2(&g3) / (one + norm2(&self.mf)),
            norm2(&g4) / (one + norm2(y)),
            norm2(&g5) / (one + norm2(u)),
            norm2(&g6) / (one + norm2(z)),
            norm2(&g7) / (one + norm2(w)),
        ])
    }
}

pub(crate) fn max_of<T: Scalar>(terms: &[T]) -> T {
    terms.iter().fold(T::zero(), |m, &v| m.max(v))
}
