//! Projections onto the control box and the gradient ellipsoid, and the support
//! functions and proximal maps built on them.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Error, Result};
use crate::linalg::{reverse_cuthill_mckee, spd_factorize, CsrMatrix, SkylineLdl, SpdFactor};
use crate::scalar::vec::{dot, norm2};
use crate::scalar::Scalar;

/// `{z : a <= z_i <= b}`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxSet<T> {
    pub lower: T,
    pub upper: T,
}

impl<T: Scalar> BoxSet<T> {
    pub fn new(lower: T, upper: T) -> Result<Self> {
        if !(lower <= upper) {
            return Err(Error::InvalidArgument(format!("empty box [{lower}, {upper}]")));
        }
        Ok(Self { lower, upper })
    }

    pub fn contains(&self, v: &[T]) -> bool {
        v.iter().all(|&x| x >= self.lower && x <= self.upper)
    }
}

pub fn project_box<T: Scalar>(v: &[T], s: &BoxSet<T>) -> Vec<T> {
    v.iter().map(|&x| x.max(s.lower).min(s.upper)).collect()
}

/// `δ*_S(μ) = Σ_i b·max(μ_i, 0) + a·min(μ_i, 0)`
pub fn support_function_box<T: Scalar>(mu: &[T], s: &BoxSet<T>) -> T {
    mu.iter().map(|&m| s.upper * m.max(T::zero()) + s.lower * m.min(T::zero())).sum()
}

/// `{z : zᵀ D z <= δ}` for SPD `D`.
#[derive(Debug, Clone)]
pub struct EllipsoidSet<T> {
    metric: CsrMatrix<T>,
    delta: T,
    factor: SpdFactor<T>,
    order: Vec<usize>,
}

impl<T: Scalar> EllipsoidSet<T> {
    pub fn new(metric: CsrMatrix<T>, delta: T) -> Result<Self> {
        if !(delta > T::zero()) {
            return Err(Error::InvalidArgument(format!("budget must be positive, got {delta}")));
        }
        let factor = spd_factorize(&metric)?;
        let order = reverse_cuthill_mckee(&metric);
        Ok(Self { metric, delta, factor, order })
    }

    pub fn metric(&self) -> &CsrMatrix<T> {
        &self.metric
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn dim(&self) -> usize {
        self.metric.nrows()
    }

    pub fn contains(&self, z: &[T]) -> bool {
        self.metric.quad_form(z) <= self.delta * (T::one() + T::lit(1e-10))
    }
}

#[derive(Debug, Clone)]
pub struct EllipsoidProjection<T> {
    pub x: Vec<T>,
    /// Multiplier of the constraint `xᵀDx <= δ`.
    pub rho: T,
    pub newton_iters: usize,
    /// Newton hit its cap and the scalar bisection produced the result.
    pub used_fallback: bool,
}

pub const DEFAULT_PROJECTION_TOL: f64 = 1e-10;
pub const NEWTON_MAX_ITER: usize = 50;

/// Euclidean projection onto the ellipsoid by Newton's method on
/// `H(x, ρ) = [x - g + 2ρDx; xᵀDx - δ] = 0`, started from `(g, 0)`.
///
/// Each Newton system is solved by block elimination with the SPD matrix
/// `I + 2ρD`. The step is halved until `ρ` stays nonnegative.
pub fn project_ellipsoid<T: Scalar>(g: &[T], c: &EllipsoidSet<T>, tol: T) -> Result<EllipsoidProjection<T>> {
    check_len(c.dim(), g.len())?;
    if !(tol > T::zero()) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let dg = c.metric.mul_vec(g);
    if dot(g, &dg) <= c.delta {
        return Ok(EllipsoidProjection { x: g.to_vec(), rho: T::zero(), newton_iters: 0, used_fallback: false });
    }
    let two = T::lit(2.0);
    let r1_tol = tol * (T::one() + norm2(g));
    let mut x = g.to_vec();
    let mut rho = T::zero();
    let mut dx = dg;
    for iter in 1..=NEWTON_MAX_ITER {
        let r1: Vec<T> = (0..x.len()).map(|i| x[i] - g[i] + two * rho * dx[i]).collect();
        let r2 = dot(&x, &dx) - c.delta;
        if norm2(&r1) <= r1_tol && r2.abs() <= tol {
            return Ok(EllipsoidProjection { x, rho, newton_iters: iter - 1, used_fallback: false });
        }
        let a = c.metric.scaled(two * rho).shifted(T::one());
        let factor = match SkylineLdl::factor_with(&a, c.order.clone(), true) {
            Ok(f) => f,
            Err(_) => break,
        };
        let v: Vec<T> = dx.iter().map(|&d| two * d).collect();
        let a_r1 = factor.solve(&r1)?;
        let a_v = factor.solve(&v)?;
        let denom = dot(&v, &a_v);
        if !(denom > T::zero()) {
            break;
        }
        let d_rho = (r2 - dot(&v, &a_r1)) / denom;
        let mut step = T::one();
        while rho + step * d_rho < T::zero() {
            step /= two;
        }
        for i in 0..x.len() {
            x[i] -= step * (a_r1[i] + d_rho * a_v[i]);
        }
        rho += step * d_rho;
        dx = c.metric.mul_vec(&x);
        if !rho.is_finite() || !x.iter().all(|v| v.is_finite()) {
            break;
        }
    }
    let (x, rho) = secular_bisection(g, c)?;
    Ok(EllipsoidProjection { x, rho, newton_iters: NEWTON_MAX_ITER, used_fallback: true })
}

/// Bisection on the decreasing scalar function `φ(ρ) = x(ρ)ᵀ D x(ρ) - δ` with
/// `x(ρ) = (I + 2ρD)⁻¹ g`, using sparse factorizations.
fn secular_bisection<T: Scalar>(g: &[T], c: &EllipsoidSet<T>) -> Result<(Vec<T>, T)> {
    let two = T::lit(2.0);
    let eval = |rho: T| -> Result<(Vec<T>, T)> {
        let a = c.metric.scaled(two * rho).shifted(T::one());
        let x = SkylineLdl::factor_with(&a, c.order.clone(), true)?.solve(g)?;
        let phi = c.metric.quad_form(&x) - c.delta;
        Ok((x, phi))
    };
    let mut lo = T::zero();
    let mut hi = T::one();
    while eval(hi)?.1 > T::zero() {
        lo = hi;
        hi *= two;
        if !hi.is_finite() {
            return Err(Error::NonFinite("ellipsoid multiplier bracket".into()));
        }
    }
    for _ in 0..200 {
        let mid = (lo + hi) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        if eval(mid)?.1 > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (x, _) = eval(hi)?;
    Ok((x, hi))
}

/// Projection onto the ellipsoid in the norm `‖·‖_W` of a positive diagonal `W`.
///
/// With `x = W^{1/2} z` this is the Euclidean projection onto
/// `{x : xᵀ W^{-1/2} D W^{-1/2} x <= δ}`.
#[derive(Debug, Clone)]
pub struct WeightedEllipsoid<T> {
    scaled: EllipsoidSet<T>,
    sqrt_w: Vec<T>,
}

impl<T: Scalar> WeightedEllipsoid<T> {
    pub fn new(c: &EllipsoidSet<T>, weights: &[T]) -> Result<Self> {
        check_len(c.dim(), weights.len())?;
        if let Some(i) = weights.iter().position(|&w| !(w > T::zero())) {
            return Err(Error::InvalidArgument(format!("weight {i} is not positive")));
        }
        let sqrt_w: Vec<T> = weights.iter().map(|w| w.sqrt()).collect();
        let triplets: Vec<_> = c.metric.iter().map(|(i, j, v)| (i, j, v / (sqrt_w[i] * sqrt_w[j]))).collect();
        let metric = CsrMatrix::from_triplets(c.dim(), c.dim(), &triplets)?;
        Ok(Self { scaled: EllipsoidSet::new(metric, c.delta)?, sqrt_w })
    }

    /// `argmin { ½‖z - v‖²_W : zᵀDz <= δ }`; `rho` is the multiplier of the scaled problem.
    pub fn project(&self, v: &[T], tol: T) -> Result<EllipsoidProjection<T>> {
        check_len(self.sqrt_w.len(), v.len())?;
        let g: Vec<T> = v.iter().zip(&self.sqrt_w).map(|(&a, &s)| a * s).collect();
        let mut out = project_ellipsoid(&g, &self.scaled, tol)?;
        for (x, &s) in out.x.iter_mut().zip(&self.sqrt_w) {
            *x /= s;
        }
        Ok(out)
    }
}

/// Dense reference projection: diagonalize `D = V Λ Vᵀ`, bisect the secular
/// equation `Σ λ_i ĝ_i² / (1 + 2ρλ_i)² = δ`, map back. Dimension at most 600.
pub fn secular_projection_oracle<T: Scalar>(g: &[T], c: &EllipsoidSet<T>, tol: T) -> Result<(Vec<T>, T)> {
    let n = c.dim();
    check_len(n, g.len())?;
    if n > 600 {
        return Err(Error::InvalidArgument(format!("oracle limited to dimension 600, got {n}")));
    }
    let dense = DMatrix::from_fn(n, n, |i, j| c.metric.get(i, j).as_f64());
    let eig = dense.symmetric_eigen();
    let gv = DVector::from_iterator(n, g.iter().map(|v| v.as_f64()));
    let gh = eig.eigenvectors.transpose() * &gv;
    let lam = &eig.eigenvalues;
    let delta = c.delta.as_f64();
    let phi = |rho: f64| -> f64 {
        (0..n).map(|i| lam[i] * gh[i] * gh[i] / (1.0 + 2.0 * rho * lam[i]).powi(2)).sum::<f64>() - delta
    };
    if phi(0.0) <= 0.0 {
        return Ok((g.to_vec(), T::zero()));
    }
    let mut hi = 1.0;
    while phi(hi) > 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    let rel = tol.as_f64().min(1e-12);
    while hi - lo > rel * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let rho = 0.5 * (lo + hi);
    let xh = DVector::from_fn(n, |i, _| gh[i] / (1.0 + 2.0 * rho * lam[i]));
    let x = &eig.eigenvectors * xh;
    Ok((x.iter().map(|&v| T::lit(v)).collect(), T::lit(rho)))
}

/// `prox_{δ*_C / σ}(d) = d - (1/σ) Π_C(σ d)`
pub fn prox_support_ellipsoid<T: Scalar>(
    d: &[T],
    sigma: T,
    c: &EllipsoidSet<T>,
    tol: T,
) -> Result<(Vec<T>, EllipsoidProjection<T>)> {
    if !(sigma > T::zero()) {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    let sd: Vec<T> = d.iter().map(|&v| sigma * v).collect();
    let proj = project_ellipsoid(&sd, c, tol)?;
    let inv = sigma.recip();
    let out = d.iter().zip(&proj.x).map(|(&v, &p)| v - inv * p).collect();
    Ok((out, proj))
}

/// `δ*_C(λ) = sqrt(δ) · sqrt(λᵀ D⁻¹ λ)`
pub fn support_function_ellipsoid<T: Scalar>(lambda: &[T], c: &EllipsoidSet<T>) -> Result<T> {
    check_len(c.dim(), lambda.len())?;
    let s = c.factor.solve(lambda)?;
    Ok(c.delta.sqrt() * dot(lambda, &s).max(T::zero()).sqrt())
}
