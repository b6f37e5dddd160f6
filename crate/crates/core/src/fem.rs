//! P1 finite-element operators on interior (Dirichlet-eliminated) degrees of freedom.

use crate::error::{check_len, Error, Result};
use crate::linalg::CsrMatrix;
use crate::mesh::Mesh;
use crate::scalar::Scalar;

/// `a(y, v) = ∫ (∇y)ᵀ A ∇v + c0 y v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilinearForm<T> {
    pub diffusion: [[T; 2]; 2],
    pub reaction: T,
}

impl<T: Scalar> Default for BilinearForm<T> {
    /// The negative Laplacian.
    fn default() -> Self {
        Self { diffusion: [[T::one(), T::zero()], [T::zero(), T::one()]], reaction: T::zero() }
    }
}

/// Local matrices of one triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementMatrices<T> {
    pub area: T,
    pub mass: [[T; 3]; 3],
    pub stiffness: [[T; 3]; 3],
    /// `∫ ∂_j φ_a ∂_j φ_b` for `j = 0, 1`.
    pub grad: [[[T; 3]; 3]; 2],
}

/// Exact P1 element matrices. Fails with `index` in the diagnostic if the
/// signed area is not positive.
pub fn element_matrices<T: Scalar>(p: [[T; 2]; 3], form: &BilinearForm<T>, index: usize) -> Result<ElementMatrices<T>> {
    let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let area = det / T::lit(2.0);
    if !(area > T::zero()) {
        return Err(Error::DegenerateTriangle { index, area: area.as_f64() });
    }
    let mut grads = [[T::zero(); 2]; 3];
    for (a, g) in grads.iter_mut().enumerate() {
        let b = (a + 1) % 3;
        let c = (a + 2) % 3;
        *g = [(p[b][1] - p[c][1]) / det, (p[c][0] - p[b][0]) / det];
    }
    let twelfth = area / T::lit(12.0);
    let mut mass = [[twelfth; 3]; 3];
    for (a, row) in mass.iter_mut().enumerate() {
        row[a] = twelfth + twelfth;
    }
    let mut stiffness = [[T::zero(); 3]; 3];
    let mut grad = [[[T::zero(); 3]; 3]; 2];
    let k = &form.diffusion;
    for a in 0..3 {
        for b in 0..3 {
            let (ga, gb) = (grads[a], grads[b]);
            let mut s = T::zero();
            for i in 0..2 {
                for j in 0..2 {
                    s += k[i][j] * ga[i] * gb[j];
                }
            }
            stiffness[a][b] = area * s + form.reaction * mass[a][b];
            grad[0][a][b] = area * ga[0] * gb[0];
            grad[1][a][b] = area * ga[1] * gb[1];
        }
    }
    Ok(ElementMatrices { area, mass, stiffness, grad })
}

/// Assembled discrete operators restricted to interior nodes.
#[derive(Debug, Clone)]
pub struct FemSystem<T> {
    pub mass: CsrMatrix<T>,
    pub stiffness: CsrMatrix<T>,
    /// Diagonal of the lumped mass matrix `W`.
    pub lumped: Vec<T>,
    /// Per-axis gradient metrics `D_j`.
    pub grad_axes: Vec<CsrMatrix<T>>,
    /// `D = Σ_j D_j`, so that `‖∇y_h‖² = yᵀ D y`.
    pub grad_metric: CsrMatrix<T>,
    /// Interior dof → mesh node.
    pub interior_map: Vec<usize>,
    /// Coordinates of the interior nodes, in dof order.
    pub coords: Vec<[T; 2]>,
    pub num_nodes: usize,
    pub n_dim: usize,
    /// Wathen constant: `M ≤ W ≤ c_n M`.
    pub c_n: T,
    /// `1 / min_i W_ii`.
    pub omega_m: T,
    /// Prox parameter `c_n · omega_m` of the λ-update.
    pub sigma: T,
    pub level: usize,
}

pub fn lumping_constant<T: Scalar>(n_dim: usize) -> T {
    if n_dim == 3 {
        T::lit(5.0)
    } else {
        T::lit(4.0)
    }
}

pub fn assemble<T: Scalar>(mesh: &Mesh<T>, form: &BilinearForm<T>) -> Result<FemSystem<T>> {
    let n_nodes = mesh.num_nodes();
    let mut dof = vec![usize::MAX; n_nodes];
    let mut interior_map = Vec::new();
    for (node, &b) in mesh.boundary.iter().enumerate() {
        if !b {
            dof[node] = interior_map.len();
            interior_map.push(node);
        }
    }
    let n = interior_map.len();
    if n == 0 {
        return Err(Error::InvalidArgument("mesh has no interior nodes".into()));
    }
    let cap = 9 * mesh.triangles.len();
    let mut mass = Vec::with_capacity(cap);
    let mut stiff = Vec::with_capacity(cap);
    let mut gx = Vec::with_capacity(cap);
    let mut gy = Vec::with_capacity(cap);
    let mut row_sums = vec![T::zero(); n_nodes];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let p = [mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]];
        let e = element_matrices(p, form, t)?;
        for a in 0..3 {
            row_sums[tri[a]] += e.mass[a].iter().copied().sum::<T>();
            let i = dof[tri[a]];
            if i == usize::MAX {
                continue;
            }
            for b in 0..3 {
                let j = dof[tri[b]];
                if j == usize::MAX {
                    continue;
                }
                mass.push((i, j, e.mass[a][b]));
                stiff.push((i, j, e.stiffness[a][b]));
                gx.push((i, j, e.grad[0][a][b]));
                gy.push((i, j, e.grad[1][a][b]));
            }
        }
    }
    let lumped: Vec<T> = interior_map.iter().map(|&node| row_sums[node]).collect();
    let grad_axes = vec![CsrMatrix::from_triplets(n, n, &gx)?, CsrMatrix::from_triplets(n, n, &gy)?];
    let grad_metric = grad_axes[0].lincomb(T::one(), &grad_axes[1], T::one())?;
    let w_min = lumped.iter().copied().fold(T::infinity(), T::min);
    let n_dim = 2;
    let c_n = lumping_constant(n_dim);
    let omega_m = w_min.recip();
    Ok(FemSystem {
        mass: CsrMatrix::from_triplets(n, n, &mass)?,
        stiffness: CsrMatrix::from_triplets(n, n, &stiff)?,
        lumped,
        grad_axes,
        grad_metric,
        coords: interior_map.iter().map(|&node| mesh.nodes[node]).collect(),
        interior_map,
        num_nodes: n_nodes,
        n_dim,
        c_n,
        omega_m,
        sigma: c_n * omega_m,
        level: mesh.level,
    })
}

impl<T: Scalar> FemSystem<T> {
    /// Assembles the negative Laplacian system.
    pub fn laplacian(mesh: &Mesh<T>) -> Result<Self> {
        assemble(mesh, &BilinearForm::default())
    }

    pub fn num_dofs(&self) -> usize {
        self.interior_map.len()
    }

    /// `sqrt(vᵀ M v)`
    pub fn mass_norm(&self, v: &[T]) -> T {
        self.mass.quad_form(v).max(T::zero()).sqrt()
    }

    /// Nodal interpolant of `func` on the interior dofs.
    pub fn interpolate<F: Fn([T; 2]) -> T>(&self, func: F) -> Result<Vec<T>> {
        self.coords
            .iter()
            .map(|&p| {
                let v = func(p);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::NonFinite(format!("field value {v} at ({}, {})", p[0], p[1])))
                }
            })
            .collect()
    }

    /// Extends an interior vector to all mesh nodes, zero on the boundary.
    pub fn expand(&self, v: &[T]) -> Result<Vec<T>> {
        check_len(self.num_dofs(), v.len())?;
        let mut out = vec![T::zero(); self.num_nodes];
        for (&node, &x) in self.interior_map.iter().zip(v) {
            out[node] = x;
        }
        Ok(out)
    }
}

/// Values of `func` at the interior nodes, in interior-dof order.
pub fn interpolate_nodal<T: Scalar, F: Fn([T; 2]) -> T>(func: F, mesh: &Mesh<T>) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(mesh.num_interior());
    for (p, &b) in mesh.nodes.iter().zip(&mesh.boundary) {
        if b {
            continue;
        }
        let v = func(*p);
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("field value {v} at ({}, {})", p[0], p[1])));
        }
        out.push(v);
    }
    Ok(out)
}

/// `‖∇y_h‖² = yᵀ D y`.
pub fn gradient_seminorm_sq<T: Scalar>(y: &[T], sys: &FemSystem<T>) -> Result<T> {
    check_len(sys.num_dofs(), y.len())?;
    Ok(sys.grad_metric.quad_form(y))
}
