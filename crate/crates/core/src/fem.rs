//! P1 finite elements for the Neumann problem `-div(σ ∇u) = 0`, `σ ∂u/∂n = f`.
//!
//! The constant null space is removed by pinning the center node, then the
//! solution is shifted to zero boundary-quadrature mean. Because every load
//! vector sums to zero this gives the same function as a Lagrange multiplier
//! on the mean, without leaving the SPD setting.

use crate::basis::{BoundaryBasis, BoundaryVector};
use crate::conductivity::ConductivityField;
use crate::error::{Error, Result};
use crate::mesh::DiskMesh;
use crate::nd::NdMatrix;
use crate::scalar::Real;
use crate::skyline::{envelope, reverse_cuthill_mckee, SkylineCholesky, SkylineMatrix};
use nalgebra::DMatrix;
use rayon::prelude::*;
use std::collections::BTreeSet;

/// Mesh geometry and a fill-reducing node order, independent of σ.
#[derive(Debug, Clone)]
pub struct FemSpace<T> {
    mesh: DiskMesh<T>,
    areas: Vec<T>,
    /// Gradients of the three local hat functions on each triangle.
    grads: Vec<[[T; 2]; 3]>,
    /// `perm[new] = old`.
    perm: Vec<usize>,
    /// `inv[old] = new`.
    inv: Vec<usize>,
    first: Vec<usize>,
    pinned: usize,
}

impl<T: Real> FemSpace<T> {
    pub fn new(mesh: DiskMesh<T>) -> Result<Self> {
        let n = mesh.n_nodes();
        let mut areas = Vec::with_capacity(mesh.n_triangles());
        let mut grads = Vec::with_capacity(mesh.n_triangles());
        let nodes = mesh.nodes();
        for (t, &[a, b, c]) in mesh.triangles().iter().enumerate() {
            let area = mesh.signed_area(t);
            if !(area > T::zero()) {
                return Err(Error::InvalidInput(format!("triangle {t} is degenerate")));
            }
            let s = T::one() / (area + area);
            let (p0, p1, p2) = (nodes[a], nodes[b], nodes[c]);
            grads.push([
                [(p1[1] - p2[1]) * s, (p2[0] - p1[0]) * s],
                [(p2[1] - p0[1]) * s, (p0[0] - p2[0]) * s],
                [(p0[1] - p1[1]) * s, (p1[0] - p0[0]) * s],
            ]);
            areas.push(area);
        }
        let mut adjacency: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for tri in mesh.triangles() {
            for &a in tri {
                for &b in tri {
                    if a != b {
                        adjacency[a].insert(b);
                    }
                }
            }
        }
        let adjacency: Vec<Vec<usize>> = adjacency.into_iter().map(|s| s.into_iter().collect()).collect();
        let pinned = nearest_to_origin(&mesh);
        let perm = reverse_cuthill_mckee(&adjacency, pinned);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let first = envelope(&adjacency, &inv);
        Ok(FemSpace {
            mesh,
            areas,
            grads,
            perm,
            inv,
            first,
            pinned,
        })
    }

    pub fn mesh(&self) -> &DiskMesh<T> {
        &self.mesh
    }

    pub fn n_nodes(&self) -> usize {
        self.mesh.n_nodes()
    }

    pub fn areas(&self) -> &[T] {
        &self.areas
    }

    /// Stored entries of the factor.
    pub fn envelope_size(&self) -> usize {
        self.first.iter().enumerate().map(|(i, &f)| i - f + 1).sum()
    }

    /// Gradient of a nodal function on triangle `t`.
    pub fn gradient(&self, t: usize, u: &[T]) -> [T; 2] {
        let tri = self.mesh.triangles()[t];
        let g = &self.grads[t];
        let mut out = [T::zero(); 2];
        for a in 0..3 {
            out[0] += u[tri[a]] * g[a][0];
            out[1] += u[tri[a]] * g[a][1];
        }
        out
    }

    /// `K_c u`, the stiffness matrix with coefficient field `c` applied to `u`.
    pub fn apply_stiffness(&self, coef: &ConductivityField<T>, u: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.n_nodes()];
        for (t, tri) in self.mesh.triangles().iter().enumerate() {
            let g = self.gradient(t, u);
            let s = coef.values()[t] * self.areas[t];
            for a in 0..3 {
                out[tri[a]] += s * (self.grads[t][a][0] * g[0] + self.grads[t][a][1] * g[1]);
            }
        }
        out
    }

    /// `∫ c ∇u·∇v`.
    pub fn energy_product(&self, coef: &ConductivityField<T>, u: &[T], v: &[T]) -> T {
        (0..self.mesh.n_triangles()).fold(T::zero(), |acc, t| {
            let gu = self.gradient(t, u);
            let gv = self.gradient(t, v);
            acc + coef.values()[t] * self.areas[t] * (gu[0] * gv[0] + gu[1] * gv[1])
        })
    }

    /// Lumped Neumann load `b_i = w f(θ_i)` at the boundary nodes.
    pub fn neumann_load(&self, basis: &BoundaryBasis<T>, f: &BoundaryVector<T>) -> Result<Vec<T>> {
        self.check_basis(basis)?;
        let mut b = vec![T::zero(); self.n_nodes()];
        let w = basis.weight();
        for (k, v) in basis.evaluate(f).into_iter().enumerate() {
            b[self.mesh.boundary_nodes()[k]] = w * v;
        }
        Ok(b)
    }

    pub fn check_basis(&self, basis: &BoundaryBasis<T>) -> Result<()> {
        if basis.n_boundary() != self.mesh.n_boundary() {
            return Err(Error::Dimension(format!(
                "basis built for {} boundary nodes, mesh has {}",
                basis.n_boundary(),
                self.mesh.n_boundary()
            )));
        }
        Ok(())
    }

    pub fn check_field(&self, field: &ConductivityField<T>) -> Result<()> {
        if field.len() != self.mesh.n_triangles() {
            return Err(Error::Dimension(format!(
                "field has {} values for {} triangles",
                field.len(),
                self.mesh.n_triangles()
            )));
        }
        Ok(())
    }

    /// Nodal boundary trace in boundary order.
    pub fn trace(&self, u: &[T]) -> Vec<T> {
        self.mesh.boundary_nodes().iter().map(|&i| u[i]).collect()
    }
}

fn nearest_to_origin<T: Real>(mesh: &DiskMesh<T>) -> usize {
    let r2 = |p: &[T; 2]| p[0] * p[0] + p[1] * p[1];
    let mut best = 0;
    for (i, p) in mesh.nodes().iter().enumerate() {
        if r2(p) < r2(&mesh.nodes()[best]) {
            best = i;
        }
    }
    best
}

/// Finite element solution with zero boundary-quadrature mean.
#[derive(Debug, Clone, PartialEq)]
pub struct InteriorSolution<T> {
    nodal: Vec<T>,
    trace: BoundaryVector<T>,
}

impl<T: Real> InteriorSolution<T> {
    pub fn nodal(&self) -> &[T] {
        &self.nodal
    }

    pub fn trace(&self) -> &BoundaryVector<T> {
        &self.trace
    }
}

/// Stiffness factorization for one conductivity, reused for every solve.
#[derive(Debug, Clone)]
pub struct ForwardSolver<'s, T> {
    space: &'s FemSpace<T>,
    sigma: ConductivityField<T>,
    factor: SkylineCholesky<T>,
}

impl<'s, T: Real> ForwardSolver<'s, T> {
    pub fn new(space: &'s FemSpace<T>, sigma: &ConductivityField<T>) -> Result<Self> {
        space.check_field(sigma)?;
        let sigma = sigma.conductivity();
        if let Some(t) = sigma.values().iter().position(|v| !(*v > T::zero())) {
            return Err(Error::SingularSystem {
                pivot: t,
                reason: format!("conductivity {:e} on triangle {t} is not positive", sigma.values()[t]),
            });
        }
        let mut k = SkylineMatrix::zeros(space.first.clone());
        for (t, tri) in space.mesh.triangles().iter().enumerate() {
            let s = sigma.values()[t] * space.areas[t];
            let g = &space.grads[t];
            for a in 0..3 {
                for b in 0..3 {
                    let (i, j) = (space.inv[tri[a]], space.inv[tri[b]]);
                    if j <= i {
                        k.add(i, j, s * (g[a][0] * g[b][0] + g[a][1] * g[b][1]));
                    }
                }
            }
        }
        k.pin(space.inv[space.pinned]);
        let factor = k.factorize()?;
        Ok(ForwardSolver {
            space,
            sigma,
            factor,
        })
    }

    pub fn space(&self) -> &'s FemSpace<T> {
        self.space
    }

    pub fn sigma(&self) -> &ConductivityField<T> {
        &self.sigma
    }

    /// Solves `K u = b` for a load with zero sum; the result has zero
    /// boundary mean.
    pub fn solve_load(&self, b: &[T]) -> Vec<T> {
        let sp = self.space;
        let mut x: Vec<T> = sp.perm.iter().map(|&old| b[old]).collect();
        x[sp.inv[sp.pinned]] = T::zero();
        self.factor.solve_in_place(&mut x);
        let mut u = vec![T::zero(); x.len()];
        for (new, &old) in sp.perm.iter().enumerate() {
            u[old] = x[new];
        }
        let boundary = sp.mesh.boundary_nodes();
        let mean = boundary.iter().fold(T::zero(), |a, &i| a + u[i]) / T::from_count(boundary.len());
        for v in &mut u {
            *v -= mean;
        }
        u
    }

    fn wrap(&self, basis: &BoundaryBasis<T>, nodal: Vec<T>) -> Result<InteriorSolution<T>> {
        let trace = basis.project(&self.space.trace(&nodal))?;
        Ok(InteriorSolution { nodal, trace })
    }

    pub fn solve_neumann(&self, basis: &BoundaryBasis<T>, f: &BoundaryVector<T>) -> Result<InteriorSolution<T>> {
        let b = self.space.neumann_load(basis, f)?;
        self.wrap(basis, self.solve_load(&b))
    }

    /// Nodal `w` with `∫σ∇w·∇v = -∫η∇u·∇v`.
    pub fn perturb_nodal(&self, eta: &ConductivityField<T>, u: &[T]) -> Vec<T> {
        let mut rhs = self.space.apply_stiffness(eta, u);
        for v in &mut rhs {
            *v = -*v;
        }
        self.solve_load(&rhs)
    }

    /// The perturbation operator `P(σ, η)` applied to `u`.
    pub fn apply_perturbation(
        &self,
        basis: &BoundaryBasis<T>,
        eta: &ConductivityField<T>,
        u: &InteriorSolution<T>,
    ) -> Result<InteriorSolution<T>> {
        self.space.check_field(eta)?;
        self.wrap(basis, self.perturb_nodal(eta, u.nodal()))
    }
}

/// Everything needed for ND maps and their derivatives at one conductivity:
/// the factorization, the `2N` basis solutions and their element gradients.
#[derive(Debug, Clone)]
pub struct ForwardModel<'s, T: Real> {
    solver: ForwardSolver<'s, T>,
    basis: BoundaryBasis<T>,
    solutions: Vec<Vec<T>>,
    /// `n_triangles × 2N` gradient components of the basis solutions.
    grad_x: DMatrix<T>,
    grad_y: DMatrix<T>,
    nd: NdMatrix<T>,
}

impl<'s, T: Real> ForwardModel<'s, T> {
    pub fn new(space: &'s FemSpace<T>, sigma: &ConductivityField<T>, basis: &BoundaryBasis<T>) -> Result<Self> {
        let solver = ForwardSolver::new(space, sigma)?;
        let (solutions, nd) = basis_solutions(&solver, basis)?;
        let (grad_x, grad_y) = gradients(space, &solutions);
        Ok(ForwardModel {
            solver,
            basis: basis.clone(),
            solutions,
            grad_x,
            grad_y,
            nd,
        })
    }

    pub fn solver(&self) -> &ForwardSolver<'s, T> {
        &self.solver
    }

    pub fn space(&self) -> &'s FemSpace<T> {
        self.solver.space
    }

    pub fn basis(&self) -> &BoundaryBasis<T> {
        &self.basis
    }

    pub fn sigma(&self) -> &ConductivityField<T> {
        self.solver.sigma()
    }

    pub fn nd(&self) -> &NdMatrix<T> {
        &self.nd
    }

    /// Nodal solution for the `k`-th basis current.
    pub fn solution(&self, k: usize) -> &[T] {
        &self.solutions[k]
    }

    /// `-∫η ∇u_j·∇u_k`, the derivative of the ND matrix along `η`.
    pub fn dlambda_matrix(&self, eta: &ConductivityField<T>) -> Result<DMatrix<T>> {
        self.space().check_field(eta)?;
        let m = weighted_gram(self.space(), eta, (&self.grad_x, &self.grad_y), (&self.grad_x, &self.grad_y));
        Ok(-crate::sobolev::symmetrize(&m))
    }

    /// `Σ_α ⟨f_j, tr P(η_{α1})…P(η_{αk}) u_k⟩` over all orderings of the
    /// directions.
    pub fn dk_lambda_matrix(&self, directions: &[&ConductivityField<T>]) -> Result<DMatrix<T>> {
        let k = directions.len();
        if k == 0 {
            return Err(Error::InvalidInput("at least one direction is required".into()));
        }
        if k > 3 {
            return Err(Error::OrderCap(k));
        }
        for d in directions {
            self.space().check_field(d)?;
        }
        let dim = self.basis.dim();
        let mut total = DMatrix::zeros(dim, dim);
        for order in permutations(k) {
            // Apply the inner k-1 perturbations by solves; the outermost one
            // pairs with u_j through the energy form.
            let inner: Vec<Vec<T>> = self
                .solutions
                .par_iter()
                .map(|u| {
                    let mut v = u.clone();
                    for &a in order[1..].iter().rev() {
                        v = self.solver.perturb_nodal(directions[a], &v);
                    }
                    v
                })
                .collect();
            let (vx, vy) = gradients(self.space(), &inner);
            total -= weighted_gram(self.space(), directions[order[0]], (&self.grad_x, &self.grad_y), (&vx, &vy));
        }
        Ok(crate::sobolev::symmetrize(&total))
    }
}

/// Solutions for every basis current and the resulting ND matrix.
fn basis_solutions<T: Real>(solver: &ForwardSolver<'_, T>, basis: &BoundaryBasis<T>) -> Result<(Vec<Vec<T>>, NdMatrix<T>)> {
    let space = solver.space();
    space.check_basis(basis)?;
    let dim = basis.dim();
    let solutions: Vec<Vec<T>> = (0..dim)
        .into_par_iter()
        .map(|k| {
            let b = space.neumann_load(basis, &BoundaryVector::unit(dim, k))?;
            Ok(solver.solve_load(&b))
        })
        .collect::<Result<_>>()?;
    let mut raw = DMatrix::zeros(dim, dim);
    for (k, u) in solutions.iter().enumerate() {
        let c = basis.project(&space.trace(u))?;
        raw.set_column(k, c.coeffs());
    }
    let nd = NdMatrix::new(raw, solver.sigma().hash_hex())?;
    Ok((solutions, nd))
}

fn gradients<T: Real>(space: &FemSpace<T>, columns: &[Vec<T>]) -> (DMatrix<T>, DMatrix<T>) {
    let nt = space.mesh.n_triangles();
    let mut gx = DMatrix::zeros(nt, columns.len());
    let mut gy = DMatrix::zeros(nt, columns.len());
    for (k, u) in columns.iter().enumerate() {
        for t in 0..nt {
            let g = space.gradient(t, u);
            gx[(t, k)] = g[0];
            gy[(t, k)] = g[1];
        }
    }
    (gx, gy)
}

/// `Σ_t c_t |t| (a_x[t,j] b_x[t,k] + a_y[t,j] b_y[t,k])`.
fn weighted_gram<T: Real>(
    space: &FemSpace<T>,
    coef: &ConductivityField<T>,
    a: (&DMatrix<T>, &DMatrix<T>),
    b: (&DMatrix<T>, &DMatrix<T>),
) -> DMatrix<T> {
    let mut bx = b.0.clone();
    let mut by = b.1.clone();
    for t in 0..bx.nrows() {
        let s = coef.values()[t] * space.areas[t];
        bx.row_mut(t).scale_mut(s);
        by.row_mut(t).scale_mut(s);
    }
    a.0.tr_mul(&bx) + a.1.tr_mul(&by)
}

/// All orderings of `0..k` in lexicographic order.
fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == k {
            out.push(prefix.clone());
            return;
        }
        for i in 0..k {
            if !prefix.contains(&i) {
                prefix.push(i);
                rec(prefix, k, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), k, &mut out);
    out
}

/// The Galerkin ND matrix of `σ` in `basis`.
pub fn nd_matrix<T: Real>(space: &FemSpace<T>, sigma: &ConductivityField<T>, basis: &BoundaryBasis<T>) -> Result<NdMatrix<T>> {
    let solver = ForwardSolver::new(space, sigma)?;
    Ok(basis_solutions(&solver, basis)?.1)
}
