//! Exact solutions of quadratic problems.
//!
//! For quadratic clients `f_i(v) = ½vᵀA_iv − b_iᵀv` the gradient of `F` is
//! affine, `∇F(x) = Hx − c` with
//! `H = (1/n) blockdiag(A_i) + (λ/n)(I − (1/n) 𝟙𝟙ᵀ ⊗ I_d)` and `c_i = b_i/n`,
//! so `x(λ)` solves one dense `nd × nd` linear system.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelVector;
use crate::objectives::FlProblem;

/// Largest `nd` accepted by the dense solver.
pub const MAX_DENSE_DIM: usize = 5000;
/// Required `‖∇F(x(λ))‖`.
pub const RESIDUAL_LIMIT: f64 = 1e-10;

/// A certified minimizer `x(λ)` and `F* = F(x(λ))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactSolution {
    pub x_star: ModelVector,
    pub f_star: f64,
    /// `‖∇F(x_star)‖`, evaluated through [`FlProblem::grad`].
    pub residual_norm: f64,
}

impl ExactSolution {
    /// Wraps a point computed elsewhere (e.g. by a long gradient descent run),
    /// recording its objective value and gradient norm without certifying it.
    pub fn from_point(problem: &FlProblem, x_star: ModelVector) -> Result<Self> {
        let f_star = problem.value(&x_star)?;
        let residual_norm = problem.grad(&x_star)?.norm();
        Ok(Self {
            x_star,
            f_star,
            residual_norm,
        })
    }
}

fn quadratic_clients(problem: &FlProblem) -> Result<Vec<&crate::objectives::QuadraticClient>> {
    problem
        .clients()
        .iter()
        .map(|c| c.as_quadratic().ok_or(Error::NotQuadratic))
        .collect()
}

fn check_size(problem: &FlProblem) -> Result<usize> {
    let nd = problem.n() * problem.d();
    if nd > MAX_DENSE_DIM {
        return Err(Error::ProblemTooLarge {
            nd,
            limit: MAX_DENSE_DIM,
        });
    }
    Ok(nd)
}

/// Hessian of `∇f` alone: `(1/n) blockdiag(A_i)`.
pub fn assemble_data_hessian(problem: &FlProblem) -> Result<DMatrix<f64>> {
    let clients = quadratic_clients(problem)?;
    let nd = check_size(problem)?;
    let (n, d) = (problem.n(), problem.d());
    let inv = 1.0 / n as f64;
    let mut h = DMatrix::zeros(nd, nd);
    for (i, q) in clients.iter().enumerate() {
        for r in 0..d {
            for c in 0..d {
                h[(i * d + r, i * d + c)] = inv * q.a()[r * d + c];
            }
        }
    }
    Ok(h)
}

/// Hessian of `ψ`: `(1/n)(I − (1/n) 𝟙𝟙ᵀ ⊗ I_d)`.
pub fn assemble_penalty_hessian(n: usize, d: usize) -> DMatrix<f64> {
    let nd = n * d;
    let inv = 1.0 / n as f64;
    DMatrix::from_fn(nd, nd, |r, c| {
        let same_coord = r % d == c % d;
        let diag = if r == c { inv } else { 0.0 };
        if same_coord {
            diag - inv * inv
        } else {
            diag
        }
    })
}

/// Hessian of `F`.
pub fn assemble_hessian(problem: &FlProblem) -> Result<DMatrix<f64>> {
    let hf = assemble_data_hessian(problem)?;
    let hp = assemble_penalty_hessian(problem.n(), problem.d());
    Ok(hf + hp * problem.lambda())
}

/// `c` in `∇F(x) = Hx − c`.
pub fn assemble_rhs(problem: &FlProblem) -> Result<DVector<f64>> {
    let clients = quadratic_clients(problem)?;
    let inv = 1.0 / problem.n() as f64;
    Ok(DVector::from_iterator(
        problem.n() * problem.d(),
        clients.iter().flat_map(|q| q.b().iter().map(move |b| inv * b)),
    ))
}

/// The solution set `{x_min + N c}` of a (possibly singular) quadratic problem.
#[derive(Debug, Clone)]
pub struct SolutionSet {
    /// Min-norm minimizer.
    pub solution: ExactSolution,
    /// Orthonormal basis of `null(H)`, `nd × r` (`r = 0` when strongly convex).
    pub null_basis: DMatrix<f64>,
    /// Eigenvalues of `H`, ascending.
    pub eigenvalues: Vec<f64>,
}

impl SolutionSet {
    pub fn null_dim(&self) -> usize {
        self.null_basis.ncols()
    }

    /// Smallest positive eigenvalue of `H`: the PL constant of `F`.
    pub fn mu_pl(&self) -> f64 {
        self.eigenvalues[self.null_dim()]
    }

    pub fn hessian_max(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }

    /// Orthogonal projection of `x` onto the solution set.
    pub fn project(&self, x: &ModelVector) -> ModelVector {
        let xs = &self.solution.x_star;
        let e = DVector::from_column_slice(x.sub(xs).as_slice());
        let along = &self.null_basis * (self.null_basis.transpose() * e);
        let mut out = xs.clone();
        for (o, a) in out.as_mut_slice().iter_mut().zip(along.iter()) {
            *o += a;
        }
        out
    }

    /// `dist(x, solution set)²`.
    pub fn dist_sq(&self, x: &ModelVector) -> f64 {
        x.dist_sq(&self.project(x))
    }

    /// `x_min + N c`.
    pub fn point(&self, coeffs: &[f64]) -> ModelVector {
        assert_eq!(coeffs.len(), self.null_dim());
        let shift = &self.null_basis * DVector::from_column_slice(coeffs);
        let mut out = self.solution.x_star.clone();
        for (o, s) in out.as_mut_slice().iter_mut().zip(shift.iter()) {
            *o += s;
        }
        out
    }
}

fn to_model(problem: &FlProblem, v: &DVector<f64>) -> Result<ModelVector> {
    ModelVector::new(problem.n(), problem.d(), v.iter().copied().collect())
}

fn certify(problem: &FlProblem, x: ModelVector) -> Result<ExactSolution> {
    let sol = ExactSolution::from_point(problem, x)?;
    // written so that a NaN residual also fails
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(sol.residual_norm <= RESIDUAL_LIMIT) {
        return Err(Error::InconsistentSystem {
            residual: sol.residual_norm,
        });
    }
    Ok(sol)
}

/// Minimizer of a quadratic problem by a dense direct solve.
///
/// Nonsingular systems go through Cholesky; singular ones through the
/// eigendecomposition, giving the min-norm solution. One step of iterative
/// refinement is applied and the residual `‖∇F(x)‖` is certified to be at most
/// [`RESIDUAL_LIMIT`].
pub fn solve_exact(problem: &FlProblem) -> Result<ExactSolution> {
    let h = assemble_hessian(problem)?;
    let c = assemble_rhs(problem)?;
    if let Some(chol) = h.clone().cholesky() {
        let mut x = chol.solve(&c);
        let r = &c - &h * &x;
        x += chol.solve(&r);
        if let Ok(sol) = certify(problem, to_model(problem, &x)?) {
            return Ok(sol);
        }
    }
    Ok(solution_set(problem)?.solution)
}

/// Eigendecomposition-based solve returning the whole solution set.
pub fn solution_set(problem: &FlProblem) -> Result<SolutionSet> {
    let h = assemble_hessian(problem)?;
    let c = assemble_rhs(problem)?;
    let nd = h.nrows();
    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..nd).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let top = eig.eigenvalues[order[nd - 1]].max(0.0);
    let cut = 1e-9 * top.max(f64::MIN_POSITIVE);
    let null: Vec<usize> = order.iter().copied().filter(|&j| eig.eigenvalues[j] <= cut).collect();

    let pinv_apply = |v: &DVector<f64>| -> DVector<f64> {
        let mut out = DVector::zeros(nd);
        for j in 0..nd {
            let e = eig.eigenvalues[j];
            if e > cut {
                let col = eig.eigenvectors.column(j);
                out += col * (col.dot(v) / e);
            }
        }
        out
    };
    let mut x = pinv_apply(&c);
    let r = &c - &h * &x;
    x += pinv_apply(&r);

    let mut null_basis = DMatrix::zeros(nd, null.len());
    for (k, &j) in null.iter().enumerate() {
        null_basis.set_column(k, &eig.eigenvectors.column(j));
    }
    // Keep x in the range of H so that it is the min-norm solution.
    let x = &x - &null_basis * (null_basis.transpose() * &x);
    let solution = certify(problem, to_model(problem, &x)?)?;
    let eigenvalues = order
        .iter()
        .map(|&j| if eig.eigenvalues[j] <= cut { 0.0 } else { eig.eigenvalues[j] })
        .collect();
    Ok(SolutionSet {
        solution,
        null_basis,
        eigenvalues,
    })
}

/// PL constant of a quadratic `F`: the smallest positive Hessian eigenvalue.
pub fn mu_pl(problem: &FlProblem) -> Result<f64> {
    Ok(solution_set(problem)?.mu_pl())
}
