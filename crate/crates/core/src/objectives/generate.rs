//! Seeded quadratic problem generators.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{Client, FlProblem, QuadraticClient};
use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the sign
/// of `R`'s diagonal folded into `Q`).
fn random_orthogonal(k: usize, rng: &mut StreamRng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(k, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

fn gaussian_vec(k: usize, rng: &mut StreamRng) -> Vec<f64> {
    (0..k).map(|_| rng.sample(StandardNormal)).collect()
}

/// `U diag(eig) Uᵀ`, symmetrized, in row-major order.
fn conjugate(u: &DMatrix<f64>, eig: &[f64]) -> Vec<f64> {
    let d = u.nrows();
    let mut a = DMatrix::zeros(d, d);
    for (j, e) in eig.iter().enumerate() {
        let col = u.column(j);
        a += *e * &col * col.transpose();
    }
    let a = 0.5 * (&a + a.transpose());
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            out.push(a[(i, j)]);
        }
    }
    out
}

/// `n` strongly convex quadratic clients with spectra in `[mu, L]`.
///
/// Eigenvalues are uniform in `[mu, L]`; the first two eigenvalue slots of the
/// problem (client 0's, spilling into client 1 when `d = 1`) are pinned to `mu`
/// and `L` so both extremes are attained. Each `A_i` is conjugated by its own
/// random rotation and `b_i ~ N(0, I)`.
pub fn make_strongly_convex_problem(
    n: usize,
    d: usize,
    mu: f64,
    l: f64,
    lambda: f64,
    seed: u64,
) -> Result<FlProblem> {
    if !(mu > 0.0 && mu <= l && l.is_finite()) {
        return Err(Error::invalid(format!("need 0 < mu <= L, got mu={mu}, L={l}")));
    }
    if n == 0 || d == 0 {
        return Err(Error::invalid("need n >= 1 and d >= 1"));
    }
    if n * d < 2 && mu != l {
        return Err(Error::invalid("a single eigenvalue cannot attain both mu and L"));
    }
    let mut rng = rng::stream(seed, rng::PROBLEM);
    let mut clients = Vec::with_capacity(n);
    for i in 0..n {
        let mut eig: Vec<f64> = (0..d).map(|_| rng.random_range(mu..=l)).collect();
        for (j, e) in eig.iter_mut().enumerate() {
            match i * d + j {
                0 => *e = mu,
                1 => *e = l,
                _ => {}
            }
        }
        let u = random_orthogonal(d, &mut rng);
        let b = gaussian_vec(d, &mut rng);
        clients.push(Client::Quadratic(QuadraticClient::new(d, conjugate(&u, &eig), b)?));
    }
    FlProblem::new(clients, lambda)
}

/// `n` rank-deficient convex quadratic clients (PL but not strongly convex).
///
/// All clients share one `(d − rank)`-dimensional null space, so consensus
/// vectors in it are flat directions of `F` for every `λ`. Nonzero eigenvalues
/// are uniform in `[L/10, L]` with client 0 attaining `L`, and `b_i = A_i y_i`
/// for Gaussian `y_i`, so `b_i ∈ range(A_i)` and `F` attains its minimum.
pub fn make_pl_problem(
    n: usize,
    d: usize,
    rank: usize,
    l: f64,
    lambda: f64,
    seed: u64,
) -> Result<FlProblem> {
    if rank == 0 || rank >= d {
        return Err(Error::invalid(format!("need 1 <= rank < d, got rank={rank}, d={d}")));
    }
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::invalid(format!("need L > 0, got {l}")));
    }
    if n == 0 {
        return Err(Error::invalid("need n >= 1"));
    }
    let mut rng = rng::stream(seed, rng::PROBLEM);
    let basis = random_orthogonal(d, &mut rng);
    let range = basis.columns(0, rank).into_owned();
    let mut clients = Vec::with_capacity(n);
    for i in 0..n {
        let mut eig: Vec<f64> = (0..rank).map(|_| rng.random_range(0.1 * l..=l)).collect();
        if i == 0 {
            eig[0] = l;
        }
        let u = &range * random_orthogonal(rank, &mut rng);
        let a = conjugate(&u, &eig);
        let y = gaussian_vec(d, &mut rng);
        let b: Vec<f64> = a
            .chunks_exact(d)
            .map(|row| row.iter().zip(&y).map(|(r, v)| r * v).sum())
            .collect();
        clients.push(Client::Quadratic(QuadraticClient::new(d, a, b)?));
    }
    FlProblem::new(clients, lambda)
}
