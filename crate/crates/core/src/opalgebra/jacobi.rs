//! Jacobi kernels for complex matrices in the Euclidean frame.
//!
//! Both routines reduce every 2x2 subproblem to a real symmetric one by
//! rotating the phase of the off-diagonal entry away, then apply the classic
//! real Jacobi rotation. The combined unitary acting on columns `(p, q)` is
//!
//! ```text
//! G = [ c            s           ]
//!     [ -s·e^{-iφ}   c·e^{-iφ}   ]
//! ```
//!
//! where `e^{iφ}` is the phase of the off-diagonal entry.

use nalgebra::DMatrix;

use crate::measure::C64;

const MAX_SWEEPS: usize = 80;

/// Rotation parameters `(c, s, e^{-iφ})` that annihilate the off-diagonal
/// entry `apq` of the Hermitian 2x2 block `[[app, apq], [conj(apq), aqq]]`.
fn rotation(app: f64, aqq: f64, apq: C64) -> (f64, f64, C64) {
    let mag = apq.norm();
    // rescale first: for subnormal entries apq / mag is not unit modulus
    let scaled = apq / apq.re.abs().max(apq.im.abs());
    let phase_conj = (scaled / scaled.norm()).conj();
    let theta = (aqq - app) / (2.0 * mag);
    let t = if theta.is_infinite() {
        0.0
    } else {
        let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
        sign / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    (c, t * c, phase_conj)
}

/// Right-multiplies columns `p`, `q` of `m` by `G`.
fn rotate_columns(m: &mut DMatrix<C64>, p: usize, q: usize, c: f64, s: f64, e: C64) {
    for k in 0..m.nrows() {
        let mp = m[(k, p)];
        let mq = m[(k, q)];
        m[(k, p)] = mp * c - mq * e * s;
        m[(k, q)] = mp * s + mq * e * c;
    }
}

/// Left-multiplies rows `p`, `q` of `m` by `G^H`.
fn rotate_rows(m: &mut DMatrix<C64>, p: usize, q: usize, c: f64, s: f64, e: C64) {
    let ec = e.conj();
    for k in 0..m.ncols() {
        let mp = m[(p, k)];
        let mq = m[(q, k)];
        m[(p, k)] = mp * c - mq * ec * s;
        m[(q, k)] = mp * s + mq * ec * c;
    }
}

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, one per column.
    pub vectors: DMatrix<C64>,
}

/// Cyclic Jacobi on the Hermitian part of `h`.
pub fn hermitian_eigen(h: &DMatrix<C64>) -> HermitianEigen {
    let n = h.nrows();
    assert_eq!(n, h.ncols(), "eigensolve of a non-square matrix");
    let mut a = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let mut v = DMatrix::<C64>::identity(n, n);
    let fro = a.norm();

    if fro > 0.0 {
        for _ in 0..MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
                .map(|(p, q)| a[(p, q)].norm_sqr())
                .sum();
            if off.sqrt() <= f64::EPSILON * 1e-2 * fro {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    if apq.norm() <= f64::EPSILON * 1e-3 * fro {
                        a[(p, q)] = C64::new(0.0, 0.0);
                        a[(q, p)] = C64::new(0.0, 0.0);
                        continue;
                    }
                    let (c, s, e) = rotation(a[(p, p)].re, a[(q, q)].re, apq);
                    rotate_columns(&mut a, p, q, c, s, e);
                    rotate_rows(&mut a, p, q, c, s, e);
                    rotate_columns(&mut v, p, q, c, s, e);
                    a[(p, q)] = C64::new(0.0, 0.0);
                    a[(q, p)] = C64::new(0.0, 0.0);
                    a[(p, p)].im = 0.0;
                    a[(q, q)].im = 0.0;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = DMatrix::from_fn(n, n, |r, k| v[(r, order[k])]);
    HermitianEigen { values, vectors }
}

/// Singular value decomposition `b = u diag(sigma) v^H`, singular values
/// descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<C64>,
    pub sigma: Vec<f64>,
    pub v: DMatrix<C64>,
}

impl Svd {
    pub fn sigma_max(&self) -> f64 {
        self.sigma.first().copied().unwrap_or(0.0)
    }
}

/// One-sided (Hestenes) Jacobi SVD of a square matrix.
pub fn svd(b: &DMatrix<C64>) -> Svd {
    let n = b.ncols();
    let mut w = b.clone();
    let mut v = DMatrix::<C64>::identity(n, n);
    // columns this small are numerically zero; rotating them only spreads noise
    let negligible = (f64::EPSILON * f64::EPSILON * b.norm()).powi(2);

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, C64::new(0.0, 0.0));
                for k in 0..w.nrows() {
                    let wp = w[(k, p)];
                    let wq = w[(k, q)];
                    alpha += wp.norm_sqr();
                    beta += wq.norm_sqr();
                    gamma += wp.conj() * wq;
                }
                let mag = gamma.norm();
                if mag == 0.0 || mag <= f64::EPSILON * (alpha * beta).sqrt() || alpha.min(beta) <= negligible {
                    continue;
                }
                rotated = true;
                let (c, s, e) = rotation(alpha, beta, gamma);
                rotate_columns(&mut w, p, q, c, s, e);
                rotate_columns(&mut v, p, q, c, s, e);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..n).map(|k| w.column(k).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let sigma: Vec<f64> = order.iter().map(|&k| norms[k]).collect();
    let u = DMatrix::from_fn(w.nrows(), n, |r, k| {
        let col = order[k];
        if norms[col] > 0.0 {
            w[(r, col)] / norms[col]
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let v = DMatrix::from_fn(n, n, |r, k| v[(r, order[k])]);
    Svd { u, sigma, v }
}
