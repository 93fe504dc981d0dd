//! Operators on `L²(μ)` for a finite measure space and the dense oracles
//! (adjoint, norm, eigensystems, square roots, polar parts, functional
//! calculus, kernels) that every closed form is checked against.
//!
//! Weighted computations are conjugated to the Euclidean frame by
//! `B = D^{1/2} A D^{-1/2}` with `D = diag(μ)`. The map `A ↦ B` is a
//! *-isomorphism: it preserves products, sums and adjoints, and the
//! μ-operator norm of `A` is the spectral norm of `B`.

pub mod jacobi;

use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::measure::{same_space, FiniteMeasureSpace, MeasurableFunction, C64};
use crate::tolerance::{CLAMP_TOL, RANK_TOL, SELF_ADJOINT_TOL};

const ZERO: C64 = C64::new(0.0, 0.0);

/// A dense matrix acting on point functions, `f ↦ A f`.
#[derive(Debug, Clone)]
pub struct WeightedOperator {
    space: Arc<FiniteMeasureSpace>,
    matrix: DMatrix<C64>,
}

impl PartialEq for WeightedOperator {
    fn eq(&self, other: &Self) -> bool {
        same_space(&self.space, &other.space) && self.matrix == other.matrix
    }
}

impl WeightedOperator {
    pub fn new(space: Arc<FiniteMeasureSpace>, matrix: DMatrix<C64>) -> Result<Self> {
        let n = space.len();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::LengthMismatch {
                expected: n * n,
                found: matrix.nrows() * matrix.ncols(),
            });
        }
        if let Some(index) = matrix.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { space, matrix })
    }

    fn from_parts(space: Arc<FiniteMeasureSpace>, matrix: DMatrix<C64>) -> Self {
        debug_assert_eq!(matrix.nrows(), space.len());
        Self { space, matrix }
    }

    pub fn identity(space: Arc<FiniteMeasureSpace>) -> Self {
        let n = space.len();
        Self::from_parts(space, DMatrix::identity(n, n))
    }

    pub fn zero(space: Arc<FiniteMeasureSpace>) -> Self {
        let n = space.len();
        Self::from_parts(space, DMatrix::zeros(n, n))
    }

    /// Multiplication operator `M_φ`.
    pub fn multiplication(phi: &MeasurableFunction) -> Self {
        let n = phi.len();
        let matrix = DMatrix::from_fn(n, n, |i, j| if i == j { phi.get(i) } else { ZERO });
        Self::from_parts(phi.space().clone(), matrix)
    }

    /// Matrix whose `j`-th column is `f(e_j)`.
    pub fn from_action(space: Arc<FiniteMeasureSpace>, f: impl Fn(&MeasurableFunction) -> MeasurableFunction) -> Self {
        let n = space.len();
        let mut matrix = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut basis = vec![ZERO; n];
            basis[j] = C64::new(1.0, 0.0);
            let e = MeasurableFunction::new(space.clone(), basis).expect("basis vector");
            let image = f(&e);
            for i in 0..n {
                matrix[(i, j)] = image.get(i);
            }
        }
        Self::from_parts(space, matrix)
    }

    pub fn space(&self) -> &Arc<FiniteMeasureSpace> {
        &self.space
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, f: &MeasurableFunction) -> MeasurableFunction {
        assert!(
            same_space(&self.space, f.space()),
            "operator and function spaces differ"
        );
        let n = self.dim();
        let values = (0..n)
            .map(|i| (0..n).map(|j| self.matrix[(i, j)] * f.get(j)).sum())
            .collect();
        MeasurableFunction::new(self.space.clone(), values).expect("finite image")
    }

    pub fn scale(&self, c: C64) -> Self {
        Self::from_parts(self.space.clone(), &self.matrix * c)
    }

    pub fn adjoint(&self) -> Self {
        weighted_adjoint(self)
    }

    pub fn norm(&self) -> f64 {
        operator_norm(self)
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// `D^{1/2} A D^{-1/2}`.
    pub fn to_euclidean(&self) -> DMatrix<C64> {
        let w = self.space.weights();
        DMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            self.matrix[(i, j)] * (w[i] / w[j]).sqrt()
        })
    }

    /// Inverse of [`to_euclidean`](Self::to_euclidean).
    pub fn from_euclidean(space: Arc<FiniteMeasureSpace>, b: &DMatrix<C64>) -> Self {
        let w = space.weights();
        let matrix = DMatrix::from_fn(b.nrows(), b.ncols(), |i, j| b[(i, j)] * (w[j] / w[i]).sqrt());
        Self::from_parts(space, matrix)
    }

    /// Frobenius norm in the Euclidean frame (an upper bound for the
    /// operator norm, invariant under μ-unitaries).
    pub fn frobenius(&self) -> f64 {
        self.to_euclidean().norm()
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::identity(self.space.clone());
        for _ in 0..k {
            out = &out * self;
        }
        out
    }
}

fn check_same(a: &WeightedOperator, b: &WeightedOperator) {
    assert!(same_space(&a.space, &b.space), "operators act on different spaces");
}

impl Add for &WeightedOperator {
    type Output = WeightedOperator;
    fn add(self, rhs: Self) -> WeightedOperator {
        check_same(self, rhs);
        WeightedOperator::from_parts(self.space.clone(), &self.matrix + &rhs.matrix)
    }
}

impl Sub for &WeightedOperator {
    type Output = WeightedOperator;
    fn sub(self, rhs: Self) -> WeightedOperator {
        check_same(self, rhs);
        WeightedOperator::from_parts(self.space.clone(), &self.matrix - &rhs.matrix)
    }
}

impl Mul for &WeightedOperator {
    type Output = WeightedOperator;
    fn mul(self, rhs: Self) -> WeightedOperator {
        check_same(self, rhs);
        WeightedOperator::from_parts(self.space.clone(), &self.matrix * &rhs.matrix)
    }
}

/// `A* = D^{-1} A^H D`, the adjoint for `⟨f, g⟩_μ = Σ f_i conj(g_i) μ_i`.
pub fn weighted_adjoint(a: &WeightedOperator) -> WeightedOperator {
    let w = a.space.weights();
    let matrix = DMatrix::from_fn(a.dim(), a.dim(), |i, j| a.matrix[(j, i)].conj() * (w[j] / w[i]));
    WeightedOperator::from_parts(a.space.clone(), matrix)
}

/// Largest singular value with respect to the weighted inner product.
pub fn operator_norm(a: &WeightedOperator) -> f64 {
    jacobi::svd(&a.to_euclidean()).sigma_max()
}

/// `‖a - b‖ / (1 + max(‖a‖, ‖b‖))` in the weighted operator norm.
pub fn relative_deviation(a: &WeightedOperator, b: &WeightedOperator) -> f64 {
    let diff = operator_norm(&(a - b));
    diff / (1.0 + operator_norm(a).max(operator_norm(b)))
}

/// `‖A A* − A* A‖`.
pub fn commutator_norm(a: &WeightedOperator) -> f64 {
    let adj = a.adjoint();
    operator_norm(&(&(a * &adj) - &(&adj * a)))
}

/// Real spectrum and μ-orthonormal eigenbasis of a μ-self-adjoint operator.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    space: Arc<FiniteMeasureSpace>,
    pub values: Vec<f64>,
    /// μ-orthonormal eigenvectors, one per column.
    pub vectors: DMatrix<C64>,
    /// The same eigenvectors in the Euclidean frame (orthonormal columns).
    euclidean: DMatrix<C64>,
}

impl EigenSystem {
    pub fn vector(&self, k: usize) -> MeasurableFunction {
        MeasurableFunction::new(self.space.clone(), self.vectors.column(k).iter().copied().collect())
            .expect("finite eigenvector")
    }

    pub fn spectral_radius(&self) -> f64 {
        self.values.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Eigenvalues with `|λ| ≤ tol · max|λ|` replaced by exact zeros.
    pub fn snapped_values(&self, tol: f64) -> Vec<f64> {
        let threshold = tol * self.spectral_radius();
        self.values
            .iter()
            .map(|&x| if x.abs() <= threshold { 0.0 } else { x })
            .collect()
    }

    /// `Σ g(λ_k) v_k ⟨·, v_k⟩_μ` for the given transformed eigenvalues.
    fn assemble(&self, transformed: impl Iterator<Item = C64>) -> WeightedOperator {
        let q = &self.euclidean;
        let n = q.nrows();
        let mut b = DMatrix::<C64>::zeros(n, n);
        for (k, g) in transformed.enumerate() {
            if g == ZERO {
                continue;
            }
            let col = q.column(k);
            b += (col * col.adjoint()) * g;
        }
        WeightedOperator::from_euclidean(self.space.clone(), &b)
    }
}

pub fn hermitian_eig(a: &WeightedOperator) -> Result<EigenSystem> {
    let b = a.to_euclidean();
    let deviation = (&b - b.adjoint()).norm();
    let scale = b.norm();
    if deviation > SELF_ADJOINT_TOL * scale {
        return Err(Error::NotSelfAdjoint {
            deviation: if scale > 0.0 { deviation / scale } else { deviation },
        });
    }
    let eig = jacobi::hermitian_eigen(&b);
    let w = a.space.weights();
    let vectors = DMatrix::from_fn(a.dim(), a.dim(), |i, k| eig.vectors[(i, k)] / w[i].sqrt());
    Ok(EigenSystem {
        space: a.space.clone(),
        values: eig.values,
        vectors,
        euclidean: eig.vectors,
    })
}

/// Positive square root by eigendecomposition.
///
/// Eigenvalues within `CLAMP_TOL · ‖A‖` of zero are treated as zero; anything
/// more negative is an error.
pub fn positive_sqrt(a: &WeightedOperator) -> Result<WeightedOperator> {
    let eig = hermitian_eig(a)?;
    let threshold = CLAMP_TOL * eig.spectral_radius();
    if let Some(&eigenvalue) = eig.values.iter().find(|&&x| x < -threshold) {
        return Err(Error::NotPositive { eigenvalue });
    }
    let roots = eig
        .snapped_values(CLAMP_TOL)
        .into_iter()
        .map(|x| C64::new(x.max(0.0).sqrt(), 0.0));
    Ok(eig.assemble(roots))
}

/// `f(A)` through the eigensystem of a μ-self-adjoint operator, evaluated on
/// the spectrum with near-zero eigenvalues snapped to zero.
pub fn func_calc_oracle(a: &WeightedOperator, f: impl Fn(f64) -> f64) -> Result<WeightedOperator> {
    let eig = hermitian_eig(a)?;
    let values = eig.snapped_values(CLAMP_TOL).into_iter().map(|x| C64::new(f(x), 0.0));
    Ok(eig.assemble(values))
}

/// Polar decomposition `A = U P` with `P = (A*A)^{1/2}` and
/// `ker U = ker P = ker A`, read off the singular value decomposition:
/// `P = Σ σ_k v_k v_k*` and `U = Σ u_k v_k*` over the singular values above
/// the rank threshold.
pub fn polar_oracle(a: &WeightedOperator) -> (WeightedOperator, WeightedOperator) {
    let s = jacobi::svd(&a.to_euclidean());
    let n = a.dim();
    let threshold = RANK_TOL * s.sigma_max();
    let mut u = DMatrix::<C64>::zeros(n, n);
    let mut p = DMatrix::<C64>::zeros(n, n);
    for k in 0..n {
        if s.sigma[k] <= threshold || s.sigma[k] == 0.0 {
            break;
        }
        let vk = s.v.column(k);
        let uk = s.u.column(k);
        u += uk * vk.adjoint();
        p += (vk * vk.adjoint()) * C64::new(s.sigma[k], 0.0);
    }
    (
        WeightedOperator::from_euclidean(a.space.clone(), &u),
        WeightedOperator::from_euclidean(a.space.clone(), &p),
    )
}

/// μ-orthogonal projection onto `ker A`; singular values at or below
/// `RANK_TOL · σ_max` count as zero.
pub fn kernel_projection(a: &WeightedOperator) -> WeightedOperator {
    let s = jacobi::svd(&a.to_euclidean());
    let n = a.dim();
    let threshold = RANK_TOL * s.sigma_max();
    let mut k = DMatrix::<C64>::zeros(n, n);
    for j in 0..n {
        if s.sigma[j] <= threshold {
            let vj = s.v.column(j);
            k += vj * vj.adjoint();
        }
    }
    WeightedOperator::from_euclidean(a.space.clone(), &k)
}

/// Numerical rank at `RANK_TOL`.
pub fn numerical_rank(a: &WeightedOperator) -> usize {
    let s = jacobi::svd(&a.to_euclidean());
    let threshold = RANK_TOL * s.sigma_max();
    s.sigma.iter().filter(|&&x| x > threshold).count()
}

/// Eigenvalues of an arbitrary operator from a complex Schur form.
pub fn general_eigenvalues(a: &WeightedOperator) -> Vec<C64> {
    let (_, t) = a.to_euclidean().schur().unpack();
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

/// `f(A)` for a normal operator through its Schur form, which is diagonal up
/// to rounding when `A` is normal.
pub fn normal_func_calc_oracle(a: &WeightedOperator, f: impl Fn(C64) -> C64, tol: f64) -> Result<WeightedOperator> {
    let norm = operator_norm(a);
    if commutator_norm(a) > tol * (1.0 + norm * norm) {
        return Err(Error::NotNormal);
    }
    let (q, t) = a.to_euclidean().schur().unpack();
    let n = t.nrows();
    let diag = DMatrix::from_fn(n, n, |i, j| if i == j { f(t[(i, i)]) } else { ZERO });
    let b = &q * diag * q.adjoint();
    Ok(WeightedOperator::from_euclidean(a.space.clone(), &b))
}

/// `‖A A* A − A‖`, which vanishes exactly for partial isometries.
pub fn partial_isometry_residual(a: &WeightedOperator) -> f64 {
    let t = a * &(&a.adjoint() * a);
    operator_norm(&(&t - a))
}
