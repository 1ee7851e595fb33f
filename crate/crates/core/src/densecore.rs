//! Small dense symmetric linear algebra.
//!
//! Symmetric and generalized symmetric-definite eigendecompositions and a
//! weighted Gram–Schmidt procedure. These are the workhorses behind the
//! Rayleigh–Ritz extraction, the dense reference solver and Golub–Welsch.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Largest dimension accepted by the dense eigensolvers.
pub const DENSE_CAP: usize = 2000;

/// Relative projection residual below which a vector counts as dependent.
pub const DROP_TOL: f64 = 1e-10;

/// Dense symmetric matrix. The stored entries are exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSym(DMatrix<f64>);

impl DenseSym {
    /// Symmetrizes `a` as `(a + aᵀ) / 2`.
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidArgument(format!(
                "matrix is {}x{}, expected square",
                a.nrows(),
                a.ncols()
            )));
        }
        let n = a.nrows();
        let mut s = a;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (s[(i, j)] + s[(j, i)]);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        Ok(DenseSym(s))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        DenseSym(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }
}

/// Eigenvalues in ascending order and matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigenPairs {
    /// `V f(Λ) Vᵀ c` for Euclidean-orthonormal `V`.
    pub fn apply_function(&self, f: impl Fn(f64) -> f64, c: &DVector<f64>) -> DVector<f64> {
        let mut coeffs = self.vectors.tr_mul(c);
        for (y, &lam) in coeffs.iter_mut().zip(&self.values) {
            *y *= f(lam);
        }
        &self.vectors * coeffs
    }
}

/// Full spectral decomposition of a symmetric matrix, values ascending.
pub fn sym_eig(a: &DenseSym) -> Result<EigenPairs> {
    let n = a.dim();
    if n > DENSE_CAP {
        return Err(Error::ResourceLimit(format!(
            "dense eigensolve of dimension {n} exceeds cap {DENSE_CAP}"
        )));
    }
    if n == 0 {
        return Ok(EigenPairs {
            values: Vec::new(),
            vectors: DMatrix::zeros(0, 0),
        });
    }
    if a.0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("matrix has non-finite entries".into()));
    }
    let eig = SymmetricEigen::try_new(a.0.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Internal("symmetric QR iteration did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(EigenPairs { values, vectors })
}

/// Solves `K u = λ M u` for symmetric `K` and symmetric positive definite `M`.
///
/// Reduced through the Cholesky congruence `L⁻¹ K L⁻ᵀ` with `M = L Lᵀ`; the
/// returned eigenvectors satisfy `Uᵀ M U = I`.
pub fn gen_sym_eig(k: &DenseSym, m: &DenseSym) -> Result<EigenPairs> {
    let n = k.dim();
    if m.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m.dim(),
        });
    }
    let chol = m
        .0
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Validation("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let x = l
        .solve_lower_triangular(&k.0)
        .ok_or_else(|| Error::Internal("singular Cholesky factor".into()))?;
    let c = l
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| Error::Internal("singular Cholesky factor".into()))?;
    let inner = sym_eig(&DenseSym::new(c)?)?;
    let vectors = l
        .transpose()
        .solve_upper_triangular(&inner.vectors)
        .ok_or_else(|| Error::Internal("singular Cholesky factor".into()))?;
    Ok(EigenPairs {
        values: inner.values,
        vectors,
    })
}

/// Symmetric positive definite operator defining an inner product `(u, v) = uᵀ G v`.
pub trait GramOperator {
    fn dim(&self) -> usize;
    fn apply(&self, v: &DVector<f64>) -> DVector<f64>;

    fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        u.dot(&self.apply(v))
    }
}

/// The Euclidean inner product on `R^n`.
#[derive(Debug, Clone, Copy)]
pub struct Euclidean(pub usize);

impl GramOperator for Euclidean {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        v.clone()
    }
}

impl GramOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        self * v
    }
}

impl GramOperator for DenseSym {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.0 * v
    }
}

/// Incrementally grown G-orthonormal basis.
///
/// Each candidate is normalized, orthogonalized twice by modified Gram–Schmidt
/// and dropped when less than [`DROP_TOL`] of its G-norm survives.
#[derive(Debug, Clone)]
pub struct OrthoBasis {
    vectors: Vec<DVector<f64>>,
    images: Vec<DVector<f64>>,
    drop_tol: f64,
}

impl OrthoBasis {
    pub fn new() -> Self {
        Self::with_drop_tol(DROP_TOL)
    }

    pub fn with_drop_tol(drop_tol: f64) -> Self {
        OrthoBasis {
            vectors: Vec::new(),
            images: Vec::new(),
            drop_tol,
        }
    }

    /// Adds `v` to the basis; returns `false` when it was dropped as dependent.
    pub fn push<G: GramOperator + ?Sized>(&mut self, v: &DVector<f64>, gram: &G) -> bool {
        if v.iter().any(|x| !x.is_finite()) {
            return false;
        }
        let scale = v.amax();
        if scale == 0.0 {
            return false;
        }
        let mut w = v / scale;
        let norm0 = w.dot(&gram.apply(&w)).max(0.0).sqrt();
        if norm0 == 0.0 || !norm0.is_finite() {
            return false;
        }
        w /= norm0;
        for _pass in 0..2 {
            for (q, gq) in self.vectors.iter().zip(&self.images) {
                let c = gq.dot(&w);
                w.axpy(-c, q, 1.0);
            }
        }
        let gw = gram.apply(&w);
        let norm = w.dot(&gw).max(0.0).sqrt();
        if !(norm > self.drop_tol) {
            return false;
        }
        self.vectors.push(w / norm);
        self.images.push(gw / norm);
        true
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[DVector<f64>] {
        &self.vectors
    }

    /// `G q_i` for every basis vector `q_i`.
    pub fn images(&self) -> &[DVector<f64>] {
        &self.images
    }

    /// Basis as the columns of an `n x len` matrix.
    pub fn to_matrix(&self, n: usize) -> DMatrix<f64> {
        if self.vectors.is_empty() {
            return DMatrix::zeros(n, 0);
        }
        DMatrix::from_columns(&self.vectors)
    }

    pub fn images_matrix(&self, n: usize) -> DMatrix<f64> {
        if self.images.is_empty() {
            return DMatrix::zeros(n, 0);
        }
        DMatrix::from_columns(&self.images)
    }
}

impl Default for OrthoBasis {
    fn default() -> Self {
        Self::new()
    }
}

/// Result of [`orthonormalize`].
#[derive(Debug, Clone)]
pub struct Orthonormalized {
    pub basis: OrthoBasis,
    /// Input indices that contributed a basis vector, in order.
    pub kept: Vec<usize>,
    /// Input indices dropped as (numerically) dependent or zero.
    pub dropped: Vec<usize>,
}

/// Maximal G-orthonormal set spanning the same space as `vectors`.
pub fn orthonormalize<G: GramOperator + ?Sized>(
    vectors: &[DVector<f64>],
    gram: &G,
) -> Result<Orthonormalized> {
    let mut basis = OrthoBasis::new();
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for (i, v) in vectors.iter().enumerate() {
        if v.len() != gram.dim() {
            return Err(Error::DimensionMismatch {
                expected: gram.dim(),
                found: v.len(),
            });
        }
        if basis.push(v, gram) {
            kept.push(i);
        } else {
            dropped.push(i);
        }
    }
    Ok(Orthonormalized {
        basis,
        kept,
        dropped,
    })
}
