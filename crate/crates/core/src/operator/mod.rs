//! Discrete diffusion operators as symmetric definite pencils `(K, M)`.
//!
//! The operator of interest is `L = M⁻¹K`, which is self-adjoint in the
//! M-inner product `(u, v)_M = uᵀMv`. Shifted systems `(K − dM) w = M b` are
//! solved with a sparse Cholesky factorization, cached once per shift.

pub mod matrix_market;

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::densecore::{gen_sym_eig, sym_eig, DenseSym, GramOperator, DENSE_CAP};
use crate::error::{check_dim, Error, Result};

pub use matrix_market::{format_matrix_market, parse_matrix_market, read_matrix_market, write_matrix_market};

/// Coefficient vector with respect to the discretization basis.
pub type Vector = DVector<f64>;

/// Largest pencil dimension the generators will build.
pub const MAX_PENCIL_DIM: usize = 1 << 22;

/// Default relative residual accepted for a shifted solve.
pub const SOLVE_TOL: f64 = 1e-12;

/// Relative asymmetry tolerated when a matrix is read in general storage.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Dimension up to which [`OperatorPencil::spectral_interval`] diagonalizes densely.
pub const DENSE_INTERVAL_CAP: usize = 400;

/// A pole `d ∈ [−∞, 0]` of a rational Krylov space. `−∞` is its own variant
/// and never enters floating-point arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Pole {
    NegInfinity,
    Finite(f64),
}

impl Pole {
    /// Pole `−t` for the reaction coefficient (snapshot) `t`; `None` stands for `t = ∞`.
    pub fn from_snapshot(t: Option<f64>) -> Pole {
        match t {
            None => Pole::NegInfinity,
            Some(t) => Pole::Finite(-t),
        }
    }

    /// Snapshot `t = −d`; `None` for the pole at `−∞`.
    pub fn snapshot(self) -> Option<f64> {
        match self {
            Pole::NegInfinity => None,
            Pole::Finite(d) => Some(if d == 0.0 { 0.0 } else { -d }),
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Pole::NegInfinity => None,
            Pole::Finite(d) => Some(d),
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Pole::NegInfinity)
    }
}

/// Enclosure `[λ_min, λ_max]` of the spectrum of a pencil.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralInterval {
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl SpectralInterval {
    pub fn new(lambda_min: f64, lambda_max: f64) -> Result<Self> {
        if !(lambda_min > 0.0 && lambda_min <= lambda_max && lambda_max.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "spectral interval [{lambda_min}, {lambda_max}] must satisfy 0 < min <= max < inf"
            )));
        }
        Ok(SpectralInterval {
            lambda_min,
            lambda_max,
        })
    }

    /// Ratio `λ_min / λ_max ∈ (0, 1]`.
    pub fn delta(&self) -> f64 {
        self.lambda_min / self.lambda_max
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lambda_min && x <= self.lambda_max
    }

    pub fn is_degenerate(&self) -> bool {
        self.lambda_min == self.lambda_max
    }
}

struct ShiftedFactor {
    matrix: CscMatrix<f64>,
    factor: CscCholesky<f64>,
}

type FactorSlot = Arc<OnceLock<std::result::Result<Arc<ShiftedFactor>, Error>>>;

/// Symmetric definite pencil `(K, M)`. `M = None` means the identity.
///
/// Immutable after construction; factorizations are cached per shift and
/// computed at most once even under concurrent use.
pub struct OperatorPencil {
    stiffness: CscMatrix<f64>,
    mass: Option<CscMatrix<f64>>,
    n: usize,
    solve_tol: f64,
    mass_factor: OnceLock<CscCholesky<f64>>,
    factors: Mutex<HashMap<u64, FactorSlot>>,
}

impl std::fmt::Debug for OperatorPencil {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OperatorPencil")
            .field("n", &self.n)
            .field("nnz_k", &self.stiffness.nnz())
            .field("identity_mass", &self.mass.is_none())
            .finish()
    }
}

fn asymmetry(a: &CscMatrix<f64>) -> f64 {
    let scale = a.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let diff = a - a.transpose();
    diff.values().iter().fold(0.0_f64, |m, v| m.max(v.abs())) / scale
}

fn symmetrized(a: &CscMatrix<f64>) -> CscMatrix<f64> {
    let sum = a + a.transpose();
    sum * 0.5
}

impl OperatorPencil {
    /// Validates symmetry and definiteness of `(K, M)`.
    pub fn new(stiffness: CscMatrix<f64>, mass: Option<CscMatrix<f64>>) -> Result<Self> {
        let n = stiffness.nrows();
        if n == 0 || stiffness.ncols() != n {
            return Err(Error::Validation(format!(
                "stiffness is {}x{}, expected nonempty square",
                n,
                stiffness.ncols()
            )));
        }
        if n > MAX_PENCIL_DIM {
            return Err(Error::ResourceLimit(format!("dimension {n} exceeds {MAX_PENCIL_DIM}")));
        }
        let check = |name: &str, a: &CscMatrix<f64>| -> Result<CscMatrix<f64>> {
            if a.values().iter().any(|v| !v.is_finite()) {
                return Err(Error::Validation(format!("{name} has non-finite entries")));
            }
            let asym = asymmetry(a);
            if asym > SYMMETRY_TOL {
                return Err(Error::Validation(format!(
                    "{name} is not symmetric (relative asymmetry {asym:.3e})"
                )));
            }
            Ok(if asym == 0.0 { a.clone() } else { symmetrized(a) })
        };
        let stiffness = check("stiffness", &stiffness)?;
        let mass = match mass {
            Some(m) => {
                if m.nrows() != n || m.ncols() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: m.nrows(),
                    });
                }
                Some(check("mass", &m)?)
            }
            None => None,
        };
        let pencil = OperatorPencil {
            stiffness,
            mass,
            n,
            solve_tol: SOLVE_TOL,
            mass_factor: OnceLock::new(),
            factors: Mutex::new(HashMap::new()),
        };
        if let Some(m) = &pencil.mass {
            let f = CscCholesky::factor(m)
                .map_err(|_| Error::Validation("mass matrix is not positive definite".into()))?;
            let _ = pencil.mass_factor.set(f);
        }
        pencil.factor(0.0).map_err(|e| match e {
            Error::Internal(_) => Error::Validation(
                "stiffness is not positive definite; the pencil has a nonpositive eigenvalue".into(),
            ),
            other => other,
        })?;
        Ok(pencil)
    }

    pub fn from_dense(k: &DMatrix<f64>, m: Option<&DMatrix<f64>>) -> Result<Self> {
        let to_csc = |a: &DMatrix<f64>| {
            let mut coo = CooMatrix::new(a.nrows(), a.ncols());
            for j in 0..a.ncols() {
                for i in 0..a.nrows() {
                    if a[(i, j)] != 0.0 {
                        coo.push(i, j, a[(i, j)]);
                    }
                }
            }
            CscMatrix::from(&coo)
        };
        Self::new(to_csc(k), m.map(to_csc))
    }

    /// Sets the relative residual tolerance for shifted solves.
    pub fn with_solve_tol(mut self, tol: f64) -> Self {
        self.solve_tol = tol;
        self
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn stiffness(&self) -> &CscMatrix<f64> {
        &self.stiffness
    }

    /// Mass matrix; `None` when it is the identity.
    pub fn mass(&self) -> Option<&CscMatrix<f64>> {
        self.mass.as_ref()
    }

    pub fn dense_stiffness(&self) -> DMatrix<f64> {
        DMatrix::from(&self.stiffness)
    }

    pub fn dense_mass(&self) -> DMatrix<f64> {
        match &self.mass {
            Some(m) => DMatrix::from(m),
            None => DMatrix::identity(self.n, self.n),
        }
    }

    pub fn apply_k(&self, v: &Vector) -> Result<Vector> {
        check_dim(self.n, v.len())?;
        Ok(&self.stiffness * v)
    }

    pub fn apply_m(&self, v: &Vector) -> Result<Vector> {
        check_dim(self.n, v.len())?;
        Ok(match &self.mass {
            Some(m) => m * v,
            None => v.clone(),
        })
    }

    fn mass_solve(&self, v: Vector) -> Vector {
        match self.mass_factor.get() {
            Some(f) => {
                let x = f.solve(&v);
                x.column(0).into_owned()
            }
            None => v,
        }
    }

    /// `L v = M⁻¹ K v`.
    pub fn apply_l(&self, v: &Vector) -> Result<Vector> {
        let kv = self.apply_k(v)?;
        Ok(self.mass_solve(kv))
    }

    pub fn m_inner(&self, u: &Vector, v: &Vector) -> Result<f64> {
        check_dim(self.n, u.len())?;
        Ok(u.dot(&self.apply_m(v)?))
    }

    pub fn m_norm(&self, u: &Vector) -> Result<f64> {
        Ok(self.m_inner(u, u)?.max(0.0).sqrt())
    }

    fn shifted_matrix(&self, d: f64) -> CscMatrix<f64> {
        if d == 0.0 {
            return self.stiffness.clone();
        }
        match &self.mass {
            Some(m) => &self.stiffness - m * d,
            None => &self.stiffness - CscMatrix::identity(self.n) * d,
        }
    }

    fn factor(&self, d: f64) -> Result<Arc<ShiftedFactor>> {
        let key = if d == 0.0 { 0.0_f64.to_bits() } else { d.to_bits() };
        let slot = {
            let mut map = self
                .factors
                .lock()
                .map_err(|_| Error::Internal("factor cache poisoned".into()))?;
            map.entry(key).or_default().clone()
        };
        slot.get_or_init(|| {
            let matrix = self.shifted_matrix(d);
            CscCholesky::factor(&matrix)
                .map(|factor| Arc::new(ShiftedFactor { matrix, factor }))
                .map_err(|e| Error::Internal(format!("Cholesky factorization failed for shift {d}: {e:?}")))
        })
        .clone()
    }

    /// Number of distinct shifts factorized so far.
    pub fn cached_factorizations(&self) -> usize {
        self.factors.lock().map(|m| m.len()).unwrap_or(0)
    }

    pub fn clear_factor_cache(&self) {
        if let Ok(mut m) = self.factors.lock() {
            m.clear();
        }
    }

    /// Solves `(K − dM) w = M rhs`, i.e. `w = (L − d)⁻¹ rhs`; the pole `−∞`
    /// returns `rhs` unchanged.
    pub fn shifted_solve(&self, pole: Pole, rhs: &Vector) -> Result<Vector> {
        check_dim(self.n, rhs.len())?;
        let d = match pole {
            Pole::NegInfinity => return Ok(rhs.clone()),
            Pole::Finite(d) => d,
        };
        if d.is_nan() || d > 0.0 {
            return Err(Error::InvalidArgument(format!("pole {d} must lie in [-inf, 0]")));
        }
        if d.is_infinite() {
            return Err(Error::InvalidArgument(
                "use Pole::NegInfinity for the pole at infinity".into(),
            ));
        }
        let f = self.factor(d)?;
        let mrhs = self.apply_m(rhs)?;
        let rhs_norm = mrhs.norm();
        let mut w = f.factor.solve(&mrhs).column(0).into_owned();
        if rhs_norm == 0.0 {
            return Ok(w);
        }
        let resid = &mrhs - &f.matrix * &w;
        if resid.norm() > self.solve_tol * rhs_norm {
            let corr = f.factor.solve(&resid).column(0).into_owned();
            w += corr;
        }
        Ok(w)
    }

    /// Relative residual `‖(K − dM) w − M rhs‖ / ‖M rhs‖` in the Euclidean norm.
    pub fn shifted_residual(&self, pole: Pole, w: &Vector, rhs: &Vector) -> Result<f64> {
        let mrhs = self.apply_m(rhs)?;
        let r = match pole {
            Pole::NegInfinity => w - rhs,
            Pole::Finite(d) => &self.stiffness * w - self.apply_m(w)? * d - &mrhs,
        };
        let denom = mrhs.norm();
        Ok(if denom == 0.0 { r.norm() } else { r.norm() / denom })
    }

    /// Encloses `[λ₁, λₙ]` with relative accuracy `tol` on each endpoint and
    /// rounds the result outward by `tol`.
    pub fn spectral_interval(&self, tol: f64) -> Result<SpectralInterval> {
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::InvalidArgument(format!("tolerance {tol} outside (0, 1)")));
        }
        let (lo, hi) = if self.n <= DENSE_INTERVAL_CAP {
            let e = gen_sym_eig(
                &DenseSym::new(self.dense_stiffness())?,
                &DenseSym::new(self.dense_mass())?,
            )?;
            (e.values[0], e.values[self.n - 1])
        } else {
            let hi = self.lanczos_extreme(|v| self.apply_l(v), tol, 0x5eed_0001)?;
            let inv_lo = self.lanczos_extreme(|v| self.shifted_solve(Pole::Finite(0.0), v), tol, 0x5eed_0002)?;
            (1.0 / inv_lo, hi)
        };
        if !(lo > 0.0) {
            return Err(Error::Validation(format!("smallest eigenvalue {lo} is not positive")));
        }
        SpectralInterval::new(lo * (1.0 - tol), hi * (1.0 + tol))
    }

    /// Largest eigenvalue of an M-self-adjoint operator by Lanczos with full
    /// reorthogonalization in the M-inner product.
    fn lanczos_extreme(
        &self,
        op: impl Fn(&Vector) -> Result<Vector>,
        tol: f64,
        seed: u64,
    ) -> Result<f64> {
        let n = self.n;
        let cap = n.min(DENSE_CAP);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let mut mv = self.apply_m(&v)?;
        let nrm = v.dot(&mv).sqrt();
        v /= nrm;
        mv /= nrm;
        let mut basis: Vec<Vector> = Vec::new();
        let mut images: Vec<Vector> = Vec::new();
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut best = f64::NAN;
        for j in 0..cap {
            basis.push(v.clone());
            images.push(mv.clone());
            let mut w = op(&v)?;
            let a = mv.dot(&w);
            alpha.push(a);
            for _pass in 0..2 {
                for (q, mq) in basis.iter().zip(&images) {
                    let c = mq.dot(&w);
                    w.axpy(-c, q, 1.0);
                }
            }
            let mw = self.apply_m(&w)?;
            let b = w.dot(&mw).max(0.0).sqrt();
            let m = alpha.len();
            let t = DMatrix::from_fn(m, m, |r, c| {
                if r == c {
                    alpha[r]
                } else if r.abs_diff(c) == 1 {
                    beta[r.min(c)]
                } else {
                    0.0
                }
            });
            let e = sym_eig(&DenseSym::new(t)?)?;
            let theta = e.values[m - 1];
            let resid = b * e.vectors[(m - 1, m - 1)].abs();
            best = theta;
            let scale = theta.abs().max(f64::MIN_POSITIVE);
            if resid <= 0.25 * tol * scale || b <= 1e-14 * scale || j + 1 == n {
                return Ok(theta);
            }
            beta.push(b);
            v = w / b;
            mv = mw / b;
        }
        Err(Error::Convergence {
            iterations: cap,
            message: "Lanczos extremal eigenvalue".into(),
            best: vec![best],
        })
    }
}

impl GramOperator for OperatorPencil {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, v: &Vector) -> Vector {
        match &self.mass {
            Some(m) => m * v,
            None => v.clone(),
        }
    }
}

fn fd_1d_matrix(n: usize) -> CscMatrix<f64> {
    let h = 1.0 / (n as f64 + 1.0);
    let s = 1.0 / (h * h);
    let mut coo = CooMatrix::new(n, n);
    for i in 0..n {
        coo.push(i, i, 2.0 * s);
        if i + 1 < n {
            coo.push(i, i + 1, -s);
            coo.push(i + 1, i, -s);
        }
    }
    CscMatrix::from(&coo)
}

/// Three-point Dirichlet Laplacian on `(0, 1)` with `h = 1/(n+1)`, `M = I`.
pub fn make_fd_laplacian_1d(n: usize) -> Result<OperatorPencil> {
    if n == 0 {
        return Err(Error::InvalidArgument("grid size must be positive".into()));
    }
    if n > MAX_PENCIL_DIM {
        return Err(Error::ResourceLimit(format!("dimension {n} exceeds {MAX_PENCIL_DIM}")));
    }
    OperatorPencil::new(fd_1d_matrix(n), None)
}

/// Five-point Dirichlet Laplacian on `(0, 1)²` with `nx` interior nodes per direction, `M = I`.
pub fn make_fd_laplacian_2d(nx: usize) -> Result<OperatorPencil> {
    if nx == 0 {
        return Err(Error::InvalidArgument("grid size must be positive".into()));
    }
    let n = nx
        .checked_mul(nx)
        .filter(|&n| n <= MAX_PENCIL_DIM)
        .ok_or_else(|| Error::ResourceLimit(format!("{nx}^2 exceeds {MAX_PENCIL_DIM}")))?;
    let h = 1.0 / (nx as f64 + 1.0);
    let s = 1.0 / (h * h);
    let mut coo = CooMatrix::new(n, n);
    let idx = |i: usize, j: usize| i * nx + j;
    for i in 0..nx {
        for j in 0..nx {
            let p = idx(i, j);
            coo.push(p, p, 4.0 * s);
            if j + 1 < nx {
                coo.push(p, idx(i, j + 1), -s);
                coo.push(idx(i, j + 1), p, -s);
            }
            if i + 1 < nx {
                coo.push(p, idx(i + 1, j), -s);
                coo.push(idx(i + 1, j), p, -s);
            }
        }
    }
    OperatorPencil::new(CscMatrix::from(&coo), None)
}

/// Closed-form eigenvalues `(4/h²) sin²(jπh/2)`, `j = 1..n`, of the 1D pencil.
pub fn fd_1d_eigenvalues(n: usize) -> Vec<f64> {
    let h = 1.0 / (n as f64 + 1.0);
    (1..=n)
        .map(|j| {
            let s = (j as f64 * std::f64::consts::PI * h / 2.0).sin();
            4.0 / (h * h) * s * s
        })
        .collect()
}

/// Reads `K` (and optionally `M`) from Matrix Market files.
pub fn load_pencil(path_k: &Path, path_m: Option<&Path>) -> Result<OperatorPencil> {
    let k = read_matrix_market(path_k)?;
    let m = path_m.map(read_matrix_market).transpose()?;
    OperatorPencil::new(k, m)
}
