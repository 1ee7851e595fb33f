//! Rational Krylov spaces, Rayleigh–Ritz extraction and reduced basis
//! surrogates in the M-inner product.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::densecore::{orthonormalize, sym_eig, DenseSym, EigenPairs};
use crate::error::{check_dim, Error, Result};
use crate::operator::{OperatorPencil, Pole, Vector};
use crate::rational::{BarycentricRational, PartialFraction};

/// Relative gap below which two Ritz values count as coincident.
pub const RITZ_GAP_TOL: f64 = 1e-10;

/// Ordered, pairwise distinct poles `d_j ∈ [−∞, 0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleSet {
    poles: Vec<Pole>,
}

impl PoleSet {
    pub fn new(poles: Vec<Pole>) -> Result<Self> {
        if poles.is_empty() {
            return Err(Error::InvalidArgument("pole set is empty".into()));
        }
        let mut finite = Vec::with_capacity(poles.len());
        let mut infinite = 0;
        for p in &poles {
            match *p {
                Pole::NegInfinity => infinite += 1,
                Pole::Finite(d) => {
                    if !(d.is_finite() && d <= 0.0) {
                        return Err(Error::InvalidArgument(format!("pole {d} must lie in (-inf, 0]")));
                    }
                    finite.push(if d == 0.0 { 0.0 } else { d });
                }
            }
        }
        if infinite > 1 {
            return Err(Error::InvalidArgument("pole set holds -inf more than once".into()));
        }
        finite.sort_by(f64::total_cmp);
        if let Some(w) = finite.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(format!("duplicate pole {}", w[0])));
        }
        Ok(PoleSet { poles })
    }

    /// Poles `−t_j` for snapshots `t_j`; `None` is the snapshot `∞`.
    pub fn from_snapshots(snapshots: &[Option<f64>]) -> Result<Self> {
        for t in snapshots.iter().flatten() {
            if !(t.is_finite() && *t >= 0.0) {
                return Err(Error::InvalidArgument(format!("snapshot {t} must lie in [0, inf)")));
            }
        }
        Self::new(snapshots.iter().map(|&t| Pole::from_snapshot(t)).collect())
    }

    pub fn poles(&self) -> &[Pole] {
        &self.poles
    }

    /// Snapshot view `t_j = −d_j`, `None` standing for `∞`.
    pub fn snapshots(&self) -> Vec<Option<f64>> {
        self.poles.iter().map(|p| p.snapshot()).collect()
    }

    pub fn len(&self) -> usize {
        self.poles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poles.is_empty()
    }

    /// `k` in "k + 1 poles".
    pub fn k(&self) -> usize {
        self.poles.len() - 1
    }

    pub fn contains_infinity(&self) -> bool {
        self.poles.iter().any(|p| p.is_infinite())
    }

    pub fn finite(&self) -> Vec<f64> {
        self.poles.iter().filter_map(|p| p.finite()).collect()
    }
}

/// Denominator `q(z) = Π (z − d_j)` over the finite poles, as `(ln |q|, sign)`.
fn log_q(poles: &[f64], z: f64) -> (f64, f64) {
    poles.iter().fold((0.0, 1.0), |(lg, sg), &d| {
        let f = z - d;
        (lg + f.abs().ln(), sg * f.signum())
    })
}

/// M-orthonormal basis `W` of a rational Krylov space with its compression
/// `L_r = Wᵀ K W` (which equals `Wᵀ M L W`).
#[derive(Debug, Clone)]
pub struct KrylovBasis<'p> {
    pencil: &'p OperatorPencil,
    poles: PoleSet,
    w: DMatrix<f64>,
    projected: DenseSym,
    eig: EigenPairs,
    /// `Wᵀ M b`.
    coeffs: DVector<f64>,
    b_norm: f64,
    kept: Vec<usize>,
    dropped: Vec<usize>,
}

/// Shifted solves `w_j = (L − d_j)⁻¹ b` for every pole, concurrently.
pub fn snapshot_solves(pencil: &OperatorPencil, b: &Vector, poles: &PoleSet) -> Result<Vec<Vector>> {
    poles
        .poles()
        .par_iter()
        .map(|&p| pencil.shifted_solve(p, b))
        .collect()
}

/// Builds the space `span{(L − d_j)⁻¹ b}` and its Rayleigh–Ritz compression.
///
/// Numerically dependent solves are dropped and reported through
/// [`KrylovBasis::dropped`]; the space then has dimension below `k + 1`.
pub fn build_basis<'p>(pencil: &'p OperatorPencil, b: &Vector, poles: &PoleSet) -> Result<KrylovBasis<'p>> {
    check_dim(pencil.dim(), b.len())?;
    let b_norm = pencil.m_norm(b)?;
    if b_norm == 0.0 || !b_norm.is_finite() {
        return Err(Error::InvalidArgument("right-hand side must be nonzero and finite".into()));
    }
    let solves = snapshot_solves(pencil, b, poles)?;
    from_vectors(pencil, b, poles.clone(), &solves)
}

/// Basis spanned by precomputed snapshot vectors (one per pole, same order).
pub fn from_vectors<'p>(
    pencil: &'p OperatorPencil,
    b: &Vector,
    poles: PoleSet,
    vectors: &[Vector],
) -> Result<KrylovBasis<'p>> {
    check_dim(poles.len(), vectors.len())?;
    let b_norm = pencil.m_norm(b)?;
    let ortho = orthonormalize(vectors, pencil)?;
    if ortho.basis.is_empty() {
        return Err(Error::Degenerate("every snapshot vector vanished".into()));
    }
    let n = pencil.dim();
    let w = ortho.basis.to_matrix(n);
    let mw = ortho.basis.images_matrix(n);
    let kw = DMatrix::from_columns(
        &ortho
            .basis
            .vectors()
            .iter()
            .map(|q| pencil.apply_k(q))
            .collect::<Result<Vec<_>>>()?,
    );
    let projected = DenseSym::new(w.tr_mul(&kw))?;
    let eig = sym_eig(&projected)?;
    let coeffs = mw.tr_mul(b);
    Ok(KrylovBasis {
        pencil,
        poles,
        w,
        projected,
        eig,
        coeffs,
        b_norm,
        kept: ortho.kept,
        dropped: ortho.dropped,
    })
}

impl<'p> KrylovBasis<'p> {
    pub fn pencil(&self) -> &'p OperatorPencil {
        self.pencil
    }

    pub fn poles(&self) -> &PoleSet {
        &self.poles
    }

    /// Space dimension (`k + 1` unless solves were dropped).
    pub fn dim(&self) -> usize {
        self.w.ncols()
    }

    /// Basis vectors as columns.
    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn projected(&self) -> &DenseSym {
        &self.projected
    }

    /// Rational Ritz values, ascending.
    pub fn ritz_values(&self) -> &[f64] {
        &self.eig.values
    }

    /// Eigenvectors of the compressed operator (columns, matching `ritz_values`).
    pub fn ritz_vectors(&self) -> &DMatrix<f64> {
        &self.eig.vectors
    }

    /// Indices (into the pole set) of solves that entered the basis.
    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    /// Indices of solves dropped as dependent.
    pub fn dropped(&self) -> &[usize] {
        &self.dropped
    }

    /// Poles whose solves entered the basis.
    pub fn kept_poles(&self) -> Vec<Pole> {
        self.kept.iter().map(|&i| self.poles.poles()[i]).collect()
    }

    pub fn b_norm(&self) -> f64 {
        self.b_norm
    }

    /// Coordinates of `Wᵀ M b` in the Ritz eigenvector basis.
    pub fn ritz_coefficients(&self) -> DVector<f64> {
        self.eig.vectors.tr_mul(&self.coeffs)
    }

    /// `W U y` for Ritz coordinates `y`.
    pub fn lift(&self, y: &DVector<f64>) -> Result<Vector> {
        check_dim(self.dim(), y.len())?;
        Ok(&self.w * (&self.eig.vectors * y))
    }

    /// `u = W f(L_r) Wᵀ M b`.
    pub fn extract(&self, f: impl Fn(f64) -> f64) -> Result<Vector> {
        let mut y = self.ritz_coefficients();
        for (yi, &mu) in y.iter_mut().zip(&self.eig.values) {
            let v = f(mu);
            if !v.is_finite() {
                return Err(Error::Domain(format!("function is not finite at Ritz value {mu}")));
            }
            *yi *= v;
        }
        self.lift(&y)
    }

    /// Galerkin surrogate `w_r(t) = W (t + L_r)⁻¹ Wᵀ M b` of `(t + L)⁻¹ b`.
    pub fn rbm_resolvent(&self, t: f64) -> Result<Vector> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!("snapshot {t} must lie in [0, inf)")));
        }
        self.extract(|z| 1.0 / (t + z))
    }

    /// Rational function `r = p/q` with `q` the denominator of the kept poles
    /// and `p(μ_j) = q(μ_j) f(μ_j)` at the Ritz values; `extract(f) = r(L) b`.
    pub fn spectral_interpolant(&self, f: impl Fn(f64) -> f64) -> Result<SpectralInterpolant> {
        let mu = &self.eig.values;
        let m = mu.len();
        for pair in mu.windows(2) {
            let scale = pair[0].abs().max(pair[1].abs()).max(f64::MIN_POSITIVE);
            if pair[1] - pair[0] < RITZ_GAP_TOL * scale {
                return Err(Error::Degenerate(format!(
                    "Ritz values {} and {} coincide",
                    pair[0], pair[1]
                )));
            }
        }
        let poles: Vec<f64> = self.kept_poles().iter().filter_map(|p| p.finite()).collect();
        let fv: Vec<f64> = mu.iter().map(|&z| f(z)).collect();
        if let Some(j) = fv.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("function is not finite at Ritz value {}", mu[j])));
        }
        let mut nodes = mu.clone();
        let mut values = fv.clone();
        let numerator_degree = m - 1;
        if poles.len() > numerator_degree {
            // One extra node carries the value of r away from the Ritz values.
            let span = mu[m - 1] - mu[0];
            let xs = mu[m - 1] + span.max(mu[m - 1].abs()).max(1.0);
            let mut val = 0.0;
            for j in 0..m {
                let (lqj, sqj) = log_q(&poles, mu[j]);
                let (lqs, sqs) = log_q(&poles, xs);
                let mut lagrange = 1.0;
                for i in (0..m).filter(|&i| i != j) {
                    lagrange *= (xs - mu[i]) / (mu[j] - mu[i]);
                }
                val += sqj * sqs * (lqj - lqs).exp() * fv[j] * lagrange;
            }
            nodes.push(xs);
            values.push(val);
        }
        let nn = nodes.len();
        let mut logs = Vec::with_capacity(nn);
        let mut signs = Vec::with_capacity(nn);
        for j in 0..nn {
            let (mut lg, mut sg) = log_q(&poles, nodes[j]);
            for i in (0..nn).filter(|&i| i != j) {
                let d = nodes[j] - nodes[i];
                lg -= d.abs().ln();
                sg *= d.signum();
            }
            logs.push(lg);
            signs.push(sg);
        }
        let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let weights = logs.iter().zip(&signs).map(|(l, s)| s * (l - top).exp()).collect();
        let rational = BarycentricRational::new(nodes, values, weights, (numerator_degree, poles.len()))?;
        Ok(SpectralInterpolant { rational, poles })
    }

    /// Serializable snapshot of the basis.
    pub fn record(&self) -> BasisRecord {
        BasisRecord {
            poles: self.poles.clone(),
            kept: self.kept.clone(),
            ritz_values: self.eig.values.clone(),
            columns: self.w.column_iter().map(|c| c.iter().cloned().collect()).collect(),
        }
    }
}

/// Rational interpolant of a Krylov extraction with its (known) poles.
#[derive(Debug, Clone)]
pub struct SpectralInterpolant {
    pub rational: BarycentricRational,
    /// Finite poles of the denominator `q`.
    pub poles: Vec<f64>,
}

impl SpectralInterpolant {
    pub fn eval(&self, z: f64) -> f64 {
        self.rational.eval(z)
    }

    /// Partial fractions using the known poles; residues `p(d)/q'(d)` from the
    /// barycentric form.
    pub fn partial_fractions(&self) -> Result<PartialFraction> {
        let r = &self.rational;
        let c0 = if self.poles.len() > r.degree().0 {
            0.0
        } else {
            r.value_at_infinity()?
        };
        let terms = self
            .poles
            .iter()
            .map(|&d| (r.residue(d), d))
            .collect();
        PartialFraction::new(c0, terms)
    }
}

/// Basis export: poles, which of them entered, Ritz values and columns of `W`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisRecord {
    pub poles: PoleSet,
    pub kept: Vec<usize>,
    pub ritz_values: Vec<f64>,
    pub columns: Vec<Vec<f64>>,
}

impl BasisRecord {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Internal(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format {
            line: e.line(),
            message: e.to_string(),
        })
    }
}

/// Dual reduced basis approximation `L⁻¹ V L_*^{s−1} Vᵀ M b` with
/// `L_* = Vᵀ M L⁻¹ V`, for snapshots containing `∞`.
pub fn dual_rbm(pencil: &OperatorPencil, b: &Vector, snapshots: &PoleSet, s: f64) -> Result<Vector> {
    if !snapshots.contains_infinity() {
        return Err(Error::Precondition("dual reduced basis needs the snapshot t = inf".into()));
    }
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::InvalidArgument(format!("exponent {s} outside (0, 1]")));
    }
    let basis = build_basis(pencil, b, snapshots)?;
    let v = basis.w();
    let linv_v = DMatrix::from_columns(
        &v.column_iter()
            .map(|c| pencil.shifted_solve(Pole::Finite(0.0), &c.into_owned()))
            .collect::<Result<Vec<_>>>()?,
    );
    let mv = DMatrix::from_columns(
        &v.column_iter()
            .map(|c| pencil.apply_m(&c.into_owned()))
            .collect::<Result<Vec<_>>>()?,
    );
    let lstar = DenseSym::new(mv.tr_mul(&linv_v))?;
    let eig = sym_eig(&lstar)?;
    if eig.values[0] <= 0.0 {
        return Err(Error::Internal("compressed inverse is not positive definite".into()));
    }
    let y = eig.apply_function(|z| z.powf(s - 1.0), &basis.coeffs);
    Ok(linv_v * y)
}
