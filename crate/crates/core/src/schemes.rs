//! Snapshot generators and the end-to-end solvers for `L^{-s} b`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::densecore::{gen_sym_eig, sym_eig, DenseSym, EigenPairs, DENSE_CAP};
use crate::error::{check_dim, Error, Result};
use crate::krylov::{build_basis, dual_rbm, from_vectors, KrylovBasis, PoleSet};
use crate::operator::{OperatorPencil, Pole, SpectralInterval, Vector};
use crate::rational::{brasil_iterate, BestApproxReport, BrasilOptions, PartialFraction};
use crate::specfun::{ellip_k_complement, gauss_laguerre, jacobi_dn_complement};

/// Number of logarithmic training points in the default greedy grid.
pub const GREEDY_GRID_POINTS: usize = 200;

/// Greedy stops once every training residual falls below this (relative to `‖b‖_M`).
pub const GREEDY_EXIT_TOL: f64 = 1e-14;

/// Stable method identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodId {
    Zolo,
    Greedy,
    Bura,
    Sinc,
    Gauss,
    Direct,
    Dual,
    Oracle,
}

impl MethodId {
    pub const ALL: [MethodId; 8] = [
        MethodId::Zolo,
        MethodId::Greedy,
        MethodId::Bura,
        MethodId::Sinc,
        MethodId::Gauss,
        MethodId::Direct,
        MethodId::Dual,
        MethodId::Oracle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MethodId::Zolo => "zolo",
            MethodId::Greedy => "greedy",
            MethodId::Bura => "bura",
            MethodId::Sinc => "sinc",
            MethodId::Gauss => "gauss",
            MethodId::Direct => "direct",
            MethodId::Dual => "dual",
            MethodId::Oracle => "oracle",
        }
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MethodId::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method '{s}'")))
    }
}

/// Output of one solver run.
#[derive(Debug, Clone, Serialize)]
pub struct MethodResult {
    #[serde(skip)]
    pub solution: Vector,
    pub method: MethodId,
    /// Space dimension minus one (number of finite poles for `direct`).
    pub k: usize,
    pub s: f64,
    /// Total seconds.
    pub wall_time: f64,
    /// Seconds per phase, in execution order.
    pub phases: Vec<(String, f64)>,
    /// Poles/snapshots used and method specific figures.
    pub metadata: BTreeMap<String, Value>,
}

struct Timer {
    start: Instant,
    last: Instant,
    phases: Vec<(String, f64)>,
}

impl Timer {
    fn new() -> Self {
        let now = Instant::now();
        Timer { start: now, last: now, phases: Vec::new() }
    }

    fn lap(&mut self, name: &str) {
        let now = Instant::now();
        self.phases.push((name.to_string(), (now - self.last).as_secs_f64()));
        self.last = now;
    }

    fn finish(self, solution: Vector, method: MethodId, k: usize, s: f64, metadata: BTreeMap<String, Value>) -> MethodResult {
        MethodResult {
            solution,
            method,
            k,
            s,
            wall_time: self.start.elapsed().as_secs_f64(),
            phases: self.phases,
            metadata,
        }
    }
}

fn check_exponent(s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("exponent {s} outside (0, 1)")))
    }
}

fn snapshot_json(poles: &PoleSet) -> Value {
    json!(poles.snapshots())
}

fn basis_metadata(basis: &KrylovBasis<'_>) -> BTreeMap<String, Value> {
    let mut md = BTreeMap::new();
    md.insert("snapshots".into(), snapshot_json(basis.poles()));
    md.insert("dimension".into(), json!(basis.dim()));
    md.insert("dropped".into(), json!(basis.dropped()));
    md
}

/// Rate `C* = πK(μ₁)/(4K(μ))` with `μ = ((1−√δ)/(1+√δ))²`, `μ₁ = √(1−μ²)`,
/// `δ = λ₁/λₙ`.
pub fn c_star(interval: SpectralInterval) -> Result<f64> {
    if interval.is_degenerate() {
        return Err(Error::Degenerate("spectral interval has zero width".into()));
    }
    let sd = interval.delta().sqrt();
    let mu = ((1.0 - sd) / (1.0 + sd)).powi(2);
    // 1 − μ in closed form; μ and μ₁ are mutually complementary moduli.
    let one_minus_mu = 4.0 * sd / ((1.0 + sd) * (1.0 + sd));
    let mu1 = (one_minus_mu * (1.0 + mu)).sqrt();
    Ok(PI * ellip_k_complement(mu)? / (4.0 * ellip_k_complement(mu1)?))
}

/// Scaled Zolotarëv snapshots `{∞, t_1 < … < t_k}` on the spectral interval.
pub fn zolotarev_snapshots(k: usize, interval: SpectralInterval) -> Result<PoleSet> {
    if interval.is_degenerate() {
        return Err(Error::Degenerate("spectral interval has zero width".into()));
    }
    // The modulus δ′ = √(1 − δ²) is complementary to δ.
    let delta = interval.delta();
    let kk = ellip_k_complement(delta)?;
    let mut snaps = vec![None];
    for j in 1..=k {
        let u = (2 * (k - j) + 1) as f64 / (2 * k) as f64 * kk;
        snaps.push(Some(interval.lambda_max * jacobi_dn_complement(u, delta)?));
    }
    PoleSet::from_snapshots(&snaps)
}

/// Sinc quadrature grid `y_j = j k*`, `j = −M..=N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SincGrid {
    pub k_star: f64,
    pub m: usize,
    pub n: usize,
    pub s_min: f64,
    pub s_max: f64,
}

impl SincGrid {
    pub fn new(k_star: f64, s_min: f64, s_max: f64) -> Result<Self> {
        if !(k_star > 0.0 && k_star.is_finite()) {
            return Err(Error::InvalidArgument(format!("step {k_star} must be positive")));
        }
        if !(s_min > 0.0 && s_min <= s_max && s_max < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < s_min <= s_max < 1, got [{s_min}, {s_max}]"
            )));
        }
        let k2 = k_star * k_star;
        let m = (PI * PI / ((1.0 - s_max) * k2)).ceil();
        let n = (PI * PI / (s_min * k2)).ceil();
        if m > 1e7 || n > 1e7 {
            return Err(Error::ResourceLimit(format!("sinc grid with M = {m}, N = {n} is too large")));
        }
        Ok(SincGrid { k_star, m: m as usize, n: n as usize, s_min, s_max })
    }

    pub fn len(&self) -> usize {
        self.m + self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (-(self.m as i64)..=self.n as i64).map(move |j| j as f64 * self.k_star)
    }

    /// Snapshot range `[e^{−M k*}, e^{N k*}]` covered by the quadrature.
    pub fn parameter_range(&self) -> (f64, f64) {
        ((-(self.m as f64) * self.k_star).exp(), (self.n as f64 * self.k_star).exp())
    }

    /// Quadrature value of `(k* sin(πs)/π) Σ e^{(1−s)y_j}/(e^{y_j} + μ)`, the
    /// scalar analogue of the method applied at eigenvalue `μ`.
    pub fn scalar(&self, s: f64, mu: f64) -> f64 {
        let sum: f64 = self
            .nodes()
            .map(|y| {
                if y > 0.0 {
                    (-s * y).exp() / (1.0 + mu * (-y).exp())
                } else {
                    ((1.0 - s) * y).exp() / (y.exp() + mu)
                }
            })
            .sum();
        self.k_star * (PI * s).sin() / PI * sum
    }
}

/// `count` logarithmically spaced points on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) || count == 0 {
        return Err(Error::InvalidArgument(format!("bad log grid [{lo}, {hi}] x {count}")));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect())
}

/// Default greedy training set: the sinc quadrature parameters `e^{y_j}`.
///
/// These are exactly the resolvent queries of the sinc method, spaced by the
/// factor `e^{k*}`. A fixed count of points over the same range (see
/// [`coarse_greedy_grid`]) leaves gaps of more than a decade once the range
/// spans hundreds of decades.
pub fn default_greedy_grid(grid: &SincGrid) -> Vec<f64> {
    grid.nodes().map(f64::exp).collect()
}

/// `points` log-spaced points over the sinc parameter range.
pub fn coarse_greedy_grid(grid: &SincGrid, points: usize) -> Result<Vec<f64>> {
    let (lo, hi) = grid.parameter_range();
    log_grid(lo, hi, points)
}

/// Greedy selection together with the residual history.
#[derive(Debug, Clone)]
pub struct GreedyOutcome {
    pub snapshots: PoleSet,
    /// Largest relative training residual at each pick.
    pub residuals: Vec<f64>,
    /// Fewer than the requested picks were made because all residuals vanished.
    pub early_exit: bool,
}

/// Exact residual norms `‖(t + L) w_r(t) − b‖_M` over `ts` for the current basis.
///
/// By Galerkin orthogonality the residual is `(I − W Wᵀ M) L W y(t)`. The
/// matrix `R = LW − W L_r` is factored as `R = Q T` with M-orthonormal `Q`, so
/// each norm is `‖T y(t)‖` and never goes through a squared Gram matrix.
pub fn training_residuals(basis: &KrylovBasis<'_>, ts: &[f64]) -> Result<Vec<f64>> {
    let pencil = basis.pencil();
    let w = basis.w();
    let m = w.ncols();
    let mut r = w.clone();
    for (mut col, src) in r.column_iter_mut().zip(w.column_iter()) {
        col.copy_from(&pencil.apply_l(&src.into_owned())?);
    }
    r -= w * basis.projected().matrix();
    let mut t = DMatrix::<f64>::zeros(m, m);
    let mut q: Vec<(Vector, Vector)> = Vec::with_capacity(m);
    for j in 0..m {
        let mut v = r.column(j).into_owned();
        for _pass in 0..2 {
            for (i, (qi, mqi)) in q.iter().enumerate() {
                let c = mqi.dot(&v);
                v.axpy(-c, qi, 1.0);
                t[(i, j)] += c;
            }
        }
        let mv = pencil.apply_m(&v)?;
        let nrm = v.dot(&mv).max(0.0).sqrt();
        t[(j, j)] = nrm;
        if nrm > 0.0 {
            q.push((v / nrm, mv / nrm));
        } else {
            q.push((Vector::zeros(w.nrows()), Vector::zeros(w.nrows())));
        }
    }
    // Ritz coordinates: y(t) = U diag(1/(t + μ)) ĉ.
    let tu = t * basis.ritz_vectors();
    let chat = basis.ritz_coefficients();
    let mu = basis.ritz_values();
    Ok(ts
        .iter()
        .map(|&t| {
            let z = DVector::from_fn(m, |i, _| chat[i] / (t + mu[i]));
            (&tu * z).norm()
        })
        .collect())
}

/// Weak greedy snapshot selection starting from `span{b}` (the snapshot `∞`).
pub fn greedy_snapshots(pencil: &OperatorPencil, b: &Vector, xi_grid: &[f64], k: usize) -> Result<GreedyOutcome> {
    if xi_grid.is_empty() {
        return Err(Error::InvalidArgument("training grid is empty".into()));
    }
    if let Some(t) = xi_grid.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(Error::InvalidArgument(format!("training parameter {t} outside [0, inf)")));
    }
    let mut grid = xi_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    if k > grid.len() {
        return Err(Error::InvalidArgument(format!(
            "{k} picks requested from {} training points",
            grid.len()
        )));
    }
    check_dim(pencil.dim(), b.len())?;
    let b_norm = pencil.m_norm(b)?;
    if b_norm == 0.0 {
        return Err(Error::InvalidArgument("right-hand side must be nonzero".into()));
    }
    let mut snaps: Vec<Option<f64>> = vec![None];
    let mut vectors = vec![b.clone()];
    let mut picked = vec![false; grid.len()];
    let mut history = Vec::new();
    let mut early_exit = false;
    while snaps.len() <= k {
        let basis = from_vectors(pencil, b, PoleSet::from_snapshots(&snaps)?, &vectors)?;
        let res = training_residuals(&basis, &grid)?;
        let mut best: Option<(usize, f64)> = None;
        for (i, &r) in res.iter().enumerate() {
            if !picked[i] && best.is_none_or(|(_, br)| r > br) {
                best = Some((i, r));
            }
        }
        let Some((i, r)) = best else { break };
        let rel = r / b_norm;
        if rel < GREEDY_EXIT_TOL {
            early_exit = true;
            break;
        }
        picked[i] = true;
        history.push(rel);
        snaps.push(Some(grid[i]));
        vectors.push(pencil.shifted_solve(Pole::Finite(-grid[i]), b)?);
    }
    Ok(GreedyOutcome {
        snapshots: PoleSet::from_snapshots(&snaps)?,
        residuals: history,
        early_exit,
    })
}

/// BRASIL approximation of `z^{-s}` used for BURA poles and the direct method.
/// Accepts floor-limited iterates; other non-convergence is an error.
pub fn bura_approximation(s: f64, interval: SpectralInterval, k: usize) -> Result<BestApproxReport> {
    check_exponent(s)?;
    let report = brasil_iterate(s, interval, k, &BrasilOptions::default())?;
    if !report.accepted() {
        return Err(Error::Convergence {
            iterations: report.iterations,
            message: format!(
                "BRASIL stopped at deviation {:.3e} for s = {s}, k = {k}",
                report.equioscillation_deviation
            ),
            best: vec![report.equioscillation_deviation, report.max_error],
        });
    }
    Ok(report)
}

/// Poles of the best uniform rational approximation of `z^{-s}`, plus `−∞`.
pub fn bura_poles(s: f64, interval: SpectralInterval, k: usize) -> Result<PoleSet> {
    if k == 0 {
        check_exponent(s)?;
        return PoleSet::new(vec![Pole::NegInfinity]);
    }
    let report = bura_approximation(s, interval, k)?;
    poles_from_report(&report)
}

fn poles_from_report(report: &BestApproxReport) -> Result<PoleSet> {
    let mut poles = vec![Pole::NegInfinity];
    for d in report.approximant.poles()? {
        if d > 0.0 {
            return Err(Error::Validation(format!("approximant has a positive pole {d}")));
        }
        poles.push(Pole::Finite(d));
    }
    PoleSet::new(poles)
}

/// Rational Krylov extraction with `f(z) = z^{-s}`.
pub fn solve_rkm(pencil: &OperatorPencil, b: &Vector, s: f64, poles: &PoleSet, method: MethodId) -> Result<MethodResult> {
    check_exponent(s)?;
    let mut timer = Timer::new();
    let basis = build_basis(pencil, b, poles)?;
    timer.lap("basis");
    let u = basis.extract(|z| z.powf(-s))?;
    timer.lap("extract");
    let md = basis_metadata(&basis);
    Ok(timer.finish(u, method, poles.k(), s, md))
}

/// Sinc-quadrature reduced basis approximation over the snapshots' space.
pub fn solve_sinc_rbm(pencil: &OperatorPencil, b: &Vector, s: f64, snapshots: &PoleSet, grid: &SincGrid) -> Result<MethodResult> {
    if !(s >= grid.s_min && s <= grid.s_max) {
        return Err(Error::Precondition(format!(
            "exponent {s} outside the sinc grid range [{}, {}]",
            grid.s_min, grid.s_max
        )));
    }
    let mut timer = Timer::new();
    let basis = build_basis(pencil, b, snapshots)?;
    timer.lap("basis");
    let u = basis.extract(|mu| grid.scalar(s, mu))?;
    timer.lap("extract");
    let mut md = basis_metadata(&basis);
    md.insert("grid".into(), json!(grid));
    Ok(timer.finish(u, MethodId::Sinc, snapshots.k(), s, md))
}

/// Gauss–Laguerre orders `(M_-, M_+)` for exponent `s` and step `k*`.
pub fn gauss_orders(s: f64, k_star: f64) -> Result<(usize, usize)> {
    check_exponent(s)?;
    if !(k_star > 0.0 && k_star.is_finite()) {
        return Err(Error::InvalidArgument(format!("step {k_star} must be positive")));
    }
    let k2 = k_star * k_star;
    let m_minus = (PI * PI / (4.0 * (1.0 - s) * k2)).ceil();
    let m_plus = (PI * PI / (4.0 * s * k2)).ceil();
    if m_minus > 1e9 || m_plus > 1e9 {
        return Err(Error::ResourceLimit(format!("quadrature orders {m_minus}, {m_plus} too large")));
    }
    Ok((m_minus as usize, m_plus as usize))
}

/// Scalar Gauss–Laguerre approximations of the two halves
/// `∫₀¹` and `∫₁^∞` of `sin(πs)/π ∫ t^{-s}/(t + μ) dt`.
pub struct GaussScalar {
    s: f64,
    minus: crate::specfun::QuadratureRule,
    plus: crate::specfun::QuadratureRule,
}

impl GaussScalar {
    pub fn new(s: f64, k_star: f64) -> Result<Self> {
        let (m_minus, m_plus) = gauss_orders(s, k_star)?;
        Ok(GaussScalar { s, minus: gauss_laguerre(m_minus)?, plus: gauss_laguerre(m_plus)? })
    }

    pub fn orders(&self) -> (usize, usize) {
        (self.minus.len(), self.plus.len())
    }

    /// Contribution from `t ∈ (0, 1)`.
    pub fn lower(&self, mu: f64) -> f64 {
        let sm = 1.0 - self.s;
        (PI * sm).sin() / (PI * sm) * self.minus.integrate(|y| 1.0 / ((-y / sm).exp() + mu))
    }

    /// Contribution from `t ∈ (1, ∞)`.
    pub fn upper(&self, mu: f64) -> f64 {
        let sp = self.s;
        (PI * sp).sin() / (PI * sp) * self.plus.integrate(|y| 1.0 / (1.0 + mu * (-y / sp).exp()))
    }

    pub fn eval(&self, mu: f64) -> f64 {
        self.lower(mu) + self.upper(mu)
    }
}

/// Gauss–Laguerre reduced basis approximation with separate spaces for the
/// parameter ranges `t < 1` and `t > 1`.
pub fn solve_gauss_rbm(
    pencil: &OperatorPencil,
    b: &Vector,
    s: f64,
    snapshots_minus: &PoleSet,
    snapshots_plus: &PoleSet,
    k_star: f64,
) -> Result<MethodResult> {
    check_exponent(s)?;
    if snapshots_minus.poles().first() != snapshots_plus.poles().first() {
        return Err(Error::Precondition("both snapshot sets must share their first snapshot".into()));
    }
    let rule = GaussScalar::new(s, k_star)?;
    let mut timer = Timer::new();
    let minus = build_basis(pencil, b, snapshots_minus)?;
    let plus = if snapshots_plus == snapshots_minus {
        None
    } else {
        Some(build_basis(pencil, b, snapshots_plus)?)
    };
    timer.lap("basis");
    let u = match &plus {
        None => minus.extract(|mu| rule.eval(mu))?,
        Some(p) => minus.extract(|mu| rule.lower(mu))? + p.extract(|mu| rule.upper(mu))?,
    };
    timer.lap("extract");
    let mut md = basis_metadata(&minus);
    if let Some(p) = &plus {
        md.insert("snapshots_plus".into(), snapshot_json(p.poles()));
    }
    let (m_minus, m_plus) = rule.orders();
    md.insert("orders".into(), json!([m_minus, m_plus]));
    let k = snapshots_minus.k().max(snapshots_plus.k());
    Ok(timer.finish(u, MethodId::Gauss, k, s, md))
}

/// `c₀ b + Σ c_j (L − d_j)⁻¹ b`, shifted solves in parallel.
pub fn apply_partial_fraction(pencil: &OperatorPencil, b: &Vector, pf: &PartialFraction) -> Result<Vector> {
    check_dim(pencil.dim(), b.len())?;
    let parts = pf
        .terms
        .par_iter()
        .map(|&(c, d)| pencil.shifted_solve(Pole::Finite(d), b).map(|w| w * c))
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.into_iter().fold(b * pf.c0, |acc, w| acc + w))
}

/// Direct rational approximation `r(L) b` with `r` the BURA of `z^{-s}`.
pub fn solve_direct(pencil: &OperatorPencil, b: &Vector, s: f64, k: usize, interval: SpectralInterval) -> Result<MethodResult> {
    let start = Instant::now();
    let report = bura_approximation(s, interval, k)?;
    let approx_time = start.elapsed().as_secs_f64();
    let mut res = solve_direct_with(pencil, b, &report)?;
    res.phases.insert(0, ("approximation".into(), approx_time));
    res.wall_time += approx_time;
    Ok(res)
}

/// Direct method for an already computed approximant.
pub fn solve_direct_with(pencil: &OperatorPencil, b: &Vector, report: &BestApproxReport) -> Result<MethodResult> {
    let mut timer = Timer::new();
    let pf = if report.k == 0 {
        PartialFraction::new(report.approximant.values()[0], Vec::new())?
    } else {
        report.approximant.to_partial_fractions()?
    };
    timer.lap("partial fractions");
    let u = apply_partial_fraction(pencil, b, &pf)?;
    timer.lap("solves");
    let mut md = BTreeMap::new();
    md.insert("poles".into(), json!(pf.poles()));
    md.insert("max_error".into(), json!(report.max_error));
    md.insert("equioscillation_deviation".into(), json!(report.equioscillation_deviation));
    md.insert("floor_limited".into(), json!(report.floor_limited));
    Ok(timer.finish(u, MethodId::Direct, report.k, report.s, md))
}

/// Dual reduced basis approximation on snapshots containing `∞`.
pub fn solve_dual(pencil: &OperatorPencil, b: &Vector, s: f64, snapshots: &PoleSet) -> Result<MethodResult> {
    check_exponent(s)?;
    let mut timer = Timer::new();
    let u = dual_rbm(pencil, b, snapshots, s)?;
    timer.lap("solve");
    let mut md = BTreeMap::new();
    md.insert("snapshots".into(), snapshot_json(snapshots));
    Ok(timer.finish(u, MethodId::Dual, snapshots.k(), s, md))
}

/// Dense generalized eigendecomposition of the pencil, reusable across `s` and `b`.
#[derive(Debug, Clone)]
pub struct DenseOracle {
    eig: EigenPairs,
    mass: Option<DMatrix<f64>>,
}

impl DenseOracle {
    pub fn new(pencil: &OperatorPencil) -> Result<Self> {
        let n = pencil.dim();
        if n > DENSE_CAP {
            return Err(Error::ResourceLimit(format!(
                "dense oracle needs n <= {DENSE_CAP}, got {n}; choose a smaller problem"
            )));
        }
        let k = DenseSym::new(pencil.dense_stiffness())?;
        let (eig, mass) = match pencil.mass() {
            None => (sym_eig(&k)?, None),
            Some(_) => {
                let m = pencil.dense_mass();
                (gen_sym_eig(&k, &DenseSym::new(m.clone())?)?, Some(m))
            }
        };
        Ok(DenseOracle { eig, mass })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eig.values
    }

    /// `U f(Λ) Uᵀ M b`.
    pub fn apply(&self, b: &Vector, f: impl Fn(f64) -> f64) -> Result<Vector> {
        check_dim(self.eig.values.len(), b.len())?;
        let mb = match &self.mass {
            Some(m) => m * b,
            None => b.clone(),
        };
        Ok(self.eig.apply_function(f, &mb))
    }

    pub fn power(&self, b: &Vector, s: f64) -> Result<Vector> {
        self.apply(b, |z| z.powf(-s))
    }
}

/// Exact `L^{-s} b` by the discrete eigenfunction method.
pub fn solve_oracle(pencil: &OperatorPencil, b: &Vector, s: f64) -> Result<MethodResult> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidArgument(format!("exponent {s} outside [0, 1]")));
    }
    let mut timer = Timer::new();
    let oracle = DenseOracle::new(pencil)?;
    timer.lap("eigendecomposition");
    let u = oracle.power(b, s)?;
    timer.lap("apply");
    Ok(timer.finish(u, MethodId::Oracle, pencil.dim().saturating_sub(1), s, BTreeMap::new()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{fd_1d_eigenvalues, make_fd_laplacian_1d};
    use approx::assert_relative_eq;

    fn diag(values: &[f64]) -> OperatorPencil {
        OperatorPencil::from_dense(&DMatrix::from_diagonal(&DVector::from_row_slice(values)), None).unwrap()
    }

    #[test]
    fn method_ids_round_trip() {
        for m in MethodId::ALL {
            assert_eq!(m.as_str().parse::<MethodId>().unwrap(), m);
        }
        assert!("jac".parse::<MethodId>().is_err());
    }

    #[test]
    fn zolotarev_single_snapshot_is_geometric_mean() {
        let iv = SpectralInterval::new(1.0, 16.0).unwrap();
        let ps = zolotarev_snapshots(1, iv).unwrap();
        assert_eq!(ps.snapshots()[0], None);
        assert_relative_eq!(ps.snapshots()[1].unwrap(), 4.0, max_relative = 1e-12);
        let iv = SpectralInterval::new(19.74, 560718.48).unwrap();
        let ps = zolotarev_snapshots(1, iv).unwrap();
        assert_relative_eq!(ps.snapshots()[1].unwrap(), (19.74f64 * 560718.48).sqrt(), max_relative = 1e-10);
    }

    #[test]
    fn zolotarev_snapshots_are_increasing_inside_interval() {
        let iv = SpectralInterval::new(19.74, 560718.48).unwrap();
        let t: Vec<f64> = zolotarev_snapshots(4, iv).unwrap().snapshots().into_iter().flatten().collect();
        assert_eq!(t.len(), 4);
        assert!(t.windows(2).all(|w| w[0] < w[1]));
        assert!(t.iter().all(|&x| (19.74..=560718.48).contains(&x)));
        // symmetric under z -> λ1 λn / z
        for (a, b) in t.iter().zip(t.iter().rev()) {
            assert_relative_eq!(a * b, 19.74 * 560718.48, max_relative = 1e-9);
        }
    }

    #[test]
    fn zolotarev_near_degenerate_and_degenerate() {
        let iv = SpectralInterval::new(1.0 - 1e-6, 1.0).unwrap();
        for t in zolotarev_snapshots(3, iv).unwrap().snapshots().into_iter().flatten() {
            assert!((t - 1.0).abs() < 2e-6);
        }
        let iv = SpectralInterval::new(3.0, 3.0).unwrap();
        assert!(matches!(zolotarev_snapshots(2, iv), Err(Error::Degenerate(_))));
    }

    #[test]
    fn sinc_grid_sizes() {
        let g = SincGrid::new(0.15, 0.5, 0.5).unwrap();
        assert_eq!((g.m, g.n), (878, 878));
        let g = SincGrid::new(0.15, 0.2, 0.8).unwrap();
        assert_eq!((g.m, g.n), (2194, 2194));
        let g = SincGrid::new(PI, 0.5, 0.5).unwrap();
        assert_eq!((g.m, g.n), (2, 2));
        assert!(SincGrid::new(0.15, 0.0, 0.5).is_err());
        assert!(SincGrid::new(-1.0, 0.2, 0.5).is_err());
        assert!(SincGrid::new(0.15, 0.6, 0.5).is_err());
    }

    #[test]
    fn sinc_scalar_matches_power() {
        let g = SincGrid::new(0.15, 0.2, 0.8).unwrap();
        for s in [0.2, 0.5, 0.8] {
            for lam in [0.01, 1.0, 19.7, 8e3] {
                assert_relative_eq!(g.scalar(s, lam), lam.powf(-s), max_relative = 1e-12);
            }
        }
        let coarse = SincGrid::new(0.6, 0.5, 0.5).unwrap();
        let err = (coarse.scalar(0.5, 3.0) - 3f64.powf(-0.5)).abs();
        assert!(err > 1e-8 && err < 1e-2, "{err}");
    }

    #[test]
    fn gauss_scalar_converges() {
        let mut last = f64::INFINITY;
        for k_star in [0.6, 0.4, 0.25, 0.15] {
            let g = GaussScalar::new(0.5, k_star).unwrap();
            let err = (g.eval(50.0) - 50f64.powf(-0.5)).abs();
            assert!(err < last);
            last = err;
        }
        assert!(last < 1e-10, "{last}");
        let g = GaussScalar::new(0.5, 0.15).unwrap();
        let (a, b) = g.orders();
        assert_eq!(a, b);
        assert!(matches!(gauss_orders(0.2, 0.15), Ok((_, 549))));
        assert!(GaussScalar::new(0.2, 0.15).is_err());
    }

    #[test]
    fn greedy_examples() {
        let p = diag(&[1.0, 4.0]);
        let b = Vector::from_vec(vec![1.0, 1.0]) / 2f64.sqrt();
        let out = greedy_snapshots(&p, &b, &[3.0], 1).unwrap();
        assert_eq!(out.snapshots.snapshots(), vec![None, Some(3.0)]);

        // brute force: basis span{b}, residual of the Galerkin resolvent
        let residual = |t: f64| {
            let c = b.dot(&(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0])) * &b));
            let w = &b / (t + c);
            let r = DVector::from_vec(vec![(t + 1.0) * w[0] - b[0], (t + 4.0) * w[1] - b[1]]);
            r.norm()
        };
        let expect = if residual(0.5) >= residual(2.0) { 0.5 } else { 2.0 };
        let out = greedy_snapshots(&p, &b, &[0.5, 2.0], 1).unwrap();
        assert_eq!(out.snapshots.snapshots()[1], Some(expect));
        assert_relative_eq!(out.residuals[0], residual(expect) / b.norm(), max_relative = 1e-12);

        let e = Vector::from_vec(vec![0.0, 2.0]);
        let out = greedy_snapshots(&p, &e, &[0.5, 2.0, 7.0], 3).unwrap();
        assert!(out.early_exit);
        assert_eq!(out.snapshots.len(), 1);
    }

    #[test]
    fn greedy_residuals_match_direct_computation() {
        let p = make_fd_laplacian_1d(25).unwrap();
        let b = Vector::from_element(25, 1.0);
        let ps = PoleSet::from_snapshots(&[None, Some(3.0), Some(400.0)]).unwrap();
        let basis = build_basis(&p, &b, &ps).unwrap();
        let ts = [0.0, 1.0, 50.0, 1e5];
        let res = training_residuals(&basis, &ts).unwrap();
        for (&t, &r) in ts.iter().zip(&res) {
            let w = basis.rbm_resolvent(t).unwrap();
            let direct = p.m_norm(&(p.apply_l(&w).unwrap() + &w * t - &b)).unwrap();
            assert_relative_eq!(r, direct, max_relative = 1e-9, epsilon = 1e-13);
        }
    }

    #[test]
    fn oracle_examples() {
        let p = diag(&[1.0, 16.0]);
        let b = Vector::from_vec(vec![1.0, 1.0]);
        let u = solve_oracle(&p, &b, 0.5).unwrap().solution;
        assert!((u - Vector::from_vec(vec![1.0, 0.25])).amax() < 1e-15);
        let u = solve_oracle(&p, &b, 1.0).unwrap().solution;
        assert!((u - Vector::from_vec(vec![1.0, 1.0 / 16.0])).amax() < 1e-15);
        let u = solve_oracle(&p, &b, 1e-12).unwrap().solution;
        assert!((u - &b).amax() < 1e-10);

        let n = 5;
        let p = make_fd_laplacian_1d(n).unwrap();
        let b = Vector::from_fn(n, |i, _| (i + 1) as f64);
        let u = solve_oracle(&p, &b, 0.3).unwrap().solution;
        let lam = fd_1d_eigenvalues(n);
        let mut expect = Vector::zeros(n);
        for (j, l) in lam.iter().enumerate() {
            let v = Vector::from_fn(n, |i, _| (2.0 / (n as f64 + 1.0)).sqrt() * (PI * ((i + 1) * (j + 1)) as f64 / (n as f64 + 1.0)).sin());
            expect += &v * (v.dot(&b) * l.powf(-0.3));
        }
        assert!((&u - &expect).amax() < 1e-12, "{u} {expect}");
    }

    #[test]
    fn rkm_two_dimensional_exactness() {
        let p = diag(&[1.0, 4.0]);
        let b = Vector::from_vec(vec![1.0, 1.0]);
        let poles = PoleSet::new(vec![Pole::NegInfinity, Pole::Finite(-1.0)]).unwrap();
        let r = solve_rkm(&p, &b, 0.5, &poles, MethodId::Zolo).unwrap();
        assert!((r.solution - Vector::from_vec(vec![1.0, 0.5])).amax() < 1e-12);
        assert_eq!(r.phases.len(), 2);
    }

    #[test]
    fn direct_method_small_cases() {
        let p = diag(&[1.0, 16.0]);
        let b = Vector::from_vec(vec![1.0, 1.0]);
        let iv = SpectralInterval::new(1.0, 16.0).unwrap();
        let r = solve_direct(&p, &b, 0.5, 0, iv).unwrap();
        assert!((r.solution - Vector::from_vec(vec![0.625, 0.625])).amax() < 1e-12);

        let pf = PartialFraction::new(0.3, vec![(2.0, -1.0)]).unwrap();
        let u = apply_partial_fraction(&p, &b, &pf).unwrap();
        assert_relative_eq!(u[0], pf.eval(1.0), max_relative = 1e-14);
        assert_relative_eq!(u[1], pf.eval(16.0), max_relative = 1e-14);
    }

    #[test]
    fn bura_pole_sets() {
        let iv = SpectralInterval::new(1.0, 16.0).unwrap();
        assert_eq!(bura_poles(0.5, iv, 0).unwrap().poles(), &[Pole::NegInfinity]);
        let ps = bura_poles(0.5, iv, 1).unwrap();
        assert_eq!(ps.len(), 2);
        assert!(ps.finite()[0] < 0.0);
    }

    #[test]
    fn sinc_outside_range_is_precondition() {
        let p = diag(&[1.0, 4.0]);
        let b = Vector::from_vec(vec![1.0, 1.0]);
        let g = SincGrid::new(0.15, 0.4, 0.6).unwrap();
        let ps = PoleSet::from_snapshots(&[None]).unwrap();
        assert!(matches!(solve_sinc_rbm(&p, &b, 0.2, &ps, &g), Err(Error::Precondition(_))));
    }

    #[test]
    fn oracle_cap() {
        let p = make_fd_laplacian_1d(DENSE_CAP + 1).unwrap();
        let b = Vector::from_element(DENSE_CAP + 1, 1.0);
        assert!(matches!(solve_oracle(&p, &b, 0.5), Err(Error::ResourceLimit(_))));
    }
}
