//! Real rational functions in barycentric and partial-fraction form, and
//! best uniform rational approximation of `z^{-s}` on a positive interval.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::SpectralInterval;

/// Relative distance below which evaluation returns the stored node value.
pub const NODE_SNAP_TOL: f64 = 1e-14;

/// Imaginary parts of computed poles above this (relative) reject the approximant.
pub const POLE_IMAG_TOL: f64 = 1e-8;

/// Relative gap below which two poles count as clustered.
pub const POLE_CLUSTER_TOL: f64 = 1e-10;

/// Relative error level (against `λ_min^{-s}`) below which the local maxima
/// are dominated by rounding and equioscillation cannot be resolved further.
pub const BRASIL_FLOOR_REL: f64 = 1e-11;

const RANK_TOL: f64 = 64.0 * f64::EPSILON;
const STALL_ITERS: usize = 300;
const GOLDEN_ITERS: usize = 60;

/// `r(z) = Σ wⱼ fⱼ/(z − xⱼ) / Σ wⱼ/(z − xⱼ)` with `r(xⱼ) = fⱼ`.
///
/// Off the nodes the function is evaluated on an equivalent subset of
/// `max(degree) + 1` nodes: when the degree is well below the node count the
/// full sums cancel heavily, while the minimal form stays well conditioned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBarycentric", into = "RawBarycentric")]
pub struct BarycentricRational {
    nodes: Vec<f64>,
    values: Vec<f64>,
    weights: Vec<f64>,
    degree: (usize, usize),
    compact: (Vec<f64>, Vec<f64>, Vec<f64>),
}

#[derive(Serialize, Deserialize)]
struct RawBarycentric {
    nodes: Vec<f64>,
    values: Vec<f64>,
    weights: Vec<f64>,
    degree: (usize, usize),
}

impl TryFrom<RawBarycentric> for BarycentricRational {
    type Error = Error;

    fn try_from(r: RawBarycentric) -> Result<Self> {
        BarycentricRational::new(r.nodes, r.values, r.weights, r.degree)
    }
}

impl From<BarycentricRational> for RawBarycentric {
    fn from(r: BarycentricRational) -> Self {
        RawBarycentric {
            nodes: r.nodes,
            values: r.values,
            weights: r.weights,
            degree: r.degree,
        }
    }
}

impl BarycentricRational {
    /// Validates and stores a representation. Nodes must be strictly increasing
    /// and finite, weights finite and nonzero.
    pub fn new(
        nodes: Vec<f64>,
        values: Vec<f64>,
        weights: Vec<f64>,
        degree: (usize, usize),
    ) -> Result<Self> {
        let m = nodes.len();
        if m == 0 {
            return Err(Error::InvalidArgument("barycentric form needs at least one node".into()));
        }
        if values.len() != m || weights.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: if values.len() != m { values.len() } else { weights.len() },
            });
        }
        if nodes.windows(2).any(|w| !(w[0] < w[1])) || nodes.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("nodes must be finite and strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("values must be finite".into()));
        }
        if let Some(j) = weights.iter().position(|w| *w == 0.0 || !w.is_finite()) {
            return Err(Error::Degenerate(format!(
                "weight at node {} is zero or not finite",
                nodes[j]
            )));
        }
        if degree.0.max(degree.1) >= m {
            return Err(Error::InvalidArgument(format!(
                "degree {degree:?} not representable on {m} nodes"
            )));
        }
        let mut r = BarycentricRational {
            nodes,
            values,
            weights,
            degree,
            compact: (Vec::new(), Vec::new(), Vec::new()),
        };
        r.compact = r.restricted(&spread_indices(m, degree.0.max(degree.1) + 1));
        Ok(r)
    }

    /// The constant `c`, represented on the single node `x`.
    pub fn constant(c: f64, x: f64) -> Result<Self> {
        Self::new(vec![x], vec![c], vec![1.0], (0, 0))
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nominal `(numerator, denominator)` degree bound.
    pub fn degree(&self) -> (usize, usize) {
        self.degree
    }

    pub fn eval(&self, z: f64) -> f64 {
        for (&x, &f) in self.nodes.iter().zip(&self.values) {
            let d = z - x;
            if d.abs() <= NODE_SNAP_TOL * x.abs().max(f64::MIN_POSITIVE) || d == 0.0 {
                return f;
            }
        }
        let (xs, fs, ws) = &self.compact;
        let mut num = 0.0;
        let mut den = 0.0;
        for ((&x, &f), &w) in xs.iter().zip(fs).zip(ws) {
            let c = w / (z - x);
            num += c * f;
            den += c;
        }
        num / den
    }

    fn denominator_sum(&self, z: f64) -> (f64, f64) {
        let mut g = 0.0;
        let mut dg = 0.0;
        let (xs, _, ws) = &self.compact;
        for (&x, &w) in xs.iter().zip(ws) {
            let d = z - x;
            g += w / d;
            dg -= w / (d * d);
        }
        (g, dg)
    }

    fn numerator_sum(&self, z: f64) -> f64 {
        let (xs, fs, ws) = &self.compact;
        xs.iter()
            .zip(fs)
            .zip(ws)
            .map(|((&x, &f), &w)| w * f / (z - x))
            .sum()
    }

    /// Same function on the node subset `idx`, valid when both numerator and
    /// denominator degrees are below `idx.len()`.
    fn restricted(&self, idx: &[usize]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut logs = Vec::with_capacity(idx.len());
        let mut signs = Vec::with_capacity(idx.len());
        for &j in idx {
            let xj = self.nodes[j];
            let mut lg = self.weights[j].abs().ln();
            let mut sg = self.weights[j].signum();
            for (i, &xi) in self.nodes.iter().enumerate() {
                if !idx.contains(&i) {
                    let d = xj - xi;
                    lg += d.abs().ln();
                    sg *= d.signum();
                }
            }
            logs.push(lg);
            signs.push(sg);
        }
        let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w = logs.iter().zip(&signs).map(|(l, s)| s * (l - top).exp()).collect();
        let x = idx.iter().map(|&j| self.nodes[j]).collect();
        let f = idx.iter().map(|&j| self.values[j]).collect();
        (x, f, w)
    }

    /// Smallest representation whose weight sum (the leading denominator
    /// coefficient) is nonzero: `(nodes, values, weights)` with `len − 1` the
    /// exact denominator degree.
    fn reduced(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let m = self.nodes.len();
        let mut den = self.degree.1.max(self.degree.0).min(m - 1);
        loop {
            let idx = spread_indices(m, den + 1);
            let (x, f, w) = self.restricted(&idx);
            let total: f64 = w.iter().sum();
            let scale: f64 = w.iter().map(|v| v.abs()).sum();
            if den == 0 || total.abs() > 1e-12 * scale {
                return (x, f, w);
            }
            den -= 1;
        }
    }

    /// Real poles in ascending order.
    pub fn poles(&self) -> Result<Vec<f64>> {
        let (x, _, w) = self.reduced();
        let k = x.len() - 1;
        if k == 0 {
            return Ok(Vec::new());
        }
        let total: f64 = w.iter().sum();
        let x0 = x[0];
        let b = DMatrix::from_fn(k, k, |i, j| {
            let diag = if i == j { x[i + 1] - x0 } else { 0.0 };
            diag - w[i + 1] * (x[j + 1] - x0) / total
        });
        let span = (x[k] - x0).abs().max(x0.abs()).max(f64::MIN_POSITIVE);
        let mut poles = Vec::with_capacity(k);
        for ev in b.complex_eigenvalues().iter() {
            let mag = (ev.re + x0).abs().max(span);
            if ev.im.abs() > POLE_IMAG_TOL * mag {
                return Err(Error::Validation(format!(
                    "pole {}{:+}i has a significant imaginary part",
                    ev.re + x0,
                    ev.im
                )));
            }
            poles.push(self.polish_pole(ev.re + x0));
        }
        poles.sort_by(f64::total_cmp);
        Ok(poles)
    }

    fn polish_pole(&self, mut z: f64) -> f64 {
        let (mut g, _) = self.denominator_sum(z);
        for _ in 0..3 {
            let (_, dg) = self.denominator_sum(z);
            if dg == 0.0 || !g.is_finite() {
                break;
            }
            let cand = z - g / dg;
            let (gc, _) = self.denominator_sum(cand);
            if gc.is_finite() && gc.abs() < g.abs() {
                z = cand;
                g = gc;
            } else {
                break;
            }
        }
        z
    }

    /// Residue `N(d)/D'(d)` at a simple pole `d` of the barycentric form.
    pub fn residue(&self, d: f64) -> f64 {
        let (_, dg) = self.denominator_sum(d);
        self.numerator_sum(d) / dg
    }

    /// Value at `+∞`; requires numerator degree ≤ denominator degree.
    pub fn value_at_infinity(&self) -> Result<f64> {
        let (_, f, w) = self.reduced();
        let total: f64 = w.iter().sum();
        let scale: f64 = w.iter().map(|v| v.abs()).sum();
        if total.abs() <= 1e-12 * scale {
            return Err(Error::Domain("rational function is unbounded at infinity".into()));
        }
        Ok(w.iter().zip(&f).map(|(w, f)| w * f).sum::<f64>() / total)
    }

    pub fn to_partial_fractions(&self) -> Result<PartialFraction> {
        let poles = self.poles()?;
        for pair in poles.windows(2) {
            let gap = (pair[1] - pair[0]).abs();
            let mag = pair[0].abs().max(pair[1].abs()).max(f64::MIN_POSITIVE);
            if gap < POLE_CLUSTER_TOL * mag {
                return Err(Error::Conditioning(format!(
                    "poles {} and {} are clustered",
                    pair[0], pair[1]
                )));
            }
        }
        let c0 = self.value_at_infinity()?;
        let terms = poles
            .iter()
            .map(|&d| (self.residue(d), d))
            .collect();
        PartialFraction::new(c0, terms)
    }
}

/// `count` indices spread evenly over `0..m`, always including both ends.
fn spread_indices(m: usize, count: usize) -> Vec<usize> {
    if count == 1 {
        return vec![m / 2];
    }
    let mut idx: Vec<usize> = (0..count)
        .map(|i| ((i * (m - 1)) as f64 / (count - 1) as f64).round() as usize)
        .collect();
    idx.dedup();
    idx
}

/// `r(z) = c₀ + Σ cⱼ/(z − dⱼ)` with real, nonpositive, distinct poles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialFraction {
    pub c0: f64,
    /// `(residue, pole)` pairs.
    pub terms: Vec<(f64, f64)>,
}

impl PartialFraction {
    pub fn new(c0: f64, terms: Vec<(f64, f64)>) -> Result<Self> {
        let scale = terms.iter().map(|t| t.1.abs()).fold(1.0_f64, f64::max);
        let mut clean = Vec::with_capacity(terms.len());
        for (c, d) in terms {
            if !c.is_finite() || !d.is_finite() {
                return Err(Error::Validation("non-finite residue or pole".into()));
            }
            if d > 1e-12 * scale {
                return Err(Error::Validation(format!("pole {d} is positive")));
            }
            clean.push((c, d.min(0.0)));
        }
        Ok(PartialFraction { c0, terms: clean })
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.c0 + self.terms.iter().map(|(c, d)| c / (z - d)).sum::<f64>()
    }

    pub fn poles(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.1).collect()
    }
}

fn check_nodes(nodes: &[f64]) -> Result<Vec<f64>> {
    if nodes.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("nodes must be finite".into()));
    }
    let mut x = nodes.to_vec();
    x.sort_by(f64::total_cmp);
    if let Some(w) = x.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument(format!("node {} appears twice", w[0])));
    }
    Ok(x)
}

/// Null vector of the Loewner system with the given support, after row and
/// column equilibration. Returns the support weights and the smallest and
/// second-smallest singular values of the equilibrated matrix.
fn loewner_null(x: &[f64], f: &[f64], support: &[usize]) -> (Vec<f64>, f64, f64) {
    let tests: Vec<usize> = (0..x.len()).filter(|i| !support.contains(i)).collect();
    let cols = support.len();
    let rows = tests.len().max(cols);
    let mut a = DMatrix::zeros(rows, cols);
    for (r, &i) in tests.iter().enumerate() {
        for (c, &j) in support.iter().enumerate() {
            a[(r, c)] = (f[i] - f[j]) / (x[i] - x[j]);
        }
    }
    // Rows are equations and columns rescaled unknowns; equilibrating both
    // keeps small weights accurate when the data span many magnitudes.
    let mut col_scale = vec![1.0; cols];
    for _ in 0..3 {
        for mut row in a.row_iter_mut() {
            let n = row.norm();
            if n > 0.0 {
                row /= n;
            }
        }
        for (c, mut col) in a.column_iter_mut().enumerate() {
            let n = col.norm();
            if n > 0.0 {
                col /= n;
                col_scale[c] /= n;
            }
        }
    }
    if cols == 1 {
        return (vec![1.0], a.column(0).norm(), f64::INFINITY);
    }
    let svd = a.svd(false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&p, &q| sv[p].total_cmp(&sv[q]));
    let w = vt.row(order[0]).iter().zip(&col_scale).map(|(y, c)| y * c).collect();
    (w, sv[order[0]], sv[order[1]])
}

/// Degree-`(k, k)` rational interpolant through `f` at `2k + 1` distinct nodes.
///
/// When the data are matched by a rational function of lower degree the
/// lowest such degree is used. Data that admit no interpolant of degree
/// `(k, k)` produce [`Error::Degenerate`].
pub fn interpolate(f: impl Fn(f64) -> f64, nodes: &[f64]) -> Result<BarycentricRational> {
    let x = check_nodes(nodes)?;
    let m = x.len();
    if m % 2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "interpolation needs an odd number of nodes, got {m}"
        )));
    }
    let values: Vec<f64> = x.iter().map(|&z| f(z)).collect();
    if let Some(j) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("f is not finite at node {}", x[j])));
    }
    interpolate_values(&x, &values)
}

/// As [`interpolate`], from samples `values[i] = f(nodes[i])` with nodes ascending.
pub fn interpolate_values(x: &[f64], values: &[f64]) -> Result<BarycentricRational> {
    let m = x.len();
    let k = (m - 1) / 2;
    for kk in 0..=k {
        let support = spread_indices(m, kk + 1);
        let (ws, smin, snext) = loewner_null(x, values, &support);
        let tol = RANK_TOL * (m as f64).sqrt();
        let consistent = kk == k || smin <= tol;
        if !consistent {
            continue;
        }
        if snext <= tol {
            if kk == k {
                return Err(Error::Degenerate(format!(
                    "Loewner system is rank deficient; no degree-({k},{k}) interpolant through nodes {x:?}"
                )));
            }
            continue;
        }
        return expand_weights(x, values, &support, &ws, kk);
    }
    unreachable!("the full-degree level always terminates the search")
}

/// Weights on all nodes for the rational function defined by support weights.
fn expand_weights(
    x: &[f64],
    values: &[f64],
    support: &[usize],
    ws: &[f64],
    degree: usize,
) -> Result<BarycentricRational> {
    let m = x.len();
    let mut logs = vec![0.0; m];
    let mut signs = vec![0.0; m];
    let mut bad = Vec::new();
    for j in 0..m {
        let (mut lg, mut sg);
        if let Some(p) = support.iter().position(|&i| i == j) {
            lg = ws[p].abs().ln();
            sg = ws[p].signum();
            for i in (0..m).filter(|i| !support.contains(i)) {
                let d = x[j] - x[i];
                lg -= d.abs().ln();
                sg *= d.signum();
            }
        } else {
            // q(x_j) = ℓ_S(x_j) Σ wˢ/(x_j − x_i); weight = q(x_j)/ℓ'(x_j).
            let sum: f64 = support.iter().zip(ws).map(|(&i, w)| w / (x[j] - x[i])).sum();
            let size: f64 = support.iter().zip(ws).map(|(&i, w)| (w / (x[j] - x[i])).abs()).sum();
            let resid: f64 = support
                .iter()
                .zip(ws)
                .map(|(&i, w)| w * (values[j] - values[i]) / (x[j] - x[i]))
                .sum();
            let fscale = values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            if sum.abs() <= 1e-13 * size || resid.abs() > 1e-8 * (size * fscale).max(f64::MIN_POSITIVE) {
                bad.push(x[j]);
                continue;
            }
            lg = sum.abs().ln();
            sg = sum.signum();
            for &i in support {
                let d = x[j] - x[i];
                lg += d.abs().ln();
                sg *= d.signum();
            }
            for i in (0..m).filter(|&i| i != j) {
                let d = x[j] - x[i];
                lg -= d.abs().ln();
                sg *= d.signum();
            }
        }
        logs[j] = lg;
        signs[j] = sg;
    }
    if !bad.is_empty() {
        return Err(Error::Degenerate(format!(
            "the interpolant cannot attain the data at nodes {bad:?}"
        )));
    }
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights = logs.iter().zip(&signs).map(|(l, s)| s * (l - top).exp()).collect();
    BarycentricRational::new(x.to_vec(), values.to_vec(), weights, (degree, degree))
}

/// Controls for [`brasil_best_approx`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrasilOptions {
    pub max_iter: usize,
    /// Target for `max/min − 1` over the local error maxima.
    pub tolerance: f64,
    /// Exponent `β` of the interval-length update.
    pub step: f64,
}

impl Default for BrasilOptions {
    fn default() -> Self {
        BrasilOptions {
            max_iter: 2000,
            tolerance: 1e-3,
            step: 0.5,
        }
    }
}

/// Outcome of a best-approximation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestApproxReport {
    pub approximant: BarycentricRational,
    pub max_error: f64,
    pub equioscillation_deviation: f64,
    pub iterations: usize,
    pub s: f64,
    pub interval: SpectralInterval,
    pub k: usize,
    /// Located local extrema `(z, f(z) − r(z))`, one per interpolation interval.
    pub extrema: Vec<(f64, f64)>,
    /// The deviation reached the requested tolerance.
    pub converged: bool,
    /// The error sits at the rounding floor (see [`BRASIL_FLOOR_REL`]), where
    /// the deviation is no longer meaningful.
    pub floor_limited: bool,
}

impl BestApproxReport {
    /// Converged, or limited only by floating-point resolution.
    pub fn accepted(&self) -> bool {
        self.converged || self.floor_limited
    }
}

fn golden_max(g: impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (a, b);
    let mut c = hi - ratio * (hi - lo);
    let mut d = lo + ratio * (hi - lo);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..GOLDEN_ITERS {
        if gc > gd {
            hi = d;
            d = c;
            gd = gc;
            c = hi - ratio * (hi - lo);
            gc = g(c);
        } else {
            lo = c;
            c = d;
            gc = gd;
            d = lo + ratio * (hi - lo);
            gd = g(d);
        }
    }
    let mut best = if gc > gd { (c, gc) } else { (d, gd) };
    for t in [a, b] {
        let v = g(t);
        if v > best.1 {
            best = (t, v);
        }
    }
    best
}

struct Sweep {
    approximant: BarycentricRational,
    extrema: Vec<(f64, f64)>,
    max_error: f64,
    deviation: f64,
}

/// Interpolates at the interior breakpoints (log coordinates) and locates
/// the error maximum inside every interval.
fn sweep(s: f64, breaks: &[f64]) -> Result<Sweep> {
    let inner = &breaks[1..breaks.len() - 1];
    let x: Vec<f64> = inner.iter().map(|t| t.exp()).collect();
    let f: Vec<f64> = inner.iter().map(|t| (-s * t).exp()).collect();
    let r = interpolate_values(&x, &f)?;
    let err = |t: f64| (-s * t).exp() - r.eval(t.exp());
    let mut extrema = Vec::with_capacity(breaks.len() - 1);
    for w in breaks.windows(2) {
        let (t, _) = golden_max(|t| err(t).abs(), w[0], w[1]);
        extrema.push((t.exp(), err(t)));
    }
    let mags: Vec<f64> = extrema.iter().map(|e| e.1.abs()).collect();
    let max_error = mags.iter().cloned().fold(0.0, f64::max);
    let min = mags.iter().cloned().fold(f64::INFINITY, f64::min);
    let deviation = if min > 0.0 { max_error / min - 1.0 } else { f64::INFINITY };
    Ok(Sweep {
        approximant: r,
        extrema,
        max_error,
        deviation,
    })
}

/// Runs the iteration and returns the best iterate whether or not it reached
/// the tolerance (see [`BestApproxReport::converged`]).
pub fn brasil_iterate(
    s: f64,
    interval: SpectralInterval,
    k: usize,
    opts: &BrasilOptions,
) -> Result<BestApproxReport> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidArgument(format!("exponent {s} outside (0, 1)")));
    }
    if !(opts.tolerance > 0.0 && opts.step > 0.0) || opts.max_iter == 0 {
        return Err(Error::InvalidArgument("BRASIL options must be positive".into()));
    }
    let (a, b) = (interval.lambda_min, interval.lambda_max);
    if k == 0 {
        let (fa, fb) = (a.powf(-s), b.powf(-s));
        let c = 0.5 * (fa + fb);
        let node = c.powf(-1.0 / s).clamp(a, b);
        return Ok(BestApproxReport {
            approximant: BarycentricRational::constant(c, node)?,
            max_error: 0.5 * (fa - fb),
            equioscillation_deviation: 0.0,
            iterations: 0,
            s,
            interval,
            k,
            extrema: vec![(a, 0.5 * (fa - fb)), (b, -0.5 * (fa - fb))],
            converged: true,
            floor_limited: false,
        });
    }
    if interval.is_degenerate() {
        return Err(Error::Degenerate(
            "best approximation of positive degree needs lambda_min < lambda_max".into(),
        ));
    }
    let (ta, tb) = (a.ln(), b.ln());
    let count = 2 * k + 2;
    let mut lengths = vec![(tb - ta) / count as f64; count];
    let to_breaks = |lengths: &[f64]| {
        let mut br = Vec::with_capacity(lengths.len() + 1);
        let mut t = ta;
        br.push(ta);
        for l in &lengths[..lengths.len() - 1] {
            t += l;
            br.push(t);
        }
        br.push(tb);
        br
    };
    let mut best: Option<Sweep> = None;
    let mut beta = opts.step;
    let mut prev_dev = f64::INFINITY;
    let mut prev_lengths = lengths.clone();
    let mut iterations = 0;
    let mut last_gain = 0;
    let floor = BRASIL_FLOOR_REL * a.powf(-s);
    for it in 0..opts.max_iter {
        iterations = it + 1;
        let current = match sweep(s, &to_breaks(&lengths)) {
            Ok(sw) => sw,
            Err(_) if it > 0 => {
                // Step overshot into a configuration without a valid interpolant.
                lengths.clone_from(&prev_lengths);
                beta *= 0.5;
                continue;
            }
            Err(e) => return Err(e),
        };
        let dev = current.deviation;
        if dev > prev_dev && beta > 1e-3 {
            lengths.clone_from(&prev_lengths);
            beta *= 0.5;
            continue;
        }
        prev_dev = dev;
        if best.as_ref().is_none_or(|b| dev < b.deviation) {
            last_gain = it;
            best = Some(Sweep {
                approximant: current.approximant.clone(),
                extrema: current.extrema.clone(),
                max_error: current.max_error,
                deviation: dev,
            });
        }
        if dev <= opts.tolerance {
            break;
        }
        let at_floor = best.as_ref().is_some_and(|b| b.max_error <= floor);
        if at_floor && it - last_gain > STALL_ITERS {
            break;
        }
        beta = (beta * 1.2).min(opts.step);
        let logs: Vec<f64> = current.extrema.iter().map(|e| e.1.abs().max(f64::MIN_POSITIVE).ln()).collect();
        let mean = logs.iter().sum::<f64>() / logs.len() as f64;
        prev_lengths.clone_from(&lengths);
        for (l, lg) in lengths.iter_mut().zip(&logs) {
            *l *= (-beta * (lg - mean)).exp();
        }
        let total: f64 = lengths.iter().sum();
        for l in &mut lengths {
            *l *= (tb - ta) / total;
        }
    }
    let best = best.ok_or_else(|| Error::Internal("BRASIL produced no iterate".into()))?;
    Ok(BestApproxReport {
        converged: best.deviation <= opts.tolerance,
        floor_limited: best.max_error <= floor,
        approximant: best.approximant,
        max_error: best.max_error,
        equioscillation_deviation: best.deviation,
        iterations,
        s,
        interval,
        k,
        extrema: best.extrema,
    })
}

/// Best uniform degree-`(k, k)` rational approximation of `z^{-s}` on the interval.
///
/// Fails with [`Error::Convergence`] when the equioscillation tolerance is not
/// met within `max_iter` and the error is above the rounding floor; `best`
/// then holds the best deviation, its maximal error, and the interpolation
/// nodes of that iterate.
pub fn brasil_best_approx(
    s: f64,
    interval: SpectralInterval,
    k: usize,
    opts: &BrasilOptions,
) -> Result<BestApproxReport> {
    let report = brasil_iterate(s, interval, k, opts)?;
    if report.accepted() {
        return Ok(report);
    }
    let mut best = vec![report.equioscillation_deviation, report.max_error];
    best.extend_from_slice(report.approximant.nodes());
    Err(Error::Convergence {
        iterations: report.iterations,
        message: format!(
            "equioscillation deviation {:.3e} above tolerance {:.1e}",
            report.equioscillation_deviation, opts.tolerance
        ),
        best,
    })
}

/// Serializable record of an approximant and the problem it solves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproximantRecord {
    pub s: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub k: usize,
    pub max_error: f64,
    pub equioscillation_deviation: f64,
    pub approximant: BarycentricRational,
}

impl From<&BestApproxReport> for ApproximantRecord {
    fn from(r: &BestApproxReport) -> Self {
        ApproximantRecord {
            s: r.s,
            lambda_min: r.interval.lambda_min,
            lambda_max: r.interval.lambda_max,
            k: r.k,
            max_error: r.max_error,
            equioscillation_deviation: r.equioscillation_deviation,
            approximant: r.approximant.clone(),
        }
    }
}

impl ApproximantRecord {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Internal(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rec: ApproximantRecord = serde_json::from_str(text).map_err(|e| Error::Format {
            line: e.line(),
            message: e.to_string(),
        })?;
        let a = rec.approximant.clone();
        BarycentricRational::new(a.nodes, a.values, a.weights, a.degree)?;
        SpectralInterval::new(rec.lambda_min, rec.lambda_max)?;
        Ok(rec)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}
