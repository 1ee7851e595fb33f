//! Special functions used by the pole generators.
//!
//! Elliptic quantities use the **modulus** convention: `ellip_k(k)` is
//! `∫₀^{π/2} (1 − k² sin²θ)^{-1/2} dθ`. Many libraries take the parameter
//! `m = k²` instead; callers porting formulas must square accordingly.

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;

use crate::densecore::{sym_eig, DenseSym};
use crate::error::{Error, Result};

const LANDEN_DEPTH_CAP: usize = 32;

/// Complete elliptic integral of the first kind, modulus convention.
pub fn ellip_k(k: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&k) {
        return Err(Error::Domain(format!("elliptic modulus {k} outside [0, 1)")));
    }
    if k == 0.0 {
        return Ok(FRAC_PI_2);
    }
    ellip_k_complement(((1.0 - k) * (1.0 + k)).sqrt())
}

/// `K(k)` given the complementary modulus `k' = √(1 − k²)`.
///
/// Near `k = 1` the complement carries all the information; passing it
/// directly avoids the cancellation in `1 − k²`.
pub fn ellip_k_complement(kp: f64) -> Result<f64> {
    if !(kp > 0.0 && kp <= 1.0) {
        return Err(Error::Domain(format!("complementary modulus {kp} outside (0, 1]")));
    }
    let (mut a, mut b) = (1.0_f64, kp);
    for _ in 0..LANDEN_DEPTH_CAP {
        if (a - b).abs() <= f64::EPSILON * a {
            break;
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    Ok(FRAC_PI_2 / a)
}

/// Jacobi elliptic functions `(sn, cn, dn)` via the descending Landen (AGM) scheme.
pub(crate) fn jacobi_sn_cn_dn(u: f64, k: f64) -> Result<(f64, f64, f64)> {
    if !(0.0..=1.0).contains(&k) {
        return Err(Error::Domain(format!("elliptic modulus {k} outside [0, 1]")));
    }
    sn_cn_dn_pair(u, k, ((1.0 - k) * (1.0 + k)).sqrt())
}

fn sn_cn_dn_pair(u: f64, k: f64, kp: f64) -> Result<(f64, f64, f64)> {
    if !u.is_finite() {
        return Err(Error::Domain(format!("argument {u} is not finite")));
    }
    if k == 0.0 {
        return Ok((u.sin(), u.cos(), 1.0));
    }
    if kp < 1e-12 {
        let sech = 1.0 / u.cosh();
        return Ok((u.tanh(), sech, sech));
    }
    let mut a = vec![1.0_f64];
    let mut c = vec![k];
    let mut b = kp;
    let mut depth = 0;
    while c[depth].abs() > f64::EPSILON * a[depth] {
        if depth == LANDEN_DEPTH_CAP {
            return Err(Error::Internal("Landen recursion did not terminate".into()));
        }
        let (ai, bi) = (a[depth], b);
        a.push(0.5 * (ai + bi));
        c.push(0.5 * (ai - bi));
        b = (ai * bi).sqrt();
        depth += 1;
    }
    let mut phi = (1u64 << depth) as f64 * a[depth] * u;
    for n in (1..=depth).rev() {
        phi = 0.5 * (phi + (c[n] / a[n] * phi.sin()).asin());
    }
    let (sn, cn) = phi.sin_cos();
    // dn² = k'² + k² cn² stays well conditioned at the quarter period, where
    // the classical cosine-ratio form degenerates to 0/0.
    let dn = (kp * kp + k * k * cn * cn).sqrt();
    Ok((sn, cn, dn))
}

/// Jacobi elliptic function `dn(u, k)` in the modulus convention.
pub fn jacobi_dn(u: f64, k: f64) -> Result<f64> {
    jacobi_sn_cn_dn(u, k).map(|(_, _, dn)| dn)
}

/// `dn(u, k)` given the complementary modulus `k'`; see [`ellip_k_complement`].
pub fn jacobi_dn_complement(u: f64, kp: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&kp) {
        return Err(Error::Domain(format!("complementary modulus {kp} outside [0, 1]")));
    }
    sn_cn_dn_pair(u, ((1.0 - kp) * (1.0 + kp)).sqrt(), kp).map(|(_, _, dn)| dn)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureKind {
    /// Weight `e^{-y}` on `(0, ∞)`.
    Laguerre,
}

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub kind: QuadratureKind,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&y, &w)| w * f(y)).sum()
    }
}

pub const GAUSS_LAGUERRE_MAX: usize = 500;

/// Laguerre polynomials `L_0..L_m` at `x` with running rescaling.
///
/// Returns `(L_{m-1}, L_m, Σ_{j<m} L_j², log_scale)` where the actual values
/// are the returned ones times `exp(log_scale)` (squares times `exp(2 log_scale)`).
fn laguerre_scaled(m: usize, x: f64) -> (f64, f64, f64, f64) {
    let mut prev = 0.0_f64;
    let mut cur = 1.0_f64;
    let mut sum = 0.0_f64;
    let mut log_scale = 0.0_f64;
    for j in 0..m {
        sum += cur * cur;
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 - x) * cur - jf * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
        let mag = cur.abs().max(prev.abs());
        if mag > 1e100 {
            prev /= mag;
            cur /= mag;
            sum /= mag * mag;
            log_scale += mag.ln();
        }
    }
    (prev, cur, sum, log_scale)
}

/// `m`-point Gauss–Laguerre rule for the weight `e^{-y}` on `(0, ∞)`.
///
/// Nodes are the eigenvalues of the symmetric Jacobi matrix of the Laguerre
/// recurrence, polished by one Newton step. The weight of node `x` equals the
/// squared first component of its normalized eigenvector; the eigenvector is
/// `(L_0(x), ..., L_{m-1}(x))` up to normalization, so the weight is evaluated
/// as `1 / Σ_j L_j(x)²`, which keeps full relative accuracy for tiny weights.
pub fn gauss_laguerre(m: usize) -> Result<QuadratureRule> {
    if m == 0 || m > GAUSS_LAGUERRE_MAX {
        return Err(Error::InvalidArgument(format!(
            "Gauss-Laguerre order {m} outside 1..={GAUSS_LAGUERRE_MAX}"
        )));
    }
    let jacobi = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            2.0 * i as f64 + 1.0
        } else if i.abs_diff(j) == 1 {
            i.max(j) as f64
        } else {
            0.0
        }
    });
    let eig = sym_eig(&DenseSym::new(jacobi)?)?;
    let mut nodes = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    for &x0 in &eig.values {
        let mut x = x0;
        let (lm1, lm, _, _) = laguerre_scaled(m, x);
        let deriv = m as f64 * (lm - lm1) / x;
        if deriv != 0.0 && deriv.is_finite() {
            let step = lm / deriv;
            if step.abs() < 1e-6 * x.max(1.0) {
                x -= step;
            }
        }
        let (_, _, sum, log_scale) = laguerre_scaled(m, x);
        nodes.push(x);
        weights.push((-(sum.ln()) - 2.0 * log_scale).exp());
    }
    Ok(QuadratureRule {
        nodes,
        weights,
        kind: QuadratureKind::Laguerre,
    })
}
