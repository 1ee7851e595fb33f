//! Exponential rate fits `error ≈ A e^{−ρk}`.

use serde::{Deserialize, Serialize};

/// Errors outside this band are excluded from fits (stagnation floor and
/// pre-asymptotic head).
pub const FIT_BAND: (f64, f64) = (1e-12, 1e-1);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub method: String,
    pub s: f64,
    /// Fitted `ρ`.
    pub rate: f64,
    /// Fitted `A`.
    pub amplitude: f64,
    pub r_squared: f64,
    pub k_first: usize,
    pub k_last: usize,
    pub points: usize,
}

/// Cuts a rounding plateau off the end of a run: everything after the smallest
/// error, then trailing steps that gain less than a quarter of the mean log decrease.
fn trim_stagnation(run: &[(usize, f64)]) -> &[(usize, f64)] {
    let Some(argmin) = run.iter().enumerate().min_by(|a, b| a.1 .1.total_cmp(&b.1 .1)).map(|(i, _)| i) else {
        return run;
    };
    let mut end = argmin + 1;
    while end > 2 {
        let mean = (run[0].1.ln() - run[end - 1].1.ln()) / (end - 1) as f64;
        let last = run[end - 2].1.ln() - run[end - 1].1.ln();
        if last >= 0.25 * mean {
            break;
        }
        end -= 1;
    }
    &run[..end]
}

/// Least-squares line through `(k, ln error)` over the longest run of
/// consecutive points whose error lies in [`FIT_BAND`], with any trailing
/// plateau removed. Returns `None` with fewer than two usable points.
pub fn fit_rate(method: &str, s: f64, points: &[(usize, f64)]) -> Option<RateFit> {
    let mut pts = points.to_vec();
    pts.sort_by_key(|p| p.0);
    let inside = |e: f64| e.is_finite() && e >= FIT_BAND.0 && e <= FIT_BAND.1;
    let (mut best, mut start) = ((0, 0), None);
    for (i, p) in pts.iter().enumerate() {
        match (inside(p.1), start) {
            (true, None) => start = Some(i),
            (false, Some(st)) => {
                if i - st > best.1 - best.0 {
                    best = (st, i);
                }
                start = None;
            }
            _ => {}
        }
    }
    if let Some(st) = start {
        if pts.len() - st > best.1 - best.0 {
            best = (st, pts.len());
        }
    }
    let window = trim_stagnation(&pts[best.0..best.1]);
    if window.len() < 2 {
        return None;
    }
    let m = window.len() as f64;
    let xs: Vec<f64> = window.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = window.iter().map(|p| p.1.ln()).collect();
    let xm = xs.iter().sum::<f64>() / m;
    let ym = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let ss_tot: f64 = ys.iter().map(|y| (y - ym).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Some(RateFit {
        method: method.to_string(),
        s,
        rate: -slope,
        amplitude: intercept.exp(),
        r_squared: if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot },
        k_first: window[0].0,
        k_last: window[window.len() - 1].0,
        points: window.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_synthetic_rate() {
        let pts: Vec<(usize, f64)> = (1..=40).map(|k| (k, (-0.4 * k as f64).exp())).collect();
        let fit = fit_rate("zolo", 0.5, &pts).unwrap();
        assert!((fit.rate - 0.4).abs() < 1e-6);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        // e^{-0.4k} enters the band at k = 6 and leaves it after k = 69 > 40
        assert_eq!((fit.k_first, fit.k_last), (6, 40));
    }

    #[test]
    fn floor_is_excluded() {
        let mut pts: Vec<(usize, f64)> = (1..=20).map(|k| (k, 0.5 * (-1.5 * k as f64).exp())).collect();
        for p in pts.iter_mut().filter(|p| p.1 < 1e-13) {
            p.1 = 1e-13;
        }
        let fit = fit_rate("bura", 0.5, &pts).unwrap();
        assert!((fit.rate - 1.5).abs() < 1e-9);
        assert!(fit.k_last <= 18);
    }

    #[test]
    fn plateau_above_band_floor_is_trimmed() {
        let mut pts: Vec<(usize, f64)> = (1..=12).map(|k| (k, (-2.0 * k as f64).exp())).collect();
        let floor = pts[8].1;
        pts.extend((13..=20).map(|k| (k, floor * if k % 2 == 0 { 1.3 } else { 0.8 })));
        let fit = fit_rate("direct", 0.5, &pts).unwrap();
        assert!((fit.rate - 2.0).abs() < 1e-9, "{fit:?}");
        assert_eq!(fit.k_last, 12);
    }

    #[test]
    fn longest_run_wins_and_gaps_split() {
        let pts = vec![(1, 0.01), (2, f64::NAN), (3, 1e-3), (4, 1e-4), (5, 1e-5)];
        let fit = fit_rate("x", 0.2, &pts).unwrap();
        assert_eq!((fit.k_first, fit.k_last, fit.points), (3, 5, 3));
        assert!(fit_rate("x", 0.2, &[(1, 0.5), (2, 0.01)]).is_none());
    }
}
