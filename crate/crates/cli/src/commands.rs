//! The `solve`, `poles` and `bura-export` subcommands as library functions.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use fracdiff::densecore::DENSE_CAP;
use fracdiff::rational::{ApproximantRecord, BestApproxReport};
use fracdiff::schemes::{
    bura_approximation, bura_poles, coarse_greedy_grid, default_greedy_grid, greedy_snapshots, solve_direct_with,
    solve_dual, solve_gauss_rbm, solve_oracle, solve_rkm, solve_sinc_rbm, zolotarev_snapshots, DenseOracle,
    MethodId, MethodResult, SincGrid,
};
use fracdiff::{OperatorPencil, SpectralInterval, Vector};
use serde_json::{json, Value};

use crate::config::Problem;
use crate::{CliError, CliResult};

pub const SOLUTION_FILE: &str = "solution.txt";
pub const SOLUTION_META_FILE: &str = "solution.json";

/// Settings of a single solve.
#[derive(Debug, Clone)]
pub struct SolveRequest {
    pub problem: Problem,
    pub method: MethodId,
    pub s: f64,
    pub k: usize,
    pub kstar: f64,
    pub s_min: f64,
    pub s_max: f64,
    pub tol: f64,
    pub greedy_points: Option<usize>,
    /// Approximant to use for `direct` instead of running BRASIL.
    pub approximant: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub result: MethodResult,
    /// Deterministic metadata (no wall-clock figures).
    pub metadata: Value,
}

fn report_from_record(rec: ApproximantRecord) -> BestApproxReport {
    BestApproxReport {
        extrema: Vec::new(),
        iterations: 0,
        converged: true,
        floor_limited: false,
        max_error: rec.max_error,
        equioscillation_deviation: rec.equioscillation_deviation,
        s: rec.s,
        k: rec.k,
        interval: SpectralInterval { lambda_min: rec.lambda_min, lambda_max: rec.lambda_max },
        approximant: rec.approximant,
    }
}

pub fn solve(req: &SolveRequest) -> CliResult<SolveOutput> {
    let pencil = req.problem.build()?;
    let b = Problem::rhs(&pencil);
    let interval = || pencil.spectral_interval(req.tol);
    let greedy = |pencil: &OperatorPencil| -> CliResult<fracdiff::krylov::PoleSet> {
        let grid = SincGrid::new(req.kstar, req.s_min, req.s_max)?;
        let training = match req.greedy_points {
            Some(p) => coarse_greedy_grid(&grid, p)?,
            None => default_greedy_grid(&grid),
        };
        Ok(greedy_snapshots(pencil, &b, &training, req.k.min(training.len()))?.snapshots)
    };
    let (s, k) = (req.s, req.k);
    let result = match req.method {
        MethodId::Zolo => solve_rkm(&pencil, &b, s, &zolotarev_snapshots(k, interval()?)?, req.method)?,
        MethodId::Bura => solve_rkm(&pencil, &b, s, &bura_poles(s, interval()?, k)?, req.method)?,
        MethodId::Greedy => solve_rkm(&pencil, &b, s, &greedy(&pencil)?, req.method)?,
        MethodId::Sinc => {
            let grid = SincGrid::new(req.kstar, req.s_min, req.s_max)?;
            if !(s >= grid.s_min && s <= grid.s_max) {
                return Err(fracdiff::Error::Precondition(format!(
                    "exponent {s} outside the sinc range [{}, {}]; adjust --s-min/--s-max",
                    grid.s_min, grid.s_max
                ))
                .into());
            }
            solve_sinc_rbm(&pencil, &b, s, &greedy(&pencil)?, &grid)?
        }
        MethodId::Gauss => {
            let ps = greedy(&pencil)?;
            solve_gauss_rbm(&pencil, &b, s, &ps, &ps, req.kstar)?
        }
        MethodId::Direct => {
            let report = match &req.approximant {
                Some(path) => {
                    let rec = ApproximantRecord::load(path)?;
                    if rec.s != s {
                        return Err(CliError::Config(format!(
                            "approximant is for s = {}, requested s = {s}",
                            rec.s
                        )));
                    }
                    report_from_record(rec)
                }
                None => bura_approximation(s, interval()?, k)?,
            };
            solve_direct_with(&pencil, &b, &report)?
        }
        MethodId::Dual => solve_dual(&pencil, &b, s, &zolotarev_snapshots(k, interval()?)?)?,
        MethodId::Oracle => solve_oracle(&pencil, &b, s)?,
    };
    let mut meta = BTreeMap::new();
    meta.insert("method".to_string(), json!(req.method));
    meta.insert("s".into(), json!(s));
    meta.insert("k".into(), json!(result.k));
    meta.insert("n".into(), json!(pencil.dim()));
    meta.insert("problem".into(), json!(req.problem));
    meta.insert("details".into(), json!(result.metadata));
    meta.insert("b_norm_M".into(), json!(pencil.m_norm(&b)?));
    if pencil.dim() <= DENSE_CAP {
        let exact = DenseOracle::new(&pencil)?.power(&b, s)?;
        meta.insert("error_M".into(), json!(pencil.m_norm(&(&exact - &result.solution))?));
    }
    Ok(SolveOutput { result, metadata: json!(meta) })
}

/// One value per line in shortest round-trip form.
pub fn format_vector(v: &Vector) -> String {
    let mut s = String::with_capacity(v.len() * 24);
    for x in v.iter() {
        let _ = writeln!(s, "{x:e}");
    }
    s
}

pub fn parse_vector(text: &str) -> CliResult<Vector> {
    let vals = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            l.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Config(format!("line {}: {e}", i + 1)))
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(Vector::from_vec(vals))
}

pub fn write_solution(dir: &Path, out: &SolveOutput) -> CliResult<()> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    fs::write(dir.join(SOLUTION_FILE), format_vector(&out.result.solution)).map_err(io)?;
    let text = serde_json::to_string_pretty(&out.metadata).map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(dir.join(SOLUTION_META_FILE), text + "\n").map_err(io)
}

/// Generator selected by `poles --kind`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoleKind {
    Zolotarev,
    Bura,
    Sinc,
    Greedy,
}

impl std::str::FromStr for PoleKind {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "zolotarev" | "zolo" => Ok(PoleKind::Zolotarev),
            "bura" => Ok(PoleKind::Bura),
            "sinc" => Ok(PoleKind::Sinc),
            "greedy" => Ok(PoleKind::Greedy),
            other => Err(CliError::Config(format!(
                "unknown pole kind '{other}' (expected zolotarev, bura, sinc or greedy)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PolesRequest {
    pub kind: PoleKind,
    pub k: usize,
    pub s: f64,
    pub kstar: f64,
    pub s_min: f64,
    pub s_max: f64,
    /// Explicit interval; otherwise computed from `problem`.
    pub interval: Option<(f64, f64)>,
    pub problem: Problem,
    pub tol: f64,
}

fn fmt_snapshot(t: Option<f64>) -> String {
    match t {
        None => "inf".into(),
        Some(x) => format!("{x:?}"),
    }
}

/// Structured text listing: `key = value` lines, snapshots as `{inf, t1, ...}`.
pub fn poles(req: &PolesRequest) -> CliResult<String> {
    let mut out = String::new();
    let interval = || -> CliResult<SpectralInterval> {
        match req.interval {
            Some((a, b)) => Ok(SpectralInterval::new(a, b)?),
            None => Ok(req.problem.build()?.spectral_interval(req.tol)?),
        }
    };
    match req.kind {
        PoleKind::Sinc => {
            let g = SincGrid::new(req.kstar, req.s_min, req.s_max)?;
            let (lo, hi) = g.parameter_range();
            let _ = writeln!(out, "kind = sinc");
            let _ = writeln!(out, "kstar = {:?}", g.k_star);
            let _ = writeln!(out, "s_range = [{:?}, {:?}]", g.s_min, g.s_max);
            let _ = writeln!(out, "M = {}", g.m);
            let _ = writeln!(out, "N = {}", g.n);
            let _ = writeln!(out, "nodes = {}", g.len());
            let _ = writeln!(out, "parameter_range = [{lo:e}, {hi:e}]");
            return Ok(out);
        }
        PoleKind::Zolotarev | PoleKind::Bura | PoleKind::Greedy => {}
    }
    let set = match req.kind {
        PoleKind::Zolotarev => zolotarev_snapshots(req.k, interval()?)?,
        PoleKind::Bura => bura_poles(req.s, interval()?, req.k)?,
        PoleKind::Greedy => {
            let pencil = req.problem.build()?;
            let b = Problem::rhs(&pencil);
            let g = SincGrid::new(req.kstar, req.s_min, req.s_max)?;
            let training = default_greedy_grid(&g);
            greedy_snapshots(&pencil, &b, &training, req.k.min(training.len()))?.snapshots
        }
        PoleKind::Sinc => unreachable!("handled above"),
    };
    let name = match req.kind {
        PoleKind::Zolotarev => "zolotarev",
        PoleKind::Bura => "bura",
        PoleKind::Greedy => "greedy",
        PoleKind::Sinc => "sinc",
    };
    let _ = writeln!(out, "kind = {name}");
    let _ = writeln!(out, "k = {}", req.k);
    if req.kind == PoleKind::Bura {
        let _ = writeln!(out, "s = {:?}", req.s);
    }
    if req.kind != PoleKind::Greedy || req.interval.is_some() {
        if let Ok(iv) = interval() {
            let _ = writeln!(out, "interval = [{:?}, {:?}]", iv.lambda_min, iv.lambda_max);
        }
    }
    let snaps: Vec<String> = set.snapshots().into_iter().map(fmt_snapshot).collect();
    let _ = writeln!(out, "snapshots = {{{}}}", snaps.join(", "));
    let poles: Vec<String> = set
        .poles()
        .iter()
        .map(|p| match p.finite() {
            None => "-inf".to_string(),
            Some(d) => format!("{d:?}"),
        })
        .collect();
    let _ = writeln!(out, "poles = {{{}}}", poles.join(", "));
    Ok(out)
}

/// Parses a `poles` listing back into snapshots (`None` = `∞`).
pub fn parse_snapshot_listing(text: &str) -> CliResult<Vec<Option<f64>>> {
    let line = text
        .lines()
        .find_map(|l| l.strip_prefix("snapshots = "))
        .ok_or_else(|| CliError::Config("listing has no snapshots line".into()))?;
    let inner = line.trim().trim_start_matches('{').trim_end_matches('}');
    inner
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            if t == "inf" {
                Ok(None)
            } else {
                t.parse::<f64>()
                    .map(Some)
                    .map_err(|e| CliError::Config(format!("bad snapshot '{t}': {e}")))
            }
        })
        .collect()
}

/// Runs BRASIL and writes the approximant record as JSON.
pub fn bura_export(s: f64, k: usize, interval: SpectralInterval, path: &Path) -> CliResult<ApproximantRecord> {
    let report = bura_approximation(s, interval, k)?;
    let rec = ApproximantRecord::from(&report);
    rec.save(path)?;
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_text_round_trip() {
        let v = Vector::from_vec(vec![0.1, -3.0, 1e-300, 2.0 / 3.0]);
        let back = parse_vector(&format_vector(&v)).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn listing_round_trip() {
        let req = PolesRequest {
            kind: PoleKind::Zolotarev,
            k: 3,
            s: 0.5,
            kstar: 0.15,
            s_min: 0.2,
            s_max: 0.8,
            interval: Some((1.0, 100.0)),
            problem: Problem::Fd1d { n: 4 },
            tol: 1e-8,
        };
        let text = poles(&req).unwrap();
        let snaps = parse_snapshot_listing(&text).unwrap();
        let direct = zolotarev_snapshots(3, SpectralInterval::new(1.0, 100.0).unwrap()).unwrap();
        assert_eq!(snaps, direct.snapshots());
    }
}
