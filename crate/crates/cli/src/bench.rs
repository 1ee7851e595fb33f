//! Benchmark sweep over `(method, s, k)` cells against the dense oracle.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::time::Instant;

use fracdiff::densecore::DENSE_CAP;
use fracdiff::krylov::PoleSet;
use fracdiff::rational::BestApproxReport;
use fracdiff::schemes::{
    bura_approximation, c_star, coarse_greedy_grid, default_greedy_grid, greedy_snapshots, solve_direct_with,
    solve_dual, solve_gauss_rbm, solve_rkm, solve_sinc_rbm, zolotarev_snapshots, DenseOracle, GreedyOutcome,
    MethodId, MethodResult, SincGrid,
};
use fracdiff::{OperatorPencil, Pole, SpectralInterval, Vector};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{BenchConfig, Problem};
use crate::rates::{fit_rate, RateFit};
use crate::records::{write_csv, ConvergenceRecord};
use crate::{CliError, CliResult};

pub const CSV_FILE: &str = "convergence.csv";
pub const RATES_FILE: &str = "rates.csv";
pub const SIDECAR_FILE: &str = "bench.json";

#[derive(Debug, Clone)]
pub struct BenchOutput {
    /// Sorted by method id, then `s`, then `k`.
    pub records: Vec<ConvergenceRecord>,
    pub fits: Vec<RateFit>,
    pub sidecar: Value,
}

/// Everything the cells share: built once, read concurrently.
struct Shared<'p> {
    pencil: &'p OperatorPencil,
    b: Vector,
    interval: SpectralInterval,
    exact: Vec<Vector>,
    oracle_time: f64,
    grid: Option<SincGrid>,
    greedy: Option<Result<GreedyOutcome, String>>,
    bura: HashMap<(usize, usize), Result<BestApproxReport, String>>,
    kstar: f64,
}

fn greedy_prefix(outcome: &GreedyOutcome, k: usize) -> fracdiff::Result<PoleSet> {
    let snaps = outcome.snapshots.snapshots();
    PoleSet::from_snapshots(&snaps[..snaps.len().min(k + 1)])
}

fn bura_set(report: &BestApproxReport) -> fracdiff::Result<PoleSet> {
    let mut poles = vec![Pole::NegInfinity];
    if report.k > 0 {
        poles.extend(report.approximant.poles()?.into_iter().map(Pole::Finite));
    }
    PoleSet::new(poles)
}

fn run_cell(sh: &Shared<'_>, method: MethodId, si: usize, s: f64, k: usize) -> Result<MethodResult, String> {
    let (p, b) = (sh.pencil, &sh.b);
    let greedy = || -> Result<&GreedyOutcome, String> {
        match &sh.greedy {
            Some(Ok(g)) => Ok(g),
            Some(Err(e)) => Err(format!("greedy selection failed: {e}")),
            None => Err("greedy snapshots were not computed".into()),
        }
    };
    let bura = || -> Result<&BestApproxReport, String> {
        sh.bura
            .get(&(si, k))
            .ok_or_else(|| "BURA approximation was not computed".to_string())?
            .as_ref()
            .map_err(Clone::clone)
    };
    let text = |e: fracdiff::Error| e.to_string();
    match method {
        MethodId::Zolo => {
            let poles = zolotarev_snapshots(k, sh.interval).map_err(text)?;
            solve_rkm(p, b, s, &poles, method).map_err(text)
        }
        MethodId::Greedy => {
            let poles = greedy_prefix(greedy()?, k).map_err(text)?;
            solve_rkm(p, b, s, &poles, method).map_err(text)
        }
        MethodId::Bura => {
            let report = bura()?;
            let poles = bura_set(report).map_err(text)?;
            solve_rkm(p, b, s, &poles, method).map_err(text)
        }
        MethodId::Sinc => {
            let poles = greedy_prefix(greedy()?, k).map_err(text)?;
            let grid = sh.grid.as_ref().ok_or("sinc grid unavailable")?;
            solve_sinc_rbm(p, b, s, &poles, grid).map_err(text)
        }
        MethodId::Gauss => {
            let poles = greedy_prefix(greedy()?, k).map_err(text)?;
            solve_gauss_rbm(p, b, s, &poles, &poles, sh.kstar).map_err(text)
        }
        MethodId::Direct => solve_direct_with(p, b, bura()?).map_err(text),
        MethodId::Dual => {
            let poles = zolotarev_snapshots(k, sh.interval).map_err(text)?;
            solve_dual(p, b, s, &poles).map_err(text)
        }
        MethodId::Oracle => Ok(MethodResult {
            solution: sh.exact[si].clone(),
            method,
            k,
            s,
            wall_time: sh.oracle_time,
            phases: vec![("eigendecomposition".into(), sh.oracle_time)],
            metadata: BTreeMap::new(),
        }),
    }
}

/// Runs the sweep in the calling thread's rayon pool.
pub fn run_bench(cfg: &BenchConfig) -> CliResult<BenchOutput> {
    let pencil = cfg.problem.build()?;
    let n = pencil.dim();
    if n > DENSE_CAP {
        return Err(CliError::Config(format!(
            "the reference solution needs a dense eigendecomposition (n <= {DENSE_CAP}) but n = {n}; \
             choose a smaller --n or --nx"
        )));
    }
    let b = Problem::rhs(&pencil);
    let t0 = Instant::now();
    let oracle = DenseOracle::new(&pencil)?;
    let exact = cfg
        .s
        .iter()
        .map(|&s| oracle.power(&b, s))
        .collect::<fracdiff::Result<Vec<_>>>()?;
    let oracle_time = t0.elapsed().as_secs_f64() / cfg.s.len() as f64;
    let interval = pencil.spectral_interval(cfg.tol)?;
    let wants = |m: MethodId| cfg.methods.contains(&m);
    let needs_greedy = wants(MethodId::Greedy) || wants(MethodId::Sinc) || wants(MethodId::Gauss);

    let grid = if needs_greedy {
        Some(SincGrid::new(cfg.kstar, cfg.s_min, cfg.s_max)?)
    } else {
        None
    };
    let greedy = match &grid {
        Some(g) => {
            let training = match cfg.greedy_points {
                Some(points) => coarse_greedy_grid(g, points)?,
                None => default_greedy_grid(g),
            };
            let k = cfg.k_max.min(training.len());
            Some(greedy_snapshots(&pencil, &b, &training, k).map_err(|e| e.to_string()))
        }
        None => None,
    };

    let ks: Vec<usize> = (cfg.k_min..=cfg.k_max).collect();
    let bura_keys: Vec<(usize, usize)> = if wants(MethodId::Bura) || wants(MethodId::Direct) {
        (0..cfg.s.len()).flat_map(|si| ks.iter().map(move |&k| (si, k))).collect()
    } else {
        Vec::new()
    };
    let bura: HashMap<_, _> = bura_keys
        .par_iter()
        .map(|&(si, k)| ((si, k), bura_approximation(cfg.s[si], interval, k).map_err(|e| e.to_string())))
        .collect();

    let shared = Shared {
        pencil: &pencil,
        b,
        interval,
        exact,
        oracle_time,
        grid,
        greedy,
        bura,
        kstar: cfg.kstar,
    };
    let mut cells: Vec<(MethodId, usize, usize)> = Vec::new();
    for &m in &cfg.methods {
        for si in 0..cfg.s.len() {
            cells.extend(ks.iter().map(|&k| (m, si, k)));
        }
    }
    let mut records: Vec<ConvergenceRecord> = cells
        .par_iter()
        .map(|&(method, si, k)| {
            let s = cfg.s[si];
            let mut extra = BTreeMap::new();
            let (error_m, wall) = match run_cell(&shared, method, si, s, k) {
                Ok(res) => {
                    let err = if method == MethodId::Oracle {
                        0.0
                    } else {
                        pencil.m_norm(&(&shared.exact[si] - &res.solution)).unwrap_or(f64::NAN)
                    };
                    for (key, v) in &res.metadata {
                        extra.insert(key.clone(), v.to_string());
                    }
                    (err, res.wall_time)
                }
                Err(msg) => {
                    extra.insert("error".into(), msg);
                    (f64::NAN, 0.0)
                }
            };
            ConvergenceRecord {
                method: method.as_str().to_string(),
                s,
                k,
                n,
                error_m,
                wall_time_s: wall,
                extra,
            }
        })
        .collect();
    records.sort_by(|a, b| {
        a.method
            .cmp(&b.method)
            .then(a.s.total_cmp(&b.s))
            .then(a.k.cmp(&b.k))
    });

    let mut fits = Vec::new();
    for m in &cfg.methods {
        if *m == MethodId::Oracle {
            continue;
        }
        for &s in &cfg.s {
            let pts: Vec<(usize, f64)> = records
                .iter()
                .filter(|r| r.method == m.as_str() && r.s == s)
                .map(|r| (r.k, r.error_m))
                .collect();
            if let Some(fit) = fit_rate(m.as_str(), s, &pts) {
                fits.push(fit);
            }
        }
    }
    fits.sort_by(|a, b| a.method.cmp(&b.method).then(a.s.total_cmp(&b.s)));

    let failures: Vec<Value> = records
        .iter()
        .filter(|r| r.failed())
        .map(|r| json!({"method": r.method, "s": r.s, "k": r.k, "error": r.extra.get("error")}))
        .collect();
    let greedy_json = match &shared.greedy {
        Some(Ok(g)) => json!({
            "snapshots": g.snapshots.snapshots(),
            "residuals": g.residuals,
            "early_exit": g.early_exit,
        }),
        Some(Err(e)) => json!({ "error": e }),
        None => Value::Null,
    };
    let sidecar = json!({
        "config": cfg,
        "n": n,
        "b": "ones",
        "spectral_interval": [interval.lambda_min, interval.lambda_max],
        "c_star": c_star(interval).ok(),
        "sinc_grid": shared.grid,
        "greedy": greedy_json,
        "fit_band": crate::rates::FIT_BAND,
        "rates": fits,
        "failures": failures,
        "cells": records.iter().map(|r| json!({
            "method": r.method, "s": r.s, "k": r.k, "metadata": r.extra,
        })).collect::<Vec<_>>(),
    });
    Ok(BenchOutput { records, fits, sidecar })
}

/// Writes `convergence.csv`, `rates.csv` and `bench.json` into the output directory.
pub fn write_bench(cfg: &BenchConfig, out: &BenchOutput) -> CliResult<()> {
    let dir = &cfg.out_dir;
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let io = |e: std::io::Error| CliError::Io(e.to_string());
    write_csv(fs::File::create(dir.join(CSV_FILE)).map_err(io)?, &out.records)?;
    let mut w = csv::Writer::from_writer(fs::File::create(dir.join(RATES_FILE)).map_err(io)?);
    if out.fits.is_empty() {
        w.write_record(["method", "s", "rate", "amplitude", "r_squared", "k_first", "k_last", "points"])?;
    }
    for f in &out.fits {
        w.serialize(f)?;
    }
    w.flush().map_err(io)?;
    let text = serde_json::to_string_pretty(&out.sidecar).map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(dir.join(SIDECAR_FILE), text + "\n").map_err(io)
}

/// Human-readable rate summary.
pub fn rate_summary(out: &BenchOutput) -> String {
    let mut s = String::from("method     s      rate     r^2    k-window\n");
    for f in &out.fits {
        s.push_str(&format!(
            "{:<8} {:>5} {:>9.4} {:>7.4}   {}..{}\n",
            f.method, f.s, f.rate, f.r_squared, f.k_first, f.k_last
        ));
    }
    let failed = out.records.iter().filter(|r| r.failed()).count();
    if failed > 0 {
        s.push_str(&format!("{failed} cell(s) failed; see {SIDECAR_FILE}\n"));
    }
    s
}
