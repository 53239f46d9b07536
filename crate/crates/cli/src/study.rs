//! Simulations behind the `run`, `converge` and `admissibility` subcommands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use fracddg::ddg_spatial::{check_admissibility, AdmissibilityReport, FluxParams};
use fracddg::fracops::assemble_cached;
use fracddg::meshbasis::Space;
use fracddg::models::{total_variation, Model, ProblemSpec};
use fracddg::timestep::{integrate, RunControl};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{AdmissibilityConfig, RunConfig};
use crate::output::{self, render_csv, render_snapshot, write_text, SAMPLES_PER_CELL};
use crate::targets::{self, TargetReport};
use crate::{compute_order, CliError};

/// One line of a convergence table; `errors`/`orders` hold one entry per
/// equation (two for coupled systems).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub alpha: f64,
    #[serde(rename = "N")]
    pub degree: usize,
    #[serde(rename = "K")]
    pub cells: usize,
    pub dt: f64,
    pub errors: Vec<f64>,
    pub orders: Vec<Option<f64>>,
    pub wall_time_ms: f64,
}

/// Scalar diagnostics of one simulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub problem: String,
    pub family: String,
    pub alpha: f64,
    #[serde(rename = "N")]
    pub degree: usize,
    #[serde(rename = "K")]
    pub cells: usize,
    pub beta0: f64,
    pub beta1: f64,
    pub cfl: f64,
    pub dt: f64,
    pub steps: usize,
    pub t_final: f64,
    pub wall_time_ms: f64,
    /// L² error of each equation at `t_final` (exact solution known).
    pub errors: Option<Vec<f64>>,
    pub norms_initial: Vec<f64>,
    pub norms_final: Vec<f64>,
    /// Of the sampled final profile (real families only).
    pub total_variation: Option<f64>,
    /// Largest sampled `|u|` of each equation at `t_final`.
    pub max_modulus: Vec<f64>,
    pub files: Vec<String>,
}

/// Everything one simulation produces.
pub struct Simulation {
    pub model: Model,
    pub cfl: f64,
    pub dt: f64,
    pub steps: usize,
    pub initial: Vec<f64>,
    pub state: Vec<f64>,
    pub snapshots: Vec<(f64, Vec<f64>)>,
    /// `(t, per-equation L² norms)` after every accepted step.
    pub history: Vec<(f64, Vec<f64>)>,
    pub wall_time_ms: f64,
}

/// L² norm of each equation's unknown (complex unknowns combined).
pub fn equation_norms(model: &Model, y: &[f64]) -> Vec<f64> {
    let n = model.n_dof();
    let sq: Vec<f64> = y.chunks_exact(n).map(|c| model.space.inner_raw(c, c)).collect();
    if model.family().is_complex() {
        sq.chunks(2).map(|p| (p[0] + p[1]).sqrt()).collect()
    } else {
        sq.iter().map(|v| v.sqrt()).collect()
    }
}

/// Builds the model of `spec` (reusing a cached fractional matrix when a
/// cache directory is given) and integrates it to `spec.t_final`.
pub fn simulate(
    spec: ProblemSpec,
    dt_override: Option<f64>,
    cache: Option<&Path>,
    seed: u64,
    snapshot_times: &[f64],
    record_history: bool,
) -> Result<Simulation, CliError> {
    let start = Instant::now();
    let frac = match cache {
        Some(dir) if spec.alpha < 2.0 => {
            let space = Space::uniform(spec.a, spec.b, spec.cells, spec.degree)?;
            Some(assemble_cached(&space, spec.alpha, dir)?)
        }
        _ => None,
    };
    let model = Model::build(spec, frac)?;
    let y0 = model.initial_state(seed)?;
    let cfl = model.effective_cfl(&y0);
    let mut rc = RunControl::new(0.0, model.spec.t_final, cfl)?;
    rc.dt_override = dt_override;
    rc.snapshot_times = snapshot_times.to_vec();
    let dt = rc.step_size(model.space.mesh.dx_min, model.spec.alpha);
    let mut history = Vec::new();
    if record_history {
        history.push((0.0, equation_norms(&model, &y0)));
    }
    let mut work = model.work();
    let result = {
        let m = &model;
        let mut rhs = |t: f64, y: &[f64], dy: &mut [f64]| m.rhs(t, y, dy, &mut work);
        integrate(&mut rhs, y0.clone(), &rc, dt, |t, y| {
            if record_history {
                history.push((t, equation_norms(m, y)));
            }
            Ok(())
        })?
    };
    Ok(Simulation {
        cfl,
        dt,
        steps: result.steps,
        initial: y0,
        state: result.state,
        snapshots: result.snapshots,
        history,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        model,
    })
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))
}

/// Result of a convergence study.
#[derive(Debug, Clone)]
pub struct ConvergeOutcome {
    pub rows: Vec<ConvergenceRow>,
    pub csv_files: Vec<PathBuf>,
    pub targets: Option<TargetReport>,
}

/// Runs the `(alpha, N, K)` grid and writes `<name>.csv` (and
/// `<name>_u2.csv` for coupled systems). Orders compare successive K of
/// the same `(alpha, N)`.
pub fn converge(cfg: &RunConfig, out: &Path, threads: Option<usize>, seed: Option<u64>) -> Result<ConvergeOutcome, CliError> {
    let seed = seed.or(cfg.seed).unwrap_or(0);
    let grid = cfg.grid();
    let specs = grid
        .iter()
        .map(|&(a, n, k)| cfg.spec(a, n, k))
        .collect::<Result<Vec<_>, _>>()?;
    if specs.iter().any(|s| s.exact.is_none()) {
        return Err(CliError::Config(format!(
            "problem '{}' has no exact solution to converge to",
            cfg.problem
        )));
    }
    let n_eq = specs[0].family.n_equations();
    let cache = cfg.b_cache_dir.as_ref().map(|p| cfg.resolve(p));
    ensure_dir(out)?;
    let cells: Vec<Result<ConvergenceRow, CliError>> = pool(threads)?.install(|| {
        specs
            .into_par_iter()
            .map(|spec| {
                let (alpha, degree, cells, t) = (spec.alpha, spec.degree, spec.cells, spec.t_final);
                let sim = simulate(spec, cfg.dt, cache.as_deref(), seed, &[], false)?;
                let errors = sim.model.errors(&sim.state, t)?;
                Ok(ConvergenceRow {
                    alpha,
                    degree,
                    cells,
                    dt: sim.dt,
                    orders: vec![None; errors.len()],
                    errors,
                    wall_time_ms: if cfg.timing { sim.wall_time_ms.round() } else { 0.0 },
                })
            })
            .collect()
    });
    let mut rows = cells.into_iter().collect::<Result<Vec<_>, _>>()?;
    fill_orders(&mut rows, cfg)?;
    let mut csv_files = Vec::new();
    for eq in 0..n_eq {
        let suffix = if eq == 0 { String::new() } else { format!("_u{}", eq + 1) };
        let path = out.join(format!("{}{suffix}.csv", cfg.name()));
        write_text(&path, &render_csv(&rows, eq))?;
        csv_files.push(path);
    }
    let targets = match &cfg.targets {
        None => None,
        Some(p) => {
            let t = targets::Targets::load(&cfg.resolve(p))?;
            let report = t.evaluate(&rows);
            let path = out.join(format!("{}_targets.json", cfg.name()));
            let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Output(e.to_string()))?;
            write_text(&path, &text)?;
            Some(report)
        }
    };
    Ok(ConvergeOutcome { rows, csv_files, targets })
}

fn fill_orders(rows: &mut [ConvergenceRow], cfg: &RunConfig) -> Result<(), CliError> {
    let per_group = cfg.k_list.len();
    for group in rows.chunks_mut(per_group) {
        if group.len() < 2 {
            continue;
        }
        let spec = cfg.spec(group[0].alpha, group[0].degree, group[0].cells)?;
        let h: Vec<f64> = group.iter().map(|r| (spec.b - spec.a) / r.cells as f64).collect();
        for eq in 0..group[0].errors.len() {
            let e: Vec<f64> = group.iter().map(|r| r.errors[eq]).collect();
            let orders = compute_order(&e, &h).map_err(|err| CliError::Numeric(err.to_string()))?;
            for (r, o) in group[1..].iter_mut().zip(orders) {
                r.orders[eq] = Some(o);
            }
        }
    }
    Ok(())
}

fn stem(cfg: &RunConfig, alpha: f64, n: usize, k: usize) -> String {
    format!("{}_a{alpha}_N{n}_K{k}", cfg.name())
}

/// Runs every grid point once, writing snapshots at `snapshot_times` and
/// `t_final`, the norm history and a JSON summary per run, plus
/// `<name>_runs.json` listing all summaries.
pub fn run(cfg: &RunConfig, out: &Path, threads: Option<usize>, seed: Option<u64>) -> Result<Vec<RunSummary>, CliError> {
    let seed = seed.or(cfg.seed).unwrap_or(0);
    let cache = cfg.b_cache_dir.as_ref().map(|p| cfg.resolve(p));
    ensure_dir(out)?;
    let grid = cfg.grid();
    let results: Vec<Result<RunSummary, CliError>> = pool(threads)?.install(|| {
        grid.into_par_iter()
            .map(|(a, n, k)| {
                let spec = cfg.spec(a, n, k)?;
                let mut times = cfg.snapshot_times.clone();
                times.push(spec.t_final);
                let sim = simulate(spec, cfg.dt, cache.as_deref(), seed, &times, true)?;
                write_run(cfg, out, &stem(cfg, a, n, k), &sim)
            })
            .collect()
    });
    let summaries = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let text = serde_json::to_string_pretty(&summaries).map_err(|e| CliError::Output(e.to_string()))?;
    write_text(&out.join(format!("{}_runs.json", cfg.name())), &text)?;
    Ok(summaries)
}

fn write_run(cfg: &RunConfig, out: &Path, stem: &str, sim: &Simulation) -> Result<RunSummary, CliError> {
    let m = &sim.model;
    let s = &m.spec;
    let n = m.n_dof();
    let n_eq = s.family.n_equations();
    let per_eq = s.family.n_components() / n_eq;
    let mut files = Vec::new();
    for (t, y) in &sim.snapshots {
        for eq in 0..n_eq {
            let parts: Vec<&[f64]> = (0..per_eq)
                .map(|c| {
                    let i = eq * per_eq + c;
                    &y[i * n..(i + 1) * n]
                })
                .collect();
            let suffix = if n_eq == 1 { String::new() } else { format!("_u{}", eq + 1) };
            let name = format!("{stem}_t{t}{suffix}.txt");
            write_text(&out.join(&name), &render_snapshot(&m.space, &parts)?)?;
            files.push(name);
        }
    }
    let mut hist = String::from("# t");
    for eq in 0..n_eq {
        hist.push_str(&format!(" norm_u{}", eq + 1));
    }
    hist.push('\n');
    for (t, norms) in &sim.history {
        hist.push_str(&crate::fmt17(*t));
        for v in norms {
            hist.push(' ');
            hist.push_str(&crate::fmt17(*v));
        }
        hist.push('\n');
    }
    let name = format!("{stem}_norm.txt");
    write_text(&out.join(&name), &hist)?;
    files.push(name);

    let errors = match m.exact() {
        Some(_) => Some(m.errors(&sim.state, s.t_final)?),
        None => None,
    };
    let max_modulus = (0..n_eq)
        .map(|eq| {
            let parts: Vec<Vec<f64>> = (0..per_eq)
                .map(|c| {
                    let i = eq * per_eq + c;
                    output::sample_field(&m.space, &sim.state[i * n..(i + 1) * n])
                })
                .collect();
            (0..parts[0].len())
                .map(|j| parts.iter().map(|p| p[j] * p[j]).sum::<f64>().sqrt())
                .fold(0.0, f64::max)
        })
        .collect();
    let total_variation = (!s.family.is_complex()).then(|| total_variation(&m.space, &sim.state[..n], SAMPLES_PER_CELL));
    let summary = RunSummary {
        name: cfg.name().to_string(),
        problem: cfg.problem.clone(),
        family: s.family.name().to_string(),
        alpha: s.alpha,
        degree: s.degree,
        cells: s.cells,
        beta0: s.flux.beta0,
        beta1: s.flux.beta1,
        cfl: sim.cfl,
        dt: sim.dt,
        steps: sim.steps,
        t_final: s.t_final,
        wall_time_ms: if cfg.timing { sim.wall_time_ms.round() } else { 0.0 },
        errors,
        norms_initial: equation_norms(m, &sim.initial),
        norms_final: equation_norms(m, &sim.state),
        total_variation,
        max_modulus,
        files,
    };
    let name = format!("{stem}_summary.json");
    let text = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Output(e.to_string()))?;
    write_text(&out.join(&name), &text)?;
    Ok(summary)
}

/// Admissibility verdict plus the file holding the serialized report.
#[derive(Debug, Clone)]
pub struct AdmissibilityOutcome {
    pub report: AdmissibilityReport,
    pub path: PathBuf,
}

#[derive(Serialize)]
struct AdmissibilityJson<'a> {
    #[serde(rename = "N")]
    degree: usize,
    beta0: f64,
    beta1: f64,
    samples: usize,
    gamma: f64,
    mu: f64,
    seed: u64,
    min_ratio: f64,
    admissible: bool,
    /// Nodal values on `[-1,0]` then `[0,1]`; present on violation.
    witness: Option<&'a [f64]>,
}

/// Samples the admissibility form and writes `<name>_admissibility.json`.
pub fn admissibility(cfg: &AdmissibilityConfig, out: &Path, seed: Option<u64>) -> Result<AdmissibilityOutcome, CliError> {
    let seed = seed.unwrap_or(0);
    let flux = FluxParams::new(cfg.beta0, cfg.beta1);
    let report = check_admissibility(flux, cfg.degree, cfg.samples, cfg.gamma, cfg.mu, seed)?;
    ensure_dir(out)?;
    let name = cfg.name.clone().unwrap_or_else(|| {
        format!("flux_N{}_b0{}_b1{}", cfg.degree, cfg.beta0, cfg.beta1)
    });
    let path = out.join(format!("{name}_admissibility.json"));
    let json = AdmissibilityJson {
        degree: cfg.degree,
        beta0: cfg.beta0,
        beta1: cfg.beta1,
        samples: cfg.samples,
        gamma: cfg.gamma,
        mu: cfg.mu,
        seed,
        min_ratio: report.min_ratio,
        admissible: report.admissible,
        witness: (!report.admissible).then_some(report.witness.as_slice()),
    };
    let text = serde_json::to_string_pretty(&json).map_err(|e| CliError::Output(e.to_string()))?;
    write_text(&path, &text)?;
    Ok(AdmissibilityOutcome { report, path })
}
