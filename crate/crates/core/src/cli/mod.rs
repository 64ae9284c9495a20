//! Command-line runner: reads a configuration, runs one task and writes CSV files.
//!
//! Exit status is 0 on success, 2 when a bound ordering is violated and 3 on
//! any other error. Nothing is written unless the whole task succeeds.

pub mod config;
pub mod output;
pub mod recipes;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};

use crate::bound_engine::{superharmonic_witness, WitnessOutcome, WitnessSearch};
use crate::bound_engine::{bhi_constants, exit_time_bounds, halfspace_estimate, pot_bounds, ret_bounds};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::kernel_averaging::regularization_kernel;
use crate::monte_carlo::{default_green_bins, exit_time_ball, green_ball, green_halfspace, hit_ball_prob, ShellBins, SimScheme};
use crate::process_model::{make_family, Family, ProcessSpec};
use crate::quad::QuadratureConfig;
use crate::radial_calculus::{potential_kernel_fourier_with, pruitt_with, psi_with};
use crate::scaling_indices::{certify_scaling, index_relations_report};
use config::{RawConfig, Reader};
use output::{Cell, Table};
use recipes::{sup_experiment, theorem_rows, SandwichRow, Theorem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TaskKind {
    Pruitt,
    Psi,
    Potential,
    Indices,
    CertifyScaling,
    Simulate,
    Hitball,
    Green,
    Halfspace,
    VerifyBounds,
    BhiConst,
    AvgKernel,
    Witness,
}

impl TaskKind {
    pub fn name(self) -> String {
        self.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
    }

    fn file_stem(self) -> String {
        self.name().replace('-', "_")
    }
}

#[derive(Parser, Debug, Clone)]
#[command(name = "isolevy", version, about = "Potential theory of isotropic unimodal Lévy processes")]
pub struct Args {
    /// Task to run; defaults to `kind` in the [task] section.
    pub task: Option<TaskKind>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for Monte Carlo batches (1 runs sequentially).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Shorthand for `--set theorem=NAME`.
    #[arg(long)]
    pub theorem: Option<String>,
    /// Overrides as `section.key=value`; a bare key goes to [task].
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

/// What verify-bounds checks.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundCheck {
    Sandwich(Theorem),
    /// f(x) = P^x(X(τ_{B_r}) ∈ B_rho) against the supremum estimate with inner radius q.
    Sup { q: f64, rho: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Task {
    Pruitt { radii: Vec<f64> },
    Psi { rhos: Vec<f64> },
    Potential { radii: Vec<f64> },
    Indices,
    CertifyScaling { m: f64, alpha: f64, r_inf: f64 },
    Simulate { r: f64, x: Vec<f64> },
    Hitball { r: f64, distances: Vec<f64> },
    Green { r: f64, x: Vec<f64>, bins: usize },
    Halfspace { x: Vec<f64>, y: Vec<f64> },
    VerifyBounds { check: BoundCheck, r: f64, c_budget: f64 },
    BhiConst { r: f64, big_r: f64 },
    AvgKernel { q: f64, r: f64, n: usize, paths: u64 },
    Witness { r: f64 },
}

/// A fully type-checked run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub spec: ProcessSpec,
    pub kind: TaskKind,
    pub task: Task,
    pub out: PathBuf,
    pub seed: u64,
    pub n: u64,
    pub scheme: SimScheme,
    pub quadrature: QuadratureConfig,
}

fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![lo];
    }
    (0..points).map(|i| lo * (hi / lo).powf(i as f64 / (points - 1) as f64)).collect()
}

fn grid(rd: &Reader, key: &str, lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if let Some(v) = rd.list("task", key)? {
        return Ok(v);
    }
    let lo = rd.get_or("task", &format!("{key}_min"), lo)?;
    let hi = rd.get_or("task", &format!("{key}_max"), hi)?;
    let points = rd.get_or("task", "points", points)?;
    Ok(log_grid(lo, hi, points))
}

fn point(rd: &Reader, key: &str, d: usize, default: Vec<f64>) -> Result<Vec<f64>> {
    let v = rd.list("task", key)?.unwrap_or(default);
    if v.len() != d {
        let e = rd.entry("task", key);
        return Err(Error::ConfigParse {
            line: e.map_or(0, |e| e.line),
            column: e.map_or(1, |e| e.column),
            message: format!("`{key}` needs {d} coordinates, got {}", v.len()),
        });
    }
    Ok(v)
}

fn read_spec(rd: &Reader) -> Result<ProcessSpec> {
    let fam = rd.entry("spec", "family").ok_or_else(|| rd.missing("spec", "family"))?;
    let d: usize = rd.get_or("spec", "d", 3)?;
    let at_family = |message: String| Error::ConfigParse { line: fam.line, column: fam.column, message };
    let names = Family::parameter_names(&fam.value).ok_or_else(|| at_family(format!("unknown family `{}`", fam.value)))?;
    let mut params = std::collections::BTreeMap::new();
    for &p in names {
        if let Some(v) = rd.get::<f64>("spec", p)? {
            params.insert(p.to_string(), v);
        }
    }
    let family = Family::from_keyed(&fam.value, &params).map_err(|e| at_family(e.to_string()))?;
    make_family(d, family).map_err(|e| at_family(e.to_string()))
}

fn read_scheme(rd: &Reader, threads: Option<usize>) -> Result<SimScheme> {
    let def = SimScheme::default();
    let scheme = SimScheme {
        epsilon: rd.get("mc", "epsilon")?,
        dt: rd.get("mc", "dt")?,
        adapt: rd.get_or("mc", "adapt", def.adapt)?,
        step: rd.get_or("mc", "step", def.step)?,
        resolution_floor: rd.get_or("mc", "resolution_floor", def.resolution_floor)?,
        horizon: rd.get_or("mc", "horizon", def.horizon)?,
        outer_kill_radius: rd.get("mc", "outer_kill_radius")?,
        bridge_correction: rd.get_or("mc", "bridge_correction", def.bridge_correction)?,
        batch_size: rd.get_or("mc", "batch_size", def.batch_size)?,
        execution: Execution::from_threads(threads),
    };
    scheme.check()?;
    Ok(scheme)
}

fn read_task(rd: &Reader, kind: TaskKind, d: usize) -> Result<Task> {
    let origin = vec![0.0; d];
    Ok(match kind {
        TaskKind::Pruitt => Task::Pruitt { radii: grid(rd, "r", 1e-2, 1e2, 9)? },
        TaskKind::Psi => Task::Psi { rhos: grid(rd, "rho", 1e-2, 1e2, 9)? },
        TaskKind::Potential => Task::Potential { radii: grid(rd, "x", 0.5, 2.0, 3)? },
        TaskKind::Indices => Task::Indices,
        TaskKind::CertifyScaling => Task::CertifyScaling {
            m: rd.get_or("task", "m", 1.0)?,
            alpha: rd.require("task", "alpha")?,
            r_inf: rd.get_or("task", "r_inf", f64::INFINITY)?,
        },
        TaskKind::Simulate => Task::Simulate { r: rd.get_or("task", "r", 1.0)?, x: point(rd, "x", d, origin)? },
        TaskKind::Hitball => Task::Hitball {
            r: rd.get_or("task", "r", 1.0)?,
            distances: rd.list("task", "distances")?.unwrap_or_else(|| vec![2.0]),
        },
        TaskKind::Green => Task::Green { r: rd.get_or("task", "r", 1.0)?, x: point(rd, "x", d, origin)?, bins: rd.get_or("task", "bins", 32)? },
        TaskKind::Halfspace => {
            let mut up = vec![0.0; d];
            up[d - 1] = 1.0;
            let mut y = up.clone();
            y[0] = 1.0;
            Task::Halfspace { x: point(rd, "x", d, up)?, y: point(rd, "y", d, y)? }
        }
        TaskKind::VerifyBounds => {
            let e = rd.entry("task", "theorem").ok_or_else(|| rd.missing("task", "theorem"))?;
            let check = match e.value.as_str() {
                "sup" => BoundCheck::Sup { q: rd.get_or("task", "q", 1.0)?, rho: rd.get_or("task", "rho", 3.0)? },
                other => BoundCheck::Sandwich(Theorem::parse(other).ok_or_else(|| Error::ConfigParse {
                    line: e.line,
                    column: e.column,
                    message: format!("unknown theorem `{other}` (ret, pot, green, exit, sup)"),
                })?),
            };
            let default_r = if matches!(check, BoundCheck::Sup { .. }) { 2.0 } else { 1.0 };
            Task::VerifyBounds { check, r: rd.get_or("task", "r", default_r)?, c_budget: rd.get_or("task", "c_budget", 1e3)? }
        }
        TaskKind::BhiConst => Task::BhiConst { r: rd.get_or("task", "r", 1.0)?, big_r: rd.get_or("task", "big_r", 2.0)? },
        TaskKind::AvgKernel => Task::AvgKernel {
            q: rd.get_or("task", "q", 0.0)?,
            r: rd.get_or("task", "r", 1.0)?,
            n: rd.get_or("task", "n", 64)?,
            paths: rd.get_or("task", "paths", 100_000)?,
        },
        TaskKind::Witness => Task::Witness { r: rd.require("task", "r")? },
    })
}

impl RunConfig {
    /// Parses and type-checks everything before any computation.
    pub fn from_args(args: &Args) -> Result<Self> {
        let mut raw = match &args.config {
            Some(p) => RawConfig::parse(&std::fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?)?,
            None => RawConfig::default(),
        };
        if let Some(t) = &args.theorem {
            raw.set(&format!("theorem={t}"), 0)?;
        }
        for (i, s) in args.set.iter().enumerate() {
            raw.set(s, i + 1)?;
        }
        let rd = Reader::new(&raw);
        let kind = match (args.task, rd.entry("task", "kind")) {
            (Some(k), _) => k,
            (None, Some(e)) => TaskKind::from_str(&e.value, true).map_err(|_| Error::ConfigParse {
                line: e.line,
                column: e.column,
                message: format!("unknown task `{}`", e.value),
            })?,
            (None, None) => return Err(rd.missing("task", "kind")),
        };
        let _ = rd.entry("task", "kind");
        let threads = match args.threads {
            Some(t) => Some(t),
            None => rd.get("", "threads")?,
        };
        let seed = match args.seed {
            Some(s) => s,
            None => rd.get_or("", "seed", 1)?,
        };
        let out = match &args.out {
            Some(o) => o.clone(),
            None => PathBuf::from(rd.get_or("", "out", "results".to_string())?),
        };
        let spec = read_spec(&rd)?;
        let scheme = read_scheme(&rd, threads)?;
        let n = rd.get_or("mc", "n", 100_000u64)?;
        let def = QuadratureConfig::default();
        let quadrature = QuadratureConfig::new(
            rd.get_or("quadrature", "rel_tol", def.rel_tol)?,
            rd.get_or("quadrature", "abs_tol", def.abs_tol)?,
            rd.get_or("quadrature", "max_subdivisions", def.max_subdivisions)?,
        );
        quadrature.validate()?;
        let task = read_task(&rd, kind, spec.d)?;
        rd.finish()?;
        Ok(RunConfig { spec, kind, task, out, seed, n, scheme, quadrature })
    }
}

/// Files to write and a one-line summary.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub files: Vec<(String, Table)>,
    pub summary: String,
    pub violated: bool,
}

fn sandwich_table(rows: &[SandwichRow]) -> Table {
    let mut t = Table::new(&["theorem", "spec", "geometry", "lower", "estimate", "stderr", "upper", "c_lower", "c_upper", "status"]);
    for r in rows {
        t.push(vec![
            r.theorem.clone().into(),
            r.spec.clone().into(),
            r.geometry.clone().into(),
            r.lower.into(),
            r.estimate.mean.into(),
            r.estimate.stderr.into(),
            r.upper.into(),
            r.c_lower.into(),
            r.c_upper.into(),
            r.status.clone().into(),
        ]);
    }
    t
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Runs the task without touching the file system.
pub fn execute(cfg: &RunConfig) -> Result<Outcome> {
    let spec = &cfg.spec;
    let (n, seed, scheme, quad) = (cfg.n, cfg.seed, &cfg.scheme, &cfg.quadrature);
    let stem = cfg.kind.file_stem();
    let mut violated = false;
    let (files, summary) = match &cfg.task {
        Task::Pruitt { radii } => {
            let mut t = Table::new(&["r", "K", "L", "sum", "h"]);
            for &r in radii {
                let p = pruitt_with(spec, r, quad)?;
                t.push(vec![r.into(), p.k.into(), p.l.into(), p.sum.into(), p.h.into()]);
            }
            let s = format!("{} radii", radii.len());
            (vec![(stem, t)], s)
        }
        Task::Psi { rhos } => {
            let mut t = Table::new(&["rho", "psi"]);
            for &rho in rhos {
                t.push(vec![rho.into(), psi_with(spec, rho, quad)?.into()]);
            }
            let s = format!("{} points", rhos.len());
            (vec![(stem, t)], s)
        }
        Task::Potential { radii } => {
            let mut t = Table::new(&["x", "U", "error", "lower", "upper"]);
            for &x in radii {
                let u = potential_kernel_fourier_with(spec, x, quad)?;
                let b = pot_bounds(spec, x)?;
                t.push(vec![x.into(), u.value.into(), u.error.into(), b.lower.into(), b.upper.into()]);
            }
            let s = format!("{} points", radii.len());
            (vec![(stem, t)], s)
        }
        Task::Indices => {
            let rep = index_relations_report(spec);
            let mut t = Table::new(&["quantity", "regime", "lower", "upper", "A", "B", "R0"]);
            for row in &rep.rows {
                match row.estimate {
                    Some(e) => t.push(vec![
                        row.quantity.into(),
                        e.regime.name().into(),
                        e.lower_index.into(),
                        e.upper_index.into(),
                        e.a_const.into(),
                        e.b_const.into(),
                        e.r0.into(),
                    ]),
                    None => t.push(vec![row.quantity.into(), Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty]),
                }
            }
            let held = rep.relations.iter().filter(|r| r.applicable && r.holds).count();
            let applicable = rep.relations.iter().filter(|r| r.applicable).count();
            (vec![(stem, t)], format!("{held}/{applicable} applicable index relations hold"))
        }
        Task::CertifyScaling { m, alpha, r_inf } => {
            let c = certify_scaling(spec, *m, *alpha, *r_inf);
            let mut t = Table::new(&["certified", "m", "alpha", "r_inf", "worst_ratio", "r1", "r2"]);
            t.push(vec![c.certified.into(), c.m.into(), c.alpha.into(), c.r_inf.into(), c.worst_ratio.into(), c.worst_pair.0.into(), c.worst_pair.1.into()]);
            (vec![(stem, t)], format!("certified = {}, worst ratio {:.6e}", c.certified, c.worst_ratio))
        }
        Task::Simulate { r, x } => {
            let e = exit_time_ball(spec, scheme, *r, x, n, seed)?;
            let b = exit_time_bounds(spec, *r)?;
            let mut t = Table::new(&["r", "x_norm", "mean", "stderr", "n", "censored", "killed", "lower", "upper"]);
            t.push(vec![(*r).into(), norm(x).into(), e.mean.into(), e.stderr.into(), e.n.into(), e.censored.into(), e.killed.into(), b.lower.into(), b.upper.into()]);
            (vec![(stem, t)], format!("E tau = {:.6e} ± {:.2e}", e.mean, e.stderr))
        }
        Task::Hitball { r, distances } => {
            let mut t = Table::new(&["x_norm", "mean", "stderr", "kill_radius", "truncation_bias", "lower", "upper"]);
            for &m in distances {
                let mut x = vec![0.0; spec.d];
                x[0] = m * r;
                let h = hit_ball_prob(spec, scheme, *r, &x, n, seed)?;
                let b = ret_bounds(spec, *r, m * r)?;
                t.push(vec![(m * r).into(), h.estimate.mean.into(), h.estimate.stderr.into(), h.kill_radius.into(), h.truncation_bias.into(), b.lower.into(), b.upper.into()]);
            }
            let s = format!("{} distances", distances.len());
            (vec![(stem, t)], s)
        }
        Task::Green { r, x, bins } => {
            let b = ShellBins::log_ball(default_green_bins(*r, norm(x))?.edges()[1], r + norm(x), *bins)?;
            let g = green_ball(spec, scheme, *r, x, &b, n, seed)?;
            let mut t = Table::new(&["inner", "outer", "density", "stderr"]);
            for i in 0..b.len() {
                t.push(vec![b.edges()[i].into(), b.edges()[i + 1].into(), g.density[i].into(), g.stderr[i].into()]);
            }
            (vec![(stem, t)], format!("E tau = {:.6e}", g.total.mean))
        }
        Task::Halfspace { x, y } => {
            let d = spec.d;
            let gap = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let rho = 0.1 * x[d - 1].min(y[d - 1]).min(gap);
            let g = green_halfspace(spec, scheme, x, y, &ShellBins::new(vec![0.0, rho])?, n, seed)?;
            let shape = halfspace_estimate(spec, x, y)?;
            let mut t = Table::new(&["estimate", "stderr", "shape", "ratio"]);
            t.push(vec![g.density[0].into(), g.stderr[0].into(), shape.into(), (g.density[0] / shape).into()]);
            (vec![(stem, t)], format!("G/shape = {:.4e}", g.density[0] / shape))
        }
        Task::VerifyBounds { check, r, c_budget } => {
            let (name, rows) = match check {
                BoundCheck::Sandwich(th) => (th.name(), theorem_rows(spec, scheme, *th, *r, n, seed, *c_budget)?),
                BoundCheck::Sup { q, rho } => ("sup", vec![sup_row(spec, scheme, *q, *r, *rho, n, seed, *c_budget)?]),
            };
            violated = rows.iter().any(SandwichRow::violated);
            let worst = rows.iter().map(SandwichRow::worst_constant).fold(1.0, f64::max);
            let s = format!("{name}: {} rows, worst constant {worst:.4e}{}", rows.len(), if violated { ", ORDERING VIOLATED" } else { "" });
            (vec![(format!("{stem}_{name}"), sandwich_table(&rows))], s)
        }
        Task::BhiConst { r, big_r } => {
            let c = bhi_constants(spec, *r, *big_r)?;
            let mut t = Table::new(&["r", "R", "c_levy", "rho_bound", "c_green", "c_exit", "c_bhi"]);
            t.push(vec![(*r).into(), (*big_r).into(), c.c_levy.into(), c.rho_bound.into(), c.c_green.into(), c.c_exit.into(), c.c_bhi.into()]);
            (vec![(stem, t)], format!("C_BHI = {:.6e}", c.c_bhi))
        }
        Task::AvgKernel { q, r, n: nodes, paths } => {
            let reg = regularization_kernel(spec, scheme, *q, *r, *nodes, *paths, seed)?;
            let mut w = Table::new(&["j", "alpha_j"]);
            for (j, a) in reg.kernel.weights.iter().enumerate() {
                w.push(vec![j.into(), (*a).into()]);
            }
            let mut p = Table::new(&["s", "pi_bar"]);
            for &(s, v) in &reg.kernel.table {
                p.push(vec![s.into(), v.into()]);
            }
            let s = format!(
                "C_reg = {:.6e}, window [{:.6e}, {:.6e}], implied c = {:.4}",
                reg.c_reg, reg.window.0, reg.window.1, reg.implied_c
            );
            (vec![(format!("{stem}_weights"), w), (format!("{stem}_density"), p)], s)
        }
        Task::Witness { r } => {
            let rep = superharmonic_witness(spec, *r, &WitnessSearch::default())?;
            let mut t = Table::new(&["x", "af"]);
            for (x, a) in rep.grid.iter().zip(&rep.af) {
                t.push(vec![(*x).into(), (*a).into()]);
            }
            let s = match rep.outcome {
                WitnessOutcome::Trivial { a, constant } => format!("trivial branch at a = {a}, constant {constant:.4e}"),
                WitnessOutcome::Found { a, b, big_r, max_af } => {
                    format!("witness a = {a}, b = {b}, R = {big_r:.6e}, max Af = {max_af:.4e}")
                }
            };
            (vec![(stem, t)], s)
        }
    };
    Ok(Outcome { files, summary: format!("{}: {summary}", cfg.kind.name()), violated })
}

#[allow(clippy::too_many_arguments)]
fn sup_row(spec: &ProcessSpec, scheme: &SimScheme, q: f64, r: f64, rho: f64, n: u64, seed: u64, c_budget: f64) -> Result<SandwichRow> {
    let ex = sup_experiment(spec, scheme, q, r, rho, n, seed)?;
    let lower = ex.coeffs.lower_coeff * ex.local_integral;
    let upper = ex.coeffs.upper_coeff * ex.full_integral;
    let f0 = ex.f0.mean;
    let ok_lower = !(lower > 0.0) || lower <= c_budget * (f0 + 3.0 * ex.f0.stderr);
    let ok_upper = f0 - 3.0 * ex.f0.stderr <= c_budget * upper;
    let status = if !(ok_lower && ok_upper) {
        "violated"
    } else if lower > 0.0 {
        "ok"
    } else {
        "degenerate"
    };
    Ok(SandwichRow {
        theorem: "sup".into(),
        spec: spec.label().into(),
        geometry: format!("q={q},r={r},rho={rho}"),
        lower: Some(lower),
        upper: Some(upper),
        c_lower: (lower > 0.0).then(|| f0 / lower),
        c_upper: Some(upper / f0),
        estimate: ex.f0,
        status: status.into(),
    })
}

fn write_all(out: &Path, files: &[(String, Table)]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out)?;
    files
        .iter()
        .map(|(stem, t)| {
            let p = out.join(format!("{stem}.csv"));
            t.write(&p)?;
            Ok(p)
        })
        .collect()
}

/// Parses `args`, runs the task, writes its files and returns the exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = RunConfig::from_args(&args).and_then(|cfg| {
        let outcome = execute(&cfg)?;
        let paths = write_all(&cfg.out, &outcome.files)?;
        Ok((outcome, paths))
    });
    match result {
        Ok((outcome, paths)) => {
            let list: Vec<String> = paths.iter().map(|p| p.display().to_string()).collect();
            println!("{} -> {}", outcome.summary, list.join(", "));
            if outcome.violated { 2 } else { 0 }
        }
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::OrderingViolated { .. }) { 2 } else { 3 }
        }
    }
}
