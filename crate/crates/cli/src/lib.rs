//! Batch front end: each command reads a [`RunConfig`], writes CSV/JSON under the output
//! directory and maps its outcome to an exit code.

pub mod config;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use orlicz_bounds::bounds::fmt_num;
use orlicz_bounds::extremal::{build_density, verify_increment_condition, verify_sup_identity};
use orlicz_bounds::scalar::log_grid;
use orlicz_bounds::sobolev::{standard_corpus, standard_probes, SobolevEvaluator, SobolevOptions};
use orlicz_bounds::{
    build_partition, BoundsContext, Error as CoreError, Modulus, NormKind, NormSpace, OrliczFunction, Partition, PartitionOptions,
    SolverOptions,
};
use serde_json::{json, Value};
use thiserror::Error;

pub use config::{ConfigError, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_VIOLATION: i32 = 4;
pub const EXIT_INFINITE: i32 = 10;

/// Relative slack for the inequality margin.
pub const MARGIN_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("reading {path}: {source}")]
    ReadConfig { path: String, source: io::Error },
    #[error(transparent)]
    Numeric(#[from] CoreError),
    #[error("writing output: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::ReadConfig { .. } => EXIT_CONFIG,
            CliError::Numeric(_) | CliError::Io(_) => EXIT_NUMERIC,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Reads `path` (if any), then applies `overrides` in order.
pub fn load_config(path: Option<&Path>, overrides: &[String]) -> CliResult<RunConfig> {
    let mut cfg = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|source| CliError::ReadConfig { path: p.display().to_string(), source })?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    for o in overrides {
        cfg.apply_override(o)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn space(cfg: &RunConfig) -> CliResult<NormSpace<f64>> {
    Ok(NormSpace::new(cfg.space.n, NormKind::Lp(cfg.space.norm.0), cfg.space.radius)?)
}

fn modulus(cfg: &RunConfig) -> CliResult<Modulus<f64>> {
    Ok(Modulus::power(cfg.modulus.eta.0)?)
}

fn phi(cfg: &RunConfig) -> CliResult<OrliczFunction<f64>> {
    Ok(OrliczFunction::power(cfg.phi.phi.0)?)
}

fn partition(cfg: &RunConfig, space: &NormSpace<f64>, modulus: &Modulus<f64>) -> CliResult<Partition<f64>> {
    let opts = PartitionOptions { k_max: cfg.solver.k_max, r_min: cfg.solver.r_min, ..PartitionOptions::default() };
    Ok(build_partition(space, modulus, &opts)?)
}

fn create(cfg: &RunConfig, name: &str) -> CliResult<BufWriter<File>> {
    fs::create_dir_all(&cfg.output.dir)?;
    Ok(BufWriter::new(File::create(cfg.output.dir.join(name))?))
}

fn write_json(cfg: &RunConfig, name: &str, value: &Value) -> CliResult<()> {
    let mut w = create(cfg, name)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(io::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// JSON number, or `null` when not finite.
fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

/// Runs `f` on a pool of `cfg.monte_carlo.jobs` threads (or the default pool when zero).
pub fn with_jobs<R: Send>(cfg: &RunConfig, f: impl FnOnce() -> R + Send) -> CliResult<R> {
    if cfg.monte_carlo.jobs == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.monte_carlo.jobs)
        .build()
        .map_err(|e| io::Error::other(e.to_string()))?;
    Ok(pool.install(f))
}

/// `x, φ(x), ψ(x), young_gap` on a log grid; the gap is taken at `y = φ′(x)`.
pub fn cmd_conjugate(cfg: &RunConfig) -> CliResult<i32> {
    let phi = phi(cfg)?;
    let phi = if cfg.conjugate.numeric { phi.numeric() } else { phi };
    let psi = phi.conjugate()?;
    let mut w = create(cfg, "conjugate.csv")?;
    writeln!(w, "x,phi,psi,young_gap")?;
    for x in log_grid(cfg.conjugate.x_min, cfg.conjugate.x_max, cfg.conjugate.points) {
        let gap = phi.young_gap(x, phi.derivative(x))?;
        writeln!(w, "{},{},{},{}", fmt_num(x), fmt_num(phi.eval(x)), fmt_num(psi.try_eval(x)?), fmt_num(gap))?;
    }
    w.flush()?;
    Ok(EXIT_OK)
}

pub fn cmd_partition(cfg: &RunConfig) -> CliResult<i32> {
    let (space, modulus) = (space(cfg)?, modulus(cfg)?);
    let part = partition(cfg, &space, &modulus)?;
    let mut w = create(cfg, "partition.csv")?;
    part.write_csv(&mut w)?;
    w.flush()?;
    match part.terminal_m() {
        Some(m) => println!("terminal_m = {m}"),
        None if part.truncated() => println!("truncated after {} levels", part.interior_levels()),
        None => {}
    }
    Ok(EXIT_OK)
}

pub fn cmd_bounds(cfg: &RunConfig) -> CliResult<i32> {
    let (space, modulus, phi) = (space(cfg)?, modulus(cfg)?, phi(cfg)?);
    let part = partition(cfg, &space, &modulus)?;
    let opts = SolverOptions::with_tolerances(cfg.solver.quad_tol, cfg.solver.root_tol);
    let report = with_jobs(cfg, || BoundsContext::new(&space, &modulus, &phi, &part, opts)?.total_bound())??;

    let mut w = create(cfg, "bounds.csv")?;
    report.write_csv(&mut w)?;
    w.flush()?;
    let summary = json!({
        "n": report.n,
        "norm": cfg.space.norm.to_string(),
        "radius": cfg.space.radius,
        "eta": cfg.modulus.eta.to_string(),
        "phi": cfg.phi.phi.to_string(),
        "levels": report.levels.len(),
        "terminal_m": part.terminal_m(),
        "truncated": report.truncated,
        "finite": report.finite,
        "sum": num(report.sum),
        "partial_sum": num(report.partial_sum),
        "lower_bound": num(report.lower_bound),
        "lower_constant": report.lower_constant,
        "tail_bound": num(report.tail_bound),
        "tail_ratio": report.tail_ratio.map(num),
        "max_abs_residual": num(report.levels.iter().filter(|l| l.is_finite()).fold(0.0, |m, l| m.max(l.residual.abs()))),
    });
    write_json(cfg, "bounds.json", &summary)?;
    println!("sum S_k = {}  lower bound = {}", fmt_num(report.sum), fmt_num(report.lower_bound));
    Ok(if report.finite { EXIT_OK } else { EXIT_INFINITE })
}

pub fn cmd_simulate(cfg: &RunConfig) -> CliResult<i32> {
    let (space, modulus, phi) = (space(cfg)?, modulus(cfg)?, phi(cfg)?);
    let part = partition(cfg, &space, &modulus)?;
    let opts = SolverOptions::with_tolerances(cfg.solver.quad_tol, cfg.solver.root_tol);
    let outcome = with_jobs(cfg, || -> Result<_, CoreError> {
        let ctx = BoundsContext::new(&space, &modulus, &phi, &part, opts)?;
        let mut report = ctx.total_bound()?;
        if cfg.simulate.truncate_terminal > 0.0 {
            report = ctx.truncate_terminal(&report, cfg.simulate.truncate_terminal)?;
        }
        let density = match build_density(&space, &modulus, &phi, &report) {
            Err(CoreError::InfiniteLevel { level }) => return Ok(Err(level)),
            other => other?,
        };
        let inc = verify_increment_condition(&density, cfg.monte_carlo.pairs, cfg.monte_carlo.samples, cfg.monte_carlo.seed, cfg.monte_carlo.shards)?;
        let sup = verify_sup_identity(&density, cfg.monte_carlo.grid, cfg.monte_carlo.sup_samples, cfg.monte_carlo.seed.wrapping_add(1), cfg.monte_carlo.shards)?;
        Ok(Ok((inc, sup)))
    })??;
    let (inc, sup) = match outcome {
        Ok(v) => v,
        Err(level) => {
            eprintln!("level {level} has an infinite constant; the density is undefined");
            return Ok(EXIT_INFINITE);
        }
    };
    let mut w = create(cfg, "increments.csv")?;
    inc.write_csv(&mut w)?;
    w.flush()?;
    let inc_ok = inc.holds(3.0);
    let sup_ok = sup.holds(1e-8);
    let verdict = json!({
        "target": num(sup.target),
        "mean_sup": num(sup.mean_sup),
        "max_deviation": num(sup.max_deviation),
        "grid_only_max": num(sup.grid_only_max),
        "samples": sup.samples,
        "sup_identity_holds": sup_ok,
        "increment": {
            "pairs": inc.pairs.len(),
            "samples": inc.samples,
            "max_estimate": num(inc.max_estimate),
            "max_std_error": num(inc.max_std_error),
            "max_excess_sigma": num(inc.max_excess_sigma),
            "holds": inc_ok,
        },
    });
    write_json(cfg, "sup_identity.json", &verdict)?;
    println!("max E phi = {} (se {})  sup identity deviation = {}", fmt_num(inc.max_estimate), fmt_num(inc.max_std_error), fmt_num(sup.max_deviation));
    Ok(if inc_ok && sup_ok { EXIT_OK } else { EXIT_VIOLATION })
}

/// Standard corpus × probe grid (plus the optimal pair) on the configured space and `φ`.
pub fn cmd_verify_sobolev(cfg: &RunConfig) -> CliResult<i32> {
    let (space, phi) = (space(cfg)?, phi(cfg)?);
    let psi = phi.conjugate()?;
    let sopts = SobolevOptions { grid_count: cfg.monte_carlo.grid, mc_count: cfg.monte_carlo.samples, seed: cfg.monte_carlo.seed, shards: cfg.monte_carlo.shards, ..Default::default() };
    let corpus = standard_corpus::<f64>(cfg.space.n, cfg.sobolev.corpus_seed);
    let rows = with_jobs(cfg, || -> Result<Vec<String>, CoreError> {
        let mut rows = Vec::new();
        for f in &corpus {
            let ev = SobolevEvaluator::new(&space, f, sopts)?;
            let mut probes: Vec<(f64, f64, &str)> = standard_probes().into_iter().map(|(a, b)| (a, b, "probe")).collect();
            match ev.optimal_ab(&phi) {
                Ok((a, b)) => probes.push((a, b, "optimal")),
                Err(CoreError::DivergentTerm1) => {}
                Err(e) => return Err(e),
            }
            for (a, b, kind) in probes {
                let row = match ev.check(&phi, &psi, a, b) {
                    Ok(c) => {
                        let status = if c.holds(MARGIN_TOL) { "ok" } else { "violation" };
                        format!(
                            "{},{kind},{},{},{},{},{},{},{},{},{status}",
                            f.family,
                            fmt_num(a),
                            fmt_num(b),
                            fmt_num(c.lhs),
                            fmt_num(c.term1),
                            fmt_num(c.term2),
                            fmt_num(c.rhs),
                            fmt_num(c.margin),
                            fmt_num(c.rhs_std_error)
                        )
                    }
                    Err(CoreError::DivergentTerm1) => format!(
                        "{},{kind},{},{},{},inf,,inf,inf,,divergent-term1",
                        f.family,
                        fmt_num(a),
                        fmt_num(b),
                        fmt_num(ev.lhs())
                    ),
                    Err(e) => return Err(e),
                };
                rows.push(row);
            }
        }
        Ok(rows)
    })??;
    let mut w = create(cfg, "sobolev.csv")?;
    writeln!(w, "function,kind,A,B,lhs,term1,term2,rhs,margin,stderr,status")?;
    let mut violations = 0;
    for r in &rows {
        violations += usize::from(r.ends_with(",violation"));
        writeln!(w, "{r}")?;
    }
    w.flush()?;
    println!("{} checks, {violations} violations", rows.len());
    Ok(if violations == 0 { EXIT_OK } else { EXIT_VIOLATION })
}
