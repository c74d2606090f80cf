use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use quadest::cutplane::{run_traced, Config, ProblemInstance, RunResult, Status};
use quadest::harness::{run_corpus, DetailRow};
use quadest::{BoxDomain, Halfspace};

use crate::input::{self, Target};
use crate::{BenchArgs, FunctionArgs, PlotArgs, RunArgs, UnderestimateArgs};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 1;
pub const EXIT_NOT_CONVERGED: u8 = 2;

fn config(args: &RunArgs) -> Result<Config> {
    let cfg = Config {
        epsilon: args.epsilon,
        max_iterations: args.max_iters,
        time_limit: args.time_limit_ms.map(Duration::from_millis),
        seed: args.seed,
        ..Config::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

struct Problem {
    target: Target,
    instance: ProblemInstance,
}

fn problem(args: &FunctionArgs, cfg: &Config) -> Result<Problem> {
    let bounds = args.bounds.as_deref().map(input::parse_bounds).transpose()?;
    let mut target = match (&args.expr, &args.name, bounds) {
        (Some(expr), _, Some(b)) => input::inline(expr, b)?,
        (Some(_), _, None) => bail!("--expr needs --bounds"),
        (None, Some(name), b) => {
            let mut t = input::named(name)?;
            if let Some(b) = b {
                if b.dim() != t.bounds.dim() {
                    bail!("{name} has {} variables, --bounds gives {}", t.bounds.dim(), b.dim());
                }
                t.default_x0 = b.center();
                t.bounds = b;
            }
            t
        }
        (None, None, _) => bail!("give --expr or --name"),
    };
    let x0 = match &args.x0 {
        Some(s) => input::parse_point(s)?,
        None => std::mem::take(&mut target.default_x0),
    };
    let dim = target.bounds.dim();
    if x0.len() != dim {
        bail!("--x0 has {} coordinates, the function has {dim} variables", x0.len());
    }
    let constraints = match &args.constraints {
        Some(path) => input::read_constraints(path, dim)?,
        None => Vec::new(),
    };
    let instance = ProblemInstance::new(target.f.clone(), target.bounds.clone(), x0)
        .with_constraints(constraints)
        .auto_scaled(cfg)
        .context("scaling")?;
    instance.validate()?;
    Ok(Problem { target, instance })
}

fn exit_for(status: Status) -> u8 {
    match status {
        Status::Converged => EXIT_OK,
        Status::IterationLimit | Status::TimeLimit => EXIT_NOT_CONVERGED,
    }
}

#[derive(Serialize)]
struct ConstraintJson<'a> {
    normal: &'a [f64],
    offset: f64,
}

#[derive(Serialize)]
struct UnderestimateJson<'a> {
    expression: &'a str,
    bounds: Vec<[f64; 2]>,
    constraints: Vec<ConstraintJson<'a>>,
    epsilon: f64,
    #[serde(flatten)]
    result: &'a RunResult,
}

fn box_pairs(b: &BoxDomain) -> Vec<[f64; 2]> {
    b.lower().iter().zip(b.upper()).map(|(l, u)| [*l, *u]).collect()
}

fn constraint_json(hs: &[Halfspace]) -> Vec<ConstraintJson<'_>> {
    hs.iter().map(|h| ConstraintJson { normal: h.normal(), offset: h.offset() }).collect()
}

pub fn underestimate(args: &UnderestimateArgs) -> Result<u8> {
    let cfg = config(&args.run)?;
    let p = problem(&args.function, &cfg)?;
    let mut trace = args
        .trace
        .as_deref()
        .map(|path| File::create(path).map(BufWriter::new).with_context(|| format!("creating {}", path.display())))
        .transpose()?;
    let mut trace_err = None;
    let mut result = run_traced(&p.instance, &cfg, |event| {
        if let Some(w) = trace.as_mut() {
            let line = serde_json::to_string(event).expect("trace events serialize");
            if let Err(e) = writeln!(w, "{line}") {
                trace_err.get_or_insert(e);
            }
        }
    })?;
    if let Some(e) = trace_err {
        return Err(e).context("writing trace");
    }
    if let Some(mut w) = trace {
        w.flush().context("writing trace")?;
    }
    if args.no_timing {
        result.wall_time = Duration::ZERO;
    }
    let json = UnderestimateJson {
        expression: &p.target.expression,
        bounds: box_pairs(&p.instance.bounds),
        constraints: constraint_json(&p.instance.constraints),
        epsilon: cfg.epsilon,
        result: &result,
    };
    let mut out = output(args.out.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &json)?;
    writeln!(out)?;
    out.flush()?;
    if result.status != Status::Converged {
        eprintln!("not converged ({:?}); lower bound {:.3e}", result.status, result.lower_bound);
    }
    Ok(exit_for(result.status))
}

/// [`DetailRow`] with the construction point flattened for CSV.
#[derive(Serialize)]
struct DetailCsv<'a> {
    name: &'a str,
    dimension: usize,
    point: usize,
    x0: String,
    alpha: f64,
    metric: f64,
    cpu_ms: f64,
    vertices: usize,
    iterations: usize,
    status: Status,
    scale_factor: f64,
}

impl<'a> From<&'a DetailRow> for DetailCsv<'a> {
    fn from(d: &'a DetailRow) -> Self {
        Self {
            name: &d.name,
            dimension: d.dimension,
            point: d.point,
            x0: d.x0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";"),
            alpha: d.alpha,
            metric: d.metric,
            cpu_ms: d.cpu_ms,
            vertices: d.vertices,
            iterations: d.iterations,
            status: d.status,
            scale_factor: d.scale_factor,
        }
    }
}

pub fn bench(args: &BenchArgs) -> Result<u8> {
    let cfg = config(&args.run)?;
    let corpus = input::corpus()?;
    let mut report = run_corpus(&corpus, &cfg);
    if args.no_timing {
        for d in &mut report.details {
            d.cpu_ms = 0.0;
        }
        report.summary = quadest::harness::summarize(&report.details);
    }
    let mut w = csv::Writer::from_writer(output(args.out.as_deref())?);
    for row in &report.summary {
        w.serialize(row)?;
    }
    w.flush()?;
    if let Some(path) = &args.details {
        let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
        for d in &report.details {
            w.serialize(DetailCsv::from(d))?;
        }
        w.flush()?;
    }
    for f in &report.failures {
        eprintln!("{}: {}", f.name, f.message);
    }
    let unconverged = report.details.iter().filter(|d| d.status != Status::Converged).count();
    if unconverged > 0 {
        eprintln!("{unconverged} underestimators did not converge");
    }
    Ok(if report.failures.is_empty() { EXIT_OK } else { EXIT_INVALID })
}

pub fn plotdata(args: &PlotArgs) -> Result<u8> {
    let cfg = config(&args.run)?;
    let p = problem(&args.function, &cfg)?;
    let b = &p.instance.bounds;
    let dim = b.dim();
    if dim > 2 {
        bail!("plot data needs a 1D or 2D function, got {dim}D");
    }
    if args.points < 2 {
        bail!("--points must be at least 2");
    }
    let r = quadest::cutplane::run(&p.instance, &cfg)?;
    let constrained = !p.instance.constraints.is_empty();
    let shift = r.offset / r.scale_factor;
    let axis = |j: usize| -> Vec<f64> {
        let (lo, hi) = (b.lower()[j], b.upper()[j]);
        (0..args.points).map(|i| lo + (hi - lo) * i as f64 / (args.points - 1) as f64).collect()
    };
    let axes: Vec<Vec<f64>> = (0..dim).map(axis).collect();

    let mut w = csv::Writer::from_writer(output(args.out.as_deref())?);
    let mut header: Vec<String> = (0..dim).map(|j| format!("x{j}")).collect();
    header.extend(["f", "linear", "q"].map(String::from));
    if constrained {
        header.extend(["feasible", "sign"].map(String::from));
    }
    w.write_record(&header)?;
    let mut write_point = |x: &[f64]| -> Result<()> {
        let f = p.instance.f.eval(x)?;
        let q = r.quadratic.eval(x) + shift;
        let mut rec: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        rec.extend([f, r.quadratic.linear(x), q].map(|v| v.to_string()));
        if constrained {
            let tol = 1e-9;
            let feasible = p.instance.constraints.iter().all(|h| h.eval(x) <= tol * (1.0 + h.norm()));
            rec.push(u8::from(feasible).to_string());
            rec.push(if f - q >= 0.0 { "1" } else { "-1" }.to_string());
        }
        w.write_record(&rec)?;
        Ok(())
    };
    if dim == 1 {
        for &x in &axes[0] {
            write_point(&[x])?;
        }
    } else {
        for &y in &axes[1] {
            for &x in &axes[0] {
                write_point(&[x, y])?;
            }
        }
    }
    w.flush()?;
    Ok(exit_for(r.status))
}
