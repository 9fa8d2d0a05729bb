//! Subcommands of the `hullcube` binary. Artifacts carry no timings so reruns are byte-identical.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use hullcube::hhs::{validate_instance, HHSInstance, ValidationReport};
use hullcube::model::{stabler_pipeline, Diagram, FaceCheck};

use crate::config::{load_instance, InputError, RunConfig, SweepSpec};
use crate::suites::{diagram_sweep, run_suite, SuiteReport, SUITES};

pub const VERIFY_FORMAT: &str = "hullcube/verify/v1";

#[derive(Debug, Parser)]
#[command(name = "hullcube", version, about = "Cube-complex models of hulls: generation, pipeline runs and verification suites")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Emit an instance document from the config's generator.
    Gen(Common),
    /// Run the stability pipeline for F ⊆ F′ and emit the diagram bundle.
    Build(Common),
    /// Run a named suite, or check an instance and its diagram.
    Verify(Common),
    /// Separation sweep of the deletion diagram, as CSV.
    Sweep(Common),
    /// Write the diagram for F ⊆ F′ as DOT.
    ExportDot(Common),
}

#[derive(Debug, Args, Default)]
pub struct Common {
    #[arg(long)]
    pub instance: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Suite name, or `all`.
    #[arg(long)]
    pub suite: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

/// Exit status for an error: 2 when the input was unusable, 1 otherwise.
pub fn error_status(e: &anyhow::Error) -> u8 {
    let input = e.chain().any(|c| {
        c.downcast_ref::<InputError>().is_some()
            || matches!(
                c.downcast_ref::<hullcube::Error>(),
                Some(hullcube::Error::Format(_) | hullcube::Error::Argument(_) | hullcube::Error::Configuration(_))
            )
    });
    if input {
        2
    } else {
        1
    }
}

struct Ctx {
    cfg: RunConfig,
    seed: u64,
    jobs: usize,
    out: Option<PathBuf>,
}

impl Ctx {
    fn new(c: &Common) -> Result<Self> {
        let mut cfg = match &c.config {
            Some(p) => RunConfig::from_json(&read(p)?, &p.display().to_string())?,
            None => RunConfig::default(),
        };
        if let Some(s) = &c.suite {
            cfg.suite = Some(s.clone());
            cfg.validate("--suite")?;
        }
        let jobs = match c.jobs {
            Some(0) => Err(InputError {
                source_name: "--jobs".into(),
                path: ".".into(),
                message: "must be positive".into(),
            })?,
            Some(j) => j,
            None => std::thread::available_parallelism().map_or(1, |n| n.get()),
        };
        Ok(Ctx {
            seed: c.seed.or(cfg.seed).unwrap_or(0),
            cfg,
            jobs,
            out: c.out.clone(),
        })
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    fn instance(&self, c: &Common) -> Result<HHSInstance> {
        let p = c.instance.as_ref().ok_or_else(|| InputError {
            source_name: "--instance".into(),
            path: ".".into(),
            message: "this command needs an instance document".into(),
        })?;
        Ok(load_instance(&read(p)?, &p.display().to_string())?)
    }

    /// F and F′ from the config, with seeded random points filling whatever is absent.
    fn sets(&self, inst: &HHSInstance) -> (Vec<usize>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let all: Vec<usize> = (0..inst.ambient.n()).collect();
        let f = self.cfg.f.clone().unwrap_or_else(|| all.choose_multiple(&mut rng, 3.min(all.len())).copied().collect());
        let f2 = self.cfg.f2.clone().unwrap_or_else(|| {
            let mut f2 = f.clone();
            if let Some(&x) = all.iter().filter(|x| !f.contains(x)).collect::<Vec<_>>().choose(&mut rng) {
                f2.push(*x);
            }
            f2
        });
        (f, f2)
    }

    fn diagram(&self, inst: &HHSInstance) -> Result<Diagram> {
        let (f, f2) = self.sets(inst);
        stabler_pipeline(inst, &f, &f2, &self.cfg.model_params()).with_context(|| format!("pipeline for F = {f:?}, F′ = {f2:?}"))
    }
}

fn read(p: &Path) -> Result<String> {
    fs::read_to_string(p).map_err(|e| {
        InputError {
            source_name: p.display().to_string(),
            path: ".".into(),
            message: e.to_string(),
        }
        .into()
    })
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Gen(c) => gen(c),
        Command::Build(c) => build(c),
        Command::Verify(c) => verify(c),
        Command::Sweep(c) => sweep(c),
        Command::ExportDot(c) => export_dot(c),
    }
}

fn gen(c: &Common) -> Result<Outcome> {
    let ctx = Ctx::new(c)?;
    let g = ctx.cfg.generator.as_ref().ok_or_else(|| InputError {
        source_name: "config".into(),
        path: "generator".into(),
        message: "gen needs a generator".into(),
    })?;
    let inst = g.build(ctx.seed, ctx.cfg.constants.unwrap_or_default())?;
    ctx.emit(&(inst.to_json() + "\n"))?;
    Ok(Outcome::Pass)
}

fn build(c: &Common) -> Result<Outcome> {
    let ctx = Ctx::new(c)?;
    let inst = ctx.instance(c)?;
    let d = ctx.diagram(&inst)?;
    ctx.emit(&(d.to_json() + "\n"))?;
    match d.verify(ctx.cfg.face_bound) {
        Ok(()) => Ok(Outcome::Pass),
        Err(e) => {
            eprintln!("{e}");
            Ok(Outcome::Fail)
        }
    }
}

#[derive(Serialize)]
struct InstanceReport<'a> {
    format: &'static str,
    seed: u64,
    pass: bool,
    validation: &'a ValidationReport,
    f: &'a [usize],
    f2: &'a [usize],
    face_bound: u64,
    deleted: (usize, usize),
    checks: &'a [FaceCheck],
    failures: Vec<String>,
}

fn verify(c: &Common) -> Result<Outcome> {
    let ctx = Ctx::new(c)?;
    if let Some(suite) = &ctx.cfg.suite {
        let names: Vec<&str> = if suite == "all" {
            SUITES.iter().map(|s| s.0).collect()
        } else {
            vec![suite.as_str()]
        };
        let mut reports: Vec<SuiteReport> = Vec::new();
        for name in names {
            let r = run_suite(name, ctx.seed, ctx.jobs)?;
            eprintln!("{}", r.line());
            reports.push(r);
        }
        let pass = reports.iter().all(|r| r.pass);
        let text = if reports.len() == 1 {
            serde_json::to_string_pretty(&reports[0])?
        } else {
            serde_json::to_string_pretty(&reports)?
        };
        ctx.emit(&(text + "\n"))?;
        return Ok(if pass { Outcome::Pass } else { Outcome::Fail });
    }
    let inst = ctx.instance(c)?;
    let validation = validate_instance(&inst);
    let mut failures: Vec<String> = validation
        .violations
        .iter()
        .map(|v| format!("instance {:?}: {} (witness {:?})", v.check, v.detail, v.witness))
        .collect();
    let d = ctx.diagram(&inst)?;
    failures.extend(
        d.checks
            .iter()
            .filter(|ch| !ch.pass(ctx.cfg.face_bound))
            .map(|ch| format!("face {}: value {} (witness {:?})", ch.name, ch.value, ch.witness)),
    );
    let report = InstanceReport {
        format: VERIFY_FORMAT,
        seed: ctx.seed,
        pass: failures.is_empty(),
        validation: &validation,
        f: &d.f,
        f2: &d.f2,
        face_bound: ctx.cfg.face_bound,
        deleted: d.n_deleted(),
        checks: &d.checks,
        failures,
    };
    for f in &report.failures {
        eprintln!("{f}");
    }
    ctx.emit(&(serde_json::to_string_pretty(&report)? + "\n"))?;
    Ok(if report.pass { Outcome::Pass } else { Outcome::Fail })
}

pub const SWEEP_HEADER: &str = "generator,separation,f,x_new,deleted,deleted_prime,theta_convex,left_square,exact_ok,face_error,unstable_components,unstable_diameter";

fn sweep(c: &Common) -> Result<Outcome> {
    let ctx = Ctx::new(c)?;
    let spec = ctx.cfg.sweep.clone().unwrap_or_else(SweepSpec::default);
    let seps: Vec<u64> = (spec.separations[0]..=spec.separations[1]).collect();
    let rows = diagram_sweep(ctx.seed, ctx.jobs, &seps, spec.repeats, Some(&spec.generator))?;
    let mut csv = String::from(SWEEP_HEADER);
    csv.push('\n');
    let mut pass = true;
    for r in &rows {
        pass &= r.theta_convex && r.exact_ok && r.left_square == 0 && r.face_error <= ctx.cfg.face_bound;
        let f: Vec<String> = r.f.iter().map(|x| x.to_string()).collect();
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.generator,
            r.separation,
            f.join(";"),
            r.x_new,
            r.eta,
            r.eta_prime,
            r.theta_convex,
            r.left_square,
            r.exact_ok,
            r.face_error,
            r.unstable_components,
            r.unstable_diameter
        ));
    }
    ctx.emit(&csv)?;
    Ok(if pass { Outcome::Pass } else { Outcome::Fail })
}

fn export_dot(c: &Common) -> Result<Outcome> {
    let ctx = Ctx::new(c)?;
    let inst = ctx.instance(c)?;
    ctx.emit(&ctx.diagram(&inst)?.to_dot())?;
    Ok(Outcome::Pass)
}
