//! Command-line interface.

use std::io::Write;
use std::path::{Path, PathBuf};

use branchim_core::arrivals::ArrivalProcess;
use branchim_core::limits::limit_descriptor;
use branchim_core::rng::{lane_stream, Lane};
use branchim_core::simulator::{default_w_horizon, sample_w, SimLimits};
use branchim_core::spectral::{perron, MeanMatrix};
use branchim_core::stats::MeanSe;
use branchim_core::transient::{TransientVariant, TwoTypeParams};
use clap::{Args, Parser, Subcommand};

use crate::acceptance::{descriptor_json, transient_report, Suite, DEFAULT_SEED};
use crate::config::{ExperimentConfig, Preset, Variant};
use crate::error::{Error, Result};
use crate::io::{ensure_dir, write_trajectories, CsvTable};
use crate::records::{all_pass, emit_results, Provenance, ResultRecord};
use crate::runner::{exact_mean, Runner, Simulated};

/// Overrides `--out` when the flag is absent.
pub const OUT_DIR_ENV: &str = "BRANCHIM_OUT_DIR";

const TRAJECTORY_FILE: &str = "trajectories.csv";

#[derive(Debug, Parser)]
#[command(name = "branchim", version, about = "Multitype branching processes with immigration")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate trajectories and check sample means against exact means.
    Simulate(RunArgs),
    /// Compare empirical Laplace transforms with exact ones.
    Lt(RunArgs),
    /// Report the limit regime and check normalized means.
    Limits(RunArgs),
    /// Transient mean of type 1 for an alternating two-type model.
    Transient(RunArgs),
    /// Run the acceptance suite, or every check of one config.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Overrides {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replicates: Option<u64>,
    /// Output directory.
    #[arg(long, env = OUT_DIR_ENV)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// paper-literal or renewal-consistent.
    #[arg(long)]
    pub variant: Option<Variant>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Acceptance criteria to run (default: all).
    #[arg(long, value_delimiter = ',')]
    pub criterion: Vec<u32>,
    #[command(flatten)]
    pub overrides: Overrides,
}

/// Runs one command, printing progress to `log`. Returns whether every
/// declared tolerance passed.
pub fn run(cli: Cli, log: &mut dyn Write) -> Result<bool> {
    match cli.command {
        Command::Simulate(a) => simulate(&a, log),
        Command::Lt(a) => lt(&a, log),
        Command::Limits(a) => limits(&a, log),
        Command::Transient(a) => transient(&a, log),
        Command::Verify(a) => match &a.config {
            Some(path) => verify_config(path, &a.overrides, log),
            None => verify_suite(&a, log),
        },
    }
}

fn load(path: &Path, o: &Overrides) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = o.seed {
        cfg.seed = seed;
    }
    if let Some(r) = o.replicates {
        cfg.replicates = r;
    }
    if let Some(w) = o.workers {
        cfg.workers = Some(w);
    }
    if let Some(v) = o.variant {
        cfg.variant = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(o: &Overrides, cfg: Option<&ExperimentConfig>, fallback: &str) -> PathBuf {
    o.out
        .clone()
        .or_else(|| cfg.and_then(|c| c.output.dir.clone()))
        .unwrap_or_else(|| Path::new("out").join(fallback))
}

fn log_line(log: &mut dyn Write, line: impl AsRef<str>) -> Result<()> {
    writeln!(log, "{}", line.as_ref()).map_err(|e| Error::io("<stdout>", e))
}

/// Writes the records and tables, then prints a verdict.
fn finish(records: &[ResultRecord], tables: &[CsvTable], dir: &Path, log: &mut dyn Write) -> Result<bool> {
    emit_results(records, tables, dir)?;
    let judged = records.iter().filter(|r| r.pass.is_some()).count();
    let failed: Vec<_> = records.iter().filter(|r| !r.ok()).collect();
    for r in &failed {
        log_line(log, format!("FAIL {}", r.describe()))?;
    }
    let pass = all_pass(records);
    log_line(
        log,
        format!(
            "{} {}/{judged} checks passed; results in {}",
            if pass { "PASS" } else { "FAIL" },
            judged - failed.len(),
            dir.display()
        ),
    )?;
    Ok(pass)
}

fn setup(args: &RunArgs) -> Result<(ExperimentConfig, Runner, PathBuf)> {
    let cfg = load(&args.config, &args.overrides)?;
    let runner = Runner::new(cfg.workers)?;
    let dir = out_dir(&args.overrides, Some(&cfg), &cfg.id);
    Ok((cfg, runner, dir))
}

fn simulate(args: &RunArgs, log: &mut dyn Write) -> Result<bool> {
    let (cfg, runner, dir) = setup(args)?;
    let sim = Simulated::run(&cfg, &runner)?;
    let (records, means) = sim.mean_checks(&cfg)?;
    ensure_dir(&dir)?;
    write_trajectories(&dir.join(TRAJECTORY_FILE), sim.model.k(), &sim.paths)?;
    finish(&records, &[means], &dir, log)
}

fn lt(args: &RunArgs, log: &mut dyn Write) -> Result<bool> {
    let (cfg, runner, dir) = setup(args)?;
    if cfg.lt.s.is_empty() {
        return Err(Error::Config("lt needs at least one argument in [lt] s".into()));
    }
    let sim = Simulated::run(&cfg, &runner)?;
    let (records, table) = sim.lt_checks(&cfg)?;
    finish(&records, &[table], &dir, log)
}

fn limits(args: &RunArgs, log: &mut dyn Write) -> Result<bool> {
    let (cfg, runner, dir) = setup(args)?;
    let process = cfg
        .build_arrivals()?
        .ok_or_else(|| Error::Config("limits need an arrival process".into()))?;
    let model = cfg.build_model()?;
    let a = MeanMatrix::build(&model)?;
    let p = perron(&a)?;
    let prov = Provenance::new(Some(cfg.seed), Some(cfg.replicates));
    let id = cfg.id.as_str();
    let mut records = Vec::new();

    // E[W] only enters the Polya limit with ρ = aλ; estimate it whenever it
    // might be needed.
    let e_w = match process {
        ArrivalProcess::Gpp(_) if p.rho > 0.0 => {
            let t_big = default_w_horizon(p.rho);
            let w = runner.map(cfg.replicates, |r| {
                let mut rng = lane_stream(cfg.seed, r, Lane::Auxiliary);
                Ok(sample_w(&model, &p, t_big, SimLimits::default(), &mut rng)?.value)
            })?;
            let acc: MeanSe = w.into_iter().collect();
            records.push(ResultRecord::report(id, "E[W]", &prov, Some(p.u[0]), Some(acc.mean())));
            acc.mean()
        }
        _ => 1.0,
    };
    let d = limit_descriptor(&model, &a, &p, &process, e_w)?;
    log_line(log, format!("limit: {}", descriptor_json(&d)))?;
    records.push(
        ResultRecord::report(id, "limit descriptor", &prov, None, None)
            .with_detail("rho", p.rho)
            .with_detail("descriptor", descriptor_json(&d)),
    );

    let sim = Simulated::run(&cfg, &runner)?;
    let limit_mean = d.mean();
    let mut table = CsvTable::new(
        "limits",
        ["t", "type", "normalization", "analytic", "empirical", "se", "limit_mean"],
    );
    for (g, &t) in sim.grid.times().iter().enumerate() {
        let inv = d.normalization.inverse(t);
        let exact = exact_mean(&sim.model, sim.process.as_ref(), &sim.init, t)?;
        for (j, want) in exact.iter().enumerate() {
            let acc: MeanSe = sim.paths.iter().map(|x| x.at(g)[j] as f64 * inv).collect();
            let se = (acc.count() >= 2).then(|| acc.se());
            records.push(ResultRecord::se_band(
                id,
                &format!("normalized mean N_{}(t={t})", j + 1),
                &prov,
                want * inv,
                acc.mean(),
                se,
                cfg.tolerances.se_band,
            ));
            let lm = limit_mean.as_ref().map_or(f64::NAN, |m| m[j]);
            table.push(vec![t, (j + 1) as f64, 1.0 / inv, want * inv, acc.mean(), acc.se(), lm]);
        }
    }
    finish(&records, &[table], &dir, log)
}

fn transient(args: &RunArgs, log: &mut dyn Write) -> Result<bool> {
    let (cfg, runner, dir) = setup(args)?;
    if cfg.model.preset != Some(Preset::Alternating) {
        return Err(Error::Config("transient needs the alternating preset".into()));
    }
    let [mu1, mu2, p12, p21] = cfg.model.params[..] else {
        return Err(Error::Config("alternating needs params = [mu1, mu2, p12, p21]".into()));
    };
    let params = TwoTypeParams::new(mu1, mu2, p12, p21)?;
    let sim = Simulated::run(&cfg, &runner)?;
    let process = sim
        .process
        .as_ref()
        .ok_or_else(|| Error::Config("transient needs an arrival process".into()))?;
    if sim.init.iter().any(|&n| n != 0) {
        return Err(Error::Config("transient starts from an empty population".into()));
    }
    let a = MeanMatrix::build(&sim.model)?;
    let prov = Provenance::new(Some(cfg.seed), Some(cfg.replicates));
    let variant: TransientVariant = cfg.variant.into();
    let (records, table) = transient_report(&cfg.id, &prov, &params, process, &a, &sim.grid, &sim.paths, variant)?;
    finish(&records, &[table], &dir, log)
}

fn verify_config(path: &Path, o: &Overrides, log: &mut dyn Write) -> Result<bool> {
    let cfg = load(path, o)?;
    let runner = Runner::new(cfg.workers)?;
    let dir = out_dir(o, Some(&cfg), &cfg.id);
    let out = crate::runner::run_experiment_with(&cfg, &runner)?;
    if !out.trajectories.is_empty() {
        ensure_dir(&dir)?;
        write_trajectories(&dir.join(TRAJECTORY_FILE), cfg.build_model()?.k(), &out.trajectories)?;
    }
    finish(&out.records, &out.tables, &dir, log)
}

fn verify_suite(args: &VerifyArgs, log: &mut dyn Write) -> Result<bool> {
    let o = &args.overrides;
    if o.workers == Some(0) {
        return Err(Error::Config("workers must be positive".into()));
    }
    let seed = o.seed.unwrap_or(DEFAULT_SEED);
    let variant = o.variant.unwrap_or_default().into();
    let suite = Suite::new(seed, Runner::new(o.workers)?)
        .with_replicates(o.replicates)
        .with_variant(variant);
    let ids: Vec<u32> = if args.criterion.is_empty() {
        crate::acceptance::CRITERIA.iter().map(|(i, _)| *i).collect()
    } else {
        args.criterion.clone()
    };
    let prov = Provenance::new(Some(seed), o.replicates);
    let mut records = Vec::new();
    let mut tables = Vec::new();
    for id in ids {
        let outcome = suite.run(id)?;
        log_line(log, outcome.line())?;
        records.push(outcome.summary(&prov));
        records.extend(outcome.records.iter().cloned());
        for mut t in outcome.tables {
            t.name = format!("criterion-{id:02}-{}", t.name);
            tables.push(t);
        }
    }
    let dir = out_dir(o, None, "acceptance");
    finish(&records, &tables, &dir, log)
}
