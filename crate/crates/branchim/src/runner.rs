//! Parallel replicate execution and the generic experiment.

use branchim_core::arrivals::{ArrivalProcess, GppSource, NhppSource, NoArrivals};
use branchim_core::model::BranchingModel;
use branchim_core::rng::{lane_stream, replicate_stream, Lane};
use branchim_core::simulator::{simulate_with_immigration_from, Grid, SimLimits, Trajectory};
use branchim_core::spectral::MeanMatrix;
use branchim_core::stats::MeanSe;
use branchim_core::transforms::{empirical_lt, lt_gpp, lt_nhpp, mean_with_immigration, PhiPath};
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::io::CsvTable;
use crate::records::{Provenance, ResultRecord};

/// A fixed-size worker pool. Results are always returned in replicate
/// order, so output does not depend on the number of workers.
pub struct Runner {
    pool: ThreadPool,
}

impl Runner {
    /// `None` uses one worker per available core.
    pub fn new(workers: Option<usize>) -> Result<Self> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = workers {
            b = b.num_threads(n);
        }
        let pool = b.build().map_err(|e| Error::Pool(e.to_string()))?;
        Ok(Self { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Evaluates `f(0), …, f(n − 1)` in parallel. On failure the error of
    /// the lowest failing replicate is returned.
    pub fn map<T, F>(&self, n: u64, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64) -> branchim_core::Result<T> + Sync,
    {
        let results: Vec<_> = self
            .pool
            .install(|| (0..n).into_par_iter().map(&f).collect());
        results
            .into_iter()
            .enumerate()
            .map(|(r, x)| {
                x.map_err(|source| Error::Replicate {
                    replicate: r as u64,
                    source,
                })
            })
            .collect()
    }
}

/// Simulates replicate `rep` of a configured process. Branching and
/// arrivals draw from separate lanes of the replicate's stream.
pub fn simulate_replicate(
    model: &BranchingModel,
    process: Option<&ArrivalProcess>,
    grid: &Grid,
    init: &[u64],
    seed: u64,
    rep: u64,
) -> branchim_core::Result<Trajectory> {
    let mut rng = replicate_stream(seed, rep);
    let horizon = grid.horizon();
    let limits = SimLimits::default();
    let arrivals = lane_stream(seed, rep, Lane::Arrivals);
    let path = match process {
        None => simulate_with_immigration_from(model, grid, init, &mut NoArrivals, limits, &mut rng)?,
        Some(ArrivalProcess::Nhpp(intensity)) => {
            let mut src = NhppSource::new(intensity.clone(), horizon, arrivals)?;
            simulate_with_immigration_from(model, grid, init, &mut src, limits, &mut rng)?
        }
        Some(ArrivalProcess::Gpp(params)) => {
            let mut src = GppSource::new(*params, horizon, arrivals)?;
            simulate_with_immigration_from(model, grid, init, &mut src, limits, &mut rng)?
        }
    };
    Ok(path.with_provenance(seed, rep))
}

/// Records, tables and (on request) raw paths of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub records: Vec<ResultRecord>,
    pub tables: Vec<CsvTable>,
    pub trajectories: Vec<Trajectory>,
}

/// `E[N(t)]` from `init` plus the immigration contribution.
pub fn exact_mean(
    model: &BranchingModel,
    process: Option<&ArrivalProcess>,
    init: &[u64],
    t: f64,
) -> Result<Vec<f64>> {
    let a = MeanMatrix::build_unchecked(model);
    let n: Vec<f64> = init.iter().map(|&x| x as f64).collect();
    let mut mean = a.propagate(t, &n);
    if let Some(p) = process {
        if t > 0.0 {
            for (m, x) in mean.iter_mut().zip(mean_with_immigration(&a, p, t)?) {
                *m += x;
            }
        }
    }
    Ok(mean)
}

/// `E[exp(<s, N(t)>)]` from `init` plus immigration.
pub fn exact_lt(
    model: &BranchingModel,
    process: Option<&ArrivalProcess>,
    init: &[u64],
    s: &[f64],
    t: f64,
) -> Result<f64> {
    let from_init = if t == 0.0 {
        init.iter().zip(s).map(|(&n, x)| n as f64 * x).sum::<f64>().exp()
    } else {
        let f = PhiPath::new(model, s, t)?.state(t)?;
        f.iter().zip(init).map(|(fi, &n)| fi.powi(n as i32)).product()
    };
    let imm = match process {
        None => 1.0,
        Some(_) if t == 0.0 => 1.0,
        Some(ArrivalProcess::Nhpp(i)) => lt_nhpp(model, i, s, t)?,
        Some(ArrivalProcess::Gpp(g)) => lt_gpp(model, g, s, t)?,
    };
    Ok(from_init * imm)
}

/// Simulated replicates of a configured experiment.
pub struct Simulated {
    pub model: BranchingModel,
    pub process: Option<ArrivalProcess>,
    pub init: Vec<u64>,
    pub grid: Grid,
    pub paths: Vec<Trajectory>,
}

impl Simulated {
    pub fn run(config: &ExperimentConfig, runner: &Runner) -> Result<Self> {
        config.validate()?;
        let model = config.build_model()?;
        let process = config.build_arrivals()?;
        let init = config.initial_state(model.k());
        let grid = Grid::new(config.grid.clone())?;
        let paths = runner.map(config.replicates, |rep| {
            simulate_replicate(&model, process.as_ref(), &grid, &init, config.seed, rep)
        })?;
        Ok(Self {
            model,
            process,
            init,
            grid,
            paths,
        })
    }

    /// Sample means of every type against their exact values.
    pub fn mean_checks(&self, config: &ExperimentConfig) -> Result<(Vec<ResultRecord>, CsvTable)> {
        let prov = Provenance::new(Some(config.seed), Some(config.replicates));
        let band = config.tolerances.se_band;
        let id = config.id.as_str();
        let mut records = Vec::new();
        let mut means = CsvTable::new("mean", ["t", "type", "analytic", "empirical", "se", "lower", "upper"]);
        for (g, &t) in self.grid.times().iter().enumerate() {
            let exact = exact_mean(&self.model, self.process.as_ref(), &self.init, t)?;
            for (j, &want) in exact.iter().enumerate() {
                let acc: MeanSe = self.paths.iter().map(|p| p.at(g)[j] as f64).collect();
                let se = (acc.count() >= 2).then(|| acc.se());
                records.push(ResultRecord::se_band(
                    id,
                    &format!("mean N_{}(t={t})", j + 1),
                    &prov,
                    want,
                    acc.mean(),
                    se,
                    band,
                ));
                let e = band * acc.se();
                means.push(vec![t, (j + 1) as f64, want, acc.mean(), acc.se(), acc.mean() - e, acc.mean() + e]);
            }
        }
        Ok((records, means))
    }

    /// Empirical transforms at the configured arguments against their exact
    /// values.
    pub fn lt_checks(&self, config: &ExperimentConfig) -> Result<(Vec<ResultRecord>, CsvTable)> {
        let prov = Provenance::new(Some(config.seed), Some(config.replicates));
        let band = config.tolerances.se_band;
        let id = config.id.as_str();
        let k = self.model.k();
        let mut records = Vec::new();
        let mut header = vec!["t".to_string()];
        header.extend((1..=k).map(|i| format!("s_{i}")));
        header.extend(["analytic", "empirical", "se"].map(String::from));
        let mut lts = CsvTable::new("lt", header);
        for s in &config.lt.s {
            for (g, &t) in self.grid.times().iter().enumerate() {
                let exact = exact_lt(&self.model, self.process.as_ref(), &self.init, s, t)?;
                let samples = self
                    .paths
                    .iter()
                    .map(|p| p.at(g).iter().map(|&n| n as f64).collect::<Vec<_>>());
                let (mean, se) = empirical_lt(samples, s)?;
                let se_opt = (self.paths.len() >= 2).then_some(se);
                records.push(ResultRecord::se_band(id, &format!("lt s={s:?} t={t}"), &prov, exact, mean, se_opt, band));
                let mut row = vec![t];
                row.extend(s);
                row.extend([exact, mean, se]);
                lts.push(row);
            }
        }
        Ok((records, lts))
    }
}

/// Runs the configured replicates and compares the sample means and
/// transforms at every grid time with their exact values.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let runner = Runner::new(config.workers)?;
    run_experiment_with(config, &runner)
}

pub fn run_experiment_with(config: &ExperimentConfig, runner: &Runner) -> Result<ExperimentOutput> {
    let sim = Simulated::run(config, runner)?;
    let (mut records, means) = sim.mean_checks(config)?;
    let (lt_records, lts) = sim.lt_checks(config)?;
    records.extend(lt_records);
    Ok(ExperimentOutput {
        records,
        tables: vec![means, lts],
        trajectories: if config.output.trajectories { sim.paths } else { Vec::new() },
    })
}
