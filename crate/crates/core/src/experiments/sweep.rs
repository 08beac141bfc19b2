//! Single runs and seeded parameter sweeps.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use super::records::{Method, SolutionRecord, STATUS_OPTIMAL};
use crate::algorithms::{
    algorithm2_joint, replay, separate_baseline, AlgorithmOptions, Allocation, RanSolution,
};
use crate::cloud::CloudAllocation;
use crate::error::{Error, Result};
use crate::ran::EnergyBreakdown;
use crate::scenario::{generate_channels, Scenario};

/// Relative tolerance of the replay check in `run_single`.
pub const REPLAY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    /// CPU cycles F of every task.
    F,
    /// Result bits D of every task.
    D,
    /// Deadline T_max of every task.
    Tmax,
    /// Number of UEs.
    N,
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParam::F => "F",
            SweepParam::D => "D",
            SweepParam::Tmax => "Tmax",
            SweepParam::N => "N",
        })
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "F" => Ok(SweepParam::F),
            "D" => Ok(SweepParam::D),
            "Tmax" => Ok(SweepParam::Tmax),
            "N" => Ok(SweepParam::N),
            other => Err(Error::config(
                "param",
                format!("unknown parameter `{other}`"),
            )),
        }
    }
}

/// Copy of `base` with the swept parameter set to `value`.
pub fn apply_param(base: &Scenario, param: SweepParam, value: f64) -> Result<Scenario> {
    let mut s = base.clone();
    match param {
        SweepParam::F => s.tasks.iter_mut().for_each(|t| t.cpu_cycles = value),
        SweepParam::D => s.tasks.iter_mut().for_each(|t| t.result_bits = value),
        SweepParam::Tmax => s.tasks.iter_mut().for_each(|t| t.deadline = value),
        SweepParam::N => {
            if !(value >= 1.0 && value.fract() == 0.0) {
                return Err(Error::config(
                    "grid",
                    format!("N must be a positive integer, got {value}"),
                ));
            }
            s = s.with_num_ue(value as usize);
        }
    }
    s.validate()?;
    Ok(s)
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub scenario_id: String,
    pub base: Scenario,
    pub param: SweepParam,
    pub grid: Vec<f64>,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    /// Worker threads; `None` uses the available parallelism.
    pub workers: Option<usize>,
    /// Record wall time per point.
    pub timing: bool,
    pub options: AlgorithmOptions,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::config("grid", "must not be empty"));
        }
        if self.grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::config("grid", "must be strictly increasing"));
        }
        if self.methods.is_empty() {
            return Err(Error::config("methods", "must not be empty"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "must not be empty"));
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        if seeds.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("seeds", "must be distinct"));
        }
        if self.workers == Some(0) {
            return Err(Error::config("workers", "must be at least 1"));
        }
        for &v in &self.grid {
            apply_param(&self.base, self.param, v)?;
        }
        Ok(())
    }

    /// Sweep points in output order: value, then method, then seed.
    pub fn points(&self) -> Vec<(f64, Method, u64)> {
        let mut pts = Vec::with_capacity(self.grid.len() * self.methods.len() * self.seeds.len());
        for &v in &self.grid {
            for &m in &self.methods {
                for &s in &self.seeds {
                    pts.push((v, m, s));
                }
            }
        }
        pts
    }
}

/// Outcome of one solve, before it is flattened into a record.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub ran: RanSolution,
    pub cloud: Vec<CloudAllocation>,
    pub energy: EnergyBreakdown,
}

/// Generates channels for `seed` and runs `method` on `scenario`.
pub fn solve_method(
    scenario: &Scenario,
    method: Method,
    seed: u64,
    options: &AlgorithmOptions,
) -> Result<RunOutcome> {
    let ch = generate_channels(&scenario.system, seed)?;
    let (sys, tasks) = (&scenario.system, &scenario.tasks);
    let out = match method {
        Method::Joint => {
            let j = algorithm2_joint(sys, tasks, &ch, options)?;
            RunOutcome {
                ran: j.ran,
                cloud: j.cloud,
                energy: j.energy,
            }
        }
        Method::Separate(alpha) => {
            let s = separate_baseline(sys, tasks, &ch, alpha, options)?;
            RunOutcome {
                ran: s.ran,
                cloud: s.cloud,
                energy: s.energy,
            }
        }
    };
    let v = replay(
        sys,
        tasks,
        &ch,
        &Allocation {
            beamformers: &out.ran.beamformers,
            clusters: &out.ran.clusters,
            rates: &out.ran.rates,
            rate_floors: &out.ran.rate_floors,
            cloud: &out.cloud,
        },
    )?;
    if !v.within(REPLAY_TOL) {
        return Err(Error::domain(format!("replay violation {:.3e}", v.max())));
    }
    Ok(out)
}

/// Runs one point and flattens the outcome; failures become status fields.
pub fn run_single(
    scenario_id: &str,
    scenario: &Scenario,
    method: Method,
    seed: u64,
    param: &str,
    value: f64,
    options: &AlgorithmOptions,
    timing: bool,
) -> SolutionRecord {
    let start = Instant::now();
    let result = solve_method(scenario, method, seed, options);
    let wall_ms = if timing {
        start.elapsed().as_millis() as u64
    } else {
        0
    };
    let mut rec = SolutionRecord {
        scenario: scenario_id.to_string(),
        seed,
        method,
        param: param.to_string(),
        value,
        energy_total_j: None,
        energy_cloud_j: None,
        energy_tx_j: None,
        rates: None,
        powers: None,
        capacities: None,
        mean_cluster_size: None,
        iterations: 0,
        converged: false,
        status: String::new(),
        wall_ms,
    };
    match result {
        Ok(out) => {
            let tasks = &scenario.tasks;
            rec.energy_total_j = Some(out.energy.total);
            rec.energy_cloud_j = Some(out.energy.cloud);
            rec.energy_tx_j = Some(out.energy.transmit);
            rec.mean_cluster_size =
                Some(out.ran.clusters.mean_size(|i| tasks[i].result_bits > 0.0));
            rec.rates = Some(out.ran.rates);
            rec.powers = Some(out.ran.powers);
            rec.capacities = Some(out.cloud.iter().map(|c| c.capacity).collect());
            rec.iterations = out.ran.iterations;
            rec.converged = out.ran.converged;
            rec.status = STATUS_OPTIMAL.to_string();
        }
        Err(e) => rec.status = e.status_tag().to_string(),
    }
    rec
}

fn run_point(spec: &SweepSpec, (value, method, seed): (f64, Method, u64)) -> SolutionRecord {
    let param = spec.param.to_string();
    match apply_param(&spec.base, spec.param, value) {
        Ok(s) => run_single(
            &spec.scenario_id,
            &s,
            method,
            seed,
            &param,
            value,
            &spec.options,
            spec.timing,
        ),
        Err(e) => SolutionRecord {
            scenario: spec.scenario_id.clone(),
            seed,
            method,
            param,
            value,
            energy_total_j: None,
            energy_cloud_j: None,
            energy_tx_j: None,
            rates: None,
            powers: None,
            capacities: None,
            mean_cluster_size: None,
            iterations: 0,
            converged: false,
            status: e.status_tag().to_string(),
            wall_ms: 0,
        },
    }
}

/// Every point of the sweep, one thread.
pub fn run_sweep_sequential(spec: &SweepSpec) -> Result<Vec<SolutionRecord>> {
    spec.validate()?;
    Ok(spec
        .points()
        .into_iter()
        .map(|p| run_point(spec, p))
        .collect())
}

/// Every point of the sweep on a pool of `spec.workers` threads. Output order
/// matches `run_sweep_sequential`.
#[cfg(feature = "parallel")]
pub fn run_sweep_parallel(spec: &SweepSpec) -> Result<Vec<SolutionRecord>> {
    use rayon::prelude::*;
    spec.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = spec.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::domain(format!("cannot start worker pool: {e}")))?;
    let points = spec.points();
    Ok(pool.install(|| points.into_par_iter().map(|p| run_point(spec, p)).collect()))
}

/// Runs the sweep in parallel when the `parallel` feature is on.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SolutionRecord>> {
    #[cfg(feature = "parallel")]
    {
        run_sweep_parallel(spec)
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_sweep_sequential(spec)
    }
}

/// Parses `a,b,c` into a list of numbers.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::config("grid", format!("bad number `{}`", t.trim())))
        })
        .collect()
}

/// Parses seeds given as `a..b` (inclusive), a comma list, or a mix.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = |t: &str| Error::config("seeds", format!("bad seed `{t}`"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim) {
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|_| bad(part))?;
            let b: u64 = b.trim().parse().map_err(|_| bad(part))?;
            if a > b {
                return Err(bad(part));
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad(part))?);
        }
    }
    Ok(out)
}
