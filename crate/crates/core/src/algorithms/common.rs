//! Pieces shared by the separate and joint loops: initialization, step
//! solves, cluster extraction with re-solve, and the operating-rate split.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::clusters::{extract_rrh_clusters, RrhClusters, DEFAULT_CLUSTER_THRESHOLD};
use crate::conic::{
    build_power_min_socp, solve, BeamformingSocp, PowerMinSpec, SolveStatus, SolverSettings,
};
use crate::error::{Error, Result};
use crate::ran::{rates, BeamformerSet};
use crate::scenario::{ChannelState, SystemConfig, Task};

/// Loop controls shared by both algorithms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgorithmOptions {
    /// Maximum outer iterations M.
    pub max_iter: usize,
    /// Relative convergence tolerance ε_conv.
    pub tol: f64,
    /// Cluster threshold as a fraction of P_j.
    pub cluster_threshold: f64,
    /// Rate floors are imposed as R (1 + margin) inside the subproblems.
    pub floor_margin: f64,
    pub solver: SolverSettings,
}

impl Default for AlgorithmOptions {
    fn default() -> Self {
        AlgorithmOptions {
            max_iter: 30,
            tol: 1e-4,
            cluster_threshold: DEFAULT_CLUSTER_THRESHOLD,
            floor_margin: 1e-7,
            solver: SolverSettings::default(),
        }
    }
}

/// Beamforming outcome of either algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RanSolution {
    /// Beamformers with blocks outside the clusters set to zero.
    pub beamformers: BeamformerSet,
    /// Operating rates: the rates at which results are delivered.
    pub rates: Vec<f64>,
    /// Achievable rates B log2(1 + SINR) of the returned beamformers.
    pub achievable_rates: Vec<f64>,
    pub rate_floors: Vec<f64>,
    pub clusters: RrhClusters,
    /// Per-UE transmit power p_i.
    pub powers: Vec<f64>,
    /// Objective value after each outer iteration.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

pub(crate) fn active_ues(tasks: &[Task]) -> Vec<bool> {
    tasks.iter().map(|t| t.result_bits > 0.0).collect()
}

/// Block support allowing every RRH for UEs with data and nothing otherwise.
pub(crate) fn active_support(active: &[bool], num_rrh: usize) -> Vec<bool> {
    active
        .iter()
        .flat_map(|&a| std::iter::repeat_n(a, num_rrh))
        .collect()
}

/// v_ij = sqrt(P_j / (2N)) h_ij / ‖h_ij‖ for UEs with data.
pub fn initial_beamformers(
    config: &SystemConfig,
    ch: &ChannelState,
    active: &[bool],
) -> BeamformerSet {
    let (n, l, k) = (ch.num_ue(), ch.num_rrh(), ch.antennas());
    let mut bf = BeamformerSet::zeros(n, l, k);
    for i in (0..n).filter(|&i| active[i]) {
        for j in 0..l {
            let h = ch.link(i, j);
            let norm = h.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            if norm > 0.0 {
                let s = (config.rrh_power_limit[j] / (2.0 * n as f64)).sqrt() / norm;
                for (v, hk) in bf.block_mut(i, j).iter_mut().zip(h) {
                    *v = hk * s;
                }
            }
        }
    }
    bf
}

/// L_i = B_i log2(1 + Σ_j ‖h_ij‖² p_i / σ_i²), never below the floor R_i.
pub fn cs_denominators(
    config: &SystemConfig,
    ch: &ChannelState,
    powers: &[f64],
    floors: &[f64],
) -> Vec<f64> {
    (0..ch.num_ue())
        .map(|i| {
            let g: f64 = (0..ch.num_rrh())
                .flat_map(|j| ch.link(i, j).iter())
                .map(|h| h.norm_sqr())
                .sum();
            let l = config.bandwidth[i] * (g * powers[i] / ch.noise_power(i)).ln_1p()
                / std::f64::consts::LN_2;
            l.max(floors[i]).max(f64::MIN_POSITIVE)
        })
        .collect()
}

pub(crate) enum StepOutcome {
    Solved(BeamformerSet, f64),
    Infeasible,
}

/// Solves a beamforming SOCP; stalled solves with small residuals are accepted.
pub(crate) fn solve_step(
    socp: &BeamformingSocp,
    settings: &SolverSettings,
    iteration: usize,
) -> Result<StepOutcome> {
    let report = solve(&socp.problem, settings)?;
    match report.status {
        SolveStatus::Infeasible => Ok(StepOutcome::Infeasible),
        _ if report.near_optimal(1e-6) => Ok(StepOutcome::Solved(
            socp.beamformers(&report.x),
            socp.objective_value(&report.x),
        )),
        status => Err(Error::Solver {
            iteration,
            status: status.as_str().to_string(),
        }),
    }
}

/// Which single floor cannot be met even with every other UE silent.
pub(crate) fn offending_floor(
    config: &SystemConfig,
    ch: &ChannelState,
    floors: &[f64],
    margin: f64,
    settings: &SolverSettings,
) -> Result<Option<usize>> {
    let n = ch.num_ue();
    for i in (0..n).filter(|&i| floors[i] > 0.0) {
        let mut single = vec![0.0; n];
        single[i] = floors[i] * (1.0 + margin);
        let mut weights = vec![0.0; n];
        weights[i] = 1.0;
        let socp = build_power_min_socp(&PowerMinSpec {
            channels: ch,
            rate_floors: &single,
            bandwidth: &config.bandwidth,
            power_limits: &config.rrh_power_limit,
            fronthaul: None,
            weights: &weights,
            support: None,
        })?;
        if let StepOutcome::Infeasible = solve_step(&socp, settings, 0)? {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

pub(crate) fn ran_infeasible(
    config: &SystemConfig,
    ch: &ChannelState,
    floors: &[f64],
    opts: &AlgorithmOptions,
    iteration: usize,
) -> Error {
    match offending_floor(config, ch, floors, opts.floor_margin, &opts.solver) {
        Ok(ue) => Error::RanInfeasible { ue, iteration },
        Err(e) => e,
    }
}

/// Raises operating rates from the floors towards the achievable rates,
/// max-min fairly, while every RRH keeps Σ_{i ∈ C_j} r_i <= C_j.
pub fn operating_rates(
    caps: &[f64],
    floors: &[f64],
    clusters: &RrhClusters,
    limits: &[f64],
) -> Result<Vec<f64>> {
    let n = caps.len();
    let l = limits.len();
    let active: Vec<bool> = floors.iter().map(|&f| f > 0.0).collect();
    let mut r: Vec<f64> = (0..n)
        .map(|i| if active[i] { floors[i] } else { 0.0 })
        .collect();
    let load = |r: &[f64], j: usize| -> f64 {
        (0..n)
            .filter(|&i| active[i] && clusters.serves(i, j))
            .map(|i| r[i])
            .sum()
    };
    for j in 0..l {
        let demand = load(&r, j);
        if demand > limits[j] {
            return Err(Error::FronthaulInfeasible {
                rrh: j,
                demand,
                limit: limits[j],
            });
        }
    }
    let mut open: Vec<bool> = (0..n).map(|i| active[i] && caps[i] > r[i]).collect();
    while open.iter().any(|&o| o) {
        let mut delta = f64::INFINITY;
        for i in (0..n).filter(|&i| open[i]) {
            delta = delta.min(caps[i] - r[i]);
        }
        for j in 0..l {
            let users = (0..n).filter(|&i| open[i] && clusters.serves(i, j)).count();
            if users > 0 {
                delta = delta.min((limits[j] - load(&r, j)).max(0.0) / users as f64);
            }
        }
        for i in (0..n).filter(|&i| open[i]) {
            r[i] = (r[i] + delta).min(caps[i]);
        }
        for j in 0..l {
            if limits[j] - load(&r, j) <= 1e-12 * limits[j] {
                for i in 0..n {
                    if clusters.serves(i, j) {
                        open[i] = false;
                    }
                }
            }
        }
        for i in 0..n {
            if r[i] >= caps[i] {
                open[i] = false;
            }
        }
    }
    Ok(r)
}

/// Rates deliverable over the fronthaul at the clusters of `bf`; these are
/// the rates frozen into the reweighted fronthaul constraint.
pub(crate) fn deliverable_rates(
    config: &SystemConfig,
    bf: &BeamformerSet,
    achievable: &[f64],
    floors: &[f64],
    threshold: f64,
) -> Vec<f64> {
    let (clusters, _) = extract_rrh_clusters(bf, &config.rrh_power_limit, threshold);
    let cmax = config
        .fronthaul_limit
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    operating_rates(achievable, floors, &clusters, &config.fronthaul_limit)
        .unwrap_or_else(|_| achievable.iter().map(|r| r.min(cmax)).collect())
}

/// Zeroes sub-threshold blocks and, if that breaks a floor, re-solves on the
/// cluster support with `resolve`. Returns the final beamformers, clusters
/// and achievable rates.
pub(crate) fn settle_clusters(
    config: &SystemConfig,
    ch: &ChannelState,
    bf: &BeamformerSet,
    floors: &[f64],
    opts: &AlgorithmOptions,
    iteration: usize,
    mut resolve: impl FnMut(&[bool]) -> Result<Option<BeamformerSet>>,
) -> Result<(BeamformerSet, RrhClusters, Vec<f64>)> {
    let mut current = bf.clone();
    for _ in 0..3 {
        let (clusters, zeroed) =
            extract_rrh_clusters(&current, &config.rrh_power_limit, opts.cluster_threshold);
        let caps = rates(config, ch, &zeroed)?;
        if caps.iter().zip(floors).all(|(c, f)| c >= f) {
            return Ok((zeroed, clusters, caps));
        }
        match resolve(clusters.mask())? {
            Some(next) => current = next,
            None => break,
        }
    }
    let (_, zeroed) =
        extract_rrh_clusters(&current, &config.rrh_power_limit, opts.cluster_threshold);
    let caps = rates(config, ch, &zeroed)?;
    let ue = caps.iter().zip(floors).position(|(c, f)| c < f);
    Err(Error::RanInfeasible { ue, iteration })
}

/// Phase of u, or zero for a silent receiver.
pub(crate) fn phase(u: Complex64) -> f64 {
    if u.norm() > 0.0 {
        u.arg()
    } else {
        0.0
    }
}
