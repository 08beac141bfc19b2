//! Separate optimization: reweighted power minimization for the RAN and the
//! closed-form clone allocation for a fixed time split.

use serde::{Deserialize, Serialize};

use super::common::{
    active_ues, cs_denominators, deliverable_rates, initial_beamformers, operating_rates,
    ran_infeasible, settle_clusters, solve_step, AlgorithmOptions, RanSolution, StepOutcome,
};
use crate::cloud::{solve_p1, CloudAllocation};
use crate::conic::{build_power_min_socp, FronthaulData, PowerMinSpec};
use crate::error::{Error, Result};
use crate::ran::{fronthaul_weights, min_rate_requirement, rates, FronthaulWeights, RateBudget};
use crate::ran::{BeamformerSet, EnergyBreakdown};
use crate::scenario::{ChannelState, SystemConfig, Task};

fn transmit_floors(tasks: &[Task], budgets: &[f64]) -> Result<Vec<f64>> {
    tasks
        .iter()
        .zip(budgets)
        .map(|(t, &b)| min_rate_requirement(t.result_bits, RateBudget::Transmit { budget: b }))
        .collect()
}

/// Reweighted power minimization: each UE must deliver D_i within
/// `transmit_budget[i]` seconds.
pub fn algorithm1_separate_ran(
    config: &SystemConfig,
    tasks: &[Task],
    ch: &ChannelState,
    transmit_budget: &[f64],
    opts: &AlgorithmOptions,
) -> Result<RanSolution> {
    let (n, l) = (ch.num_ue(), ch.num_rrh());
    if tasks.len() != n || transmit_budget.len() != n {
        return Err(Error::Dimension(
            "one task and one transmit budget per UE".into(),
        ));
    }
    let floors = transmit_floors(tasks, transmit_budget)?;
    let margined: Vec<f64> = floors
        .iter()
        .map(|f| f * (1.0 + opts.floor_margin))
        .collect();
    let active = active_ues(tasks);

    let mut bf = initial_beamformers(config, ch, &active);
    let mut rho = FronthaulWeights::inactive(n, l);
    let mut frozen = vec![0.0; n];
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    if active.iter().any(|&a| a) {
        for m in 1..=opts.max_iter {
            iterations = m;
            let denom = cs_denominators(config, ch, &bf.user_powers(), &floors);
            let weights: Vec<f64> = (0..n)
                .map(|i| config.tradeoff[i] * tasks[i].result_bits / denom[i])
                .collect();
            let step = |fronthaul: bool| -> Result<StepOutcome> {
                let socp = build_power_min_socp(&PowerMinSpec {
                    channels: ch,
                    rate_floors: &margined,
                    bandwidth: &config.bandwidth,
                    power_limits: &config.rrh_power_limit,
                    fronthaul: fronthaul.then_some(FronthaulData {
                        weights: &rho,
                        rates: &frozen,
                        limits: &config.fronthaul_limit,
                    }),
                    weights: &weights,
                    support: None,
                })?;
                solve_step(&socp, &opts.solver, m)
            };
            let mut outcome = step(rho.is_active())?;
            if rho.is_active() && matches!(outcome, StepOutcome::Infeasible) {
                outcome = step(false)?;
            }
            let (next, objective) = match outcome {
                StepOutcome::Solved(v, obj) => (v, obj),
                StepOutcome::Infeasible => {
                    return Err(ran_infeasible(config, ch, &floors, opts, m))
                }
            };
            bf = next;
            let achievable = rates(config, ch, &bf)?;
            frozen = deliverable_rates(config, &bf, &achievable, &floors, opts.cluster_threshold);
            rho = fronthaul_weights(&bf, config.stability_epsilon)?;
            let done = trace
                .last()
                .is_some_and(|&prev: &f64| (objective - prev).abs() <= opts.tol * objective.abs());
            trace.push(objective);
            if done {
                converged = true;
                break;
            }
        }
    } else {
        converged = true;
    }

    let (bf, clusters, caps) =
        settle_clusters(config, ch, &bf, &floors, opts, iterations, |mask| {
            let socp = build_power_min_socp(&PowerMinSpec {
                channels: ch,
                rate_floors: &margined,
                bandwidth: &config.bandwidth,
                power_limits: &config.rrh_power_limit,
                fronthaul: None,
                weights: &vec![1.0; n],
                support: Some(mask),
            })?;
            Ok(match solve_step(&socp, &opts.solver, iterations)? {
                StepOutcome::Solved(v, _) => Some(v),
                StepOutcome::Infeasible => None,
            })
        })?;
    let rates = operating_rates(&caps, &floors, &clusters, &config.fronthaul_limit)?;
    Ok(RanSolution {
        powers: bf.user_powers(),
        beamformers: bf,
        rates,
        achievable_rates: caps,
        rate_floors: floors,
        clusters,
        trace,
        iterations,
        converged,
    })
}

/// Energy and allocations of the separate baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparateSolution {
    pub alpha: f64,
    pub ran: RanSolution,
    pub cloud: Vec<CloudAllocation>,
    pub energy: EnergyBreakdown,
}

impl SeparateSolution {
    pub fn beamformers(&self) -> &BeamformerSet {
        &self.ran.beamformers
    }
}

/// Fraction `alpha` of each deadline for transmission, the rest for the clone.
pub fn separate_baseline(
    config: &SystemConfig,
    tasks: &[Task],
    ch: &ChannelState,
    alpha: f64,
    opts: &AlgorithmOptions,
) -> Result<SeparateSolution> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!(
            "split fraction must lie in (0, 1), got {alpha}"
        )));
    }
    let cloud_deadlines: Vec<f64> = tasks.iter().map(|t| (1.0 - alpha) * t.deadline).collect();
    let cloud = solve_p1(config, tasks, &cloud_deadlines)?;
    let budgets: Vec<f64> = tasks.iter().map(|t| alpha * t.deadline).collect();
    let ran = algorithm1_separate_ran(config, tasks, ch, &budgets, opts)?;
    let energy = EnergyBreakdown::from_powers(config, tasks, &cloud, &ran.powers, &ran.rates)?;
    Ok(SeparateSolution {
        alpha,
        ran,
        cloud,
        energy,
    })
}
