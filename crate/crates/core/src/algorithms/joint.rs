//! Joint clone/RAN energy minimization by WMMSE block coordinate descent.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use super::common::{
    active_support, active_ues, cs_denominators, deliverable_rates, initial_beamformers,
    operating_rates, phase, ran_infeasible, settle_clusters, solve_step, AlgorithmOptions,
    RanSolution, StepOutcome,
};
use super::wmmse::{mse_state, MseState};
use crate::cloud::{allocation_for_rate, CloudAllocation};
use crate::conic::{build_wmmse_step_socp, FronthaulData, WmmseStepSpec};
use crate::error::{Error, Result};
use crate::ran::{
    fronthaul_load, fronthaul_weights, joint_rate_floors, rates, rrh_power, BeamformerSet,
    EnergyBreakdown, FronthaulMode, FronthaulWeights,
};
use crate::scenario::{ChannelState, SystemConfig, Task};

/// Merit E(v) = Σ γ_i(r_i(v)) + Σ η_i D_i ‖v_i‖² / r_i(v) around one transmitter step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogateStep {
    pub iteration: usize,
    /// J at the entry beamformers.
    pub before: f64,
    /// J at the accepted beamformers.
    pub after: f64,
    /// J at the raw SOCP minimizer.
    pub raw_after: f64,
    /// Whether the entry point satisfied this step's constraints.
    pub entry_feasible: bool,
    /// Accepted fraction of the step towards the SOCP minimizer.
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSolution {
    pub ran: RanSolution,
    pub cloud: Vec<CloudAllocation>,
    pub energy: EnergyBreakdown,
    /// Total energy E^(n) after each outer iteration.
    pub energy_trace: Vec<f64>,
    pub surrogate_trace: Vec<SurrogateStep>,
}

const MAX_BACKTRACK: usize = 30;
const MAX_EXPAND: usize = 8;

fn cloud_energy(config: &SystemConfig, tasks: &[Task], r: &[f64]) -> f64 {
    let mut total = 0.0;
    for (i, t) in tasks.iter().enumerate() {
        match allocation_for_rate(config, t, i, r[i]) {
            Ok(a) => total += a.energy,
            Err(_) => return f64::INFINITY,
        }
    }
    total
}

struct Merit<'a> {
    config: &'a SystemConfig,
    tasks: &'a [Task],
    ch: &'a ChannelState,
    floors: &'a [f64],
}

impl Merit<'_> {
    fn eval(&self, bf: &BeamformerSet) -> Result<f64> {
        let r = rates(self.config, self.ch, bf)?;
        if r.iter().zip(self.floors).any(|(r, f)| r < f) {
            return Ok(f64::INFINITY);
        }
        Ok(total_energy_at(self.config, self.tasks, bf, &r))
    }
}

/// Power weights η_i D_i / r_i and the extra MSE weights ∂(η_i D_i p_i / r_i)/∂e_i
/// at the current point, so the step's model has the gradient of the energy.
fn transmit_weights(
    config: &SystemConfig,
    tasks: &[Task],
    bf: &BeamformerSet,
    r: &[f64],
    state: &MseState,
    fallback: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    (0..tasks.len())
        .map(|i| {
            let scale = config.tradeoff[i] * tasks[i].result_bits;
            if scale == 0.0 || !(r[i] > 0.0) {
                return (scale / fallback[i], 0.0);
            }
            let e = state.mse[i].max(f64::MIN_POSITIVE);
            let psi = scale * bf.user_power(i) * config.bandwidth[i] / (r[i] * r[i] * e * LN_2);
            (scale / r[i], psi)
        })
        .unzip()
}

fn blend(a: &BeamformerSet, b: &BeamformerSet, t: f64) -> BeamformerSet {
    let mut out = a.clone();
    for (o, (x, y)) in out
        .as_mut_slice()
        .iter_mut()
        .zip(a.as_slice().iter().zip(b.as_slice()))
    {
        *o = x + (y - x) * t;
    }
    out
}

fn within_step_constraints(
    config: &SystemConfig,
    bf: &BeamformerSet,
    r: &[f64],
    floors: &[f64],
    fronthaul: Option<(&FronthaulWeights, &[f64])>,
) -> bool {
    let powers_ok = (0..bf.num_rrh()).all(|j| rrh_power(j, bf) <= config.rrh_power_limit[j]);
    let floors_ok = r.iter().zip(floors).all(|(r, f)| r >= f);
    let fronthaul_ok = fronthaul.is_none_or(|(w, frozen)| {
        (0..bf.num_rrh()).all(|j| {
            fronthaul_load(j, bf, frozen, FronthaulMode::Weighted(w)) <= config.fronthaul_limit[j]
        })
    });
    powers_ok && floors_ok && fronthaul_ok
}

/// Transmit energy Σ η_i p_i D_i / r_i plus clone energy at rates `r`.
fn total_energy_at(config: &SystemConfig, tasks: &[Task], bf: &BeamformerSet, r: &[f64]) -> f64 {
    let tx: f64 = (0..tasks.len())
        .filter(|&i| tasks[i].result_bits > 0.0)
        .map(|i| config.tradeoff[i] * bf.user_power(i) * tasks[i].result_bits / r[i])
        .sum();
    cloud_energy(config, tasks, r) + tx
}

struct StepInputs<'a> {
    state: &'a MseState,
    weights: &'a [f64],
    phases: &'a [f64],
    support: &'a [bool],
    fronthaul: Option<(&'a FronthaulWeights, &'a [f64])>,
}

fn wmmse_step(
    config: &SystemConfig,
    ch: &ChannelState,
    floors: &[f64],
    inputs: &StepInputs,
    opts: &AlgorithmOptions,
    iteration: usize,
) -> Result<StepOutcome> {
    let socp = build_wmmse_step_socp(&WmmseStepSpec {
        channels: ch,
        mse_weights: &inputs.state.weights,
        receivers: &inputs.state.receivers,
        energy_weights: inputs.weights,
        rate_floors: floors,
        floor_phases: inputs.phases,
        bandwidth: &config.bandwidth,
        power_limits: &config.rrh_power_limit,
        fronthaul: inputs.fronthaul.map(|(w, r)| FronthaulData {
            weights: w,
            rates: r,
            limits: &config.fronthaul_limit,
        }),
        support: Some(inputs.support),
    })?;
    solve_step(&socp, &opts.solver, iteration)
}

/// Jointly chooses beamformers, delivery rates and clone capacities so that
/// every task meets its end-to-end deadline at least total energy.
pub fn algorithm2_joint(
    config: &SystemConfig,
    tasks: &[Task],
    ch: &ChannelState,
    opts: &AlgorithmOptions,
) -> Result<JointSolution> {
    let (n, l) = (ch.num_ue(), ch.num_rrh());
    if tasks.len() != n {
        return Err(Error::Dimension("one task per UE".into()));
    }
    let floors: Vec<f64> = joint_rate_floors(config, tasks)?
        .into_iter()
        .zip(tasks)
        .map(|(f, t)| if t.result_bits > 0.0 { f } else { 0.0 })
        .collect();
    let margined: Vec<f64> = floors
        .iter()
        .map(|f| f * (1.0 + opts.floor_margin))
        .collect();
    let active = active_ues(tasks);
    let full_support = active_support(&active, l);

    let mut bf = initial_beamformers(config, ch, &active);
    let mut rho = FronthaulWeights::inactive(n, l);
    let mut frozen = vec![0.0; n];
    let mut energy_trace = Vec::new();
    let mut surrogate_trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut last: Option<(MseState, Vec<f64>, Vec<f64>)> = None;

    if active.iter().any(|&a| a) {
        for it in 1..=opts.max_iter {
            iterations = it;
            let denom = cs_denominators(config, ch, &bf.user_powers(), &floors);
            let entry_rates = rates(config, ch, &bf)?;
            let mut state = mse_state(config, tasks, ch, &bf)?;
            let (weights, psi) = transmit_weights(config, tasks, &bf, &entry_rates, &state, &denom);
            for (w, p) in state.weights.iter_mut().zip(&psi) {
                *w += p;
            }
            let phases: Vec<f64> = state.receivers.iter().map(|&u| phase(u)).collect();
            let fronthaul = rho.is_active().then_some((&rho, frozen.as_slice()));
            let mut inputs = StepInputs {
                state: &state,
                weights: &weights,
                phases: &phases,
                support: &full_support,
                fronthaul,
            };
            let mut outcome = wmmse_step(config, ch, &margined, &inputs, opts, it)?;
            if inputs.fronthaul.is_some() && matches!(outcome, StepOutcome::Infeasible) {
                inputs.fronthaul = None;
                outcome = wmmse_step(config, ch, &margined, &inputs, opts, it)?;
            }
            let raw = match outcome {
                StepOutcome::Solved(v, _) => v,
                StepOutcome::Infeasible => {
                    return Err(ran_infeasible(config, ch, &floors, opts, it))
                }
            };

            let merit = Merit {
                config,
                tasks,
                ch,
                floors: &floors,
            };
            let entry_feasible =
                within_step_constraints(config, &bf, &entry_rates, &floors, inputs.fronthaul);
            let before = merit.eval(&bf)?;
            let raw_after = merit.eval(&raw)?;
            let (accepted, step, after) = if !entry_feasible {
                (raw, 1.0, raw_after)
            } else if raw_after <= before {
                let mut best = (raw, 1.0, raw_after);
                let mut t = 2.0;
                for _ in 0..MAX_EXPAND {
                    let trial = blend(&bf, &best.0, t / best.1);
                    let j = merit.eval(&trial)?;
                    let r = rates(config, ch, &trial)?;
                    if !(j < best.2)
                        || !within_step_constraints(config, &trial, &r, &margined, inputs.fronthaul)
                    {
                        break;
                    }
                    best = (trial, t, j);
                    t *= 2.0;
                }
                best
            } else {
                let mut t = 0.5;
                let mut found = None;
                for _ in 0..MAX_BACKTRACK {
                    let trial = blend(&bf, &raw, t);
                    let j = merit.eval(&trial)?;
                    if j <= before {
                        found = Some((trial, t, j));
                        break;
                    }
                    t *= 0.5;
                }
                found.unwrap_or_else(|| (bf.clone(), 0.0, before))
            };
            surrogate_trace.push(SurrogateStep {
                iteration: it,
                before,
                after,
                raw_after,
                entry_feasible,
                step,
            });
            last = Some((state, weights, phases));

            bf = accepted;
            let achievable = rates(config, ch, &bf)?;
            frozen = deliverable_rates(config, &bf, &achievable, &floors, opts.cluster_threshold);
            rho = fronthaul_weights(&bf, config.stability_epsilon)?;
            let energy = total_energy_at(config, tasks, &bf, &frozen);
            let done = energy_trace
                .last()
                .is_some_and(|&prev: &f64| (energy - prev).abs() <= opts.tol * energy.abs());
            energy_trace.push(energy);
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
            let Some((state, weights, phases)) = &last else {
                return Ok(None);
            };
            let inputs = StepInputs {
                state,
                weights,
                phases,
                support: mask,
                fronthaul: None,
            };
            Ok(
                match wmmse_step(config, ch, &margined, &inputs, opts, iterations)? {
                    StepOutcome::Solved(v, _) => Some(v),
                    StepOutcome::Infeasible => None,
                },
            )
        })?;
    let op_rates = operating_rates(&caps, &floors, &clusters, &config.fronthaul_limit)?;
    let cloud = (0..n)
        .map(|i| allocation_for_rate(config, &tasks[i], i, op_rates[i]))
        .collect::<Result<Vec<_>>>()?;
    let powers = bf.user_powers();
    let energy = EnergyBreakdown::from_powers(config, tasks, &cloud, &powers, &op_rates)?;
    Ok(JointSolution {
        ran: RanSolution {
            beamformers: bf,
            rates: op_rates,
            achievable_rates: caps,
            rate_floors: floors,
            clusters,
            powers,
            trace: energy_trace.clone(),
            iterations,
            converged,
        },
        cloud,
        energy,
        energy_trace,
        surrogate_trace,
    })
}
