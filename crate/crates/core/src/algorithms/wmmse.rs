//! WMMSE kernel: MMSE receivers, per-UE MSE and the MSE weights.

use std::f64::consts::LN_2;

use num_complex::Complex64;

use crate::cloud::allocation_for_rate;
use crate::error::{Error, Result};
use crate::ran::{cross_gain, min_rate_requirement, BeamformerSet, RateBudget};
use crate::scenario::{ChannelState, SystemConfig, Task};

/// Receivers, MSEs and MSE weights of one WMMSE round.
#[derive(Debug, Clone, PartialEq)]
pub struct MseState {
    pub receivers: Vec<Complex64>,
    pub mse: Vec<f64>,
    pub weights: Vec<f64>,
}

fn received(ch: &ChannelState, bf: &BeamformerSet, i: usize) -> (Complex64, f64) {
    let all = vec![true; ch.num_rrh()];
    let own = cross_gain(ch, bf, i, i, &all);
    let total: f64 = (0..ch.num_ue())
        .map(|k| cross_gain(ch, bf, i, k, &all).norm_sqr())
        .sum();
    (own, total + ch.noise_power(i))
}

/// u_i = h_i^H v_i / (Σ_k |h_i^H v_k|² + σ_i²).
pub fn mmse_receiver(ch: &ChannelState, bf: &BeamformerSet) -> Vec<Complex64> {
    (0..ch.num_ue())
        .map(|i| {
            let (own, total) = received(ch, bf, i);
            own / total
        })
        .collect()
}

/// e_i = |u_i|² (Σ_k |h_i^H v_k|² + σ_i²) − 2 Re(u_i^* h_i^H v_i) + 1.
pub fn mse(i: usize, u: Complex64, ch: &ChannelState, bf: &BeamformerSet) -> f64 {
    let (own, total) = received(ch, bf, i);
    u.norm_sqr() * total - 2.0 * (u.conj() * own).re + 1.0
}

/// Largest MSE consistent with the joint rate floor of UE `i`, 2^(−R_min/B).
pub fn mse_ceiling(config: &SystemConfig, task: &Task, i: usize) -> Result<f64> {
    let floor = min_rate_requirement(
        task.result_bits,
        RateBudget::Joint {
            deadline: task.deadline,
            cpu_cycles: task.cpu_cycles,
            capacity_limit: config.clone_capacity_limit[i],
        },
    )
    .map_err(|e| match e {
        Error::DeadlineInfeasible {
            cloud_time,
            deadline,
            ..
        } => Error::DeadlineInfeasible {
            ue: i,
            cloud_time,
            deadline,
        },
        e => e,
    })?;
    Ok((-floor / config.bandwidth[i] * LN_2).exp())
}

fn check_mse(e: f64) -> Result<()> {
    if !(e > 0.0 && e < 1.0) {
        return Err(Error::domain(format!("MSE must lie in (0, 1), got {e}")));
    }
    Ok(())
}

/// τ_i(e) = γ_i(B_i log2(1/e)): clone energy when the rate implied by MSE `e`
/// is used for the download.
pub fn tau(e: f64, task: &Task, config: &SystemConfig, i: usize) -> Result<f64> {
    check_mse(e)?;
    let rate = -config.bandwidth[i] * e.log2();
    Ok(allocation_for_rate(config, task, i, rate)?.energy)
}

/// φ_i = dτ_i/de = κ (ν − 1) f^ν D B / (r² e ln 2) with r = B log2(1/e) and
/// f = F / (T − D/r). MSEs above the rate-floor ceiling are clamped to it.
pub fn mse_weight(e: f64, task: &Task, config: &SystemConfig, i: usize) -> Result<f64> {
    check_mse(e)?;
    let nu = config.cloud_exponent[i];
    let d = task.result_bits;
    let ceiling = mse_ceiling(config, task, i)?;
    if d == 0.0 || nu == 1.0 {
        return Ok(0.0);
    }
    let e = e.min(ceiling);
    let b = config.bandwidth[i];
    let rate = -b * e.log2();
    let f = task.cpu_cycles / (task.deadline - d / rate);
    let kappa = config.switched_capacitance[i];
    Ok(kappa * (nu - 1.0) * f.powf(nu) * d * b / (rate * rate * e * LN_2))
}

/// Receivers, MSEs and clamped weights for every UE at beamformers `bf`.
pub fn mse_state(
    config: &SystemConfig,
    tasks: &[Task],
    ch: &ChannelState,
    bf: &BeamformerSet,
) -> Result<MseState> {
    let receivers = mmse_receiver(ch, bf);
    let mse: Vec<f64> = (0..ch.num_ue())
        .map(|i| mse(i, receivers[i], ch, bf))
        .collect();
    let weights = (0..ch.num_ue())
        .map(|i| {
            if tasks[i].result_bits == 0.0 {
                return Ok(0.0);
            }
            let e = mse[i].clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
            mse_weight(e, &tasks[i], config, i)
        })
        .collect::<Result<_>>()?;
    Ok(MseState {
        receivers,
        mse,
        weights,
    })
}
