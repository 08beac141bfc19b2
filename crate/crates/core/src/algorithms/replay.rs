//! Independent constraint replay of a finished allocation.

use serde::{Deserialize, Serialize};

use super::clusters::RrhClusters;
use crate::cloud::CloudAllocation;
use crate::error::Result;
use crate::ran::{rates, rrh_power, BeamformerSet};
use crate::scenario::{ChannelState, SystemConfig, Task};

/// Largest relative violation of each constraint family; zero when satisfied.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Violations {
    /// max_j (Σ_i ‖v_ij‖² − P_j) / P_j
    pub power: f64,
    /// Operating rate below floor or above the achievable rate, relative.
    pub rate: f64,
    /// max_j (Σ_{i ∈ C_j} r_i − C_j) / C_j
    pub fronthaul: f64,
    /// (T^C + T^Tr − T_max) / T_max, and f above f_max.
    pub deadline: f64,
}

impl Violations {
    pub fn max(&self) -> f64 {
        self.power
            .max(self.rate)
            .max(self.fronthaul)
            .max(self.deadline)
    }

    pub fn within(&self, tol: f64) -> bool {
        self.max() <= tol
    }
}

/// What a solution claims: beamformers, clusters, operating rates, floors and
/// clone allocations.
#[derive(Debug, Clone, Copy)]
pub struct Allocation<'a> {
    pub beamformers: &'a BeamformerSet,
    pub clusters: &'a RrhClusters,
    pub rates: &'a [f64],
    pub rate_floors: &'a [f64],
    pub cloud: &'a [CloudAllocation],
}

/// Recomputes rates from the channels and checks every constraint.
pub fn replay(
    config: &SystemConfig,
    tasks: &[Task],
    ch: &ChannelState,
    alloc: &Allocation,
) -> Result<Violations> {
    let bf = alloc.beamformers;
    let (n, l) = (ch.num_ue(), ch.num_rrh());
    let achievable = rates(config, ch, bf)?;
    let pos = |x: f64| x.max(0.0);

    let mut v = Violations::default();
    for j in 0..l {
        let p = config.rrh_power_limit[j];
        v.power = v.power.max(pos((rrh_power(j, bf) - p) / p));
        let load: f64 = (0..n)
            .filter(|&i| alloc.clusters.serves(i, j))
            .map(|i| alloc.rates[i])
            .sum();
        let c = config.fronthaul_limit[j];
        v.fronthaul = v.fronthaul.max(pos((load - c) / c));
    }
    for i in 0..n {
        let task = &tasks[i];
        if task.result_bits > 0.0 {
            let floor = alloc.rate_floors[i];
            v.rate = v.rate.max(pos((floor - alloc.rates[i]) / floor));
            v.rate = v
                .rate
                .max(pos((alloc.rates[i] - achievable[i]) / achievable[i]));
        }
        let tx_time = if task.result_bits > 0.0 {
            task.result_bits / alloc.rates[i]
        } else {
            0.0
        };
        let cloud_time = task.cpu_cycles / alloc.cloud[i].capacity;
        v.deadline = v
            .deadline
            .max(pos((cloud_time + tx_time - task.deadline) / task.deadline));
        let fmax = config.clone_capacity_limit[i];
        v.deadline = v.deadline.max(pos((alloc.cloud[i].capacity - fmax) / fmax));
    }
    for x in [&mut v.power, &mut v.rate, &mut v.fronthaul, &mut v.deadline] {
        if x.is_nan() {
            *x = f64::INFINITY;
        }
    }
    Ok(v)
}
