//! Downlink radio model: SINR, rates, transmit energy, RRH power and fronthaul
//! load, plus end-to-end energy accounting.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cloud::CloudAllocation;
use crate::error::{Error, Result};
use crate::scenario::{ChannelState, SystemConfig, Task};

/// Transmit vectors v_ij, same UE-major layout as [`ChannelState`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamformerSet {
    num_ue: usize,
    num_rrh: usize,
    antennas: usize,
    weights: Vec<Complex64>,
}

impl BeamformerSet {
    pub fn zeros(num_ue: usize, num_rrh: usize, antennas: usize) -> Self {
        BeamformerSet {
            num_ue,
            num_rrh,
            antennas,
            weights: vec![Complex64::new(0.0, 0.0); num_ue * num_rrh * antennas],
        }
    }

    pub fn from_vec(
        num_ue: usize,
        num_rrh: usize,
        antennas: usize,
        weights: Vec<Complex64>,
    ) -> Result<Self> {
        if weights.len() != num_ue * num_rrh * antennas {
            return Err(Error::Dimension(format!(
                "beamformer tensor has {} entries, expected {}",
                weights.len(),
                num_ue * num_rrh * antennas
            )));
        }
        if weights
            .iter()
            .any(|w| !w.re.is_finite() || !w.im.is_finite())
        {
            return Err(Error::domain("beamformer entries must be finite"));
        }
        Ok(BeamformerSet {
            num_ue,
            num_rrh,
            antennas,
            weights,
        })
    }

    pub fn num_ue(&self) -> usize {
        self.num_ue
    }

    pub fn num_rrh(&self) -> usize {
        self.num_rrh
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn block(&self, i: usize, j: usize) -> &[Complex64] {
        let k = self.antennas;
        let s = (i * self.num_rrh + j) * k;
        &self.weights[s..s + k]
    }

    pub fn block_mut(&mut self, i: usize, j: usize) -> &mut [Complex64] {
        let k = self.antennas;
        let s = (i * self.num_rrh + j) * k;
        &mut self.weights[s..s + k]
    }

    /// v_i stacked over RRHs.
    pub fn user(&self, i: usize) -> &[Complex64] {
        let w = self.num_rrh * self.antennas;
        &self.weights[i * w..(i + 1) * w]
    }

    pub fn user_mut(&mut self, i: usize) -> &mut [Complex64] {
        let w = self.num_rrh * self.antennas;
        &mut self.weights[i * w..(i + 1) * w]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.weights
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.weights
    }

    /// ‖v_ij‖².
    pub fn block_power(&self, i: usize, j: usize) -> f64 {
        self.block(i, j).iter().map(|w| w.norm_sqr()).sum()
    }

    /// p_i = Σ_j ‖v_ij‖².
    pub fn user_power(&self, i: usize) -> f64 {
        self.user(i).iter().map(|w| w.norm_sqr()).sum()
    }

    pub fn user_powers(&self) -> Vec<f64> {
        (0..self.num_ue).map(|i| self.user_power(i)).collect()
    }

    fn check_against(&self, ch: &ChannelState) -> Result<()> {
        if ch.num_ue() != self.num_ue
            || ch.num_rrh() != self.num_rrh
            || ch.antennas() != self.antennas
        {
            return Err(Error::Dimension(format!(
                "beamformers are {}x{}x{}, channels {}x{}x{}",
                self.num_ue,
                self.num_rrh,
                self.antennas,
                ch.num_ue(),
                ch.num_rrh(),
                ch.antennas()
            )));
        }
        Ok(())
    }
}

/// Set of serving RRHs as a membership mask over all RRHs.
pub type ServingSet<'a> = &'a [bool];

/// Σ_{j∈C} h_ij^H v_kj: the gain from stream `k` at receiver `i`.
pub fn cross_gain(
    ch: &ChannelState,
    bf: &BeamformerSet,
    receiver: usize,
    stream: usize,
    serving: ServingSet,
) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for j in (0..ch.num_rrh()).filter(|&j| serving[j]) {
        for (h, v) in ch.link(receiver, j).iter().zip(bf.block(stream, j)) {
            acc += h.conj() * v;
        }
    }
    acc
}

fn check_inputs(
    i: usize,
    ch: &ChannelState,
    bf: &BeamformerSet,
    serving: ServingSet,
) -> Result<()> {
    bf.check_against(ch)?;
    if i >= ch.num_ue() {
        return Err(Error::Dimension(format!("UE index {i} out of range")));
    }
    if serving.len() != ch.num_rrh() {
        return Err(Error::Dimension("serving mask must cover every RRH".into()));
    }
    Ok(())
}

/// Signal and interference-plus-noise power at UE `i`.
pub fn signal_and_interference(
    i: usize,
    ch: &ChannelState,
    bf: &BeamformerSet,
    serving: ServingSet,
) -> Result<(f64, f64)> {
    check_inputs(i, ch, bf, serving)?;
    let signal = cross_gain(ch, bf, i, i, serving).norm_sqr();
    let interference: f64 = (0..ch.num_ue())
        .filter(|&k| k != i)
        .map(|k| cross_gain(ch, bf, i, k, serving).norm_sqr())
        .sum();
    Ok((signal, interference + ch.noise_power(i)))
}

pub fn sinr(i: usize, ch: &ChannelState, bf: &BeamformerSet, serving: ServingSet) -> Result<f64> {
    let (s, n) = signal_and_interference(i, ch, bf, serving)?;
    Ok(s / n)
}

pub fn rate_from_sinr(sinr: f64, bandwidth: f64) -> Result<f64> {
    if !(bandwidth > 0.0) {
        return Err(Error::domain(format!(
            "bandwidth must be > 0, got {bandwidth}"
        )));
    }
    Ok(bandwidth * sinr.ln_1p() / std::f64::consts::LN_2)
}

/// Achievable rate B log2(1 + SINR) in bit/s.
pub fn rate(
    i: usize,
    ch: &ChannelState,
    bf: &BeamformerSet,
    serving: ServingSet,
    bandwidth: f64,
) -> Result<f64> {
    rate_from_sinr(sinr(i, ch, bf, serving)?, bandwidth)
}

/// Rates of every UE with all RRHs serving (zero blocks contribute nothing).
pub fn rates(config: &SystemConfig, ch: &ChannelState, bf: &BeamformerSet) -> Result<Vec<f64>> {
    let all = vec![true; ch.num_rrh()];
    (0..ch.num_ue())
        .map(|i| rate(i, ch, bf, &all, config.bandwidth[i]))
        .collect()
}

/// Transmission time D/r and energy p D / r of one result payload.
pub fn transmit_cost(result_bits: f64, rate: f64, power: f64) -> Result<(f64, f64)> {
    if result_bits == 0.0 {
        return Ok((0.0, 0.0));
    }
    if !(rate > 0.0) {
        return Err(Error::domain(format!(
            "{result_bits} bits cannot be delivered at rate {rate}"
        )));
    }
    let t = result_bits / rate;
    Ok((t, power * t))
}

/// Σ_i ‖v_ij‖², total transmit power of RRH `j`.
pub fn rrh_power(j: usize, bf: &BeamformerSet) -> f64 {
    (0..bf.num_ue()).map(|i| bf.block_power(i, j)).sum()
}

/// Reweighting factors ρ_ij = 1 / (‖v_ij‖² + ε).
#[derive(Debug, Clone, PartialEq)]
pub struct FronthaulWeights {
    num_rrh: usize,
    rho: Vec<f64>,
}

impl FronthaulWeights {
    /// All-zero weights: the fronthaul constraint is inactive.
    pub fn inactive(num_ue: usize, num_rrh: usize) -> Self {
        FronthaulWeights {
            num_rrh,
            rho: vec![0.0; num_ue * num_rrh],
        }
    }

    /// The same weight on every (UE, RRH) pair.
    pub fn uniform(num_ue: usize, num_rrh: usize, value: f64) -> Self {
        FronthaulWeights {
            num_rrh,
            rho: vec![value; num_ue * num_rrh],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rho[i * self.num_rrh + j]
    }

    pub fn is_active(&self) -> bool {
        self.rho.iter().any(|&r| r > 0.0)
    }
}

pub fn fronthaul_weights(bf: &BeamformerSet, epsilon: f64) -> Result<FronthaulWeights> {
    if !(epsilon > 0.0) {
        return Err(Error::domain(format!(
            "stability epsilon must be > 0, got {epsilon}"
        )));
    }
    let mut rho = Vec::with_capacity(bf.num_ue() * bf.num_rrh());
    for i in 0..bf.num_ue() {
        for j in 0..bf.num_rrh() {
            rho.push(1.0 / (bf.block_power(i, j) + epsilon));
        }
    }
    Ok(FronthaulWeights {
        num_rrh: bf.num_rrh(),
        rho,
    })
}

#[derive(Debug, Clone, Copy)]
pub enum FronthaulMode<'a> {
    /// Count rate r_i whenever ‖v_ij‖² exceeds the threshold.
    L0 { zero_threshold: f64 },
    /// Convex surrogate Σ_i ρ_ij ‖v_ij‖² r_i.
    Weighted(&'a FronthaulWeights),
}

pub fn fronthaul_load(j: usize, bf: &BeamformerSet, rates: &[f64], mode: FronthaulMode) -> f64 {
    (0..bf.num_ue())
        .map(|i| {
            let p = bf.block_power(i, j);
            match mode {
                FronthaulMode::L0 { zero_threshold } => {
                    if p > zero_threshold {
                        rates[i]
                    } else {
                        0.0
                    }
                }
                FronthaulMode::Weighted(w) => w.get(i, j) * p * rates[i],
            }
        })
        .sum()
}

/// How the minimum rate of a UE is derived.
#[derive(Debug, Clone, Copy)]
pub enum RateBudget {
    /// A fixed share of time for the downlink.
    Transmit { budget: f64 },
    /// Whatever is left of the deadline after executing at full clone capacity.
    Joint {
        deadline: f64,
        cpu_cycles: f64,
        capacity_limit: f64,
    },
}

/// Minimum rate that delivers `result_bits` within the budget.
pub fn min_rate_requirement(result_bits: f64, budget: RateBudget) -> Result<f64> {
    match budget {
        RateBudget::Transmit { budget } => {
            if !(budget > 0.0) {
                return Err(Error::domain(format!(
                    "transmit budget must be > 0, got {budget}"
                )));
            }
            Ok(result_bits / budget)
        }
        RateBudget::Joint {
            deadline,
            cpu_cycles,
            capacity_limit,
        } => {
            let cloud_time = cpu_cycles / capacity_limit;
            let slack = deadline - cloud_time;
            if !(slack > 0.0) {
                return Err(Error::DeadlineInfeasible {
                    ue: 0,
                    cloud_time,
                    deadline,
                });
            }
            Ok(result_bits / slack)
        }
    }
}

/// Joint rate floors R_i,min for every UE.
pub fn joint_rate_floors(config: &SystemConfig, tasks: &[Task]) -> Result<Vec<f64>> {
    tasks
        .iter()
        .enumerate()
        .map(|(i, t)| {
            min_rate_requirement(
                t.result_bits,
                RateBudget::Joint {
                    deadline: t.deadline,
                    cpu_cycles: t.cpu_cycles,
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
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UeEnergy {
    pub cloud: f64,
    /// Unweighted radio energy p_i D_i / r_i.
    pub transmit: f64,
    /// E_i = cloud + η_i transmit.
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub per_ue: Vec<UeEnergy>,
    pub cloud: f64,
    pub transmit: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    /// Accounts energy from per-UE transmit powers and rates.
    pub fn from_powers(
        config: &SystemConfig,
        tasks: &[Task],
        cloud: &[CloudAllocation],
        powers: &[f64],
        rates: &[f64],
    ) -> Result<Self> {
        let n = tasks.len();
        if cloud.len() != n || powers.len() != n || rates.len() != n {
            return Err(Error::Dimension(
                "energy inputs must have one entry per UE".into(),
            ));
        }
        let mut per_ue = Vec::with_capacity(n);
        for i in 0..n {
            let (_, tx) = transmit_cost(tasks[i].result_bits, rates[i], powers[i])?;
            let c = cloud[i].energy;
            per_ue.push(UeEnergy {
                cloud: c,
                transmit: tx,
                total: c + config.tradeoff[i] * tx,
            });
        }
        Ok(EnergyBreakdown {
            cloud: per_ue.iter().map(|e| e.cloud).sum(),
            transmit: per_ue.iter().map(|e| e.transmit).sum(),
            total: per_ue.iter().map(|e| e.total).sum(),
            per_ue,
        })
    }
}

/// E_i = E_i^C + η_i p_i D_i / r_i with p_i the power of UE i's beamformers.
pub fn total_energy(
    config: &SystemConfig,
    tasks: &[Task],
    cloud: &[CloudAllocation],
    bf: &BeamformerSet,
    rates: &[f64],
) -> Result<EnergyBreakdown> {
    EnergyBreakdown::from_powers(config, tasks, cloud, &bf.user_powers(), rates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn scalar_channel(h: &[Complex64], noise: f64, n: usize, l: usize, k: usize) -> ChannelState {
        ChannelState::new(n, l, k, h.to_vec(), vec![noise; n]).unwrap()
    }

    #[test]
    fn sinr_single_user() {
        let ch = scalar_channel(&[c(1.0, 0.0)], 0.1, 1, 1, 1);
        let bf = BeamformerSet::from_vec(1, 1, 1, vec![c(1.0, 0.0)]).unwrap();
        assert_relative_eq!(
            sinr(0, &ch, &bf, &[true]).unwrap(),
            10.0,
            max_relative = 1e-12
        );
        let zero = BeamformerSet::zeros(1, 1, 1);
        assert_eq!(sinr(0, &ch, &zero, &[true]).unwrap(), 0.0);
    }

    #[test]
    fn sinr_symmetric_pair() {
        // h_1 = h_2 = e_1, v_1 = v_2 = 0.5 e_1, σ² = 0.25.
        let h = [c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)];
        let ch = scalar_channel(&h, 0.25, 2, 1, 2);
        let v = vec![c(0.5, 0.0), c(0.0, 0.0), c(0.5, 0.0), c(0.0, 0.0)];
        let bf = BeamformerSet::from_vec(2, 1, 2, v).unwrap();
        assert_relative_eq!(
            sinr(0, &ch, &bf, &[true]).unwrap(),
            0.5,
            max_relative = 1e-12
        );
    }

    #[test]
    fn rate_values() {
        assert_relative_eq!(rate_from_sinr(1.0, 1e7).unwrap(), 1e7, max_relative = 1e-12);
        assert_eq!(rate_from_sinr(0.0, 1e7).unwrap(), 0.0);
        assert_relative_eq!(
            rate_from_sinr(10.0, 1e7).unwrap(),
            1e7 * 11f64.log2(),
            max_relative = 1e-12
        );
        assert!(rate_from_sinr(1.0, 0.0).is_err());
    }

    #[test]
    fn transmit_cost_values() {
        let (t, e) = transmit_cost(1000.0, 2e4, 0.01).unwrap();
        assert_relative_eq!(t, 0.05);
        assert_relative_eq!(e, 5e-4);
        assert_eq!(transmit_cost(0.0, 0.0, 3.0).unwrap(), (0.0, 0.0));
        assert!(transmit_cost(1000.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn rrh_power_values() {
        assert_eq!(rrh_power(0, &BeamformerSet::zeros(2, 1, 2)), 0.0);
        let bf = BeamformerSet::from_vec(
            2,
            1,
            2,
            vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        )
        .unwrap();
        assert_relative_eq!(rrh_power(0, &bf), 2.0);
        let bf = BeamformerSet::from_vec(1, 1, 2, vec![c(0.6, 0.0), c(0.8, 0.0)]).unwrap();
        assert_relative_eq!(rrh_power(0, &bf), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn fronthaul_weight_values() {
        let mut bf = BeamformerSet::zeros(3, 1, 1);
        bf.block_mut(1, 0)[0] = c(1e-5, 0.0);
        bf.block_mut(2, 0)[0] = c(1.0, 0.0);
        let w = fronthaul_weights(&bf, 1e-10).unwrap();
        assert_relative_eq!(w.get(0, 0), 1e10, max_relative = 1e-12);
        assert_relative_eq!(w.get(1, 0), 5e9, max_relative = 1e-9);
        assert_relative_eq!(w.get(2, 0), 1.0, max_relative = 1e-9);
        assert!(fronthaul_weights(&bf, 0.0).is_err());
    }

    #[test]
    fn fronthaul_load_modes() {
        let mut bf = BeamformerSet::zeros(2, 1, 1);
        bf.block_mut(1, 0)[0] = c(0.3, 0.1);
        let r = [1e6, 2e6];
        let l0 = fronthaul_load(
            0,
            &bf,
            &r,
            FronthaulMode::L0 {
                zero_threshold: 1e-6,
            },
        );
        assert_eq!(l0, 2e6);
        let zero = BeamformerSet::zeros(2, 1, 1);
        let w = fronthaul_weights(&zero, 1e-10).unwrap();
        assert_eq!(
            fronthaul_load(0, &zero, &r, FronthaulMode::Weighted(&w)),
            0.0
        );

        let mut unit = BeamformerSet::zeros(2, 1, 1);
        unit.block_mut(0, 0)[0] = c(1.0, 0.0);
        unit.block_mut(1, 0)[0] = c(0.0, 1.0);
        let w = fronthaul_weights(&unit, 1e-10).unwrap();
        let load = fronthaul_load(0, &unit, &r, FronthaulMode::Weighted(&w));
        assert_relative_eq!(load, 3e6, max_relative = 1e-6);
    }

    #[test]
    fn rate_requirements() {
        assert_relative_eq!(
            min_rate_requirement(1000.0, RateBudget::Transmit { budget: 0.05 }).unwrap(),
            2e4
        );
        let joint = RateBudget::Joint {
            deadline: 0.1,
            cpu_cycles: 1500.0,
            capacity_limit: 1e6,
        };
        assert_relative_eq!(
            min_rate_requirement(1000.0, joint).unwrap(),
            1000.0 / 0.0985,
            max_relative = 1e-12
        );
        let tight = RateBudget::Joint {
            deadline: 0.001,
            cpu_cycles: 1500.0,
            capacity_limit: 1e6,
        };
        assert!(matches!(
            min_rate_requirement(1000.0, tight),
            Err(Error::DeadlineInfeasible { .. })
        ));
    }

    #[test]
    fn energy_accounting() {
        let config = SystemConfig::uniform(1, 1, 2);
        let tasks = [
            Task::new(1500.0, 1000.0, 0.1),
            Task::new(1500.0, 1000.0, 0.1),
        ];
        let cloud = [
            CloudAllocation {
                capacity: 3e4,
                exec_time: 0.05,
                energy: 13.5,
            },
            CloudAllocation {
                capacity: 3e4,
                exec_time: 0.05,
                energy: 0.5,
            },
        ];
        // E^Tr = p D / r = 1.0 * 1000 / 2e4 = 0.05 J for UE 0.
        let e = EnergyBreakdown::from_powers(&config, &tasks, &cloud, &[1.0, 0.001], &[2e4, 2e4])
            .unwrap();
        assert_relative_eq!(e.per_ue[0].total, 14.0, max_relative = 1e-12);
        assert_relative_eq!(e.per_ue[1].total, 0.5005, max_relative = 1e-12);
        assert_relative_eq!(e.total, 14.5005, max_relative = 1e-12);

        let mut off = config.clone();
        off.tradeoff = vec![0.0; 2];
        let e =
            EnergyBreakdown::from_powers(&off, &tasks, &cloud, &[1.0, 1.0], &[2e4, 2e4]).unwrap();
        assert_eq!(e.total, 14.0);
        assert!(
            EnergyBreakdown::from_powers(&config, &tasks, &cloud, &[1.0, 1.0], &[0.0, 1.0])
                .is_err()
        );
    }
}
