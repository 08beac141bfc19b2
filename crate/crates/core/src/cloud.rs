//! Mobile-clone execution model and the closed-form cloud-only optimum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{SystemConfig, Task};

/// Execution time F / f of a task on a clone running at `capacity` cycles/s.
pub fn clone_exec_time(cpu_cycles: f64, capacity: f64) -> Result<f64> {
    if !(capacity > 0.0) {
        return Err(Error::domain(format!(
            "clone capacity must be > 0, got {capacity}"
        )));
    }
    if !(cpu_cycles > 0.0) {
        return Err(Error::domain(format!(
            "cpu cycles must be > 0, got {cpu_cycles}"
        )));
    }
    Ok(cpu_cycles / capacity)
}

/// Clone energy κ f^(ν-1) F.
pub fn clone_energy(cpu_cycles: f64, capacity: f64, kappa: f64, nu: f64) -> Result<f64> {
    if !(nu >= 1.0) {
        return Err(Error::domain(format!(
            "cloud exponent must be >= 1, got {nu}"
        )));
    }
    if !(kappa >= 0.0) {
        return Err(Error::domain(format!(
            "switched capacitance must be >= 0, got {kappa}"
        )));
    }
    if !(capacity > 0.0) {
        return Err(Error::domain(format!(
            "clone capacity must be > 0, got {capacity}"
        )));
    }
    Ok(kappa * capacity.powf(nu - 1.0) * cpu_cycles)
}

/// Per-UE clone operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudAllocation {
    pub capacity: f64,
    pub exec_time: f64,
    pub energy: f64,
}

impl CloudAllocation {
    pub fn at_capacity(task: &Task, capacity: f64, kappa: f64, nu: f64) -> Result<Self> {
        Ok(CloudAllocation {
            capacity,
            exec_time: clone_exec_time(task.cpu_cycles, capacity)?,
            energy: clone_energy(task.cpu_cycles, capacity, kappa, nu)?,
        })
    }
}

/// Minimum-energy clone capacities when UE `i` must finish within
/// `deadlines[i]`. The deadline is tight at the optimum, f* = F / T; a UE whose
/// f* exceeds its capacity limit makes the whole problem infeasible.
pub fn solve_p1(
    config: &SystemConfig,
    tasks: &[Task],
    deadlines: &[f64],
) -> Result<Vec<CloudAllocation>> {
    if tasks.len() != deadlines.len() || tasks.len() != config.num_ue {
        return Err(Error::Dimension("one task and one deadline per UE".into()));
    }
    tasks
        .iter()
        .zip(deadlines)
        .enumerate()
        .map(|(i, (task, &t_max))| {
            if !(t_max > 0.0) {
                return Err(Error::domain(format!(
                    "cloud deadline of UE {i} must be > 0"
                )));
            }
            let required = task.cpu_cycles / t_max;
            let limit = config.clone_capacity_limit[i];
            if required > limit {
                return Err(Error::CloudInfeasible {
                    ue: i,
                    required,
                    limit,
                });
            }
            let kappa = config.switched_capacitance[i];
            let nu = config.cloud_exponent[i];
            Ok(CloudAllocation {
                capacity: required,
                exec_time: t_max,
                energy: kappa * task.cpu_cycles.powf(nu) / t_max.powf(nu - 1.0),
            })
        })
        .collect()
}

/// Clone operating point when the result is delivered at `rate` bit/s: the
/// clone gets the time left after transmission, f = F / (T − D / r).
pub fn allocation_for_rate(
    config: &SystemConfig,
    task: &Task,
    i: usize,
    rate: f64,
) -> Result<CloudAllocation> {
    let tx_time = if task.result_bits > 0.0 {
        if !(rate > 0.0) {
            return Err(Error::domain(format!(
                "UE {i} has data to send but rate {rate}"
            )));
        }
        task.result_bits / rate
    } else {
        0.0
    };
    let cloud_time = task.deadline - tx_time;
    let limit = config.clone_capacity_limit[i];
    if !(cloud_time > 0.0) {
        return Err(Error::DeadlineInfeasible {
            ue: i,
            cloud_time: task.cpu_cycles / limit,
            deadline: task.deadline,
        });
    }
    let capacity = task.cpu_cycles / cloud_time;
    if capacity > limit * (1.0 + 1e-12) {
        return Err(Error::CloudInfeasible {
            ue: i,
            required: capacity,
            limit,
        });
    }
    let kappa = config.switched_capacitance[i];
    let nu = config.cloud_exponent[i];
    Ok(CloudAllocation {
        capacity,
        exec_time: cloud_time,
        energy: kappa * task.cpu_cycles.powf(nu) / cloud_time.powf(nu - 1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn single(f_max: f64) -> SystemConfig {
        let mut c = SystemConfig::uniform(1, 1, 1);
        c.clone_capacity_limit = vec![f_max];
        c
    }

    #[test]
    fn exec_time() {
        assert_relative_eq!(clone_exec_time(1500.0, 30000.0).unwrap(), 0.05);
        assert_relative_eq!(clone_exec_time(1e6, 1e6).unwrap(), 1.0);
        assert!(clone_exec_time(1500.0, 0.0).is_err());
    }

    #[test]
    fn energy() {
        assert_relative_eq!(
            clone_energy(1500.0, 3e4, 1e-11, 3.0).unwrap(),
            13.5,
            max_relative = 1e-12
        );
        assert_eq!(clone_energy(1500.0, 3e4, 0.0, 3.0).unwrap(), 0.0);
        assert_relative_eq!(
            clone_energy(1500.0, 3e4, 1e-11, 1.0).unwrap(),
            1.5e-8,
            max_relative = 1e-12
        );
        assert!(clone_energy(1500.0, 3e4, 1e-11, 0.5).is_err());
    }

    #[test]
    fn closed_form_optimum() {
        let c = single(1e6);
        let a = solve_p1(&c, &[Task::new(1500.0, 0.0, 1.0)], &[0.05]).unwrap();
        assert_relative_eq!(a[0].capacity, 3e4, max_relative = 1e-12);
        assert_relative_eq!(a[0].energy, 13.5, max_relative = 1e-12);
        assert_eq!(a[0].exec_time, 0.05);
    }

    #[test]
    fn infeasible_when_capacity_exceeded() {
        let c = single(1e6);
        let err = solve_p1(&c, &[Task::new(1500.0, 0.0, 1.0)], &[0.001]).unwrap_err();
        match err {
            Error::CloudInfeasible { ue, required, .. } => {
                assert_eq!(ue, 0);
                assert_relative_eq!(required, 1.5e6);
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn boundary_is_feasible() {
        let c = single(1e6);
        let a = solve_p1(&c, &[Task::new(1e6, 0.0, 1.0)], &[1.0]).unwrap();
        assert_eq!(a[0].capacity, 1e6);
    }

    #[test]
    fn allocation_for_rate_uses_remaining_time() {
        let c = single(1e6);
        let task = Task::new(1500.0, 1000.0, 0.1);
        let a = allocation_for_rate(&c, &task, 0, 2e4).unwrap();
        assert_relative_eq!(a.exec_time, 0.05, max_relative = 1e-12);
        assert_relative_eq!(a.energy, 13.5, max_relative = 1e-12);
        let idle = Task::new(1500.0, 0.0, 0.1);
        assert_relative_eq!(
            allocation_for_rate(&c, &idle, 0, 0.0).unwrap().capacity,
            1.5e4
        );
        assert!(matches!(
            allocation_for_rate(&c, &task, 0, 1e4),
            Err(Error::DeadlineInfeasible { .. })
        ));
        assert!(matches!(
            allocation_for_rate(&c, &task, 0, 1.0001e4),
            Err(Error::CloudInfeasible { .. })
        ));
    }

    #[test]
    fn energy_decreases_with_deadline() {
        let c = single(1e9);
        let task = Task::new(1500.0, 0.0, 1.0);
        let energies: Vec<f64> = (1..=12)
            .map(|k| solve_p1(&c, &[task], &[0.01 * k as f64]).unwrap()[0].energy)
            .collect();
        assert!(energies.windows(2).all(|w| w[1] < w[0]));
    }
}
