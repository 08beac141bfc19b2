//! Oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use cranjoint::conic::{Cone, ConicProblem};
use cranjoint::scenario::{ChannelState, SystemConfig, Task};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type SocRow = (DMatrix<f64>, DVector<f64>, DVector<f64>, f64);

/// min c'x  s.t.  ‖A_k x + b_k‖ ≤ d_k'x + e_k,  |x_i| ≤ box.
#[derive(Debug, Clone)]
pub struct SmallSocp {
    pub c: DVector<f64>,
    pub socs: Vec<SocRow>,
    pub bound: f64,
}

impl SmallSocp {
    /// Random instance with x = 0 strictly feasible.
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..=6);
        let c = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let ncone = rng.random_range(1..=3);
        let socs = (0..ncone)
            .map(|_| {
                let m = rng.random_range(1..=n);
                let a = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
                let b = DVector::from_fn(m, |_, _| rng.random_range(-0.5..0.5));
                let d = DVector::from_fn(n, |_, _| rng.random_range(-0.3..0.3));
                let e = b.norm() + rng.random_range(0.2..2.0);
                (a, b, d, e)
            })
            .collect();
        SmallSocp {
            c,
            socs,
            bound: 5.0,
        }
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn feasible(&self, x: &DVector<f64>) -> bool {
        x.iter().all(|v| v.abs() <= self.bound)
            && self
                .socs
                .iter()
                .all(|(a, b, d, e)| (a * x + b).norm() <= d.dot(x) + e)
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        self.c.dot(x)
    }

    /// Rows `A x + s = b` with `s` in the product cone.
    pub fn to_conic(&self) -> ConicProblem {
        let n = self.n();
        let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
        let mut cones = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            for sign in [1.0, -1.0] {
                let mut r = vec![0.0; n];
                r[i] = sign;
                rows.push((r, self.bound));
            }
        }
        cones.push(Cone::NonNeg(2 * n));
        labels.push("box".to_string());
        for (k, (a, b, d, e)) in self.socs.iter().enumerate() {
            rows.push(((0..n).map(|j| -d[j]).collect(), *e));
            for r in 0..a.nrows() {
                rows.push(((0..n).map(|j| -a[(r, j)]).collect(), b[r]));
            }
            cones.push(Cone::Soc(a.nrows() + 1));
            labels.push(format!("soc{k}"));
        }
        let a = DMatrix::from_fn(rows.len(), n, |r, j| rows[r].0[j]);
        ConicProblem {
            c: self.c.iter().copied().collect(),
            a,
            b: rows.iter().map(|r| r.1).collect(),
            cones,
            cone_labels: labels,
            var_names: (0..n).map(|j| format!("x{j}")).collect(),
        }
    }

    /// Log-barrier value, gradient and Hessian at a strictly feasible x.
    fn barrier(&self, x: &DVector<f64>) -> Option<(f64, DVector<f64>, DMatrix<f64>)> {
        let n = self.n();
        let mut f = 0.0;
        let mut g = DVector::zeros(n);
        let mut h = DMatrix::zeros(n, n);
        for i in 0..n {
            for (sign, slack) in [(1.0, self.bound - x[i]), (-1.0, self.bound + x[i])] {
                if slack <= 0.0 {
                    return None;
                }
                f -= slack.ln();
                g[i] += sign / slack;
                h[(i, i)] += 1.0 / (slack * slack);
            }
        }
        for (a, b, d, e) in &self.socs {
            let w = a * x + b;
            let u = d.dot(x) + e;
            let q = u * u - w.norm_squared();
            if u <= 0.0 || q <= 0.0 {
                return None;
            }
            let dq = d * (2.0 * u) - a.transpose() * &w * 2.0;
            let d2q = d * d.transpose() * 2.0 - a.transpose() * a * 2.0;
            f -= q.ln();
            g -= &dq / q;
            h += &dq * dq.transpose() / (q * q) - d2q / q;
        }
        Some((f, g, h))
    }

    /// Barrier parameter: total degree of the cone.
    pub fn degree(&self) -> f64 {
        (2 * self.n() + 2 * self.socs.len()) as f64
    }

    /// Primal path-following with damped Newton steps; returns a strictly
    /// feasible point whose objective is within `degree / t_final` of optimal.
    pub fn barrier_solve(&self, t_final: f64) -> (DVector<f64>, f64) {
        let mut x = DVector::zeros(self.n());
        let mut t = 1.0;
        loop {
            for _ in 0..200 {
                let (f0, g, h) = self.barrier(&x).expect("iterate stays interior");
                let grad = &self.c * t + &g;
                let Some(step) = h.clone().cholesky().map(|ch| ch.solve(&(-&grad))) else {
                    break;
                };
                let decrement = -grad.dot(&step);
                if decrement / 2.0 <= 1e-12 {
                    break;
                }
                let phi0 = t * self.objective(&x) + f0;
                let mut s = 1.0;
                loop {
                    let trial = &x + &step * s;
                    if let Some((f1, _, _)) = self.barrier(&trial) {
                        if t * self.objective(&trial) + f1 <= phi0 - 0.25 * s * decrement {
                            x = trial;
                            break;
                        }
                    }
                    s *= 0.5;
                    if s < 1e-14 {
                        break;
                    }
                }
            }
            if t >= t_final {
                break;
            }
            t = (t * 10.0).min(t_final);
        }
        let gap = self.degree() / t;
        (x, gap)
    }

    /// Best objective over `samples` random feasible points.
    pub fn sample_bound(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut best = f64::INFINITY;
        for _ in 0..samples {
            let x = DVector::from_fn(self.n(), |_, _| rng.random_range(-self.bound..self.bound));
            if self.feasible(&x) {
                best = best.min(self.objective(&x));
            }
        }
        best
    }
}

/// One UE, one RRH, one antenna with real channel gain `g`.
pub fn single_link(g: f64, tradeoff: f64) -> (SystemConfig, ChannelState) {
    let mut sys = SystemConfig::uniform(1, 1, 1);
    sys.tradeoff = vec![tradeoff];
    let ch = ChannelState::new(
        1,
        1,
        1,
        vec![Complex64::new(g.sqrt(), 0.0)],
        vec![sys.noise_power(0)],
    )
    .unwrap();
    (sys, ch)
}

/// Total energy of one link at delivery rate r: clone at F/(T − D/r) and
/// transmit power from the inverted Shannon rate.
pub fn single_link_energy(sys: &SystemConfig, task: &Task, g: f64, r: f64) -> f64 {
    let (k, nu) = (sys.switched_capacitance[0], sys.cloud_exponent[0]);
    let f = task.cpu_cycles / (task.deadline - task.result_bits / r);
    let cloud = k * f.powf(nu - 1.0) * task.cpu_cycles;
    let p = (2f64.powf(r / sys.bandwidth[0]) - 1.0) * sys.noise_power(0) / g;
    cloud + sys.tradeoff[0] * p * task.result_bits / r
}

/// Minimum of `single_link_energy` over every feasible rate: dense grid then
/// golden-section refinement.
pub fn single_link_oracle(sys: &SystemConfig, task: &Task, g: f64) -> (f64, f64) {
    let fmax = sys.clone_capacity_limit[0];
    let lo = task.result_bits / (task.deadline - task.cpu_cycles / fmax);
    let hi = (sys.bandwidth[0] * (1.0 + g * sys.rrh_power_limit[0] / sys.noise_power(0)).log2())
        .min(sys.fronthaul_limit[0]);
    assert!(lo < hi, "single link infeasible");
    let e = |r: f64| single_link_energy(sys, task, g, r);
    let n = 20_000;
    let grid: Vec<f64> = (0..=n)
        .map(|k| lo + (hi - lo) * k as f64 / n as f64)
        .collect();
    let best = (0..=n)
        .min_by(|&a, &b| e(grid[a]).total_cmp(&e(grid[b])))
        .unwrap();
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(n)]);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if e(c) <= e(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let r = 0.5 * (a + b);
    let r = [r, lo, hi]
        .into_iter()
        .min_by(|x, y| e(*x).total_cmp(&e(*y)))
        .unwrap();
    (r, e(r))
}
