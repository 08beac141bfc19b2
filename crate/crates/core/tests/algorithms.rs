mod common;

use common::{single_link, single_link_oracle};
use cranjoint::algorithms::{
    algorithm1_separate_ran, algorithm2_joint, extract_rrh_clusters, mmse_receiver, mse,
    mse_weight, replay, separate_baseline, tau, AlgorithmOptions, Allocation,
};
use cranjoint::cloud::solve_p1;
use cranjoint::ran::{rrh_power, BeamformerSet};
use cranjoint::scenario::{generate_channels, ChannelState, Scenario, SystemConfig, Task};
use num_complex::Complex64;

fn opts() -> AlgorithmOptions {
    AlgorithmOptions::default()
}

fn table1(seed: u64) -> (Scenario, ChannelState) {
    let s = Scenario::table1();
    let ch = generate_channels(&s.system, seed).unwrap();
    (s, ch)
}

#[test]
fn mmse_receiver_single_user() {
    let ch = ChannelState::new(1, 1, 1, vec![Complex64::new(1.0, 0.0)], vec![1.0]).unwrap();
    let bf = BeamformerSet::from_vec(1, 1, 1, vec![Complex64::new(0.0, 3.0)]).unwrap();
    let u = mmse_receiver(&ch, &bf)[0];
    assert!((u.norm() - 0.3).abs() < 1e-12);
    assert!((u - Complex64::new(0.0, 0.3)).norm() < 1e-12);
    assert!((mse(0, u, &ch, &bf) - 0.1).abs() < 1e-12);
    assert_eq!(mse(0, Complex64::new(0.0, 0.0), &ch, &bf), 1.0);
    assert_eq!(
        mmse_receiver(&ch, &BeamformerSet::zeros(1, 1, 1))[0],
        Complex64::new(0.0, 0.0)
    );
}

#[test]
fn mse_weight_against_finite_difference() {
    let sys = SystemConfig::uniform(1, 1, 1);
    let task = Task::new(1500.0, 1e3, 0.1);
    let e = 0.5;
    let h = 1e-7;
    let fd =
        (tau(e + h, &task, &sys, 0).unwrap() - tau(e - h, &task, &sys, 0).unwrap()) / (2.0 * h);
    let phi = mse_weight(e, &task, &sys, 0).unwrap();
    assert!(phi >= 0.0);
    assert!((phi - fd).abs() <= 1e-4 * fd.abs());
    let mut linear = sys.clone();
    linear.cloud_exponent = vec![1.0];
    assert_eq!(mse_weight(e, &task, &linear, 0).unwrap(), 0.0);
    assert!(mse_weight(1.5, &task, &sys, 0).is_err());
}

#[test]
fn separate_single_link_matches_closed_form() {
    let g = 1e-8;
    let (sys, ch) = single_link(g, 10.0);
    let task = Task::new(1500.0, 1000.0, 0.1);
    let ran = algorithm1_separate_ran(&sys, &[task], &ch, &[0.05], &opts()).unwrap();
    let want = (2f64.powf(2e4 / 1e7) - 1.0) * 1e-6 / g;
    assert!(
        (ran.powers[0] - want).abs() / want < 1e-6,
        "{} vs {want}",
        ran.powers[0]
    );
    // K = 1: collinear with h means the phase of h^H v is zero.
    let v = ran.beamformers.block(0, 0)[0];
    assert!((v.conj() * ch.link(0, 0)[0]).im.abs() <= 1e-6 * v.norm() * g.sqrt());
}

#[test]
fn silent_tasks_need_no_radio() {
    let (s, ch) = table1(42);
    let tasks = vec![Task::new(1500.0, 0.0, 0.1); 5];
    let budget = vec![0.05; 5];
    let ran = algorithm1_separate_ran(&s.system, &tasks, &ch, &budget, &opts()).unwrap();
    assert!(ran.powers.iter().all(|&p| p == 0.0));

    let joint = algorithm2_joint(&s.system, &tasks, &ch, &opts()).unwrap();
    let p1 = solve_p1(&s.system, &tasks, &[0.1; 5]).unwrap();
    let want: f64 = p1.iter().map(|a| a.energy).sum();
    assert!((joint.energy.total - want).abs() <= 1e-12 * want);
    assert_eq!(joint.energy.transmit, 0.0);
}

#[test]
fn joint_single_link_matches_rate_split_oracle() {
    let task = Task::new(1500.0, 1000.0, 0.1);
    for (g, eta) in [(1e-8, 10.0), (1e-6, 1000.0), (1e-7, 1e5)] {
        let (sys, ch) = single_link(g, eta);
        let sol = algorithm2_joint(&sys, &[task], &ch, &opts()).unwrap();
        let (r_star, e_star) = single_link_oracle(&sys, &task, g);
        let rel = (sol.energy.total - e_star) / e_star;
        assert!(
            rel.abs() <= 1e-3,
            "g={g} eta={eta}: {} vs {e_star} (r {} vs {r_star})",
            sol.energy.total,
            sol.ran.rates[0]
        );
    }
}

#[test]
fn separate_budgets_split_the_deadline() {
    let (s, ch) = table1(42);
    let sol = separate_baseline(&s.system, &s.tasks, &ch, 0.25, &opts()).unwrap();
    for (c, t) in sol.cloud.iter().zip(&s.tasks) {
        assert!((t.cpu_cycles / c.capacity - 0.075).abs() < 1e-12);
    }
    for (r, t) in sol.ran.rate_floors.iter().zip(&s.tasks) {
        assert!((t.result_bits / r - 0.025).abs() < 1e-12);
    }
    assert!(separate_baseline(&s.system, &s.tasks, &ch, 1.0, &opts()).is_err());
    let e = separate_baseline(&s.system, &s.tasks, &ch, 0.99, &opts()).unwrap_err();
    assert_eq!(e.status_tag(), "infeasible-cloud");
}

#[test]
fn table1_solutions_replay_cleanly() {
    let (s, ch) = table1(42);
    let sep = separate_baseline(&s.system, &s.tasks, &ch, 0.5, &opts()).unwrap();
    let joint = algorithm2_joint(&s.system, &s.tasks, &ch, &opts()).unwrap();
    for (ran, cloud) in [(&sep.ran, &sep.cloud), (&joint.ran, &joint.cloud)] {
        for j in 0..4 {
            assert!(rrh_power(j, &ran.beamformers) <= 1.0 + 1e-6);
        }
        let v = replay(
            &s.system,
            &s.tasks,
            &ch,
            &Allocation {
                beamformers: &ran.beamformers,
                clusters: &ran.clusters,
                rates: &ran.rates,
                rate_floors: &ran.rate_floors,
                cloud,
            },
        )
        .unwrap();
        assert!(v.within(1e-6), "{v:?}");
    }
}

#[test]
fn table1_joint_beats_every_split() {
    let (s, ch) = table1(42);
    let joint = algorithm2_joint(&s.system, &s.tasks, &ch, &opts()).unwrap();
    for alpha in [0.25, 0.5, 0.75] {
        let sep = separate_baseline(&s.system, &s.tasks, &ch, alpha, &opts()).unwrap();
        assert!(joint.energy.total <= sep.energy.total, "alpha {alpha}");
    }
}

#[test]
fn table1_surrogate_descends() {
    let (s, ch) = table1(42);
    let joint = algorithm2_joint(&s.system, &s.tasks, &ch, &opts()).unwrap();
    assert!(!joint.surrogate_trace.is_empty());
    for step in joint.surrogate_trace.iter().filter(|s| s.entry_feasible) {
        assert!(
            step.after <= step.before + 1e-9 * step.before.abs().max(1.0),
            "{step:?}"
        );
    }
}

#[test]
fn joint_is_deterministic() {
    let (s, ch) = table1(7);
    let a = algorithm2_joint(&s.system, &s.tasks, &ch, &opts()).unwrap();
    let b = algorithm2_joint(&s.system, &s.tasks, &ch, &opts()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn cluster_extraction_examples() {
    let zero = BeamformerSet::zeros(2, 2, 1);
    let (cl, _) = extract_rrh_clusters(&zero, &[1.0, 1.0], 1e-6);
    assert!((0..2).all(|i| cl.size(i) == 0));

    let big = Complex64::new(0.5f64.sqrt(), 0.0);
    let tiny = Complex64::new(1e-6, 0.0);
    let bf = BeamformerSet::from_vec(2, 2, 1, vec![big, tiny, tiny, big]).unwrap();
    let (cl, cleaned) = extract_rrh_clusters(&bf, &[1.0, 1.0], 1e-6);
    assert!(cl.serves(0, 0) && !cl.serves(0, 1));
    assert!(cl.serves(1, 1) && !cl.serves(1, 0));
    assert_eq!(cleaned.block(0, 1)[0], Complex64::new(0.0, 0.0));
    assert_eq!(cleaned.block(0, 0)[0], big);
}
