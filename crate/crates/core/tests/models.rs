use cranjoint::cloud::{clone_energy, clone_exec_time, solve_p1};
use cranjoint::ran::{
    fronthaul_load, fronthaul_weights, min_rate_requirement, rate_from_sinr, rrh_power, sinr,
    transmit_cost, BeamformerSet, FronthaulMode, RateBudget,
};
use cranjoint::scenario::{
    generate_channels, load_config, path_loss_db, ChannelState, Geometry, Scenario, SystemConfig,
    Task, UeLayout,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[test]
fn empty_document_is_table1() {
    let s = load_config("{}").unwrap();
    assert_eq!(s.system.num_rrh, 4);
    assert_eq!(s.system.antennas_per_rrh, 2);
    assert_eq!(s.system.num_ue, 5);
    assert!(s.system.rrh_power_limit.iter().all(|&p| p == 1.0));
    assert_eq!(s, Scenario::table1());
}

#[test]
fn negative_power_names_the_field() {
    let e = load_config(r#"{"system": {"rrh_power_limit": -1}}"#).unwrap_err();
    assert_eq!(e.status_tag(), "config-error");
    assert!(e.to_string().contains("rrh_power_limit"));
}

#[test]
fn cubic_cloud_model_is_accepted() {
    let s = load_config(r#"{"system": {"cloud_exponent": 3, "switched_capacitance": 1e-11}}"#);
    assert!(s.is_ok());
}

#[test]
fn path_loss_reference_points() {
    for (d, want) in [(1.0, 127.0), (0.1, 102.0), (0.01, 77.0)] {
        assert!((path_loss_db(d).unwrap() - want).abs() < 1e-9);
    }
    assert!(path_loss_db(0.0).is_err());
}

#[test]
fn noise_power_from_psd() {
    let sys = SystemConfig::default();
    assert!((sys.noise_power(0) - 1e-6).abs() < 1e-18);
}

#[test]
fn channels_repeat_for_a_seed() {
    let sys = SystemConfig::default();
    assert_eq!(
        generate_channels(&sys, 42).unwrap(),
        generate_channels(&sys, 42).unwrap()
    );
    assert_ne!(
        generate_channels(&sys, 42).unwrap(),
        generate_channels(&sys, 43).unwrap()
    );
}

#[test]
fn rayleigh_gain_mean_at_one_kilometre() {
    let mut sys = SystemConfig::uniform(1, 2, 1);
    sys.geometry = Geometry {
        rrh_positions: vec![[0.0, 0.0]],
        ue_layout: UeLayout::Fixed(vec![[1.0, 0.0]]),
    };
    let mut sum = 0.0;
    let mut draws = 0usize;
    for seed in 0..5000 {
        let ch = generate_channels(&sys, seed).unwrap();
        for h in ch.link(0, 0) {
            sum += h.norm_sqr();
            draws += 1;
        }
    }
    assert_eq!(draws, 10_000);
    let mean = sum / draws as f64;
    let want = 10f64.powf(-12.7);
    assert!((mean - want).abs() / want < 0.05, "{mean:e}");
}

#[test]
fn coincident_ue_and_rrh_is_a_domain_error() {
    let mut sys = SystemConfig::uniform(1, 1, 1);
    sys.geometry = Geometry {
        rrh_positions: vec![[0.0, 0.0]],
        ue_layout: UeLayout::Fixed(vec![[0.0, 0.0]]),
    };
    assert_eq!(
        generate_channels(&sys, 1).unwrap_err().status_tag(),
        "domain-error"
    );
}

#[test]
fn clone_time_and_energy_examples() {
    assert!((clone_exec_time(1500.0, 3e4).unwrap() - 0.05).abs() < 1e-15);
    assert_eq!(clone_exec_time(1e6, 1e6).unwrap(), 1.0);
    assert!(clone_exec_time(1500.0, 0.0).is_err());
    assert!((clone_energy(1500.0, 3e4, 1e-11, 3.0).unwrap() - 13.5).abs() < 1e-12);
    assert_eq!(clone_energy(1500.0, 3e4, 0.0, 3.0).unwrap(), 0.0);
    assert!((clone_energy(1500.0, 3e4, 1e-11, 1.0).unwrap() - 1.5e-8).abs() < 1e-20);
    assert!(clone_energy(1500.0, 3e4, 1e-11, 0.5).is_err());
}

#[test]
fn p1_examples() {
    let sys = SystemConfig::uniform(1, 1, 1);
    let t = |f: f64| vec![Task::new(f, 1000.0, 1.0)];
    let a = solve_p1(&sys, &t(1500.0), &[0.05]).unwrap();
    assert!((a[0].capacity - 3e4).abs() < 1e-9);
    assert!((a[0].energy - 13.5).abs() < 1e-12);
    let e = solve_p1(&sys, &t(1500.0), &[0.001]).unwrap_err();
    assert_eq!(e.status_tag(), "infeasible-cloud");
    let b = solve_p1(&sys, &t(1e6), &[1.0]).unwrap();
    assert_eq!(b[0].capacity, 1e6);
}

fn one_ue_channel(h: Vec<Complex64>, noise: f64, n: usize, l: usize, k: usize) -> ChannelState {
    ChannelState::new(n, l, k, h, vec![noise; n]).unwrap()
}

#[test]
fn sinr_examples() {
    let ch = one_ue_channel(vec![c(1.0)], 0.1, 1, 1, 1);
    let bf = BeamformerSet::from_vec(1, 1, 1, vec![c(1.0)]).unwrap();
    assert!((sinr(0, &ch, &bf, &[true]).unwrap() - 10.0).abs() < 1e-12);
    let zero = BeamformerSet::zeros(1, 1, 1);
    assert_eq!(sinr(0, &ch, &zero, &[true]).unwrap(), 0.0);

    // h_1 = h_2 = e_1, v_1 = v_2 = 0.5 e_1, σ² = 0.25
    let h = vec![c(1.0), c(0.0), c(1.0), c(0.0)];
    let ch = one_ue_channel(h, 0.25, 2, 1, 2);
    let v = vec![c(0.5), c(0.0), c(0.5), c(0.0)];
    let bf = BeamformerSet::from_vec(2, 1, 2, v).unwrap();
    assert!((sinr(0, &ch, &bf, &[true]).unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn rate_examples() {
    assert!((rate_from_sinr(1.0, 1e7).unwrap() - 1e7).abs() < 1e-6);
    assert_eq!(rate_from_sinr(0.0, 1e7).unwrap(), 0.0);
    let want = 1e7 * 11f64.log2();
    assert!((rate_from_sinr(10.0, 1e7).unwrap() - want).abs() / want < 1e-12);
    assert!((want - 3.459e7).abs() / 3.459e7 < 1e-3);
    assert!(rate_from_sinr(1.0, 0.0).is_err());
}

#[test]
fn transmit_cost_examples() {
    let (t, e) = transmit_cost(1000.0, 2e4, 0.01).unwrap();
    assert!((t - 0.05).abs() < 1e-15 && (e - 5e-4).abs() < 1e-15);
    assert_eq!(transmit_cost(0.0, 0.0, 1.0).unwrap(), (0.0, 0.0));
    assert!(transmit_cost(1000.0, 0.0, 1.0).is_err());
}

#[test]
fn rrh_power_examples() {
    assert_eq!(rrh_power(0, &BeamformerSet::zeros(2, 1, 2)), 0.0);
    let bf = BeamformerSet::from_vec(2, 1, 2, vec![c(1.0), c(0.0), c(0.0), c(1.0)]).unwrap();
    assert!((rrh_power(0, &bf) - 2.0).abs() < 1e-15);
    let bf = BeamformerSet::from_vec(1, 1, 2, vec![c(0.6), c(0.8)]).unwrap();
    assert!((rrh_power(0, &bf) - 1.0).abs() < 1e-15);
}

#[test]
fn fronthaul_examples() {
    let rho = fronthaul_weights(&BeamformerSet::zeros(1, 1, 1), 1e-10).unwrap();
    assert!((rho.get(0, 0) - 1e10).abs() < 1e-3);
    let small = BeamformerSet::from_vec(1, 1, 1, vec![c(1e-5)]).unwrap();
    let rho = fronthaul_weights(&small, 1e-10).unwrap();
    assert!((rho.get(0, 0) - 5e9).abs() / 5e9 < 1e-9);
    assert!(fronthaul_weights(&small, 0.0).is_err());

    let bf = BeamformerSet::from_vec(2, 1, 1, vec![c(0.0), c(0.3)]).unwrap();
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

    let unit = BeamformerSet::from_vec(2, 1, 1, vec![c(1.0), c(1.0)]).unwrap();
    let rho = fronthaul_weights(&unit, 1e-10).unwrap();
    let w = fronthaul_load(0, &unit, &r, FronthaulMode::Weighted(&rho));
    assert!((w - 3e6).abs() / 3e6 < 1e-6);
    let rho0 = fronthaul_weights(&BeamformerSet::zeros(2, 1, 1), 1e-10).unwrap();
    let w0 = fronthaul_load(
        0,
        &BeamformerSet::zeros(2, 1, 1),
        &r,
        FronthaulMode::Weighted(&rho0),
    );
    assert_eq!(w0, 0.0);
}

#[test]
fn rate_floor_examples() {
    let r = min_rate_requirement(1000.0, RateBudget::Transmit { budget: 0.05 }).unwrap();
    assert!((r - 2e4).abs() < 1e-9);
    let joint = |deadline| RateBudget::Joint {
        deadline,
        cpu_cycles: 1500.0,
        capacity_limit: 1e6,
    };
    let r = min_rate_requirement(1000.0, joint(0.1)).unwrap();
    assert!((r - 1000.0 / 0.0985).abs() < 1e-9);
    assert!((r - 1.01523e4).abs() < 1.0);
    assert!(min_rate_requirement(1000.0, joint(0.001)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn p1_energy_is_closed_form(
        f in 100.0f64..5000.0,
        t in 0.01f64..1.0,
        kappa in 1e-12f64..1e-10,
        nu in 2.0f64..4.0,
    ) {
        let mut sys = SystemConfig::uniform(1, 1, 1);
        sys.switched_capacitance = vec![kappa];
        sys.cloud_exponent = vec![nu];
        let a = solve_p1(&sys, &[Task::new(f, 1000.0, t)], &[t]).unwrap();
        let want = kappa * f.powf(nu) / t.powf(nu - 1.0);
        prop_assert!((a[0].energy - want).abs() <= 1e-12 * want);
    }

    #[test]
    fn fronthaul_weights_are_positive_and_bounded(p in 0.0f64..10.0, eps in 1e-12f64..1e-3) {
        let bf = BeamformerSet::from_vec(1, 1, 1, vec![c(p.sqrt())]).unwrap();
        let rho = fronthaul_weights(&bf, eps).unwrap().get(0, 0);
        prop_assert!(rho > 0.0 && rho <= 1.0 / eps);
    }
}
