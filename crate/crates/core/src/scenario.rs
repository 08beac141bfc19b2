//! Scenario configuration, geometry and channel generation.
//!
//! All quantities are held in SI base units (cycles, bits, seconds, hertz,
//! watts, joules). The only dB-valued inputs are the noise power spectral
//! density (dBm/Hz) and the path-loss law, and both are converted to linear
//! scale here so that no other module handles dB.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Side of the default square layout, in kilometres.
///
/// The four default RRHs sit on the corners of this square and UEs are
/// dropped uniformly inside it.
pub const DEFAULT_SIDE_KM: f64 = 0.02;

/// A point in the plane, kilometres.
pub type Position = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum UeLayout {
    /// Explicit UE coordinates.
    Fixed(Vec<Position>),
    /// Uniform drop inside the axis-aligned square `[0, side]^2`, seeded.
    Uniform { side_km: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub rrh_positions: Vec<Position>,
    pub ue_layout: UeLayout,
}

impl Geometry {
    /// RRHs on the corners of a square of the given side, UEs uniform inside.
    pub fn square(side_km: f64) -> Self {
        Geometry {
            rrh_positions: vec![
                [0.0, 0.0],
                [side_km, 0.0],
                [0.0, side_km],
                [side_km, side_km],
            ],
            ue_layout: UeLayout::Uniform { side_km },
        }
    }
}

/// System-wide constants. Per-UE and per-RRH quantities are stored as vectors
/// so heterogeneous scenarios are representable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub num_rrh: usize,
    pub antennas_per_rrh: usize,
    pub num_ue: usize,
    /// P_j, watts.
    pub rrh_power_limit: Vec<f64>,
    /// f_max_i, cycles/s.
    pub clone_capacity_limit: Vec<f64>,
    /// η_i.
    pub tradeoff: Vec<f64>,
    /// B_i, hertz.
    pub bandwidth: Vec<f64>,
    /// C_j,max, bit/s.
    pub fronthaul_limit: Vec<f64>,
    /// ν_i.
    pub cloud_exponent: Vec<f64>,
    /// κ_i.
    pub switched_capacitance: Vec<f64>,
    /// ε in the reweighting rule.
    pub stability_epsilon: f64,
    /// dBm/Hz.
    pub noise_psd_dbm_hz: f64,
    pub geometry: Geometry,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig::uniform(4, 2, 5)
    }
}

impl SystemConfig {
    /// Table-1 constants for the given dimensions, default square geometry.
    pub fn uniform(num_rrh: usize, antennas_per_rrh: usize, num_ue: usize) -> Self {
        let geometry = if num_rrh == 4 {
            Geometry::square(DEFAULT_SIDE_KM)
        } else {
            Geometry {
                rrh_positions: ring_positions(num_rrh, DEFAULT_SIDE_KM),
                ue_layout: UeLayout::Uniform {
                    side_km: DEFAULT_SIDE_KM,
                },
            }
        };
        SystemConfig {
            num_rrh,
            antennas_per_rrh,
            num_ue,
            rrh_power_limit: vec![1.0; num_rrh],
            clone_capacity_limit: vec![1e6; num_ue],
            tradeoff: vec![10.0; num_ue],
            bandwidth: vec![1e7; num_ue],
            fronthaul_limit: vec![1e7; num_rrh],
            cloud_exponent: vec![3.0; num_ue],
            switched_capacitance: vec![1e-11; num_ue],
            stability_epsilon: 1e-10,
            noise_psd_dbm_hz: -100.0,
            geometry,
        }
    }

    /// Noise power seen by UE `i` in watts.
    pub fn noise_power(&self, i: usize) -> f64 {
        dbm_to_watts(self.noise_psd_dbm_hz) * self.bandwidth[i]
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_rrh == 0 {
            return Err(Error::config("num_rrh", "must be at least 1"));
        }
        if self.antennas_per_rrh == 0 {
            return Err(Error::config("antennas_per_rrh", "must be at least 1"));
        }
        if self.num_ue == 0 {
            return Err(Error::config("num_ue", "must be at least 1"));
        }
        let per_rrh = [
            ("rrh_power_limit", &self.rrh_power_limit),
            ("fronthaul_limit", &self.fronthaul_limit),
        ];
        for (name, v) in per_rrh {
            check_len(name, v, self.num_rrh)?;
            check_all(name, v, |x| x > 0.0, "must be > 0")?;
        }
        let per_ue = [
            ("clone_capacity_limit", &self.clone_capacity_limit),
            ("bandwidth", &self.bandwidth),
        ];
        for (name, v) in per_ue {
            check_len(name, v, self.num_ue)?;
            check_all(name, v, |x| x > 0.0, "must be > 0")?;
        }
        check_len("tradeoff", &self.tradeoff, self.num_ue)?;
        check_all("tradeoff", &self.tradeoff, |x| x >= 0.0, "must be >= 0")?;
        check_len("cloud_exponent", &self.cloud_exponent, self.num_ue)?;
        check_all(
            "cloud_exponent",
            &self.cloud_exponent,
            |x| x >= 1.0,
            "must be >= 1",
        )?;
        check_len(
            "switched_capacitance",
            &self.switched_capacitance,
            self.num_ue,
        )?;
        check_all(
            "switched_capacitance",
            &self.switched_capacitance,
            |x| x >= 0.0,
            "must be >= 0",
        )?;
        if !(self.stability_epsilon > 0.0 && self.stability_epsilon.is_finite()) {
            return Err(Error::config("stability_epsilon", "must be > 0"));
        }
        if !self.noise_psd_dbm_hz.is_finite() {
            return Err(Error::config("noise_psd", "must be finite"));
        }
        if self.geometry.rrh_positions.len() != self.num_rrh {
            return Err(Error::config(
                "rrh_positions",
                format!("expected {} positions", self.num_rrh),
            ));
        }
        match &self.geometry.ue_layout {
            UeLayout::Fixed(p) if p.len() != self.num_ue => {
                return Err(Error::config(
                    "ue_positions",
                    format!("expected {} positions", self.num_ue),
                ))
            }
            UeLayout::Uniform { side_km } if !(*side_km > 0.0) => {
                return Err(Error::config("side_km", "must be > 0"))
            }
            _ => {}
        }
        Ok(())
    }
}

fn ring_positions(n: usize, side_km: f64) -> Vec<Position> {
    let c = side_km / 2.0;
    (0..n)
        .map(|j| {
            let a = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
            [c + c * a.cos(), c + c * a.sin()]
        })
        .collect()
}

fn check_len(name: &str, v: &[f64], n: usize) -> Result<()> {
    if v.len() != n {
        return Err(Error::config(
            name,
            format!("expected {n} entries, got {}", v.len()),
        ));
    }
    Ok(())
}

fn check_all(name: &str, v: &[f64], ok: impl Fn(f64) -> bool, reason: &str) -> Result<()> {
    if v.iter().all(|&x| x.is_finite() && ok(x)) {
        Ok(())
    } else {
        Err(Error::config(name, reason))
    }
}

/// One offloaded task: U_i = (F_i, D_i) with its end-to-end deadline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub cpu_cycles: f64,
    pub result_bits: f64,
    pub deadline: f64,
}

impl Task {
    pub fn new(cpu_cycles: f64, result_bits: f64, deadline: f64) -> Self {
        Task {
            cpu_cycles,
            result_bits,
            deadline,
        }
    }

    pub fn validate(&self, i: usize) -> Result<()> {
        if !(self.cpu_cycles > 0.0 && self.cpu_cycles.is_finite()) {
            return Err(Error::config(
                format!("tasks[{i}].cpu_cycles"),
                "must be > 0",
            ));
        }
        if !(self.result_bits >= 0.0 && self.result_bits.is_finite()) {
            return Err(Error::config(
                format!("tasks[{i}].result_bits"),
                "must be >= 0",
            ));
        }
        if !(self.deadline > 0.0 && self.deadline.is_finite()) {
            return Err(Error::config(format!("tasks[{i}].deadline"), "must be > 0"));
        }
        Ok(())
    }
}

impl Default for Task {
    fn default() -> Self {
        Task::new(1500.0, 1000.0, 0.1)
    }
}

/// Validated scenario: system constants, one task per UE and the base seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub system: SystemConfig,
    pub tasks: Vec<Task>,
    pub seed: u64,
}

impl Scenario {
    pub fn table1() -> Self {
        let system = SystemConfig::default();
        let tasks = vec![Task::default(); system.num_ue];
        Scenario {
            system,
            tasks,
            seed: 42,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        if self.tasks.len() != self.system.num_ue {
            return Err(Error::config(
                "tasks",
                format!(
                    "expected {} tasks, got {}",
                    self.system.num_ue,
                    self.tasks.len()
                ),
            ));
        }
        for (i, t) in self.tasks.iter().enumerate() {
            t.validate(i)?;
        }
        Ok(())
    }

    /// Same scenario with `n` UEs. Existing per-UE entries are kept; new UEs
    /// copy the last UE's task and constants.
    pub fn with_num_ue(&self, n: usize) -> Scenario {
        let mut s = self.clone();
        let sys = &mut s.system;
        let extend = |v: &mut Vec<f64>| {
            let last = *v.last().expect("nonempty per-UE vector");
            v.resize(n, last);
        };
        extend(&mut sys.clone_capacity_limit);
        extend(&mut sys.tradeoff);
        extend(&mut sys.bandwidth);
        extend(&mut sys.cloud_exponent);
        extend(&mut sys.switched_capacitance);
        sys.num_ue = n;
        if let UeLayout::Fixed(p) = &mut sys.geometry.ue_layout {
            let last = *p.last().expect("nonempty layout");
            p.resize(n, last);
        }
        let last = *s.tasks.last().expect("nonempty tasks");
        s.tasks.resize(n, last);
        s
    }
}

// ---------------------------------------------------------------------------
// Scenario file

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Scalar<T> {
    One(T),
    Many(Vec<T>),
}

impl Scalar<f64> {
    fn expand(self, n: usize) -> Vec<f64> {
        match self {
            Scalar::One(x) => vec![x; n],
            Scalar::Many(v) => v,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemSection {
    num_rrh: Option<usize>,
    antennas_per_rrh: Option<usize>,
    num_ue: Option<usize>,
    rrh_power_limit: Option<Scalar<f64>>,
    clone_capacity_limit: Option<Scalar<f64>>,
    tradeoff: Option<Scalar<f64>>,
    bandwidth: Option<Scalar<f64>>,
    fronthaul_limit: Option<Scalar<f64>>,
    cloud_exponent: Option<Scalar<f64>>,
    switched_capacitance: Option<Scalar<f64>>,
    stability_epsilon: Option<f64>,
    noise_psd: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskEntry {
    cpu_cycles: Option<f64>,
    result_bits: Option<f64>,
    deadline: Option<f64>,
}

impl TaskEntry {
    fn into_task(self, i: usize) -> Result<Task> {
        let req = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::config(format!("tasks[{i}].{name}"), "missing required field"))
        };
        Ok(Task {
            cpu_cycles: req(self.cpu_cycles, "cpu_cycles")?,
            result_bits: req(self.result_bits, "result_bits")?,
            deadline: req(self.deadline, "deadline")?,
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum TasksSection {
    Shared(TaskEntry),
    PerUe(Vec<TaskEntry>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometrySection {
    side_km: Option<f64>,
    rrh_positions: Option<Vec<Position>>,
    ue_positions: Option<Vec<Position>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default)]
    system: SystemSection,
    tasks: Option<TasksSection>,
    #[serde(default)]
    geometry: GeometrySection,
    seed: Option<u64>,
}

/// Parses and validates a JSON scenario document. Absent fields take the
/// Table-1 defaults; tasks default to F = 1500 cycles, D = 1000 bits,
/// T_max = 0.1 s for every UE.
pub fn load_config(source: &str) -> Result<Scenario> {
    let file: ScenarioFile =
        serde_json::from_str(source).map_err(|e| Error::Parse(e.to_string()))?;
    let sys = file.system;
    let num_rrh = sys.num_rrh.unwrap_or(4);
    let num_ue = sys.num_ue.unwrap_or(5);
    let mut system = SystemConfig::uniform(num_rrh, sys.antennas_per_rrh.unwrap_or(2), num_ue);

    let set = |slot: &mut Vec<f64>, v: Option<Scalar<f64>>, n: usize| {
        if let Some(v) = v {
            *slot = v.expand(n);
        }
    };
    set(&mut system.rrh_power_limit, sys.rrh_power_limit, num_rrh);
    set(&mut system.fronthaul_limit, sys.fronthaul_limit, num_rrh);
    set(
        &mut system.clone_capacity_limit,
        sys.clone_capacity_limit,
        num_ue,
    );
    set(&mut system.tradeoff, sys.tradeoff, num_ue);
    set(&mut system.bandwidth, sys.bandwidth, num_ue);
    set(&mut system.cloud_exponent, sys.cloud_exponent, num_ue);
    set(
        &mut system.switched_capacitance,
        sys.switched_capacitance,
        num_ue,
    );
    if let Some(e) = sys.stability_epsilon {
        system.stability_epsilon = e;
    }
    if let Some(p) = sys.noise_psd {
        system.noise_psd_dbm_hz = p;
    }

    let geo = file.geometry;
    let side = geo.side_km.unwrap_or(DEFAULT_SIDE_KM);
    let mut geometry = Geometry::square(side);
    if num_rrh != 4 {
        geometry.rrh_positions = ring_positions(num_rrh, side);
    }
    if let Some(p) = geo.rrh_positions {
        geometry.rrh_positions = p;
    }
    if let Some(p) = geo.ue_positions {
        geometry.ue_layout = UeLayout::Fixed(p);
    }
    system.geometry = geometry;

    let tasks = match file.tasks {
        None => vec![Task::default(); num_ue],
        Some(TasksSection::Shared(t)) => vec![t.into_task(0)?; num_ue],
        Some(TasksSection::PerUe(v)) => v
            .into_iter()
            .enumerate()
            .map(|(i, t)| t.into_task(i))
            .collect::<Result<_>>()?,
    };

    let scenario = Scenario {
        system,
        tasks,
        seed: file.seed.unwrap_or(42),
    };
    scenario.validate()?;
    Ok(scenario)
}

// ---------------------------------------------------------------------------
// Propagation

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Path and penetration loss, 127 + 25 log10(d) dB with d in km.
pub fn path_loss_db(distance_km: f64) -> Result<f64> {
    if !(distance_km > 0.0) {
        return Err(Error::domain(format!(
            "path loss needs a positive distance, got {distance_km}"
        )));
    }
    Ok(127.0 + 25.0 * distance_km.log10())
}

/// Linear power gain for a distance in km.
pub fn path_gain(distance_km: f64) -> Result<f64> {
    Ok(10f64.powf(-path_loss_db(distance_km)? / 10.0))
}

/// Complex channels h_ij for every (UE, RRH) pair plus per-UE noise powers.
///
/// Layout is UE-major: entry `(i, j, k)` lives at `(i * L + j) * K + k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelState {
    num_ue: usize,
    num_rrh: usize,
    antennas: usize,
    gains: Vec<Complex64>,
    noise_power: Vec<f64>,
}

impl ChannelState {
    pub fn new(
        num_ue: usize,
        num_rrh: usize,
        antennas: usize,
        gains: Vec<Complex64>,
        noise_power: Vec<f64>,
    ) -> Result<Self> {
        if gains.len() != num_ue * num_rrh * antennas {
            return Err(Error::Dimension(format!(
                "channel tensor has {} entries, expected {}",
                gains.len(),
                num_ue * num_rrh * antennas
            )));
        }
        if noise_power.len() != num_ue {
            return Err(Error::Dimension("one noise power per UE".into()));
        }
        if noise_power.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::domain("noise power must be > 0"));
        }
        Ok(ChannelState {
            num_ue,
            num_rrh,
            antennas,
            gains,
            noise_power,
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

    /// h_ij.
    pub fn link(&self, i: usize, j: usize) -> &[Complex64] {
        let k = self.antennas;
        let start = (i * self.num_rrh + j) * k;
        &self.gains[start..start + k]
    }

    /// h_i stacked over all RRHs (length L*K).
    pub fn user(&self, i: usize) -> &[Complex64] {
        let w = self.num_rrh * self.antennas;
        &self.gains[i * w..(i + 1) * w]
    }

    pub fn noise_power(&self, i: usize) -> f64 {
        self.noise_power[i]
    }

    pub fn noise_powers(&self) -> &[f64] {
        &self.noise_power
    }

    pub fn gains(&self) -> &[Complex64] {
        &self.gains
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// UE coordinates for the given seed. UE `i` draws from its own RNG stream,
/// so adding UEs leaves the earlier ones in place.
pub fn ue_positions(config: &SystemConfig, seed: u64) -> Vec<Position> {
    match &config.geometry.ue_layout {
        UeLayout::Fixed(p) => p.clone(),
        UeLayout::Uniform { side_km } => (0..config.num_ue)
            .map(|i| {
                let mut rng = stream_rng(seed, 2 * i as u64);
                [rng.random::<f64>() * side_km, rng.random::<f64>() * side_km]
            })
            .collect(),
    }
}

/// Draws h_ij = sqrt(g_ij) w with w ~ CN(0, I_K) and sets σ_i² from the noise
/// PSD and bandwidth. Deterministic in `(config, seed)`.
pub fn generate_channels(config: &SystemConfig, seed: u64) -> Result<ChannelState> {
    config.validate()?;
    let (n, l, k) = (config.num_ue, config.num_rrh, config.antennas_per_rrh);
    let ues = ue_positions(config, seed);
    let normal = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid std dev");
    let mut gains = Vec::with_capacity(n * l * k);
    for (i, ue) in ues.iter().enumerate() {
        let mut rng = stream_rng(seed, 2 * i as u64 + 1);
        for (j, rrh) in config.geometry.rrh_positions.iter().enumerate() {
            let d = ((ue[0] - rrh[0]).powi(2) + (ue[1] - rrh[1]).powi(2)).sqrt();
            if d == 0.0 {
                return Err(Error::domain(format!("UE {i} coincides with RRH {j}")));
            }
            let amp = path_gain(d)?.sqrt();
            for _ in 0..k {
                let re = normal.sample(&mut rng);
                let im = normal.sample(&mut rng);
                gains.push(Complex64::new(re, im) * amp);
            }
        }
    }
    let noise = (0..n).map(|i| config.noise_power(i)).collect();
    ChannelState::new(n, l, k, gains, noise)
}
