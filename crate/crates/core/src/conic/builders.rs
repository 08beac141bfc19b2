//! Beamforming subproblems in conic form.
//!
//! Channels are normalized by the noise amplitude (h / σ_i) so that every
//! rate constraint carries a unit noise term.

use num_complex::Complex64;

use super::model::{AffExpr, ComplexVar, SocpModel};
use super::problem::ConicProblem;
use crate::error::{Error, Result};
use crate::ran::{BeamformerSet, FronthaulWeights};
use crate::scenario::ChannelState;

/// Where each beamformer block v_ij lives in the real decision vector.
#[derive(Debug, Clone)]
pub struct BeamformerLayout {
    num_ue: usize,
    num_rrh: usize,
    antennas: usize,
    blocks: Vec<Option<ComplexVar>>,
}

impl BeamformerLayout {
    fn new(model: &mut SocpModel, ch: &ChannelState, support: &[bool]) -> Self {
        let (n, l, k) = (ch.num_ue(), ch.num_rrh(), ch.antennas());
        let blocks = (0..n * l)
            .map(|idx| {
                support[idx].then(|| model.add_complex(&format!("v{}_{}", idx / l, idx % l), k))
            })
            .collect();
        BeamformerLayout {
            num_ue: n,
            num_rrh: l,
            antennas: k,
            blocks,
        }
    }

    pub fn block(&self, i: usize, j: usize) -> Option<&ComplexVar> {
        self.blocks[i * self.num_rrh + j].as_ref()
    }

    pub fn has_user(&self, i: usize) -> bool {
        (0..self.num_rrh).any(|j| self.block(i, j).is_some())
    }

    /// Number of real beamformer coordinates.
    pub fn num_real_vars(&self) -> usize {
        self.blocks.iter().flatten().map(|b| 2 * b.len).sum()
    }

    fn user_components(&self, i: usize) -> Vec<AffExpr> {
        (0..self.num_rrh)
            .filter_map(|j| self.block(i, j))
            .flat_map(|b| b.components())
            .collect()
    }

    /// Re and Im of Σ_j g_ij^H v_kj for stream `k` seen through `gains(j)`.
    fn inner(&self, k: usize, gains: impl Fn(usize) -> Vec<Complex64>) -> (AffExpr, AffExpr) {
        let mut re = AffExpr::default();
        let mut im = AffExpr::default();
        for j in 0..self.num_rrh {
            if let Some(b) = self.block(k, j) {
                let g = gains(j);
                re = re.add(&b.re_inner(&g));
                im = im.add(&b.im_inner(&g));
            }
        }
        (re, im)
    }

    pub fn extract(&self, x: &[f64]) -> BeamformerSet {
        let mut bf = BeamformerSet::zeros(self.num_ue, self.num_rrh, self.antennas);
        for i in 0..self.num_ue {
            for j in 0..self.num_rrh {
                if let Some(b) = self.block(i, j) {
                    bf.block_mut(i, j).copy_from_slice(&b.extract(x));
                }
            }
        }
        bf
    }

    /// Writes a beamformer set into a real vector of length `num_vars`.
    pub fn embed(&self, bf: &BeamformerSet, x: &mut [f64]) {
        for i in 0..self.num_ue {
            for j in 0..self.num_rrh {
                if let Some(b) = self.block(i, j) {
                    b.embed(bf.block(i, j), x);
                }
            }
        }
    }
}

/// Fronthaul constraint data: Σ_i ρ_ij ‖v_ij‖² r_i <= C_j with frozen rates.
#[derive(Debug, Clone, Copy)]
pub struct FronthaulData<'a> {
    pub weights: &'a FronthaulWeights,
    pub rates: &'a [f64],
    pub limits: &'a [f64],
}

/// Inputs for the weighted power-minimization step.
#[derive(Debug, Clone, Copy)]
pub struct PowerMinSpec<'a> {
    pub channels: &'a ChannelState,
    pub rate_floors: &'a [f64],
    pub bandwidth: &'a [f64],
    pub power_limits: &'a [f64],
    pub fronthaul: Option<FronthaulData<'a>>,
    /// Objective weights w_i in Σ_i w_i ‖v_i‖².
    pub weights: &'a [f64],
    /// Allowed blocks, indexed i * L + j. `None` allows every block.
    pub support: Option<&'a [bool]>,
}

/// Inputs for the WMMSE transmitter step.
#[derive(Debug, Clone, Copy)]
pub struct WmmseStepSpec<'a> {
    pub channels: &'a ChannelState,
    pub mse_weights: &'a [f64],
    pub receivers: &'a [Complex64],
    /// Power penalty weights w_i in Σ_i w_i ‖v_i‖².
    pub energy_weights: &'a [f64],
    pub rate_floors: &'a [f64],
    /// Phase θ_i used to linearize the floor of UE i as Re(e^{-jθ_i} h_i^H v_i).
    pub floor_phases: &'a [f64],
    pub bandwidth: &'a [f64],
    pub power_limits: &'a [f64],
    pub fronthaul: Option<FronthaulData<'a>>,
    pub support: Option<&'a [bool]>,
}

/// A built beamforming SOCP together with the maps back to problem units.
#[derive(Debug, Clone)]
pub struct BeamformingSocp {
    pub problem: ConicProblem,
    pub layout: BeamformerLayout,
    objective: ObjectiveMap,
}

#[derive(Debug, Clone, Copy)]
enum ObjectiveMap {
    /// value = scale · t²
    SquaredEpigraph { scale: f64, t: Option<usize> },
    /// value = scale · c'x + offset
    Linear { scale: f64, offset: f64 },
}

impl BeamformingSocp {
    pub fn beamformers(&self, x: &[f64]) -> BeamformerSet {
        self.layout.extract(x)
    }

    /// Objective of the original (unscaled) subproblem at solver point `x`.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        match self.objective {
            ObjectiveMap::SquaredEpigraph { scale, t } => t.map_or(0.0, |t| scale * x[t] * x[t]),
            ObjectiveMap::Linear { scale, offset } => {
                let cx: f64 = self.problem.c.iter().zip(x).map(|(c, v)| c * v).sum();
                scale * cx + offset
            }
        }
    }
}

fn check_len(name: &str, len: usize, want: usize) -> Result<()> {
    if len != want {
        return Err(Error::Dimension(format!(
            "{name} has {len} entries, expected {want}"
        )));
    }
    Ok(())
}

fn normalized_link(ch: &ChannelState, i: usize, j: usize, rotation: Complex64) -> Vec<Complex64> {
    let sigma = ch.noise_power(i).sqrt();
    ch.link(i, j).iter().map(|h| h * rotation / sigma).collect()
}

/// c = sqrt(1 − 2^(−R/B)), the SOC coefficient of a rate floor.
pub fn rate_floor_coefficient(rate: f64, bandwidth: f64) -> f64 {
    (-(-rate / bandwidth * std::f64::consts::LN_2).exp_m1()).sqrt()
}

/// ‖c · ([g_i^H v_k]_k, 1)‖ <= Re(g_i^H v_i) with g_i = e^{jθ} h_i / σ_i.
fn add_rate_floor(
    model: &mut SocpModel,
    layout: &BeamformerLayout,
    ch: &ChannelState,
    i: usize,
    coef: f64,
    theta: f64,
) {
    let rot = Complex64::from_polar(1.0, theta);
    let (signal, _) = layout.inner(i, |j| normalized_link(ch, i, j, rot));
    let mut xs = Vec::new();
    for k in (0..ch.num_ue()).filter(|&k| layout.has_user(k)) {
        let (re, im) = layout.inner(k, |j| normalized_link(ch, i, j, Complex64::new(1.0, 0.0)));
        xs.push(re.scaled(coef));
        xs.push(im.scaled(coef));
    }
    xs.push(AffExpr::constant(coef));
    model.add_soc(&format!("rate:{i}"), signal, xs);
}

fn add_power_limits(model: &mut SocpModel, layout: &BeamformerLayout, limits: &[f64]) {
    for (j, &p) in limits.iter().enumerate() {
        let xs: Vec<AffExpr> = (0..layout.num_ue)
            .filter_map(|i| layout.block(i, j))
            .flat_map(|b| b.components())
            .collect();
        if !xs.is_empty() {
            model.add_soc(&format!("power:{j}"), AffExpr::constant(p.sqrt()), xs);
        }
    }
}

fn add_fronthaul(
    model: &mut SocpModel,
    layout: &BeamformerLayout,
    fh: &FronthaulData,
) -> Result<()> {
    check_len("fronthaul rates", fh.rates.len(), layout.num_ue)?;
    check_len("fronthaul limits", fh.limits.len(), layout.num_rrh)?;
    for j in 0..layout.num_rrh {
        let mut xs = Vec::new();
        for i in 0..layout.num_ue {
            let w = fh.weights.get(i, j) * fh.rates[i] / fh.limits[j];
            if let (Some(b), true) = (layout.block(i, j), w > 0.0) {
                xs.extend(b.components().into_iter().map(|e| e.scaled(w.sqrt())));
            }
        }
        if !xs.is_empty() {
            model.add_soc(&format!("fronthaul:{j}"), AffExpr::constant(1.0), xs);
        }
    }
    Ok(())
}

fn support_mask(ch: &ChannelState, support: Option<&[bool]>) -> Result<Vec<bool>> {
    let nl = ch.num_ue() * ch.num_rrh();
    match support {
        Some(s) => {
            check_len("support", s.len(), nl)?;
            Ok(s.to_vec())
        }
        None => Ok(vec![true; nl]),
    }
}

/// min Σ w_i ‖v_i‖²  s.t. rate floors, per-RRH power and weighted fronthaul.
///
/// UEs with a zero floor get no variables. The floor of UE i is imposed as
/// sqrt(1 − 2^(−R_i/B_i)) ‖([h_i^H v_k]_k, σ_i)‖ <= Re(h_i^H v_i) with
/// Im(h_i^H v_i) = 0.
pub fn build_power_min_socp(spec: &PowerMinSpec) -> Result<BeamformingSocp> {
    let ch = spec.channels;
    let (n, l) = (ch.num_ue(), ch.num_rrh());
    check_len("rate floors", spec.rate_floors.len(), n)?;
    check_len("bandwidth", spec.bandwidth.len(), n)?;
    check_len("weights", spec.weights.len(), n)?;
    check_len("power limits", spec.power_limits.len(), l)?;
    if spec.rate_floors.iter().any(|r| !(*r >= 0.0)) {
        return Err(Error::domain("rate floors must be >= 0"));
    }
    if spec.weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::domain("objective weights must be finite and >= 0"));
    }
    let mut mask = support_mask(ch, spec.support)?;
    for i in (0..n).filter(|&i| spec.rate_floors[i] == 0.0) {
        mask[i * l..(i + 1) * l].iter_mut().for_each(|m| *m = false);
    }

    let mut model = SocpModel::new();
    let layout = BeamformerLayout::new(&mut model, ch, &mask);

    let wmax = spec.weights.iter().cloned().fold(0.0, f64::max);
    let mut t = None;
    if wmax > 0.0 {
        let tv = model.add_var("t");
        model.add_objective(&AffExpr::var(tv));
        let xs: Vec<AffExpr> = (0..n)
            .filter(|&i| spec.weights[i] > 0.0)
            .flat_map(|i| {
                let s = (spec.weights[i] / wmax).sqrt();
                layout
                    .user_components(i)
                    .into_iter()
                    .map(move |e| e.scaled(s))
            })
            .collect();
        model.add_soc("objective", AffExpr::var(tv), xs);
        t = Some(tv);
    }

    add_power_limits(&mut model, &layout, spec.power_limits);
    for i in (0..n).filter(|&i| spec.rate_floors[i] > 0.0) {
        let coef = rate_floor_coefficient(spec.rate_floors[i], spec.bandwidth[i]);
        add_rate_floor(&mut model, &layout, ch, i, coef, 0.0);
        let (_, im) = layout.inner(i, |j| normalized_link(ch, i, j, Complex64::new(1.0, 0.0)));
        if !im.terms.is_empty() {
            model.add_eq(&format!("phase:{i}"), im);
        }
    }
    if let Some(fh) = &spec.fronthaul {
        add_fronthaul(&mut model, &layout, fh)?;
    }
    Ok(BeamformingSocp {
        problem: model.build()?,
        layout,
        objective: ObjectiveMap::SquaredEpigraph { scale: wmax, t },
    })
}

/// min Σ_i φ_i e_i(v) + w_i ‖v_i‖² for fixed receivers, subject to rate floors,
/// per-RRH power and weighted fronthaul.
///
/// e_i = |u_i|² (Σ_k |h_i^H v_k|² + σ_i²) − 2 Re(u_i^* h_i^H v_i) + 1.
pub fn build_wmmse_step_socp(spec: &WmmseStepSpec) -> Result<BeamformingSocp> {
    let ch = spec.channels;
    let (n, l) = (ch.num_ue(), ch.num_rrh());
    check_len("mse weights", spec.mse_weights.len(), n)?;
    check_len("receivers", spec.receivers.len(), n)?;
    check_len("energy weights", spec.energy_weights.len(), n)?;
    check_len("rate floors", spec.rate_floors.len(), n)?;
    check_len("floor phases", spec.floor_phases.len(), n)?;
    check_len("bandwidth", spec.bandwidth.len(), n)?;
    check_len("power limits", spec.power_limits.len(), l)?;
    let finite_nonneg = |v: &f64| v.is_finite() && *v >= 0.0;
    if !spec.mse_weights.iter().all(finite_nonneg) || !spec.energy_weights.iter().all(finite_nonneg)
    {
        return Err(Error::domain(
            "MSE and energy weights must be finite and >= 0",
        ));
    }
    if spec.receivers.iter().any(|u| !u.is_finite()) {
        return Err(Error::domain("receivers must be finite"));
    }
    let mask = support_mask(ch, spec.support)?;

    let mut model = SocpModel::new();
    let layout = BeamformerLayout::new(&mut model, ch, &mask);
    let one = Complex64::new(1.0, 0.0);
    // Receivers in noise-normalized units: u h^H v = (u σ)(h/σ)^H v.
    let u: Vec<Complex64> = (0..n)
        .map(|i| spec.receivers[i] * ch.noise_power(i).sqrt())
        .collect();

    let scale = spec
        .mse_weights
        .iter()
        .sum::<f64>()
        .max(spec.energy_weights.iter().cloned().fold(0.0, f64::max));
    let mut offset = 0.0;
    let mut quad = Vec::new();
    let mut linear = AffExpr::default();
    if scale > 0.0 {
        for i in 0..n {
            let phi = spec.mse_weights[i];
            offset += phi * (u[i].norm_sqr() + 1.0);
            if phi == 0.0 {
                continue;
            }
            let a = (phi / scale).sqrt() * u[i].norm();
            if a > 0.0 {
                for k in (0..n).filter(|&k| layout.has_user(k)) {
                    let (re, im) = layout.inner(k, |j| normalized_link(ch, i, j, one));
                    quad.push(re.scaled(2.0 * a));
                    quad.push(im.scaled(2.0 * a));
                }
            }
            // −2 φ Re(u^* g^H v) = −2 φ Re((u g)^H v)
            let (re, _) = layout.inner(i, |j| normalized_link(ch, i, j, u[i]));
            linear = linear.add(&re.scaled(-2.0 * phi / scale));
        }
        for i in (0..n).filter(|&i| spec.energy_weights[i] > 0.0) {
            let s = 2.0 * (spec.energy_weights[i] / scale).sqrt();
            quad.extend(layout.user_components(i).into_iter().map(|e| e.scaled(s)));
        }
    }
    if !quad.is_empty() {
        // ‖M v‖² <= t  ⇔  ‖(2 M v, t − 1)‖ <= t + 1
        let t = model.add_var("t");
        model.add_objective(&AffExpr::var(t));
        quad.push(AffExpr::var(t).add(&AffExpr::constant(-1.0)));
        model.add_soc(
            "objective",
            AffExpr::var(t).add(&AffExpr::constant(1.0)),
            quad,
        );
    }
    model.add_objective(&linear);

    add_power_limits(&mut model, &layout, spec.power_limits);
    for i in (0..n).filter(|&i| spec.rate_floors[i] > 0.0) {
        let coef = rate_floor_coefficient(spec.rate_floors[i], spec.bandwidth[i]);
        add_rate_floor(&mut model, &layout, ch, i, coef, spec.floor_phases[i]);
    }
    if let Some(fh) = &spec.fronthaul {
        add_fronthaul(&mut model, &layout, fh)?;
    }
    Ok(BeamformingSocp {
        problem: model.build()?,
        layout,
        objective: ObjectiveMap::Linear { scale, offset },
    })
}
