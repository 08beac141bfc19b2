//! Primal-dual interior-point method on the homogeneous self-dual embedding,
//! with Nesterov-Todd scaling and a Mehrotra predictor-corrector.

use nalgebra::{DMatrix, DVector};

use super::cones::{self, Block, BlockKind, NtScaling};
use super::problem::{Cone, ConicProblem};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iter: usize,
    pub static_reg: f64,
    pub refine_steps: usize,
    /// Print one line per iteration to stderr.
    pub verbose: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            gap_tol: 1e-8,
            feas_tol: 1e-8,
            max_iter: 100,
            static_reg: 1e-11,
            refine_steps: 5,
            verbose: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    /// Primal infeasible; `y` holds a Farkas certificate.
    Infeasible,
    /// Dual infeasible; `x` holds an improving ray.
    Unbounded,
    /// Iteration limit or numerical breakdown before reaching tolerance.
    MaxIterations,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::MaxIterations => "max-iterations",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    /// Slack, one entry per row of A.
    pub s: Vec<f64>,
    /// Dual multipliers, one entry per row of A.
    pub y: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// Relative duality gap.
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

impl SolveReport {
    /// True for an optimal solve or a stalled one whose residuals are all below `tol`.
    pub fn near_optimal(&self, tol: f64) -> bool {
        match self.status {
            SolveStatus::Optimal => true,
            SolveStatus::MaxIterations => {
                self.gap <= tol && self.primal_residual <= tol && self.dual_residual <= tol
            }
            _ => false,
        }
    }
}

/// Pure centering steps taken once tolerances are met; the primal point of a
/// well-centred iterate is much closer to the optimum than the gap suggests.
const MAX_CENTERING_STEPS: usize = 6;

/// Equality rows and cone rows split out of a `ConicProblem`.
struct Split {
    a: DMatrix<f64>,
    b: DVector<f64>,
    g: DMatrix<f64>,
    h: DVector<f64>,
    c: DVector<f64>,
    blocks: Vec<Block>,
    eq_rows: Vec<usize>,
    cone_rows: Vec<usize>,
    /// Equality rows found inconsistent during presolve.
    inconsistent: bool,
}

fn split(p: &ConicProblem) -> Split {
    let n = p.num_vars();
    let mut eq_rows = Vec::new();
    let mut cone_rows = Vec::new();
    let mut blocks = Vec::new();
    let mut row = 0;
    for cone in &p.cones {
        let d = cone.dim();
        match cone {
            Cone::Zero(_) => eq_rows.extend(row..row + d),
            Cone::NonNeg(_) | Cone::Soc(_) => {
                let kind = if matches!(cone, Cone::NonNeg(_)) {
                    BlockKind::NonNeg
                } else {
                    BlockKind::Soc
                };
                blocks.push(Block {
                    kind,
                    offset: cone_rows.len(),
                    dim: d,
                });
                cone_rows.extend(row..row + d);
            }
        }
        row += d;
    }
    let (kept, inconsistent) = independent_rows(p, &eq_rows);
    let a = DMatrix::from_fn(kept.len(), n, |r, c| p.a[(kept[r], c)]);
    let b = DVector::from_iterator(kept.len(), kept.iter().map(|&r| p.b[r]));
    let g = DMatrix::from_fn(cone_rows.len(), n, |r, c| p.a[(cone_rows[r], c)]);
    let h = DVector::from_iterator(cone_rows.len(), cone_rows.iter().map(|&r| p.b[r]));
    Split {
        a,
        b,
        g,
        h,
        c: DVector::from_column_slice(&p.c),
        blocks,
        eq_rows: kept,
        cone_rows,
        inconsistent,
    }
}

/// Modified Gram-Schmidt over equality rows; drops linearly dependent rows and
/// flags the system inconsistent when a dropped row disagrees on b.
fn independent_rows(p: &ConicProblem, rows: &[usize]) -> (Vec<usize>, bool) {
    const TOL: f64 = 1e-10;
    let n = p.num_vars();
    let mut basis: Vec<(DVector<f64>, f64)> = Vec::new();
    let mut kept = Vec::new();
    let mut inconsistent = false;
    for &r in rows {
        let mut v = DVector::from_fn(n, |c, _| p.a[(r, c)]);
        let mut rhs = p.b[r];
        let norm0 = v.norm();
        for (q, bq) in &basis {
            let coef = q.dot(&v);
            v.axpy(-coef, q, 1.0);
            rhs -= coef * bq;
        }
        let norm = v.norm();
        if norm <= TOL * norm0.max(1.0) {
            if rhs.abs() > 1e-8 * (1.0 + p.b[r].abs()) {
                inconsistent = true;
            }
            continue;
        }
        basis.push((v / norm, rhs / norm));
        kept.push(r);
    }
    (kept, inconsistent)
}

/// Factorized reduced KKT system for a fixed scaling.
struct Kkt<'a> {
    sp: &'a Split,
    w: &'a NtScaling,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    refine: usize,
}

impl<'a> Kkt<'a> {
    fn new(sp: &'a Split, w: &'a NtScaling, reg: f64, refine: usize) -> Option<Self> {
        let n = sp.c.len();
        let p = sp.a.nrows();
        let m = sp.g.nrows();
        let mut wg = DMatrix::zeros(m, n);
        let mut col = vec![0.0; m];
        for j in 0..n {
            w.apply_inv(sp.g.column(j).as_slice(), &mut col);
            wg.column_mut(j).copy_from_slice(&col);
        }
        let hmat = wg.tr_mul(&wg);
        let mut mat = DMatrix::zeros(n + p, n + p);
        mat.view_mut((0, 0), (n, n)).copy_from(&hmat);
        mat.view_mut((n, 0), (p, n)).copy_from(&sp.a);
        mat.view_mut((0, n), (n, p)).copy_from(&sp.a.transpose());
        let mut reg_mat = mat;
        for i in 0..n {
            reg_mat[(i, i)] += reg * (1.0 + hmat[(i, i)]);
        }
        for i in n..n + p {
            reg_mat[(i, i)] -= reg;
        }
        let lu = reg_mat.lu();
        if !lu.is_invertible() {
            return None;
        }
        Some(Kkt { sp, w, lu, refine })
    }

    fn w_inv_sq(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut t = vec![0.0; v.len()];
        let mut out = vec![0.0; v.len()];
        self.w.apply_inv(v.as_slice(), &mut t);
        self.w.apply_inv(&t, &mut out);
        DVector::from_vec(out)
    }

    fn reduced_solve(
        &self,
        q1: &DVector<f64>,
        q2: &DVector<f64>,
        q3: &DVector<f64>,
    ) -> Option<(DVector<f64>, DVector<f64>, DVector<f64>)> {
        let n = q1.len();
        let p = q2.len();
        let wq3 = self.w_inv_sq(q3);
        let mut rhs = DVector::zeros(n + p);
        rhs.rows_mut(0, n).copy_from(&(q1 + self.sp.g.tr_mul(&wq3)));
        rhs.rows_mut(n, p).copy_from(q2);
        let sol = self.lu.solve(&rhs)?;
        let dx = sol.rows(0, n).into_owned();
        let dy = sol.rows(n, p).into_owned();
        let dz = self.w_inv_sq(&(&self.sp.g * &dx - q3));
        Some((dx, dy, dz))
    }

    /// Solves  Aᵀdy + Gᵀdz = q1,  A dx = q2,  G dx − W²dz = q3, refining
    /// against the unreduced system.
    fn solve(
        &self,
        q1: &DVector<f64>,
        q2: &DVector<f64>,
        q3: &DVector<f64>,
    ) -> Option<(DVector<f64>, DVector<f64>, DVector<f64>)> {
        let (mut dx, mut dy, mut dz) = self.reduced_solve(q1, q2, q3)?;
        let scale = 1.0 + q1.amax().max(q2.amax()).max(apply(self.w, q3, true).amax());
        let mut best = f64::INFINITY;
        for _ in 0..self.refine {
            let r1 = q1 - self.sp.a.tr_mul(&dy) - self.sp.g.tr_mul(&dz);
            let r2 = q2 - &self.sp.a * &dx;
            let w2dz = apply(self.w, &apply(self.w, &dz, false), false);
            let r3 = q3 - &self.sp.g * &dx + w2dz;
            let err = r1
                .amax()
                .max(r2.amax())
                .max(apply(self.w, &r3, true).amax());
            if err <= 1e-15 * scale || err >= 0.5 * best {
                break;
            }
            best = err;
            let (ex, ey, ez) = self.reduced_solve(&r1, &r2, &r3)?;
            dx += ex;
            dy += ey;
            dz += ez;
        }
        if dx
            .iter()
            .chain(dy.iter())
            .chain(dz.iter())
            .any(|v| !v.is_finite())
        {
            return None;
        }
        Some((dx, dy, dz))
    }
}

fn apply(w: &NtScaling, v: &DVector<f64>, inverse: bool) -> DVector<f64> {
    let mut out = vec![0.0; v.len()];
    if inverse {
        w.apply_inv(v.as_slice(), &mut out);
    } else {
        w.apply(v.as_slice(), &mut out);
    }
    DVector::from_vec(out)
}

fn jordan(a: &DVector<f64>, b: &DVector<f64>, blocks: &[Block]) -> DVector<f64> {
    let mut out = vec![0.0; a.len()];
    cones::jordan(a.as_slice(), b.as_slice(), blocks, &mut out);
    DVector::from_vec(out)
}

fn jordan_div(l: &DVector<f64>, v: &DVector<f64>, blocks: &[Block]) -> DVector<f64> {
    let mut out = vec![0.0; l.len()];
    cones::jordan_div(l.as_slice(), v.as_slice(), blocks, &mut out);
    DVector::from_vec(out)
}

fn identity(m: usize, blocks: &[Block]) -> DVector<f64> {
    let mut e = vec![0.0; m];
    cones::add_identity(&mut e, blocks, 1.0);
    DVector::from_vec(e)
}

fn push_interior(v: &mut DVector<f64>, blocks: &[Block]) {
    let shift = cones::interior_shift(v.as_slice(), blocks);
    if shift >= -1e-8 * v.amax().max(1.0) {
        cones::add_identity(v.as_mut_slice(), blocks, 1.0 + shift);
    }
}

#[derive(Clone)]
struct Iterate {
    x: DVector<f64>,
    y: DVector<f64>,
    z: DVector<f64>,
    s: DVector<f64>,
    tau: f64,
    kappa: f64,
}

/// Solves a conic problem. Structural errors are returned as `Err`; solver
/// outcomes (including infeasibility) are reported through `SolveStatus`.
pub fn solve(problem: &ConicProblem, settings: &SolverSettings) -> Result<SolveReport> {
    problem.validate()?;
    let sp = split(problem);
    let n = sp.c.len();
    let p = sp.a.nrows();
    let m = sp.g.nrows();
    let blocks = &sp.blocks;
    let nu = cones::degree(blocks) as f64;

    if sp.inconsistent {
        return Ok(assemble(
            problem,
            &sp,
            SolveStatus::Infeasible,
            None,
            0,
            [f64::NAN; 5],
        ));
    }

    // Starting point from least-squares problems with identity scaling.
    let w0 = NtScaling::identity(blocks, m);
    let kkt0 = match Kkt::new(&sp, &w0, settings.static_reg, settings.refine_steps) {
        Some(k) => k,
        None => {
            return Ok(assemble(
                problem,
                &sp,
                SolveStatus::MaxIterations,
                None,
                0,
                [f64::NAN; 5],
            ));
        }
    };
    let (x0, _, zneg) = kkt0.solve(&DVector::zeros(n), &sp.b, &sp.h).unwrap_or((
        DVector::zeros(n),
        DVector::zeros(p),
        DVector::zeros(m),
    ));
    let mut s0 = -zneg;
    let (_, y0, mut z0) = kkt0
        .solve(&-&sp.c, &DVector::zeros(p), &DVector::zeros(m))
        .unwrap_or((DVector::zeros(n), DVector::zeros(p), DVector::zeros(m)));
    push_interior(&mut s0, blocks);
    push_interior(&mut z0, blocks);
    let mut it = Iterate {
        x: x0,
        y: y0,
        z: z0,
        s: s0,
        tau: 1.0,
        kappa: 1.0,
    };
    let e = identity(m, blocks);

    let bnorm = 1.0 + sp.b.norm();
    let hnorm = 1.0 + sp.h.norm();
    let cnorm = 1.0 + sp.c.norm();
    let mut metrics;
    let mut iterations = 0;
    let mut status = SolveStatus::MaxIterations;
    let mut centering_done = 0;
    let mut centered = false;
    // Last iterate meeting every tolerance.
    let mut converged: Option<(Iterate, [f64; 5], usize)> = None;

    loop {
        // Residuals.
        let rx = sp.a.tr_mul(&it.y) + sp.g.tr_mul(&it.z) + &sp.c * it.tau;
        let ry = -(&sp.a * &it.x) + &sp.b * it.tau;
        let rz = -(&sp.g * &it.x) + &sp.h * it.tau - &it.s;
        let cx = sp.c.dot(&it.x);
        let by_hz = sp.b.dot(&it.y) + sp.h.dot(&it.z);
        let rtau = -cx - by_hz - it.kappa;
        let sz = it.s.dot(&it.z);
        let mu = (sz + it.tau * it.kappa) / (nu + 1.0);

        let pcost = cx / it.tau;
        let dcost = -by_hz / it.tau;
        let pres = (ry.norm() / it.tau / bnorm).max(rz.norm() / it.tau / hnorm);
        let dres = rx.norm() / it.tau / cnorm;
        let gap = (sz / (it.tau * it.tau)) / (1.0 + pcost.abs());
        metrics = [pcost, dcost, gap, pres, dres];
        if settings.verbose {
            eprintln!(
                "{iterations:3} pcost {pcost:+.9e} dcost {dcost:+.9e} gap {gap:.2e} pres {pres:.2e} dres {dres:.2e} tau {:.2e} kappa {:.2e}",
                it.tau, it.kappa
            );
        }

        let centering =
            pres <= settings.feas_tol && dres <= settings.feas_tol && gap <= settings.gap_tol;
        if centering {
            converged = Some((it.clone(), metrics, iterations));
            if centering_done >= MAX_CENTERING_STEPS || centered {
                break;
            }
        } else if converged.is_some() {
            break;
        }
        if by_hz < 0.0 {
            let ray = sp.a.tr_mul(&it.y) + sp.g.tr_mul(&it.z);
            if ray.norm() / -by_hz <= settings.feas_tol {
                status = SolveStatus::Infeasible;
                break;
            }
        }
        if cx < 0.0 {
            let ax = (&sp.a * &it.x).norm();
            let gxs = (&sp.g * &it.x + &it.s).norm();
            if ax.max(gxs) / -cx <= settings.feas_tol {
                status = SolveStatus::Unbounded;
                break;
            }
        }
        if iterations >= settings.max_iter {
            break;
        }
        iterations += 1;

        let w = NtScaling::compute(it.s.as_slice(), it.z.as_slice(), blocks);
        let lambda = apply(&w, &it.z, false);
        let kkt = match Kkt::new(&sp, &w, settings.static_reg, settings.refine_steps) {
            Some(k) => k,
            None => break,
        };
        let Some((x2, y2, z2)) = kkt.solve(&-&sp.c, &sp.b, &sp.h) else {
            break;
        };
        let denom_base = -sp.c.dot(&x2) - sp.b.dot(&y2) - sp.h.dot(&z2);

        let direction = |eta: f64, r_s: &DVector<f64>, r_kappa: f64| {
            let q1 = -&rx * eta;
            let q2 = &ry * eta;
            let q3 = &rz * eta - apply(&w, r_s, false);
            let (x1, y1, z1) = kkt.solve(&q1, &q2, &q3)?;
            let num =
                -eta * rtau + r_kappa / it.tau + sp.c.dot(&x1) + sp.b.dot(&y1) + sp.h.dot(&z1);
            let den = it.kappa / it.tau + denom_base;
            let dtau = num / den;
            if !dtau.is_finite() {
                return None;
            }
            let dx = x1 + &x2 * dtau;
            let dy = y1 + &y2 * dtau;
            let dz = z1 + &z2 * dtau;
            // ds = W r_s − W² dz
            let wdz = apply(&w, &dz, false);
            let ds = apply(&w, &(r_s - &wdz), false);
            let dkappa = (r_kappa - it.kappa * dtau) / it.tau;
            Some((dx, dy, dz, ds, dtau, dkappa))
        };
        let step_len = |dz: &DVector<f64>, ds: &DVector<f64>, dtau: f64, dkappa: f64| {
            let mut a = cones::max_step(it.s.as_slice(), ds.as_slice(), blocks, f64::INFINITY);
            a = a.min(cones::max_step(
                it.z.as_slice(),
                dz.as_slice(),
                blocks,
                f64::INFINITY,
            ));
            if dtau < 0.0 {
                a = a.min(-it.tau / dtau);
            }
            if dkappa < 0.0 {
                a = a.min(-it.kappa / dkappa);
            }
            a
        };

        // Predictor.
        let Some((_, _, dz_a, ds_a, dtau_a, dkappa_a)) =
            direction(1.0, &-&lambda, -it.tau * it.kappa)
        else {
            break;
        };
        let alpha_a = step_len(&dz_a, &ds_a, dtau_a, dkappa_a).min(1.0);
        let mut sigma = (1.0 - alpha_a).powi(3);
        let mut cross = jordan(&apply(&w, &ds_a, true), &apply(&w, &dz_a, false), blocks);
        if centering {
            sigma = 1.0;
            cross.fill(0.0);
            centering_done += 1;
        }

        // Corrector.
        let target = -jordan(&lambda, &lambda, blocks) + &e * (sigma * mu) - cross;
        let r_s = jordan_div(&lambda, &target, blocks);
        let r_kappa =
            -it.tau * it.kappa + sigma * mu - if centering { 0.0 } else { dtau_a * dkappa_a };
        let Some((dx, dy, dz, ds, dtau, dkappa)) = direction(1.0 - sigma, &r_s, r_kappa) else {
            break;
        };
        let alpha = (0.99 * step_len(&dz, &ds, dtau, dkappa)).min(1.0);
        if settings.verbose {
            eprintln!("    sigma {sigma:.2e} alpha {alpha:.3e}");
        }
        if centering {
            centered = alpha * dx.norm() <= 1e-9 * (it.tau + it.x.norm());
        }
        if alpha < 1e-12 {
            break;
        }
        it.x += &dx * alpha;
        it.y += &dy * alpha;
        it.z += &dz * alpha;
        it.s += &ds * alpha;
        it.tau += alpha * dtau;
        it.kappa += alpha * dkappa;
        if !(it.tau > 0.0 && it.kappa > 0.0) {
            break;
        }
    }
    if let Some((best, m, k)) = converged {
        return Ok(assemble(
            problem,
            &sp,
            SolveStatus::Optimal,
            Some(&best),
            k,
            m,
        ));
    }
    Ok(assemble(
        problem,
        &sp,
        status,
        Some(&it),
        iterations,
        metrics,
    ))
}

fn assemble(
    problem: &ConicProblem,
    sp: &Split,
    status: SolveStatus,
    it: Option<&Iterate>,
    iterations: usize,
    metrics: [f64; 5],
) -> SolveReport {
    let n = problem.num_vars();
    let rows = problem.num_rows();
    let mut x = vec![0.0; n];
    let mut s = vec![0.0; rows];
    let mut y = vec![0.0; rows];
    if let Some(it) = it {
        // Certificates are reported unscaled; solutions are divided by τ.
        let scale = match status {
            SolveStatus::Infeasible | SolveStatus::Unbounded => 1.0,
            _ => 1.0 / it.tau,
        };
        for (k, v) in it.x.iter().enumerate() {
            x[k] = v * scale;
        }
        for (k, &r) in sp.cone_rows.iter().enumerate() {
            s[r] = it.s[k] * scale;
            y[r] = it.z[k] * scale;
        }
        for (k, &r) in sp.eq_rows.iter().enumerate() {
            y[r] = it.y[k] * scale;
        }
        if status == SolveStatus::Infeasible {
            let hz: f64 = -(problem.b.iter().zip(&y).map(|(b, y)| b * y).sum::<f64>());
            if hz > 0.0 {
                y.iter_mut().for_each(|v| *v /= hz);
            }
        }
        if status == SolveStatus::Unbounded {
            let cx: f64 = -(problem.c.iter().zip(&x).map(|(c, x)| c * x).sum::<f64>());
            if cx > 0.0 {
                x.iter_mut().for_each(|v| *v /= cx);
                s.iter_mut().for_each(|v| *v /= cx);
            }
        }
    }
    let [pcost, dcost, gap, pres, dres] = metrics;
    SolveReport {
        status,
        x,
        s,
        y,
        primal_objective: pcost,
        dual_objective: dcost,
        gap,
        primal_residual: pres,
        dual_residual: dres,
        iterations,
    }
}
