//! Block operations on products of nonnegative orthants and second-order
//! cones: Jordan algebra, Nesterov-Todd scaling and step-to-boundary.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum BlockKind {
    NonNeg,
    Soc,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Block {
    pub kind: BlockKind,
    pub offset: usize,
    pub dim: usize,
}

impl Block {
    fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.dim
    }
}

/// Barrier degree: one per orthant coordinate and one per SOC.
pub(crate) fn degree(blocks: &[Block]) -> usize {
    blocks
        .iter()
        .map(|b| match b.kind {
            BlockKind::NonNeg => b.dim,
            BlockKind::Soc => 1,
        })
        .sum()
}

fn soc_det(x: &[f64]) -> f64 {
    let tail: f64 = x[1..].iter().map(|v| v * v).sum();
    x[0] * x[0] - tail
}

/// Smallest α with x + α e in the cone (negative when x is interior).
pub(crate) fn interior_shift(x: &[f64], blocks: &[Block]) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for b in blocks {
        let v = &x[b.range()];
        let need = match b.kind {
            BlockKind::NonNeg => v.iter().map(|&t| -t).fold(f64::NEG_INFINITY, f64::max),
            BlockKind::Soc => v[1..].iter().map(|t| t * t).sum::<f64>().sqrt() - v[0],
        };
        worst = worst.max(need);
    }
    worst
}

pub(crate) fn add_identity(x: &mut [f64], blocks: &[Block], alpha: f64) {
    for b in blocks {
        match b.kind {
            BlockKind::NonNeg => x[b.range()].iter_mut().for_each(|v| *v += alpha),
            BlockKind::Soc => x[b.offset] += alpha,
        }
    }
}

/// Jordan product x ∘ y.
pub(crate) fn jordan(x: &[f64], y: &[f64], blocks: &[Block], out: &mut [f64]) {
    for b in blocks {
        let (xv, yv) = (&x[b.range()], &y[b.range()]);
        let o = &mut out[b.range()];
        match b.kind {
            BlockKind::NonNeg => {
                for k in 0..b.dim {
                    o[k] = xv[k] * yv[k];
                }
            }
            BlockKind::Soc => {
                o[0] = xv.iter().zip(yv).map(|(a, c)| a * c).sum();
                for k in 1..b.dim {
                    o[k] = xv[0] * yv[k] + yv[0] * xv[k];
                }
            }
        }
    }
}

/// Solves λ ∘ u = v for u.
pub(crate) fn jordan_div(lambda: &[f64], v: &[f64], blocks: &[Block], out: &mut [f64]) {
    for b in blocks {
        let (l, vv) = (&lambda[b.range()], &v[b.range()]);
        let o = &mut out[b.range()];
        match b.kind {
            BlockKind::NonNeg => {
                for k in 0..b.dim {
                    o[k] = vv[k] / l[k];
                }
            }
            BlockKind::Soc => {
                let det = soc_det(l);
                let l1v1: f64 = l[1..].iter().zip(&vv[1..]).map(|(a, c)| a * c).sum();
                let u0 = (l[0] * vv[0] - l1v1) / det;
                o[0] = u0;
                for k in 1..b.dim {
                    o[k] = (vv[k] - u0 * l[k]) / l[0];
                }
            }
        }
    }
}

/// Largest α in (0, cap] keeping x + α dx in the cone interior boundary.
pub(crate) fn max_step(x: &[f64], dx: &[f64], blocks: &[Block], cap: f64) -> f64 {
    let mut alpha = cap;
    for b in blocks {
        let (v, d) = (&x[b.range()], &dx[b.range()]);
        match b.kind {
            BlockKind::NonNeg => {
                for k in 0..b.dim {
                    if d[k] < 0.0 {
                        alpha = alpha.min(-v[k] / d[k]);
                    }
                }
            }
            BlockKind::Soc => alpha = alpha.min(soc_step(v, d)),
        }
    }
    alpha.max(0.0)
}

fn soc_step(v: &[f64], d: &[f64]) -> f64 {
    let a = soc_det(d);
    let bh = v[0] * d[0] - v[1..].iter().zip(&d[1..]).map(|(x, y)| x * y).sum::<f64>();
    let c = soc_det(v).max(0.0);
    let mut alpha = f64::INFINITY;
    if d[0] < 0.0 {
        alpha = -v[0] / d[0];
    }
    // f(α) = c + 2 bh α + a α² must stay nonnegative.
    let scale = a.abs().max(bh.abs()).max(c);
    if a.abs() <= 1e-15 * scale {
        if bh < 0.0 {
            alpha = alpha.min(-c / (2.0 * bh));
        }
        return alpha;
    }
    let disc = bh * bh - a * c;
    if disc < 0.0 {
        return alpha;
    }
    let q = -(bh + bh.signum() * disc.sqrt());
    let mut roots = [f64::INFINITY; 2];
    if q != 0.0 {
        roots[0] = q / a;
        roots[1] = c / q;
    } else {
        roots[0] = (-bh + disc.sqrt()) / a;
        roots[1] = (-bh - disc.sqrt()) / a;
    }
    for r in roots {
        if r > 0.0 {
            alpha = alpha.min(r);
        }
    }
    alpha
}

/// Nesterov-Todd scaling W with W z = W^{-1} s = λ.
#[derive(Debug, Clone)]
pub(crate) struct NtScaling {
    blocks: Vec<Block>,
    /// Orthant: sqrt(s/z). SOC: normalized w̄ (first entry w̄_0).
    w: Vec<f64>,
    /// η per block (unused for orthants).
    eta: Vec<f64>,
}

impl NtScaling {
    pub fn identity(blocks: &[Block], m: usize) -> Self {
        let mut w = vec![0.0; m];
        for b in blocks {
            match b.kind {
                BlockKind::NonNeg => w[b.range()].iter_mut().for_each(|v| *v = 1.0),
                BlockKind::Soc => w[b.offset] = 1.0,
            }
        }
        NtScaling {
            blocks: blocks.to_vec(),
            w,
            eta: vec![1.0; blocks.len()],
        }
    }

    pub fn compute(s: &[f64], z: &[f64], blocks: &[Block]) -> Self {
        let mut w = vec![0.0; s.len()];
        let mut eta = vec![1.0; blocks.len()];
        for (bi, b) in blocks.iter().enumerate() {
            let (sv, zv) = (&s[b.range()], &z[b.range()]);
            match b.kind {
                BlockKind::NonNeg => {
                    for k in 0..b.dim {
                        w[b.offset + k] = (sv[k] / zv[k]).sqrt();
                    }
                }
                BlockKind::Soc => {
                    let sn = soc_det(sv).max(f64::MIN_POSITIVE).sqrt();
                    let zn = soc_det(zv).max(f64::MIN_POSITIVE).sqrt();
                    let dot: f64 = sv.iter().zip(zv).map(|(a, c)| a * c).sum::<f64>() / (sn * zn);
                    let gamma = ((1.0 + dot) / 2.0).max(f64::MIN_POSITIVE).sqrt();
                    let wv = &mut w[b.range()];
                    wv[0] = (sv[0] / sn + zv[0] / zn) / (2.0 * gamma);
                    for k in 1..b.dim {
                        wv[k] = (sv[k] / sn - zv[k] / zn) / (2.0 * gamma);
                    }
                    eta[bi] = (sn / zn).sqrt();
                }
            }
        }
        NtScaling {
            blocks: blocks.to_vec(),
            w,
            eta,
        }
    }

    fn apply_impl(&self, x: &[f64], out: &mut [f64], inverse: bool) {
        for (bi, b) in self.blocks.iter().enumerate() {
            let (xv, wv) = (&x[b.range()], &self.w[b.range()]);
            let o = &mut out[b.range()];
            match b.kind {
                BlockKind::NonNeg => {
                    for k in 0..b.dim {
                        o[k] = if inverse {
                            xv[k] / wv[k]
                        } else {
                            xv[k] * wv[k]
                        };
                    }
                }
                BlockKind::Soc => {
                    let sign = if inverse { -1.0 } else { 1.0 };
                    let scale = if inverse {
                        1.0 / self.eta[bi]
                    } else {
                        self.eta[bi]
                    };
                    let w1x1: f64 = wv[1..].iter().zip(&xv[1..]).map(|(a, c)| a * c).sum();
                    o[0] = scale * (wv[0] * xv[0] + sign * w1x1);
                    let coef = sign * xv[0] + w1x1 / (1.0 + wv[0]);
                    for k in 1..b.dim {
                        o[k] = scale * (xv[k] + coef * wv[k]);
                    }
                }
            }
        }
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.apply_impl(x, out, false);
    }

    pub fn apply_inv(&self, x: &[f64], out: &mut [f64]) {
        self.apply_impl(x, out, true);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blocks() -> Vec<Block> {
        vec![
            Block {
                kind: BlockKind::NonNeg,
                offset: 0,
                dim: 2,
            },
            Block {
                kind: BlockKind::Soc,
                offset: 2,
                dim: 3,
            },
        ]
    }

    #[test]
    fn scaling_maps_z_and_s_to_same_point() {
        let b = blocks();
        let s = [1.0, 2.0, 3.0, 1.0, -0.5];
        let z = [0.5, 4.0, 2.0, -0.3, 0.8];
        let w = NtScaling::compute(&s, &z, &b);
        let mut wz = [0.0; 5];
        let mut wis = [0.0; 5];
        w.apply(&z, &mut wz);
        w.apply_inv(&s, &mut wis);
        for k in 0..5 {
            assert!((wz[k] - wis[k]).abs() < 1e-12, "{wz:?} {wis:?}");
        }
        let mut back = [0.0; 5];
        w.apply_inv(&wz, &mut back);
        for k in 0..5 {
            assert!((back[k] - z[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn jordan_division_inverts_product() {
        let b = blocks();
        let l = [1.0, 2.0, 3.0, 1.0, -0.5];
        let u = [0.3, -1.0, 0.2, 0.7, 0.1];
        let mut v = [0.0; 5];
        jordan(&l, &u, &b, &mut v);
        let mut back = [0.0; 5];
        jordan_div(&l, &v, &b, &mut back);
        for k in 0..5 {
            assert!((back[k] - u[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn step_to_boundary() {
        let b = blocks();
        let x = [1.0, 1.0, 2.0, 0.0, 0.0];
        let dx = [-1.0, 0.0, 0.0, 1.0, 0.0];
        // Orthant hits at α = 1, cone hits when 2 = α.
        assert!((max_step(&x, &dx, &b, 10.0) - 1.0).abs() < 1e-12);
        let dx = [0.0, 0.0, 0.0, 1.0, 0.0];
        assert!((max_step(&x, &dx, &b, 10.0) - 2.0).abs() < 1e-12);
        assert_eq!(max_step(&x, &[0.0; 5], &b, 10.0), 10.0);
    }
}
