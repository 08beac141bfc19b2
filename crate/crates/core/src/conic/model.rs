//! Incremental construction of SOCPs over complex decision vectors.
//!
//! Every complex K-vector is stored as 2K real variables: real parts first,
//! then imaginary parts. Constraints are written as affine expressions of the
//! real variables and collected into a [`ConicProblem`].

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::problem::{Cone, ConicProblem};
use crate::error::{Error, Result};

/// Sparse affine expression Σ a_k x_k + constant.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AffExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl AffExpr {
    pub fn constant(value: f64) -> Self {
        AffExpr {
            terms: Vec::new(),
            constant: value,
        }
    }

    pub fn var(index: usize) -> Self {
        AffExpr {
            terms: vec![(index, 1.0)],
            constant: 0.0,
        }
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.terms.iter_mut().for_each(|(_, a)| *a *= factor);
        self.constant *= factor;
        self
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(mut self, other: &AffExpr) -> Self {
        self.terms.extend_from_slice(&other.terms);
        self.constant += other.constant;
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(k, a)| a * x[k]).sum::<f64>()
    }
}

/// A complex vector variable embedded as real parts followed by imaginary parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplexVar {
    pub offset: usize,
    pub len: usize,
}

impl ComplexVar {
    pub fn re(&self, k: usize) -> usize {
        self.offset + k
    }

    pub fn im(&self, k: usize) -> usize {
        self.offset + self.len + k
    }

    /// Real coordinates as expressions, in storage order.
    pub fn components(&self) -> Vec<AffExpr> {
        (self.offset..self.offset + 2 * self.len)
            .map(AffExpr::var)
            .collect()
    }

    /// Re(h^H v).
    pub fn re_inner(&self, h: &[Complex64]) -> AffExpr {
        let mut e = AffExpr::default();
        for (k, hk) in h.iter().enumerate() {
            e.terms.push((self.re(k), hk.re));
            e.terms.push((self.im(k), hk.im));
        }
        e
    }

    /// Im(h^H v).
    pub fn im_inner(&self, h: &[Complex64]) -> AffExpr {
        let mut e = AffExpr::default();
        for (k, hk) in h.iter().enumerate() {
            e.terms.push((self.re(k), -hk.im));
            e.terms.push((self.im(k), hk.re));
        }
        e
    }

    pub fn extract(&self, x: &[f64]) -> Vec<Complex64> {
        (0..self.len)
            .map(|k| Complex64::new(x[self.re(k)], x[self.im(k)]))
            .collect()
    }

    pub fn embed(&self, value: &[Complex64], x: &mut [f64]) {
        for (k, v) in value.iter().enumerate() {
            x[self.re(k)] = v.re;
            x[self.im(k)] = v.im;
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SocpModel {
    var_names: Vec<String>,
    objective: Vec<f64>,
    rows: Vec<AffExpr>,
    cones: Vec<Cone>,
    labels: Vec<String>,
}

impl SocpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>) -> usize {
        self.var_names.push(name.into());
        self.objective.push(0.0);
        self.var_names.len() - 1
    }

    pub fn add_complex(&mut self, name: &str, len: usize) -> ComplexVar {
        let offset = self.num_vars();
        for k in 0..len {
            self.add_var(format!("{name}.re{k}"));
        }
        for k in 0..len {
            self.add_var(format!("{name}.im{k}"));
        }
        ComplexVar { offset, len }
    }

    pub fn add_objective(&mut self, expr: &AffExpr) {
        for &(k, a) in &expr.terms {
            self.objective[k] += a;
        }
    }

    fn push(&mut self, label: &str, cone: Cone, exprs: Vec<AffExpr>) {
        self.rows.extend(exprs);
        self.cones.push(cone);
        self.labels.push(label.to_string());
    }

    /// ‖xs‖ <= t.
    pub fn add_soc(&mut self, label: &str, t: AffExpr, xs: Vec<AffExpr>) {
        let mut exprs = Vec::with_capacity(xs.len() + 1);
        exprs.push(t);
        exprs.extend(xs);
        let d = exprs.len();
        self.push(label, Cone::Soc(d), exprs);
    }

    /// e >= 0.
    pub fn add_nonneg(&mut self, label: &str, e: AffExpr) {
        self.push(label, Cone::NonNeg(1), vec![e]);
    }

    /// e = 0.
    pub fn add_eq(&mut self, label: &str, e: AffExpr) {
        self.push(label, Cone::Zero(1), vec![e]);
    }

    /// Each constraint u(x) ∈ K becomes A x + s = b with A = -∇u, b = u(0).
    pub fn build(self) -> Result<ConicProblem> {
        let n = self.num_vars();
        let m = self.rows.len();
        let mut a = DMatrix::zeros(m, n);
        let mut b = vec![0.0; m];
        for (r, e) in self.rows.iter().enumerate() {
            for &(k, coef) in &e.terms {
                if k >= n {
                    return Err(Error::Dimension(format!(
                        "expression refers to variable {k}"
                    )));
                }
                a[(r, k)] -= coef;
            }
            b[r] = e.constant;
        }
        let p = ConicProblem {
            c: self.objective,
            a,
            b,
            cones: self.cones,
            cone_labels: self.labels,
            var_names: self.var_names,
        };
        p.validate()?;
        Ok(p)
    }
}
