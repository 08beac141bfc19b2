use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// One block of the slack cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    /// s = 0 (equality rows).
    Zero(usize),
    /// s >= 0 elementwise.
    NonNeg(usize),
    /// s_0 >= ‖s_1..‖.
    Soc(usize),
}

impl Cone {
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Zero(d) | Cone::NonNeg(d) | Cone::Soc(d) => d,
        }
    }
}

/// minimize c'x  subject to  A x + s = b,  s ∈ K.
///
/// `cones` partitions the rows of `A` in order. Labels are free-form and only
/// used for diagnostics and structure queries.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicProblem {
    pub c: Vec<f64>,
    pub a: DMatrix<f64>,
    pub b: Vec<f64>,
    pub cones: Vec<Cone>,
    pub cone_labels: Vec<String>,
    pub var_names: Vec<String>,
}

impl ConicProblem {
    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn num_rows(&self) -> usize {
        self.b.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.c.len();
        let m = self.b.len();
        if self.a.nrows() != m || self.a.ncols() != n {
            return Err(Error::Dimension(format!(
                "A is {}x{}, expected {m}x{n}",
                self.a.nrows(),
                self.a.ncols()
            )));
        }
        let rows: usize = self.cones.iter().map(Cone::dim).sum();
        if rows != m {
            return Err(Error::Dimension(format!(
                "cones cover {rows} rows, problem has {m}"
            )));
        }
        if self.cone_labels.len() != self.cones.len() {
            return Err(Error::Dimension("one label per cone".into()));
        }
        if self.var_names.len() != n {
            return Err(Error::Dimension("one name per variable".into()));
        }
        if self.cones.iter().any(|k| k.dim() == 0) {
            return Err(Error::Dimension("empty cone block".into()));
        }
        let finite = self
            .c
            .iter()
            .chain(&self.b)
            .chain(self.a.iter())
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::domain("problem data must be finite"));
        }
        Ok(())
    }

    /// Number of cone blocks whose label starts with `prefix`.
    pub fn count_cones(&self, prefix: &str) -> usize {
        self.cone_labels
            .iter()
            .filter(|l| l.starts_with(prefix))
            .count()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.var_names.iter().position(|v| v == name)
    }

    /// Plain-text interchange form: objective, A/b triplets and cone list.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let n = self.num_vars();
        let m = self.num_rows();
        writeln!(out, "conic 1").unwrap();
        writeln!(out, "size {n} {m}").unwrap();
        for (i, name) in self.var_names.iter().enumerate() {
            writeln!(out, "var {i} {name}").unwrap();
        }
        for (i, &v) in self.c.iter().enumerate().filter(|(_, v)| **v != 0.0) {
            writeln!(out, "c {i} {v:e}").unwrap();
        }
        for col in 0..n {
            for row in 0..m {
                let v = self.a[(row, col)];
                if v != 0.0 {
                    writeln!(out, "a {row} {col} {v:e}").unwrap();
                }
            }
        }
        for (i, &v) in self.b.iter().enumerate().filter(|(_, v)| **v != 0.0) {
            writeln!(out, "b {i} {v:e}").unwrap();
        }
        for (k, label) in self.cones.iter().zip(&self.cone_labels) {
            let (kind, d) = match *k {
                Cone::Zero(d) => ("zero", d),
                Cone::NonNeg(d) => ("nonneg", d),
                Cone::Soc(d) => ("soc", d),
            };
            writeln!(out, "cone {kind} {d} {label}").unwrap();
        }
        writeln!(out, "end").unwrap();
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::Parse(format!("line {}: {msg}", line + 1));
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, l)) if l.trim() == "conic 1" => {}
            _ => return Err(Error::Parse("missing `conic 1` header".into())),
        }
        let (ln, size) = lines
            .next()
            .ok_or_else(|| Error::Parse("missing size".into()))?;
        let dims: Vec<usize> = size
            .split_whitespace()
            .skip(1)
            .map(|t| t.parse().map_err(|_| bad(ln, "bad size")))
            .collect::<Result<_>>()?;
        if dims.len() != 2 || !size.starts_with("size") {
            return Err(bad(ln, "expected `size n m`"));
        }
        let (n, m) = (dims[0], dims[1]);
        let mut p = ConicProblem {
            c: vec![0.0; n],
            a: DMatrix::zeros(m, n),
            b: vec![0.0; m],
            cones: Vec::new(),
            cone_labels: Vec::new(),
            var_names: (0..n).map(|i| format!("x{i}")).collect(),
        };
        let mut ended = false;
        for (ln, line) in lines {
            let t: Vec<&str> = line.split_whitespace().collect();
            let idx = |k: usize, lim: usize| -> Result<usize> {
                let v: usize = t
                    .get(k)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| bad(ln, "bad index"))?;
                if v >= lim {
                    return Err(bad(ln, "index out of range"));
                }
                Ok(v)
            };
            let val = |k: usize| -> Result<f64> {
                t.get(k)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| bad(ln, "bad value"))
            };
            match t[0] {
                "var" => {
                    let i = idx(1, n)?;
                    p.var_names[i] = t.get(2).map(|s| s.to_string()).unwrap_or_default();
                }
                "c" => p.c[idx(1, n)?] = val(2)?,
                "a" => {
                    let (r, c) = (idx(1, m)?, idx(2, n)?);
                    p.a[(r, c)] = val(3)?;
                }
                "b" => p.b[idx(1, m)?] = val(2)?,
                "cone" => {
                    let d = idx(2, usize::MAX)?;
                    let cone = match t.get(1) {
                        Some(&"zero") => Cone::Zero(d),
                        Some(&"nonneg") => Cone::NonNeg(d),
                        Some(&"soc") => Cone::Soc(d),
                        _ => return Err(bad(ln, "unknown cone kind")),
                    };
                    p.cones.push(cone);
                    p.cone_labels
                        .push(t.get(3..).map(|s| s.join(" ")).unwrap_or_default());
                }
                "end" => {
                    ended = true;
                    break;
                }
                _ => return Err(bad(ln, "unknown record")),
            }
        }
        if !ended {
            return Err(Error::Parse("missing `end`".into()));
        }
        p.validate()?;
        Ok(p)
    }
}
