//! IMEX linear multistep tableaus.
//!
//! A scheme advances `y' = F(y) + G(y)` (F non-stiff, G stiff) as
//!
//! ```text
//! y^{n+1} + sum_j a_j y^{n-j} = dt sum_j b_j F(y^{n-j}) + dt sum_{j=-1} c_j G(y^{n-j})
//! ```
//!
//! with `j = 0..s-1`. History vectors are ordered newest first.

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

/// Coefficients of one IMEX-LM scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct Tableau {
    pub name: String,
    pub steps: usize,
    pub order: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub c_minus1: f64,
}

/// Default tolerance for [`Tableau::verify`].
pub const ORDER_TOL: f64 = 1e-13;

type Frac = (i64, i64);

struct Raw {
    name: &'static str,
    order: usize,
    a: &'static [Frac],
    b: &'static [Frac],
    c: &'static [Frac],
    c_minus1: Frac,
}

const RAW: &[Raw] = &[
    Raw {
        name: "SG32",
        order: 2,
        a: &[(-3, 4), (0, 1), (-1, 4)],
        b: &[(3, 2), (0, 1), (0, 1)],
        c: &[(0, 1), (0, 1), (1, 2)],
        c_minus1: (1, 1),
    },
    Raw {
        name: "BDF2",
        order: 2,
        a: &[(-4, 3), (1, 3)],
        b: &[(4, 3), (-2, 3)],
        c: &[(0, 1), (0, 1)],
        c_minus1: (2, 3),
    },
    Raw {
        name: "TVB33",
        order: 3,
        a: &[(-3909, 2048), (1367, 1024), (-873, 2048)],
        b: &[(18463, 12288), (-1271, 768), (8233, 12288)],
        c: &[(-1139, 12288), (-367, 6144), (1699, 12288)],
        c_minus1: (1089, 2048),
    },
    Raw {
        name: "BDF3",
        order: 3,
        a: &[(-18, 11), (9, 11), (-2, 11)],
        b: &[(18, 11), (-18, 11), (6, 11)],
        c: &[(0, 1), (0, 1), (0, 1)],
        c_minus1: (6, 11),
    },
    Raw {
        name: "TVB44",
        order: 4,
        a: &[(-21531, 8192), (22753, 8192), (-12245, 8192), (2831, 8192)],
        b: &[(13261, 8192), (-75029, 24576), (54799, 24576), (-15245, 24576)],
        c: &[(-3567, 8192), (697, 24576), (4315, 24576), (-41, 384)],
        c_minus1: (4207, 8192),
    },
    Raw {
        name: "BDF4",
        order: 4,
        a: &[(-48, 25), (36, 25), (-16, 25), (3, 25)],
        b: &[(48, 25), (-72, 25), (48, 25), (-12, 25)],
        c: &[(0, 1), (0, 1), (0, 1), (0, 1)],
        c_minus1: (12, 25),
    },
    Raw {
        name: "TVB55",
        order: 5,
        a: &[(-13553, 4096), (38121, 8192), (-7315, 2048), (6161, 4096), (-2269, 8192)],
        b: &[
            (10306951, 5898240),
            (-13656497, 2949120),
            (1249949, 245760),
            (-7937687, 2949120),
            (3387361, 5898240),
        ],
        c: &[
            (-4118249, 5898240),
            (768703, 2949120),
            (47849, 245760),
            (-725087, 2949120),
            (502321, 5898240),
        ],
        c_minus1: (4007, 8192),
    },
    Raw {
        name: "BDF5",
        order: 5,
        a: &[(-300, 137), (300, 137), (-200, 137), (75, 137), (-12, 137)],
        b: &[(300, 137), (-600, 137), (600, 137), (-300, 137), (60, 137)],
        c: &[(0, 1), (0, 1), (0, 1), (0, 1), (0, 1)],
        c_minus1: (60, 137),
    },
];

fn frac(f: Frac) -> f64 {
    f.0 as f64 / f.1 as f64
}

/// Names of the built-in schemes in table order.
pub fn builtin_names() -> Vec<&'static str> {
    RAW.iter().map(|r| r.name).collect()
}

/// All built-in tableaus.
pub fn builtin_all() -> Vec<Tableau> {
    RAW.iter().map(from_raw).collect()
}

fn from_raw(r: &Raw) -> Tableau {
    Tableau {
        name: r.name.to_string(),
        steps: r.a.len(),
        order: r.order,
        a: r.a.iter().copied().map(frac).collect(),
        b: r.b.iter().copied().map(frac).collect(),
        c: r.c.iter().copied().map(frac).collect(),
        c_minus1: frac(r.c_minus1),
    }
}

/// Look up a built-in tableau by name (case-insensitive).
pub fn builtin(name: &str) -> Result<Tableau> {
    RAW.iter()
        .find(|r| r.name.eq_ignore_ascii_case(name))
        .map(from_raw)
        .ok_or_else(|| Error::UnknownTableau(name.to_string()))
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl Tableau {
    /// Build a tableau from raw coefficients, checking shapes.
    pub fn new(
        name: &str,
        order: usize,
        a: Vec<f64>,
        b: Vec<f64>,
        c: Vec<f64>,
        c_minus1: f64,
    ) -> Result<Self> {
        let steps = a.len();
        if steps == 0 || b.len() != steps || c.len() != steps {
            return Err(Error::InvalidTableau(format!(
                "{name}: a, b, c must have the same nonzero length (got {}, {}, {})",
                a.len(),
                b.len(),
                c.len()
            )));
        }
        if order > steps {
            return Err(Error::InvalidTableau(format!(
                "{name}: a {steps}-step scheme cannot have order {order}"
            )));
        }
        if !(c_minus1 > 0.0) {
            return Err(Error::InvalidTableau(format!(
                "{name}: implicit weight c_minus1 must be positive"
            )));
        }
        Ok(Self { name: name.to_string(), steps, order, a, b, c, c_minus1 })
    }

    /// Backward-Euler / forward-Euler pair used as the first-order scheme.
    pub fn euler() -> Self {
        Self {
            name: "IMEX-Euler".into(),
            steps: 1,
            order: 1,
            a: vec![-1.0],
            b: vec![1.0],
            c: vec![0.0],
            c_minus1: 1.0,
        }
    }

    /// True when all history implicit weights vanish.
    pub fn is_bdf(&self) -> bool {
        self.c.iter().all(|&x| x == 0.0)
    }

    /// Residuals of the order conditions for `q = 0..=order`.
    ///
    /// `q = 0` contributes one residual (consistency of `a`). Each `q >= 1`
    /// contributes two: the `a`-moment minus the explicit `b`-moment, and the
    /// `a`-moment minus the implicit `c`-moment (including `c_minus1`).
    pub fn order_residuals(&self, order: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * order + 1);
        out.push(1.0 + self.a.iter().sum::<f64>());
        for q in 1..=order {
            let qf = factorial(q);
            let qm1 = factorial(q - 1);
            let mut lhs = 1.0 / qf;
            let mut bsum = 0.0;
            let mut csum = self.c_minus1 / qm1;
            for j in 0..self.steps {
                let mj = -(j as f64);
                lhs += mj.powi(q as i32) / qf * self.a[j];
                // (-j)^(q-1) with 0^0 = 1
                let w = if q == 1 { 1.0 } else { mj.powi(q as i32 - 1) } / qm1;
                bsum += w * self.b[j];
                csum += w * self.c[j];
            }
            out.push(lhs - bsum);
            out.push(lhs - csum);
        }
        out
    }

    /// True when every residual up to `order` is within `tol`.
    pub fn satisfies_order(&self, order: usize, tol: f64) -> bool {
        self.order_residuals(order).iter().all(|r| r.abs() <= tol)
    }

    /// Check the declared order and zero-stability.
    pub fn verify(&self, tol: f64) -> Result<()> {
        let res = self.order_residuals(self.order);
        if let Some((i, r)) = res.iter().enumerate().find(|(_, r)| r.abs() > tol) {
            return Err(Error::InvalidTableau(format!(
                "{}: order-condition residual #{i} = {r:e} exceeds {tol:e}",
                self.name
            )));
        }
        if !self.is_zero_stable() {
            return Err(Error::InvalidTableau(format!("{}: not zero-stable", self.name)));
        }
        Ok(())
    }

    /// Roots of `rho(z) = z^s + sum_j a_j z^{s-1-j}`.
    pub fn rho_roots(&self) -> Vec<num_complex::Complex64> {
        let mut coeffs = vec![num_complex::Complex64::new(1.0, 0.0)];
        coeffs.extend(self.a.iter().map(|&x| num_complex::Complex64::new(x, 0.0)));
        crate::stability::poly_roots(&coeffs)
    }

    /// Root condition: all roots of `rho` in the closed unit disc, simple on the circle.
    pub fn is_zero_stable(&self) -> bool {
        let roots = self.rho_roots();
        crate::stability::roots_stable(&roots, 1e-9, 1e-6)
    }

    /// Lagrange weights extrapolating the history to the next level.
    pub fn extrapolation_weights(&self) -> Vec<f64> {
        extrapolation_weights(self.steps)
    }
}

/// Weights `e_j` with `y^{n+1} ~ sum_j e_j y^{n-j}` exact for polynomials of degree `< s`.
pub fn extrapolation_weights(s: usize) -> Vec<f64> {
    (0..s)
        .map(|j| {
            (0..s)
                .filter(|&m| m != j)
                .map(|m| (1.0 + m as f64) / (m as f64 - j as f64))
                .product()
        })
        .collect()
}

impl fmt::Display for Tableau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:.12}")).collect::<Vec<_>>().join(", ");
        writeln!(f, "{} (s = {}, p = {})", self.name, self.steps, self.order)?;
        writeln!(f, "  a        = [{}]", join(&self.a))?;
        writeln!(f, "  b        = [{}]", join(&self.b))?;
        writeln!(f, "  c        = [{}]", join(&self.c))?;
        write!(f, "  c_minus1 = {:.12}", self.c_minus1)
    }
}

/// Parse a tableau from `key = value` lines (`name`, `s`, `p`, `a`, `b`, `c`,
/// `c_minus1`; vectors comma separated, `#` starts a comment).
pub fn parse_tableau(text: &str) -> Result<Tableau> {
    let mut name = None;
    let mut s = None;
    let mut p = None;
    let (mut a, mut b, mut c, mut cm1) = (None, None, None, None);
    let bad = |msg: String| Error::InvalidTableau(msg);
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("line {}: expected key = value", lineno + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        let vec = |v: &str| -> Result<Vec<f64>> {
            v.split(',')
                .map(|x| parse_real(x.trim()))
                .collect::<Result<Vec<_>>>()
        };
        match k {
            "name" => name = Some(v.to_string()),
            "s" => s = Some(v.parse::<usize>().map_err(|e| bad(format!("s: {e}")))?),
            "p" => p = Some(v.parse::<usize>().map_err(|e| bad(format!("p: {e}")))?),
            "a" => a = Some(vec(v)?),
            "b" => b = Some(vec(v)?),
            "c" => c = Some(vec(v)?),
            "c_minus1" => cm1 = Some(parse_real(v)?),
            other => return Err(bad(format!("unknown key '{other}'"))),
        }
    }
    let missing = |k: &str| bad(format!("missing key '{k}'"));
    let a = a.ok_or_else(|| missing("a"))?;
    let s = s.unwrap_or(a.len());
    if s != a.len() {
        return Err(bad(format!("s = {s} but a has {} entries", a.len())));
    }
    let t = Tableau::new(
        &name.unwrap_or_else(|| "custom".into()),
        p.ok_or_else(|| missing("p"))?,
        a,
        b.ok_or_else(|| missing("b"))?,
        c.ok_or_else(|| missing("c"))?,
        cm1.ok_or_else(|| missing("c_minus1"))?,
    )?;
    t.verify(ORDER_TOL)?;
    Ok(t)
}

/// Read and verify a tableau file.
pub fn load_tableau(path: &Path) -> Result<Tableau> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_tableau(&text)
}

/// Parse a real number, accepting `n/d` fractions.
pub fn parse_real(s: &str) -> Result<f64> {
    let err = || Error::InvalidTableau(format!("cannot parse '{s}' as a number"));
    if let Some((n, d)) = s.split_once('/') {
        let n: f64 = n.trim().parse().map_err(|_| err())?;
        let d: f64 = d.trim().parse().map_err(|_| err())?;
        Ok(n / d)
    } else {
        s.parse().map_err(|_| err())
    }
}
