//! Scalar curves of one variable: the representation used for the profile
//! data a(t), b(t), s_g(t) and the reduced weight w(t).
//!
//! Factories produce analytic forms; everything else is carried as a cubic
//! spline table. Derivatives always come from the same representation, so
//! a table is never finite-differenced twice.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Cubic spline through strictly increasing abscissae with clamped ends
/// (end slopes fitted from one-sided 4-point stencils).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "TableData", into = "TableData")]
pub struct CubicSpline {
    ts: Vec<f64>,
    values: Vec<f64>,
    /// Second derivatives at the knots (moments).
    moments: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TableData {
    ts: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<TableData> for CubicSpline {
    type Error = CoreError;
    fn try_from(d: TableData) -> Result<Self> {
        CubicSpline::new(d.ts, d.values)
    }
}

impl From<CubicSpline> for TableData {
    fn from(s: CubicSpline) -> TableData {
        TableData {
            ts: s.ts,
            values: s.values,
        }
    }
}

/// Derivative at ts[at] of the Lagrange polynomial through 4 stencil points.
fn lagrange_derivative(ts: &[f64], ys: &[f64], idx: [usize; 4], at: usize) -> f64 {
    let x = ts[at];
    let mut acc = 0.0;
    for (j, &pj) in idx.iter().enumerate() {
        let mut dl = 0.0;
        for (m, &pm) in idx.iter().enumerate() {
            if m == j {
                continue;
            }
            let mut term = 1.0 / (ts[pj] - ts[pm]);
            for (k, &pk) in idx.iter().enumerate() {
                if k == j || k == m {
                    continue;
                }
                term *= (x - ts[pk]) / (ts[pj] - ts[pk]);
            }
            dl += term;
        }
        acc += ys[pj] * dl;
    }
    acc
}

impl CubicSpline {
    /// Builds a spline. Hard error on non-monotone abscissae or fewer than
    /// 8 samples.
    pub fn new(ts: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if ts.len() != values.len() {
            return Err(CoreError::InvalidCurve(format!(
                "table length mismatch: {} abscissae vs {} values",
                ts.len(),
                values.len()
            )));
        }
        if ts.len() < 8 {
            return Err(CoreError::InvalidCurve(format!(
                "table needs at least 8 samples, got {}",
                ts.len()
            )));
        }
        for w in ts.windows(2) {
            if !(w[1] > w[0]) {
                return Err(CoreError::InvalidCurve(format!(
                    "table abscissae not strictly increasing near t = {}",
                    w[0]
                )));
            }
        }
        if ts.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(CoreError::InvalidCurve("non-finite table entry".into()));
        }
        let n = ts.len();
        let da = lagrange_derivative(&ts, &values, [0, 1, 2, 3], 0);
        let db = lagrange_derivative(&ts, &values, [n - 4, n - 3, n - 2, n - 1], n - 1);

        // Moment system with clamped ends, solved by the Thomas algorithm.
        let mut diag = vec![0.0; n];
        let mut sub = vec![0.0; n - 1];
        let mut sup = vec![0.0; n - 1];
        let mut rhs = vec![0.0; n];
        let h = |i: usize| ts[i + 1] - ts[i];
        diag[0] = h(0) / 3.0;
        sup[0] = h(0) / 6.0;
        rhs[0] = (values[1] - values[0]) / h(0) - da;
        for i in 1..n - 1 {
            sub[i - 1] = h(i - 1) / 6.0;
            diag[i] = (h(i - 1) + h(i)) / 3.0;
            sup[i] = h(i) / 6.0;
            rhs[i] = (values[i + 1] - values[i]) / h(i) - (values[i] - values[i - 1]) / h(i - 1);
        }
        sub[n - 2] = h(n - 2) / 6.0;
        diag[n - 1] = h(n - 2) / 3.0;
        rhs[n - 1] = db - (values[n - 1] - values[n - 2]) / h(n - 2);

        // SPD tridiagonal: plain elimination is stable.
        for i in 1..n {
            let m = sub[i - 1] / diag[i - 1];
            diag[i] -= m * sup[i - 1];
            rhs[i] -= m * rhs[i - 1];
        }
        let mut moments = vec![0.0; n];
        moments[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            moments[i] = (rhs[i] - sup[i] * moments[i + 1]) / diag[i];
        }
        Ok(CubicSpline {
            ts,
            values,
            moments,
        })
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.ts.len();
        match self
            .ts
            .binary_search_by(|x| x.partial_cmp(&t).unwrap())
        {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) if i >= n => n - 2,
            Err(i) => i - 1,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let (t0, t1) = (self.ts[i], self.ts[i + 1]);
        let h = t1 - t0;
        let (m0, m1) = (self.moments[i], self.moments[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let a = (t1 - t) / h;
        let b = (t - t0) / h;
        a * y0
            + b * y1
            + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0
    }

    pub fn deriv(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let (t0, t1) = (self.ts[i], self.ts[i + 1]);
        let h = t1 - t0;
        let (m0, m1) = (self.moments[i], self.moments[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let a = (t1 - t) / h;
        let b = (t - t0) / h;
        (y1 - y0) / h + ((3.0 * b * b - 1.0) * m1 - (3.0 * a * a - 1.0) * m0) * h / 6.0
    }

    pub fn deriv2(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let (t0, t1) = (self.ts[i], self.ts[i + 1]);
        let h = t1 - t0;
        let a = (t1 - t) / h;
        let b = (t - t0) / h;
        a * self.moments[i] + b * self.moments[i + 1]
    }

    pub fn abscissae(&self) -> &[f64] {
        &self.ts
    }
}

/// A scalar function of the profile parameter with two derivatives.
///
/// `Product` and `Exp` exist so that conformal images can keep known
/// singular endpoint factors exact while splining only smooth parts.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarCurve {
    /// The constant `value`.
    Constant { value: f64 },
    /// Polynomial with `coeffs[k]` multiplying t^k.
    Poly { coeffs: Vec<f64> },
    /// coeff * (1 - t^2)^expo.
    PowOneMinusSq { coeff: f64, expo: f64 },
    /// coeff * |t - center|^expo.
    PowAbs { coeff: f64, center: f64, expo: f64 },
    /// Cubic-spline table.
    Table { table: CubicSpline },
    /// Pointwise product of factors.
    Product { factors: Vec<ScalarCurve> },
    /// exp of an inner curve.
    Exp { inner: Box<ScalarCurve> },
}

impl ScalarCurve {
    pub fn constant(value: f64) -> Self {
        ScalarCurve::Constant { value }
    }

    pub fn poly(coeffs: &[f64]) -> Self {
        ScalarCurve::Poly {
            coeffs: coeffs.to_vec(),
        }
    }

    /// Samples `f` at `n` uniform knots over [a, b] into a table curve.
    pub fn sample<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> Result<Self> {
        let ts: Vec<f64> = (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect();
        let values: Vec<f64> = ts.iter().map(|&t| f(t)).collect();
        Ok(ScalarCurve::Table {
            table: CubicSpline::new(ts, values)?,
        })
    }

    pub fn scaled(self, k: f64) -> Self {
        ScalarCurve::Product {
            factors: vec![ScalarCurve::constant(k), self],
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            ScalarCurve::Constant { value } => *value,
            ScalarCurve::Poly { coeffs } => {
                coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
            }
            ScalarCurve::PowOneMinusSq { coeff, expo } => {
                coeff * (1.0 - t * t).powf(*expo)
            }
            ScalarCurve::PowAbs {
                coeff,
                center,
                expo,
            } => {
                if *expo == 0.0 {
                    *coeff
                } else {
                    coeff * (t - center).abs().powf(*expo)
                }
            }
            ScalarCurve::Table { table } => table.eval(t),
            ScalarCurve::Product { factors } => factors.iter().map(|f| f.eval(t)).product(),
            ScalarCurve::Exp { inner } => inner.eval(t).exp(),
        }
    }

    pub fn deriv(&self, t: f64) -> f64 {
        match self {
            ScalarCurve::Constant { .. } => 0.0,
            ScalarCurve::Poly { coeffs } => {
                let mut acc = 0.0;
                for (k, &c) in coeffs.iter().enumerate().skip(1) {
                    acc += k as f64 * c * t.powi(k as i32 - 1);
                }
                acc
            }
            ScalarCurve::PowOneMinusSq { coeff, expo } => {
                coeff * expo * (1.0 - t * t).powf(expo - 1.0) * (-2.0 * t)
            }
            ScalarCurve::PowAbs {
                coeff,
                center,
                expo,
            } => {
                if *expo == 0.0 {
                    0.0
                } else {
                    let d = t - center;
                    coeff * expo * d.abs().powf(expo - 1.0) * d.signum()
                }
            }
            ScalarCurve::Table { table } => table.deriv(t),
            ScalarCurve::Product { factors } => {
                let vals: Vec<f64> = factors.iter().map(|f| f.eval(t)).collect();
                let mut acc = 0.0;
                for (j, f) in factors.iter().enumerate() {
                    let mut term = f.deriv(t);
                    for (m, v) in vals.iter().enumerate() {
                        if m != j {
                            term *= v;
                        }
                    }
                    acc += term;
                }
                acc
            }
            ScalarCurve::Exp { inner } => inner.eval(t).exp() * inner.deriv(t),
        }
    }

    pub fn deriv2(&self, t: f64) -> f64 {
        match self {
            ScalarCurve::Constant { .. } => 0.0,
            ScalarCurve::Poly { coeffs } => {
                let mut acc = 0.0;
                for (k, &c) in coeffs.iter().enumerate().skip(2) {
                    acc += (k * (k - 1)) as f64 * c * t.powi(k as i32 - 2);
                }
                acc
            }
            ScalarCurve::PowOneMinusSq { coeff, expo } => {
                let q = 1.0 - t * t;
                coeff * expo * (4.0 * t * t * (expo - 1.0) * q.powf(expo - 2.0)
                    - 2.0 * q.powf(expo - 1.0))
            }
            ScalarCurve::PowAbs {
                coeff,
                center,
                expo,
            } => {
                if *expo == 0.0 || *expo == 1.0 {
                    0.0
                } else {
                    let d = t - center;
                    coeff * expo * (expo - 1.0) * d.abs().powf(expo - 2.0)
                }
            }
            ScalarCurve::Table { table } => table.deriv2(t),
            ScalarCurve::Product { factors } => {
                // Split recursively: (fg)'' = f''g + 2f'g' + fg''.
                match factors.len() {
                    0 => 0.0,
                    1 => factors[0].deriv2(t),
                    _ => {
                        let (head, tail) = factors.split_first().unwrap();
                        let rest = ScalarCurve::Product {
                            factors: tail.to_vec(),
                        };
                        head.deriv2(t) * rest.eval(t)
                            + 2.0 * head.deriv(t) * rest.deriv(t)
                            + head.eval(t) * rest.deriv2(t)
                    }
                }
            }
            ScalarCurve::Exp { inner } => {
                let d = inner.deriv(t);
                inner.eval(t).exp() * (inner.deriv2(t) + d * d)
            }
        }
    }

    /// Whether the representation is a spline table somewhere.
    pub fn has_table(&self) -> bool {
        match self {
            ScalarCurve::Table { .. } => true,
            ScalarCurve::Product { factors } => factors.iter().any(|f| f.has_table()),
            ScalarCurve::Exp { inner } => inner.has_table(),
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spline_reproduces_cubics_exactly() {
        let f = |t: f64| 1.0 + 2.0 * t - t * t + 0.5 * t * t * t;
        let ts: Vec<f64> = (0..16).map(|i| i as f64 / 15.0).collect();
        let ys: Vec<f64> = ts.iter().map(|&t| f(t)).collect();
        let s = CubicSpline::new(ts, ys).unwrap();
        for k in 0..50 {
            let t = k as f64 / 49.0;
            assert!((s.eval(t) - f(t)).abs() < 1e-12);
            let df = 2.0 - 2.0 * t + 1.5 * t * t;
            assert!((s.deriv(t) - df).abs() < 1e-10);
        }
    }

    #[test]
    fn spline_rejects_bad_tables() {
        let ts = vec![0.0, 0.1, 0.05, 0.3, 0.4, 0.5, 0.6, 0.7];
        let ys = vec![0.0; 8];
        assert!(matches!(
            CubicSpline::new(ts, ys),
            Err(CoreError::InvalidCurve(_))
        ));
        assert!(CubicSpline::new(vec![0.0, 1.0], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let curves = vec![
            ScalarCurve::poly(&[1.0, -0.5, 2.0, 0.25]),
            ScalarCurve::PowOneMinusSq {
                coeff: 3.0,
                expo: 1.5,
            },
            ScalarCurve::PowAbs {
                coeff: 2.0,
                center: 1.2,
                expo: 0.5,
            },
            ScalarCurve::Product {
                factors: vec![
                    ScalarCurve::poly(&[1.0, 1.0]),
                    ScalarCurve::PowOneMinusSq {
                        coeff: 1.0,
                        expo: 2.0,
                    },
                ],
            },
            ScalarCurve::Exp {
                inner: Box::new(ScalarCurve::poly(&[0.0, 0.3, -0.1])),
            },
        ];
        let h = 1e-5;
        for c in &curves {
            for k in 0..7 {
                let t = -0.8 + 0.25 * k as f64;
                let fd1 = (c.eval(t + h) - c.eval(t - h)) / (2.0 * h);
                let fd2 = (c.eval(t + h) - 2.0 * c.eval(t) + c.eval(t - h)) / (h * h);
                assert!(
                    (c.deriv(t) - fd1).abs() < 1e-7 * (1.0 + fd1.abs()),
                    "deriv mismatch at t={t} for {c:?}"
                );
                assert!(
                    (c.deriv2(t) - fd2).abs() < 1e-4 * (1.0 + fd2.abs()),
                    "deriv2 mismatch at t={t} for {c:?}"
                );
            }
        }
    }

    #[test]
    fn serde_roundtrip_rebuilds_spline() {
        let s = ScalarCurve::sample(|t| t.sin(), 0.0, 1.0, 33).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        let back: ScalarCurve = serde_json::from_str(&json).unwrap();
        assert!((back.eval(0.37) - s.eval(0.37)).abs() < 1e-15);
        assert!((back.deriv(0.37) - s.deriv(0.37)).abs() < 1e-15);
    }
}
