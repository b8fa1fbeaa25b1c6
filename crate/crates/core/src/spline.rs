//! Not-a-knot cubic splines on a knot vector, and the linear map from knot
//! values to second derivatives used to express spline cardinal functions.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Index `k` of the knot interval `[t_k, t_{k+1}]` containing `z`
/// (clamped to the first/last interval).
pub fn locate(knots: &[f64], z: f64) -> usize {
    let last = knots.len() - 2;
    match knots.binary_search_by(|t| t.total_cmp(&z)) {
        Ok(k) => k.min(last),
        Err(0) => 0,
        Err(k) => (k - 1).min(last),
    }
}

/// Weights `(A, B, C, D)` with
/// `s(z) = A y_k + B y_{k+1} + C m_k + D m_{k+1}` on interval `k`, where `m`
/// are the second derivatives at the knots.
#[inline]
pub fn segment_weights(knots: &[f64], k: usize, z: f64) -> [f64; 4] {
    let h = knots[k + 1] - knots[k];
    let a = (knots[k + 1] - z) / h;
    let b = 1.0 - a;
    let h2 = h * h / 6.0;
    [a, b, (a * a * a - a) * h2, (b * b * b - b) * h2]
}

/// Matrix `Q` with `m = Q y` for the not-a-knot spline through `(t_k, y_k)`.
pub fn second_derivative_operator(knots: &[f64]) -> Result<DMatrix<f64>> {
    let np = knots.len();
    if np < 4 {
        return Err(Error::InvalidParameter("a not-a-knot spline needs at least four knots".into()));
    }
    if knots.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("spline knots must be strictly increasing".into()));
    }
    let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
    let mut s = DMatrix::<f64>::zeros(np, np);
    let mut r = DMatrix::<f64>::zeros(np, np);
    // third derivative continuous at t_1
    s[(0, 0)] = h[1];
    s[(0, 1)] = -(h[0] + h[1]);
    s[(0, 2)] = h[0];
    for i in 1..np - 1 {
        s[(i, i - 1)] = h[i - 1];
        s[(i, i)] = 2.0 * (h[i - 1] + h[i]);
        s[(i, i + 1)] = h[i];
        r[(i, i - 1)] = 6.0 / h[i - 1];
        r[(i, i)] = -6.0 / h[i - 1] - 6.0 / h[i];
        r[(i, i + 1)] = 6.0 / h[i];
    }
    // third derivative continuous at t_{np-2}
    let m = np - 1;
    s[(m, m - 2)] = h[m - 1];
    s[(m, m - 1)] = -(h[m - 2] + h[m - 1]);
    s[(m, m)] = h[m - 2];
    s.lu()
        .solve(&r)
        .ok_or_else(|| Error::Numerical("singular spline system".into()))
}

/// A not-a-knot cubic spline.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl CubicSpline {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() != values.len() {
            return Err(Error::InvalidParameter("knots and values differ in length".into()));
        }
        let q = second_derivative_operator(&knots)?;
        let second = (q * DVector::from_column_slice(&values)).as_slice().to_vec();
        Ok(CubicSpline { knots, values, second })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn eval(&self, z: f64) -> f64 {
        let k = locate(&self.knots, z);
        let w = segment_weights(&self.knots, k, z);
        w[0] * self.values[k] + w[1] * self.values[k + 1] + w[2] * self.second[k] + w[3] * self.second[k + 1]
    }
}
