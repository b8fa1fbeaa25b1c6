//! Gauss-Legendre rules, graded panel layouts and generalized Richardson
//! extrapolation.

use nalgebra::{DMatrix, DVector};

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Builds the `n`-point rule by Newton iteration on the Legendre
    /// polynomial, starting from the Chebyshev-like initial guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, z);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussRule { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[lo, hi]`.
    pub fn mapped(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&t, &w)| (mid + half * t, half * w))
    }

    /// Integrates `f` over `[lo, hi]`.
    pub fn integrate(&self, lo: f64, hi: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.mapped(lo, hi).map(|(x, w)| w * f(x)).sum()
    }

    /// Integrates `f` over every panel of a layout.
    pub fn integrate_panels(&self, panels: &[(f64, f64)], mut f: impl FnMut(f64) -> f64) -> f64 {
        panels
            .iter()
            .map(|&(lo, hi)| self.integrate(lo, hi, &mut f))
            .sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Description of how `[lo, hi]` is cut into panels.
#[derive(Debug, Clone, Default)]
pub struct PanelLayout<'a> {
    /// Interior points where the integrand has a kink.
    pub breaks: &'a [f64],
    /// Add the geometric sequence `lo * 2^j` (requires `lo > 0`); used when
    /// the integrand scales with the distance to the origin.
    pub geometric_from_lo: bool,
    /// Number of dyadic levels toward `lo` (endpoint singularity at `lo`).
    pub grade_lo: usize,
    /// Number of dyadic levels toward `hi` (endpoint singularity at `hi`).
    pub grade_hi: usize,
    /// Upper bound on the panel length (0 disables).
    pub max_len: f64,
}

impl PanelLayout<'_> {
    pub fn panels(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        if !(hi > lo) {
            return Vec::new();
        }
        let len = hi - lo;
        let mut pts = Vec::with_capacity(self.breaks.len() + 2 * (self.grade_lo + self.grade_hi) + 4);
        pts.push(lo);
        pts.push(hi);
        pts.extend(self.breaks.iter().copied().filter(|&b| b > lo && b < hi));
        if self.geometric_from_lo && lo > 0.0 {
            let mut r = 2.0 * lo;
            while r < hi {
                pts.push(r);
                r *= 2.0;
            }
        }
        let mut d = 0.5 * len;
        for _ in 0..self.grade_lo {
            pts.push(lo + d);
            d *= 0.5;
        }
        let mut d = 0.5 * len;
        for _ in 0..self.grade_hi {
            pts.push(hi - d);
            d *= 0.5;
        }
        pts.sort_by(|a, b| a.total_cmp(b));
        let tiny = 1e-15 * hi.abs().max(lo.abs()).max(len);
        pts.dedup_by(|a, b| (*a - *b).abs() <= tiny);
        let mut out = Vec::with_capacity(pts.len());
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if self.max_len > 0.0 && b - a > self.max_len {
                let k = ((b - a) / self.max_len).ceil() as usize;
                let step = (b - a) / k as f64;
                for j in 0..k {
                    let hi_j = if j + 1 == k { b } else { a + (j + 1) as f64 * step };
                    out.push((a + j as f64 * step, hi_j));
                }
            } else {
                out.push((a, b));
            }
        }
        out
    }
}

/// Result of a generalized Richardson extrapolation.
#[derive(Debug, Clone)]
pub struct Extrapolation {
    pub value: f64,
    /// Magnitude of the last diagonal increment.
    pub err_est: f64,
    /// `|D_k - D_{k-1}|` for successive diagonal estimates.
    pub increments: Vec<f64>,
    pub converged: bool,
}

/// Extrapolates `values[k] = T(h[k])` to `h -> 0` assuming
/// `T(h) = T* + sum_m C_m h^{exponents[m]}`.
///
/// The k-th diagonal estimate uses levels `0..=k` and the first `k`
/// exponents. Convergence means the last `check_levels` increments decrease
/// monotonically (increments already at roundoff level count as decreasing).
pub fn richardson(h: &[f64], values: &[f64], exponents: &[f64], check_levels: usize) -> Extrapolation {
    assert_eq!(h.len(), values.len());
    assert!(!h.is_empty());
    let levels = h.len();
    let scale = h[0];
    let mut diag = Vec::with_capacity(levels);
    diag.push(values[0]);
    for k in 1..levels {
        let terms = k.min(exponents.len());
        let first = k - terms;
        let size = terms + 1;
        let mut m = DMatrix::<f64>::zeros(size, size);
        let mut rhs = DVector::<f64>::zeros(size);
        for (row, lvl) in (first..=k).enumerate() {
            m[(row, 0)] = 1.0;
            for t in 0..terms {
                m[(row, t + 1)] = (h[lvl] / scale).powf(exponents[t]);
            }
            rhs[row] = values[lvl];
        }
        let est = m
            .lu()
            .solve(&rhs)
            .map(|s| s[0])
            .unwrap_or(values[k]);
        diag.push(est);
    }
    let increments: Vec<f64> = diag.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let value = *diag.last().unwrap();
    let err_est = increments.last().copied().unwrap_or(f64::INFINITY);
    let mag = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let floor = 1e-12 * mag.max(f64::MIN_POSITIVE);
    let tail = check_levels.min(increments.len());
    let recent = &increments[increments.len() - tail..];
    let converged = recent
        .windows(2)
        .all(|w| w[1] <= w[0] || w[1] <= floor);
    Extrapolation {
        value,
        err_est,
        increments,
        converged,
    }
}

/// Plain Richardson for a geometric sequence with integer powers `1, 2, ...`
/// of the step.
pub fn richardson_integer_powers(h: &[f64], values: &[f64], check_levels: usize) -> Extrapolation {
    let exps: Vec<f64> = (1..h.len()).map(|k| k as f64).collect();
    richardson(h, values, &exps, check_levels)
}
