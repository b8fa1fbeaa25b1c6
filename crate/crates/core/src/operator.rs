//! Pointwise evaluation of the regional fractional Laplacian
//!
//! ```text
//! (-Δ)^α_{Ω,ε} u(x) = -c_{N,α} ∫_{Ω \ B_ε(x)} (u(z) - u(x)) / |z - x|^{N+2α} dz
//! ```
//!
//! and of its principal value `ε -> 0`, together with the complement tail
//! `φ(x) = c_{N,α} ∫_{R^N \ Ω} |x - y|^{-N-2α} dy`.
//!
//! Integrals are written in polar form around `x`. Inside the largest ball
//! contained in `Ω` the points `x + r e` and `x - r e` are paired so that the
//! first-order Taylor term cancels; the remaining integrand is
//! `O(r^{1-2α})`. The principal value is obtained from truncations at a
//! geometric sequence of radii by Richardson extrapolation with the
//! exponents `k - 2α`, `k = 2, 3, ...` of the truncated tail.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::domain::{Domain, FracParams, Point};
use crate::error::{Error, Result};
use crate::funcexpr::{Expr, Func};
use crate::quadrature::{richardson, GaussRule, PanelLayout};

/// A scalar field that can be sampled inside the domain.
pub trait ScalarField {
    fn value(&self, p: Point) -> Result<f64>;

    /// Abscissae (1D) where the field has a derivative jump; quadrature
    /// panels are split there.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// True when the field is smooth up to the boundary, so that no endpoint
    /// grading is needed.
    fn smooth_to_boundary(&self) -> bool {
        false
    }
}

/// An [`Expr`] bound to the domain that resolves `rho`.
#[derive(Debug, Clone, Copy)]
pub struct ExprField<'a> {
    pub expr: &'a Expr,
    pub domain: &'a Domain,
}

impl<'a> ExprField<'a> {
    pub fn new(expr: &'a Expr, domain: &'a Domain) -> Self {
        ExprField { expr, domain }
    }
}

fn mentions_rho(e: &Expr) -> bool {
    match e {
        Expr::Call(Func::Rho, _) => true,
        Expr::Call(_, args) => args.iter().any(mentions_rho),
        Expr::Neg(a) => mentions_rho(a),
        Expr::Bin(_, a, b) => mentions_rho(a) || mentions_rho(b),
        _ => false,
    }
}

impl ScalarField for ExprField<'_> {
    fn value(&self, p: Point) -> Result<f64> {
        Ok(self.expr.eval(p, self.domain)?)
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self.domain {
            Domain::Interval { a, b } if mentions_rho(self.expr) => vec![0.5 * (a + b)],
            _ => Vec::new(),
        }
    }
}

/// Wraps a closure as a field.
pub struct FnField<F> {
    f: F,
    breaks: Vec<f64>,
}

impl<F: Fn(Point) -> f64> FnField<F> {
    pub fn new(f: F) -> Self {
        FnField { f, breaks: Vec::new() }
    }

    pub fn with_breakpoints(f: F, breaks: Vec<f64>) -> Self {
        FnField { f, breaks }
    }
}

impl<F: Fn(Point) -> f64> ScalarField for FnField<F> {
    fn value(&self, p: Point) -> Result<f64> {
        let v = (self.f)(p);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Numerical(format!("field is not finite at {p:?}")))
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.breaks.clone()
    }
}

/// Quadrature settings for truncated and principal-value evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PVQuadratureConfig {
    /// Strictly decreasing truncation radii. When the first radius exceeds
    /// `near_field_split * rho(x)` (or half the distance to the nearest
    /// kink of the field) the whole sequence is rescaled and the result is
    /// flagged.
    pub eps_sequence: Vec<f64>,
    /// Gauss-Legendre order per panel.
    pub far_field_points_per_cell: usize,
    /// Largest admissible first truncation radius as a fraction of `rho(x)`.
    pub near_field_split: f64,
    /// Number of trailing extrapolation increments that must decrease.
    pub richardson_levels: usize,
    /// Dyadic refinement levels toward boundary-touching endpoints.
    pub boundary_grading_levels: usize,
    /// Minimal number of antipodal direction pairs (2D).
    pub angular_points: usize,
}

impl Default for PVQuadratureConfig {
    fn default() -> Self {
        PVQuadratureConfig {
            eps_sequence: (0..6).map(|k| 0.25 * 0.5f64.powi(k)).collect(),
            far_field_points_per_cell: 10,
            near_field_split: 0.5,
            richardson_levels: 3,
            boundary_grading_levels: 40,
            angular_points: 64,
        }
    }
}

impl PVQuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.eps_sequence.len() < 2 {
            return Err(Error::InvalidParameter("eps_sequence needs at least two radii".into()));
        }
        if self.eps_sequence.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::InvalidParameter("eps_sequence must be positive".into()));
        }
        if self.eps_sequence.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::InvalidParameter("eps_sequence must be strictly decreasing".into()));
        }
        if self.richardson_levels < 2 {
            return Err(Error::InvalidParameter("richardson_levels must be >= 2".into()));
        }
        if self.far_field_points_per_cell < 2 {
            return Err(Error::InvalidParameter("far_field_points_per_cell must be >= 2".into()));
        }
        if !(self.near_field_split > 0.0 && self.near_field_split <= 1.0) {
            return Err(Error::InvalidParameter("near_field_split must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// Weighted sample points of the truncated operator around one point,
/// grouped in shells: shell 0 holds everything with `r >= eps[0]`, shell
/// `k >= 1` the annulus `eps[k] <= r < eps[k-1]`.
///
/// The truncated operator at `eps[k]` is
/// `-c * sum_{s <= k} sum_{(z, w) in shell s} w (u(z) - u(x))`.
#[derive(Debug, Clone)]
pub struct PvRule {
    pub center: Point,
    pub eps: Vec<f64>,
    pub shells: Vec<Vec<(Point, f64)>>,
    /// The radii were rescaled to fit inside the admissible ball.
    pub rescaled: bool,
    /// Some radius was not smaller than `rho(x)`.
    pub eps_ge_rho: bool,
}

impl PvRule {
    /// Per-shell sums `sum w (u(z) - u(x))`.
    pub fn shell_sums(&self, u: &dyn ScalarField) -> Result<Vec<f64>> {
        let ux = u.value(self.center)?;
        self.shells
            .iter()
            .map(|shell| {
                let mut s = 0.0;
                for &(z, w) in shell {
                    let uz = u.value(z)?;
                    s += w * (uz - ux);
                }
                Ok(s)
            })
            .collect()
    }

    pub fn point_count(&self) -> usize {
        self.shells.iter().map(Vec::len).sum()
    }
}

/// How the radii of a rule are chosen.
enum Radii<'a> {
    /// A single truncation radius, used as given.
    Single(f64),
    /// A principal-value sequence; rescaled to fit the admissible ball.
    Sequence(&'a [f64]),
}

/// Builds the sample rule around `x`.
fn build_rule(
    x: Point,
    radii: Radii<'_>,
    u: &dyn ScalarField,
    params: &FracParams,
    domain: &Domain,
    cfg: &PVQuadratureConfig,
) -> Result<PvRule> {
    if params.dim() != domain.dim() {
        return Err(Error::InvalidParameter(format!(
            "parameters are {}-dimensional but the domain is {}-dimensional",
            params.dim(),
            domain.dim()
        )));
    }
    let rho = domain.require_interior(x)?;
    let breaks = u.breakpoints();
    let grade = if u.smooth_to_boundary() { 0 } else { cfg.boundary_grading_levels };
    let gauss = GaussRule::new(cfg.far_field_points_per_cell);

    let (eps, rescaled) = match radii {
        Radii::Single(e) => (vec![e], false),
        Radii::Sequence(seq) => {
            let d_kink = breaks
                .iter()
                .map(|&b| (b - x.x).abs())
                .filter(|&d| d > 1e-14 * rho)
                .fold(f64::INFINITY, f64::min);
            let cap = (cfg.near_field_split * rho).min(0.5 * d_kink);
            if seq[0] > cap {
                let s = cap / seq[0];
                (seq.iter().map(|e| e * s).collect(), true)
            } else {
                (seq.to_vec(), false)
            }
        }
    };
    let eps_ge_rho = eps[0] >= rho;
    let shells = match *domain {
        Domain::Interval { a, b } => rule_1d(x.x, a, b, &eps, &breaks, grade, &gauss, params.alpha()),
        Domain::Disk { center, radius } => {
            rule_2d(x, center, radius, &eps, grade.min(24), &gauss, params.alpha(), cfg.angular_points)
        }
    };
    Ok(PvRule { center: x, eps, shells, rescaled, eps_ge_rho })
}

#[allow(clippy::too_many_arguments)]
fn rule_1d(
    x: f64,
    a: f64,
    b: f64,
    eps: &[f64],
    breaks: &[f64],
    grade: usize,
    gauss: &GaussRule,
    alpha: f64,
) -> Vec<Vec<(Point, f64)>> {
    let p = -1.0 - 2.0 * alpha;
    let left = x - a;
    let right = b - x;
    let rho = left.min(right);
    let long = left.max(right);
    let dir = if right >= left { 1.0 } else { -1.0 };
    let r_breaks: Vec<f64> = breaks.iter().map(|&k| (k - x).abs()).collect();
    let e0 = eps[0];

    let mut far = Vec::new();
    // paired part r in [eps0, rho]
    if e0 < rho {
        let layout = PanelLayout {
            breaks: &r_breaks,
            geometric_from_lo: true,
            grade_hi: grade,
            ..Default::default()
        };
        for (lo, hi) in layout.panels(e0, rho) {
            for (r, w) in gauss.mapped(lo, hi) {
                let wk = w * r.powf(p);
                far.push((Point::on_line(x + r), wk));
                far.push((Point::on_line(x - r), wk));
            }
        }
    }
    // one-sided part on the long side
    let lo = e0.max(rho);
    if lo < long {
        let side_breaks: Vec<f64> = breaks
            .iter()
            .filter(|&&k| (k - x) * dir > 0.0)
            .map(|&k| (k - x).abs())
            .collect();
        let layout = PanelLayout {
            breaks: &side_breaks,
            geometric_from_lo: true,
            grade_hi: grade,
            ..Default::default()
        };
        for (lo, hi) in layout.panels(lo, long) {
            for (r, w) in gauss.mapped(lo, hi) {
                far.push((Point::on_line(x + dir * r), w * r.powf(p)));
            }
        }
    }
    let mut shells = vec![far];
    for k in 1..eps.len() {
        let mut shell = Vec::with_capacity(2 * gauss.len());
        for (r, w) in gauss.mapped(eps[k], eps[k - 1]) {
            let wk = w * r.powf(p);
            shell.push((Point::on_line(x + r), wk));
            shell.push((Point::on_line(x - r), wk));
        }
        shells.push(shell);
    }
    shells
}

/// Distance from `x` (inside the disk) to the circle along unit `e`.
fn ray_length(x: Point, e: (f64, f64), center: Point, radius: f64) -> f64 {
    let dx = x.x - center.x;
    let dy = x.y - center.y;
    let de = dx * e.0 + dy * e.1;
    let c = dx * dx + dy * dy - radius * radius;
    -de + (de * de - c).max(0.0).sqrt()
}

#[allow(clippy::too_many_arguments)]
fn rule_2d(
    x: Point,
    center: Point,
    radius: f64,
    eps: &[f64],
    grade: usize,
    gauss: &GaussRule,
    alpha: f64,
    angular_points: usize,
) -> Vec<Vec<(Point, f64)>> {
    let p = -1.0 - 2.0 * alpha;
    let rho = radius - x.dist(&center);
    let n_dir = angular_points
        .max((8.0 / (rho / radius).sqrt()).ceil() as usize)
        .min(4096);
    let dtheta = PI / n_dir as f64;
    let e0 = eps[0];
    let mut far = Vec::new();
    let mut shells: Vec<Vec<(Point, f64)>> = vec![Vec::new(); eps.len()];
    for j in 0..n_dir {
        let t = (j as f64 + 0.5) * dtheta;
        let e = (t.cos(), t.sin());
        let r_plus = ray_length(x, e, center, radius);
        let r_minus = ray_length(x, (-e.0, -e.1), center, radius);
        let near = r_plus.min(r_minus);
        let far_len = r_plus.max(r_minus);
        let sgn = if r_plus >= r_minus { 1.0 } else { -1.0 };
        let at = |r: f64, s: f64| Point::new(x.x + s * r * e.0, x.y + s * r * e.1);
        if e0 < near {
            let layout = PanelLayout { geometric_from_lo: true, grade_hi: grade, ..Default::default() };
            for (lo, hi) in layout.panels(e0, near) {
                for (r, w) in gauss.mapped(lo, hi) {
                    let wk = dtheta * w * r.powf(p);
                    far.push((at(r, 1.0), wk));
                    far.push((at(r, -1.0), wk));
                }
            }
        }
        let lo = e0.max(near);
        if lo < far_len {
            let layout = PanelLayout { geometric_from_lo: true, grade_hi: grade, ..Default::default() };
            for (lo, hi) in layout.panels(lo, far_len) {
                for (r, w) in gauss.mapped(lo, hi) {
                    far.push((at(r, sgn), dtheta * w * r.powf(p)));
                }
            }
        }
        for k in 1..eps.len() {
            for (r, w) in gauss.mapped(eps[k], eps[k - 1]) {
                let wk = dtheta * w * r.powf(p);
                shells[k].push((at(r, 1.0), wk));
                shells[k].push((at(r, -1.0), wk));
            }
        }
    }
    shells[0] = far;
    shells
}

/// Truncated operator value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Truncated {
    pub value: f64,
    /// The truncation radius was not smaller than `rho(x)`.
    pub eps_ge_rho: bool,
}

/// `(-Δ)^α_{Ω,ε} u(x)`.
pub fn eval_truncated(
    u: &dyn ScalarField,
    x: Point,
    eps: f64,
    params: &FracParams,
    domain: &Domain,
    cfg: &PVQuadratureConfig,
) -> Result<Truncated> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("truncation radius must be positive, got {eps}")));
    }
    let rule = build_rule(x, Radii::Single(eps), u, params, domain, cfg)?;
    let sums = rule.shell_sums(u)?;
    Ok(Truncated { value: -params.c_norm() * sums[0], eps_ge_rho: rule.eps_ge_rho })
}

/// Principal-value estimate with diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PvValue {
    pub value: f64,
    pub err_est: f64,
    pub converged: bool,
    /// Truncation radii actually used.
    pub eps: Vec<f64>,
    /// Truncated values at `eps`.
    pub truncated: Vec<f64>,
    pub rescaled: bool,
}

/// Exponents of the truncated-tail expansion: `2 - 2α, 3 - 2α, ...`.
pub fn tail_exponents(alpha: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| (k + 2) as f64 - 2.0 * alpha).collect()
}

/// Builds the rule used by [`eval_pv`]; exposed for assembling operators on
/// whole bases.
pub fn pv_rule(
    u: &dyn ScalarField,
    x: Point,
    params: &FracParams,
    domain: &Domain,
    cfg: &PVQuadratureConfig,
) -> Result<PvRule> {
    cfg.validate()?;
    build_rule(x, Radii::Sequence(&cfg.eps_sequence), u, params, domain, cfg)
}

/// Extrapolates cumulative shell sums to the principal value.
pub fn extrapolate_shells(rule: &PvRule, sums: &[f64], params: &FracParams, check_levels: usize) -> PvValue {
    let c = params.c_norm();
    let mut acc = 0.0;
    let truncated: Vec<f64> = sums
        .iter()
        .map(|s| {
            acc += s;
            -c * acc
        })
        .collect();
    let exps = tail_exponents(params.alpha(), rule.eps.len());
    let ex = richardson(&rule.eps, &truncated, &exps, check_levels);
    PvValue {
        value: ex.value,
        err_est: ex.err_est,
        converged: ex.converged,
        eps: rule.eps.clone(),
        truncated,
        rescaled: rule.rescaled,
    }
}

/// The extrapolated principal value as a linear functional: weights `W_z`
/// such that `eval_pv(u) = sum_z W_z (u(z) - u(x))`. Richardson
/// extrapolation is linear in the truncated values, so this agrees with
/// [`extrapolate_shells`] up to roundoff.
pub fn linear_weights(rule: &PvRule, params: &FracParams, check_levels: usize) -> Vec<(Point, f64)> {
    let levels = rule.eps.len();
    let exps = tail_exponents(params.alpha(), levels);
    let omega: Vec<f64> = (0..levels)
        .map(|k| {
            let mut e = vec![0.0; levels];
            e[k] = 1.0;
            richardson(&rule.eps, &e, &exps, check_levels).value
        })
        .collect();
    let c = params.c_norm();
    let mut out = Vec::with_capacity(rule.point_count());
    for (s, shell) in rule.shells.iter().enumerate() {
        let mu: f64 = -c * omega[s..].iter().sum::<f64>();
        out.extend(shell.iter().map(|&(z, w)| (z, w * mu)));
    }
    out
}

/// `(-Δ)^α_Ω u(x)` as the extrapolated limit of truncations.
pub fn eval_pv(
    u: &dyn ScalarField,
    x: Point,
    params: &FracParams,
    domain: &Domain,
    cfg: &PVQuadratureConfig,
) -> Result<PvValue> {
    let rule = pv_rule(u, x, params, domain, cfg)?;
    let sums = rule.shell_sums(u)?;
    Ok(extrapolate_shells(&rule, &sums, params, cfg.richardson_levels))
}

/// Like [`eval_pv`] but fails when the extrapolation does not settle.
pub fn eval_pv_strict(
    u: &dyn ScalarField,
    x: Point,
    params: &FracParams,
    domain: &Domain,
    cfg: &PVQuadratureConfig,
) -> Result<PvValue> {
    let v = eval_pv(u, x, params, domain, cfg)?;
    if v.converged {
        Ok(v)
    } else {
        Err(Error::PvNonConvergence { point: x.to_array(), increment: v.err_est })
    }
}

/// `φ(x) = c_{N,α} ∫_{R^N \ Ω} |x - y|^{-N-2α} dy`, including the
/// normalization constant.
pub fn phi(x: Point, params: &FracParams, domain: &Domain) -> Result<f64> {
    let rho = domain.require_interior(x)?;
    let a = params.alpha();
    let c = params.c_norm();
    match *domain {
        Domain::Interval { a: lo, b: hi } => {
            Ok(c * ((hi - x.x).powf(-2.0 * a) + (x.x - lo).powf(-2.0 * a)) / (2.0 * a))
        }
        Domain::Disk { center, radius } => {
            let d = x.dist(&center);
            if d == 0.0 {
                return Ok(c * 2.0 * PI * radius.powf(-2.0 * a) / (2.0 * a));
            }
            // angle measured from the outward direction through x
            let ray = |t: f64| -d * t.cos() + (radius * radius - d * d * t.sin().powi(2)).sqrt();
            let gauss = GaussRule::new(12);
            let width = (0.5 * (rho / radius).sqrt()).min(0.1);
            let layout = PanelLayout { max_len: width, ..Default::default() };
            let half = gauss.integrate_panels(&layout.panels(0.0, PI), |t| ray(t).powf(-2.0 * a));
            Ok(c * 2.0 * half / (2.0 * a))
        }
    }
}

/// Full-space fractional Laplacian of the zero extension from the regional
/// one: `(-Δ)^α ũ(x) = (-Δ)^α_Ω u(x) + u(x) φ(x)`.
pub fn full_from_regional(regional: f64, u_value: f64, phi_value: f64) -> f64 {
    regional + u_value * phi_value
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> Domain {
        Domain::interval(-1.0, 1.0).unwrap()
    }

    #[test]
    fn constants_are_annihilated() {
        let d = line();
        let p = FracParams::new(0.75, 1).unwrap();
        let one = FnField::new(|_| 1.0);
        let cfg = PVQuadratureConfig::default();
        for x in [-0.99, -0.3, 0.0, 0.5, 0.999] {
            let v = eval_pv(&one, Point::on_line(x), &p, &d, &cfg).unwrap();
            assert_eq!(v.value, 0.0);
            assert!(v.err_est <= 1e-12);
            let t = eval_truncated(&one, Point::on_line(x), 0.1, &p, &d, &cfg).unwrap();
            assert_eq!(t.value, 0.0);
        }
    }

    #[test]
    fn odd_function_vanishes_at_center() {
        let d = line();
        let p = FracParams::new(0.75, 1).unwrap();
        let u = FnField::new(|z: Point| z.x);
        let t = eval_truncated(&u, Point::on_line(0.0), 0.5, &p, &d, &PVQuadratureConfig::default()).unwrap();
        assert!(t.value.abs() < 1e-15);
    }

    #[test]
    fn truncated_quadratic_matches_closed_form() {
        // -c * 2 * int_{1/4}^1 r^2 r^{-5/2} dr = -c * 2 * [2 r^{1/2}]_{1/4}^1 = -2c
        let d = line();
        let p = FracParams::new(0.75, 1).unwrap();
        let u = FnField::new(|z: Point| z.x * z.x);
        let t = eval_truncated(&u, Point::on_line(0.0), 0.25, &p, &d, &PVQuadratureConfig::default()).unwrap();
        let expect = -2.0 * p.c_norm();
        assert!((t.value - expect).abs() < 1e-13 * expect.abs(), "{} vs {expect}", t.value);
        assert!(!t.eps_ge_rho);
    }

    #[test]
    fn truncation_radius_beyond_rho_is_flagged() {
        let d = line();
        let p = FracParams::new(0.75, 1).unwrap();
        let u = FnField::new(|z: Point| z.x * z.x);
        let t = eval_truncated(&u, Point::on_line(0.9), 0.2, &p, &d, &PVQuadratureConfig::default()).unwrap();
        assert!(t.eps_ge_rho);
        assert!(t.value.is_finite());
    }

    #[test]
    fn pv_of_quadratic_matches_closed_form() {
        // u = z^2 at x = 0: -c [ 2 int_0^1 r^{1-2a} dr ] = -2c / (2 - 2a)
        let d = line();
        for a in [0.6, 0.75, 0.9] {
            let p = FracParams::new(a, 1).unwrap();
            let u = FnField::new(|z: Point| z.x * z.x);
            let v = eval_pv(&u, Point::on_line(0.0), &p, &d, &PVQuadratureConfig::default()).unwrap();
            let expect = -2.0 * p.c_norm() / (2.0 - 2.0 * a);
            assert!((v.value - expect).abs() < 1e-10 * expect.abs(), "a={a}: {} vs {expect}", v.value);
            assert!(v.converged);
        }
    }

    #[test]
    fn linear_weights_reproduce_extrapolation() {
        let d = line();
        let p = FracParams::new(0.7, 1).unwrap();
        let u = FnField::new(|z: Point| (3.0 * z.x).sin() * (1.0 - z.x * z.x));
        let cfg = PVQuadratureConfig::default();
        let x = Point::on_line(0.35);
        let rule = pv_rule(&u, x, &p, &d, &cfg).unwrap();
        let ux = u.value(x).unwrap();
        let lin: f64 = linear_weights(&rule, &p, cfg.richardson_levels)
            .iter()
            .map(|&(z, w)| w * (u.value(z).unwrap() - ux))
            .sum();
        let direct = eval_pv(&u, x, &p, &d, &cfg).unwrap().value;
        assert!((lin - direct).abs() < 1e-9 * direct.abs(), "{lin} vs {direct}");
    }

    #[test]
    fn phi_closed_form_interval() {
        let d = line();
        let p = FracParams::new(0.75, 1).unwrap();
        let v = phi(Point::on_line(0.0), &p, &d).unwrap();
        assert!((v - 4.0 / 3.0 * p.c_norm()).abs() < 1e-15);
        assert!(phi(Point::on_line(1.0), &p, &d).is_err());
        assert!(phi(Point::on_line(2.0), &p, &d).is_err());
    }

    #[test]
    fn phi_boundary_scaling_interval() {
        let d = line();
        let p = FracParams::new(0.75, 1).unwrap();
        let mut vals = Vec::new();
        for k in 1..30 {
            let r = 0.5f64.powi(k);
            let x = 1.0 - r;
            vals.push(phi(Point::on_line(x), &p, &d).unwrap() * r.powf(1.5));
        }
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(0.0, f64::max);
        assert!(lo > 0.0 && hi < 2.0 * p.c_norm() / 1.5 + 1e-12);
    }

    #[test]
    fn full_from_regional_arithmetic() {
        assert_eq!(full_from_regional(0.0, 0.0, 7.0), 0.0);
        assert_eq!(full_from_regional(1.5, 2.0, 0.25), 2.0);
    }

    #[test]
    fn config_validation() {
        let mut c = PVQuadratureConfig::default();
        assert!(c.validate().is_ok());
        c.eps_sequence = vec![0.1, 0.2];
        assert!(c.validate().is_err());
        c.eps_sequence = vec![0.1, -0.05];
        assert!(c.validate().is_err());
        c = PVQuadratureConfig { richardson_levels: 1, ..Default::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let d = line();
        let p = FracParams::new(0.75, 2).unwrap();
        let u = FnField::new(|_| 1.0);
        assert!(eval_pv(&u, Point::on_line(0.0), &p, &d, &PVQuadratureConfig::default()).is_err());
    }
}
