//! Diagnostics: boundary decay fits, integration-by-parts gaps,
//! Hardy and Poincare quotients, Green-kernel and `φ` bounds, the fractional
//! normal derivative and the boundary representation formula.

use std::io::Write;

use nalgebra::DVector;
use serde::Serialize;

use crate::discretization::{hardy_weight_matrix, CollocationMatrix};
use crate::domain::{normalization_constant, Domain, FracParams, Mesh, Point};
use crate::error::{Error, Result};
use crate::funcexpr::Expr;
use crate::linalg::smallest_pencil_eigenvalue;
use crate::operator::{eval_pv, phi, ExprField, PVQuadratureConfig, ScalarField};
use crate::quadrature::{richardson, GaussRule, PanelLayout};
use crate::solver::{integrate_mesh, GalerkinSystem, GreenMatrix, GridFunction, Interpolation, Source};

/// Least-squares power law `|u| ≈ e^intercept ρ^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub fit_window: (f64, f64),
    pub points_used: usize,
}

/// `(3 h_near, 0.1 diam)`.
pub fn default_fit_window(mesh: &Mesh) -> (f64, f64) {
    (3.0 * mesh.h_near(), 0.1 * mesh.domain().diameter())
}

/// Fits a line through `(log ρ_i, log |u_i|)` over nodes with `ρ_i` in
/// the closed window.
pub fn decay_fit(u: &GridFunction, window: (f64, f64)) -> Result<DecayFit> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidParameter(format!("fit window ({lo}, {hi}) is empty")));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (v, r) in u.coefficients().iter().zip(u.mesh().node_rho()) {
        if r >= lo && r <= hi {
            if *v == 0.0 {
                return Err(Error::Numerical(format!("zero value at rho = {r} inside the fit window")));
            }
            xs.push(r.ln());
            ys.push(v.abs().ln());
        }
    }
    let m = xs.len();
    if m < 4 {
        return Err(Error::InvalidParameter(format!("only {m} nodes inside the fit window, need 4")));
    }
    let mf = m as f64;
    let mx = xs.iter().sum::<f64>() / mf;
    let my = ys.iter().sum::<f64>() / mf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Numerical("all window nodes share one rho".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(DecayFit { exponent: slope, intercept: my - slope * mx, r_squared: r2, fit_window: window, points_used: m })
}

/// The three discretizations of `∫ u (-Δ)^α_Ω v = (c/2) ∬ ... = ∫ v (-Δ)^α_Ω u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IbpReport {
    pub lhs: f64,
    pub bilinear: f64,
    pub rhs: f64,
    pub max_pairwise_gap: f64,
}

impl IbpReport {
    pub fn relative_gap(&self) -> f64 {
        let m = self.lhs.abs().max(self.bilinear.abs()).max(self.rhs.abs());
        if m == 0.0 {
            0.0
        } else {
            self.max_pairwise_gap / m
        }
    }
}

pub fn ibp_check(u: &GridFunction, v: &GridFunction, sys: &GalerkinSystem, l: &CollocationMatrix) -> IbpReport {
    let uc = u.coefficient_vector();
    let vc = v.coefficient_vector();
    let a = sys.stiffness();
    let m = sys.mass();
    let lhs = uc.dot(&l.weak_apply(m, a, &vc));
    let bilinear = uc.dot(&(a * &vc));
    let rhs = vc.dot(&l.weak_apply(m, a, &uc));
    let gap = (lhs - bilinear).abs().max((lhs - rhs).abs()).max((bilinear - rhs).abs());
    IbpReport { lhs, bilinear, rhs, max_pairwise_gap: gap }
}

/// `min_c (cᵀ A c) / (cᵀ W c)` with `W_ij = ∫ φ_i φ_j ρ^{-2α}`.
pub fn hardy_quotient(sys: &GalerkinSystem) -> Result<f64> {
    let w = hardy_weight_matrix(sys.mesh(), sys.params())?;
    let (lam, _) = smallest_pencil_eigenvalue(sys.factor(), &w, 1e-12, 5000)?;
    Ok(lam)
}

/// `max_c (cᵀ M c) / (cᵀ A c)`.
pub fn poincare_constant(sys: &GalerkinSystem) -> Result<f64> {
    let (lam, _) = smallest_pencil_eigenvalue(sys.factor(), sys.mass(), 1e-12, 5000)?;
    Ok(1.0 / lam)
}

/// Extrapolated fractional normal derivative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalDerivative {
    pub value: f64,
    pub err_est: f64,
    pub converged: bool,
    pub quotients: Vec<f64>,
}

/// Six radii `0.1 diam 2^{-k}`. The window has a fixed physical size so
/// that, under mesh refinement, every sample is taken where the discrete
/// function resolves the `ρ^β` profile.
pub fn default_t_sequence(mesh: &Mesh) -> Vec<f64> {
    let t_max = 0.1 * mesh.domain().diameter();
    (0..6).map(|k| t_max * 0.5f64.powi(k)).collect()
}

/// Exponents of `t` in the expansion of `(ξ(x) - ξ(x - t n)) / t^β` for
/// `ξ = φ_1 ρ^β + φ_2` with smooth `φ_1`, `φ_2` and zero trace:
/// `1 - β, 1, 2 - β, 2, ...`, the first `count` of them.
pub fn normal_derivative_exponents(beta: f64, count: usize) -> Vec<f64> {
    let mut e = Vec::with_capacity(count + 1);
    let mut k = 1.0;
    while e.len() < count {
        e.push(k - beta);
        e.push(k);
        k += 1.0;
    }
    e.truncate(count);
    e
}

/// `lim (ξ(x) - ξ(x - t n_x)) / t^β` at a boundary point, by Richardson
/// extrapolation with the first `orders` exponents of
/// [`normal_derivative_exponents`].
pub fn frac_normal_derivative(
    xi: &dyn ScalarField,
    boundary_point: Point,
    domain: &Domain,
    params: &FracParams,
    t_sequence: &[f64],
    orders: usize,
) -> Result<NormalDerivative> {
    if t_sequence.len() < 2 || t_sequence.windows(2).any(|w| !(w[1] < w[0])) || t_sequence.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidParameter("t sequence must be positive and strictly decreasing".into()));
    }
    if domain.rho(boundary_point).abs() > 1e-12 * domain.diameter() {
        return Err(Error::InvalidParameter(format!("{boundary_point:?} is not on the boundary")));
    }
    let n = domain.exterior_normal(boundary_point);
    let beta = params.beta();
    let xb = xi.value(boundary_point)?;
    let quotients = t_sequence
        .iter()
        .map(|&t| {
            let p = Point::new(boundary_point.x - t * n.x, boundary_point.y - t * n.y);
            Ok((xb - xi.value(p)?) / t.powf(beta))
        })
        .collect::<Result<Vec<_>>>()?;
    let exps = normal_derivative_exponents(beta, orders);
    let ex = richardson(t_sequence, &quotients, &exps, 3);
    Ok(NormalDerivative { value: ex.value, err_est: ex.err_est, converged: ex.converged, quotients })
}

/// `κ = c_{1,α} |J|`, `J = ∫_0^1 ∫_1^∞ (t^β - s^β) (s - t)^{-1-2α} ds dt`:
/// the flux through a flat boundary point of the regional operator applied
/// to `ρ^β`, per unit fractional normal derivative. With the substitution
/// `t = r s` the double integral reduces to
/// `J = ∫_0^1 (r^β - 1) (1 - r)^{-1-2α} ln(1/r) dr`.
pub fn boundary_flux_constant(alpha: f64) -> f64 {
    let beta = 2.0 * alpha - 1.0;
    let g = GaussRule::new(16);
    let layout = PanelLayout { grade_lo: 10, grade_hi: 60, ..Default::default() };
    // in u = 1 - r, written to avoid cancellation near r = 1; the substitution
    // u = v^p removes the u^{1-2α} endpoint singularity
    let p = 1.0 / (2.0 - 2.0 * alpha);
    let j = g.integrate_panels(&layout.panels(0.0, 1.0), |v| {
        if v <= 0.0 {
            return 0.0;
        }
        let u = v.powf(p);
        let l = (-u).ln_1p();
        (beta * l).exp_m1() * (-l) * u.powf(-1.0 - 2.0 * alpha) * p * v.powf(p - 1.0)
    });
    normalization_constant(1, alpha) * j.abs()
}

/// Test function for the boundary representation formula.
pub enum TestFunction {
    /// Discrete solution `ξ` of `(-Δ)^α_Ω ξ = source`.
    Solved { xi: GridFunction, source: Expr },
    /// Closed-form zero-trace function.
    Closed(Expr),
}

/// Pieces of `∫ u (-Δ)^α_Ω ξ = ∫ f ξ + boundary term`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryRepresentation {
    /// `∫ u (-Δ)^α_Ω ξ`.
    pub lhs: f64,
    /// `∫ f ξ`.
    pub source_term: f64,
    /// `Σ g ∂^β ξ / ∂n^β ω` over boundary nodes.
    pub boundary_sum: f64,
    pub normal_derivatives: Vec<f64>,
    pub kappa: f64,
    /// `|lhs - source_term - boundary_sum|`.
    pub residual: f64,
    /// `|lhs - source_term + κ boundary_sum|`.
    pub residual_with_flux_constant: f64,
}

/// Evaluates both sides of the boundary representation formula for the
/// solution `u` of a nonzero-boundary problem with data `f`, `g`.
pub fn boundary_representation(
    u: &GridFunction,
    f: &Expr,
    g: &Expr,
    xi: &TestFunction,
    sys: &GalerkinSystem,
    cfg: &PVQuadratureConfig,
) -> Result<BoundaryRepresentation> {
    let mesh = sys.mesh();
    let domain = *mesh.domain();
    let params = *sys.params();
    let mut failure = None;
    let mut guard = |r: Result<f64>| match r {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    let (lhs, source_term, derivs) = match xi {
        TestFunction::Solved { xi, source } => {
            let lhs = integrate_mesh(mesh, |p| u.eval(p) * guard(source.eval(p, &domain).map_err(Error::from)));
            let st = integrate_mesh(mesh, |p| guard(f.eval(p, &domain).map_err(Error::from)) * xi.eval(p));
            let weighted = xi.clone().with_interpolation(Interpolation::BoundaryWeighted(params.beta()))?;
            let ts = default_t_sequence(mesh);
            let d = mesh
                .boundary_nodes()
                .iter()
                .map(|b| Ok(frac_normal_derivative(&weighted, *b, &domain, &params, &ts, 2)?.value))
                .collect::<Result<Vec<_>>>()?;
            (lhs, st, d)
        }
        TestFunction::Closed(e) => {
            let field = ExprField::new(e, &domain);
            let lhs = integrate_mesh(mesh, |p| {
                if domain.rho(p) <= 0.0 {
                    return 0.0;
                }
                u.eval(p) * guard(eval_pv(&field, p, &params, &domain, cfg).map(|v| v.value))
            });
            let st = integrate_mesh(mesh, |p| {
                guard(f.eval(p, &domain).map_err(Error::from)) * guard(e.eval(p, &domain).map_err(Error::from))
            });
            let ts: Vec<f64> = (0..6).map(|k| 1e-3 * domain.diameter() * 0.5f64.powi(k)).collect();
            let d = mesh
                .boundary_nodes()
                .iter()
                .map(|b| Ok(frac_normal_derivative(&field, *b, &domain, &params, &ts, 2)?.value))
                .collect::<Result<Vec<_>>>()?;
            (lhs, st, d)
        }
    };
    if let Some(e) = failure {
        return Err(e);
    }
    let mut boundary_sum = 0.0;
    for ((b, w), d) in mesh.boundary_nodes().iter().zip(mesh.boundary_weights()).zip(&derivs) {
        boundary_sum += g.eval(*b, &domain)? * d * w;
    }
    let kappa = boundary_flux_constant(params.alpha());
    Ok(BoundaryRepresentation {
        lhs,
        source_term,
        boundary_sum,
        normal_derivatives: derivs,
        kappa,
        residual: (lhs - source_term - boundary_sum).abs(),
        residual_with_flux_constant: (lhs - source_term + kappa * boundary_sum).abs(),
    })
}

/// One row of the pairwise kernel table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreenRow {
    pub i: usize,
    pub j: usize,
    pub kernel: f64,
    pub bound: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreenBound {
    pub ratio_sup: f64,
    /// `max |G_h(i, j) - G_h(j, i)|`.
    pub asymmetry: f64,
    pub kernel_max: f64,
    pub rows: Vec<GreenRow>,
}

impl GreenBound {
    pub fn write_csv(&self, mesh: &Mesh, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "i,j,xi,yi,xj,yj,kernel,bound,ratio")?;
        for r in &self.rows {
            let (p, q) = (mesh.nodes()[r.i], mesh.nodes()[r.j]);
            writeln!(
                out,
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.i, r.j, p.x, p.y, q.x, q.y, r.kernel, r.bound, r.ratio
            )?;
        }
        Ok(())
    }
}

/// `sup_{i≠j} G_h(x_i, x_j) / min(|x_i - x_j|^{2α-N}, ρ_i^β ρ_j^β / |x_i - x_j|^{N-1+β})`.
pub fn green_bound_check(green: &GreenMatrix, mesh: &Mesh, params: &FracParams) -> GreenBound {
    let n = mesh.dof_count();
    let nf = params.dim() as f64;
    let a = params.alpha();
    let b = params.beta();
    let rho = mesh.node_rho();
    let mut rows = Vec::with_capacity(n * n.saturating_sub(1));
    let mut sup: f64 = 0.0;
    let mut asym: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = mesh.nodes()[i].dist(&mesh.nodes()[j]);
            let bound = d.powf(2.0 * a - nf).min(rho[i].powf(b) * rho[j].powf(b) / d.powf(nf - 1.0 + b));
            let k = green.kernel(i, j);
            let ratio = k / bound;
            sup = sup.max(ratio);
            asym = asym.max((k - green.kernel(j, i)).abs());
            rows.push(GreenRow { i, j, kernel: k, bound, ratio });
        }
    }
    GreenBound { ratio_sup: sup, asymmetry: asym, kernel_max: green.k.amax(), rows }
}

/// Min and max of `φ(x_i) ρ(x_i)^{2α}` over the nodes.
pub fn phi_bound_check(mesh: &Mesh, params: &FracParams) -> Result<(f64, f64)> {
    let domain = mesh.domain();
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for p in mesh.nodes() {
        let v = phi(*p, params, domain)? * domain.rho(*p).powf(2.0 * params.alpha());
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo, hi))
}

/// Machine-readable outcome of a check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub check: String,
    pub params: serde_json::Value,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Solves `(-Δ)^α_Ω ξ = 1` and packages it as a test function.
pub fn solved_test_function(sys: &GalerkinSystem) -> Result<TestFunction> {
    let one = Expr::constant(1.0);
    let rep = sys.solve_weak_l2(Source::Expr(&one))?;
    Ok(TestFunction::Solved { xi: rep.solution, source: one })
}

/// Coefficients of the nodal interpolant of a closure.
pub fn nodal(mesh: &Mesh, f: impl Fn(Point) -> f64) -> DVector<f64> {
    DVector::from_iterator(mesh.dof_count(), mesh.nodes().iter().map(|p| f(*p)))
}
