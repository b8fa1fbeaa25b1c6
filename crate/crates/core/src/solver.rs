//! Dirichlet solves: bounded, `L^2`, weighted-`L^1` and measure data,
//! nonzero boundary data, discrete Green matrices and the sign-data test
//! problem.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::analysis::{decay_fit, default_fit_window, DecayFit};
use crate::discretization::{
    assemble_gagliardo, dual_cell_weights, load_l2, load_measure, mass_matrix, vertex_weights, AssemblyConfig,
    Basis, StiffnessMatrix,
};
use crate::domain::{Domain, FracParams, Layout, Mesh, Point};
use crate::error::{Error, Result};
use crate::funcexpr::Expr;
use crate::linalg::SpdFactor;
use crate::operator::{eval_pv, ExprField, FnField, PVQuadratureConfig, ScalarField};
use crate::quadrature::{GaussRule, PanelLayout};
use crate::spline::CubicSpline;

/// How nodal values are turned into a function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Interpolation {
    /// Piecewise linear (bilinear in polar coordinates on disks).
    P1,
    /// Not-a-knot cubic spline through the knot values (intervals only).
    CubicSpline,
    /// Piecewise-linear interpolation of `u / rho^gamma`, multiplied back by
    /// `rho^gamma`; boundary values of the quotient are extrapolated
    /// linearly from the two outermost nodes.
    BoundaryWeighted(f64),
}

/// Nodal values on a mesh with an interpolation rule.
#[derive(Debug, Clone)]
pub struct GridFunction {
    mesh: Arc<Mesh>,
    coefficients: Vec<f64>,
    boundary_trace: Option<Vec<f64>>,
    rule: Interpolation,
    spline: Option<CubicSpline>,
    weighted: Option<Vec<f64>>,
}

impl GridFunction {
    pub fn new(mesh: Arc<Mesh>, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != mesh.dof_count() {
            return Err(Error::InvalidParameter(format!(
                "{} coefficients for {} degrees of freedom",
                coefficients.len(),
                mesh.dof_count()
            )));
        }
        Ok(GridFunction { mesh, coefficients, boundary_trace: None, rule: Interpolation::P1, spline: None, weighted: None })
    }

    /// Nodal interpolant of a field.
    pub fn interpolate(mesh: Arc<Mesh>, f: &dyn ScalarField) -> Result<Self> {
        let c = mesh.nodes().iter().map(|p| f.value(*p)).collect::<Result<Vec<_>>>()?;
        GridFunction::new(mesh, c)
    }

    pub fn with_trace(mut self, trace: Vec<f64>) -> Result<Self> {
        if trace.len() != self.mesh.boundary_nodes().len() {
            return Err(Error::InvalidParameter("trace length differs from boundary node count".into()));
        }
        self.boundary_trace = Some(trace);
        let rule = self.rule;
        self.with_interpolation(rule)
    }

    pub fn with_interpolation(mut self, rule: Interpolation) -> Result<Self> {
        self.spline = None;
        self.weighted = None;
        match rule {
            Interpolation::P1 => {}
            Interpolation::CubicSpline => {
                let knots = self
                    .mesh
                    .knots()
                    .ok_or_else(|| Error::Unsupported("spline interpolation needs an interval mesh".into()))?
                    .to_vec();
                let n = self.coefficients.len();
                let mut vals = Vec::with_capacity(n + 2);
                vals.push(self.vertex_value(n));
                vals.extend_from_slice(&self.coefficients);
                vals.push(self.vertex_value(n + 1));
                self.spline = Some(CubicSpline::new(knots, vals)?);
            }
            Interpolation::BoundaryWeighted(gamma) => {
                self.weighted = Some(self.weighted_vertex_values(gamma));
            }
        }
        self.rule = rule;
        Ok(self)
    }

    fn weighted_vertex_values(&self, gamma: f64) -> Vec<f64> {
        let mesh = &self.mesh;
        let n = mesh.dof_count();
        let rho = mesh.node_rho();
        let mut v: Vec<f64> = (0..n).map(|i| self.coefficients[i] / rho[i].powf(gamma)).collect();
        let extrap = |i1: usize, i2: usize, v: &[f64]| {
            // linear in rho, evaluated at rho = 0
            let (r1, r2) = (rho[i1], rho[i2]);
            v[i1] + (v[i1] - v[i2]) * r1 / (r2 - r1)
        };
        match mesh.layout() {
            Layout::Interval { .. } => {
                let left = extrap(0, 1, &v);
                let right = extrap(n - 1, n - 2, &v);
                v.push(left);
                v.push(right);
            }
            Layout::Polar { radii, n_theta } => {
                let nr = radii.len();
                let b: Vec<f64> = (0..*n_theta)
                    .map(|j| extrap(1 + (nr - 1) * n_theta + j, 1 + (nr - 2) * n_theta + j, &v))
                    .collect();
                v.extend(b);
            }
        }
        v
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficient_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.coefficients)
    }

    pub fn boundary_trace(&self) -> Option<&[f64]> {
        self.boundary_trace.as_deref()
    }

    pub fn interpolation(&self) -> Interpolation {
        self.rule
    }

    /// Interior nodes hold coefficients, boundary vertices the trace.
    pub fn vertex_value(&self, idx: usize) -> f64 {
        let n = self.coefficients.len();
        if idx < n {
            self.coefficients[idx]
        } else {
            self.boundary_trace.as_ref().map_or(0.0, |t| t[idx - n])
        }
    }

    /// Point evaluation; zero outside the closed domain.
    pub fn eval(&self, p: Point) -> f64 {
        let domain = self.mesh.domain();
        if domain.rho(p) < 0.0 {
            return 0.0;
        }
        match self.rule {
            Interpolation::CubicSpline => self.spline.as_ref().map_or(0.0, |s| s.eval(p.x)),
            Interpolation::P1 => vertex_weights(&self.mesh, p)
                .into_iter()
                .map(|(v, w)| w * self.vertex_value(v))
                .sum(),
            Interpolation::BoundaryWeighted(gamma) => {
                let vals = self.weighted.as_ref().expect("weighted values are built with the rule");
                let q: f64 = vertex_weights(&self.mesh, p).into_iter().map(|(v, w)| w * vals[v]).sum();
                q * domain.rho(p).max(0.0).powf(gamma)
            }
        }
    }

    /// CSV with columns `x[, y], rho, u` and 17 significant digits.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        let domain = self.mesh.domain();
        let two_d = domain.dim() == 2;
        if two_d {
            writeln!(out, "x,y,rho,u")?;
        } else {
            writeln!(out, "x,rho,u")?;
        }
        for (p, u) in self.mesh.nodes().iter().zip(&self.coefficients) {
            let rho = domain.rho(*p);
            if two_d {
                writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", p.x, p.y, rho, u)?;
            } else {
                writeln!(out, "{:.16e},{:.16e},{:.16e}", p.x, rho, u)?;
            }
        }
        Ok(())
    }

    /// `∫ |u|` with per-cell Gauss quadrature (intervals) or dual-cell
    /// weights (disks).
    pub fn l1_norm(&self) -> f64 {
        integrate_mesh(&self.mesh, |p| self.eval(p).abs())
    }
}

impl ScalarField for GridFunction {
    fn value(&self, p: Point) -> Result<f64> {
        Ok(self.eval(p))
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.mesh.knots().map(|k| k.to_vec()).unwrap_or_default()
    }

    fn smooth_to_boundary(&self) -> bool {
        !matches!(self.rule, Interpolation::BoundaryWeighted(_))
    }
}

impl Serialize for GridFunction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("GridFunction", 4)?;
        let nodes: Vec<[f64; 2]> = self.mesh.nodes().iter().map(|p| p.to_array()).collect();
        st.serialize_field("nodes", &nodes)?;
        st.serialize_field("values", &self.coefficients)?;
        st.serialize_field("boundary_trace", &self.boundary_trace)?;
        st.serialize_field("interpolation", &self.rule)?;
        st.end()
    }
}

/// Integral over the domain: Gauss per cell on intervals, dual-cell
/// weights over all vertices on disks.
pub fn integrate_mesh(mesh: &Mesh, mut f: impl FnMut(Point) -> f64) -> f64 {
    match mesh.layout() {
        Layout::Interval { knots } => {
            let g = GaussRule::new(8);
            knots
                .windows(2)
                .map(|w| g.integrate(w[0], w[1], |x| f(Point::on_line(x))))
                .sum()
        }
        Layout::Polar { .. } => {
            let w = dual_cell_weights(mesh);
            (0..w.len()).map(|v| w[v] * f(mesh.vertex(v))).sum()
        }
    }
}

/// `∫_Ω f ρ^gamma` with quadrature graded toward the boundary.
pub fn weighted_domain_integral(domain: &Domain, gamma: f64, f: &dyn Fn(Point) -> Result<f64>) -> Result<f64> {
    let g = GaussRule::new(10);
    match *domain {
        Domain::Interval { a, b } => {
            let mid = [0.5 * (a + b)];
            let layout = PanelLayout { breaks: &mid, grade_lo: 30, grade_hi: 30, max_len: 0.05 * (b - a), ..Default::default() };
            let mut s = 0.0;
            for (lo, hi) in layout.panels(a, b) {
                for (x, w) in g.mapped(lo, hi) {
                    let p = Point::on_line(x);
                    s += w * f(p)? * domain.rho(p).powf(gamma);
                }
            }
            Ok(s)
        }
        Domain::Disk { center, radius } => {
            let layout = PanelLayout { grade_hi: 30, max_len: 0.05 * radius, ..Default::default() };
            let n_theta = 128;
            let dt = 2.0 * PI / n_theta as f64;
            let mut s = 0.0;
            for (lo, hi) in layout.panels(0.0, radius) {
                for (r, w) in g.mapped(lo, hi) {
                    for j in 0..n_theta {
                        let t = (j as f64 + 0.5) * dt;
                        let p = Point::new(center.x + r * t.cos(), center.y + r * t.sin());
                        s += w * dt * r * f(p)? * (radius - r).powf(gamma);
                    }
                }
            }
            Ok(s)
        }
    }
}

/// A finite Radon measure: Dirac atoms plus an optional density.
#[derive(Debug, Clone, Serialize)]
pub struct MeasureData {
    atoms: Vec<(Point, f64)>,
    density: Option<Expr>,
    weighted_mass: f64,
}

impl MeasureData {
    /// Validates the atoms and computes `Σ |w_k| ρ(x_k)^β + ∫ |density| ρ^β`.
    pub fn new(atoms: Vec<(Point, f64)>, density: Option<Expr>, domain: &Domain, beta: f64) -> Result<Self> {
        let mut mass = 0.0;
        for &(p, w) in &atoms {
            let r = domain.require_interior(p)?;
            if !w.is_finite() {
                return Err(Error::InvalidParameter(format!("atom weight {w} is not finite")));
            }
            mass += w.abs() * r.powf(beta);
        }
        if let Some(d) = &density {
            mass += weighted_domain_integral(domain, beta, &|p| Ok(d.eval(p, domain)?.abs()))?;
        }
        if !mass.is_finite() {
            return Err(Error::InvalidParameter("measure has infinite weighted mass".into()));
        }
        Ok(MeasureData { atoms, density, weighted_mass: mass })
    }

    pub fn atoms(&self) -> &[(Point, f64)] {
        &self.atoms
    }

    pub fn density(&self) -> Option<&Expr> {
        self.density.as_ref()
    }

    pub fn weighted_mass(&self) -> f64 {
        self.weighted_mass
    }
}

/// Right-hand side of a solve.
#[derive(Clone, Copy)]
pub enum Source<'a> {
    Expr(&'a Expr),
    Field(&'a dyn ScalarField),
    /// Nodal values; the load is the mass matrix applied to them.
    Nodal(&'a [f64]),
}

/// Solution with diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub solution: GridFunction,
    pub residual_linf: f64,
    pub energy: f64,
    pub l1_norm: f64,
    pub decay_fit: Option<DecayFit>,
    pub flags: Vec<String>,
    /// Observed constants and other named scalars.
    pub diagnostics: BTreeMap<String, f64>,
}

/// `K = A^{-1}` and `G = K M`.
#[derive(Debug, Clone)]
pub struct GreenMatrix {
    pub k: DMatrix<f64>,
    pub g: DMatrix<f64>,
}

impl GreenMatrix {
    /// Discrete Green kernel between nodes `i` and `j`. With loads
    /// `b_j ≈ f(x_j) w_j` the nodal solution is `Σ_j K_ij b_j`, the
    /// quadrature of `∫ G(x_i, y) f(y) dy`, so the kernel is `K_ij`.
    pub fn kernel(&self, i: usize, j: usize) -> f64 {
        self.k[(i, j)]
    }
}

/// Assembled and factored Galerkin system on a mesh.
#[derive(Debug, Clone)]
pub struct GalerkinSystem {
    mesh: Arc<Mesh>,
    basis: Basis,
    params: FracParams,
    stiffness: StiffnessMatrix,
    mass: DMatrix<f64>,
    factor: SpdFactor,
    assembly: AssemblyConfig,
}

impl GalerkinSystem {
    pub fn new(mesh: Mesh, params: FracParams) -> Result<Self> {
        Self::with_config(Arc::new(mesh), params, AssemblyConfig::default())
    }

    pub fn with_config(mesh: Arc<Mesh>, params: FracParams, assembly: AssemblyConfig) -> Result<Self> {
        let basis = Basis::p1(&mesh);
        let stiffness = assemble_gagliardo(&mesh, &basis, &params, &assembly)?;
        let mass = mass_matrix(&mesh, &basis)?;
        let factor = SpdFactor::new(stiffness.entries.clone())?;
        Ok(GalerkinSystem { mesh, basis, params, stiffness, mass, factor, assembly })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn params(&self) -> &FracParams {
        &self.params
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness.entries
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    pub fn factor(&self) -> &SpdFactor {
        &self.factor
    }

    pub fn load(&self, f: Source<'_>) -> Result<DVector<f64>> {
        let b = match f {
            Source::Expr(e) => load_l2(&ExprField::new(e, self.mesh.domain()), &self.mesh, &self.basis, self.assembly.gauss_order)?,
            Source::Field(fld) => load_l2(fld, &self.mesh, &self.basis, self.assembly.gauss_order)?,
            Source::Nodal(v) => {
                if v.len() != self.basis.dof_count {
                    return Err(Error::InvalidParameter("nodal data length differs from dof count".into()));
                }
                &self.mass * DVector::from_column_slice(v)
            }
        };
        if let Some(i) = b.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("load entry {i} is not finite")));
        }
        Ok(b)
    }

    /// Discrete `L^2` norm of the data.
    pub fn l2_norm(&self, f: Source<'_>) -> Result<f64> {
        match f {
            Source::Nodal(v) => {
                let v = DVector::from_column_slice(v);
                Ok(v.dot(&(&self.mass * &v)).sqrt())
            }
            Source::Expr(e) => {
                let fld = ExprField::new(e, self.mesh.domain());
                self.field_l2(&fld)
            }
            Source::Field(fld) => self.field_l2(fld),
        }
    }

    fn field_l2(&self, f: &dyn ScalarField) -> Result<f64> {
        let mut err = None;
        let s = integrate_mesh(&self.mesh, |p| match f.value(p) {
            Ok(v) => v * v,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(s.sqrt()),
        }
    }

    pub fn solve_load(&self, b: &DVector<f64>) -> DVector<f64> {
        self.factor.solve(b)
    }

    fn report(&self, c: DVector<f64>, b: &DVector<f64>) -> Result<SolveReport> {
        let residual_linf = (&self.stiffness.entries * &c - b).amax();
        let energy = c.dot(&(&self.stiffness.entries * &c)).max(0.0);
        let solution = GridFunction::new(self.mesh.clone(), c.as_slice().to_vec())?;
        let l1_norm = solution.l1_norm();
        Ok(SolveReport {
            solution,
            residual_linf,
            energy,
            l1_norm,
            decay_fit: None,
            flags: Vec::new(),
            diagnostics: BTreeMap::new(),
        })
    }

    /// Weak solution for `L^2` data.
    pub fn solve_weak_l2(&self, f: Source<'_>) -> Result<SolveReport> {
        let b = self.load(f)?;
        let c = self.solve_load(&b);
        let mut rep = self.report(c, &b)?;
        let fl2 = self.l2_norm(f)?;
        rep.diagnostics.insert("f_l2".into(), fl2);
        if fl2 > 0.0 {
            rep.diagnostics.insert("c_obs_energy".into(), rep.energy.sqrt() / fl2);
        }
        Ok(rep)
    }

    /// Solution for bounded data, with a pointwise residual at interior
    /// check points (`rho >= 0.1 diam`, intervals) and a boundary decay fit.
    pub fn solve_classical(&self, f: Source<'_>, cfg: &PVQuadratureConfig) -> Result<SolveReport> {
        let mut rep = self.solve_weak_l2(f)?;
        let domain = *self.mesh.domain();
        if domain.dim() == 1 {
            let spline = rep.solution.clone().with_interpolation(Interpolation::CubicSpline)?;
            let diam = domain.diameter();
            let mut worst: f64 = 0.0;
            let mut unconverged = 0;
            for (i, p) in self.mesh.nodes().iter().enumerate() {
                if domain.rho(*p) < 0.1 * diam {
                    continue;
                }
                let v = eval_pv(&spline, *p, &self.params, &domain, cfg)?;
                if !v.converged {
                    unconverged += 1;
                }
                let fx = match f {
                    Source::Expr(e) => e.eval(*p, &domain)?,
                    Source::Field(fld) => fld.value(*p)?,
                    Source::Nodal(vals) => vals[i],
                };
                worst = worst.max((v.value - fx).abs());
            }
            rep.diagnostics.insert("pointwise_residual".into(), worst);
            rep.residual_linf = rep.residual_linf.max(worst);
            if unconverged > 0 {
                rep.flags.push(format!("principal value not converged at {unconverged} check points"));
            }
        } else {
            rep.flags.push("pointwise residual is not evaluated on disk meshes".into());
        }
        match decay_fit(&rep.solution, default_fit_window(&self.mesh)) {
            Ok(fit) => {
                if (fit.exponent - self.params.beta()).abs() > 0.05 {
                    rep.flags.push(format!("decay exponent {:.4} differs from beta {:.4}", fit.exponent, self.params.beta()));
                }
                rep.decay_fit = Some(fit);
            }
            Err(e) => rep.flags.push(format!("decay fit unavailable: {e}")),
        }
        let sup = rep
            .solution
            .coefficients()
            .iter()
            .zip(self.mesh.node_rho())
            .map(|(u, r)| u.abs() / r.powf(self.params.beta()))
            .fold(0.0, f64::max);
        rep.diagnostics.insert("sup_u_over_rho_beta".into(), sup);
        Ok(rep)
    }

    /// Galerkin realization of the Green operator.
    pub fn green_matrix(&self) -> GreenMatrix {
        let k = self.factor.inverse();
        let g = &k * &self.mass;
        GreenMatrix { k, g }
    }

    /// Very weak solution for measure data.
    pub fn solve_very_weak(&self, mu: &MeasureData) -> Result<SolveReport> {
        let b = load_measure(mu, &self.mesh, &self.basis, self.assembly.gauss_order)?;
        let c = self.solve_load(&b);
        let mut rep = self.report(c.clone(), &b)?;
        let wm = mu.weighted_mass();
        rep.diagnostics.insert("weighted_mass".into(), wm);
        if wm > 0.0 {
            rep.diagnostics.insert("c_obs_l1".into(), rep.l1_norm / wm);
        }
        let domain = *self.mesh.domain();
        let mut worst: f64 = 0.0;
        for xi in test_panel(&domain) {
            let xc = DVector::from_iterator(self.basis.dof_count, self.mesh.nodes().iter().map(|p| xi(*p)));
            let lhs = c.dot(&(&self.stiffness.entries * &xc));
            let mut rhs: f64 = mu.atoms().iter().map(|&(p, w)| w * xi(p)).sum();
            if let Some(d) = mu.density() {
                rhs += weighted_domain_integral(&domain, 0.0, &|p| Ok(d.eval(p, &domain)? * xi(p)))?;
            }
            worst = worst.max((lhs - rhs).abs());
        }
        rep.diagnostics.insert("very_weak_residual".into(), worst);
        if domain.dim() == 2 && !mu.atoms().is_empty() {
            rep.flags.push("atoms are spread over the cell containing them".into());
        }
        Ok(rep)
    }

    /// Solution with boundary data `g`: `u = u0 + G` where `G` lifts `g`
    /// and `u0` solves the zero-boundary problem with data
    /// `f - (-Δ)^α_Ω G`.
    pub fn solve_nonzero_boundary(&self, f: Source<'_>, g: &Expr, cfg: &PVQuadratureConfig) -> Result<SolveReport> {
        let domain = *self.mesh.domain();
        let trace: Vec<f64> = self
            .mesh
            .boundary_nodes()
            .iter()
            .map(|p| g.eval(*p, &domain))
            .collect::<std::result::Result<_, _>>()?;
        let lift = Lifting::fit(&domain, self.mesh.boundary_nodes(), &trace)?;
        let mut flags = Vec::new();
        let b = if lift.is_zero() {
            self.load(f)?
        } else if lift.is_constant() {
            // constants are annihilated exactly
            self.load(f)?
        } else {
            let unconverged = std::cell::Cell::new(0usize);
            let params = self.params;
            let lf = FnField::new(|p: Point| lift.eval(p));
            let adjusted = AdjustedSource {
                f,
                domain,
                pv: &|p: Point| {
                    let v = eval_pv(&lf, p, &params, &domain, cfg)?;
                    if !v.converged {
                        unconverged.set(unconverged.get() + 1);
                    }
                    Ok(v.value)
                },
            };
            let b = match f {
                Source::Nodal(vals) => {
                    let adj = self
                        .mesh
                        .nodes()
                        .iter()
                        .zip(vals)
                        .map(|(p, v)| Ok(v - (adjusted.pv)(*p)?))
                        .collect::<Result<Vec<_>>>()?;
                    self.load(Source::Nodal(&adj))?
                }
                _ => self.load(Source::Field(&adjusted))?,
            };
            if unconverged.get() > 0 {
                flags.push(format!("lifting principal value not converged at {} points", unconverged.get()));
            }
            b
        };
        let c0 = self.solve_load(&b);
        let residual_linf = (&self.stiffness.entries * &c0 - &b).amax();
        let energy = c0.dot(&(&self.stiffness.entries * &c0)).max(0.0);
        let values: Vec<f64> = c0
            .iter()
            .zip(self.mesh.nodes())
            .map(|(u, p)| u + lift.eval(*p))
            .collect();
        let solution = GridFunction::new(self.mesh.clone(), values)?.with_trace(trace)?;
        let l1_norm = solution.l1_norm();
        let mut diagnostics = BTreeMap::new();
        diagnostics.insert("lifting_residual".into(), lift.residual);
        Ok(SolveReport { solution, residual_linf, energy, l1_norm, decay_fit: None, flags, diagnostics })
    }

    /// Solution with the interpolated sign field as data.
    pub fn sign_test_problem(&self, s: &[i8]) -> Result<GridFunction> {
        if let Some(bad) = s.iter().find(|v| !(-1..=1).contains(*v)) {
            return Err(Error::InvalidParameter(format!("sign entry {bad} not in {{-1, 0, 1}}")));
        }
        let vals: Vec<f64> = s.iter().map(|&v| v as f64).collect();
        let b = self.load(Source::Nodal(&vals))?;
        GridFunction::new(self.mesh.clone(), self.solve_load(&b).as_slice().to_vec())
    }
}

struct AdjustedSource<'a> {
    f: Source<'a>,
    domain: Domain,
    pv: &'a dyn Fn(Point) -> Result<f64>,
}

impl ScalarField for AdjustedSource<'_> {
    fn value(&self, p: Point) -> Result<f64> {
        let fv = match self.f {
            Source::Expr(e) => e.eval(p, &self.domain)?,
            Source::Field(fld) => fld.value(p)?,
            Source::Nodal(_) => unreachable!("nodal data is adjusted at the nodes"),
        };
        Ok(fv - (self.pv)(p)?)
    }
}

/// Smooth lifting of boundary data: affine on intervals, a harmonic
/// polynomial `a_0 + Σ_{k ≤ 8} (r/R)^k (a_k cos kθ + b_k sin kθ)` on disks.
#[derive(Debug, Clone)]
pub struct Lifting {
    domain: Domain,
    coef: Vec<(f64, f64)>,
    pub residual: f64,
}

pub const HARMONIC_DEGREE: usize = 8;

impl Lifting {
    pub fn fit(domain: &Domain, nodes: &[Point], trace: &[f64]) -> Result<Self> {
        match *domain {
            Domain::Interval { .. } => Ok(Lifting { domain: *domain, coef: vec![(trace[0], trace[1])], residual: 0.0 }),
            Domain::Disk { center, .. } => {
                let m = nodes.len();
                if m < 2 * HARMONIC_DEGREE + 1 {
                    return Err(Error::InvalidParameter("too few boundary nodes for the harmonic fit".into()));
                }
                let theta: Vec<f64> = nodes.iter().map(|p| (p.y - center.y).atan2(p.x - center.x)).collect();
                let mut coef = Vec::with_capacity(HARMONIC_DEGREE + 1);
                let mean = trace.iter().sum::<f64>() / m as f64;
                coef.push((mean, 0.0));
                for k in 1..=HARMONIC_DEGREE {
                    let kf = k as f64;
                    let a = 2.0 / m as f64 * trace.iter().zip(&theta).map(|(g, t)| g * (kf * t).cos()).sum::<f64>();
                    let b = 2.0 / m as f64 * trace.iter().zip(&theta).map(|(g, t)| g * (kf * t).sin()).sum::<f64>();
                    coef.push((a, b));
                }
                let mut lift = Lifting { domain: *domain, coef, residual: 0.0 };
                lift.residual = nodes
                    .iter()
                    .zip(trace)
                    .map(|(p, g)| (lift.eval(*p) - g).abs())
                    .fold(0.0, f64::max);
                if lift.residual > 1e-8 {
                    return Err(Error::LiftingResidual(lift.residual));
                }
                Ok(lift)
            }
        }
    }

    pub fn eval(&self, p: Point) -> f64 {
        match self.domain {
            Domain::Interval { a, b } => {
                let (ga, gb) = self.coef[0];
                ga + (gb - ga) * (p.x - a) / (b - a)
            }
            Domain::Disk { center, radius } => {
                let dx = p.x - center.x;
                let dy = p.y - center.y;
                let s = dx.hypot(dy) / radius;
                let t = dy.atan2(dx);
                let mut v = self.coef[0].0;
                for (k, &(a, b)) in self.coef.iter().enumerate().skip(1) {
                    let kf = k as f64;
                    v += s.powi(k as i32) * (a * (kf * t).cos() + b * (kf * t).sin());
                }
                v
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match self.domain {
            Domain::Interval { .. } => self.coef[0].0 == self.coef[0].1,
            Domain::Disk { .. } => self.coef.iter().skip(1).all(|&(a, b)| a == 0.0 && b == 0.0),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.is_constant() && self.coef[0].0 == 0.0
    }
}

/// Smooth zero-trace functions used to probe very weak solutions.
pub fn test_panel(domain: &Domain) -> Vec<Box<dyn Fn(Point) -> f64>> {
    match *domain {
        Domain::Interval { a, b } => {
            let mid = 0.5 * (a + b);
            let half = 0.5 * (b - a);
            let t = move |p: Point| (p.x - mid) / half;
            vec![
                Box::new(move |p| (1.0 - t(p).powi(2)).powi(2)),
                Box::new(move |p| t(p) * (1.0 - t(p).powi(2)).powi(2)),
                Box::new(move |p| (0.5 * PI * t(p)).cos() * (1.0 - t(p).powi(2))),
            ]
        }
        Domain::Disk { center, radius } => {
            let s = move |p: Point| p.dist(&center).powi(2) / (radius * radius);
            vec![
                Box::new(move |p| (1.0 - s(p)).powi(2)),
                Box::new(move |p| (p.x - center.x) / radius * (1.0 - s(p)).powi(2)),
            ]
        }
    }
}
