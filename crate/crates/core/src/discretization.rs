//! Stiffness, collocation, mass and load assembly for continuous
//! piecewise-linear hat functions vanishing on the boundary.
//!
//! On an interval the Gagliardo form is integrated cell pair by cell pair:
//! the self pair in closed form, touching pairs after a Duffy change of
//! variables `s = λ w, t = λ (1 - w)` that absorbs the kernel singularity,
//! and separated pairs by tensor Gauss rules with bisection of the larger
//! cell until the pair is well separated.
//!
//! On the disk the form is discretized by nodal quadrature with dual-cell
//! weights over all mesh nodes (boundary ring included), which gives a
//! graph Laplacian with nonpositive off-diagonal entries. Mass and loads
//! are lumped on the same weights.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::domain::{Domain, FracParams, Layout, Mesh, Point};
use crate::error::{Error, Result};
use crate::operator::{linear_weights, pv_rule, PVQuadratureConfig, ScalarField};
use crate::quadrature::{GaussRule, PanelLayout};
use crate::solver::MeasureData;
use crate::spline::{locate, second_derivative_operator, segment_weights};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisKind {
    P1Hat,
}

/// Nodal hat functions on the interior nodes of a mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Basis {
    pub kind: BasisKind,
    pub dof_count: usize,
}

impl Basis {
    pub fn p1(mesh: &Mesh) -> Self {
        Basis { kind: BasisKind::P1Hat, dof_count: mesh.dof_count() }
    }

    /// Value of hat `i` at `p` (zero outside the closed domain).
    pub fn eval(&self, mesh: &Mesh, i: usize, p: Point) -> f64 {
        vertex_weights(mesh, p)
            .into_iter()
            .find(|&(v, _)| v == i)
            .map_or(0.0, |(_, w)| w)
    }
}

/// Nonzero hat values at `p` as `(vertex, weight)` pairs; vertices use the
/// numbering of [`Mesh::vertex`], so boundary vertices may appear. Empty
/// outside the closed domain.
pub fn vertex_weights(mesh: &Mesh, p: Point) -> Vec<(usize, f64)> {
    match (mesh.layout(), *mesh.domain()) {
        (Layout::Interval { knots }, _) => {
            let n = knots.len() - 2;
            if p.x < knots[0] || p.x > knots[n + 1] {
                return Vec::new();
            }
            let k = locate(knots, p.x);
            let s = (p.x - knots[k]) / (knots[k + 1] - knots[k]);
            let vid = |k: usize| if k == 0 { n } else if k == n + 1 { n + 1 } else { k - 1 };
            vec![(vid(k), 1.0 - s), (vid(k + 1), s)]
        }
        (Layout::Polar { radii, n_theta }, Domain::Disk { center, radius }) => {
            let dx = p.x - center.x;
            let dy = p.y - center.y;
            let r = dx.hypot(dy);
            if r > radius {
                return Vec::new();
            }
            let nt = *n_theta;
            let nr = radii.len();
            let n_int = mesh.dof_count();
            let dtheta = 2.0 * PI / nt as f64;
            let theta = dy.atan2(dx).rem_euclid(2.0 * PI);
            let j = ((theta / dtheta).floor() as usize).min(nt - 1);
            let s = theta / dtheta - j as f64;
            let ring_vertex = |ring: usize, j: usize| {
                let j = j % nt;
                if ring < nr {
                    1 + ring * nt + j
                } else {
                    n_int + j
                }
            };
            if r < radii[0] {
                let t = r / radii[0];
                return vec![
                    (0, 1.0 - t),
                    (ring_vertex(0, j), t * (1.0 - s)),
                    (ring_vertex(0, j + 1), t * s),
                ];
            }
            let ring = radii.partition_point(|&q| q <= r) - 1;
            let r0 = radii[ring];
            let r1 = if ring + 1 < nr { radii[ring + 1] } else { radius };
            let t = ((r - r0) / (r1 - r0)).clamp(0.0, 1.0);
            vec![
                (ring_vertex(ring, j), (1.0 - t) * (1.0 - s)),
                (ring_vertex(ring, j + 1), (1.0 - t) * s),
                (ring_vertex(ring + 1, j), t * (1.0 - s)),
                (ring_vertex(ring + 1, j + 1), t * s),
            ]
        }
        _ => unreachable!("layout and domain disagree"),
    }
}

/// Dual-cell area weights of every vertex of a disk mesh (interior nodes
/// then boundary ring); they sum to the disk area.
pub fn dual_cell_weights(mesh: &Mesh) -> Vec<f64> {
    match (mesh.layout(), *mesh.domain()) {
        (Layout::Polar { radii, n_theta }, Domain::Disk { radius, .. }) => {
            let nt = *n_theta;
            let dtheta = 2.0 * PI / nt as f64;
            let mut rings: Vec<f64> = radii.clone();
            rings.push(radius);
            let mut w = Vec::with_capacity(1 + rings.len() * nt);
            w.push(PI * (0.5 * rings[0]).powi(2));
            for (k, &r) in rings.iter().enumerate() {
                let lo = if k == 0 { 0.5 * r } else { 0.5 * (rings[k - 1] + r) };
                let hi = if k + 1 < rings.len() { 0.5 * (r + rings[k + 1]) } else { radius };
                let area = 0.5 * dtheta * (hi * hi - lo * lo);
                w.extend(std::iter::repeat_n(area, nt));
            }
            w
        }
        _ => Vec::new(),
    }
}

/// Assembly quadrature settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssemblyConfig {
    /// Gauss order per direction for separated cell pairs and loads.
    pub gauss_order: usize,
    /// Gauss order for the Duffy-transformed touching pairs.
    pub duffy_order: usize,
}

impl Default for AssemblyConfig {
    fn default() -> Self {
        AssemblyConfig { gauss_order: 8, duffy_order: 16 }
    }
}

/// Dense symmetric Gagliardo stiffness matrix.
#[derive(Debug, Clone)]
pub struct StiffnessMatrix {
    pub entries: DMatrix<f64>,
    /// `max |A - A^T| / max |A|` before symmetrization.
    pub assembly_tolerance: f64,
}

/// `A_ij = (c/2) ∬ (φ_i(x) - φ_i(y)) (φ_j(x) - φ_j(y)) |x - y|^{-N-2α}`.
pub fn assemble_gagliardo(mesh: &Mesh, basis: &Basis, params: &FracParams, cfg: &AssemblyConfig) -> Result<StiffnessMatrix> {
    check_dims(mesh, basis, params)?;
    let mut a = match mesh.layout() {
        Layout::Interval { knots } => gagliardo_1d(knots, params, cfg),
        Layout::Polar { .. } => gagliardo_nodal(mesh, params),
    };
    let amax = a.amax();
    let asym = (&a - a.transpose()).amax();
    let tol = if amax > 0.0 { asym / amax } else { 0.0 };
    a = (&a + a.transpose()) * 0.5;
    check_finite(&a)?;
    Ok(StiffnessMatrix { entries: a, assembly_tolerance: tol })
}

fn check_dims(mesh: &Mesh, basis: &Basis, params: &FracParams) -> Result<()> {
    if basis.dof_count != mesh.dof_count() {
        return Err(Error::InvalidParameter("basis does not belong to this mesh".into()));
    }
    if params.dim() != mesh.dim() {
        return Err(Error::InvalidParameter(format!(
            "parameters are {}-dimensional but the mesh is {}-dimensional",
            params.dim(),
            mesh.dim()
        )));
    }
    Ok(())
}

fn check_finite(a: &DMatrix<f64>) -> Result<()> {
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let v = a[(i, j)];
            if !v.is_finite() {
                return Err(Error::NonFiniteEntry { row: i, col: j, value: v });
            }
        }
    }
    Ok(())
}

fn gagliardo_1d(knots: &[f64], params: &FracParams, cfg: &AssemblyConfig) -> DMatrix<f64> {
    let n = knots.len() - 2;
    let alpha = params.alpha();
    let c = params.c_norm();
    let p = -1.0 - 2.0 * alpha;
    let dof = |k: usize| if k >= 1 && k <= n { Some(k - 1) } else { None };
    let mut a = DMatrix::<f64>::zeros(n, n);
    let scatter = |ks: &[usize], local: &[f64], a: &mut DMatrix<f64>| {
        let m = ks.len();
        for (r, &kr) in ks.iter().enumerate() {
            let Some(i) = dof(kr) else { continue };
            for (s, &ks_) in ks.iter().enumerate() {
                if let Some(j) = dof(ks_) {
                    a[(i, j)] += local[r * m + s];
                }
            }
        }
    };
    let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();

    // self pairs
    let denom = (2.0 - 2.0 * alpha) * (3.0 - 2.0 * alpha);
    for k in 0..=n {
        let v = c * h[k].powf(1.0 - 2.0 * alpha) / denom;
        scatter(&[k, k + 1], &[v, -v, -v, v], &mut a);
    }

    // touching pairs
    let duffy = GaussRule::new(cfg.duffy_order);
    let e3 = 3.0 - 2.0 * alpha;
    for k in 1..=n {
        let (h1, h2) = (h[k - 1], h[k]);
        let ws = h1 / (h1 + h2);
        let lam = |w: f64| {
            let lmax = if w <= ws { h2 / (1.0 - w) } else { h1 / w };
            lmax.powf(e3) / e3
        };
        let mut i_ww = 0.0;
        let mut i_wm = 0.0;
        let mut i_mm = 0.0;
        for (lo, hi) in [(0.0, ws), (ws, 1.0)] {
            for (w, g) in duffy.mapped(lo, hi) {
                let l = g * lam(w);
                i_ww += w * w * l;
                i_wm += w * (1.0 - w) * l;
                i_mm += (1.0 - w) * (1.0 - w) * l;
            }
        }
        let av = [-1.0 / h1, 1.0 / h1, 0.0];
        let bv = [0.0, -1.0 / h2, 1.0 / h2];
        let mut local = [0.0; 9];
        for r in 0..3 {
            for s in 0..3 {
                local[r * 3 + s] = c * (i_ww * av[r] * av[s] + i_wm * (av[r] * bv[s] + bv[r] * av[s]) + i_mm * bv[r] * bv[s]);
            }
        }
        scatter(&[k - 1, k, k + 1], &local, &mut a);
    }

    // separated pairs
    let gauss = GaussRule::new(cfg.gauss_order);
    for k1 in 0..=n {
        for k2 in (k1 + 2)..=n {
            let mut local = [0.0; 16];
            separated_block(
                (knots[k1], knots[k1 + 1]),
                (knots[k2], knots[k2 + 1]),
                (knots[k1], knots[k1 + 1]),
                (knots[k2], knots[k2 + 1]),
                p,
                &gauss,
                &mut local,
            );
            for v in local.iter_mut() {
                *v *= c;
            }
            scatter(&[k1, k1 + 1, k2, k2 + 1], &local, &mut a);
        }
    }
    a
}

/// Adds `∬ v vᵀ |x - y|^p` over `xs × ys` (`xs` left of `ys`) where
/// `v = (N_l(x), N_r(x), -N_l(y), -N_r(y))` on the full cells `cx`, `cy`.
fn separated_block(
    xs: (f64, f64),
    ys: (f64, f64),
    cx: (f64, f64),
    cy: (f64, f64),
    p: f64,
    gauss: &GaussRule,
    out: &mut [f64; 16],
) {
    let lx = xs.1 - xs.0;
    let ly = ys.1 - ys.0;
    let gap = ys.0 - xs.1;
    if gap < lx.max(ly) {
        if lx >= ly {
            let m = 0.5 * (xs.0 + xs.1);
            separated_block((xs.0, m), ys, cx, cy, p, gauss, out);
            separated_block((m, xs.1), ys, cx, cy, p, gauss, out);
        } else {
            let m = 0.5 * (ys.0 + ys.1);
            separated_block(xs, (ys.0, m), cx, cy, p, gauss, out);
            separated_block(xs, (m, ys.1), cx, cy, p, gauss, out);
        }
        return;
    }
    let hx = cx.1 - cx.0;
    let hy = cy.1 - cy.0;
    for (x, wx) in gauss.mapped(xs.0, xs.1) {
        let sx = (x - cx.0) / hx;
        for (y, wy) in gauss.mapped(ys.0, ys.1) {
            let sy = (y - cy.0) / hy;
            let k = wx * wy * (y - x).powf(p);
            let v = [1.0 - sx, sx, sy - 1.0, -sy];
            for r in 0..4 {
                let kv = k * v[r];
                for s in r..4 {
                    out[r * 4 + s] += kv * v[s];
                }
            }
        }
    }
    for r in 0..4 {
        for s in 0..r {
            out[r * 4 + s] = out[s * 4 + r];
        }
    }
}

fn gagliardo_nodal(mesh: &Mesh, params: &FracParams) -> DMatrix<f64> {
    let w = dual_cell_weights(mesh);
    let n = mesh.dof_count();
    let total = w.len();
    let c = params.c_norm();
    let p = -params.kernel_exponent();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let xi = mesh.vertex(i);
        let mut diag = 0.0;
        for q in 0..total {
            if q == i {
                continue;
            }
            let k = w[q] * xi.dist(&mesh.vertex(q)).powf(p);
            diag += k;
            if q < n {
                a[(i, q)] = -c * w[i] * k;
            }
        }
        a[(i, i)] = c * w[i] * diag;
    }
    a
}

/// `M_ij = ∫ φ_i φ_j`: consistent on intervals, lumped on disks.
pub fn mass_matrix(mesh: &Mesh, basis: &Basis) -> Result<DMatrix<f64>> {
    if basis.dof_count != mesh.dof_count() {
        return Err(Error::InvalidParameter("basis does not belong to this mesh".into()));
    }
    let n = mesh.dof_count();
    let mut m = DMatrix::<f64>::zeros(n, n);
    match mesh.layout() {
        Layout::Interval { knots } => {
            for k in 0..=n {
                let h = knots[k + 1] - knots[k];
                let l = if k >= 1 { Some(k - 1) } else { None };
                let r = if k < n { Some(k) } else { None };
                if let Some(i) = l {
                    m[(i, i)] += h / 3.0;
                }
                if let Some(j) = r {
                    m[(j, j)] += h / 3.0;
                }
                if let (Some(i), Some(j)) = (l, r) {
                    m[(i, j)] += h / 6.0;
                    m[(j, i)] += h / 6.0;
                }
            }
        }
        Layout::Polar { .. } => {
            let w = dual_cell_weights(mesh);
            for i in 0..n {
                m[(i, i)] = w[i];
            }
        }
    }
    Ok(m)
}

/// `b_i = ∫ f φ_i` by per-cell Gauss quadrature (intervals) or lumped
/// nodal quadrature (disks).
pub fn load_l2(f: &dyn ScalarField, mesh: &Mesh, basis: &Basis, order: usize) -> Result<DVector<f64>> {
    if basis.dof_count != mesh.dof_count() {
        return Err(Error::InvalidParameter("basis does not belong to this mesh".into()));
    }
    let n = mesh.dof_count();
    let mut b = DVector::<f64>::zeros(n);
    match mesh.layout() {
        Layout::Interval { knots } => {
            let g = GaussRule::new(order);
            for k in 0..=n {
                let (lo, hi) = (knots[k], knots[k + 1]);
                for (x, w) in g.mapped(lo, hi) {
                    let fx = f.value(Point::on_line(x)).map_err(|e| cell_error(e, lo, hi))?;
                    let s = (x - lo) / (hi - lo);
                    if k >= 1 {
                        b[k - 1] += w * fx * (1.0 - s);
                    }
                    if k < n {
                        b[k] += w * fx * s;
                    }
                }
            }
        }
        Layout::Polar { .. } => {
            let w = dual_cell_weights(mesh);
            for i in 0..n {
                b[i] = w[i] * f.value(mesh.vertex(i))?;
            }
        }
    }
    Ok(b)
}

fn cell_error(e: Error, lo: f64, hi: f64) -> Error {
    Error::Numerical(format!("load evaluation failed in cell [{lo}, {hi}]: {e}"))
}

/// `b_i = Σ_k w_k φ_i(x_k) + ∫ density φ_i`. On a disk an atom is spread
/// over the vertices of the cell containing it with the bilinear hat
/// weights (a one-cell mollification).
pub fn load_measure(mu: &MeasureData, mesh: &Mesh, basis: &Basis, order: usize) -> Result<DVector<f64>> {
    let domain = mesh.domain();
    let mut b = match mu.density() {
        Some(d) => load_l2(&crate::operator::ExprField::new(d, domain), mesh, basis, order)?,
        None => DVector::zeros(basis.dof_count),
    };
    for &(p, w) in mu.atoms() {
        domain.require_interior(p)?;
        for (v, phi) in vertex_weights(mesh, p) {
            if mesh.is_dof(v) {
                b[v] += w * phi;
            }
        }
    }
    Ok(b)
}

/// Interval-only field whose breakpoints are the mesh knots; used to build
/// quadrature rules that follow the spline pieces.
struct KnotField<'a> {
    knots: &'a [f64],
}

impl ScalarField for KnotField<'_> {
    fn value(&self, _p: Point) -> Result<f64> {
        Ok(0.0)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.knots[1..self.knots.len() - 1].to_vec()
    }

    fn smooth_to_boundary(&self) -> bool {
        true
    }
}

/// Pointwise operator applied to the not-a-knot cubic spline through the
/// nodal values (with zero end values).
///
/// Hat functions have a kink at their own node where the principal value
/// diverges for `α > 1/2`, so the cardinal splines of the knot vector stand
/// in for them; they interpolate the same nodal values.
#[derive(Debug, Clone)]
pub struct CollocationMatrix {
    pub entries: DMatrix<f64>,
    /// Rows evaluated pointwise; other rows are zero and must be replaced
    /// by the Galerkin representation (see [`CollocationMatrix::weak_apply`]).
    pub assembled_rows: Vec<bool>,
    /// Off-diagonal entries with positive sign, as `(row, col)`.
    pub sign_violations: Vec<(usize, usize)>,
}

/// Assembles the collocation matrix at nodes with
/// `rho >= h_min_factor * h_max`.
pub fn assemble_collocation(
    mesh: &Mesh,
    basis: &Basis,
    params: &FracParams,
    cfg: &PVQuadratureConfig,
    h_min_factor: f64,
) -> Result<CollocationMatrix> {
    check_dims(mesh, basis, params)?;
    let knots = mesh
        .knots()
        .ok_or_else(|| Error::Unsupported("collocation is implemented on intervals only".into()))?;
    let n = mesh.dof_count();
    let q = second_derivative_operator(knots)?;
    let field = KnotField { knots };
    let rho = mesh.node_rho();
    let threshold = h_min_factor * mesh.h_max();
    let mut l = DMatrix::<f64>::zeros(n, n);
    let mut assembled = vec![false; n];
    let nk = knots.len();
    for i in 0..n {
        if rho[i] < threshold {
            continue;
        }
        let x = mesh.nodes()[i];
        let rule = pv_rule(&field, x, params, mesh.domain(), cfg)?;
        let weights = linear_weights(&rule, params, cfg.richardson_levels);
        let mut coef = vec![[0.0f64; 4]; nk - 1];
        let mut total = 0.0;
        for (z, w) in weights {
            let k = locate(knots, z.x);
            let sw = segment_weights(knots, k, z.x);
            for t in 0..4 {
                coef[k][t] += w * sw[t];
            }
            total += w;
        }
        let mut row = vec![0.0; nk];
        for (k, cf) in coef.iter().enumerate() {
            row[k] += cf[0];
            row[k + 1] += cf[1];
            for j in 1..=n {
                row[j] += cf[2] * q[(k, j)] + cf[3] * q[(k + 1, j)];
            }
        }
        row[i + 1] -= total;
        for j in 0..n {
            let v = row[j + 1];
            if !v.is_finite() {
                return Err(Error::NonFiniteEntry { row: i, col: j, value: v });
            }
            l[(i, j)] = v;
        }
        assembled[i] = true;
    }
    let mut sign_violations = Vec::new();
    for i in 0..n {
        if !assembled[i] {
            continue;
        }
        for j in 0..n {
            if j != i && l[(i, j)] > 0.0 {
                sign_violations.push((i, j));
            }
        }
    }
    Ok(CollocationMatrix { entries: l, assembled_rows: assembled, sign_violations })
}

impl CollocationMatrix {
    pub fn apply(&self, c: &DVector<f64>) -> DVector<f64> {
        &self.entries * c
    }

    /// Rows of the weak form that depend on unassembled collocation rows.
    pub fn galerkin_rows(&self, mass: &DMatrix<f64>) -> Vec<bool> {
        let n = self.assembled_rows.len();
        (0..n)
            .map(|i| (0..n).any(|k| !self.assembled_rows[k] && mass[(i, k)] != 0.0))
            .collect()
    }

    /// Weak-form operator `M (L c)`, with rows touching unassembled
    /// collocation rows taken from the stiffness matrix instead.
    pub fn weak_apply(&self, mass: &DMatrix<f64>, stiffness: &DMatrix<f64>, c: &DVector<f64>) -> DVector<f64> {
        let mut w = mass * self.apply(c);
        let ac = stiffness * c;
        for (i, g) in self.galerkin_rows(mass).into_iter().enumerate() {
            if g {
                w[i] = ac[i];
            }
        }
        w
    }
}

/// Writes `rows cols` then one row per line, 17 significant digits.
pub fn write_matrix_text(m: &DMatrix<f64>, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{} {}", m.nrows(), m.ncols())?;
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.16e}", m[(i, j)])).collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    Ok(())
}

/// Writes `index,value` rows with a header.
pub fn write_vector_csv(v: &DVector<f64>, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "index,value")?;
    for (i, x) in v.iter().enumerate() {
        writeln!(out, "{i},{x:.16e}")?;
    }
    Ok(())
}

/// `W_ij = ∫ φ_i φ_j ρ^{-2α}` with quadrature graded toward the boundary
/// (intervals) or lumped (disks).
pub fn hardy_weight_matrix(mesh: &Mesh, params: &FracParams) -> Result<DMatrix<f64>> {
    let n = mesh.dof_count();
    let e = -2.0 * params.alpha();
    let mut w = DMatrix::<f64>::zeros(n, n);
    match (mesh.layout(), *mesh.domain()) {
        (Layout::Interval { knots }, Domain::Interval { a, b }) => {
            let g = GaussRule::new(12);
            for k in 0..=n {
                let (lo, hi) = (knots[k], knots[k + 1]);
                let len = hi - lo;
                // offsets from the boundary end keep rho exact in the
                // boundary cells; t runs from hi down to lo in the last cell
                let last = k == n;
                let mid = [if last { hi - 0.5 * (a + b) } else { 0.5 * (a + b) - lo }];
                let layout = PanelLayout {
                    breaks: &mid,
                    grade_lo: if k == 0 || last { 40 } else { 0 },
                    ..Default::default()
                };
                let mut loc = [0.0; 3];
                for (plo, phi) in layout.panels(0.0, len) {
                    for (t, wt) in g.mapped(plo, phi) {
                        let s = if last { 1.0 - t / len } else { t / len };
                        let rho = if k == 0 || last { t } else { (lo + t - a).min(b - lo - t) };
                        let r = rho.powf(e) * wt;
                        loc[0] += r * (1.0 - s) * (1.0 - s);
                        loc[1] += r * (1.0 - s) * s;
                        loc[2] += r * s * s;
                    }
                }
                if k >= 1 {
                    w[(k - 1, k - 1)] += loc[0];
                }
                if k < n {
                    w[(k, k)] += loc[2];
                }
                if k >= 1 && k < n {
                    w[(k - 1, k)] += loc[1];
                    w[(k, k - 1)] += loc[1];
                }
            }
        }
        _ => {
            let dw = dual_cell_weights(mesh);
            let rho = mesh.node_rho();
            for i in 0..n {
                w[(i, i)] = dw[i] * rho[i].powf(e);
            }
        }
    }
    check_finite(&w)?;
    Ok(w)
}
