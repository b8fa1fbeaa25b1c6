//! Domains, fractional parameters and graded meshes.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// A point in the plane; one-dimensional problems use `y = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub const fn on_line(x: f64) -> Self {
        Point { x, y: 0.0 }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.x, self.y]
    }
}

/// Fractional order and the quantities derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FracParams {
    alpha: f64,
    beta: f64,
    dim: usize,
    c_norm: f64,
}

impl FracParams {
    /// Rejects `alpha` outside `(1/2, 1)` and dimensions other than 1 and 2.
    pub fn new(alpha: f64, dim: usize) -> Result<Self> {
        if !(alpha > 0.5 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha = {alpha} must lie in the open interval (1/2, 1)"
            )));
        }
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidParameter(format!("dimension {dim} not in {{1, 2}}")));
        }
        Ok(FracParams {
            alpha,
            beta: 2.0 * alpha - 1.0,
            dim,
            c_norm: normalization_constant(dim, alpha),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Boundary decay exponent `2 alpha - 1`.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `c_{N,alpha}`, the constant of the full-space fractional Laplacian.
    pub fn c_norm(&self) -> f64 {
        self.c_norm
    }

    /// Exponent of the singular kernel `|x - y|^{-(N + 2 alpha)}`.
    pub fn kernel_exponent(&self) -> f64 {
        self.dim as f64 + 2.0 * self.alpha
    }

    /// Full-space fractional Laplacian of `(1 - |x|^2)_+^alpha` on the unit
    /// ball, which is constant there.
    pub fn getoor_constant(&self) -> f64 {
        let a = self.alpha;
        let n = self.dim as f64;
        4f64.powf(a) * gamma(a + 1.0) * gamma(0.5 * n + a) / gamma(0.5 * n)
    }
}

impl<'de> Deserialize<'de> for FracParams {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            alpha: f64,
            dim: usize,
        }
        let raw = Raw::deserialize(d)?;
        FracParams::new(raw.alpha, raw.dim).map_err(serde::de::Error::custom)
    }
}

/// `4^a Gamma(N/2 + a) / (pi^{N/2} |Gamma(-a)|)`.
pub fn normalization_constant(dim: usize, alpha: f64) -> f64 {
    let n = dim as f64;
    4f64.powf(alpha) * gamma(0.5 * n + alpha) / (PI.powf(0.5 * n) * gamma(-alpha).abs())
}

/// The bounded open set on which problems are posed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Domain {
    Interval { a: f64, b: f64 },
    Disk { center: Point, radius: f64 },
}

impl Domain {
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidParameter(format!("interval needs a < b, got ({a}, {b})")));
        }
        Ok(Domain::Interval { a, b })
    }

    pub fn disk(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParameter(format!("disk radius must be positive, got {radius}")));
        }
        Ok(Domain::Disk { center, radius })
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            Domain::Disk { .. } => 2,
        }
    }

    /// Signed distance to the boundary, positive inside.
    pub fn rho(&self, p: Point) -> f64 {
        match *self {
            Domain::Interval { a, b } => (p.x - a).min(b - p.x),
            Domain::Disk { center, radius } => radius - p.dist(&center),
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        self.rho(p) > 0.0
    }

    pub fn diameter(&self) -> f64 {
        match *self {
            Domain::Interval { a, b } => b - a,
            Domain::Disk { radius, .. } => 2.0 * radius,
        }
    }

    pub fn volume(&self) -> f64 {
        match *self {
            Domain::Interval { a, b } => b - a,
            Domain::Disk { radius, .. } => PI * radius * radius,
        }
    }

    /// `|boundary|`: two points (counting measure) for an interval, the
    /// circumference for a disk.
    pub fn boundary_measure(&self) -> f64 {
        match *self {
            Domain::Interval { .. } => 2.0,
            Domain::Disk { radius, .. } => 2.0 * PI * radius,
        }
    }

    /// Unit exterior normal at a boundary point.
    pub fn exterior_normal(&self, p: Point) -> Point {
        match *self {
            Domain::Interval { a, b } => {
                if (p.x - a).abs() <= (p.x - b).abs() {
                    Point::on_line(-1.0)
                } else {
                    Point::on_line(1.0)
                }
            }
            Domain::Disk { center, .. } => {
                let d = Point::new(p.x - center.x, p.y - center.y);
                let n = d.norm();
                Point::new(d.x / n, d.y / n)
            }
        }
    }

    pub(crate) fn require_interior(&self, p: Point) -> Result<f64> {
        let r = self.rho(p);
        if r > 0.0 && r.is_finite() {
            Ok(r)
        } else {
            Err(Error::NotInterior(p.to_array()))
        }
    }
}

/// Node layout of a mesh.
#[derive(Debug, Clone, PartialEq)]
pub enum Layout {
    /// `knots[0] = a`, `knots[n + 1] = b`, interior nodes in between.
    Interval { knots: Vec<f64> },
    /// Center node plus `radii.len()` rings of `n_theta` nodes; the boundary
    /// circle is not part of `radii`.
    Polar { radii: Vec<f64>, n_theta: usize },
}

/// A cell of the mesh. Vertex indices refer to [`Mesh::vertex`] numbering:
/// interior nodes first, then boundary nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Segment { left: usize, right: usize },
    /// Sector of the innermost disk: center and two nodes on the first ring.
    CenterSector { ring_j: usize, ring_j1: usize, theta0: f64, theta1: f64 },
    /// Annular sector `[r0, r1] x [theta0, theta1]` with vertices ordered
    /// `(r0, t0), (r0, t1), (r1, t0), (r1, t1)`.
    Annular { vertices: [usize; 4], r0: f64, r1: f64, theta0: f64, theta1: f64 },
}

/// Mesh of interior nodes graded toward the boundary.
#[derive(Debug, Clone)]
pub struct Mesh {
    domain: Domain,
    nodes: Vec<Point>,
    grading_exponent: f64,
    h_max: f64,
    boundary_nodes: Vec<Point>,
    boundary_weights: Vec<f64>,
    layout: Layout,
}

fn grade(t: f64, q: f64) -> f64 {
    1.0 - (1.0 - t).powf(q)
}

impl Mesh {
    /// Graded mesh with `n` interior nodes (1D) or `n` interior rings of
    /// `4 n` nodes around a center node (disk).
    pub fn graded(domain: Domain, n: usize, q: f64) -> Result<Self> {
        if n < 4 {
            return Err(Error::InvalidParameter(format!("mesh needs n >= 4, got {n}")));
        }
        if !(q >= 1.0) || !q.is_finite() {
            return Err(Error::InvalidParameter(format!("grading exponent must be >= 1, got {q}")));
        }
        let mesh = match domain {
            Domain::Interval { a, b } => {
                let mid = 0.5 * (a + b);
                let half = 0.5 * (b - a);
                let mut knots = Vec::with_capacity(n + 2);
                knots.push(a);
                for j in 1..=n {
                    let s = -1.0 + 2.0 * j as f64 / (n as f64 + 1.0);
                    knots.push(mid + half * s.signum() * grade(s.abs(), q));
                }
                knots.push(b);
                let nodes = knots[1..=n].iter().map(|&x| Point::on_line(x)).collect();
                let h_max = knots.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
                Mesh {
                    domain,
                    nodes,
                    grading_exponent: q,
                    h_max,
                    boundary_nodes: vec![Point::on_line(a), Point::on_line(b)],
                    boundary_weights: vec![1.0, 1.0],
                    layout: Layout::Interval { knots },
                }
            }
            Domain::Disk { center, radius } => {
                let n_theta = 4 * n;
                let radii: Vec<f64> = (1..=n)
                    .map(|k| radius * grade(k as f64 / (n as f64 + 1.0), q))
                    .collect();
                let dtheta = 2.0 * PI / n_theta as f64;
                let at = |r: f64, j: usize| {
                    let t = j as f64 * dtheta;
                    Point::new(center.x + r * t.cos(), center.y + r * t.sin())
                };
                let mut nodes = Vec::with_capacity(1 + n * n_theta);
                nodes.push(center);
                for &r in &radii {
                    for j in 0..n_theta {
                        nodes.push(at(r, j));
                    }
                }
                let boundary_nodes = (0..n_theta).map(|j| at(radius, j)).collect();
                let boundary_weights = vec![radius * dtheta; n_theta];
                let mut h_max: f64 = 0.0;
                let mut r_prev = 0.0;
                for &r in radii.iter().chain(std::iter::once(&radius)) {
                    // diameter of the annular sector [r_prev, r] x [0, dtheta]
                    let chord = 2.0 * r * (0.5 * dtheta).sin();
                    let diag = (r * r + r_prev * r_prev - 2.0 * r * r_prev * dtheta.cos()).sqrt();
                    h_max = h_max.max(chord).max(diag).max(r - r_prev);
                    r_prev = r;
                }
                Mesh {
                    domain,
                    nodes,
                    grading_exponent: q,
                    h_max,
                    boundary_nodes,
                    boundary_weights,
                    layout: Layout::Polar { radii, n_theta },
                }
            }
        };
        if let Some(bad) = mesh.nodes.iter().find(|p| !(domain.rho(**p) > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "grading places node {bad:?} on the boundary; reduce n or q"
            )));
        }
        Ok(mesh)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Interior nodes (the degrees of freedom).
    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn dof_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn grading_exponent(&self) -> f64 {
        self.grading_exponent
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    pub fn boundary_nodes(&self) -> &[Point] {
        &self.boundary_nodes
    }

    pub fn boundary_weights(&self) -> &[f64] {
        &self.boundary_weights
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    /// Interior nodes followed by boundary nodes.
    pub fn vertex(&self, idx: usize) -> Point {
        if idx < self.nodes.len() {
            self.nodes[idx]
        } else {
            self.boundary_nodes[idx - self.nodes.len()]
        }
    }

    pub fn is_dof(&self, vertex: usize) -> bool {
        vertex < self.nodes.len()
    }

    /// 1D knot vector including both endpoints.
    pub fn knots(&self) -> Option<&[f64]> {
        match &self.layout {
            Layout::Interval { knots } => Some(knots),
            Layout::Polar { .. } => None,
        }
    }

    pub fn node_rho(&self) -> Vec<f64> {
        self.nodes.iter().map(|p| self.domain.rho(*p)).collect()
    }

    /// Distance from the boundary to the closest node.
    pub fn h_near(&self) -> f64 {
        self.node_rho().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Index of the node obtained by reflecting node `i` through the center.
    pub fn mirror(&self, i: usize) -> usize {
        match &self.layout {
            Layout::Interval { .. } => self.nodes.len() - 1 - i,
            Layout::Polar { n_theta, .. } => {
                if i == 0 {
                    0
                } else {
                    let ring = (i - 1) / n_theta;
                    let j = (i - 1) % n_theta;
                    1 + ring * n_theta + (j + n_theta / 2) % n_theta
                }
            }
        }
    }

    pub fn cells(&self) -> Vec<Cell> {
        match &self.layout {
            Layout::Interval { knots } => {
                let n = knots.len() - 2;
                // knot k <-> vertex: interior knot k is dof k-1, a is n, b is n+1
                let vid = |k: usize| {
                    if k == 0 {
                        n
                    } else if k == n + 1 {
                        n + 1
                    } else {
                        k - 1
                    }
                };
                (0..=n)
                    .map(|k| Cell::Segment { left: vid(k), right: vid(k + 1) })
                    .collect()
            }
            Layout::Polar { radii, n_theta } => {
                let nt = *n_theta;
                let nr = radii.len();
                let n_int = self.nodes.len();
                let dtheta = 2.0 * PI / nt as f64;
                let radius = match self.domain {
                    Domain::Disk { radius, .. } => radius,
                    _ => unreachable!(),
                };
                let ring_vertex = |ring: usize, j: usize| -> usize {
                    let j = j % nt;
                    if ring < nr {
                        1 + ring * nt + j
                    } else {
                        n_int + j
                    }
                };
                let mut cells = Vec::with_capacity(nt * (nr + 1));
                for j in 0..nt {
                    cells.push(Cell::CenterSector {
                        ring_j: ring_vertex(0, j),
                        ring_j1: ring_vertex(0, j + 1),
                        theta0: j as f64 * dtheta,
                        theta1: (j + 1) as f64 * dtheta,
                    });
                }
                for ring in 0..nr {
                    let r0 = radii[ring];
                    let r1 = if ring + 1 < nr { radii[ring + 1] } else { radius };
                    for j in 0..nt {
                        cells.push(Cell::Annular {
                            vertices: [
                                ring_vertex(ring, j),
                                ring_vertex(ring, j + 1),
                                ring_vertex(ring + 1, j),
                                ring_vertex(ring + 1, j + 1),
                            ],
                            r0,
                            r1,
                            theta0: j as f64 * dtheta,
                            theta1: (j + 1) as f64 * dtheta,
                        });
                    }
                }
                cells
            }
        }
    }

    /// Sum of boundary weights times `g`.
    pub fn boundary_integral(&self, mut g: impl FnMut(Point) -> f64) -> f64 {
        self.boundary_nodes
            .iter()
            .zip(&self.boundary_weights)
            .map(|(p, w)| w * g(*p))
            .sum()
    }

    pub fn boundary_layer(&self, delta: f64) -> Result<BoundaryLayer> {
        let rho = self.node_rho();
        let max_rho = rho.iter().copied().fold(0.0, f64::max);
        if !(delta > 0.0 && delta < max_rho) {
            return Err(Error::InvalidParameter(format!(
                "delta = {delta} must lie in (0, {max_rho})"
            )));
        }
        Ok(BoundaryLayer::classify(&rho, delta))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let (shape, params) = match self.domain {
            Domain::Interval { a, b } => ("interval", serde_json::json!({ "a": a, "b": b })),
            Domain::Disk { center, radius } => (
                "disk",
                serde_json::json!({ "center": [center.x, center.y], "radius": radius }),
            ),
        };
        let nodes: Vec<serde_json::Value> = self
            .nodes
            .iter()
            .map(|p| match self.domain {
                Domain::Interval { .. } => serde_json::json!([p.x]),
                Domain::Disk { .. } => serde_json::json!([p.x, p.y]),
            })
            .collect();
        serde_json::json!({
            "shape": shape,
            "params": params,
            "nodes": nodes,
            "grading_exponent": self.grading_exponent,
            "h_max": self.h_max,
        })
    }
}

/// Partition of the nodes into `rho > delta` and `rho < delta`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryLayer {
    pub delta: f64,
    pub omega_delta_nodes: Vec<usize>,
    pub a_delta_nodes: Vec<usize>,
}

impl BoundaryLayer {
    fn classify(rho: &[f64], delta: f64) -> Self {
        let mut omega_delta_nodes = Vec::new();
        let mut a_delta_nodes = Vec::new();
        for (i, &r) in rho.iter().enumerate() {
            if r > delta {
                omega_delta_nodes.push(i);
            } else if r < delta {
                a_delta_nodes.push(i);
            }
        }
        BoundaryLayer { delta, omega_delta_nodes, a_delta_nodes }
    }
}
