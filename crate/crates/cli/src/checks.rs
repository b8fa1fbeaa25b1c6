//! Named diagnostics run by `verify`. Each produces one [`Verdict`].

use std::f64::consts::PI;

use anyhow::{bail, Result};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::json;

use regfrac::analysis::{
    decay_fit, frac_normal_derivative, green_bound_check, hardy_quotient, ibp_check, phi_bound_check, poincare_constant,
    DecayFit, Verdict,
};
use regfrac::discretization::assemble_collocation;
use regfrac::operator::{eval_pv, phi, ExprField, FnField};
use regfrac::solver::{GalerkinSystem, Source};
use regfrac::{Domain, Expr, GridFunction, Mesh, Point};

use crate::config::{RunConfig, Setup};

pub const KNOWN: &[&str] = &[
    "annihilation",
    "getoor",
    "decay",
    "comparison",
    "ibp",
    "poincare",
    "hardy",
    "energy_bound",
    "green_bound",
    "phi_bound",
    "normal_derivative",
];

const ANNIHILATION_TOL: f64 = 1e-10;
const DISK_ANNIHILATION_TOL: f64 = 1e-8;
const GETOOR_REL_TOL: f64 = 5e-3;
const COMPARISON_REL_TOL: f64 = 1e-9;
const IBP_REL_TOL: f64 = 0.01;
const NORM_DRIFT: f64 = 0.25;
const MESH_STABLE_FACTOR: f64 = 2.0;
const GREEN_SYMMETRY_TOL: f64 = 1e-10;
const NORMAL_DERIVATIVE_TOL: f64 = 1e-3;

/// Rejects empty, unknown and inapplicable check lists before any work.
pub fn validate(cfg: &RunConfig, setup: &Setup) -> Result<()> {
    if cfg.checks.is_empty() {
        bail!("no checks requested; refusing to report a vacuous verification");
    }
    for c in &cfg.checks {
        if !KNOWN.contains(&c.as_str()) {
            bail!("unknown check {c:?}; known checks: {}", KNOWN.join(", "));
        }
        if c == "ibp" && setup.domain.dim() != 1 {
            bail!("check \"ibp\" needs collocation, which is implemented on intervals only");
        }
    }
    if cfg.mesh.n < 8 {
        bail!("verify needs mesh.n >= 8 (mesh-stability checks also use n/2)");
    }
    Ok(())
}

pub struct Context<'a> {
    cfg: &'a RunConfig,
    setup: &'a Setup,
    fine: Option<GalerkinSystem>,
    coarse: Option<GalerkinSystem>,
}

fn drift(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

fn ratio(a: f64, b: f64) -> f64 {
    a.max(b) / a.min(b)
}

impl<'a> Context<'a> {
    pub fn new(cfg: &'a RunConfig, setup: &'a Setup) -> Self {
        Context { cfg, setup, fine: None, coarse: None }
    }

    /// Systems on the configured mesh and on the mesh with `n / 2`.
    fn systems(&mut self) -> Result<(&GalerkinSystem, &GalerkinSystem)> {
        let s = self.setup;
        if self.fine.is_none() {
            self.fine = Some(GalerkinSystem::with_config(s.mesh.clone(), s.params, self.cfg.assembly)?);
        }
        if self.coarse.is_none() {
            let mesh = Mesh::graded(s.domain, self.cfg.mesh.n / 2, self.cfg.mesh.q)?;
            self.coarse = Some(GalerkinSystem::with_config(mesh.into(), s.params, self.cfg.assembly)?);
        }
        Ok((self.fine.as_ref().expect("built above"), self.coarse.as_ref().expect("built above")))
    }

    fn fine(&mut self) -> Result<&GalerkinSystem> {
        Ok(self.systems()?.0)
    }

    fn rng(&self, salt: u64) -> StdRng {
        StdRng::seed_from_u64(self.cfg.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(salt))
    }

    fn params_json(&self, extra: serde_json::Value) -> serde_json::Value {
        let mut v = json!({ "alpha": self.cfg.alpha, "n": self.cfg.mesh.n, "q": self.cfg.mesh.q, "seed": self.cfg.seed });
        if let (Some(o), Some(e)) = (v.as_object_mut(), extra.as_object()) {
            o.extend(e.clone());
        }
        v
    }

    fn verdict(&self, check: &str, extra: serde_json::Value, value: f64, threshold: f64, pass: bool) -> Verdict {
        Verdict { check: check.into(), params: self.params_json(extra), value, threshold, pass }
    }

    pub fn run(&mut self, check: &str) -> Result<Verdict> {
        match check {
            "annihilation" => self.annihilation(),
            "getoor" => self.getoor(),
            "decay" => self.decay(),
            "comparison" => self.comparison(),
            "ibp" => self.ibp(),
            "poincare" => self.quotient("poincare"),
            "hardy" => self.quotient("hardy"),
            "energy_bound" => self.energy_bound(),
            "green_bound" => self.green_bound(),
            "phi_bound" => self.phi_bound(),
            "normal_derivative" => self.normal_derivative(),
            other => bail!("unknown check {other:?}"),
        }
    }

    /// Half the diameter: the radius of the disk, half the interval length.
    fn scale(&self) -> f64 {
        0.5 * self.setup.domain.diameter()
    }

    fn center(&self) -> Point {
        match self.setup.domain {
            Domain::Interval { a, b } => Point::on_line(0.5 * (a + b)),
            Domain::Disk { center, .. } => center,
        }
    }

    /// Normalized first coordinate, in `(-1, 1)` inside the domain.
    fn t_of(&self) -> impl Fn(Point) -> f64 + Copy {
        let (c, l) = (self.center(), self.scale());
        move |p: Point| (p.x - c.x) / l
    }

    fn random_interior(&self, rng: &mut StdRng) -> Point {
        let (c, l) = (self.center(), self.scale());
        match self.setup.domain {
            Domain::Interval { .. } => Point::on_line(c.x + l * rng.random_range(-0.99..0.99)),
            Domain::Disk { .. } => {
                let (r, t) = (l * rng.random_range(0.0..0.95f64).sqrt(), rng.random_range(0.0..2.0 * PI));
                Point::new(c.x + r * t.cos(), c.y + r * t.sin())
            }
        }
    }

    fn annihilation(&mut self) -> Result<Verdict> {
        let s = self.setup;
        let mut rng = self.rng(1);
        let one = Expr::constant(1.0);
        let field = ExprField::new(&one, &s.domain);
        let mut worst: f64 = 0.0;
        for _ in 0..50 {
            let x = self.random_interior(&mut rng);
            worst = worst.max(eval_pv(&field, x, &s.params, &s.domain, &self.cfg.quadrature)?.value.abs());
        }
        let tol = if s.domain.dim() == 1 { ANNIHILATION_TOL } else { DISK_ANNIHILATION_TOL };
        Ok(self.verdict("annihilation", json!({ "points": 50 }), worst, tol, worst <= tol))
    }

    /// Regional operator of `(1 - |x - c|^2 / L^2)^α_+` plus `u φ` against
    /// the Getoor constant `C L^{-2α}` at nine points on the first axis.
    fn getoor(&mut self) -> Result<Verdict> {
        let s = self.setup;
        let (c, l, a) = (self.center(), self.scale(), s.params.alpha());
        let u = move |p: Point| (1.0 - (p.dist(&c) / l).powi(2)).max(0.0).powf(a);
        let field = FnField::new(u);
        let target = s.params.getoor_constant() * l.powf(-2.0 * a);
        let mut worst: f64 = 0.0;
        for k in 0..9 {
            let x = Point::new(c.x + l * (-0.8 + 0.2 * k as f64), c.y);
            let pv = eval_pv(&field, x, &s.params, &s.domain, &self.cfg.quadrature)?.value;
            let full = pv + u(x) * phi(x, &s.params, &s.domain)?;
            worst = worst.max((full - target).abs() / target);
        }
        Ok(self.verdict("getoor", json!({ "points": 9, "constant": target }), worst, GETOOR_REL_TOL, worst <= GETOOR_REL_TOL))
    }

    fn decay(&mut self) -> Result<Verdict> {
        let cfg = self.cfg;
        let beta = self.setup.params.beta();
        let window = decay_window(cfg, self.setup);
        let one = Expr::constant(1.0);
        let rep = self.fine()?.solve_classical(Source::Expr(&one), &cfg.quadrature)?;
        let fit: DecayFit = decay_fit(&rep.solution, window)?;
        let target = cfg.fit.expected.unwrap_or(beta);
        let err = (fit.exponent - target).abs();
        Ok(self.verdict(
            "decay",
            json!({ "exponent": fit.exponent, "target": target, "window": window, "r_squared": fit.r_squared }),
            err,
            cfg.fit.tolerance,
            err <= cfg.fit.tolerance,
        ))
    }

    fn comparison(&mut self) -> Result<Verdict> {
        let mut rng = self.rng(4);
        let sys = self.fine()?;
        let n = sys.mesh().dof_count();
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..200 {
            let f2: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let f1: Vec<f64> =
                f2.iter().map(|v| if rng.random_bool(0.3) { *v } else { v + rng.random_range(0.0..1.0) }).collect();
            let u1 = sys.solve_load(&sys.load(Source::Nodal(&f1))?);
            let u2 = sys.solve_load(&sys.load(Source::Nodal(&f2))?);
            let scale = u1.amax();
            for (a, b) in u1.iter().zip(u2.iter()) {
                worst = worst.max((b - a) / scale);
            }
        }
        let u0 = sys.solve_weak_l2(Source::Nodal(&vec![0.0; n]))?;
        let zero_exact = u0.solution.coefficients().iter().all(|&v| v == 0.0);
        Ok(self.verdict(
            "comparison",
            json!({ "pairs": 200, "zero_data_exact": zero_exact }),
            worst,
            COMPARISON_REL_TOL,
            worst <= COMPARISON_REL_TOL && zero_exact,
        ))
    }

    fn ibp(&mut self) -> Result<Verdict> {
        let mut rng = self.rng(5);
        let t = self.t_of();
        let quad = self.cfg.quadrature.clone();
        let sys = self.fine()?;
        let coll = assemble_collocation(sys.mesh(), sys.basis(), sys.params(), &quad, 1.0)?;
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let fu = random_smooth(&mut rng, t);
            let fv = random_smooth(&mut rng, t);
            let u = GridFunction::interpolate(sys.mesh().clone(), &FnField::new(&fu))?;
            let v = GridFunction::interpolate(sys.mesh().clone(), &FnField::new(&fv))?;
            worst = worst.max(ibp_check(&u, &v, sys, &coll).relative_gap());
        }
        Ok(self.verdict("ibp", json!({ "pairs": 20 }), worst, IBP_REL_TOL, worst <= IBP_REL_TOL))
    }

    fn quotient(&mut self, which: &str) -> Result<Verdict> {
        let (fine, coarse) = self.systems()?;
        let f = if which == "hardy" { hardy_quotient } else { poincare_constant };
        let (vc, vf) = (f(coarse)?, f(fine)?);
        let d = drift(vc, vf);
        let pass = vc > 0.0 && vf > 0.0 && vf.is_finite() && d < NORM_DRIFT;
        Ok(self.verdict(which, json!({ "coarse": vc, "fine": vf }), d, NORM_DRIFT, pass))
    }

    fn energy_bound(&mut self) -> Result<Verdict> {
        let t = self.t_of();
        let seed_rng = self.rng(7);
        let (fine, coarse) = self.systems()?;
        let mut c_obs = [0.0f64; 2];
        for (k, s) in [coarse, fine].into_iter().enumerate() {
            let mut rng = seed_rng.clone();
            for _ in 0..20 {
                let f = random_l2_data(&mut rng, t);
                let rep = s.solve_weak_l2(Source::Field(&FnField::new(&f)))?;
                c_obs[k] = c_obs[k].max(rep.diagnostics.get("c_obs_energy").copied().unwrap_or(0.0));
            }
        }
        let r = ratio(c_obs[0], c_obs[1]);
        let pass = c_obs.iter().all(|c| c.is_finite() && *c > 0.0) && r < MESH_STABLE_FACTOR;
        Ok(self.verdict("energy_bound", json!({ "c_obs_coarse": c_obs[0], "c_obs_fine": c_obs[1] }), r, MESH_STABLE_FACTOR, pass))
    }

    fn green_bound(&mut self) -> Result<Verdict> {
        let (fine, coarse) = self.systems()?;
        let gc = green_bound_check(&coarse.green_matrix(), coarse.mesh(), coarse.params());
        let gf = green_bound_check(&fine.green_matrix(), fine.mesh(), fine.params());
        let r = ratio(gc.ratio_sup, gf.ratio_sup);
        let asym = gf.asymmetry / gf.kernel_max;
        let pass = gc.ratio_sup.is_finite() && gf.ratio_sup.is_finite() && gf.ratio_sup > 0.0 && r < MESH_STABLE_FACTOR
            && asym <= GREEN_SYMMETRY_TOL;
        Ok(self.verdict(
            "green_bound",
            json!({ "ratio_sup_coarse": gc.ratio_sup, "ratio_sup_fine": gf.ratio_sup, "relative_asymmetry": asym }),
            r,
            MESH_STABLE_FACTOR,
            pass,
        ))
    }

    fn phi_bound(&mut self) -> Result<Verdict> {
        let s = self.setup;
        let coarse = Mesh::graded(s.domain, self.cfg.mesh.n / 2, self.cfg.mesh.q)?;
        let (c, f) = (phi_bound_check(&coarse, &s.params)?, phi_bound_check(&s.mesh, &s.params)?);
        let r = ratio(c.0, f.0).max(ratio(c.1, f.1));
        let pass = c.0 > 0.0 && f.0 > 0.0 && f.1.is_finite() && r < MESH_STABLE_FACTOR;
        Ok(self.verdict("phi_bound", json!({ "coarse": [c.0, c.1], "fine": [f.0, f.1] }), r, MESH_STABLE_FACTOR, pass))
    }

    /// `∂^β(ρ^β)/∂n^β = -1` at every boundary node of the mesh.
    fn normal_derivative(&mut self) -> Result<Verdict> {
        let s = self.setup;
        let d = s.domain;
        let beta = s.params.beta();
        let xi = FnField::new(move |p: Point| d.rho(p).powf(beta));
        let ts: Vec<f64> = (0..6).map(|k| 0.02 * self.scale() * 0.5f64.powi(k)).collect();
        let mut worst: f64 = 0.0;
        for bp in s.mesh.boundary_nodes() {
            let v = frac_normal_derivative(&xi, *bp, &d, &s.params, &ts, 2)?.value;
            worst = worst.max((v + 1.0).abs());
        }
        Ok(self.verdict(
            "normal_derivative",
            json!({ "boundary_points": s.mesh.boundary_nodes().len() }),
            worst,
            NORMAL_DERIVATIVE_TOL,
            worst <= NORMAL_DERIVATIVE_TOL,
        ))
    }
}

/// Configured window, or `(1e-3, 1e-1)` times half the diameter.
pub fn decay_window(cfg: &RunConfig, setup: &Setup) -> (f64, f64) {
    let l = 0.5 * setup.domain.diameter();
    cfg.fit.window.unwrap_or((1e-3 * l, 1e-1 * l))
}

fn random_smooth(rng: &mut StdRng, t: impl Fn(Point) -> f64) -> impl Fn(Point) -> f64 {
    let a: Vec<(f64, f64, f64)> = (1..=4)
        .map(|k| (rng.random_range(-1.0..1.0), k as f64 * rng.random_range(0.5..1.5), rng.random_range(0.0..PI)))
        .collect();
    move |p: Point| {
        let x = t(p);
        (1.0 - x * x) * a.iter().map(|(c, w, s)| c * (w * x + s).cos()).sum::<f64>()
    }
}

fn random_l2_data(rng: &mut StdRng, t: impl Fn(Point) -> f64) -> impl Fn(Point) -> f64 {
    let modes: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
    let jump = rng.random_range(-0.9..0.9);
    let height = rng.random_range(-1.0..1.0);
    move |p: Point| {
        let x = t(p);
        let s: f64 = modes.iter().enumerate().map(|(k, c)| c * ((k + 1) as f64 * 0.5 * PI * (x + 1.0)).sin()).sum();
        s + if x > jump { height } else { 0.0 }
    }
}
