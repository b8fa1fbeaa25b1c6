//! Subcommand implementations. Every command writes `report.json`, which
//! embeds the resolved configuration and can be fed back through
//! `--config` to reproduce the run.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use regfrac::analysis::{decay_fit, green_bound_check};
use regfrac::operator::{eval_pv, eval_pv_strict, phi, ExprField};
use regfrac::solver::{GalerkinSystem, Source};
use regfrac::{Expr, GridFunction};

use crate::checks::{self, Context};
use crate::config::{Problem, RunConfig, Setup};
use crate::svg::line_plot;
use crate::{Failure, Stage};

const GREEN_SYMMETRY_TOL: f64 = 1e-10;

pub struct Output {
    dir: PathBuf,
}

impl Output {
    pub fn create(dir: &Path) -> Result<Output, Failure> {
        std::fs::create_dir_all(dir)
            .map_err(|e| Failure::Usage(anyhow::anyhow!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Output { dir: dir.to_path_buf() })
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes)
            .map_err(|e| Failure::Usage(anyhow::anyhow!("cannot write {}: {e}", path.display())))?;
        println!("wrote {}", path.display());
        Ok(())
    }

    fn json(&self, name: &str, value: &impl Serialize) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(value).numerical()?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn report(&self, command: &str, cfg: &RunConfig, body: serde_json::Value) -> Result<(), Failure> {
        let mut v = json!({ "command": command, "config": cfg });
        if let (Some(o), serde_json::Value::Object(b)) = (v.as_object_mut(), body) {
            o.extend(b);
        }
        self.json("report.json", &v)
    }
}

fn system(cfg: &RunConfig, setup: &Setup) -> Result<GalerkinSystem, Failure> {
    GalerkinSystem::with_config(setup.mesh.clone(), setup.params, cfg.assembly).numerical()
}

/// `u` against `x` on intervals and against the distance to the center on
/// disks, plus `log |u|` against `log ρ`.
fn plots(u: &GridFunction, out: &Output) -> Result<(), Failure> {
    let mesh = u.mesh();
    let domain = *mesh.domain();
    let rho = mesh.node_rho();
    let (mut profile, label): (Vec<(f64, f64)>, &str) = match domain {
        regfrac::Domain::Interval { .. } => (mesh.nodes().iter().zip(u.coefficients()).map(|(p, v)| (p.x, *v)).collect(), "x"),
        regfrac::Domain::Disk { center, .. } => {
            (mesh.nodes().iter().zip(u.coefficients()).map(|(p, v)| (p.dist(&center), *v)).collect(), "|x - center|")
        }
    };
    profile.sort_by(|a, b| a.0.total_cmp(&b.0));
    out.write("solution.svg", line_plot("solution", label, "u", &profile).as_bytes())?;
    let mut decay: Vec<(f64, f64)> = rho
        .iter()
        .zip(u.coefficients())
        .filter(|(_, v)| **v != 0.0)
        .map(|(r, v)| (r.ln(), v.abs().ln()))
        .collect();
    decay.sort_by(|a, b| a.0.total_cmp(&b.0));
    out.write("decay.svg", line_plot("boundary decay", "log rho", "log |u|", &decay).as_bytes())
}

fn csv_solution(u: &GridFunction, out: &Output) -> Result<(), Failure> {
    let mut buf = Vec::new();
    u.write_csv(&mut buf).numerical()?;
    out.write("solution.csv", &buf)
}

fn solve_problem(cfg: &RunConfig, setup: &Setup, problem: &Problem) -> Result<regfrac::SolveReport, Failure> {
    let measure = match problem {
        Problem::VeryWeak { atoms, density } => {
            if atoms.is_empty() && density.is_none() {
                return Err(Failure::Usage(anyhow::anyhow!("very_weak problem needs atoms or a density")));
            }
            Some(setup.measure(atoms, density.as_ref()).usage()?)
        }
        _ => None,
    };
    let sys = system(cfg, setup)?;
    let q = &cfg.quadrature;
    match problem {
        Problem::Classical { f } => sys.solve_classical(Source::Expr(f), q),
        Problem::WeakL2 { f } => sys.solve_weak_l2(Source::Expr(f)),
        Problem::VeryWeak { .. } => sys.solve_very_weak(measure.as_ref().expect("validated above")),
        Problem::NonzeroBoundary { f, g } => sys.solve_nonzero_boundary(Source::Expr(f), g, q),
    }
    .numerical()
}

pub fn solve(cfg: &RunConfig, setup: &Setup, out: &Output) -> Result<(), Failure> {
    let problem = cfg.problem.as_ref().ok_or_else(|| Failure::Usage(anyhow::anyhow!("solve needs a [problem] section")))?;
    let rep = solve_problem(cfg, setup, problem)?;
    csv_solution(&rep.solution, out)?;
    plots(&rep.solution, out)?;
    out.report("solve", cfg, json!({ "mesh": setup.mesh.to_json(), "report": rep }))
}

pub fn operator_eval(cfg: &RunConfig, setup: &Setup, out: &Output, strict: bool) -> Result<(), Failure> {
    let spec = cfg
        .operator
        .as_ref()
        .ok_or_else(|| Failure::Usage(anyhow::anyhow!("operator-eval needs an [operator] section")))?;
    let expr: &Expr = spec.expr.as_ref().ok_or_else(|| Failure::Usage(anyhow::anyhow!("operator.expr is missing")))?;
    let points = setup.operator_points(spec).usage()?;
    let field = ExprField::new(expr, &setup.domain);
    let two_d = setup.domain.dim() == 2;
    let mut buf = Vec::new();
    let header = if two_d { "x,y,pv_value,err_est,phi" } else { "x,pv_value,err_est,phi" };
    writeln!(buf, "{header}").numerical()?;
    let mut unconverged = 0;
    for p in &points {
        let pv = if strict {
            eval_pv_strict(&field, *p, &setup.params, &setup.domain, &cfg.quadrature)
        } else {
            eval_pv(&field, *p, &setup.params, &setup.domain, &cfg.quadrature)
        }
        .numerical()?;
        if !pv.converged {
            unconverged += 1;
        }
        let ph = phi(*p, &setup.params, &setup.domain).numerical()?;
        if two_d {
            write!(buf, "{:.16e},{:.16e},", p.x, p.y).numerical()?;
        } else {
            write!(buf, "{:.16e},", p.x).numerical()?;
        }
        writeln!(buf, "{:.16e},{:.16e},{:.16e}", pv.value, pv.err_est, ph).numerical()?;
    }
    if unconverged > 0 {
        eprintln!("warning: {unconverged} of {} principal values did not settle (use --strict to fail)", points.len());
    }
    out.write("operator.csv", &buf)?;
    out.report("operator-eval", cfg, json!({ "points": points.len(), "unconverged": unconverged }))
}

pub fn verify(cfg: &RunConfig, setup: &Setup, out: &Output) -> Result<(), Failure> {
    checks::validate(cfg, setup).usage()?;
    let mut ctx = Context::new(cfg, setup);
    let mut verdicts = Vec::new();
    for c in &cfg.checks {
        let v = ctx.run(c).numerical()?;
        println!("{}: {} (value {:.6e}, threshold {:.1e})", v.check, if v.pass { "PASS" } else { "FAIL" }, v.value, v.threshold);
        verdicts.push(v);
    }
    out.json("verdicts.json", &verdicts)?;
    let mut buf = Vec::new();
    writeln!(buf, "check,value,threshold,pass").numerical()?;
    for v in &verdicts {
        writeln!(buf, "{},{:.16e},{:.16e},{}", v.check, v.value, v.threshold, v.pass).numerical()?;
    }
    out.write("verdicts.csv", &buf)?;
    out.report("verify", cfg, json!({ "verdicts": verdicts }))?;
    let failed: Vec<&str> = verdicts.iter().filter(|v| !v.pass).map(|v| v.check.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verification(format!("failed checks: {}", failed.join(", "))))
    }
}

pub fn green(cfg: &RunConfig, setup: &Setup, out: &Output) -> Result<(), Failure> {
    let sys = system(cfg, setup)?;
    let g = green_bound_check(&sys.green_matrix(), sys.mesh(), sys.params());
    let mut buf = Vec::new();
    g.write_csv(sys.mesh(), &mut buf).numerical()?;
    out.write("green.csv", &buf)?;
    let relative_asymmetry = g.asymmetry / g.kernel_max;
    let pass = g.ratio_sup.is_finite() && relative_asymmetry <= GREEN_SYMMETRY_TOL;
    out.report(
        "green",
        cfg,
        json!({
            "rows": g.rows.len(),
            "ratio_sup": g.ratio_sup,
            "asymmetry": g.asymmetry,
            "kernel_max": g.kernel_max,
            "relative_asymmetry": relative_asymmetry,
            "pass": pass,
        }),
    )?;
    println!("ratio_sup {:.6e}, relative asymmetry {relative_asymmetry:.2e}", g.ratio_sup);
    if pass {
        Ok(())
    } else {
        Err(Failure::Verification("kernel table is not symmetric or the bound ratio is not finite".into()))
    }
}

/// Solves the configured problem (default `f = 1`, classical) and fits
/// `|u| ≈ C ρ^γ` near the boundary.
pub fn fit_decay(cfg: &RunConfig, setup: &Setup, out: &Output) -> Result<(), Failure> {
    let default = Problem::Classical { f: Expr::constant(1.0) };
    let problem = cfg.problem.as_ref().unwrap_or(&default);
    let window = checks::decay_window(cfg, setup);
    let rep = solve_problem(cfg, setup, problem)?;
    let fit = decay_fit(&rep.solution, window).numerical()?;
    let u = &rep.solution;
    let mut buf = Vec::new();
    writeln!(buf, "rho,u,log_rho,log_abs_u,in_window").numerical()?;
    let mut rows: Vec<(f64, f64)> = u.mesh().node_rho().into_iter().zip(u.coefficients().iter().copied()).collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (r, v) in rows {
        let inside = r >= window.0 && r <= window.1;
        writeln!(buf, "{r:.16e},{v:.16e},{:.16e},{:.16e},{}", r.ln(), v.abs().ln(), inside as u8).numerical()?;
    }
    out.write("decay.csv", &buf)?;
    plots(u, out)?;
    let verdict = cfg.fit.expected.map(|e| (e, (fit.exponent - e).abs() <= cfg.fit.tolerance));
    out.report("fit-decay", cfg, json!({ "fit": fit, "expected": cfg.fit.expected, "pass": verdict.map(|v| v.1) }))?;
    println!("exponent {:.6} (r^2 {:.6}, {} points)", fit.exponent, fit.r_squared, fit.points_used);
    match verdict {
        Some((e, false)) => Err(Failure::Verification(format!(
            "decay exponent {:.6} differs from {e} by more than {}",
            fit.exponent, cfg.fit.tolerance
        ))),
        _ => Ok(()),
    }
}
