//! `solution` command: sample an exact solution, measure its PDE
//! residual on a configured stencil grid, and compare its forcing to
//! the small-radius asymptote when it has one.

use std::path::Path;

use serde_json::json;

use pmlab::error::{Error, Result};

use crate::config::RunConfig;
use crate::Outcome;

pub fn run(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let section = cfg
        .solution_report
        .as_ref()
        .ok_or_else(|| Error::Config("path 'solution_report': section required".into()))?;
    let sol_cfg = cfg
        .solution
        .as_ref()
        .ok_or_else(|| Error::Config("path 'solution': section required".into()))?;
    let sol = sol_cfg.build()?;
    if section.s_samples.is_empty() || section.t_samples.is_empty() {
        return Err(Error::Config(
            "path 'solution_report': s_samples and t_samples must be non-empty".into(),
        ));
    }
    if !(section.fd_step > 0.0) {
        return Err(Error::Config("path 'solution_report.fd_step': must be positive".into()));
    }

    let mut rows = Vec::new();
    let mut csv = String::from("N,m,T\n");
    csv.push_str(&format!("{},{},{}\n", sol.dim(), sol.m(), sol.t_ext()));
    csv.push_str("r,t,u\n");
    let mut max_abs_residual: f64 = 0.0;
    for &t in &section.t_samples {
        for &s in &section.s_samples {
            let u = sol.eval_radial(s, t)?;
            let residual = sol.residual(s, t, section.fd_step)?;
            max_abs_residual = max_abs_residual.max(residual.abs());
            csv.push_str(&format!("{s},{t},{u}\n"));
            rows.push(json!({ "s": s, "t": t, "u": u, "residual": residual }));
        }
    }

    let mut asymptote = Vec::new();
    let mut band_ok = true;
    if sol.has_forcing() && !section.asymptote_radii.is_empty() {
        let t = section.t_samples[0];
        for &r in &section.asymptote_radii {
            let g = sol.kosov_g(r, t)?;
            let limit = sol.kosov_g_asymptote(r, t)?;
            let ratio = g / limit;
            if let Some([lo, hi]) = section.asymptote_band {
                band_ok &= (lo..=hi).contains(&ratio);
            }
            asymptote.push(json!({ "r": r, "t": t, "g": g, "asymptote": limit, "ratio": ratio }));
        }
    }

    let residual_ok = section
        .max_residual
        .map_or(true, |cap| max_abs_residual <= cap);
    let report = json!({
        "anchor": "pde-residual",
        "solution": sol_cfg.name(),
        "n": sol.dim(),
        "m": sol.m(),
        "t_ext": sol.t_ext(),
        "fd_step": section.fd_step,
        "max_abs_residual": max_abs_residual,
        "rows": rows,
        "asymptote": asymptote,
    });
    crate::commands::write_json(&out.join("solution.json"), &report)?;
    crate::commands::write_text(&out.join("solution.csv"), &csv)?;

    crate::commands::print_verdict(
        "solution",
        residual_ok && band_ok,
        &format!("max |residual| = {max_abs_residual:.3e}"),
    );
    Ok(if residual_ok && band_ok {
        Outcome { passed: 1, ..Outcome::default() }
    } else {
        Outcome { failed: 1, ..Outcome::default() }
    })
}
