//! `cylinders` command: build a concentric θ-system around each
//! configured base point, export it as CSV, and audit the system's
//! structural invariants (sub-intrinsic content, monotonicity, pairwise
//! growth bound, absolute bound).

use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Value};

use pmlab::error::{Error, Result};
use pmlab::geometry::Cylinder;
use pmlab::intrinsic::{build_theta_system, geometric_grid, lambda_o_of, rho_tilde};

use crate::config::RunConfig;
use crate::Outcome;

pub fn run(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let section = cfg
        .cylinders
        .as_ref()
        .ok_or_else(|| Error::Config("path 'cylinders': section required".into()))?;
    if section.base_points.is_empty() {
        return Err(Error::Config(
            "path 'cylinders.base_points': at least one base point required".into(),
        ));
    }
    let params = cfg.params()?;
    let sol = cfg.solution()?;
    let spec = cfg.quadrature.build()?;

    let r_outer = section.r_outer;
    let r_min = section.r_min.unwrap_or(r_outer / 16.0);
    if !(r_min > 0.0 && r_outer > r_min && section.points_per_decade > 0) {
        return Err(Error::Config(format!(
            "path 'cylinders': need 0 < r_min < r_outer and points_per_decade > 0, \
             got r_min = {r_min}, r_outer = {r_outer}, points_per_decade = {}",
            section.points_per_decade
        )));
    }
    if !(section.slack >= 1.0) {
        return Err(Error::Config("path 'cylinders.slack': must be at least 1".into()));
    }
    let grid = geometric_grid(r_min, r_outer, section.points_per_decade);

    let entries: Vec<Result<(Value, Option<String>, bool)>> = section
        .base_points
        .par_iter()
        .map(|base| {
            let lambda_o = match section.lambda_o {
                Some(l) => l,
                None => {
                    let q4r = Cylinder::intrinsic(base.center_dist, base.t_center, 4.0 * r_outer, 1.0);
                    lambda_o_of(&sol, &sol, &q4r, &params, &spec)?
                }
            };
            let system = match build_theta_system(
                &sol,
                base.center_dist,
                base.t_center,
                r_outer,
                lambda_o,
                &params,
                &grid,
                &spec,
            ) {
                Ok(s) => s,
                Err(Error::PreconditionUnmet(msg)) | Err(Error::NoBracket(msg)) => {
                    return Ok((
                        json!({
                            "base": { "center_dist": base.center_dist, "t_center": base.t_center },
                            "outcome": "precondition-unmet",
                            "detail": msg,
                        }),
                        None,
                        false,
                    ));
                }
                Err(e) => return Err(e),
            };

            let sub = system.sub_intrinsic_worst_ratio(&sol, &params, &spec, section.stride)?;
            let monotone = system
                .theta
                .windows(2)
                .all(|w| w[1] <= w[0] * (1.0 + 1e-15));
            let growth = system.growth_bound_worst_ratio(&params);
            let absolute = system.absolute_bound_worst_ratio(&params);
            let pass = sub <= section.slack
                && monotone
                && growth <= section.slack
                && absolute <= section.slack;

            let mut csv = String::from("rho,theta_tilde,theta,rho_tilde\n");
            for (j, rho) in system.grid.iter().enumerate() {
                let rt = rho_tilde(&system, *rho)?;
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    rho, system.theta_tilde[j], system.theta[j], rt
                ));
            }

            let entry = json!({
                "base": { "center_dist": base.center_dist, "t_center": base.t_center },
                "anchor": "sub-intrinsic-system",
                "lambda_o": lambda_o,
                "verdicts": {
                    "sub_intrinsic_worst_ratio": sub,
                    "monotone": monotone,
                    "growth_bound_worst_ratio": growth,
                    "absolute_bound_worst_ratio": absolute,
                },
                "pass": pass,
                "system": system,
            });
            Ok((entry, Some(csv), pass))
        })
        .collect();

    let mut outcome = Outcome::default();
    let mut reports = Vec::with_capacity(entries.len());
    for (i, entry) in entries.into_iter().enumerate() {
        let (value, csv, pass) = entry?;
        if let Some(csv) = csv {
            crate::commands::write_text(&out.join(format!("cylinders_{i}.csv")), &csv)?;
            crate::commands::print_verdict(
                &format!("cylinders[{i}]"),
                pass,
                &value["verdicts"]["sub_intrinsic_worst_ratio"].to_string(),
            );
            if pass {
                outcome.passed += 1;
            } else {
                outcome.failed += 1;
            }
        } else {
            println!("[unmet] cylinders[{i}]: {}", value["detail"]);
            outcome.unmet += 1;
        }
        reports.push(value);
    }
    crate::commands::write_json(&out.join("cylinders.json"), &reports)?;
    Ok(outcome)
}
