//! `solve` command: march one radial problem, export its trajectory in
//! the sampled-field CSV schema, optionally compare against the exact
//! solution and run a grid-refinement study.

use std::path::Path;

use serde_json::json;

use pmlab::error::{Error, Result};
use pmlab::solutions::ExactSolution;
use pmlab::solver::{convergence_order, solve, DtPolicy, RadialProblem};

use crate::config::{BoundaryConfig, ProfileConfig, RunConfig, SolutionConfig, SolveConfig};
use crate::Outcome;

pub fn run(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let section = cfg
        .solve
        .as_ref()
        .ok_or_else(|| Error::Config("path 'solve': section required".into()))?;

    let needs_solution = matches!(section.initial, ProfileConfig::Solution)
        || matches!(section.boundary, BoundaryConfig::Solution)
        || section.use_solution_forcing
        || section.max_error.is_some()
        || section.convergence.is_some();
    let sol_cfg = if needs_solution {
        Some(*cfg.solution.as_ref().ok_or_else(|| {
            Error::Config(
                "path 'solution': section required when the march reads the exact solution".into(),
            )
        })?)
    } else {
        None
    };
    // Fail early (as a config error) if the solution cannot cover the
    // march rectangle, instead of panicking inside a closure later.
    if let Some(sc) = sol_cfg {
        let probe = sc.build()?;
        for (r, t) in [
            (section.r_in, section.t_start),
            (section.r_out, section.t_start),
            (section.r_in, section.t_end),
            (section.r_out, section.t_end),
        ] {
            probe.eval_radial(r, t).map_err(|e| {
                Error::Config(format!(
                    "path 'solve': the exact solution does not cover (r, t) = ({r}, {t}): {e}"
                ))
            })?;
        }
    }

    let policy = build_policy(section);
    let problem = build_problem(section, sol_cfg, section.cells)?;
    let marched = solve(&problem, &policy);

    let (field, stats) = match marched {
        Ok(pair) => pair,
        Err(Error::StepFailure(msg)) => {
            let report = json!({
                "anchor": "radial-march",
                "outcome": "step-failure",
                "detail": msg,
            });
            crate::commands::write_json(&out.join("solve.json"), &report)?;
            crate::commands::print_verdict("solve", false, &format!("step failure: {msg}"));
            return Ok(Outcome { failed: 1, ..Outcome::default() });
        }
        Err(e) => return Err(e),
    };

    let reference: Option<ExactSolution> = match sol_cfg {
        Some(sc) => Some(sc.build()?),
        None => None,
    };
    let final_error = reference.as_ref().map(|exact| {
        field.final_l2_error(&|r| {
            exact
                .eval_radial(r, section.t_end)
                .expect("coverage was validated before the march")
        })
    });

    let mut outcome = Outcome::default();
    let error_pass = match (section.max_error, final_error) {
        (Some(cap), Some(err)) => err <= cap,
        _ => true,
    };
    if error_pass {
        outcome.passed += 1;
    } else {
        outcome.failed += 1;
    }
    crate::commands::print_verdict(
        "solve",
        error_pass,
        &format!(
            "{} steps, final dt = {:.3e}, min u = {:.3e}{}",
            stats.steps,
            stats.final_dt,
            stats.min_value,
            final_error.map_or(String::new(), |e| format!(", L2 error = {e:.3e}")),
        ),
    );

    let study = match section.convergence {
        Some(cc) => {
            let exact = reference
                .as_ref()
                .expect("convergence requires a configured solution");
            let study = convergence_order(
                &|cells| build_problem(section, sol_cfg, cells),
                &|r| {
                    exact
                        .eval_radial(r, section.t_end)
                        .expect("coverage was validated before the march")
                },
                cc.base_cells,
                cc.refinements,
                &policy,
            )?;
            let order_pass = match (cc.min_order, study.order) {
                (Some(floor), Some(order)) => order >= floor,
                (Some(_), None) => true, // reproduced exactly: no order to fall below
                (None, _) => true,
            };
            if order_pass {
                outcome.passed += 1;
            } else {
                outcome.failed += 1;
            }
            crate::commands::print_verdict(
                "convergence",
                order_pass,
                &match study.order {
                    Some(o) => format!("observed order = {o:.3}"),
                    None => "reproduced exactly on every grid".to_string(),
                },
            );
            Some(study)
        }
        None => None,
    };

    let report = json!({
        "anchor": "radial-march",
        "stats": stats,
        "final_error": final_error,
        "convergence": study,
    });
    crate::commands::write_json(&out.join("solve.json"), &report)?;
    crate::commands::write_text(&out.join("trajectory.csv"), &field.to_csv())?;
    Ok(outcome)
}

fn build_policy(section: &SolveConfig) -> DtPolicy {
    let d = DtPolicy::default();
    DtPolicy {
        dt_max: section.policy.dt_max.unwrap_or(d.dt_max),
        safety: section.policy.safety.unwrap_or(d.safety),
        dt_min: section.policy.dt_min.unwrap_or(d.dt_min),
    }
}

/// Assembles the radial problem at a given resolution; closures carry
/// their own solution instances so refinement studies can rebuild the
/// problem freely.
fn build_problem(
    section: &SolveConfig,
    sol_cfg: Option<SolutionConfig>,
    cells: usize,
) -> Result<RadialProblem> {
    let t_start = section.t_start;
    let initial: Box<dyn Fn(f64) -> f64 + Sync> = match section.initial {
        ProfileConfig::Constant { value } => Box::new(move |_| value),
        ProfileConfig::Solution => {
            let exact = sol_cfg
                .expect("validated: solution-driven initial data needs a solution")
                .build()?;
            Box::new(move |r| {
                exact
                    .eval_radial(r, t_start)
                    .expect("coverage was validated before the march")
            })
        }
    };
    let boundary: Box<dyn Fn(f64) -> (f64, f64) + Sync> = match section.boundary {
        BoundaryConfig::Constant { inner, outer } => Box::new(move |_| (inner, outer)),
        BoundaryConfig::Solution => {
            let exact = sol_cfg
                .expect("validated: solution-driven boundary data needs a solution")
                .build()?;
            let (r_in, r_out) = (section.r_in, section.r_out);
            Box::new(move |t| {
                (
                    exact
                        .eval_radial(r_in, t)
                        .expect("coverage was validated before the march"),
                    exact
                        .eval_radial(r_out, t)
                        .expect("coverage was validated before the march"),
                )
            })
        }
    };

    let mut problem = RadialProblem::new(
        section.n,
        section.m,
        section.r_in,
        section.r_out,
        cells,
        section.t_start,
        section.t_end,
        initial,
        boundary,
    )?;
    if section.use_solution_forcing {
        let exact = sol_cfg
            .expect("validated: solution forcing needs a solution")
            .build()?;
        if exact.has_forcing() {
            problem = problem.with_forcing(Box::new(move |r, t| {
                exact
                    .forcing_radial(r, t)
                    .expect("coverage was validated before the march")
            }));
        }
    }
    if section.zero_flux {
        problem = problem.with_zero_flux();
    }
    Ok(problem)
}
