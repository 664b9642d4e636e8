//! `probe` command: measure the critical gradient-integrability
//! exponent of a singular solution from dyadic-annulus decay rates.

use std::path::Path;

use serde_json::json;

use pmlab::error::{Error, Result};
use pmlab::verify::probe::probe_integrability;

use crate::config::RunConfig;
use crate::Outcome;

pub fn run(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let section = cfg
        .probe
        .as_ref()
        .ok_or_else(|| Error::Config("path 'probe': section required".into()))?;
    let sol = cfg.solution()?;

    let probe = match probe_integrability(&sol, &section.s_grid, section.annuli) {
        Ok(p) => p,
        Err(Error::PreconditionUnmet(msg)) => {
            // Not a verdict failure: the configuration asked for a probe
            // the chosen solution cannot support.
            let report = json!({
                "anchor": "integrability-dichotomy",
                "outcome": "precondition-unmet",
                "detail": msg,
            });
            crate::commands::write_json(&out.join("probe.json"), &report)?;
            println!("[unmet] probe: {msg}");
            return Ok(Outcome { unmet: 1, ..Outcome::default() });
        }
        Err(e) => return Err(e),
    };

    let mut csv = String::from("exponent,ln_rate,r_squared\n");
    for fit in &probe.fits {
        csv.push_str(&format!("{},{},{}\n", fit.exponent, fit.ln_rate, fit.r_squared));
    }

    let rel_gap = section.expected_eps.map(|want| {
        let scale = want.abs().max(f64::MIN_POSITIVE);
        (probe.critical_eps - want).abs() / scale
    });
    let pass = probe.reliable && rel_gap.map_or(true, |g| g <= section.rel_tol);

    let report = json!({
        "anchor": "integrability-dichotomy",
        "critical_s": probe.critical_s,
        "critical_eps": probe.critical_eps,
        "min_r_squared": probe.min_r_squared,
        "reliable": probe.reliable,
        "expected_eps": section.expected_eps,
        "rel_gap": rel_gap,
        "fits": probe.fits,
    });
    crate::commands::write_json(&out.join("probe.json"), &report)?;
    crate::commands::write_text(&out.join("probe.csv"), &csv)?;

    crate::commands::print_verdict(
        "probe",
        pass,
        &format!(
            "critical_eps = {:.6} (reliable = {}, min r² = {:.4})",
            probe.critical_eps, probe.reliable, probe.min_r_squared
        ),
    );
    Ok(if pass {
        Outcome { passed: 1, ..Outcome::default() }
    } else {
        Outcome { failed: 1, ..Outcome::default() }
    })
}
