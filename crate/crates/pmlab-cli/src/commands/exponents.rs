//! `exponents` command: tabulate the exponent calculus over a grid of
//! (N, m, r, p) bundles.

use std::path::Path;

use serde_json::json;

use pmlab::error::{Error, Result};
use pmlab::exponents::{critical_m, eps_o_separable};

use crate::config::RunConfig;
use crate::Outcome;

pub fn run(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let section = cfg
        .exponents
        .as_ref()
        .ok_or_else(|| Error::Config("path 'exponents': section required".into()))?;
    if section.grid.is_empty() {
        return Err(Error::Config("path 'exponents.grid': at least one row required".into()));
    }

    let mut rows = Vec::with_capacity(section.grid.len());
    let mut csv = String::from(
        "n,m,r,p,m_critical,lambda_r,admissible,scaling_deficit,q_exponent,kappa,eps_o\n",
    );
    for (idx, pc) in section.grid.iter().enumerate() {
        let params = pc.build().map_err(|e| {
            Error::Config(format!("path 'exponents.grid[{idx}]': {e}"))
        })?;
        let deficit = params.scaling_deficit().ok();
        let q = params.q_exponent().ok();
        let eps_o = eps_o_separable(params.n, params.m).ok();
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            params.n,
            params.m,
            params.r,
            params.p,
            critical_m(params.n),
            params.lambda_r(),
            params.admissible(),
            opt(deficit),
            opt(q),
            params.kappa(),
            opt(eps_o),
        ));
        rows.push(json!({
            "n": params.n,
            "m": params.m,
            "r": params.r,
            "p": params.p,
            "m_critical": critical_m(params.n),
            "lambda_r": params.lambda_r(),
            "admissible": params.admissible(),
            "scaling_deficit": deficit,
            "q_exponent": q,
            "kappa": params.kappa(),
            "eps_o": eps_o,
        }));
    }

    crate::commands::write_json(&out.join("exponents.json"), &rows)?;
    crate::commands::write_text(&out.join("exponents.csv"), &csv)?;
    println!("exponents: {} rows tabulated", rows.len());
    Ok(Outcome {
        passed: rows.len(),
        ..Outcome::default()
    })
}
