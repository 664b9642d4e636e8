//! `cover` command: draw one randomized family of intrinsic cylinders,
//! run the greedy Vitali-type selection, and verify disjointness of the
//! selected subfamily plus containment of every candidate in a selected
//! enlargement by brute force.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use pmlab::error::{Error, Result};
use pmlab::intrinsic::{c_hat, vitali_cover, PlacedCylinder, C_HAT_TEST};

use crate::config::{CHatMode, RunConfig};
use crate::Outcome;

pub fn run(cfg: &RunConfig, seed: Option<u64>, out: &Path) -> Result<Outcome> {
    let section = cfg
        .cover
        .as_ref()
        .ok_or_else(|| Error::Config("path 'cover': section required".into()))?;
    let params = cfg.params()?;
    let seed = seed.expect("seed presence is validated before dispatch");
    if section.count == 0 {
        return Err(Error::Config("path 'cover.count': at least one candidate required".into()));
    }
    if !(section.r_outer > 0.0
        && section.theta_max >= 1.0
        && section.time_span > 0.0
        && section.radius_octaves > 0.0)
    {
        return Err(Error::Config(
            "path 'cover': r_outer, time_span, radius_octaves must be positive \
             and theta_max at least 1"
                .into(),
        ));
    }

    let c_hat_value = match section.c_hat {
        CHatMode::Proof => c_hat(&params),
        CHatMode::Test => C_HAT_TEST,
    };

    // Candidates: centers uniform in a box, radii log-uniform below the
    // class ceiling R/ĉ, scaling parameters log-uniform in [1, θ_max].
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius_cap = section.r_outer / c_hat_value;
    let candidates: Vec<PlacedCylinder> = (0..section.count)
        .map(|_| {
            let center: Vec<f64> = (0..params.n)
                .map(|_| rng.gen_range(-section.r_outer..section.r_outer))
                .collect();
            let t_center = rng.gen_range(-0.5 * section.time_span..0.5 * section.time_span);
            let octave = rng.gen_range(0.05..section.radius_octaves);
            let radius = radius_cap * 0.5f64.powf(octave);
            let theta = section.theta_max.powf(rng.gen_range(0.0..1.0));
            PlacedCylinder { center, t_center, radius, theta }
        })
        .collect();

    let family = vitali_cover(candidates, params.m, c_hat_value, section.r_outer)?;
    let disjoint = family.selected_disjoint();
    let contained = family.all_contained();
    let pass = disjoint && contained;

    let report = json!({
        "anchor": "vitali-covering",
        "seed": seed,
        "c_hat": family.c_hat,
        "candidates": family.candidates.len(),
        "selected": family.selected.len(),
        "disjoint": disjoint,
        "all_contained": contained,
        "pass": pass,
        "family": family,
    });
    crate::commands::write_json(&out.join("cover.json"), &report)?;

    crate::commands::print_verdict(
        "cover",
        pass,
        &format!(
            "{} candidates, {} selected, disjoint = {disjoint}, contained = {contained}",
            family.candidates.len(),
            family.selected.len()
        ),
    );
    Ok(if pass {
        Outcome { passed: 1, ..Outcome::default() }
    } else {
        Outcome { failed: 1, ..Outcome::default() }
    })
}
