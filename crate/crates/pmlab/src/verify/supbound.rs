//! Quantitative L∞ checker: the supremum of |u| over a shrunken cylinder
//! against the data terms of the boundedness estimate, in two geometries.
//!
//! On a backward (one-sided) cylinder Q_{ρ,ϑ} the estimate takes the
//! max-of-three-branches form with the shrinkage penalty (1−σ)^{−(N+2)};
//! on an intrinsic cylinder Q_ρ^{(θ)} it takes the centered sum form with
//! the data read from the doubled cylinder. All displayed constants are
//! taken as 1, so ratios gauge the empirical constant.

use super::{base_params, put, put_str, Report};
use crate::error::{Error, Result};
use crate::exponents::Params;
use crate::field::{RadialField, RadialForcing};
use crate::geometry::{lp_mean, lp_mean_fn, sup_norm, Cylinder, CylinderKind, QuadratureSpec};

/// Checks the sup bound on `cyl`, dispatching on its kind. For a one-sided
/// cylinder: sup over the σ-shrunk copy against the maximum of the u-content,
/// forcing, and scaling-threshold branches. For an intrinsic cylinder:
/// sup over `cyl` itself against the sum of the analogous three terms
/// over the doubled cylinder; σ is recorded but plays no role. The report's
/// branch names the largest term either way.
pub fn check_supbound(
    field: &dyn RadialField,
    forcing: &dyn RadialForcing,
    cyl: &Cylinder,
    sigma: f64,
    params: &Params,
    spec: &QuadratureSpec,
) -> Result<Report> {
    if !(0.5..1.0).contains(&sigma) {
        return Err(Error::Domain(format!("shrink factor must satisfy σ ∈ [1/2, 1), got {sigma}")));
    }
    params.require_admissible()?;
    let n = params.n;
    let m = params.m;
    let r = params.r;
    let p = params.p;
    let lam_r = params.lambda_r();
    let lam_f = params.lambda_of(p * (1.0 + m));

    let mut quad_err = 0.0;
    let mut force_mean = |data: &Cylinder| -> Result<f64> {
        if forcing.is_zero() {
            return Ok(0.0);
        }
        let est = lp_mean_fn(
            &|s, t| forcing.f_r(s, t),
            field.dim(),
            m,
            data,
            2.0 * p,
            spec,
            false,
        )?;
        quad_err += est.err;
        Ok(est.value)
    };

    let (lhs, terms, combine): (f64, [f64; 3], &str) = match cyl.kind {
        CylinderKind::OneSided { radius, duration } => {
            let shrunk = Cylinder::one_sided(
                cyl.center_dist,
                cyl.t_center,
                sigma * radius,
                sigma * duration,
            );
            let lhs = sup_norm(field, &shrunk, spec)?;
            let aspect = radius * radius / duration;
            let u_mean = lp_mean(field, cyl, r, spec)?;
            let f_mean = force_mean(cyl)?;
            quad_err += u_mean.err;
            let branch1 = ((1.0 - sigma).powi(-(n as i32 + 2))
                * aspect.powf(f64::from(n) / 2.0)
                * u_mean.value)
                .powf(2.0 / lam_r);
            let branch2 = if f_mean == 0.0 {
                0.0
            } else {
                (aspect.powf(f64::from(n) / 2.0 - p) * radius.powf(2.0 * p) * f_mean)
                    .powf(2.0 / lam_f)
            };
            let branch3 = (1.0 / aspect).powf(1.0 / (1.0 - m));
            (lhs, [branch1, branch2, branch3], "max")
        }
        CylinderKind::Intrinsic => {
            let lhs = sup_norm(field, cyl, spec)?;
            let data = cyl.scaled(2.0);
            let rho = cyl.rho;
            let theta = cyl.theta;
            let u_mean = lp_mean(field, &data, r, spec)?;
            let f_mean = force_mean(&data)?;
            quad_err += u_mean.err;
            let intrinsic_scale = rho.powf(1.0 / m) * theta.powf(2.0 * m / (1.0 + m));
            let term1 = (intrinsic_scale.powf(f64::from(n) * (m - 1.0) / 2.0) * u_mean.value)
                .powf(2.0 / lam_r);
            let term2 = if f_mean == 0.0 {
                0.0
            } else {
                rho.powf(1.0 / m)
                    * (theta.powf(m * f64::from(n) * (m - 1.0) / (1.0 + m)) * f_mean)
                        .powf(2.0 / lam_f)
            };
            let term3 = intrinsic_scale;
            (lhs, [term1, term2, term3], "sum")
        }
        CylinderKind::StandardParabolic => {
            return Err(Error::PreconditionUnmet(
                "the sup bound is stated on one-sided and intrinsic cylinders".to_string(),
            ));
        }
    };

    let rhs = match combine {
        "max" => terms[0].max(terms[1]).max(terms[2]),
        _ => terms.iter().sum(),
    };
    let names = ["u-content", "forcing", "scaling-threshold"];
    let argmax = (0..3)
        .max_by(|&a, &b| terms[a].total_cmp(&terms[b]))
        .expect("three branch values always compare");

    let mut map = base_params(params);
    put(&mut map, "center_dist", cyl.center_dist);
    put(&mut map, "t_center", cyl.t_center);
    put(&mut map, "sigma", sigma);
    match cyl.kind {
        CylinderKind::OneSided { radius, duration } => {
            put(&mut map, "radius", radius);
            put(&mut map, "duration", duration);
        }
        _ => {
            put(&mut map, "rho", cyl.rho);
            put(&mut map, "theta", cyl.theta);
        }
    }
    put(&mut map, "branch_u_content", terms[0]);
    put(&mut map, "branch_forcing", terms[1]);
    put(&mut map, "branch_scaling_threshold", terms[2]);
    put_str(&mut map, "combine", combine);

    Ok(Report::from_sides(
        "supbound",
        "quantitative-sup-estimate",
        map,
        lhs,
        rhs,
        names[argmax],
        None,
        quad_err,
    ))
}
