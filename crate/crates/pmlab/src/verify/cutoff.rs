//! Cut-off energy estimates on backward cylinders B_R × (t₀−S, t₀]: the
//! truncated-power (Moser-weighted) form and the level-set (De Giorgi) form.
//!
//! Both run with a product cut-off ζ(x, t) = ζ_sp(|x|)·ζ_t(t) vanishing on
//! the parabolic boundary. The cut-off is radial about the cylinder center,
//! so these checkers require origin-centered cylinders — that keeps every
//! integrand a function of (|x|, t) and inside the radial quadrature engine.


use super::{base_params, put, time_grid, PhiTestFn, Report, ZetaProfile, SUP_TIME_SAMPLES};
use crate::error::{Error, Result};
use crate::exponents::Params;
use crate::field::{RadialField, RadialForcing};
use crate::geometry::{
    integrate_cylinder, slice_integral_fn, Cylinder, CylinderKind, QuadratureSpec,
};
use crate::verify::power::{degiorgi_v, degiorgi_v_bounds};

/// Prototype constant multiplying the |∇ζ|² term (ν = L = 1).
const C_GRADIENT: f64 = 37.0;

/// Prototype constant multiplying the forcing term (ν = 1).
const C_FORCING: f64 = 6.0;

/// Sample grid (radial × time) for the pointwise sandwich assertion.
const SANDWICH_GRID: (usize, usize) = (20, 10);

/// Unpacks a backward cylinder centered on the symmetry axis, the only
/// geometry on which a radial cut-off profile is well-defined.
fn backward_geometry(cyl: &Cylinder) -> Result<(f64, f64)> {
    let CylinderKind::OneSided { radius, duration } = cyl.kind else {
        return Err(Error::PreconditionUnmet(
            "cut-off energy checks run on backward cylinders B_R × (t₀−S, t₀]".to_string(),
        ));
    };
    if cyl.center_dist != 0.0 {
        return Err(Error::PreconditionUnmet(
            "cut-off energy checks need an origin-centered cylinder so the cut-off stays radial"
                .to_string(),
        ));
    }
    Ok((radius, duration))
}

/// Energy estimate with a truncated power weight Φ = φ_{α,k,ℓ}: the sup of
/// ∫ v ζ² plus the Φ-weighted gradient energy is tested against the
/// gradient-of-cut-off, moving-time, and forcing terms with the prototype
/// constants 37 and 6(1+C_Φ).
pub fn check_energy_phi(
    field: &dyn RadialField,
    forcing: &dyn RadialForcing,
    cyl: &Cylinder,
    phi_fn: &PhiTestFn,
    zeta: &ZetaProfile,
    params: &Params,
    spec: &QuadratureSpec,
) -> Result<Report> {
    let (radius, duration) = backward_geometry(cyl)?;
    let zeta = zeta.validated()?;
    let n = field.dim();
    let m = field.m();
    let t_end = cyl.t_center;
    let singular = field.domain().singular_at_origin;

    let v_at = |s: f64, t: f64| phi_fn.v_of(field.value(s, t).abs(), m);
    let zeta_sq =
        |s: f64, t: f64| (zeta.space(s, radius) * zeta.time(t, t_end, duration)).powi(2);
    let mut quad_err: f64 = 0.0;

    // sup_τ ∫ v ζ² dx / (m+1): slice integrals on a uniform time grid.
    let (t_lo, t_hi) = cyl.time_interval(m);
    let mut sup_term: f64 = 0.0;
    for t in time_grid(t_lo, t_hi, SUP_TIME_SAMPLES) {
        let est = slice_integral_fn(
            &|s| v_at(s, t) * zeta_sq(s, t),
            n,
            0.0,
            radius,
            spec,
            singular,
        )?;
        sup_term = sup_term.max(est.value / (m + 1.0));
        quad_err = quad_err.max(est.err / (m + 1.0));
    }

    let grad_term = integrate_cylinder(
        &|s, t| {
            let w_sq = field.um(s, t).powi(2);
            field.grad_um_mag(s, t).powi(2) * phi_fn.phi(w_sq, m) * zeta_sq(s, t)
        },
        n,
        m,
        cyl,
        spec,
        singular,
    )?;
    quad_err += grad_term.err;
    let lhs = sup_term + 0.5 * grad_term.value;

    let cutoff_term = integrate_cylinder(
        &|s, t| {
            let w_sq = field.um(s, t).powi(2);
            let slope = zeta.space_slope(s, radius) * zeta.time(t, t_end, duration);
            w_sq * phi_fn.phi(w_sq, m) * slope * slope
        },
        n,
        m,
        cyl,
        spec,
        singular,
    )?;
    let time_term = integrate_cylinder(
        &|s, t| {
            let zt = zeta.time(t, t_end, duration);
            let dzt = zeta.time_slope(t, t_end, duration);
            let dz_sq = 2.0 * zeta.space(s, radius).powi(2) * zt * dzt;
            v_at(s, t) * dz_sq
        },
        n,
        m,
        cyl,
        spec,
        singular,
    )?;
    let forcing_term = if forcing.is_zero() {
        crate::quad::Estimate::ZERO
    } else {
        integrate_cylinder(
            &|s, t| {
                let w_sq = field.um(s, t).powi(2);
                let weight = phi_fn.phi(w_sq, m) + w_sq * phi_fn.dphi(w_sq, m);
                forcing.f_r(s, t).powi(2) * weight * zeta_sq(s, t)
            },
            n,
            m,
            cyl,
            spec,
            singular,
        )?
    };
    quad_err += cutoff_term.err + time_term.err + forcing_term.err;
    let rhs = C_GRADIENT * cutoff_term.value
        + 2.0 / (m + 1.0) * time_term.value
        + C_FORCING * (1.0 + phi_fn.c_phi()) * forcing_term.value;

    let mut map = base_params(params);
    put(&mut map, "radius", radius);
    put(&mut map, "duration", duration);
    put(&mut map, "t_end", t_end);
    put(&mut map, "alpha", phi_fn.alpha);
    put(&mut map, "k", phi_fn.k);
    put(&mut map, "ell", phi_fn.ell);
    put(&mut map, "space_plateau", zeta.space_plateau);
    put(&mut map, "time_ramp", zeta.time_ramp);

    Ok(Report::from_sides(
        "energy-phi",
        "energy-truncated-power",
        map,
        lhs,
        rhs,
        "moser-weighted",
        None,
        quad_err,
    ))
}

/// Level-set energy estimate at level k ≥ 0: the sup of
/// ∫ (|u|^m − k^m)₊^{3+1/m} ζ² plus the gradient energy of the squared
/// positive part is tested against the cut-off, moving-time, and forcing
/// terms. The closed-form primitive behind the time term is asserted to sit
/// inside its two-sided sandwich on a deterministic sample grid.
#[allow(clippy::too_many_arguments)]
pub fn check_energy_degiorgi(
    field: &dyn RadialField,
    forcing: &dyn RadialForcing,
    cyl: &Cylinder,
    k_level: f64,
    zeta: &ZetaProfile,
    params: &Params,
    spec: &QuadratureSpec,
) -> Result<Report> {
    if !(k_level >= 0.0) {
        return Err(Error::Domain(format!("level must satisfy k ≥ 0, got {k_level}")));
    }
    let (radius, duration) = backward_geometry(cyl)?;
    let zeta = zeta.validated()?;
    let n = field.dim();
    let m = field.m();
    let t_end = cyl.t_center;
    let singular = field.domain().singular_at_origin;
    let km = k_level.powf(m);

    let gap = move |s: f64, t: f64| (field.value(s, t).abs().powf(m) - km).max(0.0);
    let zeta_sq =
        |s: f64, t: f64| (zeta.space(s, radius) * zeta.time(t, t_end, duration)).powi(2);

    // Pointwise sandwich for the primitive driving the time term.
    let (t_lo, t_hi) = cyl.time_interval(m);
    let mut worst_slack: f64 = 0.0;
    for i in 1..=SANDWICH_GRID.0 {
        let s = radius * i as f64 / SANDWICH_GRID.0 as f64;
        for j in 1..=SANDWICH_GRID.1 {
            let t = t_lo + (t_hi - t_lo) * j as f64 / SANDWICH_GRID.1 as f64;
            let u_abs = field.value(s, t).abs();
            let v = degiorgi_v(u_abs, k_level, m);
            let (lo, hi) = degiorgi_v_bounds(u_abs, k_level, m);
            let scale = hi.max(1e-300);
            worst_slack = worst_slack.max((lo - v) / scale).max((v - hi) / scale);
        }
    }
    if worst_slack > 1e-9 {
        return Err(Error::Domain(format!(
            "primitive escaped its sandwich by relative slack {worst_slack:.3e}"
        )));
    }

    let mut quad_err: f64 = 0.0;
    let mut sup_term: f64 = 0.0;
    for t in time_grid(t_lo, t_hi, SUP_TIME_SAMPLES) {
        let est = slice_integral_fn(
            &|s| gap(s, t).powf(3.0 + 1.0 / m) * zeta_sq(s, t),
            n,
            0.0,
            radius,
            spec,
            singular,
        )?;
        sup_term = sup_term.max(est.value);
        quad_err = quad_err.max(est.err);
    }

    // |∇(|u|^m − k^m)₊²|² = 4 (|u|^m − k^m)₊² |∇|u|^m|², and for a radial
    // scalar field |∇|u|^m| coincides with |D⟦u⟧^m|.
    let grad_term = integrate_cylinder(
        &|s, t| 4.0 * gap(s, t).powi(2) * field.grad_um_mag(s, t).powi(2) * zeta_sq(s, t),
        n,
        m,
        cyl,
        spec,
        singular,
    )?;
    quad_err += grad_term.err;
    let lhs = sup_term + grad_term.value;

    let cutoff_term = integrate_cylinder(
        &|s, t| {
            if gap(s, t) > 0.0 {
                let slope = zeta.space_slope(s, radius) * zeta.time(t, t_end, duration);
                field.value(s, t).abs().powf(4.0 * m) * slope * slope
            } else {
                0.0
            }
        },
        n,
        m,
        cyl,
        spec,
        singular,
    )?;
    let time_term = integrate_cylinder(
        &|s, t| {
            let zt = zeta.time(t, t_end, duration);
            let dzt = zeta.time_slope(t, t_end, duration);
            let dz_sq = 2.0 * zeta.space(s, radius).powi(2) * zt * dzt;
            field.value(s, t).abs() * gap(s, t).powi(3) * dz_sq
        },
        n,
        m,
        cyl,
        spec,
        singular,
    )?;
    let forcing_term = if forcing.is_zero() {
        crate::quad::Estimate::ZERO
    } else {
        integrate_cylinder(
            &|s, t| {
                if gap(s, t) > 0.0 {
                    forcing.f_r(s, t).powi(2)
                        * field.value(s, t).abs().powf(2.0 * m)
                        * zeta_sq(s, t)
                } else {
                    0.0
                }
            },
            n,
            m,
            cyl,
            spec,
            singular,
        )?
    };
    quad_err += cutoff_term.err + time_term.err + forcing_term.err;
    let rhs = cutoff_term.value + time_term.value + forcing_term.value;

    let mut map = base_params(params);
    put(&mut map, "radius", radius);
    put(&mut map, "duration", duration);
    put(&mut map, "t_end", t_end);
    put(&mut map, "k_level", k_level);
    put(&mut map, "space_plateau", zeta.space_plateau);
    put(&mut map, "time_ramp", zeta.time_ramp);
    put(&mut map, "sandwich_worst_slack", worst_slack);

    let branch = if lhs == 0.0 && rhs == 0.0 { "empty-level-set" } else { "level-set" };
    Ok(Report::from_sides(
        "energy-degiorgi",
        "energy-level-set",
        map,
        lhs,
        rhs,
        branch,
        None,
        quad_err,
    ))
}
