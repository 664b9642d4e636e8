//! Two-cylinder energy estimate and the gluing bound for slice means.
//!
//! Both checkers work on centered intrinsic cylinders Q_ρ^{(θ)}(z₀) and
//! evaluate the displayed inequalities with every undetermined constant set
//! to 1, reporting the empirical ratio of the two sides.


use super::{base_params, put, time_grid, Report, SUP_TIME_SAMPLES};
use crate::error::{Error, Result};
use crate::exponents::Params;
use crate::field::{RadialField, RadialForcing};
use crate::geometry::{ball_volume, mean_fn, slice_integral_fn, Cylinder, QuadratureSpec};
use crate::solutions::vpower_scalar;

/// Number of radii tried when minimizing the gluing drift over ρ̂ ∈ [ρ/2, ρ].
const GLUING_RADIUS_GRID: usize = 16;

/// Number of time samples per radius in the gluing checker.
const GLUING_TIME_GRID: usize = 8;

/// Energy estimate on a pair of nested intrinsic cylinders: the sup of
/// slice means of |⟦u⟧^{(1+m)/2} − ⟦a⟧^{(1+m)/2}|²/r^{(1+m)/m} plus the
/// gradient energy on Q_r^{(θ)} is tested against the three-term bracket on
/// Q_ρ^{(θ)} (difference quotients in time and space, plus the forcing).
#[allow(clippy::too_many_arguments)]
pub fn check_energy(
    field: &dyn RadialField,
    forcing: &dyn RadialForcing,
    center_dist: f64,
    t_center: f64,
    rho: f64,
    r_in: f64,
    theta: f64,
    a: f64,
    params: &Params,
    spec: &QuadratureSpec,
) -> Result<Report> {
    if !(r_in >= 0.5 * rho && r_in < rho) {
        return Err(Error::Domain(format!(
            "inner radius must lie in [ρ/2, ρ) = [{}, {}), got {r_in}",
            0.5 * rho,
            rho
        )));
    }
    let n = field.dim();
    let m = field.m();
    let singular = field.domain().singular_at_origin;
    let inner = Cylinder::intrinsic(center_dist, t_center, r_in, theta);
    let outer = Cylinder::intrinsic(center_dist, t_center, rho, theta);

    let half = 0.5 * (1.0 + m);
    let a_half = vpower_scalar(a, half);
    let a_m = vpower_scalar(a, m);
    let half_gap_sq =
        move |s: f64, t: f64| (vpower_scalar(field.value(s, t), half) - a_half).powi(2);

    let mut quad_err: f64 = 0.0;

    // Supremum over the inner time interval of slice means of the scaled
    // (1+m)/2-power gap.
    let inner_radius = inner.spatial_radius(m);
    let inner_vol = ball_volume(n) * inner_radius.powi(n as i32);
    let (t_lo, t_hi) = inner.time_interval(m);
    let time_scale = r_in.powf((1.0 + m) / m);
    let mut sup_term: f64 = 0.0;
    for t in time_grid(t_lo, t_hi, SUP_TIME_SAMPLES) {
        let est = slice_integral_fn(
            &|s| half_gap_sq(s, t),
            n,
            center_dist,
            inner_radius,
            spec,
            singular,
        )?;
        sup_term = sup_term.max(est.value / inner_vol / time_scale);
        quad_err = quad_err.max(est.err / inner_vol / time_scale);
    }

    let grad = mean_fn(
        &|s, t| field.grad_um_mag(s, t).powi(2),
        n,
        m,
        &inner,
        spec,
        singular,
    )?;
    quad_err += grad.err;
    let lhs = sup_term + grad.value;

    // Three-term bracket on the outer cylinder.
    let dt_gap = rho.powf((1.0 + m) / m) - r_in.powf((1.0 + m) / m);
    let dsp_gap = theta.powf(2.0 * m * (m - 1.0) / (1.0 + m)) * (rho - r_in).powi(2);
    let bracket = move |s: f64, t: f64| {
        let u = field.value(s, t);
        let time_part = (vpower_scalar(u, half) - a_half).powi(2) / dt_gap;
        let space_part = (vpower_scalar(u, m) - a_m).powi(2) / dsp_gap;
        let force_part = forcing.f_r(s, t).powi(2);
        time_part + space_part + force_part
    };
    let rhs = mean_fn(&bracket, n, m, &outer, spec, singular)?;
    quad_err += rhs.err;

    let mut map = base_params(params);
    put(&mut map, "center_dist", center_dist);
    put(&mut map, "t_center", t_center);
    put(&mut map, "rho", rho);
    put(&mut map, "r_in", r_in);
    put(&mut map, "theta", theta);
    put(&mut map, "a", a);

    Ok(Report::from_sides(
        "energy",
        "energy-caccioppoli",
        map,
        lhs,
        rhs.value,
        "two-cylinder",
        None,
        quad_err,
    ))
}

/// Gluing bound: the drift of slice means of u across times in Λ_ρ(t₀),
/// minimized over the sampling radius ρ̂ ∈ [ρ/2, ρ] (a grid surrogate for
/// the existential radius of the estimate), is tested against
/// θ^{m(1−m)/(1+m)} ρ^{1/m} ⨌ (|D⟦u⟧^m| + |F|).
pub fn check_gluing(
    field: &dyn RadialField,
    forcing: &dyn RadialForcing,
    center_dist: f64,
    t_center: f64,
    rho: f64,
    theta: f64,
    params: &Params,
    spec: &QuadratureSpec,
) -> Result<Report> {
    let n = field.dim();
    let m = field.m();
    let singular = field.domain().singular_at_origin;
    let outer = Cylinder::intrinsic(center_dist, t_center, rho, theta);
    let (t_lo, t_hi) = outer.time_interval(m);
    let times = time_grid(t_lo, t_hi, GLUING_TIME_GRID - 1);
    let spatial_scale = theta.powf(m * (m - 1.0) / (1.0 + m));

    let mut quad_err: f64 = 0.0;
    let mut smallest_drift = f64::INFINITY;
    let mut argmin_radius = 0.5 * rho;
    for i in 0..GLUING_RADIUS_GRID {
        let rho_hat =
            0.5 * rho + 0.5 * rho * i as f64 / (GLUING_RADIUS_GRID - 1) as f64;
        let radius = spatial_scale * rho_hat;
        let vol = ball_volume(n) * radius.powi(n as i32);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &t in &times {
            let est =
                slice_integral_fn(&|s| field.value(s, t), n, center_dist, radius, spec, singular)?;
            let mean = est.value / vol;
            lo = lo.min(mean);
            hi = hi.max(mean);
            quad_err = quad_err.max(2.0 * est.err / vol);
        }
        if hi - lo < smallest_drift {
            smallest_drift = hi - lo;
            argmin_radius = rho_hat;
        }
    }

    let data = mean_fn(
        &|s, t| field.grad_um_mag(s, t) + forcing.f_r(s, t).abs(),
        n,
        m,
        &outer,
        spec,
        singular,
    )?;
    quad_err += data.err;
    let rhs = theta.powf(m * (1.0 - m) / (1.0 + m)) * rho.powf(1.0 / m) * data.value;

    let mut map = base_params(params);
    put(&mut map, "center_dist", center_dist);
    put(&mut map, "t_center", t_center);
    put(&mut map, "rho", rho);
    put(&mut map, "theta", theta);
    put(&mut map, "rho_hat", argmin_radius);

    Ok(Report::from_sides(
        "gluing",
        "gluing-mean-drift",
        map,
        smallest_drift,
        rhs,
        "grid-min-surrogate",
        None,
        quad_err,
    ))
}
