//! Oracle tests for the exact solution families: frozen closed-form values,
//! finite-difference cross-checks, the quadrature-built forcing kernel, and
//! the structural properties (radial symmetry, monotone blow-up, gradient
//! decay exponents) the rest of the laboratory relies on.

use pmlab::solutions::{norm, vpower, vpower_scalar, ExactSolution, SolutionKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Amplitude of the separable solution at (N, m) = (3, 0.1):
/// (2·0.1·0.7/0.9)^{10/9} = 0.126501311814345738… evaluated independently
/// at 30 significant digits and frozen here.
const SEPARABLE_PREFACTOR_3_01: f64 = 0.126_501_311_814_345_74;

#[test]
fn separable_prefactor_and_point_value_match_frozen_oracle() {
    let sol = ExactSolution::separable(3, 0.1, 2.0).unwrap();
    let k = sol.separable_prefactor();
    assert!(
        ((k - SEPARABLE_PREFACTOR_3_01) / SEPARABLE_PREFACTOR_3_01).abs() < 1e-12,
        "prefactor K = {k}, expected {SEPARABLE_PREFACTOR_3_01}"
    );
    // At |x| = 1 and T − t = 1 both powers collapse to 1, so u = K.
    let u = sol.eval_radial(1.0, 1.0).unwrap();
    assert!((u - k).abs() < 1e-15, "u(1, T−1) = {u} should equal the prefactor {k}");
}

#[test]
fn separable_gradient_magnitude_matches_displayed_form() {
    let (n, m, t_ext) = (3, 0.1, 2.0);
    let sol = ExactSolution::separable(n, m, t_ext).unwrap();
    let k = sol.separable_prefactor();
    for &(s, t) in &[(0.3f64, 0.5f64), (1.0, 1.0), (2.5, 1.9)] {
        let tau: f64 = t_ext - t;
        let expected = (2.0 * m / (1.0 - m))
            * k.powf(m)
            * tau.powf(m / (1.0 - m))
            * s.powf(-(1.0 + m) / (1.0 - m));
        let got = sol.grad_um_mag_radial(s, t).unwrap();
        assert!(
            ((got - expected) / expected).abs() < 1e-12,
            "|∇u^m|({s}, {t}) = {got}, displayed form gives {expected}"
        );
    }
}

#[test]
fn analytic_gradients_match_central_differences() {
    let h = 1e-5;
    let cases: Vec<ExactSolution> = vec![
        ExactSolution::separable(3, 0.1, 2.0).unwrap(),
        ExactSolution::king_kosov(3, 0.1, 2.0, 1.0).unwrap(),
        ExactSolution::kosov_critical(6, 2.0).unwrap(),
    ];
    for sol in &cases {
        let (s, t) = match sol.kind() {
            SolutionKind::KosovCritical => (0.3, 0.5),
            _ => (1.0, 1.0),
        };
        let um = |s: f64| vpower_scalar(sol.eval_radial(s, t).unwrap(), sol.m());
        let fd = (um(s + h) - um(s - h)) / (2.0 * h);
        let analytic = sol.dr_um_radial(s, t).unwrap();
        let rel = ((fd - analytic) / analytic).abs();
        assert!(
            rel < 1e-6,
            "{:?}: ∂_s u^m analytic {analytic} vs central difference {fd} (rel {rel:.2e})",
            sol.kind()
        );
    }
}

#[test]
fn gradient_vector_points_radially_and_matches_componentwise_differences() {
    let sol = ExactSolution::separable(3, 0.1, 2.0).unwrap();
    let x = [0.4, -0.7, 0.5];
    let t = 0.8;
    let grad = sol.grad_um(&x, t).unwrap();
    let h = 1e-6;
    for i in 0..3 {
        let mut xp = x;
        let mut xm = x;
        xp[i] += h;
        xm[i] -= h;
        let fd = (vpower_scalar(sol.eval(&xp, t).unwrap(), sol.m())
            - vpower_scalar(sol.eval(&xm, t).unwrap(), sol.m()))
            / (2.0 * h);
        let rel = ((fd - grad[i]) / grad[i]).abs();
        assert!(rel < 1e-6, "component {i}: analytic {} vs difference {fd}", grad[i]);
    }
}

#[test]
fn deformed_family_reduces_to_separable_at_zero_amplitude() {
    let t_ext = 2.0;
    let sep = ExactSolution::separable(3, 0.1, t_ext).unwrap();
    let kk = ExactSolution::king_kosov(3, 0.1, t_ext, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    for _ in 0..20 {
        let s = 10f64.powf(rng.gen_range(-3.0..1.0));
        let t = rng.gen_range(0.0..t_ext * 0.999);
        let a = sep.eval_radial(s, t).unwrap();
        let b = kk.eval_radial(s, t).unwrap();
        assert!(
            ((a - b) / a).abs() < 1e-10,
            "at (s, t) = ({s}, {t}): separable {a} vs zero-amplitude deformation {b}"
        );
        let da = sep.dr_um_radial(s, t).unwrap();
        let db = kk.dr_um_radial(s, t).unwrap();
        assert!(((da - db) / da).abs() < 1e-10, "gradients differ at ({s}, {t})");
    }
}

#[test]
fn pde_residuals_vanish_to_discretization_accuracy() {
    let h = 1e-3;
    let sep = ExactSolution::separable(3, 0.1, 2.0).unwrap();
    let r_sep = sep.residual(1.0, 1.0, h).unwrap();
    assert!(r_sep.abs() < 1e-4, "separable residual {r_sep:.3e} at (1, 1)");

    let kk = ExactSolution::king_kosov(3, 0.1, 2.0, 1.0).unwrap();
    let r_kk = kk.residual(1.0, 1.0, h).unwrap();
    assert!(r_kk.abs() < 1e-4, "deformed-family residual {r_kk:.3e} at (1, 1)");

    let kc = ExactSolution::kosov_critical(6, 2.0).unwrap();
    let r_kc = kc.residual(0.3, 0.5, h).unwrap();
    assert!(r_kc.abs() < 1e-3, "borderline residual {r_kc:.3e} at (0.3, 0.5)");
}

#[test]
fn residual_rejects_stencils_that_leave_the_domain() {
    let sep = ExactSolution::separable(3, 0.1, 2.0).unwrap();
    assert!(sep.residual(1e-4, 1.0, 1e-3).is_err(), "stencil touches the singular axis");
    assert!(sep.residual(1.0, 1.9995, 1e-3).is_err(), "stencil crosses extinction");
    let kc = ExactSolution::kosov_critical(6, 2.0).unwrap();
    assert!(kc.residual(0.9995, 0.5, 1e-3).is_err(), "stencil leaves the ball");
    assert!(kc.residual(0.3, 0.0015, 1e-3).is_err(), "stencil crosses t = 0");
}

#[test]
fn forcing_primitive_approaches_its_small_radius_asymptote() {
    let sol = ExactSolution::kosov_critical(6, 2.0).unwrap();
    let (r, t) = (1e-6, 0.5);
    let g = sol.kosov_g(r, t).unwrap();
    let asymptote = sol.kosov_g_asymptote(r, t).unwrap();
    let ratio = g / asymptote;
    assert!(
        (0.9..=1.1).contains(&ratio),
        "G/asymptote = {ratio} at r = {r} (G = {g:.6e}, limit shape = {asymptote:.6e})"
    );
}

#[test]
fn forcing_kernel_is_negative_near_the_origin() {
    let sol = ExactSolution::kosov_critical(6, 2.0).unwrap();
    for &rho in &[1e-8, 1e-6, 1e-4, 1e-2] {
        let h = sol.kosov_h(rho, 0.5).unwrap();
        assert!(h < 0.0, "H({rho}, 0.5) = {h} should be negative near 0");
    }
    // The primitive inherits the sign, making F·e_r positive.
    let g = sol.kosov_g(1e-3, 0.5).unwrap();
    assert!(g < 0.0, "G(1e-3, 0.5) = {g} should be negative");
    let f = sol.forcing_radial(1e-3, 0.5).unwrap();
    assert!(f > 0.0, "radial forcing {f} should be positive near 0");
}

/// ∬ |F|² over dyadic annuli {2^{−j−1} ≤ |x| ≤ 2^{−j}} × [0.25, 0.5].
/// Square-integrability near the origin means the annulus series is
/// summable; the terms decay like a power of the logarithm (slowly), so the
/// test asserts strict decay plus a summability check on the partial sums
/// rather than a geometric ratio.
#[test]
fn borderline_forcing_is_square_integrable_near_origin() {
    let n = 6u32;
    let sol = ExactSolution::kosov_critical(n, 2.0).unwrap();
    let area = 2.0 * std::f64::consts::PI.powf(f64::from(n) / 2.0)
        / gamma_half_integer(n as f64 / 2.0);
    let (t_lo, t_hi) = (0.25, 0.5);
    let time_nodes = 4;
    let annulus = |j: i32| -> f64 {
        let (lo, hi) = (2f64.powi(-j - 1), 2f64.powi(-j));
        // Fixed 4-node Gauss rule in time, 8 radial Kronrod panels: plenty
        // for a smooth integrand on a single annulus.
        let (tn, tw) = gl_nodes(time_nodes, t_lo, t_hi);
        let mut total = 0.0;
        for (&t, &wt) in tn.iter().zip(&tw) {
            let mut val = 0.0;
            let panels = 8;
            for k in 0..panels {
                let a = lo + (hi - lo) * f64::from(k) / f64::from(panels);
                let b = lo + (hi - lo) * f64::from(k + 1) / f64::from(panels);
                let est = pmlab::quad::kronrod15(
                    &mut |r: f64| {
                        let f = sol.forcing_radial(r, t).unwrap();
                        f * f * area * r.powi(n as i32 - 1)
                    },
                    a,
                    b,
                );
                val += est.value;
            }
            total += wt * val;
        }
        total
    };
    let terms: Vec<f64> = (2..30).map(annulus).collect();
    for w in terms.windows(2) {
        assert!(w[1] < w[0], "annulus integrals should decrease: {} then {}", w[0], w[1]);
    }
    // Summability: walking inward, the >1%-growth streak of the partial
    // sums has died out by the time the resolution floor is reached, which
    // is exactly the laboratory's convergence verdict. (The terms decay
    // like a power of the logarithm, so growth stays above 1% for a dozen
    // annuli before settling — a genuinely divergent series keeps growing
    // at the floor instead.)
    let mut partial = 0.0;
    let mut streak = 0;
    for &a in &terms {
        if partial > 0.0 && a > 0.01 * partial {
            streak += 1;
        } else {
            streak = 0;
        }
        partial += a;
    }
    assert!(
        streak < 8,
        "partial sums still grew >1% for the {streak} innermost annuli — \
         the series would be misjudged divergent"
    );
}

#[test]
fn evaluation_is_radially_symmetric_under_random_rotations() {
    let sol = ExactSolution::separable(3, 0.1, 2.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let x = [0.6, -0.2, 0.9];
    let t = 0.7;
    let reference = sol.eval(&x, t).unwrap();
    for _ in 0..50 {
        let mut y = x;
        // Compose three random Givens rotations; each preserves |x| exactly
        // up to rounding.
        for _ in 0..3 {
            let i = rng.gen_range(0..3);
            let j = (i + 1 + rng.gen_range(0..2)) % 3;
            let phi = rng.gen_range(0.0..std::f64::consts::TAU);
            let (c, s) = (phi.cos(), phi.sin());
            let (yi, yj) = (y[i], y[j]);
            y[i] = c * yi - s * yj;
            y[j] = s * yi + c * yj;
        }
        let rotated = sol.eval(&y, t).unwrap();
        assert!(
            ((rotated - reference) / reference).abs() < 1e-12,
            "rotation changed the value: {reference} vs {rotated}"
        );
    }
}

#[test]
fn solutions_blow_up_monotonically_toward_the_origin() {
    let cases: Vec<ExactSolution> = vec![
        ExactSolution::separable(3, 0.1, 2.0).unwrap(),
        ExactSolution::king_kosov(3, 0.1, 2.0, 2.5).unwrap(),
        ExactSolution::kosov_critical(6, 2.0).unwrap(),
    ];
    for sol in &cases {
        let t = match sol.kind() {
            SolutionKind::KosovCritical => 0.5,
            _ => 1.0,
        };
        let radii: Vec<f64> = (0..40).map(|k| 1e-6 * 1.3f64.powi(k)).collect();
        let mut prev = f64::INFINITY;
        for &s in &radii {
            let u = sol.eval_radial(s, t).unwrap();
            assert!(u > 0.0, "{:?}: u({s}) = {u} must be positive", sol.kind());
            assert!(u < prev, "{:?}: u not decreasing at s = {s}", sol.kind());
            prev = u;
        }
    }
}

#[test]
fn gradient_decay_exponents_match_the_radial_power_laws() {
    // Separable: log|∇u^m| against log s has slope −(1+m)/(1−m) exactly.
    let sol = ExactSolution::separable(3, 0.1, 2.0).unwrap();
    let pts: Vec<(f64, f64)> = (0..40)
        .map(|k| {
            let s = 1e-6 * (1e-2f64 / 1e-6).powf(f64::from(k) / 39.0);
            (s.ln(), sol.grad_um_mag_radial(s, 1.0).unwrap().ln())
        })
        .collect();
    let slope = least_squares_slope(&pts);
    let expected = -(1.0 + 0.1) / (1.0 - 0.1);
    assert!(
        (slope - expected).abs() < 1e-3,
        "separable gradient slope {slope} vs −(1+m)/(1−m) = {expected}"
    );

    // Borderline family: slope −N/2 modulo the logarithmic factor; after
    // compensating by L^{(N−2)/4} the fit is a clean power law.
    let n = 6u32;
    let kc = ExactSolution::kosov_critical(n, 2.0).unwrap();
    let t = 0.5;
    let tau: f64 = 2.0 - t;
    let pts: Vec<(f64, f64)> = (0..40)
        .map(|k| {
            let s = 1e-6 * (1e-2f64 / 1e-6).powf(f64::from(k) / 39.0);
            let l = -(s * tau.powf(-1.0 / (2.0 * kc.m()))).ln();
            let compensated = kc.grad_um_mag_radial(s, t).unwrap()
                * l.powf(f64::from(n - 2) / 4.0);
            (s.ln(), compensated.ln())
        })
        .collect();
    let slope = least_squares_slope(&pts);
    let expected = -f64::from(n) / 2.0;
    assert!(
        (slope - expected).abs() < 0.05,
        "borderline gradient slope {slope} vs −N/2 = {expected}"
    );
}

#[test]
fn vector_power_examples() {
    assert_eq!(vpower(&[3.0, 4.0], 2.0), vec![15.0, 20.0]);
    let v = vpower(&[-2.0], 0.5);
    assert!((v[0] + std::f64::consts::SQRT_2).abs() < 1e-12);
    assert_eq!(vpower(&[0.0], 0.5), vec![0.0]);
    assert_eq!(norm(&[3.0, 4.0]), 5.0);
}

#[test]
fn domain_errors_are_reported() {
    let sol = ExactSolution::kosov_critical(6, 2.0).unwrap();
    assert!(sol.eval_radial(0.0, 0.5).is_err(), "singular axis");
    assert!(sol.eval_radial(1.5, 0.5).is_err(), "outside the ball");
    assert!(sol.eval_radial(0.3, 1.5).is_err(), "past T/2");
    assert!(sol.kosov_g(0.3, -0.1).is_err(), "negative time");
    let sep = ExactSolution::separable(3, 0.1, 2.0).unwrap();
    assert!(sep.eval_radial(0.0, 0.5).is_err(), "singular axis");
    assert!(sep.kosov_g(0.3, 0.5).is_err(), "no forcing kernel for the prototype family");
}

/// Slope of the least-squares line through (x, y) pairs.
fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    sxy / sxx
}

/// Γ at integer or half-integer arguments (enough for sphere areas).
fn gamma_half_integer(x: f64) -> f64 {
    if (x - x.round()).abs() < 1e-12 {
        let n = x.round() as u32;
        (1..n).map(f64::from).product::<f64>().max(1.0)
    } else {
        // x = k + 1/2: Γ(1/2) = √π, Γ(x+1) = xΓ(x).
        let mut value = std::f64::consts::PI.sqrt();
        let mut arg = 0.5;
        while arg + 1.0 <= x + 1e-12 {
            value *= arg;
            arg += 1.0;
        }
        value
    }
}

/// Gauss–Legendre nodes/weights mapped to [a, b].
fn gl_nodes(order: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (xs, ws) = pmlab::quad::gauss_legendre(order);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (
        xs.iter().map(|&x| mid + half * x).collect(),
        ws.iter().map(|&w| w * half).collect(),
    )
}
