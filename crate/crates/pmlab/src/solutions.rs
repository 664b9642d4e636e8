//! Exact singular solutions of the fast-diffusion equation.
//!
//! Three closed-form radial families on ℝ^N, all non-negative, all blowing
//! up at the spatial origin for t below the extinction time T:
//!
//! - [`SolutionKind::Separable`]: u = K (T−t)_+^{1/(1−m)} |x|^{−2/(1−m)},
//!   a separable solution of the prototype ∂_t u = Δu^m;
//! - [`SolutionKind::KingKosov`]: a two-parameter deformation that
//!   interpolates to the separable solution as its amplitude A → 0;
//! - [`SolutionKind::KosovCritical`]: the borderline case m = (N−2)/(N+2)
//!   with a logarithmic kernel, solving ∂_t u − (1/m)Δu^m = div F for a
//!   divergence-form forcing F that is square-integrable but no better —
//!   the witness that the gradient's integrability gain can vanish.
//!
//! The forcing's radial primitive G is not elementary; it is produced by
//! adaptive quadrature with an exponential substitution to resolve the
//! logarithmic endpoint. PDE residuals are evaluated with fourth-order
//! five-point stencils so that discretization error stays far below the
//! magnitudes the residual tests assert.

use crate::error::{Error, Result};
use crate::exponents::critical_m;
use crate::field::{Domain, RadialField, RadialForcing};
use crate::quad::{adaptive, QuadTol, MAX_DEPTH_DEFAULT};

/// Signed power ⟦u⟧^α = |u|^{α−1} u of a scalar, with ⟦0⟧^α = 0 (the
/// convention that makes the map continuous at 0 for α ∈ (0,1)).
pub fn vpower_scalar(u: f64, alpha: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        u.abs().powf(alpha - 1.0) * u
    }
}

/// Vector power ⟦u⟧^α = |u|^{α−1} u, with ⟦0⟧^α = 0.
pub fn vpower(u: &[f64], alpha: f64) -> Vec<f64> {
    let norm = norm(u);
    if norm == 0.0 {
        return vec![0.0; u.len()];
    }
    let scale = norm.powf(alpha - 1.0);
    u.iter().map(|&c| scale * c).collect()
}

/// Euclidean norm.
pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|&c| c * c).sum::<f64>().sqrt()
}

/// Which exact family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolutionKind {
    Separable,
    /// Amplitude `a ≥ 0` of the extra |x|^β term; `a = 0` reduces exactly
    /// to [`SolutionKind::Separable`].
    KingKosov { a: f64 },
    KosovCritical,
}

/// An exact radial solution with extinction time `t_ext`.
#[derive(Debug, Clone, Copy)]
pub struct ExactSolution {
    kind: SolutionKind,
    n: u32,
    m: f64,
    t_ext: f64,
}

/// Lower floor for the exponential substitution when integrating the
/// forcing kernel from 0: mass below this radius is ≪ 1e−10 for every
/// dimension N ≥ 3.
const KOSOV_G_FLOOR: f64 = 1e-24;

/// Absolute tolerance for the adaptive quadrature that builds G.
const KOSOV_G_ABS_TOL: f64 = 1e-10;

impl ExactSolution {
    /// Separable solution; requires N ≥ 3 and 0 < m < (N−2)/(N+2).
    pub fn separable(n: u32, m: f64, t_ext: f64) -> Result<Self> {
        Self::check_subcritical(n, m)?;
        Self::check_t_ext(t_ext)?;
        Ok(Self { kind: SolutionKind::Separable, n, m, t_ext })
    }

    /// Deformed solution with amplitude `a ≥ 0`; same (N, m) range as the
    /// separable family.
    pub fn king_kosov(n: u32, m: f64, t_ext: f64, a: f64) -> Result<Self> {
        Self::check_subcritical(n, m)?;
        Self::check_t_ext(t_ext)?;
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::Domain(format!("amplitude must satisfy a ≥ 0, got {a}")));
        }
        Ok(Self { kind: SolutionKind::KingKosov { a }, n, m, t_ext })
    }

    /// Borderline solution at m = (N−2)/(N+2), N ≥ 3, living on
    /// B_R × (0, T/2] with R = (T/2)^{1/(2m)}.
    pub fn kosov_critical(n: u32, t_ext: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::Domain(format!(
                "borderline solution needs N ≥ 3 so that m = (N−2)/(N+2) > 0, got N = {n}"
            )));
        }
        Self::check_t_ext(t_ext)?;
        let m = critical_m(n);
        Ok(Self { kind: SolutionKind::KosovCritical, n, m, t_ext })
    }

    fn check_subcritical(n: u32, m: f64) -> Result<()> {
        let mc = critical_m(n);
        if !(m > 0.0 && m < mc) {
            return Err(Error::Domain(format!(
                "separable family needs 0 < m < (N−2)/(N+2) = {mc:.6}, got m = {m} at N = {n}"
            )));
        }
        Ok(())
    }

    fn check_t_ext(t_ext: f64) -> Result<()> {
        if !(t_ext > 0.0 && t_ext.is_finite()) {
            return Err(Error::Domain(format!("extinction time must be positive, got {t_ext}")));
        }
        Ok(())
    }

    pub fn kind(&self) -> SolutionKind {
        self.kind
    }

    pub fn dim(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn t_ext(&self) -> f64 {
        self.t_ext
    }

    /// λ = N(m−1) + 2, negative throughout the admissible range.
    fn lambda(&self) -> f64 {
        f64::from(self.n) * (self.m - 1.0) + 2.0
    }

    /// Amplitude K = (2m|λ|/(1−m))^{1/(1−m)} of the separable solution.
    pub fn separable_prefactor(&self) -> f64 {
        let m = self.m;
        (2.0 * m * self.lambda().abs() / (1.0 - m)).powf(1.0 / (1.0 - m))
    }

    /// Spatial radius R = (T/2)^{1/(2m)} of the borderline solution's domain.
    pub fn kosov_radius(&self) -> f64 {
        (0.5 * self.t_ext).powf(1.0 / (2.0 * self.m))
    }

    /// Validity region as a [`Domain`].
    pub fn domain(&self) -> Domain {
        match self.kind {
            SolutionKind::Separable | SolutionKind::KingKosov { .. } => Domain {
                s_min: 0.0,
                s_max: f64::INFINITY,
                t_min: f64::NEG_INFINITY,
                t_max: f64::INFINITY,
                singular_at_origin: true,
            },
            SolutionKind::KosovCritical => Domain {
                s_min: 0.0,
                s_max: self.kosov_radius(),
                t_min: 0.0,
                t_max: 0.5 * self.t_ext,
                singular_at_origin: true,
            },
        }
    }

    fn check_radius(&self, s: f64) -> Result<()> {
        if s == 0.0 {
            return Err(Error::Singular("solution is unbounded at x = 0".into()));
        }
        if !(s > 0.0) {
            return Err(Error::Domain(format!("radius must be positive, got {s}")));
        }
        Ok(())
    }

    /// Logarithmic kernel L(s, t) = −ln(s (T−t)^{−1/(2m)}) of the borderline
    /// solution; errors when the logarithm's argument reaches 1.
    fn log_kernel(&self, s: f64, t: f64) -> Result<f64> {
        let tau = self.t_ext - t;
        if !(t > 0.0 && t <= 0.5 * self.t_ext) {
            return Err(Error::Domain(format!(
                "borderline solution lives on 0 < t ≤ T/2 = {}, got t = {t}",
                0.5 * self.t_ext
            )));
        }
        let arg = s * tau.powf(-1.0 / (2.0 * self.m));
        if arg >= 1.0 {
            return Err(Error::Domain(format!(
                "log kernel needs |x|(T−t)^{{−1/(2m)}} < 1, got {arg}"
            )));
        }
        Ok(-arg.ln())
    }

    /// u at radius s, time t. Separable/deformed kinds clamp to 0 for
    /// t ≥ T; the borderline kind errors outside its space-time box.
    pub fn eval_radial(&self, s: f64, t: f64) -> Result<f64> {
        self.check_radius(s)?;
        let m = self.m;
        let tau = (self.t_ext - t).max(0.0);
        match self.kind {
            SolutionKind::Separable => {
                if tau == 0.0 {
                    return Ok(0.0);
                }
                let k = self.separable_prefactor();
                Ok(k * tau.powf(1.0 / (1.0 - m)) * s.powf(-2.0 / (1.0 - m)))
            }
            SolutionKind::KingKosov { a } => {
                if tau == 0.0 {
                    return Ok(0.0);
                }
                let (sigma, beta, c, gamma) = self.king_kosov_exponents();
                let den = a * s.powf(beta) + c * s * s * tau.powf(gamma);
                Ok(tau.powf(sigma) * den.powf(-1.0 / (1.0 - m)))
            }
            SolutionKind::KosovCritical => {
                if s >= self.kosov_radius() {
                    return Err(Error::Domain(format!(
                        "borderline solution lives on |x| < R = {}, got |x| = {s}",
                        self.kosov_radius()
                    )));
                }
                let l = self.log_kernel(s, t)?;
                let p = f64::from(self.n + 2) / 4.0;
                let cn = f64::from(self.n - 2) / 2.0;
                Ok((cn * tau).powf(p) * s.powf(-f64::from(self.n + 2) / 2.0) * l.powf(-p))
            }
        }
    }

    /// (σ, β, c, γ) of the deformed family: u = (T−t)_+^σ
    /// [A|x|^β + c|x|²(T−t)_+^γ]^{−1/(1−m)}.
    fn king_kosov_exponents(&self) -> (f64, f64, f64, f64) {
        let n = f64::from(self.n);
        let m = self.m;
        let abs_lambda = self.lambda().abs();
        let sigma = (n - 2.0 - 2.0 * m) / (2.0 * m * m);
        let beta = (n - 2.0) * (1.0 - m) / m;
        let c = (1.0 - m) / (2.0 * m * abs_lambda);
        let gamma = abs_lambda / (2.0 * m * m);
        (sigma, beta, c, gamma)
    }

    /// u at a point x (any dimension-N coordinate vector), time t.
    pub fn eval(&self, x: &[f64], t: f64) -> Result<f64> {
        self.check_dim(x)?;
        self.eval_radial(norm(x), t)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n as usize {
            return Err(Error::Domain(format!(
                "point has dimension {}, solution lives in dimension {}",
                x.len(),
                self.n
            )));
        }
        Ok(())
    }

    /// Radial derivative ∂_s (u^m) at (s, t); same clamping rules as
    /// [`Self::eval_radial`].
    pub fn dr_um_radial(&self, s: f64, t: f64) -> Result<f64> {
        self.check_radius(s)?;
        let m = self.m;
        let tau = (self.t_ext - t).max(0.0);
        match self.kind {
            SolutionKind::Separable => {
                if tau == 0.0 {
                    return Ok(0.0);
                }
                let km = self.separable_prefactor().powf(m);
                let rate = 2.0 * m / (1.0 - m);
                Ok(-rate * km * tau.powf(m / (1.0 - m)) * s.powf(-(1.0 + m) / (1.0 - m)))
            }
            SolutionKind::KingKosov { a } => {
                if tau == 0.0 {
                    return Ok(0.0);
                }
                let (sigma, beta, c, gamma) = self.king_kosov_exponents();
                let den = a * s.powf(beta) + c * s * s * tau.powf(gamma);
                let den_prime = a * beta * s.powf(beta - 1.0) + 2.0 * c * s * tau.powf(gamma);
                let q = m / (1.0 - m);
                Ok(tau.powf(m * sigma) * (-q) * den.powf(-q - 1.0) * den_prime)
            }
            SolutionKind::KosovCritical => {
                if s >= self.kosov_radius() {
                    return Err(Error::Domain(format!(
                        "borderline solution lives on |x| < R = {}, got |x| = {s}",
                        self.kosov_radius()
                    )));
                }
                let l = self.log_kernel(s, t)?;
                let n = f64::from(self.n);
                let cn = (n - 2.0) / 2.0;
                let p_lo = (n - 2.0) / 4.0;
                let p_hi = (n + 2.0) / 4.0;
                let front = (cn * tau).powf(p_lo) * cn * s.powf(-n / 2.0);
                Ok(front * (-l.powf(-p_lo) + 0.5 * l.powf(-p_hi)))
            }
        }
    }

    /// Gradient of ⟦u⟧^m at x: the radial derivative times x/|x|.
    pub fn grad_um(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let s = norm(x);
        let d = self.dr_um_radial(s, t)?;
        Ok(x.iter().map(|&c| d * c / s).collect())
    }

    /// |∇u^m| at radius s.
    pub fn grad_um_mag_radial(&self, s: f64, t: f64) -> Result<f64> {
        Ok(self.dr_um_radial(s, t)?.abs())
    }

    /// Kernel H(ρ, t) = ρ^{(N−4)/2}[−2L^{−(N−2)/4} + L^{−(N+2)/4}] whose
    /// radial primitive builds the borderline forcing. Negative near ρ = 0.
    pub fn kosov_h(&self, rho: f64, t: f64) -> Result<f64> {
        self.require_critical()?;
        self.check_radius(rho)?;
        let l = self.log_kernel(rho, t)?;
        let n = f64::from(self.n);
        let p_lo = (n - 2.0) / 4.0;
        let p_hi = (n + 2.0) / 4.0;
        Ok(rho.powf((n - 4.0) / 2.0) * (-2.0 * l.powf(-p_lo) + l.powf(-p_hi)))
    }

    /// G(r, t) = ∫₀^r H(ρ, t) dρ, the primitive normalized by G(0, t) = 0.
    ///
    /// Computed with the substitution ρ = e^y so the adaptive rule sees a
    /// smooth, exponentially decaying integrand instead of a fractional
    /// power against a logarithm.
    pub fn kosov_g(&self, r: f64, t: f64) -> Result<f64> {
        self.require_critical()?;
        self.check_radius(r)?;
        // Validate the log condition at the outer edge once; inner radii
        // only increase L.
        self.log_kernel(r, t)?;
        if r <= KOSOV_G_FLOOR {
            return Ok(0.0);
        }
        let mut integrand = |y: f64| {
            let rho = y.exp();
            self.kosov_h(rho, t).unwrap_or(0.0) * rho
        };
        let est = adaptive(
            &mut integrand,
            KOSOV_G_FLOOR.ln(),
            r.ln(),
            QuadTol::new(1e-12, KOSOV_G_ABS_TOL),
            MAX_DEPTH_DEFAULT,
        )?;
        Ok(est.value)
    }

    /// The L'Hôpital limit shape −(4/(N−2)) r^{(N−2)/2} L^{−(N−2)/4} that
    /// G approaches as r ↓ 0; exposed so callers can form the ratio.
    pub fn kosov_g_asymptote(&self, r: f64, t: f64) -> Result<f64> {
        self.require_critical()?;
        self.check_radius(r)?;
        let l = self.log_kernel(r, t)?;
        let n = f64::from(self.n);
        Ok(-(4.0 / (n - 2.0)) * r.powf((n - 2.0) / 2.0) * l.powf(-(n - 2.0) / 4.0))
    }

    /// Radial forcing component F·e_r =
    /// −((N+2)/4) c_N^{(N+2)/4} (T−t)_+^{(N−2)/4} r^{1−N} G(r, t)
    /// for the borderline solution; 0 for the prototype families.
    pub fn forcing_radial(&self, r: f64, t: f64) -> Result<f64> {
        match self.kind {
            SolutionKind::Separable | SolutionKind::KingKosov { .. } => Ok(0.0),
            SolutionKind::KosovCritical => {
                let n = f64::from(self.n);
                let tau = (self.t_ext - t).max(0.0);
                let cn = (n - 2.0) / 2.0;
                let g = self.kosov_g(r, t)?;
                Ok(-((n + 2.0) / 4.0)
                    * cn.powf((n + 2.0) / 4.0)
                    * tau.powf((n - 2.0) / 4.0)
                    * r.powf(1.0 - n)
                    * g)
            }
        }
    }

    /// Whether the family carries a non-zero forcing.
    pub fn has_forcing(&self) -> bool {
        matches!(self.kind, SolutionKind::KosovCritical)
    }

    fn require_critical(&self) -> Result<()> {
        if !matches!(self.kind, SolutionKind::KosovCritical) {
            return Err(Error::NotApplicable(
                "forcing kernel exists only for the borderline family".into(),
            ));
        }
        Ok(())
    }

    /// Pointwise PDE residual ∂_t u − c Δu^m − div F at radius s, time t,
    /// with c = 1 for the prototype families and c = 1/m for the borderline
    /// one. All derivatives use fourth-order five-point stencils of step h;
    /// div F differentiates r^{N−1} F_r (with G built by quadrature) and is
    /// skipped when the forcing vanishes.
    pub fn residual(&self, s: f64, t: f64, h: f64) -> Result<f64> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Domain(format!("step must be positive, got {h}")));
        }
        if s - 2.0 * h <= 0.0 {
            return Err(Error::Domain(format!(
                "need margin 2h = {} below the radius {s} to stay off the singular axis",
                2.0 * h
            )));
        }
        // Every stencil point must evaluate; the checks below surface domain
        // violations before any arithmetic.
        match self.kind {
            SolutionKind::Separable | SolutionKind::KingKosov { .. } => {
                if t + 2.0 * h >= self.t_ext {
                    return Err(Error::Domain(
                        "time stencil crosses the extinction time where u is only Lipschitz"
                            .into(),
                    ));
                }
            }
            SolutionKind::KosovCritical => {
                if t - 2.0 * h <= 0.0 || t + 2.0 * h > 0.5 * self.t_ext {
                    return Err(Error::Domain(
                        "time stencil leaves the borderline solution's interval (0, T/2]".into(),
                    ));
                }
                if s + 2.0 * h >= self.kosov_radius() {
                    return Err(Error::Domain(
                        "radial stencil leaves the borderline solution's ball".into(),
                    ));
                }
                // Tightest corner of the log condition: largest radius at
                // the latest time.
                self.log_kernel(s + 2.0 * h, t + 2.0 * h)?;
            }
        }

        let n = f64::from(self.n);
        // ∂_t u, fourth order.
        let ut = {
            let f = |dt: f64| self.eval_radial(s, t + dt);
            fourth_order_d1(f(-2.0 * h)?, f(-h)?, f(h)?, f(2.0 * h)?, h)
        };
        // Δu^m = ∂_ss u^m + (N−1)/s ∂_s u^m, fourth order.
        let um = |ds: f64| -> Result<f64> {
            Ok(vpower_scalar(self.eval_radial(s + ds, t)?, self.m))
        };
        let (f2m, f1m, f0, f1p, f2p) =
            (um(-2.0 * h)?, um(-h)?, um(0.0)?, um(h)?, um(2.0 * h)?);
        let d1 = fourth_order_d1(f2m, f1m, f1p, f2p, h);
        let d2 = fourth_order_d2(f2m, f1m, f0, f1p, f2p, h);
        let laplacian = d2 + (n - 1.0) / s * d1;
        let c = match self.kind {
            SolutionKind::KosovCritical => 1.0 / self.m,
            _ => 1.0,
        };
        // div F = r^{1−N} ∂_r (r^{N−1} F_r), fourth order on the flux.
        let div_f = if self.has_forcing() {
            let w = |ds: f64| -> Result<f64> {
                let r = s + ds;
                Ok(r.powf(n - 1.0) * self.forcing_radial(r, t)?)
            };
            let dw = fourth_order_d1(w(-2.0 * h)?, w(-h)?, w(h)?, w(2.0 * h)?, h);
            s.powf(1.0 - n) * dw
        } else {
            0.0
        };
        Ok(ut - c * laplacian - div_f)
    }
}

/// Fourth-order first derivative: (−f(x+2h) + 8f(x+h) − 8f(x−h) + f(x−2h)) / 12h.
fn fourth_order_d1(f2m: f64, f1m: f64, f1p: f64, f2p: f64, h: f64) -> f64 {
    (-f2p + 8.0 * f1p - 8.0 * f1m + f2m) / (12.0 * h)
}

/// Fourth-order second derivative:
/// (−f(x+2h) + 16f(x+h) − 30f(x) + 16f(x−h) − f(x−2h)) / 12h².
fn fourth_order_d2(f2m: f64, f1m: f64, f0: f64, f1p: f64, f2p: f64, h: f64) -> f64 {
    (-f2p + 16.0 * f1p - 30.0 * f0 + 16.0 * f1m - f2m) / (12.0 * h * h)
}

impl RadialField for ExactSolution {
    fn dim(&self) -> u32 {
        self.n
    }

    fn m(&self) -> f64 {
        self.m
    }

    /// Total version of [`ExactSolution::eval_radial`] for the quadrature
    /// engine: +∞ on the singular axis, NaN outside the validity region
    /// (so an out-of-domain integration is loud, not silently wrong).
    fn value(&self, s: f64, t: f64) -> f64 {
        match self.eval_radial(s, t) {
            Ok(v) => v,
            Err(Error::Singular(_)) => f64::INFINITY,
            Err(_) => f64::NAN,
        }
    }

    fn dr_um(&self, s: f64, t: f64) -> f64 {
        match self.dr_um_radial(s, t) {
            Ok(v) => v,
            Err(Error::Singular(_)) => f64::NEG_INFINITY,
            Err(_) => f64::NAN,
        }
    }

    fn domain(&self) -> Domain {
        ExactSolution::domain(self)
    }
}

impl RadialForcing for ExactSolution {
    fn f_r(&self, s: f64, t: f64) -> f64 {
        match self.forcing_radial(s, t) {
            Ok(v) => v,
            Err(_) => f64::NAN,
        }
    }

    fn is_zero(&self) -> bool {
        !self.has_forcing()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_power_matches_scalar_convention() {
        assert_eq!(vpower(&[3.0, 4.0], 2.0), vec![15.0, 20.0]);
        assert!((vpower_scalar(-2.0, 0.5) + std::f64::consts::SQRT_2).abs() < 1e-15);
        assert_eq!(vpower_scalar(0.0, 0.5), 0.0);
        assert_eq!(vpower(&[0.0, 0.0], 0.5), vec![0.0, 0.0]);
    }

    #[test]
    fn constructors_enforce_parameter_ranges() {
        assert!(ExactSolution::separable(3, 0.1, 2.0).is_ok());
        assert!(ExactSolution::separable(3, 0.2, 2.0).is_err(), "m = m_c is excluded");
        assert!(ExactSolution::separable(2, 0.1, 2.0).is_err(), "N = 2 has empty range");
        assert!(ExactSolution::king_kosov(3, 0.1, 2.0, -1.0).is_err(), "negative amplitude");
        assert!(ExactSolution::kosov_critical(2, 2.0).is_err());
        let sol = ExactSolution::kosov_critical(6, 2.0).unwrap();
        assert!((sol.m() - 0.5).abs() < 1e-15);
        assert!((sol.kosov_radius() - 1.0).abs() < 1e-15, "R = (T/2)^{{1/(2m)}} = 1 at T = 2");
    }

    #[test]
    fn extinction_clamps_values_and_gradients_to_zero() {
        let sol = ExactSolution::separable(3, 0.1, 1.0).unwrap();
        assert_eq!(sol.eval_radial(0.7, 1.0).unwrap(), 0.0);
        assert_eq!(sol.eval_radial(0.7, 5.0).unwrap(), 0.0);
        assert_eq!(sol.dr_um_radial(0.7, 5.0).unwrap(), 0.0);
    }
}
