//! Exponent calculus and iteration-lemma simulators.
//!
//! Everything here is a pure scalar formula in the parameter tuple
//! `(N, m, r, p)`:
//!
//! - `N ≥ 2`: spatial dimension,
//! - `m > 0`: diffusion exponent (fast diffusion for `m < 1`),
//! - `r > 0`: integrability exponent assumed for `u`,
//! - `p > 0`: integrability exponent assumed for the forcing `F` (via `|F|^{2p}`).
//!
//! The central quantity is `λ_r := N(m−1) + 2r`; its positivity (together
//! with `p > (N+2)/2`) is the admissibility condition under which the
//! gradient higher-integrability machinery operates. From it derive the
//! scaling deficit `d = 2r/λ_r`, the reverse-Hölder exponent
//! `q = rN/(rN + λ_r) ∈ (N/(N+2), 1)`, and the Moser iteration sequences.
//!
//! The module also contains numeric simulators for the two classical
//! iteration lemmas (fast geometric convergence and the interpolation
//! bound) so that their thresholds can be exercised empirically rather
//! than trusted.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for exact-algebra identities evaluated in doubles.
///
/// All formulas in this module are exact algebra; 1e−12 covers the rounding
/// of a short chain of double-precision operations with a wide margin.
pub const REL_TOL_ALGEBRA: f64 = 1e-12;

/// Parameter tuple `(N, m, r, p)` with derived exponents.
///
/// Construction validates only the field-level constraints (`N ≥ 2`,
/// `m, r, p > 0`). Admissibility (`λ_r > 0` and `p > (N+2)/2`) is a *tag*
/// checked by [`Params::admissible`]; inadmissible tuples are constructible
/// so boundary cases can be exercised, and operations that require
/// admissibility reject them explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Spatial dimension `N ≥ 2`.
    pub n: u32,
    /// Diffusion exponent `m > 0`.
    pub m: f64,
    /// Integrability exponent `r > 0` for `u`.
    pub r: f64,
    /// Forcing integrability exponent `p > 0` (for `|F|^{2p}`).
    pub p: f64,
}

impl Params {
    /// Validated constructor; rejects only malformed fields, not
    /// inadmissible exponent combinations.
    pub fn new(n: u32, m: f64, r: f64, p: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("dimension N must be ≥ 2, got {n}")));
        }
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::Domain(format!("m must be a positive real, got {m}")));
        }
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::Domain(format!("r must be a positive real, got {r}")));
        }
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::Domain(format!("p must be a positive real, got {p}")));
        }
        Ok(Self { n, m, r, p })
    }

    /// `λ_s := N(m−1) + 2s` for an arbitrary integrability exponent `s`.
    pub fn lambda_of(&self, s: f64) -> f64 {
        f64::from(self.n) * (self.m - 1.0) + 2.0 * s
    }

    /// `λ_r := N(m−1) + 2r`. May be ≤ 0; callers check admissibility.
    pub fn lambda_r(&self) -> f64 {
        self.lambda_of(self.r)
    }

    /// Admissibility tag: `λ_r > 0` and `p > (N+2)/2`.
    pub fn admissible(&self) -> bool {
        self.lambda_r() > 0.0 && self.p > (f64::from(self.n) + 2.0) / 2.0
    }

    /// Errors unless [`Params::admissible`].
    pub fn require_admissible(&self) -> Result<()> {
        if self.admissible() {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "inadmissible parameters: λ_r = {:.6} (need > 0), p = {} (need > {})",
                self.lambda_r(),
                self.p,
                (f64::from(self.n) + 2.0) / 2.0
            )))
        }
    }

    /// Sub-critical regime tag: `N ≥ 3` and `0 < m ≤ (N−2)/(N+2)`.
    pub fn subcritical(&self) -> bool {
        self.n >= 3 && self.m > 0.0 && self.m <= critical_m(self.n)
    }

    /// Sobolev-type iteration ratio `κ = 1 + 2/N`.
    pub fn kappa(&self) -> f64 {
        1.0 + 2.0 / f64::from(self.n)
    }

    /// Scaling deficit `d = 2r/λ_r`; equals 1 iff `m = 1`, exceeds 1 for `m < 1`.
    pub fn scaling_deficit(&self) -> Result<f64> {
        let lam = self.lambda_r();
        if lam <= 0.0 {
            return Err(Error::Domain(format!(
                "scaling deficit needs λ_r > 0, got λ_r = {lam:.6}"
            )));
        }
        Ok(2.0 * self.r / lam)
    }

    /// Reverse-Hölder integrability exponent `q = rN/(rN + λ_r)`.
    ///
    /// For admissible parameters with `m < 1` this lies strictly inside
    /// `(N/(N+2), 1)`; at `m = 1` it degenerates to the lower endpoint.
    pub fn q_exponent(&self) -> Result<f64> {
        let lam = self.lambda_r();
        if lam <= 0.0 {
            return Err(Error::Domain(format!(
                "q exponent needs λ_r > 0, got λ_r = {lam:.6}"
            )));
        }
        let rn = self.r * f64::from(self.n);
        let q = rn / (rn + lam);
        debug_assert!(q < 1.0);
        debug_assert!(q >= f64::from(self.n) / (f64::from(self.n) + 2.0) - 1e-15);
        Ok(q)
    }

    /// Moser iteration sequence `(α_i, p_i)`.
    ///
    /// Closed forms (with `κ = 1 + 2/N`):
    ///
    /// ```text
    /// α_i = (λ_r / 4m) κ^i − (N(m−1) + 2(m+1)) / 4m,
    /// p_i = 2 α_i + (m+1)/m,
    /// ```
    ///
    /// so that `α_0 = (r − (m+1)) / 2m` and `p_0 = r/m`, and the recursion
    /// `2 α_{i+1} = 2 α_i κ + (N(m−1) + 2(m+1)) / (Nm)` holds exactly.
    pub fn moser_sequence(&self, i: u32) -> Result<(f64, f64)> {
        let lam = self.lambda_r();
        if lam <= 0.0 {
            return Err(Error::Domain(format!(
                "Moser sequence needs λ_r > 0, got λ_r = {lam:.6}"
            )));
        }
        let n = f64::from(self.n);
        let m = self.m;
        let shift = (n * (m - 1.0) + 2.0 * (m + 1.0)) / (4.0 * m);
        let alpha_i = lam / (4.0 * m) * self.kappa().powi(i as i32) - shift;
        let p_i = 2.0 * alpha_i + (m + 1.0) / m;
        Ok((alpha_i, p_i))
    }
}

/// Critical diffusion exponent `m_c = (N−2)_+ / (N+2)`.
///
/// Below (and at) this value, bounded integrability of `u` no longer comes
/// for free and the sub-critical machinery applies; for `N ≤ 2` the value
/// is 0 and no positive `m` is sub-critical.
pub fn critical_m(n: u32) -> f64 {
    let n = f64::from(n);
    (n - 2.0).max(0.0) / (n + 2.0)
}

/// Critical integrability gain of the separable singular solution,
///
/// ```text
/// ε_o = −(N(m−1) + 2(1+m)) / (1+m),
/// ```
///
/// the largest `ε` such that its gradient `∇u^m` stays in `L^{2+2ε'}` for all
/// `ε' < ε` near the singular axis. Defined for `0 < m ≤ m_c(N)`; the gain
/// vanishes exactly at the critical exponent `m = m_c`.
pub fn eps_o_separable(n: u32, m: f64) -> Result<f64> {
    let mc = critical_m(n);
    if mc <= 0.0 {
        return Err(Error::Domain(format!(
            "no sub-critical range in dimension N = {n}"
        )));
    }
    if !(m > 0.0) || m > mc {
        return Err(Error::Domain(format!(
            "m = {m} outside the sub-critical interval (0, {mc}]"
        )));
    }
    let nf = f64::from(n);
    Ok(-(nf * (m - 1.0) + 2.0 * (1.0 + m)) / (1.0 + m))
}

/// Closed forms of the two geometric sums driving the Moser iteration,
///
/// ```text
/// Σ_{j≥1} κ^{−j+1}   = (N+2)/2,
/// Σ_{j≥1} j κ^{−j+1} = ((N+2)/2)²,
/// ```
///
/// with `κ = 1 + 2/N` (both series converge to these values exactly).
pub fn geometric_sums(n: u32) -> (f64, f64) {
    let s1 = (f64::from(n) + 2.0) / 2.0;
    (s1, s1 * s1)
}

/// Partial sums of the two series in [`geometric_sums`], `terms` terms each.
/// Used to verify the closed forms by direct summation.
pub fn geometric_partial_sums(n: u32, terms: u32) -> (f64, f64) {
    let kappa = 1.0 + 2.0 / f64::from(n);
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for j in 1..=terms {
        let term = kappa.powi(-(j as i32) + 1);
        s1 += term;
        s2 += f64::from(j) * term;
    }
    (s1, s2)
}

/// Initial-value threshold of the fast geometric convergence lemma.
///
/// For the recursion `Y_{n+1} ≤ C b^n Y_n^{1+α}` (`C > 0`, `b ≥ 1`, `α > 0`),
/// `Y_n → 0` whenever `Y_0 ≤ C^{−1/α} b^{−1/α²}`; this returns that threshold.
pub fn degiorgi_threshold(c: f64, b: f64, alpha: f64) -> Result<f64> {
    check_iteration_params(c, b, alpha)?;
    Ok(c.powf(-1.0 / alpha) * b.powf(-1.0 / (alpha * alpha)))
}

/// Verdict of [`degiorgi_simulate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IterationVerdict {
    /// Iterates provably heading to zero.
    ConvergesToZero,
    /// Iterates provably blowing up.
    Diverges,
    /// Neither signal within the step budget (e.g. exactly at threshold).
    Undecided,
}

/// Number of iteration steps after which [`degiorgi_simulate`] gives up.
pub const DEGIORGI_N_MAX: usize = 200;

/// Simulates the *equality* recursion `Y_{n+1} = C b^n Y_n^{1+α}` and
/// classifies the trajectory.
///
/// The iteration runs in log space (`L_n = ln Y_n`), since trajectories
/// routinely dip below the double-precision underflow line before turning
/// around. Detection rules:
///
/// - **Diverges** once `Y_n > 10⁶·Y_0` and the value has grown for 5
///   consecutive steps.
/// - **ConvergesToZero** once `Y_n < 10⁻¹²·Y_0` and the log-decrements have
///   *steepened* for 5 consecutive steps. The steepening guard matters: a
///   trajectory started above threshold can first fall astronomically far
///   before blowing up, but on such a trajectory the decrements
///   `L_{n+1} − L_n` shrink monotonically (the affine decrement recursion
///   `d_{n+1} = ln b + (1+α) d_n` moves away from its fixed point in a
///   direction set by the starting side of the threshold), so the
///   convergence rule can never fire on it.
/// - **Undecided** after `n_max` steps (200 by default): the exact-threshold
///   trajectory with `b = 1` is constant, for example.
pub fn degiorgi_simulate(
    y0: f64,
    c: f64,
    b: f64,
    alpha: f64,
    n_max: usize,
) -> Result<IterationVerdict> {
    check_iteration_params(c, b, alpha)?;
    if !(y0 >= 0.0) || !y0.is_finite() {
        return Err(Error::Domain(format!("Y_0 must be a finite real ≥ 0, got {y0}")));
    }
    if y0 == 0.0 {
        return Ok(IterationVerdict::ConvergesToZero);
    }

    let grow_cut = 1e6f64.ln();
    let drop_cut = 1e12f64.ln();
    let ln_c = c.ln();
    let ln_b = b.ln();

    let l0 = y0.ln();
    let mut l = l0;
    let mut prev_d: Option<f64> = None;
    let mut grow_streak = 0u32;
    let mut steepen_streak = 0u32;

    for n in 0..n_max {
        let l_next = ln_c + (n as f64) * ln_b + (1.0 + alpha) * l;
        let d = l_next - l;
        grow_streak = if d > 0.0 { grow_streak + 1 } else { 0 };
        steepen_streak = match prev_d {
            Some(pd) if d < pd => steepen_streak + 1,
            Some(_) => 0,
            None => 0,
        };
        prev_d = Some(d);
        l = l_next;

        if l > l0 + grow_cut && grow_streak >= 5 {
            return Ok(IterationVerdict::Diverges);
        }
        if l < l0 - drop_cut && d < 0.0 && steepen_streak >= 5 {
            return Ok(IterationVerdict::ConvergesToZero);
        }
    }
    Ok(IterationVerdict::Undecided)
}

/// Bound from the interpolation iteration lemma: if a bounded sequence
/// satisfies `M_n ≤ C b^n M_{n+1}^{1−α}` (`b > 1`, `0 < α ≤ 1`), then
/// `M_0 ≤ (2C / b^{1−1/α})^{1/α}`.
pub fn interpolation_bound(c: f64, b: f64, alpha: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::Domain(format!("C must be > 0, got {c}")));
    }
    if !(b > 1.0) {
        return Err(Error::Domain(format!("b must be > 1, got {b}")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!("α must lie in (0, 1], got {alpha}")));
    }
    Ok((2.0 * c / b.powf(1.0 - 1.0 / alpha)).powf(1.0 / alpha))
}

fn check_iteration_params(c: f64, b: f64, alpha: f64) -> Result<()> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Domain(format!("C must be a positive real, got {c}")));
    }
    if !(b >= 1.0) || !b.is_finite() {
        return Err(Error::Domain(format!("b must be ≥ 1, got {b}")));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!("α must be > 0, got {alpha}")));
    }
    Ok(())
}
