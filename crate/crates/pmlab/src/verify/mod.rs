//! Numerical checkers for the inequalities behind the higher-integrability
//! theory: energy estimates, the gluing bound, the Sobolev–Poincaré and
//! reverse-Hölder inequalities on coupled cylinders, sup-bounds, the
//! integrability probe, and the final higher-integrability estimate itself.
//!
//! Every checker evaluates its left- and right-hand side independently by
//! quadrature on concrete fields and cylinders, then reports the empirical
//! ratio in a [`Report`]. Structure constants are fixed at the prototype
//! values ν = L = 1, and displayed constants without an explicit value are
//! taken as 1, so a ratio is a statement about the *shape* of the
//! inequality, not about optimal constants: finiteness and stability under
//! rescaling are the meaningful outcomes.

mod coupled;
mod cutoff;
mod energy;
mod main_estimate;
mod power;
mod probe;
mod supbound;

pub use coupled::{
    check_poincare, check_revholder, check_theta_bound, verify_coupling, CouplingBranch,
};
pub use cutoff::{check_energy_degiorgi, check_energy_phi};
pub use energy::{check_energy, check_gluing};
pub use main_estimate::check_main_estimate;
pub use power::{check_power_inequalities, degiorgi_v, degiorgi_v_bounds, PhiTestFn};
pub use probe::{probe_integrability, IntegrabilityProbe};
pub use supbound::check_supbound;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// Number of time samples used when a checker takes a supremum of slice
/// integrals over a time interval. The profiles in this laboratory are
/// monotone or mildly oscillatory in time, so a uniform grid including both
/// endpoints resolves the supremum to well below quadrature tolerance.
pub const SUP_TIME_SAMPLES: usize = 48;

/// Outcome of one checker run: both sides of the inequality, their ratio,
/// the branch that was active, and enough context to reproduce the run.
///
/// `lhs`, `rhs`, and `ratio` are `None` exactly when the corresponding
/// quantity diverged; the `branch` string then records the divergence, so a
/// report is meaningful for sharpness experiments as well.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Report {
    /// Machine-readable checker name, e.g. `"energy"` or `"revholder"`.
    pub check: String,
    /// Stable descriptive identifier of the inequality being tested.
    pub anchor: String,
    /// Run parameters: dimensions, exponents, cylinder, cut-off profile, …
    pub params: Map<String, Value>,
    /// Left-hand side of the inequality (`None` when divergent).
    pub lhs: Option<f64>,
    /// Right-hand side of the inequality (`None` when divergent).
    pub rhs: Option<f64>,
    /// lhs / rhs with the convention 0/0 = 0 (`None` when divergent).
    pub ratio: Option<f64>,
    /// Which case of a multi-branch right-hand side was active.
    pub branch: String,
    /// RNG seed for sampling checkers; `None` for deterministic ones.
    pub seed: Option<u64>,
    /// Accumulated quadrature error estimate over all evaluated terms.
    pub quadrature_error: f64,
}

impl Report {
    /// Builds a report from finite sides, applying the 0/0 = 0 convention
    /// so trivially-vanishing configurations report a zero ratio.
    pub fn from_sides(
        check: &str,
        anchor: &str,
        params: Map<String, Value>,
        lhs: f64,
        rhs: f64,
        branch: &str,
        seed: Option<u64>,
        quadrature_error: f64,
    ) -> Self {
        let ratio = if lhs == 0.0 && rhs == 0.0 { 0.0 } else { lhs / rhs };
        Report {
            check: check.to_string(),
            anchor: anchor.to_string(),
            params,
            lhs: Some(lhs),
            rhs: Some(rhs),
            ratio: Some(ratio),
            branch: branch.to_string(),
            seed,
            quadrature_error,
        }
    }

    /// Builds a report for a configuration whose left-hand side diverged —
    /// a sharpness datum, not a failure. All sides are `None` because the
    /// inequality degenerates to ∞ ≤ ∞ (its data terms diverge alongside).
    pub fn divergent_lhs(
        check: &str,
        anchor: &str,
        params: Map<String, Value>,
        seed: Option<u64>,
    ) -> Self {
        Report {
            check: check.to_string(),
            anchor: anchor.to_string(),
            params,
            lhs: None,
            rhs: None,
            ratio: None,
            branch: "lhs-divergent".to_string(),
            seed,
            quadrature_error: 0.0,
        }
    }

    /// True when every reported quantity is finite.
    pub fn is_finite(&self) -> bool {
        [self.lhs, self.rhs, self.ratio]
            .iter()
            .all(|v| v.map_or(false, f64::is_finite))
    }

    /// Header of the CSV summary, one row per check.
    pub fn csv_header() -> &'static str {
        "check,anchor,lhs,rhs,ratio,branch,seed,quadrature_error"
    }

    /// One CSV row ('.' decimal separator, no quoting needed because every
    /// field is alphanumeric-with-dashes or numeric).
    pub fn csv_row(&self) -> String {
        fn num(v: Option<f64>) -> String {
            v.map_or_else(|| "divergent".to_string(), |x| format!("{x:.12e}"))
        }
        format!(
            "{},{},{},{},{},{},{},{:.3e}",
            self.check,
            self.anchor,
            num(self.lhs),
            num(self.rhs),
            num(self.ratio),
            self.branch,
            self.seed.map_or_else(String::new, |s| s.to_string()),
            self.quadrature_error
        )
    }
}

/// Piecewise-linear cut-off profile for one-sided cylinders B_R × (t₀−S, t₀]:
/// ζ(x, t) = ζ_sp(|x − x₀|) · ζ_t(t) with ζ_sp ≡ 1 on [0, βR], falling
/// linearly to 0 at R, and ζ_t ≡ 0 at t₀−S, rising linearly to 1 at
/// t₀−S+γS. The profile vanishes on the parabolic boundary as the energy
/// estimates require, with slope bounds |∇ζ| ≤ 1/((1−β)R), |∂_t ζ| ≤ 1/(γS).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ZetaProfile {
    /// Fraction of the spatial radius on which ζ ≡ 1 (β ∈ [0, 1)).
    pub space_plateau: f64,
    /// Fraction of the duration spent ramping up from 0 (γ ∈ (0, 1]).
    pub time_ramp: f64,
}

impl Default for ZetaProfile {
    /// β = γ = 1/2 gives the classical slope bounds 2/R and 2/S.
    fn default() -> Self {
        ZetaProfile { space_plateau: 0.5, time_ramp: 0.5 }
    }
}

impl ZetaProfile {
    /// Validates the profile fractions.
    pub fn validated(self) -> Result<Self> {
        if !(0.0..1.0).contains(&self.space_plateau) {
            return Err(Error::Domain(format!(
                "spatial plateau fraction must lie in [0, 1), got {}",
                self.space_plateau
            )));
        }
        if !(self.time_ramp > 0.0 && self.time_ramp <= 1.0) {
            return Err(Error::Domain(format!(
                "time ramp fraction must lie in (0, 1], got {}",
                self.time_ramp
            )));
        }
        Ok(self)
    }

    /// Spatial factor ζ_sp at distance `s` from the cylinder center.
    pub fn space(&self, s: f64, radius: f64) -> f64 {
        let plateau = self.space_plateau * radius;
        if s <= plateau {
            1.0
        } else if s >= radius {
            0.0
        } else {
            (radius - s) / (radius - plateau)
        }
    }

    /// |ζ_sp'| at distance `s` (0 on the plateau and outside the ball).
    pub fn space_slope(&self, s: f64, radius: f64) -> f64 {
        let plateau = self.space_plateau * radius;
        if s > plateau && s < radius {
            1.0 / (radius - plateau)
        } else {
            0.0
        }
    }

    /// Temporal factor ζ_t at time `t` for the interval (t_end−S, t_end].
    pub fn time(&self, t: f64, t_end: f64, duration: f64) -> f64 {
        let t_start = t_end - duration;
        let ramp_end = t_start + self.time_ramp * duration;
        if t <= t_start {
            0.0
        } else if t >= ramp_end {
            1.0
        } else {
            (t - t_start) / (ramp_end - t_start)
        }
    }

    /// ∂_t ζ_t at time `t` (non-negative: the ramp only rises).
    pub fn time_slope(&self, t: f64, t_end: f64, duration: f64) -> f64 {
        let t_start = t_end - duration;
        let ramp_end = t_start + self.time_ramp * duration;
        if t > t_start && t < ramp_end {
            1.0 / (ramp_end - t_start)
        } else {
            0.0
        }
    }
}

/// Uniform time grid with both endpoints, used for suprema over time.
pub(crate) fn time_grid(t_lo: f64, t_hi: f64, samples: usize) -> Vec<f64> {
    (0..=samples)
        .map(|i| t_lo + (t_hi - t_lo) * i as f64 / samples as f64)
        .collect()
}

/// Inserts a float into a JSON parameter map.
pub(crate) fn put(map: &mut Map<String, Value>, key: &str, value: f64) {
    map.insert(key.to_string(), Value::from(value));
}

/// Inserts a string into a JSON parameter map.
pub(crate) fn put_str(map: &mut Map<String, Value>, key: &str, value: &str) {
    map.insert(key.to_string(), Value::from(value));
}

/// Standard parameter block shared by the cylinder-based checkers.
pub(crate) fn base_params(p: &crate::exponents::Params) -> Map<String, Value> {
    let mut map = Map::new();
    map.insert("n".to_string(), Value::from(p.n));
    put(&mut map, "m", p.m);
    put(&mut map, "r", p.r);
    put(&mut map, "p", p.p);
    map
}
