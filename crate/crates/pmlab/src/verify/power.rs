//! Pointwise power inequalities for signed powers ⟦u⟧^α = |u|^{α−1}u, the
//! truncation test function φ_{α,k,ℓ} with its primitive v, and the
//! truncated primitive used by the De Giorgi energy estimate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Map;

use super::{put, put_str, Report};
use crate::error::{Error, Result};
use crate::solutions::{norm, vpower, vpower_scalar};

/// Dimension of the random vectors drawn by the sampling checker.
const SAMPLE_DIM: usize = 3;

/// Golden-section iterations for the 1-D convex minimization inside the
/// quasi-minimizer inequality; 200 steps contract the bracket by ~1e−41.
const GOLDEN_ITERS: usize = 200;

/// Bounded non-decreasing Lipschitz truncation of the power s ↦ s^α:
/// constant k^{2mα} below s = k^{2m}, equal to s^α in between, and frozen at
/// ℓ^{2mα} above s = ℓ^{2m}. Admissible in the energy estimate with
/// C_Φ = sup s·φ'(s)/φ(s) = α, attained on the middle branch.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PhiTestFn {
    /// Power of the middle branch (α ≥ 0).
    pub alpha: f64,
    /// Lower truncation level, k ∈ (0, 1].
    pub k: f64,
    /// Upper truncation level, ℓ ∈ (1, ∞).
    pub ell: f64,
}

impl PhiTestFn {
    /// Validates the parameter ranges.
    pub fn new(alpha: f64, k: f64, ell: f64) -> Result<Self> {
        if !(alpha >= 0.0) {
            return Err(Error::Domain(format!("power must satisfy α ≥ 0, got {alpha}")));
        }
        if !(k > 0.0 && k <= 1.0) {
            return Err(Error::Domain(format!("lower level must lie in (0, 1], got k = {k}")));
        }
        if !(ell > 1.0) {
            return Err(Error::Domain(format!("upper level must exceed 1, got ℓ = {ell}")));
        }
        Ok(PhiTestFn { alpha, k, ell })
    }

    /// φ_{α,k,ℓ}(s) for s ≥ 0; the truncation thresholds scale with the
    /// diffusion power because φ is applied to |⟦u⟧^m|².
    pub fn phi(&self, s: f64, m: f64) -> f64 {
        let lo = self.k.powf(2.0 * m);
        let hi = self.ell.powf(2.0 * m);
        if s <= lo {
            self.k.powf(2.0 * m * self.alpha)
        } else if s < hi {
            s.powf(self.alpha)
        } else {
            self.ell.powf(2.0 * m * self.alpha)
        }
    }

    /// φ'(s) — equal to α s^{α−1} on the middle branch and 0 on the
    /// constant branches.
    pub fn dphi(&self, s: f64, m: f64) -> f64 {
        let lo = self.k.powf(2.0 * m);
        let hi = self.ell.powf(2.0 * m);
        if s > lo && s < hi {
            self.alpha * s.powf(self.alpha - 1.0)
        } else {
            0.0
        }
    }

    /// The admissibility constant sup s·φ'/φ, which equals α.
    pub fn c_phi(&self) -> f64 {
        self.alpha
    }

    /// The primitive v = ∫₀^{|u|^{m+1}} φ(s^{2m/(m+1)}) ds, evaluated by
    /// joining the three branches in closed form. Continuous across the
    /// branch points |u| = k and |u| = ℓ.
    pub fn v_of(&self, u_abs: f64, m: f64) -> f64 {
        if !(u_abs >= 0.0) {
            return f64::NAN;
        }
        let (alpha, k, ell) = (self.alpha, self.k, self.ell);
        let e = m + 1.0 + 2.0 * m * alpha;
        let middle = |x: f64| -> f64 {
            k.powf(e) + (m + 1.0) / e * (x.powf(e) - k.powf(e))
        };
        if u_abs <= k {
            k.powf(2.0 * m * alpha) * u_abs.powf(m + 1.0)
        } else if u_abs < ell {
            middle(u_abs)
        } else {
            middle(ell) + ell.powf(2.0 * m * alpha) * (u_abs.powf(m + 1.0) - ell.powf(m + 1.0))
        }
    }
}

/// The primitive driving the De Giorgi energy estimate at level k:
/// v = (m+1)/m · ∫_{k^m}^{|u|^m} (y − k^m)² y^{1/m} dy for |u| > k, else 0.
/// Evaluated through the exact polynomial antiderivative in y.
pub fn degiorgi_v(u_abs: f64, k: f64, m: f64) -> f64 {
    if !(u_abs > k) {
        return 0.0;
    }
    let km = k.powf(m);
    let q = 1.0 / m;
    let primitive = |y: f64| -> f64 {
        y.powf(q + 3.0) / (q + 3.0) - 2.0 * km * y.powf(q + 2.0) / (q + 2.0)
            + km * km * y.powf(q + 1.0) / (q + 1.0)
    };
    (m + 1.0) / m * (primitive(u_abs.powf(m)) - primitive(km))
}

/// The two-sided sandwich for [`degiorgi_v`]:
/// (m+1)/(3m+1)·(|u|^m − k^m)₊^{3+1/m} ≤ v ≤ (m+1)/(3m)·|u|·(|u|^m − k^m)₊³.
pub fn degiorgi_v_bounds(u_abs: f64, k: f64, m: f64) -> (f64, f64) {
    let gap = (u_abs.powf(m) - k.powf(m)).max(0.0);
    let lower = (m + 1.0) / (3.0 * m + 1.0) * gap.powf(3.0 + 1.0 / m);
    let upper = (m + 1.0) / (3.0 * m) * u_abs * gap.powi(3);
    (lower, upper)
}

/// Empirical constants for the three pointwise power inequalities, sampled
/// over random vector pairs and point families.
struct PowerConstants {
    /// Two-sided comparison between |⟦b⟧^α − ⟦a⟧^α| and (|a|+|b|)^{α−1}|b−a|.
    two_sided: f64,
    /// |b − a|^α ≤ c·|⟦b⟧^α − ⟦a⟧^α| (requires α ≥ 1).
    difference: Option<f64>,
    /// Quasi-minimality of power means: family mean vs. best constant.
    quasi_min: Option<f64>,
}

/// Minimizes the convex map b ↦ (1/M)Σ|w_i − b|^p by golden-section search.
fn convex_min(w: &[f64], p: f64) -> f64 {
    let objective = |b: f64| -> f64 {
        w.iter().map(|&x| (x - b).abs().powf(p)).sum::<f64>() / w.len() as f64
    };
    let (mut lo, mut hi) = w
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
    if lo == hi {
        return objective(lo);
    }
    let inv_phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (objective(c), objective(d));
    for _ in 0..GOLDEN_ITERS {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = objective(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = objective(d);
        }
    }
    objective(0.5 * (lo + hi))
}

/// Runs the three power-inequality samplers once at the given sample count.
fn sample_constants(alpha: f64, p: f64, samples: usize, rng: &mut ChaCha8Rng) -> PowerConstants {
    let mut two_sided: f64 = 0.0;
    let mut difference: f64 = 0.0;
    // Degenerate pairs (a ≈ b) make both sides vanish together; skip them
    // below this scale instead of dividing noise by noise.
    const DEGENERATE: f64 = 1e-9;

    for _ in 0..samples {
        let a: Vec<f64> = (0..SAMPLE_DIM).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..SAMPLE_DIM).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| y - x).collect();
        let pow_gap: Vec<f64> = vpower(&a, alpha)
            .iter()
            .zip(vpower(&b, alpha))
            .map(|(x, y)| y - x)
            .collect();
        let lhs = norm(&pow_gap);
        let mid = (norm(&a) + norm(&b)).powf(alpha - 1.0) * norm(&diff);
        if lhs > DEGENERATE && mid > DEGENERATE {
            two_sided = two_sided.max(lhs / mid).max(mid / lhs);
        }
        if alpha >= 1.0 && lhs > DEGENERATE {
            difference = difference.max(norm(&diff).powf(alpha) / lhs);
        }
    }

    let quasi_min = if p >= 1.0 && alpha >= 1.0 / p {
        let mut worst: f64 = 0.0;
        let families = (samples / 64).max(8);
        for _ in 0..families {
            let values: Vec<f64> = (0..48).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let subset = &values[..12];
            let subset_mean = subset.iter().sum::<f64>() / subset.len() as f64;
            let powered: Vec<f64> = values.iter().map(|&u| vpower_scalar(u, alpha)).collect();
            let anchored = vpower_scalar(subset_mean, alpha);
            let lhs = powered.iter().map(|&w| (w - anchored).abs().powf(p)).sum::<f64>()
                / powered.len() as f64;
            let best = convex_min(&powered, p);
            let measure_ratio = values.len() as f64 / subset.len() as f64;
            if best > 1e-14 {
                worst = worst.max(lhs / (measure_ratio * best));
            }
        }
        Some(worst)
    } else {
        None
    };

    PowerConstants {
        two_sided,
        difference: (alpha >= 1.0).then_some(difference),
        quasi_min,
    }
}

/// Samples the three power inequalities over random data and reports the
/// largest empirical constant each needs, together with the drift between
/// the full sample and a tenth of it (a stability diagnostic: a constant
/// that keeps growing with the sample size would betray a false inequality).
pub fn check_power_inequalities(alpha: f64, p: f64, samples: usize, seed: u64) -> Result<Report> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("power must be positive, got α = {alpha}")));
    }
    if samples < 100 {
        return Err(Error::Domain(format!("need at least 100 samples, got {samples}")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let full = sample_constants(alpha, p, samples, &mut rng);
    let mut rng_small = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let tenth = sample_constants(alpha, p, samples / 10, &mut rng_small);

    let mut params = Map::new();
    put(&mut params, "alpha", alpha);
    put(&mut params, "p", p);
    put(&mut params, "samples", samples as f64);
    put(&mut params, "c_two_sided", full.two_sided);
    let drift = |big: f64, small: f64| -> f64 {
        if big > 0.0 {
            (big - small).abs() / big
        } else {
            0.0
        }
    };
    put(&mut params, "drift_two_sided", drift(full.two_sided, tenth.two_sided));

    let mut best = full.two_sided;
    let mut branch = "two-sided-comparison";
    if let (Some(c), Some(c_small)) = (full.difference, tenth.difference) {
        put(&mut params, "c_difference", c);
        put(&mut params, "drift_difference", drift(c, c_small));
        if c > best {
            best = c;
            branch = "difference-dominated";
        }
    }
    if let (Some(c), Some(c_small)) = (full.quasi_min, tenth.quasi_min) {
        put(&mut params, "c_quasi_minimizer", c);
        put(&mut params, "drift_quasi_minimizer", drift(c, c_small));
        if c > best {
            best = c;
            branch = "quasi-minimizer";
        }
    }
    put_str(&mut params, "constants_convention", "largest empirical c over the sample");

    Ok(Report::from_sides(
        "power-inequalities",
        "signed-power-comparisons",
        params,
        best,
        1.0,
        branch,
        Some(seed),
        0.0,
    ))
}
