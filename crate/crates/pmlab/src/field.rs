//! Radial space-time fields: the common evaluation interface shared by the
//! exact solution families, solver trajectories, and synthetic test fields.
//!
//! Everything in this laboratory is radially symmetric about the spatial
//! origin, so a field is a function of (s, t) with s = |x|. Vector-valued
//! quantities (the gradient of the power ⟦u⟧^m, the forcing) are represented
//! by their radial component; their Euclidean norm is the absolute value.

use crate::solutions::vpower_scalar;

/// Validity region of a field: radii in `[s_min, s_max]`, times in
/// `[t_min, t_max]`. `singular_at_origin` warns that values blow up as
/// s → 0, so sup-norms over regions containing the origin are unbounded
/// while integrals may or may not converge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub s_min: f64,
    pub s_max: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub singular_at_origin: bool,
}

impl Domain {
    /// Whole space, all times, no singularity.
    pub const UNRESTRICTED: Domain = Domain {
        s_min: 0.0,
        s_max: f64::INFINITY,
        t_min: f64::NEG_INFINITY,
        t_max: f64::INFINITY,
        singular_at_origin: false,
    };

    /// True if the radial interval `[s_lo, s_hi] × [t_lo, t_hi]` fits inside.
    pub fn contains(&self, s_lo: f64, s_hi: f64, t_lo: f64, t_hi: f64) -> bool {
        s_lo >= self.s_min && s_hi <= self.s_max && t_lo >= self.t_min && t_hi <= self.t_max
    }
}

/// A scalar field u(|x|, t) together with the radial derivative of its
/// m-power. Implementations must be cheap to evaluate and thread-safe; the
/// quadrature engine calls them millions of times.
///
/// Contract at the edges: implementations may return `f64::INFINITY` at a
/// singular axis (s = 0) and must return 0 beyond an extinction time if they
/// have one. Callers keep quadrature nodes inside [`RadialField::domain`].
pub trait RadialField: Sync {
    /// Spatial dimension N ≥ 2.
    fn dim(&self) -> u32;

    /// Diffusion power m > 0.
    fn m(&self) -> f64;

    /// u at radius s ≥ 0, time t.
    fn value(&self, s: f64, t: f64) -> f64;

    /// Radial derivative ∂_s ⟦u⟧^m (signed).
    fn dr_um(&self, s: f64, t: f64) -> f64;

    /// Validity region.
    fn domain(&self) -> Domain;

    /// The signed power ⟦u⟧^m = |u|^{m−1} u.
    fn um(&self, s: f64, t: f64) -> f64 {
        vpower_scalar(self.value(s, t), self.m())
    }

    /// |∇⟦u⟧^m| — for radial fields, the absolute radial derivative.
    fn grad_um_mag(&self, s: f64, t: f64) -> f64 {
        self.dr_um(s, t).abs()
    }
}

/// Radial component of a divergence-form forcing F; |F| = |f_r|.
pub trait RadialForcing: Sync {
    fn f_r(&self, s: f64, t: f64) -> f64;

    /// True when the forcing is identically zero, letting checkers skip
    /// quadrature of terms that vanish.
    fn is_zero(&self) -> bool {
        false
    }
}

/// The zero forcing.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoForcing;

impl RadialForcing for NoForcing {
    fn f_r(&self, _s: f64, _t: f64) -> f64 {
        0.0
    }

    fn is_zero(&self) -> bool {
        true
    }
}

/// Constant-in-space-and-time field u ≡ c ≥ 0.
#[derive(Debug, Clone, Copy)]
pub struct ConstantField {
    pub n: u32,
    pub m: f64,
    pub c: f64,
}

impl RadialField for ConstantField {
    fn dim(&self) -> u32 {
        self.n
    }

    fn m(&self) -> f64 {
        self.m
    }

    fn value(&self, _s: f64, _t: f64) -> f64 {
        self.c
    }

    fn dr_um(&self, _s: f64, _t: f64) -> f64 {
        0.0
    }

    fn domain(&self) -> Domain {
        Domain::UNRESTRICTED
    }
}

/// Field defined by closures, for synthetic test profiles. `value` and
/// `dr_um` receive (s, t).
pub struct FnField {
    pub n: u32,
    pub m: f64,
    pub domain: Domain,
    pub value: Box<dyn Fn(f64, f64) -> f64 + Sync + Send>,
    pub dr_um: Box<dyn Fn(f64, f64) -> f64 + Sync + Send>,
}

impl FnField {
    /// Builds a field from a value closure alone, with ∂_s u^m supplied by
    /// central finite differences of the m-power (adequate for smooth test
    /// profiles away from s = 0).
    pub fn from_value(
        n: u32,
        m: f64,
        domain: Domain,
        value: impl Fn(f64, f64) -> f64 + Sync + Send + Clone + 'static,
    ) -> Self {
        let v = value.clone();
        let dr = move |s: f64, t: f64| {
            let h = 1e-6 * s.abs().max(1e-3);
            let up = vpower_scalar(v(s + h, t), m);
            let dn = vpower_scalar(v(s - h, t), m);
            (up - dn) / (2.0 * h)
        };
        Self { n, m, domain, value: Box::new(value), dr_um: Box::new(dr) }
    }
}

impl RadialField for FnField {
    fn dim(&self) -> u32 {
        self.n
    }

    fn m(&self) -> f64 {
        self.m
    }

    fn value(&self, s: f64, t: f64) -> f64 {
        (self.value)(s, t)
    }

    fn dr_um(&self, s: f64, t: f64) -> f64 {
        (self.dr_um)(s, t)
    }

    fn domain(&self) -> Domain {
        self.domain
    }
}

/// Forcing defined by a closure on (s, t).
pub struct FnForcing {
    pub f_r: Box<dyn Fn(f64, f64) -> f64 + Sync + Send>,
}

impl RadialForcing for FnForcing {
    fn f_r(&self, s: f64, t: f64) -> f64 {
        (self.f_r)(s, t)
    }
}

/// Vector-valued field U = (u₁, u₂) with two radial scalar components,
/// exposed through the scalar interface via the Euclidean norm: `value` is
/// |U| and `dr_um`/`grad_um_mag` give |∂_s ⟦U⟧^m| with the vector power
/// ⟦U⟧^m = |U|^{m−1} U. This is the diagonal-system case: each component
/// diffuses through the same scalar law, coupled only through the modulus.
///
/// The component radial derivatives are recovered from the scalar powers:
/// ∂_s uᵢ = ∂_s⟦uᵢ⟧^m / (m |uᵢ|^{m−1}), exact wherever uᵢ ≠ 0; a vanished
/// component (beyond its extinction time) contributes zero.
pub struct DiagonalPairField<A: RadialField, B: RadialField> {
    a: A,
    b: B,
}

impl<A: RadialField, B: RadialField> DiagonalPairField<A, B> {
    /// Pairs two components sharing dimension and diffusion power.
    ///
    /// # Panics
    /// If the components disagree on `dim` or `m`.
    pub fn new(a: A, b: B) -> Self {
        assert_eq!(a.dim(), b.dim(), "pair components must share the spatial dimension");
        assert!(
            (a.m() - b.m()).abs() < 1e-15,
            "pair components must share the diffusion power, got {} vs {}",
            a.m(),
            b.m()
        );
        Self { a, b }
    }

    fn component_slope(f: &dyn RadialField, s: f64, t: f64) -> (f64, f64) {
        let u = f.value(s, t);
        if u == 0.0 {
            return (0.0, 0.0);
        }
        (u, f.dr_um(s, t) / (f.m() * u.abs().powf(f.m() - 1.0)))
    }
}

impl<A: RadialField, B: RadialField> RadialField for DiagonalPairField<A, B> {
    fn dim(&self) -> u32 {
        self.a.dim()
    }

    fn m(&self) -> f64 {
        self.a.m()
    }

    fn value(&self, s: f64, t: f64) -> f64 {
        self.a.value(s, t).hypot(self.b.value(s, t))
    }

    fn dr_um(&self, s: f64, t: f64) -> f64 {
        // Never a signed radial derivative for a vector field; callers use
        // it only through `grad_um_mag`, so return the norm directly.
        self.grad_um_mag(s, t)
    }

    fn grad_um_mag(&self, s: f64, t: f64) -> f64 {
        let m = self.m();
        let (u1, du1) = Self::component_slope(&self.a, s, t);
        let (u2, du2) = Self::component_slope(&self.b, s, t);
        let w = u1.hypot(u2);
        if w == 0.0 {
            return 0.0;
        }
        // ∂_s [w^{m−1} uᵢ] = (m−1) w^{m−2} w' uᵢ + w^{m−1} u'ᵢ with
        // w' = (u₁u'₁ + u₂u'₂)/w.
        let wp = (u1 * du1 + u2 * du2) / w;
        let c1 = (m - 1.0) * w.powf(m - 2.0) * wp * u1 + w.powf(m - 1.0) * du1;
        let c2 = (m - 1.0) * w.powf(m - 2.0) * wp * u2 + w.powf(m - 1.0) * du2;
        c1.hypot(c2)
    }

    fn domain(&self) -> Domain {
        let (da, db) = (self.a.domain(), self.b.domain());
        Domain {
            s_min: da.s_min.max(db.s_min),
            s_max: da.s_max.min(db.s_max),
            t_min: da.t_min.max(db.t_min),
            t_max: da.t_max.min(db.t_max),
            singular_at_origin: da.singular_at_origin || db.singular_at_origin,
        }
    }
}
