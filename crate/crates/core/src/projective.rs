//! Projective maps `x ↦ t·x / (1 − v(x))`, `t > 0`, which send every line
//! through the origin to itself with its orientation kept, and the image
//! bodies they induce.
//!
//! For a body `K` and a map `(t, v)` the image body `T` has gauge
//! `F_T = t·F_K + v`. Its unit ball is the preimage of `K` under the map (the
//! image of `K` under [`ProjectiveMap::inverse`]), and its polar body is the
//! positive homothet `T° = t·K° + v`. Conjugate momenta therefore transform
//! affinely, `u*_T = t·u*_K + v`, which is what keeps the reflection law
//! unchanged.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauge::{EllipsoidSupport, Gauge, GaugeBody};
use crate::linalg::{pairing, Covector, Vector};
use crate::roots::{bisect, newton_polish};

/// The pair `(t, v)` of the map `x ↦ t·x / (1 − v(x))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectiveMap {
    pub t: f64,
    pub v: Covector,
}

/// Outcome of [`ProjectiveMap::check_validity`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Validity {
    pub valid: bool,
    /// `t − F_{K°}(−v)`; positive exactly when the image body is bounded.
    pub margin: f64,
}

impl ProjectiveMap {
    pub fn new(t: f64, v: Covector) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "map factor t = {t} must be positive"
            )));
        }
        if !v.is_finite() {
            return Err(Error::InvalidParameter(
                "map covector v must be finite".into(),
            ));
        }
        Ok(Self { t, v })
    }

    pub(crate) fn new_unchecked(t: f64, v: Covector) -> Self {
        Self { t, v }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            t: 1.0,
            v: Covector::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.v.dim()
    }

    /// `t·x / (1 − v(x))`.
    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        let denominator = 1.0 - pairing(&self.v, x);
        if !(denominator > 0.0) {
            return Err(Error::OutsideChart { denominator });
        }
        Ok(x.scale(self.t / denominator))
    }

    /// `y / (t + v(y))`, the algebraic inverse of [`apply`](Self::apply).
    pub fn inverse(&self, y: &Vector) -> Result<Vector> {
        let denominator = self.t + pairing(&self.v, y);
        if !(denominator > 0.0) {
            return Err(Error::OutsideChart { denominator });
        }
        Ok(y.scale(1.0 / denominator))
    }

    /// The dual homothety `p ↦ t·p + v`.
    pub fn momentum_transform(&self, p: &Covector) -> Covector {
        let mut q = p.scale(self.t);
        q += &self.v;
        q
    }

    /// The map `(1/t, −v/t)`, whose `apply` is this map's `inverse`.
    pub fn reciprocal(&self) -> Self {
        Self {
            t: 1.0 / self.t,
            v: self.v.scale(-1.0 / self.t),
        }
    }

    /// The single map equivalent to imaging by `self` and then by `outer`:
    /// `(t₁t₂, t₂v₁ + v₂)`.
    pub fn then(&self, outer: &Self) -> Self {
        Self {
            t: self.t * outer.t,
            v: self.v.scale(outer.t).axpy(1.0, &outer.v),
        }
    }

    /// Whether the image of `base` is a bounded body containing the origin.
    pub fn check_validity<B: GaugeBody + ?Sized>(&self, base: &B) -> Validity {
        let margin = if self.v.is_zero() {
            self.t
        } else {
            self.t - base.dual_gauge(&-&self.v)
        };
        Validity {
            valid: margin > 0.0,
            margin,
        }
    }
}

/// The body with gauge `t·F_K + v` for a base body `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBody<B> {
    base: B,
    map: ProjectiveMap,
    support: Option<EllipsoidSupport>,
}

/// Builds the image of `base` under `map`, rejecting maps whose image would
/// be unbounded or miss the origin.
pub fn image_body<B: GaugeBody>(base: B, map: ProjectiveMap) -> Result<ImageBody<B>> {
    ImageBody::new(base, map)
}

impl<B: GaugeBody> ImageBody<B> {
    pub fn new(base: B, map: ProjectiveMap) -> Result<Self> {
        if map.dim() != base.dim() {
            return Err(Error::InvalidDimension(format!(
                "map acts on dimension {}, body has dimension {}",
                map.dim(),
                base.dim()
            )));
        }
        let validity = map.check_validity(&base);
        if !validity.valid {
            return Err(Error::DegenerateImage {
                margin: validity.margin,
            });
        }
        let support = base.ellipsoid_support();
        Ok(Self { base, map, support })
    }

    pub fn base(&self) -> &B {
        &self.base
    }

    pub fn map(&self) -> &ProjectiveMap {
        &self.map
    }

    /// Solves `F_{K°}(p − s·v) = s·t` for the unique `s > 0`, which is the
    /// gauge of `t·K° + v` at `p`.
    fn homothet_gauge(&self, p: &Covector) -> f64 {
        let (t, v) = (self.map.t, &self.map.v);
        if v.is_zero() {
            return self.base.dual_gauge(p) / t;
        }
        if let Some(sup) = &self.support {
            // m(q) + sqrt(qᵀMq) = s·t with q = p − s·v, squared into
            // A·s² − 2B·s − C = 0 with A > 0, C > 0.
            let mv = pairing(v, &sup.center);
            let mp = pairing(p, &sup.center);
            let tm = t + mv;
            let a = tm * tm - sup.quad(v, v);
            let b = tm * mp - sup.quad(p, v);
            let c = sup.quad(p, p) - mp * mp;
            let disc = (b * b + a * c).sqrt();
            return if b >= 0.0 {
                (b + disc) / a
            } else {
                c / (disc - b)
            };
        }
        let phi = |s: f64| self.base.dual_gauge(&p.axpy(-s, v)) - s * t;
        let mut hi = 2.0 * self.base.dual_gauge(p) / t;
        let mut tries = 0;
        while !(phi(hi) < 0.0) {
            hi *= 2.0;
            tries += 1;
            if tries > 200 || !hi.is_finite() {
                return f64::NAN;
            }
        }
        let s = bisect(phi, 0.0, hi, 1e-15 * hi);
        let dphi = |s: f64| -pairing(v, &self.base.dual_gauge_grad(&p.axpy(-s, v))) - t;
        newton_polish(phi, dphi, s, 0.0, hi)
    }
}

impl<B: GaugeBody> Gauge for ImageBody<B> {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn gauge(&self, x: &Vector) -> f64 {
        self.map.t * self.base.gauge(x) + pairing(&self.map.v, x)
    }
    fn gauge_grad(&self, x: &Vector) -> Covector {
        self.map.momentum_transform(&self.base.gauge_grad(x))
    }
}

impl<B: GaugeBody> GaugeBody for ImageBody<B> {
    fn dual_gauge(&self, p: &Covector) -> f64 {
        self.homothet_gauge(p)
    }

    fn dual_gauge_grad(&self, p: &Covector) -> Vector {
        // implicit differentiation of F_{K°}(p − s·v) = s·t
        let s = self.homothet_gauge(p);
        let w = self.base.dual_gauge_grad(&p.axpy(-s, &self.map.v));
        w.scale(1.0 / (self.map.t + pairing(&self.map.v, &w)))
    }
}
