//! Gauges (Minkowski functionals) of smooth strictly convex bodies, their
//! polar duals, and the velocity ↔ momentum correspondence.
//!
//! A body `K` with the origin in its interior defines the possibly
//! non-symmetric norm `F_K(x) = inf{s > 0 : x/s ∈ K}`. Its polar body `K°`
//! defines the dual norm on covectors, which coincides with the support
//! function of `K`. For a unit velocity `u ∈ ∂K` the conjugate momentum is the
//! gradient `∇F_K(u)`: it pairs to one with `u` and lies on `∂K°`.

use serde::{Deserialize, Serialize};

use crate::error::{numeric_failure, Error, Result};
use crate::linalg::{pairing, Covector, Vector};
use crate::projective::{ImageBody, ProjectiveMap};

/// Tolerance for "unit momentum" and "unit velocity" checks.
pub const TOL_UNIT: f64 = 1e-8;

/// Primal oracle of a body: the gauge and its gradient.
pub trait Gauge {
    fn dim(&self) -> usize;

    /// The Minkowski functional `F_K(x)`.
    fn gauge(&self, x: &Vector) -> f64;

    /// `∇F_K(x)` for `x ≠ 0`; homogeneous of degree zero.
    fn gauge_grad(&self, x: &Vector) -> Covector;

    /// Conjugate momentum of the velocity `u`; depends only on the ray of `u`.
    fn momentum(&self, u: &Vector) -> Result<Covector> {
        if u.is_zero() || !u.is_finite() {
            return Err(Error::DegenerateDirection);
        }
        Ok(self.gauge_grad(u))
    }
}

/// A body with dual-side evaluation: the gauge of the polar body and its
/// gradient.
pub trait GaugeBody: Gauge {
    /// `F_{K°}(p) = sup { p(x) : x ∈ K }`.
    fn dual_gauge(&self, p: &Covector) -> f64;

    /// `∇F_{K°}(p)`: the point of `∂K` where `p` attains its maximum over `K`.
    fn dual_gauge_grad(&self, p: &Covector) -> Vector;

    /// Closed-form support description when `K` is an ellipsoid.
    fn ellipsoid_support(&self) -> Option<EllipsoidSupport> {
        None
    }

    /// The unit velocity whose conjugate momentum is `p`.
    fn velocity_from_momentum(&self, p: &Covector) -> Result<Vector> {
        let d = self.dual_gauge(p);
        if !((d - 1.0).abs() <= TOL_UNIT) {
            return Err(Error::NotUnitMomentum { dual_gauge: d });
        }
        Ok(self.dual_gauge_grad(p))
    }
}

impl<B: Gauge + ?Sized> Gauge for &B {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn gauge(&self, x: &Vector) -> f64 {
        (**self).gauge(x)
    }
    fn gauge_grad(&self, x: &Vector) -> Covector {
        (**self).gauge_grad(x)
    }
}

impl<B: GaugeBody + ?Sized> GaugeBody for &B {
    fn dual_gauge(&self, p: &Covector) -> f64 {
        (**self).dual_gauge(p)
    }
    fn dual_gauge_grad(&self, p: &Covector) -> Vector {
        (**self).dual_gauge_grad(p)
    }
    fn ellipsoid_support(&self) -> Option<EllipsoidSupport> {
        (**self).ellipsoid_support()
    }
}

/// Support function of an ellipsoid `{center + M^{1/2} w : |w| ≤ 1}`:
/// `h(p) = p(center) + sqrt(pᵀ M p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidSupport {
    pub center: Vector,
    /// Symmetric positive definite shape matrix, row-major.
    pub shape: Vec<Vec<f64>>,
}

impl EllipsoidSupport {
    pub fn quad(&self, p: &Covector, q: &Covector) -> f64 {
        self.shape
            .iter()
            .zip(p.iter())
            .map(|(row, pi)| pi * row.iter().zip(q.iter()).map(|(m, qj)| m * qj).sum::<f64>())
            .sum()
    }

    pub fn support(&self, p: &Covector) -> f64 {
        pairing(p, &self.center) + self.quad(p, p).sqrt()
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::InvalidDimension(format!(
            "dimension {dim} is below 2"
        )));
    }
    Ok(())
}

/// The Euclidean unit ball; self-dual under the standard pairing.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanBall {
    dim: usize,
}

impl EuclideanBall {
    pub fn new(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { dim })
    }
}

impl Gauge for EuclideanBall {
    fn dim(&self) -> usize {
        self.dim
    }
    fn gauge(&self, x: &Vector) -> f64 {
        x.norm()
    }
    fn gauge_grad(&self, x: &Vector) -> Covector {
        x.flat().scale(1.0 / x.norm())
    }
}

impl GaugeBody for EuclideanBall {
    fn dual_gauge(&self, p: &Covector) -> f64 {
        p.norm()
    }
    fn dual_gauge_grad(&self, p: &Covector) -> Vector {
        p.sharp().scale(1.0 / p.norm())
    }
    fn ellipsoid_support(&self) -> Option<EllipsoidSupport> {
        Some(EllipsoidSupport {
            center: Vector::zeros(self.dim),
            shape: identity(self.dim),
        })
    }
}

/// Axis-aligned ellipsoid centred at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredEllipsoid {
    semi_axes: Vec<f64>,
}

impl CenteredEllipsoid {
    pub fn new(semi_axes: Vec<f64>) -> Result<Self> {
        check_dim(semi_axes.len())?;
        if let Some(a) = semi_axes.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "semi-axis {a} is not positive"
            )));
        }
        Ok(Self { semi_axes })
    }

    pub fn semi_axes(&self) -> &[f64] {
        &self.semi_axes
    }
}

impl Gauge for CenteredEllipsoid {
    fn dim(&self) -> usize {
        self.semi_axes.len()
    }
    fn gauge(&self, x: &Vector) -> f64 {
        x.iter()
            .zip(&self.semi_axes)
            .map(|(xi, ai)| (xi / ai).powi(2))
            .sum::<f64>()
            .sqrt()
    }
    fn gauge_grad(&self, x: &Vector) -> Covector {
        let g = self.gauge(x);
        x.iter()
            .zip(&self.semi_axes)
            .map(|(xi, ai)| xi / (ai * ai * g))
            .collect::<Vec<_>>()
            .into()
    }
}

impl GaugeBody for CenteredEllipsoid {
    fn dual_gauge(&self, p: &Covector) -> f64 {
        p.iter()
            .zip(&self.semi_axes)
            .map(|(pi, ai)| (ai * pi).powi(2))
            .sum::<f64>()
            .sqrt()
    }
    fn dual_gauge_grad(&self, p: &Covector) -> Vector {
        let h = self.dual_gauge(p);
        p.iter()
            .zip(&self.semi_axes)
            .map(|(pi, ai)| ai * ai * pi / h)
            .collect::<Vec<_>>()
            .into()
    }
    fn ellipsoid_support(&self) -> Option<EllipsoidSupport> {
        let n = self.dim();
        let mut shape = vec![vec![0.0; n]; n];
        for (i, a) in self.semi_axes.iter().enumerate() {
            shape[i][i] = a * a;
        }
        Some(EllipsoidSupport {
            center: Vector::zeros(n),
            shape,
        })
    }
}

/// Ellipsoid of rotation with one focus at the origin.
///
/// With major semi-axis `a`, focal distance `c` and unit `axis` pointing from
/// the origin towards the centre, the gauge is `(|x| − ε·⟨axis, x⟩)/ℓ` where
/// `ε = c/a` and `ℓ = (a² − c²)/a` is the semi-latus rectum.
#[derive(Debug, Clone, PartialEq)]
pub struct FocalEllipsoid {
    axis: Vector,
    a: f64,
    c: f64,
    eccentricity: f64,
    latus: f64,
    minor_sq: f64,
}

impl FocalEllipsoid {
    pub fn new(axis: Vector, a: f64, c: f64) -> Result<Self> {
        check_dim(axis.dim())?;
        if !axis.is_finite() || (axis.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "focal axis must have unit Euclidean length, got {}",
                axis.norm()
            )));
        }
        if !(a.is_finite() && c.is_finite() && c >= 0.0 && c < a) {
            return Err(Error::InvalidParameter(format!(
                "focal ellipsoid needs 0 <= c < a, got a = {a}, c = {c}"
            )));
        }
        let axis = axis.normalized();
        Ok(Self {
            axis,
            a,
            c,
            eccentricity: c / a,
            latus: (a * a - c * c) / a,
            minor_sq: a * a - c * c,
        })
    }

    pub fn axis(&self) -> &Vector {
        &self.axis
    }
    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn eccentricity(&self) -> f64 {
        self.eccentricity
    }

    /// The second focus, `2c·axis`.
    pub fn second_focus(&self) -> Vector {
        self.axis.scale(2.0 * self.c)
    }

    /// The same body written as a projective image of the Euclidean ball:
    /// gauge `t·|x| + v(x)` with `t = 1/ℓ`, `v = −ε·axis/ℓ`.
    pub fn as_ball_image(&self) -> ProjectiveMap {
        ProjectiveMap::new_unchecked(
            1.0 / self.latus,
            self.axis.flat().scale(-self.eccentricity / self.latus),
        )
    }
}

impl Gauge for FocalEllipsoid {
    fn dim(&self) -> usize {
        self.axis.dim()
    }
    fn gauge(&self, x: &Vector) -> f64 {
        (x.norm() - self.eccentricity * x.dot(&self.axis)) / self.latus
    }
    fn gauge_grad(&self, x: &Vector) -> Covector {
        let r = x.norm();
        x.iter()
            .zip(self.axis.iter())
            .map(|(xi, ei)| (xi / r - self.eccentricity * ei) / self.latus)
            .collect::<Vec<_>>()
            .into()
    }
}

impl GaugeBody for FocalEllipsoid {
    fn dual_gauge(&self, p: &Covector) -> f64 {
        let pe = pairing(p, &self.axis);
        self.c * pe + (self.minor_sq * p.dot(p) + self.c * self.c * pe * pe).sqrt()
    }
    fn dual_gauge_grad(&self, p: &Covector) -> Vector {
        let pe = pairing(p, &self.axis);
        let root = (self.minor_sq * p.dot(p) + self.c * self.c * pe * pe).sqrt();
        p.iter()
            .zip(self.axis.iter())
            .map(|(pi, ei)| self.c * ei + (self.minor_sq * pi + self.c * self.c * pe * ei) / root)
            .collect::<Vec<_>>()
            .into()
    }
    fn ellipsoid_support(&self) -> Option<EllipsoidSupport> {
        let n = self.dim();
        let shape = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let id = if i == j { self.minor_sq } else { 0.0 };
                        id + self.c * self.c * self.axis[i] * self.axis[j]
                    })
                    .collect()
            })
            .collect();
        Some(EllipsoidSupport {
            center: self.axis.scale(self.c),
            shape,
        })
    }
}

/// The point reflection `−K`, with gauge `x ↦ F_K(−x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reversed<B>(pub B);

impl<B: Gauge> Gauge for Reversed<B> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn gauge(&self, x: &Vector) -> f64 {
        self.0.gauge(&-x)
    }
    fn gauge_grad(&self, x: &Vector) -> Covector {
        -self.0.gauge_grad(&-x)
    }
}

impl<B: GaugeBody> GaugeBody for Reversed<B> {
    fn dual_gauge(&self, p: &Covector) -> f64 {
        self.0.dual_gauge(&-p)
    }
    fn dual_gauge_grad(&self, p: &Covector) -> Vector {
        -self.0.dual_gauge_grad(&-p)
    }
}

/// Wraps a primal-only body and evaluates the dual side by numeric
/// maximization. Numeric failures surface as `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericDual<B>(pub B);

impl<B: Gauge> Gauge for NumericDual<B> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn gauge(&self, x: &Vector) -> f64 {
        self.0.gauge(x)
    }
    fn gauge_grad(&self, x: &Vector) -> Covector {
        self.0.gauge_grad(x)
    }
}

impl<B: Gauge> GaugeBody for NumericDual<B> {
    fn dual_gauge(&self, p: &Covector) -> f64 {
        dual_gauge_numeric(&self.0, p).unwrap_or(f64::NAN)
    }
    fn dual_gauge_grad(&self, p: &Covector) -> Vector {
        match support_point_numeric(&self.0, p) {
            Ok((x, _)) => x,
            Err(_) => Vector::new(vec![f64::NAN; self.dim()]),
        }
    }
}

/// `sup { p(x) : F_K(x) = 1 }` by numeric maximization over the primal
/// oracle only.
pub fn dual_gauge_numeric<G: Gauge + ?Sized>(body: &G, p: &Covector) -> Result<f64> {
    support_point_numeric(body, p).map(|(_, h)| h)
}

/// Maximizer and maximum of `p` over the unit sphere `{F_K = 1}`.
///
/// Maximizes the degree-zero ratio `p(x)/F_K(x)` over Euclidean unit
/// directions by projected gradient ascent with Barzilai–Borwein steps and
/// Armijo backtracking, restarted from the coordinate directions, the
/// diagonals and the direction of `p` itself.
pub fn support_point_numeric<G: Gauge + ?Sized>(body: &G, p: &Covector) -> Result<(Vector, f64)> {
    let n = body.dim();
    if p.dim() != n || !p.is_finite() {
        return Err(Error::InvalidInput(
            "covector does not match the body".into(),
        ));
    }
    if p.is_zero() {
        return Err(Error::DegenerateDirection);
    }
    let ratio = |x: &Vector| pairing(p, x) / body.gauge(x);

    let mut starts: Vec<Vector> = vec![p.sharp().normalized()];
    for i in 0..n {
        starts.push(Vector::basis(n, i));
        starts.push(-Vector::basis(n, i));
    }
    if n <= 4 {
        for mask in 0..(1usize << n) {
            let d: Vec<f64> = (0..n)
                .map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 })
                .collect();
            starts.push(Vector::new(d).normalized());
        }
    }
    starts.sort_by(|a, b| ratio(b).total_cmp(&ratio(a)));
    starts.truncate(3);

    let mut best: Option<(Vector, f64, f64)> = None;
    for start in starts {
        let (x, f, res) = ascend(body, p, start);
        if best.as_ref().is_none_or(|(_, bf, _)| f > *bf) {
            best = Some((x, f, res));
        }
    }
    let (x, f, res) = best.expect("at least one start");
    if !(f > 0.0 && f.is_finite()) || res > 1e-7 * f {
        return Err(numeric_failure(
            "support maximization did not converge",
            res,
        ));
    }
    let g = body.gauge(&x);
    Ok((x.scale(1.0 / g), f))
}

/// Tangential gradient of `x ↦ p(x)/F(x)` at a unit `x` (Euler's identity
/// makes the plain gradient tangential already).
fn ratio_grad<G: Gauge + ?Sized>(body: &G, p: &Covector, x: &Vector) -> (f64, Vector) {
    let g = body.gauge(x);
    let f = pairing(p, x) / g;
    let grad = (p - &body.gauge_grad(x).scale(f)).sharp().scale(1.0 / g);
    // strip the residual radial part left by rounding
    let radial = grad.dot(x);
    (f, grad.axpy(-radial, x))
}

fn ascend<G: Gauge + ?Sized>(body: &G, p: &Covector, start: Vector) -> (Vector, f64, f64) {
    let mut x = start.normalized();
    let (mut f, mut grad) = ratio_grad(body, p, &x);
    let mut step = 1.0 / (1.0 + p.norm());
    for _ in 0..5000 {
        let gnorm = grad.norm();
        if gnorm <= 1e-14 * f.abs().max(1e-300) {
            break;
        }
        let mut eta = step;
        let mut accepted = None;
        for _ in 0..80 {
            let cand = x.axpy(eta, &grad).normalized();
            let (fc, gc) = ratio_grad(body, p, &cand);
            if fc >= f {
                accepted = Some((cand, fc, gc));
                break;
            }
            eta *= 0.5;
        }
        let Some((cand, fc, gc)) = accepted else {
            break;
        };
        let s = &cand - &x;
        let y = &grad - &gc;
        let sy = s.dot(&y);
        step = if sy > 0.0 { s.dot(&s) / sy } else { 2.0 * eta };
        if !step.is_finite() || step <= 0.0 {
            step = eta;
        }
        let stalled = fc == f && (&cand - &x).norm() == 0.0;
        x = cand;
        f = fc;
        grad = gc;
        if stalled {
            break;
        }
    }
    let res = grad.norm();
    (x, f, res)
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

/// Serializable description of a body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BodyDescriptor {
    EuclideanBall {
        dim: usize,
    },
    CenteredEllipsoid {
        semi_axes: Vec<f64>,
    },
    FocalEllipsoid {
        axis: Vec<f64>,
        a: f64,
        c: f64,
    },
    ProjectiveImage {
        base: Box<BodyDescriptor>,
        map: ProjectiveMap,
    },
}

impl BodyDescriptor {
    pub fn build(&self) -> Result<Body> {
        Body::from_descriptor(self)
    }
}

/// Any of the registered bodies.
#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Ball(EuclideanBall),
    Ellipsoid(CenteredEllipsoid),
    Focal(FocalEllipsoid),
    Image(Box<ImageBody<Body>>),
}

pub fn make_euclidean_ball(dim: usize) -> Result<Body> {
    EuclideanBall::new(dim).map(Body::Ball)
}

pub fn make_centered_ellipsoid(semi_axes: Vec<f64>) -> Result<Body> {
    CenteredEllipsoid::new(semi_axes).map(Body::Ellipsoid)
}

pub fn make_focal_ellipsoid(axis: Vector, a: f64, c: f64, dim: usize) -> Result<Body> {
    if axis.dim() != dim {
        return Err(Error::InvalidDimension(format!(
            "axis has {} coordinates, expected {dim}",
            axis.dim()
        )));
    }
    FocalEllipsoid::new(axis, a, c).map(Body::Focal)
}

impl Body {
    pub fn from_descriptor(desc: &BodyDescriptor) -> Result<Self> {
        match desc {
            BodyDescriptor::EuclideanBall { dim } => make_euclidean_ball(*dim),
            BodyDescriptor::CenteredEllipsoid { semi_axes } => {
                make_centered_ellipsoid(semi_axes.clone())
            }
            BodyDescriptor::FocalEllipsoid { axis, a, c } => {
                make_focal_ellipsoid(Vector::new(axis.clone()), *a, *c, axis.len())
            }
            BodyDescriptor::ProjectiveImage { base, map } => {
                let base = Body::from_descriptor(base)?;
                let map = ProjectiveMap::new(map.t, map.v.clone())?;
                Ok(Body::Image(Box::new(ImageBody::new(base, map)?)))
            }
        }
    }

    pub fn descriptor(&self) -> BodyDescriptor {
        match self {
            Body::Ball(b) => BodyDescriptor::EuclideanBall { dim: b.dim },
            Body::Ellipsoid(e) => BodyDescriptor::CenteredEllipsoid {
                semi_axes: e.semi_axes.clone(),
            },
            Body::Focal(f) => BodyDescriptor::FocalEllipsoid {
                axis: f.axis.coords().to_vec(),
                a: f.a,
                c: f.c,
            },
            Body::Image(img) => BodyDescriptor::ProjectiveImage {
                base: Box::new(img.base().descriptor()),
                map: img.map().clone(),
            },
        }
    }

    /// Image of this body under `map`, validated eagerly.
    pub fn image(self, map: ProjectiveMap) -> Result<Body> {
        Ok(Body::Image(Box::new(ImageBody::new(self, map)?)))
    }
}

macro_rules! dispatch {
    ($self:ident, $b:ident => $e:expr) => {
        match $self {
            Body::Ball($b) => $e,
            Body::Ellipsoid($b) => $e,
            Body::Focal($b) => $e,
            Body::Image($b) => $e,
        }
    };
}

impl Gauge for Body {
    fn dim(&self) -> usize {
        dispatch!(self, b => b.dim())
    }
    fn gauge(&self, x: &Vector) -> f64 {
        dispatch!(self, b => b.gauge(x))
    }
    fn gauge_grad(&self, x: &Vector) -> Covector {
        dispatch!(self, b => b.gauge_grad(x))
    }
}

impl GaugeBody for Body {
    fn dual_gauge(&self, p: &Covector) -> f64 {
        dispatch!(self, b => b.dual_gauge(p))
    }
    fn dual_gauge_grad(&self, p: &Covector) -> Vector {
        dispatch!(self, b => b.dual_gauge_grad(p))
    }
    fn ellipsoid_support(&self) -> Option<EllipsoidSupport> {
        dispatch!(self, b => b.ellipsoid_support())
    }
}
