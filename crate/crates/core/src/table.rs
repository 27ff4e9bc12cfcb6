//! Billiard tables as regular level sets `{G = 0}` with `G < 0` inside.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Covector, Vector};
use crate::roots::{bisect, newton_polish};

/// Points with `|G| ≤ TOL_SURFACE` count as lying on the wall.
pub const TOL_SURFACE: f64 = 1e-9;

/// Residual required of intersection points.
pub const TOL_HIT: f64 = 1e-12;

/// A smooth billiard table.
pub trait Table {
    fn dim(&self) -> usize;

    /// The level function `G`.
    fn level(&self, x: &Vector) -> f64;

    fn level_grad(&self, x: &Vector) -> Covector;

    /// Euclidean radius of a ball about the origin enclosing the table.
    fn bounding_radius(&self) -> f64;

    /// First wall hit along the ray `q + s·d/|d|`; see [`intersect_ray_generic`].
    fn intersect_ray(&self, q: &Vector, d: &Vector) -> Result<(Vector, f64)> {
        intersect_ray_generic(self, q, d)
    }

    fn contains(&self, x: &Vector) -> bool {
        self.level(x) < 0.0
    }
}

fn check_ray<T: Table + ?Sized>(table: &T, q: &Vector, d: &Vector) -> Result<Vector> {
    if d.is_zero() || !d.is_finite() {
        return Err(Error::DegenerateDirection);
    }
    if q.dim() != table.dim() || d.dim() != table.dim() {
        return Err(Error::InvalidDimension(
            "ray does not match the table dimension".into(),
        ));
    }
    let g = table.level(q);
    if !(g <= TOL_SURFACE) {
        return Err(Error::InvalidInput(format!(
            "ray origin is outside the table (G = {g:e})"
        )));
    }
    Ok(d.normalized())
}

/// Minimum ray parameter accepted as a hit, so that a ray leaving the wall
/// does not re-detect its own departure point.
fn s_min<T: Table + ?Sized>(table: &T) -> f64 {
    1e-9 * table.bounding_radius()
}

/// Generic ray intersection: march in steps of `bounding_radius / 64` until
/// `G` turns positive, bisect the sign change to a `1e-14`-relative bracket,
/// then polish once with Newton along the ray.
pub fn intersect_ray_generic<T: Table + ?Sized>(
    table: &T,
    q: &Vector,
    d: &Vector,
) -> Result<(Vector, f64)> {
    let dir = check_ray(table, q, d)?;
    let radius = table.bounding_radius();
    let along = |s: f64| table.level(&q.axpy(s, &dir));
    let h = radius / 64.0;
    let limit = q.norm() + radius;
    let mut lo = s_min(table);
    if along(lo) > 0.0 {
        // still outside near the departure point: the ray heads out through
        // the wall it sits on
        return Err(Error::RayEscapes);
    }
    let mut hi = lo;
    loop {
        hi += h;
        if hi > limit + h {
            return Err(Error::RayEscapes);
        }
        if along(hi) > 0.0 {
            break;
        }
        lo = hi;
    }
    let s = bisect(along, lo, hi, 1e-14 * hi.max(radius));
    let dalong = |s: f64| {
        let x = q.axpy(s, &dir);
        crate::linalg::pairing(&table.level_grad(&x), &dir)
    };
    let s = newton_polish(along, dalong, s, lo, hi);
    let x = q.axpy(s, &dir);
    let residual = table.level(&x).abs();
    if residual > TOL_HIT {
        return Err(crate::error::numeric_failure(
            "ray bracketing did not reach the wall",
            residual,
        ));
    }
    Ok((x, s))
}

/// Unit inward normal covector `−∇G/|∇G|` at a wall point.
pub fn inward_normal<T: Table + ?Sized>(table: &T, x: &Vector) -> Result<Covector> {
    let g = table.level(x);
    if !(g.abs() <= TOL_SURFACE) {
        return Err(Error::InvalidInput(format!(
            "point is not on the wall (G = {g:e})"
        )));
    }
    let grad = table.level_grad(x);
    let norm = grad.norm();
    if !(norm >= 1e-12) {
        return Err(Error::SingularSurface { norm });
    }
    Ok(grad.scale(-1.0 / norm))
}

/// Axis-aligned ellipsoid table `Σ (xᵢ − cᵢ)²/aᵢ² < 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidTable {
    center: Vector,
    semi_axes: Vec<f64>,
}

/// Parameters of an ellipsoid table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipseTableParams {
    pub center: Vec<f64>,
    pub semi_axes: Vec<f64>,
}

pub fn make_ellipsoid_table(params: &EllipseTableParams) -> Result<EllipsoidTable> {
    EllipsoidTable::new(Vector::new(params.center.clone()), params.semi_axes.clone())
}

impl EllipsoidTable {
    pub fn new(center: Vector, semi_axes: Vec<f64>) -> Result<Self> {
        if semi_axes.len() < 2 {
            return Err(Error::InvalidDimension(format!(
                "table dimension {} is below 2",
                semi_axes.len()
            )));
        }
        if center.dim() != semi_axes.len() {
            return Err(Error::InvalidDimension(
                "center and semi-axes differ in length".into(),
            ));
        }
        if !center.is_finite() {
            return Err(Error::InvalidParameter(
                "table center must be finite".into(),
            ));
        }
        if let Some(a) = semi_axes.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "semi-axis {a} is not positive"
            )));
        }
        Ok(Self { center, semi_axes })
    }

    pub fn centered(semi_axes: Vec<f64>) -> Result<Self> {
        Self::new(Vector::zeros(semi_axes.len()), semi_axes)
    }

    pub fn center(&self) -> &Vector {
        &self.center
    }

    pub fn semi_axes(&self) -> &[f64] {
        &self.semi_axes
    }

    pub fn params(&self) -> EllipseTableParams {
        EllipseTableParams {
            center: self.center.coords().to_vec(),
            semi_axes: self.semi_axes.clone(),
        }
    }

    /// Point on the wall at the given angles (one angle in the plane,
    /// azimuth and polar angle in space).
    pub fn wall_point(&self, angles: &[f64]) -> Vector {
        let dir: Vec<f64> = match self.dim() {
            2 => vec![angles[0].cos(), angles[0].sin()],
            3 => vec![
                angles[1].sin() * angles[0].cos(),
                angles[1].sin() * angles[0].sin(),
                angles[1].cos(),
            ],
            n => panic!("wall_point is only defined in dimensions 2 and 3, got {n}"),
        };
        self.center
            .iter()
            .zip(&self.semi_axes)
            .zip(dir)
            .map(|((c, a), u)| c + a * u)
            .collect::<Vec<_>>()
            .into()
    }
}

impl Table for EllipsoidTable {
    fn dim(&self) -> usize {
        self.semi_axes.len()
    }

    fn level(&self, x: &Vector) -> f64 {
        x.iter()
            .zip(self.center.iter())
            .zip(&self.semi_axes)
            .map(|((xi, ci), ai)| ((xi - ci) / ai).powi(2))
            .sum::<f64>()
            - 1.0
    }

    fn level_grad(&self, x: &Vector) -> Covector {
        x.iter()
            .zip(self.center.iter())
            .zip(&self.semi_axes)
            .map(|((xi, ci), ai)| 2.0 * (xi - ci) / (ai * ai))
            .collect::<Vec<_>>()
            .into()
    }

    fn bounding_radius(&self) -> f64 {
        self.center.norm() + self.semi_axes.iter().cloned().fold(0.0, f64::max)
    }

    /// Closed-form quadratic solve, taking the smallest root past the
    /// departure threshold.
    fn intersect_ray(&self, q: &Vector, d: &Vector) -> Result<(Vector, f64)> {
        let dir = check_ray(self, q, d)?;
        let (mut a, mut b, mut c) = (0.0, 0.0, -1.0);
        for ((qi, di), (ci, ai)) in q
            .iter()
            .zip(dir.iter())
            .zip(self.center.iter().zip(&self.semi_axes))
        {
            let w = (qi - ci) / ai;
            let e = di / ai;
            a += e * e;
            b += 2.0 * w * e;
            c += w * w;
        }
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return Err(Error::RayEscapes);
        }
        let k = -0.5 * (b + b.signum() * disc.sqrt());
        let mut roots = [k / a, if k != 0.0 { c / k } else { 0.0 }];
        roots.sort_by(f64::total_cmp);
        let smin = s_min(self);
        let s = roots
            .into_iter()
            .find(|&s| s >= smin)
            .ok_or(Error::RayEscapes)?;
        // one Newton step along the ray tightens the residual to rounding
        let along = |s: f64| self.level(&q.axpy(s, &dir));
        let dalong = |s: f64| crate::linalg::pairing(&self.level_grad(&q.axpy(s, &dir)), &dir);
        let s = newton_polish(along, dalong, s, 0.5 * s, 2.0 * s);
        let x = q.axpy(s, &dir);
        let residual = self.level(&x).abs();
        if residual > TOL_HIT {
            return Err(crate::error::numeric_failure(
                "quadratic ray solve",
                residual,
            ));
        }
        Ok((x, s))
    }
}

/// A table given by user-supplied level and gradient functions.
#[derive(Clone)]
pub struct ImplicitTable {
    dim: usize,
    level: Arc<dyn Fn(&Vector) -> f64 + Send + Sync>,
    level_grad: Arc<dyn Fn(&Vector) -> Covector + Send + Sync>,
    bounding_radius: f64,
}

impl ImplicitTable {
    pub fn new(
        dim: usize,
        level: impl Fn(&Vector) -> f64 + Send + Sync + 'static,
        level_grad: impl Fn(&Vector) -> Covector + Send + Sync + 'static,
        bounding_radius: f64,
    ) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(format!(
                "table dimension {dim} is below 2"
            )));
        }
        if !(bounding_radius.is_finite() && bounding_radius > 0.0) {
            return Err(Error::InvalidParameter(
                "bounding radius must be positive".into(),
            ));
        }
        Ok(Self {
            dim,
            level: Arc::new(level),
            level_grad: Arc::new(level_grad),
            bounding_radius,
        })
    }
}

impl fmt::Debug for ImplicitTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ImplicitTable")
            .field("dim", &self.dim)
            .field("bounding_radius", &self.bounding_radius)
            .finish_non_exhaustive()
    }
}

impl Table for ImplicitTable {
    fn dim(&self) -> usize {
        self.dim
    }
    fn level(&self, x: &Vector) -> f64 {
        (self.level)(x)
    }
    fn level_grad(&self, x: &Vector) -> Covector {
        (self.level_grad)(x)
    }
    fn bounding_radius(&self) -> f64 {
        self.bounding_radius
    }
}

/// Serializable table description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TableDescriptor {
    Ellipsoid {
        center: Vec<f64>,
        semi_axes: Vec<f64>,
    },
}

impl TableDescriptor {
    pub fn build(&self) -> Result<EllipsoidTable> {
        match self {
            TableDescriptor::Ellipsoid { center, semi_axes } => {
                make_ellipsoid_table(&EllipseTableParams {
                    center: center.clone(),
                    semi_axes: semi_axes.clone(),
                })
            }
        }
    }
}

impl From<&EllipsoidTable> for TableDescriptor {
    fn from(t: &EllipsoidTable) -> Self {
        TableDescriptor::Ellipsoid {
            center: t.center.coords().to_vec(),
            semi_axes: t.semi_axes.clone(),
        }
    }
}
