//! Planar conic machinery: confocal ellipse pairs, the focal-ratio sum, the
//! normed-ellipse sum and least-squares fits of ellipses with a focus at the
//! origin.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::gauge::{FocalEllipsoid, Gauge};
use crate::linalg::Vector;

/// Closed form of the focal-ratio sum for confocal ellipses with full major
/// axes `l1 ≤ l2` and focal distance `d`:
/// `(l1 − d)/(l2 − d) + (l1 + d)/(l2 + d)`.
pub fn corollary_constant(l1: f64, l2: f64, d: f64) -> Result<f64> {
    if !(d >= 0.0 && d < l1 && l1 <= l2 && l2.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= d < l1 <= l2, got d = {d}, l1 = {l1}, l2 = {l2}"
        )));
    }
    Ok((l1 - d) / (l2 - d) + (l1 + d) / (l2 + d))
}

/// A planar ellipse given by its foci and full major axis.
#[derive(Debug, Clone, PartialEq)]
pub struct FocalEllipse {
    f1: Vector,
    f2: Vector,
    major: f64,
}

impl FocalEllipse {
    pub fn new(f1: Vector, f2: Vector, major: f64) -> Result<Self> {
        if f1.dim() != 2 || f2.dim() != 2 {
            return Err(Error::InvalidDimension("focal ellipses are planar".into()));
        }
        let d = (&f2 - &f1).norm();
        if !(major.is_finite() && major > d) {
            return Err(Error::InvalidParameter(format!(
                "major axis {major} must exceed the focal distance {d}"
            )));
        }
        Ok(Self { f1, f2, major })
    }

    pub fn focal_distance(&self) -> f64 {
        (&self.f2 - &self.f1).norm()
    }

    fn frame(&self) -> (Vector, Vector, Vector, f64, f64) {
        let center = (&self.f1 + &self.f2).scale(0.5);
        let d = self.focal_distance();
        let e = if d > 0.0 {
            (&self.f2 - &self.f1).scale(1.0 / d)
        } else {
            Vector::from([1.0, 0.0])
        };
        let e_perp = Vector::from([-e[1], e[0]]);
        let semi_major = 0.5 * self.major;
        let semi_minor = (semi_major * semi_major - 0.25 * d * d).sqrt();
        (center, e, e_perp, semi_major, semi_minor)
    }

    /// Point at parameter angle `theta` of the standard parametrization.
    pub fn point(&self, theta: f64) -> Vector {
        let (center, e, e_perp, a, b) = self.frame();
        center
            .axpy(a * theta.cos(), &e)
            .axpy(b * theta.sin(), &e_perp)
    }

    /// Deviation of the focal-distance sum at `x` from the major axis.
    pub fn focal_residual(&self, x: &Vector) -> f64 {
        (x - &self.f1).norm() + (x - &self.f2).norm() - self.major
    }

    /// Where the ray from `origin` through `through` leaves the ellipse.
    /// Exact quadratic solve in the ellipse's own frame; `origin` must be
    /// inside.
    pub fn ray_exit(&self, origin: &Vector, through: &Vector) -> Result<Vector> {
        let (center, e, e_perp, a, b) = self.frame();
        let dir = through - origin;
        if dir.is_zero() {
            return Err(Error::DegenerateDirection);
        }
        let dir = dir.normalized();
        let w = origin - &center;
        let (wu, wv) = (w.dot(&e) / a, w.dot(&e_perp) / b);
        let (du, dv) = (dir.dot(&e) / a, dir.dot(&e_perp) / b);
        let qa = du * du + dv * dv;
        let qb = 2.0 * (wu * du + wv * dv);
        let qc = wu * wu + wv * wv - 1.0;
        if qc > 0.0 {
            return Err(Error::InvalidInput(
                "ray origin lies outside the ellipse".into(),
            ));
        }
        let disc = (qb * qb - 4.0 * qa * qc).max(0.0).sqrt();
        // the positive root, without cancellation
        let s = if qb <= 0.0 {
            (-qb + disc) / (2.0 * qa)
        } else {
            -2.0 * qc / (qb + disc)
        };
        Ok(origin.axpy(s, &dir))
    }
}

/// Two confocal ellipses `ξ₁ ⊆ ξ₂` with common foci and full major axes
/// `l1 ≤ l2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfocalPair {
    inner: FocalEllipse,
    outer: FocalEllipse,
}

impl ConfocalPair {
    pub fn new(f1: Vector, f2: Vector, l1: f64, l2: f64) -> Result<Self> {
        let d = if f1.dim() == 2 && f2.dim() == 2 {
            (&f2 - &f1).norm()
        } else {
            f64::NAN
        };
        if !(d < l1 && l1 <= l2) {
            return Err(Error::InvalidParameter(format!(
                "confocal pair needs |f1f2| < l1 <= l2, got d = {d}, l1 = {l1}, l2 = {l2}"
            )));
        }
        Ok(Self {
            inner: FocalEllipse::new(f1.clone(), f2.clone(), l1)?,
            outer: FocalEllipse::new(f1, f2, l2)?,
        })
    }

    pub fn inner(&self) -> &FocalEllipse {
        &self.inner
    }

    pub fn outer(&self) -> &FocalEllipse {
        &self.outer
    }

    pub fn focal_distance(&self) -> f64 {
        self.inner.focal_distance()
    }

    /// The closed-form value of [`ratio_sum`] for this pair.
    pub fn constant(&self) -> f64 {
        corollary_constant(self.inner.major, self.outer.major, self.focal_distance())
            .expect("validated at construction")
    }
}

/// `|xf₁|/|y₁f₁| + |xf₂|/|y₂f₂|` for `x` on the inner ellipse, where `yᵢ` is
/// the exit point of the ray `fᵢ → x` through the outer ellipse.
pub fn ratio_sum(pair: &ConfocalPair, x: &Vector) -> Result<f64> {
    let residual = pair.inner.focal_residual(x);
    if !(residual.abs() <= 1e-10 * pair.inner.major.max(1.0)) {
        return Err(Error::InvalidInput(format!(
            "point is not on the inner ellipse (residual {residual:e})"
        )));
    }
    let (f1, f2) = (&pair.inner.f1, &pair.inner.f2);
    let y1 = pair.outer.ray_exit(f1, x)?;
    let y2 = pair.outer.ray_exit(f2, x)?;
    Ok((x - f1).norm() / (&y1 - f1).norm() + (x - f2).norm() / (&y2 - f2).norm())
}

/// `F(x) + F(f − x)` for the focal-ellipsoid norm with parameters
/// `(axis, a, c)` and its second focus `f = 2c·axis`, evaluated at a point
/// `x` of the Euclidean ellipse with foci `0, f` and full major axis `l`.
pub fn normed_ellipse_sum(a: f64, c: f64, axis: &Vector, l: f64, x: &Vector) -> Result<f64> {
    let body = FocalEllipsoid::new(axis.clone(), a, c)?;
    if !(l > 2.0 * c) {
        return Err(Error::InvalidParameter(format!(
            "major axis {l} must exceed the focal distance {}",
            2.0 * c
        )));
    }
    let f = body.second_focus();
    let residual = x.norm() + (&f - x).norm() - l;
    if !(residual.abs() <= 1e-10 * l.max(1.0)) {
        return Err(Error::InvalidInput(format!(
            "point is not on the Euclidean ellipse (residual {residual:e})"
        )));
    }
    Ok(body.gauge(x) + body.gauge(&(&f - x)))
}

/// Ellipse with one focus at the origin recovered by [`fit_focal_conic`].
#[derive(Debug, Clone, PartialEq)]
pub struct FocalConicFit {
    /// Unit direction from the origin towards the centre.
    pub axis: Vector,
    pub a: f64,
    pub c: f64,
    /// Largest relative radial misfit over the input points.
    pub residual: f64,
}

impl FocalConicFit {
    pub fn eccentricity(&self) -> f64 {
        self.c / self.a
    }
}

/// Fits `r = ℓ / (1 − ε·cos(θ − θ₀))` about the origin by linear least
/// squares on `1/r = α − β·cos θ − γ·sin θ`.
pub fn fit_focal_conic(points: &[Vector]) -> Result<FocalConicFit> {
    if points.len() < 5 {
        return Err(Error::FitFailure(format!(
            "need at least 5 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|p| p.dim() != 2) {
        return Err(Error::InvalidDimension("conic fits are planar".into()));
    }
    if points.iter().any(|p| p.is_zero() || !p.is_finite()) {
        return Err(Error::FitFailure(
            "points must be finite and away from the origin".into(),
        ));
    }
    // normal equations for the columns (1, −cos θ, −sin θ)
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for p in points {
        let r = p.norm();
        let row = [1.0, -p[0] / r, -p[1] / r];
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] / r;
        }
    }
    let [alpha, beta, gamma] = solve3(ata, atb).ok_or_else(|| {
        Error::FitFailure("points do not determine a conic (degenerate configuration)".into())
    })?;
    if !(alpha > 0.0) {
        return Err(Error::FitFailure(format!(
            "non-positive inverse latus rectum {alpha}"
        )));
    }
    let latus = 1.0 / alpha;
    let eccentricity = beta.hypot(gamma) * latus;
    if eccentricity >= 1.0 {
        return Err(Error::NotAnEllipse { eccentricity });
    }
    let theta0 = if eccentricity > 0.0 {
        gamma.atan2(beta)
    } else {
        0.0
    };
    let axis = Vector::from([theta0.cos(), theta0.sin()]);
    let a = latus / (1.0 - eccentricity * eccentricity);
    let residual = points
        .iter()
        .map(|p| {
            let r = p.norm();
            let cos = (p[0] * axis[0] + p[1] * axis[1]) / r;
            let fitted = latus / (1.0 - eccentricity * cos);
            ((fitted - r) / r).abs()
        })
        .fold(0.0, f64::max);
    Ok(FocalConicFit {
        axis,
        a,
        c: eccentricity * a,
        residual,
    })
}

/// Gaussian elimination with partial pivoting; `None` when the system is
/// numerically singular.
fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    let scale = m.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if !(scale > 0.0) {
        return None;
    }
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() <= 1e-10 * scale {
            return None;
        }
        m.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            let pivot_row = m[col];
            for (dst, src) in m[row].iter_mut().zip(pivot_row).skip(col) {
                *dst -= f * src;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / m[row][row];
    }
    Some(x)
}

/// `n` stratified angles in `[0, 2π)`: one uniform draw per cell.
pub fn stratified_angles(n: usize, mut uniform: impl FnMut() -> f64) -> Vec<f64> {
    (0..n)
        .map(|k| TAU * (k as f64 + uniform()) / n as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Covector;
    use crate::projective::ProjectiveMap;

    fn pair() -> ConfocalPair {
        ConfocalPair::new(
            Vector::from([-1.0, 0.0]),
            Vector::from([1.0, 0.0]),
            4.0,
            6.0,
        )
        .unwrap()
    }

    #[test]
    fn corollary_constant_examples() {
        assert_eq!(corollary_constant(4.0, 6.0, 2.0).unwrap(), 1.25);
        assert_eq!(corollary_constant(3.0, 3.0, 1.2).unwrap(), 2.0);
        assert_eq!(corollary_constant(2.0, 4.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn corollary_constant_rejects_bad_nesting() {
        assert!(corollary_constant(6.0, 4.0, 2.0).is_err());
        assert!(corollary_constant(2.0, 4.0, 2.0).is_err());
        assert!(ConfocalPair::new(
            Vector::from([-1.0, 0.0]),
            Vector::from([1.0, 0.0]),
            6.0,
            4.0
        )
        .is_err());
    }

    #[test]
    fn ratio_sum_at_vertex_and_covertex() {
        let p = pair();
        let v = ratio_sum(&p, &Vector::from([2.0, 0.0])).unwrap();
        assert!((v - 1.25).abs() < 1e-15);
        let w = ratio_sum(&p, &Vector::from([0.0, 3f64.sqrt()])).unwrap();
        assert!((w - 1.25).abs() < 1e-15);
    }

    #[test]
    fn ratio_sum_rejects_points_off_the_ellipse() {
        assert!(matches!(
            ratio_sum(&pair(), &Vector::from([2.1, 0.0])),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn ray_exit_matches_focal_radius_formula() {
        // from a focus, the exit distance along unit w is (l² − d²)/(2(l − w·D))
        let outer = pair().outer().clone();
        let f1 = Vector::from([-1.0, 0.0]);
        let big_d = Vector::from([2.0, 0.0]);
        for theta in [0.0, 0.4, 1.9, 3.0, 4.4] {
            let w = Vector::from([f64::cos(theta), f64::sin(theta)]);
            let y = outer.ray_exit(&f1, &(&f1 + &w)).unwrap();
            let r = (36.0 - 4.0) / (2.0 * (6.0 - w.dot(&big_d)));
            assert!(((&y - &f1).norm() - r).abs() < 1e-13);
        }
    }

    #[test]
    fn normed_ellipse_sum_examples() {
        // circle body with f = o: sum = 2|x| = l
        let e = Vector::from([1.0, 0.0]);
        let x = Vector::from([0.6, 0.8]).scale(1.5);
        assert!((normed_ellipse_sum(1.0, 0.0, &e, 3.0, &x).unwrap() - 3.0).abs() < 1e-15);

        // foci 0 and (2, 0), l = 4: vertex (3, 0) vs co-vertex (1, √3)
        let v = normed_ellipse_sum(2.0, 1.0, &e, 4.0, &Vector::from([3.0, 0.0])).unwrap();
        let w = normed_ellipse_sum(2.0, 1.0, &e, 4.0, &Vector::from([1.0, 3f64.sqrt()])).unwrap();
        assert!((v - w).abs() < 1e-10);
    }

    #[test]
    fn normed_ellipse_sum_rejects_off_ellipse() {
        let e = Vector::from([1.0, 0.0]);
        assert!(normed_ellipse_sum(2.0, 1.0, &e, 4.0, &Vector::from([3.5, 0.0])).is_err());
        assert!(normed_ellipse_sum(2.0, 1.0, &e, 1.0, &Vector::from([0.5, 0.0])).is_err());
    }

    fn circle_points(r: f64, n: usize) -> Vec<Vector> {
        (0..n)
            .map(|k| {
                let th = TAU * k as f64 / n as f64;
                Vector::from([r * th.cos(), r * th.sin()])
            })
            .collect()
    }

    #[test]
    fn fit_circle() {
        let fit = fit_focal_conic(&circle_points(2.0, 40)).unwrap();
        assert!(fit.eccentricity().abs() < 1e-14);
        assert!((fit.a - 2.0).abs() < 1e-13);
        assert!(fit.residual <= 1e-12);
    }

    #[test]
    fn fit_projective_image_of_circle() {
        let m = ProjectiveMap::new(1.0, Covector::from([0.5, 0.0])).unwrap();
        let pts: Vec<_> = circle_points(1.0, 50)
            .iter()
            .map(|p| m.apply(p).unwrap())
            .collect();
        let fit = fit_focal_conic(&pts).unwrap();
        assert!((fit.a - 4.0 / 3.0).abs() < 1e-12);
        assert!((fit.c - 2.0 / 3.0).abs() < 1e-12);
        assert!(fit.axis.max_abs_diff(&Vector::from([1.0, 0.0])) < 1e-12);
        assert!(fit.residual <= 1e-9);
    }

    #[test]
    fn fit_recovers_focal_ellipsoid() {
        let body = FocalEllipsoid::new(Vector::from([0.0, -1.0]), 2.0, 1.0).unwrap();
        let pts: Vec<_> = circle_points(1.0, 30)
            .iter()
            .map(|p| p.scale(1.0 / body.gauge(p)))
            .collect();
        let fit = fit_focal_conic(&pts).unwrap();
        assert!((fit.a - 2.0).abs() < 1e-12);
        assert!((fit.c - 1.0).abs() < 1e-12);
        assert!(fit.axis.max_abs_diff(&Vector::from([0.0, -1.0])) < 1e-12);
    }

    #[test]
    fn fit_failures() {
        assert!(matches!(
            fit_focal_conic(&circle_points(1.0, 4)),
            Err(Error::FitFailure(_))
        ));
        let line: Vec<_> = (1..8).map(|k| Vector::from([k as f64, 0.0])).collect();
        assert!(matches!(fit_focal_conic(&line), Err(Error::FitFailure(_))));
        // a hyperbola branch r = 1/(1 − 1.5·cos θ) is not an ellipse
        let hyperbola: Vec<_> = (0..10)
            .map(|k| {
                let th = 1.0 + 0.45 * k as f64;
                let r = 1.0 / (1.0 - 1.5 * th.cos());
                Vector::from([r * th.cos(), r * th.sin()])
            })
            .collect();
        assert!(matches!(
            fit_focal_conic(&hyperbola),
            Err(Error::NotAnEllipse { .. })
        ));
    }
}
