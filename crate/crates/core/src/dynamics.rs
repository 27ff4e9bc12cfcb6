//! Reflection in the dual space and multi-bounce trajectories.
//!
//! At a wall point with inward normal covector `n`, an incoming unit velocity
//! `u₁` with momentum `p₁` leaves with the unit velocity `u₂` whose momentum
//! satisfies `p₂ − p₁ = λ·n`, `λ > 0`. The multiplier is the unique positive
//! root of the convex scalar equation `F_{K°}(p₁ + λ·n) = 1`.

use std::f64::consts::TAU;
use std::io::{self, Write};

use thiserror::Error;

use crate::error::{numeric_failure, Error, Result};
use crate::gauge::GaugeBody;
use crate::linalg::{distance_to_ray, pairing, Covector, Vector};
use crate::roots::{bisect, golden_section_min, newton_polish};
use crate::table::{inward_normal, EllipsoidTable, Table};

/// Below this `|n(u₁)|` the incidence is treated as tangential.
pub const TOL_GRAZE: f64 = 1e-8;

/// Upper limit on the reflection multiplier.
pub const LAMBDA_MAX: f64 = 1e6;

/// Root residual accepted for `F_{K°}(p₁ + λn) = 1`, relative to the size of
/// the momenta involved.
pub const TOL_ROOT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionDiagnostics {
    pub lambda: f64,
    pub grazing_margin: f64,
    pub root_residual: f64,
}

/// Reflects `incoming` at a wall with inward normal covector `normal`.
///
/// Returns the outgoing unit velocity (gauge one) and the diagnostics of the
/// multiplier solve.
pub fn reflect<B: GaugeBody + ?Sized>(
    body: &B,
    incoming: &Vector,
    normal: &Covector,
) -> Result<(Vector, ReflectionDiagnostics)> {
    let p1 = body.momentum(incoming)?;
    let u1 = incoming.scale(1.0 / body.gauge(incoming));
    let slope = pairing(normal, &u1);
    let grazing_margin = slope.abs();
    if !(grazing_margin >= TOL_GRAZE) {
        return Err(Error::GrazingIncidence {
            margin: grazing_margin,
        });
    }
    if slope > 0.0 {
        return Err(Error::InvalidInput(
            "incoming velocity points into the table; the normal must be inward".into(),
        ));
    }

    let g = |lambda: f64| body.dual_gauge(&p1.axpy(lambda, normal)) - 1.0;
    let (mut lo, mut hi) = (0.0, grazing_margin);
    if g(hi) > 0.0 {
        // the root lies below the first probe; halve until g < 0
        let mut probe = hi;
        loop {
            probe *= 0.5;
            if probe < 1e-300 {
                return Err(numeric_failure(
                    "no negative value of the dual-gauge equation",
                    g(hi),
                ));
            }
            if g(probe) < 0.0 {
                lo = probe;
                break;
            }
            hi = probe;
        }
    } else {
        while !(g(hi) > 0.0) {
            lo = hi;
            hi *= 2.0;
            if hi > LAMBDA_MAX || !hi.is_finite() {
                return Err(numeric_failure(
                    "reflection multiplier exceeds the bracket limit",
                    g(lo),
                ));
            }
        }
    }
    let lambda = bisect(g, lo, hi, 1e-14 * hi);
    let dg = |lambda: f64| pairing(normal, &body.dual_gauge_grad(&p1.axpy(lambda, normal)));
    let lambda = newton_polish(g, dg, lambda, lo, hi);
    let root_residual = g(lambda).abs();
    let scale = 1.0f64.max(p1.norm() + lambda * normal.norm());
    if !(root_residual <= TOL_ROOT * scale) || !(lambda > 0.0) {
        return Err(numeric_failure(
            "reflection multiplier did not converge",
            root_residual,
        ));
    }
    let outgoing = body.velocity_from_momentum(&p1.axpy(lambda, normal))?;
    Ok((
        outgoing,
        ReflectionDiagnostics {
            lambda,
            grazing_margin,
            root_residual,
        },
    ))
}

/// Euclidean mirror image of `u` across the hyperplane with normal `normal`.
pub fn euclidean_mirror(u: &Vector, normal: &Covector) -> Vector {
    let n = normal.sharp().normalized();
    u.axpy(-2.0 * u.dot(&n), &n)
}

/// Position plus direction of motion; only the ray of `direction` matters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryState {
    pub position: Vector,
    pub direction: Vector,
}

impl TrajectoryState {
    pub fn new(position: Vector, direction: Vector) -> Result<Self> {
        if direction.is_zero() || !direction.is_finite() {
            return Err(Error::DegenerateDirection);
        }
        if position.dim() != direction.dim() {
            return Err(Error::InvalidDimension(
                "position and direction differ in length".into(),
            ));
        }
        Ok(Self {
            position,
            direction,
        })
    }
}

/// Flies from the current position to the wall and reflects there.
pub fn step<B, T>(
    body: &B,
    table: &T,
    state: &TrajectoryState,
) -> Result<(TrajectoryState, ReflectionDiagnostics)>
where
    B: GaugeBody + ?Sized,
    T: Table + ?Sized,
{
    let (hit, _) = table.intersect_ray(&state.position, &state.direction)?;
    let normal = inward_normal(table, &hit)?;
    let (direction, diag) = reflect(body, &state.direction, &normal)?;
    Ok((
        TrajectoryState {
            position: hit,
            direction,
        },
        diag,
    ))
}

/// The bounce sequence of a trajectory. `states[0]` is the starting state;
/// `states[k]` for `k ≥ 1` is the `k`-th bounce point with the reflected
/// direction, reached by a chord of gauge length `segment_lengths[k − 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<TrajectoryState>,
    pub segment_lengths: Vec<f64>,
    pub lambdas: Vec<f64>,
}

impl Trajectory {
    pub fn bounces(&self) -> usize {
        self.segment_lengths.len()
    }

    pub fn positions(&self) -> impl Iterator<Item = &Vector> {
        self.states.iter().map(|s| &s.position)
    }

    /// Writes the trajectory as CSV with 17 significant digits per float.
    /// The starting row reports zero segment length and multiplier.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let n = self.states.first().map_or(0, |s| s.position.dim());
        let mut header = vec!["bounce_index".to_string()];
        header.extend((0..n).map(|i| format!("position_{i}")));
        header.extend((0..n).map(|i| format!("direction_{i}")));
        header.push("segment_length".into());
        header.push("lambda".into());
        writeln!(out, "{}", header.join(","))?;
        for (k, state) in self.states.iter().enumerate() {
            let (len, lambda) = if k == 0 {
                (0.0, 0.0)
            } else {
                (self.segment_lengths[k - 1], self.lambdas[k - 1])
            };
            let mut row = vec![k.to_string()];
            row.extend(state.position.iter().map(|v| fmt17(*v)));
            row.extend(state.direction.iter().map(|v| fmt17(*v)));
            row.push(fmt17(len));
            row.push(fmt17(lambda));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// A trajectory cut short, with the bounces completed before the failure.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("trajectory aborted after {} bounces: {error}", partial.bounces())]
pub struct TrajectoryAbort {
    pub partial: Trajectory,
    pub error: Error,
}

/// Runs `bounces` reflections from `initial`.
pub fn run_trajectory<B, T>(
    body: &B,
    table: &T,
    initial: &TrajectoryState,
    bounces: usize,
) -> std::result::Result<Trajectory, TrajectoryAbort>
where
    B: GaugeBody + ?Sized,
    T: Table + ?Sized,
{
    let mut traj = Trajectory {
        states: Vec::with_capacity(bounces + 1),
        segment_lengths: Vec::with_capacity(bounces),
        lambdas: Vec::with_capacity(bounces),
    };
    if bounces < 1 {
        return Err(TrajectoryAbort {
            partial: traj,
            error: Error::InvalidParameter("at least one bounce is required".into()),
        });
    }
    if initial.direction.is_zero() {
        return Err(TrajectoryAbort {
            partial: traj,
            error: Error::DegenerateDirection,
        });
    }
    let start = TrajectoryState {
        position: initial.position.clone(),
        direction: initial
            .direction
            .scale(1.0 / body.gauge(&initial.direction)),
    };
    traj.states.push(start);
    for _ in 0..bounces {
        let current = traj.states.last().expect("non-empty");
        match step(body, table, current) {
            Ok((next, diag)) => {
                traj.segment_lengths
                    .push(body.gauge(&(&next.position - &current.position)));
                traj.lambdas.push(diag.lambda);
                traj.states.push(next);
            }
            Err(error) => {
                return Err(TrajectoryAbort {
                    partial: traj,
                    error,
                })
            }
        }
    }
    Ok(traj)
}

/// Grid resolution of [`reflection_oracle`].
pub const ORACLE_GRID: usize = 256;

/// Independent variational oracle for the reflection law on a planar
/// ellipse table: the wall point minimizing `F(x − q₁) + F(q₃ − x)`.
///
/// A 256-point angle grid locates local minima, each refined by
/// golden-section search to a `1e-12` bracket. Two distinct minima with
/// values within `1e-9` (relative) make the answer ambiguous.
pub fn reflection_oracle<B: GaugeBody + ?Sized>(
    body: &B,
    table: &EllipsoidTable,
    q1: &Vector,
    q3: &Vector,
) -> Result<Vector> {
    if table.dim() != 2 || body.dim() != 2 {
        return Err(Error::InvalidDimension(
            "the reflection oracle is planar".into(),
        ));
    }
    if !(table.contains(q1) && table.contains(q3)) {
        return Err(Error::InvalidInput(
            "oracle endpoints must lie strictly inside".into(),
        ));
    }
    let cost = |theta: f64| {
        let x = table.wall_point(&[theta]);
        body.gauge(&(&x - q1)) + body.gauge(&(q3 - &x))
    };
    let h = TAU / ORACLE_GRID as f64;
    let values: Vec<f64> = (0..ORACLE_GRID).map(|k| cost(k as f64 * h)).collect();
    let mut minima: Vec<(f64, f64)> = (0..ORACLE_GRID)
        .filter(|&k| {
            let prev = values[(k + ORACLE_GRID - 1) % ORACLE_GRID];
            let next = values[(k + 1) % ORACLE_GRID];
            values[k] <= prev && values[k] < next
        })
        .map(|k| {
            let centre = k as f64 * h;
            golden_section_min(cost, centre - h, centre + h, 1e-12)
        })
        .collect();
    minima.sort_by(|a, b| a.1.total_cmp(&b.1));
    let &(theta, best) = minima
        .first()
        .ok_or_else(|| numeric_failure("no minimum on the oracle grid", f64::NAN))?;
    if let Some(&(theta2, second)) = minima.get(1) {
        let apart = (theta - theta2)
            .rem_euclid(TAU)
            .min((theta2 - theta).rem_euclid(TAU))
            > 1e-6;
        if apart && second - best <= 1e-9 * best {
            return Err(Error::AmbiguousOracle {
                first: best,
                second,
            });
        }
    }
    Ok(table.wall_point(&[theta]))
}

/// Distance from `q3` to the ray obtained by shooting from `q1` at the
/// oracle's wall point and reflecting with [`reflect`].
pub fn oracle_deviation<B: GaugeBody + ?Sized>(
    body: &B,
    table: &EllipsoidTable,
    q1: &Vector,
    q3: &Vector,
) -> Result<f64> {
    let x = reflection_oracle(body, table, q1, q3)?;
    let normal = inward_normal(table, &x)?;
    let (out, _) = reflect(body, &(&x - q1), &normal)?;
    Ok(distance_to_ray(q3, &x, &out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauge::{make_centered_ellipsoid, make_euclidean_ball, make_focal_ellipsoid, Gauge};
    use crate::linalg::ray_angle;

    fn circle() -> EllipsoidTable {
        EllipsoidTable::centered(vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn ball_mirror_example() {
        let b = make_euclidean_ball(2).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let (out, diag) = reflect(&b, &Vector::from([h, h]), &Covector::from([-1.0, 0.0])).unwrap();
        assert!(out.max_abs_diff(&Vector::from([-h, h])) < 1e-14);
        assert!((diag.lambda - 2f64.sqrt()).abs() < 1e-14);
        assert!(diag.root_residual <= 1e-12);
    }

    #[test]
    fn centered_ellipsoid_example() {
        let e = make_centered_ellipsoid(vec![2.0, 1.0]).unwrap();
        let (out, diag) =
            reflect(&e, &Vector::from([0.0, -1.0]), &Covector::from([0.0, 1.0])).unwrap();
        assert!(out.max_abs_diff(&Vector::from([0.0, 1.0])) < 1e-14);
        assert!((diag.lambda - 2.0).abs() < 1e-14);
    }

    #[test]
    fn focal_body_reflects_like_mirror() {
        let f = make_focal_ellipsoid(Vector::from([1.0, 0.0]), 2.0, 1.0, 2).unwrap();
        let n = Covector::from([-0.6, -0.8]);
        let u = Vector::from([0.9, 0.2]);
        let (out, _) = reflect(&f, &u, &n).unwrap();
        assert!(ray_angle(&out, &euclidean_mirror(&u, &n)) < 1e-12);
        assert!((f.gauge(&out) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grazing_incidence_rejected() {
        let b = make_euclidean_ball(2).unwrap();
        let r = reflect(
            &b,
            &Vector::from([1.0, -1e-10]),
            &Covector::from([0.0, 1.0]),
        );
        assert!(matches!(r, Err(Error::GrazingIncidence { .. })));
    }

    #[test]
    fn entering_velocity_rejected() {
        let b = make_euclidean_ball(2).unwrap();
        let r = reflect(&b, &Vector::from([0.0, 1.0]), &Covector::from([0.0, 1.0]));
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn step_along_diameter() {
        let b = make_euclidean_ball(2).unwrap();
        let s = TrajectoryState::new(Vector::zeros(2), Vector::from([1.0, 0.0])).unwrap();
        let (next, _) = step(&b, &circle(), &s).unwrap();
        assert!(next.position.max_abs_diff(&Vector::from([1.0, 0.0])) < 1e-15);
        assert!(next.direction.max_abs_diff(&Vector::from([-1.0, 0.0])) < 1e-14);
    }

    #[test]
    fn step_from_focus_passes_other_focus() {
        let b = make_euclidean_ball(2).unwrap();
        let table = EllipsoidTable::centered(vec![2.0, 1.0]).unwrap();
        let f = 3f64.sqrt();
        let s = TrajectoryState::new(Vector::from([f, 0.0]), Vector::from([0.0, 1.0])).unwrap();
        let (next, _) = step(&b, &table, &s).unwrap();
        assert!(table.level(&next.position).abs() <= 1e-12);
        let d = distance_to_ray(&Vector::from([-f, 0.0]), &next.position, &next.direction);
        assert!(d < 1e-12, "miss by {d}");
    }

    #[test]
    fn diameter_is_two_periodic() {
        let b = make_euclidean_ball(2).unwrap();
        let s = TrajectoryState::new(Vector::zeros(2), Vector::from([1.0, 0.0])).unwrap();
        let traj = run_trajectory(&b, &circle(), &s, 4).unwrap();
        let want = [[1.0, 0.0], [-1.0, 0.0], [1.0, 0.0], [-1.0, 0.0]];
        for (p, w) in traj.positions().skip(1).zip(want) {
            assert!(p.max_abs_diff(&Vector::from(w)) < 1e-12);
        }
    }

    #[test]
    fn circle_chords_are_equal() {
        let b = make_euclidean_ball(2).unwrap();
        let table = circle();
        let start = table.wall_point(&[0.3]);
        let s = TrajectoryState::new(start, Vector::from([-1.0, 0.4])).unwrap();
        let traj = run_trajectory(&b, &table, &s, 20).unwrap();
        let first = traj.segment_lengths[1];
        for len in &traj.segment_lengths[1..] {
            assert!((len - first).abs() < 1e-12);
        }
    }

    #[test]
    fn run_requires_a_bounce() {
        let b = make_euclidean_ball(2).unwrap();
        let s = TrajectoryState::new(Vector::zeros(2), Vector::from([1.0, 0.0])).unwrap();
        assert!(run_trajectory(&b, &circle(), &s, 0).is_err());
    }

    #[test]
    fn oracle_symmetric_configuration() {
        let b = make_euclidean_ball(2).unwrap();
        let (q1, q3) = (Vector::from([-0.2, 0.5]), Vector::from([0.2, 0.5]));
        let x = reflection_oracle(&b, &circle(), &q1, &q3).unwrap();
        assert!(x[0].abs() < 1e-7);
        assert!((x[1] - 1.0).abs() < 1e-12);
        assert!(oracle_deviation(&b, &circle(), &q1, &q3).unwrap() < 1e-6);
    }

    #[test]
    fn oracle_reports_mirror_pair_of_minima() {
        // the top of the circle is a local maximum here; the two minima are mirror images
        let b = make_euclidean_ball(2).unwrap();
        let r = reflection_oracle(
            &b,
            &circle(),
            &Vector::from([-0.5, 0.2]),
            &Vector::from([0.5, 0.2]),
        );
        match r {
            Err(Error::AmbiguousOracle { first, second }) => {
                assert!((first - second).abs() <= 1e-9 * first)
            }
            other => panic!("{other:?}"),
        }
        let (q1, q3) = (Vector::from([-0.5, 0.2]), Vector::from([0.5, 0.25]));
        let x = reflection_oracle(&b, &circle(), &q1, &q3).unwrap();
        let n = x.normalized();
        assert!((ray_angle(&(&x - &q1), &n) - ray_angle(&(&x - &q3), &n)).abs() < 1e-7);
    }

    #[test]
    fn oracle_mirror_angles() {
        let b = make_euclidean_ball(2).unwrap();
        let (q1, q3) = (Vector::from([-0.3, 0.1]), Vector::from([0.4, -0.5]));
        let x = reflection_oracle(&b, &circle(), &q1, &q3).unwrap();
        // Euclidean law: angles of (x − q1) and (x − q3) with the radius agree
        let n = x.normalized();
        let a1 = ray_angle(&(&x - &q1), &n);
        let a3 = ray_angle(&(&x - &q3), &n);
        assert!((a1 - a3).abs() < 1e-7);
    }

    #[test]
    fn oracle_reports_ambiguity() {
        let b = make_euclidean_ball(2).unwrap();
        let r = reflection_oracle(
            &b,
            &circle(),
            &Vector::from([-0.5, 0.0]),
            &Vector::from([0.5, 0.0]),
        );
        assert!(matches!(r, Err(Error::AmbiguousOracle { .. })));
    }

    #[test]
    fn csv_layout() {
        let b = make_euclidean_ball(2).unwrap();
        let s = TrajectoryState::new(Vector::zeros(2), Vector::from([1.0, 0.0])).unwrap();
        let traj = run_trajectory(&b, &circle(), &s, 4).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 6);
        assert_eq!(
            lines[0],
            "bounce_index,position_0,position_1,direction_0,direction_1,segment_length,lambda"
        );
        assert!(lines[1].starts_with("0,0.0000000000000000e0,"));
    }
}
