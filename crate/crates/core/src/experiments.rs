//! Seeded certification experiments and their JSON reports.
//!
//! Each experiment samples a family of configurations, measures the largest
//! deviation from the claimed identity and compares it with a fixed
//! tolerance. All randomness comes from [`seeded_rng`] with a per-experiment
//! stream, and aggregation is a sequential max/mean, so reports are
//! byte-identical for a given seed.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::conic::{
    corollary_constant, fit_focal_conic, normed_ellipse_sum, ratio_sum, stratified_angles,
    ConfocalPair, FocalEllipse,
};
use crate::dynamics::{
    euclidean_mirror, oracle_deviation, reflect, run_trajectory, TrajectoryState,
};
use crate::error::{Error, Result};
use crate::gauge::{
    make_centered_ellipsoid, make_euclidean_ball, make_focal_ellipsoid, Body, BodyDescriptor,
    Gauge, GaugeBody,
};
use crate::linalg::{pairing, ray_angle, Covector, Vector};
use crate::projective::ProjectiveMap;
use crate::sampling::{
    interior_start, outgoing_direction, seeded_rng, uniform, unit_vector, valid_map, SeededRng,
};
use crate::table::{EllipsoidTable, Table, TableDescriptor};

pub const DEFAULT_SEED: u64 = 42;

pub const TOL_COROLLARY: f64 = 1e-9;
pub const TOL_ELLIPTIC_REFLECTION: f64 = 1e-9;
pub const TOL_RAY_INVARIANCE: f64 = 1e-9;
pub const TOL_TRAJECTORY_INVARIANCE: f64 = 1e-7;
pub const TOL_DUALITY: f64 = 1e-9;
pub const TOL_MOMENTUM_TRANSFORM: f64 = 1e-9;
pub const TOL_SPHERE_IMAGE: f64 = 1e-9;
pub const TOL_NORMED_ELLIPSE: f64 = 1e-9;
pub const TOL_VARIATIONAL: f64 = 1e-6;

/// Smallest `|n(u)|` used when sampling random incidences.
const MIN_SAMPLED_SLOPE: f64 = 1e-3;

/// Smallest validity margin of randomly drawn maps.
const MIN_MAP_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub params: Value,
    pub samples: usize,
    pub max_abs_deviation: f64,
    pub reference_value: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub seed: u64,
}

impl ExperimentReport {
    pub fn new(
        experiment: &str,
        params: &impl Serialize,
        samples: usize,
        max_abs_deviation: f64,
        reference_value: Option<f64>,
        tolerance: f64,
        seed: u64,
    ) -> Self {
        Self {
            experiment: experiment.to_string(),
            params: serde_json::to_value(params).expect("params serialize"),
            samples,
            max_abs_deviation,
            reference_value,
            tolerance,
            // NaN deviations fail
            pass: max_abs_deviation <= tolerance,
            seed,
        }
    }

    /// Report for an experiment that could not run to completion.
    pub fn failed(experiment: &str, params: Value, tolerance: f64, seed: u64) -> Self {
        Self {
            experiment: experiment.to_string(),
            params,
            samples: 0,
            max_abs_deviation: f64::NAN,
            reference_value: None,
            tolerance,
            pass: false,
            seed,
        }
    }
}

/// The experiments known to `verify` and `report-all`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Corollary,
    EllipticReflection,
    RayInvariance,
    ReflectionInvariance,
    DualityRoundtrip,
    MomentumTransform,
    SphereImage,
    NormedEllipse,
    VariationalOracle,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::Corollary,
        Experiment::EllipticReflection,
        Experiment::RayInvariance,
        Experiment::ReflectionInvariance,
        Experiment::DualityRoundtrip,
        Experiment::MomentumTransform,
        Experiment::SphereImage,
        Experiment::NormedEllipse,
        Experiment::VariationalOracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Corollary => "corollary",
            Experiment::EllipticReflection => "elliptic-reflection",
            Experiment::RayInvariance => "ray-invariance",
            Experiment::ReflectionInvariance => "reflection-invariance",
            Experiment::DualityRoundtrip => "duality-roundtrip",
            Experiment::MomentumTransform => "momentum-transform",
            Experiment::SphereImage => "sphere-image",
            Experiment::NormedEllipse => "normed-ellipse",
            Experiment::VariationalOracle => "variational-oracle",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }

    fn stream(self) -> u64 {
        Self::ALL.iter().position(|e| *e == self).expect("listed") as u64 + 1
    }

    fn tolerance(self) -> f64 {
        match self {
            Experiment::Corollary => TOL_COROLLARY,
            Experiment::EllipticReflection => TOL_ELLIPTIC_REFLECTION,
            Experiment::RayInvariance => TOL_RAY_INVARIANCE,
            Experiment::ReflectionInvariance => TOL_TRAJECTORY_INVARIANCE,
            Experiment::DualityRoundtrip => TOL_DUALITY,
            Experiment::MomentumTransform => TOL_MOMENTUM_TRANSFORM,
            Experiment::SphereImage => TOL_SPHERE_IMAGE,
            Experiment::NormedEllipse => TOL_NORMED_ELLIPSE,
            Experiment::VariationalOracle => TOL_VARIATIONAL,
        }
    }

    /// Runs the experiment with JSON parameters (missing fields take their
    /// defaults).
    pub fn run(self, params: &Value, seed: u64) -> Result<ExperimentReport> {
        fn parse<T: for<'de> Deserialize<'de>>(v: &Value) -> Result<T> {
            let v = if v.is_null() {
                Value::Object(Default::default())
            } else {
                v.clone()
            };
            serde_json::from_value(v)
                .map_err(|e| Error::InvalidInput(format!("experiment parameters: {e}")))
        }
        match self {
            Experiment::Corollary => verify_corollary(&parse(params)?, seed).map(|o| o.report),
            Experiment::EllipticReflection => elliptic_reflection_suite(&parse(params)?, seed),
            Experiment::RayInvariance => ray_invariance(&parse(params)?, seed),
            Experiment::ReflectionInvariance => {
                trajectory_invariance(&parse(params)?, seed).map(|o| o.report)
            }
            Experiment::DualityRoundtrip => duality_roundtrip(&parse(params)?, seed),
            Experiment::MomentumTransform => momentum_transform_identity(&parse(params)?, seed),
            Experiment::SphereImage => sphere_image(&parse(params)?, seed),
            Experiment::NormedEllipse => normed_ellipse(&parse(params)?, seed),
            Experiment::VariationalOracle => variational_oracle(&parse(params)?, seed),
        }
    }
}

fn rng_for(experiment: Experiment, seed: u64) -> SeededRng {
    seeded_rng(seed, experiment.stream())
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    // NaN-propagating max
    values.into_iter().fold(0.0, |acc: f64, v| {
        if v.is_nan() || acc.is_nan() {
            f64::NAN
        } else {
            acc.max(v)
        }
    })
}

// ---------------------------------------------------------------------------
// Focal-ratio identity for confocal ellipses

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorollaryParams {
    pub f1: [f64; 2],
    pub f2: [f64; 2],
    pub l1: f64,
    pub l2: f64,
    /// Focal distance; when given, the foci are `(±d/2, 0)`.
    pub d: Option<f64>,
    pub samples: usize,
}

impl Default for CorollaryParams {
    fn default() -> Self {
        Self {
            f1: [-1.0, 0.0],
            f2: [1.0, 0.0],
            l1: 4.0,
            l2: 6.0,
            d: None,
            samples: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorollaryOutcome {
    pub report: ExperimentReport,
    pub mean: f64,
    pub stdev: f64,
}

/// Samples the inner ellipse and compares every focal-ratio sum, and their
/// mean, with the closed-form constant.
pub fn verify_corollary(params: &CorollaryParams, seed: u64) -> Result<CorollaryOutcome> {
    let exp = Experiment::Corollary;
    let (f1, f2) = match params.d {
        Some(d) => ([-0.5 * d, 0.0], [0.5 * d, 0.0]),
        None => (params.f1, params.f2),
    };
    let pair = ConfocalPair::new(Vector::from(f1), Vector::from(f2), params.l1, params.l2)?;
    let constant = corollary_constant(params.l1, params.l2, pair.focal_distance())?;
    let mut rng = rng_for(exp, seed);
    let angles = stratified_angles(params.samples, || uniform(&mut rng, 0.0, 1.0));
    let values = angles
        .iter()
        .map(|&th| ratio_sum(&pair, &pair.inner().point(th)))
        .collect::<Result<Vec<_>>>()?;
    let n = values.len().max(1) as f64;
    let mean = values.iter().sum::<f64>() / n;
    let stdev = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let deviation = max_of(
        values
            .iter()
            .map(|v| (v - constant).abs())
            .chain([(mean - constant).abs()]),
    );
    Ok(CorollaryOutcome {
        report: ExperimentReport::new(
            exp.name(),
            params,
            values.len(),
            deviation,
            Some(constant),
            exp.tolerance(),
            seed,
        ),
        mean,
        stdev,
    })
}

// ---------------------------------------------------------------------------
// Focal-ellipse norms reflect like the Euclidean mirror

/// Compares [`reflect`] under the focal ellipsoid `(axis, a, c)` with the
/// Euclidean mirror law over random incidences; the deviation is the largest
/// angle between outgoing rays. The tolerance is `1e-9` rad up to
/// eccentricity 0.9 and `1e-7` rad beyond.
pub fn verify_elliptic_reflection(
    a: f64,
    c: f64,
    axis: &Vector,
    samples: usize,
    seed: u64,
) -> Result<ExperimentReport> {
    let exp = Experiment::EllipticReflection;
    let mut rng = rng_for(exp, seed);
    let deviation = elliptic_reflection_deviation(&mut rng, a, c, axis, samples)?;
    let tolerance = if c / a <= 0.9 {
        TOL_ELLIPTIC_REFLECTION
    } else {
        1e-7
    };
    #[derive(Serialize)]
    struct Params<'a> {
        a: f64,
        c: f64,
        axis: &'a [f64],
    }
    let params = Params {
        a,
        c,
        axis: axis.coords(),
    };
    Ok(ExperimentReport::new(
        exp.name(),
        &params,
        samples,
        deviation,
        None,
        tolerance,
        seed,
    ))
}

fn elliptic_reflection_deviation(
    rng: &mut SeededRng,
    a: f64,
    c: f64,
    axis: &Vector,
    samples: usize,
) -> Result<f64> {
    let body = make_focal_ellipsoid(axis.clone(), a, c, axis.dim())?;
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let normal = unit_vector(rng, axis.dim()).flat();
        let u = outgoing_direction(rng, &normal, MIN_SAMPLED_SLOPE);
        let (out, _) = reflect(&body, &u, &normal)?;
        worst = max_of([worst, ray_angle(&out, &euclidean_mirror(&u, &normal))]);
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EllipticReflectionParams {
    pub a: f64,
    pub eccentricities: Vec<f64>,
    /// Incidences per eccentricity.
    pub samples: usize,
    pub dim: usize,
}

impl Default for EllipticReflectionParams {
    fn default() -> Self {
        Self {
            a: 2.0,
            eccentricities: vec![0.0, 0.25, 0.5, 0.75, 0.9],
            samples: 1000,
            dim: 2,
        }
    }
}

/// [`verify_elliptic_reflection`] over several eccentricities with random
/// axis directions.
pub fn elliptic_reflection_suite(
    params: &EllipticReflectionParams,
    seed: u64,
) -> Result<ExperimentReport> {
    let exp = Experiment::EllipticReflection;
    let mut rng = rng_for(exp, seed);
    let mut worst = 0.0f64;
    let mut tolerance = TOL_ELLIPTIC_REFLECTION;
    for &ecc in &params.eccentricities {
        if !(0.0..1.0).contains(&ecc) {
            return Err(Error::InvalidParameter(format!(
                "eccentricity {ecc} outside [0, 1)"
            )));
        }
        if ecc > 0.9 {
            tolerance = 1e-7;
        }
        let axis = unit_vector(&mut rng, params.dim);
        let d = elliptic_reflection_deviation(
            &mut rng,
            params.a,
            ecc * params.a,
            &axis,
            params.samples,
        )?;
        worst = max_of([worst, d]);
    }
    Ok(ExperimentReport::new(
        exp.name(),
        params,
        params.samples * params.eccentricities.len(),
        worst,
        None,
        tolerance,
        seed,
    ))
}

// ---------------------------------------------------------------------------
// Reflection law is unchanged by the projective image, ray level

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RayInvarianceParams {
    /// Random (body, map, incidence) tuples, alternating dimensions 2 and 3.
    pub samples: usize,
}

impl Default for RayInvarianceParams {
    fn default() -> Self {
        Self { samples: 100 }
    }
}

fn random_base(rng: &mut SeededRng, dim: usize, ellipsoid: bool) -> Body {
    if ellipsoid {
        make_centered_ellipsoid((0..dim).map(|_| uniform(rng, 0.5, 2.0)).collect())
            .expect("positive axes")
    } else {
        make_euclidean_ball(dim).expect("dim >= 2")
    }
}

pub fn ray_invariance(params: &RayInvarianceParams, seed: u64) -> Result<ExperimentReport> {
    let exp = Experiment::RayInvariance;
    let mut rng = rng_for(exp, seed);
    let mut worst = 0.0f64;
    for i in 0..params.samples {
        let dim = 2 + i % 2;
        let base = random_base(&mut rng, dim, (i / 2) % 2 == 1);
        let map = valid_map(&mut rng, &base, MIN_MAP_MARGIN);
        let image = base.clone().image(map)?;
        let normal = unit_vector(&mut rng, dim).flat();
        let u = outgoing_direction(&mut rng, &normal, MIN_SAMPLED_SLOPE);
        let (out_k, _) = reflect(&base, &u, &normal)?;
        let (out_t, _) = reflect(&image, &u, &normal)?;
        worst = max_of([worst, ray_angle(&out_k, &out_t)]);
    }
    Ok(ExperimentReport::new(
        exp.name(),
        params,
        params.samples,
        worst,
        None,
        exp.tolerance(),
        seed,
    ))
}

// ---------------------------------------------------------------------------
// Reflection law is unchanged by the projective image, trajectory level

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectoryInvarianceParams {
    /// Fixed base body; when absent together with `t`, `v` and `table`,
    /// every sample draws a fresh random configuration.
    pub base: Option<BodyDescriptor>,
    pub t: Option<f64>,
    pub v: Option<Vec<f64>>,
    pub table: Option<TableDescriptor>,
    pub samples: usize,
    pub bounces: usize,
}

impl Default for TrajectoryInvarianceParams {
    fn default() -> Self {
        Self {
            base: None,
            t: None,
            v: None,
            table: None,
            samples: 10,
            bounces: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceOutcome {
    pub report: ExperimentReport,
    /// Angle between the outgoing rays under both bodies at every bounce.
    pub ray_deviations: Vec<f64>,
}

/// Pairs a trajectory under `base` with one under `image` from the same
/// start, returning the largest coordinate deviation of bounce points and
/// the per-bounce ray angles.
fn paired_trajectories(
    base: &Body,
    image: &Body,
    table: &EllipsoidTable,
    start: &TrajectoryState,
    bounces: usize,
) -> Result<(f64, Vec<f64>)> {
    let tk = run_trajectory(base, table, start, bounces).map_err(|a| a.error)?;
    let tt = run_trajectory(image, table, start, bounces).map_err(|a| a.error)?;
    let positional = max_of(
        tk.positions()
            .zip(tt.positions())
            .map(|(a, b)| a.max_abs_diff(b)),
    );
    let rays = tk
        .states
        .iter()
        .zip(&tt.states)
        .skip(1)
        .map(|(a, b)| ray_angle(&a.direction, &b.direction))
        .collect();
    Ok((positional, rays))
}

/// Runs paired trajectories under the base body and its image under
/// `(t, v)` on a fixed table from `samples` random starts.
pub fn verify_reflection_invariance(
    base: &BodyDescriptor,
    t: f64,
    v: &Covector,
    table: &TableDescriptor,
    samples: usize,
    bounces: usize,
    seed: u64,
) -> Result<InvarianceOutcome> {
    let params = TrajectoryInvarianceParams {
        base: Some(base.clone()),
        t: Some(t),
        v: Some(v.coords().to_vec()),
        table: Some(table.clone()),
        samples,
        bounces,
    };
    trajectory_invariance(&params, seed)
}

pub fn trajectory_invariance(
    params: &TrajectoryInvarianceParams,
    seed: u64,
) -> Result<InvarianceOutcome> {
    let exp = Experiment::ReflectionInvariance;
    let mut rng = rng_for(exp, seed);
    let fixed =
        params.base.is_some() || params.t.is_some() || params.v.is_some() || params.table.is_some();
    let mut worst = 0.0f64;
    let mut ray_deviations = Vec::new();
    if fixed {
        let base = params
            .base
            .clone()
            .unwrap_or(BodyDescriptor::EuclideanBall { dim: 2 })
            .build()?;
        let dim = base.dim();
        let map = ProjectiveMap::new(
            params.t.unwrap_or(1.0),
            Covector::new(params.v.clone().unwrap_or_else(|| vec![0.0; dim])),
        )?;
        let image = base.clone().image(map)?;
        let table = match &params.table {
            Some(t) => t.build()?,
            None => EllipsoidTable::centered(
                std::iter::once(3.0)
                    .chain(std::iter::repeat(2.0))
                    .take(dim)
                    .collect(),
            )?,
        };
        if table.dim() != dim {
            return Err(Error::InvalidDimension(
                "table and body dimensions differ".into(),
            ));
        }
        for _ in 0..params.samples {
            let start = interior_start(&mut rng, &table);
            let (pos, rays) = paired_trajectories(&base, &image, &table, &start, params.bounces)?;
            worst = max_of([worst, pos]);
            ray_deviations.extend(rays);
        }
    } else {
        for i in 0..params.samples {
            let dim = 2 + i % 2;
            let base = random_base(&mut rng, dim, (i / 2) % 2 == 1);
            let map = valid_map(&mut rng, &base, MIN_MAP_MARGIN);
            let image = base.clone().image(map)?;
            let center: Vector = (0..dim)
                .map(|_| uniform(&mut rng, -0.5, 0.5))
                .collect::<Vec<_>>()
                .into();
            let table = EllipsoidTable::new(
                center,
                (0..dim).map(|_| uniform(&mut rng, 1.0, 3.0)).collect(),
            )?;
            let start = interior_start(&mut rng, &table);
            let (pos, rays) = paired_trajectories(&base, &image, &table, &start, params.bounces)?;
            worst = max_of([worst, pos]);
            ray_deviations.extend(rays);
        }
    }
    Ok(InvarianceOutcome {
        report: ExperimentReport::new(
            exp.name(),
            params,
            params.samples,
            worst,
            None,
            exp.tolerance(),
            seed,
        ),
        ray_deviations,
    })
}

// ---------------------------------------------------------------------------
// Velocity/momentum duality on every registered body

/// One representative of every body kind, in dimensions 2 and 3.
pub fn registered_bodies() -> Vec<Body> {
    let descriptors = [
        r#"{"kind":"euclidean-ball","dim":2}"#,
        r#"{"kind":"euclidean-ball","dim":3}"#,
        r#"{"kind":"centered-ellipsoid","semi_axes":[2.0,1.0]}"#,
        r#"{"kind":"centered-ellipsoid","semi_axes":[1.5,1.0,0.5]}"#,
        r#"{"kind":"focal-ellipsoid","axis":[1.0,0.0],"a":2.0,"c":1.0}"#,
        r#"{"kind":"focal-ellipsoid","axis":[0.0,0.6,0.8],"a":1.5,"c":0.9}"#,
        r#"{"kind":"projective-image","base":{"kind":"centered-ellipsoid","semi_axes":[2.0,1.0]},"map":{"t":1.3,"v":[0.4,-0.3]}}"#,
        r#"{"kind":"projective-image","base":{"kind":"euclidean-ball","dim":3},"map":{"t":1.0,"v":[-0.5,0.2,0.1]}}"#,
        r#"{"kind":"projective-image","base":{"kind":"focal-ellipsoid","axis":[0.6,-0.8],"a":1.0,"c":0.5},"map":{"t":0.8,"v":[0.1,0.2]}}"#,
    ];
    descriptors
        .iter()
        .map(|d| {
            serde_json::from_str::<BodyDescriptor>(d)
                .expect("valid descriptor")
                .build()
                .expect("valid body")
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DualityParams {
    /// Random directions per body.
    pub samples: usize,
}

impl Default for DualityParams {
    fn default() -> Self {
        Self { samples: 1000 }
    }
}

/// Largest violation of the Euler identity (relative), the unit dual gauge
/// of momenta and the velocity ↔ momentum inversion at `x`.
pub fn duality_residual<B: GaugeBody + ?Sized>(body: &B, x: &Vector) -> Result<f64> {
    let g = body.gauge(x);
    let p = body.momentum(x)?;
    let euler = (pairing(&p, x) - g).abs() / g;
    let unit = (body.dual_gauge(&p) - 1.0).abs();
    let inversion = body
        .velocity_from_momentum(&p)?
        .max_abs_diff(&x.scale(1.0 / g));
    Ok(max_of([euler, unit, inversion]))
}

pub fn duality_roundtrip(params: &DualityParams, seed: u64) -> Result<ExperimentReport> {
    let exp = Experiment::DualityRoundtrip;
    let mut rng = rng_for(exp, seed);
    let bodies = registered_bodies();
    let mut worst = 0.0f64;
    for body in &bodies {
        for _ in 0..params.samples {
            let x =
                unit_vector(&mut rng, body.dim()).scale(10f64.powf(uniform(&mut rng, -1.0, 1.0)));
            worst = max_of([worst, duality_residual(body, &x)?]);
        }
    }
    Ok(ExperimentReport::new(
        exp.name(),
        params,
        params.samples * bodies.len(),
        worst,
        None,
        exp.tolerance(),
        seed,
    ))
}

// ---------------------------------------------------------------------------
// Momenta transform by the dual homothety

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentumTransformParams {
    pub samples: usize,
}

impl Default for MomentumTransformParams {
    fn default() -> Self {
        Self { samples: 1000 }
    }
}

/// Fourth-order central-difference gradient of the gauge, independent of
/// any closed-form gradient.
pub fn finite_difference_gradient<G: Gauge + ?Sized>(body: &G, x: &Vector, h: f64) -> Covector {
    (0..x.dim())
        .map(|i| {
            let e = Vector::basis(x.dim(), i);
            let f = |s: f64| body.gauge(&x.axpy(s, &e));
            (f(-2.0 * h) - 8.0 * f(-h) + 8.0 * f(h) - f(2.0 * h)) / (12.0 * h)
        })
        .collect::<Vec<_>>()
        .into()
}

/// Checks `momentum(T, u) = t·momentum(K, u) + v` against a finite-difference
/// gradient of the image gauge, and checks that the transformed momentum
/// inverts back to `u` through the dual side of `T`.
pub fn momentum_transform_identity(
    params: &MomentumTransformParams,
    seed: u64,
) -> Result<ExperimentReport> {
    let exp = Experiment::MomentumTransform;
    let mut rng = rng_for(exp, seed);
    let bases = [
        make_euclidean_ball(2)?,
        make_centered_ellipsoid(vec![2.0, 1.0])?,
        make_focal_ellipsoid(Vector::from([1.0, 0.0]), 2.0, 1.0, 2)?,
        make_euclidean_ball(3)?,
        make_centered_ellipsoid(vec![1.5, 1.0, 0.75])?,
    ];
    let mut worst = 0.0f64;
    for i in 0..params.samples {
        let base = &bases[i % bases.len()];
        let map = valid_map(&mut rng, base, MIN_MAP_MARGIN);
        let image = base.clone().image(map.clone())?;
        let u = unit_vector(&mut rng, base.dim());
        let expected = map.momentum_transform(&base.momentum(&u)?);
        let numeric = finite_difference_gradient(&image, &u, 1e-3);
        let implemented = image.momentum(&u)?;
        let back = image.velocity_from_momentum(&expected)?;
        let unit_u = u.scale(1.0 / image.gauge(&u));
        worst = max_of([
            worst,
            numeric.max_abs_diff(&expected),
            implemented.max_abs_diff(&expected),
            back.max_abs_diff(&unit_u),
        ]);
    }
    Ok(ExperimentReport::new(
        exp.name(),
        params,
        params.samples,
        worst,
        None,
        exp.tolerance(),
        seed,
    ))
}

// ---------------------------------------------------------------------------
// Images of the unit circle are ellipses with a focus at the origin

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SphereImageParams {
    /// Number of random maps; the first one has `v = 0`.
    pub samples: usize,
    /// Boundary points per map.
    pub points: usize,
    /// A fixed map instead of random ones.
    pub t: Option<f64>,
    pub v: Option<Vec<f64>>,
}

impl Default for SphereImageParams {
    fn default() -> Self {
        Self {
            samples: 20,
            points: 64,
            t: None,
            v: None,
        }
    }
}

/// Fits the boundary of the image of the unit disc and compares it with the
/// expected focal ellipse `t·|x| + v(x) = 1`. Returns the combined deviation
/// (fit residual, relative axis lengths, eccentricity-weighted direction).
pub fn sphere_image_deviation(map: &ProjectiveMap, points: usize) -> Result<f64> {
    let ball = make_euclidean_ball(2)?;
    let validity = map.check_validity(&ball);
    if !validity.valid {
        return Err(Error::DegenerateImage {
            margin: validity.margin,
        });
    }
    let boundary = (0..points)
        .map(|k| {
            let th = std::f64::consts::TAU * k as f64 / points as f64;
            map.inverse(&Vector::from([th.cos(), th.sin()]))
        })
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_focal_conic(&boundary)?;
    let latus = 1.0 / map.t;
    let ecc = map.v.norm() / map.t;
    let a = latus / (1.0 - ecc * ecc);
    let c = ecc * a;
    let mut dev = max_of([fit.residual, (fit.a - a).abs() / a, (fit.c - c).abs() / a]);
    if ecc > 0.0 {
        let axis = (-&map.v).sharp().normalized();
        dev = max_of([dev, ecc * fit.axis.max_abs_diff(&axis)]);
    }
    Ok(dev)
}

pub fn sphere_image(params: &SphereImageParams, seed: u64) -> Result<ExperimentReport> {
    let exp = Experiment::SphereImage;
    let mut rng = rng_for(exp, seed);
    let ball = make_euclidean_ball(2)?;
    let maps: Vec<ProjectiveMap> = match (&params.t, &params.v) {
        (None, None) => (0..params.samples)
            .map(|i| {
                let m = valid_map(&mut rng, &ball, MIN_MAP_MARGIN);
                if i == 0 {
                    ProjectiveMap::identity(2)
                        .then(&ProjectiveMap::new(m.t, Covector::zeros(2)).expect("t > 0"))
                } else {
                    m
                }
            })
            .collect(),
        (t, v) => vec![ProjectiveMap::new(
            t.unwrap_or(1.0),
            Covector::new(v.clone().unwrap_or_else(|| vec![0.0, 0.0])),
        )?],
    };
    let mut worst = 0.0f64;
    for map in &maps {
        worst = max_of([worst, sphere_image_deviation(map, params.points)?]);
    }
    Ok(ExperimentReport::new(
        exp.name(),
        params,
        maps.len(),
        worst,
        None,
        exp.tolerance(),
        seed,
    ))
}

// ---------------------------------------------------------------------------
// Normed and Euclidean ellipses with the same foci coincide

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormedEllipseParams {
    /// `(a, c)` pairs of the focal-ellipse norm.
    pub cases: Vec<[f64; 2]>,
    /// Full major axis of the Euclidean ellipse with foci `0` and `2c·axis`.
    pub l: f64,
    pub samples: usize,
}

impl Default for NormedEllipseParams {
    fn default() -> Self {
        Self {
            cases: vec![[2.0, 1.0], [3.0, 0.5]],
            l: 4.0,
            samples: 1000,
        }
    }
}

/// Spread `(max − min)/mean` of the normed focal sum over one Euclidean
/// ellipse.
pub fn normed_ellipse_spread(a: f64, c: f64, axis: &Vector, l: f64, angles: &[f64]) -> Result<f64> {
    let f = axis.scale(2.0 * c);
    let ellipse = FocalEllipse::new(Vector::zeros(2), f, l)?;
    let values = angles
        .iter()
        .map(|&th| normed_ellipse_sum(a, c, axis, l, &ellipse.point(th)))
        .collect::<Result<Vec<_>>>()?;
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let max = values.iter().cloned().fold(f64::MIN, f64::max);
    let min = values.iter().cloned().fold(f64::MAX, f64::min);
    Ok((max - min) / mean)
}

pub fn normed_ellipse(params: &NormedEllipseParams, seed: u64) -> Result<ExperimentReport> {
    let exp = Experiment::NormedEllipse;
    let mut rng = rng_for(exp, seed);
    let mut worst = 0.0f64;
    for &[a, c] in &params.cases {
        let axis = unit_vector(&mut rng, 2);
        let angles = stratified_angles(params.samples, || uniform(&mut rng, 0.0, 1.0));
        worst = max_of([
            worst,
            normed_ellipse_spread(a, c, &axis, params.l, &angles)?,
        ]);
    }
    Ok(ExperimentReport::new(
        exp.name(),
        params,
        params.samples * params.cases.len(),
        worst,
        None,
        exp.tolerance(),
        seed,
    ))
}

// ---------------------------------------------------------------------------
// Agreement with the variational oracle

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VariationalParams {
    /// Planar configurations with a unique oracle minimizer.
    pub samples: usize,
}

impl Default for VariationalParams {
    fn default() -> Self {
        Self { samples: 50 }
    }
}

pub fn variational_oracle(params: &VariationalParams, seed: u64) -> Result<ExperimentReport> {
    let exp = Experiment::VariationalOracle;
    let mut rng = rng_for(exp, seed);
    let mut worst = 0.0f64;
    let mut accepted = 0;
    let mut attempts = 0;
    while accepted < params.samples {
        attempts += 1;
        if attempts > 10 * params.samples.max(1) {
            return Err(Error::AmbiguousOracle {
                first: f64::NAN,
                second: f64::NAN,
            });
        }
        let body = match attempts % 4 {
            0 => make_euclidean_ball(2)?,
            1 => make_centered_ellipsoid(vec![
                uniform(&mut rng, 0.5, 2.0),
                uniform(&mut rng, 0.5, 2.0),
            ])?,
            2 => make_focal_ellipsoid(
                unit_vector(&mut rng, 2),
                1.0,
                uniform(&mut rng, 0.0, 0.9),
                2,
            )?,
            _ => {
                let base = random_base(&mut rng, 2, true);
                let map = valid_map(&mut rng, &base, MIN_MAP_MARGIN);
                base.image(map)?
            }
        };
        let table = EllipsoidTable::centered(vec![
            uniform(&mut rng, 1.0, 3.0),
            uniform(&mut rng, 1.0, 3.0),
        ])?;
        let inside = |rng: &mut SeededRng| -> Vector {
            let w = unit_vector(rng, 2).scale(0.8 * uniform(rng, 0.0, 1.0));
            Vector::from([w[0] * table.semi_axes()[0], w[1] * table.semi_axes()[1]])
        };
        let q1 = inside(&mut rng);
        let q3 = inside(&mut rng);
        match oracle_deviation(&body, &table, &q1, &q3) {
            Ok(d) => {
                worst = max_of([worst, d]);
                accepted += 1;
            }
            Err(Error::AmbiguousOracle { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(ExperimentReport::new(
        exp.name(),
        params,
        accepted,
        worst,
        None,
        exp.tolerance(),
        seed,
    ))
}

// ---------------------------------------------------------------------------
// Aggregate

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub seed: u64,
    pub all_pass: bool,
    pub failing: Vec<String>,
    pub experiments: Vec<ExperimentReport>,
}

/// Every experiment with default parameters under one seed. Experiments that
/// error out are recorded as failed reports.
pub fn report_all(seed: u64) -> AggregateReport {
    let experiments: Vec<ExperimentReport> = Experiment::ALL
        .into_iter()
        .map(|e| {
            e.run(&Value::Null, seed).unwrap_or_else(|_| {
                ExperimentReport::failed(e.name(), Value::Null, e.tolerance(), seed)
            })
        })
        .collect();
    let failing: Vec<String> = experiments
        .iter()
        .filter(|r| !r.pass)
        .map(|r| r.experiment.clone())
        .collect();
    AggregateReport {
        seed,
        all_pass: failing.is_empty(),
        failing,
        experiments,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(Experiment::from_name(e.name()), Some(e));
        }
        assert_eq!(Experiment::from_name("nope"), None);
    }

    #[test]
    fn report_pass_flag_follows_tolerance() {
        let p = DualityParams::default();
        assert!(ExperimentReport::new("x", &p, 1, 1e-10, None, 1e-9, 0).pass);
        assert!(!ExperimentReport::new("x", &p, 1, 1e-8, None, 1e-9, 0).pass);
        assert!(!ExperimentReport::new("x", &p, 1, f64::NAN, None, 1e-9, 0).pass);
    }

    #[test]
    fn report_json_fields() {
        let r = ExperimentReport::new(
            "corollary",
            &CorollaryParams::default(),
            3,
            0.0,
            Some(1.25),
            1e-9,
            7,
        );
        let v = serde_json::to_value(&r).unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        for k in [
            "experiment",
            "params",
            "samples",
            "max_abs_deviation",
            "reference_value",
            "tolerance",
            "pass",
            "seed",
        ] {
            assert!(keys.contains(&k.to_string()), "missing {k}");
        }
        assert_eq!(keys.len(), 8);
    }

    #[test]
    fn elliptic_reflection_circle_is_exact() {
        let r = verify_elliptic_reflection(2.0, 0.0, &Vector::from([1.0, 0.0]), 200, 1).unwrap();
        assert!(r.max_abs_deviation < 1e-14, "{}", r.max_abs_deviation);
    }

    #[test]
    fn elliptic_reflection_high_eccentricity() {
        let r = verify_elliptic_reflection(2.0, 1.999, &Vector::from([0.6, 0.8]), 500, 2).unwrap();
        assert!(r.pass, "deviation {}", r.max_abs_deviation);
        assert_eq!(r.tolerance, 1e-7);
    }

    #[test]
    fn identity_map_gives_zero_trajectory_deviation() {
        let out = verify_reflection_invariance(
            &BodyDescriptor::EuclideanBall { dim: 2 },
            1.0,
            &Covector::zeros(2),
            &TableDescriptor::Ellipsoid {
                center: vec![0.0, 0.0],
                semi_axes: vec![3.0, 2.0],
            },
            3,
            50,
            5,
        )
        .unwrap();
        assert_eq!(out.report.max_abs_deviation, 0.0);
        assert!(out.ray_deviations.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn sphere_image_rejects_invalid_map() {
        let m = ProjectiveMap::new(1.0, Covector::from([1.0, 0.0])).unwrap();
        assert!(matches!(
            sphere_image_deviation(&m, 32),
            Err(Error::DegenerateImage { .. })
        ));
    }

    #[test]
    fn unknown_parameter_rejected() {
        let v: Value = serde_json::json!({"bogus": 1});
        assert!(Experiment::Corollary.run(&v, 1).is_err());
    }
}
