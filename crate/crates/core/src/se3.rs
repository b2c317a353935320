//! Rigid transforms, the log-based distance on SE(3), and rotation sampling.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Matrix4, Quaternion, Unit, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solids::Dim;

/// A rotation stored as a unit quaternion with non-negative scalar part.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation {
    q: UnitQuaternion<f64>,
}

fn canonical(q: UnitQuaternion<f64>) -> UnitQuaternion<f64> {
    let c = q.quaternion().coords; // (x, y, z, w)
    let flip = if c.w != 0.0 {
        c.w < 0.0
    } else if c.x != 0.0 {
        c.x < 0.0
    } else if c.y != 0.0 {
        c.y < 0.0
    } else {
        c.z < 0.0
    };
    if flip {
        UnitQuaternion::new_unchecked(-q.into_inner())
    } else {
        q
    }
}

impl Rotation {
    pub fn identity() -> Self {
        Rotation { q: UnitQuaternion::identity() }
    }

    pub fn from_unit_quaternion(q: UnitQuaternion<f64>) -> Self {
        Rotation { q: canonical(q) }
    }

    /// From `[w, x, y, z]`; the input is normalised.
    pub fn from_wxyz(q: [f64; 4]) -> Self {
        Self::from_unit_quaternion(UnitQuaternion::from_quaternion(Quaternion::new(
            q[0], q[1], q[2], q[3],
        )))
    }

    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        match Unit::try_new(*axis, 1e-300) {
            Some(a) => Self::from_unit_quaternion(UnitQuaternion::from_axis_angle(&a, angle)),
            None => Self::identity(),
        }
    }

    /// Rotation by `theta` about +z.
    pub fn planar(theta: f64) -> Self {
        Self::from_axis_angle(&Vector3::z(), theta)
    }

    /// Rotation from a rotation vector (axis times angle).
    pub fn exp(omega: &Vector3<f64>) -> Self {
        Self::from_unit_quaternion(UnitQuaternion::from_scaled_axis(*omega))
    }

    pub fn from_matrix(m: &Matrix3<f64>) -> Self {
        Self::from_unit_quaternion(UnitQuaternion::from_matrix(m))
    }

    pub fn unit_quaternion(&self) -> UnitQuaternion<f64> {
        self.q
    }

    /// `[w, x, y, z]` with `w >= 0`.
    pub fn wxyz(&self) -> [f64; 4] {
        let c = self.q.quaternion().coords;
        [c.w, c.x, c.y, c.z]
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        self.q.to_rotation_matrix().into_inner()
    }

    pub fn compose(&self, other: &Rotation) -> Rotation {
        Rotation::from_unit_quaternion(self.q * other.q)
    }

    pub fn inverse(&self) -> Rotation {
        Rotation::from_unit_quaternion(self.q.inverse())
    }

    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.q * v
    }

    /// Rotation vector with angle in `[0, pi]`.
    pub fn log(&self) -> Vector3<f64> {
        let c = self.q.quaternion().coords;
        let u = Vector3::new(c.x, c.y, c.z);
        let s = u.norm();
        if s < 1e-12 {
            // sin(theta/2) ~ theta/2 with w ~ 1.
            return u * (2.0 / c.w.max(1e-300));
        }
        let theta = 2.0 * s.atan2(c.w);
        u * (theta / s)
    }

    /// Rotation angle in `[0, pi]`.
    pub fn angle(&self) -> f64 {
        let c = self.q.quaternion().coords;
        2.0 * Vector3::new(c.x, c.y, c.z).norm().atan2(c.w)
    }

    /// Angle of a rotation about +z, in `[0, 2 pi)`.
    pub fn planar_angle(&self) -> f64 {
        let c = self.q.quaternion().coords;
        (2.0 * c.z.atan2(c.w)).rem_euclid(TAU)
    }

    /// Geodesic angle between two rotations.
    pub fn angle_to(&self, other: &Rotation) -> f64 {
        self.inverse().compose(other).angle()
    }

    pub fn slerp(&self, other: &Rotation, s: f64) -> Rotation {
        Rotation::from_unit_quaternion(self.q.slerp(&other.q, s))
    }
}

/// Skew-symmetric matrix of `w`.
pub fn hat(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

/// Rigid motion `p -> R p + t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidTransform {
    pub rotation: Rotation,
    pub translation: Vector3<f64>,
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform { rotation: Rotation::identity(), translation: Vector3::zeros() }
    }

    pub fn new(rotation: Rotation, translation: Vector3<f64>) -> Self {
        RigidTransform { rotation, translation }
    }

    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation.compose(&other.rotation),
            translation: self.rotation.apply(&other.translation) + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let r = self.rotation.inverse();
        RigidTransform { rotation: r, translation: -r.apply(&self.translation) }
    }

    pub fn apply_point(&self, p: &nalgebra::Point3<f64>) -> nalgebra::Point3<f64> {
        nalgebra::Point3::from(self.rotation.apply(&p.coords) + self.translation)
    }

    pub fn matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation.matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Twist coordinates `(omega, v)` of the matrix logarithm.
    pub fn log(&self) -> (Vector3<f64>, Vector3<f64>) {
        let omega = self.rotation.log();
        let theta = omega.norm();
        // V^-1 = I - hat(w)/2 + c hat(w)^2
        let c = if theta < 1e-4 {
            let t2 = theta * theta;
            1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0
        } else {
            let half = theta / 2.0;
            (1.0 - half * half.cos() / half.sin()) / (theta * theta)
        };
        let t = self.translation;
        let wt = omega.cross(&t);
        let v = t - wt / 2.0 + omega.cross(&wt) * c;
        (omega, v)
    }

    pub fn exp(omega: &Vector3<f64>, v: &Vector3<f64>) -> RigidTransform {
        let theta = omega.norm();
        let (a, b) = if theta < 1e-4 {
            let t2 = theta * theta;
            (0.5 - t2 / 24.0, 1.0 / 6.0 - t2 / 120.0)
        } else {
            ((1.0 - theta.cos()) / (theta * theta), (theta - theta.sin()) / theta.powi(3))
        };
        let w = hat(omega);
        let vmat = Matrix3::identity() + w * a + w * w * b;
        RigidTransform { rotation: Rotation::exp(omega), translation: vmat * v }
    }

    /// Translation lerp with rotation slerp.
    pub fn interpolate(&self, other: &RigidTransform, s: f64) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation.slerp(&other.rotation, s),
            translation: self.translation.lerp(&other.translation, s),
        }
    }
}

/// Weights of the rotational and translational parts of the distance.
/// Translations are divided by `length_scale` before weighting.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricWeights {
    #[serde(default = "one")]
    pub rotation: f64,
    #[serde(default = "one")]
    pub translation: f64,
    #[serde(default = "one")]
    pub length_scale: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for MetricWeights {
    fn default() -> Self {
        MetricWeights { rotation: 1.0, translation: 1.0, length_scale: 1.0 }
    }
}

impl MetricWeights {
    pub fn with_length_scale(mut self, l: f64) -> Self {
        self.length_scale = l;
        self
    }

    /// Weight per unit of translation.
    pub fn translation_per_length(&self) -> f64 {
        self.translation / self.length_scale
    }

    /// Norm of twist coordinates; the rotational part is the Frobenius norm of `hat(omega)`.
    pub fn twist_norm(&self, omega: &Vector3<f64>, v: &Vector3<f64>) -> f64 {
        let wr = self.rotation;
        let wt = self.translation_per_length();
        (2.0 * wr * wr * omega.norm_squared() + wt * wt * v.norm_squared()).sqrt()
    }
}

/// `|| log(a^-1 b) ||` under `weights`; with unit weights this is the
/// Frobenius norm of the 4x4 matrix logarithm.
pub fn riemannian_distance(a: &RigidTransform, b: &RigidTransform, weights: &MetricWeights) -> f64 {
    let (omega, v) = a.inverse().compose(b).log();
    weights.twist_norm(&omega, &v)
}

/// Closest pair between two configuration sets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiberDistance {
    pub distance: f64,
    /// Index into the first set.
    pub first: usize,
    /// Index into the second set.
    pub second: usize,
}

/// Minimum pairwise distance; ties go to the lexicographically smallest
/// index pair.
pub fn fiber_distance(
    first: &[RigidTransform],
    second: &[RigidTransform],
    weights: &MetricWeights,
) -> Result<FiberDistance> {
    if first.is_empty() || second.is_empty() {
        return Err(Error::EmptyFiber);
    }
    let mut best = FiberDistance { distance: f64::INFINITY, first: 0, second: 0 };
    for (i, a) in first.iter().enumerate() {
        let inv = a.inverse();
        for (j, b) in second.iter().enumerate() {
            let (omega, v) = inv.compose(b).log();
            let d = weights.twist_norm(&omega, &v);
            if d < best.distance {
                best = FiberDistance { distance: d, first: i, second: j };
            }
        }
    }
    Ok(best)
}

/// How rotation samples are generated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMethod {
    /// Sphere directions times twists about the tool axis (3D).
    Hopf,
    /// Super-Fibonacci spiral on the unit quaternions (3D).
    Fibonacci,
    /// Uniform angles about +z (2D).
    Grid2d,
}

impl SamplingMethod {
    pub fn name(&self) -> &'static str {
        match self {
            SamplingMethod::Hopf => "hopf",
            SamplingMethod::Fibonacci => "fibonacci",
            SamplingMethod::Grid2d => "grid2d",
        }
    }
}

/// Generated rotations with nearest-neighbour lookup.
#[derive(Clone, Debug, PartialEq)]
pub struct RotationSample {
    pub rotations: Vec<Rotation>,
    pub method: SamplingMethod,
    pub seed: u64,
}

impl RotationSample {
    pub fn len(&self) -> usize {
        self.rotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rotations.is_empty()
    }

    /// Index of an exactly matching sample.
    pub fn index_of(&self, r: &Rotation) -> Option<usize> {
        self.rotations
            .iter()
            .position(|s| s.wxyz().iter().zip(r.wxyz()).all(|(a, b)| (a - b).abs() < 1e-12))
    }

    /// Index of the closest sample and its geodesic angle.
    pub fn nearest(&self, r: &Rotation) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, s) in self.rotations.iter().enumerate() {
            let a = s.angle_to(r);
            if a < best.1 {
                best = (i, a);
            }
        }
        best
    }
}

/// Generates `n` rotations. Seed 0 yields the canonical set; other seeds
/// apply one random global rotation (a random angular offset in 2D).
pub fn sample_rotations(n: usize, method: SamplingMethod, seed: u64, dim: Dim) -> Result<RotationSample> {
    let ok = matches!(
        (method, dim),
        (SamplingMethod::Grid2d, Dim::Two)
            | (SamplingMethod::Hopf, Dim::Three)
            | (SamplingMethod::Fibonacci, Dim::Three)
    );
    if !ok {
        return Err(Error::BadMethodForDimension {
            method: method.name().to_string(),
            dim: dim.count(),
        });
    }
    if n == 0 {
        return Err(Error::Config("rotation count must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rotations = if n == 1 {
        vec![Rotation::identity()]
    } else {
        match method {
            SamplingMethod::Grid2d => {
                let offset = if seed == 0 { 0.0 } else { rng.gen::<f64>() * TAU / n as f64 };
                (0..n).map(|k| Rotation::planar(TAU * k as f64 / n as f64 + offset)).collect()
            }
            SamplingMethod::Hopf => apply_global(hopf_grid(n), seed, &mut rng),
            SamplingMethod::Fibonacci => apply_global(super_fibonacci(n), seed, &mut rng),
        }
    };
    Ok(RotationSample { rotations, method, seed })
}

fn apply_global(rs: Vec<Rotation>, seed: u64, rng: &mut ChaCha8Rng) -> Vec<Rotation> {
    if seed == 0 {
        return rs;
    }
    let g = random_rotation(rng);
    rs.iter().map(|r| g.compose(r)).collect()
}

/// Uniformly distributed random rotation (Shoemake).
pub fn random_rotation<R: Rng>(rng: &mut R) -> Rotation {
    let (u1, u2, u3): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    Rotation::from_wxyz([
        b * (TAU * u3).cos(),
        a * (TAU * u2).sin(),
        a * (TAU * u2).cos(),
        b * (TAU * u3).sin(),
    ])
}

/// Rotation taking +z to the direction with polar angle `theta` and
/// azimuth `phi`, preceded by a twist `psi` about +z.
fn zyz(phi: f64, theta: f64, psi: f64) -> Rotation {
    let rz = |a: f64| Rotation::planar(a);
    let ry = Rotation::from_axis_angle(&Vector3::y(), theta);
    rz(phi).compose(&ry).compose(&rz(psi))
}

/// HEALPix pixel centres `(theta, phi)` for a power-of-two `nside`.
pub fn healpix_centres(nside: usize) -> Vec<(f64, f64)> {
    let ns = nside as f64;
    let mut out = Vec::with_capacity(12 * nside * nside);
    for i in 1..4 * nside {
        let (z, count, shift) = if i < nside {
            (1.0 - (i * i) as f64 / (3.0 * ns * ns), 4 * i, 1.0)
        } else if i <= 3 * nside {
            let s = ((i - nside + 1) % 2) as f64;
            (4.0 / 3.0 - 2.0 * i as f64 / (3.0 * ns), 4 * nside, s)
        } else {
            let ii = 4 * nside - i;
            (-(1.0 - (ii * ii) as f64 / (3.0 * ns * ns)), 4 * ii, 1.0)
        };
        for j in 1..=count {
            let phi = if i < nside || i > 3 * nside {
                PI / (count as f64 / 2.0) * (j as f64 - 0.5)
            } else {
                PI / (2.0 * ns) * (j as f64 - shift / 2.0)
            };
            out.push((z.clamp(-1.0, 1.0).acos(), phi));
        }
    }
    out
}

/// Spherical Fibonacci directions `(theta, phi)`.
pub fn fibonacci_sphere(k: usize) -> Vec<(f64, f64)> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..k)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / k as f64;
            (z.clamp(-1.0, 1.0).acos(), (golden * i as f64).rem_euclid(TAU))
        })
        .collect()
}

fn hopf_grid(n: usize) -> Vec<Rotation> {
    // 72 * 8^l: HEALPix(2^l) directions times 6 * 2^l twists.
    let mut level = None;
    let mut m = n;
    if m.is_multiple_of(72) {
        m /= 72;
        let mut l = 0;
        while m.is_multiple_of(8) {
            m /= 8;
            l += 1;
        }
        if m == 1 {
            level = Some(l);
        }
    }
    let (dirs, twists) = match level {
        Some(l) => (healpix_centres(1 << l), 6usize << l),
        None => {
            let target = (PI * n as f64).cbrt();
            let twists = (1..=n)
                .filter(|d| n.is_multiple_of(*d))
                .min_by(|a, b| {
                    (*a as f64 - target).abs().total_cmp(&(*b as f64 - target).abs())
                })
                .unwrap_or(1);
            (fibonacci_sphere(n / twists), twists)
        }
    };
    let mut out = Vec::with_capacity(n);
    for &(theta, phi) in &dirs {
        for j in 0..twists {
            out.push(zyz(phi, theta, TAU * j as f64 / twists as f64));
        }
    }
    out
}

fn super_fibonacci(n: usize) -> Vec<Rotation> {
    let phi = 2f64.sqrt();
    let psi = 1.533_751_168_755_204_3_f64;
    (0..n)
        .map(|i| {
            let s = i as f64 + 0.5;
            let r = (s / n as f64).sqrt();
            let big = (1.0 - s / n as f64).sqrt();
            let alpha = TAU * s / phi;
            let beta = TAU * s / psi;
            Rotation::from_wxyz([big * beta.cos(), r * alpha.sin(), r * alpha.cos(), big * beta.sin()])
        })
        .collect()
}
