//! Unit-sphere geometry for polarization states and analyzer settings.
//!
//! Points on the Poincaré sphere are [`UnitVec`]s. Everything here is a pure
//! function of immutable values.

use std::f64::consts::TAU;
use std::ops::{Add, Mul, Neg, Sub};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Plain 3-vector used for intermediate (non-normalized) quantities such as
/// `a - b` or a projection onto a plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(&self, other: &Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(&self, other: &Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Normalizes onto the sphere. Fails for (numerically) zero vectors.
    pub fn normalize(&self) -> Result<UnitVec> {
        let n = self.norm();
        if !(n > f64::EPSILON) || !n.is_finite() {
            return Err(Error::ZeroVector);
        }
        Ok(UnitVec(Vec3::new(self.x / n, self.y / n, self.z / n)))
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        Vec3::new(self * v.x, self * v.y, self * v.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// A point on the unit sphere: a polarization state or an analyzer setting.
///
/// Construction always goes through normalization, so the norm is 1 up to
/// rounding (well inside 1e-12).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(into = "Vec3")]
pub struct UnitVec(Vec3);

impl From<UnitVec> for Vec3 {
    fn from(u: UnitVec) -> Vec3 {
        u.0
    }
}

impl<'de> Deserialize<'de> for UnitVec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec3::deserialize(d)?;
        v.normalize().map_err(serde::de::Error::custom)
    }
}

impl UnitVec {
    pub const X: UnitVec = UnitVec(Vec3::new(1.0, 0.0, 0.0));
    pub const Y: UnitVec = UnitVec(Vec3::new(0.0, 1.0, 0.0));
    pub const Z: UnitVec = UnitVec(Vec3::new(0.0, 0.0, 1.0));

    /// Normalizes `(x, y, z)`.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        Vec3::new(x, y, z).normalize()
    }

    /// `(cos φ sin θ, sin φ sin θ, cos θ)`.
    pub fn from_polar(theta: f64, phi: f64) -> Self {
        let theta = theta.rem_euclid(TAU);
        let phi = phi.rem_euclid(TAU);
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        UnitVec(Vec3::new(cp * st, sp * st, ct))
    }

    /// Uniform point on the sphere: `z ~ U[-1, 1]`, `φ ~ U[0, 2π)`.
    pub fn sample_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let z: f64 = rng.random_range(-1.0..=1.0);
        let phi: f64 = rng.random_range(0.0..TAU);
        let r = (1.0 - z * z).max(0.0).sqrt();
        let (s, c) = phi.sin_cos();
        UnitVec(Vec3::new(r * c, r * s, z))
    }

    pub fn x(&self) -> f64 {
        self.0.x
    }
    pub fn y(&self) -> f64 {
        self.0.y
    }
    pub fn z(&self) -> f64 {
        self.0.z
    }

    pub fn as_vec3(&self) -> Vec3 {
        self.0
    }

    pub fn dot(&self, other: &UnitVec) -> f64 {
        self.0.dot(&other.0)
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// Antipodal point. Exact: only signs flip.
    pub fn antipode(&self) -> UnitVec {
        UnitVec(-self.0)
    }

    /// Rodrigues rotation of `self` by `sigma` about `axis`.
    pub fn rotated(&self, axis: &UnitVec, sigma: f64) -> UnitVec {
        let k = axis.0;
        let v = self.0;
        let (s, c) = sigma.sin_cos();
        let r = c * v + s * k.cross(&v) + (k.dot(&v) * (1.0 - c)) * k;
        // renormalize so the norm invariant does not drift under repeated rotation
        let n = r.norm();
        UnitVec(Vec3::new(r.x / n, r.y / n, r.z / n))
    }
}

impl Neg for UnitVec {
    type Output = UnitVec;
    fn neg(self) -> UnitVec {
        self.antipode()
    }
}

/// Rotates `v` by `sigma` about `axis`; rejects an axis that is not of unit
/// length.
pub fn rotate_about(axis: Vec3, sigma: f64, v: &UnitVec) -> Result<UnitVec> {
    let n = axis.norm();
    if !(n > f64::EPSILON) {
        return Err(Error::ZeroVector);
    }
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "rotation axis must have unit length, got {n}"
        )));
    }
    Ok(v.rotated(&axis.normalize()?, sigma))
}

/// Angle in `[0, π]`; the dot product is clamped before `acos`.
pub fn angle_between(a: &UnitVec, b: &UnitVec) -> f64 {
    a.dot(b).clamp(-1.0, 1.0).acos()
}

/// A plane through the origin with an orthonormal in-plane basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub e1: UnitVec,
    pub e2: UnitVec,
    pub normal: UnitVec,
}

impl Plane {
    pub fn xy() -> Self {
        Plane {
            e1: UnitVec::X,
            e2: UnitVec::Y,
            normal: UnitVec::Z,
        }
    }

    pub fn xz() -> Self {
        // normal = e1 × e2 = x × z = -y
        Plane {
            e1: UnitVec::X,
            e2: UnitVec::Z,
            normal: -UnitVec::Y,
        }
    }

    pub fn yz() -> Self {
        Plane {
            e1: UnitVec::Y,
            e2: UnitVec::Z,
            normal: UnitVec::X,
        }
    }

    /// Plane spanned by two non-parallel directions. `e1` is along `first`;
    /// `e2` is the Gram-Schmidt remainder of `second`.
    pub fn spanned_by(first: Vec3, second: Vec3) -> Result<Self> {
        let e1 = first.normalize()?;
        let rest = second - e1.0.dot(&second) * e1.0;
        let e2 = rest.normalize()?;
        let normal = e1.0.cross(&e2.0).normalize()?;
        Ok(Plane { e1, e2, normal })
    }

    /// Plane with the given normal. Coordinate normals give the canonical
    /// coordinate planes.
    pub fn from_normal(normal: Vec3) -> Result<Self> {
        let n = normal.normalize()?;
        for p in [Plane::xy(), Plane::xz(), Plane::yz()] {
            if p.normal.dot(&n).abs() > 1.0 - 1e-12 {
                return Ok(p);
            }
        }
        let helper = if n.x().abs() < 0.9 { Vec3::new(1.0, 0.0, 0.0) } else { Vec3::new(0.0, 1.0, 0.0) };
        let e1 = helper - n.0.dot(&helper) * n.0;
        Plane::spanned_by(e1, n.0.cross(&e1))
    }

    /// Canonical label for the coordinate planes, `None` for anything else.
    pub fn label(&self) -> Option<&'static str> {
        [("xy", Plane::xy()), ("xz", Plane::xz()), ("yz", Plane::yz())]
            .into_iter()
            .find(|(_, p)| p.normal.dot(&self.normal).abs() > 1.0 - 1e-12)
            .map(|(name, _)| name)
    }

    pub fn from_label(label: &str) -> Result<Self> {
        match label {
            "xy" => Ok(Plane::xy()),
            "xz" => Ok(Plane::xz()),
            "yz" => Ok(Plane::yz()),
            other => Err(Error::InvalidParameter(format!("unknown plane '{other}'"))),
        }
    }

    pub fn contains(&self, v: &Vec3, tol: f64) -> bool {
        v.dot(&self.normal.0).abs() <= tol
    }

    pub fn is_orthogonal_to(&self, other: &Plane, tol: f64) -> bool {
        self.normal.dot(&other.normal).abs() <= tol
    }
}

/// `u - (u·n)n` together with its length.
pub fn project_to_plane(u: &UnitVec, plane: &Plane) -> (Vec3, f64) {
    let n = plane.normal.0;
    let p = u.0 - u.0.dot(&n) * n;
    // computed from the in-plane components to stay exactly 0 for u = ±n
    let c1 = u.dot(&plane.e1);
    let c2 = u.dot(&plane.e2);
    (p, c1.hypot(c2).min(1.0))
}

/// Setting pair rotated by `sigma` within `plane`, separated by `alpha`:
/// `a = cos σ e1 + sin σ e2`, `b = cos(σ+α) e1 + sin(σ+α) e2`.
pub fn settings_in_plane(plane: &Plane, alpha: f64, sigma: f64) -> (UnitVec, UnitVec) {
    (on_circle(plane, sigma), on_circle(plane, sigma + alpha))
}

fn on_circle(plane: &Plane, t: f64) -> UnitVec {
    let (s, c) = t.sin_cos();
    let v = c * plane.e1.0 + s * plane.e2.0;
    let n = v.norm();
    UnitVec(Vec3::new(v.x / n, v.y / n, v.z / n))
}

/// `|a - b| = 2|sin(α/2)|`.
pub fn chord_length(alpha: f64) -> f64 {
    2.0 * (0.5 * alpha).sin().abs()
}
