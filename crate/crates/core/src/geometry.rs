//! Elliptic coordinates `x = (R cos ω cosh ρ, R sin ω sinh ρ)` and sampled
//! confocal ellipses.
//!
//! Level sets `{ρ = ρ₀}` are ellipses with foci `(±R, 0)` and semi-axes
//! `R cosh ρ₀`, `R sinh ρ₀`. The map is conformal, so the arclength element on
//! such an ellipse is `Ξ(ρ₀, ω) dω` with `Ξ = R √(sinh²ρ₀ + sin²ω)`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for recognizing points on the focal segment.
pub const FOCAL_SEGMENT_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartesianPoint {
    pub x1: f64,
    pub x2: f64,
}

impl CartesianPoint {
    pub const fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    pub fn norm(self) -> f64 {
        self.x1.hypot(self.x2)
    }

    pub fn distance(self, other: Self) -> f64 {
        (self.x1 - other.x1).hypot(self.x2 - other.x2)
    }
}

/// A point `(ρ, ω)` with `ρ ≥ 0` and `ω ∈ [0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticPoint {
    pub rho: f64,
    pub omega: f64,
}

impl EllipticPoint {
    /// Builds a point, wrapping `omega` into `[0, 2π)`.
    pub fn new(rho: f64, omega: f64) -> Result<Self> {
        if !(rho.is_finite() && omega.is_finite()) || rho < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "elliptic point needs finite rho >= 0 and finite omega, got ({rho}, {omega})"
            )));
        }
        Ok(Self {
            rho,
            omega: wrap_angle(omega),
        })
    }
}

fn wrap_angle(omega: f64) -> f64 {
    let w = omega.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Two confocal ellipses `Γᵢ = {ρ = ρᵢ}` (core boundary) and `Γₑ = {ρ = ρₑ}`
/// (shell boundary) sharing the foci `(±R, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfocalGeometry {
    focal: f64,
    rho_i: f64,
    rho_e: f64,
}

impl ConfocalGeometry {
    pub fn new(focal: f64, rho_i: f64, rho_e: f64) -> Result<Self> {
        if !(focal.is_finite() && focal > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "focal half-distance R must be positive, got {focal}"
            )));
        }
        if !(rho_i.is_finite() && rho_e.is_finite() && rho_i > 0.0 && rho_i < rho_e) {
            return Err(Error::InvalidGeometry(format!(
                "need 0 < rho_i < rho_e, got rho_i = {rho_i}, rho_e = {rho_e}"
            )));
        }
        Ok(Self { focal, rho_i, rho_e })
    }

    /// Focal half-distance `R`.
    pub fn focal(&self) -> f64 {
        self.focal
    }

    pub fn rho_i(&self) -> f64 {
        self.rho_i
    }

    pub fn rho_e(&self) -> f64 {
        self.rho_e
    }

    /// Shell thickness in elliptic radius, `ρₑ − ρᵢ`.
    pub fn gap(&self) -> f64 {
        self.rho_e - self.rho_i
    }

    /// Same elliptic radii with a different focal distance.
    pub fn with_focal(&self, focal: f64) -> Result<Self> {
        Self::new(focal, self.rho_i, self.rho_e)
    }
}

/// One Nyström node on a smooth closed curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePanel {
    pub node: CartesianPoint,
    /// Outward unit normal.
    pub normal: [f64; 2],
    /// Signed curvature, positive for convex curves.
    pub curvature: f64,
    /// Arclength quadrature weight.
    pub weight: f64,
}

pub fn to_cartesian(focal: f64, p: EllipticPoint) -> CartesianPoint {
    let (s, c) = p.omega.sin_cos();
    CartesianPoint::new(focal * c * p.rho.cosh(), focal * s * p.rho.sinh())
}

/// Inverse of [`to_cartesian`].
///
/// The semi-major axis of the confocal ellipse through `x` is half the sum of
/// the focal distances, which is the admissible root of the quadratic in
/// `cosh²ρ`; `ω` follows from the quadrant of `(x₁, x₂)`.
pub fn to_elliptic(focal: f64, x: CartesianPoint) -> Result<EllipticPoint> {
    if x.x2.abs() <= FOCAL_SEGMENT_TOL * focal && x.x1.abs() <= focal * (1.0 + FOCAL_SEGMENT_TOL) {
        return Err(Error::DegeneratePoint { x1: x.x1, x2: x.x2 });
    }
    let d_plus = (x.x1 - focal).hypot(x.x2);
    let d_minus = (x.x1 + focal).hypot(x.x2);
    let major = 0.5 * (d_plus + d_minus);
    let minor = ((major - focal).max(0.0) * (major + focal)).sqrt();
    let rho = ((major + minor) / focal).ln();
    let cos_w = x.x1 / major;
    let sin_w = if minor > 0.0 { x.x2 / minor } else { 0.0 };
    EllipticPoint::new(rho, sin_w.atan2(cos_w))
}

/// `Ξ(ρ, ω) = R √(sinh²ρ + sin²ω)`, the scale factor of the conformal map.
pub fn metric_factor(focal: f64, rho: f64, omega: f64) -> f64 {
    focal * rho.sinh().hypot(omega.sin())
}

/// Curvature of the ellipse `{ρ = ρ₀}` at angle `ω`: `R² cosh ρ₀ sinh ρ₀ / Ξ³`.
pub fn ellipse_curvature(focal: f64, rho0: f64, omega: f64) -> f64 {
    let xi = metric_factor(focal, rho0, omega);
    focal * focal * rho0.cosh() * rho0.sinh() / (xi * xi * xi)
}

/// Outward unit normal of `{ρ = ρ₀}` at angle `ω`.
pub fn ellipse_normal(rho0: f64, omega: f64) -> [f64; 2] {
    let (s, c) = omega.sin_cos();
    let (nx, ny) = (rho0.sinh() * c, rho0.cosh() * s);
    let len = nx.hypot(ny);
    [nx / len, ny / len]
}

/// Samples `{ρ = ρ₀}` at `n` points equispaced in `ω`, with trapezoidal
/// arclength weights `Ξ(ρ₀, ω_j)·2π/n`.
pub fn sample_ellipse(focal: f64, rho0: f64, n: usize) -> Result<Vec<CurvePanel>> {
    check_sample_count(n)?;
    if !(rho0.is_finite() && rho0 > 0.0) || !(focal.is_finite() && focal > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "ellipse sampling needs R > 0 and rho0 > 0, got R = {focal}, rho0 = {rho0}"
        )));
    }
    let h = TAU / n as f64;
    Ok((0..n)
        .map(|j| {
            let omega = h * j as f64;
            CurvePanel {
                node: to_cartesian(focal, EllipticPoint { rho: rho0, omega }),
                normal: ellipse_normal(rho0, omega),
                curvature: ellipse_curvature(focal, rho0, omega),
                weight: metric_factor(focal, rho0, omega) * h,
            }
        })
        .collect())
}

/// Samples a circle of the given radius centred at the origin.
pub fn sample_circle(radius: f64, n: usize) -> Result<Vec<CurvePanel>> {
    check_sample_count(n)?;
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "circle radius must be positive, got {radius}"
        )));
    }
    let h = TAU / n as f64;
    Ok((0..n)
        .map(|j| {
            let (s, c) = (h * j as f64).sin_cos();
            CurvePanel {
                node: CartesianPoint::new(radius * c, radius * s),
                normal: [c, s],
                curvature: 1.0 / radius,
                weight: radius * h,
            }
        })
        .collect())
}

fn check_sample_count(n: usize) -> Result<()> {
    if n < 8 || !n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "curve sampling needs an even count >= 8, got {n}"
        )));
    }
    Ok(())
}
