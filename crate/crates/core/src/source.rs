//! Sources outside the shell and their elliptic-harmonic expansions.
//!
//! Inside the elliptic radius of the nearest singularity the Newtonian
//! potential is written as
//!
//! ```text
//! F(x) = c − Σ_{n≥1} (F⁺ₙ cos nω cosh nρ + F⁻ₙ sin nω sinh nρ)
//! ```
//!
//! and [`SourceCoefficients`] stores `c`, `F⁺ₙ`, `F⁻ₙ` in that sign
//! convention.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, CartesianPoint, ConfocalGeometry, EllipticPoint};

/// Minimum number of nonzero coefficients for [`convergence_exponent`].
pub const MIN_FIT_COEFFICIENTS: usize = 10;
/// Below this many nonzero indices the gap-condition verdict is inconclusive.
pub const MIN_GAP_INDICES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SourceSpec {
    /// `f = a·∇δ_{x₀}`, potential `a·(x−x₀)/(2π|x−x₀|²)`.
    Dipole { location: EllipticPoint, moment: [f64; 2] },
    /// `f = q(δ_{x₊} − δ_{x₋})`, potential `(q/2π) ln(|x−x₊|/|x−x₋|)`.
    ChargePair {
        plus: EllipticPoint,
        minus: EllipticPoint,
        charge: f64,
    },
    /// Raw expansion coefficients; `f_plus[k]` is `F⁺_{k+1}`.
    Coefficients {
        c: f64,
        f_plus: Vec<f64>,
        f_minus: Vec<f64>,
    },
}

impl SourceSpec {
    /// The source with no field.
    pub fn zero() -> Self {
        SourceSpec::Coefficients {
            c: 0.0,
            f_plus: Vec::new(),
            f_minus: Vec::new(),
        }
    }

    /// Smallest elliptic radius of a singular point, if the source has any.
    pub fn singular_radius(&self) -> Option<f64> {
        match self {
            SourceSpec::Dipole { location, .. } => Some(location.rho),
            SourceSpec::ChargePair { plus, minus, .. } => Some(plus.rho.min(minus.rho)),
            SourceSpec::Coefficients { .. } => None,
        }
    }

    /// Checks that every singular point lies strictly outside `Γₑ`.
    pub fn check_outside(&self, g: &ConfocalGeometry) -> Result<()> {
        match self.singular_radius() {
            Some(rho0) if rho0 <= g.rho_e() => Err(Error::SourceInsideShell { rho0, rho_e: g.rho_e() }),
            _ => Ok(()),
        }
    }

    pub fn has_closed_form(&self) -> bool {
        !matches!(self, SourceSpec::Coefficients { .. })
    }
}

/// Truncated expansion `(c, F⁺ₙ, F⁻ₙ)`, `n = 1..=n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceCoefficients {
    pub c: f64,
    pub f_plus: Vec<f64>,
    pub f_minus: Vec<f64>,
    /// Elliptic radius up to which the expansion converges, when known.
    pub radius: Option<f64>,
}

impl SourceCoefficients {
    pub fn zeros(n_max: usize) -> Self {
        Self {
            c: 0.0,
            f_plus: vec![0.0; n_max],
            f_minus: vec![0.0; n_max],
            radius: None,
        }
    }

    pub fn n_max(&self) -> usize {
        self.f_plus.len().max(self.f_minus.len())
    }

    /// `F⁺ₙ` (zero beyond the stored range).
    pub fn plus(&self, n: usize) -> f64 {
        n.checked_sub(1)
            .and_then(|k| self.f_plus.get(k))
            .copied()
            .unwrap_or(0.0)
    }

    /// `F⁻ₙ` (zero beyond the stored range).
    pub fn minus(&self, n: usize) -> f64 {
        n.checked_sub(1)
            .and_then(|k| self.f_minus.get(k))
            .copied()
            .unwrap_or(0.0)
    }

    /// Termwise sum; the convergence radius is the smaller of the two.
    pub fn add(&self, other: &Self) -> Self {
        let n = self.n_max().max(other.n_max());
        let radius = match (self.radius, other.radius) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        Self {
            c: self.c + other.c,
            f_plus: (1..=n).map(|k| self.plus(k) + other.plus(k)).collect(),
            f_minus: (1..=n).map(|k| self.minus(k) + other.minus(k)).collect(),
            radius,
        }
    }

    /// Series value `c − Σ (F⁺ₙ cos nω cosh nρ + F⁻ₙ sin nω sinh nρ)`.
    pub fn eval(&self, p: EllipticPoint) -> f64 {
        let mut acc = self.c;
        for n in 1..=self.n_max() {
            let nf = n as f64;
            let (s, c) = (nf * p.omega).sin_cos();
            acc -= self.plus(n) * c * (nf * p.rho).cosh() + self.minus(n) * s * (nf * p.rho).sinh();
        }
        acc
    }

    /// Termwise `(∂ρ, ∂ω)` of the series.
    pub fn eval_derivatives(&self, p: EllipticPoint) -> [f64; 2] {
        let mut d = [0.0; 2];
        for n in 1..=self.n_max() {
            let nf = n as f64;
            let (s, c) = (nf * p.omega).sin_cos();
            let (fp, fm) = (self.plus(n), self.minus(n));
            let (ch, sh) = ((nf * p.rho).cosh(), (nf * p.rho).sinh());
            d[0] -= nf * (fp * c * sh + fm * s * ch);
            d[1] -= nf * (-fp * s * ch + fm * c * sh);
        }
        d
    }

    fn nonzero_indices(&self) -> Vec<usize> {
        (1..=self.n_max())
            .filter(|&n| self.plus(n) != 0.0 || self.minus(n) != 0.0)
            .collect()
    }
}

/// Weights of `cos nω cosh nρ` and `sin nω sinh nρ` in the expansion of
/// `G(x − x₀) = (1/2π) ln|x − x₀|` for `ρ < ρ₀`:
/// `(−e^{−nρ₀} cos nω₀/(nπ), −e^{−nρ₀} sin nω₀/(nπ))`, `n = 1..=n_max`.
pub fn green_expansion_coefficients(x0: EllipticPoint, n_max: usize) -> Vec<[f64; 2]> {
    (1..=n_max)
        .map(|n| {
            let nf = n as f64;
            let scale = -(-nf * x0.rho).exp() / (nf * PI);
            let (s, c) = (nf * x0.omega).sin_cos();
            [scale * c, scale * s]
        })
        .collect()
}

/// Unnormalized tangent vectors `(∂x/∂ρ, ∂x/∂ω)` at `p`.
fn frame(focal: f64, p: EllipticPoint) -> ([f64; 2], [f64; 2]) {
    let (s, c) = p.omega.sin_cos();
    let (ch, sh) = (p.rho.cosh(), p.rho.sinh());
    ([focal * c * sh, focal * s * ch], [-focal * s * ch, focal * c * sh])
}

fn dipole_coefficients(focal: f64, location: EllipticPoint, moment: [f64; 2], n_max: usize) -> (Vec<f64>, Vec<f64>) {
    let (e_rho, e_omega) = frame(focal, location);
    let xi2 = geometry::metric_factor(focal, location.rho, location.omega).powi(2);
    // a·∇_{x₀} h = (h_ρ a·e_ρ + h_ω a·e_ω)/Ξ² for the conformal frame
    let along_rho = (moment[0] * e_rho[0] + moment[1] * e_rho[1]) / xi2;
    let along_omega = (moment[0] * e_omega[0] + moment[1] * e_omega[1]) / xi2;
    (1..=n_max)
        .map(|n| {
            let nf = n as f64;
            let decay = (-nf * location.rho).exp() / PI;
            let (s, c) = (nf * location.omega).sin_cos();
            (
                decay * (along_rho * c + along_omega * s),
                decay * (along_rho * s - along_omega * c),
            )
        })
        .unzip()
}

fn monopole_coefficients(location: EllipticPoint, n_max: usize) -> (Vec<f64>, Vec<f64>) {
    green_expansion_coefficients(location, n_max)
        .into_iter()
        .map(|[c, s]| (-c, -s))
        .unzip()
}

/// Expansion coefficients of the Newtonian potential of `s`.
///
/// The constant `c` is fixed by matching the closed form at the focus
/// `(R, 0)`; it carries no flux and only matters for display.
pub fn newtonian_coefficients(s: &SourceSpec, g: &ConfocalGeometry, n_max: usize) -> Result<SourceCoefficients> {
    s.check_outside(g)?;
    let focal = g.focal();
    let (f_plus, f_minus) = match s {
        SourceSpec::Dipole { location, moment } => dipole_coefficients(focal, *location, *moment, n_max),
        SourceSpec::ChargePair { plus, minus, charge } => {
            let (pp, pm) = monopole_coefficients(*plus, n_max);
            let (mp, mm) = monopole_coefficients(*minus, n_max);
            (
                pp.iter().zip(&mp).map(|(a, b)| charge * (a - b)).collect(),
                pm.iter().zip(&mm).map(|(a, b)| charge * (a - b)).collect(),
            )
        }
        SourceSpec::Coefficients { c, f_plus, f_minus } => {
            let take = |v: &Vec<f64>| (0..n_max).map(|k| v.get(k).copied().unwrap_or(0.0)).collect();
            return Ok(SourceCoefficients {
                c: *c,
                f_plus: take(f_plus),
                f_minus: take(f_minus),
                radius: None,
            });
        }
    };
    let mut sc = SourceCoefficients {
        c: 0.0,
        f_plus,
        f_minus,
        radius: s.singular_radius(),
    };
    let reference = CartesianPoint::new(focal, 0.0);
    let series_at_focus = sc.eval(EllipticPoint { rho: 0.0, omega: 0.0 });
    sc.c = newtonian_eval(s, focal, reference)? - series_at_focus;
    Ok(sc)
}

fn singular_check(x: CartesianPoint, at: CartesianPoint, focal: f64) -> Result<()> {
    if x.distance(at) <= 1e-14 * focal.max(at.norm()) {
        Err(Error::SingularPoint)
    } else {
        Ok(())
    }
}

/// Elliptic coordinates of `x`, falling back to `ρ = 0` on the focal segment
/// where the series is still well defined.
fn series_point(focal: f64, x: CartesianPoint) -> EllipticPoint {
    geometry::to_elliptic(focal, x).unwrap_or(EllipticPoint {
        rho: 0.0,
        omega: (x.x1 / focal).clamp(-1.0, 1.0).acos(),
    })
}

/// Closed-form Newtonian potential of `s` at `x`. Coefficient sources are
/// evaluated through their series, valid inside its convergence radius.
pub fn newtonian_eval(s: &SourceSpec, focal: f64, x: CartesianPoint) -> Result<f64> {
    match s {
        SourceSpec::Dipole { location, moment } => {
            let x0 = geometry::to_cartesian(focal, *location);
            singular_check(x, x0, focal)?;
            let d = [x.x1 - x0.x1, x.x2 - x0.x2];
            let r2 = d[0] * d[0] + d[1] * d[1];
            Ok((moment[0] * d[0] + moment[1] * d[1]) / (TAU * r2))
        }
        SourceSpec::ChargePair { plus, minus, charge } => {
            let xp = geometry::to_cartesian(focal, *plus);
            let xm = geometry::to_cartesian(focal, *minus);
            singular_check(x, xp, focal)?;
            singular_check(x, xm, focal)?;
            Ok(charge / TAU * (x.distance(xp) / x.distance(xm)).ln())
        }
        SourceSpec::Coefficients { c, f_plus, f_minus } => {
            let sc = SourceCoefficients {
                c: *c,
                f_plus: f_plus.clone(),
                f_minus: f_minus.clone(),
                radius: None,
            };
            Ok(sc.eval(series_point(focal, x)))
        }
    }
}

/// Cartesian gradient of the Newtonian potential.
pub fn newtonian_gradient(s: &SourceSpec, focal: f64, x: CartesianPoint) -> Result<[f64; 2]> {
    match s {
        SourceSpec::Dipole { location, moment } => {
            let x0 = geometry::to_cartesian(focal, *location);
            singular_check(x, x0, focal)?;
            let d = [x.x1 - x0.x1, x.x2 - x0.x2];
            let r2 = d[0] * d[0] + d[1] * d[1];
            let ad = moment[0] * d[0] + moment[1] * d[1];
            let k = 1.0 / (TAU * r2 * r2);
            Ok([
                k * (moment[0] * r2 - 2.0 * ad * d[0]),
                k * (moment[1] * r2 - 2.0 * ad * d[1]),
            ])
        }
        SourceSpec::ChargePair { plus, minus, charge } => {
            let xp = geometry::to_cartesian(focal, *plus);
            let xm = geometry::to_cartesian(focal, *minus);
            singular_check(x, xp, focal)?;
            singular_check(x, xm, focal)?;
            let (dp, dm) = ([x.x1 - xp.x1, x.x2 - xp.x2], [x.x1 - xm.x1, x.x2 - xm.x2]);
            let (rp, rm) = (dp[0] * dp[0] + dp[1] * dp[1], dm[0] * dm[0] + dm[1] * dm[1]);
            let k = charge / TAU;
            Ok([k * (dp[0] / rp - dm[0] / rm), k * (dp[1] / rp - dm[1] / rm)])
        }
        SourceSpec::Coefficients { c, f_plus, f_minus } => {
            let sc = SourceCoefficients {
                c: *c,
                f_plus: f_plus.clone(),
                f_minus: f_minus.clone(),
                radius: None,
            };
            let p = geometry::to_elliptic(focal, x)?;
            let [dr, dw] = sc.eval_derivatives(p);
            let (e_rho, e_omega) = frame(focal, p);
            let xi2 = geometry::metric_factor(focal, p.rho, p.omega).powi(2);
            Ok([
                (dr * e_rho[0] + dw * e_omega[0]) / xi2,
                (dr * e_rho[1] + dw * e_omega[1]) / xi2,
            ])
        }
    }
}

/// Recovers the expansion coefficients of `s` by trapezoidal Fourier
/// projection of [`newtonian_eval`] on the ellipse `{ρ = rho_t}`.
///
/// Independent of [`newtonian_coefficients`]: uses only point values of the
/// closed-form potential.
pub fn coefficient_projection_oracle(
    s: &SourceSpec,
    focal: f64,
    rho_t: f64,
    n_max: usize,
) -> Result<SourceCoefficients> {
    if !(rho_t > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "projection radius must be positive, got {rho_t}"
        )));
    }
    if let Some(rho0) = s.singular_radius() {
        if rho_t >= rho0 {
            return Err(Error::InvalidArgument(format!(
                "projection radius {rho_t} must lie inside the source radius {rho0}"
            )));
        }
    }
    let m = (8 * n_max).max(512);
    let h = TAU / m as f64;
    let values = (0..m)
        .map(|j| {
            let p = EllipticPoint {
                rho: rho_t,
                omega: h * j as f64,
            };
            newtonian_eval(s, focal, geometry::to_cartesian(focal, p))
        })
        .collect::<Result<Vec<_>>>()?;
    let mean = values.iter().sum::<f64>() / m as f64;
    let mut f_plus = Vec::with_capacity(n_max);
    let mut f_minus = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let nf = n as f64;
        let (mut cs, mut sn) = (0.0, 0.0);
        for (j, v) in values.iter().enumerate() {
            // reduce n·j mod m to keep the angle argument exact
            let w = h * ((n * j) % m) as f64;
            let (s, c) = w.sin_cos();
            cs += v * c;
            sn += v * s;
        }
        let (cs, sn) = (cs * h / PI, sn * h / PI);
        f_plus.push(-cs / (nf * rho_t).cosh());
        f_minus.push(-sn / (nf * rho_t).sinh());
    }
    Ok(SourceCoefficients {
        c: mean,
        f_plus,
        f_minus,
        radius: s.singular_radius(),
    })
}

/// Estimates the elliptic radius beyond which the potential stops extending
/// harmonically: minus the least-squares slope of `ln(|F⁺ₙ| + |F⁻ₙ|)` over
/// all nonzero indices.
pub fn convergence_exponent(sc: &SourceCoefficients) -> Result<f64> {
    let points: Vec<(f64, f64)> = sc
        .nonzero_indices()
        .into_iter()
        .map(|n| (n as f64, (sc.plus(n).abs() + sc.minus(n).abs()).ln()))
        .filter(|(_, y)| y.is_finite())
        .collect();
    if points.len() < MIN_FIT_COEFFICIENTS {
        return Err(Error::TooFewCoefficients {
            needed: MIN_FIT_COEFFICIENTS,
            found: points.len(),
        });
    }
    Ok(-least_squares_slope(&points))
}

pub(crate) fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GapVerdict {
    SatisfiedHeuristically,
    FailsHeuristically,
    Inconclusive,
}

/// Finite-sample view of the gap condition at the critical radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapConditionReport {
    pub nonzero_indices: Vec<usize>,
    /// `e^{−(n_{k+1}−n_k)(ρₑ−ρᵢ)} e^{2n_kρ*} (|F⁺|² + |F⁻|²)` for consecutive pairs.
    pub gc_terms: Vec<f64>,
    /// Natural logarithms of `gc_terms`, finite even when the terms overflow.
    pub log_terms: Vec<f64>,
    pub verdict: GapVerdict,
}

/// Tail length inspected by the gap verdict.
const GAP_TAIL: usize = 5;
const GAP_GROWTH_THRESHOLD: f64 = 1e3;
const GAP_DECAY_THRESHOLD: f64 = 1e-3;

/// Evaluates the gap functional over the nonzero coefficients.
///
/// Satisfied when the last five terms increase strictly and the last exceeds
/// `10³`; fails when they decrease strictly below `10⁻³`; otherwise, or with
/// fewer than eight nonzero indices, inconclusive.
pub fn gap_condition_report(sc: &SourceCoefficients, g: &ConfocalGeometry, rho_star: f64) -> GapConditionReport {
    let idx = sc.nonzero_indices();
    let log_terms: Vec<f64> = idx
        .windows(2)
        .map(|w| {
            let (n, next) = (w[0], w[1]);
            let mag = sc.plus(n).powi(2) + sc.minus(n).powi(2);
            -((next - n) as f64) * g.gap() + 2.0 * n as f64 * rho_star + mag.ln()
        })
        .collect();
    let gc_terms = log_terms.iter().map(|l| l.exp()).collect();
    let verdict = if idx.len() < MIN_GAP_INDICES || log_terms.len() < GAP_TAIL {
        GapVerdict::Inconclusive
    } else {
        let tail = &log_terms[log_terms.len() - GAP_TAIL..];
        let last = *tail.last().unwrap();
        if tail.windows(2).all(|w| w[1] > w[0]) && last > GAP_GROWTH_THRESHOLD.ln() {
            GapVerdict::SatisfiedHeuristically
        } else if tail.windows(2).all(|w| w[1] < w[0]) && last < GAP_DECAY_THRESHOLD.ln() {
            GapVerdict::FailsHeuristically
        } else {
            GapVerdict::Inconclusive
        }
    };
    GapConditionReport {
        nonzero_indices: idx,
        gc_terms,
        log_terms,
        verdict,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pt(rho: f64, omega: f64) -> EllipticPoint {
        EllipticPoint::new(rho, omega).unwrap()
    }

    fn geom() -> ConfocalGeometry {
        ConfocalGeometry::new(1.0, 0.5, 0.8).unwrap()
    }

    #[test]
    fn green_weights() {
        let w = green_expansion_coefficients(pt(1.2, 0.0), 30);
        assert!(w.iter().all(|p| p[1] == 0.0));
        assert_relative_eq!(w[0][0], -(-1.2f64).exp() / PI, max_relative = 1e-15);
        assert_relative_eq!(w[0][0], -0.095_873_1, epsilon = 1e-7);
    }

    #[test]
    fn green_series_reproduces_logarithm() {
        // difference of two evaluation points removes the unknown constant
        let x0 = pt(1.3, 0.4);
        let focal = 1.0;
        let w = green_expansion_coefficients(x0, 80);
        let series = |p: EllipticPoint| -> f64 {
            w.iter()
                .enumerate()
                .map(|(k, c)| {
                    let nf = (k + 1) as f64;
                    c[0] * (nf * p.omega).cos() * (nf * p.rho).cosh()
                        + c[1] * (nf * p.omega).sin() * (nf * p.rho).sinh()
                })
                .sum()
        };
        let x0c = geometry::to_cartesian(focal, x0);
        let g = |p: EllipticPoint| geometry::to_cartesian(focal, p).distance(x0c).ln() / TAU;
        let (p, q) = (pt(0.6, 1.0), pt(0.2, 2.5));
        assert!(((series(p) - series(q)) - (g(p) - g(q))).abs() < 1e-10);
    }

    #[test]
    fn zero_dipole_has_zero_coefficients() {
        let s = SourceSpec::Dipole {
            location: pt(1.2, 0.7),
            moment: [0.0, 0.0],
        };
        let sc = newtonian_coefficients(&s, &geom(), 20).unwrap();
        assert!(sc.f_plus.iter().chain(&sc.f_minus).all(|&v| v == 0.0));
    }

    #[test]
    fn source_inside_shell_is_rejected() {
        let s = SourceSpec::Dipole {
            location: pt(0.8, 0.1),
            moment: [1.0, 0.0],
        };
        assert!(matches!(
            newtonian_coefficients(&s, &geom(), 5),
            Err(Error::SourceInsideShell { .. })
        ));
        let s = SourceSpec::ChargePair {
            plus: pt(1.2, 0.1),
            minus: pt(0.6, 0.1),
            charge: 1.0,
        };
        assert!(newtonian_coefficients(&s, &geom(), 5).is_err());
    }

    #[test]
    fn dipole_eval_on_axis() {
        // probe at distance d along the moment
        let loc = pt(1.0, 0.0);
        let s = SourceSpec::Dipole {
            location: loc,
            moment: [1.0, 0.0],
        };
        let x0 = geometry::to_cartesian(1.0, loc);
        let d = 0.37;
        let v = newtonian_eval(&s, 1.0, CartesianPoint::new(x0.x1 + d, 0.0)).unwrap();
        assert_relative_eq!(v, 1.0 / (TAU * d), max_relative = 1e-14);
        assert_eq!(newtonian_eval(&s, 1.0, x0), Err(Error::SingularPoint));
    }

    #[test]
    fn charge_pair_symmetry() {
        let s = SourceSpec::ChargePair {
            plus: pt(1.0, 0.5),
            minus: pt(1.0, 2.0),
            charge: 1.3,
        };
        let (a, b) = (
            geometry::to_cartesian(1.0, pt(1.0, 0.5)),
            geometry::to_cartesian(1.0, pt(1.0, 2.0)),
        );
        // a point on the perpendicular bisector
        let mid = CartesianPoint::new(0.5 * (a.x1 + b.x1), 0.5 * (a.x2 + b.x2));
        let dir = [-(b.x2 - a.x2), b.x1 - a.x1];
        let x = CartesianPoint::new(mid.x1 + 0.3 * dir[0], mid.x2 + 0.3 * dir[1]);
        assert!(newtonian_eval(&s, 1.0, x).unwrap().abs() < 1e-15);

        let swapped = SourceSpec::ChargePair {
            plus: pt(1.0, 2.0),
            minus: pt(1.0, 0.5),
            charge: -1.3,
        };
        let y = CartesianPoint::new(0.2, -0.9);
        assert_relative_eq!(
            newtonian_eval(&s, 1.0, y).unwrap(),
            newtonian_eval(&swapped, 1.0, y).unwrap(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let sources = [
            SourceSpec::Dipole {
                location: pt(1.1, 0.3),
                moment: [0.4, -1.0],
            },
            SourceSpec::ChargePair {
                plus: pt(1.2, 0.3),
                minus: pt(1.0, 3.0),
                charge: 2.0,
            },
        ];
        let x = CartesianPoint::new(0.4, 0.5);
        let h = 1e-6;
        for s in &sources {
            let g = newtonian_gradient(s, 1.0, x).unwrap();
            let f = |a: f64, b: f64| newtonian_eval(s, 1.0, CartesianPoint::new(a, b)).unwrap();
            let fx = (f(x.x1 + h, x.x2) - f(x.x1 - h, x.x2)) / (2.0 * h);
            let fy = (f(x.x1, x.x2 + h) - f(x.x1, x.x2 - h)) / (2.0 * h);
            assert_relative_eq!(g[0], fx, max_relative = 1e-7);
            assert_relative_eq!(g[1], fy, max_relative = 1e-7);
        }
    }

    #[test]
    fn projection_of_zero_source_vanishes() {
        let sc = coefficient_projection_oracle(&SourceSpec::zero(), 1.0, 0.5, 10).unwrap();
        assert!(sc.f_plus.iter().chain(&sc.f_minus).all(|&v| v == 0.0));
    }

    #[test]
    fn dipole_on_major_axis_has_no_sine_terms() {
        let s = SourceSpec::Dipole {
            location: pt(1.2, 0.0),
            moment: [1.0, 0.0],
        };
        let sc = coefficient_projection_oracle(&s, 1.0, 0.6, 20).unwrap();
        let scale = sc.f_plus.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(sc.f_minus.iter().all(|v| v.abs() <= 1e-12 * scale));
        let exact = newtonian_coefficients(&s, &geom(), 20).unwrap();
        assert!(exact.f_minus.iter().all(|v| v.abs() <= 1e-15 * scale));
    }

    #[test]
    fn convergence_exponent_of_geometric_sequence() {
        let sc = SourceCoefficients {
            c: 0.0,
            f_plus: (1..=40).map(|n| (-2.0 * n as f64).exp()).collect(),
            f_minus: (1..=40).map(|n| (-2.0 * n as f64).exp()).collect(),
            radius: None,
        };
        assert_relative_eq!(convergence_exponent(&sc).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn convergence_exponent_of_sparse_sequence() {
        let mut f_plus = vec![0.0; 1024];
        for k in 0..11 {
            let n = 1usize << k;
            f_plus[n - 1] = 3.0 * (-0.05 * n as f64).exp();
        }
        let sc = SourceCoefficients {
            c: 0.0,
            f_plus,
            f_minus: vec![],
            radius: None,
        };
        assert_relative_eq!(convergence_exponent(&sc).unwrap(), 0.05, epsilon = 1e-12);
    }

    #[test]
    fn convergence_exponent_needs_data() {
        let sc = SourceCoefficients {
            c: 0.0,
            f_plus: vec![1.0; 5],
            f_minus: vec![],
            radius: None,
        };
        assert_eq!(
            convergence_exponent(&sc),
            Err(Error::TooFewCoefficients { needed: 10, found: 5 })
        );
    }

    #[test]
    fn gap_report_of_zero_source_is_inconclusive() {
        let r = gap_condition_report(&SourceCoefficients::zeros(50), &geom(), 0.95);
        assert_eq!(r.verdict, GapVerdict::Inconclusive);
        assert!(r.nonzero_indices.is_empty());
    }

    #[test]
    fn coefficient_sum_is_linear() {
        let g = geom();
        let a = SourceSpec::Dipole {
            location: pt(1.1, 0.3),
            moment: [0.4, -1.0],
        };
        let b = SourceSpec::ChargePair {
            plus: pt(1.2, 0.3),
            minus: pt(1.0, 3.0),
            charge: 2.0,
        };
        let sa = newtonian_coefficients(&a, &g, 30).unwrap();
        let sb = newtonian_coefficients(&b, &g, 30).unwrap();
        let sum = sa.add(&sb);
        for n in 1..=30 {
            assert_eq!(sum.plus(n), sa.plus(n) + sb.plus(n));
            assert_eq!(sum.minus(n), sa.minus(n) + sb.minus(n));
        }
        assert_eq!(sum.radius, Some(1.0));
    }
}
