//! Closed-form spectral data of the two-interface Neumann–Poincaré operator
//! on confocal ellipses.
//!
//! For every angular index `n ≥ 1` the block operator maps the cosine pair
//! `(φₙ^{ci}, φₙ^{ce})` and the sine pair `(φₙ^{si}, φₙ^{se})` into themselves,
//! where `φₙ^{ck} = Ξ(ρ_k, ω)⁻¹ cos nω` and `φₙ^{sk} = Ξ(ρ_k, ω)⁻¹ sin nω`. The
//! action on coefficient vectors is given by the 2×2 matrices of
//! [`block_matrices`]; the cosine block has eigenvalues `λ₁,ₙ < 0 < λ₂,ₙ` and
//! the sine block `−λ₁,ₙ, −λ₂,ₙ`.
//!
//! All quantities are evaluated with the dominant exponentials factored out,
//! e.g. `e^{−nρₑ} cosh nρᵢ = (e^{−n(ρₑ−ρᵢ)} + e^{−n(ρₑ+ρᵢ)})/2`, so nothing
//! overflows; only underflow limits the usable range of `n`. The small roots
//! `λ₂,ₙ` and `a₂,ₙ` are computed from products of roots to avoid
//! cancellation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ConfocalGeometry;

/// Modes with `2nρₑ` beyond this are rejected with [`Error::OverflowGuard`].
pub const MODE_EXPONENT_LIMIT: f64 = 600.0;

/// Row-major 2×2 matrix.
pub type Mat2 = [[f64; 2]; 2];

/// Eigen-data of the NP operator on a single ellipse `{ρ = ρ₀}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleEllipseMode {
    pub n: usize,
    /// `αₙ = 1/(2e^{2nρ₀})`: eigenvalue for `Ξ⁻¹ cos nω`; `−αₙ` belongs to `Ξ⁻¹ sin nω`.
    pub alpha: f64,
    /// Exterior coefficient `βₙ = (e^{−2nρ₀} − e^{2nρ₀})/2` of the single layer of `∂h/∂ν`.
    pub beta: f64,
}

pub fn single_ellipse_np(n: usize, rho0: f64) -> SingleEllipseMode {
    let t = 2.0 * n as f64 * rho0;
    SingleEllipseMode {
        n,
        alpha: 0.5 * (-t).exp(),
        beta: -t.sinh(),
    }
}

/// Matrices of the block operator on the cosine pair (`A`) and sine pair (`B`)
/// of mode `n`, acting on coefficient vectors `(inner, outer)`.
pub fn block_matrices(n: usize, g: &ConfocalGeometry) -> (Mat2, Mat2) {
    let nf = n as f64;
    let (ri, re) = (g.rho_i(), g.rho_e());
    let gap = (-nf * (re - ri)).exp();
    let sum = (-nf * (re + ri)).exp();
    // (e^{nρᵢ} ∓ e^{−nρᵢ}) / (2e^{nρₑ})
    let minus = 0.5 * (gap - sum);
    let plus = 0.5 * (gap + sum);
    let ei = 0.5 * (-2.0 * nf * ri).exp();
    let ee = 0.5 * (-2.0 * nf * re).exp();
    let a = [[-ei, minus], [plus, ee]];
    let b = [[ei, plus], [minus, -ee]];
    (a, b)
}

/// Analytic spectral record of mode `n ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeData {
    pub n: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub a1: f64,
    pub a2: f64,
    pub b: f64,
    /// `⟨Ψₙ^{1+}, Ψₙ^{1+}⟩_S` for `Ψₙ^{1+} = (a₁ φ^{ci}, b φ^{ce})`.
    pub norm_1p: f64,
    /// `⟨Ψₙ^{1−}, Ψₙ^{1−}⟩_S` for `Ψₙ^{1−} = (b φ^{si}, a₂ φ^{se})`.
    pub norm_1m: f64,
    /// `⟨Ψₙ^{2+}, Ψₙ^{2+}⟩_S` for `Ψₙ^{2+} = (a₂ φ^{ci}, b φ^{ce})`.
    pub norm_2p: f64,
    /// `⟨Ψₙ^{2−}, Ψₙ^{2−}⟩_S` for `Ψₙ^{2−} = (b φ^{si}, a₁ φ^{se})`.
    pub norm_2m: f64,
}

/// One of the four eigenfunction families of a mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    /// `Ψ^{1+}`, eigenvalue `λ₁`, cosine pair.
    OnePlus,
    /// `Ψ^{1−}`, eigenvalue `−λ₁`, sine pair.
    OneMinus,
    /// `Ψ^{2+}`, eigenvalue `λ₂`, cosine pair.
    TwoPlus,
    /// `Ψ^{2−}`, eigenvalue `−λ₂`, sine pair.
    TwoMinus,
}

impl Branch {
    pub const ALL: [Branch; 4] = [Branch::OnePlus, Branch::OneMinus, Branch::TwoPlus, Branch::TwoMinus];

    pub fn parity(self) -> Parity {
        match self {
            Branch::OnePlus | Branch::TwoPlus => Parity::Cos,
            Branch::OneMinus | Branch::TwoMinus => Parity::Sin,
        }
    }
}

impl ModeData {
    pub fn eigenvalue(&self, branch: Branch) -> f64 {
        match branch {
            Branch::OnePlus => self.lambda1,
            Branch::OneMinus => -self.lambda1,
            Branch::TwoPlus => self.lambda2,
            Branch::TwoMinus => -self.lambda2,
        }
    }

    /// Coefficients `(inner, outer)` of the eigenfunction in the `φ` basis of its parity.
    pub fn eigenvector(&self, branch: Branch) -> [f64; 2] {
        match branch {
            Branch::OnePlus => [self.a1, self.b],
            Branch::OneMinus => [self.b, self.a2],
            Branch::TwoPlus => [self.a2, self.b],
            Branch::TwoMinus => [self.b, self.a1],
        }
    }

    pub fn norm(&self, branch: Branch) -> f64 {
        match branch {
            Branch::OnePlus => self.norm_1p,
            Branch::OneMinus => self.norm_1m,
            Branch::TwoPlus => self.norm_2p,
            Branch::TwoMinus => self.norm_2m,
        }
    }
}

/// Exponentially scaled factors shared by the Gram matrices and norms.
struct Scaled {
    /// `e^{−nρᵢ} cosh nρᵢ`, `e^{−nρₑ} cosh nρᵢ`, `e^{−nρₑ} cosh nρₑ`
    cosh: [f64; 3],
    /// same with `sinh`
    sinh: [f64; 3],
}

fn scaled_factors(n: usize, g: &ConfocalGeometry) -> Scaled {
    let nf = n as f64;
    let (ri, re) = (g.rho_i(), g.rho_e());
    let ei = (-2.0 * nf * ri).exp();
    let ee = (-2.0 * nf * re).exp();
    let gap = (-nf * (re - ri)).exp();
    let sum = (-nf * (re + ri)).exp();
    Scaled {
        cosh: [0.5 * (1.0 + ei), 0.5 * (gap + sum), 0.5 * (1.0 + ee)],
        sinh: [
            -0.5 * (-2.0 * nf * ri).exp_m1(),
            0.5 * (gap - sum),
            -0.5 * (-2.0 * nf * re).exp_m1(),
        ],
    }
}

fn check_mode(n: usize, g: &ConfocalGeometry) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "mode index must be >= 1 (the constant mode is outside the mean-zero space)".into(),
        ));
    }
    let exponent = 2.0 * n as f64 * g.rho_e();
    if exponent > MODE_EXPONENT_LIMIT {
        return Err(Error::OverflowGuard {
            n,
            exponent,
            limit: MODE_EXPONENT_LIMIT,
        });
    }
    Ok(())
}

pub fn mode_data(n: usize, g: &ConfocalGeometry) -> Result<ModeData> {
    check_mode(n, g)?;
    let nf = n as f64;
    let (ri, re) = (g.rho_i(), g.rho_e());
    let ei = (-2.0 * nf * ri).exp();
    let ee = (-2.0 * nf * re).exp();
    let gap_half = (-nf * (re - ri)).exp();
    let gap = gap_half * gap_half;
    let d = ee - ei;
    let root = d.hypot(2.0 * gap_half);

    let lambda1 = 0.25 * (d - root);
    // λ₁λ₂ = det A = −e^{−2n(ρₑ−ρᵢ)}/4
    let lambda2 = -0.25 * gap / lambda1;
    let a1 = ee + ei + root;
    // a₁a₂ = −4 e^{−2n(ρₑ−ρᵢ)} (1 − e^{−4nρᵢ})
    let a2 = 4.0 * gap * (-4.0 * nf * ri).exp_m1() / a1;
    let b = -2.0 * gap_half * (1.0 + ei);

    let s = scaled_factors(n, g);
    let pref = PI / nf;
    let (c, sh) = (s.cosh, s.sinh);
    let norm_1p = pref * (a1 * a1 * c[0] + 2.0 * a1 * b * c[1] + b * b * c[2]);
    let norm_1m = pref * (b * b * sh[0] + 2.0 * a2 * b * sh[1] + a2 * a2 * sh[2]);
    let norm_2p = pref * (a2 * a2 * c[0] + 2.0 * a2 * b * c[1] + b * b * c[2]);
    let norm_2m = pref * (b * b * sh[0] + 2.0 * a1 * b * sh[1] + a1 * a1 * sh[2]);

    Ok(ModeData {
        n,
        lambda1,
        lambda2,
        a1,
        a2,
        b,
        norm_1p,
        norm_1m,
        norm_2p,
        norm_2m,
    })
}

/// Mode records for `n = 1..=n_max`.
pub fn mode_table(g: &ConfocalGeometry, n_max: usize) -> Result<Vec<ModeData>> {
    (1..=n_max).map(|n| mode_data(n, g)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Cos,
    Sin,
}

/// Gram matrix of the S-inner product `⟨φ, ψ⟩_S = −⟨φ, S[ψ]⟩` on the pair
/// `(φₙ^{·i}, φₙ^{·e})` of the given parity. Symmetric and positive definite.
pub fn s_gram(n: usize, g: &ConfocalGeometry, parity: Parity) -> Mat2 {
    let s = scaled_factors(n, g);
    let f = match parity {
        Parity::Cos => s.cosh,
        Parity::Sin => s.sinh,
    };
    let pref = PI / n as f64;
    [[pref * f[0], pref * f[1]], [pref * f[1], pref * f[2]]]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeKind {
    /// `ρₑ ≤ 3ρᵢ`
    Thin,
    /// `ρₑ > 3ρᵢ`
    Thick,
}

/// Critical elliptic radius and far-field boundedness threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub kind: RegimeKind,
    pub rho_star: f64,
    /// Probes at elliptic radius beyond this see a uniformly bounded field.
    pub far_bound_rho: f64,
}

/// `ρ* = (3ρₑ−ρᵢ)/2` for thin shells and `2(ρₑ−ρᵢ)` for thick ones.
///
/// The boundedness threshold is read as `2ρₑ−ρᵢ` (thin) and `3ρₑ−4ρᵢ`
/// (thick). The critical radius does not depend on the focal distance.
pub fn critical_radius(rho_i: f64, rho_e: f64) -> Result<Regime> {
    if !(rho_i.is_finite() && rho_e.is_finite() && rho_i > 0.0 && rho_i < rho_e) {
        return Err(Error::InvalidGeometry(format!(
            "need 0 < rho_i < rho_e, got rho_i = {rho_i}, rho_e = {rho_e}"
        )));
    }
    // absorbs rounding in 3ρᵢ, e.g. (0.3, 0.9)
    Ok(if rho_e <= 3.0 * rho_i + 4.0 * f64::EPSILON * rho_e {
        Regime {
            kind: RegimeKind::Thin,
            rho_star: (3.0 * rho_e - rho_i) / 2.0,
            far_bound_rho: 2.0 * rho_e - rho_i,
        }
    } else {
        Regime {
            kind: RegimeKind::Thick,
            rho_star: 2.0 * (rho_e - rho_i),
            far_bound_rho: 3.0 * rho_e - 4.0 * rho_i,
        }
    })
}

/// Predicted growth law `|value| ≈ C·n^power·e^{−rate·n}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayLaw {
    pub power: i32,
    pub rate: f64,
}

impl DecayLaw {
    /// `|value| / (n^power e^{−rate·n})`, which tends to a positive constant.
    pub fn normalize(&self, n: usize, value: f64) -> f64 {
        let nf = n as f64;
        value.abs() * (self.rate * nf).exp() / nf.powi(self.power)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticRates {
    pub kind: RegimeKind,
    pub lambda1: DecayLaw,
    pub lambda2: DecayLaw,
    pub norm_1p: DecayLaw,
    pub norm_1m: DecayLaw,
    pub norm_2p: DecayLaw,
    pub norm_2m: DecayLaw,
}

pub fn asymptotic_rates(g: &ConfocalGeometry) -> AsymptoticRates {
    let (ri, re) = (g.rho_i(), g.rho_e());
    let gap = re - ri;
    let law = |power, rate| DecayLaw { power, rate };
    if re <= 3.0 * ri {
        AsymptoticRates {
            kind: RegimeKind::Thin,
            lambda1: law(0, gap),
            lambda2: law(0, gap),
            norm_1p: law(-1, 2.0 * gap),
            norm_1m: law(-1, 2.0 * gap),
            norm_2p: law(-1, 2.0 * gap),
            norm_2m: law(-1, 2.0 * gap),
        }
    } else {
        AsymptoticRates {
            kind: RegimeKind::Thick,
            lambda1: law(0, 2.0 * ri),
            lambda2: law(0, 2.0 * (re - 2.0 * ri)),
            norm_1p: law(-1, 4.0 * ri),
            norm_1m: law(-1, 2.0 * gap),
            norm_2p: law(-1, 2.0 * gap),
            norm_2m: law(-1, 4.0 * ri),
        }
    }
}

pub(crate) fn mat_vec(m: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

/// `uᵀ M v`.
pub fn bilinear(m: &Mat2, u: [f64; 2], v: [f64; 2]) -> f64 {
    let mv = mat_vec(m, v);
    u[0] * mv[0] + u[1] * mv[1]
}
