//! Spectral solution of the two-interface transmission problem.
//!
//! The shell `{ρᵢ < ρ < ρₑ}` has permittivity `−1 + iδ`, core and exterior
//! have permittivity 1. The potential is represented as
//! `V = F + S_{Γᵢ}[φᵢ] + S_{Γₑ}[φₑ]` and the densities solve
//! `(z_δ I + 𝕂*) Φ = g` mode by mode, where `𝕂*` is the block operator whose
//! eigen-data lives in [`crate::spectrum`].
//!
//! Densities are expanded in `φₙ^{c·} = cos nω / Ξ` and `φₙ^{s·} = sin nω / Ξ`
//! on each interface.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, ConfocalGeometry, EllipticPoint};
use crate::quadrature::composite_gauss_legendre;
use crate::source::{self, SourceCoefficients, SourceSpec};
use crate::spectrum::{self, Branch, ModeData, Parity, Regime, MODE_EXPONENT_LIMIT};

/// Relative size of the neglected series tail that triggers
/// [`Error::TruncationWarning`].
pub const TAIL_TOLERANCE: f64 = 1e-10;
/// Extra modes beyond the resonant band in the default truncation.
pub const N_MAX_MARGIN: usize = 40;
/// Default loss grid, `10⁻²` down to `10⁻⁸`.
pub const DEFAULT_DELTAS: [f64; 7] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8];

const GROWTH_THRESHOLD: f64 = 1e3;
const BOUNDED_SPREAD: f64 = 2.0;
const MIN_SWEEP_POINTS: usize = 4;
const MIN_SWEEP_DECADES: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellConfig {
    pub geometry: ConfocalGeometry,
    pub delta: f64,
    pub n_max: usize,
}

impl ShellConfig {
    pub fn new(geometry: ConfocalGeometry, delta: f64, n_max: usize) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "loss parameter must be positive, got {delta}"
            )));
        }
        if n_max == 0 {
            return Err(Error::InvalidArgument("n_max must be at least 1".into()));
        }
        Ok(Self { geometry, delta, n_max })
    }

    /// The same configuration with `δ ↦ −δ` (an active shell). Only meaningful
    /// for conjugation checks: the fields are the complex conjugates.
    pub fn conjugate(&self) -> Self {
        Self {
            delta: -self.delta,
            ..*self
        }
    }

    /// Shell permittivity `−1 + iδ`.
    pub fn shell_permittivity(&self) -> Complex64 {
        Complex64::new(-1.0, self.delta)
    }
}

/// `z_δ = iδ / (2(2 − iδ))`, the spectral shift seen by the block operator.
pub fn z_param(delta: f64) -> Complex64 {
    let i_delta = Complex64::new(0.0, delta);
    i_delta / (2.0 * (2.0 - i_delta))
}

/// Truncation order for a loss `δ`: the resonant band
/// `⌈2 ln(1/δ)/(ρₑ−ρᵢ)⌉ + margin`, extended until the source tail is below
/// [`TAIL_TOLERANCE`], and capped by the overflow guard.
pub fn adaptive_n_max(s: &SourceSpec, g: &ConfocalGeometry, delta: f64) -> Result<usize> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "loss parameter must be positive, got {delta}"
        )));
    }
    let cap = (MODE_EXPONENT_LIMIT / (2.0 * g.rho_e())).floor() as usize;
    let base = (2.0 * (1.0 / delta).ln() / g.gap()).ceil().max(0.0) as usize + N_MAX_MARGIN;
    if base > cap {
        return Err(Error::OverflowGuard {
            n: base,
            exponent: 2.0 * base as f64 * g.rho_e(),
            limit: MODE_EXPONENT_LIMIT,
        });
    }
    match s {
        SourceSpec::Coefficients { f_plus, f_minus, .. } => Ok(base.max(f_plus.len()).max(f_minus.len()).min(cap)),
        _ => {
            let sc = source::newtonian_coefficients(s, g, cap)?;
            let weights = forcing_weights(&sc, g);
            let rate = sc.radius.map_or(0.0, |r| r - g.rho_e());
            Ok((base..=cap)
                .find(|&n| tail_estimate(&weights[..n], rate) < TAIL_TOLERANCE)
                .unwrap_or(cap))
        }
    }
}

/// Per-mode forcing in the `φ` basis of each parity, `[inner, outer]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeForcing {
    pub n: usize,
    pub cos: [f64; 2],
    pub sin: [f64; 2],
}

impl ModeForcing {
    pub fn pair(&self, parity: Parity) -> [f64; 2] {
        match parity {
            Parity::Cos => self.cos,
            Parity::Sin => self.sin,
        }
    }
}

/// Forcing `g = (∂F/∂νᵢ, −∂F/∂νₑ)` expanded in the density basis.
///
/// With `F = c − Σ (F⁺ₙ cos nω cosh nρ + F⁻ₙ sin nω sinh nρ)` and
/// `Ξ ∂/∂ν = ∂/∂ρ` this gives `−nF⁺ₙ sinh nρᵢ`, `−nF⁻ₙ cosh nρᵢ` on the inner
/// interface and `+nF⁺ₙ sinh nρₑ`, `+nF⁻ₙ cosh nρₑ` on the outer one.
pub fn boundary_forcing(sc: &SourceCoefficients, g: &ConfocalGeometry) -> Vec<ModeForcing> {
    let (ri, re) = (g.rho_i(), g.rho_e());
    (1..=sc.n_max())
        .map(|n| {
            let nf = n as f64;
            let (fp, fm) = (nf * sc.plus(n), nf * sc.minus(n));
            ModeForcing {
                n,
                cos: [-fp * (nf * ri).sinh(), fp * (nf * re).sinh()],
                sin: [-fm * (nf * ri).cosh(), fm * (nf * re).cosh()],
            }
        })
        .collect()
}

/// Size of the outer-interface forcing of each mode.
fn forcing_weights(sc: &SourceCoefficients, g: &ConfocalGeometry) -> Vec<f64> {
    boundary_forcing(sc, g)
        .iter()
        .map(|f| f.cos[1].abs() + f.sin[1].abs())
        .collect()
}

/// Geometric tail bound `w_N r/(1−r) / max w` with ratio `r = e^{−rate}`
/// inflated by the polynomial factor `(N+1)/N`.
fn tail_estimate(weights: &[f64], rate: f64) -> f64 {
    let Some(&last) = weights.last() else {
        return 0.0;
    };
    let peak = weights.iter().fold(0.0f64, |m, &w| m.max(w));
    if peak == 0.0 {
        return 0.0;
    }
    if rate <= 0.0 {
        return f64::INFINITY;
    }
    let n = weights.len() as f64;
    let r = (-rate).exp() * (n + 1.0) / n;
    if r >= 1.0 {
        return f64::INFINITY;
    }
    last / peak * r / (1.0 - r)
}

/// `⟨g, Ψₙ^{k±}⟩_S` for the four branches of a mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeProjection {
    pub n: usize,
    pub one_plus: f64,
    pub one_minus: f64,
    pub two_plus: f64,
    pub two_minus: f64,
}

impl ModeProjection {
    pub fn get(&self, branch: Branch) -> f64 {
        match branch {
            Branch::OnePlus => self.one_plus,
            Branch::OneMinus => self.one_minus,
            Branch::TwoPlus => self.two_plus,
            Branch::TwoMinus => self.two_minus,
        }
    }
}

/// S-pairings of the forcing with each eigenfunction, `fᵀ G Ψ` with the Gram
/// matrix of [`spectrum::s_gram`].
pub fn mode_projections(forcing: &[ModeForcing], modes: &[ModeData], g: &ConfocalGeometry) -> Vec<ModeProjection> {
    forcing
        .iter()
        .zip(modes)
        .map(|(f, m)| {
            debug_assert_eq!(f.n, m.n);
            let gram_c = spectrum::s_gram(m.n, g, Parity::Cos);
            let gram_s = spectrum::s_gram(m.n, g, Parity::Sin);
            let p = |b: Branch| {
                let gram = match b.parity() {
                    Parity::Cos => &gram_c,
                    Parity::Sin => &gram_s,
                };
                spectrum::bilinear(gram, f.pair(b.parity()), m.eigenvector(b))
            };
            ModeProjection {
                n: m.n,
                one_plus: p(Branch::OnePlus),
                one_minus: p(Branch::OneMinus),
                two_plus: p(Branch::TwoPlus),
                two_minus: p(Branch::TwoMinus),
            }
        })
        .collect()
}

/// Density weights of one mode, `[inner, outer]` per parity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeDensity {
    pub n: usize,
    pub cos: [Complex64; 2],
    pub sin: [Complex64; 2],
}

impl ModeDensity {
    fn pair(&self, parity: Parity) -> [Complex64; 2] {
        match parity {
            Parity::Cos => self.cos,
            Parity::Sin => self.sin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCoefficients {
    pub modes: Vec<ModeDensity>,
}

impl DensityCoefficients {
    pub fn zero(n_max: usize) -> Self {
        let z = Complex64::new(0.0, 0.0);
        Self {
            modes: (1..=n_max)
                .map(|n| ModeDensity {
                    n,
                    cos: [z; 2],
                    sin: [z; 2],
                })
                .collect(),
        }
    }
}

/// Per-branch resolvent coefficient `⟨g,Ψ⟩_S / ((±λ + z_δ)⟨Ψ,Ψ⟩_S)`.
pub fn branch_coefficient(projection: f64, eigenvalue: f64, norm: f64, z: Complex64) -> Complex64 {
    if projection == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    projection / ((eigenvalue + z) * norm)
}

/// Resolvent solution of `(z_δ + 𝕂*)Φ = g` from the mode data.
pub fn solve_densities(sc: &SourceCoefficients, config: &ShellConfig) -> Result<DensityCoefficients> {
    let g = &config.geometry;
    let n_max = config.n_max;
    if let Some(radius) = sc.radius {
        let weights = forcing_weights(sc, g);
        let kept = &weights[..n_max.min(weights.len())];
        let tail = tail_estimate(kept, radius - g.rho_e());
        if tail > TAIL_TOLERANCE {
            return Err(Error::TruncationWarning {
                tail,
                tolerance: TAIL_TOLERANCE,
                n_max,
            });
        }
    } else {
        let dropped = (n_max + 1..=sc.n_max()).any(|n| sc.plus(n) != 0.0 || sc.minus(n) != 0.0);
        if dropped {
            return Err(Error::TruncationWarning {
                tail: f64::INFINITY,
                tolerance: TAIL_TOLERANCE,
                n_max,
            });
        }
    }
    let truncated = truncate(sc, n_max);
    let modes = spectrum::mode_table(g, n_max)?;
    let forcing = boundary_forcing(&truncated, g);
    let proj = mode_projections(&forcing, &modes, g);
    Ok(densities_from_projections(&proj, &modes, config.delta))
}

fn truncate(sc: &SourceCoefficients, n_max: usize) -> SourceCoefficients {
    SourceCoefficients {
        c: sc.c,
        f_plus: (1..=n_max).map(|n| sc.plus(n)).collect(),
        f_minus: (1..=n_max).map(|n| sc.minus(n)).collect(),
        radius: sc.radius,
    }
}

pub fn densities_from_projections(proj: &[ModeProjection], modes: &[ModeData], delta: f64) -> DensityCoefficients {
    let z = z_param(delta);
    let modes = proj
        .iter()
        .zip(modes)
        .map(|(p, m)| {
            let c = |b: Branch| branch_coefficient(p.get(b), m.eigenvalue(b), m.norm(b), z);
            let (c1p, c2p, c1m, c2m) = (
                c(Branch::OnePlus),
                c(Branch::TwoPlus),
                c(Branch::OneMinus),
                c(Branch::TwoMinus),
            );
            ModeDensity {
                n: m.n,
                cos: [c1p * m.a1 + c2p * m.a2, (c1p + c2p) * m.b],
                sin: [(c1m + c2m) * m.b, c1m * m.a2 + c2m * m.a1],
            }
        })
        .collect();
    DensityCoefficients { modes }
}

/// Which one-sided limit to take on an interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Inside,
    Outside,
}

/// Single-layer profile of `φₙ^{·k}` on `Γ_{ρk}` as a function of `ρ`:
/// value and `ρ`-derivative of the factor multiplying `cos nω` (or `sin nω`),
/// already divided by `−n`.
fn layer_profile(n: usize, rho: f64, rho_k: f64, parity: Parity, side: Side) -> (f64, f64) {
    let nf = n as f64;
    let inside = rho < rho_k || (rho == rho_k && side == Side::Inside);
    // interior: cosh(nρ) e^{−nρk}; exterior: cosh(nρk) e^{−nρ}, sinh for sine
    let (val, der) = if inside {
        let up = (nf * (rho - rho_k)).exp();
        let down = (-nf * (rho + rho_k)).exp();
        match parity {
            Parity::Cos => (0.5 * (up + down), 0.5 * nf * (up - down)),
            Parity::Sin => (0.5 * (up - down), 0.5 * nf * (up + down)),
        }
    } else {
        let near = (nf * (rho_k - rho)).exp();
        let far = (-nf * (rho_k + rho)).exp();
        match parity {
            Parity::Cos => (0.5 * (near + far), -0.5 * nf * (near + far)),
            Parity::Sin => (0.5 * (near - far), -0.5 * nf * (near - far)),
        }
    };
    (-val / nf, -der / nf)
}

/// Cosine and sine coefficients of the scattered field `S_{Γᵢ}[φᵢ] + S_{Γₑ}[φₑ]`
/// and of its `ρ`-derivative for mode `n`.
fn scattered_mode(m: &ModeDensity, g: &ConfocalGeometry, rho: f64, side: Side) -> [[Complex64; 2]; 2] {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (slot, parity) in [Parity::Cos, Parity::Sin].into_iter().enumerate() {
        let w = m.pair(parity);
        for (k, rho_k) in [g.rho_i(), g.rho_e()].into_iter().enumerate() {
            let (v, d) = layer_profile(m.n, rho, rho_k, parity, side);
            out[slot][0] += w[k] * v;
            out[slot][1] += w[k] * d;
        }
    }
    out
}

/// Series part of the source, same layout as [`scattered_mode`].
fn source_mode(sc: &SourceCoefficients, n: usize, rho: f64) -> [[f64; 2]; 2] {
    let nf = n as f64;
    let (fp, fm) = (sc.plus(n), sc.minus(n));
    let (ch, sh) = ((nf * rho).cosh(), (nf * rho).sinh());
    [[-fp * ch, -fp * nf * sh], [-fm * sh, -fm * nf * ch]]
}

/// Scattered potential `S_{Γᵢ}[φᵢ] + S_{Γₑ}[φₑ]` at `(ρ, ω)`.
pub fn eval_scattered(dc: &DensityCoefficients, config: &ShellConfig, x: EllipticPoint, side: Side) -> Complex64 {
    let g = &config.geometry;
    dc.modes
        .iter()
        .map(|m| {
            let nf = m.n as f64;
            let [c, s] = scattered_mode(m, g, x.rho, side);
            c[0] * (nf * x.omega).cos() + s[0] * (nf * x.omega).sin()
        })
        .sum()
}

/// `V_δ = F + S_{Γᵢ}[φᵢ] + S_{Γₑ}[φₑ]` with `F` taken from its series, so
/// `x` must lie inside the convergence radius of `sc`.
pub fn eval_potential(
    sc: &SourceCoefficients,
    dc: &DensityCoefficients,
    config: &ShellConfig,
    x: EllipticPoint,
) -> Complex64 {
    eval_scattered(dc, config, x, Side::Inside) + sc.eval(x)
}

/// `(∂ρV, ∂ωV)` with the source series, valid off the interfaces; on an
/// interface `side` selects the one-sided limit.
pub fn eval_gradient(
    sc: &SourceCoefficients,
    dc: &DensityCoefficients,
    config: &ShellConfig,
    rho: f64,
    omega: f64,
    side: Side,
) -> [Complex64; 2] {
    let g = &config.geometry;
    let mut d = [Complex64::new(0.0, 0.0); 2];
    let n_top = dc.modes.len().max(sc.n_max());
    for n in 1..=n_top {
        let nf = n as f64;
        let (s, c) = (nf * omega).sin_cos();
        let [[fc, fcd], [fs, fsd]] = source_mode(sc, n, rho);
        let mut cos = [Complex64::new(fc, 0.0), Complex64::new(fcd, 0.0)];
        let mut sin = [Complex64::new(fs, 0.0), Complex64::new(fsd, 0.0)];
        if let Some(m) = dc.modes.get(n - 1) {
            let [sc_, ss] = scattered_mode(m, g, rho, side);
            cos = [cos[0] + sc_[0], cos[1] + sc_[1]];
            sin = [sin[0] + ss[0], sin[1] + ss[1]];
        }
        d[0] += cos[1] * c + sin[1] * s;
        d[1] += nf * (sin[0] * c - cos[0] * s);
    }
    d
}

/// `(∂ρV, ∂ωV)` inside the shell.
pub fn eval_gradient_shell(
    sc: &SourceCoefficients,
    dc: &DensityCoefficients,
    config: &ShellConfig,
    rho: f64,
    omega: f64,
) -> Result<[Complex64; 2]> {
    let g = &config.geometry;
    if !(rho > g.rho_i() && rho < g.rho_e()) {
        return Err(Error::InvalidArgument(format!(
            "rho = {rho} is outside the shell ({}, {})",
            g.rho_i(),
            g.rho_e()
        )));
    }
    Ok(eval_gradient(sc, dc, config, rho, omega, Side::Inside))
}

/// Quadrature layout for [`dissipated_power_direct`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureResolution {
    pub rho_panels: usize,
    pub rho_points: usize,
    pub omega_nodes: usize,
}

impl QuadratureResolution {
    /// Four 32-point panels in `ρ`, `max(4 n_max, 512)` nodes in `ω`.
    pub fn for_n_max(n_max: usize) -> Self {
        Self {
            rho_panels: 4,
            rho_points: 32,
            omega_nodes: (4 * n_max).max(512),
        }
    }

    /// Twice as many panels and `ω` nodes.
    pub fn refined(&self) -> Self {
        Self {
            rho_panels: 2 * self.rho_panels,
            omega_nodes: 2 * self.omega_nodes,
            ..*self
        }
    }
}

/// `E_δ = δ ∫∫ (|∂ρV|² + |∂ωV|²) dρ dω` over the shell, Gauss–Legendre in
/// `ρ` and the trapezoid rule in `ω` (evaluated by an FFT of the mode
/// coefficients).
pub fn dissipated_power_direct(
    sc: &SourceCoefficients,
    dc: &DensityCoefficients,
    config: &ShellConfig,
    quad: QuadratureResolution,
) -> Result<f64> {
    let g = &config.geometry;
    let n_top = dc.modes.len().max(sc.n_max());
    let m = quad.omega_nodes;
    if m < 4 * n_top.max(1) {
        return Err(Error::InvalidArgument(format!(
            "{m} angular nodes cannot resolve {n_top} modes (need at least {})",
            4 * n_top
        )));
    }
    let nodes = composite_gauss_legendre(g.rho_i(), g.rho_e(), quad.rho_panels, quad.rho_points);
    let fft = FftPlanner::<f64>::new().plan_fft_inverse(m);
    let zero = Complex64::new(0.0, 0.0);
    let h = TAU / m as f64;
    let mut total = 0.0;
    let mut rho_buf = vec![zero; m];
    let mut omega_buf = vec![zero; m];
    for (rho, weight) in nodes {
        rho_buf.fill(zero);
        omega_buf.fill(zero);
        for n in 1..=n_top {
            let nf = n as f64;
            let [[fc, fcd], [fs, fsd]] = source_mode(sc, n, rho);
            let (mut cos, mut sin) = (
                [Complex64::new(fc, 0.0), Complex64::new(fcd, 0.0)],
                [Complex64::new(fs, 0.0), Complex64::new(fsd, 0.0)],
            );
            if let Some(md) = dc.modes.get(n - 1) {
                let [a, b] = scattered_mode(md, g, rho, Side::Inside);
                cos = [cos[0] + a[0], cos[1] + a[1]];
                sin = [sin[0] + b[0], sin[1] + b[1]];
            }
            // ∂ρV has (cos, sin) coefficients (C', S'); ∂ωV has (nS, −nC)
            place(&mut rho_buf, n, cos[1], sin[1]);
            place(&mut omega_buf, n, nf * sin[0], -nf * cos[0]);
        }
        fft.process(&mut rho_buf);
        fft.process(&mut omega_buf);
        let ring: f64 = rho_buf.iter().chain(&omega_buf).map(|v| v.norm_sqr()).sum();
        total += weight * h * ring;
    }
    Ok(config.delta * total)
}

/// Writes `C cos nω + S sin nω` into an inverse-FFT input.
fn place(buf: &mut [Complex64], n: usize, c: Complex64, s: Complex64) {
    let m = buf.len();
    let i = Complex64::new(0.0, 1.0);
    buf[n] += 0.5 * (c - i * s);
    buf[m - n] += 0.5 * (c + i * s);
}

/// Spectral surrogate `δ Σ ⟨g,Ψ⟩²_S / (⟨Ψ,Ψ⟩_S (λ² + δ²))`.
pub fn dissipated_power_spectral(proj: &[ModeProjection], modes: &[ModeData], delta: f64) -> f64 {
    proj.iter()
        .zip(modes)
        .map(|(p, m)| {
            Branch::ALL
                .iter()
                .map(|&b| {
                    let v = p.get(b);
                    if v == 0.0 {
                        return 0.0;
                    }
                    let lambda = m.eigenvalue(b);
                    v * v / m.norm(b) / (lambda * lambda + delta * delta)
                })
                .sum::<f64>()
        })
        .sum::<f64>()
        * delta
}

/// A solved configuration: source data, modes and densities for one `δ`.
#[derive(Debug, Clone)]
pub struct ShellSolution {
    pub config: ShellConfig,
    pub source: SourceSpec,
    pub coefficients: SourceCoefficients,
    pub modes: Vec<ModeData>,
    pub projections: Vec<ModeProjection>,
    pub densities: DensityCoefficients,
}

impl ShellSolution {
    pub fn solve(source: &SourceSpec, config: &ShellConfig) -> Result<Self> {
        let g = &config.geometry;
        // coefficients beyond n_max feed the truncation check
        let order = match source {
            SourceSpec::Coefficients { f_plus, f_minus, .. } => f_plus.len().max(f_minus.len()).max(config.n_max),
            _ => config.n_max,
        };
        let coefficients = source::newtonian_coefficients(source, g, order)?;
        let densities = solve_densities(&coefficients, config)?;
        let coefficients = truncate(&coefficients, config.n_max);
        let modes = spectrum::mode_table(g, config.n_max)?;
        let forcing = boundary_forcing(&coefficients, g);
        let projections = mode_projections(&forcing, &modes, g);
        Ok(Self {
            config: *config,
            source: source.clone(),
            coefficients,
            modes,
            projections,
            densities,
        })
    }

    /// Solves with the adaptive truncation of [`adaptive_n_max`].
    pub fn solve_adaptive(source: &SourceSpec, geometry: &ConfocalGeometry, delta: f64) -> Result<Self> {
        let n_max = adaptive_n_max(source, geometry, delta)?;
        Self::solve(source, &ShellConfig::new(*geometry, delta, n_max)?)
    }

    /// Total potential. Uses the closed-form source potential when there is
    /// one, so any point off the source singularities is allowed.
    pub fn potential(&self, x: EllipticPoint) -> Result<Complex64> {
        let scattered = eval_scattered(&self.densities, &self.config, x, Side::Inside);
        let free = if self.source.has_closed_form() {
            source::newtonian_eval(
                &self.source,
                self.config.geometry.focal(),
                geometry::to_cartesian(self.config.geometry.focal(), x),
            )?
        } else {
            self.coefficients.eval(x)
        };
        Ok(scattered + free)
    }

    /// One-sided `(∂ρV, ∂ωV)` from the series; `x` must lie inside the
    /// convergence radius of the source expansion.
    pub fn gradient(&self, rho: f64, omega: f64, side: Side) -> [Complex64; 2] {
        eval_gradient(&self.coefficients, &self.densities, &self.config, rho, omega, side)
    }

    pub fn energy_direct(&self) -> Result<f64> {
        self.energy_direct_with(QuadratureResolution::for_n_max(self.config.n_max))
    }

    pub fn energy_direct_with(&self, quad: QuadratureResolution) -> Result<f64> {
        dissipated_power_direct(&self.coefficients, &self.densities, &self.config, quad)
    }

    pub fn energy_spectral(&self) -> f64 {
        dissipated_power_spectral(&self.projections, &self.modes, self.config.delta)
    }

    /// Mode whose four branches carry the largest share of the dissipated power.
    pub fn dominant_mode(&self) -> usize {
        let z = z_param(self.config.delta);
        let share = |p: &ModeProjection, m: &ModeData| -> f64 {
            Branch::ALL
                .iter()
                .map(|&b| {
                    let v = p.get(b);
                    if v == 0.0 {
                        0.0
                    } else {
                        v * v / m.norm(b) / (m.eigenvalue(b) + z).norm_sqr()
                    }
                })
                .sum()
        };
        self.projections
            .iter()
            .zip(&self.modes)
            .max_by(|a, b| share(a.0, a.1).total_cmp(&share(b.0, b.1)))
            .map_or(0, |(p, _)| p.n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub delta: f64,
    pub n_max: usize,
    pub e_direct: f64,
    pub e_spectral: f64,
    /// `|V_δ|` at each probe.
    pub far_samples: Vec<f64>,
    /// `|V_δ| / √E_direct` at each probe.
    pub normalized_far: Vec<f64>,
}

/// Solves for each `δ` in parallel with adaptive truncation.
pub fn sweep(
    s: &SourceSpec,
    g: &ConfocalGeometry,
    deltas: &[f64],
    probes: &[EllipticPoint],
) -> Result<Vec<SweepRecord>> {
    if deltas.is_empty() {
        return Err(Error::InvalidArgument("empty loss list".into()));
    }
    if deltas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument("loss values must be strictly descending".into()));
    }
    if let Some(p) = probes.iter().find(|p| p.rho <= g.rho_e()) {
        return Err(Error::InvalidArgument(format!(
            "probe at rho = {} is not outside the shell",
            p.rho
        )));
    }
    s.check_outside(g)?;
    deltas
        .par_iter()
        .map(|&delta| sweep_point(s, g, delta, probes))
        .collect()
}

pub fn sweep_point(s: &SourceSpec, g: &ConfocalGeometry, delta: f64, probes: &[EllipticPoint]) -> Result<SweepRecord> {
    sweep_point_with(s, g, delta, Truncation::Adaptive, probes)
}

/// Truncation order policy for a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// [`adaptive_n_max`] for each loss value.
    Adaptive,
    Fixed(usize),
}

pub fn sweep_point_with(
    s: &SourceSpec,
    g: &ConfocalGeometry,
    delta: f64,
    truncation: Truncation,
    probes: &[EllipticPoint],
) -> Result<SweepRecord> {
    let sol = match truncation {
        Truncation::Adaptive => ShellSolution::solve_adaptive(s, g, delta)?,
        Truncation::Fixed(n_max) => ShellSolution::solve(s, &ShellConfig::new(*g, delta, n_max)?)?,
    };
    let e_direct = sol.energy_direct()?;
    let far_samples = probes
        .iter()
        .map(|&p| sol.potential(p).map(|v| v.norm()))
        .collect::<Result<Vec<_>>>()?;
    let root = e_direct.sqrt();
    let normalized_far = far_samples
        .iter()
        .map(|v| if root > 0.0 { v / root } else { f64::INFINITY })
        .collect();
    Ok(SweepRecord {
        delta,
        n_max: sol.config.n_max,
        e_direct,
        e_spectral: sol.energy_spectral(),
        far_samples,
        normalized_far,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "CALR")]
    Calr,
    #[serde(rename = "NoCALR")]
    NoCalr,
    Indeterminate,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Calr => "CALR",
            Verdict::NoCalr => "NoCALR",
            Verdict::Indeterminate => "Indeterminate",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnosis {
    pub verdict: Verdict,
    /// Least-squares slope of `ln E` against `ln(1/δ)`.
    pub growth_exponent: f64,
    /// `E(δ_min) / E(δ_max)`.
    pub energy_growth: f64,
    /// `max E / min E` over the sweep.
    pub energy_spread: f64,
    pub rho_star: f64,
    pub far_bound_rho: f64,
}

/// Classifies a sweep.
///
/// * CALR: `E` strictly increasing as `δ` decreases, total growth above
///   `10³`, and the normalized far field decreasing at every probe.
/// * NoCALR: `E` never exceeds twice its value at the largest `δ`.
/// * Indeterminate: anything else, or fewer than four points or four decades.
pub fn calr_classify(records: &[SweepRecord], regime: &Regime) -> Diagnosis {
    let mut recs: Vec<&SweepRecord> = records.iter().collect();
    recs.sort_by(|a, b| b.delta.total_cmp(&a.delta));
    let energies: Vec<f64> = recs.iter().map(|r| r.e_direct).collect();
    let points: Vec<(f64, f64)> = recs
        .iter()
        .filter(|r| r.e_direct > 0.0)
        .map(|r| ((1.0 / r.delta).ln(), r.e_direct.ln()))
        .collect();
    let growth_exponent = if points.len() >= 2 {
        source::least_squares_slope(&points)
    } else {
        f64::NAN
    };
    let (first, last) = (
        energies.first().copied().unwrap_or(0.0),
        energies.last().copied().unwrap_or(0.0),
    );
    let max = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let decades = match (recs.first(), recs.last()) {
        (Some(a), Some(b)) => (a.delta / b.delta).log10(),
        _ => 0.0,
    };
    let verdict = if recs.len() < MIN_SWEEP_POINTS || decades < MIN_SWEEP_DECADES - 1e-9 {
        Verdict::Indeterminate
    } else {
        let increasing = energies.windows(2).all(|w| w[1] > w[0]);
        let probes = recs[0].normalized_far.len();
        let far_decreasing =
            (0..probes).all(|k| recs.windows(2).all(|w| w[1].normalized_far[k] < w[0].normalized_far[k]));
        if increasing && last > GROWTH_THRESHOLD * first && far_decreasing {
            Verdict::Calr
        } else if max <= BOUNDED_SPREAD * first {
            Verdict::NoCalr
        } else {
            Verdict::Indeterminate
        }
    };
    Diagnosis {
        verdict,
        growth_exponent,
        energy_growth: last / first,
        energy_spread: max / min,
        rho_star: regime.rho_star,
        far_bound_rho: regime.far_bound_rho,
    }
}
