//! Quadrature oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

use calr_core::geometry::{self, ConfocalGeometry, EllipticPoint};

/// A closed curve `{ρ = ρ₀}` sampled at `2m` points equispaced in `ω`.
pub struct Ring {
    pub rho: f64,
    pub omega: Vec<f64>,
    pub points: Vec<[f64; 2]>,
    pub speed: Vec<f64>,
}

impl Ring {
    pub fn new(focal: f64, rho: f64, nodes: usize) -> Self {
        let omega: Vec<f64> = (0..nodes).map(|j| TAU * j as f64 / nodes as f64).collect();
        let points = omega
            .iter()
            .map(|&w| {
                let x = geometry::to_cartesian(focal, EllipticPoint { rho, omega: w });
                [x.x1, x.x2]
            })
            .collect();
        let speed = omega.iter().map(|&w| geometry::metric_factor(focal, rho, w)).collect();
        Self {
            rho,
            omega,
            points,
            speed,
        }
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }
}

/// Kress weights `R_j` for `∫ ln(4 sin²((t−τ)/2)) f(τ) dτ ≈ Σ R_{|i−j|} f(t_j)`
/// on `2m` equispaced nodes.
pub fn kress_weights(nodes: usize) -> Vec<f64> {
    let m = nodes / 2;
    let mf = m as f64;
    (0..nodes)
        .map(|j| {
            let t = PI * j as f64 / mf;
            let sum: f64 = (1..m).map(|k| (k as f64 * t).cos() / k as f64).sum();
            -2.0 * PI / mf * sum - PI / (mf * mf) * (mf * t).cos()
        })
        .collect()
}

/// `S_Γ[ψ]` at the nodes of `target`, for a density `ψ` sampled on `source`.
/// Uses the Kress product rule when the two rings coincide and the plain
/// trapezoid rule otherwise.
pub fn single_layer(source: &Ring, density: &[f64], target: &Ring) -> Vec<f64> {
    let n = source.len();
    let h = TAU / n as f64;
    if source.rho == target.rho {
        let r = kress_weights(n);
        (0..n)
            .map(|i| {
                let mut acc = 0.0;
                for j in 0..n {
                    let f = density[j] * source.speed[j];
                    let smooth = if i == j {
                        source.speed[i].ln()
                    } else {
                        let d = dist2(source.points[i], source.points[j]);
                        let s = (0.5 * (source.omega[i] - source.omega[j])).sin();
                        0.5 * (d / (4.0 * s * s)).ln()
                    };
                    acc += 0.5 * r[(i + n - j) % n] * f + h * smooth * f;
                }
                acc / TAU
            })
            .collect()
    } else {
        target
            .points
            .iter()
            .map(|&x| {
                (0..n)
                    .map(|j| 0.5 * dist2(x, source.points[j]).ln() * density[j] * source.speed[j] * h)
                    .sum::<f64>()
                    / TAU
            })
            .collect()
    }
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// `⟨φ, ψ⟩_S = −Σ_k ∫_{Γk} φ S[ψ] ds` for densities on the two interfaces.
pub fn s_pairing(rings: &[Ring; 2], phi: &[Vec<f64>; 2], psi: &[Vec<f64>; 2]) -> f64 {
    let mut total = 0.0;
    for (k, target) in rings.iter().enumerate() {
        let mut s_psi = vec![0.0; target.len()];
        for (l, source) in rings.iter().enumerate() {
            for (acc, v) in s_psi.iter_mut().zip(single_layer(source, &psi[l], target)) {
                *acc += v;
            }
        }
        let h = TAU / target.len() as f64;
        total -= (0..target.len())
            .map(|i| phi[k][i] * s_psi[i] * target.speed[i] * h)
            .sum::<f64>();
    }
    total
}

pub fn rings(g: &ConfocalGeometry, nodes: usize) -> [Ring; 2] {
    [
        Ring::new(g.focal(), g.rho_i(), nodes),
        Ring::new(g.focal(), g.rho_e(), nodes),
    ]
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}
