//! Nyström discretization of the Neumann–Poincaré operators.
//!
//! Independent of the closed forms in [`crate::spectrum`]: only node
//! positions, normals, curvature and trapezoid weights enter. For disjoint
//! analytic curves every kernel is smooth (the diagonal of `K*` has the
//! curvature limit), so the plain trapezoid rule converges geometrically.

use std::f64::consts::PI;

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ConfocalGeometry, CurvePanel};
use crate::spectrum;

/// Minimum node distance between the two curves.
pub const OVERLAP_TOL: f64 = 1e-8;
/// Largest imaginary part tolerated before the spectrum is flagged.
pub const IMAG_TOL: f64 = 1e-8;

/// `⟨x−y, ν(x)⟩ / (2π|x−y|²)` for `x`, `y` on different curves.
pub fn cross_kernel(x: &CurvePanel, y: &CurvePanel) -> f64 {
    let d = [x.node.x1 - y.node.x1, x.node.x2 - y.node.x2];
    (d[0] * x.normal[0] + d[1] * x.normal[1]) / (2.0 * PI * (d[0] * d[0] + d[1] * d[1]))
}

/// Kernel of `K*` on a single curve, with the limit `κ/(4π)` on the diagonal.
pub fn np_kernel(curve: &[CurvePanel], i: usize, j: usize) -> f64 {
    if i == j {
        curve[i].curvature / (4.0 * PI)
    } else {
        cross_kernel(&curve[i], &curve[j])
    }
}

/// Dense Nyström matrix of `K*` on one curve.
pub fn assemble_single(curve: &[CurvePanel]) -> Vec<Vec<f64>> {
    (0..curve.len())
        .into_par_iter()
        .map(|i| {
            (0..curve.len())
                .map(|j| np_kernel(curve, i, j) * curve[j].weight)
                .collect()
        })
        .collect()
}

/// Dense `2N × 2N` discretization of
/// `[−K*_{Γᵢ}, −∂νᵢ S_{Γₑ}; ∂νₑ S_{Γᵢ}, K*_{Γₑ}]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockNpMatrix {
    pub nodes_per_curve: usize,
    pub rows: Vec<Vec<f64>>,
}

impl BlockNpMatrix {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Negates the inner diagonal block. Mutation used to check that the
    /// validation catches sign transcription errors.
    pub fn negate_inner_block(&mut self) {
        let n = self.nodes_per_curve;
        for row in &mut self.rows[..n] {
            for v in &mut row[..n] {
                *v = -*v;
            }
        }
    }
}

pub fn assemble_block_np(gi: &[CurvePanel], ge: &[CurvePanel]) -> Result<BlockNpMatrix> {
    let n = gi.len();
    if ge.len() != n {
        return Err(Error::InvalidArgument(format!(
            "curves must have the same node count, got {} and {}",
            n,
            ge.len()
        )));
    }
    let min_dist = gi
        .par_iter()
        .map(|x| ge.iter().map(|y| x.node.distance(y.node)).fold(f64::INFINITY, f64::min))
        .reduce(|| f64::INFINITY, f64::min);
    if min_dist < OVERLAP_TOL {
        return Err(Error::CurveOverlap(min_dist));
    }
    let rows = (0..2 * n)
        .into_par_iter()
        .map(|r| {
            let mut row = Vec::with_capacity(2 * n);
            if r < n {
                row.extend((0..n).map(|j| -np_kernel(gi, r, j) * gi[j].weight));
                row.extend(ge.iter().map(|y| -cross_kernel(&gi[r], y) * y.weight));
            } else {
                let i = r - n;
                row.extend(gi.iter().map(|y| cross_kernel(&ge[i], y) * y.weight));
                row.extend((0..n).map(|j| np_kernel(ge, i, j) * ge[j].weight));
            }
            row
        })
        .collect();
    Ok(BlockNpMatrix {
        nodes_per_curve: n,
        rows,
    })
}

/// All eigenvalues of a dense square matrix, with the largest imaginary part.
pub fn eigenvalues(rows: &[Vec<f64>]) -> Result<(Vec<f64>, f64)> {
    let n = rows.len();
    let m = Mat::<f64>::from_fn(n, n, |i, j| rows[i][j]);
    let evs = m
        .eigenvalues()
        .map_err(|e| Error::EigensolveFailure(format!("{e:?}")))?;
    let max_imag = evs.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    Ok((evs.iter().map(|z| z.re).collect(), max_imag))
}

/// An analytic eigenvalue with its mode index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticEigenvalue {
    pub n: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub n: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// The `count` numeric eigenvalues of largest magnitude, descending.
    pub numeric: Vec<f64>,
    pub pairs: Vec<MatchedPair>,
    /// Largest discarded imaginary part over the whole spectrum.
    pub max_imag: f64,
}

impl SpectrumReport {
    pub fn imag_ok(&self) -> bool {
        self.max_imag < IMAG_TOL
    }

    pub fn max_rel_error(&self) -> f64 {
        self.pairs.iter().map(|p| p.rel_error).fold(0.0, f64::max)
    }

    /// Largest relative error over pairs with `n` in the given range.
    pub fn max_rel_error_for(&self, modes: std::ops::RangeInclusive<usize>) -> f64 {
        self.pairs
            .iter()
            .filter(|p| modes.contains(&p.n))
            .map(|p| p.rel_error)
            .fold(0.0, f64::max)
    }
}

/// `{±λ₁,ₙ, ±λ₂,ₙ}` for `n = 1..=n_max`, together with the `n = 0` pair
/// `±1/2` carried by the constant-flux densities.
pub fn analytic_block_spectrum(g: &ConfocalGeometry, n_max: usize) -> Result<Vec<AnalyticEigenvalue>> {
    let mut out = vec![
        AnalyticEigenvalue { n: 0, value: 0.5 },
        AnalyticEigenvalue { n: 0, value: -0.5 },
    ];
    for n in 1..=n_max {
        let m = spectrum::mode_data(n, g)?;
        for value in [m.lambda1, -m.lambda1, m.lambda2, -m.lambda2] {
            out.push(AnalyticEigenvalue { n, value });
        }
    }
    Ok(out)
}

/// `{1/2} ∪ {±αₙ}` for a single ellipse.
pub fn analytic_single_spectrum(rho0: f64, n_max: usize) -> Vec<AnalyticEigenvalue> {
    let mut out = vec![AnalyticEigenvalue { n: 0, value: 0.5 }];
    for n in 1..=n_max {
        let alpha = spectrum::single_ellipse_np(n, rho0).alpha;
        out.push(AnalyticEigenvalue { n, value: alpha });
        out.push(AnalyticEigenvalue { n, value: -alpha });
    }
    out
}

/// Pairs the `count` largest numeric eigenvalues with the analytic list.
///
/// Analytic values are visited by decreasing magnitude; each takes the
/// closest unused numeric value of the same sign, or of either sign once
/// none of the same sign is left.
pub fn match_spectrum(
    numeric_all: &[f64],
    max_imag: f64,
    analytic: &[AnalyticEigenvalue],
    count: usize,
) -> SpectrumReport {
    let mut numeric = numeric_all.to_vec();
    numeric.sort_by(|a, b| b.abs().total_cmp(&a.abs()).then(b.total_cmp(a)));
    numeric.truncate(count);
    let mut targets = analytic.to_vec();
    targets.sort_by(|a, b| {
        b.value
            .abs()
            .total_cmp(&a.value.abs())
            .then(b.value.total_cmp(&a.value))
    });
    let mut used = vec![false; numeric.len()];
    let mut pairs = Vec::new();
    for t in targets {
        let pick = |same_sign: bool| {
            numeric
                .iter()
                .enumerate()
                .filter(|&(k, v)| !used[k] && (!same_sign || v.signum() == t.value.signum()))
                .min_by(|a, b| (a.1 - t.value).abs().total_cmp(&(b.1 - t.value).abs()))
                .map(|(k, _)| k)
        };
        let Some(k) = pick(true).or_else(|| pick(false)) else {
            break;
        };
        used[k] = true;
        pairs.push(MatchedPair {
            n: t.n,
            analytic: t.value,
            numeric: numeric[k],
            rel_error: (numeric[k] - t.value).abs() / t.value.abs(),
        });
    }
    SpectrumReport {
        numeric,
        pairs,
        max_imag,
    }
}

/// Eigenvalues of `m` matched against `analytic`; see [`match_spectrum`].
pub fn numeric_spectrum(m: &BlockNpMatrix, count: usize, analytic: &[AnalyticEigenvalue]) -> Result<SpectrumReport> {
    if count > m.dim() / 4 {
        return Err(Error::InvalidArgument(format!(
            "count {count} exceeds a quarter of the matrix size {}",
            m.dim()
        )));
    }
    let (values, max_imag) = eigenvalues(&m.rows)?;
    Ok(match_spectrum(&values, max_imag, analytic, count))
}
