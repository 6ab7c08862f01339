//! Self-check of the spectral solver against the Nyström oracle and its own
//! identities for the configured geometry.

use std::f64::consts::TAU;

use calr_core::geometry::{sample_ellipse, ConfocalGeometry, EllipticPoint};
use calr_core::oracle::{self, analytic_block_spectrum, assemble_block_np};
use calr_core::solver::{self, calr_classify, QuadratureResolution, ShellSolution, Side, Verdict};
use calr_core::source::{self, SourceSpec};
use calr_core::spectrum::{self, critical_radius, Branch, Parity, MODE_EXPONENT_LIMIT};
use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

/// Coarsest quarter resolution at which the convergence check is meaningful.
const MIN_CONVERGENCE_NODES: usize = 64;
/// Default resonant source position as a fraction of the way from `ρₑ` to `ρ*`.
const INSIDE_FRACTION: f64 = 0.55;
/// Below this relative error the oracle is at round-off and cannot improve.
const ROUNDOFF_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub observed: String,
    pub expected: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
    pub indeterminate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub rho_i: f64,
    pub rho_e: f64,
    pub nodes: usize,
    pub sign_flip: bool,
    pub checks: Vec<Check>,
    pub summary: Summary,
}

impl ValidationReport {
    pub fn failed(&self) -> bool {
        self.summary.failed > 0
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Default)]
struct Checks(Vec<Check>);

impl Checks {
    fn push(&mut self, name: &str, status: Status, observed: String, expected: impl Into<String>) {
        self.0.push(Check {
            name: name.into(),
            status,
            observed,
            expected: expected.into(),
        });
    }

    fn below(&mut self, name: &str, value: f64, limit: f64) {
        let status = if value < limit { Status::Pass } else { Status::Fail };
        self.push(name, status, format!("{value:.3e}"), format!("< {limit:.0e}"));
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Largest relative error over modes `1..=modes` of the block spectrum at `nodes` per curve.
fn oracle_error(g: &ConfocalGeometry, nodes: usize, modes: usize, flip: bool) -> Result<(f64, usize, f64), CliError> {
    let gi = sample_ellipse(g.focal(), g.rho_i(), nodes)?;
    let ge = sample_ellipse(g.focal(), g.rho_e(), nodes)?;
    let mut m = assemble_block_np(&gi, &ge)?;
    if flip {
        m.negate_inner_block();
    }
    // the constant-flux densities add the pair ±1/2 on top of the n ≥ 1 modes
    let count = 4 * modes + 2;
    if count > m.dim() / 4 {
        return Ok((f64::INFINITY, 0, 0.0));
    }
    let report = oracle::numeric_spectrum(&m, count, &analytic_block_spectrum(g, modes + 2)?)?;
    let matched = report.pairs.iter().filter(|p| (1..=modes).contains(&p.n)).count();
    let err = if matched == 4 * modes {
        report.max_rel_error_for(1..=modes)
    } else {
        f64::INFINITY
    };
    Ok((err, matched, report.max_imag))
}

fn dipole(rho0: f64) -> Result<SourceSpec, CliError> {
    Ok(SourceSpec::Dipole {
        location: EllipticPoint::new(rho0, 0.7)?,
        moment: [1.0, 0.5],
    })
}

pub fn run(config: &RunConfig, sign_flip: bool) -> Result<ValidationReport, CliError> {
    let g = config.geometry()?;
    let v = config.validate;
    if v.nodes < 8 || v.nodes % 2 == 1 {
        return Err(CliError::Config(
            "field `validate.nodes`: need an even count of at least 8".into(),
        ));
    }
    if v.modes == 0 {
        return Err(CliError::Config(
            "field `validate.modes`: need at least one mode".into(),
        ));
    }
    if !(v.delta.is_finite() && v.delta > 0.0) {
        return Err(CliError::Config(
            "field `validate.delta`: loss must be positive and finite".into(),
        ));
    }
    let mut c = Checks::default();

    let (err, matched, imag) = oracle_error(&g, v.nodes, v.modes, sign_flip)?;
    c.push(
        "oracle spectrum",
        if err < 1e-6 { Status::Pass } else { Status::Fail },
        format!("{matched} of {} matched, max rel error {err:.3e}", 4 * v.modes),
        "all matched, < 1e-6",
    );
    c.push(
        "oracle imaginary parts",
        if imag < oracle::IMAG_TOL {
            Status::Pass
        } else {
            Status::Fail
        },
        format!("{imag:.3e}"),
        format!("< {:.0e}", oracle::IMAG_TOL),
    );

    if v.nodes / 4 < MIN_CONVERGENCE_NODES || !v.nodes.is_multiple_of(4) {
        c.push(
            "oracle convergence",
            Status::Indeterminate,
            format!("{} nodes is too coarse for a three-level study", v.nodes),
            format!("nodes >= {}", 4 * MIN_CONVERGENCE_NODES),
        );
    } else {
        let errs = [v.nodes / 4, v.nodes / 2]
            .into_iter()
            .map(|n| oracle_error(&g, n, v.modes, sign_flip).map(|r| r.0))
            .collect::<Result<Vec<_>, _>>()?;
        let levels = [errs[0], errs[1], err];
        let decreasing = levels.windows(2).all(|w| w[1] <= 0.5 * w[0] || w[1] < ROUNDOFF_FLOOR);
        c.push(
            "oracle convergence",
            if decreasing { Status::Pass } else { Status::Fail },
            format!("{:.3e}, {:.3e}, {:.3e}", levels[0], levels[1], levels[2]),
            "error at least halves per doubling until round-off",
        );
    }

    let top = |limit: usize| {
        (1..=limit)
            .take_while(|&n| 2.0 * n as f64 * g.rho_e() <= MODE_EXPONENT_LIMIT)
            .last()
            .unwrap_or(0)
    };
    let mut residual = 0.0f64;
    for n in 1..=top(50) {
        let m = spectrum::mode_data(n, &g)?;
        let (a, b) = spectrum::block_matrices(n, &g);
        for br in Branch::ALL {
            let mat = match br.parity() {
                Parity::Cos => a,
                Parity::Sin => b,
            };
            let (x, l) = (m.eigenvector(br), m.eigenvalue(br));
            let scale = mat.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs())) * x[0].abs().max(x[1].abs());
            for r in 0..2 {
                residual = residual.max((mat[r][0] * x[0] + mat[r][1] * x[1] - l * x[r]).abs() / scale);
            }
        }
    }
    c.push(
        "eigen-residuals",
        if residual <= 1e-12 { Status::Pass } else { Status::Fail },
        format!("{residual:.3e}"),
        "<= 1e-12",
    );

    let (mut ortho, mut norms) = (0.0f64, 0.0f64);
    for n in 1..=top(100) {
        let m = spectrum::mode_data(n, &g)?;
        for (b1, b2, parity) in [
            (Branch::OnePlus, Branch::TwoPlus, Parity::Cos),
            (Branch::OneMinus, Branch::TwoMinus, Parity::Sin),
        ] {
            let gram = spectrum::s_gram(n, &g, parity);
            let cross = spectrum::bilinear(&gram, m.eigenvector(b1), m.eigenvector(b2));
            ortho = ortho.max(cross.abs() / (m.norm(b1) * m.norm(b2)).sqrt());
            for b in [b1, b2] {
                norms = norms.max(rel(
                    spectrum::bilinear(&gram, m.eigenvector(b), m.eigenvector(b)),
                    m.norm(b),
                ));
            }
        }
    }
    c.push(
        "S-orthogonality",
        if ortho <= 1e-12 { Status::Pass } else { Status::Fail },
        format!("{ortho:.3e}"),
        "<= 1e-12",
    );
    c.push(
        "norm formulas",
        if norms <= 1e-12 { Status::Pass } else { Status::Fail },
        format!("{norms:.3e}"),
        "<= 1e-12",
    );

    let regime = critical_radius(g.rho_i(), g.rho_e())?;
    let inside = v
        .inside_rho0
        .unwrap_or(g.rho_e() + INSIDE_FRACTION * (regime.rho_star - g.rho_e()));
    let outside = v.outside_rho0.unwrap_or(regime.rho_star + 0.15);
    for (label, rho0) in [("inside", inside), ("outside", outside)] {
        if !(rho0 > g.rho_e()) {
            return Err(CliError::Config(format!(
                "field `validate.{label}_rho0`: source must lie outside the shell"
            )));
        }
    }

    let sol = ShellSolution::solve_adaptive(&dipole(inside)?, &g, v.delta)?;
    let eps = sol.config.shell_permittivity();
    let (mut cont, mut flux) = (0.0f64, 0.0f64);
    for k in 0..8 {
        let omega = TAU * (k as f64 + 0.25) / 8.0;
        for (side, rho) in [g.rho_i(), g.rho_e()].into_iter().enumerate() {
            let a = sol.potential(EllipticPoint::new(rho - 1e-6, omega)?)?;
            let b = sol.potential(EllipticPoint::new(rho + 1e-6, omega)?)?;
            cont = cont.max((a - b).norm() / a.norm().max(b.norm()));
            let (d_in, d_out) = (
                sol.gradient(rho, omega, Side::Inside),
                sol.gradient(rho, omega, Side::Outside),
            );
            let (lhs, rhs) = if side == 0 {
                (d_in[0], eps * d_out[0])
            } else {
                (eps * d_in[0], d_out[0])
            };
            flux = flux.max((lhs - rhs).norm() / lhs.norm().max(rhs.norm()).max(d_in[1].norm()));
        }
    }
    c.below("continuity of V", cont, 1e-6);
    c.below("flux continuity", flux, 1e-8);
    let quad = QuadratureResolution::for_n_max(sol.config.n_max);
    let energy = sol.energy_direct_with(quad)?;
    c.below(
        "energy self-convergence",
        rel(energy, sol.energy_direct_with(quad.refined())?),
        1e-8,
    );

    let exact = source::newtonian_coefficients(&dipole(outside)?, &g, 20)?;
    let projected =
        source::coefficient_projection_oracle(&dipole(outside)?, g.focal(), 0.5 * (g.rho_e() + outside), 20)?;
    let coeff = (1..=20)
        .flat_map(|n| {
            [
                rel(exact.plus(n), projected.plus(n)),
                rel(exact.minus(n), projected.minus(n)),
            ]
        })
        .fold(0.0, f64::max);
    c.below("source coefficients vs projection", coeff, 1e-8);

    let probes = config.probes()?;
    for (label, rho0, want) in [("inside", inside, Verdict::Calr), ("outside", outside, Verdict::NoCalr)] {
        let s = dipole(rho0)?;
        let records = solver::sweep(&s, &g, &solver::DEFAULT_DELTAS, &probes)?;
        let d = calr_classify(&records, &regime);
        let status = match d.verdict {
            got if got == want => Status::Pass,
            Verdict::Indeterminate => Status::Indeterminate,
            _ => Status::Fail,
        };
        c.push(
            &format!("verdict {label} (rho0 = {rho0})"),
            status,
            format!("{} (energy growth {:.3e})", d.verdict, d.energy_growth),
            want.to_string(),
        );
        let ratios: Vec<f64> = records.iter().map(|r| r.e_spectral / r.e_direct).collect();
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().copied().fold(0.0, f64::max);
        c.push(
            &format!("surrogate spread {label}"),
            if hi / lo <= 10.0 { Status::Pass } else { Status::Fail },
            format!("{:.3}", hi / lo),
            "<= 10",
        );
    }

    let checks = c.0;
    let count = |s: Status| checks.iter().filter(|c| c.status == s).count();
    let summary = Summary {
        passed: count(Status::Pass),
        failed: count(Status::Fail),
        indeterminate: count(Status::Indeterminate),
    };
    Ok(ValidationReport {
        rho_i: g.rho_i(),
        rho_e: g.rho_e(),
        nodes: v.nodes,
        sign_flip,
        checks,
        summary,
    })
}
