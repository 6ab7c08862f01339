use std::path::{Path, PathBuf};

use calr_core::geometry::{self, CartesianPoint, ConfocalGeometry};
use calr_core::solver::{self, calr_classify, ShellConfig, ShellSolution, SweepRecord, Truncation, Verdict};
use calr_core::source::{self, GapConditionReport};
use calr_core::spectrum::{self, critical_radius, Regime, RegimeKind};
use calr_core::Error;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{self, Cell, Table};
use crate::CliError;

/// What a command produced, for the summary printed on stdout.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

pub const SPECTRUM_COLUMNS: [&str; 10] = [
    "n", "lambda1", "lambda2", "a1", "a2", "b", "norm_1p", "norm_1m", "norm_2p", "norm_2m",
];

pub fn spectrum_table(g: &ConfocalGeometry, n_max: usize) -> Result<Table, CliError> {
    let mut t = Table::new(SPECTRUM_COLUMNS);
    for m in spectrum::mode_table(g, n_max)? {
        let mut row = vec![Cell::Int(m.n)];
        row.extend(
            [
                m.lambda1, m.lambda2, m.a1, m.a2, m.b, m.norm_1p, m.norm_1m, m.norm_2p, m.norm_2m,
            ]
            .map(Cell::Float),
        );
        t.push(&row);
    }
    Ok(t)
}

pub fn spectrum(config: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let g = config.geometry()?;
    let table = spectrum_table(&g, config.spectrum.n_max)?;
    let path = output::write(out, "spectrum.csv", &table.render())?;
    Ok(Outcome {
        files: vec![path],
        summary: format!("{} modes", config.spectrum.n_max),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalRadiusReport {
    pub regime: RegimeKind,
    pub rho_star: f64,
    pub far_bound_rho: f64,
    /// `e^{ρ*}`, the radius of the equivalent annulus, for thin shells.
    pub disk_equivalent: Option<f64>,
}

impl From<Regime> for CriticalRadiusReport {
    fn from(r: Regime) -> Self {
        Self {
            regime: r.kind,
            rho_star: r.rho_star,
            far_bound_rho: r.far_bound_rho,
            disk_equivalent: (r.kind == RegimeKind::Thin).then(|| r.rho_star.exp()),
        }
    }
}

pub fn critical_radius_report(config: &RunConfig) -> Result<CriticalRadiusReport, CliError> {
    let g = config.geometry()?;
    Ok(critical_radius(g.rho_i(), g.rho_e())?.into())
}

pub fn critical_radius_cmd(config: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let report = critical_radius_report(config)?;
    let path = output::write(out, "critical_radius.json", &output::json(&report))?;
    Ok(Outcome {
        files: vec![path],
        summary: format!(
            "{:?}: rho_star = {}, far_bound_rho = {}",
            report.regime, report.rho_star, report.far_bound_rho
        ),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub verdict: Verdict,
    pub regime: RegimeKind,
    pub rho_star: f64,
    pub far_bound_rho: f64,
    pub growth_exponent: f64,
    pub energy_growth: f64,
    pub energy_spread: f64,
    pub deltas: Vec<f64>,
    pub n_max: Vec<usize>,
    /// Estimated decay rate of the source coefficients, when the source has enough of them.
    pub convergence_exponent: Option<f64>,
    pub gap_condition: GapConditionReport,
}

pub fn sweep_table(records: &[SweepRecord], probes: usize) -> Table {
    let mut header: Vec<String> = ["delta", "n_max", "e_direct", "e_spectral"].map(String::from).to_vec();
    header.extend((0..probes).map(|k| format!("abs_v_{k}")));
    header.extend((0..probes).map(|k| format!("normalized_far_{k}")));
    let mut t = Table::new(header);
    for r in records {
        let mut row = vec![
            Cell::Float(r.delta),
            Cell::Int(r.n_max),
            Cell::Float(r.e_direct),
            Cell::Float(r.e_spectral),
        ];
        row.extend(r.far_samples.iter().chain(&r.normalized_far).map(|&v| Cell::Float(v)));
        t.push(&row);
    }
    t
}

/// Runs the sweep and returns the records computed before the first failure,
/// together with that failure.
pub fn run_sweep(config: &RunConfig) -> Result<(Vec<SweepRecord>, Option<CliError>), CliError> {
    config.check_sweep()?;
    let g = config.geometry()?;
    let probes = config.probes()?;
    let results: Vec<_> = config
        .sweep
        .deltas
        .par_iter()
        .map(|&d| solver::sweep_point_with(&config.source, &g, d, config.sweep.n_max, &probes))
        .collect();
    let mut records = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => return Ok((records, Some(e.into()))),
        }
    }
    Ok((records, None))
}

pub fn sweep_report(config: &RunConfig, records: &[SweepRecord]) -> Result<SweepReport, CliError> {
    let g = config.geometry()?;
    let regime = critical_radius(g.rho_i(), g.rho_e())?;
    let d = calr_classify(records, &regime);
    let order = records.iter().map(|r| r.n_max).max().unwrap_or(1);
    let sc = source::newtonian_coefficients(&config.source, &g, order)?;
    Ok(SweepReport {
        verdict: d.verdict,
        regime: regime.kind,
        rho_star: d.rho_star,
        far_bound_rho: d.far_bound_rho,
        growth_exponent: d.growth_exponent,
        energy_growth: d.energy_growth,
        energy_spread: d.energy_spread,
        deltas: records.iter().map(|r| r.delta).collect(),
        n_max: records.iter().map(|r| r.n_max).collect(),
        convergence_exponent: source::convergence_exponent(&sc).ok(),
        gap_condition: source::gap_condition_report(&sc, &g, regime.rho_star),
    })
}

pub fn sweep(config: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let probes = config.probes()?.len();
    let (records, failure) = run_sweep(config)?;
    let csv = output::write(out, "sweep.csv", &sweep_table(&records, probes).render())?;
    if let Some(e) = failure {
        return Err(e);
    }
    let report = sweep_report(config, &records)?;
    let json = output::write(out, "sweep.json", &output::json(&report))?;
    Ok(Outcome {
        files: vec![csv, json],
        summary: format!(
            "verdict {} (energy growth {:.3e}, exponent {:.3})",
            report.verdict, report.energy_growth, report.growth_exponent
        ),
    })
}

pub const FIELD_COLUMNS: [&str; 5] = ["x1", "x2", "re_v", "im_v", "abs_v"];

/// Total potential on the configured Cartesian grid, `x1` varying fastest.
/// Points on the focal segment or at a source singularity are `null`.
pub fn field_table(config: &RunConfig) -> Result<Table, CliError> {
    let f = config.field_block()?;
    let g = config.geometry()?;
    let sol = match f.n_max {
        Truncation::Adaptive => ShellSolution::solve_adaptive(&config.source, &g, f.delta)?,
        Truncation::Fixed(n) => ShellSolution::solve(&config.source, &ShellConfig::new(g, f.delta, n)?)?,
    };
    let xs = f.x1.values();
    let points: Vec<CartesianPoint> =
        f.x2.values()
            .into_iter()
            .flat_map(|x2| xs.iter().map(move |&x1| CartesianPoint::new(x1, x2)))
            .collect();
    let values = points
        .par_iter()
        .map(|&x| {
            let Ok(p) = geometry::to_elliptic(g.focal(), x) else {
                return Ok(None);
            };
            match sol.potential(p) {
                Ok(v) if v.re.is_finite() && v.im.is_finite() => Ok(Some(v)),
                Ok(_) | Err(Error::SingularPoint) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let mut t = Table::new(FIELD_COLUMNS);
    for (x, v) in points.iter().zip(values) {
        let tail = match v {
            Some(v) => [Cell::Float(v.re), Cell::Float(v.im), Cell::Float(v.norm())],
            None => [Cell::Null; 3],
        };
        t.push(&[Cell::Float(x.x1), Cell::Float(x.x2), tail[0], tail[1], tail[2]]);
    }
    Ok(t)
}

pub fn field(config: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let table = field_table(config)?;
    let path = output::write(out, "field.csv", &table.render())?;
    let f = config.field_block()?;
    Ok(Outcome {
        files: vec![path],
        summary: format!("{} x {} grid", f.x1.count, f.x2.count),
    })
}
