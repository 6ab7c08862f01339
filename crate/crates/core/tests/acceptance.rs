//! Acceptance suite. Prints one line per criterion and exits non-zero when
//! an outcome differs from its recorded expectation.
//!
//! Criteria listed in `EXPECTED_FAILURES` are reported as `XFAIL` while they
//! fail and as `XPASS` (an error) once they start passing.

mod common;

use std::f64::consts::TAU;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use calr_core::geometry::{self, sample_ellipse, ConfocalGeometry, EllipticPoint};
use calr_core::oracle::{self, analytic_block_spectrum, analytic_single_spectrum, assemble_block_np};
use calr_core::solver::{self, calr_classify, QuadratureResolution, ShellSolution, Side, SweepRecord, Verdict};
use calr_core::source::{self, GapVerdict, SourceSpec};
use calr_core::spectrum::{self, asymptotic_rates, critical_radius, Branch, Parity, RegimeKind};
use common::rel_diff;

/// Criteria whose targets are out of reach at desk-scale losses.
const EXPECTED_FAILURES: &[u8] = &[5, 9];

struct Criterion {
    id: u8,
    title: &'static str,
    checks: Vec<Check>,
}

struct Check {
    name: String,
    pass: bool,
    detail: String,
}

impl Criterion {
    fn new(id: u8, title: &'static str) -> Self {
        Self {
            id,
            title,
            checks: Vec::new(),
        }
    }

    fn check(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            pass,
            detail: detail.into(),
        });
    }

    fn below(&mut self, name: impl Into<String>, value: f64, limit: f64) {
        self.check(name, value < limit, format!("{value:.3e} < {limit:.0e}"));
    }

    fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn pt(rho: f64, omega: f64) -> EllipticPoint {
    EllipticPoint::new(rho, omega).unwrap()
}

fn dipole(rho0: f64) -> SourceSpec {
    SourceSpec::Dipole {
        location: pt(rho0, 0.7),
        moment: [1.0, 0.5],
    }
}

fn thin() -> ConfocalGeometry {
    ConfocalGeometry::new(1.0, 0.5, 0.8).unwrap()
}

fn thick() -> ConfocalGeometry {
    ConfocalGeometry::new(1.0, 0.2, 1.0).unwrap()
}

fn spread(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    hi / lo
}

fn spectrum_cross_validation() -> Criterion {
    let mut c = Criterion::new(1, "spectrum cross-validation");
    let start = Instant::now();
    let g = thin();
    let n = 512;
    let gi = sample_ellipse(1.0, g.rho_i(), n).unwrap();
    let ge = sample_ellipse(1.0, g.rho_e(), n).unwrap();
    let m = assemble_block_np(&gi, &ge).unwrap();
    // top 16 modes n = 1..4 plus the ±1/2 pair of the constant-flux densities
    let report = oracle::numeric_spectrum(&m, 18, &analytic_block_spectrum(&g, 6).unwrap()).unwrap();
    let elapsed = start.elapsed();
    let matched = report.pairs.iter().filter(|p| (1..=4).contains(&p.n)).count();
    c.check("block pairs n=1..4", matched == 16, format!("{matched} of 16 matched"));
    c.below("block rel error", report.max_rel_error_for(1..=4), 1e-6);
    c.below("block imaginary parts", report.max_imag, oracle::IMAG_TOL);
    c.check(
        "block runtime",
        elapsed < Duration::from_secs(30),
        format!("{:.2} s < 30 s", elapsed.as_secs_f64()),
    );

    let single = sample_ellipse(1.0, 0.5, 256).unwrap();
    let (values, imag) = oracle::eigenvalues(&oracle::assemble_single(&single)).unwrap();
    let report = oracle::match_spectrum(&values, imag, &analytic_single_spectrum(0.5, 8), 13);
    let matched = report.pairs.iter().filter(|p| (1..=6).contains(&p.n)).count();
    c.check("single pairs n=1..6", matched == 12, format!("{matched} of 12 matched"));
    c.below("single rel error", report.max_rel_error_for(1..=6), 1e-6);
    c
}

fn exact_identities() -> Criterion {
    let mut c = Criterion::new(2, "exact identities");
    let alpha0 = [0.1, 0.5, 2.0]
        .iter()
        .map(|&r| (spectrum::single_ellipse_np(0, r).alpha - 0.5).abs())
        .fold(0.0, f64::max);
    c.check("alpha_0 = 1/2", alpha0 <= 1e-15, format!("{alpha0:.1e} <= 1e-15"));

    let (mut residual, mut trace, mut det) = (0.0f64, 0.0f64, 0.0f64);
    for g in [thin(), thick()] {
        for n in 1..=50 {
            let m = spectrum::mode_data(n, &g).unwrap();
            let (a, b) = spectrum::block_matrices(n, &g);
            for br in Branch::ALL {
                let mat = match br.parity() {
                    Parity::Cos => a,
                    Parity::Sin => b,
                };
                let v = m.eigenvector(br);
                let l = m.eigenvalue(br);
                let norm_m = mat.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max);
                let norm_v = v[0].abs().max(v[1].abs());
                for r in 0..2 {
                    let res = mat[r][0] * v[0] + mat[r][1] * v[1] - l * v[r];
                    residual = residual.max(res.abs() / (norm_m * norm_v));
                }
            }
            let sum = m.lambda1 + m.lambda2;
            let scale = m.lambda1.abs() + m.lambda2.abs();
            trace = trace.max((a[0][0] + a[1][1] - sum).abs() / scale);
            trace = trace.max((b[0][0] + b[1][1] + sum).abs() / scale);
            let prod = m.lambda1 * m.lambda2;
            det = det.max(rel_diff(a[0][0] * a[1][1] - a[0][1] * a[1][0], prod));
            det = det.max(rel_diff(b[0][0] * b[1][1] - b[0][1] * b[1][0], prod));
        }
    }
    c.check(
        "eigen-residuals n<=50",
        residual <= 1e-12,
        format!("{residual:.1e} <= 1e-12"),
    );
    c.check("trace", trace <= 1e-13, format!("{trace:.1e} <= 1e-13"));
    c.check("det", det <= 1e-13, format!("{det:.1e} <= 1e-13"));

    let mut boundary = 0.0f64;
    for ri in [0.1, 0.3, 0.5, 1.7] {
        let re = 3.0 * ri;
        let r = critical_radius(ri, re).unwrap();
        boundary = boundary
            .max(rel_diff((3.0 * re - ri) / 2.0, 2.0 * (re - ri)))
            .max(rel_diff(r.rho_star, 2.0 * (re - ri)));
    }
    c.check("boundary case", boundary <= 1e-15, format!("{boundary:.1e} <= 1e-15"));

    let mut disk = 0.0f64;
    for (ri, re) in [(0.5, 0.8), (0.1, 0.25), (1.0, 2.5)] {
        let (r_i, r_e) = (f64::exp(ri), f64::exp(re));
        let star = critical_radius(ri, re).unwrap().rho_star;
        disk = disk.max(rel_diff(star, (r_e.powi(3) / r_i).sqrt().ln()));
    }
    c.check("disk limit", disk <= 1e-15, format!("{disk:.1e} <= 1e-15"));
    c
}

fn s_structure() -> Criterion {
    let mut c = Criterion::new(3, "S-structure");
    let (mut ortho, mut norms, mut pd) = (0.0f64, 0.0f64, true);
    for g in [thin(), thick()] {
        for n in 1..=100 {
            let m = spectrum::mode_data(n, &g).unwrap();
            for parity in [Parity::Cos, Parity::Sin] {
                let gram = spectrum::s_gram(n, &g, parity);
                pd &= gram[0][0] > 0.0 && gram[0][0] * gram[1][1] - gram[0][1] * gram[1][0] > 0.0;
                let (b1, b2) = match parity {
                    Parity::Cos => (Branch::OnePlus, Branch::TwoPlus),
                    Parity::Sin => (Branch::OneMinus, Branch::TwoMinus),
                };
                let cross = spectrum::bilinear(&gram, m.eigenvector(b1), m.eigenvector(b2));
                ortho = ortho.max(cross.abs() / (m.norm(b1) * m.norm(b2)).sqrt());
                for b in [b1, b2] {
                    let direct = spectrum::bilinear(&gram, m.eigenvector(b), m.eigenvector(b));
                    norms = norms.max(rel_diff(direct, m.norm(b)));
                }
            }
        }
    }
    c.check("orthogonality n<=100", ortho <= 1e-12, format!("{ortho:.1e} <= 1e-12"));
    c.check("norm formulas n<=100", norms <= 1e-12, format!("{norms:.1e} <= 1e-12"));
    c.check("Gram positive definite", pd, "all leading minors positive");
    c
}

fn solution_correctness() -> Criterion {
    let mut c = Criterion::new(4, "solution correctness");
    let g = thin();
    let (mut cont, mut flux, mut harm, mut grad, mut conv) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut slowest = Duration::ZERO;
    for rho0 in [0.88, 1.1] {
        for delta in [1e-3, 1e-6] {
            let start = Instant::now();
            let sol = ShellSolution::solve_adaptive(&dipole(rho0), &g, delta).unwrap();
            let quad = QuadratureResolution::for_n_max(sol.config.n_max);
            let energy = sol.energy_direct_with(quad).unwrap();
            slowest = slowest.max(start.elapsed());
            conv = conv.max(rel_diff(energy, sol.energy_direct_with(quad.refined()).unwrap()));

            let v = |r: f64, w: f64| sol.potential(pt(r, w)).unwrap();
            let eps = sol.config.shell_permittivity();
            for omega in [0.0, 0.9, 2.5, 4.1] {
                for (k, rho) in [g.rho_i(), g.rho_e()].into_iter().enumerate() {
                    let (a, b) = (v(rho - 1e-6, omega), v(rho + 1e-6, omega));
                    cont = cont.max((a - b).norm() / a.norm().max(b.norm()));
                    let (d_in, d_out) = (
                        sol.gradient(rho, omega, Side::Inside),
                        sol.gradient(rho, omega, Side::Outside),
                    );
                    let (lhs, rhs) = if k == 0 {
                        (d_in[0], eps * d_out[0])
                    } else {
                        (eps * d_in[0], d_out[0])
                    };
                    let scale = lhs.norm().max(rhs.norm()).max(d_in[1].norm());
                    flux = flux.max((lhs - rhs).norm() / scale);
                }
            }

            let h = 3e-5;
            let mut residuals = Vec::new();
            let mut scale = 0.0f64;
            for rho in [0.55, 0.65, 0.75] {
                for omega in [0.2, 1.3, 4.0] {
                    let center = v(rho, omega);
                    let d_rr = (v(rho + h, omega) + v(rho - h, omega) - 2.0 * center) / (h * h);
                    let d_ww = (v(rho, omega + h) + v(rho, omega - h) - 2.0 * center) / (h * h);
                    let xi2 = geometry::metric_factor(1.0, rho, omega).powi(2);
                    residuals.push((d_rr + d_ww).norm() / xi2);
                    scale = scale.max((d_rr.norm() + d_ww.norm()) / xi2);
                }
            }
            harm = harm.max(residuals.iter().fold(0.0f64, |a, &b| a.max(b)) / scale);

            let step = 1e-6;
            for (rho, omega) in [(0.55, 0.2), (0.7, 2.2), (0.78, 5.1)] {
                let exact =
                    solver::eval_gradient_shell(&sol.coefficients, &sol.densities, &sol.config, rho, omega).unwrap();
                let fd = [
                    (v(rho + step, omega) - v(rho - step, omega)) / (2.0 * step),
                    (v(rho, omega + step) - v(rho, omega - step)) / (2.0 * step),
                ];
                let s = exact[0].norm().max(exact[1].norm());
                for k in 0..2 {
                    grad = grad.max((exact[k] - fd[k]).norm() / s);
                }
            }
        }
    }
    c.below("continuity of V", cont, 1e-6);
    c.below("flux continuity", flux, 1e-8);
    c.below("harmonicity residual", harm, 1e-6);
    c.below("gradient vs finite differences", grad, 1e-6);
    c.below("energy self-convergence", conv, 1e-8);
    c.check(
        "runtime per solve",
        slowest < Duration::from_secs(1),
        format!("{:.3} s < 1 s", slowest.as_secs_f64()),
    );
    c
}

struct Case {
    label: &'static str,
    geometry: ConfocalGeometry,
    inside: f64,
    outside: f64,
}

fn cases() -> [Case; 2] {
    [
        Case {
            label: "thin",
            geometry: thin(),
            inside: 0.88,
            outside: 1.10,
        },
        Case {
            label: "thick",
            geometry: thick(),
            inside: 1.5,
            outside: 1.8,
        },
    ]
}

fn probes(g: &ConfocalGeometry) -> Vec<EllipticPoint> {
    let far = critical_radius(g.rho_i(), g.rho_e()).unwrap().far_bound_rho + 0.1;
    (0..4).map(|k| pt(far, TAU * k as f64 / 4.0)).collect()
}

fn run_sweep(g: &ConfocalGeometry, rho0: f64) -> Vec<SweepRecord> {
    solver::sweep(&dipole(rho0), g, &solver::DEFAULT_DELTAS, &probes(g)).unwrap()
}

fn trichotomy() -> Criterion {
    let mut c = Criterion::new(5, "trichotomy at desk scale");
    let start = Instant::now();
    for case in cases() {
        let g = case.geometry;
        let regime = critical_radius(g.rho_i(), g.rho_e()).unwrap();
        let inside = run_sweep(&g, case.inside);
        let d = calr_classify(&inside, &regime);
        let energies: Vec<f64> = inside.iter().map(|r| r.e_direct).collect();
        let label = |s: &str| format!("{} rho0={} {s}", case.label, case.inside);
        c.check(
            label("E strictly increasing"),
            energies.windows(2).all(|w| w[1] > w[0]),
            format!("{:.3e} .. {:.3e}", energies[0], energies[energies.len() - 1]),
        );
        c.check(
            label("E growth"),
            d.energy_growth > 1e3,
            format!("{:.3e} > 1e3", d.energy_growth),
        );
        c.check(
            label("verdict"),
            d.verdict == Verdict::Calr,
            format!("{} (want CALR)", d.verdict),
        );
        for k in 0..inside[0].far_samples.len() {
            let far = spread(inside.iter().map(|r| r.far_samples[k]));
            c.check(
                label(&format!("|V| spread at probe {k}")),
                far < 2.0,
                format!("{far:.3} < 2"),
            );
            let norm: Vec<f64> = inside.iter().map(|r| r.normalized_far[k]).collect();
            let monotone = norm.windows(2).all(|w| w[1] < w[0]);
            let drop = norm[0] / norm[norm.len() - 1];
            c.check(
                label(&format!("normalized far field at probe {k}")),
                monotone && drop > 1e2,
                format!("monotone={monotone}, drop {drop:.3e} > 1e2"),
            );
        }

        let outside = run_sweep(&g, case.outside);
        let d = calr_classify(&outside, &regime);
        let label = |s: &str| format!("{} rho0={} {s}", case.label, case.outside);
        c.check(
            label("E spread"),
            d.energy_spread < 2.0,
            format!("{:.3e} < 2", d.energy_spread),
        );
        c.check(
            label("verdict"),
            d.verdict == Verdict::NoCalr,
            format!("{} (want NoCALR)", d.verdict),
        );
    }
    let elapsed = start.elapsed();
    c.check(
        "total runtime",
        elapsed < Duration::from_secs(120),
        format!("{:.2} s < 120 s", elapsed.as_secs_f64()),
    );
    c
}

fn eccentricity_independence() -> Criterion {
    let mut c = Criterion::new(6, "eccentricity independence");
    for case in cases() {
        for rho0 in [case.inside, case.outside] {
            let verdicts: Vec<Verdict> = [0.5, 1.0, 2.0]
                .iter()
                .map(|&focal| {
                    let g = case.geometry.with_focal(focal).unwrap();
                    let regime = critical_radius(g.rho_i(), g.rho_e()).unwrap();
                    calr_classify(&run_sweep(&g, rho0), &regime).verdict
                })
                .collect();
            c.check(
                format!("{} rho0={rho0}", case.label),
                verdicts.iter().all(|v| *v == verdicts[0]),
                format!("{verdicts:?}"),
            );
        }
    }
    c
}

fn surrogate_equivalence() -> Criterion {
    let mut c = Criterion::new(7, "surrogate equivalence");
    let deltas = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
    for case in cases() {
        for rho0 in [case.inside, case.outside] {
            let ratios = deltas.iter().map(|&d| {
                let sol = ShellSolution::solve_adaptive(&dipole(rho0), &case.geometry, d).unwrap();
                sol.energy_spectral() / sol.energy_direct().unwrap()
            });
            let s = spread(ratios);
            c.check(
                format!("{} rho0={rho0}", case.label),
                s <= 10.0,
                format!("spread {s:.3} <= 10"),
            );
        }
    }
    c
}

fn source_machinery() -> Criterion {
    let mut c = Criterion::new(8, "source machinery");
    let g = thin();
    let s = SourceSpec::Dipole {
        location: pt(1.2, 0.7),
        moment: [1.0, 0.5],
    };
    let exact = source::newtonian_coefficients(&s, &g, 20).unwrap();
    let oracle = source::coefficient_projection_oracle(&s, 1.0, 1.0, 20).unwrap();
    let err = (1..=20)
        .flat_map(|n| {
            [
                rel_diff(exact.plus(n), oracle.plus(n)),
                rel_diff(exact.minus(n), oracle.minus(n)),
            ]
        })
        .fold(0.0, f64::max);
    c.check("dipole vs projection oracle", err < 1e-8, format!("{err:.3e} < 1e-8"));

    for rho0 in [0.88, 1.1, 1.2, 1.5] {
        let sc = source::newtonian_coefficients(&dipole(rho0), &g, 200).unwrap();
        let est = source::convergence_exponent(&sc).unwrap();
        c.check(
            format!("convergence exponent rho0={rho0}"),
            (est - rho0).abs() < 0.02,
            format!("{est:.4} within 0.02"),
        );
    }

    let rho_star = critical_radius(g.rho_i(), g.rho_e()).unwrap().rho_star;
    for (rho0, want) in [
        (0.88, GapVerdict::SatisfiedHeuristically),
        (1.1, GapVerdict::FailsHeuristically),
    ] {
        let sc = source::newtonian_coefficients(&dipole(rho0), &g, 200).unwrap();
        let got = source::gap_condition_report(&sc, &g, rho_star).verdict;
        c.check(format!("gap condition rho0={rho0}"), got == want, format!("{got:?}"));
    }
    c
}

fn asymptotics() -> Criterion {
    let mut c = Criterion::new(9, "asymptotic rates");
    for (label, g) in [("thin", thin()), ("thick", thick())] {
        let rates = asymptotic_rates(&g);
        assert_eq!(
            rates.kind,
            if label == "thin" {
                RegimeKind::Thin
            } else {
                RegimeKind::Thick
            }
        );
        let laws = [
            ("lambda1", rates.lambda1),
            ("lambda2", rates.lambda2),
            ("norm_1p", rates.norm_1p),
            ("norm_1m", rates.norm_1m),
            ("norm_2p", rates.norm_2p),
            ("norm_2m", rates.norm_2m),
        ];
        for (k, (name, law)) in laws.iter().enumerate() {
            let scaled: Vec<f64> = (20..=60)
                .map(|n| {
                    let m = spectrum::mode_data(n, &g).unwrap();
                    let v = [m.lambda1, m.lambda2, m.norm_1p, m.norm_1m, m.norm_2p, m.norm_2m][k];
                    law.normalize(n, v)
                })
                .collect();
            let drift = spread(scaled.iter().copied()) - 1.0;
            c.check(
                format!("{label} {name}"),
                drift < 1e-3,
                format!("drift {drift:.2e} < 1e-3"),
            );
        }
    }
    c
}

fn main() -> ExitCode {
    let suite: [fn() -> Criterion; 9] = [
        spectrum_cross_validation,
        exact_identities,
        s_structure,
        solution_correctness,
        trichotomy,
        eccentricity_independence,
        surrogate_equivalence,
        source_machinery,
        asymptotics,
    ];
    let mut unexpected = 0;
    for run in suite {
        let start = Instant::now();
        let crit = run();
        let expected_fail = EXPECTED_FAILURES.contains(&crit.id);
        let status = match (crit.pass(), expected_fail) {
            (true, false) => "PASS",
            (false, true) => "XFAIL",
            (true, true) => "XPASS",
            (false, false) => "FAIL",
        };
        if crit.pass() == expected_fail {
            unexpected += 1;
        }
        let failed = crit.checks.iter().filter(|c| !c.pass).count();
        println!(
            "criterion {} {:<5} {} ({} checks, {} failed, {:.2} s)",
            crit.id,
            status,
            crit.title,
            crit.checks.len(),
            failed,
            start.elapsed().as_secs_f64()
        );
        for check in &crit.checks {
            println!(
                "    [{}] {}: {}",
                if check.pass { "ok" } else { "FAIL" },
                check.name,
                check.detail
            );
        }
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{unexpected} criteria differ from their recorded outcome");
        ExitCode::FAILURE
    }
}
