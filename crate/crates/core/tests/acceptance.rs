//! One PASS/FAIL line per acceptance criterion. This target runs without the
//! libtest harness so the table is always printed; it exits non-zero if any
//! line is FAIL.

use std::process::ExitCode;
use std::sync::Arc;

use pblowup::asymptotics::{c_o_quadrature, c_o_table, constants_report, neck_integral};
use pblowup::flux::{barrier_check, flux_report, q_functional};
use pblowup::geometry::{BoundaryDatum, DomainSpec, ParticlePair};
use pblowup::mesh::{annulus_mesh, build_mesh, MeshParams};
use pblowup::radial::fit_two_point;
use pblowup::solver::{
    solve, solve_floating, solve_linear_aux, solve_tied, AuxProblem, ProblemKind, SolverConfig,
};
use pblowup::sweep::{run_and_analyze, Quantity, SweepConfig, SweepOutcome, SweepReport};

struct Table {
    lines: Vec<(u32, bool, String)>,
}

impl Table {
    fn record(&mut self, id: u32, ok: bool, what: &str, detail: String) {
        let line = format!(
            "{} [{id:>2}] {what}: {detail}",
            if ok { "PASS" } else { "FAIL" }
        );
        self.lines.push((id, ok, line));
    }
}

fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn benchmark_domain(delta: f64) -> DomainSpec<f64> {
    DomainSpec::new(
        4.0,
        ParticlePair::new(1.0, delta).unwrap(),
        0.5,
        BoundaryDatum::default(),
    )
    .unwrap()
}

fn sweep(p: f64) -> (SweepOutcome, SweepReport) {
    let cfg = SweepConfig {
        p,
        ..SweepConfig::default()
    };
    run_and_analyze(&cfg).expect("benchmark sweep")
}

fn table_constants(t: &mut Table) {
    let mut worst: f64 = 0.0;
    for p in 2..=6u32 {
        for r in [1.0, 4.0] {
            let q = c_o_quadrature(p as f64, 2, r).unwrap().value;
            let tab = c_o_table(p, 2, r).unwrap();
            worst = worst.max(((q - tab) / tab).abs());
        }
    }
    t.record(
        1,
        worst <= 1e-4,
        "two-dimensional constants, quadrature against table",
        format!("max relative difference {worst:.2e} over p = 2..6, R = 1, 4"),
    );
}

fn exponent_oracle(t: &mut Table) {
    let deltas: Vec<f64> = (0..=8).map(|k| 1e-8 * 10f64.powf(k as f64 * 0.5)).collect();
    let mut worst: f64 = 0.0;
    let cases = [
        (2.0, 2),
        (3.0, 2),
        (4.0, 2),
        (5.0, 2),
        (3.0, 3),
        (4.0, 3),
        (5.0, 3),
    ];
    for (p, d) in cases {
        let pts: Vec<(f64, f64)> = deltas
            .iter()
            .map(|&delta| {
                (
                    delta.ln(),
                    neck_integral(delta, 0.99, 1.0, p, d).unwrap().ln(),
                )
            })
            .collect();
        let expected = if d == 2 { -(p - 1.5) } else { -(p - 2.0) };
        worst = worst.max((slope(&pts) - expected).abs());
    }
    t.record(
        2,
        worst <= 1e-3,
        "neck-integral exponent over delta in [1e-8, 1e-4]",
        format!("max slope error {worst:.2e}"),
    );
}

fn three_dimensional_report(t: &mut Table) {
    let mut ok = true;
    let mut details = Vec::new();
    for p in [3.0, 4.0, 5.0, 6.0] {
        for r in [1.0, 4.0] {
            let rep = constants_report(p, 3, r).unwrap();
            let oracle = std::f64::consts::PI * r / (p - 2.0);
            let ratio = rep.ratio.unwrap();
            ok &= ((rep.quadrature - oracle) / oracle).abs() <= 1e-4;
            ok &= rep.mismatch && rep.note.is_some();
            ok &= rep.table.is_some();
            if p <= 4.0 {
                ok &= ((ratio - 2f64.powf(p - 2.0)) / ratio).abs() <= 1e-4;
            }
            if r == 1.0 {
                details.push(format!("p={p}: ratio {ratio:.4}"));
            }
        }
    }
    t.record(
        3,
        ok,
        "three-dimensional oracle pi R/(p-2), table mismatch flagged",
        format!(
            "{} (ratio 2^(p-2) asserted for the explicit rows p = 3, 4)",
            details.join(", ")
        ),
    );
}

fn annulus_convergence(t: &mut Table) {
    let (r1, r2, v1, v2) = (0.5, 1.0, 0.0, 1.0);
    let hs = [0.04, 0.02, 0.01, 0.005];
    let mut ok = true;
    let mut details = Vec::new();
    for p in [2.0, 3.0, 4.0] {
        let profile = fit_two_point(r1, v1, r2, v2, p, 2).unwrap();
        let errors: Vec<f64> = hs
            .iter()
            .map(|&h| {
                let mesh = Arc::new(annulus_mesh(r1, r2, h).unwrap());
                let sol = solve(
                    mesh.clone(),
                    &BoundaryDatum::Constant { value: v2 },
                    ProblemKind::Prescribed { t1: v1, t2: v1 },
                    1.0,
                    &SolverConfig::with_p(p),
                )
                .unwrap();
                mesh.nodes
                    .iter()
                    .zip(&sol.values)
                    .map(|(x, u)| (u - profile.eval(x[0].hypot(x[1])).unwrap()).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        let order = errors
            .windows(2)
            .map(|w| (w[0] / w[1]).log2())
            .fold(f64::INFINITY, f64::min);
        let at_002 = errors[1] / (v2 - v1);
        ok &= at_002 <= 5e-3 && order >= 1.8;
        details.push(format!(
            "p={p}: err(0.02) {at_002:.2e}, min order {order:.3}"
        ));
    }
    t.record(
        4,
        ok,
        "annulus against the radial profile",
        details.join("; "),
    );
}

fn fit_line(report: &SweepReport, q: Quantity) -> (f64, f64) {
    let f = report.fits.iter().find(|f| f.quantity == q).expect("fit");
    (f.slope, f.slope_deviation.expect("predicted slope"))
}

fn linear_rate(t: &mut Table, report: &SweepReport) {
    let (gs, _) = fit_line(report, Quantity::Gap);
    let (ms, _) = fit_line(report, Quantity::GradMax);
    t.record(
        5,
        (gs - 0.5).abs() <= 0.1 && (ms + 0.5).abs() <= 0.1,
        "p = 2 rates over delta = 0.04 .. 0.0025",
        format!("gap slope {gs:.4}, gradmax slope {ms:.4}"),
    );
}

fn theorem_ratio(t: &mut Table, runs: &[(f64, &SweepReport)]) {
    let mut ok = true;
    let mut details = Vec::new();
    for (p, report) in runs {
        let Some(v) = &report.verdict else {
            ok = false;
            details.push(format!("p={p}: no verdict ({:?})", report.notes));
            continue;
        };
        let last: Vec<f64> = v.rows[v.rows.len() - 2..].iter().map(|r| r.ratio).collect();
        ok &= v.last_two_in_band;
        details.push(format!(
            "p={p}: R_0 {:.5}, ratios {:.4} {:.4}",
            report.r0.as_ref().unwrap().r0,
            last[0],
            last[1]
        ));
    }
    t.record(
        6,
        ok,
        "scaled gap against R_0 / C_o in [0.85, 1.15]",
        details.join("; "),
    );
}

fn barrier(t: &mut Table) -> Vec<f64> {
    let domain = benchmark_domain(0.01);
    let mesh = Arc::new(build_mesh(&domain, &MeshParams::for_domain(&domain, 0.2)).unwrap());
    let sol = solve_floating(mesh, &domain, &SolverConfig::with_p(3.0)).unwrap();
    let neck = domain.pair.default_neck();
    let rep = barrier_check(&sol, &domain, &neck, None, 1.0).unwrap();
    t.record(
        7,
        rep.fraction_inside >= 0.95,
        "barrier sandwich on the neck arc, p = 3, delta = 0.01",
        format!(
            "{:.1}% of {} nodes inside, C = {:.4}",
            100.0 * rep.fraction_inside,
            rep.samples.len(),
            rep.slack
        ),
    );
    let f = flux_report(&sol, &neck);
    vec![f.relative_global_defect()]
}

fn flux_invariants(t: &mut Table, runs: &[&SweepOutcome], extra_global: &[f64]) {
    let mut global: f64 = extra_global.iter().copied().fold(0.0, f64::max);
    let mut floating: f64 = 0.0;
    let mut tied: f64 = 0.0;
    let mut solves = extra_global.len();
    for run in runs {
        for d in &run.diagnostics {
            global = global
                .max(d.floating_global_defect)
                .max(d.tied_global_defect);
            floating = floating.max(d.floating_particle_defect);
            tied = tied.max(d.tied_combined_defect);
            solves += 2;
        }
    }
    t.record(
        8,
        global <= 1e-6 && floating <= 1e-4 && tied <= 1e-4,
        "flux balance and constraint fluxes",
        format!("{solves} solves: global {global:.1e}, floating per particle {floating:.1e}, tied combined {tied:.1e}"),
    );
}

fn linear_identity(t: &mut Table) -> Vec<f64> {
    let domain = benchmark_domain(0.01);
    let mesh = Arc::new(build_mesh(&domain, &MeshParams::for_domain(&domain, 0.2)).unwrap());
    let cfg = SolverConfig::with_p(2.0);
    let aux = |w| solve_linear_aux(mesh.clone(), &domain, w, &cfg).unwrap();
    let (v1, v2, v3) = (
        aux(AuxProblem::V1),
        aux(AuxProblem::V2),
        aux(AuxProblem::V3),
    );
    let tied = solve_tied(mesh.clone(), &domain, &cfg).unwrap();
    let q = q_functional(&v1, &v2, &v3, &tied).unwrap();
    let rel = q.relative_identity_defect();
    t.record(
        9,
        q.reciprocity_defect <= 1e-8 && rel <= 1e-6 && q.outer_capacity > 0.0,
        "linear identity on the benchmark mesh",
        format!(
            "|a12 - a21| {:.1e}, identity defect {rel:.1e} of |Q| = {:.4}, capacity {:.4}",
            q.reciprocity_defect, q.q, q.outer_capacity
        ),
    );
    let neck = domain.pair.default_neck();
    [&v1, &v2, &v3, &tied]
        .iter()
        .map(|s| flux_report(s, &neck).relative_global_defect())
        .collect()
}

fn boundedness(t: &mut Table, run: &SweepOutcome) {
    let away: Vec<f64> = run.records.iter().map(|r| r.gradmax_away).collect();
    let neck: Vec<f64> = run.records.iter().map(|r| r.gradmax_neck).collect();
    let spread = away.iter().copied().fold(0.0, f64::max)
        / away.iter().copied().fold(f64::INFINITY, f64::min);
    let growth = neck.last().unwrap() / neck.first().unwrap();
    t.record(
        10,
        spread <= 2.0 && growth >= 4.0,
        "field away from the neck stays bounded, p = 2",
        format!("away max/min {spread:.3}, neck growth {growth:.3}"),
    );
}

fn main() -> ExitCode {
    let mut t = Table { lines: Vec::new() };
    table_constants(&mut t);
    exponent_oracle(&mut t);
    three_dimensional_report(&mut t);
    annulus_convergence(&mut t);
    let (out2, rep2) = sweep(2.0);
    let (out3, rep3) = sweep(3.0);
    linear_rate(&mut t, &rep2);
    theorem_ratio(&mut t, &[(2.0, &rep2), (3.0, &rep3)]);
    let mut extra = barrier(&mut t);
    extra.extend(linear_identity(&mut t));
    flux_invariants(&mut t, &[&out2, &out3], &extra);
    boundedness(&mut t, &out2);

    t.lines.sort_by_key(|l| l.0);
    println!();
    for (_, _, line) in &t.lines {
        println!("{line}");
    }
    let failed = t.lines.iter().filter(|l| !l.1).count();
    println!(
        "\nacceptance: {} passed, {failed} failed",
        t.lines.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
