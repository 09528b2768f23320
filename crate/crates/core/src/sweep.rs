//! Sweeps over the particle gap, power-law fits and the finite-gap verdict.
//!
//! A sweep solves the floating problem and the tied problem on one mesh per
//! gap. The floating solve gives the potentials and field maxima of a
//! [`SweepRecord`]; the tied solve gives `R_delta`. [`analyze`] extrapolates
//! `R_delta` to `R_0`, fits power laws and compares the scaled potential gap
//! with its predicted limit. [`emit_report`] writes `sweep.csv`,
//! `report.json` and two gnuplot scripts, all byte-deterministic.

use std::fs;
use std::io;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asymptotics::{predict, AsymptoticPrediction, AsymptoticsError, BlowUpExponent};
use crate::flux::FluxReport;
use crate::flux::{
    extrapolate_r0, flux_report, q_functional, r_delta, FluxError, R0Estimate, R0Model, Split,
};
use crate::geometry::{BoundaryDatum, DomainSpec, GeometryError, NeckSpec, ParticlePair};
use crate::mesh::{build_mesh, MeshError, MeshParams};
use crate::solver::{
    grad_max, solve, solve_floating, solve_linear_aux, solve_tied, AuxProblem, DiscreteSolution,
    GradMax, ProblemKind, Region, SolverConfig, SolverError,
};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep configuration: {0}")]
    Config(String),
    #[error("every gap of the sweep failed: {}", summarize(.0))]
    AllFailed(Vec<PointFailure>),
    #[error("power-law fit needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("non-positive {quantity} at delta = {deltas:?}")]
    NonPositive {
        quantity: &'static str,
        deltas: Vec<f64>,
    },
    #[error("R_0 = {0} is not positive; swap the particle labels (or negate the datum) so that particle 2 carries the positive flux")]
    NonPositiveR0(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Asymptotics(#[from] AsymptoticsError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Flux(#[from] FluxError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn summarize(failures: &[PointFailure]) -> String {
    failures
        .iter()
        .map(|f| format!("delta {}: {}", f.delta, f.error))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Geometric gap ladder `delta_k = start * ratio^k * R`, `k < count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LadderSpec {
    pub start: f64,
    pub ratio: f64,
    pub count: usize,
}

impl Default for LadderSpec {
    fn default() -> Self {
        Self {
            start: 0.04,
            ratio: 0.5,
            count: 5,
        }
    }
}

impl LadderSpec {
    pub fn deltas(&self, radius: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.count);
        let mut d = self.start * radius;
        for _ in 0..self.count {
            out.push(d);
            d *= self.ratio;
        }
        out
    }
}

/// Mesh settings of a sweep. Unset lengths follow [`MeshParams::for_domain`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshSpec {
    pub h_far: Option<f64>,
    pub h_particle: Option<f64>,
    pub grading: f64,
    pub quality_floor: f64,
    /// `h_neck = neck_fraction * delta`; at most 1/4 so that the narrowest
    /// gap is crossed by at least four elements.
    pub neck_fraction: f64,
}

impl Default for MeshSpec {
    fn default() -> Self {
        Self {
            h_far: None,
            h_particle: None,
            grading: 0.3,
            quality_floor: 0.15,
            neck_fraction: 0.2,
        }
    }
}

impl MeshSpec {
    pub fn params(&self, domain: &DomainSpec<f64>) -> MeshParams {
        let mut m = MeshParams::for_domain(domain, self.neck_fraction);
        if let Some(h) = self.h_far {
            m.h_far = h;
        }
        if let Some(h) = self.h_particle {
            m.h_particle = h;
        }
        m.grading = self.grading;
        m.quality_floor = self.quality_floor;
        m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub radius: f64,
    pub outer_radius: f64,
    /// Required distance between the particles and the outer circle.
    pub clearance: f64,
    pub p: f64,
    pub datum: BoundaryDatum<f64>,
    pub ladder: LadderSpec,
    pub mesh: MeshSpec,
    /// `p` inside is ignored in favour of the top-level `p`.
    pub solver: SolverConfig,
    /// Half-width of the neck window; `None` means `R / 4`.
    pub neck_width: Option<f64>,
    pub r0_model: R0Model,
    /// Largest accepted extrapolation residual of `R_0`.
    pub r0_max_residual: f64,
    pub ratio_band: [f64; 2],
    pub slope_tolerance: f64,
    /// For `p = 2`, also solve the three harmonic auxiliaries at every gap
    /// and check the linear identity.
    pub linear_check: bool,
    /// Fill `wall_ms`; off by default because timings break byte-identical
    /// reruns.
    pub record_timing: bool,
    pub output_dir: Option<String>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            radius: 1.0,
            outer_radius: 4.0,
            clearance: 0.5,
            p: 2.0,
            datum: BoundaryDatum::default(),
            ladder: LadderSpec::default(),
            mesh: MeshSpec::default(),
            solver: SolverConfig::default(),
            neck_width: None,
            r0_model: R0Model::Linear,
            r0_max_residual: 1e-2,
            ratio_band: [0.85, 1.15],
            slope_tolerance: 0.1,
            linear_check: true,
            record_timing: false,
            output_dir: None,
        }
    }
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self, SweepError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn deltas(&self) -> Vec<f64> {
        self.ladder.deltas(self.radius)
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            p: self.p,
            ..self.solver
        }
    }

    pub fn domain(&self, delta: f64) -> Result<DomainSpec<f64>, SweepError> {
        Ok(DomainSpec::new(
            self.outer_radius,
            ParticlePair::new(self.radius, delta)?,
            self.clearance,
            self.datum.clone(),
        )?)
    }

    pub fn neck(&self, domain: &DomainSpec<f64>) -> Result<NeckSpec<f64>, SweepError> {
        match self.neck_width {
            None => Ok(domain.pair.default_neck()),
            Some(w) => Ok(domain.pair.neck(w)?),
        }
    }

    pub fn settings(&self) -> AnalysisSettings {
        AnalysisSettings {
            p: self.p,
            radius: self.radius,
            r0_model: self.r0_model,
            r0_max_residual: self.r0_max_residual,
            ratio_band: self.ratio_band,
            slope_tolerance: self.slope_tolerance,
        }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        let bad = |m: String| Err(SweepError::Config(m));
        let l = &self.ladder;
        if l.count == 0 || !(l.start > 0.0) || !(l.ratio > 0.0 && l.ratio < 1.0) {
            return bad(format!(
                "ladder needs count >= 1, start > 0 and 0 < ratio < 1 (got {l:?})"
            ));
        }
        if !(self.mesh.neck_fraction > 0.0 && self.mesh.neck_fraction <= 0.25) {
            return bad(format!(
                "neck_fraction {} must lie in (0, 1/4] to keep four layers across the gap",
                self.mesh.neck_fraction
            ));
        }
        let [lo, hi] = self.ratio_band;
        if !(lo > 0.0 && lo < hi) {
            return bad(format!(
                "ratio band [{lo}, {hi}] is not an interval of positive numbers"
            ));
        }
        if !(self.slope_tolerance > 0.0) || !(self.r0_max_residual > 0.0) {
            return bad("slope_tolerance and r0_max_residual must be positive".into());
        }
        self.solver_config()
            .validate()
            .map_err(|e| SweepError::Config(e.to_string()))?;
        for delta in self.deltas() {
            let domain = self.domain(delta)?;
            self.neck(&domain)?;
        }
        Ok(())
    }
}

/// One row of `sweep.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub delta: f64,
    #[serde(rename = "T1")]
    pub t1: f64,
    #[serde(rename = "T2")]
    pub t2: f64,
    pub gap: f64,
    pub gradmax_all: f64,
    pub gradmax_neck: f64,
    pub gradmax_away: f64,
    pub r_delta: f64,
    /// Larger of the relative global balance defect and the relative
    /// per-particle defect of the floating solve.
    pub flux_defect: f64,
    pub energy: f64,
    pub newton_iters: usize,
    pub wall_ms: f64,
}

/// Per-gap quantities that do not fit the CSV schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointDiagnostics {
    pub delta: f64,
    pub nodes: usize,
    pub triangles: usize,
    pub min_quality: f64,
    /// The floating potentials came out with `T2 < T1`; the record lists
    /// them swapped and `R_delta` negated.
    pub swapped: bool,
    pub r_delta_away: f64,
    pub floating_global_defect: f64,
    pub floating_particle_defect: f64,
    pub tied_global_defect: f64,
    pub tied_combined_defect: f64,
    pub linear: Option<LinearPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearPoint {
    pub q: f64,
    pub relative_identity_defect: f64,
    pub reciprocity_defect: f64,
    pub outer_capacity: f64,
    pub sign_agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointFailure {
    pub delta: f64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    /// Successful gaps in decreasing `delta`.
    pub records: Vec<SweepRecord>,
    pub diagnostics: Vec<PointDiagnostics>,
    pub failures: Vec<PointFailure>,
}

fn run_point(cfg: &SweepConfig, delta: f64) -> Result<(SweepRecord, PointDiagnostics), SweepError> {
    let start = Instant::now();
    let domain = cfg.domain(delta)?;
    let neck = cfg.neck(&domain)?;
    let mesh = Arc::new(build_mesh(&domain, &cfg.mesh.params(&domain))?);
    let report = mesh.validate();
    let solver = cfg.solver_config();
    let floating = solve_floating(mesh.clone(), &domain, &solver)?;
    let tied = solve_tied(mesh.clone(), &domain, &solver)?;

    let ff = flux_report(&floating, &neck);
    let tf = flux_report(&tied, &neck);
    let mut rd = r_delta(&tied, &neck, Split::Full)?;
    let mut rd_away = r_delta(&tied, &neck, Split::AwayFromNeck)?;
    let (mut t1, mut t2) = (floating.t1.unwrap(), floating.t2.unwrap());
    let swapped = t2 < t1;
    if swapped {
        std::mem::swap(&mut t1, &mut t2);
        // The tied problem has zero combined flux, so particle 1 carries -R_delta.
        rd = -rd;
        rd_away = -(tied_particle_flux_away(&tied, &neck)?);
    }

    let linear = if cfg.linear_check && cfg.p == 2.0 {
        let aux = |which| solve_linear_aux(mesh.clone(), &domain, which, &solver);
        let (v1, v2, v3) = (
            aux(AuxProblem::V1)?,
            aux(AuxProblem::V2)?,
            aux(AuxProblem::V3)?,
        );
        let q = q_functional(&v1, &v2, &v3, &tied)?;
        Some(LinearPoint {
            q: q.q,
            relative_identity_defect: q.relative_identity_defect(),
            reciprocity_defect: q.reciprocity_defect,
            outer_capacity: q.outer_capacity,
            sign_agrees: q.q.signum() == q.r_delta.signum(),
        })
    } else {
        None
    };

    let wall_ms = if cfg.record_timing {
        start.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    };
    let record = SweepRecord {
        delta,
        t1,
        t2,
        gap: t2 - t1,
        gradmax_all: grad_max(&floating, Region::All, &neck).value,
        gradmax_neck: grad_max(&floating, Region::Neck, &neck).value,
        gradmax_away: grad_max(&floating, Region::Away, &neck).value,
        r_delta: rd,
        flux_defect: ff
            .relative_global_defect()
            .max(ff.relative_constraint_defect()),
        energy: floating.plain_energy(),
        newton_iters: floating.iterations,
        wall_ms,
    };
    let diagnostics = PointDiagnostics {
        delta,
        nodes: report.nodes,
        triangles: report.triangles,
        min_quality: report.min_quality,
        swapped,
        r_delta_away: rd_away,
        floating_global_defect: ff.relative_global_defect(),
        floating_particle_defect: ff.relative_constraint_defect(),
        tied_global_defect: tf.relative_global_defect(),
        tied_combined_defect: tf.relative_constraint_defect(),
        linear,
    };
    Ok((record, diagnostics))
}

fn tied_particle_flux_away(
    tied: &crate::solver::DiscreteSolution,
    neck: &NeckSpec<f64>,
) -> Result<f64, FluxError> {
    use crate::flux::{boundary_flux, Curve};
    use crate::geometry::Particle;
    Ok(-boundary_flux(
        tied,
        &Curve::AwayFromNeck {
            which: Particle::Lower,
            w: neck.half_width(),
        },
    )?)
}

/// Runs every gap of the ladder. Gaps are independent and run in parallel;
/// the output order is the ladder order whatever the completion order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutcome, SweepError> {
    cfg.validate()?;
    let results: Vec<_> = cfg
        .deltas()
        .into_par_iter()
        .map(|delta| (delta, run_point(cfg, delta)))
        .collect();
    let mut outcome = SweepOutcome {
        records: Vec::new(),
        diagnostics: Vec::new(),
        failures: Vec::new(),
    };
    for (delta, r) in results {
        match r {
            Ok((rec, diag)) => {
                outcome.records.push(rec);
                outcome.diagnostics.push(diag);
            }
            Err(e) => outcome.failures.push(PointFailure {
                delta,
                error: e.to_string(),
            }),
        }
    }
    if outcome.records.is_empty() && !outcome.failures.is_empty() {
        return Err(SweepError::AllFailed(outcome.failures));
    }
    Ok(outcome)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    Gap,
    GradMax,
}

impl Quantity {
    fn of(self, r: &SweepRecord) -> f64 {
        match self {
            Quantity::Gap => r.gap,
            Quantity::GradMax => r.gradmax_all,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Quantity::Gap => "gap",
            Quantity::GradMax => "gradmax",
        }
    }
}

/// Least-squares power law `y = A delta^s` in log-log coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub quantity: Quantity,
    pub points: usize,
    pub slope: f64,
    pub prefactor: f64,
    /// Root mean square of the log residuals.
    pub residual: f64,
    pub predicted_slope: Option<f64>,
    pub predicted_prefactor: Option<f64>,
    /// `slope - predicted_slope`.
    pub slope_deviation: Option<f64>,
    /// `prefactor / predicted_prefactor - 1`.
    pub prefactor_deviation: Option<f64>,
}

impl FitResult {
    pub fn within(&self, tolerance: f64) -> Option<bool> {
        self.slope_deviation.map(|d| d.abs() <= tolerance)
    }
}

pub fn fit_power_law(
    records: &[SweepRecord],
    quantity: Quantity,
    prediction: Option<&AsymptoticPrediction<f64>>,
) -> Result<FitResult, SweepError> {
    if records.len() < 3 {
        return Err(SweepError::TooFewPoints(records.len()));
    }
    let bad: Vec<f64> = records
        .iter()
        .filter(|r| !(quantity.of(r) > 0.0) || !(r.delta > 0.0))
        .map(|r| r.delta)
        .collect();
    if !bad.is_empty() {
        return Err(SweepError::NonPositive {
            quantity: quantity.name(),
            deltas: bad,
        });
    }
    let xs: Vec<f64> = records.iter().map(|r| r.delta.ln()).collect();
    let ys: Vec<f64> = records.iter().map(|r| quantity.of(r).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let (predicted_slope, predicted_prefactor) = match prediction {
        Some(pred) if !pred.degenerate => match quantity {
            Quantity::Gap => (
                pred.gap_exponent,
                pred.gap_exponent.map(|_| pred.gradient_law),
            ),
            Quantity::GradMax => (
                pred.gradient_exponent,
                pred.gradient_exponent.map(|_| pred.gradient_law),
            ),
        },
        _ => (None, None),
    };
    let prefactor = intercept.exp();
    Ok(FitResult {
        quantity,
        points: records.len(),
        slope,
        prefactor,
        residual,
        predicted_slope,
        predicted_prefactor,
        slope_deviation: predicted_slope.map(|s| slope - s),
        prefactor_deviation: predicted_prefactor.map(|a| prefactor / a - 1.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerdictRow {
    pub delta: f64,
    /// `gap^(p-1) delta^(-gamma) C_o / R_0`, with `ln(1/delta)` in place of
    /// `delta^(-gamma)` in the logarithmic case.
    pub ratio: f64,
    pub deviation: f64,
    pub in_band: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub rows: Vec<VerdictRow>,
    pub band: [f64; 2],
    pub last_two_in_band: bool,
    pub deviation_decreasing: bool,
    pub pass: bool,
}

/// Scaled potential gap against its predicted limit 1.
pub fn verify_theorem(
    records: &[SweepRecord],
    r0: f64,
    prediction: &AsymptoticPrediction<f64>,
    band: [f64; 2],
) -> Result<Verdict, SweepError> {
    if !(r0 > 0.0) {
        return Err(SweepError::NonPositiveR0(r0));
    }
    let p = prediction.p;
    let rows: Vec<VerdictRow> = records
        .iter()
        .map(|r| {
            let scale = match prediction.gamma {
                BlowUpExponent::Power(g) => r.delta.powf(-g),
                BlowUpExponent::Log => (1.0 / r.delta).ln(),
            };
            let ratio = r.gap.powf(p - 1.0) * scale * prediction.c_o / r0;
            VerdictRow {
                delta: r.delta,
                ratio,
                deviation: (ratio - 1.0).abs(),
                in_band: band[0] <= ratio && ratio <= band[1],
            }
        })
        .collect();
    let last_two_in_band = rows.len() >= 2 && rows[rows.len() - 2..].iter().all(|r| r.in_band);
    // Deviations at the roundoff level carry no ordering information.
    let deviation_decreasing = rows
        .windows(2)
        .all(|w| w[1].deviation <= w[0].deviation + 1e-12);
    Ok(Verdict {
        pass: last_two_in_band && deviation_decreasing,
        rows,
        band,
        last_two_in_band,
        deviation_decreasing,
    })
}

/// What [`analyze`] needs besides the records.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSettings {
    pub p: f64,
    pub radius: f64,
    pub r0_model: R0Model,
    pub r0_max_residual: f64,
    pub ratio_band: [f64; 2],
    pub slope_tolerance: f64,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        SweepConfig::default().settings()
    }
}

/// Everything written to `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub settings: AnalysisSettings,
    pub r0: Option<R0Estimate>,
    pub notes: Vec<String>,
    pub prediction: Option<AsymptoticPrediction<f64>>,
    pub fits: Vec<FitResult>,
    pub verdict: Option<Verdict>,
    pub diagnostics: Vec<PointDiagnostics>,
    pub failures: Vec<PointFailure>,
    pub pass: bool,
}

/// `R_0`, fits and verdict from a list of records. Problems that only
/// prevent part of the analysis are listed in `notes`.
pub fn analyze(records: &[SweepRecord], settings: &AnalysisSettings) -> SweepReport {
    let mut notes = Vec::new();
    let ladder: Vec<(f64, f64)> = records.iter().map(|r| (r.delta, r.r_delta)).collect();
    let r0 = if records.is_empty() {
        None
    } else {
        match extrapolate_r0(&ladder, settings.r0_model, settings.r0_max_residual) {
            Ok(est) => Some(est),
            Err(e) => {
                notes.push(format!("R_0 extrapolation: {e}"));
                None
            }
        }
    };
    let prediction = match (&r0, records.last()) {
        (Some(est), Some(last)) if est.r0 >= 0.0 => {
            match predict(settings.p, 2, settings.radius, est.r0, last.delta) {
                Ok(pred) => Some(pred),
                Err(e) => {
                    notes.push(format!("prediction: {e}"));
                    None
                }
            }
        }
        (Some(est), _) => {
            notes.push(SweepError::NonPositiveR0(est.r0).to_string());
            None
        }
        _ => None,
    };
    let mut fits = Vec::new();
    if !records.is_empty() {
        for q in [Quantity::Gap, Quantity::GradMax] {
            match fit_power_law(records, q, prediction.as_ref()) {
                Ok(f) => fits.push(f),
                Err(e) => notes.push(format!("{} fit: {e}", q.name())),
            }
        }
    }
    let verdict = match (&r0, &prediction) {
        (Some(est), Some(pred)) => match verify_theorem(records, est.r0, pred, settings.ratio_band)
        {
            Ok(v) => Some(v),
            Err(e) => {
                notes.push(e.to_string());
                None
            }
        },
        _ => None,
    };
    let fits_ok = fits.len() == 2
        && fits
            .iter()
            .all(|f| f.within(settings.slope_tolerance).unwrap_or(false));
    let pass = fits_ok && verdict.as_ref().is_some_and(|v| v.pass);
    SweepReport {
        settings: *settings,
        r0,
        notes,
        prediction,
        fits,
        verdict,
        diagnostics: Vec::new(),
        failures: Vec::new(),
        pass,
    }
}

/// Sweep followed by [`analyze`], with the per-gap diagnostics attached.
pub fn run_and_analyze(cfg: &SweepConfig) -> Result<(SweepOutcome, SweepReport), SweepError> {
    let outcome = run_sweep(cfg)?;
    let mut report = analyze(&outcome.records, &cfg.settings());
    report.diagnostics = outcome.diagnostics.clone();
    report.failures = outcome.failures.clone();
    Ok((outcome, report))
}

pub fn write_records<W: io::Write>(records: &[SweepRecord], w: W) -> Result<(), SweepError> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in records {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_records<R: io::Read>(r: R) -> Result<Vec<SweepRecord>, SweepError> {
    let mut input = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for row in input.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

pub const CSV_HEADER: [&str; 12] = [
    "delta",
    "T1",
    "T2",
    "gap",
    "gradmax_all",
    "gradmax_neck",
    "gradmax_away",
    "r_delta",
    "flux_defect",
    "energy",
    "newton_iters",
    "wall_ms",
];

/// Writes `sweep.csv`, `report.json`, `gap.gp` and `gradmax.gp` into `outdir`.
pub fn emit_report(
    records: &[SweepRecord],
    report: &SweepReport,
    outdir: &Path,
) -> Result<(), SweepError> {
    fs::create_dir_all(outdir)?;
    let mut csv_bytes = Vec::new();
    write_records(records, &mut csv_bytes)?;
    fs::write(outdir.join("sweep.csv"), csv_bytes)?;
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    fs::write(outdir.join("report.json"), json)?;
    for q in [Quantity::Gap, Quantity::GradMax] {
        let fit = report.fits.iter().find(|f| f.quantity == q);
        fs::write(outdir.join(format!("{}.gp", q.name())), plot_script(q, fit))?;
    }
    Ok(())
}

fn plot_script(q: Quantity, fit: Option<&FitResult>) -> String {
    let (column, label) = match q {
        Quantity::Gap => (4, "T2 - T1"),
        Quantity::GradMax => (5, "max |grad u|"),
    };
    let mut s = String::new();
    s.push_str("# gnuplot script; run from the directory that holds sweep.csv\n");
    s.push_str("set datafile separator ','\n");
    s.push_str("set logscale xy\n");
    s.push_str("set key left top autotitle columnhead\n");
    s.push_str("set xlabel 'delta'\n");
    s.push_str(&format!("set ylabel '{label}'\n"));
    s.push_str("set terminal pngcairo size 800,600\n");
    s.push_str(&format!("set output '{}.png'\n", q.name()));
    let mut plot = format!("plot 'sweep.csv' using 1:{column} with linespoints title 'measured'");
    if let Some(f) = fit {
        s.push_str(&format!(
            "fit_A = {:e}\nfit_s = {:e}\n",
            f.prefactor, f.slope
        ));
        plot.push_str(", fit_A * x**fit_s with lines title 'fit'");
        if let (Some(a), Some(slope)) = (f.predicted_prefactor, f.predicted_slope) {
            s.push_str(&format!("pred_A = {a:e}\npred_s = {slope:e}\n"));
            plot.push_str(", pred_A * x**pred_s with lines dashtype 2 title 'predicted'");
        }
    }
    s.push_str(&plot);
    s.push('\n');
    s
}

/// One solve on one mesh, as read by the `solve` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveSpec {
    pub radius: f64,
    pub outer_radius: f64,
    pub clearance: f64,
    pub p: f64,
    pub delta: f64,
    pub datum: BoundaryDatum<f64>,
    pub problem: ProblemKind,
    pub mesh: MeshSpec,
    pub solver: SolverConfig,
    pub neck_width: Option<f64>,
}

impl Default for SolveSpec {
    fn default() -> Self {
        let s = SweepConfig::default();
        Self {
            radius: s.radius,
            outer_radius: s.outer_radius,
            clearance: s.clearance,
            p: s.p,
            delta: 0.01,
            datum: s.datum,
            problem: ProblemKind::Floating,
            mesh: s.mesh,
            solver: s.solver,
            neck_width: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub problem: ProblemKind,
    pub p: f64,
    pub delta: f64,
    pub nodes: usize,
    pub triangles: usize,
    pub min_quality: f64,
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    pub gap: Option<f64>,
    pub energy: f64,
    pub newton_iters: usize,
    pub relative_residual: f64,
    pub gradmax_all: GradMax,
    pub gradmax_neck: GradMax,
    pub gradmax_away: GradMax,
    pub flux: FluxReport,
}

pub fn run_solve(spec: &SolveSpec) -> Result<(DiscreteSolution, SolveSummary), SweepError> {
    let domain = DomainSpec::new(
        spec.outer_radius,
        ParticlePair::new(spec.radius, spec.delta)?,
        spec.clearance,
        spec.datum.clone(),
    )?;
    let neck = match spec.neck_width {
        None => domain.pair.default_neck(),
        Some(w) => domain.pair.neck(w)?,
    };
    if !(spec.mesh.neck_fraction > 0.0 && spec.mesh.neck_fraction <= 0.25) {
        return Err(SweepError::Config(format!(
            "neck_fraction {} must lie in (0, 1/4]",
            spec.mesh.neck_fraction
        )));
    }
    let mesh = Arc::new(build_mesh(&domain, &spec.mesh.params(&domain))?);
    let report = mesh.validate();
    let config = SolverConfig {
        p: spec.p,
        ..spec.solver
    };
    let sol = solve(mesh, &domain.datum, spec.problem, spec.radius, &config)?;
    let summary = SolveSummary {
        problem: spec.problem,
        p: sol.p,
        delta: spec.delta,
        nodes: report.nodes,
        triangles: report.triangles,
        min_quality: report.min_quality,
        t1: sol.t1,
        t2: sol.t2,
        gap: sol.gap(),
        energy: sol.plain_energy(),
        newton_iters: sol.iterations,
        relative_residual: sol.relative_residual(),
        gradmax_all: grad_max(&sol, Region::All, &neck),
        gradmax_neck: grad_max(&sol, Region::Neck, &neck),
        gradmax_away: grad_max(&sol, Region::Away, &neck),
        flux: flux_report(&sol, &neck),
    };
    Ok((sol, summary))
}

/// Writes `solution.txt`, `fluxes.csv` and `summary.json` into `outdir`.
pub fn emit_solution(
    sol: &DiscreteSolution,
    summary: &SolveSummary,
    outdir: &Path,
) -> Result<(), SweepError> {
    fs::create_dir_all(outdir)?;
    let mut text = Vec::new();
    sol.write_text(&mut text)?;
    fs::write(outdir.join("solution.txt"), text)?;
    let mut fluxes = Vec::new();
    summary.flux.write_csv(&mut fluxes)?;
    fs::write(outdir.join("fluxes.csv"), fluxes)?;
    let mut json = serde_json::to_string_pretty(summary)?;
    json.push('\n');
    fs::write(outdir.join("summary.json"), json)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn synthetic(f: impl Fn(f64) -> f64) -> Vec<SweepRecord> {
        LadderSpec::default()
            .deltas(1.0)
            .into_iter()
            .map(|delta| SweepRecord {
                delta,
                t1: 0.0,
                t2: f(delta),
                gap: f(delta),
                gradmax_all: f(delta) / delta,
                gradmax_neck: f(delta) / delta,
                gradmax_away: 1.0,
                r_delta: 2.0,
                flux_defect: 0.0,
                energy: 1.0,
                newton_iters: 1,
                wall_ms: 0.0,
            })
            .collect()
    }

    #[test]
    fn exact_power_law_is_recovered() {
        let recs = synthetic(|d| 3.0 * d.sqrt());
        let fit = fit_power_law(&recs, Quantity::Gap, None).unwrap();
        assert_relative_eq!(fit.slope, 0.5, epsilon = 1e-12);
        assert_relative_eq!(fit.prefactor, 3.0, max_relative = 1e-12);
        assert!(fit.residual <= 1e-12);
        let g = fit_power_law(&recs, Quantity::GradMax, None).unwrap();
        assert_relative_eq!(g.slope, -0.5, epsilon = 1e-12);
    }

    #[test]
    fn manufactured_records_give_unit_ratios() {
        let pred = predict(3.0, 2, 1.0, 2.0, 0.01).unwrap();
        let recs = synthetic(|d| pred.at(d).gap);
        let v = verify_theorem(&recs, 2.0, &pred, [0.85, 1.15]).unwrap();
        assert!(v.pass);
        for row in &v.rows {
            assert_relative_eq!(row.ratio, 1.0, epsilon = 1e-12);
        }
        let fit = fit_power_law(&recs, Quantity::Gap, Some(&pred)).unwrap();
        assert!(fit.slope_deviation.unwrap().abs() < 1e-12);
        assert!(fit.prefactor_deviation.unwrap().abs() < 1e-10);
    }

    #[test]
    fn non_positive_values_are_listed() {
        let mut recs = synthetic(|d| d);
        recs[1].gap = 0.0;
        recs[3].gap = -1.0;
        match fit_power_law(&recs, Quantity::Gap, None) {
            Err(SweepError::NonPositive { deltas, .. }) => assert_eq!(deltas, vec![0.02, 0.005]),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            fit_power_law(&recs[..2], Quantity::Gap, None),
            Err(SweepError::TooFewPoints(2))
        ));
    }

    #[test]
    fn non_positive_r0_is_rejected() {
        let pred = predict(2.0, 2, 1.0, 1.0, 0.01).unwrap();
        assert!(matches!(
            verify_theorem(&synthetic(|d| d), -1.0, &pred, [0.85, 1.15]),
            Err(SweepError::NonPositiveR0(_))
        ));
    }

    #[test]
    fn csv_round_trip() {
        let recs = synthetic(|d| 0.1 + d.powf(1.0 / 3.0));
        let mut buf = Vec::new();
        write_records(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(&CSV_HEADER.join(",")));
        assert_eq!(read_records(&buf[..]).unwrap(), recs);
    }

    #[test]
    fn empty_sweep_writes_header_only() {
        let report = analyze(&[], &AnalysisSettings::default());
        assert!(report.verdict.is_none() && report.fits.is_empty() && !report.pass);
        let mut buf = Vec::new();
        write_records(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            format!("{}\n", CSV_HEADER.join(","))
        );
    }

    #[test]
    fn config_defaults_and_validation() {
        let cfg = SweepConfig::from_json("{}").unwrap();
        assert_eq!(cfg.deltas().len(), 5);
        assert_relative_eq!(cfg.deltas()[4], 0.0025, max_relative = 1e-15);
        let err = SweepConfig::from_json(r#"{"mesh": {"neck_fraction": 0.5}}"#).unwrap_err();
        assert!(matches!(err, SweepError::Config(_)));
        assert!(SweepConfig::from_json(r#"{"ladder": {"ratio": 1.5}}"#).is_err());
        assert!(SweepConfig::from_json(r#"{"typo": 1}"#).is_err());
    }
}
