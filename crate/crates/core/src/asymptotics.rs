//! Blow-up exponent, the asymptotic constant `C_o` and the resulting
//! predictions for the potential gap `T2 - T1` and the field maximum.
//!
//! Everything here derives from the neck integral
//! `J(delta) = int_{|x| <= w} (delta + |x|^2 / R)^(1 - p) dx` (a segment in
//! two dimensions, a disk in three): `delta^gamma J(delta) -> C_o`.
//! The tabulated constants are kept alongside the quadrature route so the two
//! can be compared; in three dimensions they disagree (see
//! [`ConstantsReport::mismatch`]).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::{integrate, QuadError};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AsymptoticsError {
    #[error("p = {p}, d = {dim} is outside the supported regime ({reason})")]
    Unsupported {
        p: f64,
        dim: u32,
        reason: &'static str,
    },
    #[error("p = 2, d = 3 is the logarithmic case; no power-law constant exists")]
    LogCase,
    #[error("tabulated constants exist for integer p only (got {0}); use the quadrature route")]
    NonIntegerP(f64),
    #[error("neck half-width w = {w} must lie in (0, R = {radius})")]
    BadWidth { w: f64, radius: f64 },
    #[error("delta = {0} must be positive")]
    BadDelta(f64),
    #[error("R0 = {0} is negative: swap the particle labels so that T2 > T1")]
    NegativeR0(f64),
    #[error("extrapolation did not stabilise (last change {change:e}); ladder {ladder:?}")]
    NotStabilized {
        change: f64,
        ladder: Vec<(f64, f64)>,
    },
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// The rate in `delta^gamma J(delta) -> C_o`, or the logarithmic case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlowUpExponent<T> {
    Power(T),
    Log,
}

impl<T: Scalar> BlowUpExponent<T> {
    pub fn power(self) -> Option<T> {
        match self {
            BlowUpExponent::Power(g) => Some(g),
            BlowUpExponent::Log => None,
        }
    }
}

fn check_dim<T: Scalar>(p: T, dim: u32) -> Result<(), AsymptoticsError> {
    if dim != 2 && dim != 3 {
        return Err(AsymptoticsError::Unsupported {
            p: p.as_f64(),
            dim,
            reason: "dimension must be 2 or 3",
        });
    }
    if !(p >= T::lit(2.0)) || !p.is_finite() {
        return Err(AsymptoticsError::Unsupported {
            p: p.as_f64(),
            dim,
            reason: "p must be at least 2",
        });
    }
    Ok(())
}

/// Decay rate of the neck integral, `p - 3/2` for `d = 2` and `p - 2` for
/// `d = 3`, without the `d <= p` restriction of the blow-up theorem.
pub fn neck_exponent<T: Scalar>(p: T, dim: u32) -> Result<BlowUpExponent<T>, AsymptoticsError> {
    check_dim(p, dim)?;
    Ok(match dim {
        2 => BlowUpExponent::Power(p - T::lit(1.5)),
        _ if p == T::lit(2.0) => BlowUpExponent::Log,
        _ => BlowUpExponent::Power(p - T::lit(2.0)),
    })
}

/// Blow-up exponent `gamma(p, d)` for the regime `d <= p`, plus the
/// logarithmic case `p = 2`, `d = 3`.
pub fn gamma_exponent<T: Scalar>(p: T, dim: u32) -> Result<BlowUpExponent<T>, AsymptoticsError> {
    let exponent = neck_exponent(p, dim)?;
    if exponent == BlowUpExponent::Log {
        return Ok(exponent);
    }
    if T::lit(dim as f64) > p {
        return Err(AsymptoticsError::Unsupported {
            p: p.as_f64(),
            dim,
            reason: "the blow-up law requires d <= p",
        });
    }
    Ok(exponent)
}

/// `prod_{k=1}^{p-2} (k - 1/2) / k`, equal to
/// `(1/pi) int (1 + t^2)^(1 - p) dt` over the real line.
pub fn wallis_product<T: Scalar>(p: u32) -> T {
    assert!(p >= 2, "wallis_product needs p >= 2");
    (1..=p - 2).fold(T::one(), |acc, k| {
        let k = T::lit(k as f64);
        acc * (k - T::lit(0.5)) / k
    })
}

/// Tabulated constant for integer `p`.
///
/// Two dimensions: `pi sqrt(R) prod (k - 1/2)/k`. Three dimensions: the
/// explicit rows `pi R / 2` (p = 3), `pi R / 8` (p = 4) and the general row
/// `pi R / (2^(p-1) (p - 2))` for larger `p`. The `(2, 3)` cell is the
/// logarithmic case, see [`c_o_table_log_cell`].
pub fn c_o_table<T: Scalar>(p: u32, dim: u32, radius: T) -> Result<T, AsymptoticsError> {
    check_dim(T::lit(p as f64), dim)?;
    let pi = T::PI();
    match (dim, p) {
        (2, _) => Ok(pi * wallis_product::<T>(p) * radius.sqrt()),
        (_, 2) => Err(AsymptoticsError::LogCase),
        (_, 3) => Ok(pi * radius / T::lit(2.0)),
        (_, 4) => Ok(pi * radius / T::lit(8.0)),
        (_, _) => {
            let denom = T::lit(2f64.powi(p as i32 - 1)) * T::lit((p - 2) as f64);
            Ok(pi * radius / denom)
        }
    }
}

/// The printed `(p, d) = (2, 3)` entry, `pi R ln R`.
pub fn c_o_table_log_cell<T: Scalar>(radius: T) -> T {
    T::PI() * radius * radius.ln()
}

/// [`c_o_table`] for a real `p`, failing when `p` is not an integer.
pub fn c_o_table_real<T: Scalar>(p: T, dim: u32, radius: T) -> Result<T, AsymptoticsError> {
    if p.fract() != T::zero() || p < T::lit(2.0) {
        return Err(AsymptoticsError::NonIntegerP(p.as_f64()));
    }
    c_o_table(p.to_u32().unwrap(), dim, radius)
}

fn check_neck<T: Scalar>(delta: T, w: T, radius: T) -> Result<(), AsymptoticsError> {
    if !(delta > T::zero()) {
        return Err(AsymptoticsError::BadDelta(delta.as_f64()));
    }
    if !(w > T::zero() && w < radius) {
        return Err(AsymptoticsError::BadWidth {
            w: w.as_f64(),
            radius: radius.as_f64(),
        });
    }
    Ok(())
}

/// Geometric breakpoints `0, s, 4s, 16s, ...` below `end`.
fn graded_breakpoints<T: Scalar>(scale: T, end: T) -> Vec<T> {
    let mut pts = vec![T::zero()];
    let mut x = scale;
    while x < end {
        pts.push(x);
        x *= T::lit(4.0);
    }
    pts.push(end);
    pts
}

const NECK_REL_TOL: f64 = 1e-10;
const NECK_MAX_INTERVALS: usize = 2000;

/// `J(delta)`: in two dimensions `int_{-w}^{w} (delta + x^2/R)^(1-p) dx`, in
/// three `2 pi int_0^w r (delta + r^2/R)^(1-p) dr`, to relative `1e-10`.
pub fn neck_integral<T: Scalar>(
    delta: T,
    w: T,
    radius: T,
    p: T,
    dim: u32,
) -> Result<T, AsymptoticsError> {
    check_dim(p, dim)?;
    check_neck(delta, w, radius)?;
    let expo = T::one() - p;
    let knots = graded_breakpoints((radius * delta).sqrt(), w);
    let tol = T::attainable(NECK_REL_TOL);
    let res = if dim == 2 {
        integrate(
            |x: T| (delta + x * x / radius).powf(expo),
            &knots,
            tol,
            NECK_MAX_INTERVALS,
        )?
        .value
            * T::lit(2.0)
    } else {
        integrate(
            |r: T| r * (delta + r * r / radius).powf(expo),
            &knots,
            tol,
            NECK_MAX_INTERVALS,
        )?
        .value
            * T::lit(2.0)
            * T::PI()
    };
    Ok(res)
}

/// `delta^gamma J(delta)` evaluated in the stretched variable
/// `x = sqrt(R delta) t`, which keeps it finite for tiny `delta`.
pub fn scaled_neck_integral<T: Scalar>(
    delta: T,
    w: T,
    radius: T,
    p: T,
    dim: u32,
) -> Result<T, AsymptoticsError> {
    check_dim(p, dim)?;
    check_neck(delta, w, radius)?;
    if dim == 3 && p == T::lit(2.0) {
        return Err(AsymptoticsError::LogCase);
    }
    let expo = T::one() - p;
    let end = w / (radius * delta).sqrt();
    let knots = graded_breakpoints(T::one(), end);
    let tol = T::attainable(NECK_REL_TOL * 0.01);
    Ok(if dim == 2 {
        T::lit(2.0)
            * radius.sqrt()
            * integrate(
                |t: T| (T::one() + t * t).powf(expo),
                &knots,
                tol,
                NECK_MAX_INTERVALS,
            )?
            .value
    } else {
        T::lit(2.0)
            * T::PI()
            * radius
            * integrate(
                |t: T| t * (T::one() + t * t).powf(expo),
                &knots,
                tol,
                NECK_MAX_INTERVALS,
            )?
            .value
    })
}

/// Settings of the extrapolated quadrature route to `C_o`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureOptions {
    /// Neck half-width as a fraction of `R`.
    pub width_fraction: f64,
    /// Largest ladder value of `delta / R`.
    pub delta_max: f64,
    /// Ratio between consecutive ladder values (< 1).
    pub ratio: f64,
    /// Number of ladder points.
    pub points: usize,
    /// Relative change between the last two diagonal entries that counts as
    /// stabilised.
    pub tolerance: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            width_fraction: 0.5,
            delta_max: 1e-4,
            ratio: 0.1,
            points: 5,
            tolerance: 1e-8,
        }
    }
}

/// Extrapolated constant with the data it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantEstimate<T> {
    pub value: T,
    /// `(delta, delta^gamma J(delta))` pairs.
    pub ladder: Vec<(T, T)>,
    /// Relative change between the last two diagonal entries.
    pub change: T,
}

/// Richardson elimination for `v(delta) = C + sum_k c_k delta^(e0 + k)` on a
/// geometric ladder `delta_{i+1} = q delta_i`.
///
/// Entry `j` of the result is the order-`j` estimate built from the `j + 1`
/// smallest gaps, so the last entry is the full extrapolation.
pub fn richardson_diagonal<T: Scalar>(values: &[T], q: T, e0: T) -> Vec<T> {
    let n = values.len();
    let mut table = values.to_vec();
    let mut estimates = vec![table[n - 1]];
    for j in 1..n {
        let factor = q.powf(e0 + T::lit((j - 1) as f64));
        for i in (j..n).rev() {
            table[i] = (table[i] - factor * table[i - 1]) / (T::one() - factor);
        }
        estimates.push(table[n - 1]);
    }
    estimates
}

/// `C_o` as the extrapolated limit of `delta^gamma J(delta)`.
pub fn c_o_quadrature<T: Scalar>(
    p: T,
    dim: u32,
    radius: T,
) -> Result<ConstantEstimate<T>, AsymptoticsError> {
    c_o_quadrature_with(p, dim, radius, &QuadratureOptions::default())
}

pub fn c_o_quadrature_with<T: Scalar>(
    p: T,
    dim: u32,
    radius: T,
    opts: &QuadratureOptions,
) -> Result<ConstantEstimate<T>, AsymptoticsError> {
    let gamma = match neck_exponent(p, dim)? {
        BlowUpExponent::Power(g) => g,
        BlowUpExponent::Log => return Err(AsymptoticsError::LogCase),
    };
    let w = radius * T::lit(opts.width_fraction);
    let q = T::lit(opts.ratio);
    let mut ladder = Vec::with_capacity(opts.points);
    let mut delta = radius * T::lit(opts.delta_max);
    for _ in 0..opts.points {
        ladder.push((delta, scaled_neck_integral(delta, w, radius, p, dim)?));
        delta *= q;
    }
    let values: Vec<T> = ladder.iter().map(|(_, v)| *v).collect();
    let diag = richardson_diagonal(&values, q, gamma);
    let n = diag.len();
    let value = diag[n - 1];
    let change = if n > 1 {
        ((diag[n - 1] - diag[n - 2]) / value).abs()
    } else {
        T::infinity()
    };
    if !(change <= T::attainable(opts.tolerance)) {
        return Err(AsymptoticsError::NotStabilized {
            change: change.as_f64(),
            ladder: ladder
                .iter()
                .map(|(d, v)| (d.as_f64(), v.as_f64()))
                .collect(),
        });
    }
    Ok(ConstantEstimate {
        value,
        ladder,
        change,
    })
}

/// Coefficient of `ln(1/delta)` in the neck integral (the logarithmic case),
/// from the quadrature slope between two tiny gaps.
pub fn log_coefficient_quadrature<T: Scalar>(radius: T, w: T) -> Result<T, AsymptoticsError> {
    let d1 = radius * T::lit(1e-9);
    let d2 = radius * T::lit(1e-10);
    let j1 = neck_integral(d1, w, radius, T::lit(2.0), 3)?;
    let j2 = neck_integral(d2, w, radius, T::lit(2.0), 3)?;
    Ok((j2 - j1) / (d1 / d2).ln())
}

/// Where the constant used in a prediction came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstantSource {
    Table,
    Quadrature,
}

/// Constant used for predictions: the table for `d = 2` and integer `p`,
/// the quadrature route otherwise (including every `d = 3` case, where the
/// tabulated column disagrees with the neck integral).
pub fn prediction_constant<T: Scalar>(
    p: T,
    dim: u32,
    radius: T,
) -> Result<(T, ConstantSource), AsymptoticsError> {
    match gamma_exponent(p, dim)? {
        BlowUpExponent::Log => Ok((
            log_coefficient_quadrature(radius, radius * T::lit(0.5))?,
            ConstantSource::Quadrature,
        )),
        BlowUpExponent::Power(_) => {
            if dim == 2 {
                if let Ok(c) = c_o_table_real(p, dim, radius) {
                    return Ok((c, ConstantSource::Table));
                }
            }
            Ok((
                c_o_quadrature(p, dim, radius)?.value,
                ConstantSource::Quadrature,
            ))
        }
    }
}

/// Predicted potential gap and field maximum at a finite `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticPrediction<T> {
    pub p: T,
    pub dim: u32,
    pub radius: T,
    pub gamma: BlowUpExponent<T>,
    pub c_o: T,
    pub constant_source: ConstantSource,
    pub r0: T,
    pub delta: T,
    /// `R0 / C_o`, the limit of `(T2 - T1)^(p-1) delta^(-gamma)`.
    pub gap_law: T,
    /// `(R0 / C_o)^(1/(p-1))`.
    pub gradient_law: T,
    /// Exponent `s` in `gap ~ delta^s` (`None` in the log case).
    pub gap_exponent: Option<T>,
    /// Exponent `s` in `max |grad u| ~ delta^s` (`None` in the log case).
    pub gradient_exponent: Option<T>,
    pub gap: T,
    pub grad_max: T,
    /// `R0 = 0`: no blow-up is predicted.
    pub degenerate: bool,
}

impl<T: Scalar> AsymptoticPrediction<T> {
    pub fn log_case(&self) -> bool {
        self.gamma == BlowUpExponent::Log
    }

    /// Same law at another gap.
    pub fn at(&self, delta: T) -> Self {
        let mut out = *self;
        out.delta = delta;
        let (gap, grad) = evaluate_law(self.p, self.gamma, self.gap_law, delta);
        out.gap = gap;
        out.grad_max = grad;
        out
    }
}

fn evaluate_law<T: Scalar>(p: T, gamma: BlowUpExponent<T>, gap_law: T, delta: T) -> (T, T) {
    let inv = T::one() / (p - T::one());
    let gap = match gamma {
        BlowUpExponent::Power(g) => (gap_law * delta.powf(g)).powf(inv),
        BlowUpExponent::Log => (gap_law / (T::one() / delta).ln()).powf(inv),
    };
    (gap, gap / delta)
}

/// Predictions of the blow-up law for the given flux constant `r0`.
pub fn predict<T: Scalar>(
    p: T,
    dim: u32,
    radius: T,
    r0: T,
    delta: T,
) -> Result<AsymptoticPrediction<T>, AsymptoticsError> {
    let (c_o, source) = prediction_constant(p, dim, radius)?;
    predict_with_constant(p, dim, radius, r0, delta, c_o, source)
}

/// As [`predict`] with a known constant.
#[allow(clippy::too_many_arguments)]
pub fn predict_with_constant<T: Scalar>(
    p: T,
    dim: u32,
    radius: T,
    r0: T,
    delta: T,
    c_o: T,
    constant_source: ConstantSource,
) -> Result<AsymptoticPrediction<T>, AsymptoticsError> {
    let gamma = gamma_exponent(p, dim)?;
    if !(delta > T::zero()) {
        return Err(AsymptoticsError::BadDelta(delta.as_f64()));
    }
    if r0 < T::zero() {
        return Err(AsymptoticsError::NegativeR0(r0.as_f64()));
    }
    let inv = T::one() / (p - T::one());
    let gap_law = r0 / c_o;
    let (gap, grad_max) = evaluate_law(p, gamma, gap_law, delta);
    let gap_exponent = gamma.power().map(|g| g * inv);
    Ok(AsymptoticPrediction {
        p,
        dim,
        radius,
        gamma,
        c_o,
        constant_source,
        r0,
        delta,
        gap_law,
        gradient_law: gap_law.powf(inv),
        gap_exponent,
        gradient_exponent: gap_exponent.map(|s| s - T::one()),
        gap,
        grad_max,
        degenerate: r0 == T::zero(),
    })
}

/// Table value against the quadrature route, for the `constants` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub p: f64,
    pub dim: u32,
    pub radius: f64,
    pub gamma: BlowUpExponent<f64>,
    /// Tabulated value (`None` for non-integer `p`).
    pub table: Option<f64>,
    /// Extrapolated neck-integral limit; in the log case the coefficient of
    /// `ln(1/delta)`.
    pub quadrature: f64,
    pub difference: Option<f64>,
    /// `quadrature / table`.
    pub ratio: Option<f64>,
    /// Table and quadrature disagree beyond `1e-4` relative.
    pub mismatch: bool,
    pub note: Option<String>,
}

pub fn constants_report(
    p: f64,
    dim: u32,
    radius: f64,
) -> Result<ConstantsReport, AsymptoticsError> {
    let gamma = neck_exponent(p, dim)?;
    let (table, quadrature) = match gamma {
        BlowUpExponent::Log => (
            Some(c_o_table_log_cell(radius)),
            log_coefficient_quadrature(radius, radius * 0.5)?,
        ),
        BlowUpExponent::Power(_) => (
            c_o_table_real(p, dim, radius).ok(),
            c_o_quadrature(p, dim, radius)?.value,
        ),
    };
    let difference = table.map(|t| quadrature - t);
    let ratio = table.map(|t| quadrature / t);
    let mismatch = table.is_some_and(|t| ((quadrature - t) / t).abs() > 1e-4 || !t.is_finite());
    let note = match (dim, gamma, mismatch) {
        (3, BlowUpExponent::Log, _) => Some(
            "log case: the tabulated cell pi R ln R is compared with the quadrature coefficient of ln(1/delta)"
                .to_string(),
        ),
        (3, _, true) => Some(format!(
            "three-dimensional table entry differs from the neck-integral limit by a factor {:.6}",
            ratio.unwrap()
        )),
        (_, _, true) => Some("table and quadrature disagree".to_string()),
        _ => None,
    };
    Ok(ConstantsReport {
        p,
        dim,
        radius,
        gamma,
        table,
        quadrature,
        difference,
        ratio,
        mismatch,
        note,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn gamma_values() {
        assert_eq!(gamma_exponent(2.0, 2).unwrap(), BlowUpExponent::Power(0.5));
        assert_eq!(gamma_exponent(3.0, 3).unwrap(), BlowUpExponent::Power(1.0));
        assert_eq!(gamma_exponent(4.0, 2).unwrap(), BlowUpExponent::Power(2.5));
        assert_eq!(gamma_exponent(2.0, 3).unwrap(), BlowUpExponent::Log);
        assert!(matches!(
            gamma_exponent(2.5, 3),
            Err(AsymptoticsError::Unsupported { .. })
        ));
        assert_eq!(neck_exponent(2.5, 3).unwrap(), BlowUpExponent::Power(0.5));
    }

    #[test]
    fn wallis_rows() {
        assert_eq!(wallis_product::<f64>(2), 1.0);
        assert_eq!(wallis_product::<f64>(3), 0.5);
        assert_eq!(wallis_product::<f64>(4), 0.375);
        assert_relative_eq!(
            wallis_product::<f64>(6),
            0.5 * 0.75 * (2.5 / 3.0) * (3.5 / 4.0)
        );
    }

    #[test]
    fn table_entries() {
        assert_relative_eq!(c_o_table(2, 2, 1.0).unwrap(), PI);
        assert_relative_eq!(c_o_table(3, 2, 1.0).unwrap(), PI / 2.0);
        assert_relative_eq!(c_o_table(4, 2, 4.0).unwrap(), 3.0 * PI / 4.0);
        assert_relative_eq!(c_o_table(3, 3, 1.0).unwrap(), PI / 2.0);
        assert_relative_eq!(c_o_table(4, 3, 2.0).unwrap(), PI / 4.0);
        assert_relative_eq!(c_o_table(5, 3, 1.0).unwrap(), PI / 48.0);
        assert!(matches!(
            c_o_table(2, 3, 1.0),
            Err(AsymptoticsError::LogCase)
        ));
        assert!(matches!(
            c_o_table_real(2.5, 2, 1.0),
            Err(AsymptoticsError::NonIntegerP(_))
        ));
    }

    #[test]
    fn richardson_removes_known_powers() {
        let q = 0.1f64;
        let vals: Vec<f64> = (0..5)
            .map(|k| {
                let d = 1e-2 * q.powi(k);
                3.0 + 2.0 * d.sqrt() - 5.0 * d.powf(1.5) + 0.7 * d.powf(2.5)
            })
            .collect();
        let diag = richardson_diagonal(&vals, q, 0.5);
        assert_relative_eq!(*diag.last().unwrap(), 3.0, max_relative = 1e-13);
    }

    #[test]
    fn width_independence() {
        let narrow = QuadratureOptions {
            width_fraction: 0.05,
            ..Default::default()
        };
        let wide = QuadratureOptions {
            width_fraction: 0.2,
            ..Default::default()
        };
        let a = c_o_quadrature_with(3.0, 2, 1.0, &narrow).unwrap().value;
        let b = c_o_quadrature_with(3.0, 2, 1.0, &wide).unwrap().value;
        assert_relative_eq!(a, b, max_relative = 1e-4);
    }

    #[test]
    fn log_case_is_rejected_by_extrapolation() {
        assert!(matches!(
            c_o_quadrature(2.0, 3, 1.0),
            Err(AsymptoticsError::LogCase)
        ));
    }

    #[test]
    fn prediction_examples() {
        let pr = predict(3.0, 2, 1.0, PI / 2.0, 1e-4).unwrap();
        assert_relative_eq!(pr.gap, 1e-3, max_relative = 1e-12);
        assert_eq!(pr.constant_source, ConstantSource::Table);

        let zero = predict(2.0, 2, 1.0, 0.0, 1e-3).unwrap();
        assert!(zero.degenerate);
        assert_eq!(zero.gap, 0.0);
        assert_eq!(zero.grad_max, 0.0);

        assert!(matches!(
            predict(2.0, 2, 1.0, -1.0, 1e-3),
            Err(AsymptoticsError::NegativeR0(_))
        ));

        let lin = predict(2.0, 2, 1.0, 1.0, 1e-4).unwrap();
        assert_relative_eq!(lin.gradient_exponent.unwrap(), -0.5);
        let ratio = lin.grad_max / lin.at(4e-4).grad_max;
        assert_relative_eq!(ratio, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn gap_and_gradient_laws_agree() {
        for (p, d) in [(2.0, 2), (3.0, 2), (4.5, 2), (3.0, 3), (5.0, 3), (2.0, 3)] {
            for delta in [1e-2, 1e-4] {
                let pr = predict(p, d, 1.3, 0.8, delta).unwrap();
                assert_relative_eq!(pr.grad_max * delta, pr.gap, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn log_case_prediction() {
        let pr = predict(2.0, 3, 1.0, 2.0, 1e-3).unwrap();
        assert!(pr.log_case());
        assert_relative_eq!(pr.c_o, PI, max_relative = 1e-6);
        let expected = 2.0 / (PI * (1e3f64).ln());
        assert_relative_eq!(pr.gap, expected, max_relative = 1e-6);
    }
}
