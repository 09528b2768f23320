//! Radial p-harmonic functions and the sandwich bound they give on the normal
//! derivative along the upper neck arc.
//!
//! In dimension `d` the function `a |x - x0|^beta + b` with
//! `beta = (p - d) / (p - 1)` is p-harmonic away from `x0`; when `p = d` the
//! power degenerates into `a log |x - x0| + b`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, ParticlePair};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RadialError {
    #[error("radius {0} must be positive")]
    NonPositiveRadius(f64),
    #[error("exponent p = {0} must be at least 2")]
    BadExponent(f64),
    #[error("dimension {0} is not supported (2 or 3)")]
    BadDimension(u32),
    #[error("fit interval [{r1}, {r2}] is degenerate")]
    DegenerateInterval { r1: f64, r2: f64 },
    #[error("potential gap T2 - T1 = {0} is negative; swap the particle labels")]
    NegativeGap(f64),
    #[error("delta must be positive for the barrier bound")]
    ZeroDelta,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Power,
    Log,
}

/// `a r^beta + b` (power branch) or `a log r + b` (log branch) around `center`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile<T> {
    pub center: [T; 3],
    pub a: T,
    pub b: T,
    p: T,
    dim: u32,
    branch: Branch,
}

fn check_params<T: Scalar>(p: T, dim: u32) -> Result<Branch, RadialError> {
    if !(p >= T::lit(2.0)) || !p.is_finite() {
        return Err(RadialError::BadExponent(p.as_f64()));
    }
    if dim != 2 && dim != 3 {
        return Err(RadialError::BadDimension(dim));
    }
    Ok(if p == T::lit(dim as f64) {
        Branch::Log
    } else {
        Branch::Power
    })
}

/// `beta = (p - d) / (p - 1)`.
pub fn radial_exponent<T: Scalar>(p: T, dim: u32) -> T {
    (p - T::lit(dim as f64)) / (p - T::one())
}

impl<T: Scalar> RadialProfile<T> {
    pub fn new(center: [T; 3], a: T, b: T, p: T, dim: u32) -> Result<Self, RadialError> {
        let branch = check_params(p, dim)?;
        Ok(Self {
            center,
            a,
            b,
            p,
            dim,
            branch,
        })
    }

    pub fn p(&self) -> T {
        self.p
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    pub fn beta(&self) -> T {
        radial_exponent(self.p, self.dim)
    }

    fn check_radius(r: T) -> Result<(), RadialError> {
        if !(r > T::zero()) {
            return Err(RadialError::NonPositiveRadius(r.as_f64()));
        }
        Ok(())
    }

    /// Shape function without amplitude and offset.
    fn shape(&self, r: T) -> T {
        match self.branch {
            Branch::Power => r.powf(self.beta()),
            Branch::Log => r.ln(),
        }
    }

    pub fn eval(&self, r: T) -> Result<T, RadialError> {
        Self::check_radius(r)?;
        Ok(self.a * self.shape(r) + self.b)
    }

    /// Evaluates at a point (missing coordinates are zero).
    pub fn eval_at(&self, point: &[T]) -> Result<T, RadialError> {
        let r = point
            .iter()
            .zip(self.center.iter())
            .fold(T::zero(), |acc, (x, c)| acc + (*x - *c) * (*x - *c))
            .sqrt();
        self.eval(r)
    }

    /// Derivative in the direction of increasing `r`.
    pub fn gradient(&self, r: T) -> Result<T, RadialError> {
        Self::check_radius(r)?;
        Ok(match self.branch {
            Branch::Power => {
                let beta = self.beta();
                self.a * beta * r.powf(beta - T::one())
            }
            Branch::Log => self.a / r,
        })
    }

    /// Radial form of `div(|grad psi|^(p-2) grad psi)`,
    /// `(|psi'|^(p-2) psi' r^(d-1))' / r^(d-1)`, differentiated in closed form.
    ///
    /// `psi' = A r^m` so the flux is `sign(A) |A|^(p-1) r^e` with
    /// `e = m (p - 1) + d - 1`; the residual is proportional to `e`, which
    /// vanishes identically.
    pub fn plaplace_residual(&self, r: T) -> Result<T, RadialError> {
        Self::check_radius(r)?;
        if self.a == T::zero() {
            return Ok(T::zero());
        }
        let (amp, m) = match self.branch {
            Branch::Power => (self.a * self.beta(), self.beta() - T::one()),
            Branch::Log => (self.a, -T::one()),
        };
        let d = T::lit(self.dim as f64);
        let e = m * (self.p - T::one()) + d - T::one();
        let flux_coeff = amp.signum() * amp.abs().powf(self.p - T::one());
        Ok(flux_coeff * e * r.powf(e - T::one()) / r.powf(d - T::one()))
    }
}

/// Radial profile through `(r1, v1)` and `(r2, v2)`, centred at the origin.
pub fn fit_two_point<T: Scalar>(
    r1: T,
    v1: T,
    r2: T,
    v2: T,
    p: T,
    dim: u32,
) -> Result<RadialProfile<T>, RadialError> {
    let branch = check_params(p, dim)?;
    if !(r1 > T::zero()) {
        return Err(RadialError::NonPositiveRadius(r1.as_f64()));
    }
    if !(r2 > r1) {
        return Err(RadialError::DegenerateInterval {
            r1: r1.as_f64(),
            r2: r2.as_f64(),
        });
    }
    let mut profile = RadialProfile {
        center: [T::zero(); 3],
        a: T::zero(),
        b: v1,
        p,
        dim,
        branch,
    };
    if v1 != v2 {
        let (s1, s2) = (profile.shape(r1), profile.shape(r2));
        profile.a = (v2 - v1) / (s2 - s1);
        profile.b = v1 - profile.a * s1;
    }
    Ok(profile)
}

/// `beta r1^(beta-1) (r2 - r1) / (r2^beta - r1^beta)`: the ratio of the
/// barrier slope at the inner radius to the secant slope `1 / (r2 - r1)`.
///
/// For `beta <= 1` the power is concave and the ratio is at least 1.
pub fn tangent_secant_ratio<T: Scalar>(beta: T, r1: T, r2: T) -> T {
    if beta == T::zero() {
        // log branch: (1/r1) (r2 - r1) / ln(r2/r1)
        return (r2 - r1) / (r1 * (r2 / r1).ln());
    }
    beta * r1.powf(beta - T::one()) * (r2 - r1) / (r2.powf(beta) - r1.powf(beta))
}

/// Sandwich bound on `n . grad u` at a point of the upper neck arc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxBound<T> {
    /// `(T2 - T1) / (r2 - r1) (1 + c delta) + C` with `r1 = delta`.
    pub upper: T,
    /// `(T2 - T1) / (rho2 - rho1) (1 - c delta) - C` with `rho1 = delta`,
    /// or `-C` when the lower construction is out of range.
    pub lower: T,
    /// `(T2 - T1) / (delta + x^2 / R)`.
    pub leading: T,
    /// Additive constant `C`.
    pub slack: T,
    /// Slope at `r1` of the radial barrier through `(r1, T1)`, `(r2, T2)`.
    pub barrier_slope_upper: T,
    /// Slope at `rho2` of the radial barrier through `(rho1, T2)`, `(rho2, T1)`,
    /// `None` outside the range of the lower construction.
    pub barrier_slope_lower: Option<T>,
}

impl<T: Scalar> FluxBound<T> {
    pub fn contains(&self, value: T) -> bool {
        self.lower <= value && value <= self.upper
    }
}

/// Evaluates the sandwich at abscissa `x` for floating potentials
/// `t1 <= t2`. `first_order` is the coefficient `c` of the `(1 + c delta)`
/// factor, `slack` the additive constant.
#[allow(clippy::too_many_arguments)]
pub fn barrier_flux_bound<T: Scalar>(
    x: T,
    t1: T,
    t2: T,
    pair: &ParticlePair<T>,
    p: T,
    dim: u32,
    slack: T,
    first_order: T,
) -> Result<FluxBound<T>, RadialError> {
    check_params(p, dim)?;
    let gap = t2 - t1;
    if gap < T::zero() {
        return Err(RadialError::NegativeGap(gap.as_f64()));
    }
    let delta = pair.delta();
    if !(delta > T::zero()) {
        return Err(RadialError::ZeroDelta);
    }
    let r = pair.radius();
    let leading = gap / (delta + x * x / r);
    let factor = first_order * delta;

    let (r1, r2) = pair.upper_barrier_radii(x, delta)?;
    let upper = gap / (r2 - r1) * (T::one() + factor) + slack;
    let up_profile = fit_two_point(r1, t1, r2, t2, p, dim)?;
    let barrier_slope_upper = up_profile.gradient(r1)?;

    let (lower, barrier_slope_lower) = match pair.lower_barrier_radii(x, delta) {
        Ok((rho1, rho2)) => {
            let low = gap / (rho2 - rho1) * (T::one() - factor) - slack;
            // v(rho1) = T2, v(rho2) = T1: slope magnitude at rho2.
            let prof = fit_two_point(rho1, t2, rho2, t1, p, dim)?;
            (low, Some(-prof.gradient(rho2)?))
        }
        Err(GeometryError::OutOfValidity { .. }) => (-slack, None),
        Err(e) => return Err(e.into()),
    };

    Ok(FluxBound {
        upper,
        lower: lower.min(upper),
        leading,
        slack,
        barrier_slope_upper,
        barrier_slope_lower,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn prof(a: f64, b: f64, p: f64, d: u32) -> RadialProfile<f64> {
        RadialProfile::new([0.0; 3], a, b, p, d).unwrap()
    }

    #[test]
    fn eval_examples() {
        let zero = prof(0.0, 3.5, 3.0, 2);
        for r in [0.1, 1.0, 7.0] {
            assert_eq!(zero.eval(r).unwrap(), 3.5);
        }
        assert_relative_eq!(
            prof(2.0, 1.0, 3.0, 2).eval(4.0).unwrap(),
            5.0,
            epsilon = 1e-14
        );
        let log = prof(1.0, 0.0, 2.0, 2);
        assert_eq!(log.branch(), Branch::Log);
        assert_relative_eq!(log.eval(std::f64::consts::E).unwrap(), 1.0, epsilon = 1e-15);
        assert!(matches!(
            log.eval(0.0),
            Err(RadialError::NonPositiveRadius(_))
        ));
        assert!(log.eval(-1.0).is_err());
    }

    #[test]
    fn branch_selection() {
        assert_eq!(prof(1.0, 0.0, 3.0, 3).branch(), Branch::Log);
        assert_eq!(prof(1.0, 0.0, 3.0, 2).branch(), Branch::Power);
        assert_eq!(prof(1.0, 0.0, 2.5, 2).branch(), Branch::Power);
        assert!(RadialProfile::new([0.0; 3], 1.0, 0.0, 1.5, 2).is_err());
        assert!(RadialProfile::new([0.0; 3], 1.0, 0.0, 3.0, 4).is_err());
    }

    #[test]
    fn two_point_fit() {
        let f = fit_two_point(1.0, 0.0, 4.0, 1.0, 3.0, 2).unwrap();
        assert_relative_eq!(f.a, 1.0, epsilon = 1e-14);
        assert_relative_eq!(f.b, -1.0, epsilon = 1e-14);

        let c = fit_two_point(0.3, 2.0, 0.9, 2.0, 4.0, 2).unwrap();
        assert_eq!(c.a, 0.0);
        assert_eq!(c.b, 2.0);

        for (p, d) in [(2.0, 2), (3.0, 2), (4.0, 3), (2.5, 2), (3.0, 3), (6.0, 3)] {
            let f = fit_two_point(0.2, -0.7, 1.3, 2.4, p, d).unwrap();
            assert_relative_eq!(f.eval(0.2).unwrap(), -0.7, max_relative = 1e-12);
            assert_relative_eq!(f.eval(1.3).unwrap(), 2.4, max_relative = 1e-12);
        }
        assert!(matches!(
            fit_two_point(1.0, 0.0, 1.0, 1.0, 3.0, 2),
            Err(RadialError::DegenerateInterval { .. })
        ));
    }

    #[test]
    fn gradient_examples() {
        assert_eq!(prof(0.0, 1.0, 3.0, 2).gradient(0.4).unwrap(), 0.0);
        assert_relative_eq!(
            prof(1.0, 0.0, 3.0, 2).gradient(1.0).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        assert!(prof(1.0, 0.0, 3.0, 2).gradient(0.0).is_err());
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let r = 0.7;
        let h = 1e-5;
        for (p, d) in [(3.0, 2), (4.0, 3), (2.0, 2)] {
            let f = prof(1.3, 0.2, p, d);
            let fd = (f.eval(r + h).unwrap() - f.eval(r - h).unwrap()) / (2.0 * h);
            assert_relative_eq!(f.gradient(r).unwrap(), fd, max_relative = 1e-6);
        }
    }

    #[test]
    fn residual_vanishes() {
        assert_eq!(prof(0.0, 1.0, 3.0, 2).plaplace_residual(0.5).unwrap(), 0.0);
        for r in [0.5, 1.0, 2.0] {
            assert!(prof(1.0, 0.0, 3.0, 2).plaplace_residual(r).unwrap().abs() <= 1e-10);
        }
        assert!(prof(1.0, 0.0, 2.0, 2).plaplace_residual(0.3).unwrap().abs() <= 1e-10);
    }

    #[test]
    fn barrier_bound_examples() {
        let pair = ParticlePair::new(1.0, 0.01).unwrap();
        let b = barrier_flux_bound(0.3, 0.25, 0.25, &pair, 3.0, 2, 0.7, 2.0).unwrap();
        assert_eq!(b.leading, 0.0);
        assert_relative_eq!(b.upper, 0.7);
        assert_relative_eq!(b.lower, -0.7);

        let b = barrier_flux_bound(0.0, 0.0, 0.1, &pair, 3.0, 2, 0.0, 2.0).unwrap();
        assert_relative_eq!(b.leading, 10.0, epsilon = 1e-12);

        let pair = ParticlePair::new(1.0, 1e-3).unwrap();
        let b = barrier_flux_bound(0.05, 0.0, 0.1, &pair, 3.0, 2, 0.0, 2.0).unwrap();
        assert_relative_eq!(b.leading, 0.1 / 3.5e-3, max_relative = 1e-12);
        assert_relative_eq!(b.leading, 28.571, epsilon = 1e-3);
        assert!(b.lower <= b.leading && b.leading <= b.upper);

        assert!(matches!(
            barrier_flux_bound(0.0, 0.2, 0.1, &pair, 3.0, 2, 0.0, 2.0),
            Err(RadialError::NegativeGap(_))
        ));
    }

    #[test]
    fn lower_bound_falls_back_outside_validity() {
        let pair = ParticlePair::new(1.0, 0.01).unwrap();
        let b = barrier_flux_bound(0.6, 0.0, 0.1, &pair, 3.0, 2, 0.4, 2.0).unwrap();
        assert_eq!(b.barrier_slope_lower, None);
        assert_relative_eq!(b.lower, -0.4);
    }

    #[test]
    fn tangent_dominates_secant_for_concave_powers() {
        // Worked case: beta = 1/2, r2 = 2 r1 gives 1/(2 (sqrt 2 - 1)).
        let ratio = tangent_secant_ratio(0.5, 1.0, 2.0);
        assert_relative_eq!(ratio, 0.5 / (2f64.sqrt() - 1.0), epsilon = 1e-14);
        assert!(ratio > 1.0);
        assert_relative_eq!(tangent_secant_ratio(1.0, 0.3, 0.9), 1.0, epsilon = 1e-14);
    }
}
