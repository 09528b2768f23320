//! Two equal disks at surface distance `delta`, the neck between them and the
//! barrier-circle constructions used to bound the normal field on the neck.
//!
//! All quantities live in the local frame: the gap is centred at the origin,
//! particle 1 sits below the horizontal axis and particle 2 above it, both
//! centred on the vertical axis.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("{what} = {value} is outside its admissible range {range}")]
    Domain {
        what: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("barrier circle construction is invalid at x = {x} (radicand {radicand})")]
    OutOfValidity { x: f64, radicand: f64 },
    #[error("clearance {clearance} between particles and outer boundary is below K = {required}")]
    Clearance { clearance: f64, required: f64 },
    #[error("boundary table needs at least two strictly increasing angles in [0, 2pi)")]
    BadTable,
}

fn domain<T: Scalar>(what: &'static str, value: T, range: &'static str) -> GeometryError {
    GeometryError::Domain {
        what,
        value: value.as_f64(),
        range,
    }
}

/// One of the two inclusions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Particle {
    /// Particle 1, below the gap.
    Lower,
    /// Particle 2, above the gap.
    Upper,
}

impl Particle {
    pub const BOTH: [Particle; 2] = [Particle::Lower, Particle::Upper];

    /// 1 for the lower particle, 2 for the upper one.
    pub fn label(self) -> usize {
        match self {
            Particle::Lower => 1,
            Particle::Upper => 2,
        }
    }

    fn sign<T: Scalar>(self) -> T {
        match self {
            Particle::Lower => -T::one(),
            Particle::Upper => T::one(),
        }
    }
}

/// How the vertical distance between the particle boundaries is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GapMode {
    /// Circle geometry, `2R + delta - 2 sqrt(R^2 - x^2)`.
    Exact,
    /// Leading order, `delta + x^2 / R`.
    Quadratic,
}

/// Two disks of common radius `R` whose surfaces are `delta` apart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticlePair<T> {
    radius: T,
    delta: T,
}

impl<T: Scalar> ParticlePair<T> {
    pub fn new(radius: T, delta: T) -> Result<Self, GeometryError> {
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(domain("R", radius, "(0, inf)"));
        }
        if !(delta >= T::zero()) || !delta.is_finite() {
            return Err(domain("delta", delta, "[0, inf)"));
        }
        Ok(Self { radius, delta })
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    /// Distance between the two centres, `2R + delta`.
    pub fn center_separation(&self) -> T {
        self.radius + self.radius + self.delta
    }

    pub fn center(&self, which: Particle) -> [T; 2] {
        let half = self.radius + self.delta / T::lit(2.0);
        [T::zero(), which.sign::<T>() * half]
    }

    /// Closed-disk membership.
    pub fn contains(&self, which: Particle, point: [T; 2]) -> bool {
        let c = self.center(which);
        let dx = point[0] - c[0];
        let dy = point[1] - c[1];
        dx * dx + dy * dy <= self.radius * self.radius
    }

    /// Signed distance from `point` to the boundary circle of `which`
    /// (negative inside the particle).
    pub fn signed_distance(&self, which: Particle, point: [T; 2]) -> T {
        let c = self.center(which);
        (point[0] - c[0]).hypot(point[1] - c[1]) - self.radius
    }

    /// Height of the particle boundary facing the gap at abscissa `x`:
    /// the top of particle 1 or the bottom of particle 2.
    pub fn facing_arc_height(&self, which: Particle, x: T) -> Result<T, GeometryError> {
        self.check_abscissa(x)?;
        let sag = self.radius - (self.radius * self.radius - x * x).sqrt();
        Ok(which.sign::<T>() * (self.delta / T::lit(2.0) + sag))
    }

    fn check_abscissa(&self, x: T) -> Result<(), GeometryError> {
        if !(x.abs() < self.radius) {
            return Err(domain("|x|", x.abs(), "[0, R)"));
        }
        Ok(())
    }

    /// Vertical distance between the facing arcs at abscissa `x`.
    pub fn gap_width(&self, x: T, mode: GapMode) -> Result<T, GeometryError> {
        self.check_abscissa(x)?;
        let r = self.radius;
        Ok(match mode {
            GapMode::Exact => {
                // 2(R - sqrt(R^2 - x^2)) written without cancellation.
                let root = (r * r - x * x).sqrt();
                self.delta + T::lit(2.0) * x * x / (r + root)
            }
            GapMode::Quadratic => self.delta + x * x / r,
        })
    }

    /// Radii `(r1, r2)` of the concentric barrier circles used for the upper
    /// bound: the inner circle of radius `r1` touches particle 1 from inside at
    /// abscissa `x`, the outer one reaches particle 2.
    pub fn upper_barrier_radii(&self, x: T, r1: T) -> Result<(T, T), GeometryError> {
        let r = self.radius;
        if !(r1 > T::zero() && r1 <= r) {
            return Err(domain("r1", r1, "(0, R]"));
        }
        self.check_abscissa(x)?;
        let half = T::lit(0.5);
        let q = r1 / r;
        let r2 = self.delta + r1 + half * (T::one() - q) * (T::lit(2.0) - q) * x * x / r;
        Ok((r1, r2))
    }

    /// Radii `(rho1, rho2)` of the lower-barrier construction: a circle of
    /// radius `rho1` inside particle 2 and the distance `rho2` from its centre
    /// to the point of particle 1 at abscissa `x`.
    pub fn lower_barrier_radii(&self, x: T, rho1: T) -> Result<(T, T), GeometryError> {
        let r = self.radius;
        if !(rho1 > T::zero() && rho1 < r) {
            return Err(domain("rho1", rho1, "(0, R)"));
        }
        self.check_abscissa(x)?;
        let sep = self.center_separation();
        let s = x / r;
        let ratio = (r - rho1) / sep;
        let radicand = ratio * ratio - s * s;
        if radicand < T::zero() {
            return Err(GeometryError::OutOfValidity {
                x: x.as_f64(),
                radicand: radicand.as_f64(),
            });
        }
        let rho2 = -r + sep * ((T::one() - s * s).sqrt() - radicand.sqrt());
        Ok((rho1, rho2))
    }

    /// Largest `|x|` for which [`Self::lower_barrier_radii`] is defined.
    pub fn lower_barrier_validity(&self, rho1: T) -> T {
        self.radius * (self.radius - rho1) / self.center_separation()
    }

    /// Every length multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Result<Self, GeometryError> {
        Self::new(self.radius * factor, self.delta * factor)
    }

    pub fn neck(&self, half_width: T) -> Result<NeckSpec<T>, GeometryError> {
        NeckSpec::new(*self, half_width)
    }

    /// Neck of the default half-width `R / 4`.
    pub fn default_neck(&self) -> NeckSpec<T> {
        NeckSpec {
            pair: *self,
            half_width: self.radius / T::lit(4.0),
        }
    }
}

/// Piece of the neck boundary a point lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NeckBoundary {
    /// Arc of particle 1 inside the window.
    LowerArc,
    /// Arc of particle 2 inside the window (the `s_2` of the flux estimates).
    UpperArc,
    /// Vertical side at `x = -w`.
    LateralMinus,
    /// Vertical side at `x = +w`.
    LateralPlus,
}

/// The region between the two facing arcs with `|x| <= w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeckSpec<T> {
    pair: ParticlePair<T>,
    half_width: T,
}

impl<T: Scalar> NeckSpec<T> {
    pub fn new(pair: ParticlePair<T>, half_width: T) -> Result<Self, GeometryError> {
        if !(half_width > T::zero() && half_width < pair.radius()) {
            return Err(domain("w", half_width, "(0, R)"));
        }
        Ok(Self { pair, half_width })
    }

    pub fn pair(&self) -> &ParticlePair<T> {
        &self.pair
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    pub fn contains(&self, point: [T; 2]) -> bool {
        let [x, y] = point;
        if x.abs() > self.half_width {
            return false;
        }
        // |x| <= w < R so the arc heights exist.
        let lo = self.pair.facing_arc_height(Particle::Lower, x).unwrap();
        let hi = self.pair.facing_arc_height(Particle::Upper, x).unwrap();
        lo <= y && y <= hi
    }

    /// True when `point` is on the facing arc of `which` inside the window.
    pub fn on_arc(&self, which: Particle, point: [T; 2], tol: T) -> bool {
        point[0].abs() <= self.half_width + tol
            && self.pair.signed_distance(which, point).abs() <= tol
            && (point[1] * which.sign::<T>()) > T::zero()
            && (point[1] * which.sign::<T>()) < self.pair.radius() + self.pair.delta() / T::lit(2.0)
    }

    /// Classifies a point of the neck boundary, `None` if it is not on it.
    pub fn boundary_piece(&self, point: [T; 2], tol: T) -> Option<NeckBoundary> {
        if self.on_arc(Particle::Lower, point, tol) {
            return Some(NeckBoundary::LowerArc);
        }
        if self.on_arc(Particle::Upper, point, tol) {
            return Some(NeckBoundary::UpperArc);
        }
        let [x, y] = point;
        let w = self.half_width;
        let lo = self.pair.facing_arc_height(Particle::Lower, w).ok()?;
        let hi = self.pair.facing_arc_height(Particle::Upper, w).ok()?;
        if y < lo - tol || y > hi + tol {
            return None;
        }
        if (x - w).abs() <= tol {
            Some(NeckBoundary::LateralPlus)
        } else if (x + w).abs() <= tol {
            Some(NeckBoundary::LateralMinus)
        } else {
            None
        }
    }

    /// Length of either facing arc, `2 R asin(w / R)`.
    pub fn arc_length(&self) -> T {
        let r = self.pair.radius();
        T::lit(2.0) * r * (self.half_width / r).asin()
    }

    /// Length of each lateral side (the exact gap at `x = w`).
    pub fn lateral_length(&self) -> T {
        self.pair
            .gap_width(self.half_width, GapMode::Exact)
            .unwrap()
    }
}

/// Potential applied on the outer boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    rename_all = "kebab-case",
    bound(deserialize = "T: Deserialize<'de> + num_traits::One")
)]
pub enum BoundaryDatum<T> {
    Constant {
        value: T,
    },
    /// `U = slope * y`.
    LinearY {
        slope: T,
    },
    /// `U = xx x^2 + xy x y + yy y^2 + linear y`; `linear` defaults to 1.
    Quadratic {
        xx: T,
        xy: T,
        yy: T,
        #[serde(default = "unit")]
        linear: T,
    },
    /// Values at polar angles, interpolated linearly and periodically.
    Table {
        angles: Vec<T>,
        values: Vec<T>,
    },
}

fn unit<T: num_traits::One>() -> T {
    T::one()
}

impl<T: Scalar> Default for BoundaryDatum<T> {
    fn default() -> Self {
        BoundaryDatum::LinearY { slope: T::one() }
    }
}

impl<T: Scalar> BoundaryDatum<T> {
    pub fn validate(&self) -> Result<(), GeometryError> {
        if let BoundaryDatum::Table { angles, values } = self {
            let two_pi = T::PI() + T::PI();
            let increasing = angles.windows(2).all(|w| w[0] < w[1]);
            if angles.len() < 2
                || angles.len() != values.len()
                || !increasing
                || angles[0] < T::zero()
                || *angles.last().unwrap() >= two_pi
            {
                return Err(GeometryError::BadTable);
            }
        }
        Ok(())
    }

    pub fn eval(&self, point: [T; 2]) -> T {
        let [x, y] = point;
        match self {
            BoundaryDatum::Constant { value } => *value,
            BoundaryDatum::LinearY { slope } => *slope * y,
            BoundaryDatum::Quadratic { xx, xy, yy, linear } => {
                *xx * x * x + *xy * x * y + *yy * y * y + *linear * y
            }
            BoundaryDatum::Table { angles, values } => {
                let two_pi = T::PI() + T::PI();
                let mut theta = y.atan2(x);
                if theta < T::zero() {
                    theta += two_pi;
                }
                let n = angles.len();
                let k = angles.partition_point(|a| *a <= theta);
                let (a0, v0, a1, v1) = if k == 0 {
                    (angles[n - 1] - two_pi, values[n - 1], angles[0], values[0])
                } else if k == n {
                    (angles[n - 1], values[n - 1], angles[0] + two_pi, values[0])
                } else {
                    (angles[k - 1], values[k - 1], angles[k], values[k])
                };
                v0 + (v1 - v0) * (theta - a0) / (a1 - a0)
            }
        }
    }

    /// The datum `-U`.
    pub fn negated(&self) -> Self {
        match self {
            BoundaryDatum::Constant { value } => BoundaryDatum::Constant { value: -*value },
            BoundaryDatum::LinearY { slope } => BoundaryDatum::LinearY { slope: -*slope },
            BoundaryDatum::Quadratic { xx, xy, yy, linear } => BoundaryDatum::Quadratic {
                xx: -*xx,
                xy: -*xy,
                yy: -*yy,
                linear: -*linear,
            },
            BoundaryDatum::Table { angles, values } => BoundaryDatum::Table {
                angles: angles.clone(),
                values: values.iter().map(|v| -*v).collect(),
            },
        }
    }
}

/// Outer disk of radius `outer_radius` centred at the gap, the particle pair
/// and the applied potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Deserialize<'de> + num_traits::One"))]
pub struct DomainSpec<T> {
    pub outer_radius: T,
    pub pair: ParticlePair<T>,
    /// Required distance `K` between the particles and the outer boundary.
    pub clearance: T,
    pub datum: BoundaryDatum<T>,
}

impl<T: Scalar> DomainSpec<T> {
    pub fn new(
        outer_radius: T,
        pair: ParticlePair<T>,
        clearance: T,
        datum: BoundaryDatum<T>,
    ) -> Result<Self, GeometryError> {
        let spec = Self {
            outer_radius,
            pair,
            clearance,
            datum,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        self.datum.validate()?;
        if !(self.clearance >= T::zero()) {
            return Err(domain("K", self.clearance, "[0, inf)"));
        }
        let actual = self.actual_clearance();
        if !(actual >= self.clearance) || actual <= T::zero() {
            return Err(GeometryError::Clearance {
                clearance: actual.as_f64(),
                required: self.clearance.as_f64(),
            });
        }
        Ok(())
    }

    /// Distance between the outer circle and the farthest particle point.
    pub fn actual_clearance(&self) -> T {
        let r = self.pair.radius();
        self.outer_radius - (r + r + self.pair.delta() / T::lit(2.0))
    }

    /// Same outer boundary and datum, new gap.
    pub fn with_delta(&self, delta: T) -> Result<Self, GeometryError> {
        let pair = ParticlePair::new(self.pair.radius(), delta)?;
        Self::new(self.outer_radius, pair, self.clearance, self.datum.clone())
    }

    pub fn contains(&self, point: [T; 2]) -> bool {
        point[0].hypot(point[1]) <= self.outer_radius
            && !self.pair.contains(Particle::Lower, point)
            && !self.pair.contains(Particle::Upper, point)
    }

    /// Range `(min U, max U)` of the datum on the outer circle, sampled.
    pub fn datum_range(&self) -> (T, T) {
        let n = 2048;
        let two_pi = T::PI() + T::PI();
        (0..n)
            .map(|k| {
                let a = two_pi * T::lit(k as f64) / T::lit(n as f64);
                self.datum
                    .eval([self.outer_radius * a.cos(), self.outer_radius * a.sin()])
            })
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            })
    }
}
