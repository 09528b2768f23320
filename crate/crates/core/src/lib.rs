//! Field concentration between two nearly touching, perfectly conducting
//! disks in a p-Laplace medium.
//!
//! The analytic side (`geometry`, `radial`, `quadrature`, `asymptotics`) is
//! generic over the [`scalar::Scalar`] float type. The finite element side
//! (`mesh`, `solver`, `flux`, `sweep`) works in `f64`. The aliases below name
//! the common instantiations.

// Negated comparisons are how parameter checks reject NaN along with
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod scalar;

pub mod geometry;
pub mod quadrature;
pub mod radial;

pub mod asymptotics;

pub mod flux;
pub mod mesh;
pub mod solver;
pub mod sweep;

pub type ParticlePairF64 = geometry::ParticlePair<f64>;
pub type ParticlePairF32 = geometry::ParticlePair<f32>;
pub type NeckSpecF64 = geometry::NeckSpec<f64>;
pub type DomainSpecF64 = geometry::DomainSpec<f64>;
pub type BoundaryDatumF64 = geometry::BoundaryDatum<f64>;
pub type RadialProfileF64 = radial::RadialProfile<f64>;
pub type RadialProfileF32 = radial::RadialProfile<f32>;
pub type FluxBoundF64 = radial::FluxBound<f64>;
pub type AsymptoticPredictionF64 = asymptotics::AsymptoticPrediction<f64>;
pub type ConstantEstimateF64 = asymptotics::ConstantEstimate<f64>;
