//! Diffusion constants and first-passage-time statistics.
//!
//! A molecule released at the transmitter reaches the receiver after a random
//! first-passage time `T` with density
//!
//! ```text
//! f(t) = d / sqrt(4 pi D t^3) * exp(-d^2 / (4 D t)),   t > 0
//! ```
//!
//! and `f(0) = 0`. Its distribution function has the closed form
//! `P(T <= t) = erfc(d / sqrt(4 D t))`, which is what [`hit_probability`]
//! evaluates. The law depends on `d` and `D` only through `d^2 / D`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

/// Boltzmann constant in J/K, at the precision used by the channel model.
pub const BOLTZMANN: f64 = 1.38e-23;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("{name} must be strictly positive and finite, got {value}")]
    NotPositive { name: &'static str, value: f64 },
    #[error("time must be non-negative and finite, got {0}")]
    NegativeTime(f64),
    #[error("interval start {start} exceeds end {end}")]
    ReversedInterval { start: f64, end: f64 },
}

fn positive(name: &'static str, value: f64) -> Result<f64, DomainError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(DomainError::NotPositive { name, value })
    }
}

/// Physical properties of the fluid and the messenger molecules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumParams {
    /// Kelvin.
    pub temperature: f64,
    /// Pascal-seconds.
    pub viscosity: f64,
    /// Meters.
    pub molecule_radius: f64,
}

/// Einstein relation `D = k_B T / (6 pi eta r)`, in m^2/s.
pub fn einstein_diffusion(medium: &MediumParams) -> Result<f64, DomainError> {
    let t = positive("temperature", medium.temperature)?;
    let eta = positive("viscosity", medium.viscosity)?;
    let r = positive("molecule_radius", medium.molecule_radius)?;
    Ok(BOLTZMANN * t / (6.0 * PI * eta * r))
}

/// Transmitter-receiver distance together with the diffusion coefficient.
///
/// Both values are validated on construction, so every function taking a
/// `LinkGeometry` can assume they are positive and finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    distance: f64,
    diffusion_coefficient: f64,
}

impl LinkGeometry {
    pub fn new(distance: f64, diffusion_coefficient: f64) -> Result<Self, DomainError> {
        Ok(Self {
            distance: positive("distance", distance)?,
            diffusion_coefficient: positive("diffusion_coefficient", diffusion_coefficient)?,
        })
    }

    /// Meters.
    pub fn distance(&self) -> f64 {
        self.distance
    }

    /// m^2/s.
    pub fn diffusion_coefficient(&self) -> f64 {
        self.diffusion_coefficient
    }

    pub fn with_distance(&self, distance: f64) -> Result<Self, DomainError> {
        Self::new(distance, self.diffusion_coefficient)
    }

    pub fn with_diffusion_coefficient(&self, diffusion_coefficient: f64) -> Result<Self, DomainError> {
        Self::new(self.distance, diffusion_coefficient)
    }

    /// Time at which the first-passage density peaks, `d^2 / (6 D)`.
    pub fn peak_time(&self) -> f64 {
        self.distance * self.distance / (6.0 * self.diffusion_coefficient)
    }
}

/// Upper end of a time interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeBound {
    Finite(f64),
    Unbounded,
}

impl From<f64> for TimeBound {
    fn from(t: f64) -> Self {
        if t == f64::INFINITY {
            TimeBound::Unbounded
        } else {
            TimeBound::Finite(t)
        }
    }
}

fn check_time(t: f64) -> Result<f64, DomainError> {
    if t >= 0.0 && t.is_finite() {
        Ok(t)
    } else {
        Err(DomainError::NegativeTime(t))
    }
}

/// First-passage-time density at `t` seconds.
pub fn fpt_density(t: f64, geo: &LinkGeometry) -> Result<f64, DomainError> {
    let t = check_time(t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let d = geo.distance;
    let dc = geo.diffusion_coefficient;
    Ok(d / (4.0 * PI * dc * t * t * t).sqrt() * (-d * d / (4.0 * dc * t)).exp())
}

/// `P(T <= t)`. Zero at `t = 0`, one for an unbounded horizon.
pub fn arrival_cdf(t: TimeBound, geo: &LinkGeometry) -> Result<f64, DomainError> {
    match t {
        TimeBound::Unbounded => Ok(1.0),
        TimeBound::Finite(t) => {
            let t = check_time(t)?;
            if t == 0.0 {
                Ok(0.0)
            } else {
                Ok(libm::erfc(geo.distance / (4.0 * geo.diffusion_coefficient * t).sqrt()))
            }
        }
    }
}

/// Probability that a molecule arrives in `[t0, t1]`.
///
/// ```
/// use csklab::physics::{hit_probability, LinkGeometry, TimeBound};
///
/// let geo = LinkGeometry::new(32e-6, 8e-11).unwrap();
/// let first = hit_probability(0.0, 5.9, &geo).unwrap();
/// let second = hit_probability(5.9, 11.8, &geo).unwrap();
/// let both = hit_probability(0.0, 11.8, &geo).unwrap();
/// assert!((first + second - both).abs() < 1e-12);
/// assert_eq!(hit_probability(0.0, TimeBound::Unbounded, &geo).unwrap(), 1.0);
/// ```
pub fn hit_probability(
    t0: f64,
    t1: impl Into<TimeBound>,
    geo: &LinkGeometry,
) -> Result<f64, DomainError> {
    let t0 = check_time(t0)?;
    let t1 = t1.into();
    if let TimeBound::Finite(end) = t1 {
        check_time(end)?;
        if t0 > end {
            return Err(DomainError::ReversedInterval { start: t0, end });
        }
    }
    let p = arrival_cdf(t1, geo)? - arrival_cdf(TimeBound::Finite(t0), geo)?;
    Ok(p.clamp(0.0, 1.0))
}

/// Sampler for the first-passage time.
///
/// If `Z` is standard normal then `d^2 / (2 D Z^2)` has distribution function
/// `P(|Z| >= d / sqrt(2 D t)) = erfc(d / sqrt(4 D t))`, the law above.
#[derive(Debug, Clone, Copy)]
pub struct FirstPassageTime {
    scale: f64,
}

impl FirstPassageTime {
    pub fn new(geo: &LinkGeometry) -> Self {
        Self {
            scale: geo.distance * geo.distance / (2.0 * geo.diffusion_coefficient),
        }
    }
}

impl Distribution<f64> for FirstPassageTime {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let z: f64 = rng.sample(StandardNormal);
            // z == 0 would give an infinite time
            if z != 0.0 {
                return self.scale / (z * z);
            }
        }
    }
}

/// Draw one first-passage time in seconds.
pub fn sample_hit_time<R: Rng + ?Sized>(geo: &LinkGeometry, rng: &mut R) -> f64 {
    FirstPassageTime::new(geo).sample(rng)
}
