//! Closed-form model of a binary CSK / Zebra-CSK link with one slot of
//! inter-symbol interference.
//!
//! The receiver counts molecules at the end of each slot and decodes `1` when
//! the count reaches the threshold `lambda`. Counts are approximated by
//! Gaussians:
//!
//! * `N_c ~ N(n p_c, n p_c (1 - p_c))` for molecules of the current emission,
//! * `N_p ~ N(n (p_cp - p_c), n p_cp (1 - p_cp) + n p_c (1 - p_c))` for the
//!   interference left over from the previous emission,
//!
//! where `p_c` is the probability of arriving within the slot and `p_cp` adds
//! the second-slot arrivals that survive inhibition with probability `1 - beta`.
//! The joint table `P(S, R)` then follows by conditioning on the previous
//! symbol.

use thiserror::Error;

use crate::physics::{hit_probability, DomainError, LinkGeometry};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("invalid channel parameter: {0}")]
    InvalidParams(String),
    #[error("threshold grid is empty")]
    EmptyGrid,
    #[error("count distribution is degenerate (zero variance)")]
    Degenerate,
}

/// One link configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Molecules released for symbol `1`.
    pub molecules: u32,
    pub geometry: LinkGeometry,
    /// Seconds.
    pub slot_duration: f64,
    /// Probability that an interfering molecule is destroyed by an inhibitor.
    pub inhibition_efficiency: f64,
    /// Prior probability of symbol `1`.
    pub prior_one: f64,
}

impl ChannelParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.molecules == 0 {
            return Err(ModelError::InvalidParams("molecule count must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.inhibition_efficiency) {
            return Err(ModelError::InvalidParams(format!(
                "inhibition efficiency {} outside [0, 1]",
                self.inhibition_efficiency
            )));
        }
        if !(self.prior_one > 0.0 && self.prior_one < 1.0) {
            return Err(ModelError::InvalidParams(format!(
                "prior {} outside (0, 1)",
                self.prior_one
            )));
        }
        if !(self.slot_duration > 0.0 && self.slot_duration.is_finite()) {
            return Err(ModelError::InvalidParams(format!(
                "slot duration {} must be positive",
                self.slot_duration
            )));
        }
        Ok(())
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        Self {
            inhibition_efficiency: beta,
            ..*self
        }
    }

    pub fn with_geometry(&self, geometry: LinkGeometry) -> Self {
        Self { geometry, ..*self }
    }

    fn n(&self) -> f64 {
        f64::from(self.molecules)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotProbabilities {
    /// Arrival within the emission slot.
    pub p_c: f64,
    /// `p_c` plus surviving arrivals during the following slot.
    pub p_cp: f64,
}

pub fn slot_probs(params: &ChannelParams) -> Result<SlotProbabilities, ModelError> {
    params.validate()?;
    let ts = params.slot_duration;
    let p_c = hit_probability(0.0, ts, &params.geometry)?;
    let late = hit_probability(ts, 2.0 * ts, &params.geometry)?;
    let p_cp = p_c + (1.0 - params.inhibition_efficiency) * late;
    Ok(SlotProbabilities {
        p_c,
        p_cp: p_cp.min(1.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianApprox {
    pub mean: f64,
    pub variance: f64,
}

impl GaussianApprox {
    /// `P(X >= x)`. Zero-variance laws collapse to a step at the mean, with
    /// value 0.5 exactly at the mean.
    pub fn tail_at(&self, x: f64) -> f64 {
        if self.variance > 0.0 {
            gaussian_tail((x - self.mean) / self.variance.sqrt())
        } else if x > self.mean {
            0.0
        } else if x < self.mean {
            1.0
        } else {
            0.5
        }
    }
}

/// Law of the in-slot count `N_c`.
pub fn current_count_dist(params: &ChannelParams) -> Result<GaussianApprox, ModelError> {
    let p = slot_probs(params)?;
    let n = params.n();
    Ok(GaussianApprox {
        mean: n * p.p_c,
        variance: n * p.p_c * (1.0 - p.p_c),
    })
}

/// Law of the interference count `N_p`, the difference of the two-slot and
/// one-slot count laws treated as independent.
pub fn isi_count_dist(params: &ChannelParams) -> Result<GaussianApprox, ModelError> {
    let p = slot_probs(params)?;
    Ok(isi_from(params.n(), &p))
}

fn isi_from(n: f64, p: &SlotProbabilities) -> GaussianApprox {
    GaussianApprox {
        mean: n * (p.p_cp - p.p_c),
        variance: n * p.p_cp * (1.0 - p.p_cp) + n * p.p_c * (1.0 - p.p_c),
    }
}

/// Law of `N_c + N_p` when both the current and previous symbol are `1`.
fn combined_from(n: f64, p: &SlotProbabilities) -> GaussianApprox {
    GaussianApprox {
        mean: n * p.p_cp,
        variance: n * p.p_cp * (1.0 - p.p_cp) + 2.0 * n * p.p_c * (1.0 - p.p_c),
    }
}

/// Standard normal upper tail `Q(x) = 1 - Phi(x)`.
pub fn gaussian_tail(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Standardised thresholds feeding `Q(.)` in the joint table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdStatistics {
    /// Interference only (`S = 0`, `S_-1 = 1`).
    pub a1: f64,
    /// Current emission only (`S = 1`, `S_-1 = 0`).
    pub a2: f64,
    /// Both (`S = 1`, `S_-1 = 1`).
    pub a3: f64,
}

struct CountLaws {
    isi: GaussianApprox,
    current: GaussianApprox,
    combined: GaussianApprox,
}

fn count_laws(params: &ChannelParams) -> Result<CountLaws, ModelError> {
    let p = slot_probs(params)?;
    let n = params.n();
    Ok(CountLaws {
        isi: isi_from(n, &p),
        current: GaussianApprox {
            mean: n * p.p_c,
            variance: n * p.p_c * (1.0 - p.p_c),
        },
        combined: combined_from(n, &p),
    })
}

/// Returns [`ModelError::Degenerate`] when any of the three laws has zero
/// variance; [`joint_distribution`] handles that case with step semantics.
pub fn threshold_stats(params: &ChannelParams, lambda: f64) -> Result<ThresholdStatistics, ModelError> {
    let laws = count_laws(params)?;
    let standardise = |g: &GaussianApprox| {
        if g.variance > 0.0 {
            Ok((lambda - g.mean) / g.variance.sqrt())
        } else {
            Err(ModelError::Degenerate)
        }
    };
    Ok(ThresholdStatistics {
        a1: standardise(&laws.isi)?,
        a2: standardise(&laws.current)?,
        a3: standardise(&laws.combined)?,
    })
}

/// `P(S, R)` for transmitted `S` and decoded `R`; `pXY` means `S = X, R = Y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointDistribution {
    pub p00: f64,
    pub p01: f64,
    pub p10: f64,
    pub p11: f64,
}

impl JointDistribution {
    pub fn total(&self) -> f64 {
        self.p00 + self.p01 + self.p10 + self.p11
    }

    pub fn error_probability(&self) -> f64 {
        self.p01 + self.p10
    }

    pub fn correct_probability(&self) -> f64 {
        self.p00 + self.p11
    }

    /// `[P(S = 0), P(S = 1)]`.
    pub fn sent_marginal(&self) -> [f64; 2] {
        [self.p00 + self.p01, self.p10 + self.p11]
    }

    /// `[P(R = 0), P(R = 1)]`.
    pub fn received_marginal(&self) -> [f64; 2] {
        [self.p00 + self.p10, self.p01 + self.p11]
    }

    pub fn cells(&self) -> [[f64; 2]; 2] {
        [[self.p00, self.p01], [self.p10, self.p11]]
    }

    /// Normalised empirical table from counts indexed `[sent][received]`.
    pub fn from_counts(counts: &[[u64; 2]; 2]) -> Option<Self> {
        let total: u64 = counts.iter().flatten().sum();
        if total == 0 {
            return None;
        }
        let t = total as f64;
        Some(Self {
            p00: counts[0][0] as f64 / t,
            p01: counts[0][1] as f64 / t,
            p10: counts[1][0] as f64 / t,
            p11: counts[1][1] as f64 / t,
        })
    }
}

pub fn joint_distribution(params: &ChannelParams, lambda: f64) -> Result<JointDistribution, ModelError> {
    let laws = count_laws(params)?;
    let q = params.prior_one;
    let q1 = 1.0 - q;
    let tail_isi = laws.isi.tail_at(lambda);
    let tail_cur = laws.current.tail_at(lambda);
    let tail_both = laws.combined.tail_at(lambda);
    Ok(JointDistribution {
        p00: q1 * q1 + q * q1 * (1.0 - tail_isi),
        p01: q * q1 * tail_isi,
        p10: q * q1 * (1.0 - tail_cur) + q * q * (1.0 - tail_both),
        p11: q * q1 * tail_cur + q * q * tail_both,
    })
}

pub fn symbol_error_prob(params: &ChannelParams, lambda: f64) -> Result<f64, ModelError> {
    Ok(joint_distribution(params, lambda)?.error_probability())
}

const NEGLIGIBLE: f64 = 1e-300;

/// `I(S; R)` in bits, with `0 log 0 = 0`.
///
/// ```
/// use csklab::analytic::{mutual_information, JointDistribution};
///
/// let noiseless = JointDistribution { p00: 0.5, p01: 0.0, p10: 0.0, p11: 0.5 };
/// assert!((mutual_information(&noiseless) - 1.0).abs() < 1e-12);
/// ```
pub fn mutual_information(joint: &JointDistribution) -> f64 {
    let sent = joint.sent_marginal();
    let received = joint.received_marginal();
    let mut bits = 0.0;
    for (s, row) in joint.cells().iter().enumerate() {
        for (r, &p) in row.iter().enumerate() {
            let independent = sent[s] * received[r];
            if p > NEGLIGIBLE && independent > NEGLIGIBLE {
                bits += p * (p / independent).log2();
            }
        }
    }
    bits.max(0.0)
}

/// Best value over a threshold grid together with the threshold achieving it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptimum {
    pub value: f64,
    pub threshold: f64,
}

fn optimise<F>(grid: &[f64], eval: F, better: fn(f64, f64) -> bool) -> Result<GridOptimum, ModelError>
where
    F: Fn(f64) -> Result<f64, ModelError>,
{
    let mut best: Option<GridOptimum> = None;
    for &lambda in grid {
        let value = eval(lambda)?;
        best = match best {
            None => Some(GridOptimum { value, threshold: lambda }),
            Some(b) if better(value, b.value) || (value == b.value && lambda < b.threshold) => {
                Some(GridOptimum { value, threshold: lambda })
            }
            keep => keep,
        };
    }
    best.ok_or(ModelError::EmptyGrid)
}

/// Maximum mutual information over `grid`; ties go to the smallest threshold.
pub fn capacity(params: &ChannelParams, grid: &[f64]) -> Result<GridOptimum, ModelError> {
    optimise(
        grid,
        |lambda| Ok(mutual_information(&joint_distribution(params, lambda)?)),
        |a, b| a > b,
    )
}

/// Minimum symbol-error probability over `grid`; ties go to the smallest threshold.
pub fn min_error_prob(params: &ChannelParams, grid: &[f64]) -> Result<GridOptimum, ModelError> {
    optimise(grid, |lambda| symbol_error_prob(params, lambda), |a, b| a < b)
}

/// Integer thresholds `0, 1, ..., 2n`.
pub fn default_threshold_grid(molecules: u32) -> Vec<f64> {
    (0..=2 * molecules).map(f64::from).collect()
}
