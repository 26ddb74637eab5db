use super::ExperimentError;
use crate::analytic::{min_error_prob, ChannelParams};

const RELATIVE_TOLERANCE: f64 = 1e-4;
const MAX_STEPS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub diffusion_coefficient: f64,
    pub target_pe: f64,
    /// Best CSK error probability at the recovered `D`.
    pub achieved_pe: f64,
    pub threshold: f64,
}

fn csk_min_pe(base: &ChannelParams, diffusion: f64, grid: &[f64]) -> Result<(f64, f64), ExperimentError> {
    let geometry = base
        .geometry
        .with_diffusion_coefficient(diffusion)
        .map_err(|e| ExperimentError::Calibration(e.to_string()))?;
    let best = min_error_prob(&base.with_beta(0.0).with_geometry(geometry), grid)?;
    Ok((best.value, best.threshold))
}

/// Find `D` such that the best plain-CSK error probability over `grid` equals
/// `target_pe` to a relative tolerance of `1e-4`.
///
/// The diffusion coefficient stored in `base` is ignored. A bracket is found by
/// doubling or halving from `d^2 / (6 Ts)`, then refined by bisection on
/// `log D`. Faster diffusion delivers more of each emission inside its own
/// slot, so the error probability falls as `D` grows.
pub fn calibrate_diffusion(target_pe: f64, base: &ChannelParams, grid: &[f64]) -> Result<Calibration, ExperimentError> {
    if !(target_pe > 0.0 && target_pe < 0.5) {
        return Err(ExperimentError::config(format!("target error probability {target_pe} outside (0, 0.5)")));
    }
    base.validate()?;
    let pe_at = |d: f64| csk_min_pe(base, d, grid);
    let accept = |pe: f64| (pe - target_pe).abs() <= RELATIVE_TOLERANCE * target_pe;
    let done = |d: f64, (pe, threshold): (f64, f64)| Calibration {
        diffusion_coefficient: d,
        target_pe,
        achieved_pe: pe,
        threshold,
    };

    let distance = base.geometry.distance();
    let start = distance * distance / (6.0 * base.slot_duration);
    let first = pe_at(start)?;
    if accept(first.0) {
        return Ok(done(start, first));
    }
    // lo has error above the target, hi below
    let (mut lo, mut hi) = (start, start);
    let grow = first.0 > target_pe;
    let mut bracketed = false;
    for _ in 0..MAX_STEPS {
        let probe = if grow { hi * 2.0 } else { lo * 0.5 };
        let r = pe_at(probe)?;
        if accept(r.0) {
            return Ok(done(probe, r));
        }
        if grow {
            lo = hi;
            hi = probe;
            if r.0 < target_pe {
                bracketed = true;
                break;
            }
        } else {
            hi = lo;
            lo = probe;
            if r.0 > target_pe {
                bracketed = true;
                break;
            }
        }
    }
    if !bracketed {
        return Err(ExperimentError::Calibration(format!(
            "no diffusion coefficient reaches error probability {target_pe}; searched down to {lo:e} and up to {hi:e}"
        )));
    }

    for _ in 0..MAX_STEPS {
        let mid = (lo * hi).sqrt();
        let r = pe_at(mid)?;
        if accept(r.0) {
            return Ok(done(mid, r));
        }
        if r.0 > target_pe {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-15 {
            break;
        }
    }
    Err(ExperimentError::Calibration(format!(
        "bisection stalled between {lo:e} and {hi:e} without reaching error probability {target_pe}"
    )))
}
