//! Globally adaptive Gauss-Kronrod (7/15 point) quadrature.
//!
//! The closed-form interval probabilities in [`crate::physics`] are checked
//! against this integrator. Model code never calls it.

use std::collections::BinaryHeap;

use thiserror::Error;

const MAX_INTERVALS: usize = 20_000;

// Nodes and weights as tabulated (QUADPACK), kept at full published precision.

// Kronrod abscissae on [-1, 1], descending; odd indices are the Gauss nodes.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for XGK[1], XGK[3], XGK[5] and the centre.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("no convergence after {intervals} subintervals: value {value}, error estimate {error}")]
    NotConverged {
        value: f64,
        error: f64,
        intervals: usize,
    },
    #[error("integrand returned a non-finite value at {0}")]
    NonFinite(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
    pub intervals: usize,
}

#[derive(Debug)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Segment, QuadratureError> {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |x: f64| {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(QuadratureError::NonFinite(x))
        }
    };
    let fc = eval(centre)?;
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for (i, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let sum = eval(centre - half * x)? + eval(centre + half * x)?;
        k += w * sum;
        if i % 2 == 1 {
            g += WG[i / 2] * sum;
        }
    }
    Ok(Segment {
        a,
        b,
        value: k * half,
        error: ((k - g) * half).abs(),
    })
}

/// Integrate `f` over the finite interval `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<Integral, QuadratureError> {
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error_estimate: 0.0,
            intervals: 0,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut heap = BinaryHeap::new();
    heap.push(kronrod(&f, lo, hi)?);
    loop {
        let error: f64 = heap.iter().map(|s| s.error).sum();
        if error <= tol || heap.len() >= MAX_INTERVALS {
            let value: f64 = heap.iter().map(|s| s.value).sum();
            if error <= tol {
                return Ok(Integral {
                    value: sign * value,
                    error_estimate: error,
                    intervals: heap.len(),
                });
            }
            return Err(QuadratureError::NotConverged {
                value: sign * value,
                error,
                intervals: heap.len(),
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval is at machine resolution; keep its estimate
            heap.push(Segment { error: 0.0, ..worst });
            continue;
        }
        heap.push(kronrod(&f, worst.a, mid)?);
        heap.push(kronrod(&f, mid, worst.b)?);
    }
}

/// Integrate `f` over `[a, inf)`.
///
/// The tail is mapped onto `(0, 1]` with `t = p / s^2`, which keeps integrands
/// decaying like `t^(-3/2)` bounded. For `a = 0` the range `[0, 1]` is handled
/// directly and the substitution starts at `p = 1`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, tol: f64) -> Result<Integral, QuadratureError> {
    let (head, pivot) = if a > 0.0 {
        (
            Integral {
                value: 0.0,
                error_estimate: 0.0,
                intervals: 0,
            },
            a,
        )
    } else {
        (integrate(&f, a, 1.0, 0.5 * tol)?, 1.0)
    };
    let tail = integrate(
        |s: f64| {
            if s == 0.0 {
                0.0
            } else {
                f(pivot / (s * s)) * 2.0 * pivot / (s * s * s)
            }
        },
        0.0,
        1.0,
        0.5 * tol,
    )?;
    Ok(Integral {
        value: head.value + tail.value,
        error_estimate: head.error_estimate + tail.error_estimate,
        intervals: head.intervals + tail.intervals,
    })
}
