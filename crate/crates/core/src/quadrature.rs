//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Intervals are kept in a work list and the one with the largest error
//! estimate is bisected until the summed estimate meets the tolerance or
//! the evaluation budget runs out. Non-convergence is an error that carries
//! the achieved estimate; results are never silently truncated.

use crate::error::{QiError, Result};

// Tables keep their published digits; the compiler rounds them to f64.
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

// 7-point Gauss weights at XGK[1], XGK[3], XGK[5], XGK[7].
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Tolerances and budget for the adaptive integrator and for tail truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum number of integrand evaluations per integral.
    pub max_evals: usize,
    /// Bound on the contribution of any truncated tail.
    pub tail_tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-14,
            rel_tol: 1e-11,
            max_evals: 400_000,
            tail_tol: 1e-10,
        }
    }
}

impl QuadratureConfig {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_max_evals(mut self, max_evals: usize) -> Self {
        self.max_evals = max_evals;
        self
    }

    fn tolerance(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// Value of a definite integral together with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

impl std::ops::Add for Integral {
    type Output = Integral;

    fn add(self, other: Integral) -> Integral {
        Integral {
            value: self.value + other.value,
            error: self.error + other.error,
            evaluations: self.evaluations + other.evaluations,
        }
    }
}

impl Integral {
    pub const ZERO: Integral = Integral {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
    };

    pub fn scale(self, factor: f64) -> Integral {
        Integral {
            value: self.value * factor,
            error: self.error * factor.abs(),
            evaluations: self.evaluations,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut gauss = fc * WG[3];
    let mut kron = fc * WGK[7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kron * half,
        error: ((kron - gauss) * half).abs(),
    }
}

/// Integrates `f` over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<Integral> {
    integrate_pieces(f, &[a, b], cfg)
}

/// Integrates `f` over consecutive intervals given by `breaks` (ascending).
///
/// Breakpoints seed the work list, which helps with kinks and with
/// oscillatory integrands split at half periods.
pub fn integrate_pieces<F: FnMut(f64) -> f64>(mut f: F, breaks: &[f64], cfg: &QuadratureConfig) -> Result<Integral> {
    if breaks.len() < 2 {
        return Ok(Integral::ZERO);
    }
    let mut segments: Vec<Segment> = breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| kronrod(&mut f, w[0], w[1]))
        .collect();
    let mut evaluations = 15 * segments.len();
    loop {
        let value: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        let tolerance = cfg.tolerance(value);
        if error <= tolerance {
            return Ok(Integral {
                value,
                error,
                evaluations,
            });
        }
        if evaluations + 30 > cfg.max_evals {
            return Err(QiError::NotConverged {
                value,
                achieved_error: error,
                tolerance,
                evaluations,
            });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("non-empty work list");
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // Interval collapsed to machine resolution; accept what we have.
            segments.push(Segment { error: 0.0, ..seg });
            continue;
        }
        segments.push(kronrod(&mut f, seg.a, mid));
        segments.push(kronrod(&mut f, mid, seg.b));
        evaluations += 30;
    }
}

/// Breakpoints splitting `[a, b]` into pieces no longer than `max_len`.
pub fn split_points(a: f64, b: f64, max_len: f64) -> Vec<f64> {
    let pieces = if max_len.is_finite() && max_len > 0.0 {
        ((b - a) / max_len).ceil().clamp(1.0, 1.0e5) as usize
    } else {
        1
    };
    let step = (b - a) / pieces as f64;
    (0..=pieces)
        .map(|i| if i == pieces { b } else { a + step * i as f64 })
        .collect()
}

/// Sum of an alternating series from its terms, accelerated by repeated
/// averaging of partial sums (Euler transform).
///
/// Returns the accelerated sum and the change produced by the last term,
/// which serves as the error estimate.
pub fn alternating_sum(terms: &[f64]) -> (f64, f64) {
    if terms.is_empty() {
        return (0.0, 0.0);
    }
    let mut partial: Vec<f64> = terms
        .iter()
        .scan(0.0, |acc, t| {
            *acc += t;
            Some(*acc)
        })
        .collect();
    let mut previous = *partial.last().unwrap_or(&0.0);
    while partial.len() > 1 {
        previous = partial[partial.len() - 1];
        partial = partial.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    }
    let sum = partial[0];
    (sum, (sum - previous).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let cfg = QuadratureConfig::default();
        let r = integrate(|x| 3.0 * x * x - x + 2.0, -1.0, 2.0, &cfg).unwrap();
        assert!((r.value - (8.0 + 1.0 - 1.5 + 6.0)).abs() < 1e-13);
    }

    #[test]
    fn smooth_transcendental() {
        let cfg = QuadratureConfig::default();
        let r = integrate(f64::sin, 0.0, PI, &cfg).unwrap();
        assert!((r.value - 2.0).abs() < 1e-13);
        let r = integrate(|x| (-x * x).exp(), -8.0, 8.0, &cfg).unwrap();
        assert!((r.value - PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn endpoint_singularity_converges() {
        let cfg = QuadratureConfig::default();
        let r = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, &cfg).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn budget_exhaustion_reports_estimate() {
        let cfg = QuadratureConfig::default().with_max_evals(60);
        let err = integrate(|x: f64| (200.0 * x).sin().abs(), 0.0, 10.0, &cfg).unwrap_err();
        match err {
            QiError::NotConverged {
                value,
                achieved_error,
                evaluations,
                ..
            } => {
                assert!(value.is_finite());
                assert!(achieved_error > 0.0);
                assert!(evaluations <= 60);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pieces_match_single_interval() {
        let cfg = QuadratureConfig::default();
        let whole = integrate(|x: f64| (x * 7.0).cos(), 0.0, 3.0, &cfg).unwrap();
        let split = integrate_pieces(|x: f64| (x * 7.0).cos(), &split_points(0.0, 3.0, 0.4), &cfg).unwrap();
        assert!((whole.value - split.value).abs() < 1e-13);
        assert!((split.value - (21.0f64).sin() / 7.0).abs() < 1e-13);
    }

    #[test]
    fn alternating_series_acceleration() {
        // ln 2 = 1 - 1/2 + 1/3 - ...
        let terms: Vec<f64> = (1..30)
            .map(|k| if k % 2 == 1 { 1.0 / k as f64 } else { -1.0 / k as f64 })
            .collect();
        let (sum, err) = alternating_sum(&terms);
        assert!((sum - 2f64.ln()).abs() < 1e-9, "{sum}");
        assert!(err < 1e-6);
    }
}
