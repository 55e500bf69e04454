//! Below-threshold optical parametric amplifier observed by balanced homodyne
//! detection.
//!
//! `x` is the pump ratio `P/P_th`, `beta` the optical efficiency, `w` the
//! sideband frequency in units of the cavity half-width `γ`, and `theta` the
//! local-oscillator phase. Variances are linear ratios to the vacuum level.

use std::f64::consts::{FRAC_2_PI, PI};

use serde::{Deserialize, Serialize};

use crate::error::{QiError, Result};
use crate::quadrature::{integrate, QuadratureConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpaParams {
    pub x: f64,
    pub beta: f64,
    pub w: f64,
    pub theta: f64,
}

pub(crate) fn check_x(x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(QiError::invalid("x", x, "pump ratio must lie in (0, 1)"))
    }
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta <= 1.0 {
        Ok(())
    } else {
        Err(QiError::invalid("beta", beta, "efficiency must lie in (0, 1]"))
    }
}

pub(crate) fn check_w(w: f64) -> Result<()> {
    if w.is_finite() && w >= 0.0 {
        Ok(())
    } else {
        Err(QiError::invalid("w", w, "normalized frequency must be finite and >= 0"))
    }
}

fn check_model(x: f64, beta: f64, w: f64) -> Result<()> {
    check_x(x)?;
    check_beta(beta)?;
    check_w(w)
}

impl OpaParams {
    pub fn new(x: f64, beta: f64, w: f64, theta: f64) -> Result<Self> {
        check_model(x, beta, w)?;
        if !theta.is_finite() {
            return Err(QiError::invalid("theta", theta, "must be finite"));
        }
        Ok(Self { x, beta, w, theta })
    }
}

fn denom_minus(x: f64, w: f64) -> f64 {
    (1.0 - x).powi(2) + w * w
}

fn denom_plus(x: f64, w: f64) -> f64 {
    (1.0 + x).powi(2) + w * w
}

/// `S(θ, x, ω) = 1 + 4βx[cos²θ/((1−x)²+w²) − sin²θ/((1+x)²+w²)]`.
pub fn variance(p: &OpaParams) -> f64 {
    let (s, c) = p.theta.sin_cos();
    1.0 + 4.0 * p.beta * p.x * (c * c / denom_minus(p.x, p.w) - s * s / denom_plus(p.x, p.w))
}

// Departures from the vacuum level at the two extremal phases.
fn squeeze_depth(x: f64, beta: f64, w: f64) -> f64 {
    4.0 * beta * x / denom_plus(x, w)
}

fn antisqueeze_excess(x: f64, beta: f64, w: f64) -> f64 {
    4.0 * beta * x / denom_minus(x, w)
}

/// Minimum variance, reached at `θ = π/2`.
pub fn s_minus(x: f64, beta: f64, w: f64) -> Result<f64> {
    check_model(x, beta, w)?;
    // `1 − 4βx/((1+x)²+w²)` rearranged so that nothing cancels near threshold.
    Ok((denom_minus(x, w) + 4.0 * x * (1.0 - beta)) / denom_plus(x, w))
}

/// Maximum variance, reached at `θ = 0`.
pub fn s_plus(x: f64, beta: f64, w: f64) -> Result<f64> {
    check_model(x, beta, w)?;
    Ok(1.0 + antisqueeze_excess(x, beta, w))
}

/// Closed form of `S₋·S₊`: `1 + 16β(1−β)x²/[((1+x)²+w²)((1−x)²+w²)]`.
///
/// Losses can only raise the product above the minimum-uncertainty value 1.
pub fn uncertainty_product(x: f64, beta: f64, w: f64) -> Result<f64> {
    check_model(x, beta, w)?;
    Ok(1.0 + 16.0 * beta * (1.0 - beta) * x * x / (denom_plus(x, w) * denom_minus(x, w)))
}

/// `F_T = 1 − (2/π)·arctan√ratio` for `ratio = (S₊−1)/(1−S₋)`.
pub fn ft_from_ratio(ratio: f64) -> f64 {
    1.0 - FRAC_2_PI * ratio.sqrt().atan()
}

/// Fraction of the phase period during which the quadrature is squeezed.
///
/// The ratio `(S₊−1)/(1−S₋)` is formed from the two departures directly, so
/// `β` cancels up to rounding.
pub fn squeezed_fraction(x: f64, beta: f64, w: f64) -> Result<f64> {
    check_model(x, beta, w)?;
    Ok(ft_from_ratio(antisqueeze_excess(x, beta, w) / squeeze_depth(x, beta, w)))
}

/// `S₋ = tan²(F_T·π/2)` for a lossless amplifier, `0 < F_T ≤ 1/2`.
pub fn ideal_bound(ft: f64) -> Result<f64> {
    if !(ft > 0.0 && ft <= 0.5) {
        return Err(QiError::invalid("ft", ft, "ideal bound defined for 0 < ft <= 0.5"));
    }
    Ok((ft * PI / 2.0).tan().powi(2))
}

/// Inverse of [`ideal_bound`], `0 < S₋ ≤ 1`.
pub fn ideal_ft(s_minus: f64) -> Result<f64> {
    if !(s_minus > 0.0 && s_minus <= 1.0) {
        return Err(QiError::invalid("s_minus", s_minus, "must lie in (0, 1]"));
    }
    Ok(1.0 - FRAC_2_PI * (1.0 / s_minus).sqrt().atan())
}

/// Ideal-amplifier bound in dB for any `ft ∈ (0, 1]`. Beyond half a period
/// no squeezing is possible, so the bound is 0 dB there.
pub fn ideal_bound_db(ft: f64) -> Result<f64> {
    if ft > 0.5 && ft <= 1.0 {
        return Ok(0.0);
    }
    ideal_bound(ft).map(crate::db::to_db)
}

/// Weight used when averaging `F_T` over sideband frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FteKernel {
    /// Squeezing depth `1 − S₋(w)`.
    #[default]
    Depth,
    Uniform,
}

impl FteKernel {
    pub fn name(self) -> &'static str {
        match self {
            FteKernel::Depth => "depth",
            FteKernel::Uniform => "uniform",
        }
    }
}

/// Frequency-weighted effective squeezed fraction over `w ∈ [0, w_max]`:
/// `∫ F_T(w) k(w) dw / ∫ k(w) dw`.
pub fn effective_ft(x: f64, beta: f64, w_max: f64, kernel: FteKernel, cfg: &QuadratureConfig) -> Result<f64> {
    check_model(x, beta, 0.0)?;
    if !(w_max.is_finite() && w_max > 0.0) {
        return Err(QiError::invalid("w_max", w_max, "integration range must be positive"));
    }
    let weight = |w: f64| match kernel {
        FteKernel::Depth => squeeze_depth(x, beta, w),
        FteKernel::Uniform => 1.0,
    };
    if w_max < 1e-9 {
        return squeezed_fraction(x, beta, 0.0);
    }
    let total = integrate(weight, 0.0, w_max, cfg)?;
    if total.value <= 0.0 || !total.value.is_finite() {
        return Err(QiError::ZeroWeight);
    }
    let weighted = integrate(
        |w| weight(w) * ft_from_ratio(antisqueeze_excess(x, beta, w) / squeeze_depth(x, beta, w)),
        0.0,
        w_max,
        cfg,
    )?;
    Ok(weighted.value / total.value)
}
