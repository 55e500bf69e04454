//! Normalized time-sampling windows and the power spectrum of their square root.
//!
//! Fourier transforms follow `g_FT(ω) = (1/2π) ∫ g(t) e^{-iωt} dt`, so for any
//! normalized window `∫ |(√f)_FT(ω)|² dω = 1/(2π)` over the whole real line.
//! All windows are even in `t`, which makes the transform of `√f` real:
//! `(√f)_FT(ω) = (1/π) ∫₀^∞ √f(t) cos(ωt) dt`.

use std::cell::Cell;
use std::ops::Add;
use std::f64::consts::{FRAC_1_PI, PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{QiError, Result};
use crate::quadrature::{alternating_sum, integrate, integrate_pieces, split_points, Integral, QuadratureConfig};

/// Window family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    Gaussian,
    #[serde(rename = "lorentzian2")]
    LorentzianSquared,
    Square,
    Trapezoid,
}

impl WindowKind {
    pub fn name(self) -> &'static str {
        match self {
            WindowKind::Gaussian => "gaussian",
            WindowKind::LorentzianSquared => "lorentzian2",
            WindowKind::Square => "square",
            WindowKind::Trapezoid => "trapezoid",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "gaussian" => Some(WindowKind::Gaussian),
            "lorentzian2" => Some(WindowKind::LorentzianSquared),
            "square" => Some(WindowKind::Square),
            "trapezoid" => Some(WindowKind::Trapezoid),
            _ => None,
        }
    }

    /// Whether a closed-form spectrum is available.
    pub fn has_analytic_spectrum(self) -> bool {
        matches!(self, WindowKind::Gaussian | WindowKind::LorentzianSquared)
    }
}

/// A normalized, even, non-negative time-sampling function.
///
/// `t0` is the width parameter: the standard deviation for the Gaussian,
/// `t0` of `(2/π) t0³/(t²+t0²)²` for the squared Lorentzian, the full width
/// `ΔT` for the square window and the flat-top length `T_S` for the
/// trapezoid. The trapezoid's flat top spans `[-T_S/2, T_S/2]` and each
/// linear side extends a further `n·T_S`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingWindow {
    kind: WindowKind,
    t0: f64,
    n: f64,
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(QiError::invalid(name, value, "must be finite and positive"))
    }
}

impl SamplingWindow {
    pub fn gaussian(t0: f64) -> Result<Self> {
        check_positive("t0", t0)?;
        Ok(Self {
            kind: WindowKind::Gaussian,
            t0,
            n: 0.0,
        })
    }

    pub fn lorentzian_squared(t0: f64) -> Result<Self> {
        check_positive("t0", t0)?;
        Ok(Self {
            kind: WindowKind::LorentzianSquared,
            t0,
            n: 0.0,
        })
    }

    /// Box of full width `delta_t`. Requires `allow_unstable = true`.
    pub fn square(delta_t: f64, allow_unstable: bool) -> Result<Self> {
        if !allow_unstable {
            return Err(QiError::UnstableWindow);
        }
        check_positive("t0", delta_t)?;
        Ok(Self {
            kind: WindowKind::Square,
            t0: delta_t,
            n: 0.0,
        })
    }

    pub fn trapezoid(t_s: f64, n: f64) -> Result<Self> {
        check_positive("t0", t_s)?;
        check_positive("n", n)?;
        Ok(Self {
            kind: WindowKind::Trapezoid,
            t0: t_s,
            n,
        })
    }

    /// Generic constructor; `n` is ignored except for the trapezoid.
    pub fn new(kind: WindowKind, t0: f64, n: f64, allow_unstable: bool) -> Result<Self> {
        match kind {
            WindowKind::Gaussian => Self::gaussian(t0),
            WindowKind::LorentzianSquared => Self::lorentzian_squared(t0),
            WindowKind::Square => Self::square(t0, allow_unstable),
            WindowKind::Trapezoid => Self::trapezoid(t0, n),
        }
    }

    pub fn kind(&self) -> WindowKind {
        self.kind
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    /// Same family and shape with a different width parameter.
    pub fn with_t0(&self, t0: f64) -> Result<Self> {
        check_positive("t0", t0)?;
        Ok(Self { t0, ..*self })
    }

    /// Half-length of the support, `None` for infinite support.
    pub fn support_half_width(&self) -> Option<f64> {
        match self.kind {
            WindowKind::Gaussian | WindowKind::LorentzianSquared => None,
            WindowKind::Square => Some(0.5 * self.t0),
            WindowKind::Trapezoid => Some(self.t0 * (0.5 + self.n)),
        }
    }

    fn trapezoid_height(&self) -> f64 {
        1.0 / (self.t0 * (1.0 + self.n))
    }

    /// `f(t)` in 1/seconds.
    pub fn evaluate(&self, t: f64) -> f64 {
        let t0 = self.t0;
        let at = t.abs();
        match self.kind {
            WindowKind::Gaussian => (-(t * t) / (2.0 * t0 * t0)).exp() / (t0 * (2.0 * PI).sqrt()),
            WindowKind::LorentzianSquared => {
                let d = t * t + t0 * t0;
                2.0 * FRAC_1_PI * t0.powi(3) / (d * d)
            }
            WindowKind::Square => {
                if at <= 0.5 * t0 {
                    1.0 / t0
                } else {
                    0.0
                }
            }
            WindowKind::Trapezoid => {
                let flat = 0.5 * t0;
                let side = self.n * t0;
                let h = self.trapezoid_height();
                if at <= flat {
                    h
                } else if at < flat + side {
                    h * (flat + side - at) / side
                } else {
                    0.0
                }
            }
        }
    }

    /// `√f(t)`.
    pub fn sqrt_amplitude(&self, t: f64) -> f64 {
        self.evaluate(t).sqrt()
    }

    /// Method used when none is requested explicitly.
    pub fn preferred_method(&self) -> SpectrumMethod {
        if self.kind.has_analytic_spectrum() {
            SpectrumMethod::Analytic
        } else {
            SpectrumMethod::NumericQuadrature
        }
    }

    /// `|(√f)_FT(ω)|²` in seconds, using the preferred method.
    pub fn sqrt_ft_squared(&self, omega: f64, cfg: &QuadratureConfig) -> Result<f64> {
        self.sqrt_ft_squared_with(omega, self.preferred_method(), cfg)
    }

    pub fn sqrt_ft_squared_with(&self, omega: f64, method: SpectrumMethod, cfg: &QuadratureConfig) -> Result<f64> {
        if !omega.is_finite() {
            return Err(QiError::invalid("omega", omega, "must be finite"));
        }
        match method {
            SpectrumMethod::Analytic => self.analytic_spectrum(omega),
            SpectrumMethod::NumericQuadrature => {
                let c = self.cosine_transform(omega.abs(), cfg)?;
                Ok((c.value * FRAC_1_PI).powi(2))
            }
        }
    }

    fn analytic_spectrum(&self, omega: f64) -> Result<f64> {
        let t0 = self.t0;
        match self.kind {
            WindowKind::Gaussian => Ok(t0 / (PI * (2.0 * PI).sqrt()) * (-2.0 * t0 * t0 * omega * omega).exp()),
            WindowKind::LorentzianSquared => Ok(t0 / (2.0 * PI) * (-2.0 * t0 * omega.abs()).exp()),
            _ => Err(QiError::invalid(
                "method",
                f64::NAN,
                "no closed-form spectrum for this window",
            )),
        }
    }

    /// `∫₀^∞ √f(t) cos(ωt) dt` for `ω ≥ 0`.
    pub fn cosine_transform(&self, omega: f64, cfg: &QuadratureConfig) -> Result<Integral> {
        let half_period = if omega > 0.0 { PI / omega } else { f64::INFINITY };
        match self.kind {
            WindowKind::Gaussian => {
                // √f ∝ exp(-t²/4t0²); the tail beyond t_max is below tail_tol·1e-6.
                let t_max = 2.0 * self.t0 * (1e6 / cfg.tail_tol).ln().sqrt();
                let pieces = split_points(0.0, t_max, half_period.min(0.25 * t_max));
                integrate_pieces(|t| self.sqrt_amplitude(t) * (omega * t).cos(), &pieces, cfg)
            }
            WindowKind::LorentzianSquared => self.lorentzian_cosine_transform(omega, half_period, cfg),
            WindowKind::Square => {
                let half = 0.5 * self.t0;
                let amp = 1.0 / self.t0.sqrt();
                let pieces = split_points(0.0, half, half_period);
                integrate_pieces(|t| amp * (omega * t).cos(), &pieces, cfg)
            }
            WindowKind::Trapezoid => {
                let flat = 0.5 * self.t0;
                let side = self.n * self.t0;
                let end = flat + side;
                let root_h = self.trapezoid_height().sqrt();
                let top = integrate_pieces(
                    |t| root_h * (omega * t).cos(),
                    &split_points(0.0, flat, half_period),
                    cfg,
                )?;
                // On the ramp √f = √h·s with t = end - side·s², which removes the
                // square-root cusp at the support edge.
                let turns = (omega * side / PI).ceil().max(1.0);
                let ramp = integrate_pieces(
                    |s| {
                        let t = end - side * s * s;
                        2.0 * side * root_h * s * s * (omega * t).cos()
                    },
                    &split_points(0.0, 1.0, 1.0 / turns),
                    cfg,
                )?;
                Ok(top + ramp)
            }
        }
    }

    fn lorentzian_cosine_transform(&self, omega: f64, half_period: f64, cfg: &QuadratureConfig) -> Result<Integral> {
        let head_end = 20.0 * self.t0;
        let g = |t: f64| self.sqrt_amplitude(t);
        let head = integrate_pieces(
            |t| g(t) * (omega * t).cos(),
            &split_points(0.0, head_end, half_period.min(self.t0)),
            cfg,
        )?;
        if omega == 0.0 {
            // t = head_end/u maps the algebraic tail onto (0, 1].
            let tail = integrate(
                |u| {
                    if u == 0.0 {
                        // g(t)·t² → √(2/π)·t0^{3/2}
                        (2.0 / PI).sqrt() * self.t0.powf(1.5) / head_end
                    } else {
                        let t = head_end / u;
                        g(t) * head_end / (u * u)
                    }
                },
                0.0,
                1.0,
                cfg,
            )?;
            return Ok(head + tail);
        }
        // Alternating tail: one term per half period, summed with Euler acceleration.
        let mut terms = Vec::with_capacity(48);
        let mut evaluations = 0;
        let mut error = 0.0;
        for j in 0..48 {
            let a = head_end + j as f64 * half_period;
            let piece = integrate(|t| g(t) * (omega * t).cos(), a, a + half_period, cfg)?;
            evaluations += piece.evaluations;
            error += piece.error;
            terms.push(piece.value);
        }
        let (value, accel_err) = alternating_sum(&terms);
        Ok(head.add(Integral {
            value,
            error: error + accel_err,
            evaluations,
        }))
    }

    /// Asymptotic mean of the spectrum above `omega`, integrated to infinity.
    ///
    /// Used to close truncated spectral integrals. Exact for the Gaussian and
    /// squared-Lorentzian families.
    pub fn spectral_tail(&self, omega: f64) -> f64 {
        let t0 = self.t0;
        match self.kind {
            WindowKind::Gaussian => libm::erfc(SQRT_2 * t0 * omega) / (4.0 * PI),
            WindowKind::LorentzianSquared => (-2.0 * t0 * omega).exp() / (4.0 * PI),
            WindowKind::Square => 1.0 / (2.0 * PI * PI * t0 * omega),
            WindowKind::Trapezoid => {
                let h = self.trapezoid_height();
                let side = self.n * t0;
                if omega * side < 1.0 {
                    // Ramp unresolved: the edges act like jumps of height √h.
                    h / (2.0 * PI * PI * omega)
                } else {
                    h / side / (16.0 * PI * omega * omega)
                }
            }
        }
    }

    /// Period (in ω) of the oscillating part of the spectrum, if any.
    fn spectral_period(&self) -> Option<f64> {
        self.support_half_width().map(|b| PI / b)
    }

    /// Cut-off above `omega` beyond which the tail model is used.
    fn spectral_cutoff(&self, omega: f64) -> f64 {
        let t0 = self.t0;
        match self.kind {
            WindowKind::Gaussian => omega + 7.0 / t0,
            WindowKind::LorentzianSquared => omega + 18.0 / t0,
            WindowKind::Square | WindowKind::Trapezoid => {
                // Whole number of oscillation periods past `omega`; the tail
                // model is the period average.
                let period = self.spectral_period().unwrap_or(1.0 / t0);
                let b = self.support_half_width().unwrap_or(t0);
                let target = 200.0 * PI / b;
                let periods = ((target - omega).max(0.0) / period).ceil().max(4.0);
                let start = (omega / period).ceil() * period;
                start + periods * period
            }
        }
    }

    /// `∫₀^{ω₀} |(√f)_FT(ω)|² dω`.
    pub fn spectral_mass_below(&self, omega0: f64, method: SpectrumMethod, cfg: &QuadratureConfig) -> Result<Integral> {
        self.spectral_mass_between(0.0, omega0, method, cfg)
    }

    /// `∫_{ω₀}^∞ |(√f)_FT(ω)|² dω`; analytic methods use the exact tail,
    /// numeric ones integrate to a cut-off and close with the tail model.
    pub fn spectral_mass_above(&self, omega0: f64, method: SpectrumMethod, cfg: &QuadratureConfig) -> Result<Integral> {
        if method == SpectrumMethod::Analytic && self.kind.has_analytic_spectrum() {
            return Ok(Integral {
                value: self.spectral_tail(omega0),
                error: 0.0,
                evaluations: 0,
            });
        }
        let cutoff = self.spectral_cutoff(omega0);
        let body = self.spectral_mass_between(omega0, cutoff, method, cfg)?;
        let tail = self.spectral_tail(cutoff);
        Ok(body.add(Integral {
            value: tail,
            // The period-averaged model is first order; take its size as the error.
            error: if self.kind.has_analytic_spectrum() { 0.0 } else { tail * 1e-2 },
            evaluations: 0,
        }))
    }

    /// Numeric Parseval integral `∫_{-∞}^{∞} |(√f)_FT|² dω`; should be `1/(2π)`.
    pub fn parseval_integral(&self, method: SpectrumMethod, cfg: &QuadratureConfig) -> Result<Integral> {
        let cutoff = self.spectral_cutoff(0.0);
        let body = self.spectral_mass_between(0.0, cutoff, method, cfg)?;
        Ok(body
            .add(Integral {
                value: self.spectral_tail(cutoff),
                error: 0.0,
                evaluations: 0,
            })
            .scale(2.0))
    }

    fn spectral_mass_between(&self, lo: f64, hi: f64, method: SpectrumMethod, cfg: &QuadratureConfig) -> Result<Integral> {
        if hi <= lo {
            return Ok(Integral::ZERO);
        }
        let step = match self.spectral_period() {
            Some(p) => 0.5 * p,
            None => 1.0 / self.t0,
        };
        let failure: Cell<Option<QiError>> = Cell::new(None);
        let result = integrate_pieces(
            |w| match self.sqrt_ft_squared_with(w, method, cfg) {
                Ok(v) => v,
                Err(e) => {
                    failure.set(Some(e));
                    0.0
                }
            },
            &split_points(lo, hi, step),
            cfg,
        );
        if let Some(e) = failure.take() {
            return Err(e);
        }
        result
    }
}

/// How `|(√f)_FT|²` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectrumMethod {
    Analytic,
    NumericQuadrature,
}

/// Sampled `|(√f)_FT(ω)|²` for one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqrtWindowSpectrum {
    pub source: SamplingWindow,
    pub method: SpectrumMethod,
    /// `(ω, |(√f)_FT(ω)|²)` pairs in input order.
    pub samples: Vec<(f64, f64)>,
}

impl SqrtWindowSpectrum {
    pub fn sample(source: SamplingWindow, omegas: &[f64], method: SpectrumMethod, cfg: &QuadratureConfig) -> Result<Self> {
        let samples = omegas
            .iter()
            .map(|&w| source.sqrt_ft_squared_with(w, method, cfg).map(|s| (w, s)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            source,
            method,
            samples,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn window_values_at_origin() {
        let g = SamplingWindow::gaussian(1.0).unwrap();
        assert!((g.evaluate(0.0) - 0.398_942_280_401_432_7).abs() < 1e-15);
        let l = SamplingWindow::lorentzian_squared(1.0).unwrap();
        assert!((l.evaluate(0.0) - 2.0 / PI).abs() < 1e-15);
        let s = SamplingWindow::square(2.0, true).unwrap();
        assert_eq!(s.evaluate(0.9), 0.5);
        assert_eq!(s.evaluate(-0.9), 0.5);
        assert_eq!(s.evaluate(1.1), 0.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(SamplingWindow::gaussian(0.0).is_err());
        assert!(SamplingWindow::gaussian(-1.0).is_err());
        assert!(SamplingWindow::lorentzian_squared(f64::NAN).is_err());
        assert!(SamplingWindow::trapezoid(1.0, 0.0).is_err());
        assert!(SamplingWindow::trapezoid(0.0, 1.0).is_err());
        assert_eq!(SamplingWindow::square(1.0, false), Err(QiError::UnstableWindow));
    }

    #[test]
    fn trapezoid_shape() {
        let w = SamplingWindow::trapezoid(2.0, 0.5).unwrap();
        let h = 1.0 / 3.0;
        assert!((w.evaluate(0.0) - h).abs() < 1e-15);
        assert!((w.evaluate(1.0) - h).abs() < 1e-15);
        assert!((w.evaluate(1.5) - 0.5 * h).abs() < 1e-15);
        assert_eq!(w.evaluate(2.0), 0.0);
        assert_eq!(w.support_half_width(), Some(2.0));
    }

    #[test]
    fn analytic_rejected_for_compact_windows() {
        let w = SamplingWindow::trapezoid(1.0, 1.0).unwrap();
        assert!(w.sqrt_ft_squared_with(1.0, SpectrumMethod::Analytic, &cfg()).is_err());
        assert_eq!(w.preferred_method(), SpectrumMethod::NumericQuadrature);
    }

    #[test]
    fn zero_frequency_is_squared_area_of_root() {
        // (1/2π)² (∫√f dt)² ; for the box ∫√f = √ΔT.
        let w = SamplingWindow::square(3.0, true).unwrap();
        let s0 = w.sqrt_ft_squared(0.0, &cfg()).unwrap();
        assert!((s0 - 3.0 / (4.0 * PI * PI)).abs() < 1e-14);
        // Lorentzian²: ∫√f = √(2/π)·t0^{1/2}·π  →  S(0) = t0/(2π).
        let l = SamplingWindow::lorentzian_squared(2.0).unwrap();
        let s0 = l.sqrt_ft_squared_with(0.0, SpectrumMethod::NumericQuadrature, &cfg()).unwrap();
        assert!((s0 / (2.0 / (2.0 * PI)) - 1.0).abs() < 1e-9, "{s0}");
    }

    #[test]
    fn tail_model_matches_exact_square_tail() {
        // Exact tail of sin²(ωΔT/2)/(π²ΔTω²) from a period multiple is the mean
        // envelope minus a small cosine correction.
        let w = SamplingWindow::square(1.0, true).unwrap();
        let cut = w.spectral_cutoff(0.0);
        assert!((cut / (2.0 * PI) - (cut / (2.0 * PI)).round()).abs() < 1e-9);
    }
}
