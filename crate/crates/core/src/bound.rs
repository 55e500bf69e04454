//! Quantum-inequality lower bounds `R` (dB) on the time-sampled variance.
//!
//! For a spectral function sharply peaked at `ω₀` the bound reduces to
//!
//! ```text
//! R = 10·log10[ 1 − 4π ∫₀^∞ |(√f)_FT(ω + ω₀)|² dω ]
//! ```
//!
//! Because `4π ∫₀^∞ |(√f)_FT|² dω = 1` for every normalized window, the
//! bracket equals the spectral mass below `ω₀`, `4π ∫₀^{ω₀} |(√f)_FT|² dω`.
//! That low-band form is the default; the direct form with the explicit
//! tail is kept as a cross-check.

use std::f64::consts::{PI, SQRT_2};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{HBAR, SPEED_OF_LIGHT};
use crate::db::{bracket_to_db, db_of_one_plus, format_db};
use crate::error::{QiError, Result};
use crate::quadrature::{integrate, Integral, QuadratureConfig};
use crate::windows::{SamplingWindow, SpectrumMethod, WindowKind};

/// The product `ω₀t₀` (or `ωt₀` for a homodyne sideband), in radians.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct PhaseArgument(f64);

impl PhaseArgument {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value >= 0.0 {
            Ok(Self(value))
        } else {
            Err(QiError::invalid("phase argument", value, "must be finite and non-negative"))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Shape of the apparatus spectral function `μ(ω_p − ω₀)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectralShape {
    /// Limit of vanishing width.
    DeltaLimit,
    /// `exp(−(ω_p − ω₀)²/(2δω²))`.
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralFunction {
    pub omega0: f64,
    pub delta_omega: f64,
    pub shape: SpectralShape,
}

impl SpectralFunction {
    pub fn delta(omega0: f64) -> Result<Self> {
        if !(omega0.is_finite() && omega0 >= 0.0) {
            return Err(QiError::invalid("omega0", omega0, "must be finite and non-negative"));
        }
        Ok(Self {
            omega0,
            delta_omega: 0.0,
            shape: SpectralShape::DeltaLimit,
        })
    }

    /// Gaussian `μ`; the width must satisfy `δω/ω₀ < 0.1`.
    pub fn gaussian(omega0: f64, delta_omega: f64) -> Result<Self> {
        if !(omega0.is_finite() && omega0 > 0.0) {
            return Err(QiError::invalid("omega0", omega0, "must be finite and positive"));
        }
        if !(delta_omega > 0.0 && delta_omega / omega0 < 0.1) {
            return Err(QiError::invalid(
                "delta_omega",
                delta_omega,
                "must be positive with delta_omega/omega0 < 0.1",
            ));
        }
        Ok(Self {
            omega0,
            delta_omega,
            shape: SpectralShape::Gaussian,
        })
    }

    fn weight(&self, omega_p: f64) -> f64 {
        let d = (omega_p - self.omega0) / self.delta_omega;
        (-0.5 * d * d).exp()
    }

    fn p_range(&self) -> (f64, f64) {
        let reach = 12.0 * self.delta_omega;
        ((self.omega0 - reach).max(0.0), self.omega0 + reach)
    }
}

/// How the bracket is evaluated numerically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BracketForm {
    /// `4π ∫₀^{ω₀} S dω`.
    #[default]
    LowBand,
    /// `1 − 4π ∫_{ω₀}^∞ S dω` with a modelled tail.
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BoundOptions {
    pub quad: QuadratureConfig,
    /// Spectrum route; `None` uses the window's preferred method.
    pub spectrum: Option<SpectrumMethod>,
    pub form: BracketForm,
}

impl BoundOptions {
    pub fn numeric_spectrum(mut self) -> Self {
        self.spectrum = Some(SpectrumMethod::NumericQuadrature);
        self
    }

    pub fn with_form(mut self, form: BracketForm) -> Self {
        self.form = form;
        self
    }
}

/// A bound together with the bracket it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    /// `R` in dB; `-∞` when the bracket is at or below the sentinel threshold.
    pub r_db: f64,
    pub bracket: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

impl BoundValue {
    pub fn is_unbounded(&self) -> bool {
        self.r_db == f64::NEG_INFINITY
    }
}

fn delta_limit_bracket(w: &SamplingWindow, omega0: f64, opts: &BoundOptions) -> Result<Integral> {
    let method = opts.spectrum.unwrap_or_else(|| w.preferred_method());
    let four_pi = 4.0 * PI;
    match opts.form {
        BracketForm::LowBand => Ok(w.spectral_mass_below(omega0, method, &opts.quad)?.scale(four_pi)),
        BracketForm::Direct => {
            let above = w.spectral_mass_above(omega0, method, &opts.quad)?.scale(four_pi);
            Ok(Integral {
                value: 1.0 - above.value,
                ..above
            })
        }
    }
}

fn finish(bracket: Integral) -> Result<BoundValue> {
    let slack = (10.0 * bracket.error).max(1e-9);
    if !(bracket.value.is_finite()) || bracket.value > 1.0 + slack {
        return Err(QiError::InconsistentBracket {
            bracket: bracket.value,
            error_estimate: bracket.error,
        });
    }
    let clamped = bracket.value.min(1.0);
    Ok(BoundValue {
        r_db: bracket_to_db(clamped),
        bracket: clamped,
        error_estimate: bracket.error,
        evaluations: bracket.evaluations,
    })
}

/// Lower bound `R` for window `w` under spectral function `mu`.
///
/// With [`SpectralShape::DeltaLimit`] this is the sharply-peaked reduction
/// of the full ratio: when `μ_p` is sharply peaked at `ω₀`, the `p`
/// integrals in numerator and denominator collapse onto `ω_p = ω₀` and only
/// the bracket survives. With [`SpectralShape::Gaussian`] both `p`
/// integrals (`d³p = 4π ω_p² dω_p`) are carried out explicitly:
///
/// ```text
/// ∫ μ² ω_p³ B(ω_p) dω_p / ∫ μ² ω_p³ dω_p
/// ```
///
/// where `B(ω_p)` is the delta-limit bracket at `ω_p`.
pub fn numeric_bound(w: &SamplingWindow, mu: &SpectralFunction, opts: &BoundOptions) -> Result<BoundValue> {
    match mu.shape {
        SpectralShape::DeltaLimit => finish(delta_limit_bracket(w, mu.omega0, opts)?),
        SpectralShape::Gaussian => {
            let (lo, hi) = mu.p_range();
            let denominator = spectral_weight_integral(mu, &opts.quad)?;
            let mut failure = None;
            let numerator = integrate(
                |p| {
                    let weight = mu.weight(p);
                    let weight = weight * weight * p.powi(3);
                    if weight == 0.0 {
                        return 0.0;
                    }
                    match delta_limit_bracket(w, p, opts) {
                        Ok(b) => weight * b.value,
                        Err(e) => {
                            failure.get_or_insert(e);
                            0.0
                        }
                    }
                },
                lo,
                hi,
                &opts.quad,
            )?;
            if let Some(e) = failure {
                return Err(e);
            }
            let ratio = numerator.value / denominator.value;
            let error = numerator.error / denominator.value + ratio * denominator.error / denominator.value;
            finish(Integral {
                value: ratio,
                error,
                evaluations: numerator.evaluations + denominator.evaluations,
            })
        }
    }
}

/// `∫ μ(ω_p − ω₀)² ω_p³ dω_p`, the factor shared by numerator and
/// denominator of the full ratio. To lowest order in `δω` it equals
/// `√π ω₀³ δω` for the Gaussian shape.
pub fn spectral_weight_integral(mu: &SpectralFunction, cfg: &QuadratureConfig) -> Result<Integral> {
    if mu.shape == SpectralShape::DeltaLimit {
        return Err(QiError::invalid(
            "shape",
            f64::NAN,
            "the delta limit has no finite weight integral",
        ));
    }
    let (lo, hi) = mu.p_range();
    integrate(
        |p| {
            let m = mu.weight(p);
            m * m * p.powi(3)
        },
        lo,
        hi,
        cfg,
    )
}

/// `10·log10[erf(√2·arg)]`; `-∞` at zero.
pub fn closed_form_gaussian(arg: PhaseArgument) -> f64 {
    let z = SQRT_2 * arg.value();
    if z == 0.0 {
        return f64::NEG_INFINITY;
    }
    if z > 0.5 {
        // erf = 1 − erfc, evaluated without cancellation.
        db_of_one_plus(-libm::erfc(z))
    } else {
        bracket_to_db(libm::erf(z))
    }
}

/// `10·log10(1 − e^{−2·arg})`; `-∞` at zero.
pub fn closed_form_lorentzian_sq(arg: PhaseArgument) -> f64 {
    let a = arg.value();
    if a == 0.0 {
        return f64::NEG_INFINITY;
    }
    bracket_to_db(-(-2.0 * a).exp_m1())
}

/// Convention mapping the squeezed fraction `F_T` to a phase argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    /// `ωt = π F_T`.
    PaperWithPi,
    /// `ω₀t₀ = F_T` without `π` (with the extra factor 2 in the Gaussian erf).
    MareckiNoPi,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::PaperWithPi => "paper",
            Variant::MareckiNoPi => "marecki",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "paper" => Some(Variant::PaperWithPi),
            "marecki" => Some(Variant::MareckiNoPi),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Evaluation {
    ClosedForm,
    Numeric,
}

/// A bound curve `F_T ↦ R` (dB).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QiCurve {
    pub window: WindowKind,
    /// Trapezoid side-slope length in units of `T_S`; zero otherwise.
    pub n: f64,
    pub variant: Variant,
    /// Argument multiplier `k`.
    pub scale: f64,
    pub evaluation: Evaluation,
}

impl QiCurve {
    /// Closed-form Gaussian or squared-Lorentzian curve with `k = 1`.
    pub fn closed_form(window: WindowKind, variant: Variant) -> Result<Self> {
        Self::new(window, 0.0, variant, 1.0, Evaluation::ClosedForm, false)
    }

    pub fn trapezoid(n: f64, variant: Variant) -> Result<Self> {
        Self::new(WindowKind::Trapezoid, n, variant, 1.0, Evaluation::Numeric, false)
    }

    pub fn new(
        window: WindowKind,
        n: f64,
        variant: Variant,
        scale: f64,
        evaluation: Evaluation,
        allow_unstable: bool,
    ) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(QiError::invalid("scale", scale, "must be finite and positive"));
        }
        if evaluation == Evaluation::ClosedForm && !window.has_analytic_spectrum() {
            return Err(QiError::invalid(
                "evaluation",
                f64::NAN,
                "closed forms exist only for the gaussian and lorentzian2 windows",
            ));
        }
        let n = if window == WindowKind::Trapezoid { n } else { 0.0 };
        // Validates n and the square opt-in.
        SamplingWindow::new(window, 1.0, n, allow_unstable)?;
        Ok(Self {
            window,
            n,
            variant,
            scale,
            evaluation,
        })
    }

    pub fn with_scale(self, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(QiError::invalid("scale", scale, "must be finite and positive"));
        }
        Ok(Self { scale, ..self })
    }

    /// Stable identifier, e.g. `gaussian-paper`, `trapezoid-n0.2-marecki`,
    /// `lorentzian2-paper-k0.1`, `gaussian-paper-num`.
    pub fn id(&self) -> String {
        let mut id = self.window.name().to_string();
        if self.window == WindowKind::Trapezoid {
            id.push_str(&format!("-n{}", self.n));
        }
        id.push('-');
        id.push_str(self.variant.name());
        if self.scale != 1.0 {
            id.push_str(&format!("-k{}", crate::db::round_sig(self.scale, 6)));
        }
        if self.evaluation == Evaluation::Numeric && self.window.has_analytic_spectrum() {
            id.push_str("-num");
        }
        id
    }

    /// Inverse of [`QiCurve::id`].
    pub fn parse(id: &str, allow_unstable: bool) -> Result<Self> {
        let unknown = || QiError::UnknownCurve(id.to_string());
        let mut parts = id.trim().split('-');
        let window = parts.next().and_then(WindowKind::parse).ok_or_else(unknown)?;
        let mut n = 0.0;
        let mut next = parts.next().ok_or_else(unknown)?;
        if window == WindowKind::Trapezoid {
            n = next
                .strip_prefix('n')
                .and_then(|v| v.parse().ok())
                .ok_or_else(unknown)?;
            next = parts.next().ok_or_else(unknown)?;
        }
        let variant = Variant::parse(next).ok_or_else(unknown)?;
        let mut scale = 1.0;
        let mut evaluation = if window.has_analytic_spectrum() {
            Evaluation::ClosedForm
        } else {
            Evaluation::Numeric
        };
        for part in parts {
            if let Some(k) = part.strip_prefix('k') {
                scale = k.parse().map_err(|_| unknown())?;
            } else if part == "num" && window.has_analytic_spectrum() {
                evaluation = Evaluation::Numeric;
            } else {
                return Err(unknown());
            }
        }
        Self::new(window, n, variant, scale, evaluation, allow_unstable)
    }

    /// Phase argument `ω₀t₀` for squeezed fraction `ft`.
    pub fn argument(&self, ft: f64) -> f64 {
        let base = match (self.variant, self.window) {
            (Variant::PaperWithPi, _) => PI * ft,
            (Variant::MareckiNoPi, WindowKind::Gaussian) => 2.0 * ft,
            (Variant::MareckiNoPi, _) => ft,
        };
        base * self.scale
    }

    fn unit_window(&self) -> Result<SamplingWindow> {
        SamplingWindow::new(self.window, 1.0, self.n, true)
    }

    /// Full bound information at `ft`.
    pub fn evaluate(&self, ft: f64, opts: &BoundOptions) -> Result<BoundValue> {
        if !(ft > 0.0 && ft <= 1.0) {
            return Err(QiError::invalid("ft", ft, "must lie in (0, 1]"));
        }
        let arg = PhaseArgument::new(self.argument(ft))?;
        match self.evaluation {
            Evaluation::ClosedForm => {
                let r_db = match self.window {
                    WindowKind::Gaussian => closed_form_gaussian(arg),
                    _ => closed_form_lorentzian_sq(arg),
                };
                Ok(BoundValue {
                    r_db,
                    bracket: crate::db::from_db(r_db),
                    error_estimate: 0.0,
                    evaluations: 0,
                })
            }
            // Only ω₀t₀ matters, so evaluate at t₀ = 1 and ω₀ = arg.
            Evaluation::Numeric => numeric_bound(&self.unit_window()?, &SpectralFunction::delta(arg.value())?, opts),
        }
    }

    /// `R(ft)` in dB.
    pub fn value(&self, ft: f64, opts: &BoundOptions) -> Result<f64> {
        self.evaluate(ft, opts).map(|b| b.r_db)
    }
}

/// `R(F_T)` for curve `c`; `ft` must lie in `(0, 1]`.
pub fn curve_value(c: &QiCurve, ft: f64, opts: &BoundOptions) -> Result<f64> {
    c.value(ft, opts)
}

/// Grid `lo, lo+step, …, ≤ hi` (inclusive of `hi` up to rounding).
pub fn ft_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite() && step.is_finite() && step > 0.0 && hi >= lo) {
        return Err(QiError::invalid("grid", step, "need finite lo <= hi and step > 0"));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    if count > 1_000_000 {
        return Err(QiError::invalid("grid", step, "more than 10^6 points"));
    }
    Ok((0..count)
        .map(|i| {
            let v = lo + step * i as f64;
            (v * 1e12).round() / 1e12
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub ft: f64,
    pub r_db: f64,
}

/// Samples `c` on `fts`. Points are evaluated in parallel; output order
/// follows the input.
pub fn sample_curve(c: &QiCurve, fts: &[f64], opts: &BoundOptions) -> Result<Vec<CurveSample>> {
    fts.par_iter()
        .map(|&ft| c.value(ft, opts).map(|r_db| CurveSample { ft, r_db }))
        .collect()
}

/// CSV header for sampled curves.
pub const CURVE_CSV_HEADER: &str = "ft,r_db,curve_id,window,variant,scale";

/// Rows (without header) for one sampled curve.
pub fn curve_csv_rows(c: &QiCurve, samples: &[CurveSample]) -> String {
    let id = c.id();
    let mut out = String::new();
    for s in samples {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            s.ft,
            format_db(s.r_db),
            id,
            c.window.name(),
            c.variant.name(),
            c.scale
        ));
    }
    out
}

/// Complete CSV document for several sampled curves.
pub fn curves_csv(curves: &[(QiCurve, Vec<CurveSample>)]) -> String {
    let mut out = format!("{CURVE_CSV_HEADER}\n");
    for (c, samples) in curves {
        out.push_str(&curve_csv_rows(c, samples));
    }
    out
}

/// Numerical factor of the free-field bound, `3/(16π²)`.
pub const FORD_FACTOR: f64 = 3.0 / (16.0 * PI * PI);

/// Numerical factor of the parallel-plate Casimir density, `π²/720`.
pub const CASIMIR_FACTOR: f64 = PI * PI / 720.0;

fn require_positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(QiError::invalid(name, v, "must be finite and positive"))
    }
}

/// Lower bound on the Lorentzian-sampled energy density of the free
/// electromagnetic field, `−(3/16π²)·ħc/(c·t0)⁴`, in J/m³.
pub fn ford_bound(t0: f64) -> Result<f64> {
    require_positive("t0", t0)?;
    Ok(-FORD_FACTOR * HBAR * SPEED_OF_LIGHT / (SPEED_OF_LIGHT * t0).powi(4))
}

/// Energy density between ideal parallel plates at separation `a`, in J/m³.
pub fn casimir_density(a: f64) -> Result<f64> {
    require_positive("a", a)?;
    Ok(-CASIMIR_FACTOR * HBAR * SPEED_OF_LIGHT / a.powi(4))
}

/// `(3/16π²)/(π²/720)`.
pub fn ford_casimir_factor_ratio() -> f64 {
    FORD_FACTOR / CASIMIR_FACTOR
}

/// Sampling time `a/c` at which a Casimir-strength density is allowed.
pub fn casimir_equivalent_time(a: f64) -> Result<f64> {
    require_positive("a", a)?;
    Ok(a / SPEED_OF_LIGHT)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_edges() {
        let zero = PhaseArgument::new(0.0).unwrap();
        assert_eq!(closed_form_gaussian(zero), f64::NEG_INFINITY);
        assert_eq!(closed_form_lorentzian_sq(zero), f64::NEG_INFINITY);
        let big = PhaseArgument::new(10.0).unwrap();
        assert!(closed_form_gaussian(big).abs() < 1e-10);
        assert!(closed_form_lorentzian_sq(PhaseArgument::new(40.0).unwrap()).abs() < 1e-10);
        assert!(PhaseArgument::new(-1.0).is_err());
        assert!(PhaseArgument::new(f64::INFINITY).is_err());
    }

    #[test]
    fn curve_ids_round_trip() {
        let curves = [
            QiCurve::closed_form(WindowKind::Gaussian, Variant::PaperWithPi).unwrap(),
            QiCurve::closed_form(WindowKind::LorentzianSquared, Variant::MareckiNoPi)
                .unwrap()
                .with_scale(1.0 / 3.0)
                .unwrap(),
            QiCurve::trapezoid(0.2, Variant::MareckiNoPi).unwrap(),
            QiCurve::new(WindowKind::Gaussian, 0.0, Variant::PaperWithPi, 1.0, Evaluation::Numeric, false).unwrap(),
        ];
        for c in curves {
            let parsed = QiCurve::parse(&c.id(), false).unwrap();
            assert_eq!(parsed.id(), c.id());
            assert_eq!(parsed.window, c.window);
            assert_eq!(parsed.variant, c.variant);
            assert_eq!(parsed.evaluation, c.evaluation);
            assert!((parsed.scale - c.scale).abs() < 1e-6 * c.scale);
        }
        assert_eq!(
            QiCurve::trapezoid(0.001, Variant::PaperWithPi).unwrap().id(),
            "trapezoid-n0.001-paper"
        );
        assert!(QiCurve::parse("square-paper", false).is_err());
        assert!(QiCurve::parse("square-paper", true).is_ok());
        assert!(QiCurve::parse("gaussian", false).is_err());
        assert!(QiCurve::parse("boxcar-paper", false).is_err());
        assert!(QiCurve::parse("gaussian-paper-zz", false).is_err());
    }

    #[test]
    fn closed_form_only_for_analytic_windows() {
        assert!(QiCurve::new(WindowKind::Trapezoid, 1.0, Variant::PaperWithPi, 1.0, Evaluation::ClosedForm, false).is_err());
        assert!(QiCurve::closed_form(WindowKind::Gaussian, Variant::PaperWithPi)
            .unwrap()
            .with_scale(0.0)
            .is_err());
    }

    #[test]
    fn curve_rejects_ft_outside_unit_interval() {
        let c = QiCurve::closed_form(WindowKind::Gaussian, Variant::PaperWithPi).unwrap();
        let opts = BoundOptions::default();
        assert!(c.value(0.0, &opts).is_err());
        assert!(c.value(1.0001, &opts).is_err());
        assert!(c.value(1.0, &opts).is_ok());
    }

    #[test]
    fn grid_counts() {
        assert_eq!(ft_grid(0.01, 1.0, 0.01).unwrap().len(), 100);
        let g = ft_grid(0.05, 0.5, 0.05).unwrap();
        assert_eq!(g.len(), 10);
        assert_eq!(g[2], 0.15);
        assert!(ft_grid(0.5, 0.1, 0.1).is_err());
        assert!(ft_grid(0.1, 0.5, 0.0).is_err());
    }

    #[test]
    fn spectral_function_validation() {
        assert!(SpectralFunction::gaussian(1.0, 0.1).is_err());
        assert!(SpectralFunction::gaussian(1.0, 0.05).is_ok());
        assert!(SpectralFunction::gaussian(0.0, 0.05).is_err());
        assert!(SpectralFunction::delta(-1.0).is_err());
    }

    #[test]
    fn quartic_scaling() {
        let r = ford_bound(2e-15).unwrap() / ford_bound(1e-15).unwrap();
        assert!((r - 1.0 / 16.0).abs() < 1e-14);
        let r = casimir_density(2e-7).unwrap() / casimir_density(1e-7).unwrap();
        assert!((r - 1.0 / 16.0).abs() < 1e-14);
        assert!(ford_bound(0.0).is_err());
        assert!(casimir_density(-1.0).is_err());
    }
}
