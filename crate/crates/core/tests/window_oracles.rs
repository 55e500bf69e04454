//! Windows and bounds checked against independently coded special functions.

use std::f64::consts::PI;

use qi_core::bound::{ford_casimir_factor_ratio, SpectralFunction};
use qi_core::quadrature::{integrate, integrate_pieces, QuadratureConfig};
use qi_core::{
    closed_form_gaussian, closed_form_lorentzian_sq, numeric_bound, BoundOptions, BracketForm, PhaseArgument,
    SamplingWindow, SpectrumMethod, WindowKind,
};

const ARGS: [f64; 6] = [0.1, 0.25, 0.5, 1.0, 2.0, 5.0];

// erf by Maclaurin series below 3, erfc by Lentz continued fraction above.
fn erf_series(z: f64) -> f64 {
    let mut term = z;
    let mut sum = z;
    let mut n = 0.0;
    while term.abs() > 1e-18 * sum.abs() {
        n += 1.0;
        term *= -z * z / n;
        sum += term / (2.0 * n + 1.0);
    }
    2.0 / PI.sqrt() * sum
}

fn erfc_cf(z: f64) -> f64 {
    // erfc z = e^{-z²}/√π · 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + …))))
    let tiny = 1e-300;
    let mut f = z;
    let mut c = z;
    let mut d = 0.0;
    for k in 1..200 {
        let a = k as f64 / 2.0;
        d = z + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = z + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-z * z).exp() / PI.sqrt() / f
}

fn gaussian_r_oracle(arg: f64) -> f64 {
    let z = 2f64.sqrt() * arg;
    if z < 3.0 {
        10.0 * erf_series(z).log10()
    } else {
        10.0 * (-erfc_cf(z)).ln_1p() / std::f64::consts::LN_10
    }
}

fn lorentzian_r_oracle(arg: f64) -> f64 {
    10.0 * (1.0 - (-2.0 * arg).exp()).log10()
}

// Si by its Maclaurin series, adequate for |x| ≲ 15.
fn si(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = x;
    let mut k = 0;
    loop {
        let add = term / (2 * k + 1) as f64;
        sum += add;
        if add.abs() < 1e-18 {
            return sum;
        }
        k += 1;
        term *= -x * x / ((2 * k) as f64 * (2 * k + 1) as f64);
    }
}

fn square_bracket_oracle(arg: f64) -> f64 {
    let half = 0.5 * arg;
    2.0 / PI * (si(arg) - half.sin().powi(2) / half)
}

fn gaussian_spectrum(w: f64, t0: f64) -> f64 {
    t0 / (PI * (2.0 * PI).sqrt()) * (-2.0 * t0 * t0 * w * w).exp()
}

fn lorentzian_spectrum(w: f64, t0: f64) -> f64 {
    t0 / (2.0 * PI) * (-2.0 * t0 * w.abs()).exp()
}

fn square_spectrum(w: f64, dt: f64) -> f64 {
    if w == 0.0 {
        return dt / (4.0 * PI * PI);
    }
    (0.5 * w * dt).sin().powi(2) / (PI * PI * dt * w * w)
}

#[test]
fn erf_oracle_self_check() {
    // Values from a 30-digit reference.
    assert!((erf_series(2f64.sqrt()) - 0.954_499_736_103_642).abs() < 1e-15);
    assert!((erfc_cf(4.0) - 1.541_725_790_028_002e-8).abs() < 1e-21);
    assert!((si(1.0) - 0.946_083_070_367_183).abs() < 1e-15);
}

#[test]
fn closed_forms_match_oracles() {
    for arg in ARGS.into_iter().chain([1e-3, 0.6220036, 3.0]) {
        let a = PhaseArgument::new(arg).unwrap();
        assert!((closed_form_gaussian(a) - gaussian_r_oracle(arg)).abs() < 1e-11, "gaussian {arg}");
        assert!((closed_form_lorentzian_sq(a) - lorentzian_r_oracle(arg)).abs() < 1e-11, "lorentzian {arg}");
    }
    let one = PhaseArgument::new(1.0).unwrap();
    assert!((closed_form_gaussian(one) + 0.202_241_873_4).abs() < 1e-9);
    let half = PhaseArgument::new(0.5).unwrap();
    assert!((closed_form_lorentzian_sq(half) + 1.992_000_846_3).abs() < 1e-9);
}

#[test]
fn numeric_bound_matches_closed_forms() {
    let opts = BoundOptions::default();
    let numeric = opts.numeric_spectrum();
    let direct = numeric.with_form(BracketForm::Direct);
    for arg in ARGS {
        let mu = SpectralFunction::delta(arg).unwrap();
        let g = SamplingWindow::gaussian(1.0).unwrap();
        let l = SamplingWindow::lorentzian_squared(1.0).unwrap();
        for o in [&opts, &numeric, &direct] {
            let rg = numeric_bound(&g, &mu, o).unwrap().r_db;
            let rl = numeric_bound(&l, &mu, o).unwrap().r_db;
            assert!((rg - gaussian_r_oracle(arg)).abs() < 1e-6, "gaussian {arg}: {rg}");
            assert!((rl - lorentzian_r_oracle(arg)).abs() < 1e-6, "lorentzian {arg}: {rl}");
        }
    }
}

#[test]
fn bound_depends_only_on_product() {
    let opts = BoundOptions::default().numeric_spectrum();
    for kind in [WindowKind::Gaussian, WindowKind::LorentzianSquared, WindowKind::Trapezoid] {
        let reference = {
            let w = SamplingWindow::new(kind, 1.0, 0.5, false).unwrap();
            numeric_bound(&w, &SpectralFunction::delta(0.7).unwrap(), &opts).unwrap().r_db
        };
        for t0 in [1e-15, 3e-3, 40.0] {
            let w = SamplingWindow::new(kind, t0, 0.5, false).unwrap();
            let r = numeric_bound(&w, &SpectralFunction::delta(0.7 / t0).unwrap(), &opts).unwrap().r_db;
            assert!((r - reference).abs() < 1e-8, "{kind:?} t0={t0}: {r} vs {reference}");
        }
    }
}

#[test]
fn numeric_spectra_match_analytic() {
    let cfg = QuadratureConfig::default();
    for t0 in [1.0, 2.5e-3] {
        let g = SamplingWindow::gaussian(t0).unwrap();
        let l = SamplingWindow::lorentzian_squared(t0).unwrap();
        for wt in [0.0, 0.5, 1.0, 2.0] {
            let w = wt / t0;
            let sg = g.sqrt_ft_squared_with(w, SpectrumMethod::NumericQuadrature, &cfg).unwrap();
            let sl = l.sqrt_ft_squared_with(w, SpectrumMethod::NumericQuadrature, &cfg).unwrap();
            let eg = gaussian_spectrum(w, t0);
            let el = lorentzian_spectrum(w, t0);
            assert!((sg / eg - 1.0).abs() < 1e-8, "gaussian ωt0={wt}");
            assert!((sl / el - 1.0).abs() < 1e-8, "lorentzian ωt0={wt}");
            assert_eq!(g.sqrt_ft_squared(w, &cfg).unwrap(), g.sqrt_ft_squared_with(w, SpectrumMethod::Analytic, &cfg).unwrap());
            assert!((g.sqrt_ft_squared(w, &cfg).unwrap() / eg - 1.0).abs() < 1e-14);
            assert!((l.sqrt_ft_squared(w, &cfg).unwrap() / el - 1.0).abs() < 1e-14);
        }
    }
    let s = SamplingWindow::square(2.0, true).unwrap();
    for w in [0.0, 0.3, 1.0, PI, 7.7] {
        let got = s.sqrt_ft_squared(w, &cfg).unwrap();
        let want = square_spectrum(w, 2.0);
        assert!((got - want).abs() <= 1e-10 * square_spectrum(0.0, 2.0), "square ω={w}");
    }
}

#[test]
fn spectra_are_even() {
    let cfg = QuadratureConfig::default();
    for w in [
        SamplingWindow::gaussian(1.0).unwrap(),
        SamplingWindow::lorentzian_squared(1.0).unwrap(),
        SamplingWindow::trapezoid(1.0, 0.3).unwrap(),
    ] {
        for omega in [0.2, 1.3, 6.0] {
            for m in [SpectrumMethod::NumericQuadrature, w.preferred_method()] {
                let a = w.sqrt_ft_squared_with(omega, m, &cfg).unwrap();
                let b = w.sqrt_ft_squared_with(-omega, m, &cfg).unwrap();
                assert!((a - b).abs() <= 1e-14 * a.abs().max(1e-300));
            }
        }
    }
}

fn window_integral(w: &SamplingWindow) -> f64 {
    let cfg = QuadratureConfig::default();
    match w.support_half_width() {
        Some(h) => {
            let mut breaks = vec![-h, h];
            if w.kind() == WindowKind::Trapezoid {
                let flat = 0.5 * w.t0();
                breaks = vec![-h, -flat, flat, h];
            }
            integrate_pieces(|t| w.evaluate(t), &breaks, &cfg).unwrap().value
        }
        // t = t0·tan u maps the real line onto (−π/2, π/2).
        None => {
            let t0 = w.t0();
            integrate(
                |u: f64| {
                    let c = u.cos();
                    if c == 0.0 {
                        0.0
                    } else {
                        w.evaluate(t0 * u.tan()) * t0 / (c * c)
                    }
                },
                -PI / 2.0,
                PI / 2.0,
                &cfg,
            )
            .unwrap()
            .value
        }
    }
}

#[test]
fn windows_are_normalized() {
    let windows = [
        SamplingWindow::gaussian(1.0).unwrap(),
        SamplingWindow::gaussian(7e-4).unwrap(),
        SamplingWindow::lorentzian_squared(1.0).unwrap(),
        SamplingWindow::lorentzian_squared(30.0).unwrap(),
        SamplingWindow::square(0.2, true).unwrap(),
        SamplingWindow::trapezoid(1.0, 0.001).unwrap(),
        SamplingWindow::trapezoid(2.0, 0.2).unwrap(),
        SamplingWindow::trapezoid(1.0, 5.0).unwrap(),
    ];
    for w in windows {
        let total = window_integral(&w);
        assert!((total - 1.0).abs() < 1e-9, "{w:?}: {total}");
    }
}

#[test]
fn parseval_holds_for_every_window() {
    let cfg = QuadratureConfig::default();
    let target = 1.0 / (2.0 * PI);
    let cases = [
        (SamplingWindow::gaussian(1.0).unwrap(), SpectrumMethod::Analytic, 1e-12),
        (SamplingWindow::lorentzian_squared(1.0).unwrap(), SpectrumMethod::Analytic, 1e-12),
        (SamplingWindow::gaussian(1.0).unwrap(), SpectrumMethod::NumericQuadrature, 1e-9),
        (SamplingWindow::square(1.0, true).unwrap(), SpectrumMethod::NumericQuadrature, 1e-3),
        (SamplingWindow::trapezoid(1.0, 0.2).unwrap(), SpectrumMethod::NumericQuadrature, 1e-6),
        (SamplingWindow::trapezoid(1.0, 0.001).unwrap(), SpectrumMethod::NumericQuadrature, 1e-3),
    ];
    for (w, m, tol) in cases {
        let p = w.parseval_integral(m, &cfg).unwrap();
        assert!((p.value / target - 1.0).abs() < tol, "{w:?}: {}", p.value / target - 1.0);
    }
}

// The square window is unstable in the sense that its spectral tail decays
// only as 1/ω²; the bound is nevertheless finite and converges.
#[test]
fn square_window_bound_is_finite_and_converged() {
    let w = SamplingWindow::square(1.0, true).unwrap();
    for arg in [0.5, 1.0, 3.0] {
        let mu = SpectralFunction::delta(arg).unwrap();
        let b = numeric_bound(&w, &mu, &BoundOptions::default()).unwrap();
        let want = square_bracket_oracle(arg);
        assert!(!b.is_unbounded());
        assert!((b.bracket - want).abs() < 1e-9, "arg {arg}: {} vs {want}", b.bracket);
        assert!(b.error_estimate < 1e-9);
        let d = numeric_bound(&w, &mu, &BoundOptions::default().with_form(BracketForm::Direct)).unwrap();
        assert!((d.r_db - b.r_db).abs() < 1e-4);
    }
    assert!(SamplingWindow::square(1.0, false).is_err());
}

#[test]
fn gaussian_spectral_function_is_close_to_delta_limit() {
    let opts = BoundOptions::default();
    let w = SamplingWindow::gaussian(1.0).unwrap();
    for arg in ARGS {
        let sharp = numeric_bound(&w, &SpectralFunction::delta(arg).unwrap(), &opts).unwrap().r_db;
        let broad = numeric_bound(&w, &SpectralFunction::gaussian(arg, 0.01 * arg).unwrap(), &opts)
            .unwrap()
            .r_db;
        assert!((sharp - broad).abs() < 1e-3, "arg {arg}: {sharp} vs {broad}");
    }
}

#[test]
fn ford_casimir_ratio() {
    let r = ford_casimir_factor_ratio();
    assert!((r - 1.385_907_6).abs() < 1e-7);
    assert_eq!(format!("{r:.1}"), "1.4");
}
