use std::path::PathBuf;

use qi_core::db::to_db;
use qi_core::meta::{
    classify, fit_report_scales, fit_scale, read_dataset, reconcile_ft, write_dataset, AnalysisReport, BandState,
    FtMethod, SqueezingRecord, IDEAL_OPA_ID,
};
use qi_core::opa::{s_minus, s_plus, squeezed_fraction};
use qi_core::{BoundOptions, QiCurve, QiError, Variant, WindowKind};

fn shipped() -> Vec<SqueezingRecord> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/squeezing_records.csv");
    read_dataset(std::fs::File::open(path).unwrap()).unwrap()
}

fn gaussians() -> Vec<QiCurve> {
    [Variant::PaperWithPi, Variant::MareckiNoPi]
        .map(|v| QiCurve::closed_form(WindowKind::Gaussian, v).unwrap())
        .to_vec()
}

// erf by Maclaurin series; arguments here stay below 2.
fn erf(z: f64) -> f64 {
    let (mut term, mut sum, mut n) = (z, z, 0.0);
    while term.abs() > 1e-18 {
        n += 1.0;
        term *= -z * z / n;
        sum += term / (2.0 * n + 1.0);
    }
    2.0 / std::f64::consts::PI.sqrt() * sum
}

// Scale at which the Gaussian PaperWithPi curve passes through (ft, r).
fn touching_scale(ft: f64, r_db: f64) -> f64 {
    let target = 10f64.powf(r_db / 10.0);
    let (mut lo, mut hi) = (0.0, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if erf(2f64.sqrt() * std::f64::consts::PI * ft * mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn shipped_rows_follow_the_model() {
    let records = shipped();
    assert_eq!(records.len(), 7);
    for r in records.iter().filter(|r| r.id.starts_with("vah-x")) {
        let (x, beta, w) = (r.x.unwrap(), r.beta.unwrap(), r.w.unwrap());
        assert!((r.s_minus_db.unwrap() - to_db(s_minus(x, beta, w).unwrap())).abs() < 1e-9);
        assert!((r.s_plus_db.unwrap() - to_db(s_plus(x, beta, w).unwrap())).abs() < 1e-9);
        let c = reconcile_ft(r).unwrap();
        assert_eq!(c.method, FtMethod::Formula);
        assert!((c.ft - squeezed_fraction(x, beta, w).unwrap()).abs() < 1e-10);
    }
}

#[test]
fn vahlbruch_point_violates_gaussians_but_not_ideal() {
    let report = classify(&shipped(), &gaussians(), true, &BoundOptions::default()).unwrap();
    let ids: Vec<&str> = report.per_record.iter().map(|r| r.id.as_str()).collect();
    assert_eq!(ids, ["vah-x0.1", "vah-x0.3", "vah-x0.8"]);
    let skipped: Vec<&str> = report.skipped.iter().map(|s| s.id.as_str()).collect();
    assert_eq!(skipped, ["hir", "tak", "vah-fig3", "vah-max"]);

    let top = &report.per_record[2];
    assert!((top.ft_used.get() - 0.0704466).abs() < 1e-7);
    assert!((top.r_db_used.get() + 14.3136).abs() < 1e-4);
    assert!(top.violations["gaussian-paper"]);
    assert!(top.violations["gaussian-marecki"]);
    assert_eq!(top.bands["gaussian-paper"], BandState::Violates);
    assert_eq!(top.ideal_opa_exceeded, Some(false));
    assert!(top.errors_default_assumed);
    for r in &report.per_record {
        assert_eq!(r.ideal_opa_exceeded, Some(false), "{}", r.id);
    }
    assert_eq!(report.violation_count("gaussian-paper"), 3);
    assert!(report.curve_samples.contains_key(IDEAL_OPA_ID));
    assert_eq!(report.curve_samples["gaussian-paper"].lines().count(), 51);
}

#[test]
fn classification_ignores_record_order() {
    let mut records = shipped();
    let opts = BoundOptions::default();
    let a = classify(&records, &gaussians(), true, &opts).unwrap();
    records.reverse();
    let b = classify(&records, &gaussians(), true, &opts).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_json(), b.to_json());
}

#[test]
fn report_round_trips_through_json() {
    let opts = BoundOptions::default();
    let mut report = classify(&shipped(), &gaussians(), true, &opts).unwrap();
    fit_report_scales(&mut report, &gaussians(), &opts).unwrap();
    let text = report.to_json();
    let back = AnalysisReport::from_json(&text).unwrap();
    assert_eq!(back, report);
    assert_eq!(back.to_json(), text);
}

#[test]
fn envelope_fit_on_shipped_subset() {
    let opts = BoundOptions::default();
    let report = classify(&shipped(), &gaussians(), false, &opts).unwrap();
    let points = report.points();
    let curve = gaussians()[0];
    let fit = fit_scale(&points, &curve, &opts).unwrap();
    let k = fit.envelope.get();

    let oracle = points
        .iter()
        .map(|&(ft, r)| touching_scale(ft, r))
        .fold(f64::INFINITY, f64::min);
    // Bisection to 1e-6, then rounded down to six significant digits.
    assert!(k <= oracle && oracle - k < 1.1e-5 * oracle, "{k} vs {oracle}");
    assert!((k - 0.104_909).abs() < 2e-6);

    let at = curve.with_scale(k).unwrap();
    assert!(points.iter().all(|&(ft, r)| r >= at.value(ft, &opts).unwrap()));
    let above = curve.with_scale(1.01 * k).unwrap();
    assert!(points.iter().any(|&(ft, r)| r < above.value(ft, &opts).unwrap()));
}

#[test]
fn fitted_scales_regression() {
    let opts = BoundOptions::default();
    let curves = [
        QiCurve::closed_form(WindowKind::Gaussian, Variant::PaperWithPi).unwrap(),
        QiCurve::closed_form(WindowKind::Gaussian, Variant::MareckiNoPi).unwrap(),
        QiCurve::closed_form(WindowKind::LorentzianSquared, Variant::PaperWithPi).unwrap(),
        QiCurve::closed_form(WindowKind::LorentzianSquared, Variant::MareckiNoPi).unwrap(),
    ];
    let mut report = classify(&shipped(), &curves, false, &opts).unwrap();
    fit_report_scales(&mut report, &curves, &opts).unwrap();
    let envelope = |id: &str| report.fitted_scales[id].envelope.get();
    assert!((envelope("gaussian-paper") - 0.104_909).abs() < 2e-6);
    assert!((envelope("gaussian-marecki") - 0.164_791).abs() < 2e-6);
    assert!((envelope("lorentzian2-paper") - 0.085_264_7).abs() < 2e-7);
    assert!((envelope("lorentzian2-marecki") - 0.267_867).abs() < 2e-6);
    for fit in report.fitted_scales.values() {
        assert_eq!(fit.points, 3);
        assert!(fit.least_squares.get() >= fit.envelope.get());
    }
}

#[test]
fn dataset_errors_carry_line_numbers() {
    let header = "id,ref_label,x,omega_over_gamma,beta,s_minus_db,s_plus_db,s_err_db,ft_formula,ft_graphical,ft_err\n";
    let bad_range = format!("# comment\n{header}a,r,0.5,,,-3,3,,,,\nb,r,1.5,,,-3,3,,,,\n");
    match read_dataset(bad_range.as_bytes()) {
        Err(QiError::Data { line, message }) => {
            assert_eq!(line, 4);
            assert!(message.contains('x'));
        }
        other => panic!("{other:?}"),
    }
    let dup = format!("{header}a,r,,,,-3,3,,,,\na,r,,,,-4,4,,,,\n");
    assert!(matches!(read_dataset(dup.as_bytes()), Err(QiError::Data { line: 3, .. })));
    let sign = format!("{header}a,r,,,,3,3,,,,\n");
    assert!(matches!(read_dataset(sign.as_bytes()), Err(QiError::Data { line: 2, .. })));
    let text = format!("{header}a,r,,,,abc,3,,,,\n");
    assert!(matches!(read_dataset(text.as_bytes()), Err(QiError::Data { line: 2, .. })));
    assert!(matches!(read_dataset("id,x\n".as_bytes()), Err(QiError::Data { line: 1, .. })));
    assert!(read_dataset(header.as_bytes()).unwrap().is_empty());
}

#[test]
fn dataset_write_read_round_trip() {
    let records = shipped();
    let text = write_dataset(&records).unwrap();
    assert_eq!(read_dataset(text.as_bytes()).unwrap(), records);
}

#[test]
fn method_agreement_uses_both_routes() {
    let mut a = SqueezingRecord::stub("a", "t");
    a.s_minus_db = Some(-3.0);
    a.s_plus_db = Some(6.0);
    a.ft_graphical = Some(0.3);
    let f = qi_core::meta::ft_from_extremes(-3.0, 6.0).unwrap();
    let report = classify(&[a], &gaussians(), true, &BoundOptions::default()).unwrap();
    let rec = &report.per_record[0];
    assert_eq!(rec.ft_method, FtMethod::Average);
    let mean = 0.5 * (f + 0.3);
    assert!((rec.ft_used.get() - mean).abs() < 1e-6 * mean);
    let rms = report.method_agreement_rms.unwrap().get();
    assert!((rms - (f - 0.3).abs() / mean).abs() < 1e-5 * rms);
}
