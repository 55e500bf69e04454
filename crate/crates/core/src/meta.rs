//! Meta-analysis of published squeezing measurements.
//!
//! Records are read from CSV, `F_T` is reconciled between the arctangent
//! formula and graphical estimates, and each record is classified against a
//! set of bound curves and the ideal-amplifier bound.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bound::{ft_grid, sample_curve, BoundOptions, CurveSample, QiCurve};
use crate::db::{from_db, round_sig, NEG_INF_TEXT};
use crate::error::{QiError, Result};
use crate::opa;

/// Column order of the dataset CSV.
pub const DATASET_HEADER: [&str; 11] = [
    "id",
    "ref_label",
    "x",
    "omega_over_gamma",
    "beta",
    "s_minus_db",
    "s_plus_db",
    "s_err_db",
    "ft_formula",
    "ft_graphical",
    "ft_err",
];

/// Uncertainty assumed when a source gives none.
pub const DEFAULT_S_ERR_DB: f64 = 0.5;
pub const DEFAULT_FT_ERR: f64 = 0.02;

/// Identifier of the ideal-amplifier curve in reports.
pub const IDEAL_OPA_ID: &str = "ideal-opa";

/// One experimental data point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqueezingRecord {
    pub id: String,
    pub ref_label: String,
    pub x: Option<f64>,
    #[serde(rename = "omega_over_gamma")]
    pub w: Option<f64>,
    pub beta: Option<f64>,
    pub s_minus_db: Option<f64>,
    pub s_plus_db: Option<f64>,
    pub s_err_db: Option<f64>,
    pub ft_formula: Option<f64>,
    pub ft_graphical: Option<f64>,
    pub ft_err: Option<f64>,
}

impl SqueezingRecord {
    /// Record with only an identifier; measurements filled in by the caller.
    pub fn stub(id: &str, ref_label: &str) -> Self {
        Self {
            id: id.to_string(),
            ref_label: ref_label.to_string(),
            x: None,
            w: None,
            beta: None,
            s_minus_db: None,
            s_plus_db: None,
            s_err_db: None,
            ft_formula: None,
            ft_graphical: None,
            ft_err: None,
        }
    }

    /// Range checks on whatever fields are present.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("empty id".into());
        }
        let open_unit = |name: &str, v: Option<f64>| match v {
            Some(v) if !(v > 0.0 && v < 1.0) => Err(format!("{name} = {v} outside (0, 1)")),
            _ => Ok(()),
        };
        open_unit("x", self.x)?;
        open_unit("ft_formula", self.ft_formula)?;
        open_unit("ft_graphical", self.ft_graphical)?;
        if let Some(b) = self.beta {
            if !(b > 0.0 && b <= 1.0) {
                return Err(format!("beta = {b} outside (0, 1]"));
            }
        }
        for (name, v) in [("omega_over_gamma", self.w), ("s_err_db", self.s_err_db), ("ft_err", self.ft_err)] {
            if let Some(v) = v {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(format!("{name} = {v} must be finite and non-negative"));
                }
            }
        }
        if let Some(v) = self.s_minus_db {
            if !(v.is_finite() && v < 0.0) {
                return Err(format!("s_minus_db = {v} must be negative"));
            }
        }
        if let Some(v) = self.s_plus_db {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("s_plus_db = {v} must be positive"));
            }
        }
        Ok(())
    }

    /// True when no measurement at all is present (a schema placeholder).
    pub fn is_stub(&self) -> bool {
        self.s_minus_db.is_none() && self.s_plus_db.is_none() && self.ft_formula.is_none() && self.ft_graphical.is_none()
    }
}

/// Parses a dataset. `#` lines are comments; empty fields are absent values.
pub fn read_dataset<R: Read>(input: R) -> Result<Vec<SqueezingRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input);
    let header_line = reader.position().line().max(1);
    let headers = reader.headers().map_err(|e| csv_error(e, header_line))?.clone();
    let names: Vec<&str> = headers.iter().collect();
    if names != DATASET_HEADER {
        return Err(QiError::Data {
            line: headers.position().map(|p| p.line()).unwrap_or(1),
            message: format!("expected header `{}`", DATASET_HEADER.join(",")),
        });
    }
    let mut records = Vec::new();
    let mut seen = BTreeSet::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_error(e, 0))?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let record: SqueezingRecord = row.deserialize(Some(&headers)).map_err(|e| QiError::Data {
            line,
            message: e.to_string(),
        })?;
        record.validate().map_err(|message| QiError::Data { line, message })?;
        if !seen.insert(record.id.clone()) {
            return Err(QiError::Data {
                line,
                message: format!("duplicate id `{}`", record.id),
            });
        }
        records.push(record);
    }
    Ok(records)
}

fn csv_error(e: csv::Error, fallback_line: u64) -> QiError {
    let line = e.position().map(|p| p.line()).unwrap_or(fallback_line);
    QiError::Data {
        line,
        message: e.to_string(),
    }
}

/// Writes records in the dataset format.
pub fn write_dataset(records: &[SqueezingRecord]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for r in records {
        writer.serialize(r).map_err(|e| QiError::Data {
            line: 0,
            message: e.to_string(),
        })?;
    }
    let bytes = writer.into_inner().map_err(|e| QiError::Data {
        line: 0,
        message: e.to_string(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// `F_T` from measured squeezing and antisqueezing in dB.
pub fn ft_from_extremes(s_minus_db: f64, s_plus_db: f64) -> Result<f64> {
    let sm = from_db(s_minus_db);
    let sp = from_db(s_plus_db);
    if !(0.0..1.0).contains(&sm) {
        return Err(QiError::invalid("s_minus_db", s_minus_db, "must be negative (S- < 1)"));
    }
    if !(sp > 1.0 && sp.is_finite()) {
        return Err(QiError::invalid("s_plus_db", s_plus_db, "must be positive (S+ > 1)"));
    }
    Ok(opa::ft_from_ratio((sp - 1.0) / (1.0 - sm)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FtMethod {
    Formula,
    Graphical,
    Average,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reconciled {
    pub ft: f64,
    pub method: FtMethod,
    /// `|formula − graphical| / mean` when both routes are available.
    pub discrepancy: Option<f64>,
}

/// `F_T` from the formula route: an explicit value, else the measured
/// extremes, else the model parameters.
pub fn formula_ft(r: &SqueezingRecord) -> Option<f64> {
    if let Some(ft) = r.ft_formula {
        return Some(ft);
    }
    if let (Some(sm), Some(sp)) = (r.s_minus_db, r.s_plus_db) {
        return ft_from_extremes(sm, sp).ok();
    }
    match (r.x, r.beta) {
        (Some(x), Some(beta)) => opa::squeezed_fraction(x, beta, r.w.unwrap_or(0.0)).ok(),
        _ => None,
    }
}

/// Chooses the `F_T` used for plotting: the mean when both routes exist.
pub fn reconcile_ft(r: &SqueezingRecord) -> std::result::Result<Reconciled, String> {
    match (formula_ft(r), r.ft_graphical) {
        (Some(f), Some(g)) => {
            let mean = 0.5 * (f + g);
            Ok(Reconciled {
                ft: mean,
                method: FtMethod::Average,
                discrepancy: Some((f - g).abs() / mean),
            })
        }
        (Some(f), None) => Ok(Reconciled {
            ft: f,
            method: FtMethod::Formula,
            discrepancy: None,
        }),
        (None, Some(g)) => Ok(Reconciled {
            ft: g,
            method: FtMethod::Graphical,
            discrepancy: None,
        }),
        (None, None) => Err("no F_T available from either route".into()),
    }
}

/// Root-mean-square of relative discrepancies; `None` if no record has both routes.
pub fn method_agreement_rms(records: &[SqueezingRecord]) -> Option<f64> {
    let d: Vec<f64> = records
        .iter()
        .filter_map(|r| reconcile_ft(r).ok().and_then(|c| c.discrepancy))
        .collect();
    if d.is_empty() {
        None
    } else {
        Some((d.iter().map(|v| v * v).sum::<f64>() / d.len() as f64).sqrt())
    }
}

/// A float in a report: rounded to six significant digits, with `-inf`
/// serialized as a string sentinel.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Num(f64);

impl Num {
    pub fn new(v: f64) -> Self {
        Num(round_sig(v, 6))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == f64::NEG_INFINITY {
            f.write_str(NEG_INF_TEXT)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else if self.0 == f64::NEG_INFINITY {
            s.serialize_str(NEG_INF_TEXT)
        } else if self.0 == f64::INFINITY {
            s.serialize_str("inf")
        } else {
            s.serialize_str("nan")
        }
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(v) => Ok(Num(v)),
            Raw::Text(t) => match t.as_str() {
                NEG_INF_TEXT => Ok(Num(f64::NEG_INFINITY)),
                "inf" => Ok(Num(f64::INFINITY)),
                "nan" => Ok(Num(f64::NAN)),
                other => Err(serde::de::Error::custom(format!("invalid number `{other}`"))),
            },
        }
    }
}

/// Position of an error rectangle relative to a bound curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BandState {
    /// The whole rectangle lies below the curve.
    Violates,
    /// The whole rectangle lies on or above the curve.
    Consistent,
    /// The curve passes through the rectangle.
    WithinError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordResult {
    pub id: String,
    pub ref_label: String,
    pub ft_used: Num,
    pub ft_method: FtMethod,
    pub ft_discrepancy: Option<Num>,
    pub r_db_used: Num,
    pub s_err_db: Num,
    pub ft_err: Num,
    /// Set when either uncertainty was filled with the default.
    pub errors_default_assumed: bool,
    /// Strict comparison of the central point with each curve.
    pub violations: BTreeMap<String, bool>,
    pub bands: BTreeMap<String, BandState>,
    pub ideal_opa_exceeded: Option<bool>,
    pub ideal_opa_band: Option<BandState>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedRecord {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleFit {
    /// Largest `k ∈ (0, 1]` with no violations.
    pub envelope: Num,
    /// Unconstrained least-squares `k` on dB residuals.
    pub least_squares: Num,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub default_s_err_db: Num,
    pub default_ft_err: Num,
    pub effective_ft_kernel: String,
    pub caveats: Vec<String>,
}

impl Default for ReportMetadata {
    fn default() -> Self {
        Self {
            default_s_err_db: Num::new(DEFAULT_S_ERR_DB),
            default_ft_err: Num::new(DEFAULT_FT_ERR),
            effective_ft_kernel: opa::FteKernel::Depth.name().to_string(),
            caveats: vec![
                "phase-noise corrections applied by some sources are not modelled".to_string(),
                "graphical F_T values are ingested as published; the time-to-phase rate is not recomputed".to_string(),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub per_record: Vec<RecordResult>,
    pub skipped: Vec<SkippedRecord>,
    pub method_agreement_rms: Option<Num>,
    pub fitted_scales: BTreeMap<String, ScaleFit>,
    /// Curve id → CSV block (`ft,r_db,curve_id,window,variant,scale`).
    pub curve_samples: BTreeMap<String, String>,
    pub metadata: ReportMetadata,
}

impl AnalysisReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Number of records whose central point violates `curve_id`.
    pub fn violation_count(&self, curve_id: &str) -> usize {
        self.per_record
            .iter()
            .filter(|r| r.violations.get(curve_id).copied().unwrap_or(false))
            .count()
    }

    /// `(ft, r_db)` of every classified record.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.per_record.iter().map(|r| (r.ft_used.get(), r.r_db_used.get())).collect()
    }
}

/// Grid on which curves are embedded in reports.
pub fn report_grid() -> Vec<f64> {
    ft_grid(0.02, 1.0, 0.02).expect("static grid")
}

fn band(r: f64, s_err: f64, ft: f64, ft_err: f64, curve: impl Fn(f64) -> Result<f64>) -> Result<BandState> {
    let lo_ft = ft - ft_err;
    let hi_ft = (ft + ft_err).min(1.0);
    let c_lo = if lo_ft > 0.0 { curve(lo_ft)? } else { f64::NEG_INFINITY };
    let c_hi = curve(hi_ft)?;
    Ok(if r + s_err < c_lo {
        BandState::Violates
    } else if r - s_err >= c_hi {
        BandState::Consistent
    } else {
        BandState::WithinError
    })
}

struct Prepared<'a> {
    record: &'a SqueezingRecord,
    reconciled: Reconciled,
    r_db: f64,
}

fn prepare(r: &SqueezingRecord) -> std::result::Result<Prepared<'_>, String> {
    let reconciled = reconcile_ft(r)?;
    let r_db = r.s_minus_db.ok_or_else(|| "no squeezing value (s_minus_db) to compare".to_string())?;
    Ok(Prepared {
        record: r,
        reconciled,
        r_db,
    })
}

fn classify_one(p: &Prepared<'_>, curves: &[QiCurve], include_ideal: bool, opts: &BoundOptions) -> Result<RecordResult> {
    let r = p.record;
    let ft = p.reconciled.ft;
    let s_err = r.s_err_db.unwrap_or(DEFAULT_S_ERR_DB);
    let ft_err = r.ft_err.unwrap_or(DEFAULT_FT_ERR);
    let mut violations = BTreeMap::new();
    let mut bands = BTreeMap::new();
    for c in curves {
        let bound = c.value(ft, opts)?;
        violations.insert(c.id(), p.r_db < bound);
        bands.insert(c.id(), band(p.r_db, s_err, ft, ft_err, |f| c.value(f, opts))?);
    }
    let (ideal_opa_exceeded, ideal_opa_band) = if include_ideal {
        let bound = opa::ideal_bound_db(ft)?;
        (
            Some(p.r_db < bound),
            Some(band(p.r_db, s_err, ft, ft_err, opa::ideal_bound_db)?),
        )
    } else {
        (None, None)
    };
    Ok(RecordResult {
        id: r.id.clone(),
        ref_label: r.ref_label.clone(),
        ft_used: Num::new(ft),
        ft_method: p.reconciled.method,
        ft_discrepancy: p.reconciled.discrepancy.map(Num::new),
        r_db_used: Num::new(p.r_db),
        s_err_db: Num::new(s_err),
        ft_err: Num::new(ft_err),
        errors_default_assumed: r.s_err_db.is_none() || r.ft_err.is_none(),
        violations,
        bands,
        ideal_opa_exceeded,
        ideal_opa_band,
    })
}

/// Classifies every record against `curves` (and the ideal amplifier when
/// `include_ideal`). Output is sorted by record id.
pub fn classify(
    records: &[SqueezingRecord],
    curves: &[QiCurve],
    include_ideal: bool,
    opts: &BoundOptions,
) -> Result<AnalysisReport> {
    let mut skipped = Vec::new();
    let mut prepared = Vec::new();
    for r in records {
        match prepare(r) {
            Ok(p) => prepared.push(p),
            Err(reason) => skipped.push(SkippedRecord {
                id: r.id.clone(),
                reason: if r.is_stub() {
                    "no measurements (schema stub)".to_string()
                } else {
                    reason
                },
            }),
        }
    }
    let mut per_record = prepared
        .par_iter()
        .map(|p| classify_one(p, curves, include_ideal, opts))
        .collect::<Result<Vec<_>>>()?;
    per_record.sort_by(|a, b| a.id.cmp(&b.id));
    skipped.sort_by(|a, b| a.id.cmp(&b.id));

    let grid = report_grid();
    let mut curve_samples = BTreeMap::new();
    for c in curves {
        let samples = sample_curve(c, &grid, opts)?;
        curve_samples.insert(c.id(), crate::bound::curves_csv(&[(*c, samples)]));
    }
    if include_ideal {
        curve_samples.insert(IDEAL_OPA_ID.to_string(), ideal_curve_csv(&grid)?);
    }

    Ok(AnalysisReport {
        per_record,
        skipped,
        method_agreement_rms: method_agreement_rms(records).map(Num::new),
        fitted_scales: BTreeMap::new(),
        curve_samples,
        metadata: ReportMetadata::default(),
    })
}

fn ideal_curve_csv(grid: &[f64]) -> Result<String> {
    let mut out = format!("{}\n", crate::bound::CURVE_CSV_HEADER);
    for &ft in grid {
        let s = CurveSample {
            ft,
            r_db: opa::ideal_bound_db(ft)?,
        };
        out.push_str(&format!(
            "{},{},{IDEAL_OPA_ID},opa,ideal,1\n",
            s.ft,
            crate::db::format_db(s.r_db)
        ));
    }
    Ok(out)
}

fn violates_any(points: &[(f64, f64)], curve: &QiCurve, opts: &BoundOptions) -> Result<bool> {
    for &(ft, r) in points {
        if r < curve.value(ft, opts)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Fits the argument scale `k` of `curve` to `(ft, r_db)` points.
///
/// The envelope value is the largest `k ∈ (0, 1]` for which no point lies
/// strictly below the scaled curve, found by bisection to a relative width
/// of 1e−6. Shrinking `k` pushes every curve towards `-∞`, so small `k` is
/// always feasible for finite data.
pub fn fit_scale(points: &[(f64, f64)], curve: &QiCurve, opts: &BoundOptions) -> Result<ScaleFit> {
    if points.is_empty() {
        return Err(QiError::Infeasible("no records with both F_T and R".into()));
    }
    if let Some(&(ft, r)) = points.iter().find(|(ft, r)| !(ft.is_finite() && *ft > 0.0 && *ft <= 1.0 && r.is_finite())) {
        return Err(QiError::Infeasible(format!("malformed point (ft = {ft}, r = {r})")));
    }
    let scaled = |k: f64| curve.with_scale(k);
    let envelope = if !violates_any(points, &scaled(1.0)?, opts)? {
        1.0
    } else {
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        while hi - lo > 1e-6 * hi {
            let mid = 0.5 * (lo + hi);
            if violates_any(points, &scaled(mid)?, opts)? {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi < 1e-12 {
                return Err(QiError::Infeasible("scale collapsed below 1e-12".into()));
            }
        }
        lo
    };
    let least_squares = least_squares_scale(points, curve, opts)?;
    Ok(ScaleFit {
        envelope: Num(floor_sig6(envelope)),
        least_squares: Num::new(least_squares),
        points: points.len(),
    })
}

// Rounding down keeps the reported envelope feasible.
fn floor_sig6(v: f64) -> f64 {
    let r = round_sig(v, 6);
    if r <= v {
        return r;
    }
    let unit = 10f64.powi(v.abs().log10().floor() as i32 - 5);
    round_sig(r - unit, 6)
}

fn squared_residual(points: &[(f64, f64)], curve: &QiCurve, k: f64, opts: &BoundOptions) -> Result<f64> {
    let c = curve.with_scale(k)?;
    let mut sum = 0.0;
    for &(ft, r) in points {
        let v = c.value(ft, opts)?;
        let d = if v.is_finite() { r - v } else { 1e6 };
        sum += d * d;
    }
    Ok(sum)
}

// Coarse log-spaced scan followed by golden-section refinement in ln k.
fn least_squares_scale(points: &[(f64, f64)], curve: &QiCurve, opts: &BoundOptions) -> Result<f64> {
    let (lo, hi) = (1e-3_f64.ln(), 10f64.ln());
    let steps = 120;
    let mut best = (f64::INFINITY, lo);
    for i in 0..=steps {
        let u = lo + (hi - lo) * i as f64 / steps as f64;
        let v = squared_residual(points, curve, u.exp(), opts)?;
        if v < best.0 {
            best = (v, u);
        }
    }
    let h = (hi - lo) / steps as f64;
    let (mut a, mut b) = ((best.1 - h).max(lo), (best.1 + h).min(hi));
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = squared_residual(points, curve, c.exp(), opts)?;
    let mut fd = squared_residual(points, curve, d.exp(), opts)?;
    while b - a > 1e-9 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = squared_residual(points, curve, c.exp(), opts)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = squared_residual(points, curve, d.exp(), opts)?;
        }
    }
    Ok((0.5 * (a + b)).exp())
}

/// Adds envelope and least-squares fits for each curve (at `k = 1` base) to `report`.
pub fn fit_report_scales(report: &mut AnalysisReport, curves: &[QiCurve], opts: &BoundOptions) -> Result<()> {
    let points = report.points();
    if points.is_empty() {
        return Ok(());
    }
    for c in curves {
        let base = c.with_scale(1.0)?;
        report.fitted_scales.insert(base.id(), fit_scale(&points, &base, opts)?);
    }
    Ok(())
}
