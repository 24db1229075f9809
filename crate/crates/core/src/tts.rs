//! Time-to-solution metrics, quantile summaries, scaling fits and CSV
//! exchange. Times are microseconds everywhere.

use std::fmt;
use std::io::{Read, Write};

use thiserror::Error;

/// Target confidence of the repeated-attempt definition.
pub const DEFAULT_CONFIDENCE: f64 = 0.99;

/// Default exponent of the exponential model `ln TTS = a + b·n^γ`.
pub const DEFAULT_GAMMA: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TtsError {
    #[error("time per attempt must be positive and finite, got {0}")]
    InvalidTime(f64),
    #[error("probability must lie in [0, 1], got {0}")]
    InvalidProbability(f64),
    #[error("confidence must lie in (0, 1), got {0}")]
    InvalidConfidence(f64),
    #[error("record has no success probability")]
    MissingProbability,
    #[error("record has neither a time per attempt nor a finite tts1")]
    MissingTime,
    #[error("no values to summarize")]
    Empty,
    #[error("value {0} cannot be summarized")]
    InvalidValue(f64),
    #[error("scaling fit needs at least 3 rows, got {0}")]
    TooFewRows(usize),
    #[error("scaling fit needs positive finite medians and sizes")]
    NonPositive,
    #[error("csv: {0}")]
    Csv(String),
    #[error("unrecognized header {0:?}; expected solver,n,T_us,p or solver,n,tts1_us,p")]
    Header(Vec<String>),
}

impl From<csv::Error> for TtsError {
    fn from(e: csv::Error) -> Self {
        TtsError::Csv(e.to_string())
    }
}

/// A time-to-solution value. Zero success probability gives `Infinite`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tts {
    Finite(f64),
    Infinite,
}

impl Tts {
    pub fn value(self) -> Option<f64> {
        match self {
            Tts::Finite(v) => Some(v),
            Tts::Infinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Tts::Finite(_))
    }

    /// `f64::INFINITY` for `Infinite`, for sorting and quantiles.
    pub fn as_f64(self) -> f64 {
        self.value().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for Tts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tts::Finite(v) => write!(f, "{v}"),
            Tts::Infinite => f.write_str("inf"),
        }
    }
}

fn check_time(t: f64) -> Result<(), TtsError> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(TtsError::InvalidTime(t))
    }
}

fn check_probability(p: f64) -> Result<(), TtsError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(TtsError::InvalidProbability(p))
    }
}

/// Expected time to the first success: `T / p`.
pub fn tts1(t: f64, p: f64) -> Result<Tts, TtsError> {
    check_time(t)?;
    check_probability(p)?;
    Ok(if p == 0.0 { Tts::Infinite } else { Tts::Finite(t / p) })
}

/// Time to succeed at least once with confidence `s`:
/// `T · log(1 − s) / log(1 − p)`, equal to `T` at `p = s` and at `p = 1`.
pub fn tts2(t: f64, p: f64, s: f64) -> Result<Tts, TtsError> {
    check_time(t)?;
    check_probability(p)?;
    if !(s > 0.0 && s < 1.0) {
        return Err(TtsError::InvalidConfidence(s));
    }
    Ok(if p == 0.0 {
        Tts::Infinite
    } else if p == 1.0 || p == s {
        Tts::Finite(t)
    } else {
        Tts::Finite(t * ((-s).ln_1p() / (-p).ln_1p()))
    })
}

/// Attempt length minimizing `tts2` given first-hit sweep counts of
/// independent runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalBudget {
    pub sweeps: usize,
    pub p: f64,
    /// Time per attempt at this budget.
    pub t_us: f64,
    pub tts2: Tts,
}

/// Chooses the budget `B` among observed hit counts minimizing
/// `tts2(B·us_per_sweep, p(B))`, where `p(B)` is the fraction of runs that
/// hit within `B` sweeps. Without hits the budget is `max_sweeps` and
/// `tts2` is infinite. Ties go to the smaller budget.
pub fn optimal_budget(
    hits: &[Option<usize>],
    max_sweeps: usize,
    us_per_sweep: f64,
    s: f64,
) -> Result<OptimalBudget, TtsError> {
    if hits.is_empty() {
        return Err(TtsError::Empty);
    }
    check_time(us_per_sweep)?;
    let runs = hits.len() as f64;
    let mut sorted: Vec<usize> = hits.iter().flatten().map(|&h| h.max(1)).collect();
    sorted.sort_unstable();
    let mut best: Option<OptimalBudget> = None;
    for (k, &b) in sorted.iter().enumerate() {
        if sorted.get(k + 1) == Some(&b) {
            continue;
        }
        let p = (k + 1) as f64 / runs;
        let t = b as f64 * us_per_sweep;
        let v = tts2(t, p, s)?;
        if best.is_none_or(|o| v.as_f64() < o.tts2.as_f64()) {
            best = Some(OptimalBudget {
                sweeps: b,
                p,
                t_us: t,
                tts2: v,
            });
        }
    }
    Ok(best.unwrap_or(OptimalBudget {
        sweeps: max_sweeps,
        p: 0.0,
        t_us: max_sweeps as f64 * us_per_sweep,
        tts2: Tts::Infinite,
    }))
}

/// Size and generator parameters of an instance ensemble.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InstanceClass {
    pub topology: String,
    pub n: usize,
    pub alpha: Option<f64>,
    pub rho: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TtsRecord {
    pub solver: String,
    pub class: InstanceClass,
    /// Time per attempt in microseconds.
    pub t_us: Option<f64>,
    pub p: Option<f64>,
    pub tts1: Option<Tts>,
    pub tts2: Option<Tts>,
    pub tags: Vec<String>,
}

impl TtsRecord {
    /// Record for one instance with both metrics filled in.
    pub fn measured(solver: &str, class: InstanceClass, t_us: f64, p: f64) -> Result<Self, TtsError> {
        Ok(TtsRecord {
            solver: solver.into(),
            class,
            t_us: Some(t_us),
            p: Some(p),
            tts1: Some(tts1(t_us, p)?),
            tts2: Some(tts2(t_us, p, DEFAULT_CONFIDENCE)?),
            tags: Vec::new(),
        })
    }
}

/// Fills in `tts2` (and `T` when only `tts1` was given) from `p`.
pub fn convert_tts1_to_tts2(record: &TtsRecord) -> Result<TtsRecord, TtsError> {
    let p = record.p.ok_or(TtsError::MissingProbability)?;
    check_probability(p)?;
    let t = match (record.t_us, record.tts1) {
        (Some(t), _) => t,
        (None, Some(Tts::Finite(v))) => v * p,
        _ => return Err(TtsError::MissingTime),
    };
    let mut out = record.clone();
    out.t_us = Some(t);
    out.tts1 = Some(tts1(t, p)?);
    out.tts2 = Some(tts2(t, p, DEFAULT_CONFIDENCE)?);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantiles {
    pub q05: f64,
    pub median: f64,
    pub q95: f64,
}

/// Quantile `q` of sorted data by linear interpolation between order
/// statistics at position `(len − 1)·q`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 || lo + 1 >= sorted.len() {
        return sorted[lo];
    }
    let (a, b) = (sorted[lo], sorted[lo + 1]);
    if b.is_infinite() {
        return b;
    }
    a + frac * (b - a)
}

/// 5%, 50% and 95% quantiles. Infinite values sort last.
pub fn tts_distribution(values: &[f64]) -> Result<Quantiles, TtsError> {
    if values.is_empty() {
        return Err(TtsError::Empty);
    }
    if let Some(&bad) = values.iter().find(|v| v.is_nan()) {
        return Err(TtsError::InvalidValue(bad));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    Ok(Quantiles {
        q05: quantile_sorted(&sorted, 0.05),
        median: quantile_sorted(&sorted, 0.5),
        q95: quantile_sorted(&sorted, 0.95),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRow {
    pub n: usize,
    pub q05: f64,
    pub median: f64,
    pub q95: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitModel {
    /// `ln TTS = a + b·ln n`.
    Power,
    /// `ln TTS = a + b·n^γ`.
    Exponential { gamma: f64 },
    /// Exponential with `γ` chosen to maximize R².
    ExponentialFreeGamma,
}

impl fmt::Display for FitModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FitModel::Power => f.write_str("power"),
            FitModel::Exponential { gamma } => write!(f, "exponential(gamma={gamma})"),
            FitModel::ExponentialFreeGamma => f.write_str("exponential(gamma=free)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub model: FitModel,
    pub intercept: f64,
    pub slope: f64,
    /// Exponent of `n` used by exponential models.
    pub gamma: Option<f64>,
    /// Coefficient of determination of `ln TTS`.
    pub r2: f64,
    /// Residual sum of squares of `ln TTS`.
    pub ssr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingTable {
    pub solver: String,
    pub rows: Vec<ScalingRow>,
    pub fits: Vec<FitResult>,
}

impl ScalingTable {
    pub fn new(solver: &str, mut rows: Vec<ScalingRow>) -> Self {
        rows.sort_by_key(|r| r.n);
        ScalingTable {
            solver: solver.into(),
            rows,
            fits: Vec::new(),
        }
    }

    /// Fits the power and default exponential models when possible.
    pub fn with_default_fits(mut self) -> Self {
        for model in [FitModel::Power, FitModel::Exponential { gamma: DEFAULT_GAMMA }] {
            if let Ok(fit) = fit_scaling(&self.rows, model) {
                self.fits.push(fit);
            }
        }
        self
    }

    pub fn fit(&self, kind: &str) -> Option<&FitResult> {
        self.fits.iter().find(|f| match f.model {
            FitModel::Power => kind == "power",
            _ => kind == "exponential",
        })
    }
}

/// Least squares `y = a + b·x`; returns `(a, b, R², SSR)`. A perfect fit,
/// including constant `y`, has R² = 1.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    let a = my - b * mx;
    let ssr: f64 = x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).sum();
    let sst: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let r2 = if sst == 0.0 { if ssr == 0.0 { 1.0 } else { 0.0 } } else { 1.0 - ssr / sst };
    (a, b, r2, ssr)
}

/// Fits `model` to the medians of `rows`.
pub fn fit_scaling(rows: &[ScalingRow], model: FitModel) -> Result<FitResult, TtsError> {
    if rows.len() < 3 {
        return Err(TtsError::TooFewRows(rows.len()));
    }
    if rows.iter().any(|r| !(r.median > 0.0 && r.median.is_finite()) || r.n == 0) {
        return Err(TtsError::NonPositive);
    }
    let y: Vec<f64> = rows.iter().map(|r| r.median.ln()).collect();
    let fit_gamma = |gamma: f64| {
        let x: Vec<f64> = rows.iter().map(|r| (r.n as f64).powf(gamma)).collect();
        linear_fit(&x, &y)
    };
    let (gamma, (a, b, r2, ssr)) = match model {
        FitModel::Power => {
            let x: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
            (None, linear_fit(&x, &y))
        }
        FitModel::Exponential { gamma } => (Some(gamma), fit_gamma(gamma)),
        FitModel::ExponentialFreeGamma => {
            // Grid over (0, 2] at 0.01 resolution.
            let best = (1..=200)
                .map(|k| k as f64 / 100.0)
                .map(|g| (g, fit_gamma(g)))
                .max_by(|a, b| a.1 .2.total_cmp(&b.1 .2))
                .unwrap();
            (Some(best.0), best.1)
        }
    };
    Ok(FitResult {
        model,
        intercept: a,
        slope: b,
        gamma,
        r2,
        ssr,
    })
}

/// Writes `n,q05_us,median_us,q95_us`.
pub fn write_scaling_csv<W: Write>(table: &ScalingTable, out: W) -> Result<(), TtsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "q05_us", "median_us", "q95_us"])?;
    for r in &table.rows {
        w.write_record([r.n.to_string(), r.q05.to_string(), r.median.to_string(), r.q95.to_string()])?;
    }
    w.flush().map_err(|e| TtsError::Csv(e.to_string()))?;
    Ok(())
}

/// Key/value summary of the fits of a table.
pub fn fit_summary(table: &ScalingTable) -> String {
    let mut s = format!("solver = {}\n", table.solver);
    for f in &table.fits {
        let key = match f.model {
            FitModel::Power => "power".to_string(),
            _ => "exponential".to_string(),
        };
        s.push_str(&format!("{key}.model = {}\n", f.model));
        s.push_str(&format!("{key}.intercept = {}\n", f.intercept));
        s.push_str(&format!("{key}.slope = {}\n", f.slope));
        if let Some(g) = f.gamma {
            s.push_str(&format!("{key}.gamma = {g}\n"));
        }
        s.push_str(&format!("{key}.r2 = {}\n", f.r2));
    }
    if let (Some(p), Some(e)) = (table.fit("power"), table.fit("exponential")) {
        let preferred = if e.r2 > p.r2 { "exponential" } else { "power" };
        s.push_str(&format!("preferred = {preferred}\n"));
    }
    s
}

const RECORD_HEADER: [&str; 9] = ["solver", "topology", "n", "alpha", "rho", "T_us", "p", "tts1_us", "tts2_us"];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_records_csv<W: Write>(records: &[TtsRecord], out: W) -> Result<(), TtsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_HEADER)?;
    for r in records {
        w.write_record([
            r.solver.clone(),
            r.class.topology.clone(),
            r.class.n.to_string(),
            opt(r.class.alpha),
            opt(r.class.rho),
            opt(r.t_us),
            opt(r.p),
            opt(r.tts1),
            opt(r.tts2),
        ])?;
    }
    w.flush().map_err(|e| TtsError::Csv(e.to_string()))?;
    Ok(())
}

fn parse_tts(s: &str) -> Option<Tts> {
    match s {
        "" => None,
        "inf" => Some(Tts::Infinite),
        v => v.parse().ok().map(Tts::Finite),
    }
}

/// Reads records written by [`write_records_csv`].
pub fn read_records_csv<R: Read>(input: R) -> Result<Vec<TtsRecord>, TtsError> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row?;
        let field = |k: usize| row.get(k).unwrap_or("");
        let num = |k: usize| -> Result<Option<f64>, TtsError> {
            match field(k) {
                "" => Ok(None),
                v => v.parse().map(Some).map_err(|_| TtsError::Csv(format!("bad number {v:?}"))),
            }
        };
        out.push(TtsRecord {
            solver: field(0).into(),
            class: InstanceClass {
                topology: field(1).into(),
                n: field(2).parse().map_err(|_| TtsError::Csv(format!("bad n {:?}", field(2))))?,
                alpha: num(3)?,
                rho: num(4)?.map(|v| v as u32),
            },
            t_us: num(5)?,
            p: num(6)?,
            tts1: parse_tts(field(7)),
            tts2: parse_tts(field(8)),
            tags: Vec::new(),
        });
    }
    Ok(out)
}

/// A row of an external timing file that could not be used.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectedRow {
    /// 1-based line number in the file, counting the header.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ImportReport {
    pub records: Vec<TtsRecord>,
    pub rejected: Vec<RejectedRow>,
}

/// Reads `solver,n,T_us,p` or `solver,n,tts1_us,p` rows and normalizes them
/// to records carrying both metrics. Bad rows are reported, not fatal.
pub fn import_external_timings<R: Read>(input: R) -> Result<ImportReport, TtsError> {
    let mut rd = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut rows = rd.records();
    let Some(header) = rows.next() else {
        return Ok(ImportReport::default());
    };
    let header: Vec<String> = header?.iter().map(|s| s.to_string()).collect();
    let lower: Vec<String> = header.iter().map(|s| s.to_ascii_lowercase()).collect();
    let time_is_tts1 = match lower.iter().map(String::as_str).collect::<Vec<_>>()[..] {
        ["solver", "n", "t_us", "p"] => false,
        ["solver", "n", "tts1_us", "p"] => true,
        _ => return Err(TtsError::Header(header)),
    };
    let mut report = ImportReport::default();
    for (k, row) in rows.enumerate() {
        let line = k + 2;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                report.rejected.push(RejectedRow {
                    line,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        match import_row(&row, time_is_tts1) {
            Ok(r) => report.records.push(r),
            Err(reason) => report.rejected.push(RejectedRow { line, reason }),
        }
    }
    Ok(report)
}

fn import_row(row: &csv::StringRecord, time_is_tts1: bool) -> Result<TtsRecord, String> {
    if row.len() != 4 {
        return Err(format!("expected 4 fields, found {}", row.len()));
    }
    let n: usize = row[1].parse().map_err(|_| format!("bad n {:?}", &row[1]))?;
    let time: f64 = row[2].parse().map_err(|_| format!("bad time {:?}", &row[2]))?;
    let p: f64 = row[3].parse().map_err(|_| format!("bad p {:?}", &row[3]))?;
    if !(0.0..=1.0).contains(&p) {
        return Err(format!("p = {p} outside [0, 1]"));
    }
    let mut record = TtsRecord {
        solver: row[0].to_string(),
        class: InstanceClass {
            topology: "external".into(),
            n,
            ..Default::default()
        },
        p: Some(p),
        ..Default::default()
    };
    if time_is_tts1 {
        record.tts1 = Some(Tts::Finite(time));
    } else {
        record.t_us = Some(time);
    }
    convert_tts1_to_tts2(&record).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn tts1_examples() {
        assert_eq!(tts1(1.0, 1.0).unwrap(), Tts::Finite(1.0));
        assert_eq!(tts1(1.0, 0.5).unwrap(), Tts::Finite(2.0));
        assert_eq!(tts1(1.0, 0.0).unwrap(), Tts::Infinite);
        assert!(tts1(0.0, 0.5).is_err());
        assert!(tts1(1.0, 1.5).is_err());
    }

    #[test]
    fn tts2_examples() {
        assert_eq!(tts2(1.0, 0.99, 0.99).unwrap(), Tts::Finite(1.0));
        let v = tts2(1.0, 0.5, 0.99).unwrap().value().unwrap();
        assert!(approx(v, 6.643856189774724, 1e-12), "{v}");
        assert_eq!(tts2(1.0, 1.0, 0.99).unwrap(), Tts::Finite(1.0));
        assert_eq!(tts2(1.0, 0.0, 0.99).unwrap(), Tts::Infinite);
        assert!(tts2(1.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn optimal_budget_examples() {
        // Hits after 1, 2, 2 and 10 sweeps, one miss: budget 2 gives
        // p = 0.6 and tts2 = 2·log(0.01)/log(0.4).
        let hits = [Some(2), None, Some(1), Some(10), Some(2)];
        let o = optimal_budget(&hits, 100, 1.0, 0.99).unwrap();
        assert_eq!(o.sweeps, 2);
        assert_eq!(o.p, 0.6);
        assert!(approx(o.tts2.value().unwrap(), 2.0 * 0.01f64.ln() / 0.4f64.ln(), 1e-12));
        let all = optimal_budget(&[Some(3); 4], 9, 2.0, 0.99).unwrap();
        assert_eq!((all.sweeps, all.p, all.tts2), (3, 1.0, Tts::Finite(6.0)));
        let none = optimal_budget(&[None, None], 50, 1.0, 0.99).unwrap();
        assert_eq!((none.sweeps, none.tts2), (50, Tts::Infinite));
        assert_eq!(optimal_budget(&[], 1, 1.0, 0.99), Err(TtsError::Empty));
    }

    #[test]
    fn conversion() {
        let r = TtsRecord {
            tts1: Some(Tts::Finite(2.0)),
            p: Some(0.5),
            ..Default::default()
        };
        let c = convert_tts1_to_tts2(&r).unwrap();
        assert_eq!(c.t_us, Some(1.0));
        assert!(approx(c.tts2.unwrap().value().unwrap(), 6.643856189774724, 1e-12));
        let t = 3.7;
        let r = TtsRecord {
            tts1: Some(Tts::Finite(t / 0.99)),
            p: Some(0.99),
            ..Default::default()
        };
        assert!(approx(convert_tts1_to_tts2(&r).unwrap().tts2.unwrap().value().unwrap(), t, 1e-12));
        let missing = TtsRecord {
            tts1: Some(Tts::Finite(2.0)),
            ..Default::default()
        };
        assert_eq!(convert_tts1_to_tts2(&missing), Err(TtsError::MissingProbability));
    }

    #[test]
    fn quantiles() {
        let q = tts_distribution(&[7.0]).unwrap();
        assert_eq!((q.q05, q.median, q.q95), (7.0, 7.0, 7.0));
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        let q = tts_distribution(&v).unwrap();
        assert!(approx(q.q05, 5.95, 1e-12));
        assert!(approx(q.median, 50.5, 1e-12));
        assert!(approx(q.q95, 95.05, 1e-12));
        assert_eq!(tts_distribution(&[]), Err(TtsError::Empty));
        let q = tts_distribution(&[1.0, 2.0, f64::INFINITY]).unwrap();
        assert_eq!(q.median, 2.0);
        assert_eq!(q.q95, f64::INFINITY);
    }

    fn rows(f: impl Fn(f64) -> f64, ns: &[usize]) -> Vec<ScalingRow> {
        ns.iter()
            .map(|&n| {
                let v = f(n as f64);
                ScalingRow {
                    n,
                    q05: v,
                    median: v,
                    q95: v,
                }
            })
            .collect()
    }

    #[test]
    fn power_fit_recovers_exponent() {
        let r = rows(|n| 4.0 * n * n, &[16, 64, 256, 1024]);
        let fit = fit_scaling(&r, FitModel::Power).unwrap();
        assert!((fit.slope - 2.0).abs() < 0.01);
        assert!(approx(fit.intercept.exp(), 4.0, 1e-9));
        assert!(approx(fit.r2, 1.0, 1e-12));
        let flat = fit_scaling(&rows(|_| 3.0, &[1, 2, 3]), FitModel::Power).unwrap();
        assert_eq!(flat.slope, 0.0);
        assert_eq!(flat.r2, 1.0);
        assert_eq!(fit_scaling(&r[..2], FitModel::Power), Err(TtsError::TooFewRows(2)));
    }

    #[test]
    fn exponential_data_prefers_exponential_model() {
        let r = rows(|n| 2f64.powf(n.sqrt()), &[16, 36, 64, 100, 144, 196]);
        let p = fit_scaling(&r, FitModel::Power).unwrap();
        let e = fit_scaling(&r, FitModel::Exponential { gamma: 0.5 }).unwrap();
        assert!(e.r2 > p.r2);
        assert!(approx(e.slope, 2f64.ln(), 1e-9));
        let free = fit_scaling(&r, FitModel::ExponentialFreeGamma).unwrap();
        assert!((free.gamma.unwrap() - 0.5).abs() < 0.011);
    }

    #[test]
    fn external_import() {
        let text = "solver,n,T_us,p\ndw2000q, 256, 10, 0.5\nbad, 16, 1, 1.5\n";
        let rep = import_external_timings(text.as_bytes()).unwrap();
        assert_eq!(rep.records.len(), 1);
        let tts2 = rep.records[0].tts2.unwrap().value().unwrap();
        assert!(approx(tts2, 66.43856189774724, 1e-12));
        assert_eq!(rep.rejected.len(), 1);
        assert_eq!(rep.rejected[0].line, 3);
        assert!(rep.rejected[0].reason.contains("outside"));
        assert_eq!(import_external_timings("".as_bytes()).unwrap(), ImportReport::default());
        let t1 = import_external_timings("solver,n,tts1_us,p\nx,4,2,0.5\n".as_bytes()).unwrap();
        assert_eq!(t1.records[0].t_us, Some(1.0));
        assert!(import_external_timings("a,b\n".as_bytes()).is_err());
    }

    #[test]
    fn records_round_trip() {
        let class = InstanceClass {
            topology: "logical-square".into(),
            n: 64,
            alpha: Some(1.0),
            rho: Some(3),
        };
        let recs = vec![
            TtsRecord::measured("pticm", class.clone(), 12.5, 0.25).unwrap(),
            TtsRecord::measured("pticm", class, 12.5, 0.0).unwrap(),
        ];
        let mut buf = Vec::new();
        write_records_csv(&recs, &mut buf).unwrap();
        let back = read_records_csv(buf.as_slice()).unwrap();
        assert_eq!(back, recs);
    }
}
