//! CSV ingestion of price or residual series and persistence of results.
//!
//! Every file written here starts with `# key: value` header lines carrying
//! the library version and whatever run configuration the caller attaches.
//! Readers skip those lines, so outputs can be fed back as inputs. Numbers
//! are written in Rust's shortest round-trip form, which never needs more
//! than 17 significant digits and parses back to the same bits.

use std::collections::HashMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::copula::{CopulaKind, GumbelAlpha, ModelParams};
use crate::error::{Error, Result};
use crate::infer::{CopulaFamily, FitResult, LocalFitRow, LocalFitSeries};
use crate::special_fn::Correlation;
use crate::tail::{ChiEstimate, TailLimits, TailSummary};

/// Default floor on the number of aligned rows.
pub const MIN_ALIGNED_ROWS: usize = 10;

/// Which columns of a CSV file hold one asset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub date_column: String,
    pub value_column: String,
    /// Values are pre-filtered residuals: any finite value is accepted and
    /// no returns are computed.
    pub residuals: bool,
}

impl Schema {
    pub fn prices(date_column: &str, value_column: &str) -> Self {
        Self {
            date_column: date_column.to_string(),
            value_column: value_column.to_string(),
            residuals: false,
        }
    }

    pub fn residuals(date_column: &str, value_column: &str) -> Self {
        Self {
            residuals: true,
            ..Self::prices(date_column, value_column)
        }
    }
}

/// A dated series of one asset: prices (strictly positive) or residuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    pub label: String,
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
    residuals: bool,
    /// Rows skipped for missing values while loading.
    pub dropped: usize,
}

impl PriceSeries {
    /// Validates strictly increasing dates and, for prices, positive values.
    pub fn new(label: &str, dates: Vec<NaiveDate>, values: Vec<f64>, residuals: bool) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::domain("dates and values differ in length"));
        }
        if let Some(w) = dates.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::Ingestion(format!(
                "{label}: dates must be strictly increasing ({} is followed by {})",
                dates[w],
                dates[w + 1]
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite() || (!residuals && *v <= 0.0)) {
            return Err(Error::domain(format!(
                "{label}: value {} on {} is not a positive price",
                values[j], dates[j]
            )));
        }
        Ok(Self {
            label: label.to_string(),
            dates,
            values,
            residuals,
            dropped: 0,
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_residuals(&self) -> bool {
        self.residuals
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Two series aligned on their common dates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSeries {
    pub labels: (String, String),
    pub dates: Vec<NaiveDate>,
    pub values: Vec<(f64, f64)>,
    /// Dates present in only one of the inputs.
    pub dropped: usize,
    pub residuals: bool,
}

impl PairedSeries {
    /// Observations for rank transformation: log returns of the aligned
    /// prices, or the residuals themselves.
    pub fn observations(&self) -> Result<Vec<(f64, f64)>> {
        if self.residuals {
            return Ok(self.values.clone());
        }
        let split = |f: fn(&(f64, f64)) -> f64| -> Result<Vec<f64>> {
            let s = PriceSeries::new(
                "aligned",
                self.dates.clone(),
                self.values.iter().map(f).collect(),
                false,
            )?;
            log_returns(&s)
        };
        let a = split(|v| v.0)?;
        let b = split(|v| v.1)?;
        Ok(a.into_iter().zip(b).collect())
    }
}

fn is_missing(cell: &str) -> bool {
    matches!(cell.trim(), "" | "NA" | "N/A" | "NaN" | "nan" | "null" | "NULL")
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn column(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers.iter().position(|h| h == name).ok_or_else(|| {
        Error::Ingestion(format!(
            "{}: column '{name}' not found (have: {})",
            path.display(),
            headers.iter().collect::<Vec<_>>().join(", ")
        ))
    })
}

fn parse_error(path: &Path, line: u64, column: &str, value: &str) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        row: line as usize,
        column: column.to_string(),
        value: value.to_string(),
    }
}

/// Reads one asset. Rows with a missing date or value are dropped and
/// counted; any other unparseable cell is an error naming its line.
pub fn load_csv(path: &Path, schema: &Schema) -> Result<PriceSeries> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers()?.clone();
    let dc = column(&headers, &schema.date_column, path)?;
    let vc = column(&headers, &schema.value_column, path)?;
    let (mut dates, mut values, mut dropped) = (Vec::new(), Vec::new(), 0);
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let (d, v) = (rec.get(dc).unwrap_or(""), rec.get(vc).unwrap_or(""));
        if is_missing(d) || is_missing(v) {
            dropped += 1;
            continue;
        }
        let date =
            NaiveDate::parse_from_str(d, "%Y-%m-%d").map_err(|_| parse_error(path, line, &schema.date_column, d))?;
        let value: f64 = v
            .parse()
            .map_err(|_| parse_error(path, line, &schema.value_column, v))?;
        if !value.is_finite() {
            return Err(parse_error(path, line, &schema.value_column, v));
        }
        dates.push(date);
        values.push(value);
    }
    let label = path
        .file_stem()
        .map_or_else(|| schema.value_column.clone(), |s| s.to_string_lossy().into_owned());
    let mut s = PriceSeries::new(&label, dates, values, schema.residuals)?;
    s.dropped = dropped;
    Ok(s)
}

/// Intersection of two series by date. Fewer than `min_rows` common dates is an error.
pub fn align(a: &PriceSeries, b: &PriceSeries, min_rows: usize) -> Result<PairedSeries> {
    if a.residuals != b.residuals {
        return Err(Error::Ingestion(
            "cannot align a price series with a residual series".into(),
        ));
    }
    let lookup: HashMap<NaiveDate, f64> = b.dates.iter().copied().zip(b.values.iter().copied()).collect();
    let mut dates = Vec::new();
    let mut values = Vec::new();
    for (d, &v) in a.dates.iter().zip(&a.values) {
        if let Some(&w) = lookup.get(d) {
            dates.push(*d);
            values.push((v, w));
        }
    }
    if dates.len() < min_rows {
        return Err(Error::Ingestion(format!(
            "only {} aligned rows between {} and {}; need at least {min_rows}",
            dates.len(),
            a.label,
            b.label
        )));
    }
    let dropped = a.len() + b.len() - 2 * dates.len();
    Ok(PairedSeries {
        labels: (a.label.clone(), b.label.clone()),
        dates,
        values,
        dropped,
        residuals: a.residuals,
    })
}

/// `r_t = log p_t − log p_{t−1}`.
///
/// ```
/// use asymtail::io::{log_returns, PriceSeries};
/// use chrono::NaiveDate;
/// let d = |k| NaiveDate::from_ymd_opt(2024, 1, k).unwrap();
/// let s = PriceSeries::new("x", vec![d(1), d(2)], vec![100.0, 110.0], false).unwrap();
/// assert!((log_returns(&s).unwrap()[0] - 0.09531).abs() < 1e-5);
/// ```
pub fn log_returns(s: &PriceSeries) -> Result<Vec<f64>> {
    if s.residuals {
        return Err(Error::domain(format!("{} holds residuals, not prices", s.label)));
    }
    if s.len() < 2 {
        return Err(Error::domain(format!(
            "{} needs at least 2 prices for returns",
            s.label
        )));
    }
    Ok(s.values.windows(2).map(|w| w[1].ln() - w[0].ln()).collect())
}

/// `# key: value` lines at the top of every output.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Header {
    entries: Vec<(String, String)>,
}

impl Header {
    /// A header naming the library and its version.
    pub fn new() -> Self {
        Self::default().with(
            "library",
            concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")),
        )
    }

    pub fn with(mut self, key: &str, value: impl Into<String>) -> Self {
        self.entries.push((key.to_string(), value.into()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|e| e.0 == key).map(|e| e.1.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    fn render(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("# {k}: {}\n", v.replace('\n', " ")))
            .collect()
    }

    /// Header lines of `text`, up to the first line not starting with `#`.
    pub fn parse(text: &str) -> Self {
        let entries = text
            .lines()
            .take_while(|l| l.starts_with('#'))
            .filter_map(|l| {
                let (k, v) = l[1..].split_once(':')?;
                Some((k.trim().to_string(), v.trim().to_string()))
            })
            .collect();
        Self { entries }
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(Self::parse(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?))
    }
}

/// Writes `body` next to `path` and renames it into place.
fn write_atomic(path: &Path, body: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::domain(format!("{} is not a file path", path.display())))?;
    let tmp: PathBuf = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(body)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

fn csv_body(header: &Header, columns: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut out = header.render().into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(columns)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush().map_err(|e| Error::io("<buffer>", e))?;
    }
    Ok(out)
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn parse_num(path: &Path, line: u64, column: &str, cell: &str) -> Result<f64> {
    cell.parse().map_err(|_| parse_error(path, line, column, cell))
}

/// Fit result as a JSON object under the header, with the parameters
/// repeated at top level by name.
pub fn write_fit(path: &Path, header: &Header, fit: &FitResult) -> Result<()> {
    let mut obj = serde_json::Map::new();
    for (k, v) in header.entries() {
        obj.insert(k.clone(), serde_json::Value::String(v.clone()));
    }
    let params: serde_json::Map<String, serde_json::Value> = fit
        .parameters()
        .into_iter()
        .map(|(k, v)| (k.to_string(), serde_json::json!(v)))
        .collect();
    obj.insert("parameters".into(), serde_json::Value::Object(params));
    obj.insert("result".into(), serde_json::to_value(fit)?);
    let mut body = header.render();
    body.push_str(&serde_json::to_string_pretty(&serde_json::Value::Object(obj))?);
    body.push('\n');
    write_atomic(path, body.as_bytes())
}

pub fn read_fit(path: &Path) -> Result<FitResult> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let json: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n");
    let mut v: serde_json::Value = serde_json::from_str(&json)?;
    let r = v
        .get_mut("result")
        .map(serde_json::Value::take)
        .ok_or_else(|| Error::Ingestion(format!("{}: no 'result' object", path.display())))?;
    Ok(serde_json::from_value(r)?)
}

/// Pairs with the given column names, e.g. `("u1", "u2")`.
pub fn write_pairs(path: &Path, header: &Header, columns: (&str, &str), pairs: &[(f64, f64)]) -> Result<()> {
    let body = csv_body(
        header,
        &[columns.0, columns.1],
        pairs.iter().map(|&(a, b)| vec![num(a), num(b)]),
    )?;
    write_atomic(path, &body)
}

/// Model samples with both scales: `x1, x2, u1, u2`.
pub fn write_model_sample(path: &Path, header: &Header, xs: &[(f64, f64)], us: &[(f64, f64)]) -> Result<()> {
    if xs.len() != us.len() {
        return Err(Error::domain("sample scales differ in length"));
    }
    let rows = xs
        .iter()
        .zip(us)
        .map(|(x, u)| vec![num(x.0), num(x.1), num(u.0), num(u.1)]);
    write_atomic(path, &csv_body(header, &["x1", "x2", "u1", "u2"], rows)?)
}

/// Two named numeric columns. Rows with a missing cell are dropped.
pub fn read_pairs(path: &Path, columns: (&str, &str)) -> Result<Vec<(f64, f64)>> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers()?.clone();
    let (a, b) = (column(&headers, columns.0, path)?, column(&headers, columns.1, path)?);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let (x, y) = (rec.get(a).unwrap_or(""), rec.get(b).unwrap_or(""));
        if is_missing(x) || is_missing(y) {
            continue;
        }
        out.push((
            parse_num(path, line, columns.0, x)?,
            parse_num(path, line, columns.1, y)?,
        ));
    }
    Ok(out)
}

/// Column names of a CSV file, after any header lines.
pub fn read_columns(path: &Path) -> Result<Vec<String>> {
    Ok(reader(path)?.headers()?.iter().map(str::to_string).collect())
}

const SERIES_KEY: &str = "series";

/// Local fit series: `index, delta_l, delta_u, rho, chi_l, chi_u, flags,
/// weight_mass`, with an `alpha` column after `rho` for Gumbel fits.
/// Cells for parameters the family lacks are empty.
pub fn write_local_series(path: &Path, header: &Header, s: &LocalFitSeries) -> Result<()> {
    let meta = serde_json::json!({
        "family": s.family,
        "method": s.method,
        "tau": s.tau,
        "stride": s.stride,
        "chi_levels": s.chi_levels,
    });
    let header = header.clone().with(SERIES_KEY, meta.to_string());
    let gumbel = s.family == CopulaFamily::Gumbel;
    let mut cols = vec!["index", "delta_l", "delta_u", "rho"];
    if gumbel {
        cols.push("alpha");
    }
    cols.extend(["chi_l", "chi_u", "flags", "weight_mass"]);
    let rows = s.rows.iter().map(|r| {
        let (dl, du, rho, alpha) = match r.kind {
            CopulaKind::Model(p) => (num(p.delta_l()), num(p.delta_u()), num(p.rho()), None),
            CopulaKind::Gaussian(c) => (String::new(), String::new(), num(c.value()), None),
            CopulaKind::Gumbel(a) => (String::new(), String::new(), String::new(), Some(num(a.value()))),
        };
        let mut v = vec![r.index.to_string(), dl, du, rho];
        v.extend(alpha);
        v.extend([num(r.chi_l), num(r.chi_u), r.flags(), num(r.weight_mass)]);
        v
    });
    write_atomic(path, &csv_body(&header, &cols, rows)?)
}

#[derive(Deserialize)]
struct SeriesMeta {
    family: CopulaFamily,
    method: crate::infer::Method,
    tau: f64,
    stride: usize,
    chi_levels: (f64, f64),
}

pub fn read_local_series(path: &Path) -> Result<LocalFitSeries> {
    let header = Header::read(path)?;
    let meta: SeriesMeta = serde_json::from_str(
        header
            .get(SERIES_KEY)
            .ok_or_else(|| Error::Ingestion(format!("{}: missing '{SERIES_KEY}' header", path.display())))?,
    )?;
    let mut rdr = reader(path)?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| column(&headers, name, path);
    let (ci, cdl, cdu, crho) = (col("index")?, col("delta_l")?, col("delta_u")?, col("rho")?);
    let calpha = col("alpha").ok();
    let (cl, cu, cf, cw) = (col("chi_l")?, col("chi_u")?, col("flags")?, col("weight_mass")?);
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let get = |c: usize, name: &str| parse_num(path, line, name, rec.get(c).unwrap_or(""));
        let bad = |e: Error| match e {
            Error::Domain(m) => Error::Ingestion(format!("{}: line {line}: {m}", path.display())),
            e => e,
        };
        let kind = match meta.family {
            CopulaFamily::Model => CopulaKind::Model(
                ModelParams::new(get(cdl, "delta_l")?, get(cdu, "delta_u")?, get(crho, "rho")?).map_err(bad)?,
            ),
            CopulaFamily::Gaussian => CopulaKind::Gaussian(Correlation::new(get(crho, "rho")?).map_err(bad)?),
            CopulaFamily::Gumbel => {
                let c = calpha.ok_or_else(|| Error::Ingestion(format!("{}: missing alpha column", path.display())))?;
                CopulaKind::Gumbel(GumbelAlpha::new(get(c, "alpha")?).map_err(bad)?)
            }
        };
        let flags = rec.get(cf).unwrap_or("");
        let has = |f: &str| flags.split_whitespace().any(|x| x == f);
        let index = rec.get(ci).unwrap_or("");
        rows.push(LocalFitRow {
            index: index.parse().map_err(|_| parse_error(path, line, "index", index))?,
            kind,
            chi_l: get(cl, "chi_l")?,
            chi_u: get(cu, "chi_u")?,
            weight_mass: get(cw, "weight_mass")?,
            solved: !has("interpolated"),
            converged: !has("not-converged"),
            low_information: has("low-information"),
        });
    }
    Ok(LocalFitSeries {
        family: meta.family,
        method: meta.method,
        tau: meta.tau,
        stride: meta.stride,
        chi_levels: meta.chi_levels,
        rows,
    })
}

const LIMITS_KEY: &str = "limits";

/// Curves as `t, chi_l, chi_u`; limits, when present, as JSON in the header.
pub fn write_tail_summary(path: &Path, header: &Header, s: &TailSummary) -> Result<()> {
    if s.chi_l_curve.len() != s.chi_u_curve.len() || s.chi_l_curve.iter().zip(&s.chi_u_curve).any(|(a, b)| a.0 != b.0) {
        return Err(Error::domain("lower and upper curves must share their grid"));
    }
    let mut header = header.clone();
    if let Some(l) = &s.limits {
        header = header.with(LIMITS_KEY, serde_json::to_string(l)?);
    }
    let rows = s
        .chi_l_curve
        .iter()
        .zip(&s.chi_u_curve)
        .map(|(l, u)| vec![num(l.0), num(l.1), num(u.1)]);
    write_atomic(path, &csv_body(&header, &["t", "chi_l", "chi_u"], rows)?)
}

pub fn read_tail_summary(path: &Path) -> Result<TailSummary> {
    let header = Header::read(path)?;
    let limits: Option<TailLimits> = header.get(LIMITS_KEY).map(serde_json::from_str).transpose()?;
    let mut rdr = reader(path)?;
    let h = rdr.headers()?.clone();
    let (ct, cl, cu) = (
        column(&h, "t", path)?,
        column(&h, "chi_l", path)?,
        column(&h, "chi_u", path)?,
    );
    let (mut lo, mut up) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let get = |c: usize, name: &str| parse_num(path, line, name, rec.get(c).unwrap_or(""));
        let t = get(ct, "t")?;
        lo.push((t, get(cl, "chi_l")?));
        up.push((t, get(cu, "chi_u")?));
    }
    Ok(TailSummary {
        chi_l_curve: lo,
        chi_u_curve: up,
        limits,
    })
}

/// Moving-window estimates as `index, estimate, lo, hi`.
pub fn write_chi_estimates(path: &Path, header: &Header, est: &[ChiEstimate]) -> Result<()> {
    let rows = est
        .iter()
        .enumerate()
        .map(|(i, e)| vec![i.to_string(), num(e.estimate), num(e.lo), num(e.hi)]);
    write_atomic(path, &csv_body(header, &["index", "estimate", "lo", "hi"], rows)?)
}

/// Arbitrary rows under named columns.
pub fn write_table(path: &Path, header: &Header, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
    write_atomic(path, &csv_body(header, columns, rows.iter().cloned())?)
}

/// Writes `text` atomically under the header.
pub fn write_text(path: &Path, header: &Header, text: &str) -> Result<()> {
    let mut body = header.render();
    body.push_str(text);
    write_atomic(path, body.as_bytes())
}
