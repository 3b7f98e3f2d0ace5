//! Market inputs: constituents with CDS spreads, discount curve and tranche
//! quotes, plus the flat-hazard default curves built from them.

use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::PortfolioSpec;
use crate::pricing::Tranche;

/// Market convention recovery rate.
pub const STANDARD_RECOVERY: f64 = 0.4;

/// Discount factors at increasing pillar times, log-linear in between.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscountCurve {
    pillars: Vec<(f64, f64)>,
}

impl DiscountCurve {
    /// A missing `t = 0` pillar is added with factor 1.
    pub fn new(mut pillars: Vec<(f64, f64)>) -> Result<Self> {
        if pillars.is_empty() {
            return Err(Error::invalid("discount curve needs at least one pillar"));
        }
        if let Some(&(t, df)) = pillars.iter().find(|&&(t, df)| !(t >= 0.0 && t.is_finite() && df > 0.0 && df.is_finite())) {
            return Err(Error::invalid(format!("bad discount pillar ({t}, {df})")));
        }
        if pillars.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::invalid("discount pillar times must be strictly increasing"));
        }
        if pillars[0].0 == 0.0 {
            if (pillars[0].1 - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(format!(
                    "discount factor at t = 0 is {}, must be 1",
                    pillars[0].1
                )));
            }
            pillars[0].1 = 1.0;
        } else {
            pillars.insert(0, (0.0, 1.0));
        }
        Ok(Self { pillars })
    }

    /// Continuously compounded flat rate out to `horizon`.
    pub fn flat(rate: f64, horizon: f64) -> Result<Self> {
        Self::new(vec![(0.0, 1.0), (horizon, (-rate * horizon).exp())])
    }

    pub fn pillars(&self) -> &[(f64, f64)] {
        &self.pillars
    }

    pub fn last_time(&self) -> f64 {
        self.pillars.last().map(|p| p.0).unwrap_or(0.0)
    }

    pub fn discount_factor(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::invalid(format!("discount time {t} is negative")));
        }
        let last = self.last_time();
        if t > last + 1e-12 {
            return Err(Error::invalid(format!(
                "discount time {t} beyond last pillar {last}"
            )));
        }
        let idx = self.pillars.partition_point(|&(ti, _)| ti < t);
        if idx < self.pillars.len() && self.pillars[idx].0 == t {
            return Ok(self.pillars[idx].1);
        }
        if idx >= self.pillars.len() {
            return Ok(self.pillars[self.pillars.len() - 1].1);
        }
        let (t0, d0) = self.pillars[idx - 1];
        let (t1, d1) = self.pillars[idx];
        let w = (t - t0) / (t1 - t0);
        Ok(((1.0 - w) * d0.ln() + w * d1.ln()).exp())
    }
}

/// Flat hazard rate: `p~(t) = 1 - exp(-hazard t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefaultCurve {
    pub hazard: f64,
}

impl DefaultCurve {
    pub fn new(hazard: f64) -> Result<Self> {
        if !(hazard >= 0.0 && hazard.is_finite()) {
            return Err(Error::invalid(format!("hazard {hazard} must be non-negative")));
        }
        Ok(Self { hazard })
    }

    pub fn from_spread(spread_bps: f64, recovery: f64) -> Result<Self> {
        Self::new(hazard_from_spread(spread_bps, recovery)?)
    }

    pub fn default_probability(&self, t: f64) -> f64 {
        -(-self.hazard * t.max(0.0)).exp_m1()
    }
}

/// Credit triangle: `lambda = (spread / 10000) / (1 - R)`.
pub fn hazard_from_spread(spread_bps: f64, recovery: f64) -> Result<f64> {
    if !(spread_bps >= 0.0 && spread_bps.is_finite()) {
        return Err(Error::invalid(format!("spread {spread_bps} bps must be non-negative")));
    }
    if !(0.0..1.0).contains(&recovery) {
        return Err(Error::invalid(format!("recovery {recovery} outside [0, 1)")));
    }
    Ok(spread_bps / 10_000.0 / (1.0 - recovery))
}

/// Pool constituents with their 5Y CDS spreads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Portfolio {
    pub spec: PortfolioSpec,
    pub spreads_bps: Vec<f64>,
}

impl Portfolio {
    pub fn new(spec: PortfolioSpec, spreads_bps: Vec<f64>) -> Result<Self> {
        if spreads_bps.len() != spec.len() {
            return Err(Error::LengthMismatch {
                what: "spreads vs names",
                left: spreads_bps.len(),
                right: spec.len(),
            });
        }
        for &s in &spreads_bps {
            hazard_from_spread(s, spec.recovery)?;
        }
        Ok(Self { spec, spreads_bps })
    }

    pub fn len(&self) -> usize {
        self.spec.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spec.is_empty()
    }

    pub fn default_curves(&self) -> Vec<DefaultCurve> {
        self.spreads_bps
            .iter()
            .map(|&s| DefaultCurve::from_spread(s, self.spec.recovery).expect("validated spread"))
            .collect()
    }

    /// Marginal default probabilities `p~_i(t)`.
    pub fn marginals(&self, t: f64) -> Vec<f64> {
        self.default_curves()
            .iter()
            .map(|c| c.default_probability(t))
            .collect()
    }

    /// Deterministic iTraxx-like pool: spreads scattered around
    /// `mean_spread_bps`, about one name in eight a bank, equal weights.
    pub fn synthetic(n: usize, mean_spread_bps: f64, seed: u64) -> Result<Self> {
        const SECTORS: [&str; 8] = [
            "Banking",
            "Insurance",
            "Utilities",
            "Industrials",
            "Consumer",
            "Energy",
            "Telecommunications",
            "Finance",
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut names = Vec::with_capacity(n);
        let mut sectors = Vec::with_capacity(n);
        let mut spreads = Vec::with_capacity(n);
        for i in 0..n {
            names.push(format!("NAME{:03}", i + 1));
            sectors.push(SECTORS[i % SECTORS.len()].to_string());
            let z: f64 = rng.random_range(-1.0..1.0);
            spreads.push((mean_spread_bps * (0.5 * z).exp() * 100.0).round() / 100.0);
        }
        let spec = PortfolioSpec::equally_weighted(names, sectors, STANDARD_RECOVERY, 1.0)?;
        Self::new(spec, spreads)
    }
}

/// What a quote refers to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Instrument {
    Tranche(Tranche),
    /// The untranched pool, quoted as a par spread.
    Index,
}

impl From<Instrument> for String {
    fn from(i: Instrument) -> String {
        i.to_string()
    }
}

impl TryFrom<String> for Instrument {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl Instrument {
    pub fn tranche(&self) -> Tranche {
        match self {
            Instrument::Tranche(t) => *t,
            Instrument::Index => Tranche::equity_to_senior(),
        }
    }

    /// Four standard tranches followed by the index.
    pub fn standard_set() -> Vec<Instrument> {
        Tranche::standard_set()
            .into_iter()
            .map(Instrument::Tranche)
            .chain(std::iter::once(Instrument::Index))
            .collect()
    }

    pub fn standard_quote_type(&self) -> QuoteType {
        match self {
            Instrument::Tranche(_) => QuoteType::UpfrontPct,
            Instrument::Index => QuoteType::ParSpreadBps,
        }
    }
}

impl fmt::Display for Instrument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instrument::Tranche(t) => t.fmt(f),
            Instrument::Index => f.write_str("index"),
        }
    }
}

impl FromStr for Instrument {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("index") {
            Ok(Instrument::Index)
        } else {
            s.trim().parse().map(Instrument::Tranche)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuoteType {
    /// Upfront in percent of tranche notional, 100 bps running.
    UpfrontPct,
    ParSpreadBps,
}

impl QuoteType {
    pub fn label(self) -> &'static str {
        match self {
            QuoteType::UpfrontPct => "upfront_pct",
            QuoteType::ParSpreadBps => "par_spread_bps",
        }
    }
}

impl fmt::Display for QuoteType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for QuoteType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "upfront_pct" => Ok(QuoteType::UpfrontPct),
            "par_spread_bps" => Ok(QuoteType::ParSpreadBps),
            other => Err(Error::invalid(format!(
                "unknown quote type '{other}' (expected upfront_pct or par_spread_bps)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quote {
    pub instrument: Instrument,
    pub quote: f64,
    pub quote_type: QuoteType,
}

/// Everything needed to price and calibrate on one date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketData {
    pub portfolio: Portfolio,
    pub curve: DiscountCurve,
    pub quotes: Vec<Quote>,
}

impl MarketData {
    pub fn load(
        portfolio: &Path,
        curve: &Path,
        quotes: Option<&Path>,
        recovery: f64,
    ) -> Result<Self> {
        Ok(Self {
            portfolio: load_portfolio(portfolio, recovery)?,
            curve: load_curve(curve)?,
            quotes: match quotes {
                Some(q) => load_quotes(q)?,
                None => Vec::new(),
            },
        })
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Rows of a headed CSV, each field looked up by column name.
struct Table {
    path: String,
    rows: Vec<(u64, csv::StringRecord)>,
    columns: Vec<usize>,
}

impl Table {
    fn read<R: Read>(reader: R, path: &str, required: &[&str]) -> Result<Self> {
        let parse_err = |line: u64, message: String| Error::Parse {
            path: path.to_string(),
            line,
            message,
        };
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| parse_err(1, e.to_string()))?
            .clone();
        let mut columns = Vec::with_capacity(required.len());
        for col in required {
            let idx = headers
                .iter()
                .position(|h| h.trim_start_matches('\u{feff}').eq_ignore_ascii_case(col))
                .ok_or_else(|| parse_err(1, format!("missing column '{col}'")))?;
            columns.push(idx);
        }
        let mut rows = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(|e| {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                parse_err(line, e.to_string())
            })?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            if record.iter().all(|f| f.is_empty()) {
                continue;
            }
            rows.push((line, record));
        }
        if rows.is_empty() {
            return Err(parse_err(1, "no data rows".into()));
        }
        Ok(Self {
            path: path.to_string(),
            rows,
            columns,
        })
    }

    fn field<'a>(&self, record: &'a csv::StringRecord, col: usize) -> &'a str {
        record.get(self.columns[col]).unwrap_or("")
    }

    fn number(&self, line: u64, record: &csv::StringRecord, col: usize, name: &str) -> Result<f64> {
        let raw = self.field(record, col);
        raw.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| self.error(line, format!("{name} '{raw}' is not a number")))
    }

    fn error(&self, line: u64, message: String) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line,
            message,
        }
    }
}

/// `name, sector, cds_spread_bps`; one loss unit per name.
pub fn read_portfolio<R: Read>(reader: R, path: &str, recovery: f64) -> Result<Portfolio> {
    let table = Table::read(reader, path, &["name", "sector", "cds_spread_bps"])?;
    let mut names = Vec::new();
    let mut sectors = Vec::new();
    let mut spreads = Vec::new();
    for (line, record) in &table.rows {
        let name = table.field(record, 0);
        if name.is_empty() {
            return Err(table.error(*line, "empty name".into()));
        }
        let spread = table.number(*line, record, 2, "cds_spread_bps")?;
        if spread < 0.0 {
            return Err(table.error(*line, format!("negative spread {spread}")));
        }
        names.push(name.to_string());
        sectors.push(table.field(record, 1).to_string());
        spreads.push(spread);
    }
    let spec = PortfolioSpec::equally_weighted(names, sectors, recovery, 1.0)?;
    Portfolio::new(spec, spreads)
}

pub fn load_portfolio(path: &Path, recovery: f64) -> Result<Portfolio> {
    read_portfolio(open(path)?, &path.display().to_string(), recovery)
}

/// `time_years, discount_factor`.
pub fn read_curve<R: Read>(reader: R, path: &str) -> Result<DiscountCurve> {
    let table = Table::read(reader, path, &["time_years", "discount_factor"])?;
    let mut pillars = Vec::new();
    for (line, record) in &table.rows {
        let t = table.number(*line, record, 0, "time_years")?;
        let df = table.number(*line, record, 1, "discount_factor")?;
        if t < 0.0 || df <= 0.0 {
            return Err(table.error(*line, format!("bad pillar ({t}, {df})")));
        }
        if let Some(&(prev, _)) = pillars.last() {
            if t <= prev {
                return Err(table.error(*line, format!("time {t} not after {prev}")));
            }
        }
        pillars.push((t, df));
    }
    DiscountCurve::new(pillars)
}

pub fn load_curve(path: &Path) -> Result<DiscountCurve> {
    read_curve(open(path)?, &path.display().to_string())
}

/// `instrument, quote, quote_type`.
pub fn read_quotes<R: Read>(reader: R, path: &str) -> Result<Vec<Quote>> {
    let table = Table::read(reader, path, &["instrument", "quote", "quote_type"])?;
    let mut quotes = Vec::new();
    for (line, record) in &table.rows {
        let instrument: Instrument = table
            .field(record, 0)
            .parse()
            .map_err(|e: Error| table.error(*line, e.to_string()))?;
        let quote = table.number(*line, record, 1, "quote")?;
        let quote_type: QuoteType = table
            .field(record, 2)
            .parse()
            .map_err(|e: Error| table.error(*line, e.to_string()))?;
        quotes.push(Quote {
            instrument,
            quote,
            quote_type,
        });
    }
    Ok(quotes)
}

pub fn load_quotes(path: &Path) -> Result<Vec<Quote>> {
    read_quotes(open(path)?, &path.display().to_string())
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e),
    }
}

fn write_rows<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_portfolio(path: &Path, portfolio: &Portfolio) -> Result<()> {
    let spec = &portfolio.spec;
    write_rows(
        path,
        &["name", "sector", "cds_spread_bps"],
        (0..spec.len()).map(|i| {
            vec![
                spec.names[i].clone(),
                spec.sectors[i].clone(),
                portfolio.spreads_bps[i].to_string(),
            ]
        }),
    )
}

pub fn write_curve(path: &Path, curve: &DiscountCurve) -> Result<()> {
    write_rows(
        path,
        &["time_years", "discount_factor"],
        curve
            .pillars()
            .iter()
            .map(|&(t, df)| vec![t.to_string(), df.to_string()]),
    )
}

pub fn write_quotes(path: &Path, quotes: &[Quote]) -> Result<()> {
    write_rows(
        path,
        &["instrument", "quote", "quote_type"],
        quotes.iter().map(|q| {
            vec![
                q.instrument.to_string(),
                q.quote.to_string(),
                q.quote_type.to_string(),
            ]
        }),
    )
}

/// Writes `contents` to `path`, mapping failures to [`Error::Io`].
pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    create(path)?
        .write_all(contents.as_bytes())
        .map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hazard_examples() {
        assert_eq!(hazard_from_spread(0.0, 0.4).unwrap(), 0.0);
        assert!((hazard_from_spread(60.0, 0.4).unwrap() - 0.01).abs() < 1e-17);
        assert!(hazard_from_spread(60.0, 1.0).is_err());
        assert!(hazard_from_spread(-1.0, 0.4).is_err());
        let c = DefaultCurve::new(0.01).unwrap();
        assert!((c.default_probability(5.0) - 0.048_770_575_5).abs() < 1e-10);
        assert_eq!(c.default_probability(0.0), 0.0);
    }

    #[test]
    fn discount_interpolation() {
        let c = DiscountCurve::new(vec![(1.0, 0.99), (2.0, 0.97)]).unwrap();
        assert_eq!(c.discount_factor(1.0).unwrap(), 0.99);
        assert_eq!(c.discount_factor(0.0).unwrap(), 1.0);
        let mid = c.discount_factor(1.5).unwrap();
        assert!((mid - (0.5 * 0.99f64.ln() + 0.5 * 0.97f64.ln()).exp()).abs() < 1e-16);
        assert!((mid - 0.97995).abs() < 1e-5);
        assert!(c.discount_factor(2.5).is_err());
        assert!(c.discount_factor(-0.1).is_err());
        let flat = DiscountCurve::flat(0.0, 10.0).unwrap();
        assert_eq!(flat.discount_factor(3.7).unwrap(), 1.0);
        assert!(DiscountCurve::new(vec![(0.0, 0.9)]).is_err());
        assert!(DiscountCurve::new(vec![(1.0, 0.9), (1.0, 0.8)]).is_err());
    }

    #[test]
    fn portfolio_csv_errors_carry_line_numbers() {
        let good = "name,sector,cds_spread_bps\nA,Banking,60\nB,Energy,45.5\n";
        let p = read_portfolio(good.as_bytes(), "p.csv", 0.4).unwrap();
        assert_eq!(p.spreads_bps, vec![60.0, 45.5]);
        assert_eq!(p.spec.sectors[0], "Banking");

        let bad = "name,sector,cds_spread_bps\nA,Banking,60\nB,Energy,abc\n";
        match read_portfolio(bad.as_bytes(), "p.csv", 0.4).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
        let missing = "name,spread\nA,60\n";
        assert!(matches!(
            read_portfolio(missing.as_bytes(), "p.csv", 0.4),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn quotes_round_trip_through_csv() {
        let text = "instrument,quote,quote_type\n0-3,25.5,upfront_pct\n12-100,-1.2,upfront_pct\nindex,48.3,par_spread_bps\n";
        let quotes = read_quotes(text.as_bytes(), "q.csv").unwrap();
        assert_eq!(quotes.len(), 3);
        assert_eq!(quotes[2].instrument, Instrument::Index);
        assert_eq!(quotes[1].instrument.to_string(), "12-100");
        let dir = std::env::temp_dir().join(format!("contagio-quotes-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("q.csv");
        write_quotes(&path, &quotes).unwrap();
        assert_eq!(load_quotes(&path).unwrap(), quotes);
        std::fs::remove_dir_all(&dir).unwrap();

        let bad = "instrument,quote,quote_type\n0-3,1,upfront\n";
        assert!(matches!(read_quotes(bad.as_bytes(), "q.csv"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn synthetic_pool_is_deterministic() {
        let a = Portfolio::synthetic(125, 60.0, 7).unwrap();
        let b = Portfolio::synthetic(125, 60.0, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.spec.sectors.iter().filter(|s| *s == "Banking").count(), 16);
        assert!(a.spreads_bps.iter().all(|&s| s > 30.0 && s < 100.0));
    }
}
