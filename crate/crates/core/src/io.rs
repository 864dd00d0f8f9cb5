//! Plain-text file formats.
//!
//! All three formats are comma-separated decimals written with Rust's
//! shortest round-trip float formatting, so values reload bit-exactly.
//!
//! * Dataset: `# kind=<k> n=<n> L=<L> dt=<dt> seed=<s> [key=value…]`, then
//!   one row per series.
//! * Scalogram: `# scales=2,4,…,256 L=<L> [norm_lo=<lo> norm_hi=<hi>]
//!   [key=value…]`, then one row per scale.
//! * Report: a header line followed by
//!   `process,n_train,mode,precision,recall,k,m_real,m_fake,seed` rows.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::processes::{Dataset, TimeSeries};
use crate::wavelet::{NormParams, Scalogram};

/// Parsed `# key=value key=value` header. Keys keep their first `=`;
/// values may contain further `=` signs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Header {
    pairs: Vec<(String, String)>,
}

impl Header {
    pub fn parse(line: &str) -> Result<Self> {
        let body = line
            .strip_prefix('#')
            .ok_or_else(|| Error::Parse("header line must start with `#`".into()))?;
        let pairs = body
            .split_whitespace()
            .map(|tok| {
                tok.split_once('=')
                    .map(|(k, v)| (k.to_string(), v.to_string()))
                    .ok_or_else(|| Error::Parse(format!("header token `{tok}` is not key=value")))
            })
            .collect::<Result<_>>()?;
        Ok(Self { pairs })
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.pairs.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.pairs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Parse(format!("header is missing `{key}`")))
    }

    pub fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.require(key)?;
        raw.parse()
            .map_err(|_| Error::Parse(format!("header field `{key}={raw}` does not parse")))
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    /// Pairs other than the listed keys, in order.
    pub fn extras(&self, known: &[&str]) -> Vec<(String, String)> {
        self.pairs
            .iter()
            .filter(|(k, _)| !known.contains(&k.as_str()))
            .cloned()
            .collect()
    }
}

impl std::fmt::Display for Header {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("#")?;
        for (k, v) in &self.pairs {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

fn write_row(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write!(out, "{v}").expect("writing to a String cannot fail");
    }
    out.push('\n');
}

fn parse_row(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("line {lineno}: `{t}` is not a number")))
        })
        .collect()
}

fn split_header(text: &str) -> Result<(Header, Vec<Vec<f64>>)> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or_else(|| Error::Parse("file is empty".into()))?;
    let header = Header::parse(first)?;
    let rows = lines.map(|(i, l)| parse_row(l, i + 1)).collect::<Result<_>>()?;
    Ok((header, rows))
}

/// Splits a dataset label of the form `<kind> key=value…`.
fn label_parts(label: &str) -> (&str, &str) {
    let label = label.trim();
    match label.split_once(char::is_whitespace) {
        Some((k, rest)) => (k, rest.trim()),
        None => (label, ""),
    }
}

pub fn format_dataset(ds: &Dataset) -> String {
    let (kind, rest) = label_parts(&ds.label);
    let mut header = Header::default();
    header.push("kind", if kind.is_empty() { "unknown" } else { kind });
    header.push("n", ds.len());
    header.push("L", ds.series_len());
    header.push("dt", ds.dt());
    header.push("seed", ds.seed);
    let mut out = header.to_string();
    for tok in rest.split_whitespace() {
        out.push(' ');
        out.push_str(tok);
    }
    out.push('\n');
    for s in &ds.series {
        write_row(&mut out, s.values());
    }
    out
}

pub fn parse_dataset(text: &str) -> Result<Dataset> {
    let (header, rows) = split_header(text)?;
    let n: usize = header.parsed("n")?;
    let len: usize = header.parsed("L")?;
    let dt: f64 = header.parsed("dt")?;
    let seed: u64 = header.parsed("seed")?;
    if rows.len() != n {
        return Err(Error::Parse(format!("header says n={n}, file has {} rows", rows.len())));
    }
    if rows.iter().any(|r| r.len() != len) {
        return Err(Error::Parse(format!("every row must hold L={len} values")));
    }
    let mut label = header.require("kind")?.to_string();
    for (k, v) in header.extras(&["kind", "n", "L", "dt", "seed"]) {
        write!(label, " {k}={v}").expect("writing to a String cannot fail");
    }
    let series = rows
        .into_iter()
        .map(|r| TimeSeries::new(r, dt))
        .collect::<Result<_>>()?;
    Dataset::new(series, label, seed)
}

pub fn write_dataset(path: &Path, ds: &Dataset) -> Result<()> {
    fs::write(path, format_dataset(ds))?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    parse_dataset(&fs::read_to_string(path)?)
}

fn join_scales(scales: &[f64]) -> String {
    scales.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

/// Scalogram file text; `extra` pairs are appended to the header.
pub fn format_scalogram(sc: &Scalogram, extra: &[(&str, String)]) -> String {
    let mut header = Header::default();
    header.push("scales", join_scales(sc.scales()));
    header.push("L", sc.width());
    if let Some(n) = sc.norm() {
        header.push("norm_lo", n.lo);
        header.push("norm_hi", n.hi);
    }
    for (k, v) in extra {
        header.push(k, v);
    }
    let mut out = header.to_string();
    out.push('\n');
    for r in 0..sc.coeffs().rows() {
        write_row(&mut out, sc.coeffs().row(r));
    }
    out
}

pub fn parse_scalogram(text: &str) -> Result<(Scalogram, Header)> {
    let (header, rows) = split_header(text)?;
    let scales = header
        .require("scales")?
        .split(',')
        .map(|s| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad scale `{s}`"))))
        .collect::<Result<Vec<_>>>()?;
    let len: usize = header.parsed("L")?;
    if rows.len() != scales.len() {
        return Err(Error::Parse(format!("{} scales but {} rows", scales.len(), rows.len())));
    }
    if rows.iter().any(|r| r.len() != len) {
        return Err(Error::Parse(format!("every row must hold L={len} values")));
    }
    let norm = match (header.get("norm_lo"), header.get("norm_hi")) {
        (None, None) => None,
        (Some(_), Some(_)) => Some(NormParams {
            lo: header.parsed("norm_lo")?,
            hi: header.parsed("norm_hi")?,
        }),
        _ => return Err(Error::Parse("norm_lo and norm_hi must appear together".into())),
    };
    let sc = Scalogram::new(Grid::from_rows(&rows)?, scales, norm)?;
    Ok((sc, header))
}

pub fn write_scalogram(path: &Path, sc: &Scalogram, extra: &[(&str, String)]) -> Result<()> {
    fs::write(path, format_scalogram(sc, extra))?;
    Ok(())
}

pub fn read_scalogram(path: &Path) -> Result<(Scalogram, Header)> {
    parse_scalogram(&fs::read_to_string(path)?)
}

pub const REPORT_HEADER: &str = "process,n_train,mode,precision,recall,k,m_real,m_fake,seed";

/// One evaluated configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub process: String,
    pub n_train: usize,
    pub mode: String,
    pub precision: f64,
    pub recall: f64,
    pub k: usize,
    pub m_real: usize,
    pub m_fake: usize,
    pub seed: u64,
}

impl ReportRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.process,
            self.n_train,
            self.mode,
            self.precision,
            self.recall,
            self.k,
            self.m_real,
            self.m_fake,
            self.seed
        )
    }

    pub fn parse(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 9 {
            return Err(Error::Parse(format!("report row needs 9 fields, got {}", f.len())));
        }
        let bad = |name: &str| Error::Parse(format!("report field `{name}` does not parse"));
        Ok(Self {
            process: f[0].to_string(),
            n_train: f[1].parse().map_err(|_| bad("n_train"))?,
            mode: f[2].to_string(),
            precision: f[3].parse().map_err(|_| bad("precision"))?,
            recall: f[4].parse().map_err(|_| bad("recall"))?,
            k: f[5].parse().map_err(|_| bad("k"))?,
            m_real: f[6].parse().map_err(|_| bad("m_real"))?,
            m_fake: f[7].parse().map_err(|_| bad("m_fake"))?,
            seed: f[8].parse().map_err(|_| bad("seed"))?,
        })
    }
}

pub fn format_report(rows: &[ReportRow]) -> String {
    let mut out = format!("{REPORT_HEADER}\n");
    for r in rows {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    out
}

pub fn parse_report(text: &str) -> Result<Vec<ReportRow>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == REPORT_HEADER => {}
        _ => return Err(Error::Parse("missing report header".into())),
    }
    lines.map(ReportRow::parse).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::{simulate_dataset, ProcessSpec};

    #[test]
    fn dataset_header_layout() {
        let ds = simulate_dataset(&ProcessSpec::wiener(), 2, 4, 7).unwrap();
        let text = format_dataset(&ds);
        let first = text.lines().next().unwrap();
        assert!(first.starts_with("# kind=wiener_process n=2 L=4 dt=0.3333333333333333 seed=7 "));
        assert!(first.contains("drift=2") && first.contains("volatility=1"));
        let back = parse_dataset(&text).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn dataset_row_count_is_checked() {
        let text = "# kind=x n=2 L=2 dt=1 seed=0\n1,2\n";
        assert!(parse_dataset(text).is_err());
        let text = "# kind=x n=1 L=3 dt=1 seed=0\n1,2\n";
        assert!(parse_dataset(text).is_err());
        assert!(parse_dataset("kind=x\n").is_err());
    }

    #[test]
    fn scalogram_header_layout() {
        let g = Grid::from_rows(&[vec![0.0, 1.0, 0.5], vec![0.25, 0.75, 1.0]]).unwrap();
        let sc = Scalogram::new(g, vec![2.0, 4.0], Some(NormParams { lo: -1.5, hi: 2.0 })).unwrap();
        let text = format_scalogram(&sc, &[("seed", "9".into())]);
        assert_eq!(text.lines().next().unwrap(), "# scales=2,4 L=3 norm_lo=-1.5 norm_hi=2 seed=9");
        let (back, header) = parse_scalogram(&text).unwrap();
        assert_eq!(back, sc);
        assert_eq!(header.get("seed"), Some("9"));
    }

    #[test]
    fn unnormalized_scalogram_omits_norm() {
        let sc = Scalogram::new(Grid::from_rows(&[vec![-3.0, 4.0]]).unwrap(), vec![2.0], None).unwrap();
        let text = format_scalogram(&sc, &[]);
        assert_eq!(text.lines().next().unwrap(), "# scales=2 L=2");
        assert_eq!(parse_scalogram(&text).unwrap().0, sc);
    }

    #[test]
    fn header_values_may_contain_equals() {
        let h = Header::parse("# cfg=a=1,b=2 seed=3").unwrap();
        assert_eq!(h.get("cfg"), Some("a=1,b=2"));
        assert!(Header::parse("# novalue").is_err());
    }

    #[test]
    fn report_round_trip() {
        let row = ReportRow {
            process: "wiener_process".into(),
            n_train: 5,
            mode: "reshuffle".into(),
            precision: 0.8,
            recall: 0.01,
            k: 3,
            m_real: 5000,
            m_fake: 5000,
            seed: 1,
        };
        let text = format_report(std::slice::from_ref(&row));
        assert!(text.starts_with(REPORT_HEADER));
        assert_eq!(parse_report(&text).unwrap(), vec![row]);
        assert!(parse_report("a,b\n").is_err());
    }
}
