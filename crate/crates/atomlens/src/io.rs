//! Output tables and the small input formats.
//!
//! Tables are written either as comma-separated values or as key-value
//! records (`[[row]]` blocks that parse as TOML). Both start with `#`
//! metadata lines naming the command, crate version, configuration hash and
//! seed.

use std::fmt::Write as _;
use std::path::Path;

use atomlens_core::correlation::PhotonStream;
use atomlens_core::spectroscopy::{LossChain, LossElement, SpectrumPoint};
use clap::ValueEnum;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Dsv,
    Kv,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Dsv => "csv",
            Format::Kv => "kv",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn dsv(&self) -> String {
        match self {
            Cell::Num(v) => v.to_string(),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn kv(&self) -> String {
        match self {
            Cell::Num(v) if v.is_finite() => {
                let s = v.to_string();
                if s.contains(['.', 'e', 'E']) {
                    s
                } else {
                    format!("{s}.0")
                }
            }
            Cell::Num(v) if v.is_nan() => "nan".into(),
            Cell::Num(v) => if *v > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => format!("{s:?}"),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// Header lines common to every output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Metadata {
    pub entries: Vec<(String, String)>,
}

impl Metadata {
    pub fn new(command: &str, config_sha256: &str, seed: u64) -> Self {
        Self {
            entries: vec![
                ("generator".into(), format!("atomlens {}", env!("CARGO_PKG_VERSION"))),
                ("command".into(), command.into()),
                ("config_sha256".into(), config_sha256.into()),
                ("seed".into(), seed.to_string()),
            ],
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    fn header(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(s, "# {k}: {v}");
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, meta: &Metadata, format: Format) -> String {
        let mut out = meta.header();
        match format {
            Format::Dsv => {
                let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
                w.write_record(&self.columns).expect("in-memory write");
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::dsv)).expect("in-memory write");
                }
                out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells"));
            }
            Format::Kv => {
                for row in &self.rows {
                    out.push_str("\n[[row]]\n");
                    for (c, v) in self.columns.iter().zip(row) {
                        let _ = writeln!(out, "{c} = {}", v.kv());
                    }
                }
            }
        }
        out
    }
}

/// Flat key-value record.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Record {
    pub fields: Vec<(String, Cell)>,
}

impl Record {
    pub fn push(&mut self, key: &str, value: impl Into<Cell>) {
        self.fields.push((key.into(), value.into()));
    }

    pub fn render(&self, meta: &Metadata, format: Format) -> String {
        let mut out = meta.header();
        match format {
            Format::Kv => {
                for (k, v) in &self.fields {
                    let _ = writeln!(out, "{k} = {}", v.kv());
                }
            }
            Format::Dsv => {
                let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
                w.write_record(["key", "value"]).expect("in-memory write");
                for (k, v) in &self.fields {
                    w.write_record([k.clone(), v.dsv()]).expect("in-memory write");
                }
                out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells"));
            }
        }
        out
    }
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes())
}

fn column(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::config(format!("{}: missing column '{name}'", path.display())))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn number(rec: &csv::StringRecord, k: usize, path: &Path, row: usize) -> Result<f64> {
    rec.get(k)
        .and_then(|s| s.parse::<f64>().ok())
        .ok_or_else(|| CliError::config(format!("{}: row {row}: expected a number in column {}", path.display(), k + 1)))
}

/// Spectrum file with columns `detuning_mhz`, `transmission`, `sigma`.
pub fn read_spectrum(path: &Path) -> Result<Vec<SpectrumPoint>> {
    let text = read_text(path)?;
    let mut r = reader(&text);
    let bad = |e: csv::Error| CliError::config(format!("{}: {e}", path.display()));
    let headers = r.headers().map_err(bad)?.clone();
    let (d, t, s) =
        (column(&headers, "detuning_mhz", path)?, column(&headers, "transmission", path)?, column(&headers, "sigma", path)?);
    let mut points = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(bad)?;
        let p = SpectrumPoint {
            detuning: number(&rec, d, path, i + 1)?,
            transmission: number(&rec, t, path, i + 1)?,
            sigma: number(&rec, s, path, i + 1)?,
        };
        if !(p.transmission > 0.0 && p.sigma >= 0.0) {
            return Err(CliError::config(format!(
                "{}: row {}: transmission must be positive and sigma non-negative",
                path.display(),
                i + 1
            )));
        }
        points.push(p);
    }
    Ok(points)
}

pub fn spectrum_table(points: &[SpectrumPoint]) -> Table {
    let mut t = Table::new(&["detuning_mhz", "transmission", "sigma"]);
    for p in points {
        t.push(vec![p.detuning.into(), p.transmission.into(), p.sigma.into()]);
    }
    t
}

/// Loss chain file with columns `element`, `transmission`.
pub fn read_loss_chain(path: &Path) -> Result<LossChain> {
    let text = read_text(path)?;
    parse_loss_chain(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

pub fn parse_loss_chain(text: &str) -> std::result::Result<LossChain, String> {
    let mut r = reader(text);
    let headers = r.headers().map_err(|e| e.to_string())?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name).ok_or(format!("missing column '{name}'"));
    let (n, t) = (find("element")?, find("transmission")?);
    let mut elements = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let transmission = rec
            .get(t)
            .and_then(|s| s.parse::<f64>().ok())
            .ok_or(format!("row {}: transmission is not a number", i + 1))?;
        elements.push(LossElement { name: rec.get(n).unwrap_or("").to_string(), transmission });
    }
    LossChain::new(elements).map_err(|e| e.to_string())
}

/// Timestamp file of one detector; duration and seed travel in the header.
pub fn stream_file(stream: &PhotonStream, meta: &Metadata) -> String {
    let meta = meta.clone().with("detector", &stream.label).with("duration_s", stream.duration());
    let mut t = Table::new(&["timestamp_s"]);
    for &ts in stream.timestamps() {
        t.push(vec![ts.into()]);
    }
    t.render(&meta, Format::Dsv)
}

pub fn read_stream(path: &Path) -> Result<PhotonStream> {
    let text = read_text(path)?;
    let field = |key: &str| {
        text.lines()
            .filter_map(|l| l.strip_prefix("# "))
            .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(": ")))
            .map(str::trim)
    };
    let duration = field("duration_s")
        .and_then(|s| s.parse::<f64>().ok())
        .ok_or_else(|| CliError::config(format!("{}: missing duration_s header", path.display())))?;
    let label = field("detector").unwrap_or("D?").to_string();
    let mut r = reader(&text);
    let mut ts = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        ts.push(number(&rec, 0, path, i + 1)?);
    }
    PhotonStream::new(label, ts, duration).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

/// Writes `contents` to `dir/name`, creating `dir` if needed.
pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> Metadata {
        Metadata::new("test", "abc", 7)
    }

    #[test]
    fn dsv_has_header_and_rows() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![1.5.into(), "x,y".into()]);
        let s = t.render(&meta(), Format::Dsv);
        assert!(s.starts_with("# generator: atomlens"));
        assert!(s.contains("# seed: 7\n"));
        assert!(s.ends_with("a,b\n1.5,\"x,y\"\n"));
    }

    #[test]
    fn kv_output_parses_as_toml() {
        let mut t = Table::new(&["u", "n", "name"]);
        t.push(vec![2.0.into(), 3usize.into(), "full".into()]);
        let parsed: toml::Table = toml::from_str(&t.render(&meta(), Format::Kv)).unwrap();
        let row = &parsed["row"].as_array().unwrap()[0];
        assert_eq!(row["u"].as_float(), Some(2.0));
        assert_eq!(row["n"].as_integer(), Some(3));
        let mut r = Record::default();
        r.push("t", 0.5);
        let parsed: toml::Table = toml::from_str(&r.render(&meta(), Format::Kv)).unwrap();
        assert_eq!(parsed["t"].as_float(), Some(0.5));
    }

    #[test]
    fn spectrum_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let pts = vec![
            SpectrumPoint { detuning: -1.0, transmission: 0.99, sigma: 0.004 },
            SpectrumPoint { detuning: 0.1, transmission: 0.9, sigma: 0.005 },
        ];
        write_file(dir.path(), "s.csv", &spectrum_table(&pts).render(&meta(), Format::Dsv)).unwrap();
        assert_eq!(read_spectrum(&dir.path().join("s.csv")).unwrap(), pts);
    }

    #[test]
    fn stream_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = PhotonStream::new("D1", vec![0.1, 0.25, 0.3], 1.0).unwrap();
        write_file(dir.path(), "d1.csv", &stream_file(&s, &meta())).unwrap();
        assert_eq!(read_stream(&dir.path().join("d1.csv")).unwrap(), s);
    }

    #[test]
    fn shipped_loss_chain() {
        let chain = parse_loss_chain(include_str!("../data/loss_chain.csv")).unwrap();
        assert_eq!(chain.elements().len(), 3);
        assert_eq!(chain.elements()[1].name, "dichroics, filter and mirror");
        assert!(parse_loss_chain("element,transmission\na,1.5\n").is_err());
    }
}
