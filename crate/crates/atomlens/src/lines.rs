//! Line-table text format.
//!
//! One transition per line, whitespace separated:
//!
//! ```text
//! lower upper wavelength_nm linewidth_mhz J_lower J_upper d_au [source...]
//! ```
//!
//! J values are written as `1/2`, `3/2` or plain integers. `#` starts a
//! comment; blank lines are ignored.

use std::fmt;
use std::path::Path;

use atomlens_core::stark::{LineTable, Transition};

use crate::error::{CliError, Result};

/// The ⁸⁷Rb table shipped with the crate.
pub const BUILTIN_RB87: &str = include_str!("../data/rb87_lines.txt");

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ParseError {}

/// Doubled angular momentum from `1/2`, `3/2`, `2`, ...
fn parse_j(s: &str) -> Option<i32> {
    match s.split_once('/') {
        Some((num, "2")) => num.parse::<i32>().ok().filter(|n| n % 2 == 1 && *n > 0),
        Some(_) => None,
        None => s.parse::<i32>().ok().filter(|n| *n >= 0).map(|n| 2 * n),
    }
}

pub fn parse_line_table(text: &str) -> std::result::Result<LineTable, ParseError> {
    let mut transitions = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| ParseError { line: i + 1, message };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 7 {
            return Err(err(format!("expected at least 7 fields, found {}", fields.len())));
        }
        let num = |k: usize, name: &str| {
            fields[k].parse::<f64>().map_err(|_| err(format!("{name} '{}' is not a number", fields[k])))
        };
        let j = |k: usize| parse_j(fields[k]).ok_or_else(|| err(format!("invalid angular momentum '{}'", fields[k])));
        let t = Transition {
            lower: fields[0].to_string(),
            upper: fields[1].to_string(),
            wavelength_nm: num(2, "wavelength")?,
            linewidth_mhz: num(3, "linewidth")?,
            j_lower2: j(4)?,
            j_upper2: j(5)?,
            dipole_au: num(6, "matrix element")?,
            source: fields[7..].join(" "),
        };
        t.validate().map_err(|e| err(e.to_string()))?;
        transitions.push(t);
    }
    if transitions.is_empty() {
        return Err(ParseError { line: 0, message: "no transitions".into() });
    }
    LineTable::new(transitions).map_err(|e| ParseError { line: 0, message: e.to_string() })
}

pub fn load_line_table(path: &Path) -> Result<LineTable> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_line_table(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}
