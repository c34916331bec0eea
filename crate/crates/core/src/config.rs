//! Parsers for walk-spec and domain files.
//!
//! Both formats are UTF-8 text with one `key = value` entry per line. Blank
//! lines and lines starting with `#` are ignored, as is anything after a `#`
//! that follows a value.
//!
//! Walk-spec keys:
//!
//! * `steps` (required): `[[u,v,w], ...]` with integer `u`, `v` and a positive
//!   weight `w` written as a decimal (`0.5`, `2e-1`) or a fraction (`1/3`).
//! * `q` (optional, default `1`): positive area weight, same number syntax.
//!
//! Domain keys: either `preset = <name>` followed by numeric preset parameters
//! (`a_c = 0.25`), or `lower` / `upper` as `[[x,y], ...]` point lists (sorted
//! by `x`, piecewise-linear) with optional `x0`, `x1` giving the `x` range.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use thiserror::Error;

use crate::domain::{Curve, Domain, DomainError};
use crate::enumerate::QWeight;
use crate::exact::{parse_rational, rational_to_f64};
use crate::walk::{WalkError, WalkModel};

/// Location of a syntax error, 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// A walk model together with its area weight.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkSpec {
    pub model: WalkModel,
    pub q: QWeight,
}

struct Entry<'a> {
    key: &'a str,
    value: &'a str,
    line: usize,
    value_column: usize,
}

fn entries(text: &str) -> Result<Vec<Entry<'_>>, ParseError> {
    let mut out: Vec<Entry<'_>> = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        if content.trim().is_empty() {
            continue;
        }
        let Some(eq) = content.find('=') else {
            let column = content.len() - content.trim_start().len() + 1;
            return Err(ParseError {
                line,
                column,
                message: "expected `key = value`".into(),
            });
        };
        let key = content[..eq].trim();
        let key_column = content.len() - content.trim_start().len() + 1;
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(ParseError {
                line,
                column: key_column,
                message: format!("invalid key `{key}`"),
            });
        }
        if out.iter().any(|e| e.key == key) {
            return Err(ParseError {
                line,
                column: key_column,
                message: format!("duplicate key `{key}`"),
            });
        }
        let after = &content[eq + 1..];
        let value = after.trim();
        let value_column = eq + 2 + (after.len() - after.trim_start().len());
        out.push(Entry {
            key,
            value,
            line,
            value_column,
        });
    }
    Ok(out)
}

/// A number token with its column.
struct Token {
    text: String,
    column: usize,
}

/// Parses `[[a,b,...], [c,d,...], ...]` into rows of tokens.
fn parse_rows(value: &str, line: usize, column0: usize) -> Result<Vec<Vec<Token>>, ParseError> {
    let chars: Vec<char> = value.chars().collect();
    let mut pos = 0usize;
    let err = |pos: usize, message: String| ParseError {
        line,
        column: column0 + pos,
        message,
    };
    let skip_ws = |pos: &mut usize| {
        while *pos < chars.len() && chars[*pos].is_whitespace() {
            *pos += 1;
        }
    };
    let expect = |pos: &mut usize, c: char| -> Result<(), ParseError> {
        skip_ws(pos);
        if chars.get(*pos) == Some(&c) {
            *pos += 1;
            Ok(())
        } else {
            let found = chars
                .get(*pos)
                .map_or("end of line".to_string(), |f| format!("`{f}`"));
            Err(err(*pos, format!("expected `{c}`, found {found}")))
        }
    };

    expect(&mut pos, '[')?;
    let mut rows = Vec::new();
    skip_ws(&mut pos);
    if chars.get(pos) == Some(&']') {
        return Err(err(pos, "empty list".into()));
    }
    loop {
        expect(&mut pos, '[')?;
        let mut row = Vec::new();
        loop {
            skip_ws(&mut pos);
            let start = pos;
            while pos < chars.len() && (chars[pos].is_ascii_alphanumeric() || "+-./".contains(chars[pos])) {
                pos += 1;
            }
            if start == pos {
                return Err(err(pos, "expected a number".into()));
            }
            row.push(Token {
                text: chars[start..pos].iter().collect(),
                column: column0 + start,
            });
            skip_ws(&mut pos);
            match chars.get(pos) {
                Some(',') => pos += 1,
                Some(']') => {
                    pos += 1;
                    break;
                }
                _ => return Err(err(pos, "expected `,` or `]`".into())),
            }
        }
        rows.push(row);
        skip_ws(&mut pos);
        match chars.get(pos) {
            Some(',') => pos += 1,
            Some(']') => {
                pos += 1;
                break;
            }
            _ => return Err(err(pos, "expected `,` or `]`".into())),
        }
    }
    skip_ws(&mut pos);
    if pos < chars.len() {
        return Err(err(pos, "unexpected trailing characters".into()));
    }
    Ok(rows)
}

fn number(token: &Token, line: usize) -> Result<BigRational, ParseError> {
    parse_rational(&token.text).ok_or_else(|| ParseError {
        line,
        column: token.column,
        message: format!("`{}` is not a number", token.text),
    })
}

fn integer(token: &Token, line: usize) -> Result<i64, ParseError> {
    token.text.parse::<i64>().map_err(|_| ParseError {
        line,
        column: token.column,
        message: format!("`{}` is not an integer", token.text),
    })
}

fn scalar(entry: &Entry<'_>) -> Result<BigRational, ParseError> {
    number(
        &Token {
            text: entry.value.to_string(),
            column: entry.value_column,
        },
        entry.line,
    )
}

/// Parses a walk-spec file, including the optional `q`.
pub fn parse_walk_file(text: &str) -> Result<WalkSpec, ConfigError> {
    let entries = entries(text)?;
    let mut steps = None;
    let mut q = QWeight::one();
    for entry in &entries {
        match entry.key {
            "steps" => {
                let rows = parse_rows(entry.value, entry.line, entry.value_column)?;
                let mut list = Vec::with_capacity(rows.len());
                let mut weights = Vec::with_capacity(rows.len());
                for row in &rows {
                    if row.len() != 3 {
                        return Err(ParseError {
                            line: entry.line,
                            column: row[0].column,
                            message: format!("a step is `[u,v,w]`, found {} entries", row.len()),
                        }
                        .into());
                    }
                    list.push((integer(&row[0], entry.line)?, integer(&row[1], entry.line)?));
                    weights.push(number(&row[2], entry.line)?);
                }
                steps = Some((list, weights));
            }
            "q" => {
                let value = scalar(entry)?;
                if !value.is_positive() {
                    return Err(ParseError {
                        line: entry.line,
                        column: entry.value_column,
                        message: "q must be positive".into(),
                    }
                    .into());
                }
                q = QWeight::rational(value);
            }
            other => {
                return Err(ParseError {
                    line: entry.line,
                    column: 1,
                    message: format!("unknown key `{other}`"),
                }
                .into())
            }
        }
    }
    let Some((list, weights)) = steps else {
        return Err(ParseError {
            line: text.lines().count().max(1),
            column: 1,
            message: "missing `steps`".into(),
        }
        .into());
    };
    for (index, w) in weights.iter().enumerate() {
        if !w.is_positive() {
            return Err(WalkError::NonPositiveWeight {
                index,
                weight: rational_to_f64(w),
            }
            .into());
        }
    }
    let model = WalkModel::with_exact_weights(list, weights)?;
    Ok(WalkSpec { model, q })
}

/// Parses a walk-spec file into its model.
pub fn parse_walk_spec(text: &str) -> Result<WalkModel, ConfigError> {
    Ok(parse_walk_file(text)?.model)
}

/// Parses a domain file.
pub fn parse_domain(text: &str) -> Result<Domain, ConfigError> {
    let entries = entries(text)?;
    let preset = entries.iter().find(|e| e.key == "preset");
    if let Some(preset) = preset {
        let mut params = BTreeMap::new();
        for entry in entries.iter().filter(|e| e.key != "preset") {
            let value = scalar(entry)?;
            params.insert(entry.key.to_string(), rational_to_f64(&value));
        }
        return Ok(Domain::preset(preset.value, &params)?);
    }
    let mut lower = None;
    let mut upper = None;
    let mut x_range = (f64::NAN, f64::NAN);
    for entry in &entries {
        match entry.key {
            "lower" | "upper" => {
                let rows = parse_rows(entry.value, entry.line, entry.value_column)?;
                let mut points = Vec::with_capacity(rows.len());
                for row in &rows {
                    if row.len() != 2 {
                        return Err(ParseError {
                            line: entry.line,
                            column: row[0].column,
                            message: "a point is `[x,y]`".into(),
                        }
                        .into());
                    }
                    let x = number(&row[0], entry.line)?.to_f64().unwrap_or(f64::NAN);
                    let y = number(&row[1], entry.line)?.to_f64().unwrap_or(f64::NAN);
                    points.push((x, y));
                }
                if points.len() < 2 || points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    return Err(ParseError {
                        line: entry.line,
                        column: entry.value_column,
                        message: "need at least two points with strictly increasing x".into(),
                    }
                    .into());
                }
                let curve = Curve::Polyline(points);
                if entry.key == "lower" {
                    lower = Some(curve);
                } else {
                    upper = Some(curve);
                }
            }
            "x0" => x_range.0 = rational_to_f64(&scalar(entry)?),
            "x1" => x_range.1 = rational_to_f64(&scalar(entry)?),
            other => {
                return Err(ParseError {
                    line: entry.line,
                    column: 1,
                    message: format!("unknown key `{other}`"),
                }
                .into())
            }
        }
    }
    if lower.is_none() && upper.is_none() {
        return Err(ParseError {
            line: 1,
            column: 1,
            message: "a domain needs `preset`, `lower` or `upper`".into(),
        }
        .into());
    }
    let span = |c: &Option<Curve>| match c {
        Some(Curve::Polyline(p)) => (p[0].0, p[p.len() - 1].0),
        _ => (f64::INFINITY, f64::NEG_INFINITY),
    };
    let (a, b) = (span(&lower), span(&upper));
    let default = (a.0.min(b.0), a.1.max(b.1));
    if x_range.0.is_nan() {
        x_range.0 = default.0;
    }
    if x_range.1.is_nan() {
        x_range.1 = default.1;
    }
    Ok(Domain::new(x_range, lower, upper)?)
}

/// Formats an exact rational for display in headers.
pub fn format_rational(r: &BigRational) -> String {
    if r.denom() == &BigInt::from(1) {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}
