//! Line-oriented method files.
//!
//! ```text
//! # comment
//! name ruth
//! stages 3
//! order 3          # optional claimed order
//! 2.9166666666666669e-1  6.6666666666666663e-1
//! ...
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::SplittingMethod;
use crate::error::{Error, Result};

/// Non-empty, comment-stripped lines with 1-based line numbers.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let body = line.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = body.split_whitespace().collect();
        (!tokens.is_empty()).then_some((i + 1, tokens))
    })
}

pub(crate) fn parse_f64(line: usize, tok: &str) -> Result<f64> {
    tok.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::Parse {
            line,
            message: format!("expected a finite decimal number, got {tok:?}"),
        })
}

pub(crate) fn parse_usize(line: usize, tok: &str) -> Result<usize> {
    tok.parse::<usize>().map_err(|_| Error::Parse {
        line,
        message: format!("expected a non-negative integer, got {tok:?}"),
    })
}

fn expect_args(line: usize, key: &str, tokens: &[&str], n: usize) -> Result<()> {
    if tokens.len() != n + 1 {
        return Err(Error::Parse {
            line,
            message: format!("`{key}` takes {n} argument(s)"),
        });
    }
    Ok(())
}

/// Header keys shared by method and design files. Returns `Ok(false)` for
/// lines this parser does not own.
pub(crate) struct MethodHeader {
    pub name: Option<String>,
    pub stages: Option<usize>,
    pub order: Option<u32>,
    pub rows: Vec<[f64; 2]>,
}

impl MethodHeader {
    pub fn new() -> Self {
        MethodHeader {
            name: None,
            stages: None,
            order: None,
            rows: Vec::new(),
        }
    }

    pub fn accept(&mut self, line: usize, tokens: &[&str]) -> Result<bool> {
        match tokens[0] {
            "name" => {
                expect_args(line, "name", tokens, 1)?;
                self.name = Some(tokens[1].to_string());
            }
            "stages" => {
                expect_args(line, "stages", tokens, 1)?;
                let s = parse_usize(line, tokens[1])?;
                if s == 0 {
                    return Err(Error::Parse {
                        line,
                        message: "stages must be positive".into(),
                    });
                }
                self.stages = Some(s);
            }
            "order" => {
                expect_args(line, "order", tokens, 1)?;
                self.order = Some(parse_usize(line, tokens[1])? as u32);
            }
            first if first.parse::<f64>().is_ok() || first.starts_with(['-', '+', '.']) => {
                if tokens.len() != 2 {
                    return Err(Error::Parse {
                        line,
                        message: "coefficient rows need exactly two numbers".into(),
                    });
                }
                self.rows.push([parse_f64(line, tokens[0])?, parse_f64(line, tokens[1])?]);
            }
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// Checks the row count against `stages` when coefficients were given.
    pub fn finish(self, last_line: usize) -> Result<Option<SplittingMethod>> {
        if self.rows.is_empty() {
            return Ok(None);
        }
        let name = self.name.unwrap_or_else(|| "unnamed".into());
        let stages = self.stages.ok_or(Error::Parse {
            line: last_line,
            message: "missing `stages` line".into(),
        })?;
        if self.rows.len() != stages {
            return Err(Error::Parse {
                line: last_line,
                message: format!("`stages {stages}` but {} coefficient rows", self.rows.len()),
            });
        }
        SplittingMethod::new(name, self.rows, self.order.unwrap_or(0)).map(Some)
    }
}

pub fn parse_method(text: &str) -> Result<SplittingMethod> {
    let mut header = MethodHeader::new();
    let mut last = 0;
    for (line, tokens) in content_lines(text) {
        last = line;
        if !header.accept(line, &tokens)? {
            return Err(Error::Parse {
                line,
                message: format!("unknown key {:?}", tokens[0]),
            });
        }
    }
    if header.name.is_none() {
        return Err(Error::Parse {
            line: last,
            message: "missing `name` line".into(),
        });
    }
    header.finish(last)?.ok_or(Error::Parse {
        line: last,
        message: "no coefficient rows".into(),
    })
}

/// 17 significant digits, so reading back gives identical binary values.
pub fn format_method(m: &SplittingMethod) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "name {}", m.name());
    let _ = writeln!(out, "stages {}", m.stages());
    if m.claimed_order() > 0 {
        let _ = writeln!(out, "order {}", m.claimed_order());
    }
    for [a, b] in m.rows() {
        let _ = writeln!(out, "{a:>24.16e} {b:>24.16e}");
    }
    out
}

pub fn read_method(path: &Path) -> Result<SplittingMethod> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_method(&text)
}

pub fn write_method(path: &Path, m: &SplittingMethod) -> Result<()> {
    std::fs::write(path, format_method(m)).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
