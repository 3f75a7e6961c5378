//! Benchmark instance parsing and serialization.
//!
//! Two on-disk layouts are supported:
//!  * the OR-library "standard specification": a `J M` header followed by
//!    J rows of `machine duration` pairs, machines 0-based;
//!  * Taillard's two-matrix layout: header, a J x M processing-times
//!    matrix, then a J x M machine-order matrix with 1-based machine ids,
//!    optionally separated by `Times` / `Machines` marker lines.
//!
//! Machine ids are normalized to 0-based internally regardless of the
//! source format. Tokenization is whitespace-tolerant and `#` starts a
//! line comment in every format.

use std::collections::BTreeMap;

use crate::model::{Instance, Time};
use crate::Error;

/// Best-known upper bounds, keyed by lowercased instance name.
///
/// DMU instances circulate under two naming conventions: the compact
/// `dmuNN` series and the descriptive `rcmax_J_M_k` file names from the
/// original distribution. This registry is convention-agnostic: list an
/// instance under each name it goes by (same UB) in the bounds file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BoundsRegistry {
    bounds: BTreeMap<String, Time>,
}

impl BoundsRegistry {
    pub fn get(&self, name: &str) -> Option<Time> {
        self.bounds.get(&name.to_ascii_lowercase()).copied()
    }

    pub fn insert(&mut self, name: &str, ub: Time) {
        self.bounds.insert(name.to_ascii_lowercase(), ub);
    }

    pub fn len(&self) -> usize {
        self.bounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_empty()
    }
}

struct Token<'a> {
    text: &'a str,
    line: usize,
    col: usize,
}

fn tokenize(text: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("");
        let mut col = 0;
        for piece in body.split_whitespace() {
            // column of this token within the original line
            col = line[col..].find(piece).map(|p| p + col).unwrap_or(col);
            out.push(Token {
                text: piece,
                line: ln + 1,
                col: col + 1,
            });
            col += piece.len();
        }
    }
    out
}

fn parse_int(tok: &Token<'_>, what: &str) -> Result<i64, Error> {
    tok.text.parse::<i64>().map_err(|_| Error::Parse {
        line: tok.line,
        col: tok.col,
        msg: format!("expected {what}, found {:?}", tok.text),
    })
}

fn eof_error(tokens: &[Token<'_>], what: &str) -> Error {
    let (line, col) = tokens
        .last()
        .map(|t| (t.line, t.col + t.text.len()))
        .unwrap_or((1, 1));
    Error::Parse {
        line,
        col,
        msg: format!("unexpected end of input, expected {what}"),
    }
}

/// Parses the standard-specification layout.
pub fn parse_standard(text: &str) -> Result<Instance, Error> {
    let tokens = tokenize(text);
    let mut it = tokens.iter();
    let jobs_tok = it.next().ok_or_else(|| eof_error(&tokens, "job count"))?;
    let num_jobs = parse_int(jobs_tok, "job count")?;
    let mach_tok = it.next().ok_or_else(|| eof_error(&tokens, "machine count"))?;
    let num_machines = parse_int(mach_tok, "machine count")?;
    if num_jobs < 0 || num_machines < 0 {
        return Err(Error::Parse {
            line: jobs_tok.line,
            col: jobs_tok.col,
            msg: "negative dimension in header".into(),
        });
    }
    let (num_jobs, num_machines) = (num_jobs as usize, num_machines as usize);

    let mut rows = Vec::with_capacity(num_jobs);
    for _ in 0..num_jobs {
        let mut row = Vec::with_capacity(num_machines);
        for _ in 0..num_machines {
            let m_tok = it.next().ok_or_else(|| eof_error(&tokens, "machine id"))?;
            let machine = parse_int(m_tok, "machine id")?;
            if machine < 0 || machine as usize >= num_machines {
                return Err(Error::Parse {
                    line: m_tok.line,
                    col: m_tok.col,
                    msg: format!("machine id {machine} out of range 0..{num_machines}"),
                });
            }
            let d_tok = it.next().ok_or_else(|| eof_error(&tokens, "duration"))?;
            let duration = parse_int(d_tok, "duration")?;
            if duration < 0 {
                return Err(Error::Parse {
                    line: d_tok.line,
                    col: d_tok.col,
                    msg: format!("negative duration {duration}"),
                });
            }
            row.push((machine as usize, duration as Time));
        }
        rows.push(row);
    }
    if let Some(extra) = it.next() {
        return Err(Error::Parse {
            line: extra.line,
            col: extra.col,
            msg: format!("trailing input {:?}", extra.text),
        });
    }
    Instance::from_rows("", num_machines, &rows)
}

/// Parses Taillard's two-matrix layout. Header lines before the first
/// dimension pair are skipped; `Times` / `Machines` markers and the extra
/// seed/bound numbers of the canonical distribution are tolerated.
pub fn parse_taillard(text: &str) -> Result<Instance, Error> {
    let tokens = tokenize(text);
    // Find the first integer token: start of the "J M [seed ub lb...]" line.
    let start = tokens
        .iter()
        .position(|t| t.text.parse::<i64>().is_ok())
        .ok_or_else(|| eof_error(&tokens, "dimension header"))?;
    let num_jobs = parse_int(&tokens[start], "job count")?;
    let num_machines = parse_int(
        tokens
            .get(start + 1)
            .ok_or_else(|| eof_error(&tokens, "machine count"))?,
        "machine count",
    )?;
    if num_jobs < 0 || num_machines < 0 {
        return Err(Error::Parse {
            line: tokens[start].line,
            col: tokens[start].col,
            msg: "negative dimension in header".into(),
        });
    }
    let (nj, nm) = (num_jobs as usize, num_machines as usize);

    // Everything after the header line: extra header numbers (seed, bounds)
    // may share the header line; skip tokens until the line number changes
    // or a `Times` marker appears.
    let header_line = tokens[start].line;
    let mut idx = start + 2;
    while idx < tokens.len() && tokens[idx].line == header_line {
        idx += 1;
    }
    let mut numbers = Vec::new();
    for tok in &tokens[idx..] {
        if tok.text.parse::<i64>().is_err() {
            continue; // "Times" / "Machines" markers
        }
        numbers.push(tok);
    }
    if numbers.len() != 2 * nj * nm {
        return Err(Error::Parse {
            line: tokens[start].line,
            col: tokens[start].col,
            msg: format!(
                "expected {} matrix entries for {nj}x{nm}, found {}",
                2 * nj * nm,
                numbers.len()
            ),
        });
    }

    let mut rows: Vec<Vec<(usize, Time)>> = vec![Vec::with_capacity(nm); nj];
    for j in 0..nj {
        for s in 0..nm {
            let d_tok = numbers[j * nm + s];
            let duration = parse_int(d_tok, "duration")?;
            if duration < 0 {
                return Err(Error::Parse {
                    line: d_tok.line,
                    col: d_tok.col,
                    msg: format!("negative duration {duration}"),
                });
            }
            let m_tok = numbers[nj * nm + j * nm + s];
            let machine = parse_int(m_tok, "machine id")?;
            if machine < 1 || machine as usize > nm {
                return Err(Error::Parse {
                    line: m_tok.line,
                    col: m_tok.col,
                    msg: format!("machine id {machine} out of range 1..={nm} (Taillard ids are 1-based)"),
                });
            }
            rows[j].push((machine as usize - 1, duration as Time));
        }
    }
    Instance::from_rows("", nm, &rows)
}

/// Loads a bounds file: one `name UB` pair per line, `#` comments allowed.
/// Duplicate names keep the last value (with a warning).
pub fn load_bounds(text: &str) -> Result<BoundsRegistry, Error> {
    let mut registry = BoundsRegistry::default();
    for (ln, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut parts = body.split_whitespace();
        let name = parts.next().unwrap();
        let ub_text = parts.next().ok_or(Error::Parse {
            line: ln + 1,
            col: name.len() + 1,
            msg: "missing upper bound".into(),
        })?;
        let ub: Time = ub_text.parse().map_err(|_| Error::Parse {
            line: ln + 1,
            col: body.find(ub_text).unwrap_or(0) + 1,
            msg: format!("expected integer upper bound, found {ub_text:?}"),
        })?;
        if registry.get(name).is_some() {
            log::warn!("duplicate bound for {name}; keeping the later value {ub}");
        }
        registry.insert(name, ub);
    }
    Ok(registry)
}

/// Serializes an instance in the standard-specification layout.
/// `parse_standard(write_standard(i))` reproduces `i` (up to its name).
pub fn write_standard(instance: &Instance) -> String {
    let mut out = format!("{} {}\n", instance.num_jobs(), instance.num_machines);
    for job in &instance.jobs {
        let row: Vec<String> = job
            .iter()
            .map(|op| format!("{} {}", op.machine, op.duration))
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Resolves an instance argument: either a built-in (`demo:5x3`) or a
/// file path, with the layout chosen by extension heuristics.
pub fn load_instance(spec: &str) -> Result<Instance, Error> {
    if spec == "demo:5x3" {
        return Ok(crate::model::demo_5x3());
    }
    let text = std::fs::read_to_string(spec)?;
    let stem = std::path::Path::new(spec)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or(spec)
        .to_string();
    let mut instance = if looks_like_taillard(&text) {
        parse_taillard(&text)?
    } else {
        parse_standard(&text)?
    };
    instance.name = stem;
    Ok(instance)
}

fn looks_like_taillard(text: &str) -> bool {
    let lower = text.to_ascii_lowercase();
    lower.contains("times") && lower.contains("machines")
}
