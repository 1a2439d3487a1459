//! Text formats for cells, systems, quasiperiodic sets and run configs.
//!
//! All files share one line grammar: `key = value` pairs, `[section]`
//! headers, and `#` comments. Numeric values are whitespace-separated
//! expressions built from decimals, `pi`, `phi`, `e`, the functions `sqrt`,
//! `sin`, `cos`, `tan`, `exp`, `ln`, the operators `+ - * / ^` and
//! parentheses, e.g. `cos(pi/6)` or `-1/2`. An expression must not contain
//! spaces.
//!
//! Cell file:
//! ```text
//! dim = 2
//! piece = 0 0            # integer shift of the piece
//! box = 0 1/2 0 1        # lo_1 hi_1 lo_2 hi_2, boxes belong to the last piece
//! piece = 1 0
//! box = 1/2 1 0 1
//! ```
//!
//! System file (`cell:` paths are relative to the system file):
//! ```text
//! n = 2
//! L = cos(1) -sin(1) sin(1) cos(1)   # row-major
//! quantizer = roundoff               # or cube, nested-cross, cell:PATH
//! ```
//!
//! Quasiperiodic set file:
//! ```text
//! m = 1
//! n = 2
//! lambda = sqrt(2) sqrt(3)           # row-major m x n
//! box = 0 0.35                       # union of boxes in [0,1)^m
//! ```

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::dynamics::QuantizedSystem;
use crate::error::{Error, Result};
use crate::geometry::{Cell, CellPiece, HalfOpenBox, JordanSet, Quantizer};
use crate::lattice::IntVec;
use crate::quasiperiodic::QuasiperiodicSet;

/// One `key = value` line.
#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub section: Option<String>,
    pub key: String,
    pub value: String,
}

/// Splits text into entries, tracking the enclosing `[section]`.
pub fn parse_lines(text: &str) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    let mut section = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(rest) = body.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| Error::Parse { line, msg: format!("bad section header `{body}`") })?;
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| Error::Parse { line, msg: format!("expected `key = value`, got `{body}`") })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Parse { line, msg: "empty key".into() });
        }
        out.push(Entry { line, section: section.clone(), key: key.to_string(), value: value.trim().to_string() });
    }
    Ok(out)
}

struct ExprParser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl ExprParser<'_> {
    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> std::result::Result<f64, String> {
        let mut v = self.product()?;
        loop {
            if self.eat(b'+') {
                v += self.product()?;
            } else if self.eat(b'-') {
                v -= self.product()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn product(&mut self) -> std::result::Result<f64, String> {
        let mut v = self.unary()?;
        loop {
            if self.eat(b'*') {
                v *= self.unary()?;
            } else if self.eat(b'/') {
                v /= self.unary()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn unary(&mut self) -> std::result::Result<f64, String> {
        if self.eat(b'-') {
            return Ok(-self.unary()?);
        }
        if self.eat(b'+') {
            return self.unary();
        }
        let base = self.atom()?;
        if self.eat(b'^') {
            return Ok(base.powf(self.unary()?));
        }
        Ok(base)
    }

    fn atom(&mut self) -> std::result::Result<f64, String> {
        if self.eat(b'(') {
            let v = self.sum()?;
            return if self.eat(b')') { Ok(v) } else { Err("missing `)`".into()) };
        }
        let start = self.pos;
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                while let Some(c) = self.peek() {
                    let exp_sign = (c == b'-' || c == b'+') && matches!(self.s[self.pos - 1], b'e' | b'E');
                    if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' || exp_sign {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                let text = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii");
                text.parse().map_err(|_| format!("bad number `{text}`"))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_') {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii");
                match name {
                    "pi" => Ok(std::f64::consts::PI),
                    "phi" => Ok((1.0 + 5f64.sqrt()) / 2.0),
                    "e" => Ok(std::f64::consts::E),
                    _ => {
                        let f: fn(f64) -> f64 = match name {
                            "sqrt" => f64::sqrt,
                            "sin" => f64::sin,
                            "cos" => f64::cos,
                            "tan" => f64::tan,
                            "exp" => f64::exp,
                            "ln" => f64::ln,
                            _ => return Err(format!("unknown name `{name}`")),
                        };
                        if !self.eat(b'(') {
                            return Err(format!("`{name}` needs an argument in parentheses"));
                        }
                        let v = self.sum()?;
                        if !self.eat(b')') {
                            return Err("missing `)`".into());
                        }
                        Ok(f(v))
                    }
                }
            }
            Some(c) => Err(format!("unexpected `{}`", c as char)),
            None => Err("unexpected end of expression".into()),
        }
    }
}

/// Evaluates one numeric expression.
pub fn eval_expr(text: &str) -> std::result::Result<f64, String> {
    let mut p = ExprParser { s: text.as_bytes(), pos: 0 };
    let v = p.sum()?;
    if p.pos != text.len() {
        return Err(format!("trailing input in `{text}`"));
    }
    if !v.is_finite() {
        return Err(format!("`{text}` is not finite"));
    }
    Ok(v)
}

/// Evaluates a whitespace-separated list of expressions (`;` and `,` also separate).
pub fn parse_reals(value: &str, line: usize) -> Result<Vec<f64>> {
    value
        .split(|c: char| c.is_whitespace() || c == ';' || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| eval_expr(t).map_err(|msg| Error::Parse { line, msg }))
        .collect()
}

pub fn parse_ints(value: &str, line: usize) -> Result<Vec<i64>> {
    value
        .split(|c: char| c.is_whitespace() || c == ';' || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| Error::Parse { line, msg: format!("`{t}` is not an integer") }))
        .collect()
}

fn single_usize(e: &Entry) -> Result<usize> {
    e.value.parse().map_err(|_| Error::Parse { line: e.line, msg: format!("{} must be a positive integer", e.key) })
}

fn unknown(e: &Entry) -> Error {
    Error::Parse { line: e.line, msg: format!("unknown key `{}`", e.key) }
}

fn no_sections(entries: &[Entry]) -> Result<()> {
    match entries.iter().find(|e| e.section.is_some()) {
        Some(e) => Err(Error::Parse { line: e.line, msg: "sections are not allowed here".into() }),
        None => Ok(()),
    }
}

fn boxes_from(values: &[f64], dim: usize, line: usize) -> Result<HalfOpenBox> {
    if values.len() != 2 * dim {
        return Err(Error::Parse { line, msg: format!("box needs {} numbers, got {}", 2 * dim, values.len()) });
    }
    let lo = values.iter().step_by(2).copied().collect();
    let hi = values.iter().skip(1).step_by(2).copied().collect();
    HalfOpenBox::new(lo, hi)
}

pub fn parse_cell(text: &str) -> Result<Cell> {
    let entries = parse_lines(text)?;
    no_sections(&entries)?;
    let mut dim = None;
    let mut pieces: Vec<(IntVec, Vec<HalfOpenBox>)> = Vec::new();
    for e in &entries {
        match e.key.as_str() {
            "dim" => dim = Some(single_usize(e)?),
            "piece" => {
                let shift = parse_ints(&e.value, e.line)?;
                pieces.push((IntVec::from(shift), Vec::new()));
            }
            "box" => {
                let d = dim.ok_or_else(|| Error::Parse { line: e.line, msg: "`dim` must come first".into() })?;
                let b = boxes_from(&parse_reals(&e.value, e.line)?, d, e.line)?;
                pieces
                    .last_mut()
                    .ok_or_else(|| Error::Parse { line: e.line, msg: "box before any piece".into() })?
                    .1
                    .push(b);
            }
            _ => return Err(unknown(e)),
        }
    }
    let dim = dim.ok_or_else(|| Error::Parse { line: 0, msg: "missing `dim`".into() })?;
    let pieces = pieces
        .into_iter()
        .map(|(shift, boxes)| Ok(CellPiece { set: JordanSet::from_boxes(dim, boxes)?, shift }))
        .collect::<Result<Vec<_>>>()?;
    Cell::new(dim, pieces)
}

/// Renders a cell in the cell file format.
pub fn write_cell(cell: &Cell) -> String {
    let mut out = format!("dim = {}\n", cell.dim());
    for p in cell.pieces() {
        let shift: Vec<String> = p.shift.as_slice().iter().map(|s| s.to_string()).collect();
        out.push_str(&format!("piece = {}\n", shift.join(" ")));
        for b in p.set.boxes() {
            let v: Vec<String> = b.lo.iter().zip(&b.hi).flat_map(|(l, h)| [l.to_string(), h.to_string()]).collect();
            out.push_str(&format!("box = {}\n", v.join(" ")));
        }
    }
    out
}

pub fn load_cell(path: &Path) -> Result<Cell> {
    parse_cell(&std::fs::read_to_string(path)?)
}

fn square(values: Vec<f64>, n: usize, line: usize, what: &str) -> Result<DMatrix<f64>> {
    if values.len() != n * n {
        return Err(Error::Parse { line, msg: format!("{what} needs {} entries, got {}", n * n, values.len()) });
    }
    Ok(DMatrix::from_row_slice(n, n, &values))
}

/// Parses a system description; `cell:` paths resolve against `base`.
pub fn parse_system(text: &str, base: &Path) -> Result<QuantizedSystem> {
    let entries = parse_lines(text)?;
    no_sections(&entries)?;
    let mut n = None;
    let mut l = None;
    let mut quantizer = None;
    for e in &entries {
        match e.key.as_str() {
            "n" => n = Some(single_usize(e)?),
            "L" => l = Some((parse_reals(&e.value, e.line)?, e.line)),
            "quantizer" => quantizer = Some(e),
            _ => return Err(unknown(e)),
        }
    }
    let n = n.ok_or_else(|| Error::Parse { line: 0, msg: "missing `n`".into() })?;
    let (values, line) = l.ok_or_else(|| Error::Parse { line: 0, msg: "missing `L`".into() })?;
    let l = square(values, n, line, "L")?;
    let r = match quantizer.map(|e| (e.value.as_str(), e.line)) {
        None | Some(("roundoff", _)) => Quantizer::roundoff(n),
        Some(("cube", _)) => Quantizer::new(Cell::cube(n)),
        Some(("nested-cross", _)) => Quantizer::new(Cell::nested_cross()),
        Some((other, line)) => match other.strip_prefix("cell:") {
            Some(path) => Quantizer::new(load_cell(&base.join(path.trim()))?),
            None => return Err(Error::Parse { line, msg: format!("unknown quantizer `{other}`") }),
        },
    };
    if r.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: r.dim() });
    }
    QuantizedSystem::new(l, r)
}

pub fn load_system(path: &Path) -> Result<QuantizedSystem> {
    let base = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    parse_system(&std::fs::read_to_string(path)?, &base)
}

pub fn parse_quasiperiodic(text: &str) -> Result<QuasiperiodicSet> {
    let entries = parse_lines(text)?;
    no_sections(&entries)?;
    let (mut m, mut n, mut lambda) = (None, None, None);
    let mut boxes = Vec::new();
    for e in &entries {
        match e.key.as_str() {
            "m" => m = Some(single_usize(e)?),
            "n" => n = Some(single_usize(e)?),
            "lambda" => lambda = Some((parse_reals(&e.value, e.line)?, e.line)),
            "box" => boxes.push((parse_reals(&e.value, e.line)?, e.line)),
            _ => return Err(unknown(e)),
        }
    }
    let m = m.ok_or_else(|| Error::Parse { line: 0, msg: "missing `m`".into() })?;
    let n = n.ok_or_else(|| Error::Parse { line: 0, msg: "missing `n`".into() })?;
    let (values, line) = lambda.ok_or_else(|| Error::Parse { line: 0, msg: "missing `lambda`".into() })?;
    if values.len() != m * n {
        return Err(Error::Parse { line, msg: format!("lambda needs {} entries, got {}", m * n, values.len()) });
    }
    let lambda = DMatrix::from_row_slice(m, n, &values);
    let boxes = boxes
        .into_iter()
        .map(|(v, line)| boxes_from(&v, m, line))
        .collect::<Result<Vec<_>>>()?;
    QuasiperiodicSet::new(lambda, JordanSet::from_boxes(m, boxes)?)
}

pub fn load_quasiperiodic(path: &Path) -> Result<QuasiperiodicSet> {
    parse_quasiperiodic(&std::fs::read_to_string(path)?)
}
