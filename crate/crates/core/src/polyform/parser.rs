//! Recursive-descent parser for degree-≤2 polynomial expressions.
//!
//! Grammar (whitespace insignificant):
//!
//! ```text
//! expr   := ('+' | '-')? term (('+' | '-') term)*
//! term   := coeff ('*' factor)* | factor ('*' factor)*
//! factor := var ('^' ('1' | '2'))?
//! var    := 'x' digits
//! coeff  := decimal literal
//! ```
//!
//! Variables are 1-indexed (`x1`, `x2`, …) and the inferred dimension is the
//! highest index mentioned.

use std::fmt;

use super::Poly2;
use crate::linalg::SymMat;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Empty,
    UnexpectedChar(char),
    UnexpectedEnd,
    InvalidNumber,
    MissingVariableIndex,
    VariableIndexZero,
    /// Exponent written as something other than 1 or 2.
    BadExponent,
    /// A monomial of total degree greater than two.
    DegreeExceedsTwo,
}

/// Parse failure with the byte position it was detected at.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub pos: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match &self.kind {
            ParseErrorKind::Empty => "empty input".to_string(),
            ParseErrorKind::UnexpectedChar(c) => format!("unexpected character '{c}'"),
            ParseErrorKind::UnexpectedEnd => "unexpected end of input".to_string(),
            ParseErrorKind::InvalidNumber => "invalid numeric literal".to_string(),
            ParseErrorKind::MissingVariableIndex => "expected digits after 'x'".to_string(),
            ParseErrorKind::VariableIndexZero => "variable indices start at x1".to_string(),
            ParseErrorKind::BadExponent => "exponent must be 1 or 2".to_string(),
            ParseErrorKind::DegreeExceedsTwo => "degree exceeds 2".to_string(),
        };
        write!(f, "parse error at position {}: {}", self.pos, what)
    }
}

impl std::error::Error for ParseError {}

struct Scanner<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Scanner<'a> {
    fn new(text: &'a str) -> Self {
        Scanner {
            bytes: text.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek()?;
        self.pos += 1;
        Some(b)
    }

    fn err(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            pos: self.pos,
            kind,
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let mut saw_digit = false;
        while let Some(b) = self.bytes.get(self.pos) {
            if b.is_ascii_digit() {
                saw_digit = true;
                self.pos += 1;
            } else {
                break;
            }
        }
        if self.bytes.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            while let Some(b) = self.bytes.get(self.pos) {
                if b.is_ascii_digit() {
                    saw_digit = true;
                    self.pos += 1;
                } else {
                    break;
                }
            }
        }
        if !saw_digit {
            return Err(ParseError {
                pos: start,
                kind: ParseErrorKind::InvalidNumber,
            });
        }
        if matches!(self.bytes.get(self.pos), Some(b'e') | Some(b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.bytes.get(self.pos), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            let mut exp_digit = false;
            while let Some(b) = self.bytes.get(self.pos) {
                if b.is_ascii_digit() {
                    exp_digit = true;
                    self.pos += 1;
                } else {
                    break;
                }
            }
            if !exp_digit {
                // 'e' belonged to something else; not valid here
                self.pos = mark;
                return Err(ParseError {
                    pos: mark,
                    kind: ParseErrorKind::InvalidNumber,
                });
            }
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii slice");
        text.parse::<f64>().map_err(|_| ParseError {
            pos: start,
            kind: ParseErrorKind::InvalidNumber,
        })
    }

    /// `x<digits>` with an optional `^1` / `^2`. Returns (0-based index, power).
    fn factor(&mut self) -> Result<(usize, u32), ParseError> {
        match self.bump() {
            Some(b'x') => {}
            Some(c) => {
                self.pos -= 1;
                return Err(self.err(ParseErrorKind::UnexpectedChar(c as char)));
            }
            None => return Err(self.err(ParseErrorKind::UnexpectedEnd)),
        }
        let start = self.pos;
        let mut index: usize = 0;
        let mut saw_digit = false;
        while let Some(b) = self.bytes.get(self.pos) {
            if b.is_ascii_digit() {
                saw_digit = true;
                index = index
                    .saturating_mul(10)
                    .saturating_add((b - b'0') as usize);
                self.pos += 1;
            } else {
                break;
            }
        }
        if !saw_digit {
            return Err(ParseError {
                pos: start,
                kind: ParseErrorKind::MissingVariableIndex,
            });
        }
        if index == 0 {
            return Err(ParseError {
                pos: start,
                kind: ParseErrorKind::VariableIndexZero,
            });
        }

        let mut power = 1u32;
        if self.peek() == Some(b'^') {
            self.bump();
            let digit_pos = self.pos;
            match self.bump() {
                Some(b'1') => power = 1,
                Some(b'2') => power = 2,
                Some(b) if b.is_ascii_digit() && b > b'2' => {
                    return Err(ParseError {
                        pos: digit_pos,
                        kind: ParseErrorKind::DegreeExceedsTwo,
                    });
                }
                Some(_) | None => {
                    return Err(ParseError {
                        pos: digit_pos,
                        kind: ParseErrorKind::BadExponent,
                    });
                }
            }
        }
        Ok((index - 1, power))
    }
}

/// One parsed monomial: coefficient times at most two variable factors.
struct Term {
    coeff: f64,
    // (variable index, power) pairs; total degree ≤ 2
    vars: Vec<(usize, u32)>,
}

pub fn parse(text: &str) -> Result<Poly2, ParseError> {
    let mut sc = Scanner::new(text);
    if sc.peek().is_none() {
        return Err(sc.err(ParseErrorKind::Empty));
    }

    let mut terms: Vec<Term> = Vec::new();
    let mut sign = 1.0;
    // optional leading sign on the first term
    match sc.peek() {
        Some(b'+') => {
            sc.bump();
        }
        Some(b'-') => {
            sc.bump();
            sign = -1.0;
        }
        _ => {}
    }

    loop {
        terms.push(parse_term(&mut sc, sign)?);
        match sc.peek() {
            None => break,
            Some(b'+') => {
                sc.bump();
                sign = 1.0;
            }
            Some(b'-') => {
                sc.bump();
                sign = -1.0;
            }
            Some(c) => return Err(sc.err(ParseErrorKind::UnexpectedChar(c as char))),
        }
    }

    let n = terms
        .iter()
        .flat_map(|t| t.vars.iter().map(|&(i, _)| i + 1))
        .max()
        .unwrap_or(0);

    let mut c0 = 0.0;
    let mut lin = vec![0.0; n];
    let mut quad = SymMat::zeros(n);
    for t in terms {
        let mut expanded: Vec<usize> = Vec::new();
        for &(i, p) in &t.vars {
            for _ in 0..p {
                expanded.push(i);
            }
        }
        match expanded.as_slice() {
            [] => c0 += t.coeff,
            [i] => lin[*i] += t.coeff,
            [i, j] if i == j => quad.add(*i, *i, t.coeff),
            // the coefficient of a cross term splits evenly over the two
            // symmetric entries so that xᵀ·quad·x reproduces it exactly
            [i, j] => quad.add(*i, *j, 0.5 * t.coeff),
            _ => unreachable!("terms past degree 2 are rejected while parsing"),
        }
    }

    Ok(Poly2 { n, c0, lin, quad })
}

fn parse_term(sc: &mut Scanner, sign: f64) -> Result<Term, ParseError> {
    let term_start = {
        sc.skip_ws();
        sc.pos
    };
    let mut coeff;
    let mut vars: Vec<(usize, u32)> = Vec::new();
    let mut degree: u32 = 0;

    match sc.peek() {
        Some(b) if b.is_ascii_digit() || b == b'.' => {
            coeff = sc.number()?;
        }
        Some(b'x') => {
            coeff = 1.0;
            let (i, p) = sc.factor()?;
            vars.push((i, p));
            degree += p;
        }
        Some(c) => return Err(sc.err(ParseErrorKind::UnexpectedChar(c as char))),
        None => return Err(sc.err(ParseErrorKind::UnexpectedEnd)),
    }
    coeff *= sign;

    while sc.peek() == Some(b'*') {
        sc.bump();
        let factor_pos = {
            sc.skip_ws();
            sc.pos
        };
        let (i, p) = sc.factor()?;
        degree += p;
        if degree > 2 {
            return Err(ParseError {
                pos: factor_pos,
                kind: ParseErrorKind::DegreeExceedsTwo,
            });
        }
        vars.push((i, p));
    }

    if degree > 2 {
        return Err(ParseError {
            pos: term_start,
            kind: ParseErrorKind::DegreeExceedsTwo,
        });
    }
    Ok(Term { coeff, vars })
}
