// SPDX-License-Identifier: Apache-2.0

//! Operator expressions over Pauli products.
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := unary ("*" unary)*
//! unary  := "-" unary | atom
//! atom   := number | number "i" | "i" | pauli | "(" expr ")"
//! ```
//!
//! A pauli word is a string over `I X Y Z` with one letter per qubit. A bare
//! scalar stands for that multiple of the identity; `*` between operators is
//! the matrix product.

use std::fmt;

use dfm_core::linalg::{pauli_string, qubit_count};
use dfm_core::ComplexMatrix;
use nalgebra::Complex;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExprError {
    /// 1-based character column inside the expression.
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "column {}: {}", self.column, self.message)
    }
}

impl std::error::Error for ExprError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Imag(f64),
    Word(String),
    Plus,
    Minus,
    Star,
    LParen,
    RParen,
}

fn err(column: usize, message: impl Into<String>) -> ExprError {
    ExprError {
        column,
        message: message.into(),
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        let col = i + 1;
        match ch {
            c if c.is_whitespace() => i += 1,
            '+' => {
                out.push((Tok::Plus, col));
                i += 1;
            }
            '-' => {
                out.push((Tok::Minus, col));
                i += 1;
            }
            '*' => {
                out.push((Tok::Star, col));
                i += 1;
            }
            '(' => {
                out.push((Tok::LParen, col));
                i += 1;
            }
            ')' => {
                out.push((Tok::RParen, col));
                i += 1;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                // exponent, e.g. 1e-3
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        while j < chars.len() && chars[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let v: f64 = text
                    .parse()
                    .map_err(|_| err(col, format!("malformed number `{text}`")))?;
                if i < chars.len()
                    && chars[i] == 'i'
                    && !chars.get(i + 1).is_some_and(|c| c.is_alphanumeric())
                {
                    out.push((Tok::Imag(v), col));
                    i += 1;
                } else {
                    out.push((Tok::Num(v), col));
                }
            }
            c if c.is_alphanumeric() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push((Tok::Word(chars[start..i].iter().collect()), col));
            }
            other => return Err(err(col, format!("unexpected character `{other}`"))),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
enum Value {
    Scalar(Complex<f64>),
    Op(ComplexMatrix),
}

impl Value {
    fn into_op(self, n: usize) -> ComplexMatrix {
        match self {
            Value::Scalar(s) => ComplexMatrix::identity(n, n).map(|z| z * s),
            Value::Op(m) => m,
        }
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    n: usize,
    qubits: Option<usize>,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn column(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.1)
    }

    fn expr(&mut self) -> Result<Value, ExprError> {
        let mut acc = self.term()?;
        while let Some(t) = self.peek() {
            let sign = match t {
                Tok::Plus => 1.0,
                Tok::Minus => -1.0,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.term()?;
            acc = match (acc, rhs) {
                (Value::Scalar(a), Value::Scalar(b)) => Value::Scalar(a + b * sign),
                (a, b) => Value::Op(a.into_op(self.n) + b.into_op(self.n).map(|z| z * sign)),
            };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Value, ExprError> {
        let mut acc = self.unary()?;
        while self.peek() == Some(&Tok::Star) {
            self.pos += 1;
            let rhs = self.unary()?;
            acc = match (acc, rhs) {
                (Value::Scalar(a), Value::Scalar(b)) => Value::Scalar(a * b),
                (Value::Scalar(a), Value::Op(m)) | (Value::Op(m), Value::Scalar(a)) => {
                    Value::Op(m.map(|z| z * a))
                }
                (Value::Op(a), Value::Op(b)) => Value::Op(a * b),
            };
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Value, ExprError> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            return Ok(match self.unary()? {
                Value::Scalar(s) => Value::Scalar(-s),
                Value::Op(m) => Value::Op(-m),
            });
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Value, ExprError> {
        let col = self.column();
        let Some((tok, _)) = self.toks.get(self.pos).cloned() else {
            return Err(err(col, "unexpected end of expression"));
        };
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Value::Scalar(Complex::new(v, 0.0))),
            Tok::Imag(v) => Ok(Value::Scalar(Complex::new(0.0, v))),
            Tok::Word(w) if w == "i" => Ok(Value::Scalar(Complex::new(0.0, 1.0))),
            Tok::Word(w) => self.pauli(&w, col),
            Tok::LParen => {
                let v = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(err(self.column(), "expected `)`"));
                }
                self.pos += 1;
                Ok(v)
            }
            other => Err(err(col, format!("unexpected {}", describe(&other)))),
        }
    }

    fn pauli(&self, w: &str, col: usize) -> Result<Value, ExprError> {
        if !w.chars().all(|c| matches!(c, 'I' | 'X' | 'Y' | 'Z')) {
            return Err(err(col, format!("unknown token `{w}`")));
        }
        let Some(q) = self.qubits else {
            return Err(err(
                col,
                format!(
                    "pauli word `{w}` needs a power-of-two dimension, model has n = {}",
                    self.n
                ),
            ));
        };
        if w.len() != q {
            return Err(err(
                col,
                format!(
                    "pauli word `{w}` has {} letters, expected {q} for n = {}",
                    w.len(),
                    self.n
                ),
            ));
        }
        Ok(Value::Op(pauli_string(w).expect("checked letters")))
    }
}

fn describe(t: &Tok) -> &'static str {
    match t {
        Tok::Plus => "`+`",
        Tok::Minus => "`-`",
        Tok::Star => "`*`",
        Tok::LParen => "`(`",
        Tok::RParen => "`)`",
        _ => "token",
    }
}

/// Evaluates `src` to an n × n complex matrix.
pub fn parse_operator(src: &str, n: usize) -> Result<ComplexMatrix, ExprError> {
    let toks = lex(src)?;
    if toks.is_empty() {
        return Err(err(1, "empty expression"));
    }
    let mut p = Parser {
        toks,
        pos: 0,
        n,
        qubits: qubit_count(n),
        end: src.chars().count() + 1,
    };
    let v = p.expr()?;
    if p.pos != p.toks.len() {
        let (tok, col) = &p.toks[p.pos];
        return Err(match tok {
            Tok::Word(w) => err(*col, format!("unexpected token `{w}`")),
            Tok::Num(_) | Tok::Imag(_) => err(*col, "number without operator (missing `*`?)"),
            other => err(*col, format!("unexpected {}", describe(other))),
        });
    }
    Ok(v.into_op(n))
}

/// Pauli-sum rendering `c₁*P₁ + c₂*P₂ + …` for power-of-two `n`, dropping
/// coefficients below `1e-15`. Returns `None` for other dimensions.
pub fn format_operator(m: &ComplexMatrix) -> Option<String> {
    let n = m.nrows();
    let q = qubit_count(n)?;
    let mut terms = Vec::new();
    for label in dfm_core::linalg::pauli_labels(q) {
        let p: ComplexMatrix = pauli_string(&label).expect("valid label");
        let c = (&p * m).trace() / n as f64;
        if c.norm() < 1e-15 {
            continue;
        }
        terms.push(format!("{}*{label}", format_scalar(c)));
    }
    if terms.is_empty() {
        return Some("0".into());
    }
    Some(terms.join(" + "))
}

/// `1.5`, `2.0i`, `(0.5+0.25i)`; uses shortest round-trip float formatting.
pub fn format_scalar(c: Complex<f64>) -> String {
    match (c.re != 0.0, c.im != 0.0) {
        (_, false) => paren_neg(c.re),
        (false, true) if c.im < 0.0 => format!("(-{:?}i)", -c.im),
        (false, true) => format!("{:?}i", c.im),
        (true, true) => {
            let sign = if c.im < 0.0 { '-' } else { '+' };
            format!("({:?}{sign}{:?}i)", c.re, c.im.abs())
        }
    }
}

fn paren_neg(x: f64) -> String {
    if x < 0.0 {
        format!("(-{:?})", -x)
    } else {
        format!("{x:?}")
    }
}
