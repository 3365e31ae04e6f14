// SPDX-License-Identifier: Apache-2.0

//! JSON model files.
//!
//! ```json
//! {
//!   "dimension": 4,
//!   "h0": "0",
//!   "controls": [{ "label": "x1", "op": "0.5*XI" }],
//!   "jumps": [
//!     { "label": "z1", "op": "ZI", "rate": 1.0 },
//!     { "label": "z2", "op": "IZ", "rate": "stochastic" },
//!     { "label": "z3", "op": "ZZ", "rate": { "times": [0, 0.5], "values": [0, 1] } }
//!   ],
//!   "initial_state": { "diagonal": [0.4, 0.3, 0.2, 0.1] },
//!   "mode": "paper_16"
//! }
//! ```
//!
//! Operators are expressions (see [`crate::expr`]) or matrix literals whose
//! entries are numbers or `[re, im]` pairs. Initial states are
//! `"maximally-mixed"`, a ket such as `"|0+>"` (one of `0 1 + -` per qubit)
//! or `"|5>"` (basis index), or an object with one of `diagonal`, `pure`,
//! `matrix`.

use std::fmt;

use dfm_core::bloch::CoordinateMode;
use dfm_core::linalg::{qubit_count, DensityMatrix, Hermitian, Tolerances};
use dfm_core::lindblad::{Control, Jump, LindbladModel, PiecewiseConstant, Signal};
use dfm_core::ComplexMatrix;
use nalgebra::{Complex, DVector};
use serde::{Deserialize, Serialize};

use crate::expr::{format_operator, parse_operator};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub dimension: usize,
    #[serde(default = "zero_operator")]
    pub h0: OperatorSpec,
    #[serde(default)]
    pub controls: Vec<ControlSpec>,
    #[serde(default)]
    pub jumps: Vec<JumpSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<StateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
}

fn zero_operator() -> OperatorSpec {
    OperatorSpec::Expr("0".into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OperatorSpec {
    Expr(String),
    Matrix(Vec<Vec<Entry>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl Entry {
    fn value(self) -> Complex<f64> {
        match self {
            Entry::Real(x) => Complex::new(x, 0.0),
            Entry::Complex([re, im]) => Complex::new(re, im),
        }
    }

    fn from_value(z: Complex<f64>) -> Self {
        if z.im == 0.0 {
            Entry::Real(z.re)
        } else {
            Entry::Complex([z.re, z.im])
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSpec {
    pub label: String,
    pub op: OperatorSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpSpec {
    pub label: String,
    pub op: OperatorSpec,
    pub rate: RateSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RateSpec {
    Constant(f64),
    Keyword(String),
    Schedule(ScheduleSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Named(String),
    Diagonal(DiagonalState),
    Pure(PureState),
    Matrix(MatrixState),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagonalState {
    pub diagonal: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PureState {
    pub pure: Vec<Entry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixState {
    pub matrix: Vec<Vec<Entry>>,
}

/// A model-file problem, located in the source text when possible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelError {
    /// JSON path of the offending field, e.g. `jumps[1].op`.
    pub field: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "line {l}, column {c}")?,
            _ => f.write_str("model")?,
        }
        if !self.field.is_empty() {
            write!(f, " ({})", self.field)?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ModelError {}

/// A validated model plus the bookkeeping the library model does not carry.
#[derive(Debug, Clone)]
pub struct ParsedModel {
    pub model: LindbladModel<f64>,
    /// Per jump: whether the file declared the rate `"stochastic"`. Such
    /// channels carry a placeholder unit rate in `model`.
    pub stochastic: Vec<bool>,
    pub initial_state: Option<DensityMatrix<f64>>,
    pub mode: Option<CoordinateMode>,
}

impl ParsedModel {
    pub fn any_stochastic(&self) -> bool {
        self.stochastic.iter().any(|&s| s)
    }
}

struct Ctx<'a> {
    src: Option<&'a str>,
}

impl Ctx<'_> {
    fn fail(
        &self,
        field: String,
        needle: Option<&str>,
        offset: usize,
        message: String,
    ) -> ModelError {
        let pos = match (self.src, needle) {
            (Some(src), Some(n)) => locate(src, n).map(|(l, c)| (l, c + offset)),
            _ => None,
        };
        ModelError {
            field,
            line: pos.map(|p| p.0),
            column: pos.map(|p| p.1),
            message,
        }
    }
}

/// 1-based line and column of the first character inside the quoted
/// occurrence of `needle`.
fn locate(src: &str, needle: &str) -> Option<(usize, usize)> {
    let quoted = serde_json::to_string(needle).ok()?;
    let at = src.find(&quoted)? + 1;
    let before = &src[..at];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    Some((line, col))
}

fn operator(
    ctx: &Ctx,
    spec: &OperatorSpec,
    n: usize,
    field: String,
) -> Result<ComplexMatrix, ModelError> {
    match spec {
        OperatorSpec::Expr(text) => parse_operator(text, n).map_err(|e| {
            ctx.fail(
                field,
                Some(text),
                e.column - 1,
                format!("{} (column {} of the expression)", e.message, e.column),
            )
        }),
        OperatorSpec::Matrix(rows) => matrix(ctx, rows, n, field),
    }
}

fn matrix(
    ctx: &Ctx,
    rows: &[Vec<Entry>],
    n: usize,
    field: String,
) -> Result<ComplexMatrix, ModelError> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(ctx.fail(field, None, 0, format!("matrix literal must be {n} × {n}")));
    }
    Ok(ComplexMatrix::from_fn(n, n, |i, j| rows[i][j].value()))
}

fn named_state(ctx: &Ctx, name: &str, n: usize) -> Result<DensityMatrix<f64>, ModelError> {
    let field = "initial_state".to_string();
    if name == "maximally-mixed" {
        return Ok(DensityMatrix::maximally_mixed(n));
    }
    let bad = |msg: String| ctx.fail(field.clone(), Some(name), 0, msg);
    let Some(inner) = name.strip_prefix('|').and_then(|s| s.strip_suffix('>')) else {
        return Err(bad(format!(
            "unknown state `{name}` (expected maximally-mixed or a ket like |01>)"
        )));
    };
    let psi = if qubit_count(n).is_some_and(|q| inner.chars().count() == q) {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut psi = DVector::from_element(1, Complex::new(1.0, 0.0));
        for ch in inner.chars() {
            let local = match ch {
                '0' => [1.0, 0.0],
                '1' => [0.0, 1.0],
                '+' => [s, s],
                '-' => [s, -s],
                other => return Err(bad(format!("unknown qubit state `{other}` in `{name}`"))),
            };
            let v = DVector::from_iterator(2, local.iter().map(|&x| Complex::new(x, 0.0)));
            psi = psi.kronecker(&v);
        }
        psi
    } else {
        let k: usize = inner.parse().map_err(|_| {
            bad(format!(
                "`{name}` is neither a {n}-level basis index nor a qubit string"
            ))
        })?;
        if k >= n {
            return Err(bad(format!("basis index {k} out of range for n = {n}")));
        }
        let mut psi = DVector::zeros(n);
        psi[k] = Complex::new(1.0, 0.0);
        psi
    };
    DensityMatrix::pure(&psi).map_err(|e| bad(e.to_string()))
}

fn state(ctx: &Ctx, spec: &StateSpec, n: usize) -> Result<DensityMatrix<f64>, ModelError> {
    let field = || "initial_state".to_string();
    let wrap = |e: dfm_core::Error| ctx.fail(field(), None, 0, e.to_string());
    match spec {
        StateSpec::Named(name) => named_state(ctx, name, n),
        StateSpec::Diagonal(d) => {
            if d.diagonal.len() != n {
                return Err(ctx.fail(field(), None, 0, format!("diagonal needs {n} entries")));
            }
            DensityMatrix::diagonal(&d.diagonal, &Tolerances::default()).map_err(wrap)
        }
        StateSpec::Pure(p) => {
            if p.pure.len() != n {
                return Err(ctx.fail(field(), None, 0, format!("pure state needs {n} amplitudes")));
            }
            DensityMatrix::pure(&DVector::from_iterator(n, p.pure.iter().map(|e| e.value())))
                .map_err(wrap)
        }
        StateSpec::Matrix(m) => {
            DensityMatrix::new(matrix(ctx, &m.matrix, n, field())?, &Tolerances::default())
                .map_err(wrap)
        }
    }
}

fn rate(ctx: &Ctx, spec: &RateSpec, field: String) -> Result<(Signal<f64>, bool), ModelError> {
    match spec {
        RateSpec::Constant(g) => Ok((Signal::Constant(*g), false)),
        RateSpec::Keyword(k) if k == "stochastic" => Ok((Signal::Constant(1.0), true)),
        RateSpec::Keyword(k) => Err(ctx.fail(
            field,
            Some(k),
            0,
            format!("unknown rate `{k}` (expected a number, \"stochastic\" or a schedule)"),
        )),
        RateSpec::Schedule(s) => PiecewiseConstant::new(s.times.clone(), s.values.clone())
            .map(|p| (Signal::Piecewise(p), false))
            .map_err(|e| ctx.fail(field, None, 0, e.to_string())),
    }
}

impl ModelFile {
    pub fn from_json(src: &str) -> Result<Self, ModelError> {
        serde_json::from_str(src).map_err(|e| ModelError {
            field: String::new(),
            line: Some(e.line()),
            column: Some(e.column()),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model files serialize")
    }

    /// Validates the file; `src` (the JSON text) is only used to locate
    /// errors.
    pub fn resolve(&self, src: Option<&str>) -> Result<ParsedModel, ModelError> {
        let ctx = Ctx { src };
        let n = self.dimension;
        if n < 2 {
            return Err(ctx.fail(
                "dimension".into(),
                None,
                0,
                "dimension must be at least 2".into(),
            ));
        }
        let h0 = operator(&ctx, &self.h0, n, "h0".into())?;
        let h0 = Hermitian::new(h0, Tolerances::default().hermiticity)
            .map_err(|e| ctx.fail("h0".into(), None, 0, e.to_string()))?;
        let mut controls = Vec::new();
        for (k, c) in self.controls.iter().enumerate() {
            let field = format!("controls[{k}].op");
            let m = operator(&ctx, &c.op, n, field.clone())?;
            let op = Hermitian::new(m, Tolerances::default().hermiticity)
                .map_err(|e| ctx.fail(field, None, 0, e.to_string()))?;
            controls.push(Control {
                label: c.label.clone(),
                op,
            });
        }
        let mut jumps = Vec::new();
        let mut stochastic = Vec::new();
        for (k, j) in self.jumps.iter().enumerate() {
            let op = operator(&ctx, &j.op, n, format!("jumps[{k}].op"))?;
            let (signal, stoch) = rate(&ctx, &j.rate, format!("jumps[{k}].rate"))?;
            stochastic.push(stoch);
            jumps.push(Jump {
                label: j.label.clone(),
                op,
                rate: signal,
            });
        }
        let model = LindbladModel::new(h0, controls, jumps)
            .map_err(|e| ctx.fail(String::new(), None, 0, e.to_string()))?;
        let initial_state = self
            .initial_state
            .as_ref()
            .map(|s| state(&ctx, s, n))
            .transpose()?;
        let mode = self
            .mode
            .as_deref()
            .map(|m| {
                m.parse::<CoordinateMode>()
                    .map_err(|e| ctx.fail("mode".into(), Some(m), 0, e.to_string()))
            })
            .transpose()?;
        Ok(ParsedModel {
            model,
            stochastic,
            initial_state,
            mode,
        })
    }

    /// Writes a model back out. Operators become Pauli sums for
    /// power-of-two dimensions and matrix literals otherwise.
    pub fn from_parsed(p: &ParsedModel) -> Self {
        let m = &p.model;
        let op = |x: &ComplexMatrix| match format_operator(x) {
            Some(text) => OperatorSpec::Expr(text),
            None => OperatorSpec::Matrix(rows(x)),
        };
        Self {
            dimension: m.dim(),
            h0: op(m.h0().matrix()),
            controls: m
                .controls()
                .iter()
                .map(|c| ControlSpec {
                    label: c.label.clone(),
                    op: op(c.op.matrix()),
                })
                .collect(),
            jumps: m
                .jumps()
                .iter()
                .zip(&p.stochastic)
                .map(|(j, &stoch)| JumpSpec {
                    label: j.label.clone(),
                    op: op(&j.op),
                    rate: match (&j.rate, stoch) {
                        (_, true) => RateSpec::Keyword("stochastic".into()),
                        (Signal::Constant(g), false) => RateSpec::Constant(*g),
                        (Signal::Piecewise(s), false) => RateSpec::Schedule(ScheduleSpec {
                            times: s.times().to_vec(),
                            values: s.values().to_vec(),
                        }),
                    },
                })
                .collect(),
            initial_state: p.initial_state.as_ref().map(|s| {
                StateSpec::Matrix(MatrixState {
                    matrix: rows(s.matrix()),
                })
            }),
            mode: p.mode.map(|m| m.name().to_string()),
        }
    }
}

fn rows(m: &ComplexMatrix) -> Vec<Vec<Entry>> {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| Entry::from_value(m[(i, j)]))
                .collect()
        })
        .collect()
}

/// Resolves a state spec for dimension `n` (used for command-line
/// overrides).
pub fn resolve_state(spec: &StateSpec, n: usize) -> Result<DensityMatrix<f64>, ModelError> {
    state(&Ctx { src: None }, spec, n)
}

/// Reads and validates a model file.
pub fn parse_model(src: &str) -> Result<ParsedModel, ModelError> {
    ModelFile::from_json(src)?.resolve(Some(src))
}

/// Model file for a built-in preset, with a default initial state.
pub fn preset_file(name: &str) -> Result<ModelFile, ModelError> {
    let model = dfm_core::presets::preset::<f64>(name).map_err(|e| ModelError {
        field: String::new(),
        line: None,
        column: None,
        message: e.to_string(),
    })?;
    let n = model.dim();
    let mut file = ModelFile::from_parsed(&ParsedModel {
        stochastic: vec![false; model.jumps().len()],
        model,
        initial_state: None,
        mode: Some(CoordinateMode::Paper16),
    });
    // populations 0.4, 0.3, 0.2, 0.1 on the computational basis
    let weights: Vec<f64> = (0..n).map(|k| (n - k) as f64).collect();
    let total: f64 = weights.iter().sum();
    file.initial_state = Some(StateSpec::Diagonal(DiagonalState {
        diagonal: weights.iter().map(|w| w / total).collect(),
    }));
    Ok(file)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
  "dimension": 4,
  "h0": "0.1*ZZ",
  "controls": [{ "label": "x1", "op": "0.5*XI" }],
  "jumps": [
    { "label": "z1", "op": "ZI", "rate": 1.0 },
    { "label": "z2", "op": "IZ", "rate": "stochastic" },
    { "label": "s", "op": [[0, 1, 0, 0], [0, 0, 0, 0], [0, 0, 0, [0, 1]], [0, 0, 0, 0]], "rate": { "times": [0, 0.5], "values": [0, 2] } }
  ],
  "initial_state": "|0+>",
  "mode": "pauli_full"
}"#;

    #[test]
    fn sample_parses() {
        let p = parse_model(SAMPLE).unwrap();
        assert_eq!(p.model.dim(), 4);
        assert_eq!(p.stochastic, [false, true, false]);
        assert!(matches!(p.model.jumps()[2].rate, Signal::Piecewise(_)));
        assert_eq!(p.mode, Some(CoordinateMode::PauliFull));
        let rho = p.initial_state.unwrap();
        assert!((rho.matrix()[(0, 1)].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn unknown_token_is_located() {
        let src = SAMPLE.replace("0.5*XI", "0.5*QX");
        let e = parse_model(&src).unwrap_err();
        assert_eq!(e.field, "controls[0].op");
        assert!(e.message.contains("QX"), "{e}");
        assert_eq!(e.line, Some(4));
        // the `Q` sits 4 characters into the expression
        let line = src.lines().nth(3).unwrap();
        assert_eq!(line.chars().nth(e.column.unwrap() - 1), Some('Q'));
    }

    #[test]
    fn unknown_fields_and_bad_json_are_rejected() {
        let e = parse_model(&SAMPLE.replace("\"mode\"", "\"modus\"")).unwrap_err();
        assert!(e.message.contains("modus"));
        let e = parse_model("{ \"dimension\": 2,, }").unwrap_err();
        assert_eq!(e.line, Some(1));
        assert!(parse_model(&SAMPLE.replace("\"stochastic\"", "\"random\"")).is_err());
        assert!(parse_model(&SAMPLE.replace("pauli_full", "bloch")).is_err());
        assert!(parse_model(&SAMPLE.replace("|0+>", "|2+>")).is_err());
        assert!(parse_model(&SAMPLE.replace("\"0.1*ZZ\"", "\"i*ZZ\"")).is_err());
    }

    #[test]
    fn states_by_name_and_literal() {
        let ctx = Ctx { src: None };
        let mixed = named_state(&ctx, "maximally-mixed", 3).unwrap();
        assert!((mixed.matrix()[(2, 2)].re - 1.0 / 3.0).abs() < 1e-15);
        let e2 = named_state(&ctx, "|2>", 3).unwrap();
        assert_eq!(e2.matrix()[(2, 2)].re, 1.0);
        assert!(named_state(&ctx, "|3>", 3).is_err());
        assert!(named_state(&ctx, "psi", 3).is_err());
    }

    #[test]
    fn preset_file_round_trips() {
        let f = preset_file("two-qubit-dephasing").unwrap();
        let p = f.resolve(None).unwrap();
        let reference = dfm_core::presets::two_qubit_dephasing::<f64>();
        for (a, b) in p.model.controls().iter().zip(reference.controls()) {
            assert_eq!(a.label, b.label);
            assert!((a.op.matrix() - b.op.matrix()).norm() < 1e-15);
        }
        assert!(preset_file("nope").is_err());
    }
}
