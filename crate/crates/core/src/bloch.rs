// SPDX-License-Identifier: Apache-2.0

//! Real coherence-vector coordinates for density matrices and the bilinear
//! form `ẋ = Ax + Σ (B_α x) u_α + Σ (G_α x) γ_α` of the master equation.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{
    pauli_labels, pauli_string, qubit_count, ComplexMatrix, Hermitian, RealMatrix,
};
use crate::lindblad::{dissipator, hamiltonian_action, ControlSchedule, LindbladModel, Signal};
use crate::scalar::{c, Real};

/// Coordinate system for the coherence vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoordinateMode {
    /// `ρ11 − ρii` (i = 2..n), then `ρij + ρji` and `i(ρij − ρji)` for
    /// i > j in row-major order: n² − 1 components, trace dropped.
    Paper15,
    /// [`CoordinateMode::Paper15`] with `Tr ρ` appended: n² components.
    Paper16,
    /// `Tr[ρ σ_k]` over Pauli products, identity first: n² components.
    PauliFull,
}

impl CoordinateMode {
    pub const ALL: [CoordinateMode; 3] = [Self::Paper15, Self::Paper16, Self::PauliFull];

    pub fn name(self) -> &'static str {
        match self {
            Self::Paper15 => "paper_15",
            Self::Paper16 => "paper_16",
            Self::PauliFull => "pauli_full",
        }
    }

    /// Vector length for dimension `n`.
    pub fn len(self, n: usize) -> Result<usize> {
        self.check(n)?;
        Ok(match self {
            Self::Paper15 => n * n - 1,
            _ => n * n,
        })
    }

    fn check(self, n: usize) -> Result<()> {
        if n < 2 {
            return Err(Error::ModeIncompatible {
                mode: self.name(),
                n,
                reason: "dimension must be at least 2",
            });
        }
        if self == Self::PauliFull && qubit_count(n).is_none() {
            return Err(Error::ModeIncompatible {
                mode: self.name(),
                n,
                reason: "dimension must be a power of two",
            });
        }
        Ok(())
    }

    /// Recovers `n` from a vector length.
    fn dim_for_len(self, len: usize) -> Result<usize> {
        let sq = match self {
            Self::Paper15 => len + 1,
            _ => len,
        };
        let n = (sq as f64).sqrt().round() as usize;
        if n * n != sq {
            return Err(Error::LengthMismatch {
                what: "coherence vector",
                expected: n * n - usize::from(self == Self::Paper15),
                found: len,
            });
        }
        self.check(n)?;
        Ok(n)
    }
}

impl fmt::Display for CoordinateMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CoordinateMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper_15" => Ok(Self::Paper15),
            "paper_16" => Ok(Self::Paper16),
            "pauli_full" => Ok(Self::PauliFull),
            other => Err(Error::InvalidArgument(format!(
                "unknown coordinate mode `{other}` (expected paper_15, paper_16 or pauli_full)"
            ))),
        }
    }
}

fn lower_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(|i| (0..i).map(move |j| (i, j)))
}

fn coords<T: Real>(m: &ComplexMatrix<T>, mode: CoordinateMode) -> Result<DVector<T>> {
    let n = m.nrows();
    let len = mode.len(n)?;
    let mut x = Vec::with_capacity(len);
    match mode {
        CoordinateMode::Paper15 | CoordinateMode::Paper16 => {
            for i in 1..n {
                x.push(m[(0, 0)].re - m[(i, i)].re);
            }
            for (i, j) in lower_pairs(n) {
                x.push(m[(i, j)].re + m[(j, i)].re);
            }
            // i(ρij − ρji) is real for Hermitian ρ
            for (i, j) in lower_pairs(n) {
                x.push(m[(j, i)].im - m[(i, j)].im);
            }
            if mode == CoordinateMode::Paper16 {
                x.push(m.trace().re);
            }
        }
        CoordinateMode::PauliFull => {
            let q = qubit_count(n).expect("checked by mode.len");
            for label in pauli_labels(q) {
                let s: ComplexMatrix<T> = pauli_string(&label).expect("valid label");
                x.push((&s * m).trace().re);
            }
        }
    }
    Ok(DVector::from_vec(x))
}

/// Coherence vector of a Hermitian operator.
pub fn coherence_map<T: Real>(rho: &Hermitian<T>, mode: CoordinateMode) -> Result<DVector<T>> {
    coords(rho.matrix(), mode)
}

/// The Hermitian operator with coherence vector `x`. For
/// [`CoordinateMode::Paper15`] the missing trace is set to `trace_hint`;
/// the other modes ignore it.
pub fn inverse_coherence_map<T: Real>(
    x: &DVector<T>,
    mode: CoordinateMode,
    trace_hint: T,
) -> Result<Hermitian<T>> {
    let n = mode.dim_for_len(x.len())?;
    let mut m = ComplexMatrix::<T>::zeros(n, n);
    match mode {
        CoordinateMode::Paper15 | CoordinateMode::Paper16 => {
            let d = &x.as_slice()[..n - 1];
            let pairs = n * (n - 1) / 2;
            let sym = &x.as_slice()[n - 1..n - 1 + pairs];
            let anti = &x.as_slice()[n - 1 + pairs..n - 1 + 2 * pairs];
            let tr = if mode == CoordinateMode::Paper16 {
                x[n * n - 1]
            } else {
                trace_hint
            };
            let sum_d = d.iter().fold(T::zero(), |a, &b| a + b);
            let r11 = (tr + sum_d) / T::lit(n as f64);
            m[(0, 0)] = c(r11, T::zero());
            for i in 1..n {
                m[(i, i)] = c(r11 - d[i - 1], T::zero());
            }
            let half = T::lit(0.5);
            for (k, (i, j)) in lower_pairs(n).enumerate() {
                let z = c(sym[k] * half, -anti[k] * half);
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        CoordinateMode::PauliFull => {
            let q = qubit_count(n).expect("checked by dim_for_len");
            let inv_n = T::one() / T::lit(n as f64);
            for (k, label) in pauli_labels(q).iter().enumerate() {
                let s: ComplexMatrix<T> = pauli_string(label).expect("valid label");
                m += s.map(|z| z * (x[k] * inv_n));
            }
        }
    }
    Ok(Hermitian::from_hermitian_part(&m))
}

/// Matrices of the drift, control and dissipation superoperators in one
/// coordinate system.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearModel<T: Real> {
    pub mode: CoordinateMode,
    /// Hilbert-space dimension.
    pub n: usize,
    pub a: RealMatrix<T>,
    pub b: Vec<RealMatrix<T>>,
    pub g: Vec<RealMatrix<T>>,
    pub control_labels: Vec<String>,
    pub jump_labels: Vec<String>,
}

impl<T: Real> BilinearModel<T> {
    /// Coordinate dimension N.
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// The same model in other coordinates, `M ↦ S M S⁻¹`.
    pub fn conjugated(
        &self,
        s: &RealMatrix<T>,
        s_inv: &RealMatrix<T>,
        mode: CoordinateMode,
    ) -> Self {
        let conj = |m: &RealMatrix<T>| s * m * s_inv;
        Self {
            mode,
            n: self.n,
            a: conj(&self.a),
            b: self.b.iter().map(conj).collect(),
            g: self.g.iter().map(conj).collect(),
            control_labels: self.control_labels.clone(),
            jump_labels: self.jump_labels.clone(),
        }
    }
}

fn superop_matrix<T: Real>(
    n: usize,
    mode: CoordinateMode,
    op: impl Fn(&ComplexMatrix<T>) -> ComplexMatrix<T>,
) -> Result<RealMatrix<T>> {
    let len = mode.len(n)?;
    let mut out = RealMatrix::zeros(len, len);
    for j in 0..len {
        let mut e = DVector::zeros(len);
        e[j] = T::one();
        let basis = inverse_coherence_map(&e, mode, T::zero())?;
        let img = coords(&op(basis.matrix()), mode)?;
        out.set_column(j, &img);
    }
    Ok(out)
}

/// Builds the bilinear model column by column: column `j` of each matrix is
/// the coherence vector of the superoperator applied to the operator dual to
/// coordinate `j`.
///
/// [`CoordinateMode::Paper15`] drops the trace coordinate, so every
/// dissipator must annihilate the identity (normal jump operators).
pub fn build_bilinear<T: Real>(
    model: &LindbladModel<T>,
    mode: CoordinateMode,
) -> Result<BilinearModel<T>> {
    let n = model.dim();
    mode.check(n)?;
    if mode == CoordinateMode::Paper15 {
        let id = ComplexMatrix::<T>::identity(n, n);
        for j in model.jumps() {
            let d = dissipator(&j.op, &id);
            if crate::linalg::max_abs(&d).to_f64() > 1e-12 {
                return Err(Error::ModeIncompatible {
                    mode: mode.name(),
                    n,
                    reason: "non-unital dissipator moves the dropped trace direction",
                });
            }
        }
    }
    let a = superop_matrix(n, mode, |r| hamiltonian_action(model.h0().matrix(), r))?;
    let b = model
        .controls()
        .iter()
        .map(|ctl| superop_matrix(n, mode, |r| hamiltonian_action(ctl.op.matrix(), r)))
        .collect::<Result<Vec<_>>>()?;
    let g = model
        .jumps()
        .iter()
        .map(|j| superop_matrix(n, mode, |r| dissipator(&j.op, r)))
        .collect::<Result<Vec<_>>>()?;
    Ok(BilinearModel {
        mode,
        n,
        a,
        b,
        g,
        control_labels: model.controls().iter().map(|c| c.label.clone()).collect(),
        jump_labels: model.jumps().iter().map(|j| j.label.clone()).collect(),
    })
}

/// `Ax + Σ (B_α x) u_α + Σ (G_α x) γ_α`.
pub fn bilinear_rhs<T: Real>(
    bm: &BilinearModel<T>,
    x: &DVector<T>,
    u: &[T],
    gamma: &[T],
) -> Result<DVector<T>> {
    if x.len() != bm.dim() {
        return Err(Error::LengthMismatch {
            what: "coherence vector",
            expected: bm.dim(),
            found: x.len(),
        });
    }
    if u.len() != bm.b.len() {
        return Err(Error::LengthMismatch {
            what: "controls",
            expected: bm.b.len(),
            found: u.len(),
        });
    }
    if gamma.len() != bm.g.len() {
        return Err(Error::LengthMismatch {
            what: "rates",
            expected: bm.g.len(),
            found: gamma.len(),
        });
    }
    let mut out = &bm.a * x;
    for (b, &ua) in bm.b.iter().zip(u) {
        out += (b * x) * ua;
    }
    for (g, &ga) in bm.g.iter().zip(gamma) {
        out += (g * x) * ga;
    }
    Ok(out)
}

/// Integrates the bilinear system on `t_grid` with fixed-step RK4 (same
/// substepping and signal sampling as the master-equation integrator).
pub fn propagate_bilinear<T: Real>(
    bm: &BilinearModel<T>,
    x0: &DVector<T>,
    schedule: &ControlSchedule<T>,
    rates: &[Signal<T>],
    t_grid: &[T],
    step: f64,
) -> Result<Vec<DVector<T>>> {
    if t_grid.len() < 2 {
        return Err(Error::InvalidArgument(
            "time grid needs at least two points".into(),
        ));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidSchedule(
            "time grid must be strictly increasing".into(),
        ));
    }
    if !(step > 0.0) {
        return Err(Error::InvalidArgument("step must be positive".into()));
    }
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let sixth = T::lit(1.0 / 6.0);
    let mut x = x0.clone();
    let mut out = vec![x.clone()];
    for w in t_grid.windows(2) {
        let nsub = ((w[1] - w[0]).to_f64() / step).ceil().max(1.0) as usize;
        let h = (w[1] - w[0]) / T::lit(nsub as f64);
        for s in 0..nsub {
            let mid = w[0] + h * (T::lit(s as f64) + half);
            let gamma: Vec<T> = rates.iter().map(|r| r.at(mid)).collect();
            let u = schedule.at(mid);
            let eval = |y: &DVector<T>| bilinear_rhs(bm, y, &u, &gamma);
            let k1 = eval(&x)?;
            let k2 = eval(&(&x + &k1 * (h * half)))?;
            let k3 = eval(&(&x + &k2 * (h * half)))?;
            let k4 = eval(&(&x + &k3 * h))?;
            x += (k1 + k2 * two + k3 * two + k4) * (h * sixth);
        }
        out.push(x.clone());
    }
    Ok(out)
}

/// Linear map `S` with `x_to = S x_from` for every Hermitian operator.
///
/// Only defined between modes of equal length (paper_16 and pauli_full, or
/// a mode and itself).
pub fn mode_transform<T: Real>(
    n: usize,
    from: CoordinateMode,
    to: CoordinateMode,
) -> Result<RealMatrix<T>> {
    let lf = from.len(n)?;
    let lt = to.len(n)?;
    if lf != lt {
        return Err(Error::ModeIncompatible {
            mode: to.name(),
            n,
            reason: "coordinate lengths differ, no invertible transform",
        });
    }
    let mut s = DMatrix::zeros(lt, lf);
    for j in 0..lf {
        let mut e = DVector::zeros(lf);
        e[j] = T::one();
        let op = inverse_coherence_map(&e, from, T::zero())?;
        s.set_column(j, &coherence_map(&op, to)?);
    }
    Ok(s)
}
