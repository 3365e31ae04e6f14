// SPDX-License-Identifier: Apache-2.0
#![allow(dead_code)]

use dfm_core::linalg::{DensityMatrix, Hermitian, Tolerances};
use dfm_core::ComplexMatrix;
use nalgebra::Complex;
use proptest::prelude::*;

pub fn complex_matrix(n: usize, v: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |i, j| {
        Complex::new(v[2 * (i * n + j)], v[2 * (i * n + j) + 1])
    })
}

pub fn raw(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 2 * n * n)
}

pub fn hermitian(n: usize) -> impl Strategy<Value = Hermitian<f64>> {
    raw(n).prop_map(move |v| Hermitian::from_hermitian_part(&complex_matrix(n, &v)))
}

/// Full-rank density matrix G G† / Tr, nudged away from singularity.
pub fn density(n: usize) -> impl Strategy<Value = DensityMatrix<f64>> {
    raw(n).prop_map(move |v| density_from(n, &v))
}

pub fn density_from(n: usize, v: &[f64]) -> DensityMatrix<f64> {
    let g = complex_matrix(n, v);
    let m = &g * g.adjoint() + ComplexMatrix::identity(n, n).map(|z| z * 1e-3);
    let tr = m.trace().re;
    DensityMatrix::new(m.map(|z| z / tr), &Tolerances::default()).unwrap()
}

pub fn unitary(n: usize) -> impl Strategy<Value = ComplexMatrix> {
    raw(n).prop_map(move |v| complex_matrix(n, &v).qr().q())
}

/// Diagonal density matrix with the given (unnormalized, positive) weights.
pub fn diag_density(w: &[f64]) -> DensityMatrix<f64> {
    let s: f64 = w.iter().sum();
    let p: Vec<f64> = w.iter().map(|x| x / s).collect();
    DensityMatrix::diagonal(&p, &Tolerances::default()).unwrap()
}

pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}
