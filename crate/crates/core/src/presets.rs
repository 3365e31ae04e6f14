// SPDX-License-Identifier: Apache-2.0

//! Built-in models.

use crate::error::{Error, Result};
use crate::linalg::{pauli_string, Hermitian};
use crate::lindblad::{Control, Jump, LindbladModel, Signal};
use crate::scalar::Real;

pub const TWO_QUBIT_DEPHASING: &str = "two-qubit-dephasing";

/// Names accepted by [`preset`].
pub const PRESETS: &[&str] = &[TWO_QUBIT_DEPHASING];

/// Two qubits, no drift, local controls `X/2, Y/2, Z/2` on each qubit
/// (knobs `x1 y1 z1 x2 y2 z2`) and independent dephasing `Z⊗I`, `I⊗Z` at
/// unit rate.
pub fn two_qubit_dephasing<T: Real>() -> LindbladModel<T> {
    let half = |label: &str| {
        let m = pauli_string::<T>(label)
            .expect("valid label")
            .map(|z| z * T::lit(0.5));
        Hermitian::from_hermitian_part(&m)
    };
    let mut controls = Vec::new();
    for q in 1..=2 {
        for axis in ['X', 'Y', 'Z'] {
            let label = if q == 1 {
                format!("{axis}I")
            } else {
                format!("I{axis}")
            };
            controls.push(Control {
                label: format!("{}{q}", axis.to_ascii_lowercase()),
                op: half(&label),
            });
        }
    }
    let jumps = [("z1", "ZI"), ("z2", "IZ")]
        .into_iter()
        .map(|(label, op)| Jump {
            label: label.into(),
            op: pauli_string(op).expect("valid label"),
            rate: Signal::Constant(T::one()),
        })
        .collect();
    LindbladModel::new(Hermitian::zeros(4), controls, jumps).expect("preset is well formed")
}

pub fn preset<T: Real>(name: &str) -> Result<LindbladModel<T>> {
    match name {
        TWO_QUBIT_DEPHASING => Ok(two_qubit_dephasing()),
        other => Err(Error::InvalidArgument(format!(
            "unknown preset `{other}` (available: {})",
            PRESETS.join(", ")
        ))),
    }
}
