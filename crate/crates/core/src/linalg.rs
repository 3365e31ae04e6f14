// SPDX-License-Identifier: Apache-2.0

//! Complex and real dense linear algebra used across the crate: operator
//! newtypes, Pauli products, Hermitian eigensystems and SVD-based subspace
//! helpers.

use nalgebra::{Complex, ComplexField, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::{c, ci, cr, Real, C};

/// Dense complex n×n matrix.
pub type ComplexMatrix<T> = DMatrix<C<T>>;
/// Dense real matrix.
pub type RealMatrix<T> = DMatrix<T>;

/// Default tolerances for operator and state validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub hermiticity: f64,
    pub trace: f64,
    pub psd: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermiticity: 1e-10,
            trace: 1e-9,
            psd: 1e-8,
        }
    }
}

/// A Hermitian operator, checked on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Hermitian<T: Real>(ComplexMatrix<T>);

impl<T: Real> Hermitian<T> {
    pub fn new(m: ComplexMatrix<T>, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
                context: "Hermitian operator must be square",
            });
        }
        check_finite(&m, "Hermitian operator")?;
        let deviation = hermiticity_deviation(&m).to_f64();
        if deviation > tol {
            return Err(Error::NotHermitian { deviation, tol });
        }
        Ok(Self(m))
    }

    /// Wraps the Hermitian part `(M + M†)/2` of an arbitrary square matrix.
    pub fn from_hermitian_part(m: &ComplexMatrix<T>) -> Self {
        Self(hermitian_part(m))
    }

    pub fn zeros(n: usize) -> Self {
        Self(ComplexMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(ComplexMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix<T> {
        self.0
    }

    pub fn trace(&self) -> T {
        self.0.trace().re
    }

    /// Eigenvalues in descending order with matching eigenvector columns.
    pub fn eigh(&self) -> (Vec<T>, ComplexMatrix<T>) {
        eigh_descending(&self.0)
    }

    pub fn scale(&self, s: T) -> Self {
        Self(self.0.map(|z| z * s))
    }
}

/// Trace-one positive-semidefinite Hermitian operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T: Real>(Hermitian<T>);

impl<T: Real> DensityMatrix<T> {
    pub fn new(m: ComplexMatrix<T>, tol: &Tolerances) -> Result<Self> {
        let h = Hermitian::new(m, tol.hermiticity)?;
        Self::from_hermitian(h, tol)
    }

    pub fn from_hermitian(h: Hermitian<T>, tol: &Tolerances) -> Result<Self> {
        let tr = h.trace().to_f64();
        if (tr - 1.0).abs() > tol.trace {
            return Err(Error::InvalidDensity(format!("trace {tr} differs from 1")));
        }
        let (evals, _) = h.eigh();
        let min = evals.last().copied().unwrap_or_else(T::zero).to_f64();
        if min < -tol.psd {
            return Err(Error::InvalidDensity(format!(
                "minimum eigenvalue {min:e} below -{:e}",
                tol.psd
            )));
        }
        Ok(Self(h))
    }

    /// Pure state |ψ⟩⟨ψ| from an unnormalized vector.
    pub fn pure(psi: &DVector<C<T>>) -> Result<Self> {
        let norm = psi.norm();
        if norm <= T::zero() {
            return Err(Error::InvalidDensity("zero state vector".into()));
        }
        let v = psi.map(|z| z / norm);
        let m = &v * v.adjoint();
        Ok(Self(Hermitian::from_hermitian_part(&m)))
    }

    /// Diagonal density matrix from a probability vector.
    pub fn diagonal(p: &[f64], tol: &Tolerances) -> Result<Self> {
        let m = ComplexMatrix::from_diagonal(&DVector::from_iterator(
            p.len(),
            p.iter().map(|&x| cr::<T>(x)),
        ));
        Self::new(m, tol)
    }

    pub fn maximally_mixed(n: usize) -> Self {
        let s = T::one() / T::lit(n as f64);
        Self(Hermitian::identity(n).scale(s))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn hermitian(&self) -> &Hermitian<T> {
        &self.0
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        self.0.matrix()
    }

    /// Wraps without validation; callers are expected to have checked the
    /// invariants separately (e.g. integration output that is reported, not
    /// rejected).
    pub(crate) fn unchecked(h: Hermitian<T>) -> Self {
        Self(h)
    }
}

pub(crate) fn check_finite<T: Real>(m: &ComplexMatrix<T>, what: &'static str) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub(crate) fn ensure_same_dim<T: Real>(
    a: &ComplexMatrix<T>,
    b: &ComplexMatrix<T>,
    context: &'static str,
) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: b.nrows(),
            context,
        });
    }
    Ok(())
}

/// `ab − ba`.
pub fn commutator<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    ensure_same_dim(a, b, "commutator")?;
    Ok(a * b - b * a)
}

pub(crate) fn comm<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    a * b - b * a
}

pub fn hermitian_part<T: Real>(m: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    (m + m.adjoint()).map(|z| z * T::lit(0.5))
}

/// max |M − M†| over entries.
pub fn hermiticity_deviation<T: Real>(m: &ComplexMatrix<T>) -> T {
    max_abs(&(m - m.adjoint()))
}

pub fn max_abs<T: Real>(m: &ComplexMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc.max(z.modulus()))
}

pub fn max_abs_real<T: Real>(m: &RealMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc.max(z.abs()))
}

/// Hermitian eigensystem with eigenvalues sorted in descending order.
pub fn eigh_descending<T: Real>(m: &ComplexMatrix<T>) -> (Vec<T>, ComplexMatrix<T>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vecs)
}

/// `exp(−i H t)` for Hermitian `H`.
pub fn unitary_propagator<T: Real>(h: &ComplexMatrix<T>, t: T) -> ComplexMatrix<T> {
    let (vals, vecs) = eigh_descending(h);
    let phases = DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&l| {
            let a = -l * t;
            c(a.cos(), a.sin())
        }),
    );
    &vecs * ComplexMatrix::from_diagonal(&phases) * vecs.adjoint()
}

/// Unitary polar factor `U V†` of `M = U Σ V†`.
pub fn polar_unitary<T: Real>(m: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd u requested");
    let v_t = svd.v_t.expect("svd v_t requested");
    u * v_t
}

pub fn pauli<T: Real>(label: char) -> Option<ComplexMatrix<T>> {
    let z = C::<T>::new(T::zero(), T::zero());
    let one = cr::<T>(1.0);
    let i = ci::<T>();
    let m = match label {
        'I' => [one, z, z, one],
        'X' => [z, one, one, z],
        'Y' => [z, -i, i, z],
        'Z' => [one, z, z, -one],
        _ => return None,
    };
    Some(ComplexMatrix::from_row_slice(2, 2, &m))
}

/// Tensor product of single-qubit Paulis named by `label` (e.g. `"ZI"`), with
/// the first character acting on the first (most significant) qubit.
pub fn pauli_string<T: Real>(label: &str) -> Option<ComplexMatrix<T>> {
    let mut acc = ComplexMatrix::<T>::identity(1, 1);
    for ch in label.chars() {
        acc = acc.kronecker(&pauli::<T>(ch)?);
    }
    if label.is_empty() {
        None
    } else {
        Some(acc)
    }
}

/// Labels of the `4^q` Pauli products in identity-first lexicographic order
/// over `I, X, Y, Z`.
pub fn pauli_labels(num_qubits: usize) -> Vec<String> {
    let mut labels = vec![String::new()];
    for _ in 0..num_qubits {
        labels = labels
            .into_iter()
            .flat_map(|p| "IXYZ".chars().map(move |ch| format!("{p}{ch}")))
            .collect();
    }
    labels
}

/// The `4^q` Pauli products, identity first; `Tr[σ_i σ_j] = 2^q δ_ij`.
pub fn pauli_product_basis<T: Real>(num_qubits: usize) -> Result<Vec<Hermitian<T>>> {
    if num_qubits == 0 {
        return Err(Error::InvalidArgument(
            "num_qubits must be at least 1".into(),
        ));
    }
    Ok(pauli_labels(num_qubits)
        .iter()
        .map(|l| Hermitian(pauli_string(l).expect("valid pauli label")))
        .collect())
}

/// Number of qubits if `n` is a power of two.
pub fn qubit_count(n: usize) -> Option<usize> {
    (n.is_power_of_two() && n >= 2).then(|| n.trailing_zeros() as usize)
}

/// Frobenius inner product Re Tr[A† B].
pub fn hs_inner<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> T {
    a.iter()
        .zip(b.iter())
        .fold(T::zero(), |acc, (x, y)| acc + (x.conj() * y).re)
}

/// Singular values of a real matrix, descending.
pub fn singular_values<T: Real>(m: &RealMatrix<T>) -> Vec<T> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<T> = m
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    s
}

/// Numerical rank: count of singular values above `rel_tol · σ_max`.
pub fn numerical_rank<T: Real>(m: &RealMatrix<T>, rel_tol: f64) -> usize {
    let s = singular_values(m);
    let Some(&top) = s.first() else { return 0 };
    if top <= T::zero() {
        return 0;
    }
    let cut = top * T::lit(rel_tol);
    s.iter().filter(|&&x| x > cut).count()
}

/// Orthonormal basis (as columns) of the column space of a real matrix.
pub fn column_basis<T: Real>(m: &RealMatrix<T>, rel_tol: f64) -> RealMatrix<T> {
    let rows = m.nrows();
    if m.ncols() == 0 || rows == 0 {
        return RealMatrix::zeros(rows, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("svd u requested");
    let top = svd.singular_values.iter().fold(T::zero(), |a, &b| a.max(b));
    if top <= T::zero() {
        return RealMatrix::zeros(rows, 0);
    }
    let cut = top * T::lit(rel_tol);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > cut)
        .collect();
    RealMatrix::from_fn(rows, keep.len(), |r, k| u[(r, keep[k])])
}

/// Orthonormal basis (columns) of the null space of a complex matrix: right
/// singular vectors whose singular value is at most `abs_tol`.
pub fn complex_null_space<T: Real>(m: &ComplexMatrix<T>, abs_tol: T) -> ComplexMatrix<T> {
    let cols = m.ncols();
    if cols == 0 {
        return ComplexMatrix::zeros(0, 0);
    }
    // pad to at least square so the SVD yields a full right basis
    let rows = m.nrows().max(cols);
    let mut padded = ComplexMatrix::zeros(rows, cols);
    padded.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("svd v_t requested");
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= abs_tol)
        .collect();
    ComplexMatrix::from_fn(cols, keep.len(), |r, k| v_t[(keep[k], r)].conj())
}

/// Eigenvalues of a square complex matrix (diagonal of its complex Schur form).
///
/// The QR iteration is bounded; when it stalls the matrix is conjugated by a
/// fixed unitary and retried, which leaves the spectrum unchanged.
pub fn complex_eigenvalues<T: Real>(m: &ComplexMatrix<T>) -> Result<Vec<C<T>>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let eps = T::default_epsilon();
    for attempt in 0..4usize {
        let work = if attempt == 0 {
            m.clone()
        } else {
            let k = attempt as f64;
            let seed = ComplexMatrix::<T>::from_fn(n, n, |i, j| {
                let (i, j) = (i as f64, j as f64);
                c(
                    T::lit((1.3 * i + 0.7 * j * k + 0.1).cos()),
                    T::lit((0.9 * i * j + k).sin()),
                )
            });
            let q = seed.qr().q();
            q.adjoint() * m * &q
        };
        if let Some(s) = nalgebra::Schur::try_new(work, eps, 1000 * n) {
            let t = s.unpack().1;
            return Ok((0..n).map(|i| t[(i, i)]).collect());
        }
    }
    Err(Error::NoConvergence("complex Schur decomposition"))
}

/// Groups nearly-equal complex numbers (single linkage within `tol`) and
/// returns one representative (the mean) per group.
pub(crate) fn cluster_complex<T: Real>(vals: &[C<T>], tol: T) -> Vec<C<T>> {
    let mut groups: Vec<Vec<C<T>>> = Vec::new();
    for &v in vals {
        let hit: Vec<usize> = groups
            .iter()
            .enumerate()
            .filter(|(_, g)| g.iter().any(|w| (w - v).modulus() <= tol))
            .map(|(i, _)| i)
            .collect();
        match hit.as_slice() {
            [] => groups.push(vec![v]),
            [first, rest @ ..] => {
                let first = *first;
                for &r in rest.iter().rev() {
                    let g = groups.remove(r);
                    groups[first].extend(g);
                }
                groups[first].push(v);
            }
        }
    }
    groups
        .into_iter()
        .map(|g| {
            let k = T::lit(g.len() as f64);
            let s = g
                .iter()
                .fold(Complex::new(T::zero(), T::zero()), |a, b| a + b);
            s / k
        })
        .collect()
}

/// Gram–Schmidt orthonormalization of complex columns (twice, for stability);
/// drops columns whose residual norm falls below `tol`.
pub fn orthonormalize_columns<T: Real>(m: &ComplexMatrix<T>, tol: T) -> ComplexMatrix<T> {
    let mut out: Vec<DVector<C<T>>> = Vec::new();
    for j in 0..m.ncols() {
        let mut v: DVector<C<T>> = m.column(j).into_owned();
        for _ in 0..2 {
            for q in &out {
                let proj = q.dotc(&v);
                v -= q * proj;
            }
        }
        let nv = v.norm();
        if nv > tol {
            out.push(v / c(nv, T::zero()));
        }
    }
    let rows = m.nrows();
    ComplexMatrix::from_fn(rows, out.len(), |r, k| out[k][r])
}

/// Lifts a real matrix into the complex field.
pub fn complexify<T: Real>(m: &RealMatrix<T>) -> ComplexMatrix<T> {
    m.map(|x| c(x, T::zero()))
}

/// Flattens a real matrix into a column vector (column-major).
pub fn vectorize<T: Real>(m: &RealMatrix<T>) -> DVector<T> {
    DVector::from_column_slice(m.as_slice())
}
