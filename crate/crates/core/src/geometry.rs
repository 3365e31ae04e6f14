// SPDX-License-Identifier: Apache-2.0

//! Dimension counts for multiplicity strata, isospectral leaves and
//! decoherence-free manifolds, plus an explicit basis of
//! multiplicity-preserving tangent directions.

use std::cmp::Reverse;
use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{eigh_descending, max_abs, ComplexMatrix, DensityMatrix, Hermitian};
use crate::scalar::{c, Real};
use crate::spectral::{BlockSelection, BlockSpectrum};

/// Ordered eigenvalue multiplicities μ = (m_1, …, m_d).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiplicitySignature {
    mu: Vec<usize>,
}

impl MultiplicitySignature {
    pub fn new(mu: Vec<usize>) -> Result<Self> {
        if mu.is_empty() {
            return Err(Error::InvalidSignature(
                "signature must have at least one block".into(),
            ));
        }
        if mu.contains(&0) {
            return Err(Error::InvalidSignature(
                "multiplicities must be positive".into(),
            ));
        }
        Ok(Self { mu })
    }

    pub fn mu(&self) -> &[usize] {
        &self.mu
    }

    pub fn n(&self) -> usize {
        self.mu.iter().sum()
    }

    pub fn d(&self) -> usize {
        self.mu.len()
    }
}

fn sum_sq(m: &[usize]) -> usize {
    m.iter().map(|x| x * x).sum()
}

/// Σ m_i² − d + 1.
pub fn stratum_codimension(sig: &MultiplicitySignature) -> usize {
    sum_sq(&sig.mu) + 1 - sig.d()
}

/// Real dimension of the stratum of Hermitian trace-one matrices with
/// signature μ (n² − codimension).
pub fn stratum_dimension(sig: &MultiplicitySignature) -> usize {
    sig.n() * sig.n() - stratum_codimension(sig)
}

/// n² − Σ m_l², the real dimension of U(n)/Π U(m_l).
pub fn isospectral_leaf_dimension(sig: &MultiplicitySignature) -> usize {
    sig.n() * sig.n() - sum_sq(&sig.mu)
}

/// Preserved block multiplicities `m_K` (eigenvalues fixed) and free block
/// multiplicities `m_K̄` (eigenvalues may move, multiplicities may not).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DfmSpec {
    m_k: Vec<usize>,
    m_kbar: Vec<usize>,
}

impl DfmSpec {
    pub fn new(m_k: Vec<usize>, m_kbar: Vec<usize>) -> Result<Self> {
        if m_k.is_empty() {
            return Err(Error::InvalidSignature("m_K must be nonempty".into()));
        }
        if m_k.contains(&0) || m_kbar.contains(&0) {
            return Err(Error::InvalidSignature(
                "multiplicities must be positive".into(),
            ));
        }
        Ok(Self { m_k, m_kbar })
    }

    /// Checks the multiplicities against a fixed dimension.
    pub fn with_dim(m_k: Vec<usize>, m_kbar: Vec<usize>, n: usize) -> Result<Self> {
        let s = Self::new(m_k, m_kbar)?;
        if s.n() != n {
            return Err(Error::InvalidSignature(format!(
                "multiplicities sum to {}, expected n = {n}",
                s.n()
            )));
        }
        Ok(s)
    }

    pub fn m_k(&self) -> &[usize] {
        &self.m_k
    }

    pub fn m_kbar(&self) -> &[usize] {
        &self.m_kbar
    }

    pub fn n(&self) -> usize {
        self.m_k.iter().sum::<usize>() + self.m_kbar.iter().sum::<usize>()
    }

    /// The full signature, K blocks first.
    pub fn signature(&self) -> MultiplicitySignature {
        let mut mu = self.m_k.clone();
        mu.extend_from_slice(&self.m_kbar);
        MultiplicitySignature { mu }
    }
}

impl fmt::Display for DfmSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} | {}",
            format_multiset(&self.m_k),
            format_multiset(&self.m_kbar)
        )
    }
}

/// `{1,1,2}` style rendering (ascending); `∅` when empty.
pub fn format_multiset(m: &[usize]) -> String {
    if m.is_empty() {
        return "∅".into();
    }
    let mut v = m.to_vec();
    v.sort_unstable();
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("{{{}}}", parts.join(","))
}

/// Real dimension of the manifold of density matrices with the K spectrum
/// fixed and the K̄ multiplicities preserved.
///
/// With `m_K̄ = ∅` the whole spectrum is fixed and the count is the
/// isospectral leaf dimension `n² − Σ m_k²`; otherwise
/// `n² + Σ m_k̄ − Σ m_k̄² − Σ m_k² − 1`.
pub fn dfm_dimension(spec: &DfmSpec) -> usize {
    let n = spec.n();
    if spec.m_kbar.is_empty() {
        return n * n - sum_sq(&spec.m_k);
    }
    n * n + spec.m_kbar.iter().sum::<usize>() - sum_sq(&spec.m_kbar) - sum_sq(&spec.m_k) - 1
}

/// Size of the basis from [`multiplicity_preserving_tangent`]: one scalar
/// shift per free block (minus the trace constraint) on top of the
/// isospectral directions.
pub fn construction_dimension(spec: &DfmSpec) -> usize {
    let n = spec.n();
    n * n - sum_sq(&spec.m_k) - sum_sq(&spec.m_kbar) + spec.m_kbar.len().saturating_sub(1)
}

/// One enumerated manifold with both counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableRow {
    pub spec: DfmSpec,
    pub dimension: usize,
    pub construction: usize,
}

fn partitions(n: usize) -> Vec<Vec<usize>> {
    fn go(rest: usize, min: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest == 0 {
            out.push(cur.clone());
            return;
        }
        for part in min..=rest {
            cur.push(part);
            go(rest - part, part, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(n, 1, &mut Vec::new(), &mut out);
    out
}

/// Enumerates every (m_K, m_K̄) pair of multisets with total n and K
/// nonempty.
///
/// A single free simple block (`m_K̄ = {1}`) has its eigenvalue pinned by
/// the trace, so that pair is the same manifold as `m_K ∪ {1}` with nothing
/// free and is listed only in the latter form.
///
/// Row order: pairs with free blocks first, grouped by m_K (fewest preserved
/// states first, then lexicographic), then fully specified spectra; inside
/// each group by decreasing dimension, ties broken lexicographically.
pub fn table_generate(n: usize) -> Result<Vec<TableRow>> {
    if n < 2 {
        return Err(Error::InvalidArgument(
            "table enumeration needs n ≥ 2".into(),
        ));
    }
    let mut rows = Vec::new();
    for a in 1..=n {
        for m_k in partitions(a) {
            let rest = if a == n {
                vec![Vec::new()]
            } else {
                partitions(n - a)
            };
            for m_kbar in rest {
                if m_kbar == [1] {
                    continue;
                }
                let spec = DfmSpec::new(m_k.clone(), m_kbar)?;
                rows.push(TableRow {
                    dimension: dfm_dimension(&spec),
                    construction: construction_dimension(&spec),
                    spec,
                });
            }
        }
    }
    rows.sort_by_key(|r| {
        let free = !r.spec.m_kbar.is_empty();
        let group = if free {
            (r.spec.m_k.iter().sum::<usize>(), r.spec.m_k.clone())
        } else {
            (usize::MAX, Vec::new())
        };
        (
            Reverse(free),
            group,
            Reverse(r.dimension),
            r.spec.m_k.clone(),
            r.spec.m_kbar.clone(),
        )
    });
    Ok(rows)
}

/// Theorem count and construction count side by side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DimensionReport {
    pub theorem: usize,
    pub construction: usize,
}

impl DimensionReport {
    pub fn agree(&self) -> bool {
        self.theorem == self.construction
    }
}

pub fn dimension_report(spec: &DfmSpec) -> DimensionReport {
    DimensionReport {
        theorem: dfm_dimension(spec),
        construction: construction_dimension(spec),
    }
}

/// Hermitian directions that keep the selected eigenvalues stationary to
/// first order and move each unselected block only by a scalar shift, with
/// the shifts weighted to keep the trace fixed.
///
/// In the eigenbasis of ρ a direction has zero selected diagonal blocks,
/// scalar unselected diagonal blocks and arbitrary off-diagonal blocks.
pub fn multiplicity_preserving_tangent<T: Real>(
    rho: &DensityMatrix<T>,
    spec: &BlockSpectrum<T>,
    sel: &BlockSelection,
) -> Result<Vec<Hermitian<T>>> {
    let n = rho.dim();
    if spec.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: spec.dim(),
            context: "tangent base point",
        });
    }
    if sel.indices().any(|i| i >= spec.len()) {
        return Err(Error::InvalidSelection(
            "selection does not fit this spectrum".into(),
        ));
    }
    let dev = max_abs(&(spec.reconstruct() - rho.matrix())).to_f64();
    if dev > 1e3 * spec.cluster_tol().max(1e-12) {
        return Err(Error::IncompatibleBasePoint(format!(
            "block spectrum does not reproduce ρ (deviation {dev:e})"
        )));
    }
    let v = spec.full_frame();
    let mut block_of = vec![0usize; n];
    for (l, b) in spec.blocks().iter().enumerate() {
        for p in b.offset..b.offset + b.multiplicity {
            block_of[p] = l;
        }
    }
    let embed = |d: ComplexMatrix<T>| Hermitian::from_hermitian_part(&(&v * d * v.adjoint()));
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if block_of[i] == block_of[j] {
                continue;
            }
            let mut re = ComplexMatrix::zeros(n, n);
            re[(i, j)] = c(T::one(), T::zero());
            re[(j, i)] = c(T::one(), T::zero());
            out.push(embed(re));
            let mut im = ComplexMatrix::zeros(n, n);
            im[(i, j)] = c(T::zero(), T::one());
            im[(j, i)] = c(T::zero(), -T::one());
            out.push(embed(im));
        }
    }
    let free = sel.complement(spec);
    if let Some((&first, rest)) = free.split_first() {
        let a = &spec.blocks()[first];
        let wa = T::one() / T::lit(a.multiplicity as f64);
        for &k in rest {
            let b = &spec.blocks()[k];
            let wb = T::one() / T::lit(b.multiplicity as f64);
            let mut d = ComplexMatrix::zeros(n, n);
            for p in a.offset..a.offset + a.multiplicity {
                d[(p, p)] = c(wa, T::zero());
            }
            for p in b.offset..b.offset + b.multiplicity {
                d[(p, p)] = c(-wb, T::zero());
            }
            out.push(embed(d));
        }
    }
    Ok(out)
}

/// Central-difference estimate of max_{i ∈ K positions} |d/dε λ_i(ρ + εδ)|
/// at ε = 0.
pub fn selected_eigenvalue_drift<T: Real>(
    rho: &DensityMatrix<T>,
    spec: &BlockSpectrum<T>,
    sel: &BlockSelection,
    delta: &Hermitian<T>,
    eps: f64,
) -> T {
    let e = T::lit(eps);
    let step = |s: T| {
        let m = rho.matrix() + delta.matrix().map(|z| z * s);
        eigh_descending(&m).0
    };
    let plus = step(e);
    let minus = step(-e);
    let mut worst = T::zero();
    for k in sel.indices() {
        let b = &spec.blocks()[k];
        for p in b.offset..b.offset + b.multiplicity {
            worst = worst.max(((plus[p] - minus[p]) / (e + e)).abs());
        }
    }
    worst
}
