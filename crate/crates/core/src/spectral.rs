// SPDX-License-Identifier: Apache-2.0

//! Eigenvalue-block analysis of density matrices and the decoherence-free
//! subspace machinery built on it.
//!
//! Eigenvalues are ordered in descending order throughout; block `0` is the
//! block with the largest eigenvalue. Inside a degenerate block the
//! eigenvector basis is only defined up to `U(m)`, so every exported quantity
//! is either gauge invariant (projectors, residuals) or carries an explicit
//! path-continuous gauge ([`EigenframePath`]).

use std::collections::BTreeSet;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{
    cluster_complex, complex_eigenvalues, complex_null_space, eigh_descending, max_abs,
    orthonormalize_columns, polar_unitary, ComplexMatrix, DensityMatrix, Hermitian, Tolerances,
};
use crate::lindblad::{lindblad_rhs, LindbladModel, Trajectory};
use crate::scalar::{ci, Real, C};

pub const DEFAULT_CLUSTER_TOL: f64 = 1e-8;
pub const DEFAULT_FD_TOL: f64 = 1e-5;
pub const DEFAULT_PRESERVE_TOL: f64 = 1e-8;

/// One eigenvalue block: value, multiplicity, an orthonormal eigenframe and
/// the eigenprojector.
#[derive(Debug, Clone)]
pub struct Block<T: Real> {
    pub value: T,
    pub multiplicity: usize,
    /// First position of the block in the descending eigenvalue list.
    pub offset: usize,
    /// n × m orthonormal columns spanning the eigenspace.
    pub frame: ComplexMatrix<T>,
    pub projector: Hermitian<T>,
}

/// Clustered spectral decomposition `ρ = Σ_l λ_[l] P_l`.
#[derive(Debug, Clone)]
pub struct BlockSpectrum<T: Real> {
    n: usize,
    blocks: Vec<Block<T>>,
    cluster_tol: f64,
}

impl<T: Real> BlockSpectrum<T> {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Block<T>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn cluster_tol(&self) -> f64 {
        self.cluster_tol
    }

    /// Multiplicity signature μ = (m_1, …, m_d).
    pub fn signature(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.multiplicity).collect()
    }

    pub fn values(&self) -> Vec<T> {
        self.blocks.iter().map(|b| b.value).collect()
    }

    /// Σ_l λ_[l] P_l.
    pub fn reconstruct(&self) -> ComplexMatrix<T> {
        self.blocks
            .iter()
            .fold(ComplexMatrix::zeros(self.n, self.n), |acc, b| {
                acc + b.projector.matrix().map(|z| z * b.value)
            })
    }

    /// Eigenframe with the blocks' frames concatenated in block order.
    pub fn full_frame(&self) -> ComplexMatrix<T> {
        let mut out = ComplexMatrix::zeros(self.n, self.n);
        for b in &self.blocks {
            out.view_mut((0, b.offset), (self.n, b.multiplicity))
                .copy_from(&b.frame);
        }
        out
    }
}

/// Clusters the spectrum of `rho` into blocks (single linkage, gap threshold
/// `cluster_tol`).
pub fn spectral_blocks<T: Real>(
    rho: &DensityMatrix<T>,
    cluster_tol: f64,
) -> Result<BlockSpectrum<T>> {
    spectral_blocks_hermitian(rho.hermitian(), cluster_tol)
}

/// [`spectral_blocks`] for an arbitrary Hermitian operator.
pub fn spectral_blocks_hermitian<T: Real>(
    h: &Hermitian<T>,
    cluster_tol: f64,
) -> Result<BlockSpectrum<T>> {
    if !(cluster_tol > 0.0) {
        return Err(Error::InvalidArgument(
            "cluster_tol must be positive".into(),
        ));
    }
    let n = h.dim();
    let (vals, vecs) = eigh_descending(h.matrix());
    let tol = T::lit(cluster_tol);
    let mut ranges: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for i in 1..=n {
        if i == n || vals[i - 1] - vals[i] > tol {
            ranges.push((start, i));
            start = i;
        }
    }
    let mut blocks = Vec::with_capacity(ranges.len());
    for (idx, &(a, b)) in ranges.iter().enumerate() {
        let spread = (vals[a] - vals[b - 1]).to_f64();
        if spread > cluster_tol / 2.0 {
            return Err(Error::AmbiguousClustering {
                block: idx,
                spread,
                half_tol: cluster_tol / 2.0,
            });
        }
        let m = b - a;
        let value = vals[a..b].iter().fold(T::zero(), |s, &v| s + v) / T::lit(m as f64);
        let frame = vecs.columns(a, m).into_owned();
        let projector = Hermitian::from_hermitian_part(&(&frame * frame.adjoint()));
        blocks.push(Block {
            value,
            multiplicity: m,
            offset: a,
            frame,
            projector,
        });
    }
    Ok(BlockSpectrum {
        n,
        blocks,
        cluster_tol,
    })
}

/// A nonempty set `K` of block indices to preserve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSelection {
    blocks: BTreeSet<usize>,
}

impl BlockSelection {
    pub fn new<T: Real>(
        indices: impl IntoIterator<Item = usize>,
        spec: &BlockSpectrum<T>,
    ) -> Result<Self> {
        let blocks: BTreeSet<usize> = indices.into_iter().collect();
        if blocks.is_empty() {
            return Err(Error::InvalidSelection("K must be nonempty".into()));
        }
        if let Some(&bad) = blocks.iter().find(|&&i| i >= spec.len()) {
            return Err(Error::InvalidSelection(format!(
                "block index {bad} out of range (spectrum has {} blocks)",
                spec.len()
            )));
        }
        Ok(Self { blocks })
    }

    pub fn all<T: Real>(spec: &BlockSpectrum<T>) -> Self {
        Self {
            blocks: (0..spec.len()).collect(),
        }
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.blocks.iter().copied()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.blocks.contains(&i)
    }

    /// Indices of the complementary blocks `K̄`.
    pub fn complement<T: Real>(&self, spec: &BlockSpectrum<T>) -> Vec<usize> {
        (0..spec.len())
            .filter(|i| !self.blocks.contains(i))
            .collect()
    }

    fn check<T: Real>(&self, spec: &BlockSpectrum<T>) -> Result<()> {
        match self.blocks.iter().next_back() {
            Some(&last) if last < spec.len() => Ok(()),
            _ => Err(Error::InvalidSelection(
                "selection does not fit this spectrum".into(),
            )),
        }
    }

    /// m_K = Σ_{k∈K} m_k.
    pub fn rank<T: Real>(&self, spec: &BlockSpectrum<T>) -> usize {
        self.blocks
            .iter()
            .map(|&i| spec.blocks[i].multiplicity)
            .sum()
    }
}

/// P_DFS = Σ_{k∈K} P_k.
pub fn dfs_projector<T: Real>(
    spec: &BlockSpectrum<T>,
    sel: &BlockSelection,
) -> Result<Hermitian<T>> {
    sel.check(spec)?;
    let n = spec.n;
    let p = sel.indices().fold(ComplexMatrix::zeros(n, n), |acc, i| {
        acc + spec.blocks[i].projector.matrix()
    });
    Ok(Hermitian::from_hermitian_part(&p))
}

/// ρ_DFS = PρP / Tr[PρP].
pub fn dfs_state<T: Real>(
    rho: &DensityMatrix<T>,
    spec: &BlockSpectrum<T>,
    sel: &BlockSelection,
    tol: &Tolerances,
) -> Result<DensityMatrix<T>> {
    let p = dfs_projector(spec, sel)?;
    let prp = p.matrix() * rho.matrix() * p.matrix();
    let w = prp.trace().re;
    if w.to_f64() <= tol.trace {
        return Err(Error::ZeroWeight(w.to_f64()));
    }
    DensityMatrix::new(prp.map(|z| z / w), tol)
}

/// Gauge-aligned orthonormal eigenframes of the selected blocks along a
/// trajectory, plus an aligned frame of the orthogonal complement.
#[derive(Debug, Clone)]
pub struct EigenframePath<T: Real> {
    pub times: Vec<T>,
    /// n × m_K frames, K blocks concatenated in block order.
    pub frames: Vec<ComplexMatrix<T>>,
    /// n × (n − m_K) frames of the complement.
    pub complements: Vec<ComplexMatrix<T>>,
    /// Multiplicities of the selected blocks, in frame order.
    pub block_sizes: Vec<usize>,
}

impl<T: Real> EigenframePath<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Projector onto the selected eigenspace at step `k`.
    pub fn projector(&self, k: usize) -> Hermitian<T> {
        let f = &self.frames[k];
        Hermitian::from_hermitian_part(&(f * f.adjoint()))
    }

    fn completed(&self, k: usize) -> ComplexMatrix<T> {
        let f = &self.frames[k];
        let g = &self.complements[k];
        let n = f.nrows();
        let mut out = ComplexMatrix::zeros(n, n);
        out.view_mut((0, 0), (n, f.ncols())).copy_from(f);
        out.view_mut((0, f.ncols()), (n, g.ncols())).copy_from(g);
        out
    }

    /// Ṽ(t_k) = [F_K(t_k) F_K̄(t_k)] · [F_K(0) F_K̄(0)]†, so that Ṽ(0) = I.
    pub fn transport(&self, k: usize) -> ComplexMatrix<T> {
        self.completed(k) * self.completed(0).adjoint()
    }

    /// Same frames on a rescaled time axis `t ↦ t · factor`.
    pub fn rescaled(&self, factor: T) -> Self {
        Self {
            times: self.times.iter().map(|&t| t * factor).collect(),
            ..self.clone()
        }
    }
}

fn procrustes_align<T: Real>(prev: &ComplexMatrix<T>, raw: ComplexMatrix<T>) -> ComplexMatrix<T> {
    if raw.ncols() == 0 {
        return raw;
    }
    let w = polar_unitary(&(prev.adjoint() * &raw));
    raw * w.adjoint()
}

/// Tracks the eigenspace of the blocks `sel` (chosen at the trajectory's
/// first state) along the trajectory.
///
/// Each selected block keeps its own frame; consecutive frames are aligned
/// by the orthogonal Procrustes rotation (polar factor of `F_prev† F_raw`).
pub fn eigenframe_path<T: Real>(
    traj: &Trajectory<T>,
    sel: &BlockSelection,
    cluster_tol: f64,
) -> Result<EigenframePath<T>> {
    let first = traj
        .states
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty trajectory".into()))?;
    let spec0 = spectral_blocks(first, cluster_tol)?;
    sel.check(&spec0)?;
    let n = spec0.n;
    let k_blocks: Vec<(usize, usize)> = sel
        .indices()
        .map(|i| (spec0.blocks[i].offset, spec0.blocks[i].multiplicity))
        .collect();
    let in_k: Vec<bool> = (0..n)
        .map(|p| k_blocks.iter().any(|&(o, m)| p >= o && p < o + m))
        .collect();
    let kbar_pos: Vec<usize> = (0..n).filter(|&p| !in_k[p]).collect();
    let tol = T::lit(cluster_tol);

    let mut path = EigenframePath {
        times: traj.times.clone(),
        frames: Vec::with_capacity(traj.len()),
        complements: Vec::with_capacity(traj.len()),
        block_sizes: k_blocks.iter().map(|&(_, m)| m).collect(),
    };
    let mut prev_blocks: Vec<ComplexMatrix<T>> = Vec::new();
    let mut prev_comp: Option<ComplexMatrix<T>> = None;

    for (idx, state) in traj.states.iter().enumerate() {
        let (vals, vecs) = eigh_descending(state.matrix());
        // every selected block must stay away from all other eigenvalues
        for &(o, m) in &k_blocks {
            let mut gap = T::max_value().unwrap_or_else(|| T::lit(f64::MAX));
            for i in o..o + m {
                for (j, &vj) in vals.iter().enumerate() {
                    if j < o || j >= o + m {
                        gap = gap.min((vals[i] - vj).abs());
                    }
                }
            }
            if gap <= tol {
                return Err(Error::BlockCrossing {
                    t: traj.times[idx].to_f64(),
                    gap: gap.to_f64(),
                });
            }
        }
        let raw_blocks: Vec<ComplexMatrix<T>> = k_blocks
            .iter()
            .map(|&(o, m)| vecs.columns(o, m).into_owned())
            .collect();
        let raw_comp = ComplexMatrix::from_fn(n, kbar_pos.len(), |r, k| vecs[(r, kbar_pos[k])]);

        let blocks: Vec<ComplexMatrix<T>> = if prev_blocks.is_empty() {
            raw_blocks
        } else {
            prev_blocks
                .iter()
                .zip(raw_blocks)
                .map(|(p, r)| procrustes_align(p, r))
                .collect()
        };
        let comp = match &prev_comp {
            None => raw_comp,
            Some(p) => procrustes_align(p, raw_comp),
        };

        let m_k: usize = path.block_sizes.iter().sum();
        let mut frame = ComplexMatrix::zeros(n, m_k);
        let mut col = 0;
        for b in &blocks {
            frame.view_mut((0, col), (n, b.ncols())).copy_from(b);
            col += b.ncols();
        }
        path.frames.push(frame);
        path.complements.push(comp.clone());
        prev_blocks = blocks;
        prev_comp = Some(comp);
    }
    Ok(path)
}

/// Finite-difference weights for the first derivative at `x0` over the
/// stencil `xs` (Fornberg's recursion).
fn fd_weights<T: Real>(x0: T, xs: &[T]) -> Vec<T> {
    let m = xs.len();
    // c[j][k]: weight of xs[j] for the k-th derivative, k ∈ {0, 1}
    let mut cw = vec![[T::zero(); 2]; m];
    let mut c1 = T::one();
    let mut c4 = xs[0] - x0;
    cw[0][0] = T::one();
    for i in 1..m {
        let mn = i.min(1);
        let mut c2 = T::one();
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    cw[i][k] = c1 * (T::lit(k as f64) * cw[i - 1][k - 1] - c5 * cw[i - 1][k]) / c2;
                }
                cw[i][0] = -c1 * c5 * cw[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                cw[j][k] = (c4 * cw[j][k] - T::lit(k as f64) * cw[j][k - 1]) / c3;
            }
            cw[j][0] = c4 * cw[j][0] / c3;
        }
        c1 = c2;
    }
    cw.into_iter().map(|w| w[1]).collect()
}

/// H_DFS(t_k) = i (dṼ/dt) Ṽ† by finite differences on the completed
/// transport unitary.
///
/// Interior points use the centered five-point stencil; points near the ends
/// use the nearest five-point one-sided stencil (fewer points on short
/// paths). The anti-Hermitian part of the estimate must stay within
/// `fd_tol`; the Hermitian part is returned.
pub fn dfs_hamiltonian<T: Real>(
    path: &EigenframePath<T>,
    fd_tol: f64,
) -> Result<Vec<Hermitian<T>>> {
    let len = path.len();
    if len < 2 {
        return Err(Error::InvalidArgument(
            "eigenframe path needs at least two times".into(),
        ));
    }
    let transports: Vec<ComplexMatrix<T>> = (0..len).map(|k| path.transport(k)).collect();
    let width = len.min(5);
    let mut out = Vec::with_capacity(len);
    for k in 0..len {
        let start = k.saturating_sub(width / 2).min(len - width);
        let stencil = &path.times[start..start + width];
        let w = fd_weights(path.times[k], stencil);
        let n = transports[k].nrows();
        let mut deriv = ComplexMatrix::zeros(n, n);
        for (j, wj) in w.iter().enumerate() {
            deriv += transports[start + j].map(|z| z * *wj);
        }
        let h = (deriv * transports[k].adjoint()).map(|z| ci::<T>() * z);
        let anti = max_abs(&(&h - h.adjoint())).to_f64() / 2.0;
        if anti > fd_tol {
            return Err(Error::StepTooCoarse {
                t: path.times[k].to_f64(),
                deviation: anti,
                tol: fd_tol,
            });
        }
        out.push(Hermitian::from_hermitian_part(&h));
    }
    Ok(out)
}

/// ‖P ρ̇ P + i P[H_DFS, ρ]P‖_F with ρ̇ from the master equation.
///
/// Vanishes when the selected sub-dynamics is compatible with unitary
/// evolution generated by `h_dfs`.
#[allow(clippy::too_many_arguments)]
pub fn consistency_residual<T: Real>(
    model: &LindbladModel<T>,
    rho: &Hermitian<T>,
    u: &[T],
    gamma: &[T],
    h_dfs: &Hermitian<T>,
    spec: &BlockSpectrum<T>,
    sel: &BlockSelection,
) -> Result<T> {
    if h_dfs.dim() != rho.dim() || spec.n != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: h_dfs.dim(),
            context: "consistency residual",
        });
    }
    let p = dfs_projector(spec, sel)?;
    let p = p.matrix();
    let rho_dot = lindblad_rhs(model, rho, u, gamma)?;
    let hc = h_dfs.matrix() * rho.matrix() - rho.matrix() * h_dfs.matrix();
    let inner = rho_dot.matrix() + hc.map(|z| ci::<T>() * z);
    Ok((p * inner * p).norm())
}

/// A joint eigenspace: `F_α v = c_α v` for every jump and every `v` in the
/// span of `basis`.
#[derive(Debug, Clone)]
pub struct JointEigenspace<T: Real> {
    pub basis: ComplexMatrix<T>,
    pub eigenvalues: Vec<C<T>>,
}

/// Maximal joint eigenspaces of a family of (possibly non-commuting,
/// possibly non-normal) operators. Returns an empty list when there is no
/// common eigenvector.
pub fn common_eigenvector_subspace<T: Real>(
    jumps: &[ComplexMatrix<T>],
    tol: f64,
) -> Result<Vec<JointEigenspace<T>>> {
    let Some(first) = jumps.first() else {
        return Err(Error::InvalidArgument("need at least one operator".into()));
    };
    let n = first.nrows();
    for f in jumps {
        if f.nrows() != n || f.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: f.nrows(),
                context: "jump operators",
            });
        }
    }
    let mut spaces = vec![JointEigenspace {
        basis: ComplexMatrix::<T>::identity(n, n),
        eigenvalues: Vec::new(),
    }];
    for f in jumps {
        let scale = max_abs(f).max(T::one());
        let abs_tol = T::lit(tol) * scale;
        let lambdas = cluster_complex(&complex_eigenvalues(f)?, abs_tol.sqrt());
        let mut next = Vec::new();
        for space in &spaces {
            for &lam in &lambdas {
                let shifted = f - ComplexMatrix::<T>::identity(n, n).map(|z| z * lam);
                let coeffs = complex_null_space(&(&shifted * &space.basis), abs_tol);
                if coeffs.ncols() == 0 {
                    continue;
                }
                let basis = orthonormalize_columns(&(&space.basis * coeffs), abs_tol);
                if basis.ncols() == 0 {
                    continue;
                }
                let mut eigenvalues = space.eigenvalues.clone();
                eigenvalues.push(lam);
                next.push(JointEigenspace { basis, eigenvalues });
            }
        }
        spaces = next;
    }
    Ok(spaces)
}

/// Per-time eigenvalue drift of the selected blocks and multiplicity
/// bookkeeping of the complement.
#[derive(Debug, Clone)]
pub struct PreservationReport<T: Real> {
    pub times: Vec<T>,
    /// Eigenvalues of each block at t = 0.
    pub initial_values: Vec<T>,
    /// Block eigenvalues (mean over the block's positions) at each time.
    pub block_values: Vec<Vec<T>>,
    /// max_{i∈I_K} |λ_i(t) − λ_[k](0)| at each time.
    pub deviations: Vec<T>,
    /// Whether some K̄ block lost its multiplicity at each time.
    pub kbar_changed: Vec<bool>,
    /// Time indices where a selected block came within `cluster_tol` of an
    /// unselected eigenvalue.
    pub tracking_failures: Vec<usize>,
    pub max_deviation: T,
    pub df_compatible: bool,
}

pub fn eigenvalue_preservation_report<T: Real>(
    traj: &Trajectory<T>,
    sel: &BlockSelection,
    cluster_tol: f64,
    preserve_tol: f64,
) -> Result<PreservationReport<T>> {
    let first = traj
        .states
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty trajectory".into()))?;
    let spec0 = spectral_blocks(first, cluster_tol)?;
    sel.check(&spec0)?;
    let tol = T::lit(cluster_tol);
    let ranges: Vec<(usize, usize)> = spec0
        .blocks
        .iter()
        .map(|b| (b.offset, b.multiplicity))
        .collect();
    let kbar = sel.complement(&spec0);

    let mut report = PreservationReport {
        times: traj.times.clone(),
        initial_values: spec0.values(),
        block_values: Vec::with_capacity(traj.len()),
        deviations: Vec::with_capacity(traj.len()),
        kbar_changed: Vec::with_capacity(traj.len()),
        tracking_failures: Vec::new(),
        max_deviation: T::zero(),
        df_compatible: true,
    };

    for (idx, state) in traj.states.iter().enumerate() {
        let (vals, _) = eigh_descending(state.matrix());
        let means: Vec<T> = ranges
            .iter()
            .map(|&(o, m)| vals[o..o + m].iter().fold(T::zero(), |s, &v| s + v) / T::lit(m as f64))
            .collect();
        let mut dev = T::zero();
        let mut crossing = false;
        for k in sel.indices() {
            let (o, m) = ranges[k];
            for &v in &vals[o..o + m] {
                dev = dev.max((v - spec0.blocks[k].value).abs());
            }
            let below =
                o + m < vals.len() && vals[o + m - 1] - vals[o + m] <= tol && !sel.contains(k + 1);
            let above = o > 0 && vals[o - 1] - vals[o] <= tol && !sel.contains(k - 1);
            crossing |= below || above;
        }
        let changed = kbar.iter().any(|&k| {
            let (o, m) = ranges[k];
            let spread = vals[o] - vals[o + m - 1];
            let merged_above = o > 0 && vals[o - 1] - vals[o] <= tol;
            let merged_below = o + m < vals.len() && vals[o + m - 1] - vals[o + m] <= tol;
            spread > tol || merged_above || merged_below
        });
        if crossing {
            report.tracking_failures.push(idx);
        }
        report.max_deviation = report.max_deviation.max(dev);
        report.block_values.push(means);
        report.deviations.push(dev);
        report.kbar_changed.push(changed);
    }
    report.df_compatible = report.max_deviation.to_f64() <= preserve_tol
        && !report.kbar_changed.iter().any(|&b| b)
        && report.tracking_failures.is_empty();
    Ok(report)
}

/// Splits a frame into its column vectors.
pub fn frame_columns<T: Real>(frame: &ComplexMatrix<T>) -> Vec<DVector<C<T>>> {
    (0..frame.ncols())
        .map(|j| frame.column(j).into_owned())
        .collect()
}
