// SPDX-License-Identifier: Apache-2.0

//! Matrix spans and the degree-one reachability distribution of a bilinear
//! model: the smallest span of linear vector fields that contains the
//! dissipation directions and is closed, modulo the control directions,
//! under brackets with the drift and control fields.

use std::fmt;

use nalgebra::DVector;

use crate::bloch::{coherence_map, BilinearModel, CoordinateMode};
use crate::error::{Error, Result};
use crate::linalg::{
    cluster_complex, column_basis, complex_eigenvalues, complexify, numerical_rank,
    singular_values, vectorize, Hermitian, RealMatrix,
};
use crate::scalar::Real;

pub const DEFAULT_RANK_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 64;

/// Linearly independent real N×N matrices with an orthonormal shadow basis
/// of their vectorizations for projections.
#[derive(Debug, Clone)]
pub struct MatrixSpan<T: Real> {
    n: usize,
    basis: Vec<RealMatrix<T>>,
    ortho: Vec<DVector<T>>,
    rank_tol: f64,
    scale: T,
}

impl<T: Real> MatrixSpan<T> {
    /// Empty span of N×N matrices. Membership is decided relative to
    /// `scale` (or the largest basis norm, if larger).
    pub fn new(n: usize, rank_tol: f64) -> Self {
        Self {
            n,
            basis: Vec::new(),
            ortho: Vec::new(),
            rank_tol,
            scale: T::zero(),
        }
    }

    pub fn with_scale(mut self, scale: T) -> Self {
        self.scale = scale;
        self
    }

    pub fn from_matrices(n: usize, rank_tol: f64, ms: &[RealMatrix<T>]) -> Result<Self> {
        let scale = ms.iter().fold(T::zero(), |a, m| a.max(m.norm()));
        let mut span = Self::new(n, rank_tol).with_scale(scale);
        for m in ms {
            span.insert(m)?;
        }
        Ok(span)
    }

    /// Ambient matrix size N.
    pub fn ambient(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[RealMatrix<T>] {
        &self.basis
    }

    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }

    /// Absolute residual threshold for membership.
    pub fn threshold(&self) -> T {
        let top = self.basis.iter().fold(self.scale, |a, m| a.max(m.norm()));
        top * T::lit(self.rank_tol)
    }

    fn check(&self, m: &RealMatrix<T>) -> Result<()> {
        if m.nrows() != self.n || m.ncols() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: m.nrows(),
                context: "matrix span",
            });
        }
        Ok(())
    }

    fn project_out(&self, v: &mut DVector<T>) {
        for _ in 0..2 {
            for q in &self.ortho {
                let p = q.dot(v);
                *v -= q * p;
            }
        }
    }

    /// `m` minus its orthogonal projection onto the span (Frobenius inner
    /// product), and the residual's norm.
    pub fn reduce(&self, m: &RealMatrix<T>) -> Result<(RealMatrix<T>, T)> {
        self.check(m)?;
        let mut v = vectorize(m);
        self.project_out(&mut v);
        let norm = v.norm();
        Ok((
            RealMatrix::from_column_slice(self.n, self.n, v.as_slice()),
            norm,
        ))
    }

    pub fn contains(&self, m: &RealMatrix<T>) -> Result<bool> {
        Ok(self.reduce(m)?.1 <= self.threshold())
    }

    /// Adds `m` unless it already lies in the span. Returns whether it was
    /// added.
    pub fn insert(&mut self, m: &RealMatrix<T>) -> Result<bool> {
        let (r, norm) = self.reduce(m)?;
        if norm <= self.threshold() {
            return Ok(false);
        }
        self.ortho.push(vectorize(&r) / norm);
        self.basis.push(m.clone());
        Ok(true)
    }

    /// Singular values of the stacked, normalized basis vectorizations.
    pub fn certificate(&self) -> Vec<T> {
        if self.basis.is_empty() {
            return Vec::new();
        }
        let cols: Vec<DVector<T>> = self.basis.iter().map(|m| vectorize(m) / m.norm()).collect();
        singular_values(&RealMatrix::from_columns(&cols))
    }
}

/// Free-function form of [`MatrixSpan::reduce`].
pub fn span_reduce<T: Real>(
    candidate: &RealMatrix<T>,
    span: &MatrixSpan<T>,
) -> Result<(RealMatrix<T>, T)> {
    span.reduce(candidate)
}

/// A joint real eigenspace of several real matrices.
#[derive(Debug, Clone)]
pub struct RealEigenspace<T: Real> {
    /// Orthonormal columns.
    pub basis: RealMatrix<T>,
    /// One eigenvalue per input matrix.
    pub eigenvalues: Vec<T>,
}

/// Result of the common-real-eigenvector search.
#[derive(Debug, Clone)]
pub struct Degree0Report<T: Real> {
    pub spaces: Vec<RealEigenspace<T>>,
    /// Every direction is a common eigenvector.
    pub full_space: bool,
}

impl<T: Real> Degree0Report<T> {
    pub fn is_empty(&self) -> bool {
        self.spaces.is_empty()
    }

    /// Basis vectors of every joint eigenspace.
    pub fn vectors(&self) -> Vec<DVector<T>> {
        self.spaces
            .iter()
            .flat_map(|s| (0..s.basis.ncols()).map(move |j| s.basis.column(j).into_owned()))
            .collect()
    }
}

fn real_null_space<T: Real>(m: &RealMatrix<T>, abs_tol: T) -> RealMatrix<T> {
    let cols = m.ncols();
    let rows = m.nrows().max(cols);
    let mut padded = RealMatrix::zeros(rows, cols);
    padded.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("svd v_t requested");
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= abs_tol)
        .collect();
    RealMatrix::from_fn(cols, keep.len(), |r, k| v_t[(keep[k], r)])
}

/// Common real eigenvectors of `a` and every matrix in `bs`, found by
/// intersecting real eigenspaces one matrix at a time.
pub fn degree0_check<T: Real>(
    a: &RealMatrix<T>,
    bs: &[RealMatrix<T>],
    tol: f64,
) -> Result<Degree0Report<T>> {
    let n = a.nrows();
    for m in std::iter::once(a).chain(bs) {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: m.nrows(),
                context: "degree-0 check",
            });
        }
    }
    let mut spaces = vec![RealEigenspace {
        basis: RealMatrix::<T>::identity(n, n),
        eigenvalues: Vec::new(),
    }];
    for m in std::iter::once(a).chain(bs) {
        let scale = m.amax().max(T::one());
        let abs_tol = T::lit(tol) * scale;
        let loose = abs_tol.sqrt();
        let lambdas: Vec<T> = cluster_complex(&complex_eigenvalues(&complexify(m))?, loose)
            .into_iter()
            .filter(|z| z.im.abs() <= loose)
            .map(|z| z.re)
            .collect();
        let mut next = Vec::new();
        for space in &spaces {
            for &lam in &lambdas {
                let shifted = m - RealMatrix::<T>::identity(n, n) * lam;
                let coeffs = real_null_space(&(&shifted * &space.basis), abs_tol);
                if coeffs.ncols() == 0 {
                    continue;
                }
                let basis = column_basis(&(&space.basis * coeffs), tol);
                if basis.ncols() == 0 {
                    continue;
                }
                let mut eigenvalues = space.eigenvalues.clone();
                eigenvalues.push(lam);
                next.push(RealEigenspace { basis, eigenvalues });
            }
        }
        spaces = next;
    }
    let full_space = spaces.len() == 1 && spaces[0].basis.ncols() == n;
    Ok(Degree0Report { spaces, full_space })
}

/// Which rate model the closure uses.
#[derive(Debug, Clone, PartialEq)]
pub enum Variant<T: Real> {
    /// Rates are independent, unknown functions of time: every `G_α` is its
    /// own direction.
    Stochastic,
    /// Fixed rates: the dissipation joins the drift,
    /// `A_eff = A + Σ γ_α G_α`, and the seed is `Σ γ_α G_α`.
    Constant(Vec<T>),
}

impl<T: Real> Variant<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Stochastic => "stochastic",
            Variant::Constant(_) => "constant",
        }
    }
}

/// Closure settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosureOptions {
    /// Relative tolerance for span membership.
    pub rank_tol: f64,
    /// Maximum number of bracket rounds.
    pub max_iter: usize,
}

impl Default for ClosureOptions {
    fn default() -> Self {
        Self {
            rank_tol: DEFAULT_RANK_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// Bracket partner of a generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Partner {
    Drift,
    Control(usize),
}

/// Where a basis generator came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    /// Dissipation matrix of one channel.
    Seed(usize),
    /// Rate-weighted sum of all dissipation matrices.
    SeedSum,
    /// `[partner, generator #parent]`.
    Bracket { partner: Partner, parent: usize },
}

#[derive(Debug, Clone)]
pub struct Generator<T: Real> {
    pub matrix: RealMatrix<T>,
    pub origin: Origin,
    /// Round in which the generator was added (0 for seeds).
    pub round: usize,
}

/// Per-round bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundLog {
    pub round: usize,
    /// Brackets evaluated this round.
    pub candidates: usize,
    /// Indices of generators added this round.
    pub added: Vec<usize>,
    /// Candidates new modulo the current span but absorbed by the control
    /// directions.
    pub absorbed_by_controls: usize,
}

#[derive(Debug, Clone)]
pub struct ClosureReport<T: Real> {
    pub variant: &'static str,
    pub mode: CoordinateMode,
    pub span: MatrixSpan<T>,
    pub generators: Vec<Generator<T>>,
    /// Productive bracket rounds.
    pub iterations: usize,
    pub stable: bool,
    pub log: Vec<RoundLog>,
    /// Smallest singular value of the normalized basis.
    pub min_singular: T,
    /// Set when `min_singular < 10 · rank_tol`.
    pub rank_warning: bool,
}

impl<T: Real> ClosureReport<T> {
    pub fn dimension(&self) -> usize {
        self.span.dim()
    }
}

/// Linear, or higher-degree polynomial, vector field offered to the closure
/// engine as an additional bracket partner.
#[derive(Debug, Clone)]
pub struct PolynomialField<T: Real> {
    pub degree: usize,
    /// For degree one, the single matrix of `x ↦ Mx`.
    pub terms: Vec<RealMatrix<T>>,
}

fn bracket<T: Real>(p: &RealMatrix<T>, w: &RealMatrix<T>) -> RealMatrix<T> {
    // [Px, Wx] = (WP − PW)x
    w * p - p * w
}

fn drift_and_seeds<T: Real>(
    bm: &BilinearModel<T>,
    variant: &Variant<T>,
) -> Result<(RealMatrix<T>, Vec<(RealMatrix<T>, Origin)>)> {
    match variant {
        Variant::Stochastic => Ok((
            bm.a.clone(),
            bm.g.iter()
                .enumerate()
                .map(|(i, g)| (g.clone(), Origin::Seed(i)))
                .collect(),
        )),
        Variant::Constant(rates) => {
            if rates.len() != bm.g.len() {
                return Err(Error::LengthMismatch {
                    what: "rates",
                    expected: bm.g.len(),
                    found: rates.len(),
                });
            }
            if let Some((k, g)) = rates.iter().enumerate().find(|(_, g)| **g < T::zero()) {
                return Err(Error::NegativeRate {
                    channel: k,
                    value: g.to_f64(),
                });
            }
            let n = bm.dim();
            let sum =
                bm.g.iter()
                    .zip(rates)
                    .fold(RealMatrix::zeros(n, n), |acc, (g, &r)| acc + g * r);
            Ok((&bm.a + &sum, vec![(sum, Origin::SeedSum)]))
        }
    }
}

/// Degree-one reachability distribution of `bm`.
pub fn reachability_distribution<T: Real>(
    bm: &BilinearModel<T>,
    variant: &Variant<T>,
    opts: &ClosureOptions,
) -> Result<ClosureReport<T>> {
    reachability_distribution_with(bm, variant, &[], opts)
}

/// [`reachability_distribution`] with extra bracket partners. Only linear
/// fields are supported; anything else is rejected with
/// [`Error::UnsupportedDegree`].
pub fn reachability_distribution_with<T: Real>(
    bm: &BilinearModel<T>,
    variant: &Variant<T>,
    extra: &[PolynomialField<T>],
    opts: &ClosureOptions,
) -> Result<ClosureReport<T>> {
    if opts.max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
    }
    if !(opts.rank_tol > 0.0) {
        return Err(Error::InvalidArgument("rank_tol must be positive".into()));
    }
    let n = bm.dim();
    let mut partners_extra = Vec::new();
    for f in extra {
        if f.degree != 1 {
            return Err(Error::UnsupportedDegree(f.degree));
        }
        match f.terms.as_slice() {
            [m] if m.nrows() == n && m.ncols() == n => partners_extra.push(m.clone()),
            _ => {
                return Err(Error::InvalidArgument(
                    "a linear field needs exactly one N×N matrix".into(),
                ))
            }
        }
    }
    let (a_eff, seeds) = drift_and_seeds(bm, variant)?;
    let mut partners: Vec<(Partner, RealMatrix<T>)> = vec![(Partner::Drift, a_eff.clone())];
    partners.extend(
        bm.b.iter()
            .enumerate()
            .map(|(i, b)| (Partner::Control(i), b.clone())),
    );
    let first_extra = bm.b.len();
    partners.extend(
        partners_extra
            .into_iter()
            .enumerate()
            .map(|(i, m)| (Partner::Control(first_extra + i), m)),
    );

    let scale = std::iter::once(&a_eff)
        .chain(bm.b.iter())
        .chain(bm.g.iter())
        .chain(seeds.iter().map(|(m, _)| m))
        .fold(T::zero(), |acc, m| acc.max(m.norm()));
    let mut span = MatrixSpan::new(n, opts.rank_tol).with_scale(scale);
    let mut joint = MatrixSpan::new(n, opts.rank_tol).with_scale(scale);
    for b in &bm.b {
        joint.insert(b)?;
    }

    let mut generators = Vec::new();
    let mut frontier = Vec::new();
    for (m, origin) in seeds {
        if span.insert(&m)? {
            joint.insert(&m)?;
            frontier.push(generators.len());
            generators.push(Generator {
                matrix: m,
                origin,
                round: 0,
            });
        }
    }

    let mut log = Vec::new();
    let mut iterations = 0;
    let mut stable = false;
    for round in 1..=opts.max_iter {
        if frontier.is_empty() {
            stable = true;
            break;
        }
        let mut entry = RoundLog {
            round,
            candidates: 0,
            added: Vec::new(),
            absorbed_by_controls: 0,
        };
        let mut next = Vec::new();
        for &w in &frontier {
            for (partner, p) in &partners {
                let cand = bracket(p, &generators[w].matrix);
                entry.candidates += 1;
                let (resid, norm) = joint.reduce(&cand)?;
                if norm <= joint.threshold() {
                    if !span.contains(&cand)? {
                        entry.absorbed_by_controls += 1;
                    }
                    continue;
                }
                span.insert(&resid)?;
                joint.insert(&resid)?;
                entry.added.push(generators.len());
                next.push(generators.len());
                generators.push(Generator {
                    matrix: resid,
                    origin: Origin::Bracket {
                        partner: *partner,
                        parent: w,
                    },
                    round,
                });
            }
        }
        if !entry.added.is_empty() {
            iterations = round;
        }
        log.push(entry);
        frontier = next;
    }
    if frontier.is_empty() {
        stable = true;
    }

    let sv = span.certificate();
    let min_singular = sv.last().copied().unwrap_or_else(T::zero);
    let rank_warning = !sv.is_empty() && min_singular.to_f64() < 10.0 * opts.rank_tol;
    Ok(ClosureReport {
        variant: variant.name(),
        mode: bm.mode,
        span,
        generators,
        iterations,
        stable,
        log,
        min_singular,
        rank_warning,
    })
}

/// Largest residual, relative to the span's scale, of a bracket of a basis
/// element with the drift or a control, reduced against the span plus the
/// control directions. Zero (up to rounding) exactly when the span is
/// closed.
pub fn closure_defect<T: Real>(
    span: &MatrixSpan<T>,
    bm: &BilinearModel<T>,
    variant: &Variant<T>,
) -> Result<T> {
    let (a_eff, _) = drift_and_seeds(bm, variant)?;
    let mut joint = span.clone();
    for b in &bm.b {
        joint.insert(b)?;
    }
    let scale = joint.threshold() / T::lit(span.rank_tol());
    let mut worst = T::zero();
    for w in span.basis() {
        for p in std::iter::once(&a_eff).chain(bm.b.iter()) {
            let (_, norm) = joint.reduce(&bracket(p, w))?;
            worst = worst.max(if scale > T::zero() {
                norm / scale
            } else {
                norm
            });
        }
    }
    Ok(worst)
}

/// `{V_i x0}` for every basis element.
pub fn evaluate_distribution<T: Real>(
    span: &MatrixSpan<T>,
    x0: &DVector<T>,
) -> Result<Vec<DVector<T>>> {
    if x0.len() != span.ambient() {
        return Err(Error::LengthMismatch {
            what: "base point",
            expected: span.ambient(),
            found: x0.len(),
        });
    }
    Ok(span.basis().iter().map(|m| m * x0).collect())
}

/// Rank of a list of vectors (zero for an empty or all-zero list).
pub fn pointwise_dimension<T: Real>(vs: &[DVector<T>], rel_tol: f64) -> usize {
    if vs.is_empty() {
        return 0;
    }
    numerical_rank(&RealMatrix::from_columns(vs), rel_tol)
}

/// Relation between the tangent space of a manifold and the pointwise
/// distribution at a base point.
#[derive(Debug, Clone)]
pub struct ContainmentReport<T: Real> {
    pub tangent_dim: usize,
    pub distribution_dim: usize,
    pub intersection_dim: usize,
    pub contained: bool,
    /// Largest relative residual of a distribution vector off the tangent
    /// space.
    pub max_residual: T,
    /// Principal angles (radians, ascending) between the two subspaces.
    pub principal_angles: Vec<T>,
}

impl<T: Real> fmt::Display for ContainmentReport<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "dim T = {}, dim D = {}, dim(T ∩ D) = {}, contained = {}",
            self.tangent_dim, self.distribution_dim, self.intersection_dim, self.contained
        )
    }
}

/// Checks `T(DFM) ⊇ V(x0)` and measures how the two subspaces meet.
pub fn tangent_containment<T: Real>(
    span: &MatrixSpan<T>,
    x0: &DVector<T>,
    tangent: &[Hermitian<T>],
    mode: CoordinateMode,
) -> Result<ContainmentReport<T>> {
    let rank_tol = span.rank_tol();
    let dvecs = evaluate_distribution(span, x0)?;
    let mut tvecs = Vec::with_capacity(tangent.len());
    for d in tangent {
        let v = coherence_map(d, mode)?;
        if v.len() != span.ambient() {
            return Err(Error::IncompatibleBasePoint(format!(
                "tangent direction has {} coordinates, distribution lives in {}",
                v.len(),
                span.ambient()
            )));
        }
        tvecs.push(v);
    }
    let rows = span.ambient();
    let stack = |vs: &[DVector<T>]| {
        if vs.is_empty() {
            RealMatrix::zeros(rows, 0)
        } else {
            column_basis(&RealMatrix::from_columns(vs), rank_tol)
        }
    };
    let qt = stack(&tvecs);
    let qd = stack(&dvecs);
    let mut max_residual = T::zero();
    for d in &dvecs {
        let nd = d.norm();
        if nd == T::zero() {
            continue;
        }
        let r = d - &qt * (qt.transpose() * d);
        max_residual = max_residual.max(r.norm() / nd);
    }
    let mut angles: Vec<T> = if qt.ncols() == 0 || qd.ncols() == 0 {
        Vec::new()
    } else {
        singular_values(&(qt.transpose() * &qd))
            .into_iter()
            .map(|s| s.min(T::one()).max(-T::one()).acos())
            .collect()
    };
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let angle_tol = T::lit(rank_tol.sqrt());
    Ok(ContainmentReport {
        tangent_dim: qt.ncols(),
        distribution_dim: qd.ncols(),
        intersection_dim: angles.iter().filter(|&&a| a <= angle_tol).count(),
        contained: max_residual.to_f64() <= rank_tol.sqrt(),
        max_residual,
        principal_angles: angles,
    })
}
