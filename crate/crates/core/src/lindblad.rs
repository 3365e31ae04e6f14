// SPDX-License-Identifier: Apache-2.0

//! Lindblad master equation with controlled Hamiltonian and rate-weighted
//! jump channels:
//!
//! ```text
//! dρ/dt = −i[H0 + Σ_α u_α(t) H_α, ρ] + Σ_α γ_α(t) L_α(ρ)
//! L_α(ρ) = ½([F_α, ρF_α†] + [F_αρ, F_α†])
//! ```
//!
//! Time is dimensionless with ħ = 1.

use crate::error::{Error, Result};
use crate::linalg::{
    check_finite, comm, ensure_same_dim, ComplexMatrix, DensityMatrix, Hermitian, Tolerances,
};
use crate::scalar::{ci, Real};

/// Piecewise-constant real signal. `values[k]` holds on `[times[k], times[k+1])`;
/// the first value extends to the left and the last value to the right.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstant<T: Real> {
    times: Vec<T>,
    values: Vec<T>,
}

impl<T: Real> PiecewiseConstant<T> {
    pub fn new(times: Vec<T>, values: Vec<T>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::InvalidSchedule(format!(
                "need one value per breakpoint (got {} times, {} values)",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSchedule(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if times.iter().chain(values.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidSchedule(
                "non-finite breakpoint or value".into(),
            ));
        }
        Ok(Self { times, values })
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn at(&self, t: T) -> T {
        let idx = self.times.partition_point(|&b| b <= t);
        self.values[idx.saturating_sub(1)]
    }
}

/// A scalar control or rate signal.
#[derive(Debug, Clone, PartialEq)]
pub enum Signal<T: Real> {
    Constant(T),
    Piecewise(PiecewiseConstant<T>),
}

impl<T: Real> Signal<T> {
    pub fn at(&self, t: T) -> T {
        match self {
            Signal::Constant(v) => *v,
            Signal::Piecewise(p) => p.at(t),
        }
    }

    fn samples(&self) -> Vec<T> {
        match self {
            Signal::Constant(v) => vec![*v],
            Signal::Piecewise(p) => p.values.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Control<T: Real> {
    pub label: String,
    pub op: Hermitian<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Jump<T: Real> {
    pub label: String,
    pub op: ComplexMatrix<T>,
    pub rate: Signal<T>,
}

/// Full model: drift Hamiltonian, control Hamiltonians and jump channels.
#[derive(Debug, Clone, PartialEq)]
pub struct LindbladModel<T: Real> {
    n: usize,
    h0: Hermitian<T>,
    controls: Vec<Control<T>>,
    jumps: Vec<Jump<T>>,
}

impl<T: Real> LindbladModel<T> {
    pub fn new(h0: Hermitian<T>, controls: Vec<Control<T>>, jumps: Vec<Jump<T>>) -> Result<Self> {
        let n = h0.dim();
        for c in &controls {
            if c.op.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: c.op.dim(),
                    context: "control Hamiltonian",
                });
            }
        }
        for (k, j) in jumps.iter().enumerate() {
            if j.op.nrows() != n || j.op.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: j.op.nrows(),
                    context: "jump operator",
                });
            }
            check_finite(&j.op, "jump operator")?;
            if let Some(&bad) = j.rate.samples().iter().find(|v| **v < T::zero()) {
                return Err(Error::NegativeRate {
                    channel: k,
                    value: bad.to_f64(),
                });
            }
        }
        Ok(Self {
            n,
            h0,
            controls,
            jumps,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn h0(&self) -> &Hermitian<T> {
        &self.h0
    }

    pub fn controls(&self) -> &[Control<T>] {
        &self.controls
    }

    pub fn jumps(&self) -> &[Jump<T>] {
        &self.jumps
    }

    /// Rates of all jump channels at time `t`.
    pub fn rates_at(&self, t: T) -> Vec<T> {
        self.jumps.iter().map(|j| j.rate.at(t)).collect()
    }

    /// Replaces every rate signal by a constant.
    pub fn with_constant_rates(&self, rates: &[T]) -> Result<Self> {
        if rates.len() != self.jumps.len() {
            return Err(Error::LengthMismatch {
                what: "rates",
                expected: self.jumps.len(),
                found: rates.len(),
            });
        }
        let jumps = self
            .jumps
            .iter()
            .zip(rates)
            .map(|(j, &g)| Jump {
                rate: Signal::Constant(g),
                ..j.clone()
            })
            .collect();
        Self::new(self.h0.clone(), self.controls.clone(), jumps)
    }

    /// Total Hamiltonian `H0 + Σ u_α H_α`.
    pub fn hamiltonian(&self, u: &[T]) -> Result<Hermitian<T>> {
        if u.len() != self.controls.len() {
            return Err(Error::LengthMismatch {
                what: "controls",
                expected: self.controls.len(),
                found: u.len(),
            });
        }
        let mut h = self.h0.matrix().clone();
        for (c, &ua) in self.controls.iter().zip(u) {
            h += c.op.matrix().map(|z| z * ua);
        }
        Ok(Hermitian::from_hermitian_part(&h))
    }
}

/// Per-control piecewise-constant knobs `u_α(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSchedule<T: Real> {
    signals: Vec<Signal<T>>,
}

impl<T: Real> ControlSchedule<T> {
    pub fn new(signals: Vec<Signal<T>>) -> Self {
        Self { signals }
    }

    /// All knobs held at zero.
    pub fn zeros(num_controls: usize) -> Self {
        Self::new(vec![Signal::Constant(T::zero()); num_controls])
    }

    pub fn constant(values: &[T]) -> Self {
        Self::new(values.iter().map(|&v| Signal::Constant(v)).collect())
    }

    pub fn len(&self) -> usize {
        self.signals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signals.is_empty()
    }

    pub fn at(&self, t: T) -> Vec<T> {
        self.signals.iter().map(|s| s.at(t)).collect()
    }
}

/// `L(ρ) = ½([F, ρF†] + [Fρ, F†])`.
pub fn lindbladian_apply<T: Real>(
    f: &ComplexMatrix<T>,
    rho: &Hermitian<T>,
) -> Result<Hermitian<T>> {
    ensure_same_dim(f, rho.matrix(), "lindbladian")?;
    Ok(Hermitian::from_hermitian_part(&dissipator(f, rho.matrix())))
}

pub(crate) fn dissipator<T: Real>(
    f: &ComplexMatrix<T>,
    rho: &ComplexMatrix<T>,
) -> ComplexMatrix<T> {
    let fd = f.adjoint();
    let a = comm(f, &(rho * &fd));
    let b = comm(&(f * rho), &fd);
    (a + b).map(|z| z * T::lit(0.5))
}

/// `−i[H, ρ]`.
pub(crate) fn hamiltonian_action<T: Real>(
    h: &ComplexMatrix<T>,
    rho: &ComplexMatrix<T>,
) -> ComplexMatrix<T> {
    comm(h, rho).map(|z| -(ci::<T>() * z))
}

fn rhs_matrix<T: Real>(
    model: &LindbladModel<T>,
    rho: &ComplexMatrix<T>,
    h: &ComplexMatrix<T>,
    gamma: &[T],
) -> ComplexMatrix<T> {
    let mut out = hamiltonian_action(h, rho);
    for (j, &g) in model.jumps.iter().zip(gamma) {
        if g != T::zero() {
            out += dissipator(&j.op, rho).map(|z| z * g);
        }
    }
    out
}

fn check_rates<T: Real>(model: &LindbladModel<T>, gamma: &[T]) -> Result<()> {
    if gamma.len() != model.jumps.len() {
        return Err(Error::LengthMismatch {
            what: "rates",
            expected: model.jumps.len(),
            found: gamma.len(),
        });
    }
    if let Some((k, g)) = gamma.iter().enumerate().find(|(_, g)| **g < T::zero()) {
        return Err(Error::NegativeRate {
            channel: k,
            value: g.to_f64(),
        });
    }
    Ok(())
}

/// Evaluates the master-equation right-hand side for explicit knob values
/// `u` and rates `gamma`. Accepts any Hermitian `ρ` (the map is linear).
pub fn lindblad_rhs<T: Real>(
    model: &LindbladModel<T>,
    rho: &Hermitian<T>,
    u: &[T],
    gamma: &[T],
) -> Result<Hermitian<T>> {
    if rho.dim() != model.n {
        return Err(Error::DimensionMismatch {
            expected: model.n,
            found: rho.dim(),
            context: "density matrix",
        });
    }
    check_rates(model, gamma)?;
    let h = model.hamiltonian(u)?;
    Ok(Hermitian::from_hermitian_part(&rhs_matrix(
        model,
        rho.matrix(),
        h.matrix(),
        gamma,
    )))
}

/// Integration settings for [`propagate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagateOptions {
    /// Maximum RK4 step; each grid interval is split into equal substeps.
    pub step: f64,
    /// Reporting tolerances: violations beyond them are recorded.
    pub tolerances: Tolerances,
    /// Trace or positivity violations beyond this abort the run.
    pub hard_tol: f64,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        Self {
            step: 1e-3,
            tolerances: Tolerances::default(),
            hard_tol: 1e-4,
        }
    }
}

/// A density-matrix invariant that drifted beyond its reporting tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub index: usize,
    pub t: f64,
    pub kind: ViolationKind,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    Trace,
    Positivity,
    Hermiticity,
}

/// Sampled solution of the master equation.
#[derive(Debug, Clone)]
pub struct Trajectory<T: Real> {
    pub times: Vec<T>,
    pub states: Vec<DensityMatrix<T>>,
    /// Knob values sampled at each grid point.
    pub controls: Vec<Vec<T>>,
    /// Rates sampled at each grid point.
    pub rates: Vec<Vec<T>>,
    pub violations: Vec<Violation>,
}

impl<T: Real> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Builds a trajectory directly from sampled states (no integration).
    pub fn from_states(times: Vec<T>, states: Vec<DensityMatrix<T>>) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::LengthMismatch {
                what: "trajectory states",
                expected: times.len(),
                found: states.len(),
            });
        }
        let k = times.len();
        Ok(Self {
            times,
            states,
            controls: vec![Vec::new(); k],
            rates: vec![Vec::new(); k],
            violations: Vec::new(),
        })
    }
}

/// Integrates the master equation on `t_grid` with fixed-step classical RK4.
/// Knobs and rates are held at their substep-midpoint values, so breakpoints
/// of piecewise-constant signals that fall on substep boundaries are exact.
///
/// Rates come from the model's rate signals, knobs from `schedule`. Invariant
/// drift beyond the reporting tolerances is recorded in
/// [`Trajectory::violations`]; drift beyond `hard_tol` aborts.
pub fn propagate<T: Real>(
    model: &LindbladModel<T>,
    rho0: &DensityMatrix<T>,
    schedule: &ControlSchedule<T>,
    t_grid: &[T],
    opts: &PropagateOptions,
) -> Result<Trajectory<T>> {
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
    if !(opts.step > 0.0) {
        return Err(Error::InvalidArgument("step must be positive".into()));
    }
    if rho0.dim() != model.n {
        return Err(Error::DimensionMismatch {
            expected: model.n,
            found: rho0.dim(),
            context: "initial state",
        });
    }
    if schedule.len() != model.controls.len() {
        return Err(Error::LengthMismatch {
            what: "control schedule",
            expected: model.controls.len(),
            found: schedule.len(),
        });
    }

    let half = T::lit(0.5);
    let sixth = T::lit(1.0 / 6.0);
    let two = T::lit(2.0);

    let mut traj = Trajectory {
        times: t_grid.to_vec(),
        states: Vec::with_capacity(t_grid.len()),
        controls: Vec::with_capacity(t_grid.len()),
        rates: Vec::with_capacity(t_grid.len()),
        violations: Vec::new(),
    };
    let mut rho = rho0.matrix().clone();
    record(&mut traj, model, schedule, t_grid[0], &rho, 0, opts)?;

    for (k, w) in t_grid.windows(2).enumerate() {
        let (t0, t1) = (w[0], w[1]);
        let span = (t1 - t0).to_f64();
        let nsub = (span / opts.step).ceil().max(1.0) as usize;
        let h = (t1 - t0) / T::lit(nsub as f64);
        for s in 0..nsub {
            // signals are piecewise constant: hold them at the substep midpoint
            let mid = t0 + h * (T::lit(s as f64) + half);
            let gamma = model.rates_at(mid);
            check_rates(model, &gamma)?;
            let ham = model.hamiltonian(&schedule.at(mid))?;
            let eval = |r: &ComplexMatrix<T>| rhs_matrix(model, r, ham.matrix(), &gamma);
            let k1 = eval(&rho);
            let k2 = eval(&(&rho + scaled(&k1, h * half)));
            let k3 = eval(&(&rho + scaled(&k2, h * half)));
            let k4 = eval(&(&rho + scaled(&k3, h)));
            let incr = scaled(&(k1 + scaled(&k2, two) + scaled(&k3, two) + k4), h * sixth);
            rho += incr;
        }
        // the exact flow keeps ρ Hermitian; strip rounding drift only
        rho = crate::linalg::hermitian_part(&rho);
        record(&mut traj, model, schedule, t1, &rho, k + 1, opts)?;
    }
    Ok(traj)
}

fn scaled<T: Real>(m: &ComplexMatrix<T>, s: T) -> ComplexMatrix<T> {
    m.map(|z| z * s)
}

fn record<T: Real>(
    traj: &mut Trajectory<T>,
    model: &LindbladModel<T>,
    schedule: &ControlSchedule<T>,
    t: T,
    rho: &ComplexMatrix<T>,
    index: usize,
    opts: &PropagateOptions,
) -> Result<()> {
    check_finite(rho, "propagated state").map_err(|_| Error::IntegrationFailure {
        t: t.to_f64(),
        reason: "state became non-finite".into(),
    })?;
    let h = Hermitian::from_hermitian_part(rho);
    let tr_dev = (h.trace().to_f64() - 1.0).abs();
    let (evals, _) = h.eigh();
    let min_eig = evals.last().copied().unwrap_or_else(T::zero).to_f64();
    let tol = &opts.tolerances;
    let tf = t.to_f64();
    if tr_dev > opts.hard_tol || min_eig < -opts.hard_tol {
        return Err(Error::IntegrationFailure {
            t: tf,
            reason: format!("trace deviation {tr_dev:e}, minimum eigenvalue {min_eig:e}"),
        });
    }
    if tr_dev > tol.trace {
        traj.violations.push(Violation {
            index,
            t: tf,
            kind: ViolationKind::Trace,
            value: tr_dev,
        });
    }
    if min_eig < -tol.psd {
        traj.violations.push(Violation {
            index,
            t: tf,
            kind: ViolationKind::Positivity,
            value: min_eig,
        });
    }
    traj.states.push(DensityMatrix::unchecked(h));
    traj.controls.push(schedule.at(t));
    traj.rates.push(model.rates_at(t));
    Ok(())
}
