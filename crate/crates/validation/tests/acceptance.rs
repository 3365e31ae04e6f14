// SPDX-License-Identifier: Apache-2.0

//! Acceptance run: one PASS/FAIL line per criterion. Exits non-zero when
//! any criterion fails.

use std::time::{Duration, Instant};

use clap::Parser;

use dfm_core::bloch::{
    build_bilinear, coherence_map, inverse_coherence_map, propagate_bilinear, CoordinateMode,
};
use dfm_core::claims::{is_skew, local_commutation_defect, off_diagonal_max, RANK_TOL_SWEEP};
use dfm_core::geometry::{
    construction_dimension, dfm_dimension, dimension_report, multiplicity_preserving_tangent,
    selected_eigenvalue_drift, DfmSpec,
};
use dfm_core::linalg::{eigh_descending, pauli_string, DensityMatrix, Hermitian, Tolerances};
use dfm_core::lindblad::{
    propagate, ControlSchedule, Jump, LindbladModel, PiecewiseConstant, PropagateOptions, Signal,
};
use dfm_core::presets::two_qubit_dephasing;
use dfm_core::reach::{degree0_check, reachability_distribution, ClosureOptions, Variant};
use dfm_core::spectral::{
    consistency_residual, dfs_hamiltonian, eigenframe_path, spectral_blocks, BlockSelection,
    DEFAULT_CLUSTER_TOL, DEFAULT_FD_TOL,
};
use dfm_core::ComplexMatrix;
use nalgebra::{Complex, DVector};
use serde_json::Value;

const TABLE_DIMS: [usize; 12] = [14, 12, 8, 13, 11, 11, 9, 12, 10, 8, 6, 0];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

/// Deterministic filler for test matrices.
fn filler(len: usize, seed: usize) -> Vec<f64> {
    (0..len)
        .map(|k| ((k * 7 + seed * 13 + 1) as f64 * 0.37).sin())
        .collect()
}

fn complex_matrix(n: usize, v: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |i, j| {
        Complex::new(v[2 * (i * n + j)], v[2 * (i * n + j) + 1])
    })
}

fn unitary(n: usize, seed: usize) -> ComplexMatrix {
    complex_matrix(n, &filler(2 * n * n, seed)).qr().q()
}

fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

fn rotated(u: &ComplexMatrix, w: &[f64]) -> DensityMatrix<f64> {
    let s: f64 = w.iter().sum();
    let d = ComplexMatrix::from_diagonal(&DVector::from_iterator(
        w.len(),
        w.iter().map(|x| Complex::new(x / s, 0.0)),
    ));
    DensityMatrix::new(u * d * u.adjoint(), &Tolerances::default()).unwrap()
}

fn grid(steps: usize, t_final: f64) -> Vec<f64> {
    (0..=steps)
        .map(|k| t_final * k as f64 / steps as f64)
        .collect()
}

/// Runs the `dfm` command line in-process.
fn dfm(args: &[&str]) -> Result<dfm_cli::Outcome, String> {
    let argv: Vec<String> = args.iter().map(|s| s.to_string()).collect();
    let cli = dfm_cli::Cli::try_parse_from(std::iter::once("dfm").chain(args.iter().copied()))
        .map_err(|e| e.to_string())?;
    dfm_cli::run(&cli, &argv).map_err(|e| e.to_string())
}

fn within(elapsed: Duration, limit_s: f64) -> (bool, String) {
    let s = elapsed.as_secs_f64();
    (s < limit_s, format!("{s:.2} s (limit {limit_s} s)"))
}

fn table_reproduction() -> Outcome {
    let start = Instant::now();
    let out = match dfm(&["--json", "dfm-dim", "--n", "4"]) {
        Ok(o) => o,
        Err(e) => return outcome(false, e),
    };
    let (ok_time, time) = within(start.elapsed(), 1.0);
    let report: Value = serde_json::to_value(&out.report).unwrap();
    let rows = report["results"]["rows"]
        .as_array()
        .cloned()
        .unwrap_or_default();
    let dims: Vec<usize> = rows
        .iter()
        .map(|r| r["dimension"].as_u64().map_or(usize::MAX, |d| d as usize))
        .collect();
    let ok = out.exit_code == 0 && dims == TABLE_DIMS && ok_time;
    outcome(ok, format!("{} rows, dims {dims:?}, {time}", rows.len()))
}

fn reach_dimensions() -> Outcome {
    let start = Instant::now();
    let model = two_qubit_dephasing::<f64>();
    let equal = Variant::Constant(vec![1.0, 1.0]);
    let mut seen = Vec::new();
    for mode in [CoordinateMode::Paper16, CoordinateMode::PauliFull] {
        let bm = build_bilinear(&model, mode).unwrap();
        for tol in RANK_TOL_SWEEP {
            let o = ClosureOptions {
                rank_tol: tol,
                ..ClosureOptions::default()
            };
            let s = reachability_distribution(&bm, &Variant::Stochastic, &o).unwrap();
            let c = reachability_distribution(&bm, &equal, &o).unwrap();
            seen.push((s.dimension(), c.dimension(), s.stable && c.stable));
        }
    }
    let (ok_time, time) = within(start.elapsed(), 10.0);
    let stable = seen.iter().all(|d| *d == seen[0]) && seen[0].2;
    let ok = stable && seen[0].0 == 10 && seen[0].1 == 9 && ok_time;
    outcome(
        ok,
        format!(
            "stochastic {} (want 10), equal constant {} (want 9), stable across sweep: {stable}, {time}",
            seen[0].0, seen[0].1
        ),
    )
}

fn degree0_emptiness() -> Outcome {
    let start = Instant::now();
    let bm = build_bilinear(&two_qubit_dephasing::<f64>(), CoordinateMode::Paper15).unwrap();
    let d0 = degree0_check(&bm.a, &bm.b, 1e-10).unwrap();
    let (ok_time, time) = within(start.elapsed(), 1.0);
    outcome(
        d0.is_empty() && ok_time,
        format!("{} common real eigenvectors, {time}", d0.vectors().len()),
    )
}

fn algebraic_structure() -> Outcome {
    let bm = build_bilinear(&two_qubit_dephasing::<f64>(), CoordinateMode::Paper16).unwrap();
    let comm = local_commutation_defect(&bm);
    let gdiag = bm.g.iter().map(off_diagonal_max).fold(0.0, f64::max);
    let bz = [2, 5].iter().all(|&i| is_skew(&bm.b[i], 1e-12));
    let bxy = [0, 1, 3, 4].iter().all(|&i| !is_skew(&bm.b[i], 1e-12));
    outcome(
        comm <= 1e-12 && gdiag <= 1e-12,
        format!(
            "commutation defect {comm:.1e}, G off-diagonal {gdiag:.1e} (tol 1e-12); skew pattern: B_z skew {bz}, B_x/B_y not skew {bxy}"
        ),
    )
}

fn dynamics_oracles() -> Outcome {
    let start = Instant::now();
    let opts = PropagateOptions::default();
    let preset = two_qubit_dephasing::<f64>();

    // (a) closed preset dynamics keep the spectrum
    let closed = preset.with_constant_rates(&[0.0, 0.0]).unwrap();
    let rho0 = rotated(&unitary(4, 1), &[0.4, 0.3, 0.2, 0.1]);
    let controls = ControlSchedule::constant(&[0.7, -0.3, 0.2, 0.5, 0.1, -0.6]);
    let traj = propagate(&closed, &rho0, &controls, &grid(100, 1.0), &opts).unwrap();
    let (l0, _) = eigh_descending(rho0.matrix());
    let spec_dev = traj
        .states
        .iter()
        .map(|s| {
            let (l, _) = eigh_descending(s.matrix());
            l.iter()
                .zip(&l0)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);

    // (b) single-qubit dephasing
    let gamma = 0.35;
    let deph = LindbladModel::new(
        Hermitian::zeros(2),
        vec![],
        vec![Jump {
            label: "z".into(),
            op: pauli_string("Z").unwrap(),
            rate: Signal::Constant(gamma),
        }],
    )
    .unwrap();
    let psi = DVector::from_vec(vec![Complex::new(0.6, 0.0), Complex::new(0.0, 0.8)]);
    let q0 = DensityMatrix::pure(&psi).unwrap();
    let qt = propagate(
        &deph,
        &q0,
        &ControlSchedule::zeros(0),
        &grid(20, 2.0),
        &opts,
    )
    .unwrap();
    let decay = qt
        .times
        .iter()
        .zip(&qt.states)
        .map(|(t, s)| (s.matrix()[(0, 1)] - q0.matrix()[(0, 1)] * (-2.0 * gamma * t).exp()).norm())
        .fold(0.0, f64::max);

    // (c) master equation against the bilinear form
    let schedule = ControlSchedule::new(vec![
        Signal::Constant(0.7),
        Signal::Piecewise(PiecewiseConstant::new(vec![0.0, 0.4], vec![-0.5, 1.1]).unwrap()),
        Signal::Constant(0.2),
        Signal::Constant(-0.3),
        Signal::Piecewise(
            PiecewiseConstant::new(vec![0.0, 0.25, 0.6], vec![0.9, 0.0, -0.8]).unwrap(),
        ),
        Signal::Constant(0.4),
    ]);
    let t = grid(10, 1.0);
    let full = propagate(&preset, &rho0, &schedule, &t, &opts).unwrap();
    let rates: Vec<Signal<f64>> = preset.jumps().iter().map(|j| j.rate.clone()).collect();
    let mut square: f64 = 0.0;
    for mode in CoordinateMode::ALL {
        let bm = build_bilinear(&preset, mode).unwrap();
        let x0 = coherence_map(rho0.hermitian(), mode).unwrap();
        let xs = propagate_bilinear(&bm, &x0, &schedule, &rates, &t, opts.step).unwrap();
        for (x, s) in xs.iter().zip(&full.states) {
            let back = inverse_coherence_map(x, mode, 1.0).unwrap();
            square = square.max(max_abs(&(back.matrix() - s.matrix())));
        }
    }
    let (ok_time, time) = within(start.elapsed(), 30.0);
    outcome(
        spec_dev <= 1e-9 && decay <= 1e-6 && square <= 1e-6 && ok_time,
        format!(
            "(a) spectrum drift {spec_dev:.1e} (tol 1e-9), (b) decay error {decay:.1e} (tol 1e-6), (c) commuting square {square:.1e} (tol 1e-6), {time}"
        ),
    )
}

fn dfs_consistency() -> Outcome {
    let opts = PropagateOptions::default();
    let mut closed_worst: f64 = 0.0;
    for seed in 0..4 {
        let n = 3 + seed % 2;
        let h = Hermitian::from_hermitian_part(&complex_matrix(n, &filler(2 * n * n, 40 + seed)));
        let model = LindbladModel::new(h, vec![], vec![]).unwrap();
        let w: Vec<f64> = (0..n).map(|k| 0.1 + 0.2 * k as f64).collect();
        let rho = rotated(&unitary(n, 20 + seed), &w);
        let traj = propagate(
            &model,
            &rho,
            &ControlSchedule::zeros(0),
            &grid(100, 0.1),
            &opts,
        )
        .unwrap();
        let spec0 = spectral_blocks(&rho, DEFAULT_CLUSTER_TOL).unwrap();
        let path =
            eigenframe_path(&traj, &BlockSelection::all(&spec0), DEFAULT_CLUSTER_TOL).unwrap();
        let hs = dfs_hamiltonian(&path, DEFAULT_FD_TOL).unwrap();
        for (s, hd) in traj.states.iter().zip(&hs) {
            let spec = spectral_blocks(s, DEFAULT_CLUSTER_TOL).unwrap();
            let r = consistency_residual(
                &model,
                s.hermitian(),
                &[],
                &[],
                hd,
                &spec,
                &BlockSelection::all(&spec),
            )
            .unwrap();
            closed_worst = closed_worst.max(r);
        }
    }

    let preset = two_qubit_dephasing::<f64>();
    let mut fixed_worst: f64 = 0.0;
    for w in [
        [0.4, 0.3, 0.2, 0.1],
        [0.1, 0.2, 0.3, 0.4],
        [0.5, 0.25, 0.15, 0.1],
    ] {
        let rho = DensityMatrix::diagonal(&w, &Tolerances::default()).unwrap();
        let traj = propagate(
            &preset,
            &rho,
            &ControlSchedule::zeros(6),
            &grid(100, 1.0),
            &opts,
        )
        .unwrap();
        let spec0 = spectral_blocks(&rho, DEFAULT_CLUSTER_TOL).unwrap();
        let sel = BlockSelection::new([0], &spec0).unwrap();
        let path = eigenframe_path(&traj, &sel, DEFAULT_CLUSTER_TOL).unwrap();
        let hs = dfs_hamiltonian(&path, DEFAULT_FD_TOL).unwrap();
        for (k, (s, hd)) in traj.states.iter().zip(&hs).enumerate() {
            let spec = spectral_blocks(s, DEFAULT_CLUSTER_TOL).unwrap();
            let sel_k = BlockSelection::new([0], &spec).unwrap();
            let r = consistency_residual(
                &preset,
                s.hermitian(),
                &traj.controls[k],
                &traj.rates[k],
                hd,
                &spec,
                &sel_k,
            )
            .unwrap();
            fixed_worst = fixed_worst.max(r);
        }
    }
    outcome(
        closed_worst <= 1e-8 && fixed_worst <= 1e-10,
        format!("closed K = all {closed_worst:.1e} (tol 1e-8), dephasing fixed points {fixed_worst:.1e} (tol 1e-10)"),
    )
}

fn tangent_construction() -> Outcome {
    // (weights, selected block) with distinct block values
    let cases: [(&[f64], &[usize]); 6] = [
        (&[0.45, 0.2, 0.2, 0.15], &[0]),
        (&[0.45, 0.2, 0.2, 0.15], &[1]),
        (&[0.4, 0.3, 0.2, 0.1], &[0, 2]),
        (&[0.4, 0.3, 0.2, 0.1], &[3]),
        (&[0.3, 0.3, 0.3, 0.1], &[1]),
        (&[0.5, 0.3, 0.2], &[1]),
    ];
    let mut worst: f64 = 0.0;
    let mut mismatches = Vec::new();
    for (i, (w, pick)) in cases.iter().enumerate() {
        let rho = rotated(&unitary(w.len(), 60 + i), w);
        let spec = spectral_blocks(&rho, DEFAULT_CLUSTER_TOL).unwrap();
        let sel = BlockSelection::new(pick.iter().copied(), &spec).unwrap();
        let dirs = multiplicity_preserving_tangent(&rho, &spec, &sel).unwrap();
        for d in &dirs {
            worst = worst.max(selected_eigenvalue_drift(&rho, &spec, &sel, d, 1e-5));
        }
        let mk: Vec<usize> = sel
            .indices()
            .map(|k| spec.blocks()[k].multiplicity)
            .collect();
        let mkb: Vec<usize> = sel
            .complement(&spec)
            .iter()
            .map(|&k| spec.blocks()[k].multiplicity)
            .collect();
        let ds = DfmSpec::new(mk, mkb.clone()).unwrap();
        if dirs.len() != construction_dimension(&ds) {
            mismatches.push(format!(
                "case {i}: {} directions vs construction {}",
                dirs.len(),
                construction_dimension(&ds)
            ));
        }
        if mkb.iter().all(|&m| m == 1) && dirs.len() != dfm_dimension(&ds) {
            mismatches.push(format!(
                "case {i}: {} directions vs dimension {}",
                dirs.len(),
                dfm_dimension(&ds)
            ));
        }
    }
    let r = dimension_report(&DfmSpec::new(vec![1], vec![3]).unwrap());
    let ok = worst <= 1e-6 && mismatches.is_empty() && r.theorem == 8 && r.construction == 6;
    outcome(
        ok,
        format!(
            "max drift {worst:.1e} (tol 1e-6), dimension mismatches {mismatches:?}, {{1}}|{{3}} theorem {} construction {}",
            r.theorem, r.construction
        ),
    )
}

fn end_to_end() -> Outcome {
    let start = Instant::now();
    let out = match dfm(&["verify", "two-qubit-dephasing"]) {
        Ok(o) => o,
        Err(e) => return outcome(false, e),
    };
    let (ok_time, time) = within(start.elapsed(), 60.0);
    let failed: Vec<&str> = out
        .report
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.as_str())
        .collect();
    let code = out.exit_code;
    outcome(
        code == 0 && ok_time,
        format!("exit code {code}, failing checks {failed:?}, {time}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("table reproduction", table_reproduction),
        ("reachability dimensions", reach_dimensions),
        ("degree-0 emptiness", degree0_emptiness),
        ("algebraic structure", algebraic_structure),
        ("dynamics oracles", dynamics_oracles),
        ("DFS consistency", dfs_consistency),
        ("tangent construction", tangent_construction),
        ("end-to-end verify", end_to_end),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("{tag} criterion {}: {name}: {}", i + 1, o.detail);
        failures += usize::from(!o.passed);
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
