// SPDX-License-Identifier: Apache-2.0

//! Reference checks for the two-qubit dephasing preset: the n = 4 dimension
//! table, reachability dimensions, and the algebraic structure of the
//! bilinear model.

use crate::bloch::{build_bilinear, BilinearModel, CoordinateMode};
use crate::error::Result;
use crate::geometry::{format_multiset, table_generate};
use crate::linalg::{max_abs_real, RealMatrix};
use crate::presets::two_qubit_dephasing;
use crate::reach::{degree0_check, reachability_distribution, ClosureOptions, Variant};

/// Reference rows for n = 4: (m_K, m_K̄, dimension).
pub const TABLE_N4: [(&str, &str, usize); 12] = [
    ("{1}", "{1,1,1}", 14),
    ("{1}", "{1,2}", 12),
    ("{1}", "{3}", 8),
    ("{1,1}", "{1,1}", 13),
    ("{1,1}", "{2}", 11),
    ("{2}", "{1,1}", 11),
    ("{2}", "{2}", 9),
    ("{1,1,1,1}", "∅", 12),
    ("{1,1,2}", "∅", 10),
    ("{2,2}", "∅", 8),
    ("{1,3}", "∅", 6),
    ("{4}", "∅", 0),
];

pub const STOCHASTIC_DIM: usize = 10;
pub const CONSTANT_DIM: usize = 9;
pub const RANK_TOL_SWEEP: [f64; 5] = [1e-11, 1e-10, 1e-9, 1e-8, 1e-7];
pub const STRUCTURE_TOL: f64 = 1e-12;

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct Claim {
    pub id: &'static str,
    pub statement: &'static str,
    pub expected: String,
    pub observed: String,
    pub passed: bool,
}

fn claim(
    id: &'static str,
    statement: &'static str,
    expected: String,
    observed: String,
    passed: bool,
) -> Claim {
    Claim {
        id,
        statement,
        expected,
        observed,
        passed,
    }
}

pub fn is_skew(m: &RealMatrix<f64>, tol: f64) -> bool {
    max_abs_real(&(m + m.transpose())) <= tol
}

pub fn off_diagonal_max(m: &RealMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j {
                worst = worst.max(m[(i, j)].abs());
            }
        }
    }
    worst
}

/// Largest deviation from `[B^i_α, B^j_β] = δ_ij B^i_γ` over all ordered
/// pairs of the six local controls (cyclic x, y, z on each qubit), where
/// controls are ordered `x1 y1 z1 x2 y2 z2`.
pub fn local_commutation_defect(bm: &BilinearModel<f64>) -> f64 {
    let n = bm.dim();
    let mut worst: f64 = 0.0;
    for p in 0..6 {
        for q in 0..6 {
            let (qi, ai) = (p / 3, p % 3);
            let (qj, aj) = (q / 3, q % 3);
            let comm = &bm.b[p] * &bm.b[q] - &bm.b[q] * &bm.b[p];
            let want = if qi != qj || ai == aj {
                RealMatrix::zeros(n, n)
            } else if (ai + 1) % 3 == aj {
                bm.b[3 * qi + (ai + 2) % 3].clone()
            } else {
                -bm.b[3 * qi + (ai + 1) % 3].clone()
            };
            worst = worst.max(max_abs_real(&(comm - want)));
        }
    }
    worst
}

fn table_claim() -> Result<Claim> {
    let rows = table_generate(4)?;
    let got: Vec<(String, String, usize)> = rows
        .iter()
        .map(|r| {
            (
                format_multiset(r.spec.m_k()),
                format_multiset(r.spec.m_kbar()),
                r.dimension,
            )
        })
        .collect();
    let passed = got.len() == TABLE_N4.len()
        && got
            .iter()
            .zip(TABLE_N4)
            .all(|(g, w)| g.0 == w.0 && g.1 == w.1 && g.2 == w.2);
    let dims = |v: Vec<usize>| format!("{v:?}");
    Ok(claim(
        "table-n4",
        "n = 4 enumeration reproduces the reference rows",
        dims(TABLE_N4.iter().map(|r| r.2).collect()),
        dims(got.iter().map(|r| r.2).collect()),
        passed,
    ))
}

/// Runs every check on the two-qubit dephasing preset.
pub fn verify_two_qubit_dephasing() -> Result<Vec<Claim>> {
    let model = two_qubit_dephasing::<f64>();
    let p16 = build_bilinear(&model, CoordinateMode::Paper16)?;
    let pauli = build_bilinear(&model, CoordinateMode::PauliFull)?;
    let p15 = build_bilinear(&model, CoordinateMode::Paper15)?;
    let equal = Variant::Constant(vec![1.0, 1.0]);
    let opts = ClosureOptions::default();

    let mut out = vec![table_claim()?];

    let stoch = reachability_distribution(&p16, &Variant::Stochastic, &opts)?;
    out.push(claim(
        "reach-stochastic",
        "stochastic-rate distribution dimension",
        STOCHASTIC_DIM.to_string(),
        stoch.dimension().to_string(),
        stoch.stable && stoch.dimension() == STOCHASTIC_DIM,
    ));
    let cons = reachability_distribution(&p16, &equal, &opts)?;
    out.push(claim(
        "reach-constant",
        "equal constant-rate distribution dimension",
        CONSTANT_DIM.to_string(),
        cons.dimension().to_string(),
        cons.stable && cons.dimension() == CONSTANT_DIM,
    ));

    let mut seen = Vec::new();
    for bm in [&p16, &pauli] {
        for tol in RANK_TOL_SWEEP {
            let o = ClosureOptions {
                rank_tol: tol,
                ..opts
            };
            let s = reachability_distribution(bm, &Variant::Stochastic, &o)?.dimension();
            let c = reachability_distribution(bm, &equal, &o)?.dimension();
            seen.push((s, c));
        }
    }
    let stable = seen.iter().all(|&d| d == seen[0]);
    out.push(claim(
        "reach-invariance",
        "dimensions agree across rank_tol 1e-11..1e-7 and paper_16 / pauli_full",
        "one (stochastic, constant) pair".into(),
        format!("{:?}", dedup(seen)),
        stable,
    ));

    let mut contained = true;
    for m in cons.span.basis() {
        let (_, r) = stoch.span.reduce(m)?;
        contained &= r <= stoch.span.threshold().max(1e-9 * m.norm());
    }
    out.push(claim(
        "constant-in-stochastic",
        "constant-rate span lies inside the stochastic-rate span",
        "true".into(),
        contained.to_string(),
        contained,
    ));

    let d0 = degree0_check(&p15.a, &p15.b, 1e-10)?;
    out.push(claim(
        "degree0-empty",
        "drift and controls share no real eigenvector on the traceless sector",
        "0".into(),
        d0.vectors().len().to_string(),
        d0.is_empty(),
    ));

    let comm = local_commutation_defect(&p16);
    out.push(claim(
        "b-commutation",
        "[B^i_a, B^j_b] = δ_ij B^i_c for cyclic (x, y, z)",
        format!("≤ {STRUCTURE_TOL:e}"),
        format!("{comm:.3e}"),
        comm <= STRUCTURE_TOL,
    ));

    let gdiag = p16.g.iter().map(off_diagonal_max).fold(0.0, f64::max);
    out.push(claim(
        "g-diagonal",
        "G matrices are diagonal in paper_16 coordinates",
        format!("≤ {STRUCTURE_TOL:e}"),
        format!("{gdiag:.3e}"),
        gdiag <= STRUCTURE_TOL,
    ));

    let bz = [2, 5].iter().all(|&i| is_skew(&p16.b[i], STRUCTURE_TOL));
    out.push(claim(
        "bz-skew",
        "B_z matrices are skew-symmetric in paper_16 coordinates",
        "true".into(),
        bz.to_string(),
        bz,
    ));
    let bxy = [0, 1, 3, 4]
        .iter()
        .all(|&i| !is_skew(&p16.b[i], STRUCTURE_TOL));
    out.push(claim(
        "bxy-not-skew",
        "B_x and B_y matrices are not skew-symmetric in paper_16 coordinates",
        "true".into(),
        bxy.to_string(),
        bxy,
    ));
    Ok(out)
}

fn dedup<T: PartialEq + Copy>(v: Vec<T>) -> Vec<T> {
    let mut out: Vec<T> = Vec::new();
    for x in v {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}
