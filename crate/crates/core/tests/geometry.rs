// SPDX-License-Identifier: Apache-2.0

mod common;

use common::*;
use dfm_core::claims::TABLE_N4;
use dfm_core::geometry::*;
use dfm_core::linalg::{eigh_descending, numerical_rank, DensityMatrix, Hermitian, Tolerances};
use dfm_core::spectral::{spectral_blocks, BlockSelection};
use dfm_core::{ComplexMatrix, RealMatrix};
use nalgebra::Complex;
use proptest::prelude::*;
use std::collections::BTreeSet;

fn spec(k: &[usize], kb: &[usize]) -> DfmSpec {
    DfmSpec::new(k.to_vec(), kb.to_vec()).unwrap()
}

/// All partitions of `n` as non-increasing vectors.
fn partitions(n: usize, max: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in (1..=max.min(n)).rev() {
        for mut rest in partitions(n - first, first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Independent enumeration: every split of every signature into nonempty
/// K and a K̄ other than a single simple block, counted up to reordering.
fn oracle_rows(n: usize) -> BTreeSet<(Vec<usize>, Vec<usize>)> {
    let mut out = BTreeSet::new();
    for p in partitions(n, n) {
        let d = p.len();
        for mask in 1u32..(1 << d) {
            let mut k: Vec<usize> = (0..d)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| p[i])
                .collect();
            let mut kb: Vec<usize> = (0..d)
                .filter(|i| mask & (1 << i) == 0)
                .map(|i| p[i])
                .collect();
            if kb == [1] {
                continue;
            }
            k.sort_unstable();
            kb.sort_unstable();
            out.insert((k, kb));
        }
    }
    out
}

fn sorted(v: &[usize]) -> Vec<usize> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v
}

/// Stacks real and imaginary parts of each direction as one column.
fn realify(dirs: &[Hermitian<f64>]) -> RealMatrix {
    let n = dirs.first().map_or(0, |h| h.dim());
    RealMatrix::from_fn(2 * n * n, dirs.len(), |r, c| {
        let z = dirs[c].matrix()[(r / 2 % n, r / 2 / n)];
        if r % 2 == 0 {
            z.re
        } else {
            z.im
        }
    })
}

fn signature_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..4, 1..5)
}

#[test]
fn table_n4_matches_reference() {
    let rows = table_generate(4).unwrap();
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
    let want: Vec<(String, String, usize)> = TABLE_N4
        .iter()
        .map(|r| (r.0.into(), r.1.into(), r.2))
        .collect();
    assert_eq!(got, want);
}

#[test]
fn table_enumeration_is_complete() {
    for n in 2..=6 {
        let rows = table_generate(n).unwrap();
        let got: BTreeSet<(Vec<usize>, Vec<usize>)> = rows
            .iter()
            .map(|r| (sorted(r.spec.m_k()), sorted(r.spec.m_kbar())))
            .collect();
        assert_eq!(got.len(), rows.len(), "duplicates for n = {n}");
        assert_eq!(got, oracle_rows(n), "n = {n}");
        for r in &rows {
            assert_eq!(r.spec.n(), n);
            assert_eq!(r.dimension, dfm_dimension(&r.spec));
            assert_eq!(r.construction, construction_dimension(&r.spec));
        }
    }
    assert!(table_generate(1).is_err());
}

#[test]
fn small_dimension_examples() {
    // qubit: one fixed eigenvalue pins everything but the Bloch direction
    assert_eq!(dfm_dimension(&spec(&[1, 1], &[])), 2);
    assert_eq!(dfm_dimension(&spec(&[2], &[])), 0);
    assert_eq!(dfm_dimension(&spec(&[1], &[1, 1])), 7);
    assert_eq!(dfm_dimension(&spec(&[1], &[2])), 5);
    assert_eq!(dfm_dimension(&spec(&[3], &[1])), 6);
}

#[test]
fn theorem_and_construction_can_differ() {
    let r = dimension_report(&spec(&[1], &[3]));
    assert_eq!((r.theorem, r.construction), (8, 6));
    assert!(!r.agree());
    assert!(dimension_report(&spec(&[1], &[1, 1, 1])).agree());
}

#[test]
fn invalid_specs_are_rejected() {
    assert!(DfmSpec::new(vec![], vec![2]).is_err());
    assert!(DfmSpec::new(vec![1, 0], vec![]).is_err());
    assert!(DfmSpec::with_dim(vec![1], vec![2], 4).is_err());
    assert!(MultiplicitySignature::new(vec![]).is_err());
}

#[test]
fn tangent_rejects_mismatched_base_point() {
    let a = diag_density(&[0.5, 0.3, 0.2]);
    let b = diag_density(&[0.2, 0.3, 0.5]);
    let s = spectral_blocks(&a, 1e-8).unwrap();
    let sel = BlockSelection::new([0], &s).unwrap();
    // same spectrum, different eigenvectors
    let swapped = ComplexMatrix::from_fn(3, 3, |i, j| {
        if i + j == 2 {
            Complex::new(1.0, 0.0)
        } else {
            Complex::new(0.0, 0.0)
        }
    });
    let c = DensityMatrix::new(&swapped * a.matrix() * &swapped, &Tolerances::default()).unwrap();
    assert_eq!(c.matrix(), b.matrix());
    assert!(matches!(
        multiplicity_preserving_tangent(&c, &s, &sel),
        Err(dfm_core::Error::IncompatibleBasePoint(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn stratum_exceeds_leaf_by_free_eigenvalues(mu in signature_strategy()) {
        let s = MultiplicitySignature::new(mu.clone()).unwrap();
        prop_assert_eq!(stratum_dimension(&s) - isospectral_leaf_dimension(&s), mu.len() - 1);
        prop_assert_eq!(stratum_codimension(&s) + stratum_dimension(&s), s.n() * s.n());
    }

    #[test]
    fn dimension_ignores_block_order(k in signature_strategy(), kb in prop::collection::vec(1usize..4, 0..4), rot in 0usize..4) {
        let base = dfm_dimension(&spec(&k, &kb));
        let mut k2 = k.clone();
        k2.rotate_left(rot % k.len());
        let mut kb2 = kb.clone();
        kb2.reverse();
        prop_assert_eq!(dfm_dimension(&spec(&k2, &kb2)), base);
        prop_assert_eq!(construction_dimension(&spec(&k2, &kb2)), construction_dimension(&spec(&k, &kb)));
    }

    #[test]
    fn simple_free_blocks_agree_with_construction(k in signature_strategy(), ones in 0usize..4) {
        let r = dimension_report(&spec(&k, &vec![1; ones]));
        prop_assert!(r.agree(), "{:?}", r);
    }

    #[test]
    fn fixing_everything_gives_leaf(k in signature_strategy()) {
        let s = spec(&k, &[]);
        prop_assert_eq!(dfm_dimension(&s), isospectral_leaf_dimension(&s.signature()));
        prop_assert_eq!(construction_dimension(&s), dfm_dimension(&s));
    }
}

/// Base point with signature (1, 2, 1).
fn base_point(u: &ComplexMatrix) -> DensityMatrix<f64> {
    let d = diag_density(&[0.45, 0.2, 0.2, 0.15]);
    DensityMatrix::new(u * d.matrix() * u.adjoint(), &Tolerances::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tangent_directions_hold_selected_eigenvalues(u in unitary(4), pick in 0usize..3) {
        let rho = base_point(&u);
        let s = spectral_blocks(&rho, 1e-8).unwrap();
        prop_assert_eq!(s.signature(), vec![1, 2, 1]);
        let sel = BlockSelection::new([pick], &s).unwrap();
        let dirs = multiplicity_preserving_tangent(&rho, &s, &sel).unwrap();
        let mut k: Vec<usize> = vec![s.blocks()[pick].multiplicity];
        let kb: Vec<usize> = sel.complement(&s).iter().map(|&i| s.blocks()[i].multiplicity).collect();
        k.sort_unstable();
        prop_assert_eq!(dirs.len(), construction_dimension(&spec(&k, &kb)));
        prop_assert_eq!(numerical_rank(&realify(&dirs), 1e-10), dirs.len());
        for d in &dirs {
            prop_assert!(max_abs(&(d.matrix() - d.matrix().adjoint())) <= 1e-12);
            prop_assert!(d.matrix().trace().norm() <= 1e-12);
            let drift = dfm_core::geometry::selected_eigenvalue_drift(&rho, &s, &sel, d, 1e-5);
            prop_assert!(drift <= 1e-6, "drift {drift:e}");
            // free blocks move rigidly: the degenerate pair stays degenerate to first order
            let step = rho.matrix() + d.matrix().map(|z| z * 1e-5);
            let (vals, _) = eigh_descending(&step);
            if pick != 1 {
                prop_assert!((vals[1] - vals[2]).abs() <= 1e-8);
            }
        }
    }
}
