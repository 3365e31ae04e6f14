// SPDX-License-Identifier: Apache-2.0

mod common;

use common::*;
use dfm_core::bloch::{build_bilinear, coherence_map, BilinearModel, CoordinateMode};
use dfm_core::geometry::multiplicity_preserving_tangent;
use dfm_core::linalg::{column_basis, numerical_rank, vectorize, Hermitian};
use dfm_core::lindblad::{Control, Jump, LindbladModel, Signal};
use dfm_core::presets::two_qubit_dephasing;
use dfm_core::reach::*;
use dfm_core::spectral::{spectral_blocks, BlockSelection};
use dfm_core::RealMatrix;
use nalgebra::DVector;
use proptest::prelude::*;

fn model(n: usize, h0: &[f64], ctl: &[f64], jump: &[f64]) -> LindbladModel<f64> {
    LindbladModel::new(
        Hermitian::from_hermitian_part(&complex_matrix(n, h0)),
        vec![Control {
            label: "u".into(),
            op: Hermitian::from_hermitian_part(&complex_matrix(n, ctl)),
        }],
        vec![Jump {
            label: "f".into(),
            op: complex_matrix(n, jump),
            rate: Signal::Constant(1.0),
        }],
    )
    .unwrap()
}

fn stack(ms: &[RealMatrix]) -> RealMatrix {
    let cols: Vec<DVector<f64>> = ms.iter().map(vectorize).collect();
    RealMatrix::from_columns(&cols)
}

/// Orthogonal projector onto the complement of the controls' span.
fn control_complement(bm: &BilinearModel<f64>) -> RealMatrix {
    let nn = bm.dim() * bm.dim();
    let q = column_basis(&stack(&bm.b), 1e-10);
    RealMatrix::identity(nn, nn) - &q * q.transpose()
}

/// Closure by brute force: bracket every current basis column with every
/// partner, drop control directions by projection, take a fresh SVD basis,
/// repeat until the rank stops growing. Returns (dim V, dim(V + span B)).
fn oracle_closure(
    bm: &BilinearModel<f64>,
    drift: &RealMatrix,
    seeds: &[RealMatrix],
) -> (usize, usize) {
    let n = bm.dim();
    let perp = control_complement(bm);
    let mut cols: Vec<DVector<f64>> = seeds.iter().map(vectorize).collect();
    let mut basis = column_basis(&RealMatrix::from_columns(&cols), 1e-10);
    loop {
        let mut next = cols.clone();
        for j in 0..basis.ncols() {
            let w = RealMatrix::from_column_slice(n, n, basis.column(j).as_slice());
            for p in std::iter::once(drift).chain(bm.b.iter()) {
                next.push(&perp * vectorize(&(&w * p - p * &w)));
            }
        }
        let grown = column_basis(&RealMatrix::from_columns(&next), 1e-10);
        if grown.ncols() == basis.ncols() {
            let mut all: Vec<DVector<f64>> = (0..grown.ncols())
                .map(|j| grown.column(j).into_owned())
                .collect();
            all.extend(bm.b.iter().map(vectorize));
            return (
                grown.ncols(),
                numerical_rank(&RealMatrix::from_columns(&all), 1e-10),
            );
        }
        basis = grown;
        cols = (0..basis.ncols())
            .map(|j| basis.column(j).into_owned())
            .collect();
    }
}

fn with_controls(span: &MatrixSpan<f64>, bm: &BilinearModel<f64>) -> usize {
    let mut all: Vec<RealMatrix> = span.basis().to_vec();
    all.extend(bm.b.iter().cloned());
    numerical_rank(&stack(&all), 1e-10)
}

fn check_against_oracle(
    bm: &BilinearModel<f64>,
    variant: &Variant<f64>,
) -> Result<(), TestCaseError> {
    let rep = reachability_distribution(bm, variant, &ClosureOptions::default()).unwrap();
    prop_assert!(rep.stable);
    let (drift, seeds) = match variant {
        Variant::Stochastic => (bm.a.clone(), bm.g.clone()),
        Variant::Constant(r) => {
            let sum =
                bm.g.iter()
                    .zip(r)
                    .fold(RealMatrix::zeros(bm.dim(), bm.dim()), |a, (g, &x)| {
                        a + g * x
                    });
            (&bm.a + &sum, vec![sum])
        }
    };
    let (dim, joint) = oracle_closure(bm, &drift, &seeds);
    prop_assert_eq!(rep.dimension(), dim);
    prop_assert_eq!(with_controls(&rep.span, bm), joint);
    prop_assert!(closure_defect(&rep.span, bm, variant).unwrap() <= 1e-8);
    for s in &seeds {
        prop_assert!(rep.span.contains(s).unwrap());
    }
    Ok(())
}

#[test]
fn preset_closure_matches_oracle() {
    let bm = build_bilinear(&two_qubit_dephasing::<f64>(), CoordinateMode::Paper16).unwrap();
    for variant in [Variant::Stochastic, Variant::Constant(vec![1.0, 1.0])] {
        check_against_oracle(&bm, &variant).unwrap();
    }
}

#[test]
fn preset_provenance_is_recorded() {
    let bm = build_bilinear(&two_qubit_dephasing::<f64>(), CoordinateMode::Paper16).unwrap();
    let rep =
        reachability_distribution(&bm, &Variant::Stochastic, &ClosureOptions::default()).unwrap();
    assert!(matches!(rep.generators[0].origin, Origin::Seed(0)));
    assert!(matches!(rep.generators[1].origin, Origin::Seed(1)));
    for (i, g) in rep.generators.iter().enumerate() {
        if let Origin::Bracket { parent, .. } = g.origin {
            assert!(parent < i);
            assert_eq!(g.round, rep.generators[parent].round + 1);
        }
    }
    let added: usize = rep.log.iter().map(|l| l.added.len()).sum();
    assert_eq!(added + 2, rep.dimension());
    assert!(!rep.rank_warning);
    assert_eq!(rep.span.certificate().len(), rep.dimension());
}

#[test]
fn options_and_extensions_are_validated() {
    let bm = build_bilinear(&two_qubit_dephasing::<f64>(), CoordinateMode::Paper16).unwrap();
    let bad = ClosureOptions {
        max_iter: 0,
        ..Default::default()
    };
    assert!(reachability_distribution(&bm, &Variant::Stochastic, &bad).is_err());
    assert!(matches!(
        reachability_distribution(
            &bm,
            &Variant::Constant(vec![1.0, -1.0]),
            &ClosureOptions::default()
        ),
        Err(dfm_core::Error::NegativeRate { .. })
    ));
    assert!(reachability_distribution(
        &bm,
        &Variant::Constant(vec![1.0]),
        &ClosureOptions::default()
    )
    .is_err());
    let quad = PolynomialField {
        degree: 2,
        terms: vec![RealMatrix::zeros(16, 16)],
    };
    assert!(matches!(
        reachability_distribution_with(
            &bm,
            &Variant::Stochastic,
            &[quad],
            &ClosureOptions::default()
        ),
        Err(dfm_core::Error::UnsupportedDegree(2))
    ));
    // a linear extra partner that is already a control changes nothing
    let lin = PolynomialField {
        degree: 1,
        terms: vec![bm.b[0].clone()],
    };
    let a = reachability_distribution_with(
        &bm,
        &Variant::Stochastic,
        &[lin],
        &ClosureOptions::default(),
    )
    .unwrap();
    let b =
        reachability_distribution(&bm, &Variant::Stochastic, &ClosureOptions::default()).unwrap();
    assert_eq!(a.dimension(), b.dimension());
}

#[test]
fn truncated_closure_is_flagged_unstable() {
    let bm = build_bilinear(&two_qubit_dephasing::<f64>(), CoordinateMode::Paper16).unwrap();
    let opts = ClosureOptions {
        max_iter: 1,
        ..Default::default()
    };
    let rep = reachability_distribution(&bm, &Variant::Stochastic, &opts).unwrap();
    assert!(!rep.stable);
}

#[test]
fn span_membership() {
    let e = |i: usize, j: usize| {
        let mut m = RealMatrix::zeros(3, 3);
        m[(i, j)] = 1.0;
        m
    };
    let mut span = MatrixSpan::new(3, 1e-9);
    assert!(span.insert(&e(0, 1)).unwrap());
    assert!(span.insert(&(e(0, 1) + e(1, 0))).unwrap());
    assert!(!span.insert(&(e(1, 0) * 3.0)).unwrap());
    assert!(span.contains(&(e(1, 0) + e(0, 1) * 1e-3)).unwrap());
    assert!(!span.contains(&e(2, 2)).unwrap());
    let (r, norm) = span_reduce(&(e(2, 2) + e(0, 1)), &span).unwrap();
    assert!((norm - 1.0).abs() < 1e-14);
    assert!((r - e(2, 2)).norm() < 1e-14);
    assert!(span.reduce(&RealMatrix::zeros(2, 2)).is_err());
    assert_eq!(span.certificate().len(), 2);
}

#[test]
fn degree0_finds_shared_eigenvector() {
    // e0 is an eigenvector of both; the rest is generic
    let a = RealMatrix::from_row_slice(3, 3, &[2.0, 0.3, -0.1, 0.0, 0.5, 1.0, 0.0, -1.0, 0.4]);
    let b = RealMatrix::from_row_slice(3, 3, &[-1.0, 0.7, 0.2, 0.0, 0.1, 0.9, 0.0, 0.6, -0.3]);
    let rep = degree0_check(&a, &[b.clone()], 1e-10).unwrap();
    let v = rep.vectors();
    assert_eq!(v.len(), 1);
    assert!((v[0][0].abs() - 1.0).abs() < 1e-10);
    assert!(!rep.full_space);
    let generic = RealMatrix::from_row_slice(3, 3, &[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, -0.9]);
    assert!(degree0_check(&a, &[generic], 1e-10).unwrap().is_empty());
    let z = RealMatrix::zeros(3, 3);
    assert!(degree0_check(&z, &[z.clone()], 1e-10).unwrap().full_space);
}

#[test]
fn containment_examples() {
    let bm = build_bilinear(&two_qubit_dephasing::<f64>(), CoordinateMode::Paper16).unwrap();
    let rep =
        reachability_distribution(&bm, &Variant::Stochastic, &ClosureOptions::default()).unwrap();
    let rho = diag_density(&[0.4, 0.3, 0.2, 0.1]);
    let x0 = coherence_map(rho.hermitian(), CoordinateMode::Paper16).unwrap();

    // every traceless Hermitian direction
    let full: Vec<Hermitian<f64>> =
        dfm_core::linalg::pauli_product_basis::<f64>(2).unwrap()[1..].to_vec();
    let c = tangent_containment(&rep.span, &x0, &full, CoordinateMode::Paper16).unwrap();
    assert_eq!(c.tangent_dim, 15);
    assert!(c.contained);
    assert_eq!(c.intersection_dim, c.distribution_dim);

    let zero = DVector::zeros(16);
    let c0 = tangent_containment(&rep.span, &zero, &full, CoordinateMode::Paper16).unwrap();
    assert_eq!(c0.distribution_dim, 0);
    assert_eq!(c0.intersection_dim, 0);

    // diagonal base point, largest eigenvalue held fixed
    let spec = spectral_blocks(&rho, 1e-8).unwrap();
    let sel = BlockSelection::new([0], &spec).unwrap();
    let tangent = multiplicity_preserving_tangent(&rho, &spec, &sel).unwrap();
    let cd = tangent_containment(&rep.span, &x0, &tangent, CoordinateMode::Paper16).unwrap();
    let pointwise = pointwise_dimension(&evaluate_distribution(&rep.span, &x0).unwrap(), 1e-9);
    assert_eq!(cd.distribution_dim, pointwise);
    assert_eq!(cd.tangent_dim, tangent.len());
    assert!(cd.intersection_dim <= cd.distribution_dim.min(cd.tangent_dim));
    assert_eq!(
        cd.principal_angles.len(),
        cd.distribution_dim.min(cd.tangent_dim)
    );
    assert!(!cd.to_string().is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn random_qubit_closures_match_oracle(h0 in raw(2), ctl in raw(2), jump in raw(2), r in 0.1..2.0f64) {
        let bm = build_bilinear(&model(2, &h0, &ctl, &jump), CoordinateMode::Paper16).unwrap();
        check_against_oracle(&bm, &Variant::Stochastic)?;
        check_against_oracle(&bm, &Variant::Constant(vec![r]))?;
    }

    #[test]
    fn random_qutrit_closures_match_oracle(h0 in raw(3), ctl in raw(3), jump in raw(3)) {
        let bm = build_bilinear(&model(3, &h0, &ctl, &jump), CoordinateMode::Paper16).unwrap();
        check_against_oracle(&bm, &Variant::Stochastic)?;
    }

    #[test]
    fn constant_span_lies_in_stochastic_span(h0 in raw(3), ctl in raw(3), jump in raw(3), r in 0.1..2.0f64) {
        let bm = build_bilinear(&model(3, &h0, &ctl, &jump), CoordinateMode::Paper16).unwrap();
        let opts = ClosureOptions::default();
        let s = reachability_distribution(&bm, &Variant::Stochastic, &opts).unwrap();
        let c = reachability_distribution(&bm, &Variant::Constant(vec![r]), &opts).unwrap();
        let mut joint: Vec<RealMatrix> = s.span.basis().to_vec();
        joint.extend(bm.b.iter().cloned());
        let base = numerical_rank(&stack(&joint), 1e-9);
        for m in c.span.basis() {
            let mut with = joint.clone();
            with.push(m.clone());
            prop_assert_eq!(numerical_rank(&stack(&with), 1e-9), base);
        }
    }

    #[test]
    fn dimension_is_basis_independent(h0 in raw(2), ctl in raw(2), jump in raw(2), t in prop::collection::vec(-0.3..0.3f64, 16)) {
        let bm = build_bilinear(&model(2, &h0, &ctl, &jump), CoordinateMode::Paper16).unwrap();
        let s = RealMatrix::identity(4, 4) + RealMatrix::from_column_slice(4, 4, &t);
        let s_inv = s.clone().try_inverse().unwrap();
        let moved = bm.conjugated(&s, &s_inv, CoordinateMode::Paper16);
        let opts = ClosureOptions::default();
        for v in [Variant::Stochastic, Variant::Constant(vec![0.7])] {
            let a = reachability_distribution(&bm, &v, &opts).unwrap();
            let b = reachability_distribution(&moved, &v, &opts).unwrap();
            prop_assert_eq!(with_controls(&a.span, &bm), with_controls(&b.span, &moved));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn preset_dimension_survives_similarity(t in prop::collection::vec(-0.1..0.1f64, 256)) {
        let bm = build_bilinear(&two_qubit_dephasing::<f64>(), CoordinateMode::Paper16).unwrap();
        let s = RealMatrix::identity(16, 16) + RealMatrix::from_column_slice(16, 16, &t);
        let s_inv = s.clone().try_inverse().unwrap();
        let moved = bm.conjugated(&s, &s_inv, CoordinateMode::Paper16);
        let opts = ClosureOptions::default();
        for v in [Variant::Stochastic, Variant::Constant(vec![1.0, 1.0])] {
            let a = reachability_distribution(&bm, &v, &opts).unwrap();
            let b = reachability_distribution(&moved, &v, &opts).unwrap();
            prop_assert_eq!(with_controls(&a.span, &bm), with_controls(&b.span, &moved));
        }
    }
}
