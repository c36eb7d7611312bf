//! Randomized invariants of the state engine, channels and cluster states.
//! Eigenvalue checks go through nalgebra so they do not share code with the
//! engine under test.

use std::collections::BTreeSet;

use mbqc_noise::qstate::{embed, gates, kron};
use mbqc_noise::{
    build_cluster_state, cluster_state_from_stabilizers, stabilizers, ChannelKind, ComplexMatrix,
    DensityMatrix, Engine, GateKind, Graph, KrausChannel, NoiseAssignment, Pauli, PauliString,
};
use nalgebra::{Complex, DMatrix};
use proptest::prelude::*;

fn to_nalgebra(m: &ComplexMatrix) -> DMatrix<Complex<f64>> {
    let d = m.dim();
    DMatrix::from_fn(d, d, |r, c| {
        let z = m[(r, c)];
        Complex::new(z.re, z.im)
    })
}

fn min_eigenvalue(m: &ComplexMatrix) -> f64 {
    to_nalgebra(m)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

fn amplitudes(n: usize) -> impl Strategy<Value = Vec<num_complex::Complex<f64>>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << n).prop_filter_map("nonzero", |v| {
        let amps: Vec<_> = v
            .into_iter()
            .map(|(a, b)| num_complex::Complex::new(a, b))
            .collect();
        let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        (norm > 1e-3).then_some(amps)
    })
}

/// Mixture of two random pure states.
fn mixed_state(n: usize) -> impl Strategy<Value = DensityMatrix> {
    (amplitudes(n), amplitudes(n), 0.0f64..1.0).prop_map(|(a, b, w)| {
        let ra = DensityMatrix::from_pure(&a).unwrap();
        let rb = DensityMatrix::from_pure(&b).unwrap();
        let m = &ra.matrix().scale_real(w) + &rb.matrix().scale_real(1.0 - w);
        DensityMatrix::new(m).unwrap()
    })
}

fn small_matrix(dim: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), dim * dim)
        .prop_map(move |v| ComplexMatrix::from_f64(dim, &v).unwrap())
}

fn channel() -> impl Strategy<Value = KrausChannel> {
    (0usize..4, 0.0f64..=1.0).prop_map(|(k, p)| ChannelKind::ALL[k].at(p).unwrap())
}

fn pauli_string(n: usize) -> impl Strategy<Value = PauliString> {
    prop::collection::vec(0usize..4, n).prop_map(|v| {
        PauliString::new(
            v.into_iter()
                .map(|k| [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][k])
                .collect(),
            Default::default(),
        )
    })
}

fn graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .collect();
        let m = pairs.len();
        prop::collection::vec(any::<bool>(), m).prop_map(move |mask| {
            let edges = pairs
                .iter()
                .zip(mask)
                .filter(|(_, keep)| *keep)
                .map(|(e, _)| *e);
            Graph::new(n, edges).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kron_is_associative(a in small_matrix(2), b in small_matrix(2), c in small_matrix(2)) {
        let left = kron(&kron(&a, &b).unwrap(), &c).unwrap();
        let right = kron(&a, &kron(&b, &c).unwrap()).unwrap();
        prop_assert!(left.max_abs_diff(&right) <= 1e-12);
    }

    #[test]
    fn kron_trace_multiplies(a in small_matrix(2), b in small_matrix(4)) {
        let t = kron(&a, &b).unwrap().trace();
        prop_assert!((t - a.trace() * b.trace()).norm() <= 1e-10);
    }

    #[test]
    fn embedded_ops_on_disjoint_qubits_commute(
        a in small_matrix(2), b in small_matrix(2), qa in 0usize..4, shift in 1usize..4,
    ) {
        let qb = (qa + shift) % 4;
        let ea = embed(&a, &[qa], 4).unwrap();
        let eb = embed(&b, &[qb], 4).unwrap();
        prop_assert!(ea.commutator(&eb).max_abs() <= 1e-10);
    }

    #[test]
    fn embed_matches_kron_on_leading_qubit(a in small_matrix(2)) {
        let expected = kron(&a, &ComplexMatrix::identity(4)).unwrap();
        prop_assert!(embed(&a, &[0], 3).unwrap().max_abs_diff(&expected) <= 1e-12);
    }

    #[test]
    fn channels_are_complete(ch in channel()) {
        prop_assert!(ch.completeness_defect() <= 1e-12);
    }

    #[test]
    fn channels_preserve_trace_and_positivity(rho in mixed_state(3), ch in channel(), q in 0usize..3) {
        let out = ch.apply_to(&rho, q).unwrap();
        prop_assert!((out.trace() - 1.0).abs() <= 1e-12);
        prop_assert!(out.matrix().is_hermitian(1e-12));
        prop_assert!(min_eigenvalue(out.matrix()) >= -1e-10);
    }

    #[test]
    fn channel_matches_dense_kraus_sum(rho in mixed_state(2), ch in channel(), q in 0usize..2) {
        let fast = ch.apply_to(&rho, q).unwrap();
        let mut dense = ComplexMatrix::zeros(4);
        for k in ch.operators() {
            let e = embed(k, &[q], 2).unwrap();
            dense = &dense + &(&(&e * rho.matrix()) * &e.adjoint());
        }
        prop_assert!(fast.matrix().max_abs_diff(&dense) <= 1e-12);
    }

    #[test]
    fn partial_trace_preserves_trace_and_positivity(rho in mixed_state(3), keep in prop::sample::subsequence(vec![0usize, 1, 2], 1..=2)) {
        let r = rho.partial_trace(&keep).unwrap();
        prop_assert!((r.trace() - 1.0).abs() <= 1e-12);
        prop_assert!(min_eigenvalue(r.matrix()) >= -1e-10);
    }

    #[test]
    fn measurement_branches_sum_to_one(rho in mixed_state(3), q in 0usize..3, axis in 0usize..3) {
        let obs = [gates::pauli_x::<f64>(), gates::pauli_y(), gates::pauli_z()][axis].clone();
        let plus = rho.project_qubit(q, &gates::eigenprojector(&obs, 1.0)).unwrap();
        let minus = rho.project_qubit(q, &gates::eigenprojector(&obs, -1.0)).unwrap();
        prop_assert!((plus.probability + minus.probability - 1.0).abs() <= 1e-12);
        for s in [plus.state, minus.state].into_iter().flatten() {
            prop_assert!((s.trace() - 1.0).abs() <= 1e-10);
            prop_assert!(min_eigenvalue(s.matrix()) >= -1e-10);
        }
    }

    #[test]
    fn fast_pauli_expectation_matches_dense(rho in mixed_state(3), p in pauli_string(3)) {
        let fast = p.expectation(&rho).unwrap();
        let dense = rho.expectation(&p.matrix().unwrap()).unwrap();
        prop_assert!((fast - dense).norm() <= 1e-12);
        prop_assert!(fast.im.abs() <= 1e-12);
    }

    #[test]
    fn pauli_product_matches_matrix_product(a in pauli_string(3), b in pauli_string(3)) {
        let prod = (&a * &b).matrix::<f64>().unwrap();
        let dense = &a.matrix::<f64>().unwrap() * &b.matrix::<f64>().unwrap();
        prop_assert!(prod.max_abs_diff(&dense) <= 1e-12);
        let commute = a.commutes_with(&b);
        let comm = a.matrix::<f64>().unwrap().commutator(&b.matrix().unwrap()).max_abs();
        prop_assert_eq!(commute, comm <= 1e-12);
    }

    #[test]
    fn cluster_constructions_agree(g in graph(6)) {
        let a = build_cluster_state::<f64>(&g).unwrap();
        let b = cluster_state_from_stabilizers::<f64>(&g).unwrap();
        prop_assert!(a.matrix().max_abs_diff(b.matrix()) <= 1e-10);
        for k in stabilizers(&g) {
            prop_assert!((k.expectation(&a).unwrap().re - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn noisy_fidelity_stays_in_unit_interval(
        gate in 0usize..4, kinds in prop::collection::vec(0usize..4, 8), ps in prop::collection::vec(0.0f64..=1.0, 8),
        mask in 1u32..256,
    ) {
        let g = GateKind::all(0.6)[gate];
        let engine = Engine::default();
        let n = engine.pattern(&g).unwrap().num_qubits();
        let mut noise = NoiseAssignment::new();
        for q in (0..n).filter(|q| mask & (1 << q) != 0) {
            noise.insert(q, ChannelKind::ALL[kinds[q]].at(ps[q]).unwrap());
        }
        let f = engine.formula(&g, &noise).unwrap().value;
        prop_assert!((-1e-12..=1.0 + 1e-9).contains(&f), "{}", f);
    }
}

#[test]
fn cluster_state_is_pure_and_stabilized_for_all_small_graphs() {
    for n in 1..=6usize {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .collect();
        for mask in 0u32..(1 << pairs.len()) {
            let edges = pairs
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, e)| *e);
            let g = Graph::new(n, edges).unwrap();
            let rho = build_cluster_state::<f64>(&g).unwrap();
            for k in stabilizers(&g) {
                let e = k.expectation(&rho).unwrap();
                assert!((e.re - 1.0).abs() <= 1e-12 && e.im.abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn channels_complete_on_eleven_point_grid() {
    for kind in ChannelKind::ALL {
        for k in 0..=10 {
            let ch = kind.at(k as f64 / 10.0).unwrap();
            assert!(ch.completeness_defect() <= 1e-12, "{kind} at {k}");
        }
    }
}

#[test]
fn witness_partitions_cover_measured_neighbourhoods() {
    let engine = Engine::default();
    for g in GateKind::all(0.3) {
        let w = engine.witness(&g).unwrap();
        let covered: BTreeSet<usize> = w.support_partition().into_iter().flatten().collect();
        let support: BTreeSet<usize> = w.operator().support().into_iter().collect();
        assert_eq!(covered, support, "{g}");
    }
}
