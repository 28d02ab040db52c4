use gatebench::basis::{bit_flipped_cz, gate_basis, pauli_basis, ErrorSide};
use gatebench::epg::{epg_lower_bound, epg_min};
use gatebench::linalg::{c, CMat};
use gatebench::photonic::{lambda_for_multipair_fraction, multipair_fraction, LAMBDA_MAX};
use gatebench::process::{
    average_gate_fidelity, chi_of_unitary, coherence_matrix, mixed_process_fidelity, process_fidelity,
    to_gate_basis, to_pauli_basis, ProcessMatrix,
};
use nalgebra::{Complex, DMatrix};
use proptest::prelude::*;

const N: usize = 16;

/// Trace-one PSD χ of rank ≤ `rank`, built as G G† / Tr.
fn random_chi(raw: &[f64], rank: usize) -> ProcessMatrix {
    let g = CMat::from_fn(N, rank, |i, j| {
        let k = 2 * (i * rank + j);
        c(raw[k], raw[k + 1])
    });
    let m = &g * &g.adjoint();
    let tr = m.trace().re;
    ProcessMatrix::new(pauli_basis(2).unwrap(), m.scale_real(1.0 / tr)).unwrap()
}

fn chi_strategy() -> impl Strategy<Value = ProcessMatrix> {
    (1usize..=N).prop_flat_map(|rank| {
        prop::collection::vec(-1.0f64..1.0, 2 * N * rank).prop_map(move |raw| random_chi(&raw, rank))
    })
}

/// Eigenvalues from an independent implementation.
fn oracle_spectrum(m: &CMat) -> Vec<f64> {
    let n = m.rows();
    let a = DMatrix::from_fn(n, n, |i, j| Complex::new(m[(i, j)].re, m[(i, j)].im));
    let mut v: Vec<f64> = a.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn ideal() -> ProcessMatrix {
    chi_of_unitary(&bit_flipped_cz(), &pauli_basis(2).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn coherence_is_bounded(chi in chi_strategy()) {
        let cm = coherence_matrix(&chi);
        for i in 0..N {
            for j in 0..N {
                let x = cm.get(i, j);
                prop_assert!((0.0..=1.0 + 1e-9).contains(&x), "C[{i}][{j}] = {x}");
                prop_assert_eq!(x, cm.get(j, i));
            }
        }
    }

    #[test]
    fn spectrum_matches_oracle(chi in chi_strategy()) {
        let ours = sorted(chi.eigenvalues());
        for (a, b) in ours.iter().zip(oracle_spectrum(chi.entries())) {
            prop_assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn gate_basis_change_preserves_spectrum(chi in chi_strategy(), before in any::<bool>()) {
        let side = if before { ErrorSide::Before } else { ErrorSide::After };
        let target = gate_basis(&pauli_basis(2).unwrap(), &bit_flipped_cz(), side).unwrap();
        let moved = chi.in_basis(&target).unwrap();
        let want = oracle_spectrum(chi.entries());
        for (a, b) in oracle_spectrum(moved.entries()).iter().zip(&want) {
            prop_assert!((a - b).abs() < 1e-10);
        }
        let g = to_gate_basis(&chi, &bit_flipped_cz()).unwrap();
        let back = to_pauli_basis(&g).unwrap();
        prop_assert!((back.entries() - chi.entries()).max_abs() < 1e-12);
        prop_assert!((process_fidelity(&g, &to_gate_basis(&ideal(), &bit_flipped_cz()).unwrap()).unwrap()
            - process_fidelity(&chi, &ideal()).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn fidelity_identities(a in chi_strategy(), b in chi_strategy()) {
        let f = process_fidelity(&a, &b).unwrap();
        prop_assert!((f - process_fidelity(&b, &a).unwrap()).abs() < 1e-14);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&f));
        let fbar = average_gate_fidelity(f.clamp(0.0, 1.0), 4).unwrap();
        prop_assert!((fbar - (4.0 * f.clamp(0.0, 1.0) + 1.0) / 5.0).abs() < 1e-14);
        let u = mixed_process_fidelity(&a, &b).unwrap();
        prop_assert!(u >= f - 1e-9, "mixed {u} below overlap {f}");
        prop_assert!(u <= 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // χ = (1 − p)χ_ideal + p χ_gr  ⇒  1 − F_p ≤ ε* ≤ p, and ε* scales linearly in p
    #[test]
    fn epg_is_bounded_and_monotone(gr in chi_strategy(), p in 0.01f64..0.6) {
        let ideal = ideal();
        let full = epg_min(&gr, &ideal, 1e-10).unwrap().epsilon;
        let mut prev = 0.0;
        for t in [0.25, 0.5, 1.0] {
            let q = p * t;
            let chi = ideal.mix(&gr, q).unwrap();
            let d = epg_min(&chi, &ideal, 1e-10).unwrap();
            prop_assert!(d.epsilon <= q + 1e-7, "ε* = {} > p = {q}", d.epsilon);
            prop_assert!(d.epsilon >= epg_lower_bound(&chi, &ideal).unwrap() - 1e-9);
            prop_assert!(d.epsilon >= prev - 1e-7);
            prop_assert!((d.epsilon - q * full).abs() < 1e-5, "{} vs {}", d.epsilon, q * full);
            if let Some(g) = &d.chi_gr {
                prop_assert!(g.min_eigenvalue() > -1e-9);
            }
            prev = d.epsilon;
        }
    }

    #[test]
    fn multipair_fraction_is_monotone(a in 0.0f64..LAMBDA_MAX, b in 0.0f64..LAMBDA_MAX) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (flo, fhi) = (multipair_fraction(lo).unwrap(), multipair_fraction(hi).unwrap());
        prop_assert!(flo <= fhi);
        prop_assert!((lambda_for_multipair_fraction(fhi).unwrap() - hi).abs() < 1e-12);
    }
}
