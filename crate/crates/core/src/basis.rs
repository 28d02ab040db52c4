//! Operator bases for process matrices.

use crate::error::{Error, Result};
use crate::linalg::{c, CMat, I, ONE, ZERO};

/// Which side of the ideal gate the Pauli error sits on in a gate basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ErrorSide {
    /// `B_k = A_k · U`: error applied after the gate.
    #[default]
    After,
    /// `B_k = U · A_k`: error applied before the gate.
    Before,
}

#[derive(Clone, Debug, PartialEq)]
pub enum BasisLabel {
    Pauli,
    Gate { unitary: CMat, side: ErrorSide },
    Custom,
}

/// An ordered Hilbert-Schmidt-orthonormal set of `d²` operators on a `d`-dimensional space.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorBasis {
    dim: usize,
    elements: Vec<CMat>,
    label: BasisLabel,
}

pub fn pauli_matrix(index: usize) -> CMat {
    match index {
        0 => CMat::identity(2),
        1 => CMat::from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]]),
        2 => CMat::from_rows(&[vec![ZERO, -I], vec![I, ZERO]]),
        3 => CMat::from_rows(&[vec![ONE, ZERO], vec![ZERO, -ONE]]),
        _ => panic!("pauli index {index} out of range"),
    }
}

const PAULI_CHARS: [char; 4] = ['I', 'X', 'Y', 'Z'];

/// Normalized Pauli strings `P/√d` in lexicographic order (`II, IX, IY, IZ, XI, …`).
pub fn pauli_basis(num_qubits: usize) -> Result<OperatorBasis> {
    if !(1..=2).contains(&num_qubits) {
        return Err(Error::UnsupportedQubits(num_qubits));
    }
    let dim = 1usize << num_qubits;
    let norm = 1.0 / (dim as f64).sqrt();
    let count = dim * dim;
    let elements = (0..count)
        .map(|k| {
            let mut m = CMat::identity(1);
            for q in (0..num_qubits).rev() {
                let digit = (k >> (2 * q)) & 3;
                m = m.kron(&pauli_matrix(digit));
            }
            m.scale_real(norm)
        })
        .collect();
    Ok(OperatorBasis {
        dim,
        elements,
        label: BasisLabel::Pauli,
    })
}

/// Pauli basis composed with `unitary` on the chosen side.
pub fn gate_basis(pauli: &OperatorBasis, unitary: &CMat, side: ErrorSide) -> Result<OperatorBasis> {
    if pauli.label != BasisLabel::Pauli {
        return Err(Error::BasisMismatch("gate basis must be built from the Pauli basis".into()));
    }
    check_unitary(unitary, pauli.dim)?;
    let elements = pauli
        .elements
        .iter()
        .map(|a| match side {
            ErrorSide::After => a * unitary,
            ErrorSide::Before => unitary * a,
        })
        .collect();
    Ok(OperatorBasis {
        dim: pauli.dim,
        elements,
        label: BasisLabel::Gate {
            unitary: unitary.clone(),
            side,
        },
    })
}

pub(crate) fn check_unitary(u: &CMat, dim: usize) -> Result<()> {
    if u.rows() != dim || u.cols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: u.rows(),
        });
    }
    let dev = u.unitary_deviation();
    if dev > 1e-9 {
        return Err(Error::NotUnitary(dev));
    }
    Ok(())
}

impl OperatorBasis {
    /// Wraps arbitrary elements, checking count, shape and orthonormality.
    pub fn custom(elements: Vec<CMat>) -> Result<Self> {
        let n = elements.len();
        let dim = (n as f64).sqrt().round() as usize;
        if dim * dim != n || dim == 0 {
            return Err(Error::Invalid(format!("{n} elements is not a perfect square")));
        }
        if let Some(bad) = elements.iter().find(|e| e.rows() != dim || e.cols() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.rows(),
            });
        }
        let basis = OperatorBasis {
            dim,
            elements,
            label: BasisLabel::Custom,
        };
        let err = basis.orthonormality_error();
        if err > 1e-9 {
            return Err(Error::Invalid(format!("basis not orthonormal (error {err:.3e})")));
        }
        Ok(basis)
    }

    pub fn dim_hilbert(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[CMat] {
        &self.elements
    }

    pub fn element(&self, k: usize) -> &CMat {
        &self.elements[k]
    }

    pub fn label(&self) -> &BasisLabel {
        &self.label
    }

    pub fn num_qubits(&self) -> usize {
        self.dim.trailing_zeros() as usize
    }

    /// `max_kl |Tr(A_k† A_l) − δ_kl|`.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, a) in self.elements.iter().enumerate() {
            for (l, b) in self.elements.iter().enumerate() {
                let target = if k == l { ONE } else { ZERO };
                worst = worst.max((a.hs_inner(b) - target).norm());
            }
        }
        worst
    }

    /// Coefficients `v_k = Tr(A_k† X)` of `X` in this basis.
    pub fn coefficients(&self, x: &CMat) -> Vec<crate::linalg::C64> {
        self.elements.iter().map(|a| a.hs_inner(x)).collect()
    }

    /// Unitary change-of-basis matrix `W_mk = Tr(B_m† A_k)` from `self` (A) to `target` (B).
    pub fn transition_to(&self, target: &OperatorBasis) -> Result<CMat> {
        if self.dim != target.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: target.dim,
            });
        }
        let n = self.len();
        Ok(CMat::from_fn(n, n, |m, k| target.elements[m].hs_inner(&self.elements[k])))
    }

    /// Labels such as `IZ`, or `IZ'` for gate-basis elements.
    pub fn element_labels(&self) -> Vec<String> {
        let nq = self.num_qubits();
        let suffix = match self.label {
            BasisLabel::Pauli => "",
            BasisLabel::Gate { .. } => "'",
            BasisLabel::Custom => return (0..self.len()).map(|k| format!("B{k}")).collect(),
        };
        (0..self.len())
            .map(|k| {
                let mut s: String = (0..nq)
                    .rev()
                    .map(|q| PAULI_CHARS[(k >> (2 * q)) & 3])
                    .collect();
                s.push_str(suffix);
                s
            })
            .collect()
    }
}

/// `diag(1,1,1,−1)`.
pub fn cz() -> CMat {
    CMat::from_real_diag(&[1.0, 1.0, 1.0, -1.0])
}

/// `diag(1,−1,−1,−1)`: CZ conjugated by `X⊗X` up to a global phase.
pub fn bit_flipped_cz() -> CMat {
    CMat::from_real_diag(&[1.0, -1.0, -1.0, -1.0])
}

/// `Rz(a) Ry(b) Rz(c)`.
pub fn euler_zyz(a: f64, b: f64, cc: f64) -> CMat {
    let rz = |t: f64| CMat::from_diag(&[c(0.0, -t / 2.0).exp(), c(0.0, t / 2.0).exp()]);
    let (s, co) = (b / 2.0).sin_cos();
    let ry = CMat::from_rows(&[vec![c(co, 0.0), c(-s, 0.0)], vec![c(s, 0.0), c(co, 0.0)]]);
    &(&rz(a) * &ry) * &rz(cc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_qubit_basis() {
        let b = pauli_basis(1).unwrap();
        assert_eq!(b.len(), 4);
        let h = 1.0 / 2f64.sqrt();
        for k in 0..4 {
            assert!((b.element(k) - &pauli_matrix(k).scale_real(h)).max_abs() < 1e-15);
        }
        assert!(b.orthonormality_error() < 1e-14);
    }

    #[test]
    fn two_qubit_ordering() {
        let b = pauli_basis(2).unwrap();
        assert_eq!(b.len(), 16);
        assert!((b.element(0) - &CMat::identity(4).scale_real(0.5)).max_abs() < 1e-15);
        // index 3 = IZ, index 12 = ZI
        let iz = pauli_matrix(0).kron(&pauli_matrix(3)).scale_real(0.5);
        let zi = pauli_matrix(3).kron(&pauli_matrix(0)).scale_real(0.5);
        assert!((b.element(3) - &iz).max_abs() < 1e-15);
        assert!((b.element(12) - &zi).max_abs() < 1e-15);
        assert_eq!(b.element_labels()[6], "XY");
        assert!(b.orthonormality_error() < 1e-14);
    }

    #[test]
    fn unsupported_qubits() {
        assert!(matches!(pauli_basis(3), Err(Error::UnsupportedQubits(3))));
        assert!(matches!(pauli_basis(0), Err(Error::UnsupportedQubits(0))));
    }

    #[test]
    fn gate_basis_orthonormal_and_labelled() {
        let p = pauli_basis(2).unwrap();
        for side in [ErrorSide::After, ErrorSide::Before] {
            let g = gate_basis(&p, &cz(), side).unwrap();
            assert!(g.orthonormality_error() < 1e-14);
            assert_eq!(g.element_labels()[0], "II'");
        }
        assert!(gate_basis(&p, &CMat::from_real_diag(&[1.0, 1.0, 1.0, 2.0]), ErrorSide::After).is_err());
    }

    #[test]
    fn euler_is_unitary() {
        let u = euler_zyz(0.3, 1.1, -2.0);
        assert!(u.unitary_deviation() < 1e-14);
        assert!((&euler_zyz(0.0, 0.0, 0.0) - &CMat::identity(2)).max_abs() < 1e-15);
    }
}
