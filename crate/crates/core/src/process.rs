//! Process (χ) matrices and the metrics defined on them.
//!
//! Normalization: with basis elements `A_k` orthonormal under the
//! Hilbert-Schmidt product, a channel acts as `Λ(ρ) = d Σ_kl χ_kl A_k ρ A_l†`.
//! Trace preservation then means `d Σ_kl χ_kl A_l† A_k = 1` and `Tr χ = 1`,
//! and the process fidelity with a rank-1 ideal is `Tr(χ_ideal χ)`.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::Value;

use crate::basis::{check_unitary, gate_basis, pauli_basis, BasisLabel, ErrorSide, OperatorBasis};
use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_eig, CMat, Eigh, C64, ZERO};

pub const DEFAULT_PSD_TOL: f64 = 1e-9;
pub const DEFAULT_HERM_TOL: f64 = 1e-9;
/// Coherence entries whose denominator `χ_ii χ_jj` is at or below this are 0.
pub const COHERENCE_DENOM_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct ProcessMatrix {
    basis: OperatorBasis,
    entries: CMat,
    psd_tol: f64,
    herm_tol: f64,
}

impl ProcessMatrix {
    /// Builds a physical process matrix: Hermitian, unit trace and PSD within the default tolerances.
    pub fn new(basis: OperatorBasis, entries: CMat) -> Result<Self> {
        Self::with_tolerances(basis, entries, DEFAULT_PSD_TOL, DEFAULT_HERM_TOL)
    }

    pub fn with_tolerances(basis: OperatorBasis, entries: CMat, psd_tol: f64, herm_tol: f64) -> Result<Self> {
        let chi = Self::build(basis, entries, psd_tol, herm_tol)?;
        chi.check_physical()?;
        Ok(chi)
    }

    /// Builds a Hermitian χ without the trace and positivity checks
    /// (linear-inversion output may legitimately violate them).
    pub fn hermitian(basis: OperatorBasis, entries: CMat) -> Result<Self> {
        Self::build(basis, entries, DEFAULT_PSD_TOL, DEFAULT_HERM_TOL)
    }

    fn build(basis: OperatorBasis, entries: CMat, psd_tol: f64, herm_tol: f64) -> Result<Self> {
        let n = basis.len();
        if entries.rows() != n || entries.cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: entries.rows().max(entries.cols()),
            });
        }
        let dev = entries.hermitian_deviation();
        if dev > herm_tol {
            return Err(Error::NotHermitian(dev));
        }
        Ok(ProcessMatrix {
            basis,
            entries: entries.hermitian_part(),
            psd_tol,
            herm_tol,
        })
    }

    pub fn check_physical(&self) -> Result<()> {
        let tr = self.entries.trace().re;
        if (tr - 1.0).abs() > self.herm_tol {
            return Err(Error::TraceNotUnit(tr));
        }
        let min = self.min_eigenvalue();
        if min < -self.psd_tol {
            return Err(Error::NotPsd(min));
        }
        Ok(())
    }

    pub fn is_physical(&self) -> bool {
        self.check_physical().is_ok()
    }

    pub fn basis(&self) -> &OperatorBasis {
        &self.basis
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn entry(&self, k: usize, l: usize) -> C64 {
        self.entries[(k, l)]
    }

    /// Number of basis elements, `d²`.
    pub fn size(&self) -> usize {
        self.basis.len()
    }

    pub fn psd_tol(&self) -> f64 {
        self.psd_tol
    }

    pub fn herm_tol(&self) -> f64 {
        self.herm_tol
    }

    pub fn eig(&self) -> Eigh {
        hermitian_eig(&self.entries).expect("entries are Hermitian by construction")
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eig().values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eig().min()
    }

    /// Second-largest eigenvalue below this counts as rank one.
    pub fn is_rank_one(&self, tol: f64) -> bool {
        let v = self.eigenvalues();
        v.len() < 2 || v[v.len() - 2].abs() <= tol
    }

    /// `d Σ_kl χ_kl A_l† A_k`, the identity for a trace-preserving map.
    pub fn tp_operator(&self) -> CMat {
        let d = self.basis.dim_hilbert();
        let el = self.basis.elements();
        let mut f = CMat::zeros(d, d);
        for (k, ak) in el.iter().enumerate() {
            for (l, al) in el.iter().enumerate() {
                let w = self.entries[(k, l)];
                if w == ZERO {
                    continue;
                }
                f = &f + &(&al.adjoint() * ak).scale(w);
            }
        }
        f.scale_real(d as f64)
    }

    /// `max |d Σ χ_kl A_l†A_k − 1|`.
    pub fn trace_preservation_error(&self) -> f64 {
        let f = self.tp_operator();
        (&f - &CMat::identity(f.rows())).max_abs()
    }

    /// `Λ(ρ)`.
    pub fn apply(&self, rho: &CMat) -> CMat {
        let d = self.basis.dim_hilbert();
        let el = self.basis.elements();
        let left: Vec<CMat> = el.iter().map(|a| a * rho).collect();
        let mut out = CMat::zeros(d, d);
        for (k, lk) in left.iter().enumerate() {
            for (l, al) in el.iter().enumerate() {
                let w = self.entries[(k, l)];
                if w == ZERO {
                    continue;
                }
                out = &out + &(lk * &al.adjoint()).scale(w);
            }
        }
        out.scale_real(d as f64)
    }

    /// Re-expresses χ in another orthonormal basis of the same space.
    pub fn in_basis(&self, target: &OperatorBasis) -> Result<ProcessMatrix> {
        let w = self.basis.transition_to(target)?;
        Ok(ProcessMatrix {
            basis: target.clone(),
            entries: self.entries.conjugate_by(&w).hermitian_part(),
            psd_tol: self.psd_tol,
            herm_tol: self.herm_tol,
        })
    }

    /// `(1 − w)·self + w·other`.
    pub fn mix(&self, other: &ProcessMatrix, w: f64) -> Result<ProcessMatrix> {
        self.same_basis(other)?;
        Ok(ProcessMatrix {
            basis: self.basis.clone(),
            entries: &self.entries.scale_real(1.0 - w) + &other.entries.scale_real(w),
            psd_tol: self.psd_tol,
            herm_tol: self.herm_tol,
        })
    }

    pub(crate) fn with_entries(&self, entries: CMat) -> ProcessMatrix {
        ProcessMatrix {
            basis: self.basis.clone(),
            entries: entries.hermitian_part(),
            psd_tol: self.psd_tol,
            herm_tol: self.herm_tol,
        }
    }

    pub(crate) fn same_basis(&self, other: &ProcessMatrix) -> Result<()> {
        if self.size() != other.size() {
            return Err(Error::DimensionMismatch {
                expected: self.size(),
                got: other.size(),
            });
        }
        if self.basis.label() != other.basis.label() {
            return Err(Error::BasisMismatch("process matrices are expressed in different bases".into()));
        }
        Ok(())
    }
}

/// Rank-1 χ of a unitary: `χ = v v†` with `v_k = Tr(A_k† U)/√d`.
pub fn chi_of_unitary(u: &CMat, basis: &OperatorBasis) -> Result<ProcessMatrix> {
    let d = basis.dim_hilbert();
    check_unitary(u, d)?;
    let scale = 1.0 / (d as f64).sqrt();
    let v: Vec<C64> = basis.coefficients(u).into_iter().map(|z| z * scale).collect();
    ProcessMatrix::new(basis.clone(), CMat::outer(&v, &v))
}

/// Completely depolarizing channel, `χ = 1/d²`.
pub fn depolarizing(basis: &OperatorBasis) -> ProcessMatrix {
    let n = basis.len();
    let entries = CMat::identity(n).scale_real(1.0 / n as f64);
    ProcessMatrix::new(basis.clone(), entries).expect("depolarizing χ is physical")
}

/// Moves a Pauli-basis χ into the gate basis `B_k = A_k · U` (error after the gate).
pub fn to_gate_basis(chi: &ProcessMatrix, u_ideal: &CMat) -> Result<ProcessMatrix> {
    to_gate_basis_with_side(chi, u_ideal, ErrorSide::After)
}

pub fn to_gate_basis_with_side(chi: &ProcessMatrix, u_ideal: &CMat, side: ErrorSide) -> Result<ProcessMatrix> {
    if chi.basis().label() != &BasisLabel::Pauli {
        return Err(Error::BasisMismatch("to_gate_basis expects a Pauli-basis χ".into()));
    }
    let target = gate_basis(chi.basis(), u_ideal, side)?;
    chi.in_basis(&target)
}

/// Inverse of [`to_gate_basis`].
pub fn to_pauli_basis(chi: &ProcessMatrix) -> Result<ProcessMatrix> {
    let pauli = pauli_basis(chi.basis().num_qubits())?;
    chi.in_basis(&pauli)
}

/// `Tr(χ_a χ_b)`. Exact as a fidelity when one argument is rank one.
pub fn process_fidelity(a: &ProcessMatrix, b: &ProcessMatrix) -> Result<f64> {
    a.same_basis(b)?;
    Ok(a.entries().trace_of_product(b.entries()).re)
}

/// `(Tr √(√χ_a χ_b √χ_a))²`, the fidelity between two mixed processes.
/// Equals [`process_fidelity`] when either argument is rank one.
pub fn mixed_process_fidelity(a: &ProcessMatrix, b: &ProcessMatrix) -> Result<f64> {
    a.same_basis(b)?;
    // square roots amplify rounding noise in null eigenvalues: 1e-17 → 3e-9
    let sqrt_above = |floor: f64| move |x: f64| if x > floor { x.sqrt() } else { 0.0 };
    let ea = a.eig();
    let root = ea.reconstruct_with(sqrt_above(1e-13 * ea.max()));
    let inner = &(&root * b.entries()) * &root;
    let ei = hermitian_eig(&inner.hermitian_part())?;
    let s: f64 = ei.values.iter().map(|&x| sqrt_above(1e-13 * ei.max())(x)).sum();
    Ok((s * s).min(1.0))
}

/// `F̄ = (d F_p + 1)/(d + 1)`.
pub fn average_gate_fidelity(process_fidelity: f64, d: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&process_fidelity) {
        return Err(Error::OutOfRange {
            name: "process fidelity",
            value: process_fidelity,
            range: "[0, 1]",
        });
    }
    if d < 2 {
        return Err(Error::OutOfRange {
            name: "dimension",
            value: d as f64,
            range: ">= 2",
        });
    }
    let d = d as f64;
    Ok((d * process_fidelity + 1.0) / (d + 1.0))
}

/// Degree of coherence `C_ij = |χ_ij|(1 − δ_ij)/√(χ_ii χ_jj)`.
#[derive(Clone, Debug)]
pub struct CoherenceMatrix {
    size: usize,
    entries: Vec<f64>,
    populations: Vec<f64>,
    labels: Vec<String>,
}

pub fn coherence_matrix(chi: &ProcessMatrix) -> CoherenceMatrix {
    let n = chi.size();
    let pops = chi.entries().diag_real();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let denom = pops[i] * pops[j];
            if denom > COHERENCE_DENOM_FLOOR {
                entries[i * n + j] = chi.entry(i, j).norm() / denom.sqrt();
            }
        }
    }
    CoherenceMatrix {
        size: n,
        entries,
        populations: pops,
        labels: chi.basis().element_labels(),
    }
}

impl CoherenceMatrix {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn max(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }

    /// Off-diagonal pairs `(i, j)`, `i < j`, whose populations both reach `floor`.
    pub fn populated_pairs(&self, floor: f64) -> Vec<(usize, usize)> {
        let n = self.size;
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.populations[i] >= floor && self.populations[j] >= floor)
            .collect()
    }

    /// Populated pairs not involving element 0; in the gate basis, the error block.
    pub fn error_pairs(&self, floor: f64) -> Vec<(usize, usize)> {
        self.populated_pairs(floor).into_iter().filter(|&(i, _)| i > 0).collect()
    }

    /// Mean coherence over the given pairs; 0 when empty.
    pub fn mean_over(&self, pairs: &[(usize, usize)]) -> f64 {
        if pairs.is_empty() {
            return 0.0;
        }
        pairs.iter().map(|&(i, j)| self.get(i, j)).sum::<f64>() / pairs.len() as f64
    }

    /// Labelled CSV, header row first.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label");
        for l in &self.labels {
            out.push(',');
            out.push_str(l);
        }
        out.push('\n');
        for i in 0..self.size {
            out.push_str(&self.labels[i]);
            for j in 0..self.size {
                let _ = write!(out, ",{}", fmt_full(self.get(i, j)));
            }
            out.push('\n');
        }
        out
    }
}

/// 17 significant digits.
pub(crate) fn fmt_full(x: f64) -> String {
    format!("{x:.16e}")
}

fn complex_matrix_json(m: &CMat, indent: &str) -> String {
    let mut out = String::from("[\n");
    for i in 0..m.rows() {
        out.push_str(indent);
        out.push_str("  [");
        for j in 0..m.cols() {
            if j > 0 {
                out.push_str(", ");
            }
            let z = m[(i, j)];
            let _ = write!(out, "[{}, {}]", fmt_full(z.re), fmt_full(z.im));
        }
        out.push(']');
        if i + 1 < m.rows() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push_str(indent);
    out.push(']');
    out
}

fn parse_complex_matrix(v: &Value, n: usize, what: &str) -> Result<CMat> {
    let rows = v
        .as_array()
        .ok_or_else(|| Error::Invalid(format!("{what}: expected an array of rows")))?;
    if rows.len() != n {
        return Err(Error::Invalid(format!("{what}: expected {n} rows, found {}", rows.len())));
    }
    let mut m = CMat::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .filter(|r| r.len() == n)
            .ok_or_else(|| Error::Invalid(format!("{what}: row {i} must have {n} entries")))?;
        for (j, z) in row.iter().enumerate() {
            let pair = z
                .as_array()
                .filter(|p| p.len() == 2)
                .ok_or_else(|| Error::Invalid(format!("{what}[{i}][{j}]: expected [re, im]")))?;
            let re = pair[0].as_f64();
            let im = pair[1].as_f64();
            match (re, im) {
                (Some(re), Some(im)) => m[(i, j)] = c(re, im),
                _ => return Err(Error::Invalid(format!("{what}[{i}][{j}]: non-numeric entry"))),
            }
        }
    }
    Ok(m)
}

/// Reads a square complex matrix stored as rows of `[re, im]` pairs.
pub fn complex_matrix_from_json(v: &Value, what: &str) -> Result<CMat> {
    let n = v.as_array().map_or(0, Vec::len);
    parse_complex_matrix(v, n, what)
}

pub fn complex_matrix_to_json(m: &CMat) -> String {
    complex_matrix_json(m, "")
}

impl ProcessMatrix {
    /// Serializes as `{"qubits", "basis", "entries"}` with 17 significant digits.
    pub fn to_json(&self) -> Result<String> {
        let basis = match self.basis.label() {
            BasisLabel::Pauli => "\"pauli\"".to_string(),
            BasisLabel::Gate { unitary, side } => {
                let side = match side {
                    ErrorSide::After => String::new(),
                    ErrorSide::Before => ",\n    \"side\": \"before\"".to_string(),
                };
                format!("{{\n    \"gate\": {}{side}\n  }}", complex_matrix_json(unitary, "    "))
            }
            BasisLabel::Custom => {
                return Err(Error::Invalid("custom bases cannot be serialized".into()));
            }
        };
        Ok(format!(
            "{{\n  \"qubits\": {},\n  \"basis\": {basis},\n  \"entries\": {}\n}}\n",
            self.basis.num_qubits(),
            complex_matrix_json(&self.entries, "  ")
        ))
    }

    /// Parses and validates every physical invariant.
    pub fn from_json(text: &str) -> Result<ProcessMatrix> {
        let v: Value = serde_json::from_str(text)?;
        let qubits = v
            .get("qubits")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Invalid("missing integer field \"qubits\"".into()))? as usize;
        let pauli = pauli_basis(qubits)?;
        let d = pauli.dim_hilbert();
        let basis = match v.get("basis") {
            Some(Value::String(s)) if s == "pauli" => pauli,
            Some(Value::Object(o)) if o.contains_key("gate") => {
                let u = parse_complex_matrix(&o["gate"], d, "basis.gate")?;
                let side = match o.get("side").and_then(Value::as_str) {
                    None | Some("after") => ErrorSide::After,
                    Some("before") => ErrorSide::Before,
                    Some(other) => return Err(Error::Invalid(format!("unknown basis side {other:?}"))),
                };
                gate_basis(&pauli, &u, side)?
            }
            _ => return Err(Error::Invalid("\"basis\" must be \"pauli\" or {\"gate\": U}".into())),
        };
        let entries = v
            .get("entries")
            .ok_or_else(|| Error::Invalid("missing field \"entries\"".into()))?;
        let entries = parse_complex_matrix(entries, d * d, "entries")?;
        ProcessMatrix::new(basis, entries)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<ProcessMatrix> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ProcessMatrix::from_json(&text)
    }
}
