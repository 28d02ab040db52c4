//! Local single-qubit rotations that bring a measured process closest to the ideal.
//!
//! The fitted map is `(V₁⊗V₂) ∘ Λ ∘ (U₁⊗U₂)`, each single-qubit unitary given
//! by Z-Y-Z Euler angles, and the objective is the average gate fidelity with
//! the ideal unitary.

use std::f64::consts::PI;

use crate::basis::{check_unitary, euler_zyz, pauli_basis};
use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};
use crate::optim::{halton, nelder_mead};
use crate::process::{average_gate_fidelity, ProcessMatrix};

#[derive(Clone, Debug)]
pub struct LocalFitOptions {
    /// Starts per round; the first start of the first round is the identity.
    pub restarts: usize,
    /// Upper bound on restart rounds.
    pub max_rounds: usize,
    /// A round that improves F̄ by less than this ends the search.
    pub round_tol: f64,
    pub max_evals: usize,
}

impl Default for LocalFitOptions {
    fn default() -> Self {
        LocalFitOptions {
            restarts: 32,
            max_rounds: 4,
            round_tol: 1e-9,
            max_evals: 4000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LocalRotation {
    /// Applied before the process, one per qubit.
    pub pre: [CMat; 2],
    /// Applied after the process, one per qubit.
    pub post: [CMat; 2],
}

impl LocalRotation {
    pub fn identity() -> Self {
        LocalRotation {
            pre: [CMat::identity(2), CMat::identity(2)],
            post: [CMat::identity(2), CMat::identity(2)],
        }
    }

    /// 12 angles: pre₁, pre₂, post₁, post₂ as (α, β, γ) each.
    pub fn from_angles(a: &[f64]) -> Self {
        let u = |k: usize| euler_zyz(a[3 * k], a[3 * k + 1], a[3 * k + 2]);
        LocalRotation {
            pre: [u(0), u(1)],
            post: [u(2), u(3)],
        }
    }

    pub fn pre_operator(&self) -> CMat {
        self.pre[0].kron(&self.pre[1])
    }

    pub fn post_operator(&self) -> CMat {
        self.post[0].kron(&self.post[1])
    }
}

#[derive(Clone, Debug)]
pub struct LocalFit {
    pub rotation: LocalRotation,
    pub angles: Vec<f64>,
    /// Rotated χ, in the basis of the input.
    pub chi: ProcessMatrix,
    pub process_fidelity: f64,
    pub avg_fidelity: f64,
    pub initial_avg_fidelity: f64,
    pub converged: bool,
}

/// Applies `Λ ↦ Post ∘ Λ ∘ Pre` to an arbitrary-basis χ.
pub fn apply_local_rotation(chi: &ProcessMatrix, rotation: &LocalRotation) -> Result<ProcessMatrix> {
    apply_pre_post(chi, &rotation.pre_operator(), &rotation.post_operator())
}

/// `χ' = M χ M†` with `M_mk = Tr(A_m† Post A_k Pre)`.
pub(crate) fn apply_pre_post(chi: &ProcessMatrix, pre: &CMat, post: &CMat) -> Result<ProcessMatrix> {
    let basis = chi.basis();
    let d = basis.dim_hilbert();
    if pre.rows() != d || post.rows() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: pre.rows(),
        });
    }
    let n = basis.len();
    let mapped: Vec<CMat> = basis.elements().iter().map(|a| &(post * a) * pre).collect();
    let m = CMat::from_fn(n, n, |i, k| basis.element(i).hs_inner(&mapped[k]));
    Ok(chi.with_entries(chi.entries().conjugate_by(&m)))
}

struct Objective<'a> {
    chi: &'a CMat,
    u_dag: CMat,
    elements: Vec<CMat>,
    scale: f64,
}

impl Objective<'_> {
    /// Process fidelity of the rotated χ with the ideal.
    fn process_fidelity(&self, rot: &LocalRotation) -> f64 {
        let g = &(&rot.pre_operator() * &self.u_dag) * &rot.post_operator();
        let w: Vec<C64> = self
            .elements
            .iter()
            .map(|a| g.trace_of_product(a).conj() * self.scale)
            .collect();
        self.chi.quadratic_form(&w).re
    }
}

/// Maximizes F̄ with `u_ideal` over local pre/post rotations (two qubits).
pub fn local_unitary_fit(chi_exp: &ProcessMatrix, u_ideal: &CMat) -> Result<LocalFit> {
    local_unitary_fit_with(chi_exp, u_ideal, &LocalFitOptions::default())
}

pub fn local_unitary_fit_with(chi_exp: &ProcessMatrix, u_ideal: &CMat, opts: &LocalFitOptions) -> Result<LocalFit> {
    chi_exp.check_physical()?;
    if chi_exp.basis().num_qubits() != 2 || chi_exp.basis().dim_hilbert() != 4 {
        return Err(Error::UnsupportedQubits(chi_exp.basis().num_qubits()));
    }
    check_unitary(u_ideal, 4)?;
    let pauli = pauli_basis(2)?;
    let chi_p = chi_exp.in_basis(&pauli)?;
    let obj = Objective {
        chi: chi_p.entries(),
        u_dag: u_ideal.adjoint(),
        elements: pauli.elements().to_vec(),
        scale: 0.5,
    };
    let d = 4;
    let mut eval = |a: &[f64]| -obj.process_fidelity(&LocalRotation::from_angles(a));

    let zero = vec![0.0; 12];
    let initial_fp = -eval(&zero);
    let mut best_x = zero.clone();
    let mut best_f = -initial_fp;
    let mut converged = false;
    let mut counter: u64 = 0;

    for round in 0..opts.max_rounds {
        let round_start = best_f;
        for r in 0..opts.restarts {
            let start = if round == 0 && r == 0 {
                zero.clone()
            } else {
                counter += 1;
                halton(counter, 12)
                    .iter()
                    .enumerate()
                    .map(|(i, h)| if i % 3 == 1 { h * PI } else { h * 2.0 * PI })
                    .collect()
            };
            let m = nelder_mead(&mut eval, &start, 0.4, 1e-13, opts.max_evals);
            // polish from the returned vertex with a smaller simplex
            let m = nelder_mead(&mut eval, &m.x, 0.02, 1e-15, opts.max_evals);
            if m.value < best_f {
                best_f = m.value;
                best_x = m.x;
            }
        }
        let gain = round_start - best_f;
        if gain < opts.round_tol && round > 0 {
            converged = true;
            break;
        }
        if best_f <= -1.0 + 1e-12 {
            converged = true;
            break;
        }
    }

    let rotation = LocalRotation::from_angles(&best_x);
    let rotated = apply_local_rotation(&chi_p, &rotation)?;
    let chi = rotated.in_basis(chi_exp.basis())?;
    let fp = (-best_f).clamp(0.0, 1.0);
    Ok(LocalFit {
        rotation,
        angles: best_x,
        chi,
        process_fidelity: fp,
        avg_fidelity: average_gate_fidelity(fp, d)?,
        initial_avg_fidelity: average_gate_fidelity(initial_fp.clamp(0.0, 1.0), d)?,
        converged,
    })
}
