//! Pauli and gate bases for a two-qubit process, and why F_p is one number
//! in the gate basis.
//!
//!     cargo run --example gate_basis

use gatebench::basis::{bit_flipped_cz, gate_basis, pauli_basis, ErrorSide};
use gatebench::process::{average_gate_fidelity, chi_of_unitary, depolarizing, process_fidelity, to_gate_basis};

fn main() -> gatebench::Result<()> {
    let pauli = pauli_basis(2)?;
    let u = bit_flipped_cz();
    let ideal = chi_of_unitary(&u, &pauli)?;

    // in the Pauli basis the ideal gate spreads over several elements
    let populated = ideal.entries().diag_real().iter().filter(|&&p| p > 1e-12).count();
    println!("ideal χ in the Pauli basis: {populated} nonzero populations");

    let noisy = ideal.mix(&depolarizing(&pauli), 0.1)?;
    let in_gate = to_gate_basis(&noisy, &u)?;
    let fp = process_fidelity(&noisy, &ideal)?;
    println!("Tr(χ χ_ideal)      = {fp:.6}");
    println!("gate-basis χ'_00   = {:.6}", in_gate.entry(0, 0).re);
    println!("F_avg = (4 F_p + 1)/5 = {:.6}", average_gate_fidelity(fp, 4)?);

    let g = gate_basis(&pauli, &u, ErrorSide::After)?;
    println!("gate-basis labels: {}", g.element_labels().join(" "));
    println!("orthonormality error: {:.1e}", g.orthonormality_error());
    Ok(())
}
