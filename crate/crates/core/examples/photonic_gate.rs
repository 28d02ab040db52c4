//! The post-selected linear-optical CZ: amplitudes, success probability,
//! and a simulated process matrix.
//!
//!     cargo run --release --example photonic_gate

use gatebench::photonic::{
    evolve, gate_transfer, post_selection_probability, preparation_transfer, simulate_chi, single_pair_state,
    ErrorBudgetToggles, GateModelParams, C_H, C_V, H_A, H_B, MAX_MODES, T_H, T_V,
};
use gatebench::tomography::{default_settings, ProductState};

fn main() -> gatebench::Result<()> {
    let ideal = GateModelParams::ideal();
    let gate = gate_transfer(&ideal)?;
    for label in ["HH", "HV", "VH", "VV"] {
        let prep = ProductState::from_label(label)?;
        let out = evolve(&single_pair_state(), &(&gate * &preparation_transfer(&prep)))?;
        let mut occ = [0u8; MAX_MODES];
        occ[if label.starts_with('H') { C_H } else { C_V }] = 1;
        occ[if label.ends_with('H') { T_H } else { T_V }] = 1;
        occ[H_A] = 1;
        occ[H_B] = 1;
        let amp = out.amplitude(&occ);
        println!(
            "|{label}> -> amplitude {:+.4}, success probability {:.6}",
            amp.re,
            post_selection_probability(&ideal, &prep)?
        );
    }

    let settings = default_settings();
    let mut params = GateModelParams::default();
    params.eta_h = 0.30;
    for toggles in [ErrorBudgetToggles::IDEAL, ErrorBudgetToggles::new(false, true, false), ErrorBudgetToggles::ALL] {
        let sim = simulate_chi(&params, toggles, &settings)?;
        println!(
            "{:<18} F_p {:5.1}%  F_avg {:5.1}%",
            toggles.label(),
            100.0 * sim.process_fidelity,
            100.0 * sim.avg_fidelity
        );
    }
    Ok(())
}
