//! Degree of coherence in the gate basis: circuit errors versus multi-pair
//! source errors.
//!
//!     cargo run --release --example coherence

use gatebench::basis::bit_flipped_cz;
use gatebench::photonic::{simulate_chi, ErrorBudgetToggles, GateModelParams};
use gatebench::process::{coherence_matrix, to_gate_basis};
use gatebench::tomography::default_settings;

const FLOOR: f64 = 1e-3;

fn main() -> gatebench::Result<()> {
    let settings = default_settings();
    let mut params = GateModelParams::default();
    params.eta_h = 0.30;
    for toggles in [ErrorBudgetToggles::new(false, true, false), ErrorBudgetToggles::new(true, false, true)] {
        let sim = simulate_chi(&params, toggles, &settings)?;
        let c = coherence_matrix(&to_gate_basis(&sim.chi, &bit_flipped_cz())?);
        let pairs = c.error_pairs(FLOOR);
        println!(
            "{:<12} F_p {:5.1}%  {:3} populated error pairs, mean coherence {:.3}",
            toggles.label(),
            100.0 * sim.process_fidelity,
            pairs.len(),
            c.mean_over(&pairs)
        );
        let labels = c.labels();
        for &(i, j) in pairs.iter().take(4) {
            println!("    C({}, {}) = {:.3}", labels[i], labels[j], c.get(i, j));
        }
    }
    Ok(())
}
