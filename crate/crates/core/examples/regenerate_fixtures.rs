//! Rebuilds everything under `fixtures/` and the values recorded for it.
//!
//! The "experiment-like" process is the full model with slightly wrong
//! reflectivities, sampled at a few hundred counts per setting and fed
//! through the same reconstruction as real data would be.
//!
//!     cargo run --release --example regenerate_fixtures

use std::path::Path;

use gatebench::basis::{bit_flipped_cz, pauli_basis};
use gatebench::epg::{
    default_delta_grid, epg_upper_curve, epg_upper_curve_optimized, NoiseSearchOptions, NoiseSpec,
};
use gatebench::local_fit::local_unitary_fit;
use gatebench::photonic::{simulate_chi, simulate_counts, ErrorBudgetToggles, GateModelParams};
use gatebench::process::{average_gate_fidelity, chi_of_unitary, depolarizing, process_fidelity, ProcessMatrix};
use gatebench::tomography::{
    default_measurements, default_preparations, default_settings, mle_reconstruct, settings_to_json, write_counts_csv,
    MleOptions,
};
use serde_json::json;

const SEED: u64 = 7;
const PEAK_COUNTS: f64 = 400.0;

fn record(chi: &ProcessMatrix, ideal: &ProcessMatrix) -> gatebench::Result<serde_json::Value> {
    let fp = process_fidelity(chi, ideal)?;
    let grid = default_delta_grid();
    let dep = epg_upper_curve(chi, ideal, &NoiseSpec::depolarizing(), &grid)?;
    let opt = epg_upper_curve_optimized(chi, ideal, &grid, &NoiseSearchOptions::default())?;
    Ok(json!({
        "fp": fp,
        "fbar": average_gate_fidelity(fp, 4)?,
        "lower": dep.lower,
        "upper_depolarizing": dep.upper,
        "upper_optimized": opt.upper,
    }))
}

fn main() -> gatebench::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    std::fs::create_dir_all(&dir).map_err(|e| gatebench::Error::Invalid(e.to_string()))?;
    let write = |name: &str, text: String| std::fs::write(dir.join(name), text).expect("fixture dir is writable");

    let settings = default_settings();
    write("settings.json", settings_to_json(&default_preparations(), &default_measurements())?);
    write("default_params.json", GateModelParams::default().to_json()?);
    write("ideal_params.json", GateModelParams::ideal().to_json()?);

    let pauli = pauli_basis(2)?;
    let ideal = chi_of_unitary(&bit_flipped_cz(), &pauli)?;
    ideal.write_json(dir.join("ideal_chi.json"))?;
    ideal.mix(&depolarizing(&pauli), 0.2)?.write_json(dir.join("depolarized_0.2_chi.json"))?;

    // gate imperfections only, at 1 − F_p ≈ 2.8%
    let gate = GateModelParams {
        eta_h: 0.272,
        ..Default::default()
    };
    write("gate_only_params.json", gate.to_json()?);
    let gate_chi = simulate_chi(&gate, ErrorBudgetToggles::new(false, true, false), &settings)?.chi;
    gate_chi.write_json(dir.join("gate_only_chi.json"))?;

    let exp = GateModelParams {
        eta_h: 0.257,
        eta_v: 0.968,
        ..Default::default()
    };
    write("experiment_like_params.json", exp.to_json()?);
    let data = simulate_counts(&exp, ErrorBudgetToggles::ALL, &settings, PEAK_COUNTS, SEED)?;
    write_counts_csv(dir.join("experiment_like_counts.csv"), &data)?;
    let mle = mle_reconstruct(&data, &MleOptions::default())?;
    let exp_chi = local_unitary_fit(&mle.chi, &bit_flipped_cz())?.chi;
    exp_chi.write_json(dir.join("experiment_like_chi.json"))?;

    let recorded = json!({
        "gate_only_chi.json": record(&gate_chi, &ideal)?,
        "experiment_like_chi.json": record(&exp_chi, &ideal)?,
        "experiment_like_counts": { "seed": SEED, "peak": PEAK_COUNTS, "total": data.total_counts() },
    });
    write("recorded.json", serde_json::to_string_pretty(&recorded)? + "\n");
    println!("{}", serde_json::to_string_pretty(&recorded)?);
    Ok(())
}
