//! Eight-row error budget: each imperfection switched on alone and in
//! combination.
//!
//!     cargo run --release --example error_budget

use gatebench::photonic::{error_budget, multipair_fraction, GateModelParams};
use gatebench::tomography::default_settings;

fn main() -> gatebench::Result<()> {
    let mut params = GateModelParams::default();
    params.eta_h = 0.28;
    params.eta_v = 0.98;
    println!("multi-pair fraction {:.3}", multipair_fraction(params.lambda_a)?);

    let rows = error_budget(&params, &default_settings())?;
    println!("{:<18} {:>7} {:>7} {:>7}", "row", "F_p", "F_avg", "1-F_p");
    for r in &rows {
        println!(
            "{:<18} {:>6.1}% {:>6.1}% {:>6.1}%",
            r.label,
            100.0 * r.fp_ideal,
            100.0 * r.fbar_ideal,
            100.0 * r.one_minus_fp
        );
    }
    Ok(())
}
