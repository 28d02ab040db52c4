//! Error probability per gate: the bisection bound, its failure on
//! rank-deficient processes, and the noise-added upper estimate.
//!
//!     cargo run --release --example epg_bounds

use gatebench::basis::{bit_flipped_cz, pauli_basis};
use gatebench::epg::{
    default_delta_grid, epg_lower_bound, epg_min, epg_upper_curve, epg_upper_curve_optimized, threshold_report,
    NoiseSearchOptions, NoiseSpec, ThresholdSpec, BISECTION_TOL,
};
use gatebench::linalg::CMat;
use gatebench::process::{chi_of_unitary, depolarizing, ProcessMatrix};

fn main() -> gatebench::Result<()> {
    let pauli = pauli_basis(2)?;
    let ideal = chi_of_unitary(&bit_flipped_cz(), &pauli)?;

    for p in [0.05, 0.2, 0.5] {
        let chi = ideal.mix(&depolarizing(&pauli), p)?;
        let d = epg_min(&chi, &ideal, BISECTION_TOL)?;
        println!("depolarized p = {p}: eps* = {:.6} (15p/16 = {:.6})", d.epsilon, 15.0 * p / 16.0);
    }

    // a pure process slightly off the ideal: the exact minimum is useless
    let theta: f64 = 0.1;
    let mut v = vec![gatebench::linalg::c(0.0, 0.0); 16];
    let ideal_vec = ideal.eig().vector(15);
    let other = {
        let x = chi_of_unitary(&gatebench::basis::cz(), &pauli)?;
        x.eig().vector(15)
    };
    for k in 0..16 {
        v[k] = ideal_vec[k] * theta.cos() + other[k] * theta.sin();
    }
    let n: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    let pure = ProcessMatrix::hermitian(pauli.clone(), CMat::outer(&v, &v).scale_real(1.0 / n))?;
    let exact = epg_min(&pure, &ideal, BISECTION_TOL)?;
    println!("\npure, slightly wrong process");
    println!("  1 - F_p          = {:.4}", epg_lower_bound(&pure, &ideal)?);
    println!("  exact eps*       = {:.4}", exact.epsilon);

    let grid = default_delta_grid();
    let dep = epg_upper_curve(&pure, &ideal, &NoiseSpec::depolarizing(), &grid)?;
    let opt = epg_upper_curve_optimized(&pure, &ideal, &grid, &NoiseSearchOptions::default())?;
    println!("  depolarizing     : upper {:.4} at delta {:.3e}", dep.upper, dep.upper_delta);
    println!("  optimized noise  : upper {:.4} at delta {:.3e}", opt.upper, opt.upper_delta);
    print!("\n{}", threshold_report(&opt, &ThresholdSpec::builtin()).to_text());
    Ok(())
}
