//! Command-line driver: `gatebench <command> …`.
//!
//! Machine outputs keep full precision; percentages on stdout use one decimal.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::basis::{bit_flipped_cz, cz, pauli_basis};
use crate::epg::{
    curve_csv, epg_upper_curve, epg_upper_curve_optimized, log_grid, threshold_report, NoiseSearchOptions, NoiseSpec,
    ThresholdSpec,
};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::photonic::{
    budget_csv, error_budget_with, model_mle_options, simulate_chi_with, simulate_counts, ErrorBudgetToggles,
    GateModelParams,
};
use crate::local_fit::local_unitary_fit;
use crate::process::{
    average_gate_fidelity, chi_of_unitary, coherence_matrix, complex_matrix_from_json, mixed_process_fidelity,
    process_fidelity, to_gate_basis, ProcessMatrix,
};
use crate::tomography::{
    default_settings, mle_reconstruct, read_counts_csv, read_settings_json, write_counts_csv, MleOptions, Setting,
};

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NO_CONVERGENCE: u8 = 3;

/// Second eigenvalue below which a χ counts as pure.
const RANK_ONE_TOL: f64 = 1e-6;

/// Populations below this do not count toward the mean coherence summary.
const POPULATED_FLOOR: f64 = 1e-3;

#[derive(Parser, Debug)]
#[command(name = "gatebench", version, about = "Error-per-gate bounds and a linear-optical CZ gate model")]
pub struct Cli {
    /// Seed for every randomized step (count sampling, noise-search restarts).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Relative stopping tolerance for reconstruct.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Only errors on stderr; no summaries on stdout.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Model χ from gate parameters via simulated tomography.
    Simulate(SimulateArgs),
    /// Maximum-likelihood χ from counts.
    Reconstruct(ReconstructArgs),
    /// Lower and upper bounds on the error probability per gate.
    Epg(EpgArgs),
    /// Eight-row error budget.
    Budget(BudgetArgs),
    /// Degree-of-coherence matrix in the gate basis.
    Coherence(CoherenceArgs),
    /// F_p and F̄ between two χ files.
    Fidelity(FidelityArgs),
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Parameter JSON; built-in defaults when absent.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// `ideal`, `all`, or a comma list of `source`, `gate`, `loss`.
    #[arg(long, default_value = "all")]
    pub toggles: String,
    #[arg(long)]
    pub settings: Option<PathBuf>,
    #[arg(long, short)]
    pub out: PathBuf,
    /// Only fix the trace of the reconstruction (keeps filtering errors coherent).
    #[arg(long)]
    pub no_trace_preserving: bool,
    /// Also write Poisson-sampled counts (seeded) to this CSV.
    #[arg(long)]
    pub counts_out: Option<PathBuf>,
    /// Expected counts of the most likely setting when sampling.
    #[arg(long, default_value_t = 400.0)]
    pub peak: f64,
}

#[derive(Args, Debug)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub counts: PathBuf,
    #[arg(long)]
    pub settings: Option<PathBuf>,
    #[arg(long, short)]
    pub out: PathBuf,
    /// Only fix the trace (post-selected data).
    #[arg(long)]
    pub no_trace_preserving: bool,
    /// Iteration budget; exhausting it exits with status 3 after writing the result.
    #[arg(long, default_value_t = MleOptions::default().max_iterations)]
    pub max_iterations: usize,
    /// Remove the best local single-qubit rotations relative to `--ideal`.
    #[arg(long)]
    pub local_fit: bool,
    #[arg(long, default_value = "bitflipped-cz")]
    pub ideal: String,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum NoiseArg {
    Depolarizing,
    Optimized,
}

#[derive(Args, Debug)]
pub struct EpgArgs {
    #[arg(long)]
    pub chi: PathBuf,
    /// `cz`, `bitflipped-cz`, or a JSON file holding a unitary as rows of `[re, im]`.
    #[arg(long, default_value = "bitflipped-cz")]
    pub ideal: String,
    #[arg(long, value_enum, default_value_t = NoiseArg::Depolarizing)]
    pub noise: NoiseArg,
    /// `lo:hi:n`, log-spaced.
    #[arg(long, default_value = "1e-3:0.5:40")]
    pub grid: String,
    /// Bounds report JSON.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Curve CSV with both noise families; next to the report when absent.
    #[arg(long)]
    pub curve: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BudgetArgs {
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long)]
    pub settings: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CoherenceArgs {
    #[arg(long)]
    pub chi: PathBuf,
    #[arg(long, default_value = "bitflipped-cz")]
    pub ideal: String,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct FidelityArgs {
    pub a: PathBuf,
    pub b: PathBuf,
}

/// A command that produced its outputs but hit an iteration limit.
struct NotConverged(String);

type Outcome = std::result::Result<Option<NotConverged>, Error>;

pub fn parse_toggles(s: &str) -> Result<ErrorBudgetToggles> {
    let s = s.trim();
    match s {
        "ideal" | "none" => return Ok(ErrorBudgetToggles::IDEAL),
        "all" => return Ok(ErrorBudgetToggles::ALL),
        _ => {}
    }
    let mut t = ErrorBudgetToggles::IDEAL;
    for part in s.split(',').map(str::trim) {
        match part {
            "source" => t.source_on = true,
            "gate" => t.gate_on = true,
            "loss" => t.loss_on = true,
            other => return Err(Error::Invalid(format!("unknown toggle {other:?}"))),
        }
    }
    Ok(t)
}

pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::Invalid(format!("grid {s:?} must be lo:hi:n"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n == 0 || !(lo > 0.0 && hi >= lo && hi < 1.0) {
        return Err(bad());
    }
    Ok(log_grid(lo, hi, n))
}

/// Ideal gate from a built-in name or a unitary file.
pub fn ideal_unitary(spec: &str) -> Result<CMat> {
    Ok(match spec {
        "cz" => cz(),
        "bitflipped-cz" => bit_flipped_cz(),
        path => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let v: serde_json::Value = serde_json::from_str(&text)?;
            let u = v.get("unitary").unwrap_or(&v);
            complex_matrix_from_json(u, "unitary")?
        }
    })
}

/// Ideal χ in the two-qubit Pauli basis.
pub fn ideal_chi(spec: &str) -> Result<ProcessMatrix> {
    chi_of_unitary(&ideal_unitary(spec)?, &pauli_basis(2)?)
}

fn settings_or_default(path: &Option<PathBuf>) -> Result<Vec<Setting>> {
    match path {
        Some(p) => read_settings_json(p),
        None => Ok(default_settings()),
    }
}

fn params_or_default(path: &Option<PathBuf>) -> Result<GateModelParams> {
    match path {
        Some(p) => GateModelParams::read_json(p),
        None => Ok(GateModelParams::default()),
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn pct(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

fn check_paths(out: &Path) -> Result<()> {
    match out.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => {
            Err(Error::Invalid(format!("{}: output directory does not exist", dir.display())))
        }
        _ => Ok(()),
    }
}

fn simulate(cli: &Cli, a: &SimulateArgs) -> Outcome {
    check_paths(&a.out)?;
    let params = params_or_default(&a.params)?;
    let toggles = parse_toggles(&a.toggles)?;
    let settings = settings_or_default(&a.settings)?;
    let opts = MleOptions {
        trace_preserving: !a.no_trace_preserving,
        ..model_mle_options()
    };
    if let Some(path) = &a.counts_out {
        check_paths(path)?;
        if !(a.peak > 0.0 && a.peak.is_finite()) {
            return Err(Error::Invalid("--peak must be positive".into()));
        }
        write_counts_csv(path, &simulate_counts(&params, toggles, &settings, a.peak, cli.seed)?)?;
    }
    let sim = simulate_chi_with(&params, toggles, &settings, &opts)?;
    sim.chi.write_json(&a.out)?;
    if !cli.quiet {
        println!("toggles: {}", toggles.label());
        println!("F_p = {}  F_avg = {}", pct(sim.process_fidelity), pct(sim.avg_fidelity));
    }
    Ok((!sim.mle.converged).then(|| NotConverged("maximum-likelihood iterations exhausted".into())))
}

fn reconstruct(cli: &Cli, a: &ReconstructArgs) -> Outcome {
    check_paths(&a.out)?;
    let settings = settings_or_default(&a.settings)?;
    let file = read_counts_csv(&a.counts, &settings)?;
    for w in &file.warnings {
        eprintln!("warning: {w}");
    }
    let mut opts = MleOptions {
        trace_preserving: !a.no_trace_preserving,
        max_iterations: a.max_iterations,
        ..Default::default()
    };
    if let Some(tol) = cli.tol {
        opts.rel_tol = tol;
    }
    let r = mle_reconstruct(&file.dataset, &opts)?;
    let u = ideal_unitary(&a.ideal)?;
    let chi = if a.local_fit { local_unitary_fit(&r.chi, &u)?.chi } else { r.chi.clone() };
    chi.write_json(&a.out)?;
    if !cli.quiet {
        let fp = process_fidelity(&chi, &chi_of_unitary(&u, &pauli_basis(2)?)?)?;
        println!("F_p = {}  F_avg = {}  (vs {})", pct(fp), pct(average_gate_fidelity(fp.clamp(0.0, 1.0), 4)?), a.ideal);
        println!("log-likelihood = {:.6}", r.log_likelihood);
        println!("iterations = {}  stages = {}", r.iterations, r.stages);
        let spectrum: Vec<String> = r.spectrum.iter().rev().map(|x| format!("{x:.3e}")).collect();
        println!("spectrum = [{}]", spectrum.join(", "));
    }
    Ok((!r.converged).then(|| NotConverged("maximum-likelihood iterations exhausted".into())))
}

fn epg(cli: &Cli, a: &EpgArgs) -> Outcome {
    check_paths(&a.out)?;
    let chi = ProcessMatrix::read_json(&a.chi)?;
    let ideal = ideal_chi(&a.ideal)?;
    let grid = parse_grid(&a.grid)?;
    let search = NoiseSearchOptions {
        seed: cli.seed,
        ..Default::default()
    };
    let dep = epg_upper_curve(&chi, &ideal, &NoiseSpec::depolarizing(), &grid)?;
    let opt = epg_upper_curve_optimized(&chi, &ideal, &grid, &search)?;
    let chosen = match a.noise {
        NoiseArg::Depolarizing => &dep,
        NoiseArg::Optimized => &opt,
    };
    let report = threshold_report(chosen, &ThresholdSpec::builtin());
    write(&a.out, &report.to_json()?)?;
    let curve = a.curve.clone().unwrap_or_else(|| a.out.with_extension("csv"));
    write(&curve, &curve_csv(&dep, &opt)?)?;
    if !cli.quiet {
        print!("{}", report.to_text());
    }
    Ok(None)
}

fn budget(cli: &Cli, a: &BudgetArgs) -> Outcome {
    check_paths(&a.out)?;
    let params = params_or_default(&a.params)?;
    let settings = settings_or_default(&a.settings)?;
    let rows = error_budget_with(&params, &settings, &model_mle_options())?;
    write(&a.out, &budget_csv(&rows))?;
    if !cli.quiet {
        println!("{:<18} {:>8} {:>8} {:>8} {:>8}", "row", "F_p", "F_avg", "F_p*", "F_avg*");
        for r in &rows {
            println!(
                "{:<18} {:>8} {:>8} {:>8} {:>8}",
                r.label,
                pct(r.fp_ideal),
                pct(r.fbar_ideal),
                pct(r.fp_full),
                pct(r.fbar_full)
            );
        }
        println!("(* relative to the full model)");
    }
    Ok(None)
}

fn coherence(cli: &Cli, a: &CoherenceArgs) -> Outcome {
    check_paths(&a.out)?;
    let chi = ProcessMatrix::read_json(&a.chi)?;
    let u = ideal_unitary(&a.ideal)?;
    let c = coherence_matrix(&to_gate_basis(&chi, &u)?);
    write(&a.out, &c.to_csv())?;
    if !cli.quiet {
        let pairs = c.populated_pairs(POPULATED_FLOOR);
        let errors = c.error_pairs(POPULATED_FLOOR);
        println!("max coherence = {:.3}", c.max());
        println!("mean over {} populated pairs = {:.3}", pairs.len(), c.mean_over(&pairs));
        println!("mean over {} populated error pairs = {:.3}", errors.len(), c.mean_over(&errors));
    }
    Ok(None)
}

fn fidelity(cli: &Cli, a: &FidelityArgs) -> Outcome {
    let x = ProcessMatrix::read_json(&a.a)?;
    let y = ProcessMatrix::read_json(&a.b)?;
    let mixed = !x.is_rank_one(RANK_ONE_TOL) && !y.is_rank_one(RANK_ONE_TOL);
    // the overlap is a fidelity only against a pure process
    let fp = if mixed { mixed_process_fidelity(&x, &y)? } else { process_fidelity(&x, &y)? };
    let d = x.basis().dim_hilbert();
    let fbar = average_gate_fidelity(fp.clamp(0.0, 1.0), d)?;
    if !cli.quiet {
        println!("F_p = {}  F_avg = {}", pct(fp), pct(fbar));
        if mixed {
            println!("(both processes are mixed: fidelity (Tr sqrt(sqrt(a) b sqrt(a)))^2; overlap Tr(ab) = {})", pct(process_fidelity(&x, &y)?));
        }
    }
    Ok(None)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::AllRankDeficient => EXIT_NO_CONVERGENCE,
        _ => EXIT_INPUT,
    }
}

pub fn run(cli: &Cli) -> ExitCode {
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_INPUT);
        }
        // a second initialization (e.g. from a test harness) is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t < 1.0) {
            eprintln!("error: --tol must lie in (0, 1)");
            return ExitCode::from(EXIT_INPUT);
        }
    }
    let outcome = match &cli.command {
        Command::Simulate(a) => simulate(cli, a),
        Command::Reconstruct(a) => reconstruct(cli, a),
        Command::Epg(a) => epg(cli, a),
        Command::Budget(a) => budget(cli, a),
        Command::Coherence(a) => coherence(cli, a),
        Command::Fidelity(a) => fidelity(cli, a),
    };
    match outcome {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(NotConverged(msg))) => {
            eprintln!("not converged: {msg} (output written)");
            ExitCode::from(EXIT_NO_CONVERGENCE)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

pub fn main() -> ExitCode {
    run(&Cli::parse())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toggles() {
        assert_eq!(parse_toggles("ideal").unwrap(), ErrorBudgetToggles::IDEAL);
        assert_eq!(parse_toggles("loss, source").unwrap(), ErrorBudgetToggles::new(true, false, true));
        assert!(parse_toggles("gremlin").is_err());
    }

    #[test]
    fn grid() {
        let g = parse_grid("1e-3:0.5:40").unwrap();
        assert_eq!(g.len(), 40);
        assert!((g[39] - 0.5).abs() < 1e-12);
        assert!(parse_grid("0:0.5:3").is_err());
        assert!(parse_grid("1e-3:0.5").is_err());
    }

    #[test]
    fn builtin_ideals_differ() {
        let a = ideal_chi("cz").unwrap();
        let b = ideal_chi("bitflipped-cz").unwrap();
        assert!(process_fidelity(&a, &b).unwrap() < 0.5);
        assert!(matches!(ideal_chi("/nonexistent/u.json"), Err(Error::Io { .. })));
    }

    #[test]
    fn cli_shape() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
