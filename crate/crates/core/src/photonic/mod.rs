//! Architectural model of the post-selected linear-optical controlled-Z gate.
//!
//! Two heralded down-conversion sources feed a partially polarizing
//! beamsplitter (reflectivity `η_H` for H, `η_V` for V) with balancing
//! attenuators on both V modes. Loss sits as beamsplitters just before the
//! threshold detectors. A fourfold coincidence (control, target, both
//! heralds) signals success; ideally the post-selected operation is
//! `diag(1, −1, −1, −1)` with amplitude 1/3.

mod fock;

pub use fock::{
    beamsplitter, evolve, photons, two_mode, FockState, ModeRegistry, Occupation, C_H, C_V, H_A, H_B, MAX_MODES, T_H,
    T_V,
};

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{bit_flipped_cz, pauli_basis};
use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};
use crate::local_fit::{local_unitary_fit, LocalFit};
use crate::process::{
    average_gate_fidelity, chi_of_unitary, fmt_full, mixed_process_fidelity, process_fidelity, ProcessMatrix,
};
use crate::tomography::{
    mle_reconstruct, sample_counts, MleOptions, MleReport, ProductState, Qubit, Setting, TomographyDataset,
};

use fock::{LOSS_ATT_CV, LOSS_ATT_TV, LOSS_EFF};

/// Largest accepted pair amplitude.
pub const LAMBDA_MAX: f64 = 0.3;
/// Multi-pair fraction used for the default source strength.
pub const DEFAULT_MULTIPAIR_FRACTION: f64 = 0.032;
/// Counts assigned to the most probable setting when feeding exact probabilities to tomography.
pub const EXACT_COUNT_SCALE: f64 = 1e9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Efficiencies {
    pub c: f64,
    pub t: f64,
    #[serde(rename = "hA")]
    pub h_a: f64,
    #[serde(rename = "hB")]
    pub h_b: f64,
}

impl Efficiencies {
    pub fn uniform(e: f64) -> Self {
        Efficiencies {
            c: e,
            t: e,
            h_a: e,
            h_b: e,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateModelParams {
    #[serde(rename = "lambda_A")]
    pub lambda_a: f64,
    #[serde(rename = "lambda_B")]
    pub lambda_b: f64,
    #[serde(rename = "eta_H")]
    pub eta_h: f64,
    #[serde(rename = "eta_V")]
    pub eta_v: f64,
    #[serde(rename = "tau_cV")]
    pub tau_cv: f64,
    #[serde(rename = "tau_tV")]
    pub tau_tv: f64,
    pub eff: Efficiencies,
}

impl Default for GateModelParams {
    /// Source strength at a 3.2% multi-pair fraction, ideal reflectivities, and
    /// arm efficiencies in the 10–60% range typical of heralded fibre-coupled sources.
    fn default() -> Self {
        let lambda = lambda_for_multipair_fraction(DEFAULT_MULTIPAIR_FRACTION).expect("in range");
        GateModelParams {
            lambda_a: lambda,
            lambda_b: lambda,
            eta_v: 1.0,
            eta_h: 1.0 / 3.0,
            tau_cv: 1.0 / 3.0,
            tau_tv: 1.0 / 3.0,
            eff: Efficiencies {
                c: 0.6,
                t: 0.6,
                h_a: 0.1,
                h_b: 0.1,
            },
        }
    }
}

fn check_unit(name: &'static str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::OutOfRange {
            name,
            value: v,
            range: "[0, 1]",
        });
    }
    Ok(())
}

fn check_lambda(name: &'static str, v: f64) -> Result<()> {
    if !(0.0..=LAMBDA_MAX).contains(&v) {
        return Err(Error::OutOfRange {
            name,
            value: v,
            range: "[0, 0.3]",
        });
    }
    Ok(())
}

impl GateModelParams {
    /// Ideal reflectivities, unit efficiencies, and the default source strength.
    pub fn ideal() -> Self {
        GateModelParams {
            eff: Efficiencies::uniform(1.0),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_lambda("lambda_A", self.lambda_a)?;
        check_lambda("lambda_B", self.lambda_b)?;
        check_unit("eta_H", self.eta_h)?;
        check_unit("eta_V", self.eta_v)?;
        check_unit("tau_cV", self.tau_cv)?;
        check_unit("tau_tV", self.tau_tv)?;
        check_unit("eff.c", self.eff.c)?;
        check_unit("eff.t", self.eff.t)?;
        check_unit("eff.hA", self.eff.h_a)?;
        check_unit("eff.hB", self.eff.h_b)?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: GateModelParams = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Which imperfections are switched on; the rest take ideal values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ErrorBudgetToggles {
    pub source_on: bool,
    pub gate_on: bool,
    pub loss_on: bool,
}

impl ErrorBudgetToggles {
    pub const IDEAL: Self = Self::new(false, false, false);
    pub const ALL: Self = Self::new(true, true, true);

    pub const fn new(source_on: bool, gate_on: bool, loss_on: bool) -> Self {
        ErrorBudgetToggles {
            source_on,
            gate_on,
            loss_on,
        }
    }

    /// Rows in table order: ideal, loss, gate, gate+loss, source, source+gate, source+loss, source+gate+loss.
    pub fn table_rows() -> [Self; 8] {
        [
            Self::new(false, false, false),
            Self::new(false, false, true),
            Self::new(false, true, false),
            Self::new(false, true, true),
            Self::new(true, false, false),
            Self::new(true, true, false),
            Self::new(true, false, true),
            Self::new(true, true, true),
        ]
    }

    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.source_on {
            parts.push("source");
        }
        if self.gate_on {
            parts.push("gate");
        }
        if self.loss_on {
            parts.push("loss");
        }
        if parts.is_empty() {
            "ideal".into()
        } else {
            parts.join("+")
        }
    }

    /// Parameters with switched-off imperfections replaced by ideal values.
    pub fn apply(&self, params: &GateModelParams) -> GateModelParams {
        let mut p = params.clone();
        if !self.gate_on {
            p.eta_h = 1.0 / 3.0;
            p.eta_v = 1.0;
            p.tau_cv = 1.0 / 3.0;
            p.tau_tv = 1.0 / 3.0;
        }
        if !self.loss_on {
            p.eff = Efficiencies::uniform(1.0);
        }
        p
    }

    /// 3 keeps the 2+1 and 1+2 pair terms, 2 only single pairs.
    pub fn cutoff_pairs(&self) -> usize {
        if self.source_on {
            3
        } else {
            2
        }
    }
}

/// `λ²/(1 + λ²)`: share of emission events with two pairs when each source is truncated at two pairs.
pub fn multipair_fraction(lambda: f64) -> Result<f64> {
    check_lambda("lambda", lambda)?;
    let l2 = lambda * lambda;
    Ok(l2 / (1.0 + l2))
}

/// Inverse of [`multipair_fraction`] by bisection.
pub fn lambda_for_multipair_fraction(fraction: f64) -> Result<f64> {
    let max = multipair_fraction(LAMBDA_MAX)?;
    if !(0.0..=max).contains(&fraction) {
        return Err(Error::OutOfRange {
            name: "multipair fraction",
            value: fraction,
            range: "[0, f(0.3)]",
        });
    }
    let (mut lo, mut hi) = (0.0, LAMBDA_MAX);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if multipair_fraction(mid)? < fraction {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Largest photon number the source expansion can produce.
pub const MAX_PHOTONS: usize = 6;

/// Two-source down-conversion terms that can yield a fourfold event.
///
/// Source A emits signal photons into `cH` and idlers into `hA`; B into
/// `tH` and `hB`. Kept terms: (1,1) and, for `cutoff_pairs = 3`, (2,1) and
/// (1,2) with amplitudes `λ_A`, `λ_B` relative to (1,1). Vacuum and
/// single-source terms never give a fourfold event and post-selection
/// discards the overall rate, so the state is the normalized superposition
/// of the kept terms.
pub fn pdc_state(lambda_a: f64, lambda_b: f64, cutoff_pairs: usize) -> Result<FockState> {
    check_lambda("lambda_A", lambda_a)?;
    check_lambda("lambda_B", lambda_b)?;
    if !(2..=3).contains(&cutoff_pairs) {
        return Err(Error::Invalid(format!("cutoff_pairs must be 2 or 3, got {cutoff_pairs}")));
    }
    let mut s = FockState::empty(MAX_PHOTONS);
    let mut pairs = vec![(1u8, 1u8)];
    if cutoff_pairs == 3 {
        pairs.extend([(2, 1), (1, 2)]);
    }
    let amps: Vec<f64> = pairs
        .iter()
        .map(|&(a, b)| lambda_a.powi(a as i32 - 1) * lambda_b.powi(b as i32 - 1))
        .collect();
    let norm = amps.iter().map(|x| x * x).sum::<f64>().sqrt();
    for ((a, b), amp) in pairs.into_iter().zip(amps) {
        let amp = amp / norm;
        if amp == 0.0 {
            continue;
        }
        let mut occ = [0; MAX_MODES];
        occ[C_H] = a;
        occ[H_A] = a;
        occ[T_H] = b;
        occ[H_B] = b;
        s.add(occ, C64::new(amp, 0.0))?;
    }
    Ok(s)
}

/// Unit-amplitude single pair from each source.
pub fn single_pair_state() -> FockState {
    let mut s = FockState::empty(MAX_PHOTONS);
    let mut occ = [0; MAX_MODES];
    occ[C_H] = 1;
    occ[H_A] = 1;
    occ[T_H] = 1;
    occ[H_B] = 1;
    s.add(occ, C64::new(1.0, 0.0)).expect("within cutoff");
    s
}

fn n_modes() -> usize {
    ModeRegistry::gate().len()
}

/// Waveplate map sending H to `q`: columns `(q, q⊥)`.
fn state_unitary(q: &Qubit) -> [[C64; 2]; 2] {
    [[q[0], -q[1].conj()], [q[1], q[0].conj()]]
}

/// Transfer that rotates the H photons of both inputs into the preparation state.
pub fn preparation_transfer(prep: &ProductState) -> CMat {
    let n = n_modes();
    let a = two_mode(n, C_H, C_V, state_unitary(&prep.qubits[0]));
    let b = two_mode(n, T_H, T_V, state_unitary(&prep.qubits[1]));
    &b * &a
}

pub fn prepare_input(state: &FockState, prep: &ProductState) -> Result<FockState> {
    evolve(state, &preparation_transfer(prep))
}

/// Waveplates before the polarizer: the analyzer state goes to H (the pass mode).
pub fn analyzer_transfer(meas: &ProductState) -> CMat {
    let n = n_modes();
    let w = |q: &Qubit| [[q[0].conj(), q[1].conj()], [-q[1], q[0]]];
    let a = two_mode(n, C_H, C_V, w(&meas.qubits[0]));
    let b = two_mode(n, T_H, T_V, w(&meas.qubits[1]));
    &b * &a
}

/// Central beamsplitter, balancing attenuators, then the efficiency beamsplitters.
pub fn gate_transfer(params: &GateModelParams) -> Result<CMat> {
    params.validate()?;
    let reg = ModeRegistry::gate();
    let n = reg.len();
    let mut u = beamsplitter(n, C_H, T_H, params.eta_h);
    u = &beamsplitter(n, C_V, T_V, params.eta_v) * &u;
    u = &beamsplitter(n, C_V, reg.loss_mode(LOSS_ATT_CV), params.tau_cv) * &u;
    u = &beamsplitter(n, T_V, reg.loss_mode(LOSS_ATT_TV), params.tau_tv) * &u;
    let effs = [
        (C_H, params.eff.c),
        (C_V, params.eff.c),
        (T_H, params.eff.t),
        (T_V, params.eff.t),
        (H_A, params.eff.h_a),
        (H_B, params.eff.h_b),
    ];
    for ((mode, e), slot) in effs.into_iter().zip(LOSS_EFF) {
        u = &beamsplitter(n, mode, reg.loss_mode(slot), e) * &u;
    }
    Ok(u)
}

fn fourfold_event(o: &Occupation) -> bool {
    o[C_H] > 0 && o[T_H] > 0 && o[H_A] > 0 && o[H_B] > 0
}

/// Terms that can still produce a fourfold click after the analyzer.
fn can_click(o: &Occupation) -> bool {
    o[C_H] + o[C_V] > 0 && o[T_H] + o[T_V] > 0 && o[H_A] > 0 && o[H_B] > 0
}

/// Probability that all four threshold detectors fire; `state` has been through the gate.
pub fn fourfold_probability(state: &FockState, meas: &ProductState) -> Result<f64> {
    let analyzed = evolve(&state.filter(can_click), &analyzer_transfer(meas))?;
    Ok(analyzed.probability(fourfold_event))
}

/// State after preparation, gate and loss, restricted to terms that can click.
fn gate_output(source: &FockState, gate: &CMat, prep: &ProductState) -> Result<FockState> {
    let full = gate * &preparation_transfer(prep);
    Ok(evolve(source, &full)?.filter(can_click))
}

/// Fourfold probabilities for every setting, each distinct preparation evolved once.
pub fn fourfold_probabilities(
    params: &GateModelParams,
    toggles: ErrorBudgetToggles,
    settings: &[Setting],
) -> Result<Vec<f64>> {
    let p = toggles.apply(params);
    let source = pdc_state(p.lambda_a, p.lambda_b, toggles.cutoff_pairs())?;
    probabilities_for_source(&source, &p, settings)
}

fn probabilities_for_source(source: &FockState, params: &GateModelParams, settings: &[Setting]) -> Result<Vec<f64>> {
    let gate = gate_transfer(params)?;
    let mut preps: Vec<&ProductState> = Vec::new();
    let which: Vec<usize> = settings
        .iter()
        .map(|s| match preps.iter().position(|p| **p == s.prep) {
            Some(i) => i,
            None => {
                preps.push(&s.prep);
                preps.len() - 1
            }
        })
        .collect();
    let outputs = preps
        .par_iter()
        .map(|p| gate_output(source, &gate, p))
        .collect::<Result<Vec<_>>>()?;
    settings
        .par_iter()
        .zip(which.par_iter())
        .map(|(s, &i)| fourfold_probability(&outputs[i], &s.meas))
        .collect()
}

/// Fourfold probability of one unit-amplitude pair per source, summed over
/// the four computational analyzer outcomes.
pub fn post_selection_probability(params: &GateModelParams, prep: &ProductState) -> Result<f64> {
    let settings: Vec<Setting> = ["HH", "HV", "VH", "VV"]
        .iter()
        .map(|l| Setting {
            prep: prep.clone(),
            meas: ProductState::from_label(l).expect("fixed labels"),
        })
        .collect();
    Ok(probabilities_for_source(&single_pair_state(), params, &settings)?.iter().sum())
}

#[derive(Clone, Debug)]
pub struct SimulatedChi {
    /// After the local-rotation fit; this is the model χ.
    pub chi: ProcessMatrix,
    pub mle: MleReport,
    pub fit: LocalFit,
    pub probabilities: Vec<f64>,
    /// F_p of `chi` with the bit-flipped CZ.
    pub process_fidelity: f64,
    pub avg_fidelity: f64,
}

/// Reconstruction settings for model data: the experimental defaults.
///
/// The post-selected gate is not trace preserving; the trace-preserving fit
/// partly converts filtering errors into incoherent ones. Pass
/// `trace_preserving: false` to [`simulate_chi_with`] to keep them coherent.
pub fn model_mle_options() -> MleOptions {
    MleOptions::default()
}

/// Model χ through the same tomography pipeline as an experiment: exact
/// fourfold probabilities → maximum likelihood → best local rotation.
pub fn simulate_chi(params: &GateModelParams, toggles: ErrorBudgetToggles, settings: &[Setting]) -> Result<SimulatedChi> {
    simulate_chi_with(params, toggles, settings, &model_mle_options())
}

pub fn simulate_chi_with(
    params: &GateModelParams,
    toggles: ErrorBudgetToggles,
    settings: &[Setting],
    mle_options: &MleOptions,
) -> Result<SimulatedChi> {
    let probabilities = fourfold_probabilities(params, toggles, settings)?;
    let max = probabilities.iter().cloned().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(Error::DegenerateCounts("the model never produces a fourfold event".into()));
    }
    let data = TomographyDataset::from_probabilities(settings.to_vec(), &probabilities, EXACT_COUNT_SCALE / max)?;
    let mle = mle_reconstruct(&data, mle_options)?;
    let u = bit_flipped_cz();
    let fit = local_unitary_fit(&mle.chi, &u)?;
    let ideal = chi_of_unitary(&u, &pauli_basis(2)?)?;
    let chi = fit.chi.clone();
    let fp = process_fidelity(&chi, &ideal)?;
    Ok(SimulatedChi {
        process_fidelity: fp,
        avg_fidelity: average_gate_fidelity(fp, 4)?,
        chi,
        mle,
        fit,
        probabilities,
    })
}

/// Poisson-sampled fourfold counts, scaled so the most likely setting expects `peak_counts`.
pub fn simulate_counts(
    params: &GateModelParams,
    toggles: ErrorBudgetToggles,
    settings: &[Setting],
    peak_counts: f64,
    seed: u64,
) -> Result<TomographyDataset> {
    let probabilities = fourfold_probabilities(params, toggles, settings)?;
    let max = probabilities.iter().cloned().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(Error::DegenerateCounts("the model never produces a fourfold event".into()));
    }
    let counts = sample_counts(&probabilities, peak_counts / max, seed)?;
    TomographyDataset::new(settings.to_vec(), counts)
}

#[derive(Clone, Debug, Serialize)]
pub struct BudgetRow {
    pub label: String,
    pub toggles: ErrorBudgetToggles,
    pub fp_ideal: f64,
    pub fbar_ideal: f64,
    /// Fidelities with the full (all imperfections) model; both sides are mixed,
    /// so this uses the mixed-state fidelity.
    pub fp_full: f64,
    pub fbar_full: f64,
    pub one_minus_fp: f64,
    #[serde(skip)]
    pub chi: ProcessMatrix,
}

/// Runs all eight toggle combinations in table order.
pub fn error_budget(params: &GateModelParams, settings: &[Setting]) -> Result<Vec<BudgetRow>> {
    error_budget_with(params, settings, &model_mle_options())
}

pub fn error_budget_with(params: &GateModelParams, settings: &[Setting], mle_options: &MleOptions) -> Result<Vec<BudgetRow>> {
    params.validate()?;
    let rows = ErrorBudgetToggles::table_rows();
    let sims = rows
        .iter()
        .map(|t| simulate_chi_with(params, *t, settings, mle_options))
        .collect::<Result<Vec<_>>>()?;
    let full = &sims[7].chi;
    rows.iter()
        .zip(sims.iter())
        .map(|(t, s)| {
            let fp_full = mixed_process_fidelity(&s.chi, full)?;
            Ok(BudgetRow {
                label: t.label(),
                toggles: *t,
                fp_ideal: s.process_fidelity,
                fbar_ideal: s.avg_fidelity,
                fp_full,
                fbar_full: average_gate_fidelity(fp_full.clamp(0.0, 1.0), 4)?,
                one_minus_fp: 1.0 - s.process_fidelity,
                chi: s.chi.clone(),
            })
        })
        .collect()
}

pub fn budget_csv(rows: &[BudgetRow]) -> String {
    let mut out = String::from("row,source,gate,loss,fp_ideal,fbar_ideal,fp_full,fbar_full,one_minus_fp\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.label,
            r.toggles.source_on,
            r.toggles.gate_on,
            r.toggles.loss_on,
            fmt_full(r.fp_ideal),
            fmt_full(r.fbar_ideal),
            fmt_full(r.fp_full),
            fmt_full(r.fbar_full),
            fmt_full(r.one_minus_fp)
        ));
    }
    out
}
