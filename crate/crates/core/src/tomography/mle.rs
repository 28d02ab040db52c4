//! Maximum-likelihood reconstruction.
//!
//! χ = T†T / Tr(T†T) with T upper triangular. The objective is the Poisson
//! log-likelihood with the unknown overall rate profiled out,
//! `L = Σ n_s ln p_s − N ln Σ t_s p_s`, minus a trace-preservation penalty
//! `w ‖F − 1‖²` (F = Λ†(1)) whose weight grows in stages. A final
//! congruence `χ ↦ χ∘F^{-1/2}` makes the result exactly trace preserving.

use crate::error::{Error, Result};
use crate::linalg::{c, cholesky, hermitian_eig, inv_sqrt_psd, CMat, ZERO};
use crate::local_fit::apply_pre_post;
use crate::process::ProcessMatrix;

use super::{
    chi_to_coords, coords_gradient_to_matrix, linear_inversion, two_qubit_pauli, Design, TomographyDataset, N_COORDS,
    N_OPS,
};

#[derive(Clone, Debug)]
pub struct MleOptions {
    pub max_iterations: usize,
    /// Stop a penalty stage when an accepted step changes the objective by less than this, relatively.
    pub rel_tol: f64,
    /// Iterations per penalty stage before the weight is raised.
    pub stage_iterations: usize,
    /// Initial penalty weight, in units of the total count.
    pub initial_penalty: f64,
    pub penalty_growth: f64,
    /// Upper limit on the number of penalty stages.
    pub max_stages: usize,
    /// Stages end early once `max |F − 1|` is below this.
    pub tp_tol: f64,
    /// Keep the accepted objective values (per stage) in the report.
    pub record_trace: bool,
    /// Weight of the maximally mixed process in the starting point
    /// (the rest is the PSD-clipped linear inversion).
    pub start_mixing: f64,
    /// Enforce `Λ†(1) = 1`. When off, only the trace of χ is fixed and no penalty or projection is applied.
    pub trace_preserving: bool,
}

impl Default for MleOptions {
    fn default() -> Self {
        MleOptions {
            max_iterations: 50_000,
            rel_tol: 1e-10,
            stage_iterations: 5_000,
            initial_penalty: 1.0,
            penalty_growth: 10.0,
            max_stages: 8,
            tp_tol: 1e-6,
            record_trace: false,
            start_mixing: 1e-6,
            trace_preserving: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MleReport {
    pub chi: ProcessMatrix,
    /// Profiled Poisson log-likelihood of `chi` (without the `ln n!` constant).
    pub log_likelihood: f64,
    pub iterations: usize,
    /// Eigenvalues of `chi`, ascending.
    pub spectrum: Vec<f64>,
    pub converged: bool,
    /// `max |F − 1|` before the final projection.
    pub tp_error_before_projection: f64,
    pub stages: usize,
    /// `(stage, penalized objective)` after every accepted step, if requested.
    pub trace: Vec<(usize, f64)>,
}

/// `M_kl = d A_l† A_k`, so that `F = Σ χ_kl M_kl`.
struct TpMaps {
    maps: Vec<CMat>,
}

impl TpMaps {
    fn new() -> Self {
        let pauli = two_qubit_pauli();
        let el = pauli.elements();
        let mut maps = Vec::with_capacity(N_OPS * N_OPS);
        for ak in el {
            for al in el {
                maps.push((&al.adjoint() * ak).scale_real(4.0));
            }
        }
        TpMaps { maps }
    }

    fn operator(&self, chi: &CMat) -> CMat {
        let mut f = CMat::zeros(4, 4);
        for k in 0..N_OPS {
            for l in 0..N_OPS {
                let w = chi[(k, l)];
                if w == ZERO {
                    continue;
                }
                let m = &self.maps[k * N_OPS + l];
                for i in 0..4 {
                    for j in 0..4 {
                        f[(i, j)] += w * m[(i, j)];
                    }
                }
            }
        }
        f
    }

    /// Gradient of `‖F − 1‖²`: `G_lk = 2 Tr((F − 1) M_kl)`.
    fn penalty_gradient(&self, f_minus_i: &CMat) -> CMat {
        CMat::from_fn(N_OPS, N_OPS, |l, k| self.maps[k * N_OPS + l].trace_of_product(f_minus_i) * 2.0)
    }
}

struct Problem<'a> {
    design: Design,
    counts: &'a [u64],
    exposures: Vec<f64>,
    total: f64,
    tp: TpMaps,
    weight: f64,
}

struct Eval {
    chi: CMat,
    objective: f64,
    probs: Vec<f64>,
    f_minus_i: CMat,
}

fn chi_of(t: &CMat) -> CMat {
    let mut chi = &t.adjoint() * t;
    let tr = chi.trace().re;
    chi = chi.scale_real(1.0 / tr);
    chi.hermitian_part()
}

impl Problem<'_> {
    fn log_likelihood(&self, probs: &[f64]) -> f64 {
        let mut l = 0.0;
        let mut norm = 0.0;
        for ((&n, &p), &t) in self.counts.iter().zip(probs).zip(&self.exposures) {
            norm += t * p;
            if n > 0 {
                if !(p > 0.0) {
                    return f64::NEG_INFINITY;
                }
                l += n as f64 * p.ln();
            }
        }
        if !(norm > 0.0) {
            return f64::NEG_INFINITY;
        }
        l - self.total * norm.ln()
    }

    fn evaluate(&self, t: &CMat) -> Eval {
        let chi = chi_of(t);
        let mut x = vec![0.0; N_COORDS];
        chi_to_coords(&chi, &mut x);
        let mut probs = vec![0.0; self.design.n];
        self.design.apply(&x, &mut probs);
        let log_likelihood = self.log_likelihood(&probs);
        let f_minus_i = &self.tp.operator(&chi) - &CMat::identity(4);
        let penalty = f_minus_i.frobenius().powi(2);
        Eval {
            objective: log_likelihood - self.weight * penalty,
            chi,
            probs,
            f_minus_i,
        }
    }

    /// Ascent direction in T, restricted to the upper triangle.
    fn direction(&self, t: &CMat, e: &Eval) -> CMat {
        let norm: f64 = self.exposures.iter().zip(&e.probs).map(|(t, p)| t * p).sum();
        let w: Vec<f64> = self
            .counts
            .iter()
            .zip(&e.probs)
            .zip(&self.exposures)
            .map(|((&n, &p), &ts)| {
                let data = if n > 0 { n as f64 / p } else { 0.0 };
                data - self.total * ts / norm
            })
            .collect();
        let mut g = vec![0.0; N_COORDS];
        self.design.apply_transpose(&w, &mut g);
        let gl = coords_gradient_to_matrix(&g);
        let gp = self.tp.penalty_gradient(&e.f_minus_i);
        let mut grad = &gl - &gp.scale_real(self.weight);
        let gchi = grad.trace_of_product(&e.chi).re;
        for k in 0..N_OPS {
            grad[(k, k)] -= c(gchi, 0.0);
        }
        // T has unit Frobenius norm, so the 1/Tr(T†T) factor is 1
        let mut d = (t * &grad).scale_real(2.0);
        for i in 0..N_OPS {
            for j in 0..i {
                d[(i, j)] = ZERO;
            }
        }
        d
    }
}

fn normalized(t: CMat) -> CMat {
    let n = t.frobenius();
    t.scale_real(1.0 / n)
}

/// Starting point: linear inversion with negative eigenvalues clipped, lightly mixed with identity.
fn initial_t(data: &TomographyDataset, eps: f64) -> Result<CMat> {
    let li = linear_inversion(data)?;
    let eig = li.chi.eig();
    let clipped = eig.reconstruct_with(|v| v.max(0.0));
    let tr = clipped.trace().re;
    let start = &clipped.scale_real((1.0 - eps) / tr) + &CMat::identity(N_OPS).scale_real(eps / N_OPS as f64);
    let l = cholesky(&start.hermitian_part(), 0.0)
        .ok_or_else(|| Error::DegenerateCounts("could not factor the starting point".into()))?;
    Ok(normalized(l.adjoint()))
}

/// Physical, trace-preserving χ maximizing the Poisson likelihood of `data`.
pub fn mle_reconstruct(data: &TomographyDataset, opts: &MleOptions) -> Result<MleReport> {
    if opts.max_iterations == 0 || opts.stage_iterations == 0 {
        return Err(Error::Invalid("iteration limits must be positive".into()));
    }
    if !(opts.start_mixing > 0.0 && opts.start_mixing <= 1.0) {
        return Err(Error::OutOfRange {
            name: "start_mixing",
            value: opts.start_mixing,
            range: "(0, 1]",
        });
    }
    let mut t = initial_t(data, opts.start_mixing)?;
    let pauli = two_qubit_pauli();
    let total = data.total_counts() as f64;
    let mut prob = Problem {
        design: Design::new(&data.settings, &pauli),
        counts: &data.counts,
        exposures: data.exposures(),
        total,
        tp: TpMaps::new(),
        weight: if opts.trace_preserving { opts.initial_penalty * total } else { 0.0 },
    };

    let mut iterations = 0;
    let mut stage = 0;
    let mut trace = Vec::new();
    let mut stage_converged;
    let mut tp_err;
    loop {
        let mut e = prob.evaluate(&t);
        let mut step: Option<f64> = None;
        let mut in_stage = 0;
        stage_converged = false;
        while in_stage < opts.stage_iterations && iterations < opts.max_iterations {
            let d = prob.direction(&t, &e);
            let slope = d.frobenius().powi(2);
            if !(slope > 0.0) {
                stage_converged = true;
                break;
            }
            let mut alpha = step.unwrap_or(1e-3 / slope.sqrt());
            let mut accepted = None;
            for _ in 0..60 {
                let trial = normalized(&t + &d.scale_real(alpha));
                let te = prob.evaluate(&trial);
                if te.objective >= e.objective + 1e-4 * alpha * slope {
                    accepted = Some((trial, te));
                    break;
                }
                alpha *= 0.5;
            }
            iterations += 1;
            in_stage += 1;
            let Some((nt, ne)) = accepted else {
                // no ascent possible at machine precision
                stage_converged = true;
                break;
            };
            let change = (ne.objective - e.objective).abs();
            let scale = ne.objective.abs().max(1.0);
            t = nt;
            e = ne;
            if opts.record_trace {
                trace.push((stage, e.objective));
            }
            step = Some(alpha * 2.0);
            if change <= opts.rel_tol * scale {
                stage_converged = true;
                break;
            }
        }
        tp_err = e.f_minus_i.max_abs();
        stage += 1;
        if !opts.trace_preserving
            || (stage_converged && tp_err <= opts.tp_tol)
            || stage >= opts.max_stages
            || iterations >= opts.max_iterations
        {
            break;
        }
        prob.weight *= opts.penalty_growth;
    }

    let raw = ProcessMatrix::hermitian(pauli, chi_of(&t))?;
    let chi = if opts.trace_preserving {
        let f = raw.tp_operator().hermitian_part();
        let s = inv_sqrt_psd(&f).map_err(|_| Error::DegenerateCounts("reconstruction annihilates some input".into()))?;
        let projected = apply_pre_post(&raw, &s, &CMat::identity(4))?;
        let entries = projected.entries().clone();
        let tr = entries.trace().re;
        ProcessMatrix::new(projected.basis().clone(), entries.scale_real(1.0 / tr))?
    } else {
        ProcessMatrix::new(raw.basis().clone(), raw.entries().clone())?
    };

    let spectrum = hermitian_eig(chi.entries())?.values;
    let mut x = vec![0.0; N_COORDS];
    chi_to_coords(chi.entries(), &mut x);
    let mut probs = vec![0.0; prob.design.n];
    prob.design.apply(&x, &mut probs);
    let log_likelihood = profiled_log_likelihood(&data.counts, &prob.exposures, &probs);
    Ok(MleReport {
        chi,
        log_likelihood,
        iterations,
        spectrum,
        converged: stage_converged,
        tp_error_before_projection: tp_err,
        stages: stage,
        trace,
    })
}

/// `Σ n ln μ − Σ μ` with `μ_s = N t_s p_s / Σ t p`.
fn profiled_log_likelihood(counts: &[u64], exposures: &[f64], probs: &[f64]) -> f64 {
    let total: f64 = counts.iter().map(|&n| n as f64).sum();
    let norm: f64 = exposures.iter().zip(probs).map(|(t, p)| t * p).sum();
    let mut l = -total;
    for ((&n, &t), &p) in counts.iter().zip(exposures).zip(probs) {
        if n > 0 {
            l += n as f64 * (total * t * p / norm).ln();
        }
    }
    l
}
