//! Bounds on the minimum error probability per gate, ε*.
//!
//! A process is split as `χ_exp = (1 − ε) χ_ideal + ε χ_gr` with `χ_gr`
//! physical; ε* is the smallest ε for which `χ_exp − (1 − ε) χ_ideal ⪰ 0`.
//! Because the ε-derivative of that matrix is `χ_ideal ⪰ 0`, its smallest
//! eigenvalue is nondecreasing in ε and ε* is found by bisection.
//!
//! `1 − F_p` is always a lower bound. Reconstructed processes are often
//! rank-deficient, which pins ε* at 1, so the upper side is estimated by
//! mixing in a known noise process of strength δ and taking the smallest
//! ε*((1 − δ)χ_exp + δχ_noise) over a δ grid (the "noise-added upper estimate").

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::basis::{gate_basis, pauli_basis, ErrorSide};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve, hermitian_eig, CMat, C64};
use crate::process::{depolarizing, process_fidelity, ProcessMatrix};

pub const PSD_TOL: f64 = 1e-9;
pub const BISECTION_TOL: f64 = 1e-9;
/// A noised process counts as full rank when its smallest eigenvalue exceeds this.
pub const RANK_FLOOR: f64 = 1e-10;
pub const UPPER_LABEL: &str = "noise-added upper estimate";

/// `χ_exp = (1 − ε) χ_ideal + ε χ_gr`.
#[derive(Clone, Debug)]
pub struct GremlinDecomposition {
    pub epsilon: f64,
    /// `None` when ε = 0 (the error process is undefined).
    pub chi_gr: Option<ProcessMatrix>,
}

impl GremlinDecomposition {
    /// `(1 − ε) χ_ideal + ε χ_gr`.
    pub fn reconstruct(&self, chi_ideal: &ProcessMatrix) -> Result<ProcessMatrix> {
        match &self.chi_gr {
            Some(gr) => chi_ideal.mix(gr, self.epsilon),
            None => Ok(chi_ideal.clone()),
        }
    }
}

/// `1 − Tr(χ_ideal χ_exp)`.
pub fn epg_lower_bound(chi_exp: &ProcessMatrix, chi_ideal: &ProcessMatrix) -> Result<f64> {
    Ok(1.0 - process_fidelity(chi_ideal, chi_exp)?)
}

fn min_eig_at(chi_exp: &CMat, chi_ideal: &CMat, eps: f64) -> f64 {
    let m = chi_exp - &chi_ideal.scale_real(1.0 - eps);
    hermitian_eig(&m).expect("difference of Hermitian matrices").min()
}

/// Smallest ε ∈ [0, 1] with `λ_min(χ_exp − (1 − ε)χ_ideal) ≥ −psd_tol`, to bisection width `tol`.
pub fn epg_min(chi_exp: &ProcessMatrix, chi_ideal: &ProcessMatrix, tol: f64) -> Result<GremlinDecomposition> {
    if !(tol > 0.0) {
        return Err(Error::OutOfRange {
            name: "tol",
            value: tol,
            range: "(0, 1)",
        });
    }
    chi_exp.same_basis(chi_ideal)?;
    chi_exp.check_physical()?;
    chi_ideal.check_physical()?;
    let (e, i) = (chi_exp.entries(), chi_ideal.entries());
    let feasible = |eps: f64| min_eig_at(e, i, eps) >= -PSD_TOL;

    if feasible(0.0) {
        return Ok(GremlinDecomposition {
            epsilon: 0.0,
            chi_gr: None,
        });
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let eps = hi;
    let residual = (e - &i.scale_real(1.0 - eps)).scale_real(1.0 / eps);
    let eig = hermitian_eig(&residual)?;
    let clipped = eig.reconstruct_with(|x| x.max(0.0));
    let tr = clipped.trace().re;
    let gr = chi_exp.with_entries(clipped.scale_real(1.0 / tr));
    Ok(GremlinDecomposition {
        epsilon: eps,
        chi_gr: Some(gr),
    })
}

/// The unitary (up to global phase) whose χ is the rank-1 `chi_ideal`.
pub fn ideal_unitary(chi_ideal: &ProcessMatrix) -> Result<CMat> {
    let eig = chi_ideal.eig();
    let n = eig.values.len();
    if !chi_ideal.is_rank_one(1e-9) {
        return Err(Error::Invalid("ideal process is not rank one".into()));
    }
    let v = eig.vector(n - 1);
    let basis = chi_ideal.basis();
    let scale = (basis.dim_hilbert() as f64).sqrt();
    let d = basis.dim_hilbert();
    let mut u = CMat::zeros(d, d);
    for (k, a) in basis.elements().iter().enumerate() {
        u = &u + &a.scale(v[k] * scale);
    }
    // remove the arbitrary eigenvector phase
    let phase = u.trace();
    if phase.norm() > 1e-12 {
        u = u.scale(phase.conj() / phase.norm());
    }
    Ok(u)
}

#[derive(Clone, Debug, PartialEq)]
pub enum NoiseKind {
    /// `χ_noise = 1/d²`.
    Depolarizing,
    /// Diagonal in the gate basis of the ideal: weight `k` on "ideal then Pauli k".
    GateBasisDiagonal(Vec<f64>),
    Custom(ProcessMatrix),
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub description: String,
}

impl PartialEq for ProcessMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.basis() == other.basis() && self.entries() == other.entries()
    }
}

impl NoiseSpec {
    pub fn depolarizing() -> Self {
        NoiseSpec {
            kind: NoiseKind::Depolarizing,
            description: "depolarizing".into(),
        }
    }

    pub fn gate_basis_diagonal(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::Invalid("noise weights must be nonnegative".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid(format!("noise weights sum to {sum}, not 1")));
        }
        Ok(NoiseSpec {
            kind: NoiseKind::GateBasisDiagonal(weights),
            description: "optimized gate-basis-diagonal".into(),
        })
    }

    pub fn custom(chi: ProcessMatrix, description: impl Into<String>) -> Result<Self> {
        chi.check_physical()?;
        Ok(NoiseSpec {
            kind: NoiseKind::Custom(chi),
            description: description.into(),
        })
    }

    pub fn label(&self) -> &str {
        &self.description
    }

    /// χ_noise expressed in the basis of `chi_ideal`.
    pub fn chi(&self, chi_ideal: &ProcessMatrix) -> Result<ProcessMatrix> {
        let basis = chi_ideal.basis();
        match &self.kind {
            NoiseKind::Depolarizing => Ok(depolarizing(basis)),
            NoiseKind::GateBasisDiagonal(w) => {
                if w.len() != basis.len() {
                    return Err(Error::DimensionMismatch {
                        expected: basis.len(),
                        got: w.len(),
                    });
                }
                let g = gate_frame(chi_ideal)?;
                let diag = ProcessMatrix::new(g, CMat::from_real_diag(w))?;
                diag.in_basis(basis)
            }
            NoiseKind::Custom(chi) => {
                chi.same_basis(chi_ideal)?;
                Ok(chi.clone())
            }
        }
    }
}

/// Gate basis aligned with the ideal process.
fn gate_frame(chi_ideal: &ProcessMatrix) -> Result<crate::basis::OperatorBasis> {
    let u = ideal_unitary(chi_ideal)?;
    let pauli = pauli_basis(chi_ideal.basis().num_qubits())?;
    gate_basis(&pauli, &u, ErrorSide::After)
}

#[derive(Clone, Debug, Serialize)]
pub struct CurvePoint {
    pub delta: f64,
    pub bound: f64,
    pub noise: String,
    pub full_rank: bool,
}

#[derive(Clone, Debug)]
pub struct EpgBounds {
    pub lower: f64,
    pub upper: f64,
    /// δ at which `upper` was attained.
    pub upper_delta: f64,
    pub curve: Vec<CurvePoint>,
    pub noise: NoiseSpec,
}

/// 40 log-spaced points on `[1e-3, 0.5]`.
pub fn default_delta_grid() -> Vec<f64> {
    log_grid(1e-3, 0.5, 40)
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if let Some(&bad) = grid.iter().find(|&&d| !(d > 0.0 && d < 1.0)) {
        return Err(Error::OutOfRange {
            name: "delta",
            value: bad,
            range: "(0, 1)",
        });
    }
    Ok(())
}

/// ε* of `(1 − δ)χ_exp + δχ_noise` and whether that mixture is full rank.
pub fn noised_bound(chi_exp: &ProcessMatrix, chi_ideal: &ProcessMatrix, chi_noise: &ProcessMatrix, delta: f64) -> Result<(f64, bool)> {
    let noised = chi_exp.mix(chi_noise, delta)?;
    let full_rank = noised.min_eigenvalue() > RANK_FLOOR;
    let d = epg_min(&noised, chi_ideal, BISECTION_TOL)?;
    Ok((d.epsilon, full_rank))
}

fn summarize(lower: f64, curve: Vec<CurvePoint>, noise: NoiseSpec) -> Result<EpgBounds> {
    let best = curve
        .iter()
        .filter(|p| p.full_rank)
        .min_by(|a, b| a.bound.total_cmp(&b.bound))
        .ok_or(Error::AllRankDeficient)?;
    Ok(EpgBounds {
        lower,
        // ε* ≥ 1 − F_p always holds, so an estimate below it carries no information
        upper: best.bound.max(lower),
        upper_delta: best.delta,
        curve,
        noise,
    })
}

/// Bound curve for a fixed noise process.
pub fn epg_upper_curve(chi_exp: &ProcessMatrix, chi_ideal: &ProcessMatrix, noise: &NoiseSpec, delta_grid: &[f64]) -> Result<EpgBounds> {
    check_grid(delta_grid)?;
    let lower = epg_lower_bound(chi_exp, chi_ideal)?;
    let chi_noise = noise.chi(chi_ideal)?;
    let curve = delta_grid
        .par_iter()
        .map(|&delta| {
            let (bound, full_rank) = noised_bound(chi_exp, chi_ideal, &chi_noise, delta)?;
            Ok(CurvePoint {
                delta,
                bound,
                noise: noise.label().to_string(),
                full_rank,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    summarize(lower, curve, noise.clone())
}

/// Bound curve with the noise re-optimized at every δ.
pub fn epg_upper_curve_optimized(
    chi_exp: &ProcessMatrix,
    chi_ideal: &ProcessMatrix,
    delta_grid: &[f64],
    opts: &NoiseSearchOptions,
) -> Result<EpgBounds> {
    check_grid(delta_grid)?;
    let lower = epg_lower_bound(chi_exp, chi_ideal)?;
    let results = delta_grid
        .par_iter()
        .map(|&delta| {
            let opt = optimize_noise_with(chi_exp, chi_ideal, delta, opts)?;
            let chi_noise = opt.noise.chi(chi_ideal)?;
            let full_rank = chi_exp.mix(&chi_noise, delta)?.min_eigenvalue() > RANK_FLOOR;
            Ok((
                CurvePoint {
                    delta,
                    bound: opt.bound,
                    noise: opt.noise.label().to_string(),
                    full_rank,
                },
                opt.noise,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let best_noise = results
        .iter()
        .filter(|(p, _)| p.full_rank)
        .min_by(|a, b| a.0.bound.total_cmp(&b.0.bound))
        .map(|(_, n)| n.clone())
        .unwrap_or_else(NoiseSpec::depolarizing);
    let curve = results.into_iter().map(|(p, _)| p).collect();
    summarize(lower, curve, best_noise)
}

#[derive(Clone, Debug)]
pub struct NoiseSearchOptions {
    pub restarts: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for NoiseSearchOptions {
    fn default() -> Self {
        NoiseSearchOptions {
            restarts: 16,
            max_iterations: 500,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct OptimizedNoise {
    pub noise: NoiseSpec,
    pub bound: f64,
    /// Depolarizing bound at the same δ.
    pub depolarizing_bound: f64,
    /// Set when the search could not beat depolarizing noise and that is returned instead.
    pub fallback: bool,
}

/// Searches gate-basis-diagonal noise for the smallest bound at `delta`.
pub fn optimize_noise(chi_exp: &ProcessMatrix, chi_ideal: &ProcessMatrix, delta: f64) -> Result<OptimizedNoise> {
    optimize_noise_with(chi_exp, chi_ideal, delta, &NoiseSearchOptions::default())
}

/// Evaluates ε* for gate-basis-diagonal noise through the Schur complement on
/// the error block: `ε = 1 − M₀₀ + b† B⁻¹ b` when `B` is positive definite.
///
/// `b† B⁻¹ b` is jointly convex in `(b, B)` and `B` is affine in the weights,
/// so ε is convex over the family and its gradient is `−δ` on the ideal
/// element and `−δ |(B⁻¹ b)_k|²` elsewhere.
struct DiagonalNoiseObjective {
    scaled: CMat,
    delta: f64,
    ideal_gate: CMat,
}

impl DiagonalNoiseObjective {
    fn new(chi_gate: &CMat, delta: f64) -> Self {
        let n = chi_gate.rows();
        let mut ideal_gate = CMat::zeros(n, n);
        ideal_gate[(0, 0)] = C64::new(1.0, 0.0);
        DiagonalNoiseObjective {
            scaled: chi_gate.scale_real(1.0 - delta),
            delta,
            ideal_gate,
        }
    }

    fn matrix(&self, w: &[f64]) -> CMat {
        let mut m = self.scaled.clone();
        for (k, &wk) in w.iter().enumerate() {
            m[(k, k)] += C64::new(self.delta * wk, 0.0);
        }
        m
    }

    /// Value and gradient; `None` when the error block is numerically singular.
    fn value_grad(&self, w: &[f64]) -> Option<(f64, Vec<f64>)> {
        let m = self.matrix(w);
        let n = m.rows();
        let block = CMat::from_fn(n - 1, n - 1, |i, j| m[(i + 1, j + 1)]);
        let scale = block.max_abs().max(1e-300);
        let l = cholesky(&block, 1e-13 * scale)?;
        let b: Vec<C64> = (1..n).map(|i| m[(i, 0)]).collect();
        let x = cholesky_solve(&l, &b);
        let q: f64 = b.iter().zip(&x).map(|(u, v)| (u.conj() * v).re).sum();
        let mut grad = Vec::with_capacity(n);
        grad.push(-self.delta);
        grad.extend(x.iter().map(|v| -self.delta * v.norm_sqr()));
        Some((1.0 - m[(0, 0)].re + q, grad))
    }

    fn value(&self, w: &[f64]) -> f64 {
        if let Some((f, _)) = self.value_grad(w) {
            return f.clamp(0.0, 1.0);
        }
        // singular error block: eigenvalue bisection
        let m = self.matrix(w);
        let feasible = |eps: f64| min_eig_at(&m, &self.ideal_gate, eps) >= -PSD_TOL;
        if feasible(0.0) {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            if feasible(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }
}

/// Smallest weight any element of the optimized noise keeps, so the noise
/// itself stays full rank.
pub const NOISE_WEIGHT_FLOOR: f64 = 1e-6;

/// Euclidean projection onto `{w ≥ floor, Σw = 1, w₀ ≤ cap}`.
fn project_capped(v: &[f64], cap: f64) -> Vec<f64> {
    let at = |tau: f64| -> Vec<f64> {
        v.iter()
            .enumerate()
            .map(|(k, &x)| {
                if k == 0 {
                    (x - tau).clamp(NOISE_WEIGHT_FLOOR, cap)
                } else {
                    (x - tau).max(NOISE_WEIGHT_FLOOR)
                }
            })
            .collect()
    };
    let total = |tau: f64| at(tau).iter().sum::<f64>();
    // Σ is nonincreasing in τ
    let mut lo = v.iter().copied().fold(f64::INFINITY, f64::min) - 2.0;
    let mut hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    let mut w = at(0.5 * (lo + hi));
    // absorb the bisection residue in the largest weight
    let excess = w.iter().sum::<f64>() - 1.0;
    let k = (1..w.len()).max_by(|&a, &b| w[a].total_cmp(&w[b])).unwrap_or(0);
    w[k] -= excess;
    w
}

/// Projected gradient descent with Armijo backtracking from `w`.
fn descend(objective: &DiagonalNoiseObjective, mut w: Vec<f64>, cap: f64, max_iterations: usize) -> (Vec<f64>, f64) {
    let Some((mut f, mut g)) = objective.value_grad(&w) else {
        return (w.clone(), objective.value(&w));
    };
    let mut t = 1.0 / g.iter().map(|x| x.abs()).fold(1e-300, f64::max);
    for _ in 0..max_iterations {
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = w.iter().zip(&g).map(|(x, d)| x - t * d).collect();
            let trial = project_capped(&trial, cap);
            let dec: f64 = g.iter().zip(trial.iter().zip(&w)).map(|(d, (a, b))| d * (a - b)).sum();
            if let Some((ft, gt)) = objective.value_grad(&trial) {
                if ft <= f + 1e-4 * dec {
                    let moved = trial.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    let gain = f - ft;
                    w = trial;
                    f = ft;
                    g = gt;
                    accepted = moved > 1e-13 && gain > 1e-15;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        t *= 2.0;
    }
    (w, f.clamp(0.0, 1.0))
}

/// The family is every gate-basis-diagonal noise whose weight on the ideal
/// element does not exceed the depolarizing share `1/d²`; the depolarizing
/// channel is its uniform member, so the result never exceeds its bound.
/// The objective is convex; restarts from random weights only guard against
/// stalls near a singular error block.
pub fn optimize_noise_with(
    chi_exp: &ProcessMatrix,
    chi_ideal: &ProcessMatrix,
    delta: f64,
    opts: &NoiseSearchOptions,
) -> Result<OptimizedNoise> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::OutOfRange {
            name: "delta",
            value: delta,
            range: "(0, 1)",
        });
    }
    chi_exp.same_basis(chi_ideal)?;
    chi_exp.check_physical()?;
    let g = gate_frame(chi_ideal)?;
    let chi_gate = chi_exp.in_basis(&g)?;
    let n = chi_gate.size();
    let cap = 1.0 / n as f64;
    let objective = DiagonalNoiseObjective::new(chi_gate.entries(), delta);

    let uniform = vec![cap; n];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best_w = uniform.clone();
    let mut best_f = objective.value(&uniform);

    for r in 0..opts.restarts.max(1) {
        let start = if r == 0 {
            uniform.clone()
        } else {
            // exponential draws give a uniform point on the simplex; keep it interior
            let mut w: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x = 0.5 * *x / s + 0.5 / n as f64);
            project_capped(&w, cap)
        };
        let (w, f) = descend(&objective, start, cap, opts.max_iterations);
        if f < best_f {
            best_f = f;
            best_w = w;
        }
    }

    let depol = NoiseSpec::depolarizing();
    let (dep_bound, _) = noised_bound(chi_exp, chi_ideal, &depol.chi(chi_ideal)?, delta)?;
    let spec = NoiseSpec::gate_basis_diagonal(best_w)?;
    let (bound, _) = noised_bound(chi_exp, chi_ideal, &spec.chi(chi_ideal)?, delta)?;
    if bound <= dep_bound + 1e-9 {
        Ok(OptimizedNoise {
            noise: spec,
            bound,
            depolarizing_bound: dep_bound,
            fallback: false,
        })
    } else {
        Ok(OptimizedNoise {
            noise: NoiseSpec::gate_basis_diagonal(uniform)?,
            bound: dep_bound,
            depolarizing_bound: dep_bound,
            fallback: true,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdSpec {
    pub name: String,
    /// Threshold, or the low end of a quoted range.
    pub epsilon_0: f64,
    /// High end of a quoted range.
    pub epsilon_0_max: Option<f64>,
    pub error_model: String,
}

impl ThresholdSpec {
    pub fn new(name: &str, epsilon_0: f64, epsilon_0_max: Option<f64>, error_model: &str) -> Result<Self> {
        let hi = epsilon_0_max.unwrap_or(epsilon_0);
        if !(epsilon_0 > 0.0 && epsilon_0 < 1.0 && hi >= epsilon_0 && hi < 1.0) {
            return Err(Error::OutOfRange {
                name: "epsilon_0",
                value: epsilon_0,
                range: "(0, 1)",
            });
        }
        Ok(ThresholdSpec {
            name: name.into(),
            epsilon_0,
            epsilon_0_max,
            error_model: error_model.into(),
        })
    }

    /// Independent random Pauli errors, 3–6% per gate.
    pub fn knill() -> Self {
        ThresholdSpec::new("Knill", 0.03, Some(0.06), "independent random Pauli errors").unwrap()
    }

    /// Adversarial independent stochastic noise, 2.73e-5.
    pub fn aliferis_gottesman_preskill() -> Self {
        ThresholdSpec::new(
            "Aliferis-Gottesman-Preskill",
            2.73e-5,
            None,
            "adversarial independent stochastic noise (any CP map)",
        )
        .unwrap()
    }

    pub fn builtin() -> Vec<Self> {
        vec![Self::knill(), Self::aliferis_gottesman_preskill()]
    }

    fn high(&self) -> f64 {
        self.epsilon_0_max.unwrap_or(self.epsilon_0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    /// Upper bound below the threshold.
    Below,
    /// Lower bound above the threshold.
    Above,
    Indeterminate,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Below => "below",
            Verdict::Above => "above",
            Verdict::Indeterminate => "indeterminate",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdVerdict {
    pub name: String,
    pub epsilon0: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon0_max: Option<f64>,
    pub verdict: Verdict,
}

pub fn verdict(lower: f64, upper: f64, t: &ThresholdSpec) -> Verdict {
    if upper < t.epsilon_0 {
        Verdict::Below
    } else if lower > t.high() {
        Verdict::Above
    } else {
        Verdict::Indeterminate
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundsReport {
    pub lower: f64,
    pub upper: f64,
    pub upper_label: String,
    pub upper_delta: f64,
    pub curve: Vec<CurvePoint>,
    pub thresholds: Vec<ThresholdVerdict>,
    /// Statistical error bars from tomography are not propagated.
    pub error_bars_propagated: bool,
}

pub fn threshold_report(bounds: &EpgBounds, thresholds: &[ThresholdSpec]) -> BoundsReport {
    BoundsReport {
        lower: bounds.lower,
        upper: bounds.upper,
        upper_label: UPPER_LABEL.into(),
        upper_delta: bounds.upper_delta,
        curve: bounds.curve.clone(),
        thresholds: thresholds
            .iter()
            .map(|t| ThresholdVerdict {
                name: t.name.clone(),
                epsilon0: t.epsilon_0,
                epsilon0_max: t.epsilon_0_max,
                verdict: verdict(bounds.lower, bounds.upper, t),
            })
            .collect(),
        error_bars_propagated: false,
    }
}

impl BoundsReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{:.1}% <= eps* <= {:.1}%  ({UPPER_LABEL}, delta = {:.3e})\n",
            100.0 * self.lower,
            100.0 * self.upper,
            self.upper_delta
        );
        for t in &self.thresholds {
            let range = match t.epsilon0_max {
                Some(hi) => format!("{}-{}", t.epsilon0, hi),
                None => format!("{}", t.epsilon0),
            };
            out.push_str(&format!("  {} (eps0 = {range}): {}\n", t.name, t.verdict));
        }
        out
    }
}

/// `delta,bound_depolarizing,bound_optimized` rows over a shared grid.
pub fn curve_csv(depolarizing: &EpgBounds, optimized: &EpgBounds) -> Result<String> {
    if depolarizing.curve.len() != optimized.curve.len() {
        return Err(Error::DimensionMismatch {
            expected: depolarizing.curve.len(),
            got: optimized.curve.len(),
        });
    }
    let mut out = String::from("delta,bound_depolarizing,bound_optimized\n");
    for (a, b) in depolarizing.curve.iter().zip(&optimized.curve) {
        out.push_str(&format!(
            "{},{},{}\n",
            crate::process::fmt_full(a.delta),
            crate::process::fmt_full(a.bound),
            crate::process::fmt_full(b.bound)
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{bit_flipped_cz, cz};
    use crate::process::{chi_of_unitary, to_gate_basis};

    fn ideal() -> ProcessMatrix {
        chi_of_unitary(&bit_flipped_cz(), &pauli_basis(2).unwrap()).unwrap()
    }

    #[test]
    fn ideal_has_zero_error() {
        let d = epg_min(&ideal(), &ideal(), BISECTION_TOL).unwrap();
        assert_eq!(d.epsilon, 0.0);
        assert!(d.chi_gr.is_none());
        assert!(epg_lower_bound(&ideal(), &ideal()).unwrap().abs() < 1e-14);
    }

    #[test]
    fn depolarized_ideal_closed_form() {
        let dep = depolarizing(ideal().basis());
        let chi = ideal().mix(&dep, 0.2).unwrap();
        let d = epg_min(&chi, &ideal(), BISECTION_TOL).unwrap();
        assert!((d.epsilon - 0.1875).abs() < 1e-8);
        let back = d.reconstruct(&ideal()).unwrap();
        assert!((back.entries() - chi.entries()).max_abs() < 1e-8);
        let gr = d.chi_gr.unwrap();
        assert!(gr.min_eigenvalue() >= -PSD_TOL);
        assert!(gr.trace_preservation_error() < 1e-8);
    }

    #[test]
    fn bad_tolerance_and_basis() {
        assert!(epg_min(&ideal(), &ideal(), 0.0).is_err());
        let g = to_gate_basis(&ideal(), &cz()).unwrap();
        assert!(matches!(epg_min(&g, &ideal(), 1e-9), Err(Error::BasisMismatch(_))));
    }

    #[test]
    fn recovers_ideal_unitary() {
        let u = ideal_unitary(&ideal()).unwrap();
        let again = chi_of_unitary(&u, ideal().basis()).unwrap();
        assert!((again.entries() - ideal().entries()).max_abs() < 1e-12);
    }

    #[test]
    fn schur_objective_matches_bisection() {
        let dep = depolarizing(ideal().basis());
        let chi = ideal().mix(&dep, 0.3).unwrap();
        let g = gate_frame(&ideal()).unwrap();
        let cg = chi.in_basis(&g).unwrap();
        let obj = DiagonalNoiseObjective::new(cg.entries(), 0.1);
        let w = vec![1.0 / 16.0; 16];
        let (b, _) = noised_bound(&chi, &ideal(), &dep, 0.1).unwrap();
        assert!((obj.value(&w) - b).abs() < 1e-8);
    }

    #[test]
    fn verdicts() {
        let knill = ThresholdSpec::knill();
        assert_eq!(verdict(0.218, 0.488, &knill), Verdict::Above);
        assert_eq!(verdict(0.0, 0.001, &ThresholdSpec::new("k", 0.03, None, "").unwrap()), Verdict::Below);
        assert_eq!(verdict(0.02, 0.10, &knill), Verdict::Indeterminate);
        assert!(ThresholdSpec::new("bad", 1.5, None, "").is_err());
    }

    #[test]
    fn grid_errors() {
        let dep = NoiseSpec::depolarizing();
        assert!(matches!(epg_upper_curve(&ideal(), &ideal(), &dep, &[]), Err(Error::EmptyGrid)));
        assert!(epg_upper_curve(&ideal(), &ideal(), &dep, &[0.0]).is_err());
        let g = default_delta_grid();
        assert_eq!(g.len(), 40);
        assert!((g[0] - 1e-3).abs() < 1e-15 && (g[39] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn all_rank_deficient_is_reported() {
        // noise with a zero weight everywhere but the ideal element cannot restore rank
        let mut w = vec![0.0; 16];
        w[0] = 1.0;
        let spec = NoiseSpec::gate_basis_diagonal(w).unwrap();
        let err = epg_upper_curve(&ideal(), &ideal(), &spec, &[0.1, 0.2]).unwrap_err();
        assert!(matches!(err, Error::AllRankDeficient));
    }
}
