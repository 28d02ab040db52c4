//! Process tomography: settings, the Born-rule forward model, synthetic
//! counts, and reconstruction (linear inversion and maximum likelihood).

mod io;
mod mle;

pub use io::{read_counts_csv, read_settings_json, settings_to_json, write_counts_csv, CountsFile};
pub use mle::{mle_reconstruct, MleOptions, MleReport};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::basis::{pauli_basis, OperatorBasis};
use crate::error::{Error, Result};
use crate::linalg::{c, CMat, C64, ZERO};
use crate::process::ProcessMatrix;

/// Single-qubit pure state as `[⟨H|ψ⟩, ⟨V|ψ⟩]`.
pub type Qubit = [C64; 2];

/// A product state on both qubits; used both for preparations and for analyzer projections.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductState {
    pub label: String,
    pub qubits: [Qubit; 2],
}

pub type PreparationSetting = ProductState;
pub type MeasurementSetting = ProductState;

#[derive(Clone, Debug, PartialEq)]
pub struct Setting {
    pub prep: PreparationSetting,
    pub meas: MeasurementSetting,
}

/// Polarization state by letter: H, V, D, A, R, L.
pub fn polarization(label: char) -> Option<Qubit> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Some(match label {
        'H' => [c(1.0, 0.0), ZERO],
        'V' => [ZERO, c(1.0, 0.0)],
        'D' => [c(h, 0.0), c(h, 0.0)],
        'A' => [c(h, 0.0), c(-h, 0.0)],
        'R' => [c(h, 0.0), c(0.0, h)],
        'L' => [c(h, 0.0), c(0.0, -h)],
        _ => return None,
    })
}

impl ProductState {
    pub fn new(label: impl Into<String>, qubits: [Qubit; 2]) -> Result<Self> {
        let label = label.into();
        for q in &qubits {
            let norm = q[0].norm_sqr() + q[1].norm_sqr();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(Error::Invalid(format!("state {label:?} is not normalized (norm² {norm})")));
            }
        }
        Ok(ProductState { label, qubits })
    }

    /// Two-letter polarization label such as `"HD"`.
    pub fn from_label(label: &str) -> Result<Self> {
        let chars: Vec<char> = label.chars().collect();
        match chars.as_slice() {
            [a, b] => match (polarization(*a), polarization(*b)) {
                (Some(x), Some(y)) => Ok(ProductState {
                    label: label.into(),
                    qubits: [x, y],
                }),
                _ => Err(Error::Invalid(format!("unknown polarization label {label:?}"))),
            },
            _ => Err(Error::Invalid(format!("state label {label:?} must have two letters"))),
        }
    }

    /// `|q₁⟩ ⊗ |q₂⟩`, qubit 1 most significant.
    pub fn vector(&self) -> [C64; 4] {
        let [a, b] = &self.qubits;
        [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]
    }
}

fn product_labels(letters: &str) -> Vec<String> {
    let mut out = Vec::new();
    for a in letters.chars() {
        for b in letters.chars() {
            out.push(format!("{a}{b}"));
        }
    }
    out
}

pub fn default_preparations() -> Vec<PreparationSetting> {
    product_labels("HVDR")
        .iter()
        .map(|l| ProductState::from_label(l).expect("fixed labels"))
        .collect()
}

pub fn default_measurements() -> Vec<MeasurementSetting> {
    product_labels("HVDARL")
        .iter()
        .map(|l| ProductState::from_label(l).expect("fixed labels"))
        .collect()
}

/// Every preparation with every analyzer, preparation-major.
pub fn settings_product(preps: &[PreparationSetting], meas: &[MeasurementSetting]) -> Vec<Setting> {
    preps
        .iter()
        .flat_map(|p| {
            meas.iter().map(move |m| Setting {
                prep: p.clone(),
                meas: m.clone(),
            })
        })
        .collect()
}

/// 16 preparations × 36 analyzers = 576 settings, starting with (HH, HH).
pub fn default_settings() -> Vec<Setting> {
    settings_product(&default_preparations(), &default_measurements())
}

/// Real coordinates of a Hermitian 16×16 χ: the diagonal, then `(Re, Im)` of each `χ_kl`, `k < l`.
pub(crate) const N_COORDS: usize = 256;
const N_OPS: usize = 16;

pub(crate) fn chi_to_coords(chi: &CMat, out: &mut [f64]) {
    for k in 0..N_OPS {
        out[k] = chi[(k, k)].re;
    }
    let mut i = N_OPS;
    for k in 0..N_OPS {
        for l in k + 1..N_OPS {
            let z = chi[(k, l)];
            out[i] = z.re;
            out[i + 1] = z.im;
            i += 2;
        }
    }
}

pub(crate) fn coords_to_chi(x: &[f64]) -> CMat {
    let mut m = CMat::zeros(N_OPS, N_OPS);
    for k in 0..N_OPS {
        m[(k, k)] = c(x[k], 0.0);
    }
    let mut i = N_OPS;
    for k in 0..N_OPS {
        for l in k + 1..N_OPS {
            m[(k, l)] = c(x[i], x[i + 1]);
            m[(l, k)] = c(x[i], -x[i + 1]);
            i += 2;
        }
    }
    m
}

/// Hermitian `G` with `Tr(G dχ) = Σ g_i dx_i`.
pub(crate) fn coords_gradient_to_matrix(g: &[f64]) -> CMat {
    let mut m = CMat::zeros(N_OPS, N_OPS);
    for k in 0..N_OPS {
        m[(k, k)] = c(g[k], 0.0);
    }
    let mut i = N_OPS;
    for k in 0..N_OPS {
        for l in k + 1..N_OPS {
            let z = c(0.5 * g[i], 0.5 * g[i + 1]);
            m[(k, l)] = z;
            m[(l, k)] = z.conj();
            i += 2;
        }
    }
    m
}

/// Linear map from χ coordinates to setting probabilities, one row per setting.
#[derive(Clone, Debug)]
pub(crate) struct Design {
    pub rows: Vec<f64>,
    pub n: usize,
}

impl Design {
    pub fn new(settings: &[Setting], basis: &OperatorBasis) -> Self {
        let d = basis.dim_hilbert() as f64;
        let rows: Vec<f64> = settings
            .par_iter()
            .flat_map_iter(|s| {
                let psi = s.prep.vector();
                let m = s.meas.vector();
                // h_k = conj(⟨m|A_k|ψ⟩)
                let h: Vec<C64> = basis
                    .elements()
                    .iter()
                    .map(|a| {
                        let apsi = a.mul_vec(&psi);
                        m.iter().zip(&apsi).map(|(mi, ai)| mi.conj() * ai).sum::<C64>().conj()
                    })
                    .collect();
                let mut row = vec![0.0; N_COORDS];
                for k in 0..N_OPS {
                    row[k] = d * h[k].norm_sqr();
                }
                let mut i = N_OPS;
                for k in 0..N_OPS {
                    for l in k + 1..N_OPS {
                        let z = h[k].conj() * h[l];
                        row[i] = 2.0 * d * z.re;
                        row[i + 1] = -2.0 * d * z.im;
                        i += 2;
                    }
                }
                row
            })
            .collect();
        Design {
            n: settings.len(),
            rows,
        }
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.rows[s * N_COORDS..(s + 1) * N_COORDS]
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (s, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(s), x);
        }
    }

    /// `out = Aᵀ w`.
    pub fn apply_transpose(&self, w: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (s, &ws) in w.iter().enumerate() {
            if ws == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(s)) {
                *o += ws * a;
            }
        }
    }

    /// `AᵀA`, row-major.
    pub fn gram(&self) -> Vec<f64> {
        let mut g = vec![0.0; N_COORDS * N_COORDS];
        for s in 0..self.n {
            let r = self.row(s);
            for i in 0..N_COORDS {
                if r[i] == 0.0 {
                    continue;
                }
                let gi = &mut g[i * N_COORDS..(i + 1) * N_COORDS];
                for (gij, rj) in gi.iter_mut().zip(r) {
                    *gij += r[i] * rj;
                }
            }
        }
        g
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Numerical rank of a symmetric PSD matrix by fully pivoted elimination.
pub(crate) fn psd_rank(a: &[f64], n: usize) -> usize {
    let mut m = a.to_vec();
    let scale = (0..n).fold(0.0f64, |s, i| s.max(m[i * n + i]));
    let mut active: Vec<usize> = (0..n).collect();
    let mut rank = 0;
    while !active.is_empty() {
        let (pos, &p) = active
            .iter()
            .enumerate()
            .max_by(|a, b| m[a.1 * n + a.1].total_cmp(&m[b.1 * n + b.1]))
            .unwrap();
        let piv = m[p * n + p];
        if !(piv > 1e-10 * scale) {
            break;
        }
        rank += 1;
        active.swap_remove(pos);
        for &i in &active {
            let f = m[i * n + p] / piv;
            for &j in &active {
                m[i * n + j] -= f * m[p * n + j];
            }
        }
    }
    rank
}

fn two_qubit_pauli() -> OperatorBasis {
    pauli_basis(2).expect("two qubits are supported")
}

fn check_two_qubit(chi: &ProcessMatrix) -> Result<()> {
    if chi.basis().dim_hilbert() != 4 {
        return Err(Error::UnsupportedQubits(chi.basis().num_qubits()));
    }
    Ok(())
}

/// `Tr[Π_m Λ(ρ_prep)]` for every setting.
pub fn predicted_probabilities(chi: &ProcessMatrix, settings: &[Setting]) -> Result<Vec<f64>> {
    check_two_qubit(chi)?;
    let pauli = two_qubit_pauli();
    let chi_p = chi.in_basis(&pauli)?;
    let mut x = vec![0.0; N_COORDS];
    chi_to_coords(chi_p.entries(), &mut x);
    let design = Design::new(settings, &pauli);
    Ok((0..settings.len()).into_par_iter().map(|s| dot(design.row(s), &x)).collect())
}

/// Observed coincidences per setting.
#[derive(Clone, Debug)]
pub struct TomographyDataset {
    pub settings: Vec<Setting>,
    pub counts: Vec<u64>,
    /// Integration time per setting (s).
    pub durations: Option<Vec<f64>>,
    /// Relative normalization per setting (e.g. singles-derived).
    pub total_per_setting: Option<Vec<f64>>,
}

impl TomographyDataset {
    pub fn new(settings: Vec<Setting>, counts: Vec<u64>) -> Result<Self> {
        if settings.len() != counts.len() {
            return Err(Error::DimensionMismatch {
                expected: settings.len(),
                got: counts.len(),
            });
        }
        Ok(TomographyDataset {
            settings,
            counts,
            durations: None,
            total_per_setting: None,
        })
    }

    pub fn with_durations(mut self, durations: Vec<f64>) -> Result<Self> {
        check_exposure(&durations, self.counts.len(), "duration")?;
        self.durations = Some(durations);
        Ok(self)
    }

    pub fn with_totals(mut self, totals: Vec<f64>) -> Result<Self> {
        check_exposure(&totals, self.counts.len(), "total_per_setting")?;
        self.total_per_setting = Some(totals);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Relative exposure `t_s`: duration × normalization, each defaulting to 1.
    pub fn exposures(&self) -> Vec<f64> {
        (0..self.len())
            .map(|s| {
                self.durations.as_ref().map_or(1.0, |d| d[s]) * self.total_per_setting.as_ref().map_or(1.0, |t| t[s])
            })
            .collect()
    }

    pub fn total_counts(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Counts `round(scale · p)`, for noiseless large-count studies.
    pub fn from_probabilities(settings: Vec<Setting>, probabilities: &[f64], scale: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::OutOfRange {
                name: "scale",
                value: scale,
                range: "(0, inf)",
            });
        }
        let counts = probabilities.iter().map(|&p| (scale * p.max(0.0)).round() as u64).collect();
        TomographyDataset::new(settings, counts)
    }
}

fn check_exposure(v: &[f64], n: usize, what: &str) -> Result<()> {
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: v.len(),
        });
    }
    if v.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::Invalid(format!("{what} values must be positive and finite")));
    }
    Ok(())
}

/// Independent Poisson draws with mean `mean_total · p` (negative p treated as 0).
pub fn sample_counts(probabilities: &[f64], mean_total: f64, seed: u64) -> Result<Vec<u64>> {
    if !(mean_total > 0.0 && mean_total.is_finite()) {
        return Err(Error::OutOfRange {
            name: "mean_total",
            value: mean_total,
            range: "(0, inf)",
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    probabilities
        .iter()
        .map(|&p| {
            let mean = mean_total * p.max(0.0);
            if mean == 0.0 {
                return Ok(0);
            }
            let dist = Poisson::new(mean).map_err(|e| Error::Invalid(format!("poisson mean {mean}: {e}")))?;
            Ok(dist.sample(&mut rng) as u64)
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct LinearInversion {
    /// Hermitian, unit trace; may have negative eigenvalues.
    pub chi: ProcessMatrix,
    pub psd: bool,
    pub min_eigenvalue: f64,
}

fn frequencies(data: &TomographyDataset) -> Result<Vec<f64>> {
    if data.is_empty() {
        return Err(Error::DegenerateCounts("no settings".into()));
    }
    if data.total_counts() == 0 {
        return Err(Error::DegenerateCounts("all counts are zero".into()));
    }
    Ok(data
        .counts
        .iter()
        .zip(data.exposures())
        .map(|(&n, t)| n as f64 / t)
        .collect())
}

/// Least-squares solution of the Born-rule system, normalized to unit trace.
pub fn linear_inversion(data: &TomographyDataset) -> Result<LinearInversion> {
    let f = frequencies(data)?;
    let pauli = two_qubit_pauli();
    let design = Design::new(&data.settings, &pauli);
    let gram = design.gram();
    let mut rhs = vec![0.0; N_COORDS];
    design.apply_transpose(&f, &mut rhs);
    let x = crate::linalg::solve_spd_real(&gram, N_COORDS, &rhs).ok_or_else(|| Error::RankDeficientDesign {
        rank: psd_rank(&gram, N_COORDS),
        needed: N_COORDS,
    })?;
    let chi = coords_to_chi(&x);
    let tr = chi.trace().re;
    if !(tr > 0.0) {
        return Err(Error::DegenerateCounts(format!("linear inversion trace {tr}")));
    }
    let chi = ProcessMatrix::hermitian(pauli, chi.scale_real(1.0 / tr))?;
    let min = chi.min_eigenvalue();
    Ok(LinearInversion {
        psd: min >= -chi.psd_tol(),
        min_eigenvalue: min,
        chi,
    })
}

/// Rank of the 256-column design for a setting list.
pub fn design_rank(settings: &[Setting]) -> usize {
    let design = Design::new(settings, &two_qubit_pauli());
    psd_rank(&design.gram(), N_COORDS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::bit_flipped_cz;
    use crate::process::{chi_of_unitary, depolarizing};

    fn ideal() -> ProcessMatrix {
        chi_of_unitary(&bit_flipped_cz(), &two_qubit_pauli()).unwrap()
    }

    #[test]
    fn default_set_shape_and_order() {
        let s = default_settings();
        assert_eq!(s.len(), 576);
        assert_eq!((s[0].prep.label.as_str(), s[0].meas.label.as_str()), ("HH", "HH"));
        assert_eq!((s[1].prep.label.as_str(), s[1].meas.label.as_str()), ("HH", "HV"));
        assert_eq!(s[36].prep.label, "HV");
    }

    #[test]
    fn informationally_complete() {
        assert_eq!(design_rank(&default_settings()), 256);
        let few: Vec<Setting> = default_settings().into_iter().take(100).collect();
        assert!(design_rank(&few) < 256);
    }

    #[test]
    fn computational_populations_preserved() {
        let p = predicted_probabilities(&ideal(), &default_settings()).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12);
        assert!(p[1].abs() < 1e-12);
    }

    #[test]
    fn orthogonal_analyzer() {
        let id = chi_of_unitary(&CMat::identity(4), &two_qubit_pauli()).unwrap();
        let s = Setting {
            prep: ProductState::from_label("HD").unwrap(),
            meas: ProductState::from_label("HA").unwrap(),
        };
        assert!(predicted_probabilities(&id, &[s]).unwrap()[0].abs() < 1e-14);
    }

    #[test]
    fn sampling() {
        let c = sample_counts(&[0.0, 1.0, -1e-17], 1e6, 3).unwrap();
        assert_eq!(c[0], 0);
        assert_eq!(c[2], 0);
        assert!((c[1] as f64 - 1e6).abs() < 5e3);
        assert_eq!(c, sample_counts(&[0.0, 1.0, -1e-17], 1e6, 3).unwrap());
        assert!(sample_counts(&[0.5], 0.0, 1).is_err());
    }

    #[test]
    fn linear_inversion_round_trip() {
        let chi = ideal().mix(&depolarizing(&two_qubit_pauli()), 0.13).unwrap();
        let settings = default_settings();
        let p = predicted_probabilities(&chi, &settings).unwrap();
        // exact frequencies via a large integer scale
        let data = TomographyDataset::from_probabilities(settings, &p, 1e14).unwrap();
        let li = linear_inversion(&data).unwrap();
        assert!((li.chi.entries() - chi.entries()).max_abs() < 1e-8);
        assert!(li.psd);
    }

    #[test]
    fn zero_counts_rejected() {
        let s = default_settings();
        let n = s.len();
        let data = TomographyDataset::new(s, vec![0; n]).unwrap();
        assert!(matches!(linear_inversion(&data), Err(Error::DegenerateCounts(_))));
    }

    #[test]
    fn coordinate_round_trip() {
        let chi = ideal().mix(&depolarizing(&two_qubit_pauli()), 0.3).unwrap();
        let mut x = vec![0.0; N_COORDS];
        chi_to_coords(chi.entries(), &mut x);
        assert!((&coords_to_chi(&x) - chi.entries()).max_abs() < 1e-15);
    }
}
