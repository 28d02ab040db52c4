//! Sparse multimode Fock states and linear-optical evolution.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64, ZERO};

pub const MAX_MODES: usize = 16;

pub type Occupation = [u8; MAX_MODES];

/// Ordered mode labels; gate modes first, then loss modes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModeRegistry {
    labels: Vec<String>,
    n_gate: usize,
}

pub const C_H: usize = 0;
pub const C_V: usize = 1;
pub const T_H: usize = 2;
pub const T_V: usize = 3;
pub const H_A: usize = 4;
pub const H_B: usize = 5;

/// Loss-mode slots, relative to the first loss mode.
pub(crate) const LOSS_ATT_CV: usize = 0;
pub(crate) const LOSS_ATT_TV: usize = 1;
pub(crate) const LOSS_EFF: [usize; 6] = [2, 3, 4, 5, 6, 7];

impl ModeRegistry {
    pub fn new(gate: &[&str], loss: usize) -> Result<Self> {
        let mut labels: Vec<String> = gate.iter().map(|s| s.to_string()).collect();
        labels.extend((1..=loss).map(|k| format!("l{k}")));
        if labels.len() > MAX_MODES {
            return Err(Error::Invalid(format!("{} modes exceed the limit of {MAX_MODES}", labels.len())));
        }
        let mut sorted = labels.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != labels.len() {
            return Err(Error::Invalid("mode labels must be unique".into()));
        }
        Ok(ModeRegistry {
            labels,
            n_gate: gate.len(),
        })
    }

    /// `cH, cV, tH, tV, hA, hB` and eight loss modes (two balancing attenuators, six efficiencies).
    pub fn gate() -> Self {
        ModeRegistry::new(&["cH", "cV", "tH", "tV", "hA", "hB"], 8).expect("fixed registry")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn gate_modes(&self) -> usize {
        self.n_gate
    }

    pub fn loss_mode(&self, k: usize) -> usize {
        self.n_gate + k
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// `Σ amplitude · |occupation⟩`, possibly sub-normalized.
#[derive(Clone, Debug, PartialEq)]
pub struct FockState {
    pub terms: BTreeMap<Occupation, C64>,
    pub max_total_photons: usize,
}

pub fn photons(occ: &Occupation) -> usize {
    occ.iter().map(|&n| n as usize).sum()
}

fn factorial(n: u8) -> f64 {
    (1..=n as u32).map(f64::from).product()
}

impl FockState {
    pub fn vacuum(max_total_photons: usize) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert([0; MAX_MODES], C64::new(1.0, 0.0));
        FockState {
            terms,
            max_total_photons,
        }
    }

    pub fn empty(max_total_photons: usize) -> Self {
        FockState {
            terms: BTreeMap::new(),
            max_total_photons,
        }
    }

    /// Adds `amp · |occ⟩`.
    pub fn add(&mut self, occ: Occupation, amp: C64) -> Result<()> {
        let n = photons(&occ);
        if n > self.max_total_photons {
            return Err(Error::CutoffOverflow {
                photons: n,
                cutoff: self.max_total_photons,
            });
        }
        *self.terms.entry(occ).or_insert(ZERO) += amp;
        Ok(())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn amplitude(&self, occ: &Occupation) -> C64 {
        self.terms.get(occ).copied().unwrap_or(ZERO)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Keeps only the terms satisfying `keep`.
    pub fn filter(&self, keep: impl Fn(&Occupation) -> bool) -> FockState {
        FockState {
            terms: self.terms.iter().filter(|(o, _)| keep(o)).map(|(o, a)| (*o, *a)).collect(),
            max_total_photons: self.max_total_photons,
        }
    }

    /// Total probability of the occupations satisfying `event`.
    pub fn probability(&self, event: impl Fn(&Occupation) -> bool) -> f64 {
        self.terms.iter().filter(|(o, _)| event(o)).map(|(_, a)| a.norm_sqr()).sum()
    }
}

/// Applies the linear map `a_i† ↦ Σ_j U_ji a_j†` on every mode.
///
/// Each term is expanded one creation operator at a time; monomial
/// coefficients are turned back into normalized Fock amplitudes at the end.
pub fn evolve(state: &FockState, transfer: &CMat) -> Result<FockState> {
    let m = transfer.rows();
    if m != transfer.cols() || m > MAX_MODES {
        return Err(Error::DimensionMismatch {
            expected: MAX_MODES.min(m),
            got: transfer.cols(),
        });
    }
    // nonzero entries per input column
    let columns: Vec<Vec<(usize, C64)>> = (0..m)
        .map(|i| (0..m).filter_map(|j| (transfer[(j, i)] != ZERO).then(|| (j, transfer[(j, i)]))).collect())
        .collect();

    let mut out: BTreeMap<Occupation, C64> = BTreeMap::new();
    for (occ, &amp) in &state.terms {
        if amp == ZERO {
            continue;
        }
        let n = photons(occ);
        if n > state.max_total_photons {
            return Err(Error::CutoffOverflow {
                photons: n,
                cutoff: state.max_total_photons,
            });
        }
        if let Some(i) = occ[m..].iter().position(|&k| k > 0) {
            return Err(Error::Invalid(format!("mode {} is occupied but outside the transfer", m + i)));
        }
        let mut poly: BTreeMap<Occupation, C64> = BTreeMap::new();
        poly.insert([0; MAX_MODES], C64::new(1.0, 0.0));
        for (i, &count) in occ[..m].iter().enumerate() {
            for _ in 0..count {
                let mut next: BTreeMap<Occupation, C64> = BTreeMap::new();
                for (mono, coef) in &poly {
                    for &(j, u) in &columns[i] {
                        let mut k = *mono;
                        k[j] += 1;
                        *next.entry(k).or_insert(ZERO) += coef * u;
                    }
                }
                poly = next;
            }
        }
        let inv_norm_in = 1.0 / occ.iter().map(|&k| factorial(k)).product::<f64>().sqrt();
        for (mono, coef) in poly {
            let norm_out = mono.iter().map(|&k| factorial(k)).product::<f64>().sqrt();
            *out.entry(mono).or_insert(ZERO) += amp * coef * (norm_out * inv_norm_in);
        }
    }
    out.retain(|_, a| a.norm_sqr() > 0.0);
    Ok(FockState {
        terms: out,
        max_total_photons: state.max_total_photons,
    })
}

/// Identity on `n` modes with a 2×2 block `u` acting on modes `(i, j)`.
pub fn two_mode(n: usize, i: usize, j: usize, u: [[C64; 2]; 2]) -> CMat {
    let mut m = CMat::identity(n);
    m[(i, i)] = u[0][0];
    m[(i, j)] = u[0][1];
    m[(j, i)] = u[1][0];
    m[(j, j)] = u[1][1];
    m
}

/// Beamsplitter with reflectivity `eta`: `a ↦ √η a − √(1−η) b`, `b ↦ √(1−η) a + √η b`.
pub fn beamsplitter(n: usize, a: usize, b: usize, eta: f64) -> CMat {
    let r = C64::new(eta.sqrt(), 0.0);
    let t = C64::new((1.0 - eta).sqrt(), 0.0);
    // column a is the image of a†
    two_mode(n, a, b, [[r, t], [-t, r]])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn occ(pairs: &[(usize, u8)]) -> Occupation {
        let mut o = [0; MAX_MODES];
        for &(m, k) in pairs {
            o[m] = k;
        }
        o
    }

    #[test]
    fn vacuum_is_invariant() {
        let v = FockState::vacuum(4);
        let out = evolve(&v, &beamsplitter(4, 0, 1, 0.3)).unwrap();
        assert_eq!(out, v);
    }

    #[test]
    fn single_photon_follows_column() {
        let mut s = FockState::empty(2);
        s.add(occ(&[(0, 1)]), C64::new(1.0, 0.0)).unwrap();
        let out = evolve(&s, &beamsplitter(2, 0, 1, 1.0 / 3.0)).unwrap();
        assert!((out.amplitude(&occ(&[(0, 1)])).re - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((out.amplitude(&occ(&[(1, 1)])).re + (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn hong_ou_mandel() {
        let mut s = FockState::empty(2);
        s.add(occ(&[(0, 1), (1, 1)]), C64::new(1.0, 0.0)).unwrap();
        let out = evolve(&s, &beamsplitter(2, 0, 1, 0.5)).unwrap();
        assert!(out.amplitude(&occ(&[(0, 1), (1, 1)])).norm() < 1e-15);
        assert!((out.amplitude(&occ(&[(0, 2)])).norm_sqr() - 0.5).abs() < 1e-15);
        assert!((out.norm_sqr() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cutoff_enforced() {
        let mut s = FockState::empty(1);
        assert!(matches!(
            s.add(occ(&[(0, 2)]), C64::new(1.0, 0.0)),
            Err(Error::CutoffOverflow { photons: 2, cutoff: 1 })
        ));
    }

    #[test]
    fn registry() {
        let r = ModeRegistry::gate();
        assert_eq!(r.len(), 14);
        assert_eq!(r.index("tH"), Some(T_H));
        assert_eq!(r.loss_mode(0), 6);
        assert!(ModeRegistry::new(&["a", "a"], 0).is_err());
        assert!(ModeRegistry::new(&["a"], 16).is_err());
    }
}
