//! Counts CSV and settings JSON.
//!
//! Counts: `prep_label,meas_label,counts[,duration_s]`. Settings: explicit
//! per-qubit amplitudes, `{"preparations": [{"label", "qubits": [[[re, im],
//! [re, im]], …]}], "measurements": […]}`; the setting list is every
//! preparation with every measurement, preparation-major.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::c;
use crate::process::fmt_full;

use super::{settings_product, ProductState, Qubit, Setting, TomographyDataset};

#[derive(Serialize, Deserialize)]
struct StateJson {
    label: String,
    qubits: [[[f64; 2]; 2]; 2],
}

#[derive(Serialize, Deserialize)]
struct SettingsJson {
    preparations: Vec<StateJson>,
    measurements: Vec<StateJson>,
}

fn state_from_json(s: &StateJson) -> Result<ProductState> {
    let q = |k: usize| -> Qubit { [c(s.qubits[k][0][0], s.qubits[k][0][1]), c(s.qubits[k][1][0], s.qubits[k][1][1])] };
    ProductState::new(s.label.clone(), [q(0), q(1)])
}

fn state_to_json(s: &ProductState) -> StateJson {
    let q = |k: usize| [[s.qubits[k][0].re, s.qubits[k][0].im], [s.qubits[k][1].re, s.qubits[k][1].im]];
    StateJson {
        label: s.label.clone(),
        qubits: [q(0), q(1)],
    }
}

pub fn read_settings_json(path: impl AsRef<Path>) -> Result<Vec<Setting>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw: SettingsJson = serde_json::from_str(&text)?;
    let preps = raw.preparations.iter().map(state_from_json).collect::<Result<Vec<_>>>()?;
    let meas = raw.measurements.iter().map(state_from_json).collect::<Result<Vec<_>>>()?;
    if preps.is_empty() || meas.is_empty() {
        return Err(Error::Invalid("settings file lists no preparations or measurements".into()));
    }
    Ok(settings_product(&preps, &meas))
}

/// Inverse of [`read_settings_json`] for product-structured setting lists.
pub fn settings_to_json(preps: &[ProductState], meas: &[ProductState]) -> Result<String> {
    let raw = SettingsJson {
        preparations: preps.iter().map(state_to_json).collect(),
        measurements: meas.iter().map(state_to_json).collect(),
    };
    Ok(serde_json::to_string_pretty(&raw)? + "\n")
}

#[derive(Deserialize)]
struct CountsRow {
    prep_label: String,
    meas_label: String,
    counts: u64,
    #[serde(default)]
    duration_s: Option<f64>,
}

#[derive(Debug)]
pub struct CountsFile {
    pub dataset: TomographyDataset,
    /// Human-readable notes about duplicated or missing rows.
    pub warnings: Vec<String>,
}

/// Reads counts against a setting list. Repeated `(prep, meas)` rows are
/// summed (durations too); settings absent from the file are left out.
pub fn read_counts_csv(path: impl AsRef<Path>, settings: &[Setting]) -> Result<CountsFile> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_counts(file, settings)
}

fn csv_reason(e: &csv::Error) -> String {
    match e.kind() {
        csv::ErrorKind::Deserialize { err, .. } => match err.field() {
            Some(f) => format!("column {}: {}", f + 1, err.kind()),
            None => err.kind().to_string(),
        },
        _ => e.to_string(),
    }
}

pub(crate) fn read_counts(reader: impl std::io::Read, settings: &[Setting]) -> Result<CountsFile> {
    let index: HashMap<(&str, &str), usize> = settings
        .iter()
        .enumerate()
        .map(|(i, s)| ((s.prep.label.as_str(), s.meas.label.as_str()), i))
        .collect();
    let mut counts: Vec<Option<u64>> = vec![None; settings.len()];
    let mut durations: Vec<f64> = vec![0.0; settings.len()];
    let mut any_duration = false;
    let mut all_duration = true;
    let mut duplicates = 0usize;

    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    for (line, row) in rdr.deserialize::<CountsRow>().enumerate() {
        let row = row.map_err(|e| Error::Invalid(format!("row {}: {}", line + 2, csv_reason(&e))))?;
        let &i = index
            .get(&(row.prep_label.as_str(), row.meas_label.as_str()))
            .ok_or_else(|| {
                Error::Invalid(format!(
                    "row {}: unknown setting ({}, {})",
                    line + 2,
                    row.prep_label,
                    row.meas_label
                ))
            })?;
        match row.duration_s {
            Some(d) if !(d > 0.0 && d.is_finite()) => {
                return Err(Error::Invalid(format!("row {}: duration must be positive", line + 2)));
            }
            Some(d) => {
                any_duration = true;
                durations[i] += d;
            }
            None => all_duration = false,
        }
        counts[i] = Some(match counts[i] {
            Some(prev) => {
                duplicates += 1;
                prev + row.counts
            }
            None => row.counts,
        });
    }
    if any_duration && !all_duration {
        return Err(Error::Invalid("duration_s must be given on every row or none".into()));
    }

    let mut warnings = Vec::new();
    if duplicates > 0 {
        warnings.push(format!("{duplicates} duplicate setting rows; their counts were summed"));
    }
    let missing = counts.iter().filter(|c| c.is_none()).count();
    if missing > 0 {
        warnings.push(format!("{missing} settings have no counts and were left out"));
    }
    let mut kept_settings = Vec::new();
    let mut kept_counts = Vec::new();
    let mut kept_durations = Vec::new();
    for (i, n) in counts.iter().enumerate() {
        if let Some(n) = n {
            kept_settings.push(settings[i].clone());
            kept_counts.push(*n);
            kept_durations.push(durations[i]);
        }
    }
    if kept_counts.is_empty() {
        return Err(Error::DegenerateCounts("counts file has no rows".into()));
    }
    let mut dataset = TomographyDataset::new(kept_settings, kept_counts)?;
    if any_duration {
        dataset = dataset.with_durations(kept_durations)?;
    }
    Ok(CountsFile { dataset, warnings })
}

pub(crate) fn counts_csv(data: &TomographyDataset) -> String {
    let mut out = String::from("prep_label,meas_label,counts");
    if data.durations.is_some() {
        out.push_str(",duration_s");
    }
    out.push('\n');
    for (i, s) in data.settings.iter().enumerate() {
        out.push_str(&format!("{},{},{}", s.prep.label, s.meas.label, data.counts[i]));
        if let Some(d) = &data.durations {
            out.push(',');
            out.push_str(&fmt_full(d[i]));
        }
        out.push('\n');
    }
    out
}

pub fn write_counts_csv(path: impl AsRef<Path>, data: &TomographyDataset) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, counts_csv(data)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tomography::{default_measurements, default_preparations, default_settings};

    #[test]
    fn duplicates_summed() {
        let csv = "prep_label,meas_label,counts\nHH,HH,5\nHH,HV,1\nHH,HH,7\n";
        let f = read_counts(csv.as_bytes(), &default_settings()).unwrap();
        assert_eq!(f.dataset.counts, vec![12, 1]);
        assert_eq!(f.warnings.len(), 2);
    }

    #[test]
    fn unknown_label_and_bad_rows() {
        let s = default_settings();
        assert!(read_counts("prep_label,meas_label,counts\nXX,HH,1\n".as_bytes(), &s).is_err());
        assert!(read_counts("prep_label,meas_label,counts\nHH,HH,-1\n".as_bytes(), &s).is_err());
        assert!(read_counts("prep_label,meas_label,counts\n".as_bytes(), &s).is_err());
    }

    #[test]
    fn csv_round_trip_with_durations() {
        let s: Vec<Setting> = default_settings().into_iter().take(3).collect();
        let d = TomographyDataset::new(s.clone(), vec![3, 0, 9])
            .unwrap()
            .with_durations(vec![1.0, 2.5, 0.5])
            .unwrap();
        let f = read_counts(counts_csv(&d).as_bytes(), &s).unwrap();
        assert_eq!(f.dataset.counts, d.counts);
        assert_eq!(f.dataset.durations, d.durations);
        assert!(f.warnings.is_empty());
    }

    #[test]
    fn settings_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("settings.json");
        std::fs::write(&path, settings_to_json(&default_preparations(), &default_measurements()).unwrap()).unwrap();
        assert_eq!(read_settings_json(&path).unwrap(), default_settings());
    }
}
