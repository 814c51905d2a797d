//! Dataset directory format: `manifest.json` plus one CSV per trial.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    DataError, Dataset, GaitTrial, JointSeries, MuscleParams, MuscleSeries, Subject,
    TrialCondition, Violation,
};

pub const MANIFEST_FILE: &str = "manifest.json";
const FORMAT_TAG: &str = "metacost-dataset/1";

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: String,
    grid: usize,
    muscles: Vec<String>,
    joints: Vec<String>,
    subjects: Vec<Subject>,
    trials: Vec<TrialEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TrialEntry {
    id: String,
    subject: String,
    speed: f64,
    incline: f64,
    duration: f64,
    measured_cost: f64,
    file: String,
    /// One entry per muscle, in manifest muscle order.
    muscle_params: Vec<MuscleParams>,
}

const MUSCLE_COLUMNS: [&str; 4] = ["a", "e", "lce", "vce"];
const JOINT_COLUMNS: [&str; 4] = ["q", "qdot", "qddot", "M"];

fn header(muscles: &[String], joints: &[String]) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for m in muscles {
        h.extend(MUSCLE_COLUMNS.iter().map(|c| format!("{m}.{c}")));
    }
    for j in joints {
        h.extend(JOINT_COLUMNS.iter().map(|c| format!("{j}.{c}")));
    }
    h
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DataError + '_ {
    move |source| DataError::Io { path: path.to_path_buf(), source }
}

/// Writes `ds` as a dataset directory rooted at `dir`.
///
/// Floats are printed in shortest round-trip form, so loading the result
/// reproduces every numeric field bit-exactly.
pub fn write_dataset(ds: &Dataset, dir: &Path) -> Result<(), DataError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut subjects: Vec<Subject> = Vec::new();
    let mut entries = Vec::with_capacity(ds.trials.len());
    for t in &ds.trials {
        if !subjects.iter().any(|s| s.id == t.subject.id) {
            subjects.push(t.subject.clone());
        }
        let file = format!("{}.csv", t.id);
        write_trial_csv(t, &ds.muscle_names, &ds.joint_names, &dir.join(&file))?;
        entries.push(TrialEntry {
            id: t.id.clone(),
            subject: t.subject.id.clone(),
            speed: t.condition.speed,
            incline: t.condition.incline,
            duration: t.duration,
            measured_cost: t.measured_cost,
            file,
            muscle_params: t.muscles.iter().map(|m| m.params).collect(),
        });
    }
    let manifest = Manifest {
        format: FORMAT_TAG.into(),
        grid: ds.grid,
        muscles: ds.muscle_names.clone(),
        joints: ds.joint_names.clone(),
        subjects,
        trials: entries,
    };
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text).map_err(io_err(&path))
}

fn write_trial_csv(t: &GaitTrial, muscles: &[String], joints: &[String], path: &Path) -> Result<(), DataError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    w.write_record(header(muscles, joints)).map_err(|e| csv_io(path, e))?;
    let dt = t.dt();
    let mut row = Vec::new();
    for k in 0..t.grid {
        row.clear();
        row.push((k as f64 * dt).to_string());
        for m in &t.muscles {
            for s in [&m.act, &m.stim, &m.lce, &m.vce] {
                row.push(s[k].to_string());
            }
        }
        for j in &t.joints {
            for s in [&j.q, &j.qdot, &j.qddot, &j.moment] {
                row.push(s[k].to_string());
            }
        }
        w.write_record(&row).map_err(|e| csv_io(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

fn csv_io(path: &Path, e: csv::Error) -> DataError {
    let source = match e.into_kind() {
        csv::ErrorKind::Io(err) => err,
        other => std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{other:?}")),
    };
    DataError::Io { path: path.to_path_buf(), source }
}

/// Loads and validates a dataset directory (or a path to its manifest).
///
/// Series whose row count differs from the manifest grid are resampled onto
/// it by periodic linear interpolation.
pub fn load_dataset(path: &Path) -> Result<Dataset, DataError> {
    let (dir, manifest_path) = if path.is_dir() {
        (path.to_path_buf(), path.join(MANIFEST_FILE))
    } else {
        (path.parent().map(Path::to_path_buf).unwrap_or_default(), path.to_path_buf())
    };
    let text = fs::read_to_string(&manifest_path).map_err(io_err(&manifest_path))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| DataError::Manifest {
        path: manifest_path.clone(),
        message: e.to_string(),
    })?;
    if manifest.format != FORMAT_TAG {
        return Err(DataError::Manifest {
            path: manifest_path,
            message: format!("unsupported format tag {:?}", manifest.format),
        });
    }
    if manifest.trials.is_empty() {
        return Err(DataError::Empty);
    }

    let mut violations = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for s in &manifest.subjects {
        if !seen.insert(s.id.as_str()) {
            violations.push(Violation::new(None, "subjects".into(), None, format!("duplicate subject id {}", s.id)));
        }
    }

    let mut trials = Vec::with_capacity(manifest.trials.len());
    for entry in &manifest.trials {
        let Some(subject) = manifest.subjects.iter().find(|s| s.id == entry.subject) else {
            violations.push(Violation::new(
                Some(&entry.id),
                "subject".into(),
                None,
                format!("unknown subject {}", entry.subject),
            ));
            continue;
        };
        if entry.muscle_params.len() != manifest.muscles.len() {
            violations.push(Violation::new(
                Some(&entry.id),
                "muscle_params".into(),
                None,
                format!("{} entries for {} muscles", entry.muscle_params.len(), manifest.muscles.len()),
            ));
            continue;
        }
        match read_trial_csv(&dir.join(&entry.file), entry, &manifest, subject)? {
            Ok(trial) => trials.push(trial),
            Err(v) => violations.extend(v),
        }
    }
    let ds = Dataset {
        grid: manifest.grid,
        muscle_names: manifest.muscles,
        joint_names: manifest.joints,
        trials,
    };
    if !ds.trials.is_empty() {
        violations.extend(ds.violations());
    }
    if violations.is_empty() {
        Ok(ds)
    } else {
        Err(DataError::Invalid(violations))
    }
}

type TrialResult = Result<GaitTrial, Vec<Violation>>;

fn read_trial_csv(path: &Path, entry: &TrialEntry, manifest: &Manifest, subject: &Subject) -> Result<TrialResult, DataError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let expected = header(&manifest.muscles, &manifest.joints);
    let found: Vec<String> = reader
        .headers()
        .map_err(|e| csv_io(path, e))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    let trial_id = Some(entry.id.as_str());
    if found != expected {
        let missing: Vec<&String> = expected.iter().filter(|c| !found.contains(c)).collect();
        let message = if missing.is_empty() {
            "header columns out of order or unexpected".to_string()
        } else {
            format!("missing columns {missing:?}")
        };
        return Ok(Err(vec![Violation::new(trial_id, "header".into(), None, message)]));
    }
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); expected.len()];
    let mut violations = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_io(path, e))?;
        if record.len() != expected.len() {
            violations.push(Violation::new(trial_id, "row".into(), Some(row), format!("{} fields, expected {}", record.len(), expected.len())));
            continue;
        }
        for (c, field) in record.iter().enumerate() {
            match field.trim().parse::<f64>() {
                Ok(v) => columns[c].push(v),
                Err(_) => violations.push(Violation::new(trial_id, expected[c].clone(), Some(row), format!("not a number: {field:?}"))),
            }
        }
    }
    if !violations.is_empty() {
        return Ok(Err(violations));
    }
    let rows = columns[0].len();
    if rows < 2 {
        return Ok(Err(vec![Violation::new(trial_id, "rows".into(), None, format!("{rows} rows, need at least 2"))]));
    }
    let grid = manifest.grid;
    let mut take = |c: usize| -> Vec<f64> {
        let col = std::mem::take(&mut columns[c]);
        if rows == grid { col } else { resample_periodic(&col, grid) }
    };
    let mut muscles = Vec::with_capacity(manifest.muscles.len());
    for (i, name) in manifest.muscles.iter().enumerate() {
        let base = 1 + 4 * i;
        muscles.push(MuscleSeries {
            name: name.clone(),
            params: entry.muscle_params[i],
            act: take(base),
            stim: take(base + 1),
            lce: take(base + 2),
            vce: take(base + 3),
        });
    }
    let offset = 1 + 4 * manifest.muscles.len();
    let mut joints = Vec::with_capacity(manifest.joints.len());
    for (i, name) in manifest.joints.iter().enumerate() {
        let base = offset + 4 * i;
        joints.push(JointSeries {
            name: name.clone(),
            q: take(base),
            qdot: take(base + 1),
            qddot: take(base + 2),
            moment: take(base + 3),
        });
    }
    Ok(Ok(GaitTrial {
        id: entry.id.clone(),
        subject: subject.clone(),
        condition: TrialCondition { speed: entry.speed, incline: entry.incline },
        duration: entry.duration,
        grid,
        muscles,
        joints,
        measured_cost: entry.measured_cost,
    }))
}

/// Resamples one gait-cycle series onto `grid` points by linear
/// interpolation, treating the series as periodic over the cycle.
///
/// A series that already has `grid` samples is returned unchanged.
pub fn resample_periodic(series: &[f64], grid: usize) -> Vec<f64> {
    let n = series.len();
    if n == grid || n == 0 {
        return series.to_vec();
    }
    (0..grid)
        .map(|k| {
            let x = k as f64 * n as f64 / grid as f64;
            let lo = x.floor() as usize % n;
            let frac = x - x.floor();
            let hi = (lo + 1) % n;
            if frac == 0.0 {
                series[lo]
            } else {
                series[lo] + frac * (series[hi] - series[lo])
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resample_identity_on_same_grid() {
        let s: Vec<f64> = (0..100).map(|k| (k as f64 * 0.37).sin()).collect();
        assert_eq!(resample_periodic(&s, 100), s);
    }

    #[test]
    fn resample_halves_and_doubles() {
        let s = vec![0.0, 1.0, 2.0, 3.0];
        assert_eq!(resample_periodic(&s, 8), vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 1.5]);
        assert_eq!(resample_periodic(&s, 2), vec![0.0, 2.0]);
    }

    #[test]
    fn header_layout() {
        let h = header(&["sol".into()], &["ankle".into()]);
        assert_eq!(
            h,
            vec!["t", "sol.a", "sol.e", "sol.lce", "sol.vce", "ankle.q", "ankle.qdot", "ankle.qddot", "ankle.M"]
        );
    }
}
