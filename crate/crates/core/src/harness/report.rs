use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::{SingularSpectrum, WeylEstimate};

/// One pass/fail check inside a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub name: String,
    pub value: f64,
    /// Human-readable condition, e.g. `<= 0.03`.
    pub requirement: String,
    pub passed: bool,
}

impl Gate {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            requirement: format!("<= {limit}"),
            passed: value <= limit,
        }
    }

    pub fn below(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            requirement: format!("< {limit}"),
            passed: value < limit,
        }
    }

    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            value,
            requirement: format!("in [{lo}, {hi}]"),
            passed: lo <= value && value <= hi,
        }
    }

    pub fn holds(name: impl Into<String>, passed: bool) -> Self {
        Self {
            name: name.into(),
            value: if passed { 1.0 } else { 0.0 },
            requirement: "true".into(),
            passed,
        }
    }
}

/// A spectrum kept for CSV output.
#[derive(Clone, Debug)]
pub struct SpectrumOutput {
    pub name: String,
    pub p: f64,
    pub spectrum: SingularSpectrum,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub id: String,
    pub name: String,
    pub d: Option<usize>,
    #[serde(rename = "R")]
    pub radius: Option<f64>,
    pub coefficient: Option<f64>,
    pub spread: Option<f64>,
    pub slope: Option<f64>,
    pub reference: Option<f64>,
    pub reference_provenance: String,
    pub rel_error: Option<f64>,
    pub runtime_s: f64,
    pub window: Option<[usize; 2]>,
    pub flags: Vec<String>,
    pub gates: Vec<Gate>,
    pub passed: bool,
    pub metrics: BTreeMap<String, f64>,
    #[serde(skip)]
    pub spectra: Vec<SpectrumOutput>,
}

pub fn rel_error(value: f64, reference: f64) -> f64 {
    (value - reference).abs() / reference.abs()
}

impl Report {
    pub fn new(id: &str, name: &str, d: Option<usize>) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
            d,
            radius: None,
            coefficient: None,
            spread: None,
            slope: None,
            reference: None,
            reference_provenance: String::new(),
            rel_error: None,
            runtime_s: 0.0,
            window: None,
            flags: Vec::new(),
            gates: Vec::new(),
            passed: false,
            metrics: BTreeMap::new(),
            spectra: Vec::new(),
        }
    }

    /// A report for an experiment that could not run at all.
    pub fn failed(id: &str, name: &str, err: &Error) -> Self {
        let mut r = Self::new(id, name, None);
        r.flags.push(format!("error: {err}"));
        r.gates.push(Gate::holds("ran", false));
        r
    }

    pub fn set_estimate(&mut self, e: &WeylEstimate) {
        self.coefficient = Some(e.coefficient);
        self.spread = Some(e.spread);
        self.slope = e.slope;
        self.window = Some(e.window);
        for f in &e.flags {
            if !self.flags.contains(f) {
                self.flags.push(f.clone());
            }
        }
    }

    /// Records the reference and the relative error of the coefficient against it.
    pub fn set_reference(&mut self, reference: f64, provenance: impl Into<String>) -> Option<f64> {
        self.reference = Some(reference);
        self.reference_provenance = provenance.into();
        self.rel_error = match self.coefficient {
            Some(c) if reference > 0.0 => Some(rel_error(c, reference)),
            _ => None,
        };
        self.rel_error
    }

    /// As [`Report::set_reference`], gating the relative error at `tol`.
    pub fn check_reference(&mut self, reference: f64, provenance: impl Into<String>, tol: f64) {
        match self.set_reference(reference, provenance) {
            Some(err) => self.gates.push(Gate::at_most("rel_error", err, tol)),
            None => self.gates.push(Gate::holds("rel_error", false)),
        }
    }

    pub fn gate(&mut self, g: Gate) {
        self.gates.push(g);
    }

    pub fn metric(&mut self, key: impl Into<String>, value: f64) {
        self.metrics.insert(key.into(), value);
    }

    pub fn keep_spectrum(&mut self, name: impl Into<String>, p: f64, spectrum: SingularSpectrum) {
        self.spectra.push(SpectrumOutput {
            name: name.into(),
            p,
            spectrum,
        });
    }

    pub fn finish(&mut self) {
        self.passed = !self.gates.is_empty() && self.gates.iter().all(|g| g.passed);
    }

    pub fn failed_gates(&self) -> impl Iterator<Item = &Gate> {
        self.gates.iter().filter(|g| !g.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Writes `<name>.json` and one `<name>-<spectrum>.csv` per kept spectrum under `dir`.
pub fn emit(report: &Report, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let stem = file_stem(&report.name);
    let mut written = Vec::new();
    let json = dir.join(format!("{stem}.json"));
    write_atomic(&json, report.to_json().as_bytes())?;
    written.push(json);
    for s in &report.spectra {
        let csv = dir.join(format!("{stem}-{}.csv", file_stem(&s.name)));
        write_atomic(&csv, s.spectrum.to_csv(s.p).as_bytes())?;
        written.push(csv);
    }
    Ok(written)
}

/// Reads every `*.json` report in `dir`, sorted by file name.
pub fn load_reports(dir: &Path) -> Result<Vec<Report>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            Ok(serde_json::from_str(&text)?)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gates_and_pass_state() {
        let mut r = Report::new("E3", "E3-test", Some(2));
        r.finish();
        assert!(!r.passed, "a report without gates never passes");
        r.coefficient = Some(1.8);
        r.check_reference(1.77245, "closed form", 0.03);
        r.gate(Gate::within("slope", -0.49, -0.55, -0.45));
        r.finish();
        assert!(r.passed);
        assert!((r.rel_error.unwrap() - (1.8 - 1.77245) / 1.77245).abs() < 1e-15);
        r.gate(Gate::below("rho", 0.6, 0.5));
        r.finish();
        assert!(!r.passed);
        assert_eq!(r.failed_gates().count(), 1);
    }

    #[test]
    fn emit_writes_schema_fields() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = Report::new("E3", "E3 d2", Some(2));
        r.radius = Some(10.0);
        r.keep_spectrum("mu", 2.0, SingularSpectrum::from_values([2.0, 1.0], "x"));
        r.gate(Gate::holds("ok", true));
        r.finish();
        let files = emit(&r, dir.path()).unwrap();
        assert_eq!(files.len(), 2);
        let v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&files[0]).unwrap()).unwrap();
        for key in [
            "id",
            "d",
            "R",
            "coefficient",
            "spread",
            "slope",
            "reference",
            "reference_provenance",
            "rel_error",
            "runtime_s",
            "window",
            "flags",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert!(files[1].ends_with("E3_d2-mu.csv"));
        let back = load_reports(dir.path()).unwrap();
        assert_eq!(back.len(), 1);
        assert!(back[0].passed);
    }
}
