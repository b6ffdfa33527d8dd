//! JSON and CSV artifacts.
//!
//! JSON documents carry `schema_version`, `kind` and a `provenance` block
//! (system spec with grid, truncation, tolerances, generator). Output is
//! canonical: object keys sorted, floats written with 17 significant
//! digits, non-finite floats as `null`. CSV files have a header row and a
//! fixed column order starting with the abscissa.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::coherent::{CoherentState, DivergenceWitness};
use crate::error::{Error, Result};
use crate::painleve::PainleveSolution;
use crate::susy::{build_system, SusySystem, SystemSpec};
use crate::verify::Report;

pub const SCHEMA_VERSION: u32 = 1;

pub const GENERATOR: &str = concat!("pivcs ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: String,
    pub spec: SystemSpec,
    pub n_max: usize,
    pub tolerances: BTreeMap<String, f64>,
}

impl Provenance {
    pub fn new(spec: &SystemSpec, n_max: usize) -> Self {
        Self {
            generator: GENERATOR.to_string(),
            spec: *spec,
            n_max,
            tolerances: BTreeMap::new(),
        }
    }

    pub fn with_tolerance(mut self, name: &str, value: f64) -> Self {
        self.tolerances.insert(name.to_string(), value);
        self
    }
}

/// A built system as stored on disk. Loading rebuilds the eigenfunctions
/// from the spec and checks them against the stored spectrum and potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemDocument {
    pub schema_version: u32,
    pub kind: String,
    pub provenance: Provenance,
    /// New levels then the first iso levels.
    pub spectrum: Vec<f64>,
    pub max_state_residual: f64,
    pub potential: Vec<f64>,
}

impl SystemDocument {
    pub fn from_system(system: &SusySystem) -> Self {
        let max_state_residual = system
            .new_states
            .iter()
            .chain(&system.iso_states)
            .map(|s| s.residual)
            .fold(0.0, f64::max);
        Self {
            schema_version: SCHEMA_VERSION,
            kind: "system".into(),
            provenance: Provenance::new(&system.spec, system.n_max),
            spectrum: system.spectrum(),
            max_state_residual,
            potential: system.potential.clone(),
        }
    }

    pub fn load(&self) -> Result<SusySystem> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Document(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.kind != "system" {
            return Err(Error::Document(format!("expected a system document, found kind `{}`", self.kind)));
        }
        let system = build_system(&self.provenance.spec, self.provenance.n_max)?;
        let rebuilt = SystemDocument::from_system(&system);
        // Compare through the canonical text so the check is exactly the
        // round trip the file went through.
        let stored = canonical_json(&serde_json::to_value(self).map_err(doc_err)?);
        let fresh = canonical_json(&serde_json::to_value(&rebuilt).map_err(doc_err)?);
        if stored != fresh {
            return Err(Error::Document(
                "stored spectrum or potential does not match the system rebuilt from its spec".into(),
            ));
        }
        Ok(system)
    }
}

fn doc_err(e: impl std::fmt::Display) -> Error {
    Error::Document(e.to_string())
}

fn envelope(kind: &str, provenance: &Provenance, body: Value) -> Result<Value> {
    let mut out = json!({
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "provenance": serde_json::to_value(provenance).map_err(doc_err)?,
    });
    if let (Value::Object(o), Value::Object(b)) = (&mut out, body) {
        o.extend(b);
    }
    Ok(out)
}

pub fn painleve_summary(solution: &PainleveSolution, provenance: &Provenance, tol: f64) -> Result<Value> {
    envelope(
        "painleve",
        provenance,
        json!({
            "assignment": serde_json::to_value(solution.assignment).map_err(doc_err)?,
            "a": solution.a,
            "b": solution.b,
            "residual_stats": serde_json::to_value(solution.stats).map_err(doc_err)?,
            "tolerance": tol,
            "passed": solution.passes(tol),
        }),
    )
}

pub fn coherent_document(
    cs: &CoherentState,
    provenance: &Provenance,
    density_path: Option<&str>,
    density_norm: Option<f64>,
) -> Result<Value> {
    let z = cs.z.complex();
    let coefficients: Vec<Value> = cs.coeffs.iter().map(|c| json!([c.re, c.im])).collect();
    envelope(
        "coherent_state",
        provenance,
        json!({
            "family": cs.family.name(),
            "z": {"modulus": cs.z.modulus, "phase": cs.z.phase, "re": z.re, "im": z.im},
            "params": {"gap": cs.params.gap, "k": cs.params.k, "eps0": cs.params.eps0()},
            "subspace": cs.subspace().to_string(),
            "normalization": cs.normalization,
            "truncation_tail": cs.truncation_tail,
            "coefficients": coefficients,
            "probabilities": cs.probabilities(),
            "mean_energy": cs.mean_energy()?,
            "mean_energy_from_coefficients": cs.mean_energy_from_coeffs(),
            "density_path": density_path,
            "density_norm": density_norm,
        }),
    )
}

pub fn witness_document(witness: &DivergenceWitness, provenance: &Provenance) -> Result<Value> {
    envelope("divergence_witness", provenance, serde_json::to_value(witness).map_err(doc_err)?)
}

pub fn report_document(report: &Report, provenance: &Provenance) -> Result<Value> {
    envelope("verify_report", provenance, serde_json::to_value(report).map_err(doc_err)?)
}

/// 17 significant digits, `null` for non-finite values.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "null".into()
    }
}

/// Canonical pretty-printed JSON.
pub fn canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value, 0);
    out.push('\n');
    out
}

fn write_value(out: &mut String, value: &Value, depth: usize) {
    let pad = |out: &mut String, d: usize| out.extend(std::iter::repeat_n("  ", d));
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&format_float(n.as_f64().unwrap_or(f64::NAN)));
            } else {
                let _ = write!(out, "{n}");
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            // Short numeric rows stay on one line.
            if items.iter().all(|v| !v.is_array() && !v.is_object()) {
                out.push('[');
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_value(out, v, depth);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (i, v) in items.iter().enumerate() {
                pad(out, depth + 1);
                write_value(out, v, depth + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                pad(out, depth + 1);
                out.push_str(&Value::String((*k).clone()).to_string());
                out.push_str(": ");
                write_value(out, &map[*k], depth + 1);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push('}');
        }
    }
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    std::fs::write(path, canonical_json(value)).map_err(|e| Error::Document(format!("{}: {e}", path.display())))
}

pub fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Document(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Document(format!("{}: {e}", path.display())))
}

pub fn write_system(path: &Path, system: &SusySystem) -> Result<()> {
    write_json(path, &serde_json::to_value(SystemDocument::from_system(system)).map_err(doc_err)?)
}

/// Reads and validates a system document, returning the rebuilt system.
pub fn read_system(path: &Path) -> Result<SusySystem> {
    let value = read_json(path)?;
    let doc: SystemDocument =
        serde_json::from_value(value).map_err(|e| Error::Document(format!("{}: {e}", path.display())))?;
    doc.load()
}

/// CSV with a header row; floats at 17 significant digits, NaN as `nan`.
pub fn write_csv<W: Write>(mut w: W, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> io::Result<()> {
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .map(|v| if v.is_nan() { "nan".into() } else { format!("{v:.16e}") })
            .collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

pub fn write_csv_file(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::Document(format!("{}: {e}", path.display())))?;
    write_csv(io::BufWriter::new(file), header, rows).map_err(|e| Error::Document(format!("{}: {e}", path.display())))
}

/// Parses CSV written by [`write_csv`].
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Document("empty CSV".into()))?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let row = l
                .split(',')
                .map(|c| c.parse::<f64>().map_err(|e| Error::Document(format!("bad cell `{c}`: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            if row.len() != header.len() {
                return Err(Error::Document(format!("row has {} cells, header {}", row.len(), header.len())));
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherent::{construct, Family, Label, MAX_LEVELS};
    use crate::grid::Grid;
    use crate::ladder::LadderCoeffs;

    fn small() -> SusySystem {
        let spec = SystemSpec::new(1, -1.0, 0.5).with_grid(Grid::new(-6.0, 6.0, 401).unwrap());
        build_system(&spec, 4).unwrap()
    }

    #[test]
    fn floats_round_trip_exactly() {
        for v in [0.1, 1.0 / 3.0, -2.8, 6.02214076e23, f64::MIN_POSITIVE, 1.94] {
            let s = format_float(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            assert_eq!(s.split('e').next().unwrap().replace(['-', '.'], "").len(), 17);
        }
        assert_eq!(format_float(f64::NAN), "null");
    }

    #[test]
    fn canonical_json_is_stable() {
        let v = json!({"b": 1.5, "a": [1, 2.0, null], "c": {"z": true, "y": "s"}});
        let text = canonical_json(&v);
        assert!(text.find("\"a\"").unwrap() < text.find("\"b\"").unwrap());
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(canonical_json(&back), text);
    }

    #[test]
    fn system_round_trip_and_corruption() {
        let dir = std::env::temp_dir().join(format!("pivcs-doc-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("system.json");
        let sys = small();
        write_system(&path, &sys).unwrap();
        let loaded = read_system(&path).unwrap();
        assert_eq!(loaded, sys);

        let text = std::fs::read_to_string(&path).unwrap();
        let mut doc: Value = serde_json::from_str(&text).unwrap();
        doc["spectrum"][0] = json!(-0.75);
        std::fs::write(&path, canonical_json(&doc)).unwrap();
        assert!(matches!(read_system(&path), Err(Error::Document(_))));

        std::fs::write(&path, "{ not json").unwrap();
        assert!(matches!(read_system(&path), Err(Error::Document(_))));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn coherent_document_fields() {
        let sys = small();
        let p = LadderCoeffs::from_spec(&sys.spec);
        let cs = construct(Family::LinIso, Label::polar(1.2, -2.78).unwrap(), &p, MAX_LEVELS).unwrap();
        let doc = coherent_document(&cs, &Provenance::new(&sys.spec, sys.n_max), None, None).unwrap();
        assert_eq!(doc["schema_version"], json!(SCHEMA_VERSION));
        assert_eq!(doc["family"], json!("lin-iso"));
        assert!((doc["mean_energy"].as_f64().unwrap() - 1.94).abs() < 1e-12);
        assert_eq!(doc["coefficients"].as_array().unwrap().len(), cs.coeffs.len());
    }

    #[test]
    fn csv_round_trip() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &["x", "value"], vec![vec![0.1, f64::NAN], vec![-2.5, 1.0 / 3.0]]).unwrap();
        let (header, rows) = parse_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(header, ["x", "value"]);
        assert_eq!(rows[1][1], 1.0 / 3.0);
        assert!(rows[0][1].is_nan());
    }
}
