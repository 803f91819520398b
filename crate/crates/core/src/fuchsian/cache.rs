//! Length-spectrum cache: a CSV table plus a JSON sidecar.
//!
//! CSV header `length,trace,power,primitive_length,word`; reals printed with
//! 17 significant digits, words in the `+1--3-+2` text form. The sidecar
//! records the preset, the cutoff, the tool version and the SHA-256 of the
//! CSV bytes; a cache whose sidecar disagrees with the request or whose
//! checksum does not match is rejected.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fuchsian::enumerate::ConjugacyClass;
use crate::fuchsian::group::SurfaceGroup;
use crate::fuchsian::mat2::hyperbolic_length;
use crate::fuchsian::word::Word;
use crate::TOOL_VERSION;

pub const CSV_HEADER: &str = "length,trace,power,primitive_length,word";
pub const CACHE_FORMAT: &str = "length-spectrum/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheMeta {
    pub format: String,
    pub preset: String,
    pub l_max: f64,
    pub tool_version: String,
    pub sha256: String,
    pub class_count: usize,
}

/// Formats a real with 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn classes_to_csv(classes: &[ConjugacyClass]) -> String {
    let mut out = String::with_capacity(64 * (classes.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for c in classes {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_real(c.length),
            fmt_real(c.trace),
            c.power,
            fmt_real(c.primitive_length),
            c.rep_word
        );
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Parses the CSV and rebuilds each class from its word.
pub fn classes_from_csv(g: &SurfaceGroup, text: &str) -> Result<Vec<ConjugacyClass>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => return Err(Error::Parse(format!("unexpected header {other:?}"))),
    }
    let mut classes = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Parse(format!("row {}: expected 5 fields", n + 1)));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::Parse(format!("row {}: bad number {s:?}", n + 1)))
        };
        let length = num(fields[0])?;
        let power: u32 =
            fields[2].parse().map_err(|_| Error::Parse(format!("row {}: bad power", n + 1)))?;
        let trace = num(fields[1])?;
        let primitive_length = num(fields[3])?;
        let word: Word = fields[4].parse()?;
        let rep_matrix = g.evaluate_word(&word);
        let recomputed = hyperbolic_length(&rep_matrix)?;
        if (recomputed - length).abs() > 1e-9 * (1.0 + length) {
            return Err(Error::Parse(format!(
                "row {}: word length {recomputed} disagrees with stored {length}",
                n + 1
            )));
        }
        let mut c = ConjugacyClass::from_representative(word, rep_matrix)?;
        if (c.trace - trace).abs() > 1e-9 * (1.0 + trace.abs()) {
            return Err(Error::Parse(format!("row {}: trace disagrees with word", n + 1)));
        }
        // keep the stored values so a round trip is byte-exact
        c.length = length;
        c.discriminant = 2.0 * (0.5 * length).sinh();
        c.trace = trace;
        c.power = power.max(1);
        c.primitive_length = primitive_length;
        c.primitive_word = None;
        classes.push(c);
    }
    Ok(classes)
}

#[derive(Clone, Debug)]
pub struct CachePaths {
    pub csv: PathBuf,
    pub meta: PathBuf,
}

impl CachePaths {
    pub fn in_dir(dir: &Path) -> CachePaths {
        CachePaths { csv: dir.join("length_spectrum.csv"), meta: dir.join("length_spectrum.meta.json") }
    }

    pub fn exists(&self) -> bool {
        self.csv.exists() && self.meta.exists()
    }
}

pub fn write_cache(paths: &CachePaths, preset: &str, l_max: f64, classes: &[ConjugacyClass]) -> Result<CacheMeta> {
    let csv = classes_to_csv(classes);
    let meta = CacheMeta {
        format: CACHE_FORMAT.to_string(),
        preset: preset.to_string(),
        l_max,
        tool_version: TOOL_VERSION.to_string(),
        sha256: sha256_hex(csv.as_bytes()),
        class_count: classes.len(),
    };
    if let Some(parent) = paths.csv.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(&paths.csv, csv)?;
    fs::write(&paths.meta, serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(meta)
}

/// Reads a cache, checking the sidecar against the request and the CSV
/// against its checksum.
pub fn read_cache(paths: &CachePaths, g: &SurfaceGroup, l_max: f64) -> Result<(CacheMeta, Vec<ConjugacyClass>)> {
    let meta: CacheMeta = serde_json::from_str(&fs::read_to_string(&paths.meta)?)?;
    if meta.format != CACHE_FORMAT {
        return Err(Error::StaleCache(format!("format {:?}", meta.format)));
    }
    if meta.tool_version != TOOL_VERSION {
        return Err(Error::StaleCache(format!("tool version {} != {}", meta.tool_version, TOOL_VERSION)));
    }
    if meta.preset != g.name {
        return Err(Error::StaleCache(format!("preset {:?} != {:?}", meta.preset, g.name)));
    }
    if meta.l_max != l_max {
        return Err(Error::StaleCache(format!("L_max {} != {}", meta.l_max, l_max)));
    }
    let bytes = fs::read(&paths.csv)?;
    let sum = sha256_hex(&bytes);
    if sum != meta.sha256 {
        return Err(Error::StaleCache(format!("checksum mismatch for {}", paths.csv.display())));
    }
    let text = String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))?;
    let classes = classes_from_csv(g, &text)?;
    if classes.len() != meta.class_count {
        return Err(Error::StaleCache("class count mismatch".to_string()));
    }
    Ok((meta, classes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuchsian::enumerate::enumerate_classes;
    use crate::fuchsian::group::bolza_preset;

    #[test]
    fn empty_spectrum_has_header() {
        assert_eq!(classes_to_csv(&[]), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn csv_round_trip_and_checksum() {
        let g = bolza_preset();
        let classes = enumerate_classes(&g, 4.2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let paths = CachePaths::in_dir(dir.path());
        write_cache(&paths, "bolza", 4.2, &classes).unwrap();
        let (_, back) = read_cache(&paths, &g, 4.2).unwrap();
        assert_eq!(back.len(), classes.len());
        for (x, y) in back.iter().zip(&classes) {
            assert_eq!(x.rep_word, y.rep_word);
            assert_eq!(x.power, y.power);
            assert!((x.length - y.length).abs() < 1e-12);
        }
        // re-serialising what we read gives the same bytes
        assert_eq!(classes_to_csv(&back), fs::read_to_string(&paths.csv).unwrap());

        assert!(matches!(read_cache(&paths, &g, 5.0), Err(Error::StaleCache(_))));
        let mut text = fs::read_to_string(&paths.csv).unwrap();
        text.push_str("3.0,4.0,1,3.0,+1\n");
        fs::write(&paths.csv, text).unwrap();
        assert!(matches!(read_cache(&paths, &g, 4.2), Err(Error::StaleCache(_))));
    }
}
