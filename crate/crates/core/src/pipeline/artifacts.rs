//! Stage files and their provenance headers.
//!
//! Every stage file records a magic kind string, a format version, the
//! cumulative configuration hash of the stage that wrote it, the stage seed,
//! and the SHA-256 of the upstream file it was computed from. CSV files carry
//! this as leading `#` comment lines; JSON documents carry it as top-level
//! fields next to the payload.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

pub const LABELS_KIND: &str = "STYLOMETRY-LABELS";
pub const VOCAB_KIND: &str = "STYLOMETRY-VOCAB";
pub const MODEL_KIND: &str = "STYLOMETRY-MODEL";
pub const WEIGHTS_KIND: &str = "STYLOMETRY-WEIGHTS";
pub const EMBEDDING_KIND: &str = "STYLOMETRY-EMBEDDING";

pub const FEATURES_BIN: &str = "features.bin";
pub const FEATURES_CSV: &str = "features.csv";
pub const VOCAB_JSON: &str = "vocab.json";
pub const LABELS_CSV: &str = "labels.csv";
pub const MODEL_JSON: &str = "model.json";
pub const WEIGHTS_CSV: &str = "weights.csv";
pub const EMBEDDING_CSV: &str = "embedding.csv";
pub const REPORT_DIR: &str = "report";
pub const CACHE_DIR: &str = "cache";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub kind: String,
    pub version: u32,
    pub config_hash: String,
    pub seed: u64,
    /// SHA-256 of the upstream stage file, if any.
    pub upstream: Option<String>,
}

impl Provenance {
    pub fn new(kind: &str, config_hash: String, seed: u64, upstream: Option<String>) -> Self {
        Provenance { kind: kind.to_string(), version: FORMAT_VERSION, config_hash, seed, upstream }
    }

    /// Check that a file written by `stage` matches what the current
    /// configuration and upstream file expect.
    pub fn verify(&self, file: &Path, kind: &str, config_hash: &str, upstream: Option<&str>, stage: &str) -> Result<()> {
        let name = file.display();
        if self.kind != kind || self.version != FORMAT_VERSION {
            return Err(Error::pipeline(format!(
                "{name} is a {} v{} file, expected {kind} v{FORMAT_VERSION}; re-run `{stage}`",
                self.kind, self.version
            )));
        }
        if self.config_hash != config_hash {
            return Err(Error::pipeline(format!(
                "{name} was produced under a different configuration; re-run `{stage}` and later stages"
            )));
        }
        if let Some(expected) = upstream {
            if self.upstream.as_deref() != Some(expected) {
                return Err(Error::pipeline(format!(
                    "{name} does not match its upstream file; re-run `{stage}` and later stages"
                )));
            }
        }
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Read a stage file, turning "not found" into a pipeline error that names
/// the stage to run.
pub fn read_stage_file(path: &Path, stage: &str) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::pipeline(format!("missing {}; run `{stage}` first", path.display()))
        } else {
            Error::Io(e)
        }
    })
}

/// Write through a temporary sibling and rename, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = PathBuf::from(path);
    tmp.as_mut_os_string().push(".tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Provenance as `#` comment lines.
pub fn csv_preamble(p: &Provenance) -> String {
    let mut s = format!("# {} v{}\n# config_hash {}\n# seed {}\n", p.kind, p.version, p.config_hash, p.seed);
    if let Some(up) = &p.upstream {
        s.push_str(&format!("# upstream {up}\n"));
    }
    s
}

/// Serialize rows with a provenance preamble and a header row.
pub fn write_csv(path: &Path, p: &Provenance, header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut out = csv_preamble(p).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()?;
    }
    write_atomic(path, &out)?;
    Ok(out)
}

/// Parsed CSV stage file.
#[derive(Debug, Clone)]
pub struct CsvTable {
    pub provenance: Provenance,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn parse(bytes: &[u8], path: &Path) -> Result<Self> {
        let text = std::str::from_utf8(bytes).map_err(|_| Error::pipeline(format!("{} is not UTF-8", path.display())))?;
        let bad = |what: &str| Error::pipeline(format!("{}: {what}", path.display()));
        let comments: Vec<&str> = text.lines().take_while(|l| l.starts_with('#')).collect();
        let first = comments.first().ok_or_else(|| bad("missing provenance header"))?;
        let (kind, version) = first
            .trim_start_matches('#')
            .trim()
            .split_once(" v")
            .ok_or_else(|| bad("malformed kind line"))?;
        let mut config_hash = None;
        let mut seed = None;
        let mut upstream = None;
        for line in &comments[1..] {
            match line.trim_start_matches('#').trim().split_once(' ') {
                Some(("config_hash", v)) => config_hash = Some(v.to_string()),
                Some(("seed", v)) => seed = Some(v.parse().map_err(|_| bad("bad seed"))?),
                Some(("upstream", v)) => upstream = Some(v.to_string()),
                _ => return Err(bad(&format!("unknown header line {line:?}"))),
            }
        }
        let provenance = Provenance {
            kind: kind.to_string(),
            version: version.parse().map_err(|_| bad("bad version"))?,
            config_hash: config_hash.ok_or_else(|| bad("missing config_hash"))?,
            seed: seed.ok_or_else(|| bad("missing seed"))?,
            upstream,
        };
        let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(bytes);
        let header = reader.headers()?.iter().map(str::to_string).collect();
        let rows = reader
            .records()
            .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect()))
            .collect::<std::result::Result<Vec<Vec<String>>, _>>()?;
        Ok(CsvTable { provenance, header, rows })
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::pipeline(format!("CSV column {name:?} missing")))
    }
}

/// Parse one numeric CSV field.
pub fn parse_field<T: std::str::FromStr>(value: &str, what: &str) -> Result<T> {
    value.parse().map_err(|_| Error::pipeline(format!("cannot parse {what} from {value:?}")))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Document<T> {
    #[serde(flatten)]
    pub provenance: Provenance,
    pub body: T,
}

pub fn write_json<T: Serialize>(path: &Path, provenance: &Provenance, body: &T) -> Result<Vec<u8>> {
    #[derive(Serialize)]
    struct Borrowed<'a, T> {
        #[serde(flatten)]
        provenance: &'a Provenance,
        body: &'a T,
    }
    let mut bytes = serde_json::to_vec_pretty(&Borrowed { provenance, body })?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)?;
    Ok(bytes)
}

pub fn parse_json<T: DeserializeOwned>(bytes: &[u8], path: &Path) -> Result<Document<T>> {
    serde_json::from_slice(bytes).map_err(|e| Error::pipeline(format!("{} is not a valid stage document: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prov() -> Provenance {
        Provenance::new("stylometry-test", "abc".into(), 7, Some("beef".into()))
    }

    #[test]
    fn csv_round_trip_keeps_provenance() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let header = vec!["a".to_string(), "b".to_string()];
        let rows = vec![vec!["1".into(), "x y".into()], vec!["2".into(), "#3".into()]];
        let bytes = write_csv(&path, &prov(), &header, &rows).unwrap();
        assert_eq!(fs::read(&path).unwrap(), bytes);
        let table = CsvTable::parse(&bytes, &path).unwrap();
        assert_eq!(table.provenance, prov());
        assert_eq!(table.header, header);
        assert_eq!(table.rows, rows);
        assert_eq!(table.column("b").unwrap(), 1);
        assert!(table.column("c").is_err());
    }

    #[test]
    fn json_round_trip_keeps_provenance() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.json");
        let bytes = write_json(&path, &prov(), &vec![0.1, 1.0 / 3.0]).unwrap();
        let doc: Document<Vec<f64>> = parse_json(&bytes, &path).unwrap();
        assert_eq!(doc.provenance, prov());
        assert_eq!(doc.body, vec![0.1, 1.0 / 3.0]);
    }

    #[test]
    fn verify_reports_each_mismatch() {
        let p = prov();
        let f = Path::new("x");
        p.verify(f, "stylometry-test", "abc", Some("beef"), "s").unwrap();
        p.verify(f, "stylometry-test", "abc", None, "s").unwrap();
        for result in [
            p.verify(f, "other", "abc", None, "s"),
            p.verify(f, "stylometry-test", "abd", None, "s"),
            p.verify(f, "stylometry-test", "abc", Some("cafe"), "s"),
        ] {
            assert!(matches!(result, Err(Error::Pipeline(_))));
        }
    }

    #[test]
    fn missing_stage_file_names_the_stage() {
        let err = read_stage_file(Path::new("/nonexistent/labels.csv"), "vocab").unwrap_err();
        assert!(matches!(&err, Error::Pipeline(m) if m.contains("`vocab`")));
    }
}
