//! JSON-Lines persistence.
//!
//! The first line of a dataset file is a header object carrying a `schema`
//! field; each following line is one record:
//!
//! ```text
//! {"schema":"georouting","version":1,"embedding_dim":8}
//! {"id":"q1","gt":[48.85,2.35],"pred_ret":[48.86,2.34],"pred_gen":[45.7,4.8],"candidates":[{"gps":[48.86,2.34],"similarity":0.93}],"embedding":[...]}
//! ```
//!
//! Coordinates are `[lat, lon]` in degrees. Readers accept files without a
//! header. Labeled files written by [`write_labeled`] add a `target` object
//! to every record line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::build::RawLine;
use super::record::{Dataset, Instance, PreferenceTarget, RawEntry};
use crate::error::{Error, Result};

pub const SCHEMA_NAME: &str = "georouting";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    schema: String,
    version: u32,
    embedding_dim: Option<usize>,
}

#[derive(Serialize)]
struct LabeledLine<'a> {
    #[serde(flatten)]
    entry: RawEntry,
    target: &'a PreferenceTarget,
}

/// Returns the header if `line` is one.
fn parse_header(line: &str, line_no: usize) -> Result<Option<Header>> {
    let value: serde_json::Value = match serde_json::from_str(line) {
        Ok(v) => v,
        Err(_) => return Ok(None),
    };
    if value.get("schema").is_none() {
        return Ok(None);
    }
    let header: Header = serde_json::from_value(value).map_err(|e| Error::Parse {
        line: line_no,
        reason: format!("bad header: {e}"),
    })?;
    if header.schema != SCHEMA_NAME || header.version != SCHEMA_VERSION {
        return Err(Error::Parse {
            line: line_no,
            reason: format!(
                "unsupported schema {} v{} (expected {SCHEMA_NAME} v{SCHEMA_VERSION})",
                header.schema, header.version
            ),
        });
    }
    Ok(Some(header))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    read_jsonl_from(open(path)?).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Strict reader: any malformed or invalid line is an error citing its line.
pub fn read_jsonl_from(reader: impl BufRead) -> Result<Dataset> {
    let mut declared_dim = None;
    let mut records = Vec::new();
    let mut first = true;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io("<input>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        if std::mem::take(&mut first) {
            if let Some(h) = parse_header(&line, line_no)? {
                declared_dim = Some(h.embedding_dim);
                continue;
            }
        }
        let entry: RawEntry = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            reason: e.to_string(),
        })?;
        let record = entry.into_record().map_err(|e| Error::Parse {
            line: line_no,
            reason: e.to_string(),
        })?;
        let expected = match declared_dim {
            Some(d) => d,
            None => records
                .iter()
                .find_map(|r: &super::RoutingRecord| r.embedding.as_ref().map(Vec::len)),
        };
        if let (Some(e), Some(dim)) = (&record.embedding, expected) {
            if e.len() != dim {
                return Err(Error::Parse {
                    line: line_no,
                    reason: format!("embedding dimension {} differs from {dim}", e.len()),
                });
            }
        }
        records.push(record);
    }
    let ds = Dataset::new(records)?;
    Ok(match declared_dim {
        Some(dim) => Dataset {
            embedding_dim: dim.or(ds.embedding_dim),
            records: ds.records,
        },
        None => ds,
    })
}

fn write_header(w: &mut impl Write, embedding_dim: Option<usize>) -> std::io::Result<()> {
    let header = Header {
        schema: SCHEMA_NAME.into(),
        version: SCHEMA_VERSION,
        embedding_dim,
    };
    serde_json::to_writer(&mut *w, &header)?;
    w.write_all(b"\n")
}

pub fn write_jsonl(path: impl AsRef<Path>, dataset: &Dataset) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    write_jsonl_to(&mut w, dataset)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn write_jsonl_to(w: &mut impl Write, dataset: &Dataset) -> std::io::Result<()> {
    write_header(w, dataset.embedding_dim)?;
    for record in &dataset.records {
        serde_json::to_writer(&mut *w, &RawEntry::from(record))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_labeled(
    path: impl AsRef<Path>,
    embedding_dim: Option<usize>,
    instances: &[Instance],
) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    write_labeled_to(&mut w, embedding_dim, instances)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn write_labeled_to(
    w: &mut impl Write,
    embedding_dim: Option<usize>,
    instances: &[Instance],
) -> std::io::Result<()> {
    write_header(w, embedding_dim)?;
    for inst in instances {
        let mut entry = RawEntry::from(&inst.record);
        entry.extra.remove("target");
        serde_json::to_writer(
            &mut *w,
            &LabeledLine {
                entry,
                target: &inst.target,
            },
        )?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_raw(path: impl AsRef<Path>) -> Result<Vec<RawLine>> {
    let path = path.as_ref();
    read_raw_from(open(path)?).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Lenient reader for prediction dumps: unparsable lines are returned as
/// per-line failures instead of aborting.
pub fn read_raw_from(reader: impl BufRead) -> Result<Vec<RawLine>> {
    let mut out = Vec::new();
    let mut first = true;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io("<input>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        if std::mem::take(&mut first) && parse_header(&line, line_no)?.is_some() {
            continue;
        }
        out.push((
            line_no,
            serde_json::from_str::<RawEntry>(&line).map_err(|e| format!("malformed JSON: {e}")),
        ));
    }
    Ok(out)
}
