//! File formats: embedding matrices, token corpora, log-prob and rating
//! tables, curve exports and the JSON report.
//!
//! Binary embedding layout (all little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "MVEM"
//! 4       2     version (u16, currently 1)
//! 6       4     n rows (u32)
//! 10      4     d columns (u32)
//! 14      4*n*d row-major f32 payload
//! ```

mod curve;
mod report;
mod tables;

pub use curve::{curve_to_csv, curve_to_svg, write_curve_csv, write_curve_svg};
pub use report::{
    read_report, report_to_string, write_report, BtReport, CorrelationReport, PerplexityReport,
    ReportDocument, RunConfig, TextStats, Timing, REPORT_FORMAT_VERSION,
};
pub use tables::{read_logprobs, read_metric_columns, read_ratings, read_token_corpus};

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::quantize::EmbeddingSet;

pub const EMBEDDING_MAGIC: [u8; 4] = *b"MVEM";
pub const EMBEDDING_VERSION: u16 = 1;
const HEADER_LEN: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum EmbeddingFormat {
    Binary,
    Csv,
    Jsonl,
}

impl EmbeddingFormat {
    /// Guesses from the extension: `.csv`, `.jsonl`/`.json`, anything else binary.
    pub fn from_path(path: &Path) -> Self {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref()
        {
            Some("csv") => EmbeddingFormat::Csv,
            Some("jsonl") | Some("json") | Some("ndjson") => EmbeddingFormat::Jsonl,
            _ => EmbeddingFormat::Binary,
        }
    }
}

pub fn read_embeddings(path: &Path, format: EmbeddingFormat) -> Result<EmbeddingSet> {
    match format {
        EmbeddingFormat::Binary => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            decode_binary(&bytes).map_err(|m| Error::format(path, m))
        }
        EmbeddingFormat::Csv => read_csv_embeddings(path),
        EmbeddingFormat::Jsonl => read_jsonl_embeddings(path),
    }
}

pub fn write_embeddings(path: &Path, set: &EmbeddingSet, format: EmbeddingFormat) -> Result<()> {
    let bytes = match format {
        EmbeddingFormat::Binary => encode_binary(set)?,
        EmbeddingFormat::Csv => {
            let mut out = String::new();
            for row in set.rows() {
                let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
                out.push_str(&line.join(","));
                out.push('\n');
            }
            out.into_bytes()
        }
        EmbeddingFormat::Jsonl => {
            let mut out = Vec::new();
            for (id, row) in set.ids().iter().zip(set.rows()) {
                serde_json::to_writer(&mut out, &serde_json::json!({"id": id, "embedding": row}))
                    .expect("in-memory write");
                out.push(b'\n');
            }
            out
        }
    };
    write_atomic(path, &bytes)
}

/// Encodes `set` in the binary layout; values are narrowed to f32.
pub fn encode_binary(set: &EmbeddingSet) -> Result<Vec<u8>> {
    let n = u32::try_from(set.n()).map_err(|_| Error::param("too many rows for u32"))?;
    let d = u32::try_from(set.dim()).map_err(|_| Error::param("too many columns for u32"))?;
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * set.as_slice().len());
    out.extend_from_slice(&EMBEDDING_MAGIC);
    out.extend_from_slice(&EMBEDDING_VERSION.to_le_bytes());
    out.extend_from_slice(&n.to_le_bytes());
    out.extend_from_slice(&d.to_le_bytes());
    for &v in set.as_slice() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    Ok(out)
}

pub fn decode_binary(bytes: &[u8]) -> std::result::Result<EmbeddingSet, String> {
    if bytes.len() < HEADER_LEN {
        return Err(format!(
            "file is {} bytes, shorter than the {HEADER_LEN}-byte header",
            bytes.len()
        ));
    }
    if bytes[..4] != EMBEDDING_MAGIC {
        return Err(format!("bad magic {:?}", &bytes[..4]));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != EMBEDDING_VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let n = u32::from_le_bytes(bytes[6..10].try_into().expect("4 bytes")) as usize;
    let d = u32::from_le_bytes(bytes[10..14].try_into().expect("4 bytes")) as usize;
    let expected = n
        .checked_mul(d)
        .and_then(|c| c.checked_mul(4))
        .ok_or("header dimensions overflow")?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != expected {
        return Err(format!(
            "payload is {} bytes, header promises {expected} ({n} x {d} f32)",
            payload.len()
        ));
    }
    let data: Vec<f64> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
        .collect();
    EmbeddingSet::new(data, n, d).map_err(|e| e.to_string())
}

fn read_csv_embeddings(path: &Path) -> Result<EmbeddingSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::format(path, e.to_string()))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::format(path, e.to_string()))?;
        let line = record.position().map_or(rows.len() + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row = record
            .iter()
            .map(|field| {
                field
                    .parse::<f64>()
                    .map_err(|_| Error::format(path, format!("line {line}: cannot parse {field:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::format(
                    path,
                    format!(
                        "line {line}: expected {} columns, got {}",
                        first.len(),
                        row.len()
                    ),
                ));
            }
        }
        if let Some(col) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::format(
                path,
                format!("line {line}: non-finite value in row {}, column {col}", rows.len()),
            ));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::format(path, "no rows"));
    }
    EmbeddingSet::from_rows(rows)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum JsonlRow {
    Bare(Vec<f64>),
    Tagged {
        #[serde(default)]
        id: Option<serde_json::Value>,
        embedding: Vec<f64>,
    },
}

fn read_jsonl_embeddings(path: &Path) -> Result<EmbeddingSet> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut data = Vec::new();
    let mut ids = Vec::new();
    let mut width = None;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let row: JsonlRow = serde_json::from_str(line)
            .map_err(|e| Error::format(path, format!("line {lineno}: {e}")))?;
        let (id, values) = match row {
            JsonlRow::Bare(v) => (ids.len().to_string(), v),
            JsonlRow::Tagged { id, embedding } => (
                match id {
                    Some(serde_json::Value::String(s)) => s,
                    Some(other) => other.to_string(),
                    None => ids.len().to_string(),
                },
                embedding,
            ),
        };
        match width {
            None => width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Err(Error::format(
                    path,
                    format!("line {lineno}: expected {w} values, got {}", values.len()),
                ))
            }
            _ => {}
        }
        data.extend(values);
        ids.push(id);
    }
    let d = width.ok_or_else(|| Error::format(path, "no rows"))?;
    let n = ids.len();
    EmbeddingSet::with_ids(data, n, d, ids).map_err(|e| match e {
        Error::NonFinite { row, col } => Error::format(
            path,
            format!("non-finite value in row {row}, column {col}"),
        ),
        other => other,
    })
}

/// Writes through a temporary file in the target directory, then renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
