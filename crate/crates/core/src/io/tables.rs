use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::ranking::RatingRecord;
use crate::textstats::{LogProbRecord, Token, TokenCorpus};

/// One JSON array of token ids per line.
pub fn read_token_corpus(path: &Path) -> Result<TokenCorpus> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut sequences = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let seq: Vec<Token> = serde_json::from_str(line)
            .map_err(|e| Error::format(path, format!("line {}: {e}", idx + 1)))?;
        if seq.is_empty() {
            return Err(Error::format(path, format!("line {}: empty sequence", idx + 1)));
        }
        sequences.push(seq);
    }
    if sequences.is_empty() {
        return Err(Error::format(path, "no sequences"));
    }
    TokenCorpus::new(sequences)
}

#[derive(Deserialize)]
struct LogProbRow {
    total_logprob: f64,
    n_tokens: u64,
}

/// CSV with header `total_logprob,n_tokens`.
pub fn read_logprobs(path: &Path) -> Result<Vec<LogProbRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::format(path, e.to_string()))?;
    let mut out = Vec::new();
    for row in reader.deserialize::<LogProbRow>() {
        let row = row.map_err(|e| Error::format(path, e.to_string()))?;
        let rec = LogProbRecord::new(row.total_logprob, row.n_tokens)
            .map_err(|e| Error::format(path, format!("record {}: {e}", out.len() + 1)))?;
        out.push(rec);
    }
    if out.is_empty() {
        return Err(Error::format(path, "no records"));
    }
    Ok(out)
}

#[derive(Deserialize)]
struct RatingRow {
    player_a: String,
    player_b: String,
    rating: String,
}

/// CSV with header `player_a,player_b,rating`.
pub fn read_ratings(path: &Path) -> Result<Vec<RatingRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::format(path, e.to_string()))?;
    let mut out = Vec::new();
    for row in reader.deserialize::<RatingRow>() {
        let row = row.map_err(|e| Error::format(path, e.to_string()))?;
        let rating = row
            .rating
            .parse()
            .map_err(|e| Error::format(path, format!("record {}: {e}", out.len() + 1)))?;
        out.push(RatingRecord {
            player_a: row.player_a,
            player_b: row.player_b,
            rating,
        });
    }
    if out.is_empty() {
        return Err(Error::format(path, "no ratings"));
    }
    Ok(out)
}

/// Two named numeric columns from a CSV with a header row.
pub fn read_metric_columns(path: &Path, x: &str, y: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::format(path, e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::format(path, e.to_string()))?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::format(path, format!("no column named {name:?}")))
    };
    let (ix, iy) = (column(x)?, column(y)?);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (row_no, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::format(path, e.to_string()))?;
        let parse = |i: usize, name: &str| -> Result<f64> {
            let field = record.get(i).unwrap_or("");
            field.parse::<f64>().map_err(|_| {
                Error::format(
                    path,
                    format!("row {}: column {name:?} value {field:?} is not a number", row_no + 1),
                )
            })
        };
        xs.push(parse(ix, x)?);
        ys.push(parse(iy, y)?);
    }
    Ok((xs, ys))
}
