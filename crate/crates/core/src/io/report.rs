use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::write_atomic;
use crate::error::{Error, Result};
use crate::frontier::MauveReport;

pub const REPORT_FORMAT_VERSION: u32 = 1;

/// Parameters a run was invoked with. Fields that do not apply to the
/// command are omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RunConfig {
    pub inputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_buckets: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pca_variance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchors: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kmeans_restarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kmeans_max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distinct_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bleu_order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub self_bleu_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bt_max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bt_tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextStats {
    pub n_sequences: usize,
    pub zipf_coefficient: f64,
    pub repetition_frequency: f64,
    pub distinct_n: f64,
    pub self_bleu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerplexityReport {
    pub model_perplexity: f64,
    pub human_perplexity: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BtReport {
    pub players: Vec<String>,
    pub scores: Vec<f64>,
    /// `win_probability[i][j]` is the modeled chance that player i beats j.
    pub win_probability: Vec<Vec<f64>>,
    pub games: Vec<u64>,
    pub iterations: usize,
    pub converged: bool,
    pub negative_log_likelihood: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub x_column: String,
    pub y_column: String,
    pub n: usize,
    pub spearman: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_seconds: f64,
}

/// Top-level JSON document written by every CLI command. `timing` is kept
/// last so the only run-dependent values sit at the end of the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportDocument {
    pub format_version: u32,
    pub command: String,
    pub config: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mauve: Option<MauveReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frechet_distance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_stats: Option<TextStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perplexity: Option<PerplexityReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bradley_terry: Option<BtReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlation: Option<CorrelationReport>,
    pub timing: Timing,
}

impl ReportDocument {
    pub fn new(command: impl Into<String>, config: RunConfig) -> Self {
        Self {
            format_version: REPORT_FORMAT_VERSION,
            command: command.into(),
            config,
            mauve: None,
            frechet_distance: None,
            text_stats: None,
            perplexity: None,
            bradley_terry: None,
            correlation: None,
            timing: Timing {
                elapsed_seconds: 0.0,
            },
        }
    }
}

/// Pretty-printing formatter with `{:.16e}` floats.
#[derive(Default)]
struct PrettyFull {
    inner: serde_json::ser::PrettyFormatter<'static>,
}

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(fn $name<W: ?Sized + io::Write>(&mut self, writer: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.inner.$name(writer $(, $arg)*)
        })*
    };
}

impl serde_json::ser::Formatter for PrettyFull {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    delegate!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        begin_object_value(),
        end_object_value(),
    );
}

/// Pretty JSON with a trailing newline; floats carry 17 significant digits.
pub fn report_to_string(doc: &ReportDocument) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, PrettyFull::default());
    doc.serialize(&mut ser).expect("report serializes");
    let mut text = String::from_utf8(out).expect("utf-8");
    text.push('\n');
    text
}

pub fn write_report(path: &Path, doc: &ReportDocument) -> Result<()> {
    write_atomic(path, report_to_string(doc).as_bytes())
}

/// Parses a report, rejecting documents with missing or unknown top-level
/// fields.
pub fn read_report(path: &Path) -> Result<ReportDocument> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc: ReportDocument =
        serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
    if doc.format_version != REPORT_FORMAT_VERSION {
        return Err(Error::Schema(format!(
            "{}: unsupported format_version {}",
            path.display(),
            doc.format_version
        )));
    }
    Ok(doc)
}
