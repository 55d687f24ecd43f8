//! Dataset files: rows of `(subject, stimulus, repetition, score)`.
//!
//! CSV is the canonical interchange format, with a mandatory header
//! `subject,stimulus,repetition,score`; the repetition column may be
//! omitted and defaults to 0. The JSON form is an array of row objects
//! with the same fields. Dense indices are assigned in first-appearance
//! order.

use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{ScoreTensor, ScoreTensorBuilder};

/// On-disk dataset encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    Csv,
    Json,
}

impl DatasetFormat {
    /// Infer from a file extension; anything but `.json` is treated as CSV.
    pub fn infer(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => DatasetFormat::Json,
            _ => DatasetFormat::Csv,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetRow {
    subject: String,
    stimulus: String,
    #[serde(default)]
    repetition: usize,
    score: f64,
}

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::DatasetParse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Read a dataset file into a score tensor.
pub fn parse_dataset(path: &Path, format: DatasetFormat) -> Result<ScoreTensor> {
    let file = fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_dataset_reader(file, path, format)
}

/// Same as [`parse_dataset`] for any reader; `path` is used in messages.
pub fn parse_dataset_reader<R: Read>(
    reader: R,
    path: &Path,
    format: DatasetFormat,
) -> Result<ScoreTensor> {
    match format {
        DatasetFormat::Csv => parse_csv(reader, path),
        DatasetFormat::Json => parse_json(reader, path),
    }
}

fn parse_csv<R: Read>(reader: R, path: &Path) -> Result<ScoreTensor> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = csv_reader
        .headers()
        .map_err(|e| parse_error(path, 1, e.to_string()))?
        .clone();
    let columns: Vec<&str> = headers.iter().collect();
    let has_repetition = match columns.as_slice() {
        ["subject", "stimulus", "repetition", "score"] => true,
        ["subject", "stimulus", "score"] => false,
        other => {
            return Err(parse_error(
                path,
                1,
                format!(
                    "expected header `subject,stimulus[,repetition],score`, got `{}`",
                    other.join(",")
                ),
            ))
        }
    };

    let mut builder = ScoreTensorBuilder::new();
    let mut rows = 0u64;
    for record in csv_reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_error(path, line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let expected = if has_repetition { 4 } else { 3 };
        if record.len() != expected {
            return Err(parse_error(
                path,
                line,
                format!("expected {expected} fields, got {}", record.len()),
            ));
        }
        let subject = &record[0];
        let stimulus = &record[1];
        let (repetition, score_field) = if has_repetition {
            let rep: usize = record[2]
                .parse()
                .map_err(|_| parse_error(path, line, format!("bad repetition `{}`", &record[2])))?;
            (rep, &record[3])
        } else {
            (0, &record[2])
        };
        let score: f64 = score_field
            .parse()
            .map_err(|_| parse_error(path, line, format!("bad score `{score_field}`")))?;
        builder
            .add_vote(subject, stimulus, repetition, score)
            .map_err(|e| parse_error(path, line, e.to_string()))?;
        rows += 1;
    }
    if rows == 0 {
        return Err(parse_error(path, 0, "dataset has no data rows"));
    }
    builder.build()
}

fn parse_json<R: Read>(reader: R, path: &Path) -> Result<ScoreTensor> {
    let rows: Vec<DatasetRow> = serde_json::from_reader(reader)
        .map_err(|e| parse_error(path, e.line() as u64, e.to_string()))?;
    if rows.is_empty() {
        return Err(parse_error(path, 0, "dataset has no rows"));
    }
    let mut builder = ScoreTensorBuilder::new();
    for (index, row) in rows.iter().enumerate() {
        builder
            .add_vote(&row.subject, &row.stimulus, row.repetition, row.score)
            .map_err(|e| parse_error(path, index as u64 + 1, e.to_string()))?;
    }
    builder.build()
}

/// Write a tensor back out as a dataset file. Scores carry 17 significant
/// digits so a parse of the output reproduces every value exactly.
pub fn write_dataset(tensor: &ScoreTensor, path: &Path, format: DatasetFormat) -> Result<()> {
    let text = dataset_to_string(tensor, format)?;
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Render a tensor as dataset text.
pub fn dataset_to_string(tensor: &ScoreTensor, format: DatasetFormat) -> Result<String> {
    match format {
        DatasetFormat::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            writer
                .write_record(["subject", "stimulus", "repetition", "score"])
                .map_err(|e| Error::ReportParse(e.to_string()))?;
            for ((i, j, r), u) in tensor.votes() {
                writer
                    .write_record([
                        tensor.subject_ids()[i].as_str(),
                        tensor.stimulus_ids()[j].as_str(),
                        &r.to_string(),
                        &format!("{u:.16e}"),
                    ])
                    .map_err(|e| Error::ReportParse(e.to_string()))?;
            }
            let bytes = writer
                .into_inner()
                .map_err(|e| Error::ReportParse(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        DatasetFormat::Json => {
            let rows: Vec<DatasetRow> = tensor
                .votes()
                .map(|((i, j, r), u)| DatasetRow {
                    subject: tensor.subject_ids()[i].clone(),
                    stimulus: tensor.stimulus_ids()[j].clone(),
                    repetition: r,
                    score: u,
                })
                .collect();
            crate::report::to_json_17(&rows)
        }
    }
}
