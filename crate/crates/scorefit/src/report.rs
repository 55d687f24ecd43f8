//! Fit-report files: a fixed-order JSON schema and a sectioned CSV table,
//! both carrying numbers at 17 significant digits so a round trip through
//! text recovers every value bit-exactly.

use std::fs;
use std::io;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diagnostics::Interval;
use crate::error::{Error, Result};
use crate::legacy::{CellFlag, RejectionReport};
use crate::solver::{FitReport, FittedParams};
use crate::tensor::ScoreTensor;

/// Which quality intervals a report carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CiMode {
    Mle,
    Alt,
    Both,
}

impl FromStr for CiMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mle" => Ok(CiMode::Mle),
            "alt" => Ok(CiMode::Alt),
            "both" => Ok(CiMode::Both),
            other => Err(Error::InvalidConfig(format!(
                "unknown CI mode `{other}` (expected mle|alt|both)"
            ))),
        }
    }
}

/// Report file encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl ReportFormat {
    pub fn infer(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => ReportFormat::Csv,
            _ => ReportFormat::Json,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusRecord {
    pub id: String,
    pub psi: f64,
    pub psi_ci: Option<Interval>,
    pub psi_ci_alt: Option<Interval>,
    /// Per-stimulus ambiguity (plain-MOS family only).
    pub ambiguity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectRecord {
    pub id: String,
    pub delta: Option<f64>,
    pub delta_ci: Option<Interval>,
    pub upsilon: Option<f64>,
    pub upsilon_ci: Option<Interval>,
    pub rejected: bool,
}

/// Serializable fit report. Field order is fixed; every field is always
/// present (absent values are nulls or empty lists, never missing keys).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub method: String,
    pub log_likelihood: f64,
    pub nbic: f64,
    pub num_observations: usize,
    pub num_parameters: usize,
    pub iterations: usize,
    pub converged: bool,
    pub rejected_subjects: Vec<String>,
    pub stimuli: Vec<StimulusRecord>,
    pub subjects: Vec<SubjectRecord>,
    pub warnings: Vec<String>,
}

/// Flatten a [`FitReport`] against the tensor it was fitted on.
pub fn build_report(fit: &FitReport, tensor: &ScoreTensor, ci_mode: CiMode) -> ReportFile {
    let stimulus_ids = tensor.stimulus_ids();
    let subject_ids = tensor.subject_ids();
    let want_mle = matches!(ci_mode, CiMode::Mle | CiMode::Both);
    let want_alt = matches!(ci_mode, CiMode::Alt | CiMode::Both);

    let pick = |ci: &Option<Vec<Interval>>, j: usize, wanted: bool| -> Option<Interval> {
        if wanted {
            ci.as_ref().map(|v| v[j])
        } else {
            None
        }
    };

    let subject_family = matches!(fit.params, FittedParams::Subject(_));
    let stimuli: Vec<StimulusRecord> = (0..stimulus_ids.len())
        .map(|j| StimulusRecord {
            id: stimulus_ids[j].clone(),
            psi: fit.psi()[j],
            // The MOS-family interval is the only one it has; emit it
            // regardless of mode.
            psi_ci: pick(&fit.psi_ci, j, want_mle || !subject_family),
            psi_ci_alt: pick(&fit.psi_ci_alt, j, want_alt),
            ambiguity: match &fit.params {
                FittedParams::Stimulus(p) => Some(p.upsilon[j]),
                FittedParams::StimulusWithBias { mos, .. } => Some(mos.upsilon[j]),
                FittedParams::Subject(_) => None,
            },
        })
        .collect();

    let subjects: Vec<SubjectRecord> = (0..subject_ids.len())
        .map(|i| {
            let (delta, upsilon) = match &fit.params {
                FittedParams::Subject(p) => (Some(p.delta[i]), Some(p.upsilon[i])),
                FittedParams::StimulusWithBias { bias, .. } => (Some(bias[i]), None),
                FittedParams::Stimulus(_) => (None, None),
            };
            SubjectRecord {
                id: subject_ids[i].clone(),
                delta,
                delta_ci: fit.delta_ci.as_ref().map(|v| v[i]),
                upsilon,
                upsilon_ci: fit.upsilon_ci.as_ref().map(|v| v[i]),
                rejected: fit.rejected_subjects.contains(&i),
            }
        })
        .collect();

    ReportFile {
        method: fit.method.to_string(),
        log_likelihood: fit.log_likelihood,
        nbic: fit.nbic,
        num_observations: fit.num_observations,
        num_parameters: fit.num_parameters,
        iterations: fit.iterations,
        converged: fit.converged,
        rejected_subjects: fit
            .rejected_subjects
            .iter()
            .map(|&i| subject_ids[i].clone())
            .collect(),
        stimuli,
        subjects,
        warnings: fit.warnings.clone(),
    }
}

// --- 17-significant-digit JSON ------------------------------------------

struct SigFig17;

impl serde_json::ser::Formatter for SigFig17 {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        // One digit before the point plus sixteen after: 17 significant
        // digits, enough to reproduce any f64 exactly.
        write!(writer, "{value:.16e}")
    }
}

/// Serialize any value as JSON with floats at 17 significant digits.
pub fn to_json_17<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut serializer = serde_json::Serializer::with_formatter(&mut buf, SigFig17);
    value
        .serialize(&mut serializer)
        .map_err(|e| Error::ReportParse(e.to_string()))?;
    let mut text = String::from_utf8(buf).expect("json output is utf-8");
    text.push('\n');
    Ok(text)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.16e}")).unwrap_or_default()
}

fn parse_opt(field: &str) -> Result<Option<f64>> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse::<f64>()
        .map(Some)
        .map_err(|_| Error::ReportParse(format!("bad number `{field}`")))
}

fn interval_fields(ci: Option<Interval>) -> (String, String) {
    match ci {
        Some(iv) => (format!("{:.16e}", iv.lower), format!("{:.16e}", iv.upper)),
        None => (String::new(), String::new()),
    }
}

fn parse_interval(lower: &str, upper: &str) -> Result<Option<Interval>> {
    match (parse_opt(lower)?, parse_opt(upper)?) {
        (Some(lo), Some(hi)) => Ok(Some(Interval {
            lower: lo,
            upper: hi,
        })),
        (None, None) => Ok(None),
        _ => Err(Error::ReportParse("half-specified interval".into())),
    }
}

/// Render a report in the requested format.
pub fn report_to_string(report: &ReportFile, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => to_json_17(report),
        ReportFormat::Csv => report_to_csv(report),
    }
}

fn csv_section<F>(out: &mut String, header: &[&str], write_rows: F) -> Result<()>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>,
{
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(header)
        .and_then(|_| write_rows(&mut writer))
        .map_err(|e| Error::ReportParse(e.to_string()))?;
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::ReportParse(e.to_string()))?;
    out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
    Ok(())
}

fn report_to_csv(report: &ReportFile) -> Result<String> {
    let mut out = String::new();
    out.push_str("# meta\n");
    csv_section(&mut out, &["field", "value"], |w| {
        w.write_record(["method", &report.method])?;
        w.write_record(["log_likelihood", &format!("{:.16e}", report.log_likelihood)])?;
        w.write_record(["nbic", &format!("{:.16e}", report.nbic)])?;
        w.write_record(["num_observations", &report.num_observations.to_string()])?;
        w.write_record(["num_parameters", &report.num_parameters.to_string()])?;
        w.write_record(["iterations", &report.iterations.to_string()])?;
        w.write_record(["converged", &report.converged.to_string()])
    })?;

    out.push_str("# stimuli\n");
    csv_section(
        &mut out,
        &[
            "id",
            "psi",
            "psi_ci_lower",
            "psi_ci_upper",
            "psi_ci2_lower",
            "psi_ci2_upper",
            "ambiguity",
        ],
        |w| {
            for s in &report.stimuli {
                let (lo, hi) = interval_fields(s.psi_ci);
                let (lo2, hi2) = interval_fields(s.psi_ci_alt);
                w.write_record([
                    s.id.as_str(),
                    &format!("{:.16e}", s.psi),
                    &lo,
                    &hi,
                    &lo2,
                    &hi2,
                    &fmt_opt(s.ambiguity),
                ])?;
            }
            Ok(())
        },
    )?;

    out.push_str("# subjects\n");
    csv_section(
        &mut out,
        &[
            "id",
            "delta",
            "delta_ci_lower",
            "delta_ci_upper",
            "upsilon",
            "upsilon_ci_lower",
            "upsilon_ci_upper",
            "rejected",
        ],
        |w| {
            for s in &report.subjects {
                let (dlo, dhi) = interval_fields(s.delta_ci);
                let (ulo, uhi) = interval_fields(s.upsilon_ci);
                w.write_record([
                    s.id.as_str(),
                    &fmt_opt(s.delta),
                    &dlo,
                    &dhi,
                    &fmt_opt(s.upsilon),
                    &ulo,
                    &uhi,
                    &s.rejected.to_string(),
                ])?;
            }
            Ok(())
        },
    )?;

    out.push_str("# rejected\n");
    csv_section(&mut out, &["id"], |w| {
        for id in &report.rejected_subjects {
            w.write_record([id.as_str()])?;
        }
        Ok(())
    })?;

    out.push_str("# warnings\n");
    csv_section(&mut out, &["message"], |w| {
        for msg in &report.warnings {
            w.write_record([msg.as_str()])?;
        }
        Ok(())
    })?;
    Ok(out)
}

/// Parse a report from text.
pub fn report_from_str(text: &str, format: ReportFormat) -> Result<ReportFile> {
    match format {
        ReportFormat::Json => {
            serde_json::from_str(text).map_err(|e| Error::ReportParse(e.to_string()))
        }
        ReportFormat::Csv => report_from_csv(text),
    }
}

fn split_sections(text: &str) -> Vec<(String, String)> {
    let mut sections = Vec::new();
    let mut name: Option<String> = None;
    let mut body = String::new();
    for line in text.lines() {
        if let Some(section) = line.strip_prefix("# ") {
            if let Some(n) = name.take() {
                sections.push((n, std::mem::take(&mut body)));
            }
            name = Some(section.trim().to_string());
        } else if name.is_some() {
            body.push_str(line);
            body.push('\n');
        }
    }
    if let Some(n) = name {
        sections.push((n, body));
    }
    sections
}

fn section_records(body: &str) -> Result<Vec<csv::StringRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(body.as_bytes());
    reader
        .records()
        .collect::<csv::Result<Vec<_>>>()
        .map_err(|e| Error::ReportParse(e.to_string()))
}

fn report_from_csv(text: &str) -> Result<ReportFile> {
    let sections = split_sections(text);
    let find = |name: &str| -> Result<&str> {
        sections
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, body)| body.as_str())
            .ok_or_else(|| Error::ReportParse(format!("missing section `{name}`")))
    };

    let mut method = String::new();
    let mut log_likelihood = f64::NAN;
    let mut nbic_value = f64::NAN;
    let mut num_observations = 0;
    let mut num_parameters = 0;
    let mut iterations = 0;
    let mut converged = false;
    for record in section_records(find("meta")?)? {
        let key = &record[0];
        let value = &record[1];
        match key {
            "method" => method = value.to_string(),
            "log_likelihood" => {
                log_likelihood = value
                    .parse()
                    .map_err(|_| Error::ReportParse(format!("bad number `{value}`")))?
            }
            "nbic" => {
                nbic_value = value
                    .parse()
                    .map_err(|_| Error::ReportParse(format!("bad number `{value}`")))?
            }
            "num_observations" => {
                num_observations = value
                    .parse()
                    .map_err(|_| Error::ReportParse(format!("bad count `{value}`")))?
            }
            "num_parameters" => {
                num_parameters = value
                    .parse()
                    .map_err(|_| Error::ReportParse(format!("bad count `{value}`")))?
            }
            "iterations" => {
                iterations = value
                    .parse()
                    .map_err(|_| Error::ReportParse(format!("bad count `{value}`")))?
            }
            "converged" => {
                converged = value
                    .parse()
                    .map_err(|_| Error::ReportParse(format!("bad flag `{value}`")))?
            }
            other => return Err(Error::ReportParse(format!("unknown meta field `{other}`"))),
        }
    }

    let mut stimuli = Vec::new();
    for record in section_records(find("stimuli")?)? {
        stimuli.push(StimulusRecord {
            id: record[0].to_string(),
            psi: record[1]
                .parse()
                .map_err(|_| Error::ReportParse(format!("bad number `{}`", &record[1])))?,
            psi_ci: parse_interval(&record[2], &record[3])?,
            psi_ci_alt: parse_interval(&record[4], &record[5])?,
            ambiguity: parse_opt(&record[6])?,
        });
    }

    let mut subjects = Vec::new();
    for record in section_records(find("subjects")?)? {
        subjects.push(SubjectRecord {
            id: record[0].to_string(),
            delta: parse_opt(&record[1])?,
            delta_ci: parse_interval(&record[2], &record[3])?,
            upsilon: parse_opt(&record[4])?,
            upsilon_ci: parse_interval(&record[5], &record[6])?,
            rejected: record[7]
                .parse()
                .map_err(|_| Error::ReportParse(format!("bad flag `{}`", &record[7])))?,
        });
    }

    let rejected_subjects = section_records(find("rejected")?)?
        .iter()
        .map(|r| r[0].to_string())
        .collect();
    let warnings = section_records(find("warnings")?)?
        .iter()
        .map(|r| r[0].to_string())
        .collect();

    Ok(ReportFile {
        method,
        log_likelihood,
        nbic: nbic_value,
        num_observations,
        num_parameters,
        iterations,
        converged,
        rejected_subjects,
        stimuli,
        subjects,
        warnings,
    })
}

/// Write a report to disk.
pub fn write_report(report: &ReportFile, path: &Path, format: ReportFormat) -> Result<()> {
    let text = report_to_string(report, format)?;
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Read a report, sniffing the format from the content.
pub fn read_report(path: &Path) -> Result<ReportFile> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let format = if text.trim_start().starts_with('{') {
        ReportFormat::Json
    } else {
        ReportFormat::Csv
    };
    report_from_str(&text, format)
}

// --- rejection report serialization --------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionSubjectRecord {
    pub id: String,
    pub votes: usize,
    pub high_outliers: usize,
    pub low_outliers: usize,
    pub outlier_fraction: f64,
    pub skew: Option<f64>,
    pub rejected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedCellRecord {
    pub stimulus: String,
    pub repetition: usize,
    pub flag: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionFile {
    pub rejected_subjects: Vec<String>,
    pub subjects: Vec<RejectionSubjectRecord>,
    pub flagged_cells: Vec<FlaggedCellRecord>,
}

/// Flatten a [`RejectionReport`] against its tensor.
pub fn build_rejection_file(report: &RejectionReport, tensor: &ScoreTensor) -> RejectionFile {
    let subjects = (0..tensor.subject_count())
        .map(|i| RejectionSubjectRecord {
            id: tensor.subject_ids()[i].clone(),
            votes: report.votes[i],
            high_outliers: report.p[i],
            low_outliers: report.q[i],
            outlier_fraction: report.ratio1[i],
            skew: report.ratio2[i],
            rejected: report.rejected.contains(&i),
        })
        .collect();
    let flagged_cells = report
        .flagged_cells
        .iter()
        .map(|f| FlaggedCellRecord {
            stimulus: tensor.stimulus_ids()[f.stimulus].clone(),
            repetition: f.repetition,
            flag: match f.flag {
                CellFlag::TooFewVoters => "too_few_voters".to_string(),
                CellFlag::ZeroSpread => "zero_spread".to_string(),
                CellFlag::LowVoterCount => "low_voter_count".to_string(),
            },
        })
        .collect();
    RejectionFile {
        rejected_subjects: report
            .rejected
            .iter()
            .map(|&i| tensor.subject_ids()[i].clone())
            .collect(),
        subjects,
        flagged_cells,
    }
}
