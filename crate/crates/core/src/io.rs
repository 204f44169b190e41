//! CSV formats for populations, labeled datasets, predictions and reports.

use std::io::{Read, Write};

use crate::bias::LabeledRecord;
use crate::datagen::{Group, ScoredRecord};
use crate::error::{Error, Result};
use crate::metrics::{GroupedOutcomes, Metric, MetricReport, Outcome};

/// Seventeen significant digits; parses back to the same `f64`.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn feature_header(d: usize) -> impl Iterator<Item = String> {
    (0..d).map(|j| format!("f{j}"))
}

fn check_dims<'a>(mut features: impl Iterator<Item = &'a Vec<f64>>) -> Result<usize> {
    let d = features.next().map_or(0, Vec::len);
    for f in features {
        if f.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: f.len(),
            });
        }
    }
    Ok(d)
}

/// `id,group,score,f0,...,f{d-1}`.
pub fn write_population_csv<W: Write>(out: W, records: &[ScoredRecord]) -> Result<()> {
    let d = check_dims(records.iter().map(|r| &r.features))?;
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<String> = ["id", "group", "score"]
        .into_iter()
        .map(String::from)
        .chain(feature_header(d))
        .collect();
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![r.id.to_string(), r.group.index().to_string(), fmt_real(r.score)];
        row.extend(r.features.iter().map(|&x| fmt_real(x)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `id,group,score,label,f0,...,f{d-1}`.
pub fn write_labeled_csv<W: Write>(out: W, records: &[LabeledRecord]) -> Result<()> {
    let d = check_dims(records.iter().map(|r| &r.record.features))?;
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<String> = ["id", "group", "score", "label"]
        .into_iter()
        .map(String::from)
        .chain(feature_header(d))
        .collect();
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.record.id.to_string(),
            r.record.group.index().to_string(),
            fmt_real(r.record.score),
            r.label.to_string(),
        ];
        row.extend(r.record.features.iter().map(|&x| fmt_real(x)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `group,label,score_hat,label_hat`.
pub fn write_predictions_csv<W: Write>(out: W, data: &GroupedOutcomes) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["group", "label", "score_hat", "label_hat"])?;
    for r in &data.records {
        w.write_record([
            r.group.index().to_string(),
            r.label.to_string(),
            fmt_real(r.score_hat),
            r.label_hat.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads predictions with columns `group,label,score_hat,label_hat` (any
/// order, extra columns ignored). Line numbers in errors are 1-based file lines.
pub fn read_predictions_csv<R: Read>(input: R) -> Result<GroupedOutcomes> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let malformed = |line: u64, reason: String| Error::MalformedData { line, reason };

    let headers = rdr.headers().map_err(|e| malformed(1, e.to_string()))?.clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(malformed(1, "missing header".into()));
    }
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| malformed(1, format!("missing column `{name}`")))
    };
    let (cg, cy, cs, cp) = (column("group")?, column("label")?, column("score_hat")?, column("label_hat")?);

    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            malformed(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |i: usize, name: &str| {
            row.get(i)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| malformed(line, format!("missing `{name}`")))
        };
        let binary = |i: usize, name: &str| -> Result<u8> {
            match field(i, name)? {
                "0" => Ok(0),
                "1" => Ok(1),
                other => Err(malformed(line, format!("`{name}` must be 0 or 1, got `{other}`"))),
            }
        };
        let group = Group::from_index(binary(cg, "group")?).expect("binary group");
        let label = binary(cy, "label")?;
        let label_hat = binary(cp, "label_hat")?;
        let raw = field(cs, "score_hat")?;
        let score_hat: f64 = raw
            .parse()
            .map_err(|_| malformed(line, format!("`score_hat` is not a number: `{raw}`")))?;
        if !(0.0..=1.0).contains(&score_hat) {
            return Err(malformed(line, format!("`score_hat` {score_hat} is not in [0, 1]")));
        }
        records.push(Outcome {
            group,
            label,
            score_hat,
            label_hat,
        });
    }
    if records.is_empty() {
        return Err(malformed(1, "no data rows".into()));
    }
    Ok(GroupedOutcomes { records })
}

/// One row per metric: `metric,value,status,detail`.
pub fn metric_report_csv(report: &MetricReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["metric", "value", "status", "detail"])?;
    for m in Metric::ALL {
        let v = report.get(m);
        let status = serde_json::to_value(v.status)?;
        w.write_record([
            m.name(),
            &v.value.map(fmt_real).unwrap_or_default(),
            status.as_str().unwrap_or_default(),
            &v.detail,
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
