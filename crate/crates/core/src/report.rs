//! Confusion matrices, accuracy, timing and table rendering.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::bagging::EnsembleModel;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::svm::SvmModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Partition {
    Train,
    Test,
    Combined,
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Partition::Train => "train",
            Partition::Test => "test",
            Partition::Combined => "combined",
        })
    }
}

impl FromStr for Partition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Partition::Train),
            "test" => Ok(Partition::Test),
            "combined" => Ok(Partition::Combined),
            other => Err(Error::InvalidArgument(format!("unknown partition `{other}`"))),
        }
    }
}

/// Anything that labels the rows of a dataset with class indices.
pub trait Predictor {
    fn predict_rows(&self, ds: &Dataset) -> Result<Vec<usize>>;
}

impl Predictor for SvmModel {
    fn predict_rows(&self, ds: &Dataset) -> Result<Vec<usize>> {
        self.predict_dataset(ds)
    }
}

impl Predictor for EnsembleModel {
    fn predict_rows(&self, ds: &Dataset) -> Result<Vec<usize>> {
        self.predict_dataset(ds)
    }
}

/// `counts[desired][actual]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<usize>>,
    pub partition: Partition,
}

impl ConfusionMatrix {
    pub fn new(labels: Vec<String>, partition: Partition) -> Self {
        let k = labels.len();
        ConfusionMatrix {
            labels,
            counts: vec![vec![0; k]; k],
            partition,
        }
    }

    pub fn from_predictions(
        labels: Vec<String>,
        desired: &[usize],
        actual: &[usize],
        partition: Partition,
    ) -> Result<Self> {
        if desired.len() != actual.len() {
            return Err(Error::SchemaMismatch(format!(
                "{} desired labels but {} predictions",
                desired.len(),
                actual.len()
            )));
        }
        let mut cm = ConfusionMatrix::new(labels, partition);
        let k = cm.labels.len();
        for (&d, &a) in desired.iter().zip(actual) {
            if d >= k || a >= k {
                return Err(Error::SchemaMismatch(format!("class index out of range for {k} classes")));
            }
            cm.counts[d][a] += 1;
        }
        Ok(cm)
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    /// Element-wise sum, tagged `Combined`.
    pub fn combine(&self, other: &ConfusionMatrix) -> Result<ConfusionMatrix> {
        if self.labels != other.labels {
            return Err(Error::SchemaMismatch("confusion matrices over different classes".into()));
        }
        let mut out = ConfusionMatrix::new(self.labels.clone(), Partition::Combined);
        for (i, row) in out.counts.iter_mut().enumerate() {
            for (j, c) in row.iter_mut().enumerate() {
                *c = self.counts[i][j] + other.counts[i][j];
            }
        }
        Ok(out)
    }

    /// Markdown table with desired classes as rows.
    pub fn to_markdown(&self) -> String {
        let mut out = format!("| desired \\ actual | {} |\n", self.labels.join(" | "));
        out.push_str(&format!("|---|{}\n", "---:|".repeat(self.labels.len())));
        for (label, row) in self.labels.iter().zip(&self.counts) {
            let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            out.push_str(&format!("| {label} | {} |\n", cells.join(" | ")));
        }
        out
    }
}

pub fn evaluate<P: Predictor + ?Sized>(predictor: &P, ds: &Dataset, tag: Partition) -> Result<ConfusionMatrix> {
    let predicted = predictor.predict_rows(ds)?;
    ConfusionMatrix::from_predictions(ds.class_labels().to_vec(), ds.labels(), &predicted, tag)
}

/// Percentage of rows on the diagonal.
pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyInput("accuracy of an empty confusion matrix"));
    }
    Ok(100.0 * cm.trace() as f64 / total as f64)
}

/// `100·correct/total` rounded half-up to two decimals, exactly.
pub fn format_percent(correct: usize, total: usize) -> String {
    let (c, t) = (correct as u128, total as u128);
    let hundredths = (20_000 * c + t) / (2 * t);
    format!("{}.{:02}", hundredths / 100, hundredths % 100)
}

pub fn format_accuracy(cm: &ConfusionMatrix) -> Result<String> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyInput("accuracy of an empty confusion matrix"));
    }
    Ok(format_percent(cm.trace(), total))
}

/// Runs `f` and returns its result with the elapsed wall-clock seconds.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub model: String,
    pub c: Option<f64>,
    pub degree: Option<u32>,
    pub members: Option<usize>,
    pub matrices: Vec<ConfusionMatrix>,
    /// `None` leaves the column blank so outputs stay reproducible.
    pub cpu_seconds: Option<f64>,
    pub flags: Vec<String>,
}

impl EvaluationReport {
    pub fn matrix(&self, partition: Partition) -> Option<&ConfusionMatrix> {
        self.matrices.iter().find(|m| m.partition == partition)
    }

    pub fn accuracy(&self, partition: Partition) -> Option<f64> {
        self.matrix(partition).and_then(|m| accuracy(m).ok())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Markdown,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "markdown" | "md" => Ok(OutputFormat::Markdown),
            other => Err(Error::InvalidArgument(format!("unknown format `{other}`"))),
        }
    }
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Markdown => "md",
        }
    }
}

pub const REPORT_COLUMNS: [&str; 8] = [
    "model",
    "C",
    "degree",
    "members",
    "partition",
    "accuracy",
    "cpu_seconds",
    "flags",
];

fn report_rows(reports: &[EvaluationReport]) -> Result<Vec<Vec<String>>> {
    let mut rows = Vec::new();
    for r in reports {
        for m in &r.matrices {
            rows.push(vec![
                r.model.clone(),
                r.c.map(|c| format!("{c}")).unwrap_or_default(),
                r.degree.map(|d| d.to_string()).unwrap_or_default(),
                r.members.map(|m| m.to_string()).unwrap_or_default(),
                m.partition.to_string(),
                format_accuracy(m)?,
                r.cpu_seconds.map(|s| format!("{s:.3}")).unwrap_or_default(),
                r.flags.join(";"),
            ]);
        }
    }
    Ok(rows)
}

/// One row per (report, partition) with a fixed column order.
pub fn render(reports: &[EvaluationReport], format: OutputFormat) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::EmptyInput("no reports to render"));
    }
    let header: Vec<String> = REPORT_COLUMNS.iter().map(|s| s.to_string()).collect();
    render_table(&header, &report_rows(reports)?, format)
}

/// Renders an arbitrary table as RFC-style CSV or a markdown pipe table.
pub fn render_table(header: &[String], rows: &[Vec<String>], format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
            w.write_record(header)?;
            for r in rows {
                w.write_record(r)?;
            }
            let bytes = w
                .into_inner()
                .map_err(|e| Error::io("<csv buffer>", e.into_error()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        OutputFormat::Markdown => {
            let cell = |s: &str| s.replace('|', "\\|");
            let mut out = format!("| {} |\n", header.iter().map(|h| cell(h)).collect::<Vec<_>>().join(" | "));
            out.push_str(&format!("|{}\n", "---|".repeat(header.len())));
            for r in rows {
                out.push_str(&format!("| {} |\n", r.iter().map(|c| cell(c)).collect::<Vec<_>>().join(" | ")));
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_train() -> ConfusionMatrix {
        ConfusionMatrix {
            labels: vec!["N".into(), "P".into(), "S".into()],
            counts: vec![vec![1131, 0, 2], vec![0, 128, 0], vec![1, 0, 201]],
            partition: Partition::Train,
        }
    }

    #[test]
    fn reference_accuracies() {
        assert_eq!(format_accuracy(&paper_train()).unwrap(), "99.79");
        assert_eq!(format_percent(2113, 2126), "99.39");
        assert_eq!(format_percent(653, 663), "98.49");
        assert_eq!(format_percent(0, 7), "0.00");
        assert_eq!(format_percent(1, 3), "33.33");
        assert_eq!(format_percent(2, 3), "66.67");
        assert_eq!(format_percent(1, 8), "12.50");
        assert_eq!(format_percent(1, 1600), "0.06");
        assert_eq!(format_percent(5, 5), "100.00");
        let empty = ConfusionMatrix::new(vec!["a".into()], Partition::Test);
        assert!(accuracy(&empty).is_err());
    }

    #[test]
    fn combine_sums_counts() {
        let a = paper_train();
        let c = a.combine(&a).unwrap();
        assert_eq!(c.total(), 2 * a.total());
        assert_eq!(c.partition, Partition::Combined);
    }

    #[test]
    fn render_shapes() {
        let r = EvaluationReport {
            model: "SVM, \"quoted\"".into(),
            c: Some(10.0),
            degree: Some(3),
            members: None,
            matrices: vec![paper_train()],
            cpu_seconds: None,
            flags: vec![],
        };
        let csv = render(std::slice::from_ref(&r), OutputFormat::Csv).unwrap();
        assert_eq!(
            csv,
            "model,C,degree,members,partition,accuracy,cpu_seconds,flags\r\n\"SVM, \"\"quoted\"\"\",10,3,,train,99.79,,\r\n"
        );
        assert_eq!(csv, render(std::slice::from_ref(&r), OutputFormat::Csv).unwrap());
        let md = render(&[r], OutputFormat::Markdown).unwrap();
        assert_eq!(md.lines().count(), 3);
        assert!(render(&[], OutputFormat::Csv).is_err());
    }

    #[test]
    fn timing_of_noop_is_small() {
        let ((), s) = timed(|| ());
        assert!(s < 0.001);
    }
}
