//! Tabular dataset ingestion, splitting, standardization and MDL discretization.
//!
//! A [`Dataset`] keeps its feature columns and its nominal class column apart.
//! Features are addressed by *feature position* (`0..n_features`), i.e. the
//! schema order with the class column removed, so a feature index can never
//! name the class.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::filters::entropy_of_counts;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttributeKind {
    Numeric,
    Nominal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeSpec {
    pub name: String,
    pub kind: AttributeKind,
    /// Ordered labels; empty for numeric attributes.
    pub nominal_values: Vec<String>,
}

impl AttributeSpec {
    pub fn numeric(name: impl Into<String>) -> Self {
        AttributeSpec {
            name: name.into(),
            kind: AttributeKind::Numeric,
            nominal_values: Vec::new(),
        }
    }

    pub fn nominal(name: impl Into<String>, values: Vec<String>) -> Self {
        AttributeSpec {
            name: name.into(),
            kind: AttributeKind::Nominal,
            nominal_values: values,
        }
    }

    pub fn is_numeric(&self) -> bool {
        self.kind == AttributeKind::Numeric
    }
}

/// Column-typed table with one nominal class column.
///
/// Nominal feature cells hold the label index as an `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<AttributeSpec>,
    class: AttributeSpec,
    /// Position of the class column in the original schema order.
    class_position: usize,
    rows: Vec<Vec<f64>>,
    labels: Vec<usize>,
}

impl Dataset {
    /// Builds a dataset whose class column is the last schema column.
    pub fn new(
        features: Vec<AttributeSpec>,
        class: AttributeSpec,
        rows: Vec<Vec<f64>>,
        labels: Vec<usize>,
    ) -> Result<Self> {
        let position = features.len();
        Self::with_class_position(features, class, position, rows, labels)
    }

    pub fn with_class_position(
        features: Vec<AttributeSpec>,
        class: AttributeSpec,
        class_position: usize,
        rows: Vec<Vec<f64>>,
        labels: Vec<usize>,
    ) -> Result<Self> {
        if class.kind != AttributeKind::Nominal || class.nominal_values.is_empty() {
            return Err(Error::SchemaMismatch(format!(
                "class column `{}` must be nominal",
                class.name
            )));
        }
        if class_position > features.len() {
            return Err(Error::SchemaMismatch("class position out of range".into()));
        }
        let mut names = BTreeSet::new();
        for spec in features.iter().chain(std::iter::once(&class)) {
            if !names.insert(spec.name.as_str()) {
                return Err(Error::SchemaMismatch(format!(
                    "duplicate attribute name `{}`",
                    spec.name
                )));
            }
            if (spec.kind == AttributeKind::Nominal) == spec.nominal_values.is_empty() {
                return Err(Error::SchemaMismatch(format!(
                    "attribute `{}`: nominal values must be present iff nominal",
                    spec.name
                )));
            }
        }
        if rows.len() != labels.len() {
            return Err(Error::SchemaMismatch(format!(
                "{} rows but {} class labels",
                rows.len(),
                labels.len()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != features.len() {
                return Err(Error::SchemaMismatch(format!(
                    "row {i} has {} feature cells, expected {}",
                    row.len(),
                    features.len()
                )));
            }
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class.nominal_values.len()) {
            return Err(Error::SchemaMismatch(format!("class index {bad} out of range")));
        }
        Ok(Dataset {
            features,
            class,
            class_position,
            rows,
            labels,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class.nominal_values.len()
    }

    pub fn features(&self) -> &[AttributeSpec] {
        &self.features
    }

    pub fn feature(&self, f: usize) -> &AttributeSpec {
        &self.features[f]
    }

    pub fn class_attribute(&self) -> &AttributeSpec {
        &self.class
    }

    pub fn class_labels(&self) -> &[String] {
        &self.class.nominal_values
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.features.iter().map(|a| a.name.clone()).collect()
    }

    /// Full schema in file order, class column included.
    pub fn schema(&self) -> Vec<&AttributeSpec> {
        let mut out: Vec<&AttributeSpec> = self.features.iter().collect();
        out.insert(self.class_position, &self.class);
        out
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn column(&self, f: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[f]).collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Empirical class frequencies.
    pub fn class_priors(&self) -> Vec<f64> {
        let n = self.n_rows() as f64;
        self.class_counts().iter().map(|&c| c as f64 / n).collect()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|a| a.name == name)
    }

    /// Rows picked by index (duplicates allowed), schema unchanged.
    pub fn take_rows(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.clone(),
            class: self.class.clone(),
            class_position: self.class_position,
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Concatenates rows of two datasets with identical schemas.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.features != other.features || self.class != other.class {
            return Err(Error::SchemaMismatch("cannot concatenate different schemas".into()));
        }
        let mut out = self.clone();
        out.rows.extend(other.rows.iter().cloned());
        out.labels.extend_from_slice(&other.labels);
        Ok(out)
    }

    /// Checks that `other` carries the same feature schema.
    pub fn check_same_features(&self, other: &Dataset) -> Result<()> {
        if self.features != other.features {
            return Err(Error::SchemaMismatch(format!(
                "expected features [{}], got [{}]",
                self.feature_names().join(","),
                other.feature_names().join(",")
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Csv,
    Arff,
}

impl FileFormat {
    pub fn from_path(path: &Path) -> FileFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("arff") => FileFormat::Arff,
            _ => FileFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    pub class_column: String,
    /// Columns dropped at load time; names absent from the file are ignored.
    pub drop_columns: Vec<String>,
    /// Raw class value → label renames, e.g. `1 → Normal`.
    pub class_aliases: Vec<(String, String)>,
}

impl LoadOptions {
    pub fn new(class_column: impl Into<String>) -> Self {
        LoadOptions {
            class_column: class_column.into(),
            ..Default::default()
        }
    }
}

pub fn load_dataset(path: &Path, format: FileFormat, options: &LoadOptions) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        FileFormat::Csv => parse_csv(&text, options),
        FileFormat::Arff => parse_arff(&text, options),
    }
}

struct RawTable {
    columns: Vec<AttributeSpec>,
    /// (file line, cells)
    rows: Vec<(usize, Vec<String>)>,
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell == "?"
}

pub fn parse_csv(text: &str, options: &LoadOptions) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let columns = reader
        .headers()?
        .iter()
        .map(AttributeSpec::numeric)
        .collect::<Vec<_>>();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() != columns.len() {
            return Err(Error::Parse {
                line,
                column: String::new(),
                message: format!("expected {} cells, found {}", columns.len(), record.len()),
            });
        }
        rows.push((line, record.iter().map(str::to_owned).collect()));
    }
    build_dataset(RawTable { columns, rows }, options)
}

fn unquote(s: &str) -> &str {
    let s = s.trim();
    if s.len() >= 2
        && ((s.starts_with('\'') && s.ends_with('\'')) || (s.starts_with('"') && s.ends_with('"')))
    {
        &s[1..s.len() - 1]
    } else {
        s
    }
}

/// Splits on commas outside single or double quotes.
fn split_arff_values(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quote: Option<char> = None;
    for ch in line.chars() {
        match quote {
            Some(q) if ch == q => {
                quote = None;
                cur.push(ch);
            }
            Some(_) => cur.push(ch),
            None if ch == '\'' || ch == '"' => {
                quote = Some(ch);
                cur.push(ch);
            }
            None if ch == ',' => out.push(unquote(&std::mem::take(&mut cur)).to_owned()),
            None => cur.push(ch),
        }
    }
    out.push(unquote(&cur).to_owned());
    out
}

/// Splits `@attribute <name> <type>` into name and type, honouring quoted names.
fn split_attribute_decl(rest: &str, line: usize) -> Result<(String, String)> {
    let rest = rest.trim();
    let err = |m: &str| Error::Parse {
        line,
        column: String::new(),
        message: m.to_owned(),
    };
    let (name, tail) = if let Some(q) = rest.chars().next().filter(|c| *c == '\'' || *c == '"') {
        let end = rest[1..].find(q).ok_or_else(|| err("unterminated quoted attribute name"))?;
        (rest[1..1 + end].to_owned(), &rest[end + 2..])
    } else {
        let end = rest
            .find(char::is_whitespace)
            .ok_or_else(|| err("attribute declaration without a type"))?;
        (rest[..end].to_owned(), &rest[end..])
    };
    Ok((name, tail.trim().to_owned()))
}

pub fn parse_arff(text: &str, options: &LoadOptions) -> Result<Dataset> {
    let mut columns = Vec::new();
    let mut rows = Vec::new();
    let mut in_data = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if in_data {
            rows.push((line_no, split_arff_values(line)));
            continue;
        }
        let lower = line.to_ascii_lowercase();
        if lower.starts_with("@relation") {
            continue;
        } else if lower.starts_with("@attribute") {
            let (name, ty) = split_attribute_decl(&line["@attribute".len()..], line_no)?;
            let ty_lower = ty.to_ascii_lowercase();
            let spec = if ty.starts_with('{') && ty.ends_with('}') {
                let values = split_arff_values(&ty[1..ty.len() - 1]);
                AttributeSpec::nominal(name, values)
            } else if matches!(ty_lower.as_str(), "numeric" | "real" | "integer") {
                AttributeSpec::numeric(name)
            } else {
                return Err(Error::Parse {
                    line: line_no,
                    column: name,
                    message: format!("unsupported attribute type `{ty}`"),
                });
            };
            columns.push(spec);
        } else if lower.starts_with("@data") {
            in_data = true;
        } else {
            return Err(Error::Parse {
                line: line_no,
                column: String::new(),
                message: format!("unexpected header line `{line}`"),
            });
        }
    }
    for (line, cells) in &rows {
        if cells.len() != columns.len() {
            return Err(Error::Parse {
                line: *line,
                column: String::new(),
                message: format!("expected {} values, found {}", columns.len(), cells.len()),
            });
        }
    }
    build_dataset(RawTable { columns, rows }, options)
}

fn build_dataset(table: RawTable, options: &LoadOptions) -> Result<Dataset> {
    let RawTable { columns, rows } = table;
    let class_idx = columns
        .iter()
        .position(|c| c.name == options.class_column)
        .ok_or_else(|| Error::UnknownColumn(options.class_column.clone()))?;
    let keep: Vec<usize> = (0..columns.len())
        .filter(|&i| i == class_idx || !options.drop_columns.contains(&columns[i].name))
        .collect();

    let alias = |raw: &str| -> String {
        options
            .class_aliases
            .iter()
            .find(|(from, _)| from == raw)
            .map(|(_, to)| to.clone())
            .unwrap_or_else(|| raw.to_owned())
    };

    for (row_no, (_, cells)) in rows.iter().enumerate() {
        for &c in &keep {
            if is_missing(&cells[c]) {
                return Err(Error::MissingValue {
                    row: row_no,
                    column: columns[c].name.clone(),
                });
            }
        }
    }

    let declared = &columns[class_idx];
    let class_values: Vec<String> = match declared.kind {
        AttributeKind::Nominal => declared.nominal_values.iter().map(|v| alias(v)).collect(),
        AttributeKind::Numeric => {
            let distinct: BTreeSet<String> =
                rows.iter().map(|(_, cells)| alias(&cells[class_idx])).collect();
            distinct.into_iter().collect()
        }
    };
    let mut labels = Vec::with_capacity(rows.len());
    for (line, cells) in &rows {
        let label = alias(&cells[class_idx]);
        let idx = class_values
            .iter()
            .position(|v| *v == label)
            .ok_or_else(|| Error::Parse {
                line: *line,
                column: declared.name.clone(),
                message: format!("undeclared class label `{label}`"),
            })?;
        labels.push(idx);
    }
    let observed: BTreeSet<usize> = labels.iter().copied().collect();
    if observed.len() < 2 {
        return Err(Error::DegenerateClass(observed.len()));
    }

    let feature_cols: Vec<usize> = keep.iter().copied().filter(|&c| c != class_idx).collect();
    let class_position = keep.iter().position(|&c| c == class_idx).unwrap_or(0);
    let mut data = Vec::with_capacity(rows.len());
    for (line, cells) in &rows {
        let mut row = Vec::with_capacity(feature_cols.len());
        for &c in &feature_cols {
            let spec = &columns[c];
            let cell = cells[c].as_str();
            let value = match spec.kind {
                AttributeKind::Numeric => cell.parse::<f64>().ok().filter(|v| v.is_finite()),
                AttributeKind::Nominal => spec
                    .nominal_values
                    .iter()
                    .position(|v| v == cell)
                    .map(|i| i as f64),
            };
            let value = value.ok_or_else(|| Error::Parse {
                line: *line,
                column: spec.name.clone(),
                message: format!("cannot parse `{cell}`"),
            })?;
            row.push(value);
        }
        data.push(row);
    }
    let features = feature_cols.iter().map(|&c| columns[c].clone()).collect();
    let class = AttributeSpec::nominal(declared.name.clone(), class_values);
    Dataset::with_class_position(features, class, class_position, data, labels)
}

/// Writes the dataset as CSV in schema order. Numbers use the shortest
/// representation that parses back to the same `f64`.
pub fn write_csv<W: Write>(ds: &Dataset, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let schema = ds.schema();
    writer.write_record(schema.iter().map(|a| a.name.as_str()))?;
    for (row, &label) in ds.rows.iter().zip(&ds.labels) {
        let mut cells: Vec<String> = row
            .iter()
            .zip(&ds.features)
            .map(|(&v, spec)| match spec.kind {
                AttributeKind::Numeric => format!("{v}"),
                AttributeKind::Nominal => spec.nominal_values[v as usize].clone(),
            })
            .collect();
        cells.insert(ds.class_position, ds.class.nominal_values[label].clone());
        writer.write_record(&cells)?;
    }
    writer.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

/// Keeps exactly the given feature positions (in schema order) plus the class.
pub fn select_features(ds: &Dataset, mask: &[usize]) -> Result<Dataset> {
    if mask.is_empty() {
        return Err(Error::EmptyFeatureSet);
    }
    let mut seen = BTreeSet::new();
    for &f in mask {
        if f >= ds.n_features() {
            return Err(Error::FeatureOutOfRange {
                index: f,
                n_features: ds.n_features(),
            });
        }
        if !seen.insert(f) {
            return Err(Error::DuplicateFeature(f));
        }
    }
    let keep: Vec<usize> = seen.into_iter().collect();
    // class column keeps its place relative to the surviving features
    let class_position = keep.iter().filter(|&&f| f < ds.class_position).count();
    let features = keep.iter().map(|&f| ds.features[f].clone()).collect();
    let rows = ds
        .rows
        .iter()
        .map(|r| keep.iter().map(|&f| r[f]).collect())
        .collect();
    Dataset::with_class_position(features, ds.class.clone(), class_position, rows, ds.labels.clone())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.7,
            seed: 42,
            stratified: true,
        }
    }
}

/// Seeded train/test partition. Per class `c`, the training side receives
/// `floor(train_fraction * n_c)` rows; both sides keep the original row order.
pub fn stratified_split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let (train_idx, test_idx) = split_indices(ds, spec)?;
    Ok((ds.take_rows(&train_idx), ds.take_rows(&test_idx)))
}

pub fn split_indices(ds: &Dataset, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    let f = spec.train_fraction;
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::InvalidSplit(format!("train fraction {f} not in (0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut train = Vec::new();
    let groups: Vec<Vec<usize>> = if spec.stratified {
        (0..ds.n_classes())
            .map(|c| (0..ds.n_rows()).filter(|&i| ds.labels[i] == c).collect())
            .filter(|g: &Vec<usize>| !g.is_empty())
            .collect()
    } else {
        vec![(0..ds.n_rows()).collect()]
    };
    for mut group in groups {
        let n = group.len();
        let n_train = (f * n as f64).floor() as usize;
        if spec.stratified && n < 2 {
            let class = &ds.class.nominal_values[ds.labels[group[0]]];
            return Err(Error::InvalidSplit(format!("class `{class}` has fewer than 2 rows")));
        }
        if n_train == 0 || n_train == n {
            return Err(Error::InvalidSplit(format!(
                "fraction {f} leaves an empty side for a group of {n} rows"
            )));
        }
        group.shuffle(&mut rng);
        train.extend_from_slice(&group[..n_train]);
    }
    train.sort_unstable();
    let mut in_train = vec![false; ds.n_rows()];
    for &i in &train {
        in_train[i] = true;
    }
    let test = (0..ds.n_rows()).filter(|&i| !in_train[i]).collect();
    Ok((train, test))
}

/// Stratified subsample of roughly `target` rows, used for quick runs.
pub fn stratified_subsample(ds: &Dataset, target: usize, seed: u64) -> Result<Dataset> {
    if target >= ds.n_rows() {
        return Ok(ds.clone());
    }
    let spec = SplitSpec {
        train_fraction: target as f64 / ds.n_rows() as f64,
        seed,
        stratified: true,
    };
    let (keep, _) = split_indices(ds, &spec)?;
    Ok(ds.take_rows(&keep))
}

const SD_FLOOR: f64 = 1e-12;

/// Per-feature z-scoring fitted on training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub feature_names: Vec<String>,
    pub means: Vec<f64>,
    /// Population standard deviations; values below 1e-12 are replaced by 1.
    pub sds: Vec<f64>,
    /// `false` for nominal features, which pass through untouched.
    pub numeric: Vec<bool>,
}

impl Standardizer {
    pub fn fit(train: &Dataset) -> Result<Standardizer> {
        if train.n_rows() == 0 {
            return Err(Error::EmptyInput("standardizer training set"));
        }
        let n = train.n_rows() as f64;
        let mut means = Vec::with_capacity(train.n_features());
        let mut sds = Vec::with_capacity(train.n_features());
        let mut numeric = Vec::with_capacity(train.n_features());
        for (f, spec) in train.features().iter().enumerate() {
            if !spec.is_numeric() {
                means.push(0.0);
                sds.push(1.0);
                numeric.push(false);
                continue;
            }
            let mean = train.rows.iter().map(|r| r[f]).sum::<f64>() / n;
            let var = train.rows.iter().map(|r| (r[f] - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            means.push(mean);
            sds.push(if sd < SD_FLOOR { 1.0 } else { sd });
            numeric.push(true);
        }
        Ok(Standardizer {
            feature_names: train.feature_names(),
            means,
            sds,
            numeric,
        })
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(f, &x)| {
                if self.numeric[f] {
                    (x - self.means[f]) / self.sds[f]
                } else {
                    x
                }
            })
            .collect()
    }

    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        let numeric: Vec<bool> = ds.features().iter().map(AttributeSpec::is_numeric).collect();
        if ds.feature_names() != self.feature_names || numeric != self.numeric {
            return Err(Error::SchemaMismatch(format!(
                "standardizer fitted on [{}], applied to [{}]",
                self.feature_names.join(","),
                ds.feature_names().join(",")
            )));
        }
        let mut out = ds.clone();
        for row in &mut out.rows {
            *row = self.transform_row(row);
        }
        Ok(out)
    }
}

pub fn fit_standardizer(train: &Dataset) -> Result<Standardizer> {
    Standardizer::fit(train)
}

pub fn apply_standardizer(s: &Standardizer, ds: &Dataset) -> Result<Dataset> {
    s.apply(ds)
}

/// Per-feature ascending cut points. Nominal features have no cuts and bin
/// to their label index.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizationMap {
    pub cuts: Vec<Vec<f64>>,
    pub numeric: Vec<bool>,
}

impl DiscretizationMap {
    /// Fits MDL cut points for every numeric feature of `train`.
    pub fn fit(train: &Dataset) -> Result<DiscretizationMap> {
        let mut cuts = Vec::with_capacity(train.n_features());
        for (f, spec) in train.features().iter().enumerate() {
            cuts.push(if spec.is_numeric() {
                discretize_mdl(train, f)?
            } else {
                Vec::new()
            });
        }
        Ok(DiscretizationMap {
            cuts,
            numeric: train.features().iter().map(AttributeSpec::is_numeric).collect(),
        })
    }

    pub fn n_features(&self) -> usize {
        self.cuts.len()
    }

    /// Bin index of `value`: number of cut points strictly below it.
    pub fn bin(&self, feature: usize, value: f64) -> u32 {
        if self.numeric[feature] {
            self.cuts[feature].partition_point(|&c| c < value) as u32
        } else {
            value as u32
        }
    }

    pub fn binned_column(&self, ds: &Dataset, feature: usize) -> Vec<u32> {
        ds.rows.iter().map(|r| self.bin(feature, r[feature])).collect()
    }
}

/// Fayyad–Irani recursive entropy discretization with the MDL stopping rule.
pub fn discretize_mdl(train: &Dataset, feature: usize) -> Result<Vec<f64>> {
    if feature >= train.n_features() {
        return Err(Error::FeatureOutOfRange {
            index: feature,
            n_features: train.n_features(),
        });
    }
    if !train.feature(feature).is_numeric() {
        return Err(Error::InvalidArgument(format!(
            "feature `{}` is nominal",
            train.feature(feature).name
        )));
    }
    if train.n_rows() == 0 {
        return Err(Error::EmptyInput("discretization training set"));
    }
    let mut pairs: Vec<(f64, usize)> = train
        .rows
        .iter()
        .zip(&train.labels)
        .map(|(r, &l)| (r[feature], l))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut cuts = Vec::new();
    mdl_split(&pairs, train.n_classes(), &mut cuts);
    cuts.sort_by(f64::total_cmp);
    Ok(cuts)
}

fn counts_of(pairs: &[(f64, usize)], n_classes: usize) -> Vec<usize> {
    let mut counts = vec![0; n_classes];
    for &(_, c) in pairs {
        counts[c] += 1;
    }
    counts
}

fn present(counts: &[usize]) -> usize {
    counts.iter().filter(|&&c| c > 0).count()
}

fn mdl_split(pairs: &[(f64, usize)], n_classes: usize, cuts: &mut Vec<f64>) {
    let n = pairs.len();
    if n < 2 {
        return;
    }
    // Runs of equal values with their class when pure.
    let mut runs: Vec<(usize, usize, Option<usize>)> = Vec::new();
    let mut start = 0;
    for i in 1..=n {
        if i == n || pairs[i].0 != pairs[start].0 {
            let first = pairs[start].1;
            let pure = pairs[start..i].iter().all(|p| p.1 == first).then_some(first);
            runs.push((start, i, pure));
            start = i;
        }
    }
    if runs.len() < 2 {
        return;
    }

    let total = counts_of(pairs, n_classes);
    let h_all = entropy_of_counts(&total);
    let mut left = vec![0usize; n_classes];
    let mut best: Option<(f64, usize)> = None;
    for w in 0..runs.len() - 1 {
        let (s, e, pure) = runs[w];
        for &(_, c) in &pairs[s..e] {
            left[c] += 1;
        }
        let next_pure = runs[w + 1].2;
        let boundary = !(pure.is_some() && pure == next_pure);
        if !boundary {
            continue;
        }
        let right: Vec<usize> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
        let nl = e as f64;
        let nr = (n - e) as f64;
        let weighted =
            (nl * entropy_of_counts(&left) + nr * entropy_of_counts(&right)) / n as f64;
        if best.is_none_or(|(b, _)| weighted < b) {
            best = Some((weighted, e));
        }
    }
    let Some((weighted, split)) = best else {
        return;
    };
    let (lo, hi) = pairs.split_at(split);
    let left_counts = counts_of(lo, n_classes);
    let right_counts = counts_of(hi, n_classes);
    let k = present(&total) as f64;
    let k1 = present(&left_counts) as f64;
    let k2 = present(&right_counts) as f64;
    let h1 = entropy_of_counts(&left_counts);
    let h2 = entropy_of_counts(&right_counts);
    let gain = h_all - weighted;
    let delta = (3f64.powf(k) - 2.0).log2() - (k * h_all - k1 * h1 - k2 * h2);
    let nf = n as f64;
    if gain > ((nf - 1.0).log2() + delta) / nf {
        cuts.push((lo[lo.len() - 1].0 + hi[0].0) / 2.0);
        mdl_split(lo, n_classes, cuts);
        mdl_split(hi, n_classes, cuts);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn toy(values: &[&[f64]], labels: &[usize], classes: &[&str]) -> Dataset {
        let nf = values[0].len();
        let features = (0..nf).map(|i| AttributeSpec::numeric(format!("f{i}"))).collect();
        let class = AttributeSpec::nominal("cls", classes.iter().map(|s| s.to_string()).collect());
        Dataset::new(
            features,
            class,
            values.iter().map(|r| r.to_vec()).collect(),
            labels.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn csv_load_infers_schema_and_sorts_labels() {
        let text = "a,cls,b\n1,X,2.5\n3,Y,4\n5,X,6\n";
        let ds = parse_csv(text, &LoadOptions::new("cls")).unwrap();
        assert_eq!(ds.n_rows(), 3);
        assert_eq!(ds.feature_names(), vec!["a", "b"]);
        assert_eq!(ds.class_labels(), &["X".to_string(), "Y".to_string()]);
        assert_eq!(ds.labels(), &[0, 1, 0]);
        assert_eq!(ds.row(0), &[1.0, 2.5]);
        let mut out = Vec::new();
        write_csv(&ds, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
    }

    #[test]
    fn one_row_csv_is_degenerate() {
        let err = parse_csv("a,b,cls\n1,2,X", &LoadOptions::new("cls")).unwrap_err();
        assert!(matches!(err, Error::DegenerateClass(1)), "{err}");
    }

    #[test]
    fn csv_errors_report_position() {
        let err = parse_csv("a,cls\n1,X\nfoo,Y\n", &LoadOptions::new("cls")).unwrap_err();
        match err {
            Error::Parse { line, column, .. } => {
                assert_eq!(line, 3);
                assert_eq!(column, "a");
            }
            other => panic!("unexpected {other}"),
        }
        let err = parse_csv("a,cls\n1,X\n?,Y\n", &LoadOptions::new("cls")).unwrap_err();
        assert!(matches!(err, Error::MissingValue { row: 1, .. }), "{err}");
        let err = parse_csv("a,cls\n1,X\n,Y\n", &LoadOptions::new("cls")).unwrap_err();
        assert!(matches!(err, Error::MissingValue { row: 1, .. }), "{err}");
        let err = parse_csv("a,b\n1,X\n", &LoadOptions::new("cls")).unwrap_err();
        assert!(matches!(err, Error::UnknownColumn(_)));
    }

    #[test]
    fn drop_columns_and_aliases() {
        let opts = LoadOptions {
            class_column: "NSP".into(),
            drop_columns: vec!["CLASS".into(), "absent".into()],
            class_aliases: vec![("1".into(), "Normal".into()), ("3".into(), "Pathologic".into())],
        };
        let ds = parse_csv("LB,CLASS,NSP\n120,1,1\n130,9,3\n", &opts).unwrap();
        assert_eq!(ds.feature_names(), vec!["LB"]);
        assert_eq!(ds.class_labels(), &["Normal".to_string(), "Pathologic".to_string()]);
    }

    #[test]
    fn arff_subset() {
        let text = "% comment\n@relation toy\n@attribute x numeric\n@attribute 'the color' {red,green}\n\
                    @attribute class {no,yes}\n@data\n1.5,red,no\n% mid comment\n2,'green',yes\n";
        let ds = parse_arff(text, &LoadOptions::new("class")).unwrap();
        assert_eq!(ds.n_rows(), 2);
        assert_eq!(ds.feature(1).kind, AttributeKind::Nominal);
        assert_eq!(ds.row(1), &[2.0, 1.0]);
        assert_eq!(ds.labels(), &[0, 1]);
        let mut out = Vec::new();
        write_csv(&ds, &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "x,the color,class\n1.5,red,no\n2,green,yes\n"
        );
    }

    #[test]
    fn select_features_validation() {
        let ds = toy(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]], &[0, 1], &["A", "B"]);
        let one = select_features(&ds, &[0]).unwrap();
        assert_eq!(one.n_features(), 1);
        assert_eq!(one.column(0), vec![1.0, 4.0]);
        assert_eq!(select_features(&ds, &[2, 1, 0]).unwrap(), ds);
        assert!(matches!(select_features(&ds, &[0, 0]), Err(Error::DuplicateFeature(0))));
        assert!(matches!(select_features(&ds, &[3]), Err(Error::FeatureOutOfRange { .. })));
        assert!(matches!(select_features(&ds, &[]), Err(Error::EmptyFeatureSet)));
    }

    #[test]
    fn split_balanced_four_rows() {
        let ds = toy(&[&[0.0], &[1.0], &[2.0], &[3.0]], &[0, 0, 1, 1], &["A", "B"]);
        let spec = SplitSpec {
            train_fraction: 0.5,
            seed: 7,
            stratified: true,
        };
        let (train, test) = stratified_split(&ds, &spec).unwrap();
        assert_eq!(train.class_counts(), vec![1, 1]);
        assert_eq!(test.class_counts(), vec![1, 1]);
        let again = stratified_split(&ds, &spec).unwrap();
        assert_eq!((train, test), again);
    }

    #[test]
    fn split_rejects_singleton_class() {
        let ds = toy(&[&[0.0], &[1.0], &[2.0]], &[0, 0, 1], &["A", "B"]);
        let err = stratified_split(&ds, &SplitSpec::default()).unwrap_err();
        assert!(matches!(err, Error::InvalidSplit(_)));
    }

    #[test]
    fn standardizer_examples() {
        let ds = toy(&[&[0.0, 5.0], &[2.0, 5.0]], &[0, 1], &["A", "B"]);
        let s = fit_standardizer(&ds).unwrap();
        assert_eq!(s.means, vec![1.0, 5.0]);
        assert_eq!(s.sds, vec![1.0, 1.0]);
        let z = s.apply(&ds).unwrap();
        assert_eq!(z.column(0), vec![-1.0, 1.0]);
        assert_eq!(z.column(1), vec![0.0, 0.0]);
        assert_eq!(s.transform_row(&[3.0, 5.0]), vec![2.0, 0.0]);

        let constant = toy(&[&[5.0], &[5.0], &[5.0]], &[0, 1, 0], &["A", "B"]);
        let s = fit_standardizer(&constant).unwrap();
        let once = s.apply(&constant).unwrap();
        assert_eq!(once.column(0), vec![0.0; 3]);
        let twice = fit_standardizer(&once).unwrap().apply(&once).unwrap();
        assert_eq!(twice.column(0), vec![0.0; 3]);

        let other = toy(&[&[1.0]], &[0], &["A", "B"]);
        assert!(matches!(s.apply(&toy(&[&[1.0, 2.0]], &[0], &["A", "B"])), Err(Error::SchemaMismatch(_))));
        assert!(s.apply(&other).is_ok());
    }

    #[test]
    fn mdl_examples() {
        let ds = toy(&[&[1.0], &[2.0], &[3.0], &[4.0]], &[0, 0, 1, 1], &["A", "B"]);
        assert_eq!(discretize_mdl(&ds, 0).unwrap(), vec![2.5]);
        let pure = toy(&[&[1.0], &[2.0], &[3.0], &[4.0]], &[0, 0, 0, 0], &["A", "B"]);
        assert!(discretize_mdl(&pure, 0).unwrap().is_empty());
        let flat = toy(&[&[1.0], &[1.0], &[1.0], &[1.0]], &[0, 1, 0, 1], &["A", "B"]);
        assert!(discretize_mdl(&flat, 0).unwrap().is_empty());

        let map = DiscretizationMap::fit(&ds).unwrap();
        assert_eq!(map.binned_column(&ds, 0), vec![0, 0, 1, 1]);
    }
}
