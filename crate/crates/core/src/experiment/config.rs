use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::bagging::VoteRule;
use crate::data::{LoadOptions, SplitSpec};
use crate::error::{Error, Result};
use crate::report::OutputFormat;
use crate::selection::SelectorConfigs;
use crate::svm::{KernelSpec, SvmConfig};

/// One point of the C × degree grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub c: f64,
    pub degree: u32,
}

impl Cell {
    pub const fn new(c: f64, degree: u32) -> Self {
        Cell { c, degree }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.c, self.degree)
    }
}

impl FromStr for Cell {
    type Err = Error;

    /// `C:degree`, e.g. `1000:4`.
    fn from_str(s: &str) -> Result<Self> {
        let (c, d) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("cell `{s}` is not C:degree")))?;
        Ok(Cell {
            c: parse_value(c, "C")?,
            degree: parse_value(d, "degree")?,
        })
    }
}

/// How the EFS41 feature set of the ensemble experiment is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureVariant {
    /// Union with keep-all rankers.
    Union,
    /// Union with rankers cut to the size of the CFS subset.
    UnionTopK,
    /// Mean-rank top-k, k the size of the CFS subset.
    MeanRankTopK,
}

impl FeatureVariant {
    pub const ALL: [FeatureVariant; 3] = [
        FeatureVariant::Union,
        FeatureVariant::UnionTopK,
        FeatureVariant::MeanRankTopK,
    ];
}

impl fmt::Display for FeatureVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureVariant::Union => "union",
            FeatureVariant::UnionTopK => "union_topk",
            FeatureVariant::MeanRankTopK => "mean_rank_topk",
        })
    }
}

impl FromStr for FeatureVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureVariant::ALL
            .into_iter()
            .find(|v| v.to_string() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown feature variant `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub data: Option<PathBuf>,
    pub class_column: String,
    pub drop_columns: Vec<String>,
    pub class_aliases: Vec<(String, String)>,
    pub train_fraction: f64,
    pub stratified: bool,
    /// Master seed: fixes the split and every bootstrap.
    pub seed: u64,
    pub c_grid: Vec<f64>,
    pub degree_grid: Vec<u32>,
    pub coef0: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub baseline: Cell,
    pub exp2_cells: Vec<Cell>,
    pub exp3_cells: Vec<Cell>,
    pub ensemble_cell: Cell,
    pub members_min: usize,
    pub members_max: usize,
    pub summary_members: usize,
    pub vote: VoteRule,
    pub ensemble_features: FeatureVariant,
    pub selectors: SelectorConfigs,
    pub highlight_threshold: f64,
    pub output_dir: PathBuf,
    pub format: OutputFormat,
    pub quick: bool,
    pub quick_rows: usize,
}

const DEFAULT_DROP: [&str; 18] = [
    "FileName", "Date", "SegFile", "b", "e", "LBE", "DR", "A", "B", "C", "D", "E", "AD", "DE", "LD", "FS",
    "SUSP", "CLASS",
];

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            data: None,
            class_column: "NSP".into(),
            drop_columns: DEFAULT_DROP.iter().map(|s| s.to_string()).collect(),
            class_aliases: vec![
                ("1".into(), "Normal".into()),
                ("2".into(), "Suspect".into()),
                ("3".into(), "Pathologic".into()),
            ],
            train_fraction: 0.7,
            stratified: true,
            seed: 42,
            c_grid: vec![10.0, 50.0, 100.0, 500.0, 1000.0, 10000.0],
            degree_grid: vec![2, 3, 4, 5, 10],
            coef0: 1.0,
            tolerance: 1e-3,
            max_iterations: 1_000_000,
            baseline: Cell::new(10.0, 3),
            exp2_cells: vec![
                Cell::new(10.0, 3),
                Cell::new(500.0, 3),
                Cell::new(500.0, 4),
                Cell::new(100.0, 5),
                Cell::new(10000.0, 5),
            ],
            exp3_cells: vec![
                Cell::new(10.0, 3),
                Cell::new(1000.0, 4),
                Cell::new(500.0, 3),
                Cell::new(500.0, 4),
                Cell::new(100.0, 5),
            ],
            ensemble_cell: Cell::new(1000.0, 4),
            members_min: 1,
            members_max: 10,
            summary_members: 7,
            vote: VoteRule::UnweightedMajority,
            ensemble_features: FeatureVariant::UnionTopK,
            selectors: SelectorConfigs::default(),
            highlight_threshold: 99.0,
            output_dir: PathBuf::from("results"),
            format: OutputFormat::Csv,
            quick: false,
            quick_rows: 400,
        }
    }
}

fn parse_value<T: FromStr>(s: &str, key: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{}`", s.trim())))
}

fn parse_list<T: FromStr>(s: &str, key: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| parse_value(p, key))
        .collect()
}

fn parse_bool(s: &str, key: &str) -> Result<bool> {
    match s.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(Error::Config(format!("`{key}`: expected a boolean, got `{other}`"))),
    }
}

impl ExperimentConfig {
    /// Parses `key = value` lines over the defaults; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {}", i + 1, e.root())))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let sel = &mut self.selectors;
        match key {
            "data" => self.data = Some(PathBuf::from(v)),
            "class_column" => self.class_column = v.to_string(),
            "drop_columns" => self.drop_columns = parse_list(v, key)?,
            "class_aliases" => {
                self.class_aliases = v
                    .split(',')
                    .map(str::trim)
                    .filter(|p| !p.is_empty())
                    .map(|p| {
                        p.split_once(':')
                            .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
                            .ok_or_else(|| Error::Config(format!("alias `{p}` is not raw:label")))
                    })
                    .collect::<Result<_>>()?
            }
            "train_fraction" => self.train_fraction = parse_value(v, key)?,
            "stratified" => self.stratified = parse_bool(v, key)?,
            "seed" => self.seed = parse_value(v, key)?,
            "c_grid" => self.c_grid = parse_list(v, key)?,
            "degree_grid" => self.degree_grid = parse_list(v, key)?,
            "coef0" => self.coef0 = parse_value(v, key)?,
            "tolerance" => self.tolerance = parse_value(v, key)?,
            "max_iterations" => self.max_iterations = parse_value(v, key)?,
            "baseline" => self.baseline = v.parse()?,
            "exp2_cells" => self.exp2_cells = parse_list(v, key)?,
            "exp3_cells" => self.exp3_cells = parse_list(v, key)?,
            "ensemble_cell" => self.ensemble_cell = v.parse()?,
            "members" => {
                let (lo, hi) = v
                    .split_once("..")
                    .ok_or_else(|| Error::Config(format!("members `{v}` is not lo..hi")))?;
                self.members_min = parse_value(lo, key)?;
                self.members_max = parse_value(hi, key)?;
            }
            "summary_members" => self.summary_members = parse_value(v, key)?,
            "vote" => self.vote = v.parse()?,
            "ensemble_features" => self.ensemble_features = v.parse()?,
            "best_first_stale_limit" => sel.best_first.stale_limit = parse_value(v, key)?,
            "genetic_population" => sel.genetic.population = parse_value(v, key)?,
            "genetic_generations" => sel.genetic.generations = parse_value(v, key)?,
            "genetic_crossover" => sel.genetic.crossover_prob = parse_value(v, key)?,
            "genetic_mutation" => sel.genetic.mutation_prob = parse_value(v, key)?,
            "genetic_seed" => sel.genetic.seed = parse_value(v, key)?,
            "relieff_samples" => {
                sel.relieff.samples = match v {
                    "all" => None,
                    n => Some(parse_value(n, key)?),
                }
            }
            "relieff_neighbors" => sel.relieff.neighbors = parse_value(v, key)?,
            "relieff_seed" => sel.relieff.seed = parse_value(v, key)?,
            "highlight_threshold" => self.highlight_threshold = parse_value(v, key)?,
            "output_dir" => self.output_dir = PathBuf::from(v),
            "format" => self.format = v.parse()?,
            "quick" => self.quick = parse_bool(v, key)?,
            "quick_rows" => self.quick_rows = parse_value(v, key)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.c_grid.is_empty() || self.degree_grid.is_empty() {
            return Err(Error::Config("C and degree grids must be non-empty".into()));
        }
        if self.exp2_cells.is_empty() || self.exp3_cells.is_empty() {
            return Err(Error::Config("experiment cell lists must be non-empty".into()));
        }
        if !(1..=32).contains(&self.members_min)
            || !(1..=32).contains(&self.members_max)
            || self.members_min > self.members_max
        {
            return Err(Error::Config(format!(
                "member range {}..{} must lie within 1..32",
                self.members_min, self.members_max
            )));
        }
        if !(1..=32).contains(&self.summary_members) {
            return Err(Error::Config("summary_members must lie within 1..32".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config("train_fraction must lie in (0, 1)".into()));
        }
        let cells = self
            .c_grid
            .iter()
            .flat_map(|&c| self.degree_grid.iter().map(move |&d| Cell::new(c, d)))
            .chain(self.exp2_cells.iter().copied())
            .chain(self.exp3_cells.iter().copied())
            .chain([self.baseline, self.ensemble_cell]);
        for cell in cells {
            self.svm_config(cell).validate()?;
        }
        Ok(())
    }

    pub fn load_options(&self) -> LoadOptions {
        LoadOptions {
            class_column: self.class_column.clone(),
            drop_columns: self.drop_columns.clone(),
            class_aliases: self.class_aliases.clone(),
        }
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train_fraction: self.train_fraction,
            seed: self.seed,
            stratified: self.stratified,
        }
    }

    pub fn svm_config(&self, cell: Cell) -> SvmConfig {
        SvmConfig {
            c: cell.c,
            kernel: KernelSpec::polynomial(cell.degree, self.coef0),
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            ..SvmConfig::default()
        }
    }

    pub fn grid(&self) -> Vec<Cell> {
        self.c_grid
            .iter()
            .flat_map(|&c| self.degree_grid.iter().map(move |&d| Cell::new(c, d)))
            .collect()
    }
}
