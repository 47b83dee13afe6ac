//! End-to-end experiment runs over a train/test split: the single-SVM grid,
//! selector comparisons, selector ensembles, bagged SVMs and a summary.
//!
//! Every output table is a pure function of the dataset, configuration and
//! seed. Wall-clock timings go to separate `*_timing` files.

mod config;

pub use config::{Cell, ExperimentConfig, FeatureVariant};

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::bagging::{EnsembleConfig, EnsembleModel};
use crate::data::{load_dataset, select_features, stratified_split, stratified_subsample, Dataset, FileFormat};
use crate::error::{Error, Result};
use crate::filters::RankRule;
use crate::report::{
    evaluate, format_accuracy, format_percent, render, render_table, timed, ConfusionMatrix, EvaluationReport,
    OutputFormat, Partition,
};
use crate::selection::{
    aggregate, parse_ensemble_label, run_selector, AggregationMode, EnsembleSelection, FeatureSelection, SearchKind,
    SelectorCode, SelectorId,
};
use crate::svm::train_multiclass;

/// Selector ensembles evaluated by the third experiment, in report order.
pub const EFS_COMBINATIONS: [&str; 11] = [
    "EFS12", "EFS13", "EFS41", "EFS23", "EFS24", "EFS34", "EFS123", "EFS412", "EFS134", "EFS234", "EFS1234",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExperimentId {
    Exp1,
    Exp2,
    Exp3,
    Exp4,
    Exp5,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 5] = [
        ExperimentId::Exp1,
        ExperimentId::Exp2,
        ExperimentId::Exp3,
        ExperimentId::Exp4,
        ExperimentId::Exp5,
    ];
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = *self as usize + 1;
        write!(f, "exp{n}")
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentId::ALL
            .into_iter()
            .find(|id| id.to_string() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown experiment `{s}`")))
    }
}

/// Files written by one run and the number of binary machines that hit the
/// iteration cap.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub nonconverged: usize,
}

/// Train/test/combined confusion matrices of one fitted model.
#[derive(Debug, Clone, PartialEq)]
pub struct Fitted {
    pub train: ConfusionMatrix,
    pub test: ConfusionMatrix,
    pub combined: ConfusionMatrix,
    pub nonconverged: usize,
    pub seconds: f64,
}

impl Fitted {
    fn matrices(&self) -> Vec<ConfusionMatrix> {
        vec![self.train.clone(), self.test.clone(), self.combined.clone()]
    }

    pub fn combined_accuracy(&self) -> f64 {
        100.0 * self.combined.trace() as f64 / self.combined.total() as f64
    }

    fn flags(&self) -> Vec<String> {
        if self.nonconverged > 0 {
            vec![format!("nonconverged={}", self.nonconverged)]
        } else {
            Vec::new()
        }
    }
}

/// Row of one bagging sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub members: usize,
    /// Combined-set confusion matrix per member.
    pub member_matrices: Vec<ConfusionMatrix>,
    pub voting: Fitted,
    /// Rows (train and test) on which every member agrees.
    pub unanimous: usize,
    pub total: usize,
}

struct TimingRow {
    model: String,
    cell: Cell,
    members: Option<usize>,
    seconds: f64,
}

struct Writer<'a> {
    dir: &'a Path,
    prefix: String,
    format: OutputFormat,
    files: Vec<PathBuf>,
}

impl Writer<'_> {
    fn write(&mut self, suffix: &str, text: &str) -> Result<()> {
        let name = format!("{}{}.{}", self.prefix, suffix, self.format.extension());
        self.write_named(&name, text)
    }

    fn write_named(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        self.files.push(path);
        Ok(())
    }

    fn table(&mut self, suffix: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let header: Vec<String> = header.iter().map(|s| s.to_string()).collect();
        let text = render_table(&header, rows, self.format)?;
        self.write(suffix, &text)
    }

    fn reports(&mut self, suffix: &str, reports: &[EvaluationReport]) -> Result<()> {
        let text = render(reports, self.format)?;
        self.write(suffix, &text)
    }

    fn timing(&mut self, rows: &[TimingRow]) -> Result<()> {
        let body: Vec<Vec<String>> = rows
            .iter()
            .map(|t| {
                vec![
                    t.model.clone(),
                    format!("{}", t.cell.c),
                    t.cell.degree.to_string(),
                    t.members.map(|m| m.to_string()).unwrap_or_default(),
                    format!("{:.3}", t.seconds),
                ]
            })
            .collect();
        self.table("_timing", &["model", "C", "degree", "members", "cpu_seconds"], &body)
    }
}

fn report(model: String, cell: Cell, members: Option<usize>, fitted: &Fitted) -> EvaluationReport {
    EvaluationReport {
        model,
        c: Some(cell.c),
        degree: Some(cell.degree),
        members,
        matrices: fitted.matrices(),
        cpu_seconds: None,
        flags: fitted.flags(),
    }
}

fn names(ds: &Dataset, features: &[usize]) -> String {
    let all = ds.feature_names();
    features.iter().map(|&f| all[f].as_str()).collect::<Vec<_>>().join(";")
}

/// A loaded dataset split under one configuration.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub data: Dataset,
    pub train: Dataset,
    pub test: Dataset,
}

impl Experiment {
    /// Applies the quick subsample (if enabled) and the seeded split.
    pub fn new(config: ExperimentConfig, data: Dataset) -> Result<Self> {
        config.validate()?;
        let data = if config.quick {
            stratified_subsample(&data, config.quick_rows, config.seed)?
        } else {
            data
        };
        let (train, test) = stratified_split(&data, &config.split_spec())?;
        Ok(Experiment {
            config,
            data,
            train,
            test,
        })
    }

    pub fn load(config: ExperimentConfig) -> Result<Self> {
        let path = config
            .data
            .clone()
            .ok_or_else(|| Error::Config("no dataset path given".into()))?;
        let ds = load_dataset(&path, FileFormat::from_path(&path), &config.load_options())?;
        Experiment::new(config, ds)
    }

    pub fn all_features(&self) -> Vec<usize> {
        (0..self.train.n_features()).collect()
    }

    fn project(&self, features: &[usize]) -> Result<(Dataset, Dataset)> {
        Ok((select_features(&self.train, features)?, select_features(&self.test, features)?))
    }

    /// Trains one multiclass SVM on `features` and scores every partition.
    pub fn fit(&self, features: &[usize], cell: Cell) -> Result<Fitted> {
        let (train, test) = self.project(features)?;
        let cfg = self.config.svm_config(cell);
        let (model, seconds) = timed(|| train_multiclass(&train, &cfg));
        let model = model?;
        let tr = evaluate(&model, &train, Partition::Train)?;
        let te = evaluate(&model, &test, Partition::Test)?;
        Ok(Fitted {
            combined: tr.combine(&te)?,
            train: tr,
            test: te,
            nonconverged: model.non_converged(),
            seconds,
        })
    }

    /// Fits every distinct `(features, cell)` job in parallel; results come
    /// back in input order.
    fn fit_all(&self, jobs: &[(Vec<usize>, Cell)]) -> Result<Vec<Fitted>> {
        let mut index: HashMap<(Vec<usize>, u64, u32), usize> = HashMap::new();
        let mut unique: Vec<&(Vec<usize>, Cell)> = Vec::new();
        let slots: Vec<usize> = jobs
            .iter()
            .map(|job| {
                let key = (job.0.clone(), job.1.c.to_bits(), job.1.degree);
                *index.entry(key).or_insert_with(|| {
                    unique.push(job);
                    unique.len() - 1
                })
            })
            .collect();
        let fitted = unique
            .par_iter()
            .map(|(features, cell)| {
                self.fit(features, *cell)
                    .map_err(Error::in_stage(format!("train C={} degree={}", cell.c, cell.degree)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(slots.into_iter().map(|s| fitted[s].clone()).collect())
    }

    pub fn select(&self, id: SelectorId) -> Result<FeatureSelection> {
        run_selector(id, &self.train, &self.config.selectors)
            .map_err(Error::in_stage(format!("select {}", id.label())))
    }

    /// FS1/FS2 genetic subsets and FS3/FS4 keep-all rankings.
    fn base_selections(&self) -> Result<Vec<FeatureSelection>> {
        let ids = [
            SelectorId::new(SelectorCode::Fs1, SearchKind::Genetic)?,
            SelectorId::new(SelectorCode::Fs2, SearchKind::Genetic)?,
            SelectorId::new(SelectorCode::Fs3, SearchKind::Ranker(RankRule::KeepAll))?,
            SelectorId::new(SelectorCode::Fs4, SearchKind::Ranker(RankRule::KeepAll))?,
        ];
        ids.par_iter().map(|&id| self.select(id)).collect()
    }

    /// Feature set of an `EFSxy..` label under one variant. `base` holds the
    /// four selections from [`Self::base_selections`] in code order.
    fn ensemble_features(
        &self,
        label: &str,
        variant: FeatureVariant,
        base: &[FeatureSelection],
        top: &[FeatureSelection],
    ) -> Result<EnsembleSelection> {
        let codes = parse_ensemble_label(label)?;
        let k = base[0].selected.len();
        let pick = |code: SelectorCode, cut: bool| match (code, cut) {
            (SelectorCode::Fs3, true) => top[0].clone(),
            (SelectorCode::Fs4, true) => top[1].clone(),
            (SelectorCode::Fs1, _) => base[0].clone(),
            (SelectorCode::Fs2, _) => base[1].clone(),
            (SelectorCode::Fs3, false) => base[2].clone(),
            (SelectorCode::Fs4, false) => base[3].clone(),
        };
        let (members, mode): (Vec<FeatureSelection>, AggregationMode) = match variant {
            FeatureVariant::Union => (codes.iter().map(|&c| pick(c, false)).collect(), AggregationMode::Union),
            FeatureVariant::UnionTopK => (codes.iter().map(|&c| pick(c, true)).collect(), AggregationMode::Union),
            FeatureVariant::MeanRankTopK => (
                codes.iter().map(|&c| pick(c, false)).collect(),
                AggregationMode::MeanRankTopK(k),
            ),
        };
        aggregate(&members, mode, self.train.n_features()).map_err(Error::in_stage(format!("aggregate {label}")))
    }

    /// FS3/FS4 rankings cut to the size of the FS1 subset.
    fn top_k_rankers(&self, base: &[FeatureSelection]) -> Result<Vec<FeatureSelection>> {
        let k = base[0].selected.len();
        [SelectorCode::Fs3, SelectorCode::Fs4]
            .par_iter()
            .map(|&code| self.select(SelectorId::new(code, SearchKind::Ranker(RankRule::TopK(k)))?))
            .collect()
    }

    fn efs41(&self) -> Result<EnsembleSelection> {
        let base = self.base_selections()?;
        let top = self.top_k_rankers(&base)?;
        self.ensemble_features("EFS41", self.config.ensemble_features, &base, &top)
    }

    /// Bagged ensembles of `members_min..=members_max` members on `features`,
    /// each size trained from scratch so its wall-clock time is measurable.
    pub fn bagging_sweep(&self, features: &[usize], cell: Cell) -> Result<Vec<(SweepRow, f64)>> {
        let (train, test) = self.project(features)?;
        let mut out = Vec::new();
        for m in self.config.members_min..=self.config.members_max {
            let cfg = self.ensemble_config(cell, m);
            let (model, seconds) = timed(|| crate::bagging::bagging_train(&train, &cfg));
            let model = model.map_err(Error::in_stage(format!("bagging with {m} members")))?;
            out.push((sweep_row(&model, &train, &test)?, seconds));
        }
        Ok(out)
    }

    pub fn ensemble_config(&self, cell: Cell, members: usize) -> EnsembleConfig {
        EnsembleConfig {
            members,
            base: self.config.svm_config(cell),
            master_seed: self.config.seed,
            vote: self.config.vote,
        }
    }

    fn writer<'a>(&self, id: ExperimentId, dir: &'a Path) -> Writer<'a> {
        Writer {
            dir,
            prefix: format!("{id}_seed{}", self.config.seed),
            format: self.config.format,
            files: Vec::new(),
        }
    }

    /// Runs one experiment and writes its tables under `config.output_dir`.
    /// On failure a `*_FAILED.txt` file names the stage and lists the
    /// partial outputs.
    pub fn run(&self, id: ExperimentId) -> Result<RunOutcome> {
        let dir = self.config.output_dir.clone();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let mut w = self.writer(id, &dir);
        let result = match id {
            ExperimentId::Exp1 => self.exp1(&mut w),
            ExperimentId::Exp2 => self.exp2(&mut w),
            ExperimentId::Exp3 => self.exp3(&mut w),
            ExperimentId::Exp4 => self.exp4(&mut w),
            ExperimentId::Exp5 => self.exp5(&mut w),
        };
        match result {
            Ok(nonconverged) => Ok(RunOutcome {
                files: w.files,
                nonconverged,
            }),
            Err(e) => {
                let e = Error::in_stage(id.to_string())(e);
                let mut note = format!("{e}\npartial outputs:\n");
                for f in &w.files {
                    note.push_str(&format!("{}\n", f.display()));
                }
                let name = format!("{}_FAILED.txt", w.prefix);
                let _ = fs::write(dir.join(name), note);
                Err(e)
            }
        }
    }

    fn exp1(&self, w: &mut Writer<'_>) -> Result<usize> {
        let all = self.all_features();
        let grid = self.config.grid();
        let jobs: Vec<(Vec<usize>, Cell)> = grid.iter().map(|&c| (all.clone(), c)).collect();
        let fitted = self.fit_all(&jobs)?;

        let reports: Vec<EvaluationReport> = grid
            .iter()
            .zip(&fitted)
            .map(|(&cell, f)| report("SVM".into(), cell, None, f))
            .collect();
        w.reports("", &reports)?;

        let mut header = vec!["C".to_string()];
        header.extend(self.config.degree_grid.iter().map(|d| format!("degree={d}")));
        let nd = self.config.degree_grid.len();
        let rows: Vec<Vec<String>> = self
            .config
            .c_grid
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let mut row = vec![format!("{c}")];
                for f in &fitted[i * nd..(i + 1) * nd] {
                    row.push(format_accuracy(&f.combined).expect("non-empty"));
                }
                row
            })
            .collect();
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        w.table("_grid", &header_refs, &rows)?;

        // first cell with the most correct combined rows
        let best = (0..fitted.len())
            .rev()
            .max_by_key(|&i| fitted[i].combined.trace())
            .expect("non-empty grid");
        let labels = self.train.class_labels();
        let mut header = vec!["C", "degree", "partition", "desired"];
        header.extend(labels.iter().map(String::as_str));
        let mut rows = Vec::new();
        for cm in fitted[best].matrices() {
            for (label, counts) in labels.iter().zip(&cm.counts) {
                let mut row = vec![
                    format!("{}", grid[best].c),
                    grid[best].degree.to_string(),
                    cm.partition.to_string(),
                    label.clone(),
                ];
                row.extend(counts.iter().map(|c| c.to_string()));
                rows.push(row);
            }
        }
        w.table("_confusion", &header, &rows)?;

        let timing: Vec<TimingRow> = grid
            .iter()
            .zip(&fitted)
            .map(|(&cell, f)| TimingRow {
                model: "SVM".into(),
                cell,
                members: None,
                seconds: f.seconds,
            })
            .collect();
        w.timing(&timing)?;
        Ok(fitted.iter().map(|f| f.nonconverged).sum())
    }

    fn exp2(&self, w: &mut Writer<'_>) -> Result<usize> {
        let ids = [
            SelectorId::new(SelectorCode::Fs1, SearchKind::BestFirst)?,
            SelectorId::new(SelectorCode::Fs1, SearchKind::Genetic)?,
            SelectorId::new(SelectorCode::Fs2, SearchKind::BestFirst)?,
            SelectorId::new(SelectorCode::Fs2, SearchKind::Genetic)?,
            SelectorId::new(SelectorCode::Fs3, SearchKind::Ranker(RankRule::KeepAll))?,
            SelectorId::new(SelectorCode::Fs4, SearchKind::Ranker(RankRule::KeepAll))?,
        ];
        let selections: Vec<FeatureSelection> =
            ids.par_iter().map(|&id| self.select(id)).collect::<Result<_>>()?;
        let rows: Vec<Vec<String>> = selections
            .iter()
            .map(|s| {
                let value = match &s.detail {
                    crate::selection::SelectionDetail::Subset(e) => format!("{}", e.value),
                    crate::selection::SelectionDetail::Ranking(_) => String::new(),
                };
                vec![
                    s.id.code.to_string(),
                    s.id.label(),
                    s.selected.len().to_string(),
                    names(&self.train, &s.selected),
                    value,
                    s.evaluations.to_string(),
                ]
            })
            .collect();
        w.table(
            "_selections",
            &["selector", "method", "n_features", "features", "value", "evaluations"],
            &rows,
        )?;

        let all = self.all_features();
        let mut labels = Vec::new();
        let mut jobs = Vec::new();
        for &cell in &self.config.exp2_cells {
            labels.push(("SVM".to_string(), cell));
            jobs.push((all.clone(), cell));
            for s in &selections {
                labels.push((format!("{}-SVM", s.id.label()), cell));
                jobs.push((s.selected.clone(), cell));
            }
        }
        let fitted = self.fit_all(&jobs)?;
        self.write_reports(w, &labels, &fitted, false)?;
        Ok(fitted.iter().map(|f| f.nonconverged).sum())
    }

    fn write_reports(&self, w: &mut Writer<'_>, labels: &[(String, Cell)], fitted: &[Fitted], highlight: bool) -> Result<()> {
        let reports: Vec<EvaluationReport> = labels
            .iter()
            .zip(fitted)
            .map(|((label, cell), f)| {
                let mut r = report(label.clone(), *cell, None, f);
                if highlight && f.combined_accuracy() > self.config.highlight_threshold {
                    r.flags.push("highlight".into());
                }
                r
            })
            .collect();
        w.reports("", &reports)?;
        let timing: Vec<TimingRow> = labels
            .iter()
            .zip(fitted)
            .map(|((label, cell), f)| TimingRow {
                model: label.clone(),
                cell: *cell,
                members: None,
                seconds: f.seconds,
            })
            .collect();
        w.timing(&timing)
    }

    fn exp3(&self, w: &mut Writer<'_>) -> Result<usize> {
        let base = self.base_selections()?;
        let top = self.top_k_rankers(&base)?;
        let mut sets = Vec::new();
        for label in EFS_COMBINATIONS {
            for variant in FeatureVariant::ALL {
                sets.push((variant, self.ensemble_features(label, variant, &base, &top)?));
            }
        }
        let rows: Vec<Vec<String>> = sets
            .iter()
            .map(|(variant, s)| {
                vec![
                    s.label.clone(),
                    variant.to_string(),
                    s.mode.to_string(),
                    s.result.len().to_string(),
                    names(&self.train, &s.result),
                ]
            })
            .collect();
        w.table("_sets", &["ensemble", "variant", "mode", "n_features", "features"], &rows)?;

        let mut labels = Vec::new();
        let mut jobs = Vec::new();
        for &cell in &self.config.exp3_cells {
            for (variant, s) in &sets {
                labels.push((format!("{}-{}-SVM", s.label, variant), cell));
                jobs.push((s.result.clone(), cell));
            }
        }
        let fitted = self.fit_all(&jobs)?;
        self.write_reports(w, &labels, &fitted, true)?;
        Ok(fitted.iter().map(|f| f.nonconverged).sum())
    }

    fn exp4(&self, w: &mut Writer<'_>) -> Result<usize> {
        let efs = self.efs41()?;
        let cell = self.config.ensemble_cell;
        let single = self.fit(&efs.result, cell).map_err(Error::in_stage("EFS41-SVM"))?;
        let sweep = self.bagging_sweep(&efs.result, cell)?;

        let max = self.config.members_max;
        let mut header: Vec<String> = vec!["members".into()];
        header.extend((1..=max).map(|i| format!("N{i}")));
        header.extend(["voting".to_string(), "agreement".to_string(), "flags".to_string()]);
        let mut rows = Vec::new();
        let mut reports = vec![report("EFS41-SVM".into(), cell, None, &single)];
        let mut timing = vec![TimingRow {
            model: "EFS41-SVM".into(),
            cell,
            members: None,
            seconds: single.seconds,
        }];
        let mut nonconverged = single.nonconverged;
        for (row, seconds) in &sweep {
            let mut line = vec![row.members.to_string()];
            for i in 0..max {
                line.push(
                    row.member_matrices
                        .get(i)
                        .map(|cm| format_accuracy(cm).expect("non-empty"))
                        .unwrap_or_default(),
                );
            }
            line.push(format_accuracy(&row.voting.combined)?);
            line.push(if row.members >= 2 {
                format_percent(row.unanimous, row.total)
            } else {
                String::new()
            });
            line.push(row.voting.flags().join(";"));
            rows.push(line);
            reports.push(report("EFS41-ESVM".into(), cell, Some(row.members), &row.voting));
            timing.push(TimingRow {
                model: "EFS41-ESVM".into(),
                cell,
                members: Some(row.members),
                seconds: *seconds,
            });
            nonconverged += row.voting.nonconverged;
        }
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        w.table("", &header_refs, &rows)?;
        w.reports("_models", &reports)?;
        w.timing(&timing)?;
        Ok(nonconverged)
    }

    fn exp5(&self, w: &mut Writer<'_>) -> Result<usize> {
        let base = self.base_selections()?;
        let top = self.top_k_rankers(&base)?;
        let efs = self.ensemble_features("EFS41", self.config.ensemble_features, &base, &top)?;
        let cell = self.config.baseline;
        let mut labels = vec![("SVM".to_string(), cell)];
        let mut jobs = vec![(self.all_features(), cell)];
        for s in &base {
            labels.push((format!("{}-SVM", s.code()), cell));
            jobs.push((s.selected.clone(), cell));
        }
        labels.push(("EFS41-SVM".into(), self.config.ensemble_cell));
        jobs.push((efs.result.clone(), self.config.ensemble_cell));
        let fitted = self.fit_all(&jobs)?;

        let m = self.config.summary_members;
        let (train, test) = self.project(&efs.result)?;
        let cfg = self.ensemble_config(self.config.ensemble_cell, m);
        let (ens, seconds) = timed(|| crate::bagging::bagging_train(&train, &cfg));
        let ens = ens.map_err(Error::in_stage("EFS41-ESVM"))?;
        let voting = sweep_row(&ens, &train, &test)?.voting;

        let mut reports: Vec<EvaluationReport> = labels
            .iter()
            .zip(&fitted)
            .map(|((label, cell), f)| report(label.clone(), *cell, None, f))
            .collect();
        reports.push(report("EFS41-ESVM".into(), self.config.ensemble_cell, Some(m), &voting));
        for r in &mut reports {
            r.matrices.retain(|cm| cm.partition == Partition::Combined);
        }
        w.reports("", &reports)?;

        let mut timing: Vec<TimingRow> = labels
            .iter()
            .zip(&fitted)
            .map(|((label, cell), f)| TimingRow {
                model: label.clone(),
                cell: *cell,
                members: None,
                seconds: f.seconds,
            })
            .collect();
        timing.push(TimingRow {
            model: "EFS41-ESVM".into(),
            cell: self.config.ensemble_cell,
            members: Some(m),
            seconds,
        });
        w.timing(&timing)?;
        Ok(fitted.iter().map(|f| f.nonconverged).sum::<usize>() + voting.nonconverged)
    }

    /// Runs the given experiments in order, stopping at the first error.
    pub fn run_all(&self, ids: &[ExperimentId]) -> Result<RunOutcome> {
        let mut out = RunOutcome::default();
        for &id in ids {
            let r = self.run(id)?;
            out.files.extend(r.files);
            out.nonconverged += r.nonconverged;
        }
        Ok(out)
    }

    pub fn efs41_features(&self) -> Result<Vec<usize>> {
        Ok(self.efs41()?.result)
    }
}

/// Member and voting statistics of an ensemble over a train/test split.
pub fn sweep_row(model: &EnsembleModel, train: &Dataset, test: &Dataset) -> Result<SweepRow> {
    let tr_preds = model.member_predictions(train)?;
    let te_preds = model.member_predictions(test)?;
    let labels = train.class_labels().to_vec();
    let mut member_matrices = Vec::new();
    for (a, b) in tr_preds.iter().zip(&te_preds) {
        let tr = ConfusionMatrix::from_predictions(labels.clone(), train.labels(), a, Partition::Train)?;
        let te = ConfusionMatrix::from_predictions(labels.clone(), test.labels(), b, Partition::Test)?;
        member_matrices.push(tr.combine(&te)?);
    }
    let tr = ConfusionMatrix::from_predictions(labels.clone(), train.labels(), &model.vote_rows(&tr_preds), Partition::Train)?;
    let te = ConfusionMatrix::from_predictions(labels, test.labels(), &model.vote_rows(&te_preds), Partition::Test)?;
    let joined: Vec<Vec<usize>> = tr_preds
        .iter()
        .zip(&te_preds)
        .map(|(a, b)| a.iter().chain(b).copied().collect())
        .collect();
    let total = train.n_rows() + test.n_rows();
    let unanimous = (0..total)
        .filter(|&r| joined.iter().all(|p| p[r] == joined[0][r]))
        .count();
    let nonconverged = model.members.iter().map(|m| m.model.non_converged()).sum();
    Ok(SweepRow {
        members: model.n_members(),
        member_matrices,
        voting: Fitted {
            combined: tr.combine(&te)?,
            train: tr,
            test: te,
            nonconverged,
            seconds: 0.0,
        },
        unanimous,
        total,
    })
}
