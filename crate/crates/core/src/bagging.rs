//! Bootstrap-aggregated SVM ensembles with majority voting.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::svm::persist::{parse_num, Lines};
use crate::svm::{parse_model_section, train_multiclass, write_model_section, SvmConfig, SvmModel};

/// Retries allowed when a bootstrap sample misses a class.
pub const MAX_RESAMPLES: u64 = 10;
const MAGIC: &str = "efsvm-ensemble";

/// SplitMix64 finalizer applied to `master + (i + 1)·γ`.
pub fn split_mix(master: u64, i: u64) -> u64 {
    let mut z = master.wrapping_add(i.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Row indices of a with-replacement sample the size of the input.
pub fn bootstrap_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(0..n)).collect()
}

pub fn bootstrap_sample(train: &Dataset, seed: u64) -> Result<Dataset> {
    if train.n_rows() == 0 {
        return Err(Error::EmptyInput("bootstrap of an empty dataset"));
    }
    Ok(train.take_rows(&bootstrap_indices(train.n_rows(), seed)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VoteRule {
    #[default]
    UnweightedMajority,
    WeightedByTrainAccuracy,
}

impl fmt::Display for VoteRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VoteRule::UnweightedMajority => "unweighted_majority",
            VoteRule::WeightedByTrainAccuracy => "weighted_by_train_accuracy",
        })
    }
}

impl FromStr for VoteRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "unweighted_majority" | "majority" => Ok(VoteRule::UnweightedMajority),
            "weighted_by_train_accuracy" | "weighted" => Ok(VoteRule::WeightedByTrainAccuracy),
            other => Err(Error::InvalidArgument(format!("unknown vote rule `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleConfig {
    pub members: usize,
    pub base: SvmConfig,
    pub master_seed: u64,
    pub vote: VoteRule,
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.members == 0 {
            return Err(Error::InvalidArgument("ensemble needs at least one member".into()));
        }
        self.base.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleMember {
    pub model: SvmModel,
    /// Seed of the bootstrap the member was trained on.
    pub seed: u64,
    /// Fraction of the full training set the member classifies correctly.
    pub train_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel {
    pub members: Vec<EnsembleMember>,
    pub vote: VoteRule,
    pub master_seed: u64,
    pub priors: Vec<f64>,
}

/// Trains member `index` of a bagged ensemble.
pub fn train_member(train: &Dataset, base: &SvmConfig, master_seed: u64, index: usize) -> Result<EnsembleMember> {
    let first = split_mix(master_seed, index as u64);
    let mut seed = first;
    for attempt in 0..=MAX_RESAMPLES {
        if attempt > 0 {
            seed = split_mix(first, attempt);
        }
        let sample = bootstrap_sample(train, seed)?;
        if sample.class_counts().contains(&0) {
            continue;
        }
        let model = train_multiclass(&sample, base)?;
        let predicted = model.predict_dataset(train)?;
        let correct = predicted.iter().zip(train.labels()).filter(|(p, l)| p == l).count();
        return Ok(EnsembleMember {
            model,
            seed,
            train_accuracy: correct as f64 / train.n_rows() as f64,
        });
    }
    Err(Error::SingleClass)
}

/// Trains `cfg.members` machines on seeded bootstraps of `train`.
pub fn bagging_train(train: &Dataset, cfg: &EnsembleConfig) -> Result<EnsembleModel> {
    cfg.validate()?;
    let members = (0..cfg.members)
        .map(|i| train_member(train, &cfg.base, cfg.master_seed, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(EnsembleModel {
        members,
        vote: cfg.vote,
        master_seed: cfg.master_seed,
        priors: train.class_priors(),
    })
}

/// Class with the largest vote weight; ties go to the larger prior, then
/// the lower class index. `weights = None` counts one vote per member.
pub fn majority_vote(predictions: &[usize], priors: &[f64], weights: Option<&[f64]>) -> Result<usize> {
    if predictions.is_empty() {
        return Err(Error::EmptyInput("no predictions to vote on"));
    }
    if let Some(w) = weights {
        if w.len() != predictions.len() {
            return Err(Error::InvalidArgument("one weight per prediction required".into()));
        }
    }
    if let Some(&bad) = predictions.iter().find(|&&p| p >= priors.len()) {
        return Err(Error::InvalidArgument(format!("class index {bad} has no prior")));
    }
    Ok(vote_unchecked(predictions, priors, weights))
}

fn vote_unchecked(predictions: &[usize], priors: &[f64], weights: Option<&[f64]>) -> usize {
    let mut tally = vec![0.0f64; priors.len()];
    for (i, &p) in predictions.iter().enumerate() {
        tally[p] += weights.map_or(1.0, |w| w[i]);
    }
    (0..priors.len())
        .max_by(|&a, &b| {
            tally[a]
                .total_cmp(&tally[b])
                .then(priors[a].total_cmp(&priors[b]))
                .then(b.cmp(&a))
        })
        .expect("non-empty priors")
}

impl EnsembleModel {
    pub fn n_members(&self) -> usize {
        self.members.len()
    }

    pub fn classes(&self) -> &[String] {
        &self.members[0].model.classes
    }

    pub fn feature_names(&self) -> &[String] {
        &self.members[0].model.feature_names
    }

    pub fn check_dataset(&self, ds: &Dataset) -> Result<()> {
        self.members[0].model.check_dataset(ds)
    }

    fn weights(&self) -> Option<Vec<f64>> {
        match self.vote {
            VoteRule::UnweightedMajority => None,
            VoteRule::WeightedByTrainAccuracy => Some(self.members.iter().map(|m| m.train_accuracy).collect()),
        }
    }

    /// Per-member predictions, `[member][row]`.
    pub fn member_predictions(&self, ds: &Dataset) -> Result<Vec<Vec<usize>>> {
        self.members.iter().map(|m| m.model.predict_dataset(ds)).collect()
    }

    /// Combines per-member predictions with the model's vote rule.
    pub fn vote_rows(&self, member_preds: &[Vec<usize>]) -> Vec<usize> {
        let weights = self.weights();
        let n = member_preds.first().map_or(0, Vec::len);
        (0..n)
            .map(|r| {
                let column: Vec<usize> = member_preds.iter().map(|p| p[r]).collect();
                vote_unchecked(&column, &self.priors, weights.as_deref())
            })
            .collect()
    }

    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<usize>> {
        Ok(self.vote_rows(&self.member_predictions(ds)?))
    }

    pub fn predict_index(&self, raw: &[f64]) -> Result<usize> {
        let preds = self
            .members
            .iter()
            .map(|m| m.model.predict_index(raw))
            .collect::<Result<Vec<_>>>()?;
        Ok(vote_unchecked(&preds, &self.priors, self.weights().as_deref()))
    }

    pub fn predict(&self, raw: &[f64]) -> Result<&str> {
        Ok(&self.classes()[self.predict_index(raw)?])
    }
}

/// Fraction of rows on which every member emits the same label.
pub fn agreement_of(member_preds: &[Vec<usize>]) -> Result<f64> {
    if member_preds.len() < 2 {
        return Err(Error::InvalidArgument("agreement needs at least two members".into()));
    }
    let n = member_preds[0].len();
    if n == 0 {
        return Err(Error::EmptyInput("agreement over zero rows"));
    }
    let same = (0..n)
        .filter(|&r| member_preds.iter().all(|p| p[r] == member_preds[0][r]))
        .count();
    Ok(same as f64 / n as f64)
}

pub fn member_agreement(e: &EnsembleModel, ds: &Dataset) -> Result<f64> {
    if e.n_members() < 2 {
        return Err(Error::InvalidArgument("agreement needs at least two members".into()));
    }
    agreement_of(&e.member_predictions(ds)?)
}

pub fn write_ensemble(e: &EnsembleModel) -> Result<String> {
    let mut out = format!(
        "{MAGIC}\t1\t{}\t{}\t{}\n",
        e.n_members(),
        e.master_seed,
        e.vote
    );
    let priors: Vec<String> = e.priors.iter().map(|p| format!("{p:?}")).collect();
    out.push_str(&format!("priors\t{}\n", priors.join("\t")));
    for m in &e.members {
        out.push_str(&format!("member\t{}\t{:?}\n", m.seed, m.train_accuracy));
        write_model_section(&m.model, &mut out)?;
    }
    Ok(out)
}

pub fn read_ensemble(text: &str) -> Result<EnsembleModel> {
    let mut lines = Lines::new(text);
    let (l, head) = lines.next_fields()?;
    if head[0] != MAGIC {
        return Err(Error::ModelFormat(format!("line {l}: not an ensemble file")));
    }
    if head.get(1) != Some(&"1") {
        return Err(Error::VersionMismatch(head.get(1).unwrap_or(&"").to_string()));
    }
    if head.len() != 5 {
        return Err(Error::ModelFormat(format!("line {l}: manifest needs 4 fields")));
    }
    let count: usize = parse_num(head[2], l)?;
    let master_seed: u64 = parse_num(head[3], l)?;
    let vote: VoteRule = head[4].parse()?;
    let (l, f) = lines.expect("priors")?;
    let priors = f.iter().map(|s| parse_num(s, l)).collect::<Result<Vec<f64>>>()?;
    let mut members = Vec::with_capacity(count);
    for _ in 0..count {
        let (l, f) = lines.expect("member")?;
        if f.len() != 2 {
            return Err(Error::ModelFormat(format!("line {l}: member needs 2 fields")));
        }
        let seed = parse_num(f[0], l)?;
        let train_accuracy = parse_num(f[1], l)?;
        let model = parse_model_section(&mut lines)?;
        if model.classes.len() != priors.len() {
            return Err(Error::ModelFormat("member classes disagree with priors".into()));
        }
        members.push(EnsembleMember {
            model,
            seed,
            train_accuracy,
        });
    }
    if count == 0 || !lines.is_done() {
        return Err(Error::ModelFormat("member count disagrees with sections".into()));
    }
    Ok(EnsembleModel {
        members,
        vote,
        master_seed,
        priors,
    })
}

pub fn save_ensemble(e: &EnsembleModel, path: &Path) -> Result<()> {
    fs::write(path, write_ensemble(e)?).map_err(|err| Error::io(path, err))
}

pub fn load_ensemble(path: &Path) -> Result<EnsembleModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_ensemble(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::AttributeSpec;

    fn blobs() -> Dataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..30 {
            let c = i % 3;
            let jitter = (i * 37 % 11) as f64 / 11.0;
            rows.push(vec![c as f64 * 3.0 + jitter, (c == 1) as u8 as f64 * 2.0 - jitter]);
            labels.push(c);
        }
        Dataset::new(
            vec![AttributeSpec::numeric("a"), AttributeSpec::numeric("b")],
            AttributeSpec::nominal("y", vec!["N".into(), "P".into(), "S".into()]),
            rows,
            labels,
        )
        .unwrap()
    }

    #[test]
    fn split_mix_is_stable_and_spreads() {
        assert_eq!(split_mix(42, 3), split_mix(42, 3));
        assert_ne!(split_mix(42, 0), split_mix(42, 1));
        assert_ne!(split_mix(42, 0), split_mix(43, 0));
    }

    #[test]
    fn bootstrap_shapes() {
        let ds = blobs();
        let one = ds.take_rows(&[4]);
        let b = bootstrap_sample(&one, 9).unwrap();
        assert_eq!(b.rows(), one.rows());
        assert_eq!(bootstrap_sample(&ds, 5).unwrap(), bootstrap_sample(&ds, 5).unwrap());
        assert_eq!(bootstrap_sample(&ds, 5).unwrap().n_rows(), ds.n_rows());
    }

    #[test]
    fn vote_rules() {
        let priors = [0.7, 0.1, 0.2];
        assert_eq!(majority_vote(&[0, 0, 2], &priors, None).unwrap(), 0);
        assert_eq!(majority_vote(&[0, 2], &priors, None).unwrap(), 0);
        assert_eq!(majority_vote(&[2, 0], &priors, None).unwrap(), 0);
        assert_eq!(majority_vote(&[0, 2], &priors, Some(&[0.4, 0.6])).unwrap(), 2);
        assert_eq!(majority_vote(&[1, 2], &[0.5, 0.25, 0.25], None).unwrap(), 1);
        assert!(majority_vote(&[], &priors, None).is_err());
    }

    #[test]
    fn agreement_counts_unanimous_rows() {
        let a = vec![0, 1, 2, 0];
        let b = vec![0, 1, 2, 1];
        assert_eq!(agreement_of(&[a.clone(), a.clone()]).unwrap(), 1.0);
        assert_eq!(agreement_of(&[a.clone(), b]).unwrap(), 0.75);
        assert!(agreement_of(&[a]).is_err());
    }

    #[test]
    fn single_member_matches_member_and_round_trips() {
        let ds = blobs();
        let cfg = EnsembleConfig {
            members: 1,
            base: SvmConfig::new(10.0, 2),
            master_seed: 42,
            vote: VoteRule::UnweightedMajority,
        };
        let e = bagging_train(&ds, &cfg).unwrap();
        let member = e.members[0].model.predict_dataset(&ds).unwrap();
        assert_eq!(e.predict_dataset(&ds).unwrap(), member);
        assert!(member_agreement(&e, &ds).is_err());

        let three = bagging_train(&ds, &EnsembleConfig { members: 3, ..cfg }).unwrap();
        assert_eq!(three.members[0], e.members[0]);
        let text = write_ensemble(&three).unwrap();
        let back = read_ensemble(&text).unwrap();
        assert_eq!(back, three);
        assert_eq!(back.predict_dataset(&ds).unwrap(), three.predict_dataset(&ds).unwrap());
    }
}
