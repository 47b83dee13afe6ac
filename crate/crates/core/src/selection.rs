//! Individual feature selectors (FS1–FS4) and their ensemble combination.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::data::{Dataset, DiscretizationMap};
use crate::error::{Error, Result};
use crate::filters::{
    info_gain_scores, rank_cutoff, relieff, BinnedData, CfsEvaluator, FeatureScores, RankRule,
    SubsetEvaluation, SubsetMethod,
};
use crate::search::{best_first, genetic_search, BestFirstConfig, ConsistencyEvaluator, GeneticConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SelectorCode {
    /// Correlation-based (CFS merit).
    Fs1,
    /// Consistency-based.
    Fs2,
    /// ReliefF.
    Fs3,
    /// Information gain.
    Fs4,
}

impl SelectorCode {
    pub const ALL: [SelectorCode; 4] = [Self::Fs1, Self::Fs2, Self::Fs3, Self::Fs4];

    pub fn digit(self) -> char {
        match self {
            Self::Fs1 => '1',
            Self::Fs2 => '2',
            Self::Fs3 => '3',
            Self::Fs4 => '4',
        }
    }

    pub fn from_digit(c: char) -> Option<Self> {
        match c {
            '1' => Some(Self::Fs1),
            '2' => Some(Self::Fs2),
            '3' => Some(Self::Fs3),
            '4' => Some(Self::Fs4),
            _ => None,
        }
    }

    pub fn is_subset_method(self) -> bool {
        matches!(self, Self::Fs1 | Self::Fs2)
    }

    pub fn method_name(self) -> &'static str {
        match self {
            Self::Fs1 => "CorrFS",
            Self::Fs2 => "ConsFS",
            Self::Fs3 => "ReliefF",
            Self::Fs4 => "IG",
        }
    }
}

impl fmt::Display for SelectorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FS{}", self.digit())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SearchKind {
    BestFirst,
    Genetic,
    Ranker(RankRule),
}

impl SearchKind {
    pub fn name(&self) -> &'static str {
        match self {
            SearchKind::BestFirst => "best_first",
            SearchKind::Genetic => "genetic",
            SearchKind::Ranker(_) => "ranker",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectorId {
    pub code: SelectorCode,
    pub search: SearchKind,
}

impl SelectorId {
    pub fn new(code: SelectorCode, search: SearchKind) -> Result<Self> {
        let id = SelectorId { code, search };
        id.validate()?;
        Ok(id)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.search {
            SearchKind::Ranker(_) => !self.code.is_subset_method(),
            SearchKind::BestFirst | SearchKind::Genetic => self.code.is_subset_method(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSelector(format!(
                "{} cannot use {} search",
                self.code,
                self.search.name()
            )))
        }
    }

    /// e.g. `CorrFS-Genetic`, `IG-Ranker`.
    pub fn label(&self) -> String {
        let search = match self.search {
            SearchKind::BestFirst => "BestFirst",
            SearchKind::Genetic => "Genetic",
            SearchKind::Ranker(_) => "Ranker",
        };
        format!("{}-{}", self.code.method_name(), search)
    }
}

/// Parses `FS1:best_first`, `FS2:genetic`, `FS4:ranker`.
impl FromStr for SelectorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (code, search) = s.split_once(':').unwrap_or((s, ""));
        let code = code
            .trim()
            .to_ascii_uppercase()
            .strip_prefix("FS")
            .and_then(|d| {
                let mut chars = d.chars();
                let c = chars.next()?;
                chars.next().is_none().then_some(c)
            })
            .and_then(SelectorCode::from_digit)
            .ok_or_else(|| Error::InvalidSelector(format!("unknown selector code `{code}`")))?;
        let search = match search.trim() {
            "best_first" | "bestfirst" => SearchKind::BestFirst,
            "genetic" => SearchKind::Genetic,
            "ranker" => SearchKind::Ranker(RankRule::KeepAll),
            "" if code.is_subset_method() => SearchKind::Genetic,
            "" => SearchKind::Ranker(RankRule::KeepAll),
            other => return Err(Error::InvalidSelector(format!("unknown search `{other}`"))),
        };
        SelectorId::new(code, search)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReliefConfig {
    /// Sampled rows; `None` samples every row.
    pub samples: Option<usize>,
    pub neighbors: usize,
    pub seed: u64,
}

impl Default for ReliefConfig {
    fn default() -> Self {
        ReliefConfig {
            samples: None,
            neighbors: 10,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SelectorConfigs {
    pub best_first: BestFirstConfig,
    pub genetic: GeneticConfig,
    pub relieff: ReliefConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SelectionDetail {
    Subset(SubsetEvaluation),
    Ranking(FeatureScores),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSelection {
    pub id: SelectorId,
    pub detail: SelectionDetail,
    /// Selected feature positions, ascending.
    pub selected: Vec<usize>,
    pub evaluations: usize,
}

impl FeatureSelection {
    pub fn code(&self) -> SelectorCode {
        self.id.code
    }

    /// Features in preference order: ranked features by score, subset
    /// members first (by index) then the rest (by index).
    pub fn preference_order(&self, n_features: usize) -> Vec<usize> {
        match &self.detail {
            SelectionDetail::Ranking(scores) => scores.ordering.clone(),
            SelectionDetail::Subset(_) => {
                let inside: BTreeSet<usize> = self.selected.iter().copied().collect();
                let mut order: Vec<usize> = self.selected.clone();
                order.extend((0..n_features).filter(|f| !inside.contains(f)));
                order
            }
        }
    }
}

/// Runs one selector on the training partition.
pub fn run_selector(id: SelectorId, train: &Dataset, cfgs: &SelectorConfigs) -> Result<FeatureSelection> {
    id.validate()?;
    let nf = train.n_features();
    match (id.code, id.search) {
        (SelectorCode::Fs3, SearchKind::Ranker(rule)) => {
            let m = cfgs.relieff.samples.unwrap_or(train.n_rows()).min(train.n_rows());
            let scores = relieff(train, m, cfgs.relieff.neighbors, cfgs.relieff.seed)?;
            let selected = rank_cutoff(&scores, rule)?;
            Ok(FeatureSelection {
                id,
                detail: SelectionDetail::Ranking(scores),
                selected,
                evaluations: 0,
            })
        }
        (SelectorCode::Fs4, SearchKind::Ranker(rule)) => {
            let dmap = DiscretizationMap::fit(train)?;
            let scores = info_gain_scores(train, &dmap)?;
            let selected = rank_cutoff(&scores, rule)?;
            Ok(FeatureSelection {
                id,
                detail: SelectionDetail::Ranking(scores),
                selected,
                evaluations: 0,
            })
        }
        (code, search) => {
            let dmap = DiscretizationMap::fit(train)?;
            let binned = BinnedData::new(train, &dmap)?;
            let (method, result) = if code == SelectorCode::Fs1 {
                let eval = CfsEvaluator::from_binned(binned);
                (SubsetMethod::Cfs, run_subset_search(&eval, nf, search, cfgs)?)
            } else {
                let eval = ConsistencyEvaluator::new(binned);
                (SubsetMethod::Consistency, run_subset_search(&eval, nf, search, cfgs)?)
            };
            Ok(FeatureSelection {
                id,
                selected: result.subset.clone(),
                detail: SelectionDetail::Subset(SubsetEvaluation {
                    method,
                    subset: result.subset,
                    value: result.score,
                }),
                evaluations: result.evaluations,
            })
        }
    }
}

fn run_subset_search<E: crate::search::SubsetEvaluator>(
    eval: &E,
    nf: usize,
    search: SearchKind,
    cfgs: &SelectorConfigs,
) -> Result<crate::search::SearchResult> {
    match search {
        SearchKind::BestFirst => best_first(eval, nf, &cfgs.best_first),
        SearchKind::Genetic => genetic_search(eval, nf, &cfgs.genetic),
        SearchKind::Ranker(_) => unreachable!("validated"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregationMode {
    Union,
    Intersection,
    MeanRankTopK(usize),
}

impl fmt::Display for AggregationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AggregationMode::Union => write!(f, "union"),
            AggregationMode::Intersection => write!(f, "intersection"),
            AggregationMode::MeanRankTopK(k) => write!(f, "mean_rank_top_{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSelection {
    pub members: Vec<SelectorCode>,
    pub mode: AggregationMode,
    pub result: Vec<usize>,
    pub label: String,
}

impl EnsembleSelection {
    /// Line record: `label<TAB>mode<TAB>name,name,...` with names sorted.
    pub fn record(&self, feature_names: &[String]) -> String {
        let mut names: Vec<&str> = self.result.iter().map(|&f| feature_names[f].as_str()).collect();
        names.sort_unstable();
        format!("{}\t{}\t{}", self.label, self.mode, names.join(","))
    }
}

pub fn ensemble_label(members: &[SelectorCode]) -> String {
    let digits: String = members.iter().map(|c| c.digit()).collect();
    format!("EFS{digits}")
}

pub fn parse_ensemble_label(label: &str) -> Result<Vec<SelectorCode>> {
    let digits = label
        .strip_prefix("EFS")
        .ok_or_else(|| Error::InvalidSelector(format!("bad ensemble label `{label}`")))?;
    let codes = digits
        .chars()
        .map(|c| {
            SelectorCode::from_digit(c)
                .ok_or_else(|| Error::InvalidSelector(format!("bad ensemble label `{label}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    if codes.is_empty() {
        return Err(Error::InvalidSelector(format!("bad ensemble label `{label}`")));
    }
    Ok(codes)
}

/// Combines at least two selections into one feature set.
pub fn aggregate(
    selections: &[FeatureSelection],
    mode: AggregationMode,
    n_features: usize,
) -> Result<EnsembleSelection> {
    if selections.len() < 2 {
        return Err(Error::InvalidArgument(
            "aggregation needs at least two selections".into(),
        ));
    }
    let sets: Vec<BTreeSet<usize>> = selections
        .iter()
        .map(|s| s.selected.iter().copied().collect())
        .collect();
    let result: Vec<usize> = match mode {
        AggregationMode::Union => sets.iter().flatten().copied().collect::<BTreeSet<_>>().into_iter().collect(),
        AggregationMode::Intersection => {
            let mut acc = sets[0].clone();
            for s in &sets[1..] {
                acc = acc.intersection(s).copied().collect();
            }
            if acc.is_empty() {
                return Err(Error::EmptyIntersection);
            }
            acc.into_iter().collect()
        }
        AggregationMode::MeanRankTopK(k) => {
            if k == 0 || k > n_features {
                return Err(Error::InvalidArgument(format!(
                    "mean-rank top {k} of {n_features} features"
                )));
            }
            // equal member counts, so comparing rank sums compares means
            let mut rank_sum = vec![0usize; n_features];
            for s in selections {
                for (pos, f) in s.preference_order(n_features).into_iter().enumerate() {
                    rank_sum[f] += pos;
                }
            }
            let mut order: Vec<usize> = (0..n_features).collect();
            order.sort_by(|&a, &b| rank_sum[a].cmp(&rank_sum[b]).then(a.cmp(&b)));
            let mut top = order[..k].to_vec();
            top.sort_unstable();
            top
        }
    };
    if result.is_empty() {
        return Err(Error::EmptyFeatureSet);
    }
    let members: Vec<SelectorCode> = selections.iter().map(|s| s.code()).collect();
    Ok(EnsembleSelection {
        label: ensemble_label(&members),
        members,
        mode,
        result,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::ScoreMethod;

    fn subset_sel(code: SelectorCode, selected: Vec<usize>) -> FeatureSelection {
        FeatureSelection {
            id: SelectorId {
                code,
                search: SearchKind::Genetic,
            },
            detail: SelectionDetail::Subset(SubsetEvaluation {
                method: SubsetMethod::Cfs,
                subset: selected.clone(),
                value: 0.0,
            }),
            selected,
            evaluations: 0,
        }
    }

    fn ranking_sel(code: SelectorCode, ordering: Vec<usize>) -> FeatureSelection {
        let n = ordering.len();
        let mut scores = vec![0.0; n];
        for (pos, &f) in ordering.iter().enumerate() {
            scores[f] = (n - pos) as f64;
        }
        FeatureSelection {
            id: SelectorId {
                code,
                search: SearchKind::Ranker(RankRule::KeepAll),
            },
            detail: SelectionDetail::Ranking(FeatureScores::new(ScoreMethod::InfoGain, scores)),
            selected: (0..n).collect(),
            evaluations: 0,
        }
    }

    #[test]
    fn union_and_intersection() {
        let a = subset_sel(SelectorCode::Fs1, vec![1, 3]);
        let b = subset_sel(SelectorCode::Fs2, vec![3, 5]);
        let u = aggregate(&[a.clone(), b.clone()], AggregationMode::Union, 6).unwrap();
        assert_eq!(u.result, vec![1, 3, 5]);
        assert_eq!(u.label, "EFS12");
        let i = aggregate(&[b.clone(), a.clone()], AggregationMode::Intersection, 6).unwrap();
        assert_eq!(i.result, vec![3]);
        assert_eq!(i.label, "EFS21");
        let c = subset_sel(SelectorCode::Fs1, vec![0]);
        assert!(matches!(
            aggregate(&[a.clone(), c], AggregationMode::Intersection, 6),
            Err(Error::EmptyIntersection)
        ));
        assert!(aggregate(&[a], AggregationMode::Union, 6).is_err());
    }

    #[test]
    fn mean_rank_ties_by_index() {
        let a = ranking_sel(SelectorCode::Fs4, vec![0, 1, 2]);
        let b = ranking_sel(SelectorCode::Fs3, vec![2, 1, 0]);
        let r = aggregate(&[a.clone(), b.clone()], AggregationMode::MeanRankTopK(2), 3).unwrap();
        assert_eq!(r.result, vec![0, 1]);
        assert!(aggregate(&[a, b], AggregationMode::MeanRankTopK(4), 3).is_err());
    }

    #[test]
    fn subset_members_rank_selected_first() {
        let s = subset_sel(SelectorCode::Fs1, vec![3, 4]);
        assert_eq!(s.preference_order(5), vec![3, 4, 0, 1, 2]);
    }

    #[test]
    fn labels_round_trip() {
        assert_eq!(
            parse_ensemble_label("EFS41").unwrap(),
            vec![SelectorCode::Fs4, SelectorCode::Fs1]
        );
        assert_eq!(ensemble_label(&parse_ensemble_label("EFS1234").unwrap()), "EFS1234");
        assert!(parse_ensemble_label("EFS5").is_err());
        assert!(parse_ensemble_label("FS41").is_err());
    }

    #[test]
    fn selector_ids() {
        let id: SelectorId = "FS1:best_first".parse().unwrap();
        assert_eq!(id.search, SearchKind::BestFirst);
        assert_eq!(id.label(), "CorrFS-BestFirst");
        assert!("FS3:best_first".parse::<SelectorId>().is_err());
        assert!("FS9:ranker".parse::<SelectorId>().is_err());
        assert!("FS12".parse::<SelectorId>().is_err());
        assert!(SelectorId::new(SelectorCode::Fs3, SearchKind::BestFirst).is_err());
        let id: SelectorId = "fs4".parse().unwrap();
        assert!(matches!(id.search, SearchKind::Ranker(RankRule::KeepAll)));
    }

    #[test]
    fn record_sorts_names() {
        let e = EnsembleSelection {
            members: vec![SelectorCode::Fs4, SelectorCode::Fs1],
            mode: AggregationMode::Union,
            result: vec![0, 2],
            label: "EFS41".into(),
        };
        let names = vec!["ZZ".to_string(), "B".to_string(), "AC".to_string()];
        assert_eq!(e.record(&names), "EFS41\tunion\tAC,ZZ");
    }
}
