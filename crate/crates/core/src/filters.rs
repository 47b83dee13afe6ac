//! Filter scores: entropy-based measures, CFS merit, inconsistency rate and ReliefF.
//!
//! Numeric features enter the entropy-based scores through a
//! [`DiscretizationMap`]; ReliefF works on raw values.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{Dataset, DiscretizationMap};
use crate::error::{Error, Result};

/// Shannon entropy in bits of a frequency table.
pub fn entropy_of_counts(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

pub fn entropy<T: Ord>(labels: &[T]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::EmptyInput("entropy of an empty sequence"));
    }
    let mut counts: BTreeMap<&T, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    Ok(entropy_of_counts(&counts.into_values().collect::<Vec<_>>()))
}

fn joint_entropy(a: &[u32], b: &[u32]) -> f64 {
    let mut counts: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *counts.entry((x, y)).or_default() += 1;
    }
    entropy_of_counts(&counts.into_values().collect::<Vec<_>>())
}

fn column_entropy(a: &[u32]) -> f64 {
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for &x in a {
        *counts.entry(x).or_default() += 1;
    }
    entropy_of_counts(&counts.into_values().collect::<Vec<_>>())
}

/// A binned feature or the class column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    Feature(usize),
    Class,
}

/// Every feature mapped through a discretization map, plus the class codes.
#[derive(Debug, Clone)]
pub struct BinnedData {
    pub columns: Vec<Vec<u32>>,
    pub class: Vec<u32>,
}

impl BinnedData {
    pub fn new(ds: &Dataset, dmap: &DiscretizationMap) -> Result<BinnedData> {
        if dmap.n_features() != ds.n_features() {
            return Err(Error::SchemaMismatch(format!(
                "discretization covers {} features, dataset has {}",
                dmap.n_features(),
                ds.n_features()
            )));
        }
        Ok(BinnedData {
            columns: (0..ds.n_features()).map(|f| dmap.binned_column(ds, f)).collect(),
            class: ds.labels().iter().map(|&l| l as u32).collect(),
        })
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn n_rows(&self) -> usize {
        self.class.len()
    }

    fn get(&self, c: Column) -> Result<&[u32]> {
        match c {
            Column::Class => Ok(&self.class),
            Column::Feature(f) => self
                .columns
                .get(f)
                .map(Vec::as_slice)
                .ok_or(Error::FeatureOutOfRange {
                    index: f,
                    n_features: self.n_features(),
                }),
        }
    }

    pub fn info_gain(&self, feature: usize) -> Result<f64> {
        let x = self.get(Column::Feature(feature))?;
        let h_class = column_entropy(&self.class);
        let h_cond = joint_entropy(x, &self.class) - column_entropy(x);
        Ok((h_class - h_cond).max(0.0))
    }

    pub fn symmetric_uncertainty(&self, a: Column, b: Column) -> Result<f64> {
        let (x, y) = (self.get(a)?, self.get(b)?);
        let hx = column_entropy(x);
        let hy = column_entropy(y);
        if hx + hy == 0.0 {
            return Ok(0.0);
        }
        let hxy = joint_entropy(x, y);
        Ok((2.0 * (hx + hy - hxy) / (hx + hy)).clamp(0.0, 1.0))
    }

    pub fn inconsistency_rate(&self, subset: &[usize]) -> Result<f64> {
        if subset.is_empty() {
            return Err(Error::EmptyFeatureSet);
        }
        let cols = subset
            .iter()
            .map(|&f| self.get(Column::Feature(f)))
            .collect::<Result<Vec<_>>>()?;
        let mut groups: HashMap<Vec<u32>, BTreeMap<u32, usize>> = HashMap::new();
        for row in 0..self.n_rows() {
            let pattern: Vec<u32> = cols.iter().map(|c| c[row]).collect();
            *groups.entry(pattern).or_default().entry(self.class[row]).or_default() += 1;
        }
        let inconsistent: usize = groups
            .values()
            .map(|counts| {
                let total: usize = counts.values().sum();
                total - counts.values().max().copied().unwrap_or(0)
            })
            .sum();
        Ok(inconsistent as f64 / self.n_rows() as f64)
    }
}

pub fn info_gain(ds: &Dataset, feature: usize, dmap: &DiscretizationMap) -> Result<f64> {
    BinnedData::new(ds, dmap)?.info_gain(feature)
}

pub fn symmetric_uncertainty(
    ds: &Dataset,
    a: Column,
    b: Column,
    dmap: &DiscretizationMap,
) -> Result<f64> {
    BinnedData::new(ds, dmap)?.symmetric_uncertainty(a, b)
}

pub fn cfs_merit(ds: &Dataset, subset: &[usize], dmap: &DiscretizationMap) -> Result<f64> {
    CfsEvaluator::new(ds, dmap)?.merit(subset)
}

pub fn inconsistency_rate(ds: &Dataset, subset: &[usize], dmap: &DiscretizationMap) -> Result<f64> {
    BinnedData::new(ds, dmap)?.inconsistency_rate(subset)
}

/// CFS merit with a memoized symmetric-uncertainty table.
///
/// The table is filled lazily and may be shared across threads.
#[derive(Debug)]
pub struct CfsEvaluator {
    data: BinnedData,
    /// Upper triangle over features plus the class (last column).
    su: Vec<OnceLock<f64>>,
}

impl CfsEvaluator {
    pub fn new(ds: &Dataset, dmap: &DiscretizationMap) -> Result<Self> {
        Ok(Self::from_binned(BinnedData::new(ds, dmap)?))
    }

    pub fn from_binned(data: BinnedData) -> Self {
        let m = data.n_features() + 1;
        CfsEvaluator {
            su: (0..m * m).map(|_| OnceLock::new()).collect(),
            data,
        }
    }

    pub fn n_features(&self) -> usize {
        self.data.n_features()
    }

    fn su(&self, a: usize, b: usize) -> f64 {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let m = self.data.n_features() + 1;
        let col = |i: usize| {
            if i == m - 1 {
                Column::Class
            } else {
                Column::Feature(i)
            }
        };
        *self.su[lo * m + hi].get_or_init(|| {
            self.data
                .symmetric_uncertainty(col(lo), col(hi))
                .expect("indices validated by merit")
        })
    }

    /// `k * mean(SU(f, class)) / sqrt(k + k(k-1) * mean(SU(f, g)))`.
    pub fn merit(&self, subset: &[usize]) -> Result<f64> {
        if subset.is_empty() {
            return Err(Error::EmptyFeatureSet);
        }
        let nf = self.data.n_features();
        if let Some(&bad) = subset.iter().find(|&&f| f >= nf) {
            return Err(Error::FeatureOutOfRange {
                index: bad,
                n_features: nf,
            });
        }
        let mut sorted = subset.to_vec();
        sorted.sort_unstable();
        let k = sorted.len() as f64;
        let r_cf = sorted.iter().map(|&f| self.su(f, nf)).sum::<f64>() / k;
        let mut pair_sum = 0.0;
        let mut pairs = 0usize;
        for (i, &a) in sorted.iter().enumerate() {
            for &b in &sorted[i + 1..] {
                pair_sum += self.su(a, b);
                pairs += 1;
            }
        }
        let r_ff = if pairs == 0 {
            0.0
        } else {
            pair_sum / pairs as f64
        };
        Ok(k * r_cf / (k + k * (k - 1.0) * r_ff).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScoreMethod {
    ReliefF,
    InfoGain,
}

impl ScoreMethod {
    pub fn name(self) -> &'static str {
        match self {
            ScoreMethod::ReliefF => "relieff",
            ScoreMethod::InfoGain => "info_gain",
        }
    }
}

/// Per-feature scores and the feature order by descending score
/// (ties by ascending index).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScores {
    pub method: ScoreMethod,
    pub scores: Vec<f64>,
    pub ordering: Vec<usize>,
}

impl FeatureScores {
    pub fn new(method: ScoreMethod, scores: Vec<f64>) -> Self {
        let mut ordering: Vec<usize> = (0..scores.len()).collect();
        ordering.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        FeatureScores {
            method,
            scores,
            ordering,
        }
    }

    /// 1-based rank of every feature.
    pub fn ranks(&self) -> Vec<usize> {
        let mut ranks = vec![0; self.scores.len()];
        for (pos, &f) in self.ordering.iter().enumerate() {
            ranks[f] = pos + 1;
        }
        ranks
    }

    /// CSV rows `feature,method,score,rank` in rank order.
    pub fn write_csv<W: Write>(&self, feature_names: &[String], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["feature", "method", "score", "rank"])?;
        for (pos, &f) in self.ordering.iter().enumerate() {
            w.write_record([
                feature_names[f].as_str(),
                self.method.name(),
                &format!("{:?}", self.scores[f]),
                &(pos + 1).to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<scores output>", e))?;
        Ok(())
    }
}

pub fn info_gain_scores(ds: &Dataset, dmap: &DiscretizationMap) -> Result<FeatureScores> {
    let binned = BinnedData::new(ds, dmap)?;
    let scores = (0..ds.n_features())
        .map(|f| binned.info_gain(f))
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureScores::new(ScoreMethod::InfoGain, scores))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubsetMethod {
    Cfs,
    Consistency,
}

/// A scored subset; larger values are better for both methods.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetEvaluation {
    pub method: SubsetMethod,
    pub subset: Vec<usize>,
    pub value: f64,
}

/// ReliefF feature weights.
///
/// `m` rows are sampled (all of them, in a canonical content order, when
/// `m == n_rows`); each is compared with its `k` nearest hits and `k`
/// nearest misses of every other class under the Manhattan distance on
/// range-normalized differences. Classes too small for `k` neighbours use
/// as many as they have.
pub fn relieff(ds: &Dataset, m: usize, k: usize, seed: u64) -> Result<FeatureScores> {
    let n = ds.n_rows();
    if n == 0 {
        return Err(Error::EmptyInput("relieff dataset"));
    }
    if m == 0 || m > n {
        return Err(Error::InvalidArgument(format!("sample count {m} not in 1..={n}")));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("relieff needs k >= 1".into()));
    }
    let nf = ds.n_features();
    let numeric: Vec<bool> = ds.features().iter().map(|a| a.is_numeric()).collect();
    let ranges: Vec<f64> = (0..nf)
        .map(|f| {
            let (lo, hi) = ds.rows().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r[f]), hi.max(r[f]))
            });
            hi - lo
        })
        .collect();
    let diff = |f: usize, a: f64, b: f64| -> f64 {
        if numeric[f] {
            if ranges[f] > 0.0 {
                (a - b).abs() / ranges[f]
            } else {
                0.0
            }
        } else if a == b {
            0.0
        } else {
            1.0
        }
    };
    let content_cmp = |a: usize, b: usize| {
        ds.label(a).cmp(&ds.label(b)).then_with(|| {
            ds.row(a)
                .iter()
                .zip(ds.row(b))
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    };

    let mut sampled: Vec<usize> = (0..n).collect();
    if m == n {
        sampled.sort_by(|&a, &b| content_cmp(a, b));
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        sampled.shuffle(&mut rng);
        sampled.truncate(m);
    }

    let priors = ds.class_priors();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); ds.n_classes()];
    for i in 0..n {
        by_class[ds.label(i)].push(i);
    }
    let mut weights = vec![0.0; nf];
    let mf = m as f64;
    for &r in &sampled {
        let row_r = ds.row(r);
        let class_r = ds.label(r);
        for (c, members) in by_class.iter().enumerate() {
            let mut cands: Vec<(f64, usize)> = members
                .iter()
                .filter(|&&j| j != r)
                .map(|&j| {
                    let d = (0..nf).map(|f| diff(f, row_r[f], ds.row(j)[f])).sum::<f64>();
                    (d, j)
                })
                .collect();
            if cands.is_empty() {
                continue;
            }
            cands.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| content_cmp(a.1, b.1)));
            let used = k.min(cands.len());
            let scale = if c == class_r {
                -1.0 / (mf * used as f64)
            } else {
                priors[c] / (1.0 - priors[class_r]) / (mf * used as f64)
            };
            for f in 0..nf {
                let s: f64 = cands[..used].iter().map(|&(_, j)| diff(f, row_r[f], ds.row(j)[f])).sum();
                weights[f] += scale * s;
            }
        }
    }
    Ok(FeatureScores::new(ScoreMethod::ReliefF, weights))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RankRule {
    KeepAll,
    TopK(usize),
    /// Keeps features scoring strictly above the threshold.
    Threshold(f64),
}

/// Features retained by a ranking rule, ascending.
pub fn rank_cutoff(scores: &FeatureScores, rule: RankRule) -> Result<Vec<usize>> {
    let n = scores.scores.len();
    let mut out: Vec<usize> = match rule {
        RankRule::KeepAll => (0..n).collect(),
        RankRule::TopK(k) => {
            if k > n || k == 0 {
                return Err(Error::InvalidArgument(format!("top_k({k}) with {n} features")));
            }
            scores.ordering[..k].to_vec()
        }
        RankRule::Threshold(t) => (0..n).filter(|&f| scores.scores[f] > t).collect(),
    };
    out.sort_unstable();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{AttributeSpec, Dataset};

    fn binned(cols: &[&[u32]], class: &[u32]) -> BinnedData {
        BinnedData {
            columns: cols.iter().map(|c| c.to_vec()).collect(),
            class: class.to_vec(),
        }
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&["A", "A", "B", "B"]).unwrap(), 1.0);
        assert_eq!(entropy(&["A", "A", "A", "A"]).unwrap(), 0.0);
        // -(3/4) log2(3/4) - (1/4) log2(1/4), evaluated independently
        let expected = 0.811_278_124_459_132_9;
        assert!((entropy(&["A", "A", "A", "B"]).unwrap() - expected).abs() < 1e-12);
        assert!(entropy::<u8>(&[]).is_err());
    }

    #[test]
    fn info_gain_examples() {
        assert_eq!(binned(&[&[0, 0, 1, 1]], &[0, 0, 1, 1]).info_gain(0).unwrap(), 1.0);
        assert_eq!(binned(&[&[0, 1, 0, 1]], &[0, 0, 1, 1]).info_gain(0).unwrap(), 0.0);
        let ig = binned(&[&[0, 0, 1, 1]], &[0, 0, 0, 1]).info_gain(0).unwrap();
        assert!((ig - 0.311_278_124_459_132_9).abs() < 1e-12, "{ig}");
    }

    #[test]
    fn su_examples() {
        let b = binned(&[&[0, 0, 1, 1], &[0, 1, 0, 1]], &[0, 0, 0, 1]);
        let self_su = b.symmetric_uncertainty(Column::Feature(0), Column::Feature(0)).unwrap();
        assert!((self_su - 1.0).abs() < 1e-15);
        let indep = b.symmetric_uncertainty(Column::Feature(0), Column::Feature(1)).unwrap();
        assert_eq!(indep, 0.0);
        let su = b.symmetric_uncertainty(Column::Feature(0), Column::Class).unwrap();
        assert!((su - 0.343_711_018_485_450_8).abs() < 1e-12, "{su}");
        let constant = binned(&[&[0, 0], &[1, 1]], &[0, 0]);
        assert_eq!(constant.symmetric_uncertainty(Column::Feature(0), Column::Feature(1)).unwrap(), 0.0);
    }

    #[test]
    fn cfs_merit_formula() {
        let b = binned(&[&[0, 0, 1, 1], &[0, 1, 0, 1], &[0, 0, 1, 1]], &[0, 0, 1, 1]);
        let cfs = CfsEvaluator::from_binned(b.clone());
        let su0 = b.symmetric_uncertainty(Column::Feature(0), Column::Class).unwrap();
        assert_eq!(cfs.merit(&[0]).unwrap(), su0);
        assert!(cfs.merit(&[]).is_err());
        // merit({0,1}) = 2 * 0.5 / sqrt(2) when the pair is uncorrelated
        let m01 = cfs.merit(&[0, 1]).unwrap();
        assert!((m01 - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(cfs.merit(&[1, 0]).unwrap(), m01);
        // a perfect duplicate adds redundancy without new class information
        assert!((cfs.merit(&[0, 2]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inconsistency_examples() {
        let pure = binned(&[&[0, 0, 1, 1]], &[0, 0, 1, 1]);
        assert_eq!(pure.inconsistency_rate(&[0]).unwrap(), 0.0);
        let mixed = binned(&[&[0, 0, 1, 2]], &[0, 1, 0, 1]);
        assert_eq!(mixed.inconsistency_rate(&[0]).unwrap(), 0.25);
        let three = binned(&[&[5, 5, 5]], &[0, 0, 1]);
        assert!((three.inconsistency_rate(&[0]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(three.inconsistency_rate(&[]).is_err());
    }

    fn one_feature(values: &[f64], labels: &[usize]) -> Dataset {
        Dataset::new(
            vec![AttributeSpec::numeric("x"), AttributeSpec::numeric("flat")],
            AttributeSpec::nominal("cls", vec!["A".into(), "B".into()]),
            values.iter().map(|&v| vec![v, 3.0]).collect(),
            labels.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn relieff_examples() {
        let ds = one_feature(&[0.0, 0.1, 1.0, 0.9], &[0, 0, 1, 1]);
        let w = relieff(&ds, 4, 1, 0).unwrap();
        // hits differ by 0.1 each, misses by 0.9, 0.8, 0.9, 0.8
        assert!((w.scores[0] - 0.75).abs() < 1e-12, "{:?}", w.scores);
        assert_eq!(w.scores[1], 0.0);
        assert_eq!(w.ordering, vec![0, 1]);

        let permuted = ds.take_rows(&[2, 0, 3, 1]);
        assert_eq!(relieff(&permuted, 4, 1, 0).unwrap().scores, w.scores);
        assert!(relieff(&ds, 5, 1, 0).is_err());
        assert!(relieff(&ds, 4, 0, 0).is_err());
    }

    #[test]
    fn rank_cutoff_rules() {
        let s = FeatureScores::new(ScoreMethod::InfoGain, vec![0.2, 0.9, 0.5]);
        assert_eq!(s.ordering, vec![1, 2, 0]);
        assert_eq!(rank_cutoff(&s, RankRule::KeepAll).unwrap(), vec![0, 1, 2]);
        assert_eq!(rank_cutoff(&s, RankRule::TopK(1)).unwrap(), vec![1]);
        assert!(rank_cutoff(&s, RankRule::TopK(4)).is_err());
        let t = FeatureScores::new(ScoreMethod::ReliefF, vec![0.3, 0.0, -0.1]);
        assert_eq!(rank_cutoff(&t, RankRule::Threshold(0.0)).unwrap(), vec![0]);
        let tie = FeatureScores::new(ScoreMethod::ReliefF, vec![1.0, 2.0, 1.0]);
        assert_eq!(tie.ordering, vec![1, 0, 2]);
        assert_eq!(tie.ranks(), vec![2, 1, 3]);
    }
}
