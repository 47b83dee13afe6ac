//! Feature-subset search: best-first, genetic and exhaustive.
//!
//! Every search maximizes a [`SubsetEvaluator`] and never returns the empty
//! subset. Equal scores are resolved by the smaller subset, then the
//! lexicographically smaller index list.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::filters::{BinnedData, CfsEvaluator};

/// Deterministic subset score; larger is better. Subsets arrive sorted,
/// non-empty and duplicate-free.
pub trait SubsetEvaluator {
    fn evaluate(&self, subset: &[usize]) -> f64;
}

impl<F: Fn(&[usize]) -> f64> SubsetEvaluator for F {
    fn evaluate(&self, subset: &[usize]) -> f64 {
        self(subset)
    }
}

impl SubsetEvaluator for CfsEvaluator {
    fn evaluate(&self, subset: &[usize]) -> f64 {
        self.merit(subset).expect("search passes valid subsets")
    }
}

/// Negated inconsistency rate, so larger is better.
#[derive(Debug, Clone)]
pub struct ConsistencyEvaluator {
    data: BinnedData,
}

impl ConsistencyEvaluator {
    pub fn new(data: BinnedData) -> Self {
        ConsistencyEvaluator { data }
    }
}

impl SubsetEvaluator for ConsistencyEvaluator {
    fn evaluate(&self, subset: &[usize]) -> f64 {
        -self
            .data
            .inconsistency_rate(subset)
            .expect("search passes valid subsets")
    }
}

/// `Greater` when `a` beats `b`.
pub fn compare_candidates(a: (f64, &[usize]), b: (f64, &[usize])) -> Ordering {
    a.0.total_cmp(&b.0)
        .then_with(|| b.1.len().cmp(&a.1.len()))
        .then_with(|| b.1.cmp(a.1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub subset: Vec<usize>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub subset: Vec<usize>,
    pub score: f64,
    /// Distinct subsets scored by the evaluator.
    pub evaluations: usize,
    pub trace: Vec<TraceEntry>,
}

/// Subset as a little-endian hex bitmask (bit `i` = feature `i`).
pub fn subset_hex(subset: &[usize], n_features: usize) -> String {
    let n_nibbles = n_features.div_ceil(4).max(1);
    let mut nibbles = vec![0u8; n_nibbles];
    for &f in subset {
        nibbles[f / 4] |= 1 << (f % 4);
    }
    nibbles
        .iter()
        .rev()
        .map(|n| format!("{n:x}"))
        .collect::<String>()
}

pub fn write_trace_csv<W: Write>(result: &SearchResult, n_features: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "subset", "score"])?;
    for t in &result.trace {
        w.write_record([
            t.iteration.to_string(),
            subset_hex(&t.subset, n_features),
            format!("{:?}", t.score),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<trace output>", e))?;
    Ok(())
}

/// Memoizing wrapper that owns the evaluation count for one run.
struct Memo<'a, E: ?Sized> {
    eval: &'a E,
    cache: HashMap<Vec<usize>, f64>,
}

impl<'a, E: SubsetEvaluator + ?Sized> Memo<'a, E> {
    fn new(eval: &'a E) -> Self {
        Memo {
            eval,
            cache: HashMap::new(),
        }
    }

    fn score(&mut self, subset: &[usize]) -> f64 {
        if let Some(&v) = self.cache.get(subset) {
            return v;
        }
        let v = self.eval.evaluate(subset);
        self.cache.insert(subset.to_vec(), v);
        v
    }

    fn evaluations(&self) -> usize {
        self.cache.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BestFirstConfig {
    /// Consecutive non-improving expansions before stopping.
    pub stale_limit: usize,
}

impl Default for BestFirstConfig {
    fn default() -> Self {
        BestFirstConfig { stale_limit: 5 }
    }
}

/// Forward best-first search from the empty set over single-feature additions.
pub fn best_first<E: SubsetEvaluator + ?Sized>(
    eval: &E,
    n_features: usize,
    cfg: &BestFirstConfig,
) -> Result<SearchResult> {
    if n_features == 0 {
        return Err(Error::EmptyFeatureSet);
    }
    if cfg.stale_limit == 0 {
        return Err(Error::InvalidArgument("stale_limit must be >= 1".into()));
    }
    let mut memo = Memo::new(eval);
    let mut open: Vec<(f64, Vec<usize>)> = vec![(f64::NEG_INFINITY, Vec::new())];
    let mut visited: BTreeSet<Vec<usize>> = BTreeSet::new();
    visited.insert(Vec::new());
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut trace = Vec::new();
    let mut stale = 0;
    let mut iteration = 0;

    while stale < cfg.stale_limit {
        // pop the best open node
        let Some(pos) = (0..open.len()).max_by(|&a, &b| {
            compare_candidates((open[a].0, &open[a].1), (open[b].0, &open[b].1))
        }) else {
            break;
        };
        let (_, parent) = open.swap_remove(pos);
        iteration += 1;
        let mut improved = false;
        for f in 0..n_features {
            if parent.binary_search(&f).is_ok() {
                continue;
            }
            let mut child = parent.clone();
            child.insert(child.partition_point(|&g| g < f), f);
            if !visited.insert(child.clone()) {
                continue;
            }
            let score = memo.score(&child);
            let better = match &best {
                None => true,
                Some((bs, bset)) => {
                    compare_candidates((score, &child), (*bs, bset)) == Ordering::Greater
                }
            };
            if better {
                // ties only move the incumbent, they do not reset staleness
                if best.as_ref().is_none_or(|(bs, _)| score > *bs) {
                    improved = true;
                }
                best = Some((score, child.clone()));
                trace.push(TraceEntry {
                    iteration,
                    subset: child.clone(),
                    score,
                });
            }
            open.push((score, child));
        }
        if improved {
            stale = 0;
        } else {
            stale += 1;
        }
    }
    let (score, subset) = best.expect("at least one singleton is evaluated");
    Ok(SearchResult {
        subset,
        score,
        evaluations: memo.evaluations(),
        trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneticConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    pub seed: u64,
}

impl Default for GeneticConfig {
    fn default() -> Self {
        GeneticConfig {
            population: 20,
            generations: 20,
            crossover_prob: 0.6,
            mutation_prob: 0.033,
            seed: 1,
        }
    }
}

fn bits_to_subset(bits: &[bool]) -> Vec<usize> {
    bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
}

fn roulette(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return rng.gen_range(0..weights.len());
    }
    let mut target = rng.gen::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if target < w {
            return i;
        }
        target -= w;
    }
    // rounding left a sliver past the end
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(weights.len() - 1)
}

/// Generational GA over bitmasks: roulette selection on min-shifted scores,
/// single-point crossover, per-bit mutation and an elite of one.
/// All-zero individuals score as the worst possible and are never returned.
pub fn genetic_search<E: SubsetEvaluator + ?Sized>(
    eval: &E,
    n_features: usize,
    cfg: &GeneticConfig,
) -> Result<SearchResult> {
    if n_features == 0 {
        return Err(Error::EmptyFeatureSet);
    }
    if cfg.population < 2 || !cfg.population.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "population {} must be even and >= 2",
            cfg.population
        )));
    }
    for p in [cfg.crossover_prob, cfg.mutation_prob] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("probability {p} not in [0, 1]")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut memo = Memo::new(eval);
    let mut trace = Vec::new();
    let mut best: Option<(f64, Vec<usize>)> = None;

    let mut population: Vec<Vec<bool>> = (0..cfg.population)
        .map(|_| (0..n_features).map(|_| rng.gen_bool(0.5)).collect())
        .collect();

    for generation in 0..=cfg.generations {
        if generation > 0 {
            population = next_generation(&population, &scores_of(&population, &mut memo), cfg, &mut rng);
        }
        let scores = scores_of(&population, &mut memo);
        for (ind, &s) in population.iter().zip(&scores) {
            let Some(s) = s else { continue };
            let subset = bits_to_subset(ind);
            let better = best.as_ref().is_none_or(|(bs, bset)| {
                compare_candidates((s, &subset), (*bs, bset)) == Ordering::Greater
            });
            if better {
                trace.push(TraceEntry {
                    iteration: generation,
                    subset: subset.clone(),
                    score: s,
                });
                best = Some((s, subset));
            }
        }
    }

    let (score, subset) = match best {
        Some(b) => b,
        // every individual was empty: fall back to the best singleton
        None => {
            let mut b: Option<(f64, Vec<usize>)> = None;
            for f in 0..n_features {
                let s = memo.score(&[f]);
                if b.as_ref().is_none_or(|(bs, _)| s > *bs) {
                    b = Some((s, vec![f]));
                }
            }
            b.expect("n_features >= 1")
        }
    };
    Ok(SearchResult {
        subset,
        score,
        evaluations: memo.evaluations(),
        trace,
    })
}

fn scores_of<E: SubsetEvaluator + ?Sized>(
    population: &[Vec<bool>],
    memo: &mut Memo<'_, E>,
) -> Vec<Option<f64>> {
    population
        .iter()
        .map(|ind| {
            let subset = bits_to_subset(ind);
            (!subset.is_empty()).then(|| memo.score(&subset))
        })
        .collect()
}

fn next_generation(
    population: &[Vec<bool>],
    scores: &[Option<f64>],
    cfg: &GeneticConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<bool>> {
    let n = population[0].len();
    let min = scores.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = scores
        .iter()
        .map(|s| s.map_or(0.0, |s| s - min))
        .collect();

    let elite = (0..population.len())
        .filter(|&i| scores[i].is_some())
        .max_by(|&a, &b| {
            let sa = bits_to_subset(&population[a]);
            let sb = bits_to_subset(&population[b]);
            compare_candidates((scores[a].unwrap(), &sa), (scores[b].unwrap(), &sb))
        });

    let mut next = Vec::with_capacity(population.len());
    if let Some(e) = elite {
        next.push(population[e].clone());
    }
    while next.len() < population.len() {
        let mut a = population[roulette(&weights, rng)].clone();
        let mut b = population[roulette(&weights, rng)].clone();
        if n > 1 && rng.gen::<f64>() < cfg.crossover_prob {
            let point = rng.gen_range(1..n);
            for i in point..n {
                std::mem::swap(&mut a[i], &mut b[i]);
            }
        }
        for child in [&mut a, &mut b] {
            for bit in child.iter_mut() {
                if rng.gen::<f64>() < cfg.mutation_prob {
                    *bit = !*bit;
                }
            }
        }
        next.push(a);
        if next.len() < population.len() {
            next.push(b);
        }
    }
    next
}

/// Exact maximizer over all non-empty subsets of at most 16 features.
pub fn exhaustive_search<E: SubsetEvaluator + ?Sized>(
    eval: &E,
    n_features: usize,
) -> Result<SearchResult> {
    if n_features > 16 {
        return Err(Error::TooManyFeatures(n_features));
    }
    if n_features == 0 {
        return Err(Error::EmptyFeatureSet);
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for mask in 1u32..(1 << n_features) {
        let subset: Vec<usize> = (0..n_features).filter(|&i| mask & (1 << i) != 0).collect();
        let s = eval.evaluate(&subset);
        let better = best.as_ref().is_none_or(|(bs, bset)| {
            compare_candidates((s, &subset), (*bs, bset)) == Ordering::Greater
        });
        if better {
            best = Some((s, subset));
        }
    }
    let (score, subset) = best.expect("n_features >= 1");
    Ok(SearchResult {
        subset,
        score,
        evaluations: (1 << n_features) - 1,
        trace: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn target_eval(s: &[usize]) -> f64 {
        let hits = s.iter().filter(|&&f| f == 2 || f == 5).count() as f64;
        hits - 0.1 * (s.len() as f64 - hits)
    }

    #[test]
    fn best_first_finds_planted_pair() {
        let r = best_first(&target_eval, 8, &BestFirstConfig::default()).unwrap();
        assert_eq!(r.subset, vec![2, 5]);
        assert_eq!(r.score, 2.0);
        assert!(r.evaluations <= 5 * 8 * 9);
    }

    #[test]
    fn best_first_tie_and_floor_rules() {
        let r = best_first(&|_: &[usize]| 1.0, 6, &BestFirstConfig::default()).unwrap();
        assert_eq!(r.subset, vec![0]);
        let r = best_first(&|s: &[usize]| -(s.len() as f64), 6, &BestFirstConfig::default()).unwrap();
        assert_eq!(r.subset, vec![0]);
    }

    #[test]
    fn exhaustive_rules() {
        assert_eq!(exhaustive_search(&|_: &[usize]| 0.0, 1).unwrap().subset, vec![0]);
        assert_eq!(
            exhaustive_search(&|s: &[usize]| -(s.len() as f64), 5).unwrap().subset,
            vec![0]
        );
        assert!(matches!(exhaustive_search(&target_eval, 17), Err(Error::TooManyFeatures(17))));
        assert_eq!(exhaustive_search(&target_eval, 8).unwrap().subset, vec![2, 5]);
    }

    #[test]
    fn genetic_boundaries() {
        let cfg = GeneticConfig {
            generations: 0,
            ..Default::default()
        };
        let r0 = genetic_search(&target_eval, 8, &cfg).unwrap();
        assert!(r0.evaluations <= cfg.population);
        let again = genetic_search(&target_eval, 8, &cfg).unwrap();
        assert_eq!(r0, again);
        let odd = GeneticConfig {
            population: 7,
            ..Default::default()
        };
        assert!(genetic_search(&target_eval, 8, &odd).is_err());
    }

    #[test]
    fn genetic_is_monotone_in_generations() {
        let mut last = f64::NEG_INFINITY;
        for g in 0..15 {
            let cfg = GeneticConfig {
                generations: g,
                seed: 11,
                ..Default::default()
            };
            let r = genetic_search(&target_eval, 10, &cfg).unwrap();
            assert!(r.score >= last);
            assert!(r.evaluations <= cfg.population * (g + 1));
            last = r.score;
        }
    }

    #[test]
    fn hex_mask() {
        assert_eq!(subset_hex(&[0, 5], 8), "21");
        assert_eq!(subset_hex(&[], 3), "0");
        assert_eq!(subset_hex(&[20], 21), "100000");
    }
}
