//! Polynomial-kernel soft-margin SVMs trained by SMO, and a one-vs-one
//! multiclass wrapper over them.

mod kernel;
pub(crate) mod persist;
mod smo;

pub use kernel::{kernel_eval, KernelSpec};
pub use persist::{load_model, read_model, save_model, write_model, MODEL_VERSION};
pub use smo::{smo_solve, DualSolution, SvmConfig};

pub(crate) use persist::{parse_model_section, write_model_section};

use rayon::prelude::*;

use crate::data::{Dataset, Standardizer};
use crate::error::{Error, Result};

/// A trained binary machine; positive label `+1`, negative `-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySvm {
    pub support: Vec<Vec<f64>>,
    pub alphas: Vec<f64>,
    pub labels: Vec<f64>,
    pub bias: f64,
    pub kernel: KernelSpec,
    pub c: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl BinarySvm {
    pub fn from_solution(x: &[Vec<f64>], y: &[f64], sol: &DualSolution, cfg: &SvmConfig) -> Self {
        let mut svm = BinarySvm {
            support: Vec::new(),
            alphas: Vec::new(),
            labels: Vec::new(),
            bias: sol.bias,
            kernel: cfg.kernel,
            c: cfg.c,
            converged: sol.converged,
            iterations: sol.iterations,
        };
        for (i, &a) in sol.alphas.iter().enumerate() {
            if a > 0.0 {
                svm.support.push(x[i].clone());
                svm.alphas.push(a);
                svm.labels.push(y[i]);
            }
        }
        svm
    }

    pub fn n_features(&self) -> Option<usize> {
        self.support.first().map(Vec::len)
    }

    /// `Σ αᵢ yᵢ K(sᵢ, x) + b`.
    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        let width = self
            .n_features()
            .ok_or_else(|| Error::InvalidModel("no support rows".into()))?;
        if x.len() != width {
            return Err(Error::SchemaMismatch(format!(
                "instance has {} features, model expects {width}",
                x.len()
            )));
        }
        Ok(self.decision_unchecked(x))
    }

    pub(crate) fn decision_unchecked(&self, x: &[f64]) -> f64 {
        let mut sum = 0.0;
        for ((s, &a), &y) in self.support.iter().zip(&self.alphas).zip(&self.labels) {
            sum += a * y * self.kernel.apply(s, x);
        }
        sum + self.bias
    }

    /// Dual objective `Σα - ½ ΣΣ αᵢαⱼyᵢyⱼK(sᵢ, sⱼ)`.
    pub fn dual_objective(&self) -> f64 {
        let n = self.support.len();
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += self.alphas[i]
                    * self.alphas[j]
                    * self.labels[i]
                    * self.labels[j]
                    * self.kernel.apply(&self.support[i], &self.support[j]);
            }
        }
        self.alphas.iter().sum::<f64>() - 0.5 * quad
    }
}

pub fn smo_train(x: &[Vec<f64>], y: &[f64], cfg: &SvmConfig) -> Result<BinarySvm> {
    let sol = smo_solve(x, y, cfg)?;
    Ok(BinarySvm::from_solution(x, y, &sol, cfg))
}

pub fn decision_value(m: &BinarySvm, x: &[f64]) -> Result<f64> {
    m.decision_value(x)
}

/// Binary machine separating `positive` (+1) from `negative` (-1).
#[derive(Debug, Clone, PartialEq)]
pub struct PairMachine {
    pub positive: usize,
    pub negative: usize,
    pub svm: BinarySvm,
}

/// One-vs-one multiclass SVM on standardized features.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub classes: Vec<String>,
    pub priors: Vec<f64>,
    pub feature_names: Vec<String>,
    pub standardizer: Standardizer,
    pub config: SvmConfig,
    pub machines: Vec<PairMachine>,
}

impl SvmModel {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn non_converged(&self) -> usize {
        self.machines.iter().filter(|m| !m.svm.converged).count()
    }

    /// Predicts the class index of a raw (unstandardized) feature row.
    pub fn predict_index(&self, raw: &[f64]) -> Result<usize> {
        if raw.len() != self.n_features() {
            return Err(Error::SchemaMismatch(format!(
                "instance has {} features, model expects {}",
                raw.len(),
                self.n_features()
            )));
        }
        Ok(self.predict_unchecked(raw))
    }

    pub(crate) fn predict_unchecked(&self, raw: &[f64]) -> usize {
        let z = self.standardizer.transform_row(raw);
        let k = self.classes.len();
        let mut votes = vec![0usize; k];
        let mut strength = vec![0.0f64; k];
        for m in &self.machines {
            let dv = m.svm.decision_unchecked(&z);
            let winner = if dv >= 0.0 { m.positive } else { m.negative };
            votes[winner] += 1;
            strength[winner] += dv.abs();
        }
        (0..k)
            .max_by(|&a, &b| {
                votes[a]
                    .cmp(&votes[b])
                    .then(strength[a].total_cmp(&strength[b]))
                    .then(self.priors[a].total_cmp(&self.priors[b]))
                    .then(b.cmp(&a))
            })
            .expect("at least two classes")
    }

    pub fn predict(&self, raw: &[f64]) -> Result<&str> {
        Ok(&self.classes[self.predict_index(raw)?])
    }

    /// Predicted class index for every row of `ds`.
    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<usize>> {
        self.check_dataset(ds)?;
        Ok(ds.rows().iter().map(|r| self.predict_unchecked(r)).collect())
    }

    pub fn check_dataset(&self, ds: &Dataset) -> Result<()> {
        if ds.feature_names() != self.feature_names {
            return Err(Error::SchemaMismatch(format!(
                "model features [{}], dataset features [{}]",
                self.feature_names.join(","),
                ds.feature_names().join(",")
            )));
        }
        if ds.class_labels() != self.classes.as_slice() {
            return Err(Error::SchemaMismatch(format!(
                "model classes [{}], dataset classes [{}]",
                self.classes.join(","),
                ds.class_labels().join(",")
            )));
        }
        Ok(())
    }
}

/// Trains one binary machine per unordered class pair on standardized rows.
pub fn train_multiclass(train: &Dataset, cfg: &SvmConfig) -> Result<SvmModel> {
    cfg.validate()?;
    let k = train.n_classes();
    let counts = train.class_counts();
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(Error::ClassAbsent(train.class_labels()[c].clone()));
    }
    if k < 2 {
        return Err(Error::SingleClass);
    }
    let standardizer = Standardizer::fit(train)?;
    let z: Vec<Vec<f64>> = train.rows().iter().map(|r| standardizer.transform_row(r)).collect();
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).collect();
    let machines = pairs
        .par_iter()
        .map(|&(a, b)| {
            let mut x = Vec::new();
            let mut y = Vec::new();
            for (row, &label) in z.iter().zip(train.labels()) {
                if label == a || label == b {
                    x.push(row.clone());
                    y.push(if label == a { 1.0 } else { -1.0 });
                }
            }
            smo_train(&x, &y, cfg).map(|svm| PairMachine {
                positive: a,
                negative: b,
                svm,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SvmModel {
        classes: train.class_labels().to_vec(),
        priors: train.class_priors(),
        feature_names: train.feature_names(),
        standardizer,
        config: *cfg,
        machines,
    })
}

pub fn predict<'m>(model: &'m SvmModel, instance: &[f64]) -> Result<&'m str> {
    model.predict(instance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::AttributeSpec;

    fn linear(c: f64) -> SvmConfig {
        SvmConfig {
            c,
            kernel: KernelSpec::polynomial(1, 0.0),
            ..Default::default()
        }
    }

    #[test]
    fn two_point_analytic() {
        let x = vec![vec![-1.0], vec![1.0]];
        let y = vec![-1.0, 1.0];
        let m = smo_train(&x, &y, &linear(10.0)).unwrap();
        assert!(m.converged);
        assert_eq!(m.alphas.len(), 2);
        for a in &m.alphas {
            assert!((a - 0.5).abs() < 1e-12);
        }
        assert!(m.bias.abs() < 1e-12);
        assert!(m.decision_value(&[0.0]).unwrap().abs() < 1e-12);
        assert!((m.decision_value(&[1.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!(m.decision_value(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn xor_poly2() {
        let x = vec![vec![1.0, 1.0], vec![-1.0, -1.0], vec![1.0, -1.0], vec![-1.0, 1.0]];
        let y = vec![1.0, 1.0, -1.0, -1.0];
        let cfg = SvmConfig {
            c: 1e6,
            kernel: KernelSpec::polynomial(2, 1.0),
            ..Default::default()
        };
        let m = smo_train(&x, &y, &cfg).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert!(m.decision_value(xi).unwrap() * yi > 0.0);
        }
    }

    #[test]
    fn single_class_and_empty_model() {
        let x = vec![vec![0.0], vec![1.0]];
        assert!(matches!(smo_train(&x, &[1.0, 1.0], &linear(1.0)), Err(Error::SingleClass)));
        let empty = BinarySvm {
            support: vec![],
            alphas: vec![],
            labels: vec![],
            bias: 0.0,
            kernel: KernelSpec::default(),
            c: 1.0,
            converged: true,
            iterations: 0,
        };
        assert!(matches!(empty.decision_value(&[0.0]), Err(Error::InvalidModel(_))));
    }

    fn three_blobs() -> Dataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        let centers = [(0.0, 0.0), (5.0, 0.0), (0.0, 5.0)];
        for (c, &(cx, cy)) in centers.iter().enumerate() {
            for i in 0..6 {
                let dx = (i % 3) as f64 * 0.3;
                let dy = (i / 3) as f64 * 0.3;
                rows.push(vec![cx + dx, cy + dy]);
                labels.push(c);
            }
        }
        Dataset::new(
            vec![AttributeSpec::numeric("a"), AttributeSpec::numeric("b")],
            AttributeSpec::nominal("cls", vec!["N".into(), "P".into(), "S".into()]),
            rows,
            labels,
        )
        .unwrap()
    }

    #[test]
    fn one_vs_one_recalls_separable_training_rows() {
        let ds = three_blobs();
        let model = train_multiclass(&ds, &SvmConfig::new(10.0, 3)).unwrap();
        assert_eq!(model.machines.len(), 3);
        assert_eq!(model.predict_dataset(&ds).unwrap(), ds.labels());
        assert_eq!(model.predict(&[5.1, 0.1]).unwrap(), "P");
        assert!(model.predict(&[1.0]).is_err());
    }

    #[test]
    fn absent_class_is_an_error() {
        let ds = three_blobs();
        let only_two = ds.take_rows(&(0..12).collect::<Vec<_>>());
        assert!(matches!(
            train_multiclass(&only_two, &SvmConfig::default()),
            Err(Error::ClassAbsent(c)) if c == "S"
        ));
    }
}
