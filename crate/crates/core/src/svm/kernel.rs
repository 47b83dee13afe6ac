use std::collections::{HashMap, VecDeque};
use std::rc::Rc;

use crate::error::{Error, Result};

/// Inhomogeneous polynomial kernel `(u·v + coef0)^degree`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub degree: u32,
    pub coef0: f64,
}

impl KernelSpec {
    pub fn polynomial(degree: u32, coef0: f64) -> Self {
        KernelSpec { degree, coef0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree == 0 {
            return Err(Error::InvalidArgument("kernel degree must be >= 1".into()));
        }
        if !self.coef0.is_finite() {
            return Err(Error::InvalidArgument("kernel coef0 must be finite".into()));
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn apply(&self, u: &[f64], v: &[f64]) -> f64 {
        let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
        (dot + self.coef0).powi(self.degree as i32)
    }
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec {
            degree: 3,
            coef0: 1.0,
        }
    }
}

pub fn kernel_eval(u: &[f64], v: &[f64], spec: &KernelSpec) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::SchemaMismatch(format!(
            "kernel inputs of length {} and {}",
            u.len(),
            v.len()
        )));
    }
    Ok(spec.apply(u, v))
}

/// Rows at or below this count get a dense Gram matrix.
pub(crate) const DENSE_LIMIT: usize = 4096;
const LRU_ROWS: usize = 512;

/// Gram matrix access for the solver: dense when small, LRU rows otherwise.
pub(crate) enum KernelCache<'a> {
    Dense {
        n: usize,
        gram: Vec<f64>,
    },
    Lru {
        x: &'a [Vec<f64>],
        spec: KernelSpec,
        diag: Vec<f64>,
        rows: HashMap<usize, Rc<[f64]>>,
        order: VecDeque<usize>,
    },
}

impl<'a> KernelCache<'a> {
    pub(crate) fn new(x: &'a [Vec<f64>], spec: KernelSpec) -> Self {
        let n = x.len();
        if n <= DENSE_LIMIT {
            let mut gram = vec![0.0; n * n];
            for i in 0..n {
                for j in i..n {
                    let k = spec.apply(&x[i], &x[j]);
                    gram[i * n + j] = k;
                    gram[j * n + i] = k;
                }
            }
            KernelCache::Dense { n, gram }
        } else {
            KernelCache::Lru {
                x,
                spec,
                diag: x.iter().map(|r| spec.apply(r, r)).collect(),
                rows: HashMap::new(),
                order: VecDeque::new(),
            }
        }
    }

    pub(crate) fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            KernelCache::Dense { n, gram } => gram[i * n + j],
            KernelCache::Lru { x, spec, diag, rows, .. } => {
                if i == j {
                    diag[i]
                } else if let Some(r) = rows.get(&i) {
                    r[j]
                } else if let Some(r) = rows.get(&j) {
                    r[i]
                } else {
                    spec.apply(&x[i], &x[j])
                }
            }
        }
    }

    fn lru_row(&mut self, i: usize) -> Rc<[f64]> {
        let KernelCache::Lru { x, spec, rows, order, .. } = self else {
            unreachable!("dense cache has no row store");
        };
        if let Some(r) = rows.get(&i) {
            let r = r.clone();
            if let Some(pos) = order.iter().position(|&k| k == i) {
                order.remove(pos);
            }
            order.push_back(i);
            return r;
        }
        let row: Rc<[f64]> = x.iter().map(|v| spec.apply(&x[i], v)).collect();
        if order.len() >= LRU_ROWS {
            if let Some(old) = order.pop_front() {
                rows.remove(&old);
            }
        }
        rows.insert(i, row.clone());
        order.push_back(i);
        row
    }

    /// Calls `f` with the full kernel rows of `i` and `j`.
    pub(crate) fn with_rows<R>(&mut self, i: usize, j: usize, f: impl FnOnce(&[f64], &[f64]) -> R) -> R {
        match self {
            KernelCache::Dense { n, gram } => {
                let n = *n;
                f(&gram[i * n..(i + 1) * n], &gram[j * n..(j + 1) * n])
            }
            KernelCache::Lru { .. } => {
                let ri = self.lru_row(i);
                let rj = self.lru_row(j);
                f(&ri, &rj)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let cubic = KernelSpec::polynomial(3, 1.0);
        assert_eq!(kernel_eval(&[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0], &cubic).unwrap(), 1.0);
        let quad = KernelSpec::polynomial(2, 1.0);
        assert_eq!(kernel_eval(&[1.0, 1.0], &[1.0, 1.0], &quad).unwrap(), 9.0);
        assert!(kernel_eval(&[1.0], &[1.0, 2.0], &quad).is_err());
        assert!(KernelSpec::polynomial(0, 1.0).validate().is_err());
    }

    #[test]
    fn lru_matches_dense() {
        let x: Vec<Vec<f64>> = (0..DENSE_LIMIT + 3)
            .map(|i| vec![(i % 7) as f64 * 0.1, (i % 5) as f64 * -0.2])
            .collect();
        let spec = KernelSpec::polynomial(2, 1.0);
        let mut cache = KernelCache::new(&x, spec);
        assert!(matches!(cache, KernelCache::Lru { .. }));
        for &(i, j) in &[(0, 1), (5, 5), (4000, 17), (DENSE_LIMIT + 2, 3)] {
            assert_eq!(cache.get(i, j), spec.apply(&x[i], &x[j]));
        }
        cache.with_rows(2, 9, |a, b| {
            assert_eq!(a[9], b[2]);
            assert_eq!(a.len(), x.len());
        });
        assert_eq!(cache.get(9, 2), spec.apply(&x[9], &x[2]));
    }
}
