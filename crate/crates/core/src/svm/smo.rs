//! Sequential minimal optimization for the soft-margin dual, with two
//! optimality thresholds over the up and low index sets.
//!
//! Working-pair choice is deterministic: full passes examine rows in index
//! order and pair each violator with the extreme row that maximizes
//! `|E1 - E2|`, falling back to cyclic scans that start just after it.
//! Between full passes the most violating up row is paired with the low row
//! of largest second-order gain until the thresholds agree within the
//! tolerance.

use super::kernel::{KernelCache, KernelSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmConfig {
    pub c: f64,
    pub kernel: KernelSpec,
    /// KKT tolerance on `y·f(x) - 1`.
    pub tolerance: f64,
    /// Relative size, against its own terms, below which a pair step's
    /// dual-objective gain counts as no progress.
    pub epsilon: f64,
    /// Cap on successful pair updates.
    pub max_iterations: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 10.0,
            kernel: KernelSpec::default(),
            tolerance: 1e-3,
            epsilon: 1e-12,
            max_iterations: 1_000_000,
        }
    }
}

impl SvmConfig {
    pub fn new(c: f64, degree: u32) -> Self {
        SvmConfig {
            c,
            kernel: KernelSpec::polynomial(degree, 1.0),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidArgument(format!("C must be > 0, got {}", self.c)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument("tolerance must be > 0".into()));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::InvalidArgument("epsilon must be >= 0".into()));
        }
        self.kernel.validate()
    }
}

/// Dual multipliers for every training row plus the bias.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
    pub iterations: usize,
}

struct Solver<'a> {
    y: &'a [f64],
    c: f64,
    tol: f64,
    eps: f64,
    alpha: Vec<f64>,
    bias: f64,
    err: Vec<f64>,
    cache: KernelCache<'a>,
    diag: Vec<f64>,
    steps: usize,
}

impl Solver<'_> {
    fn unbounded(&self, i: usize) -> bool {
        self.alpha[i] > 0.0 && self.alpha[i] < self.c
    }

    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let (a1_old, a2_old) = (self.alpha[i1], self.alpha[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let (e1, e2) = (self.err[i1], self.err[i2]);
        let s = y1 * y2;
        let c = self.c;
        let (lo, hi) = if y1 != y2 {
            ((a2_old - a1_old).max(0.0), (c + a2_old - a1_old).min(c))
        } else {
            ((a1_old + a2_old - c).max(0.0), (a1_old + a2_old).min(c))
        };
        if lo >= hi {
            return false;
        }
        let k11 = self.cache.get(i1, i1);
        let k12 = self.cache.get(i1, i2);
        let k22 = self.cache.get(i2, i2);
        let eta = k11 + k22 - 2.0 * k12;
        let a2 = if eta > 0.0 {
            (a2_old + y2 * (e1 - e2) / eta).clamp(lo, hi)
        } else {
            // objective (to minimize) at both ends of the segment
            let f1 = y1 * (e1 - self.bias) - a1_old * k11 - s * a2_old * k12;
            let f2 = y2 * (e2 - self.bias) - s * a1_old * k12 - a2_old * k22;
            let obj = |a2: f64| {
                let a1 = a1_old + s * (a2_old - a2);
                a1 * f1 + a2 * f2 + 0.5 * a1 * a1 * k11 + 0.5 * a2 * a2 * k22 + s * a2 * a1 * k12
            };
            let (lobj, hobj) = (obj(lo), obj(hi));
            let slack = self.eps * (lobj.abs() + hobj.abs() + 1.0);
            if lobj < hobj - slack {
                lo
            } else if lobj > hobj + slack {
                hi
            } else {
                a2_old
            }
        };
        // cancellation residue next to a bound
        let residue = 1e-12 * a1_old.max(a2_old).max(a2);
        let snap = |a: f64| {
            if a < residue {
                0.0
            } else if c - a < residue.max(1e-12 * c) {
                c
            } else {
                a
            }
        };
        let a2 = snap(a2);
        let a1 = snap((a1_old + s * (a2_old - a2)).clamp(0.0, c));
        let d1 = y1 * (a1 - a1_old);
        let d2 = y2 * (a2 - a2_old);
        let linear = -(d1 * e1 + d2 * e2);
        let quadratic = 0.5 * (d1 * d1 * k11 + 2.0 * d1 * d2 * k12 + d2 * d2 * k22);
        let gain = linear - quadratic;
        // gains inside the rounding noise of their own terms are no progress
        let noise = (d1 * e1).abs() + (d2 * e2).abs() + quadratic.abs();
        if !(gain > self.eps * noise) {
            return false;
        }
        let b1 = self.bias - e1 - d1 * k11 - d2 * k12;
        let b2 = self.bias - e2 - d1 * k12 - d2 * k22;
        let new_bias = if a1 > 0.0 && a1 < c {
            b1
        } else if a2 > 0.0 && a2 < c {
            b2
        } else {
            0.5 * (b1 + b2)
        };
        let db = new_bias - self.bias;
        let err = &mut self.err;
        self.cache.with_rows(i1, i2, |r1, r2| {
            for (i, e) in err.iter_mut().enumerate() {
                *e += d1 * r1[i] + d2 * r2[i] + db;
            }
        });
        self.alpha[i1] = a1;
        self.alpha[i2] = a2;
        self.bias = new_bias;
        self.steps += 1;
        true
    }

    /// Rows whose multiplier may move so that `y·α` rises.
    fn in_up(&self, i: usize) -> bool {
        (self.y[i] > 0.0 && self.alpha[i] < self.c) || (self.y[i] < 0.0 && self.alpha[i] > 0.0)
    }

    /// Rows whose multiplier may move so that `y·α` falls.
    fn in_low(&self, i: usize) -> bool {
        (self.y[i] > 0.0 && self.alpha[i] > 0.0) || (self.y[i] < 0.0 && self.alpha[i] < self.c)
    }

    /// Smallest error over the up set and largest over the low set, with
    /// their first indices.
    fn extremes(&self) -> Extremes {
        let mut ext = Extremes {
            up: f64::INFINITY,
            i_up: usize::MAX,
            low: f64::NEG_INFINITY,
            i_low: usize::MAX,
        };
        for (i, &e) in self.err.iter().enumerate() {
            if self.in_up(i) && e < ext.up {
                ext.up = e;
                ext.i_up = i;
            }
            if self.in_low(i) && e > ext.low {
                ext.low = e;
                ext.i_low = i;
            }
        }
        ext
    }

    fn optimal(&self, ext: &Extremes) -> bool {
        ext.i_up == usize::MAX || ext.i_low == usize::MAX || ext.low <= ext.up + 2.0 * self.tol
    }

    fn examine(&mut self, i2: usize) -> bool {
        let n = self.alpha.len();
        let ext = self.extremes();
        let e2 = self.err[i2];
        let mut partner: Option<usize> = None;
        if self.in_low(i2) && e2 > ext.up + 2.0 * self.tol {
            partner = Some(ext.i_up);
        }
        if self.in_up(i2) && e2 < ext.low - 2.0 * self.tol {
            let better = partner.is_none_or(|p| (ext.low - e2).abs() > (self.err[p] - e2).abs());
            if better {
                partner = Some(ext.i_low);
            }
        }
        let Some(i1) = partner else {
            return false;
        };
        if self.take_step(i1, i2) {
            return true;
        }
        for off in 1..n {
            let i1 = (i2 + off) % n;
            if self.unbounded(i1) && self.take_step(i1, i2) {
                return true;
            }
        }
        for off in 1..n {
            let i1 = (i2 + off) % n;
            if self.take_step(i1, i2) {
                return true;
            }
        }
        false
    }

    /// Steps on the most violating up row, paired with the low row of
    /// largest second-order gain, until the two thresholds meet.
    fn optimize_extremes(&mut self, max_steps: usize) -> usize {
        let mut changed = 0;
        while self.steps < max_steps {
            let ext = self.extremes();
            if self.optimal(&ext) {
                break;
            }
            let i = ext.i_up;
            let (err, alpha, y, c, diag) = (&self.err, &self.alpha, self.y, self.c, &self.diag);
            let j = self.cache.with_rows(i, i, |row, _| {
                let mut best: Option<(f64, usize)> = None;
                for j in 0..err.len() {
                    let low = (y[j] > 0.0 && alpha[j] > 0.0) || (y[j] < 0.0 && alpha[j] < c);
                    let b = err[j] - ext.up;
                    if !low || b <= 0.0 {
                        continue;
                    }
                    let curvature = diag[i] + diag[j] - 2.0 * row[j];
                    let gain = b * b / if curvature > 0.0 { curvature } else { 1e-12 };
                    if best.is_none_or(|(g, _)| gain > g) {
                        best = Some((gain, j));
                    }
                }
                best.map_or(ext.i_low, |(_, j)| j)
            });
            if !self.take_step(i, j) && (j == ext.i_low || !self.take_step(i, ext.i_low)) {
                break;
            }
            changed += 1;
        }
        changed
    }

    /// Recomputes every error from scratch; true when the thresholds still
    /// show a violation.
    fn refresh_errors(&mut self) -> bool {
        let n = self.alpha.len();
        let mut exact = vec![0.0; n];
        for j in 0..n {
            let coef = self.alpha[j] * self.y[j];
            if coef != 0.0 {
                self.cache.with_rows(j, j, |row, _| {
                    for (e, k) in exact.iter_mut().zip(row) {
                        *e += coef * k;
                    }
                });
            }
        }
        for (i, e) in exact.iter_mut().enumerate() {
            *e += self.bias - self.y[i];
        }
        self.err = exact;
        !self.optimal(&self.extremes())
    }

    /// Bias averaged over unbounded rows; midpoint of the feasible interval
    /// when every multiplier sits at a bound.
    fn final_bias(&self) -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        let mut lb = f64::NEG_INFINITY;
        let mut ub = f64::INFINITY;
        for i in 0..self.alpha.len() {
            let r = self.bias - self.err[i];
            if self.unbounded(i) {
                sum += r;
                count += 1;
            } else {
                let at_zero = self.alpha[i] <= 0.0;
                // at zero: y·f >= 1; at C: y·f <= 1
                if (self.y[i] > 0.0) == at_zero {
                    lb = lb.max(r);
                } else {
                    ub = ub.min(r);
                }
            }
        }
        if count > 0 {
            sum / count as f64
        } else if lb.is_finite() && ub.is_finite() {
            0.5 * (lb + ub)
        } else if lb.is_finite() {
            lb
        } else if ub.is_finite() {
            ub
        } else {
            self.bias
        }
    }
}

const MAX_REFRESHES: usize = 3;

struct Extremes {
    up: f64,
    i_up: usize,
    low: f64,
    i_low: usize,
}

/// Solves the soft-margin dual for labels in {-1, +1}.
pub fn smo_solve(x: &[Vec<f64>], y: &[f64], cfg: &SvmConfig) -> Result<DualSolution> {
    cfg.validate()?;
    if x.len() != y.len() {
        return Err(Error::SchemaMismatch(format!("{} rows but {} labels", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::EmptyInput("SMO needs at least two rows"));
    }
    if let Some(bad) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
        return Err(Error::InvalidArgument(format!("label {bad} is not +1/-1")));
    }
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(Error::SingleClass);
    }
    let width = x[0].len();
    if x.iter().any(|r| r.len() != width) {
        return Err(Error::SchemaMismatch("rows of unequal length".into()));
    }
    let n = x.len();
    let mut solver = Solver {
        y,
        c: cfg.c,
        // half tolerance leaves room for the averaged bias
        tol: cfg.tolerance * 0.5,
        eps: cfg.epsilon,
        alpha: vec![0.0; n],
        bias: 0.0,
        err: y.iter().map(|v| -v).collect(),
        cache: KernelCache::new(x, cfg.kernel),
        diag: x.iter().map(|r| cfg.kernel.apply(r, r)).collect(),
        steps: 0,
    };

    let mut examine_all = true;
    let mut converged = true;
    let mut refreshes = 0;
    loop {
        let changed = if examine_all {
            let mut changed = 0usize;
            for i in 0..n {
                if solver.steps >= cfg.max_iterations {
                    break;
                }
                if solver.examine(i) {
                    changed += 1;
                }
            }
            changed
        } else {
            solver.optimize_extremes(cfg.max_iterations)
        };
        if solver.steps >= cfg.max_iterations {
            converged = false;
            break;
        }
        if examine_all {
            if changed == 0 {
                // incremental errors drift; confirm against exact ones
                if solver.refresh_errors() {
                    if refreshes < MAX_REFRESHES {
                        refreshes += 1;
                        examine_all = false;
                        continue;
                    }
                    converged = false;
                }
                break;
            }
            examine_all = false;
        } else {
            examine_all = true;
        }
    }
    let bias = solver.final_bias();
    Ok(DualSolution {
        alphas: solver.alpha,
        bias,
        converged,
        iterations: solver.steps,
    })
}
