//! Brute-force reference implementations of the filter measures and the
//! SVM dual, plus seeded fixture generators, for checking `efsvm` against.

use std::collections::BTreeMap;

use efsvm::data::{AttributeSpec, Dataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------- filters

fn counts<T: Ord + Clone>(values: &[T]) -> BTreeMap<T, usize> {
    let mut m = BTreeMap::new();
    for v in values {
        *m.entry(v.clone()).or_insert(0) += 1;
    }
    m
}

/// `-Σ p log2 p` from explicit frequency counts.
pub fn entropy<T: Ord + Clone>(values: &[T]) -> f64 {
    let n = values.len() as f64;
    counts(values)
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// `H(C) - Σ_v P(v) H(C | X = v)`.
pub fn info_gain(x: &[u32], class: &[u32]) -> f64 {
    let n = x.len() as f64;
    let mut cond = 0.0;
    for (v, c) in counts(x) {
        let sub: Vec<u32> = x
            .iter()
            .zip(class)
            .filter(|(xi, _)| **xi == v)
            .map(|(_, ci)| *ci)
            .collect();
        cond += c as f64 / n * entropy(&sub);
    }
    entropy(class) - cond
}

/// `2 I(X;Y) / (H(X) + H(Y))` with the mutual information summed over cells.
pub fn symmetric_uncertainty(x: &[u32], y: &[u32]) -> f64 {
    let hx = entropy(x);
    let hy = entropy(y);
    if hx + hy == 0.0 {
        return 0.0;
    }
    let n = x.len() as f64;
    let px = counts(x);
    let py = counts(y);
    let pairs: Vec<(u32, u32)> = x.iter().copied().zip(y.iter().copied()).collect();
    let mut mi = 0.0;
    for ((a, b), c) in counts(&pairs) {
        let pxy = c as f64 / n;
        let pa = px[&a] as f64 / n;
        let pb = py[&b] as f64 / n;
        mi += pxy * (pxy / (pa * pb)).log2();
    }
    2.0 * mi / (hx + hy)
}

pub fn cfs_merit(columns: &[Vec<u32>], class: &[u32], subset: &[usize]) -> f64 {
    let k = subset.len() as f64;
    let rcf: f64 = subset
        .iter()
        .map(|&f| symmetric_uncertainty(&columns[f], class))
        .sum::<f64>()
        / k;
    let mut sum = 0.0;
    let mut n = 0.0;
    for i in 0..subset.len() {
        for j in 0..subset.len() {
            if i != j {
                sum += symmetric_uncertainty(&columns[subset[i]], &columns[subset[j]]);
                n += 1.0;
            }
        }
    }
    let rff = if n > 0.0 { sum / n } else { 0.0 };
    k * rcf / (k + k * (k - 1.0) * rff).sqrt()
}

/// Pairwise scan: every row joins the group of identical projected patterns
/// and the group's non-majority rows count as inconsistent.
pub fn inconsistency_rate(columns: &[Vec<u32>], class: &[u32], subset: &[usize]) -> f64 {
    let n = class.len();
    let same = |a: usize, b: usize| subset.iter().all(|&f| columns[f][a] == columns[f][b]);
    let mut seen = vec![false; n];
    let mut bad = 0;
    for i in 0..n {
        if seen[i] {
            continue;
        }
        let group: Vec<usize> = (0..n).filter(|&j| same(i, j)).collect();
        for &j in &group {
            seen[j] = true;
        }
        let labels: Vec<u32> = group.iter().map(|&j| class[j]).collect();
        let majority = counts(&labels).values().copied().max().unwrap_or(0);
        bad += group.len() - majority;
    }
    bad as f64 / n as f64
}

/// ReliefF over every row: for each row, the `k` nearest rows of each
/// class (ties by label then values) contribute range-normalized diffs.
pub fn relieff(rows: &[Vec<f64>], labels: &[usize], n_classes: usize, k: usize) -> Vec<f64> {
    let n = rows.len();
    let nf = rows[0].len();
    let range: Vec<f64> = (0..nf)
        .map(|f| {
            let col: Vec<f64> = rows.iter().map(|r| r[f]).collect();
            col.iter().cloned().fold(f64::MIN, f64::max) - col.iter().cloned().fold(f64::MAX, f64::min)
        })
        .collect();
    let diff = |f: usize, a: usize, b: usize| {
        if range[f] == 0.0 {
            0.0
        } else {
            (rows[a][f] - rows[b][f]).abs() / range[f]
        }
    };
    let dist = |a: usize, b: usize| (0..nf).map(|f| diff(f, a, b)).sum::<f64>();
    let prior: Vec<f64> = (0..n_classes)
        .map(|c| labels.iter().filter(|&&l| l == c).count() as f64 / n as f64)
        .collect();
    let key = |j: usize| (labels[j], rows[j].clone());
    let mut w = vec![0.0; nf];
    for r in 0..n {
        for c in 0..n_classes {
            let mut cands: Vec<usize> = (0..n).filter(|&j| j != r && labels[j] == c).collect();
            if cands.is_empty() {
                continue;
            }
            cands.sort_by(|&a, &b| {
                dist(r, a)
                    .partial_cmp(&dist(r, b))
                    .unwrap()
                    .then_with(|| key(a).partial_cmp(&key(b)).unwrap())
            });
            let used = k.min(cands.len());
            for f in 0..nf {
                let total: f64 = cands[..used].iter().map(|&j| diff(f, r, j)).sum();
                let scaled = total / (n as f64 * used as f64);
                if c == labels[r] {
                    w[f] -= scaled;
                } else {
                    w[f] += prior[c] / (1.0 - prior[labels[r]]) * scaled;
                }
            }
        }
    }
    w
}

// ------------------------------------------------------------------- QP

/// Result of the reference dual solver.
pub struct QpSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub objective: f64,
}

pub fn poly(u: &[f64], v: &[f64], degree: u32, coef0: f64) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let mut out = 1.0;
    for _ in 0..degree {
        out *= dot + coef0;
    }
    out
}

pub fn dual_objective(alpha: &[f64], q: &[Vec<f64>]) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * q[i][j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Projection onto `{0 <= a <= C, y·a = 0}` by bisection on the multiplier.
fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |lambda: f64| -> Vec<f64> {
        v.iter()
            .zip(y)
            .map(|(vi, yi)| (vi - lambda * yi).clamp(0.0, c))
            .collect()
    };
    let g = |lambda: f64| at(lambda).iter().zip(y).map(|(a, yi)| a * yi).sum::<f64>();
    let span = v.iter().fold(0.0f64, |m, x| m.max(x.abs())) + c + 1.0;
    let (mut lo, mut hi) = (-span, span);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// Solves `A x = b` by Gaussian elimination; `None` when singular.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[piv][col].abs() < 1e-11 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for k in col..n {
                a[r][k] -= f * a[col][k];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Dense projected-gradient (FISTA) solver of the soft-margin dual, followed
/// by an exact solve on the detected free set.
pub fn qp_oracle(x: &[Vec<f64>], y: &[f64], c: f64, degree: u32, coef0: f64) -> QpSolution {
    let n = x.len();
    let q: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| y[i] * y[j] * poly(&x[i], &x[j], degree, coef0)).collect())
        .collect();
    // Lipschitz bound: Gershgorin
    let l = q
        .iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let grad = |a: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| 1.0 - (0..n).map(|j| q[i][j] * a[j]).sum::<f64>())
            .collect()
    };
    let mut a = vec![0.0; n];
    let mut z = a.clone();
    let mut t = 1.0f64;
    for _ in 0..200_000 {
        let g = grad(&z);
        let step: Vec<f64> = z.iter().zip(&g).map(|(zi, gi)| zi + gi / l).collect();
        let next = project(&step, y, c);
        // stop at a fixed point of the plain projected-gradient map
        let ga = grad(&next);
        let plain: Vec<f64> = next.iter().zip(&ga).map(|(ai, gi)| ai + gi / l).collect();
        let moved = project(&plain, y, c)
            .iter()
            .zip(&next)
            .map(|(u, v)| (u - v).abs())
            .fold(0.0, f64::max);
        if moved <= 1e-15 * c.max(1.0) {
            a = next;
            break;
        }
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        z = next
            .iter()
            .zip(&a)
            .map(|(nx, ax)| nx + (t - 1.0) / t_next * (nx - ax))
            .collect();
        a = next;
        t = t_next;
    }

    // exact refinement on the free set
    let tol = 1e-7 * c.max(1.0);
    let free: Vec<usize> = (0..n).filter(|&i| a[i] > tol && a[i] < c - tol).collect();
    let bound: Vec<usize> = (0..n).filter(|i| !free.contains(i)).collect();
    let mut fixed = a.clone();
    for &i in &bound {
        fixed[i] = if a[i] >= c - tol { c } else { 0.0 };
    }
    if !free.is_empty() {
        let m = free.len();
        let mut mat = vec![vec![0.0; m + 1]; m + 1];
        let mut rhs = vec![0.0; m + 1];
        for (r, &i) in free.iter().enumerate() {
            for (s, &j) in free.iter().enumerate() {
                mat[r][s] = q[i][j];
            }
            mat[r][m] = y[i];
            mat[m][r] = y[i];
            rhs[r] = 1.0 - bound.iter().map(|&j| q[i][j] * fixed[j]).sum::<f64>();
        }
        rhs[m] = -bound.iter().map(|&j| y[j] * fixed[j]).sum::<f64>();
        if let Some(sol) = solve(mat, rhs) {
            let mut cand = fixed.clone();
            for (r, &i) in free.iter().enumerate() {
                cand[i] = sol[r];
            }
            let feasible = cand.iter().all(|&v| (-1e-12..=c + 1e-12).contains(&v));
            if feasible && dual_objective(&cand, &q) >= dual_objective(&a, &q) - 1e-12 {
                a = cand.iter().map(|v| v.clamp(0.0, c)).collect();
            }
        }
    }

    let f_no_bias = |i: usize| (0..n).map(|j| a[j] * y[j] * poly(&x[j], &x[i], degree, coef0)).sum::<f64>();
    let free: Vec<usize> = (0..n).filter(|&i| a[i] > tol && a[i] < c - tol).collect();
    let bias = if free.is_empty() {
        let mut lb = f64::NEG_INFINITY;
        let mut ub = f64::INFINITY;
        for i in 0..n {
            let r = y[i] - f_no_bias(i);
            let at_zero = a[i] <= tol;
            if (y[i] > 0.0) == at_zero {
                lb = lb.max(r);
            } else {
                ub = ub.min(r);
            }
        }
        match (lb.is_finite(), ub.is_finite()) {
            (true, true) => 0.5 * (lb + ub),
            (true, false) => lb,
            (false, true) => ub,
            _ => 0.0,
        }
    } else {
        free.iter().map(|&i| y[i] - f_no_bias(i)).sum::<f64>() / free.len() as f64
    };
    QpSolution {
        objective: dual_objective(&a, &q),
        alpha: a,
        bias,
    }
}

// -------------------------------------------------------------- fixtures

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal draw (Box-Muller).
pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub const CTG_FEATURES: [&str; 21] = [
    "LB", "AC", "FM", "UC", "DL", "DS", "DP", "ASTV", "MSTV", "ALTV", "MLTV", "Width", "Min", "Max", "Nmax",
    "Nzeros", "Mode", "Mean", "Median", "Variance", "Tendency",
];

/// A 21-feature, 3-class dataset with roughly the class balance and scale
/// of fetal cardiotocography records. Classes are `Normal`, `Pathologic`,
/// `Suspect`, kept separable enough for accuracies in the high nineties.
pub fn ctg_like(n: usize, seed: u64) -> Dataset {
    let mut rng = rng(seed);
    let base = [133.0, 0.003, 0.01, 0.004, 0.002, 0.0, 0.0, 47.0, 1.3, 10.0, 8.2, 70.0, 93.0, 164.0, 4.0, 0.3, 137.0, 134.0, 138.0, 19.0, 0.3];
    let scale = [9.8, 0.004, 0.05, 0.003, 0.003, 0.0001, 0.0006, 17.0, 0.9, 18.0, 5.6, 39.0, 29.0, 18.0, 2.9, 0.7, 16.0, 15.0, 14.0, 29.0, 0.6];
    // per-class mean shifts in units of `scale`
    let shift: [[f64; 21]; 3] = [
        [0.0; 21],
        [0.6, -0.8, 0.3, -0.9, 0.8, 1.5, 2.5, 1.6, 0.9, 1.4, -0.6, 0.5, -0.4, 0.2, 0.3, 0.1, -1.8, -2.0, -1.7, 1.5, -0.3],
        [0.9, -0.9, 0.4, -0.5, -0.3, 0.2, 0.3, 1.8, -0.7, 2.2, -0.9, -0.8, 0.8, -0.5, -0.4, -0.1, 0.4, 0.5, 0.5, -0.4, 0.4],
    ];
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        // about 78% Normal, 8% Pathologic, 14% Suspect
        let u = (i as f64 + 0.5) / n as f64;
        let class = if u < 0.778 {
            0
        } else if u < 0.861 {
            1
        } else {
            2
        };
        let row: Vec<f64> = (0..21)
            .map(|f| {
                let v = base[f] + scale[f] * (shift[class][f] + 0.55 * normal(&mut rng));
                // counts and bpm-like columns are integers in the real records
                if [0, 11, 12, 13, 14, 15, 16, 17, 18, 19].contains(&f) {
                    v.round()
                } else if f == 20 {
                    v.round().clamp(-1.0, 1.0)
                } else {
                    (v * 1000.0).round() / 1000.0
                }
            })
            .collect();
        rows.push(row);
        labels.push(class);
    }
    Dataset::new(
        CTG_FEATURES.iter().map(|s| AttributeSpec::numeric(*s)).collect(),
        AttributeSpec::nominal("NSP", vec!["Normal".into(), "Pathologic".into(), "Suspect".into()]),
        rows,
        labels,
    )
    .unwrap()
}

/// Small random dataset with `nf` features drawn from a few levels.
pub fn small_dataset(seed: u64, rows: usize, nf: usize, classes: usize) -> Dataset {
    let mut r = rng(seed);
    loop {
        let labels: Vec<usize> = (0..rows).map(|_| r.gen_range(0..classes)).collect();
        let mut present = vec![false; classes];
        for &l in &labels {
            present[l] = true;
        }
        if !present.iter().all(|&p| p) {
            continue;
        }
        let data: Vec<Vec<f64>> = labels
            .iter()
            .map(|&l| {
                (0..nf)
                    .map(|f| {
                        let signal = if f % 2 == 0 { l as f64 * 2.0 } else { 0.0 };
                        (signal + r.gen_range(0..3) as f64).round()
                    })
                    .collect()
            })
            .collect();
        let names: Vec<String> = (0..classes).map(|c| format!("c{c}")).collect();
        return Dataset::new(
            (0..nf).map(|f| AttributeSpec::numeric(format!("f{f}"))).collect(),
            AttributeSpec::nominal("y", names),
            data,
            labels,
        )
        .unwrap();
    }
}
