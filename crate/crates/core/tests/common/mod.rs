//! Shared helpers for integration tests: seeded random instances and
//! brute-force oracles written independently of the library's solvers.

#![allow(dead_code, clippy::needless_range_loop)]

use itertools::Itertools;
use l0lab::linalg::DenseMatrix;
use l0lab::{Exponent, Instance, PhiSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ENSEMBLE_SEED: u64 = 20_240_601;
pub const PIVOT_TOL: f64 = 1e-9;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random instance with m ≤ 5, n ≤ 7 and integer entries in −5..=5.
pub fn random_instance(rng: &mut ChaCha8Rng, p: Exponent) -> Instance {
    let m = rng.gen_range(1..=5);
    let n = rng.gen_range(1..=7);
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..n).map(|_| rng.gen_range(-5..=5) as f64).collect())
        .collect();
    let b: Vec<f64> = (0..m).map(|_| rng.gen_range(-5..=5) as f64).collect();
    Instance::new(DenseMatrix::from_rows(&rows).unwrap(), b, p).unwrap()
}

/// The 100-instance ensemble: 50 with p = 1 followed by 50 with p = 2.
pub fn ensemble() -> Vec<Instance> {
    let mut r = rng(ENSEMBLE_SEED);
    let mut out = Vec::new();
    for p in [Exponent::One, Exponent::Two] {
        for _ in 0..50 {
            out.push(random_instance(&mut r, p));
        }
    }
    out
}

/// Every subset of 0..n, by size then lexicographically.
pub fn all_supports(n: usize) -> Vec<Vec<usize>> {
    (0..=n).flat_map(|k| (0..n).combinations(k)).collect()
}

/// Gaussian elimination with partial pivoting on a square system.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs())).max(1.0);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= PIVOT_TOL * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Rank by row reduction.
pub fn rank(rows: &[Vec<f64>]) -> usize {
    let mut a = rows.to_vec();
    let (m, n) = (a.len(), a.first().map_or(0, Vec::len));
    let scale = a.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs())).max(1.0);
    let mut r = 0;
    for c in 0..n {
        if r == m {
            break;
        }
        let piv = (r..m).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        if a[piv][c].abs() <= PIVOT_TOL * scale {
            continue;
        }
        a.swap(r, piv);
        for i in r + 1..m {
            let f = a[i][c] / a[r][c];
            for k in c..n {
                a[i][k] -= f * a[r][k];
            }
        }
        r += 1;
    }
    r
}

fn columns(inst: &Instance, cols: &[usize]) -> Vec<Vec<f64>> {
    (0..inst.m()).map(|i| cols.iter().map(|&j| inst.a().row(i)[j]).collect()).collect()
}

/// Greedy maximal linearly independent subset of `support`.
pub fn independent_subset(inst: &Instance, support: &[usize]) -> Vec<usize> {
    let mut keep: Vec<usize> = Vec::new();
    for &j in support {
        let mut trial = keep.clone();
        trial.push(j);
        if rank(&columns(inst, &trial)) == trial.len() {
            keep = trial;
        }
    }
    keep
}

fn residual_norm(inst: &Instance, x: &[f64]) -> f64 {
    let r: Vec<f64> = (0..inst.m())
        .map(|i| inst.a().row(i).iter().zip(x).map(|(a, x)| a * x).sum::<f64>() - inst.b()[i])
        .collect();
    match inst.p() {
        Exponent::One => r.iter().map(|v| v.abs()).sum(),
        Exponent::Two => r.iter().map(|v| v * v).sum::<f64>().sqrt(),
    }
}

/// Least p-norm residual over vectors supported in `support`, with one
/// minimizer. p = 2 solves the normal equations on independent columns;
/// p = 1 scans every basic solution that zeroes `d` residual rows.
pub fn support_fit(inst: &Instance, support: &[usize]) -> (f64, Vec<f64>) {
    let n = inst.n();
    let cols = independent_subset(inst, support);
    let d = cols.len();
    let embed = |z: &[f64]| {
        let mut x = vec![0.0; n];
        for (&j, &v) in cols.iter().zip(z) {
            x[j] = v;
        }
        x
    };
    if d == 0 {
        let x = vec![0.0; n];
        return (residual_norm(inst, &x), x);
    }
    let a = columns(inst, &cols);
    match inst.p() {
        Exponent::Two => {
            let gram: Vec<Vec<f64>> = (0..d)
                .map(|i| (0..d).map(|j| (0..inst.m()).map(|r| a[r][i] * a[r][j]).sum()).collect())
                .collect();
            let rhs: Vec<f64> = (0..d).map(|i| (0..inst.m()).map(|r| a[r][i] * inst.b()[r]).sum()).collect();
            let z = gauss_solve(gram, rhs).expect("independent columns give a nonsingular Gram matrix");
            let x = embed(&z);
            (residual_norm(inst, &x), x)
        }
        Exponent::One => {
            let mut best: Option<(f64, Vec<f64>)> = None;
            for rows in (0..inst.m()).combinations(d) {
                let sys: Vec<Vec<f64>> = rows.iter().map(|&r| a[r].clone()).collect();
                let rhs: Vec<f64> = rows.iter().map(|&r| inst.b()[r]).collect();
                if let Some(z) = gauss_solve(sys, rhs) {
                    let x = embed(&z);
                    let v = residual_norm(inst, &x);
                    if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                        best = Some((v, x));
                    }
                }
            }
            best.expect("a full column rank block has a nonsingular row subset")
        }
    }
}

/// Oracle fits for every support of the instance.
pub fn all_fits(inst: &Instance) -> Vec<(Vec<usize>, f64, Vec<f64>)> {
    all_supports(inst.n())
        .into_iter()
        .map(|s| {
            let (r, x) = support_fit(inst, &s);
            (s, r, x)
        })
        .collect()
}

/// Level data computed by running the alternating minimization loop
/// literally: minimize φ of the residual over supports of size ≤ s − 1, then
/// minimize the support size at that penalty value.
pub struct LiteralLevels {
    pub s: Vec<usize>,
    pub rho: Vec<f64>,
    /// Supports of size `s[i]` attaining `rho[i]`.
    pub supports: Vec<Vec<Vec<usize>>>,
}

pub fn literal_levels(inst: &Instance, phi: PhiSpec, tol: f64) -> LiteralLevels {
    let fits = all_fits(inst);
    let val = |r: f64| phi.value(r);
    let mut out = LiteralLevels { s: vec![], rho: vec![], supports: vec![] };
    let mut cap = inst.n();
    loop {
        let rho = fits
            .iter()
            .filter(|f| f.0.len() <= cap)
            .map(|f| val(f.1))
            .fold(f64::INFINITY, f64::min);
        let reach = |f: &&(Vec<usize>, f64, Vec<f64>)| val(f.1) <= rho + tol;
        let s = fits.iter().filter(reach).map(|f| f.0.len()).min().unwrap();
        let supports: Vec<Vec<usize>> =
            fits.iter().filter(reach).filter(|f| f.0.len() == s).map(|f| f.0.clone()).collect();
        out.s.push(s);
        out.rho.push(rho);
        out.supports.push(supports);
        if s == 0 {
            return out;
        }
        cap = s - 1;
    }
}

/// Exhaustive minimum of ‖x‖₀ + λ·φ(residual) with the optimal supports.
pub fn penalty_min(fits: &[(Vec<usize>, f64, Vec<f64>)], phi: PhiSpec, lambda: f64) -> (f64, Vec<Vec<usize>>) {
    let obj = |f: &(Vec<usize>, f64, Vec<f64>)| f.0.len() as f64 + lambda * phi.value(f.1);
    let best = fits.iter().map(obj).fold(f64::INFINITY, f64::min);
    let tol = 1e-9 * best.abs().max(1.0);
    let supports = fits.iter().filter(|f| obj(f) <= best + tol).map(|f| f.0.clone()).collect();
    (best, supports)
}

/// Largest eigenvalue of AᵀA by cyclic Jacobi rotations.
pub fn spectral_norm_sq(inst: &Instance) -> f64 {
    let n = inst.n();
    let mut g: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| (0..inst.m()).map(|r| inst.a().row(r)[i] * inst.a().row(r)[j]).sum()).collect())
        .collect();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| g[i][j].powi(2)).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if g[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (g[q][q] - g[p][p]) / (2.0 * g[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (gkp, gkq) = (g[k][p], g[k][q]);
                    g[k][p] = c * gkp - s * gkq;
                    g[k][q] = s * gkp + c * gkq;
                }
                for k in 0..n {
                    let (gpk, gqk) = (g[p][k], g[q][k]);
                    g[p][k] = c * gpk - s * gqk;
                    g[q][k] = s * gpk + c * gqk;
                }
            }
        }
    }
    (0..n).map(|i| g[i][i]).fold(0.0, f64::max)
}

/// ½(‖Ax − b‖₂ − σ)₊² evaluated directly.
pub fn hinge_value(inst: &Instance, sigma: f64, x: &[f64]) -> f64 {
    let r = (0..inst.m())
        .map(|i| inst.a().row(i).iter().zip(x).map(|(a, x)| a * x).sum::<f64>() - inst.b()[i])
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    0.5 * (r - sigma).max(0.0).powi(2)
}

/// Central finite-difference gradient of `hinge_value`.
pub fn fd_gradient(inst: &Instance, sigma: f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|j| {
            let mut up = x.to_vec();
            let mut dn = x.to_vec();
            up[j] += h;
            dn[j] -= h;
            (hinge_value(inst, sigma, &up) - hinge_value(inst, sigma, &dn)) / (2.0 * h)
        })
        .collect()
}

pub fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `count` points log-spaced on [lo, hi].
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (count - 1) as f64).exp())
        .collect()
}
