//! Small dense linear algebra: Householder QR with column pivoting, minimum-norm
//! least squares, exact l1 regression by basic-solution enumeration, numerical
//! rank and spectral norm.
//!
//! Everything here is sized for desk-scale problems (tens of rows and columns).
//! Storage is row-major and all routines allocate freely.

#![allow(clippy::needless_range_loop)]

use std::ops::{Index, IndexMut};

use itertools::Itertools;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Default relative tolerance for rank decisions.
pub const RANK_TOL: f64 = 1e-10;

/// Iteration cap for the power method in [`spectral_norm`].
pub const POWER_ITERATION_CAP: usize = 10_000;

/// A dense, row-major matrix of finite reals with at least one row and column.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite matrix entry at row {}, column {}",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        if m == 0 {
            return Err(Error::InvalidInput("matrix has no rows".into()));
        }
        let n = rows[0].len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::InvalidInput(format!(
                    "row {i} has {} entries, expected {n}",
                    r.len()
                )));
            }
        }
        Self::new(m, n, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// Column submatrix with the given column indices, in the given order.
    /// An empty index list yields `None` since a matrix needs at least one column.
    pub fn select_columns(&self, cols: &[usize]) -> Option<Self> {
        if cols.is_empty() {
            return None;
        }
        let mut out = Self::zeros(self.rows, cols.len());
        for i in 0..self.rows {
            for (k, &j) in cols.iter().enumerate() {
                out[(i, k)] = self[(i, j)];
            }
        }
        Some(out)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Option<Self> {
        if rows.is_empty() {
            return None;
        }
        let mut out = Self::zeros(rows.len(), self.cols);
        for (k, &i) in rows.iter().enumerate() {
            out.data[k * self.cols..(k + 1) * self.cols].copy_from_slice(self.row(i));
        }
        Some(out)
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    /// `M x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `Mᵀ y`
    pub fn tr_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let yi = y[i];
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * yi;
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Serialize for DenseMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for DenseMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        DenseMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

pub fn norm2(v: &[f64]) -> f64 {
    // scaled to avoid overflow on large entries
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * v.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}

pub fn norm1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Householder QR factorization `M P = Q R`.
///
/// `q` is the full m×m orthogonal factor, `r` is m×d upper trapezoidal and
/// `perm[k]` is the original column sitting at position k.
#[derive(Clone, Debug)]
pub struct Qr {
    pub q: DenseMatrix,
    pub r: DenseMatrix,
    pub perm: Vec<usize>,
}

impl Qr {
    /// Number of diagonal factors of R exceeding `tol` times the largest one.
    pub fn rank(&self, tol: f64) -> usize {
        let k = self.r.rows().min(self.r.cols());
        let diag: Vec<f64> = (0..k).map(|i| self.r[(i, i)].abs()).collect();
        let largest = diag.iter().cloned().fold(0.0, f64::max);
        if largest == 0.0 {
            return 0;
        }
        diag.iter().filter(|&&d| d > tol * largest).count()
    }
}

/// Householder QR, optionally with greedy column pivoting (largest remaining
/// column norm first).
pub fn householder_qr(m: &DenseMatrix, pivot: bool) -> Qr {
    let (rows, cols) = (m.rows(), m.cols());
    let mut r = m.clone();
    let mut q = DenseMatrix::identity(rows);
    let mut perm: Vec<usize> = (0..cols).collect();

    for j in 0..rows.min(cols) {
        if pivot {
            let col_norm = |r: &DenseMatrix, c: usize| {
                norm2(&(j..rows).map(|i| r[(i, c)]).collect::<Vec<_>>())
            };
            let mut best = j;
            let mut best_norm = col_norm(&r, j);
            for c in j + 1..cols {
                let nc = col_norm(&r, c);
                if nc > best_norm {
                    best = c;
                    best_norm = nc;
                }
            }
            if best != j {
                for i in 0..rows {
                    let t = r[(i, j)];
                    r[(i, j)] = r[(i, best)];
                    r[(i, best)] = t;
                }
                perm.swap(j, best);
            }
        }

        let x: Vec<f64> = (j..rows).map(|i| r[(i, j)]).collect();
        let xnorm = norm2(&x);
        if xnorm == 0.0 {
            continue;
        }
        let alpha = if x[0] >= 0.0 { -xnorm } else { xnorm };
        let mut v = x;
        v[0] -= alpha;
        let vnorm = norm2(&v);
        if vnorm == 0.0 {
            continue;
        }
        for e in v.iter_mut() {
            *e /= vnorm;
        }

        // R <- (I - 2vvᵀ) R on the trailing block
        for c in j..cols {
            let s: f64 = (j..rows).map(|i| v[i - j] * r[(i, c)]).sum();
            for i in j..rows {
                r[(i, c)] -= 2.0 * v[i - j] * s;
            }
        }
        r[(j, j)] = alpha;
        for i in j + 1..rows {
            r[(i, j)] = 0.0;
        }
        // Q <- Q (I - 2vvᵀ)
        for i in 0..rows {
            let s: f64 = (j..rows).map(|k| q[(i, k)] * v[k - j]).sum();
            for k in j..rows {
                q[(i, k)] -= 2.0 * s * v[k - j];
            }
        }
    }
    Qr { q, r, perm }
}

/// Result of [`least_squares`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LsResult {
    pub minimizer: Vec<f64>,
    pub residual_norm: f64,
    pub rank_used: usize,
}

/// Minimum-norm minimizer of `‖M y − v‖₂`, the pseudo-inverse solution.
pub fn least_squares(m: &DenseMatrix, v: &[f64]) -> Result<LsResult> {
    least_squares_tol(m, v, RANK_TOL)
}

pub fn least_squares_tol(m: &DenseMatrix, v: &[f64], tol: f64) -> Result<LsResult> {
    if v.len() != m.rows() {
        return Err(Error::DimensionMismatch {
            expected: m.rows(),
            got: v.len(),
        });
    }
    let d = m.cols();
    let qr = householder_qr(m, true);
    let rank = qr.rank(tol);
    let mut minimizer = vec![0.0; d];

    if rank > 0 {
        // complete orthogonal decomposition: M P = Q1 R1 = Q1 T1ᵀ Z1ᵀ
        let mut r1t = DenseMatrix::zeros(d, rank);
        for i in 0..rank {
            for j in 0..d {
                r1t[(j, i)] = qr.r[(i, j)];
            }
        }
        let zt = householder_qr(&r1t, false);
        let c: Vec<f64> = (0..rank)
            .map(|i| (0..m.rows()).map(|k| qr.q[(k, i)] * v[k]).sum())
            .collect();
        // T1ᵀ w = c, T1ᵀ lower triangular
        let mut w = vec![0.0; rank];
        for i in 0..rank {
            let s: f64 = (0..i).map(|k| zt.r[(k, i)] * w[k]).sum();
            w[i] = (c[i] - s) / zt.r[(i, i)];
        }
        for (pos, &orig) in qr.perm.iter().enumerate() {
            minimizer[orig] = (0..rank).map(|k| zt.q[(pos, k)] * w[k]).sum();
        }
    }

    let residual_norm = norm2(&sub(&m.mul_vec(&minimizer), v));
    Ok(LsResult {
        minimizer,
        residual_norm,
        rank_used: rank,
    })
}

/// Result of [`l1_regression`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct L1Result {
    pub minimizer: Vec<f64>,
    pub residual_l1: f64,
    /// Rows whose residual is forced to zero at the reported vertex.
    pub zeroed_rows: Vec<usize>,
}

/// Solve a square system by Gaussian elimination with partial pivoting.
/// Returns `None` when the matrix is numerically singular.
fn solve_square(m: &DenseMatrix, v: &[f64], tol: f64) -> Option<Vec<f64>> {
    let n = m.rows();
    let mut a = m.clone();
    let mut b = v.to_vec();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    for k in 0..n {
        let (p, pv) = (k..n)
            .map(|i| (i, a[(i, k)].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if pv <= tol * scale {
            return None;
        }
        if p != k {
            for j in 0..n {
                let t = a[(k, j)];
                a[(k, j)] = a[(p, j)];
                a[(p, j)] = t;
            }
            b.swap(k, p);
        }
        for i in k + 1..n {
            let f = a[(i, k)] / a[(k, k)];
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                a[(i, j)] -= f * a[(k, j)];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[(i, j)] * x[j]).sum();
        x[i] = (b[i] - s) / a[(i, i)];
    }
    Some(x)
}

/// A maximal independent column subset of `m` (sorted) and the submatrix it
/// selects, or `None` for the zero matrix.
fn independent_columns(m: &DenseMatrix) -> Option<(Vec<usize>, DenseMatrix)> {
    let qr = householder_qr(m, true);
    let rank = qr.rank(RANK_TOL);
    if rank == 0 {
        return None;
    }
    let mut cols: Vec<usize> = qr.perm[..rank].to_vec();
    cols.sort_unstable();
    let basis = m.select_columns(&cols).expect("rank > 0");
    Some((cols, basis))
}

/// Every basic solution of `min ‖B y − v‖₁` for a full-column-rank `B`:
/// (row subset, solution, residual), row subsets in lexicographic order.
fn basic_solutions(basis: &DenseMatrix, v: &[f64]) -> Vec<(Vec<usize>, Vec<f64>, f64)> {
    (0..basis.rows())
        .combinations(basis.cols())
        .filter_map(|rows| {
            let block = basis.select_rows(&rows).expect("at least one column");
            let rhs: Vec<f64> = rows.iter().map(|&i| v[i]).collect();
            let y = solve_square(&block, &rhs, 1e-12)?;
            let res = norm1(&sub(&basis.mul_vec(&y), v));
            Some((rows, y, res))
        })
        .collect()
}

fn embed(cols: &[usize], y: &[f64], d: usize) -> Vec<f64> {
    let mut x = vec![0.0; d];
    for (&c, &val) in cols.iter().zip(y) {
        x[c] = val;
    }
    x
}

fn check_rows(m: &DenseMatrix, v: &[f64]) -> Result<()> {
    if v.len() != m.rows() {
        return Err(Error::DimensionMismatch {
            expected: m.rows(),
            got: v.len(),
        });
    }
    Ok(())
}

/// Global minimizer of `‖M y − v‖₁` by enumerating basic solutions.
///
/// With r = rank(M), a maximal independent set of r columns is kept (the rest
/// are pinned to zero) and every r-subset of rows with an invertible square
/// block is solved exactly. The best vertex wins; ties go to the
/// lexicographically smallest row subset.
pub fn l1_regression(m: &DenseMatrix, v: &[f64]) -> Result<L1Result> {
    check_rows(m, v)?;
    let d = m.cols();
    let Some((cols, basis)) = independent_columns(m) else {
        return Ok(L1Result {
            minimizer: vec![0.0; d],
            residual_l1: norm1(v),
            zeroed_rows: Vec::new(),
        });
    };
    let scale = norm1(v).max(1.0);
    let mut best: Option<(f64, Vec<usize>, Vec<f64>)> = None;
    for (rows, y, res) in basic_solutions(&basis, v) {
        let better = match &best {
            None => true,
            Some((b, _, _)) => res < *b - 1e-9 * scale,
        };
        if better {
            best = Some((res, rows, y));
        }
    }
    let (_, rows, y) = best.expect("a full-rank matrix has an invertible row block");
    let minimizer = embed(&cols, &y, d);
    let residual_l1 = norm1(&sub(&m.mul_vec(&minimizer), v));
    Ok(L1Result {
        minimizer,
        residual_l1,
        zeroed_rows: rows,
    })
}

/// All distinct optimal vertices of `min ‖M y − v‖₁` (same column reduction
/// as [`l1_regression`]). Their convex hull is the optimal face when M has
/// full column rank.
pub fn l1_optimal_vertices(m: &DenseMatrix, v: &[f64]) -> Result<Vec<Vec<f64>>> {
    check_rows(m, v)?;
    let d = m.cols();
    let Some((cols, basis)) = independent_columns(m) else {
        return Ok(vec![vec![0.0; d]]);
    };
    let scale = norm1(v).max(1.0);
    let sols = basic_solutions(&basis, v);
    let best = sols.iter().map(|s| s.2).fold(f64::INFINITY, f64::min);
    let mut out: Vec<Vec<f64>> = Vec::new();
    for (_, y, res) in sols {
        if res > best + 1e-9 * scale {
            continue;
        }
        let x = embed(&cols, &y, d);
        let dup = out.iter().any(|o| {
            o.iter().zip(&x).all(|(a, b)| (a - b).abs() <= 1e-9 * (1.0 + a.abs()))
        });
        if !dup {
            out.push(x);
        }
    }
    Ok(out)
}

/// A unit vector in the null space of `m`, or `None` if `m` has full column
/// rank.
pub fn null_vector(m: &DenseMatrix) -> Option<Vec<f64>> {
    let d = m.cols();
    let qr = householder_qr(m, true);
    let k = qr.rank(RANK_TOL);
    if k >= d {
        return None;
    }
    // R₁₁ y = −R₁ₖ with the k-th permuted coordinate set to 1
    let mut y = vec![0.0; d];
    y[k] = 1.0;
    for i in (0..k).rev() {
        let s: f64 = (i + 1..=k).map(|j| qr.r[(i, j)] * y[j]).sum();
        y[i] = -s / qr.r[(i, i)];
    }
    let mut x = vec![0.0; d];
    for (pos, &c) in qr.perm.iter().enumerate() {
        x[c] = y[pos];
    }
    let n = norm2(&x);
    Some(x.into_iter().map(|e| e / n).collect())
}

/// Numerical rank from the column-pivoted QR diagonal.
pub fn numerical_rank(m: &DenseMatrix, tol: f64) -> Result<usize> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidInput(format!("rank tolerance must be positive, got {tol}")));
    }
    Ok(householder_qr(m, true).rank(tol))
}

/// Outcome of the power method.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectralNorm {
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Largest singular value by power iteration on MᵀM from the normalized
/// all-ones start. Each run stops when the estimate moves by less than `tol`
/// relative.
///
/// A start orthogonal to the top singular vector converges to a smaller
/// value, and the all-ones vector is often exactly such a start for
/// structured integer matrices. Further runs from every standard basis
/// vector cover that case, since at least one of them has a component along
/// the top singular vector. The largest estimate is returned.
pub fn spectral_norm(m: &DenseMatrix, tol: f64) -> Result<SpectralNorm> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let n = m.cols();
    let mut best = power_run(m, vec![1.0 / (n as f64).sqrt(); n], tol);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let run = power_run(m, e, tol);
        best = SpectralNorm {
            value: best.value.max(run.value),
            converged: best.converged && run.converged,
            iterations: best.iterations + run.iterations,
        };
    }
    Ok(best)
}

fn power_run(m: &DenseMatrix, mut u: Vec<f64>, tol: f64) -> SpectralNorm {
    let mut estimate = 0.0;
    for it in 1..=POWER_ITERATION_CAP {
        let w = m.tr_mul_vec(&m.mul_vec(&u));
        let wn = norm2(&w);
        if wn == 0.0 {
            // the start lies in the null space of M
            return SpectralNorm {
                value: 0.0,
                converged: true,
                iterations: it,
            };
        }
        let next = wn.sqrt();
        u = w.iter().map(|x| x / wn).collect();
        if (next - estimate).abs() <= tol * next {
            return SpectralNorm {
                value: next,
                converged: true,
                iterations: it,
            };
        }
        estimate = next;
    }
    SpectralNorm {
        value: estimate,
        converged: false,
        iterations: POWER_ITERATION_CAP,
    }
}
