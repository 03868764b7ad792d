//! Small dense linear algebra: a row-major matrix, LU with partial pivoting,
//! and forward substitution for the splitting iterations.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Pivots smaller than this fraction of the row maximum are treated as zero.
pub const PIVOT_RTOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
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

    /// Row-major construction. Panics if `data.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data has wrong length");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: x.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// `P A = L U` with unit-lower `L` and upper `U` packed into one matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LuFactorization {
    packed: Matrix,
    /// `perm[k]` is the row of `A` that ends up in row `k` of `P A`.
    perm: Vec<usize>,
}

impl LuFactorization {
    pub fn dim(&self) -> usize {
        self.packed.rows
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn lower(&self) -> Matrix {
        let n = self.dim();
        let mut l = Matrix::identity(n);
        for i in 0..n {
            for j in 0..i {
                l[(i, j)] = self.packed[(i, j)];
            }
        }
        l
    }

    pub fn upper(&self) -> Matrix {
        let n = self.dim();
        let mut u = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                u[(i, j)] = self.packed[(i, j)];
            }
        }
        u
    }

    /// Applies the row permutation to `a`, giving `P A`.
    pub fn permute_rows(&self, a: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(a.rows, a.cols);
        for (k, &src) in self.perm.iter().enumerate() {
            out.data[k * a.cols..(k + 1) * a.cols].copy_from_slice(a.row(src));
        }
        out
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        lu_solve(self, rhs)
    }
}

pub fn lu_factor(a: &Matrix) -> Result<LuFactorization> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.rows,
            found: a.cols,
        });
    }
    let n = a.rows;
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut row_max: Vec<f64> = (0..n)
        .map(|i| a.row(i).iter().fold(0.0, |m: f64, v| m.max(v.abs())))
        .collect();

    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| lu[(i, k)].abs().total_cmp(&lu[(j, k)].abs()))
            .unwrap_or(k);
        if p != k {
            for j in 0..n {
                lu.data.swap(k * n + j, p * n + j);
            }
            perm.swap(k, p);
            row_max.swap(k, p);
        }
        let pivot = lu[(k, k)];
        if pivot == 0.0 || pivot.abs() < PIVOT_RTOL * row_max[k] {
            return Err(Error::SingularMatrix { column: k, pivot });
        }
        for i in k + 1..n {
            let factor = lu[(i, k)] / pivot;
            lu[(i, k)] = factor;
            if factor != 0.0 {
                for j in k + 1..n {
                    lu[(i, j)] -= factor * lu[(k, j)];
                }
            }
        }
    }
    Ok(LuFactorization { packed: lu, perm })
}

pub fn lu_solve(f: &LuFactorization, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = f.dim();
    if rhs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rhs.len(),
        });
    }
    let a = &f.packed;
    let mut y: Vec<f64> = f.perm.iter().map(|&p| rhs[p]).collect();
    for i in 0..n {
        let s: f64 = (0..i).map(|j| a[(i, j)] * y[j]).sum();
        y[i] -= s;
    }
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[(i, j)] * y[j]).sum();
        y[i] = (y[i] - s) / a[(i, i)];
    }
    Ok(y)
}

/// Forward substitution for lower-triangular `a`. Entries above the
/// diagonal are ignored.
pub fn lower_tri_solve(a: &Matrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows;
    if !a.is_square() || rhs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rhs.len(),
        });
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let d = a[(i, i)];
        if d == 0.0 {
            return Err(Error::ZeroDiagonal(i));
        }
        let s: f64 = a.row(i)[..i].iter().zip(&y).map(|(l, v)| l * v).sum();
        y[i] = (rhs[i] - s) / d;
    }
    Ok(y)
}
