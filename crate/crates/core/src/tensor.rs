//! Dense order-`m`, dimension-`n` tensors and the contraction primitives
//! used by every solver.
//!
//! Entries are stored in lexicographic multi-index order: the linear offset
//! of `(i1, ..., im)` (0-based) is `i1 * n^(m-1) + i2 * n^(m-2) + ... + im`.
//! With this layout the trailing `m - 1` indices of row `i` occupy the
//! contiguous block `[i * n^(m-1), (i + 1) * n^(m-1))`, so `T x^(m-1)` is a
//! dense matrix-vector product against the Kronecker power `x ⊗ ... ⊗ x`.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::linalg::{lu_factor, LuFactorization, Matrix};

/// Values in `[-NEG_CLAMP, 0)` are treated as rounding noise and clamped to
/// zero before a fractional power is taken.
pub const NEG_CLAMP: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    order: usize,
    dim: usize,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn zeros(order: usize, dim: usize) -> Result<Self> {
        let len = checked_len(order, dim)?;
        Ok(Self {
            order,
            dim,
            data: vec![0.0; len],
        })
    }

    /// Builds a tensor from entries in lexicographic multi-index order.
    pub fn from_vec(order: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        let len = checked_len(order, dim)?;
        if data.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                found: data.len(),
            });
        }
        if let Some(p) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(p));
        }
        Ok(Self { order, dim, data })
    }

    /// Builds a tensor by evaluating `f` at every 0-based multi-index.
    pub fn from_fn(order: usize, dim: usize, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let mut t = Self::zeros(order, dim)?;
        let mut idx = vec![0usize; order];
        for v in t.data.iter_mut() {
            *v = f(&idx);
            advance(&mut idx, dim);
        }
        if let Some(p) = t.data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(p));
        }
        Ok(t)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Linear offset of a 0-based multi-index.
    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.order);
        idx.iter().fold(0, |acc, &i| {
            debug_assert!(i < self.dim);
            acc * self.dim + i
        })
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    /// Sets one entry. Panics on a non-finite value.
    pub fn set(&mut self, idx: &[usize], value: f64) {
        assert!(value.is_finite(), "tensor entries must be finite");
        let o = self.offset(idx);
        self.data[o] = value;
    }

    /// Iterates `(multi_index, value)` over all entries in storage order.
    pub fn indexed(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        let mut idx = vec![0usize; self.order];
        self.data.iter().map(move |&v| {
            let cur = idx.clone();
            advance(&mut idx, self.dim);
            (cur, v)
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Offset of the diagonal entry `(i, i, ..., i)`.
    pub fn diagonal_offset(&self, i: usize) -> usize {
        i * diag_stride(self.order, self.dim)
    }

    /// Offset of the entry `(i, j, j, ..., j)`.
    pub fn major_offset(&self, i: usize, j: usize) -> usize {
        let block = self.dim.pow(self.order as u32 - 1);
        i * block + j * diag_stride(self.order - 1, self.dim)
    }

    fn check_vec(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn scaled(&self, factor: f64) -> Self {
        Self {
            order: self.order,
            dim: self.dim,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }
}

fn checked_len(order: usize, dim: usize) -> Result<usize> {
    if order < 2 {
        return Err(Error::InvalidTensor(format!(
            "order must be >= 2, got {order}"
        )));
    }
    if dim < 1 {
        return Err(Error::InvalidTensor("dimension must be >= 1".into()));
    }
    dim.checked_pow(order as u32)
        .ok_or_else(|| Error::InvalidTensor(format!("{dim}^{order} entries overflow")))
}

/// Stride between consecutive `(j, j, ..., j)` entries of an order-`k` block.
fn diag_stride(k: usize, dim: usize) -> usize {
    (0..k).fold(0, |acc, _| acc * dim + 1)
}

/// Odometer increment of a 0-based multi-index (last index fastest).
fn advance(idx: &mut [usize], dim: usize) {
    for slot in idx.iter_mut().rev() {
        *slot += 1;
        if *slot < dim {
            return;
        }
        *slot = 0;
    }
}

/// `x ⊗ x ⊗ ... ⊗ x` (`k` factors) in lexicographic order; `[1.0]` for `k = 0`.
fn kron_power(x: &[f64], k: usize) -> Vec<f64> {
    let mut out = vec![1.0];
    for _ in 0..k {
        let mut next = Vec::with_capacity(out.len() * x.len());
        for &a in &out {
            next.extend(x.iter().map(|&b| a * b));
        }
        out = next;
    }
    out
}

/// Dot product with eight independent partial sums.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    const LANES: usize = 8;
    let mut acc = [0.0; LANES];
    let (ac, ar) = (a.chunks_exact(LANES), a.chunks_exact(LANES).remainder());
    let (bc, br) = (b.chunks_exact(LANES), b.chunks_exact(LANES).remainder());
    for (x, y) in ac.zip(bc) {
        for k in 0..LANES {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ar.iter().zip(br).map(|(x, y)| x * y).sum();
    acc.iter().sum::<f64>() + tail
}

/// `T x^(m-1)`: the vector whose `i`-th entry is the sum over trailing indices
/// of `T(i, i2, ..., im) x_{i2} ... x_{im}`.
pub fn contract_full(t: &DenseTensor, x: &[f64]) -> Result<Vec<f64>> {
    t.check_vec(x)?;
    let p = kron_power(x, t.order - 1);
    Ok(t.data
        .chunks_exact(p.len())
        .map(|row| dot(row, &p))
        .collect())
}

/// `T x^(m-2)`: the `n x n` matrix with entries
/// `sum T(i, j, i3, ..., im) x_{i3} ... x_{im}`.
pub fn contract_matrix(t: &DenseTensor, x: &[f64]) -> Result<Matrix> {
    t.check_vec(x)?;
    let n = t.dim;
    let q = kron_power(x, t.order - 2);
    let values = t
        .data
        .chunks_exact(q.len())
        .map(|blk| dot(blk, &q))
        .collect();
    Ok(Matrix::from_vec(n, n, values))
}

/// `F(x) = T x^(m-1) - b`.
pub fn residual(t: &DenseTensor, b: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    t.check_vec(b)?;
    let mut f = contract_full(t, x)?;
    for (fi, bi) in f.iter_mut().zip(b) {
        *fi -= bi;
    }
    Ok(f)
}

/// Entrywise power `x^[p]`. Fractional powers require nonnegative entries.
pub fn elementwise_power(x: &[f64], p: f64) -> Result<Vec<f64>> {
    if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 {
        let k = p as i32;
        return Ok(x.iter().map(|v| v.powi(k)).collect());
    }
    x.iter()
        .enumerate()
        .map(|(index, &v)| {
            if v < 0.0 {
                Err(Error::NegativePowerRHS { index, value: v })
            } else {
                Ok(v.powf(p))
            }
        })
        .collect()
}

/// `v^[1/(m-1)]`, clamping entries in `[-1e-14, 0)` to zero.
pub fn elementwise_root(v: &[f64], order: usize) -> Result<Vec<f64>> {
    let k = order.saturating_sub(1).max(1);
    v.iter()
        .enumerate()
        .map(|(index, &value)| {
            if value < -NEG_CLAMP || value.is_nan() {
                return Err(Error::NegativePowerRHS { index, value });
            }
            let a = value.max(0.0);
            Ok(match k {
                1 => a,
                2 => a.sqrt(),
                3 => a.cbrt(),
                _ => a.powf(1.0 / k as f64),
            })
        })
        .collect()
}

/// The majorization matrix `M` with `M[i][j] = T(i, j, ..., j)`, with a
/// lazily computed LU factorization that is shared by every solve against it.
#[derive(Debug, Clone)]
pub struct MajorizationMatrix {
    matrix: Matrix,
    lu: OnceLock<Result<LuFactorization>>,
}

impl MajorizationMatrix {
    pub fn new(matrix: Matrix) -> Self {
        Self {
            matrix,
            lu: OnceLock::new(),
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// The cached factorization; computed on first use.
    pub fn lu(&self) -> Result<&LuFactorization> {
        self.lu
            .get_or_init(|| lu_factor(&self.matrix))
            .as_ref()
            .map_err(Clone::clone)
    }

    /// `M x^[m-1]`.
    pub fn apply_power(&self, x: &[f64], order: usize) -> Result<Vec<f64>> {
        let xp = elementwise_power(x, (order - 1) as f64)?;
        self.matrix.mul_vec(&xp)
    }
}

pub fn majorization(t: &DenseTensor) -> MajorizationMatrix {
    let n = t.dim;
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = t.data[t.major_offset(i, j)];
        }
    }
    MajorizationMatrix::new(m)
}

/// The off-major part `T - T~`, where `T~` keeps only the `(i, j, ..., j)`
/// entries. For M-tensors this part is nonpositive.
pub fn split_offmajor(t: &DenseTensor) -> DenseTensor {
    let mut out = t.clone();
    for i in 0..t.dim {
        for j in 0..t.dim {
            let o = t.major_offset(i, j);
            out.data[o] = 0.0;
        }
    }
    out
}

pub fn identity_tensor(order: usize, dim: usize) -> Result<DenseTensor> {
    let mut t = DenseTensor::zeros(order, dim)?;
    for i in 0..dim {
        let o = t.diagonal_offset(i);
        t.data[o] = 1.0;
    }
    Ok(t)
}

/// Averages every entry over all permutations of its trailing `m - 1`
/// indices. The contraction `T x^(m-1)` is unchanged.
pub fn semi_symmetrize(t: &DenseTensor) -> DenseTensor {
    let len = t.data.len();
    let mut sum = vec![0.0; len];
    let mut count = vec![0u32; len];
    // classes whose members already agree keep their value bit-for-bit
    let mut uniform = vec![true; len];
    let mut canon = Vec::with_capacity(len);
    let mut key = vec![0usize; t.order];
    for (idx, v) in t.indexed() {
        key.copy_from_slice(&idx);
        key[1..].sort_unstable();
        let c = t.offset(&key);
        if count[c] > 0 && t.data[c] != v {
            uniform[c] = false;
        }
        sum[c] += v;
        count[c] += 1;
        canon.push(c);
    }
    let data = canon
        .into_iter()
        .map(|c| {
            if uniform[c] {
                t.data[c]
            } else {
                sum[c] / f64::from(count[c])
            }
        })
        .collect();
    DenseTensor {
        order: t.order,
        dim: t.dim,
        data,
    }
}

/// A system divided through by the largest absolute entry of `T` and `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledSystem {
    pub tensor: DenseTensor,
    pub rhs: Vec<f64>,
    pub factor: f64,
}

pub fn scale_system(t: &DenseTensor, b: &[f64]) -> Result<ScaledSystem> {
    t.check_vec(b)?;
    let factor = b.iter().fold(t.max_abs(), |m, v| m.max(v.abs()));
    if factor == 0.0 {
        return Err(Error::AllZero);
    }
    Ok(ScaledSystem {
        tensor: t.scaled(1.0 / factor),
        rhs: b.iter().map(|v| v / factor).collect(),
        factor,
    })
}
