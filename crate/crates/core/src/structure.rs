//! Z/M-tensor certification, membership in the feasible set
//! `S = {x >= 0 : M x^(m-1) <= b}`, the sufficient existence test and the
//! closed-form solve for tensors whose only entries sit at `(i, j, ..., j)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tensor::{
    contract_full, elementwise_root, majorization, residual, split_offmajor, DenseTensor,
};

/// Default feasibility tolerance on unscaled systems.
pub const FEASIBILITY_TOL: f64 = 1e-10;

/// Components of `M^-1 b` within this distance of zero count as zero.
pub const SIGN_TOL: f64 = 1e-12;

/// Relative gap `s - bound > CERT_RTOL * s` required by the row-sum test, so
/// that rounding in the row sums cannot decide the verdict.
pub const CERT_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    StrongByRowSum,
    NotZTensor,
    Unknown,
}

/// Decomposition `T = s I - B` with `s` the largest diagonal entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MTensorCertificate {
    pub s: f64,
    /// `max_i (B e^(m-1))_i`, an upper bound on the spectral radius of `B`.
    pub row_sum_bound: f64,
    pub power_estimate: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub is_nonneg: bool,
    /// `max_i F_i(x)`.
    pub residual_max: f64,
    pub in_s: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Existence {
    PositiveExists,
    NonnegativeExists,
    Inconclusive,
}

fn is_diagonal_index(idx: &[usize]) -> bool {
    idx.iter().all(|&k| k == idx[0])
}

/// True iff every off-diagonal entry is `<= 0`.
pub fn is_z_tensor(t: &DenseTensor) -> bool {
    t.indexed()
        .all(|(idx, v)| v <= 0.0 || is_diagonal_index(&idx))
}

/// `B = s I - T` for `s` the largest diagonal entry of `T`.
fn shifted_complement(t: &DenseTensor) -> (DenseTensor, f64) {
    let n = t.dim();
    let s = (0..n)
        .map(|i| t.as_slice()[t.diagonal_offset(i)])
        .fold(f64::MIN, f64::max);
    let mut data: Vec<f64> = t.as_slice().iter().map(|v| -v).collect();
    for i in 0..n {
        data[t.diagonal_offset(i)] += s;
    }
    let b = DenseTensor::from_vec(t.order(), n, data).expect("shape preserved");
    (b, s)
}

/// Certifies `T` as a strong M-tensor through the sufficient row-sum test
/// `s > max_i (B e^(m-1))_i`, up to a relative gap of [`CERT_RTOL`].
/// Non-Z tensors get the `NotZTensor` verdict.
pub fn mtensor_certificate(t: &DenseTensor, use_power_method: bool) -> Result<MTensorCertificate> {
    let (b, s) = shifted_complement(t);
    let ones = vec![1.0; t.dim()];
    let row_sum_bound = contract_full(&b, &ones)?
        .into_iter()
        .fold(f64::MIN, f64::max);
    if !is_z_tensor(t) {
        return Ok(MTensorCertificate {
            s,
            row_sum_bound,
            power_estimate: None,
            verdict: Verdict::NotZTensor,
        });
    }
    let power_estimate = if use_power_method {
        Some(spectral_radius_estimate(&b, 1000, 1e-12)?)
    } else {
        None
    };
    let verdict = if s - row_sum_bound > CERT_RTOL * s.abs() {
        Verdict::StrongByRowSum
    } else {
        Verdict::Unknown
    };
    Ok(MTensorCertificate {
        s,
        row_sum_bound,
        power_estimate,
        verdict,
    })
}

/// Power-type estimate of the spectral radius of a nonnegative tensor,
/// capped at the row-sum bound.
///
/// Iterates `u <- (B u^(m-1))^[1/(m-1)]`, normalized in the max norm from
/// `u = e`, and reports `max_i (B u^(m-1))_i / u_i^(m-1)` over `u_i > tol`.
/// On reducible tensors the iteration need not approach the true radius.
pub fn spectral_radius_estimate(b: &DenseTensor, max_iter: usize, tol: f64) -> Result<f64> {
    if let Some(p) = b.as_slice().iter().position(|&v| v < 0.0) {
        return Err(Error::InvalidTensor(format!(
            "spectral radius estimate needs a nonnegative tensor (entry {p} is negative)"
        )));
    }
    let n = b.dim();
    let k = (b.order() - 1) as i32;
    let row_sums = contract_full(b, &vec![1.0; n])?;
    let bound = row_sums.iter().copied().fold(0.0, f64::max);
    if bound == 0.0 {
        return Ok(0.0);
    }

    let ratio = |u: &[f64], bu: &[f64]| {
        u.iter()
            .zip(bu)
            .filter(|(&ui, _)| ui > tol)
            .map(|(ui, bi)| bi / ui.powi(k))
            .fold(0.0, f64::max)
    };

    let mut u = vec![1.0; n];
    let mut bu = row_sums;
    for _ in 0..max_iter {
        let root = elementwise_root(&bu, b.order())?;
        let scale = root.iter().copied().fold(0.0, f64::max);
        if scale == 0.0 {
            return Ok(0.0);
        }
        let next: Vec<f64> = root.iter().map(|v| v / scale).collect();
        let delta = next
            .iter()
            .zip(&u)
            .fold(0.0f64, |m, (a, c)| m.max((a - c).abs()));
        u = next;
        bu = contract_full(b, &u)?;
        if delta <= tol {
            break;
        }
    }
    Ok(ratio(&u, &bu).min(bound))
}

/// Membership test for `S` with tolerance `tol` on both inequalities.
pub fn is_feasible(t: &DenseTensor, b: &[f64], x: &[f64], tol: f64) -> Result<FeasibilityReport> {
    let f = residual(t, b, x)?;
    let is_nonneg = x.iter().all(|&v| v >= -tol);
    let residual_max = f.iter().copied().fold(f64::MIN, f64::max);
    Ok(FeasibilityReport {
        is_nonneg,
        residual_max,
        in_s: is_nonneg && residual_max <= tol,
    })
}

/// Solves `T x^(m-1) = b` when `T` only has `(i, j, ..., j)` entries, via
/// `M y = b` and `x = y^[1/(m-1)]`.
pub fn solve_structured(t: &DenseTensor, b: &[f64]) -> Result<Vec<f64>> {
    if split_offmajor(t).as_slice().iter().any(|&v| v != 0.0) {
        return Err(Error::NotStructured);
    }
    let m = majorization(t);
    let y = m.lu()?.solve(b)?;
    if let Some((index, &value)) = y.iter().enumerate().find(|(_, &v)| v < -SIGN_TOL) {
        return Err(Error::NoNonnegativeSolution { index, value });
    }
    let clamped: Vec<f64> = y.iter().map(|v| v.max(0.0)).collect();
    elementwise_root(&clamped, t.order())
}

/// Sufficient test: `M^-1 b >= 0` guarantees a nonnegative solution and
/// `M^-1 b > 0` a positive one.
pub fn existence_sufficient(t: &DenseTensor, b: &[f64]) -> Result<Existence> {
    let y = majorization(t).lu()?.solve(b)?;
    Ok(if y.iter().all(|&v| v > SIGN_TOL) {
        Existence::PositiveExists
    } else if y.iter().all(|&v| v >= -SIGN_TOL) {
        Existence::NonnegativeExists
    } else {
        Existence::Inconclusive
    })
}
