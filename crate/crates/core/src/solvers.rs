//! Monotone iterative solvers for `M x^(m-1) = b` with `M` a strong
//! M-tensor.
//!
//! Every method updates the power vector `x^[m-1]` and recovers `x` with an
//! entrywise root:
//!
//! * S-MEQM: `M d = -F(x_k)`, `x_{k+1}^[m-1] = x_k^[m-1] + alpha d`, where `M`
//!   is the majorization matrix, factored once per run.
//! * Jacobi / Gauss-Seidel / SOR: the same update with `M` replaced by `D`,
//!   `D - L` or `(D - omega L) / omega` from the splitting `M = D - L - U`.
//! * Approximate Newton: S-MEQM plus a correction `eps_k` built from the
//!   change in `r(x) = (T x^(m-1) - (m-1) M x^[m-1]) / (m-1)`, falling back to
//!   `eps_k = 0` whenever the corrected iterate would leave the feasible set.
//!
//! From a feasible start (`x_0 >= 0`, `F(x_0) <= 0`) and `alpha <= 1` the
//! iterates increase monotonically and stay feasible; the solver audits both
//! properties on every step.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{lower_tri_solve, LuFactorization, Matrix};
use crate::tensor::{
    contract_full, elementwise_power, elementwise_root, majorization, residual, scale_system,
    DenseTensor, MajorizationMatrix,
};

/// Tolerance for the feasibility and acceptance tests on the iterated system.
pub const ACCEPT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Smeqm,
    Jacobi,
    #[serde(rename = "gs")]
    GaussSeidel,
    Sor,
    Anewton,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Smeqm,
        Method::Jacobi,
        Method::GaussSeidel,
        Method::Sor,
        Method::Anewton,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Smeqm => "smeqm",
            Method::Jacobi => "jacobi",
            Method::GaussSeidel => "gs",
            Method::Sor => "sor",
            Method::Anewton => "anewton",
        }
    }

    fn splitting(self) -> Option<Splitting> {
        match self {
            Method::Jacobi => Some(Splitting::Jacobi),
            Method::GaussSeidel => Some(Splitting::GaussSeidel),
            Method::Sor => Some(Splitting::Sor),
            Method::Smeqm | Method::Anewton => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "smeqm" | "s-meqm" => Method::Smeqm,
            "jacobi" => Method::Jacobi,
            "gs" | "gauss-seidel" | "gaussseidel" => Method::GaussSeidel,
            "sor" => Method::Sor,
            "anewton" | "a-newton" => Method::Anewton,
            other => return Err(Error::Parse(format!("unknown method '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Splitting {
    Jacobi,
    GaussSeidel,
    Sor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub method: Method,
    /// Constant step length; the theory covers `(0, 1]`.
    pub alpha: f64,
    /// SOR relaxation; ignored by the other methods.
    pub omega: f64,
    /// Stopping tolerance on the 2-norm of the (scaled) residual.
    pub eta: f64,
    pub max_iter: usize,
    pub scale: bool,
    pub audit_monotone: bool,
    pub audit_tol: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            method: Method::Smeqm,
            alpha: 1.0,
            omega: 1.0,
            eta: 1e-8,
            max_iter: 3000,
            scale: true,
            audit_monotone: true,
            audit_tol: 1e-12,
        }
    }
}

impl SolveConfig {
    pub fn new(method: Method, alpha: f64) -> Self {
        Self {
            method,
            alpha,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in (0, 2], got {}",
                self.alpha
            )));
        }
        if self.method == Method::Sor && !(self.omega > 0.0 && self.omega < 2.0) {
            return Err(Error::InvalidConfig(format!(
                "omega must lie in (0, 2), got {}",
                self.omega
            )));
        }
        if self.eta.is_nan() || self.eta <= 0.0 {
            return Err(Error::InvalidConfig("eta must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Converged,
    MaxIterReached,
    InfeasibleStart,
    NegativePowerRHS,
    SingularMatrix,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "Converged",
            Status::MaxIterReached => "MaxIterReached",
            Status::InfeasibleStart => "InfeasibleStart",
            Status::NegativePowerRHS => "NegativePowerRHS",
            Status::SingularMatrix => "SingularMatrix",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Status {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "Converged" => Status::Converged,
            "MaxIterReached" => Status::MaxIterReached,
            "InfeasibleStart" => Status::InfeasibleStart,
            "NegativePowerRHS" => Status::NegativePowerRHS,
            "SingularMatrix" => Status::SingularMatrix,
            other => return Err(Error::Parse(format!("unknown status '{other}'"))),
        })
    }
}

/// One step `x_{k-1} -> x_k`, `k >= 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub k: usize,
    /// `||F^(x_k)||_2` on the iterated (scaled) system.
    pub res2: f64,
    pub resinf: f64,
    /// `max_i F^_i(x_k)`; nonpositive while the iterate stays feasible.
    pub res_max: f64,
    /// `||F(x_k)||_2` on the original system.
    pub res2_unscaled: f64,
    /// `max_i (x_{k-1} - x_k)_i`, clipped at zero.
    pub mono_violation: f64,
    pub eps_fallback: bool,
    pub ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn max_mono_violation(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.mono_violation)
            .fold(0.0, f64::max)
    }

    pub fn fallback_count(&self) -> usize {
        self.records.iter().filter(|r| r.eps_fallback).count()
    }

    /// Writes `k,res2,resinf,mono_violation,eps_fallback,ms`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "k",
            "res2",
            "resinf",
            "mono_violation",
            "eps_fallback",
            "ms",
        ])?;
        for r in &self.records {
            w.write_record([
                r.k.to_string(),
                format!("{:e}", r.res2),
                format!("{:e}", r.resinf),
                format!("{:e}", r.mono_violation),
                u8::from(r.eps_fallback).to_string(),
                format!("{:.6}", r.ms),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub status: Status,
    pub x: Vec<f64>,
    pub iterations: usize,
    pub trace: IterationTrace,
    /// `||F^(x_0)||_2`.
    pub initial_res2: f64,
    /// `max_i F^_i(x_0)`.
    pub initial_res_max: f64,
    /// `||F^(x)||_2` at the returned point.
    pub final_res2: f64,
    pub final_res2_unscaled: f64,
    /// 1 when scaling is off.
    pub scale_factor: f64,
    pub start_feasible: bool,
    /// Set when `alpha > 1`, a range the convergence theory does not cover.
    pub alpha_experimental: bool,
    /// Audited steps whose monotonicity or feasibility check exceeded
    /// `audit_tol`. Always 0 when auditing is off.
    pub audit_violations: usize,
}

/// Correction state carried by the approximate Newton method.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonState {
    /// `r(x_{k-1})`, or `r(x_k)` once updated.
    pub prev_r: Vec<f64>,
    pub eps: Vec<f64>,
    pub fallback_used: bool,
}

impl EpsilonState {
    /// `eps_0 = 0`.
    pub fn initial(r0: Vec<f64>) -> Self {
        let n = r0.len();
        Self {
            prev_r: r0,
            eps: vec![0.0; n],
            fallback_used: false,
        }
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, a| m.max(a.abs()))
}

fn max_entry(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::MIN, f64::max)
}

/// `x^[m-1] + delta`, rooted.
fn power_update(x: &[f64], delta: &[f64], order: usize) -> Result<Vec<f64>> {
    let mut v = elementwise_power(x, (order - 1) as f64)?;
    for (vi, di) in v.iter_mut().zip(delta) {
        *vi += di;
    }
    elementwise_root(&v, order)
}

/// One S-MEQM step: `M d = -F(x_k)`, `x_{k+1}^[m-1] = x_k^[m-1] + alpha d`.
pub fn step_smeqm(
    lu: &LuFactorization,
    t: &DenseTensor,
    b: &[f64],
    x: &[f64],
    alpha: f64,
) -> Result<Vec<f64>> {
    let f = residual(t, b, x)?;
    smeqm_from_residual(lu, t.order(), x, &f, alpha)
}

fn smeqm_from_residual(
    lu: &LuFactorization,
    order: usize,
    x: &[f64],
    f: &[f64],
    alpha: f64,
) -> Result<Vec<f64>> {
    let neg: Vec<f64> = f.iter().map(|v| -alpha * v).collect();
    let d = lu.solve(&neg)?;
    power_update(x, &d, order)
}

/// The lower-triangular splitting matrix `P` and step multiplier `c` so
/// that the update is `x^[m-1] - alpha c P^-1 F(x)`:
/// Jacobi `P = D`; Gauss-Seidel `P = D - L`; SOR `P = D - omega L`, `c = omega`.
pub fn splitting_matrix(m: &Matrix, variant: Splitting, omega: f64) -> (Matrix, f64) {
    let n = m.rows();
    let (lower_weight, c) = match variant {
        Splitting::Jacobi => (0.0, 1.0),
        Splitting::GaussSeidel => (1.0, 1.0),
        Splitting::Sor => (omega, omega),
    };
    let mut p = Matrix::zeros(n, n);
    for i in 0..n {
        p[(i, i)] = m[(i, i)];
        for j in 0..i {
            // -L is the strict lower part of M
            p[(i, j)] = lower_weight * m[(i, j)];
        }
    }
    (p, c)
}

/// One Jacobi, Gauss-Seidel or SOR step on `x^[m-1]`.
pub fn step_splitting(
    majorization: &Matrix,
    t: &DenseTensor,
    b: &[f64],
    x: &[f64],
    alpha: f64,
    variant: Splitting,
    omega: f64,
) -> Result<Vec<f64>> {
    let (p, c) = splitting_matrix(majorization, variant, omega);
    let f = residual(t, b, x)?;
    splitting_from_residual(&p, c, t.order(), x, &f, alpha)
}

fn splitting_from_residual(
    p: &Matrix,
    c: f64,
    order: usize,
    x: &[f64],
    f: &[f64],
    alpha: f64,
) -> Result<Vec<f64>> {
    let mut d = lower_tri_solve(p, f)?;
    for v in d.iter_mut() {
        *v *= -alpha * c;
    }
    power_update(x, &d, order)
}

/// `r(x) = (T x^(m-1) - (m-1) M x^[m-1]) / (m-1)`.
pub fn r_correction(t: &DenseTensor, m: &MajorizationMatrix, x: &[f64]) -> Result<Vec<f64>> {
    let k = (t.order() - 1) as f64;
    let tx = contract_full(t, x)?;
    let mx = m.apply_power(x, t.order())?;
    Ok(tx.iter().zip(&mx).map(|(a, b)| (a - k * b) / k).collect())
}

/// `eps_k = min(-alpha F(x_k), r(x_k) - r(x_{k-1}))` entrywise; the stored
/// `r` becomes `r(x_k)`.
pub fn epsilon_update(state: EpsilonState, f_k: &[f64], r_k: &[f64], alpha: f64) -> EpsilonState {
    let eps = f_k
        .iter()
        .zip(r_k.iter().zip(&state.prev_r))
        .map(|(f, (r, rp))| (-alpha * f).min(r - rp))
        .collect();
    EpsilonState {
        prev_r: r_k.to_vec(),
        eps,
        fallback_used: false,
    }
}

/// Result of one approximate Newton step.
#[derive(Debug, Clone, PartialEq)]
pub struct AnewtonStep {
    pub x: Vec<f64>,
    /// `F(x_{k+1})`.
    pub residual: Vec<f64>,
    pub state: EpsilonState,
}

/// One approximate Newton step: solve
/// `M x_{k+1}^[m-1] = M x_k^[m-1] - alpha F(x_k) - eps_k`; if the candidate
/// violates `F <= accept_tol`, redo the step with `eps_k = 0` (plain S-MEQM).
pub fn step_anewton(
    lu: &LuFactorization,
    t: &DenseTensor,
    b: &[f64],
    x: &[f64],
    alpha: f64,
    state: EpsilonState,
) -> Result<AnewtonStep> {
    let f = residual(t, b, x)?;
    anewton_from_residual(lu, t, b, x, &f, alpha, state, ACCEPT_TOL)
}

#[allow(clippy::too_many_arguments)]
fn anewton_from_residual(
    lu: &LuFactorization,
    t: &DenseTensor,
    b: &[f64],
    x: &[f64],
    f: &[f64],
    alpha: f64,
    mut state: EpsilonState,
    accept_tol: f64,
) -> Result<AnewtonStep> {
    let rhs: Vec<f64> = f
        .iter()
        .zip(&state.eps)
        .map(|(fi, ei)| -alpha * fi - ei)
        .collect();
    let d = lu.solve(&rhs)?;
    let candidate = power_update(x, &d, t.order())?;
    let fc = residual(t, b, &candidate)?;
    if fc.iter().all(|&v| v <= accept_tol) {
        state.fallback_used = false;
        return Ok(AnewtonStep {
            x: candidate,
            residual: fc,
            state,
        });
    }
    state.eps.iter_mut().for_each(|e| *e = 0.0);
    state.fallback_used = true;
    let x_next = smeqm_from_residual(lu, t.order(), x, f, alpha)?;
    let f_next = residual(t, b, &x_next)?;
    Ok(AnewtonStep {
        x: x_next,
        residual: f_next,
        state,
    })
}

enum Stepper {
    Lu(LuFactorization),
    Split(Matrix, f64),
}

/// Runs the configured method from `x0` until `||F^(x_k)||_2 <= eta` or
/// `max_iter` steps.
///
/// A singular majorization matrix or a negative power vector ends the run
/// with the corresponding status rather than an error. An infeasible start
/// disables the monotonicity audit and is reported as `InfeasibleStart`
/// when the run then fails to converge. Errors are reserved for malformed
/// input (dimensions, negative `x0`, bad configuration).
pub fn solve(t: &DenseTensor, b: &[f64], x0: &[f64], cfg: &SolveConfig) -> Result<SolveOutcome> {
    cfg.validate()?;
    let n = t.dim();
    for v in [b, x0] {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: v.len(),
            });
        }
    }
    if let Some(p) = x0.iter().position(|&v| v.is_nan() || v < 0.0) {
        return Err(Error::InvalidConfig(format!(
            "initial point must be nonnegative (entry {p} is {})",
            x0[p]
        )));
    }

    let (tensor, rhs, factor) = if cfg.scale {
        let s = scale_system(t, b)?;
        (s.tensor, s.rhs, s.factor)
    } else {
        (t.clone(), b.to_vec(), 1.0)
    };
    let order = tensor.order();
    let maj = majorization(&tensor);

    let mut x = x0.to_vec();
    let mut f = residual(&tensor, &rhs, &x)?;
    let initial_res2 = norm2(&f);
    let initial_res_max = max_entry(&f);
    let start_feasible = initial_res_max <= ACCEPT_TOL;
    let audit = cfg.audit_monotone && start_feasible;

    let mut outcome = SolveOutcome {
        status: Status::MaxIterReached,
        x: Vec::new(),
        iterations: 0,
        trace: IterationTrace::default(),
        initial_res2,
        initial_res_max,
        final_res2: initial_res2,
        final_res2_unscaled: initial_res2 * factor,
        scale_factor: factor,
        start_feasible,
        alpha_experimental: cfg.alpha > 1.0,
        audit_violations: 0,
    };

    let stepper = match cfg.method.splitting() {
        None => maj.lu().cloned().map(Stepper::Lu),
        Some(variant) => {
            let (p, c) = splitting_matrix(maj.matrix(), variant, cfg.omega);
            match (0..n).find(|&i| p[(i, i)] == 0.0) {
                Some(i) => Err(Error::ZeroDiagonal(i)),
                None => Ok(Stepper::Split(p, c)),
            }
        }
    };
    let stepper = match stepper {
        Ok(s) => s,
        Err(_) => {
            outcome.status = Status::SingularMatrix;
            outcome.x = x;
            return Ok(outcome);
        }
    };

    let mut eps_state = match cfg.method {
        Method::Anewton => Some(EpsilonState::initial(r_correction(&tensor, &maj, &x)?)),
        _ => None,
    };

    let mut converged = norm2(&f) <= cfg.eta;
    while !converged && outcome.iterations < cfg.max_iter {
        let started = Instant::now();
        let step = match &stepper {
            Stepper::Split(p, c) => splitting_from_residual(p, *c, order, &x, &f, cfg.alpha)
                .and_then(|xn| residual(&tensor, &rhs, &xn).map(|fx| (xn, fx, false))),
            Stepper::Lu(lu) => match eps_state.take() {
                None => smeqm_from_residual(lu, order, &x, &f, cfg.alpha)
                    .and_then(|xn| residual(&tensor, &rhs, &xn).map(|fx| (xn, fx, false))),
                Some(state) => {
                    anewton_from_residual(lu, &tensor, &rhs, &x, &f, cfg.alpha, state, ACCEPT_TOL)
                        .and_then(|s| {
                            let fallback = s.state.fallback_used;
                            let r_next = r_correction(&tensor, &maj, &s.x)?;
                            eps_state =
                                Some(epsilon_update(s.state, &s.residual, &r_next, cfg.alpha));
                            Ok((s.x, s.residual, fallback))
                        })
                }
            },
        };
        let (x_next, f_next, fallback) = match step {
            Ok(v) => v,
            Err(Error::NegativePowerRHS { .. }) => {
                outcome.status = Status::NegativePowerRHS;
                break;
            }
            Err(e) => return Err(e),
        };

        let mono_violation = x
            .iter()
            .zip(&x_next)
            .map(|(a, b)| a - b)
            .fold(0.0, f64::max);
        let res2 = norm2(&f_next);
        let res_max = max_entry(&f_next);
        if audit && (mono_violation > cfg.audit_tol || res_max > cfg.audit_tol) {
            outcome.audit_violations += 1;
        }
        outcome.iterations += 1;
        outcome.trace.records.push(IterationRecord {
            k: outcome.iterations,
            res2,
            resinf: norm_inf(&f_next),
            res_max,
            res2_unscaled: res2 * factor,
            mono_violation,
            eps_fallback: fallback,
            ms: started.elapsed().as_secs_f64() * 1e3,
        });
        x = x_next;
        f = f_next;
        converged = res2 <= cfg.eta;
    }

    if converged {
        outcome.status = Status::Converged;
    } else if outcome.status == Status::MaxIterReached && !start_feasible {
        outcome.status = Status::InfeasibleStart;
    }
    outcome.final_res2 = norm2(&f);
    outcome.final_res2_unscaled = norm2(&residual(t, b, &x)?);
    outcome.x = x;
    Ok(outcome)
}
