//! Seeded parameter sweeps over generated problems.
//!
//! For each `(n, rep)` one instance is generated from
//! `rep_seed(seed, problem, n, rep)` and solved by every `(alpha, method)`
//! pair, so rows that share `(n, rep)` compare methods on the same system.
//! Reps run in parallel; the output order is fixed by
//! `(n, alpha, method, rep)`.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::problems::{derive_seed, generate, ProblemId};
use crate::solvers::{solve, Method, SolveConfig, Status};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSpec {
    pub problem: ProblemId,
    pub ns: Vec<usize>,
    pub alphas: Vec<f64>,
    pub methods: Vec<Method>,
    pub reps: usize,
    pub seed: u64,
    pub omega: f64,
    pub eta: f64,
    pub max_iter: usize,
}

impl BenchSpec {
    pub fn new(problem: ProblemId, ns: Vec<usize>, alphas: Vec<f64>, methods: Vec<Method>) -> Self {
        let d = SolveConfig::default();
        Self {
            problem,
            ns,
            alphas,
            methods,
            reps: 100,
            seed: 0,
            omega: d.omega,
            eta: d.eta,
            max_iter: d.max_iter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub problem: ProblemId,
    pub n: usize,
    pub seed: u64,
    pub method: Method,
    pub alpha: f64,
    pub omega: f64,
    pub iters: usize,
    pub res2_scaled: f64,
    pub ms: f64,
    pub status: Status,
}

/// Seed of the instance used by repetition `rep`; independent of alpha and
/// method.
pub fn rep_seed(seed: u64, problem: ProblemId, n: usize, rep: usize) -> u64 {
    derive_seed(&[seed, problem_tag(problem), n as u64, rep as u64])
}

fn problem_tag(p: ProblemId) -> u64 {
    p.as_str()
        .bytes()
        .fold(0u64, |h, b| h.wrapping_mul(131).wrapping_add(u64::from(b)))
}

/// `(n index, alpha index, method index, rep)`.
type RowKey = (usize, usize, usize, usize);

pub fn run_bench(spec: &BenchSpec) -> Result<Vec<BenchRow>> {
    let jobs: Vec<(usize, usize)> = (0..spec.ns.len())
        .flat_map(|ni| (0..spec.reps).map(move |rep| (ni, rep)))
        .collect();

    let per_job: Vec<Vec<(RowKey, BenchRow)>> = jobs
        .par_iter()
        .map(|&(ni, rep)| {
            let n = spec.ns[ni];
            let seed = rep_seed(spec.seed, spec.problem, n, rep);
            let inst = generate(spec.problem, n, seed)?;
            let x0 = vec![0.0; inst.tensor.dim()];
            let mut rows = Vec::with_capacity(spec.alphas.len() * spec.methods.len());
            for (ai, &alpha) in spec.alphas.iter().enumerate() {
                for (mi, &method) in spec.methods.iter().enumerate() {
                    let cfg = SolveConfig {
                        method,
                        alpha,
                        omega: spec.omega,
                        eta: spec.eta,
                        max_iter: spec.max_iter,
                        ..SolveConfig::default()
                    };
                    let started = Instant::now();
                    let out = solve(&inst.tensor, &inst.rhs, &x0, &cfg)?;
                    let ms = started.elapsed().as_secs_f64() * 1e3;
                    rows.push((
                        (ni, ai, mi, rep),
                        BenchRow {
                            problem: spec.problem,
                            n: inst.tensor.dim(),
                            seed,
                            method,
                            alpha,
                            omega: spec.omega,
                            iters: out.iterations,
                            res2_scaled: out.final_res2,
                            ms,
                            status: out.status,
                        },
                    ));
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;

    let mut keyed: Vec<_> = per_job.into_iter().flatten().collect();
    keyed.sort_by_key(|(k, _)| *k);
    Ok(keyed.into_iter().map(|(_, r)| r).collect())
}

/// Mean iterations and time per `(n, method, alpha)` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchSummary {
    pub problem: ProblemId,
    pub n: usize,
    pub method: Method,
    pub alpha: f64,
    pub reps: usize,
    pub converged: usize,
    pub mean_iters: f64,
    pub mean_ms: f64,
}

/// Groups rows by `(n, method, alpha)`, preserving first-appearance order.
pub fn summarize(rows: &[BenchRow]) -> Vec<BenchSummary> {
    let mut index: HashMap<(usize, Method, u64), usize> = HashMap::new();
    let mut cells: Vec<Vec<&BenchRow>> = Vec::new();
    for r in rows {
        let slot = *index
            .entry((r.n, r.method, r.alpha.to_bits()))
            .or_insert_with(|| {
                cells.push(Vec::new());
                cells.len() - 1
            });
        cells[slot].push(r);
    }
    cells
        .into_iter()
        .map(|rs| {
            let count = rs.len() as f64;
            BenchSummary {
                problem: rs[0].problem,
                n: rs[0].n,
                method: rs[0].method,
                alpha: rs[0].alpha,
                reps: rs.len(),
                converged: rs.iter().filter(|r| r.status == Status::Converged).count(),
                mean_iters: rs.iter().map(|r| r.iters as f64).sum::<f64>() / count,
                mean_ms: rs.iter().map(|r| r.ms).sum::<f64>() / count,
            }
        })
        .collect()
}

/// Header: `problem,n,seed,method,alpha,omega,iters,res2_scaled,ms,status`.
pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record([
            "problem",
            "n",
            "seed",
            "method",
            "alpha",
            "omega",
            "iters",
            "res2_scaled",
            "ms",
            "status",
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<BenchRow>> {
    let mut r = csv::Reader::from_reader(input);
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<BenchRow>, _>>()?;
    Ok(rows)
}
