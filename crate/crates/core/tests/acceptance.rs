//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.

use std::time::Instant;

use mteq::bench::{rep_seed, run_bench, BenchSpec};
use mteq::problems::{
    fixture, gen_problem1, gen_problem2, gen_problem3, gen_problem4, FixtureId, ProblemId,
};
use mteq::solvers::{r_correction, solve, step_anewton, EpsilonState, Method, SolveConfig, Status};
use mteq::structure::{
    existence_sufficient, is_feasible, mtensor_certificate, solve_structured, Existence, Verdict,
};
use mteq::tensor::{contract_full, contract_matrix, majorization, residual, semi_symmetrize};
use mteq::DenseTensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Check = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl Into<String>) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn dist_inf(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn unscaled(method: Method) -> SolveConfig {
    SolveConfig {
        scale: false,
        ..SolveConfig::new(method, 1.0)
    }
}

fn criterion_1() -> Check {
    let fx = fixture(FixtureId::Ex21);
    let mut notes = Vec::new();
    for method in [Method::Smeqm, Method::Anewton] {
        let out = solve(&fx.tensor, &fx.rhs, &[0.8, 2.0], &unscaled(method))
            .map_err(|e| e.to_string())?;
        let err = dist_inf(&out.x, &[1.0, 2.0]);
        ensure(
            out.status == Status::Converged,
            format!("{method:?}: {:?}", out.status),
        )?;
        ensure(err <= 1e-6, format!("{method:?}: distance {err:e}"))?;
        ensure(
            out.iterations <= 3000,
            format!("{method:?}: {} iterations", out.iterations),
        )?;
        ensure(
            out.trace.max_mono_violation() <= 1e-12,
            format!(
                "{method:?}: monotonicity violation {:e}",
                out.trace.max_mono_violation()
            ),
        )?;
        notes.push(format!("{}={} it", method.as_str(), out.iterations));
    }
    Ok(notes.join(", "))
}

fn criterion_2() -> Check {
    let fx = fixture(FixtureId::Ex22);
    let out = solve(&fx.tensor, &fx.rhs, &[1.5, 2.0], &unscaled(Method::Smeqm))
        .map_err(|e| e.to_string())?;
    ensure(
        out.status == Status::Converged,
        format!("status {:?}", out.status),
    )?;
    let err = dist_inf(&out.x, &[2.0, 2.0]);
    ensure(err <= 1e-6, format!("distance {err:e}"))?;
    let bad = is_feasible(&fx.tensor, &fx.rhs, &[0.0, 2.0], 1e-12).map_err(|e| e.to_string())?;
    let good = is_feasible(&fx.tensor, &fx.rhs, &[1.5, 2.0], 1e-12).map_err(|e| e.to_string())?;
    ensure(!bad.in_s, "(0, 2) reported feasible")?;
    ensure(good.in_s, "(1.5, 2) reported infeasible")?;
    Ok(format!(
        "{} it, (0,2) rejected, (1.5,2) accepted",
        out.iterations
    ))
}

fn criterion_3() -> Check {
    let fx = fixture(FixtureId::Ex21);
    let maj = majorization(&fx.tensor);
    let lu = maj.lu().map_err(|e| e.to_string())?;
    let x0 = [0.8, 2.0];
    let state =
        EpsilonState::initial(r_correction(&fx.tensor, &maj, &x0).map_err(|e| e.to_string())?);
    let s1 = step_anewton(lu, &fx.tensor, &fx.rhs, &x0, 1.0, state).map_err(|e| e.to_string())?;
    ensure(!s1.state.fallback_used, "fallback on step 1")?;
    let r1 = r_correction(&fx.tensor, &maj, &s1.x).map_err(|e| e.to_string())?;
    let state = mteq::solvers::epsilon_update(s1.state.clone(), &s1.residual, &r1, 1.0);
    let eps1 = state.eps.clone();
    let s2 = step_anewton(lu, &fx.tensor, &fx.rhs, &s1.x, 1.0, state).map_err(|e| e.to_string())?;
    ensure(!s2.state.fallback_used, "fallback on step 2")?;
    let close = |a: &[f64], b: &[f64]| dist_inf(a, b) < 5e-6;
    let v = maj
        .matrix()
        .mul_vec(&[s2.x[0].powi(3), s2.x[1].powi(3)])
        .map_err(|e| e.to_string())?;
    ensure(close(&s1.x, &[0.843433, 2.0]), format!("x1 = {:?}", s1.x))?;
    ensure(close(&eps1, &[-0.262865, 0.0]), format!("eps1 = {eps1:?}"))?;
    ensure(close(&v, &[-1.676539, 24.0]), format!("M x2^[3] = {v:?}"))?;
    ensure(
        close(&s2.x, &[0.918215, 2.0]),
        format!(
            "x2 = ({:.6}, {:.6}), expected (0.918215, 2); M x2^[3] = ({:.6}, {:.6}) matches the expected intermediate",
            s2.x[0], s2.x[1], v[0], v[1]
        ),
    )?;
    Ok(format!(
        "x1 = {:.6}, x2 = {:.6}, eps1 = {:.6}",
        s1.x[0], s2.x[0], eps1[0]
    ))
}

const P1_REPS: usize = 100;
const P1_SEED: u64 = 0;

fn criterion_4() -> Check {
    let methods = [
        Method::Smeqm,
        Method::Jacobi,
        Method::GaussSeidel,
        Method::Sor,
        Method::Anewton,
    ];
    let failures: Vec<String> = (0..P1_REPS)
        .into_par_iter()
        .flat_map_iter(|rep| {
            let inst = gen_problem1(10, rep_seed(P1_SEED, ProblemId::P1, 10, rep)).unwrap();
            let mut bad = Vec::new();
            for alpha in [0.5, 1.0] {
                for method in methods {
                    let out = solve(&inst.tensor, &inst.rhs, &[0.0; 10], &SolveConfig::new(method, alpha)).unwrap();
                    let worst_f = out.trace.records.iter().map(|r| r.res_max).fold(out.initial_res_max, f64::max);
                    let worst_x = out.trace.max_mono_violation();
                    if out.status != Status::Converged || worst_f > 1e-12 || worst_x > 1e-12 {
                        bad.push(format!(
                            "rep {rep} {} a={alpha}: {:?} after {} it, max F {worst_f:e}, mono {worst_x:e}",
                            method.as_str(),
                            out.status,
                            out.iterations
                        ));
                    }
                }
            }
            bad
        })
        .collect();
    ensure(
        failures.is_empty(),
        format!(
            "{} bad runs, first: {}",
            failures.len(),
            failures.first().cloned().unwrap_or_default()
        ),
    )?;
    Ok(format!(
        "{} runs monotone, feasible and converged",
        P1_REPS * 10
    ))
}

fn p1_spec(alphas: Vec<f64>, methods: Vec<Method>) -> BenchSpec {
    BenchSpec {
        reps: P1_REPS,
        seed: P1_SEED,
        ..BenchSpec::new(ProblemId::P1, vec![10], alphas, methods)
    }
}

fn mean_iters(rows: &[mteq::bench::BenchRow], alpha: f64, method: Method) -> f64 {
    let sel: Vec<_> = rows
        .iter()
        .filter(|r| r.alpha == alpha && r.method == method)
        .collect();
    sel.iter().map(|r| r.iters as f64).sum::<f64>() / sel.len() as f64
}

fn criterion_5() -> Check {
    let rows = run_bench(&p1_spec(vec![0.5, 1.0, 1.9, 2.0], vec![Method::Smeqm]))
        .map_err(|e| e.to_string())?;
    let m05 = mean_iters(&rows, 0.5, Method::Smeqm);
    let m10 = mean_iters(&rows, 1.0, Method::Smeqm);
    let m19 = mean_iters(&rows, 1.9, Method::Smeqm);
    let m20 = mean_iters(&rows, 2.0, Method::Smeqm);
    let aborted = rows
        .iter()
        .filter(|r| r.alpha == 2.0 && r.status == Status::NegativePowerRHS)
        .count();
    let hit = rows
        .iter()
        .filter(|r| r.alpha == 2.0)
        .filter(|r| r.iters == 3000 && r.status == Status::MaxIterReached)
        .count();
    let summary = format!(
        "means a=0.5 {m05:.1}, 1.0 {m10:.1}, 1.9 {m19:.1}, 2.0 {m20:.1}; a=2.0 at max_iter {hit}/{P1_REPS}, negative power {aborted}/{P1_REPS}"
    );
    let mut failures = Vec::new();
    if !(200.0..=900.0).contains(&m10) {
        failures.push("alpha 1.0 mean outside [200, 900]");
    }
    if m05 <= m10 {
        failures.push("alpha 0.5 not slower than 1.0");
    }
    if m19 >= m10 {
        failures.push("alpha 1.9 not faster than 1.0");
    }
    if hit != P1_REPS {
        failures.push("alpha 2.0 runs do not all reach max_iter");
    }
    ensure(
        failures.is_empty(),
        format!("{}; {summary}", failures.join(", ")),
    )?;
    Ok(summary)
}

fn criterion_6() -> Check {
    let rows = run_bench(&p1_spec(vec![1.0], vec![Method::Smeqm, Method::Anewton]))
        .map_err(|e| e.to_string())?;
    let mean_a = mean_iters(&rows, 1.0, Method::Anewton);
    let sm: Vec<_> = rows.iter().filter(|r| r.method == Method::Smeqm).collect();
    let an: Vec<_> = rows
        .iter()
        .filter(|r| r.method == Method::Anewton)
        .collect();
    let wins = sm
        .iter()
        .zip(&an)
        .filter(|(s, a)| s.seed == a.seed && a.iters < s.iters)
        .count();
    let summary = format!("A-Newton mean {mean_a:.1}, fewer iterations on {wins}/{P1_REPS}");
    ensure(
        (20.0..=150.0).contains(&mean_a),
        format!("mean outside [20, 150]; {summary}"),
    )?;
    ensure(
        wins * 10 >= P1_REPS * 9,
        format!("paired wins below 90%; {summary}"),
    )?;
    ensure(
        an.iter().all(|r| r.status == Status::Converged),
        "A-Newton run did not converge",
    )?;
    Ok(summary)
}

fn criterion_7() -> Check {
    let mut notes = Vec::new();
    let mut failures = Vec::new();
    for n in [10, 50] {
        let p = gen_problem3(n).map_err(|e| e.to_string())?;
        for method in [Method::Smeqm, Method::Anewton] {
            let started = Instant::now();
            let out = solve(
                &p.tensor,
                &p.rhs,
                &vec![0.0; n],
                &SolveConfig::new(method, 1.0),
            )
            .map_err(|e| e.to_string())?;
            let secs = started.elapsed().as_secs_f64();
            let tag = format!("n={n} {}", method.as_str());
            notes.push(format!("{tag}: {} {} it", out.status, out.iterations));
            let checks = [
                (
                    out.status == Status::Converged,
                    format!(
                        "{tag}: {} after {} it, residual {:.1e}",
                        out.status, out.iterations, out.final_res2
                    ),
                ),
                (
                    out.status != Status::Converged || out.final_res2 <= 1e-8,
                    format!("{tag}: residual {:e}", out.final_res2),
                ),
                (
                    out.x.iter().all(|&v| v > 0.0),
                    format!("{tag}: nonpositive entry"),
                ),
                (n != 50 || secs < 30.0, format!("{tag}: took {secs:.1} s")),
            ];
            failures.extend(checks.into_iter().filter(|(ok, _)| !ok).map(|(_, m)| m));
            for i in [0, n - 1] {
                let rel = (out.x[i] - 6.37e6).abs() / 6.37e6;
                if rel > 1e-6 {
                    failures.push(format!("{tag}: x[{i}] = {} (rel {rel:e})", out.x[i]));
                }
            }
        }
    }
    ensure(failures.is_empty(), failures.join("; "))?;
    Ok(notes.join(", "))
}

/// Tensor whose only nonzeros sit at `(i, j, ..., j)`, with a strictly
/// diagonally dominant M-matrix as majorization, and `b = M y` for `y > 0`.
fn random_structured(rng: &mut ChaCha8Rng) -> (DenseTensor, Vec<f64>) {
    let order = rng.gen_range(3..=4);
    let n = rng.gen_range(2..=6);
    let mut t = DenseTensor::zeros(order, n).unwrap();
    let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.0)).collect();
    let mut b = vec![0.0; n];
    for (i, bi) in b.iter_mut().enumerate() {
        let off: Vec<f64> = (0..n)
            .map(|j| {
                if i == j {
                    0.0
                } else {
                    -rng.gen_range(0.0..1.0)
                }
            })
            .collect();
        let diag = 2.0 * off.iter().map(|v| v.abs()).sum::<f64>() + rng.gen_range(0.5..1.5);
        for j in 0..n {
            let v = if i == j { diag } else { off[j] };
            let mut idx = vec![j; order];
            idx[0] = i;
            t.set(&idx, v);
            *bi += v * y[j];
        }
    }
    (t, b)
}

fn criterion_8() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for case in 0..20 {
        let (t, b) = random_structured(&mut rng);
        let want = solve_structured(&t, &b).map_err(|e| format!("case {case}: {e}"))?;
        for method in Method::ALL {
            let out = solve(&t, &b, &vec![0.0; t.dim()], &SolveConfig::new(method, 1.0))
                .map_err(|e| e.to_string())?;
            let d = dist_inf(&out.x, &want);
            ensure(
                out.status == Status::Converged && d <= 1e-6,
                format!(
                    "case {case} {}: {:?}, distance {d:e}",
                    method.as_str(),
                    out.status
                ),
            )?;
            worst = worst.max(d);
        }
    }
    Ok(format!(
        "20 tensors x 5 methods, worst distance {worst:.1e}"
    ))
}

fn criterion_9() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (order, n) = (4, 5);
    let mut worst: f64 = 0.0;
    for case in 0..20 {
        let b =
            semi_symmetrize(&DenseTensor::from_fn(order, n, |_| rng.gen_range(0.0..1.0)).unwrap());
        let rows = contract_full(&b, &vec![1.0; n]).unwrap();
        let s = 1.01 * rows.iter().copied().fold(f64::MIN, f64::max);
        let t = DenseTensor::from_fn(order, n, |idx| {
            let d = if idx.iter().all(|&k| k == idx[0]) {
                s
            } else {
                0.0
            };
            d - b.get(idx)
        })
        .unwrap();
        let cert = mtensor_certificate(&t, false).unwrap();
        ensure(
            cert.verdict == Verdict::StrongByRowSum,
            format!("case {case}: not certified"),
        )?;
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
        let jac = contract_matrix(&t, &x).unwrap();
        let h = 1e-5;
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for j in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let fp = contract_full(&t, &xp).unwrap();
            let fm = contract_full(&t, &xm).unwrap();
            for i in 0..n {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                let an = (order - 1) as f64 * jac[(i, j)];
                num = num.max((fd - an).abs());
                den = den.max(an.abs());
            }
        }
        let rel = num / den;
        ensure(rel <= 1e-6, format!("case {case}: relative error {rel:e}"))?;
        worst = worst.max(rel);
    }
    Ok(format!("20 tensors, worst relative error {worst:.1e}"))
}

fn criterion_10() -> Check {
    let mut failures = Vec::new();
    let mut count = 0;
    let mut instances = Vec::new();
    for n in [2, 3, 5, 10] {
        for seed in 0..3 {
            instances.push(gen_problem1(n, seed).unwrap());
            instances.push(gen_problem4(n, seed).unwrap());
        }
        instances.push(gen_problem2(n).unwrap());
    }
    for n in [3, 5, 10, 50] {
        instances.push(gen_problem3(n).unwrap());
    }
    for inst in &instances {
        count += 1;
        let c = mtensor_certificate(&inst.tensor, false).unwrap();
        if c.verdict != Verdict::StrongByRowSum {
            failures.push(format!(
                "P{} n={}: {:?} (s = {}, bound = {})",
                inst.meta.problem, inst.meta.n, c.verdict, c.s, c.row_sum_bound
            ));
        }
    }
    let ex11 = mtensor_certificate(&fixture(FixtureId::Ex11).tensor, false).unwrap();
    if ex11.verdict != Verdict::NotZTensor {
        failures.push(format!("Ex11: {:?}", ex11.verdict));
    }
    let ex21 = fixture(FixtureId::Ex21);
    let ex = existence_sufficient(&ex21.tensor, &ex21.rhs).unwrap();
    if ex != Existence::Inconclusive {
        failures.push(format!("Ex21 existence: {ex:?}"));
    }
    for sol in ex21.known_solutions() {
        let r = dist_inf(
            &residual(&ex21.tensor, &ex21.rhs, sol).unwrap(),
            &[0.0, 0.0],
        );
        if r > 1e-9 {
            failures.push(format!("Ex21 solution {sol:?}: residual {r:e}"));
        }
    }
    ensure(
        failures.is_empty(),
        format!("{} issue(s): {}", failures.len(), failures.join("; ")),
    )?;
    Ok(format!("{count} generated instances certified"))
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 10] = [
        ("fixture Ex21 S-MEQM and A-Newton", criterion_1),
        ("fixture Ex22 and feasibility", criterion_2),
        ("A-Newton hand steps on Ex21", criterion_3),
        ("monotone property suite", criterion_4),
        ("S-MEQM step length sweep", criterion_5),
        ("A-Newton vs S-MEQM", criterion_6),
        ("boundary value problem", criterion_7),
        ("structured solve oracle", criterion_8),
        ("Jacobian check", criterion_9),
        ("certification suite", criterion_10),
    ];
    let mut failed = Vec::new();
    for (k, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let result = run();
        let secs = started.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {:>2} {name} ({secs:.2} s): {detail}", k + 1),
            Err(detail) => {
                println!("FAIL {:>2} {name} ({secs:.2} s): {detail}", k + 1);
                failed.push(k + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
