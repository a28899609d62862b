//! Acceptance suite: one PASS/FAIL line per criterion, fixed seeds.
//!
//! Runs without the libtest harness so the lines show up in plain
//! `cargo test` output.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use itertools::Itertools;
use lpopt::hpopt::{odd_ratio, polarization_average};
use lpopt::norms::lp_norm;
use lpopt::oracle::{exact_ml_linf, fn_check, fn_formula, fn_value, grid_ml_refined, sym_equivalence_check};
use lpopt::pqnorm::{round_gram, rounding_samples, solve_vecp, GROTHENDIECK_BOUND, KRIVINE_RATIO};
use lpopt::sampler::{sample_pgauss, sample_rademacher};
use lpopt::symmetry::{pi_transpose, rebalance_blocks, split, stack, symmetrize, BlockPartition};
use lpopt::{
    solve_hp, solve_ml, Error, Exponent, HpInstance, MlInstance, RoundingStrategy, SolverConfig, SymmetricTensor,
    Tensor,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform_vec(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn random_tensor(dims: Vec<usize>, rng: &mut impl Rng) -> Tensor {
    Tensor::from_fn(dims, |_| rng.random_range(-1.0..1.0)).unwrap()
}

fn random_dims(d: usize, max: usize, rng: &mut impl Rng) -> Vec<usize> {
    (0..d).map(|_| rng.random_range(1..=max)).collect()
}

/// Average over all index permutations of a random cubical tensor.
fn random_symmetric(n: usize, d: usize, rng: &mut impl Rng) -> SymmetricTensor {
    let t = random_tensor(vec![n; d], rng);
    let perms: Vec<Tensor> = (0..d)
        .permutations(d)
        .map(|pi| pi_transpose(&t, &pi).unwrap())
        .collect();
    let k = perms.len() as f64;
    let avg = Tensor::from_fn(vec![n; d], |i| perms.iter().map(|p| p.get(i)).sum::<f64>() / k).unwrap();
    SymmetricTensor::new(avg, 1e-12).unwrap()
}

fn factorial(d: usize) -> f64 {
    (1..=d).map(|k| k as f64).product()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + b.abs())
}

fn symmetrization_identity() -> Outcome {
    let mut r = rng(101);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let d = r.random_range(2..=4);
        let dims = random_dims(d, 3, &mut r);
        let a = random_tensor(dims.clone(), &mut r);
        let xs: Vec<Vec<f64>> = dims.iter().map(|&n| uniform_vec(n, &mut r)).collect();
        let lhs = symmetrize(&a).unwrap().eval_poly(&stack(&xs)).unwrap();
        let rhs = factorial(d) * a.eval_multilinear(&xs).unwrap();
        worst = worst.max(rel_err(lhs, rhs));
    }
    let detail = format!("max scaled error {worst:.2e} over 200 tensors");
    if worst <= 1e-10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn permutation_expansion() -> Outcome {
    let mut r = rng(102);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let d = r.random_range(2..=4);
        let dims = random_dims(d, 3, &mut r);
        let a = random_tensor(dims.clone(), &mut r);
        let part = BlockPartition::new(&dims).unwrap();
        let zs: Vec<Vec<f64>> = (0..d).map(|_| uniform_vec(part.total(), &mut r)).collect();
        let blocks: Vec<Vec<Vec<f64>>> = zs.iter().map(|z| split(z, &part).unwrap()).collect();
        let lhs = symmetrize(&a).unwrap().eval_multilinear(&zs).unwrap();
        let rhs: f64 = (0..d)
            .permutations(d)
            .map(|pi| {
                let args: Vec<&Vec<f64>> = (0..d).map(|j| &blocks[pi[j]][j]).collect();
                a.eval_multilinear(&args).unwrap()
            })
            .sum();
        worst = worst.max(rel_err(lhs, rhs));
    }
    let detail = format!("max scaled error {worst:.2e} over 100 instances");
    if worst <= 1e-10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn polarization_identity() -> Outcome {
    let mut r = rng(103);
    let mut worst = 0.0f64;
    for k in 0..100 {
        let d = 3 + k % 3;
        let n = r.random_range(1..=3);
        let a = random_symmetric(n, d, &mut r);
        let xs: Vec<Vec<f64>> = (0..d).map(|_| uniform_vec(n, &mut r)).collect();
        let lhs = polarization_average(&a, &xs).unwrap();
        let rhs = factorial(d) * a.tensor().eval_multilinear(&xs).unwrap();
        worst = worst.max(rel_err(lhs, rhs));
    }
    let detail = format!("max scaled error {worst:.2e} over 100 instances");
    if worst <= 1e-10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn odd_recovery_guarantee() -> Outcome {
    let mut r = rng(104);
    let mut violations = 0;
    let mut min_slack = f64::INFINITY;
    for k in 0..100u64 {
        let d = if k % 4 == 3 { 5 } else { 3 };
        let n = r.random_range(2..=3);
        let a = random_symmetric(n, d, &mut r);
        let p = [
            Exponent::infinity(),
            Exponent::finite(3.0).unwrap(),
            Exponent::finite(4.0).unwrap(),
        ][k as usize % 3];
        let cfg = SolverConfig {
            trials: 20,
            max_samples: if d == 5 { 4 } else { 16 },
            seed: k,
            ..SolverConfig::default()
        };
        let inst = HpInstance::new(a.tensor().clone(), p, cfg).unwrap();
        match solve_hp(&inst, &mut rng(k)) {
            Ok(cert) => {
                let slack = cert.value - (odd_ratio(d) * cert.ml_value - 1e-9);
                min_slack = min_slack.min(slack);
                if slack < 0.0 || lp_norm(&cert.x_hat, p.value()) > 1.0 + 1e-9 {
                    violations += 1;
                }
            }
            Err(Error::Invariant(_)) => violations += 1,
            Err(e) => return Err(format!("run {k} failed: {e}")),
        }
    }
    let detail = format!("{violations} violations in 100 runs, min slack {min_slack:.3e}");
    if violations == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn relaxation_sandwich() -> Outcome {
    let mut r = rng(105);
    let ps = [
        Exponent::finite(3.0).unwrap(),
        Exponent::finite(4.0).unwrap(),
        Exponent::infinity(),
    ];
    let mut failures = Vec::new();
    let mut within_bound = 0;
    for k in 0..50 {
        let p = ps[k % 3];
        let dims = random_dims(2, 6, &mut r);
        let b = random_tensor(dims, &mut r);
        let g = solve_vecp(&b, p, 1e-8, 5000).map_err(|e| format!("instance {k}: {e}"))?;
        let oracle = if p.is_infinite() {
            exact_ml_linf(&b).unwrap().value
        } else {
            grid_ml_refined(&b, p, 12, 200).unwrap().value
        };
        let best = round_gram(&b, &g, RoundingStrategy::Krivine, 200, &mut rng(1000 + k as u64)).unwrap();
        if oracle > g.value + 1e-4 {
            failures.push(format!("instance {k}: oracle {oracle} above relaxation {}", g.value));
        }
        if best.value > oracle + 1e-6 {
            failures.push(format!("instance {k}: rounded {} above oracle {oracle}", best.value));
        }
        if best.value >= g.value / GROTHENDIECK_BOUND - 1e-6 {
            within_bound += 1;
        }
    }
    let detail = format!("{within_bound}/50 rounded values within the Grothendieck bound");
    if within_bound < 48 {
        failures.push(detail.clone());
    }
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(failures.join("; "))
    }
}

fn krivine_expectation() -> Outcome {
    let mut r = rng(106);
    let mut worst = 0.0f64;
    for k in 0..10u64 {
        let p = if k % 2 == 0 {
            Exponent::infinity()
        } else {
            Exponent::finite(4.0).unwrap()
        };
        let b = random_tensor(vec![5, 5], &mut r);
        let g = solve_vecp(&b, p, 1e-8, 5000).unwrap();
        let samples = rounding_samples(&b, &g, RoundingStrategy::Krivine, 10_000, &mut rng(2000 + k)).unwrap();
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        let z = (mean - KRIVINE_RATIO * g.value).abs() / se;
        worst = worst.max(z);
    }
    let detail = format!("largest deviation {worst:.2} standard errors over 10 matrices");
    if worst <= 3.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn sampler_moments() -> Outcome {
    let draws = 100_000;
    let mut r = rng(107);
    let mut worst = 0.0f64;
    for p in [2.5, 3.0, 4.0] {
        let values: Vec<f64> = (0..draws)
            .map(|_| sample_pgauss(1, p, &mut r).unwrap().0[0].abs().powf(p))
            .collect();
        let mean = values.iter().sum::<f64>() / draws as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
        worst = worst.max((mean - 1.0 / p).abs() / (var / draws as f64).sqrt());
    }
    let signs: f64 = (0..draws).map(|_| sample_rademacher(1, &mut r)[0]).sum();
    // Rademacher variance is 1
    let rademacher = (signs / draws as f64).abs() * (draws as f64).sqrt();
    worst = worst.max(rademacher);
    let detail = format!("largest deviation {worst:.2} sigma");
    if worst <= 3.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fn_maximization() -> Outcome {
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for n in [2, 3] {
        for d in [3, 4] {
            for p in [2.0, 3.0, 4.0] {
                let steps = if n == 2 { 600 } else { 120 };
                let (grid, formula) = fn_check(n, d, p, steps).unwrap();
                let balanced = fn_value(&vec![d as f64 / n as f64; n], d, p);
                worst = worst.max((balanced - formula).abs()).max(formula - grid);
                if grid > formula + 1e-3 || (balanced - formula).abs() > 1e-3 || grid < formula - 1e-3 {
                    failures.push(format!(
                        "(n={n}, d={d}, p={p}): grid {grid}, formula {formula}, balanced {balanced}"
                    ));
                }
            }
        }
    }
    let anchor = fn_formula(2, 3, 2.0);
    if (anchor - 3.0).abs() > 1e-12 {
        failures.push(format!("formula at n=2, d=3, p=2 is {anchor}"));
    }
    if failures.is_empty() {
        Ok(format!("12 cases, largest gap {worst:.2e}"))
    } else {
        Err(failures.join("; "))
    }
}

fn rebalancing() -> Outcome {
    let mut r = rng(109);
    let mut failures = Vec::new();
    let mut done = 0;
    while done < 100 {
        let d = r.random_range(2..=4);
        let dims = random_dims(d, 3, &mut r);
        let a = random_tensor(dims.clone(), &mut r);
        let p = [3.0, 4.0, f64::INFINITY][done % 3];
        let mut zs: Vec<Vec<f64>> = dims
            .iter()
            .map(|&n| {
                let scale = 10f64.powf(r.random_range(-1.0..1.0));
                uniform_vec(n, &mut r).into_iter().map(|v| v * scale).collect()
            })
            .collect();
        let mut f = a.eval_multilinear(&zs).unwrap();
        if f.abs() < 1e-9 {
            continue;
        }
        if f < 0.0 {
            zs[0].iter_mut().for_each(|v| *v = -*v);
            f = -f;
        }
        // start from a feasible point: total mass d, or all blocks in the unit cube
        let k = if p.is_infinite() {
            1.0 / zs.iter().map(|z| lp_norm(z, p)).fold(0.0, f64::max)
        } else {
            (d as f64 / zs.iter().map(|z| lp_norm(z, p).powf(p)).sum::<f64>()).powf(1.0 / p)
        };
        zs.iter_mut().for_each(|z| z.iter_mut().for_each(|v| *v *= k));
        let f_in = f * k.powi(d as i32);
        let out = rebalance_blocks(&zs, p).unwrap();
        let f_out = a.eval_multilinear(&out).unwrap();
        if out.iter().any(|z| (lp_norm(z, p) - 1.0).abs() > 1e-10) {
            failures.push(format!("instance {done}: block norms off"));
        }
        if f_out < f_in * (1.0 - 1e-12) {
            failures.push(format!("instance {done}: F decreased {f_in} -> {f_out}"));
        }
        done += 1;
    }
    if failures.is_empty() {
        Ok("100 instances, unit block norms, F never decreased".into())
    } else {
        Err(failures.join("; "))
    }
}

fn end_to_end_quality() -> Outcome {
    let mut r = rng(110);
    let mut good = 0;
    let mut failures = Vec::new();
    let mut worst_ratio = f64::INFINITY;
    for k in 0..30u64 {
        let t = random_tensor(vec![3, 3, 3], &mut r);
        let optimum = exact_ml_linf(&t).unwrap().value;
        let cfg = SolverConfig {
            seed: k,
            ..SolverConfig::default()
        };
        let inst = MlInstance::new(t, Exponent::infinity(), cfg).unwrap();
        let cert = solve_ml(&inst, &mut rng(k)).map_err(|e| format!("run {k}: {e}"))?;
        let ratio = cert.value / optimum;
        worst_ratio = worst_ratio.min(ratio);
        if ratio >= 0.3 {
            good += 1;
        }
        if cert.value > optimum + 1e-6 {
            failures.push(format!("run {k}: value {} above optimum {optimum}", cert.value));
        }
    }
    let detail = format!("{good}/30 runs at >= 0.3 of the optimum, worst ratio {worst_ratio:.3}");
    if good < 24 {
        failures.push(detail.clone());
    }
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(failures.join("; "))
    }
}

fn equivalence_check() -> Outcome {
    let mut r = rng(111);
    let cases: [(Vec<usize>, Exponent); 10] = [
        (vec![2, 2], Exponent::infinity()),
        (vec![1, 2], Exponent::infinity()),
        (vec![2, 2, 2], Exponent::infinity()),
        (vec![1, 2, 2], Exponent::infinity()),
        (vec![2, 1, 1], Exponent::infinity()),
        (vec![2, 2], Exponent::finite(3.0).unwrap()),
        (vec![1, 2], Exponent::finite(4.0).unwrap()),
        (vec![2, 1], Exponent::finite(5.0).unwrap()),
        (vec![1, 1, 2], Exponent::finite(3.0).unwrap()),
        (vec![1, 1, 1], Exponent::finite(4.0).unwrap()),
    ];
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for (k, (dims, p)) in cases.into_iter().enumerate() {
        let a = random_tensor(dims, &mut r);
        let res = sym_equivalence_check(&a, p, 8).map_err(|e| format!("instance {k}: {e}"))?;
        worst = worst.max(res.rel_gap);
        if !res.passed {
            failures.push(format!("instance {k}: {} vs {}", res.tau_a, res.tau_b));
        }
    }
    if failures.is_empty() {
        Ok(format!("10 instances, largest relative gap {worst:.2e}"))
    } else {
        Err(failures.join("; "))
    }
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let cube = dir.path().join("cube.json");
    let mat = dir.path().join("mat.json");
    std::fs::write(
        &cube,
        r#"{"dims":[2,2,2],"coo":[[1,1,1,1.0],[1,2,2,-0.5],[2,1,2,-0.5],[2,2,1,-0.5],[2,2,2,0.8]]}"#,
    )
    .unwrap();
    std::fs::write(
        &mat,
        r#"{"dims":[3,3],"dense":[0.3,-1.2,0.5,0.9,0.1,-0.4,0.2,0.7,-1.0]}"#,
    )
    .unwrap();
    let (cube, mat) = (cube.to_str().unwrap(), mat.to_str().unwrap());
    let invocations: [&[&str]; 4] = [
        &[
            "solve-hp", cube, "--p", "4", "--seed", "7", "--format", "json", "--oracle",
        ],
        &["solve-ml", cube, "--p", "inf", "--seed", "7", "--threads", "2"],
        &["pqnorm", mat, "--p", "7/2", "--seed", "7", "--format", "json"],
        &["oracle", cube, "--mode", "hp", "--p", "3", "--steps", "200"],
    ];
    for args in invocations {
        let mut reports = Vec::new();
        for _ in 0..5 {
            let out = Command::new(env!("CARGO_BIN_EXE_lpopt"))
                .args(args)
                .env_remove(lpopt_cli::settings::CONFIG_ENV)
                .output()
                .map_err(|e| e.to_string())?;
            if !out.status.success() {
                return Err(format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr)));
            }
            reports.push(strip_timestamp(&String::from_utf8(out.stdout).unwrap()));
        }
        if reports.iter().any(|r| r != &reports[0]) {
            return Err(format!("{args:?} produced differing reports"));
        }
    }
    Ok("4 invocations x 5 runs, identical bytes outside the timestamp".into())
}

/// Drops the timestamp line of a text report or the timestamp member of a
/// JSON report; everything else is kept byte for byte.
fn strip_timestamp(report: &str) -> String {
    if report.starts_with('{') {
        let mut out = Vec::new();
        let mut skipping = false;
        for line in report.lines() {
            if line.starts_with("  \"timestamp\": {") {
                skipping = true;
                continue;
            }
            if skipping {
                if line.starts_with("  }") {
                    skipping = false;
                }
                continue;
            }
            out.push(line);
        }
        out.join("\n")
    } else {
        report.lines().filter(|l| !l.starts_with("timestamp: ")).join("\n")
    }
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("symmetrization identity", symmetrization_identity),
        ("permutation expansion", permutation_expansion),
        ("polarization identity", polarization_identity),
        ("odd-order recovery guarantee", odd_recovery_guarantee),
        ("relaxation sandwich", relaxation_sandwich),
        ("Krivine expectation", krivine_expectation),
        ("sampler moments", sampler_moments),
        ("f_n maximization", fn_maximization),
        ("block rebalancing", rebalancing),
        ("end-to-end quality", end_to_end_quality),
        ("equivalence check", equivalence_check),
        ("CLI determinism", cli_determinism),
    ];
    let start = Instant::now();
    let mut failed = 0;
    println!("acceptance: {} criteria", criteria.len());
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} ({secs:.1}s)", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} ({secs:.1}s)", k + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        criteria.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
