//! Acceptance runner. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use qumf::config::{DatasetKind, Method, RunConfig};
use qumf::eval::{max_weight_matching, misclassification};
use qumf::experiment::{generate_dataset, hypothesis_pool, run_grid, summarize, TrialRow};
use qumf::preference::PreferenceMatrix;
use qumf::qubo::{build_mmf_qubo, reduce_forced, Assignment, Qubo};
use qumf::seed;
use qumf::solver::{column_partition, dequmf, qumf, Backend, Decomposition, SolveConfig};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, m: usize, density: f64) -> PreferenceMatrix {
    let rows: Vec<Vec<u8>> = (0..n)
        .map(|_| (0..m).map(|_| u8::from(rng.random_bool(density))).collect())
        .collect();
    PreferenceMatrix::from_rows(&rows).unwrap()
}

fn brute_force(q: &Qubo) -> f64 {
    let d = q.d();
    (0u64..1 << d)
        .map(|mask| {
            q.energy(&Assignment((0..d).map(|j| (mask >> j & 1) as u8).collect()))
                .unwrap()
        })
        .fold(f64::INFINITY, f64::min)
}

fn within(elapsed: Duration, budget_s: u64) -> bool {
    elapsed <= Duration::from_secs(budget_s)
}

fn oracle_equivalence() -> Verdict {
    let start = Instant::now();
    let instances = 50;
    let (mut hits, mut below) = (0, 0);
    for k in 0..instances {
        let mut rng = seed::rng(1, "oracle", k);
        let n = rng.random_range(1..=15);
        let m = rng.random_range(1..=16);
        let density = rng.random_range(0.15..0.5);
        let p = random_matrix(&mut rng, n, m, density);
        let exact = qumf(
            &p,
            &SolveConfig {
                backend: Backend::Exhaustive,
                ..Default::default()
            },
        )
        .unwrap()
        .final_energy;
        let mut cfg = SolveConfig::default();
        cfg.anneal.seed = seed::derive(1, "oracle-anneal", k);
        let sa = qumf(&p, &cfg).unwrap().final_energy;
        hits += usize::from((sa - exact).abs() <= 1e-9);
        below += usize::from(sa < exact - 1e-9);
    }
    let elapsed = start.elapsed();
    check(
        hits * 100 >= 95 * instances as usize && below == 0 && within(elapsed, 30),
        format!(
            "SA hit the exhaustive optimum on {hits}/{instances}, {below} below it, {elapsed:.1?}"
        ),
    )
}

fn energy_identity() -> Verdict {
    let start = Instant::now();
    let triples = 2000;
    let mut worst = 0.0f64;
    for k in 0..triples {
        let mut rng = seed::rng(2, "identity", k);
        let n = rng.random_range(1..=20);
        let m = rng.random_range(1..=20);
        let density = rng.random_range(0.05..0.9);
        let p = random_matrix(&mut rng, n, m, density);
        let lambda = rng.random_range(0.01..10.0);
        let z: Vec<u8> = (0..m).map(|_| u8::from(rng.random_bool(0.5))).collect();
        let e = build_mmf_qubo(&p, lambda)
            .unwrap()
            .energy(&Assignment(z.clone()))
            .unwrap();
        let ones = z.iter().map(|&b| b as f64).sum::<f64>();
        let violation: f64 = (0..n)
            .map(|i| {
                let cover = (0..m).filter(|&j| z[j] == 1 && p.get(i, j)).count() as f64;
                (cover - 1.0).powi(2)
            })
            .sum();
        worst = worst.max((e + lambda * n as f64 - (ones + lambda * violation)).abs());
    }
    let elapsed = start.elapsed();
    check(
        worst <= 1e-9 && within(elapsed, 5),
        format!("{triples} triples, max deviation {worst:.2e}, {elapsed:.1?}"),
    )
}

fn grid_verdict(cfg: &RunConfig, budget_s: u64, limit: f64) -> Verdict {
    let start = Instant::now();
    let rows = run_grid(cfg).unwrap();
    let elapsed = start.elapsed();
    let failures: usize = rows.iter().filter(|r| !TrialRow::is_ok(r)).count();
    let summary = summarize(&rows);
    let means: Vec<String> = summary
        .iter()
        .map(|s| format!("m={}: {:.2}%", s.m, s.mean))
        .collect();
    let ok = failures == 0 && summary.iter().all(|s| s.mean <= limit) && within(elapsed, budget_s);
    check(
        ok,
        format!(
            "mean error {} ({failures} failed trials, {elapsed:.1?})",
            means.join(", ")
        ),
    )
}

fn star5_small() -> Verdict {
    grid_verdict(
        &RunConfig {
            n: 30,
            k: 5,
            m_values: vec![20, 40, 60, 80, 100],
            trials: 20,
            anneals: 100,
            ..Default::default()
        },
        300,
        5.0,
    )
}

fn star5_large() -> Verdict {
    grid_verdict(
        &RunConfig {
            n: 250,
            k: 5,
            m_values: vec![200, 500, 1000],
            trials: 5,
            method: Method::Dequmf,
            subproblem_size: 40,
            anneals: 100,
            ..Default::default()
        },
        1200,
        5.0,
    )
}

fn reduction() -> Verdict {
    let start = Instant::now();
    let instances = 100;
    let (mut exact, mut forced_total) = (0, 0);
    for k in 0..instances {
        let mut rng = seed::rng(5, "reduction", k);
        let n = rng.random_range(2..=12);
        let m = rng.random_range(2..=14);
        let mut rows: Vec<Vec<u8>> = (0..n)
            .map(|_| (0..m).map(|_| u8::from(rng.random_bool(0.3))).collect())
            .collect();
        // Column 0 gets its own rows, which no other column touches.
        let own = rng.random_range(1..=n.min(3));
        for (i, row) in rows.iter_mut().enumerate() {
            let mine = i < own;
            row[0] = u8::from(mine);
            if mine {
                row[1..].iter_mut().for_each(|b| *b = 0);
            }
        }
        let p = PreferenceMatrix::from_rows(&rows).unwrap();
        let q = build_mmf_qubo(&p, 1.1).unwrap();
        let red = reduce_forced(&p, &q).unwrap();
        forced_total += red.forced_ones.len();
        let parent = brute_force(&q);
        let reduced = brute_force(&red.reduced);
        let d = red.reduced.d();
        let argmin = (0u64..1 << d)
            .map(|mask| Assignment((0..d).map(|j| (mask >> j & 1) as u8).collect()))
            .min_by(|a, b| {
                red.reduced
                    .energy(a)
                    .unwrap()
                    .total_cmp(&red.reduced.energy(b).unwrap())
            })
            .unwrap();
        let extended = q.energy(&red.extend(&argmin)).unwrap();
        exact += usize::from((parent - reduced).abs() <= 1e-9 && (parent - extended).abs() <= 1e-9);
    }
    let elapsed = start.elapsed();
    check(
        exact == instances as usize && forced_total >= instances as usize && within(elapsed, 30),
        format!("{exact}/{instances} exact, {forced_total} variables forced, {elapsed:.1?}"),
    )
}

fn single_model() -> Verdict {
    grid_verdict(
        &RunConfig {
            dataset: DatasetKind::Clutter,
            n: 80,
            clutter: 20,
            k: 1,
            m_values: vec![50],
            trials: 10,
            ..Default::default()
        },
        300,
        10.0,
    )
}

/// Spot checks of the invariant suites; the full property tests live in
/// the library unit tests and the other integration targets.
fn invariants() -> Verdict {
    let mut failed = Vec::new();

    let cfg = RunConfig {
        n: 40,
        m_values: vec![30],
        trials: 2,
        anneals: 20,
        ..Default::default()
    };
    let strip = |rows: Vec<TrialRow>| -> Vec<String> {
        rows.into_iter()
            .map(|mut r| {
                r.wall_ms = 0;
                serde_json::to_string(&r).unwrap()
            })
            .collect()
    };
    if strip(run_grid(&cfg).unwrap()) != strip(run_grid(&cfg).unwrap()) {
        failed.push("determinism");
    }

    let data = generate_dataset(&cfg, 3).unwrap();
    let pool = hypothesis_pool(&cfg, &data, 30, 3).unwrap();
    let narrow = PreferenceMatrix::build(&data.points, &pool, 0.005).unwrap();
    let wide = PreferenceMatrix::build(&data.points, &pool, 0.02).unwrap();
    let monotone =
        (0..narrow.n()).all(|i| (0..narrow.m()).all(|j| !narrow.get(i, j) || wide.get(i, j)));
    if !monotone {
        failed.push("epsilon monotonicity");
    }

    let q = build_mmf_qubo(&wide, 1.1).unwrap();
    let mut rng = seed::rng(7, "psd", 0);
    let psd = (0..100).all(|_| {
        let x: Vec<f64> = (0..q.d()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let quad: f64 = (0..q.d())
            .flat_map(|i| (0..q.d()).map(move |j| (i, j)))
            .map(|(i, j)| x[i] * q.q(i, j) * x[j])
            .sum();
        quad >= -1e-9
    });
    if !psd {
        failed.push("PSD");
    }

    let groups = column_partition(23, 5, 11);
    let mut all: Vec<usize> = groups.concat();
    all.sort_unstable();
    if all != (0..23).collect::<Vec<_>>() || groups.iter().rev().skip(1).any(|g| g.len() != 5) {
        failed.push("partition coverage");
    }

    let dec = SolveConfig {
        decomposition: Some(Decomposition {
            subproblem_size: 10,
            partition_seed: 5,
        }),
        anneal: qumf::annealer::AnnealConfig {
            num_anneals: 20,
            ..Default::default()
        },
        ..Default::default()
    };
    match dequmf(&wide, &dec) {
        Ok(sel) => {
            let mut prev: Vec<usize> = (0..wide.m()).collect();
            for r in &sel.rounds {
                if r.len() >= prev.len() || r.iter().any(|j| !prev.contains(j)) {
                    failed.push("survivor subset");
                    break;
                }
                prev = r.clone();
            }
        }
        Err(_) => failed.push("survivor subset"),
    }

    let pred: Vec<i64> = vec![0, 0, 1, 1, 2, 2, 2, -1];
    let gt: Vec<i64> = vec![1, 1, 0, 0, 0, 2, 2, 2];
    let permuted: Vec<i64> = pred
        .iter()
        .map(|&c| if c < 0 { c } else { (c + 1) % 3 })
        .collect();
    let a = misclassification(&pred, &gt)
        .unwrap()
        .misclassification_error;
    let b = misclassification(&permuted, &gt)
        .unwrap()
        .misclassification_error;
    if (a - b).abs() > 1e-12 {
        failed.push("permutation invariance");
    }

    let mut rng = seed::rng(8, "matching", 0);
    for _ in 0..200 {
        let r = rng.random_range(1..=6);
        let c = rng.random_range(1..=6);
        let w: Vec<Vec<usize>> = (0..r)
            .map(|_| (0..c).map(|_| rng.random_range(0..10)).collect())
            .collect();
        let got: usize = max_weight_matching(&w)
            .iter()
            .enumerate()
            .filter_map(|(i, m)| m.map(|j| w[i][j]))
            .sum();
        if got != best_injection(&w, 0, &mut vec![false; c]) {
            failed.push("matching vs brute force");
            break;
        }
    }

    check(
        failed.is_empty(),
        if failed.is_empty() {
            "determinism, epsilon monotonicity, PSD, partition coverage, survivor subset, permutation invariance, matching".to_string()
        } else {
            format!("failed: {}", failed.join(", "))
        },
    )
}

fn best_injection(w: &[Vec<usize>], row: usize, used: &mut Vec<bool>) -> usize {
    if row == w.len() {
        return 0;
    }
    let mut best = best_injection(w, row + 1, used);
    for c in 0..used.len() {
        if !used[c] {
            used[c] = true;
            best = best.max(w[row][c] + best_injection(w, row + 1, used));
            used[c] = false;
        }
    }
    best
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("1 oracle equivalence", oracle_equivalence),
        ("2 energy identity", energy_identity),
        ("3 star5 small scale", star5_small),
        ("4 star5 large scale", star5_large),
        ("5 forced-variable reduction", reduction),
        ("6 single-model mode", single_model),
        ("7 invariant suites", invariants),
    ];
    let mut failures = 0;
    for (name, run) in criteria {
        let v = run();
        failures += usize::from(!v.pass);
        println!(
            "{} {name}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
