use proptest::prelude::*;
use qumf::preference::PreferenceMatrix;
use qumf::qubo::{build_mmf_qubo, Assignment, DEFAULT_LAMBDA};
use qumf::seed;
use qumf::solver::{
    column_partition, dequmf, extract_single_model, qumf, Backend, Decomposition, SolveConfig,
};
use qumf::Error;

fn exhaustive() -> SolveConfig {
    SolveConfig {
        backend: Backend::Exhaustive,
        ..Default::default()
    }
}

fn brute_force_min(p: &PreferenceMatrix, lambda: f64) -> (f64, Vec<Assignment>) {
    let q = build_mmf_qubo(p, lambda).unwrap();
    let m = p.m();
    let mut best = f64::INFINITY;
    let mut argmins = Vec::new();
    for mask in 0u64..1 << m {
        let z = Assignment((0..m).map(|j| (mask >> j & 1) as u8).collect());
        let e = q.energy(&z).unwrap();
        if e < best - 1e-9 {
            best = e;
            argmins.clear();
        }
        if (e - best).abs() <= 1e-9 {
            argmins.push(z);
        }
    }
    (best, argmins)
}

fn matrix(n: usize, m: usize, bits: &[u8]) -> PreferenceMatrix {
    let rows: Vec<Vec<u8>> = (0..n).map(|i| bits[i * m..(i + 1) * m].to_vec()).collect();
    PreferenceMatrix::from_rows(&rows).unwrap()
}

fn random_matrix() -> impl Strategy<Value = PreferenceMatrix> {
    (1usize..=12, 1usize..=16).prop_flat_map(|(n, m)| {
        proptest::collection::vec(prop::bool::weighted(0.3).prop_map(u8::from), n * m)
            .prop_map(move |bits| matrix(n, m, &bits))
    })
}

/// Rows partitioned into `k` blocks, each block covered by one "true" column,
/// plus `extra` columns that each cover a random proper subset of a block
/// together with one row outside it.
fn planted_cover() -> impl Strategy<Value = PreferenceMatrix> {
    (2usize..=4, 2usize..=4, 0usize..=6).prop_flat_map(|(k, block, extra)| {
        let n = k * block;
        proptest::collection::vec(
            (0..k, 0..n, proptest::collection::vec(any::<bool>(), block)),
            extra,
        )
        .prop_map(move |spurious| {
            let m = k + spurious.len();
            let mut rows = vec![vec![0u8; m]; n];
            for (i, row) in rows.iter_mut().enumerate() {
                row[i / block] = 1;
            }
            for (e, (b, stray, mask)) in spurious.iter().enumerate() {
                let col = k + e;
                for (t, &on) in mask.iter().enumerate() {
                    if on {
                        rows[b * block + t][col] = 1;
                    }
                }
                if stray / block != *b {
                    rows[*stray][col] = 1;
                }
            }
            PreferenceMatrix::from_rows(&rows).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exhaustive_qumf_is_a_global_optimum(p in random_matrix()) {
        let sel = qumf(&p, &exhaustive()).unwrap();
        let (best, argmins) = brute_force_min(&p, DEFAULT_LAMBDA);
        prop_assert!((sel.final_energy - best).abs() <= 1e-9);
        let mut z = vec![0u8; p.m()];
        for &j in &sel.selected {
            z[j] = 1;
        }
        prop_assert!(argmins.contains(&Assignment(z)));
    }

    #[test]
    fn optimum_is_a_disjoint_cover_when_one_exists(p in planted_cover()) {
        let sel = qumf(&p, &exhaustive()).unwrap();
        for i in 0..p.n() {
            let hits = sel.selected.iter().filter(|&&j| p.get(i, j)).count();
            prop_assert_eq!(hits, 1, "row {} covered {} times", i, hits);
        }
    }

    #[test]
    fn dequmf_survivors_shrink(
        p in (8usize..=16, 9usize..=24).prop_flat_map(|(n, m)| {
            proptest::collection::vec(prop::bool::weighted(0.25).prop_map(u8::from), n * m)
                .prop_map(move |bits| matrix(n, m, &bits))
        }),
        s in 3usize..=8,
        partition_seed in any::<u64>(),
    ) {
        let cfg = SolveConfig {
            decomposition: Some(Decomposition { subproblem_size: s, partition_seed }),
            ..exhaustive()
        };
        match dequmf(&p, &cfg) {
            Ok(sel) => {
                prop_assert_eq!(sel.rounds.len(), sel.iterations);
                let mut prev: Vec<usize> = (0..p.m()).collect();
                for round in &sel.rounds {
                    prop_assert!(round.iter().all(|j| prev.contains(j)));
                    prop_assert!(round.len() < prev.len());
                    prev = round.clone();
                }
                prop_assert!(sel.selected.iter().all(|j| prev.contains(j)));
                prop_assert!(sel.history.windows(2).all(|w| w[1] < w[0]));
                prop_assert!(*sel.history.last().unwrap() <= s);
            }
            Err(Error::StalledPruning { survivors, .. }) => {
                prop_assert!(survivors.len() > s);
            }
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }

    #[test]
    fn single_model_partitions_rows(p in random_matrix()) {
        let sel = qumf(&p, &exhaustive()).unwrap();
        match extract_single_model(&p, &sel) {
            Ok(single) => {
                let mut all: Vec<usize> = single.inliers.iter().chain(&single.outliers).copied().collect();
                all.sort_unstable();
                prop_assert_eq!(all, (0..p.n()).collect::<Vec<_>>());
                prop_assert!(single.inliers.iter().all(|i| !single.outliers.contains(i)));
                let biggest = sel.selected.iter().map(|&j| p.consensus_size(j)).max().unwrap();
                prop_assert_eq!(single.inliers.len(), biggest);
            }
            Err(Error::EmptySelection) => prop_assert!(sel.selected.is_empty()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }
}

#[test]
fn first_round_matches_groupwise_qumf() {
    let mut checked = 0;
    for inst in 0..40u64 {
        let mut rng = seed::rng(inst, "consistency", 0);
        let (n, m, s) = (10, 12, 4);
        let bits: Vec<u8> = (0..n * m)
            .map(|_| u8::from(rand::Rng::random_bool(&mut rng, 0.3)))
            .collect();
        let p = matrix(n, m, &bits);
        let partition_seed = inst;
        let groups = column_partition(m, s, seed::derive(partition_seed, "round", 0));
        let mut unique = true;
        let mut expected = Vec::new();
        for g in &groups {
            let sub = p.restrict_columns(g).unwrap();
            let (_, argmins) = brute_force_min(&sub, DEFAULT_LAMBDA);
            unique &= argmins.len() == 1;
            let sel = qumf(&sub, &exhaustive()).unwrap();
            expected.extend(sel.selected.iter().map(|&k| g[k]));
        }
        if !unique {
            continue;
        }
        expected.sort_unstable();
        let cfg = SolveConfig {
            decomposition: Some(Decomposition {
                subproblem_size: s,
                partition_seed,
            }),
            ..exhaustive()
        };
        let observed = match dequmf(&p, &cfg) {
            Ok(sel) => sel.rounds[0].clone(),
            Err(Error::StalledPruning {
                survivors,
                round: 1,
            }) => survivors,
            Err(e) => panic!("{e}"),
        };
        assert_eq!(observed, expected, "instance {inst}");
        checked += 1;
    }
    assert!(
        checked >= 10,
        "only {checked} instances had unique group optima"
    );
}

#[test]
fn random_instances_mostly_prune() {
    let mut pruned = 0;
    for inst in 0..50u64 {
        let mut rng = seed::rng(inst, "prune", 0);
        let (n, m) = (12, 20);
        let bits: Vec<u8> = (0..n * m)
            .map(|_| u8::from(rand::Rng::random_bool(&mut rng, 0.25)))
            .collect();
        let cfg = SolveConfig {
            decomposition: Some(Decomposition {
                subproblem_size: 5,
                partition_seed: inst,
            }),
            ..exhaustive()
        };
        if let Ok(sel) = dequmf(&matrix(n, m, &bits), &cfg) {
            pruned += usize::from(sel.iterations > 0);
        }
    }
    assert!(pruned >= 25, "only {pruned} of 50 instances pruned");
}
