//! Multi-model fitting as disjoint set cover.
//!
//! [`qumf`] solves the whole preference matrix as one QUBO. [`dequmf`]
//! handles matrices too large for that: it repeatedly splits the surviving
//! columns into groups of at most `s`, solves each group against all rows,
//! and discards the columns its group solution did not pick, until at most
//! `s` columns remain for a final [`qumf`] solve.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annealer::{sample_exhaustive, sample_sa, AnnealConfig, Sample, SampleSet};
use crate::error::{Error, Result};
use crate::geometry::ModelHypothesis;
use crate::preference::PreferenceMatrix;
use crate::qubo::{build_mmf_qubo, reduce_forced, Assignment, DEFAULT_LAMBDA};
use crate::seed;

/// Subproblem size for SA-backed decomposition.
pub const DEFAULT_SUBPROBLEM_SIZE: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Sa,
    Exhaustive,
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sa" => Ok(Backend::Sa),
            "exhaustive" => Ok(Backend::Exhaustive),
            other => Err(Error::InvalidConfig(format!("unknown backend {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub subproblem_size: usize,
    pub partition_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub lambda: f64,
    pub backend: Backend,
    pub anneal: AnnealConfig,
    pub decomposition: Option<Decomposition>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            lambda: DEFAULT_LAMBDA,
            backend: Backend::Sa,
            anneal: AnnealConfig::default(),
            decomposition: None,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if let Some(dec) = &self.decomposition {
            if dec.subproblem_size < 2 {
                return Err(Error::InvalidConfig(
                    "subproblem size must be at least 2".into(),
                ));
            }
        }
        if self.backend == Backend::Sa {
            self.anneal.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSelection {
    /// Indices into the original model list, ascending.
    pub selected: Vec<usize>,
    pub final_energy: f64,
    /// Pruning rounds before the final solve.
    pub iterations: usize,
    /// Surviving column count at the start of each round, then at the final solve.
    pub history: Vec<usize>,
    /// Rows covered by no column at the final solve.
    #[serde(default)]
    pub orphan_rows: Vec<usize>,
    /// Surviving column indices after each pruning round.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rounds: Vec<Vec<usize>>,
}

/// Lowest-energy sample of the configured backend. The anneal seed is
/// replaced by `anneal_seed`.
fn run_backend(q: &crate::qubo::Qubo, cfg: &SolveConfig, anneal_seed: u64) -> Result<SampleSet> {
    match cfg.backend {
        Backend::Exhaustive => sample_exhaustive(q),
        Backend::Sa => sample_sa(q, &cfg.anneal.with_seed(anneal_seed)),
    }
}

fn qumf_seeded(
    p: &PreferenceMatrix,
    cfg: &SolveConfig,
    anneal_seed: u64,
) -> Result<(ModelSelection, SampleSet)> {
    let q = build_mmf_qubo(p, cfg.lambda)?;
    let reduction = reduce_forced(p, &q)?;
    let reduced_samples = if reduction.kept.is_empty() {
        SampleSet::from_reads(vec![(Assignment::zeros(0), reduction.reduced.offset())])
    } else {
        run_backend(&reduction.reduced, cfg, anneal_seed)?
    };
    // Forced variables are folded into the offset, so reduced energies are
    // already on the parent scale.
    let samples = SampleSet {
        samples: reduced_samples
            .samples
            .iter()
            .map(|s| Sample {
                assignment: reduction.extend(&s.assignment),
                ..s.clone()
            })
            .collect(),
        best: reduced_samples.best,
    };
    let full = samples.best().assignment.clone();
    let final_energy = q.energy(&full)?;
    let sel = ModelSelection {
        selected: full.selected(),
        final_energy,
        iterations: 0,
        history: vec![p.m()],
        orphan_rows: p.orphan_rows(),
        rounds: Vec::new(),
    };
    Ok((sel, samples))
}

/// One-sweep solve of the whole matrix.
pub fn qumf(p: &PreferenceMatrix, cfg: &SolveConfig) -> Result<ModelSelection> {
    cfg.validate()?;
    if cfg.decomposition.is_some() {
        return Err(Error::InvalidConfig(
            "qumf does not take a decomposition".into(),
        ));
    }
    Ok(qumf_seeded(p, cfg, cfg.anneal.seed)?.0)
}

/// Seeded random permutation of `0..m` cut into consecutive groups of `s`;
/// the last group may be shorter.
pub fn column_partition(m: usize, s: usize, seed: u64) -> Vec<Vec<usize>> {
    assert!(s >= 1, "group size must be positive");
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut seed::rng(seed, "partition", 0));
    order.chunks(s).map(<[usize]>::to_vec).collect()
}

/// Iterative decomposed solve. Falls back to [`qumf`] semantics when the
/// matrix already has at most `s` columns.
pub fn dequmf(p: &PreferenceMatrix, cfg: &SolveConfig) -> Result<ModelSelection> {
    Ok(dequmf_with_samples(p, cfg)?.0)
}

/// [`dequmf`] plus the samples of the final solve, over the surviving
/// columns (`ModelSelection::history` gives their count).
pub fn dequmf_with_samples(
    p: &PreferenceMatrix,
    cfg: &SolveConfig,
) -> Result<(ModelSelection, Option<SampleSet>)> {
    cfg.validate()?;
    let dec = cfg
        .decomposition
        .ok_or_else(|| Error::InvalidConfig("dequmf needs a subproblem size".into()))?;
    let s = dec.subproblem_size;
    let mut survivors: Vec<usize> = (0..p.m()).collect();
    let mut history = Vec::new();
    let mut rounds = Vec::new();
    let mut round = 0usize;
    while survivors.len() > s {
        history.push(survivors.len());
        let groups = column_partition(
            survivors.len(),
            s,
            seed::derive(dec.partition_seed, "round", round as u64),
        );
        let kept: Vec<Vec<usize>> = groups
            .par_iter()
            .enumerate()
            .map(|(g, group)| {
                let cols: Vec<usize> = group.iter().map(|&pos| survivors[pos]).collect();
                let sub = p.restrict_columns(&cols)?;
                let anneal_seed =
                    seed::derive(cfg.anneal.seed, "anneal", ((round as u64) << 32) | g as u64);
                let (sel, _) = qumf_seeded(&sub, cfg, anneal_seed)?;
                Ok(sel.selected.iter().map(|&k| cols[k]).collect())
            })
            .collect::<Result<_>>()?;
        let mut next: Vec<usize> = kept.into_iter().flatten().collect();
        next.sort_unstable();
        round += 1;
        if next.len() == survivors.len() {
            return Err(Error::StalledPruning {
                survivors: next,
                round,
            });
        }
        rounds.push(next.clone());
        survivors = next;
    }
    if survivors.is_empty() {
        // Every group selected nothing; only possible when no column covers any row.
        history.push(0);
        let sel = ModelSelection {
            selected: Vec::new(),
            final_energy: 0.0,
            iterations: round,
            history,
            orphan_rows: (0..p.n()).collect(),
            rounds,
        };
        return Ok((sel, None));
    }
    let sub = p.restrict_columns(&survivors)?;
    let anneal_seed = if round == 0 {
        cfg.anneal.seed
    } else {
        seed::derive(cfg.anneal.seed, "final", round as u64)
    };
    let (sel, samples) = qumf_seeded(&sub, cfg, anneal_seed)?;
    history.push(survivors.len());
    let sel = ModelSelection {
        selected: sel.selected.iter().map(|&k| survivors[k]).collect(),
        final_energy: sel.final_energy,
        iterations: round,
        history,
        orphan_rows: sel.orphan_rows,
        rounds,
    };
    Ok((sel, Some(samples)))
}

/// Dispatches on whether `cfg` carries a decomposition.
pub fn solve(p: &PreferenceMatrix, cfg: &SolveConfig) -> Result<ModelSelection> {
    Ok(solve_with_samples(p, cfg)?.0)
}

/// [`solve`] plus the samples of the final QUBO solve.
pub fn solve_with_samples(
    p: &PreferenceMatrix,
    cfg: &SolveConfig,
) -> Result<(ModelSelection, Option<SampleSet>)> {
    if cfg.decomposition.is_some() {
        dequmf_with_samples(p, cfg)
    } else {
        cfg.validate()?;
        let (sel, samples) = qumf_seeded(p, cfg, cfg.anneal.seed)?;
        Ok((sel, Some(samples)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleModel {
    pub model: usize,
    pub inliers: Vec<usize>,
    pub outliers: Vec<usize>,
}

/// Keeps only the selected model with the largest consensus (ties to the
/// lowest index); every point outside its consensus is an outlier.
pub fn extract_single_model(p: &PreferenceMatrix, sel: &ModelSelection) -> Result<SingleModel> {
    let mut best: Option<(usize, usize)> = None;
    for &j in &sel.selected {
        if j >= p.m() {
            return Err(Error::IndexOutOfRange { index: j, m: p.m() });
        }
        let c = p.consensus_size(j);
        if best.is_none_or(|(bj, bc)| c > bc || (c == bc && j < bj)) {
            best = Some((j, c));
        }
    }
    let (model, _) = best.ok_or(Error::EmptySelection)?;
    let (inliers, outliers) = (0..p.n()).partition(|&i| p.get(i, model));
    Ok(SingleModel {
        model,
        inliers,
        outliers,
    })
}

/// JSON record of a selection with the chosen model parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionReport {
    pub selected: Vec<usize>,
    pub models: Vec<ModelHypothesis>,
    pub energy: f64,
    pub iterations: usize,
    pub history: Vec<usize>,
    pub orphan_rows: Vec<usize>,
}

impl SelectionReport {
    pub fn new(p: &PreferenceMatrix, sel: &ModelSelection) -> Self {
        Self {
            selected: sel.selected.clone(),
            models: sel
                .selected
                .iter()
                .filter_map(|&j| p.models().get(j).cloned())
                .collect(),
            energy: sel.final_energy,
            iterations: sel.iterations,
            history: sel.history.clone(),
            orphan_rows: sel.orphan_rows.clone(),
        }
    }
}
