//! Samplers over [`Qubo`] problems.
//!
//! [`SimulatedAnnealer`] runs independent Metropolis single-flip anneals on
//! a geometric inverse-temperature schedule; [`ExhaustiveSolver`] enumerates
//! every assignment and is the optimality oracle for small problems.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::{Assignment, Qubo};
use crate::seed;

/// Largest problem [`ExhaustiveSolver`] accepts.
pub const EXHAUSTIVE_LIMIT: usize = 25;

/// Energies within this distance are treated as equal.
pub const ENERGY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealConfig {
    pub num_anneals: usize,
    pub sweeps_per_anneal: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub seed: u64,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        Self {
            num_anneals: 100,
            sweeps_per_anneal: 1000,
            beta_start: 0.1,
            beta_end: 10.0,
            seed: 0,
        }
    }
}

impl AnnealConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_anneals == 0 || self.sweeps_per_anneal == 0 {
            return Err(Error::InvalidConfig(
                "anneal and sweep counts must be positive".into(),
            ));
        }
        if !(self.beta_start > 0.0 && self.beta_start < self.beta_end && self.beta_end.is_finite())
        {
            return Err(Error::InvalidConfig(format!(
                "need 0 < beta_start < beta_end, got {} and {}",
                self.beta_start, self.beta_end
            )));
        }
        Ok(())
    }

    /// Inverse temperature at each sweep, geometric from start to end.
    pub fn beta_schedule(&self) -> Vec<f64> {
        let n = self.sweeps_per_anneal;
        if n == 1 {
            return vec![self.beta_end];
        }
        let ratio = (self.beta_end / self.beta_start).ln() / (n - 1) as f64;
        (0..n)
            .map(|k| self.beta_start * (ratio * k as f64).exp())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    #[serde(with = "bit_string")]
    pub assignment: Assignment,
    pub energy: f64,
    pub multiplicity: usize,
}

mod bit_string {
    use super::Assignment;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(a: &Assignment, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&a.bit_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Assignment, D::Error> {
        let s = String::deserialize(d)?;
        Assignment::from_bit_string(&s).map_err(serde::de::Error::custom)
    }
}

/// Distinct sampled states, sorted by energy then bits, with multiplicities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub samples: Vec<Sample>,
    pub best: usize,
}

impl SampleSet {
    /// Aggregates raw `(assignment, energy)` reads.
    pub fn from_reads(reads: Vec<(Assignment, f64)>) -> Self {
        let mut counts: BTreeMap<Assignment, (f64, usize)> = BTreeMap::new();
        for (a, e) in reads {
            counts.entry(a).or_insert((e, 0)).1 += 1;
        }
        let mut samples: Vec<Sample> = counts
            .into_iter()
            .map(|(assignment, (energy, multiplicity))| Sample {
                assignment,
                energy,
                multiplicity,
            })
            .collect();
        samples.sort_by(|a, b| {
            a.energy
                .partial_cmp(&b.energy)
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.assignment.cmp(&b.assignment))
        });
        Self { samples, best: 0 }
    }

    pub fn best(&self) -> &Sample {
        &self.samples[self.best]
    }

    pub fn total_reads(&self) -> usize {
        self.samples.iter().map(|s| s.multiplicity).sum()
    }

    /// Fraction of reads with energy at most `reference + ENERGY_TOL`.
    pub fn fraction_at_or_below(&self, reference: f64) -> f64 {
        let hits: usize = self
            .samples
            .iter()
            .filter(|s| s.energy <= reference + ENERGY_TOL)
            .map(|s| s.multiplicity)
            .sum();
        hits as f64 / self.total_reads() as f64
    }
}

pub trait Sampler: Sync {
    fn sample(&self, q: &Qubo) -> Result<SampleSet>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SimulatedAnnealer {
    pub config: AnnealConfig,
}

impl SimulatedAnnealer {
    pub fn new(config: AnnealConfig) -> Self {
        Self { config }
    }
}

impl Sampler for SimulatedAnnealer {
    fn sample(&self, q: &Qubo) -> Result<SampleSet> {
        sample_sa(q, &self.config)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ExhaustiveSolver;

impl Sampler for ExhaustiveSolver {
    fn sample(&self, q: &Qubo) -> Result<SampleSet> {
        sample_exhaustive(q)
    }
}

/// State of one anneal: assignment, current energy and local fields
/// `h_i = s_i + Q_ii + 2 Σ_{j≠i} Q_ij z_j`, the energy change of turning
/// `z_i` on.
struct Walker<'a> {
    q: &'a Qubo,
    z: Vec<u8>,
    field: Vec<f64>,
    energy: f64,
}

impl<'a> Walker<'a> {
    fn new(q: &'a Qubo, z: Vec<u8>) -> Self {
        let d = q.d();
        let field = (0..d)
            .map(|i| {
                let row = q.q_row(i);
                let cross: f64 = (0..d)
                    .filter(|&j| j != i && z[j] == 1)
                    .map(|j| row[j])
                    .sum();
                q.linear()[i] + row[i] + 2.0 * cross
            })
            .collect();
        let energy = q.energy_unchecked(&z);
        Self {
            q,
            z,
            field,
            energy,
        }
    }

    fn delta(&self, i: usize) -> f64 {
        if self.z[i] == 1 {
            -self.field[i]
        } else {
            self.field[i]
        }
    }

    fn flip(&mut self, i: usize) {
        let delta = self.delta(i);
        let sign = if self.z[i] == 1 { -2.0 } else { 2.0 };
        self.z[i] ^= 1;
        self.energy += delta;
        for (j, (h, &qij)) in self.field.iter_mut().zip(self.q.q_row(i)).enumerate() {
            if j != i {
                *h += sign * qij;
            }
        }
    }
}

/// Runs anneal `k` of `cfg`, returning the lowest-energy state visited and
/// the best-so-far energy after each sweep.
pub fn anneal_trace(q: &Qubo, cfg: &AnnealConfig, k: usize) -> (Assignment, Vec<f64>) {
    let mut rng = seed::rng(cfg.seed, "anneal", k as u64);
    let d = q.d();
    let init: Vec<u8> = (0..d).map(|_| rng.random::<bool>() as u8).collect();
    let mut walker = Walker::new(q, init);
    let mut best_z = walker.z.clone();
    let mut best_e = walker.energy;
    let mut trace = Vec::with_capacity(cfg.sweeps_per_anneal);
    for beta in cfg.beta_schedule() {
        for i in 0..d {
            let delta = walker.delta(i);
            if delta <= 0.0 || rng.random::<f64>() < (-beta * delta).exp() {
                walker.flip(i);
                if walker.energy < best_e {
                    best_e = walker.energy;
                    best_z.copy_from_slice(&walker.z);
                }
            }
        }
        trace.push(best_e);
    }
    (Assignment(best_z), trace)
}

/// Simulated annealing: `num_anneals` independent anneals, each keeping the
/// lowest-energy state it visits. Energies are recomputed from scratch.
pub fn sample_sa(q: &Qubo, cfg: &AnnealConfig) -> Result<SampleSet> {
    cfg.validate()?;
    if q.d() == 0 {
        return Ok(SampleSet::from_reads(vec![
            (
                Assignment::zeros(0),
                q.offset()
            );
            cfg.num_anneals
        ]));
    }
    let reads: Vec<(Assignment, f64)> = (0..cfg.num_anneals)
        .into_par_iter()
        .map(|k| {
            let (z, _) = anneal_trace(q, cfg, k);
            let e = q.energy_unchecked(&z.0);
            (z, e)
        })
        .collect();
    Ok(SampleSet::from_reads(reads))
}

/// Exact minimum by Gray-code enumeration of all `2^d` assignments. Ties
/// within [`ENERGY_TOL`] go to the lexicographically smallest bit vector.
pub fn sample_exhaustive(q: &Qubo) -> Result<SampleSet> {
    let d = q.d();
    if d > EXHAUSTIVE_LIMIT {
        return Err(Error::TooLarge {
            d,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let mut walker = Walker::new(q, vec![0; d]);
    let mut best = walker.z.clone();
    let mut best_e = walker.energy;
    for step in 1u64..1 << d {
        walker.flip(step.trailing_zeros() as usize);
        let e = walker.energy;
        if e < best_e - ENERGY_TOL || (e <= best_e + ENERGY_TOL && walker.z < best) {
            best_e = e.min(best_e);
            best.copy_from_slice(&walker.z);
        }
    }
    let e = q.energy_unchecked(&best);
    Ok(SampleSet::from_reads(vec![(Assignment(best), e)]))
}

/// Fraction of SA anneals ending at or below `reference_energy`.
pub fn optimal_solution_probability(
    q: &Qubo,
    cfg: &AnnealConfig,
    reference_energy: f64,
) -> Result<f64> {
    Ok(sample_sa(q, cfg)?.fraction_at_or_below(reference_energy))
}
