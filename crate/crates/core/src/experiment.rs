//! Seeded trial runner and CSV aggregation.
//!
//! A trial with seed `t` generates its dataset from `derive(t, "star")`
//! (or `"clutter"`), its hypothesis pool from `derive(t, "pool", m)`, and
//! its solver streams from [`RunConfig::solve_config`]. Rows are emitted in
//! `(m, seed)` order regardless of scheduling.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{backend_name, DatasetKind, RunConfig};
use crate::datagen::{
    generate_line_with_clutter, generate_star, sample_hypotheses, Dataset, HypothesisPoolSpec,
    SyntheticSpec,
};
use crate::error::{Error, Result};
use crate::eval::{label_points, misclassification, single_model_error, EvalReport, Labeling};
use crate::geometry::ModelHypothesis;
use crate::preference::PreferenceMatrix;
use crate::seed;
use crate::solver::{extract_single_model, solve, ModelSelection, SelectionReport, SingleModel};

pub const CSV_COLUMNS: [&str; 14] = [
    "dataset",
    "method",
    "backend",
    "lambda",
    "epsilon",
    "n",
    "m",
    "k",
    "seed",
    "error_percent",
    "energy",
    "iterations",
    "wall_ms",
    "status",
];

pub fn generate_dataset(cfg: &RunConfig, trial_seed: u64) -> Result<Dataset> {
    match cfg.dataset {
        DatasetKind::Star => generate_star(&SyntheticSpec {
            k: cfg.k,
            n: cfg.n,
            noise_sigma: cfg.noise_sigma,
            seed: seed::derive(trial_seed, "star", 0),
        }),
        DatasetKind::Clutter => generate_line_with_clutter(
            cfg.n,
            cfg.clutter,
            cfg.noise_sigma,
            seed::derive(trial_seed, "clutter", 0),
        ),
    }
}

pub fn hypothesis_pool(
    cfg: &RunConfig,
    data: &Dataset,
    m: usize,
    trial_seed: u64,
) -> Result<Vec<ModelHypothesis>> {
    sample_hypotheses(
        &data.points,
        &data.gt_models,
        &HypothesisPoolSpec {
            m,
            include_ground_truth: cfg.include_ground_truth,
            seed: seed::derive(trial_seed, "pool", m as u64),
        },
    )
}

/// Everything a fit produces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitOutcome {
    pub selection: SelectionReport,
    pub labeling: Labeling,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<EvalReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub single_model: Option<SingleModel>,
    /// Misclassification (multi-model) or inlier/outlier (single-model) error.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_percent: Option<f64>,
}

/// Solves `p`, labels the points and scores against `gt_labels` if given.
/// With `single_model`, only the largest selected consensus is kept and
/// points with ground-truth label `0` are the true inliers.
pub fn fit(
    p: &PreferenceMatrix,
    cfg: &RunConfig,
    solve_seed: u64,
    gt_labels: Option<&[i64]>,
    single_model: bool,
) -> Result<(ModelSelection, FitOutcome)> {
    let sel = solve(p, &cfg.solve_config(solve_seed))?;
    let outcome = evaluate_selection(p, &sel, gt_labels, single_model)?;
    Ok((sel, outcome))
}

/// Labels, reports and scores an existing selection.
pub fn evaluate_selection(
    p: &PreferenceMatrix,
    sel: &ModelSelection,
    gt_labels: Option<&[i64]>,
    single_model: bool,
) -> Result<FitOutcome> {
    let labeling = label_points(p, sel)?;
    let mut outcome = FitOutcome {
        selection: SelectionReport::new(p, sel),
        labeling,
        report: None,
        single_model: None,
        error_percent: None,
    };
    if single_model {
        let single = extract_single_model(p, sel)?;
        if let Some(gt) = gt_labels {
            let gt_inliers: Vec<usize> = (0..gt.len()).filter(|&i| gt[i] == 0).collect();
            outcome.error_percent = Some(single_model_error(
                &single.inliers,
                &single.outliers,
                &gt_inliers,
            )?);
        }
        outcome.single_model = Some(single);
    } else if let Some(gt) = gt_labels {
        let report = misclassification(&outcome.labeling.labels, gt)?;
        outcome.error_percent = Some(report.misclassification_error);
        outcome.report = Some(report);
    }
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub dataset: String,
    pub method: String,
    pub backend: String,
    pub lambda: f64,
    pub epsilon: f64,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub seed: u64,
    pub error_percent: Option<f64>,
    pub energy: Option<f64>,
    pub iterations: Option<usize>,
    pub wall_ms: u64,
    /// `ok`, or the error that stopped the trial.
    pub status: String,
}

impl TrialRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

fn trial_inner(cfg: &RunConfig, m: usize, trial_seed: u64) -> Result<(ModelSelection, FitOutcome)> {
    let data = generate_dataset(cfg, trial_seed)?;
    let pool = hypothesis_pool(cfg, &data, m, trial_seed)?;
    let p = PreferenceMatrix::build(&data.points, &pool, cfg.epsilon)?;
    let single = cfg.dataset == DatasetKind::Clutter;
    fit(&p, cfg, trial_seed, Some(&data.gt_labels), single)
}

/// One trial; failures are recorded in the row instead of propagated.
pub fn run_trial(cfg: &RunConfig, m: usize, trial_seed: u64) -> TrialRow {
    let start = Instant::now();
    let result = trial_inner(cfg, m, trial_seed);
    let wall_ms = start.elapsed().as_millis() as u64;
    let mut row = TrialRow {
        dataset: cfg.dataset.as_str().to_string(),
        method: cfg.method.as_str().to_string(),
        backend: backend_name(cfg.backend).to_string(),
        lambda: cfg.lambda,
        epsilon: cfg.epsilon,
        n: cfg.n
            + if cfg.dataset == DatasetKind::Clutter {
                cfg.clutter
            } else {
                0
            },
        m,
        k: if cfg.dataset == DatasetKind::Clutter {
            1
        } else {
            cfg.k
        },
        seed: trial_seed,
        error_percent: None,
        energy: None,
        iterations: None,
        wall_ms,
        status: "ok".into(),
    };
    match result {
        Ok((sel, outcome)) => {
            row.error_percent = outcome.error_percent;
            row.energy = Some(sel.final_energy);
            row.iterations = Some(sel.iterations);
        }
        Err(e) => row.status = format!("error: {e}"),
    }
    row
}

/// Every `(m, seed)` trial of the grid, sorted by `(m, seed)`.
pub fn run_grid(cfg: &RunConfig) -> Result<Vec<TrialRow>> {
    cfg.validate()?;
    let jobs: Vec<(usize, u64)> = cfg
        .m_values
        .iter()
        .flat_map(|&m| (0..cfg.trials as u64).map(move |t| (m, cfg.seed + t)))
        .collect();
    let mut rows: Vec<TrialRow> = jobs
        .par_iter()
        .map(|&(m, s)| run_trial(cfg, m, s))
        .collect();
    rows.sort_by_key(|r| (r.m, r.seed));
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub m: usize,
    pub trials: usize,
    pub failures: usize,
    pub mean: f64,
    pub median: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
}

/// Per-`m` statistics of the successful rows. The interval is the normal
/// approximation `mean ± 1.96 s / √n`.
pub fn summarize(rows: &[TrialRow]) -> Vec<SummaryRow> {
    let mut ms: Vec<usize> = rows.iter().map(|r| r.m).collect();
    ms.sort_unstable();
    ms.dedup();
    ms.into_iter()
        .map(|m| {
            let group: Vec<&TrialRow> = rows.iter().filter(|r| r.m == m).collect();
            let mut errs: Vec<f64> = group.iter().filter_map(|r| r.error_percent).collect();
            errs.sort_by(f64::total_cmp);
            let n = errs.len();
            let failures = group.len() - n;
            if n == 0 {
                return SummaryRow {
                    m,
                    trials: group.len(),
                    failures,
                    mean: f64::NAN,
                    median: f64::NAN,
                    ci95_low: f64::NAN,
                    ci95_high: f64::NAN,
                };
            }
            let mean = errs.iter().sum::<f64>() / n as f64;
            let median = if n % 2 == 1 {
                errs[n / 2]
            } else {
                0.5 * (errs[n / 2 - 1] + errs[n / 2])
            };
            let half = if n > 1 {
                let var = errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                1.96 * var.sqrt() / (n as f64).sqrt()
            } else {
                0.0
            };
            SummaryRow {
                m,
                trials: group.len(),
                failures,
                mean,
                median,
                ci95_low: mean - half,
                ci95_high: mean + half,
            }
        })
        .collect()
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(String::new, T::to_string)
}

/// Per-trial CSV. With `timing = false`, `wall_ms` is written as 0 so the
/// file is byte-reproducible.
pub fn write_rows_csv<W: Write>(rows: &[TrialRow], w: W, timing: bool) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_COLUMNS)?;
    for r in rows {
        out.write_record([
            r.dataset.clone(),
            r.method.clone(),
            r.backend.clone(),
            r.lambda.to_string(),
            r.epsilon.to_string(),
            r.n.to_string(),
            r.m.to_string(),
            r.k.to_string(),
            r.seed.to_string(),
            opt(&r.error_percent),
            opt(&r.energy),
            opt(&r.iterations),
            if timing {
                r.wall_ms.to_string()
            } else {
                "0".into()
            },
            r.status.clone(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_rows_csv<R: std::io::Read>(r: R) -> Result<Vec<TrialRow>> {
    let mut input = csv::Reader::from_reader(r);
    let header: Vec<String> = input.headers()?.iter().map(str::to_string).collect();
    if header != CSV_COLUMNS {
        return Err(Error::Parse(format!("unexpected CSV header {header:?}")));
    }
    let field = |rec: &csv::StringRecord, i: usize| rec.get(i).unwrap_or("").to_string();
    let num = |s: String| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse()
                .map(Some)
                .map_err(|_| Error::Parse(format!("bad number {s:?}")))
        }
    };
    let int = |s: String| -> Result<u64> {
        s.parse()
            .map_err(|_| Error::Parse(format!("bad integer {s:?}")))
    };
    input
        .records()
        .map(|rec| {
            let rec = rec?;
            Ok(TrialRow {
                dataset: field(&rec, 0),
                method: field(&rec, 1),
                backend: field(&rec, 2),
                lambda: num(field(&rec, 3))?.unwrap_or(f64::NAN),
                epsilon: num(field(&rec, 4))?.unwrap_or(f64::NAN),
                n: int(field(&rec, 5))? as usize,
                m: int(field(&rec, 6))? as usize,
                k: int(field(&rec, 7))? as usize,
                seed: int(field(&rec, 8))?,
                error_percent: num(field(&rec, 9))?,
                energy: num(field(&rec, 10))?,
                iterations: num(field(&rec, 11))?.map(|v| v as usize),
                wall_ms: int(field(&rec, 12))?,
                status: field(&rec, 13),
            })
        })
        .collect()
}

pub fn write_summary_csv<W: Write>(summary: &[SummaryRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in summary {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}
