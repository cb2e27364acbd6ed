//! Synthetic datasets and hypothesis pools.
//!
//! The star generator places `k` line segments as the edges of a regular
//! star polygon inscribed in the unit circle (a pentagram for `k = 5`) and
//! samples points uniformly along them with isotropic Gaussian noise.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{fit_minimal, Family, LineModel, Model, ModelHypothesis, Point2D, PointSet};
use crate::seed;

pub const DEFAULT_NOISE_SIGMA: f64 = 0.0025;
pub const DEFAULT_EPSILON: f64 = 0.01;
pub const MAX_REDRAWS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub k: usize,
    pub n: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            k: 5,
            n: 250,
            noise_sigma: DEFAULT_NOISE_SIGMA,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypothesisPoolSpec {
    pub m: usize,
    pub include_ground_truth: bool,
    pub seed: u64,
}

/// Generated points plus the models that produced them.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub points: Vec<Point2D>,
    pub gt_labels: Vec<i64>,
    pub gt_models: Vec<ModelHypothesis>,
}

impl Dataset {
    pub fn point_set(&self) -> PointSet {
        PointSet {
            points: self.points.clone(),
            gt_labels: Some(self.gt_labels.clone()),
        }
    }
}

/// Endpoints of the `k` star segments.
pub fn star_segments(k: usize) -> Vec<((f64, f64), (f64, f64))> {
    let vertex = |i: usize| {
        let t = FRAC_PI_2 + TAU * i as f64 / k as f64;
        (t.cos(), t.sin())
    };
    if k < 3 {
        // Too few vertices for a polygon: use diameters instead.
        return (0..k)
            .map(|i| {
                let t = FRAC_PI_2 + PI * i as f64 / k as f64;
                ((t.cos(), t.sin()), (-t.cos(), -t.sin()))
            })
            .collect();
    }
    // Largest step below k/2 keeps every edge distinct: 2 for k = 5.
    let step = (k - 1) / 2;
    (0..k)
        .map(|i| (vertex(i), vertex((i + step) % k)))
        .collect()
}

pub fn generate_star(spec: &SyntheticSpec) -> Result<Dataset> {
    if spec.k == 0 || spec.n < 2 * spec.k {
        return Err(Error::InvalidSpec(format!(
            "need k >= 1 and n >= 2k, got k = {}, n = {}",
            spec.k, spec.n
        )));
    }
    if !(spec.noise_sigma >= 0.0 && spec.noise_sigma.is_finite()) {
        return Err(Error::InvalidSpec(format!(
            "bad noise sigma {}",
            spec.noise_sigma
        )));
    }
    let noise = Normal::new(0.0, spec.noise_sigma).expect("sigma checked above");
    let mut rng = seed::rng(spec.seed, "star", 0);
    let segments = star_segments(spec.k);
    let mut points = Vec::with_capacity(spec.n);
    let mut gt_labels = Vec::with_capacity(spec.n);
    for (s, &(a, b)) in segments.iter().enumerate() {
        let count = spec.n / spec.k + usize::from(s < spec.n % spec.k);
        for _ in 0..count {
            let t: f64 = rng.random();
            let mut x = a.0 + t * (b.0 - a.0);
            let mut y = a.1 + t * (b.1 - a.1);
            if spec.noise_sigma > 0.0 {
                x += noise.sample(&mut rng);
                y += noise.sample(&mut rng);
            }
            points.push(Point2D::new(points.len(), x, y));
            gt_labels.push(s as i64);
        }
    }
    let gt_models = segments
        .iter()
        .enumerate()
        .map(|(s, &(a, b))| {
            LineModel::through(a, b).map(|l| ModelHypothesis::ground_truth(Model::Line(l), s))
        })
        .collect::<Result<_>>()?;
    Ok(Dataset {
        points,
        gt_labels,
        gt_models,
    })
}

/// One noisy line segment with `inliers` points plus `clutter` points drawn
/// uniformly from `[-1, 1]²`. Clutter points are labeled `-1`.
pub fn generate_line_with_clutter(
    inliers: usize,
    clutter: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<Dataset> {
    if inliers < 2 {
        return Err(Error::InvalidSpec("need at least two inliers".into()));
    }
    let mut rng = seed::rng(seed, "clutter", 0);
    let angle = rng.random_range(0.0..PI);
    let (a, b) = ((-angle.cos(), -angle.sin()), (angle.cos(), angle.sin()));
    let noise = Normal::new(0.0, noise_sigma).map_err(|e| Error::InvalidSpec(e.to_string()))?;
    let mut points = Vec::with_capacity(inliers + clutter);
    let mut gt_labels = Vec::with_capacity(inliers + clutter);
    for _ in 0..inliers {
        let t: f64 = rng.random();
        let x = a.0 + t * (b.0 - a.0) + noise.sample(&mut rng);
        let y = a.1 + t * (b.1 - a.1) + noise.sample(&mut rng);
        points.push(Point2D::new(points.len(), x, y));
        gt_labels.push(0);
    }
    for _ in 0..clutter {
        let (x, y) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        points.push(Point2D::new(points.len(), x, y));
        gt_labels.push(-1);
    }
    let line = LineModel::through(a, b)?;
    Ok(Dataset {
        points,
        gt_labels,
        gt_models: vec![ModelHypothesis::ground_truth(Model::Line(line), 0)],
    })
}

/// Hypotheses from random minimal samples, optionally mixed with the
/// ground-truth models, in seeded random order.
pub fn sample_hypotheses(
    points: &[Point2D],
    gt_models: &[ModelHypothesis],
    spec: &HypothesisPoolSpec,
) -> Result<Vec<ModelHypothesis>> {
    sample_hypotheses_of(Family::Line, points, gt_models, spec)
}

pub fn sample_hypotheses_of(
    family: Family,
    points: &[Point2D],
    gt_models: &[ModelHypothesis],
    spec: &HypothesisPoolSpec,
) -> Result<Vec<ModelHypothesis>> {
    let mut pool: Vec<ModelHypothesis> = if spec.include_ground_truth {
        gt_models.to_vec()
    } else {
        Vec::new()
    };
    if pool.len() > spec.m {
        return Err(Error::InvalidSpec(format!(
            "pool size {} is smaller than the {} ground-truth models",
            spec.m,
            pool.len()
        )));
    }
    let random = spec.m - pool.len();
    if random > 0 && points.len() < family.arity() {
        return Err(Error::InvalidSpec(format!(
            "{} points cannot form a minimal sample of {}",
            points.len(),
            family.arity()
        )));
    }
    let mut rng = seed::rng(spec.seed, "pool", 0);
    for _ in 0..random {
        pool.push(draw_hypothesis(family, points, &mut rng)?);
    }
    pool.shuffle(&mut rng);
    Ok(pool)
}

fn draw_hypothesis(
    family: Family,
    points: &[Point2D],
    rng: &mut ChaCha8Rng,
) -> Result<ModelHypothesis> {
    for _ in 0..MAX_REDRAWS {
        let sample: Vec<Point2D> = points
            .choose_multiple(rng, family.arity())
            .copied()
            .collect();
        match fit_minimal(family, &sample) {
            Ok(h) => return Ok(h),
            Err(Error::DegenerateSample(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::ExhaustedRedraws(MAX_REDRAWS))
}
