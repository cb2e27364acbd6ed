//! Parametric 2D model families.
//!
//! A [`ModelHypothesis`] couples a [`Model`] (line or circle) with the ids
//! of the points it was instantiated from. Residuals are geometric
//! distances: orthogonal distance for lines, radial distance for circles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimal samples whose defining determinant is below this are rejected.
pub const DEGENERACY_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2D {
    pub id: usize,
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub fn new(id: usize, x: f64, y: f64) -> Self {
        Self { id, x, y }
    }
}

/// Checks the dataset invariants: finite coordinates, ids `0..n` in order.
pub fn validate_points(points: &[Point2D]) -> Result<()> {
    for (i, p) in points.iter().enumerate() {
        if p.id != i {
            return Err(Error::Parse(format!(
                "point at position {i} has id {}",
                p.id
            )));
        }
        if !p.x.is_finite() || !p.y.is_finite() {
            return Err(Error::Parse(format!(
                "point {i} has non-finite coordinates"
            )));
        }
    }
    Ok(())
}

pub trait Residual {
    /// Nonnegative distance from `p` to the model.
    fn residual(&self, p: &Point2D) -> f64;
}

/// Implicit line `a x + b y + c = 0` with `a² + b² = 1` and the first
/// nonzero of `(a, b)` positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineModel {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl LineModel {
    /// Line through two points. The result does not depend on argument order.
    pub fn through(p: (f64, f64), q: (f64, f64)) -> Result<Self> {
        // Order the pair so that swapping the arguments is a no-op bit for bit.
        let (p, q) = if (p.0, p.1) <= (q.0, q.1) {
            (p, q)
        } else {
            (q, p)
        };
        let (dx, dy) = (q.0 - p.0, q.1 - p.1);
        let norm = dx.hypot(dy);
        if norm.is_nan() || norm < DEGENERACY_EPS {
            return Err(Error::DegenerateSample(format!(
                "points ({}, {}) and ({}, {}) coincide",
                p.0, p.1, q.0, q.1
            )));
        }
        let (a, b) = (-dy / norm, dx / norm);
        Ok(Self::from_normal(a, b, -(a * p.0 + b * p.1)))
    }

    /// Normalizes `(a, b, c)` and applies the sign convention.
    pub fn from_normal(a: f64, b: f64, c: f64) -> Self {
        let norm = a.hypot(b);
        let (mut a, mut b, mut c) = (a / norm, b / norm, c / norm);
        if a < 0.0 || (a == 0.0 && b < 0.0) {
            a = -a;
            b = -b;
            c = -c;
        }
        // Avoid -0.0 so equal lines compare and serialize identically.
        Self {
            a: a + 0.0,
            b: b + 0.0,
            c: c + 0.0,
        }
    }
}

impl Residual for LineModel {
    fn residual(&self, p: &Point2D) -> f64 {
        (self.a * p.x + self.b * p.y + self.c).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleModel {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
}

impl CircleModel {
    /// Circumcircle of three points.
    pub fn through(p1: (f64, f64), p2: (f64, f64), p3: (f64, f64)) -> Result<Self> {
        let (bx, by) = (p2.0 - p1.0, p2.1 - p1.1);
        let (cx, cy) = (p3.0 - p1.0, p3.1 - p1.1);
        let det = 2.0 * (bx * cy - by * cx);
        if det.is_nan() || det.abs() < DEGENERACY_EPS {
            return Err(Error::DegenerateSample("circle sample is collinear".into()));
        }
        let b2 = bx * bx + by * by;
        let c2 = cx * cx + cy * cy;
        let ux = (cy * b2 - by * c2) / det;
        let uy = (bx * c2 - cx * b2) / det;
        let r = ux.hypot(uy);
        let model = Self {
            cx: p1.0 + ux,
            cy: p1.1 + uy,
            r,
        };
        if !(model.cx.is_finite() && model.cy.is_finite() && r.is_finite() && r > 0.0) {
            return Err(Error::DegenerateSample("circle is not finite".into()));
        }
        Ok(model)
    }
}

impl Residual for CircleModel {
    fn residual(&self, p: &Point2D) -> f64 {
        ((p.x - self.cx).hypot(p.y - self.cy) - self.r).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Line,
    Circle,
}

impl Family {
    /// Size of a minimal sample.
    pub fn arity(self) -> usize {
        match self {
            Family::Line => 2,
            Family::Circle => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "lowercase")]
pub enum Model {
    Line(LineModel),
    Circle(CircleModel),
}

impl Model {
    pub fn family(&self) -> Family {
        match self {
            Model::Line(_) => Family::Line,
            Model::Circle(_) => Family::Circle,
        }
    }
}

impl Residual for Model {
    fn residual(&self, p: &Point2D) -> f64 {
        match self {
            Model::Line(l) => l.residual(p),
            Model::Circle(c) => c.residual(p),
        }
    }
}

/// A model instance plus where it came from.
///
/// Sampled hypotheses carry exactly `family.arity()` source ids. Ground-truth
/// models have no source sample and record the structure they generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelHypothesis {
    #[serde(flatten)]
    pub model: Model,
    pub source_ids: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<usize>,
}

impl ModelHypothesis {
    pub fn ground_truth(model: Model, structure: usize) -> Self {
        Self {
            model,
            source_ids: Vec::new(),
            ground_truth: Some(structure),
        }
    }

    pub fn family(&self) -> Family {
        self.model.family()
    }

    pub fn is_ground_truth(&self) -> bool {
        self.ground_truth.is_some()
    }

    pub fn residual(&self, p: &Point2D) -> f64 {
        self.model.residual(p)
    }

    /// Checks the source-sample arity of sampled hypotheses.
    pub fn validate(&self) -> Result<()> {
        if self.ground_truth.is_none() && self.source_ids.len() != self.family().arity() {
            return Err(Error::Parse(format!(
                "{:?} hypothesis has {} source ids, expected {}",
                self.family(),
                self.source_ids.len(),
                self.family().arity()
            )));
        }
        Ok(())
    }
}

/// Instantiates a model of `family` from a minimal sample.
pub fn fit_minimal(family: Family, points: &[Point2D]) -> Result<ModelHypothesis> {
    if points.len() != family.arity() {
        return Err(Error::DegenerateSample(format!(
            "{:?} needs {} points, got {}",
            family,
            family.arity(),
            points.len()
        )));
    }
    let xy = |p: &Point2D| (p.x, p.y);
    let model = match family {
        Family::Line => Model::Line(LineModel::through(xy(&points[0]), xy(&points[1]))?),
        Family::Circle => Model::Circle(CircleModel::through(
            xy(&points[0]),
            xy(&points[1]),
            xy(&points[2]),
        )?),
    };
    Ok(ModelHypothesis {
        model,
        source_ids: points.iter().map(|p| p.id).collect(),
        ground_truth: None,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointSet {
    pub points: Vec<Point2D>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_labels: Option<Vec<i64>>,
}

impl PointSet {
    pub fn validate(&self) -> Result<()> {
        validate_points(&self.points)?;
        if let Some(labels) = &self.gt_labels {
            if labels.len() != self.points.len() {
                return Err(Error::LengthMismatch {
                    left: self.points.len(),
                    right: labels.len(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSet {
    pub models: Vec<ModelHypothesis>,
}

impl ModelSet {
    pub fn validate(&self) -> Result<()> {
        self.models.iter().try_for_each(ModelHypothesis::validate)
    }
}
