//! Hyperparameter grids and selection by validation error.

use elastic_core::learn::LossKind;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Candidate values per hyperparameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub etas: Vec<f64>,
    pub margins: Vec<f64>,
    pub regularizations: Vec<f64>,
}

fn powers_of_two(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|k| 2f64.powi(k)).collect()
}

fn powers_of_ten(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi)
        .map(|k| format!("1e{k}").parse().expect("valid literal"))
        .collect()
}

impl Default for Grid {
    /// `eta` in `2^-10..2^0`, `xi` in `10^-7..10^1`, `lambda` in `2^-10..2^-1`.
    fn default() -> Self {
        Self {
            etas: powers_of_two(-10, 0),
            margins: powers_of_ten(-7, 1),
            regularizations: powers_of_two(-10, -1),
        }
    }
}

/// One combination of hyperparameters. Entries a loss does not use are
/// `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub eta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regularization: Option<f64>,
}

impl GridPoint {
    pub fn eta(eta: f64) -> Self {
        Self {
            eta,
            margin: None,
            regularization: None,
        }
    }

    fn key(&self) -> (f64, f64) {
        (self.eta, self.margin.or(self.regularization).unwrap_or(0.0))
    }
}

impl Grid {
    /// Points relevant to `kind`, ordered by `eta`, then `xi` or `lambda`,
    /// ascending.
    pub fn points(&self, kind: LossKind) -> Vec<GridPoint> {
        let mut etas = self.etas.clone();
        etas.sort_by(f64::total_cmp);
        let mut second = match kind {
            LossKind::MarginPerceptron => self.margins.clone(),
            LossKind::LinearSvm => self.regularizations.clone(),
            _ => Vec::new(),
        };
        second.sort_by(f64::total_cmp);
        let mut out = Vec::new();
        for &eta in &etas {
            match kind {
                LossKind::MarginPerceptron => out.extend(second.iter().map(|&xi| GridPoint {
                    margin: Some(xi),
                    ..GridPoint::eta(eta)
                })),
                LossKind::LinearSvm => out.extend(second.iter().map(|&lambda| GridPoint {
                    regularization: Some(lambda),
                    ..GridPoint::eta(eta)
                })),
                _ => out.push(GridPoint::eta(eta)),
            }
        }
        out
    }

    pub fn is_empty_for(&self, kind: LossKind) -> bool {
        self.points(kind).is_empty()
    }
}

/// Outcome of a grid search.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub point: GridPoint,
    /// Validation error of `point`, a fraction.
    pub score: f64,
    pub scores: Vec<(GridPoint, f64)>,
}

/// Score every point with `evaluate` (in parallel) and return the one with
/// the smallest score; ties go to the smaller `eta`, then the smaller `xi` or
/// `lambda`. A point whose training diverges scores `+inf`.
pub fn grid_search<F>(points: &[GridPoint], evaluate: F) -> Result<Selection>
where
    F: Fn(&GridPoint) -> Result<f64> + Sync,
{
    if points.is_empty() {
        return Err(crate::error::BenchError::Usage("empty hyperparameter grid".into()));
    }
    let scores: Vec<(GridPoint, f64)> = points
        .par_iter()
        .map(|p| match evaluate(p) {
            Ok(s) => Ok((*p, s)),
            Err(e) if is_divergence(&e) => Ok((*p, f64::INFINITY)),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, (p, s)) in scores.iter().enumerate() {
        let (bp, bs) = scores[best];
        if *s < bs || (*s == bs && p.key() < bp.key()) {
            best = i;
        }
    }
    Ok(Selection {
        point: scores[best].0,
        score: scores[best].1,
        scores,
    })
}

fn is_divergence(e: &crate::error::BenchError) -> bool {
    use crate::error::BenchError;
    match e {
        BenchError::Core(elastic_core::Error::Diverged { .. }) => true,
        BenchError::Context { source, .. } => is_divergence(source),
        _ => false,
    }
}
