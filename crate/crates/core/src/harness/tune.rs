//! Threshold grid search.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::evaluate::{check_dataset, evaluate};
use super::metrics::Outcome;
use super::pipeline::{ClaimScores, EvidenceInput, EvidenceRegime, Pipeline};
use crate::error::{Error, Result};
use crate::model::Claim;
use crate::retrieval::SentenceIndex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdGrid {
    pub supports: Vec<f64>,
    pub refutes: Vec<f64>,
    pub uschema: Vec<f64>,
}

impl ThresholdGrid {
    /// `n` evenly spaced values from `lo` to `hi` inclusive on every axis.
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Self {
        let axis: Vec<f64> = match n {
            0 => Vec::new(),
            1 => vec![lo],
            // rounded so that e.g. 0.1..0.9 in five steps gives 0.7 rather than 0.7000000000000001
            _ => (0..n).map(|i| round12(lo + (hi - lo) * i as f64 / (n - 1) as f64)).collect(),
        };
        Self { supports: axis.clone(), refutes: axis.clone(), uschema: axis }
    }

    fn validate(&self) -> Result<()> {
        for (name, axis) in [("supports", &self.supports), ("refutes", &self.refutes), ("uschema", &self.uschema)] {
            if axis.is_empty() {
                return Err(Error::Config(format!("{name} threshold grid is empty")));
            }
            if axis.iter().any(|t| !(0.0..=1.0).contains(t)) {
                return Err(Error::Config(format!("{name} threshold grid has values outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// Grid points with `t_s` varying slowest and `t_us` fastest.
    pub fn points(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.supports.len() * self.refutes.len() * self.uschema.len());
        for &s in &self.supports {
            for &r in &self.refutes {
                for &u in &self.uschema {
                    out.push((s, r, u));
                }
            }
        }
        out
    }
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub t_s: f64,
    pub t_r: f64,
    pub t_us: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearch {
    pub best: GridPoint,
    pub surface: Vec<GridPoint>,
}

/// Highest accuracy; ties go to the smallest `t_s`, then `t_r`, then `t_us`.
pub fn best_point(surface: &[GridPoint]) -> Option<GridPoint> {
    surface.iter().copied().reduce(|best, p| {
        let better = p.accuracy > best.accuracy
            || (p.accuracy == best.accuracy
                && (p.t_s, p.t_r, p.t_us).partial_cmp(&(best.t_s, best.t_r, best.t_us)) == Some(std::cmp::Ordering::Less));
        if better {
            p
        } else {
            best
        }
    })
}

/// Scores each claim once, then evaluates accuracy at every grid point from the
/// cached scores. Claims that fail to score are left out of every point.
pub fn grid_search_thresholds(
    pipeline: &Pipeline,
    claims: &[Claim],
    index: &SentenceIndex,
    regime: EvidenceRegime,
    grid: &ThresholdGrid,
) -> Result<GridSearch> {
    grid.validate()?;
    check_dataset(claims)?;
    let cached: Vec<Result<ClaimScores>> = claims
        .par_iter()
        .map(|c| {
            let evidence = pipeline.regime_evidence(c, index, regime)?;
            pipeline.score_claim(c, EvidenceInput::Given(&evidence))
        })
        .collect();
    let mut scores = Vec::with_capacity(cached.len());
    for r in cached {
        match r {
            Ok(s) => scores.push(s),
            Err(e) if e.is_transport() => return Err(e),
            Err(_) => {}
        }
    }
    scores.sort_by_key(|s| s.claim.id);

    let uschema_on = pipeline.uschema().is_some();
    let surface: Vec<GridPoint> = grid
        .points()
        .into_par_iter()
        .map(|(t_s, t_r, t_us)| {
            let mut cfg = pipeline.verify;
            cfg.threshold_supports = t_s;
            cfg.threshold_refutes = t_r;
            let correct = scores
                .iter()
                .filter(|s| {
                    let trace = s.decide(&cfg, uschema_on.then_some(t_us));
                    Outcome::from_trace(&s.claim, &trace).is_some_and(|o| o.correct())
                })
                .count();
            GridPoint { t_s, t_r, t_us, accuracy: accuracy(correct, scores.len()) }
        })
        .collect();
    Ok(GridSearch { best: best_point(&surface).expect("grid is non-empty"), surface })
}

fn accuracy(correct: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        correct as f64 / n as f64
    }
}

/// Re-runs the full pipeline at every grid point. Slow; used to check the cached search.
pub fn naive_grid_search(
    pipeline: &Pipeline,
    claims: &[Claim],
    index: &SentenceIndex,
    regime: EvidenceRegime,
    grid: &ThresholdGrid,
) -> Result<GridSearch> {
    grid.validate()?;
    let mut surface = Vec::new();
    for (t_s, t_r, t_us) in grid.points() {
        let p = pipeline.with_thresholds(t_s, t_r, t_us);
        let report = evaluate(&p, claims, index, regime)?.report;
        surface.push(GridPoint { t_s, t_r, t_us, accuracy: report.accuracy });
    }
    Ok(GridSearch { best: best_point(&surface).expect("grid is non-empty"), surface })
}

/// `t_s,t_r,t_us,accuracy` rows in grid order.
pub fn surface_csv(surface: &[GridPoint]) -> String {
    let mut s = String::from("t_s,t_r,t_us,accuracy\n");
    for p in surface {
        let _ = writeln!(s, "{},{},{},{}", p.t_s, p.t_r, p.t_us, p.accuracy);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gp(t_s: f64, t_r: f64, t_us: f64, accuracy: f64) -> GridPoint {
        GridPoint { t_s, t_r, t_us, accuracy }
    }

    #[test]
    fn ties_prefer_small_thresholds() {
        let surface = [gp(0.5, 0.5, 0.5, 0.7), gp(0.3, 0.9, 0.5, 0.7), gp(0.3, 0.2, 0.5, 0.7), gp(0.9, 0.9, 0.9, 0.6)];
        assert_eq!(best_point(&surface), Some(gp(0.3, 0.2, 0.5, 0.7)));
        assert_eq!(best_point(&surface[3..]), Some(surface[3]));
        assert_eq!(best_point(&[]), None);
    }

    #[test]
    fn uniform_axes() {
        let g = ThresholdGrid::uniform(0.1, 0.9, 5);
        assert_eq!(g.supports.len(), 5);
        assert_eq!(g.supports, vec![0.1, 0.3, 0.5, 0.7, 0.9]);
        assert_eq!(g.points().len(), 125);
        assert_eq!(ThresholdGrid::uniform(0.4, 0.9, 1).supports, vec![0.4]);
    }

    #[test]
    fn csv_layout() {
        let csv = surface_csv(&[gp(0.5, 0.25, 0.5, 0.7)]);
        assert_eq!(csv, "t_s,t_r,t_us,accuracy\n0.5,0.25,0.5,0.7\n");
    }
}
