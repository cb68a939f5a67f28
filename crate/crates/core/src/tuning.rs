//! Cross-validated grid search over the L1/L2 coefficients.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{split_corpus, Corpus};
use crate::crf::{train, TrainConfig};
use crate::error::{Error, Result};
use crate::eval::evaluate;

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub c1_values: Vec<f64>,
    pub c2_values: Vec<f64>,
    pub folds: usize,
    pub seed: u64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            c1_values: vec![0.0, 0.05, 0.5, 1.0],
            c2_values: vec![0.01, 0.1, 1.0],
            folds: 5,
            seed: 42,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, values) in [("c1", &self.c1_values), ("c2", &self.c2_values)] {
            if values.is_empty() {
                return Err(Error::InvalidArgument(format!("{name} grid is empty")));
            }
            if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::InvalidArgument(format!(
                    "{name} grid has a negative or non-finite value"
                )));
            }
            for (i, a) in values.iter().enumerate() {
                if values[..i].contains(a) {
                    return Err(Error::InvalidArgument(format!("{name} grid repeats {a}")));
                }
            }
        }
        if self.folds < 2 {
            return Err(Error::InvalidArgument("folds must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRow {
    pub c1: f64,
    pub c2: f64,
    pub fold_scores: Vec<f64>,
    pub mean_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridResult {
    /// In (c1, c2) grid order.
    pub rows: Vec<GridRow>,
    pub best_c1: f64,
    pub best_c2: f64,
}

/// Trains and scores every (c1, c2, fold) combination.
///
/// Jobs run in parallel; the table is assembled in grid order, so the result
/// does not depend on scheduling.
pub fn grid_search(corpus: &Corpus, grid: &GridSpec, base: &TrainConfig) -> Result<GridResult> {
    grid.validate()?;
    let splits = split_corpus(corpus, grid.folds, grid.seed)?;
    let points: Vec<(f64, f64)> = grid
        .c1_values
        .iter()
        .flat_map(|&c1| grid.c2_values.iter().map(move |&c2| (c1, c2)))
        .collect();
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..grid.folds).map(move |f| (p, f)))
        .collect();

    let scores: Vec<f64> = jobs
        .par_iter()
        .map(|&(p, fold)| {
            let (c1, c2) = points[p];
            let config = TrainConfig { c1, c2, ..base.clone() };
            let (train_part, held_out) = &splits[fold];
            let run = || -> Result<f64> {
                let model = train(train_part, &config)?;
                let pred = model.tag_corpus(held_out)?;
                Ok(evaluate(held_out, &pred)?.weighted_f1)
            };
            run().map_err(|e| Error::GridPoint {
                c1,
                c2,
                fold,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let rows: Vec<GridRow> = points
        .iter()
        .zip(scores.chunks(grid.folds))
        .map(|(&(c1, c2), fold_scores)| GridRow {
            c1,
            c2,
            fold_scores: fold_scores.to_vec(),
            mean_f1: fold_scores.iter().sum::<f64>() / fold_scores.len() as f64,
        })
        .collect();

    let best = rows
        .iter()
        .reduce(|best, row| {
            let better = row.mean_f1 > best.mean_f1
                || (row.mean_f1 == best.mean_f1 && (row.c1 < best.c1 || (row.c1 == best.c1 && row.c2 < best.c2)));
            if better {
                row
            } else {
                best
            }
        })
        .expect("grid is non-empty");
    let (best_c1, best_c2) = (best.c1, best.c2);
    Ok(GridResult { rows, best_c1, best_c2 })
}

impl GridResult {
    /// Header, one row per grid point, then `best c1=<v> c2=<v>`.
    pub fn to_tsv(&self) -> String {
        let folds = self.rows.first().map_or(0, |r| r.fold_scores.len());
        let mut out = String::from("c1\tc2");
        for k in 0..folds {
            let _ = write!(out, "\tfold{k}");
        }
        out.push_str("\tmean\n");
        for row in &self.rows {
            let _ = write!(out, "{}\t{}", row.c1, row.c2);
            for s in &row.fold_scores {
                let _ = write!(out, "\t{s:.4}");
            }
            let _ = writeln!(out, "\t{:.4}", row.mean_f1);
        }
        out.push_str(&self.best_line());
        out.push('\n');
        out
    }

    pub fn best_line(&self) -> String {
        format!("best c1={} c2={}", self.best_c1, self.best_c2)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
