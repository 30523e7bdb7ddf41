//! Error curves over a uniform grid and side-by-side comparisons of two
//! approximators evaluated on the same grid.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::targets::Interval;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub grid: Vec<f64>,
    pub ref_vals: Vec<f64>,
    pub approx_vals: Vec<f64>,
    pub abs_err: Vec<f64>,
    pub mean_l1: f64,
    pub max_abs: f64,
    pub range: Interval,
    /// Content hash of the evaluated artifact, or a free-form label.
    pub approx_id: String,
}

/// The scalar part of an [`ErrorReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub approx_id: String,
    pub range: Interval,
    pub points: usize,
    pub mean_l1: f64,
    pub max_abs: f64,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

impl ErrorReport {
    /// Recomputes the aggregates from the stored vectors. Both are plain
    /// left-to-right reductions, so the check is exact.
    pub fn verify(&self) -> Result<()> {
        let n = self.grid.len();
        if n == 0
            || self.ref_vals.len() != n
            || self.approx_vals.len() != n
            || self.abs_err.len() != n
        {
            return Err(Error::Precondition("report vectors differ in length".into()));
        }
        if mean(&self.abs_err) != self.mean_l1 || max_of(&self.abs_err) != self.max_abs {
            return Err(Error::Precondition(
                "report aggregates do not match its error vector".into(),
            ));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: Self = serde_json::from_str(text)?;
        report.verify()?;
        Ok(report)
    }

    pub fn summary(&self) -> ErrorSummary {
        ErrorSummary {
            approx_id: self.approx_id.clone(),
            range: self.range,
            points: self.grid.len(),
            mean_l1: self.mean_l1,
            max_abs: self.max_abs,
        }
    }

    /// Columns `x, ref, approx, abs_err`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "ref", "approx", "abs_err"])?;
        for i in 0..self.grid.len() {
            w.serialize((
                self.grid[i],
                self.ref_vals[i],
                self.approx_vals[i],
                self.abs_err[i],
            ))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Evaluates `approx` and `reference` on `points` evenly spaced samples of
/// `range`, endpoints included.
pub fn l1_error_curve(
    approx: impl Fn(f64) -> f64,
    reference: impl Fn(f64) -> Result<f64>,
    range: Interval,
    points: usize,
    approx_id: impl Into<String>,
) -> Result<ErrorReport> {
    if points < 2 {
        return Err(Error::Precondition("an error curve needs at least 2 points".into()));
    }
    let grid = range.linspace(points);
    let ref_vals = grid.iter().map(|&x| reference(x)).collect::<Result<Vec<_>>>()?;
    let approx_vals: Vec<f64> = grid.iter().map(|&x| approx(x)).collect();
    let abs_err: Vec<f64> = approx_vals
        .iter()
        .zip(&ref_vals)
        .map(|(a, r)| (a - r).abs())
        .collect();
    Ok(ErrorReport {
        mean_l1: mean(&abs_err),
        max_abs: max_of(&abs_err),
        grid,
        ref_vals,
        approx_vals,
        abs_err,
        range,
        approx_id: approx_id.into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub a_id: String,
    pub b_id: String,
    /// `a.abs_err / b.abs_err` per point; 1 where both are zero.
    pub ratios: Vec<f64>,
    /// Points where `a` is strictly more accurate.
    pub a_wins: usize,
    pub b_wins: usize,
    pub ties: usize,
    /// `a.mean_l1 / b.mean_l1`.
    pub aggregate_ratio: f64,
}

fn ratio(a: f64, b: f64) -> f64 {
    if a == b {
        1.0
    } else {
        a / b
    }
}

pub fn compare(a: &ErrorReport, b: &ErrorReport) -> Result<ComparisonSummary> {
    if a.grid != b.grid {
        return Err(Error::Precondition(
            "reports were evaluated on different grids".into(),
        ));
    }
    let (mut a_wins, mut b_wins, mut ties) = (0, 0, 0);
    let ratios = a
        .abs_err
        .iter()
        .zip(&b.abs_err)
        .map(|(&ea, &eb)| {
            match ea.partial_cmp(&eb) {
                Some(std::cmp::Ordering::Less) => a_wins += 1,
                Some(std::cmp::Ordering::Greater) => b_wins += 1,
                _ => ties += 1,
            }
            ratio(ea, eb)
        })
        .collect();
    Ok(ComparisonSummary {
        a_id: a.approx_id.clone(),
        b_id: b.approx_id.clone(),
        ratios,
        a_wins,
        b_wins,
        ties,
        aggregate_ratio: ratio(a.mean_l1, b.mean_l1),
    })
}
