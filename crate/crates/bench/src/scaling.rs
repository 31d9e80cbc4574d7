use serde::{Deserialize, Serialize};

use crate::sweep::SweepRow;
use crate::BenchError;

/// Least-squares fit `mean_questions ~ slope * L ln L + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Needs at least three distinct `L` at one fixed `(p, N, epsilon, strategy)`.
pub fn fit_scaling(rows: &[SweepRow]) -> Result<ScalingFit, BenchError> {
    let first = rows
        .first()
        .ok_or_else(|| BenchError::InsufficientData("no rows".into()))?;
    if let Some(r) = rows.iter().find(|r| {
        r.p != first.p
            || r.ensemble_size != first.ensemble_size
            || r.epsilon != first.epsilon
            || r.strategy != first.strategy
    }) {
        return Err(BenchError::InsufficientData(format!(
            "rows mix settings: (p={}, N={}, eps={}, {}) vs (p={}, N={}, eps={}, {})",
            first.p, first.ensemble_size, first.epsilon, first.strategy, r.p, r.ensemble_size, r.epsilon, r.strategy
        )));
    }
    let mut sizes: Vec<usize> = rows.iter().map(|r| r.size).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 3 {
        return Err(BenchError::InsufficientData(format!(
            "{} distinct L values, need at least 3",
            sizes.len()
        )));
    }

    let xs: Vec<f64> = rows.iter().map(|r| r.size as f64 * (r.size as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mean_questions).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(ScalingFit {
        slope,
        intercept,
        r_squared,
    })
}
