//! Upper-bound cost model: `alpha` per human judgement, `beta` per
//! computational step.

/// `alpha L ln L + beta N L^3 ln L`.
pub fn estimated_cost(size: f64, ensemble_size: f64, alpha: f64, beta: f64) -> f64 {
    let l_ln_l = size * size.ln();
    alpha * l_ln_l + beta * ensemble_size * size * size * l_ln_l
}

/// True while `L < (alpha / (beta N))^(1/2)`, i.e. human time still dominates.
pub fn judgements_dominate(size: f64, ensemble_size: f64, alpha: f64, beta: f64) -> bool {
    size * size < alpha / (beta * ensemble_size)
}
