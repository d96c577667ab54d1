use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

/// Unnormalized root raised-cosine impulse response at `t` symbol periods.
///
/// The removable singularities at `t = 0` and `|t| = 1/(4β)` use their
/// closed-form limits.
pub(crate) fn rrc_response(t: f64, beta: f64) -> f64 {
    if t == 0.0 {
        return 1.0 - beta + 4.0 * beta / PI;
    }
    let crit = 1.0 / (4.0 * beta);
    if (t.abs() - crit).abs() < 1e-12 {
        let a = PI / (4.0 * beta);
        return beta * FRAC_1_SQRT_2 * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    let num = (PI * t * (1.0 - beta)).sin() + 4.0 * beta * t * (PI * t * (1.0 + beta)).cos();
    let den = PI * t * (1.0 - (4.0 * beta * t).powi(2));
    num / den
}

/// Root raised-cosine taps with `span · sps + 1` coefficients and unit energy.
pub fn rrc_taps(beta: f64, sps: usize, span: usize) -> Result<Vec<f64>> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "roll-off {beta} outside (0, 1)"
        )));
    }
    if sps == 0 || span == 0 || !(span * sps).is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "sps = {sps}, span = {span} must be positive with an even product"
        )));
    }
    let n = span * sps + 1;
    let mid = (n / 2) as f64;
    let mut taps: Vec<f64> = (0..n)
        .map(|k| rrc_response((k as f64 - mid) / sps as f64, beta))
        .collect();
    let norm = taps.iter().map(|v| v * v).sum::<f64>().sqrt();
    taps.iter_mut().for_each(|v| *v /= norm);
    Ok(taps)
}
