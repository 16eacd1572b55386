use crate::AdError;

/// Outcome of a finite-difference gradient check.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub worst_index: usize,
    pub checked: usize,
}

/// Compare an analytic gradient against central finite differences of a
/// scalar function, coordinate by coordinate.
///
/// `eval` recomputes the loss at a perturbed input; `analytic` is the tape's
/// gradient at `x0`; `step` is the half-width of the central difference
/// (1e-5 is the tuned default for f64: truncation and roundoff are both well
/// below the 1e-5 acceptance threshold). `skip` marks coordinates to leave
/// unchecked — callers use it to exclude inputs sitting on a kink (e.g. a
/// relu input at exactly 0, where the two-sided difference is not the
/// subgradient the tape reports).
///
/// The relative error denominator is clamped below at 1e-4 so near-zero
/// gradients are compared absolutely instead of amplifying float noise.
pub fn grad_check<F>(
    mut eval: F,
    analytic: &[f64],
    x0: &[f64],
    step: f64,
    skip: &[bool],
) -> Result<GradCheckReport, AdError>
where
    F: FnMut(&[f64]) -> Result<f64, AdError>,
{
    if analytic.len() != x0.len() {
        return Err(AdError::BadArgument {
            op: "grad_check",
            detail: format!(
                "gradient len {} != input len {}",
                analytic.len(),
                x0.len()
            ),
        });
    }
    if !skip.is_empty() && skip.len() != x0.len() {
        return Err(AdError::BadArgument {
            op: "grad_check",
            detail: "skip mask length mismatch".into(),
        });
    }
    let mut x = x0.to_vec();
    let mut max_rel_err = 0.0f64;
    let mut worst_index = 0;
    let mut checked = 0;
    for i in 0..x.len() {
        if !skip.is_empty() && skip[i] {
            continue;
        }
        let orig = x[i];
        x[i] = orig + step;
        let f_plus = eval(&x)?;
        x[i] = orig - step;
        let f_minus = eval(&x)?;
        x[i] = orig;
        let numeric = (f_plus - f_minus) / (2.0 * step);
        let denom = analytic[i].abs().max(numeric.abs()).max(1e-4);
        let rel = (analytic[i] - numeric).abs() / denom;
        if rel > max_rel_err {
            max_rel_err = rel;
            worst_index = i;
        }
        checked += 1;
    }
    Ok(GradCheckReport {
        max_rel_err,
        worst_index,
        checked,
    })
}
