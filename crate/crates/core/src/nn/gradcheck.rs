/// `|a - n| / max(1e-12, |a| + |n|)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-12)
}

/// Largest relative error between `analytic` and central differences of `f`
/// around `theta`, over all coordinates.
pub fn finite_diff_check<F: FnMut(&[f64]) -> f64>(mut f: F, theta: &[f64], analytic: &[f64], h: f64) -> f64 {
    assert_eq!(theta.len(), analytic.len());
    let mut probe = theta.to_vec();
    let mut worst = 0.0f64;
    for k in 0..theta.len() {
        probe[k] = theta[k] + h;
        let up = f(&probe);
        probe[k] = theta[k] - h;
        let down = f(&probe);
        probe[k] = theta[k];
        worst = worst.max(relative_error(analytic[k], (up - down) / (2.0 * h)));
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    /// Coordinates scored.
    pub checked: usize,
    /// Coordinates where both gradients sit below the noise floor.
    pub below_floor: usize,
}

/// [`finite_diff_check`] that skips coordinates whose analytic and numeric
/// gradients are both smaller than `floor`, where central differences are
/// dominated by rounding noise (about `eps · |f| / h`).
pub fn finite_diff_report<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    theta: &[f64],
    analytic: &[f64],
    h: f64,
    floor: f64,
) -> GradCheckReport {
    assert_eq!(theta.len(), analytic.len());
    let mut probe = theta.to_vec();
    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        checked: 0,
        below_floor: 0,
    };
    for k in 0..theta.len() {
        probe[k] = theta[k] + h;
        let up = f(&probe);
        probe[k] = theta[k] - h;
        let down = f(&probe);
        probe[k] = theta[k];
        let numeric = (up - down) / (2.0 * h);
        if analytic[k].abs().max(numeric.abs()) < floor {
            report.below_floor += 1;
        } else {
            report.checked += 1;
            report.max_rel_err = report.max_rel_err.max(relative_error(analytic[k], numeric));
        }
    }
    report
}
