//! Euclidean projection onto the capped simplex `{x >= 0, sum x <= total}`.

/// Projects `raw` onto `{x : x_l >= 0, sum x_l <= total}`.
///
/// When clipping negatives already satisfies the budget that clipped vector is
/// the projection (feasible input comes back unchanged). Otherwise the budget
/// is active and the result is `max(raw - tau, 0)` with the water level `tau`
/// found by sorting.
pub fn project_budget(raw: &[f64], total: f64) -> Vec<f64> {
    let mut out = raw.to_vec();
    project_budget_in_place(&mut out, total);
    out
}

pub(crate) fn project_budget_in_place(x: &mut [f64], total: f64) {
    let total = total.max(0.0);
    let clipped_sum: f64 = x.iter().map(|v| v.max(0.0)).sum();
    if clipped_sum <= total {
        for v in x.iter_mut() {
            *v = v.max(0.0);
        }
        return;
    }
    if total == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    let mut sorted: Vec<f64> = x.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - total) / (k + 1) as f64;
        if u - t > 0.0 {
            tau = t;
        } else {
            break;
        }
    }
    for v in x.iter_mut() {
        *v = (*v - tau).max(0.0);
    }
    // rounding in tau can leave the sum a few ulps above the budget
    let s: f64 = x.iter().sum();
    if s > total {
        let k = total / s;
        x.iter_mut().for_each(|v| *v *= k);
    }
}
