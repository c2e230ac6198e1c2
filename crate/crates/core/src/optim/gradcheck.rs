//! Finite-difference validation of the optimizer's gradients.
//!
//! Differences are taken in optimizer coordinates (`beta = sqrt(1 - alpha)`
//! on DF subchannels). Two central differences with relative steps `1e-4`
//! and `1e-5` are combined by Richardson extrapolation and compared against
//! the analytic gradient.

use crate::channel::{Allocation, ParallelChannel, PowerBudget};
use crate::error::{Error, Result};

use super::{check_budget, BoundKind, Problem};

const STEPS: [f64; 2] = [1e-4, 1e-5];

/// Maximum relative gradient discrepancy `|fd - grad|_inf / |grad|_inf` at
/// `point`.
///
/// The point must be strictly interior (positive powers, `alpha` in (0,1)
/// on DF subchannels, `psi` in (-1,1) for the upper bound) with every stencil
/// point inside the box, and no positive-part argument or `min` comparison
/// may change sign across the stencil.
pub fn finite_diff_check(
    objective: &BoundKind,
    channel: &ParallelChannel,
    budget: &PowerBudget,
    point: &Allocation,
) -> Result<f64> {
    check_budget(budget)?;
    let links = channel.gains();
    let len = links.len();
    if let BoundKind::Lower(m) = objective {
        m.check_len(len)?;
    }
    point.validate(len, budget)?;
    let p = Problem::new(&links, *budget, 1.0, objective);
    let x = p.coordinates_of(point);
    let dim = x.len();

    // step per coordinate, and interior check against the widest stencil
    let mut h = vec![0.0; dim];
    for i in 0..dim {
        let block = i / len;
        let l = i % len;
        let (lo, hi) = if block < 2 {
            (0.0, f64::INFINITY)
        } else {
            p.aux_bounds(l)
        };
        if block == 2 && lo == hi {
            continue;
        }
        let step = STEPS[0] * x[i].abs().max(1.0);
        h[i] = step;
        if !(x[i] - step > lo && x[i] + step < hi) {
            let name = ["p1", "p2", "aux"][block];
            return Err(Error::KinkProximity(format!(
                "{name}[{l}] = {} is within {step:e} of its bound",
                x[i]
            )));
        }
    }

    let base_sig = p.branch_signature(&x);
    if base_sig.contains(&0) {
        return Err(Error::KinkProximity("a branch argument is exactly zero".into()));
    }
    let mut grad = vec![0.0; dim];
    p.gradient(&x, &mut grad);

    let mut y = x.clone();
    let mut err_num = 0.0f64;
    for i in 0..dim {
        if h[i] == 0.0 {
            continue;
        }
        let mut d = [0.0; 2];
        for (k, &rel) in STEPS.iter().enumerate() {
            let step = h[i] * rel / STEPS[0];
            let mut f = [0.0; 2];
            for (s, sign) in [(0, 1.0), (1, -1.0)] {
                y[i] = x[i] + sign * step;
                if p.branch_signature(&y) != base_sig {
                    return Err(Error::KinkProximity(format!(
                        "branch changes along coordinate {i} within {step:e}"
                    )));
                }
                f[s] = p.value(&y);
            }
            y[i] = x[i];
            d[k] = (f[0] - f[1]) / (2.0 * step);
        }
        // central differences are O(h^2): extrapolate with ratio 10
        let richardson = (100.0 * d[1] - d[0]) / 99.0;
        err_num = err_num.max((richardson - grad[i]).abs());
    }
    let scale = grad.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    Ok(err_num / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{GaussianSubchannel, Mode, ModeAssignment};

    fn channel() -> ParallelChannel {
        ParallelChannel::new(vec![
            GaussianSubchannel::new(0.5, 1.0, 2.0, 2.0, 0.5),
            GaussianSubchannel::new(1.0, 0.8, 1.5, 1.2, 0.3),
        ])
        .unwrap()
    }

    fn point() -> Allocation {
        Allocation {
            p1: vec![1.2, 0.7],
            p2: vec![0.9, 1.1],
            alpha: vec![0.6, 0.3],
            psi: vec![0.4, -0.2],
        }
    }

    #[test]
    fn smooth_points_pass() {
        let b = PowerBudget::new(3.0, 3.0).unwrap();
        for kind in [BoundKind::Upper, BoundKind::Deaf { require_condition: false }] {
            let e = finite_diff_check(&kind, &channel(), &b, &point()).unwrap();
            assert!(e <= 1e-4, "{kind:?}: {e}");
        }
    }

    #[test]
    fn alpha_at_boundary_rejected() {
        let b = PowerBudget::new(3.0, 3.0).unwrap();
        let mut pt = point();
        pt.alpha[0] = 1.0;
        let kind = BoundKind::Lower(ModeAssignment::all(2, Mode::Df));
        let e = finite_diff_check(&kind, &channel(), &b, &pt).unwrap_err();
        assert!(matches!(e, Error::KinkProximity(_)));
    }

    #[test]
    fn zero_power_rejected() {
        let b = PowerBudget::new(3.0, 3.0).unwrap();
        let mut pt = point();
        pt.p2[1] = 0.0;
        assert!(matches!(
            finite_diff_check(&BoundKind::Upper, &channel(), &b, &pt),
            Err(Error::KinkProximity(_))
        ));
    }

    #[test]
    fn kink_detected_on_symmetric_channel() {
        // identical receivers: every DF destination gap is exactly zero
        let ch = ParallelChannel::repeated(GaussianSubchannel::unit(), 2).unwrap();
        let b = PowerBudget::new(3.0, 3.0).unwrap();
        let kind = BoundKind::Lower(ModeAssignment::all(2, Mode::Df));
        assert!(matches!(
            finite_diff_check(&kind, &ch, &b, &point()),
            Err(Error::KinkProximity(_))
        ));
    }
}
