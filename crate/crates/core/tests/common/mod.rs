//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use secrelay::channel::{
    Allocation, GaussianSubchannel, Mode, ModeAssignment, ParallelChannel, PowerBudget,
};

/// Variances in [0.25, 4], ratios in [0, 4].
pub fn random_sub<R: Rng>(rng: &mut R) -> GaussianSubchannel {
    GaussianSubchannel::new(
        rng.gen_range(0.25..4.0),
        rng.gen_range(0.25..4.0),
        rng.gen_range(0.25..4.0),
        rng.gen_range(0.0..4.0),
        rng.gen_range(0.0..4.0),
    )
}

pub fn random_channel<R: Rng>(rng: &mut R, max_len: usize) -> ParallelChannel {
    let len = rng.gen_range(1..=max_len);
    ParallelChannel::new((0..len).map(|_| random_sub(rng)).collect()).unwrap()
}

/// Budgets in [0.5, 8].
pub fn random_budget<R: Rng>(rng: &mut R) -> PowerBudget {
    PowerBudget::new(rng.gen_range(0.5..8.0), rng.gen_range(0.5..8.0)).unwrap()
}

pub fn random_modes<R: Rng>(rng: &mut R, len: usize) -> ModeAssignment {
    ModeAssignment(
        (0..len)
            .map(|_| if rng.gen_bool(0.5) { Mode::Df } else { Mode::Nf })
            .collect(),
    )
}

/// Eavesdropper identical to the destination on every subchannel.
pub fn symmetric_channel<R: Rng>(rng: &mut R, max_len: usize) -> ParallelChannel {
    let len = rng.gen_range(1..=max_len);
    let subs = (0..len)
        .map(|_| {
            let s2 = rng.gen_range(0.25..4.0);
            let rho = rng.gen_range(0.0..4.0);
            GaussianSubchannel::new(rng.gen_range(0.25..4.0), s2, s2, rho, rho)
        })
        .collect();
    ParallelChannel::new(subs).unwrap()
}

/// Strictly interior allocation using `fill` of each budget.
pub fn random_interior<R: Rng>(rng: &mut R, len: usize, budget: &PowerBudget, fill: f64) -> Allocation {
    let mut split = |total: f64| -> Vec<f64> {
        let w: Vec<f64> = (0..len).map(|_| rng.gen_range(0.2..1.0)).collect();
        let s: f64 = w.iter().sum();
        w.iter().map(|v| v / s * total * fill).collect()
    };
    let p1 = split(budget.p1_total);
    let p2 = split(budget.p2_total);
    Allocation {
        p1,
        p2,
        alpha: (0..len).map(|_| rng.gen_range(0.1..0.9)).collect(),
        psi: (0..len).map(|_| rng.gen_range(-0.9..0.9)).collect(),
    }
}
