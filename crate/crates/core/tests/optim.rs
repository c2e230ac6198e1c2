//! Optimizer behavior against independent references: a bisection
//! projection, the grid oracle, and closed-form water-filling.

mod common;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use secrelay::channel::{
    uniform_allocation, Allocation, GaussianSubchannel, Mode, ModeAssignment, ParallelChannel,
    PowerBudget,
};
use secrelay::optim::*;
use secrelay::rates::{deaf_condition_holds, lower_bound_value};
use secrelay::Error;

use common::{random_budget, random_channel, random_modes};

fn one(sub: GaussianSubchannel) -> ParallelChannel {
    ParallelChannel::new(vec![sub]).unwrap()
}

fn c(x: f64) -> f64 {
    0.5 * (1.0 + x).log2()
}

/// Projection by bisection on the water level `theta` of
/// `x_l = max(raw_l - theta, 0)`.
fn project_by_bisection(raw: &[f64], total: f64) -> Vec<f64> {
    let clipped: Vec<f64> = raw.iter().map(|v| v.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= total {
        return clipped;
    }
    let (mut lo, mut hi) = (0.0, raw.iter().cloned().fold(f64::MIN, f64::max));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let s: f64 = raw.iter().map(|v| (v - mid).max(0.0)).sum();
        if s > total {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    raw.iter().map(|v| (v - hi).max(0.0)).collect()
}

proptest! {
    #[test]
    fn projection_matches_bisection(
        raw in prop::collection::vec(-5.0..5.0f64, 1..8),
        total in 0.0..6.0f64,
    ) {
        let p = project_budget(&raw, total);
        let want = project_by_bisection(&raw, total);
        for (a, b) in p.iter().zip(&want) {
            prop_assert!((a - b).abs() < 1e-9, "{:?} vs {:?}", p, want);
        }
        prop_assert!(p.iter().all(|v| *v >= 0.0));
        prop_assert!(p.iter().sum::<f64>() <= total * (1.0 + 1e-12) + 1e-12);
    }
}

#[test]
fn projection_examples() {
    assert_eq!(project_budget(&[0.2, 0.3], 1.0), vec![0.2, 0.3]);
    let p = project_budget(&[2.0, 2.0], 2.0);
    assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(p[1], 1.0, epsilon = 1e-12);
    let p = project_budget(&[-1.0, 3.0], 2.0);
    assert_abs_diff_eq!(p[0], 0.0, epsilon = 1e-12);
    assert_abs_diff_eq!(p[1], 2.0, epsilon = 1e-12);
}

#[test]
fn single_nf_subchannel_matches_fine_oracle() {
    let ch = one(GaussianSubchannel::new(1.0, 1.0, 1.0, 4.0, 0.0));
    let b = PowerBudget::new(1.0, 1.0).unwrap();
    let m = ModeAssignment(vec![Mode::Nf]);
    let opt = maximize_lower(&ch, &b, &m, &SolverOptions::default()).unwrap();
    let oracle = grid_oracle(&ch, &b, &BoundKind::Lower(m), 201).unwrap();
    assert_abs_diff_eq!(opt.value, oracle.value, epsilon = 1e-4);
}

/// The optimum of this instance sits on a narrow ridge (relay power about
/// 0.02 on the DF subchannel) that the lattice steps over, so the optimizer
/// ends above the oracle: 6.5e-3 at resolution 101. Asserted here: never
/// below the oracle, and the gap closes as the lattice is refined.
#[test]
fn mixed_modes_seed_7_against_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let subs = (0..2).map(|_| common::random_sub(&mut rng)).collect();
    let ch = ParallelChannel::new(subs).unwrap();
    let b = random_budget(&mut rng);
    let m = ModeAssignment(vec![Mode::Df, Mode::Nf]);
    let opt = maximize_lower(&ch, &b, &m, &SolverOptions::default()).unwrap();
    assert_eq!(lower_bound_value(&ch, &m, &opt.allocation).unwrap(), opt.value);
    let kind = BoundKind::Lower(m);
    let g51 = grid_oracle(&ch, &b, &kind, 51).unwrap().value;
    let g101 = grid_oracle(&ch, &b, &kind, 101).unwrap().value;
    assert!(opt.value >= g101 - 1e-12 && g101 >= g51);
    assert!(opt.value - g101 < opt.value - g51);
    assert!(opt.value - g101 < 1e-2, "{} vs {}", opt.value, g101);
}

#[test]
fn upper_single_subchannel_closed_form() {
    // with rho2 = 0 the eavesdropper sees only p1; at p2 = 1, psi = 1 the
    // rate log2((1 + p1 + 4 + 4 sqrt(p1)) / (1 + p1)) / 2 peaks at
    // p1 = 3 - 2 sqrt(2) with value log2(1 + sqrt(2))
    let ch = one(GaussianSubchannel::new(1.0, 1.0, 1.0, 4.0, 0.0));
    let b = PowerBudget::new(1.0, 1.0).unwrap();
    let r = maximize_upper(&ch, &b, &SolverOptions::default()).unwrap();
    assert_abs_diff_eq!(r.value, (1.0 + 2f64.sqrt()).log2(), epsilon = 1e-7);
    assert_abs_diff_eq!(r.allocation.p1[0], 3.0 - 2.0 * 2f64.sqrt(), epsilon = 1e-4);
    assert_abs_diff_eq!(r.allocation.p2[0], 1.0, epsilon = 1e-9);
    assert_eq!(r.allocation.psi[0], 1.0);
    let oracle = grid_oracle(&ch, &b, &BoundKind::Upper, 401).unwrap();
    assert!(r.value >= oracle.value - 1e-12 && r.value - oracle.value < 1e-3);
}

#[test]
fn upper_dominates_lower_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let o = SolverOptions::default();
    for _ in 0..50 {
        let ch = random_channel(&mut rng, 3);
        let b = random_budget(&mut rng);
        let m = random_modes(&mut rng, ch.len());
        let lo = maximize_lower(&ch, &b, &m, &o).unwrap().value;
        let up = maximize_upper(&ch, &b, &o).unwrap().value;
        let lo_g = grid_oracle(&ch, &b, &BoundKind::Lower(m.clone()), 21).unwrap().value;
        let up_g = grid_oracle(&ch, &b, &BoundKind::Upper, 21).unwrap().value;
        assert!(up >= lo - 1e-9, "optimizer: upper {up} < lower {lo}");
        assert!(up_g >= lo_g - 1e-9, "oracle: upper {up_g} < lower {lo_g}");
    }
}

fn assert_feasible(a: &Allocation, b: &PowerBudget) {
    let tol = 1e-9 * (1.0 + b.p1_total.max(b.p2_total));
    assert!(a.p1.iter().chain(&a.p2).all(|p| *p >= 0.0));
    assert!(a.p1.iter().sum::<f64>() <= b.p1_total + tol);
    assert!(a.p2.iter().sum::<f64>() <= b.p2_total + tol);
    assert!(a.alpha.iter().all(|v| (0.0..=1.0).contains(v)));
    assert!(a.psi.iter().all(|v| (-1.0..=1.0).contains(v)));
}

#[test]
fn results_are_feasible_and_not_below_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let o = SolverOptions::default();
    for _ in 0..30 {
        let ch = random_channel(&mut rng, 4);
        let b = random_budget(&mut rng);
        let m = random_modes(&mut rng, ch.len());
        let lo = maximize_lower(&ch, &b, &m, &o).unwrap();
        assert_feasible(&lo.allocation, &b);
        let uniform = lower_bound_value(&ch, &m, &uniform_allocation(&ch, &b)).unwrap();
        assert!(lo.value >= uniform);
        assert_eq!(lower_bound_value(&ch, &m, &lo.allocation).unwrap(), lo.value);
        assert_feasible(&maximize_upper(&ch, &b, &o).unwrap().allocation, &b);
        let deaf = maximize_deaf(&ch, &b, &o, true).unwrap();
        assert_feasible(&deaf.allocation, &b);
        assert!(deaf_condition_holds(&ch, &deaf.allocation).unwrap());
        assert!(deaf.value >= 0.0);
    }
}

/// Water-filling for `sum C(p/s) - C(p/e)` with `s < e` on every
/// subchannel: each term is concave, so the optimum equalizes derivatives.
fn water_fill_wiretap(s: &[f64], e: &[f64], total: f64) -> f64 {
    let k = 0.5 / std::f64::consts::LN_2;
    let deriv = |l: usize, p: f64| k * (1.0 / (s[l] + p) - 1.0 / (e[l] + p));
    let power_at = |l: usize, lambda: f64| -> f64 {
        if deriv(l, 0.0) <= lambda {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        while deriv(l, hi) > lambda {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if deriv(l, mid) > lambda {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let (mut lo, mut hi) = (0.0, (0..s.len()).map(|l| deriv(l, 0.0)).fold(0.0, f64::max));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let used: f64 = (0..s.len()).map(|l| power_at(l, mid)).sum();
        if used > total {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0..s.len())
        .map(|l| {
            let p = power_at(l, hi);
            c(p / s[l]) - c(p / e[l])
        })
        .sum()
}

#[test]
fn deaf_capacity_without_relay_leakage_is_water_filled_wiretap() {
    let subs = vec![
        GaussianSubchannel::new(1.0, 1.0, 2.0, 1.5, 0.0),
        GaussianSubchannel::new(2.0, 0.5, 3.0, 0.2, 0.0),
        GaussianSubchannel::new(1.0, 2.0, 2.5, 3.0, 0.0),
    ];
    let (s, e): (Vec<f64>, Vec<f64>) = subs.iter().map(|x| (x.sigma2_dest, x.sigma2_eve)).unzip();
    let ch = ParallelChannel::new(subs).unwrap();
    let b = PowerBudget::new(3.0, 2.0).unwrap();
    let o = SolverOptions::default();
    let cap = detect_deaf_capacity(&ch, &b, &o).unwrap();
    let want = water_fill_wiretap(&s, &e, 3.0);
    assert_abs_diff_eq!(cap.capacity.expect("capacity present"), want, epsilon = 1e-7);
    let constrained = maximize_deaf(&ch, &b, &o, true).unwrap().value;
    assert_abs_diff_eq!(constrained, want, epsilon = 1e-7);
}

#[test]
fn deaf_examples() {
    let o = SolverOptions::default();
    let b2 = PowerBudget::new(2.0, 2.0).unwrap();
    let ch = one(GaussianSubchannel::new(1.0, 1.0, 1.0, 4.0, 1.0));
    let unc = maximize_deaf(&ch, &b2, &o, false).unwrap();
    let con = maximize_deaf(&ch, &b2, &o, true).unwrap();
    assert_abs_diff_eq!(unc.value, con.value, epsilon = 1e-9);
    let oracle = grid_oracle(&ch, &b2, &BoundKind::Deaf { require_condition: false }, 201).unwrap();
    assert!(deaf_condition_holds(&ch, &oracle.allocation).unwrap());
    assert!(detect_deaf_capacity(&ch, &b2, &o).unwrap().capacity.is_some());

    let deaf_relay = one(GaussianSubchannel::new(1.0, 1.0, 1.0, 0.0, 1.0));
    let con = maximize_deaf(&deaf_relay, &b2, &o, true).unwrap();
    assert_eq!(con.value, 0.0);
    assert!(con.diagnostics.condition_binding);

    let loud = one(GaussianSubchannel::new(1.0, 1.0, 1.0, 0.0, 4.0));
    let cap = detect_deaf_capacity(&loud, &b2, &o).unwrap();
    assert!(cap.capacity.is_none());
    assert!(cap.margin < 0.0);
}

#[test]
fn more_starts_never_decrease() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..10 {
        let ch = random_channel(&mut rng, 3);
        let b = random_budget(&mut rng);
        let m = random_modes(&mut rng, ch.len());
        let (mut lo, mut up) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for n in 1..=6 {
            let o = SolverOptions { n_starts: n, seed: 3, ..SolverOptions::default() };
            let l = maximize_lower(&ch, &b, &m, &o).unwrap();
            let u = maximize_upper(&ch, &b, &o).unwrap();
            assert!(l.value >= lo && u.value >= up);
            assert!(l.diagnostics.starts_tried >= n);
            lo = l.value;
            up = u.value;
        }
    }
}

#[test]
fn bit_identical_across_runs_and_thread_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let ch = random_channel(&mut rng, 3);
    let b = random_budget(&mut rng);
    let m = random_modes(&mut rng, ch.len());
    let o = SolverOptions { seed: 99, ..SolverOptions::default() };
    let solve = || {
        (
            maximize_lower(&ch, &b, &m, &o).unwrap(),
            maximize_upper(&ch, &b, &o).unwrap(),
            maximize_deaf(&ch, &b, &o, true).unwrap(),
        )
    };
    let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let a = pool(1).install(solve);
    let c = pool(4).install(solve);
    assert_eq!(a, solve());
    assert_eq!(a, c);
}

#[test]
fn gradient_check_examples() {
    let ch = ParallelChannel::new(vec![
        GaussianSubchannel::new(1.0, 1.2, 1.7, 2.0, 0.6),
        GaussianSubchannel::new(0.8, 0.9, 2.2, 1.1, 0.3),
    ])
    .unwrap();
    let b = PowerBudget::new(3.0, 2.0).unwrap();
    let point = Allocation {
        p1: vec![1.1, 1.3],
        p2: vec![0.7, 0.9],
        alpha: vec![0.4, 0.6],
        psi: vec![0.35, -0.2],
    };
    for kind in [BoundKind::Upper, BoundKind::Deaf { require_condition: false }] {
        assert!(finite_diff_check(&kind, &ch, &b, &point).unwrap() <= 1e-4);
    }
    let mut edge = point.clone();
    edge.alpha[0] = 1.0;
    let df = BoundKind::Lower(ModeAssignment(vec![Mode::Df, Mode::Nf]));
    assert!(matches!(
        finite_diff_check(&df, &ch, &b, &edge),
        Err(Error::KinkProximity(_))
    ));
}

#[test]
fn oracle_refinement_and_limits() {
    let ch = one(GaussianSubchannel::new(1.3, 0.7, 1.9, 2.5, 0.8));
    let b = PowerBudget::new(2.0, 1.5).unwrap();
    for kind in [
        BoundKind::Lower(ModeAssignment(vec![Mode::Df])),
        BoundKind::Upper,
        BoundKind::Deaf { require_condition: true },
    ] {
        let coarse = grid_oracle(&ch, &b, &kind, 11).unwrap().value;
        let fine = grid_oracle(&ch, &b, &kind, 101).unwrap().value;
        assert!(fine >= coarse, "{kind:?}: {fine} < {coarse}");
    }
    let big = ParallelChannel::repeated(GaussianSubchannel::unit(), 5).unwrap();
    assert!(matches!(
        grid_oracle(&big, &b, &BoundKind::Upper, 101),
        Err(Error::OracleTooLarge { .. })
    ));
}
