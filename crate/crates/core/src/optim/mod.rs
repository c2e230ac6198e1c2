//! Power-allocation maximization of the secrecy-rate bounds.
//!
//! Every maximizer runs a spectral projected-gradient ascent from several
//! starts: start #0 is the uniform allocation, starts `1..n_starts` are random
//! feasible points drawn from a per-start ChaCha stream (so a larger
//! `n_starts` only adds starts), then a few structured starts (whole budget
//! on one subchannel; relay sized to null the eavesdropper for the upper
//! bound), then caller-supplied warm starts. Starts run in parallel; the best
//! value wins, ties going to the lowest start index.
//!
//! The lower bound is first ascended on relaxed objectives (leaky, then
//! smoothed positive parts and `min`s) and polished on the exact one. The
//! upper bound is monotone in every `psi`, so `psi` is taken at the better
//! endpoint instead of being searched.

mod ascent;
pub mod gradcheck;
mod objective;
pub mod oracle;
pub mod projection;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{Allocation, LinkGains, ModeAssignment, ParallelChannel, PowerBudget};
use crate::error::{Error, Result};
use crate::rates::{BoundResult, Diagnostics};

pub use gradcheck::finite_diff_check;
pub use oracle::{grid_oracle, ORACLE_POINT_LIMIT};
pub use projection::project_budget;

pub(crate) use objective::Problem;

/// Relaxations `(leak, tau)` run before the exact lower-bound objective:
/// a leaky positive part lets starts leave plateaus of clipped summands, and
/// smoothing lets the ascent follow ridges where the two sides of a `min`
/// are equal.
const CONTINUATION: [(f64, f64); 3] = [(0.1, 0.1), (0.01, 0.01), (0.0, 1e-3)];

/// Tolerance on the relay-deaf condition when certifying a capacity.
pub const CONDITION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub n_starts: usize,
    pub max_iters: usize,
    /// Initial spectral step, in units of each block's budget.
    pub step_init: f64,
    /// Stationarity tolerance on the scaled projected-gradient step.
    pub tol: f64,
    pub seed: u64,
    /// Lattice points per axis for [`grid_oracle`].
    pub grid_resolution: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            n_starts: 8,
            max_iters: 2000,
            step_init: 0.25,
            tol: 1e-10,
            seed: 0,
            grid_resolution: 21,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |field, reason| Err(Error::InvalidOption { field, reason });
        if self.n_starts < 1 {
            return bad("n_starts", "must be at least 1");
        }
        if self.max_iters < 1 {
            return bad("max_iters", "must be at least 1");
        }
        if !(self.step_init.is_finite() && self.step_init > 0.0) {
            return bad("step_init", "must be positive and finite");
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return bad("tol", "must be positive and finite");
        }
        if self.grid_resolution < 2 {
            return bad("grid_resolution", "must be at least 2");
        }
        Ok(())
    }
}

/// Which bound to maximize (or check).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// Achievable rate for a fixed mode assignment.
    Lower(ModeAssignment),
    Upper,
    /// Relay-deaf expression; with `require_condition` only allocations
    /// meeting the relay-deaf condition are admissible.
    Deaf { require_condition: bool },
}

/// Outcome of [`detect_deaf_capacity`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeafCapacity {
    /// Secrecy capacity when the relay-deaf bounds meet at the maximizer.
    pub capacity: Option<f64>,
    /// Maximizer of the unconstrained relay-deaf expression.
    pub certificate: Allocation,
    /// Condition margin at the certificate.
    pub margin: f64,
}

pub(crate) fn check_budget(budget: &PowerBudget) -> Result<()> {
    PowerBudget::new(budget.p1_total, budget.p2_total).map(|_| ())
}

/// Starting points in optimizer coordinates: uniform, then random.
fn standard_starts(p: &Problem, opts: &SolverOptions) -> Vec<Vec<f64>> {
    let l = p.len();
    let mut starts = Vec::with_capacity(opts.n_starts);
    let mut x = vec![0.0; 3 * l];
    for i in 0..l {
        x[i] = p.budget.p1_total / l as f64;
        x[l + i] = p.budget.p2_total / l as f64;
        // alpha = 1 and psi = 0 both map to a zero auxiliary coordinate
    }
    starts.push(x);
    for k in 1..opts.n_starts {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(k as u64);
        let mut x = vec![0.0; 3 * l];
        for (block, total) in [(0, p.budget.p1_total), (1, p.budget.p2_total)] {
            let w: Vec<f64> = (0..l).map(|_| rng.sample::<f64, _>(Exp1)).collect();
            let sum: f64 = w.iter().sum();
            for i in 0..l {
                x[block * l + i] = total * w[i] / sum;
            }
        }
        for i in 0..l {
            let (lo, hi) = p.aux_bounds(i);
            let u: f64 = rng.gen();
            // a DF split draws alpha uniformly and stores its coherent fraction
            x[2 * l + i] = if lo == 0.0 && hi == 1.0 {
                (1.0 - u).sqrt()
            } else {
                lo + (hi - lo) * u
            };
        }
        starts.push(x);
    }
    starts
}

/// Whole budget on one subchannel, for each subchannel. Positive parts
/// reward concentration, and such corners are hard to reach from inside.
fn concentrated_starts(p: &Problem) -> Vec<Vec<f64>> {
    let l = p.len();
    if l == 1 {
        return Vec::new();
    }
    (0..l)
        .map(|i| {
            let mut x = vec![0.0; 3 * l];
            x[i] = p.budget.p1_total;
            x[l + i] = p.budget.p2_total;
            x
        })
        .collect()
}

/// Upper bound: uniform source power with the relay sized to cancel the
/// eavesdropper's coherent sum at `psi = -1`, scaled into the relay budget.
/// The best upper-bound allocation often sits in this narrow valley.
fn null_steering_start(p: &Problem) -> Vec<f64> {
    let l = p.len();
    let mut x = vec![0.0; 3 * l];
    let p1 = p.budget.p1_total / l as f64;
    let mut need = 0.0;
    for (i, g) in p.links.iter().enumerate() {
        x[i] = p1;
        x[l + i] = if g.g_re > 0.0 { p1 * g.g_se / g.g_re } else { 0.0 };
        x[2 * l + i] = -1.0;
        need += x[l + i];
    }
    if need > p.budget.p2_total {
        let k = p.budget.p2_total / need;
        x[..2 * l].iter_mut().for_each(|v| *v *= k);
    }
    x
}

/// Runs all starts and returns the best allocation with its value as
/// recomputed from the allocation.
pub(crate) fn solve(
    links: &[LinkGains],
    budget: PowerBudget,
    factor: f64,
    kind: &BoundKind,
    opts: &SolverOptions,
    warm: &[Allocation],
) -> Result<BoundResult> {
    opts.validate()?;
    check_budget(&budget)?;
    let l = links.len();
    if l == 0 {
        return Err(Error::Empty("subchannels"));
    }
    if let BoundKind::Lower(m) = kind {
        m.check_len(l)?;
    }
    for w in warm {
        w.validate(l, &budget)?;
    }
    let p = Problem::new(links, budget, factor, kind);
    let mut starts = standard_starts(&p, opts);
    if matches!(kind, BoundKind::Upper) {
        starts.push(null_steering_start(&p));
    }
    starts.extend(concentrated_starts(&p));
    starts.extend(warm.iter().map(|a| p.coordinates_of(a)));
    for x in starts.iter_mut() {
        p.project(x);
        p.restore(x);
    }
    let stages: Vec<Problem> = match kind {
        BoundKind::Lower(_) => CONTINUATION
            .iter()
            .map(|&(leak, tau)| p.relaxed(leak, tau))
            .chain(std::iter::once(p))
            .collect(),
        BoundKind::Upper => vec![p.with_psi_endpoints()],
        BoundKind::Deaf { .. } => vec![p],
    };
    let last = stages[stages.len() - 1];

    let runs: Vec<(Allocation, f64, usize, bool)> = starts
        .par_iter()
        .map(|x0| {
            let mut x = x0.clone();
            let mut iterations = 0;
            let mut converged = false;
            for stage in &stages {
                let run = ascent::ascend(stage, &x, opts);
                iterations += run.iterations;
                converged = run.converged;
                x = run.x;
            }
            last.prune(&mut x);
            let a = last.allocation_at(&x);
            let v = p.allocation_value(&a);
            // never hand back less than the start itself
            let a0 = p.allocation_at(x0);
            let v0 = p.allocation_value(&a0);
            if v0 > v {
                (a0, v0, iterations, converged)
            } else {
                (a, v, iterations, converged)
            }
        })
        .collect();

    let mut best = 0;
    for (k, r) in runs.iter().enumerate() {
        if r.1 > runs[best].1 {
            best = k;
        }
    }
    let (alloc, value, iterations, converged) = runs[best].clone();
    let mut result = BoundResult {
        value,
        allocation: alloc,
        modes: match kind {
            BoundKind::Lower(m) => Some(m.clone()),
            _ => None,
        },
        diagnostics: Diagnostics {
            iterations,
            total_iterations: runs.iter().map(|r| r.2).sum(),
            starts_tried: runs.len(),
            best_start: best,
            converged,
            condition_binding: false,
        },
    };
    match kind {
        BoundKind::Deaf {
            require_condition: true,
        } if result.value <= 0.0 => {
            let mut a = crate::channel::uniform_allocation_len(l, &budget);
            a.p2.iter_mut().for_each(|v| *v = 0.0);
            result.allocation = a;
            result.value = 0.0;
            result.diagnostics.condition_binding = true;
        }
        BoundKind::Upper | BoundKind::Deaf { .. } if result.value < 0.0 => {
            result.allocation = Allocation::zeros(l);
            result.value = 0.0;
        }
        _ => {}
    }
    Ok(result)
}

/// Maximizes the achievable rate of a mode assignment over powers and the
/// DF power splits. Never below the value at the uniform allocation.
pub fn maximize_lower(
    channel: &ParallelChannel,
    budget: &PowerBudget,
    modes: &ModeAssignment,
    options: &SolverOptions,
) -> Result<BoundResult> {
    solve(
        &channel.gains(),
        *budget,
        1.0,
        &BoundKind::Lower(modes.clone()),
        options,
        &[],
    )
}

/// Maximizes the upper bound over powers and correlations; clipped at zero.
pub fn maximize_upper(
    channel: &ParallelChannel,
    budget: &PowerBudget,
    options: &SolverOptions,
) -> Result<BoundResult> {
    solve(&channel.gains(), *budget, 1.0, &BoundKind::Upper, options, &[])
}

/// Maximizes the relay-deaf expression. With `require_condition` the result
/// satisfies the relay-deaf condition (it is then an achievable rate).
pub fn maximize_deaf(
    channel: &ParallelChannel,
    budget: &PowerBudget,
    options: &SolverOptions,
    require_condition: bool,
) -> Result<BoundResult> {
    solve(
        &channel.gains(),
        *budget,
        1.0,
        &BoundKind::Deaf { require_condition },
        options,
        &[],
    )
}

/// Reports the secrecy capacity when the unconstrained relay-deaf maximizer
/// also satisfies the relay-deaf condition (to [`CONDITION_TOL`]).
pub fn detect_deaf_capacity(
    channel: &ParallelChannel,
    budget: &PowerBudget,
    options: &SolverOptions,
) -> Result<DeafCapacity> {
    let r = maximize_deaf(channel, budget, options, false)?;
    let links = channel.gains();
    let margin = crate::rates::deaf_margin(&links, &r.allocation.p1, &r.allocation.p2);
    Ok(DeafCapacity {
        capacity: (margin >= -CONDITION_TOL).then_some(r.value),
        certificate: r.allocation,
        margin,
    })
}
