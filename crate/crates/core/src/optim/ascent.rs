//! Single-start spectral projected ascent: Barzilai-Borwein steps in scaled
//! coordinates with a nonmonotone backtracking line search.

use super::objective::Problem;
use super::SolverOptions;

/// Backtracking below this step length counts as a stall.
const MIN_STEP: f64 = 1e-12;
/// Safeguards on the spectral step, in scaled units.
const BB_MIN: f64 = 1e-10;
const BB_MAX: f64 = 1e6;
/// Length of the value history for the nonmonotone acceptance test.
const MEMORY: usize = 10;
const ARMIJO: f64 = 1e-4;

#[derive(Debug, Clone)]
pub(crate) struct Run {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Largest per-coordinate move of the projected gradient step, in units of
/// each coordinate's scale. Zero exactly at a stationary point of the
/// scaled problem.
fn stationarity(p: &Problem, x: &[f64], g: &[f64], s: &[f64], buf: &mut [f64]) -> f64 {
    for i in 0..x.len() {
        buf[i] = x[i] + s[i] * s[i] * g[i];
    }
    p.project(buf);
    let mut m = 0.0f64;
    for i in 0..x.len() {
        if s[i] > 0.0 {
            m = m.max((buf[i] - x[i]).abs() / s[i]);
        }
    }
    m
}

pub(crate) fn ascend(p: &Problem, x0: &[f64], opts: &SolverOptions) -> Run {
    let n = p.dim();
    let s = p.scales();
    let mut x = x0.to_vec();
    p.project(&mut x);
    p.restore(&mut x);
    let mut fx = p.value(&x);
    let mut g = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut history = vec![fx; 1];
    let (mut best, mut f_best) = (x.clone(), fx);
    let mut lambda = opts.step_init;
    let mut converged = false;
    let mut iterations = 0;

    p.gradient(&x, &mut g);
    p.tangent(&x, &s, &mut g);
    while iterations < opts.max_iters {
        iterations += 1;
        if g.iter().any(|v| !v.is_finite()) {
            break;
        }
        if stationarity(p, &x, &g, &s, &mut y) < opts.tol {
            converged = true;
            break;
        }
        for i in 0..n {
            y[i] = x[i] + lambda * s[i] * s[i] * g[i];
        }
        p.project(&mut y);
        // sufficient increase measured by the scaled step length; the
        // directional derivative is unbounded where a power is zero
        let mut slope = 0.0;
        for i in 0..n {
            d[i] = y[i] - x[i];
            if s[i] > 0.0 {
                slope += (d[i] / s[i]).powi(2);
            }
        }
        let f_ref = history.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut a = 1.0;
        let mut accepted = None;
        while a >= MIN_STEP {
            for i in 0..n {
                y[i] = x[i] + a * d[i];
            }
            p.restore(&mut y);
            let fy = p.value(&y);
            if fy.is_finite() && fy > f_ref + ARMIJO * a * slope {
                accepted = Some(fy);
                break;
            }
            a *= 0.5;
        }
        let Some(fy) = accepted else {
            converged = true;
            break;
        };
        p.gradient(&y, &mut g_new);
        p.tangent(&y, &s, &mut g_new);
        // spectral step from the scaled secant pair
        let (mut ss, mut sg) = (0.0, 0.0);
        for i in 0..n {
            if s[i] > 0.0 {
                let dz = (y[i] - x[i]) / s[i];
                ss += dz * dz;
                sg -= dz * (g_new[i] - g[i]) * s[i];
            }
        }
        lambda = if sg > 0.0 {
            (ss / sg).clamp(BB_MIN, BB_MAX)
        } else {
            BB_MAX
        };
        std::mem::swap(&mut x, &mut y);
        std::mem::swap(&mut g, &mut g_new);
        fx = fy;
        if fx > f_best {
            f_best = fx;
            best.copy_from_slice(&x);
        }
        if history.len() == MEMORY {
            history.remove(0);
        }
        history.push(fx);
    }
    Run {
        x: best,
        iterations,
        converged,
    }
}
