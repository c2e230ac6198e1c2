//! Exhaustive lattice search, used as an independent reference for the
//! optimizer.
//!
//! Powers live on the lattice `P * i / (r - 1)` with `sum i <= r - 1` per
//! node; `alpha` and `psi` live on `r`-point lattices spanning their boxes.
//! The power lattice is enumerated point by point. The `alpha`/`psi` axes are
//! eliminated exactly rather than enumerated:
//!
//! * the upper bound is separable in `psi`, so each subchannel keeps its best
//!   `psi` per power pair;
//! * a DF subchannel's destination gap is monotone in `alpha` and its relay
//!   gap is nondecreasing, so either `alpha = 1` dominates or the subchannel
//!   is a one-dimensional tradeoff front, and the best split of
//!   `min(sum D, sum R)` over fronts is found by bisection / two pointers.

use crate::channel::{Allocation, LinkGains, Mode, ParallelChannel, PowerBudget};
use crate::error::{Error, Result};
use crate::rates::{
    coherent_fraction, deaf_condition_sides, deaf_term, df_inner, nf_inner, pos, upper_term,
    BoundResult, Diagnostics,
};

use super::{check_budget, BoundKind, Problem};

/// Maximum number of power-lattice points (both nodes together), and of
/// entries in the per-subchannel DF tables (`r^3` each).
pub const ORACLE_POINT_LIMIT: u128 = 100_000_000;

fn binomial(n: u128, k: u128) -> u128 {
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Number of joint power-lattice points for `len` subchannels.
pub fn oracle_point_count(len: usize, resolution: usize) -> u128 {
    let steps = resolution.saturating_sub(1) as u128;
    let per_node = binomial(steps + len as u128, len as u128);
    per_node.saturating_mul(per_node)
}

/// All `len`-vectors of non-negative integers with sum at most `steps`,
/// flattened, in lexicographic order.
fn compositions(len: usize, steps: usize) -> Vec<u32> {
    fn rec(out: &mut Vec<u32>, cur: &mut Vec<u32>, len: usize, left: usize) {
        if cur.len() == len {
            out.extend_from_slice(cur);
            return;
        }
        for v in 0..=left {
            cur.push(v as u32);
            rec(out, cur, len, left - v);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut out, &mut Vec::with_capacity(len), len, steps);
    out
}

fn lattice(total: f64, steps: usize) -> Vec<f64> {
    (0..=steps)
        .map(|i| total * i as f64 / steps as f64)
        .collect()
}

fn psi_level(k: usize, steps: usize) -> f64 {
    (2.0 * k as f64 - steps as f64) / steps as f64
}

fn alpha_level(a: usize, steps: usize) -> f64 {
    a as f64 / steps as f64
}

/// A DF tradeoff front: destination gap nonincreasing, relay gap
/// nondecreasing in the `alpha` index.
#[derive(Clone, Copy)]
struct Front<'a> {
    d: &'a [f64],
    r: &'a [f64],
}

#[inline]
fn phi(cd: f64, cr: f64, d: f64, r: f64) -> f64 {
    (cd + d).min(cr + r)
}

fn best_one(cd: f64, cr: f64, f: Front) -> (f64, usize) {
    let n = f.d.len();
    let (mut lo, mut hi) = (0, n);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if cr + f.r[mid] < cd + f.d[mid] {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    let k = lo;
    let mut best = (f64::NEG_INFINITY, 0);
    for a in [k.wrapping_sub(1), k] {
        if a < n {
            let v = phi(cd, cr, f.d[a], f.r[a]);
            if v > best.0 || (v == best.0 && a < best.1) {
                best = (v, a);
            }
        }
    }
    best
}

fn best_two(cd: f64, cr: f64, f1: Front, f2: Front) -> (f64, usize, usize) {
    let n = f1.d.len();
    let mut best = (f64::NEG_INFINITY, 0, 0);
    let mut k = n;
    for a1 in 0..n {
        let cd1 = cd + f1.d[a1];
        let cr1 = cr + f1.r[a1];
        while k > 0 && cr1 + f2.r[k - 1] >= cd1 + f2.d[k - 1] {
            k -= 1;
        }
        for a2 in [k.wrapping_sub(1), k] {
            if a2 < n {
                let v = phi(cd1, cr1, f2.d[a2], f2.r[a2]);
                if v > best.0 {
                    best = (v, a1, a2);
                }
            }
        }
    }
    best
}

/// `max min(cd + sum D_f[a_f], cr + sum R_f[a_f])` over one index per front.
fn best_fronts(cd: f64, cr: f64, fronts: &[Front], choice: &mut [usize]) -> f64 {
    match fronts.len() {
        0 => cd.min(cr),
        1 => {
            let (v, a) = best_one(cd, cr, fronts[0]);
            choice[0] = a;
            v
        }
        2 => {
            let (v, a1, a2) = best_two(cd, cr, fronts[0], fronts[1]);
            choice[0] = a1;
            choice[1] = a2;
            v
        }
        m => {
            let f = fronts[0];
            let mut best = f64::NEG_INFINITY;
            let mut sub = vec![0; m - 1];
            for a in 0..f.d.len() {
                let v = best_fronts(cd + f.d[a], cr + f.r[a], &fronts[1..], &mut sub);
                if v > best {
                    best = v;
                    choice[0] = a;
                    choice[1..].copy_from_slice(&sub);
                }
            }
            best
        }
    }
}

/// Exhaustive lattice maximization of one bound; see the module docs for the
/// lattice. Fails with [`Error::OracleTooLarge`] past [`ORACLE_POINT_LIMIT`].
pub fn grid_oracle(
    channel: &ParallelChannel,
    budget: &PowerBudget,
    kind: &BoundKind,
    resolution: usize,
) -> Result<BoundResult> {
    grid_oracle_gains(&channel.gains(), budget, 1.0, kind, resolution)
}

pub(crate) fn grid_oracle_gains(
    links: &[LinkGains],
    budget: &PowerBudget,
    factor: f64,
    kind: &BoundKind,
    resolution: usize,
) -> Result<BoundResult> {
    if resolution < 2 {
        return Err(Error::InvalidOption {
            field: "grid_resolution",
            reason: "must be at least 2",
        });
    }
    check_budget(budget)?;
    let len = links.len();
    if len == 0 {
        return Err(Error::Empty("subchannels"));
    }
    if let BoundKind::Lower(m) = kind {
        m.check_len(len)?;
    }
    let mut points = oracle_point_count(len, resolution);
    if let BoundKind::Lower(m) = kind {
        let n_df = m.0.iter().filter(|&&x| x == Mode::Df).count() as u128;
        points = points.max(n_df.saturating_mul((resolution as u128).pow(3)));
    }
    if points > ORACLE_POINT_LIMIT {
        return Err(Error::OracleTooLarge {
            points,
            limit: ORACLE_POINT_LIMIT,
        });
    }

    let r = resolution;
    let n = r - 1;
    let lv1 = lattice(budget.p1_total, n);
    let lv2 = lattice(budget.p2_total, n);
    let comps = compositions(len, n);
    let ncomp = comps.len() / len;

    let (best, c1, c2, aux) = match kind {
        BoundKind::Lower(modes) => {
            search_lower(links, factor, modes, &lv1, &lv2, &comps, ncomp, n)
        }
        BoundKind::Upper => search_upper(links, factor, &lv1, &lv2, &comps, ncomp, n),
        BoundKind::Deaf { require_condition } => {
            search_deaf(links, factor, *require_condition, &lv1, &lv2, &comps, ncomp)
        }
    };

    let mut alloc = Allocation::zeros(len);
    for l in 0..len {
        alloc.p1[l] = lv1[comps[c1 * len + l] as usize];
        alloc.p2[l] = lv2[comps[c2 * len + l] as usize];
        match kind {
            BoundKind::Upper => alloc.psi[l] = psi_level(aux[l], n),
            BoundKind::Lower(m) if m.0[l] == Mode::Df => alloc.alpha[l] = alpha_level(aux[l], n),
            _ => {}
        }
    }
    let problem = Problem::new(links, *budget, factor, kind);
    let value = problem.allocation_value(&alloc);
    debug_assert!((value - best).abs() <= 1e-9 * (1.0 + best.abs()));
    let condition_binding =
        matches!(kind, BoundKind::Deaf { require_condition: true }) && value <= 0.0;
    Ok(BoundResult {
        value,
        allocation: alloc,
        modes: match kind {
            BoundKind::Lower(m) => Some(m.clone()),
            _ => None,
        },
        diagnostics: Diagnostics {
            iterations: 0,
            total_iterations: 0,
            starts_tried: ncomp * ncomp,
            best_start: 0,
            converged: true,
            condition_binding,
        },
    })
}

type Found = (f64, usize, usize, Vec<usize>);

#[allow(clippy::too_many_arguments)]
fn search_lower(
    links: &[LinkGains],
    factor: f64,
    modes: &crate::channel::ModeAssignment,
    lv1: &[f64],
    lv2: &[f64],
    comps: &[u32],
    ncomp: usize,
    n: usize,
) -> Found {
    let len = links.len();
    let r = n + 1;
    let rr = r * r;
    // per-subchannel tables indexed by (i, j) or (i, j, a)
    let mut t_a: Vec<Vec<f64>> = vec![Vec::new(); len];
    let mut t_b: Vec<Vec<f64>> = vec![Vec::new(); len];
    let mut dominant: Vec<Vec<bool>> = vec![Vec::new(); len];
    let betas: Vec<f64> = (0..r).map(|a| coherent_fraction(alpha_level(a, n))).collect();
    for (l, g) in links.iter().enumerate() {
        if modes.0[l] == Mode::Df {
            let mut d = vec![0.0; rr * r];
            let mut rel = vec![0.0; rr * r];
            let mut dom = vec![false; rr];
            for i in 0..r {
                for j in 0..r {
                    let base = (i * r + j) * r;
                    for a in 0..r {
                        let (u, v) = df_inner(g, lv1[i], lv2[j], betas[a], factor);
                        d[base + a] = pos(u);
                        rel[base + a] = pos(v);
                    }
                    dom[i * r + j] = d[base + n] >= d[base];
                }
            }
            t_a[l] = d;
            t_b[l] = rel;
            dominant[l] = dom;
        } else {
            let mut a_tab = vec![0.0; rr];
            let mut b_tab = vec![0.0; rr];
            for i in 0..r {
                for j in 0..r {
                    let (u, v) = nf_inner(g, lv1[i], lv2[j], factor);
                    a_tab[i * r + j] = pos(u);
                    b_tab[i * r + j] = pos(v);
                }
            }
            t_a[l] = a_tab;
            t_b[l] = b_tab;
        }
    }
    let has_df = modes.0.contains(&Mode::Df);
    let has_nf = modes.0.contains(&Mode::Nf);

    let mut best: Found = (f64::NEG_INFINITY, 0, 0, vec![n; len]);
    let mut fronts: Vec<Front> = Vec::with_capacity(len);
    let mut front_of: Vec<usize> = Vec::with_capacity(len);
    let mut choice = vec![0usize; len];
    for c1 in 0..ncomp {
        let i_vec = &comps[c1 * len..(c1 + 1) * len];
        for c2 in 0..ncomp {
            let j_vec = &comps[c2 * len..(c2 + 1) * len];
            let (mut cd, mut cr, mut na, mut nb) = (0.0, 0.0, 0.0, 0.0);
            fronts.clear();
            front_of.clear();
            for l in 0..len {
                let ij = i_vec[l] as usize * r + j_vec[l] as usize;
                if modes.0[l] == Mode::Df {
                    let base = ij * r;
                    if dominant[l][ij] {
                        cd += t_a[l][base + n];
                        cr += t_b[l][base + n];
                    } else {
                        fronts.push(Front {
                            d: &t_a[l][base..base + r],
                            r: &t_b[l][base..base + r],
                        });
                        front_of.push(l);
                    }
                } else {
                    na += t_a[l][ij];
                    nb += t_b[l][ij];
                }
            }
            let nf = if has_nf { na.min(nb) } else { 0.0 };
            let df = if has_df {
                if !fronts.is_empty() {
                    let hi_d: f64 = fronts.iter().map(|f| f.d[0]).sum();
                    let hi_r: f64 = fronts.iter().map(|f| f.r[n]).sum();
                    if (cd + hi_d).min(cr + hi_r) + nf <= best.0 {
                        continue;
                    }
                }
                best_fronts(cd, cr, &fronts, &mut choice[..fronts.len()])
            } else {
                0.0
            };
            let v = df + nf;
            if v > best.0 {
                let mut aux = vec![n; len];
                for (k, &l) in front_of.iter().enumerate() {
                    aux[l] = choice[k];
                }
                best = (v, c1, c2, aux);
            }
        }
    }
    best
}

fn search_upper(
    links: &[LinkGains],
    factor: f64,
    lv1: &[f64],
    lv2: &[f64],
    comps: &[u32],
    ncomp: usize,
    n: usize,
) -> Found {
    let len = links.len();
    let r = n + 1;
    let psis: Vec<f64> = (0..r).map(|k| psi_level(k, n)).collect();
    let mut tab = vec![vec![0.0; r * r]; len];
    let mut arg = vec![vec![0usize; r * r]; len];
    for (l, g) in links.iter().enumerate() {
        for i in 0..r {
            for j in 0..r {
                let mut bv = f64::NEG_INFINITY;
                let mut bk = 0;
                for (k, &psi) in psis.iter().enumerate() {
                    let v = upper_term(g, lv1[i], lv2[j], psi, factor);
                    if v > bv {
                        bv = v;
                        bk = k;
                    }
                }
                tab[l][i * r + j] = bv;
                arg[l][i * r + j] = bk;
            }
        }
    }
    let mut best = (f64::NEG_INFINITY, 0, 0);
    for c1 in 0..ncomp {
        let i_vec = &comps[c1 * len..(c1 + 1) * len];
        for c2 in 0..ncomp {
            let j_vec = &comps[c2 * len..(c2 + 1) * len];
            let mut v = 0.0;
            for l in 0..len {
                v += tab[l][i_vec[l] as usize * r + j_vec[l] as usize];
            }
            if v > best.0 {
                best = (v, c1, c2);
            }
        }
    }
    let (v, c1, c2) = best;
    let aux = (0..len)
        .map(|l| arg[l][comps[c1 * len + l] as usize * r + comps[c2 * len + l] as usize])
        .collect();
    (v, c1, c2, aux)
}

fn search_deaf(
    links: &[LinkGains],
    factor: f64,
    require_condition: bool,
    lv1: &[f64],
    lv2: &[f64],
    comps: &[u32],
    ncomp: usize,
) -> Found {
    let len = links.len();
    let r = lv1.len();
    let mut val = vec![vec![0.0; r * r]; len];
    let mut lhs = vec![vec![0.0; r * r]; len];
    let mut rhs = vec![vec![0.0; r * r]; len];
    for (l, g) in links.iter().enumerate() {
        for i in 0..r {
            for j in 0..r {
                val[l][i * r + j] = deaf_term(g, lv1[i], lv2[j], factor);
                let (a, b) = deaf_condition_sides(g, lv1[i], lv2[j]);
                lhs[l][i * r + j] = a;
                rhs[l][i * r + j] = b;
            }
        }
    }
    let mut best = (f64::NEG_INFINITY, 0, 0);
    for c1 in 0..ncomp {
        let i_vec = &comps[c1 * len..(c1 + 1) * len];
        for c2 in 0..ncomp {
            let j_vec = &comps[c2 * len..(c2 + 1) * len];
            let (mut v, mut a, mut b) = (0.0, 0.0, 0.0);
            for l in 0..len {
                let ij = i_vec[l] as usize * r + j_vec[l] as usize;
                v += val[l][ij];
                a += lhs[l][ij];
                b += rhs[l][ij];
            }
            if v > best.0 && (!require_condition || a - b >= 0.0) {
                best = (v, c1, c2);
            }
        }
    }
    (best.0, best.1, best.2, vec![0; len])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{GaussianSubchannel, ModeAssignment};
    use crate::rates::lower_bound_value;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn composition_count() {
        assert_eq!(compositions(2, 3).len() / 2, 10);
        assert_eq!(oracle_point_count(2, 4), 100);
        assert_eq!(oracle_point_count(1, 2), 4);
    }

    #[test]
    fn too_large_is_an_error() {
        let ch = ParallelChannel::repeated(GaussianSubchannel::unit(), 6).unwrap();
        let b = PowerBudget::new(1.0, 1.0).unwrap();
        let e = grid_oracle(&ch, &b, &BoundKind::Upper, 101).unwrap_err();
        assert!(matches!(e, Error::OracleTooLarge { .. }));
    }

    #[test]
    fn df_tables_count_against_the_limit() {
        let ch = ParallelChannel::new(vec![GaussianSubchannel::unit()]).unwrap();
        let b = PowerBudget::new(1.0, 1.0).unwrap();
        let df = BoundKind::Lower(ModeAssignment(vec![Mode::Df]));
        let nf = BoundKind::Lower(ModeAssignment(vec![Mode::Nf]));
        assert!(matches!(
            grid_oracle(&ch, &b, &df, 1601).unwrap_err(),
            Error::OracleTooLarge { points, .. } if points == 1601u128.pow(3)
        ));
        assert!(grid_oracle(&ch, &b, &nf, 1601).is_ok());
    }

    #[test]
    fn resolution_two_is_corner_search() {
        let ch = ParallelChannel::new(vec![GaussianSubchannel::new(1.0, 1.0, 2.0, 0.5, 0.2)])
            .unwrap();
        let b = PowerBudget::new(2.0, 3.0).unwrap();
        let r = grid_oracle(&ch, &b, &BoundKind::Deaf { require_condition: false }, 2).unwrap();
        let mut want = f64::NEG_INFINITY;
        for p1 in [0.0, 2.0] {
            for p2 in [0.0, 3.0] {
                want = want.max(deaf_term(&ch.gains()[0], p1, p2, 1.0));
            }
        }
        assert_eq!(r.value, want);
    }

    /// Plain enumeration of every (power, alpha) lattice point.
    fn naive_lower(ch: &ParallelChannel, b: &PowerBudget, m: &ModeAssignment, res: usize) -> f64 {
        let len = ch.len();
        let n = res - 1;
        let comps = compositions(len, n);
        let nc = comps.len() / len;
        let df: Vec<usize> = (0..len).filter(|&l| m.0[l] == Mode::Df).collect();
        let mut best = f64::NEG_INFINITY;
        for c1 in 0..nc {
            for c2 in 0..nc {
                let mut a = Allocation::zeros(len);
                for l in 0..len {
                    a.p1[l] = b.p1_total * comps[c1 * len + l] as f64 / n as f64;
                    a.p2[l] = b.p2_total * comps[c2 * len + l] as f64 / n as f64;
                }
                let combos = (n + 1).pow(df.len() as u32);
                for mut code in 0..combos {
                    for &l in &df {
                        a.alpha[l] = (code % (n + 1)) as f64 / n as f64;
                        code /= n + 1;
                    }
                    best = best.max(lower_bound_value(ch, m, &a).unwrap());
                }
            }
        }
        best
    }

    #[test]
    fn reduced_lower_search_matches_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..12 {
            let len = 1 + trial % 3;
            let subs = (0..len)
                .map(|_| {
                    GaussianSubchannel::new(
                        rng.gen_range(0.25..4.0),
                        rng.gen_range(0.25..4.0),
                        rng.gen_range(0.25..4.0),
                        rng.gen_range(0.0..4.0),
                        rng.gen_range(0.0..4.0),
                    )
                })
                .collect();
            let ch = ParallelChannel::new(subs).unwrap();
            let b = PowerBudget::new(rng.gen_range(0.5..8.0), rng.gen_range(0.5..8.0)).unwrap();
            let m = ModeAssignment(
                (0..len)
                    .map(|_| if rng.gen_bool(0.7) { Mode::Df } else { Mode::Nf })
                    .collect(),
            );
            let res = if len == 3 { 6 } else { 11 };
            let fast = grid_oracle(&ch, &b, &BoundKind::Lower(m.clone()), res).unwrap();
            let slow = naive_lower(&ch, &b, &m, res);
            assert!(
                (fast.value - slow).abs() <= 1e-12,
                "trial {trial}: {} vs {slow}",
                fast.value
            );
        }
    }

    #[test]
    fn upper_reduction_matches_naive() {
        let ch = ParallelChannel::new(vec![
            GaussianSubchannel::new(1.0, 0.5, 1.5, 3.0, 0.5),
            GaussianSubchannel::new(1.0, 2.0, 1.0, 0.5, 2.0),
        ])
        .unwrap();
        let b = PowerBudget::new(3.0, 2.0).unwrap();
        let res = 9;
        let fast = grid_oracle(&ch, &b, &BoundKind::Upper, res).unwrap();
        let n = res - 1;
        let comps = compositions(2, n);
        let nc = comps.len() / 2;
        let mut best = f64::NEG_INFINITY;
        for c1 in 0..nc {
            for c2 in 0..nc {
                for k1 in 0..res {
                    for k2 in 0..res {
                        let a = Allocation {
                            p1: vec![3.0 * comps[2 * c1] as f64 / 8.0, 3.0 * comps[2 * c1 + 1] as f64 / 8.0],
                            p2: vec![2.0 * comps[2 * c2] as f64 / 8.0, 2.0 * comps[2 * c2 + 1] as f64 / 8.0],
                            alpha: vec![1.0; 2],
                            psi: vec![psi_level(k1, n), psi_level(k2, n)],
                        };
                        best = best.max(crate::rates::upper_bound_value(&ch, &a).unwrap());
                    }
                }
            }
        }
        assert!((fast.value - best).abs() <= 1e-12);
    }

    #[test]
    fn refinement_never_decreases() {
        let ch = ParallelChannel::new(vec![
            GaussianSubchannel::new(1.0, 1.0, 2.0, 2.0, 0.5),
            GaussianSubchannel::new(0.5, 1.0, 1.0, 1.0, 1.0),
        ])
        .unwrap();
        let b = PowerBudget::new(2.0, 2.0).unwrap();
        let m = ModeAssignment(vec![Mode::Df, Mode::Nf]);
        for kind in [BoundKind::Lower(m), BoundKind::Upper] {
            let coarse = grid_oracle(&ch, &b, &kind, 11).unwrap().value;
            let fine = grid_oracle(&ch, &b, &kind, 101).unwrap().value;
            assert!(fine >= coarse);
        }
    }
}
