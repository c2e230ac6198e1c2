//! Objective values and (super)gradients in optimizer coordinates.
//!
//! A point is `x = [p1 (L) | p2 (L) | aux (L)]`. The auxiliary block is the
//! coherent fraction `beta = sqrt(1 - alpha)` on DF subchannels of the lower
//! bound, `psi` for the upper bound, and pinned to zero everywhere else.
//! Working in `beta` rather than `alpha` keeps the DF expressions smooth at
//! `alpha = 1`.

use crate::channel::{Allocation, LinkGains, Mode, ModeAssignment, PowerBudget};
use crate::rates::{
    coherent_fraction, coherent_snr, dc, deaf_margin, deaf_term, df_inner, df_snrs, nf_inner,
    nf_snrs, pos, upper_term,
};

use super::projection::project_budget_in_place;
use super::{BoundKind, CONDITION_TOL};

/// Floor applied to a power under a square root in the cross-term derivative.
const SQRT_FLOOR: f64 = 1e-30;

#[derive(Clone, Copy)]
pub(crate) struct Problem<'a> {
    pub links: &'a [LinkGains],
    pub budget: PowerBudget,
    pub factor: f64,
    pub kind: &'a BoundKind,
    /// Slope of the positive part below zero. Zero is the true objective; a
    /// small positive leak gives plateaus of clipped summands a direction.
    pub leak: f64,
    /// Smoothing temperature (bits) for positive parts and `min`s; zero is
    /// exact.
    pub tau: f64,
    /// Upper bound only: choose each `psi` as the better endpoint of
    /// `[-1, 1]` instead of treating it as a coordinate. Every upper-bound
    /// term is monotone in `psi`, so nothing is lost.
    pub psi_endpoints: bool,
}

#[inline]
fn softplus(v: f64, tau: f64) -> f64 {
    if v > 0.0 {
        v + tau * (-v / tau).exp().ln_1p()
    } else {
        tau * (v / tau).exp().ln_1p()
    }
}

#[inline]
fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[inline]
fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Gradient of `coherent_snr` with respect to `(p1, p2, w)`.
#[inline]
fn coherent_grad(a: f64, b: f64, n: f64, p1: f64, p2: f64, w: f64) -> [f64; 3] {
    let ab = a * b;
    let (mut d1, mut d2, mut dw) = (a, b, 0.0);
    if ab != 0.0 {
        if w != 0.0 {
            if p2 != 0.0 {
                d1 += w * (ab * p2 / p1.max(SQRT_FLOOR)).sqrt();
            }
            if p1 != 0.0 {
                d2 += w * (ab * p1 / p2.max(SQRT_FLOOR)).sqrt();
            }
        }
        dw = 2.0 * (ab * p1 * p2).sqrt();
    }
    [d1 / n, d2 / n, dw / n]
}

#[inline]
fn axpy(out: &mut [f64; 3], k: f64, v: &[f64; 3]) {
    for i in 0..3 {
        out[i] += k * v[i];
    }
}

impl<'a> Problem<'a> {
    pub fn new(
        links: &'a [LinkGains],
        budget: PowerBudget,
        factor: f64,
        kind: &'a BoundKind,
    ) -> Self {
        Self {
            links,
            budget,
            factor,
            kind,
            leak: 0.0,
            tau: 0.0,
            psi_endpoints: false,
        }
    }

    pub fn relaxed(&self, leak: f64, tau: f64) -> Self {
        Self { leak, tau, ..*self }
    }

    pub fn with_psi_endpoints(&self) -> Self {
        Self {
            psi_endpoints: true,
            ..*self
        }
    }

    #[inline]
    fn plus(&self, v: f64) -> f64 {
        let p = if self.tau > 0.0 {
            softplus(v, self.tau)
        } else {
            pos(v)
        };
        self.leak * v + (1.0 - self.leak) * p
    }

    /// Derivative of `plus`; the average of both sides at an exact kink.
    #[inline]
    fn plus_weight(&self, v: f64) -> f64 {
        let w = if self.tau > 0.0 {
            logistic(v / self.tau)
        } else if v > 0.0 {
            1.0
        } else if v == 0.0 {
            0.5
        } else {
            0.0
        };
        self.leak + (1.0 - self.leak) * w
    }

    #[inline]
    fn min2(&self, x: f64, y: f64) -> f64 {
        let m = x.min(y);
        if self.tau > 0.0 {
            let d = (x - y).abs() / self.tau;
            m - self.tau * (-d).exp().ln_1p()
        } else {
            m
        }
    }

    /// Weights of `x` and `y` in the derivative of `min2`.
    #[inline]
    fn min_weights(&self, x: f64, y: f64) -> (f64, f64) {
        let w = if self.tau > 0.0 {
            logistic((y - x) / self.tau)
        } else if x < y {
            1.0
        } else if x > y {
            0.0
        } else {
            0.5
        };
        (w, 1.0 - w)
    }

    /// Upper-bound term of subchannel `l` and the `psi` it is evaluated at.
    fn upper_at(&self, l: usize, p1: f64, p2: f64, psi: f64) -> (f64, f64) {
        let g = &self.links[l];
        if !self.psi_endpoints {
            return (upper_term(g, p1, p2, psi, self.factor), psi);
        }
        let lo = upper_term(g, p1, p2, -1.0, self.factor);
        let hi = upper_term(g, p1, p2, 1.0, self.factor);
        if lo > hi {
            (lo, -1.0)
        } else if hi > lo {
            (hi, 1.0)
        } else {
            // equal only when one power is zero: take the sign under which
            // the cross term grows the rate
            let sd = coherent_snr(g.g_sd, g.g_rd, g.n_dest, p1, p2, 0.0);
            let se = coherent_snr(g.g_se, g.g_re, g.n_eve, p1, p2, 0.0);
            let cross = (g.g_sd * g.g_rd).sqrt() / g.n_dest * dc(sd)
                - (g.g_se * g.g_re).sqrt() / g.n_eve * dc(se);
            if cross < 0.0 {
                (lo, -1.0)
            } else {
                (hi, 1.0)
            }
        }
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn dim(&self) -> usize {
        3 * self.len()
    }

    fn is_df(&self, l: usize) -> bool {
        matches!(self.kind, BoundKind::Lower(m) if m.0[l] == Mode::Df)
    }

    pub fn constrained(&self) -> bool {
        matches!(
            self.kind,
            BoundKind::Deaf {
                require_condition: true
            }
        )
    }

    /// Box for the auxiliary coordinate of subchannel `l`.
    pub fn aux_bounds(&self, l: usize) -> (f64, f64) {
        match self.kind {
            BoundKind::Upper if !self.psi_endpoints => (-1.0, 1.0),
            BoundKind::Lower(_) if self.is_df(l) => (0.0, 1.0),
            _ => (0.0, 0.0),
        }
    }

    /// Per-coordinate scale: the budget for power blocks, the box width for
    /// the auxiliary block. Zero marks a pinned coordinate.
    pub fn scales(&self) -> Vec<f64> {
        let l = self.len();
        let mut s = Vec::with_capacity(3 * l);
        s.extend(std::iter::repeat_n(self.budget.p1_total, l));
        s.extend(std::iter::repeat_n(self.budget.p2_total, l));
        s.extend((0..l).map(|i| {
            let (lo, hi) = self.aux_bounds(i);
            hi - lo
        }));
        s
    }

    pub fn project(&self, x: &mut [f64]) {
        let l = self.len();
        let (p1, rest) = x.split_at_mut(l);
        let (p2, aux) = rest.split_at_mut(l);
        project_budget_in_place(p1, self.budget.p1_total);
        project_budget_in_place(p2, self.budget.p2_total);
        for (i, a) in aux.iter_mut().enumerate() {
            let (lo, hi) = self.aux_bounds(i);
            *a = a.clamp(lo, hi);
        }
    }

    /// For the constrained relay-deaf problem, pulls an infeasible point back
    /// along the relay-power ray until the condition holds. `p2 = 0` always
    /// satisfies it.
    pub fn restore(&self, x: &mut [f64]) {
        if !self.constrained() {
            return;
        }
        let l = self.len();
        if self.margin(x) >= 0.0 {
            return;
        }
        let (p1, rest) = x.split_at_mut(l);
        let p2 = &mut rest[..l];
        let orig: Vec<f64> = p2.to_vec();
        let scaled = |t: f64| -> Vec<f64> { orig.iter().map(|v| v * t).collect() };
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if deaf_margin(self.links, p1, &scaled(mid)) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        p2.copy_from_slice(&scaled(lo));
    }

    pub fn margin(&self, x: &[f64]) -> f64 {
        let l = self.len();
        deaf_margin(self.links, &x[..l], &x[l..2 * l])
    }

    fn margin_gradient(&self, x: &[f64], out: &mut [f64]) {
        let l = self.len();
        out.iter_mut().for_each(|v| *v = 0.0);
        for (i, g) in self.links.iter().enumerate() {
            let (p1, p2) = (x[i], x[l + i]);
            let den = g.g_sd * p1 + g.n_dest;
            let u = g.g_rd * p2 / den;
            let v = g.g_re * p2 / g.n_eve;
            out[i] = -dc(u) * u * g.g_sd / den;
            out[l + i] = dc(u) * g.g_rd / den - dc(v) * g.g_re / g.n_eve;
        }
    }

    /// On the boundary of the relay-deaf condition, removes the part of
    /// `grad` that leaves the feasible set (orthogonal in the metric given by
    /// the coordinate scales `s`).
    pub fn tangent(&self, x: &[f64], s: &[f64], grad: &mut [f64]) {
        if !self.constrained() || self.margin(x) > CONDITION_TOL {
            return;
        }
        let mut h = vec![0.0; x.len()];
        self.margin_gradient(x, &mut h);
        let (mut gh, mut hh) = (0.0, 0.0);
        for i in 0..x.len() {
            let w = s[i] * s[i];
            gh += w * grad[i] * h[i];
            hh += w * h[i] * h[i];
        }
        if gh < 0.0 && hh > 0.0 {
            for i in 0..x.len() {
                grad[i] -= gh / hh * h[i];
            }
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let l = self.len();
        let (p1, p2, aux) = (&x[..l], &x[l..2 * l], &x[2 * l..]);
        let f = self.factor;
        match self.kind {
            BoundKind::Lower(modes) => {
                let (mut dd, mut dr, mut na, mut nb) = (0.0, 0.0, 0.0, 0.0);
                let (mut has_df, mut has_nf) = (false, false);
                for (i, g) in self.links.iter().enumerate() {
                    if modes.0[i] == Mode::Df {
                        let (d, r) = df_inner(g, p1[i], p2[i], aux[i], f);
                        dd += self.plus(d);
                        dr += self.plus(r);
                        has_df = true;
                    } else {
                        let (a, b) = nf_inner(g, p1[i], p2[i], f);
                        na += self.plus(a);
                        nb += self.plus(b);
                        has_nf = true;
                    }
                }
                let df = if has_df { self.min2(dd, dr) } else { 0.0 };
                let nf = if has_nf { self.min2(na, nb) } else { 0.0 };
                df + nf
            }
            BoundKind::Upper => (0..l).map(|i| self.upper_at(i, p1[i], p2[i], aux[i]).0).sum(),
            BoundKind::Deaf { .. } => self
                .links
                .iter()
                .enumerate()
                .map(|(i, g)| deaf_term(g, p1[i], p2[i], f))
                .sum(),
        }
    }

    /// Gradient of `value`. With `tau = 0` this is a supergradient: the
    /// active branch of every `min` and positive part, averaged at exact
    /// ties.
    pub fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        let l = self.len();
        let (p1, p2, aux) = (&x[..l], &x[l..2 * l], &x[2 * l..]);
        let f = self.factor;
        grad.iter_mut().for_each(|v| *v = 0.0);
        let mut put = |i: usize, v: [f64; 3]| {
            grad[i] = v[0];
            grad[l + i] = v[1];
            grad[2 * l + i] = v[2];
        };
        match self.kind {
            BoundKind::Lower(modes) => {
                let inner: Vec<(f64, f64)> = (0..l)
                    .map(|i| {
                        let g = &self.links[i];
                        if modes.0[i] == Mode::Df {
                            df_inner(g, p1[i], p2[i], aux[i], f)
                        } else {
                            nf_inner(g, p1[i], p2[i], f)
                        }
                    })
                    .collect();
                let (mut dd, mut dr, mut na, mut nb) = (0.0, 0.0, 0.0, 0.0);
                for (i, &(u, v)) in inner.iter().enumerate() {
                    if modes.0[i] == Mode::Df {
                        dd += self.plus(u);
                        dr += self.plus(v);
                    } else {
                        na += self.plus(u);
                        nb += self.plus(v);
                    }
                }
                let (wd, wr) = self.min_weights(dd, dr);
                let (wa, wb) = self.min_weights(na, nb);
                for i in 0..l {
                    let g = &self.links[i];
                    let (u, v) = inner[i];
                    let mut out = [0.0; 3];
                    if modes.0[i] == Mode::Df {
                        let ku = wd * self.plus_weight(u);
                        let kv = wr * self.plus_weight(v);
                        if ku != 0.0 || kv != 0.0 {
                            let b = aux[i];
                            let s = df_snrs(g, p1[i], p2[i], b);
                            let gd = coherent_grad(g.g_sd, g.g_rd, g.n_dest, p1[i], p2[i], b);
                            let ge = coherent_grad(g.g_se, g.g_re, g.n_eve, p1[i], p2[i], b);
                            let gr = [
                                (1.0 - b * b) * g.g_sr / g.n_relay,
                                0.0,
                                -2.0 * b * g.g_sr * p1[i] / g.n_relay,
                            ];
                            let ce = dc(s.eve);
                            axpy(&mut out, f * ku * dc(s.dest), &gd);
                            axpy(&mut out, -f * ku * ce, &ge);
                            axpy(&mut out, f * kv * dc(s.relay), &gr);
                            axpy(&mut out, -f * kv * ce, &ge);
                        }
                    } else {
                        let ku = wa * self.plus_weight(u);
                        let kv = wb * self.plus_weight(v);
                        if ku != 0.0 || kv != 0.0 {
                            let s = nf_snrs(g, p1[i], p2[i]);
                            let g_sum_d = [g.g_sd / g.n_dest, g.g_rd / g.n_dest, 0.0];
                            let g_sum_e = [g.g_se / g.n_eve, g.g_re / g.n_eve, 0.0];
                            let g_src = [g.g_sd / g.n_dest, 0.0, 0.0];
                            let g_rel = [0.0, g.g_re / g.n_eve, 0.0];
                            let ce = dc(s.eve_sum);
                            axpy(&mut out, f * ku * dc(s.dest_sum), &g_sum_d);
                            axpy(&mut out, -f * (ku + kv) * ce, &g_sum_e);
                            axpy(&mut out, f * kv * dc(s.dest_src), &g_src);
                            axpy(&mut out, f * kv * dc(s.eve_relay), &g_rel);
                        }
                    }
                    put(i, out);
                }
            }
            BoundKind::Upper => {
                for (i, g) in self.links.iter().enumerate() {
                    let w = self.upper_at(i, p1[i], p2[i], aux[i]).1;
                    let sd = coherent_snr(g.g_sd, g.g_rd, g.n_dest, p1[i], p2[i], w);
                    let se = coherent_snr(g.g_se, g.g_re, g.n_eve, p1[i], p2[i], w);
                    let gd = coherent_grad(g.g_sd, g.g_rd, g.n_dest, p1[i], p2[i], w);
                    let ge = coherent_grad(g.g_se, g.g_re, g.n_eve, p1[i], p2[i], w);
                    let mut out = [0.0; 3];
                    axpy(&mut out, f * dc(sd), &gd);
                    axpy(&mut out, -f * dc(se), &ge);
                    if self.psi_endpoints {
                        out[2] = 0.0;
                    }
                    put(i, out);
                }
            }
            BoundKind::Deaf { .. } => {
                for (i, g) in self.links.iter().enumerate() {
                    let den = g.n_eve + g.g_re * p2[i];
                    let xd = g.g_sd * p1[i] / g.n_dest;
                    let xe = g.g_se * p1[i] / den;
                    let kd = f * dc(xd);
                    let ke = f * dc(xe);
                    put(
                        i,
                        [
                            kd * g.g_sd / g.n_dest - ke * g.g_se / den,
                            ke * g.g_se * p1[i] * g.g_re / (den * den),
                            0.0,
                        ],
                    );
                }
            }
        }
    }

    /// Which side of every non-smooth locus the point is on: signs of all
    /// positive-part arguments and of both `min` comparisons.
    pub fn branch_signature(&self, x: &[f64]) -> Vec<i8> {
        let BoundKind::Lower(modes) = self.kind else {
            return Vec::new();
        };
        let l = self.len();
        let (p1, p2, aux) = (&x[..l], &x[l..2 * l], &x[2 * l..]);
        let mut sig = Vec::with_capacity(2 * l + 2);
        let (mut dd, mut dr, mut na, mut nb) = (0.0, 0.0, 0.0, 0.0);
        for (i, g) in self.links.iter().enumerate() {
            let (u, v) = if modes.0[i] == Mode::Df {
                let r = df_inner(g, p1[i], p2[i], aux[i], self.factor);
                dd += pos(r.0);
                dr += pos(r.1);
                r
            } else {
                let r = nf_inner(g, p1[i], p2[i], self.factor);
                na += pos(r.0);
                nb += pos(r.1);
                r
            };
            sig.push(sign(u));
            sig.push(sign(v));
        }
        sig.push(sign(dd - dr));
        sig.push(sign(na - nb));
        sig
    }

    /// Zeroes the power of upper-bound subchannels whose term is negative;
    /// an idle subchannel contributes exactly zero.
    pub fn prune(&self, x: &mut [f64]) {
        if !matches!(self.kind, BoundKind::Upper) {
            return;
        }
        let l = self.len();
        for i in 0..l {
            if self.upper_at(i, x[i], x[l + i], x[2 * l + i]).0 < 0.0 {
                x[i] = 0.0;
                x[l + i] = 0.0;
            }
        }
    }

    pub fn allocation_at(&self, x: &[f64]) -> Allocation {
        let l = self.len();
        let mut a = Allocation::zeros(l);
        a.p1.copy_from_slice(&x[..l]);
        a.p2.copy_from_slice(&x[l..2 * l]);
        for i in 0..l {
            let v = x[2 * l + i];
            match self.kind {
                BoundKind::Upper => a.psi[i] = self.upper_at(i, x[i], x[l + i], v).1,
                BoundKind::Lower(_) if self.is_df(i) => a.alpha[i] = (1.0 - v * v).clamp(0.0, 1.0),
                _ => {}
            }
        }
        a
    }

    pub fn coordinates_of(&self, a: &Allocation) -> Vec<f64> {
        let l = self.len();
        let mut x = vec![0.0; 3 * l];
        x[..l].copy_from_slice(&a.p1);
        x[l..2 * l].copy_from_slice(&a.p2);
        for i in 0..l {
            x[2 * l + i] = match self.kind {
                BoundKind::Upper => a.psi[i],
                BoundKind::Lower(_) if self.is_df(i) => coherent_fraction(a.alpha[i]),
                _ => 0.0,
            };
        }
        x
    }

    /// Value computed from the allocation exactly as the public rate
    /// functions do (through `alpha`).
    pub fn allocation_value(&self, a: &Allocation) -> f64 {
        let f = self.factor;
        match self.kind {
            BoundKind::Lower(modes) => lower_value(self.links, modes, a, f),
            BoundKind::Upper => (0..self.len())
                .map(|i| upper_term(&self.links[i], a.p1[i], a.p2[i], a.psi[i], f))
                .sum(),
            BoundKind::Deaf { .. } => (0..self.len())
                .map(|i| deaf_term(&self.links[i], a.p1[i], a.p2[i], f))
                .sum(),
        }
    }
}

fn lower_value(links: &[LinkGains], modes: &ModeAssignment, a: &Allocation, f: f64) -> f64 {
    crate::rates::lower_sums(links, modes, a, f).value()
}

