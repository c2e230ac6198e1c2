//! Closed-form secrecy-rate expressions.
//!
//! Every rate is in bits per channel use with `C(x) = log2(1 + x) / 2`.
//! The Gaussian entry points take a [`ParallelChannel`]; each has a
//! gain-form twin (suffix `_gains`) taking [`LinkGains`] and a rate factor,
//! which is how fading states (complex channels, factor 2) are evaluated.
//!
//! Inside the DF expressions the power split enters only through
//! `sqrt(1 - alpha)`, the coherent fraction. The kernels below take that
//! coherent fraction directly; the public functions take `alpha`.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::channel::{
    Allocation, DeterministicSubchannel, GaussianSubchannel, LinkGains, ModeAssignment,
    ParallelChannel,
};
use crate::error::{Error, Result};

/// `C(x)` without domain checks.
#[inline]
pub(crate) fn c(x: f64) -> f64 {
    0.5 * x.ln_1p() / LN_2
}

/// `C'(x)`.
#[inline]
pub(crate) fn dc(x: f64) -> f64 {
    0.5 / (LN_2 * (1.0 + x))
}

/// `C(x) = log2(1 + x) / 2` for a non-negative, finite SNR.
pub fn cap(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::field(None, "snr", x, "must be finite"));
    }
    if x < 0.0 {
        return Err(Error::field(None, "snr", x, "must be non-negative"));
    }
    Ok(c(x))
}

/// The two positive-part summands that enter one subchannel's contribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateTerms {
    pub term_dest: f64,
    pub term_relay_or_alt: f64,
}

/// Solver bookkeeping attached to an optimized bound.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Iterations spent by the winning start.
    pub iterations: usize,
    /// Iterations summed over all starts.
    pub total_iterations: usize,
    pub starts_tried: usize,
    pub best_start: usize,
    /// The winning start met the stationarity test (or could not move).
    pub converged: bool,
    /// Set when a constrained problem had no feasible point with positive value.
    pub condition_binding: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub value: f64,
    pub allocation: Allocation,
    pub modes: Option<ModeAssignment>,
    pub diagnostics: Diagnostics,
}

// ---------------------------------------------------------------------------
// gain-form kernels

/// `(a p1 + b p2 + 2 w sqrt(a b p1 p2)) / n`. The cross term is exactly zero
/// whenever any factor is zero.
#[inline]
pub(crate) fn coherent_snr(a: f64, b: f64, n: f64, p1: f64, p2: f64, w: f64) -> f64 {
    let prod = a * b * p1 * p2;
    let cross = if w == 0.0 || prod == 0.0 {
        0.0
    } else {
        2.0 * w * prod.sqrt()
    };
    (a * p1 + b * p2 + cross) / n
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct DfSnrs {
    pub dest: f64,
    pub eve: f64,
    pub relay: f64,
}

#[inline]
pub(crate) fn df_snrs(g: &LinkGains, p1: f64, p2: f64, coh: f64) -> DfSnrs {
    DfSnrs {
        dest: coherent_snr(g.g_sd, g.g_rd, g.n_dest, p1, p2, coh),
        eve: coherent_snr(g.g_se, g.g_re, g.n_eve, p1, p2, coh),
        relay: (1.0 - coh * coh) * g.g_sr * p1 / g.n_relay,
    }
}

/// DF summands before the positive part, given the coherent fraction
/// `coh = sqrt(1 - alpha)`.
#[inline]
pub(crate) fn df_inner(g: &LinkGains, p1: f64, p2: f64, coh: f64, factor: f64) -> (f64, f64) {
    let s = df_snrs(g, p1, p2, coh);
    let ce = c(s.eve);
    (factor * (c(s.dest) - ce), factor * (c(s.relay) - ce))
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct NfSnrs {
    /// Source plus relay at the destination.
    pub dest_sum: f64,
    /// Source plus relay at the eavesdropper.
    pub eve_sum: f64,
    /// Source alone at the destination.
    pub dest_src: f64,
    /// Relay alone at the eavesdropper.
    pub eve_relay: f64,
}

#[inline]
pub(crate) fn nf_snrs(g: &LinkGains, p1: f64, p2: f64) -> NfSnrs {
    NfSnrs {
        dest_sum: (g.g_sd * p1 + g.g_rd * p2) / g.n_dest,
        eve_sum: (g.g_se * p1 + g.g_re * p2) / g.n_eve,
        dest_src: g.g_sd * p1 / g.n_dest,
        eve_relay: g.g_re * p2 / g.n_eve,
    }
}

#[inline]
pub(crate) fn nf_inner(g: &LinkGains, p1: f64, p2: f64, factor: f64) -> (f64, f64) {
    let s = nf_snrs(g, p1, p2);
    let ce = c(s.eve_sum);
    (
        factor * (c(s.dest_sum) - ce),
        factor * (c(s.dest_src) + c(s.eve_relay) - ce),
    )
}

/// One upper-bound summand (no positive part).
#[inline]
pub(crate) fn upper_term(g: &LinkGains, p1: f64, p2: f64, psi: f64, factor: f64) -> f64 {
    let sd = coherent_snr(g.g_sd, g.g_rd, g.n_dest, p1, p2, psi);
    let se = coherent_snr(g.g_se, g.g_re, g.n_eve, p1, p2, psi);
    factor * (c(sd) - c(se))
}

/// One relay-deaf summand: the relay acts only as a jammer at the eavesdropper.
#[inline]
pub(crate) fn deaf_term(g: &LinkGains, p1: f64, p2: f64, factor: f64) -> f64 {
    factor * (c(g.g_sd * p1 / g.n_dest) - c(g.g_se * p1 / (g.n_eve + g.g_re * p2)))
}

/// The two per-subchannel sides of the relay-deaf condition.
#[inline]
pub(crate) fn deaf_condition_sides(g: &LinkGains, p1: f64, p2: f64) -> (f64, f64) {
    (
        c(g.g_rd * p2 / (g.g_sd * p1 + g.n_dest)),
        c(g.g_re * p2 / g.n_eve),
    )
}

#[inline]
pub(crate) fn pos(x: f64) -> f64 {
    x.max(0.0)
}

pub(crate) fn coherent_fraction(alpha: f64) -> f64 {
    (1.0 - alpha).max(0.0).sqrt()
}

fn check_power(index: Option<usize>, field: &'static str, p: f64) -> Result<()> {
    if !p.is_finite() || p < 0.0 {
        return Err(Error::field(index, field, p, "must be finite and non-negative"));
    }
    Ok(())
}

fn check_alpha(index: Option<usize>, alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::field(index, "alpha", alpha, "must lie in [0, 1]"));
    }
    Ok(())
}

fn check_psi(index: Option<usize>, psi: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&psi) {
        return Err(Error::field(index, "psi", psi, "must lie in [-1, 1]"));
    }
    Ok(())
}

fn check_alloc(len: usize, alloc: &Allocation) -> Result<()> {
    alloc.check_len(len)?;
    for i in 0..len {
        check_power(Some(i), "p1", alloc.p1[i])?;
        check_power(Some(i), "p2", alloc.p2[i])?;
        check_alpha(Some(i), alloc.alpha[i])?;
        check_psi(Some(i), alloc.psi[i])?;
    }
    Ok(())
}

fn check_links(links: &[LinkGains], factor: f64) -> Result<()> {
    if links.is_empty() {
        return Err(Error::Empty("subchannels"));
    }
    for (i, g) in links.iter().enumerate() {
        g.validate(Some(i))?;
    }
    if !(factor.is_finite() && factor > 0.0) {
        return Err(Error::field(None, "rate_factor", factor, "must be positive and finite"));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// per-subchannel terms

/// DF summands on one Gaussian subchannel: the destination-side gap and the
/// relay-decoding gap, both against the same eavesdropper rate.
pub fn df_terms(sub: &GaussianSubchannel, p1: f64, p2: f64, alpha: f64) -> Result<RateTerms> {
    sub.validate(None)?;
    df_terms_gains(&sub.gains(), p1, p2, alpha, 1.0)
}

pub fn df_terms_gains(
    g: &LinkGains,
    p1: f64,
    p2: f64,
    alpha: f64,
    factor: f64,
) -> Result<RateTerms> {
    check_power(None, "p1", p1)?;
    check_power(None, "p2", p2)?;
    check_alpha(None, alpha)?;
    let (d, r) = df_inner(g, p1, p2, coherent_fraction(alpha), factor);
    Ok(RateTerms {
        term_dest: pos(d),
        term_relay_or_alt: pos(r),
    })
}

/// NF summands on one Gaussian subchannel: the joint source-relay gap and the
/// gap in which the relay codeword is decodable by the eavesdropper.
pub fn nf_terms(sub: &GaussianSubchannel, p1: f64, p2: f64) -> Result<RateTerms> {
    sub.validate(None)?;
    nf_terms_gains(&sub.gains(), p1, p2, 1.0)
}

pub fn nf_terms_gains(g: &LinkGains, p1: f64, p2: f64, factor: f64) -> Result<RateTerms> {
    check_power(None, "p1", p1)?;
    check_power(None, "p2", p2)?;
    let (a, b) = nf_inner(g, p1, p2, factor);
    Ok(RateTerms {
        term_dest: pos(a),
        term_relay_or_alt: pos(b),
    })
}

// ---------------------------------------------------------------------------
// parallel-channel expressions

/// Achievable secrecy rate of a mode assignment at a fixed allocation:
/// `min(sum_DF dest, sum_DF relay) + min(sum_NF A, sum_NF B)` with each
/// summand clipped at zero. An empty mode set contributes zero.
pub fn lower_bound_value(
    channel: &ParallelChannel,
    modes: &ModeAssignment,
    alloc: &Allocation,
) -> Result<f64> {
    lower_bound_value_gains(&channel.gains(), modes, alloc, 1.0)
}

pub fn lower_bound_value_gains(
    links: &[LinkGains],
    modes: &ModeAssignment,
    alloc: &Allocation,
    factor: f64,
) -> Result<f64> {
    check_links(links, factor)?;
    modes.check_len(links.len())?;
    check_alloc(links.len(), alloc)?;
    Ok(lower_sums(links, modes, alloc, factor).value())
}

/// The four set sums of the lower bound.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct LowerSums {
    pub df_dest: f64,
    pub df_relay: f64,
    pub nf_a: f64,
    pub nf_b: f64,
    pub has_df: bool,
    pub has_nf: bool,
}

impl LowerSums {
    pub fn value(&self) -> f64 {
        let df = if self.has_df {
            self.df_dest.min(self.df_relay)
        } else {
            0.0
        };
        let nf = if self.has_nf {
            self.nf_a.min(self.nf_b)
        } else {
            0.0
        };
        df + nf
    }
}

pub(crate) fn lower_sums(
    links: &[LinkGains],
    modes: &ModeAssignment,
    alloc: &Allocation,
    factor: f64,
) -> LowerSums {
    let mut s = LowerSums::default();
    for (l, g) in links.iter().enumerate() {
        if modes.is_df(l) {
            let (d, r) = df_inner(
                g,
                alloc.p1[l],
                alloc.p2[l],
                coherent_fraction(alloc.alpha[l]),
                factor,
            );
            s.df_dest += pos(d);
            s.df_relay += pos(r);
            s.has_df = true;
        } else {
            let (a, b) = nf_inner(g, alloc.p1[l], alloc.p2[l], factor);
            s.nf_a += pos(a);
            s.nf_b += pos(b);
            s.has_nf = true;
        }
    }
    s
}

/// Gaussian upper bound at a fixed allocation including the per-subchannel
/// correlations `psi`. Not clipped: a poor `psi` can make it negative.
pub fn upper_bound_value(channel: &ParallelChannel, alloc: &Allocation) -> Result<f64> {
    upper_bound_value_gains(&channel.gains(), alloc, 1.0)
}

pub fn upper_bound_value_gains(links: &[LinkGains], alloc: &Allocation, factor: f64) -> Result<f64> {
    check_links(links, factor)?;
    check_alloc(links.len(), alloc)?;
    Ok(links
        .iter()
        .enumerate()
        .map(|(l, g)| upper_term(g, alloc.p1[l], alloc.p2[l], alloc.psi[l], factor))
        .sum())
}

/// How the relay power of the other subchannels enters the eavesdropper's
/// interference sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterferenceConvention {
    /// `P1k + sqrt(rho2k) P2k + 2 psi_k sqrt(rho2k P1k P2k)`.
    #[default]
    AsPrinted,
    /// `P1k + rho2k P2k + 2 psi_k sqrt(rho2k P1k P2k)`, the received power of
    /// subchannel k at the eavesdropper.
    PowerConsistent,
}

/// Upper bound when the eavesdropper treats cross-subchannel interference as
/// noise. Each interferer's contribution is clipped at zero, since with the
/// as-printed convention and negative `psi` it can otherwise go negative.
pub fn interference_upper_value(channel: &ParallelChannel, alloc: &Allocation) -> Result<f64> {
    interference_upper_value_with(channel, alloc, InterferenceConvention::AsPrinted)
}

pub fn interference_upper_value_with(
    channel: &ParallelChannel,
    alloc: &Allocation,
    convention: InterferenceConvention,
) -> Result<f64> {
    let subs = channel.subchannels();
    check_alloc(subs.len(), alloc)?;
    let interference: Vec<f64> = subs
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let (p1, p2) = (alloc.p1[k], alloc.p2[k]);
            let relay = match convention {
                InterferenceConvention::AsPrinted => s.rho2.sqrt() * p2,
                InterferenceConvention::PowerConsistent => s.rho2 * p2,
            };
            let prod = s.rho2 * p1 * p2;
            let cross = if prod == 0.0 {
                0.0
            } else {
                2.0 * alloc.psi[k] * prod.sqrt()
            };
            pos(p1 + relay + cross)
        })
        .collect();
    let total: f64 = interference.iter().sum();
    let mut value = 0.0;
    for (l, s) in subs.iter().enumerate() {
        let (p1, p2, psi) = (alloc.p1[l], alloc.p2[l], alloc.psi[l]);
        let others = total - interference[l];
        let sd = coherent_snr(1.0, s.rho1, s.sigma2_dest, p1, p2, psi);
        let num_e = coherent_snr(1.0, s.rho2, 1.0, p1, p2, psi);
        let se = num_e / (others.max(0.0) + s.sigma2_eve);
        value += c(sd) - c(se);
    }
    Ok(value)
}

/// Relay-deaf expression `sum C(P1/s2) - C(P1/(s2e + rho2 P2))`. The same
/// expression is the upper bound (unconstrained) and, under
/// [`deaf_condition_holds`], the lower bound.
pub fn deaf_bound_value(channel: &ParallelChannel, alloc: &Allocation) -> Result<f64> {
    deaf_bound_value_gains(&channel.gains(), alloc, 1.0)
}

pub fn deaf_bound_value_gains(links: &[LinkGains], alloc: &Allocation, factor: f64) -> Result<f64> {
    check_links(links, factor)?;
    check_alloc(links.len(), alloc)?;
    Ok(links
        .iter()
        .enumerate()
        .map(|(l, g)| deaf_term(g, alloc.p1[l], alloc.p2[l], factor))
        .sum())
}

/// Left side minus right side of the relay-deaf condition. Non-negative
/// means the condition holds.
pub fn deaf_condition_margin(channel: &ParallelChannel, alloc: &Allocation) -> Result<f64> {
    let links = channel.gains();
    check_alloc(links.len(), alloc)?;
    Ok(deaf_margin(&links, &alloc.p1, &alloc.p2))
}

pub(crate) fn deaf_margin(links: &[LinkGains], p1: &[f64], p2: &[f64]) -> f64 {
    let (mut lhs, mut rhs) = (0.0, 0.0);
    for (l, g) in links.iter().enumerate() {
        let (a, b) = deaf_condition_sides(g, p1[l], p2[l]);
        lhs += a;
        rhs += b;
    }
    lhs - rhs
}

/// `sum C(rho1 P2 / (P1 + s2)) >= sum C(rho2 P2 / s2e)`; equality holds.
pub fn deaf_condition_holds(channel: &ParallelChannel, alloc: &Allocation) -> Result<bool> {
    Ok(deaf_condition_margin(channel, alloc)? >= 0.0)
}

// ---------------------------------------------------------------------------
// deterministic example

fn gaps(subs: &[DeterministicSubchannel]) -> Result<impl Iterator<Item = (f64, f64)> + '_> {
    if subs.is_empty() {
        return Err(Error::Empty("deterministic subchannels"));
    }
    Ok(subs
        .iter()
        .map(|s| (pos(s.cap_relay_in - s.cap_eve), pos(s.cap_relay_out - s.cap_eve))))
}

/// Rate when coding across subchannels: the minimum of the two summed gaps.
pub fn deterministic_across(subs: &[DeterministicSubchannel]) -> Result<f64> {
    let (a, b) = gaps(subs)?.fold((0.0, 0.0), |(x, y), (a, b)| (x + a, y + b));
    Ok(a.min(b))
}

/// Rate when coding separately: the sum of per-subchannel minima.
pub fn deterministic_separate(subs: &[DeterministicSubchannel]) -> Result<f64> {
    Ok(gaps(subs)?.map(|(a, b)| a.min(b)).sum())
}
