//! Ergodic secrecy rates of the fading relay-eavesdropper channel.
//!
//! A batch of `L` fading states is treated as a parallel channel with `L`
//! subchannels in gain form: every link has power gain `|h|^2`, every rate
//! term is `2 C(.)` (complex channel), and the average-power constraints
//! become the empirical constraints `(1/L) sum P(h_i) <= P`, i.e. a budget
//! of `L P` spread over the states. Reported rates are per-state averages.
//!
//! Draws are common random numbers: the unit-variance gains of a batch depend
//! only on the seed and the batch index, and the geometry only rescales them,
//! so moving the relay changes path loss but not the underlying fades.

use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channel::{Allocation, FadingDraw, Geometry, LinkGains, Mode, ModeAssignment, PowerBudget};
use crate::error::{Error, Result};
use crate::optim::{self, BoundKind, SolverOptions};
use crate::rates::{coherent_fraction, df_inner, nf_inner, pos, BoundResult};

/// Reference distance of [`FadingScenario::reference`].
pub const REFERENCE_MIN_DISTANCE: f64 = 0.1;

/// Rate factor of a complex channel.
pub const COMPLEX_RATE_FACTOR: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseVariances {
    pub relay: f64,
    pub dest: f64,
    pub eve: f64,
}

impl Default for NoiseVariances {
    fn default() -> Self {
        Self {
            relay: 1.0,
            dest: 1.0,
            eve: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FadingScenario {
    pub geometry: Geometry,
    /// Average powers (W).
    pub budget: PowerBudget,
    pub n_states: usize,
    #[serde(default)]
    pub noise: NoiseVariances,
    #[serde(default)]
    pub seed: u64,
    /// Independent batches averaged by [`sweep_relay_position`].
    #[serde(default = "one")]
    pub n_batches: usize,
}

fn one() -> usize {
    1
}

impl FadingScenario {
    /// Relay at `(d, 0)`, 64 states, 64 W at both nodes, unit noise, and a
    /// reference distance of 0.1 so the relay may sit on the destination.
    pub fn reference(d: f64, seed: u64) -> Self {
        Self {
            geometry: Geometry::line(d).with_min_distance(REFERENCE_MIN_DISTANCE),
            budget: PowerBudget {
                p1_total: 64.0,
                p2_total: 64.0,
            },
            n_states: 64,
            noise: NoiseVariances::default(),
            seed,
            n_batches: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_states < 1 {
            return Err(Error::field(None, "n_states", self.n_states as f64, "must be at least 1"));
        }
        if self.n_batches < 1 {
            return Err(Error::field(None, "n_batches", self.n_batches as f64, "must be at least 1"));
        }
        for (name, v) in [
            ("noise.relay", self.noise.relay),
            ("noise.dest", self.noise.dest),
            ("noise.eve", self.noise.eve),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::field(None, name, v, "must be positive and finite"));
            }
        }
        optim::check_budget(&self.budget)?;
        self.geometry.link_scales()?;
        Ok(())
    }

    /// Empirical-mean budget over `n` states.
    fn total_budget(&self, n: usize) -> PowerBudget {
        PowerBudget {
            p1_total: self.budget.p1_total * n as f64,
            p2_total: self.budget.p2_total * n as f64,
        }
    }
}

/// One batch of fading states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FadingBatch {
    pub draws: Vec<FadingDraw>,
}

impl FadingBatch {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn link_gains(&self, noise: &NoiseVariances) -> Vec<LinkGains> {
        self.draws
            .iter()
            .map(|d| d.link_gains(noise.relay, noise.dest, noise.eve))
            .collect()
    }
}

/// Unit-variance circularly-symmetric draws, five per state in the order
/// (sr, sd, rd, se, re).
fn unit_draws(seed: u64, batch: usize, n_states: usize) -> Vec<[Complex64; 5]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch as u64);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    (0..n_states)
        .map(|_| {
            let mut h = [Complex64::default(); 5];
            for v in h.iter_mut() {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *v = Complex64::new(re * s, im * s);
            }
            h
        })
        .collect()
}

fn scale_draws(units: &[[Complex64; 5]], scales: &[f64; 5]) -> FadingBatch {
    FadingBatch {
        draws: units
            .iter()
            .map(|h| FadingDraw {
                h_sr: h[0] * scales[0],
                h_sd: h[1] * scales[1],
                h_rd: h[2] * scales[2],
                h_se: h[3] * scales[3],
                h_re: h[4] * scales[4],
            })
            .collect(),
    }
}

/// First batch of the scenario.
pub fn sample_fading(scenario: &FadingScenario) -> Result<FadingBatch> {
    sample_fading_batch(scenario, 0)
}

/// Batch `batch` of the scenario; batches use disjoint random streams.
pub fn sample_fading_batch(scenario: &FadingScenario, batch: usize) -> Result<FadingBatch> {
    scenario.validate()?;
    let scales = scenario.geometry.link_scales()?;
    Ok(scale_draws(
        &unit_draws(scenario.seed, batch, scenario.n_states),
        &scales,
    ))
}

/// NF where the direct link is at least as strong as the source-relay link,
/// DF otherwise.
pub fn select_modes_heuristic(batch: &FadingBatch) -> ModeAssignment {
    ModeAssignment(
        batch
            .draws
            .iter()
            .map(|d| {
                if d.h_sd.norm_sqr() >= d.h_sr.norm_sqr() {
                    Mode::Nf
                } else {
                    Mode::Df
                }
            })
            .collect(),
    )
}

/// Per-state choice of the mode whose own `min` of the two summands is larger
/// at the given allocation (per-state powers, default: the average powers on
/// every state with `alpha = 1`). Ties go to DF.
pub fn select_modes_best(
    batch: &FadingBatch,
    scenario: &FadingScenario,
    allocation: Option<&Allocation>,
) -> Result<ModeAssignment> {
    scenario.validate()?;
    let links = batch.link_gains(&scenario.noise);
    let n = links.len();
    let uniform = crate::channel::uniform_allocation_len(n, &scenario.total_budget(n));
    let a = allocation.unwrap_or(&uniform);
    a.check_len(n)?;
    Ok(ModeAssignment(
        links
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let (df_value, nf_value) = state_mode_values(g, a, i);
                if df_value >= nf_value {
                    Mode::Df
                } else {
                    Mode::Nf
                }
            })
            .collect(),
    ))
}

/// Per-state `min` of the two DF summands and of the two NF summands.
pub fn state_mode_values(g: &LinkGains, a: &Allocation, i: usize) -> (f64, f64) {
    let f = COMPLEX_RATE_FACTOR;
    let (d, r) = df_inner(g, a.p1[i], a.p2[i], coherent_fraction(a.alpha[i]), f);
    let (na, nb) = nf_inner(g, a.p1[i], a.p2[i], f);
    (pos(d).min(pos(r)), pos(na).min(pos(nb)))
}

fn per_state(mut r: BoundResult, n: usize) -> BoundResult {
    r.value /= n as f64;
    r
}

fn lower_on(
    links: &[LinkGains],
    scenario: &FadingScenario,
    modes: &ModeAssignment,
    options: &SolverOptions,
    warm: &[Allocation],
) -> Result<BoundResult> {
    let n = links.len();
    optim::solve(
        links,
        scenario.total_budget(n),
        COMPLEX_RATE_FACTOR,
        &BoundKind::Lower(modes.clone()),
        options,
        warm,
    )
    .map(|r| per_state(r, n))
}

fn upper_on(
    links: &[LinkGains],
    scenario: &FadingScenario,
    options: &SolverOptions,
    warm: &[Allocation],
) -> Result<BoundResult> {
    let n = links.len();
    optim::solve(
        links,
        scenario.total_budget(n),
        COMPLEX_RATE_FACTOR,
        &BoundKind::Upper,
        options,
        warm,
    )
    .map(|r| per_state(r, n))
}

/// Parallel wiretap baseline: NF structure with the relay silent.
fn no_relay_on(
    links: &[LinkGains],
    scenario: &FadingScenario,
    options: &SolverOptions,
) -> Result<BoundResult> {
    let n = links.len();
    let mut budget = scenario.total_budget(n);
    budget.p2_total = 0.0;
    optim::solve(
        links,
        budget,
        COMPLEX_RATE_FACTOR,
        &BoundKind::Lower(ModeAssignment::all(n, Mode::Nf)),
        options,
        &[],
    )
    .map(|r| per_state(r, n))
}

/// Ergodic achievable rate of the first batch with modes frozen. The value
/// is the per-state average; the allocation holds per-state powers whose
/// means respect the average budget.
pub fn ergodic_lower(
    scenario: &FadingScenario,
    modes: &ModeAssignment,
    options: &SolverOptions,
) -> Result<BoundResult> {
    let batch = sample_fading(scenario)?;
    ergodic_lower_batch(&batch, scenario, modes, options)
}

pub fn ergodic_lower_batch(
    batch: &FadingBatch,
    scenario: &FadingScenario,
    modes: &ModeAssignment,
    options: &SolverOptions,
) -> Result<BoundResult> {
    scenario.validate()?;
    lower_on(&batch.link_gains(&scenario.noise), scenario, modes, options, &[])
}

/// Ergodic upper bound of the first batch.
pub fn ergodic_upper(scenario: &FadingScenario, options: &SolverOptions) -> Result<BoundResult> {
    let batch = sample_fading(scenario)?;
    ergodic_upper_batch(&batch, scenario, options)
}

pub fn ergodic_upper_batch(
    batch: &FadingBatch,
    scenario: &FadingScenario,
    options: &SolverOptions,
) -> Result<BoundResult> {
    scenario.validate()?;
    upper_on(&batch.link_gains(&scenario.noise), scenario, options, &[])
}

/// Parallel wiretap rate of the first batch (relay silent).
pub fn ergodic_no_relay(scenario: &FadingScenario, options: &SolverOptions) -> Result<BoundResult> {
    let batch = sample_fading(scenario)?;
    scenario.validate()?;
    no_relay_on(&batch.link_gains(&scenario.noise), scenario, options)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    /// DF on every state.
    #[serde(rename = "DF_all")]
    DfAll,
    /// NF on every state.
    #[serde(rename = "NF_all")]
    NfAll,
    /// Per-state mode choice; best of several frozen assignments.
    #[serde(rename = "hybrid_best")]
    HybridBest,
    /// Relay silent.
    #[serde(rename = "no_relay")]
    NoRelay,
    #[serde(rename = "upper")]
    Upper,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::DfAll,
        Scheme::NfAll,
        Scheme::HybridBest,
        Scheme::NoRelay,
        Scheme::Upper,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::DfAll => "DF_all",
            Scheme::NfAll => "NF_all",
            Scheme::HybridBest => "hybrid_best",
            Scheme::NoRelay => "no_relay",
            Scheme::Upper => "upper",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| Error::Parse(format!("unknown scheme {s:?}")))
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-state rates of every scheme on one batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeRates {
    pub df_all: f64,
    pub nf_all: f64,
    pub hybrid_best: f64,
    pub no_relay: f64,
    pub upper: f64,
    /// Mode assignment behind `hybrid_best`.
    pub hybrid_modes: ModeAssignment,
}

impl SchemeRates {
    pub fn get(&self, s: Scheme) -> f64 {
        match s {
            Scheme::DfAll => self.df_all,
            Scheme::NfAll => self.nf_all,
            Scheme::HybridBest => self.hybrid_best,
            Scheme::NoRelay => self.no_relay,
            Scheme::Upper => self.upper,
        }
    }
}

/// Upper-bound warm start from an achievable allocation: the correlation is
/// the DF coherent fraction, zero on NF states.
fn correlated_start(a: &Allocation, modes: &ModeAssignment) -> Allocation {
    let mut w = a.clone();
    for i in 0..a.len() {
        w.psi[i] = if modes.is_df(i) {
            coherent_fraction(a.alpha[i])
        } else {
            0.0
        };
        w.alpha[i] = 1.0;
    }
    w
}

/// All five schemes on one batch.
///
/// `hybrid_best` takes the best of four frozen assignments, each optimized:
/// per-state best at the average powers, the gain heuristic, all-DF and
/// all-NF. NF runs are warm-started from the wiretap allocation and the upper
/// bound from both the wiretap and the hybrid allocations, so
/// `NF_all >= no_relay` and `upper >= hybrid_best` hold by construction.
pub fn evaluate_schemes(
    batch: &FadingBatch,
    scenario: &FadingScenario,
    options: &SolverOptions,
) -> Result<SchemeRates> {
    scenario.validate()?;
    let links = batch.link_gains(&scenario.noise);
    let n = links.len();
    let wiretap = no_relay_on(&links, scenario, options)?;
    let wiretap_start = wiretap.allocation.clone();

    let df_modes = ModeAssignment::all(n, Mode::Df);
    let nf_modes = ModeAssignment::all(n, Mode::Nf);
    let df = lower_on(&links, scenario, &df_modes, options, &[])?;
    let nf = lower_on(&links, scenario, &nf_modes, options, std::slice::from_ref(&wiretap_start))?;

    let mut candidates = vec![(df.value, df_modes, df.allocation), (nf.value, nf_modes, nf.allocation)];
    for modes in [
        select_modes_best(batch, scenario, None)?,
        select_modes_heuristic(batch),
    ] {
        if candidates.iter().any(|c| c.1 == modes) {
            continue;
        }
        let warm: Vec<Allocation> = if modes.0.iter().all(|&m| m == Mode::Nf) {
            vec![wiretap_start.clone()]
        } else {
            Vec::new()
        };
        let r = lower_on(&links, scenario, &modes, options, &warm)?;
        candidates.push((r.value, modes, r.allocation));
    }
    let mut best = 0;
    for (k, c) in candidates.iter().enumerate() {
        if c.0 > candidates[best].0 {
            best = k;
        }
    }
    let (hybrid, hybrid_modes, hybrid_alloc) = candidates.swap_remove(best);

    let up = upper_on(
        &links,
        scenario,
        options,
        &[wiretap_start, correlated_start(&hybrid_alloc, &hybrid_modes)],
    )?;
    Ok(SchemeRates {
        df_all: df.value,
        nf_all: nf.value,
        hybrid_best: hybrid,
        no_relay: wiretap.value,
        upper: up.value,
        hybrid_modes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub d: f64,
    pub scheme: Scheme,
    pub rate_bits: f64,
}

/// Rates of the requested schemes with the relay at `(d, 0)` for every `d`.
/// The fading draws are shared across positions; with several batches the
/// per-batch rates are averaged. Rows come out by ascending position index,
/// then in request order.
pub fn sweep_relay_position(
    template: &FadingScenario,
    d_values: &[f64],
    schemes: &[Scheme],
    options: &SolverOptions,
) -> Result<Vec<SweepRow>> {
    if d_values.is_empty() {
        return Err(Error::Empty("d_values"));
    }
    if schemes.is_empty() {
        return Err(Error::Empty("schemes"));
    }
    template.validate()?;
    options.validate()?;
    let units: Vec<_> = (0..template.n_batches)
        .map(|b| unit_draws(template.seed, b, template.n_states))
        .collect();
    let mut rows = Vec::with_capacity(d_values.len() * schemes.len());
    for &d in d_values {
        let scenario = FadingScenario {
            geometry: template.geometry.with_relay_at([d, 0.0]),
            ..template.clone()
        };
        let scales = scenario.geometry.link_scales()?;
        let mut sums = [0.0; 5];
        for u in &units {
            let batch = scale_draws(u, &scales);
            if schemes.iter().all(|s| *s == Scheme::NoRelay) {
                // the baseline alone needs no relay optimization
                let links = batch.link_gains(&scenario.noise);
                sums[3] += no_relay_on(&links, &scenario, options)?.value;
            } else {
                let rates = evaluate_schemes(&batch, &scenario, options)?;
                for (k, s) in Scheme::ALL.iter().enumerate() {
                    sums[k] += rates.get(*s);
                }
            }
        }
        for &s in schemes {
            let k = Scheme::ALL.iter().position(|x| *x == s).expect("known scheme");
            rows.push(SweepRow {
                d,
                scheme: s,
                rate_bits: sums[k] / units.len() as f64,
            });
        }
    }
    Ok(rows)
}

/// `%g`-style formatting with `sig` significant digits: no trailing zeros,
/// exponent form outside `[1e-5, 10^sig)`.
pub fn format_sig(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sig = sig.max(1);
    let e = format!("{:.*e}", sig - 1, x);
    let (mant, exp) = e.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= sig as i32 {
        let mant = trim_zeros(mant);
        format!("{mant}e{exp}")
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Writes `d,scheme,rate_bits` with 9 significant digits and LF endings.
pub fn write_csv<W: Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    out.write_all(b"d,scheme,rate_bits\n")?;
    for r in rows {
        writeln!(out, "{},{},{}", format_sig(r.d, 9), r.scheme, format_sig(r.rate_bits, 9))?;
    }
    Ok(())
}

/// `d_min + k * step` for every `k` with the result not past `d_max` (with a
/// small tolerance for accumulated rounding).
pub fn d_grid(d_min: f64, d_max: f64, step: f64) -> Result<Vec<f64>> {
    for (name, v) in [("d_min", d_min), ("d_max", d_max), ("d_step", step)] {
        if !v.is_finite() {
            return Err(Error::field(None, name, v, "must be finite"));
        }
    }
    if step <= 0.0 {
        return Err(Error::field(None, "d_step", step, "must be positive"));
    }
    if d_max < d_min {
        return Err(Error::field(None, "d_max", d_max, "must not be below d_min"));
    }
    let n = ((d_max - d_min) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| d_min + k as f64 * step).collect())
}
