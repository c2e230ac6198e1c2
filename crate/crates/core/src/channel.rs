//! Channel instances: parallel Gaussian relay-eavesdropper channels, power
//! budgets and allocations, relay mode assignments, deterministic link
//! capacities, node geometry and fading draws.
//!
//! A Gaussian subchannel carries its asymmetry in the three noise variances
//! and the two SNR ratios `rho1` (relay-destination vs. source-destination)
//! and `rho2` (relay-eavesdropper vs. source-eavesdropper). Both source direct
//! links have unit gain.
//!
//! All types are plain immutable values once constructed.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack allowed when checking an allocation against its budget.
pub const BUDGET_REL_TOL: f64 = 1e-9;

fn check_positive(index: Option<usize>, field: &'static str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::field(index, field, v, "must be finite"));
    }
    if v <= 0.0 {
        return Err(Error::field(index, field, v, "must be strictly positive"));
    }
    Ok(())
}

fn check_nonneg(index: Option<usize>, field: &'static str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::field(index, field, v, "must be finite"));
    }
    if v < 0.0 {
        return Err(Error::field(index, field, v, "must be non-negative"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSubchannel {
    /// Relay noise variance.
    pub sigma2_relay: f64,
    /// Destination noise variance.
    pub sigma2_dest: f64,
    /// Eavesdropper noise variance.
    pub sigma2_eve: f64,
    /// R-D to S-D SNR ratio.
    pub rho1: f64,
    /// R-E to S-E SNR ratio.
    pub rho2: f64,
}

impl GaussianSubchannel {
    pub fn new(sigma2_relay: f64, sigma2_dest: f64, sigma2_eve: f64, rho1: f64, rho2: f64) -> Self {
        Self {
            sigma2_relay,
            sigma2_dest,
            sigma2_eve,
            rho1,
            rho2,
        }
    }

    /// All variances and ratios equal to one.
    pub fn unit() -> Self {
        Self::new(1.0, 1.0, 1.0, 1.0, 1.0)
    }

    pub fn validate(&self, index: Option<usize>) -> Result<()> {
        check_positive(index, "sigma2_relay", self.sigma2_relay)?;
        check_positive(index, "sigma2_dest", self.sigma2_dest)?;
        check_positive(index, "sigma2_eve", self.sigma2_eve)?;
        check_nonneg(index, "rho1", self.rho1)?;
        check_nonneg(index, "rho2", self.rho2)?;
        Ok(())
    }

    /// Gain-form view: unit direct links, `rho` as relay link gains.
    pub fn gains(&self) -> LinkGains {
        LinkGains {
            g_sr: 1.0,
            g_sd: 1.0,
            g_rd: self.rho1,
            g_se: 1.0,
            g_re: self.rho2,
            n_relay: self.sigma2_relay,
            n_dest: self.sigma2_dest,
            n_eve: self.sigma2_eve,
        }
    }
}

/// One subchannel in gain form: power gains of the five links and the three
/// receiver noise variances.
///
/// Gaussian subchannels map onto this with unit direct gains; fading states
/// map onto it with `|h|^2` per link. Zero gains are allowed here, which is
/// what lets an eavesdropper that hears nothing be represented exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkGains {
    pub g_sr: f64,
    pub g_sd: f64,
    pub g_rd: f64,
    pub g_se: f64,
    pub g_re: f64,
    pub n_relay: f64,
    pub n_dest: f64,
    pub n_eve: f64,
}

impl LinkGains {
    pub fn validate(&self, index: Option<usize>) -> Result<()> {
        check_nonneg(index, "g_sr", self.g_sr)?;
        check_nonneg(index, "g_sd", self.g_sd)?;
        check_nonneg(index, "g_rd", self.g_rd)?;
        check_nonneg(index, "g_se", self.g_se)?;
        check_nonneg(index, "g_re", self.g_re)?;
        check_positive(index, "n_relay", self.n_relay)?;
        check_positive(index, "n_dest", self.n_dest)?;
        check_positive(index, "n_eve", self.n_eve)?;
        Ok(())
    }

    /// Same link gains seen by the destination and the eavesdropper.
    pub fn eavesdropper_mirrors_destination(&self) -> bool {
        self.g_sd == self.g_se && self.g_rd == self.g_re && self.n_dest == self.n_eve
    }
}

/// A validated, non-empty sequence of Gaussian subchannels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParallelChannel")]
pub struct ParallelChannel {
    subchannels: Vec<GaussianSubchannel>,
}

#[derive(Deserialize)]
struct RawParallelChannel {
    subchannels: Vec<GaussianSubchannel>,
}

impl TryFrom<RawParallelChannel> for ParallelChannel {
    type Error = Error;

    fn try_from(raw: RawParallelChannel) -> Result<Self> {
        ParallelChannel::new(raw.subchannels)
    }
}

impl ParallelChannel {
    pub fn new(subchannels: Vec<GaussianSubchannel>) -> Result<Self> {
        if subchannels.is_empty() {
            return Err(Error::Empty("subchannels"));
        }
        for (i, s) in subchannels.iter().enumerate() {
            s.validate(Some(i))?;
        }
        Ok(Self { subchannels })
    }

    /// `n` copies of the same subchannel.
    pub fn repeated(sub: GaussianSubchannel, n: usize) -> Result<Self> {
        Self::new(vec![sub; n])
    }

    pub fn subchannels(&self) -> &[GaussianSubchannel] {
        &self.subchannels
    }

    pub fn len(&self) -> usize {
        self.subchannels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subchannels.is_empty()
    }

    pub fn gains(&self) -> Vec<LinkGains> {
        self.subchannels.iter().map(GaussianSubchannel::gains).collect()
    }

    /// Every subchannel has `sigma2_eve == sigma2_dest` and `rho2 == rho1`.
    pub fn is_symmetric(&self) -> bool {
        self.subchannels
            .iter()
            .all(|s| s.sigma2_eve == s.sigma2_dest && s.rho2 == s.rho1)
    }
}

/// Checks every subchannel invariant and returns the validated channel. The
/// error names the first offending subchannel and field.
pub fn validate_channel(subchannels: Vec<GaussianSubchannel>) -> Result<ParallelChannel> {
    ParallelChannel::new(subchannels)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBudget", into = "RawBudget")]
pub struct PowerBudget {
    pub p1_total: f64,
    pub p2_total: f64,
}

#[derive(Serialize, Deserialize)]
struct RawBudget {
    p1: f64,
    p2: f64,
}

impl TryFrom<RawBudget> for PowerBudget {
    type Error = Error;

    fn try_from(raw: RawBudget) -> Result<Self> {
        PowerBudget::new(raw.p1, raw.p2)
    }
}

impl From<PowerBudget> for RawBudget {
    fn from(b: PowerBudget) -> Self {
        RawBudget {
            p1: b.p1_total,
            p2: b.p2_total,
        }
    }
}

impl PowerBudget {
    pub fn new(p1_total: f64, p2_total: f64) -> Result<Self> {
        check_nonneg(None, "p1", p1_total)?;
        check_nonneg(None, "p2", p2_total)?;
        Ok(Self { p1_total, p2_total })
    }

    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::new(self.p1_total * k, self.p2_total * k)
    }
}

/// Per-subchannel powers plus the DF power split `alpha` and the source-relay
/// correlation `psi`. Entries of `alpha` and `psi` that do not apply to a
/// subchannel's role are carried but ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub alpha: Vec<f64>,
    pub psi: Vec<f64>,
}

impl Allocation {
    /// Zero power everywhere, `alpha = 1`, `psi = 0`.
    pub fn zeros(len: usize) -> Self {
        Self {
            p1: vec![0.0; len],
            p2: vec![0.0; len],
            alpha: vec![1.0; len],
            psi: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.p1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p1.is_empty()
    }

    pub fn check_len(&self, len: usize) -> Result<()> {
        for (what, v) in [
            ("p1", &self.p1),
            ("p2", &self.p2),
            ("alpha", &self.alpha),
            ("psi", &self.psi),
        ] {
            if v.len() != len {
                return Err(Error::LengthMismatch {
                    what,
                    expected: len,
                    found: v.len(),
                });
            }
        }
        Ok(())
    }

    /// Checks lengths, signs, box constraints and both power sums.
    pub fn validate(&self, len: usize, budget: &PowerBudget) -> Result<()> {
        self.check_len(len)?;
        for i in 0..len {
            check_nonneg(Some(i), "p1", self.p1[i])?;
            check_nonneg(Some(i), "p2", self.p2[i])?;
            let a = self.alpha[i];
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::field(Some(i), "alpha", a, "must lie in [0, 1]"));
            }
            let s = self.psi[i];
            if !(-1.0..=1.0).contains(&s) {
                return Err(Error::field(Some(i), "psi", s, "must lie in [-1, 1]"));
            }
        }
        for (which, v, total) in [
            ("p1", &self.p1, budget.p1_total),
            ("p2", &self.p2, budget.p2_total),
        ] {
            let sum: f64 = v.iter().sum();
            if sum > total * (1.0 + BUDGET_REL_TOL) {
                return Err(Error::BudgetExceeded {
                    which,
                    sum,
                    budget: total,
                });
            }
        }
        Ok(())
    }
}

/// Equal split of both budgets over `len` subchannels, `alpha = 1`, `psi = 0`.
pub fn uniform_allocation_len(len: usize, budget: &PowerBudget) -> Allocation {
    let n = len as f64;
    Allocation {
        p1: vec![budget.p1_total / n; len],
        p2: vec![budget.p2_total / n; len],
        alpha: vec![1.0; len],
        psi: vec![0.0; len],
    }
}

pub fn uniform_allocation(channel: &ParallelChannel, budget: &PowerBudget) -> Allocation {
    uniform_allocation_len(channel.len(), budget)
}

/// Relay operation on one subchannel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Decode-and-forward.
    #[serde(rename = "DF")]
    Df,
    /// Noise forwarding.
    #[serde(rename = "NF")]
    Nf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModeAssignment(pub Vec<Mode>);

impl ModeAssignment {
    pub fn all(len: usize, mode: Mode) -> Self {
        Self(vec![mode; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.0
    }

    pub fn is_df(&self, l: usize) -> bool {
        self.0[l] == Mode::Df
    }

    pub fn check_len(&self, len: usize) -> Result<()> {
        if self.0.len() != len {
            return Err(Error::LengthMismatch {
                what: "modes",
                expected: len,
                found: self.0.len(),
            });
        }
        Ok(())
    }
}

/// Link capacities (bits) of one deterministic subchannel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeterministicSubchannel {
    pub cap_relay_in: f64,
    pub cap_relay_out: f64,
    pub cap_eve: f64,
}

impl DeterministicSubchannel {
    pub fn new(cap_relay_in: f64, cap_relay_out: f64, cap_eve: f64) -> Result<Self> {
        check_nonneg(None, "cap_relay_in", cap_relay_in)?;
        check_nonneg(None, "cap_relay_out", cap_relay_out)?;
        check_nonneg(None, "cap_eve", cap_eve)?;
        Ok(Self {
            cap_relay_in,
            cap_relay_out,
            cap_eve,
        })
    }
}

/// Node placement in the plane plus the path-loss exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub source_pos: [f64; 2],
    pub relay_pos: [f64; 2],
    pub dest_pos: [f64; 2],
    pub eve_pos: [f64; 2],
    pub gamma: f64,
    /// Reference distance: shorter links get the path loss of this distance.
    /// Zero disables the floor, and coincident nodes are then an error.
    #[serde(default)]
    pub min_distance: f64,
}

impl Geometry {
    /// Source at the origin, destination at (1, 0), eavesdropper at (0, 1),
    /// relay at (d, 0), path-loss exponent 2.
    pub fn line(d: f64) -> Self {
        Self {
            source_pos: [0.0, 0.0],
            relay_pos: [d, 0.0],
            dest_pos: [1.0, 0.0],
            eve_pos: [0.0, 1.0],
            gamma: 2.0,
            min_distance: 0.0,
        }
    }

    pub fn with_min_distance(&self, min_distance: f64) -> Self {
        Self {
            min_distance,
            ..*self
        }
    }

    pub fn with_relay_at(&self, pos: [f64; 2]) -> Self {
        Self {
            relay_pos: pos,
            ..*self
        }
    }

    fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
        (a[0] - b[0]).hypot(a[1] - b[1])
    }

    /// Amplitude scale `d^(-gamma/2)` of every link, in the order
    /// (sr, sd, rd, se, re).
    pub fn link_scales(&self) -> Result<[f64; 5]> {
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::field(None, "gamma", self.gamma, "must be positive and finite"));
        }
        if !(self.min_distance.is_finite() && self.min_distance >= 0.0) {
            return Err(Error::field(
                None,
                "min_distance",
                self.min_distance,
                "must be finite and non-negative",
            ));
        }
        let links = [
            ("source", "relay", self.source_pos, self.relay_pos),
            ("source", "destination", self.source_pos, self.dest_pos),
            ("relay", "destination", self.relay_pos, self.dest_pos),
            ("source", "eavesdropper", self.source_pos, self.eve_pos),
            ("relay", "eavesdropper", self.relay_pos, self.eve_pos),
        ];
        let mut out = [0.0; 5];
        for (k, (na, nb, a, b)) in links.into_iter().enumerate() {
            let d = Self::dist(a, b).max(self.min_distance);
            if !d.is_finite() {
                return Err(Error::field(None, "position", d, "must be finite"));
            }
            if d == 0.0 {
                return Err(Error::CoincidentNodes(na, nb));
            }
            out[k] = d.powf(-self.gamma / 2.0);
        }
        Ok(out)
    }
}

/// Complex gains of one fading realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingDraw {
    pub h_sr: Complex64,
    pub h_sd: Complex64,
    pub h_rd: Complex64,
    pub h_se: Complex64,
    pub h_re: Complex64,
}

impl FadingDraw {
    /// Power gains and the given noise variances as a gain-form subchannel.
    pub fn link_gains(&self, n_relay: f64, n_dest: f64, n_eve: f64) -> LinkGains {
        LinkGains {
            g_sr: self.h_sr.norm_sqr(),
            g_sd: self.h_sd.norm_sqr(),
            g_rd: self.h_rd.norm_sqr(),
            g_se: self.h_se.norm_sqr(),
            g_re: self.h_re.norm_sqr(),
            n_relay,
            n_dest,
            n_eve,
        }
    }
}

/// The JSON document for a channel instance:
/// `{"subchannels":[{..}],"budget":{"p1":..,"p2":..}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelDocument {
    #[serde(flatten)]
    pub channel: ParallelChannel,
    pub budget: PowerBudget,
}

impl ChannelDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("channel document serializes")
    }
}
