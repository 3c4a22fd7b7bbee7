//! Monte Carlo of the trapping-event measurement sequence and its data
//! reduction.
//!
//! While an atom is trapped the probe transmission is recorded in
//! back-to-back intervals of 130–140 ms until the atom is lost. A reference
//! count without the atom follows. Each event yields
//!
//! ```text
//! T = (Σn_m / Στ_m) · (τ_r / n_r)
//! ```
//!
//! weighted by τ_r·Στ_m / (τ_r + Στ_m), and the events at one probe
//! detuning are averaged with those weights.

use alloc::vec::Vec;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};

use crate::rng::{self, SimRng};
use crate::spectroscopy::{LineShape, SpectrumPoint};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceConfig {
    /// Transmission of the probe with the atom present.
    pub t_true: f64,
    /// Detected probe count rate without an atom (s⁻¹).
    pub rate: f64,
    /// Shortest and longest measurement interval (s).
    pub tau_m_min: f64,
    pub tau_m_max: f64,
    /// Reference measurement duration (s).
    pub tau_r: f64,
    /// Mean time the atom stays trapped (s).
    pub mean_dwell: f64,
    /// Valid trapping events collected per probe setting.
    pub events_per_point: usize,
    pub seed: u64,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        Self {
            t_true: 1.0,
            rate: 400.0,
            tau_m_min: 0.130,
            tau_m_max: 0.140,
            tau_r: 2.0,
            mean_dwell: 1.5,
            events_per_point: 100,
            seed: 0,
        }
    }
}

impl SequenceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_true > 0.0 && self.t_true <= 1.0) {
            return Err(Error::InvalidInput("true transmission must lie in (0, 1]"));
        }
        if !(self.rate >= 0.0 && self.rate.is_finite()) {
            return Err(Error::InvalidInput("count rate must be non-negative"));
        }
        if !(self.tau_m_min > 0.0 && self.tau_m_max >= self.tau_m_min && self.tau_m_max.is_finite()) {
            return Err(Error::InvalidInput("interval lengths must be positive and ordered"));
        }
        if !(self.tau_r > 0.0 && self.tau_r.is_finite()) {
            return Err(Error::InvalidInput("reference duration must be positive"));
        }
        if !(self.mean_dwell > 0.0 && self.mean_dwell.is_finite()) {
            return Err(Error::InvalidInput("mean dwell time must be positive"));
        }
        if self.events_per_point == 0 {
            return Err(Error::InvalidInput("at least one event per point is required"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    /// Duration (s).
    pub tau: f64,
    pub counts: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrapEvent {
    /// Time the atom stayed trapped (s).
    pub dwell: f64,
    /// Complete measurement intervals; the final partial one is dropped.
    pub intervals: Vec<Interval>,
    pub reference: Interval,
}

impl TrapEvent {
    pub fn measured_time(&self) -> f64 {
        self.intervals.iter().map(|i| i.tau).sum()
    }

    pub fn measured_counts(&self) -> u64 {
        self.intervals.iter().map(|i| i.counts).sum()
    }

    /// Whether the event can enter the reduction.
    pub fn is_usable(&self) -> bool {
        !self.intervals.is_empty() && self.reference.counts > 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionEstimate {
    pub value: f64,
    pub weight: f64,
    pub sigma: f64,
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("finite positive mean").sample(rng) as u64
}

/// One trapping event.
pub fn simulate_event<R: Rng + ?Sized>(config: &SequenceConfig, rng: &mut R) -> Result<TrapEvent> {
    config.validate()?;
    let dwell = Exp::new(1.0 / config.mean_dwell).expect("positive rate").sample(rng);
    let mut taus = Vec::new();
    let mut elapsed = 0.0;
    loop {
        let tau = rng.random_range(config.tau_m_min..=config.tau_m_max);
        if elapsed + tau > dwell {
            break;
        }
        elapsed += tau;
        taus.push(tau);
    }
    let intervals = taus
        .into_iter()
        .map(|tau| Interval { tau, counts: poisson(config.rate * config.t_true * tau, rng) })
        .collect();
    let reference = Interval { tau: config.tau_r, counts: poisson(config.rate * config.tau_r, rng) };
    Ok(TrapEvent { dwell, intervals, reference })
}

/// Per-event transmission with its weight and shot-noise deviation.
pub fn reduce_event(event: &TrapEvent) -> Result<TransmissionEstimate> {
    if event.intervals.is_empty() {
        return Err(Error::NoIntervals);
    }
    if event.reference.counts == 0 {
        return Err(Error::ZeroReferenceCounts);
    }
    let tau_m = event.measured_time();
    let n_m = event.measured_counts() as f64;
    let (tau_r, n_r) = (event.reference.tau, event.reference.counts as f64);
    let value = n_m / tau_m * (tau_r / n_r);
    let weight = tau_r * tau_m / (tau_r + tau_m);
    let sigma = if n_m > 0.0 {
        value * (1.0 / n_m + 1.0 / n_r).sqrt()
    } else {
        // one-count level; the relative formula is undefined at zero counts
        tau_r / (n_r * tau_m)
    };
    Ok(TransmissionEstimate { value, weight, sigma })
}

/// Weighted mean; its deviation propagates the per-event deviations,
/// √(Σw²σ²)/Σw. Independent of input order.
pub fn weighted_average(estimates: &[TransmissionEstimate]) -> Result<TransmissionEstimate> {
    if estimates.is_empty() {
        return Err(Error::Empty);
    }
    if estimates.iter().any(|e| !(e.weight > 0.0) || !(e.sigma >= 0.0)) {
        return Err(Error::InvalidInput("estimates need positive weights and non-negative deviations"));
    }
    let mut sorted = estimates.to_vec();
    sorted.sort_by(|a, b| {
        a.value.total_cmp(&b.value).then(a.weight.total_cmp(&b.weight)).then(a.sigma.total_cmp(&b.sigma))
    });
    let (mut sw, mut swv, mut sw2s2) = (0.0, 0.0, 0.0);
    for e in &sorted {
        sw += e.weight;
        swv += e.weight * e.value;
        sw2s2 += (e.weight * e.sigma).powi(2);
    }
    Ok(TransmissionEstimate { value: swv / sw, weight: sw, sigma: sw2s2.sqrt() / sw })
}

/// Reduced result of one probe setting.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub estimate: TransmissionEstimate,
    /// Usable events, in the order they were drawn.
    pub events: Vec<TrapEvent>,
    /// Events discarded for lacking a complete interval or reference counts.
    pub discarded: usize,
}

fn event_rng(seed: u64, point: u32, attempt: u32) -> SimRng {
    rng::substream(seed, rng::stream_id(point, attempt))
}

/// Collects `events_per_point` usable events for probe setting `point` and
/// averages them. Each attempt draws from its own random stream, so points
/// can be simulated in any order.
pub fn simulate_point(config: &SequenceConfig, point: u32) -> Result<PointResult> {
    config.validate()?;
    if !(config.rate > 0.0) {
        return Err(Error::InvalidInput("a positive count rate is needed to collect events"));
    }
    let max_attempts = config.events_per_point.saturating_mul(1000).min(u32::MAX as usize);
    let mut events = Vec::with_capacity(config.events_per_point);
    let mut estimates = Vec::with_capacity(config.events_per_point);
    let mut attempt = 0usize;
    while events.len() < config.events_per_point {
        if attempt >= max_attempts {
            return Err(Error::InvalidInput("too few trapping events contain a complete interval"));
        }
        let event = simulate_event(config, &mut event_rng(config.seed, point, attempt as u32))?;
        attempt += 1;
        if event.is_usable() {
            estimates.push(reduce_event(&event)?);
            events.push(event);
        }
    }
    Ok(PointResult { estimate: weighted_average(&estimates)?, discarded: attempt - events.len(), events })
}

/// How the no-atom count rate follows the probe detuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePolicy {
    /// Count rate at the line centre (s⁻¹).
    pub rate_at_resonance: f64,
    /// Largest factor by which the probe may be turned up off resonance.
    pub max_scale: f64,
}

impl RatePolicy {
    /// Rate that keeps the atom's scattering rate at its on-resonance value:
    /// the probe intensity is raised in proportion to 1/P_sc(Δ), up to
    /// `max_scale`.
    pub fn rate(&self, shape: &LineShape, detuning: f64) -> f64 {
        let p = shape.scattering_probability(detuning);
        let scale = if shape.p_sc_max == 0.0 {
            1.0
        } else if p > 0.0 {
            (shape.p_sc_max / p).min(self.max_scale)
        } else {
            self.max_scale
        };
        self.rate_at_resonance * scale
    }
}

impl Default for RatePolicy {
    fn default() -> Self {
        Self { rate_at_resonance: 400.0, max_scale: 50.0 }
    }
}

/// End-to-end synthetic transmission spectrum: for each detuning the true
/// transmission comes from `shape` (whose centre should already include any
/// light shift), the full event sequence is simulated and reduced.
pub fn synthesize_spectrum(
    config: &SequenceConfig,
    detunings: &[f64],
    shape: &LineShape,
    policy: &RatePolicy,
) -> Result<Vec<SpectrumPoint>> {
    shape.validate()?;
    if !(policy.rate_at_resonance > 0.0 && policy.max_scale >= 1.0) {
        return Err(Error::InvalidInput("rate policy needs a positive rate and a scale of at least 1"));
    }
    detunings
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let point_config =
                SequenceConfig { t_true: shape.transmission(d), rate: policy.rate(shape, d), ..*config };
            let r = simulate_point(&point_config, i as u32)
                .map_err(|e| Error::ScanPoint { index: i, source: alloc::boxed::Box::new(e) })?;
            Ok(SpectrumPoint { detuning: d, transmission: r.estimate.value, sigma: r.estimate.sigma })
        })
        .collect()
}
