//! Photon antibunching of a driven two-level atom: the closed-form g²(τ),
//! a renewal simulation of detection streams on two detectors, and the
//! delay histogram that estimates g²(τ) from such streams.
//!
//! Times are in seconds and angular rates in rad/s throughout.
//!
//! The optical Bloch equations used here, with p the excited population,
//! are
//!
//! ```text
//! p' = −Γp − Ωy
//! x' = −(Γ/2)x − Δy
//! y' =  Δx − (Γ/2)y − Ω/2 + Ωp
//! ```
//!
//! Started in the ground state, p(τ)/p_ss is g²(τ). Its Laplace transform is
//! (Ω²/2)(s + Γ/2) / (s·D(s)) with
//! D(s) = s³ + 2Γs² + (5Γ²/4 + Δ² + Ω²)s + Γ(Γ²/4 + Δ²) + Ω²Γ/2.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::quadrature::GaussLegendre;
use crate::rng;
use crate::{Error, Result};

/// Excited-state lifetime of ⁸⁷Rb 5P₃/₂ (s).
pub const RB87_LIFETIME: f64 = 27e-9;

/// Resonant drive of a two-level atom and the detection setup behind it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelDrive {
    /// Rabi frequency Ω/2π (MHz).
    pub rabi_mhz: f64,
    /// Natural linewidth Γ/2π (MHz).
    pub linewidth_mhz: f64,
    /// Drive detuning Δ/2π (MHz).
    pub detuning_mhz: f64,
    /// Background count rate on each detector (s⁻¹).
    pub background_rate: f64,
    /// Probability that a detected photon goes to detector 1.
    pub split_ratio: f64,
    /// Probability that an emitted photon is detected at all.
    pub detection_efficiency: f64,
}

impl TwoLevelDrive {
    /// Ω/2π = 62 MHz on resonance, 27 ns lifetime, ideal detection.
    pub fn experiment() -> Self {
        Self {
            rabi_mhz: 62.0,
            linewidth_mhz: 1e-6 / (2.0 * PI * RB87_LIFETIME),
            detuning_mhz: 0.0,
            background_rate: 0.0,
            split_ratio: 0.5,
            detection_efficiency: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.linewidth_mhz > 0.0 && self.linewidth_mhz.is_finite()) {
            return Err(Error::InvalidInput("linewidth must be positive"));
        }
        if !(self.rabi_mhz >= 0.0 && self.rabi_mhz.is_finite()) {
            return Err(Error::InvalidInput("Rabi frequency must be non-negative"));
        }
        if !self.detuning_mhz.is_finite() {
            return Err(Error::InvalidInput("detuning must be finite"));
        }
        if !(self.background_rate >= 0.0 && self.background_rate.is_finite()) {
            return Err(Error::InvalidInput("background rate must be non-negative"));
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::InvalidInput("split ratio must lie in (0, 1)"));
        }
        if !(self.detection_efficiency > 0.0 && self.detection_efficiency <= 1.0) {
            return Err(Error::InvalidInput("detection efficiency must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI * 1e6 * self.rabi_mhz
    }

    pub fn gamma(&self) -> f64 {
        2.0 * PI * 1e6 * self.linewidth_mhz
    }

    pub fn delta(&self) -> f64 {
        2.0 * PI * 1e6 * self.detuning_mhz
    }

    /// Steady-state excited population.
    pub fn steady_state_population(&self) -> f64 {
        let (o, g, d) = (self.omega(), self.gamma(), self.delta());
        0.25 * o * o / (0.25 * g * g + d * d + 0.5 * o * o)
    }

    /// Photon emission rate Γ·p_ss (s⁻¹).
    pub fn emission_rate(&self) -> f64 {
        self.gamma() * self.steady_state_population()
    }

    /// Mean signal count rate on each detector (s⁻¹).
    pub fn signal_rates(&self) -> (f64, f64) {
        let r = self.emission_rate() * self.detection_efficiency;
        (r * self.split_ratio, r * (1.0 - self.split_ratio))
    }

    /// Fraction of counts on each detector that come from the atom.
    pub fn signal_fractions(&self) -> (f64, f64) {
        let (s1, s2) = self.signal_rates();
        let f = |s: f64| if s > 0.0 { s / (s + self.background_rate) } else { 0.0 };
        (f(s1), f(s2))
    }
}

#[derive(Debug, Clone)]
enum Form {
    /// Δ = 0: 1 − e^{−aτ}[cos μτ + (a/μ) sin μτ], a = 3Γ/4, μ² = Ω² − Γ²/16.
    Resonant { a: f64, mu2: f64 },
    /// Partial fractions over the roots of D(s).
    Residues { roots: [Complex64; 3], coeffs: [Complex64; 3] },
    /// Nearly repeated roots: propagate the Bloch vector directly.
    Propagator { matrix: [[f64; 4]; 4] },
}

/// g²(τ) of resonance fluorescence for one drive.
#[derive(Debug, Clone)]
pub struct G2Model {
    form: Form,
}

impl G2Model {
    pub fn new(drive: &TwoLevelDrive) -> Result<Self> {
        if !(drive.linewidth_mhz > 0.0) {
            return Err(Error::InvalidInput("linewidth must be positive"));
        }
        let (o, g, d) = (drive.omega(), drive.gamma(), drive.delta());
        if d == 0.0 {
            return Ok(Self { form: Form::Resonant { a: 0.75 * g, mu2: o * o - g * g / 16.0 } });
        }
        // Roots in units of Γ keep the polynomial well scaled.
        let (os, ds) = (o / g, d / g);
        let c2 = 2.0;
        let c1 = 1.25 + ds * ds + os * os;
        let c0 = 0.25 + ds * ds + 0.5 * os * os;
        let roots = cubic_roots(c2, c1, c0);
        let min_gap = (0..3)
            .flat_map(|i| (i + 1..3).map(move |j| (i, j)))
            .map(|(i, j)| (roots[i] - roots[j]).norm())
            .fold(f64::INFINITY, f64::min);
        let scale = 1.0 + os + ds.abs();
        if min_gap < 1e-4 * scale {
            return Ok(Self { form: Form::Propagator { matrix: bloch_generator(o, g, d) } });
        }
        let p_ss = drive.steady_state_population();
        let mut coeffs = [Complex64::new(0.0, 0.0); 3];
        for i in 0..3 {
            let r = roots[i];
            let dprime = 3.0 * r * r + 2.0 * c2 * r + c1;
            // Numerator (Ω²/2)(s + Γ/2) in Γ units, over s·D'(s).
            let num = 0.5 * os * os * (r + 0.5);
            coeffs[i] = num / (r * dprime) / p_ss;
        }
        let roots = roots.map(|r| r * g);
        Ok(Self { form: Form::Residues { roots, coeffs } })
    }

    /// g²(τ); symmetric in τ and exactly 0 at τ = 0.
    pub fn eval(&self, tau: f64) -> f64 {
        let t = tau.abs();
        if t == 0.0 {
            return 0.0;
        }
        match &self.form {
            Form::Resonant { a, mu2 } => {
                let (a, mu2) = (*a, *mu2);
                let tol = 1e-24 * a * a;
                let damped = if mu2 > tol {
                    let mu = mu2.sqrt();
                    (-a * t).exp() * ((mu * t).cos() + a / mu * (mu * t).sin())
                } else if mu2 < -tol {
                    let nu = (-mu2).sqrt();
                    let (fast, slow) = ((-(a + nu) * t).exp(), ((nu - a) * t).exp());
                    0.5 * (slow + fast) + 0.5 * a / nu * (slow - fast)
                } else {
                    (-a * t).exp() * (1.0 + a * t)
                };
                1.0 - damped
            }
            Form::Residues { roots, coeffs } => {
                1.0 + roots.iter().zip(coeffs).map(|(&r, &c)| (c * (r * t).exp()).re).sum::<f64>()
            }
            Form::Propagator { matrix } => {
                let (p, p_ss) = propagate_population(matrix, t);
                p / p_ss
            }
        }
    }
}

/// Closed-form g² on a grid of delays (s).
pub fn g2_closed_form(drive: &TwoLevelDrive, taus: &[f64]) -> Result<Vec<f64>> {
    let model = G2Model::new(drive)?;
    Ok(taus.iter().map(|&t| model.eval(t)).collect())
}

/// Roots of the monic cubic s³ + c2 s² + c1 s + c0 (Durand–Kerner, then
/// Newton polishing).
fn cubic_roots(c2: f64, c1: f64, c0: f64) -> [Complex64; 3] {
    let poly = |z: Complex64| ((z + c2) * z + c1) * z + c0;
    let dpoly = |z: Complex64| (3.0 * z + 2.0 * c2) * z + c1;
    let radius = 1.0 + c2.abs().max(c1.abs()).max(c0.abs());
    let seed = Complex64::new(0.4, 0.9);
    let mut z = [seed * radius, seed * seed * radius, seed * seed * seed * radius];
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..3 {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..3 {
                if i != j {
                    denom *= z[i] - z[j];
                }
            }
            let dz = poly(z[i]) / denom;
            z[i] -= dz;
            moved = moved.max(dz.norm());
        }
        if moved < 1e-15 * radius {
            break;
        }
    }
    for r in &mut z {
        for _ in 0..3 {
            let d = dpoly(*r);
            if d.norm() == 0.0 {
                break;
            }
            *r -= poly(*r) / d;
        }
    }
    z
}

/// Generator of the affine Bloch flow on (p, x, y, 1).
fn bloch_generator(o: f64, g: f64, d: f64) -> [[f64; 4]; 4] {
    [
        [-g, 0.0, -o, 0.0],
        [0.0, -0.5 * g, -d, 0.0],
        [o, d, -0.5 * g, -0.5 * o],
        [0.0, 0.0, 0.0, 0.0],
    ]
}

fn mat_mul(a: &[[f64; 4]; 4], b: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
    let mut c = [[0.0; 4]; 4];
    for i in 0..4 {
        for k in 0..4 {
            for j in 0..4 {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

/// Excited population after time t from the ground state, and its
/// steady-state value, by scaling and squaring.
fn propagate_population(m: &[[f64; 4]; 4], t: f64) -> (f64, f64) {
    let norm = m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs())) * 4.0 * t;
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let h = t / 2f64.powi(squarings);
    let mut term = [[0.0; 4]; 4];
    let mut exp = [[0.0; 4]; 4];
    for i in 0..4 {
        term[i][i] = 1.0;
        exp[i][i] = 1.0;
    }
    let scaled = m.map(|row| row.map(|v| v * h));
    for k in 1..=18 {
        term = mat_mul(&term, &scaled).map(|row| row.map(|v| v / k as f64));
        for i in 0..4 {
            for j in 0..4 {
                exp[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        exp = mat_mul(&exp, &exp);
    }
    // Steady state from the linear system M₃ v = −b.
    let (o, g, d) = (-m[0][2], -m[0][0], m[2][1]);
    let p_ss = 0.25 * o * o / (0.25 * g * g + d * d + 0.5 * o * o);
    (exp[0][3], p_ss)
}

/// Waiting-time distribution between successive emissions: after an
/// emission the atom is in the ground state and evolves under the no-jump
/// Hamiltonian H = [[0, Ω/2], [Ω/2, −Δ − iΓ/2]] until the next emission.
/// The survival probability is the norm of that conditional state and the
/// density is Γ|c_e(t)|².
#[derive(Debug, Clone)]
pub struct WaitingTime {
    half_trace: Complex64,
    kappa: Complex64,
    /// A − (tr A/2)·I with A = −iH.
    shifted: [[Complex64; 2]; 2],
    gamma: f64,
    times: Vec<f64>,
    cdf: Vec<f64>,
}

impl WaitingTime {
    const TABLE: usize = 4096;

    pub fn new(drive: &TwoLevelDrive) -> Result<Self> {
        drive.validate()?;
        if drive.omega() == 0.0 {
            return Err(Error::InvalidInput("an undriven atom never emits"));
        }
        let (o, g, d) = (drive.omega(), drive.gamma(), drive.delta());
        let i = Complex64::new(0.0, 1.0);
        let a = [[Complex64::new(0.0, 0.0), -i * (0.5 * o)], [-i * (0.5 * o), i * d - 0.5 * g]];
        let half_trace = 0.5 * (a[0][0] + a[1][1]);
        let kappa = (half_trace * half_trace - 0.25 * o * o).sqrt();
        let shifted = [[a[0][0] - half_trace, a[0][1]], [a[1][0], a[1][1] - half_trace]];
        let mut wt = Self { half_trace, kappa, shifted, gamma: g, times: Vec::new(), cdf: Vec::new() };
        let mut t_max = 1.0 / g;
        while wt.survival(t_max) > 1e-13 {
            t_max *= 2.0;
        }
        wt.times = (0..Self::TABLE).map(|k| t_max * k as f64 / (Self::TABLE - 1) as f64).collect();
        wt.cdf = wt.times.iter().map(|&t| wt.cdf(t)).collect();
        Ok(wt)
    }

    fn amplitudes(&self, t: f64) -> (Complex64, Complex64) {
        let kt = self.kappa * t;
        let sinh_over = if self.kappa.norm() * t < 1e-8 { Complex64::new(t, 0.0) } else { kt.sinh() / self.kappa };
        let pre = (self.half_trace * t).exp();
        let cosh = kt.cosh();
        // First column of e^{At} applied to the ground state.
        let cg = pre * (cosh + sinh_over * self.shifted[0][0]);
        let ce = pre * (sinh_over * self.shifted[1][0]);
        (cg, ce)
    }

    pub fn survival(&self, t: f64) -> f64 {
        let (cg, ce) = self.amplitudes(t);
        cg.norm_sqr() + ce.norm_sqr()
    }

    pub fn cdf(&self, t: f64) -> f64 {
        1.0 - self.survival(t)
    }

    pub fn density(&self, t: f64) -> f64 {
        self.gamma * self.amplitudes(t).1.norm_sqr()
    }

    /// Mean waiting time from the tabulated distribution.
    pub fn mean(&self) -> f64 {
        let h = self.times[1];
        self.times.windows(2).map(|w| 0.5 * (self.survival(w[0]) + self.survival(w[1])) * h).sum()
    }

    /// Inverse-transform sample: the tabulated CDF brackets the root, a
    /// safeguarded Newton iteration on the exact CDF refines it.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let k = self.cdf.partition_point(|&c| c <= u);
        let (mut lo, mut hi) = if k == 0 {
            (0.0, self.times[0])
        } else if k >= self.cdf.len() {
            let mut hi = self.times[self.times.len() - 1];
            let lo = hi;
            while self.cdf(hi) <= u {
                hi *= 2.0;
            }
            (lo, hi)
        } else {
            (self.times[k - 1], self.times[k])
        };
        let mut t = 0.5 * (lo + hi);
        for _ in 0..100 {
            let f = self.cdf(t) - u;
            if f.abs() < 1e-15 {
                break;
            }
            if f > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
            let w = self.density(t);
            let newton = if w > 0.0 { t - f / w } else { f64::NAN };
            t = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        }
        t
    }
}

/// Detection timestamps (s) of one detector.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonStream {
    pub label: String,
    timestamps: Vec<f64>,
    duration: f64,
}

impl PhotonStream {
    pub fn new(label: impl Into<String>, timestamps: Vec<f64>, duration: f64) -> Result<Self> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::InvalidInput("stream duration must be positive"));
        }
        if timestamps.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidInput("timestamps must be strictly increasing"));
        }
        if timestamps.first().is_some_and(|&t| t < 0.0) || timestamps.last().is_some_and(|&t| t > duration) {
            return Err(Error::InvalidInput("timestamps must lie within the stream duration"));
        }
        Ok(Self { label: label.into(), timestamps, duration })
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn rate(&self) -> f64 {
        self.timestamps.len() as f64 / self.duration
    }
}

fn poisson_times<R: Rng + ?Sized>(rate: f64, duration: f64, rng: &mut R) -> Vec<f64> {
    let mut out = Vec::new();
    if rate <= 0.0 {
        return out;
    }
    let gap = Exp::new(rate).expect("positive rate");
    let mut t = gap.sample(rng);
    while t < duration {
        out.push(t);
        t += gap.sample(rng);
    }
    out
}

fn merge_sorted(a: Vec<f64>, b: Vec<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = if j >= b.len() || (i < a.len() && a[i] <= b[j]) {
            i += 1;
            a[i - 1]
        } else {
            j += 1;
            b[j - 1]
        };
        if out.last() != Some(&next) {
            out.push(next);
        }
    }
    out
}

/// Simulated detections on two detectors over `duration` seconds.
///
/// Emissions form a renewal process with the [`WaitingTime`] distribution,
/// starting from the ground state at t = 0. Each emission is detected with
/// the drive's efficiency and routed by its split ratio; independent Poisson
/// background is added to each detector.
pub fn simulate_streams(drive: &TwoLevelDrive, duration: f64, seed: u64) -> Result<(PhotonStream, PhotonStream)> {
    drive.validate()?;
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::InvalidInput("stream duration must be positive"));
    }
    let (mut d1, mut d2) = (Vec::new(), Vec::new());
    if drive.omega() > 0.0 {
        let wt = WaitingTime::new(drive)?;
        let mut rng = rng::substream(seed, 0);
        let mut t = wt.sample(&mut rng);
        while t < duration {
            if rng.random::<f64>() < drive.detection_efficiency {
                if rng.random::<f64>() < drive.split_ratio {
                    d1.push(t);
                } else {
                    d2.push(t);
                }
            }
            t += wt.sample(&mut rng);
        }
    }
    let b1 = poisson_times(drive.background_rate, duration, &mut rng::substream(seed, 1));
    let b2 = poisson_times(drive.background_rate, duration, &mut rng::substream(seed, 2));
    Ok((
        PhotonStream::new("D1", merge_sorted(d1, b1), duration)?,
        PhotonStream::new("D2", merge_sorted(d2, b2), duration)?,
    ))
}

/// Delay histogram of detector-2 clicks relative to detector-1 clicks,
/// normalized to the uncorrelated expectation.
#[derive(Debug, Clone, PartialEq)]
pub struct G2Histogram {
    /// Bin width (s); bin k is centred on k·width.
    pub bin_width: f64,
    /// Bin centres (s), from −n·width to n·width.
    pub centers: Vec<f64>,
    pub counts: Vec<u64>,
    pub values: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Expected counts per bin for uncorrelated streams, N₁N₂·width/T.
    pub normalization: f64,
    pub duration: f64,
    /// Set when either stream is empty or no pair fell in the window.
    pub insufficient_data: bool,
}

impl G2Histogram {
    pub fn total_counts(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Bin edges (s), one more than the number of bins.
    pub fn edges(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.centers.iter().map(|c| c - 0.5 * self.bin_width).collect();
        if let Some(&last) = self.centers.last() {
            e.push(last + 0.5 * self.bin_width);
        }
        e
    }

    /// Removes uncorrelated background: with signal fractions ρ₁, ρ₂ the
    /// measured g² is 1 + ρ₁ρ₂(g² − 1).
    pub fn background_subtracted(&self, rho1: f64, rho2: f64) -> Result<G2Histogram> {
        if !(rho1 > 0.0 && rho1 <= 1.0 && rho2 > 0.0 && rho2 <= 1.0) {
            return Err(Error::InvalidInput("signal fractions must lie in (0, 1]"));
        }
        let r = rho1 * rho2;
        let mut out = self.clone();
        for (v, s) in out.values.iter_mut().zip(out.sigma.iter_mut()) {
            *v = (*v - (1.0 - r)) / r;
            *s /= r;
        }
        Ok(out)
    }
}

/// Histograms delays t₂ − t₁ within ±`window` into bins of `bin_width`.
/// The window is rounded to a whole number of bins on each side.
pub fn histogram_g2(d1: &PhotonStream, d2: &PhotonStream, bin_width: f64, window: f64) -> Result<G2Histogram> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::InvalidInput("bin width must be positive"));
    }
    if !(window > 0.0 && window.is_finite()) {
        return Err(Error::InvalidInput("histogram window must be positive"));
    }
    if (d1.duration - d2.duration).abs() > 1e-12 * d1.duration {
        return Err(Error::InvalidInput("streams must cover the same duration"));
    }
    let n = (window / bin_width).round().max(1.0) as i64;
    let bins = (2 * n + 1) as usize;
    let centers: Vec<f64> = (-n..=n).map(|k| k as f64 * bin_width).collect();
    let edge = (n as f64 + 0.5) * bin_width;
    let mut counts = vec![0u64; bins];
    let t2 = d2.timestamps();
    let mut start = 0;
    for &t1 in d1.timestamps() {
        while start < t2.len() && t2[start] <= t1 - edge {
            start += 1;
        }
        let mut j = start;
        while j < t2.len() && t2[j] < t1 + edge {
            let k = ((t2[j] - t1) / bin_width).round() as i64;
            if (-n..=n).contains(&k) {
                counts[(k + n) as usize] += 1;
            }
            j += 1;
        }
    }
    let duration = d1.duration;
    let normalization = d1.len() as f64 * d2.len() as f64 * bin_width / duration;
    let insufficient_data = normalization == 0.0 || counts.iter().all(|&c| c == 0);
    let (values, sigma) = if normalization > 0.0 {
        (
            counts.iter().map(|&c| c as f64 / normalization).collect(),
            counts.iter().map(|&c| (c as f64).sqrt() / normalization).collect(),
        )
    } else {
        (vec![0.0; bins], vec![0.0; bins])
    };
    Ok(G2Histogram { bin_width, centers, counts, values, sigma, normalization, duration, insufficient_data })
}

/// g² of the detected streams averaged over each histogram bin, including
/// dilution by background.
pub fn expected_bin_values(hist: &G2Histogram, drive: &TwoLevelDrive) -> Result<Vec<f64>> {
    let model = G2Model::new(drive)?;
    let (rho1, rho2) = drive.signal_fractions();
    let r = rho1 * rho2;
    let rule = GaussLegendre::new(24);
    let half = 0.5 * hist.bin_width;
    Ok(hist
        .centers
        .iter()
        .map(|&c| {
            let (a, b) = (c - half, c + half);
            let integral = if a < 0.0 && b > 0.0 {
                rule.integrate(a, 0.0, |t| model.eval(t)) + rule.integrate(0.0, b, |t| model.eval(t))
            } else {
                rule.integrate(a, b, |t| model.eval(t))
            };
            1.0 + r * (integral / hist.bin_width - 1.0)
        })
        .collect())
}

/// Pearson χ² of histogram counts against the bin-averaged model, using the
/// expected count as the variance of each bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquared {
    pub chi2: f64,
    pub dof: usize,
}

impl ChiSquared {
    pub fn reduced(&self) -> f64 {
        self.chi2 / self.dof as f64
    }
}

pub fn chi_squared(hist: &G2Histogram, drive: &TwoLevelDrive) -> Result<ChiSquared> {
    if hist.insufficient_data {
        return Err(Error::Empty);
    }
    let expected = expected_bin_values(hist, drive)?;
    let mut chi2 = 0.0;
    let mut dof = 0;
    for (&c, &g) in hist.counts.iter().zip(&expected) {
        let mu = g * hist.normalization;
        if mu > 0.0 {
            chi2 += (c as f64 - mu).powi(2) / mu;
            dof += 1;
        }
    }
    Ok(ChiSquared { chi2, dof })
}
