//! Direct-extinction transmission spectra, Lorentzian fitting and optical
//! loss budgets.

use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result};

/// Natural linewidth Γ/2π of the D2 line (MHz); synthetic spectra narrower
/// than this are unphysical.
pub const NATURAL_LINEWIDTH_MHZ: f64 = 6.0;

/// Probe laser linewidth (MHz).
pub const LASER_LINEWIDTH_MHZ: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPoint {
    /// Probe detuning (MHz).
    pub detuning: f64,
    pub transmission: f64,
    /// One standard deviation of `transmission`.
    pub sigma: f64,
}

/// Lorentzian extinction dip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineShape {
    /// Scattering probability on resonance.
    pub p_sc_max: f64,
    /// Full width at half maximum (MHz).
    pub fwhm: f64,
    /// Resonance position (MHz).
    pub center: f64,
    /// Fraction of the scattered light collected back into the probe mode.
    pub alpha: f64,
}

impl LineShape {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_sc_max) {
            return Err(Error::InvalidInput("scattering probability must lie in [0, 1]"));
        }
        if !(self.fwhm > 0.0 && self.fwhm.is_finite()) {
            return Err(Error::InvalidInput("linewidth must be positive"));
        }
        if !self.center.is_finite() {
            return Err(Error::InvalidInput("line centre must be finite"));
        }
        check_alpha(self.alpha)
    }

    /// Whether the linewidth lies below the natural linewidth.
    pub fn below_natural_linewidth(&self) -> bool {
        self.fwhm < NATURAL_LINEWIDTH_MHZ
    }

    /// The same line observed with a laser of the given linewidth, added in
    /// quadrature.
    pub fn broadened(mut self, laser_linewidth: f64) -> Self {
        self.fwhm = self.fwhm.hypot(laser_linewidth);
        self
    }

    pub fn scattering_probability(&self, detuning: f64) -> f64 {
        self.p_sc_max * lorentzian(detuning, self.center, self.fwhm)
    }

    pub fn transmission(&self, detuning: f64) -> f64 {
        let p = self.scattering_probability(detuning);
        1.0 - p + self.alpha * p
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidInput("collection efficiency must lie in [0, 1)"));
    }
    Ok(())
}

/// Unit-height Lorentzian.
pub fn lorentzian(detuning: f64, center: f64, fwhm: f64) -> f64 {
    let x = 2.0 * (detuning - center) / fwhm;
    1.0 / (1.0 + x * x)
}

/// Noiseless transmission at each detuning (σ = 0).
pub fn transmission_model(detunings: &[f64], shape: &LineShape) -> Result<Vec<SpectrumPoint>> {
    shape.validate()?;
    Ok(detunings
        .iter()
        .map(|&d| SpectrumPoint { detuning: d, transmission: shape.transmission(d), sigma: 0.0 })
        .collect())
}

/// Scattering probability implied by an extinction ε when a fraction α of the
/// scattered light re-enters the detected mode.
pub fn extinction_to_scattering(extinction: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(0.0..1.0).contains(&extinction) {
        return Err(Error::InvalidInput("extinction must lie in [0, 1)"));
    }
    Ok(extinction / (1.0 - alpha))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub sigma: f64,
}

/// Result of fitting T(Δ) = b·(1 − ε·L(Δ; centre, FWHM)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzianFit {
    pub center: Estimate,
    pub fwhm: Estimate,
    /// Peak extinction ε relative to the baseline.
    pub extinction: Estimate,
    pub baseline: Estimate,
    pub chi_squared: f64,
    pub dof: usize,
    pub iterations: usize,
}

impl LorentzianFit {
    fn params(&self) -> [f64; 4] {
        [self.center.value, self.fwhm.value, self.extinction.value, self.baseline.value]
    }

    pub fn model(&self, detuning: f64) -> f64 {
        model(&self.params(), detuning)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Relative parameter step below which the fit has converged.
    pub step_tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_iterations: 500, step_tolerance: 1e-12 }
    }
}

fn model(p: &[f64; 4], d: f64) -> f64 {
    p[3] * (1.0 - p[2] * lorentzian(d, p[0], p[1]))
}

/// Model value and gradient with respect to (centre, FWHM, ε, b).
fn model_gradient(p: &[f64; 4], d: f64) -> (f64, [f64; 4]) {
    let [c, w, e, b] = *p;
    let x = 2.0 * (d - c) / w;
    let l = 1.0 / (1.0 + x * x);
    let dl_dc = 4.0 * x * l * l / w;
    let dl_dw = 2.0 * x * x * l * l / w;
    (b * (1.0 - e * l), [-b * e * dl_dc, -b * e * dl_dw, -b * l, 1.0 - e * l])
}

/// Normal equations JᵀJ and Jᵀr of the weighted residuals, plus χ².
fn normal_equations(points: &[SpectrumPoint], p: &[f64; 4]) -> ([[f64; 4]; 4], [f64; 4], f64) {
    let mut a = [[0.0; 4]; 4];
    let mut g = [0.0; 4];
    let mut chi2 = 0.0;
    for pt in points {
        let (m, grad) = model_gradient(p, pt.detuning);
        let r = (pt.transmission - m) / pt.sigma;
        chi2 += r * r;
        for i in 0..4 {
            let ji = grad[i] / pt.sigma;
            g[i] += ji * r;
            for j in 0..=i {
                a[i][j] += ji * grad[j] / pt.sigma;
            }
        }
    }
    for i in 0..4 {
        for j in i + 1..4 {
            a[i][j] = a[j][i];
        }
    }
    (a, g, chi2)
}

fn chi_squared(points: &[SpectrumPoint], p: &[f64; 4]) -> f64 {
    points
        .iter()
        .map(|pt| {
            let r = (pt.transmission - model(p, pt.detuning)) / pt.sigma;
            r * r
        })
        .sum()
}

/// Cholesky factor of a symmetric positive-definite 4×4 matrix.
fn cholesky(a: &[[f64; 4]; 4]) -> Option<[[f64; 4]; 4]> {
    let mut l = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..=i {
            let s = a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}

fn cholesky_solve(l: &[[f64; 4]; 4], b: &[f64; 4]) -> [f64; 4] {
    let mut y = [0.0; 4];
    for i in 0..4 {
        y[i] = (b[i] - (0..i).map(|k| l[i][k] * y[k]).sum::<f64>()) / l[i][i];
    }
    let mut x = [0.0; 4];
    for i in (0..4).rev() {
        x[i] = (y[i] - (i + 1..4).map(|k| l[k][i] * x[k]).sum::<f64>()) / l[i][i];
    }
    x
}

fn initial_guess(points: &[SpectrumPoint]) -> [f64; 4] {
    let (mut lo, mut hi) = (points[0], points[0]);
    for &p in points {
        if p.transmission < lo.transmission {
            lo = p;
        }
        if p.transmission > hi.transmission {
            hi = p;
        }
    }
    let baseline = hi.transmission;
    let depth = baseline - lo.transmission;
    let half = baseline - 0.5 * depth;
    let below = points.iter().filter(|p| p.transmission <= half);
    let (dmin, dmax) = below.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.detuning), b.max(p.detuning)));
    let min_step = points
        .windows(2)
        .map(|w| w[1].detuning - w[0].detuning)
        .filter(|&s| s > 0.0)
        .fold(f64::INFINITY, f64::min);
    let fwhm = (dmax - dmin).max(min_step);
    [lo.detuning, fwhm, depth / baseline, baseline]
}

/// Weighted least-squares Lorentzian fit (Levenberg–Marquardt). Uncertainties
/// are the square roots of the diagonal of (JᵀJ)⁻¹ at the optimum.
pub fn fit_lorentzian(points: &[SpectrumPoint]) -> Result<LorentzianFit> {
    fit_lorentzian_with(points, &FitOptions::default())
}

pub fn fit_lorentzian_with(points: &[SpectrumPoint], opts: &FitOptions) -> Result<LorentzianFit> {
    if points.len() < 5 {
        return Err(Error::InvalidInput("a Lorentzian fit needs at least five points"));
    }
    for p in points {
        if !(p.detuning.is_finite() && p.transmission.is_finite()) {
            return Err(Error::InvalidInput("spectrum values must be finite"));
        }
        if !(p.sigma > 0.0 && p.sigma.is_finite()) {
            return Err(Error::InvalidInput("spectrum uncertainties must be positive and finite"));
        }
    }
    // Sorting fixes the summation order, so the result does not depend on
    // the order in which points were supplied.
    let mut pts: Vec<SpectrumPoint> = points.to_vec();
    pts.sort_by(|a, b| {
        a.detuning
            .total_cmp(&b.detuning)
            .then(a.transmission.total_cmp(&b.transmission))
            .then(a.sigma.total_cmp(&b.sigma))
    });
    let (tmin, tmax) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.transmission), b.max(p.transmission)));
    if tmax - tmin <= 1e-14 * tmax.abs() {
        return Err(Error::DegenerateData);
    }
    let span = pts[pts.len() - 1].detuning - pts[0].detuning;

    let mut p = initial_guess(&pts);
    let (mut a, mut g, mut chi2) = normal_equations(&pts, &p);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let mut damped = a;
        for i in 0..4 {
            damped[i][i] += lambda * a[i][i].max(f64::MIN_POSITIVE);
        }
        let Some(l) = cholesky(&damped) else {
            return Err(Error::DegenerateData);
        };
        let step = cholesky_solve(&l, &g);
        let trial = [p[0] + step[0], p[1] + step[1], p[2] + step[2], p[3] + step[3]];
        let admissible = trial[1] > 0.0 && trial[2] < 1.0 && trial[3] > 0.0 && trial.iter().all(|v| v.is_finite());
        let trial_chi2 = if admissible { chi_squared(&pts, &trial) } else { f64::INFINITY };
        if trial_chi2 <= chi2 {
            let small = (0..4).all(|i| step[i].abs() <= opts.step_tolerance * (trial[i].abs() + span * 1e-3));
            p = trial;
            (a, g, chi2) = normal_equations(&pts, &p);
            lambda = (lambda * 0.3).max(1e-12);
            if small || chi2 == 0.0 {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e16 {
                // No downhill direction remains: we sit at the minimum to
                // working precision.
                converged = true;
                break;
            }
        }
    }
    if !converged {
        return Err(Error::FitNotConverged { iterations });
    }

    let Some(l) = cholesky(&a) else {
        return Err(Error::DegenerateData);
    };
    let mut sigma = [0.0; 4];
    for i in 0..4 {
        let mut e = [0.0; 4];
        e[i] = 1.0;
        sigma[i] = cholesky_solve(&l, &e)[i].sqrt();
    }
    let est = |i: usize| Estimate { value: p[i], sigma: sigma[i] };
    Ok(LorentzianFit {
        center: est(0),
        fwhm: est(1),
        extinction: est(2),
        baseline: est(3),
        chi_squared: chi2,
        dof: pts.len() - 4,
        iterations,
    })
}

/// Parametric resampling cross-check of the fit uncertainties: the fitted
/// curve is re-noised with the quoted σ of each point `draws` times and
/// refit. Returns the sample standard deviations in the order
/// (centre, FWHM, ε, baseline).
pub fn resample_uncertainties<R: Rng + ?Sized>(
    points: &[SpectrumPoint],
    fit: &LorentzianFit,
    draws: usize,
    rng: &mut R,
) -> Result<[f64; 4]> {
    if draws < 2 {
        return Err(Error::InvalidInput("resampling needs at least two draws"));
    }
    let mut sum = [0.0; 4];
    let mut sum_sq = [0.0; 4];
    let mut buf = points.to_vec();
    for _ in 0..draws {
        for (b, p) in buf.iter_mut().zip(points) {
            let z: f64 = StandardNormal.sample(rng);
            b.transmission = fit.model(p.detuning) + p.sigma * z;
        }
        let refit = fit_lorentzian(&buf)?.params();
        for i in 0..4 {
            sum[i] += refit[i];
            sum_sq[i] += refit[i] * refit[i];
        }
    }
    let n = draws as f64;
    let mut out = [0.0; 4];
    for i in 0..4 {
        let mean = sum[i] / n;
        out[i] = ((sum_sq[i] - n * mean * mean) / (n - 1.0)).max(0.0).sqrt();
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossElement {
    pub name: String,
    pub transmission: f64,
}

/// Ordered optical elements between two points of a beam path.
#[derive(Debug, Clone, PartialEq)]
pub struct LossChain {
    elements: Vec<LossElement>,
}

impl LossChain {
    pub fn new(elements: Vec<LossElement>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::Empty);
        }
        if elements.iter().any(|e| !(e.transmission > 0.0 && e.transmission <= 1.0)) {
            return Err(Error::InvalidInput("element transmissions must lie in (0, 1]"));
        }
        Ok(Self { elements })
    }

    /// Detection path of the experiment, from the atom to the fiber output.
    pub fn experiment() -> Self {
        let el = |name: &str, loss: f64| LossElement { name: name.into(), transmission: 1.0 - loss };
        Self {
            elements: alloc::vec![
                el("windows and lenses", 0.216),
                el("dichroics, filter and mirror", 0.053),
                el("fiber coupling", 0.284),
            ],
        }
    }

    pub fn elements(&self) -> &[LossElement] {
        &self.elements
    }
}

pub fn chain_transmission(chain: &LossChain) -> f64 {
    chain.elements.iter().map(|e| e.transmission).product()
}
