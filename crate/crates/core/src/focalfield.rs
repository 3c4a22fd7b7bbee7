//! Focal field of a circularly polarized Gaussian beam behind an ideal lens,
//! and the probability that a stationary two-level atom at the focus
//! scatters a photon out of the beam.
//!
//! Both models start from the same collimated Gaussian in the lens plane and
//! propagate it to points on the optical axis with the first
//! Rayleigh–Sommerfeld integral. They differ only in what the lens does:
//!
//! * [`Model::Paraxial`]: the lens imprints a parabolic phase and leaves the
//!   polarization untouched. The parabolic front is not a true spherical
//!   wave, so strongly focused beams come out aberrated and the brightest
//!   on-axis point moves towards the lens.
//! * [`Model::Full`]: the lens imprints the exact spherical phase and rotates
//!   the polarization of every ray onto the converging sphere.
//!
//! The lens maps the input radius ρ onto the ray angle θ with ρ = f·tanθ.
//! The azimuthal integral is done analytically (on axis only the
//! co-rotating circular component survives) and the polar integral by
//! adaptive Gauss–Legendre quadrature.

use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};
use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::consts::{EPSILON_0, SPEED_OF_LIGHT};
use crate::quadrature::{integrate_adaptive, GaussLegendre, QuadratureSpec};
use crate::{Error, Result};

/// Circular polarization of the probe relative to the quantization axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Handedness {
    SigmaPlus,
    SigmaMinus,
}

impl Handedness {
    pub fn flipped(self) -> Self {
        match self {
            Handedness::SigmaPlus => Handedness::SigmaMinus,
            Handedness::SigmaMinus => Handedness::SigmaPlus,
        }
    }

    /// +1 for σ⁺, −1 for σ⁻.
    pub fn sign(self) -> i32 {
        match self {
            Handedness::SigmaPlus => 1,
            Handedness::SigmaMinus => -1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    Paraxial,
    Full,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Paraxial => "paraxial",
            Model::Full => "full",
        }
    }
}

/// Probe beam and focusing lens. All lengths in metres, power in watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamGeometry {
    pub wavelength: f64,
    /// 1/e² field radius of the collimated beam at the lens.
    pub input_waist: f64,
    pub focal_length: f64,
    pub aperture_na: f64,
    pub power: f64,
    pub handedness: Handedness,
}

/// Lens focal length of the experiment (m).
pub const EXPERIMENT_FOCAL_LENGTH: f64 = 4.5e-3;
/// Full numerical aperture of the experiment's lenses.
pub const EXPERIMENT_NA: f64 = 0.55;
/// Probe wavelength used for the coupling predictions (m).
pub const EXPERIMENT_WAVELENGTH: f64 = 780e-9;
/// Focal waist of the probe in the Gaussian-optics picture (m).
pub const EXPERIMENT_FOCAL_WAIST: f64 = 860e-9;

impl BeamGeometry {
    pub fn new(
        wavelength: f64,
        input_waist: f64,
        focal_length: f64,
        aperture_na: f64,
        power: f64,
        handedness: Handedness,
    ) -> Result<Self> {
        let beam = Self { wavelength, input_waist, focal_length, aperture_na, power, handedness };
        beam.validate()?;
        Ok(beam)
    }

    /// The experiment's lens with the input waist that gives an 860 nm
    /// Gaussian-optics focal waist.
    pub fn experiment() -> Self {
        Self {
            wavelength: EXPERIMENT_WAVELENGTH,
            input_waist: input_waist_for_focal_waist(
                EXPERIMENT_WAVELENGTH,
                EXPERIMENT_FOCAL_LENGTH,
                EXPERIMENT_FOCAL_WAIST,
            ),
            focal_length: EXPERIMENT_FOCAL_LENGTH,
            aperture_na: EXPERIMENT_NA,
            power: 1e-12,
            handedness: Handedness::SigmaPlus,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return Err(Error::InvalidInput("wavelength must be positive"));
        }
        if !(self.input_waist > 0.0 && self.input_waist.is_finite()) {
            return Err(Error::InvalidInput("input waist must be positive"));
        }
        if !(self.focal_length > 0.0 && self.focal_length.is_finite()) {
            return Err(Error::InvalidInput("focal length must be positive"));
        }
        if !(self.aperture_na > 0.0 && self.aperture_na < 1.0) {
            return Err(Error::InvalidInput("aperture NA must lie in (0, 1)"));
        }
        if !(self.power >= 0.0 && self.power.is_finite()) {
            return Err(Error::InvalidInput("power must be non-negative"));
        }
        Ok(())
    }

    /// u = w_L / f.
    pub fn focusing_strength(&self) -> f64 {
        self.input_waist / self.focal_length
    }

    /// sin(arctan u): numerical aperture of the marginal ray through the
    /// input 1/e² radius.
    pub fn beam_na(&self) -> f64 {
        na_from_focusing_strength(self.focusing_strength())
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn theta_max(&self) -> f64 {
        self.aperture_na.asin()
    }

    /// Radius of the clear aperture in the lens plane.
    pub fn aperture_radius(&self) -> f64 {
        self.focal_length * self.theta_max().tan()
    }

    /// Gaussian-optics focal waist λf/(π w_L).
    pub fn paraxial_focal_waist(&self) -> f64 {
        self.wavelength * self.focal_length / (PI * self.input_waist)
    }

    pub fn with_focusing_strength(mut self, u: f64) -> Self {
        self.input_waist = u * self.focal_length;
        self
    }

    pub fn with_power(mut self, power: f64) -> Self {
        self.power = power;
        self
    }

    /// Resonant cross section 3λ²/2π of a closed two-level transition.
    pub fn cross_section(&self) -> f64 {
        3.0 * self.wavelength * self.wavelength / (2.0 * PI)
    }

    /// Peak field of the input Gaussian carrying `power`.
    fn peak_field(&self, power: f64) -> f64 {
        (4.0 * power / (SPEED_OF_LIGHT * EPSILON_0 * PI * self.input_waist * self.input_waist))
            .sqrt()
    }
}

/// Input waist giving the Gaussian-optics focal waist `focal_waist`.
pub fn input_waist_for_focal_waist(wavelength: f64, focal_length: f64, focal_waist: f64) -> f64 {
    wavelength * focal_length / (PI * focal_waist)
}

pub fn na_from_focusing_strength(u: f64) -> f64 {
    u / (1.0 + u * u).sqrt()
}

pub fn focusing_strength_from_na(na: f64) -> f64 {
    na / (1.0 - na * na).sqrt()
}

/// Circular-basis coefficients of a σ⁺ ray after rotation onto the sphere.
/// `cross` carries an e^{2iφ} and `axial` an e^{iφ} azimuthal factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayPolarization {
    pub co: f64,
    pub cross: f64,
    pub axial: f64,
}

/// Input field mapped onto the converging reference sphere.
#[derive(Debug, Clone, Copy)]
pub struct AngularSpectrum {
    beam: BeamGeometry,
    theta_max: f64,
    theta_limit: f64,
}

/// Beyond this many input waists the Gaussian tail (e^{-2·64}) is dropped.
const GAUSSIAN_CUTOFF_WAISTS: f64 = 8.0;

/// Maps the collimated input onto the converging reference sphere of radius f.
pub fn lens_transform(beam: &BeamGeometry) -> Result<AngularSpectrum> {
    beam.validate()?;
    let theta_max = beam.theta_max();
    let theta_tail = (GAUSSIAN_CUTOFF_WAISTS * beam.focusing_strength()).atan();
    Ok(AngularSpectrum { beam: *beam, theta_max, theta_limit: theta_max.min(theta_tail) })
}

impl AngularSpectrum {
    pub fn theta_max(&self) -> f64 {
        self.theta_max
    }

    /// Upper integration limit: aperture edge or Gaussian tail cutoff.
    pub fn theta_limit(&self) -> f64 {
        self.theta_limit
    }

    /// Lens-plane radius feeding the ray at angle θ.
    pub fn radius(&self, theta: f64) -> f64 {
        self.beam.focal_length * theta.tan()
    }

    /// Input field (V/m) at the lens-plane point feeding θ.
    pub fn lens_amplitude(&self, theta: f64) -> f64 {
        let r = self.radius(theta) / self.beam.input_waist;
        self.beam.peak_field(self.beam.power) * (-r * r).exp()
    }

    /// Energy-conserving amplitude factor cos^{-3/2}θ for the ρ = f·tanθ map.
    pub fn apodization(&self, theta: f64) -> f64 {
        theta.cos().powf(-1.5)
    }

    /// Field on the reference sphere.
    pub fn sphere_amplitude(&self, theta: f64) -> f64 {
        self.lens_amplitude(theta) * self.apodization(theta)
    }

    /// Rotation of the σ⁺ polarization vector onto the sphere, expressed in
    /// the circular basis of the input handedness.
    pub fn polarization(&self, theta: f64) -> RayPolarization {
        let (s, c) = theta.sin_cos();
        RayPolarization { co: 0.5 * (1.0 + c), cross: 0.5 * (c - 1.0), axial: s / SQRT_2 }
    }

    /// Power carried across the reference sphere (W).
    pub fn sphere_power(&self) -> Result<f64> {
        let f = self.beam.focal_length;
        let rule = GaussLegendre::new(16);
        let q = integrate_adaptive(&rule, 0.0, self.theta_max, &QuadratureSpec::default(), |t| {
            let a = self.sphere_amplitude(t);
            Complex64::new(a * a * f * f * t.sin() * 2.0 * PI, 0.0)
        })?;
        Ok(0.5 * SPEED_OF_LIGHT * EPSILON_0 * q.value.re)
    }

    /// Fraction of the input power inside the aperture,
    /// 1 − exp(−2 f²NA²/(w_L²(1 − NA²))).
    pub fn transmitted_fraction(&self) -> f64 {
        let a = self.beam.aperture_radius() / self.beam.input_waist;
        -(-2.0 * a * a).exp_m1()
    }
}

/// Complex field on the optical axis, circular basis of the probe.
///
/// On the axis only the co-rotating component survives the azimuthal
/// integral, so `cross` and `axial` are identically zero there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FocalField {
    pub co: Complex64,
    pub cross: Complex64,
    pub axial: Complex64,
    /// Distance from the geometric focus along the axis (m, positive away
    /// from the lens).
    pub axial_offset: f64,
    pub model: Model,
    /// Input power the amplitudes are normalized to (W).
    pub power: f64,
}

impl FocalField {
    /// (E₊, E₋, E_z) in the fixed circular basis.
    pub fn circular_components(&self, handedness: Handedness) -> (Complex64, Complex64, Complex64) {
        match handedness {
            Handedness::SigmaPlus => (self.co, self.cross, self.axial),
            Handedness::SigmaMinus => (self.cross, self.co, self.axial),
        }
    }

    /// Intensity carried by the co-rotating component (W/m²).
    pub fn co_intensity(&self) -> f64 {
        0.5 * SPEED_OF_LIGHT * EPSILON_0 * self.co.norm_sqr()
    }
}

/// θ-dependent factors of the axial diffraction integrand.
#[derive(Debug, Clone, Copy)]
struct NodeTerms {
    rho2: f64,
    /// Lens amplitude × polarization × Jacobian ρ dρ/dθ.
    weight: f64,
    lens_phase: f64,
}

struct AxialIntegrand {
    k: f64,
    f: f64,
    model: Model,
    spectrum: AngularSpectrum,
}

impl AxialIntegrand {
    fn new(beam: &BeamGeometry, model: Model) -> Result<Self> {
        Ok(Self { k: beam.wavenumber(), f: beam.focal_length, model, spectrum: lens_transform(beam)? })
    }

    fn terms(&self, theta: f64) -> NodeTerms {
        let f = self.f;
        let (s, c) = theta.sin_cos();
        let rho = f * s / c;
        let drho = f / (c * c);
        let (lens_phase, pol) = match self.model {
            Model::Paraxial => (rho * rho / (2.0 * f), 1.0),
            // f(secθ − 1) = √(f² + ρ²) − f
            Model::Full => (rho * rho / (f * (1.0 + c) / c), self.spectrum.polarization(theta).co),
        };
        NodeTerms { rho2: rho * rho, weight: self.spectrum.lens_amplitude(theta) * pol * rho * drho, lens_phase }
    }

    /// Rayleigh–Sommerfeld integrand for the on-axis point a distance `z`
    /// from the lens; a common phase e^{ikz} is dropped.
    fn eval_terms(&self, t: &NodeTerms, z: f64) -> Complex64 {
        let k = self.k;
        let r = (z * z + t.rho2).sqrt();
        // R − z without cancellation
        let path = t.rho2 / (r + z);
        let amp = t.weight * z / (r * r);
        Complex64::from_polar(amp, k * (path - t.lens_phase)) * Complex64::new(1.0 / r, -k)
    }

    fn eval(&self, theta: f64, z: f64) -> Complex64 {
        self.eval_terms(&self.terms(theta), z)
    }
}

fn field_spec() -> QuadratureSpec {
    QuadratureSpec { order: 16, initial_panels: 16, max_panels: 1 << 16, rel_tol: 1e-10, abs_tol: 0.0 }
}

fn axial_field(integrand: &AxialIntegrand, rule: &GaussLegendre, z: f64) -> Result<(Complex64, usize)> {
    let limit = integrand.spectrum.theta_limit();
    let q = integrate_adaptive(rule, 0.0, limit, &field_spec(), |t| integrand.eval(t, z))?;
    Ok((q.value, q.panels))
}

/// Field at the geometric focus.
pub fn focal_field(beam: &BeamGeometry, model: Model) -> Result<FocalField> {
    focal_field_at(beam, model, 0.0)
}

/// Field on the axis, `axial_offset` metres beyond the geometric focus.
pub fn focal_field_at(beam: &BeamGeometry, model: Model, axial_offset: f64) -> Result<FocalField> {
    let integrand = AxialIntegrand::new(beam, model)?;
    let z = beam.focal_length + axial_offset;
    if !(z > 0.0) {
        return Err(Error::InvalidInput("observation point must lie beyond the lens"));
    }
    let zero = Complex64::new(0.0, 0.0);
    let co = if beam.power == 0.0 {
        zero
    } else {
        axial_field(&integrand, &GaussLegendre::new(16), z)?.0
    };
    Ok(FocalField { co, cross: zero, axial: zero, axial_offset, model, power: beam.power })
}

/// Scattering probability of a resonant, weakly driven atom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringResult {
    pub model: Model,
    /// Atom at the geometric focus.
    pub p_sc: f64,
    /// Atom at the brightest on-axis point of the focal region.
    pub peak_p_sc: f64,
    /// Position of that point relative to the geometric focus (m).
    pub peak_offset: f64,
    pub geometry: BeamGeometry,
}

/// P_sc = σ·I_co / P_in with σ = 3λ²/2π, evaluated at the geometric focus
/// and at the axial intensity maximum.
///
/// The weak-drive ratio does not depend on the input power; it is computed
/// for a unit-power beam.
pub fn scattering_probability(beam: &BeamGeometry, model: Model) -> Result<ScatteringResult> {
    let unit = beam.with_power(1.0);
    let integrand = AxialIntegrand::new(&unit, model)?;
    let rule = GaussLegendre::new(16);
    let sigma_per_power = unit.cross_section() * 0.5 * SPEED_OF_LIGHT * EPSILON_0;
    let f = unit.focal_length;

    let (focus, focus_panels) = axial_field(&integrand, &rule, f)?;
    let p_focus = sigma_per_power * focus.norm_sqr();

    let (peak_offset, peak_p) = axial_peak(&integrand, &rule, &unit, focus_panels, sigma_per_power)?;
    let (peak_offset, peak_p) = if peak_p > p_focus { (peak_offset, peak_p) } else { (0.0, p_focus) };
    Ok(ScatteringResult { model, p_sc: p_focus, peak_p_sc: peak_p, peak_offset, geometry: *beam })
}

/// Search window for the axial maximum: the Gaussian focal region plus, for
/// the parabolic lens, the longitudinal spread of its aberrated focus. Kept
/// within f/2 of the geometric focus.
fn axial_window(beam: &BeamGeometry, model: Model, limit: f64) -> (f64, f64) {
    let f = beam.focal_length;
    let u = beam.focusing_strength();
    let rayleigh = beam.wavelength / (PI * u * u);
    let aberration = match model {
        Model::Paraxial => {
            // paraxial focus of the ray through the 1/e² radius
            let rho = f * limit.tan().min(u);
            1.5 * rho * rho / f
        }
        Model::Full => 0.0,
    };
    (-(aberration + 2.0 * rayleigh).min(0.5 * f), (2.0 * rayleigh).min(0.5 * f))
}

/// Integrand evaluations allowed for the coarse axial scan.
const COARSE_SCAN_BUDGET: usize = 50_000_000;

fn axial_peak(
    integrand: &AxialIntegrand,
    rule: &GaussLegendre,
    beam: &BeamGeometry,
    focus_panels: usize,
    sigma_per_power: f64,
) -> Result<(f64, f64)> {
    let f = beam.focal_length;
    let limit = integrand.spectrum.theta_limit();
    let (lo, hi) = axial_window(beam, integrand.model, limit);
    let na = limit.min(beam.focusing_strength().atan()).sin();
    // Axial structure of the focus scales like λ/(2 NA²); sample it finely.
    let spacing = beam.wavelength / (2.0 * na * na) / 3.0;
    let panels = (focus_panels * 2).min(1 << 14);
    // Strongly aberrated paraxial foci would need billions of evaluations to
    // resolve fully; past the work budget the coarse scan gets sparser.
    let budget = COARSE_SCAN_BUDGET / (panels * rule.order());
    let samples = (((hi - lo) / spacing).ceil() as usize).clamp(64, 6000).min(budget.max(64));

    // Coarse scan with a fixed composite rule precomputed over θ.
    let width = limit / panels as f64;
    let mut nodes = Vec::with_capacity(panels * rule.order());
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * width;
        for (&x, &wt) in rule.nodes().iter().zip(rule.weights()) {
            let mut t = integrand.terms(mid + 0.5 * width * x);
            t.weight *= 0.5 * width * wt;
            nodes.push(t);
        }
    }

    let mut best = (0.0, f64::NEG_INFINITY);
    for i in 0..=samples {
        let dz = lo + (hi - lo) * i as f64 / samples as f64;
        let z = f + dz;
        let e: Complex64 = nodes.iter().map(|t| integrand.eval_terms(t, z)).sum();
        let p = sigma_per_power * e.norm_sqr();
        if p > best.1 {
            best = (dz, p);
        }
    }

    // Golden-section refinement with the adaptive rule.
    let step = (hi - lo) / samples as f64;
    let objective = |dz: f64| -> Result<f64> {
        Ok(sigma_per_power * axial_field(integrand, rule, f + dz)?.0.norm_sqr())
    };
    let (mut a, mut b) = (best.0 - step, best.0 + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = objective(x1)?;
    let mut f2 = objective(x2)?;
    for _ in 0..40 {
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = objective(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = objective(x2)?;
        }
        if (b - a).abs() < 1e-4 * beam.wavelength {
            break;
        }
    }
    let dz = 0.5 * (a + b);
    Ok((dz, objective(dz)?))
}

/// Which focusing parameter a scan steps through.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanAxis {
    /// u = w_L/f directly.
    FocusingStrength,
    /// Beam NA sin(arctan u); u is derived from it.
    NumericalAperture,
}

/// One row of a focusing scan. Probabilities are the axial maxima.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub u: f64,
    pub na: f64,
    pub paraxial: Option<ScatteringResult>,
    pub full: Option<ScatteringResult>,
}

/// Evaluates the requested models over a monotone grid of focusing
/// parameters. Rows come back in grid order.
pub fn scan_focusing(
    template: &BeamGeometry,
    axis: ScanAxis,
    grid: &[f64],
    models: &[Model],
) -> Result<Vec<ScanRow>> {
    template.validate()?;
    let increasing = grid.windows(2).all(|w| w[1] > w[0]);
    let decreasing = grid.windows(2).all(|w| w[1] < w[0]);
    if !(increasing || decreasing) {
        return Err(Error::InvalidInput("scan grid must be strictly monotone"));
    }
    grid.iter()
        .enumerate()
        .map(|(index, &value)| {
            scan_point(template, axis, value, models)
                .map_err(|e| Error::ScanPoint { index, source: alloc::boxed::Box::new(e) })
        })
        .collect()
}

/// A single scan row; rows are independent so callers may evaluate them in
/// any order or in parallel.
pub fn scan_point(template: &BeamGeometry, axis: ScanAxis, value: f64, models: &[Model]) -> Result<ScanRow> {
    let u = match axis {
        ScanAxis::FocusingStrength => value,
        ScanAxis::NumericalAperture => {
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::InvalidInput("scan NA must lie in (0, 1)"));
            }
            focusing_strength_from_na(value)
        }
    };
    if !(u > 0.0 && u.is_finite()) {
        return Err(Error::InvalidInput("focusing strength must be positive"));
    }
    let beam = template.with_focusing_strength(u);
    let mut row = ScanRow { u, na: na_from_focusing_strength(u), paraxial: None, full: None };
    for &m in models {
        let r = scattering_probability(&beam, m)?;
        match m {
            Model::Paraxial => row.paraxial = Some(r),
            Model::Full => row.full = Some(r),
        }
    }
    Ok(row)
}

/// Input waist maximizing the geometric-focus scattering probability at
/// fixed lens and wavelength. Returns the optimal u and its result.
pub fn optimize_waist(template: &BeamGeometry, model: Model) -> Result<(f64, ScatteringResult)> {
    template.validate()?;
    let eval = |log_u: f64| -> Result<f64> {
        let beam = template.with_focusing_strength(log_u.exp());
        let integrand = AxialIntegrand::new(&beam.with_power(1.0), model)?;
        let (e, _) = axial_field(&integrand, &GaussLegendre::new(16), beam.focal_length)?;
        Ok(beam.cross_section() * 0.5 * SPEED_OF_LIGHT * EPSILON_0 * e.norm_sqr())
    };
    let (lo, hi) = (0.005f64.ln(), 5.0f64.ln());
    let n = 80;
    let mut best = (lo, f64::NEG_INFINITY);
    for i in 0..=n {
        let x = lo + (hi - lo) * i as f64 / n as f64;
        let v = eval(x)?;
        if v > best.1 {
            best = (x, v);
        }
    }
    let step = (hi - lo) / n as f64;
    let (mut a, mut b) = (best.0 - step, best.0 + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let x1 = b - g * (b - a);
        let x2 = a + g * (b - a);
        if eval(x1)? > eval(x2)? {
            b = x2;
        } else {
            a = x1;
        }
    }
    let u = (0.5 * (a + b)).exp();
    let beam = template.with_focusing_strength(u);
    let mut r = scattering_probability(&beam, model)?;
    r.peak_p_sc = r.peak_p_sc.max(r.p_sc);
    Ok((u, r))
}

/// 1/e² intensity radius of the focal spot in the Fresnel (Gaussian optics)
/// limit, found from the numerically diffracted focal-plane profile.
pub fn gaussian_focal_waist(beam: &BeamGeometry) -> Result<f64> {
    beam.validate()?;
    let k = beam.wavenumber();
    let f = beam.focal_length;
    let w = beam.input_waist;
    let edge = beam.aperture_radius().min(GAUSSIAN_CUTOFF_WAISTS * w);
    let rule = GaussLegendre::new(16);
    let bessel = GaussLegendre::new(48);
    let j0 = |x: f64| bessel.integrate(0.0, PI, |t| (x * t.sin()).cos()) / PI;
    let profile = |r: f64| -> Result<f64> {
        let q = integrate_adaptive(&rule, 0.0, edge, &QuadratureSpec::default(), |rho| {
            let g = (-(rho / w) * (rho / w)).exp();
            Complex64::new(g * j0(k * rho * r / f) * rho, 0.0)
        })?;
        Ok(q.value.re * q.value.re)
    };
    let centre = profile(0.0)?;
    let target = centre * (-2.0f64).exp();
    let (mut a, mut b) = (0.0, 3.0 * beam.paraxial_focal_waist());
    if profile(b)? > target {
        return Err(Error::InvalidInput("focal spot wider than search range"));
    }
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        if profile(m)? > target {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}
