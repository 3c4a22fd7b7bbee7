//! AC-Stark shifts of hyperfine Zeeman sublevels in a circularly polarized
//! far-off-resonant dipole trap.
//!
//! Shifts come from second-order perturbation theory over a table of
//! electric-dipole transitions. For each fine-structure sublevel |J m_J⟩ the
//! absorption (ω' − ω) and emission (ω' + ω) paths are summed with the
//! Clebsch–Gordan weights of the trap photon's helicity, which yields the
//! scalar, vector and (for J > 1/2) tensor parts together. Hyperfine
//! splittings are small next to the trap detuning, so the hyperfine state
//! |F m_F⟩ is assigned the m_J-shifts weighted by its decomposition into
//! |J m_J⟩|I m_I⟩.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::angmom::clebsch_gordan;
use crate::consts::{ATOMIC_DIPOLE, EPSILON_0, HBAR, PLANCK, SPEED_OF_LIGHT};
use crate::focalfield::Handedness;
use crate::{Error, Result};

/// One electric-dipole line. Angular momenta are stored doubled.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub lower: String,
    pub upper: String,
    /// Vacuum wavelength (nm).
    pub wavelength_nm: f64,
    /// Partial natural linewidth Γ/2π of the line (MHz).
    pub linewidth_mhz: f64,
    pub j_lower2: i32,
    pub j_upper2: i32,
    /// Reduced matrix element |⟨J_u‖d‖J_l⟩| in units of e·a₀.
    pub dipole_au: f64,
    pub source: String,
}

impl Transition {
    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength_nm > 0.0 && self.wavelength_nm.is_finite()) {
            return Err(Error::InvalidInput("transition wavelength must be positive"));
        }
        if !(self.linewidth_mhz > 0.0 && self.linewidth_mhz.is_finite()) {
            return Err(Error::InvalidInput("transition linewidth must be positive"));
        }
        if self.j_lower2 < 0 || self.j_upper2 < 0 || (self.j_upper2 - self.j_lower2).abs() > 2 {
            return Err(Error::InvalidInput("angular momenta do not allow a dipole transition"));
        }
        if !(self.dipole_au.is_finite() && self.dipole_au >= 0.0) {
            return Err(Error::InvalidInput("dipole matrix element must be finite"));
        }
        Ok(())
    }

    /// Angular transition frequency (rad/s).
    pub fn angular_frequency(&self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / (self.wavelength_nm * 1e-9)
    }
}

/// Immutable set of transitions used for light-shift sums.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LineTable {
    transitions: Vec<Transition>,
}

impl LineTable {
    pub fn new(transitions: Vec<Transition>) -> Result<Self> {
        for t in &transitions {
            t.validate()?;
        }
        Ok(Self { transitions })
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    /// Couplings of `level` with its partners: (J' doubled, signed ω', |d|² in SI).
    fn couplings<'a>(&'a self, level: &'a str) -> impl Iterator<Item = (i32, f64, f64)> + 'a {
        self.transitions.iter().filter_map(move |t| {
            let d2 = (t.dipole_au * ATOMIC_DIPOLE).powi(2);
            if t.lower == level {
                Some((t.j_upper2, t.angular_frequency(), d2))
            } else if t.upper == level {
                Some((t.j_lower2, -t.angular_frequency(), d2))
            } else {
                None
            }
        })
    }
}

/// A hyperfine level |n L_J, F⟩; angular momenta doubled.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperfineLevel {
    /// Fine-structure label matching the line table, e.g. `5S1/2`.
    pub label: String,
    pub j2: i32,
    pub i2: i32,
    pub f2: i32,
}

impl HyperfineLevel {
    /// ⁸⁷Rb 5S₁/₂, F = 2.
    pub fn rb87_ground() -> Self {
        Self { label: "5S1/2".into(), j2: 1, i2: 3, f2: 4 }
    }

    /// ⁸⁷Rb 5P₃/₂, F′ = 3.
    pub fn rb87_excited() -> Self {
        Self { label: "5P3/2".into(), j2: 3, i2: 3, f2: 6 }
    }

    /// Doubled m_F values from −F to F.
    pub fn sublevels(&self) -> impl Iterator<Item = i32> {
        (-self.f2..=self.f2).step_by(2)
    }
}

/// Trap beam at its focus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FortParams {
    /// Wavelength (m).
    pub wavelength: f64,
    /// 1/e² intensity radius at the focus (m).
    pub waist: f64,
    /// Power (W).
    pub power: f64,
    /// Helicity of the trap light about the quantization axis. The
    /// right-circular trap of the experiment is σ⁺ in this frame.
    pub handedness: Handedness,
}

impl FortParams {
    /// 980 nm, 1.4 µm waist, right-circular; power still to be calibrated.
    pub fn experiment(power: f64) -> Self {
        Self { wavelength: 980e-9, waist: 1.4e-6, power, handedness: Handedness::SigmaPlus }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return Err(Error::InvalidInput("trap wavelength must be positive"));
        }
        if !(self.waist > 0.0 && self.waist.is_finite()) {
            return Err(Error::InvalidInput("trap waist must be positive"));
        }
        if !(self.power >= 0.0 && self.power.is_finite()) {
            return Err(Error::InvalidInput("trap power must be non-negative"));
        }
        Ok(())
    }

    /// Gaussian peak intensity 2P/(πw²) (W/m²).
    pub fn peak_intensity(&self) -> f64 {
        2.0 * self.power / (PI * self.waist * self.waist)
    }

    pub fn with_power(mut self, power: f64) -> Self {
        self.power = power;
        self
    }

    pub fn angular_frequency(&self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / self.wavelength
    }
}

/// Shift of one Zeeman sublevel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SublevelShift {
    /// m_F, doubled.
    pub m2: i32,
    /// Energy shift / h in MHz; negative means lowered.
    pub shift_mhz: f64,
}

/// Shifts of every sublevel of one hyperfine level at the trap centre.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelShifts {
    pub level: HyperfineLevel,
    pub sublevels: Vec<SublevelShift>,
}

impl LevelShifts {
    /// Shift of the sublevel with (integer) m_F.
    pub fn shift(&self, m_f: i32) -> Option<f64> {
        self.sublevels.iter().find(|s| s.m2 == 2 * m_f).map(|s| s.shift_mhz)
    }

    /// Shift of the stretched state m_F = ±F.
    pub fn stretched(&self, handedness: Handedness) -> f64 {
        let m2 = handedness.sign() * self.level.f2;
        self.sublevels.iter().find(|s| s.m2 == m2).map(|s| s.shift_mhz).unwrap_or(f64::NAN)
    }

    pub fn mean(&self) -> f64 {
        self.sublevels.iter().map(|s| s.shift_mhz).sum::<f64>() / self.sublevels.len() as f64
    }

    /// max − min over the sublevels.
    pub fn spread(&self) -> f64 {
        let (lo, hi) = self
            .sublevels
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.shift_mhz), hi.max(s.shift_mhz)));
        hi - lo
    }
}

/// Dynamic polarizability (SI, C·m²/V) of the fine-structure sublevel
/// |J m_J⟩ for trap light of helicity `q` = ±1.
fn sublevel_polarizability(
    lines: &LineTable,
    label: &str,
    j2: i32,
    m2: i32,
    q: i32,
    omega: f64,
) -> Result<f64> {
    let mut alpha = 0.0;
    let mut any = false;
    for (jp2, omega_p, d2) in lines.couplings(label) {
        any = true;
        let absorb = omega_p - omega;
        let emit = omega_p + omega;
        if absorb.abs() < 1e-9 * omega || emit.abs() < 1e-9 * omega {
            return Err(Error::ResonantTrapLight {
                wavelength_nm: 2.0 * PI * SPEED_OF_LIGHT / omega_p.abs() * 1e9,
            });
        }
        let strength = d2 / (HBAR * (jp2 + 1) as f64);
        let up = clebsch_gordan(j2, m2, 2, 2 * q, jp2, m2 + 2 * q).powi(2);
        let down = clebsch_gordan(j2, m2, 2, -2 * q, jp2, m2 - 2 * q).powi(2);
        alpha += strength * (up / absorb + down / emit);
    }
    if !any {
        return Err(Error::MissingLines("requested level"));
    }
    Ok(alpha)
}

/// Light shift of every |F m_F⟩ sublevel of `level` at the trap centre.
pub fn sublevel_shifts(fort: &FortParams, lines: &LineTable, level: &HyperfineLevel) -> Result<LevelShifts> {
    fort.validate()?;
    if lines.couplings(&level.label).next().is_none() {
        return Err(Error::MissingLines("requested level"));
    }
    let q = fort.handedness.sign();
    let omega = fort.angular_frequency();
    // −¼|E|² α with |E|² = 2I/(cε₀), expressed in MHz.
    let field_sq = 2.0 * fort.peak_intensity() / (SPEED_OF_LIGHT * EPSILON_0);
    let to_mhz = -0.25 * field_sq / PLANCK * 1e-6;

    let mut by_mj = Vec::new();
    for mj2 in (-level.j2..=level.j2).step_by(2) {
        by_mj.push((mj2, sublevel_polarizability(lines, &level.label, level.j2, mj2, q, omega)?));
    }
    let sublevels = level
        .sublevels()
        .map(|m2| {
            let alpha: f64 = by_mj
                .iter()
                .map(|&(mj2, a)| clebsch_gordan(level.j2, mj2, level.i2, m2 - mj2, level.f2, m2).powi(2) * a)
                .sum();
            SublevelShift { m2, shift_mhz: to_mhz * alpha }
        })
        .collect();
    Ok(LevelShifts { level: level.clone(), sublevels })
}

/// Trap depth (MHz): minus the mean ground-state (F = 2) shift.
pub fn trap_depth(fort: &FortParams, lines: &LineTable) -> Result<f64> {
    Ok(-sublevel_shifts(fort, lines, &HyperfineLevel::rb87_ground())?.mean())
}

/// Trap power that produces `depth_mhz`, using linearity in intensity.
pub fn calibrate_power(fort: &FortParams, lines: &LineTable, depth_mhz: f64) -> Result<FortParams> {
    if !(depth_mhz >= 0.0 && depth_mhz.is_finite()) {
        return Err(Error::InvalidInput("trap depth must be non-negative"));
    }
    let per_watt = trap_depth(&fort.with_power(1.0), lines)?;
    if !(per_watt > 0.0) {
        return Err(Error::InvalidInput("trap light is not attractive for the ground state"));
    }
    Ok(fort.with_power(depth_mhz / per_watt))
}

/// Shift of the probe resonance |g±⟩ → |e±⟩ from its free-atom frequency (MHz).
pub fn probe_resonance_offset(fort: &FortParams, lines: &LineTable, probe: Handedness) -> Result<f64> {
    let ground = sublevel_shifts(fort, lines, &HyperfineLevel::rb87_ground())?;
    let excited = sublevel_shifts(fort, lines, &HyperfineLevel::rb87_excited())?;
    Ok(excited.stretched(probe) - ground.stretched(probe))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn d_lines() -> LineTable {
        let t = |upper: &str, wl: f64, ju: i32, d: f64| Transition {
            lower: "5S1/2".into(),
            upper: upper.into(),
            wavelength_nm: wl,
            linewidth_mhz: 6.0,
            j_lower2: 1,
            j_upper2: ju,
            dipole_au: d,
            source: String::new(),
        };
        LineTable::new(vec![t("5P1/2", 794.979, 1, 4.231), t("5P3/2", 780.241, 3, 5.977)]).unwrap()
    }

    #[test]
    fn stretched_ground_state_matches_hand_sum() {
        // |2,+2⟩ = |m_J=+½⟩|m_I=3/2⟩; for σ⁺ light only D2 couples upward
        // (CG² = 1), downward legs reach m_J' = −½ with CG² 2/3 (D1) and 1/3 (D2).
        let lines = d_lines();
        let fort = FortParams::experiment(1e-3);
        let w = fort.angular_frequency();
        let (w1, w2) = (lines.transitions()[0].angular_frequency(), lines.transitions()[1].angular_frequency());
        let (d1, d2) = ((4.231 * ATOMIC_DIPOLE).powi(2), (5.977 * ATOMIC_DIPOLE).powi(2));
        let alpha = (d2 / 4.0 / (w2 - w) + d1 / 2.0 * (2.0 / 3.0) / (w1 + w) + d2 / 4.0 / 3.0 / (w2 + w)) / HBAR;
        let expected =
            -0.25 * 2.0 * fort.peak_intensity() / (SPEED_OF_LIGHT * EPSILON_0) * alpha / PLANCK * 1e-6;
        let s = sublevel_shifts(&fort, &lines, &HyperfineLevel::rb87_ground()).unwrap();
        assert!((s.shift(2).unwrap() - expected).abs() < 1e-12 * expected.abs());
    }

    #[test]
    fn zero_power_gives_zero_shifts() {
        let s = sublevel_shifts(&FortParams::experiment(0.0), &d_lines(), &HyperfineLevel::rb87_ground()).unwrap();
        assert!(s.sublevels.iter().all(|x| x.shift_mhz == 0.0));
        assert_eq!(s.sublevels.len(), 5);
    }

    #[test]
    fn missing_level_is_reported() {
        let r = sublevel_shifts(&FortParams::experiment(1e-3), &d_lines(), &HyperfineLevel::rb87_excited());
        // 5P3/2 appears as the upper level of D2, so it is covered
        assert!(r.is_ok());
        let mut lvl = HyperfineLevel::rb87_excited();
        lvl.label = "4D5/2".into();
        assert!(matches!(
            sublevel_shifts(&FortParams::experiment(1e-3), &d_lines(), &lvl),
            Err(Error::MissingLines(_))
        ));
    }

    #[test]
    fn resonant_trap_light_rejected() {
        let mut fort = FortParams::experiment(1e-3);
        fort.wavelength = 780.241e-9;
        assert!(matches!(
            sublevel_shifts(&fort, &d_lines(), &HyperfineLevel::rb87_ground()),
            Err(Error::ResonantTrapLight { .. })
        ));
    }

    #[test]
    fn table_rejects_bad_records() {
        let mut t = d_lines().transitions()[0].clone();
        t.wavelength_nm = -1.0;
        assert!(LineTable::new(vec![t]).is_err());
    }
}
