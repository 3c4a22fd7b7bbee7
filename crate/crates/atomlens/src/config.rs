//! Run configuration: one TOML file with a section per model. Every field
//! has a default taken from the experiment, so an empty file (or no file)
//! describes the reference setup.

use std::path::{Path, PathBuf};

use atomlens_core::correlation::TwoLevelDrive;
use atomlens_core::focalfield::{self, BeamGeometry, Handedness};
use atomlens_core::sequence::{RatePolicy, SequenceConfig};
use atomlens_core::spectroscopy::{LineShape, LossChain};
use atomlens_core::stark::{FortParams, LineTable};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};
use crate::io::{self, Format};
use crate::lines;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Helicity {
    #[serde(rename = "sigma+")]
    SigmaPlus,
    #[serde(rename = "sigma-")]
    SigmaMinus,
}

impl From<Helicity> for Handedness {
    fn from(h: Helicity) -> Self {
        match h {
            Helicity::SigmaPlus => Handedness::SigmaPlus,
            Helicity::SigmaMinus => Handedness::SigmaMinus,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamSection {
    pub wavelength_nm: f64,
    pub focal_length_mm: f64,
    pub aperture_na: f64,
    /// Gaussian-optics focal waist; ignored when `input_waist_mm` is set.
    pub focal_waist_nm: f64,
    pub input_waist_mm: Option<f64>,
    pub helicity: Helicity,
}

impl Default for BeamSection {
    fn default() -> Self {
        Self {
            wavelength_nm: focalfield::EXPERIMENT_WAVELENGTH * 1e9,
            focal_length_mm: focalfield::EXPERIMENT_FOCAL_LENGTH * 1e3,
            aperture_na: focalfield::EXPERIMENT_NA,
            focal_waist_nm: focalfield::EXPERIMENT_FOCAL_WAIST * 1e9,
            input_waist_mm: None,
            helicity: Helicity::SigmaPlus,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FortSection {
    pub wavelength_nm: f64,
    pub waist_um: f64,
    /// Ground-state trap depth the power is calibrated to; ignored when
    /// `power_mw` is set.
    pub depth_mhz: f64,
    pub power_mw: Option<f64>,
    pub helicity: Helicity,
    /// Line table, relative to the configuration file. The built-in ⁸⁷Rb
    /// table is used when absent.
    pub lines: Option<PathBuf>,
}

impl Default for FortSection {
    fn default() -> Self {
        Self {
            wavelength_nm: 980.0,
            waist_um: 1.4,
            depth_mhz: 27.0,
            power_mw: None,
            helicity: Helicity::SigmaPlus,
            lines: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    /// Peak extinction of the generated line.
    pub extinction: f64,
    pub fwhm_mhz: f64,
    pub alpha: f64,
    /// Probe helicity; picks the light-shifted line centre.
    pub probe: Helicity,
    /// Line centre; the light-shifted resonance when absent.
    pub center_mhz: Option<f64>,
    /// Detunings relative to the line centre.
    pub span_mhz: f64,
    pub points: usize,
    pub laser_linewidth_mhz: f64,
    pub rate_at_resonance: f64,
    pub max_rate_scale: f64,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self {
            extinction: 0.098,
            fwhm_mhz: 7.5,
            alpha: 0.0,
            probe: Helicity::SigmaPlus,
            center_mhz: None,
            span_mhz: 20.0,
            points: 41,
            laser_linewidth_mhz: 0.0,
            rate_at_resonance: 400.0,
            max_rate_scale: 50.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriveSection {
    pub rabi_mhz: f64,
    pub lifetime_ns: f64,
    pub detuning_mhz: f64,
    pub background_rate: f64,
    pub split_ratio: f64,
    pub detection_efficiency: f64,
    pub duration_s: f64,
    pub bin_ns: f64,
    pub window_ns: f64,
}

impl Default for DriveSection {
    fn default() -> Self {
        Self {
            rabi_mhz: 62.0,
            lifetime_ns: 27.0,
            detuning_mhz: 0.0,
            background_rate: 0.0,
            split_ratio: 0.5,
            detection_efficiency: 1.0,
            duration_s: 5e-3,
            bin_ns: 0.5,
            window_ns: 50.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SequenceSection {
    pub t_true: f64,
    pub rate: f64,
    pub tau_m_min_ms: f64,
    pub tau_m_max_ms: f64,
    pub tau_r_s: f64,
    pub mean_dwell_s: f64,
    pub events_per_point: usize,
}

impl Default for SequenceSection {
    fn default() -> Self {
        Self {
            t_true: 0.902,
            rate: 400.0,
            tau_m_min_ms: 130.0,
            tau_m_max_ms: 140.0,
            tau_r_s: 2.0,
            mean_dwell_s: 1.5,
            events_per_point: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossesSection {
    /// Loss chain file, relative to the configuration file. The detection
    /// path of the experiment is used when absent.
    pub chain: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Output directory; relative to the configuration file when set there.
    pub out: Option<PathBuf>,
    pub format: Format,
    pub beam: BeamSection,
    pub fort: FortSection,
    pub spectrum: SpectrumSection,
    pub drive: DriveSection,
    pub sequence: SequenceSection,
    pub losses: LossesSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 2008,
            out: None,
            format: Format::Dsv,
            beam: BeamSection::default(),
            fort: FortSection::default(),
            spectrum: SpectrumSection::default(),
            drive: DriveSection::default(),
            sequence: SequenceSection::default(),
            losses: LossesSection::default(),
        }
    }
}

impl RunConfig {
    /// Reads a configuration file. Relative paths inside it are resolved
    /// against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read configuration {}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut Option<PathBuf>| {
            if let Some(p) = p {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        };
        rebase(&mut cfg.fort.lines);
        rebase(&mut cfg.losses.chain);
        rebase(&mut cfg.out);
        Ok(cfg)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("atomlens-out"))
    }

    /// SHA-256 of the resolved configuration, so defaults and command-line
    /// overrides are part of the fingerprint. The output directory is left
    /// out: where results go does not change what they are.
    pub fn fingerprint(&self) -> String {
        let text = toml::to_string(&RunConfig { out: None, ..self.clone() }).expect("configuration serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    /// Validates every section and loads referenced files.
    pub fn resolve(&self) -> Result<Resolved> {
        let cfg_err = |section: &str, e: atomlens_core::Error| CliError::config(format!("[{section}] {e}"));

        let b = &self.beam;
        let wavelength = b.wavelength_nm * 1e-9;
        let focal_length = b.focal_length_mm * 1e-3;
        if !(b.focal_waist_nm > 0.0) && b.input_waist_mm.is_none() {
            return Err(CliError::config("[beam] focal_waist_nm must be positive"));
        }
        let input_waist = match b.input_waist_mm {
            Some(w) => w * 1e-3,
            None => focalfield::input_waist_for_focal_waist(wavelength, focal_length, b.focal_waist_nm * 1e-9),
        };
        let beam = BeamGeometry::new(wavelength, input_waist, focal_length, b.aperture_na, 1e-12, b.helicity.into())
            .map_err(|e| cfg_err("beam", e))?;

        let f = &self.fort;
        let line_table = match &f.lines {
            Some(p) => {
                if !p.exists() {
                    return Err(CliError::config(format!("[fort] line table {} does not exist", p.display())));
                }
                lines::load_line_table(p)?
            }
            None => lines::parse_line_table(lines::BUILTIN_RB87).expect("built-in table parses"),
        };
        let fort = FortParams {
            wavelength: f.wavelength_nm * 1e-9,
            waist: f.waist_um * 1e-6,
            power: f.power_mw.map_or(0.0, |p| p * 1e-3),
            handedness: f.helicity.into(),
        };
        fort.validate().map_err(|e| cfg_err("fort", e))?;
        if f.power_mw.is_none() && !(f.depth_mhz >= 0.0 && f.depth_mhz.is_finite()) {
            return Err(CliError::config("[fort] depth_mhz must be non-negative"));
        }

        let s = &self.spectrum;
        let shape = LineShape {
            p_sc_max: s.extinction / (1.0 - s.alpha).max(f64::MIN_POSITIVE),
            fwhm: s.fwhm_mhz,
            center: s.center_mhz.unwrap_or(0.0),
            alpha: s.alpha,
        };
        shape.validate().map_err(|e| cfg_err("spectrum", e))?;
        if !(s.extinction >= 0.0 && s.extinction < 1.0) {
            return Err(CliError::config("[spectrum] extinction must lie in [0, 1)"));
        }
        if !(s.span_mhz > 0.0 && s.points >= 5) {
            return Err(CliError::config("[spectrum] need span_mhz > 0 and at least 5 points"));
        }
        if !(s.laser_linewidth_mhz >= 0.0) {
            return Err(CliError::config("[spectrum] laser_linewidth_mhz must be non-negative"));
        }
        let policy = RatePolicy { rate_at_resonance: s.rate_at_resonance, max_scale: s.max_rate_scale };
        if !(policy.rate_at_resonance > 0.0 && policy.max_scale >= 1.0) {
            return Err(CliError::config("[spectrum] need rate_at_resonance > 0 and max_rate_scale >= 1"));
        }

        let d = &self.drive;
        if !(d.lifetime_ns > 0.0) {
            return Err(CliError::config("[drive] lifetime_ns must be positive"));
        }
        let drive = TwoLevelDrive {
            rabi_mhz: d.rabi_mhz,
            linewidth_mhz: 1e3 / (2.0 * std::f64::consts::PI * d.lifetime_ns),
            detuning_mhz: d.detuning_mhz,
            background_rate: d.background_rate,
            split_ratio: d.split_ratio,
            detection_efficiency: d.detection_efficiency,
        };
        drive.validate().map_err(|e| cfg_err("drive", e))?;
        if !(d.duration_s > 0.0 && d.duration_s.is_finite()) {
            return Err(CliError::config("[drive] duration_s must be positive"));
        }
        if !(d.bin_ns > 0.0 && d.window_ns > 0.0) {
            return Err(CliError::config("[drive] bin_ns and window_ns must be positive"));
        }

        let q = &self.sequence;
        let sequence = SequenceConfig {
            t_true: q.t_true,
            rate: q.rate,
            tau_m_min: q.tau_m_min_ms * 1e-3,
            tau_m_max: q.tau_m_max_ms * 1e-3,
            tau_r: q.tau_r_s,
            mean_dwell: q.mean_dwell_s,
            events_per_point: q.events_per_point,
            seed: self.seed,
        };
        sequence.validate().map_err(|e| cfg_err("sequence", e))?;
        if !(sequence.rate > 0.0) {
            return Err(CliError::config("[sequence] rate must be positive"));
        }

        let chain = match &self.losses.chain {
            Some(p) => {
                if !p.exists() {
                    return Err(CliError::config(format!("[losses] chain file {} does not exist", p.display())));
                }
                io::read_loss_chain(p)?
            }
            None => LossChain::experiment(),
        };

        Ok(Resolved { beam, fort, lines: line_table, shape, policy, drive, sequence, chain })
    }
}

/// Validated model inputs built from a [`RunConfig`].
#[derive(Debug, Clone)]
pub struct Resolved {
    pub beam: BeamGeometry,
    /// Power is zero until calibrated, unless set explicitly.
    pub fort: FortParams,
    pub lines: LineTable,
    /// Centre is zero unless set explicitly.
    pub shape: LineShape,
    pub policy: RatePolicy,
    pub drive: TwoLevelDrive,
    pub sequence: SequenceConfig,
    pub chain: LossChain,
}
