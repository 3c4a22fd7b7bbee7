//! Subcommand implementations. Each command validates the whole
//! configuration, computes everything in memory and only then writes its
//! files, so a failure never leaves partial output behind.

use std::path::PathBuf;

use atomlens_core::correlation::{self, G2Model};
use atomlens_core::focalfield::{self, Model, ScanAxis};
use atomlens_core::sequence;
use atomlens_core::spectroscopy::{self, LineShape, NATURAL_LINEWIDTH_MHZ};
use atomlens_core::stark::{self, FortParams, HyperfineLevel};
use sha2::{Digest, Sha256};

use crate::config::{Resolved, RunConfig};
use crate::error::Result;
use crate::io::{self, Cell, Format, Metadata, Record, Table};

/// Files and console lines produced by a command.
#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<(String, String)>,
    pub stdout: Vec<String>,
    pub warnings: Vec<String>,
}

impl Outputs {
    fn file(&mut self, name: String, contents: String) {
        self.files.push((name, contents));
    }

    fn say(&mut self, line: impl Into<String>) {
        self.stdout.push(line.into());
    }
}

/// Evenly spaced grid `a:b:n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        (0..self.points)
            .map(|i| self.start + (self.stop - self.start) * i as f64 / (self.points - 1) as f64)
            .collect()
    }
}

impl std::str::FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, n] = parts[..] else {
            return Err(format!("expected start:stop:points, got '{s}'"));
        };
        let num = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("'{x}' is not a number"));
        let points = n.trim().parse::<usize>().map_err(|_| format!("'{n}' is not a point count"))?;
        if points == 0 {
            return Err("a range needs at least one point".into());
        }
        Ok(Range { start: num(a)?, stop: num(b)?, points })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ModelArg {
    Paraxial,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ScanArg {
    U,
    Na,
}

#[derive(Debug, Clone)]
pub struct FieldArgs {
    pub model: Option<ModelArg>,
    pub scan: ScanArg,
    pub range: Option<Range>,
    pub anchor: bool,
}

#[derive(Debug, Clone, Default)]
pub struct SpectrumArgs {
    /// Fit this spectrum file instead of synthesizing one.
    pub input: Option<PathBuf>,
    /// Number of parametric resamples for the uncertainty cross-check.
    pub resample: usize,
}

#[derive(Debug, Clone, Default)]
pub struct G2Args {
    pub write_streams: bool,
}

#[derive(Debug, Clone)]
pub enum Command {
    Field(FieldArgs),
    Stark,
    Spectrum(SpectrumArgs),
    G2(G2Args),
    Sequence,
    Losses,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Field(_) => "field",
            Command::Stark => "stark",
            Command::Spectrum(_) => "spectrum",
            Command::G2(_) => "g2",
            Command::Sequence => "sequence",
            Command::Losses => "losses",
        }
    }
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    res: Resolved,
    meta: Metadata,
    format: Format,
}

impl Ctx<'_> {
    fn table(&self, out: &mut Outputs, stem: &str, table: &Table) {
        out.file(format!("{stem}.{}", self.format.extension()), table.render(&self.meta, self.format));
    }

    fn record(&self, out: &mut Outputs, stem: &str, record: &Record) {
        out.file(format!("{stem}.{}", self.format.extension()), record.render(&self.meta, self.format));
    }
}

/// Runs a command and writes its files into the configured directory.
pub fn run(cfg: &RunConfig, command: &Command) -> Result<Outputs> {
    let outputs = compute(cfg, command)?;
    let dir = cfg.output_dir();
    for (name, contents) in &outputs.files {
        io::write_file(&dir, name, contents)?;
    }
    io::write_file(&dir, &format!("{}_manifest.kv", command.name()), &manifest(cfg, command, &outputs))?;
    Ok(outputs)
}

/// Runs a command without touching the file system.
pub fn compute(cfg: &RunConfig, command: &Command) -> Result<Outputs> {
    let res = cfg.resolve()?;
    let ctx = Ctx { cfg, res, meta: Metadata::new(command.name(), &cfg.fingerprint(), cfg.seed), format: cfg.format };
    let mut out = Outputs::default();
    match command {
        Command::Field(a) => field(&ctx, a, &mut out)?,
        Command::Stark => stark_cmd(&ctx, &mut out)?,
        Command::Spectrum(a) => spectrum(&ctx, a, &mut out)?,
        Command::G2(a) => g2(&ctx, a, &mut out)?,
        Command::Sequence => sequence_cmd(&ctx, &mut out)?,
        Command::Losses => losses(&ctx, &mut out)?,
    }
    Ok(out)
}

fn manifest(cfg: &RunConfig, command: &Command, outputs: &Outputs) -> String {
    let mut r = Record::default();
    r.push("command", command.name());
    r.push("atomlens_version", env!("CARGO_PKG_VERSION"));
    r.push("config_sha256", cfg.fingerprint());
    r.push("seed", cfg.seed);
    for (name, contents) in &outputs.files {
        r.push(&format!("sha256.\"{name}\""), hex::encode(Sha256::digest(contents.as_bytes())));
    }
    let meta = Metadata::new(command.name(), &cfg.fingerprint(), cfg.seed);
    r.render(&meta, Format::Kv)
}

fn pct(x: f64) -> String {
    format!("{:.3}%", 100.0 * x)
}

fn field(ctx: &Ctx, a: &FieldArgs, out: &mut Outputs) -> Result<()> {
    let beam = &ctx.res.beam;
    let models: Vec<Model> = match a.model {
        Some(ModelArg::Paraxial) => vec![Model::Paraxial],
        Some(ModelArg::Full) => vec![Model::Full],
        None => vec![Model::Paraxial, Model::Full],
    };
    let (axis, default_range) = match a.scan {
        ScanArg::U => (ScanAxis::FocusingStrength, Range { start: 0.05, stop: 2.0, points: 40 }),
        ScanArg::Na => (ScanAxis::NumericalAperture, Range { start: 0.05, stop: 0.95, points: 19 }),
    };
    let grid = a.range.unwrap_or(default_range).values();
    let rows = focalfield::scan_focusing(beam, axis, &grid, &models)?;

    let mut cols = vec!["u", "beam_na"];
    for m in &models {
        cols.push(match m {
            Model::Paraxial => "p_sc_paraxial",
            Model::Full => "p_sc_full",
        });
        cols.push(match m {
            Model::Paraxial => "peak_offset_um_paraxial",
            Model::Full => "peak_offset_um_full",
        });
    }
    let mut table = Table::new(&cols);
    for row in &rows {
        let mut cells: Vec<Cell> = vec![row.u.into(), row.na.into()];
        for r in [row.paraxial, row.full].into_iter().flatten() {
            cells.push(r.peak_p_sc.into());
            cells.push((r.peak_offset * 1e6).into());
        }
        table.push(cells);
    }
    ctx.table(out, "field_scan", &table);

    if a.anchor {
        let mut rec = Record::default();
        rec.push("focusing_strength", beam.focusing_strength());
        rec.push("input_waist_mm", beam.input_waist * 1e3);
        for m in [Model::Paraxial, Model::Full] {
            let r = focalfield::scattering_probability(beam, m)?;
            out.say(format!(
                "{} P_sc = {} (axial maximum {:+.1} um from focus; {} at the geometric focus)",
                m.name(),
                pct(r.peak_p_sc),
                r.peak_offset * 1e6,
                pct(r.p_sc)
            ));
            rec.push(&format!("p_sc_{}", m.name()), r.peak_p_sc);
            rec.push(&format!("p_sc_{}_at_focus", m.name()), r.p_sc);
            rec.push(&format!("peak_offset_um_{}", m.name()), r.peak_offset * 1e6);
        }
        let (u_opt, opt) = focalfield::optimize_waist(beam, Model::Paraxial)?;
        out.say(format!("paraxial P_sc with waist optimized at the focus = {} (u = {u_opt:.4})", pct(opt.p_sc)));
        rec.push("p_sc_paraxial_waist_optimized", opt.p_sc);
        rec.push("u_waist_optimized", u_opt);
        ctx.record(out, "field_anchor", &rec);
    }
    Ok(())
}

fn calibrated_fort(ctx: &Ctx) -> Result<FortParams> {
    let f = &ctx.cfg.fort;
    Ok(match f.power_mw {
        Some(_) => ctx.res.fort,
        None => stark::calibrate_power(&ctx.res.fort, &ctx.res.lines, f.depth_mhz)?,
    })
}

fn stark_cmd(ctx: &Ctx, out: &mut Outputs) -> Result<()> {
    let fort = calibrated_fort(ctx)?;
    let lines = &ctx.res.lines;
    let mut table = Table::new(&["level", "f", "m_f", "shift_mhz"]);
    let mut levels = Vec::new();
    for level in [HyperfineLevel::rb87_ground(), HyperfineLevel::rb87_excited()] {
        let s = stark::sublevel_shifts(&fort, lines, &level)?;
        for sub in &s.sublevels {
            table.push(vec![
                level.label.as_str().into(),
                i64::from(level.f2 / 2).into(),
                i64::from(sub.m2 / 2).into(),
                sub.shift_mhz.into(),
            ]);
        }
        levels.push(s);
    }
    ctx.table(out, "stark_shifts", &table);

    let depth = stark::trap_depth(&fort, lines)?;
    let plus = stark::probe_resonance_offset(&fort, lines, focalfield::Handedness::SigmaPlus)?;
    let minus = stark::probe_resonance_offset(&fort, lines, focalfield::Handedness::SigmaMinus)?;
    let mut rec = Record::default();
    rec.push("power_mw", fort.power * 1e3);
    rec.push("trap_depth_mhz", depth);
    rec.push("ground_spread_mhz", levels[0].spread());
    rec.push("excited_min_shift_mhz", levels[1].sublevels.iter().map(|s| s.shift_mhz).fold(f64::INFINITY, f64::min));
    rec.push("probe_offset_sigma_plus_mhz", plus);
    rec.push("probe_offset_sigma_minus_mhz", minus);
    ctx.record(out, "stark_summary", &rec);
    out.say(format!("trap power {:.3} mW, depth {depth:.3} MHz", fort.power * 1e3));
    out.say(format!("F=2 sublevel spread {:.3} MHz", levels[0].spread()));
    out.say(format!("probe resonance shift: sigma+ {plus:.3} MHz, sigma- {minus:.3} MHz"));
    Ok(())
}

fn spectrum(ctx: &Ctx, a: &SpectrumArgs, out: &mut Outputs) -> Result<()> {
    let s = &ctx.cfg.spectrum;
    let points = match &a.input {
        Some(path) => io::read_spectrum(path)?,
        None => {
            let center = match s.center_mhz {
                Some(c) => c,
                None => {
                    let fort = calibrated_fort(ctx)?;
                    stark::probe_resonance_offset(&fort, &ctx.res.lines, s.probe.into())?
                }
            };
            let mut shape = LineShape { center, ..ctx.res.shape };
            if s.laser_linewidth_mhz > 0.0 {
                shape = shape.broadened(s.laser_linewidth_mhz);
            }
            if shape.below_natural_linewidth() {
                out.warnings.push(format!(
                    "line width {:.2} MHz is below the natural linewidth {NATURAL_LINEWIDTH_MHZ} MHz",
                    shape.fwhm
                ));
            }
            let grid: Vec<f64> =
                Range { start: center - s.span_mhz, stop: center + s.span_mhz, points: s.points }.values();
            let seq = sequence::SequenceConfig { seed: ctx.cfg.seed, ..ctx.res.sequence };
            let pts = sequence::synthesize_spectrum(&seq, &grid, &shape, &ctx.res.policy)?;
            ctx.table(out, "spectrum", &io::spectrum_table(&pts));
            pts
        }
    };
    let fit = spectroscopy::fit_lorentzian(&points)?;
    let mut rec = Record::default();
    for (name, e) in [
        ("center_mhz", fit.center),
        ("fwhm_mhz", fit.fwhm),
        ("extinction", fit.extinction),
        ("baseline", fit.baseline),
    ] {
        rec.push(name, e.value);
        rec.push(&format!("{name}_sigma"), e.sigma);
    }
    let p_sc = spectroscopy::extinction_to_scattering(fit.extinction.value.max(0.0), ctx.cfg.spectrum.alpha)?;
    rec.push("p_sc", p_sc);
    rec.push("chi_squared", fit.chi_squared);
    rec.push("dof", fit.dof);
    rec.push("iterations", fit.iterations);
    if a.resample > 0 {
        let mut rng = atomlens_core::rng::substream(ctx.cfg.seed, u64::MAX);
        let sd = spectroscopy::resample_uncertainties(&points, &fit, a.resample, &mut rng)?;
        for (name, v) in ["center_mhz", "fwhm_mhz", "extinction", "baseline"].iter().zip(sd) {
            rec.push(&format!("{name}_resampled_sigma"), v);
        }
    }
    ctx.record(out, "fit", &rec);
    out.say(format!(
        "extinction {} +/- {}, FWHM {:.3} +/- {:.3} MHz, centre {:.3} +/- {:.3} MHz",
        pct(fit.extinction.value),
        pct(fit.extinction.sigma),
        fit.fwhm.value,
        fit.fwhm.sigma,
        fit.center.value,
        fit.center.sigma
    ));
    Ok(())
}

fn g2(ctx: &Ctx, a: &G2Args, out: &mut Outputs) -> Result<()> {
    let d = &ctx.cfg.drive;
    let drive = ctx.res.drive;
    let (d1, d2) = correlation::simulate_streams(&drive, d.duration_s, ctx.cfg.seed)?;
    let hist = correlation::histogram_g2(&d1, &d2, d.bin_ns * 1e-9, d.window_ns * 1e-9)?;
    let expected = correlation::expected_bin_values(&hist, &drive)?;
    let (rho1, rho2) = drive.signal_fractions();
    let corrected = if drive.background_rate > 0.0 && rho1 > 0.0 && rho2 > 0.0 && !hist.insufficient_data {
        Some(hist.background_subtracted(rho1, rho2)?)
    } else {
        None
    };
    let mut cols = vec!["tau_ns", "g2", "sigma", "counts", "g2_model"];
    if corrected.is_some() {
        cols.extend(["g2_corrected", "sigma_corrected"]);
    }
    let mut table = Table::new(&cols);
    for i in 0..hist.centers.len() {
        let mut row: Vec<Cell> = vec![
            (hist.centers[i] * 1e9).into(),
            hist.values[i].into(),
            hist.sigma[i].into(),
            hist.counts[i].into(),
            expected[i].into(),
        ];
        if let Some(c) = &corrected {
            row.push(c.values[i].into());
            row.push(c.sigma[i].into());
        }
        table.push(row);
    }
    ctx.table(out, "g2_histogram", &table);

    let model = G2Model::new(&drive)?;
    let mut curve = Table::new(&["tau_ns", "g2"]);
    let steps = (d.window_ns / 0.1).round().max(1.0) as usize;
    for k in 0..=steps {
        let t = d.window_ns * k as f64 / steps as f64;
        curve.push(vec![t.into(), model.eval(t * 1e-9).into()]);
    }
    ctx.table(out, "g2_closed_form", &curve);

    let mut rec = Record::default();
    rec.push("duration_s", d.duration_s);
    rec.push("counts_d1", d1.len());
    rec.push("counts_d2", d2.len());
    rec.push("coincidences", hist.total_counts());
    rec.push("normalization", hist.normalization);
    rec.push("insufficient_data", hist.insufficient_data);
    if !hist.insufficient_data {
        let chi = correlation::chi_squared(&hist, &drive)?;
        rec.push("chi_squared", chi.chi2);
        rec.push("dof", chi.dof);
        out.say(format!("{} coincidences, chi2/dof = {:.3}", hist.total_counts(), chi.reduced()));
    } else {
        out.warnings.push("no coincidences in the histogram window".into());
    }
    ctx.record(out, "g2_summary", &rec);
    if a.write_streams {
        out.file("stream_d1.csv".into(), io::stream_file(&d1, &ctx.meta));
        out.file("stream_d2.csv".into(), io::stream_file(&d2, &ctx.meta));
    }
    Ok(())
}

fn sequence_cmd(ctx: &Ctx, out: &mut Outputs) -> Result<()> {
    let cfg = sequence::SequenceConfig { seed: ctx.cfg.seed, ..ctx.res.sequence };
    let point = sequence::simulate_point(&cfg, 0)?;
    let mut table = Table::new(&["event", "interval", "tau_m_s", "n_m", "tau_r_s", "n_r"]);
    for (e, ev) in point.events.iter().enumerate() {
        for (i, iv) in ev.intervals.iter().enumerate() {
            table.push(vec![
                e.into(),
                i.into(),
                iv.tau.into(),
                iv.counts.into(),
                ev.reference.tau.into(),
                ev.reference.counts.into(),
            ]);
        }
    }
    ctx.table(out, "events", &table);
    let mut rec = Record::default();
    rec.push("t_true", cfg.t_true);
    rec.push("transmission", point.estimate.value);
    rec.push("sigma", point.estimate.sigma);
    rec.push("weight", point.estimate.weight);
    rec.push("events", point.events.len());
    rec.push("discarded", point.discarded);
    ctx.record(out, "sequence_summary", &rec);
    out.say(format!(
        "T = {:.5} +/- {:.5} from {} events ({} discarded)",
        point.estimate.value,
        point.estimate.sigma,
        point.events.len(),
        point.discarded
    ));
    Ok(())
}

fn losses(ctx: &Ctx, out: &mut Outputs) -> Result<()> {
    let chain = &ctx.res.chain;
    let mut table = Table::new(&["element", "transmission", "cumulative"]);
    let mut acc = 1.0;
    for e in chain.elements() {
        acc *= e.transmission;
        table.push(vec![e.name.as_str().into(), e.transmission.into(), acc.into()]);
    }
    ctx.table(out, "losses", &table);
    out.say(format!("{:.4}", spectroscopy::chain_transmission(chain)));
    Ok(())
}
