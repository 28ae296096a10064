//! One function per CLI command. Each writes its files into the output
//! directory and returns a JSON summary.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use pairsource_core::counting::{
    count_coincidences, count_coincidences_delayed, detected_rates, multiplex_summary,
    simulate_event_streams, smallest_channel_count, CountingScenario,
};
use pairsource_core::polarization::{
    correlation_curve, qber_from_visibility, visibility_from_curve,
};
use pairsource_core::spdc::{collinear_rate_vs_pump, fwhm, marginal_spectrum, support};
use serde_json::{json, Value};

use crate::analysis;
use crate::config::SourceConfig;
use crate::error::ToolkitError;
use crate::io::{
    write_event_streams, write_joint_spectrum, write_phase_map, write_table, OutputHeader,
};
use crate::reproduce;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    PumpRate,
    TemperatureScan,
    PhaseMap,
    Optimize,
    Curves,
    Visibility,
    Counting,
    Simulate,
    ReproduceAll,
}

impl Command {
    pub const ALL: [Command; 10] = [
        Command::Spectrum,
        Command::PumpRate,
        Command::TemperatureScan,
        Command::PhaseMap,
        Command::Optimize,
        Command::Curves,
        Command::Visibility,
        Command::Counting,
        Command::Simulate,
        Command::ReproduceAll,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::PumpRate => "pump-rate",
            Command::TemperatureScan => "temperature-scan",
            Command::PhaseMap => "phase-map",
            Command::Optimize => "optimize",
            Command::Curves => "curves",
            Command::Visibility => "visibility",
            Command::Counting => "counting",
            Command::Simulate => "simulate",
            Command::ReproduceAll => "reproduce-all",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown command `{s}`"))
    }
}

/// Polarizer settings of the idler arm for correlation curves.
pub const IDLER_ANGLES_DEG: [f64; 4] = [0.0, 45.0, 90.0, 135.0];

pub struct Context<'a> {
    pub config: &'a SourceConfig,
    pub out_dir: PathBuf,
}

impl<'a> Context<'a> {
    pub fn new(
        config: &'a SourceConfig,
        out_dir: impl Into<PathBuf>,
    ) -> Result<Self, ToolkitError> {
        let out_dir = out_dir.into();
        std::fs::create_dir_all(&out_dir).map_err(|e| ToolkitError::output(&out_dir, e))?;
        Ok(Self { config, out_dir })
    }

    fn header(&self, command: Command) -> OutputHeader {
        OutputHeader::new(&self.config.hash, command.name())
    }

    fn file(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

pub fn run(ctx: &Context, command: Command) -> Result<Value, ToolkitError> {
    let mut report = match command {
        Command::Spectrum => spectrum(ctx),
        Command::PumpRate => pump_rate(ctx),
        Command::TemperatureScan => temperature_scan(ctx),
        Command::PhaseMap => phase_map(ctx),
        Command::Optimize => optimize(ctx),
        Command::Curves => curves(ctx),
        Command::Visibility => visibility(ctx),
        Command::Counting => counting(ctx),
        Command::Simulate => simulate(ctx),
        Command::ReproduceAll => return reproduce::reproduce_all(ctx),
    }?;
    report["command"] = json!(command.name());
    report["config_hash"] = json!(ctx.config.hash);
    Ok(report)
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn spectrum(ctx: &Context) -> Result<Value, ToolkitError> {
    let cfg = ctx.config;
    let header = ctx.header(Command::Spectrum);
    let bb = analysis::broadband(cfg)?;
    let marginal = marginal_spectrum(&bb.spectrum);
    let t = analysis::tunings(cfg)?;
    let deg = analysis::narrowband_marginal(cfg, &t.degenerate)?;
    let nondeg = analysis::narrowband_marginal(cfg, &t.nondegenerate)?;
    let widths = analysis::widths(cfg, &t)?;

    let jsi = ctx.file("joint_spectrum.csv");
    write_joint_spectrum(&jsi, &header, &bb.spectrum)?;
    let broadband_csv = ctx.file("spectrum.csv");
    write_table(
        &broadband_csv,
        &header,
        &["wavelength_nm", "broadband"],
        marginal.iter().map(|p| vec![p.0, p.1]),
    )?;
    let narrow_csv = ctx.file("spectrum_narrowband.csv");
    write_table(
        &narrow_csv,
        &header,
        &["wavelength_nm", "degenerate", "nondegenerate"],
        deg.iter().zip(&nondeg).map(|(a, b)| vec![a.0, a.1, b.1]),
    )?;

    let (lo, hi) = support(&marginal, 0.01).unwrap_or((f64::NAN, f64::NAN));
    Ok(json!({
        "temperature_c": cfg.crystal().temperature_c,
        "broadband_fwhm_nm": fwhm(&marginal).ok(),
        "support_20db_nm": [lo, hi],
        "degenerate_temperature_c": t.degenerate.temperature_c,
        "degenerate_fwhm_nm": widths.degenerate_fwhm_nm,
        "nondegenerate_temperature_c": t.nondegenerate.temperature_c,
        "nondegenerate_pair_nm": [t.signal_nm, t.idler_nm],
        "nondegenerate_lobe_fwhm_nm": widths.lobe_fwhm_nm,
        "grid_warnings": bb.warnings.iter().map(|w| format!("{w:?}")).collect::<Vec<_>>(),
        "files": [file_name(&jsi), file_name(&broadband_csv), file_name(&narrow_csv)],
    }))
}

pub fn pump_rate(ctx: &Context) -> Result<Value, ToolkitError> {
    let cfg = ctx.config;
    let rates = collinear_rate_vs_pump(cfg.crystal(), cfg.pump(), cfg.rate_band_nm)
        .map_err(|e| ToolkitError::computation("collinear rate", e))?;
    let peak = rates.iter().map(|r| r.1).fold(0.0, f64::max);
    let norm = if peak > 0.0 { 1.0 / peak } else { 0.0 };
    let path = ctx.file("pump_rate.csv");
    write_table(
        &path,
        &ctx.header(Command::PumpRate),
        &["pump_nm", "pump_weight", "relative_rate"],
        cfg.pump()
            .samples()
            .iter()
            .zip(&rates)
            .map(|(s, r)| vec![s.wavelength_nm, s.weight, r.1 * norm]),
    )?;
    let collinear = rates.iter().filter(|r| r.1 > 0.0).count();
    Ok(json!({
        "pump_lines": rates.len(),
        "collinear_lines": collinear,
        "files": [file_name(&path)],
    }))
}

pub fn temperature_scan(ctx: &Context) -> Result<Value, ToolkitError> {
    let cfg = ctx.config;
    let scan = cfg.raw.analysis.temperature_scan;
    let steps = ((scan.max_c - scan.min_c) / scan.step_c).floor() as usize;
    let mut rows = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = scan.min_c + k as f64 * scan.step_c;
        let crystal = cfg.crystal().at_temperature(t);
        let (signal, idler) = crystal
            .solve_phasematched_signal(cfg.pump_center_nm)
            .unwrap_or((f64::NAN, f64::NAN));
        let rate = crystal
            .integrated_rate(cfg.pump_center_nm, cfg.rate_band_nm)
            .map_err(|e| ToolkitError::computation(format!("integrated rate at {t} °C"), e))?;
        rows.push(vec![t, rate, signal, idler]);
    }
    let peak = rows.iter().map(|r| r[1]).fold(0.0, f64::max);
    if peak > 0.0 {
        for r in &mut rows {
            r[1] /= peak;
        }
    }
    let best = rows
        .iter()
        .max_by(|a, b| a[1].total_cmp(&b[1]))
        .map(|r| r[0])
        .unwrap_or(f64::NAN);
    let path = ctx.file("temperature_scan.csv");
    write_table(
        &path,
        &ctx.header(Command::TemperatureScan),
        &["temperature_c", "relative_rate", "signal_nm", "idler_nm"],
        rows,
    )?;
    Ok(json!({
        "pump_nm": cfg.pump_center_nm,
        "peak_rate_temperature_c": best,
        "files": [file_name(&path)],
    }))
}

pub fn phase_map(ctx: &Context) -> Result<Value, ToolkitError> {
    let cfg = ctx.config;
    let bb = analysis::broadband(cfg)?;
    let mut pm = analysis::layout_phase_map(cfg)?;
    let mean = pm.mean(Some(&bb.spectrum));
    for p in &mut pm.phase {
        *p -= mean;
    }
    let v = analysis::layout_visibility(cfg, &bb.spectrum)?;
    let path = ctx.file("phase_map.csv");
    write_phase_map(&path, &ctx.header(Command::PhaseMap), &pm)?;
    Ok(json!({
        "mean_phase_rad": mean,
        "visibility": v,
        "files": [file_name(&path)],
    }))
}

pub fn optimize(ctx: &Context) -> Result<Value, ToolkitError> {
    let cfg = ctx.config;
    let bb = analysis::broadband(cfg)?;
    let started = std::time::Instant::now();
    let sol = analysis::optimize(cfg, &bb.spectrum)?;
    let elapsed = started.elapsed().as_secs_f64();
    let (pre, post) = cfg
        .layout
        .compensator_lengths()
        .map_err(|e| ToolkitError::computation("compensator lengths", e))?;
    let configured = analysis::layout_visibility(cfg, &bb.spectrum)?;
    Ok(json!({
        "pre_compensator_mm": sol.pre_mm,
        "post_compensator_mm": sol.post_mm,
        "visibility": sol.visibility,
        "evaluations": sol.evaluations,
        "flat_objective": sol.flat_objective,
        "runtime_s": elapsed,
        "configured_lengths_mm": [pre, post],
        "configured_visibility": configured,
    }))
}

struct FittedCurves {
    coherence: f64,
    fits: Vec<(f64, f64, f64)>,
    files: Vec<String>,
}

fn sample_curves(ctx: &Context, command: Command) -> Result<FittedCurves, ToolkitError> {
    let cfg = ctx.config;
    let bb = analysis::broadband(cfg)?;
    let coherence = analysis::layout_visibility(cfg, &bb.spectrum)?;
    let (state, setup) = analysis::polarization_setup(cfg, coherence)?;
    let step = cfg.raw.polarization.scan_step_deg;
    let n = (360.0 / step).floor() as usize;
    let scan: Vec<f64> = (0..=n).map(|k| k as f64 * step).collect();
    let header = ctx.header(command);
    let mut fits = Vec::new();
    let mut files = Vec::new();
    for (k, &theta_i) in IDLER_ANGLES_DEG.iter().enumerate() {
        let curve = correlation_curve(
            &state,
            &setup,
            theta_i,
            &scan,
            Some(cfg.seed.wrapping_add(k as u64)),
        )
        .map_err(|e| ToolkitError::computation(format!("correlation curve at {theta_i}°"), e))?;
        let path = ctx.file(&format!("curve_idler_{theta_i:03}deg.csv"));
        write_table(
            &path,
            &header,
            &["theta_s_deg", "counts", "sigma_counts"],
            curve.iter().map(|p| vec![p.theta_s_deg, p.counts, p.sigma]),
        )?;
        files.push(file_name(&path));
        let (v, sigma) = visibility_from_curve(&curve)
            .map_err(|e| ToolkitError::computation(format!("visibility fit at {theta_i}°"), e))?;
        fits.push((theta_i, v, sigma));
    }
    Ok(FittedCurves {
        coherence,
        fits,
        files,
    })
}

pub fn curves(ctx: &Context) -> Result<Value, ToolkitError> {
    let c = sample_curves(ctx, Command::Curves)?;
    Ok(json!({
        "model_diagonal_visibility": c.coherence,
        "fits": c.fits.iter().map(|f| json!({"theta_i_deg": f.0, "visibility": f.1, "sigma": f.2})).collect::<Vec<_>>(),
        "files": c.files,
    }))
}

pub fn visibility(ctx: &Context) -> Result<Value, ToolkitError> {
    let c = sample_curves(ctx, Command::Visibility)?;
    let mean = |angles: [f64; 2]| {
        let sel: Vec<_> = c.fits.iter().filter(|f| angles.contains(&f.0)).collect();
        let v = sel.iter().map(|f| f.1).sum::<f64>() / sel.len() as f64;
        let s = sel.iter().map(|f| f.2 * f.2).sum::<f64>().sqrt() / sel.len() as f64;
        (v, s)
    };
    let (hv, hv_sigma) = mean([0.0, 90.0]);
    let (da, da_sigma) = mean([45.0, 135.0]);
    let average = 0.5 * (hv + da);
    let model_hv = ctx.config.raw.polarization.hv_visibility;
    let model_da = c.coherence * ctx.config.raw.polarization.phase_offset_rad.cos().abs();
    let model_average = 0.5 * (model_hv + model_da);
    Ok(json!({
        "hv": {"fitted": hv, "sigma": hv_sigma, "model": model_hv},
        "da": {"fitted": da, "sigma": da_sigma, "model": model_da},
        "average": {"fitted": average, "model": model_average},
        "qber": {"fitted": qber_from_visibility(average), "model": qber_from_visibility(model_average)},
        "files": c.files,
    }))
}

fn multiplex_rows(sc: &CountingScenario, channels: &[u32]) -> Vec<Vec<f64>> {
    channels
        .iter()
        .map(|&n| {
            let m = multiplex_summary(&CountingScenario { channels: n, ..*sc });
            vec![
                n as f64,
                m.per_channel.singles_signal,
                m.per_channel.observed_singles_signal,
                m.total.coincidences,
                m.total.observed_coincidences,
                m.total.accidentals,
                m.total.car,
            ]
        })
        .collect()
}

pub fn counting(ctx: &Context) -> Result<Value, ToolkitError> {
    let cfg = ctx.config;
    let c = &cfg.raw.counting;
    let op = cfg.counting;
    let rates = detected_rates(&op);
    let m = multiplex_summary(&op);
    let projection = cfg.projection()?;
    let needed = smallest_channel_count(&projection, c.max_observed_singles, c.min_car, 100_000);
    let mut table: Vec<u32> = (0..=10).map(|k| 1u32 << k).collect();
    if let Some(n) = needed {
        table.push(n);
        table.sort_unstable();
        table.dedup();
    }
    let path = ctx.file("multiplex.csv");
    write_table(
        &path,
        &ctx.header(Command::Counting),
        &[
            "channels",
            "singles_per_detector",
            "observed_singles_per_detector",
            "true_coincidences",
            "observed_true_coincidences",
            "accidentals",
            "car",
        ],
        multiplex_rows(&projection, &table),
    )?;
    Ok(json!({
        "operating_point": {
            "pump_power_mw": op.pump_power_mw,
            "generated_pair_rate": op.generated_pair_rate,
            "singles_signal": rates.singles_signal,
            "singles_idler": rates.singles_idler,
            "coincidences": rates.coincidences,
            "brightness_per_mw": op.brightness(),
            "pair_to_singles_signal": rates.pair_to_singles_signal,
            "pair_to_singles_idler": rates.pair_to_singles_idler,
            "accidentals": m.total.accidentals,
            "car": m.total.car,
        },
        "projection": {
            "pump_power_mw": projection.pump_power_mw,
            "generated_pair_rate": projection.generated_pair_rate,
            "max_observed_singles": c.max_observed_singles,
            "min_car": c.min_car,
            "smallest_channel_count": needed,
        },
        "files": [file_name(&path)],
    }))
}

pub fn simulate(ctx: &Context) -> Result<Value, ToolkitError> {
    let cfg = ctx.config;
    let sc = cfg.counting;
    let duration = cfg.raw.counting.simulation_duration_s;
    let es = simulate_event_streams(&sc, duration, cfg.seed)
        .map_err(|e| ToolkitError::computation("event simulation", e))?;
    let window = sc.coincidence_window_s;
    let counted = count_coincidences(&es, window)
        .map_err(|e| ToolkitError::computation("coincidence count", e))?;
    // far outside any pair correlation, so only accidentals survive
    let delay = 1e-6_f64.max(1000.0 * window);
    let delayed = count_coincidences_delayed(&es, window, delay)
        .map_err(|e| ToolkitError::computation("delayed coincidence count", e))?;
    let m = multiplex_summary(&sc);
    let path = ctx.file("events.csv");
    write_event_streams(&path, &ctx.header(Command::Simulate), &es)?;
    let singles_s: usize = (0..es.channels()).map(|c| es.signal(c).len()).sum();
    let singles_i: usize = (0..es.channels()).map(|c| es.idler(c).len()).sum();
    Ok(json!({
        "duration_s": duration,
        "seed": cfg.seed,
        "singles_signal": {"counted": singles_s, "expected": m.total.observed_singles_signal * duration},
        "singles_idler": {"counted": singles_i, "expected": m.total.observed_singles_idler * duration},
        "coincidences": {
            "counted": counted.total,
            "expected": (m.total.observed_coincidences + m.total.observed_accidentals) * duration,
            "per_channel": counted.per_channel,
        },
        "accidentals": {"counted": delayed.total, "expected": m.total.observed_accidentals * (duration - delay), "delay_s": delay},
        "files": [file_name(&path)],
    }))
}
