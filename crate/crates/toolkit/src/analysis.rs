//! Derived quantities shared by several commands.

use pairsource_core::counting::accidental_rate;
use pairsource_core::phasemap::{
    optimize_compensators, phase_map, visibility, CompensatorSolution, PhaseMap,
};
use pairsource_core::polarization::{MeasurementSetup, PolarizationState};
use pairsource_core::spdc::{
    fwhm, joint_spectrum, marginal_spectrum, CrystalSpec, GridWarning, JointSpectrum, PumpSpectrum,
};

use crate::config::SourceConfig;
use crate::error::ToolkitError;

pub struct Broadband {
    pub spectrum: JointSpectrum,
    pub warnings: Vec<GridWarning>,
}

pub fn broadband(cfg: &SourceConfig) -> Result<Broadband, ToolkitError> {
    let (spectrum, warnings) = joint_spectrum(cfg.crystal(), cfg.pump(), &cfg.grid)
        .map_err(|e| ToolkitError::computation("broadband joint spectrum", e))?;
    Ok(Broadband { spectrum, warnings })
}

/// The crystal tuned for exact degeneracy and for the reference
/// non-degenerate signal wavelength, both with a single pump line at the
/// pump centre.
pub struct Tunings {
    pub degenerate: CrystalSpec,
    pub nondegenerate: CrystalSpec,
    pub signal_nm: f64,
    pub idler_nm: f64,
}

pub fn tunings(cfg: &SourceConfig) -> Result<Tunings, ToolkitError> {
    let pump = cfg.pump_center_nm;
    let (lo, hi) = cfg.temperature_search_c;
    let crystal = cfg.crystal();
    let t_deg = crystal
        .solve_degenerate_temperature(pump, (lo, hi))
        .map_err(|e| ToolkitError::computation("degenerate temperature", e))?;
    let signal_nm = cfg.raw.analysis.tuning_signal_nm;
    let t_nd = crystal
        .solve_temperature_for_signal(pump, signal_nm, (t_deg, hi))
        .map_err(|e| {
            ToolkitError::computation(format!("temperature for a {signal_nm} nm signal"), e)
        })?;
    Ok(Tunings {
        degenerate: crystal.at_temperature(t_deg),
        nondegenerate: crystal.at_temperature(t_nd),
        signal_nm,
        idler_nm: 1.0 / (1.0 / pump - 1.0 / signal_nm),
    })
}

pub fn narrowband_marginal(
    cfg: &SourceConfig,
    crystal: &CrystalSpec,
) -> Result<Vec<(f64, f64)>, ToolkitError> {
    let line = PumpSpectrum::monochromatic(cfg.pump_center_nm, cfg.pump().total_power_mw())
        .map_err(|e| ToolkitError::computation("narrowband pump", e))?;
    let (js, _) = joint_spectrum(crystal, &line, &cfg.narrowband_grid)
        .map_err(|e| ToolkitError::computation("narrowband joint spectrum", e))?;
    Ok(marginal_spectrum(&js))
}

pub struct Widths {
    pub degenerate_fwhm_nm: f64,
    /// FWHM of the short-wavelength lobe of the non-degenerate tuning.
    pub lobe_fwhm_nm: f64,
}

pub fn widths(cfg: &SourceConfig, t: &Tunings) -> Result<Widths, ToolkitError> {
    let deg = narrowband_marginal(cfg, &t.degenerate)?;
    let split = cfg.pump_center_nm * 2.0;
    let lobe: Vec<_> = narrowband_marginal(cfg, &t.nondegenerate)?
        .into_iter()
        .filter(|p| p.0 < split)
        .collect();
    Ok(Widths {
        degenerate_fwhm_nm: fwhm(&deg)
            .map_err(|e| ToolkitError::computation("degenerate FWHM", e))?,
        lobe_fwhm_nm: fwhm(&lobe)
            .map_err(|e| ToolkitError::computation("non-degenerate FWHM", e))?,
    })
}

/// Integrated collinear rate, degenerate over non-degenerate tuning.
pub fn rate_ratio(cfg: &SourceConfig, t: &Tunings) -> Result<f64, ToolkitError> {
    let band = cfg.rate_band_nm;
    let rate = |c: &CrystalSpec| {
        c.integrated_rate(cfg.pump_center_nm, band)
            .map_err(|e| ToolkitError::computation("integrated rate", e))
    };
    Ok(rate(&t.degenerate)? / rate(&t.nondegenerate)?)
}

pub fn layout_phase_map(cfg: &SourceConfig) -> Result<PhaseMap, ToolkitError> {
    phase_map(&cfg.layout, &cfg.grid).map_err(|e| ToolkitError::computation("phase map", e))
}

pub fn layout_visibility(cfg: &SourceConfig, js: &JointSpectrum) -> Result<f64, ToolkitError> {
    visibility(js, &layout_phase_map(cfg)?).map_err(|e| ToolkitError::computation("visibility", e))
}

pub fn visibility_with_lengths(
    cfg: &SourceConfig,
    js: &JointSpectrum,
    pre_mm: f64,
    post_mm: f64,
) -> Result<f64, ToolkitError> {
    let layout = cfg
        .layout
        .with_compensators(pre_mm, post_mm)
        .map_err(|e| ToolkitError::computation("compensator lengths", e))?;
    let pm =
        phase_map(&layout, &cfg.grid).map_err(|e| ToolkitError::computation("phase map", e))?;
    visibility(js, &pm).map_err(|e| ToolkitError::computation("visibility", e))
}

pub fn optimize(
    cfg: &SourceConfig,
    js: &JointSpectrum,
) -> Result<CompensatorSolution, ToolkitError> {
    optimize_compensators(&cfg.layout, js, cfg.compensator_bounds)
        .map_err(|e| ToolkitError::computation("compensator optimization", e))
}

/// Polarization state and measurement setup for correlation curves.
pub fn polarization_setup(
    cfg: &SourceConfig,
    coherence: f64,
) -> Result<(PolarizationState, MeasurementSetup), ToolkitError> {
    let p = &cfg.raw.polarization;
    let state = PolarizationState::new(coherence, p.phase_offset_rad, p.hv_visibility)
        .map_err(|e| ToolkitError::computation("polarization state", e))?;
    let c = &cfg.raw.counting;
    let pairs = c.brightness_per_mw * p.pump_power_mw;
    let generated = pairs / (c.eta_signal * c.eta_idler);
    let setup = MeasurementSetup {
        polarizer_transmission: p.polarizer_transmission,
        true_pair_rate: pairs,
        accidental_rate: accidental_rate(
            generated * c.eta_signal,
            generated * c.eta_idler,
            c.coincidence_window_s,
        ),
        integration_time_s: p.integration_time_s,
    };
    setup
        .validate()
        .map_err(|e| ToolkitError::computation("measurement setup", e))?;
    Ok((state, setup))
}
