//! Source configuration: JSON on disk, validated into core types.
//!
//! The layout of the file is documented in `docs/config.schema.json`.

use std::path::{Path, PathBuf};

use pairsource_core::counting::CountingScenario;
use pairsource_core::dispersion::{ActsOn, ArmSign, Axis, ElementRole, UniaxialElement};
use pairsource_core::phasemap::{CompensatorBounds, OpticalLayout};
use pairsource_core::spdc::{make_pump_comb, CrystalSpec, GridSpec, PumpSample, PumpSpectrum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{FieldError, ToolkitError};
use crate::io::read_pump_csv;
use crate::materials::MaterialLibrary;

/// Overrides the `materials` path of every config when set.
pub const MATERIALS_ENV: &str = "PAIRSOURCE_MATERIALS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    /// Relative paths resolve against the config file's directory.
    pub materials: String,
    pub crystal: RawCrystal,
    pub pump: RawPump,
    pub layout: Vec<RawElement>,
    #[serde(default)]
    pub grid: RawGrid,
    #[serde(default)]
    pub analysis: RawAnalysis,
    pub counting: RawCounting,
    #[serde(default)]
    pub polarization: RawPolarization,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawTemperature {
    Celsius(f64),
    /// Only `"degenerate"` is accepted: solve for λp → 2λp at the pump centre.
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCrystal {
    pub material: String,
    pub length_mm: f64,
    pub poling_period_um: f64,
    pub temperature_c: RawTemperature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawComb {
    pub center_nm: f64,
    pub envelope_fwhm_nm: f64,
    pub spacing_nm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPump {
    pub power_mw: f64,
    #[serde(default)]
    pub comb: Option<RawComb>,
    /// CSV with columns `wavelength_nm,weight`.
    #[serde(default)]
    pub csv: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RawArmSign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RawActsOn {
    Pump,
    SignalAndIdler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RawRole {
    WalkOff,
    Compensator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawElement {
    pub name: String,
    pub ordinary: String,
    pub extraordinary: String,
    /// May be omitted for compensators; the slot is then empty (0 mm) until
    /// `optimize` proposes a length.
    #[serde(default)]
    pub length_mm: Option<f64>,
    pub cut_angle_deg: f64,
    pub arm_sign: RawArmSign,
    pub acts_on: RawActsOn,
    pub role: RawRole,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGrid {
    pub min_nm: f64,
    pub max_nm: f64,
    pub points: usize,
}

impl Default for RawGrid {
    fn default() -> Self {
        let g = GridSpec::default();
        Self {
            min_nm: g.min_nm,
            max_nm: g.max_nm,
            points: g.points,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawTemperatureScan {
    pub min_c: f64,
    pub max_c: f64,
    pub step_c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RawAnalysis {
    /// Collection band for integrated rates.
    pub rate_band_nm: [f64; 2],
    pub temperature_search_c: [f64; 2],
    /// Signal wavelength of the non-degenerate reference tuning.
    pub tuning_signal_nm: f64,
    pub temperature_scan: RawTemperatureScan,
    /// Grid for narrowband (single pump line) spectra.
    pub narrowband_grid: RawGrid,
    pub compensator_bounds_mm: [f64; 2],
}

impl Default for RawAnalysis {
    fn default() -> Self {
        Self {
            rate_band_nm: [700.0, 950.0],
            temperature_search_c: [0.0, 150.0],
            tuning_signal_nm: 780.0,
            temperature_scan: RawTemperatureScan {
                min_c: 20.0,
                max_c: 60.0,
                step_c: 0.25,
            },
            narrowband_grid: RawGrid {
                min_nm: 760.0,
                max_nm: 860.0,
                points: 1001,
            },
            compensator_bounds_mm: [0.0, 3.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCounting {
    /// Detected pairs/s per mW of pump.
    pub brightness_per_mw: f64,
    pub pump_power_mw: f64,
    pub eta_signal: f64,
    pub eta_idler: f64,
    pub coincidence_window_s: f64,
    pub dead_time_s: f64,
    #[serde(default = "one")]
    pub channels: u32,
    /// High-power operating point for the multiplexing analysis.
    #[serde(default = "projection_power")]
    pub projection_power_mw: f64,
    #[serde(default = "max_singles")]
    pub max_observed_singles: f64,
    #[serde(default = "min_car")]
    pub min_car: f64,
    #[serde(default = "simulation_duration")]
    pub simulation_duration_s: f64,
}

fn one() -> u32 {
    1
}
fn projection_power() -> f64 {
    1000.0
}
fn max_singles() -> f64 {
    1e7
}
fn min_car() -> f64 {
    10.0
}
fn simulation_duration() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RawPolarization {
    /// H/V-basis visibility (crosstalk floor).
    pub hv_visibility: f64,
    /// Residual HH/VV phase after the global phase has been trimmed.
    pub phase_offset_rad: f64,
    pub polarizer_transmission: f64,
    /// Pump power used for correlation curves.
    pub pump_power_mw: f64,
    pub integration_time_s: f64,
    pub scan_step_deg: f64,
}

impl Default for RawPolarization {
    fn default() -> Self {
        Self {
            hv_visibility: 0.99,
            phase_offset_rad: 0.0,
            polarizer_transmission: 0.85,
            pump_power_mw: 0.01,
            integration_time_s: 1.0,
            scan_step_deg: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemperatureMode {
    Fixed,
    Degenerate,
}

/// A fully validated configuration.
#[derive(Debug, Clone)]
pub struct SourceConfig {
    pub path: PathBuf,
    /// SHA-256 of the config file bytes, hex.
    pub hash: String,
    pub raw: RawConfig,
    pub materials_path: PathBuf,
    pub library: MaterialLibrary,
    pub temperature_mode: TemperatureMode,
    pub pump_center_nm: f64,
    pub layout: OpticalLayout,
    pub grid: GridSpec,
    pub narrowband_grid: GridSpec,
    pub rate_band_nm: (f64, f64),
    pub temperature_search_c: (f64, f64),
    pub compensator_bounds: CompensatorBounds,
    /// Operating point at `counting.pump_power_mw`.
    pub counting: CountingScenario,
    pub seed: u64,
    pub warnings: Vec<String>,
}

impl SourceConfig {
    pub fn crystal(&self) -> &CrystalSpec {
        &self.layout.crystal
    }

    pub fn pump(&self) -> &PumpSpectrum {
        &self.layout.pump
    }

    /// Counting scenario at the high-power projection.
    pub fn projection(&self) -> Result<CountingScenario, ToolkitError> {
        let c = &self.raw.counting;
        CountingScenario::from_brightness(
            c.brightness_per_mw,
            c.projection_power_mw,
            c.eta_signal,
            c.eta_idler,
            c.coincidence_window_s,
            c.dead_time_s,
            c.channels,
        )
        .map_err(|e| ToolkitError::computation("counting projection", e))
    }

    pub fn with_grid_points(mut self, points: usize) -> Result<Self, ToolkitError> {
        let grid = GridSpec {
            points,
            ..self.grid
        };
        grid.validate().map_err(|e| ToolkitError::Validation {
            path: self.path.clone(),
            errors: vec![FieldError::new("grid.points", e.to_string())],
        })?;
        self.grid = grid;
        self.raw.grid.points = points;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.raw.seed = seed;
        self
    }
}

struct Checks {
    errors: Vec<FieldError>,
}

impl Checks {
    fn fail(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.errors.push(FieldError::new(path, message));
    }

    fn positive(&mut self, path: &str, v: f64) {
        if !(v.is_finite() && v > 0.0) {
            self.fail(path, format!("must be positive, got {v}"));
        }
    }

    fn non_negative(&mut self, path: &str, v: f64) {
        if !(v.is_finite() && v >= 0.0) {
            self.fail(path, format!("must be non-negative, got {v}"));
        }
    }

    fn fraction(&mut self, path: &str, v: f64, allow_zero: bool) {
        let ok = if allow_zero {
            (0.0..=1.0).contains(&v)
        } else {
            v > 0.0 && v <= 1.0
        };
        if !ok {
            let range = if allow_zero { "[0, 1]" } else { "(0, 1]" };
            self.fail(path, format!("must lie in {range}, got {v}"));
        }
    }

    fn interval(&mut self, path: &str, lo: f64, hi: f64) {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            self.fail(
                path,
                format!("must be an increasing pair, got [{lo}, {hi}]"),
            );
        }
    }

    fn grid(&mut self, path: &str, g: &RawGrid) {
        self.positive(&format!("{path}.min_nm"), g.min_nm);
        self.interval(path, g.min_nm, g.max_nm);
        if g.points < 3 {
            self.fail(format!("{path}.points"), "must be at least 3");
        }
    }
}

fn grid_spec(g: &RawGrid) -> GridSpec {
    GridSpec {
        min_nm: g.min_nm,
        max_nm: g.max_nm,
        points: g.points,
    }
}

fn hash_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Reads, parses and validates a config. Every problem found is reported
/// together, each with its field path.
pub fn load_config(path: &Path) -> Result<SourceConfig, ToolkitError> {
    let bytes = std::fs::read(path).map_err(|e| ToolkitError::io(path, e))?;
    let raw: RawConfig =
        serde_json::from_slice(&bytes).map_err(|e| ToolkitError::parse(path, &e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    resolve(raw, path, base, hash_bytes(&bytes))
}

/// Validates an in-memory config; relative paths resolve against `base`.
pub fn resolve(
    raw: RawConfig,
    path: &Path,
    base: &Path,
    hash: String,
) -> Result<SourceConfig, ToolkitError> {
    let materials_path = match std::env::var_os(MATERIALS_ENV) {
        Some(p) if !p.is_empty() => PathBuf::from(p),
        _ => base.join(&raw.materials),
    };
    let library = MaterialLibrary::load(&materials_path)?;
    let invalid = |errors| ToolkitError::Validation {
        path: path.to_path_buf(),
        errors,
    };

    let mut ck = Checks { errors: Vec::new() };
    let mut warnings = Vec::new();

    // crystal
    let crystal_model = library.get(&raw.crystal.material).cloned();
    if crystal_model.is_none() {
        ck.fail(
            "crystal.material",
            format!("unknown material `{}`", raw.crystal.material),
        );
    }
    ck.positive("crystal.length_mm", raw.crystal.length_mm);
    ck.positive("crystal.poling_period_um", raw.crystal.poling_period_um);
    let temperature_mode = match &raw.crystal.temperature_c {
        RawTemperature::Celsius(t) => {
            if !t.is_finite() {
                ck.fail("crystal.temperature_c", "must be finite");
            }
            TemperatureMode::Fixed
        }
        RawTemperature::Named(s) if s == "degenerate" => TemperatureMode::Degenerate,
        RawTemperature::Named(s) => {
            ck.fail(
                "crystal.temperature_c",
                format!("must be a number or \"degenerate\", got \"{s}\""),
            );
            TemperatureMode::Fixed
        }
    };

    // pump
    ck.positive("pump.power_mw", raw.pump.power_mw);
    let mut pump_samples: Option<Vec<PumpSample>> = None;
    match (&raw.pump.comb, &raw.pump.csv) {
        (Some(comb), None) => {
            ck.positive("pump.comb.center_nm", comb.center_nm);
            ck.positive("pump.comb.envelope_fwhm_nm", comb.envelope_fwhm_nm);
            ck.positive("pump.comb.spacing_nm", comb.spacing_nm);
        }
        (None, Some(csv)) => match read_pump_csv(&base.join(csv)) {
            Ok(samples) => pump_samples = Some(samples),
            Err(e) => ck.fail("pump.csv", e.to_string()),
        },
        _ => ck.fail("pump", "exactly one of `comb` and `csv` is required"),
    }

    // layout
    let mut elements = Vec::new();
    let mut slots = (0, 0);
    for (k, e) in raw.layout.iter().enumerate() {
        let p = |field: &str| format!("layout[{k}].{field}");
        let lookup = |ck: &mut Checks, field: &str, name: &str, axis: Axis| match library.get(name)
        {
            None => {
                ck.fail(p(field), format!("unknown material `{name}`"));
                None
            }
            Some(m) if m.axis() != axis => {
                ck.fail(
                    p(field),
                    format!("material `{name}` is not an {field} model"),
                );
                None
            }
            Some(m) => Some(m.clone()),
        };
        let o = lookup(&mut ck, "ordinary", &e.ordinary, Axis::Ordinary);
        let x = lookup(
            &mut ck,
            "extraordinary",
            &e.extraordinary,
            Axis::Extraordinary,
        );
        let length_mm = match (e.length_mm, e.role) {
            (Some(l), RawRole::Compensator) => {
                ck.non_negative(&p("length_mm"), l);
                l
            }
            (Some(l), RawRole::WalkOff) => {
                ck.positive(&p("length_mm"), l);
                l
            }
            (None, RawRole::Compensator) => {
                warnings.push(format!(
                    "{}: compensator length not given, slot left empty",
                    p("length_mm")
                ));
                0.0
            }
            (None, RawRole::WalkOff) => {
                ck.fail(p("length_mm"), "required for walk-off elements");
                0.0
            }
        };
        if !(0.0..=90.0).contains(&e.cut_angle_deg) {
            ck.fail(
                p("cut_angle_deg"),
                format!("must lie in [0, 90], got {}", e.cut_angle_deg),
            );
        }
        let acts_on = match e.acts_on {
            RawActsOn::Pump => ActsOn::Pump,
            RawActsOn::SignalAndIdler => ActsOn::SignalAndIdler,
        };
        let role = match e.role {
            RawRole::WalkOff => ElementRole::WalkOff,
            RawRole::Compensator => ElementRole::Compensator,
        };
        if role == ElementRole::Compensator {
            match acts_on {
                ActsOn::Pump => slots.0 += 1,
                ActsOn::SignalAndIdler => slots.1 += 1,
            }
        }
        if let (Some(ordinary), Some(extraordinary)) = (o, x) {
            elements.push(UniaxialElement {
                name: e.name.clone(),
                ordinary,
                extraordinary,
                length_mm,
                cut_angle_deg: e.cut_angle_deg,
                arm_sign: match e.arm_sign {
                    RawArmSign::Plus => ArmSign::Plus,
                    RawArmSign::Minus => ArmSign::Minus,
                },
                acts_on,
                role,
            });
        }
    }
    if slots.0 > 1 || slots.1 > 1 {
        ck.fail(
            "layout",
            format!(
                "at most one compensator per beam, got {} on the pump and {} on signal/idler",
                slots.0, slots.1
            ),
        );
    }
    if slots != (1, 1) {
        warnings.push("layout: no complete compensator pair, `optimize` is unavailable".into());
    }

    // grids and analysis
    ck.grid("grid", &raw.grid);
    let a = &raw.analysis;
    ck.grid("analysis.narrowband_grid", &a.narrowband_grid);
    ck.positive("analysis.rate_band_nm", a.rate_band_nm[0]);
    ck.interval(
        "analysis.rate_band_nm",
        a.rate_band_nm[0],
        a.rate_band_nm[1],
    );
    ck.interval(
        "analysis.temperature_search_c",
        a.temperature_search_c[0],
        a.temperature_search_c[1],
    );
    ck.positive("analysis.tuning_signal_nm", a.tuning_signal_nm);
    ck.interval(
        "analysis.temperature_scan",
        a.temperature_scan.min_c,
        a.temperature_scan.max_c,
    );
    ck.positive(
        "analysis.temperature_scan.step_c",
        a.temperature_scan.step_c,
    );
    ck.non_negative("analysis.compensator_bounds_mm", a.compensator_bounds_mm[0]);
    ck.interval(
        "analysis.compensator_bounds_mm",
        a.compensator_bounds_mm[0],
        a.compensator_bounds_mm[1],
    );

    // counting
    let c = &raw.counting;
    ck.non_negative("counting.brightness_per_mw", c.brightness_per_mw);
    ck.positive("counting.pump_power_mw", c.pump_power_mw);
    ck.fraction("counting.eta_signal", c.eta_signal, false);
    ck.fraction("counting.eta_idler", c.eta_idler, false);
    ck.non_negative("counting.coincidence_window_s", c.coincidence_window_s);
    ck.non_negative("counting.dead_time_s", c.dead_time_s);
    if c.channels == 0 {
        ck.fail("counting.channels", "must be at least 1");
    }
    ck.positive("counting.projection_power_mw", c.projection_power_mw);
    ck.positive("counting.max_observed_singles", c.max_observed_singles);
    ck.non_negative("counting.min_car", c.min_car);
    ck.positive("counting.simulation_duration_s", c.simulation_duration_s);

    // polarization
    let pol = &raw.polarization;
    ck.fraction("polarization.hv_visibility", pol.hv_visibility, true);
    if !pol.phase_offset_rad.is_finite() {
        ck.fail("polarization.phase_offset_rad", "must be finite");
    }
    ck.fraction(
        "polarization.polarizer_transmission",
        pol.polarizer_transmission,
        false,
    );
    ck.positive("polarization.pump_power_mw", pol.pump_power_mw);
    ck.positive("polarization.integration_time_s", pol.integration_time_s);
    ck.positive("polarization.scan_step_deg", pol.scan_step_deg);
    if pol.scan_step_deg > 22.5 {
        ck.fail(
            "polarization.scan_step_deg",
            "must be at most 22.5 so a scan has 8 points",
        );
    }

    if !ck.errors.is_empty() {
        return Err(invalid(ck.errors));
    }

    // construct core objects; their own checks map back to field paths
    let pump = match pump_samples {
        Some(samples) => PumpSpectrum::new(samples, raw.pump.power_mw),
        None => {
            let comb = raw.pump.comb.as_ref().expect("validated above");
            make_pump_comb(
                comb.center_nm,
                comb.envelope_fwhm_nm,
                comb.spacing_nm,
                raw.pump.power_mw,
            )
        }
    }
    .map_err(|e| invalid(vec![FieldError::new("pump", e.to_string())]))?;
    let pump_center_nm = match &raw.pump.comb {
        Some(comb) => comb.center_nm,
        None => {
            let s = pump.samples();
            let total: f64 = s.iter().map(|p| p.weight).sum();
            s.iter().map(|p| p.wavelength_nm * p.weight).sum::<f64>() / total
        }
    };

    let model = crystal_model.expect("validated above");
    let base_temperature = match raw.crystal.temperature_c {
        RawTemperature::Celsius(t) => t,
        RawTemperature::Named(_) => model.reference_temperature_c(),
    };
    let mut crystal = CrystalSpec::new(
        raw.crystal.length_mm,
        raw.crystal.poling_period_um,
        base_temperature,
        model,
    )
    .map_err(|e| invalid(vec![FieldError::new("crystal", e.to_string())]))?;
    let temperature_search_c = (a.temperature_search_c[0], a.temperature_search_c[1]);
    if temperature_mode == TemperatureMode::Degenerate {
        let t = crystal
            .solve_degenerate_temperature(pump_center_nm, temperature_search_c)
            .map_err(|e| {
                invalid(vec![FieldError::new(
                    "crystal.temperature_c",
                    format!("degenerate temperature for {pump_center_nm} nm: {e}"),
                )])
            })?;
        crystal = crystal.at_temperature(t);
    }

    let layout = OpticalLayout::new(elements, crystal, pump)
        .map_err(|e| invalid(vec![FieldError::new("layout", e.to_string())]))?;
    let counting = CountingScenario::from_brightness(
        c.brightness_per_mw,
        c.pump_power_mw,
        c.eta_signal,
        c.eta_idler,
        c.coincidence_window_s,
        c.dead_time_s,
        c.channels,
    )
    .map_err(|e| invalid(vec![FieldError::new("counting", e.to_string())]))?;

    Ok(SourceConfig {
        path: path.to_path_buf(),
        hash,
        materials_path,
        library,
        temperature_mode,
        pump_center_nm,
        grid: grid_spec(&raw.grid),
        narrowband_grid: grid_spec(&a.narrowband_grid),
        rate_band_nm: (a.rate_band_nm[0], a.rate_band_nm[1]),
        temperature_search_c,
        compensator_bounds: CompensatorBounds {
            pre_mm: (a.compensator_bounds_mm[0], a.compensator_bounds_mm[1]),
            post_mm: (a.compensator_bounds_mm[0], a.compensator_bounds_mm[1]),
        },
        layout,
        counting,
        seed: raw.seed,
        warnings,
        raw,
    })
}
