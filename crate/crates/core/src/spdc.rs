//! Collinear type-0 quasi-phase-matched down-conversion.
//!
//! Plane-wave model: the emitted spectral density for a pump wavelength is
//! `sinc²(Δk·L/2)` along its energy-conservation curve, weighted by the pump
//! spectrum. Absolute brightness is outside the model; spectra are relative.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::dispersion::{DispersionError, MaterialModel};

const NM_PER_UM: f64 = 1.0e3;
const UM_PER_MM: f64 = 1.0e3;

/// Fraction of a pump sample's cells allowed to be under-resolved before the
/// joint spectrum reports [`GridWarning::TooCoarse`].
pub const COARSE_CELL_FRACTION: f64 = 0.1;
/// Change of the sinc argument Δk·L/2 between neighbouring cells on one
/// pump curve above which the cell counts as under-resolved.
pub const COARSE_PHASE_STEP_RAD: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpdcError {
    #[error(transparent)]
    Dispersion(#[from] DispersionError),
    #[error("invalid crystal: {0}")]
    InvalidCrystal(&'static str),
    #[error("invalid pump spectrum: {0}")]
    InvalidPump(&'static str),
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
    #[error("no idler: signal {signal_nm} nm is not longer than pump {pump_nm} nm")]
    NoIdler { pump_nm: f64, signal_nm: f64 },
    #[error("no quasi-phase-matching solution: {0}")]
    NoSolution(&'static str),
    #[error("curve has no half-maximum crossing on the {0} side")]
    NoCrossing(&'static str),
    #[error("curve is empty or has no positive maximum")]
    EmptyCurve,
}

/// Energy conservation: 1/λi = 1/λp − 1/λs.
pub fn idler_wavelength(pump_nm: f64, signal_nm: f64) -> Option<f64> {
    let inv = 1.0 / pump_nm - 1.0 / signal_nm;
    (inv > 0.0).then(|| 1.0 / inv)
}

/// sinc²(Δk·L/2); `delta_k` in rad/µm, `length_mm` in mm.
pub fn qpm_intensity(delta_k: f64, length_mm: f64) -> f64 {
    let x = 0.5 * delta_k * length_mm * UM_PER_MM;
    if x == 0.0 {
        1.0
    } else {
        let s = x.sin() / x;
        s * s
    }
}

fn mismatch(
    material: &MaterialModel,
    temperature_c: f64,
    poling_period_um: f64,
    pump_nm: f64,
    signal_nm: f64,
    idler_nm: f64,
) -> Result<f64, DispersionError> {
    let np = material.refractive_index(pump_nm, temperature_c)?;
    let ns = material.refractive_index(signal_nm, temperature_c)?;
    let ni = material.refractive_index(idler_nm, temperature_c)?;
    let (lp, ls, li) = (
        pump_nm / NM_PER_UM,
        signal_nm / NM_PER_UM,
        idler_nm / NM_PER_UM,
    );
    // the signal+idler sum is written symmetrically so swapping them is exact
    Ok(2.0 * PI * (np / lp - (ns / ls + ni / li) - 1.0 / poling_period_um))
}

/// First-order QPM period that phase-matches λp → λs + λi, in µm.
pub fn solve_poling_period(
    material: &MaterialModel,
    pump_nm: f64,
    signal_nm: f64,
    temperature_c: f64,
) -> Result<f64, SpdcError> {
    let idler_nm =
        idler_wavelength(pump_nm, signal_nm).ok_or(SpdcError::NoIdler { pump_nm, signal_nm })?;
    let np = material.refractive_index(pump_nm, temperature_c)?;
    let ns = material.refractive_index(signal_nm, temperature_c)?;
    let ni = material.refractive_index(idler_nm, temperature_c)?;
    let k = np / (pump_nm / NM_PER_UM) - ns / (signal_nm / NM_PER_UM) - ni / (idler_nm / NM_PER_UM);
    if !(k > 0.0) {
        return Err(SpdcError::NoSolution(
            "index difference between pump and down-converted light is not positive",
        ));
    }
    Ok(1.0 / k)
}

/// The periodically poled down-converter.
#[derive(Debug, Clone, PartialEq)]
pub struct CrystalSpec {
    pub length_mm: f64,
    pub poling_period_um: f64,
    pub temperature_c: f64,
    pub material: MaterialModel,
}

impl CrystalSpec {
    pub fn new(
        length_mm: f64,
        poling_period_um: f64,
        temperature_c: f64,
        material: MaterialModel,
    ) -> Result<Self, SpdcError> {
        if !(length_mm.is_finite() && length_mm > 0.0) {
            return Err(SpdcError::InvalidCrystal("length must be positive"));
        }
        if !(1.0..=50.0).contains(&poling_period_um) {
            return Err(SpdcError::InvalidCrystal(
                "poling period must lie within [1, 50] µm",
            ));
        }
        if !temperature_c.is_finite() {
            return Err(SpdcError::InvalidCrystal("temperature must be finite"));
        }
        Ok(Self {
            length_mm,
            poling_period_um,
            temperature_c,
            material,
        })
    }

    pub fn at_temperature(&self, temperature_c: f64) -> Self {
        Self {
            temperature_c,
            ..self.clone()
        }
    }

    /// Δk = 2π·[n_p/λp − n_s/λs − n_i/λi − 1/Λ] in rad/µm.
    pub fn delta_k(&self, pump_nm: f64, signal_nm: f64) -> Result<f64, SpdcError> {
        self.delta_k_at(pump_nm, signal_nm, self.temperature_c)
    }

    fn delta_k_at(
        &self,
        pump_nm: f64,
        signal_nm: f64,
        temperature_c: f64,
    ) -> Result<f64, SpdcError> {
        let idler_nm = idler_wavelength(pump_nm, signal_nm)
            .ok_or(SpdcError::NoIdler { pump_nm, signal_nm })?;
        Ok(mismatch(
            &self.material,
            temperature_c,
            self.poling_period_um,
            pump_nm,
            signal_nm,
            idler_nm,
        )?)
    }

    /// Collinear phase-matched pair (λs ≤ λi) for a pump wavelength, or `None`
    /// when the pump lies beyond the degenerate turning point.
    pub fn solve_phasematched_signal(&self, pump_nm: f64) -> Option<(f64, f64)> {
        let degenerate = 2.0 * pump_nm;
        let f_deg = self.delta_k(pump_nm, degenerate).ok()?;
        if f_deg.abs() < 1e-12 {
            return Some((degenerate, degenerate));
        }
        let (lo_nm, hi_nm) = self.material.valid_range_nm();
        // both photons must stay inside the dispersion model
        let min_signal = match idler_wavelength(pump_nm, hi_nm) {
            Some(s) => s.max(lo_nm),
            None => lo_nm,
        };
        if min_signal >= degenerate {
            return None;
        }
        const STEPS: usize = 4000;
        let step = (degenerate - min_signal) / STEPS as f64;
        let mut upper = degenerate;
        for k in 1..=STEPS {
            let lower = degenerate - k as f64 * step;
            let f = self.delta_k(pump_nm, lower).ok()?;
            if f == 0.0 {
                return Some((lower, idler_wavelength(pump_nm, lower)?));
            }
            if f.signum() != f_deg.signum() {
                let signal = bisect(
                    |s| self.delta_k(pump_nm, s).unwrap_or(f64::NAN),
                    lower,
                    upper,
                    1e-10,
                )?;
                return Some((signal, idler_wavelength(pump_nm, signal)?));
            }
            upper = lower;
        }
        None
    }

    /// Temperature at which λp → 2λp is exactly phase-matched.
    pub fn solve_degenerate_temperature(
        &self,
        pump_nm: f64,
        search_c: (f64, f64),
    ) -> Result<f64, SpdcError> {
        self.solve_temperature_for_signal(pump_nm, 2.0 * pump_nm, search_c)
    }

    /// Temperature at which λp → λs (+ its idler) is phase-matched.
    pub fn solve_temperature_for_signal(
        &self,
        pump_nm: f64,
        signal_nm: f64,
        search_c: (f64, f64),
    ) -> Result<f64, SpdcError> {
        let f = |t: f64| self.delta_k_at(pump_nm, signal_nm, t);
        let (a, b) = search_c;
        let (fa, fb) = (f(a)?, f(b)?);
        if fa.signum() == fb.signum() {
            return Err(SpdcError::NoSolution(
                "phase matching is not reached inside the temperature search interval",
            ));
        }
        bisect(|t| f(t).unwrap_or(f64::NAN), a, b, 1e-9)
            .ok_or(SpdcError::NoSolution("temperature bisection failed"))
    }

    /// ∫ sinc²(Δk·L/2) dλs over `band_nm`, counting only signal wavelengths
    /// whose idler also falls inside the band. Trapezoid rule.
    pub fn integrated_rate(&self, pump_nm: f64, band_nm: (f64, f64)) -> Result<f64, SpdcError> {
        const SAMPLES: usize = 8001;
        let (lo, hi) = band_nm;
        let h = (hi - lo) / (SAMPLES - 1) as f64;
        let mut total = 0.0;
        for k in 0..SAMPLES {
            let signal = lo + k as f64 * h;
            let Some(idler) = idler_wavelength(pump_nm, signal) else {
                continue;
            };
            if idler < lo || idler > hi {
                continue;
            }
            let value = qpm_intensity(self.delta_k(pump_nm, signal)?, self.length_mm);
            let w = if k == 0 || k == SAMPLES - 1 { 0.5 } else { 1.0 };
            total += w * value;
        }
        Ok(total * h)
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> Option<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return None;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if !fm.is_finite() {
            return None;
        }
        if fm == 0.0 || (b - a).abs() < tol {
            return Some(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpSample {
    pub wavelength_nm: f64,
    pub weight: f64,
}

/// Sampled pump power spectrum, sorted by wavelength. Weights sum to one
/// unless they are all zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PumpSpectrum {
    samples: Vec<PumpSample>,
    total_power_mw: f64,
}

impl PumpSpectrum {
    pub fn new(mut samples: Vec<PumpSample>, total_power_mw: f64) -> Result<Self, SpdcError> {
        if samples.is_empty() {
            return Err(SpdcError::InvalidPump("no samples"));
        }
        if samples
            .iter()
            .any(|s| !(s.wavelength_nm.is_finite() && s.wavelength_nm > 0.0))
        {
            return Err(SpdcError::InvalidPump("wavelengths must be positive"));
        }
        if samples
            .iter()
            .any(|s| !(s.weight.is_finite() && s.weight >= 0.0))
        {
            return Err(SpdcError::InvalidPump("weights must be non-negative"));
        }
        if !(total_power_mw.is_finite() && total_power_mw >= 0.0) {
            return Err(SpdcError::InvalidPump("power must be non-negative"));
        }
        samples.sort_by(|a, b| a.wavelength_nm.total_cmp(&b.wavelength_nm));
        let sum: f64 = samples.iter().map(|s| s.weight).sum();
        if sum > 0.0 {
            for s in &mut samples {
                s.weight /= sum;
            }
        }
        Ok(Self {
            samples,
            total_power_mw,
        })
    }

    pub fn monochromatic(wavelength_nm: f64, total_power_mw: f64) -> Result<Self, SpdcError> {
        Self::new(
            vec![PumpSample {
                wavelength_nm,
                weight: 1.0,
            }],
            total_power_mw,
        )
    }

    pub fn samples(&self) -> &[PumpSample] {
        &self.samples
    }

    pub fn total_power_mw(&self) -> f64 {
        self.total_power_mw
    }

    pub fn with_weights(&self, weights: &[f64]) -> Result<Self, SpdcError> {
        if weights.len() != self.samples.len() {
            return Err(SpdcError::InvalidPump(
                "weight count differs from sample count",
            ));
        }
        let samples = self
            .samples
            .iter()
            .zip(weights)
            .map(|(s, &weight)| PumpSample {
                wavelength_nm: s.wavelength_nm,
                weight,
            })
            .collect();
        Self::new(samples, self.total_power_mw)
    }
}

/// Longitudinal-mode comb of a free-running diode: modes every `spacing_nm`
/// under a Gaussian envelope of `envelope_fwhm_nm`, truncated at ±2 FWHM.
pub fn make_pump_comb(
    center_nm: f64,
    envelope_fwhm_nm: f64,
    spacing_nm: f64,
    power_mw: f64,
) -> Result<PumpSpectrum, SpdcError> {
    if !(center_nm > 0.0 && envelope_fwhm_nm > 0.0 && spacing_nm > 0.0) {
        return Err(SpdcError::InvalidPump(
            "centre, envelope width and mode spacing must be positive",
        ));
    }
    let half_modes = (2.0 * envelope_fwhm_nm / spacing_nm).floor() as i64;
    let samples = (-half_modes..=half_modes)
        .map(|k| {
            let offset = k as f64 * spacing_nm;
            let x = offset / envelope_fwhm_nm;
            PumpSample {
                wavelength_nm: center_nm + offset,
                weight: (-4.0 * core::f64::consts::LN_2 * x * x).exp(),
            }
        })
        .collect();
    PumpSpectrum::new(samples, power_mw)
}

/// Relative collinear pair rate per pump sample:
/// weight(λp)·∫ sinc²(Δk·L/2) dλs over the band, zero when the pump is beyond
/// the degenerate turning point (the emission is no longer collinear).
pub fn collinear_rate_vs_pump(
    crystal: &CrystalSpec,
    pump: &PumpSpectrum,
    band_nm: (f64, f64),
) -> Result<Vec<(f64, f64)>, SpdcError> {
    pump.samples()
        .iter()
        .map(|s| {
            if s.weight == 0.0 || crystal.solve_phasematched_signal(s.wavelength_nm).is_none() {
                return Ok((s.wavelength_nm, 0.0));
            }
            let rate = crystal.integrated_rate(s.wavelength_nm, band_nm)?;
            Ok((s.wavelength_nm, s.weight * rate))
        })
        .collect()
}

/// Uniform wavelength axis used for both signal and idler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub min_nm: f64,
    pub max_nm: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            min_nm: 730.0,
            max_nm: 890.0,
            points: 512,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), SpdcError> {
        if self.points < 2 {
            return Err(SpdcError::InvalidGrid("need at least two points"));
        }
        if !(self.min_nm > 0.0 && self.min_nm < self.max_nm && self.max_nm.is_finite()) {
            return Err(SpdcError::InvalidGrid("need 0 < min < max"));
        }
        Ok(())
    }

    pub fn step_nm(&self) -> f64 {
        (self.max_nm - self.min_nm) / (self.points - 1) as f64
    }

    pub fn axis(&self) -> Vec<f64> {
        let h = self.step_nm();
        (0..self.points)
            .map(|k| self.min_nm + k as f64 * h)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridWarning {
    /// More than [`COARSE_CELL_FRACTION`] of the cells on this pump
    /// sample's curve step the sinc argument by more than
    /// [`COARSE_PHASE_STEP_RAD`].
    TooCoarse { pump_nm: f64, fraction: f64 },
}

/// Signal–idler intensity on a square grid, row index = signal, column
/// index = idler. Values are relative: each cell holds the pump-weighted
/// sinc² density integrated over the part of the energy-conservation curve
/// that crosses the cell (frequency measure, 1/nm).
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpectrum {
    pub grid_s: Vec<f64>,
    pub grid_i: Vec<f64>,
    pub intensity: Vec<f64>,
    pub temperature_c: f64,
}

impl JointSpectrum {
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.intensity[row * self.grid_i.len() + col]
    }

    pub fn total(&self) -> f64 {
        self.intensity.iter().sum()
    }
}

/// Cell edges in frequency (1/nm) for a uniform wavelength axis; cell k
/// spans [λ_k − h/2, λ_k + h/2].
fn frequency_cells(axis: &[f64], h: f64) -> Vec<(f64, f64)> {
    axis.iter()
        .map(|&l| (1.0 / (l + 0.5 * h), 1.0 / (l - 0.5 * h)))
        .collect()
}

/// Rasterizes the pump-weighted emission onto the grid.
///
/// Each pump sample contributes along its curve νs + νi = νp (ν = 1/λ). A
/// cell receives ∫ sinc²(Δk·L/2) dνs over the piece of the curve inside it,
/// evaluated at the midpoint of that piece, so row sums and column sums are
/// both smooth and the result is symmetric on a shared axis.
pub fn joint_spectrum(
    crystal: &CrystalSpec,
    pump: &PumpSpectrum,
    grid: &GridSpec,
) -> Result<(JointSpectrum, Vec<GridWarning>), SpdcError> {
    grid.validate()?;
    let axis = grid.axis();
    let n = axis.len();
    let h = grid.step_nm();
    let cells = frequency_cells(&axis, h);
    let lambda_lo = grid.min_nm - 0.5 * h;
    let mut intensity = vec![0.0; n * n];
    let mut warnings = Vec::new();

    for sample in pump.samples() {
        if sample.weight == 0.0 {
            continue;
        }
        let nu_p = 1.0 / sample.wavelength_nm;
        let mut occupied = 0usize;
        let mut coarse = 0usize;
        let mut last_arg: Option<f64> = None;
        for (row, &(a_r, b_r)) in cells.iter().enumerate() {
            // idler frequencies reachable from this signal cell
            let (nu_i_lo, nu_i_hi) = (nu_p - b_r, nu_p - a_r);
            if nu_i_hi <= 0.0 {
                continue;
            }
            let lambda_i_min = 1.0 / nu_i_hi;
            let lambda_i_max = if nu_i_lo > 0.0 {
                1.0 / nu_i_lo
            } else {
                f64::INFINITY
            };
            let first = ((lambda_i_min - lambda_lo) / h).floor().max(0.0) as usize;
            if first >= n {
                continue;
            }
            let last = if lambda_i_max.is_finite() {
                (((lambda_i_max - lambda_lo) / h).floor() as isize).min(n as isize - 1)
            } else {
                n as isize - 1
            };
            if last < first as isize {
                continue;
            }
            for col in first..=last as usize {
                let (a_c, b_c) = cells[col];
                let lo = a_c.max(nu_i_lo);
                let hi = b_c.min(nu_i_hi);
                if hi <= lo {
                    continue;
                }
                let nu_i = 0.5 * (lo + hi);
                let nu_s = nu_p - nu_i;
                let dk = mismatch(
                    &crystal.material,
                    crystal.temperature_c,
                    crystal.poling_period_um,
                    sample.wavelength_nm,
                    1.0 / nu_s,
                    1.0 / nu_i,
                )?;
                let arg = 0.5 * dk * crystal.length_mm * UM_PER_MM;
                intensity[row * n + col] +=
                    sample.weight * qpm_intensity(dk, crystal.length_mm) * (hi - lo);
                occupied += 1;
                if let Some(prev) = last_arg {
                    if (arg - prev).abs() > COARSE_PHASE_STEP_RAD {
                        coarse += 1;
                    }
                }
                last_arg = Some(arg);
            }
        }
        if occupied > 0 {
            let fraction = coarse as f64 / occupied as f64;
            if fraction > COARSE_CELL_FRACTION {
                warnings.push(GridWarning::TooCoarse {
                    pump_nm: sample.wavelength_nm,
                    fraction,
                });
            }
        }
    }

    // the two halves agree to rounding; averaging makes the symmetry exact
    for r in 0..n {
        for c in (r + 1)..n {
            let mean = 0.5 * (intensity[r * n + c] + intensity[c * n + r]);
            intensity[r * n + c] = mean;
            intensity[c * n + r] = mean;
        }
    }

    Ok((
        JointSpectrum {
            grid_s: axis.clone(),
            grid_i: axis,
            intensity,
            temperature_c: crystal.temperature_c,
        },
        warnings,
    ))
}

/// Sum over the idler axis: the single-photon spectrum on the signal axis,
/// which holds both lobes of a non-degenerate pair.
pub fn marginal_spectrum(js: &JointSpectrum) -> Vec<(f64, f64)> {
    let n_i = js.grid_i.len();
    js.grid_s
        .iter()
        .enumerate()
        .map(|(r, &l)| (l, js.intensity[r * n_i..(r + 1) * n_i].iter().sum()))
        .collect()
}

/// Distance between the outermost half-maximum crossings, linearly
/// interpolated. The curve must fall below half maximum on both sides.
pub fn fwhm(curve: &[(f64, f64)]) -> Result<f64, SpdcError> {
    let peak = curve.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if curve.is_empty() || !(peak > 0.0) {
        return Err(SpdcError::EmptyCurve);
    }
    let half = 0.5 * peak;
    let first = curve.iter().position(|p| p.1 >= half).unwrap();
    let last = curve.iter().rposition(|p| p.1 >= half).unwrap();
    if first == 0 {
        return Err(SpdcError::NoCrossing("left"));
    }
    if last == curve.len() - 1 {
        return Err(SpdcError::NoCrossing("right"));
    }
    let cross =
        |(x0, y0): (f64, f64), (x1, y1): (f64, f64)| x0 + (half - y0) * (x1 - x0) / (y1 - y0);
    let left = cross(curve[first - 1], curve[first]);
    let right = cross(curve[last], curve[last + 1]);
    Ok(right - left)
}

/// Smallest and largest abscissa whose value is at least `fraction` of the
/// curve maximum.
pub fn support(curve: &[(f64, f64)], fraction: f64) -> Option<(f64, f64)> {
    let peak = curve.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if !(peak > 0.0) {
        return None;
    }
    let threshold = fraction * peak;
    let lo = curve.iter().find(|p| p.1 >= threshold)?.0;
    let hi = curve.iter().rev().find(|p| p.1 >= threshold)?.0;
    Some((lo, hi))
}
