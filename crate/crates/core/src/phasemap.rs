//! Interferometric phase of the beam-displacement layout and compensation.
//!
//! Δφ(λs, λi) = φ(|VV⟩ path) − φ(|HH⟩ path). Pump-acting elements are
//! evaluated at λp = (1/λs + 1/λi)⁻¹, signal/idler-acting elements at λs and
//! at λi. The phase is never wrapped.
//!
//! ```text
//!            displacer (BBO)   HWP    PPKTP    HWP    combiner (BBO)
//!  pump D ─▶ H: e-ray, walks ─▶ H→V ─▶ VV ─▶ VV→HH ─▶ o-ray ─┐
//!            V: o-ray ───────────────▶ VV ──────────▶ e-ray, walks back ─▶ HH + e^{iΔφ} VV
//!            arm sign +1                              arm sign −1
//! ```
//! The pre-compensator sits in the pump beam and the post-compensator in the
//! recombined SPDC beam; their signs are fixed by crystal orientation.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::dispersion::{ActsOn, DispersionError, ElementRole, UniaxialElement};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::spdc::{CrystalSpec, GridSpec, JointSpectrum, PumpSpectrum, SpdcError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PhaseError {
    #[error(transparent)]
    Dispersion(#[from] DispersionError),
    #[error(transparent)]
    Spdc(#[from] SpdcError),
    #[error("joint spectrum and phase map are sampled on different grids")]
    GridMismatch,
    #[error("joint spectrum is empty")]
    EmptySpectrum,
    #[error("phase is undefined at {signal_nm} nm / {idler_nm} nm where the spectrum is non-zero")]
    UndefinedPhase { signal_nm: f64, idler_nm: f64 },
    #[error("layout needs exactly one pump compensator and one signal/idler compensator, found {pump} and {spdc}")]
    CompensatorSlots { pump: usize, spdc: usize },
    #[error("compensator bounds must satisfy 0 <= min < max, got [{min}, {max}] mm")]
    Bounds { min: f64, max: f64 },
}

/// Birefringent elements around the down-converter, in beam order.
#[derive(Debug, Clone, PartialEq)]
pub struct OpticalLayout {
    pub elements: Vec<UniaxialElement>,
    pub crystal: CrystalSpec,
    pub pump: PumpSpectrum,
}

impl OpticalLayout {
    pub fn new(
        elements: Vec<UniaxialElement>,
        crystal: CrystalSpec,
        pump: PumpSpectrum,
    ) -> Result<Self, PhaseError> {
        for e in &elements {
            e.validate()?;
        }
        Ok(Self {
            elements,
            crystal,
            pump,
        })
    }

    fn compensator_slots(&self) -> Result<(usize, usize), PhaseError> {
        let find = |acts_on| {
            self.elements
                .iter()
                .enumerate()
                .filter(|(_, e)| e.role == ElementRole::Compensator && e.acts_on == acts_on)
                .map(|(k, _)| k)
                .collect::<Vec<_>>()
        };
        let (pump, spdc) = (find(ActsOn::Pump), find(ActsOn::SignalAndIdler));
        match (pump.as_slice(), spdc.as_slice()) {
            ([p], [s]) => Ok((*p, *s)),
            _ => Err(PhaseError::CompensatorSlots {
                pump: pump.len(),
                spdc: spdc.len(),
            }),
        }
    }

    /// Same layout with the two compensator lengths replaced.
    pub fn with_compensators(&self, pre_mm: f64, post_mm: f64) -> Result<Self, PhaseError> {
        let (p, s) = self.compensator_slots()?;
        let mut out = self.clone();
        out.elements[p].length_mm = pre_mm;
        out.elements[s].length_mm = post_mm;
        Ok(out)
    }

    pub fn compensator_lengths(&self) -> Result<(f64, f64), PhaseError> {
        let (p, s) = self.compensator_slots()?;
        Ok((self.elements[p].length_mm, self.elements[s].length_mm))
    }
}

fn element_phase(
    element: &UniaxialElement,
    signal_nm: f64,
    idler_nm: f64,
    pump_nm: f64,
    temperature_c: f64,
) -> Result<f64, DispersionError> {
    match element.acts_on {
        ActsOn::Pump => element.birefringent_phase(pump_nm, temperature_c),
        ActsOn::SignalAndIdler => Ok(element.birefringent_phase(signal_nm, temperature_c)?
            + element.birefringent_phase(idler_nm, temperature_c)?),
    }
}

/// Δφ(λs, λi) summed over every element of the layout.
pub fn total_phase(
    layout: &OpticalLayout,
    signal_nm: f64,
    idler_nm: f64,
) -> Result<f64, PhaseError> {
    let pump_nm = 1.0 / (1.0 / signal_nm + 1.0 / idler_nm);
    let t = layout.crystal.temperature_c;
    layout.elements.iter().try_fold(0.0, |acc, e| {
        Ok(acc + element_phase(e, signal_nm, idler_nm, pump_nm, t)?)
    })
}

/// Δφ sampled on the joint-spectrum grid. Cells where some element's
/// dispersion model is out of range hold NaN; those never carry emission
/// for grids inside the models' ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMap {
    pub grid_s: Vec<f64>,
    pub grid_i: Vec<f64>,
    pub phase: Vec<f64>,
}

impl PhaseMap {
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.phase[row * self.grid_i.len() + col]
    }

    /// Weighted mean over the finite cells (weights from a joint spectrum,
    /// or uniform when `None`).
    pub fn mean(&self, weights: Option<&JointSpectrum>) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (k, &p) in self.phase.iter().enumerate() {
            if !p.is_finite() {
                continue;
            }
            let w = weights.map_or(1.0, |js| js.intensity[k]);
            num += w * p;
            den += w;
        }
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }
}

pub fn phase_map(layout: &OpticalLayout, grid: &GridSpec) -> Result<PhaseMap, PhaseError> {
    grid.validate()?;
    let axis = grid.axis();
    let n = axis.len();
    let mut phase = Vec::with_capacity(n * n);
    for &s in &axis {
        for &i in &axis {
            phase.push(match total_phase(layout, s, i) {
                Ok(p) => p,
                Err(PhaseError::Dispersion(DispersionError::OutOfRange { .. })) => f64::NAN,
                Err(e) => return Err(e),
            });
        }
    }
    Ok(PhaseMap {
        grid_s: axis.clone(),
        grid_i: axis,
        phase,
    })
}

/// V = |Σ S·e^{iΔφ}| / Σ S: the D/A-basis coherence of the spectrally
/// averaged state.
pub fn visibility(js: &JointSpectrum, pm: &PhaseMap) -> Result<f64, PhaseError> {
    if js.grid_s != pm.grid_s || js.grid_i != pm.grid_i || js.intensity.len() != pm.phase.len() {
        return Err(PhaseError::GridMismatch);
    }
    let n_i = js.grid_i.len();
    let (mut re, mut im, mut total) = (0.0, 0.0, 0.0);
    for (k, (&w, &p)) in js.intensity.iter().zip(&pm.phase).enumerate() {
        if w == 0.0 {
            continue;
        }
        if !p.is_finite() {
            return Err(PhaseError::UndefinedPhase {
                signal_nm: js.grid_s[k / n_i],
                idler_nm: js.grid_i[k % n_i],
            });
        }
        let (s, c) = p.sin_cos();
        re += w * c;
        im += w * s;
        total += w;
    }
    if total <= 0.0 {
        return Err(PhaseError::EmptySpectrum);
    }
    Ok((re * re + im * im).sqrt() / total)
}

/// Visibility as a function of the two compensator lengths.
///
/// Every element phase is linear in its length, so the map is stored as a
/// fixed part plus per-millimetre slopes over the emitting cells only.
#[derive(Debug, Clone)]
pub struct CompensationObjective {
    weights: Vec<f64>,
    fixed: Vec<f64>,
    pre_per_mm: Vec<f64>,
    post_per_mm: Vec<f64>,
    total: f64,
}

impl CompensationObjective {
    pub fn new(layout: &OpticalLayout, js: &JointSpectrum) -> Result<Self, PhaseError> {
        let (pre_idx, post_idx) = layout.compensator_slots()?;
        let n_i = js.grid_i.len();
        let t = layout.crystal.temperature_c;
        let pre_unit = layout.elements[pre_idx].with_length(1.0);
        let post_unit = layout.elements[post_idx].with_length(1.0);
        let mut out = Self {
            weights: Vec::new(),
            fixed: Vec::new(),
            pre_per_mm: Vec::new(),
            post_per_mm: Vec::new(),
            total: 0.0,
        };
        for (k, &w) in js.intensity.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let (s, i) = (js.grid_s[k / n_i], js.grid_i[k % n_i]);
            let p = 1.0 / (1.0 / s + 1.0 / i);
            let mut fixed = 0.0;
            for (idx, e) in layout.elements.iter().enumerate() {
                if idx != pre_idx && idx != post_idx {
                    fixed += element_phase(e, s, i, p, t)?;
                }
            }
            out.weights.push(w);
            out.fixed.push(fixed);
            out.pre_per_mm.push(element_phase(&pre_unit, s, i, p, t)?);
            out.post_per_mm.push(element_phase(&post_unit, s, i, p, t)?);
            out.total += w;
        }
        if out.total <= 0.0 {
            return Err(PhaseError::EmptySpectrum);
        }
        Ok(out)
    }

    pub fn visibility(&self, pre_mm: f64, post_mm: f64) -> f64 {
        let (mut re, mut im) = (0.0, 0.0);
        for k in 0..self.weights.len() {
            let phi = self.fixed[k] + pre_mm * self.pre_per_mm[k] + post_mm * self.post_per_mm[k];
            let (s, c) = phi.sin_cos();
            re += self.weights[k] * c;
            im += self.weights[k] * s;
        }
        (re * re + im * im).sqrt() / self.total
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompensatorBounds {
    pub pre_mm: (f64, f64),
    pub post_mm: (f64, f64),
}

impl Default for CompensatorBounds {
    fn default() -> Self {
        Self {
            pre_mm: (0.0, 3.0),
            post_mm: (0.0, 3.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompensatorSolution {
    pub pre_mm: f64,
    pub post_mm: f64,
    pub visibility: f64,
    pub evaluations: usize,
    /// Visibility varied by less than 1e-6 over the coarse grid.
    pub flat_objective: bool,
}

const COARSE_GRID: usize = 5;
const RESTARTS: usize = 3;
const LENGTH_TOL_MM: f64 = 1e-3;

/// Maximizes visibility over the two compensator lengths.
///
/// A 5×5 grid over the bounds seeds three simplex searches from its best
/// points; the best converged result wins. Deterministic.
pub fn optimize_compensators(
    layout: &OpticalLayout,
    js: &JointSpectrum,
    bounds: CompensatorBounds,
) -> Result<CompensatorSolution, PhaseError> {
    for (min, max) in [bounds.pre_mm, bounds.post_mm] {
        if !(min >= 0.0 && min < max && max.is_finite()) {
            return Err(PhaseError::Bounds { min, max });
        }
    }
    let objective = CompensationObjective::new(layout, js)?;
    let lerp =
        |(lo, hi): (f64, f64), k: usize| lo + (hi - lo) * k as f64 / (COARSE_GRID - 1) as f64;

    let mut seeds = Vec::with_capacity(COARSE_GRID * COARSE_GRID);
    for a in 0..COARSE_GRID {
        for b in 0..COARSE_GRID {
            let x = [lerp(bounds.pre_mm, a), lerp(bounds.post_mm, b)];
            seeds.push((objective.visibility(x[0], x[1]), x));
        }
    }
    let mut evaluations = seeds.len();
    let (v_min, v_max) = seeds
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
            (lo.min(s.0), hi.max(s.0))
        });
    seeds.sort_by(|a, b| b.0.total_cmp(&a.0));

    let step = [
        0.5 * (bounds.pre_mm.1 - bounds.pre_mm.0) / (COARSE_GRID - 1) as f64,
        0.5 * (bounds.post_mm.1 - bounds.post_mm.0) / (COARSE_GRID - 1) as f64,
    ];
    let options = NelderMeadOptions {
        x_tol: 0.1 * LENGTH_TOL_MM,
        f_tol: 1e-13,
        max_evaluations: 4_000,
    };
    let box_bounds = [bounds.pre_mm, bounds.post_mm];
    let mut best = (seeds[0].0, seeds[0].1);
    for (_, start) in seeds.iter().take(RESTARTS) {
        let m = nelder_mead(
            |x: &[f64; 2]| -objective.visibility(x[0], x[1]),
            *start,
            step,
            &box_bounds,
            options,
        );
        evaluations += m.evaluations;
        if -m.value > best.0 {
            best = (-m.value, m.x);
        }
    }
    Ok(CompensatorSolution {
        pre_mm: best.1[0],
        post_mm: best.1[1],
        visibility: best.0,
        evaluations,
        flat_objective: v_max - v_min < 1e-6,
    })
}
