//! Two-photon polarization correlations in the HH/VV subspace.
//!
//! Angle convention: H = 0°, D = 45°, V = 90°, A = 135°.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolarizationError {
    #[error("invalid state: {0}")]
    InvalidState(&'static str),
    #[error("invalid measurement setup: {0}")]
    InvalidSetup(&'static str),
    #[error("curve needs at least 8 points spanning 180 degrees")]
    InsufficientCurve,
    #[error("fit failed: {0}")]
    FitFailed(&'static str),
    #[error("fit residual is {reduced_chi2:.2}× the Poisson expectation")]
    PoorFit { reduced_chi2: f64 },
}

/// Spectrally averaged state ρ of (|HH⟩ + e^{iφ}|VV⟩)/√2 with coherence
/// `coherence` between HH and VV and an H/V crosstalk floor set by
/// `hv_visibility` (fraction (1 − hv)/2 of pairs land in HV/VH).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationState {
    pub coherence: f64,
    pub phase_rad: f64,
    pub hv_visibility: f64,
}

impl PolarizationState {
    pub fn new(
        coherence: f64,
        phase_rad: f64,
        hv_visibility: f64,
    ) -> Result<Self, PolarizationError> {
        if !(0.0..=1.0).contains(&coherence) {
            return Err(PolarizationError::InvalidState(
                "coherence must lie in [0, 1]",
            ));
        }
        if !(0.0..=1.0).contains(&hv_visibility) {
            return Err(PolarizationError::InvalidState(
                "hv_visibility must lie in [0, 1]",
            ));
        }
        if !phase_rad.is_finite() {
            return Err(PolarizationError::InvalidState("phase must be finite"));
        }
        Ok(Self {
            coherence,
            phase_rad,
            hv_visibility,
        })
    }

    /// Ideal |Φ⁺⟩.
    pub fn maximally_entangled() -> Self {
        Self {
            coherence: 1.0,
            phase_rad: 0.0,
            hv_visibility: 1.0,
        }
    }

    /// Expected D/A-basis fringe visibility, V·|cos φ|.
    pub fn diagonal_visibility(&self) -> f64 {
        self.coherence * self.phase_rad.cos().abs()
    }
}

/// Joint probability that both photons pass polarizers at θs and θi:
/// ½[a(c_s²c_i² + s_s²s_i²) + b(c_s²s_i² + s_s²c_i²) + (V/2)·sin2θs·sin2θi·cos φ]
/// with a = (1 + hv)/2, b = (1 − hv)/2. For hv = 1 this is the pure
/// HH/VV projection.
pub fn coincidence_probability(
    state: &PolarizationState,
    theta_s_deg: f64,
    theta_i_deg: f64,
) -> f64 {
    let (ss, cs) = theta_s_deg.to_radians().sin_cos();
    let (si, ci) = theta_i_deg.to_radians().sin_cos();
    let a = 0.5 * (1.0 + state.hv_visibility);
    let b = 0.5 * (1.0 - state.hv_visibility);
    let parallel = cs * cs * ci * ci + ss * ss * si * si;
    let crossed = cs * cs * si * si + ss * ss * ci * ci;
    let coherent = 0.5
        * state.coherence
        * (2.0 * theta_s_deg.to_radians()).sin()
        * (2.0 * theta_i_deg.to_radians()).sin()
        * state.phase_rad.cos();
    0.5 * (a * parallel + b * crossed + coherent)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementSetup {
    /// Transmission of each polarizer for its passing polarization.
    pub polarizer_transmission: f64,
    pub true_pair_rate: f64,
    pub accidental_rate: f64,
    pub integration_time_s: f64,
}

impl MeasurementSetup {
    pub fn validate(&self) -> Result<(), PolarizationError> {
        if !(self.polarizer_transmission > 0.0 && self.polarizer_transmission <= 1.0) {
            return Err(PolarizationError::InvalidSetup(
                "transmission must lie in (0, 1]",
            ));
        }
        if !(self.true_pair_rate >= 0.0 && self.accidental_rate >= 0.0) {
            return Err(PolarizationError::InvalidSetup(
                "rates must be non-negative",
            ));
        }
        if !(self.integration_time_s > 0.0 && self.integration_time_s.is_finite()) {
            return Err(PolarizationError::InvalidSetup(
                "integration time must be positive",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub theta_s_deg: f64,
    pub counts: f64,
    pub sigma: f64,
}

/// Coincidence counts versus the signal polarizer angle with the idler
/// polarizer fixed. Accidentals are unpolarized (¼ of them pass both
/// polarizers). With `seed`, counts are Poisson-sampled reproducibly.
pub fn correlation_curve(
    state: &PolarizationState,
    setup: &MeasurementSetup,
    theta_i_deg: f64,
    theta_s_scan: &[f64],
    seed: Option<u64>,
) -> Result<Vec<CurvePoint>, PolarizationError> {
    setup.validate()?;
    let t2 = setup.polarizer_transmission * setup.polarizer_transmission;
    let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
    theta_s_scan
        .iter()
        .map(|&theta_s| {
            let p = coincidence_probability(state, theta_s, theta_i_deg);
            let mean = (setup.true_pair_rate * t2 * p + 0.25 * setup.accidental_rate * t2)
                * setup.integration_time_s;
            let counts = match rng.as_mut() {
                Some(rng) if mean > 0.0 => {
                    let d = Poisson::new(mean).map_err(|_| {
                        PolarizationError::InvalidSetup("count rate too large to sample")
                    })?;
                    d.sample(rng)
                }
                _ => mean,
            };
            Ok(CurvePoint {
                theta_s_deg: theta_s,
                counts,
                sigma: counts.max(0.0).sqrt(),
            })
        })
        .collect()
}

/// Fits A + C·cos2θ + S·sin2θ by Poisson-weighted least squares and returns
/// (V, σ_V) with V = √(C² + S²)/A.
pub fn visibility_from_curve(curve: &[CurvePoint]) -> Result<(f64, f64), PolarizationError> {
    if curve.len() < 8 {
        return Err(PolarizationError::InsufficientCurve);
    }
    let (lo, hi) = curve
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.theta_s_deg), hi.max(p.theta_s_deg))
        });
    if hi - lo < 180.0 - 1e-9 {
        return Err(PolarizationError::InsufficientCurve);
    }

    // normal equations, weights 1/max(counts, 1)
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for p in curve {
        let th = 2.0 * p.theta_s_deg.to_radians();
        let row = [1.0, th.cos(), th.sin()];
        let w = 1.0 / p.counts.max(1.0);
        for r in 0..3 {
            atb[r] += w * row[r] * p.counts;
            for c in 0..3 {
                ata[r][c] += w * row[r] * row[c];
            }
        }
    }
    let cov = invert3(&ata).ok_or(PolarizationError::FitFailed("singular design matrix"))?;
    let mut coef = [0.0; 3];
    for (k, row) in coef.iter_mut().zip(&cov) {
        *k = row.iter().zip(&atb).map(|(x, y)| x * y).sum();
    }
    let [a, c, s] = coef;
    if !(a > 0.0) {
        return Err(PolarizationError::FitFailed("non-positive mean count"));
    }

    let chi2: f64 = curve
        .iter()
        .map(|p| {
            let th = 2.0 * p.theta_s_deg.to_radians();
            let model = a + c * th.cos() + s * th.sin();
            (p.counts - model).powi(2) / p.counts.max(1.0)
        })
        .sum();
    let dof = (curve.len() - 3) as f64;
    let reduced_chi2 = chi2 / dof;
    if reduced_chi2 > 5.0 {
        return Err(PolarizationError::PoorFit { reduced_chi2 });
    }

    let b = (c * c + s * s).sqrt();
    let v = b / a;
    let grad = if b > 0.0 {
        [-b / (a * a), c / (a * b), s / (a * b)]
    } else {
        [0.0, 0.0, 0.0]
    };
    let mut var = 0.0;
    for (g, row) in grad.iter().zip(&cov) {
        var += g * row.iter().zip(&grad).map(|(x, y)| x * y).sum::<f64>();
    }
    Ok((v, var.max(0.0).sqrt()))
}

fn invert3(m: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if det.abs() < 1e-300 || !det.is_finite() {
        return None;
    }
    let inv = 1.0 / det;
    let mut out = [[0.0; 3]; 3];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            let (r1, r2) = ((c + 1) % 3, (c + 2) % 3);
            let (c1, c2) = ((r + 1) % 3, (r + 2) % 3);
            *cell = (m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1]) * inv;
        }
    }
    Some(out)
}

/// Quantum bit error rate of a visibility-limited source.
pub fn qber_from_visibility(visibility: f64) -> f64 {
    0.5 * (1.0 - visibility)
}
