//! Refractive index, birefringence and walk-off for the crystals in the source.
//!
//! A [`MaterialModel`] is one Sellmeier fit for one crystal axis, optionally
//! with a thermo-optic correction. A [`UniaxialElement`] pairs the ordinary and
//! extraordinary models of a birefringent plate with its geometry and tells the
//! interferometer model which arm its phase belongs to.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

const NM_PER_UM: f64 = 1.0e3;
const NM_PER_MM: f64 = 1.0e6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DispersionError {
    #[error(
        "{wavelength_nm} nm is outside the valid range [{min_nm}, {max_nm}] nm of model `{model}`"
    )]
    OutOfRange {
        model: String,
        wavelength_nm: f64,
        min_nm: f64,
        max_nm: f64,
    },
    #[error("model `{model}` evaluates to a non-physical index {index} at {wavelength_nm} nm")]
    NonPhysicalIndex {
        model: String,
        wavelength_nm: f64,
        index: f64,
    },
    #[error("invalid material model `{model}`: {reason}")]
    InvalidModel { model: String, reason: &'static str },
    #[error("invalid element `{element}`: {reason}")]
    InvalidElement {
        element: String,
        reason: &'static str,
    },
}

/// Crystal axis a model describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Ordinary,
    Extraordinary,
    /// Principal z axis of a biaxial crystal (KTP), used for type-0 interactions.
    Z,
}

/// Functional form of a Sellmeier fit. Wavelength λ is in µm.
///
/// Both forms read the flat coefficient list `[A, B₁, C₁, …, Bₖ, Cₖ, D]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SellmeierForm {
    /// n² = A + Σ Bₖ·λ²/(λ² − Cₖ) − D·λ²
    Standard,
    /// n² = A + Σ Bₖ/(λ² − Cₖ) − D·λ²
    Pole,
}

/// One published dispersion fit for one crystal axis.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialModel {
    name: String,
    axis: Axis,
    form: SellmeierForm,
    coefficients: Vec<f64>,
    /// `thermo_optic[p-1][m]` multiplies (T − T_ref)^p / λ^m, λ in µm.
    thermo_optic: Vec<Vec<f64>>,
    valid_range_nm: (f64, f64),
    reference_temperature_c: f64,
}

impl MaterialModel {
    pub fn new(
        name: impl Into<String>,
        axis: Axis,
        form: SellmeierForm,
        coefficients: Vec<f64>,
        thermo_optic: Vec<Vec<f64>>,
        valid_range_nm: (f64, f64),
        reference_temperature_c: f64,
    ) -> Result<Self, DispersionError> {
        let name = name.into();
        let invalid = |reason| DispersionError::InvalidModel {
            model: name.clone(),
            reason,
        };
        if coefficients.len() < 2 || !coefficients.len().is_multiple_of(2) {
            return Err(invalid(
                "coefficient list must be [A, B1, C1, ..., Bk, Ck, D]",
            ));
        }
        if coefficients
            .iter()
            .chain(thermo_optic.iter().flatten())
            .any(|c| !c.is_finite())
        {
            return Err(invalid("coefficients must be finite"));
        }
        let (lo, hi) = valid_range_nm;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo < hi) {
            return Err(invalid("valid range must satisfy 0 < min < max"));
        }
        if !reference_temperature_c.is_finite() {
            return Err(invalid("reference temperature must be finite"));
        }
        Ok(Self {
            name,
            axis,
            form,
            coefficients,
            thermo_optic,
            valid_range_nm,
            reference_temperature_c,
        })
    }

    /// A dispersionless model, `n(λ) = index` everywhere in the range.
    pub fn constant(
        name: impl Into<String>,
        axis: Axis,
        index: f64,
        valid_range_nm: (f64, f64),
    ) -> Result<Self, DispersionError> {
        Self::new(
            name,
            axis,
            SellmeierForm::Pole,
            alloc::vec![index * index, 0.0],
            Vec::new(),
            valid_range_nm,
            25.0,
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn form(&self) -> SellmeierForm {
        self.form
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn thermo_optic(&self) -> &[Vec<f64>] {
        &self.thermo_optic
    }

    pub fn valid_range_nm(&self) -> (f64, f64) {
        self.valid_range_nm
    }

    pub fn reference_temperature_c(&self) -> f64 {
        self.reference_temperature_c
    }

    pub fn contains(&self, wavelength_nm: f64) -> bool {
        let (lo, hi) = self.valid_range_nm;
        wavelength_nm >= lo && wavelength_nm <= hi
    }

    /// n(λ, T) = n_sellmeier(λ) + Δn_thermo(λ, T − T_ref).
    pub fn refractive_index(
        &self,
        wavelength_nm: f64,
        temperature_c: f64,
    ) -> Result<f64, DispersionError> {
        if !self.contains(wavelength_nm) {
            let (min_nm, max_nm) = self.valid_range_nm;
            return Err(DispersionError::OutOfRange {
                model: self.name.clone(),
                wavelength_nm,
                min_nm,
                max_nm,
            });
        }
        let lambda = wavelength_nm / NM_PER_UM;
        let n = self.sellmeier(lambda) + self.thermo_shift(lambda, temperature_c);
        if !(n > 1.0 && n < 3.0) {
            return Err(DispersionError::NonPhysicalIndex {
                model: self.name.clone(),
                wavelength_nm,
                index: n,
            });
        }
        Ok(n)
    }

    fn sellmeier(&self, lambda_um: f64) -> f64 {
        let l2 = lambda_um * lambda_um;
        let c = &self.coefficients;
        let (a, d) = (c[0], c[c.len() - 1]);
        let resonances: f64 = c[1..c.len() - 1]
            .chunks_exact(2)
            .map(|bc| match self.form {
                SellmeierForm::Standard => bc[0] * l2 / (l2 - bc[1]),
                SellmeierForm::Pole => bc[0] / (l2 - bc[1]),
            })
            .sum();
        (a + resonances - d * l2).sqrt()
    }

    fn thermo_shift(&self, lambda_um: f64, temperature_c: f64) -> f64 {
        let dt = temperature_c - self.reference_temperature_c;
        if dt == 0.0 {
            return 0.0;
        }
        let mut shift = 0.0;
        let mut dt_pow = 1.0;
        for order in &self.thermo_optic {
            dt_pow *= dt;
            let coeff: f64 = order
                .iter()
                .enumerate()
                .map(|(m, a)| a / lambda_um.powi(m as i32))
                .sum();
            shift += coeff * dt_pow;
        }
        shift
    }
}

/// Index seen by the extraordinary wave propagating at `theta_deg` to the
/// optic axis: 1/n(θ)² = cos²θ/n_o² + sin²θ/n_e².
pub fn index_at_angle(n_o: f64, n_e: f64, theta_deg: f64) -> f64 {
    let (s, c) = theta_deg.to_radians().sin_cos();
    1.0 / (c * c / (n_o * n_o) + s * s / (n_e * n_e)).sqrt()
}

/// Magnitude of the Poynting-vector walk-off angle in radians.
pub fn walkoff_angle(n_o: f64, n_e: f64, theta_deg: f64) -> f64 {
    let n = index_at_angle(n_o, n_e, theta_deg);
    let theta = theta_deg.to_radians();
    let tan_rho = 0.5 * n * n * (1.0 / (n_e * n_e) - 1.0 / (n_o * n_o)) * (2.0 * theta).sin();
    tan_rho.abs().atan()
}

/// Interferometer arm a birefringent phase is credited to. The phase
/// convention is Δφ = φ(|VV⟩ path) − φ(|HH⟩ path).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArmSign {
    Plus,
    Minus,
}

impl ArmSign {
    pub fn value(self) -> f64 {
        match self {
            ArmSign::Plus => 1.0,
            ArmSign::Minus => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            ArmSign::Plus => ArmSign::Minus,
            ArmSign::Minus => ArmSign::Plus,
        }
    }
}

/// Which light an element's phase is evaluated for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActsOn {
    Pump,
    SignalAndIdler,
}

/// Walk-off crystals form the interferometer; compensators are the plates
/// whose lengths the optimizer is allowed to change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementRole {
    WalkOff,
    Compensator,
}

/// A birefringent plate in the beam path.
#[derive(Debug, Clone, PartialEq)]
pub struct UniaxialElement {
    pub name: String,
    pub ordinary: MaterialModel,
    pub extraordinary: MaterialModel,
    pub length_mm: f64,
    /// Angle between the optic axis and the propagation direction.
    pub cut_angle_deg: f64,
    pub arm_sign: ArmSign,
    pub acts_on: ActsOn,
    pub role: ElementRole,
}

impl UniaxialElement {
    /// Checks geometry. Zero length is accepted so that empty compensator
    /// slots can be represented.
    pub fn validate(&self) -> Result<(), DispersionError> {
        let invalid = |reason| DispersionError::InvalidElement {
            element: self.name.clone(),
            reason,
        };
        if !(self.length_mm.is_finite() && self.length_mm >= 0.0) {
            return Err(invalid("length must be finite and non-negative"));
        }
        if !(0.0..=90.0).contains(&self.cut_angle_deg) {
            return Err(invalid("cut angle must lie in [0, 90] degrees"));
        }
        Ok(())
    }

    pub fn with_length(&self, length_mm: f64) -> Self {
        Self {
            length_mm,
            ..self.clone()
        }
    }

    /// (n_o, n(θ)) at the given wavelength and temperature.
    pub fn indices(
        &self,
        wavelength_nm: f64,
        temperature_c: f64,
    ) -> Result<(f64, f64), DispersionError> {
        let n_o = self
            .ordinary
            .refractive_index(wavelength_nm, temperature_c)?;
        let n_e = self
            .extraordinary
            .refractive_index(wavelength_nm, temperature_c)?;
        Ok((n_o, index_at_angle(n_o, n_e, self.cut_angle_deg)))
    }

    /// |n(θ) − n_o| at the given wavelength.
    pub fn birefringence(
        &self,
        wavelength_nm: f64,
        temperature_c: f64,
    ) -> Result<f64, DispersionError> {
        let (n_o, n_theta) = self.indices(wavelength_nm, temperature_c)?;
        Ok((n_theta - n_o).abs())
    }

    /// Unwrapped retardance credited to the element's arm:
    /// φ = ±2π·L·(n_slow − n_fast)/λ.
    pub fn birefringent_phase(
        &self,
        wavelength_nm: f64,
        temperature_c: f64,
    ) -> Result<f64, DispersionError> {
        let dn = self.birefringence(wavelength_nm, temperature_c)?;
        Ok(self.arm_sign.value() * 2.0 * PI * self.length_mm * NM_PER_MM * dn / wavelength_nm)
    }

    pub fn walkoff_angle(
        &self,
        wavelength_nm: f64,
        temperature_c: f64,
    ) -> Result<f64, DispersionError> {
        let n_o = self
            .ordinary
            .refractive_index(wavelength_nm, temperature_c)?;
        let n_e = self
            .extraordinary
            .refractive_index(wavelength_nm, temperature_c)?;
        Ok(walkoff_angle(n_o, n_e, self.cut_angle_deg))
    }

    /// Lateral separation of the two polarizations at the exit face, in mm.
    pub fn lateral_displacement_mm(
        &self,
        wavelength_nm: f64,
        temperature_c: f64,
    ) -> Result<f64, DispersionError> {
        Ok(self.length_mm * self.walkoff_angle(wavelength_nm, temperature_c)?.tan())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use proptest::prelude::*;

    #[test]
    fn reference_temperature_adds_nothing() {
        let ktp = fixtures::ktp_z();
        let lambda = 0.81;
        let n = ktp
            .refractive_index(810.0, ktp.reference_temperature_c())
            .unwrap();
        assert_eq!(n, ktp.sellmeier(lambda));
    }

    #[test]
    fn ktp_matches_tabulated_sellmeier() {
        // direct evaluation of the published fit at 0.81 µm
        let l2: f64 = 0.81 * 0.81;
        let oracle = (2.12725 + 1.18431 * l2 / (l2 - 0.0514852) + 0.6603 * l2 / (l2 - 100.00507)
            - 0.00968956 * l2)
            .sqrt();
        let n = fixtures::ktp_z().refractive_index(810.0, 25.0).unwrap();
        assert!((n - oracle).abs() < 1e-12);
        assert!((n - 1.8444).abs() < 1e-3, "n_z(810) = {n}");
    }

    #[test]
    fn ktp_index_contrast_sets_poling_period_scale() {
        let ktp = fixtures::ktp_z();
        for t in [20.0, 30.0, 40.0] {
            let dn =
                ktp.refractive_index(405.0, t).unwrap() - ktp.refractive_index(810.0, t).unwrap();
            let expected = 405.0 / 3425.0;
            assert!(
                (dn - expected).abs() / expected < 0.02,
                "T = {t}: Δn = {dn}"
            );
        }
    }

    #[test]
    fn out_of_range_names_model_and_range() {
        let err = fixtures::bbo_o()
            .refractive_index(2000.0, 25.0)
            .unwrap_err();
        match &err {
            DispersionError::OutOfRange {
                model,
                min_nm,
                max_nm,
                ..
            } => {
                assert_eq!(model, "BBO-o");
                assert_eq!((*min_nm, *max_nm), fixtures::bbo_o().valid_range_nm());
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(alloc::format!("{err}").contains("BBO-o"));
    }

    #[test]
    fn malformed_coefficients_rejected() {
        let err = MaterialModel::new(
            "bad",
            Axis::Z,
            SellmeierForm::Pole,
            alloc::vec![1.0, 2.0, 3.0],
            Vec::new(),
            (400.0, 900.0),
            25.0,
        );
        assert!(matches!(err, Err(DispersionError::InvalidModel { .. })));
        let err = MaterialModel::constant("x", Axis::Z, 1.5, (900.0, 400.0));
        assert!(err.is_err());
    }

    #[test]
    fn uniaxial_signs() {
        for nm in [400.0, 500.0, 650.0, 810.0, 900.0] {
            assert!(
                fixtures::bbo_o().refractive_index(nm, 25.0).unwrap()
                    > fixtures::bbo_e().refractive_index(nm, 25.0).unwrap()
            );
            assert!(
                fixtures::yvo4_e().refractive_index(nm, 25.0).unwrap()
                    > fixtures::yvo4_o().refractive_index(nm, 25.0).unwrap()
            );
        }
    }

    #[test]
    fn normal_dispersion_380_to_900() {
        for model in fixtures::all_models() {
            let mut prev = f64::INFINITY;
            for i in 0..=520 {
                let nm = 380.0 + i as f64;
                let n = model.refractive_index(nm, 25.0).unwrap();
                assert!(n > 1.0 && n < 3.0);
                assert!(n < prev, "{} not decreasing at {nm} nm", model.name());
                prev = n;
            }
        }
    }

    #[test]
    fn angle_limits() {
        assert_eq!(index_at_angle(1.7, 1.5, 0.0), 1.7);
        assert!((index_at_angle(1.7, 1.5, 90.0) - 1.5).abs() < 1e-15);
        assert_eq!(walkoff_angle(1.7, 1.5, 0.0), 0.0);
    }

    #[test]
    fn bbo_45_degree_index() {
        let n_o = fixtures::bbo_o().refractive_index(405.0, 25.0).unwrap();
        let n_e = fixtures::bbo_e().refractive_index(405.0, 25.0).unwrap();
        let n = index_at_angle(n_o, n_e, 45.0);
        let oracle = (2.0 / (1.0 / (n_o * n_o) + 1.0 / (n_e * n_e))).sqrt();
        assert!((n - oracle).abs() < 1e-14);
        assert!((n - 1.626).abs() < 0.003, "n(45°) = {n}");
    }

    #[test]
    fn displacer_and_combiner_displace_one_millimetre() {
        let displacer = fixtures::displacer();
        let d = displacer.lateral_displacement_mm(405.0, 25.0).unwrap();
        assert!((d - 1.0).abs() < 0.05, "displacer {d} mm");
        let combiner = fixtures::combiner();
        let d = combiner.lateral_displacement_mm(810.0, 25.0).unwrap();
        assert!((d - 1.0).abs() < 0.05, "combiner {d} mm");
    }

    #[test]
    fn walkoff_peaks_near_45_degrees() {
        for (o, e) in [
            (fixtures::bbo_o(), fixtures::bbo_e()),
            (fixtures::yvo4_o(), fixtures::yvo4_e()),
        ] {
            for nm in [405.0, 810.0] {
                let n_o = o.refractive_index(nm, 25.0).unwrap();
                let n_e = e.refractive_index(nm, 25.0).unwrap();
                let best = (0..=9000)
                    .map(|i| i as f64 * 0.01)
                    .max_by(|a, b| {
                        walkoff_angle(n_o, n_e, *a)
                            .partial_cmp(&walkoff_angle(n_o, n_e, *b))
                            .unwrap()
                    })
                    .unwrap();
                assert!((best - 45.0).abs() <= 5.0, "{} peak at {best}°", o.name());
            }
        }
    }

    #[test]
    fn phase_is_linear_in_length_and_vanishes_at_zero() {
        let pre = fixtures::pre_compensator(0.78);
        let phi = pre.birefringent_phase(405.0, 25.0).unwrap();
        let doubled = pre
            .with_length(1.56)
            .birefringent_phase(405.0, 25.0)
            .unwrap();
        assert_eq!(doubled, 2.0 * phi);
        assert_eq!(
            pre.with_length(0.0)
                .birefringent_phase(405.0, 25.0)
                .unwrap(),
            0.0
        );
    }

    #[test]
    fn yvo4_pre_compensator_golden_phase() {
        // independent evaluation: 2π·L·(n_e − n_o)/λ with the fit written out
        let l2: f64 = 0.405 * 0.405;
        let n_o = (3.77879 + 0.07479 / (l2 - 0.045731) - 0.009701 * l2).sqrt();
        let n_e = (4.60353 + 0.108087 / (l2 - 0.052495) - 0.014305 * l2).sqrt();
        let oracle = -2.0 * PI * 780.0 * (n_e - n_o) / 0.405;
        let phi = fixtures::pre_compensator(0.78)
            .birefringent_phase(405.0, 25.0)
            .unwrap();
        assert!((phi - oracle).abs() < 1e-9 * oracle.abs());
        assert!((phi - -3149.697).abs() < 1e-3, "golden φ = {phi}");
    }

    #[test]
    fn invalid_geometry_rejected() {
        let mut el = fixtures::displacer();
        el.cut_angle_deg = 95.0;
        assert!(el.validate().is_err());
        el.cut_angle_deg = 45.0;
        el.length_mm = -1.0;
        assert!(el.validate().is_err());
    }

    proptest! {
        #[test]
        fn index_at_angle_is_bracketed(n_o in 1.1f64..2.9, n_e in 1.1f64..2.9, theta in 0.01f64..89.99) {
            prop_assume!((n_o - n_e).abs() > 1e-6);
            let n = index_at_angle(n_o, n_e, theta);
            prop_assert!(n > n_o.min(n_e) && n < n_o.max(n_e));
        }

        #[test]
        fn arm_sign_flips_phase(nm in 400.0f64..900.0, len in 0.0f64..20.0) {
            let el = fixtures::displacer().with_length(len);
            let mut flipped = el.clone();
            flipped.arm_sign = el.arm_sign.flipped();
            prop_assert_eq!(
                flipped.birefringent_phase(nm, 25.0).unwrap(),
                -el.birefringent_phase(nm, 25.0).unwrap()
            );
        }
    }
}
