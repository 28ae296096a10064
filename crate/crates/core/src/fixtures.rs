//! Material models and layouts for unit tests. The shipped copy of these
//! coefficients lives in `data/materials.json`.

use alloc::vec;
use alloc::vec::Vec;

use crate::dispersion::{
    ActsOn, ArmSign, Axis, ElementRole, MaterialModel, SellmeierForm, UniaxialElement,
};
use crate::spdc::CrystalSpec;

pub fn ktp_z() -> MaterialModel {
    MaterialModel::new(
        "KTP-z",
        Axis::Z,
        SellmeierForm::Standard,
        vec![2.12725, 1.18431, 0.0514852, 0.6603, 100.00507, 0.00968956],
        vec![
            vec![9.9587e-6, 9.9228e-6, -8.9603e-6, 4.1010e-6],
            vec![-1.1882e-8, 10.459e-8, -9.8136e-8, 3.1481e-8],
        ],
        (380.0, 3500.0),
        25.0,
    )
    .unwrap()
}

pub fn bbo_o() -> MaterialModel {
    MaterialModel::new(
        "BBO-o",
        Axis::Ordinary,
        SellmeierForm::Pole,
        vec![2.7405, 0.0184, 0.0179, 0.0155],
        Vec::new(),
        (220.0, 1060.0),
        25.0,
    )
    .unwrap()
}

pub fn bbo_e() -> MaterialModel {
    MaterialModel::new(
        "BBO-e",
        Axis::Extraordinary,
        SellmeierForm::Pole,
        vec![2.3730, 0.0128, 0.0156, 0.0044],
        Vec::new(),
        (220.0, 1060.0),
        25.0,
    )
    .unwrap()
}

pub fn yvo4_o() -> MaterialModel {
    MaterialModel::new(
        "YVO4-o",
        Axis::Ordinary,
        SellmeierForm::Pole,
        vec![3.77879, 0.07479, 0.045731, 0.009701],
        Vec::new(),
        (380.0, 1100.0),
        25.0,
    )
    .unwrap()
}

pub fn yvo4_e() -> MaterialModel {
    MaterialModel::new(
        "YVO4-e",
        Axis::Extraordinary,
        SellmeierForm::Pole,
        vec![4.60353, 0.108087, 0.052495, 0.014305],
        Vec::new(),
        (380.0, 1100.0),
        25.0,
    )
    .unwrap()
}

pub fn all_models() -> Vec<MaterialModel> {
    vec![ktp_z(), bbo_o(), bbo_e(), yvo4_o(), yvo4_e()]
}

#[allow(clippy::too_many_arguments)]
fn element(
    name: &str,
    o: MaterialModel,
    e: MaterialModel,
    length_mm: f64,
    cut_angle_deg: f64,
    arm_sign: ArmSign,
    acts_on: ActsOn,
    role: ElementRole,
) -> UniaxialElement {
    UniaxialElement {
        name: name.into(),
        ordinary: o,
        extraordinary: e,
        length_mm,
        cut_angle_deg,
        arm_sign,
        acts_on,
        role,
    }
}

pub fn displacer() -> UniaxialElement {
    element(
        "displacer",
        bbo_o(),
        bbo_e(),
        13.0,
        45.0,
        ArmSign::Plus,
        ActsOn::Pump,
        ElementRole::WalkOff,
    )
}

pub fn combiner() -> UniaxialElement {
    element(
        "combiner",
        bbo_o(),
        bbo_e(),
        13.76,
        45.0,
        ArmSign::Minus,
        ActsOn::SignalAndIdler,
        ElementRole::WalkOff,
    )
}

pub fn pre_compensator(length_mm: f64) -> UniaxialElement {
    element(
        "pre-compensator",
        yvo4_o(),
        yvo4_e(),
        length_mm,
        90.0,
        ArmSign::Minus,
        ActsOn::Pump,
        ElementRole::Compensator,
    )
}

pub fn post_compensator(length_mm: f64) -> UniaxialElement {
    element(
        "post-compensator",
        yvo4_o(),
        yvo4_e(),
        length_mm,
        90.0,
        ArmSign::Plus,
        ActsOn::SignalAndIdler,
        ElementRole::Compensator,
    )
}

pub fn reference_elements(pre_mm: f64, post_mm: f64) -> Vec<UniaxialElement> {
    vec![
        displacer(),
        pre_compensator(pre_mm),
        combiner(),
        post_compensator(post_mm),
    ]
}

pub fn ppktp(temperature_c: f64) -> CrystalSpec {
    CrystalSpec::new(10.0, 3.425, temperature_c, ktp_z()).unwrap()
}
