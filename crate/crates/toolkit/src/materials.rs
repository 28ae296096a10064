//! The materials database: versioned Sellmeier records in JSON.

use std::collections::BTreeMap;
use std::path::Path;

use pairsource_core::{Axis, MaterialModel, SellmeierForm};
use serde::{Deserialize, Serialize};

use crate::error::{FieldError, ToolkitError};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisName {
    Ordinary,
    Extraordinary,
    Z,
}

impl From<AxisName> for Axis {
    fn from(a: AxisName) -> Self {
        match a {
            AxisName::Ordinary => Axis::Ordinary,
            AxisName::Extraordinary => Axis::Extraordinary,
            AxisName::Z => Axis::Z,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormName {
    Standard,
    Pole,
}

impl From<FormName> for SellmeierForm {
    fn from(f: FormName) -> Self {
        match f {
            FormName::Standard => SellmeierForm::Standard,
            FormName::Pole => SellmeierForm::Pole,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialRecord {
    pub name: String,
    pub version: u32,
    pub axis: AxisName,
    pub form: FormName,
    pub coefficients: Vec<f64>,
    #[serde(default)]
    pub thermo_optic: Vec<Vec<f64>>,
    pub valid_range_nm: [f64; 2],
    pub reference_temperature_c: f64,
    #[serde(default)]
    pub source: String,
}

impl MaterialRecord {
    pub fn to_model(&self) -> Result<MaterialModel, pairsource_core::DispersionError> {
        MaterialModel::new(
            self.name.clone(),
            self.axis.into(),
            self.form.into(),
            self.coefficients.clone(),
            self.thermo_optic.clone(),
            (self.valid_range_nm[0], self.valid_range_nm[1]),
            self.reference_temperature_c,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialsFile {
    pub format_version: u32,
    pub materials: Vec<MaterialRecord>,
}

/// Validated models keyed by name.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialLibrary {
    models: BTreeMap<String, MaterialModel>,
}

impl MaterialLibrary {
    pub fn from_file(file: &MaterialsFile) -> Result<Self, Vec<FieldError>> {
        let mut errors = Vec::new();
        if file.format_version != FORMAT_VERSION {
            errors.push(FieldError::new(
                "format_version",
                format!(
                    "unsupported version {} (expected {FORMAT_VERSION})",
                    file.format_version
                ),
            ));
        }
        let mut models = BTreeMap::new();
        for (k, record) in file.materials.iter().enumerate() {
            let path = format!("materials[{k}]");
            match record.to_model() {
                Ok(m) => {
                    if models.insert(record.name.clone(), m).is_some() {
                        errors.push(FieldError::new(
                            format!("{path}.name"),
                            format!("duplicate material `{}`", record.name),
                        ));
                    }
                }
                Err(e) => errors.push(FieldError::new(path, e.to_string())),
            }
        }
        if errors.is_empty() {
            Ok(Self { models })
        } else {
            Err(errors)
        }
    }

    pub fn load(path: &Path) -> Result<Self, ToolkitError> {
        let text = std::fs::read_to_string(path).map_err(|e| ToolkitError::io(path, e))?;
        let file: MaterialsFile =
            serde_json::from_str(&text).map_err(|e| ToolkitError::parse(path, &e))?;
        Self::from_file(&file).map_err(|errors| ToolkitError::Validation {
            path: path.to_path_buf(),
            errors,
        })
    }

    pub fn get(&self, name: &str) -> Option<&MaterialModel> {
        self.models.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.models.keys().map(String::as_str)
    }
}
