//! Strict JSON scenario files: one scene plus named charges.
//!
//! ```json
//! {
//!   "version": 1,
//!   "rank": 1,
//!   "factors": [{ "label": "A", "weights": [[2], [0], [-1]], "shift": ["0"] }],
//!   "point": [["1", "1", "1"]],
//!   "charges": [{ "name": "classical", "coefficients": ["i"], "phase": "0" }]
//! }
//! ```

use serde::{Deserialize, Serialize};

use crate::algebra::{LinearisedFactor, Scene};
use crate::charge::{CentralCharge, Phase};
use crate::error::{Error, Result};
use crate::num::{format_rational, parse_rational, CValue};

pub const SCENARIO_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorEntry {
    #[serde(default)]
    pub label: String,
    pub weights: Vec<Vec<i64>>,
    /// Rational strings; omitted means zero.
    #[serde(default)]
    pub shift: Option<Vec<String>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChargeEntry {
    pub name: String,
    pub coefficients: Vec<CValue>,
    pub phase: Phase,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub version: u32,
    pub rank: usize,
    pub factors: Vec<FactorEntry>,
    pub point: Vec<Vec<CValue>>,
    #[serde(default)]
    pub charges: Vec<ChargeEntry>,
}

impl ScenarioFile {
    /// Parses and validates; serde errors carry line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if file.version != SCENARIO_VERSION {
            return Err(Error::Parse(format!("unsupported scenario version {}", file.version)));
        }
        file.scene()?;
        for c in &file.charges {
            file.charge_entry(c)?;
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialises")
    }

    pub fn scene(&self) -> Result<Scene> {
        let mut factors = Vec::with_capacity(self.factors.len());
        for f in &self.factors {
            let shift = match &f.shift {
                Some(s) => s.iter().map(|t| parse_rational(t)).collect::<Result<Vec<_>>>()?,
                None => vec![num_traits::Zero::zero(); self.rank],
            };
            factors.push(LinearisedFactor::new(f.label.clone(), f.weights.clone(), shift));
        }
        let point = self.point.iter().map(|row| row.iter().map(CValue::to_complex).collect()).collect();
        Scene::new(self.rank, factors, point)
    }

    fn charge_entry(&self, c: &ChargeEntry) -> Result<CentralCharge> {
        if c.coefficients.len() != self.factors.len() {
            return Err(Error::DimensionMismatch { expected: self.factors.len(), found: c.coefficients.len() });
        }
        CentralCharge::new(c.coefficients.clone(), c.phase.clone())
    }

    pub fn charge(&self, name: &str) -> Result<CentralCharge> {
        let entry = self
            .charges
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::Precondition(format!("no charge named {name:?}")))?;
        self.charge_entry(entry)
    }

    pub fn charge_names(&self) -> Vec<&str> {
        self.charges.iter().map(|c| c.name.as_str()).collect()
    }

    /// Builds a file from a scene; coordinates are written as decimal strings
    /// that parse back to the same doubles.
    pub fn from_scene(scene: &Scene, charges: &[(String, CentralCharge)]) -> Self {
        ScenarioFile {
            version: SCENARIO_VERSION,
            rank: scene.rank(),
            factors: scene
                .factors()
                .iter()
                .map(|f| FactorEntry {
                    label: f.label.clone(),
                    weights: f.weights.clone(),
                    shift: Some(f.shift.iter().map(format_rational).collect()),
                })
                .collect(),
            point: scene.point().iter().map(|row| row.iter().map(|z| CValue::from_complex(*z)).collect()).collect(),
            charges: charges
                .iter()
                .map(|(name, c)| ChargeEntry {
                    name: name.clone(),
                    coefficients: c.coefficients().to_vec(),
                    phase: c.phase().clone(),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rat;
    use crate::stability::{classify, StabilityClass};

    const SAMPLE: &str = r#"{
        "version": 1,
        "rank": 1,
        "factors": [{ "label": "A", "weights": [[2], [0], [-1]], "shift": ["1/3"] }],
        "point": [["1", "1+0i", "1"]],
        "charges": [{ "name": "classical", "coefficients": ["i"], "phase": "0" }]
    }"#;

    #[test]
    fn parses_and_classifies() {
        let f = ScenarioFile::from_json(SAMPLE).unwrap();
        let s = f.scene().unwrap();
        assert_eq!(s.factors()[0].shift, vec![rat(1, 3)]);
        let v = classify(&s, &f.charge("classical").unwrap()).unwrap();
        assert_eq!(v.class, StabilityClass::Stable);
    }

    #[test]
    fn round_trip_keeps_exact_fields() {
        let f = ScenarioFile::from_json(SAMPLE).unwrap();
        let back = ScenarioFile::from_json(&f.to_json()).unwrap();
        assert_eq!(back.factors, f.factors);
        assert_eq!(back.scene().unwrap().factors(), f.scene().unwrap().factors());
        assert_eq!(back.charges[0].coefficients, f.charges[0].coefficients);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = SAMPLE.replacen("\"rank\": 1,", "\"rank\": 1, \"extra\": 0,", 1);
        assert!(matches!(ScenarioFile::from_json(&bad), Err(Error::Parse(_))));
    }

    #[test]
    fn errors_carry_position() {
        let err = ScenarioFile::from_json("{\n  \"version\": 1,\n  \"rank\": }").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn wrong_charge_length() {
        let bad = SAMPLE.replace("[\"i\"]", "[\"i\", \"1\"]");
        assert!(matches!(ScenarioFile::from_json(&bad), Err(Error::DimensionMismatch { .. })));
    }
}
