//! Serde mirror of the scenario file. Every table rejects unknown keys.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::quantity::Quantity;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub run: RunFile,
    pub source: SourceFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interface: Option<InterfaceFile>,
    pub amplifier: AmplifierFile,
    pub hut: ImpedanceFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensor: Option<SensorFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disturbance: Option<DisturbanceFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability: Option<StabilityFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compensation: Option<CompensationFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cosim: Option<CosimFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    pub dt: Quantity,
    pub duration: Quantity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<Seed>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceFile {
    pub f0: Quantity,
    pub harmonics: Vec<HarmonicFile>,
    pub impedance: ImpedanceFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicFile {
    pub order: u32,
    pub amplitude: Quantity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<Quantity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ImpedanceFile {
    Resistive { r: Quantity },
    SeriesRl { r: Quantity, l: Quantity },
    ParallelRc { r: Quantity, c: Quantity },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterfaceFile {
    pub algorithm: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_shift: Option<Quantity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplifierFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<Quantity>,
    pub delay: Quantity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saturation: Option<Quantity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorFile {
    pub delay: Quantity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DisturbanceFile {
    Constant {
        value: Quantity,
    },
    Sine {
        amplitude: Quantity,
        frequency: Quantity,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phase: Option<Quantity>,
    },
    WhiteNoise {
        amplitude: Quantity,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<Seed>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityFile {
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompensationFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_advance: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extrapolator: Option<ExtrapolatorFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtrapolatorFile {
    pub order: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub ratio: GridFile,
    pub delay: GridFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    pub from: Quantity,
    pub to: Quantity,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CosimFile {
    pub master: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<Quantity>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub lags: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poll_order: Option<Vec<String>>,
    #[serde(default)]
    pub unit: Vec<UnitFile>,
    #[serde(default)]
    pub link: Vec<LinkFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum UnitFile {
    Simulator {
        id: String,
    },
    Hardware {
        id: String,
    },
    Loop {
        id: String,
    },
    Netem {
        id: String,
        latency: Quantity,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        jitter: Option<Quantity>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        loss: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<Seed>,
    },
    Constant {
        id: String,
        value: f64,
    },
    Gain {
        id: String,
        gain: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        latency_steps: Option<u64>,
    },
    Sine {
        id: String,
        amplitude: f64,
        frequency: Quantity,
    },
}

impl UnitFile {
    pub fn id(&self) -> &str {
        match self {
            UnitFile::Simulator { id }
            | UnitFile::Hardware { id }
            | UnitFile::Loop { id }
            | UnitFile::Netem { id, .. }
            | UnitFile::Constant { id, .. }
            | UnitFile::Gain { id, .. }
            | UnitFile::Sine { id, .. } => id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkFile {
    pub from: String,
    pub to: String,
}

/// A 64-bit seed. TOML integers are signed, so seeds above `i64::MAX` are
/// written as `"0x..."` strings; both forms are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seed(pub u64);

impl Serialize for Seed {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(self.0) {
            Ok(v) => s.serialize_i64(v),
            Err(_) => s.serialize_str(&format!("{:#x}", self.0)),
        }
    }
}

impl<'de> Deserialize<'de> for Seed {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Seed;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a non-negative integer or a \"0x\" hex string")
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Seed, E> {
                u64::try_from(v)
                    .map(Seed)
                    .map_err(|_| E::custom(format!("seed must be >= 0, got {v}")))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Seed, E> {
                Ok(Seed(v))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Seed, E> {
                let parsed = match v.strip_prefix("0x").or_else(|| v.strip_prefix("0X")) {
                    Some(hex) => u64::from_str_radix(hex, 16),
                    None => v.parse(),
                };
                parsed.map(Seed).map_err(|_| E::custom(format!("invalid seed \"{v}\"")))
            }
        }
        d.deserialize_any(V)
    }
}
