//! JSON run configuration.
//!
//! Lengths and densities are written in the units declared in the `units`
//! block, with an optional power-of-ten scale per class density, so a
//! parameter table can be copied as printed. Loading normalizes everything
//! to meters and m⁻².

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytics::{InteractionMode, InteractionModel, SPEED_OF_LIGHT};
use crate::error::Error;
use crate::pointprocess::{ClassKind, ScattererClass, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum LengthUnit {
    #[serde(rename = "m")]
    Meter,
    #[default]
    #[serde(rename = "km")]
    Kilometer,
}

impl LengthUnit {
    fn to_meters(self) -> f64 {
        match self {
            LengthUnit::Meter => 1.0,
            LengthUnit::Kilometer => 1000.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum DensityUnit {
    #[default]
    #[serde(rename = "m^-2")]
    PerSquareMeter,
    #[serde(rename = "km^-2")]
    PerSquareKilometer,
}

impl DensityUnit {
    fn to_per_square_meter(self) -> f64 {
        match self {
            DensityUnit::PerSquareMeter => 1.0,
            DensityUnit::PerSquareKilometer => 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Units {
    #[serde(default)]
    pub length: LengthUnit,
    #[serde(default)]
    pub density: DensityUnit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawClass {
    pub v1: f64,
    pub v2: f64,
    /// Density mantissa; the value used is `density * 10^density_scale_exp`.
    pub density: f64,
    #[serde(default)]
    pub density_scale_exp: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawMode {
    pub mode: InteractionMode,
    pub coeff_mean: f64,
    pub coeff_var: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawInteraction {
    #[serde(default = "default_power")]
    pub transmit_power_w: f64,
    #[serde(default = "default_frequency")]
    pub frequency_hz: f64,
    #[serde(default = "default_modes")]
    pub modes: Vec<RawMode>,
}

fn default_power() -> f64 {
    10.0
}

fn default_frequency() -> f64 {
    2e9
}

fn default_modes() -> Vec<RawMode> {
    vec![
        RawMode {
            mode: InteractionMode::Reflection,
            coeff_mean: -1.17,
            coeff_var: 0.4,
        },
        RawMode {
            mode: InteractionMode::Scattering,
            coeff_mean: 4.0,
            coeff_var: 2.0,
        },
    ]
}

impl Default for RawInteraction {
    fn default() -> Self {
        Self {
            transmit_power_w: default_power(),
            frequency_hz: default_frequency(),
            modes: default_modes(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RawExperiment {
    #[serde(default)]
    pub seed: Option<u64>,
    /// Realizations for PMF, ToA, angle and validation runs.
    #[serde(default)]
    pub n_realizations: Option<u64>,
    /// Realizations per d' point of the power sweep.
    #[serde(default)]
    pub power_realizations: Option<u64>,
    /// Monte Carlo samples per class for the power moment terms.
    #[serde(default)]
    pub n_mc: Option<usize>,
    #[serde(default)]
    pub output: Option<String>,
}

/// Sweep grids, in the config length unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RawSweep {
    #[serde(default)]
    pub d_prime: Option<Vec<f64>>,
    #[serde(default)]
    pub gamma: Option<Vec<f64>>,
    #[serde(default)]
    pub power_d_prime: Option<Vec<f64>>,
}

/// The config file as written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default)]
    pub units: Units,
    pub d_prime: f64,
    pub gamma: f64,
    pub short: RawClass,
    pub tall: RawClass,
    #[serde(default)]
    pub interaction: RawInteraction,
    #[serde(default)]
    pub experiment: RawExperiment,
    #[serde(default)]
    pub sweep: RawSweep,
}

impl RawConfig {
    /// Generalized typical urban parameters exactly as tabulated (km and
    /// scaled densities).
    pub fn gtu() -> Self {
        Self {
            units: Units::default(),
            d_prime: 0.2,
            gamma: 0.22,
            short: RawClass {
                v1: 0.5,
                v2: 0.3,
                density: 7.07,
                density_scale_exp: -5,
            },
            tall: RawClass {
                v1: 4.1,
                v2: 4.0,
                density: 4.2,
                density_scale_exp: -7,
            },
            interaction: RawInteraction::default(),
            experiment: RawExperiment::default(),
            sweep: RawSweep::default(),
        }
    }
}

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_REALIZATIONS: u64 = 100_000;
pub const DEFAULT_POWER_REALIZATIONS: u64 = 10_000;
pub const DEFAULT_N_MC: usize = 100_000;

/// Configuration problem; the message starts with the offending field.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("config error: {0}")]
pub struct ConfigError(pub String);

/// Normalized configuration in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub interactions: Vec<InteractionModel>,
    pub seed: u64,
    pub n_realizations: u64,
    pub power_realizations: u64,
    pub n_mc: usize,
    /// Meters.
    pub sweep_d_prime: Vec<f64>,
    pub sweep_gamma: Vec<f64>,
    /// Meters.
    pub power_d_prime: Vec<f64>,
    pub output: Option<String>,
    /// SHA-256 of the canonical serialization of the raw config.
    pub config_hash: String,
}

fn field_error(prefix: &str, e: Error) -> ConfigError {
    match e {
        Error::InvalidArgument { name, reason } => ConfigError(format!("{prefix}{name}: {reason}")),
        other => ConfigError(format!("{prefix}{other}")),
    }
}

fn finite(name: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError(format!("{name}: must be finite, got {v}")))
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = serde_json::from_str(text)
            .map_err(|e| ConfigError(format!("invalid JSON config: {e}")))?;
        Self::from_raw(raw)
    }

    pub fn from_raw(raw: RawConfig) -> Result<Self, ConfigError> {
        let len = raw.units.length.to_meters();
        let dens = raw.units.density.to_per_square_meter();

        let class = |kind: ClassKind, c: &RawClass| -> Result<ScattererClass, ConfigError> {
            let prefix = format!("{}.", kind.as_str());
            let density = finite(&format!("{prefix}density"), c.density)?
                * 10f64.powi(c.density_scale_exp)
                * dens;
            ScattererClass::new(kind, c.v1 * len, c.v2 * len, density)
                .map_err(|e| field_error(&prefix, e))
        };
        let short = class(ClassKind::Short, &raw.short)?;
        let tall = class(ClassKind::Tall, &raw.tall)?;
        let seed = raw.experiment.seed.unwrap_or(DEFAULT_SEED);
        let scenario = Scenario::new(
            finite("d_prime", raw.d_prime)? * len,
            short,
            tall,
            raw.gamma,
            seed,
        )
        .map_err(|e| field_error("", e))?;

        let ia = &raw.interaction;
        finite("interaction.frequency_hz", ia.frequency_hz)?;
        if ia.frequency_hz <= 0.0 {
            return Err(ConfigError("interaction.frequency_hz: must be > 0".into()));
        }
        if ia.modes.is_empty() {
            return Err(ConfigError(
                "interaction.modes: at least one mode required".into(),
            ));
        }
        let interactions = ia
            .modes
            .iter()
            .map(|m| {
                InteractionModel::new(
                    m.mode,
                    ia.transmit_power_w,
                    SPEED_OF_LIGHT / ia.frequency_hz,
                    m.coeff_mean,
                    m.coeff_var,
                )
                .map_err(|e| field_error("interaction.", e))
            })
            .collect::<Result<Vec<_>, _>>()?;

        let lengths =
            |name: &str, v: &Option<Vec<f64>>, default: &[f64]| -> Result<Vec<f64>, ConfigError> {
                match v {
                    None => Ok(default.to_vec()),
                    Some(list) if list.is_empty() => {
                        Err(ConfigError(format!("{name}: must not be empty")))
                    }
                    Some(list) => list
                        .iter()
                        .map(|&d| {
                            if d.is_finite() && d >= 0.0 {
                                Ok(d * len)
                            } else {
                                Err(ConfigError(format!("{name}: invalid distance {d}")))
                            }
                        })
                        .collect(),
                }
            };
        let sweep_d_prime = lengths(
            "sweep.d_prime",
            &raw.sweep.d_prime,
            &[
                100.0, 200.0, 300.0, 400.0, 500.0, 600.0, 700.0, 800.0, 900.0, 1000.0,
            ],
        )?;
        let power_d_prime = lengths(
            "sweep.power_d_prime",
            &raw.sweep.power_d_prime,
            &[100.0, 200.0, 300.0, 400.0, 500.0],
        )?;
        let sweep_gamma = match &raw.sweep.gamma {
            None => vec![0.0, 0.22, 0.5, 1.0],
            Some(g) if g.is_empty() => {
                return Err(ConfigError("sweep.gamma: must not be empty".into()))
            }
            Some(g) => {
                if let Some(bad) = g.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                    return Err(ConfigError(format!(
                        "sweep.gamma: must lie in [0, 1], got {bad}"
                    )));
                }
                g.clone()
            }
        };

        let n_realizations = raw
            .experiment
            .n_realizations
            .unwrap_or(DEFAULT_REALIZATIONS);
        let power_realizations = raw
            .experiment
            .power_realizations
            .unwrap_or(DEFAULT_POWER_REALIZATIONS);
        if n_realizations == 0 || power_realizations == 0 {
            return Err(ConfigError(
                "experiment.n_realizations: must be >= 1".into(),
            ));
        }
        let n_mc = raw.experiment.n_mc.unwrap_or(DEFAULT_N_MC);
        if n_mc < crate::analytics::power::MIN_MOMENT_SAMPLES {
            return Err(ConfigError(format!(
                "experiment.n_mc: must be >= {}",
                crate::analytics::power::MIN_MOMENT_SAMPLES
            )));
        }

        let canonical = serde_json::to_string(&raw).expect("config serializes");
        let config_hash = Sha256::digest(canonical.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();

        Ok(Self {
            scenario,
            interactions,
            seed,
            n_realizations,
            power_realizations,
            n_mc,
            sweep_d_prime,
            sweep_gamma,
            power_d_prime,
            output: raw.experiment.output.clone(),
            config_hash,
        })
    }

    pub fn gtu() -> Self {
        Self::from_raw(RawConfig::gtu()).expect("preset is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GTU_JSON: &str = r#"{
        "units": {"length": "km", "density": "m^-2"},
        "d_prime": 0.2,
        "gamma": 0.22,
        "short": {"v1": 0.5, "v2": 0.3, "density": 7.07, "density_scale_exp": -5},
        "tall": {"v1": 4.1, "v2": 4.0, "density": 4.2, "density_scale_exp": -7}
    }"#;

    #[test]
    fn table_transcription_normalizes_to_si() {
        let cfg = RunConfig::from_json(GTU_JSON).unwrap();
        let s = &cfg.scenario;
        assert!((s.d_prime() - 200.0).abs() < 1e-9);
        let short = s.class(ClassKind::Short);
        assert!((short.v1() - 500.0).abs() < 1e-9 && (short.v2() - 300.0).abs() < 1e-9);
        assert!((short.density() - 7.07e-5).abs() < 1e-18);
        assert!((s.class(ClassKind::Tall).density() - 4.2e-7).abs() < 1e-20);
        assert_eq!(cfg.interactions.len(), 2);
        assert_eq!(cfg, RunConfig::gtu());
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = GTU_JSON.replace("\"gamma\"", "\"gama\": 1, \"gamma\"");
        let err = RunConfig::from_json(&text).unwrap_err();
        assert!(err.0.contains("gama"), "{err}");
    }

    #[test]
    fn bad_gamma_named() {
        let text = GTU_JSON.replace("0.22", "1.5");
        let err = RunConfig::from_json(&text).unwrap_err();
        assert!(err.0.contains("gamma"), "{err}");
    }

    #[test]
    fn bad_class_field_named() {
        let text = GTU_JSON.replace("\"v1\": 0.5", "\"v1\": -0.5");
        let err = RunConfig::from_json(&text).unwrap_err();
        assert!(err.0.starts_with("short.v1"), "{err}");
    }

    #[test]
    fn meter_units() {
        let text = r#"{"units": {"length": "m"}, "d_prime": 200, "gamma": 0,
            "short": {"v1": 500, "v2": 300, "density": 70.7, "density_scale_exp": -6},
            "tall": {"v1": 4100, "v2": 4000, "density": 0.42, "density_scale_exp": -6}}"#;
        let cfg = RunConfig::from_json(text).unwrap();
        assert!((cfg.scenario.d_prime() - 200.0).abs() < 1e-12);
        assert!((cfg.scenario.class(ClassKind::Short).density() - 7.07e-5).abs() < 1e-15);
    }
}
