//! Scenario configuration: built-in scenarios, TOML overrides and validation.
//!
//! A config file is TOML. It names a built-in scenario with `base = "..."`
//! (default `push5`) and overrides any subset of its fields with dotted keys or
//! tables, for example:
//!
//! ```toml
//! base = "push5"
//! duration = 10.0
//! object.mass = 4.0
//! gains.gamma_m = 20.0
//! mpc.r_diag = [1e-3, 1e-3, 1e-4]
//! ```
//!
//! Arrays replace the base value wholesale; tables merge key by key.

use serde::{Deserialize, Serialize};

use crate::adapt::{AdaptiveGains, ForceModel};
use crate::dynamics::{InjectionMode, RobotModel};
use crate::error::{Error, Result};
use crate::gait::{CommandProfile, CommandSegment, GaitSchedule};
use crate::mpc::MpcConfig;
use crate::plant::{MassEvent, ObjectTruth, PresenceEvent, Terrain, Zone};

pub const BUILTIN_NAMES: [&str; 6] = [
    "push3",
    "push5",
    "friction-transition",
    "load-unload",
    "varying-load",
    "slope20",
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rates {
    /// Plant integration step (s).
    pub sim_dt: f64,
    /// Control period (s); must be a whole number of plant steps.
    pub control_dt: f64,
}

impl Default for Rates {
    fn default() -> Self {
        Self {
            sim_dt: 0.001,
            control_dt: 0.03,
        }
    }
}

impl Rates {
    pub fn substeps(&self) -> usize {
        (self.control_dt / self.sim_dt).round() as usize
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptSettings {
    /// When false the manipulation force is held at zero (plain locomotion MPC).
    pub enabled: bool,
    pub force_model: ForceModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_clamp: Option<f64>,
}

impl Default for AdaptSettings {
    fn default() -> Self {
        Self {
            enabled: true,
            force_model: ForceModel::Constant,
            mass_clamp: Some(50.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactLimits {
    pub f_min: f64,
    pub f_max: f64,
}

impl Default for ContactLimits {
    fn default() -> Self {
        Self {
            f_min: 1.0,
            f_max: 120.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSettings {
    /// Body height above the ground (m).
    pub height: f64,
    /// Align the body with the ground plane estimated from foot placement.
    pub follow_slope: bool,
    /// Yaw targets follow the integrated yaw command instead of being
    /// re-anchored to the measured yaw every tick.
    pub hold_heading: bool,
}

impl Default for ReferenceSettings {
    fn default() -> Self {
        Self {
            height: 0.3,
            follow_slope: false,
            hold_heading: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// Simulated time (s).
    pub duration: f64,
    pub seed: u64,
    pub rates: Rates,
    pub model: RobotModel,
    pub terrain: Terrain,
    pub object: ObjectTruth,
    pub commands: CommandProfile,
    pub gait: GaitSchedule,
    pub gains: AdaptiveGains,
    pub adapt: AdaptSettings,
    pub mpc: MpcConfig,
    pub injection: InjectionMode,
    pub contact: ContactLimits,
    pub reference: ReferenceSettings,
    /// Consecutive QP failures tolerated before the run aborts; the previous
    /// forces are reapplied meanwhile.
    pub qp_retry_budget: usize,
}

impl ScenarioConfig {
    fn push(name: &str, mass: f64) -> Self {
        Self {
            name: name.to_string(),
            duration: 30.0,
            seed: 0,
            rates: Rates::default(),
            model: RobotModel::default(),
            terrain: Terrain::default(),
            object: ObjectTruth::with_mass(mass),
            commands: CommandProfile::constant(0.3, 0.0, 0.0),
            gait: GaitSchedule::trot(),
            gains: AdaptiveGains::default(),
            adapt: AdaptSettings::default(),
            mpc: MpcConfig::default(),
            injection: InjectionMode::default(),
            contact: ContactLimits::default(),
            reference: ReferenceSettings::default(),
            qp_retry_budget: 3,
        }
    }

    /// Looks up a built-in scenario by name.
    pub fn builtin(name: &str) -> Result<Self> {
        let cfg = match name {
            "push3" => Self::push(name, 3.0),
            "push5" => Self::push(name, 5.0),
            "friction-transition" => {
                let mut c = Self::push(name, 5.0);
                c.terrain.zones = vec![
                    Zone {
                        x_start: -10.0,
                        mu_robot: 0.3,
                        mu_object: 0.3,
                    },
                    Zone {
                        x_start: 4.5,
                        mu_robot: 0.8,
                        mu_object: 0.5,
                    },
                ];
                c
            }
            "load-unload" => {
                let mut c = Self::push(name, 5.0);
                c.object.presence_events = vec![
                    PresenceEvent {
                        t: 10.0,
                        present: false,
                        gap: 0.0,
                    },
                    PresenceEvent {
                        t: 18.0,
                        present: true,
                        gap: 0.05,
                    },
                ];
                c
            }
            "varying-load" => {
                let mut c = Self::push(name, 4.0);
                c.object.mass_events = vec![
                    MassEvent { t: 10.0, mass: 5.0 },
                    MassEvent { t: 15.0, mass: 6.0 },
                    MassEvent { t: 20.0, mass: 7.0 },
                ];
                c
            }
            "slope20" => {
                let mut c = Self::push(name, 5.0);
                c.duration = 40.0;
                c.terrain = Terrain {
                    zones: vec![Zone {
                        x_start: -10.0,
                        mu_robot: 1.0,
                        mu_object: 0.6,
                    }],
                    slope: 20f64.to_radians(),
                };
                c.reference.follow_slope = true;
                c
            }
            other => {
                return Err(Error::invalid(
                    "base",
                    format!(
                        "unknown scenario `{other}` (known: {})",
                        BUILTIN_NAMES.join(", ")
                    ),
                ))
            }
        };
        Ok(cfg)
    }

    /// Parses a TOML document and merges it onto its base scenario.
    pub fn from_toml(text: &str) -> Result<Self> {
        let overrides: toml::Table =
            toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_table(overrides)
    }

    pub fn from_table(mut overrides: toml::Table) -> Result<Self> {
        let base_name = match overrides.remove("base") {
            None => "push5".to_string(),
            Some(toml::Value::String(s)) => s,
            Some(_) => return Err(Error::invalid("base", "must be a string")),
        };
        let base = Self::builtin(&base_name)?;
        base.with_overrides(overrides)
    }

    /// Applies TOML overrides to a copy of this config.
    pub fn with_overrides(&self, overrides: toml::Table) -> Result<Self> {
        let mut table = toml::Table::try_from(self).map_err(|e| Error::Parse(e.to_string()))?;
        merge(&mut table, overrides);
        let cfg: Self = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets a single dotted key, e.g. `("gains.gamma_m", 20.0)`.
    pub fn with_value(&self, key: &str, value: toml::Value) -> Result<Self> {
        self.with_overrides(dotted(key, value))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::invalid(
                "duration",
                format!("must be > 0, got {}", self.duration),
            ));
        }
        let r = &self.rates;
        if !(r.sim_dt > 0.0 && r.sim_dt <= 0.005) {
            return Err(Error::invalid(
                "rates.sim_dt",
                format!("must be in (0, 0.005], got {}", r.sim_dt),
            ));
        }
        let ratio = r.control_dt / r.sim_dt;
        if !(r.control_dt > 0.0)
            || ratio < 0.5
            || (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0)
        {
            return Err(Error::invalid(
                "rates.control_dt",
                format!(
                    "must be a positive integer multiple of sim_dt ({} / {})",
                    r.control_dt, r.sim_dt
                ),
            ));
        }
        self.model.validate()?;
        self.terrain.validate("terrain")?;
        self.object.validate("object")?;
        self.commands.validate("commands")?;
        self.gait.validate("gait")?;
        self.gains.validate("gains")?;
        self.mpc.validate("mpc")?;
        let c = &self.contact;
        if !(c.f_min >= 0.0 && c.f_min < c.f_max) {
            return Err(Error::invalid(
                "contact.f_min",
                format!("need 0 <= f_min < f_max, got [{}, {}]", c.f_min, c.f_max),
            ));
        }
        if !(self.reference.height > 0.0) {
            return Err(Error::invalid("reference.height", "must be > 0"));
        }
        if let Some(limit) = self.adapt.mass_clamp {
            if !(limit > 0.0) {
                return Err(Error::invalid("adapt.mass_clamp", "must be > 0"));
            }
        }
        Ok(())
    }

    /// Number of control steps (trace records) in a run.
    pub fn control_steps(&self) -> usize {
        (self.duration / self.rates.control_dt + 1e-9).floor() as usize
    }

    /// Commanded forward speed at `t`.
    pub fn commanded_speed(&self, t: f64) -> f64 {
        self.commands.at(t).velocity[0]
    }
}

/// Builds a nested table from a dotted key.
pub fn dotted(key: &str, value: toml::Value) -> toml::Table {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().unwrap_or(key);
    let mut table = toml::Table::new();
    table.insert(last.to_string(), value);
    for part in parts.into_iter().rev() {
        let mut outer = toml::Table::new();
        outer.insert(part.to_string(), toml::Value::Table(table));
        table = outer;
    }
    table
}

fn merge(base: &mut toml::Table, overrides: toml::Table) {
    for (k, v) in overrides {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Convenience for tests and examples: a command that starts at `t = 0` and
/// changes speed at the given times.
pub fn speed_profile(points: &[(f64, f64)]) -> CommandProfile {
    CommandProfile {
        segments: points
            .iter()
            .map(|&(start, v)| CommandSegment {
                start,
                velocity: [v, 0.0],
                yaw_rate: 0.0,
            })
            .collect(),
    }
}
