//! The single study file: corridor, plant, controller, driver and the
//! scenario matrix. Semantic errors are reported with the line of the
//! offending key.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::{DriverParams, Driving, Heating, LongStop, Scenario, Setup};
use crate::hvac::{ControllerParams, HvacError};
use crate::plant::{PlantError, PowertrainParams, ThermalParams, VehicleParams};
use crate::traffic::{Corridor, Intersection, PlannerLimits, TrafficError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("{}:{}: {key}: {message}", path.display(), line.map_or("?".to_string(), |l| l.to_string()))]
    Invalid {
        path: PathBuf,
        line: Option<usize>,
        key: String,
        message: String,
    },
    #[error("unknown scenario {name:?}; available: {}", available.join(", "))]
    UnknownScenario { name: String, available: Vec<String> },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorridorSection {
    file: Option<PathBuf>,
    length_m: Option<f64>,
    speed_limit_mps: Option<f64>,
    intersections: Option<Vec<Intersection>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationSection {
    /// Scenario names; empty means every configured scenario.
    pub scenarios: Vec<String>,
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Scenario whose driving mode, initial state and first seed are swept.
    pub base: Option<String>,
    #[serde(rename = "temps_C")]
    pub temps_c: Vec<f64>,
    pub repeats: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            base: None,
            temps_c: vec![-11.0, -8.0, -3.0, -1.0, 3.0, 6.0],
            repeats: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    corridor: Option<CorridorSection>,
    #[serde(default)]
    planner: PlannerLimits,
    #[serde(default)]
    vehicle: VehicleParams,
    #[serde(default)]
    thermal: ThermalParams,
    #[serde(default)]
    powertrain: PowertrainParams,
    #[serde(default)]
    controller: ControllerParams,
    #[serde(default)]
    driver: DriverParams,
    #[serde(default)]
    long_stop: LongStop,
    #[serde(default)]
    scenarios: Vec<Scenario>,
    #[serde(default)]
    calibration: CalibrationSection,
    #[serde(default)]
    sweep: SweepSection,
    #[serde(default)]
    output: OutputSection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub setup: Setup,
    pub scenarios: Vec<Scenario>,
    pub calibration: CalibrationSection,
    pub sweep: SweepSection,
    /// Resolved against the config file's directory.
    pub output: OutputSection,
    pub path: PathBuf,
}

/// A location inside a TOML document.
#[derive(Debug, Clone, PartialEq)]
enum Seg {
    Key(String),
    Index(usize),
}

fn key(s: &str) -> Seg {
    Seg::Key(s.to_string())
}

fn path_string(path: &[Seg]) -> String {
    let mut out = String::new();
    for seg in path {
        match seg {
            Seg::Key(k) if out.is_empty() => out.push_str(k),
            Seg::Key(k) => {
                out.push('.');
                out.push_str(k);
            }
            Seg::Index(i) => out.push_str(&format!("[{i}]")),
        }
    }
    out
}

/// 1-based line of the deepest part of `path` present in `src`.
fn locate(src: &str, path: &[Seg]) -> Option<usize> {
    use toml_edit::{Item, TableLike, Value};
    let doc = toml_edit::ImDocument::parse(src).ok()?;
    let mut table: &dyn TableLike = doc.as_table();
    let mut span = None;
    let mut i = 0;
    while i < path.len() {
        let Seg::Key(k) = &path[i] else { break };
        let Some((kk, item)) = table.get_key_value(k) else { break };
        span = kk.span().or_else(|| item.span()).or(span);
        let index = match path.get(i + 1) {
            Some(Seg::Index(j)) => Some(*j),
            _ => None,
        };
        match (item, index) {
            (Item::Table(t), None) => table = t,
            (Item::Value(Value::InlineTable(t)), None) => table = t,
            (Item::ArrayOfTables(a), Some(j)) => {
                let Some(t) = a.get(j) else { break };
                span = t.span().or(span);
                table = t;
                i += 1;
            }
            (Item::Value(Value::Array(a)), Some(j)) => {
                let Some(v) = a.get(j) else { break };
                span = v.span().or(span);
                let Value::InlineTable(t) = v else { break };
                table = t;
                i += 1;
            }
            _ => break,
        }
        i += 1;
    }
    span.map(|s| line_of(src, s.start))
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

/// First word of a message when it names a key of the section.
fn leading_key(message: &str) -> Option<&str> {
    let word = message.split_whitespace().next()?;
    let word = word.trim_end_matches(':');
    word.chars()
        .all(|c| c.is_ascii_alphanumeric() || c == '_')
        .then_some(word)
}

struct Source<'a> {
    path: &'a Path,
    text: &'a str,
}

impl Source<'_> {
    fn invalid(&self, path: Vec<Seg>, message: impl Into<String>) -> ConfigError {
        ConfigError::Invalid {
            path: self.path.to_path_buf(),
            line: locate(self.text, &path),
            key: path_string(&path),
            message: message.into(),
        }
    }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse<T: serde::de::DeserializeOwned>(path: &Path, text: &str) -> Result<T, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = read(path)?;
        Config::from_str_at(&text, path)
    }

    /// Parses `text` as if read from `path`; relative file references
    /// resolve against the parent of `path`.
    pub fn from_str_at(text: &str, path: &Path) -> Result<Config, ConfigError> {
        let raw: RawConfig = parse(path, text)?;
        let src = Source { path, text };
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();

        let section = raw.corridor.unwrap_or_default();
        let (corridor, corridor_text, corridor_path, prefix) = match &section.file {
            Some(file) => {
                if section.length_m.is_some() || section.speed_limit_mps.is_some() || section.intersections.is_some() {
                    return Err(src.invalid(vec![key("corridor"), key("file")], "give either a corridor file or inline fields, not both"));
                }
                let cpath = base_dir.join(file);
                let ctext = read(&cpath)?;
                let c: Corridor = parse(&cpath, &ctext)?;
                (c, ctext, cpath, vec![])
            }
            None => {
                let c = match (section.length_m, section.speed_limit_mps, section.intersections) {
                    (None, None, None) => Corridor::default_arterial(),
                    (Some(length_m), Some(speed_limit_mps), Some(intersections)) => Corridor {
                        length_m,
                        speed_limit_mps,
                        intersections,
                    },
                    _ => {
                        return Err(src.invalid(
                            vec![key("corridor")],
                            "inline corridor needs length_m, speed_limit_mps and intersections",
                        ))
                    }
                };
                (c, text.to_string(), path.to_path_buf(), vec![key("corridor")])
            }
        };
        let csrc = Source {
            path: &corridor_path,
            text: &corridor_text,
        };
        validate_corridor(&corridor, &csrc, &prefix)?;

        let at = |section: &str, field: &str| vec![key(section), key(field)];
        raw.planner
            .validate(&corridor, 0.0)
            .map_err(|e| match &e {
                TrafficError::InvalidLimits(m) => {
                    let mut p = vec![key("planner")];
                    if let Some(k) = leading_key(m) {
                        p.push(key(k));
                    }
                    src.invalid(p, m.clone())
                }
                other => src.invalid(vec![key("planner")], other.to_string()),
            })?;
        let plant = |e: PlantError| match e {
            PlantError::InvalidParameter { section, field, reason } => src.invalid(at(section, field), reason),
            other => src.invalid(vec![], other.to_string()),
        };
        raw.vehicle.validate().map_err(plant)?;
        raw.thermal.validate().map_err(plant)?;
        raw.powertrain.validate(raw.thermal.thermostat_open).map_err(plant)?;
        raw.controller.validate().map_err(|e| {
            let mut p = vec![key("controller")];
            let msg = e.to_string();
            match &e {
                HvacError::InvalidTable(m) => {
                    if let Some(k) = leading_key(m) {
                        p.push(key(k));
                    }
                }
                HvacError::InvalidAlpha(_) => p.push(key("alpha")),
                HvacError::InvalidConfig(m) => {
                    let k = leading_key(m).unwrap_or("mpc");
                    if k != "c_p" {
                        p.push(key("mpc"));
                    }
                    p.push(key(k));
                }
                _ => {}
            }
            src.invalid(p, msg)
        })?;
        raw.driver.validate().map_err(|m| {
            let mut p = vec![key("driver")];
            if let Some(k) = leading_key(&m) {
                p.push(key(k));
            }
            src.invalid(p, m)
        })?;
        if raw.long_stop.stop_index == 0 {
            return Err(src.invalid(at("long_stop", "stop_index"), "stop_index counts from 1"));
        }
        if !(raw.long_stop.extra_s >= 0.0) {
            return Err(src.invalid(at("long_stop", "extra_s"), "extra_s must be >= 0"));
        }

        let mut names = BTreeSet::new();
        for (i, s) in raw.scenarios.iter().enumerate() {
            let here = |f: &str| vec![key("scenarios"), Seg::Index(i), key(f)];
            if !names.insert(s.name.clone()) {
                return Err(src.invalid(here("name"), format!("duplicate scenario name {:?}", s.name)));
            }
            for (field, v) in [("T_amb_C", s.t_amb), ("T_cab0_C", s.t_cab0), ("T_cl0_C", s.t_cl0)] {
                if !v.is_finite() {
                    return Err(src.invalid(here(field), "must be finite"));
                }
            }
            if !(0.0..=1.0).contains(&s.soc0) {
                return Err(src.invalid(here("soc0"), "must lie in [0, 1]"));
            }
        }
        let available: Vec<String> = raw.scenarios.iter().map(|s| s.name.clone()).collect();
        for (i, n) in raw.calibration.scenarios.iter().enumerate() {
            if !names.contains(n) {
                return Err(src.invalid(
                    vec![key("calibration"), key("scenarios")],
                    format!("entry {i} names unknown scenario {n:?}; available: {}", available.join(", ")),
                ));
            }
        }
        if let Some(b) = &raw.sweep.base {
            if !names.contains(b) {
                return Err(src.invalid(
                    vec![key("sweep"), key("base")],
                    format!("unknown scenario {b:?}; available: {}", available.join(", ")),
                ));
            }
        }
        if raw.sweep.temps_c.iter().any(|t| !t.is_finite()) {
            return Err(src.invalid(vec![key("sweep"), key("temps_C")], "temperatures must be finite"));
        }

        let mut output = raw.output;
        if output.dir.is_relative() {
            output.dir = base_dir.join(&output.dir);
        }
        Ok(Config {
            setup: Setup {
                corridor,
                limits: raw.planner,
                vehicle: raw.vehicle,
                thermal: raw.thermal,
                powertrain: raw.powertrain,
                controller: raw.controller,
                driver: raw.driver,
                long_stop: raw.long_stop,
            },
            scenarios: raw.scenarios,
            calibration: raw.calibration,
            sweep: raw.sweep,
            output,
            path: path.to_path_buf(),
        })
    }

    pub fn scenario(&self, name: &str) -> Result<&Scenario, ConfigError> {
        self.scenarios
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| ConfigError::UnknownScenario {
                name: name.to_string(),
                available: self.scenarios.iter().map(|s| s.name.clone()).collect(),
            })
    }

    /// Scenarios named in the calibration section, or all of them.
    pub fn calibration_scenarios(&self) -> Vec<Scenario> {
        if self.calibration.scenarios.is_empty() {
            return self.scenarios.clone();
        }
        self.calibration
            .scenarios
            .iter()
            .filter_map(|n| self.scenarios.iter().find(|s| &s.name == n).cloned())
            .collect()
    }

    /// Base scenario for ambient sweeps: the configured one, else the first
    /// eco-driving scenario, else a default eco-driving run.
    pub fn sweep_base(&self) -> Scenario {
        self.sweep
            .base
            .as_ref()
            .and_then(|n| self.scenarios.iter().find(|s| &s.name == n))
            .or_else(|| self.scenarios.iter().find(|s| s.driving == Driving::Eco))
            .cloned()
            .unwrap_or_else(|| {
                Scenario::new("sweep", Driving::Eco, Heating::Eco, 0.0)
            })
    }
}

fn validate_corridor(c: &Corridor, src: &Source, prefix: &[Seg]) -> Result<(), ConfigError> {
    let at = |rest: Vec<Seg>| {
        let mut p = prefix.to_vec();
        p.extend(rest);
        p
    };
    c.validate().map_err(|e| match &e {
        TrafficError::InvalidIntersection { id, reason } => {
            let idx = c.intersections.iter().position(|ix| ix.id == *id).unwrap_or(0);
            let mut p = at(vec![key("intersections"), Seg::Index(idx)]);
            if let Some(k) = leading_key(reason) {
                p.push(key(k));
            }
            src.invalid(p, e.to_string())
        }
        TrafficError::InvalidCorridor(m) => {
            let p = at(leading_key(m).map(|k| vec![key(k)]).unwrap_or_default());
            src.invalid(p, m.clone())
        }
        other => src.invalid(at(vec![]), other.to_string()),
    })?;
    let mut ids = BTreeSet::new();
    for (i, ix) in c.intersections.iter().enumerate() {
        if !ids.insert(ix.id) {
            return Err(src.invalid(
                at(vec![key("intersections"), Seg::Index(i), key("id")]),
                format!("duplicate intersection id {}", ix.id),
            ));
        }
    }
    Ok(())
}
