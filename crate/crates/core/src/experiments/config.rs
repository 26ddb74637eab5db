//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # SI units throughout
//! n = 100
//! distance = 32e-6
//! diffusion_coefficient = calibrate
//! calibrate_target_pe = 0.069
//! betas = 0, 0.5, 1
//! threshold_grid = 0:200:1
//! ```
//!
//! Grids are either comma-separated values or `start:stop:step`. Unknown keys
//! are rejected.

use std::str::FromStr;

use super::ExperimentError;
use crate::physics::MediumParams;
use crate::simulator::{Counting, InhibitorPolicy, Scheme};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DiffusionSource {
    Fixed(f64),
    Einstein(MediumParams),
    /// Choose `D` so the best CSK error probability equals the target.
    Calibrate { target_pe: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineSelection {
    Analytic,
    MonteCarlo,
    Both,
}

impl FromStr for EngineSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "analytic" => Ok(EngineSelection::Analytic),
            "mc" | "montecarlo" => Ok(EngineSelection::MonteCarlo),
            "both" => Ok(EngineSelection::Both),
            other => Err(format!("unknown engine '{other}' (expected analytic, mc or both)")),
        }
    }
}

impl EngineSelection {
    pub fn as_str(&self) -> &'static str {
        match self {
            EngineSelection::Analytic => "analytic",
            EngineSelection::MonteCarlo => "mc",
            EngineSelection::Both => "both",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub molecules: u32,
    pub distance: f64,
    pub diffusion: DiffusionSource,
    pub slot_duration: f64,
    pub prior_one: f64,
    /// Used by single-link commands; sweeps overlay `betas` instead.
    pub inhibition_efficiency: f64,
    pub betas: Vec<f64>,
    /// `None` means the integers `0..=2n`.
    pub threshold_grid: Option<Vec<f64>>,
    pub distance_grid: Vec<f64>,
    /// Fixed threshold for distance sweeps and single simulations.
    pub threshold: f64,
    pub engine: EngineSelection,
    pub num_slots: usize,
    pub master_seed: u64,
    pub isi_memory_slots: usize,
    pub inhibitor_policy: InhibitorPolicy,
    pub scheme: Scheme,
    pub counting: Counting,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            molecules: 100,
            distance: 32e-6,
            diffusion: DiffusionSource::Calibrate { target_pe: 0.069 },
            slot_duration: 5.9,
            prior_one: 0.5,
            inhibition_efficiency: 0.5,
            betas: vec![0.0, 0.5, 1.0],
            threshold_grid: None,
            distance_grid: (0..=8).map(|i| (16.0 + 4.0 * f64::from(i)) / 1e6).collect(),
            threshold: 20.0,
            engine: EngineSelection::Analytic,
            num_slots: 100_000,
            master_seed: 0,
            isi_memory_slots: 1,
            inhibitor_policy: InhibitorPolicy::EverySlot,
            scheme: Scheme::ZebraCsk,
            counting: Counting::AllTypes,
        }
    }
}

fn number<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("{key}: cannot parse '{value}' as a number"))
}

/// Parses `a, b, c` or `start:stop:step`; the result must be strictly increasing.
pub(crate) fn parse_grid(key: &str, value: &str) -> Result<Vec<f64>, String> {
    let grid: Vec<f64> = if value.contains(':') {
        let parts: Vec<&str> = value.split(':').map(str::trim).collect();
        let [start, stop, step] = parts[..] else {
            return Err(format!("{key}: range must be start:stop:step"));
        };
        let (start, stop, step): (f64, f64, f64) = (number(key, start)?, number(key, stop)?, number(key, step)?);
        if step.is_nan() || step <= 0.0 || stop < start {
            return Err(format!("{key}: range needs step > 0 and stop >= start"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize;
        (0..=count).map(|i| start + i as f64 * step).collect()
    } else {
        value
            .split(',')
            .map(|v| number(key, v.trim()))
            .collect::<Result<_, _>>()?
    };
    if grid.is_empty() {
        return Err(format!("{key}: grid is empty"));
    }
    if grid.iter().any(|v| !v.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(format!("{key}: grid must be finite and strictly increasing"));
    }
    Ok(grid)
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| super::format_number(*v)).collect::<Vec<_>>().join(", ")
}

pub(crate) fn policy_name(p: InhibitorPolicy) -> &'static str {
    match p {
        InhibitorPolicy::EverySlot => "every-slot",
        InhibitorPolicy::OnlyOnEmission => "only-on-emission",
    }
}

pub(crate) fn scheme_name(s: Scheme) -> &'static str {
    match s {
        Scheme::Csk => "csk",
        Scheme::ZebraCsk => "zebra-csk",
    }
}

pub(crate) fn counting_name(c: Counting) -> &'static str {
    match c {
        Counting::AllTypes => "all-types",
        Counting::SlotType => "slot-type",
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let mut config = Self::default();
        let mut medium: [Option<f64>; 3] = [None; 3];
        let mut target: Option<f64> = None;
        let mut diffusion_mode = String::from("calibrate");
        let mut seen = std::collections::HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| ExperimentError::Config {
                line: Some(line_no),
                message,
            };
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err(format!("expected 'key = value', got '{line}'")))?;
            if !seen.insert(key.to_string()) {
                return Err(err(format!("duplicate key '{key}'")));
            }
            let result: Result<(), String> = (|| {
                match key {
                    "n" => config.molecules = number(key, value)?,
                    "distance" => config.distance = number(key, value)?,
                    "diffusion_coefficient" => diffusion_mode = value.to_string(),
                    "calibrate_target_pe" => target = Some(number(key, value)?),
                    "temperature" => medium[0] = Some(number(key, value)?),
                    "viscosity" => medium[1] = Some(number(key, value)?),
                    "molecule_radius" => medium[2] = Some(number(key, value)?),
                    "slot_duration" => config.slot_duration = number(key, value)?,
                    "prior_one" => config.prior_one = number(key, value)?,
                    "inhibition_efficiency" => config.inhibition_efficiency = number(key, value)?,
                    "betas" => config.betas = value.split(',').map(|v| number(key, v.trim())).collect::<Result<_, _>>()?,
                    "threshold_grid" => config.threshold_grid = Some(parse_grid(key, value)?),
                    "distance_grid" => config.distance_grid = parse_grid(key, value)?,
                    "threshold" => config.threshold = number(key, value)?,
                    "engine" => config.engine = value.parse()?,
                    "num_slots" => config.num_slots = number(key, value)?,
                    "master_seed" => config.master_seed = number(key, value)?,
                    "isi_memory_slots" => config.isi_memory_slots = number(key, value)?,
                    "inhibitor_policy" => {
                        config.inhibitor_policy = match value {
                            "every-slot" => InhibitorPolicy::EverySlot,
                            "only-on-emission" => InhibitorPolicy::OnlyOnEmission,
                            other => return Err(format!("unknown inhibitor_policy '{other}'")),
                        }
                    }
                    "scheme" => {
                        config.scheme = match value {
                            "csk" => Scheme::Csk,
                            "zebra-csk" => Scheme::ZebraCsk,
                            other => return Err(format!("unknown scheme '{other}'")),
                        }
                    }
                    "counting" => {
                        config.counting = match value {
                            "all-types" => Counting::AllTypes,
                            "slot-type" => Counting::SlotType,
                            other => return Err(format!("unknown counting '{other}'")),
                        }
                    }
                    other => return Err(format!("unknown key '{other}'")),
                }
                Ok(())
            })();
            result.map_err(err)?;
        }

        config.diffusion = match diffusion_mode.as_str() {
            "calibrate" => DiffusionSource::Calibrate {
                target_pe: target.unwrap_or(0.069),
            },
            "einstein" => match medium {
                [Some(temperature), Some(viscosity), Some(molecule_radius)] => DiffusionSource::Einstein(MediumParams {
                    temperature,
                    viscosity,
                    molecule_radius,
                }),
                _ => {
                    return Err(ExperimentError::config(
                        "diffusion_coefficient = einstein needs temperature, viscosity and molecule_radius",
                    ))
                }
            },
            value => DiffusionSource::Fixed(number("diffusion_coefficient", value).map_err(ExperimentError::config)?),
        };
        if target.is_some() && !matches!(config.diffusion, DiffusionSource::Calibrate { .. }) {
            return Err(ExperimentError::config(
                "calibrate_target_pe is only valid with diffusion_coefficient = calibrate",
            ));
        }
        if medium.iter().any(Option::is_some) && !matches!(config.diffusion, DiffusionSource::Einstein(_)) {
            return Err(ExperimentError::config(
                "medium keys are only valid with diffusion_coefficient = einstein",
            ));
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.betas.is_empty() || self.betas.iter().any(|b| !(0.0..=1.0).contains(b)) {
            return Err(ExperimentError::config("betas must be a nonempty list of values in [0, 1]"));
        }
        if !(self.threshold >= 0.0 && self.threshold.is_finite()) {
            return Err(ExperimentError::config("threshold must be non-negative"));
        }
        if let DiffusionSource::Calibrate { target_pe } = self.diffusion {
            if !(target_pe > 0.0 && target_pe < 0.5) {
                return Err(ExperimentError::config("calibrate_target_pe must lie in (0, 0.5)"));
            }
        }
        Ok(())
    }

    pub fn threshold_grid(&self) -> Vec<f64> {
        self.threshold_grid
            .clone()
            .unwrap_or_else(|| crate::analytic::default_threshold_grid(self.molecules))
    }

    /// Serialise back to the config format, with `D` as resolved by the run.
    pub fn to_entries(&self, resolved_diffusion: Option<f64>) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| out.push((k.to_string(), v));
        push("n", self.molecules.to_string());
        push("distance", super::format_number(self.distance));
        match (resolved_diffusion, self.diffusion) {
            (Some(d), _) | (None, DiffusionSource::Fixed(d)) => push("diffusion_coefficient", super::format_number(d)),
            (None, DiffusionSource::Calibrate { target_pe }) => {
                push("diffusion_coefficient", "calibrate".into());
                push("calibrate_target_pe", super::format_number(target_pe));
            }
            (None, DiffusionSource::Einstein(m)) => {
                push("diffusion_coefficient", "einstein".into());
                push("temperature", super::format_number(m.temperature));
                push("viscosity", super::format_number(m.viscosity));
                push("molecule_radius", super::format_number(m.molecule_radius));
            }
        }
        push("slot_duration", super::format_number(self.slot_duration));
        push("prior_one", super::format_number(self.prior_one));
        push("inhibition_efficiency", super::format_number(self.inhibition_efficiency));
        push("betas", join(&self.betas));
        if let Some(grid) = &self.threshold_grid {
            push("threshold_grid", join(grid));
        }
        push("distance_grid", join(&self.distance_grid));
        push("threshold", super::format_number(self.threshold));
        push("engine", self.engine.as_str().into());
        push("num_slots", self.num_slots.to_string());
        push("master_seed", self.master_seed.to_string());
        push("isi_memory_slots", self.isi_memory_slots.to_string());
        push("inhibitor_policy", policy_name(self.inhibitor_policy).into());
        push("scheme", scheme_name(self.scheme).into());
        push("counting", counting_name(self.counting).into());
        out
    }
}
