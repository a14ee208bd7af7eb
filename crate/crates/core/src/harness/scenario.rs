//! Declarative scenario files (TOML, `schema_version = 1`).
//!
//! Shared radar parameters live in `[radar]`; each `[[nodes]]` entry gives a
//! position and target power and may override any `[radar]` key.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::SolverConfig;
use crate::signal::{RadarNodeModel, SPEED_OF_LIGHT};
use crate::tracking::TargetState;

pub const SCHEMA_VERSION: u32 = 1;

const BUILTIN: &[(&str, &str)] = &[("four_node", include_str!("../../scenarios/four_node.toml"))];

/// Names of scenarios compiled into the binary.
pub fn builtin_names() -> Vec<&'static str> {
    BUILTIN.iter().map(|(n, _)| *n).collect()
}

/// How the Monte-Carlo target powers are drawn: exponential with this mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub trials: usize,
    pub power_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessConfig {
    pub trials: usize,
    /// Prediction-error variance of each position component, m².
    pub position_variance: f64,
    /// Prediction-error variance of each velocity component, (m/s)².
    pub velocity_variance: f64,
    pub zetas: Vec<f64>,
}

/// A fully validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub nodes: Vec<RadarNodeModel>,
    pub initial_state: TargetState,
    pub frames: usize,
    pub interval: f64,
    pub zetas: Vec<f64>,
    pub pfa: f64,
    pub initial_information: f64,
    pub noise_floor: f64,
    pub solver: SolverConfig,
    pub seed: u64,
    pub monte_carlo: Option<MonteCarloConfig>,
    pub robustness: Option<RobustnessConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    schema_version: Option<u32>,
    name: Option<String>,
    frames: Option<i64>,
    interval_s: Option<f64>,
    zetas: Option<Vec<f64>>,
    pfa: Option<f64>,
    initial_information: Option<f64>,
    noise_floor: Option<f64>,
    stop_tolerance: Option<f64>,
    max_iterations: Option<i64>,
    seed: Option<u64>,
    target: Option<RawTarget>,
    radar: Option<RawRadar>,
    nodes: Option<Vec<RawNode>>,
    monte_carlo: Option<RawMonteCarlo>,
    robustness: Option<RawRobustness>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTarget {
    position_m: Option<[f64; 2]>,
    velocity_mps: Option<[f64; 2]>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRadar {
    carrier_hz: Option<f64>,
    element_spacing_wavelengths: Option<f64>,
    elements: Option<i64>,
    pulses: Option<i64>,
    pri_s: Option<f64>,
    bandwidth_hz: Option<f64>,
    pulsewidth_s: Option<f64>,
    rho_temporal: Option<f64>,
    rho_spatial: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    position_m: Option<[f64; 2]>,
    target_power: Option<f64>,
    #[serde(flatten)]
    radar: RawRadar,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMonteCarlo {
    trials: Option<i64>,
    exp_mean: Option<f64>,
    exp_rate: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRobustness {
    trials: Option<i64>,
    sigma_r2: Option<f64>,
    sigma_v2: Option<f64>,
    zetas: Option<Vec<f64>>,
}

fn required<T>(v: Option<T>, path: &str) -> Result<T> {
    v.ok_or_else(|| Error::scenario(path, "missing required field"))
}

fn positive(v: f64, path: &str) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::scenario(
            path,
            format!("must be a positive finite number, got {v}"),
        ))
    }
}

fn count(v: i64, min: i64, path: &str) -> Result<usize> {
    if v >= min {
        Ok(v as usize)
    } else {
        Err(Error::scenario(
            path,
            format!("must be an integer >= {min}, got {v}"),
        ))
    }
}

fn zeta_list(v: &[f64], path: &str) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::scenario(path, "must list at least one value"));
    }
    for (i, z) in v.iter().enumerate() {
        if !(0.0..=2.0).contains(z) {
            return Err(Error::scenario(
                format!("{path}[{i}]"),
                format!("zeta must lie in [0, 2], got {z}"),
            ));
        }
    }
    Ok(v.to_vec())
}

fn merged(node: &RawRadar, shared: &RawRadar) -> RawRadar {
    RawRadar {
        carrier_hz: node.carrier_hz.or(shared.carrier_hz),
        element_spacing_wavelengths: node
            .element_spacing_wavelengths
            .or(shared.element_spacing_wavelengths),
        elements: node.elements.or(shared.elements),
        pulses: node.pulses.or(shared.pulses),
        pri_s: node.pri_s.or(shared.pri_s),
        bandwidth_hz: node.bandwidth_hz.or(shared.bandwidth_hz),
        pulsewidth_s: node.pulsewidth_s.or(shared.pulsewidth_s),
        rho_temporal: node.rho_temporal.or(shared.rho_temporal),
        rho_spatial: node.rho_spatial.or(shared.rho_spatial),
    }
}

fn build_node(raw: &RawNode, shared: &RawRadar, pfa: f64, idx: usize) -> Result<RadarNodeModel> {
    let base = format!("nodes[{idx}]");
    let p = |f: &str| format!("{base}.{f}");
    let r = merged(&raw.radar, shared);
    let position = required(raw.position_m, &p("position_m"))?;
    if !position.iter().all(|v| v.is_finite()) {
        return Err(Error::scenario(p("position_m"), "must be finite"));
    }
    let target_power = positive(
        required(raw.target_power, &p("target_power"))?,
        &p("target_power"),
    )?;
    let carrier = positive(required(r.carrier_hz, &p("carrier_hz"))?, &p("carrier_hz"))?;
    let wavelength = SPEED_OF_LIGHT / carrier;
    let spacing = positive(
        required(
            r.element_spacing_wavelengths,
            &p("element_spacing_wavelengths"),
        )?,
        &p("element_spacing_wavelengths"),
    )?;
    let elements = count(required(r.elements, &p("elements"))?, 1, &p("elements"))?;
    let pulses = count(required(r.pulses, &p("pulses"))?, 3, &p("pulses"))?;
    let pri = positive(required(r.pri_s, &p("pri_s"))?, &p("pri_s"))?;
    let bandwidth = positive(
        required(r.bandwidth_hz, &p("bandwidth_hz"))?,
        &p("bandwidth_hz"),
    )?;
    let pulsewidth = positive(
        required(r.pulsewidth_s, &p("pulsewidth_s"))?,
        &p("pulsewidth_s"),
    )?;
    let samples = pulsewidth * 2.0 * bandwidth;
    if (samples - samples.round()).abs() > 1e-6 || samples.round() < 1.0 {
        return Err(Error::scenario(
            p("pulsewidth_s"),
            format!("pulsewidth times 2B must be a positive integer sample count, got {samples}"),
        ));
    }
    let mut corr = [0.0; 2];
    for (i, (name, v)) in [
        ("rho_temporal", r.rho_temporal),
        ("rho_spatial", r.rho_spatial),
    ]
    .into_iter()
    .enumerate()
    {
        let v = required(v, &p(name))?;
        if !(v.abs() < 1.0) {
            return Err(Error::scenario(
                p(name),
                format!("must satisfy |rho| < 1, got {v}"),
            ));
        }
        corr[i] = v;
    }
    let node = RadarNodeModel {
        position,
        wavelength,
        element_spacing: spacing * wavelength,
        elements,
        pulses,
        pri,
        bandwidth,
        pulse_samples: samples.round() as usize,
        pulsewidth,
        rho_temporal: corr[0],
        rho_spatial: corr[1],
        target_power,
        pfa,
    };
    node.validate()
        .map_err(|e| Error::scenario(base, e.to_string()))?;
    Ok(node)
}

impl Scenario {
    /// Parses and validates scenario text.
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let version = required(raw.schema_version, "schema_version")?;
        if version != SCHEMA_VERSION {
            return Err(Error::scenario(
                "schema_version",
                format!("unsupported version {version}, expected {SCHEMA_VERSION}"),
            ));
        }
        let pfa = required(raw.pfa, "pfa")?;
        if !(pfa > 0.0 && pfa < 1.0) {
            return Err(Error::scenario(
                "pfa",
                format!("must lie in (0, 1), got {pfa}"),
            ));
        }
        let raw_nodes = required(raw.nodes, "nodes")?;
        if raw_nodes.is_empty() {
            return Err(Error::scenario("nodes", "must contain at least one node"));
        }
        let shared = raw.radar.unwrap_or_default();
        let nodes = raw_nodes
            .iter()
            .enumerate()
            .map(|(i, n)| build_node(n, &shared, pfa, i))
            .collect::<Result<Vec<_>>>()?;
        let pulses = nodes[0].pulses;
        if let Some(i) = nodes.iter().position(|n| n.pulses != pulses) {
            return Err(Error::scenario(
                format!("nodes[{i}].pulses"),
                "all nodes must share one pulse count",
            ));
        }
        let target = required(raw.target, "target")?;
        let position = required(target.position_m, "target.position_m")?;
        let velocity = required(target.velocity_mps, "target.velocity_mps")?;
        if !position
            .iter()
            .chain(velocity.iter())
            .all(|v| v.is_finite())
        {
            return Err(Error::scenario("target", "state must be finite"));
        }
        let zetas = zeta_list(&required(raw.zetas, "zetas")?, "zetas")?;
        let frames = count(required(raw.frames, "frames")?, 1, "frames")?;
        let interval = positive(required(raw.interval_s, "interval_s")?, "interval_s")?;
        let initial_information = positive(
            required(raw.initial_information, "initial_information")?,
            "initial_information",
        )?;
        let noise_floor = positive(
            raw.noise_floor.unwrap_or(crate::lift::DEFAULT_FLOOR),
            "noise_floor",
        )?;
        let defaults = SolverConfig::default();
        let solver = SolverConfig {
            tolerance: positive(
                raw.stop_tolerance.unwrap_or(defaults.tolerance),
                "stop_tolerance",
            )?,
            max_iterations: count(
                raw.max_iterations.unwrap_or(defaults.max_iterations as i64),
                1,
                "max_iterations",
            )?,
            ..defaults
        };
        let monte_carlo = raw
            .monte_carlo
            .map(|mc| -> Result<MonteCarloConfig> {
                let trials = count(
                    required(mc.trials, "monte_carlo.trials")?,
                    1,
                    "monte_carlo.trials",
                )?;
                let power_mean = match (mc.exp_mean, mc.exp_rate) {
                    (Some(m), None) => positive(m, "monte_carlo.exp_mean")?,
                    (None, Some(r)) => 1.0 / positive(r, "monte_carlo.exp_rate")?,
                    (Some(_), Some(_)) => {
                        return Err(Error::scenario(
                            "monte_carlo",
                            "give exactly one of exp_mean or exp_rate",
                        ))
                    }
                    (None, None) => {
                        return Err(Error::scenario(
                            "monte_carlo.exp_mean",
                            "missing required field",
                        ))
                    }
                };
                Ok(MonteCarloConfig { trials, power_mean })
            })
            .transpose()?;
        let robustness = raw
            .robustness
            .map(|rb| -> Result<RobustnessConfig> {
                let nonneg = |v: f64, path: &str| {
                    if v.is_finite() && v >= 0.0 {
                        Ok(v)
                    } else {
                        Err(Error::scenario(path, format!("must be >= 0, got {v}")))
                    }
                };
                Ok(RobustnessConfig {
                    trials: count(
                        required(rb.trials, "robustness.trials")?,
                        1,
                        "robustness.trials",
                    )?,
                    position_variance: nonneg(
                        required(rb.sigma_r2, "robustness.sigma_r2")?,
                        "robustness.sigma_r2",
                    )?,
                    velocity_variance: nonneg(
                        required(rb.sigma_v2, "robustness.sigma_v2")?,
                        "robustness.sigma_v2",
                    )?,
                    zetas: match rb.zetas {
                        Some(z) => zeta_list(&z, "robustness.zetas")?,
                        None => zetas.clone(),
                    },
                })
            })
            .transpose()?;
        Ok(Self {
            name: raw.name.unwrap_or_else(|| "unnamed".into()),
            nodes,
            initial_state: TargetState::new(position, velocity),
            frames,
            interval,
            zetas,
            pfa,
            initial_information,
            noise_floor,
            solver,
            seed: raw.seed.unwrap_or(0),
            monte_carlo,
            robustness,
        })
    }

    /// A scenario compiled into the crate, by name.
    pub fn builtin(name: &str) -> Option<Result<Self>> {
        BUILTIN
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| Self::from_toml(text))
    }

    /// Per-node target powers as configured.
    pub fn target_powers(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.target_power).collect()
    }

    pub fn pulses(&self) -> usize {
        self.nodes[0].pulses
    }
}

/// Loads a scenario from a file, or a built-in scenario when `source` names one
/// and no such file exists.
pub fn load_scenario(source: impl AsRef<Path>) -> Result<Scenario> {
    let path = source.as_ref();
    if !path.exists() {
        if let Some(s) = path.to_str().and_then(Scenario::builtin) {
            return s;
        }
    }
    let text = std::fs::read_to_string(path)?;
    Scenario::from_toml(&text)
}
