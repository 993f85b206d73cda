//! Experiment configuration files: plain `key = value` lines.
//!
//! The keys mirror the experiment-spec fields (`seed`, `engine`,
//! `trajectories`, `steps`, `noise.*`, `params.*`, `grid`, `grid_values`,
//! `initial`, ...). Lines starting with `#` are comments. Values set here
//! override the preset defaults and are in turn overridden by command-line
//! flags.

use qsync_core::experiments::{Engine, ExperimentSpec, GridParam};
use qsync_core::linalg::C64;
use qsync_core::spin1::{DissipationStyle, JumpConvention, SignalStyle, SpinState};
use qsync_core::{Error, Result};
use std::path::Path;

pub fn parse_bool(v: &str) -> Result<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        other => Err(Error::InvalidParams(format!("expected a boolean, got `{other}`"))),
    }
}

pub fn parse_convention(v: &str) -> Result<JumpConvention> {
    match v.trim() {
        "oracle-consistent" => Ok(JumpConvention::OracleConsistent),
        "paper-literal" => Ok(JumpConvention::PaperLiteral),
        other => Err(Error::InvalidParams(format!("unknown jump convention `{other}`"))),
    }
}

pub fn parse_signal_style(v: &str) -> Result<SignalStyle> {
    match v.trim() {
        "controlled" => Ok(SignalStyle::Controlled),
        "uncontrolled" => Ok(SignalStyle::Uncontrolled),
        other => Err(Error::InvalidParams(format!("unknown signal style `{other}`"))),
    }
}

pub fn parse_dissipation_style(v: &str) -> Result<DissipationStyle> {
    match v.trim() {
        "controlled-rotation" => Ok(DissipationStyle::ControlledRotation),
        "two-cnot" => Ok(DissipationStyle::TwoCnot),
        other => Err(Error::InvalidParams(format!("unknown dissipation style `{other}`"))),
    }
}

pub fn parse_initial(v: &str) -> Result<SpinState> {
    match v.trim().to_ascii_lowercase().as_str() {
        "plus1" | "+1" => Ok(SpinState::Plus1),
        "zero" | "0" => Ok(SpinState::Zero),
        "minus1" | "-1" => Ok(SpinState::Minus1),
        "x" | "surplus" => Ok(SpinState::Surplus),
        other => Err(Error::InvalidParams(format!("unknown initial state `{other}`"))),
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse()
        .map_err(|_| Error::InvalidParams(format!("{key}: expected a number, got `{v}`")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.trim()
        .parse()
        .map_err(|_| Error::InvalidParams(format!("{key}: expected an integer, got `{v}`")))
}

/// Output-related settings a config file may carry.
#[derive(Debug, Default, Clone)]
pub struct OutputConfig {
    pub out: Option<String>,
    pub format: Option<String>,
}

/// Apply a config file onto a spec (preset defaults already in place).
pub fn apply_config_file(spec: &mut ExperimentSpec, path: &Path) -> Result<OutputConfig> {
    let text = std::fs::read_to_string(path)?;
    let mut output = OutputConfig::default();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::InvalidParams(format!(
                "config line {}: expected `key = value`, got `{raw}`",
                lineno + 1
            )));
        };
        let key = key.trim();
        let value = value.trim();
        match key {
            "preset" => {} // the preset is chosen on the command line
            "seed" => spec.seed = parse_usize(key, value)? as u64,
            "trajectories" => spec.trajectories = parse_usize(key, value)?,
            "steps" => spec.n_steps = parse_usize(key, value)?,
            "engine" => spec.engine = Engine::from_name(value)?,
            "convention" => spec.variant.jump_convention = parse_convention(value)?,
            "signal" => spec.variant.signal_style = parse_signal_style(value)?,
            "dissipation" => spec.variant.dissipation_style = parse_dissipation_style(value)?,
            "hardware_faithful" => spec.hardware_faithful = parse_bool(value)?,
            "initial" => spec.initial = parse_initial(value)?,
            "noise.enabled" => spec.noise.enabled = parse_bool(value)?,
            "noise.p_cnot" => spec.noise.p_cnot = parse_f64(key, value)?,
            "noise.p_1q" => spec.noise.p_1q = parse_f64(key, value)?,
            "noise.p_read0" => spec.noise.p_read0 = parse_f64(key, value)?,
            "noise.p_read1" => spec.noise.p_read1 = parse_f64(key, value)?,
            "noise.p_damp_per_step" => spec.noise.p_damp_per_step = parse_f64(key, value)?,
            "params.delta" => spec.params.delta = parse_f64(key, value)?,
            "params.epsilon" => spec.params.epsilon = parse_f64(key, value)?,
            "params.gamma_10" => spec.params.gamma_10 = parse_f64(key, value)?,
            "params.gamma_m10" => spec.params.gamma_m10 = parse_f64(key, value)?,
            "params.dt" => spec.params.dt = parse_f64(key, value)?,
            "params.j_01_abs" => {
                spec.params.j_01 = C64::from_polar(parse_f64(key, value)?, spec.params.j_01.arg())
            }
            "params.j_01_arg" => {
                spec.params.j_01 = C64::from_polar(spec.params.j_01.norm(), parse_f64(key, value)?)
            }
            "params.j_0m1_abs" => {
                spec.params.j_0m1 =
                    C64::from_polar(parse_f64(key, value)?, spec.params.j_0m1.arg())
            }
            "params.j_0m1_arg" => {
                spec.params.j_0m1 =
                    C64::from_polar(spec.params.j_0m1.norm(), parse_f64(key, value)?)
            }
            "params.j_m11_abs" => {
                spec.params.j_m11 =
                    C64::from_polar(parse_f64(key, value)?, spec.params.j_m11.arg())
            }
            "params.j_m11_arg" => {
                spec.params.j_m11 =
                    C64::from_polar(spec.params.j_m11.norm(), parse_f64(key, value)?)
            }
            "grid" => spec.grid = GridParam::from_name(value)?,
            "grid_values" => {
                spec.grid_values = value
                    .split(',')
                    .map(|v| parse_f64("grid_values", v))
                    .collect::<Result<Vec<f64>>>()?
            }
            "out" => output.out = Some(value.to_string()),
            "format" => output.format = Some(value.to_string()),
            other => {
                return Err(Error::InvalidParams(format!(
                    "config line {}: unknown key `{other}`",
                    lineno + 1
                )))
            }
        }
    }
    Ok(output)
}
