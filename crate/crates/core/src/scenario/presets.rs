//! Built-in scenarios for the published simulations.
//!
//! Each preset carries two horizons: `paper` (the published run length) and
//! `desk` (a shortened run for interactive use). Scenarios that use the cat
//! cortex matrix default to the synthetic stand-in; pass a CSV path to use
//! real data instead.

use std::path::PathBuf;
use std::str::FromStr;

use crate::dynamics::Mode;
use crate::error::{Error, Result};

use super::config::{
    ActivationConfig, BiasConfig, CouplingConfig, InitialConfig, KernelConfig, MethodConfig,
    OutputConfig, PlanConfig, ScenarioConfig, DEFAULT_DT, DEFAULT_STRIDE,
};

pub const PRESET_NAMES: [&str; 12] = [
    "sim1", "sim2", "sim3-1", "sim3-2", "sim3-3", "sim4-1", "sim4-2", "sim4-3", "sim5-1", "sim6-1",
    "sim6-2", "sim6-3",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Horizon {
    Paper,
    #[default]
    Desk,
}

impl FromStr for Horizon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Horizon::Paper),
            "desk" => Ok(Horizon::Desk),
            _ => Err(Error::config(
                "horizon",
                format!("expected `paper` or `desk`, got `{s}`"),
            )),
        }
    }
}

/// `(paper, desk)` run lengths.
pub fn horizons(name: &str) -> Option<(f64, f64)> {
    Some(match name {
        "sim1" => (400.0, 50.0),
        "sim2" => (600.0, 60.0),
        "sim3-1" => (100.0, 20.0),
        "sim3-2" => (600.0, 20.0),
        "sim3-3" => (400.0, 20.0),
        "sim4-1" | "sim5-1" => (600.0, 60.0),
        "sim4-2" | "sim4-3" => (1500.0, 60.0),
        "sim6-1" => (100.0, 20.0),
        "sim6-2" => (400.0, 60.0),
        "sim6-3" => (600.0, 60.0),
        _ => return None,
    })
}

/// The preset `name` with the given horizon. `cat_matrix` replaces the
/// synthetic cat matrix with a CSV file.
pub fn preset(name: &str, horizon: Horizon, cat_matrix: Option<PathBuf>) -> Result<ScenarioConfig> {
    let (paper, desk) = horizons(name).ok_or_else(|| {
        Error::config(
            "preset",
            format!(
                "unknown preset `{name}`; known: {}",
                PRESET_NAMES.join(", ")
            ),
        )
    })?;
    let t_end = match horizon {
        Horizon::Paper => paper,
        Horizon::Desk => desk,
    };
    let ball = InitialConfig::Ball {
        center: 4,
        level: 2,
    };
    let cat = |scale: f64| CouplingConfig::SyntheticCat { scale };
    let sin = |omega: f64, start: f64, end: f64| BiasConfig::pulse(1.0, omega, start, end);

    let base = |p, alpha, mode, coupling, bias, initial| ScenarioConfig {
        name: name.to_string(),
        p,
        l: 6,
        kernel: KernelConfig::JAlpha { alpha },
        mode,
        coupling,
        bias,
        initial,
        activation: ActivationConfig::Saturation,
        plan: PlanConfig {
            t_end,
            dt: DEFAULT_DT,
            snapshot_stride: DEFAULT_STRIDE,
            method: MethodConfig::Rk4,
        },
        output: OutputConfig::default(),
    };
    let q = Mode::Quantum;
    let mut config = match name {
        "sim1" => base(3, 2.5, q, CouplingConfig::Zero, vec![], ball),
        "sim2" => base(
            3,
            2.5,
            q,
            CouplingConfig::Zero,
            vec![sin(0.01, 25.0, 50.0), sin(0.01, 200.0, 225.0)],
            ball,
        ),
        "sim3-1" => base(
            3,
            2.5,
            q,
            CouplingConfig::Zero,
            vec![BiasConfig::step(10.0, 0.0)],
            ball,
        ),
        "sim3-2" => base(2, 2.5, q, cat(0.1), vec![BiasConfig::step(10.0, 0.0)], ball),
        "sim3-3" => base(
            3,
            2.5,
            q,
            CouplingConfig::Constant { re: 50.0, im: 0.0 },
            vec![],
            InitialConfig::Uniform { re: 0.5, im: 0.3 },
        ),
        "sim4-1" => base(
            2,
            1.6,
            q,
            cat(0.1),
            vec![
                sin(0.1, 25.0, 50.0).masked(3, 2),
                sin(0.1, 200.0, 225.0).masked(0, 2),
            ],
            InitialConfig::Zero,
        ),
        "sim4-2" | "sim4-3" => base(
            2,
            1.6,
            q,
            cat(if name == "sim4-2" { 0.1 } else { 1.0 }),
            vec![
                sin(0.1, 25.0, 50.0),
                sin(1.0, 200.0, 225.0),
                sin(10.0, 800.0, 1225.0),
                BiasConfig::step(0.1, 1225.0),
            ],
            ball,
        ),
        "sim5-1" => base(
            2,
            1.6,
            q,
            cat(10.0),
            vec![
                sin(0.1, 25.0, 50.0),
                sin(0.1, 200.0, 225.0),
                BiasConfig::step(0.5, 225.0),
            ],
            InitialConfig::Zero,
        ),
        "sim6-1" => base(
            2,
            2.5,
            Mode::Classical,
            CouplingConfig::Zero,
            vec![sin(0.01, 2.0, 10.0)],
            InitialConfig::Zero,
        ),
        "sim6-2" => base(
            2,
            2.5,
            Mode::Classical,
            cat(0.05),
            vec![sin(0.01, 2.0, 10.0)],
            InitialConfig::Zero,
        ),
        "sim6-3" => base(
            2,
            2.5,
            Mode::Classical,
            cat(0.1),
            vec![
                sin(0.01, 25.0, 50.0),
                sin(0.01, 200.0, 225.0),
                BiasConfig::step(0.5, 225.0),
            ],
            InitialConfig::Zero,
        ),
        _ => unreachable!("horizons() covers every preset"),
    };
    if let Some(path) = cat_matrix {
        if let CouplingConfig::SyntheticCat { scale } = config.coupling {
            config.coupling = CouplingConfig::Matrix { path, scale };
        }
    }
    Ok(config)
}
