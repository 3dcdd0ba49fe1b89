//! The JSON scenario file format.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    Activation, BiasSignal, BiasTerm, CouplingSpec, InitialStateSpec, Mode, NetworkSystem,
};
use crate::error::{Error, Result};
use crate::evolution::{IntegrationPlan, Method};
use crate::kernel::{load_edge_list, CouplingOperator, RadialKernel};
use crate::padic::{BallSpec, GroupScheme};

use super::ingest::{ingest_matrix, synthetic_cat_matrix};

pub const DEFAULT_DT: f64 = 0.001;
pub const DEFAULT_STRIDE: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub p: u32,
    pub l: u32,
    pub kernel: KernelConfig,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub coupling: CouplingConfig,
    #[serde(default)]
    pub bias: Vec<BiasConfig>,
    pub initial: InitialConfig,
    #[serde(default)]
    pub activation: ActivationConfig,
    pub plan: PlanConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelConfig {
    JAlpha {
        alpha: f64,
    },
    /// Radial profile on the norm levels `p^0, ..., p^{-l}`.
    Radial {
        values: Vec<f64>,
    },
    /// Edge-list file; vertex `v` sits on cell `v`.
    Graph {
        edges: PathBuf,
        #[serde(default)]
        vertices: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CouplingConfig {
    #[default]
    Zero,
    Constant {
        re: f64,
        #[serde(default)]
        im: f64,
    },
    /// CSV matrix file, multiplied by `scale`.
    Matrix {
        path: PathBuf,
        #[serde(default = "one")]
        scale: f64,
    },
    /// The bundled 64x64 hierarchical stand-in for the cat cortex matrix.
    SyntheticCat {
        #[serde(default = "one")]
        scale: f64,
    },
}

fn one() -> f64 {
    1.0
}

/// `amplitude * sin(omega * pi * t) + offset` on `[start, end)`; a missing
/// `end` means the term never switches off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiasConfig {
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub omega: f64,
    #[serde(default)]
    pub start: f64,
    #[serde(default)]
    pub end: Option<f64>,
    #[serde(default)]
    pub offset: f64,
    #[serde(default)]
    pub mask: Option<BallConfig>,
}

impl BiasConfig {
    pub fn pulse(amplitude: f64, omega: f64, start: f64, end: f64) -> Self {
        Self {
            amplitude,
            omega,
            start,
            end: Some(end),
            offset: 0.0,
            mask: None,
        }
    }

    pub fn step(value: f64, start: f64) -> Self {
        Self {
            amplitude: 0.0,
            omega: 0.0,
            start,
            end: None,
            offset: value,
            mask: None,
        }
    }

    pub fn masked(mut self, center: usize, level: u32) -> Self {
        self.mask = Some(BallConfig { center, level });
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallConfig {
    pub center: usize,
    pub level: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    Ball {
        center: usize,
        level: u32,
    },
    Uniform {
        re: f64,
        #[serde(default)]
        im: f64,
    },
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationConfig {
    #[default]
    Saturation,
    PaperLiteral,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodConfig {
    #[default]
    Rk4,
    ExactFree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    pub t_end: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    #[serde(default)]
    pub method: MethodConfig,
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

fn default_stride() -> usize {
    DEFAULT_STRIDE
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Output directory, relative to the working directory.
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub heatmap: bool,
}

/// Reads and validates a scenario file. Relative input paths (matrix and
/// edge-list files) are resolved against the file's directory.
pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut config = parse_config(&text).map_err(|e| match e {
        Error::Parse { message, .. } => Error::Parse {
            path: path.display().to_string(),
            message,
        },
        other => other,
    })?;
    let base = path.parent().unwrap_or(Path::new(""));
    config.resolve_paths(base);
    config.validate()?;
    Ok(config)
}

/// Parses a scenario from text without touching the file system.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        path: "<config>".into(),
        message: format!("line {}, column {}: {e}", e.line(), e.column()),
    })
}

pub fn save_config(config: &ScenarioConfig, path: &Path) -> Result<()> {
    std::fs::write(path, config.to_json() + "\n").map_err(|e| Error::io(path, e))
}

impl ScenarioConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn scheme(&self) -> Result<GroupScheme> {
        GroupScheme::new(self.p, self.l).map_err(|e| match e {
            Error::NotPrime(p) => Error::config("p", format!("p must be prime, got {p}")),
            Error::ZeroLevel => Error::config("l", "l must be at least 1"),
            other => Error::config("l", other.to_string()),
        })
    }

    fn resolve_paths(&mut self, base: &Path) {
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let KernelConfig::Graph { edges, .. } = &mut self.kernel {
            resolve(edges);
        }
        if let CouplingConfig::Matrix { path, .. } = &mut self.coupling {
            resolve(path);
        }
    }

    /// Checks everything that can be checked without building matrices.
    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::config("name", "must not be empty"));
        }
        let scheme = self.scheme()?;
        match &self.kernel {
            KernelConfig::JAlpha { alpha } => {
                if !alpha.is_finite() || *alpha <= 0.0 {
                    return Err(Error::config(
                        "kernel.alpha",
                        format!("must be positive, got {alpha}"),
                    ));
                }
                if *alpha == 1.0 {
                    return Err(Error::config("kernel.alpha", "alpha = 1 is singular"));
                }
            }
            KernelConfig::Radial { values } => {
                if values.len() != self.l as usize + 1 {
                    return Err(Error::config(
                        "kernel.values",
                        format!("expected {} values, found {}", self.l + 1, values.len()),
                    ));
                }
            }
            KernelConfig::Graph { edges, .. } => require_file("kernel.edges", edges)?,
        }
        match &self.coupling {
            CouplingConfig::Zero => {}
            CouplingConfig::Constant { re, im } => {
                if !re.is_finite() || !im.is_finite() {
                    return Err(Error::config("coupling", "non-finite constant"));
                }
            }
            CouplingConfig::Matrix { path, scale } => {
                require_finite("coupling.scale", *scale)?;
                require_file("coupling.path", path)?;
            }
            CouplingConfig::SyntheticCat { scale } => {
                require_finite("coupling.scale", *scale)?;
                if (self.p, self.l) != (2, 6) {
                    return Err(Error::config(
                        "coupling",
                        "the synthetic cat matrix requires p = 2, l = 6",
                    ));
                }
            }
        }
        self.bias_signal(&scheme)?.check(&scheme)?;
        match self.initial {
            InitialConfig::Ball { center, level } => {
                let cell = scheme
                    .cell(center)
                    .map_err(|e| Error::config("initial.center", e.to_string()))?;
                scheme
                    .check_ball(BallSpec::new(cell, level))
                    .map_err(|e| Error::config("initial.level", e.to_string()))?;
            }
            InitialConfig::Uniform { re, im } => {
                require_finite("initial.re", re)?;
                require_finite("initial.im", im)?;
            }
            InitialConfig::Zero => {}
        }
        self.integration_plan()
            .steps()
            .map_err(|e| Error::config("plan", e.to_string()))?;
        Ok(())
    }

    pub fn integration_plan(&self) -> IntegrationPlan {
        IntegrationPlan {
            t_end: self.plan.t_end,
            dt: self.plan.dt,
            snapshot_stride: self.plan.snapshot_stride,
            method: match self.plan.method {
                MethodConfig::Rk4 => Method::Rk4,
                MethodConfig::ExactFree => Method::ExactFree,
            },
            store_states: false,
        }
    }

    pub fn activation(&self) -> Activation {
        match self.activation {
            ActivationConfig::Saturation => Activation::Saturation,
            ActivationConfig::PaperLiteral => Activation::PaperLiteral,
            ActivationConfig::Identity => Activation::Identity,
        }
    }

    fn bias_signal(&self, scheme: &GroupScheme) -> Result<BiasSignal> {
        let terms = self
            .bias
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let mask = match b.mask {
                    None => None,
                    Some(ball) => {
                        let cell = scheme.cell(ball.center).map_err(|e| {
                            Error::config(format!("bias[{i}].mask.center"), e.to_string())
                        })?;
                        Some(BallSpec::new(cell, ball.level))
                    }
                };
                Ok(BiasTerm {
                    amplitude: b.amplitude,
                    omega: b.omega,
                    start: b.start,
                    end: b.end.unwrap_or(f64::INFINITY),
                    mask,
                    offset: b.offset,
                })
            })
            .collect::<Result<_>>()?;
        Ok(BiasSignal::new(terms))
    }

    /// Builds the operator, coupling and initial state. The second value
    /// names where the coupling matrix came from.
    pub fn build_system(&self) -> Result<(NetworkSystem, String)> {
        self.validate()?;
        let scheme = self.scheme()?;
        let operator = match &self.kernel {
            KernelConfig::JAlpha { alpha } => {
                CouplingOperator::convolution(&RadialKernel::j_alpha(*alpha, scheme)?)?
            }
            KernelConfig::Radial { values } => CouplingOperator::convolution(
                &RadialKernel::from_profile(scheme, values.clone(), false)?,
            )?,
            KernelConfig::Graph { edges, vertices } => {
                let adjacency = load_edge_list(edges, *vertices)?;
                CouplingOperator::graph(scheme, &adjacency, None)?
            }
        };
        let (coupling, source) = match &self.coupling {
            CouplingConfig::Zero => (CouplingSpec::Zero, "none".to_string()),
            CouplingConfig::Constant { re, im } => (
                CouplingSpec::Constant(Complex64::new(*re, *im)),
                "constant".to_string(),
            ),
            CouplingConfig::Matrix { path, scale } => (
                CouplingSpec::Matrix {
                    matrix: ingest_matrix(path, &scheme)?,
                    scale: *scale,
                },
                format!("file:{}", path.display()),
            ),
            CouplingConfig::SyntheticCat { scale } => (
                CouplingSpec::Matrix {
                    matrix: synthetic_cat_matrix(),
                    scale: *scale,
                },
                "synthetic-hierarchical-64".to_string(),
            ),
        };
        let initial = match self.initial {
            InitialConfig::Ball { center, level } => {
                InitialStateSpec::Ball(BallSpec::new(scheme.cell(center)?, level))
            }
            InitialConfig::Uniform { re, im } => InitialStateSpec::Uniform(Complex64::new(re, im)),
            InitialConfig::Zero => InitialStateSpec::Zero,
        };
        let system = NetworkSystem::new(
            operator,
            self.mode,
            coupling,
            self.bias_signal(&scheme)?,
            self.activation(),
            crate::dynamics::initial_state(initial, &scheme)?,
        )?;
        Ok((system, source))
    }

    /// Flat `key=value` dump of the model parameters (not output settings).
    pub fn effective_parameters(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "p={}", self.p);
        let _ = writeln!(out, "l={}", self.l);
        match &self.kernel {
            KernelConfig::JAlpha { alpha } => {
                let _ = writeln!(out, "kernel=j_alpha");
                let _ = writeln!(out, "alpha={alpha}");
            }
            KernelConfig::Radial { values } => {
                let _ = writeln!(out, "kernel=radial{values:?}");
            }
            KernelConfig::Graph { edges, .. } => {
                let _ = writeln!(out, "kernel=graph({})", edges.display());
            }
        }
        let _ = writeln!(out, "mode={}", self.mode.name());
        let coupling = match &self.coupling {
            CouplingConfig::Zero => "0".to_string(),
            CouplingConfig::Constant { re, im } if *im == 0.0 => format!("constant({re})"),
            CouplingConfig::Constant { re, im } => format!("constant({re}{im:+}i)"),
            CouplingConfig::Matrix { path, scale } => format!("{scale}*file({})", path.display()),
            CouplingConfig::SyntheticCat { scale } => format!("{scale}*W_cat"),
        };
        let _ = writeln!(out, "W={coupling}");
        if self.bias.is_empty() {
            let _ = writeln!(out, "Z=0");
        }
        for (i, b) in self.bias.iter().enumerate() {
            let end = b.end.map_or("inf".to_string(), |e| e.to_string());
            let mask = b.mask.map_or("all".to_string(), |m| {
                format!("ball({},{})", m.center, m.level)
            });
            let _ = writeln!(
                out,
                "Z[{i}]={}*sin({}*pi*t)+{} on [{},{end}) mask={mask}",
                b.amplitude, b.omega, b.offset, b.start
            );
        }
        let initial = match self.initial {
            InitialConfig::Ball { center, level } => format!("ball({center},{level})"),
            InitialConfig::Uniform { re, im } => format!("uniform({re}{im:+}i)"),
            InitialConfig::Zero => "0".to_string(),
        };
        let _ = writeln!(out, "initial={initial}");
        let activation = match self.activation {
            ActivationConfig::Saturation => "saturation",
            ActivationConfig::PaperLiteral => "paper_literal",
            ActivationConfig::Identity => "identity",
        };
        let _ = writeln!(out, "activation={activation}");
        let _ = writeln!(out, "t_end={}", self.plan.t_end);
        let _ = writeln!(out, "dt={}", self.plan.dt);
        out
    }
}

fn require_file(key: &str, path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::config(
            key,
            format!("file not found: {}", path.display()),
        ))
    }
}

fn require_finite(key: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::config(key, format!("must be finite, got {x}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "name": "tiny",
        "p": 3,
        "l": 2,
        "kernel": {"type": "j_alpha", "alpha": 2.5},
        "initial": {"type": "ball", "center": 4, "level": 1},
        "plan": {"t_end": 1.0}
    }"#;

    #[test]
    fn defaults_are_applied() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.plan.dt, 0.001);
        assert_eq!(c.plan.snapshot_stride, 100);
        assert_eq!(c.mode, Mode::Quantum);
        assert_eq!(c.coupling, CouplingConfig::Zero);
        assert_eq!(c.activation, ActivationConfig::Saturation);
        assert!(c.bias.is_empty());
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("\"name\"", "\"colour\": 1, \"name\"");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("unknown field `colour`"), "{err}");
        let text = MINIMAL.replace("\"t_end\": 1.0", "\"t_end\": 1.0, \"step\": 2");
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_config("{\n  \"name\": \"x\",\n  oops\n}")
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn composite_p_is_rejected() {
        let c = parse_config(&MINIMAL.replace("\"p\": 3", "\"p\": 4")).unwrap();
        let err = c.validate().unwrap_err();
        assert!(matches!(&err, Error::Config { key, .. } if key == "p"));
        assert!(err.to_string().contains("p must be prime"));
    }

    #[test]
    fn validation_names_keys() {
        let cases = [
            (MINIMAL.replace("2.5", "1.0"), "kernel.alpha"),
            (
                MINIMAL.replace("\"level\": 1", "\"level\": 3"),
                "initial.level",
            ),
            (MINIMAL.replace("\"t_end\": 1.0", "\"t_end\": -1.0"), "plan"),
            (
                MINIMAL.replace(
                    "\"plan\"",
                    "\"coupling\": {\"type\": \"synthetic_cat\"}, \"plan\"",
                ),
                "coupling",
            ),
        ];
        for (text, want) in cases {
            let err = parse_config(&text).unwrap().validate().unwrap_err();
            assert!(
                matches!(&err, Error::Config { key, .. } if key == want),
                "{want}: {err}"
            );
        }
    }

    #[test]
    fn bias_with_open_end() {
        let text = MINIMAL.replace(
            "\"plan\"",
            "\"bias\": [{\"offset\": 0.5, \"start\": 2, \"end\": null}, {\"amplitude\": 1, \"omega\": 0.1, \"start\": 0, \"end\": 5, \"mask\": {\"center\": 1, \"level\": 1}}], \"plan\"",
        );
        let c = parse_config(&text).unwrap();
        let s = c.scheme().unwrap();
        let z = c.bias_signal(&s).unwrap();
        assert_eq!(z.terms[0].end, f64::INFINITY);
        assert_eq!(z.terms[1].mask, Some(BallSpec::new(s.cell(1).unwrap(), 1)));
    }

    #[test]
    fn missing_matrix_file_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let text = MINIMAL.replace(
            "\"plan\"",
            "\"coupling\": {\"type\": \"matrix\", \"path\": \"nope.csv\"}, \"plan\"",
        );
        let path = dir.path().join("s.json");
        std::fs::write(&path, text).unwrap();
        let err = load_config(&path).unwrap_err().to_string();
        assert!(
            err.contains("nope.csv") && err.contains("coupling.path"),
            "{err}"
        );
    }

    #[test]
    fn round_trip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = parse_config(MINIMAL).unwrap();
        c.bias
            .push(BiasConfig::pulse(1.0, 0.01, 25.0, 50.0).masked(3, 2));
        c.bias.push(BiasConfig::step(0.1, 1225.0));
        c.coupling = CouplingConfig::Constant {
            re: 0.1 + 0.2,
            im: -1e-300,
        };
        c.initial = InitialConfig::Uniform { re: 0.5, im: 0.3 };
        c.output.heatmap = true;
        let path = dir.path().join("c.json");
        save_config(&c, &path).unwrap();
        assert_eq!(load_config(&path).unwrap(), c);
    }

    #[test]
    fn builds_a_system() {
        let (sys, source) = parse_config(MINIMAL).unwrap().build_system().unwrap();
        assert_eq!(sys.size(), 9);
        assert!(sys.is_free());
        assert_eq!(source, "none");
    }
}
