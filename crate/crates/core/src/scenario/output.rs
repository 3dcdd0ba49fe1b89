//! CSV and PGM writers, and the scenario runner.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::analysis::density;
use crate::error::{Error, Result};
use crate::evolution::{evolve_recording, Trajectory};

use super::config::ScenarioConfig;

pub const NORMS_FILE: &str = "norms.csv";
pub const FIELD_FILE: &str = "field.csv";
pub const HEATMAP_FILE: &str = "heatmap.pgm";
pub const PARAMETERS_FILE: &str = "parameters.txt";

/// Prefix of the marker line appended to `norms.csv` after a blow-up.
pub const FAILURE_MARKER: &str = "# blow-up at t=";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BLOW_UP: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Process exit code for an error.
pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::BlowUp { .. } => EXIT_BLOW_UP,
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub name: String,
    pub steps: usize,
    pub final_time: f64,
    pub final_norm_sq: f64,
    pub min_density: f64,
    pub max_density: f64,
    pub wall_time_s: f64,
    pub coupling_source: String,
    pub blow_up: Option<f64>,
    pub files: Vec<PathBuf>,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.blow_up.is_some() {
            EXIT_BLOW_UP
        } else {
            EXIT_OK
        }
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario={}", self.name);
        let _ = writeln!(
            out,
            "status={}",
            if self.blow_up.is_some() {
                "blow-up"
            } else {
                "ok"
            }
        );
        if let Some(t) = self.blow_up {
            let _ = writeln!(out, "blow_up_time={t:?}");
        }
        let _ = writeln!(out, "steps={}", self.steps);
        let _ = writeln!(out, "final_time={:?}", self.final_time);
        let _ = writeln!(out, "final_norm_sq={:?}", self.final_norm_sq);
        let _ = writeln!(out, "min_density={:?}", self.min_density);
        let _ = writeln!(out, "max_density={:?}", self.max_density);
        let _ = writeln!(out, "coupling_source={}", self.coupling_source);
        let _ = writeln!(out, "wall_time_s={:.3}", self.wall_time_s);
        out
    }
}

/// Builds, integrates and writes one scenario into `out_dir`. A blow-up is
/// not an error here: the partial outputs are written and the report
/// carries the failure time.
pub fn run_scenario(config: &ScenarioConfig, out_dir: &Path) -> Result<RunReport> {
    let (system, coupling_source) = config.build_system()?;
    let started = Instant::now();
    let trajectory = evolve_recording(&system, &config.integration_plan())?;
    let wall_time_s = started.elapsed().as_secs_f64();
    if let Some(t) = trajectory.blow_up {
        log::error!("{}: blow-up at t = {t}", config.name);
    }

    let mut files = emit_outputs(&trajectory, config, out_dir)?;
    let params = out_dir.join(PARAMETERS_FILE);
    let text = format!(
        "{}coupling_source={coupling_source}\n",
        config.effective_parameters()
    );
    std::fs::write(&params, text).map_err(|e| Error::io(&params, e))?;
    files.push(params);

    let final_density = density(&trajectory.final_state);
    Ok(RunReport {
        name: config.name.clone(),
        steps: trajectory.times.len().saturating_sub(1),
        final_time: trajectory.final_time(),
        final_norm_sq: trajectory.norm_sq.last().copied().unwrap_or(0.0),
        min_density: final_density.iter().copied().fold(f64::INFINITY, f64::min),
        max_density: final_density.iter().copied().fold(0.0, f64::max),
        wall_time_s,
        coupling_source,
        blow_up: trajectory.blow_up,
        files,
    })
}

/// Writes `norms.csv`, `field.csv` and, when enabled, `heatmap.pgm`.
/// Numbers use the shortest representation that round-trips exactly.
pub fn emit_outputs(
    trajectory: &Trajectory,
    config: &ScenarioConfig,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    if trajectory.times.is_empty() {
        log::warn!("{}: empty trajectory, writing headers only", config.name);
    }
    let n = config.scheme()?.size();
    let mut files = Vec::new();

    let path = out_dir.join(NORMS_FILE);
    write_file(&path, |w| {
        writeln!(w, "t,norm_sq")?;
        for (t, n2) in trajectory.times.iter().zip(&trajectory.norm_sq) {
            writeln!(w, "{t:?},{n2:?}")?;
        }
        if let Some(t) = trajectory.blow_up {
            writeln!(w, "{FAILURE_MARKER}{t:?}")?;
        }
        Ok(())
    })?;
    files.push(path);

    let path = out_dir.join(FIELD_FILE);
    write_file(&path, |w| {
        write!(w, "t")?;
        for i in 0..n {
            write!(w, ",cell_{i}")?;
        }
        writeln!(w)?;
        for snap in &trajectory.snapshots {
            write!(w, "{:?}", snap.time)?;
            for d in &snap.density {
                write!(w, ",{d:?}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    })?;
    files.push(path);

    if config.output.heatmap {
        let path = out_dir.join(HEATMAP_FILE);
        let bytes = heatmap_pgm(trajectory, n);
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        files.push(path);
    }
    Ok(files)
}

/// Binary PGM with one row per snapshot (time increasing downward) and one
/// column per cell, gray level linear from 0 to the largest density of the
/// trajectory. An all-zero trajectory renders black.
pub fn heatmap_pgm(trajectory: &Trajectory, width: usize) -> Vec<u8> {
    let height = trajectory.snapshots.len();
    let max = trajectory.max_density();
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    for snap in &trajectory.snapshots {
        out.extend(snap.density.iter().map(|&d| {
            if max > 0.0 {
                (d / max * 255.0).round().clamp(0.0, 255.0) as u8
            } else {
                0
            }
        }));
    }
    out
}

fn write_file(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w)
        .and_then(|()| w.flush())
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::Snapshot;
    use crate::scenario::{parse_config, preset, Horizon};

    fn tiny() -> ScenarioConfig {
        parse_config(
            r#"{"name": "tiny", "p": 2, "l": 2,
                "kernel": {"type": "j_alpha", "alpha": 2.5},
                "initial": {"type": "ball", "center": 1, "level": 2},
                "plan": {"t_end": 0.01, "dt": 0.001, "snapshot_stride": 5},
                "output": {"heatmap": true}}"#,
        )
        .unwrap()
    }

    fn empty() -> Trajectory {
        Trajectory {
            times: vec![],
            norm_sq: vec![],
            snapshots: vec![],
            final_state: vec![],
            blow_up: None,
        }
    }

    #[test]
    fn csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let report = run_scenario(&tiny(), dir.path()).unwrap();
        assert_eq!(report.exit_code(), 0);
        assert_eq!(report.steps, 10);
        let norms = std::fs::read_to_string(dir.path().join(NORMS_FILE)).unwrap();
        let lines: Vec<&str> = norms.lines().collect();
        assert_eq!(lines[0], "t,norm_sq");
        assert_eq!(lines.len(), 12);
        assert!(lines[1].starts_with("0.0,"));
        let field = std::fs::read_to_string(dir.path().join(FIELD_FILE)).unwrap();
        let lines: Vec<&str> = field.lines().collect();
        assert_eq!(lines[0], "t,cell_0,cell_1,cell_2,cell_3");
        assert_eq!(lines[1], "0.0,0.0,4.0,0.0,0.0");
        assert_eq!(lines.len(), 4);
        let params = std::fs::read_to_string(dir.path().join(PARAMETERS_FILE)).unwrap();
        assert!(params.contains("coupling_source=none"));
    }

    #[test]
    fn heatmap_dimensions_and_scaling() {
        let dir = tempfile::tempdir().unwrap();
        run_scenario(&tiny(), dir.path()).unwrap();
        let bytes = std::fs::read(dir.path().join(HEATMAP_FILE)).unwrap();
        let header = b"P5\n4 3\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(bytes.len(), header.len() + 12);
        assert_eq!(&bytes[header.len()..header.len() + 4], &[0, 255, 0, 0]);

        let mut flat = empty();
        flat.snapshots = vec![
            Snapshot {
                time: 0.0,
                density: vec![0.5; 3],
                state: None,
            },
            Snapshot {
                time: 1.0,
                density: vec![0.5; 3],
                state: None,
            },
        ];
        assert_eq!(&heatmap_pgm(&flat, 3)[11..], &[255; 6]);
        flat.snapshots.iter_mut().for_each(|s| s.density.fill(0.0));
        assert_eq!(&heatmap_pgm(&flat, 3)[11..], &[0; 6]);
    }

    #[test]
    fn empty_trajectory_writes_headers() {
        let dir = tempfile::tempdir().unwrap();
        emit_outputs(&empty(), &tiny(), dir.path()).unwrap();
        assert_eq!(
            std::fs::read_to_string(dir.path().join(NORMS_FILE)).unwrap(),
            "t,norm_sq\n"
        );
        let field = std::fs::read_to_string(dir.path().join(FIELD_FILE)).unwrap();
        assert_eq!(field.lines().count(), 1);
        assert_eq!(
            std::fs::read(dir.path().join(HEATMAP_FILE)).unwrap(),
            b"P5\n4 0\n255\n"
        );
    }

    #[test]
    fn blow_up_leaves_marker_and_exit_code() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = tiny();
        config.mode = crate::dynamics::Mode::Classical;
        config.activation = super::super::config::ActivationConfig::Identity;
        config.coupling = super::super::config::CouplingConfig::Constant {
            re: 5000.0,
            im: 0.0,
        };
        config.plan.t_end = 5.0;
        config.plan.dt = 0.01;
        let report = run_scenario(&config, dir.path()).unwrap();
        assert_eq!(report.exit_code(), EXIT_BLOW_UP);
        let norms = std::fs::read_to_string(dir.path().join(NORMS_FILE)).unwrap();
        assert!(norms.lines().last().unwrap().starts_with(FAILURE_MARKER));
        assert!(report.summary().contains("status=blow-up"));
    }

    #[test]
    fn unwritable_output_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        let err = run_scenario(&tiny(), &blocker.join("sub")).unwrap_err();
        assert_eq!(exit_code(&err), EXIT_IO);
        assert!(err.to_string().contains("file"));
    }

    #[test]
    fn config_errors_map_to_exit_2() {
        let mut c = preset("sim1", Horizon::Desk, None).unwrap();
        c.p = 9;
        assert_eq!(
            exit_code(&run_scenario(&c, Path::new("unused")).unwrap_err()),
            EXIT_CONFIG
        );
    }
}
