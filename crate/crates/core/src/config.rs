//! TOML configuration: parsing with line information, strict key checking,
//! and range validation that reports every offending key.

use serde::Deserialize;

use crate::error::MsError;
use crate::init::InitSpec;
use crate::integrators::{EvolveOpts, Integrator};
use crate::physics::{PhysParams, SIGMA_MAX, SIGMA_MIN};
use crate::Result;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    grid: GridSection,
    phys: PhysSection,
    run: RunSection,
    #[serde(default)]
    init: InitSpec,
    #[serde(default)]
    io: IoSection,
    #[serde(default)]
    picard: PicardSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    #[serde(rename = "N")]
    n: i64,
    #[serde(rename = "L")]
    l: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PhysSection {
    gamma: f64,
    sigma: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    dt: f64,
    #[serde(rename = "T")]
    t_end: f64,
    #[serde(default = "default_integrator")]
    integrator: String,
    #[serde(default = "default_snapshot_every")]
    snapshot_every: i64,
    #[serde(default = "default_dealias")]
    dealias: bool,
    #[serde(default = "default_cfl_bound")]
    cfl_bound: f64,
}

fn default_integrator() -> String {
    "rk4".into()
}
fn default_snapshot_every() -> i64 {
    10
}
fn default_dealias() -> bool {
    true
}
fn default_cfl_bound() -> f64 {
    2.8
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoSection {
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    #[serde(default = "default_csv_path")]
    pub csv_path: String,
    #[serde(default = "default_snapshot_prefix")]
    pub snapshot_prefix: String,
}

fn default_output_dir() -> String {
    "out".into()
}
fn default_csv_path() -> String {
    "diagnostics.csv".into()
}
fn default_snapshot_prefix() -> String {
    "snap".into()
}

impl Default for IoSection {
    fn default() -> Self {
        IoSection {
            output_dir: default_output_dir(),
            csv_path: default_csv_path(),
            snapshot_prefix: default_snapshot_prefix(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardSection {
    #[serde(rename = "T", default = "default_picard_t")]
    pub t_end: f64,
    #[serde(default = "default_picard_tol")]
    pub tol: f64,
    #[serde(default = "default_picard_max_iter")]
    pub max_iter: i64,
    #[serde(default = "default_picard_substeps")]
    pub substeps: i64,
    /// Sampling intervals over the Picard horizon; 0 derives the count from
    /// the run time step.
    #[serde(default)]
    pub samples: i64,
}

fn default_picard_t() -> f64 {
    0.05
}
fn default_picard_tol() -> f64 {
    1e-8
}
fn default_picard_max_iter() -> i64 {
    25
}
fn default_picard_substeps() -> i64 {
    4
}

impl Default for PicardSection {
    fn default() -> Self {
        PicardSection {
            t_end: default_picard_t(),
            tol: default_picard_tol(),
            max_iter: default_picard_max_iter(),
            substeps: default_picard_substeps(),
            samples: 0,
        }
    }
}

/// Validated configuration with defaults resolved.
#[derive(Debug)]
pub struct Config {
    pub grid_n: usize,
    pub grid_l: f64,
    pub phys: PhysParams,
    pub dt: f64,
    pub t_end: f64,
    pub integrator: Integrator,
    pub snapshot_every: usize,
    pub dealias: bool,
    pub cfl_bound: f64,
    pub init: InitSpec,
    pub io: IoSection,
    pub picard: PicardConfig,
}

#[derive(Clone, Copy, Debug)]
pub struct PicardConfig {
    pub t_end: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub substeps: usize,
    pub samples: usize,
}

impl Config {
    pub fn evolve_opts(&self) -> EvolveOpts {
        EvolveOpts {
            dt: self.dt,
            t_end: self.t_end,
            integrator: self.integrator,
            snapshot_every: self.snapshot_every,
            dealias: self.dealias,
            cfl_bound: self.cfl_bound,
            keep_samples: true,
        }
    }
}

/// Parses and validates a TOML configuration document. Parse errors carry
/// line information; range violations list every offending key.
pub fn parse_config(text: &str) -> Result<Config> {
    let file: ConfigFile =
        toml::from_str(text).map_err(|e| MsError::Config(e.to_string()))?;

    let mut violations: Vec<String> = Vec::new();
    let mut check = |ok: bool, msg: String| {
        if !ok {
            violations.push(msg);
        }
    };

    check(
        file.grid.n >= 4 && file.grid.n % 2 == 0,
        format!("grid.N: must be even and at least 4, got {}", file.grid.n),
    );
    check(
        file.grid.l > 0.0 && file.grid.l.is_finite(),
        format!("grid.L: must be positive, got {}", file.grid.l),
    );
    check(
        file.phys.gamma > 1.0,
        format!("phys.gamma: must exceed 1, got {}", file.phys.gamma),
    );
    check(
        file.phys.sigma >= SIGMA_MIN && file.phys.sigma < SIGMA_MAX,
        format!(
            "phys.sigma: must lie in the admissible range [4/3, 3), got {}",
            file.phys.sigma
        ),
    );
    check(
        file.run.dt > 0.0 && file.run.dt.is_finite(),
        format!("run.dt: must be positive, got {}", file.run.dt),
    );
    check(
        file.run.t_end >= 0.0 && file.run.t_end.is_finite(),
        format!("run.T: must be nonnegative, got {}", file.run.t_end),
    );
    check(
        file.run.snapshot_every >= 1,
        format!(
            "run.snapshot_every: must be at least 1, got {}",
            file.run.snapshot_every
        ),
    );
    check(
        file.run.cfl_bound > 0.0,
        format!("run.cfl_bound: must be positive, got {}", file.run.cfl_bound),
    );
    let integrator = file.run.integrator.parse::<Integrator>();
    check(
        integrator.is_ok(),
        format!(
            "run.integrator: expected rk4 or splitting, got '{}'",
            file.run.integrator
        ),
    );
    check(
        file.picard.t_end > 0.0,
        format!("picard.T: must be positive, got {}", file.picard.t_end),
    );
    check(
        file.picard.tol > 0.0,
        format!("picard.tol: must be positive, got {}", file.picard.tol),
    );
    check(
        file.picard.max_iter >= 1,
        format!("picard.max_iter: must be at least 1, got {}", file.picard.max_iter),
    );
    check(
        file.picard.substeps >= 1,
        format!("picard.substeps: must be at least 1, got {}", file.picard.substeps),
    );
    check(
        file.picard.samples >= 0,
        format!("picard.samples: must be nonnegative, got {}", file.picard.samples),
    );

    if !violations.is_empty() {
        return Err(MsError::ConfigRanges(violations));
    }

    let picard_samples = if file.picard.samples > 0 {
        file.picard.samples as usize
    } else {
        ((file.picard.t_end / file.run.dt).round() as usize).max(1)
    };

    Ok(Config {
        grid_n: file.grid.n as usize,
        grid_l: file.grid.l,
        phys: PhysParams::new(file.phys.gamma, file.phys.sigma)?,
        dt: file.run.dt,
        t_end: file.run.t_end,
        integrator: integrator.expect("validated above"),
        snapshot_every: file.run.snapshot_every as usize,
        dealias: file.run.dealias,
        cfl_bound: file.run.cfl_bound,
        init: file.init,
        io: file.io,
        picard: PicardConfig {
            t_end: file.picard.t_end,
            tol: file.picard.tol,
            max_iter: file.picard.max_iter as usize,
            substeps: file.picard.substeps as usize,
            samples: picard_samples,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [grid]
        N = 16
        L = 6.283185307179586
        [phys]
        gamma = 2.5
        sigma = 1.5
        [run]
        dt = 1e-3
        T = 0.1
    "#;

    #[test]
    fn minimal_document_fills_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.grid_n, 16);
        assert_eq!(c.integrator, Integrator::Rk4);
        assert_eq!(c.snapshot_every, 10);
        assert!(c.dealias);
        assert_eq!(c.io.output_dir, "out");
        assert_eq!(c.picard.max_iter, 25);
        // picard sampling derived from run.dt
        assert_eq!(c.picard.samples, 50);
    }

    #[test]
    fn gamma_at_one_is_rejected() {
        let doc = MINIMAL.replace("gamma = 2.5", "gamma = 1.0");
        match parse_config(&doc) {
            Err(MsError::ConfigRanges(v)) => {
                assert!(v.iter().any(|m| m.contains("phys.gamma")));
            }
            other => panic!("expected range violation, got {other:?}"),
        }
    }

    #[test]
    fn sigma_out_of_range_cites_the_admissible_interval() {
        let doc = MINIMAL.replace("sigma = 1.5", "sigma = 3.5");
        match parse_config(&doc) {
            Err(MsError::ConfigRanges(v)) => {
                assert!(v.iter().any(|m| m.contains("[4/3, 3)")), "{v:?}");
            }
            other => panic!("expected range violation, got {other:?}"),
        }
    }

    #[test]
    fn every_offending_key_is_listed() {
        let doc = r#"
            [grid]
            N = 7
            L = -1.0
            [phys]
            gamma = 0.5
            sigma = 5.0
            [run]
            dt = -1e-3
            T = 0.1
        "#;
        match parse_config(doc) {
            Err(MsError::ConfigRanges(v)) => {
                for key in ["grid.N", "grid.L", "phys.gamma", "phys.sigma", "run.dt"] {
                    assert!(v.iter().any(|m| m.contains(key)), "missing {key}: {v:?}");
                }
            }
            other => panic!("expected range violations, got {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let doc = format!("{MINIMAL}\n[run.extra]\nfoo = 1\n");
        assert!(parse_config(&doc).is_err());
        let doc = MINIMAL.replace("dt = 1e-3", "dt = 1e-3\nwild_key = 3");
        assert!(parse_config(&doc).is_err());
    }

    #[test]
    fn parse_errors_carry_line_information() {
        let doc = "[grid\nN = 16";
        match parse_config(doc) {
            Err(MsError::Config(msg)) => assert!(msg.contains("line"), "{msg}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn init_section_round_trips() {
        let doc = format!(
            "{MINIMAL}
            [init.u]
            kind = \"gaussian_u\"
            amplitude = 0.5
            width = 0.785
            center = [3.14, 3.14, 3.14]
            phase_k = [1, 0, 0]
            [init.a]
            kind = \"mode_A\"
            k = [0, 0, 1]
            polarization = [0.0, 1.0, 0.0]
            amplitude = 0.1
            [init.at]
            kind = \"zero\"
        "
        );
        let c = parse_config(&doc).unwrap();
        match &c.init.u {
            crate::init::UInit::Gaussian { amplitude, .. } => assert_eq!(*amplitude, 0.5),
            other => panic!("unexpected u init {other:?}"),
        }
        match &c.init.a {
            crate::init::AInit::Mode { k, .. } => assert_eq!(*k, [0, 0, 1]),
            other => panic!("unexpected a init {other:?}"),
        }
    }
}
