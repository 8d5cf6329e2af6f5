//! Command-line driver: `run`, `picard`, `convergence`, and `diagnose`
//! subcommands over the solver library.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical
//! failure (blow-up or a diverging fixed-point iteration), 3 I/O failure.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use maxschro::config::{parse_config, Config};
use maxschro::diagnostics::{self, DiagnosticRecord};
use maxschro::init::make_initial_data;
use maxschro::integrators::{evolve, EvolveOpts, Integrator, Trajectory};
use maxschro::physics::{PhysParams, State};
use maxschro::picard::{picard_solve, PicardOpts};
use maxschro::snapshot::{read_snapshot, write_snapshot};
use maxschro::timeseries::write_timeseries;
use maxschro::{Grid, MsError};

#[derive(Parser)]
#[command(name = "maxschro", version, about = "Pseudo-spectral Maxwell-Schrodinger solver")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evolve the configured initial data, writing CSV diagnostics and
    /// binary snapshots.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Solve by fixed-point iteration of the Duhamel map and write the
    /// convergence report.
    Picard {
        #[arg(long)]
        config: PathBuf,
    },
    /// Time-step refinement study: fitted orders for both integrators and
    /// for the modified-energy identity residual.
    Convergence {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Load snapshots matching a glob and emit their diagnostic records.
    Diagnose {
        #[arg(long)]
        snapshots: String,
        #[arg(long)]
        out: PathBuf,
        /// Regularity index for the norm diagnostics.
        #[arg(long, default_value_t = 1.5)]
        sigma: f64,
    },
}

/// Entry point shared by the binary and the tests.
pub fn cli_main(args: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return 1;
        }
    };
    let result = match cli.cmd {
        Cmd::Run { config } => cmd_run(&config),
        Cmd::Picard { config } => cmd_picard(&config),
        Cmd::Convergence { config, levels } => cmd_convergence(&config, levels),
        Cmd::Diagnose {
            snapshots,
            out,
            sigma,
        } => cmd_diagnose(&snapshots, &out, sigma),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &MsError) -> i32 {
    match e {
        MsError::BlowUp { .. } | MsError::NotSolenoidal { .. } => 2,
        MsError::Io(_) | MsError::Snapshot(_) => 3,
        _ => 1,
    }
}

fn load_config(path: &Path) -> Result<Config, MsError> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

fn prepare(cfg: &Config) -> Result<(std::sync::Arc<Grid>, State), MsError> {
    let grid = Grid::new(cfg.grid_n, cfg.grid_l)?;
    let state = make_initial_data(&cfg.init, &grid)?;
    Ok((grid, state))
}

fn csv_path(cfg: &Config) -> PathBuf {
    let p = Path::new(&cfg.io.csv_path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        Path::new(&cfg.io.output_dir).join(p)
    }
}

fn cmd_run(config: &Path) -> Result<i32, MsError> {
    let cfg = load_config(config)?;
    let (_grid, s0) = prepare(&cfg)?;
    std::fs::create_dir_all(&cfg.io.output_dir)?;
    let traj = evolve(&s0, &cfg.phys, &cfg.evolve_opts())?;
    write_timeseries(&traj.records, &csv_path(&cfg))?;
    for (i, s) in traj.samples.iter().enumerate() {
        let name = format!("{}_{:06}.msf", cfg.io.snapshot_prefix, i);
        write_snapshot(s, cfg.phys.gamma, &Path::new(&cfg.io.output_dir).join(name))?;
    }
    if let Some(t) = traj.blow_up {
        eprintln!("blow-up signaled at t = {t}; partial trajectory written");
        return Ok(2);
    }
    println!(
        "run finished: {} snapshots over t in [0, {}]",
        traj.samples.len(),
        cfg.t_end
    );
    Ok(0)
}

fn cmd_picard(config: &Path) -> Result<i32, MsError> {
    let cfg = load_config(config)?;
    let (_grid, s0) = prepare(&cfg)?;
    std::fs::create_dir_all(&cfg.io.output_dir)?;
    let opts = PicardOpts {
        substeps: cfg.picard.substeps,
        tol: cfg.picard.tol,
        max_iter: cfg.picard.max_iter,
        dealias: cfg.dealias,
    };
    let (_, report) = picard_solve(&s0, &cfg.phys, cfg.picard.t_end, cfg.picard.samples, &opts)?;

    let path = Path::new(&cfg.io.output_dir).join("picard_report.csv");
    let mut f = File::create(&path)?;
    writeln!(f, "iterate,d_distance,contraction_factor,radius_u,radius_a")?;
    for i in 0..report.iterates {
        let factor = if i == 0 {
            f64::NAN
        } else {
            *report.contraction_factors.get(i - 1).unwrap_or(&f64::NAN)
        };
        writeln!(
            f,
            "{},{:.16e},{:.16e},{:.16e},{:.16e}",
            i + 1,
            report.d_distances[i],
            factor,
            report.radii_u[i],
            report.radii_a[i],
        )?;
    }
    println!(
        "picard: {} iterates, converged = {}, report at {}",
        report.iterates,
        report.converged,
        path.display()
    );
    if report.converged {
        Ok(0)
    } else {
        eprintln!("fixed-point iteration did not converge (diverged = {})", report.diverged);
        Ok(2)
    }
}

fn state_distance(a: &State, b: &State) -> f64 {
    let minus_one = maxschro::num_complex::Complex64::new(-1.0, 0.0);
    let du = a.u.add_scaled(minus_one, &b.u).expect("grids match").l2_norm();
    let da = a.a.add_scaled(-1.0, &b.a).expect("grids match").l2_norm();
    let dt = a.at.add_scaled(-1.0, &b.at).expect("grids match").l2_norm();
    du + da + dt
}

/// Largest centered-difference residual of the modified-energy identity over
/// the interior records of a trajectory.
pub fn e2_identity_residual(traj: &Trajectory) -> f64 {
    let r = &traj.records;
    let mut worst: f64 = 0.0;
    for i in 1..r.len().saturating_sub(1) {
        let dt = r[i + 1].t - r[i - 1].t;
        if dt <= 0.0 || !r[i].e2_rhs.is_finite() {
            continue;
        }
        let fd = (r[i + 1].e2 - r[i - 1].e2) / dt;
        worst = worst.max((fd - r[i].e2_rhs).abs());
    }
    worst
}

fn fit_order(errors: &[f64], dts: &[f64]) -> f64 {
    // least-squares slope of log(err) against log(dt); NaN when the errors
    // sit at roundoff (an exact method)
    let pairs: Vec<(f64, f64)> = errors
        .iter()
        .zip(dts)
        .filter(|(e, _)| **e > 1e-14)
        .map(|(e, d)| (d.ln(), e.ln()))
        .collect();
    if pairs.len() < 2 {
        return f64::NAN;
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|(x, _)| x).sum::<f64>() / n;
    let my = pairs.iter().map(|(_, y)| y).sum::<f64>() / n;
    let sxx: f64 = pairs.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    let sxy: f64 = pairs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    sxy / sxx
}

fn cmd_convergence(config: &Path, levels: usize) -> Result<i32, MsError> {
    if levels < 2 {
        return Err(MsError::InvalidParam(
            "convergence study needs at least 2 levels".into(),
        ));
    }
    let cfg = load_config(config)?;
    let (_grid, s0) = prepare(&cfg)?;
    std::fs::create_dir_all(&cfg.io.output_dir)?;

    let dts: Vec<f64> = (0..=levels).map(|j| cfg.dt / (1u64 << j) as f64).collect();
    let mut finals: Vec<Vec<State>> = vec![Vec::new(); 2];
    let mut e2_resid: Vec<f64> = Vec::new();
    for (lvl, &dt) in dts.iter().enumerate() {
        for (slot, integ) in [Integrator::Rk4, Integrator::Splitting].iter().enumerate() {
            let opts = EvolveOpts {
                dt,
                integrator: *integ,
                ..cfg.evolve_opts()
            };
            let traj = evolve(&s0, &cfg.phys, &opts)?;
            if let Some(t) = traj.blow_up {
                return Err(MsError::BlowUp { t });
            }
            if *integ == Integrator::Rk4 && lvl < levels {
                e2_resid.push(e2_identity_residual(&traj));
            }
            finals[slot].push(traj.samples.last().unwrap().clone());
        }
    }

    let mut err_rk4 = Vec::new();
    let mut err_split = Vec::new();
    for j in 0..levels {
        err_rk4.push(state_distance(&finals[0][j], &finals[0][j + 1]));
        err_split.push(state_distance(&finals[1][j], &finals[1][j + 1]));
    }
    let order_rk4 = fit_order(&err_rk4, &dts[..levels]);
    let order_split = fit_order(&err_split, &dts[..levels]);
    let order_e2 = fit_order(&e2_resid, &dts[..levels]);

    let lvl_path = Path::new(&cfg.io.output_dir).join("convergence.csv");
    let mut f = File::create(&lvl_path)?;
    writeln!(f, "level,dt,err_rk4,err_splitting,e2_residual")?;
    for j in 0..levels {
        writeln!(
            f,
            "{},{:.16e},{:.16e},{:.16e},{:.16e}",
            j, dts[j], err_rk4[j], err_split[j], e2_resid[j]
        )?;
    }

    let ord_path = Path::new(&cfg.io.output_dir).join("orders.csv");
    let mut f = File::create(&ord_path)?;
    writeln!(f, "quantity,fitted_order")?;
    writeln!(f, "rk4,{order_rk4:.6}")?;
    writeln!(f, "splitting,{order_split:.6}")?;
    writeln!(f, "e2_identity,{order_e2:.6}")?;

    println!(
        "fitted orders: rk4 = {order_rk4:.3}, splitting = {order_split:.3}, e2 identity = {order_e2:.3}"
    );
    Ok(0)
}

fn cmd_diagnose(pattern: &str, out: &Path, sigma: f64) -> Result<i32, MsError> {
    let paths = expand_glob(pattern)?;
    if paths.is_empty() {
        return Err(MsError::InvalidParam(format!(
            "no snapshots match '{pattern}'"
        )));
    }
    let mut loaded = Vec::new();
    for p in &paths {
        let (state, meta) = read_snapshot(p)?;
        loaded.push((state, meta));
    }
    loaded.sort_by(|a, b| a.1.t.partial_cmp(&b.1.t).expect("finite times"));
    let mut records: Vec<DiagnosticRecord> = Vec::new();
    for (state, meta) in &loaded {
        let phys = PhysParams::new(meta.gamma, sigma)?;
        records.push(diagnostics::compute_record(state, &phys, true)?);
    }
    if let Some(dir) = out.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    write_timeseries(&records, out)?;
    println!("diagnosed {} snapshots into {}", records.len(), out.display());
    Ok(0)
}

/// Minimal glob support: `*` wildcards in the final path component.
fn expand_glob(pattern: &str) -> Result<Vec<PathBuf>, MsError> {
    let p = Path::new(pattern);
    let (dir, name) = match (p.parent(), p.file_name()) {
        (Some(d), Some(f)) => {
            let d = if d.as_os_str().is_empty() {
                Path::new(".")
            } else {
                d
            };
            (d, f.to_string_lossy().into_owned())
        }
        _ => (Path::new("."), pattern.to_string()),
    };
    if !name.contains('*') {
        return Ok(vec![p.to_path_buf()]);
    }
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let entry = entry?;
        let fname = entry.file_name().to_string_lossy().into_owned();
        if wildcard_match(&name, &fname) {
            out.push(entry.path());
        }
    }
    out.sort();
    Ok(out)
}

fn wildcard_match(pattern: &str, text: &str) -> bool {
    // classic two-pointer '*' matcher
    let p: Vec<char> = pattern.chars().collect();
    let t: Vec<char> = text.chars().collect();
    let (mut pi, mut ti) = (0usize, 0usize);
    let (mut star, mut mark) = (None::<usize>, 0usize);
    while ti < t.len() {
        if pi < p.len() && (p[pi] == t[ti]) {
            pi += 1;
            ti += 1;
        } else if pi < p.len() && p[pi] == '*' {
            star = Some(pi);
            mark = ti;
            pi += 1;
        } else if let Some(s) = star {
            pi = s + 1;
            mark += 1;
            ti = mark;
        } else {
            return false;
        }
    }
    while pi < p.len() && p[pi] == '*' {
        pi += 1;
    }
    pi == p.len()
}
