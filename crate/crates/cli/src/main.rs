//! `rpf`: design and analysis of optimal and guaranteed-cost robust filters
//! for optical phase tracking under a resonant noise process.
//!
//! Subcommands write CSV artifacts (and optional SVG plots) into the
//! configured output directory:
//!
//! - `bode`: frequency response of the noise process.
//! - `design`: Kalman gain/covariance, the epsilon scan and the chosen
//!   robust design.
//! - `sweep`: estimation error vs delta1 or delta2 for the robust filter,
//!   the Kalman filter and optionally the per-point dual-homodyne SQL.
//! - `validate`: Monte-Carlo cross-check of the Lyapunov predictions.
//!
//! Exit codes: 0 success, 1 validation/config error (including a failed
//! `validate` run), 2 solver infeasibility, 3 I/O error.

// Domain guards use `!(x > 0.0)` deliberately: unlike `x <= 0.0`, it also
// rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::RunConfig;
use rpf_core::analysis::{self, SweepAxis};
use rpf_core::model::{self, log_spaced};
use rpf_core::sim::{Scheme, SimConfig};
use rpf_core::{filters, validate, Error as CoreError};

#[derive(Parser)]
#[command(name = "rpf", version, about = "Robust phase-tracking filter designer")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Path to a `key = value` config file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out_dir` from the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed (overrides `seed` from the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Also render SVG plots next to the CSV files.
    #[arg(long)]
    svg: bool,
}

#[derive(Copy, Clone, ValueEnum)]
enum AxisArg {
    Delta1,
    Delta2,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write the Bode response of the resonant noise process.
    Bode {
        #[command(flatten)]
        common: Common,
    },
    /// Write the Kalman design, the epsilon scan and the robust design.
    Design {
        #[command(flatten)]
        common: Common,
    },
    /// Sweep one uncertainty axis and compare filters on the realized plant.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Which uncertain parameter to sweep (the other is held at 0).
        #[arg(long, value_enum)]
        axis: AxisArg,
        /// Also compute the dual-homodyne SQL at every grid point.
        #[arg(long)]
        include_sql: bool,
    },
    /// Run the Monte-Carlo validation battery against Lyapunov predictions.
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

enum AppError {
    Config(String),
    Solver(String),
    Io(String),
}

impl AppError {
    fn exit_code(&self) -> u8 {
        match self {
            AppError::Config(_) => 1,
            AppError::Solver(_) => 2,
            AppError::Io(_) => 3,
        }
    }
    fn message(&self) -> &str {
        match self {
            AppError::Config(m) | AppError::Solver(m) | AppError::Io(m) => m,
        }
    }
}

impl From<config::ConfigError> for AppError {
    fn from(e: config::ConfigError) -> Self {
        AppError::Config(e.to_string())
    }
}

impl From<CoreError> for AppError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidParameter(_)
            | CoreError::InvalidInput(_)
            | CoreError::ConstraintViolation { .. }
            | CoreError::InvalidConfig(_) => AppError::Config(e.to_string()),
            _ => AppError::Solver(e.to_string()),
        }
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Io(e.to_string())
    }
}

fn main() -> ExitCode {
    // Route usage errors through the documented exit-code table (1 for
    // anything config-shaped) instead of clap's default.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.exit_code() == 0 { 0 } else { 1 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("rpf: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn load_config(common: &Common) -> Result<RunConfig, AppError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

/// Write every `(name, contents)` pair under the output directory. Files are
/// only written after all computation has succeeded.
fn write_outputs(cfg: &RunConfig, files: &[(String, String)]) -> Result<(), AppError> {
    std::fs::create_dir_all(&cfg.out_dir)?;
    for (name, contents) in files {
        std::fs::write(cfg.out_dir.join(name), contents)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode, AppError> {
    match cli.cmd {
        Cmd::Bode { common } => {
            let cfg = load_config(&common)?;
            cmd_bode(&cfg, common.svg)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Design { common } => {
            let cfg = load_config(&common)?;
            cmd_design(&cfg, common.svg)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Sweep {
            common,
            axis,
            include_sql,
        } => {
            let cfg = load_config(&common)?;
            let axis = match axis {
                AxisArg::Delta1 => SweepAxis::Delta1,
                AxisArg::Delta2 => SweepAxis::Delta2,
            };
            cmd_sweep(&cfg, axis, include_sql, common.svg)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Validate { common } => {
            let cfg = load_config(&common)?;
            let all_pass = cmd_validate(&cfg)?;
            if all_pass {
                Ok(ExitCode::SUCCESS)
            } else {
                Err(AppError::Config(
                    "validation failed: simulation disagrees with Lyapunov prediction".into(),
                ))
            }
        }
    }
}

fn cmd_bode(cfg: &RunConfig, render_svg: bool) -> Result<(), AppError> {
    let params = cfg.params()?;
    let (lo, hi) = cfg.bode_range();
    let grid = log_spaced(lo, hi, cfg.bode_points);
    let resp = model::frequency_response(&params, &grid)?;
    let rows: Vec<(f64, f64, f64)> = grid
        .iter()
        .zip(&resp)
        .map(|(w, (mag, ph))| (*w, *mag, *ph))
        .collect();

    let mut files = vec![("bode.csv".to_string(), output::bode_csv(&rows))];
    if render_svg {
        let mag: Vec<(f64, f64)> = rows.iter().map(|(w, m, _)| (*w, *m)).collect();
        let phase: Vec<(f64, f64)> = rows.iter().map(|(w, _, p)| (*w, *p)).collect();
        let panels = [
            svg::Panel {
                y_label: "magnitude (dB)".into(),
                log_y: false,
                series: vec![svg::Series {
                    label: "|G|".into(),
                    color: svg::COLORS[1],
                    segments: vec![mag],
                }],
            },
            svg::Panel {
                y_label: "phase (deg)".into(),
                log_y: false,
                series: vec![svg::Series {
                    label: "arg G".into(),
                    color: svg::COLORS[0],
                    segments: vec![phase],
                }],
            },
        ];
        files.push((
            "bode.svg".to_string(),
            svg::render("resonant noise frequency response", "omega (rad/s)", true, &panels),
        ));
    }
    write_outputs(cfg, &files)
}

fn cmd_design(cfg: &RunConfig, render_svg: bool) -> Result<(), AppError> {
    let params = cfg.params()?;
    let proc = model::build_process_model(&params)?;
    let meas = model::build_homodyne_measurement(cfg.alpha_mag)?;
    let unc = model::UncertaintyModel::new(&params, cfg.mu1, cfg.mu2)?;

    let kalman = filters::design_kalman(&proc, &meas)?;
    let scan = filters::optimize_epsilon_grid(
        &proc,
        &meas,
        &unc,
        cfg.epsilon_lo,
        cfg.epsilon_hi,
        cfg.epsilon_points,
    )?;
    let robust = filters::design_robust(&proc, &meas, &unc, scan.epsilon_opt)?;

    let p = &kalman.design_cov;
    let q = &robust.design_cov;
    let report = output::DesignReport {
        p: [p[(0, 0)], p[(0, 1)], p[(1, 1)]],
        k: [kalman.f[(0, 0)], kalman.f[(1, 0)]],
        epsilon_opt: scan.epsilon_opt,
        q_plus_opt: scan.q_plus_opt,
        qtilde: [q[(0, 0)], q[(0, 1)], q[(1, 1)]],
        boundary_flag: scan.boundary_flag,
    };

    let mut files = vec![
        ("design.csv".to_string(), output::design_csv(&report)),
        ("eps_scan.csv".to_string(), output::eps_scan_csv(&scan)),
    ];
    if render_svg {
        let feasible: Vec<(f64, f64)> = scan
            .grid
            .iter()
            .filter_map(|(e, q)| q.map(|q| (*e, q)))
            .collect();
        let panels = [svg::Panel {
            y_label: "Q+ (rad^2)".into(),
            log_y: true,
            series: vec![svg::Series {
                label: "Q+ vs epsilon".into(),
                color: svg::COLORS[1],
                segments: vec![feasible],
            }],
        }];
        files.push((
            "eps_scan.svg".to_string(),
            svg::render("guaranteed-cost design value vs epsilon", "epsilon", true, &panels),
        ));
    }
    write_outputs(cfg, &files)
}

fn cmd_sweep(
    cfg: &RunConfig,
    axis: SweepAxis,
    include_sql: bool,
    render_svg: bool,
) -> Result<(), AppError> {
    let params = cfg.params()?;
    let unc = model::UncertaintyModel::new(&params, cfg.mu1, cfg.mu2)?;
    let grid = analysis::uniform_delta_grid(cfg.delta_points);
    let result = analysis::sweep_with_scan(
        &params,
        cfg.alpha_mag,
        &unc,
        axis,
        &grid,
        include_sql,
        cfg.epsilon_lo,
        cfg.epsilon_hi,
        cfg.epsilon_points,
    )?;

    let csv_name = output::sweep_filename(&result);
    let mut files = vec![(csv_name.clone(), output::sweep_csv(&result))];
    if render_svg {
        let segments = |pick: &dyn Fn(&analysis::SweepPoint) -> Option<f64>| {
            let mut segs: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
            for p in &result.points {
                match pick(p) {
                    Some(v) => segs.last_mut().unwrap().push((p.delta, v)),
                    None => {
                        if !segs.last().unwrap().is_empty() {
                            segs.push(Vec::new());
                        }
                    }
                }
            }
            segs
        };
        let mut series = vec![
            svg::Series {
                label: "robust".into(),
                color: svg::COLORS[0],
                segments: segments(&|p| p.sigma2_robust),
            },
            svg::Series {
                label: "kalman".into(),
                color: svg::COLORS[1],
                segments: segments(&|p| p.sigma2_kalman),
            },
        ];
        if include_sql {
            series.push(svg::Series {
                label: "sql".into(),
                color: svg::COLORS[2],
                segments: segments(&|p| p.sigma2_sql),
            });
        }
        let panels = [svg::Panel {
            y_label: "sigma^2 (rad^2)".into(),
            log_y: true,
            series,
        }];
        files.push((
            csv_name.replace(".csv", ".svg"),
            svg::render(
                &format!("estimation error vs {} (mu1={}, mu2={})", result.axis, result.mu1, result.mu2),
                &format!("{}", result.axis),
                false,
                &panels,
            ),
        ));
    }
    write_outputs(cfg, &files)
}

fn cmd_validate(cfg: &RunConfig) -> Result<bool, AppError> {
    let params = cfg.params()?;
    let sim_cfg = SimConfig {
        dt: cfg.dt,
        t_settle: cfg.t_settle,
        t_measure: cfg.t_measure,
        seed: cfg.seed,
        scheme: Scheme::EulerMaruyama,
    };
    let rows = validate::run(&params, cfg.alpha_mag, &sim_cfg)?;
    print!("{}", output::validate_table(&rows));
    let files = [("validate.csv".to_string(), output::validate_csv(&rows))];
    write_outputs(cfg, &files)?;
    Ok(rows.iter().all(|r| r.pass))
}
