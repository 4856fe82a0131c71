//! Command-line front end: runs experiments, writes CSV/SVG artifacts, and
//! exposes the invariant suites as a health check.

mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use mm_kinetics::config;
use mm_kinetics::experiments::{convergence_study, limit_path, mean_slow_path, occupation_study};
use mm_kinetics::export;
use mm_kinetics::fclt::{simulate_fclt_sde, summarize, FcltParams};
use mm_kinetics::model::ExperimentConfig;
use mm_kinetics::ssa::simulate;
use mm_kinetics::tqssa::{solve_det_sqssa, solve_det_tqssa};
use mm_kinetics::verification;

#[derive(Parser)]
#[command(
    name = "mmk",
    version,
    about = "Simulate the stochastic Michaelis-Menten system and verify its limit models"
)]
struct Cli {
    /// Key-value config file; defaults apply for missing keys.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory; falls back to $MM_OUT_DIR, then the current directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Master seed override.
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,
    /// Scale override; commands taking a single scale reject lists.
    #[arg(
        long,
        global = true,
        value_name = "INT[,INT...]",
        value_delimiter = ','
    )]
    n: Option<Vec<u64>>,
    /// Replica-count override.
    #[arg(long, global = true, value_name = "INT")]
    replicas: Option<usize>,
    /// Horizon override.
    #[arg(long = "t-end", global = true, value_name = "REAL")]
    t_end: Option<f64>,
    /// Worker-thread override; 0 means all available.
    #[arg(long, global = true, value_name = "INT")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run jump-process replicas and write grid-sampled trajectories.
    Simulate {
        /// Write every jump instead of grid samples.
        #[arg(long)]
        jumps: bool,
    },
    /// Solve the three reduced deterministic models on the output grid.
    Limit,
    /// Sample the limiting fluctuation SDE and summarize its moments.
    Fluctuate,
    /// Accumulate occupation measures and their concentration fractions.
    Occupation,
    /// Measure sup-norm errors across scales and fit the decay rate.
    Convergence,
    /// Run every invariant suite; exit nonzero if any check fails.
    Verify,
    /// Rebuild the reference overlay of mean jump path and its limit.
    ReproduceFig1,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let mut cfg = match &cli.config {
        Some(path) => {
            config::from_file(path).with_context(|| format!("loading config {}", path.display()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    if let Some(replicas) = cli.replicas {
        cfg.replicas = replicas;
    }
    if let Some(t_end) = cli.t_end {
        cfg.t_end = t_end;
    }
    if let Some(threads) = cli.threads {
        cfg.threads = threads;
    }

    if let Command::Verify = cli.command {
        return cmd_verify();
    }

    let out = out_dir(cli.out.as_deref())?;
    match cli.command {
        Command::Simulate { jumps } => {
            cfg.n = single_n(&cli.n)?.unwrap_or(cfg.n);
            cmd_simulate(&cfg, &out, jumps)?;
        }
        Command::Limit => {
            cfg.n = single_n(&cli.n)?.unwrap_or(cfg.n);
            cmd_limit(&cfg, &out)?;
        }
        Command::Fluctuate => {
            cfg.n = single_n(&cli.n)?.unwrap_or(cfg.n);
            cmd_fluctuate(&cfg, &out)?;
        }
        Command::Occupation => {
            let n_list = cli.n.clone().unwrap_or_else(|| vec![cfg.n]);
            cmd_occupation(&cfg, &out, &n_list)?;
        }
        Command::Convergence => {
            let n_list = cli.n.clone().unwrap_or_else(|| vec![100, 400, 1600, 6400]);
            cmd_convergence(&cfg, &out, &n_list)?;
        }
        Command::ReproduceFig1 => {
            cfg.n = single_n(&cli.n)?.unwrap_or(cfg.n);
            cmd_fig1(&cfg, &out)?;
        }
        Command::Verify => unreachable!("handled above"),
    }
    Ok(ExitCode::SUCCESS)
}

fn out_dir(flag: Option<&Path>) -> Result<PathBuf> {
    let dir = match flag {
        Some(d) => d.to_path_buf(),
        None => match std::env::var_os("MM_OUT_DIR") {
            Some(d) => PathBuf::from(d),
            None => PathBuf::from("."),
        },
    };
    std::fs::create_dir_all(&dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    Ok(dir)
}

fn single_n(n: &Option<Vec<u64>>) -> Result<Option<u64>> {
    match n.as_deref() {
        None => Ok(None),
        Some([one]) => Ok(Some(*one)),
        Some(list) => bail!(
            "this command takes a single scale, got --n with {} values",
            list.len()
        ),
    }
}

fn write(out: &Path, name: &str, contents: &str) -> Result<()> {
    let path = out.join(name);
    export::write_atomic(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_config_echo(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    write(out, "config_resolved.txt", &config::render(cfg))
}

fn cmd_simulate(cfg: &ExperimentConfig, out: &Path, jumps: bool) -> Result<()> {
    cfg.validate()?;
    write_config_echo(cfg, out)?;
    let grid = cfg.grid();
    for k in 0..cfg.replicas as u64 {
        let traj = simulate(cfg, k)?;
        let csv = if jumps {
            export::trajectory_jumps_csv(&traj)
        } else {
            export::trajectory_csv(&traj, &grid)?
        };
        write(out, &format!("trajectory_{k}.csv"), &csv)?;
    }
    Ok(())
}

fn cmd_limit(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    cfg.validate()?;
    write_config_echo(cfg, out)?;
    let grid = cfg.grid();
    let z0 = cfg.initial_copy_state()?.to_scaled(cfg.n, &cfg.regime);
    let k2_tot = cfg.conserved()?.k2_tot;

    let flln = limit_path(cfg)?;
    write(out, "flln_tqssa.csv", &export::ode_csv(&flln))?;
    let det_t = solve_det_tqssa(z0.zv(), k2_tot, &cfg.rates, &grid)?;
    write(out, "det_tqssa.csv", &export::ode_csv(&det_t))?;
    let det_s = solve_det_sqssa(z0.zs, k2_tot, &cfg.rates, &grid)?;
    write(out, "det_sqssa.csv", &export::ode_csv(&det_s))?;
    Ok(())
}

fn cmd_fluctuate(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    cfg.validate()?;
    write_config_echo(cfg, out)?;
    let params = FcltParams {
        u0: 0.0,
        k2_tilde: cfg.k2_tilde,
        k2_tot: cfg.conserved()?.k2_tot,
        rates: cfg.rates,
        zv_path: limit_path(cfg)?,
        dt: cfg.sde_dt,
        seed: cfg.master_seed,
    };
    let paths = simulate_fclt_sde(&params, cfg.replicas)?;
    write(out, "fluctuation.csv", &export::fluctuation_csv(&paths))?;
    let summary = summarize(&paths)?;
    write(out, "summary.csv", &export::summary_csv(&summary))?;
    Ok(())
}

fn cmd_occupation(cfg: &ExperimentConfig, out: &Path, n_list: &[u64]) -> Result<()> {
    cfg.validate()?;
    write_config_echo(cfg, out)?;
    let points = occupation_study(cfg, n_list)?;
    let mut fractions = String::from("n,fraction\n");
    for p in &points {
        write(
            out,
            &format!("occupation_n{}.csv", p.n),
            &export::occupation_csv(&p.measure),
        )?;
        fractions.push_str(&format!("{},{}\n", p.n, p.fraction));
        println!("n = {}: concentration fraction {:.4}", p.n, p.fraction);
    }
    write(out, "occupation_fractions.csv", &fractions)?;
    Ok(())
}

fn cmd_convergence(cfg: &ExperimentConfig, out: &Path, n_list: &[u64]) -> Result<()> {
    cfg.validate()?;
    write_config_echo(cfg, out)?;
    let report = convergence_study(cfg, n_list)?;
    write(out, "convergence.csv", &export::convergence_csv(&report))?;
    let text = export::convergence_text(&report);
    write(out, "convergence.txt", &text)?;
    print!("{text}");
    Ok(())
}

fn cmd_verify() -> Result<ExitCode> {
    let reports = verification::run_all();
    print!("{}", verification::render_text(&reports));
    if verification::all_passed(&reports) {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::FAILURE)
    }
}

fn cmd_fig1(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    cfg.validate()?;
    write_config_echo(cfg, out)?;
    let study = mean_slow_path(cfg)?;
    let csv = export::fig1_csv(&study.times, &study.zv_mean, &study.zv_limit)?;
    write(out, "fig1.csv", &csv)?;
    let series = [
        svg::Series {
            label: "mean SSA path",
            xs: &study.times,
            ys: &study.zv_mean,
            color: "#1f77b4",
            dash: "",
        },
        svg::Series {
            label: "FLLN ODE",
            xs: &study.times,
            ys: &study.zv_limit,
            color: "#d62728",
            dash: "6,3",
        },
    ];
    let plot = svg::line_plot(
        &format!("Slow variable, n = {}, {} replicas", cfg.n, study.replicas),
        "t",
        "Z_V",
        &series,
    );
    write(out, "fig1.svg", &plot)?;
    println!("sup gap between mean path and limit: {:.6}", study.sup_gap);
    Ok(())
}
