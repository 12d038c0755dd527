use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use burgers_ph::diagnostics::{
    characteristics_solution, rankine_hugoniot_speed, shock_dissipation, shock_formation_time, GaussianPulse,
};
use burgers_ph::harness::{
    emit_table, ledger_csv, run_sweep_with, write_atomic, write_snapshots, Settings, TableFormat,
};
use burgers_ph::{run_simulation, verify, Error, Termination};

const EXIT_USAGE: u8 = 1;
const EXIT_VERIFY: u8 = 2;
const EXIT_UNDERFLOW: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "burgers-ph", version, about = "Port-Hamiltonian P2 finite element solver for the Burgers equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One simulation; writes the ledger and snapshots
    Run(CommonArgs),
    /// The (alpha, beta, h) grid; writes the summary table and per-cell ledgers
    Sweep(CommonArgs),
    /// Structural and oracle self-checks
    Verify,
    /// Analytic quantities of the inviscid equation
    Oracle(OracleArgs),
}

#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// key=value configuration file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    n_elems: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long)]
    newton_tol: Option<f64>,
    #[arg(long)]
    newton_max_iter: Option<usize>,
    #[arg(long)]
    dt_min_factor: Option<f64>,
    #[arg(long)]
    dt_cap_factor: Option<f64>,
    /// Disable adaptation and step with this dt
    #[arg(long)]
    fixed_dt: Option<f64>,
    #[arg(long)]
    snapshots: Option<usize>,
    /// Output directory (default: out)
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Sweep worker threads (default: all cores)
    #[arg(long)]
    workers: Option<usize>,
    /// Sweep table format: csv or text
    #[arg(long)]
    format: Option<String>,
    /// Sweep alphas, comma separated
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    /// Sweep betas, comma separated
    #[arg(long, value_delimiter = ',')]
    betas: Option<Vec<f64>>,
    /// Sweep mesh widths, comma separated
    #[arg(long, value_delimiter = ',')]
    hs: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct OracleArgs {
    /// Rankine–Hugoniot speed of the edge states VL VR
    #[arg(long, num_args = 2, value_names = ["VL", "VR"], allow_negative_numbers = true)]
    shock_speed: Option<Vec<f64>>,
    /// Kinetic and Hamiltonian shock dissipation rates for VL VR
    #[arg(long, num_args = 2, value_names = ["VL", "VR"], allow_negative_numbers = true)]
    shock_dissipation: Option<Vec<f64>>,
    /// Shock formation time, foot and position of the default Gaussian pulse
    #[arg(long)]
    shock_time: bool,
    /// Pre-shock solution of the default Gaussian pulse at T X
    #[arg(long, num_args = 2, value_names = ["T", "X"])]
    characteristics: Option<Vec<f64>>,
}

impl CommonArgs {
    fn settings(&self) -> Result<Settings, Error> {
        let flags = Settings {
            h: self.h,
            n_elems: self.n_elems,
            alpha: self.alpha,
            beta: self.beta,
            t_final: self.t_final,
            newton_tol: self.newton_tol,
            newton_max_iter: self.newton_max_iter,
            dt_min_factor: self.dt_min_factor,
            dt_cap_factor: self.dt_cap_factor,
            fixed_dt: self.fixed_dt,
            snapshots: self.snapshots,
            out_dir: self.out_dir.clone(),
            workers: self.workers,
            format: self.format.as_deref().map(str::parse).transpose()?,
            alphas: self.alphas.clone(),
            betas: self.betas.clone(),
            hs: self.hs.clone(),
        };
        let file = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                    path: path.clone(),
                    source,
                })?;
                Settings::parse(&text)?
            }
            None => Settings::default(),
        };
        Ok(file.overlay(flags))
    }
}

fn out_dir(settings: &Settings) -> PathBuf {
    settings.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
}

fn usage(err: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(EXIT_USAGE)
}

fn cmd_run(args: &CommonArgs) -> ExitCode {
    let settings = match args.settings() {
        Ok(s) => s,
        Err(e) => return usage(e),
    };
    let config = match settings.run_config() {
        Ok(c) => c,
        Err(e) => return usage(e),
    };
    let dir = out_dir(&settings);
    let out = match run_simulation(config) {
        Ok(o) => o,
        Err(e) => return usage(e),
    };
    let ledger_path = dir.join("ledger.csv");
    let written = write_atomic(&ledger_path, &ledger_csv(&out.ledger))
        .and_then(|_| write_snapshots(&dir.join("snapshots"), &out.nodes, &out.snapshots));
    if let Err(e) = written {
        return usage(e);
    }
    let s = &out.summary;
    eprintln!(
        "t_final = {:.6}, steps = {}, rejected = {}, Newton iterations = {}, Var = {:.4e}, termination = {}",
        s.t_reached,
        s.n_steps,
        s.rejected_steps,
        s.newton_iters,
        s.var,
        s.termination.label()
    );
    eprintln!("ledger: {}", ledger_path.display());
    if s.termination == Termination::Completed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_UNDERFLOW)
    }
}

fn cell_ledger_name(alpha: f64, beta: f64, h: f64) -> String {
    format!("ledger_a{alpha}_b{beta}_h{h}.csv")
}

fn cmd_sweep(args: &CommonArgs) -> ExitCode {
    let settings = match args.settings() {
        Ok(s) => s,
        Err(e) => return usage(e),
    };
    let grid = match settings.sweep_grid() {
        Ok(g) => g,
        Err(e) => return usage(e),
    };
    let dir = out_dir(&settings);
    let cells_dir = dir.join("cells");
    let format = settings.format.unwrap_or(TableFormat::Csv);
    eprintln!("sweep: {} cells", grid.len());
    let result = run_sweep_with(&grid, settings.workers.unwrap_or(0), |cell, out| {
        if let Some(out) = out {
            let path = cells_dir.join(cell_ledger_name(cell.alpha, cell.beta, cell.h));
            if let Err(e) = write_atomic(&path, &ledger_csv(&out.ledger)) {
                eprintln!("warning: {e}");
            }
        }
        eprintln!(
            "  alpha = {}, beta = {}, h = {:e}: Var = {:.3e}, t_f = {:.3}, steps = {}, {}",
            cell.alpha,
            cell.beta,
            cell.h,
            cell.var,
            cell.t_final,
            cell.n_steps,
            cell.status.label()
        );
    });
    let result = match result {
        Ok(r) => r,
        Err(e) => return usage(e),
    };
    let path = dir.join(format!("sweep.{}", format.extension()));
    if let Err(e) = write_atomic(&path, &emit_table(&result, format)) {
        return usage(e);
    }
    eprintln!("table: {}", path.display());
    ExitCode::SUCCESS
}

fn cmd_verify() -> ExitCode {
    let checks = verify::run_suite();
    let mut ok = true;
    for c in &checks {
        eprintln!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        ok &= c.passed;
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERIFY)
    }
}

fn cmd_oracle(args: &OracleArgs) -> ExitCode {
    let g = GaussianPulse::<f64>::default();
    if let Some(v) = &args.shock_speed {
        println!("{}", rankine_hugoniot_speed(v[0], v[1]));
    } else if let Some(v) = &args.shock_dissipation {
        let d = shock_dissipation(v[0], v[1]);
        println!("dE {}\ndH {}", d.kinetic, d.hamiltonian);
    } else if args.shock_time {
        match shock_formation_time(&g) {
            Ok(s) => println!("t* {}\nfoot {}\nposition {}", s.time, s.foot, s.position),
            Err(e) => return usage(e),
        }
    } else if let Some(v) = &args.characteristics {
        match characteristics_solution(&g, v[0], v[1]) {
            Ok(x) => println!("{x}"),
            Err(e) => return usage(e),
        }
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let display_only = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if display_only {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_USAGE)
            };
        }
    };
    match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Verify => cmd_verify(),
        Command::Oracle(a) => cmd_oracle(a),
    }
}
