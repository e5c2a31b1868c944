//! `simex` — experiment CLI for the SIMEX-RK integrator.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use simex_cli::config::RunConfig;
use simex_cli::experiments;
use simex_cli::report::{self, sanitize_name, Summary};

#[derive(Parser)]
#[command(
    name = "simex",
    version,
    about = "SIMEX-RK experiments: convergence studies, stability regions, tableau checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time-step convergence on the forced 1D heat equation.
    ConvergeHeat(CommonArgs),
    /// Time-step convergence on the nonlinear 1D advection-reaction-diffusion equation.
    ConvergeNonlinear(CommonArgs),
    /// The stage-alternation counterexample (filter varied between stages vs between steps).
    ConvergeAlternation(CommonArgs),
    /// Amplification maps and axis scans of the generalized stability region.
    StabilityRegion(CommonArgs),
    /// Space-time grid refinement on the 2D advection-diffusion equation.
    Pde2d(CommonArgs),
    /// Validate the shipped tableaus (nonzero exit on any violation).
    TableauCheck,
}

#[derive(Args)]
struct CommonArgs {
    /// Flat TOML config file; command-line flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Tableau: cnh, ark436, ark548.
    #[arg(long)]
    tableau: Option<String>,
    /// Filter designation, repeatable: jacobi(3), gs(5,0.9), ilu(0.02), cgs(2,0.02), ...
    #[arg(long = "filter")]
    filters: Vec<String>,
    /// Method: simex, imex, or both.
    #[arg(long)]
    method: Option<String>,
    /// Step size, repeatable.
    #[arg(long = "h")]
    h: Vec<f64>,
    /// 2D grid index j (h_j = 2^-j/5), repeatable.
    #[arg(long = "grid-j")]
    grid_j: Vec<u32>,
    /// Grid parameter for the 1D problems / stability model.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Steps per stability trajectory.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    re_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    re_max: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    im_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    im_max: Option<f64>,
    /// Grid points per axis of the region scan.
    #[arg(long)]
    resolution: Option<usize>,
    /// Instability guard threshold.
    #[arg(long)]
    guard: Option<f64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Points used for the slope fit.
    #[arg(long)]
    slope_points: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

impl CommonArgs {
    fn effective_config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(t) = &self.tableau {
            cfg.tableau = t.clone();
        }
        if !self.filters.is_empty() {
            cfg.filters = self.filters.clone();
        }
        if let Some(m) = &self.method {
            cfg.method = m.clone();
        }
        if !self.h.is_empty() {
            cfg.h = self.h.clone();
        }
        if !self.grid_j.is_empty() {
            cfg.grid_j = self.grid_j.clone();
        }
        if let Some(n) = self.n {
            cfg.n = n;
        }
        if let Some(t) = self.t_end {
            cfg.t_end = t;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(s) = self.steps {
            cfg.steps = s;
        }
        if let Some(v) = self.re_min {
            cfg.re_min = v;
        }
        if let Some(v) = self.re_max {
            cfg.re_max = v;
        }
        if let Some(v) = self.im_min {
            cfg.im_min = v;
        }
        if let Some(v) = self.im_max {
            cfg.im_max = v;
        }
        if let Some(r) = self.resolution {
            cfg.resolution_re = r;
            cfg.resolution_im = r;
        }
        if let Some(g) = self.guard {
            cfg.guard = g;
        }
        if let Some(j) = self.jobs {
            cfg.jobs = j;
        }
        if let Some(sp) = self.slope_points {
            cfg.slope_points = sp;
        }
        if let Some(o) = &self.out {
            cfg.out = o.display().to_string();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = PathBuf::from(&cfg.out);
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn run_convergence(
    name: &str,
    cfg: &RunConfig,
    runner: impl Fn(&RunConfig) -> Result<Vec<experiments::ConvergenceRecord>>,
) -> Result<()> {
    let records = runner(cfg)?;
    let dir = out_dir(cfg)?;
    let csv_path = dir.join(format!("{name}.csv"));
    report::write_convergence_csv(&csv_path, &records)?;
    let mut summary = Summary::new();
    summary.push(format!("{name} slope fit uses the {} smallest completed h", cfg.slope_points));
    summary.convergence(name, &records);
    summary.write(&dir)?;
    println!("wrote {}", csv_path.display());
    Ok(())
}

fn run_command(cmd: &Command) -> Result<ExitCode> {
    match cmd {
        Command::ConvergeHeat(args) => {
            let cfg = args.effective_config()?;
            if args.print_config {
                print!("{}", cfg.to_toml());
                return Ok(ExitCode::SUCCESS);
            }
            run_convergence("converge-heat", &cfg, experiments::converge_heat)?;
        }
        Command::ConvergeNonlinear(args) => {
            let cfg = args.effective_config()?;
            if args.print_config {
                print!("{}", cfg.to_toml());
                return Ok(ExitCode::SUCCESS);
            }
            run_convergence("converge-nonlinear", &cfg, experiments::converge_nonlinear)?;
        }
        Command::ConvergeAlternation(args) => {
            let cfg = args.effective_config()?;
            if args.print_config {
                print!("{}", cfg.to_toml());
                return Ok(ExitCode::SUCCESS);
            }
            run_convergence("converge-alternation", &cfg, experiments::converge_alternation)?;
        }
        Command::StabilityRegion(args) => {
            let cfg = args.effective_config()?;
            if args.print_config {
                print!("{}", cfg.to_toml());
                return Ok(ExitCode::SUCCESS);
            }
            let records = experiments::stability_region(&cfg)?;
            let dir = out_dir(&cfg)?;
            let mut summary = Summary::new();
            for rec in &records {
                let stem = sanitize_name(&rec.filter.to_name());
                let amp = dir.join(format!("amplification_{stem}.csv"));
                report::write_region_csv(&amp, &rec.map)?;
                let con = dir.join(format!("contours_{stem}.csv"));
                report::write_contours_csv(&con, &rec.map)?;
                println!("wrote {} and {}", amp.display(), con.display());
            }
            summary.stability(&records);
            summary.write(&dir)?;
        }
        Command::Pde2d(args) => {
            let cfg = args.effective_config()?;
            if args.print_config {
                print!("{}", cfg.to_toml());
                return Ok(ExitCode::SUCCESS);
            }
            let out = experiments::pde2d(&cfg)?;
            let dir = out_dir(&cfg)?;
            let csv_path = dir.join("pde2d.csv");
            report::write_pde2d_csv(&csv_path, &out.records)?;
            let mut summary = Summary::new();
            summary.push(format!("pde2d tableau={}", out.tableau));
            summary.pde2d(&out);
            summary.write(&dir)?;
            println!("wrote {}", csv_path.display());
        }
        Command::TableauCheck => {
            let report = experiments::tableau_check();
            for line in &report.lines {
                println!("{line}");
            }
            if !report.ok {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_command(&cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

#[allow(dead_code)]
fn _path_is_send(_: &Path) {}
