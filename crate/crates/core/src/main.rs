use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use phl_core::experiment::{exit_code, run_experiment, Command, ExperimentConfig};
use phl_core::{Error, Result};

/// Exact heat kernels, balayage, parabolic Harnack and local limit
/// measurements for random walks on percolation clusters.
///
/// Settings come from defaults, then `--config FILE` (one `key = value` per
/// line), then positional `key=value` words, then flags. Defaults: d=2 L=128
/// p=0.7 kind=myopic seeds=1 tol=1e-10 out=phl-out t-grid=1,2
/// x-grid=0,0.5,1,1.5,2 functions=5 lateral=0 continuous=false. Box-dependent
/// defaults: n-list is the three largest powers of 4 that fit the (L/4)^2
/// time horizon (counting the Poisson tail when continuous=true), radius is 8,16 capped at L/4, times is 16,64 capped at
/// (L/4)^2.
///
/// Exit codes: 0 success, 1 invariant violation or run failure, 2 invalid
/// configuration, 3 resource limit. PHL_THREADS caps the worker count.
#[derive(Parser)]
#[command(name = "phl", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Generate clusters, write snapshots and geometry statistics.
    Gen(Settings),
    /// Kernel checkpoints and exact identity checks.
    Kernel(Settings),
    /// Balayage against the réduite recursion on cylinders.
    Balayage(Settings),
    /// Harnack constant, oscillation decay and Hölder fit.
    Phi(Settings),
    /// Local limit errors against the Gaussian reference.
    Llt(Settings),
    /// Green's function profile (d = 3).
    Green(Settings),
    /// Every stage that applies to the dimension.
    All(Settings),
}

#[derive(Args)]
struct Settings {
    /// Extra `key=value` settings.
    settings: Vec<String>,
    /// Config file with one `key = value` per line.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "d")]
    d: Option<String>,
    #[arg(long = "L")]
    side: Option<String>,
    #[arg(long = "p")]
    p: Option<String>,
    #[arg(long = "K")]
    k: Option<String>,
    /// myopic, blind or conductance.
    #[arg(long)]
    kind: Option<String>,
    /// Comma-separated seed list.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    #[arg(long = "n-list")]
    n_list: Option<String>,
    #[arg(long = "t-grid")]
    t_grid: Option<String>,
    /// Grid points `s e_1`, given by `s`.
    #[arg(long = "x-grid")]
    x_grid: Option<String>,
    /// Cylinder radii for balayage and phi.
    #[arg(long)]
    radius: Option<String>,
}

fn build(command: Command, s: Settings) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::defaults(command);
    if let Some(path) = &s.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config { key: "config".into(), message: format!("{}: {e}", path.display()) })?;
        cfg.apply_text(&text)?;
    }
    cfg.apply_words(s.settings.iter().map(String::as_str))?;
    let flags = [
        ("d", s.d),
        ("L", s.side),
        ("p", s.p),
        ("K", s.k),
        ("kind", s.kind),
        ("seeds", s.seeds),
        ("tol", s.tol),
        ("out", s.out),
        ("n-list", s.n_list),
        ("t-grid", s.t_grid),
        ("x-grid", s.x_grid),
        ("radius", s.radius),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, &v)?;
        }
    }
    cfg.finish()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, settings) = match cli.command {
        Sub::Gen(s) => (Command::Gen, s),
        Sub::Kernel(s) => (Command::Kernel, s),
        Sub::Balayage(s) => (Command::Balayage, s),
        Sub::Phi(s) => (Command::Phi, s),
        Sub::Llt(s) => (Command::Llt, s),
        Sub::Green(s) => (Command::Green, s),
        Sub::All(s) => (Command::All, s),
    };
    let result = build(command, settings).and_then(|cfg| run_experiment(&cfg));
    match result {
        Ok(report) => {
            for s in &report.seeds {
                let show = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6}"));
                println!(
                    "seed {}: vertices {} a {} D {} C_H {} theta {} C {}",
                    s.seed,
                    s.vertices,
                    show(s.a_hat),
                    show(s.d_hat),
                    show(s.c_h),
                    show(s.theta),
                    show(s.green_c_ref)
                );
            }
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            if report.violations.is_empty() {
                ExitCode::SUCCESS
            } else {
                for v in &report.violations {
                    eprintln!("violation: {v}");
                }
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
