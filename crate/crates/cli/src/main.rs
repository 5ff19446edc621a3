mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;

/// Quaternionic integral operators, Vekua-Hilbert transforms,
/// Dirichlet-to-Neumann maps and div-curl solves on meshed domains.
///
/// Settings come from `--config` (a JSON document with the same field
/// names as the flags); any flag given on the command line replaces the
/// value from the file.
#[derive(Parser)]
#[command(name = "monogenic", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand)]
enum Command {
    /// Run the invariant suites over a refinement schedule.
    Verify,
    /// Hilbert transform of boundary data.
    Hilbert,
    /// Vekua-Hilbert transform and the Vekua solution.
    Vekua,
    /// Dirichlet-to-Neumann map of the conductivity equation.
    Dn,
    /// Div-curl system.
    Divcurl,
    /// Mesh summary.
    MeshInfo,
}

#[derive(Args)]
struct Opts {
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// sphere | ball | torus | PATH (.off or .msh)
    #[arg(long, global = true, value_name = "NAME|PATH")]
    mesh: Option<String>,
    /// Icosphere level.
    #[arg(long, global = true, value_name = "N")]
    level: Option<u32>,
    /// Target edge length of ball and torus meshes.
    #[arg(long, global = true, value_name = "FLOAT")]
    h: Option<f64>,
    /// Conductivity factor: constant[:c], radial-quadratic, exp-linear[:a], linear[:n], or CSV.
    #[arg(long, global = true, value_name = "NAME|PATH")]
    f: Option<String>,
    /// Boundary data: harmonic name (x1, x3, x1x2, Y2, ...) or CSV.
    #[arg(long, global = true, value_name = "NAME|PATH")]
    phi: Option<String>,
    /// Div-curl data: div3, curl-e3, curl-linear, zero, or CSV.
    #[arg(long, global = true, value_name = "NAME|PATH")]
    source: Option<String>,
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Restrict `verify` to these suites.
    #[arg(long, global = true, value_name = "NAME", value_delimiter = ',')]
    suite: Vec<String>,
}

impl Opts {
    fn into_config(self) -> monogenic::Result<RunConfig> {
        let base = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let flags = RunConfig {
            mesh: self.mesh,
            level: self.level,
            h: self.h,
            f: self.f,
            phi: self.phi,
            source: self.source,
            out: self.out,
            seed: self.seed,
            suites: self.suite,
            ..RunConfig::default()
        };
        let c = base.merge(flags);
        c.validate()?;
        Ok(c)
    }
}

fn run(cli: Cli) -> monogenic::Result<bool> {
    let c = cli.opts.into_config()?;
    match cli.command {
        Command::Verify => {
            let (ok, path) = commands::run_verify(&c)?;
            println!("report written to {}", path.display());
            return Ok(ok);
        }
        Command::Hilbert => commands::hilbert(&c)?,
        Command::Vekua => commands::vekua(&c)?,
        Command::Dn => commands::dn(&c)?,
        Command::Divcurl => commands::divcurl(&c)?,
        Command::MeshInfo => {
            let v = commands::mesh_info(&c)?;
            println!("{}", serde_json::to_string_pretty(&v).map_err(monogenic::Error::from)?);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
