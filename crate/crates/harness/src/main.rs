//! `polyvem` command-line convergence studies.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use polyvem::vem::Stabilization;
use polyvem_harness::study::write_outputs;
use polyvem_harness::{run_study, Family, HarnessError, MeshSource, Settings};

/// Runs a manufactured-solution convergence study and writes a CSV table
/// (and a VTK file of the finest mesh) to the output directory.
#[derive(Parser, Debug)]
#[command(name = "polyvem", version)]
struct Cli {
    /// pcc, elasticity, mcc, df_stokes or df_stokes_reduced.
    #[arg(long)]
    family: Option<Family>,
    /// Polynomial order k.
    #[arg(long)]
    order: Option<usize>,
    /// quads, triangles, hanging_quads or file:<path>.
    #[arg(long)]
    mesh: Option<MeshSource>,
    /// Number of meshes (4, 8, 16, ... cells per side).
    #[arg(long)]
    refinements: Option<usize>,
    /// dofi_dofi or d_recipe.
    #[arg(long)]
    stabilization: Option<Stabilization>,
    /// Use the reduced divergence-free space (df_stokes only).
    #[arg(long)]
    reduced: bool,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// File of key=value lines; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let file = match &cli.config {
        Some(path) => Settings::from_file(path)?,
        None => Settings::default(),
    };
    let flags = Settings {
        family: cli.family,
        order: cli.order,
        mesh: cli.mesh,
        refinements: cli.refinements,
        stabilization: cli.stabilization,
        reduced: cli.reduced.then_some(true),
        out: cli.out,
    };
    let config = flags.or(file).resolve()?;
    let (study, finest) = run_study(&config)?;
    let csv = study.to_csv()?;
    print!("{csv}");
    if let (Some(dir), Some((mesh, solution))) = (&config.out, finest) {
        write_outputs(dir, &study, &csv, &mesh, &solution)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
