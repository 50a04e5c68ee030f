//! `cloakopt`: command-line driver for the cloak design pipeline.
//!
//! Each subcommand runs one stage against a TOML run configuration and
//! writes its artifacts (plus a provenance manifest) into the output
//! directory. Stages are independent; later stages read the artifacts
//! of earlier ones from the same directory.

use clap::{Parser, Subcommand};
use cloak_core::pipeline::{
    stage_forward, stage_invert, stage_mesh, stage_optimize, stage_report, summarize, RunContext,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "cloakopt", version, about = "Acoustic cloak design toolkit")]
struct Cli {
    #[command(subcommand)]
    stage: Stage,

    /// run configuration (TOML)
    #[arg(long, global = true, default_value = "cloakopt.toml")]
    config: PathBuf,

    /// output directory, overriding the config's `output_dir`
    #[arg(long, global = true)]
    out: Option<String>,

    /// seed recorded in the manifest, overriding the config's `seed`
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// worker threads for the sparse solver (1 = sequential)
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Stage {
    /// Build the mesh and the hexagonal control partition
    Mesh,
    /// Solve the bare-obstacle scattering baseline
    Forward,
    /// Run (projected) gradient descent over the cell controls
    Optimize,
    /// Map optimized controls back to unit-cell geometries
    Invert,
    /// Summarize reductions, iterations, and feasibility
    Report,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        cloak_core::solver::set_threads(n);
    }
    let ctx = match RunContext::load(&cli.config, cli.out.as_deref(), cli.seed) {
        Ok(ctx) => ctx,
        Err(e) => {
            eprintln!("cloakopt: {e}");
            return ExitCode::FAILURE;
        }
    };
    let result = match cli.stage {
        Stage::Mesh => stage_mesh(&ctx),
        Stage::Forward => stage_forward(&ctx),
        Stage::Optimize => stage_optimize(&ctx),
        Stage::Invert => stage_invert(&ctx),
        Stage::Report => stage_report(&ctx).and_then(|()| {
            let s = summarize(&ctx)?;
            for (i, db) in s.mean_reduction_db.iter().enumerate() {
                println!("frequency {i}: mean reduction {db:.2} dB");
            }
            println!("iterations: {}", s.iterations);
            println!("final cost: {:.6e}", s.final_cost);
            println!("feasibility violations: {}", s.feasibility_violations);
            Ok(())
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cloakopt: {e}");
            ExitCode::FAILURE
        }
    }
}
