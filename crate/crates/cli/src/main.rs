use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use wg_stokes::mesh::save_mesh;
use wg_stokes::study::{emit, parse_levels, run_study, Format, GridSpec, StudyConfig};

#[derive(Parser)]
#[command(name = "wg-stokes", version, about = "Weak Galerkin Stokes convergence studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a manufactured problem on a sequence of refined grids.
    Study {
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// square, quad, polygon or file:<path with {level}>
        #[arg(long, default_value = "square")]
        grid: String,
        /// Inclusive range, e.g. 3..6
        #[arg(long, default_value = "3..5")]
        levels: String,
        /// s1, linear or stream:<file>
        #[arg(long, default_value = "s1")]
        case: String,
        /// markdown, csv or json
        #[arg(long, default_value = "markdown")]
        format: String,
        /// Relative residual tolerance for the linear solver
        #[arg(long)]
        tol: Option<f64>,
        /// Extra quadrature degree
        #[arg(long, default_value_t = 0)]
        quad_bump: usize,
        /// Write each level's matrix and right-hand side here
        #[arg(long)]
        dump_system: Option<PathBuf>,
        /// Also report inf-sup constants and norm-equivalence ratios
        #[arg(long)]
        diagnostics: bool,
        /// Directory for the study file
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Print the table instead of writing a file
        #[arg(long)]
        stdout: bool,
    },
    /// Write a generated grid as a JSON mesh file.
    Mesh {
        #[arg(long, default_value = "polygon")]
        grid: String,
        #[arg(long)]
        level: u32,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Study {
            k,
            grid,
            levels,
            case,
            format,
            tol,
            quad_bump,
            dump_system,
            diagnostics,
            out_dir,
            stdout,
        } => {
            let format: Format = format.parse()?;
            let mut config = StudyConfig::new(k, grid.parse()?, parse_levels(&levels)?, &case);
            config.tol = tol;
            config.quad_bump = quad_bump;
            config.dump_system = dump_system;
            config.diagnostics = diagnostics;
            let result = run_study(&config)?;
            let text = emit(&result, format)?;
            if stdout {
                print!("{text}");
            } else {
                fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
                let path = out_dir.join(format.file_name());
                fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
                eprintln!("wrote {}", path.display());
            }
        }
        Command::Mesh { grid, level, out } => {
            let grid: GridSpec = grid.parse()?;
            let mesh = grid.mesh(level)?;
            save_mesh(&mesh, &out).with_context(|| format!("writing {}", out.display()))?;
            eprintln!("wrote {} ({} elements)", out.display(), mesh.n_elements());
        }
    }
    Ok(())
}
