use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use spinchain::ed::{diagonalize, SpinHamiltonian};
use spinchain::lattice::{build_lattice, Boundary, LatticeSpec};
use spinchain::records::read_jsonl;
use spinchain::runspec::{execute, render_records, summarize, write_summary_csv, ExperimentKind, RunSpec};
use spinchain::ModelParams64;

#[derive(Parser)]
#[command(name = "spinchain", version, about = "Frustrated spin-chain lattice simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundaryArg {
    Periodic,
    Cylinder,
    Open,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a run spec (JSON) and write records and summaries.
    Run {
        spec: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        replicas: Option<u32>,
        /// Output directory (default: $SPINCHAIN_OUT/<kind>-<hash>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact diagonalization of a small lattice, or the ED check suite.
    Ed {
        /// Run the ED check suite instead of a single point.
        #[arg(long)]
        suite: bool,
        /// Three mutually coupled chains.
        #[arg(long)]
        triangle: bool,
        #[arg(long, default_value_t = 1)]
        rows: usize,
        #[arg(long, default_value_t = 1)]
        cols: usize,
        #[arg(long, value_enum, default_value = "open")]
        boundary: BoundaryArg,
        #[arg(long, default_value_t = 4)]
        chain_length: usize,
        /// Field B/J1.
        #[arg(long, default_value_t = 0.0)]
        h: f64,
        /// Transverse field Γ/J1.
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
        /// Inverse temperature β·J1 (`inf` for the ground level).
        #[arg(long, default_value_t = 4.5)]
        beta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render snapshots of a record file as SVG state maps.
    Render {
        records: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Aggregate record files into one row per protocol point.
    Summarize {
        #[arg(required = true)]
        records: Vec<PathBuf>,
        /// Write CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Run {
            spec,
            seed,
            replicas,
            out,
        } => {
            let mut spec = RunSpec::from_path(&spec).map_err(|e| e.to_string())?;
            spec.apply_overrides(seed, replicas, out);
            spec.validate().map_err(|e| e.to_string())?;
            let outputs = execute(&spec).map_err(|e| e.to_string())?;
            for f in outputs.files {
                println!("{}", f.display());
            }
        }
        Command::Ed { suite: true, out, .. } => {
            let mut spec = RunSpec::new(ExperimentKind::EdSuite, Default::default());
            spec.apply_overrides(None, None, out);
            let outputs = execute(&spec).map_err(|e| e.to_string())?;
            for f in outputs.files {
                println!("{}", f.display());
            }
        }
        Command::Ed {
            triangle,
            rows,
            cols,
            boundary,
            chain_length,
            h,
            gamma,
            beta,
            out,
            ..
        } => {
            let spec = if triangle {
                LatticeSpec::triangle()
            } else {
                LatticeSpec {
                    boundary: match boundary {
                        BoundaryArg::Periodic => Boundary::FullyPeriodic,
                        BoundaryArg::Cylinder => Boundary::Cylinder,
                        BoundaryArg::Open => Boundary::Open,
                    },
                    ..LatticeSpec::open(rows, cols)
                }
            }
            .with_chain_length(chain_length);
            let lat = build_lattice(&spec).map_err(|e| e.to_string())?;
            let p = ModelParams64::reduced(h, gamma, beta);
            let spectrum = diagonalize(&SpinHamiltonian::from_lattice(&lat, &p)).map_err(|e| e.to_string())?;
            let t = spectrum.thermal(beta);
            let report = serde_json::json!({
                "lattice": spec,
                "h": h,
                "gamma": gamma,
                "beta_j1": beta,
                "ground_energy": spectrum.ground_energy(),
                "ground_degeneracy": spectrum.ground_degeneracy(),
                "energy": t.energy,
                "m_over_msat": -t.magnetization,
                "m_fim": t.m_fim,
            });
            let text = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
            match out {
                Some(path) => fs::write(&path, text + "\n").map_err(|e| format!("{}: {e}", path.display()))?,
                None => println!("{text}"),
            }
        }
        Command::Render { records, out } => {
            fs::create_dir_all(&out).map_err(|e| format!("{}: {e}", out.display()))?;
            let files = render_records(&records, &out).map_err(|e| e.to_string())?;
            if files.is_empty() {
                return Err(format!("{}: no snapshots in record file", records.display()));
            }
            for f in files {
                println!("{}", f.display());
            }
        }
        Command::Summarize { records, out } => {
            let mut all = Vec::new();
            for path in &records {
                all.extend(read_jsonl(path).map_err(|e| e.to_string())?.1);
            }
            let rows = summarize(&all);
            match out {
                Some(path) => {
                    let f = fs::File::create(&path).map_err(|e| format!("{}: {e}", path.display()))?;
                    write_summary_csv(f, &rows).map_err(|e| format!("{}: {e}", path.display()))?;
                }
                None => write_summary_csv(std::io::stdout().lock(), &rows).map_err(|e| e.to_string())?,
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
