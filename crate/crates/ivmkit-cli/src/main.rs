//! `ivmkit`: batch front end for models, measures, solvers, cubes and worked examples.

mod commands;
mod demos;
mod docs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

#[derive(Parser)]
#[command(name = "ivmkit", version, about = "Ideal-valued measures, centerpoints and cubes of complexes")]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

#[derive(Subcommand)]
pub enum Command {
    /// Graded algebras: build, d-rank, A^{/r}.
    #[command(subcommand)]
    Algebra(AlgebraCmd),
    /// Evaluate and check ideal-valued measures.
    #[command(subcommand)]
    Ivm(IvmCmd),
    /// Centerpoint search and seeded harnesses.
    #[command(subcommand)]
    Centerpoint(CenterpointCmd),
    /// Cubes of complexes: validation, cones, telescopes, homology.
    #[command(subcommand)]
    Cubes(CubesCmd),
    /// Reproduce a worked example from its shipped input document.
    Demo(DemoArgs),
}

#[derive(Args)]
pub struct AlgebraSrc {
    /// Algebra document (JSON).
    #[arg(long)]
    pub doc: Option<PathBuf>,
    /// Standard algebra, e.g. `torus:2`, `qh_torus:3*qh_sphere`, `cpn:2`.
    #[arg(long)]
    pub standard: Option<String>,
    /// Ground field for `--standard`: F2, Fp or Q.
    #[arg(long, default_value = "F2")]
    pub field: String,
}

#[derive(Subcommand)]
pub enum AlgebraCmd {
    /// Validate an algebra and print its document.
    Build(AlgebraSrc),
    /// rk_d by enumeration of graded ideals.
    Rank {
        #[command(flatten)]
        src: AlgebraSrc,
        #[arg(long, default_value_t = 2)]
        d: usize,
        /// Candidate subspaces examined before downgrading to a lower bound.
        #[arg(long, default_value_t = 10_000_000)]
        budget: u64,
        /// Independently certified lower bound to combine with.
        #[arg(long)]
        certified: Option<usize>,
    },
    /// Intersection of all graded ideals of codimension < r.
    SlashR {
        #[command(flatten)]
        src: AlgebraSrc,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = 10_000_000)]
        budget: u64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Compact,
    Open,
    Both,
}

#[derive(Subcommand)]
pub enum IvmCmd {
    /// Value of a measure on one region; the output parses as an ideal document.
    Eval {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long)]
        region: PathBuf,
    },
    /// Exhaustive axiom checks over a lattice of sets.
    CheckAxioms {
        #[arg(long)]
        measure: PathBuf,
        /// Lattice generators and chains; a model default is used if absent.
        #[arg(long)]
        lattice: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ModeArg::Both)]
        mode: ModeArg,
        /// Largest lattice size before giving up.
        #[arg(long, default_value_t = 4096)]
        limit: usize,
    },
    /// Push a torus cohomology measure forward along a coordinate projection.
    Pushforward {
        #[arg(long)]
        measure: PathBuf,
        /// Kept axes, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        axes: Vec<usize>,
        /// Region on the projected torus.
        #[arg(long)]
        region: PathBuf,
        /// Also check the axioms of the pushforward on closed polyintervals.
        #[arg(long)]
        check_axioms: bool,
        #[arg(long, default_value_t = 4096)]
        limit: usize,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum HarnessKind {
    GromovTorus,
    Simplex,
}

#[derive(Subcommand)]
pub enum CenterpointCmd {
    /// Centerpoints of a pushed-forward cohomology measure on a finite target.
    Solve {
        #[arg(long)]
        input: PathBuf,
    },
    /// Seeded random maps; every case must have a big fiber.
    Harness {
        #[arg(long, value_enum)]
        kind: HarnessKind,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long)]
        levels: Option<usize>,
    },
}

#[derive(Subcommand)]
pub enum CubesCmd {
    /// Check the cube relation on every face.
    Validate {
        #[arg(long)]
        cube: PathBuf,
    },
    /// Cone (or cocone) along a direction, 1-based.
    Cone {
        #[arg(long)]
        cube: PathBuf,
        #[arg(long, default_value_t = 1)]
        direction: usize,
        #[arg(long)]
        cocone: bool,
    },
    /// Telescope of a ray of cubes.
    Telescope {
        #[arg(long)]
        ray: PathBuf,
    },
    /// Homology over the Novikov field and torsion exponents of the total complex.
    Homology {
        #[arg(long)]
        cube: PathBuf,
        /// Valuations at or above this count as zero.
        #[arg(long)]
        precision: Option<String>,
    },
}

#[derive(Args)]
pub struct DemoArgs {
    #[arg(value_enum)]
    pub name: demos::DemoName,
    /// Replacement input document.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Override the seed of seeded demos.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Command result: a machine-readable value, its table rendering, and an
/// optional failed assertion.
pub struct Report {
    pub json: Value,
    pub table: Vec<String>,
    pub failure: Option<String>,
}

impl Report {
    pub fn ok(json: Value, table: Vec<String>) -> Self {
        Report { json, table, failure: None }
    }

    pub fn check(mut self, ok: bool, msg: impl Into<String>) -> Self {
        if !ok && self.failure.is_none() {
            self.failure = Some(msg.into());
        }
        self
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(report) => {
            match cli.format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&report.json).expect("serializable report")),
                Format::Table => report.table.iter().for_each(|l| println!("{l}")),
            }
            if let Some(f) = report.failure {
                eprintln!("assertion failed: {f}");
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
