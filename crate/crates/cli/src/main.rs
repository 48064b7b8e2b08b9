//! `maxplus`: decide and certify strong regularity of max-plus kernels.
//!
//! Exit codes: 0 positive verdict/success, 1 definite refutation or
//! finding, 2 inconclusive, 3 input error.

use clap::{Parser, Subcommand, ValueEnum};
use maxplus_cli::commands::{self, CommandOutput, CommonOpts};
use maxplus_cli::format;
use maxplus_core::assignment::SolutionMode;
use maxplus_core::func::Space;
use maxplus_core::similarity::PropKind;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "maxplus", version, about = "max-plus kernels: assignment, conjugacy, strong regularity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Text,
    Machine,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Compact,
    Balls,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpaceArg {
    L1,
    L01,
    L0,
    Linf,
}

#[derive(Parser)]
struct Common {
    /// Input kernel file
    file: PathBuf,
    /// Window radius N: [0,N] on naturals, [-N,N] on integers (finite
    /// kernels always use the full table)
    #[arg(long, default_value_t = 20)]
    window: i64,
    /// Deviation radius M for solution checks (0 = automatic)
    #[arg(long, default_value_t = 0)]
    distance: i64,
    /// Perestroika budget ε
    #[arg(long, default_value_t = 0.25)]
    budget_eps: f64,
    /// Sum mode for solution checks
    #[arg(long, value_enum, default_value_t = ModeArg::Balls)]
    mode: ModeArg,
    /// Seed for generated similarities
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Target sequence space ℓ*
    #[arg(long, value_enum, default_value_t = SpaceArg::L1)]
    space: SpaceArg,
    /// Comparison tolerance for floating identities
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    /// Report format
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    format: OutputFormat,
}

#[derive(Subcommand)]
enum Command {
    /// Conditions ZC and TC plus normality, with envelope samples
    Check(Common),
    /// Optimal assignment with dual potentials
    Assign(Common),
    /// Uniqueness of the optimal assignment
    Unique(Common),
    /// Dual-LP normal form
    Normalize(Common),
    /// Path closure c⁺ over the window
    Closure(Common),
    /// Potentials of the deviation kernel (bijection block `F` or identity)
    Potentials(Common),
    /// Saturation graph and structural checks (func block `phi` or zero)
    Sat(Common),
    /// The peeling pipeline to a strict potential
    Perestroika(Common),
    /// Decide strong regularity (func blocks g* as candidate witnesses,
    /// `second_g`/`second_h` as a claimed second solution)
    Regular(Common),
    /// Invariance suite under a similarity (embedded `phi`/`psi`/`H`/`K`
    /// blocks, or a seeded random one)
    Invariance {
        #[command(flatten)]
        common: Common,
        /// Properties to compare (default: all)
        #[arg(long, value_delimiter = ',')]
        props: Vec<String>,
    },
}

fn common_opts(c: &Common) -> CommonOpts {
    CommonOpts {
        window: c.window,
        distance: c.distance,
        budget_eps: c.budget_eps,
        mode: match c.mode {
            ModeArg::Compact => SolutionMode::Compact,
            ModeArg::Balls => SolutionMode::RestrictedBalls,
        },
        seed: c.seed,
        space: match c.space {
            SpaceArg::L1 => Space::L1,
            SpaceArg::L01 => Space::L01,
            SpaceArg::L0 => Space::L0,
            SpaceArg::Linf => Space::LInf,
        },
        tolerance: c.tolerance,
    }
}

fn load(c: &Common) -> Result<format::KernelFile, CommandOutput> {
    let text = std::fs::read_to_string(&c.file).map_err(|e| CommandOutput {
        exit: commands::EXIT_INPUT,
        text: format!("error: cannot read {}: {e}\n", c.file.display()),
        machine: serde_json::json!({
            "schema": "maxplus.report.v1",
            "error": format!("cannot read {}: {e}", c.file.display()),
            "exit": commands::EXIT_INPUT,
        }),
    })?;
    format::parse(&text).map_err(|e| CommandOutput {
        exit: commands::EXIT_INPUT,
        text: format!("error: {}: {e}\n", c.file.display()),
        machine: serde_json::json!({
            "schema": "maxplus.report.v1",
            "error": e.to_string(),
            "file": c.file.display().to_string(),
            "exit": commands::EXIT_INPUT,
        }),
    })
}

fn parse_props(names: &[String]) -> Result<Vec<PropKind>, String> {
    if names.is_empty() {
        return Ok(vec![
            PropKind::Zc,
            PropKind::Tc,
            PropKind::StrongRegularity,
            PropKind::SolutionExistence,
        ]);
    }
    names
        .iter()
        .map(|n| match n.as_str() {
            "zc" => Ok(PropKind::Zc),
            "tc" => Ok(PropKind::Tc),
            "regularity" => Ok(PropKind::StrongRegularity),
            "solutions" => Ok(PropKind::SolutionExistence),
            other => Err(format!("unknown property `{other}` (zc, tc, regularity, solutions)")),
        })
        .collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, out) = match &cli.command {
        Command::Check(c) => (c, load(c).map(|f| commands::check(&f, &common_opts(c)))),
        Command::Assign(c) => (c, load(c).map(|f| commands::assign(&f))),
        Command::Unique(c) => (c, load(c).map(|f| commands::unique(&f))),
        Command::Normalize(c) => (c, load(c).map(|f| commands::normalize(&f))),
        Command::Closure(c) => (c, load(c).map(|f| commands::closure(&f, &common_opts(c)))),
        Command::Potentials(c) => (c, load(c).map(|f| commands::potentials_cmd(&f, &common_opts(c)))),
        Command::Sat(c) => (c, load(c).map(|f| commands::sat(&f, &common_opts(c)))),
        Command::Perestroika(c) => {
            (c, load(c).map(|f| commands::perestroika_cmd(&f, &common_opts(c))))
        }
        Command::Regular(c) => (c, load(c).map(|f| commands::regular(&f, &common_opts(c)))),
        Command::Invariance { common: c, props } => {
            let result = match parse_props(props) {
                Err(msg) => Ok(CommandOutput {
                    exit: commands::EXIT_INPUT,
                    text: format!("error: {msg}\n"),
                    machine: serde_json::json!({
                        "schema": "maxplus.report.v1",
                        "command": "invariance",
                        "error": msg,
                        "exit": commands::EXIT_INPUT,
                    }),
                }),
                Ok(props) => load(c).map(|f| commands::invariance(&f, &common_opts(c), &props)),
            };
            (c, result)
        }
    };
    let out = match out {
        Ok(o) | Err(o) => o,
    };
    match common.format {
        OutputFormat::Text => print!("{}", out.text),
        OutputFormat::Machine => {
            println!("{}", serde_json::to_string(&out.machine).expect("serializable record"))
        }
    }
    ExitCode::from(out.exit as u8)
}
