use chrtc::driver::{
    run_check, run_infer, run_project, run_translate, DriverError, OutputFormat, RunConfig,
    EXIT_ERROR,
};
use chrtc::termination::RankSpec;
use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "chrtc",
    about = "CHR-based type-class inference with functional dependencies",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
enum FormatArg {
    #[default]
    Text,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Translate class/instance declarations into a CHR program.
    Translate {
        /// Declaration file (.hs-like).
        file: PathBuf,
        /// Write the program here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Emit combined instance/improvement rules.
        #[arg(long)]
        fuse: bool,
    },
    /// Run depth-bounded inference for a constraint goal.
    Infer {
        /// Declaration file or CHR program file.
        file: PathBuf,
        /// Goal constraints, e.g. "F [Int] b".
        goal: String,
        /// Derivation depth bound B.
        #[arg(long, default_value_t = 1000)]
        depth: usize,
        /// Additionally probe answer uniqueness with N random strategies.
        #[arg(long, value_name = "N")]
        probe: Option<usize>,
        /// Base seed for the random strategies.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t)]
        format: FormatArg,
        /// Translate declarations in combined rule form.
        #[arg(long)]
        fuse: bool,
    },
    /// Check consistency, coverage, range restriction, local confluence
    /// and ground termination for a declaration file.
    Check {
        /// Declaration file (.hs-like).
        file: PathBuf,
        #[arg(long, default_value_t = 20)]
        join_depth: usize,
        #[arg(long, default_value_t = 500)]
        join_width: usize,
        /// Rank measure file (`measure F 1; weight List 1`); searched
        /// automatically when absent.
        #[arg(long, value_name = "FILE")]
        rank_spec: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        format: FormatArg,
        /// Translate declarations in combined rule form.
        #[arg(long)]
        fuse: bool,
    },
    /// Emit the Horn-clause projection of the simplification rules.
    Project {
        /// Declaration file or CHR program file.
        file: PathBuf,
        /// Write the clauses here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // help/version requests are not errors
            if err.use_stderr() {
                eprint!("{err}");
                return ExitCode::from(EXIT_ERROR as u8);
            }
            print!("{err}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}

fn run(cli: Cli) -> Result<i32, DriverError> {
    match cli.cmd {
        Cmd::Translate { file, output, fuse } => {
            let text = std::fs::read_to_string(&file)?;
            let cfg = RunConfig {
                fuse,
                ..RunConfig::default()
            };
            let out = run_translate(&text, &cfg)?;
            match output {
                Some(path) => {
                    std::fs::write(&path, &out.program_text)?;
                    println!("{}", out.summary);
                }
                None => {
                    print!("{}", out.program_text);
                    eprintln!("{}", out.summary);
                }
            }
            Ok(0)
        }
        Cmd::Infer {
            file,
            goal,
            depth,
            probe,
            seed,
            format,
            fuse,
        } => {
            let text = std::fs::read_to_string(&file)?;
            let cfg = RunConfig {
                depth,
                probe,
                seed,
                format: format.into(),
                fuse,
                ..RunConfig::default()
            };
            let out = run_infer(&text, &goal, &cfg)?;
            for w in &out.warnings {
                eprintln!("{w}");
            }
            println!("{}", out.rendered);
            Ok(out.exit_code)
        }
        Cmd::Check {
            file,
            join_depth,
            join_width,
            rank_spec,
            format,
            fuse,
        } => {
            let text = std::fs::read_to_string(&file)?;
            let rank_spec = match rank_spec {
                Some(path) => Some(RankSpec::parse(&std::fs::read_to_string(&path)?)?),
                None => None,
            };
            let cfg = RunConfig {
                join_depth,
                join_width,
                rank_spec,
                format: format.into(),
                fuse,
                ..RunConfig::default()
            };
            let out = run_check(&text, &cfg)?;
            println!("{}", out.rendered);
            Ok(out.exit_code)
        }
        Cmd::Project { file, output } => {
            let text = std::fs::read_to_string(&file)?;
            let out = run_project(&text, &RunConfig::default())?;
            match output {
                Some(path) => {
                    std::fs::write(&path, &out.clauses)?;
                    println!("{}", out.summary);
                }
                None => {
                    print!("{}", out.clauses);
                    eprintln!("{}", out.summary);
                }
            }
            Ok(0)
        }
    }
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> OutputFormat {
        match f {
            FormatArg::Text => OutputFormat::Text,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}
