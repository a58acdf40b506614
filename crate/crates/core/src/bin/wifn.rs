use std::fs;
use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use wifn::analyze::{prepare, run, AnalyzeError};
use wifn::report::{render_json, render_text, Overall};
use wifn::roles::parse_narration;
use wifn::{SelectionVariant, TheoryTag};

#[derive(Parser)]
#[command(
    name = "wifn",
    version,
    about = "Secrecy analysis of cryptographic protocols with witness functions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that every role of a protocol is increasing.
    Analyze(AnalyzeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Max,
    Ek,
    N,
}

#[derive(Clone, Copy, ValueEnum)]
enum Theory {
    Empty,
    Homomorphic,
}

#[derive(clap::Args)]
struct AnalyzeArgs {
    /// Context file; defaults to the protocol's `uses-context`.
    #[arg(long)]
    context: Option<PathBuf>,
    #[arg(long)]
    protocol: PathBuf,
    /// Explicit generalized roles instead of deriving them.
    #[arg(long)]
    roles: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Variant::Max)]
    variant: Variant,
    /// Override the context's equational theory.
    #[arg(long, value_enum)]
    theory: Option<Theory>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn analyze(args: &AnalyzeArgs) -> Result<Overall, String> {
    let protocol_text = read(&args.protocol)?;
    let context_path = match &args.context {
        Some(p) => p.clone(),
        None => {
            let n = parse_narration(&protocol_text).map_err(|e| format!("{}: {e}", args.protocol.display()))?;
            let rel = n.context.ok_or_else(|| {
                format!(
                    "{}: no --context given and no uses-context line",
                    args.protocol.display()
                )
            })?;
            args.protocol.parent().unwrap_or(Path::new(".")).join(rel)
        }
    };
    let context_text = read(&context_path)?;
    let roles_text = args.roles.as_deref().map(read).transpose()?;
    let theory = args.theory.map(|t| match t {
        Theory::Empty => TheoryTag::Empty,
        Theory::Homomorphic => TheoryTag::Homomorphic,
    });
    let variant = match args.variant {
        Variant::Max => SelectionVariant::Max,
        Variant::Ek => SelectionVariant::Ek,
        Variant::N => SelectionVariant::N,
    };
    let located = |e: AnalyzeError| match &e {
        AnalyzeError::Context(inner) => format!("{}: {inner}", context_path.display()),
        AnalyzeError::Protocol(inner) => format!("{}: {inner}", args.protocol.display()),
        AnalyzeError::Roles(inner) => match &args.roles {
            Some(p) => format!("{}: {inner}", p.display()),
            None => e.to_string(),
        },
        _ => e.to_string(),
    };
    let prepared = prepare(&context_text, &protocol_text, roles_text.as_deref(), theory).map_err(located)?;
    let report = run(&prepared, variant).map_err(located)?;
    let rendered = match args.format {
        Format::Json => render_json(&report) + "\n",
        Format::Text => {
            let color = args.out.is_none()
                && std::env::var("WIFN_COLOR").map_or(true, |v| v != "0")
                && std::io::stdout().is_terminal();
            let mut notes = Vec::new();
            if prepared.has_hash() {
                notes.push("hash bodies are opaque: atoms seen only under h(...) are not exposed".to_string());
            }
            render_text(&report, color, &notes)
        }
    };
    match &args.out {
        Some(p) => fs::write(p, rendered).map_err(|e| format!("{}: {e}", p.display()))?,
        None => print!("{rendered}"),
    }
    Ok(report.overall)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Analyze(args) => match analyze(&args) {
            Ok(Overall::Increasing) => ExitCode::from(0),
            Ok(Overall::NotIncreasing) => ExitCode::from(1),
            Err(msg) => {
                eprintln!("error: {msg}");
                ExitCode::from(2)
            }
        },
    }
}
