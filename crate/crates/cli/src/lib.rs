//! Command-line front end: `fml <command> <file> [options]`.
//!
//! Exit codes: 0 success / valid, 1 negative analysis result (void model,
//! invalid configuration), 2 syntax error, 3 resolution or type error,
//! 4 usage error (bad flags, unreadable file, bad `--select`).

use std::ffi::OsString;
use std::fmt;
use std::io::{self, Write};
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use fml_core::analysis::{AnalysisError, Analyzer, ConfigurationQuery, LoadError, Verdict};
use fml_core::syntax::{parse_model, SourceSpan};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_SYNTAX: i32 = 2;
pub const EXIT_SEMANTIC: i32 = 3;
pub const EXIT_USAGE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "fml", version, about = "Analyse textual feature models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print "valid" if the model has at least one product, "void" otherwise.
    Validate { file: PathBuf },
    /// Enumerate products, one per line.
    Products {
        file: PathBuf,
        /// Stop after this many products.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        limit: Option<u64>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Print the number of products.
    Count { file: PathBuf },
    /// Check a (partial) configuration, e.g. `--select Camera=1,!GPS`.
    Check {
        file: PathBuf,
        /// `Name=Count`, `Name` (count 1) or `!Name` (count 0), comma separated.
        #[arg(long, required = true)]
        select: Vec<String>,
    },
    /// Print the constraint problem the model compiles to.
    Compile {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Emit::Csp)]
        emit: Emit,
    },
    /// Pretty-print the model in canonical form.
    Fmt { file: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Csp,
}

/// A failure that ends the command with a non-zero exit code.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl fmt::Display) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::usage(format!("cannot write output: {e}"))
    }
}

fn located(path: &Path, span: SourceSpan, message: impl fmt::Display) -> String {
    format!("{}:{}:{}: {}", path.display(), span.line, span.column, message)
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: cannot read file: {e}", path.display())))
}

fn load(path: &Path) -> Result<Analyzer, Failure> {
    let source = read(path)?;
    Analyzer::from_source(&source).map_err(|e| Failure {
        code: match e {
            LoadError::Syntax(_) => EXIT_SYNTAX,
            LoadError::Resolve(_) | LoadError::Type(_) => EXIT_SEMANTIC,
        },
        message: located(path, e.span(), &e),
    })
}

/// Parses `Name=Count`, `Name` and `!Name` items, comma separated.
fn parse_selection(specs: &[String]) -> Result<ConfigurationQuery, Failure> {
    let mut query = ConfigurationQuery::new();
    for item in specs.iter().flat_map(|s| s.split(',')).map(str::trim) {
        let (name, count) = if let Some(name) = item.strip_prefix('!') {
            (name, 0)
        } else if let Some((name, count)) = item.split_once('=') {
            let count = count
                .trim()
                .parse()
                .map_err(|_| Failure::usage(format!("invalid count in selection `{item}`")))?;
            (name.trim(), count)
        } else {
            (item, 1)
        };
        if name.is_empty() {
            return Err(Failure::usage(format!("invalid selection `{item}`")));
        }
        if query.insert(name.to_string(), count).is_some() {
            return Err(Failure::usage(format!("feature `{name}` selected twice")));
        }
    }
    Ok(query)
}

fn execute(command: Command, out: &mut dyn Write) -> Result<i32, Failure> {
    match command {
        Command::Validate { file } => {
            let valid = load(&file)?.valid_model();
            writeln!(out, "{}", if valid { "valid" } else { "void" })?;
            Ok(if valid { EXIT_OK } else { EXIT_NEGATIVE })
        }
        Command::Products { file, limit, format } => {
            let analyzer = load(&file)?;
            products(&analyzer, limit, format, out)?;
            Ok(EXIT_OK)
        }
        Command::Count { file } => {
            writeln!(out, "{}", load(&file)?.count_products())?;
            Ok(EXIT_OK)
        }
        Command::Check { file, select } => {
            let analyzer = load(&file)?;
            let query = parse_selection(&select)?;
            let verdict = analyzer.check_configuration(&query).map_err(|e| match e {
                AnalysisError::UnknownFeature(_) | AnalysisError::CountOutOfDomain { .. } => {
                    Failure::usage(format!("{}: {e}", file.display()))
                }
                AnalysisError::VoidModel => unreachable!("checking never requires a valid model"),
            })?;
            match verdict {
                Verdict::Valid => {
                    writeln!(out, "valid")?;
                    Ok(EXIT_OK)
                }
                Verdict::Invalid(witnesses) => {
                    writeln!(out, "invalid")?;
                    for w in witnesses {
                        match w.span {
                            Some(span) => writeln!(out, "violated: {}", located(&file, span, &w))?,
                            None => writeln!(out, "violated: {w}")?,
                        }
                    }
                    Ok(EXIT_NEGATIVE)
                }
            }
        }
        Command::Compile { file, emit: Emit::Csp } => {
            write!(out, "{}", load(&file)?.problem())?;
            Ok(EXIT_OK)
        }
        Command::Fmt { file } => {
            let source = read(&file)?;
            let ast = parse_model(&source).map_err(|e| Failure {
                code: EXIT_SYNTAX,
                message: located(&file, e.span, &e),
            })?;
            write!(out, "{ast}")?;
            Ok(EXIT_OK)
        }
    }
}

fn products(analyzer: &Analyzer, limit: Option<u64>, format: Format, out: &mut dyn Write) -> io::Result<()> {
    let problem = analyzer.problem();
    // Table columns are as wide as the widest header or domain value.
    let widths: Vec<usize> = problem
        .variables()
        .iter()
        .zip(problem.domains())
        .map(|(v, d)| d.iter().map(|x| x.to_string().len()).chain([v.as_str().len()]).max().unwrap_or(0))
        .collect();
    if format == Format::Table {
        let header: Vec<String> = problem
            .variables()
            .iter()
            .zip(&widths)
            .map(|(v, &w)| format!("{:<w$}", v.as_str()))
            .collect();
        writeln!(out, "{}", header.join("  ").trim_end())?;
    }

    let mut emitted = 0u64;
    let mut result = Ok(());
    analyzer.for_each_product(|p| {
        let line = match format {
            Format::Json => serde_json::to_string(&p).expect("products serialize"),
            Format::Table => {
                let row: Vec<String> = problem
                    .variables()
                    .iter()
                    .zip(&widths)
                    .map(|(v, &w)| {
                        let cell = match p.features.get(v.as_str()) {
                            Some(count) => count.to_string(),
                            None => p.attributes[v.as_str()].to_string(),
                        };
                        format!("{cell:<w$}")
                    })
                    .collect();
                row.join("  ").trim_end().to_string()
            }
        };
        if let Err(e) = writeln!(out, "{line}") {
            result = Err(e);
            return ControlFlow::Break(());
        }
        emitted += 1;
        if Some(emitted) == limit {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });
    result
}

/// Runs the command line `argv` (including the program name), writing normal
/// output to `out` and diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "{}", f.message);
            f.code
        }
    }
}
