//! Command-line front end.
//!
//! Exit codes: 0 success or valid, 1 invalid (or staged output under
//! `--fail-on-staged`), 2 any error. Standard output carries only the
//! payload.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::algebra::{enumerate_members, SchemaExpr};
use crate::expander::{expand_detailed, ExpansionSettings};
use crate::hedge::{parse_xml_with, serialize_xml, ParseOptions};
use crate::repo::xml_repository;
use crate::validator::{explain, validate};
use crate::xtl::serialize_xtl;
use crate::{load_template, Error};

#[derive(Debug, Parser)]
#[command(
    name = "xtl",
    version,
    about = "Expand XTL templates and validate documents against them"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a document against a template read as a schema.
    Validate {
        #[arg(long, value_name = "S.xtl")]
        schema: PathBuf,
        #[arg(long, value_name = "D.xml")]
        doc: PathBuf,
        /// Print the verdict and any mismatches on standard output.
        #[arg(long)]
        report: bool,
    },
    /// Instantiate a template against a repository document.
    Expand {
        #[arg(long, value_name = "T.xtl")]
        template: PathBuf,
        #[arg(long, value_name = "R.xml")]
        repo: PathBuf,
        #[arg(long, value_name = "O.xml")]
        out: Option<PathBuf>,
        /// Fail instead of staging slots whose query selects nothing.
        #[arg(long)]
        strict: bool,
        /// Keep whitespace-only text nodes.
        #[arg(long)]
        preserve_space: bool,
        /// Exit with 1 when any slot was staged.
        #[arg(long)]
        fail_on_staged: bool,
        #[arg(long, value_name = "N", default_value_t = ExpansionSettings::default().max_macro_depth)]
        max_macro_depth: usize,
    },
    /// Rewrite a template into canonical form.
    Normalize {
        #[arg(long = "in", value_name = "F.xtl")]
        input: PathBuf,
        #[arg(long, value_name = "O.xtl")]
        out: Option<PathBuf>,
    },
    /// List the members of a schema up to a node count.
    Enumerate {
        #[arg(long, value_name = "S.xtl")]
        schema: PathBuf,
        #[arg(long, value_name = "N")]
        max_nodes: usize,
        #[arg(long, value_name = "a,b", value_delimiter = ',', required = true)]
        alphabet: Vec<String>,
    },
}

/// Runs one invocation; `args` includes the program name.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    2
                }
            };
        }
    };
    match execute(cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "xtl: error: {e}");
            2
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Error> {
    fs::read(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn emit(payload: &str, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), Error> {
    let text = format!("{payload}\n");
    match out {
        Some(path) => fs::write(path, text),
        None => stdout.write_all(text.as_bytes()),
    }
    .map_err(|source| Error::Io {
        path: out.map_or("<stdout>".to_owned(), |p| p.display().to_string()),
        source,
    })
}

fn execute(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, Error> {
    match command {
        Command::Validate {
            schema,
            doc,
            report,
        } => {
            let (entry, macros) = load_template(&read(&schema)?, ParseOptions::default())?;
            let doc = parse_xml_with(&read(&doc)?, ParseOptions::default())?;
            let verdict = validate(&entry, &macros, &doc)?;
            if report {
                emit(&explain(&verdict), None, stdout)?;
            }
            Ok(if verdict.valid { 0 } else { 1 })
        }
        Command::Expand {
            template,
            repo,
            out,
            strict,
            preserve_space,
            fail_on_staged,
            max_macro_depth,
        } => {
            let options = ParseOptions { preserve_space };
            let (entry, macros) = load_template(&read(&template)?, options)?;
            let repo = xml_repository(&parse_xml_with(&read(&repo)?, options)?);
            let settings = ExpansionSettings {
                max_macro_depth,
                staging: !strict,
            };
            let expansion = expand_detailed(&entry, &macros, &repo, settings)?;
            emit(&serialize_xml(&expansion.hedge)?, out.as_deref(), stdout)?;
            if fail_on_staged && !expansion.staged.is_empty() {
                for event in &expansion.staged {
                    let _ = writeln!(
                        stderr,
                        "xtl: staged {}: query {:?} selects nothing",
                        event.path, event.query
                    );
                }
                return Ok(1);
            }
            Ok(0)
        }
        Command::Normalize { input, out } => {
            let (entry, macros) = load_template(&read(&input)?, ParseOptions::default())?;
            let canonical = serialize_xtl(&entry, &macros)?;
            emit(&serialize_xml(&canonical)?, out.as_deref(), stdout)?;
            Ok(0)
        }
        Command::Enumerate {
            schema,
            max_nodes,
            alphabet,
        } => {
            let (entry, macros) = load_template(&read(&schema)?, ParseOptions::default())?;
            let expr = SchemaExpr::atom(&entry, macros)?;
            let names: Vec<&str> = alphabet.iter().map(String::as_str).collect();
            let mut text = String::new();
            for member in enumerate_members(&expr, max_nodes, &names)? {
                text.push_str(&serialize_xml(&member)?);
                text.push('\n');
            }
            stdout
                .write_all(text.as_bytes())
                .map_err(|source| Error::Io {
                    path: "<stdout>".to_owned(),
                    source,
                })?;
            Ok(0)
        }
    }
}
