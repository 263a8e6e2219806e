//! The `nonseq` command line: build, verify, sequence, certify, catalog.
//!
//! Every command prints `KEY: value` lines on stdout. Exit codes:
//!
//! | code | meaning                                              |
//! |------|------------------------------------------------------|
//! | 0    | success                                              |
//! | 1    | a check failed (verify, certify, catalog)            |
//! | 2    | invalid arguments or malformed input                 |
//! | 3    | `sequence`: search exhausted, no admissible sequence |
//! | 4    | `sequence`: node budget hit                          |

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::constructions::{corollary_psts, theorem_a, BuildOptions, ConstructionError};
use crate::design::{check_certificate, validate_psts, validate_sts, Point};
use crate::document::DesignDocument;
use crate::gdd::GddCache;
use crate::sequencing::{
    find_admissible_sequence, theorem1_certify, SegmentPolicy, SequenceOutcome,
    DEFAULT_SEQUENCE_BUDGET,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SEQUENCE_NONE: i32 = 3;
pub const EXIT_SEQUENCE_BUDGET: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "nonseq", version, about = "Certified nonsequenceable Steiner triple systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a certified STS(n), or a PSTS(n) with `--a` blocks removed.
    Build {
        n: usize,
        /// Number of blocks to remove from the class missing `--x0`.
        #[arg(long)]
        a: Option<usize>,
        #[arg(long, default_value_t = 0)]
        x0: Point,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the document here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a design document and its certificate.
    Verify { file: PathBuf },
    /// Search for an admissible sequence.
    Sequence {
        file: PathBuf,
        #[arg(long, default_value_t = SegmentPolicy::AllIntervals)]
        policy: SegmentPolicy,
        #[arg(long, default_value_t = DEFAULT_SEQUENCE_BUDGET)]
        budget: u64,
    },
    /// Search a certificate and write it into the document.
    Certify {
        file: PathBuf,
        /// Write the updated document here instead of in place.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build, verify and write every order in a range.
    Catalog {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 13)]
        from: usize,
        #[arg(long, default_value_t = 121)]
        to: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Parses `args` and runs the command. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return EXIT_USAGE;
            }
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_USAGE
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<i32> {
    match cmd {
        Command::Build { n, a, x0, seed, out: path } => cmd_build(n, a, x0, seed, path.as_deref(), out, err),
        Command::Verify { file } => cmd_verify(&load(&file)?, out),
        Command::Sequence { file, policy, budget } => cmd_sequence(&load(&file)?, policy, budget, out),
        Command::Certify { file, out: dest } => {
            let doc = load(&file)?;
            cmd_certify(doc, dest.as_deref().unwrap_or(&file), out)
        }
        Command::Catalog { dir, from, to, seed } => cmd_catalog(&dir, from, to, seed, out),
    }
}

/// Reads and shape-checks a document.
pub fn load(path: &Path) -> anyhow::Result<DesignDocument> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    DesignDocument::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn options(seed: u64) -> BuildOptions {
    BuildOptions { seed, cache: GddCache::from_env() }
}

pub fn cmd_build(
    n: usize,
    a: Option<usize>,
    x0: Point,
    seed: u64,
    path: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> anyhow::Result<i32> {
    let opts = options(seed);
    let built = match a {
        None => theorem_a(n, &opts),
        Some(a) => corollary_psts(n, a, x0, &opts),
    };
    let certified = match built {
        Ok(c) => c,
        Err(
            e @ (ConstructionError::OrderSeven
            | ConstructionError::BadOrder(_)
            | ConstructionError::RemovalOutOfRange { .. }
            | ConstructionError::BadPoint { .. }),
        ) => {
            writeln!(err, "error: {e}")?;
            return Ok(EXIT_USAGE);
        }
        Err(e) => {
            writeln!(err, "error: {e}")?;
            return Ok(EXIT_CHECK_FAILED);
        }
    };
    let doc = DesignDocument::from_certified(&certified);
    match path {
        Some(p) => {
            fs::write(p, doc.to_json()).with_context(|| format!("writing {}", p.display()))?;
            writeln!(out, "ORDER: {}", doc.order)?;
            writeln!(out, "BLOCKS: {}", doc.blocks.len())?;
            writeln!(out, "CERTIFICATE: {}", certified.certificate.len())?;
            writeln!(out, "PROVENANCE: {}", doc.provenance)?;
            writeln!(out, "OUT: {}", p.display())?;
        }
        None => writeln!(out, "{}", doc.to_json())?,
    }
    Ok(EXIT_OK)
}

pub fn cmd_verify(doc: &DesignDocument, out: &mut dyn Write) -> anyhow::Result<i32> {
    let d = doc.design();
    let psts = validate_psts(&d);
    let sts = validate_sts(&d);
    writeln!(out, "ORDER: {}", d.order())?;
    writeln!(out, "BLOCKS: {}", d.size())?;
    writeln!(out, "PSTS: {psts}")?;
    writeln!(out, "STS: {}", if sts.is_ok() { "ok".to_string() } else { format!("no ({})", sts.violation.as_ref().unwrap()) })?;
    writeln!(out, "KIND: {}", if sts.is_ok() { "STS" } else if psts.is_ok() { "PSTS" } else { "invalid" })?;
    let mut pass = psts.is_ok();
    match doc.certificate() {
        None => writeln!(out, "CERTIFICATE: absent")?,
        Some(c) => {
            let check = check_certificate(&d, &c);
            if check.is_ok() {
                writeln!(out, "CERTIFICATE: ok ({} entries, {} required)", check.entries, check.required)?;
                writeln!(out, "NONSEQUENCEABLE: yes")?;
            } else {
                pass = false;
                writeln!(
                    out,
                    "CERTIFICATE: fail ({} entries, {} required, {} bad)",
                    check.entries,
                    check.required,
                    check.bad_entries.len()
                )?;
                for p in &check.bad_entries {
                    writeln!(out, "BAD_ENTRY: missed={}", doc.label(*p))?;
                }
            }
        }
    }
    writeln!(out, "VERDICT: {}", if pass { "pass" } else { "fail" })?;
    Ok(if pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

pub fn cmd_sequence(
    doc: &DesignDocument,
    policy: SegmentPolicy,
    budget: u64,
    out: &mut dyn Write,
) -> anyhow::Result<i32> {
    let d = doc.design();
    let r = find_admissible_sequence(&d, policy, budget);
    writeln!(out, "POLICY: {policy}")?;
    writeln!(out, "NODES: {}", r.nodes)?;
    Ok(match r.outcome {
        SequenceOutcome::Found(s) => {
            let labels: Vec<String> = s.points().iter().map(|&p| doc.label(p)).collect();
            writeln!(out, "SEQUENCE: {}", labels.join(" "))?;
            EXIT_OK
        }
        SequenceOutcome::Exhausted => {
            writeln!(out, "SEQUENCE: NONE (exhausted)")?;
            EXIT_SEQUENCE_NONE
        }
        SequenceOutcome::BudgetExhausted => {
            writeln!(out, "SEQUENCE: BUDGET")?;
            EXIT_SEQUENCE_BUDGET
        }
    })
}

pub fn cmd_certify(mut doc: DesignDocument, dest: &Path, out: &mut dyn Write) -> anyhow::Result<i32> {
    let d = doc.design();
    match theorem1_certify(&d) {
        Ok(c) => {
            doc.set_certificate(&c);
            fs::write(dest, doc.to_json()).with_context(|| format!("writing {}", dest.display()))?;
            writeln!(out, "CERTIFY: ok")?;
            writeln!(out, "ENTRIES: {}", c.len())?;
            writeln!(out, "OUT: {}", dest.display())?;
            Ok(EXIT_OK)
        }
        Err(f) => {
            let missing: Vec<String> = f.missing.iter().map(|&p| doc.label(p)).collect();
            writeln!(out, "CERTIFY: fail")?;
            writeln!(out, "ENTRIES: {}", f.partial.len())?;
            writeln!(out, "MISSING: {}", missing.join(" "))?;
            Ok(EXIT_CHECK_FAILED)
        }
    }
}

#[derive(Serialize)]
struct CatalogEntry {
    order: usize,
    file: String,
    blocks: usize,
    certificate_entries: usize,
    verified: bool,
    provenance: String,
}

pub fn cmd_catalog(dir: &Path, from: usize, to: usize, seed: u64, out: &mut dyn Write) -> anyhow::Result<i32> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let opts = options(seed);
    let mut index = Vec::new();
    let mut all_ok = true;
    for n in (from..=to).filter(|&n| n % 6 == 1 && n != 7) {
        let start = Instant::now();
        let c = match theorem_a(n, &opts) {
            Ok(c) => c,
            Err(e) => {
                writeln!(out, "STS({n}): error ({e})")?;
                all_ok = false;
                continue;
            }
        };
        let verified = validate_sts(&c.design).is_ok() && check_certificate(&c.design, &c.certificate).is_ok();
        all_ok &= verified;
        let file = format!("sts-{n}.json");
        let doc = DesignDocument::from_certified(&c);
        fs::write(dir.join(&file), doc.to_json())?;
        writeln!(
            out,
            "STS({n}): blocks={} entries={} verified={} secs={:.3}",
            c.design.size(),
            c.certificate.len(),
            if verified { "yes" } else { "no" },
            start.elapsed().as_secs_f64()
        )?;
        index.push(CatalogEntry {
            order: n,
            file,
            blocks: c.design.size(),
            certificate_entries: c.certificate.len(),
            verified,
            provenance: doc.provenance,
        });
    }
    fs::write(dir.join("catalog.json"), serde_json::to_string_pretty(&index)?)?;
    writeln!(out, "ENTRIES: {}", index.len())?;
    writeln!(out, "VERDICT: {}", if all_ok { "pass" } else { "fail" })?;
    Ok(if all_ok { EXIT_OK } else { EXIT_CHECK_FAILED })
}
