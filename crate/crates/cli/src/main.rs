//! Command-line front end: parse monoid definition files, run the
//! resolution / lattice / divisibility pipelines, emit interchange
//! documents, and re-verify towers.
//!
//! Exit codes: 0 success, 1 mathematical property violation or budget,
//! 2 input/format error, 3 internal oracle failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use refinemon::divisibility::{weak_divide, DivisibilityError};
use refinemon::io::{
    canonical_json, CertificateDoc, IoError, LatticeReport, MonoidFile, MonoidKind, NablaReport,
    TowerDoc, TowerVerifyError,
};
use refinemon::lattice::{
    criterion_for_tower, enumerate_ideals_finite, enumerate_ideals_simplicial, nabla, LatticeError,
};
use refinemon::oracle::OracleError;
use refinemon::resolution::{ResolutionError, Tower};

const DEFAULT_RANK_BUDGET: usize = 24;
const RANK_BUDGET_ENV: &str = "REFINEMON_RANK_BUDGET";

#[derive(Parser)]
#[command(
    name = "refinemon",
    version,
    about = "Exact resolutions of refinement monoids by towers of simplicial monoids"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exhaustively verify the monoid axioms of a definition file.
    Check {
        /// Monoid definition file (JSON).
        path: PathBuf,
    },
    /// Build a tower resolving the monoid and emit the tower document.
    Resolve {
        /// Monoid definition file (JSON).
        path: PathBuf,
        /// Number of extensions after stage 0.
        #[arg(long, default_value_t = 3)]
        depth: usize,
        /// Maximum simplicial rank per stage (default 24, or the
        /// REFINEMON_RANK_BUDGET environment variable).
        #[arg(long)]
        rank_budget: Option<usize>,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Independently re-check a tower document against its definition.
    VerifyTower {
        /// Tower document (JSON).
        tower: PathBuf,
        /// Monoid definition file the tower was built from.
        definition: PathBuf,
    },
    /// Emit the maximal semilattice quotient report.
    Nabla {
        path: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit the ideal-lattice report.
    Ideals {
        path: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Produce a verified weak-divisibility certificate.
    Divide {
        path: PathBuf,
        /// Element to divide: coordinates for free monoids
        /// (comma-separated), a name or index for table monoids.
        #[arg(long)]
        element: String,
        /// Target coefficients, comma separated (e.g. 2,3).
        #[arg(long, value_delimiter = ',', required = true)]
        targets: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A classified failure: exit code plus message.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    fn violation(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        Failure {
            code: 3,
            message: message.into(),
        }
    }
}

fn classify_oracle(e: OracleError) -> Failure {
    match e {
        OracleError::SearchBudget(_) => Failure::violation(e.to_string()),
        other => Failure::internal(other.to_string()),
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Oracle(inner) => classify_oracle(inner),
            other => Failure::input(other.to_string()),
        }
    }
}

impl From<ResolutionError> for Failure {
    fn from(e: ResolutionError) -> Self {
        match &e {
            ResolutionError::RankBudget { .. } => Failure::violation(e.to_string()),
            ResolutionError::Precondition(_)
            | ResolutionError::StageOutOfRange { .. }
            | ResolutionError::InsufficientDepth { .. }
            | ResolutionError::Simplicial(_) => Failure::input(e.to_string()),
            ResolutionError::Oracle(inner) => classify_oracle(inner.clone()),
            ResolutionError::Invariant(_) => Failure::internal(e.to_string()),
        }
    }
}

impl From<LatticeError> for Failure {
    fn from(e: LatticeError) -> Self {
        match &e {
            LatticeError::Budget(_) => Failure::violation(e.to_string()),
            LatticeError::NotFinite(_)
            | LatticeError::Precondition(_)
            | LatticeError::Simplicial(_) => Failure::input(e.to_string()),
            LatticeError::Oracle(inner) => classify_oracle(inner.clone()),
            LatticeError::Resolution(_) => Failure::internal(e.to_string()),
        }
    }
}

impl From<DivisibilityError> for Failure {
    fn from(e: DivisibilityError) -> Self {
        match &e {
            DivisibilityError::GcdDoesNotDivide { .. }
            | DivisibilityError::NotWeaklyDivisibleDegree2 { .. }
            | DivisibilityError::NotRepresentable { .. }
            | DivisibilityError::Budget(_) => Failure::violation(e.to_string()),
            DivisibilityError::Precondition(_) => Failure::input(e.to_string()),
            DivisibilityError::Oracle(inner) => classify_oracle(inner.clone()),
            DivisibilityError::Invariant(_) => Failure::internal(e.to_string()),
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        classify_oracle(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("refinemon: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Check { path } => cmd_check(&path),
        Command::Resolve {
            path,
            depth,
            rank_budget,
            out,
        } => cmd_resolve(&path, depth, rank_budget, out.as_deref()),
        Command::VerifyTower { tower, definition } => cmd_verify_tower(&tower, &definition),
        Command::Nabla { path, out } => cmd_nabla(&path, out.as_deref()),
        Command::Ideals { path, out } => cmd_ideals(&path, out.as_deref()),
        Command::Divide {
            path,
            element,
            targets,
            out,
        } => cmd_divide(&path, &element, &targets, out.as_deref()),
    }
}

fn load_definition(path: &Path) -> Result<MonoidFile, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    Ok(MonoidFile::parse(&text)?)
}

/// Gate for every pipeline command: the definition must pass its axioms.
fn checked_definition(path: &Path) -> Result<MonoidFile, Failure> {
    let file = load_definition(path)?;
    if let Some(report) = file.axiom_report()? {
        if !report.passed() {
            let first = &report.violations[0];
            return Err(Failure::violation(format!(
                "{} axiom violations, first: {first}",
                report.violations.len()
            )));
        }
    }
    Ok(file)
}

fn emit(bytes: &[u8], out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, bytes)
            .map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{}", String::from_utf8_lossy(bytes));
            Ok(())
        }
    }
}

fn rank_budget_from(flag: Option<usize>) -> Result<usize, Failure> {
    if let Some(b) = flag {
        return Ok(b);
    }
    match std::env::var(RANK_BUDGET_ENV) {
        Ok(v) => v
            .parse::<usize>()
            .map_err(|_| Failure::input(format!("bad {RANK_BUDGET_ENV} value '{v}'"))),
        Err(_) => Ok(DEFAULT_RANK_BUDGET),
    }
}

fn cmd_check(path: &Path) -> Result<(), Failure> {
    let file = load_definition(path)?;
    match file.axiom_report()? {
        None => {
            println!(
                "{}: free commutative monoid, axioms hold by construction",
                file.kind.as_str()
            );
            Ok(())
        }
        Some(report) => {
            println!(
                "{}: {} elements, {} refinement quadruples checked",
                file.kind.as_str(),
                report.size,
                report.quadruples_checked
            );
            if report.passed() {
                println!("all axioms pass");
                Ok(())
            } else {
                for v in &report.violations {
                    println!("{v}");
                }
                Err(Failure::violation(format!(
                    "{} axiom violations",
                    report.violations.len()
                )))
            }
        }
    }
}

fn cmd_resolve(
    path: &Path,
    depth: usize,
    rank_budget: Option<usize>,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let file = checked_definition(path)?;
    let budget = rank_budget_from(rank_budget)?;
    let oracle = file.build_oracle()?;
    let mut tower = Tower::start(oracle.as_ref(), budget)?;
    for _ in 0..depth {
        tower.extend()?;
    }
    let doc = TowerDoc::from_tower(&tower, &file)?;
    emit(&canonical_json(&doc)?, out)?;
    eprintln!(
        "resolved to depth {depth}: stage ranks {:?}",
        tower
            .stages()
            .iter()
            .map(|s| s.delta.rank())
            .collect::<Vec<_>>()
    );
    Ok(())
}

fn cmd_verify_tower(tower_path: &Path, definition_path: &Path) -> Result<(), Failure> {
    let file = load_definition(definition_path)?;
    let text = fs::read_to_string(tower_path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", tower_path.display())))?;
    let doc = TowerDoc::parse(&text)?;
    match doc.verify(&file) {
        Ok(()) => {
            println!(
                "tower verified: {} stages, commutativity, enumeration prefix and propagation hold",
                doc.stages.len()
            );
            Ok(())
        }
        Err(TowerVerifyError::Format(msg)) => Err(Failure::input(msg)),
        Err(TowerVerifyError::Violation(msg)) => Err(Failure::violation(msg)),
        Err(TowerVerifyError::Oracle(e)) => Err(Failure::internal(e.to_string())),
    }
}

fn cmd_nabla(path: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let file = checked_definition(path)?;
    let oracle = file.build_oracle()?;
    let quotient = nabla(oracle.as_ref())?;
    let report = NablaReport::new(file.kind.as_str().to_string(), &quotient);
    emit(&canonical_json(&report)?, out)
}

fn cmd_ideals(path: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let file = checked_definition(path)?;
    let report = match file.kind {
        MonoidKind::Naturals => LatticeReport::new(
            file.kind.as_str().to_string(),
            &enumerate_ideals_simplicial(1)?,
            None,
        ),
        MonoidKind::Simplicial => LatticeReport::new(
            file.kind.as_str().to_string(),
            &enumerate_ideals_simplicial(file.rank.unwrap_or(1))?,
            None,
        ),
        MonoidKind::Cayley | MonoidKind::Semilattice => {
            let oracle = file.build_oracle()?;
            let lattice = enumerate_ideals_finite(oracle.as_ref())?;
            // Isomorphism certificate: a resolving tower covering the
            // carrier has an isomorphic ideal lattice.
            let size = oracle.size().expect("table kind");
            let mut tower = Tower::start(oracle.as_ref(), DEFAULT_RANK_BUDGET)?;
            for _ in 0..(size + 1) {
                tower.extend()?;
            }
            let criterion = criterion_for_tower(&tower)?;
            LatticeReport::new(file.kind.as_str().to_string(), &lattice, Some(&criterion))
        }
    };
    emit(&canonical_json(&report)?, out)
}

fn cmd_divide(
    path: &Path,
    element: &str,
    targets: &[u64],
    out: Option<&Path>,
) -> Result<(), Failure> {
    if targets.contains(&0) {
        return Err(Failure::input("targets must be positive"));
    }
    let file = checked_definition(path)?;
    let oracle = file.build_oracle()?;
    let x = file.parse_element(element)?;
    let certificate = weak_divide(oracle.as_ref(), &x, targets)?;
    let doc = CertificateDoc::from_certificate(&certificate, oracle.as_ref())?;
    emit(&canonical_json(&doc)?, out)
}
