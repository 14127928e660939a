//! The `psmilu` command-line front end.
//!
//! Subcommands:
//!
//! * `gen`: write a test system as Matrix Market plus a JSON sidecar and a
//!   right-hand side vector.
//! * `factor`: build the preconditioner, save it, and emit JSON statistics.
//! * `solve`: run GMRES with the preconditioner and emit a JSON report.
//! * `bench`: run a size series and write one CSV row per size.
//!
//! Exit codes: 0 success, 1 I/O or other failure, 2 usage error,
//! 3 factorization failure, 4 GMRES did not converge. The environment
//! variable `PSMILU_SEED` overrides `--seed`.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::krylov::{gmres_right, GmresConfig, Identity, SolveReport};
use crate::multilevel::{io, level1_update_flops, psmilu_factor, LevelStats, MultilevelPrec};
use crate::options::{HVariant, Options};
use crate::problems::{self, MatrixKind};
use crate::sparse::mm;
use crate::sparse::Crs;

pub const STATS_SCHEMA_VERSION: u32 = 1;
pub const SEED_ENV: &str = "PSMILU_SEED";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_FACTOR: i32 = 3;
pub const EXIT_NOT_CONVERGED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "psmilu", version, about = "Multilevel incomplete LDU preconditioning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a test system.
    Gen(GenArgs),
    /// Factor a matrix and save the preconditioner.
    Factor(FactorArgs),
    /// Solve a system with preconditioned GMRES.
    Solve(SolveArgs),
    /// Run a size series and write CSV.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    Fdm2d,
    Fdm3d,
    Fdm2dDirichlet,
    Fdm3dDirichlet,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RandomKind {
    Spd,
    SymmetricIndefinite,
    Nonsymmetric,
    ZeroDiagSym,
}

impl From<RandomKind> for MatrixKind {
    fn from(k: RandomKind) -> Self {
        match k {
            RandomKind::Spd => MatrixKind::Spd,
            RandomKind::SymmetricIndefinite => MatrixKind::SymmetricIndefinite,
            RandomKind::Nonsymmetric => MatrixKind::Nonsymmetric,
            RandomKind::ZeroDiagSym => MatrixKind::ZeroDiagSym,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: ProblemKind,
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub ny: Option<usize>,
    #[arg(long)]
    pub nz: Option<usize>,
    /// Size of a random matrix.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    pub density: f64,
    #[arg(long, value_enum, default_value = "nonsymmetric")]
    pub matrix_kind: RandomKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Clone)]
pub struct FactorOptionArgs {
    #[arg(long, default_value_t = 0.01)]
    pub tau_l: f64,
    #[arg(long, default_value_t = 0.01)]
    pub tau_u: f64,
    #[arg(long, default_value_t = 10.0)]
    pub tau_d: f64,
    #[arg(long, default_value_t = 100.0)]
    pub tau_kappa: f64,
    #[arg(long, default_value_t = 4.0)]
    pub alpha_l: f64,
    #[arg(long, default_value_t = 4.0)]
    pub alpha_u: f64,
    #[arg(long, default_value_t = 0.25)]
    pub rho: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c_d: f64,
    #[arg(long, default_value_t = 10.0)]
    pub c_h: f64,
    /// Reference size for the dense switch; defaults to the matrix size.
    #[arg(long)]
    pub n_ref: Option<usize>,
    /// Use the H-version correction as printed in the driver pseudocode.
    #[arg(long)]
    pub h_algorithm1: bool,
    /// Size of the leading symmetric block; read from the sidecar when omitted.
    #[arg(long)]
    pub sym_block: Option<usize>,
}

impl FactorOptionArgs {
    pub fn options(&self) -> Options {
        Options {
            tau_l: self.tau_l,
            tau_u: self.tau_u,
            tau_d: self.tau_d,
            tau_kappa: self.tau_kappa,
            alpha_l: self.alpha_l,
            alpha_u: self.alpha_u,
            rho: self.rho,
            c_d: self.c_d,
            c_h: self.c_h,
            n_ref: self.n_ref,
            h_variant: if self.h_algorithm1 {
                HVariant::Algorithm1
            } else {
                HVariant::Modified
            },
            ..Options::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct FactorArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[command(flatten)]
    pub opts: FactorOptionArgs,
    /// Where to save the preconditioner.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Where to write JSON statistics (stdout when omitted).
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    /// Right-hand side vector; defaults to the sidecar's vector, else all ones.
    #[arg(long)]
    pub rhs: Option<PathBuf>,
    /// Saved preconditioner; factored on the fly when omitted.
    #[arg(long)]
    pub prec: Option<PathBuf>,
    /// Run GMRES without a preconditioner.
    #[arg(long, conflicts_with = "prec")]
    pub no_prec: bool,
    #[command(flatten)]
    pub opts: FactorOptionArgs,
    #[arg(long, default_value_t = 30)]
    pub restart: usize,
    #[arg(long, default_value_t = 1e-12)]
    pub rtol: f64,
    #[arg(long, default_value_t = 2000)]
    pub maxit: usize,
    /// Where to write the solution vector.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Where to write the JSON report (stdout when omitted).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value = "fdm2d")]
    pub kind: ProblemKind,
    /// Grid sides (nodes per side), comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = vec![33usize, 65, 129, 257])]
    pub sides: Vec<usize>,
    /// Skip the GMRES solve for each size.
    #[arg(long)]
    pub no_solve: bool,
    #[command(flatten)]
    pub opts: FactorOptionArgs,
    #[arg(long)]
    pub out: PathBuf,
}

/// Sidecar written next to generated systems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub kind: ProblemKind,
    pub m: usize,
    pub n: usize,
    pub dims: Vec<usize>,
    pub h: Vec<f64>,
    pub seed: u64,
    /// Right-hand side file name, relative to the sidecar.
    pub rhs: String,
    /// Exact nodal solution file name, when known.
    pub exact: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct FactorStats {
    pub schema_version: u32,
    pub n: usize,
    pub nnz: usize,
    pub sym_block: usize,
    pub levels: usize,
    pub fill_ratio: f64,
    pub pivots_per_level: Vec<usize>,
    pub dense_size: usize,
    pub update_flops: u64,
    pub update_flops_sym_path: u64,
    pub update_flops_nonsym_path: u64,
    pub level_stats: Vec<LevelStats>,
}

#[derive(Debug, Serialize)]
pub struct SolveSummary {
    pub schema_version: u32,
    pub n: usize,
    pub converged: bool,
    pub iterations: usize,
    pub restarts: usize,
    pub iterations_1e6: Option<usize>,
    pub iterations_1e12: Option<usize>,
    pub final_relres: f64,
    pub breakdown: bool,
    pub stagnated: bool,
    pub preconditioned: bool,
}

/// One row of the benchmark CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub kind: String,
    pub side: usize,
    pub n: usize,
    pub nnz: usize,
    pub sym_block: usize,
    pub levels: usize,
    pub level1_update_flops: u64,
    pub level1_update_flops_nonsym: u64,
    pub total_flops: u64,
    pub fill_ratio: f64,
    pub gmres_iterations: Option<usize>,
    pub converged: Option<bool>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Factor(Error),
    NotConverged,
    Other(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Other(e)
    }
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Factor(_) => EXIT_FACTOR,
            CliError::NotConverged => EXIT_NOT_CONVERGED,
            CliError::Other(_) => EXIT_FAILURE,
        }
    }
}

fn effective_seed(flag: u64) -> Result<u64, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{SEED_ENV} must be an unsigned integer, got '{s}'"))),
        Err(_) => Ok(flag),
    }
}

fn sidecar_path(matrix: &Path) -> PathBuf {
    matrix.with_extension("meta.json")
}

fn sibling(matrix: &Path, suffix: &str) -> PathBuf {
    matrix.with_extension(suffix)
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn read_sidecar(matrix: &Path) -> Result<Option<Sidecar>, CliError> {
    let path = sidecar_path(matrix);
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    match path {
        Some(p) => fs::write(p, text + "\n").map_err(|e| Error::io(p, e).into()),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn load_matrix(path: &Path) -> Result<Crs, CliError> {
    let t = mm::mm_read(path).map_err(|e| match e {
        Error::Parse { .. } => CliError::Usage(format!("{}: {e}", path.display())),
        other => CliError::Other(other),
    })?;
    let a = Crs::from_triplets(&t)?;
    if a.n_rows() != a.n_cols() {
        return Err(CliError::Usage(format!("matrix must be square, got {}x{}", a.n_rows(), a.n_cols())));
    }
    Ok(a)
}

fn sym_block(args: &FactorOptionArgs, matrix: &Path, a: &Crs) -> Result<usize, CliError> {
    let m0 = match args.sym_block {
        Some(m) => m,
        None => read_sidecar(matrix)?.map_or(0, |s| s.m),
    };
    if m0 > a.n_rows() {
        return Err(CliError::Usage(format!("--sym-block {m0} exceeds matrix size {}", a.n_rows())));
    }
    if !a.leading_block_is_symmetric(m0) {
        return Err(CliError::Usage(format!("leading {m0} x {m0} block is not symmetric")));
    }
    Ok(m0)
}

fn checked_options(args: &FactorOptionArgs) -> Result<Options, CliError> {
    let o = args.options();
    o.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(o)
}

fn factor(a: &Crs, m0: usize, opts: &Options) -> Result<MultilevelPrec, CliError> {
    psmilu_factor(a, m0, opts).map_err(CliError::Factor)
}

fn cmd_gen(args: &GenArgs) -> Result<(), CliError> {
    let seed = effective_seed(args.seed)?;
    let side = |v: Option<usize>, name: &str| -> Result<usize, CliError> {
        match v {
            Some(s) if s >= 3 => Ok(s),
            Some(s) => Err(CliError::Usage(format!("--{name} must be at least 3, got {s}"))),
            None => Err(CliError::Usage(format!("--{name} is required for this kind"))),
        }
    };
    let (a, b, m, dims, h, exact) = match args.kind {
        ProblemKind::Random => {
            let n = args.n.ok_or_else(|| CliError::Usage("--n is required for random matrices".into()))?;
            if n == 0 || !(args.density > 0.0 && args.density <= 1.0) {
                return Err(CliError::Usage("--n must be positive and --density in (0, 1]".into()));
            }
            let kind: MatrixKind = args.matrix_kind.into();
            let a = problems::random_test_matrix(n, args.density, kind, seed);
            let m = if kind == MatrixKind::Nonsymmetric { 0 } else { n };
            let mut b = vec![0.0; n];
            a.matvec(&vec![1.0; n], &mut b);
            (a, b, m, vec![n], vec![], None)
        }
        kind => {
            let nx = side(args.nx, "nx")?;
            let ny = side(args.ny.or(args.nx), "ny")?;
            let sys = match kind {
                ProblemKind::Fdm2d => problems::fdm_poisson_2d(nx, ny),
                ProblemKind::Fdm2dDirichlet => problems::fdm_poisson_2d_dirichlet(nx, ny),
                ProblemKind::Fdm3d | ProblemKind::Fdm3dDirichlet => {
                    let nz = side(args.nz.or(args.nx), "nz")?;
                    if kind == ProblemKind::Fdm3d {
                        problems::fdm_poisson_3d(nx, ny, nz)
                    } else {
                        problems::fdm_poisson_3d_dirichlet(nx, ny, nz)
                    }
                }
                ProblemKind::Random => unreachable!(),
            };
            (sys.a, sys.b, sys.m, sys.meta.dims, sys.meta.h, Some(sys.exact))
        }
    };
    mm::mm_write(&args.out, &a)?;
    let rhs_path = sibling(&args.out, "rhs.mtx");
    mm::write_vector(&rhs_path, &b)?;
    let exact_name = match &exact {
        Some(x) => {
            let p = sibling(&args.out, "exact.mtx");
            mm::write_vector(&p, x)?;
            Some(file_name(&p))
        }
        None => None,
    };
    let meta = Sidecar {
        kind: args.kind,
        m,
        n: a.n_rows(),
        dims,
        h,
        seed,
        rhs: file_name(&rhs_path),
        exact: exact_name,
    };
    write_json(Some(&sidecar_path(&args.out)), &meta)
}

fn factor_stats(a: &Crs, m0: usize, opts: &Options, prec: &MultilevelPrec) -> Result<FactorStats, CliError> {
    let (sym, nonsym) = level1_update_flops(a, m0, opts).map_err(CliError::Factor)?;
    Ok(FactorStats {
        schema_version: STATS_SCHEMA_VERSION,
        n: a.n_rows(),
        nnz: a.nnz(),
        sym_block: m0,
        levels: prec.n_levels(),
        fill_ratio: prec.fill_ratio(),
        pivots_per_level: prec.pivots_per_level(),
        dense_size: prec.dense_size(),
        update_flops: prec.stats.iter().map(|s| s.flops.update()).sum(),
        update_flops_sym_path: sym,
        update_flops_nonsym_path: nonsym,
        level_stats: prec.stats.clone(),
    })
}

fn cmd_factor(args: &FactorArgs) -> Result<(), CliError> {
    let a = load_matrix(&args.matrix)?;
    let m0 = sym_block(&args.opts, &args.matrix, &a)?;
    let opts = checked_options(&args.opts)?;
    let prec = factor(&a, m0, &opts)?;
    if let Some(out) = &args.out {
        io::save(out, &prec)?;
    }
    let stats = factor_stats(&a, m0, &opts, &prec)?;
    write_json(args.stats.as_deref(), &stats)
}

fn load_rhs(args: &SolveArgs, n: usize) -> Result<Vec<f64>, CliError> {
    let path = match &args.rhs {
        Some(p) => Some(p.clone()),
        None => read_sidecar(&args.matrix)?.map(|s| sidecar_path(&args.matrix).with_file_name(s.rhs)),
    };
    let b = match path {
        Some(p) => mm::read_vector(&p).map_err(|e| match e {
            Error::Parse { .. } => CliError::Usage(format!("{}: {e}", p.display())),
            other => CliError::Other(other),
        })?,
        None => vec![1.0; n],
    };
    if b.len() != n {
        return Err(CliError::Usage(format!("right-hand side has length {}, matrix has {n} rows", b.len())));
    }
    Ok(b)
}

fn summarize(rep: &SolveReport, n: usize, preconditioned: bool) -> SolveSummary {
    SolveSummary {
        schema_version: STATS_SCHEMA_VERSION,
        n,
        converged: rep.converged,
        iterations: rep.iterations,
        restarts: rep.restarts,
        iterations_1e6: rep.iterations_to(1e-6),
        iterations_1e12: rep.iterations_to(1e-12),
        final_relres: rep.final_relres,
        breakdown: rep.breakdown,
        stagnated: rep.stagnated,
        preconditioned,
    }
}

fn cmd_solve(args: &SolveArgs) -> Result<(), CliError> {
    let a = load_matrix(&args.matrix)?;
    let n = a.n_rows();
    let b = load_rhs(args, n)?;
    if args.restart == 0 {
        return Err(CliError::Usage("--restart must be at least 1".into()));
    }
    let cfg = GmresConfig {
        restart: args.restart,
        rtol: args.rtol,
        maxit: args.maxit,
    };
    let rep = if args.no_prec {
        gmres_right(&a, &b, &Identity, &cfg)?
    } else {
        let prec = match &args.prec {
            Some(p) => io::load(p)?,
            None => {
                let m0 = sym_block(&args.opts, &args.matrix, &a)?;
                factor(&a, m0, &checked_options(&args.opts)?)?
            }
        };
        if prec.n != n {
            return Err(CliError::Usage(format!("preconditioner has size {}, matrix has {n}", prec.n)));
        }
        gmres_right(&a, &b, &prec, &cfg)?
    };
    if let Some(out) = &args.out {
        mm::write_vector(out, &rep.x)?;
    }
    write_json(args.report.as_deref(), &summarize(&rep, n, !args.no_prec))?;
    if rep.converged {
        Ok(())
    } else {
        Err(CliError::NotConverged)
    }
}

/// Runs one benchmark size.
pub fn bench_row(kind: ProblemKind, side: usize, opts: &Options, solve: bool) -> crate::error::Result<BenchRow> {
    let sys = match kind {
        ProblemKind::Fdm2d => problems::fdm_poisson_2d(side, side),
        ProblemKind::Fdm3d => problems::fdm_poisson_3d(side, side, side),
        ProblemKind::Fdm2dDirichlet => problems::fdm_poisson_2d_dirichlet(side, side),
        ProblemKind::Fdm3dDirichlet => problems::fdm_poisson_3d_dirichlet(side, side, side),
        ProblemKind::Random => return Err(Error::InvalidOption("bench needs a grid problem".into())),
    };
    let prec = psmilu_factor(&sys.a, sys.m, opts)?;
    let (sym, nonsym) = level1_update_flops(&sys.a, sys.m, opts)?;
    let (iters, conv) = if solve {
        let rep = gmres_right(&sys.a, &sys.b, &prec, &GmresConfig::default())?;
        (Some(rep.iterations), Some(rep.converged))
    } else {
        (None, None)
    };
    Ok(BenchRow {
        kind: kind.to_possible_value().expect("named").get_name().to_string(),
        side,
        n: sys.a.n_rows(),
        nnz: sys.a.nnz(),
        sym_block: sys.m,
        levels: prec.n_levels(),
        level1_update_flops: prec.stats[0].flops.update(),
        level1_update_flops_nonsym: nonsym.max(sym),
        total_flops: prec.stats.iter().map(|s| s.flops.total() + s.schur_flops).sum(),
        fill_ratio: prec.fill_ratio(),
        gmres_iterations: iters,
        converged: conv,
    })
}

fn cmd_bench(args: &BenchArgs) -> Result<(), CliError> {
    if args.kind == ProblemKind::Random {
        return Err(CliError::Usage("bench supports grid problems only".into()));
    }
    if let Some(s) = args.sides.iter().find(|&&s| s < 3) {
        return Err(CliError::Usage(format!("grid side {s} is below 3")));
    }
    let opts = checked_options(&args.opts)?;
    let mut w = csv::Writer::from_path(&args.out).map_err(|e| CliError::Other(Error::Corrupt(e.to_string())))?;
    for &side in &args.sides {
        let row = bench_row(args.kind, side, &opts, !args.no_solve).map_err(CliError::Factor)?;
        w.serialize(&row).map_err(|e| CliError::Other(Error::Corrupt(e.to_string())))?;
    }
    w.flush().map_err(|e| Error::io(&args.out, e))?;
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let res = match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Factor(a) => cmd_factor(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match res {
        Ok(()) => EXIT_OK,
        Err(e) => {
            match &e {
                CliError::Usage(msg) => eprintln!("error: {msg}"),
                CliError::Factor(err) => eprintln!("factorization failed: {err}"),
                CliError::NotConverged => eprintln!("GMRES did not converge"),
                CliError::Other(err) => eprintln!("error: {err}"),
            }
            e.code()
        }
    }
}
