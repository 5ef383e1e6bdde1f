use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use choquard_core::analysis::{verify, Tolerances};
use choquard_core::cache::{default_cache_dir, load_or_build};
use choquard_core::exponents::{phase_diagram, regime_label, DEFAULT_MAX_J};
use choquard_core::io::{to_json_string, write_json, write_phase_csv, write_profile_csv};
use choquard_core::solver::{estimate_kstar, iterate, nonexistence_probe, IterateOptions};
use choquard_core::verify::{run_suite, Suite};
use choquard_core::{
    classify, make_grid, predicted_decay, tau_sequence, Error, ProblemParams, RadialGrid, Result, SolveVerdict,
    TauSequence, Verdict, Workspace,
};

mod config;
mod report;

use config::{Overrides, RunConfig};
use report::{render_text, SolveReport};

const EXIT_FAILED: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_DIVERGED: u8 = 4;
const EXIT_MAX_ITER: u8 = 5;

/// Singular solutions of the sublinear Choquard equation
/// -Δu + u = I_α[u^p] u^q in ℝ^N \ {0}.
///
/// Exit codes: 0 success or Converged, 1 failed check, 2 invalid input or
/// wrong region, 3 I/O failure, 4 DivergedRiesz, 5 MaxIterations.
#[derive(Parser, Debug)]
#[command(name = "choquard", version, about, long_about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify (N, α, p, q) into its existence region
    #[command(allow_negative_numbers = true)]
    Classify { dim: u32, alpha: f64, p: f64, q: f64 },
    /// Print the bootstrap exponent sequence and its divergence criterion
    #[command(allow_negative_numbers = true)]
    TauSeq {
        dim: u32,
        alpha: f64,
        p: f64,
        q: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_J)]
        max_j: usize,
    },
    /// Classify every cell of a (p, q) lattice and write the regions as CSV
    PhaseDiagram(PhaseArgs),
    /// Run the monotone iteration and verify the computed profile
    Solve(SolveArgs),
    /// Bracket the threshold Dirac mass k* by bisection on convergence
    Kstar(RunArgs),
    /// Certify the divergence criterion and run a defensive iteration
    ProbeNonexistence(RunArgs),
    /// Run a seeded invariant suite: exponents, green, riesz, solver, analysis or all
    Verify {
        suite: String,
        #[arg(default_value_t = 42)]
        seed: u64,
        /// Print the outcomes as JSON instead of text
        #[arg(long)]
        json: bool,
    },
}

fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected `lo,hi`, got `{s}`"))?;
    let lo = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let hi = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((lo, hi))
}

#[derive(Args, Debug)]
struct PhaseArgs {
    #[arg(long, default_value_t = 3)]
    dim: u32,
    #[arg(long)]
    alpha: f64,
    /// p range as `lo,hi`; cells sample the open interval
    #[arg(long, default_value = "0,4", value_parser = parse_range)]
    p_range: (f64, f64),
    /// q range as `lo,hi`
    #[arg(long, default_value = "0,1", value_parser = parse_range)]
    q_range: (f64, f64),
    #[arg(long, default_value_t = 200)]
    res_p: usize,
    #[arg(long, default_value_t = 100)]
    res_q: usize,
    /// Output CSV (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    /// JSON run configuration; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dim: Option<u32>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    /// Dirac mass [default: 0]
    #[arg(long)]
    k: Option<f64>,
    /// Inner grid radius [default: 1e-4]
    #[arg(long)]
    r_min: Option<f64>,
    /// Outer grid radius [default: 100]
    #[arg(long)]
    r_max: Option<f64>,
    /// Grid nodes [default: 2048]
    #[arg(long)]
    n: Option<usize>,
    /// Relative sup-norm stopping tolerance [default: 1e-8]
    #[arg(long)]
    tol: Option<f64>,
    /// Iteration cap [default: 500]
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for reports and profiles [default: choquard-out]
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Kernel cache directory [default: $CHOQUARD_CACHE_DIR or ~/.cache/choquard]
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Build the Riesz kernel without reading or writing the cache
    #[arg(long)]
    no_cache: bool,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Sweep over these Dirac masses instead of the configured k
    #[arg(long, value_delimiter = ',')]
    k_values: Vec<f64>,
    /// Concurrent solves in a sweep
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let o = Overrides {
            dim: self.dim,
            alpha: self.alpha,
            p: self.p,
            q: self.q,
            k: self.k,
            r_min: self.r_min,
            r_max: self.r_max,
            n: self.n,
            tol: self.tol,
            max_iter: self.max_iter,
            seed: self.seed,
            output_dir: self.output_dir.clone(),
        };
        RunConfig::resolve(self.config.as_deref(), &o)
    }

    fn cache_dir(&self) -> Option<PathBuf> {
        if self.no_cache {
            None
        } else {
            self.cache_dir.clone().or_else(default_cache_dir)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => EXIT_IO,
        Error::Domain(_)
        | Error::Grid(_)
        | Error::Region { .. }
        | Error::Configuration(_)
        | Error::Parse(_)
        | Error::Json(_) => EXIT_INPUT,
        _ => EXIT_FAILED,
    }
}

fn verdict_code(v: SolveVerdict) -> u8 {
    match v {
        SolveVerdict::Converged => 0,
        SolveVerdict::DivergedRiesz => EXIT_DIVERGED,
        SolveVerdict::MaxIterations => EXIT_MAX_ITER,
    }
}

fn print_json<T: Serialize + ?Sized>(value: &T) -> Result<()> {
    let s = to_json_string(value)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "{s}")?;
    Ok(())
}

fn options(cfg: &RunConfig) -> IterateOptions {
    IterateOptions {
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        ..IterateOptions::default()
    }
}

fn grid_of(cfg: &RunConfig) -> Result<Arc<RadialGrid>> {
    let g = &cfg.grid;
    Ok(Arc::new(make_grid(g.r_min, g.r_max, g.n, cfg.params.dim)?))
}

fn workspace(cfg: &RunConfig, cache: Option<&Path>) -> Result<Workspace> {
    let kernel = load_or_build(cache, cfg.params.dim, cfg.params.alpha, grid_of(cfg)?)?;
    Workspace::with_kernel(cfg.params, Arc::new(kernel))
}

fn require_region(params: &ProblemParams, expected: Verdict) -> Result<()> {
    let v = classify(params)?.verdict;
    if v != expected {
        return Err(Error::Region {
            expected: expected.to_string(),
            actual: v.to_string(),
        });
    }
    Ok(())
}

#[derive(Serialize)]
struct ClassifyOutput {
    params: ProblemParams,
    #[serde(flatten)]
    region: choquard_core::RegionVerdict,
    regime: &'static str,
    decay_exponent: Option<f64>,
}

fn cmd_classify(dim: u32, alpha: f64, p: f64, q: f64) -> Result<u8> {
    let params = ProblemParams::new(dim, alpha, p, q)?;
    let region = classify(&params)?;
    let decay = if region.verdict == Verdict::ExistenceWithDirac {
        Some(predicted_decay(&params)?.exponent)
    } else {
        None
    };
    let regime = regime_label(&region);
    match decay {
        Some(e) => println!("{} (regime {regime}, decay exponent {e})", region.verdict),
        None => println!("{}", region.verdict),
    }
    print_json(&ClassifyOutput {
        params,
        region,
        regime,
        decay_exponent: decay,
    })?;
    Ok(0)
}

#[derive(Serialize)]
struct TauOutput {
    params: ProblemParams,
    #[serde(flatten)]
    sequence: TauSequence,
    divergence_criterion: Option<f64>,
    certified: bool,
}

fn cmd_tau_seq(dim: u32, alpha: f64, p: f64, q: f64, max_j: usize) -> Result<u8> {
    let params = ProblemParams::new(dim, alpha, p, q)?;
    let sequence = tau_sequence(&params, max_j)?;
    let criterion = sequence.divergence_criterion(&params);
    print_json(&TauOutput {
        params,
        sequence,
        divergence_criterion: criterion,
        certified: criterion.is_some_and(|c| c >= 0.0),
    })?;
    Ok(0)
}

fn cmd_phase_diagram(a: &PhaseArgs) -> Result<u8> {
    if a.res_p < 16 || a.res_q < 16 {
        return Err(Error::Domain(format!(
            "resolution must be at least 16 per axis, got {}×{}",
            a.res_p, a.res_q
        )));
    }
    let rows = phase_diagram(a.dim, a.alpha, a.p_range, a.q_range, a.res_p, a.res_q)?;
    match &a.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            write_phase_csv(&rows, &mut w)?;
            w.flush()?;
        }
        None => {
            let mut w = BufWriter::new(std::io::stdout().lock());
            write_phase_csv(&rows, &mut w)?;
            w.flush()?;
        }
    }
    Ok(0)
}

fn solve_one(ws: &Workspace, cfg: &RunConfig, k: f64, stem: &str) -> Result<SolveReport> {
    let mut cfg = cfg.clone();
    cfg.params.k = k;
    let run = iterate(ws, k, &options(&cfg))?;
    let mut report = SolveReport::new(&cfg, &run);
    if run.verdict == SolveVerdict::Converged {
        let potential = ws.kernel.apply(&run.u.powf(cfg.params.p))?;
        match verify(&run.u, &run.params, ws.gamma0.c_n, Some(&potential), &Tolerances::default()) {
            Ok(v) => report.verification = Some(v),
            Err(e) => report.verification_note = Some(e.to_string()),
        }
    } else {
        report.verification_note = Some(format!("run ended {}", run.verdict));
    }
    let csv = format!("{stem}_profile.csv");
    let mut w = BufWriter::new(File::create(cfg.output_dir.join(&csv))?);
    write_profile_csv(&run.u, &mut w)?;
    w.flush()?;
    report.profile = Some(csv);
    write_json(&cfg.output_dir.join(format!("{stem}_report.json")), &report)?;
    Ok(report)
}

fn cmd_solve(a: &SolveArgs) -> Result<u8> {
    let cfg = a.run.resolve()?;
    require_region(&cfg.params, Verdict::ExistenceWithDirac)?;
    let sweep = !a.k_values.is_empty();
    let ks = if sweep { a.k_values.clone() } else { vec![cfg.params.k] };
    for k in &ks {
        cfg.params.with_k(*k)?;
    }
    let ws = workspace(&cfg, a.run.cache_dir().as_deref())?;
    std::fs::create_dir_all(&cfg.output_dir)?;

    let reports: Vec<SolveReport> = if sweep {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(a.jobs.max(1))
            .build()
            .map_err(|e| Error::Configuration(e.to_string()))?;
        // each run writes its own files; collection keeps parameter order
        let results: Vec<Result<SolveReport>> = pool.install(|| {
            ks.par_iter()
                .enumerate()
                .map(|(i, k)| solve_one(&ws, &cfg, *k, &format!("run{i:04}")))
                .collect()
        });
        let reports = results.into_iter().collect::<Result<Vec<_>>>()?;
        write_json(&cfg.output_dir.join("sweep.json"), &reports)?;
        reports
    } else {
        vec![solve_one(&ws, &cfg, ks[0], "solve")?]
    };

    for r in &reports {
        eprint!("{}", render_text(r));
    }
    if sweep {
        print_json(&reports)?;
    } else {
        print_json(&reports[0])?;
    }
    Ok(reports
        .iter()
        .map(|r| verdict_code(r.verdict))
        .find(|c| *c != 0)
        .unwrap_or(0))
}

fn cmd_kstar(a: &RunArgs) -> Result<u8> {
    let cfg = a.resolve()?;
    require_region(&cfg.params, Verdict::ExistenceWithDirac)?;
    let ws = workspace(&cfg, a.cache_dir().as_deref())?;
    let bracket = estimate_kstar(&ws, &options(&cfg))?;
    eprintln!(
        "k* in [{:.6e}, {:.6e}]{}",
        bracket.k_lo,
        bracket.k_hi,
        if bracket.open_above { " (open above)" } else { "" }
    );
    print_json(&bracket)?;
    Ok(0)
}

fn cmd_probe(a: &RunArgs) -> Result<u8> {
    let cfg = a.resolve()?;
    require_region(&cfg.params, Verdict::Nonexistence)?;
    let report = nonexistence_probe(&cfg.params, grid_of(&cfg)?, &options(&cfg))?;
    eprintln!(
        "criterion {:?} (certified {}), iteration at k = {}: {}",
        report.criterion, report.certified, report.k, report.iteration_verdict
    );
    print_json(&report)?;
    let consistent = report.certified && report.iteration_verdict != SolveVerdict::Converged;
    Ok(if consistent { 0 } else { EXIT_FAILED })
}

fn cmd_verify(suite: &str, seed: u64, json: bool) -> Result<u8> {
    let suite: Suite = suite.parse()?;
    let reports = run_suite(suite, seed);
    if json {
        print_json(&reports)?;
    } else {
        let mut out = std::io::stdout().lock();
        for o in reports.iter().flat_map(|r| &r.outcomes) {
            writeln!(out, "{o}")?;
        }
    }
    let failed: Vec<String> = reports
        .iter()
        .flat_map(|r| r.failures())
        .map(|o| format!("{}/{}", o.suite, o.name))
        .collect();
    if failed.is_empty() {
        Ok(0)
    } else {
        eprintln!("failing properties: {}", failed.join(", "));
        Ok(EXIT_FAILED)
    }
}

fn run(cli: Cli) -> Result<u8> {
    match &cli.command {
        Command::Classify { dim, alpha, p, q } => cmd_classify(*dim, *alpha, *p, *q),
        Command::TauSeq {
            dim,
            alpha,
            p,
            q,
            max_j,
        } => cmd_tau_seq(*dim, *alpha, *p, *q, *max_j),
        Command::PhaseDiagram(a) => cmd_phase_diagram(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Kstar(a) => cmd_kstar(a),
        Command::ProbeNonexistence(a) => cmd_probe(a),
        Command::Verify { suite, seed, json } => cmd_verify(suite, *seed, *json),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        // a closed stdout (e.g. piped into `head`) is not a failure
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
