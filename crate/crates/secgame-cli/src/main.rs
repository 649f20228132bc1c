//! Command-line front end: load game specs, run the equilibrium solvers,
//! verify solutions against brute force, generate network-value utilities,
//! and dump the utility transforms for inspection.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 verification failure,
//! 3 solver failure.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};

use secgame::lpengine::{Backend, SolverConfig};
use secgame::model::{network_value_benefits, support_set};
use secgame::oracles::{dop_linear, enumerate_system_for, OptSense};
use secgame::solvers::{solve_ne_additive, solve_sse, solve_zero_sum, EquilibriumResult};
use secgame::spec_io::{
    self, load_game_path, parse_candidate_sets, parse_edge_list, round_sig, SolutionDoc,
};
use secgame::verify::{brute_minimax, brute_sse, check_ne, check_sse, expand_normal_form};

const EXIT_USAGE: u8 = 1;
const EXIT_VERIFICATION: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser)]
#[command(name = "secgame", version, about = "Security-game equilibrium solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ConceptFlag {
    Ne,
    Sse,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendFlag {
    Colgen,
    Ellipsoid,
}

#[derive(Args)]
struct SolverFlags {
    /// Feasibility tolerance for membership and decomposition.
    #[arg(long, default_value_t = 1e-7)]
    feas_tol: f64,
    /// Optimality tolerance for pricing and separation.
    #[arg(long, default_value_t = 1e-6)]
    opt_tol: f64,
    /// Iteration cap; defaults to 500 for column generation and
    /// 10*(2|S|+1)^2 for the ellipsoid.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Which backend drives the compact program.
    #[arg(long, value_enum, default_value = "colgen")]
    backend: BackendFlag,
    /// Seed for randomized paths (oracle trials).
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SolverFlags {
    fn config(&self) -> Result<SolverConfig, String> {
        if self.feas_tol <= 0.0 || self.opt_tol <= 0.0 {
            return Err("tolerances must be positive".into());
        }
        if self.max_iters == Some(0) {
            return Err("--max-iters must be at least 1".into());
        }
        Ok(SolverConfig {
            feas_tol: self.feas_tol,
            opt_tol: self.opt_tol,
            max_iters: self.max_iters,
            backend: match self.backend {
                BackendFlag::Colgen => Backend::ColGen,
                BackendFlag::Ellipsoid => Backend::Ellipsoid,
            },
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute an equilibrium of a game spec.
    Solve {
        /// Game spec document (JSON).
        spec: PathBuf,
        /// Solution concept to compute.
        #[arg(long, value_enum)]
        concept: ConceptFlag,
        /// Write the solution document here instead of stdout.
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[command(flatten)]
        flags: SolverFlags,
    },
    /// Check a solution (or the solvers themselves) against brute force.
    Verify {
        /// Game spec document (JSON).
        spec: PathBuf,
        /// Solution document produced by solve; when omitted, the matching
        /// solver runs and its output is certified instead.
        #[arg(long)]
        solution: Option<PathBuf>,
        /// Concept to certify when no solution document is given.
        #[arg(long, value_enum, default_value = "ne")]
        concept: ConceptFlag,
        /// Violation tolerance.
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        #[command(flatten)]
        flags: SolverFlags,
    },
    /// Compute network-value benefits for candidate target sets.
    GenNetwork {
        /// Edge list, one `u v` pair per line, 0-based.
        graph: PathBuf,
        /// Candidate sets, one whitespace-separated index list per line.
        sets: PathBuf,
        /// Write the utilities fragment here instead of stdout.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Print the common utilities and support set of a game spec.
    Transform {
        /// Game spec document (JSON).
        spec: PathBuf,
    },
    /// Compare the defender oracle against exhaustive enumeration on random
    /// weight vectors.
    OracleTest {
        /// Game spec document (JSON).
        spec: PathBuf,
        /// Number of random weight vectors.
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[command(flatten)]
        flags: SolverFlags,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are success; anything else is usage.
            let _ = err.print();
            return if err.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(CliError { message, code }) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}

struct CliError {
    message: String,
    code: u8,
}

fn usage(message: impl Into<String>) -> CliError {
    CliError { message: message.into(), code: EXIT_USAGE }
}

fn solver_failure(message: impl Into<String>) -> CliError {
    CliError { message: message.into(), code: EXIT_SOLVER }
}

fn emit(output: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.write_all(b"\n"))
                .map_err(|e| usage(format!("cannot write to stdout: {e}")))
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Solve { spec, concept, output, flags } => {
            let cfg = flags.config().map_err(usage)?;
            let game = load_game_path(&spec).map_err(|e| usage(e.to_string()))?;
            let result = dispatch_solve(&game, concept, &cfg)?;
            let doc = SolutionDoc::from_result(&result);
            let text = serde_json::to_string_pretty(&doc)
                .map_err(|e| solver_failure(e.to_string()))?;
            emit(output.as_ref(), &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { spec, solution, concept, eps, flags } => {
            let cfg = flags.config().map_err(usage)?;
            let game = load_game_path(&spec).map_err(|e| usage(e.to_string()))?;
            let report = match solution {
                Some(path) => verify_solution_file(&game, &path, eps)?,
                None => verify_self(&game, concept, eps, &cfg)?,
            };
            print!("{report}");
            if report.pass {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(EXIT_VERIFICATION))
            }
        }
        Command::GenNetwork { graph, sets, output } => {
            let graph_text = std::fs::read_to_string(&graph)
                .map_err(|e| usage(format!("cannot read {}: {e}", graph.display())))?;
            let parsed = parse_edge_list(&graph_text, None).map_err(|e| usage(e.to_string()))?;
            let sets_text = std::fs::read_to_string(&sets)
                .map_err(|e| usage(format!("cannot read {}: {e}", sets.display())))?;
            let candidates = parse_candidate_sets(&sets_text, parsed.node_count())
                .map_err(|e| usage(e.to_string()))?;
            let benefits = network_value_benefits(&parsed, &candidates)
                .map_err(|e| usage(e.to_string()))?;
            let fragment = spec_io::network_benefits_fragment(&benefits);
            let text = serde_json::to_string_pretty(&fragment)
                .map_err(|e| solver_failure(e.to_string()))?;
            emit(output.as_ref(), &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Transform { spec } => {
            let game = load_game_path(&spec).map_err(|e| usage(e.to_string()))?;
            let common = game
                .utilities
                .common_profile(&game.space)
                .map_err(|e| usage(e.to_string()))?;
            let support = support_set(&common, game.n());
            let mut out = String::new();
            for (name, f) in [
                ("benefit_attacker", &common.benefit_attacker),
                ("loss_attacker", &common.loss_attacker),
                ("benefit_defender", &common.benefit_defender),
                ("loss_defender", &common.loss_defender),
            ] {
                out.push_str(&format!("common {name}:\n"));
                for (mask, value) in f.sorted_entries() {
                    out.push_str(&format!("  {mask} -> {}\n", round_sig(value, 9)));
                }
            }
            out.push_str("support set:\n");
            for &mask in support.members() {
                out.push_str(&format!("  {mask}\n"));
            }
            print!("{out}");
            Ok(ExitCode::SUCCESS)
        }
        Command::OracleTest { spec, trials, flags } => {
            let cfg = flags.config().map_err(usage)?;
            let game = load_game_path(&spec).map_err(|e| usage(e.to_string()))?;
            let report = oracle_test(&game, trials, flags.seed, &cfg)?;
            print!("{report}");
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn dispatch_solve(
    game: &secgame::model::GameInstance,
    concept: ConceptFlag,
    cfg: &SolverConfig,
) -> Result<EquilibriumResult, CliError> {
    let additive = secgame::model::is_additive(&game.utilities, &game.space);
    match concept {
        ConceptFlag::Sse => solve_sse(game, cfg).map_err(|e| solver_failure(e.to_string())),
        ConceptFlag::Ne if game.utilities.zero_sum => {
            solve_zero_sum(game, cfg).map_err(|e| solver_failure(e.to_string()))
        }
        ConceptFlag::Ne if additive => {
            solve_ne_additive(game, cfg).map_err(|e| solver_failure(e.to_string()))
        }
        ConceptFlag::Ne => Err(usage(
            "Nash equilibria of non-zero-sum games with non-additive utilities are an open \
             problem; use --concept sse or an additive/zero-sum game",
        )),
    }
}

struct VerifyReport {
    text: String,
    pass: bool,
}

impl std::fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.text)
    }
}

fn check_line(name: &str, violation: f64, eps: f64) -> (String, bool) {
    let pass = violation <= eps;
    (
        format!(
            "{name}: max violation {} -> {}\n",
            round_sig(violation, 9),
            if pass { "pass" } else { "FAIL" }
        ),
        pass,
    )
}

fn verify_solution_file(
    game: &secgame::model::GameInstance,
    path: &PathBuf,
    eps: f64,
) -> Result<VerifyReport, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let doc: SolutionDoc =
        serde_json::from_str(&text).map_err(|e| usage(format!("invalid solution: {e}")))?;
    let defender = doc
        .defender_distribution(game.n())
        .map_err(|e| usage(e.to_string()))?;
    let attacker = doc
        .attacker_strategy(game.n())
        .map_err(|e| usage(e.to_string()))?
        .ok_or_else(|| usage("solution document has no attacker strategy"))?;
    let mut out = String::new();
    let mut pass = true;
    match doc.concept.as_str() {
        "sse" => {
            let report = check_sse(&attacker, &defender, game, eps)
                .map_err(|e| solver_failure(e.to_string()))?;
            let (line, ok) = check_line("attacker best response", report.attacker_violation, eps);
            out.push_str(&line);
            pass &= ok;
            let (line, ok) =
                check_line("defender commitment optimality", report.defender_violation, eps);
            out.push_str(&line);
            pass &= ok;
        }
        _ => {
            let report = check_ne(&attacker, &defender, game, eps)
                .map_err(|e| solver_failure(e.to_string()))?;
            let (line, ok) = check_line("attacker best response", report.attacker_violation, eps);
            out.push_str(&line);
            pass &= ok;
            let (line, ok) = check_line("defender best response", report.defender_violation, eps);
            out.push_str(&line);
            pass &= ok;
        }
    }
    out.push_str(if pass { "verification: pass\n" } else { "verification: FAIL\n" });
    Ok(VerifyReport { text: out, pass })
}

fn verify_self(
    game: &secgame::model::GameInstance,
    concept: ConceptFlag,
    eps: f64,
    cfg: &SolverConfig,
) -> Result<VerifyReport, CliError> {
    let result = dispatch_solve(game, concept, cfg)?;
    let mut out = String::new();
    let mut pass = true;
    match concept {
        ConceptFlag::Ne if game.utilities.zero_sum => {
            let nf = expand_normal_form(game).map_err(|e| solver_failure(e.to_string()))?;
            let reference = brute_minimax(&nf).map_err(|e| solver_failure(e.to_string()))?;
            let (line, ok) = check_line(
                "value vs brute-force minimax",
                (result.attacker_value - reference.value).abs(),
                eps,
            );
            out.push_str(&line);
            pass &= ok;
            let report = check_ne(&result.attacker, &result.defender_mixed, game, eps)
                .map_err(|e| solver_failure(e.to_string()))?;
            let (line, ok) = check_line("attacker best response", report.attacker_violation, eps);
            out.push_str(&line);
            pass &= ok;
            let (line, ok) = check_line("defender best response", report.defender_violation, eps);
            out.push_str(&line);
            pass &= ok;
        }
        ConceptFlag::Ne => {
            let report = check_ne(&result.attacker, &result.defender_mixed, game, eps)
                .map_err(|e| solver_failure(e.to_string()))?;
            let (line, ok) = check_line("attacker best response", report.attacker_violation, eps);
            out.push_str(&line);
            pass &= ok;
            let (line, ok) = check_line("defender best response", report.defender_violation, eps);
            out.push_str(&line);
            pass &= ok;
        }
        ConceptFlag::Sse => {
            let reference = brute_sse(game).map_err(|e| solver_failure(e.to_string()))?;
            let (line, ok) = check_line(
                "value vs brute-force commitment scan",
                (result.defender_value - reference.defender_value).abs(),
                eps,
            );
            out.push_str(&line);
            pass &= ok;
            let report = check_sse(&result.attacker, &result.defender_mixed, game, eps)
                .map_err(|e| solver_failure(e.to_string()))?;
            let (line, ok) = check_line("attacker best response", report.attacker_violation, eps);
            out.push_str(&line);
            pass &= ok;
        }
    }
    out.push_str(if pass { "verification: pass\n" } else { "verification: FAIL\n" });
    Ok(VerifyReport { text: out, pass })
}

fn oracle_test(
    game: &secgame::model::GameInstance,
    trials: usize,
    seed: u64,
    _cfg: &SolverConfig,
) -> Result<String, CliError> {
    let n = game.n();
    let common = game
        .utilities
        .common_profile(&game.space)
        .map_err(|e| usage(e.to_string()))?;
    let support = support_set(&common, n);
    let strategies = enumerate_system_for(&game.defender, n)
        .map_err(|e| usage(format!("defender system is not enumerable: {e}")))?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut max_gap = 0.0f64;
    let mut failures = 0usize;
    for _ in 0..trials {
        let w: Vec<f64> = (0..2 * support.len())
            .map(|_| rng.gen_range(-3.0..3.0))
            .collect();
        let answer = dop_linear(&game.defender, &w, &support, OptSense::Max)
            .map_err(|e| solver_failure(e.to_string()))?;
        let mut best = f64::NEG_INFINITY;
        for &d in &strategies {
            let v = secgame::compact::defender_vertex(d, &support);
            let value: f64 = w.iter().zip(v.stacked()).map(|(a, b)| a * b).sum();
            best = best.max(value);
        }
        let gap = (answer.objective_value - best).abs();
        max_gap = max_gap.max(gap);
        if gap > 1e-9 {
            failures += 1;
        }
    }
    Ok(format!(
        "trials: {trials}\nmax value gap: {}\nfailures beyond 1e-9: {failures}\n",
        round_sig(max_gap, 9)
    ))
}
