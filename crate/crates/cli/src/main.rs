//! `hypersep` command-line tool.
//!
//! Answers go to stdout as `ANSWER: ...` lines, statistics as single-line
//! `STATS: key=value ...` records. Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0    | success |
//! | 1    | a checked proof or tree is invalid |
//! | 2    | malformed input or usage error |
//! | 3    | no separator within the requested cap |
//! | 4    | enumeration budget exceeded |
//! | 5    | `refute` found the input satisfiable |
//! | 10   | `csp solve`: satisfiable |
//! | 20   | `csp solve`: unsatisfiable |

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use hypersep::cnf::Cnf;
use hypersep::csp::{
    cnf_encode, solve, Csp, CspError, Mode, SolveAnswer, SolveOptions, Value, DEFAULT_ENUMERATION_BUDGET,
    DEFAULT_LEAF_BUDGET,
};
use hypersep::experiments::{tightness_experiment, ExperimentError, Sweep};
use hypersep::formats::{
    parse_charges, parse_csp, parse_dimacs, parse_dtree, parse_hypergraph, parse_resolution, write_csp, write_dimacs,
    write_dtree, write_resolution, ParseError,
};
use hypersep::hypergraph::Hypergraph;
use hypersep::refutation::{
    check_dtree, check_resolution, refute_csp2, refute_tseitin, Csp2Options, RefuteError, Refutation, TreeSource,
    TseitinOptions,
};
use hypersep::separator::{
    exhaustive_separator, find_separator, theory_bound, SeparatorError, SeparatorStrategy, DEFAULT_MAX_TRIALS,
};
use hypersep::tseitin::{ChargeLabeling, TseitinInstance};

const EXIT_OK: u8 = 0;
const EXIT_INVALID: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_NOT_FOUND: u8 = 3;
const EXIT_BUDGET: u8 = 4;
const EXIT_SATISFIABLE: u8 = 5;
const EXIT_SAT: u8 = 10;
const EXIT_UNSAT: u8 = 20;

#[derive(Parser)]
#[command(name = "hypersep", version, about = "Balanced separators, separator-based CSP solving, and resolution refutations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for parallel steps (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Report timing on stderr.
    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Find a balanced separator of a hypergraph (.hg).
    Separator(SeparatorCmd),
    /// Decide, count or maximize a CSP (.csp).
    #[command(subcommand)]
    Csp(CspCmd),
    /// Tseitin formula generation.
    #[command(subcommand)]
    Tseitin(TseitinCmd),
    /// Build a decision tree and resolution refutation.
    #[command(subcommand)]
    Refute(RefuteCmd),
    /// Verify a decision tree or resolution trace.
    #[command(subcommand)]
    Check(CheckCmd),
    /// Minimum separators of random hypergraphs against the theoretical ratio.
    Experiment(ExperimentCmd),
}

fn positive(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Random,
    Exhaustive,
    Auto,
}

#[derive(Args)]
struct SeparatorOpts {
    #[arg(long, value_enum, default_value_t = Method::Auto)]
    method: Method,
    /// Sampling attempts before the randomized construction falls back.
    #[arg(long, default_value_t = DEFAULT_MAX_TRIALS, value_parser = positive)]
    max_trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SeparatorOpts {
    fn strategy(&self) -> SeparatorStrategy {
        let max_trials = self.max_trials;
        match self.method {
            Method::Random => SeparatorStrategy::Random { max_trials },
            Method::Exhaustive => SeparatorStrategy::Exhaustive,
            Method::Auto => SeparatorStrategy::Auto { max_trials },
        }
    }
}

#[derive(Args)]
struct SeparatorCmd {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    sep: SeparatorOpts,
    /// Largest separator size the exhaustive search may return.
    #[arg(long)]
    cap: Option<usize>,
}

#[derive(Subcommand)]
enum CspCmd {
    /// Print SAT or UNSAT.
    Solve(CspArgs),
    /// Print the number of satisfying assignments.
    Count(CspArgs),
    /// Print the largest number of simultaneously satisfiable constraints.
    Max(CspArgs),
}

#[derive(Args)]
struct CspArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    sep: SeparatorOpts,
    /// Recurse into pieces larger than the leaf budget.
    #[arg(long)]
    recursive: bool,
    /// Print a satisfying (or maximizing) assignment.
    #[arg(long)]
    witness: bool,
    /// Pieces with at most this many variables are solved by enumeration.
    #[arg(long, default_value_t = DEFAULT_LEAF_BUDGET, value_parser = positive)]
    leaf_budget: usize,
    /// Most assignments a single enumeration may visit.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_BUDGET)]
    budget: u128,
    /// Branch first on variables occurring in many constraints.
    #[arg(long)]
    high_frequency: bool,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ChargeOpts {
    /// Charge 1 on vertex 1, 0 elsewhere.
    #[arg(long)]
    odd: bool,
    /// Charge file of `<vertex> <bit>` lines.
    #[arg(long)]
    charges: Option<PathBuf>,
}

impl ChargeOpts {
    fn load(&self, n: usize) -> Result<ChargeLabeling> {
        match &self.charges {
            Some(path) => Ok(parse_charges(&read(path)?, n).with_context(|| format!("parsing {}", path.display()))?),
            None => Ok(ChargeLabeling::odd(n).map_err(|e| input_error(e.to_string()))?),
        }
    }
}

#[derive(Subcommand)]
enum TseitinCmd {
    /// Write the Tseitin CSP and CNF of a hypergraph.
    Gen {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        charges: ChargeOpts,
        /// Writes <PREFIX>.csp and <PREFIX>.cnf; without it the CNF goes to stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum RefuteCmd {
    /// Refute the Tseitin formula of a simple graph (.hg) with odd charge.
    Tseitin {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        charges: ChargeOpts,
        /// Writes <PREFIX>.dt, <PREFIX>.res and <PREFIX>.cnf.
        #[arg(long)]
        output: PathBuf,
        /// Finish subgraphs with at most this many edges by querying all of them.
        #[arg(long)]
        base_threshold: Option<f64>,
    },
    /// Refute an unsatisfiable boolean CSP (.csp).
    Csp2 {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        sep: SeparatorOpts,
        /// Writes <PREFIX>.dt, <PREFIX>.res and <PREFIX>.cnf.
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_BUDGET)]
        budget: u128,
        /// Print a satisfying assignment when the CSP turns out satisfiable.
        #[arg(long)]
        witness: bool,
    },
}

#[derive(Subcommand)]
enum CheckCmd {
    /// Check a decision tree (.dt) against a CNF or CSP.
    Dtree {
        #[arg(long)]
        input: PathBuf,
        /// DIMACS CNF or .csp file the leaves refer to.
        #[arg(long)]
        formula: PathBuf,
    },
    /// Check a tree-like resolution refutation (.res) of a CNF.
    Res {
        #[arg(long)]
        input: PathBuf,
        /// DIMACS CNF (or a boolean .csp, checked against its encoding).
        #[arg(long)]
        formula: PathBuf,
    },
}

#[derive(Args)]
struct ExperimentCmd {
    /// Vertex counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    /// Degree parameters, comma separated.
    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,
    /// Edge sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    r: Vec<usize>,
    /// Instances per (n, k, r) cell.
    #[arg(long, default_value_t = 20)]
    instances: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Marks an error as bad input (exit 2).
#[derive(Debug)]
struct InputError(String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn input_error(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ParseError>() || cause.is::<InputError>() || cause.is::<std::io::Error>() {
            return EXIT_INPUT;
        }
        let csp = cause
            .downcast_ref::<CspError>()
            .or_else(|| match cause.downcast_ref::<RefuteError>() {
                Some(RefuteError::Csp(e)) => Some(e),
                _ => None,
            });
        if let Some(e) = csp {
            return if matches!(e, CspError::BudgetExceeded { .. }) { EXIT_BUDGET } else { EXIT_INPUT };
        }
        match cause.downcast_ref::<ExperimentError>() {
            Some(ExperimentError::OracleBudget { .. } | ExperimentError::TooManyCandidates { .. }) => return EXIT_BUDGET,
            Some(ExperimentError::BadUniformity { .. } | ExperimentError::ProbabilityTooLarge { .. }) => return EXIT_INPUT,
            _ => {}
        }
        if let Some(RefuteError::NotSimpleGraph(_) | RefuteError::Tseitin(_)) = cause.downcast_ref::<RefuteError>() {
            return EXIT_INPUT;
        }
        if let Some(SeparatorError::Hypergraph(_)) = cause.downcast_ref::<SeparatorError>() {
            return EXIT_INPUT;
        }
    }
    EXIT_INVALID
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn load_hypergraph(path: &Path) -> Result<Hypergraph> {
    parse_hypergraph(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn load_csp(path: &Path) -> Result<Csp> {
    parse_csp(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

enum Formula {
    Cnf(Cnf),
    Csp(Csp),
}

/// CNF or CSP, told apart by the header line.
fn load_formula(path: &Path) -> Result<Formula> {
    let text = read(path)?;
    let header = text.lines().map(str::trim).find(|l| !l.is_empty() && !l.starts_with('c'));
    let ctx = || format!("parsing {}", path.display());
    match header.map(|h| h.split_whitespace().take(2).collect::<Vec<_>>()) {
        Some(h) if h == ["p", "csp"] => Ok(Formula::Csp(parse_csp(&text).with_context(ctx)?)),
        _ => Ok(Formula::Cnf(parse_dimacs(&text).with_context(ctx)?)),
    }
}

/// 1-based comma-separated list, `-` when empty.
fn index_list(items: &[usize]) -> String {
    if items.is_empty() {
        return "-".into();
    }
    items.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(",")
}

fn plain_list(items: &[usize]) -> String {
    if items.is_empty() {
        return "-".into();
    }
    items.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

fn witness_line(w: &[Value]) -> String {
    let vals: Vec<String> = w.iter().map(Value::to_string).collect();
    format!("WITNESS: {}", vals.join(" "))
}

fn cmd_separator(cmd: &SeparatorCmd) -> Result<u8> {
    let h = load_hypergraph(&cmd.input)?;
    let m = h.num_edges();
    let res = match cmd.sep.method {
        Method::Exhaustive => match exhaustive_separator(&h, cmd.cap.unwrap_or(m)) {
            Some(res) => res,
            None => {
                println!("ANSWER: NOT_FOUND");
                return Ok(EXIT_NOT_FOUND);
            }
        },
        _ => find_separator(&h, cmd.sep.strategy(), cmd.sep.seed)?,
    };
    println!("ANSWER: size={} edges={}", res.size(), index_list(&res.edges));
    println!(
        "STATS: method={} m={} size={} theory_bound={:.3} component_edge_counts={} trials={} fallback={}",
        res.method,
        m,
        res.size(),
        theory_bound(&h)?,
        plain_list(&res.component_edge_counts),
        res.trials_used,
        res.fallback
    );
    Ok(EXIT_OK)
}

fn cmd_csp(cmd: &CspCmd) -> Result<u8> {
    let (mode, args) = match cmd {
        CspCmd::Solve(a) => (Mode::Decide, a),
        CspCmd::Count(a) => (Mode::Count, a),
        CspCmd::Max(a) => (Mode::Max, a),
    };
    let csp = load_csp(&args.input)?;
    let opts = SolveOptions {
        recursive: args.recursive,
        separator: args.sep.strategy(),
        seed: args.sep.seed,
        leaf_budget: args.leaf_budget,
        enumeration_budget: args.budget,
        high_frequency_branching: args.high_frequency,
    };
    let solved = solve(&csp, mode, &opts)?;
    let code = match &solved.answer {
        SolveAnswer::Decide { satisfiable, witness } => {
            println!("ANSWER: {}", if *satisfiable { "SAT" } else { "UNSAT" });
            if let (true, Some(w)) = (args.witness, witness) {
                println!("{}", witness_line(w));
            }
            if *satisfiable {
                EXIT_SAT
            } else {
                EXIT_UNSAT
            }
        }
        SolveAnswer::Count(c) => {
            println!("ANSWER: {c}");
            EXIT_OK
        }
        SolveAnswer::Max { satisfied, witness } => {
            println!("ANSWER: {satisfied}");
            if let (true, Some(w)) = (args.witness, witness) {
                println!("{}", witness_line(w));
            }
            EXIT_OK
        }
    };
    let s = &solved.stats;
    println!(
        "STATS: separator_size={} method={} fallback={} separator_bound={:.3} preprocessed={} branches={} recursive_calls={}",
        s.separator_vars.len(),
        s.separator_method.map_or("none".to_string(), |m| m.to_string()),
        s.separator_fallback,
        s.separator_bound,
        s.preprocessed_vars.len(),
        s.branches,
        s.recursive_calls
    );
    Ok(code)
}

fn cmd_tseitin(cmd: &TseitinCmd) -> Result<u8> {
    let TseitinCmd::Gen { input, charges, output } = cmd;
    let g = load_hypergraph(input)?;
    let charges = charges.load(g.num_vertices())?;
    let odd = charges.is_odd_charge();
    let instance = TseitinInstance::new(g, charges).map_err(|e| input_error(e.to_string()))?;
    let enc = instance.to_cnf();
    let cnf_text = write_dimacs(&enc.cnf, Some(("vertex", &enc.clause_constraint)));
    match output {
        Some(prefix) => {
            write(&with_ext(prefix, "csp"), &write_csp(&instance.to_csp()))?;
            write(&with_ext(prefix, "cnf"), &cnf_text)?;
            println!("ANSWER: vars={} clauses={} odd_charge={odd}", enc.cnf.num_vars, enc.cnf.clauses.len());
        }
        None => print!("{cnf_text}"),
    }
    Ok(EXIT_OK)
}

fn write_refutation(prefix: &Path, r: &Refutation, cnf_text: &str) -> Result<()> {
    write(&with_ext(prefix, "dt"), &write_dtree(&r.tree, 2))?;
    write(&with_ext(prefix, "res"), &write_resolution(&r.trace))?;
    write(&with_ext(prefix, "cnf"), cnf_text)?;
    println!("ANSWER: UNSAT");
    println!("STATS: {}", r.stats.to_record());
    Ok(())
}

fn cmd_refute(cmd: &RefuteCmd) -> Result<u8> {
    match cmd {
        RefuteCmd::Tseitin { input, charges, output, base_threshold } => {
            let g = load_hypergraph(input)?;
            let charges = charges.load(g.num_vertices())?;
            let opts = TseitinOptions { base_threshold: *base_threshold };
            match refute_tseitin(&g, &charges, &opts) {
                Err(RefuteError::EvenCharge) => {
                    println!("ANSWER: SAT");
                    Ok(EXIT_SATISFIABLE)
                }
                Err(e) => Err(e.into()),
                Ok(r) => {
                    let enc = TseitinInstance::new(g, charges)?.to_cnf();
                    write_refutation(output, &r, &write_dimacs(&r.cnf, Some(("vertex", &enc.clause_constraint))))?;
                    Ok(EXIT_OK)
                }
            }
        }
        RefuteCmd::Csp2 { input, sep, output, budget, witness } => {
            let csp = load_csp(input)?;
            let opts = Csp2Options { separator: sep.strategy(), seed: sep.seed, enumeration_budget: *budget };
            match refute_csp2(&csp, &opts) {
                Err(RefuteError::Satisfiable { witness: w }) => {
                    println!("ANSWER: SAT");
                    if *witness {
                        let vals: Vec<Value> = w.iter().map(|&b| b as Value).collect();
                        println!("{}", witness_line(&vals));
                    }
                    Ok(EXIT_SATISFIABLE)
                }
                Err(e) => Err(e.into()),
                Ok(r) => {
                    let enc = cnf_encode(&csp)?;
                    write_refutation(output, &r, &write_dimacs(&r.cnf, Some(("constraint", &enc.clause_constraint))))?;
                    Ok(EXIT_OK)
                }
            }
        }
    }
}

fn cmd_check(cmd: &CheckCmd) -> Result<u8> {
    match cmd {
        CheckCmd::Dtree { input, formula } => {
            let (tree, _) = parse_dtree(&read(input)?).with_context(|| format!("parsing {}", input.display()))?;
            let formula = load_formula(formula)?;
            let source = match &formula {
                Formula::Cnf(c) => TreeSource::Cnf(c),
                Formula::Csp(c) => TreeSource::Csp(c),
            };
            let verdict = check_dtree(source, &tree);
            println!("STATS: leaves={} depth={} nodes={}", tree.leaves(), tree.depth(), tree.nodes());
            Ok(report(verdict.map_err(|v| v.to_string())))
        }
        CheckCmd::Res { input, formula } => {
            let trace = parse_resolution(&read(input)?).with_context(|| format!("parsing {}", input.display()))?;
            let cnf = match load_formula(formula)? {
                Formula::Cnf(c) => c,
                Formula::Csp(c) => cnf_encode(&c)?.cnf,
            };
            let verdict = check_resolution(&cnf, &trace);
            println!("STATS: steps={} width={}", trace.len(), trace.width());
            Ok(report(verdict.map_err(|v| v.to_string())))
        }
    }
}

fn report(verdict: std::result::Result<(), String>) -> u8 {
    match verdict {
        Ok(()) => {
            println!("ANSWER: VALID");
            EXIT_OK
        }
        Err(v) => {
            println!("ANSWER: INVALID");
            println!("VIOLATION: {v}");
            EXIT_INVALID
        }
    }
}

fn cmd_experiment(cmd: &ExperimentCmd, jobs: usize) -> Result<u8> {
    let sweep = Sweep { ns: cmd.n.clone(), ks: cmd.k.clone(), rs: cmd.r.clone(), instances: cmd.instances, seed: cmd.seed };
    let report = tightness_experiment(&sweep, jobs)?;
    let csv = report.to_csv();
    match &cmd.output {
        Some(path) => {
            write(path, &csv)?;
            println!("ANSWER: rows={}", report.rows.len());
            for c in &report.cells {
                println!(
                    "STATS: n={} k={} r={} instances={} mean_m={:.3} mean_ratio={:.4} limit_ratio={:.4}",
                    c.n, c.k, c.r, c.instances, c.mean_m, c.mean_ratio, c.limit_ratio
                );
            }
        }
        None => print!("{csv}"),
    }
    Ok(EXIT_OK)
}

fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Separator(c) => cmd_separator(c),
        Command::Csp(c) => cmd_csp(c),
        Command::Tseitin(c) => cmd_tseitin(c),
        Command::Refute(c) => cmd_refute(c),
        Command::Check(c) => cmd_check(c),
        Command::Experiment(c) => cmd_experiment(c, cli.jobs),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let code = match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    };
    if cli.verbose {
        eprintln!("elapsed: {:.3}s", start.elapsed().as_secs_f64());
    }
    ExitCode::from(code)
}
