//! The `nlgame` command line: argument parsing, input resolution, and exit codes.
//!
//! Exit codes: 0 when every check passes, 1 when a verification fails, 2 for input errors.

mod render;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::composer::{route_strategies, routed_report, tensor_report, tensor_strategies, ComposeReport, LiftMode};
use crate::compressor::{run_pipeline, verify_certificate, CompressionCertificate, OfflineChoice, PipelineOptions};
use crate::error::{Error, Result};
use crate::games::{builtin, classical_value_with, ClassicalOptions, Game, GameSpec, BUILTIN_GAMES};
use crate::liecart::{cartan_su4, check_cartan, kak_su4_seeded, lie_closure, KakFactors};
use crate::opcore::{random::random_special_unitary, Operator, Tolerance};
use crate::strategies::{builtin_strategy, evaluate, QuantumStrategy, StrategySpec, BUILTIN_STRATEGIES};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

/// KAK reconstructions above this error count as failures.
const KAK_TOLERANCE: f64 = 1e-8;

#[derive(Parser, Debug)]
#[command(
    name = "nlgame",
    version,
    about = "Values, parallel composition and qubit-compression certificates for non-local games",
    after_help = "EXAMPLES:\n\
                  \n  nlgame value --game chsh --which classical\
                  \n  nlgame value --game magic_square --which quantum --strategy builtin\
                  \n  nlgame compose --games msg,msg,msg,msg --mode tensor\
                  \n  nlgame compose --games msg,ghz3 --mode route\
                  \n  nlgame compress --games msg,msg --offline scalar-uniform --out cert.json\
                  \n  nlgame verify cert.json\
                  \n  nlgame lie --strategy msg-builtin\
                  \n  nlgame cartan --check su4\
                  \n\nEXIT CODES:\n\
                  \n  0  pass\
                  \n  1  verification failure\
                  \n  2  input error"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Numerical tolerance for every check
    #[arg(long, env = "NLG_TOLERANCE", default_value_t = 1e-9, value_parser = parse_tolerance, global = true)]
    tolerance: f64,
    /// Seed for every randomized step
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
    /// Report format on stdout
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Also write the JSON report to this file (written atomically)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Alternative magic-square grid (1..4) for magic_square / msg
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4), global = true)]
    variant: Option<u8>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Which {
    Classical,
    Quantum,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Tensor,
    Route,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Lift {
    Padded,
    Isometric,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Offline {
    ScalarUniform,
    ScalarDeterministic,
    CopyActive,
}

impl From<Offline> for OfflineChoice {
    fn from(o: Offline) -> Self {
        match o {
            Offline::ScalarUniform => OfflineChoice::ScalarUniform,
            Offline::ScalarDeterministic => OfflineChoice::ScalarDeterministic,
            Offline::CopyActive => OfflineChoice::CopyActive,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classical or quantum value of a game
    Value {
        /// Builtin game name or game JSON file
        #[arg(long)]
        game: String,
        #[arg(long, value_enum, default_value_t = Which::Quantum)]
        which: Which,
        /// Builtin strategy name (`builtin` = the game's canonical strategy) or strategy JSON file
        #[arg(long)]
        strategy: Option<String>,
        /// Deterministic-pair budget for the classical enumeration
        #[arg(long)]
        budget: Option<u64>,
        /// Sample this many deterministic strategies when the budget is exceeded (lower bound)
        #[arg(long)]
        sample: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Compose perfect strategies for parallel play
    Compose {
        /// Comma-separated builtin names, or GAME.json:STRATEGY.json pairs
        #[arg(long, value_delimiter = ',', required = true)]
        games: Vec<String>,
        #[arg(long, value_enum, default_value_t = Mode::Tensor)]
        mode: Mode,
        /// Lift used by route mode
        #[arg(long, value_enum, default_value_t = Lift::Padded)]
        lift: Lift,
        #[command(flatten)]
        common: Common,
    },
    /// Build a compression certificate for K ≥ 2 games
    Compress {
        /// Comma-separated builtin names, or GAME.json:STRATEGY.json pairs
        #[arg(long, value_delimiter = ',', required = true)]
        games: Vec<String>,
        /// Measurement used while a game's control block is inactive
        #[arg(long, value_enum, default_value_t = Offline::ScalarUniform)]
        offline: Offline,
        /// Pad the data register to at least this many qubits
        #[arg(long)]
        data_qubits: Option<u32>,
        #[command(flatten)]
        common: Common,
    },
    /// Re-check a compression certificate from its raw operators
    Verify {
        /// Certificate JSON file
        file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Lie closure of a strategy's measurement operators
    Lie {
        /// Builtin strategy name or strategy JSON file
        #[arg(long)]
        strategy: String,
        /// Abort when the closure exceeds this dimension
        #[arg(long)]
        max_dim: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Cartan decomposition of su(4) and KAK factorizations
    #[command(group = clap::ArgGroup::new("task").required(true).args(["check", "kak", "haar"]))]
    Cartan {
        /// Check the decomposition of the named algebra
        #[arg(long, value_parser = ["su4"])]
        check: Option<String>,
        /// Factor a 4×4 unitary from an operator JSON file (or `identity`, `swap`, `cnot`)
        #[arg(long)]
        kak: Option<String>,
        /// Factor this many Haar-random SU(4) elements drawn with --seed
        #[arg(long)]
        haar: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
}

fn parse_tolerance(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    Tolerance::new(v).map(|t| t.eps()).map_err(|e| e.to_string())
}

/// Outcome of one command: the report and whether its checks passed.
struct Outcome {
    json: Value,
    text: String,
    pass: bool,
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_PASS };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    let (common, outcome) = match cmd {
        Command::Value { game, which, strategy, budget, sample, common } => {
            let o = cmd_value(&game, which, strategy.as_deref(), budget, sample, &common)?;
            (common, o)
        }
        Command::Compose { games, mode, lift, common } => {
            let o = cmd_compose(&games, mode, lift, &common)?;
            (common, o)
        }
        Command::Compress { games, offline, data_qubits, common } => {
            return cmd_compress(&games, offline.into(), data_qubits, &common);
        }
        Command::Verify { file, common } => {
            let o = cmd_verify(&file)?;
            (common, o)
        }
        Command::Lie { strategy, max_dim, common } => {
            let o = cmd_lie(&strategy, max_dim, &common)?;
            (common, o)
        }
        Command::Cartan { check, kak, haar, common } => {
            let o = cmd_cartan(check.as_deref(), kak.as_deref(), haar, &common)?;
            (common, o)
        }
    };
    emit(&common, &outcome)?;
    Ok(if outcome.pass { EXIT_PASS } else { EXIT_FAIL })
}

fn emit(common: &Common, o: &Outcome) -> Result<()> {
    let json = serde_json::to_string_pretty(&o.json)?;
    if let Some(path) = &common.out {
        write_atomic(path, json.as_bytes())?;
    }
    match common.format {
        Format::Json => println!("{json}"),
        Format::Text => print!("{}", o.text),
    }
    Ok(())
}

/// Writes through a temporary file in the target directory, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn tolerance(common: &Common) -> Tolerance {
    Tolerance::new(common.tolerance).expect("validated by the argument parser")
}

fn variant(common: &Common) -> Option<usize> {
    common.variant.map(usize::from)
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Malformed(format!("cannot read {}: {e}", path.display())))
}

fn is_builtin_game(name: &str) -> bool {
    name == "msg" || BUILTIN_GAMES.contains(&name)
}

/// A builtin name, or a path to game JSON.
fn resolve_game(spec: &str, common: &Common) -> Result<Game> {
    if is_builtin_game(spec) {
        return builtin(spec, variant(common));
    }
    let path = Path::new(spec);
    if path.exists() {
        return serde_json::from_str::<GameSpec>(&read_text(path)?)
            .map_err(|e| Error::Malformed(format!("{spec}: {e}")))?
            .to_game();
    }
    Err(Error::InvalidGame(format!("`{spec}` is neither a builtin game ({}) nor a file", BUILTIN_GAMES.join(", "))))
}

fn resolve_strategy(spec: &str, game_name: &str, common: &Common) -> Result<QuantumStrategy> {
    if BUILTIN_STRATEGIES.contains(&spec) {
        return Ok(builtin_strategy(spec, game_name, variant(common))?.1);
    }
    let path = Path::new(spec);
    if path.exists() {
        let spec_json: StrategySpec =
            serde_json::from_str(&read_text(path)?).map_err(|e| Error::Malformed(format!("{spec}: {e}")))?;
        return spec_json.to_strategy(tolerance(common));
    }
    Err(Error::InvalidStrategy(format!(
        "`{spec}` is neither a builtin strategy ({}) nor a file",
        BUILTIN_STRATEGIES.join(", ")
    )))
}

/// `name` (builtin game with its canonical strategy) or `GAME.json:STRATEGY.json`.
fn resolve_pair(item: &str, common: &Common) -> Result<(Game, QuantumStrategy)> {
    if let Some((g, s)) = item.split_once(':') {
        let game = resolve_game(g, common)?;
        let strat = resolve_strategy(s, game.name(), common)?;
        strat.check_alphabets(&game)?;
        return Ok((game, strat));
    }
    if is_builtin_game(item) {
        return builtin_strategy("builtin", item, variant(common));
    }
    Err(Error::InvalidGame(format!("`{item}` is not a builtin game; use GAME.json:STRATEGY.json for files")))
}

fn resolve_pairs(items: &[String], common: &Common) -> Result<(Vec<Game>, Vec<QuantumStrategy>)> {
    let mut games = Vec::new();
    let mut strats = Vec::new();
    for item in items {
        let (g, s) = resolve_pair(item.trim(), common)?;
        games.push(g);
        strats.push(s);
    }
    Ok((games, strats))
}

fn to_value<T: Serialize>(t: &T) -> Result<Value> {
    Ok(serde_json::to_value(t)?)
}

fn cmd_value(
    game_spec: &str,
    which: Which,
    strategy: Option<&str>,
    budget: Option<u64>,
    sample: Option<usize>,
    common: &Common,
) -> Result<Outcome> {
    let game = resolve_game(game_spec, common)?;
    match which {
        Which::Classical => {
            let mut opts = ClassicalOptions { seed: common.seed, sampling: sample, ..ClassicalOptions::default() };
            if let Some(b) = budget {
                opts.budget = b;
            }
            let cv = classical_value_with(&game, &opts)?;
            let (ia, ib, _, _) = game.sizes();
            let per_question: Vec<Vec<f64>> = (0..ia)
                .map(|x| {
                    (0..ib)
                        .map(|y| f64::from(u8::from(game.accepts(x, y, cv.strategy.f[x], cv.strategy.g[y]))))
                        .collect()
                })
                .collect();
            let json = json!({
                "game": game.name(),
                "which": "classical",
                "value": cv.value,
                "fraction": cv.fraction.map(|r| format!("{}/{}", r.numer(), r.denom())),
                "lower_bound": cv.lower_bound,
                "functions_evaluated": cv.functions_evaluated,
                "strategy": { "f": cv.strategy.f, "g": cv.strategy.g },
                "per_question": per_question,
            });
            let text = render::value_text(
                &game,
                "classical",
                cv.value,
                cv.fraction.map(|r| (*r.numer(), *r.denom())),
                cv.lower_bound,
                &per_question,
            );
            Ok(Outcome { json, text, pass: true })
        }
        Which::Quantum => {
            let s = strategy.ok_or_else(|| Error::Precondition("quantum value needs --strategy".into()))?;
            let strat = resolve_strategy(s, game.name(), common)?;
            let rep = evaluate(&game, &strat, tolerance(common))?;
            let mut json =
                json!({ "game": game.name(), "which": "quantum", "qubits_per_player": strat.qubits_per_player() });
            json.as_object_mut().expect("object").extend(to_value(&rep)?.as_object().expect("object").clone());
            let text = render::value_text(&game, "quantum", rep.value, None, false, &rep.per_question);
            Ok(Outcome { json, text, pass: true })
        }
    }
}

fn cmd_compose(items: &[String], mode: Mode, lift: Lift, common: &Common) -> Result<Outcome> {
    let tol = tolerance(common);
    let (games, strats) = resolve_pairs(items, common)?;
    let names: Vec<String> = games.iter().map(|g| g.name().to_string()).collect();
    let report = match mode {
        Mode::Tensor => {
            let (pg, ts) = tensor_strategies(&games, &strats, tol)?;
            ComposeReport::from_tensor(names, tensor_report(&pg, &ts, tol, common.seed), tol.eps())
        }
        Mode::Route => {
            let lift = match lift {
                Lift::Padded => LiftMode::Padded,
                Lift::Isometric => LiftMode::Isometric,
            };
            let comp = route_strategies(&games, &strats, lift, tol)?;
            ComposeReport::from_route(names, routed_report(&games, &strats, &comp, tol)?)
        }
    };
    Ok(Outcome { text: render::compose_text(&report), pass: report.pass, json: to_value(&report)? })
}

fn cmd_compress(items: &[String], offline: OfflineChoice, data_qubits: Option<u32>, common: &Common) -> Result<i32> {
    let (games, strats) = resolve_pairs(items, common)?;
    let opts = PipelineOptions { offline, min_data_qubits: data_qubits, seed: common.seed };
    let cert = run_pipeline(&games, &strats, &opts, tolerance(common))?;
    let cert_json = cert.to_json()?;
    if let Some(path) = &common.out {
        write_atomic(path, cert_json.as_bytes())?;
    }
    match (common.format, &common.out) {
        (Format::Json, None) => println!("{cert_json}"),
        (Format::Json, Some(_)) => println!("{}", serde_json::to_string_pretty(&cert.checks)?),
        (Format::Text, _) => print!("{}", render::certificate_text(&cert)),
    }
    Ok(if cert.checks.overall_pass { EXIT_PASS } else { EXIT_FAIL })
}

fn cmd_verify(file: &Path) -> Result<Outcome> {
    let cert = CompressionCertificate::from_json(&read_text(file)?)?;
    let rep = verify_certificate(&cert, None)?;
    Ok(Outcome { text: render::verify_text(&rep), pass: rep.pass, json: to_value(&rep)? })
}

fn cmd_lie(strategy: &str, max_dim: Option<usize>, common: &Common) -> Result<Outcome> {
    let strat = resolve_strategy(strategy, "", common).or_else(|e| match e {
        // `builtin` needs a game; accept a game name in its place.
        Error::InvalidStrategy(_) if is_builtin_game(strategy) => {
            Ok(builtin_strategy("builtin", strategy, variant(common))?.1)
        }
        e => Err(e),
    })?;
    let elems = |fams: &[crate::strategies::PovmFamily]| -> Vec<Operator> {
        fams.iter().flatten().flatten().cloned().collect()
    };
    let a = lie_closure(&elems(strat.povms_a()), max_dim)?;
    let b = lie_closure(&elems(strat.povms_b()), max_dim)?;
    let full = |d: usize, h: usize| d + 1 == h * h;
    let json = json!({
        "hilbert_dim": strat.dim_a(),
        "closure_dim": a.dim(),
        "is_full_su": full(a.dim(), strat.dim_a()),
        "closure_dim_b": b.dim(),
        "is_full_su_b": full(b.dim(), strat.dim_b()),
        "structure_residual": a.structure_residual().max(b.structure_residual()),
    });
    let text = render::lie_text(strat.dim_a(), a.dim(), b.dim());
    Ok(Outcome { json, text, pass: true })
}

fn named_unitary(name: &str) -> Result<Operator> {
    let rows: [[f64; 4]; 4] = match name {
        "identity" => [[1., 0., 0., 0.], [0., 1., 0., 0.], [0., 0., 1., 0.], [0., 0., 0., 1.]],
        "swap" => [[1., 0., 0., 0.], [0., 0., 1., 0.], [0., 1., 0., 0.], [0., 0., 0., 1.]],
        "cnot" => [[1., 0., 0., 0.], [0., 1., 0., 0.], [0., 0., 0., 1.], [0., 0., 1., 0.]],
        _ => unreachable!("checked by caller"),
    };
    let r: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    Operator::from_real_rows(&r)
}

fn kak_json(f: &KakFactors) -> Value {
    json!({
        "c": f.c,
        "global_phase": [f.global_phase.0, f.global_phase.1],
        "recon_error": f.recon_error,
        "locality_residual": f.locality_residual,
        "k1": f.k1,
        "k2": f.k2,
    })
}

fn cmd_cartan(check: Option<&str>, kak: Option<&str>, haar: Option<usize>, common: &Common) -> Result<Outcome> {
    let tol = tolerance(common);
    if check.is_some() {
        let rep = check_cartan(&cartan_su4(), tol.eps());
        return Ok(Outcome { text: render::cartan_text(&rep), pass: rep.pass, json: to_value(&rep)? });
    }
    if let Some(src) = kak {
        let u = match src {
            "identity" | "swap" | "cnot" => named_unitary(src)?,
            path => serde_json::from_str::<Operator>(&read_text(Path::new(path))?)
                .map_err(|e| Error::Malformed(format!("{path}: {e}")))?,
        };
        let f = kak_su4_seeded(&u, common.seed)?;
        let pass = f.recon_error <= KAK_TOLERANCE && f.locality_residual <= KAK_TOLERANCE;
        return Ok(Outcome { text: render::kak_text(&f), pass, json: kak_json(&f) });
    }
    let n = haar.expect("argument group requires one task");
    let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
    let mut worst: f64 = 0.0;
    let mut worst_local: f64 = 0.0;
    for _ in 0..n {
        let f = kak_su4_seeded(&random_special_unitary(4, &mut rng), common.seed)?;
        worst = worst.max(f.recon_error);
        worst_local = worst_local.max(f.locality_residual);
    }
    let pass = worst <= KAK_TOLERANCE && worst_local <= KAK_TOLERANCE;
    let json = json!({ "samples": n, "seed": common.seed, "max_recon_error": worst, "max_locality_residual": worst_local, "pass": pass });
    let text = format!(
        "KAK round trip on {n} Haar-random SU(4) elements (seed {})\n  max reconstruction error  {worst:.3e}\n  max locality residual     {worst_local:.3e}\n  {}\n",
        common.seed,
        render::verdict(pass)
    );
    Ok(Outcome { json, text, pass })
}
