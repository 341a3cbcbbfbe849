//! `semicong` — command-line front end for the semilattice congruence
//! toolkit.
//!
//! Every command prints a single JSON document on stdout; human diagnostics
//! go to stderr. Exit codes: 0 success / identity holds, 1 identity
//! violated or counterexample found, 2 invalid input, 3 hypothesis
//! violation. `SEMICONG_MAX_N` caps accepted element counts (at most 64).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use semicong::analysis::{
    all_congruences, default_strategy, maximal_congruences, papert_decomposition,
    AnalysisError, EnumerationStrategy,
};
use semicong::congruence::{
    congruence_closure, principal_comparable_formula, ComparablePair, Congruence,
};
use semicong::generate::{desk_corpus, generate, GenSpec};
use semicong::identity::{
    check_generalized_crossing, check_maximal_crossing, check_one_psi, check_psi_join_full,
    check_pwd_law, exhaustive_for_pair, search_naive_pwd, IdentityError, IdentityKind,
};
use semicong::partition::Partition;
use semicong::semilattice::{LoadError, Semilattice, SemilatticeError, MAX_ELEMENTS};
use semicong::suite::run_desk_suite;
use semicong::{all_congruences_auto, classify_family};

#[derive(Parser)]
#[command(name = "semicong", version, about = "Congruence computations on finite join semilattices")]
struct Cli {
    /// Pretty-print the JSON output.
    #[arg(long, global = true)]
    json_indent: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the semilattice axioms of a table document.
    Validate { file: PathBuf },
    /// Emit a generated semilattice as JSON.
    Gen {
        #[arg(long, value_enum)]
        kind: GenKindArg,
        /// Comma-separated integer parameters (chain: n; free_join,
        /// boolean, fan: k; random_union_closed: k,m).
        #[arg(long)]
        params: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Principal congruence of the comparable pair (t, s).
    Principal {
        file: PathBuf,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        s: usize,
        #[arg(long, value_enum, default_value_t = MethodArg::Both)]
        method: MethodArg,
    },
    /// Enumerate all congruences, or only the maximal ones.
    Congruences {
        file: PathBuf,
        #[arg(long, value_enum)]
        strategy: Option<StrategyArg>,
        #[arg(long)]
        maximal_only: bool,
    },
    /// Decompose a congruence into the maximal congruences above it.
    Decompose {
        file: PathBuf,
        /// Congruence in block form, e.g. "[[0,1],[2]]".
        #[arg(long)]
        congruence: String,
    },
    /// Quotient semilattice and projection map.
    Quotient {
        file: PathBuf,
        #[arg(long)]
        congruence: String,
    },
    /// Check one identity on an explicit family or exhaustively.
    Verify {
        file: PathBuf,
        #[arg(long, value_enum)]
        identity: IdentityArg,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        s: usize,
        /// Semicolon-separated congruences in block form; the split into
        /// phis and psis follows membership of the pair (t(.)s, s).
        #[arg(long, conflicts_with = "exhaustive")]
        family: Option<String>,
        /// Sweep every hypothesis-valid family instead.
        #[arg(long, requires = "max_family_size")]
        exhaustive: bool,
        #[arg(long)]
        max_family_size: Option<usize>,
        /// Instance cap for the exhaustive sweep (deterministic prefix of
        /// the enumeration order).
        #[arg(long, default_value_t = 100_000)]
        max_instances: u64,
    },
    /// Random search for counterexamples to the naive pairwise shape.
    SearchNaive {
        /// "desk" for the built-in corpus, or semilattice files.
        #[arg(long, num_args = 1.., default_values_t = [String::from("desk")])]
        corpus: Vec<String>,
        #[arg(long, default_value_t = 100_000)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the full verification battery.
    Suite {
        #[arg(long, default_value = "desk")]
        preset: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKindArg {
    Chain,
    #[value(name = "free_join")]
    FreeJoin,
    Boolean,
    Fan,
    #[value(name = "random_union_closed")]
    RandomUnionClosed,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Formula,
    Closure,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Bell,
    Meet,
}

#[derive(Clone, Copy, ValueEnum)]
enum IdentityArg {
    Pwd,
    Crossing,
    Onepsi,
    Generalized,
    Fullpsi,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    fn hypothesis(message: impl Into<String>) -> Self {
        Failure { code: 3, message: message.into() }
    }
}

type CmdOutput = Result<(Value, u8), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pretty = cli.json_indent;
    match run(cli.command) {
        Ok((value, code)) => {
            let text = if pretty {
                serde_json::to_string_pretty(&value)
            } else {
                serde_json::to_string(&value)
            }
            .expect("reports serialize");
            println!("{text}");
            ExitCode::from(code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> CmdOutput {
    match command {
        Command::Validate { file } => cmd_validate(&file),
        Command::Gen { kind, params, seed } => cmd_gen(kind, params.as_deref(), seed),
        Command::Principal { file, t, s, method } => cmd_principal(&file, t, s, method),
        Command::Congruences { file, strategy, maximal_only } => {
            cmd_congruences(&file, strategy, maximal_only)
        }
        Command::Decompose { file, congruence } => cmd_decompose(&file, &congruence),
        Command::Quotient { file, congruence } => cmd_quotient(&file, &congruence),
        Command::Verify {
            file,
            identity,
            t,
            s,
            family,
            exhaustive,
            max_family_size,
            max_instances,
        } => cmd_verify(&file, identity, t, s, family.as_deref(), exhaustive, max_family_size, max_instances),
        Command::SearchNaive { corpus, budget, seed } => cmd_search_naive(&corpus, budget, seed),
        Command::Suite { preset } => cmd_suite(&preset),
    }
}

/// Size cap from `SEMICONG_MAX_N`, clamped to the hard maximum.
fn size_cap() -> Result<usize, Failure> {
    match std::env::var("SEMICONG_MAX_N") {
        Err(_) => Ok(MAX_ELEMENTS),
        Ok(text) => {
            let n: usize = text
                .parse()
                .map_err(|_| Failure::invalid(format!("SEMICONG_MAX_N is not a number: {text:?}")))?;
            Ok(n.min(MAX_ELEMENTS))
        }
    }
}

fn load_semilattice(path: &PathBuf) -> Result<Semilattice, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
    let lat = Semilattice::from_json_str(&text)
        .map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
    let cap = size_cap()?;
    if lat.n() > cap {
        return Err(Failure::invalid(format!(
            "{}: {} elements exceed the active cap of {cap}",
            path.display(),
            lat.n()
        )));
    }
    Ok(lat)
}

fn parse_congruence(lat: &Semilattice, text: &str) -> Result<Congruence, Failure> {
    let partition: Partition = text
        .parse()
        .map_err(|e| Failure::invalid(format!("bad partition {text:?}: {e}")))?;
    Congruence::certify(lat, partition)
        .map_err(|e| Failure::invalid(format!("partition {text:?} is not a congruence: {e}")))
}

fn parse_family(lat: &Semilattice, text: &str) -> Result<Vec<Congruence>, Failure> {
    text.split(';')
        .filter(|part| !part.trim().is_empty())
        .map(|part| parse_congruence(lat, part.trim()))
        .collect()
}

fn cmd_validate(file: &PathBuf) -> CmdOutput {
    let text = std::fs::read_to_string(file)
        .map_err(|e| Failure::invalid(format!("{}: {e}", file.display())))?;
    match Semilattice::from_json_str(&text) {
        Ok(lat) => {
            let cap = size_cap()?;
            if lat.n() > cap {
                return Err(Failure::invalid(format!(
                    "{} elements exceed the active cap of {cap}",
                    lat.n()
                )));
            }
            Ok((json!({ "valid": true, "n": lat.n() }), 0))
        }
        Err(LoadError::Json(e)) => Err(Failure::invalid(format!("invalid json: {e}"))),
        Err(LoadError::Invalid(err)) => {
            Ok((json!({ "valid": false, "violation": violation_json(&err) }), 2))
        }
    }
}

fn violation_json(err: &SemilatticeError) -> Value {
    let (kind, witness) = match *err {
        SemilatticeError::OutOfRangeEntry { x, y, .. } => ("out_of_range_entry", vec![x, y]),
        SemilatticeError::NotIdempotent { x, .. } => ("not_idempotent", vec![x]),
        SemilatticeError::NotCommutative { x, y, .. } => ("not_commutative", vec![x, y]),
        SemilatticeError::NotAssociative { x, y, z, .. } => ("not_associative", vec![x, y, z]),
        SemilatticeError::NotSquare { row, .. } => ("not_square", vec![row]),
        SemilatticeError::Empty => ("empty", vec![]),
        SemilatticeError::TooManyElements { n, .. } => ("too_many_elements", vec![n]),
        SemilatticeError::DuplicateSet { i, j } => ("duplicate_set", vec![i, j]),
        SemilatticeError::NotUnionClosed { i, j, .. } => ("not_union_closed", vec![i, j]),
        _ => ("invalid_document", vec![]),
    };
    json!({ "kind": kind, "witness": witness, "message": err.to_string() })
}

fn cmd_gen(kind: GenKindArg, params: Option<&str>, seed: Option<u64>) -> CmdOutput {
    let values: Vec<usize> = match params {
        None => Vec::new(),
        Some(text) => text
            .split(',')
            .map(|p| p.trim().parse())
            .collect::<Result<_, _>>()
            .map_err(|_| Failure::invalid(format!("bad --params {params:?}")))?,
    };
    let want = |n: usize| -> Result<(), Failure> {
        if values.len() == n {
            Ok(())
        } else {
            Err(Failure::invalid(format!("expected {n} parameter(s), got {}", values.len())))
        }
    };
    let spec = match kind {
        GenKindArg::Chain => {
            want(1)?;
            GenSpec::Chain { n: values[0] }
        }
        GenKindArg::FreeJoin => {
            want(1)?;
            GenSpec::FreeJoin { k: values[0] }
        }
        GenKindArg::Boolean => {
            want(1)?;
            GenSpec::Boolean { k: values[0] }
        }
        GenKindArg::Fan => {
            want(1)?;
            GenSpec::Fan { k: values[0] }
        }
        GenKindArg::RandomUnionClosed => {
            want(2)?;
            let seed = seed.ok_or_else(|| Failure::invalid("random_union_closed needs --seed"))?;
            GenSpec::RandomUnionClosed { k: values[0], m: values[1], seed }
        }
    };
    let lat = generate(&spec).map_err(|e| Failure::invalid(e.to_string()))?;
    let cap = size_cap()?;
    if lat.n() > cap {
        return Err(Failure::invalid(format!(
            "generated {} elements, above the active cap of {cap}",
            lat.n()
        )));
    }
    Ok((serde_json::to_value(&lat).expect("serializes"), 0))
}

fn cmd_principal(file: &PathBuf, t: usize, s: usize, method: MethodArg) -> CmdOutput {
    let lat = load_semilattice(file)?;
    check_element(&lat, t)?;
    check_element(&lat, s)?;
    let g = ComparablePair::new(&lat, t, s);
    match method {
        MethodArg::Formula => {
            let theta = principal_comparable_formula(&lat, &g);
            Ok((json!({ "method": "formula", "theta": theta }), 0))
        }
        MethodArg::Closure => {
            let theta = congruence_closure(&lat, &[(g.top(), g.s())]);
            Ok((json!({ "method": "closure", "theta": theta }), 0))
        }
        MethodArg::Both => {
            let formula = principal_comparable_formula(&lat, &g);
            let closure = congruence_closure(&lat, &[(g.top(), g.s())]);
            let agree = formula == closure;
            let code = u8::from(!agree);
            Ok((json!({ "formula": formula, "closure": closure, "agree": agree }), code))
        }
    }
}

fn check_element(lat: &Semilattice, x: usize) -> Result<(), Failure> {
    if x >= lat.n() {
        return Err(Failure::invalid(format!(
            "element {x} out of range for a semilattice with {} elements",
            lat.n()
        )));
    }
    Ok(())
}

fn cmd_congruences(file: &PathBuf, strategy: Option<StrategyArg>, maximal_only: bool) -> CmdOutput {
    let lat = load_semilattice(file)?;
    if maximal_only {
        let maximal = maximal_congruences(&lat).map_err(analysis_failure)?;
        return Ok((json!({ "count": maximal.len(), "maximal": maximal }), 0));
    }
    let strategy = match strategy {
        Some(StrategyArg::Bell) => EnumerationStrategy::BellFilter,
        Some(StrategyArg::Meet) => EnumerationStrategy::MeetClosure,
        None => default_strategy(lat.n()),
    };
    let congs = all_congruences(&lat, strategy).map_err(analysis_failure)?;
    let name = match strategy {
        EnumerationStrategy::BellFilter => "bell",
        EnumerationStrategy::MeetClosure => "meet",
    };
    Ok((json!({ "strategy": name, "count": congs.len(), "congruences": congs }), 0))
}

fn analysis_failure(err: AnalysisError) -> Failure {
    match err {
        AnalysisError::DecompositionMismatch { .. } => Failure { code: 1, message: err.to_string() },
        _ => Failure::invalid(err.to_string()),
    }
}

fn cmd_decompose(file: &PathBuf, congruence: &str) -> CmdOutput {
    let lat = load_semilattice(file)?;
    let theta = parse_congruence(&lat, congruence)?;
    let factors = papert_decomposition(&lat, &theta).map_err(analysis_failure)?;
    Ok((
        json!({ "congruence": theta, "factors": factors, "meet_equals_input": true }),
        0,
    ))
}

fn cmd_quotient(file: &PathBuf, congruence: &str) -> CmdOutput {
    let lat = load_semilattice(file)?;
    let theta = parse_congruence(&lat, congruence)?;
    let (q, projection) = lat
        .quotient(&theta)
        .map_err(|e| Failure::invalid(e.to_string()))?;
    Ok((json!({ "semilattice": q, "projection": projection }), 0))
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    file: &PathBuf,
    identity: IdentityArg,
    t: usize,
    s: usize,
    family: Option<&str>,
    exhaustive: bool,
    max_family_size: Option<usize>,
    max_instances: u64,
) -> CmdOutput {
    let lat = load_semilattice(file)?;
    check_element(&lat, t)?;
    check_element(&lat, s)?;
    let g = ComparablePair::new(&lat, t, s);
    let kind = match identity {
        IdentityArg::Pwd => IdentityKind::PwdLaw,
        IdentityArg::Crossing => IdentityKind::MaximalCrossing,
        IdentityArg::Onepsi => IdentityKind::OnePsi,
        IdentityArg::Generalized => IdentityKind::GeneralizedCrossing,
        IdentityArg::Fullpsi => IdentityKind::PsiJoinFull,
    };

    if exhaustive {
        let size = max_family_size.expect("clap enforces the pairing");
        let all = all_congruences_auto(&lat).map_err(analysis_failure)?;
        let out = exhaustive_for_pair(&lat, kind, &g, &all, size, max_instances)
            .map_err(identity_failure)?;
        let holds = out.all_hold();
        let mut doc = json!({
            "identity": kind,
            "t": t,
            "s": s,
            "checked": out.checked,
            "cap_hit": out.cap_hit,
            "holds": holds,
            "failures": out.failures,
        });
        if matches!(kind, IdentityKind::PwdLaw) {
            doc["diagonal_sensitive"] = json!(out.diagonal_sensitive);
        }
        return Ok((doc, u8::from(!holds)));
    }

    let family = family.ok_or_else(|| Failure::invalid("--family or --exhaustive required"))?;
    let members = parse_family(&lat, family)?;
    let split = classify_family(&lat, &members, &g).map_err(analysis_failure)?;
    let report = match kind {
        IdentityKind::PwdLaw => check_pwd_law(&lat, &members, &g),
        IdentityKind::MaximalCrossing => {
            check_maximal_crossing(&lat, &split.phis, &split.psis, &g)
        }
        IdentityKind::OnePsi => match split.psis.as_slice() {
            [psi] => check_one_psi(&lat, &split.phis, psi, &g),
            other => {
                return Err(Failure::hypothesis(format!(
                    "onepsi needs exactly one family member without the generator pair, got {}",
                    other.len()
                )))
            }
        },
        IdentityKind::GeneralizedCrossing => {
            check_generalized_crossing(&lat, &split.phis, &split.psis, &g)
        }
        IdentityKind::PsiJoinFull => {
            if !split.phis.is_empty() {
                return Err(Failure::hypothesis(
                    "fullpsi family must not contain the generator pair in any member",
                ));
            }
            check_psi_join_full(&lat, &split.psis, &g)
        }
        IdentityKind::NaivePwd => unreachable!("not a verify identity"),
    }
    .map_err(identity_failure)?;
    let code = u8::from(!report.holds);
    Ok((serde_json::to_value(&report).expect("serializes"), code))
}

fn identity_failure(err: IdentityError) -> Failure {
    match err {
        IdentityError::EmptyFamily { .. }
        | IdentityError::HypothesisViolation { .. }
        | IdentityError::SingletonPsiWithoutPhis => Failure::hypothesis(err.to_string()),
        IdentityError::InclusionDirectionViolated { .. } => {
            Failure { code: 1, message: err.to_string() }
        }
        IdentityError::MismatchedCarrier | IdentityError::Analysis(_) => {
            Failure::invalid(err.to_string())
        }
    }
}

fn cmd_search_naive(corpus: &[String], budget: u64, seed: u64) -> CmdOutput {
    let pool: Vec<Semilattice> = if corpus == ["desk"] {
        desk_corpus().into_iter().map(|e| e.lattice).collect()
    } else {
        corpus
            .iter()
            .map(|path| load_semilattice(&PathBuf::from(path)))
            .collect::<Result<_, _>>()?
    };
    let report = search_naive_pwd(&pool, budget, seed).map_err(identity_failure)?;
    let found = report.counterexample.is_some();
    Ok((serde_json::to_value(&report).expect("serializes"), u8::from(found)))
}

fn cmd_suite(preset: &str) -> CmdOutput {
    if preset != "desk" {
        return Err(Failure::invalid(format!("unknown preset {preset:?} (only \"desk\")")));
    }
    let report = run_desk_suite();
    for criterion in &report.criteria {
        eprintln!(
            "criterion {}: {} — {} ({} ms)",
            criterion.id,
            if criterion.pass { "PASS" } else { "FAIL" },
            criterion.name,
            criterion.millis
        );
    }
    let code = u8::from(!report.all_pass);
    Ok((serde_json::to_value(&report).expect("serializes"), code))
}
