//! Command-line surface of the treedet toolkit. Results go to stdout,
//! diagnostics to stderr; the exit code carries the decision: 0 for
//! affirmative or success, 1 for a negative decision, 2 for usage or input
//! errors, 3 for tripped internal guards such as caps or a failed
//! equivalence assertion.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use treedet::analyze::{self, DtaDecision, DtaRefusal};
use treedet::construct::ConstructError;
use treedet::core::{BottomUpAutomaton, RankedTree};
use treedet::fudt::{self, FudtDecision, FudtError};
use treedet::io::{self, AutomatonDocument, AutomatonKind, GrammarDocument};
use treedet::minimize::{self, MinimizeError, DEFAULT_DETERMINIZE_CAP};
use treedet::oracle;

const EXIT_OK: u8 = 0;
const EXIT_NEGATIVE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_GUARD: u8 = 3;

#[derive(Parser)]
#[command(name = "treedet", version, about = "Decide top-down determinism of regular tree languages")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize a bottom-up automaton (determinizing it first if needed).
    Minimize {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Decide a property of the input language.
    Decide {
        #[command(subcommand)]
        question: Question,
    },
    /// Construct an equivalent deterministic top-down automaton.
    ToDta {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Print the conflux eliminations performed.
        #[arg(long)]
        trace: bool,
    },
    /// Split the language into deterministic top-down components.
    Decompose {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Refuse decompositions with more components than this.
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Print the violation grammar of the minimized input.
    Grammar {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Test one term for membership.
    Member { input: PathBuf, term: String },
    /// Compare two automata on all trees up to a size bound.
    Equiv {
        left: PathBuf,
        right: PathBuf,
        #[arg(long)]
        max_size: usize,
    },
    /// Run a brute-force oracle check against the input language.
    Oracle {
        #[command(subcommand)]
        check: OracleCheck,
    },
}

#[derive(Subcommand)]
enum Question {
    /// Is the language recognized by a deterministic top-down automaton?
    Dta {
        input: PathBuf,
        #[arg(long)]
        explain: bool,
    },
    /// Is it a finite union of deterministic top-down languages?
    Fudt {
        input: PathBuf,
        #[arg(long)]
        explain: bool,
    },
}

#[derive(Subcommand)]
enum OracleCheck {
    /// Search for a tree in the path closure that the language misses.
    PathClosed(OracleArgs),
    /// Exhaustively check the subtree exchange property.
    Exchange(OracleArgs),
}

#[derive(Args)]
struct OracleArgs {
    input: PathBuf,
    #[arg(long)]
    max_size: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("treedet: {}", failure.message);
            failure.code
        }
    };
    ExitCode::from(code)
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    fn guard(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_GUARD,
            message: message.into(),
        }
    }
}

impl From<io::ParseError> for Failure {
    fn from(e: io::ParseError) -> Self {
        Failure::input(e.to_string())
    }
}

impl From<MinimizeError> for Failure {
    fn from(e: MinimizeError) -> Self {
        match e {
            MinimizeError::CapExceeded { .. } => Failure::guard(e.to_string()),
            other => Failure::input(other.to_string()),
        }
    }
}

impl From<ConstructError> for Failure {
    fn from(e: ConstructError) -> Self {
        match e {
            ConstructError::EquivalenceBroken { .. } | ConstructError::GuardTripped(_) => {
                Failure::guard(e.to_string())
            }
            other => Failure::input(other.to_string()),
        }
    }
}

impl From<FudtError> for Failure {
    fn from(e: FudtError) -> Self {
        match e {
            FudtError::ComponentCapExceeded { .. } => Failure::guard(e.to_string()),
            FudtError::Minimize(inner) => inner.into(),
            FudtError::Construct(inner) => inner.into(),
            other => Failure::input(other.to_string()),
        }
    }
}

impl From<analyze::AnalyzeError> for Failure {
    fn from(e: analyze::AnalyzeError) -> Self {
        match e {
            analyze::AnalyzeError::Minimize(inner) => inner.into(),
            analyze::AnalyzeError::Construct(inner) => inner.into(),
            analyze::AnalyzeError::Core(inner) => Failure::input(inner.to_string()),
        }
    }
}

impl From<treedet::core::CoreError> for Failure {
    fn from(e: treedet::core::CoreError) -> Self {
        Failure::input(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::input(e.to_string())
    }
}

/// Determinization and decomposition caps, overridable via TREEDET_CAP.
fn cap_from_env(fallback: usize) -> Result<usize, Failure> {
    match std::env::var("TREEDET_CAP") {
        Ok(value) => value
            .parse()
            .map_err(|_| Failure::input(format!("TREEDET_CAP is not a number: {}", value))),
        Err(_) => Ok(fallback),
    }
}

fn load_document(path: &Path) -> Result<AutomatonDocument, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("{}: {}", path.display(), e)))?;
    Ok(io::parse_automaton(&text)?)
}

/// Reads the input as a bottom-up automaton, converting top-down input by
/// reversal.
fn load_bottom_up(path: &Path) -> Result<(String, BottomUpAutomaton), Failure> {
    let doc = load_document(path)?;
    let automaton = match doc.automaton {
        AutomatonKind::BottomUp(a) => a,
        AutomatonKind::TopDown(a) => a.correspond_inv(),
    };
    Ok((doc.name, automaton))
}

fn parse_member_term(a: &BottomUpAutomaton, text: &str) -> Result<RankedTree, Failure> {
    Ok(io::parse_term(text, a.alphabet())?)
}

fn write_or_print(output: Option<&Path>, content: &str) -> Result<(), Failure> {
    match output {
        Some(path) => {
            std::fs::write(path, content)
                .map_err(|e| Failure::input(format!("{}: {}", path.display(), e)))?;
        }
        None => print!("{}", content),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Minimize { input, output } => {
            let (name, automaton) = load_bottom_up(&input)?;
            let cap = cap_from_env(DEFAULT_DETERMINIZE_CAP)?;
            let m = analyze_minimized(&automaton, cap)?;
            let doc = AutomatonDocument::bottom_up(name, m.into_automaton());
            write_or_print(output.as_deref(), &io::render_automaton(&doc))?;
            Ok(EXIT_OK)
        }
        Command::Decide { question } => match question {
            Question::Dta { input, explain } => {
                let (_, automaton) = load_bottom_up(&input)?;
                let cap = cap_from_env(DEFAULT_DETERMINIZE_CAP)?;
                match analyze::decide_dta(&automaton, cap)? {
                    DtaDecision::Yes => {
                        println!("YES");
                        Ok(EXIT_OK)
                    }
                    DtaDecision::No(refusal) => {
                        println!("NO");
                        if explain {
                            print_refusal(&refusal);
                        }
                        Ok(EXIT_NEGATIVE)
                    }
                }
            }
            Question::Fudt { input, explain } => {
                let (name, automaton) = load_bottom_up(&input)?;
                let cap = cap_from_env(DEFAULT_DETERMINIZE_CAP)?;
                match fudt::decide_fudt(&automaton, cap)? {
                    FudtDecision::Yes => {
                        println!("YES");
                        if explain {
                            print_grammar(&name, &automaton, cap)?;
                            println!("finiteness: finite");
                        }
                        Ok(EXIT_OK)
                    }
                    FudtDecision::No(witness) => {
                        println!("NO");
                        if explain {
                            print_grammar(&name, &automaton, cap)?;
                            println!(
                                "finiteness: infinite via {} in component {{{}}} by {}",
                                witness.from,
                                witness
                                    .component
                                    .iter()
                                    .cloned()
                                    .collect::<Vec<_>>()
                                    .join(" "),
                                witness.production
                            );
                        }
                        Ok(EXIT_NEGATIVE)
                    }
                }
            }
        },
        Command::ToDta { input, output, trace } => {
            let (name, automaton) = load_bottom_up(&input)?;
            let cap = cap_from_env(DEFAULT_DETERMINIZE_CAP)?;
            let m = analyze_minimized(&automaton, cap)?;
            let (dta, elimination_trace) =
                treedet::construct::dta_pipeline(&m, analyze::DECIDE_EQUIVALENCE_BOUND)?;
            let doc = AutomatonDocument::top_down(name, dta);
            std::fs::write(&output, io::render_automaton(&doc))
                .map_err(|e| Failure::input(format!("{}: {}", output.display(), e)))?;
            if trace {
                print!("{}", io::render_trace(&elimination_trace));
            }
            Ok(EXIT_OK)
        }
        Command::Decompose { input, output, cap } => {
            let (_, automaton) = load_bottom_up(&input)?;
            let determinize_cap = cap_from_env(DEFAULT_DETERMINIZE_CAP)?;
            let component_cap = match cap {
                Some(n) => n,
                None => cap_from_env(fudt::DecomposeOptions::default().component_cap)?,
            };
            let options = fudt::DecomposeOptions {
                determinize_cap,
                component_cap,
                ..fudt::DecomposeOptions::default()
            };
            match fudt::decompose(&automaton, options) {
                Ok(decomposition) => {
                    let names = io::render_decomposition(&decomposition, &output)?;
                    println!("{} components", names.len());
                    Ok(EXIT_OK)
                }
                Err(FudtError::NotFiniteUnion(_)) => {
                    println!("NO");
                    Ok(EXIT_NEGATIVE)
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Grammar { input, output } => {
            let (name, automaton) = load_bottom_up(&input)?;
            let cap = cap_from_env(DEFAULT_DETERMINIZE_CAP)?;
            let m = analyze_minimized(&automaton, cap)?;
            let grammar = fudt::build_violation_grammar(&m);
            let doc = GrammarDocument::from_grammar(name, &grammar);
            write_or_print(output.as_deref(), &io::render_grammar(&doc))?;
            Ok(EXIT_OK)
        }
        Command::Member { input, term } => {
            let (_, automaton) = load_bottom_up(&input)?;
            let tree = parse_member_term(&automaton, &term)?;
            if automaton.accepts(&tree)? {
                println!("YES");
                Ok(EXIT_OK)
            } else {
                println!("NO");
                Ok(EXIT_NEGATIVE)
            }
        }
        Command::Equiv { left, right, max_size } => {
            let (_, a) = load_bottom_up(&left)?;
            let (_, b) = load_bottom_up(&right)?;
            match oracle::bounded_equivalence(&a, &b, max_size)? {
                oracle::EquivalenceVerdict::Equal { bound } => {
                    println!("EQUAL up to size {}", bound);
                    Ok(EXIT_OK)
                }
                oracle::EquivalenceVerdict::Distinguished(tree) => {
                    println!("DISTINGUISHED by {}", tree);
                    Ok(EXIT_NEGATIVE)
                }
            }
        }
        Command::Oracle { check } => match check {
            OracleCheck::PathClosed(args) => {
                let (_, automaton) = load_bottom_up(&args.input)?;
                match oracle::bounded_path_closed(
                    &automaton,
                    args.max_size,
                    oracle::DEFAULT_PATH_SLACK,
                )? {
                    oracle::PathClosedVerdict::Closed { bound } => {
                        println!("CLOSED up to size {}", bound);
                        Ok(EXIT_OK)
                    }
                    oracle::PathClosedVerdict::Counterexample(tree) => {
                        println!("COUNTEREXAMPLE {}", tree);
                        Ok(EXIT_NEGATIVE)
                    }
                }
            }
            OracleCheck::Exchange(args) => {
                let (_, automaton) = load_bottom_up(&args.input)?;
                match oracle::bounded_exchange(&automaton, args.max_size)? {
                    oracle::ExchangeVerdict::Holds { bound } => {
                        println!("HOLDS up to size {}", bound);
                        Ok(EXIT_OK)
                    }
                    oracle::ExchangeVerdict::Counterexample(cx) => {
                        println!(
                            "COUNTEREXAMPLE base {} at {} mixing {} and {} at child {} misses {}",
                            cx.base, cx.address, cx.first, cx.second, cx.position, cx.mixed
                        );
                        Ok(EXIT_NEGATIVE)
                    }
                }
            }
        },
    }
}

fn analyze_minimized(
    a: &BottomUpAutomaton,
    cap: usize,
) -> Result<minimize::MinimalDba, Failure> {
    if a.is_deterministic() {
        Ok(minimize::minimize(a)?)
    } else {
        Ok(minimize::minimize(&minimize::determinize(a, cap)?)?)
    }
}

fn print_refusal(refusal: &DtaRefusal) {
    match refusal {
        DtaRefusal::Violations { reports, root } => {
            for report in reports {
                let witness = report.witness.as_ref().expect("reported groups violate");
                println!(
                    "violating group: symbol {} target {} with {} transitions; missing {}({})",
                    report.group.symbol,
                    report.group.target,
                    report.group.tuples.len(),
                    report.group.symbol,
                    witness
                        .missing
                        .iter()
                        .map(|q| q.to_string())
                        .collect::<Vec<_>>()
                        .join(",")
                );
            }
            for violation in root {
                println!(
                    "final states {{{}}} clash on symbol {}; missing {}({})",
                    violation
                        .finals
                        .iter()
                        .map(|q| q.to_string())
                        .collect::<Vec<_>>()
                        .join(" "),
                    violation.symbol,
                    violation.symbol,
                    violation
                        .witness
                        .missing
                        .iter()
                        .map(|q| q.to_string())
                        .collect::<Vec<_>>()
                        .join(",")
                );
            }
        }
        DtaRefusal::ConstructionGuard { witness } => {
            println!(
                "no violating group, but conflux elimination changes the language; first differing tree: {}",
                witness
            );
        }
    }
}

fn print_grammar(name: &str, automaton: &BottomUpAutomaton, cap: usize) -> Result<(), Failure> {
    let m = analyze_minimized(automaton, cap)?;
    let grammar = fudt::build_violation_grammar(&m);
    let doc = GrammarDocument::from_grammar(name, &grammar);
    print!("{}", io::render_grammar(&doc));
    Ok(())
}
