use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use kbsel::adhesive::{build_kb, generate_synthetic_catalog, RequirementSchema};
use kbsel::cdmn::{check_unique, compile_tables, derive_drd, parse_tables, HitPolicy};
use kbsel::consultant::{ConsultError, Consultant, OptimizeRequest, Session};
use kbsel::ground::ground;
use kbsel::serialize;
use kbsel::solve::{check, explain_inconsistency, Budget, CheckResult, Direction, SolveError, Status};
use kbsel_service::script::parse_assignment;
use kbsel_service::server::{serve, AppState};
use kbsel_service::{load_kb, parse_script, report, LoadedKb, Step};

const OK: u8 = 0;
const DIAGNOSTICS: u8 = 1;
const INCONSISTENT: u8 = 2;
const TIMEOUT: u8 = 3;

/// Adhesive-selection consultant over a typed knowledge base.
///
/// Exit codes: 0 success, 1 diagnostics or bad input, 2 inconsistent,
/// 3 time budget exhausted.
#[derive(Parser)]
#[command(name = "kbsel", version)]
struct Cli {
    /// Knowledge base: a `.kb` file or a catalog directory. Defaults to the
    /// synthetic adhesive catalog for `--seed`.
    #[arg(long, global = true)]
    kb: Option<PathBuf>,
    /// Seed of the synthetic catalog.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Time budget of each inference call.
    #[arg(long, global = true, default_value_t = 30_000)]
    timeout_ms: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SessionArgs {
    /// Script of `set Symbol = value` / `retract Symbol` lines.
    #[arg(long)]
    script: Option<PathBuf>,
    /// Extra assignment applied after the script, as `Symbol=value`.
    #[arg(long = "set", value_name = "SYMBOL=VALUE")]
    sets: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, validate and check that the KB has a model.
    Check,
    /// Apply a session script and print the propagated state.
    Propagate {
        #[command(flatten)]
        session: SessionArgs,
    },
    /// Best model for a numeric symbol after a session script.
    Optimize {
        #[command(flatten)]
        session: SessionArgs,
        #[arg(long, conflicts_with = "maximize", required_unless_present = "maximize")]
        minimize: Option<String>,
        #[arg(long)]
        maximize: Option<String>,
    },
    /// Explain a propagated value after a session script.
    Explain {
        symbol: String,
        #[command(flatten)]
        session: SessionArgs,
    },
    /// Compile decision tables against the KB's vocabulary and print the
    /// resulting theory.
    CompileCdmn {
        tables: PathBuf,
        /// Also print the requirements graph.
        #[arg(long)]
        drd: bool,
    },
    /// Write the synthetic catalog, its tables and the built KB.
    GenCatalog {
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Append-only event log; existing sessions in it are restored.
        #[arg(long)]
        log: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }
}

impl From<ConsultError> for Failure {
    fn from(e: ConsultError) -> Self {
        let code = match e {
            ConsultError::Timeout => TIMEOUT,
            ConsultError::Inconsistent => INCONSISTENT,
            _ => DIAGNOSTICS,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        ConsultError::from(e).into()
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { DIAGNOSTICS } else { OK });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load(cli: &Cli) -> Result<LoadedKb, Failure> {
    load_kb(cli.kb.as_deref(), cli.seed).map_err(|e| Failure::new(DIAGNOSTICS, e.to_string()))
}

fn consultant(cli: &Cli) -> Result<Consultant, Failure> {
    Ok(Consultant::new(load(cli)?.kb, Budget::millis(cli.timeout_ms))?)
}

fn steps(s: &SessionArgs) -> Result<Vec<Step>, Failure> {
    let mut out = match &s.script {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::new(DIAGNOSTICS, format!("{}: {e}", p.display())))?;
            parse_script(&text).map_err(|e| Failure::new(DIAGNOSTICS, format!("{}: {e}", p.display())))?
        }
        None => Vec::new(),
    };
    for text in &s.sets {
        let req = parse_assignment(text).ok_or_else(|| Failure::new(DIAGNOSTICS, format!("bad --set `{text}`")))?;
        out.push(Step::Set(req));
    }
    Ok(out)
}

fn replay(c: &Consultant, steps: &[Step]) -> Result<Session, Failure> {
    let mut s = c.initial()?;
    for step in steps {
        s = match step {
            Step::Set(req) => c.set(&s, req)?,
            Step::Retract { symbol, args } => c.retract(&s, symbol, args)?,
        };
    }
    Ok(s)
}

/// Prints the inconsistency core and fails when the session has no model.
fn consistent(s: &Session) -> Result<(), Failure> {
    if s.view.status == Status::Inconsistent {
        let core = s.view.inconsistency.as_ref().map(report::explanation).unwrap_or_default();
        print!("status: inconsistent\n{core}");
        return Err(Failure::new(INCONSISTENT, "the session is inconsistent"));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match &cli.command {
        Command::Check => {
            let loaded = load(&cli)?;
            let kb = &loaded.kb;
            let gp = ground(&kb.vocabulary, &kb.theory, &kb.structure)
                .map_err(|e| Failure::new(DIAGNOSTICS, e.to_string()))?;
            let budget = Budget::millis(cli.timeout_ms);
            match check(&gp, &kb.structure, &budget)? {
                CheckResult::Sat(_) => {
                    println!(
                        "ok: {} types, {} symbols, {} laws, {} ground clauses",
                        kb.vocabulary.types.len(),
                        kb.vocabulary.symbols.len(),
                        kb.theory.formulas.len(),
                        gp.clauses.len()
                    );
                    Ok(OK)
                }
                CheckResult::Unsat => {
                    let core = explain_inconsistency(&gp, &kb.structure, &budget)?;
                    println!("status: inconsistent");
                    for l in &core.laws {
                        println!("  law {}: {}", l.id, l.label);
                    }
                    Ok(INCONSISTENT)
                }
            }
        }
        Command::Propagate { session } => {
            let c = consultant(&cli)?;
            let s = replay(&c, &steps(session)?)?;
            print!("{}", report::view(&s.view));
            Ok(if s.view.status == Status::Inconsistent { INCONSISTENT } else { OK })
        }
        Command::Optimize { session, minimize, maximize } => {
            let c = consultant(&cli)?;
            let s = replay(&c, &steps(session)?)?;
            consistent(&s)?;
            let req = match (minimize, maximize) {
                (Some(sym), _) => OptimizeRequest { symbol: sym.clone(), direction: Direction::Minimize },
                (None, Some(sym)) => OptimizeRequest { symbol: sym.clone(), direction: Direction::Maximize },
                (None, None) => unreachable!("clap requires one"),
            };
            print!("{}", report::optimum(&c.optimize(&s, &req)?));
            Ok(OK)
        }
        Command::Explain { symbol, session } => {
            let c = consultant(&cli)?;
            let s = replay(&c, &steps(session)?)?;
            consistent(&s)?;
            print!("{}", report::explanation(&c.explain(&s, symbol, &[])?));
            Ok(OK)
        }
        Command::CompileCdmn { tables, drd } => compile_cdmn(&cli, tables, *drd),
        Command::GenCatalog { out } => gen_catalog(cli.seed, out),
        Command::Serve { port, log } => {
            let loaded = load(&cli)?;
            let c = Consultant::new(loaded.kb, Budget::millis(cli.timeout_ms))?;
            let (state, warnings) = AppState::new(&loaded.id, c, log.as_deref())
                .map_err(|e| Failure::new(DIAGNOSTICS, format!("event log: {e}")))?;
            for w in warnings {
                eprintln!("warning: {w}");
            }
            let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::new(DIAGNOSTICS, e.to_string()))?;
            rt.block_on(serve(Arc::new(state), SocketAddr::from(([127, 0, 0, 1], *port))))
                .map_err(|e| Failure::new(DIAGNOSTICS, e.to_string()))?;
            Ok(OK)
        }
    }
}

fn compile_cdmn(cli: &Cli, path: &Path, drd: bool) -> Result<u8, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::new(DIAGNOSTICS, format!("{}: {e}", path.display())))?;
    let voc = load(cli)?.kb.vocabulary;
    let tables = parse_tables(&text, &path.display().to_string())
        .map_err(|ds| Failure::new(DIAGNOSTICS, ds.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n")))?;
    let mut overlapping = false;
    for t in tables.iter().filter(|t| t.hit_policy == HitPolicy::U) {
        let pairs = check_unique(t, &voc).map_err(|e| Failure::new(DIAGNOSTICS, e.to_string()))?;
        for (a, b) in pairs {
            eprintln!("{}: table \"{}\": rows {a} and {b} overlap", path.display(), t.name);
            overlapping = true;
        }
    }
    if overlapping {
        return Ok(DIAGNOSTICS);
    }
    let theory = compile_tables(&tables, &voc).map_err(|e| Failure::new(DIAGNOSTICS, e.to_string()))?;
    let printed = serialize(&Default::default(), &theory, &Default::default());
    let block = printed.split("theory {\n").nth(1).and_then(|s| s.split("}\n\nstructure").next()).unwrap_or("");
    print!("theory {{\n{block}}}\n");
    if drd {
        let g = derive_drd(&tables, &voc).map_err(|e| Failure::new(DIAGNOSTICS, e.to_string()))?;
        println!("requirements:");
        for (from, to) in &g.edges {
            println!("  {from} -> {to}");
        }
    }
    Ok(OK)
}

fn gen_catalog(seed: u64, out: &Path) -> Result<u8, Failure> {
    let io = |e: std::io::Error| Failure::new(DIAGNOSTICS, format!("{}: {e}", out.display()));
    let catalog = generate_synthetic_catalog(seed);
    fs::create_dir_all(out).map_err(io)?;
    catalog.save(out).map_err(|e| Failure::new(DIAGNOSTICS, e.to_string()))?;
    let schema = RequirementSchema::standard();
    fs::write(out.join("tables.cdmn"), &schema.tables).map_err(io)?;
    let kb = build_kb(&catalog, &schema).map_err(|e| Failure::new(DIAGNOSTICS, e.to_string()))?;
    fs::write(out.join("adhesive.kb"), serialize(&kb.vocabulary, &kb.theory, &kb.structure)).map_err(io)?;
    println!(
        "wrote {} adhesives, {} families, {} substrates to {}",
        catalog.adhesives.len(),
        catalog.families.len(),
        catalog.substrates.len(),
        out.display()
    );
    Ok(OK)
}
