//! `irt`: normalize System T' terms, extract monadic realizers from
//! derivations, check monad laws, test realizability, and run the learning
//! loop.
//!
//! Exit codes: 0 success/pass, 1 verdict failure, 2 usage or parse error,
//! 3 internal invariant violation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context as _, Result};
use clap::{Args, Parser, Subcommand};

use irt_core::checker::{sequent_valid, CheckBounds, Checker, Outcome, SuppliedRealizers};
use irt_core::corpus;
use irt_core::extract::{extract, monadic_type, DecoratedSequent};
use irt_core::format::{
    decorated_from_sexp, decorated_to_sexp, derivation_from_sexp, formula_from_sexp,
    parse_closed_term, signature_from_sexp, state_from_sexp, term_to_sexp, trace_to_pretty,
};
use irt_core::kernel::{normalize, type_of_closed, DEFAULT_FUEL};
use irt_core::learner::{extract_witness, learn, Terminal};
use irt_core::monads::monad_by_name;
use irt_core::obs::{check_monad_laws, default_type_menu, LawConfig};
use irt_core::runtime::KnowledgeState;
use irt_core::sexp::parse;
use irt_core::sig::Signature;

#[derive(Parser)]
#[command(name = "irt", version, about = "interactive realizability toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Signature file; the bundled demo signature is used when omitted.
    #[arg(long)]
    signature: Option<PathBuf>,
    /// Seed recorded in output artifacts and used for sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Normalization step budget.
    #[arg(long, default_value_t = DEFAULT_FUEL)]
    fuel: u64,
    /// Write the primary output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, type check, and normalize a term file.
    Normalize {
        #[command(flatten)]
        common: Common,
        term: PathBuf,
    },
    /// Decorate a derivation with a monadic realizer.
    Extract {
        #[command(flatten)]
        common: Common,
        /// identity, exception, or ir.
        #[arg(long, default_value = "ir")]
        monad: String,
        derivation: PathBuf,
    },
    /// Check the monad laws M1-M3 observationally.
    CheckLaws {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "ir")]
        monad: String,
        /// Samples per law.
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Check that a realizer monadically realizes a formula at a state.
    RealizeCheck {
        #[command(flatten)]
        common: Common,
        /// A decorated-sequent file produced by `extract`.
        #[arg(long, conflicts_with_all = ["realizer", "formula"])]
        decorated: Option<PathBuf>,
        /// A closed realizer term file (requires --formula).
        #[arg(long, requires = "formula")]
        realizer: Option<PathBuf>,
        #[arg(long)]
        formula: Option<PathBuf>,
        /// Knowledge-state file; empty state when omitted.
        #[arg(long)]
        state: Option<PathBuf>,
        /// Universal bound N (instances range over 0..=N).
        #[arg(long, default_value_t = 8)]
        bound: u64,
        /// Generated realizers per assumption or antecedent.
        #[arg(long, default_value_t = 50)]
        budget: usize,
    },
    /// Run the learning loop and report the extracted witness.
    Learn {
        #[command(flatten)]
        common: Common,
        #[arg(long, conflicts_with_all = ["realizer", "formula"])]
        decorated: Option<PathBuf>,
        #[arg(long, requires = "formula")]
        realizer: Option<PathBuf>,
        #[arg(long)]
        formula: Option<PathBuf>,
        /// Initial state file; empty state when omitted.
        #[arg(long)]
        state: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        max_iters: u64,
        #[arg(long, default_value_t = 8)]
        bound: u64,
    },
}

/// 2 for bad input, 3 for internal invariant violations.
fn classify(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<irt_core::kernel::KernelError>().is_some() {
        return 3;
    }
    if let Some(c) = err.downcast_ref::<irt_core::checker::CheckError>() {
        return match c {
            irt_core::checker::CheckError::Kernel(_)
            | irt_core::checker::CheckError::BadNormalForm { .. } => 3,
            _ => 2,
        };
    }
    2
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(classify(&e))
        }
    }
}

fn load_signature(path: &Option<PathBuf>) -> Result<Signature> {
    match path {
        None => Ok(corpus::signature()),
        Some(p) => {
            let src = std::fs::read_to_string(p)
                .with_context(|| format!("reading signature {}", p.display()))?;
            Ok(signature_from_sexp(&parse(&src)?)?)
        }
    }
}

fn read_sexp(path: &Path) -> Result<irt_core::sexp::Sexp> {
    let src = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    Ok(parse(&src)?)
}

fn emit(common: &Common, content: String) -> Result<()> {
    match &common.out {
        None => {
            println!("{content}");
            Ok(())
        }
        Some(p) => {
            std::fs::write(p, content + "\n")
                .with_context(|| format!("writing {}", p.display()))
        }
    }
}

fn load_state(sig: &Signature, path: &Option<PathBuf>) -> Result<KnowledgeState> {
    match path {
        None => Ok(KnowledgeState::empty()),
        Some(p) => Ok(state_from_sexp(sig, &read_sexp(p)?)?),
    }
}

/// Either a decorated-sequent file or a bare realizer + formula pair.
fn load_goal(
    sig: &Signature,
    decorated: &Option<PathBuf>,
    realizer: &Option<PathBuf>,
    formula: &Option<PathBuf>,
) -> Result<DecoratedSequent> {
    match (decorated, realizer, formula) {
        (Some(p), _, _) => {
            let (_, _, ds, _) = decorated_from_sexp(sig, &read_sexp(p)?)?;
            Ok(ds)
        }
        (None, Some(r), Some(f)) => {
            let conclusion = formula_from_sexp(sig, &read_sexp(f)?)?;
            let realizer = parse_closed_term(sig, &read_sexp(r)?, None)?;
            Ok(DecoratedSequent { context: vec![], realizer, conclusion })
        }
        _ => bail!("provide either --decorated FILE or --realizer FILE --formula FILE"),
    }
}

fn run(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Normalize { common, term } => {
            let sig = load_signature(&common.signature)?;
            let t = parse_closed_term(&sig, &read_sexp(&term)?, None)?;
            type_of_closed(&t).map_err(|e| anyhow!("ill-typed term: {e}"))?;
            let nf = normalize(&sig, &t, common.fuel)?;
            emit(&common, term_to_sexp(&nf).to_string())?;
            Ok(0)
        }
        Command::Extract { common, monad, derivation } => {
            let sig = load_signature(&common.signature)?;
            let m = monad_by_name(&monad)
                .ok_or_else(|| anyhow!("unknown monad `{monad}` (identity, exception, ir)"))?;
            let d = derivation_from_sexp(&sig, &read_sexp(&derivation)?)?;
            let ds = extract(&sig, &m, &d).map_err(|e| anyhow!("{e}"))?;
            let ty = monadic_type(&m, &ds.conclusion);
            emit(&common, decorated_to_sexp(&monad, common.seed, &ds, &ty).to_string())?;
            Ok(0)
        }
        Command::CheckLaws { common, monad, samples } => {
            let sig = load_signature(&common.signature)?;
            let m = monad_by_name(&monad)
                .ok_or_else(|| anyhow!("unknown monad `{monad}` (identity, exception, ir)"))?;
            let menu = default_type_menu(&m);
            let cfg = LawConfig { samples_per_law: samples, ..LawConfig::default() };
            let report = check_monad_laws(&sig, &m, &menu, &cfg, common.seed);
            let mut lines = Vec::new();
            lines.push(format!("monad laws for `{}` (seed {})", report.monad, report.seed));
            for law in &report.laws {
                lines.push(format!(
                    "law {} monad {} samples {} result {}",
                    law.law.name(),
                    report.monad,
                    law.samples,
                    if law.pass { "pass" } else { "fail" }
                ));
                if let Some(ce) = &law.counterexample {
                    lines.push(format!("  counterexample: {}", ce.description));
                    lines.push(format!("  lhs: {}", term_to_sexp(&ce.lhs)));
                    lines.push(format!("  rhs: {}", term_to_sexp(&ce.rhs)));
                }
            }
            let pass = report.all_pass();
            emit(&common, lines.join("\n"))?;
            Ok(if pass { 0 } else { 1 })
        }
        Command::RealizeCheck {
            common,
            decorated,
            realizer,
            formula,
            state,
            bound,
            budget,
        } => {
            let sig = load_signature(&common.signature)?;
            let ds = load_goal(&sig, &decorated, &realizer, &formula)?;
            let st = load_state(&sig, &state)?;
            let bounds =
                CheckBounds { universal_bound: bound, realizer_budget: budget, fuel: common.fuel };
            let verdict = sequent_valid(&sig, &ds, &st, bounds, &SuppliedRealizers::new())?;
            let (line, code) = match &verdict.outcome {
                Outcome::Pass => (
                    format!(
                        "(verdict pass (vacuous {}) (seed {}))",
                        verdict.vacuous, common.seed
                    ),
                    0,
                ),
                Outcome::Fail(w) => (
                    format!("(verdict fail (seed {}) (witness \"{}\"))", common.seed, w.describe()),
                    1,
                ),
                Outcome::Inconclusive(why) => {
                    (format!("(verdict inconclusive (seed {}) \"{why}\")", common.seed), 1)
                }
            };
            emit(&common, line)?;
            Ok(code)
        }
        Command::Learn {
            common,
            decorated,
            realizer,
            formula,
            state,
            max_iters,
            bound,
        } => {
            let sig = load_signature(&common.signature)?;
            let ds = load_goal(&sig, &decorated, &realizer, &formula)?;
            if !ds.context.is_empty() {
                bail!("the learning loop needs a closed realizer (empty context)");
            }
            if !ds.conclusion.is_closed() {
                bail!("the learning loop needs a closed conclusion; substitute its free variables first");
            }
            let s0 = load_state(&sig, &state)?;
            let trace = learn(&sig, &ds.realizer, &s0, max_iters, common.fuel)
                .map_err(|e| anyhow!("{e}"))?;
            let mut content = trace_to_pretty(common.seed, &trace);
            let code = match &trace.terminal {
                Terminal::FixedPoint => {
                    let result = trace.result().expect("fixed point has a result").clone();
                    let bounds = CheckBounds {
                        universal_bound: bound,
                        realizer_budget: 50,
                        fuel: common.fuel,
                    };
                    let final_state = trace.final_state();
                    let checker = Checker::new(&sig, bounds);
                    let verdict = checker.inner_realizes(&result, &ds.conclusion, &final_state)?;
                    if verdict.is_pass() {
                        let report =
                            extract_witness(&sig, &result, &ds.conclusion, &final_state, bounds)
                                .map_err(|e| anyhow!("{e}"))?;
                        content.push_str(&format!("\n; witness report\n{report}"));
                        0
                    } else {
                        content.push_str("\n; fixed point reached but the result fails the checker");
                        1
                    }
                }
                Terminal::BudgetExhausted => {
                    content.push_str("\n; iteration budget exhausted");
                    1
                }
                Terminal::Conflict(_) => {
                    content.push_str("\n; exception conflicts with the state: not a realizer here");
                    1
                }
            };
            emit(&common, content)?;
            Ok(code)
        }
    }
}
