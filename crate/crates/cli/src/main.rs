use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use glue_core::glue::{parse_formula, FormulaError};
use glue_core::lexicon::{parse_lexicon, premises, Lexicon, LexiconError};
use glue_core::prover::{check_theorem, enumerate_readings, render_trace, ProverError, Reading, SearchBudget};
use glue_core::structures::{FStructure, Slot, StructureError};
use glue_core::term::{parse_type, print_term, PrintOptions};

#[derive(Parser)]
#[command(name = "glue", version, about = "Derive sentence meanings from f-structures by linear logic proof search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate the readings of an f-structure
    Readings(ReadingsArgs),
    /// Check whether a glue formula is a theorem
    Prove(ProveArgs),
}

#[derive(Args)]
struct LexiconArgs {
    /// Lexicon file; the built-in intensional lexicon by default
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Use the built-in extensional lexicon
    #[arg(long, conflicts_with = "lexicon")]
    extensional: bool,
}

#[derive(Args)]
struct BudgetArgs {
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    max_steps: u64,
    #[arg(long, default_value_t = 40, value_parser = clap::value_parser!(u64).range(1..))]
    max_depth: u64,
}

impl BudgetArgs {
    fn budget(&self) -> SearchBudget {
        SearchBudget { max_steps: self.max_steps, max_depth: self.max_depth as usize }
    }
}

#[derive(Args)]
struct ReadingsArgs {
    #[arg(long)]
    fstructure: PathBuf,
    #[command(flatten)]
    lexicon: LexiconArgs,
    /// Label of the f-structure whose meaning is derived; the root by default
    #[arg(long)]
    goal: Option<String>,
    #[arg(long, default_value = "t")]
    goal_type: String,
    /// Print a proof tree under each reading
    #[arg(long)]
    trace: bool,
    #[arg(long)]
    json: bool,
    /// Parenthesize every compound subterm
    #[arg(long)]
    explicit_parens: bool,
    #[command(flatten)]
    budget: BudgetArgs,
}

#[derive(Args)]
struct ProveArgs {
    /// A file holding the formula, or the formula itself
    #[arg(long)]
    formula: String,
    #[command(flatten)]
    lexicon: LexiconArgs,
    #[arg(long)]
    trace: bool,
    #[command(flatten)]
    budget: BudgetArgs,
}

const NO_READINGS: u8 = 2;
const EXHAUSTED: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Readings(args) => run_readings(args),
        Command::Prove(args) => run_prove(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn located(path: &Path, line: Option<usize>, e: impl std::fmt::Display) -> anyhow::Error {
    match line {
        Some(l) => anyhow!("{}:{l}: {e}", path.display()),
        None => anyhow!("{}: {e}", path.display()),
    }
}

fn load_lexicon(args: &LexiconArgs) -> Result<Lexicon> {
    match &args.lexicon {
        Some(path) => parse_lexicon(&read(path)?).map_err(|e| match e {
            LexiconError::Syntax { line, message } => located(path, Some(line), message),
            e => located(path, None, e),
        }),
        None if args.extensional => Ok(Lexicon::extensional()),
        None => Ok(Lexicon::standard()),
    }
}

fn run_readings(args: &ReadingsArgs) -> Result<u8> {
    let lexicon = load_lexicon(&args.lexicon)?;
    let path = &args.fstructure;
    let fs = FStructure::parse(&read(path)?).map_err(|e| match e {
        StructureError::Syntax { line, message } => located(path, Some(line), message),
        e => located(path, None, e),
    })?;
    let prem = premises(&fs, &lexicon).map_err(|e| located(path, None, e))?;
    let node = match &args.goal {
        Some(label) => fs.lookup(label).ok_or_else(|| anyhow!("no f-structure labelled `{label}`"))?,
        None => fs.root(),
    };
    let goal = fs.sigma(node, Slot::Root);
    let ty = parse_type(&args.goal_type).map_err(|e| anyhow!("--goal-type: {e}"))?;
    let formulas: Vec<_> = prem.iter().map(|p| p.formula.clone()).collect();

    let budget = args.budget.budget();
    let (mut readings, steps, exhausted) = match enumerate_readings(&formulas, &goal, &ty, budget) {
        Ok(en) => (en.readings, en.steps, false),
        Err(ProverError::BudgetExhausted { steps, partial }) => (partial, steps, true),
        Err(e) => return Err(e.into()),
    };
    let opts = PrintOptions { explicit_parens: args.explicit_parens };
    let show = |r: &Reading| print_term(&r.term, opts);
    readings.sort_by_cached_key(show);

    if args.json {
        let rs: Vec<_> = readings
            .iter()
            .map(|r| {
                let mut o = json!({ "term": show(r) });
                if args.trace {
                    o["trace"] = json!(render_trace(&r.derivation));
                }
                o
            })
            .collect();
        let ps: Vec<_> = prem
            .iter()
            .map(|p| json!({ "word": p.word, "label": &*p.label, "formula": p.formula.to_string() }))
            .collect();
        let doc = json!({
            "goal": goal.to_string(),
            "goal_type": ty.to_string(),
            "readings": rs,
            "premises": ps,
            "budget": {
                "steps": steps,
                "max_steps": budget.max_steps,
                "max_depth": budget.max_depth,
                "exhausted": exhausted,
            },
        });
        println!("{}", serde_json::to_string_pretty(&doc)?);
    } else {
        for r in &readings {
            println!("{}", show(r));
            if args.trace {
                for line in render_trace(&r.derivation).lines() {
                    println!("  {line}");
                }
                println!();
            }
        }
        if exhausted {
            println!("readings: {} (partial)", readings.len());
        } else {
            println!("readings: {}", readings.len());
        }
    }
    if exhausted {
        eprintln!("search budget exhausted after {steps} steps; results are partial");
        return Ok(EXHAUSTED);
    }
    Ok(if readings.is_empty() { NO_READINGS } else { 0 })
}

fn run_prove(args: &ProveArgs) -> Result<u8> {
    let lexicon = load_lexicon(&args.lexicon)?;
    let as_path = Path::new(&args.formula);
    let (src, origin) = if as_path.is_file() {
        (read(as_path)?, Some(as_path))
    } else {
        (args.formula.clone(), None)
    };
    let formula = parse_formula(&src, &lexicon.constants).map_err(|e| {
        let line = match &e {
            FormulaError::Syntax(s) => Some(s.line),
            _ => None,
        };
        match origin {
            Some(p) => located(p, line, e),
            None => anyhow!("--formula: {e}"),
        }
    })?;
    if let Some(v) = formula.free_vars().into_iter().next() {
        bail!("formula is not closed: `{v}` is free");
    }
    match check_theorem(&formula, args.budget.budget()) {
        Ok(Some(d)) => {
            println!("provable");
            if args.trace {
                print!("{}", render_trace(&d));
            }
            Ok(0)
        }
        Ok(None) => {
            println!("not provable");
            Ok(NO_READINGS)
        }
        Err(ProverError::BudgetExhausted { steps, .. }) => {
            eprintln!("search budget exhausted after {steps} steps");
            Ok(EXHAUSTED)
        }
        Err(e) => Err(e.into()),
    }
}
