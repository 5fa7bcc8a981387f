//! `afv`: reduce, decide and evaluate sentences over products of local
//! fields, localize reduced forms, and run the verification sweeps.

mod report;

use afv_core::boolean_engine::Truth;
use afv_core::fv_transform::{self, check_localization, decide_sentence, eval_reduced_with, fv_reduce, localize, run_corpus, Evaluation, FvError, ReducedForm, Structure};
use afv_core::hyperfields::{check_hypergroup_axioms, HyperCtx, DEFAULT_MARGIN, DEFAULT_THETA_L};
use afv_core::local_fields::SearchConfig;
use afv_core::logic_core::{parse_formula, Formula, Signature};
use afv_core::par::Exec;
use afv_core::primes::Prime;
use afv_core::residue_interp::check_ring_iso;
use afv_core::restricted_products::{BoolValueConfig, FiniteAdele};
use afv_core::sweeps::{check_hyper_add_sampling, check_theta_kras, check_tplus_projection};
use afv_core::value_monoid::{check_bbeta, check_monoid_axioms, check_stalk_lemma, Version};
use clap::{Parser, Subcommand, ValueEnum};
use report::{Block, Format, Report};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_TRUE: u8 = 0;
const EXIT_FALSE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_INDETERMINATE: u8 = 3;
const EXIT_UNSUPPORTED: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "afv", version, about = "Feferman-Vaught reduction and checks over finite adeles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "text")]
    format: Format,
    /// Run sweeps on one thread.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum StructureArg {
    Product,
    Adeles,
}

impl From<StructureArg> for Structure {
    fn from(s: StructureArg) -> Structure {
        match s {
            StructureArg::Product => Structure::Product,
            StructureArg::Adeles => Structure::Adeles,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Suite {
    Hyperaxioms,
    ThetaKras,
    ResidueIso,
    StalkLemma,
    Bbeta,
    FvCorpus,
    HyperSampling,
    Tplus,
    MonoidAxioms,
    Localize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the Boolean formula and the numbered local formulas.
    Reduce {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "adeles")]
        structure: StructureArg,
    },
    /// Decide a sentence; exit 0 true, 1 false, 3 indeterminate.
    Decide {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "adeles")]
        structure: StructureArg,
    },
    /// Evaluate a formula at adele arguments given as JSON.
    Eval {
        file: PathBuf,
        args: PathBuf,
        #[arg(long, value_enum, default_value = "adeles")]
        structure: StructureArg,
        /// Primes up to this bound are inspected for frontier densities.
        #[arg(long, default_value_t = 10_000)]
        bound: u64,
    },
    /// Localize a reduced form at a prime, with fixed adele parameters.
    Localize {
        file: PathBuf,
        #[arg(long)]
        p: u64,
        /// JSON object of parameter adeles.
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Run a verification sweep; exit 0 iff every check passes.
    Check {
        #[arg(value_enum)]
        suite: Suite,
        #[arg(long)]
        p: Option<u64>,
        #[arg(long)]
        level: Option<u32>,
        #[arg(long)]
        gamma_bound: Option<i64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Suite-specific bound: largest prime for bbeta, sample height otherwise.
        #[arg(long)]
        bound: Option<u64>,
        /// Exponent of the power clause in the valuation definition.
        #[arg(long, default_value_t = DEFAULT_THETA_L)]
        l: u32,
    },
}

struct Failure {
    code: u8,
    message: String,
}

fn input_error(message: impl ToString) -> Failure {
    Failure { code: EXIT_INPUT, message: message.to_string() }
}

fn fv_failure(e: FvError) -> Failure {
    let code = match e {
        FvError::NotClosed(_) | FvError::MissingArgument(_) => EXIT_INPUT,
        _ => EXIT_UNSUPPORTED,
    };
    Failure { code, message: e.to_string() }
}

fn read_formula(path: &Path) -> Result<Formula, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    // lines starting with ';' are comments
    let body: String = text.lines().filter(|l| !l.trim_start().starts_with(';')).collect::<Vec<_>>().join("\n");
    if body.trim().is_empty() {
        return Err(input_error(format!("{}: empty input", path.display())));
    }
    parse_formula(&body, &Signature::ring()).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn read_adeles(path: &Path) -> Result<BTreeMap<String, FiniteAdele>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    let obj = v.as_object().ok_or_else(|| input_error(format!("{}: expected a JSON object of adeles", path.display())))?;
    obj.iter().map(|(k, a)| FiniteAdele::from_json(a).map(|a| (k.clone(), a)).map_err(|e| input_error(format!("{k}: {e}")))).collect()
}

fn truth_code(t: Truth) -> u8 {
    match t {
        Truth::True => EXIT_TRUE,
        Truth::False => EXIT_FALSE,
        Truth::Indeterminate => EXIT_INDETERMINATE,
    }
}

fn truth_name(t: Truth) -> &'static str {
    match t {
        Truth::True => "true",
        Truth::False => "false",
        Truth::Indeterminate => "indeterminate",
    }
}

fn reduced_block(r: &ReducedForm) -> Block {
    let mut b = Block::new("reduced").field("locals", r.locals.len()).note("theta", &r.theta);
    for (i, l) in r.locals.iter().enumerate() {
        b = b.note(&format!("local.{i}"), l);
    }
    b
}

fn value_blocks(report: &mut Report, ev: &Evaluation) {
    for (i, v) in ev.values.iter().enumerate() {
        let mut b = Block::new("value").field("slot", i);
        b = match v {
            None => b.field("set", "undecided").note("requires", "a classification of this local"),
            Some(s) => {
                b = b.field("set", s);
                if let Some(d) = s.density() {
                    b = b.field("members", d.members).field("checked", d.checked).field("bound", d.bound).field("density", format!("{:.4}", d.ratio()));
                }
                if !s.is_classified() && ev.truth == Truth::Indeterminate {
                    b = b.note("requires", "declare this set finite or cofinite to decide");
                }
                b
            }
        };
        report.push(b);
    }
}

fn margin() -> Result<i64, Failure> {
    match std::env::var("AFV_MARGIN") {
        Err(_) => Ok(DEFAULT_MARGIN),
        Ok(s) => s.parse::<i64>().ok().filter(|m| *m >= 0).ok_or_else(|| input_error(format!("AFV_MARGIN must be a nonnegative integer, got `{s}`"))),
    }
}

fn prime(p: u64) -> Result<Prime, Failure> {
    Prime::new(p).map_err(|_| input_error(format!("{p} is not prime")))
}

fn cells(p: Option<u64>, level: Option<u32>, primes: &[u64], levels: &[u32]) -> Result<Vec<HyperCtx>, Failure> {
    let ps: Vec<u64> = p.map_or_else(|| primes.to_vec(), |p| vec![p]);
    let ls: Vec<u32> = level.map_or_else(|| levels.to_vec(), |l| vec![l]);
    let m = margin()?;
    let mut out = Vec::new();
    for &p in &ps {
        for &l in &ls {
            out.push(HyperCtx::new(prime(p)?, l).map_err(input_error)?.with_margin(m));
        }
    }
    Ok(out)
}

fn positive<T: PartialOrd + Default + std::fmt::Display>(name: &str, v: T) -> Result<T, Failure> {
    if v > T::default() { Ok(v) } else { Err(input_error(format!("--{name} must be positive, got {v}"))) }
}

fn status(pass: bool) -> &'static str {
    if pass { "pass" } else { "FAIL" }
}

struct CheckArgs {
    suite: Suite,
    p: Option<u64>,
    level: Option<u32>,
    gamma_bound: Option<i64>,
    samples: Option<usize>,
    seed: u64,
    bound: Option<u64>,
    l: u32,
}

fn run_check(a: CheckArgs, exec: Exec, report: &mut Report) -> Result<bool, Failure> {
    let samples = a.samples.map(|s| positive("samples", s)).transpose()?;
    let gamma_bound = a.gamma_bound.map(|g| positive("gamma-bound", g)).transpose()?;
    let bound = a.bound.map(|b| positive("bound", b)).transpose()?;
    let mut all = true;
    match a.suite {
        Suite::Hyperaxioms => {
            let g = gamma_bound.unwrap_or(4);
            let n = samples.unwrap_or(1000);
            for ctx in cells(a.p, a.level, &[2, 3, 5], &[1, 2])? {
                let r = check_hypergroup_axioms(&ctx, g, n, a.seed, exec);
                all &= r.passed();
                let mut b = Block::new("cell").field("p", r.p).field("level", r.level).field("gamma_bound", g).field("samples", n).field("seed", a.seed).field("status", status(r.passed()));
                for c in &r.checks {
                    b = b.note(&c.name.replace(' ', "_"), format!("{} cases={}", c.counterexample.as_ref().map_or("pass".to_string(), |ce| format!("FAIL counterexample {ce}")), c.checked));
                }
                report.push(b);
            }
        }
        Suite::ThetaKras => {
            let g = gamma_bound.unwrap_or(6);
            for ctx in cells(a.p, a.level, &[2, 3, 5, 7], &[1, 2, 3])? {
                let r = check_theta_kras(&ctx, g, a.l, exec);
                all &= r.passed();
                report.push(
                    Block::new("cell")
                        .field("p", r.p)
                        .field("level", r.level)
                        .field("gamma_bound", g)
                        .field("l", r.l)
                        .field("margin", ctx.margin)
                        .field("checked", r.checked)
                        .field("failures", r.failures)
                        .field("status", status(r.passed()))
                        .notes("counterexample", &r.counterexamples),
                );
            }
        }
        Suite::Tplus => {
            let n = samples.unwrap_or(500);
            let h = bound.unwrap_or(1000) as i64;
            for ctx in cells(a.p, a.level, &[2, 3, 5], &[1, 2])? {
                let r = check_tplus_projection(&ctx, n, h, a.seed, exec);
                all &= r.passed();
                report.push(
                    Block::new("cell")
                        .field("p", r.p)
                        .field("level", r.level)
                        .field("samples", n)
                        .field("height", h)
                        .field("seed", a.seed)
                        .field("image_failures", r.image_failures)
                        .field("lift_failures", r.lift_failures)
                        .field("status", status(r.passed()))
                        .notes("counterexample", &r.counterexamples),
                );
            }
        }
        Suite::HyperSampling => {
            let g = gamma_bound.unwrap_or(2);
            let n = samples.unwrap_or(200);
            let h = bound.unwrap_or(1000) as i64;
            for ctx in cells(a.p, a.level, &[2, 3, 5], &[1, 2])? {
                let r = check_hyper_add_sampling(&ctx, g, n, 50 * n, h.max(ctx.modulus() as i64), a.seed, exec);
                all &= r.passed();
                report.push(
                    Block::new("cell")
                        .field("p", r.p)
                        .field("level", r.level)
                        .field("gamma_bound", g)
                        .field("min_samples", n)
                        .field("seed", a.seed)
                        .field("pairs", r.pairs)
                        .field("discrepancies", r.discrepancies)
                        .field("status", status(r.passed()))
                        .notes("counterexample", &r.counterexamples),
                );
            }
        }
        Suite::ResidueIso => {
            let g = gamma_bound.unwrap_or(4);
            for ctx in cells(a.p, a.level, &[2, 3, 5], &[1, 2, 3])? {
                let r = check_ring_iso(&ctx, g, exec);
                all &= r.passed();
                report.push(
                    Block::new("cell")
                        .field("p", r.p)
                        .field("level", r.level)
                        .field("gamma_bound", g)
                        .field("classes", r.classes_checked)
                        .field("eclasses", r.eclasses)
                        .field("status", status(r.passed()))
                        .notes("counterexample", &r.failures),
                );
            }
        }
        Suite::StalkLemma => {
            let n = samples.unwrap_or(1000);
            for v in Version::ALL {
                let r = check_stalk_lemma(v, n, a.seed, exec);
                all &= r.passed();
                report.push(
                    Block::new("version")
                        .field("version", v.name())
                        .field("samples", n)
                        .field("seed", a.seed)
                        .field("in_stalk", r.in_stalk)
                        .field("stalk_failures", r.stalk_failures.len())
                        .field("equiv_failures", r.equiv_failures.len())
                        .field("status", status(r.passed()))
                        .notes("counterexample", r.stalk_failures.iter().chain(&r.equiv_failures).take(10)),
                );
            }
        }
        Suite::MonoidAxioms => {
            let n = samples.unwrap_or(1000);
            for v in Version::ALL {
                let r = check_monoid_axioms(v, n, a.seed, exec);
                all &= r.passed();
                let mut b = Block::new("version").field("version", v.name()).field("samples", n).field("seed", a.seed).field("status", status(r.passed()));
                for (name, ce) in &r.checks {
                    b = b.note(&name.replace(' ', "_"), ce.as_ref().map_or("pass".to_string(), |c| format!("FAIL counterexample {c}")));
                }
                report.push(b);
            }
        }
        Suite::Bbeta => {
            let top = bound.unwrap_or(7);
            let primes: Vec<u64> = (2..=top).filter(|&q| Prime::new(q).is_ok()).collect();
            if primes.len() > 6 {
                return Err(input_error("bbeta is exhaustive; use --bound of at most 13"));
            }
            let r = check_bbeta(&primes).map_err(input_error)?;
            all &= r.passed();
            let mut b = Block::new("bbeta").field("primes", format!("{:?}", r.primes)).field("elements", r.elements).field("status", status(r.passed()));
            for (name, n, ce) in &r.checks {
                b = b.note(&name.replace(' ', "_"), format!("{} cases={n}", ce.as_ref().map_or("pass".to_string(), |c| format!("FAIL counterexample {c}"))));
            }
            report.push(b);
        }
        Suite::FvCorpus => {
            let r = run_corpus(&SearchConfig::default(), exec);
            all &= r.passed();
            for row in &r.rows {
                let got = match &row.got {
                    Ok(t) => truth_name(*t).to_string(),
                    Err(e) => format!("error({e})"),
                };
                let search = match &row.search {
                    Some(fv_transform::SearchOutcome::Decided { truth, .. }) => truth.to_string(),
                    Some(fv_transform::SearchOutcome::Inconclusive { .. }) => "inconclusive".to_string(),
                    None => "n/a".to_string(),
                };
                report.push(
                    Block::new("sentence")
                        .field("name", row.entry.name)
                        .field("structure", row.entry.structure.name())
                        .field("expected", row.entry.expected)
                        .field("got", got)
                        .field("search", search)
                        .field("status", status(row.correct() && row.search_consistent()))
                        .note("text", row.entry.text),
                );
            }
            report.push(Block::new("summary").field("correct", r.correct()).field("total", r.rows.len()));
        }
        Suite::Localize => {
            let n = samples.unwrap_or(100);
            let r = check_localization(n, a.seed, &SearchConfig::default(), exec).map_err(fv_failure)?;
            all &= r.passed();
            for row in &r.rows {
                report.push(
                    Block::new("form")
                        .field("points", row.points)
                        .field("seed", a.seed)
                        .field("disagreements", row.disagreements)
                        .field("undecided", row.undecided)
                        .field("status", status(row.disagreements == 0 && row.undecided == 0))
                        .note("text", &row.form)
                        .notes("counterexample", &row.counterexamples),
                );
            }
        }
    }
    report.push(Block::new("result").field("seed", a.seed).field("status", status(all)));
    Ok(all)
}

fn run(cli: Cli, report: &mut Report) -> Result<u8, Failure> {
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    let search = SearchConfig::default();
    match cli.command {
        Command::Reduce { file, structure } => {
            let phi = read_formula(&file)?;
            let guard = Structure::from(structure).guard();
            let r = fv_transform::fv_reduce_with(&phi, guard.as_ref(), &fv_transform::ReduceConfig::default()).map_err(fv_failure)?;
            report.push(reduced_block(&r));
            Ok(EXIT_TRUE)
        }
        Command::Decide { file, structure } => {
            let phi = read_formula(&file)?;
            let (r, ev) = decide_sentence(&phi, structure.into(), &search).map_err(fv_failure)?;
            report.push(reduced_block(&r));
            value_blocks(report, &ev);
            report.push(Block::new("result").field("structure", Structure::from(structure).name()).field("truth", truth_name(ev.truth)));
            Ok(truth_code(ev.truth))
        }
        Command::Eval { file, args, structure, bound } => {
            let phi = read_formula(&file)?;
            let args = read_adeles(&args)?;
            let guard = Structure::from(structure).guard();
            let r = fv_transform::fv_reduce_with(&phi, guard.as_ref(), &fv_transform::ReduceConfig { fold: Some(search.clone()), ..Default::default() }).map_err(fv_failure)?;
            let cfg = BoolValueConfig { search, frontier_bound: positive("bound", bound)? };
            let ev = eval_reduced_with(&r, &args, &cfg).map_err(fv_failure)?;
            report.push(reduced_block(&r));
            value_blocks(report, &ev);
            report.push(Block::new("result").field("truth", truth_name(ev.truth)));
            Ok(truth_code(ev.truth))
        }
        Command::Localize { file, p, params } => {
            let phi = read_formula(&file)?;
            let params = match params {
                Some(path) => read_adeles(&path)?,
                None => BTreeMap::new(),
            };
            let r = fv_reduce(&phi, None).map_err(fv_failure)?;
            let l = localize(&r, prime(p)?, &params, &search).map_err(fv_failure)?;
            report.push(reduced_block(&r));
            let constant = l.constant().map_or("no".to_string(), |c| c.to_string());
            report.push(Block::new("localized").field("p", p).field("vars", l.vars.join(",")).field("constant", constant).note("formula", &l.formula));
            Ok(EXIT_TRUE)
        }
        Command::Check { suite, p, level, gamma_bound, samples, seed, bound, l } => {
            let pass = run_check(CheckArgs { suite, p, level, gamma_bound, samples, seed, bound, l }, exec, report)?;
            Ok(if pass { EXIT_TRUE } else { EXIT_FALSE })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_TRUE };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let format = cli.format;
    let mut report = Report::default();
    let code = match run(cli, &mut report) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    };
    print!("{}", report.render(format));
    ExitCode::from(code)
}
