//! `costlam`: batch driver for the labelled compilation chain, its checkers and the test harness.

mod report;

use clap::{Args, Parser, Subcommand, ValueEnum};
use costlam_core::cost::{certify_cost, check_precise, check_sound, costof_table, emit_rtl, CertifyReport, CostMonoid, Verdict};
use costlam_core::parse::{parse_ctx, parse_cps_mode, parse_hoist, parse_term, parse_vn_mode, Mode, ParseError};
use costlam_core::regions::{
    effect_check, parse_region_ctx, parse_region_program, region_enrich, run_region, RegionStatus,
};
use costlam_core::semantics::{run, Fuel, Lang, Status, DEFAULT_FUEL};
use costlam_core::source::Term;
use costlam_core::testgen::{gen_case, run_case, Case, CaseResult, GenConfig, Outcome, Property};
use costlam_core::transform::{compile_with, label_init, well_labelled, CompileOptions, Compiled};
use costlam_core::typing::{check_type_preservation, typecheck_source, TypeCtx};
use costlam_core::{BigCost, Cost};
use report::{CheckRecord, CostEntry, PipelineReport, TraceReport};
use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

const EXIT_PASS: u8 = 0;
const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INCONCLUSIVE: u8 = 3;

#[derive(Parser)]
#[command(name = "costlam", version, about = "Labelled compilation chain with cost certification")]
struct Cli {
    /// Record wall-clock time in the structured output.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Input {
    /// Program file; standard input when omitted or `-`.
    file: Option<PathBuf>,
    /// Typing context of the free variables, e.g. `x: t, f: t -> u`.
    #[arg(long, default_value = "")]
    ctx: String,
}

#[derive(Subcommand)]
enum Command {
    /// Print the intermediate terms of the chain.
    Compile {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value = "all")]
        stage: Stage,
        /// Label the input with the initial labelling before compiling.
        #[arg(long)]
        label: bool,
        /// Carry type annotations through every stage.
        #[arg(long)]
        typed: bool,
        /// Give `halt` its unpacked type in closure conversion.
        #[arg(long)]
        opt_halt: bool,
        /// Print the region-enriched program (implies `--typed --opt-halt`).
        #[arg(long)]
        regions: bool,
    },
    /// Evaluate a program and print its label trace and final status.
    Run {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value = "source")]
        calculus: Calculus,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: usize,
        /// Print the label trace.
        #[arg(long)]
        trace: bool,
    },
    /// Print the label cost table derived from the compiled code.
    Cost {
        #[command(flatten)]
        input: Input,
        /// Also print the emitted RTL.
        #[arg(long)]
        rtl: bool,
    },
    /// Compare instrumented, source-trace and compiled-trace costs.
    Certify {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: usize,
        /// Use unbounded integer costs.
        #[arg(long)]
        big: bool,
    },
    /// Check a property on one program, or on a generated corpus when no file is given.
    Check(CheckArgs),
    /// Emit generated typed terms, one per line.
    Gen {
        #[arg(long, env = "COSTLAM_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 30)]
        size: usize,
        #[arg(long, default_value_t = 10)]
        count: u64,
    },
}

#[derive(Args)]
struct CheckArgs {
    /// Program to check; a generated corpus is checked when omitted.
    file: Option<PathBuf>,
    #[arg(long, value_enum, required_unless_present_any = ["types", "regions"])]
    property: Option<PropertyArg>,
    /// Same as `--property types`.
    #[arg(long, conflicts_with_all = ["property", "regions"])]
    types: bool,
    /// Same as `--property regions`; a file is read as a region program.
    #[arg(long, conflicts_with = "property")]
    regions: bool,
    #[arg(long, default_value = "")]
    ctx: String,
    #[arg(long, env = "COSTLAM_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    count: u64,
    /// Largest generated term size.
    #[arg(long, default_value_t = 30)]
    size: usize,
    /// Worker threads; all available cores when omitted.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_FUEL)]
    fuel: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Stage {
    Label,
    Erase,
    Cps,
    Vn,
    Cc,
    Hoist,
    Rtl,
    All,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Calculus {
    Source,
    Cps,
    Vn,
    Hoist,
    Region,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PropertyArg {
    Commutation,
    Simulation,
    Types,
    Regions,
    Cost,
    Structure,
}

impl From<PropertyArg> for Property {
    fn from(p: PropertyArg) -> Property {
        match p {
            PropertyArg::Commutation => Property::Commutation,
            PropertyArg::Simulation => Property::Simulation,
            PropertyArg::Types => Property::Types,
            PropertyArg::Regions => Property::Regions,
            PropertyArg::Cost => Property::Cost,
            PropertyArg::Structure => Property::Structure,
        }
    }
}

/// A failure that ends the command before any verdict.
struct Abort {
    code: u8,
    message: String,
}

impl Abort {
    fn usage(message: impl Into<String>) -> Abort {
        Abort { code: EXIT_USAGE, message: message.into() }
    }

    fn fail(message: impl Into<String>) -> Abort {
        Abort { code: EXIT_FAIL, message: message.into() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let (mut report, code) = match &cli.command {
        Command::Compile { input, stage, label, typed, opt_halt, regions } => {
            execute("compile", |r| cmd_compile(r, input, *stage, *label, *typed, *opt_halt, *regions))
        }
        Command::Run { input, calculus, fuel, trace } => execute("run", |r| cmd_run(r, input, *calculus, Fuel(*fuel), *trace)),
        Command::Cost { input, rtl } => execute("cost", |r| cmd_cost(r, input, *rtl)),
        Command::Certify { input, fuel, big } => execute("certify", |r| cmd_certify(r, input, Fuel(*fuel), *big)),
        Command::Check(args) => execute("check", |r| cmd_check(r, args)),
        Command::Gen { seed, size, count } => execute("gen", |r| cmd_gen(r, *seed, *size, *count)),
    };
    if cli.timing {
        report.timing_ms = Some(start.elapsed().as_millis());
    }
    eprintln!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    ExitCode::from(code)
}

fn execute(name: &str, f: impl FnOnce(&mut PipelineReport) -> Result<u8, Abort>) -> (PipelineReport, u8) {
    let mut report = PipelineReport::new(name);
    let code = match f(&mut report) {
        Ok(code) => code,
        Err(a) => {
            println!("error: {}", a.message);
            report.error = Some(a.message);
            a.code
        }
    };
    (report, code)
}

fn read_input(file: Option<&PathBuf>) -> Result<(String, String), Abort> {
    match file {
        Some(p) if p.as_os_str() != "-" => std::fs::read_to_string(p)
            .map(|s| (p.display().to_string(), s))
            .map_err(|e| Abort::usage(format!("cannot read {}: {e}", p.display()))),
        _ => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s).map_err(|e| Abort::usage(format!("cannot read standard input: {e}")))?;
            Ok(("<stdin>".to_string(), s))
        }
    }
}

fn parse_error(origin: &str, src: &str, e: ParseError) -> Abort {
    let line = src.lines().nth(e.line.saturating_sub(1)).unwrap_or("");
    Abort::usage(format!("{origin}:{}:{}: {}\n  {line}\n  {}^", e.line, e.col, e.msg, " ".repeat(e.col.saturating_sub(1))))
}

fn source_term(input: &Input) -> Result<(Term, TypeCtx), Abort> {
    let (origin, src) = read_input(input.file.as_ref())?;
    let m = parse_term(&src).map_err(|e| parse_error(&origin, &src, e))?;
    let ctx = parse_ctx(&input.ctx).map_err(|e| parse_error("--ctx", &input.ctx, e))?;
    Ok((m, TypeCtx::from_pairs(ctx)))
}

fn verdict(outcome: Outcome) -> u8 {
    match outcome {
        Outcome::Pass => EXIT_PASS,
        Outcome::Fail => EXIT_FAIL,
        Outcome::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

fn cmd_compile(r: &mut PipelineReport, input: &Input, stage: Stage, label: bool, typed: bool, opt_halt: bool, regions: bool) -> Result<u8, Abort> {
    let (m, ctx) = source_term(input)?;
    let m = if label { label_init(&m).map_err(|e| Abort::usage(e.to_string()))? } else { m };
    if !well_labelled(&m).is_w0() {
        println!("warning: the input is not well-labelled");
    }
    let emit = |r: &mut PipelineReport, name: &str, text: String| {
        if stage == Stage::All {
            println!("== {name} ==");
        }
        println!("{text}");
        r.stage(name, text);
    };
    if matches!(stage, Stage::Label | Stage::All) {
        let lm = if label { m.clone() } else { label_init(&m).unwrap_or_else(|_| m.clone()) };
        emit(r, "label", lm.to_string());
    }
    if matches!(stage, Stage::Erase | Stage::All) {
        emit(r, "erase", m.erase().to_string());
    }
    if stage == Stage::Label || stage == Stage::Erase {
        return Ok(EXIT_PASS);
    }
    let options = CompileOptions { typed: typed || regions, opt_halt: opt_halt || regions };
    let out: Compiled = compile_with(&m, options, Some(&ctx)).map_err(|e| Abort::fail(format!("{e}\nterm: {m}")))?;
    if matches!(stage, Stage::Cps | Stage::All) {
        emit(r, "cps", out.cps.to_string());
    }
    if matches!(stage, Stage::Vn | Stage::All) {
        emit(r, "vn", out.vn.to_string());
    }
    if matches!(stage, Stage::Cc | Stage::All) {
        emit(r, "cc", out.cc.to_string());
    }
    if matches!(stage, Stage::Hoist | Stage::All) {
        emit(r, "hoist", out.program.to_string());
    }
    if matches!(stage, Stage::Rtl | Stage::All) {
        let rtl = emit_rtl(&out.program).map_err(|e| Abort::fail(format!("{e}\nprogram: {}", out.program)))?;
        emit(r, "rtl", rtl.to_string().trim_end().to_string());
    }
    if regions {
        let rp = region_enrich(&out.program).map_err(|e| Abort::fail(format!("{e}\nprogram: {}", out.program)))?;
        emit(r, "regions", rp.to_string());
    }
    r.outcome = Some(Outcome::Pass);
    Ok(EXIT_PASS)
}

fn record_run(r: &mut PipelineReport, calculus: &str, labels: Vec<String>, steps: usize, status: String, result: String, trace: bool) {
    if trace {
        println!("trace: {}", labels.join(" "));
    }
    println!("status: {status}");
    println!("result: {result}");
    r.traces.push(TraceReport { calculus: calculus.to_string(), labels, steps, status, result });
}

fn run_lang<T: Lang>(r: &mut PipelineReport, calculus: &str, t: &T, fuel: Fuel, trace: bool) -> u8 {
    let out = run(t, fuel);
    let labels = out.labels().iter().map(|l| l.to_string()).collect();
    record_run(r, calculus, labels, out.steps.len(), out.status.to_string(), out.last.to_string(), trace);
    match out.status {
        Status::Value => EXIT_PASS,
        Status::Stuck => EXIT_FAIL,
        Status::Fuel => EXIT_INCONCLUSIVE,
    }
}

fn cmd_run(r: &mut PipelineReport, input: &Input, calculus: Calculus, fuel: Fuel, trace: bool) -> Result<u8, Abort> {
    let (origin, src) = read_input(input.file.as_ref())?;
    let perr = |e| parse_error(&origin, &src, e);
    let code = match calculus {
        Calculus::Source => run_lang(r, "source", &parse_term(&src).map_err(perr)?, fuel, trace),
        Calculus::Cps => run_lang(r, "cps", &parse_cps_mode(&src, Mode::Internal).map_err(perr)?, fuel, trace),
        Calculus::Vn => run_lang(r, "vn", &parse_vn_mode(&src, Mode::Internal).map_err(perr)?, fuel, trace),
        Calculus::Hoist => run_lang(r, "hoist", &parse_hoist(&src).map_err(perr)?.to_term(), fuel, trace),
        Calculus::Region => {
            let p = parse_region_program(&src).map_err(perr)?;
            let out = run_region(&p, fuel);
            let labels = out.labels().iter().map(|l| l.to_string()).collect();
            record_run(r, "region", labels, out.steps.len(), out.status.to_string(), out.last.to_string(), trace);
            match out.status {
                RegionStatus::Value => EXIT_PASS,
                RegionStatus::Fuel => EXIT_INCONCLUSIVE,
                _ => EXIT_FAIL,
            }
        }
    };
    r.outcome = Some(match code {
        EXIT_PASS => Outcome::Pass,
        EXIT_FAIL => Outcome::Fail,
        _ => Outcome::Inconclusive,
    });
    Ok(code)
}

/// The input, labelled unless it already carries labels.
fn labelled_input(input: &Input) -> Result<Term, Abort> {
    let (m, _) = source_term(input)?;
    Ok(label_init(&m).unwrap_or(m))
}

fn cmd_cost(r: &mut PipelineReport, input: &Input, show_rtl: bool) -> Result<u8, Abort> {
    let lm = labelled_input(input)?;
    let out = compile_with(&lm, CompileOptions::default(), None).map_err(|e| Abort::fail(format!("{e}\nterm: {lm}")))?;
    let rtl = emit_rtl(&out.program).map_err(|e| Abort::fail(format!("{e}\nprogram: {}", out.program)))?;
    r.stage("label", lm.to_string());
    r.stage("rtl", rtl.to_string());
    if show_rtl {
        println!("{rtl}");
    }
    let sound = check_sound(&rtl);
    let precise = check_precise(&rtl);
    if let Ok(table) = costof_table::<Cost>(&rtl) {
        for (l, c) in &table.entries {
            println!("{l}\t{c}");
            r.cost_table.push(CostEntry { label: l.to_string(), cost: c.to_string() });
        }
    }
    let flag = |ok: bool| if ok { Outcome::Pass } else { Outcome::Fail };
    println!("SOUND {}", flag(sound.is_ok()));
    println!("PRECISE {}", flag(precise.is_ok()));
    let mut outcome = Outcome::Pass;
    for (name, res) in [("sound", sound.map_err(|e| e.to_string())), ("precise", precise.map_err(|e| e.to_string()))] {
        let o = flag(res.is_ok());
        if o == Outcome::Fail {
            println!("{name}: {}", res.as_ref().unwrap_err());
            outcome = Outcome::Fail;
        }
        r.checks.push(CheckRecord { name: name.into(), outcome: o, case: None, term: Some(lm.to_string()), detail: res.err(), shrunk: None });
    }
    r.outcome = Some(outcome);
    Ok(verdict(outcome))
}

fn certify_with<M: CostMonoid>(r: &mut PipelineReport, m: &Term, fuel: Fuel) -> Outcome {
    let rep: CertifyReport<M> = certify_cost(m, fuel);
    let show = |c: &Option<M>| c.as_ref().map_or("-".to_string(), |c| c.to_string());
    println!("labelled: {}", rep.labelled);
    println!("instrumented cost: {}", show(&rep.instrumented_cost));
    println!("source trace cost: {}", show(&rep.source_cost));
    println!("compiled trace cost: {}", show(&rep.compiled_cost));
    if let Some(t) = &rep.table {
        for (l, c) in &t.entries {
            r.cost_table.push(CostEntry { label: l.to_string(), cost: c.to_string() });
        }
    }
    let names = |ls: &Option<Vec<costlam_core::name::Label>>| ls.as_ref().map(|ls| ls.iter().map(|l| l.to_string()).collect::<Vec<_>>());
    if let Some(ls) = names(&rep.source_trace) {
        r.traces.push(TraceReport { calculus: "source".into(), steps: ls.len(), labels: ls, status: String::new(), result: String::new() });
    }
    if let Some(ls) = names(&rep.compiled_trace) {
        r.traces.push(TraceReport { calculus: "hoist".into(), steps: ls.len(), labels: ls, status: String::new(), result: String::new() });
    }
    let outcome = match rep.verdict {
        Verdict::Agree => Outcome::Pass,
        Verdict::Disagree => Outcome::Fail,
        Verdict::Inconclusive => Outcome::Inconclusive,
    };
    println!("{}", match rep.verdict {
        Verdict::Agree => "AGREE",
        Verdict::Disagree => "DISAGREE",
        Verdict::Inconclusive => "INCONCLUSIVE",
    });
    if let Some(n) = &rep.note {
        println!("note: {n}");
    }
    let detail = [("instrumented", show(&rep.instrumented_cost)), ("source", show(&rep.source_cost)), ("compiled", show(&rep.compiled_cost))]
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(" ");
    r.checks.push(CheckRecord { name: "certify".into(), outcome, case: None, term: Some(rep.labelled.clone()), detail: Some(detail), shrunk: None });
    outcome
}

fn cmd_certify(r: &mut PipelineReport, input: &Input, fuel: Fuel, big: bool) -> Result<u8, Abort> {
    let (m, _) = source_term(input)?;
    let outcome = if big { certify_with::<BigCost>(r, &m, fuel) } else { certify_with::<Cost>(r, &m, fuel) };
    r.outcome = Some(outcome);
    Ok(verdict(outcome))
}

fn cmd_gen(r: &mut PipelineReport, seed: u64, size: usize, count: u64) -> Result<u8, Abort> {
    let cfg = GenConfig { seed, max_size: size, ..GenConfig::default() };
    for i in 0..count {
        match gen_case(&cfg, i) {
            Ok(c) => {
                println!("{}", c.term);
                r.stage(&format!("case {i}: {}", c.ty), c.term);
            }
            Err(e) => return Err(Abort::fail(format!("case {i}: {e}"))),
        }
    }
    Ok(EXIT_PASS)
}

fn record_case(r: &mut PipelineReport, p: Property, res: CaseResult) {
    if res.outcome != Outcome::Pass {
        let (check, detail) = res.finding.as_ref().map_or((p.name().to_string(), None), |f| (f.check.clone(), Some(f.detail.clone())));
        println!("case {} {}: {check}", res.index, res.outcome);
        println!("  term: {}", res.term);
        if let Some(d) = &detail {
            for line in d.lines() {
                println!("  | {line}");
            }
        }
        if let Some(s) = &res.shrunk {
            println!("  shrunk: {s}");
        }
        r.checks.push(CheckRecord { name: check, outcome: res.outcome, case: Some(res.index), term: Some(res.term), detail, shrunk: res.shrunk });
    }
}

fn overall(outcomes: impl IntoIterator<Item = Outcome>) -> Outcome {
    outcomes.into_iter().fold(Outcome::Pass, |acc, o| match (acc, o) {
        (Outcome::Fail, _) | (_, Outcome::Fail) => Outcome::Fail,
        (Outcome::Inconclusive, _) | (_, Outcome::Inconclusive) => Outcome::Inconclusive,
        _ => Outcome::Pass,
    })
}

fn cmd_check(r: &mut PipelineReport, args: &CheckArgs) -> Result<u8, Abort> {
    let property: Property = match (args.property, args.types, args.regions) {
        (Some(p), _, _) => p.into(),
        (None, true, _) => Property::Types,
        (None, _, true) => Property::Regions,
        (None, false, false) => return Err(Abort::usage("a property is required")),
    };
    let fuel = Fuel(args.fuel);
    let outcome = match &args.file {
        Some(f) if property == Property::Regions => check_region_file(r, f, &args.ctx)?,
        Some(f) => {
            let input = Input { file: Some(f.clone()), ctx: args.ctx.clone() };
            let (m, ctx) = source_term(&input)?;
            if property == Property::Types {
                print_judgements(r, &ctx, &m)?;
            }
            let ty = typecheck_source(&ctx, &m).ok();
            let case = Case { index: 0, ctx, ty: ty.unwrap_or_else(|| costlam_core::types::Type::var("?")), term: m };
            let res = run_case(property, &case, fuel);
            let o = res.outcome;
            record_case(r, property, res);
            o
        }
        None => check_corpus(r, property, args, fuel)?,
    };
    println!("{property}: {outcome}");
    r.outcome = Some(outcome);
    Ok(verdict(outcome))
}

fn print_judgements(r: &mut PipelineReport, ctx: &TypeCtx, m: &Term) -> Result<(), Abort> {
    for (opt, name) in [(false, "existential halt"), (true, "unpacked halt")] {
        let rep = check_type_preservation(ctx, m, opt).map_err(|e| Abort::fail(format!("{e}\nterm: {m}")))?;
        println!("[{name}]");
        println!("source: {} ⊢ {m} : {}", rep.source_context, rep.source_type);
        for s in &rep.stages {
            match &s.error {
                None => println!("{}: {} ⊢ {}", s.stage, s.context, s.term),
                Some(e) => println!("{}: error: {e}", s.stage),
            }
            r.stage(&format!("{} ({name})", s.stage), format!("{} ⊢ {}", s.context, s.term));
        }
    }
    Ok(())
}

fn check_region_file(r: &mut PipelineReport, f: &PathBuf, ctx_src: &str) -> Result<Outcome, Abort> {
    let (origin, src) = read_input(Some(f))?;
    let p = parse_region_program(&src).map_err(|e| parse_error(&origin, &src, e))?;
    let ctx = parse_region_ctx(ctx_src).map_err(|e| parse_error("--ctx", ctx_src, e))?;
    let (outcome, detail) = match effect_check(&ctx, &p) {
        Ok(e) => {
            println!("{ctx} ⊢ {p} : {e}");
            (Outcome::Pass, format!("effect {e}"))
        }
        Err(e) => {
            println!("rejected: {e}");
            (Outcome::Fail, e.to_string())
        }
    };
    r.checks.push(CheckRecord { name: "effect".into(), outcome, case: None, term: Some(p.to_string()), detail: Some(detail), shrunk: None });
    Ok(outcome)
}

fn check_corpus(r: &mut PipelineReport, property: Property, args: &CheckArgs, fuel: Fuel) -> Result<Outcome, Abort> {
    use rayon::prelude::*;
    let cfg = GenConfig { seed: args.seed, max_size: args.size, ..GenConfig::default() };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = args.jobs {
        if j == 0 {
            return Err(Abort::usage("--jobs must be positive"));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(|e| Abort::usage(e.to_string()))?;
    let started = Instant::now();
    let results: Vec<Result<CaseResult, String>> = pool.install(|| {
        (0..args.count)
            .into_par_iter()
            .map(|i| gen_case(&cfg, i).map(|c| run_case(property, &c, fuel)).map_err(|e| format!("case {i}: {e}")))
            .collect()
    });
    let mut outcomes = Vec::new();
    for res in results {
        match res {
            Ok(c) => {
                outcomes.push(c.outcome);
                record_case(r, property, c);
            }
            Err(e) => {
                println!("{e}");
                outcomes.push(Outcome::Inconclusive);
                r.checks.push(CheckRecord { name: "generate".into(), outcome: Outcome::Inconclusive, case: None, term: None, detail: Some(e), shrunk: None });
            }
        }
    }
    let count = |o| outcomes.iter().filter(|&&x| x == o).count();
    println!(
        "{} cases (seed {}, size <= {}): {} pass, {} fail, {} inconclusive in {:.2}s",
        outcomes.len(),
        args.seed,
        args.size,
        count(Outcome::Pass),
        count(Outcome::Fail),
        count(Outcome::Inconclusive),
        started.elapsed().as_secs_f64()
    );
    Ok(overall(outcomes))
}
