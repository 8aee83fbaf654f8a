//! Command-line front end.

use crate::bits::BitString;
use crate::decompose::{block_decompose, parity_factorize, BlockSpec};
use crate::dim_builder::{run_stage_machine, StageRun};
use crate::dimension::{
    empirical_dim_bound, strategies_from_test, test_exponent, validate_s_test, weak_s_random_check,
    Verdict,
};
use crate::error::{Error, Result};
use crate::int_casino::{diagonalize, replay, DiagOptions, Engine, IntStrategy, Mode};
use crate::parity_casino::{
    build_parity_test, mixture, packing_certificate, BuildOptions, Flavor, TestArray,
};
use crate::program::{BetProgram, Component, Evaluator, StageApprox};
use crate::rational::{fmt_q, parse_q, pow2, Q};
use crate::table::{validate, Kind, ParityTag, SidedTag, StrategyTable};
use crate::verify::{run_suite, SUITES};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(
    name = "paritybet",
    version,
    about = "Exact single-parity betting strategies and their tests"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a strategy table against its declared kind and tags.
    Validate {
        #[arg(short = 'i', long = "in")]
        input: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Split a martingale into parity factors, or decompose a block pair.
    Decompose {
        #[arg(short = 'i', long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = DecomposeMode::Parity)]
        mode: DecomposeMode,
        /// The even-betting table (block mode).
        #[arg(long)]
        n: Option<PathBuf>,
        /// The block bounds (block mode).
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Build the nested 3-of-4 test against a pair of parity mixtures.
    Paritytest {
        #[arg(long, default_value_t = 8)]
        depth: usize,
        #[arg(long, env = "PARITYBET_STAGES", default_value_t = 1000)]
        stages: u64,
        #[arg(long)]
        mixture: PathBuf,
        #[arg(long, default_value = "1")]
        c: String,
        #[arg(long, default_value_t = 16)]
        frontier_cap: usize,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Diagonalize against integer-valued adversaries; writes a JSONL trace.
    Diagonalize {
        #[arg(long, value_enum)]
        engine: EngineArg,
        #[arg(long)]
        adversaries: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Greedy)]
        mode: ModeArg,
        #[arg(long)]
        target: u64,
        #[arg(long)]
        dim0: bool,
        /// Doubling-block rounds appended after the settlements with --dim0.
        #[arg(long, default_value_t = 10)]
        dim0_rounds: usize,
        #[arg(long, default_value_t = 1 << 22)]
        max_bits: usize,
        #[arg(long, default_value_t = 20)]
        probe_depth: usize,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Validate an s-test; optionally list the levels a prefix hits.
    Stest {
        #[arg(long = "validate")]
        test: PathBuf,
        #[arg(long)]
        s: Option<String>,
        #[arg(long)]
        x: Option<PathBuf>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Growth exponents of a strategy along a prefix.
    Dim {
        #[arg(long)]
        strategy: PathBuf,
        #[arg(long)]
        x: PathBuf,
        /// Stage at which to freeze a stage approximation (default: final).
        #[arg(long)]
        stage: Option<u64>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run the dimension-½ stage machine.
    Dimhalf {
        #[arg(long)]
        components: Option<PathBuf>,
        #[arg(long, env = "PARITYBET_STAGES", default_value_t = 1000)]
        stages: u64,
        #[arg(long, default_value_t = 2)]
        nmax: usize,
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Eventful stages as JSONL.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Final prefix as bit text.
        #[arg(long)]
        prefix: Option<PathBuf>,
    },
    /// Run a randomized or exhaustive oracle suite.
    Verify {
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(SUITES))]
        lemma: String,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum DecomposeMode {
    Parity,
    Block,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum EngineArg {
    #[value(name = "N", alias = "n")]
    N,
    #[value(name = "D", alias = "d")]
    D,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Greedy,
    Settle,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            let report = json!({"error": {"code": e.code(), "message": e.to_string()}});
            eprintln!("{report}");
            if e.is_input_error() {
                2
            } else {
                1
            }
        }
    }
}

fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn read_as<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_value(read_json(path)?)?)
}

fn read_bits(path: &Path) -> Result<BitString> {
    let text = fs::read_to_string(path)?;
    text.split_whitespace().collect::<String>().parse()
}

fn emit(out: Option<&Path>, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn writer(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(std::io::BufWriter::new(fs::File::create(p)?)),
        None => Box::new(std::io::BufWriter::new(std::io::stdout())),
    })
}

fn jsonl(w: &mut dyn Write, value: &Value) -> Result<()> {
    serde_json::to_writer(&mut *w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}

/// Strategy files, told apart by their required keys.
enum Strategy {
    Table(StrategyTable),
    Approx(StageApprox),
    Program(BetProgram),
    Test(TestArray),
}

fn load_strategy(path: &Path) -> Result<Strategy> {
    let v = read_json(path)?;
    let has = |k: &str| v.get(k).is_some();
    Ok(if has("values") {
        Strategy::Table(serde_json::from_value(v)?)
    } else if has("components") {
        Strategy::Approx(serde_json::from_value(v)?)
    } else if has("initial") {
        Strategy::Program(serde_json::from_value(v)?)
    } else if has("levels") {
        Strategy::Test(serde_json::from_value(v)?)
    } else {
        return Err(Error::Structure(format!(
            "{} is not a table, stage approximation, program or test array",
            path.display()
        )));
    })
}

fn split_by_parity<T>(items: Vec<T>, parity: impl Fn(&T) -> ParityTag) -> Result<(Vec<T>, Vec<T>)> {
    let mut odd = Vec::new();
    let mut even = Vec::new();
    for (i, it) in items.into_iter().enumerate() {
        match parity(&it) {
            ParityTag::BetsOnOdd => odd.push(it),
            ParityTag::BetsOnEven => even.push(it),
            ParityTag::Unrestricted => {
                return Err(Error::TagMismatch(format!(
                    "item {i} carries no parity tag"
                )))
            }
        }
    }
    Ok((odd, even))
}

fn side(items: Vec<BetProgram>, parity: ParityTag) -> Result<StageApprox> {
    if items.is_empty() {
        Ok(StageApprox::empty(parity))
    } else {
        mixture(&items)
    }
}

/// `{m, n}` stage approximations, or a list of tagged programs that is split
/// into one mixture per parity.
fn load_mixture(path: &Path) -> Result<(StageApprox, StageApprox)> {
    let v = read_json(path)?;
    if v.is_array() {
        let programs: Vec<BetProgram> = serde_json::from_value(v)?;
        let (odd, even) = split_by_parity(programs, |p| p.parity)?;
        Ok((
            side(odd, ParityTag::BetsOnOdd)?,
            side(even, ParityTag::BetsOnEven)?,
        ))
    } else {
        let m = serde_json::from_value(v.get("m").cloned().unwrap_or(Value::Null))?;
        let n = serde_json::from_value(v.get("n").cloned().unwrap_or(Value::Null))?;
        Ok((m, n))
    }
}

fn approx_of(components: Vec<Component>, parity: ParityTag) -> Result<StageApprox> {
    StageApprox::new(Kind::Martingale, parity, SidedTag::Unrestricted, components)
}

/// `{n, t}` stage approximations, a list of components, or a list of tagged
/// programs (program `i` enters at stage `i` with weight `2^{-i-3}`).
fn load_components(path: &Path) -> Result<(StageApprox, StageApprox)> {
    let v = read_json(path)?;
    let Some(items) = v.as_array() else {
        let n = serde_json::from_value(v.get("n").cloned().unwrap_or(Value::Null))?;
        let t = serde_json::from_value(v.get("t").cloned().unwrap_or(Value::Null))?;
        return Ok((n, t));
    };
    let components: Vec<Component> = if items.iter().all(|x| x.get("program").is_some()) {
        serde_json::from_value(v)?
    } else {
        let programs: Vec<BetProgram> = serde_json::from_value(v)?;
        programs
            .into_iter()
            .enumerate()
            .map(|(i, program)| Component {
                stage: i as u64,
                weight: pow2(-(i as i64) - 3),
                program,
            })
            .collect()
    };
    let (odd, even) = split_by_parity(components, |c| c.program.parity)?;
    Ok((
        approx_of(odd, ParityTag::BetsOnOdd)?,
        approx_of(even, ParityTag::BetsOnEven)?,
    ))
}

fn execute(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Validate { input, out } => {
            let t: StrategyTable = read_as(&input)?;
            let d = validate(&t);
            let valid = d.valid();
            emit(out.as_deref(), &json!({"valid": valid, "diagnosis": d}))?;
            Ok(if valid { 0 } else { 1 })
        }
        Command::Decompose {
            input,
            mode,
            n,
            spec,
            out,
        } => {
            let m: StrategyTable = read_as(&input)?;
            match mode {
                DecomposeMode::Parity => {
                    let (e, o) = parity_factorize(&m)?;
                    let initial = m.value(&BitString::empty());
                    emit(
                        out.as_deref(),
                        &json!({"initial": fmt_q(&initial), "e": e, "o": o}),
                    )?;
                }
                DecomposeMode::Block => {
                    let missing = |w: &str| Error::Structure(format!("block mode needs --{w}"));
                    let n: StrategyTable = read_as(&n.ok_or_else(|| missing("n"))?)?;
                    let spec: BlockSpec = read_as(&spec.ok_or_else(|| missing("spec"))?)?;
                    emit(out.as_deref(), &block_decompose(&m, &n, &spec)?)?;
                }
            }
            Ok(0)
        }
        Command::Paritytest {
            depth,
            stages,
            mixture,
            c,
            frontier_cap,
            out,
        } => {
            let (m, n) = load_mixture(&mixture)?;
            let opts = BuildOptions {
                depth,
                stages,
                c: parse_q(&c)?,
                frontier_cap,
            };
            let built = build_parity_test(&m, &n, &opts)?;
            let cert = packing_certificate(&built.test)?;
            let path_values: Vec<String> = (0..=built.path.len() / 2)
                .map(|i| fmt_q(&cert.value(&built.path.prefix(2 * i))))
                .collect();
            emit(
                out.as_deref(),
                &json!({
                    "test": built.test,
                    "path": built.path,
                    "stages": built.stages,
                    "levels": built.levels,
                    "certificate": cert.report(),
                    "certificate_on_path": path_values,
                    "enumerations": built.enumerations,
                }),
            )?;
            Ok(0)
        }
        Command::Diagonalize {
            engine,
            adversaries,
            mode,
            target,
            dim0,
            dim0_rounds,
            max_bits,
            probe_depth,
            out,
        } => {
            let advs: Vec<IntStrategy> = read_as(&adversaries)?;
            let opts = DiagOptions {
                engine: match engine {
                    EngineArg::N => Engine::N,
                    EngineArg::D => Engine::D,
                },
                mode: match mode {
                    ModeArg::Greedy => Mode::Greedy,
                    ModeArg::Settle => Mode::Settle,
                },
                target,
                dim0,
                dim0_rounds,
                max_bits,
                probe_depth,
            };
            let trace = diagonalize(&advs, &opts)?;
            let replay_ok = replay(&trace, &advs).is_ok();
            let mut w = writer(out.as_deref())?;
            jsonl(
                &mut *w,
                &json!({
                    "type": "header",
                    "engine": trace.engine,
                    "mode": trace.mode,
                    "target": trace.target,
                    "dim0": dim0,
                    "adversaries": advs.iter().map(IntStrategy::label).collect::<Vec<_>>(),
                    "initial_adversaries": trace.initial_adversaries.iter().map(fmt_q).collect::<Vec<_>>(),
                }),
            )?;
            for r in &trace.records {
                let mut v = serde_json::to_value(r)?;
                v["type"] = json!("bit");
                jsonl(&mut *w, &v)?;
            }
            for c in &trace.checkpoints {
                let mut v = serde_json::to_value(c)?;
                v["type"] = json!("checkpoint");
                jsonl(&mut *w, &v)?;
            }
            for c in &trace.certificates {
                let mut v = serde_json::to_value(c)?;
                v["type"] = json!("certificate");
                jsonl(&mut *w, &v)?;
            }
            jsonl(
                &mut *w,
                &json!({
                    "type": "summary",
                    "z": trace.z,
                    "bits": trace.z.len(),
                    "final_engine": fmt_q(&trace.final_engine()),
                    "final_adversaries": trace.aggregate().iter().map(fmt_q).collect::<Vec<_>>(),
                    "deviations": trace.deviations(),
                    "concessions": trace.concessions(),
                    "unfavorable_bits": trace.unfavorable_bits(),
                    "replay_ok": replay_ok,
                }),
            )?;
            w.flush()?;
            Ok(if replay_ok { 0 } else { 1 })
        }
        Command::Stest { test, s, x, out } => {
            let t: TestArray = read_as(&test)?;
            let s = match (s, &t.flavor) {
                (Some(s), _) => parse_q(&s)?,
                (None, Flavor::STest { s }) => s.clone(),
                (None, Flavor::Block34) => test_exponent(&t)?,
            };
            let levels = validate_s_test(&t, &s)?;
            let verdict = if levels.iter().all(|l| l.verdict == Verdict::Holds) {
                Verdict::Holds
            } else if levels.iter().any(|l| l.verdict == Verdict::Fails) {
                Verdict::Fails
            } else {
                Verdict::Undecided
            };
            let hits = x
                .as_deref()
                .map(read_bits)
                .transpose()?
                .map(|x| weak_s_random_check(&x, &t));
            emit(
                out.as_deref(),
                &json!({"s": fmt_q(&s), "verdict": verdict, "levels": levels, "hits": hits}),
            )?;
            Ok(if verdict == Verdict::Fails { 1 } else { 0 })
        }
        Command::Dim {
            strategy,
            x,
            stage,
            out,
        } => {
            let x = read_bits(&x)?;
            let report = match load_strategy(&strategy)? {
                Strategy::Table(t) => empirical_dim_bound(&t, &x),
                Strategy::Program(p) => {
                    p.validate()?;
                    empirical_dim_bound(&p, &x)
                }
                Strategy::Approx(a) => {
                    let s = stage.unwrap_or_else(|| a.final_stage());
                    empirical_dim_bound(&a.at(s), &x)
                }
                Strategy::Test(t) => match t.flavor {
                    Flavor::Block34 => empirical_dim_bound(&packing_certificate(&t)?, &x),
                    Flavor::STest { .. } => {
                        let (n, tt) = strategies_from_test(&t)?;
                        let s = stage.unwrap_or_else(|| n.final_stage().max(tt.final_stage()));
                        let sum = |sigma: &BitString| n.eval(s, sigma) + tt.eval(s, sigma);
                        empirical_dim_bound(&sum as &dyn Evaluator, &x)
                    }
                },
            };
            emit(out.as_deref(), &report)?;
            Ok(0)
        }
        Command::Dimhalf {
            components,
            stages,
            nmax,
            out,
            trace,
            prefix,
        } => {
            let (n, t) = match components {
                Some(p) => load_components(&p)?,
                None => (
                    StageApprox::empty(ParityTag::BetsOnOdd),
                    StageApprox::empty(ParityTag::BetsOnEven),
                ),
            };
            let run = run_stage_machine(&n, &t, stages, nmax)?;
            if let Some(p) = trace {
                let mut w = writer(Some(&p))?;
                for e in &run.events {
                    jsonl(&mut *w, &serde_json::to_value(e)?)?;
                }
                w.flush()?;
            }
            if let Some(p) = prefix {
                fs::write(p, format!("{}\n", run.x))?;
            }
            emit(out.as_deref(), &summary(&run))?;
            let ok = run.checks.kraft_ok
                && run.checks.capital_ok
                && run.checks.changes_ok
                && run.checks.lengths_ok;
            Ok(if ok { 0 } else { 1 })
        }
        Command::Verify {
            lemma,
            n,
            seed,
            out,
        } => {
            let reports = run_suite(&lemma, n, seed)?;
            let pass = reports.iter().all(|r| r.passed());
            emit(
                out.as_deref(),
                &json!({"lemma": lemma, "pass": pass, "suites": reports}),
            )?;
            Ok(if pass { 0 } else { 1 })
        }
    }
}

fn summary(run: &StageRun) -> Value {
    let weight: Q = run.ledger.kraft_weight();
    json!({
        "stages": run.stages,
        "n_max": run.n_max,
        "params": run.params,
        "sigmas": run.sigmas,
        "x": run.x,
        "ledger": run.ledger,
        "kraft_weight": fmt_q(&weight),
        "checks": run.checks,
        "events": run.events.len(),
    })
}
