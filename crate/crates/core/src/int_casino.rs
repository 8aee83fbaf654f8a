//! Integer-valued betting: the two built-in engines, the settling-extension
//! search against finite-state adversaries and the diagonalization driver.

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::program::{BetProgram, Evaluator, IntRule, ProgramState, Rule};
use crate::rational::{int, serde_q, serde_q_vec, Q};
use crate::table::{ParityTag, SidedTag};
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet};

/// An integer-valued program together with a display name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntStrategy {
    #[serde(default)]
    pub name: String,
    #[serde(flatten)]
    pub program: BetProgram,
}

impl IntStrategy {
    pub fn new(name: impl Into<String>, program: BetProgram) -> Result<Self> {
        let s = IntStrategy {
            name: name.into(),
            program,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.program.validate()?;
        if !self.program.is_integer_valued() {
            return Err(Error::InvalidProgram(format!(
                "{} is not integer-valued",
                self.label()
            )));
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        if self.name.is_empty() {
            "adversary".into()
        } else {
            self.name.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Engine {
    N,
    D,
}

impl Engine {
    pub fn strategy(self) -> IntStrategy {
        match self {
            Engine::N => builtin_n(),
            Engine::D => builtin_d(),
        }
    }

    /// The bit the engine bets on after `len` bits.
    pub fn favored(self, len: usize) -> u8 {
        match self {
            Engine::N => 1,
            Engine::D => (len % 2) as u8,
        }
    }
}

/// Capital 5, wagers 1 on outcome 1 at every state.
pub fn builtin_n() -> IntStrategy {
    let p = BetProgram::integer(
        5,
        IntRule::Constant {
            wager: 1,
            outcome: 1,
        },
        ParityTag::Unrestricted,
        SidedTag::Unrestricted,
    )
    .expect("valid built-in program");
    IntStrategy {
        name: "N".into(),
        program: p,
    }
}

/// Capital 5, wagers 1 on 0 at even-length states and on 1 at odd-length ones.
pub fn builtin_d() -> IntStrategy {
    let p = BetProgram::integer(
        5,
        IntRule::Alternating {
            wager: 1,
            even_outcome: 0,
        },
        ParityTag::Unrestricted,
        SidedTag::Unrestricted,
    )
    .expect("valid built-in program");
    IntStrategy {
        name: "D".into(),
        program: p,
    }
}

/// Restrictions an adversary must obey for the engine to defeat it: single
/// parity against `N`, single side against `D`.
pub fn check_restriction(engine: Engine, adv: &IntStrategy) -> Result<()> {
    adv.validate()?;
    let ok = match engine {
        Engine::N => adv.program.parity != ParityTag::Unrestricted,
        Engine::D => adv.program.sided != SidedTag::Unrestricted,
    };
    if ok {
        Ok(())
    } else {
        let need = if engine == Engine::N {
            "a parity"
        } else {
            "a side"
        };
        Err(Error::precondition(
            format!("adversary against engine {engine:?} must declare {need} restriction"),
            adv.label(),
        ))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Greedy,
    Settle,
}

/// Why a bit was chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fired {
    /// Engine-favored bit.
    Favored,
    /// Opposite bit, since the adversaries' net wager favored the engine's bit.
    Deviate,
    /// Engine-favored bit although the adversaries win it; the engine was at 1.
    Concede,
    /// Steering an adversary toward a state where it bets.
    Navigate,
    /// The outcome on which the adversary being settled loses.
    Punish,
    /// Engine-favored padding after a settlement.
    Boost,
    /// Part of an interpolated `01` block.
    Block,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BitRecord {
    pub pos: usize,
    pub bit: u8,
    pub fired: Fired,
    #[serde(with = "serde_q")]
    pub engine: Q,
    #[serde(with = "serde_q_vec")]
    pub adversaries: Vec<Q>,
}

/// Why an adversary is constant on a cone.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    ZeroCapital,
    NoBettingReachable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub adversary: usize,
    /// The cone's root.
    pub at: usize,
    pub reason: Reason,
    #[serde(with = "serde_q")]
    pub capital: Q,
    pub automaton_state: usize,
    /// `(automaton state, position parity)` pairs reachable in the cone.
    pub reachable: Vec<(usize, u8)>,
    pub probe_depth: usize,
    pub probe_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub pos: usize,
    pub block_bits: usize,
    pub fraction: f64,
    #[serde(with = "serde_q")]
    pub engine_at_block_start: Q,
    #[serde(with = "serde_q")]
    pub engine_at_block_end: Q,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagTrace {
    pub engine: Engine,
    pub mode: Mode,
    pub target: u64,
    pub z: BitString,
    pub records: Vec<BitRecord>,
    pub checkpoints: Vec<Checkpoint>,
    pub certificates: Vec<Certificate>,
    #[serde(with = "serde_q_vec")]
    pub initial_adversaries: Vec<Q>,
}

impl DiagTrace {
    pub fn deviations(&self) -> usize {
        self.records
            .iter()
            .filter(|r| r.fired == Fired::Deviate)
            .count()
    }

    pub fn concessions(&self) -> usize {
        self.records
            .iter()
            .filter(|r| r.fired == Fired::Concede)
            .count()
    }

    /// Bits on which the engine bet and lost.
    pub fn unfavorable_bits(&self) -> usize {
        self.records
            .iter()
            .filter(|r| r.bit != self.engine.favored(r.pos))
            .count()
    }

    pub fn final_engine(&self) -> Q {
        self.records
            .last()
            .map(|r| r.engine.clone())
            .unwrap_or_else(|| int(5))
    }

    /// Aggregate adversary capital before bit 0 and after every bit.
    pub fn aggregate(&self) -> Vec<Q> {
        let sum = |v: &[Q]| v.iter().fold(Q::zero(), |a, b| a + b);
        std::iter::once(sum(&self.initial_adversaries))
            .chain(self.records.iter().map(|r| sum(&r.adversaries)))
            .collect()
    }
}

/// Recomputes every program along `z` and compares with the recorded
/// capitals. Returns the first mismatching position.
pub fn replay(trace: &DiagTrace, adversaries: &[IntStrategy]) -> std::result::Result<(), usize> {
    let engine = trace.engine.strategy().program;
    let mut prefix = BitString::empty();
    let mut es = engine.start();
    let mut states: Vec<ProgramState> = adversaries.iter().map(|a| a.program.start()).collect();
    if states
        .iter()
        .map(|s| &s.capital)
        .ne(trace.initial_adversaries.iter())
    {
        return Err(0);
    }
    for r in &trace.records {
        if r.pos != prefix.len() || trace.z.bit(r.pos) != r.bit {
            return Err(r.pos);
        }
        es = engine.step(&prefix, &es, r.bit);
        for (a, st) in adversaries.iter().zip(states.iter_mut()) {
            *st = a.program.step(&prefix, st, r.bit);
        }
        prefix.push(r.bit);
        if es.capital != r.engine || states.iter().map(|s| &s.capital).ne(r.adversaries.iter()) {
            return Err(r.pos);
        }
    }
    if prefix != trace.z {
        return Err(prefix.len());
    }
    Ok(())
}

/// Signed wager toward `bit`: positive when the program gains if `bit` comes.
fn signed_wager(p: &BetProgram, prefix: &BitString, st: &ProgramState, bit: u8) -> Q {
    let b = p.bet(prefix, st);
    if b.toward == bit {
        b.amount
    } else {
        -b.amount
    }
}

struct Run<'a> {
    engine: Engine,
    engine_prog: BetProgram,
    advs: &'a [IntStrategy],
    z: BitString,
    es: ProgramState,
    states: Vec<ProgramState>,
    records: Vec<BitRecord>,
    max_bits: usize,
}

impl<'a> Run<'a> {
    fn new(engine: Engine, advs: &'a [IntStrategy], max_bits: usize) -> Self {
        let engine_prog = engine.strategy().program;
        Run {
            engine,
            es: engine_prog.start(),
            engine_prog,
            advs,
            z: BitString::empty(),
            states: advs.iter().map(|a| a.program.start()).collect(),
            records: Vec::new(),
            max_bits,
        }
    }

    fn push(&mut self, bit: u8, fired: Fired) -> Result<()> {
        if self.z.len() >= self.max_bits {
            return Err(Error::BitBudget(self.max_bits));
        }
        self.es = self.engine_prog.step(&self.z, &self.es, bit);
        for (a, st) in self.advs.iter().zip(self.states.iter_mut()) {
            *st = a.program.step(&self.z, st, bit);
        }
        self.records.push(BitRecord {
            pos: self.z.len(),
            bit,
            fired,
            engine: self.es.capital.clone(),
            adversaries: self.states.iter().map(|s| s.capital.clone()).collect(),
        });
        self.z.push(bit);
        if self.es.capital.is_zero() {
            return Err(Error::EngineExhausted(self.z.len()));
        }
        Ok(())
    }

    fn engine_capital(&self) -> u64 {
        self.es.capital.to_integer().to_u64().unwrap_or(u64::MAX)
    }

    fn favored(&self) -> u8 {
        self.engine.favored(self.z.len())
    }

    fn greedy_step(&mut self) -> Result<()> {
        let f = self.favored();
        let u = self
            .advs
            .iter()
            .zip(&self.states)
            .map(|(a, st)| signed_wager(&a.program, &self.z, st, f))
            .fold(Q::zero(), |a, b| a + b);
        if u >= int(1) {
            if self.engine_capital() >= 2 {
                self.push(1 - f, Fired::Deviate)
            } else {
                self.push(f, Fired::Concede)
            }
        } else {
            self.push(f, Fired::Favored)
        }
    }

    /// Appends `01` pairs (after aligning to an even position) and records a
    /// checkpoint.
    fn block(
        &mut self,
        pairs: usize,
        block_bits: &mut usize,
        checkpoints: &mut Vec<Checkpoint>,
    ) -> Result<()> {
        if self.z.len() % 2 == 1 {
            let f = self.favored();
            self.push(f, Fired::Boost)?;
        }
        let start = self.es.capital.clone();
        for _ in 0..pairs {
            self.push(0, Fired::Block)?;
            self.push(1, Fired::Block)?;
        }
        *block_bits += 2 * pairs;
        checkpoints.push(Checkpoint {
            pos: self.z.len(),
            block_bits: *block_bits,
            fraction: *block_bits as f64 / self.z.len() as f64,
            engine_at_block_start: start,
            engine_at_block_end: self.es.capital.clone(),
        });
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct DiagOptions {
    pub engine: Engine,
    pub mode: Mode,
    pub target: u64,
    pub dim0: bool,
    /// Rounds of (gain segment, doubled `01` block) appended after the
    /// settlements when `dim0` is set.
    pub dim0_rounds: usize,
    pub max_bits: usize,
    pub probe_depth: usize,
}

impl Default for DiagOptions {
    fn default() -> Self {
        DiagOptions {
            engine: Engine::N,
            mode: Mode::Greedy,
            target: 100,
            dim0: false,
            dim0_rounds: 10,
            max_bits: 1 << 22,
            probe_depth: 20,
        }
    }
}

/// Result of one settling search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Settlement {
    pub tau: BitString,
    pub bits: Vec<(u8, Fired)>,
    pub punish_steps: usize,
    pub certificate: Certificate,
}

fn bets_at(p: &BetProgram, len: usize, auto: usize, capital: &Q) -> bool {
    let st = ProgramState {
        capital: capital.clone(),
        auto,
    };
    !p.bet(&BitString::repeat(0, len % 2), &st).amount.is_zero()
}

fn next_auto(p: &BetProgram, auto: usize, bit: u8) -> usize {
    match &p.rule {
        Rule::Fsm(m) => m.states[auto].next[bit as usize],
        _ => auto,
    }
}

/// Configurations `(automaton state, position parity)` reachable from the
/// given one without passing through a betting configuration.
fn reachable(p: &BetProgram, auto: usize, parity: u8, capital: &Q) -> (Vec<(usize, u8)>, bool) {
    let mut seen = BTreeSet::new();
    let mut stack = vec![(auto, parity)];
    let mut hits = false;
    while let Some((a, par)) = stack.pop() {
        if !seen.insert((a, par)) {
            continue;
        }
        if bets_at(p, par as usize, a, capital) {
            hits = true;
            continue;
        }
        for b in 0..2u8 {
            stack.push((next_auto(p, a, b), 1 - par));
        }
    }
    (seen.into_iter().collect(), hits)
}

/// Least-cost bit path to a betting configuration followed by the bit that
/// makes the adversary lose there. Cost counts bits on which the engine
/// loses, the punishing bit included; ties go to shorter then
/// lexicographically smaller paths. Returns the path (punishing bit last)
/// and its cost.
fn navigate(
    p: &BetProgram,
    engine: Engine,
    auto: usize,
    len: usize,
    capital: &Q,
) -> Option<(Vec<u8>, usize)> {
    let mut heap = BinaryHeap::new();
    let mut best: HashSet<(usize, usize, bool)> = HashSet::new();
    heap.push(Reverse((0usize, 0usize, Vec::<u8>::new(), auto, false)));
    while let Some(Reverse((cost, plen, path, a, done))) = heap.pop() {
        if done {
            return Some((path, cost));
        }
        let pos = len + plen;
        if !best.insert((a, pos % 2, done)) {
            continue;
        }
        if bets_at(p, pos, a, capital) {
            let st = ProgramState {
                capital: capital.clone(),
                auto: a,
            };
            let punish = 1 - p.bet(&BitString::repeat(0, pos % 2), &st).toward;
            let mut np = path;
            np.push(punish);
            heap.push(Reverse((
                cost + usize::from(punish != engine.favored(pos)),
                plen + 1,
                np,
                a,
                true,
            )));
            continue;
        }
        for b in 0..2u8 {
            let mut np = path.clone();
            np.push(b);
            heap.push(Reverse((
                cost + usize::from(b != engine.favored(pos)),
                plen + 1,
                np,
                next_auto(p, a, b),
                false,
            )));
        }
    }
    None
}

/// Whether a finite-state program is constant on every extension of `x` up
/// to `depth` further bits, by exhaustive search over configurations.
pub fn probe_cone_constant(p: &BetProgram, x: &BitString, depth: usize) -> bool {
    let st = p.state_after(x);
    let mut memo: HashMap<(usize, u8, usize), bool> = HashMap::new();
    fn go(
        p: &BetProgram,
        auto: usize,
        par: u8,
        left: usize,
        capital: &Q,
        memo: &mut HashMap<(usize, u8, usize), bool>,
    ) -> bool {
        if left == 0 {
            return true;
        }
        if let Some(&v) = memo.get(&(auto, par, left)) {
            return v;
        }
        let ok = !bets_at(p, par as usize, auto, capital)
            && (0..2u8).all(|b| go(p, next_auto(p, auto, b), 1 - par, left - 1, capital, memo));
        memo.insert((auto, par, left), ok);
        ok
    }
    if !p.is_finite_state() {
        return false;
    }
    go(
        p,
        st.auto,
        (x.len() % 2) as u8,
        depth,
        &st.capital,
        &mut memo,
    )
}

/// Extends `ρ` until `adv` is provably constant on the cone above the
/// result and the engine's capital exceeds `c`.
pub fn find_settling_extension(
    adv: &IntStrategy,
    engine: Engine,
    rho: &BitString,
    c: u64,
    probe_depth: usize,
) -> Result<Settlement> {
    if !adv.program.is_finite_state() {
        return Err(Error::Unsupported(
            "cone constancy is only decidable for finite-state adversaries".into(),
        ));
    }
    check_restriction(engine, adv)?;
    let e = engine.strategy().program;
    if e.value(rho) <= int(2) {
        return Err(Error::precondition(
            "engine capital at rho must exceed 2",
            rho.to_string(),
        ));
    }
    let advs = [adv.clone()];
    let mut run = Run::new(engine, &advs, usize::MAX);
    for &b in rho.bits() {
        run.push(b, Fired::Favored)?;
    }
    run.records.clear();
    let mut punish_steps = 0;
    loop {
        let st = run.states[0].clone();
        if st.capital.is_zero() {
            break;
        }
        let Some((path, cost)) = navigate(&adv.program, engine, st.auto, run.z.len(), &st.capital)
        else {
            break;
        };
        // Too poor for the cheapest route: the adversary does not bet here,
        // so the favored bit costs nothing against it and earns the engine 1.
        if cost > 0
            && run.engine_capital() <= cost as u64
            && !bets_at(&adv.program, run.z.len(), st.auto, &st.capital)
        {
            let f = run.favored();
            run.push(f, Fired::Favored)?;
            continue;
        }
        let (&punish, nav) = path.split_last().expect("path ends in the punishing bit");
        for &b in nav {
            run.push(b, Fired::Navigate)?;
        }
        run.push(punish, Fired::Punish)?;
        punish_steps += 1;
    }
    let at = run.z.len();
    let st = run.states[0].clone();
    let (reach, hits) = reachable(&adv.program, st.auto, (at % 2) as u8, &st.capital);
    let reason = if st.capital.is_zero() {
        Reason::ZeroCapital
    } else {
        debug_assert!(!hits);
        Reason::NoBettingReachable
    };
    let probe_ok = probe_cone_constant(&adv.program, &run.z, probe_depth);
    let certificate = Certificate {
        adversary: 0,
        at,
        reason,
        capital: st.capital.clone(),
        automaton_state: st.auto,
        reachable: reach,
        probe_depth,
        probe_ok,
    };
    match engine {
        Engine::N => {
            for _ in 0..c {
                run.push(1, Fired::Boost)?;
            }
        }
        Engine::D => {
            if run.z.len() % 2 == 1 {
                run.push(1, Fired::Boost)?;
            }
            for _ in 0..c {
                run.push(0, Fired::Boost)?;
                run.push(1, Fired::Boost)?;
            }
        }
    }
    Ok(Settlement {
        tau: run.z.clone(),
        bits: run.records.iter().map(|r| (r.bit, r.fired)).collect(),
        punish_steps,
        certificate,
    })
}

/// Produces a prefix on which the engine reaches `target` while every
/// adversary is held down.
pub fn diagonalize(advs: &[IntStrategy], opts: &DiagOptions) -> Result<DiagTrace> {
    for a in advs {
        check_restriction(opts.engine, a)?;
        if opts.mode == Mode::Settle && !a.program.is_finite_state() {
            return Err(Error::Unsupported(format!(
                "settle mode needs finite-state adversaries; {} is not",
                a.label()
            )));
        }
    }
    let mut run = Run::new(opts.engine, advs, opts.max_bits);
    let initial_adversaries = run.states.iter().map(|s| s.capital.clone()).collect();
    let target = int(opts.target as i64);
    let mut checkpoints = Vec::new();
    let mut certificates = Vec::new();
    let mut block_bits = 0usize;
    let mut pairs = 1usize;
    match opts.mode {
        Mode::Greedy => {
            while run.es.capital < target {
                run.greedy_step()?;
            }
        }
        Mode::Settle => {
            for (j, adv) in advs.iter().enumerate() {
                let c = run.engine_capital().max(2) + 1;
                let s = find_settling_extension(adv, opts.engine, &run.z, c, opts.probe_depth)?;
                for &(b, fired) in &s.bits {
                    run.push(b, fired)?;
                }
                let mut cert = s.certificate;
                cert.adversary = j;
                certificates.push(cert);
                if opts.dim0 {
                    run.block(pairs, &mut block_bits, &mut checkpoints)?;
                    pairs *= 2;
                }
            }
            if opts.dim0 {
                for _ in 0..opts.dim0_rounds {
                    for _ in 0..(2 * pairs / 32).max(1) {
                        let f = run.favored();
                        run.push(f, Fired::Favored)?;
                    }
                    run.block(pairs, &mut block_bits, &mut checkpoints)?;
                    pairs *= 2;
                }
            }
            while run.es.capital < target {
                let f = run.favored();
                run.push(f, Fired::Favored)?;
            }
            // every earlier certificate must still hold at the end
            for cert in &mut certificates {
                cert.probe_ok &= probe_cone_constant(
                    &advs[cert.adversary].program,
                    &run.z.prefix(cert.at),
                    opts.probe_depth,
                );
            }
        }
    }
    Ok(DiagTrace {
        engine: opts.engine,
        mode: opts.mode,
        target: opts.target,
        z: run.z,
        records: run.records,
        checkpoints,
        certificates,
        initial_adversaries,
    })
}

/// Each adversary's capital at the last greedy trigger (deviation or
/// concession) and the largest capital it reaches afterwards.
pub fn peak_after_last_trigger(trace: &DiagTrace) -> Vec<(Q, Q)> {
    let last = trace
        .records
        .iter()
        .rposition(|r| matches!(r.fired, Fired::Deviate | Fired::Concede));
    let n = trace.initial_adversaries.len();
    (0..n)
        .map(|i| {
            let at = match last {
                Some(k) => trace.records[k].adversaries[i].clone(),
                None => trace.initial_adversaries[i].clone(),
            };
            let start = last.map_or(0, |k| k + 1);
            let peak = trace.records[start..]
                .iter()
                .map(|r| r.adversaries[i].clone())
                .fold(at.clone(), |a, b| if b > a { b } else { a });
            (at, peak)
        })
        .collect()
}

/// True when every adversary value in the trace is non-negative and integral.
pub fn integral(trace: &DiagTrace) -> bool {
    trace
        .records
        .iter()
        .flat_map(|r| r.adversaries.iter().chain(std::iter::once(&r.engine)))
        .all(|v| v.is_integer() && !v.is_negative())
}
