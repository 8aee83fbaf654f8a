//! Finitely described betting programs and monotone stage approximations.
//!
//! A [`BetProgram`] is the lazy counterpart of a [`StrategyTable`]: its value at
//! a state is obtained by replaying the bets along the state, so it can be
//! evaluated at depths where a full table would be far too large.

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::rational::{fmt_q, int, is_integer, serde_q, serde_q_map, serde_q_vec, Q};
use crate::table::{Kind, ParityTag, SidedTag, StrategyTable};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Anything that assigns a capital to every finite state.
pub trait Evaluator {
    fn value(&self, sigma: &BitString) -> Q;
}

impl Evaluator for StrategyTable {
    fn value(&self, sigma: &BitString) -> Q {
        StrategyTable::value(self, sigma)
    }
}

impl<F: Fn(&BitString) -> Q> Evaluator for F {
    fn value(&self, sigma: &BitString) -> Q {
        self(sigma)
    }
}

/// A wager in integer units on a fixed outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntBet {
    pub wager: u64,
    pub outcome: u8,
}

/// Fractional rules. A signed fraction `f ∈ [-1, 1]` bets `|f|` of the
/// current capital on outcome 1 when positive and on outcome 0 when negative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FracRule {
    Constant {
        #[serde(with = "serde_q")]
        fraction: Q,
    },
    /// Fraction chosen by the position modulo the period.
    Periodic {
        #[serde(with = "serde_q_vec")]
        fractions: Vec<Q>,
    },
    /// Fraction chosen by the last `k` bits; shorter states use `default`.
    ByLastBits {
        k: usize,
        #[serde(with = "serde_q_map")]
        table: BTreeMap<BitString, Q>,
        #[serde(with = "serde_q", default = "Q::zero")]
        default: Q,
    },
    /// Fraction chosen by the exact state; absent states do not bet.
    Table {
        #[serde(with = "serde_q_map")]
        entries: BTreeMap<BitString, Q>,
    },
    /// All capital on `target(|ρ|)` at every proper prefix `ρ` of `target`.
    AllInToward { target: BitString },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum IntRule {
    Constant {
        wager: u64,
        outcome: u8,
    },
    /// `even_outcome` at even-length states, the other outcome at odd ones.
    Alternating {
        wager: u64,
        even_outcome: u8,
    },
    Periodic {
        bets: Vec<IntBet>,
    },
    ByLastBits {
        k: usize,
        table: BTreeMap<BitString, IntBet>,
        #[serde(default)]
        default: Option<IntBet>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FsmState {
    pub wager: u64,
    pub outcome: u8,
    pub next: [usize; 2],
}

/// Mealy machine with integer wagers read off the automaton state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fsm {
    #[serde(default)]
    pub start: usize,
    pub states: Vec<FsmState>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", content = "rule", rename_all = "snake_case")]
pub enum Rule {
    Fractional(FracRule),
    Integer(IntRule),
    Fsm(Fsm),
}

/// A betting program with its restriction mask.
///
/// Bets the mask forbids (wrong parity, wrong side) are dropped, and integer
/// wagers are clamped to the current capital, so every program induces a
/// non-negative martingale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetProgram {
    #[serde(with = "serde_q")]
    pub initial: Q,
    #[serde(flatten)]
    pub rule: Rule,
    #[serde(default)]
    pub parity: ParityTag,
    #[serde(default)]
    pub sided: SidedTag,
}

/// Capital plus automaton state after some prefix.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProgramState {
    pub capital: Q,
    pub auto: usize,
}

/// Effective bet at one state; `amount` is zero when no bet is placed.
#[derive(Clone, Debug, PartialEq)]
pub struct Bet {
    pub toward: u8,
    pub amount: Q,
}

enum RawBet {
    None,
    Fraction(Q),
    Units(IntBet),
}

fn check_fraction(f: &Q) -> Result<()> {
    if f.abs() > Q::one() {
        return Err(Error::InvalidProgram(format!(
            "fraction {} outside [-1, 1]",
            fmt_q(f)
        )));
    }
    Ok(())
}

fn check_bet(b: &IntBet) -> Result<()> {
    if b.outcome > 1 {
        return Err(Error::InvalidProgram(format!(
            "outcome {} is not a bit",
            b.outcome
        )));
    }
    Ok(())
}

fn last_bits(prefix: &BitString, k: usize) -> Option<BitString> {
    (prefix.len() >= k)
        .then(|| BitString::from_bits(prefix.bits()[prefix.len() - k..].iter().copied()))
}

impl BetProgram {
    pub fn new(initial: Q, rule: Rule, parity: ParityTag, sided: SidedTag) -> Result<Self> {
        let p = BetProgram {
            initial,
            rule,
            parity,
            sided,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn fractional(initial: Q, rule: FracRule, parity: ParityTag) -> Result<Self> {
        BetProgram::new(
            initial,
            Rule::Fractional(rule),
            parity,
            SidedTag::Unrestricted,
        )
    }

    pub fn integer(
        initial: u64,
        rule: IntRule,
        parity: ParityTag,
        sided: SidedTag,
    ) -> Result<Self> {
        BetProgram::new(int(initial as i64), Rule::Integer(rule), parity, sided)
    }

    pub fn fsm(initial: u64, machine: Fsm, parity: ParityTag, sided: SidedTag) -> Result<Self> {
        BetProgram::new(int(initial as i64), Rule::Fsm(machine), parity, sided)
    }

    pub fn validate(&self) -> Result<()> {
        if self.initial.is_negative() {
            return Err(Error::InvalidProgram("negative initial capital".into()));
        }
        match &self.rule {
            Rule::Fractional(r) => match r {
                FracRule::Constant { fraction } => check_fraction(fraction)?,
                FracRule::Periodic { fractions } => {
                    if fractions.is_empty() {
                        return Err(Error::InvalidProgram("empty period".into()));
                    }
                    fractions.iter().try_for_each(check_fraction)?
                }
                FracRule::ByLastBits { k, table, default } => {
                    check_fraction(default)?;
                    for (key, f) in table {
                        if key.len() != *k {
                            return Err(Error::InvalidProgram(format!(
                                "context {key:?} is not of length {k}"
                            )));
                        }
                        check_fraction(f)?;
                    }
                }
                FracRule::Table { entries } => entries.values().try_for_each(check_fraction)?,
                FracRule::AllInToward { .. } => {}
            },
            Rule::Integer(r) => {
                if !is_integer(&self.initial) {
                    return Err(Error::InvalidProgram(
                        "integer program needs integer capital".into(),
                    ));
                }
                match r {
                    IntRule::Constant { wager, outcome } => check_bet(&IntBet {
                        wager: *wager,
                        outcome: *outcome,
                    })?,
                    IntRule::Alternating {
                        wager,
                        even_outcome,
                    } => check_bet(&IntBet {
                        wager: *wager,
                        outcome: *even_outcome,
                    })?,
                    IntRule::Periodic { bets } => {
                        if bets.is_empty() {
                            return Err(Error::InvalidProgram("empty period".into()));
                        }
                        bets.iter().try_for_each(check_bet)?
                    }
                    IntRule::ByLastBits { k, table, default } => {
                        for (key, b) in table {
                            if key.len() != *k {
                                return Err(Error::InvalidProgram(format!(
                                    "context {key:?} is not of length {k}"
                                )));
                            }
                            check_bet(b)?;
                        }
                        if let Some(b) = default {
                            check_bet(b)?;
                        }
                    }
                }
            }
            Rule::Fsm(m) => {
                if !is_integer(&self.initial) {
                    return Err(Error::InvalidProgram(
                        "finite-state program needs integer capital".into(),
                    ));
                }
                if m.states.is_empty() || m.start >= m.states.len() {
                    return Err(Error::InvalidProgram(
                        "finite-state program has no valid start state".into(),
                    ));
                }
                for s in &m.states {
                    check_bet(&IntBet {
                        wager: s.wager,
                        outcome: s.outcome,
                    })?;
                    if s.next.iter().any(|&n| n >= m.states.len()) {
                        return Err(Error::InvalidProgram("transition to unknown state".into()));
                    }
                }
            }
        }
        Ok(())
    }

    /// Integer-valued along every path.
    pub fn is_integer_valued(&self) -> bool {
        matches!(self.rule, Rule::Integer(_) | Rule::Fsm(_)) && is_integer(&self.initial)
    }

    pub fn is_finite_state(&self) -> bool {
        matches!(self.rule, Rule::Fsm(_))
    }

    pub fn start(&self) -> ProgramState {
        let auto = match &self.rule {
            Rule::Fsm(m) => m.start,
            _ => 0,
        };
        ProgramState {
            capital: self.initial.clone(),
            auto,
        }
    }

    fn raw_bet(&self, prefix: &BitString, auto: usize) -> RawBet {
        let n = prefix.len();
        match &self.rule {
            Rule::Fractional(r) => {
                let f = match r {
                    FracRule::Constant { fraction } => fraction.clone(),
                    FracRule::Periodic { fractions } => fractions[n % fractions.len()].clone(),
                    FracRule::ByLastBits { k, table, default } => last_bits(prefix, *k)
                        .and_then(|c| table.get(&c).cloned())
                        .unwrap_or_else(|| default.clone()),
                    FracRule::Table { entries } => {
                        entries.get(prefix).cloned().unwrap_or_else(Q::zero)
                    }
                    FracRule::AllInToward { target } => {
                        if prefix.is_proper_prefix_of(target) {
                            if target.bit(n) == 1 {
                                Q::one()
                            } else {
                                -Q::one()
                            }
                        } else {
                            Q::zero()
                        }
                    }
                };
                if f.is_zero() {
                    RawBet::None
                } else {
                    RawBet::Fraction(f)
                }
            }
            Rule::Integer(r) => {
                let b = match r {
                    IntRule::Constant { wager, outcome } => Some(IntBet {
                        wager: *wager,
                        outcome: *outcome,
                    }),
                    IntRule::Alternating {
                        wager,
                        even_outcome,
                    } => Some(IntBet {
                        wager: *wager,
                        outcome: if n.is_multiple_of(2) {
                            *even_outcome
                        } else {
                            1 - *even_outcome
                        },
                    }),
                    IntRule::Periodic { bets } => Some(bets[n % bets.len()]),
                    IntRule::ByLastBits { k, table, default } => last_bits(prefix, *k)
                        .and_then(|c| table.get(&c).copied())
                        .or(*default),
                };
                b.map_or(RawBet::None, RawBet::Units)
            }
            Rule::Fsm(m) => {
                let s = &m.states[auto];
                RawBet::Units(IntBet {
                    wager: s.wager,
                    outcome: s.outcome,
                })
            }
        }
    }

    /// The effective bet at state `prefix` given the program state there.
    pub fn bet(&self, prefix: &BitString, st: &ProgramState) -> Bet {
        let none = Bet {
            toward: 0,
            amount: Q::zero(),
        };
        if st.capital.is_zero() || !self.parity.allows_bet_at(prefix.len()) {
            return none;
        }
        let (toward, amount) = match self.raw_bet(prefix, st.auto) {
            RawBet::None => return none,
            RawBet::Fraction(f) => (u8::from(f.is_positive()), f.abs() * &st.capital),
            RawBet::Units(b) => {
                let w = int(b.wager as i64);
                (
                    b.outcome,
                    if w < st.capital {
                        w
                    } else {
                        st.capital.clone()
                    },
                )
            }
        };
        if amount.is_zero() || !self.sided.allows_direction(toward) {
            return none;
        }
        Bet { toward, amount }
    }

    /// Program state after appending `bit` to `prefix`.
    pub fn step(&self, prefix: &BitString, st: &ProgramState, bit: u8) -> ProgramState {
        let bet = self.bet(prefix, st);
        let capital = if bet.amount.is_zero() {
            st.capital.clone()
        } else if bet.toward == bit {
            &st.capital + &bet.amount
        } else {
            &st.capital - &bet.amount
        };
        let auto = match &self.rule {
            Rule::Fsm(m) => m.states[st.auto].next[bit as usize],
            _ => st.auto,
        };
        ProgramState { capital, auto }
    }

    /// Program state after the whole string `x`.
    pub fn state_after(&self, x: &BitString) -> ProgramState {
        let mut st = self.start();
        let mut prefix = BitString::empty();
        for &b in x.bits() {
            st = self.step(&prefix, &st, b);
            prefix.push(b);
        }
        st
    }

    /// Values at `x↾0, x↾1, …, x`.
    pub fn trajectory(&self, x: &BitString) -> Vec<Q> {
        let mut st = self.start();
        let mut out = Vec::with_capacity(x.len() + 1);
        out.push(st.capital.clone());
        let mut prefix = BitString::empty();
        for &b in x.bits() {
            st = self.step(&prefix, &st, b);
            prefix.push(b);
            out.push(st.capital.clone());
        }
        out
    }

    /// Tabulates the program on `2^{≤depth}`.
    pub fn to_table(&self, depth: usize) -> Result<StrategyTable> {
        StrategyTable::from_fn(depth, Kind::Martingale, self.parity, self.sided, |s| {
            self.value(s)
        })
    }

    pub fn integer_capital(st: &ProgramState) -> u64 {
        st.capital.to_integer().to_u64().unwrap_or(u64::MAX)
    }
}

impl Evaluator for BetProgram {
    fn value(&self, sigma: &BitString) -> Q {
        self.state_after(sigma).capital
    }
}

/// One weighted program, counted from its activation stage onwards.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub stage: u64,
    #[serde(with = "serde_q")]
    pub weight: Q,
    pub program: BetProgram,
}

/// A left-c.e. strategy given as a growing sum of program components.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageApprox {
    pub kind: Kind,
    #[serde(default)]
    pub parity: ParityTag,
    #[serde(default)]
    pub sided: SidedTag,
    pub components: Vec<Component>,
}

impl StageApprox {
    pub fn new(
        kind: Kind,
        parity: ParityTag,
        sided: SidedTag,
        components: Vec<Component>,
    ) -> Result<Self> {
        let a = StageApprox {
            kind,
            parity,
            sided,
            components,
        };
        a.validate()?;
        Ok(a)
    }

    pub fn empty(parity: ParityTag) -> Self {
        StageApprox {
            kind: Kind::Martingale,
            parity,
            sided: SidedTag::Unrestricted,
            components: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, c) in self.components.iter().enumerate() {
            if c.weight.is_negative() {
                return Err(Error::NegativeWeight(fmt_q(&c.weight)));
            }
            c.program.validate()?;
            if self.parity != ParityTag::Unrestricted && c.program.parity != self.parity {
                return Err(Error::TagMismatch(format!(
                    "component {i} has parity {:?}",
                    c.program.parity
                )));
            }
            if self.sided != SidedTag::Unrestricted && c.program.sided != self.sided {
                return Err(Error::TagMismatch(format!(
                    "component {i} has side {:?}",
                    c.program.sided
                )));
            }
        }
        Ok(())
    }

    /// `Σ weight · program(σ)` over components active at `stage`.
    pub fn eval(&self, stage: u64, sigma: &BitString) -> Q {
        self.components
            .iter()
            .filter(|c| c.stage <= stage)
            .map(|c| &c.weight * c.program.value(sigma))
            .fold(Q::zero(), |a, b| a + b)
    }

    /// Stages at which the approximation can change, ascending.
    pub fn change_points(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self.components.iter().map(|c| c.stage).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// First stage at which every component is active.
    pub fn final_stage(&self) -> u64 {
        self.components.iter().map(|c| c.stage).max().unwrap_or(0)
    }

    pub fn at(&self, stage: u64) -> StageView<'_> {
        StageView {
            approx: self,
            stage,
        }
    }

    pub fn cursor(&self) -> ApproxCursor<'_> {
        ApproxCursor {
            approx: self,
            prefix: BitString::empty(),
            states: self.components.iter().map(|c| c.program.start()).collect(),
        }
    }

    /// Tabulates the approximation at `stage` on `2^{≤depth}`.
    pub fn table_at(&self, stage: u64, depth: usize) -> Result<StrategyTable> {
        let mut values = BTreeMap::new();
        let mut stack = vec![self.cursor()];
        while let Some(c) = stack.pop() {
            if c.prefix().len() < depth {
                stack.push(c.child(0));
                stack.push(c.child(1));
            }
            values.insert(c.prefix().clone(), c.value_at(stage));
        }
        StrategyTable::from_map(depth, self.kind, self.parity, self.sided, values)
    }

    pub fn cursor_at(&self, x: &BitString) -> ApproxCursor<'_> {
        let mut c = self.cursor();
        for &b in x.bits() {
            c = c.child(b);
        }
        c
    }
}

/// A stage approximation frozen at one stage.
#[derive(Clone, Copy)]
pub struct StageView<'a> {
    pub approx: &'a StageApprox,
    pub stage: u64,
}

impl Evaluator for StageView<'_> {
    fn value(&self, sigma: &BitString) -> Q {
        self.approx.eval(self.stage, sigma)
    }
}

/// Incremental evaluation of every component along a path.
#[derive(Clone)]
pub struct ApproxCursor<'a> {
    approx: &'a StageApprox,
    prefix: BitString,
    states: Vec<ProgramState>,
}

impl<'a> ApproxCursor<'a> {
    pub fn prefix(&self) -> &BitString {
        &self.prefix
    }

    pub fn child(&self, bit: u8) -> ApproxCursor<'a> {
        let states = self
            .approx
            .components
            .iter()
            .zip(&self.states)
            .map(|(c, st)| c.program.step(&self.prefix, st, bit))
            .collect();
        ApproxCursor {
            approx: self.approx,
            prefix: self.prefix.child(bit),
            states,
        }
    }

    /// Weighted component values at the cursor position.
    pub fn component_values(&self) -> Vec<Q> {
        self.approx
            .components
            .iter()
            .zip(&self.states)
            .map(|(c, st)| &c.weight * &st.capital)
            .collect()
    }

    pub fn value_at(&self, stage: u64) -> Q {
        self.approx
            .components
            .iter()
            .zip(&self.states)
            .filter(|(c, _)| c.stage <= stage)
            .map(|(c, st)| &c.weight * &st.capital)
            .fold(Q::zero(), |a, b| a + b)
    }
}

/// Sums per-component values for a given stage.
pub fn stage_sum(approx: &StageApprox, values: &[Q], stage: u64) -> Q {
    approx
        .components
        .iter()
        .zip(values)
        .filter(|(c, _)| c.stage <= stage)
        .map(|(_, v)| v.clone())
        .fold(Q::zero(), |a, b| a + b)
}

/// Weighted sum of programs, all active from stage 0.
pub fn combine_programs(items: &[(Q, BetProgram)]) -> Result<StageApprox> {
    let parity = {
        let mut it = items.iter().map(|(_, p)| p.parity);
        match it.next() {
            Some(first) if it.all(|t| t == first) => first,
            _ => ParityTag::Unrestricted,
        }
    };
    let sided = {
        let mut it = items.iter().map(|(_, p)| p.sided);
        match it.next() {
            Some(first) if it.all(|t| t == first) => first,
            _ => SidedTag::Unrestricted,
        }
    };
    StageApprox::new(
        Kind::Martingale,
        parity,
        sided,
        items
            .iter()
            .map(|(w, p)| Component {
                stage: 0,
                weight: w.clone(),
                program: p.clone(),
            })
            .collect(),
    )
}
