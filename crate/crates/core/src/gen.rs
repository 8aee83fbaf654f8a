//! Seeded samplers for strategies and block instances.

use crate::bits::BitString;
use crate::decompose::BlockSpec;
use crate::error::Result;
use crate::int_casino::IntStrategy;
use crate::program::{BetProgram, Component, FracRule, Fsm, FsmState, StageApprox};
use crate::rational::{half, int, q, zero, Q};
use crate::table::{Kind, ParityTag, SidedTag, StrategyTable};
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

pub type Gen = ChaCha8Rng;

pub fn rng(seed: u64) -> Gen {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A point of `[lo, hi]` on the grid `lo + (hi − lo)·k/d` with `d ≤ max_den`.
pub fn rational_in(g: &mut Gen, lo: &Q, hi: &Q, max_den: i64) -> Q {
    let d = g.gen_range(1..=max_den);
    let k = g.gen_range(0..=d);
    lo + (hi - lo) * q(k, d)
}

/// A betting fraction in `(−1, 1)` (or `[−1, 1]` when `allow_all_in`).
pub fn fraction(g: &mut Gen, max_den: i64, allow_all_in: bool) -> Q {
    let d = g.gen_range(1..=max_den);
    let r = if allow_all_in { d } else { d - 1 };
    q(g.gen_range(-r..=r), d)
}

/// A martingale on `2^{≤depth}` betting only where `parity` allows. With
/// `positive`, no bet is all-in, so every value is positive.
pub fn martingale(
    g: &mut Gen,
    depth: usize,
    parity: ParityTag,
    positive: bool,
) -> Result<StrategyTable> {
    let mut values = BTreeMap::new();
    values.insert(BitString::empty(), rational_in(g, &q(1, 4), &int(2), 4));
    for len in 0..depth {
        for s in BitString::all_of_length(len) {
            let v = values[&s].clone();
            let f = if parity.allows_bet_at(len) {
                fraction(g, 4, !positive)
            } else {
                zero()
            };
            values.insert(s.child(0), &v * (Q::one() - &f));
            values.insert(s.child(1), &v * (Q::one() + &f));
        }
    }
    StrategyTable::from_map(
        depth,
        Kind::Martingale,
        parity,
        SidedTag::Unrestricted,
        values,
    )
}

/// A supermartingale on `2^{≤depth}` that keeps its capital exactly where
/// `parity` forbids bets and may lose capital where it bets.
pub fn supermartingale(
    g: &mut Gen,
    depth: usize,
    parity: ParityTag,
    max_den: i64,
) -> Result<StrategyTable> {
    let mut values = BTreeMap::new();
    values.insert(
        BitString::empty(),
        rational_in(g, &zero(), &int(2), max_den),
    );
    for len in 0..depth {
        for s in BitString::all_of_length(len) {
            let v = values[&s].clone();
            let (a, b) = if parity.allows_bet_at(len) {
                let two_v = &v * int(2);
                let a = rational_in(g, &zero(), &two_v, max_den);
                let b = rational_in(g, &zero(), &(&two_v - &a), max_den);
                if g.gen_bool(0.5) {
                    (a, b)
                } else {
                    (b, a)
                }
            } else {
                (v.clone(), v)
            };
            values.insert(s.child(0), a);
            values.insert(s.child(1), b);
        }
    }
    StrategyTable::from_map(
        depth,
        Kind::Supermartingale,
        parity,
        SidedTag::Unrestricted,
        values,
    )
}

/// Strategies on one two-bit block together with bounds they satisfy.
#[derive(Clone, Debug)]
pub struct BlockInstance {
    pub m: StrategyTable,
    pub n: StrategyTable,
    pub spec: BlockSpec,
}

/// Samples an instance meeting every hypothesis of the block inequality.
pub fn block_instance(g: &mut Gen, max_den: i64) -> Result<BlockInstance> {
    let c = if g.gen_bool(0.5) {
        Q::one()
    } else {
        rational_in(g, &q(1, 4), &int(3), 4)
    };
    let (m00, m10, n0, n1) = loop {
        let mut pick = || rational_in(g, &zero(), &c, max_den);
        let (m00, m10, n0, n1) = (pick(), pick(), pick(), pick());
        let need = m00.clone().max(m10.clone()) * half() + (&n0 + &n1) * half();
        if &m00 + &n0 >= c && &m10 + &n1 >= c && need <= c {
            break (m00, m10, n0, n1);
        }
    };
    let spec = BlockSpec::new(m00.clone(), m10.clone(), n0.clone(), n1.clone(), c.clone())?;
    let a_min = m00.clone().max(m10.clone()) * half();
    let b_min = (&n0 + &n1) * half();
    let slack = &c - &a_min - &b_min;
    let to_m = rational_in(g, &zero(), &slack, max_den);
    let a = &a_min + &to_m;
    let b = &b_min + rational_in(g, &zero(), &(&slack - &to_m), max_den);
    // M: no bet at λ, possibly lossy bets below
    let two_a = &a * int(2);
    let x00 = rational_in(g, &m00, &two_a, max_den);
    let x01 = rational_in(g, &zero(), &(&two_a - &x00), max_den);
    let x10 = rational_in(g, &m10, &two_a, max_den);
    let x11 = rational_in(g, &zero(), &(&two_a - &x10), max_den);
    let m = StrategyTable::from_pairs(
        Kind::Supermartingale,
        ParityTag::BetsOnOdd,
        &[
            ("", a.clone()),
            ("0", a.clone()),
            ("1", a),
            ("00", x00),
            ("01", x01),
            ("10", x10),
            ("11", x11),
        ],
    )?;
    let two_b = &b * int(2);
    let y0 = rational_in(g, &n0, &(&two_b - &n1), max_den);
    let y1 = rational_in(g, &n1, &(&two_b - &y0), max_den);
    let n = StrategyTable::from_pairs(
        Kind::Supermartingale,
        ParityTag::BetsOnEven,
        &[
            ("", b),
            ("0", y0.clone()),
            ("1", y1.clone()),
            ("00", y0.clone()),
            ("01", y0),
            ("10", y1.clone()),
            ("11", y1),
        ],
    )?;
    Ok(BlockInstance { m, n, spec })
}

/// A fractional program choosing its fraction by the last two bits.
pub fn frac_program(g: &mut Gen, parity: ParityTag, initial: Q) -> Result<BetProgram> {
    let mut table = BTreeMap::new();
    for s in BitString::all_of_length(2) {
        table.insert(s, fraction(g, 4, true));
    }
    let default = fraction(g, 4, true);
    BetProgram::fractional(
        initial,
        FracRule::ByLastBits {
            k: 2,
            table,
            default,
        },
        parity,
    )
}

/// A stage approximation with `count` random martingale components, each
/// entering at a stage in `0..=max_stage`, with total capital at λ equal to
/// `total`.
pub fn approx(
    g: &mut Gen,
    parity: ParityTag,
    count: usize,
    max_stage: u64,
    total: &Q,
) -> Result<StageApprox> {
    let mut components = Vec::with_capacity(count);
    for _ in 0..count {
        let stage = g.gen_range(0..=max_stage);
        let program = frac_program(g, parity, Q::one())?;
        components.push(Component {
            stage,
            weight: total / int(count as i64),
            program,
        });
    }
    StageApprox::new(Kind::Martingale, parity, SidedTag::Unrestricted, components)
}

/// A random finite-state integer adversary.
pub fn fsm_adversary(
    g: &mut Gen,
    name: &str,
    states: usize,
    max_wager: u64,
    capital: u64,
    parity: ParityTag,
    sided: SidedTag,
) -> Result<IntStrategy> {
    let states = (0..states)
        .map(|_| FsmState {
            wager: g.gen_range(0..=max_wager),
            outcome: g.gen_range(0..=1),
            next: [g.gen_range(0..states), g.gen_range(0..states)],
        })
        .collect();
    IntStrategy::new(
        name,
        BetProgram::fsm(capital, Fsm { start: 0, states }, parity, sided)?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::validate;

    #[test]
    fn samplers_are_valid_and_deterministic() {
        let mut g = rng(3);
        for parity in [
            ParityTag::BetsOnOdd,
            ParityTag::BetsOnEven,
            ParityTag::Unrestricted,
        ] {
            let m = martingale(&mut g, 6, parity, true).unwrap();
            assert!(validate(&m).valid());
            assert!(m.values().values().all(|v| *v > zero()));
            assert!(validate(&supermartingale(&mut g, 6, parity, 4).unwrap()).valid());
        }
        let a = block_instance(&mut rng(9), 8).unwrap();
        let b = block_instance(&mut rng(9), 8).unwrap();
        assert_eq!(a.m, b.m);
        assert!(validate(&a.m).valid() && validate(&a.n).valid());
        let adv = fsm_adversary(
            &mut g,
            "x",
            3,
            2,
            4,
            ParityTag::BetsOnEven,
            SidedTag::Unrestricted,
        )
        .unwrap();
        assert!(adv.program.is_finite_state());
    }
}
