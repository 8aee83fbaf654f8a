//! The online view of a parity-restricted strategy: a bet on the next bit of
//! one sequence conditional on the bits seen so far of the other.

use crate::bits::{interleave, BitString};
use crate::error::{Error, Result};
use crate::rational::{fmt_q, serde_q, Q};
use crate::table::{validate, Kind, ParityTag, SidedTag, StrategyTable};
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// `N(τ | σ)` for `|σ| = |τ| ≤ rounds`.
///
/// For a table betting at odd-length states the betting sequence is the one
/// at odd positions; for a table betting at even-length states it is the one
/// at even positions. `σ` is the other sequence in both cases.
#[derive(Clone, Debug, PartialEq)]
pub struct OnlineTable {
    pub rounds: usize,
    pub kind: Kind,
    pub parity: ParityTag,
    values: BTreeMap<(BitString, BitString), Q>,
}

#[derive(Serialize, Deserialize)]
struct OnlineEntry {
    sigma: BitString,
    tau: BitString,
    #[serde(with = "serde_q")]
    value: Q,
}

#[derive(Serialize, Deserialize)]
struct OnlineDoc {
    rounds: usize,
    kind: Kind,
    parity: ParityTag,
    entries: Vec<OnlineEntry>,
}

impl Serialize for OnlineTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        OnlineDoc {
            rounds: self.rounds,
            kind: self.kind,
            parity: self.parity,
            entries: self
                .values
                .iter()
                .map(|((sigma, tau), v)| OnlineEntry {
                    sigma: sigma.clone(),
                    tau: tau.clone(),
                    value: v.clone(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for OnlineTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = OnlineDoc::deserialize(d)?;
        let values = doc
            .entries
            .into_iter()
            .map(|e| ((e.sigma, e.tau), e.value))
            .collect();
        OnlineTable::new(doc.rounds, doc.kind, doc.parity, values).map_err(serde::de::Error::custom)
    }
}

fn merge(parity: ParityTag, sigma: &BitString, tau: &BitString) -> Result<BitString> {
    match parity {
        ParityTag::BetsOnOdd => interleave(sigma, tau),
        ParityTag::BetsOnEven => interleave(tau, sigma),
        ParityTag::Unrestricted => Err(Error::Untagged),
    }
}

impl OnlineTable {
    pub fn new(
        rounds: usize,
        kind: Kind,
        parity: ParityTag,
        values: BTreeMap<(BitString, BitString), Q>,
    ) -> Result<Self> {
        if parity == ParityTag::Unrestricted {
            return Err(Error::Untagged);
        }
        for k in 0..=rounds {
            for sigma in BitString::all_of_length(k) {
                for tau in BitString::all_of_length(k) {
                    if !values.contains_key(&(sigma.clone(), tau.clone())) {
                        return Err(Error::Structure(format!(
                            "missing online entry N({tau:?} | {sigma:?})"
                        )));
                    }
                }
            }
        }
        if values
            .keys()
            .any(|(s, t)| s.len() != t.len() || s.len() > rounds)
        {
            return Err(Error::Structure(
                "online entries need |sigma| = |tau| <= rounds".into(),
            ));
        }
        Ok(OnlineTable {
            rounds,
            kind,
            parity,
            values,
        })
    }

    pub fn get(&self, tau: &BitString, sigma: &BitString) -> Option<&Q> {
        self.values.get(&(sigma.clone(), tau.clone()))
    }

    pub fn entries(&self) -> &BTreeMap<(BitString, BitString), Q> {
        &self.values
    }

    /// First `(σ, τ)` where `N(τ̂0|σ) + N(τ̂1|σ)` exceeds (or, for a
    /// martingale, differs from) `2·N(τ̂|σ̂)`.
    pub fn law_violation(&self) -> Option<(BitString, BitString)> {
        for k in 1..=self.rounds {
            for sigma in BitString::all_of_length(k) {
                let sh = sigma.parent().unwrap_or_default();
                for th in BitString::all_of_length(k - 1) {
                    let lhs = &self.values[&(sigma.clone(), th.child(0))]
                        + &self.values[&(sigma.clone(), th.child(1))];
                    let rhs = &self.values[&(sh.clone(), th.clone())] * Q::from_integer(2.into());
                    let ok = match self.kind {
                        Kind::Martingale => lhs == rhs,
                        Kind::Supermartingale => lhs <= rhs,
                    };
                    if !ok {
                        return Some((sigma, th));
                    }
                }
            }
        }
        None
    }
}

/// Converts a parity-tagged table of even depth into its online form.
pub fn to_online(m: &StrategyTable) -> Result<OnlineTable> {
    if m.parity == ParityTag::Unrestricted {
        return Err(Error::Untagged);
    }
    if !m.depth().is_multiple_of(2) {
        return Err(Error::precondition(
            "online view needs an even table depth",
            m.depth(),
        ));
    }
    let d = validate(m);
    if !d.parity_holds {
        let w = match m.parity {
            ParityTag::BetsOnOdd => d.bets_on_odd.witness,
            _ => d.bets_on_even.witness,
        };
        return Err(Error::precondition(
            format!("table does not satisfy its {:?} tag", m.parity),
            format!("{:?}", w.unwrap_or_default()),
        ));
    }
    let rounds = m.depth() / 2;
    let mut values = BTreeMap::new();
    for k in 0..=rounds {
        for sigma in BitString::all_of_length(k) {
            for tau in BitString::all_of_length(k) {
                let v = m.value(&merge(m.parity, &sigma, &tau)?);
                values.insert((sigma.clone(), tau), v);
            }
        }
    }
    OnlineTable::new(rounds, m.kind, m.parity, values)
}

/// Inverse of [`to_online`]. Odd-length states take the value of the
/// neighbouring even-length state across the step on which no bet is placed.
pub fn from_online(n: &OnlineTable) -> Result<StrategyTable> {
    let depth = 2 * n.rounds;
    let split = |rho: &BitString| -> (BitString, BitString) {
        let (mut even, mut odd) = (BitString::empty(), BitString::empty());
        for (i, &b) in rho.bits().iter().enumerate() {
            if i % 2 == 0 {
                even.push(b)
            } else {
                odd.push(b)
            }
        }
        match n.parity {
            ParityTag::BetsOnOdd => (even, odd),
            _ => (odd, even),
        }
    };
    let lookup = |rho: &BitString| -> Q {
        let (sigma, tau) = split(rho);
        n.values.get(&(sigma, tau)).cloned().unwrap_or_else(Q::zero)
    };
    StrategyTable::from_fn(depth, n.kind, n.parity, SidedTag::Unrestricted, |rho| {
        if rho.len() % 2 == 0 {
            lookup(rho)
        } else {
            match n.parity {
                // the last step appended a bit of σ, on which no bet is placed
                ParityTag::BetsOnOdd => lookup(&rho.parent().unwrap_or_default()),
                // the next step appends a bit of σ, again without a bet
                _ => lookup(&rho.child(0)),
            }
        }
    })
}

/// Renders `N(τ|σ)` as a flat map keyed `"τ|σ"` for human-readable output.
pub fn describe(n: &OnlineTable) -> BTreeMap<String, String> {
    n.values
        .iter()
        .map(|((s, t), v)| (format!("{t}|{s}"), fmt_q(v)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bs;
    use crate::rational::int;

    fn odd_table() -> StrategyTable {
        StrategyTable::from_pairs(
            Kind::Martingale,
            ParityTag::BetsOnOdd,
            &[
                ("", int(1)),
                ("0", int(1)),
                ("1", int(1)),
                ("00", int(2)),
                ("01", int(0)),
                ("10", int(1)),
                ("11", int(1)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn unrolled_example() {
        let n = to_online(&odd_table()).unwrap();
        assert_eq!(n.get(&bs("0"), &bs("0")), Some(&int(2)));
        assert_eq!(n.get(&bs("1"), &bs("0")), Some(&int(0)));
        assert_eq!(n.get(&bs("0"), &bs("1")), Some(&int(1)));
        assert_eq!(n.get(&bs("1"), &bs("1")), Some(&int(1)));
        assert_eq!(n.get(&bs(""), &bs("")), Some(&int(1)));
        assert_eq!(n.law_violation(), None);
        assert_eq!(from_online(&n).unwrap(), odd_table());
    }

    #[test]
    fn untagged_is_rejected() {
        let m = odd_table().with_tags(
            Kind::Martingale,
            ParityTag::Unrestricted,
            SidedTag::Unrestricted,
        );
        assert!(matches!(to_online(&m), Err(Error::Untagged)));
    }

    #[test]
    fn even_betting_round_trip() {
        let m = StrategyTable::from_pairs(
            Kind::Martingale,
            ParityTag::BetsOnEven,
            &[
                ("", int(2)),
                ("0", int(3)),
                ("1", int(1)),
                ("00", int(3)),
                ("01", int(3)),
                ("10", int(1)),
                ("11", int(1)),
            ],
        )
        .unwrap();
        let n = to_online(&m).unwrap();
        assert_eq!(n.law_violation(), None);
        assert_eq!(from_online(&n).unwrap(), m);
    }
}
