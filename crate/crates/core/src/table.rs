//! Depth-bounded strategy tables, their tags, validation and algebra.

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::rational::{fmt_q, serde_q_map, Q};
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Martingale,
    Supermartingale,
}

/// Where a strategy is allowed to bet.
///
/// `BetsOnEven` strategies change value only when a bit is appended to an
/// even-length state; `BetsOnOdd` only at odd-length states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ParityTag {
    BetsOnEven,
    BetsOnOdd,
    #[default]
    Unrestricted,
}

impl ParityTag {
    /// Whether a bet may be placed at a state of length `len`.
    pub fn allows_bet_at(self, len: usize) -> bool {
        match self {
            ParityTag::BetsOnEven => len.is_multiple_of(2),
            ParityTag::BetsOnOdd => len % 2 == 1,
            ParityTag::Unrestricted => true,
        }
    }

    pub fn opposite(self) -> ParityTag {
        match self {
            ParityTag::BetsOnEven => ParityTag::BetsOnOdd,
            ParityTag::BetsOnOdd => ParityTag::BetsOnEven,
            ParityTag::Unrestricted => ParityTag::Unrestricted,
        }
    }
}

/// `ZeroSided` means `M(σ0) ≥ M(σ1)` everywhere, i.e. bets only ever favor 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SidedTag {
    ZeroSided,
    OneSided,
    #[default]
    Unrestricted,
}

impl SidedTag {
    pub fn allows_direction(self, toward: u8) -> bool {
        match self {
            SidedTag::ZeroSided => toward == 0,
            SidedTag::OneSided => toward == 1,
            SidedTag::Unrestricted => true,
        }
    }
}

/// A total map from `2^{≤depth}` to capital values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TableDoc", into = "TableDoc")]
pub struct StrategyTable {
    depth: usize,
    pub kind: Kind,
    pub parity: ParityTag,
    pub sided: SidedTag,
    values: BTreeMap<BitString, Q>,
}

/// Wire form of [`StrategyTable`]; may be partial until converted.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TableDoc {
    pub depth: usize,
    pub kind: Kind,
    #[serde(default)]
    pub parity: ParityTag,
    #[serde(default)]
    pub sided: SidedTag,
    #[serde(with = "serde_q_map")]
    pub values: BTreeMap<BitString, Q>,
}

impl TryFrom<TableDoc> for StrategyTable {
    type Error = Error;

    fn try_from(doc: TableDoc) -> Result<Self> {
        StrategyTable::from_map(doc.depth, doc.kind, doc.parity, doc.sided, doc.values)
    }
}

impl From<StrategyTable> for TableDoc {
    fn from(t: StrategyTable) -> Self {
        TableDoc {
            depth: t.depth,
            kind: t.kind,
            parity: t.parity,
            sided: t.sided,
            values: t.values,
        }
    }
}

impl StrategyTable {
    /// Builds a table, rejecting absent states, states deeper than `depth`
    /// and negative values.
    pub fn from_map(
        depth: usize,
        kind: Kind,
        parity: ParityTag,
        sided: SidedTag,
        values: BTreeMap<BitString, Q>,
    ) -> Result<Self> {
        if depth > 24 {
            return Err(Error::Structure(format!(
                "depth {depth} exceeds the table limit of 24"
            )));
        }
        if let Some(extra) = values.keys().find(|k| k.len() > depth) {
            return Err(Error::Structure(format!(
                "state {extra:?} is deeper than depth {depth}"
            )));
        }
        if let Some(missing) = BitString::all_up_to(depth).find(|s| !values.contains_key(s)) {
            return Err(Error::MissingState(missing));
        }
        if let Some((k, v)) = values.iter().find(|(_, v)| v.is_negative()) {
            return Err(Error::Structure(format!(
                "negative capital {} at {k:?}",
                fmt_q(v)
            )));
        }
        Ok(StrategyTable {
            depth,
            kind,
            parity,
            sided,
            values,
        })
    }

    /// Tabulates `f` on `2^{≤depth}`.
    pub fn from_fn(
        depth: usize,
        kind: Kind,
        parity: ParityTag,
        sided: SidedTag,
        mut f: impl FnMut(&BitString) -> Q,
    ) -> Result<Self> {
        let values = BitString::all_up_to(depth).map(|s| {
            let v = f(&s);
            (s, v)
        });
        StrategyTable::from_map(depth, kind, parity, sided, values.collect())
    }

    /// Convenience constructor from `(bits, value)` pairs; depth is inferred.
    pub fn from_pairs(kind: Kind, parity: ParityTag, pairs: &[(&str, Q)]) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (k, v) in pairs {
            values.insert(k.parse::<BitString>()?, v.clone());
        }
        let depth = values.keys().map(BitString::len).max().unwrap_or(0);
        StrategyTable::from_map(depth, kind, parity, SidedTag::Unrestricted, values)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Value at `σ` with `|σ| ≤ depth`.
    pub fn get(&self, sigma: &BitString) -> Option<&Q> {
        self.values.get(sigma)
    }

    /// Value at `σ`; states below the table depth read the value of their
    /// depth-level ancestor (no bets beyond the table).
    pub fn value(&self, sigma: &BitString) -> Q {
        if sigma.len() <= self.depth {
            self.values[sigma].clone()
        } else {
            self.values[&sigma.prefix(self.depth)].clone()
        }
    }

    pub fn values(&self) -> &BTreeMap<BitString, Q> {
        &self.values
    }

    pub fn into_values(self) -> BTreeMap<BitString, Q> {
        self.values
    }

    pub fn with_tags(mut self, kind: Kind, parity: ParityTag, sided: SidedTag) -> Self {
        self.kind = kind;
        self.parity = parity;
        self.sided = sided;
        self
    }

    /// Whether the table places a bet at interior state `σ`.
    pub fn bets_at(&self, sigma: &BitString) -> bool {
        sigma.len() < self.depth
            && (self.values[&sigma.child(0)] != self.values[sigma]
                || self.values[&sigma.child(1)] != self.values[sigma])
    }
}

/// Outcome of one exhaustive property scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub holds: bool,
    /// Lexicographically least state violating the property.
    pub witness: Option<BitString>,
}

impl Check {
    fn scan(
        states: impl Iterator<Item = BitString>,
        mut ok: impl FnMut(&BitString) -> bool,
    ) -> Check {
        for s in states {
            if !ok(&s) {
                return Check {
                    holds: false,
                    witness: Some(s),
                };
            }
        }
        Check {
            holds: true,
            witness: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub property: String,
    pub state: BitString,
}

/// Result of [`validate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnosis {
    pub nonnegative: Check,
    pub martingale: Check,
    pub supermartingale: Check,
    /// No bets at odd-length states.
    pub bets_on_even: Check,
    /// No bets at even-length states.
    pub bets_on_odd: Check,
    pub zero_sided: Check,
    pub one_sided: Check,
    pub zero_propagation: Check,
    pub kind_holds: bool,
    pub parity_holds: bool,
    pub sided_holds: bool,
    pub first_violation: Option<Violation>,
}

impl Diagnosis {
    /// True when the table satisfies its declared kind and tags.
    pub fn valid(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Scans every state of the table and reports which laws and tags hold.
pub fn validate(table: &StrategyTable) -> Diagnosis {
    let v = &table.values;
    // lexicographic order over all states, as BTreeMap keys iterate
    let all = || v.keys().cloned();
    let interior = || v.keys().filter(|s| s.len() < table.depth).cloned();
    let kids = |s: &BitString| (&v[&s.child(0)], &v[&s.child(1)]);

    let nonnegative = Check::scan(all(), |s| !v[s].is_negative());
    let martingale = Check::scan(interior(), |s| {
        let (a, b) = kids(s);
        a + b == &v[s] * Q::from_integer(2.into())
    });
    let supermartingale = Check::scan(interior(), |s| {
        let (a, b) = kids(s);
        a + b <= &v[s] * Q::from_integer(2.into())
    });
    let no_bet = |s: &BitString| {
        let (a, b) = kids(s);
        a == &v[s] && b == &v[s]
    };
    let bets_on_even = Check::scan(interior(), |s| s.len() % 2 == 0 || no_bet(s));
    let bets_on_odd = Check::scan(interior(), |s| s.len() % 2 == 1 || no_bet(s));
    let zero_sided = Check::scan(interior(), |s| {
        let (a, b) = kids(s);
        a >= b
    });
    let one_sided = Check::scan(interior(), |s| {
        let (a, b) = kids(s);
        b >= a
    });
    let zero_propagation = Check::scan(interior(), |s| {
        !v[s].is_zero() || {
            let (a, b) = kids(s);
            a.is_zero() && b.is_zero()
        }
    });

    let kind_check = match table.kind {
        Kind::Martingale => &martingale,
        Kind::Supermartingale => &supermartingale,
    };
    let parity_check = match table.parity {
        ParityTag::BetsOnEven => Some(&bets_on_even),
        ParityTag::BetsOnOdd => Some(&bets_on_odd),
        ParityTag::Unrestricted => None,
    };
    let sided_check = match table.sided {
        SidedTag::ZeroSided => Some(&zero_sided),
        SidedTag::OneSided => Some(&one_sided),
        SidedTag::Unrestricted => None,
    };
    let mut declared: Vec<(&str, &Check)> = vec![
        ("nonnegative", &nonnegative),
        (
            match table.kind {
                Kind::Martingale => "martingale",
                Kind::Supermartingale => "supermartingale",
            },
            kind_check,
        ),
        ("zero_propagation", &zero_propagation),
    ];
    if let Some(c) = parity_check {
        declared.push((
            if table.parity == ParityTag::BetsOnEven {
                "bets_on_even"
            } else {
                "bets_on_odd"
            },
            c,
        ));
    }
    if let Some(c) = sided_check {
        declared.push((
            if table.sided == SidedTag::ZeroSided {
                "zero_sided"
            } else {
                "one_sided"
            },
            c,
        ));
    }
    let first_violation = declared
        .iter()
        .filter_map(|(name, c)| c.witness.clone().map(|w| (w, *name)))
        .min()
        .map(|(state, name)| Violation {
            property: name.to_string(),
            state,
        });

    Diagnosis {
        kind_holds: kind_check.holds,
        parity_holds: parity_check.is_none_or(|c| c.holds),
        sided_holds: sided_check.is_none_or(|c| c.holds),
        nonnegative,
        martingale,
        supermartingale,
        bets_on_even,
        bets_on_odd,
        zero_sided,
        one_sided,
        zero_propagation,
        first_violation,
    }
}

fn shared<T: Copy + PartialEq>(tags: impl Iterator<Item = T>, fallback: T) -> T {
    let mut it = tags;
    match it.next() {
        None => fallback,
        Some(first) => {
            if it.all(|t| t == first) {
                first
            } else {
                fallback
            }
        }
    }
}

/// Pointwise weighted sum of equal-depth tables.
pub fn combine(items: &[(Q, &StrategyTable)]) -> Result<StrategyTable> {
    let first = items
        .first()
        .ok_or_else(|| Error::Structure("combine needs at least one input".into()))?
        .1;
    for (w, t) in items {
        if w.is_negative() {
            return Err(Error::NegativeWeight(fmt_q(w)));
        }
        if t.depth != first.depth {
            return Err(Error::DepthMismatch {
                left: first.depth,
                right: t.depth,
            });
        }
    }
    let kind = if items.iter().any(|(_, t)| t.kind == Kind::Supermartingale) {
        Kind::Supermartingale
    } else {
        Kind::Martingale
    };
    let parity = shared(items.iter().map(|(_, t)| t.parity), ParityTag::Unrestricted);
    let sided = shared(items.iter().map(|(_, t)| t.sided), SidedTag::Unrestricted);
    StrategyTable::from_fn(first.depth, kind, parity, sided, |s| {
        items
            .iter()
            .map(|(w, t)| w * &t.values[s])
            .fold(Q::zero(), |a, b| a + b)
    })
}

/// Pointwise product of two martingales that never bet at the same state.
pub fn product(a: &StrategyTable, b: &StrategyTable) -> Result<StrategyTable> {
    if a.depth != b.depth {
        return Err(Error::DepthMismatch {
            left: a.depth,
            right: b.depth,
        });
    }
    for (t, name) in [(a, "left"), (b, "right")] {
        if t.kind != Kind::Martingale {
            return Err(Error::precondition(
                format!("{name} factor must be a martingale"),
                "kind",
            ));
        }
        if let Some(w) = validate(t).martingale.witness {
            return Err(Error::NotMartingale(w));
        }
    }
    if let Some(s) = BitString::all_up_to(a.depth.saturating_sub(1))
        .filter(|s| s.len() < a.depth)
        .find(|s| a.bets_at(s) && b.bets_at(s))
    {
        return Err(Error::SharedBettingLevel(s));
    }
    StrategyTable::from_fn(
        a.depth,
        Kind::Martingale,
        ParityTag::Unrestricted,
        SidedTag::Unrestricted,
        |s| &a.values[s] * &b.values[s],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bs;
    use crate::rational::{int, q};

    fn t(kind: Kind, parity: ParityTag, pairs: &[(&str, Q)]) -> StrategyTable {
        StrategyTable::from_pairs(kind, parity, pairs).unwrap()
    }

    #[test]
    fn validate_even_betting_martingale() {
        let m = t(
            Kind::Martingale,
            ParityTag::BetsOnEven,
            &[("", int(1)), ("0", q(3, 2)), ("1", q(1, 2))],
        );
        let d = validate(&m);
        assert!(d.martingale.holds && d.valid());
        assert!(d.bets_on_even.holds);
        assert_eq!(d.bets_on_odd.witness, Some(bs("")));
    }

    #[test]
    fn validate_strict_supermartingale() {
        let m = t(
            Kind::Martingale,
            ParityTag::Unrestricted,
            &[("", int(1)), ("0", int(1)), ("1", int(0))],
        );
        let d = validate(&m);
        assert!(!d.martingale.holds);
        assert!(d.supermartingale.holds);
        assert_eq!(d.first_violation.unwrap().state, bs(""));
        let s = m.with_tags(
            Kind::Supermartingale,
            ParityTag::Unrestricted,
            SidedTag::ZeroSided,
        );
        assert!(validate(&s).valid());
    }

    #[test]
    fn validate_odd_betting_martingale() {
        let m = t(
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
        );
        let d = validate(&m);
        assert!(d.valid());
        assert!(d.bets_on_odd.holds);
        assert_eq!(d.bets_on_even.witness, Some(bs("0")));
    }

    #[test]
    fn missing_state_is_structural() {
        let mut values = BTreeMap::new();
        values.insert(bs(""), int(1));
        values.insert(bs("0"), int(1));
        let err = StrategyTable::from_map(
            1,
            Kind::Martingale,
            ParityTag::Unrestricted,
            SidedTag::Unrestricted,
            values,
        )
        .unwrap_err();
        assert!(matches!(err, Error::MissingState(s) if s == bs("1")));
    }

    #[test]
    fn zero_propagation_is_enforced() {
        let m = t(
            Kind::Supermartingale,
            ParityTag::Unrestricted,
            &[("", int(0)), ("0", int(0)), ("1", int(0))],
        );
        assert!(validate(&m).valid());
        let bad = StrategyTable::from_pairs(
            Kind::Supermartingale,
            ParityTag::Unrestricted,
            &[
                ("", int(1)),
                ("0", int(0)),
                ("1", int(1)),
                ("00", int(1)),
                ("01", int(0)),
                ("10", int(1)),
                ("11", int(1)),
            ],
        )
        .unwrap();
        let d = validate(&bad);
        assert_eq!(d.zero_propagation.witness, Some(bs("0")));
        assert!(!d.valid());
    }

    #[test]
    fn combine_examples() {
        let m = t(
            Kind::Martingale,
            ParityTag::BetsOnEven,
            &[("", int(1)), ("0", q(3, 2)), ("1", q(1, 2))],
        );
        let half = combine(&[(q(1, 2), &m), (q(1, 2), &m)]).unwrap();
        assert_eq!(half, m);

        let c = t(
            Kind::Martingale,
            ParityTag::BetsOnOdd,
            &[("", int(1)), ("0", int(1)), ("1", int(1))],
        );
        let mix = combine(&[(q(1, 4), &m), (q(1, 8), &c)]).unwrap();
        assert_eq!(mix.value(&bs("")), q(3, 8));
        assert_eq!(mix.parity, ParityTag::Unrestricted);
        assert!(validate(&mix).valid());

        let deep = t(
            Kind::Martingale,
            ParityTag::Unrestricted,
            &[
                ("", int(1)),
                ("0", int(1)),
                ("1", int(1)),
                ("00", int(1)),
                ("01", int(1)),
                ("10", int(1)),
                ("11", int(1)),
            ],
        );
        assert!(matches!(
            combine(&[(int(1), &m), (int(1), &deep)]),
            Err(Error::DepthMismatch { .. })
        ));
        assert!(matches!(
            combine(&[(int(-1), &m)]),
            Err(Error::NegativeWeight(_))
        ));
    }

    #[test]
    fn product_examples() {
        let o = t(
            Kind::Martingale,
            ParityTag::BetsOnEven,
            &[("", int(1)), ("0", q(3, 2)), ("1", q(1, 2))],
        );
        let one = t(
            Kind::Martingale,
            ParityTag::BetsOnOdd,
            &[("", int(1)), ("0", int(1)), ("1", int(1))],
        );
        let p = product(&one, &o).unwrap();
        assert_eq!(p.values(), o.values());
        assert!(matches!(product(&o, &o), Err(Error::SharedBettingLevel(s)) if s == bs("")));
    }
}
