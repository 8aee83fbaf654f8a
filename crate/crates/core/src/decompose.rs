//! Parity product decomposition and the canonical decompositions of a
//! two-bit block.

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::rational::{fmt_q, half, one, serde_q, zero, Q};
use crate::table::{validate, Kind, ParityTag, SidedTag, StrategyTable};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

/// Lower bounds on a two-bit block and the joint threshold `c`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpec {
    #[serde(with = "serde_q")]
    pub m00: Q,
    #[serde(with = "serde_q")]
    pub m10: Q,
    #[serde(with = "serde_q")]
    pub n0: Q,
    #[serde(with = "serde_q")]
    pub n1: Q,
    #[serde(with = "serde_q", default = "one")]
    pub c: Q,
}

impl BlockSpec {
    pub fn new(m00: Q, m10: Q, n0: Q, n1: Q, c: Q) -> Result<Self> {
        for (name, v) in [
            ("m00", &m00),
            ("m10", &m10),
            ("n0", &n0),
            ("n1", &n1),
            ("c", &c),
        ] {
            if v.is_negative() {
                return Err(Error::precondition(
                    format!("{name} must be non-negative"),
                    fmt_q(v),
                ));
            }
        }
        Ok(BlockSpec {
            m00,
            m10,
            n0,
            n1,
            c,
        })
    }
}

fn require_martingale(m: &StrategyTable, what: &str) -> Result<()> {
    if m.kind != Kind::Martingale {
        return Err(Error::precondition(
            format!("{what} must be declared a martingale"),
            format!("{:?}", m.kind),
        ));
    }
    let d = validate(m);
    if let Some(w) = d.nonnegative.witness {
        return Err(Error::precondition(
            format!("{what} must be non-negative"),
            format!("{w:?}"),
        ));
    }
    if let Some(w) = d.martingale.witness {
        return Err(Error::NotMartingale(w));
    }
    Ok(())
}

fn ratio(num: &Q, den: &Q) -> Q {
    if den.is_zero() {
        Q::one()
    } else {
        num / den
    }
}

/// Splits a martingale into `M(λ)·E·O`, where `E` collects the steps taken
/// from odd-length states and `O` those taken from even-length states.
///
/// Returns `(E, O)`; `E` bets only at odd-length states and `O` only at
/// even-length states, both with value 1 at λ. Below a state of value 0 the
/// step ratios are taken to be 1, so a factor that reached 0 stays there and
/// the other factor stops moving.
pub fn parity_factorize(m: &StrategyTable) -> Result<(StrategyTable, StrategyTable)> {
    require_martingale(m, "input")?;
    if let Some(w) = validate(m).zero_propagation.witness {
        return Err(Error::precondition(
            "zero value with a non-zero descendant",
            format!("{w:?}"),
        ));
    }
    let factor = |bets_at_odd: bool| {
        let parity = if bets_at_odd {
            ParityTag::BetsOnOdd
        } else {
            ParityTag::BetsOnEven
        };
        StrategyTable::from_fn(
            m.depth(),
            Kind::Martingale,
            parity,
            SidedTag::Unrestricted,
            |s| {
                let mut v = Q::one();
                for i in 0..s.len() {
                    if (i % 2 == 1) == bets_at_odd {
                        v *= ratio(&m.value(&s.prefix(i + 1)), &m.value(&s.prefix(i)));
                    }
                }
                v
            },
        )
    };
    Ok((factor(true)?, factor(false)?))
}

/// The least martingale betting at odd-length states on `2^{≤2}` with
/// `M0(00) = m00` and `M0(10) = m10`.
pub fn block_min_even(m00: &Q, m10: &Q) -> Result<StrategyTable> {
    if m00.is_negative() || m10.is_negative() {
        return Err(Error::precondition(
            "block values must be non-negative",
            format!("({}, {})", fmt_q(m00), fmt_q(m10)),
        ));
    }
    let top = if m00 >= m10 { m00.clone() } else { m10.clone() };
    let root = &top * half();
    let (v01, v11) = if m00 >= m10 {
        (zero(), m00 - m10)
    } else {
        (m10 - m00, zero())
    };
    StrategyTable::from_fn(
        2,
        Kind::Martingale,
        ParityTag::BetsOnOdd,
        SidedTag::Unrestricted,
        |s| match s.to_string().as_str() {
            "00" => m00.clone(),
            "10" => m10.clone(),
            "01" => v01.clone(),
            "11" => v11.clone(),
            _ => root.clone(),
        },
    )
}

/// The martingale on `2^{≤2}` betting only at λ with `N0(0) = n0`,
/// `N0(1) = n1`.
pub fn block_first_bit(n0: &Q, n1: &Q) -> Result<StrategyTable> {
    StrategyTable::from_fn(
        2,
        Kind::Martingale,
        ParityTag::BetsOnEven,
        SidedTag::Unrestricted,
        |s| match s.len() {
            0 => (n0 + n1) * half(),
            _ if s.bit(0) == 0 => n0.clone(),
            _ => n1.clone(),
        },
    )
}

/// `M = M0 + D_M` and `N = N0 + D_N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockDecomposition {
    pub m0: StrategyTable,
    pub n0: StrategyTable,
    pub d_m: StrategyTable,
    pub d_n: StrategyTable,
}

fn difference(a: &StrategyTable, b: &StrategyTable, what: &str) -> Result<StrategyTable> {
    let mut bad: Option<BitString> = None;
    let t = StrategyTable::from_fn(
        a.depth(),
        Kind::Martingale,
        a.parity,
        SidedTag::Unrestricted,
        |s| {
            let v = a.value(s) - b.value(s);
            if v.is_negative() && bad.is_none() {
                bad = Some(s.clone());
            }
            v.max(zero())
        },
    );
    match bad {
        Some(w) => Err(Error::precondition(
            format!("{what} lies below its canonical part"),
            format!("{w:?}"),
        )),
        None => t,
    }
}

/// Decomposes a pair of two-bit block martingales against a [`BlockSpec`].
pub fn block_decompose(
    m: &StrategyTable,
    n: &StrategyTable,
    spec: &BlockSpec,
) -> Result<BlockDecomposition> {
    for (t, name, tag) in [
        (m, "M", ParityTag::BetsOnOdd),
        (n, "N", ParityTag::BetsOnEven),
    ] {
        if t.depth() != 2 {
            return Err(Error::precondition(
                format!("{name} must have depth 2"),
                t.depth(),
            ));
        }
        require_martingale(t, name)?;
        let d = validate(
            &t.clone()
                .with_tags(Kind::Martingale, tag, SidedTag::Unrestricted),
        );
        if !d.parity_holds {
            return Err(Error::precondition(
                format!("{name} must satisfy {tag:?}"),
                name,
            ));
        }
    }
    let checks = [
        ("M(00) >= m00", m.value(&"00".parse()?), &spec.m00, "00"),
        ("M(10) >= m10", m.value(&"10".parse()?), &spec.m10, "10"),
        ("N(0) >= n0", n.value(&"0".parse()?), &spec.n0, "0"),
        ("N(1) >= n1", n.value(&"1".parse()?), &spec.n1, "1"),
    ];
    for (what, have, need, at) in checks {
        if &have < need {
            return Err(Error::precondition(
                what,
                format!("{at}: {} < {}", fmt_q(&have), fmt_q(need)),
            ));
        }
    }
    let m0 = block_min_even(&spec.m00, &spec.m10)?;
    let n0 = block_first_bit(&spec.n0, &spec.n1)?;
    let d_m = difference(m, &m0, "M")?;
    let d_n = difference(n, &n0, "N")?;
    Ok(BlockDecomposition { m0, n0, d_m, d_n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bs;
    use crate::rational::{int, q};
    use crate::table::product;

    #[test]
    fn factorize_example() {
        let m = StrategyTable::from_pairs(
            Kind::Martingale,
            ParityTag::Unrestricted,
            &[
                ("", int(1)),
                ("0", q(3, 2)),
                ("1", q(1, 2)),
                ("00", q(3, 2)),
                ("01", q(3, 2)),
                ("10", int(1)),
                ("11", int(0)),
            ],
        )
        .unwrap();
        let (e, o) = parity_factorize(&m).unwrap();
        assert_eq!(o.value(&bs("0")), q(3, 2));
        assert_eq!(o.value(&bs("1")), q(1, 2));
        assert_eq!(o.value(&bs("10")), q(1, 2));
        assert_eq!(e.value(&bs("00")), int(1));
        assert_eq!(e.value(&bs("01")), int(1));
        assert_eq!(e.value(&bs("10")), int(2));
        assert_eq!(e.value(&bs("11")), int(0));
        assert!(validate(&e).valid() && validate(&o).valid());
        assert_eq!(product(&e, &o).unwrap().values(), m.values());
    }

    #[test]
    fn block_min_even_examples() {
        let t = block_min_even(&int(4), &int(2)).unwrap();
        let want = [
            ("", 2),
            ("0", 2),
            ("1", 2),
            ("00", 4),
            ("01", 0),
            ("10", 2),
            ("11", 2),
        ];
        for (s, v) in want {
            assert_eq!(t.value(&bs(s)), int(v), "{s}");
        }
        let t = block_min_even(&int(1), &int(3)).unwrap();
        assert_eq!(t.value(&bs("")), q(3, 2));
        assert_eq!(t.value(&bs("01")), int(2));
        assert_eq!(t.value(&bs("11")), int(0));
        assert!(validate(&t).valid());
        assert!(block_min_even(&int(0), &int(0))
            .unwrap()
            .values()
            .values()
            .all(Zero::is_zero));
    }

    #[test]
    fn block_decompose_example() {
        let m = StrategyTable::from_pairs(
            Kind::Martingale,
            ParityTag::BetsOnOdd,
            &[
                ("", q(3, 4)),
                ("0", q(3, 4)),
                ("1", q(3, 4)),
                ("00", q(5, 4)),
                ("01", q(1, 4)),
                ("10", q(11, 8)),
                ("11", q(1, 8)),
            ],
        )
        .unwrap();
        let n = block_first_bit(&q(1, 8), &q(3, 8)).unwrap();
        let spec = BlockSpec::new(q(5, 4), q(11, 8), q(1, 8), q(3, 8), int(1)).unwrap();
        let d = block_decompose(&m, &n, &spec).unwrap();
        assert_eq!(d.m0.value(&bs("")), q(11, 16));
        assert_eq!(d.d_m.value(&bs("")), q(1, 16));
        assert!(d.d_n.values().values().all(Zero::is_zero));
        assert!(validate(&d.d_m).valid());
        let spec_bad = BlockSpec::new(q(3, 2), q(11, 8), q(1, 8), q(3, 8), int(1)).unwrap();
        assert!(block_decompose(&m, &n, &spec_bad).is_err());
    }
}
