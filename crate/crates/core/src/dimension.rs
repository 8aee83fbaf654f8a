//! s-tests, strategies built from a ½-test, and growth-rate exponents.

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::parity_casino::{Flavor, TestArray};
use crate::program::{BetProgram, Component, Evaluator, FracRule, StageApprox};
use crate::rational::{fmt_q, int, pow2, serde_q, serde_q_map, zero, Q};
use crate::table::{Kind, ParityTag, SidedTag};
use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Exact comparison outcome; general exponents may stay undecided.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    Undecided,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelVerdict {
    pub level: usize,
    pub members: usize,
    /// The weight `Σ 2^{-s|σ|}` written as `a + b·√2` when `s` has
    /// denominator at most 2, otherwise as an approximation.
    pub weight: String,
    #[serde(with = "serde_q")]
    pub bound: Q,
    pub verdict: Verdict,
}

/// The `s` of an s-test array.
pub fn test_exponent(t: &TestArray) -> Result<Q> {
    match &t.flavor {
        Flavor::STest { s } => Ok(s.clone()),
        Flavor::Block34 => Err(Error::Structure("not an s-test array".into())),
    }
}

/// Rational bounds `lo ≤ 2^{-e/b} ≤ hi` with `prec` fractional bits.
fn root_bounds(e: &BigUint, b: u32, prec: u32) -> (Q, Q) {
    // 2^{-e/b} = (2^{b·prec − e})^{1/b} / 2^prec when b·prec ≥ e
    let shift = BigInt::from(b) * BigInt::from(prec) - BigInt::from(e.clone());
    let scale = pow2(prec as i64);
    if shift.is_negative() {
        return (zero(), Q::one() / scale);
    }
    let radicand = BigUint::one() << shift.to_u64().unwrap_or(0);
    let r = radicand.nth_root(b);
    let lo = Q::from_integer(BigInt::from(r.clone())) / &scale;
    let hi = Q::from_integer(BigInt::from(r + 1u32)) / &scale;
    (lo, hi)
}

/// Checks `Σ_{σ ∈ V_k} 2^{-s|σ|} < 2^{-k}` level by level.
pub fn validate_s_test(t: &TestArray, s: &Q) -> Result<Vec<LevelVerdict>> {
    if !s.is_positive() || s > &Q::one() {
        return Err(Error::precondition("s must lie in (0, 1]", fmt_q(s)));
    }
    let a = s.numer().to_biguint().expect("positive");
    let b = s
        .denom()
        .to_u32()
        .ok_or_else(|| Error::Unsupported("exponent denominator too large".into()))?;
    let mut out = Vec::new();
    for (i, level) in t.levels.iter().enumerate() {
        let k = t.first_level + i;
        let bound = pow2(-(k as i64));
        // exponents e = a·|σ|; term 2^{-e/b}
        let exps: Vec<BigUint> = level.iter().map(|x| &a * BigUint::from(x.len())).collect();
        let (weight, verdict) = if b == 1 {
            let w = exps
                .iter()
                .map(|e| pow2(-(e.to_i64().unwrap_or(i64::MAX))))
                .fold(zero(), |x, y| x + y);
            let v = if w < bound {
                Verdict::Holds
            } else {
                Verdict::Fails
            };
            (fmt_q(&w), v)
        } else if b == 2 {
            // 2^{-e/2} is rational for even e and 2^{-(e+1)/2}·√2 for odd e
            let (mut ra, mut rb) = (zero(), zero());
            for e in &exps {
                let e = e.to_i64().unwrap_or(i64::MAX);
                if e % 2 == 0 {
                    ra += pow2(-e / 2);
                } else {
                    rb += pow2(-(e + 1) / 2);
                }
            }
            let gap = &bound - &ra;
            let v = if !gap.is_positive() {
                Verdict::Fails
            } else if rb.is_zero() || int(2) * &rb * &rb < &gap * &gap {
                Verdict::Holds
            } else {
                Verdict::Fails
            };
            let w = if rb.is_zero() {
                fmt_q(&ra)
            } else {
                format!("{} + {}*sqrt(2)", fmt_q(&ra), fmt_q(&rb))
            };
            (w, v)
        } else {
            let mut verdict = Verdict::Undecided;
            let mut approx = String::new();
            for prec in [64u32, 128, 256, 512] {
                let (lo, hi) = exps
                    .iter()
                    .map(|e| root_bounds(e, b, prec))
                    .fold((zero(), zero()), |(l, h), (x, y)| (l + x, h + y));
                approx = format!(
                    "[{}, {}]",
                    crate::rational::to_f64(&lo),
                    crate::rational::to_f64(&hi)
                );
                if hi < bound {
                    verdict = Verdict::Holds;
                    break;
                }
                if lo >= bound {
                    verdict = Verdict::Fails;
                    break;
                }
            }
            (approx, verdict)
        };
        out.push(LevelVerdict {
            level: k,
            members: level.len(),
            weight,
            bound,
            verdict,
        });
    }
    Ok(out)
}

/// Levels `k` such that `x` has a prefix in `V_k`.
pub fn weak_s_random_check(x: &BitString, t: &TestArray) -> Vec<usize> {
    t.levels
        .iter()
        .enumerate()
        .filter(|(_, l)| l.iter().any(|s| s.is_prefix_of(x)))
        .map(|(i, _)| t.first_level + i)
        .collect()
}

/// The all-in strategy toward `σ`: doubles at every proper prefix of the
/// given parity, starting from the capital that makes it end at exactly 1.
pub fn all_in_unit(sigma: &BitString, parity: ParityTag) -> Result<BetProgram> {
    let bets = match parity {
        ParityTag::BetsOnEven => sigma.len().div_ceil(2),
        _ => sigma.len() / 2,
    };
    BetProgram::fractional(
        pow2(-(bets as i64)),
        FracRule::AllInToward {
            target: sigma.clone(),
        },
        parity,
    )
}

/// `(N, T)`: sums of the unit all-in strategies over the members of a
/// ½-test; `N` bets at even-length states, `T` at odd-length states. Members
/// of level `i` enter at stage `i`.
pub fn strategies_from_test(t: &TestArray) -> Result<(StageApprox, StageApprox)> {
    let s = test_exponent(t)?;
    if s != crate::rational::half() {
        return Err(Error::precondition(
            "strategies are built from a 1/2-test",
            fmt_q(&s),
        ));
    }
    let verdicts = validate_s_test(t, &s)?;
    if let Some(v) = verdicts.iter().find(|v| v.verdict != Verdict::Holds) {
        return Err(Error::precondition(
            "test weight inequality fails",
            format!("level {}", v.level),
        ));
    }
    let build = |parity| -> Result<StageApprox> {
        let mut comps = Vec::new();
        for (i, level) in t.levels.iter().enumerate() {
            for sigma in level {
                comps.push(Component {
                    stage: i as u64,
                    weight: Q::one(),
                    program: all_in_unit(sigma, parity)?,
                });
            }
        }
        StageApprox::new(Kind::Martingale, parity, SidedTag::Unrestricted, comps)
    };
    Ok((build(ParityTag::BetsOnEven)?, build(ParityTag::BetsOnOdd)?))
}

/// Exact `r + Σ c_k·log2(k)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymLog {
    #[serde(with = "serde_q")]
    pub rational: Q,
    #[serde(with = "serde_q_map")]
    pub log2: BTreeMap<String, Q>,
}

const SMALL_PRIMES_UP_TO: u32 = 1000;

fn factor(n: &BigUint) -> Vec<(BigUint, i64)> {
    let mut n = n.clone();
    let mut out = Vec::new();
    let mut p = 2u32;
    while p <= SMALL_PRIMES_UP_TO && n > BigUint::one() {
        let mut e = 0;
        while (&n % p).is_zero() {
            n /= p;
            e += 1;
        }
        if e > 0 {
            out.push((BigUint::from(p), e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > BigUint::one() {
        // unfactored cofactor kept as its own logarithm
        out.push((n, 1));
    }
    out
}

impl SymLog {
    /// `log2 v` for positive rational `v`.
    pub fn log2_of(v: &Q) -> SymLog {
        let mut rational = zero();
        let mut terms: BTreeMap<BigUint, Q> = BTreeMap::new();
        for (part, sign) in [(v.numer(), 1i64), (v.denom(), -1)] {
            for (p, e) in factor(&part.magnitude().clone()) {
                if p == BigUint::from(2u32) {
                    rational += int(sign * e);
                } else {
                    *terms.entry(p).or_insert_with(zero) += int(sign * e);
                }
            }
        }
        SymLog {
            rational,
            log2: terms
                .into_iter()
                .filter(|(_, c)| !c.is_zero())
                .map(|(k, c)| (k.to_string(), c))
                .collect(),
        }
    }

    pub fn scale(&self, f: &Q) -> SymLog {
        SymLog {
            rational: &self.rational * f,
            log2: self
                .log2
                .iter()
                .map(|(k, c)| (k.clone(), c * f))
                .filter(|(_, c)| !c.is_zero())
                .collect(),
        }
    }

    pub fn add_rational(&self, r: &Q) -> SymLog {
        SymLog {
            rational: &self.rational + r,
            log2: self.log2.clone(),
        }
    }

    pub fn approx(&self) -> f64 {
        let mut v = crate::rational::to_f64(&self.rational);
        for (k, c) in &self.log2 {
            let n: BigUint = k.parse().unwrap_or_default();
            v += crate::rational::to_f64(c) * log2_big(&n);
        }
        v
    }

    /// `log2(3)/2`.
    pub fn log2_sqrt3() -> SymLog {
        SymLog {
            rational: zero(),
            log2: [("3".to_string(), crate::rational::half())].into(),
        }
    }
}

impl std::fmt::Display for SymLog {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut first = true;
        if !self.rational.is_zero() || self.log2.is_empty() {
            write!(f, "{}", fmt_q(&self.rational))?;
            first = false;
        }
        for (k, c) in &self.log2 {
            let (sign, mag) = if c.is_negative() {
                ("-", -c)
            } else {
                ("+", c.clone())
            };
            match (first, sign) {
                (true, "+") => {}
                (true, _) => write!(f, "-")?,
                _ => write!(f, " {sign} ")?,
            }
            if mag.is_one() {
                write!(f, "log2({k})")?;
            } else {
                write!(f, "{}*log2({k})", fmt_q(&mag))?;
            }
            first = false;
        }
        Ok(())
    }
}

fn log2_big(n: &BigUint) -> f64 {
    let bits = n.bits();
    let shift = bits.saturating_sub(60);
    let top = (n >> shift).to_f64().unwrap_or(f64::NAN);
    top.log2() + shift as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub n: usize,
    #[serde(with = "serde_q")]
    pub value: Q,
    /// `1 − log2(value)/n`; absent for a zero value (exponent +∞).
    pub s_hat: Option<SymLog>,
    pub s_hat_text: String,
    pub approx: Option<f64>,
    /// `[1 − (⌊log2 v⌋+1)/n, 1 − ⌊log2 v⌋/n]`.
    pub bracket: Option<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimReport {
    pub samples: Vec<Sample>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    /// The common exact exponent over all even `n`, if there is one.
    pub common_even: Option<SymLog>,
    pub zero_at: Option<usize>,
}

/// Growth exponents of `m` along the prefixes of `x`.
pub fn empirical_dim_bound(m: &dyn Evaluator, x: &BitString) -> DimReport {
    let mut samples = Vec::new();
    let mut zero_at = None;
    for n in 1..=x.len() {
        let v = m.value(&x.prefix(n));
        let nq = int(n as i64);
        if v.is_zero() {
            zero_at.get_or_insert(n);
            samples.push(Sample {
                n,
                value: v,
                s_hat: None,
                s_hat_text: "+inf".into(),
                approx: None,
                bracket: None,
            });
            continue;
        }
        let s = SymLog::log2_of(&v)
            .scale(&(-Q::one() / &nq))
            .add_rational(&Q::one());
        let fl = int(crate::rational::floor_log2(&v));
        let lo = Q::one() - (&fl + Q::one()) / &nq;
        let hi = Q::one() - &fl / &nq;
        samples.push(Sample {
            n,
            value: v,
            s_hat_text: s.to_string(),
            approx: Some(s.approx()),
            s_hat: Some(s),
            bracket: Some((fmt_q(&lo), fmt_q(&hi))),
        });
    }
    let approx: Vec<f64> = samples.iter().filter_map(|s| s.approx).collect();
    let evens: Vec<&Sample> = samples.iter().filter(|s| s.n % 2 == 0).collect();
    let common_even = match evens.first().and_then(|s| s.s_hat.clone()) {
        Some(first) if evens.iter().all(|s| s.s_hat.as_ref() == Some(&first)) => Some(first),
        _ => None,
    };
    DimReport {
        min: approx.iter().copied().reduce(f64::min),
        max: approx.iter().copied().reduce(f64::max),
        samples,
        common_even,
        zero_at,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bs;
    use crate::rational::{half, q};

    fn stest(levels: &[&[&str]]) -> TestArray {
        TestArray {
            flavor: Flavor::STest { s: half() },
            first_level: 1,
            levels: levels
                .iter()
                .map(|l| l.iter().map(|s| bs(s)).collect())
                .collect(),
        }
    }

    #[test]
    fn s_test_weights() {
        let v = validate_s_test(&stest(&[&["1010"]]), &half()).unwrap();
        assert_eq!(v[0].weight, "1/4");
        assert_eq!(v[0].verdict, Verdict::Holds);
        let v = validate_s_test(&stest(&[&["10"]]), &half()).unwrap();
        assert_eq!(v[0].verdict, Verdict::Fails);
        assert!(validate_s_test(&stest(&[]), &half()).unwrap().is_empty());
        // odd lengths: 2^{-3/2} = √2/4 ≈ 0.354 < 1/2
        let v = validate_s_test(&stest(&[&["101"]]), &half()).unwrap();
        assert_eq!(v[0].weight, "0 + 1/4*sqrt(2)");
        assert_eq!(v[0].verdict, Verdict::Holds);
        // 2^{-2/3} ≈ 0.63 ≥ 1/2
        let v = validate_s_test(&stest(&[&["10"]]), &q(1, 3)).unwrap();
        assert_eq!(v[0].verdict, Verdict::Fails);
        let v = validate_s_test(&stest(&[&["1011"]]), &q(1, 3)).unwrap();
        assert_eq!(v[0].verdict, Verdict::Holds);
    }

    #[test]
    fn hits() {
        let t = stest(&[&["1010"]]);
        assert_eq!(weak_s_random_check(&bs("101011"), &t), vec![1]);
        assert!(weak_s_random_check(&bs("000000"), &t).is_empty());
    }

    #[test]
    fn unit_all_in() {
        let n = all_in_unit(&bs("1010"), ParityTag::BetsOnEven).unwrap();
        assert_eq!(
            n.trajectory(&bs("1010")),
            vec![q(1, 4), q(1, 2), q(1, 2), int(1), int(1)]
        );
        assert_eq!(n.value(&bs("101011")), int(1));
        assert_eq!(n.value(&bs("0")), int(0));
        assert_eq!(n.value(&bs("1000")), int(0));
    }

    #[test]
    fn exponents() {
        let doubling = |s: &BitString| pow2(s.len() as i64);
        let r = empirical_dim_bound(&doubling, &bs("0110"));
        assert!(r.samples.iter().all(|s| s.s_hat_text == "0"));
        let constant = |_: &BitString| int(1);
        let r = empirical_dim_bound(&constant, &bs("0110"));
        assert!(r.samples.iter().all(|s| s.s_hat_text == "1"));
        let packing = |s: &BitString| crate::rational::pow(&q(4, 3), (s.len() / 2) as u32);
        let r = empirical_dim_bound(&packing, &bs("000000"));
        assert_eq!(r.common_even, Some(SymLog::log2_sqrt3()));
        assert_eq!(r.samples[1].s_hat_text, "1/2*log2(3)");
        assert!((r.samples[1].approx.unwrap() - 0.792481).abs() < 1e-6);
    }
}
