//! The dimension-½ stage construction: parameters, martingale floors, the
//! growth bound, and the stage machine with its description ledger.

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::program::{stage_sum, ApproxCursor, Evaluator, StageApprox};
use crate::rational::{ceil_to_u64, fmt_q, half, int, pow2, q, serde_q, zero, Q};
use crate::table::{Kind, ParityTag, SidedTag, StrategyTable};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

/// `(q_n, p_n, s_n)` for one `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub n: usize,
    #[serde(with = "serde_q")]
    pub q: Q,
    pub p: u64,
    pub s: u64,
    /// `⌈q_n·s_n⌉`, the description length for strings of length `s_n`.
    pub description_length: u64,
    /// `s_n·q_n − p_n > n + Σ_{i<n} p_i`; meaningful for `n ≥ 1`.
    pub budget_ok: bool,
}

/// Parameters for `n = 0..=n_max`.
pub fn params(n_max: usize) -> Result<Vec<ParamEntry>> {
    let mut out: Vec<ParamEntry> = Vec::new();
    let mut sum_p: u64 = 0;
    let overflow = || Error::Unsupported("parameters overflow 64 bits".into());
    for n in 0..=n_max {
        let nn = n as u64;
        let qn = half() + q(3, n as i64 + 2);
        let s = if n == 0 {
            0
        } else {
            (nn + 2)
                .checked_mul((2 * nn + 2).checked_add(sum_p).ok_or_else(overflow)?)
                .ok_or_else(overflow)?
        };
        let p = (s / 2).checked_add(nn + 2).ok_or_else(overflow)?;
        let qs = &qn * int(s as i64);
        let budget_ok = &qs - int(p as i64) > int(nn as i64) + int(sum_p as i64);
        out.push(ParamEntry {
            n,
            q: qn,
            p,
            s,
            description_length: ceil_to_u64(&qs).ok_or_else(overflow)?,
            budget_ok,
        });
        sum_p = sum_p.checked_add(p).ok_or_else(overflow)?;
    }
    Ok(out)
}

/// `2^{-1} + Σ_{i<n} 2^{-i-2}`.
pub fn capital_bound(n: usize) -> Q {
    (0..n)
        .map(|i| pow2(-(i as i64) - 2))
        .fold(half(), |a, b| a + b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FloorMode {
    Plain,
    Parity(ParityTag),
}

/// The martingale floor of `m` on `2^{≤k}`.
///
/// Plain mode agrees with `m` on `2^k` and averages backwards. Parity mode
/// returns the pointwise-largest martingale of the given parity that stays
/// below `m`; it need not agree with `m` on `2^k`.
pub fn floor(m: &dyn Evaluator, k: usize, mode: FloorMode) -> Result<StrategyTable> {
    let mut v: BTreeMap<BitString, Q> = BTreeMap::new();
    for leaf in BitString::all_of_length(k) {
        let x = m.value(&leaf);
        v.insert(leaf, x);
    }
    match mode {
        FloorMode::Plain => {
            for len in (0..k).rev() {
                for s in BitString::all_of_length(len) {
                    let avg = (&v[&s.child(0)] + &v[&s.child(1)]) * half();
                    v.insert(s, avg);
                }
            }
            StrategyTable::from_map(
                k,
                Kind::Martingale,
                ParityTag::Unrestricted,
                SidedTag::Unrestricted,
                v,
            )
        }
        FloorMode::Parity(tag) => {
            if tag == ParityTag::Unrestricted {
                return Err(Error::Untagged);
            }
            if !k.is_multiple_of(2) {
                return Err(Error::precondition("parity floor needs an even depth", k));
            }
            // r(ρ): the largest value a parity martingale below m can take at ρ
            let mut r = v.clone();
            for len in (0..k).rev() {
                for s in BitString::all_of_length(len) {
                    let (r0, r1) = (&r[&s.child(0)], &r[&s.child(1)]);
                    let sub = if tag.allows_bet_at(len) {
                        (r0 + r1) * half()
                    } else {
                        r0.clone().min(r1.clone())
                    };
                    let here = m.value(&s).min(sub);
                    r.insert(s, here);
                }
            }
            let mut out: BTreeMap<BitString, Q> = BTreeMap::new();
            out.insert(BitString::empty(), r[&BitString::empty()].clone());
            for len in 0..k {
                for s in BitString::all_of_length(len) {
                    let val = out[&s].clone();
                    let (c0, c1) = if tag.allows_bet_at(len) {
                        let (r0, r1) = (&r[&s.child(0)], &r[&s.child(1)]);
                        let lo = &val * int(2) - r1;
                        let x0 = val.clone().max(lo).min(r0.clone());
                        let x1 = &val * int(2) - &x0;
                        (x0, x1)
                    } else {
                        (val.clone(), val)
                    };
                    out.insert(s.child(0), c0);
                    out.insert(s.child(1), c1);
                }
            }
            StrategyTable::from_map(k, Kind::Martingale, tag, SidedTag::Unrestricted, out)
        }
    }
}

/// Both sides of the growth bound for one instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub sigma: BitString,
    pub tau: BitString,
    pub s: u64,
    pub t: u64,
    /// The `p` used; chosen as the least integer meeting the hypothesis when
    /// not supplied. Absent when the floor did not move at all.
    pub p: Option<i64>,
    #[serde(with = "serde_q")]
    pub floor_increase: Q,
    pub hypothesis: bool,
    #[serde(with = "serde_q")]
    pub m_s_tau: Q,
    #[serde(with = "serde_q")]
    pub m_t_tau: Q,
    #[serde(with = "serde_q")]
    pub bound: Q,
    pub holds: bool,
}

/// `2^{h}` for a possibly negative half-integer exponent `h = e/2`, returned
/// as `(rational part, needs √2)`.
fn pow2_half(e2: i64) -> (Q, bool) {
    if e2.rem_euclid(2) == 0 {
        (pow2(e2 / 2), false)
    } else {
        (pow2((e2 - 1) / 2), true)
    }
}

/// `a < b + c·2^{e2/2}` exactly.
fn less_than_shifted(a: &Q, b: &Q, e2: i64) -> bool {
    let (c, root2) = pow2_half(e2);
    if !root2 {
        return *a < b + c;
    }
    // a − b < c·√2  ⇔  (a − b) < 0  or  (a − b)² < 2c²
    let d = a - b;
    d < zero() || &d * &d < int(2) * &c * &c
}

/// Checks the growth bound for `M = N + T`: if the parity floors of `M` on
/// `2^{≤k}` rise by less than `2^{-p}` at `σ` between stages `s` and `t`,
/// then `M_t(τ) < M_s(τ) + 2^{(|τ|−|σ|)/2 − p}`.
pub fn check_growth_bound(
    n: &StageApprox,
    t_approx: &StageApprox,
    sigma: &BitString,
    tau: &BitString,
    (s, t): (u64, u64),
    p: Option<i64>,
) -> Result<GrowthReport> {
    if n.parity != ParityTag::BetsOnOdd || t_approx.parity != ParityTag::BetsOnEven {
        return Err(Error::TagMismatch(
            "expected odd-betting N and even-betting T".into(),
        ));
    }
    let k = tau.len();
    if !k.is_multiple_of(2) || !sigma.len().is_multiple_of(2) || !sigma.is_prefix_of(tau) || s > t {
        return Err(Error::precondition(
            "need even |σ| ≤ |τ| = k with σ ≼ τ and s ≤ t",
            format!("{sigma:?} {tau:?}"),
        ));
    }
    let fl =
        |a: &StageApprox, stage: u64, tag| floor(&a.table_at(stage, k)?, k, FloorMode::Parity(tag));
    let at_sigma = |stage| -> Result<Q> {
        Ok(fl(n, stage, ParityTag::BetsOnOdd)?.value(sigma)
            + fl(t_approx, stage, ParityTag::BetsOnEven)?.value(sigma))
    };
    let floor_increase = at_sigma(t)? - at_sigma(s)?;
    let m_s_tau = n.eval(s, tau) + t_approx.eval(s, tau);
    let m_t_tau = n.eval(t, tau) + t_approx.eval(t, tau);
    let p = match p {
        Some(p) => Some(p),
        None if floor_increase.is_zero() => None,
        None => {
            // least p with floor_increase < 2^{-p}
            let fl = crate::rational::floor_log2(&floor_increase);
            Some(-fl - 1)
        }
    };
    let h2 = (k - sigma.len()) as i64;
    let (hypothesis, holds, bound) = match p {
        Some(p) => {
            let hyp = floor_increase < pow2(-p);
            let e2 = h2 - 2 * p;
            let (c, root2) = pow2_half(e2);
            let bound = if root2 { c * q(99, 70) } else { c };
            (
                hyp,
                !hyp || less_than_shifted(&m_t_tau, &m_s_tau, e2),
                &m_s_tau + bound,
            )
        }
        None => (true, m_t_tau <= m_s_tau, m_s_tau.clone()),
    };
    Ok(GrowthReport {
        sigma: sigma.clone(),
        tau: tau.clone(),
        s,
        t,
        p,
        floor_increase,
        hypothesis,
        m_s_tau,
        m_t_tau,
        bound,
        holds,
    })
}

/// Extends `base` to length `len`, always taking the leftmost child whose
/// value stays at most `c`.
pub fn greedy_leftmost_extension(
    m: &dyn Evaluator,
    base: &BitString,
    c: &Q,
    len: usize,
) -> Result<BitString> {
    if m.value(base) > *c {
        return Err(Error::precondition("M(base) <= c", fmt_q(&m.value(base))));
    }
    let mut x = base.clone();
    while x.len() < len {
        let zero_child = x.child(0);
        x = if m.value(&zero_child) <= *c {
            zero_child
        } else {
            let one_child = x.child(1);
            if m.value(&one_child) > *c {
                return Err(Error::NoSurvivor(x));
            }
            one_child
        };
    }
    Ok(x)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Request {
    pub target: BitString,
    pub length: u64,
    pub stage: u64,
}

/// Descriptions issued to the prefix-free machine.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RequestLedger {
    pub requests: Vec<Request>,
}

impl RequestLedger {
    pub fn issue(&mut self, target: BitString, length: u64, stage: u64) {
        self.requests.push(Request {
            target,
            length,
            stage,
        });
    }

    /// `Σ 2^{-length}`.
    pub fn kraft_weight(&self) -> Q {
        self.requests
            .iter()
            .map(|r| pow2(-(r.length as i64)))
            .fold(zero(), |a, b| a + b)
    }

    /// Shortest description length of `sigma`, if any.
    pub fn k_v(&self, sigma: &BitString) -> Option<u64> {
        self.requests
            .iter()
            .filter(|r| &r.target == sigma)
            .map(|r| r.length)
            .min()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Action {
    Define { n: usize, sigma: BitString },
    Undefine { from: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageEvent {
    pub stage: u64,
    pub action: Option<Action>,
    pub described: Option<Request>,
    #[serde(with = "serde_q")]
    pub kraft_weight: Q,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageChecks {
    pub kraft_ok: bool,
    #[serde(with = "serde_q")]
    pub kraft_max: Q,
    /// `M(σ_n) ≤ 2^{-1} + Σ_{i<n} 2^{-i-2}` at every stage end where `σ_n` is defined.
    pub capital_ok: bool,
    pub capital_witness: Option<(u64, usize)>,
    /// Most values `σ_n` took within one interval of a stable `σ_{n−1}`.
    pub max_changes: Vec<u64>,
    pub changes_ok: bool,
    /// Redefinitions that were not lexicographically above the previous value.
    pub lex_decreases: usize,
    pub lengths_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRun {
    pub stages: u64,
    pub n_max: usize,
    pub params: Vec<ParamEntry>,
    pub sigmas: Vec<Option<BitString>>,
    /// The deepest defined `σ_n` at the end.
    pub x: BitString,
    pub ledger: RequestLedger,
    pub events: Vec<StageEvent>,
    pub checks: StageChecks,
}

/// Memoised per-component values of both approximations.
struct Values<'a> {
    n: &'a StageApprox,
    t: &'a StageApprox,
    cache: HashMap<BitString, (Vec<Q>, Vec<Q>)>,
}

impl<'a> Values<'a> {
    fn at(&mut self, x: &BitString, stage: u64) -> Q {
        let (n, t) = (self.n, self.t);
        let (a, b) = self.cache.entry(x.clone()).or_insert_with(|| {
            (
                n.cursor_at(x).component_values(),
                t.cursor_at(x).component_values(),
            )
        });
        stage_sum(n, a, stage) + stage_sum(t, b, stage)
    }

    /// Greedy leftmost extension using cursors so each step is incremental.
    fn extend(&mut self, base: &BitString, c: &Q, len: usize, stage: u64) -> Result<BitString> {
        let (mut nc, mut tc): (ApproxCursor<'a>, ApproxCursor<'a>) =
            (self.n.cursor_at(base), self.t.cursor_at(base));
        let val =
            |nc: &ApproxCursor<'_>, tc: &ApproxCursor<'_>| nc.value_at(stage) + tc.value_at(stage);
        if val(&nc, &tc) > *c {
            return Err(Error::precondition("M(base) <= c", fmt_q(&val(&nc, &tc))));
        }
        while nc.prefix().len() < len {
            let (n0, t0) = (nc.child(0), tc.child(0));
            if val(&n0, &t0) <= *c {
                (nc, tc) = (n0, t0);
            } else {
                let (n1, t1) = (nc.child(1), tc.child(1));
                if val(&n1, &t1) > *c {
                    return Err(Error::NoSurvivor(nc.prefix().clone()));
                }
                (nc, tc) = (n1, t1);
            }
        }
        Ok(nc.prefix().clone())
    }
}

/// Runs the stage construction for `stages` stages against `M = N + T`.
pub fn run_stage_machine(
    n: &StageApprox,
    t: &StageApprox,
    stages: u64,
    n_max: usize,
) -> Result<StageRun> {
    if n.parity != ParityTag::BetsOnOdd || t.parity != ParityTag::BetsOnEven {
        return Err(Error::TagMismatch(
            "expected odd-betting N and even-betting T".into(),
        ));
    }
    let params = params(n_max)?;
    let mut vals = Values {
        n,
        t,
        cache: HashMap::new(),
    };
    let lambda = BitString::empty();
    for stage in n
        .change_points()
        .into_iter()
        .chain(t.change_points())
        .chain([0])
        .filter(|&x| x <= stages)
    {
        let v = vals.at(&lambda, stage);
        if v >= half() {
            return Err(Error::CapitalPrecondition {
                stage,
                value: fmt_q(&v),
            });
        }
    }
    let bounds: Vec<Q> = (0..=n_max).map(capital_bound).collect();
    let mut sigmas: Vec<Option<BitString>> = vec![None; n_max + 1];
    sigmas[0] = Some(lambda.clone());
    let mut ledger = RequestLedger::default();
    let mut events = Vec::new();
    let mut changes = vec![0u64; n_max + 1];
    let mut max_changes = vec![0u64; n_max + 1];
    let mut last_value: Vec<Option<BitString>> = vec![None; n_max + 1];
    let mut checks = StageChecks {
        kraft_ok: true,
        kraft_max: zero(),
        capital_ok: true,
        capital_witness: None,
        max_changes: Vec::new(),
        changes_ok: true,
        lex_decreases: 0,
        lengths_ok: true,
    };

    for s in 0..stages {
        let next = s + 1;
        let top = n_max.min(s as usize);
        let attention = (1..=top).find(|&i| match &sigmas[i] {
            None => true,
            Some(x) => vals.at(x, next) > bounds[i],
        });
        let mut action = None;
        if let Some(i) = attention {
            match sigmas[i].clone() {
                None => {
                    let parent = sigmas[i - 1]
                        .clone()
                        .expect("lower levels are defined first");
                    let c = vals.at(&parent, next);
                    let x = vals.extend(&parent, &c, params[i].s as usize, next)?;
                    if let Some(prev) = &last_value[i] {
                        if &x <= prev {
                            checks.lex_decreases += 1;
                        }
                    }
                    last_value[i] = Some(x.clone());
                    changes[i] += 1;
                    max_changes[i] = max_changes[i].max(changes[i]);
                    // σ_{i+1} now lives under a new parent
                    for j in i + 1..=n_max {
                        changes[j] = 0;
                        last_value[j] = None;
                    }
                    sigmas[i] = Some(x.clone());
                    action = Some(Action::Define { n: i, sigma: x });
                }
                Some(_) => {
                    for slot in sigmas.iter_mut().skip(i) {
                        *slot = None;
                    }
                    for j in i + 1..=n_max {
                        changes[j] = 0;
                        last_value[j] = None;
                    }
                    action = Some(Action::Undefine { from: i });
                }
            }
        }
        let mut described = None;
        for k in 1..=top {
            if let Some(x) = &sigmas[k] {
                let len = params[k].description_length;
                if ledger.k_v(x).is_none_or(|have| have > len) {
                    ledger.issue(x.clone(), len, next);
                    described = ledger.requests.last().cloned();
                    break;
                }
            }
        }
        let w = ledger.kraft_weight();
        if w > Q::one() {
            checks.kraft_ok = false;
        }
        if w > checks.kraft_max {
            checks.kraft_max = w.clone();
        }
        for (i, x) in sigmas.iter().enumerate().skip(1) {
            if let Some(x) = x {
                if vals.at(x, next) > bounds[i] && checks.capital_ok {
                    checks.capital_ok = false;
                    checks.capital_witness = Some((next, i));
                }
            }
        }
        if action.is_some() || described.is_some() {
            events.push(StageEvent {
                stage: next,
                action,
                described,
                kraft_weight: w,
            });
        }
    }
    checks.changes_ok = max_changes
        .iter()
        .zip(&params)
        .skip(1)
        .all(|(&c, p)| p.p >= 64 || c <= 1u64 << p.p);
    checks.max_changes = max_changes;
    checks.lengths_ok = ledger.requests.iter().all(|r| {
        params
            .iter()
            .any(|p| p.s as usize == r.target.len() && p.description_length == r.length)
    });
    let x = sigmas
        .iter()
        .rev()
        .flatten()
        .next()
        .cloned()
        .unwrap_or_default();
    Ok(StageRun {
        stages,
        n_max,
        params,
        sigmas,
        x,
        ledger,
        events,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bs;
    use crate::dimension::all_in_unit;
    use crate::program::Component;
    use crate::table::validate;

    #[test]
    fn parameter_values() {
        let p = params(4).unwrap();
        let triples: Vec<(Q, u64, u64)> = p.iter().map(|e| (e.q.clone(), e.p, e.s)).collect();
        assert_eq!(triples[0], (int(2), 2, 0));
        assert_eq!(triples[1], (q(3, 2), 12, 18));
        assert_eq!(triples[2], (q(5, 4), 44, 80));
        assert_eq!(p[3].s, 330);
        assert_eq!(p[4].s, 1428);
        assert!(p.iter().skip(1).all(|e| e.budget_ok && e.s % 2 == 0));
        assert!(!p[0].budget_ok);
        assert_eq!(p[1].description_length, 27);
    }

    #[test]
    fn plain_floor_examples() {
        let m = StrategyTable::from_pairs(
            Kind::Supermartingale,
            ParityTag::Unrestricted,
            &[("", int(1)), ("0", half()), ("1", half())],
        )
        .unwrap();
        assert_eq!(
            floor(&m, 1, FloorMode::Plain).unwrap().value(&bs("")),
            half()
        );
        let m = StrategyTable::from_pairs(
            Kind::Supermartingale,
            ParityTag::Unrestricted,
            &[
                ("", int(1)),
                ("0", int(1)),
                ("1", int(1)),
                ("00", int(1)),
                ("01", int(0)),
                ("10", half()),
                ("11", int(0)),
            ],
        )
        .unwrap();
        let f = floor(&m, 2, FloorMode::Plain).unwrap();
        assert_eq!(f.value(&bs("0")), half());
        assert_eq!(f.value(&bs("1")), q(1, 4));
        assert_eq!(f.value(&bs("")), q(3, 8));
    }

    #[test]
    fn parity_floor_example() {
        let m = StrategyTable::from_pairs(
            Kind::Supermartingale,
            ParityTag::BetsOnOdd,
            &[
                ("", int(1)),
                ("0", int(1)),
                ("1", int(1)),
                ("00", int(2)),
                ("01", int(0)),
                ("10", int(1)),
                ("11", int(0)),
            ],
        )
        .unwrap();
        let f = floor(&m, 2, FloorMode::Parity(ParityTag::BetsOnOdd)).unwrap();
        assert_eq!(f.value(&bs("")), half());
        assert!(validate(&f).valid());
        assert!(f.values().iter().all(|(s, v)| v <= &m.value(s)));
    }

    #[test]
    fn greedy_extension_examples() {
        let zero_m = |_: &BitString| zero();
        assert_eq!(
            greedy_leftmost_extension(&zero_m, &bs("1"), &zero(), 4).unwrap(),
            bs("1000")
        );
        let toward_zero = |s: &BitString| {
            if s.bits().iter().all(|&b| b == 0) {
                pow2(s.len() as i64 - 3)
            } else {
                zero()
            }
        };
        assert_eq!(
            greedy_leftmost_extension(&toward_zero, &bs(""), &q(1, 8), 3).unwrap(),
            bs("100")
        );
    }

    #[test]
    fn zero_run_describes_each_level_once() {
        let n = StageApprox::empty(ParityTag::BetsOnOdd);
        let t = StageApprox::empty(ParityTag::BetsOnEven);
        let r = run_stage_machine(&n, &t, 200, 1).unwrap();
        assert_eq!(r.ledger.kraft_weight(), pow2(-27));
        assert_eq!(r.x, BitString::repeat(0, 18));
        let r = run_stage_machine(&n, &t, 200, 2).unwrap();
        assert_eq!(r.ledger.kraft_weight(), pow2(-27) + pow2(-100));
        assert_eq!(r.x, BitString::repeat(0, 80));
        assert!(r.checks.kraft_ok && r.checks.capital_ok && r.checks.lengths_ok);
    }

    #[test]
    fn pumped_level_is_redefined_to_the_right() {
        let pump = all_in_unit(&BitString::repeat(0, 18), ParityTag::BetsOnEven).unwrap();
        let t = StageApprox::new(
            Kind::Martingale,
            ParityTag::BetsOnEven,
            SidedTag::Unrestricted,
            vec![Component {
                stage: 10,
                weight: Q::one(),
                program: pump,
            }],
        )
        .unwrap();
        let n = StageApprox::empty(ParityTag::BetsOnOdd);
        let r = run_stage_machine(&n, &t, 50, 1).unwrap();
        let undef = r
            .events
            .iter()
            .find(|e| matches!(e.action, Some(Action::Undefine { from: 1 })))
            .unwrap();
        assert_eq!(undef.stage, 10);
        let later = r.sigmas[1].clone().unwrap();
        assert!(later > BitString::repeat(0, 18));
        assert_eq!(r.checks.lex_decreases, 0);
        assert!(r.checks.capital_ok && r.checks.kraft_ok);
        assert_eq!(r.ledger.requests.len(), 2);
    }

    #[test]
    fn growth_bound_no_change() {
        let n = StageApprox::empty(ParityTag::BetsOnOdd);
        let t = StageApprox::empty(ParityTag::BetsOnEven);
        let r = check_growth_bound(&n, &t, &bs("00"), &bs("0000"), (0, 5), Some(3)).unwrap();
        assert!(r.holds && r.hypothesis);
    }
}
