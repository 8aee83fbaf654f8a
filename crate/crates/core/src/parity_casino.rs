//! Two-bit block adversaries: the block inequality checker, the three-string
//! enumeration, the nested test it generates and its packing certificate.

use crate::bits::BitString;
use crate::decompose::{block_first_bit, block_min_even, BlockSpec};
use crate::error::{Error, Result};
use crate::program::{ApproxCursor, BetProgram, Component, Evaluator, StageApprox};
use crate::rational::{fmt_q, int, one, pow2, q, serde_q, zero, Q};
use crate::table::{Kind, ParityTag, SidedTag, StrategyTable};
use num_traits::One;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

fn bs(s: &BitString, tail: &str) -> BitString {
    let mut out = s.clone();
    for c in tail.bytes() {
        out.push(c - b'0');
    }
    out
}

/// Every quantity involved in one application of the block inequality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockReport {
    pub eta: BitString,
    pub spec: BlockSpec,
    #[serde(with = "serde_q")]
    pub joint_at_eta: Q,
    /// `M0(λ) + N0(λ)` of the canonical decomposition.
    #[serde(with = "serde_q")]
    pub c0: Q,
    pub branch: String,
    pub target: BitString,
    #[serde(with = "serde_q")]
    pub m_target: Q,
    #[serde(with = "serde_q")]
    pub n_target: Q,
    #[serde(with = "serde_q")]
    pub joint_at_target: Q,
    pub holds: bool,
}

/// Checks the hypotheses of the block inequality at `η` and evaluates its
/// conclusion. `m` must bet only at odd-length states and `n` only at
/// even-length states within the block.
pub fn verify_block_inequality(
    m: &dyn Evaluator,
    n: &dyn Evaluator,
    eta: &BitString,
    spec: &BlockSpec,
) -> Result<BlockReport> {
    if !eta.len().is_multiple_of(2) {
        return Err(Error::precondition(
            "eta must have even length",
            format!("{eta:?}"),
        ));
    }
    let at = |e: &dyn Evaluator, t: &str| e.value(&bs(eta, t));
    let two = int(2);
    // local laws on the block
    for t in ["", "0", "1"] {
        let (a, b, p) = (at(m, &format!("{t}0")), at(m, &format!("{t}1")), at(m, t));
        if a.clone() + b.clone() > &two * &p {
            return Err(Error::precondition(
                "M is not a supermartingale on the block",
                format!("{:?}", bs(eta, t)),
            ));
        }
        if t.is_empty() && (a != p || b != p) {
            return Err(Error::precondition(
                "M bets at an even-length state",
                format!("{eta:?}"),
            ));
        }
        let (a, b, p) = (at(n, &format!("{t}0")), at(n, &format!("{t}1")), at(n, t));
        if a.clone() + b.clone() > &two * &p {
            return Err(Error::precondition(
                "N is not a supermartingale on the block",
                format!("{:?}", bs(eta, t)),
            ));
        }
        if !t.is_empty() && (a != p || b != p) {
            return Err(Error::precondition(
                "N bets at an odd-length state",
                format!("{:?}", bs(eta, t)),
            ));
        }
    }
    let hyps = [
        ("M(eta00) >= m00", at(m, "00") >= spec.m00, "00"),
        ("M(eta10) >= m10", at(m, "10") >= spec.m10, "10"),
        ("N(eta0) >= n0", at(n, "0") >= spec.n0, "0"),
        ("N(eta1) >= n1", at(n, "1") >= spec.n1, "1"),
        ("m00 + n0 >= c", &spec.m00 + &spec.n0 >= spec.c, "00"),
        ("m10 + n1 >= c", &spec.m10 + &spec.n1 >= spec.c, "10"),
    ];
    for (what, ok, t) in hyps {
        if !ok {
            return Err(Error::precondition(what, format!("{:?}", bs(eta, t))));
        }
    }
    let joint_at_eta = at(m, "") + at(n, "");
    if joint_at_eta > spec.c {
        return Err(Error::precondition(
            "M(eta) + N(eta) <= c",
            fmt_q(&joint_at_eta),
        ));
    }
    let c0 = block_min_even(&spec.m00, &spec.m10)?.value(&BitString::empty())
        + block_first_bit(&spec.n0, &spec.n1)?.value(&BitString::empty());
    let (branch, tail) = if spec.n0 <= spec.n1 {
        ("n0 <= n1", "01")
    } else {
        ("n0 > n1", "11")
    };
    let (m_target, n_target) = (at(m, tail), at(n, tail));
    let joint_at_target = &m_target + &n_target;
    Ok(BlockReport {
        eta: eta.clone(),
        spec: spec.clone(),
        joint_at_eta,
        c0,
        branch: branch.into(),
        target: bs(eta, tail),
        holds: joint_at_target <= spec.c,
        m_target,
        n_target,
        joint_at_target,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Watching,
    Closed,
}

/// Values recorded when the enumeration trigger fired.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trigger {
    pub stage: u64,
    #[serde(with = "serde_q")]
    pub m00: Q,
    #[serde(with = "serde_q")]
    pub m10: Q,
    #[serde(with = "serde_q")]
    pub n0: Q,
    #[serde(with = "serde_q")]
    pub n1: Q,
}

/// Progress of the enumeration below one parent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnumState {
    pub parent: BitString,
    #[serde(with = "serde_q")]
    pub c: Q,
    pub enumerated: Vec<BitString>,
    pub phase: Phase,
    pub last_stage: u64,
    pub trigger: Option<Trigger>,
}

impl EnumState {
    fn start(parent: &BitString, c: &Q) -> Self {
        EnumState {
            parent: parent.clone(),
            c: c.clone(),
            enumerated: vec![bs(parent, "00"), bs(parent, "10")],
            phase: Phase::Watching,
            last_stage: 0,
            trigger: None,
        }
    }
}

fn stage_points(m: &StageApprox, n: &StageApprox, after: Option<u64>, budget: u64) -> Vec<u64> {
    let mut pts: BTreeSet<u64> = m
        .change_points()
        .into_iter()
        .chain(n.change_points())
        .collect();
    pts.insert(0);
    pts.into_iter()
        .filter(|&s| s <= budget && after.is_none_or(|a| s > a))
        .collect()
}

fn sum_at(values: &[Q], approx: &StageApprox, stage: u64) -> Q {
    crate::program::stage_sum(approx, values, stage)
}

/// Runs the watch loop from `state` up to stage `budget`. Cursors must sit at
/// the parent.
fn advance(
    mut state: EnumState,
    mc: &ApproxCursor<'_>,
    nc: &ApproxCursor<'_>,
    m: &StageApprox,
    n: &StageApprox,
    budget: u64,
) -> EnumState {
    if state.phase == Phase::Closed || (state.last_stage >= budget && state.last_stage != 0) {
        return state;
    }
    let after = if state.last_stage == 0 && state.trigger.is_none() {
        None
    } else {
        Some(state.last_stage)
    };
    let (m00, m10) = (
        mc.child(0).child(0).component_values(),
        mc.child(1).child(0).component_values(),
    );
    // n does not bet at odd-length states, so N(η00) = N(η0)
    let (n0, n1) = (
        nc.child(0).component_values(),
        nc.child(1).component_values(),
    );
    for s in stage_points(m, n, after, budget) {
        let (a00, a10, b0, b1) = (
            sum_at(&m00, m, s),
            sum_at(&m10, m, s),
            sum_at(&n0, n, s),
            sum_at(&n1, n, s),
        );
        if &a00 + &b0 > state.c && &a10 + &b1 > state.c {
            let third = if b0 <= b1 { "01" } else { "11" };
            state.enumerated.push(bs(&state.parent, third));
            state.phase = Phase::Closed;
            state.last_stage = s;
            state.trigger = Some(Trigger {
                stage: s,
                m00: a00,
                m10: a10,
                n0: b0,
                n1: b1,
            });
            return state;
        }
    }
    state.last_stage = state.last_stage.max(budget);
    state
}

/// Enumerates at most three two-bit extensions of `η`, watching the stages
/// up to `budget`.
pub fn enumerate_v(
    eta: &BitString,
    c: &Q,
    m: &StageApprox,
    n: &StageApprox,
    budget: u64,
) -> Result<EnumState> {
    check_pair(m, n)?;
    if !eta.len().is_multiple_of(2) {
        return Err(Error::precondition(
            "eta must have even length",
            format!("{eta:?}"),
        ));
    }
    let (mc, nc) = (m.cursor_at(eta), n.cursor_at(eta));
    Ok(advance(EnumState::start(eta, c), &mc, &nc, m, n, budget))
}

/// Continues a watching enumeration up to a larger budget.
pub fn resume(state: EnumState, m: &StageApprox, n: &StageApprox, budget: u64) -> EnumState {
    let (mc, nc) = (m.cursor_at(&state.parent), n.cursor_at(&state.parent));
    advance(state, &mc, &nc, m, n, budget)
}

/// An enumerated string with joint value at most `c` at `stage`, if any.
pub fn final_check(
    state: &EnumState,
    m: &StageApprox,
    n: &StageApprox,
    stage: u64,
) -> Option<BitString> {
    state
        .enumerated
        .iter()
        .find(|t| m.eval(stage, t) + n.eval(stage, t) <= state.c)
        .cloned()
}

fn check_pair(m: &StageApprox, n: &StageApprox) -> Result<()> {
    if m.parity != ParityTag::BetsOnOdd {
        return Err(Error::TagMismatch(
            "first strategy must bet at odd-length states".into(),
        ));
    }
    if n.parity != ParityTag::BetsOnEven {
        return Err(Error::TagMismatch(
            "second strategy must bet at even-length states".into(),
        ));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Flavor {
    Block34,
    STest {
        #[serde(with = "serde_q")]
        s: Q,
    },
}

/// Level sets `V_0, V_1, …` of a test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestArray {
    pub flavor: Flavor,
    /// Index of the first listed level.
    #[serde(default)]
    pub first_level: usize,
    pub levels: Vec<Vec<BitString>>,
}

impl TestArray {
    /// Checks the block structure: `V_0 = {λ}`, `V_i ⊆ 2^{2i}`, every member
    /// extends a member of the previous level, at most three children each.
    pub fn check_block34(&self) -> Result<()> {
        if self.flavor != Flavor::Block34 || self.first_level != 0 {
            return Err(Error::Structure("not a block test array".into()));
        }
        if self.levels.first().map(|l| l.as_slice()) != Some(&[BitString::empty()][..]) {
            return Err(Error::Structure("level 0 must be {λ}".into()));
        }
        for (i, pair) in self.levels.windows(2).enumerate() {
            let parents: BTreeSet<&BitString> = pair[0].iter().collect();
            let mut fan: BTreeMap<BitString, usize> = BTreeMap::new();
            let mut seen = BTreeSet::new();
            for s in &pair[1] {
                if s.len() != 2 * (i + 1) || !seen.insert(s) {
                    return Err(Error::Structure(format!(
                        "bad member {s:?} at level {}",
                        i + 1
                    )));
                }
                let p = s.prefix(2 * i);
                if !parents.contains(&p) {
                    return Err(Error::Structure(format!(
                        "{s:?} has no parent at level {i}"
                    )));
                }
                *fan.entry(p).or_default() += 1;
            }
            if let Some((p, k)) = fan.iter().find(|(_, &k)| k > 3) {
                return Err(Error::Structure(format!("{p:?} has {k} children")));
            }
        }
        Ok(())
    }

    pub fn max_fanout(&self, level: usize) -> usize {
        let mut fan: BTreeMap<BitString, usize> = BTreeMap::new();
        for s in &self.levels[level + 1] {
            *fan.entry(s.prefix(2 * level)).or_default() += 1;
        }
        fan.values().copied().max().unwrap_or(0)
    }

    /// Uniform measure of the cones of level `i`, assuming no member is a
    /// prefix of another.
    pub fn measure(&self, level: usize) -> Q {
        self.levels[level]
            .iter()
            .map(|s| pow2(-(s.len() as i64)))
            .fold(zero(), |a, b| a + b)
    }
}

/// Per-level summary of a built test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: usize,
    pub members: usize,
    pub expanded: usize,
    pub max_fanout: usize,
    #[serde(with = "serde_q")]
    pub measure: Q,
    pub path_node: BitString,
    #[serde(with = "serde_q")]
    pub path_value: Q,
    pub survivors: Vec<Survivor>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Survivor {
    pub node: BitString,
    #[serde(with = "serde_q")]
    pub value: Q,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParityTest {
    pub test: TestArray,
    pub path: BitString,
    pub stages: u64,
    pub levels: Vec<LevelReport>,
    pub enumerations: Vec<EnumState>,
}

#[derive(Clone, Debug)]
pub struct BuildOptions {
    pub depth: usize,
    pub stages: u64,
    pub c: Q,
    /// How many surviving members of a level are expanded; the path node is
    /// always expanded first.
    pub frontier_cap: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            depth: 8,
            stages: 1000,
            c: one(),
            frontier_cap: 16,
        }
    }
}

struct Node<'a> {
    s: BitString,
    mc: ApproxCursor<'a>,
    nc: ApproxCursor<'a>,
    value: Q,
}

/// Builds the nested block test against `m + n` at the final stage.
pub fn build_parity_test(
    m: &StageApprox,
    n: &StageApprox,
    opts: &BuildOptions,
) -> Result<ParityTest> {
    check_pair(m, n)?;
    let s = opts.stages;
    let root_value = m.eval(s, &BitString::empty()) + n.eval(s, &BitString::empty());
    if root_value > opts.c {
        return Err(Error::CapitalPrecondition {
            stage: s,
            value: fmt_q(&root_value),
        });
    }
    let mut levels = vec![vec![BitString::empty()]];
    let mut reports = Vec::new();
    let mut enumerations = Vec::new();
    let mut path = BitString::empty();
    let mut frontier = vec![Node {
        s: BitString::empty(),
        mc: m.cursor(),
        nc: n.cursor(),
        value: root_value,
    }];

    for level in 0..=opts.depth {
        let members = levels[level].clone();
        let survivors: Vec<Survivor> = frontier
            .iter()
            .filter(|nd| nd.value <= opts.c)
            .map(|nd| Survivor {
                node: nd.s.clone(),
                value: nd.value.clone(),
            })
            .collect();
        let path_value = frontier
            .iter()
            .find(|nd| nd.s == path)
            .map(|nd| nd.value.clone());
        let path_value = path_value.ok_or_else(|| Error::NoSurvivor(path.clone()))?;
        let mut report = LevelReport {
            level,
            members: members.len(),
            expanded: 0,
            max_fanout: 0,
            measure: members
                .iter()
                .map(|x| pow2(-(x.len() as i64)))
                .fold(zero(), |a, b| a + b),
            path_node: path.clone(),
            path_value,
            survivors,
        };
        if level == opts.depth {
            reports.push(report);
            break;
        }
        // path node first, then the remaining survivors in order
        let mut order: Vec<usize> = (0..frontier.len())
            .filter(|&i| frontier[i].value <= opts.c)
            .collect();
        order.sort_by_key(|&i| (frontier[i].s != path, i));
        order.truncate(opts.frontier_cap.max(1));
        let mut next = Vec::new();
        let mut next_path = None;
        for &i in &order {
            let nd = &frontier[i];
            let st = advance(EnumState::start(&nd.s, &opts.c), &nd.mc, &nd.nc, m, n, s);
            let mut kids: Vec<BitString> = st.enumerated.clone();
            kids.sort();
            report.max_fanout = report.max_fanout.max(kids.len());
            for k in kids {
                let (b0, b1) = (k.bit(k.len() - 2), k.bit(k.len() - 1));
                let (mc, nc) = (nd.mc.child(b0).child(b1), nd.nc.child(b0).child(b1));
                let value = mc.value_at(s) + nc.value_at(s);
                if nd.s == path && next_path.is_none() && value <= opts.c {
                    next_path = Some(k.clone());
                }
                next.push(Node {
                    s: k,
                    mc,
                    nc,
                    value,
                });
            }
            enumerations.push(st);
        }
        report.expanded = order.len();
        path = next_path.ok_or_else(|| Error::NoSurvivor(path.clone()))?;
        next.sort_by(|a, b| a.s.cmp(&b.s));
        levels.push(next.iter().map(|nd| nd.s.clone()).collect());
        frontier = next;
        reports.push(report);
    }
    let test = TestArray {
        flavor: Flavor::Block34,
        first_level: 0,
        levels,
    };
    test.check_block34()?;
    Ok(ParityTest {
        test,
        path,
        stages: s,
        levels: reports,
        enumerations,
    })
}

/// The supermartingale multiplying capital by 4/3 along every child of the
/// array and vanishing off it.
#[derive(Clone, Debug)]
pub struct PackingCertificate {
    levels: Vec<BTreeSet<BitString>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub depth: usize,
    /// `M` at each array node, by level.
    pub node_values: Vec<BTreeMap<String, String>>,
    /// Worst slack `4·M(σ) − Σ M(σ'')` over the four 2-bit extensions, per level.
    pub slack: Vec<String>,
    /// Dimension bound induced by the growth rate: `log2 √3`.
    pub dimension_bound: String,
    pub dimension_bound_approx: f64,
}

pub fn packing_certificate(t: &TestArray) -> Result<PackingCertificate> {
    t.check_block34()?;
    Ok(PackingCertificate {
        levels: t
            .levels
            .iter()
            .map(|l| l.iter().cloned().collect())
            .collect(),
    })
}

impl PackingCertificate {
    pub fn depth(&self) -> usize {
        self.levels.len().saturating_sub(1)
    }

    fn growth(level: usize) -> Q {
        crate::rational::pow(&q(4, 3), level as u32)
    }

    fn in_array(&self, s: &BitString) -> bool {
        s.len().is_multiple_of(2) && self.levels.get(s.len() / 2).is_some_and(|l| l.contains(s))
    }

    /// Local 2-bit check at an array node: `4·M(σ) − Σ_{|ρ|=2} M(σρ)`.
    pub fn slack_at(&self, s: &BitString) -> Q {
        let total = ["00", "01", "10", "11"]
            .iter()
            .map(|t| self.value(&bs(s, t)))
            .fold(zero(), |a, b| a + b);
        int(4) * self.value(s) - total
    }

    pub fn report(&self) -> CertificateReport {
        let node_values = self
            .levels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let v = fmt_q(&Self::growth(i));
                l.iter().map(|s| (s.to_string(), v.clone())).collect()
            })
            .collect();
        let slack = self
            .levels
            .iter()
            .map(|l| {
                let worst = l
                    .iter()
                    .map(|s| self.slack_at(s))
                    .min()
                    .unwrap_or_else(zero);
                fmt_q(&worst)
            })
            .collect();
        CertificateReport {
            depth: self.depth(),
            node_values,
            slack,
            dimension_bound: "log2(3)/2".into(),
            dimension_bound_approx: 3f64.log2() / 2.0,
        }
    }

    /// Tabulates the certificate; only small depths fit in a table.
    pub fn to_table(&self, depth: usize) -> Result<StrategyTable> {
        StrategyTable::from_fn(
            depth,
            Kind::Supermartingale,
            ParityTag::Unrestricted,
            SidedTag::Unrestricted,
            |s| self.value(s),
        )
    }
}

impl Evaluator for PackingCertificate {
    fn value(&self, s: &BitString) -> Q {
        if s.len().is_multiple_of(2) {
            return if self.in_array(s) {
                Self::growth(s.len() / 2)
            } else {
                zero()
            };
        }
        // half the children's total keeps the odd step fair
        let total = [0u8, 1]
            .iter()
            .map(|&b| self.value(&s.child(b)))
            .fold(zero(), |a, b| a + b);
        total * q(1, 2)
    }
}

/// Weighted mixture: component `i` enters at stage `i` with weight
/// `2^{-i-2}`.
pub fn mixture(components: &[BetProgram]) -> Result<StageApprox> {
    let parity = components.first().map(|p| p.parity).unwrap_or_default();
    for (i, p) in components.iter().enumerate() {
        if p.parity != parity {
            return Err(Error::TagMismatch(format!(
                "component {i} has parity {:?}",
                p.parity
            )));
        }
        if p.initial > Q::one() {
            return Err(Error::precondition(
                "component capital at λ must be at most 1",
                i,
            ));
        }
    }
    let sided = {
        let first = components.first().map(|p| p.sided).unwrap_or_default();
        if components.iter().all(|p| p.sided == first) {
            first
        } else {
            SidedTag::Unrestricted
        }
    };
    StageApprox::new(
        Kind::Martingale,
        parity,
        sided,
        components
            .iter()
            .enumerate()
            .map(|(i, p)| Component {
                stage: i as u64,
                weight: pow2(-(i as i64) - 2),
                program: p.clone(),
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bs as b;
    use crate::program::FracRule;

    fn frac_table(entries: &[(&str, Q)]) -> FracRule {
        FracRule::Table {
            entries: entries.iter().map(|(k, v)| (b(k), v.clone())).collect(),
        }
    }

    #[test]
    fn block_inequality_example() {
        let m = StrategyTable::from_pairs(
            Kind::Martingale,
            ParityTag::BetsOnOdd,
            &[
                ("", q(1, 2)),
                ("0", q(1, 2)),
                ("1", q(1, 2)),
                ("00", q(3, 4)),
                ("01", q(1, 4)),
                ("10", q(1, 4)),
                ("11", q(3, 4)),
            ],
        )
        .unwrap();
        let n = block_first_bit(&q(1, 4), &q(3, 4)).unwrap();
        let spec = BlockSpec::new(q(3, 4), q(1, 4), q(1, 4), q(3, 4), int(1)).unwrap();
        let r = verify_block_inequality(&m, &n, &BitString::empty(), &spec).unwrap();
        assert_eq!(r.branch, "n0 <= n1");
        assert_eq!(r.joint_at_target, q(1, 2));
        assert!(r.holds);
    }

    #[test]
    fn enumeration_example() {
        // m reaches 5/4 at 00 and 11/8 at 10 once its stage-3 component enters
        let m_prog = BetProgram::fractional(
            q(3, 4),
            frac_table(&[("0", q(-2, 3)), ("1", q(-5, 6))]),
            ParityTag::BetsOnOdd,
        )
        .unwrap();
        let m = StageApprox::new(
            Kind::Martingale,
            ParityTag::BetsOnOdd,
            SidedTag::Unrestricted,
            vec![Component {
                stage: 3,
                weight: one(),
                program: m_prog,
            }],
        )
        .unwrap();
        let n_prog =
            BetProgram::fractional(q(1, 4), frac_table(&[("", q(1, 2))]), ParityTag::BetsOnEven)
                .unwrap();
        let n = StageApprox::new(
            Kind::Martingale,
            ParityTag::BetsOnEven,
            SidedTag::Unrestricted,
            vec![Component {
                stage: 0,
                weight: one(),
                program: n_prog,
            }],
        )
        .unwrap();
        assert_eq!(m.eval(3, &b("00")), q(5, 4));
        assert_eq!(m.eval(3, &b("10")), q(11, 8));
        assert_eq!(n.eval(0, &b("0")), q(1, 8));
        let st = enumerate_v(&BitString::empty(), &one(), &m, &n, 2).unwrap();
        assert_eq!(st.phase, Phase::Watching);
        let st = resume(st, &m, &n, 10);
        assert_eq!(st.phase, Phase::Closed);
        assert_eq!(st.trigger.as_ref().unwrap().stage, 3);
        assert_eq!(st.enumerated, vec![b("00"), b("10"), b("01")]);
        assert_eq!(m.eval(3, &b("01")) + n.eval(3, &b("01")), q(3, 8));
        assert_eq!(final_check(&st, &m, &n, 10), Some(b("01")));

        let t = build_parity_test(
            &m,
            &n,
            &BuildOptions {
                depth: 1,
                stages: 10,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(t.test.levels[1], vec![b("00"), b("01"), b("10")]);
        assert_eq!(t.path, b("01"));
    }

    #[test]
    fn zero_strategies_give_leftmost_path() {
        let m = StageApprox::empty(ParityTag::BetsOnOdd);
        let n = StageApprox::empty(ParityTag::BetsOnEven);
        let t = build_parity_test(
            &m,
            &n,
            &BuildOptions {
                depth: 5,
                stages: 3,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(t.path, BitString::repeat(0, 10));
        assert_eq!(t.test.levels[1], vec![b("00"), b("10")]);
        let cert = packing_certificate(&t.test).unwrap();
        assert_eq!(cert.value(&t.path), crate::rational::pow(&q(4, 3), 5));
        assert_eq!(cert.value(&b("11")), zero());
        for lvl in &t.test.levels {
            for s in lvl {
                assert!(cert.slack_at(s) >= zero());
            }
        }
        assert!(crate::table::validate(&cert.to_table(6).unwrap()).valid());
    }

    #[test]
    fn mixture_weights() {
        let p = BetProgram::fractional(
            one(),
            FracRule::Constant { fraction: zero() },
            ParityTag::BetsOnOdd,
        )
        .unwrap();
        let mix = mixture(&[p.clone(), p.clone(), p.clone()]).unwrap();
        assert_eq!(mix.eval(10, &BitString::empty()), q(7, 16));
        assert_eq!(
            mixture(std::slice::from_ref(&p))
                .unwrap()
                .eval(0, &BitString::empty()),
            q(1, 4)
        );
        let mut other = p.clone();
        other.parity = ParityTag::BetsOnEven;
        assert!(mixture(&[p, other]).is_err());
    }
}
