use num_traits::{One, Signed, Zero};
use paritybet::bits::{interleave, BitString};
use paritybet::decompose::{block_decompose, block_min_even, parity_factorize};
use paritybet::dim_builder::{floor, params, FloorMode};
use paritybet::gen;
use paritybet::online::{from_online, to_online};
use paritybet::rational::{fmt_q, parse_q, q, Q};
use paritybet::table::{combine, validate, Kind, ParityTag};
use proptest::prelude::*;

fn bits(max: usize) -> impl Strategy<Value = BitString> {
    prop::collection::vec(0u8..=1, 0..=max).prop_map(BitString::from_bits)
}

fn rational() -> impl Strategy<Value = Q> {
    (-1000i64..=1000, 1i64..=1000).prop_map(|(n, d)| q(n, d))
}

fn parity() -> impl Strategy<Value = ParityTag> {
    prop_oneof![
        Just(ParityTag::BetsOnOdd),
        Just(ParityTag::BetsOnEven),
        Just(ParityTag::Unrestricted)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rational_text_round_trips(v in rational()) {
        prop_assert_eq!(parse_q(&fmt_q(&v)).unwrap(), v);
    }

    #[test]
    fn bit_text_round_trips(x in bits(40)) {
        prop_assert_eq!(x.to_string().parse::<BitString>().unwrap(), x);
    }

    #[test]
    fn interleave_places_bits_alternately(x in bits(20), extra in any::<bool>(), seed in any::<u64>()) {
        let mut g = gen::rng(seed);
        let y = BitString::from_bits((0..x.len()).map(|_| rand::Rng::gen_range(&mut g, 0..=1u8)));
        let x = if extra { x.child(1) } else { x };
        let z = interleave(&x, &y).unwrap();
        prop_assert_eq!(z.len(), x.len() + y.len());
        for i in 0..z.len() {
            let want = if i % 2 == 0 { x.bit(i / 2) } else { y.bit(i / 2) };
            prop_assert_eq!(z.bit(i), want);
        }
    }

    #[test]
    fn interleave_rejects_unbalanced(x in bits(10), y in bits(10)) {
        let ok = x.len() == y.len() || x.len() == y.len() + 1;
        prop_assert_eq!(interleave(&x, &y).is_ok(), ok);
    }

    #[test]
    fn samplers_respect_declared_tags(seed in any::<u64>(), p in parity(), depth in 0usize..6) {
        let mut g = gen::rng(seed);
        prop_assert!(validate(&gen::martingale(&mut g, depth, p, false).unwrap()).valid());
        prop_assert!(validate(&gen::supermartingale(&mut g, depth, p, 6).unwrap()).valid());
    }

    #[test]
    fn factorization_multiplies_back(seed in any::<u64>(), depth in 0usize..7, positive in any::<bool>()) {
        let mut g = gen::rng(seed);
        let m = gen::martingale(&mut g, depth, ParityTag::Unrestricted, positive).unwrap();
        let (e, o) = parity_factorize(&m).unwrap();
        let root = m.value(&BitString::empty());
        for (s, v) in m.values() {
            prop_assert_eq!(&(&root * e.value(s) * o.value(s)), v);
        }
        prop_assert_eq!(e.value(&BitString::empty()), Q::one());
        prop_assert_eq!(o.value(&BitString::empty()), Q::one());
        prop_assert!(validate(&e).valid() && e.parity == ParityTag::BetsOnOdd);
        prop_assert!(validate(&o).valid() && o.parity == ParityTag::BetsOnEven);
    }

    #[test]
    fn single_parity_martingales_factor_trivially(seed in any::<u64>(), depth in 0usize..6) {
        let mut g = gen::rng(seed);
        let m = gen::martingale(&mut g, depth, ParityTag::BetsOnOdd, true).unwrap();
        let (_, o) = parity_factorize(&m).unwrap();
        prop_assert!(o.values().values().all(|v| v.is_one()));
    }

    #[test]
    fn online_view_round_trips(seed in any::<u64>(), half_depth in 0usize..4, odd in any::<bool>()) {
        let mut g = gen::rng(seed);
        let p = if odd { ParityTag::BetsOnOdd } else { ParityTag::BetsOnEven };
        let m = gen::martingale(&mut g, 2 * half_depth, p, false).unwrap();
        let back = from_online(&to_online(&m).unwrap()).unwrap();
        prop_assert_eq!(back.values(), m.values());
    }

    #[test]
    fn mixtures_of_martingales_are_martingales(seed in any::<u64>(), p in parity(), w in 0i64..8) {
        let mut g = gen::rng(seed);
        let a = gen::martingale(&mut g, 4, p, false).unwrap();
        let b = gen::martingale(&mut g, 4, p, false).unwrap();
        let c = combine(&[(q(w, 8), &a), (q(8 - w, 8), &b)]).unwrap();
        prop_assert!(validate(&c.with_tags(Kind::Martingale, p, Default::default())).valid());
    }

    #[test]
    fn floor_lies_below_and_keeps_its_tag(seed in any::<u64>(), k in 1usize..5, odd in any::<bool>()) {
        let mut g = gen::rng(seed);
        let m = gen::supermartingale(&mut g, k, ParityTag::Unrestricted, 6).unwrap();
        let tag = if odd { ParityTag::BetsOnOdd } else { ParityTag::BetsOnEven };
        let mut modes = vec![(FloorMode::Plain, ParityTag::Unrestricted)];
        if k % 2 == 0 {
            modes.push((FloorMode::Parity(tag), tag));
        }
        for (mode, want) in modes {
            let f = floor(&m, k, mode).unwrap();
            prop_assert!(validate(&f).valid());
            prop_assert_eq!(f.kind, Kind::Martingale);
            prop_assert_eq!(f.parity, want);
            for (s, v) in m.values() {
                prop_assert!(&f.value(s) <= v && !f.value(s).is_negative());
            }
        }
    }

    #[test]
    fn plain_floor_of_a_martingale_is_itself(seed in any::<u64>(), k in 1usize..5) {
        let mut g = gen::rng(seed);
        let m = gen::martingale(&mut g, k, ParityTag::Unrestricted, false).unwrap();
        let f = floor(&m, k, FloorMode::Plain).unwrap();
        prop_assert_eq!(f.values(), m.values());
    }

    #[test]
    fn canonical_block_part_meets_its_leaves(m00 in 0i64..=16, m10 in 0i64..=16, d in 1i64..=4) {
        let (a, b) = (q(m00, d), q(m10, d));
        let t = block_min_even(&a, &b).unwrap();
        prop_assert!(validate(&t).valid() && t.parity == ParityTag::BetsOnOdd);
        prop_assert_eq!(t.value(&"00".parse().unwrap()), a.clone());
        prop_assert_eq!(t.value(&"10".parse().unwrap()), b.clone());
        prop_assert_eq!(t.value(&BitString::empty()) * Q::from_integer(2.into()), a.max(b));
    }

    #[test]
    fn block_decomposition_sums_back(seed in any::<u64>()) {
        let mut g = gen::rng(seed);
        let inst = gen::block_instance(&mut g, 6).unwrap();
        // martingale version of the sampled instance: canonical parts plus
        // the sampled slack spread fairly
        let m0 = block_min_even(&inst.spec.m00, &inst.spec.m10).unwrap();
        let extra = (inst.m.value(&BitString::empty()) - m0.value(&BitString::empty())).max(Q::zero());
        let m = combine(&[(Q::one(), &m0), (extra, &paritybet::StrategyTable::from_pairs(
            Kind::Martingale, ParityTag::BetsOnOdd,
            &[("", Q::one()), ("0", Q::one()), ("1", Q::one()), ("00", Q::one()), ("01", Q::one()), ("10", Q::one()), ("11", Q::one())],
        ).unwrap())]).unwrap().with_tags(Kind::Martingale, ParityTag::BetsOnOdd, Default::default());
        // N keeps the sampled first-round values; its root is made fair
        let (y0, y1) = (inst.n.value(&"0".parse().unwrap()), inst.n.value(&"1".parse().unwrap()));
        let n = paritybet::StrategyTable::from_pairs(
            Kind::Martingale, ParityTag::BetsOnEven,
            &[("", (&y0 + &y1) / Q::from_integer(2.into())), ("0", y0.clone()), ("1", y1.clone()),
              ("00", y0.clone()), ("01", y0), ("10", y1.clone()), ("11", y1)],
        ).unwrap();
        let dec = block_decompose(&m, &n, &inst.spec).unwrap();
        for (s, v) in m.values() {
            prop_assert_eq!(&(dec.m0.value(s) + dec.d_m.value(s)), v);
        }
        for (s, v) in n.values() {
            prop_assert_eq!(&(dec.n0.value(s) + dec.d_n.value(s)), v);
        }
        prop_assert!(validate(&dec.d_m).valid() && validate(&dec.d_n).valid());
    }
}

#[test]
fn budget_inequality_holds_from_level_one() {
    let p = params(8).unwrap();
    let mut sum = 0u64;
    for e in &p {
        if e.n >= 1 {
            // s_n·q_n − p_n > n + Σ_{i<n} p_i, recomputed in integers: q_n = (n+8)/(2n+4)
            let lhs = (e.s as u128) * (e.n as u128 + 8);
            let rhs = (e.p as u128 + e.n as u128 + sum as u128) * (2 * e.n as u128 + 4);
            assert!(lhs > rhs, "n = {}", e.n);
            assert!(e.budget_ok);
        }
        sum += e.p;
    }
}
