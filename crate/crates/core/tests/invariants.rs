use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use proptest::prelude::*;

use marstrand_core::audit::{cost_deltas, decode_blocks, phrase_count, COST_BOUND};
use marstrand_core::bits::{
    decode_int, decode_nat, deinterleave, encode_int_i64, encode_nat_u64, interleave, pair, unpair,
};
use marstrand_core::construct::{
    build_thm1, build_thm2, partition_t, recover_a, recover_parity, Condition, PrngBits, Ratio, Schedule,
    TargetSequence,
};
use marstrand_core::dyadic::{interval_of, largest_closed_dyadic_in, scale_interval_inner, Dyadic, DyadicInterval, Multiplier, Real};
use marstrand_core::extension::extend_with_block;
use marstrand_core::geometry::{count_dyadics_in_ball, Angle, BALL_COUNT_BOUND};
use marstrand_core::BitString;

fn bits(max: usize) -> impl Strategy<Value = BitString> {
    prop::collection::vec(any::<bool>(), 0..=max).prop_map(BitString::from_bools)
}

fn bits_nonempty(max: usize) -> impl Strategy<Value = BitString> {
    prop::collection::vec(any::<bool>(), 1..=max).prop_map(BitString::from_bools)
}

fn q(p: i64, d: i64) -> BigRational {
    BigRational::new(p.into(), d.into())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn int_codes_round_trip(n in -1_000_000i64..=1_000_000) {
        prop_assert_eq!(decode_int(&encode_int_i64(n)).unwrap(), BigInt::from(n));
    }

    #[test]
    fn nat_code_length(k in 1u64..=1_000_000) {
        let s = encode_nat_u64(k);
        prop_assert!(s.len() as u64 <= k.ilog2() as u64 + 1);
        prop_assert_eq!(decode_nat(&s).unwrap(), BigUint::from(k));
    }

    #[test]
    fn pairing_is_bijective(i in 0u64..1_000_000, n in 0u64..1_000_000, k in 0u128..1_000_000) {
        prop_assert_eq!(unpair(pair(i, n)), (i, n));
        let (a, b) = unpair(k);
        prop_assert_eq!(pair(a, b), k);
    }

    #[test]
    fn deinterleave_inverts(m in 1usize..5, len in 0usize..40, seed in any::<u64>()) {
        let src = PrngBits::new(seed);
        let streams: Vec<BitString> = (0..m).map(|i| src.range((i * len) as u64, len as u64)).collect();
        let woven = interleave(&streams).unwrap();
        prop_assert_eq!(deinterleave(&woven, m).unwrap(), streams);
    }

    #[test]
    fn phrase_count_subadditive(s in bits(600), t in bits(600)) {
        let st = s.concat(&t);
        prop_assert!(phrase_count(&st) <= phrase_count(&s) + phrase_count(&t) + 1);
    }

    #[test]
    fn target_forced_positions(num in 0u64..=16, den in 1u64..=16, seed in any::<u64>(), n in 0u64..2000) {
        prop_assume!(num <= den);
        let eps = Ratio::new(num, den).unwrap();
        let t = TargetSequence::new(eps, seed);
        let free = (0..n).filter(|&i| t.carries_random(i)).count() as u64;
        prop_assert_eq!(free, num * n / den);
        let p = t.prefix(n);
        prop_assert!((0..n).all(|i| t.carries_random(i) || !p.get(i as usize)));
    }

    #[test]
    fn ball_counts(xn in -(1i64 << 22)..(1i64 << 22), yn in -(1i64 << 22)..(1i64 << 22), k in 0u64..20, r in 0u64..24) {
        let a = (Dyadic::new(xn, k), Dyadic::new(yn, k));
        let n = count_dyadics_in_ball(&a, r);
        prop_assert!(n <= BALL_COUNT_BOUND);
        // brute force in floating point; the boundary 1 + √2 is irrational
        let (cx, cy) = (xn as f64 / (1u64 << k) as f64 * (1u64 << r) as f64, yn as f64 / (1u64 << k) as f64 * (1u64 << r) as f64);
        let rad = 1.0 + 2f64.sqrt();
        let mut brute = 0;
        for zx in (cx.floor() as i64 - 3)..=(cx.floor() as i64 + 4) {
            for zy in (cy.floor() as i64 - 3)..=(cy.floor() as i64 + 4) {
                let d2 = (zx as f64 - cx).powi(2) + (zy as f64 - cy).powi(2);
                brute += u64::from(d2 < rad * rad);
            }
        }
        prop_assert_eq!(n, brute);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn coding_interval_membership(sigma in bits(64), tail in bits(40)) {
        let i = interval_of(&sigma);
        prop_assert_eq!(i.diameter(), Dyadic::new(1, sigma.len() as u64));
        let rho = sigma.concat(&tail);
        let x = Dyadic::from_bits(&rho);
        // a proper extension lands inside unless it only appends zeros, which hits the left end
        prop_assert_eq!(i.contains(&x), tail.count_ones() > 0);
    }

    #[test]
    fn non_extensions_land_outside(sigma in bits_nonempty(64), rho in bits(80)) {
        prop_assume!(!sigma.is_prefix_of(&rho));
        prop_assert!(!interval_of(&sigma).contains(&Dyadic::from_bits(&rho)));
    }

    #[test]
    fn largest_dyadic_matches_search(lo in 0i64..4096, w in 1i64..4096) {
        let (lo_d, hi_d) = (Dyadic::new(lo, 12), Dyadic::new(lo + w, 12));
        let got = largest_closed_dyadic_in(&DyadicInterval::open(lo_d, hi_d).unwrap()).unwrap();
        // exhaustive over k ≤ 12 + 3, scaled to 2^15
        let (l, h) = (lo << 3, (lo + w) << 3);
        let mut best = None;
        'outer: for k in 0..=15u32 {
            let step = 1i64 << (15 - k);
            let mut j = l.div_euclid(step);
            while j * step <= h {
                if l < j * step && (j + 1) * step < h {
                    best = Some((j, k));
                    break 'outer;
                }
                j += 1;
            }
        }
        let (j, k) = best.unwrap();
        prop_assert_eq!(got, DyadicInterval::closed(Dyadic::new(j, k as u64), Dyadic::new(j + 1, k as u64)).unwrap());
    }

    #[test]
    fn scaled_interval_is_inside(p in 1i64..200, d in 1i64..200, lo in 0i64..1000, w in 1i64..1000, stream in any::<bool>()) {
        let a = if stream { Real::rational_stream(q(p, d)) } else { Real::rational(p, d) };
        let i = DyadicInterval::open(Dyadic::new(lo, 10), Dyadic::new(lo + w, 10)).unwrap();
        let inner = scale_interval_inner(&a, &i, false).unwrap();
        let a = q(p, d);
        prop_assert!(inner.lo().to_rational() >= &a * i.lo().to_rational());
        prop_assert!(inner.hi().to_rational() <= &a * i.hi().to_rational());
        prop_assert!(inner.lo() < inner.hi());
    }
}

fn small_multiplier() -> impl Strategy<Value = Real> {
    prop_oneof![
        (1i64..256, 0u32..9).prop_map(|(j, k)| Real::rational(j.min(1 << k).max(1), 1 << k)),
        (1i64..6, 13i64..40).prop_map(|(p, d)| Angle::pi_times(p, d).cos()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn extension_step(sigma in bits(40), a in small_multiplier(), b in bits_nonempty(16)) {
        let m = Multiplier::new(a).unwrap();
        let e = extend_with_block(&sigma, &m, &b).unwrap();
        prop_assert!(sigma.is_proper_prefix_of(&e.rho));
        prop_assert!(e.tau.ends_with(&b));
        prop_assert!(e.rho.len() <= sigma.len() + b.len() + 4);
        prop_assert_eq!(extend_with_block(&sigma, &m, &b).unwrap(), e);
    }
}

fn schedules() -> impl Strategy<Value = Schedule> {
    prop_oneof![Just(Schedule::Thm1Paper), (3u64..=8).prop_map(|b| Schedule::scaled(1 << b).unwrap())]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn schedule_divisibility(s in schedules(), k in 0u64..5) {
        if let (Ok(nu), Ok(next)) = (s.nu(k), s.nu(k + 1)) {
            prop_assert!(next > nu);
            if s.has_blocks() && k >= s.start_stage() {
                let (xi, mu) = (s.xi(k).unwrap(), s.mu(k).unwrap());
                prop_assert_eq!(xi * mu, next - nu - 1);
                prop_assert_eq!(s.block_len(k).unwrap(), mu - 5);
            }
        }
    }
}

fn conditions() -> impl Strategy<Value = Vec<Condition>> {
    let one = prop_oneof![
        (1u64..40, 2u64..41).prop_filter("proper", |(p, q)| p < q).prop_map(|(p, q)| format!("{p}/{q}")),
        (1u64..5, 11u64..30).prop_map(|(p, q)| format!("cos({p}/{q} pi)")),
        Just("0".to_string()),
    ];
    prop::collection::vec(one, 1..4).prop_map(|v| Condition::parse_all(&v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn zero_coding_builds(conds in conditions(), seed in any::<u64>(), stages in 1u64..=3) {
        let sched = Schedule::scaled(8).unwrap();
        let oracle = PrngBits::new(seed);
        let b = build_thm1(&oracle, &conds, sched, stages, 1 << 20).unwrap();
        prop_assert_eq!(b.x.len() as u64, sched.nu(stages).unwrap());
        for t in &b.traces {
            prop_assert_eq!(t.x_len, sched.nu(t.stage).unwrap());
        }
        prop_assert_eq!(recover_a(&b.x, &sched, stages).unwrap(), oracle.range(0, stages));
        let again = build_thm1(&oracle, &conds, sched, stages, 1 << 20).unwrap();
        prop_assert_eq!(again.x, b.x);
    }

    #[test]
    fn block_coding_builds(conds in conditions(), seed in any::<u64>(), eps in 0u64..=4, stages in 2u64..=3) {
        let sched = Schedule::scaled(8).unwrap();
        let (oracle, phi) = (PrngBits::new(seed), PrngBits::with_stream(seed, 1));
        let t = TargetSequence::new(Ratio::new(eps, 4).unwrap(), seed);
        let b = build_thm2(&oracle, &phi, &conds, &t, sched, stages, 1 << 20).unwrap();
        prop_assert_eq!(b.x.len() as u64, sched.nu(stages).unwrap());
        let (ra, rp) = recover_parity(&b.x, &sched, stages).unwrap();
        prop_assert_eq!(ra, oracle.range(0, stages.div_ceil(2)));
        prop_assert_eq!(rp, phi.range(0, stages / 2));
        prop_assert!(cost_deltas(&b.traces).iter().all(|d| d.delta <= COST_BOUND));

        let blocks = partition_t(&t, &sched, stages).unwrap();
        for tr in b.traces.iter().filter(|t| t.coded) {
            let a = conds[tr.requirement].multiplier().unwrap();
            let want = blocks.iter().filter(|blk| blk.k == tr.k).fold(BitString::new(), |acc, blk| acc.concat(&blk.bits));
            prop_assert_eq!(&decode_blocks(&b.x, a, &sched, tr.k, Some(tr)).unwrap().bits, &want);
            prop_assert_eq!(&decode_blocks(&b.x, a, &sched, tr.k, None).unwrap().bits, &want);
        }
    }
}

/// A stream multiplier that is rational underneath, checked exactly.
#[test]
fn zero_coding_with_stream_multiplier() {
    let c = Condition::parse_all(&["cos(1/7 pi)"]).unwrap();
    let sched = Schedule::scaled(8).unwrap();
    let b = build_thm1(&PrngBits::new(4), &c, sched, 3, 1 << 20).unwrap();
    assert_eq!(b.x.len() as u64, sched.nu(3).unwrap());
    assert!(b.traces.iter().any(|t| t.is_coded()));

    let third = Multiplier::new(Real::rational_stream(q(1, 3))).unwrap();
    let sigma: BitString = "0110".parse().unwrap();
    let blk: BitString = "1011001".parse().unwrap();
    let e = extend_with_block(&sigma, &third, &blk).unwrap();
    let (j, t) = (interval_of(&e.rho), interval_of(&e.tau));
    assert!(q(1, 3) * j.lo().to_rational() > t.lo().to_rational());
    assert!(q(1, 3) * j.hi().to_rational() < t.hi().to_rational());
}

/// Singular values of the polar map's Jacobian are 1 and r.
#[test]
fn polar_map_is_lipschitz() {
    let mut worst = 0f64;
    for i in 0..256 {
        for j in 0..256 {
            let r = i as f64 / 255.0;
            let th = j as f64 / 255.0 * std::f64::consts::FRAC_PI_2;
            let (a, b, c, d) = (th.cos(), -r * th.sin(), th.sin(), r * th.cos());
            // largest singular value of [[a, b], [c, d]]
            let t = a * a + b * b + c * c + d * d;
            let det = a * d - b * c;
            let s = ((t + (t * t - 4.0 * det * det).max(0.0).sqrt()) / 2.0).sqrt();
            worst = worst.max(s);
        }
    }
    assert!(worst <= 1.0 + 2f64.powi(-10), "{worst}");
}
