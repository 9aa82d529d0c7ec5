use cantor_core::digits::{canonicalize, enclose_prefix, expand_rational, shift_T, Tail};
use cantor_core::dim::{level_measure_sum, range_report, wegmann_estimate, RestrictionSpec};
use cantor_core::foundry::{in_delta, lambda_mass, nu_digit, nu_mass, vbw_digit_count, vbw_len};
use cantor_core::normal::{all_blocks, count_blocks, count_in, star_discrepancy, Block};
use cantor_core::psi::{approximant_eval, psi_digits, psi_map, variation_exact};
use cantor_core::{BasicSeq, Canonicity, DigitStream, MeasureSpec, Nat, Rat};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

fn n(v: u64) -> Nat {
    Nat::from(v)
}

fn r(a: i64, b: i64) -> Rat {
    Rat::new(a.into(), b.into())
}

fn ratn(a: &Nat, b: &Nat) -> Rat {
    Rat::new(BigInt::from(a.clone()), BigInt::from(b.clone()))
}

/// Small base specs of every closed-form kind.
fn seq_strategy() -> impl Strategy<Value = BasicSeq> {
    prop_oneof![
        (2u64..12).prop_map(|v| BasicSeq::constant(v).unwrap()),
        (2i64..6, 0u64..4).prop_map(|(a, d)| BasicSeq::affine(a, d).unwrap()),
        (1u64..4, 2u64..4).prop_map(|(a, q)| BasicSeq::geometric(a, q).unwrap()),
        prop::collection::vec(2u64..9, 1..4).prop_map(|v| BasicSeq::periodic(v.into_iter().map(n).collect()).unwrap()),
        (1u64..1000).prop_map(|seed| BasicSeq::iid(MeasureSpec::new(2, 9, seed).unwrap())),
    ]
}

fn small_bases(len: usize) -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(2u64..7, len)
}

fn explicit(v: &[u64]) -> BasicSeq {
    BasicSeq::explicit(v.iter().map(|&x| n(x)).collect(), BasicSeq::constant(2u8).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn prefix_products_extend_by_one_factor(q in seq_strategy(), len in 2u64..300) {
        let a = q.prefix_products(len - 1, &[1]).unwrap();
        let b = q.prefix_products(len, &[1]).unwrap();
        prop_assert_eq!(b.prod, a.prod * q.q_at(len).unwrap());
    }

    #[test]
    fn qnk_matches_resummation(q in seq_strategy(), len in 1u64..200, k in 1u32..5) {
        let pp = q.prefix_products(len, &[k]).unwrap();
        let v = q.prefix(len + k as u64 - 1).unwrap();
        let mut want = Rat::zero();
        for j in 0..len as usize {
            let den: Nat = v[j..j + k as usize].iter().product();
            want += ratn(&Nat::one(), &den);
        }
        prop_assert_eq!(pp.qnk(k).unwrap(), &want);
        let next = q.prefix_products(len + 1, &[k]).unwrap();
        prop_assert!(next.qnk(k).unwrap() >= pp.qnk(k).unwrap());
    }

    #[test]
    fn bases_are_at_least_two_and_deterministic(q in seq_strategy(), from in 1u64..5000) {
        let a = q.values(from, 50).unwrap();
        prop_assert!(a.iter().all(|v| v >= &n(2)));
        prop_assert_eq!(&a, &q.values(from, 50).unwrap());
        for (k, v) in a.iter().enumerate().step_by(7) {
            prop_assert_eq!(v, &q.q_at(from + k as u64).unwrap());
        }
    }

    #[test]
    fn rational_round_trip(q in seq_strategy(), num in 0i64..1_000_000, den in 1i64..1_000_000) {
        let x = r(num % den, den);
        let d = expand_rational(&x, &q, 60).unwrap();
        let qv = q.prefix(60).unwrap();
        let mut prod = Nat::one();
        for depth in 1..=60u64 {
            prod *= &qv[depth as usize - 1];
            let e = enclose_prefix(&d, depth).unwrap();
            prop_assert!(e.contains(&x));
            if !e.is_exact() {
                prop_assert_eq!(e.width(), ratn(&Nat::one(), &prod));
            }
        }
    }

    #[test]
    fn shift_matches_remainder(q in seq_strategy(), num in 0i64..100_000, den in 1i64..100_000, m in 0u64..40) {
        let x = r(num % den, den);
        let d = expand_rational(&x, &q, 120).unwrap();
        if let Some(rem) = d.remainder(m) {
            let t = shift_T(&d, m, 40).unwrap();
            prop_assert!(t.contains(&rem));
            if t.is_exact() {
                prop_assert_eq!(t.mid(), rem);
            }
        }
    }

    #[test]
    fn canonicalize_is_an_involution(q in seq_strategy(), digits in prop::collection::vec(0u64..2, 1..8)) {
        let mut digits: Vec<Nat> = digits.into_iter().map(n).collect();
        let last = digits.len() - 1;
        digits[last] = n(1);
        let d = DigitStream::from_digits(q.clone(), BigInt::zero(), digits.clone(), Tail::Zeros).unwrap();
        let swapped = canonicalize(&d).unwrap().stream;
        let is_max_tail = matches!(swapped.canonicity(), Canonicity::MaxTail { .. });
        prop_assert!(is_max_tail);
        prop_assert_eq!(swapped.value_exact(), d.value_exact());
        let back = canonicalize(&swapped).unwrap().stream;
        prop_assert_eq!(back.prefix(20).unwrap(), d.prefix(20).unwrap());
        prop_assert_eq!(back.int_part(), d.int_part());
    }

    #[test]
    fn image_digit_contract(p in seq_strategy(), q in seq_strategy(), seed in any::<u64>()) {
        let pv = p.prefix(300).unwrap();
        let e: Vec<Nat> = pv.iter().enumerate().map(|(k, b)| (n(seed.rotate_left(k as u32 % 64)) + n(k as u64)) % b).collect();
        let d = DigitStream::from_digits(p.clone(), BigInt::zero(), e.clone(), Tail::Zeros).unwrap();
        let img = psi_map(&d, &q).unwrap().prefix(300).unwrap();
        let qv = q.prefix(300).unwrap();
        prop_assert_eq!(&img, &psi_digits(&e, &qv));
        for (k, v) in img.iter().enumerate() {
            prop_assert!(v < &qv[k]);
        }
    }

    #[test]
    fn variation_respects_upper_bound(p in small_bases(6), q in small_bases(6), t in 1u64..=6) {
        let rep = variation_exact(&explicit(&p), &explicit(&q), t).unwrap();
        prop_assert!(rep.v <= rep.upper_bound);
        prop_assert!(rep.v.is_positive());
    }

    #[test]
    fn approximant_error_bound(p in seq_strategy(), q in seq_strategy(), num in 0i64..9999, t in 2u64..12) {
        let x = r(num, 9999);
        let a = approximant_eval(&p, &q, t, &x).unwrap();
        let b = approximant_eval(&p, &q, t + 30, &x).unwrap();
        prop_assert!((a - b).abs() <= Rat::new(BigInt::one(), BigInt::one() << (t - 1)));
    }

    #[test]
    fn psi_increasing_when_p_below_q(q in small_bases(4), bump in prop::collection::vec(0u64..3, 4)) {
        // p_n <= q_n: distinct depth-4 points keep their order under psi
        let p: Vec<u64> = q.iter().zip(&bump).map(|(b, s)| (b.saturating_sub(*s)).max(2)).collect();
        let (ps, qs) = (explicit(&p), explicit(&q));
        let qv: Vec<Nat> = q.iter().map(|&v| n(v)).collect();
        let mut prev: Option<Rat> = None;
        let cells: u64 = p.iter().product();
        for code in 0..cells {
            let mut c = code;
            let mut digits = vec![Nat::zero(); 4];
            for j in (0..4).rev() {
                digits[j] = n(c % p[j]);
                c /= p[j];
            }
            let d = DigitStream::from_digits(ps.clone(), BigInt::zero(), digits, Tail::Zeros).unwrap();
            let img = psi_map(&d, &qs).unwrap().prefix(4).unwrap();
            let mut v = Rat::zero();
            let mut den = Nat::one();
            for (e, b) in img.iter().zip(&qv) {
                den *= b;
                v += ratn(e, &den);
            }
            if let Some(w) = &prev {
                prop_assert!(&v > w);
            }
            prev = Some(v);
        }
    }

    #[test]
    fn block_counts_additive_and_monotone(digits in prop::collection::vec(0u64..3, 10..200), split in any::<u64>()) {
        let d: Vec<Nat> = digits.iter().map(|&v| n(v)).collect();
        let len = d.len() as u64;
        let blocks = all_blocks(2, 3);
        let pos: Vec<u64> = (1..=len).collect();
        let (a, b): (Vec<u64>, Vec<u64>) = pos.iter().partition(|&&m| (split >> (m % 64)) & 1 == 1);
        let whole = count_in(&d, &blocks, len, None);
        let ca = count_in(&d, &blocks, len, Some(&a));
        let cb = count_in(&d, &blocks, len, Some(&b));
        for i in 0..blocks.len() {
            prop_assert_eq!(whole[i], ca[i] + cb[i]);
            prop_assert!(whole[i] <= len);
        }
        let shorter = count_in(&d, &blocks, len / 2, None);
        prop_assert!(shorter.iter().zip(&whole).all(|(s, w)| s <= w));
    }

    #[test]
    fn star_discrepancy_matches_naive(pts in prop::collection::vec((0i64..500, 1i64..500), 1..120)) {
        let pts: Vec<Rat> = pts.into_iter().map(|(a, b)| r(a % b, b)).collect();
        let nn = pts.len() as i64;
        let mut want = Rat::zero();
        for x in &pts {
            let le = pts.iter().filter(|y| *y <= x).count() as i64;
            let lt = pts.iter().filter(|y| *y < x).count() as i64;
            want = want.max(r(le, nn) - x).max(x - r(lt, nn));
        }
        prop_assert_eq!(star_discrepancy(&pts).unwrap(), want);
    }

    #[test]
    fn nu_masses_are_products(b in 1u32..8, block in prop::collection::vec(0u64..9, 1..6)) {
        let digits: Vec<Nat> = block.iter().map(|&v| n(v)).collect();
        let total: Rat = (0..=b as u64).map(|j| nu_digit(b, &n(j))).sum();
        prop_assert_eq!(total, Rat::one());
        let prod: Rat = digits.iter().map(|d| nu_digit(b, d)).product();
        prop_assert_eq!(nu_mass(b, &digits).unwrap(), prod);
        let lam = lambda_mass(b + 1, &digits);
        if block.iter().all(|&v| v <= b as u64) {
            prop_assert_eq!(lam, Rat::new(BigInt::one(), BigInt::from(b + 1).pow(block.len() as u32)));
        } else {
            prop_assert!(lam.is_zero());
        }
    }

    #[test]
    fn vbw_digit_counts_partition(b in 1u32..10, w in 1u32..10, frac in 0u64..1000) {
        let len = vbw_len(b, w);
        let idx = &len * frac / 1000u32 + 1u8;
        let idx = idx.min(len.clone());
        let total: Nat = (0..=b).map(|v| vbw_digit_count(b, w, v, &idx).unwrap()).sum();
        prop_assert_eq!(total, idx);
        prop_assert_eq!(vbw_digit_count(b, w, b + 1, &len).unwrap(), Nat::zero());
    }

    #[test]
    fn in_delta_holds(i in 2u64..1_000_000, a in 1u64..1_000_000) {
        let alpha = 1 + a % (i - 1);
        prop_assert!(in_delta(i, alpha));
    }

    #[test]
    fn dim_running_min_bounds_checkpoints(b in 3u64..40, a in 1u64..40) {
        let a = a.min(b);
        let q = BasicSeq::constant(b).unwrap();
        let rep = wegmann_estimate(&q, &RestrictionSpec::constant(a), 500, &[5, 50]).unwrap();
        for pt in &rep.dim.checkpoints {
            prop_assert!(rep.dim.running_min <= pt.value.mid + 1e-12);
            prop_assert!(pt.value.lo() <= pt.value.hi());
        }
    }

    #[test]
    fn range_partials_nonincreasing(p in seq_strategy(), q in seq_strategy()) {
        let mut prev = Rat::one();
        let pv = p.prefix(40).unwrap();
        let qv = q.prefix(40).unwrap();
        for m in [1u64, 5, 10, 20, 40] {
            let rep = range_report(&p, &q, m, &[]).unwrap();
            let part = rep.measure_partial.unwrap();
            let want: Rat = (0..m as usize).map(|j| ratn(&pv[j].clone().min(qv[j].clone()), &qv[j])).product();
            prop_assert_eq!(&part, &want);
            prop_assert!(part <= prev);
            prev = part;
        }
    }

    #[test]
    fn level_sum_within_tail_bound(base in 3u64..6, k in 5u64..40) {
        let p = BasicSeq::geometric(1u8, base).unwrap();
        let q = BasicSeq::constant(2u8).unwrap();
        let rep = level_measure_sum(&p, &q, k).unwrap();
        let bound = rep.tail_bound.unwrap();
        prop_assert!((&rep.partial - &rep.telescoped).abs() <= bound);
    }
}

#[test]
fn iid_samples_reproducible() {
    let m = MeasureSpec::new(2, 10, 42).unwrap();
    let a = m.sample(1_000_000);
    let b = MeasureSpec::new(2, 10, 42).unwrap().sample(1_000_000);
    assert_eq!(a, b);
    assert!(a.iter().all(|v| (2..=10).contains(v)));
    let q = BasicSeq::iid(m);
    let tail = q.values(999_990, 10).unwrap();
    assert_eq!(tail, a[999_989..999_999].iter().map(|&v| n(v)).collect::<Vec<_>>());
}

#[test]
fn geometric_grows_without_wrapping() {
    let q = BasicSeq::geometric(3u8, 2u8).unwrap();
    assert_eq!(q.q_at(200).unwrap(), n(3) << 200u32);
}

#[test]
fn block_counts_of_streams() {
    let q = BasicSeq::constant(3u8).unwrap();
    let d = expand_rational(&r(1, 4), &q, 100).unwrap();
    let blocks = vec![Block::from_u64(&[0]).unwrap(), Block::from_u64(&[2]).unwrap(), Block::from_u64(&[0, 2]).unwrap()];
    let s = count_blocks(&d, &blocks, 100, None).unwrap();
    // 1/4 = 0.(02) in base 3
    assert_eq!(s.count(&blocks[0]), Some(50));
    assert_eq!(s.count(&blocks[1]), Some(50));
    assert_eq!(s.count(&blocks[2]), Some(50));
}
