use cantor_core::digits::{shift_T, Tail, SHIFT_DEPTH};
use cantor_core::foundry::{counterexample_stream, derived_base, kappa_stream, mff_stream, qnex_stream, rdn_stream, CounterMode, MffSpec, MffStage, StageBlock, StageParams, default_eps};
use cantor_core::normal::{accumulation_estimate, count_blocks, ud_report, Block, UdMode};
use cantor_core::{BasicSeq, DigitStream, Nat, Rat};
use num_bigint::BigInt;
use num_integer::Roots;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn n(v: u64) -> Nat {
    Nat::from(v)
}

fn golden(q: BasicSeq) -> DigitStream {
    DigitStream::from_fn(q, "golden", |m| {
        let q = n(m + 3);
        let fl = ((n(5) * n(m) * n(m)).sqrt() - n(m)) >> 1u8;
        let qs = (n(5) * &q * &q * n(m) * n(m)).sqrt();
        (qs - &q * (n(m) + &fl * 2u8)) >> 1u8
    })
}

fn q_plus_three() -> BasicSeq {
    BasicSeq::affine(3, 1u8).unwrap()
}

#[test]
fn dn_not_rn_image_has_no_zero_digit() {
    let q = q_plus_three();
    let c = counterexample_stream(CounterMode::DNnotRN, &q, &golden(q.clone())).unwrap();
    assert!(c.diagnostics.is_empty());
    assert!(c.y.prefix(100_000).unwrap().iter().all(|d| !d.is_zero()));
    assert_eq!(c.p.q_at(10).unwrap(), n(12));
}

/// `|T_{Q,n-1}(x) - T_{Q,n-1}(y)|` never exceeds `sum_{j>=n} 1/(q_n ... q_j) < 1/(q_n - 1)`.
#[test]
fn dn_not_rn_orbits_stay_within_the_geometric_bound() {
    let q = q_plus_three();
    let x = golden(q.clone());
    let c = counterexample_stream(CounterMode::DNnotRN, &q, &x).unwrap();
    for m in 2..=10_000u64 {
        let tx = shift_T(&x, m - 1, SHIFT_DEPTH).unwrap();
        let ty = shift_T(&c.y, m - 1, SHIFT_DEPTH).unwrap();
        let gap_hi = (&tx.hi - &ty.lo).max(&ty.hi - &tx.lo);
        assert!(gap_hi < Rat::new(BigInt::one(), BigInt::from(m + 2)), "n = {m}");
    }
}

#[test]
fn nnot_dn_uses_natural_log() {
    let q = BasicSeq::geometric(1u8, 2u8).unwrap();
    let p = derived_base(CounterMode::NnotDN, &q);
    // ln 2^10 = 6.93
    assert_eq!(p.q_at(10).unwrap(), n(6));
    assert_eq!(p.q_at(1).unwrap(), n(2));
    let x = DigitStream::from_fn(q.clone(), "index", n);
    let c = counterexample_stream(CounterMode::NnotDN, &q, &x).unwrap();
    let pv = p.prefix(60).unwrap();
    for (k, d) in c.y.prefix(60).unwrap().iter().enumerate() {
        assert_eq!(d, &x.digit(k as u64 + 1).unwrap().min(&pv[k] - 1u8));
    }
}

/// Single-digit ratio `N_n((d), y) / Q_n^{(1)}` pooled over `d < 20`: digits are
/// spread over `p_n = q_n/2` values, so the ratio tends to 2.
#[test]
fn rn_not_n_single_digit_ratio_tends_to_two() {
    let q = q_plus_three();
    let p = derived_base(CounterMode::RNnotN, &q);
    let horizon = 100_000u64;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let digits: Vec<Nat> = p.prefix(horizon + 1).unwrap().iter().map(|b| n(rng.gen_range(0..b.to_u64().unwrap()))).collect();
    let x = DigitStream::from_digits(q.clone(), BigInt::zero(), digits, Tail::Zeros).unwrap();
    let c = counterexample_stream(CounterMode::RNnotN, &q, &x).unwrap();
    let blocks: Vec<Block> = (0..20).map(|d| Block::from_u64(&[d]).unwrap()).collect();
    let s = count_blocks(&c.y, &blocks, horizon, None).unwrap();
    let total: u64 = s.counts.iter().map(|(_, c)| c).sum();
    let ratio = total as f64 / (20.0 * s.qnk[0].approx);
    assert!((1.7..=2.3).contains(&ratio), "pooled ratio {ratio}");
    let bad = DigitStream::from_fn(q.clone(), "top", |m| n(m + 2));
    let c = counterexample_stream(CounterMode::RNnotN, &q, &bad).unwrap();
    assert!(c.y.digit(5).is_err());
}

/// Tails of `zeta` inside stage 6 are bounded by `6/63` (all digits at most 6 in
/// base 64) and the bound is approached right before the first `(0,...,0,6)` block.
#[test]
fn qnex_orbit_tails_bounded_by_six_over_sixty_three() {
    let (_, zeta) = qnex_stream(StageParams::default()).unwrap();
    let bound = Rat::new(6.into(), 63.into());
    let mut worst = Rat::zero();
    for m in 1..=5_000u64 {
        let t = shift_T(&zeta, m, 8).unwrap();
        assert!(t.hi <= bound, "n = {m}");
        worst = worst.max(t.lo);
    }
    assert!(worst > Rat::new(5.into(), 64.into()));
}

/// The tail bound `2^-5` fails inside stage 6: the digit after position 107 is 2.
#[test]
fn qnex_orbit_tails_exceed_one_thirty_second() {
    let (_, zeta) = qnex_stream(StageParams::default()).unwrap();
    assert_eq!(zeta.digit(108).unwrap(), n(2));
    let t = shift_T(&zeta, 107, 400).unwrap();
    assert!(t.lo > Rat::new(1.into(), 32.into()));
}

#[test]
fn rdn_spot_values_and_delta_alignment() {
    let params = StageParams { first_stage: 2, rep_coeff: 0, width_exp: 2 };
    let (q, img) = rdn_stream(params).unwrap();
    let (k, kappa) = kappa_stream(params).unwrap();
    let len = 2000u64;
    let (qv, e, kv, f) = (q.prefix(len).unwrap(), img.prefix(len).unwrap(), k.prefix(len).unwrap(), kappa.prefix(len).unwrap());
    for m in 0..len as usize {
        assert_eq!(&e[m] * &kv[m] / &qv[m], f[m], "n = {}", m + 1);
    }
}

#[test]
fn mff_alternating_value() {
    let spec = MffSpec::from_fn(1, |i| MffStage { l: n(1), b: n(2), eps: default_eps(i), x: StageBlock::Explicit(Arc::new(vec![n(0), n(1)])) }).unwrap();
    let (g, eta) = mff_stream(&spec);
    let e = cantor_core::digits::enclose_prefix(&eta, 60).unwrap();
    assert!(e.contains(&Rat::new(1.into(), 3.into())));
    assert_eq!(g.q_at(1000).unwrap(), n(2));
}

/// Every length-2 word over `{0, ..., i-1}` in lexicographic order.
fn all_pairs(b: u32) -> Vec<Nat> {
    (0..b).flat_map(|u| (0..b).flat_map(move |v| [n(u as u64), n(v as u64)])).collect()
}

/// Small-scale analogue of the kappa construction: `b_i = i`, `l_i = i`, and
/// `X_i` lists all pairs so every stage block is evenly weighted.
#[test]
fn small_scale_mff_discrepancy_decreases() {
    let spec = MffSpec::from_fn(2, |i| MffStage { l: n(i as u64), b: n(i as u64), eps: default_eps(i), x: StageBlock::Explicit(Arc::new(all_pairs(i))) }).unwrap();
    let (_, eta) = mff_stream(&spec);
    let rep = ud_report(&eta, UdMode::TOrbit, 80_000, &[500, 1000, 2000, 5000, 10_000, 20_000, 40_000]).unwrap();
    let d: Vec<f64> = rep.points.iter().map(|p| p.dstar.to_f64().unwrap()).collect();
    assert!(d.windows(2).all(|w| w[1] < w[0]), "{d:?}");
    assert!(d[d.len() - 1] < 0.005);
}

#[test]
fn accumulation_of_ed_image_matches_preimage() {
    let q = q_plus_three();
    let half = DigitStream::from_fn(q.clone(), "half", |m| n((m + 3) / 2));
    let t: cantor_core::dim::TSeq = Arc::new(|m| n(1 + m.sqrt() / 4));
    let out = cantor_core::dim::ed_transform(&q, t, &half, 4000, &[]).unwrap();
    let a = accumulation_estimate(&half, 4000, 20).unwrap();
    let b = accumulation_estimate(&out.image, 4000, 20).unwrap();
    assert_eq!(a.centers(), b.centers());
}
