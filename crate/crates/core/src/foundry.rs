//! Explicit constructions: `nu_b`, the blocks `V_{b,w}`, modular friendly
//! families, the pair `(P, zeta)`, the staged RDN sequence and the
//! counterexample transforms.
//!
//! Nothing here is materialized. Stage lengths such as `36 * 2^216` are handled
//! as big integers and every digit is located by index arithmetic.

use alloc::{format, string::String, sync::Arc, vec, vec::Vec};
use core::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::digits::{DigitRule, DigitStream};
use crate::error::{invalid, Error, Result};
use crate::logs::{ln_nat, Bracket};
use crate::psi::{compose_chain, psi_map};
use crate::seq::{rat, BasicSeq, Handle, SeqRule};
use crate::{Nat, Rat};

/// `nu_b((j))`: `2^-b` below `b`, `(2^b - b)/2^b` at `b`, 0 above.
pub fn nu_digit(b: u32, j: &Nat) -> Rat {
    let two_b = Nat::one() << b;
    match j.cmp(&Nat::from(b)) {
        core::cmp::Ordering::Less => rat(&Nat::one(), &two_b),
        core::cmp::Ordering::Equal => rat(&(&two_b - b), &two_b),
        core::cmp::Ordering::Greater => Rat::zero(),
    }
}

/// Product mass `nu_b(B)`.
pub fn nu_mass(b: u32, block: &[Nat]) -> Result<Rat> {
    if b == 0 {
        return Err(invalid("nu_b needs b >= 1"));
    }
    Ok(block.iter().map(|d| nu_digit(b, d)).product())
}

/// `lambda_b(B) = b^-k` for blocks in base `b`, 0 otherwise.
pub fn lambda_mass(b: u32, block: &[Nat]) -> Rat {
    if block.iter().any(|d| d >= &Nat::from(b)) {
        return Rat::zero();
    }
    rat(&Nat::one(), &Nat::from(b).pow(block.len() as u32))
}

/// `|V_{b,w}| = w 2^{bw}`.
pub fn vbw_len(b: u32, w: u32) -> Nat {
    Nat::from(w) << (b as u64 * w as u64)
}

/// Repeat count `2^{bw} nu_b(V) = (2^b - b)^{#b in V}` of a block.
pub fn vbw_weight(b: u32, block: &[u32]) -> Nat {
    let heavy = (Nat::one() << b) - b;
    heavy.pow(block.iter().filter(|&&d| d == b).count() as u32)
}

fn check_bw(b: u32, w: u32) -> Result<()> {
    if b == 0 || w == 0 {
        return Err(invalid("V_{b,w} needs positive b and w"));
    }
    Ok(())
}

/// Block `V` and copy number for the 0-based block slot `r` of `V_{b,w}`.
fn unrank_block(b: u32, w: u32, mut r: Nat) -> (Vec<u32>, Nat) {
    let heavy = (Nat::one() << b) - b;
    let mut pi = Nat::one();
    let mut out = Vec::with_capacity(w as usize);
    for j in 0..w {
        let m = (w - j - 1) as u64;
        let unit = &pi << (b as u64 * m);
        let d = (&r / &unit).min(Nat::from(b));
        r -= &d * &unit;
        let d = d.to_u32().unwrap_or(b);
        if d == b {
            pi *= &heavy;
        }
        out.push(d);
    }
    (out, r)
}

/// Digit of `V_{b,w}` at the 1-based position `idx`.
pub fn vbw_digit(b: u32, w: u32, idx: &Nat) -> Result<u32> {
    check_bw(b, w)?;
    let len = vbw_len(b, w);
    if idx.is_zero() || idx > &len {
        return Err(Error::OutOfRange { index: idx.clone(), len });
    }
    let (slot, off) = (idx - 1u8).div_rem(&Nat::from(w));
    let (block, _) = unrank_block(b, w, slot);
    Ok(block[off.to_usize().unwrap_or(0)])
}

/// `#{t <= idx : V_{b,w}[t] = v}`.
///
/// Over a free suffix of `m` positions the weights sum to `2^{bm}` and each
/// position holds `v` with total weight `c(v) 2^{b(m-1)}`, so the count over
/// all lexicographically smaller blocks has a closed form per digit position.
pub fn vbw_digit_count(b: u32, w: u32, v: u32, idx: &Nat) -> Result<Nat> {
    check_bw(b, w)?;
    let len = vbw_len(b, w);
    if idx > &len {
        return Err(Error::OutOfRange { index: idx.clone(), len });
    }
    if idx.is_zero() {
        return Ok(Nat::zero());
    }
    let heavy = (Nat::one() << b) - b;
    let cv = if v == b { heavy.clone() } else if v < b { Nat::one() } else { return Ok(Nat::zero()) };
    let (slot, off) = (idx - 1u8).div_rem(&Nat::from(w));
    let (block, copy) = unrank_block(b, w, slot);
    let off = off.to_usize().unwrap_or(0);
    let mut total = Nat::zero();
    let mut pi = Nat::one();
    let mut pv = 0u64;
    for (j, &d) in block.iter().enumerate() {
        let m = (w as usize - j - 1) as u64;
        let wm = Nat::one() << (b as u64 * m);
        let per_pos = if m == 0 { Nat::zero() } else { &cv << (b as u64 * (m - 1)) };
        let inner = &wm * pv + per_pos * m;
        total += &pi * (inner * d + if v < d { wm } else { Nat::zero() });
        if d == v {
            pv += 1;
        }
        if d == b {
            pi *= &heavy;
        }
    }
    let in_block = block.iter().filter(|&&d| d == v).count() as u64;
    total += copy * in_block;
    total += block[..=off].iter().filter(|&&d| d == v).count() as u64;
    Ok(total)
}

/// Sequential reader of `V_{b,w}`.
#[derive(Clone, Debug)]
pub struct VbwCursor {
    b: u32,
    w: u32,
    block: Vec<u32>,
    weight: Nat,
    copy: Nat,
    off: usize,
    /// Occurrences of the digit `b` strictly before the cursor.
    top_seen: Nat,
    remaining: Nat,
}

impl VbwCursor {
    /// Positions the cursor at the 1-based index `idx`.
    pub fn at(b: u32, w: u32, idx: &Nat) -> Result<Self> {
        check_bw(b, w)?;
        let len = vbw_len(b, w);
        if idx.is_zero() || idx > &len {
            return Err(Error::OutOfRange { index: idx.clone(), len });
        }
        let (slot, off) = (idx - 1u8).div_rem(&Nat::from(w));
        let (block, copy) = unrank_block(b, w, slot);
        let weight = vbw_weight(b, &block);
        let top_seen = vbw_digit_count(b, w, b, &(idx - 1u8))?;
        Ok(VbwCursor { b, w, block, weight, copy, off: off.to_usize().unwrap_or(0), top_seen, remaining: &len - idx + 1u8 })
    }

    /// Number of `b` digits before the current position.
    pub fn top_seen(&self) -> &Nat {
        &self.top_seen
    }

    /// Returns the current digit and advances.
    pub fn next_digit(&mut self) -> Option<u32> {
        if self.remaining.is_zero() {
            return None;
        }
        self.remaining -= 1u8;
        let d = self.block[self.off];
        if d == self.b {
            self.top_seen += 1u8;
        }
        self.off += 1;
        if self.off == self.w as usize {
            self.off = 0;
            self.copy += 1u8;
            if self.copy == self.weight && !self.remaining.is_zero() {
                self.copy = Nat::zero();
                for k in (0..self.block.len()).rev() {
                    if self.block[k] < self.b {
                        self.block[k] += 1;
                        break;
                    }
                    self.block[k] = 0;
                }
                self.weight = vbw_weight(self.b, &self.block);
            }
        }
        Some(d)
    }
}

/// Full `V_{b,w}`; only for small parameters.
pub fn vbw_materialize(b: u32, w: u32) -> Result<Vec<u32>> {
    let len = vbw_len(b, w).to_usize().filter(|&l| l <= 1 << 26).ok_or_else(|| invalid("V_{b,w} too long to materialize"))?;
    let mut c = VbwCursor::at(b, w, &Nat::one())?;
    Ok((0..len).filter_map(|_| c.next_digit()).collect())
}

/// Counting identities for `W_i = V_{i,w}` with `w = i^2` at full scale.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RdnCounts {
    pub len: Nat,
    /// Occurrences of each digit `t < i`.
    pub small_digit: Nat,
    /// Occurrences of the digit `i`.
    pub top_digit: Nat,
    /// Size of each of the `i` classes the top positions are split into.
    pub class_size: Nat,
}

/// Closed-form counts for `V_{i,w}`; errors unless `i` divides the top count.
pub fn rdn_counts(i: u32, w: u32) -> Result<RdnCounts> {
    if i < 2 {
        return Err(invalid("RDN stages start at i = 2"));
    }
    let len = vbw_len(i, w);
    let small_digit = &len >> i;
    let top_digit = &len - &small_digit * i;
    let (class_size, r) = top_digit.div_rem(&Nat::from(i));
    if !r.is_zero() {
        return Err(Error::Hypothesis(format!("{i} does not divide the count of top digits in V_{{{i},{w}}}")));
    }
    Ok(RdnCounts { len, small_digit, top_digit, class_size })
}

/// `(w_{i,t}, q_{i,t}, y_{i,t})` from the digit and its rank among top digits.
fn rdn_triplet(i: u32, d: u32, top_rank: &Nat, class_size: &Nat) -> (u32, Nat, u32) {
    if d < i {
        return (d, Nat::from(i), d);
    }
    let class = ((top_rank - 1u8) / class_size).to_u32().unwrap_or(i) + 1;
    if class == 1 {
        (d, Nat::from(i).pow(3), 0)
    } else {
        let alpha = class - 1;
        (d, Nat::from(i * i / alpha), alpha)
    }
}

/// `(w_{i,t}, q_{i,t}, y_{i,t})` at full scale (`W_i = V_{i,i^2}`).
///
/// Top-digit positions are split into classes by their order of occurrence.
pub fn rdn_stage(i: u32, t: &Nat) -> Result<(u32, Nat, u32)> {
    rdn_stage_w(i, i * i, t)
}

/// [`rdn_stage`] with an explicit block width.
pub fn rdn_stage_w(i: u32, w: u32, t: &Nat) -> Result<(u32, Nat, u32)> {
    let counts = rdn_counts(i, w)?;
    let d = vbw_digit(i, w, t)?;
    let rank = if d == i { vbw_digit_count(i, w, i, t)? } else { Nat::zero() };
    Ok(rdn_triplet(i, d, &rank, &counts.class_size))
}

/// `alpha/i <= i/floor(i^2/alpha) < (alpha+1)/i`.
pub fn in_delta(i: u64, alpha: u64) -> bool {
    if alpha == 0 || alpha >= i {
        return false;
    }
    let f = (i as u128 * i as u128) / alpha as u128;
    let (i, a) = (i as u128, alpha as u128);
    a * f <= i * i && i * i < (a + 1) * f
}

/// Index `a` of the cell `[a/i, (a+1)/i)` containing `num/den`.
pub fn delta_index(num: &Nat, den: &Nat, i: u64) -> Nat {
    num * i / den
}

/// Contents of one stage block.
#[derive(Clone, Debug)]
pub enum StageBlock {
    Explicit(Arc<Vec<Nat>>),
    Const { value: Nat, len: Nat },
    /// Digits of `V_{b,w}`.
    Vbw { b: u32, w: u32 },
    /// `q_{i,t}` over `W_i = V_{i,w}`.
    RdnQ { i: u32, w: u32 },
    /// `y_{i,t}` over `W_i = V_{i,w}`.
    RdnY { i: u32, w: u32 },
}

impl StageBlock {
    pub fn len(&self) -> Nat {
        match self {
            StageBlock::Explicit(v) => Nat::from(v.len()),
            StageBlock::Const { len, .. } => len.clone(),
            StageBlock::Vbw { b, w } => vbw_len(*b, *w),
            StageBlock::RdnQ { i, w } | StageBlock::RdnY { i, w } => vbw_len(*i, *w),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len().is_zero()
    }

    /// Largest value the block can hold.
    pub fn max_value(&self) -> Nat {
        match self {
            StageBlock::Explicit(v) => v.iter().max().cloned().unwrap_or_default(),
            StageBlock::Const { value, .. } => value.clone(),
            StageBlock::Vbw { b, .. } => Nat::from(*b),
            StageBlock::RdnQ { i, .. } => Nat::from(*i).pow(3),
            StageBlock::RdnY { i, .. } => Nat::from(i - 1),
        }
    }

    /// `count` values from the 1-based position `t`, not crossing the block end.
    pub fn values(&self, t: &Nat, count: usize) -> Result<Vec<Nat>> {
        match self {
            StageBlock::Explicit(v) => {
                let s = t.to_usize().unwrap_or(usize::MAX) - 1;
                Ok(v[s..s + count].to_vec())
            }
            StageBlock::Const { value, .. } => Ok(vec![value.clone(); count]),
            StageBlock::Vbw { b, w } => {
                let mut c = VbwCursor::at(*b, *w, t)?;
                Ok((0..count).filter_map(|_| c.next_digit()).map(Nat::from).collect())
            }
            StageBlock::RdnQ { i, w } | StageBlock::RdnY { i, w } => {
                let counts = rdn_counts(*i, *w)?;
                let mut c = VbwCursor::at(*i, *w, t)?;
                let want_q = matches!(self, StageBlock::RdnQ { .. });
                let mut out = Vec::with_capacity(count);
                for _ in 0..count {
                    let Some(d) = c.next_digit() else { break };
                    let (_, q, y) = rdn_triplet(*i, d, c.top_seen(), &counts.class_size);
                    out.push(if want_q { q } else { Nat::from(y) });
                }
                Ok(out)
            }
        }
    }
}

/// Stage description: `l_i` copies of a block.
pub type StageFn = Arc<dyn Fn(u32) -> (Nat, StageBlock) + Send + Sync>;

/// A sequence `X_a^{l_a} X_{a+1}^{l_{a+1}} ...` addressed by index.
#[derive(Clone)]
pub struct Staged {
    name: String,
    first: u32,
    last: Option<u32>,
    stage: StageFn,
    handle: Option<Handle>,
}

impl fmt::Debug for Staged {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

/// Position of an index inside a staged sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Located {
    pub stage: u32,
    /// 0-based copy of the stage block.
    pub copy: Nat,
    /// 1-based position inside the block.
    pub t: Nat,
}

impl Staged {
    pub fn new(name: impl Into<String>, first: u32, last: Option<u32>, stage: StageFn) -> Self {
        Staged { name: name.into(), first, last, stage, handle: None }
    }

    fn with_handle(mut self, h: Handle) -> Self {
        self.handle = Some(h);
        self
    }

    pub fn stage(&self, i: u32) -> (Nat, StageBlock) {
        (self.stage)(i)
    }

    pub fn first_stage(&self) -> u32 {
        self.first
    }

    /// Stage, copy and in-block position of the 1-based index `n`.
    pub fn locate(&self, n: &Nat) -> Result<Located> {
        if n.is_zero() {
            return Err(Error::IndexZero);
        }
        let mut rem = n.clone();
        let mut i = self.first;
        let mut seen = Nat::zero();
        loop {
            if self.last.is_some_and(|l| i > l) {
                return Err(Error::OutOfRange { index: n.clone(), len: seen });
            }
            let (reps, block) = self.stage(i);
            let bl = block.len();
            let size = &reps * &bl;
            if rem <= size {
                let (copy, t) = (&rem - 1u8).div_rem(&bl);
                return Ok(Located { stage: i, copy, t: t + 1u8 });
            }
            rem -= &size;
            seen += size;
            i = i.checked_add(1).ok_or_else(|| invalid("stage overflow"))?;
        }
    }

    /// `L_i`, the end index of stage `i`.
    pub fn stage_end(&self, i: u32) -> Nat {
        (self.first..=i).map(|s| {
            let (reps, b) = self.stage(s);
            reps * b.len()
        }).sum()
    }

    fn batch(&self, from: u64, count: usize) -> Result<Vec<Nat>> {
        let mut out = Vec::with_capacity(count);
        if count == 0 {
            return Ok(out);
        }
        let Located { stage: mut i, mut copy, mut t } = self.locate(&Nat::from(from))?;
        let (mut reps, mut block) = self.stage(i);
        let mut bl = block.len();
        while out.len() < count {
            let room = (&bl - &t + 1u8).to_usize().unwrap_or(usize::MAX);
            let take = room.min(count - out.len());
            out.extend(block.values(&t, take)?);
            if out.len() == count {
                break;
            }
            t = Nat::one();
            copy += 1u8;
            while copy >= reps {
                copy = Nat::zero();
                i += 1;
                if self.last.is_some_and(|l| i > l) {
                    return Err(Error::OutOfRange { index: Nat::from(from + out.len() as u64), len: self.stage_end(i - 1) });
                }
                (reps, block) = self.stage(i);
                bl = block.len();
            }
        }
        Ok(out)
    }
}

impl SeqRule for Staged {
    fn value(&self, n: u64) -> Result<Nat> {
        Ok(self.batch(n, 1)?.remove(0))
    }

    fn values(&self, from: u64, count: usize) -> Result<Vec<Nat>> {
        self.batch(from, count)
    }

    fn handle(&self) -> Option<Handle> {
        self.handle
    }
}

impl DigitRule for Staged {
    fn digit(&self, n: u64) -> Result<Nat> {
        Ok(self.batch(n, 1)?.remove(0))
    }

    fn digits(&self, from: u64, count: usize) -> Result<Vec<Nat>> {
        self.batch(from, count)
    }
}

/// One triple `(l_i, b_i, eps_i)` with its block `X_i`.
#[derive(Clone, Debug)]
pub struct MffStage {
    pub l: Nat,
    pub b: Nat,
    pub eps: Rat,
    pub x: StageBlock,
}

/// A modular friendly family with its blocks, stage by stage.
#[derive(Clone)]
pub struct MffSpec {
    pub first_stage: u32,
    pub last_stage: Option<u32>,
    pub stage: Arc<dyn Fn(u32) -> MffStage + Send + Sync>,
}

impl fmt::Debug for MffSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MffSpec(first={}, last={:?})", self.first_stage, self.last_stage)
    }
}

/// Stages inspected when validating an infinite family.
pub const MFF_CHECK_STAGES: u32 = 24;

/// Default `eps_i = 1/(i+1)`.
pub fn default_eps(i: u32) -> Rat {
    Rat::new(BigInt::one(), BigInt::from(i + 1))
}

impl MffSpec {
    pub fn finite(stages: Vec<MffStage>) -> Result<Self> {
        if stages.is_empty() {
            return Err(invalid("an MFF needs at least one stage"));
        }
        let last = stages.len() as u32;
        let stages = Arc::new(stages);
        let spec = MffSpec { first_stage: 1, last_stage: Some(last), stage: Arc::new(move |i| stages[(i - 1) as usize].clone()) };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_fn(first_stage: u32, f: impl Fn(u32) -> MffStage + Send + Sync + 'static) -> Result<Self> {
        let spec = MffSpec { first_stage, last_stage: None, stage: Arc::new(f) };
        spec.validate()?;
        Ok(spec)
    }

    fn checked_stages(&self) -> core::ops::RangeInclusive<u32> {
        let last = self.last_stage.unwrap_or(self.first_stage + MFF_CHECK_STAGES - 1);
        self.first_stage..=last
    }

    /// Checks the family's monotonicity and range invariants on the
    /// inspected stages.
    pub fn validate(&self) -> Result<()> {
        let mut prev: Option<MffStage> = None;
        for i in self.checked_stages() {
            let s = (self.stage)(i);
            if s.b < Nat::from(2u8) {
                return Err(invalid(format!("MFF stage {i}: b_i < 2")));
            }
            if s.eps <= Rat::zero() || s.eps >= Rat::one() {
                return Err(invalid(format!("MFF stage {i}: eps_i outside (0, 1)")));
            }
            if s.x.max_value() >= s.b && !s.l.is_zero() {
                return Err(invalid(format!("MFF stage {i}: block digits reach b_i")));
            }
            if let Some(p) = &prev {
                if s.l < p.l || s.b < p.b {
                    return Err(invalid(format!("MFF stage {i}: l_i and b_i must be nondecreasing")));
                }
                if s.eps >= p.eps {
                    return Err(invalid(format!("MFF stage {i}: eps_i must decrease")));
                }
                if s.x.len() < p.x.len() {
                    return Err(invalid(format!("MFF stage {i}: block lengths must be nondecreasing")));
                }
            }
            prev = Some(s);
        }
        Ok(())
    }
}

fn mff_pair(spec: &MffSpec, name: &str, seq_handle: Option<Handle>) -> (BasicSeq, DigitStream) {
    let s1 = spec.stage.clone();
    let s2 = spec.stage.clone();
    let gamma = Staged::new(
        format!("Gamma({name})"),
        spec.first_stage,
        spec.last_stage,
        Arc::new(move |i| {
            let s = s1(i);
            (s.l, StageBlock::Const { value: s.b, len: s.x.len() })
        }),
    );
    let gamma = match seq_handle {
        Some(h) => gamma.with_handle(h),
        None => gamma,
    };
    let eta = Staged::new(format!("eta({name})"), spec.first_stage, spec.last_stage, Arc::new(move |i| {
        let s = s2(i);
        (s.l, s.x)
    }));
    let base = BasicSeq::from_rule(Arc::new(gamma));
    let digits = DigitStream::from_rule(base.clone(), Arc::new(eta));
    (base, digits)
}

/// `Gamma(V, X)` and the digits of `eta(V, X)`.
pub fn mff_stream(spec: &MffSpec) -> (BasicSeq, DigitStream) {
    mff_pair(spec, "mff", Some(Handle::Mff))
}

/// The two V-nice ratios per stage, as natural logs:
/// `ln(i l_{i-1}|X_{i-1}| / (l_i|X_i|))` and `ln(|X_{i+1}| / (l_i|X_i|))`.
pub fn vnice_diagnostic(spec: &MffSpec, stages: u32) -> Vec<(u32, f64, f64)> {
    let mut out = Vec::new();
    let lnb = |v: &Nat| if v.is_zero() { Bracket::NEG_INFINITY } else { ln_nat(v) };
    for i in spec.first_stage + 1..spec.first_stage + stages {
        if spec.last_stage.is_some_and(|l| i + 1 > l) {
            break;
        }
        let (p, s, n) = ((spec.stage)(i - 1), (spec.stage)(i), (spec.stage)(i + 1));
        let cur = lnb(&s.l).add(lnb(&s.x.len()));
        let a = lnb(&Nat::from(i)).add(lnb(&p.l)).add(lnb(&p.x.len())).sub(cur).mid;
        let b = lnb(&n.x.len()).sub(cur).mid;
        out.push((i, a, b));
    }
    out
}

/// Scale parameters of the staged constructions.
///
/// Full scale is `first_stage = 6`, `l_i = 2^{4 i^2}` and blocks `V_{i, i^2}`.
/// Smaller values give labeled analogues that reach later stages at desk scale.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StageParams {
    pub first_stage: u32,
    /// `l_i = 2^{rep_coeff * i^2}`.
    pub rep_coeff: u32,
    /// Block width `w_i = i^width_exp`.
    pub width_exp: u32,
}

impl Default for StageParams {
    fn default() -> Self {
        StageParams { first_stage: 6, rep_coeff: 4, width_exp: 2 }
    }
}

impl StageParams {
    pub fn is_full_scale(&self) -> bool {
        *self == Self::default()
    }

    pub fn reps(&self, i: u32) -> Nat {
        Nat::one() << (self.rep_coeff as u64 * i as u64 * i as u64)
    }

    pub fn width(&self, i: u32) -> u32 {
        i.pow(self.width_exp)
    }

    fn check(&self) -> Result<()> {
        if self.first_stage < 2 || self.width_exp == 0 {
            return Err(invalid("stage parameters need first_stage >= 2 and width_exp >= 1"));
        }
        Ok(())
    }
}

/// `P = Gamma(V, X)` and `zeta = eta(V, X)` with `X_i = V_{i,w_i}`, `b_i = 2^i`.
pub fn qnex_stream(params: StageParams) -> Result<(BasicSeq, DigitStream)> {
    params.check()?;
    let spec = MffSpec::from_fn(params.first_stage, move |i| MffStage {
        l: params.reps(i),
        b: Nat::one() << i,
        eps: default_eps(i),
        x: StageBlock::Vbw { b: i, w: params.width(i) },
    })?;
    let h = params.is_full_scale().then_some(Handle::Qnex);
    Ok(mff_pair(&spec, "qnex", h))
}

/// `K` and `kappa` with `X_i = Y_i`, `b_i = i`.
pub fn kappa_stream(params: StageParams) -> Result<(BasicSeq, DigitStream)> {
    params.check()?;
    for i in params.first_stage..params.first_stage + 8 {
        rdn_counts(i, params.width(i))?;
    }
    let spec = MffSpec::from_fn(params.first_stage, move |i| MffStage {
        l: params.reps(i),
        b: Nat::from(i),
        eps: default_eps(i),
        x: StageBlock::RdnY { i, w: params.width(i) },
    })?;
    let h = params.is_full_scale().then_some(Handle::Kappa);
    Ok(mff_pair(&spec, "kappa", h))
}

/// `Q = Q_a^{l_a} Q_{a+1}^{l_{a+1}} ...`.
pub fn rdn_q(params: StageParams) -> Result<BasicSeq> {
    params.check()?;
    for i in params.first_stage..params.first_stage + 8 {
        rdn_counts(i, params.width(i))?;
    }
    let q = Staged::new("rdn-Q", params.first_stage, None, Arc::new(move |i| {
        (params.reps(i), StageBlock::RdnQ { i, w: params.width(i) })
    }));
    let q = if params.is_full_scale() { q.with_handle(Handle::Rdn) } else { q };
    Ok(BasicSeq::from_rule(Arc::new(q)))
}

/// `Q` and the digits of `psi_{P,Q}(zeta)`.
pub fn rdn_stream(params: StageParams) -> Result<(BasicSeq, DigitStream)> {
    let q = rdn_q(params)?;
    let (_, zeta) = qnex_stream(params)?;
    let img = psi_map(&zeta, &q)?;
    Ok((q, img))
}

/// Stage containing the index `n` of the staged constructions.
pub fn stage_of(params: StageParams, n: u64) -> Result<u32> {
    params.check()?;
    let s = Staged::new("stages", params.first_stage, None, Arc::new(move |i| {
        (params.reps(i), StageBlock::Vbw { b: i, w: params.width(i) })
    }));
    Ok(s.locate(&Nat::from(n))?.stage)
}

/// `log10 lambda(psi_{P,Q}(R))` for the full-scale RDN pair, from stage counts:
/// `sum_{t=6}^{9} l_t * class_size_t * log10(2^t / t^3)`; later stages have
/// `2^t > t^3` and contribute nothing.
pub fn rdn_log10_measure() -> crate::logs::Sci {
    let p = StageParams::default();
    let mut terms = Vec::new();
    for t in 6u32..=9 {
        let c = rdn_counts(t, p.width(t)).map(|c| c.class_size).unwrap_or_default();
        let count = p.reps(t) * c;
        // |log10(2^t / t^3)|
        let ln_abs = ln_nat(&Nat::from(t).pow(3)).sub(Bracket::exact(t as f64 * core::f64::consts::LN_2));
        let log10_abs_factor = ln_abs.scale(1.0 / core::f64::consts::LN_10);
        let log10_mag = ln_nat(&count).to_log10().add(Bracket::exact(libm::log10(log10_abs_factor.mid)));
        let rel = log10_abs_factor.rad / log10_abs_factor.mid;
        let mag = Bracket { mid: log10_mag.mid, rad: log10_mag.rad + rel / core::f64::consts::LN_10 };
        terms.push(crate::logs::Sci { sign: -1, log10_abs: mag });
    }
    crate::logs::Sci::sum_same_sign(&terms).unwrap_or(crate::logs::Sci::ZERO)
}

/// Transforms of the counterexample theorems.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CounterMode {
    /// `p_n = max(floor(ln q_n), 2)`, `y = psi_{P,Q}(psi_{Q,P}(x))`.
    NnotDN,
    /// `p_n = max(floor(q_n / 2), 2)`, `y = psi_{P,Q}(x)` with `x` read over `P`.
    RNnotN,
    /// `p_n = q_n - 1`, `y` digits `min(E_n, q_n - 2) + 1`.
    DNnotRN,
}

#[derive(Clone, Debug)]
pub struct Counterexample {
    pub p: BasicSeq,
    pub y: DigitStream,
    pub diagnostics: Vec<String>,
}

/// Indices inspected by the growth diagnostic.
pub const GROWTH_HORIZON: u64 = 4096;

/// The derived base `P` of a counterexample mode.
pub fn derived_base(mode: CounterMode, q: &BasicSeq) -> BasicSeq {
    match mode {
        CounterMode::NnotDN => q.map("max(floor(ln q),2)", |v| {
            let l = ln_nat(v);
            Nat::from((libm::floor(l.mid) as u64).max(2))
        }),
        CounterMode::RNnotN => q.map("max(floor(q/2),2)", |v| (v / 2u8).max(Nat::from(2u8))),
        CounterMode::DNnotRN => q.map("q-1", |v| v - 1u8),
    }
}

#[derive(Debug)]
struct ShiftUp {
    x: DigitStream,
    q: BasicSeq,
}

impl DigitRule for ShiftUp {
    fn digit(&self, n: u64) -> Result<Nat> {
        Ok(self.digits(n, 1)?.remove(0))
    }

    fn digits(&self, from: u64, count: usize) -> Result<Vec<Nat>> {
        let e = self.x.digits(from, count)?;
        let q = self.q.values(from, count)?;
        Ok(e.iter().zip(&q).map(|(e, q)| e.min(&(q - 2u8)).clone() + 1u8).collect())
    }
}

#[derive(Debug)]
struct Rebased {
    x: DigitStream,
    p: BasicSeq,
}

impl DigitRule for Rebased {
    fn digit(&self, n: u64) -> Result<Nat> {
        Ok(self.digits(n, 1)?.remove(0))
    }

    fn digits(&self, from: u64, count: usize) -> Result<Vec<Nat>> {
        let e = self.x.digits(from, count)?;
        let p = self.p.values(from, count)?;
        for (k, (d, b)) in e.iter().zip(&p).enumerate() {
            if d >= b {
                return Err(Error::DigitOutOfRange { index: from + k as u64, digit: d.clone(), base: b.clone() });
            }
        }
        Ok(e)
    }
}

/// Builds `(P, y)` for a counterexample mode.
///
/// For `RNnotN` the digits of `x` are read over `P`, as the construction
/// starts from a `P`-normal number; digits reaching `p_n` are errors.
pub fn counterexample_stream(mode: CounterMode, q: &BasicSeq, x: &DigitStream) -> Result<Counterexample> {
    let mut diagnostics = Vec::new();
    let qs = q.prefix(GROWTH_HORIZON)?;
    let quarter = (GROWTH_HORIZON / 4) as usize;
    let head_max = qs[..quarter].iter().max().cloned().unwrap_or_default();
    let tail_min = qs[3 * quarter..].iter().min().cloned().unwrap_or_default();
    if tail_min <= head_max {
        diagnostics.push(format!(
            "q_n does not visibly grow: min over the last quarter of {GROWTH_HORIZON} is {tail_min}, max over the first quarter is {head_max}"
        ));
    }
    let p = derived_base(mode, q);
    let y = match mode {
        CounterMode::NnotDN => compose_chain(&[q.clone(), p.clone(), q.clone()], x)?,
        CounterMode::RNnotN => {
            let over_p = DigitStream::from_rule(p.clone(), Arc::new(Rebased { x: x.clone(), p: p.clone() }));
            psi_map(&over_p, q)?
        }
        CounterMode::DNnotRN => {
            if let Some(j) = qs.iter().position(|v| v < &Nat::from(3u8)) {
                return Err(Error::Hypothesis(format!("q_{} < 3 leaves no room for p_n = q_n - 1 >= 2", j + 1)));
            }
            DigitStream::from_rule(q.clone(), Arc::new(ShiftUp { x: x.clone(), q: q.clone() }))
        }
    };
    Ok(Counterexample { p, y, diagnostics })
}

/// `ln(P_n^{(k)} / Q_n^{(k)})` trend helper for fully divergent checks.
pub fn block_sum_log_ratio(p: &BasicSeq, q: &BasicSeq, n: u64, k: u32) -> Result<f64> {
    let a = p.qnk_f64(n, k)?;
    let b = q.qnk_f64(n, k)?;
    Ok(libm::log(a) - libm::log(b))
}
