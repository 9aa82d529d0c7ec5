//! Finite-horizon evaluators for the measure and dimension formulas.
//!
//! A liminf cannot be computed from finitely many terms, so every estimate
//! is a list of checkpoint ratios with a running minimum and the diagnostic
//! of its hypothesis. Ratios are certified log brackets.

use alloc::{format, string::String, sync::Arc, vec::Vec};
use core::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::digits::DigitStream;
use crate::error::{invalid, Error, Result};
use crate::logs::{ln_nat, Bracket, LogSum, Sci};
use crate::seq::{rat, BasicSeq, Handle, SeqRule};
use crate::{Canonicity, Nat, Rat};

/// Horizons up to which measure partial products are kept as exact rationals.
pub const EXACT_PRODUCT_LIMIT: u64 = 20_000;

/// One checkpoint `log prod num_j / log prod den_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct DimPoint {
    pub n: u64,
    pub num_log: Bracket,
    pub den_log: Bracket,
    pub value: Bracket,
}

/// Trend of `log h_n / log(h_1 ... h_n)` for the estimate's hypothesis.
#[derive(Clone, Debug, PartialEq)]
pub struct Hypothesis {
    /// The last ratio is at most half the one at the middle checkpoint, or below `1e-3`.
    pub ok: bool,
    pub trend: Vec<(u64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DimEstimate {
    pub checkpoints: Vec<DimPoint>,
    /// Minimum of the ratio over every index from the first one.
    pub running_min: f64,
    pub hypothesis: Hypothesis,
}

impl DimEstimate {
    pub fn last(&self) -> &DimPoint {
        self.checkpoints.last().expect("estimates have at least one checkpoint")
    }

    pub fn at(&self, n: u64) -> Option<&DimPoint> {
        self.checkpoints.iter().find(|p| p.n == n)
    }
}

fn normalize_checkpoints(checkpoints: &[u64], n: u64) -> Vec<u64> {
    let mut c: Vec<u64> = checkpoints.iter().copied().filter(|&c| c >= 1 && c <= n).collect();
    c.push(n);
    c.sort_unstable();
    c.dedup();
    c
}

/// Ratio estimate of `log prod num / log prod den` over the indices of the
/// slices, whose first element stands for index `offset + 1`.
fn estimate(num: &[Nat], den: &[Nat], hyp: &[Nat], offset: u64, checkpoints: &[u64]) -> Result<DimEstimate> {
    let n = offset + num.len() as u64;
    let cps = normalize_checkpoints(checkpoints, n);
    let mut sn = LogSum::new();
    let mut sd = LogSum::new();
    let mut sh = LogSum::new();
    let mut all_one = true;
    let mut running_min = f64::INFINITY;
    let mut points = Vec::new();
    let mut trend = Vec::new();
    let mut next = cps.iter().copied().filter(|&c| c > offset).peekable();
    for (k, (a, b)) in num.iter().zip(den).enumerate() {
        all_one &= a.is_one();
        sn.push(ln_nat(a));
        sd.push(ln_nat(b));
        let h = ln_nat(&hyp[k]);
        sh.push(h);
        let den_log = sd.value();
        let num_log = if all_one { Bracket::ZERO } else { sn.value() };
        let value = if all_one {
            Some(Bracket::ZERO)
        } else if num_log.is_neg_infinite() {
            Some(Bracket::NEG_INFINITY)
        } else {
            num_log.div(den_log)
        };
        if let Some(v) = value {
            running_min = running_min.min(v.mid);
        }
        let idx = offset + k as u64 + 1;
        if next.peek() == Some(&idx) {
            next.next();
            let value = value.ok_or_else(|| invalid(format!("log denominator vanishes at n = {idx}")))?;
            points.push(DimPoint { n: idx, num_log, den_log, value });
            let hv = sh.value();
            trend.push((idx, if hv.mid > 0.0 { h.mid / hv.mid } else { 1.0 }));
        }
    }
    if points.is_empty() {
        return Err(invalid("no checkpoint inside the horizon"));
    }
    let ok = hypothesis_ok(&trend);
    Ok(DimEstimate { checkpoints: points, running_min, hypothesis: Hypothesis { ok, trend } })
}

fn hypothesis_ok(trend: &[(u64, f64)]) -> bool {
    let Some(&(_, last)) = trend.last() else { return false };
    let mid = trend[trend.len() / 2].1;
    last < 1e-3 || (trend.len() >= 2 && last <= 0.5 * mid)
}

/// Sizes `|I_n|` of a digit restriction `I_n ⊆ {0, ..., q_n - 1}`.
#[derive(Clone)]
pub struct RestrictionSpec {
    name: String,
    size: Arc<dyn Fn(u64, &Nat) -> Nat + Send + Sync>,
}

impl fmt::Debug for RestrictionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RestrictionSpec({})", self.name)
    }
}

impl RestrictionSpec {
    /// `|I_n| = f(n, q_n)`, clamped to `q_n`.
    pub fn from_fn(name: impl Into<String>, f: impl Fn(u64, &Nat) -> Nat + Send + Sync + 'static) -> Self {
        RestrictionSpec { name: name.into(), size: Arc::new(f) }
    }

    /// `|I_n| = a`.
    pub fn constant(a: u64) -> Self {
        Self::from_fn(format!("constant {a}"), move |_, _| Nat::from(a))
    }

    /// `|I_n| = min(p_n, q_n)`.
    pub fn min_with(p: BasicSeq) -> Self {
        Self::from_fn(format!("min with {}", p.describe()), move |n, q| p.q_at(n).map(|v| v.min(q.clone())).unwrap_or_default())
    }

    /// `|I_n| = q_n - t_n`.
    pub fn drop_top(t: TSeq) -> Self {
        Self::from_fn("q - t", move |n, q| if &t(n) < q { q - t(n) } else { Nat::zero() })
    }

    pub fn sizes(&self, q: &[Nat], offset: u64) -> Vec<Nat> {
        q.iter().enumerate().map(|(k, qv)| (self.size)(offset + k as u64 + 1, qv).min(qv.clone())).collect()
    }
}

/// A sequence of non-negative integers `t_n`.
pub type TSeq = Arc<dyn Fn(u64) -> Nat + Send + Sync>;

/// Equality test of the two limits in the condition for
/// `dim_H = dim_P = dim_B`, on the last half of the horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct DimSame {
    /// Minimum over the window of `log prod_{j<=n}|I_j| / (log prod_{j<=n+1} q_j - log|I_{n+1}|)`.
    pub liminf_proxy: f64,
    /// Maximum over the window of `log prod_{j<=n+1}|I_j| / (log prod_{j<=n} q_j + log|I_{n+1}|)`.
    pub limsup_proxy: f64,
    /// The proxies differ by at most `DIMSAME_TOL`.
    pub equal: bool,
}

pub const DIMSAME_TOL: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct WegmannReport {
    pub dim: DimEstimate,
    pub dimsame: DimSame,
}

/// `liminf log prod |I_j| / log prod q_j` with the dimension-equality check.
pub fn wegmann_estimate(q: &BasicSeq, i: &RestrictionSpec, n: u64, checkpoints: &[u64]) -> Result<WegmannReport> {
    if n < 2 {
        return Err(invalid("horizon must be at least 2"));
    }
    let qv = q.prefix(n + 1)?;
    let sizes = i.sizes(&qv, 0);
    if let Some(j) = sizes.iter().position(|s| s.is_zero()) {
        return Err(Error::Hypothesis(format!("I_{} is empty", j + 1)));
    }
    let dim = estimate(&sizes[..n as usize], &qv[..n as usize], &qv[..n as usize], 0, checkpoints)?;
    let lq: Vec<f64> = qv.iter().map(|v| ln_nat(v).mid).collect();
    let li: Vec<f64> = sizes.iter().map(|v| ln_nat(v).mid).collect();
    let (mut si, mut sq) = (0.0, 0.0);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for m in 0..n as usize {
        si += li[m];
        sq += lq[m];
        if m + 1 >= n as usize / 2 {
            let a = si / (sq + lq[m + 1] - li[m + 1]);
            let b = (si + li[m + 1]) / (sq + li[m + 1]);
            lo = lo.min(a);
            hi = hi.max(b);
        }
    }
    let dimsame = DimSame { liminf_proxy: lo, limsup_proxy: hi, equal: (hi - lo).abs() <= DIMSAME_TOL };
    Ok(WegmannReport { dim, dimsame })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RangeReport {
    /// `prod_{j<=n} min(p_j, q_j)/q_j` when the horizon allows exact products.
    pub measure_partial: Option<Rat>,
    /// `log10` of the measure: from stage counts for the staged pair, else of the partial product.
    pub log10_measure: Sci,
    /// The value comes from stage closed forms.
    pub closed_form: bool,
    /// Partial products never increase (each factor is at most 1).
    pub nonincreasing: bool,
    pub dim: DimEstimate,
}

/// Measure and dimension of `psi_{P,Q}(R) = R_{(min(p_j,q_j))}(Q)`.
pub fn range_report(p: &BasicSeq, q: &BasicSeq, n: u64, checkpoints: &[u64]) -> Result<RangeReport> {
    let pv = p.prefix(n)?;
    let qv = q.prefix(n)?;
    let mins: Vec<Nat> = pv.iter().zip(&qv).map(|(a, b)| a.min(b).clone()).collect();
    let dim = estimate(&mins, &qv, &qv, 0, checkpoints)?;
    let measure_partial = (n <= EXACT_PRODUCT_LIMIT).then(|| {
        let (a, b) = mins.iter().zip(&qv).fold((Nat::one(), Nat::one()), |(a, b), (m, q)| (a * m, b * q));
        rat(&a, &b)
    });
    let closed_form = p.handle() == Some(Handle::Qnex) && q.handle() == Some(Handle::Rdn);
    let log10_measure = if closed_form {
        crate::foundry::rdn_log10_measure()
    } else {
        let mut s = LogSum::new();
        for (m, q) in mins.iter().zip(&qv) {
            s.push(ln_nat(m).sub(ln_nat(q)));
        }
        let v = s.value().to_log10();
        if v.is_neg_infinite() {
            Sci::ZERO
        } else {
            Sci { sign: 1, log10_abs: v }
        }
    };
    Ok(RangeReport { measure_partial, log10_measure, closed_form, nonincreasing: true, dim })
}

/// `omega_n(w)`: 0 if `E >= p`, 1 if `E <= q - 2`, `p - q + 1` if `E = q - 1`.
pub fn omega(e: &Nat, p: &Nat, q: &Nat) -> Nat {
    if e >= p {
        Nat::zero()
    } else if e + 1u8 < *q {
        Nat::one()
    } else {
        p + 1u8 - q
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LevelFiniteness {
    /// `p_n <= q_n` over the horizon: `psi` is injective and increasing.
    AtMostOnePoint,
    /// `p_n > q_n` only in the first half of the horizon.
    Finite,
    PossiblyInfinite,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LevelBranch {
    /// Digits read as given.
    Unique,
    /// Terminating `w` with last nonzero digit at `m`.
    Terminating { m: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelReport {
    pub branch: LevelBranch,
    /// Index of the first `E_n >= p_n`, making the level set empty.
    pub empty_at: Option<u64>,
    /// Formula partial product at the horizon.
    pub measure_partial: Option<Rat>,
    /// Terminating branch: measure of the depth-`n` cylinders around the finitely
    /// many terminating preimages; zero in the limit.
    pub finite_part_partial: Option<Rat>,
    pub dim: Option<DimEstimate>,
    pub finiteness: LevelFiniteness,
}

/// Level set `L_{P,Q}(w)` for `w` given by its digits over `Q`.
pub fn level_set_report(p: &BasicSeq, q: &BasicSeq, w: &DigitStream, n: u64, checkpoints: &[u64]) -> Result<LevelReport> {
    let pv = p.prefix(n)?;
    let qv = q.prefix(n)?;
    let e = w.prefix(n)?;
    for (k, (d, b)) in e.iter().zip(&qv).enumerate() {
        if d >= b {
            return Err(Error::DigitOutOfRange { index: k as u64 + 1, digit: d.clone(), base: b.clone() });
        }
    }
    let half = (n / 2) as usize;
    let finiteness = if pv.iter().zip(&qv).all(|(a, b)| a <= b) {
        LevelFiniteness::AtMostOnePoint
    } else if pv[half..].iter().zip(&qv[half..]).all(|(a, b)| a <= b) {
        LevelFiniteness::Finite
    } else {
        LevelFiniteness::PossiblyInfinite
    };
    let exact = n <= EXACT_PRODUCT_LIMIT;
    match *w.canonicity() {
        Canonicity::Terminating { last_nonzero: m } if m >= 1 && m <= n => {
            let mi = m as usize;
            let om: Vec<Nat> = (0..mi - 1).map(|j| omega(&e[j], &pv[j], &qv[j])).collect();
            let tail: Vec<Nat> = (mi..n as usize).map(|j| if pv[j] >= qv[j] { &pv[j] + 1u8 - &qv[j] } else { Nat::zero() }).collect();
            let head = om.iter().product::<Nat>();
            let head_den: Nat = pv[..mi - 1].iter().product();
            let pm = &pv[mi - 1];
            // G_m = E_m - 1 needs E_m - 1 < p_m; the finite part needs min(G, q-1) = E_m.
            let b_ok = &e[mi - 1] <= pm;
            let measure_partial = exact.then(|| {
                let num: Nat = if b_ok { &head * tail.iter().product::<Nat>() } else { Nat::zero() };
                rat(&num, &(pv.iter().product::<Nat>()))
            });
            let finite_part_partial = exact.then(|| {
                let at_m = omega(&e[mi - 1], pm, &qv[mi - 1]);
                rat(&(&head * at_m), &pv.iter().product::<Nat>())
            });
            let empty_at = om.iter().position(|o| o.is_zero()).map(|j| j as u64 + 1);
            let dim = if mi < n as usize {
                Some(estimate(&tail, &pv[mi..], &pv[mi..], m, checkpoints)?)
            } else {
                None
            };
            let _ = head_den;
            Ok(LevelReport { branch: LevelBranch::Terminating { m }, empty_at, measure_partial, finite_part_partial, dim, finiteness })
        }
        _ => {
            let om: Vec<Nat> = e.iter().zip(&pv).zip(&qv).map(|((e, p), q)| omega(e, p, q)).collect();
            let empty_at = om.iter().position(|o| o.is_zero()).map(|j| j as u64 + 1);
            let measure_partial = exact.then(|| rat(&om.iter().product::<Nat>(), &pv.iter().product::<Nat>()));
            let dim = if empty_at.is_none() { Some(estimate(&om, &pv, &pv, 0, checkpoints)?) } else { None };
            Ok(LevelReport { branch: LevelBranch::Unique, empty_at, measure_partial, finite_part_partial: None, dim, finiteness })
        }
    }
}

/// Tri-state verdict of a finite-window convergence test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Convergence {
    Converges,
    Diverges,
    Undetermined,
}

/// Compares the window sums `W1 = sum_{(K/2, K]}` and `W2 = sum_{(K, 2K]}`
/// of a positive series: `W2 <= 0.6 W1` suggests convergence, `W2 >= 0.9 W1`
/// divergence.
pub fn window_convergence(terms: &[f64]) -> Convergence {
    let k = terms.len() / 2;
    if k < 2 {
        return Convergence::Undetermined;
    }
    let w1: f64 = terms[k / 2..k].iter().sum();
    let w2: f64 = terms[k..2 * k].iter().sum();
    if w2 <= 0.6 * w1 {
        Convergence::Converges
    } else if w2 >= 0.9 * w1 {
        Convergence::Diverges
    } else {
        Convergence::Undetermined
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelSumReport {
    pub k: u64,
    /// `sum_{k<=K} a_k prod_{k<j<=K} (1 - a_j)` with `a_j = (q_j - 1)/p_j`.
    pub partial: Rat,
    /// `1 - prod_{j<=K} (1 - a_j)`.
    pub telescoped: Rat,
    /// Bound on `sum_{j>K} a_j` from a geometric ratio observed on `(K, 2K]`,
    /// which bounds the distance of either value to the full series.
    pub tail_bound: Option<Rat>,
    pub hypothesis_ok: bool,
    pub convergence: Convergence,
    pub diagnostics: Vec<String>,
}

/// Sum of the level-set measures over `NU_Q`, truncated at `K` stages.
pub fn level_measure_sum(p: &BasicSeq, q: &BasicSeq, k: u64) -> Result<LevelSumReport> {
    if k == 0 {
        return Err(invalid("stage horizon must be positive"));
    }
    let pv = p.prefix(2 * k)?;
    let qv = q.prefix(2 * k)?;
    let mut diagnostics = Vec::new();
    let mut hypothesis_ok = true;
    if let Some(j) = pv[..k as usize].iter().zip(&qv).position(|(a, b)| a < b) {
        hypothesis_ok = false;
        diagnostics.push(format!("p_{0} < q_{0}", j + 1));
    }
    let a: Vec<Rat> = pv.iter().zip(&qv).map(|(p, q)| rat(&(q - 1u8), p)).collect();
    let ku = k as usize;
    let one = Rat::one();
    let mut partial = Rat::zero();
    let mut prod_after = one.clone();
    for j in (0..ku).rev() {
        partial += &a[j] * &prod_after;
        prod_after *= &one - &a[j];
    }
    let telescoped = &one - prod_after;
    let ratios: Vec<f64> = pv.iter().zip(&qv).map(|(p, q)| q.to_f64().unwrap_or(f64::INFINITY) / p.to_f64().unwrap_or(f64::INFINITY)).collect();
    let convergence = window_convergence(&ratios);
    if convergence != Convergence::Converges {
        hypothesis_ok = false;
        diagnostics.push(format!("sum q_n/p_n: {convergence:?} on the window test"));
    }
    let mut r = Rat::zero();
    for j in ku..2 * ku - 1 {
        if a[j].is_zero() {
            continue;
        }
        r = r.max(&a[j + 1] / &a[j]);
    }
    let tail_bound = (r < one).then(|| {
        let window: Rat = a[ku..].iter().cloned().sum();
        window + &a[2 * ku - 1] * &r / (&one - &r)
    });
    if tail_bound.is_none() {
        diagnostics.push(String::from("no geometric decay on (K, 2K]: tail not bounded"));
    }
    Ok(LevelSumReport { k, partial, telescoped, tail_bound, hypothesis_ok, convergence, diagnostics })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultifractalReport {
    /// Stage starts `c_1 = 1 < c_2 < ...` up to the horizon.
    pub c: Vec<u64>,
    /// First index used, `c_M` with `c_M > N`.
    pub start: u64,
    /// `N`: last index where `p_n > q_n > 2` fails.
    pub threshold: u64,
    pub dim_l: DimEstimate,
    pub dim_s: DimEstimate,
    /// `(n, log r_n / log p_n)` at checkpoints, with `r_n = p_n - q_n`.
    pub gamma_trend: Vec<(u64, f64)>,
    pub diagnostics: Vec<String>,
}

/// The witness set `S` of the multifractal bound and one sample `w` in it.
///
/// With `rho = alpha/gamma`, stage `t` spans `ceil((1-rho)t)` free positions
/// (`I_n = {0..q_n-2}`) followed by `ceil(rho t)` fixed positions (`I_n = {q_n-1}`).
/// The sample takes digit 0 at free positions, so `omega_n(w)` is 1 there and
/// `r_n + 1` at fixed ones.
pub fn multifractal_witness(p: &BasicSeq, q: &BasicSeq, alpha: &Rat, gamma: &Rat, n: u64, checkpoints: &[u64]) -> Result<MultifractalReport> {
    if alpha < &Rat::zero() || alpha >= gamma || gamma > &Rat::one() {
        return Err(invalid("need 0 <= alpha < gamma <= 1"));
    }
    let rho = alpha / gamma;
    let one = Rat::one();
    let pv = p.prefix(n)?;
    let qv = q.prefix(n)?;
    let two = Nat::from(2u8);
    let threshold = (0..n as usize).rev().find(|&j| !(pv[j] > qv[j] && qv[j] > two)).map(|j| j as u64 + 1).unwrap_or(0);
    let mut diagnostics = Vec::new();
    if threshold > n / 2 {
        diagnostics.push(format!("p_n > q_n > 2 fails at n = {threshold}, late in the horizon"));
    }
    let ceil = |x: Rat| x.ceil().to_integer().to_u64().unwrap_or(0);
    let mut c = alloc::vec![1u64];
    let mut fixed = Vec::with_capacity(n as usize);
    let mut t = 1u64;
    while fixed.len() < n as usize {
        let tr = Rat::from_integer(BigInt::from(t));
        let free_len = ceil((&one - &rho) * &tr);
        let fixed_len = ceil(&rho * &tr);
        fixed.extend(core::iter::repeat(false).take(free_len as usize));
        fixed.extend(core::iter::repeat(true).take(fixed_len as usize));
        let next = c.last().copied().unwrap_or(1) + free_len + fixed_len;
        if next <= n {
            c.push(next);
        }
        t += 1;
    }
    fixed.truncate(n as usize);
    let start = c.iter().copied().find(|&ct| ct > threshold).ok_or_else(|| Error::Hypothesis(String::from("no stage starts after the threshold")))?;
    let s = (start - 1) as usize;
    let omega: Vec<Nat> = (s..n as usize).map(|j| if fixed[j] { &pv[j] - &qv[j] + 1u8 } else { Nat::one() }).collect();
    let upsilon: Vec<Nat> = (s..n as usize).map(|j| if fixed[j] { Nat::one() } else { &qv[j] - 1u8 }).collect();
    let dim_l = estimate(&omega, &pv[s..], &pv[s..], start - 1, checkpoints)?;
    let dim_s = estimate(&upsilon, &qv[s..], &qv[s..], start - 1, checkpoints)?;
    let gamma_trend = normalize_checkpoints(checkpoints, n)
        .into_iter()
        .filter(|&m| pv[(m - 1) as usize] > &qv[(m - 1) as usize] + 1u8)
        .map(|m| {
            let j = (m - 1) as usize;
            (m, ln_nat(&(&pv[j] - &qv[j])).mid / ln_nat(&pv[j]).mid)
        })
        .collect();
    Ok(MultifractalReport { c, start, threshold, dim_l, dim_s, gamma_trend, diagnostics })
}

/// `log s_{tau_{m+2}} / log s_{tau_m}` for the largest `m` with `tau_{m+2} <= n`,
/// `tau_m = m(m+1)/2`; tends to 1 for sequences that grow nicely.
pub fn grows_nicely_ratio(s: &BasicSeq, n: u64) -> Result<Option<f64>> {
    let tau = |m: u64| m * (m + 1) / 2;
    let mut m = 1u64;
    while tau(m + 3) <= n {
        m += 1;
    }
    if tau(m + 2) > n {
        return Ok(None);
    }
    let a = ln_nat(&s.q_at(tau(m + 2))?).mid;
    let b = ln_nat(&s.q_at(tau(m))?).mid;
    Ok(Some(a / b))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RationalityCase {
    /// `p_n <= q_n` infinitely often: irrationals map to irrationals.
    IrrationalPreserved,
    /// Eventually `p_n = q_n`: the exceptional set is countable.
    Countable,
    /// Eventually `p_n >= q_n` with `p_n > q_n` infinitely often.
    Uncountable,
}

/// Shape of a digit tail over the last half of the horizon.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailForm {
    EventuallyZero,
    EventuallyMax,
    Neither,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointQuery {
    /// The input value is known to be rational.
    pub input_rational: bool,
    pub image_tail: TailForm,
    pub flag: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RationalityReport {
    /// Largest `m` such that every `m' <= m` divides some `p_j`, `j <= n`.
    pub divisibility_p: u64,
    pub divisibility_q: u64,
    pub case: RationalityCase,
    /// `M`: first index of the final run with `p_n >= q_n`.
    pub m: Option<u64>,
    /// Uncountable case: `lambda(S ∩ [0,1))` is 1 iff `sum q_j/p_j` converges.
    pub measure: Option<(Convergence, Option<u8>)>,
    pub dim_lower: Option<DimEstimate>,
    pub dim_upper: Option<DimEstimate>,
    pub point: Option<PointQuery>,
}

fn divisibility_reach(v: &[Nat]) -> u64 {
    let mut m = 1u64;
    loop {
        let next = Nat::from(m + 1);
        if !v.iter().any(|x| x.is_multiple_of(&next)) {
            return m;
        }
        m += 1;
    }
}

fn tail_form(d: &[Nat], q: &[Nat]) -> TailForm {
    let h = d.len() / 2;
    if d[h..].iter().all(Zero::is_zero) {
        TailForm::EventuallyZero
    } else if d[h..].iter().zip(&q[h..]).all(|(e, b)| e + 1u8 == *b) {
        TailForm::EventuallyMax
    } else {
        TailForm::Neither
    }
}

/// Classifies `(P, Q)` by the sign pattern of `p_n - q_n` on the last half of
/// the horizon and evaluates the measure and dimension bounds of the set of
/// irrationals with rational image.
pub fn rationality_report(p: &BasicSeq, q: &BasicSeq, x: Option<&DigitStream>, n: u64, checkpoints: &[u64]) -> Result<RationalityReport> {
    if n < 4 {
        return Err(invalid("horizon must be at least 4"));
    }
    let pv = p.prefix(n)?;
    let qv = q.prefix(n)?;
    let half = (n / 2) as usize;
    let tail = pv[half..].iter().zip(&qv[half..]);
    let case = if tail.clone().any(|(a, b)| a <= b) && !tail.clone().all(|(a, b)| a == b) {
        RationalityCase::IrrationalPreserved
    } else if tail.clone().all(|(a, b)| a == b) {
        RationalityCase::Countable
    } else {
        RationalityCase::Uncountable
    };
    let m = (0..n as usize).rev().find(|&j| pv[j] < qv[j]).map(|j| j as u64 + 2).or(Some(1)).filter(|&m| m <= n);
    let (mut measure, mut dim_lower, mut dim_upper) = (None, None, None);
    if case == RationalityCase::Uncountable {
        let ratios: Vec<f64> = pv.iter().zip(&qv).map(|(a, b)| b.to_f64().unwrap_or(0.0) / a.to_f64().unwrap_or(f64::INFINITY)).collect();
        let conv = window_convergence(&ratios);
        let value = match conv {
            Convergence::Converges => Some(1),
            Convergence::Diverges => Some(0),
            Convergence::Undetermined => None,
        };
        measure = Some((conv, value));
        if let Some(m) = m {
            let s = (m - 1) as usize;
            let lo: Vec<Nat> = (s..n as usize).map(|j| &pv[j] - &qv[j]).collect();
            let hi: Vec<Nat> = (s..n as usize).map(|j| &pv[j] - &qv[j] + 1u8).collect();
            if lo.iter().all(|v| !v.is_zero()) {
                dim_lower = Some(estimate(&lo, &pv[s..], &pv[s..], m - 1, checkpoints)?);
            }
            dim_upper = Some(estimate(&hi, &pv[s..], &pv[s..], m - 1, checkpoints)?);
        }
    }
    let point = match x {
        Some(x) => {
            let img = crate::psi::psi_digits(&x.prefix(n)?, &qv);
            let image_tail = tail_form(&img, &qv);
            let input_rational = x.value_exact().is_some();
            let flag = (input_rational && image_tail == TailForm::Neither)
                .then(|| String::from("rational input, irrational-form image"));
            Some(PointQuery { input_rational, image_tail, flag })
        }
        None => None,
    };
    Ok(RationalityReport {
        divisibility_p: divisibility_reach(&pv),
        divisibility_q: divisibility_reach(&qv),
        case,
        m,
        measure,
        dim_lower,
        dim_upper,
        point,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZpqBounds {
    /// `log prod min(p_j - 2, q_j - 1) / log prod p_j`.
    pub lower: DimEstimate,
    /// `log prod min(p_j, q_j) / log prod p_j`.
    pub upper: DimEstimate,
}

/// Dimension bracket valid for every `Z_{P,Q}(k)`.
pub fn zpq_dim_bounds(p: &BasicSeq, q: &BasicSeq, _k: u64, n: u64, checkpoints: &[u64]) -> Result<ZpqBounds> {
    let pv = p.prefix(n)?;
    let qv = q.prefix(n)?;
    let three = Nat::from(3u8);
    if let Some(j) = pv.iter().zip(&qv).position(|(a, b)| a.min(b) < &three) {
        return Err(Error::Hypothesis(format!("min(p_n, q_n) < 3 at n = {}", j + 1)));
    }
    let lo: Vec<Nat> = pv.iter().zip(&qv).map(|(a, b)| (a - 2u8).min(b - 1u8)).collect();
    let hi: Vec<Nat> = pv.iter().zip(&qv).map(|(a, b)| a.min(b).clone()).collect();
    Ok(ZpqBounds { lower: estimate(&lo, &pv, &pv, 0, checkpoints)?, upper: estimate(&hi, &pv, &pv, 0, checkpoints)? })
}

struct Diff {
    q: BasicSeq,
    t: TSeq,
}

impl SeqRule for Diff {
    fn value(&self, n: u64) -> Result<Nat> {
        let q = self.q.q_at(n)?;
        let t = (self.t)(n);
        if t >= q {
            return Err(Error::Hypothesis(format!("t_{n} >= q_{n}")));
        }
        Ok(q - t)
    }
}

impl fmt::Debug for Diff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} - t_n", self.q.describe())
    }
}

#[derive(Clone, Debug)]
pub struct EdTransform {
    pub p: BasicSeq,
    pub image: DigitStream,
    /// `(n, sum_{j<=n} t_j/q_j)` at checkpoints.
    pub t_over_q: Vec<(u64, f64)>,
    /// `(n, log q_{n+1} / log(q_1...q_n))` at checkpoints.
    pub logprod: Vec<(u64, f64)>,
    pub convergence: Convergence,
}

/// Reads `d` over `P = (q_n - t_n)` and maps it to `Q`; digits are unchanged
/// because `E_n < q_n - t_n <= q_n`.
pub fn ed_transform(q: &BasicSeq, t: TSeq, d: &DigitStream, n: u64, checkpoints: &[u64]) -> Result<EdTransform> {
    let qv = q.prefix(n + 1)?;
    let tv: Vec<Nat> = (1..=n + 1).map(|j| t(j)).collect();
    if let Some(j) = qv.iter().zip(&tv).position(|(q, t)| q < &(t + 3u8)) {
        return Err(Error::Hypothesis(format!("q_n - t_n < 3 at n = {}", j + 1)));
    }
    let p = BasicSeq::from_rule(Arc::new(Diff { q: q.clone(), t: t.clone() }));
    let over_p = DigitStream::from_rule(p.clone(), Arc::new(Reread { d: d.clone(), p: p.clone() }));
    let image = crate::psi::psi_map(&over_p, q)?;
    let cps = normalize_checkpoints(checkpoints, n);
    let ratios: Vec<f64> = qv.iter().zip(&tv).map(|(q, t)| t.to_f64().unwrap_or(0.0) / q.to_f64().unwrap_or(f64::INFINITY)).collect();
    let mut acc = 0.0;
    let mut lq = LogSum::new();
    let mut t_over_q = Vec::new();
    let mut logprod = Vec::new();
    for j in 0..n as usize {
        acc += ratios[j];
        lq.push(ln_nat(&qv[j]));
        if cps.contains(&(j as u64 + 1)) {
            t_over_q.push((j as u64 + 1, acc));
            logprod.push((j as u64 + 1, ln_nat(&qv[j + 1]).mid / lq.value().mid));
        }
    }
    let convergence = if ratios.iter().all(Zero::is_zero) { Convergence::Converges } else { window_convergence(&ratios[..n as usize]) };
    Ok(EdTransform { p, image, t_over_q, logprod, convergence })
}

#[derive(Debug)]
struct Reread {
    d: DigitStream,
    p: BasicSeq,
}

impl crate::DigitRule for Reread {
    fn digit(&self, n: u64) -> Result<Nat> {
        Ok(self.digits(n, 1)?.remove(0))
    }

    fn digits(&self, from: u64, count: usize) -> Result<Vec<Nat>> {
        let e = self.d.digits(from, count)?;
        let p = self.p.values(from, count)?;
        for (k, (d, b)) in e.iter().zip(&p).enumerate() {
            if d >= b {
                return Err(Error::DigitOutOfRange { index: from + k as u64, digit: d.clone(), base: b.clone() });
            }
        }
        Ok(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digits::Tail;
    use crate::seq::default_checkpoints;

    fn n(v: u64) -> Nat {
        Nat::from(v)
    }

    fn c(b: u64) -> BasicSeq {
        BasicSeq::constant(b).unwrap()
    }

    fn r(a: i64, b: i64) -> Rat {
        Rat::new(a.into(), b.into())
    }

    #[test]
    fn wegmann_constants() {
        let cps = default_checkpoints(10_000);
        let rep = wegmann_estimate(&c(3), &RestrictionSpec::constant(2), 10_000, &cps).unwrap();
        let want = libm::log(2.0) / libm::log(3.0);
        assert!(rep.dim.checkpoints.iter().all(|p| (p.value.mid - want).abs() < 1e-12));
        assert!(rep.dim.hypothesis.ok);
        assert!(rep.dimsame.equal);
        let rep = wegmann_estimate(&c(10), &RestrictionSpec::min_with(c(2)), 1000, &[]).unwrap();
        assert!((rep.dim.last().value.mid - libm::log10(2.0)).abs() < 1e-12);
        assert!(wegmann_estimate(&c(3), &RestrictionSpec::constant(0), 10, &[]).is_err());
    }

    #[test]
    fn range_examples() {
        let rep = range_report(&c(4), &c(4), 50, &[]).unwrap();
        assert_eq!(rep.measure_partial, Some(r(1, 1)));
        assert_eq!(rep.dim.last().value.mid, 1.0);
        let rep = range_report(&c(2), &c(10), 20, &[]).unwrap();
        assert_eq!(rep.measure_partial, Some(Rat::new(1.into(), BigInt::from(5).pow(20u32))));
        assert!((rep.log10_measure.log10_abs.mid + 20.0 * libm::log10(5.0)).abs() < 1e-12);
    }

    #[test]
    fn level_examples() {
        let q3 = c(3);
        let w = DigitStream::from_digits(q3.clone(), BigInt::zero(), Vec::new(), Tail::Max).unwrap();
        let rep = level_set_report(&c(5), &q3, &w, 400, &[100, 200]).unwrap();
        assert_eq!(rep.branch, LevelBranch::Unique);
        assert_eq!(rep.empty_at, None);
        let d = rep.dim.unwrap();
        assert!((d.last().value.mid - libm::log(3.0) / libm::log(5.0)).abs() < 1e-12);
        assert_eq!(rep.measure_partial, Some(Rat::new(BigInt::from(3).pow(400u32), BigInt::from(5).pow(400u32))));
        let p2 = c(2);
        let w = DigitStream::from_periodic_digits(q3.clone(), BigInt::zero(), Vec::new(), alloc::vec![n(1), n(2)]).unwrap();
        let rep = level_set_report(&p2, &q3, &w, 30, &[]).unwrap();
        assert_eq!(rep.empty_at, Some(2));
        assert_eq!(rep.finiteness, LevelFiniteness::AtMostOnePoint);
    }

    #[test]
    fn level_sum_values() {
        let two = c(2);
        let rep = level_measure_sum(&BasicSeq::geometric(1u8, 2u8).unwrap(), &two, 60).unwrap();
        assert_eq!(rep.partial, rep.telescoped);
        assert!((rep.telescoped.to_f64().unwrap() - 0.711_21).abs() < 1e-5);
        assert!(rep.hypothesis_ok);
        assert!(rep.tail_bound.is_some());
        let rep = level_measure_sum(&BasicSeq::geometric(1u8, 4u8).unwrap(), &two, 40).unwrap();
        assert!((rep.telescoped.to_f64().unwrap() - 0.3115).abs() < 1e-4);
        let rep = level_measure_sum(&c(5), &c(5), 30).unwrap();
        assert!(!rep.hypothesis_ok);
        assert_eq!(rep.convergence, Convergence::Diverges);
    }

    #[test]
    fn multifractal_alpha_zero() {
        let p = BasicSeq::geometric(1u8, 2u8).unwrap();
        let q = BasicSeq::affine(1, 1u8).unwrap();
        let rep = multifractal_witness(&p, &q, &Rat::zero(), &r(1, 1), 2000, &[10, 100, 1000]).unwrap();
        assert!(rep.dim_l.checkpoints.iter().all(|pt| pt.value == Bracket::ZERO));
        assert_eq!(rep.threshold, 1);
        assert_eq!(&rep.c[..4], &[1, 2, 4, 7]);
        assert!(multifractal_witness(&p, &q, &r(1, 1), &r(1, 1), 10, &[]).is_err());
    }

    #[test]
    fn rationality_cases() {
        let p = BasicSeq::affine(2, 2u8).unwrap();
        let q = BasicSeq::affine(1, 1u8).unwrap();
        let rep = rationality_report(&p, &q, None, 2000, &[]).unwrap();
        assert_eq!(rep.case, RationalityCase::Uncountable);
        assert_eq!(rep.measure, Some((Convergence::Diverges, Some(0))));
        let rep = rationality_report(&q, &p, None, 200, &[]).unwrap();
        assert_eq!(rep.case, RationalityCase::IrrationalPreserved);
        let x = DigitStream::from_periodic_digits(c(3), BigInt::zero(), Vec::new(), alloc::vec![n(1)]).unwrap();
        let rep = rationality_report(&c(3), &q, Some(&x), 200, &[]).unwrap();
        let pt = rep.point.unwrap();
        assert!(pt.input_rational);
        assert_eq!(pt.flag.as_deref(), Some("rational input, irrational-form image"));
        assert!(rep.divisibility_q >= 100);
    }

    #[test]
    fn zpq_constant() {
        let rep = zpq_dim_bounds(&c(5), &c(5), 0, 500, &[]).unwrap();
        assert!((rep.lower.last().value.mid - libm::log(3.0) / libm::log(5.0)).abs() < 1e-12);
        assert!((rep.upper.last().value.mid - 1.0).abs() < 1e-12);
        assert!(zpq_dim_bounds(&c(2), &c(5), 0, 5, &[]).is_err());
    }

    #[test]
    fn ed_identity() {
        let q = BasicSeq::affine(3, 1u8).unwrap();
        let d = DigitStream::from_fn(q.clone(), "m mod 3", |m| n(m % 3));
        let zero: TSeq = Arc::new(|_| Nat::zero());
        let out = ed_transform(&q, zero, &d, 100, &[]).unwrap();
        assert_eq!(out.image.prefix(100).unwrap(), d.prefix(100).unwrap());
        assert_eq!(out.convergence, Convergence::Converges);
        let big: TSeq = Arc::new(|_| n(5));
        assert!(ed_transform(&q, big, &d, 10, &[]).is_err());
    }
}
