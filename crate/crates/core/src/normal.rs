//! Block counts, normality ratios, star discrepancy and accumulation proxies.

use alloc::{collections::BTreeMap, vec, vec::Vec};

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

use crate::digits::{horner, DigitStream};
use crate::error::{invalid, Result};
use crate::seq::rat;
use crate::{Nat, Rat};

/// Horizons up to which `Q_n^{(k)}` is also summed exactly.
pub const EXACT_QNK_LIMIT: u64 = 20_000;

/// A nonempty tuple of digits.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Block(Vec<Nat>);

impl Block {
    pub fn new(digits: Vec<Nat>) -> Result<Self> {
        if digits.is_empty() {
            return Err(invalid("a block must be nonempty"));
        }
        Ok(Block(digits))
    }

    pub fn from_u64(digits: &[u64]) -> Result<Self> {
        Self::new(digits.iter().map(|&d| Nat::from(d)).collect())
    }

    pub fn digits(&self) -> &[Nat] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// All entries are below `b`.
    pub fn in_base(&self, b: u64) -> bool {
        self.0.iter().all(|d| d < &Nat::from(b))
    }
}

/// All `b^k` blocks of length `k` over `{0, ..., b-1}` in lexicographic order.
pub fn all_blocks(k: usize, b: u64) -> Vec<Block> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<Nat>| {
                (0..b).map(move |d| {
                    let mut v = prefix.clone();
                    v.push(Nat::from(d));
                    v
                })
            })
            .collect();
    }
    out.into_iter().map(Block).collect()
}

/// `Q_n^{(k)}`, exact when the horizon allows.
#[derive(Clone, Debug, PartialEq)]
pub struct Qnk {
    pub k: u32,
    pub exact: Option<Rat>,
    pub approx: f64,
}

fn qnk(d: &DigitStream, n: u64, k: u32) -> Result<Qnk> {
    let approx = d.base().qnk_f64(n, k)?;
    let exact = if n <= EXACT_QNK_LIMIT {
        d.base().prefix_products(n, &[k])?.qnk(k).cloned()
    } else {
        None
    };
    Ok(Qnk { k, exact, approx })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockStats {
    pub n: u64,
    pub counts: Vec<(Block, u64)>,
    pub qnk: Vec<Qnk>,
    pub positions: Option<Vec<u64>>,
}

impl BlockStats {
    pub fn count(&self, b: &Block) -> Option<u64> {
        self.counts.iter().find(|(x, _)| x == b).map(|(_, c)| *c)
    }
}

/// Occurrence counts of each block starting at a position `m <= n`
/// (restricted to `positions` when given). Digits past `n` are read as needed.
pub fn count_blocks(d: &DigitStream, blocks: &[Block], n: u64, positions: Option<&[u64]>) -> Result<BlockStats> {
    if n == 0 {
        return Err(invalid("horizon must be at least 1"));
    }
    let kmax = blocks.iter().map(Block::len).max().unwrap_or(1);
    let digits = d.prefix(n + kmax as u64 - 1)?;
    let counts = count_in(&digits, blocks, n, positions);
    let mut ks: Vec<u32> = blocks.iter().map(|b| b.len() as u32).collect();
    ks.sort_unstable();
    ks.dedup();
    let qnk = ks.into_iter().map(|k| qnk(d, n, k)).collect::<Result<_>>()?;
    Ok(BlockStats {
        n,
        counts: blocks.iter().cloned().zip(counts).collect(),
        qnk,
        positions: positions.map(|p| p.iter().copied().filter(|&m| m <= n).collect()),
    })
}

/// Block counts over a digit slice (`digits[0]` is position 1).
pub fn count_in(digits: &[Nat], blocks: &[Block], n: u64, positions: Option<&[u64]>) -> Vec<u64> {
    let mut by_len: BTreeMap<usize, BTreeMap<&[Nat], Vec<usize>>> = BTreeMap::new();
    for (i, b) in blocks.iter().enumerate() {
        by_len.entry(b.len()).or_default().entry(b.digits()).or_default().push(i);
    }
    let mut out = vec![0u64; blocks.len()];
    let mut visit = |m: u64| {
        for (&k, table) in &by_len {
            let s = (m - 1) as usize;
            if s + k > digits.len() {
                continue;
            }
            if let Some(ix) = table.get(&digits[s..s + k]) {
                for &i in ix {
                    out[i] += 1;
                }
            }
        }
    };
    match positions {
        Some(ps) => ps.iter().copied().filter(|&m| m >= 1 && m <= n).for_each(&mut visit),
        None => (1..=n).for_each(&mut visit),
    }
    out
}

/// `N_m(B, .)` for `m = 1..=n` over a digit slice.
pub fn running_counts(digits: &[Nat], block: &Block, n: u64) -> Vec<u64> {
    let k = block.len();
    let mut out = Vec::with_capacity(n as usize);
    let mut c = 0u64;
    for m in 0..n as usize {
        if m + k <= digits.len() && digits[m..m + k] == *block.digits() {
            c += 1;
        }
        out.push(c);
    }
    out
}

/// `max_{m<=n} |N_m(B, a) - N_m(B, b)|`.
pub fn max_count_gap(a: &[Nat], b: &[Nat], block: &Block, n: u64) -> u64 {
    let ra = running_counts(a, block, n);
    let rb = running_counts(b, block, n);
    ra.iter().zip(&rb).map(|(x, y)| x.abs_diff(*y)).max().unwrap_or(0)
}

/// Quotient of two counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PairRatio {
    Value(Rat),
    Infinite,
    /// `0/0`.
    Undefined,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockRatio {
    pub block: Block,
    pub count: u64,
    /// `N_n(B) / Q_n^{(k)}` when `Q_n^{(k)}` is exact.
    pub ratio: Option<Rat>,
    pub ratio_f64: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormalityReport {
    pub n: u64,
    pub k: u32,
    pub qnk: Qnk,
    pub rows: Vec<BlockRatio>,
    /// `matrix[i][j] = N(B_i) / N(B_j)`.
    pub matrix: Vec<Vec<PairRatio>>,
}

/// Ratios `N_n(B)/Q_n^{(k)}` and pairwise count ratios for every block of
/// length `k` over `{0, ..., b-1}`.
pub fn normality_report(d: &DigitStream, k: u32, b: u64, n: u64) -> Result<NormalityReport> {
    if k == 0 || b == 0 {
        return Err(invalid("order and digit bound must be positive"));
    }
    let blocks = all_blocks(k as usize, b);
    let stats = count_blocks(d, &blocks, n, None)?;
    let q = stats.qnk.into_iter().next().ok_or_else(|| invalid("no block order"))?;
    if q.approx <= 0.0 {
        return Err(invalid("Q_n^(k) vanishes"));
    }
    let rows: Vec<BlockRatio> = stats
        .counts
        .into_iter()
        .map(|(block, count)| {
            let ratio = q.exact.as_ref().map(|e| Rat::from_integer(BigInt::from(count)) / e);
            BlockRatio { block, count, ratio, ratio_f64: count as f64 / q.approx }
        })
        .collect();
    let matrix = rows
        .iter()
        .map(|a| {
            rows.iter()
                .map(|c| match (a.count, c.count) {
                    (0, 0) => PairRatio::Undefined,
                    (_, 0) => PairRatio::Infinite,
                    (x, y) => PairRatio::Value(Rat::new(BigInt::from(x), BigInt::from(y))),
                })
                .collect()
        })
        .collect();
    Ok(NormalityReport { n, k, qnk: q, rows, matrix })
}

/// `D*_N = max_i max(x_(i) - (i-1)/N, i/N - x_(i))` over the sorted points.
pub fn star_discrepancy(points: &[Rat]) -> Result<Rat> {
    if points.is_empty() {
        return Err(invalid("star discrepancy of an empty set"));
    }
    let mut xs: Vec<&Rat> = points.iter().collect();
    xs.sort();
    let n = BigInt::from(points.len());
    let mut best = Rat::zero();
    for (i, x) in xs.iter().enumerate() {
        let a = *x - Rat::new(BigInt::from(i), n.clone());
        let b = Rat::new(BigInt::from(i + 1), n.clone()) - *x;
        best = best.max(a).max(b);
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UdMode {
    /// Points `T_{Q,n}(x)`, `n = 1, 2, ...`.
    TOrbit,
    /// Points `E_n / q_n`.
    DigitRatio,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UdPoint {
    pub n: u64,
    pub dstar: Rat,
    /// Bound on `|D* - dstar|` from enclosure widths.
    pub err: Rat,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UdReport {
    pub mode: UdMode,
    pub horizon: u64,
    pub points: Vec<UdPoint>,
    /// `(n, (1/n) sum_{j<=n} 1/q_j)` at the checkpoints; digit-ratio mode only.
    pub salat: Option<Vec<(u64, f64)>>,
}

/// Digits of look-ahead used for orbit points without an exact remainder.
pub const ORBIT_DEPTH: u64 = 40;

/// Star discrepancy of the first `n` orbit or digit-ratio points at each checkpoint.
pub fn ud_report(d: &DigitStream, mode: UdMode, n: u64, checkpoints: &[u64]) -> Result<UdReport> {
    if n == 0 {
        return Err(invalid("horizon must be at least 1"));
    }
    let (pts, errs) = match mode {
        UdMode::DigitRatio => {
            let e = d.prefix(n)?;
            let q = d.base().prefix(n)?;
            (e.iter().zip(&q).map(|(e, q)| rat(e, q)).collect::<Vec<_>>(), vec![Rat::zero(); n as usize])
        }
        UdMode::TOrbit => orbit_points(d, n)?,
    };
    let mut cps: Vec<u64> = checkpoints.iter().copied().filter(|&c| c >= 1 && c <= n).collect();
    cps.push(n);
    cps.sort_unstable();
    cps.dedup();
    let mut points = Vec::with_capacity(cps.len());
    for &c in &cps {
        let dstar = star_discrepancy(&pts[..c as usize])?;
        let err = errs[..c as usize].iter().max().cloned().unwrap_or_default();
        points.push(UdPoint { n: c, dstar, err });
    }
    let salat = (mode == UdMode::DigitRatio).then(|| -> Result<Vec<(u64, f64)>> {
        let q = d.base().prefix(n)?;
        let mut s = 0.0;
        let mut out = Vec::new();
        let mut next = cps.iter().peekable();
        for (j, v) in q.iter().enumerate() {
            s += 1.0 / v.to_f64().unwrap_or(f64::INFINITY);
            if next.peek() == Some(&&(j as u64 + 1)) {
                next.next();
                out.push((j as u64 + 1, s / (j + 1) as f64));
            }
        }
        Ok(out)
    });
    Ok(UdReport { mode, horizon: n, points, salat: salat.transpose()? })
}

/// Midpoints and half-widths of `T_{Q,m}(x)` for `m = 1..=n`.
fn orbit_points(d: &DigitStream, n: u64) -> Result<(Vec<Rat>, Vec<Rat>)> {
    if d.remainder(1).is_some() {
        let pts = (1..=n).map(|m| d.remainder(m).unwrap_or_default()).collect();
        return Ok((pts, vec![Rat::zero(); n as usize]));
    }
    let total = n + ORBIT_DEPTH;
    let e = d.prefix(total)?;
    let q = d.base().prefix(total)?;
    let exact_from = match d.canonicity() {
        crate::Canonicity::Terminating { last_nonzero } => Some(*last_nonzero),
        _ => None,
    };
    let mut pts = Vec::with_capacity(n as usize);
    let mut errs = Vec::with_capacity(n as usize);
    for m in 1..=n as usize {
        let w = m..m + ORBIT_DEPTH as usize;
        let (a, qq) = horner(&e[w.clone()], &q[w]);
        if exact_from.is_some_and(|t| t <= m as u64 + ORBIT_DEPTH) {
            pts.push(rat(&a, &qq));
            errs.push(Rat::zero());
        } else {
            let two_q = Nat::from(2u8) * &qq;
            pts.push(rat(&(Nat::from(2u8) * a + 1u8), &two_q));
            errs.push(rat(&Nat::one(), &two_q));
        }
    }
    Ok((pts, errs))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AccumulationReport {
    /// Index window `[from, to]` whose points were binned.
    pub window: (u64, u64),
    pub grid: u64,
    /// Hit cells `k`, each centered at `k / grid`.
    pub cells: Vec<u64>,
}

impl AccumulationReport {
    /// Center of each hit cell.
    pub fn centers(&self) -> Vec<Rat> {
        self.cells.iter().map(|&k| Rat::new(BigInt::from(k), BigInt::from(self.grid))).collect()
    }
}

/// Cells of a `grid`-point lattice on `[0, 1]` hit by `E_m / q_m` for `m` in
/// the last half of the horizon. Cell `k` collects values rounding to `k / grid`.
pub fn accumulation_estimate(d: &DigitStream, n: u64, grid: u64) -> Result<AccumulationReport> {
    if grid < 2 {
        return Err(invalid("grid resolution must be at least 2"));
    }
    if n == 0 {
        return Err(invalid("horizon must be at least 1"));
    }
    let from = n / 2 + 1;
    let count = (n - from + 1) as usize;
    let e = d.digits(from, count)?;
    let q = d.base().values(from, count)?;
    let g = Nat::from(grid);
    let mut cells: Vec<u64> = e
        .iter()
        .zip(&q)
        .map(|(e, q)| ((Nat::from(2u8) * e * &g + q) / (Nat::from(2u8) * q)).to_u64().unwrap_or(grid).min(grid))
        .collect();
    cells.sort_unstable();
    cells.dedup();
    Ok(AccumulationReport { window: (from, n), grid, cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digits::{expand_rational, Tail};
    use crate::seq::BasicSeq;

    fn n(v: u64) -> Nat {
        Nat::from(v)
    }

    fn r(a: i64, b: i64) -> Rat {
        Rat::new(a.into(), b.into())
    }

    #[test]
    fn zero_stream_counts() {
        let q = BasicSeq::constant(4u8).unwrap();
        let z = DigitStream::from_digits(q, BigInt::zero(), Vec::new(), Tail::Zeros).unwrap();
        let b = Block::from_u64(&[0]).unwrap();
        let s = count_blocks(&z, &[b.clone()], 100, None).unwrap();
        assert_eq!(s.count(&b), Some(100));
        let rep = normality_report(&z, 1, 4, 100).unwrap();
        assert_eq!(rep.rows[0].ratio, Some(r(4, 1)));
        assert_eq!(rep.matrix[1][2], PairRatio::Undefined);
        assert_eq!(rep.matrix[0][1], PairRatio::Infinite);
    }

    #[test]
    fn seven_eighths_in_base_three() {
        let x = expand_rational(&r(7, 8), &BasicSeq::constant(3u8).unwrap(), 10).unwrap();
        let b = Block::from_u64(&[1]).unwrap();
        for m in [1u64, 2, 7, 100, 1001] {
            assert_eq!(count_blocks(&x, &[b.clone()], m, None).unwrap().count(&b), Some(m / 2));
        }
    }

    #[test]
    fn positions_restrict_counts() {
        let q = BasicSeq::constant(2u8).unwrap();
        let alt = DigitStream::from_periodic_digits(q, BigInt::zero(), Vec::new(), vec![n(0), n(1)]).unwrap();
        let b = Block::from_u64(&[1]).unwrap();
        let evens: Vec<u64> = (1..=60).map(|i| 2 * i).collect();
        let s = count_blocks(&alt, &[b.clone()], 99, Some(&evens)).unwrap();
        assert_eq!(s.count(&b), Some(49));
        let odds: Vec<u64> = (0..60).map(|i| 2 * i + 1).collect();
        assert_eq!(count_blocks(&alt, &[b.clone()], 99, Some(&odds)).unwrap().count(&b), Some(0));
    }

    #[test]
    fn discrepancy_closed_forms() {
        assert_eq!(star_discrepancy(&[Rat::zero()]).unwrap(), r(1, 1));
        for big_n in [1i64, 2, 7, 50] {
            let pts: Vec<Rat> = (0..big_n).map(|k| r(k, big_n)).collect();
            assert_eq!(star_discrepancy(&pts).unwrap(), r(1, big_n));
        }
        assert!(star_discrepancy(&[]).is_err());
    }

    #[test]
    fn constant_digit_zero_not_ud() {
        let q = BasicSeq::affine(2, 1u8).unwrap();
        let z = DigitStream::from_digits(q, BigInt::zero(), Vec::new(), Tail::Zeros).unwrap();
        let rep = ud_report(&z, UdMode::DigitRatio, 200, &[10, 100]).unwrap();
        assert!(rep.points.iter().all(|p| p.dstar == r(1, 1)));
        assert_eq!(rep.salat.as_ref().unwrap().len(), 3);
        let orbit = ud_report(&z, UdMode::TOrbit, 50, &[]).unwrap();
        assert_eq!(orbit.points[0].dstar, r(1, 1));
        assert_eq!(orbit.points[0].err, Rat::zero());
    }

    #[test]
    fn accumulation_cells() {
        let q = BasicSeq::affine(3, 2u8).unwrap();
        let half = DigitStream::from_fn(q.clone(), "half", |m| n(2 * m + 3) / 2u8);
        let rep = accumulation_estimate(&half, 1000, 10).unwrap();
        assert_eq!(rep.cells, vec![5]);
        assert_eq!(rep.window, (501, 1000));
        let alt = DigitStream::from_fn(q, "alt", |m| if m % 2 == 0 { n(0) } else { n(2 * m + 3) / 2u8 });
        assert_eq!(accumulation_estimate(&alt, 1000, 10).unwrap().cells, vec![0, 5]);
    }

    #[test]
    fn all_blocks_enumerates() {
        let bs = all_blocks(2, 3);
        assert_eq!(bs.len(), 9);
        assert_eq!(bs[5], Block::from_u64(&[1, 2]).unwrap());
        assert!(bs.iter().all(|b| b.in_base(3)));
    }
}
