//! Pixel grids of `psi_{P,Q}` on `[0, 1)`.

use cantor_core::psi::approximant_eval;
use cantor_core::{BasicSeq, Nat, Rat};
use num_bigint::BigInt;
use num_traits::ToPrimitive;

use crate::CliError;

pub const DEFAULT_DEPTH: u64 = 64;

/// One column per pixel: `x_i = (i + 1/2) / pixels` and the approximant value there.
#[derive(Clone, Debug, PartialEq)]
pub struct PsiGrid {
    pub pixels: usize,
    pub depth: u64,
    pub xs: Vec<Rat>,
    pub values: Vec<Rat>,
    /// Row of the marked cell in each column, counted from the bottom.
    pub cells: Vec<usize>,
}

pub fn render_psi_grid(p: &BasicSeq, q: &BasicSeq, pixels: usize, depth: u64) -> Result<PsiGrid, CliError> {
    if pixels < 2 {
        return Err(CliError::Spec("pixels must be at least 2".into()));
    }
    let pv = p.prefix(depth).map_err(CliError::from)?;
    let qv = q.prefix(depth).map_err(CliError::from)?;
    let (pt, qt) = (fixed(pv), fixed(qv));
    let den = BigInt::from(2 * pixels);
    let mut xs = Vec::with_capacity(pixels);
    let mut values = Vec::with_capacity(pixels);
    let mut cells = Vec::with_capacity(pixels);
    for i in 0..pixels {
        let x = Rat::new(BigInt::from(2 * i + 1), den.clone());
        let v = approximant_eval(&pt, &qt, depth, &x).map_err(CliError::from)?;
        let cell = (&v * Rat::from_integer(BigInt::from(pixels))).floor().to_integer().to_usize().unwrap_or(0).min(pixels - 1);
        xs.push(x);
        values.push(v);
        cells.push(cell);
    }
    Ok(PsiGrid { pixels, depth, xs, values, cells })
}

/// The first `depth` terms as an explicit base, so each column reuses them.
fn fixed(v: Vec<Nat>) -> BasicSeq {
    BasicSeq::explicit(v, BasicSeq::constant(2u8).expect("2 is a base")).expect("prefix entries are bases")
}

impl PsiGrid {
    /// Black marks on white, top row is `psi` near 1.
    pub fn bitmap(&self) -> Vec<Vec<u8>> {
        let mut px = vec![vec![255u8; self.pixels]; self.pixels];
        for (col, &cell) in self.cells.iter().enumerate() {
            px[self.pixels - 1 - cell][col] = 0;
        }
        px
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_gives_the_diagonal() {
        let q = BasicSeq::constant(3u8).unwrap();
        let g = render_psi_grid(&q, &q, 50, 32).unwrap();
        assert_eq!(g.cells, (0..50).collect::<Vec<_>>());
        assert_eq!(g.values, g.xs);
    }

    #[test]
    fn smaller_p_is_nondecreasing() {
        let p = BasicSeq::constant(2u8).unwrap();
        let q = BasicSeq::constant(3u8).unwrap();
        let g = render_psi_grid(&p, &q, 64, 40).unwrap();
        assert!(g.values.windows(2).all(|w| w[0] <= w[1]));
        assert!(g.cells.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn rejects_tiny_grids() {
        let q = BasicSeq::constant(3u8).unwrap();
        assert!(render_psi_grid(&q, &q, 1, 8).is_err());
    }
}
