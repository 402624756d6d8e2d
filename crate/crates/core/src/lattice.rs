//! Integer lattices spanned by index vectors, with exact membership tests.
//!
//! The generator rows are brought to a row-echelon Hermite form by unimodular
//! row operations over i128, tracking the transform so a positive membership
//! answer comes with witness coefficients in terms of the original
//! generators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::IndexVector;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Lattice {
    dim: usize,
    generators: Vec<IndexVector>,
    /// Echelon basis rows (pivot columns strictly increasing).
    basis: Vec<Vec<i128>>,
    /// transform[i] expresses basis[i] over the generators.
    transform: Vec<Vec<i128>>,
    pivots: Vec<usize>,
}

impl Lattice {
    pub fn from_generators(dim: usize, generators: Vec<IndexVector>) -> Result<Self> {
        for g in &generators {
            if g.dim() != dim {
                return Err(Error::DimensionMismatch(g.dim(), dim));
            }
        }
        let g = generators.len();
        let mut rows: Vec<Vec<i128>> = generators
            .iter()
            .map(|v| v.0.iter().map(|&c| c as i128).collect())
            .collect();
        let mut trans: Vec<Vec<i128>> = (0..g)
            .map(|i| (0..g).map(|j| i128::from(i == j)).collect())
            .collect();

        let mut pivot_row = 0usize;
        let mut pivots = Vec::new();
        for col in 0..dim {
            // eliminate below pivot_row in this column by gcd steps
            loop {
                let mut best: Option<usize> = None;
                for r in pivot_row..g {
                    if rows[r][col] != 0
                        && best.map_or(true, |b| rows[r][col].abs() < rows[b][col].abs())
                    {
                        best = Some(r);
                    }
                }
                let Some(b) = best else { break };
                rows.swap(pivot_row, b);
                trans.swap(pivot_row, b);
                let mut done = true;
                let head = rows[pivot_row][col];
                for r in pivot_row + 1..g {
                    if rows[r][col] != 0 {
                        let q = rows[r][col].div_euclid(head);
                        row_axpy(&mut rows, &mut trans, r, pivot_row, -q);
                        if rows[r][col] != 0 {
                            done = false;
                        }
                    }
                }
                if done {
                    break;
                }
            }
            if pivot_row < g && rows[pivot_row][col] != 0 {
                if rows[pivot_row][col] < 0 {
                    row_negate(&mut rows, &mut trans, pivot_row);
                }
                // reduce entries above the pivot into [0, pivot)
                let head = rows[pivot_row][col];
                for r in 0..pivot_row {
                    let q = rows[r][col].div_euclid(head);
                    if q != 0 {
                        row_axpy(&mut rows, &mut trans, r, pivot_row, -q);
                    }
                }
                pivots.push(col);
                pivot_row += 1;
                if pivot_row == g {
                    break;
                }
            }
        }
        rows.truncate(pivot_row);
        trans.truncate(pivot_row);
        Ok(Lattice {
            dim,
            generators,
            basis: rows,
            transform: trans,
            pivots,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &[IndexVector] {
        &self.generators
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// Exact membership; a positive answer carries integer coefficients over
    /// the original generators that reconstruct the target.
    pub fn contains(&self, target: &IndexVector) -> Result<Option<Vec<i64>>> {
        if target.dim() != self.dim {
            return Err(Error::DimensionMismatch(target.dim(), self.dim));
        }
        let mut residue: Vec<i128> = target.0.iter().map(|&c| c as i128).collect();
        let mut coeffs = vec![0i128; self.generators.len()];
        for (row, &col) in self.pivots.iter().enumerate() {
            let head = self.basis[row][col];
            if residue[col] % head != 0 {
                return Ok(None);
            }
            let q = residue[col] / head;
            if q != 0 {
                for c in 0..self.dim {
                    residue[c] -= q * self.basis[row][c];
                }
                for (g, t) in coeffs.iter_mut().zip(&self.transform[row]) {
                    *g += q * t;
                }
            }
        }
        if residue.iter().any(|&c| c != 0) {
            return Ok(None);
        }
        let coeffs: Option<Vec<i64>> = coeffs.iter().map(|&c| i64::try_from(c).ok()).collect();
        let coeffs = coeffs.ok_or(Error::Format("witness coefficients overflow i64".into()))?;
        debug_assert!(self.reconstructs(target, &coeffs));
        Ok(Some(coeffs))
    }

    fn reconstructs(&self, target: &IndexVector, coeffs: &[i64]) -> bool {
        let mut acc = vec![0i128; self.dim];
        for (c, g) in coeffs.iter().zip(&self.generators) {
            for (a, &x) in acc.iter_mut().zip(&g.0) {
                *a += i128::from(*c) * i128::from(x);
            }
        }
        acc.iter()
            .zip(&target.0)
            .all(|(&a, &t)| a == i128::from(t))
    }
}

fn row_axpy(rows: &mut [Vec<i128>], trans: &mut [Vec<i128>], dst: usize, src: usize, factor: i128) {
    if dst == src {
        return;
    }
    let (a, b) = if dst < src {
        let (lo, hi) = rows.split_at_mut(src);
        (&mut lo[dst], &hi[0])
    } else {
        let (lo, hi) = rows.split_at_mut(dst);
        (&mut hi[0], &lo[src])
    };
    for (x, y) in a.iter_mut().zip(b.iter()) {
        *x += factor * y;
    }
    let (a, b) = if dst < src {
        let (lo, hi) = trans.split_at_mut(src);
        (&mut lo[dst], &hi[0])
    } else {
        let (lo, hi) = trans.split_at_mut(dst);
        (&mut hi[0], &lo[src])
    };
    for (x, y) in a.iter_mut().zip(b.iter()) {
        *x += factor * y;
    }
}

fn row_negate(rows: &mut [Vec<i128>], trans: &mut [Vec<i128>], r: usize) {
    for x in rows[r].iter_mut() {
        *x = -*x;
    }
    for x in trans[r].iter_mut() {
        *x = -*x;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(v: &[i64]) -> IndexVector {
        IndexVector(v.to_vec())
    }

    #[test]
    fn direct_difference_is_member() {
        let l = Lattice::from_generators(3, vec![iv(&[1, 0, 1]), iv(&[0, 1, 1])]).unwrap();
        let coeffs = l.contains(&iv(&[1, -1, 0])).unwrap().expect("member");
        assert_eq!(coeffs, vec![1, -1]);
    }

    #[test]
    fn non_member_detected() {
        let l = Lattice::from_generators(3, vec![iv(&[1, 0, 1]), iv(&[0, 1, 1])]).unwrap();
        assert!(l.contains(&iv(&[0, 0, 1])).unwrap().is_none());
    }

    #[test]
    fn empty_lattice_contains_only_zero() {
        let l = Lattice::from_generators(3, vec![]).unwrap();
        assert_eq!(l.contains(&iv(&[0, 0, 0])).unwrap(), Some(vec![]));
        assert!(l.contains(&iv(&[0, 1, 0])).unwrap().is_none());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let l = Lattice::from_generators(3, vec![iv(&[1, 0, 1])]).unwrap();
        assert!(l.contains(&iv(&[1, 0])).is_err());
        assert!(Lattice::from_generators(2, vec![iv(&[1, 0, 1])]).is_err());
    }

    /// Oracle: true when some coefficient vector in [-bound, bound]^g hits
    /// the target. Misses members whose witnesses need larger coefficients,
    /// so it can only confirm membership, never refute it.
    pub(crate) fn brute_force_member(
        dim: usize,
        gens: &[IndexVector],
        target: &IndexVector,
        bound: i64,
    ) -> bool {
        let g = gens.len();
        if g == 0 {
            return target.0.iter().all(|&c| c == 0);
        }
        let span = (2 * bound + 1) as u64;
        let total = span.pow(g as u32);
        for code in 0..total {
            let mut c = code;
            let mut acc = vec![0i64; dim];
            for gen in gens {
                let coef = (c % span) as i64 - bound;
                c /= span;
                for (a, &x) in acc.iter_mut().zip(&gen.0) {
                    *a += coef * x;
                }
            }
            if acc.iter().zip(&target.0).all(|(a, t)| a == t) {
                return true;
            }
        }
        false
    }

    #[test]
    fn agrees_with_bounded_brute_force() {
        let rng = crate::rng::StreamRng::new(2024, "lattice.test");
        let mut counter = 0u64;
        let mut draw = |lo: i64, hi: i64| {
            let v = rng.below_at(counter, (hi - lo + 1) as u64) as i64 + lo;
            counter += 1;
            v
        };
        for case in 0..100 {
            let dim = draw(1, 5) as usize;
            let g = draw(0, 5) as usize;
            let gens: Vec<IndexVector> = (0..g)
                .map(|_| IndexVector((0..dim).map(|_| draw(-3, 3)).collect()))
                .collect();
            let target = IndexVector((0..dim).map(|_| draw(-3, 3)).collect());
            let l = Lattice::from_generators(dim, gens.clone()).unwrap();
            let verdict = l.contains(&target).unwrap();
            if brute_force_member(dim, &gens, &target, 5) {
                assert!(verdict.is_some(), "case {case}: brute force found a combination");
            }
            if let Some(coeffs) = &verdict {
                assert!(l.reconstructs(&target, coeffs), "case {case}");
            }
        }
    }
}
