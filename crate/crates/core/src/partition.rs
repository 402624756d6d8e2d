//! Refined partitions of the host vertex set and integer index vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::KPartiteHypergraph;

/// A refinement of the host's k-partition: for each part, an ordered list of
/// non-exceptional blocks plus an optional exceptional block. Index-vector
/// coordinates follow block order, part-major.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RefinedPartition {
    k: usize,
    part_sizes: Vec<usize>,
    /// (part, vertices) for every non-exceptional block, part-major.
    blocks: Vec<(usize, Vec<u32>)>,
    /// Exceptional vertices per part (may be empty).
    exceptional: Vec<Vec<u32>>,
    /// vertex -> block index, or NONE for exceptional vertices.
    #[serde(skip)]
    vertex_block: Vec<u32>,
}

const NONE: u32 = u32::MAX;

impl RefinedPartition {
    /// `per_part[i]` are the non-exceptional blocks of part i; whatever part
    /// vertices they leave out become the exceptional block of that part.
    pub fn new(h: &KPartiteHypergraph, per_part: Vec<Vec<Vec<u32>>>) -> Result<Self> {
        if per_part.len() != h.k() {
            return Err(Error::BadPartition(format!(
                "expected blocks for {} parts, got {}",
                h.k(),
                per_part.len()
            )));
        }
        let n = h.n_vertices();
        let mut vertex_block = vec![NONE; n];
        let mut blocks = Vec::new();
        let mut exceptional = vec![Vec::new(); h.k()];
        for (part, part_blocks) in per_part.into_iter().enumerate() {
            let mut seen = vec![false; n];
            for mut block in part_blocks {
                if block.is_empty() {
                    return Err(Error::BadPartition("empty block".into()));
                }
                block.sort_unstable();
                block.dedup();
                for &v in &block {
                    if v as usize >= n || h.part_of(v) != part {
                        return Err(Error::BadPartition(format!(
                            "vertex {v} does not lie in part {part}"
                        )));
                    }
                    if seen[v as usize] || vertex_block[v as usize] != NONE {
                        return Err(Error::BadPartition(format!("vertex {v} appears twice")));
                    }
                    seen[v as usize] = true;
                    vertex_block[v as usize] = blocks.len() as u32;
                }
                blocks.push((part, block));
            }
            for v in h.part_range(part) {
                if !seen[v as usize] {
                    exceptional[part].push(v);
                }
            }
        }
        Ok(RefinedPartition {
            k: h.k(),
            part_sizes: h.part_sizes().to_vec(),
            blocks,
            exceptional,
            vertex_block,
        })
    }

    /// One block per part covering the whole host.
    pub fn trivial(h: &KPartiteHypergraph) -> Self {
        let per_part = (0..h.k())
            .map(|j| vec![h.part_range(j).collect::<Vec<u32>>()])
            .collect();
        Self::new(h, per_part).expect("trivial partition is always valid")
    }

    /// Number of non-exceptional blocks (the index-vector dimension).
    pub fn r(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> impl Iterator<Item = (usize, &[u32])> {
        self.blocks.iter().map(|(p, b)| (*p, b.as_slice()))
    }

    pub fn block(&self, idx: usize) -> (usize, &[u32]) {
        let (p, b) = &self.blocks[idx];
        (*p, b.as_slice())
    }

    /// Block indices belonging to one host part.
    pub fn blocks_of_part(&self, part: usize) -> Vec<usize> {
        self.blocks
            .iter()
            .enumerate()
            .filter(|(_, (p, _))| *p == part)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn exceptional(&self, part: usize) -> &[u32] {
        &self.exceptional[part]
    }

    pub fn block_of(&self, v: u32) -> Option<usize> {
        match self.vertex_block.get(v as usize) {
            Some(&b) if b != NONE => Some(b as usize),
            _ => None,
        }
    }

    /// The index vector of a vertex set: per-block intersection counts.
    pub fn index_vector(&self, s: &[u32]) -> Result<IndexVector> {
        let mut coords = vec![0i64; self.r()];
        for &v in s {
            match self.block_of(v) {
                Some(b) => coords[b] += 1,
                None => return Err(Error::UnhousedVertex(v)),
            }
        }
        Ok(IndexVector(coords))
    }

    pub fn unit_vector(&self, block: usize) -> IndexVector {
        let mut coords = vec![0i64; self.r()];
        coords[block] = 1;
        IndexVector(coords)
    }

    /// Rebuild the lookup table after deserialization.
    pub fn rebuild_lookup(&mut self) {
        let n: usize = self.part_sizes.iter().sum();
        self.vertex_block = vec![NONE; n];
        for (i, (_, b)) in self.blocks.iter().enumerate() {
            for &v in b {
                self.vertex_block[v as usize] = i as u32;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct IndexVector(pub Vec<i64>);

impl IndexVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coordinate_sum(&self) -> i64 {
        self.0.iter().sum()
    }

    pub fn sub(&self, other: &IndexVector) -> Result<IndexVector> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(IndexVector(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_vector_basics() {
        let h = KPartiteHypergraph::new(2, vec![2, 1], vec![vec![0, 2]]).unwrap();
        // blocks W_1 = {0,1} in part 0, W_2 = {2} in part 1
        let p = RefinedPartition::new(&h, vec![vec![vec![0, 1]], vec![vec![2]]]).unwrap();
        assert_eq!(p.index_vector(&[0, 2]).unwrap(), IndexVector(vec![1, 1]));
        assert_eq!(p.index_vector(&[]).unwrap(), IndexVector(vec![0, 0]));
        assert_eq!(p.index_vector(&[0, 1, 2]).unwrap(), IndexVector(vec![2, 1]));
    }

    #[test]
    fn exceptional_vertices_are_unhoused() {
        let h = KPartiteHypergraph::new(2, vec![2, 2], vec![vec![0, 2]]).unwrap();
        let p = RefinedPartition::new(&h, vec![vec![vec![0]], vec![vec![2, 3]]]).unwrap();
        assert_eq!(p.exceptional(0), &[1]);
        assert!(matches!(
            p.index_vector(&[1]),
            Err(Error::UnhousedVertex(1))
        ));
    }

    #[test]
    fn rejects_overlapping_blocks() {
        let h = KPartiteHypergraph::new(2, vec![2, 2], vec![]).unwrap();
        assert!(RefinedPartition::new(&h, vec![vec![vec![0], vec![0, 1]], vec![vec![2, 3]]])
            .is_err());
    }

    #[test]
    fn coordinate_sum_matches_set_size() {
        let h = KPartiteHypergraph::new(3, vec![2, 2, 2], vec![]).unwrap();
        let p = RefinedPartition::trivial(&h);
        let s = vec![0, 1, 3, 4, 5];
        assert_eq!(p.index_vector(&s).unwrap().coordinate_sum(), 5);
    }
}
