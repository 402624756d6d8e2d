//! k-partite k-uniform hypergraphs with contiguous global vertex ids.
//!
//! Vertices are numbered `0..N` with parts occupying contiguous ranges, so an
//! edge (one vertex per part) stored in part order is automatically sorted
//! ascending. Edges live in one flattened, lexicographically sorted buffer;
//! membership is a binary search. Two indexes are built lazily on first use:
//! a codegree table (prefix over the first k-1 parts -> bitset of last-part
//! completions) and a vertex-to-edge incidence list.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug)]
pub struct KPartiteHypergraph {
    k: usize,
    part_sizes: Vec<usize>,
    part_offsets: Vec<u32>,
    /// k entries per edge, sorted lexicographically as tuples.
    edges: Vec<u32>,
    codegree: OnceLock<CodegreeIndex>,
    incidence: OnceLock<Incidence>,
}

impl Clone for KPartiteHypergraph {
    fn clone(&self) -> Self {
        KPartiteHypergraph {
            k: self.k,
            part_sizes: self.part_sizes.clone(),
            part_offsets: self.part_offsets.clone(),
            edges: self.edges.clone(),
            codegree: OnceLock::new(),
            incidence: OnceLock::new(),
        }
    }
}

impl PartialEq for KPartiteHypergraph {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k && self.part_sizes == other.part_sizes && self.edges == other.edges
    }
}
impl Eq for KPartiteHypergraph {}

impl KPartiteHypergraph {
    /// Validate, canonicalize (sort + dedup) and build a host.
    pub fn new(k: usize, part_sizes: Vec<usize>, edges: Vec<Vec<u32>>) -> Result<Self> {
        let shell = Self::shell(k, part_sizes)?;
        let n = shell.n_vertices();
        let mut flat: Vec<Vec<u32>> = Vec::with_capacity(edges.len());
        for mut e in edges {
            if e.len() != k {
                return Err(Error::IllegalEdge {
                    edge: e,
                    part: 0,
                    reason: "wrong number of vertices",
                });
            }
            e.sort_unstable();
            for v in &e {
                if *v as usize >= n {
                    return Err(Error::OutOfRange(*v, n));
                }
            }
            // one vertex per part; with sorted ids this means vertex i lies in part i
            for (i, v) in e.iter().enumerate() {
                if shell.part_of(*v) != i {
                    return Err(Error::IllegalEdge {
                        edge: e.clone(),
                        part: shell.part_of(*v),
                        reason: "edge does not meet every part exactly once",
                    });
                }
            }
            flat.push(e);
        }
        flat.sort_unstable();
        for w in flat.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateEdge(w[0].clone()));
            }
        }
        let mut buf = Vec::with_capacity(flat.len() * k);
        for e in &flat {
            buf.extend_from_slice(e);
        }
        Ok(Self::assemble(shell, buf))
    }

    /// Trusted constructor for generators that produce edges already sorted,
    /// deduplicated and legal.
    pub(crate) fn from_sorted_edges_unchecked(
        k: usize,
        part_sizes: Vec<usize>,
        edges: Vec<u32>,
    ) -> Self {
        let shell = Self::shell(k, part_sizes).expect("generator produced a bad shell");
        debug_assert!(edges.len() % k == 0);
        debug_assert!(edges
            .chunks_exact(k)
            .zip(edges.chunks_exact(k).skip(1))
            .all(|(a, b)| a < b));
        Self::assemble(shell, edges)
    }

    fn shell(k: usize, part_sizes: Vec<usize>) -> Result<Self> {
        if k < 2 {
            return Err(Error::BadUniformity(k));
        }
        if part_sizes.len() != k || part_sizes.iter().any(|&s| s == 0) {
            return Err(Error::BadPartSizes(part_sizes));
        }
        let mut part_offsets = Vec::with_capacity(k + 1);
        let mut acc: u32 = 0;
        part_offsets.push(0);
        for &s in &part_sizes {
            acc = acc
                .checked_add(u32::try_from(s).map_err(|_| Error::BadPartSizes(part_sizes.clone()))?)
                .ok_or_else(|| Error::BadPartSizes(part_sizes.clone()))?;
            part_offsets.push(acc);
        }
        Ok(KPartiteHypergraph {
            k,
            part_sizes,
            part_offsets,
            edges: Vec::new(),
            codegree: OnceLock::new(),
            incidence: OnceLock::new(),
        })
    }

    fn assemble(mut shell: Self, edges: Vec<u32>) -> Self {
        shell.edges = edges;
        shell
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn part_sizes(&self) -> &[usize] {
        &self.part_sizes
    }

    pub fn n_vertices(&self) -> usize {
        self.part_offsets[self.k] as usize
    }

    pub fn part_of(&self, v: u32) -> usize {
        debug_assert!((v as usize) < self.n_vertices());
        match self.part_offsets.binary_search(&v) {
            Ok(i) if i == self.k => self.k - 1,
            Ok(i) => i,
            Err(i) => i - 1,
        }
    }

    pub fn part_start(&self, part: usize) -> u32 {
        self.part_offsets[part]
    }

    pub fn part_range(&self, part: usize) -> std::ops::Range<u32> {
        self.part_offsets[part]..self.part_offsets[part + 1]
    }

    pub fn local_id(&self, v: u32) -> usize {
        (v - self.part_offsets[self.part_of(v)]) as usize
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len() / self.k
    }

    pub fn edges(&self) -> impl Iterator<Item = &[u32]> + '_ {
        self.edges.chunks_exact(self.k)
    }

    pub fn edge_at(&self, idx: usize) -> &[u32] {
        &self.edges[idx * self.k..(idx + 1) * self.k]
    }

    /// `tuple` must be sorted ascending (canonical edge form).
    pub fn is_edge(&self, tuple: &[u32]) -> bool {
        debug_assert_eq!(tuple.len(), self.k);
        let n = self.edge_count();
        let (mut lo, mut hi) = (0usize, n);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.edge_at(mid) < tuple {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        lo < n && self.edge_at(lo) == tuple
    }

    /// Partite minimum s-degree: min over all legal s-sets of the number of
    /// legal (k-s)-sets completing them to an edge.
    pub fn partite_min_degree(&self, s: usize) -> Result<u64> {
        self.degree_extrema(s).map(|(min, _)| min)
    }

    /// (min, max) of deg over all legal s-sets.
    pub fn degree_extrema(&self, s: usize) -> Result<(u64, u64)> {
        if s == 0 || s >= self.k {
            return Err(Error::BadArity { s, k: self.k });
        }
        let combos: Vec<Vec<usize>> = combinations(self.k, s);
        let mut min = u64::MAX;
        let mut max = 0u64;
        for combo in &combos {
            let size: usize = combo.iter().map(|&j| self.part_sizes[j]).product();
            let mut counts = vec![0u32; size];
            for e in self.edges() {
                let mut rank = 0usize;
                for &j in combo {
                    rank = rank * self.part_sizes[j] + self.local_id(e[j]);
                }
                counts[rank] += 1;
            }
            for &c in &counts {
                min = min.min(u64::from(c));
                max = max.max(u64::from(c));
            }
        }
        Ok((min, max))
    }

    /// Number of edges with one endpoint in each X_j (X_j a subset of part j).
    pub fn edge_count_between(&self, sets: &[Vec<u32>]) -> Result<u64> {
        let masks = PartMasks::from_sets(self, sets)?;
        Ok(self.edge_count_in_masks(&masks))
    }

    pub fn edge_count_in_masks(&self, masks: &PartMasks) -> u64 {
        let mut count = 0u64;
        'edge: for e in self.edges() {
            for (j, &v) in e.iter().enumerate() {
                if !masks.contains(j, (v - self.part_offsets[j]) as usize) {
                    continue 'edge;
                }
            }
            count += 1;
        }
        count
    }

    /// Induced subgraph on `u`, vertices renumbered ascending.
    pub fn induced(&self, u: &[u32]) -> Result<InducedSubgraph> {
        let n = self.n_vertices();
        let mut keep = vec![false; n];
        for &v in u {
            if v as usize >= n {
                return Err(Error::OutOfRange(v, n));
            }
            keep[v as usize] = true;
        }
        let old_ids: Vec<u32> = (0..n as u32).filter(|&v| keep[v as usize]).collect();
        let mut new_id = vec![u32::MAX; n];
        for (i, &v) in old_ids.iter().enumerate() {
            new_id[v as usize] = i as u32;
        }
        let part_sizes: Vec<usize> = (0..self.k)
            .map(|j| {
                self.part_range(j)
                    .filter(|&v| keep[v as usize])
                    .count()
                    .max(0)
            })
            .collect();
        // empty parts are not representable; an induced host must keep at
        // least one vertex per part to hold any edge at all
        let mut edges = Vec::new();
        if part_sizes.iter().all(|&s| s > 0) {
            for e in self.edges() {
                if e.iter().all(|&v| keep[v as usize]) {
                    for &v in e {
                        edges.push(new_id[v as usize]);
                    }
                }
            }
            let graph = KPartiteHypergraph::from_sorted_edges_unchecked(self.k, part_sizes, edges);
            Ok(InducedSubgraph { graph, old_ids })
        } else {
            Err(Error::BadPartSizes(part_sizes))
        }
    }

    /// Prefix (first k-1 parts) -> bitset of completions in the last part.
    pub fn codegree_index(&self) -> &CodegreeIndex {
        self.codegree.get_or_init(|| CodegreeIndex::build(self))
    }

    /// Vertex -> indices of edges through it.
    pub fn incidence(&self) -> &Incidence {
        self.incidence.get_or_init(|| Incidence::build(self))
    }

    /// The full parts, as one vertex list per part.
    pub fn all_parts_as_sets(&self) -> Vec<Vec<u32>> {
        (0..self.k).map(|j| self.part_range(j).collect()).collect()
    }
}

/// All s-element subsets of [k], each ascending, in lexicographic order.
pub(crate) fn combinations(k: usize, s: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(s);
    fn rec(start: usize, k: usize, s: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == s {
            out.push(cur.clone());
            return;
        }
        for j in start..k {
            cur.push(j);
            rec(j + 1, k, s, cur, out);
            cur.pop();
        }
    }
    rec(0, k, s, &mut cur, &mut out);
    out
}

pub struct InducedSubgraph {
    pub graph: KPartiteHypergraph,
    /// old_ids[new] = old
    pub old_ids: Vec<u32>,
}

impl InducedSubgraph {
    pub fn to_old(&self, new: u32) -> u32 {
        self.old_ids[new as usize]
    }
}

/// One bitset per part over local ids.
#[derive(Clone, Debug, PartialEq)]
pub struct PartMasks {
    words: Vec<Vec<u64>>,
    counts: Vec<usize>,
    sizes: Vec<usize>,
}

impl PartMasks {
    pub fn empty(h: &KPartiteHypergraph) -> Self {
        PartMasks {
            words: h
                .part_sizes
                .iter()
                .map(|&s| vec![0u64; s.div_ceil(64)])
                .collect(),
            counts: vec![0; h.k],
            sizes: h.part_sizes.clone(),
        }
    }

    pub fn from_sets(h: &KPartiteHypergraph, sets: &[Vec<u32>]) -> Result<Self> {
        if sets.len() != h.k {
            return Err(Error::BadArity {
                s: sets.len(),
                k: h.k,
            });
        }
        let mut m = Self::empty(h);
        for (j, set) in sets.iter().enumerate() {
            for &v in set {
                if v as usize >= h.n_vertices() || h.part_of(v) != j {
                    return Err(Error::WrongPart { vertex: v, part: j });
                }
                m.set(j, (v - h.part_offsets[j]) as usize, true);
            }
        }
        Ok(m)
    }

    pub fn contains(&self, part: usize, local: usize) -> bool {
        self.words[part][local / 64] >> (local % 64) & 1 == 1
    }

    pub fn set(&mut self, part: usize, local: usize, on: bool) {
        let w = &mut self.words[part][local / 64];
        let bit = 1u64 << (local % 64);
        if on && *w & bit == 0 {
            *w |= bit;
            self.counts[part] += 1;
        } else if !on && *w & bit != 0 {
            *w &= !bit;
            self.counts[part] -= 1;
        }
    }

    pub fn count(&self, part: usize) -> usize {
        self.counts[part]
    }

    pub fn part_words(&self, part: usize) -> &[u64] {
        &self.words[part]
    }

    pub fn size_product(&self) -> f64 {
        self.counts.iter().map(|&c| c as f64).product()
    }

    pub fn to_sets(&self, h: &KPartiteHypergraph) -> Vec<Vec<u32>> {
        (0..self.sizes.len())
            .map(|j| {
                (0..self.sizes[j])
                    .filter(|&l| self.contains(j, l))
                    .map(|l| h.part_offsets[j] + l as u32)
                    .collect()
            })
            .collect()
    }
}

/// Dense table: mixed-radix rank of an edge's first k-1 vertices (local ids)
/// -> bitset over the last part.
#[derive(Debug)]
pub struct CodegreeIndex {
    dims: Vec<usize>,
    last_words: usize,
    table: Vec<u64>,
}

impl CodegreeIndex {
    fn build(h: &KPartiteHypergraph) -> Self {
        let k = h.k;
        let dims: Vec<usize> = h.part_sizes[..k - 1].to_vec();
        let prefixes: usize = dims.iter().product();
        let last_words = h.part_sizes[k - 1].div_ceil(64);
        let mut table = vec![0u64; prefixes * last_words];
        for e in h.edges() {
            let mut rank = 0usize;
            for j in 0..k - 1 {
                rank = rank * dims[j] + (e[j] - h.part_offsets[j]) as usize;
            }
            let last = (e[k - 1] - h.part_offsets[k - 1]) as usize;
            table[rank * last_words + last / 64] |= 1u64 << (last % 64);
        }
        CodegreeIndex {
            dims,
            last_words,
            table,
        }
    }

    pub fn neighbors(&self, prefix_rank: usize) -> &[u64] {
        &self.table[prefix_rank * self.last_words..(prefix_rank + 1) * self.last_words]
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Fast `e_H(X_1..X_k)` over mask-encoded subsets.
    pub fn count_in_masks(&self, masks: &PartMasks) -> u64 {
        let k1 = self.dims.len();
        let mut prefix_locals: Vec<Vec<usize>> = Vec::with_capacity(k1);
        for j in 0..k1 {
            let locals: Vec<usize> = (0..self.dims[j]).filter(|&l| masks.contains(j, l)).collect();
            if locals.is_empty() {
                return 0;
            }
            prefix_locals.push(locals);
        }
        let last_mask = masks.part_words(k1);
        let mut total = 0u64;
        let mut stack_rank = vec![0usize; k1 + 1];
        // iterate the product of prefix_locals without recursion
        let mut idx = vec![0usize; k1];
        loop {
            // descend to full depth, maintaining partial ranks
            for j in 0..k1 {
                stack_rank[j + 1] = stack_rank[j] * self.dims[j] + prefix_locals[j][idx[j]];
            }
            let nb = self.neighbors(stack_rank[k1]);
            for (w, &m) in nb.iter().zip(last_mask) {
                total += u64::from((w & m).count_ones());
            }
            // odometer increment
            let mut j = k1;
            loop {
                if j == 0 {
                    return total;
                }
                j -= 1;
                idx[j] += 1;
                if idx[j] < prefix_locals[j].len() {
                    break;
                }
                idx[j] = 0;
            }
        }
    }
}

/// CSR incidence: for each vertex, the indices of edges containing it.
#[derive(Debug)]
pub struct Incidence {
    offsets: Vec<u32>,
    edge_ids: Vec<u32>,
}

impl Incidence {
    fn build(h: &KPartiteHypergraph) -> Self {
        let n = h.n_vertices();
        let mut counts = vec![0u32; n + 1];
        for e in h.edges() {
            for &v in e {
                counts[v as usize + 1] += 1;
            }
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let offsets = counts.clone();
        let mut cursor = counts;
        let mut edge_ids = vec![0u32; h.edges.len()];
        for (idx, e) in h.edges().enumerate() {
            for &v in e {
                edge_ids[cursor[v as usize] as usize] = idx as u32;
                cursor[v as usize] += 1;
            }
        }
        Incidence { offsets, edge_ids }
    }

    pub fn edges_of(&self, v: u32) -> &[u32] {
        &self.edge_ids[self.offsets[v as usize] as usize..self.offsets[v as usize + 1] as usize]
    }
}

/// The tile: a k-partite k-graph F, usually with m vertices per part.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternGraph {
    inner: KPartiteHypergraph,
}

impl PatternGraph {
    pub fn new(k: usize, part_sizes: Vec<usize>, edges: Vec<Vec<u32>>) -> Result<Self> {
        Ok(PatternGraph {
            inner: KPartiteHypergraph::new(k, part_sizes, edges)?,
        })
    }

    pub fn as_host(&self) -> &KPartiteHypergraph {
        &self.inner
    }

    pub fn k(&self) -> usize {
        self.inner.k()
    }

    pub fn part_sizes(&self) -> &[usize] {
        self.inner.part_sizes()
    }

    /// Total vertex count.
    pub fn f(&self) -> usize {
        self.inner.n_vertices()
    }

    pub fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    /// True when every part has the same number of vertices.
    pub fn is_balanced(&self) -> bool {
        self.inner.part_sizes().windows(2).all(|w| w[0] == w[1])
    }
}

/// A partition-respecting embedding: pattern vertex id -> host vertex id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Embedding(pub Vec<u32>);

impl Embedding {
    pub fn image(&self) -> Vec<u32> {
        let mut img = self.0.clone();
        img.sort_unstable();
        img
    }

    pub fn validate(&self, host: &KPartiteHypergraph, pattern: &PatternGraph) -> Result<()> {
        let p = pattern.as_host();
        if self.0.len() != p.n_vertices() {
            return Err(Error::DimensionMismatch(self.0.len(), p.n_vertices()));
        }
        let mut seen = std::collections::HashSet::new();
        for (pv, &hv) in self.0.iter().enumerate() {
            if hv as usize >= host.n_vertices() {
                return Err(Error::OutOfRange(hv, host.n_vertices()));
            }
            if host.part_of(hv) != p.part_of(pv as u32) {
                return Err(Error::WrongPart {
                    vertex: hv,
                    part: p.part_of(pv as u32),
                });
            }
            if !seen.insert(hv) {
                return Err(Error::BadPartition(format!(
                    "embedding maps two pattern vertices to host vertex {hv}"
                )));
            }
        }
        for pe in p.edges() {
            let mut img: Vec<u32> = pe.iter().map(|&pv| self.0[pv as usize]).collect();
            img.sort_unstable();
            if !host.is_edge(&img) {
                return Err(Error::BadPartition(format!(
                    "embedding image {img:?} of pattern edge {pe:?} is not a host edge"
                )));
            }
        }
        Ok(())
    }
}

/// Vertex-disjoint embeddings of a common pattern.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Tiling {
    pub embeddings: Vec<Embedding>,
    /// Sorted union of the images.
    pub covered: Vec<u32>,
}

impl Tiling {
    pub fn from_embeddings(embeddings: Vec<Embedding>) -> Self {
        let mut covered: Vec<u32> = embeddings.iter().flat_map(|e| e.0.iter().copied()).collect();
        covered.sort_unstable();
        Tiling {
            embeddings,
            covered,
        }
    }

    pub fn validate(&self, host: &KPartiteHypergraph, pattern: &PatternGraph) -> Result<()> {
        for e in &self.embeddings {
            e.validate(host, pattern)?;
        }
        let mut covered: Vec<u32> = self
            .embeddings
            .iter()
            .flat_map(|e| e.0.iter().copied())
            .collect();
        covered.sort_unstable();
        if covered.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::BadPartition("tiling images overlap".into()));
        }
        if covered != self.covered {
            return Err(Error::BadPartition("covered set out of sync".into()));
        }
        Ok(())
    }

    /// A perfect tiling covers every vertex of the host.
    pub fn is_perfect(&self, host: &KPartiteHypergraph) -> bool {
        self.covered.len() == host.n_vertices()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete(k: usize, n: usize) -> KPartiteHypergraph {
        crate::generators::complete_host(k, n)
    }

    #[test]
    fn build_smallest_legal_instance() {
        let h = KPartiteHypergraph::new(3, vec![1, 1, 1], vec![vec![0, 1, 2]]).unwrap();
        assert_eq!(h.edge_count(), 1);
        assert_eq!(h.n_vertices(), 3);
    }

    #[test]
    fn build_complete_k3_2() {
        let h = complete(3, 2);
        assert_eq!(h.edge_count(), 8);
        assert!(h.is_edge(&[0, 2, 4]));
        assert!(h.is_edge(&[1, 3, 5]));
    }

    #[test]
    fn build_rejects_illegal_edge() {
        let err = KPartiteHypergraph::new(3, vec![1, 1, 1], vec![vec![0, 0, 2]]).unwrap_err();
        assert!(matches!(err, Error::IllegalEdge { .. }));
    }

    #[test]
    fn build_rejects_bad_sizes_and_range() {
        assert!(matches!(
            KPartiteHypergraph::new(3, vec![1, 0, 1], vec![]),
            Err(Error::BadPartSizes(_))
        ));
        assert!(matches!(
            KPartiteHypergraph::new(3, vec![1, 1, 1], vec![vec![0, 1, 7]]),
            Err(Error::OutOfRange(7, 3))
        ));
        assert!(matches!(
            KPartiteHypergraph::new(3, vec![1, 1, 1], vec![vec![0, 1, 2], vec![2, 1, 0]]),
            Err(Error::DuplicateEdge(_))
        ));
    }

    #[test]
    fn min_degree_complete_and_single_edge() {
        let h = complete(3, 2);
        assert_eq!(h.partite_min_degree(2).unwrap(), 2);
        let single =
            KPartiteHypergraph::new(3, vec![2, 2, 2], vec![vec![0, 2, 4]]).unwrap();
        assert_eq!(single.partite_min_degree(2).unwrap(), 0);
        assert!(matches!(
            single.partite_min_degree(0),
            Err(Error::BadArity { .. })
        ));
        assert!(matches!(
            single.partite_min_degree(3),
            Err(Error::BadArity { .. })
        ));
    }

    #[test]
    fn edge_count_between_cases() {
        let h = complete(3, 2);
        let full = h.all_parts_as_sets();
        assert_eq!(h.edge_count_between(&full).unwrap(), 8);
        let with_empty = vec![vec![0, 1], vec![], vec![4, 5]];
        assert_eq!(h.edge_count_between(&with_empty).unwrap(), 0);
        let single =
            KPartiteHypergraph::new(3, vec![2, 2, 2], vec![vec![0, 2, 4]]).unwrap();
        assert_eq!(
            single
                .edge_count_between(&[vec![0], vec![2], vec![4]])
                .unwrap(),
            1
        );
        assert!(single
            .edge_count_between(&[vec![2], vec![0], vec![4]])
            .is_err());
    }

    #[test]
    fn codegree_index_agrees_with_scan() {
        let h = complete(3, 3);
        let sets = vec![vec![0, 2], vec![3, 4], vec![6, 7, 8]];
        let masks = PartMasks::from_sets(&h, &sets).unwrap();
        assert_eq!(
            h.codegree_index().count_in_masks(&masks),
            h.edge_count_in_masks(&masks)
        );
        assert_eq!(h.edge_count_in_masks(&masks), 12);
    }

    #[test]
    fn induced_full_is_identity() {
        let h = complete(3, 2);
        let all: Vec<u32> = (0..6).collect();
        let ind = h.induced(&all).unwrap();
        assert_eq!(ind.graph, h);
        assert_eq!(ind.old_ids, all);
    }

    #[test]
    fn induced_balanced_triple_of_complete() {
        let h = complete(3, 2);
        let ind = h.induced(&[1, 2, 5]).unwrap();
        assert_eq!(ind.graph.part_sizes(), &[1, 1, 1]);
        assert_eq!(ind.graph.edge_count(), 1);
        assert_eq!(ind.to_old(0), 1);
    }

    #[test]
    fn induced_dropping_edge_vertex_leaves_edgeless() {
        let single =
            KPartiteHypergraph::new(3, vec![2, 2, 2], vec![vec![0, 2, 4]]).unwrap();
        let ind = single.induced(&[1, 2, 3, 4, 5]).unwrap();
        assert_eq!(ind.graph.edge_count(), 0);
    }

    #[test]
    fn monotone_degree_under_edge_insertion() {
        let base = KPartiteHypergraph::new(3, vec![2, 2, 2], vec![vec![0, 2, 4], vec![1, 3, 5]])
            .unwrap();
        let more = KPartiteHypergraph::new(
            3,
            vec![2, 2, 2],
            vec![vec![0, 2, 4], vec![1, 3, 5], vec![0, 3, 5]],
        )
        .unwrap();
        for s in 1..3 {
            assert!(more.partite_min_degree(s).unwrap() >= base.partite_min_degree(s).unwrap());
        }
    }

    fn product_tuples(ranges: &[Vec<u32>]) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new()];
        for r in ranges {
            let mut next = Vec::new();
            for prefix in &out {
                for &v in r {
                    let mut p = prefix.clone();
                    p.push(v);
                    next.push(p);
                }
            }
            out = next;
        }
        out
    }

    #[test]
    fn degree_brute_force_small_hosts() {
        // spot-check deg(S) = number of completions by brute force, N <= 12
        let h = crate::generators::gen_iid(3, 4, 0.5, 99).unwrap();
        for s in 1..3 {
            let mut brute_min = u64::MAX;
            for combo in combinations(3, s) {
                let ranges: Vec<Vec<u32>> =
                    combo.iter().map(|&j| h.part_range(j).collect()).collect();
                for chosen in product_tuples(&ranges) {
                    let deg = h
                        .edges()
                        .filter(|e| chosen.iter().all(|v| e.contains(v)))
                        .count() as u64;
                    brute_min = brute_min.min(deg);
                }
            }
            assert_eq!(h.partite_min_degree(s).unwrap(), brute_min);
        }
    }
}
