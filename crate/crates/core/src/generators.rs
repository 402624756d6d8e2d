//! Host and pattern generators: iid quasi-random hosts, the two extremal
//! constructions with their coloring metadata, complete hosts, and complete
//! patterns. Every edge decision is a pure function of (seed, canonical rank),
//! so identical parameters reproduce identical hypergraphs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::{KPartiteHypergraph, PatternGraph};
use crate::rng::StreamRng;

/// Default cap on coloring-table size.
pub const DEFAULT_COLORING_BUDGET_BITS: u128 = 1 << 30;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GenParams {
    pub seed: u64,
    /// iid edge probability
    pub p: f64,
    /// red probability for the degree construction
    pub q: f64,
    /// lower-degree parameter, 1 <= ell <= k-2
    pub ell: usize,
    /// divisibility parameter of the target tile
    pub m: usize,
}

/// Packed bit-per-set coloring; `true` bits are red.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct Coloring {
    pub bits: Vec<u64>,
    pub len: u64,
}

impl Coloring {
    fn with_len(len: u64) -> Self {
        Coloring {
            bits: vec![0u64; (len as usize).div_ceil(64)],
            len,
        }
    }

    fn set(&mut self, i: u64, red: bool) {
        if red {
            self.bits[(i / 64) as usize] |= 1u64 << (i % 64);
        }
    }

    pub fn is_red(&self, i: u64) -> bool {
        self.bits[(i / 64) as usize] >> (i % 64) & 1 == 1
    }
}

/// What a construction actually drew, enough to re-check its mechanism.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "which")]
pub enum ConstructionMeta {
    A {
        k: usize,
        n: usize,
        m: usize,
        seed: u64,
        /// global ids of the two pieces of the last part
        split_low: Vec<u32>,
        split_high: Vec<u32>,
        /// one bit per legal (k-1)-set of the first k-1 parts, rank-ordered
        coloring: Coloring,
    },
    B {
        k: usize,
        n: usize,
        m: usize,
        ell: usize,
        q: f64,
        seed: u64,
        /// global id of the added vertex in part 1
        special_vertex: u32,
        /// one bit per legal (ell+1)-set of the underlying complete graph
        coloring: Coloring,
        /// rank offset of each (ell+1)-part combination
        combo_offsets: Vec<u64>,
    },
}

/// Complete host: every legal k-set is an edge.
pub fn complete_host(k: usize, n: usize) -> KPartiteHypergraph {
    let sizes = vec![n; k];
    let mut edges = Vec::with_capacity(n.pow(k as u32) * k);
    let mut tuple = vec![0usize; k];
    loop {
        let mut offset = 0usize;
        for (j, &t) in tuple.iter().enumerate() {
            edges.push((offset + t) as u32);
            offset += sizes[j];
        }
        let mut j = k;
        loop {
            if j == 0 {
                return KPartiteHypergraph::from_sorted_edges_unchecked(k, sizes, edges);
            }
            j -= 1;
            tuple[j] += 1;
            if tuple[j] < n {
                break;
            }
            tuple[j] = 0;
        }
    }
}

/// Each legal k-set is an edge independently with probability `p`.
pub fn gen_iid(k: usize, n: usize, p: f64, seed: u64) -> Result<KPartiteHypergraph> {
    if k < 2 {
        return Err(Error::BadUniformity(k));
    }
    if n == 0 {
        return Err(Error::BadPartSizes(vec![n; k]));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::BadProbability(p));
    }
    let rng = StreamRng::new(seed, "gen.iid");
    let sizes = vec![n; k];
    let total: u64 = (n as u64).pow(k as u32);
    let mut edges = Vec::new();
    let mut tuple = vec![0usize; k];
    for rank in 0..total {
        if rng.bernoulli_at(rank, p) {
            let mut offset = 0usize;
            for (j, &t) in tuple.iter().enumerate() {
                edges.push((offset + t) as u32);
                offset += sizes[j];
            }
        }
        let mut j = k;
        while j > 0 {
            j -= 1;
            tuple[j] += 1;
            if tuple[j] < n {
                break;
            }
            tuple[j] = 0;
        }
    }
    Ok(KPartiteHypergraph::from_sorted_edges_unchecked(
        k, sizes, edges,
    ))
}

/// All m^k legal tuples.
pub fn pattern_complete(k: usize, m: usize) -> PatternGraph {
    let h = complete_host(k, m);
    PatternGraph::new(
        h.k(),
        h.part_sizes().to_vec(),
        h.edges().map(|e| e.to_vec()).collect(),
    )
    .expect("complete pattern is always valid")
}

fn check_coloring_budget(bits: u128, budget: Option<u128>) -> Result<()> {
    let budget = budget.unwrap_or(DEFAULT_COLORING_BUDGET_BITS);
    if bits > budget {
        return Err(Error::ColoringTooLarge { bits, budget });
    }
    Ok(())
}

/// Codegree-threshold construction: color the legal (k-1)-sets of the first
/// k-1 parts red or blue uniformly, split the last part into two pieces of
/// which the first has size not divisible by m, and join red sets to the low
/// piece and blue sets to the high piece.
pub fn gen_construction_a(
    k: usize,
    n: usize,
    m: usize,
    seed: u64,
) -> Result<(KPartiteHypergraph, ConstructionMeta)> {
    if k < 3 {
        return Err(Error::BadUniformity(k));
    }
    if m < 2 || n < 2 {
        return Err(Error::BadPartSizes(vec![n; k]));
    }
    let mut low = n / 2;
    if low % m == 0 {
        low -= 1;
    }
    if low == 0 {
        return Err(Error::DegenerateSplit);
    }
    debug_assert!(low % m != 0);
    let prefix_count: u128 = (n as u128).pow(k as u32 - 1);
    check_coloring_budget(prefix_count, None)?;
    let prefix_count = prefix_count as u64;

    let rng = StreamRng::new(seed, "consA.coloring");
    let mut coloring = Coloring::with_len(prefix_count);
    for rank in 0..prefix_count {
        coloring.set(rank, rng.bernoulli_at(rank, 0.5));
    }

    let last_start = ((k - 1) * n) as u32;
    let split_low: Vec<u32> = (0..low as u32).map(|i| last_start + i).collect();
    let split_high: Vec<u32> = (low as u32..n as u32).map(|i| last_start + i).collect();

    let mut edges = Vec::new();
    let mut tuple = vec![0usize; k - 1];
    for rank in 0..prefix_count {
        let side = if coloring.is_red(rank) {
            &split_low
        } else {
            &split_high
        };
        for &v in side {
            let mut offset = 0usize;
            for &t in &tuple {
                edges.push((offset + t) as u32);
                offset += n;
            }
            edges.push(v);
        }
        let mut j = k - 1;
        while j > 0 {
            j -= 1;
            tuple[j] += 1;
            if tuple[j] < n {
                break;
            }
            tuple[j] = 0;
        }
    }
    let host = KPartiteHypergraph::from_sorted_edges_unchecked(k, vec![n; k], edges);
    let meta = ConstructionMeta::A {
        k,
        n,
        m,
        seed,
        split_low,
        split_high,
        coloring,
    };
    Ok((host, meta))
}

/// Rank layout for the legal (ell+1)-sets of a complete k-partite structure
/// with the given part sizes: combinations of parts in lexicographic order,
/// mixed-radix within each combination.
pub(crate) struct ComboRanker {
    combos: Vec<Vec<usize>>,
    offsets: Vec<u64>,
    sizes: Vec<usize>,
    pub total: u64,
}

impl ComboRanker {
    pub fn new(sizes: &[usize], arity: usize) -> Self {
        let combos = crate::hypergraph::combinations(sizes.len(), arity);
        let mut offsets = Vec::with_capacity(combos.len());
        let mut acc = 0u64;
        for c in &combos {
            offsets.push(acc);
            acc += c.iter().map(|&j| sizes[j] as u64).product::<u64>();
        }
        ComboRanker {
            combos,
            offsets,
            sizes: sizes.to_vec(),
            total: acc,
        }
    }

    /// `parts` must be ascending; `locals[i]` is the local id in `parts[i]`.
    pub fn rank(&self, parts: &[usize], locals: &[usize]) -> u64 {
        let ci = self
            .combos
            .binary_search(&parts.to_vec())
            .expect("unknown part combination");
        let mut r = 0u64;
        for (i, &j) in parts.iter().enumerate() {
            r = r * self.sizes[j] as u64 + locals[i] as u64;
        }
        self.offsets[ci] + r
    }

    pub fn offsets(&self) -> &[u64] {
        &self.offsets
    }
}

/// Lower-degree construction: color the legal (ell+1)-sets of a complete
/// k-partite (ell+1)-graph (first part one vertex short) red with probability
/// q; add a special vertex to part 1; a legal k-set avoiding it is an edge
/// when all its (ell+1)-subsets are red, and one through it is an edge when
/// the rest spans at least one blue set.
pub fn gen_construction_b(
    k: usize,
    n: usize,
    m: usize,
    ell: usize,
    q: f64,
    seed: u64,
) -> Result<(KPartiteHypergraph, ConstructionMeta)> {
    if k < 3 {
        return Err(Error::BadUniformity(k));
    }
    if ell == 0 || ell > k - 2 {
        return Err(Error::BadEll { ell, k });
    }
    if m < 2 || n < 2 {
        return Err(Error::BadPartSizes(vec![n; k]));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::BadProbability(q));
    }
    // underlying structure: part 1 has n-1 vertices, the rest have n
    let mut g_sizes = vec![n; k];
    g_sizes[0] = n - 1;
    let ranker = ComboRanker::new(&g_sizes, ell + 1);
    check_coloring_budget(ranker.total as u128, None)?;

    let rng = StreamRng::new(seed, "consB.coloring");
    let mut coloring = Coloring::with_len(ranker.total);
    for rank in 0..ranker.total {
        coloring.set(rank, rng.bernoulli_at(rank, q));
    }

    // the special vertex gets the last id of part 1
    let special_local = n - 1;
    let special_vertex = special_local as u32;

    let subsets_all = crate::hypergraph::combinations(k, ell + 1);
    let subsets_tail: Vec<Vec<usize>> = crate::hypergraph::combinations(k - 1, ell + 1)
        .into_iter()
        .map(|c| c.into_iter().map(|j| j + 1).collect())
        .collect();

    let mut edges = Vec::new();
    let mut tuple = vec![0usize; k];
    let total: u64 = (n as u64).pow(k as u32);
    let mut locals_buf = vec![0usize; ell + 1];
    for _ in 0..total {
        let has_special = tuple[0] == special_local;
        let is_edge = if !has_special {
            subsets_all.iter().all(|parts| {
                for (i, &j) in parts.iter().enumerate() {
                    locals_buf[i] = tuple[j];
                }
                coloring.is_red(ranker.rank(parts, &locals_buf[..parts.len()]))
            })
        } else {
            subsets_tail.iter().any(|parts| {
                for (i, &j) in parts.iter().enumerate() {
                    locals_buf[i] = tuple[j];
                }
                !coloring.is_red(ranker.rank(parts, &locals_buf[..parts.len()]))
            })
        };
        if is_edge {
            let mut offset = 0usize;
            for &t in &tuple {
                edges.push((offset + t) as u32);
                offset += n;
            }
        }
        let mut j = k;
        while j > 0 {
            j -= 1;
            tuple[j] += 1;
            if tuple[j] < n {
                break;
            }
            tuple[j] = 0;
        }
    }
    let host = KPartiteHypergraph::from_sorted_edges_unchecked(k, vec![n; k], edges);
    let combo_offsets = ranker.offsets().to_vec();
    let meta = ConstructionMeta::B {
        k,
        n,
        m,
        ell,
        q,
        seed,
        special_vertex,
        coloring,
        combo_offsets,
    };
    Ok((host, meta))
}

/// Displayed alongside the lower-degree construction: the density and degree
/// constants its coloring probability implies.
pub fn construction_b_constants(k: usize, ell: usize, q: f64) -> (f64, f64) {
    let c_all = binomial(k, ell + 1) as i32;
    let c_tail = binomial(k - 1, ell + 1) as i32;
    let p = q.powi(c_all);
    let alpha = 0.5 * p.min(1.0 - q.powi(c_tail));
    (p, alpha)
}

fn binomial(n: usize, r: usize) -> u64 {
    if r > n {
        return 0;
    }
    let mut acc = 1u64;
    for i in 0..r {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyReport {
    pub pass: bool,
    pub checked: u64,
    /// First legal set breaking the mechanism, with two incompatible
    /// neighbors, when the check fails.
    pub counterexample: Option<(Vec<u32>, u32, u32)>,
}

/// Re-check the structural mechanism that blocks factors.
///
/// For the codegree construction: no legal (k-1)-set of the first k-1 parts
/// may have neighbors on both sides of the split. For the lower-degree
/// construction: whenever the special vertex completes a legal (k-1)-set of
/// the other parts, it must be that set's only part-1 neighbor.
pub fn verify_construction_invariant(
    h: &KPartiteHypergraph,
    meta: &ConstructionMeta,
) -> Result<VerifyReport> {
    match meta {
        ConstructionMeta::A {
            k,
            n,
            split_low,
            split_high,
            ..
        } => {
            if h.k() != *k || h.part_sizes() != vec![*n; *k].as_slice() {
                return Err(Error::MetaMismatch(
                    "host shape differs from metadata".into(),
                ));
            }
            let low_start = split_low.first().copied().unwrap_or(0);
            let high_start = split_high.first().copied().unwrap_or(0);
            if split_low.len() + split_high.len() != *n
                || low_start != ((k - 1) * n) as u32
                || high_start != low_start + split_low.len() as u32
            {
                return Err(Error::MetaMismatch("split does not cover the last part".into()));
            }
            let prefix_count: usize = n.pow(*k as u32 - 1);
            let mut seen_low = vec![u32::MAX; prefix_count];
            let mut seen_high = vec![u32::MAX; prefix_count];
            let boundary = high_start;
            for e in h.edges() {
                let mut rank = 0usize;
                for &v in &e[..k - 1] {
                    rank = rank * n + h.local_id(v);
                }
                let last = e[k - 1];
                let slot = if last < boundary {
                    &mut seen_low[rank]
                } else {
                    &mut seen_high[rank]
                };
                if *slot == u32::MAX {
                    *slot = last;
                }
            }
            for rank in 0..prefix_count {
                if seen_low[rank] != u32::MAX && seen_high[rank] != u32::MAX {
                    return Ok(VerifyReport {
                        pass: false,
                        checked: rank as u64 + 1,
                        counterexample: Some((
                            unrank_prefix(h, rank, *n, *k - 1, 0),
                            seen_low[rank],
                            seen_high[rank],
                        )),
                    });
                }
            }
            Ok(VerifyReport {
                pass: true,
                checked: prefix_count as u64,
                counterexample: None,
            })
        }
        ConstructionMeta::B {
            k,
            n,
            special_vertex,
            ..
        } => {
            if h.k() != *k || h.part_sizes() != vec![*n; *k].as_slice() {
                return Err(Error::MetaMismatch(
                    "host shape differs from metadata".into(),
                ));
            }
            if *special_vertex as usize >= *n {
                return Err(Error::MetaMismatch("special vertex outside part 1".into()));
            }
            let prefix_count: usize = n.pow(*k as u32 - 1);
            let mut seen_special = vec![false; prefix_count];
            let mut seen_other = vec![u32::MAX; prefix_count];
            for e in h.edges() {
                let mut rank = 0usize;
                for &v in &e[1..] {
                    rank = rank * n + h.local_id(v);
                }
                if e[0] == *special_vertex {
                    seen_special[rank] = true;
                } else if seen_other[rank] == u32::MAX {
                    seen_other[rank] = e[0];
                }
            }
            for rank in 0..prefix_count {
                if seen_special[rank] && seen_other[rank] != u32::MAX {
                    return Ok(VerifyReport {
                        pass: false,
                        checked: rank as u64 + 1,
                        counterexample: Some((
                            unrank_prefix(h, rank, *n, *k - 1, 1),
                            *special_vertex,
                            seen_other[rank],
                        )),
                    });
                }
            }
            Ok(VerifyReport {
                pass: true,
                checked: prefix_count as u64,
                counterexample: None,
            })
        }
    }
}

fn unrank_prefix(
    h: &KPartiteHypergraph,
    rank: usize,
    n: usize,
    len: usize,
    first_part: usize,
) -> Vec<u32> {
    let mut locals = vec![0usize; len];
    let mut r = rank;
    for i in (0..len).rev() {
        locals[i] = r % n;
        r /= n;
    }
    locals
        .iter()
        .enumerate()
        .map(|(i, &l)| h.part_start(first_part + i) + l as u32)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iid_extremes() {
        let full = gen_iid(3, 2, 1.0, 5).unwrap();
        assert_eq!(full.edge_count(), 8);
        let empty = gen_iid(3, 2, 0.0, 5).unwrap();
        assert_eq!(empty.edge_count(), 0);
    }

    #[test]
    fn iid_is_deterministic() {
        let a = gen_iid(3, 10, 0.4, 123).unwrap();
        let b = gen_iid(3, 10, 0.4, 123).unwrap();
        let c = gen_iid(3, 10, 0.4, 124).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn iid_edge_count_concentrates() {
        // n=40, p=0.5: mean 32000, sigma = sqrt(64000 * 0.25) = 126.49
        let h = gen_iid(3, 40, 0.5, 7).unwrap();
        let mean = 32000.0f64;
        let sigma = 126.49f64;
        let e = h.edge_count() as f64;
        assert!((e - mean).abs() <= 4.0 * sigma, "edge count {e}");
        // golden count for the fixed seed
        assert_eq!(h.edge_count(), 31960);
    }

    #[test]
    fn pattern_complete_sizes() {
        assert_eq!(pattern_complete(3, 1).edge_count(), 1);
        assert_eq!(pattern_complete(3, 2).edge_count(), 8);
        assert_eq!(pattern_complete(4, 2).edge_count(), 16);
    }

    #[test]
    fn construction_a_split_sizes() {
        // m=2, n=6: floor(6/2)=3 and 2 does not divide 3, keep 3
        let (_, meta) = gen_construction_a(3, 6, 2, 1).unwrap();
        let ConstructionMeta::A {
            split_low,
            split_high,
            ..
        } = &meta
        else {
            panic!()
        };
        assert_eq!(split_low.len(), 3);
        assert_eq!(split_high.len(), 3);
        // m=3, n=6: floor(6/2)=3 divisible by 3, drop to 2
        let (_, meta) = gen_construction_a(3, 6, 3, 1).unwrap();
        let ConstructionMeta::A { split_low, .. } = &meta else {
            panic!()
        };
        assert_eq!(split_low.len(), 2);
    }

    #[test]
    fn construction_a_invariant_holds() {
        for seed in 0..3 {
            let (h, meta) = gen_construction_a(3, 8, 2, seed).unwrap();
            let rep = verify_construction_invariant(&h, &meta).unwrap();
            assert!(rep.pass);
        }
    }

    #[test]
    fn construction_a_neighbors_on_one_side() {
        let (h, meta) = gen_construction_a(3, 6, 2, 9).unwrap();
        let ConstructionMeta::A { split_low, .. } = &meta else {
            panic!()
        };
        let boundary = split_low.last().copied().unwrap();
        for x1 in h.part_range(0) {
            for x2 in h.part_range(1) {
                let neighbors: Vec<u32> = h
                    .part_range(2)
                    .filter(|&v| h.is_edge(&[x1, x2, v]))
                    .collect();
                let lows = neighbors.iter().filter(|&&v| v <= boundary).count();
                assert!(lows == 0 || lows == neighbors.len());
            }
        }
    }

    #[test]
    fn construction_a_edge_count_window() {
        // n=7: split 3/4, each of 49 prefix pairs contributes 3 or 4 edges
        let (h, _) = gen_construction_a(3, 7, 2, 11).unwrap();
        let mean = 49.0 * 3.5;
        let sigma = (49.0f64 * 0.25).sqrt();
        let e = h.edge_count() as f64;
        assert!((e - mean).abs() <= 4.0 * sigma, "edge count {e}");
        assert_eq!(h.edge_count(), 174);
    }

    #[test]
    fn construction_b_extreme_q() {
        // q=1: every coloring bit red, edges are exactly the legal sets
        // avoiding the special vertex
        let (h, meta) = gen_construction_b(3, 4, 2, 1, 1.0, 3).unwrap();
        let ConstructionMeta::B { special_vertex, .. } = &meta else {
            panic!()
        };
        assert_eq!(h.edge_count(), 3 * 4 * 4);
        assert!(h.edges().all(|e| e[0] != *special_vertex));
        // q=0: only the legal sets through the special vertex
        let (h, _) = gen_construction_b(3, 4, 2, 1, 0.0, 3).unwrap();
        assert_eq!(h.edge_count(), 4 * 4);
        assert!(h.edges().all(|e| e[0] == *special_vertex));
    }

    #[test]
    fn construction_b_invariant_holds() {
        for seed in 0..3 {
            let (h, meta) = gen_construction_b(3, 8, 2, 1, 0.7, seed).unwrap();
            let rep = verify_construction_invariant(&h, &meta).unwrap();
            assert!(rep.pass, "seed {seed}");
        }
    }

    #[test]
    fn fabricated_meta_fails_on_complete_host() {
        let h = complete_host(3, 4);
        let meta = ConstructionMeta::A {
            k: 3,
            n: 4,
            m: 2,
            seed: 0,
            split_low: vec![8, 9],
            split_high: vec![10, 11],
            coloring: Coloring::with_len(16),
        };
        let rep = verify_construction_invariant(&h, &meta).unwrap();
        assert!(!rep.pass);
        assert!(rep.counterexample.is_some());
    }

    #[test]
    fn constants_match_coloring_probability() {
        let (p, alpha) = construction_b_constants(3, 1, 0.7);
        assert!((p - 0.7f64.powi(3)).abs() < 1e-12);
        assert!((alpha - 0.15).abs() < 1e-12);
    }
}
