//! Copies of a pattern in a host: enumeration, exact factor decisions via
//! exact-cover search, greedy almost-tilings and a supersaturation report.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::embed::{self, Flow, SearchOptions};
use crate::error::{Error, Result};
use crate::hypergraph::{Embedding, KPartiteHypergraph, PatternGraph, Tiling};

/// Default backtrack-node cap for the factor solver.
pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EmbeddingCensus {
    /// Collected embeddings (may be truncated by `limit`).
    pub embeddings: Vec<Embedding>,
    pub labelled: u64,
    /// Distinct image vertex sets.
    pub unlabelled: u64,
    /// Partition-respecting automorphisms of the pattern.
    pub automorphisms: u64,
    /// labelled / automorphisms, for comparison with `unlabelled`.
    pub labelled_over_aut: u64,
}

/// Enumerate partition-respecting embeddings in lexicographic image order.
pub fn enumerate_embeddings(
    host: &KPartiteHypergraph,
    pattern: &PatternGraph,
    anchor: Option<(u32, u32)>,
    limit: Option<usize>,
) -> Result<EmbeddingCensus> {
    let opts = SearchOptions {
        anchor,
        ..Default::default()
    };
    let mut embeddings = Vec::new();
    let mut images: HashSet<Vec<u32>> = HashSet::new();
    let labelled = embed::for_each_embedding(host, pattern, &opts, |a| {
        if limit.map_or(true, |l| embeddings.len() < l) {
            embeddings.push(Embedding(a.to_vec()));
        }
        let mut img = a.to_vec();
        img.sort_unstable();
        images.insert(img);
        Flow::Continue
    })?;
    let automorphisms = count_automorphisms(pattern)?;
    Ok(EmbeddingCensus {
        embeddings,
        labelled,
        unlabelled: images.len() as u64,
        automorphisms,
        labelled_over_aut: if automorphisms > 0 {
            labelled / automorphisms
        } else {
            0
        },
    })
}

/// Partition-respecting automorphism count, by embedding the pattern into
/// itself. Exact for any pattern small enough to enumerate.
pub fn count_automorphisms(pattern: &PatternGraph) -> Result<u64> {
    embed::count_embeddings(pattern.as_host(), pattern, &SearchOptions::default())
}

/// Distinct copies (image vertex sets), sorted lexicographically.
pub fn collect_copies(
    host: &KPartiteHypergraph,
    pattern: &PatternGraph,
    budget: Option<u64>,
) -> Result<Vec<Vec<u32>>> {
    let opts = SearchOptions {
        node_budget: budget,
        ..Default::default()
    };
    let mut images: HashSet<Vec<u32>> = HashSet::new();
    embed::for_each_embedding(host, pattern, &opts, |a| {
        let mut img = a.to_vec();
        img.sort_unstable();
        images.insert(img);
        Flow::Continue
    })?;
    let mut copies: Vec<Vec<u32>> = images.into_iter().collect();
    copies.sort_unstable();
    Ok(copies)
}

/// Number of distinct copies whose image contains `v`.
pub fn copies_containing(
    host: &KPartiteHypergraph,
    pattern: &PatternGraph,
    v: u32,
) -> Result<u64> {
    let p = pattern.as_host();
    if v as usize >= host.n_vertices() {
        return Err(Error::OutOfRange(v, host.n_vertices()));
    }
    let part = host.part_of(v);
    let mut images: HashSet<Vec<u32>> = HashSet::new();
    for pv in p.part_range(part) {
        let opts = SearchOptions {
            anchor: Some((pv, v)),
            ..Default::default()
        };
        embed::for_each_embedding(host, pattern, &opts, |a| {
            let mut img = a.to_vec();
            img.sort_unstable();
            images.insert(img);
            Flow::Continue
        })?;
    }
    Ok(images.len() as u64)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum FactorOutcome {
    Found(Tiling),
    None,
    /// Node budget exhausted before the search space was decided.
    Unknown,
}

impl FactorOutcome {
    pub fn is_found(&self) -> bool {
        matches!(self, FactorOutcome::Found(_))
    }
}

/// Decide whether the host has a perfect pattern tiling, with a verified
/// witness when it does.
///
/// The search is an exact cover over distinct copies: branch on the lowest
/// uncovered vertex, trying the copies through it in lexicographic order.
/// Failed cover states are memoized when the host fits in a 128-bit mask.
/// Before searching, parts are split into components of the "shares a copy"
/// relation; a component whose size is not a multiple of the pattern's
/// per-part count already rules out a factor.
pub fn exact_factor(
    host: &KPartiteHypergraph,
    pattern: &PatternGraph,
    budget: Option<u64>,
) -> Result<FactorOutcome> {
    let p = pattern.as_host();
    if p.k() != host.k() {
        return Err(Error::ArityMismatch {
            pattern: p.k(),
            host: host.k(),
        });
    }
    for j in 0..host.k() {
        if host.part_sizes()[j] % p.part_sizes()[j] != 0 {
            return Ok(FactorOutcome::None);
        }
    }
    let n = host.n_vertices();
    if n > 128 {
        return Err(Error::TooLarge {
            needed: n as u128,
            cap: 128,
        });
    }
    let budget = budget.unwrap_or(DEFAULT_NODE_BUDGET);
    let copies = match collect_copies(host, pattern, Some(budget)) {
        Ok(c) => c,
        Err(Error::Budget(_)) => return Ok(FactorOutcome::Unknown),
        Err(e) => return Err(e),
    };
    if copies.is_empty() {
        return Ok(FactorOutcome::None);
    }

    // components of the relation "appear in a common copy", per part
    for part in 0..host.k() {
        let mut dsu: Vec<u32> = (0..n as u32).collect();
        fn find(dsu: &mut [u32], mut x: u32) -> u32 {
            while dsu[x as usize] != x {
                dsu[x as usize] = dsu[dsu[x as usize] as usize];
                x = dsu[x as usize];
            }
            x
        }
        for c in &copies {
            let members: Vec<u32> = c
                .iter()
                .copied()
                .filter(|&v| host.part_of(v) == part)
                .collect();
            for w in members.windows(2) {
                let (a, b) = (find(&mut dsu, w[0]), find(&mut dsu, w[1]));
                if a != b {
                    dsu[a as usize] = b;
                }
            }
        }
        let mut comp_sizes: HashMap<u32, usize> = HashMap::new();
        for v in host.part_range(part) {
            *comp_sizes.entry(find(&mut dsu, v)).or_insert(0) += 1;
        }
        let m = p.part_sizes()[part];
        if comp_sizes.values().any(|&s| s % m != 0) {
            return Ok(FactorOutcome::None);
        }
    }

    let masks: Vec<u128> = copies
        .iter()
        .map(|c| c.iter().fold(0u128, |m, &v| m | 1u128 << v))
        .collect();
    let mut by_vertex: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (i, c) in copies.iter().enumerate() {
        for &v in c {
            by_vertex[v as usize].push(i as u32);
        }
    }

    struct Cover<'a> {
        n: usize,
        masks: &'a [u128],
        by_vertex: &'a [Vec<u32>],
        memo: HashSet<u128>,
        memo_enabled: bool,
        nodes: u64,
        budget: u64,
        chosen: Vec<u32>,
    }
    enum Verdict {
        Found,
        Exhausted,
        Aborted,
    }
    impl Cover<'_> {
        fn search(&mut self, covered: u128) -> Verdict {
            self.nodes += 1;
            if self.nodes > self.budget {
                return Verdict::Aborted;
            }
            let pivot = (!covered).trailing_zeros() as usize;
            if pivot >= self.n {
                return Verdict::Found;
            }
            if self.memo_enabled && self.memo.contains(&covered) {
                return Verdict::Exhausted;
            }
            let mut aborted = false;
            for &ci in &self.by_vertex[pivot] {
                let m = self.masks[ci as usize];
                if m & covered != 0 {
                    continue;
                }
                self.chosen.push(ci);
                match self.search(covered | m) {
                    Verdict::Found => return Verdict::Found,
                    Verdict::Aborted => {
                        aborted = true;
                        self.chosen.pop();
                        break;
                    }
                    Verdict::Exhausted => {
                        self.chosen.pop();
                    }
                }
            }
            if aborted {
                Verdict::Aborted
            } else {
                if self.memo_enabled {
                    self.memo.insert(covered);
                }
                Verdict::Exhausted
            }
        }
    }

    let mut cover = Cover {
        n,
        masks: &masks,
        by_vertex: &by_vertex,
        memo: HashSet::new(),
        memo_enabled: n <= 64,
        nodes: 0,
        budget,
        chosen: Vec::new(),
    };
    match cover.search(0) {
        Verdict::Found => {
            let mut embeddings = Vec::new();
            for &ci in &cover.chosen {
                let emb = copy_to_embedding(host, pattern, &copies[ci as usize])?;
                embeddings.push(emb);
            }
            let tiling = Tiling::from_embeddings(embeddings);
            tiling.validate(host, pattern)?;
            debug_assert!(tiling.is_perfect(host));
            Ok(FactorOutcome::Found(tiling))
        }
        Verdict::Exhausted => Ok(FactorOutcome::None),
        Verdict::Aborted => Ok(FactorOutcome::Unknown),
    }
}

/// Realize a copy (an image vertex set) as a concrete embedding.
fn copy_to_embedding(
    host: &KPartiteHypergraph,
    pattern: &PatternGraph,
    copy: &[u32],
) -> Result<Embedding> {
    let mut allowed = vec![false; host.n_vertices()];
    for &v in copy {
        allowed[v as usize] = true;
    }
    let opts = SearchOptions {
        allowed: Some(&allowed),
        ..Default::default()
    };
    embed::first_embedding(host, pattern, &opts)?.ok_or_else(|| {
        Error::BadPartition(format!("copy {copy:?} no longer embeds the pattern"))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// Leftover in every part is at or below the target fraction.
    CoveredAll,
    NoCopyInRemainder,
    BudgetExhausted,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TilingReport {
    pub tiling: Tiling,
    pub leftover_per_part: Vec<usize>,
    pub leftover_vertices: Vec<u32>,
    pub stopped_reason: StopReason,
}

/// Repeatedly remove the lexicographically least copy inside the remainder
/// until each part's leftover is at most `omega` times its size, or no copy
/// is left. The seed is carried for the run report only; the procedure is
/// deterministic.
pub fn greedy_tiling(
    host: &KPartiteHypergraph,
    pattern: &PatternGraph,
    omega: f64,
    _seed: u64,
) -> Result<TilingReport> {
    greedy_tiling_within(host, pattern, omega, None)
}

/// Greedy tiling restricted to `allowed` host vertices (all when `None`).
/// The per-part target is `omega * |allowed in part|`.
pub fn greedy_tiling_within(
    host: &KPartiteHypergraph,
    pattern: &PatternGraph,
    omega: f64,
    allowed: Option<&[u32]>,
) -> Result<TilingReport> {
    let n = host.n_vertices();
    let mut free = vec![false; n];
    match allowed {
        Some(vs) => {
            for &v in vs {
                if v as usize >= n {
                    return Err(Error::OutOfRange(v, n));
                }
                free[v as usize] = true;
            }
        }
        None => free.fill(true),
    }
    let mut free_per_part: Vec<usize> = (0..host.k())
        .map(|j| host.part_range(j).filter(|&v| free[v as usize]).count())
        .collect();
    let targets: Vec<f64> = free_per_part.iter().map(|&c| omega * c as f64).collect();

    let mut embeddings = Vec::new();
    let reason = loop {
        if free_per_part
            .iter()
            .zip(&targets)
            .all(|(&left, &t)| (left as f64) <= t + 1e-9)
        {
            break StopReason::CoveredAll;
        }
        let opts = SearchOptions {
            allowed: Some(&free),
            ..Default::default()
        };
        match embed::first_embedding(host, pattern, &opts)? {
            Some(emb) => {
                for &v in &emb.0 {
                    free[v as usize] = false;
                    free_per_part[host.part_of(v)] -= 1;
                }
                embeddings.push(emb);
            }
            None => break StopReason::NoCopyInRemainder,
        }
    };
    let leftover_vertices: Vec<u32> = (0..n as u32).filter(|&v| free[v as usize]).collect();
    Ok(TilingReport {
        tiling: Tiling::from_embeddings(embeddings),
        leftover_per_part: free_per_part,
        leftover_vertices,
        stopped_reason: reason,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SupersaturationReport {
    pub edge_count: u64,
    pub edge_threshold: f64,
    pub labelled_copies: u64,
    pub unlabelled_copies: u64,
    /// labelled / N^f
    pub eta: f64,
    /// Edge count met the threshold yet no copy exists.
    pub flagged: bool,
}

/// Compare the host's edge count against p' * N^k and report the realized
/// copy density.
pub fn supersaturation_report(
    host: &KPartiteHypergraph,
    pattern: &PatternGraph,
    p_prime: f64,
) -> Result<SupersaturationReport> {
    let census = enumerate_embeddings(host, pattern, None, Some(0))?;
    let n = host.n_vertices() as f64;
    let edge_threshold = p_prime * n.powi(host.k() as i32);
    let flagged = (host.edge_count() as f64) >= edge_threshold && census.labelled == 0;
    Ok(SupersaturationReport {
        edge_count: host.edge_count() as u64,
        edge_threshold,
        labelled_copies: census.labelled,
        unlabelled_copies: census.unlabelled,
        eta: census.labelled as f64 / n.powi(pattern.f() as i32),
        flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{complete_host, gen_construction_a, gen_iid, pattern_complete};

    #[test]
    fn enumerate_single_vertex_pattern() {
        let h = complete_host(3, 2);
        let f = pattern_complete(3, 1);
        let census = enumerate_embeddings(&h, &f, None, None).unwrap();
        assert_eq!(census.labelled, 8);
        assert_eq!(census.unlabelled, 8);
        assert_eq!(census.automorphisms, 1);
    }

    #[test]
    fn enumerate_full_pattern_in_itself() {
        let h = complete_host(3, 2);
        let f = pattern_complete(3, 2);
        let census = enumerate_embeddings(&h, &f, None, None).unwrap();
        assert_eq!(census.labelled, 8); // 2! * 2! * 2!
        assert_eq!(census.unlabelled, 1);
        assert_eq!(census.automorphisms, 8);
        assert_eq!(census.labelled_over_aut, 1);
    }

    #[test]
    fn enumerate_anchored() {
        let h = complete_host(3, 2);
        let f = pattern_complete(3, 1);
        let census = enumerate_embeddings(&h, &f, Some((0, 0)), None).unwrap();
        assert_eq!(census.labelled, 4);
    }

    #[test]
    fn brute_force_labelled_count_agrees() {
        // independent oracle: try all injective part-respecting assignments
        let h = gen_iid(3, 2, 0.7, 42).unwrap();
        let f = pattern_complete(3, 2);
        let mut brute = 0u64;
        let perms2 = [[0u32, 1u32], [1u32, 0u32]];
        for pa in perms2 {
            for pb in perms2 {
                for pc in perms2 {
                    let asg = [pa[0], pa[1], 2 + pb[0], 2 + pb[1], 4 + pc[0], 4 + pc[1]];
                    let ok = f.as_host().edges().all(|pe| {
                        let mut img: Vec<u32> =
                            pe.iter().map(|&pv| asg[pv as usize]).collect();
                        img.sort_unstable();
                        h.is_edge(&img)
                    });
                    if ok {
                        brute += 1;
                    }
                }
            }
        }
        let census = enumerate_embeddings(&h, &f, None, None).unwrap();
        assert_eq!(census.labelled, brute);
    }

    #[test]
    fn copies_containing_counts() {
        let h = complete_host(3, 2);
        let f1 = pattern_complete(3, 1);
        for v in 0..6 {
            assert_eq!(copies_containing(&h, &f1, v).unwrap(), 4);
        }
        let f2 = pattern_complete(3, 2);
        for v in 0..6 {
            assert_eq!(copies_containing(&h, &f2, v).unwrap(), 1);
        }
        let empty = KPartiteHypergraph::new(3, vec![2, 2, 2], vec![]).unwrap();
        assert_eq!(copies_containing(&empty, &f1, 0).unwrap(), 0);
    }

    #[test]
    fn copies_sum_identity() {
        // sum over v of copies through v = f * number of copies
        let h = gen_iid(3, 3, 0.6, 5).unwrap();
        for f in [pattern_complete(3, 1), pattern_complete(3, 2)] {
            let copies = collect_copies(&h, &f, None).unwrap();
            let total: u64 = (0..h.n_vertices() as u32)
                .map(|v| copies_containing(&h, &f, v).unwrap())
                .sum();
            assert_eq!(total, copies.len() as u64 * f.f() as u64);
        }
    }

    #[test]
    fn factor_on_complete_host() {
        let h = complete_host(3, 4);
        let f = pattern_complete(3, 1);
        let FactorOutcome::Found(t) = exact_factor(&h, &f, None).unwrap() else {
            panic!("expected factor")
        };
        assert_eq!(t.embeddings.len(), 4);
        assert!(t.is_perfect(&h));
    }

    #[test]
    fn factor_of_host_with_itself() {
        let h = complete_host(3, 2);
        let f = pattern_complete(3, 2);
        let FactorOutcome::Found(t) = exact_factor(&h, &f, None).unwrap() else {
            panic!("expected factor")
        };
        assert_eq!(t.embeddings.len(), 1);
    }

    #[test]
    fn construction_a_has_no_factor() {
        let (h, _) = gen_construction_a(3, 6, 2, 0).unwrap();
        let f = pattern_complete(3, 2);
        assert!(matches!(
            exact_factor(&h, &f, None).unwrap(),
            FactorOutcome::None
        ));
    }

    #[test]
    fn divisibility_short_circuit() {
        let h = complete_host(3, 3);
        let f = pattern_complete(3, 2);
        assert!(matches!(
            exact_factor(&h, &f, None).unwrap(),
            FactorOutcome::None
        ));
    }

    #[test]
    fn greedy_covers_complete_host() {
        let h = complete_host(3, 4);
        let f = pattern_complete(3, 1);
        let rep = greedy_tiling(&h, &f, 0.0, 0).unwrap();
        assert_eq!(rep.leftover_per_part, vec![0, 0, 0]);
        assert_eq!(rep.stopped_reason, StopReason::CoveredAll);
        rep.tiling.validate(&h, &f).unwrap();
    }

    #[test]
    fn greedy_on_edgeless_host() {
        let h = KPartiteHypergraph::new(3, vec![3, 3, 3], vec![]).unwrap();
        let f = pattern_complete(3, 1);
        let rep = greedy_tiling(&h, &f, 0.0, 0).unwrap();
        assert_eq!(rep.leftover_per_part, vec![3, 3, 3]);
        assert_eq!(rep.stopped_reason, StopReason::NoCopyInRemainder);
    }

    #[test]
    fn greedy_no_copy_leftover_is_copy_free() {
        let h = gen_iid(3, 6, 0.3, 17).unwrap();
        let f = pattern_complete(3, 2);
        let rep = greedy_tiling(&h, &f, 0.0, 0).unwrap();
        if rep.stopped_reason == StopReason::NoCopyInRemainder {
            let ind = h.induced(&rep.leftover_vertices);
            if let Ok(ind) = ind {
                let census = enumerate_embeddings(&ind.graph, &f, None, Some(0)).unwrap();
                assert_eq!(census.labelled, 0);
            }
        }
    }

    #[test]
    fn supersaturation_on_small_hosts() {
        let h = complete_host(3, 2);
        let f = pattern_complete(3, 1);
        let rep = supersaturation_report(&h, &f, 0.01).unwrap();
        assert_eq!(rep.labelled_copies, 8);
        assert!((rep.eta - 8.0 / 216.0).abs() < 1e-12);
        assert!(!rep.flagged);

        let single = KPartiteHypergraph::new(3, vec![1, 1, 1], vec![vec![0, 1, 2]]).unwrap();
        let rep = supersaturation_report(&single, &f, 0.01).unwrap();
        assert_eq!(rep.labelled_copies, 1);
        assert!((rep.eta - 1.0 / 27.0).abs() < 1e-12);

        let empty = KPartiteHypergraph::new(3, vec![2, 2, 2], vec![]).unwrap();
        let rep = supersaturation_report(&empty, &f, 0.5).unwrap();
        assert_eq!(rep.labelled_copies, 0);
        assert!(!rep.flagged); // edge bound already fails
    }

    #[test]
    fn copy_count_monotone_under_edges() {
        let sparse = gen_iid(3, 3, 0.3, 2).unwrap();
        let mut edges: Vec<Vec<u32>> = sparse.edges().map(|e| e.to_vec()).collect();
        // add every missing legal triple one part denser
        for a in 0..3u32 {
            for b in 3..6u32 {
                let e = vec![a, b, 6];
                if !sparse.is_edge(&e) {
                    edges.push(e);
                    break;
                }
            }
        }
        let denser = KPartiteHypergraph::new(3, vec![3, 3, 3], edges).unwrap();
        let f = pattern_complete(3, 1);
        let a = enumerate_embeddings(&sparse, &f, None, Some(0)).unwrap().labelled;
        let b = enumerate_embeddings(&denser, &f, None, Some(0)).unwrap().labelled;
        assert!(b >= a);
    }
}
