//! Reachability counting, closed-set pruning, robust index vectors with
//! lattice membership, absorbing families and the staged perfect-tiling
//! pipeline (absorb + greedy + complete, with an exact fallback).

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::embed::{self, Flow, SearchOptions};
use crate::error::{Error, Result};
use crate::hypergraph::{Embedding, KPartiteHypergraph, PatternGraph, Tiling};
use crate::lattice::Lattice;
use crate::partition::{IndexVector, RefinedPartition};
use crate::rng::StreamRng;
use crate::tiling::{exact_factor, greedy_tiling_within, collect_copies, FactorOutcome, StopReason};

/// Candidate cap above which family selection samples ranks instead of
/// enumerating every balanced a-set.
const FAMILY_ENUM_CAP: u128 = 1 << 22;
/// Balanced target sets probed when recording the absorption map.
const PROBE_COUNT: usize = 8;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct AbsorptionParams {
    /// Reachability density threshold.
    pub beta: f64,
    /// Reachability iteration parameter; exact counting supports i = 1.
    pub i: usize,
    /// Neighborhood fraction for the pruning loop.
    pub delta: f64,
    /// Cover density.
    pub eta: f64,
    /// Robust-vector threshold.
    pub lambda: f64,
    /// Absorbing-set size fractions.
    pub gamma: f64,
    pub gamma_prime: f64,
    /// Absorber size; 0 derives i0_prime * km * (km - 1).
    pub a: usize,
    pub i0_prime: usize,
    pub beta0_prime: f64,
    /// Per-absorber density; 0 derives (eta/2) * (beta0_prime/2)^(km-1).
    pub eta1: f64,
    /// Minimum block fraction.
    pub zeta: f64,
    /// Codegree fraction.
    pub alpha: f64,
    /// Denseness margin.
    pub epsilon: f64,
    /// Rescales the vanishing selection probability so desk-scale runs draw a
    /// nonempty family.
    pub family_multiplier: f64,
}

impl Default for AbsorptionParams {
    fn default() -> Self {
        AbsorptionParams {
            beta: 1e-6,
            i: 1,
            delta: 0.05,
            eta: 1e-4,
            lambda: 1e-7,
            gamma: 0.5,
            gamma_prime: 0.5,
            a: 0,
            i0_prime: 1,
            beta0_prime: 1e-6,
            eta1: 0.0,
            zeta: 0.05,
            alpha: 0.05,
            epsilon: 0.05,
            family_multiplier: 1.0,
        }
    }
}

impl AbsorptionParams {
    pub fn resolved_a(&self, pattern: &PatternGraph) -> usize {
        if self.a > 0 {
            self.a
        } else {
            let km = pattern.f();
            self.i0_prime * km * (km - 1)
        }
    }

    pub fn resolved_eta1(&self, pattern: &PatternGraph) -> f64 {
        if self.eta1 > 0.0 {
            self.eta1
        } else {
            let km = pattern.f() as i32;
            (self.eta / 2.0) * (self.beta0_prime / 2.0).powi(km - 1)
        }
    }

    /// Defaults with the selection probability rescaled so the expected
    /// family size is about `target_family` on this host.
    pub fn desk_scale(
        host: &KPartiteHypergraph,
        pattern: &PatternGraph,
        target_family: usize,
    ) -> Self {
        let mut p = AbsorptionParams::default();
        let a = p.resolved_a(pattern);
        let eta1 = p.resolved_eta1(pattern);
        let n = host.n_vertices() as f64;
        let raw = eta1 * n.powi(1 - a as i32) / (8.0 * a as f64);
        let total = family_candidate_total(host, a).unwrap_or(0) as f64;
        if raw > 0.0 && total > 0.0 {
            p.family_multiplier = target_family as f64 / (raw * total);
        }
        p
    }
}

fn km_mask_guard(h: &KPartiteHypergraph) -> Result<()> {
    if h.n_vertices() > 128 {
        return Err(Error::TooLarge {
            needed: h.n_vertices() as u128,
            cap: 128,
        });
    }
    Ok(())
}

/// Extension sets of an anchored vertex: for every copy through `v`, the
/// copy's image minus `v`, as a vertex mask.
fn extension_masks(
    h: &KPartiteHypergraph,
    f: &PatternGraph,
    v: u32,
    exclude: u32,
) -> Result<HashSet<u128>> {
    let p = f.as_host();
    let part = h.part_of(v);
    let mut out = HashSet::new();
    for pv in p.part_range(part) {
        let opts = SearchOptions {
            anchor: Some((pv, v)),
            ..Default::default()
        };
        embed::for_each_embedding(h, f, &opts, |asg| {
            let mut mask = 0u128;
            let mut hit_excluded = false;
            for &hv in asg {
                if hv == exclude {
                    hit_excluded = true;
                    break;
                }
                mask |= 1u128 << hv;
            }
            if !hit_excluded {
                out.insert(mask & !(1u128 << v));
            }
            Flow::Continue
        })?;
    }
    Ok(out)
}

/// Exact number of (km-1)-sets W, disjoint from {u, v}, such that both
/// {u} u W and {v} u W span copies of the pattern.
pub fn common_extension_count(
    h: &KPartiteHypergraph,
    f: &PatternGraph,
    u: u32,
    v: u32,
) -> Result<u64> {
    if u == v || h.part_of(u) != h.part_of(v) {
        return Err(Error::NotSamePart(u, v));
    }
    km_mask_guard(h)?;
    let cu = extension_masks(h, f, u, v)?;
    let cv = extension_masks(h, f, v, u)?;
    Ok(cu.intersection(&cv).count() as u64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReachVerdict {
    Yes,
    No,
    Inconclusive {
        estimate: f64,
        ci_low: f64,
        ci_high: f64,
    },
}

#[derive(Clone, Copy, Debug)]
pub enum ReachMode {
    /// Exact counting; only i = 1.
    Exact,
    /// Monte Carlo estimate of the density of reachable (i*km - 1)-sets.
    Sampled { i: usize, trials: u64, seed: u64 },
}

pub fn is_reachable(
    h: &KPartiteHypergraph,
    f: &PatternGraph,
    u: u32,
    v: u32,
    beta: f64,
    mode: ReachMode,
) -> Result<ReachVerdict> {
    if u == v || h.part_of(u) != h.part_of(v) {
        return Err(Error::NotSamePart(u, v));
    }
    let n = h.n_vertices() as f64;
    let km = f.f();
    match mode {
        ReachMode::Exact => {
            let count = common_extension_count(h, f, u, v)? as f64;
            let threshold = beta * n.powi(km as i32 - 1);
            Ok(if count >= threshold {
                ReachVerdict::Yes
            } else {
                ReachVerdict::No
            })
        }
        ReachMode::Sampled { i, trials, seed } => {
            if i < 2 {
                return Err(Error::ModeUnsupported(
                    "sampled reachability is for i >= 2; use exact mode for i = 1".into(),
                ));
            }
            if trials == 0 {
                return Err(Error::ModeUnsupported("zero trials".into()));
            }
            let w_len = i * km - 1;
            let pool: Vec<u32> = (0..h.n_vertices() as u32)
                .filter(|&x| x != u && x != v)
                .collect();
            if pool.len() < w_len {
                return Ok(ReachVerdict::No);
            }
            let rng = StreamRng::new(seed, "reach.sample");
            let mut hits = 0u64;
            for t in 0..trials {
                let trial_rng = rng.derive(t);
                let w = sample_subset(&pool, w_len, &trial_rng);
                if absorbs_single(h, f, u, &w)? && absorbs_single(h, f, v, &w)? {
                    hits += 1;
                }
            }
            let p_hat = hits as f64 / trials as f64;
            let half = 1.96 * (p_hat * (1.0 - p_hat) / trials as f64).sqrt();
            // scale the sampled fraction of subsets to a raw set count
            let total_sets = binom(pool.len(), w_len) as f64;
            let estimate = p_hat * total_sets;
            let ci_low = (p_hat - half).max(0.0) * total_sets;
            let ci_high = (p_hat + half).min(1.0) * total_sets;
            let threshold = beta * n.powi((i * km) as i32 - 1);
            Ok(if ci_low >= threshold {
                ReachVerdict::Yes
            } else if ci_high < threshold {
                ReachVerdict::No
            } else {
                ReachVerdict::Inconclusive {
                    estimate,
                    ci_low,
                    ci_high,
                }
            })
        }
    }
}

fn absorbs_single(
    h: &KPartiteHypergraph,
    f: &PatternGraph,
    anchor: u32,
    w: &[u32],
) -> Result<bool> {
    let mut verts = w.to_vec();
    verts.push(anchor);
    verts.sort_unstable();
    verts.dedup();
    if verts.len() != w.len() + 1 {
        return Ok(false);
    }
    let Ok(ind) = h.induced(&verts) else {
        return Ok(false);
    };
    Ok(matches!(
        exact_factor(&ind.graph, f, None)?,
        FactorOutcome::Found(_)
    ))
}

/// Uniform `len`-subset of `pool` by partial Fisher-Yates.
fn sample_subset(pool: &[u32], len: usize, rng: &StreamRng) -> Vec<u32> {
    let mut scratch: Vec<u32> = pool.to_vec();
    let mut out = Vec::with_capacity(len);
    for step in 0..len {
        let j = step + rng.below_at(step as u64, (scratch.len() - step) as u64) as usize;
        scratch.swap(step, j);
        out.push(scratch[step]);
    }
    out
}

/// Exact all-pairs reachability counts (i = 1), built from one pass over the
/// distinct copies.
pub struct ReachabilityMap {
    pub threshold: f64,
    part_offsets: Vec<u32>,
    part_sizes: Vec<usize>,
    /// per part, an n_j x n_j count matrix in local coordinates
    counts: Vec<Vec<u64>>,
}

impl ReachabilityMap {
    pub fn build(
        h: &KPartiteHypergraph,
        f: &PatternGraph,
        beta: f64,
        budget: Option<u64>,
    ) -> Result<Self> {
        km_mask_guard(h)?;
        let copies = collect_copies(h, f, budget)?;
        let mut pairs: Vec<(u128, u32)> = Vec::with_capacity(copies.len() * f.f());
        for c in &copies {
            let mask = c.iter().fold(0u128, |m, &v| m | 1u128 << v);
            for &v in c {
                pairs.push((mask & !(1u128 << v), v));
            }
        }
        pairs.sort_unstable();
        let part_sizes = h.part_sizes().to_vec();
        let mut counts: Vec<Vec<u64>> = part_sizes.iter().map(|&s| vec![0u64; s * s]).collect();
        let mut start = 0;
        while start < pairs.len() {
            let mut end = start + 1;
            while end < pairs.len() && pairs[end].0 == pairs[start].0 {
                end += 1;
            }
            for a in start..end {
                for b in a + 1..end {
                    let (u, v) = (pairs[a].1, pairs[b].1);
                    let (pu, pv) = (h.part_of(u), h.part_of(v));
                    if pu == pv {
                        let (lu, lv) = (h.local_id(u), h.local_id(v));
                        counts[pu][lu * part_sizes[pu] + lv] += 1;
                        counts[pu][lv * part_sizes[pu] + lu] += 1;
                    }
                }
            }
            start = end;
        }
        let n = h.n_vertices() as f64;
        let threshold = beta * n.powi(f.f() as i32 - 1);
        Ok(ReachabilityMap {
            threshold,
            part_offsets: (0..h.k()).map(|j| h.part_start(j)).collect(),
            part_sizes,
            counts,
        })
    }

    pub fn count(&self, part: usize, u: u32, v: u32) -> u64 {
        let lu = (u - self.part_offsets[part]) as usize;
        let lv = (v - self.part_offsets[part]) as usize;
        self.counts[part][lu * self.part_sizes[part] + lv]
    }

    pub fn reachable(&self, part: usize, u: u32, v: u32) -> bool {
        u != v && self.count(part, u, v) as f64 >= self.threshold
    }

    /// Same-part vertices reachable to v, within `universe`.
    pub fn neighborhood(&self, part: usize, v: u32, universe: &[u32]) -> Vec<u32> {
        universe
            .iter()
            .copied()
            .filter(|&u| u != v && self.reachable(part, u, v))
            .collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RemovalStep {
    pub pivot: u32,
    pub removed: Vec<u32>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PrunedPart {
    pub kept: Vec<u32>,
    pub trace: Vec<RemovalStep>,
}

/// Deletion loop: while some vertex of the current set has fewer than
/// delta * N reachable partners inside it, remove the vertex together with
/// its reachable neighborhood. Returns the surviving set and the trace.
pub fn prune_closed_candidates(
    h: &KPartiteHypergraph,
    f: &PatternGraph,
    params: &AbsorptionParams,
    budget: Option<u64>,
) -> Result<Vec<PrunedPart>> {
    let map = ReachabilityMap::build(h, f, params.beta, budget)?;
    prune_with_map(h, &map, params)
}

fn prune_with_map(
    h: &KPartiteHypergraph,
    map: &ReachabilityMap,
    params: &AbsorptionParams,
) -> Result<Vec<PrunedPart>> {
    let need = params.delta * h.n_vertices() as f64;
    let mut out = Vec::with_capacity(h.k());
    for part in 0..h.k() {
        let mut current: Vec<u32> = h.part_range(part).collect();
        let mut trace = Vec::new();
        loop {
            let mut pivot = None;
            for &v in &current {
                let nbrs = map.neighborhood(part, v, &current);
                if (nbrs.len() as f64) < need {
                    pivot = Some((v, nbrs));
                    break;
                }
            }
            let Some((v, nbrs)) = pivot else { break };
            let mut removed = nbrs;
            removed.push(v);
            removed.sort_unstable();
            current.retain(|x| !removed.contains(x));
            trace.push(RemovalStep { pivot: v, removed });
        }
        for &v in &current {
            debug_assert!(map.neighborhood(part, v, &current).len() as f64 >= need);
        }
        out.push(PrunedPart {
            kept: current,
            trace,
        });
    }
    Ok(out)
}

/// Components of the reachability graph restricted to `kept`, keeping those
/// of size at least (delta - beta) * N; smaller components are dropped to the
/// exceptional block.
pub fn partition_closed(
    h: &KPartiteHypergraph,
    part: usize,
    kept: &[u32],
    map: &ReachabilityMap,
    params: &AbsorptionParams,
) -> (Vec<Vec<u32>>, Vec<u32>) {
    let mut comp_of: Vec<usize> = (0..kept.len()).collect();
    fn find(c: &mut [usize], mut x: usize) -> usize {
        while c[x] != x {
            c[x] = c[c[x]];
            x = c[x];
        }
        x
    }
    for a in 0..kept.len() {
        for b in a + 1..kept.len() {
            if map.reachable(part, kept[a], kept[b]) {
                let (ra, rb) = (find(&mut comp_of, a), find(&mut comp_of, b));
                if ra != rb {
                    comp_of[ra] = rb;
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<u32>> = Default::default();
    for i in 0..kept.len() {
        groups.entry(find(&mut comp_of, i)).or_default().push(kept[i]);
    }
    let min_size = (params.delta - params.beta) * h.n_vertices() as f64;
    let mut blocks: Vec<Vec<u32>> = Vec::new();
    let mut dropped = Vec::new();
    let mut sorted: Vec<Vec<u32>> = groups.into_values().collect();
    sorted.sort_by_key(|b| b[0]);
    for b in sorted {
        if b.len() as f64 >= min_size {
            blocks.push(b);
        } else {
            dropped.extend(b);
        }
    }
    dropped.sort_unstable();
    (blocks, dropped)
}

/// Prune every part, split the survivors into reachability components, and
/// assemble the refined partition whose exceptional blocks hold everything
/// else.
pub fn closed_partition(
    h: &KPartiteHypergraph,
    f: &PatternGraph,
    params: &AbsorptionParams,
    budget: Option<u64>,
) -> Result<(RefinedPartition, Vec<PrunedPart>)> {
    let map = ReachabilityMap::build(h, f, params.beta, budget)?;
    let pruned = prune_with_map(h, &map, params)?;
    let mut per_part = Vec::with_capacity(h.k());
    for (part, pp) in pruned.iter().enumerate() {
        let (blocks, _dropped) = partition_closed(h, part, &pp.kept, &map, params);
        per_part.push(blocks);
    }
    let partition = RefinedPartition::new(h, per_part)?;
    Ok((partition, pruned))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RobustVectorsReport {
    /// Vectors realized by at least lambda * N^f copies, sorted.
    pub vectors: Vec<IndexVector>,
    /// Every realized f-vector with its copy count, sorted by vector.
    pub buckets: Vec<(IndexVector, u64)>,
    pub copies_seen: u64,
    pub threshold: f64,
}

/// Bucket all distinct copies by index vector and keep the vectors hit at
/// least lambda * N^f times. Copies touching an exceptional block are not
/// f-vectors and are skipped.
pub fn robust_vectors(
    h: &KPartiteHypergraph,
    f: &PatternGraph,
    partition: &RefinedPartition,
    lambda: f64,
    budget: Option<u64>,
) -> Result<RobustVectorsReport> {
    let copies = collect_copies(h, f, budget)?;
    let mut buckets: std::collections::BTreeMap<IndexVector, u64> = Default::default();
    for c in &copies {
        match partition.index_vector(c) {
            Ok(iv) => *buckets.entry(iv).or_insert(0) += 1,
            Err(Error::UnhousedVertex(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    let threshold = lambda * (h.n_vertices() as f64).powi(f.f() as i32);
    let vectors: Vec<IndexVector> = buckets
        .iter()
        .filter(|(_, &c)| c as f64 >= threshold)
        .map(|(v, _)| v.clone())
        .collect();
    Ok(RobustVectorsReport {
        vectors,
        buckets: buckets.into_iter().collect(),
        copies_seen: copies.len() as u64,
        threshold,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransferralPair {
    pub part: usize,
    pub block_a: usize,
    pub block_b: usize,
    pub in_lattice: bool,
    pub coefficients: Option<Vec<i64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransferralReport {
    pub pairs: Vec<TransferralPair>,
    pub pass: bool,
    pub robust_vector_count: usize,
}

/// For every same-part pair of blocks, test whether the difference of their
/// unit vectors lies in the lattice generated by the robust vectors.
pub fn transferral_check(
    h: &KPartiteHypergraph,
    f: &PatternGraph,
    partition: &RefinedPartition,
    lambda: f64,
    budget: Option<u64>,
) -> Result<TransferralReport> {
    let robust = robust_vectors(h, f, partition, lambda, budget)?;
    let lattice = Lattice::from_generators(partition.r(), robust.vectors.clone())?;
    let mut pairs = Vec::new();
    let mut pass = true;
    for part in 0..h.k() {
        let blocks = partition.blocks_of_part(part);
        for x in 0..blocks.len() {
            for y in x + 1..blocks.len() {
                let diff = partition
                    .unit_vector(blocks[x])
                    .sub(&partition.unit_vector(blocks[y]))?;
                let witness = lattice.contains(&diff)?;
                let ok = witness.is_some();
                pass &= ok;
                pairs.push(TransferralPair {
                    part,
                    block_a: blocks[x],
                    block_b: blocks[y],
                    in_lattice: ok,
                    coefficients: witness,
                });
            }
        }
    }
    if robust.vectors.is_empty() && pairs.is_empty() {
        // nothing robust and nothing to transfer: report failure rather than
        // a vacuous pass
        pass = false;
    }
    Ok(TransferralReport {
        pairs,
        pass,
        robust_vector_count: robust.vectors.len(),
    })
}

fn binom(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Lexicographic unranking of an r-subset of 0..n.
fn unrank_combination(n: usize, r: usize, mut rank: u128) -> Vec<usize> {
    let mut out = Vec::with_capacity(r);
    let mut next = 0usize;
    let mut remaining = r;
    while remaining > 0 {
        let with_next = binom(n - next - 1, remaining - 1);
        if rank < with_next {
            out.push(next);
            remaining -= 1;
        } else {
            rank -= with_next;
        }
        next += 1;
    }
    out
}

fn family_candidate_total(h: &KPartiteHypergraph, a: usize) -> Option<u128> {
    if a == 0 || a % h.k() != 0 {
        return None;
    }
    let per_part = a / h.k();
    let mut total: u128 = 1;
    for &s in h.part_sizes() {
        total = total.checked_mul(binom(s, per_part))?;
    }
    Some(total)
}

/// Decode a candidate rank into a balanced a-set (global ids, sorted).
fn unrank_balanced_set(h: &KPartiteHypergraph, per_part: usize, mut rank: u128) -> Vec<u32> {
    let k = h.k();
    let mut out = Vec::with_capacity(per_part * k);
    for part in (0..k).rev() {
        let s = h.part_sizes()[part];
        let c = binom(s, per_part);
        let local_rank = rank % c;
        rank /= c;
        let start = h.part_start(part);
        for l in unrank_combination(s, per_part, local_rank) {
            out.push(start + l as u32);
        }
    }
    out.sort_unstable();
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SetSearchMode {
    Enumerated,
    Sampled,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AbsorbingSetsReport {
    /// Verified absorbing a-sets (possibly truncated in sampled mode).
    pub verified: Vec<Vec<u32>>,
    pub tried: u64,
    pub mode: SetSearchMode,
    /// Exact count when enumerated, scaled estimate when sampled.
    pub count_estimate: f64,
    /// count_estimate / N^a.
    pub density: f64,
}

/// Enumerate or sample balanced a-sets disjoint from `s` and validate each by
/// the exact solver on H[A] and H[A u S].
pub fn absorbing_sets(
    h: &KPartiteHypergraph,
    f: &PatternGraph,
    s: &[u32],
    a: usize,
    budget: u64,
    seed: u64,
) -> Result<AbsorbingSetsReport> {
    let k = h.k();
    if a == 0 || a % k != 0 {
        return Err(Error::BadPartition(format!(
            "absorber size {a} is not divisible by k={k}"
        )));
    }
    let per_part = a / k;
    let m = f.f() / k;
    let mut s_sorted = s.to_vec();
    s_sorted.sort_unstable();
    for part in 0..k {
        let in_part = s_sorted.iter().filter(|&&v| h.part_of(v) == part).count();
        if in_part != m {
            return Err(Error::BadPartition(format!(
                "target set is not balanced: part {part} holds {in_part}, expected {m}"
            )));
        }
    }
    // candidates live in the complement of s
    let avail: Vec<Vec<u32>> = (0..k)
        .map(|j| {
            h.part_range(j)
                .filter(|v| !s_sorted.contains(v))
                .collect()
        })
        .collect();
    let total: u128 = avail
        .iter()
        .map(|av| binom(av.len(), per_part))
        .product();
    if total == 0 {
        return Ok(AbsorbingSetsReport {
            verified: Vec::new(),
            tried: 0,
            mode: SetSearchMode::Enumerated,
            count_estimate: 0.0,
            density: 0.0,
        });
    }

    let decode = |rank: u128| -> Vec<u32> {
        let mut out = Vec::with_capacity(a);
        let mut r = rank;
        for part in (0..k).rev() {
            let c = binom(avail[part].len(), per_part);
            let local = r % c;
            r /= c;
            for l in unrank_combination(avail[part].len(), per_part, local) {
                out.push(avail[part][l]);
            }
        }
        out.sort_unstable();
        out
    };

    let check = |cand: &[u32]| -> Result<bool> {
        let ind = h.induced(cand)?;
        if !matches!(exact_factor(&ind.graph, f, None)?, FactorOutcome::Found(_)) {
            return Ok(false);
        }
        let mut joint = cand.to_vec();
        joint.extend_from_slice(&s_sorted);
        joint.sort_unstable();
        let ind = h.induced(&joint)?;
        Ok(matches!(
            exact_factor(&ind.graph, f, None)?,
            FactorOutcome::Found(_)
        ))
    };

    let n = h.n_vertices() as f64;
    if total <= u128::from(budget) {
        let mut verified = Vec::new();
        for rank in 0..total {
            let cand = decode(rank);
            if check(&cand)? {
                verified.push(cand);
            }
        }
        let count = verified.len() as f64;
        Ok(AbsorbingSetsReport {
            tried: total as u64,
            mode: SetSearchMode::Enumerated,
            count_estimate: count,
            density: count / n.powi(a as i32),
            verified,
        })
    } else {
        let rng = StreamRng::new(seed, "absorbing.sets");
        let mut verified = Vec::new();
        let mut hits = 0u64;
        for t in 0..budget {
            let hi = u128::from(rng.u64_at(2 * t));
            let lo = u128::from(rng.u64_at(2 * t + 1));
            let rank = ((hi << 64) | lo) % total;
            let cand = decode(rank);
            if check(&cand)? {
                hits += 1;
                if verified.len() < 64 {
                    verified.push(cand);
                }
            }
        }
        let count_estimate = hits as f64 / budget as f64 * total as f64;
        Ok(AbsorbingSetsReport {
            verified,
            tried: budget,
            mode: SetSearchMode::Sampled,
            count_estimate,
            density: count_estimate / n.powi(a as i32),
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AbsorberSet {
    pub vertices: Vec<u32>,
    /// Verified factor of H[vertices], in host coordinates.
    pub factor: Tiling,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AbsorbingFamily {
    pub members: Vec<AbsorberSet>,
    /// Copies covering the exceptional vertices (the second greedy stage).
    pub cover_copies: Vec<Embedding>,
    /// Exceptional vertices no copy could cover.
    pub uncovered_exceptional: Vec<u32>,
    /// Union of member sets and cover copies, sorted.
    pub w: Vec<u32>,
    /// Probed balanced target sets and how many members absorb each.
    pub absorbed_targets: Vec<(Vec<u32>, usize)>,
    pub too_small: bool,
    pub selection_probability: f64,
    pub candidates_total: f64,
}

/// Random family selection with probability
/// family_multiplier * eta1 * N^(1-a) / (8a), pruned to disjoint members with
/// a verified factor, then greedy copies over the exceptional vertices.
pub fn build_absorbing_family(
    h: &KPartiteHypergraph,
    f: &PatternGraph,
    params: &AbsorptionParams,
    exceptional: &[Vec<u32>],
    seed: u64,
) -> Result<AbsorbingFamily> {
    let k = h.k();
    if exceptional.len() != k {
        return Err(Error::BadPartition(
            "one exceptional set per part expected".into(),
        ));
    }
    let a = params.resolved_a(f);
    if a % k != 0 {
        return Err(Error::BadPartition(format!(
            "absorber size {a} is not divisible by k={k}"
        )));
    }
    let per_part = a / k;
    let n = h.n_vertices() as f64;
    let eta1 = params.resolved_eta1(f);
    let p = (params.family_multiplier * eta1 * n.powi(1 - a as i32) / (8.0 * a as f64))
        .clamp(0.0, 1.0);
    let total = family_candidate_total(h, a).unwrap_or(0);
    let fits = per_part <= *h.part_sizes().iter().min().unwrap();

    let rng = StreamRng::new(seed, "family.select");
    let mut selected: Vec<Vec<u32>> = Vec::new();
    if p > 0.0 && total > 0 && fits {
        if total <= FAMILY_ENUM_CAP {
            for rank in 0..total {
                if rng.bernoulli_at(rank as u64, p) {
                    selected.push(unrank_balanced_set(h, per_part, rank));
                }
            }
        } else {
            let want = (p * total as f64).round().min(4096.0) as u64;
            let mut ranks: Vec<u128> = (0..want)
                .map(|t| {
                    let hi = u128::from(rng.u64_at(2 * t));
                    let lo = u128::from(rng.u64_at(2 * t + 1));
                    ((hi << 64) | lo) % total
                })
                .collect();
            ranks.sort_unstable();
            ranks.dedup();
            for rank in ranks {
                selected.push(unrank_balanced_set(h, per_part, rank));
            }
        }
    }

    // keep candidates whose induced host has a verified factor
    let mut members: Vec<AbsorberSet> = Vec::new();
    let mut used = vec![false; h.n_vertices()];
    'cand: for cand in selected {
        if cand.iter().any(|&v| used[v as usize]) {
            continue 'cand;
        }
        let ind = h.induced(&cand)?;
        let FactorOutcome::Found(local) = exact_factor(&ind.graph, f, None)? else {
            continue 'cand;
        };
        let factor = lift_tiling(&local, &ind.old_ids);
        for &v in &cand {
            used[v as usize] = true;
        }
        members.push(AbsorberSet {
            vertices: cand,
            factor,
        });
    }

    // greedy cover of the exceptional vertices, avoiding family vertices
    let mut cover_copies: Vec<Embedding> = Vec::new();
    let mut uncovered: Vec<u32> = Vec::new();
    let mut covered = used.clone();
    let mut exceptional_all: Vec<u32> = exceptional.iter().flatten().copied().collect();
    exceptional_all.sort_unstable();
    for &v in &exceptional_all {
        if covered[v as usize] {
            continue;
        }
        let allowed: Vec<bool> = (0..h.n_vertices())
            .map(|x| !covered[x] || x == v as usize)
            .collect();
        let part = h.part_of(v);
        let mut found = None;
        for pv in f.as_host().part_range(part) {
            let opts = SearchOptions {
                anchor: Some((pv, v)),
                allowed: Some(&allowed),
                ..Default::default()
            };
            if let Some(emb) = embed::first_embedding(h, f, &opts)? {
                found = Some(emb);
                break;
            }
        }
        match found {
            Some(emb) => {
                for &x in &emb.0 {
                    covered[x as usize] = true;
                }
                cover_copies.push(emb);
            }
            None => uncovered.push(v),
        }
    }

    let mut w: Vec<u32> = members
        .iter()
        .flat_map(|m| m.vertices.iter().copied())
        .chain(cover_copies.iter().flat_map(|e| e.0.iter().copied()))
        .collect();
    w.sort_unstable();

    // probe the absorption map on a few balanced target sets outside W
    let m = f.f() / k;
    let mut absorbed_targets = Vec::new();
    if !members.is_empty() {
        let in_w: HashSet<u32> = w.iter().copied().collect();
        let free: Vec<Vec<u32>> = (0..k)
            .map(|j| {
                h.part_range(j)
                    .filter(|v| !in_w.contains(v))
                    .collect::<Vec<u32>>()
            })
            .collect();
        if free.iter().all(|fp| fp.len() >= m) {
            let probe_rng = StreamRng::new(seed, "family.probe");
            for t in 0..PROBE_COUNT {
                let trial = probe_rng.derive(t as u64);
                let mut target = Vec::with_capacity(k * m);
                for fp in free.iter() {
                    target.extend(sample_subset(fp, m, &trial.derive(target.len() as u64)));
                }
                target.sort_unstable();
                target.dedup();
                if target.len() != k * m {
                    continue;
                }
                let mut count = 0usize;
                for mem in &members {
                    let mut joint = mem.vertices.clone();
                    joint.extend_from_slice(&target);
                    joint.sort_unstable();
                    let ind = h.induced(&joint)?;
                    if matches!(exact_factor(&ind.graph, f, None)?, FactorOutcome::Found(_)) {
                        count += 1;
                    }
                }
                absorbed_targets.push((target, count));
            }
            absorbed_targets.sort();
            absorbed_targets.dedup();
        }
    }

    let too_small = members.is_empty() || !uncovered.is_empty();
    Ok(AbsorbingFamily {
        members,
        cover_copies,
        uncovered_exceptional: uncovered,
        w,
        absorbed_targets,
        too_small,
        selection_probability: p,
        candidates_total: total as f64,
    })
}

fn lift_tiling(local: &Tiling, old_ids: &[u32]) -> Tiling {
    let embeddings = local
        .embeddings
        .iter()
        .map(|e| Embedding(e.0.iter().map(|&v| old_ids[v as usize]).collect()))
        .collect();
    Tiling::from_embeddings(embeddings)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PipelineStages {
    pub divisibility_ok: bool,
    pub pruned_per_part: Option<Vec<usize>>,
    pub blocks_per_part: Option<Vec<usize>>,
    pub transferral_pass: Option<bool>,
    pub family_members: Option<usize>,
    pub family_too_small: Option<bool>,
    pub w_size: Option<usize>,
    pub greedy_leftover: Option<Vec<usize>>,
    pub greedy_stop: Option<StopReason>,
    pub absorbed_sets: Option<usize>,
    pub fallback: Option<String>,
    pub derived_seeds: Vec<(String, u64)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PipelineRun {
    pub outcome: FactorOutcome,
    pub stages: PipelineStages,
}

/// Absorb-greedy-complete: build an absorbing family, tile the rest greedily,
/// absorb the leftover with stored members, and fall back to the exact solver
/// when any stage comes up short.
pub fn perfect_tiling_pipeline(
    h: &KPartiteHypergraph,
    f: &PatternGraph,
    params: &AbsorptionParams,
    seed: u64,
) -> Result<PipelineRun> {
    let k = h.k();
    let m = f.f() / k;
    let mut stages = PipelineStages {
        divisibility_ok: true,
        pruned_per_part: None,
        blocks_per_part: None,
        transferral_pass: None,
        family_members: None,
        family_too_small: None,
        w_size: None,
        greedy_leftover: None,
        greedy_stop: None,
        absorbed_sets: None,
        fallback: None,
        derived_seeds: Vec::new(),
    };
    for j in 0..k {
        if h.part_sizes()[j] % f.part_sizes()[j] != 0 {
            stages.divisibility_ok = false;
            return Ok(PipelineRun {
                outcome: FactorOutcome::None,
                stages,
            });
        }
    }

    // closure analysis feeds the exceptional sets and the stage report
    let (partition, pruned) = closed_partition(h, f, params, None)?;
    stages.pruned_per_part = Some(pruned.iter().map(|p| p.kept.len()).collect());
    stages.blocks_per_part = Some((0..k).map(|j| partition.blocks_of_part(j).len()).collect());
    match transferral_check(h, f, &partition, params.lambda, None) {
        Ok(rep) => stages.transferral_pass = Some(rep.pass),
        Err(Error::Budget(_)) => stages.transferral_pass = None,
        Err(e) => return Err(e),
    }

    let family_seed = StreamRng::new(seed, "pipeline").u64_at(0);
    stages.derived_seeds.push(("family".into(), family_seed));
    let exceptional: Vec<Vec<u32>> = (0..k).map(|j| partition.exceptional(j).to_vec()).collect();
    let family = build_absorbing_family(h, f, params, &exceptional, family_seed)?;
    stages.family_members = Some(family.members.len());
    stages.family_too_small = Some(family.too_small);
    stages.w_size = Some(family.w.len());

    let mut pieces: Vec<Embedding> = Vec::new();
    let mut greedy_tiles: Vec<Embedding> = Vec::new();
    let mut ok = family.uncovered_exceptional.is_empty();

    if ok {
        let in_w: HashSet<u32> = family.w.iter().copied().collect();
        let outside: Vec<u32> = (0..h.n_vertices() as u32)
            .filter(|v| !in_w.contains(v))
            .collect();
        let omega = params.gamma_prime / k as f64;
        let greedy = greedy_tiling_within(h, f, omega, Some(&outside))?;
        stages.greedy_leftover = Some(greedy.leftover_per_part.clone());
        stages.greedy_stop = Some(greedy.stopped_reason);
        greedy_tiles = greedy.tiling.embeddings.clone();

        let leftover = greedy.leftover_vertices.clone();
        let balanced = (0..k)
            .map(|j| leftover.iter().filter(|&&v| h.part_of(v) == j).count())
            .collect::<Vec<_>>();
        let absorbable =
            balanced.windows(2).all(|w| w[0] == w[1]) && balanced[0] % m == 0;
        if leftover.is_empty() {
            pieces.extend(family.members.iter().flat_map(|mem| mem.factor.embeddings.clone()));
            pieces.extend(family.cover_copies.clone());
            stages.absorbed_sets = Some(0);
        } else if absorbable {
            // split ascending into balanced km-sets and match family members
            let per_part: Vec<Vec<u32>> = (0..k)
                .map(|j| {
                    leftover
                        .iter()
                        .copied()
                        .filter(|&v| h.part_of(v) == j)
                        .collect()
                })
                .collect();
            let groups = balanced[0] / m;
            let mut used_member = vec![false; family.members.len()];
            let mut absorbed = 0usize;
            let mut absorb_pieces: Vec<Embedding> = Vec::new();
            'group: for g in 0..groups {
                let mut target: Vec<u32> = Vec::with_capacity(k * m);
                for pp in &per_part {
                    target.extend_from_slice(&pp[g * m..(g + 1) * m]);
                }
                target.sort_unstable();
                for (mi, mem) in family.members.iter().enumerate() {
                    if used_member[mi] {
                        continue;
                    }
                    let mut joint = mem.vertices.clone();
                    joint.extend_from_slice(&target);
                    joint.sort_unstable();
                    let ind = h.induced(&joint)?;
                    if let FactorOutcome::Found(local) = exact_factor(&ind.graph, f, None)? {
                        used_member[mi] = true;
                        absorbed += 1;
                        absorb_pieces.extend(lift_tiling(&local, &ind.old_ids).embeddings);
                        continue 'group;
                    }
                }
                ok = false;
                break 'group;
            }
            stages.absorbed_sets = Some(absorbed);
            if ok {
                pieces.extend(absorb_pieces);
                for (mi, mem) in family.members.iter().enumerate() {
                    if !used_member[mi] {
                        pieces.extend(mem.factor.embeddings.clone());
                    }
                }
                pieces.extend(family.cover_copies.clone());
            }
        } else {
            ok = false;
        }
    }

    if ok {
        let mut all = pieces;
        all.extend(greedy_tiles.clone());
        let tiling = Tiling::from_embeddings(all);
        tiling.validate(h, f)?;
        if tiling.is_perfect(h) {
            return Ok(PipelineRun {
                outcome: FactorOutcome::Found(tiling),
                stages,
            });
        }
        ok = false;
    }
    debug_assert!(!ok);

    // fallback 1: keep the greedy tiles, solve the rest exactly
    if !greedy_tiles.is_empty() {
        let covered: HashSet<u32> = greedy_tiles.iter().flat_map(|e| e.0.iter().copied()).collect();
        let rest: Vec<u32> = (0..h.n_vertices() as u32)
            .filter(|v| !covered.contains(v))
            .collect();
        if let Ok(ind) = h.induced(&rest) {
            if let FactorOutcome::Found(local) = exact_factor(&ind.graph, f, None)? {
                stages.fallback = Some("remainder".into());
                let mut all = greedy_tiles;
                all.extend(lift_tiling(&local, &ind.old_ids).embeddings);
                let tiling = Tiling::from_embeddings(all);
                tiling.validate(h, f)?;
                return Ok(PipelineRun {
                    outcome: FactorOutcome::Found(tiling),
                    stages,
                });
            }
        }
    }

    // fallback 2: decide the whole host exactly
    stages.fallback = Some("full-host".into());
    let outcome = exact_factor(h, f, None)?;
    if let FactorOutcome::Found(t) = &outcome {
        t.validate(h, f)?;
    }
    Ok(PipelineRun { outcome, stages })
}
