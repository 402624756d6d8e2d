//! Desk-scale weak hypergraph regularity: regular-tuple testing, iterated
//! witness refinement, cluster hypergraphs, codegree inheritance, cluster
//! matchings and tiling inside regular tuples.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::{KPartiteHypergraph, PartMasks, PatternGraph};
use crate::rng::StreamRng;
use crate::tiling::{greedy_tiling_within, TilingReport};

/// Exact regularity testing enumerates at most this many sub-tuples.
pub const DEFAULT_REG_EXACT_CAP: u128 = 1 << 24;
/// Refinement rounds before giving up.
pub const DEFAULT_ROUND_CAP: usize = 12;
/// Sub-tuple samples per tuple test.
pub const DEFAULT_TUPLE_TRIALS: u64 = 64;

/// Exact fraction with a u64 numerator and denominator.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Rational {
    pub num: u64,
    pub den: u64,
}

impl Rational {
    pub fn new(num: u64, den: u64) -> Self {
        debug_assert!(den > 0);
        let g = gcd(num.max(1), den);
        if num == 0 {
            Rational { num: 0, den: 1 }
        } else {
            Rational {
                num: num / g,
                den: den / g,
            }
        }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl PartialEq for Rational {
    fn eq(&self, other: &Self) -> bool {
        u128::from(self.num) * u128::from(other.den) == u128::from(other.num) * u128::from(self.den)
    }
}
impl Eq for Rational {}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.max(1)
}

/// |a/b - c/d| > eps, decided in integers where possible.
fn gap_exceeds(a: Rational, b: Rational, eps: f64) -> bool {
    (a.to_f64() - b.to_f64()).abs() > eps + 1e-12
}

/// Density of the host with respect to one subset per part.
pub fn tuple_density(h: &KPartiteHypergraph, sets: &[Vec<u32>]) -> Result<Rational> {
    if sets.iter().any(|s| s.is_empty()) {
        return Err(Error::EmptySet);
    }
    let masks = PartMasks::from_sets(h, sets)?;
    let e = h.codegree_index().count_in_masks(&masks);
    let prod: u64 = sets.iter().map(|s| s.len() as u64).product();
    Ok(Rational::new(e, prod))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum RegVerdict {
    /// Every admissible sub-tuple stays within eps of the tuple density.
    Certified { d: Rational },
    Refuted {
        d: Rational,
        witness: Vec<Vec<u32>>,
        witness_density: Rational,
    },
    NoRefutationFound { d_hat: Rational },
}

impl RegVerdict {
    pub fn is_refuted(&self) -> bool {
        matches!(self, RegVerdict::Refuted { .. })
    }
}

#[derive(Clone, Copy, Debug)]
pub enum RegMode {
    Exact { cap: Option<u128> },
    Sampled { trials: u64, seed: u64 },
}

/// Test a tuple of disjoint vertex sets for eps-regularity: all sub-tuples
/// with |A_j| >= eps |V_j| must have density within eps of the whole tuple.
pub fn regularity_test(
    h: &KPartiteHypergraph,
    tuple: &[Vec<u32>],
    eps: f64,
    mode: RegMode,
) -> Result<RegVerdict> {
    let k = h.k();
    if tuple.len() != k {
        return Err(Error::BadArity { s: tuple.len(), k });
    }
    let d = tuple_density(h, tuple)?;
    let minimums: Vec<usize> = tuple
        .iter()
        .map(|s| ((eps * s.len() as f64) - 1e-9).ceil().max(1.0) as usize)
        .collect();
    match mode {
        RegMode::Exact { cap } => {
            let cap = cap.unwrap_or(DEFAULT_REG_EXACT_CAP);
            let mut needed: u128 = 1;
            for s in tuple {
                if s.len() > 27 {
                    return Err(Error::TooLarge { needed: u128::MAX, cap });
                }
                needed = needed.saturating_mul(1u128 << s.len());
            }
            if needed > cap {
                return Err(Error::TooLarge { needed, cap });
            }
            // nested mask scan over admissible sub-tuples
            let mut subsets: Vec<Vec<Vec<u32>>> = Vec::with_capacity(k);
            for (j, s) in tuple.iter().enumerate() {
                let mut level = Vec::new();
                for mask in 0u32..(1u32 << s.len()) {
                    if (mask.count_ones() as usize) >= minimums[j] {
                        level.push(
                            (0..s.len())
                                .filter(|&i| mask >> i & 1 == 1)
                                .map(|i| s[i])
                                .collect(),
                        );
                    }
                }
                level.sort();
                subsets.push(level);
            }
            let mut idx = vec![0usize; k];
            loop {
                let sub: Vec<Vec<u32>> = (0..k).map(|j| subsets[j][idx[j]].clone()).collect();
                let d_sub = tuple_density(h, &sub)?;
                if gap_exceeds(d_sub, d, eps) {
                    return Ok(RegVerdict::Refuted {
                        d,
                        witness: sub,
                        witness_density: d_sub,
                    });
                }
                let mut j = k;
                let mut done = true;
                while j > 0 {
                    j -= 1;
                    idx[j] += 1;
                    if idx[j] < subsets[j].len() {
                        done = false;
                        break;
                    }
                    idx[j] = 0;
                }
                if done {
                    return Ok(RegVerdict::Certified { d });
                }
            }
        }
        RegMode::Sampled { trials, seed } => {
            let rng = StreamRng::new(seed, "regtest.sample");
            let mut worst: Option<(f64, Vec<Vec<u32>>, Rational)> = None;
            for t in 0..trials {
                let trial = rng.derive(t);
                let sub: Vec<Vec<u32>> = tuple
                    .iter()
                    .enumerate()
                    .map(|(j, s)| {
                        let mut pick = sample_prefix(s, minimums[j], &trial.derive(j as u64));
                        pick.sort_unstable();
                        pick
                    })
                    .collect();
                let d_sub = tuple_density(h, &sub)?;
                let gap = (d_sub.to_f64() - d.to_f64()).abs();
                if worst.as_ref().map_or(true, |w| gap > w.0) {
                    worst = Some((gap, sub, d_sub));
                }
            }
            // single-swap ascent from the worst sample
            if let Some((_, sub, _)) = worst.clone() {
                let improved = swap_ascent(h, tuple, sub, d)?;
                let d_sub = tuple_density(h, &improved)?;
                let gap = (d_sub.to_f64() - d.to_f64()).abs();
                if worst.as_ref().map_or(true, |w| gap > w.0) {
                    worst = Some((gap, improved, d_sub));
                }
            }
            match worst {
                Some((_, witness, wd)) if gap_exceeds(wd, d, eps) => Ok(RegVerdict::Refuted {
                    d,
                    witness,
                    witness_density: wd,
                }),
                _ => Ok(RegVerdict::NoRefutationFound { d_hat: d }),
            }
        }
    }
}

fn sample_prefix(pool: &[u32], len: usize, rng: &StreamRng) -> Vec<u32> {
    let mut scratch = pool.to_vec();
    let take = len.min(scratch.len());
    for step in 0..take {
        let j = step + rng.below_at(step as u64, (scratch.len() - step) as u64) as usize;
        scratch.swap(step, j);
    }
    scratch.truncate(take);
    scratch
}

/// Steepest single-swap ascent on |d(A) - d|, one part at a time.
fn swap_ascent(
    h: &KPartiteHypergraph,
    tuple: &[Vec<u32>],
    mut sub: Vec<Vec<u32>>,
    d: Rational,
) -> Result<Vec<Vec<u32>>> {
    let k = h.k();
    let step_cap = 4 * tuple.iter().map(|s| s.len()).sum::<usize>();
    let mut cur_gap = (tuple_density(h, &sub)?.to_f64() - d.to_f64()).abs();
    for _ in 0..step_cap {
        let mut best: Option<(f64, usize, usize, u32)> = None;
        for j in 0..k {
            for slot in 0..sub[j].len() {
                for &cand in &tuple[j] {
                    if sub[j].contains(&cand) {
                        continue;
                    }
                    let old = sub[j][slot];
                    sub[j][slot] = cand;
                    let gap = (tuple_density(h, &sub)?.to_f64() - d.to_f64()).abs();
                    sub[j][slot] = old;
                    if gap > cur_gap + 1e-12
                        && best.as_ref().map_or(true, |b| gap > b.0)
                    {
                        best = Some((gap, j, slot, cand));
                    }
                }
            }
        }
        let Some((gap, j, slot, cand)) = best else { break };
        sub[j][slot] = cand;
        sub[j].sort_unstable();
        cur_gap = gap;
    }
    Ok(sub)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RoundStats {
    pub round: usize,
    pub clusters_per_part: Vec<usize>,
    pub cluster_size: usize,
    pub refuted_fraction: f64,
    pub energy: f64,
    pub v0_size: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegPartition {
    /// Exceptional vertices, sorted.
    pub v0: Vec<u32>,
    /// clusters[part] = equal-size clusters of that part, each sorted.
    pub clusters: Vec<Vec<Vec<u32>>>,
    pub epsilon: f64,
    pub m0: usize,
    /// Clusters per part after rebalancing.
    pub t: usize,
    pub energy: f64,
    pub refuted_fraction: f64,
    pub rounds: Vec<RoundStats>,
    pub round_cap_hit: bool,
}

impl RegPartition {
    pub fn cluster(&self, part: usize, idx: usize) -> &[u32] {
        &self.clusters[part][idx]
    }

    /// |V_0| <= eps * N, as reported (not enforced).
    pub fn v0_within_bound(&self, h: &KPartiteHypergraph) -> bool {
        self.v0.len() as f64 <= self.epsilon * h.n_vertices() as f64
    }
}

/// Iterated witness refinement from the trivial t0-cut of each part.
///
/// Rounds test every legal cluster tuple in sampled mode; if more than an
/// eps-fraction refute, each witness Venn-splits its clusters, the atoms are
/// chopped back to a common cluster size, and remainders move to V_0. The
/// mean-square density index (with V_0 treated as singleton blocks) never
/// decreases. Stops once the refuted fraction is at most eps, the energy gain
/// drops below eps^(2k)/2, or the round cap is hit; each part is then cut
/// back to the minimum common cluster count.
pub fn weak_regular_partition(
    h: &KPartiteHypergraph,
    eps: f64,
    t0: usize,
    seed: u64,
) -> Result<RegPartition> {
    weak_regular_partition_opts(h, eps, t0, seed, DEFAULT_TUPLE_TRIALS, DEFAULT_ROUND_CAP)
}

pub fn weak_regular_partition_opts(
    h: &KPartiteHypergraph,
    eps: f64,
    t0: usize,
    seed: u64,
    tuple_trials: u64,
    round_cap: usize,
) -> Result<RegPartition> {
    let k = h.k();
    if t0 == 0 {
        return Err(Error::BadPartition("t0 must be positive".into()));
    }
    let n0 = h.part_sizes()[0];
    if h.part_sizes().iter().any(|&s| s != n0) {
        return Err(Error::BadPartition(
            "weak regular partition expects equal part sizes".into(),
        ));
    }
    let mut m0 = n0 / t0;
    if m0 == 0 {
        return Err(Error::BadPartition(format!(
            "t0={t0} exceeds the part size {n0}"
        )));
    }
    let mut v0: Vec<u32> = Vec::new();
    let mut clusters: Vec<Vec<Vec<u32>>> = (0..k)
        .map(|part| {
            let verts: Vec<u32> = h.part_range(part).collect();
            let mut cs: Vec<Vec<u32>> = verts.chunks(m0).map(|c| c.to_vec()).collect();
            while cs.last().map_or(false, |c| c.len() < m0) {
                v0.extend(cs.pop().unwrap());
            }
            cs
        })
        .collect();

    let rng = StreamRng::new(seed, "weakreg.rounds");
    let mut rounds: Vec<RoundStats> = Vec::new();
    let mut round_cap_hit = false;
    let mut refuted_fraction;
    let mut last_energy = energy_index(h, &clusters, &v0)?;

    let mut round = 0usize;
    loop {
        // sampled regularity over every legal cluster tuple
        let shape: Vec<usize> = clusters.iter().map(|c| c.len()).collect();
        let tuples: Vec<Vec<usize>> = cartesian(&shape);
        let round_rng = rng.derive(round as u64);
        let verdicts: Vec<RegVerdict> = tuples
            .par_iter()
            .enumerate()
            .map(|(rank, combo)| {
                let tuple: Vec<Vec<u32>> = combo
                    .iter()
                    .enumerate()
                    .map(|(part, &ci)| clusters[part][ci].clone())
                    .collect();
                regularity_test(
                    h,
                    &tuple,
                    eps,
                    RegMode::Sampled {
                        trials: tuple_trials,
                        seed: round_rng.u64_at(rank as u64),
                    },
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let refuted = verdicts.iter().filter(|v| v.is_refuted()).count();
        refuted_fraction = refuted as f64 / tuples.len().max(1) as f64;
        rounds.push(RoundStats {
            round,
            clusters_per_part: shape.clone(),
            cluster_size: m0,
            refuted_fraction,
            energy: last_energy,
            v0_size: v0.len(),
        });
        if refuted_fraction <= eps {
            break;
        }
        if round + 1 >= round_cap.max(1) {
            round_cap_hit = true;
            break;
        }

        // Venn-split every cluster by the witness pieces that touch it
        let mut witness_sets: Vec<Vec<Vec<Vec<u32>>>> = (0..k)
            .map(|part| vec![Vec::new(); clusters[part].len()])
            .collect();
        for (rank, verdict) in verdicts.iter().enumerate() {
            if let RegVerdict::Refuted { witness, .. } = verdict {
                let combo = &tuples[rank];
                for (part, &ci) in combo.iter().enumerate() {
                    witness_sets[part][ci].push(witness[part].clone());
                }
            }
        }
        let new_m0 = (m0 / 2).max(1);
        let mut new_clusters: Vec<Vec<Vec<u32>>> = Vec::with_capacity(k);
        for part in 0..k {
            let mut cs: Vec<Vec<u32>> = Vec::new();
            for (ci, cluster) in clusters[part].iter().enumerate() {
                // atom key: membership pattern across this cluster's witnesses
                let ws = &witness_sets[part][ci];
                let mut atoms: std::collections::BTreeMap<Vec<bool>, Vec<u32>> =
                    Default::default();
                for &v in cluster {
                    let key: Vec<bool> =
                        ws.iter().map(|w| w.binary_search(&v).is_ok()).collect();
                    atoms.entry(key).or_default().push(v);
                }
                for atom in atoms.into_values() {
                    for chunk in atom.chunks(new_m0) {
                        if chunk.len() == new_m0 {
                            cs.push(chunk.to_vec());
                        } else {
                            v0.extend_from_slice(chunk);
                        }
                    }
                }
            }
            cs.sort();
            new_clusters.push(cs);
        }
        clusters = new_clusters;
        m0 = new_m0;
        let energy = energy_index(h, &clusters, &v0)?;
        debug_assert!(energy >= last_energy - 1e-9, "{energy} < {last_energy}");
        let gain = energy - last_energy;
        last_energy = energy;
        round += 1;
        if gain < eps.powi(2 * k as i32) / 2.0 {
            // record the final state before stopping
            let shape: Vec<usize> = clusters.iter().map(|c| c.len()).collect();
            let tuples = cartesian(&shape);
            let round_rng = rng.derive(round as u64);
            let refuted = tuples
                .par_iter()
                .enumerate()
                .map(|(rank, combo)| {
                    let tuple: Vec<Vec<u32>> = combo
                        .iter()
                        .enumerate()
                        .map(|(part, &ci)| clusters[part][ci].clone())
                        .collect();
                    regularity_test(
                        h,
                        &tuple,
                        eps,
                        RegMode::Sampled {
                            trials: tuple_trials,
                            seed: round_rng.u64_at(rank as u64),
                        },
                    )
                })
                .collect::<Result<Vec<_>>>()?
                .iter()
                .filter(|v| v.is_refuted())
                .count();
            refuted_fraction = refuted as f64 / tuples.len().max(1) as f64;
            rounds.push(RoundStats {
                round,
                clusters_per_part: shape,
                cluster_size: m0,
                refuted_fraction,
                energy: last_energy,
                v0_size: v0.len(),
            });
            break;
        }
    }

    // rebalance: every part keeps the minimum common cluster count, dropping
    // whole clusters by descending id
    let t = clusters.iter().map(|c| c.len()).min().unwrap_or(0);
    for cs in clusters.iter_mut() {
        while cs.len() > t {
            v0.extend(cs.pop().unwrap());
        }
    }
    v0.sort_unstable();
    let energy = energy_index(h, &clusters, &v0)?;
    Ok(RegPartition {
        v0,
        clusters,
        epsilon: eps,
        m0,
        t,
        energy,
        refuted_fraction,
        rounds,
        round_cap_hit,
    })
}

fn cartesian(shape: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &s in shape {
        let mut next = Vec::with_capacity(out.len() * s);
        for prefix in &out {
            for i in 0..s {
                let mut p = prefix.clone();
                p.push(i);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// Mean-square density index over block tuples, with exceptional vertices as
/// singleton blocks so refinement never loses mass.
fn energy_index(
    h: &KPartiteHypergraph,
    clusters: &[Vec<Vec<u32>>],
    v0: &[u32],
) -> Result<f64> {
    let mut blocks: Vec<Vec<Vec<u32>>> = clusters.to_vec();
    for &v in v0 {
        blocks[h.part_of(v)].push(vec![v]);
    }
    let idx = h.codegree_index();
    let shape: Vec<usize> = blocks.iter().map(|b| b.len()).collect();
    let norm: f64 = h.part_sizes().iter().map(|&s| s as f64).product();
    let mut energy = 0.0f64;
    for combo in cartesian(&shape) {
        let sets: Vec<Vec<u32>> = combo
            .iter()
            .enumerate()
            .map(|(part, &bi)| blocks[part][bi].clone())
            .collect();
        let masks = PartMasks::from_sets(h, &sets)?;
        let e = idx.count_in_masks(&masks) as f64;
        let prod: f64 = sets.iter().map(|s| s.len() as f64).product();
        if prod > 0.0 {
            energy += (e / prod).powi(2) * prod / norm;
        }
    }
    Ok(energy)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClusterEdgeProvenance {
    pub edge: Vec<u32>,
    pub density: Rational,
    pub certified: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClusterHypergraph {
    /// Host on cluster ids, t per part.
    #[serde(skip)]
    pub graph: Option<KPartiteHypergraph>,
    pub k: usize,
    pub t: usize,
    pub d: f64,
    pub epsilon: f64,
    pub edges: Vec<Vec<u32>>,
    pub provenance: Vec<ClusterEdgeProvenance>,
}

impl ClusterHypergraph {
    pub fn graph(&self) -> &KPartiteHypergraph {
        self.graph.as_ref().expect("cluster hypergraph carries its host")
    }
}

/// A legal cluster tuple becomes an edge when its regularity verdict is
/// certified or not refuted and its density reaches d. Sampled verdicts make
/// the edge set "no refutation found", an explicit weakening recorded per
/// edge in the provenance.
pub fn cluster_hypergraph(
    h: &KPartiteHypergraph,
    p: &RegPartition,
    eps: f64,
    d: f64,
    seed: u64,
    tuple_trials: u64,
) -> Result<ClusterHypergraph> {
    let k = h.k();
    let t = p.t;
    let shape = vec![t; k];
    let combos = cartesian(&shape);
    let rng = StreamRng::new(seed, "cluster.tests");
    let results: Vec<(Vec<u32>, Option<ClusterEdgeProvenance>)> = combos
        .par_iter()
        .enumerate()
        .map(|(rank, combo)| -> Result<(Vec<u32>, Option<ClusterEdgeProvenance>)> {
            let tuple: Vec<Vec<u32>> = combo
                .iter()
                .enumerate()
                .map(|(part, &ci)| p.clusters[part][ci].clone())
                .collect();
            let edge: Vec<u32> = combo
                .iter()
                .enumerate()
                .map(|(part, &ci)| (part * t + ci) as u32)
                .collect();
            let exact_feasible = tuple.iter().map(|s| s.len() as u32).sum::<u32>() <= 20;
            let verdict = if exact_feasible {
                regularity_test(h, &tuple, eps, RegMode::Exact { cap: None })?
            } else {
                regularity_test(
                    h,
                    &tuple,
                    eps,
                    RegMode::Sampled {
                        trials: tuple_trials,
                        seed: rng.u64_at(rank as u64),
                    },
                )?
            };
            let density = tuple_density(h, &tuple)?;
            let keep = match &verdict {
                RegVerdict::Certified { .. } => density.to_f64() >= d,
                RegVerdict::NoRefutationFound { .. } => density.to_f64() >= d,
                RegVerdict::Refuted { .. } => false,
            };
            Ok((
                edge.clone(),
                keep.then(|| ClusterEdgeProvenance {
                    edge,
                    density,
                    certified: matches!(verdict, RegVerdict::Certified { .. }),
                }),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut edges = Vec::new();
    let mut provenance = Vec::new();
    for (edge, prov) in results {
        if let Some(pr) = prov {
            edges.push(edge);
            provenance.push(pr);
        }
    }
    let graph = KPartiteHypergraph::new(k, shape, edges.clone())?;
    Ok(ClusterHypergraph {
        graph: Some(graph),
        k,
        t,
        d,
        epsilon: eps,
        edges,
        provenance,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CodegreeReport {
    /// deg threshold (1/2 + eps/4) * t.
    pub threshold: f64,
    pub violating: u64,
    pub total_legal_sets: u64,
    pub bound: f64,
    pub pass: bool,
    /// histogram[d] = how many legal (k-1)-sets have cluster degree d.
    pub histogram: Vec<u64>,
}

/// Count legal (k-1)-sets of clusters whose degree in R falls below
/// (1/2 + eps/4) t; passes when at most xi * t^(k-1) do.
pub fn codegree_inheritance(r: &ClusterHypergraph, eps: f64, xi: f64) -> Result<CodegreeReport> {
    let g = r.graph();
    let k = r.k;
    let t = r.t;
    let threshold = (0.5 + eps / 4.0) * t as f64;
    let mut histogram = vec![0u64; t + 1];
    let mut violating = 0u64;
    let mut total = 0u64;
    for combo in crate::hypergraph::combinations(k, k - 1) {
        let ranges: Vec<Vec<u32>> = combo.iter().map(|&j| g.part_range(j).collect()).collect();
        for chosen in cartesian(&ranges.iter().map(|r| r.len()).collect::<Vec<_>>()) {
            let verts: Vec<u32> = chosen
                .iter()
                .enumerate()
                .map(|(i, &x)| ranges[i][x])
                .collect();
            let deg = g
                .edges()
                .filter(|e| verts.iter().all(|v| e.contains(v)))
                .count() as u64;
            histogram[deg as usize] += 1;
            total += 1;
            if (deg as f64) < threshold {
                violating += 1;
            }
        }
    }
    let bound = xi * (t as f64).powi(k as i32 - 1);
    Ok(CodegreeReport {
        threshold,
        violating,
        total_legal_sets: total,
        bound,
        pass: violating as f64 <= bound,
        histogram,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatchingReport {
    /// Disjoint edges of R.
    pub matching: Vec<Vec<u32>>,
    pub leftover_per_part: Vec<usize>,
    /// Bound (k-1) t0 - 1 satisfied in every part, when t0 given.
    pub bound_met: Option<bool>,
    /// Legal (k-1)-sets with degree below the matching threshold
    /// (ceil(t/k) when t = 0 or k-1 mod k, floor(t/k) otherwise).
    pub low_degree_sets: u64,
    pub degree_threshold: u64,
    pub budget_exhausted: bool,
}

/// Maximum matching by branch and bound over the cluster hypergraph.
pub fn cluster_matching(
    r: &ClusterHypergraph,
    t0: Option<usize>,
    budget: Option<u64>,
) -> Result<MatchingReport> {
    let g = r.graph();
    let k = r.k;
    let t = r.t;
    let n = g.n_vertices();
    if n > 128 {
        return Err(Error::TooLarge {
            needed: n as u128,
            cap: 128,
        });
    }
    let edges: Vec<(u128, Vec<u32>)> = g
        .edges()
        .map(|e| (e.iter().fold(0u128, |m, &v| m | 1u128 << v), e.to_vec()))
        .collect();
    let mut by_vertex: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, (_, e)) in edges.iter().enumerate() {
        for &v in e {
            by_vertex[v as usize].push(i);
        }
    }

    struct Bb<'a> {
        n: usize,
        k: usize,
        part_ranges: Vec<std::ops::Range<usize>>,
        edges: &'a [(u128, Vec<u32>)],
        by_vertex: &'a [Vec<usize>],
        best: Vec<usize>,
        cur: Vec<usize>,
        nodes: u64,
        budget: u64,
        exhausted: bool,
    }
    impl Bb<'_> {
        fn search(&mut self, covered: u128, from: usize) {
            self.nodes += 1;
            if self.nodes > self.budget {
                self.exhausted = true;
                return;
            }
            if self.cur.len() > self.best.len() {
                self.best = self.cur.clone();
            }
            // find the next vertex (>= from) that could still be matched
            let mut pivot = None;
            for v in from..self.n {
                if covered >> v & 1 == 0
                    && self.by_vertex[v]
                        .iter()
                        .any(|&ei| self.edges[ei].0 & covered == 0)
                {
                    pivot = Some(v);
                    break;
                }
            }
            let Some(v) = pivot else { return };
            // each matching edge covers one vertex per part, so uncovered
            // capacity of any single part bounds what is still achievable
            let mut cap = usize::MAX;
            for part in 0..self.k {
                let free = (self.part_ranges[part].clone())
                    .filter(|&x| covered >> x & 1 == 0)
                    .count();
                cap = cap.min(free);
            }
            if self.cur.len() + cap <= self.best.len() {
                return;
            }
            for &ei in &self.by_vertex[v] {
                if self.edges[ei].0 & covered != 0 {
                    continue;
                }
                self.cur.push(ei);
                self.search(covered | self.edges[ei].0, v + 1);
                self.cur.pop();
                if self.exhausted {
                    return;
                }
            }
            // also allow leaving v unmatched
            self.search(covered, v + 1);
        }
    }
    let mut bb = Bb {
        n,
        k,
        part_ranges: (0..k)
            .map(|j| {
                let r = g.part_range(j);
                r.start as usize..r.end as usize
            })
            .collect(),
        edges: &edges,
        by_vertex: &by_vertex,
        best: Vec::new(),
        cur: Vec::new(),
        nodes: 0,
        budget: budget.unwrap_or(crate::tiling::DEFAULT_NODE_BUDGET),
        exhausted: false,
    };
    bb.search(0, 0);
    let matching: Vec<Vec<u32>> = bb.best.iter().map(|&ei| edges[ei].1.clone()).collect();
    let mut leftover = vec![t; k];
    for e in &matching {
        for &v in e {
            leftover[g.part_of(v)] -= 1;
        }
    }
    let bound_met = t0.map(|t0| {
        let bound = (k - 1) * t0;
        leftover.iter().all(|&l| l + 1 <= bound.max(1))
    });
    let degree_threshold = if t % k == 0 || t % k == k - 1 {
        (t as u64).div_ceil(k as u64)
    } else {
        t as u64 / k as u64
    };
    let mut low = 0u64;
    for combo in crate::hypergraph::combinations(k, k - 1) {
        let ranges: Vec<Vec<u32>> = combo.iter().map(|&j| g.part_range(j).collect()).collect();
        for chosen in cartesian(&ranges.iter().map(|r| r.len()).collect::<Vec<_>>()) {
            let verts: Vec<u32> = chosen
                .iter()
                .enumerate()
                .map(|(i, &x)| ranges[i][x])
                .collect();
            let deg = g
                .edges()
                .filter(|e| verts.iter().all(|v| e.contains(v)))
                .count() as u64;
            if deg < degree_threshold {
                low += 1;
            }
        }
    }
    Ok(MatchingReport {
        matching,
        leftover_per_part: leftover,
        bound_met,
        low_degree_sets: low,
        degree_threshold,
        budget_exhausted: bb.exhausted,
    })
}

/// Greedy pattern tiling confined to one tuple of clusters, stopping at
/// eps_star * m0 leftover per cluster.
pub fn tile_regular_tuple(
    h: &KPartiteHypergraph,
    tuple: &[Vec<u32>],
    f: &PatternGraph,
    eps_star: f64,
) -> Result<TilingReport> {
    if tuple.len() != h.k() {
        return Err(Error::BadArity {
            s: tuple.len(),
            k: h.k(),
        });
    }
    let allowed: Vec<u32> = tuple.iter().flatten().copied().collect();
    greedy_tiling_within(h, f, eps_star, Some(&allowed))
}
