//! Verify or refute the slack condition e(X_1..X_k) >= p|X_1|..|X_k| - mu N^k:
//! exhaustively on tiny hosts, by sampling plus steepest-descent refutation on
//! larger ones.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::{KPartiteHypergraph, PartMasks};
use crate::rng::StreamRng;

/// Default cap on exact-mode subset tuples (2^24).
pub const DEFAULT_EXACT_CAP: u128 = 1 << 24;
/// Descent step cap is this multiple of the vertex count.
pub const DESCENT_STEPS_PER_VERTEX: u64 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    CertifiedDense,
    Refuted,
    NoRefutationFound,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DensenessCertificate {
    pub p: f64,
    pub mu: f64,
    /// N^k with N the total vertex count; the slack is compared to
    /// -mu * normalization.
    pub normalization: f64,
    pub verdict: Verdict,
    /// Subset tuple achieving the reported slack (refutations carry one).
    pub witness: Option<Vec<Vec<u32>>>,
    /// Exact minimum slack (exact mode only).
    pub min_slack: Option<f64>,
    /// Best slack seen by the sampler (sampled mode only).
    pub min_slack_estimate: Option<f64>,
    pub trials: Option<u64>,
}

#[derive(Clone, Copy, Debug)]
pub enum Mode {
    Exact { cap: Option<u128> },
    Sampled { trials: u64, seed: u64 },
}

/// Global minimum of e(X_1..X_k) - p prod |X_j| over all subset tuples, with
/// the lexicographically least minimizing tuple.
pub fn min_slack_exact(
    h: &KPartiteHypergraph,
    p: f64,
    cap: Option<u128>,
) -> Result<(f64, Vec<Vec<u32>>)> {
    let cap = cap.unwrap_or(DEFAULT_EXACT_CAP);
    let total_bits: usize = h.part_sizes().iter().sum();
    let needed: u128 = if total_bits >= 127 {
        u128::MAX
    } else {
        1u128 << total_bits
    };
    if needed > cap || h.part_sizes().iter().any(|&s| s > 31) {
        return Err(Error::TooLarge { needed, cap });
    }

    // edges in local coordinates
    let k = h.k();
    let edges: Vec<Vec<u32>> = h
        .edges()
        .map(|e| e.iter().map(|&v| h.local_id(v) as u32).collect())
        .collect();
    let sizes = h.part_sizes().to_vec();

    struct Search<'a> {
        k: usize,
        sizes: &'a [usize],
        p: f64,
        best: f64,
        best_witness: Vec<u32>, // masks per part
        masks: Vec<u32>,
    }

    impl Search<'_> {
        fn leaf(&mut self, edge_count: usize, product: f64) {
            let slack = edge_count as f64 - self.p * product;
            self.consider(slack, &self.masks.clone());
        }

        /// No edges survive the filter: among all completions the minimum of
        /// -p * product is -p * partial * (full remaining parts) when the
        /// partial product is positive, and 0 (empty completions) otherwise.
        fn prune(&mut self, level: usize, partial_product: f64) {
            let mut candidate = self.masks.clone();
            if self.p > 0.0 && partial_product > 0.0 {
                let mut prod = partial_product;
                for j in level..self.k {
                    candidate[j] = (1u32 << self.sizes[j]) - 1;
                    prod *= self.sizes[j] as f64;
                }
                self.consider(-self.p * prod, &candidate);
            } else {
                for slot in candidate.iter_mut().skip(level) {
                    *slot = 0;
                }
                self.consider(0.0, &candidate);
            }
        }

        fn consider(&mut self, slack: f64, witness: &[u32]) {
            let better = slack < self.best - 1e-12
                || (slack <= self.best + 1e-12 && lex_less(witness, &self.best_witness, self.sizes));
            if better {
                self.best = slack;
                self.best_witness = witness.to_vec();
            }
        }
    }

    /// Compare mask tuples by the id lists they denote.
    fn lex_less(a: &[u32], b: &[u32], sizes: &[usize]) -> bool {
        for (j, (&ma, &mb)) in a.iter().zip(b).enumerate() {
            if ma == mb {
                continue;
            }
            let la: Vec<u32> = (0..sizes[j] as u32).filter(|&i| ma >> i & 1 == 1).collect();
            let lb: Vec<u32> = (0..sizes[j] as u32).filter(|&i| mb >> i & 1 == 1).collect();
            return la < lb;
        }
        false
    }

    fn descend(
        s: &mut Search,
        level: usize,
        live_edges: &[Vec<u32>],
        partial_product: f64,
    ) {
        if level == s.k {
            s.leaf(live_edges.len(), partial_product);
            return;
        }
        if live_edges.is_empty() {
            s.prune(level, partial_product);
            return;
        }
        let size = s.sizes[level];
        for mask in 0u32..(1u32 << size) {
            s.masks[level] = mask;
            let kept: Vec<Vec<u32>> = live_edges
                .iter()
                .filter(|e| mask >> e[level] & 1 == 1)
                .cloned()
                .collect();
            descend(s, level + 1, &kept, partial_product * mask.count_ones() as f64);
        }
        s.masks[level] = 0;
    }

    let mut search = Search {
        k,
        sizes: &sizes,
        p,
        best: f64::INFINITY,
        best_witness: vec![u32::MAX; k],
        masks: vec![0u32; k],
    };
    descend(&mut search, 0, &edges, 1.0);

    let witness: Vec<Vec<u32>> = search
        .best_witness
        .iter()
        .enumerate()
        .map(|(j, &m)| {
            (0..sizes[j] as u32)
                .filter(|&i| m >> i & 1 == 1)
                .map(|i| h.part_start(j) + i)
                .collect()
        })
        .collect();
    Ok((search.best, witness))
}

/// Decide the verdict at slack tolerance mu (normalized by N^k).
pub fn denseness_verdict(
    h: &KPartiteHypergraph,
    p: f64,
    mu: f64,
    mode: Mode,
) -> Result<DensenessCertificate> {
    let n = h.n_vertices() as f64;
    let normalization = n.powi(h.k() as i32);
    let threshold = -mu * normalization;
    match mode {
        Mode::Exact { cap } => {
            let (min_slack, witness) = min_slack_exact(h, p, cap)?;
            if min_slack >= threshold {
                Ok(DensenessCertificate {
                    p,
                    mu,
                    normalization,
                    verdict: Verdict::CertifiedDense,
                    witness: None,
                    min_slack: Some(min_slack),
                    min_slack_estimate: None,
                    trials: None,
                })
            } else {
                debug_assert!(recheck_witness(h, p, &witness, min_slack));
                Ok(DensenessCertificate {
                    p,
                    mu,
                    normalization,
                    verdict: Verdict::Refuted,
                    witness: Some(witness),
                    min_slack: Some(min_slack),
                    min_slack_estimate: None,
                    trials: None,
                })
            }
        }
        Mode::Sampled { trials, seed } => {
            let (best_slack, best_masks) = sampled_min_slack(h, p, trials, seed);
            let witness_sets = best_masks.to_sets(h);
            if best_slack < threshold {
                let e = h.edge_count_between(&witness_sets)?;
                let prod: f64 = witness_sets.iter().map(|s| s.len() as f64).product();
                let re_slack = e as f64 - p * prod;
                debug_assert!((re_slack - best_slack).abs() < 1e-6);
                Ok(DensenessCertificate {
                    p,
                    mu,
                    normalization,
                    verdict: Verdict::Refuted,
                    witness: Some(witness_sets),
                    min_slack: None,
                    min_slack_estimate: Some(re_slack),
                    trials: Some(trials),
                })
            } else {
                Ok(DensenessCertificate {
                    p,
                    mu,
                    normalization,
                    verdict: Verdict::NoRefutationFound,
                    witness: None,
                    min_slack: None,
                    min_slack_estimate: Some(best_slack),
                    trials: Some(trials),
                })
            }
        }
    }
}

fn recheck_witness(h: &KPartiteHypergraph, p: f64, witness: &[Vec<u32>], slack: f64) -> bool {
    let e = h.edge_count_between(witness).unwrap_or(u64::MAX);
    let prod: f64 = witness.iter().map(|s| s.len() as f64).product();
    (e as f64 - p * prod - slack).abs() < 1e-6
}

/// Random half-density subset tuples evaluated through the codegree index,
/// then one steepest-descent pass of single-vertex toggles from the worst
/// sample.
fn sampled_min_slack(h: &KPartiteHypergraph, p: f64, trials: u64, seed: u64) -> (f64, PartMasks) {
    let rng = StreamRng::new(seed, "denseness.sample");
    let n = h.n_vertices() as u64;
    let index = h.codegree_index();

    let evaluate = |trial: u64| -> (f64, PartMasks) {
        let mut masks = PartMasks::empty(h);
        let mut counter = trial * n;
        for j in 0..h.k() {
            for l in 0..h.part_sizes()[j] {
                if rng.bernoulli_at(counter, 0.5) {
                    masks.set(j, l, true);
                }
                counter += 1;
            }
        }
        let e = index.count_in_masks(&masks);
        (e as f64 - p * masks.size_product(), masks)
    };

    let samples: Vec<(f64, PartMasks)> = (0..trials).into_par_iter().map(evaluate).collect();
    let mut best = (0.0, PartMasks::empty(h)); // the empty tuple has slack 0
    for s in samples {
        if s.0 < best.0 {
            best = s;
        }
    }
    let descended = steepest_descent(h, p, best.1.clone());
    if descended.0 < best.0 {
        best = descended;
    }
    best
}

/// Steepest descent on the slack by single-vertex toggles; marginal edge
/// counts are maintained incrementally through the incidence lists.
fn steepest_descent(h: &KPartiteHypergraph, p: f64, mut masks: PartMasks) -> (f64, PartMasks) {
    let n = h.n_vertices();
    let k = h.k();
    let incidence = h.incidence();
    let mut inside = vec![false; n];
    for v in 0..n as u32 {
        let j = h.part_of(v);
        if masks.contains(j, h.local_id(v)) {
            inside[v as usize] = true;
        }
    }
    // marginal[v] = edges through v whose other endpoints are all inside
    let mut marginal = vec![0i64; n];
    let mut e_count = 0i64;
    for edge in h.edges() {
        let outside: Vec<u32> = edge
            .iter()
            .copied()
            .filter(|&v| !inside[v as usize])
            .collect();
        match outside.len() {
            0 => {
                e_count += 1;
                for &v in edge {
                    marginal[v as usize] += 1;
                }
            }
            1 => marginal[outside[0] as usize] += 1,
            _ => {}
        }
    }

    let mut slack = e_count as f64 - p * masks.size_product();
    let step_cap = DESCENT_STEPS_PER_VERTEX * n as u64;
    for _ in 0..step_cap {
        // product of the other parts' sizes, per part
        let counts: Vec<f64> = (0..k).map(|j| masks.count(j) as f64).collect();
        let others: Vec<f64> = (0..k)
            .map(|j| {
                (0..k)
                    .filter(|&l| l != j)
                    .map(|l| counts[l])
                    .product::<f64>()
            })
            .collect();
        let mut best_delta = -1e-12;
        let mut best_v: Option<u32> = None;
        for v in 0..n as u32 {
            let j = h.part_of(v);
            let delta = if inside[v as usize] {
                -(marginal[v as usize] as f64) + p * others[j]
            } else {
                marginal[v as usize] as f64 - p * others[j]
            };
            if delta < best_delta {
                best_delta = delta;
                best_v = Some(v);
            }
        }
        let Some(v) = best_v else { break };
        let j = h.part_of(v);
        let entering = !inside[v as usize];
        inside[v as usize] = entering;
        masks.set(j, h.local_id(v), entering);
        let sign = if entering { 1i64 } else { -1i64 };
        for &ei in incidence.edges_of(v) {
            let edge = h.edge_at(ei as usize);
            let mut out_other: Option<u32> = None;
            let mut out_count = 0;
            for &u in edge {
                if u != v && !inside[u as usize] {
                    out_count += 1;
                    out_other = Some(u);
                    if out_count > 1 {
                        break;
                    }
                }
            }
            match out_count {
                0 => {
                    e_count += sign;
                    for &u in edge {
                        if u != v {
                            marginal[u as usize] += sign;
                        }
                    }
                }
                1 => marginal[out_other.unwrap() as usize] += sign,
                _ => {}
            }
        }
        slack = e_count as f64 - p * masks.size_product();
    }
    debug_assert_eq!(e_count as u64, h.codegree_index().count_in_masks(&masks));
    (slack, masks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{complete_host, gen_iid};

    /// Independent oracle: minimum slack by direct enumeration over all
    /// subset tuples via edge_count_between.
    fn brute_min_slack(h: &KPartiteHypergraph, p: f64) -> f64 {
        let k = h.k();
        let sizes = h.part_sizes();
        let mut best = f64::INFINITY;
        let mut masks = vec![0u32; k];
        loop {
            let sets: Vec<Vec<u32>> = (0..k)
                .map(|j| {
                    (0..sizes[j] as u32)
                        .filter(|&i| masks[j] >> i & 1 == 1)
                        .map(|i| h.part_start(j) + i)
                        .collect()
                })
                .collect();
            let e = h.edge_count_between(&sets).unwrap();
            let prod: f64 = sets.iter().map(|s| s.len() as f64).product();
            best = best.min(e as f64 - p * prod);
            let mut j = k;
            loop {
                if j == 0 {
                    return best;
                }
                j -= 1;
                masks[j] += 1;
                if masks[j] < (1 << sizes[j]) {
                    break;
                }
                masks[j] = 0;
            }
        }
    }

    #[test]
    fn complete_host_min_slack_zero() {
        let h = complete_host(3, 2);
        let (slack, witness) = min_slack_exact(&h, 0.7, None).unwrap();
        assert_eq!(slack, 0.0);
        assert!(witness.iter().any(|s| s.is_empty()));
        assert_eq!(brute_min_slack(&h, 0.7), 0.0);
    }

    #[test]
    fn edgeless_host_min_slack() {
        let h = KPartiteHypergraph::new(3, vec![2, 2, 2], vec![]).unwrap();
        let (slack, witness) = min_slack_exact(&h, 0.5, None).unwrap();
        assert_eq!(slack, -4.0);
        assert_eq!(brute_min_slack(&h, 0.5), -4.0);
        // unique minimizer: the full parts
        assert_eq!(witness, h.all_parts_as_sets());
    }

    #[test]
    fn single_edge_min_slack() {
        let h = KPartiteHypergraph::new(3, vec![1, 1, 1], vec![vec![0, 1, 2]]).unwrap();
        let (slack, _) = min_slack_exact(&h, 0.5, None).unwrap();
        assert_eq!(slack, 0.0);
        assert_eq!(brute_min_slack(&h, 0.5), 0.0);
    }

    #[test]
    fn exact_matches_brute_force_on_random_hosts() {
        for seed in 0..5 {
            let h = gen_iid(3, 2, 0.5, seed).unwrap();
            for p in [0.0, 0.3, 0.8] {
                let (slack, witness) = min_slack_exact(&h, p, None).unwrap();
                let brute = brute_min_slack(&h, p);
                assert!((slack - brute).abs() < 1e-9, "seed {seed} p {p}");
                assert!(recheck_witness(&h, p, &witness, slack));
            }
        }
    }

    #[test]
    fn min_slack_never_positive() {
        for seed in 0..4 {
            let h = gen_iid(3, 3, 0.6, seed).unwrap();
            let (slack, _) = min_slack_exact(&h, 0.4, None).unwrap();
            assert!(slack <= 1e-12);
        }
    }

    #[test]
    fn cap_is_enforced() {
        let h = KPartiteHypergraph::new(3, vec![10, 10, 10], vec![]).unwrap();
        assert!(matches!(
            min_slack_exact(&h, 0.5, Some(1 << 20)),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn verdict_certifies_complete_host() {
        let h = complete_host(3, 2);
        let cert = denseness_verdict(&h, 0.9, 0.01, Mode::Exact { cap: None }).unwrap();
        assert_eq!(cert.verdict, Verdict::CertifiedDense);
        assert_eq!(cert.min_slack, Some(0.0));
    }

    #[test]
    fn verdict_refutes_edgeless_host() {
        let h = KPartiteHypergraph::new(3, vec![2, 2, 2], vec![]).unwrap();
        let cert = denseness_verdict(&h, 0.5, 0.001, Mode::Exact { cap: None }).unwrap();
        assert_eq!(cert.verdict, Verdict::Refuted);
        let w = cert.witness.unwrap();
        assert_eq!(w, h.all_parts_as_sets());
        // the witness re-evaluates below -mu N^k
        let e = h.edge_count_between(&w).unwrap() as f64;
        let prod: f64 = w.iter().map(|s| s.len() as f64).product();
        assert!(e - 0.5 * prod < -0.001 * 216.0);
    }

    #[test]
    fn sampler_refutes_edgeless_host() {
        let h = KPartiteHypergraph::new(3, vec![4, 4, 4], vec![]).unwrap();
        let cert =
            denseness_verdict(&h, 0.5, 0.01, Mode::Sampled { trials: 32, seed: 1 }).unwrap();
        assert_eq!(cert.verdict, Verdict::Refuted);
        assert!(cert.witness.is_some());
    }

    #[test]
    fn sampler_never_refutes_what_exact_certifies() {
        for seed in 0..6 {
            let h = gen_iid(3, 2, 0.8, seed).unwrap();
            for (p, mu) in [(0.3, 0.05), (0.5, 0.1)] {
                let exact = denseness_verdict(&h, p, mu, Mode::Exact { cap: None }).unwrap();
                let sampled =
                    denseness_verdict(&h, p, mu, Mode::Sampled { trials: 64, seed }).unwrap();
                if exact.verdict == Verdict::CertifiedDense {
                    assert_ne!(sampled.verdict, Verdict::Refuted, "seed {seed} p {p}");
                }
            }
        }
    }

    #[test]
    fn mu_monotonicity() {
        for seed in 0..4 {
            let h = gen_iid(3, 2, 0.4, seed).unwrap();
            let lo = denseness_verdict(&h, 0.6, 0.02, Mode::Exact { cap: None }).unwrap();
            let hi = denseness_verdict(&h, 0.6, 0.05, Mode::Exact { cap: None }).unwrap();
            if lo.verdict == Verdict::CertifiedDense {
                assert_eq!(hi.verdict, Verdict::CertifiedDense);
            }
        }
    }

    #[test]
    fn sampled_is_worker_count_independent() {
        let h = gen_iid(3, 8, 0.5, 3).unwrap();
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| denseness_verdict(&h, 0.5, 0.02, Mode::Sampled { trials: 100, seed: 9 }))
            .unwrap();
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| denseness_verdict(&h, 0.5, 0.02, Mode::Sampled { trials: 100, seed: 9 }))
            .unwrap();
        assert_eq!(
            serde_json::to_string(&one).unwrap(),
            serde_json::to_string(&four).unwrap()
        );
    }
}
