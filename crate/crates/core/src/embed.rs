//! Backtracking search for partition-respecting, edge-preserving injective
//! maps of a pattern into a host.
//!
//! Pattern vertices are assigned in id order and host candidates are tried
//! ascending, so embeddings stream out in lexicographic order of the image
//! tuple.

use crate::error::{Error, Result};
use crate::hypergraph::{Embedding, KPartiteHypergraph, PatternGraph};

pub struct SearchOptions<'a> {
    /// Force one pattern vertex onto one host vertex.
    pub anchor: Option<(u32, u32)>,
    /// Restrict images to these host vertices (indexed by host id).
    pub allowed: Option<&'a [bool]>,
    /// Abort with `Error::Budget` after this many search nodes.
    pub node_budget: Option<u64>,
}

impl Default for SearchOptions<'_> {
    fn default() -> Self {
        SearchOptions {
            anchor: None,
            allowed: None,
            node_budget: None,
        }
    }
}

/// Visitor verdict: keep enumerating or stop early.
pub enum Flow {
    Continue,
    Stop,
}

struct Searcher<'a, F: FnMut(&[u32]) -> Flow> {
    host: &'a KPartiteHypergraph,
    pattern: &'a KPartiteHypergraph,
    /// pattern edges (as pattern-vertex slices) whose maximum vertex is `pv`
    edges_closing_at: Vec<Vec<usize>>,
    assignment: Vec<u32>,
    img_buf: Vec<u32>,
    used: Vec<bool>,
    allowed: Option<&'a [bool]>,
    anchor: Option<(u32, u32)>,
    nodes: u64,
    budget: Option<u64>,
    visit: F,
    stopped: bool,
    exhausted_budget: bool,
}

impl<'a, F: FnMut(&[u32]) -> Flow> Searcher<'a, F> {
    fn run(&mut self) {
        self.descend(0);
    }

    fn descend(&mut self, pv: usize) {
        if self.stopped || self.exhausted_budget {
            return;
        }
        if pv == self.pattern.n_vertices() {
            if let Flow::Stop = (self.visit)(&self.assignment) {
                self.stopped = true;
            }
            return;
        }
        self.nodes += 1;
        if let Some(b) = self.budget {
            if self.nodes > b {
                self.exhausted_budget = true;
                return;
            }
        }
        let part = self.pattern.part_of(pv as u32);
        let range = self.host.part_range(part);
        let anchored = match self.anchor {
            Some((apv, ahv)) if apv as usize == pv => Some(ahv),
            _ => None,
        };
        for hv in range {
            if let Some(a) = anchored {
                if hv != a {
                    continue;
                }
            }
            if self.used[hv as usize] {
                continue;
            }
            if let Some(mask) = self.allowed {
                if !mask[hv as usize] {
                    continue;
                }
            }
            self.assignment[pv] = hv;
            if self.edges_ok(pv) {
                self.used[hv as usize] = true;
                self.descend(pv + 1);
                self.used[hv as usize] = false;
                if self.stopped || self.exhausted_budget {
                    return;
                }
            }
        }
    }

    fn edges_ok(&mut self, pv: usize) -> bool {
        for i in 0..self.edges_closing_at[pv].len() {
            let pe_idx = self.edges_closing_at[pv][i];
            let pe = self.pattern.edge_at(pe_idx);
            for (slot, &pvert) in pe.iter().enumerate() {
                self.img_buf[slot] = self.assignment[pvert as usize];
            }
            // pattern edges are part-ordered, so the image is sorted already
            if !self.host.is_edge(&self.img_buf) {
                return false;
            }
        }
        true
    }
}

/// Enumerate embeddings, invoking `visit` on each complete assignment.
/// Returns the number of embeddings visited; `Err(Budget)` if the node budget
/// ran out before the enumeration finished.
pub fn for_each_embedding<F: FnMut(&[u32]) -> Flow>(
    host: &KPartiteHypergraph,
    pattern: &PatternGraph,
    opts: &SearchOptions,
    visit: F,
) -> Result<u64> {
    let p = pattern.as_host();
    if p.k() != host.k() {
        return Err(Error::ArityMismatch {
            pattern: p.k(),
            host: host.k(),
        });
    }
    for j in 0..host.k() {
        if p.part_sizes()[j] > host.part_sizes()[j] {
            return Ok(0);
        }
    }
    if let Some((apv, ahv)) = opts.anchor {
        if apv as usize >= p.n_vertices() {
            return Err(Error::OutOfRange(apv, p.n_vertices()));
        }
        if ahv as usize >= host.n_vertices() {
            return Err(Error::OutOfRange(ahv, host.n_vertices()));
        }
        if p.part_of(apv) != host.part_of(ahv) {
            return Err(Error::WrongPart {
                vertex: ahv,
                part: p.part_of(apv),
            });
        }
    }
    let mut edges_closing_at = vec![Vec::new(); p.n_vertices()];
    for (idx, pe) in p.edges().enumerate() {
        let last = *pe.iter().max().unwrap() as usize;
        edges_closing_at[last].push(idx);
    }
    let mut count = 0u64;
    let mut visit = visit;
    let mut searcher = Searcher {
        host,
        pattern: p,
        edges_closing_at,
        assignment: vec![0; p.n_vertices()],
        img_buf: vec![0; p.k()],
        used: vec![false; host.n_vertices()],
        allowed: opts.allowed,
        anchor: opts.anchor,
        nodes: 0,
        budget: opts.node_budget,
        visit: |a: &[u32]| {
            count += 1;
            visit(a)
        },
        stopped: false,
        exhausted_budget: false,
    };
    searcher.run();
    let exhausted = searcher.exhausted_budget;
    drop(searcher);
    if exhausted {
        return Err(Error::Budget(opts.node_budget.unwrap_or(0)));
    }
    Ok(count)
}

/// First embedding in lexicographic image order, if any.
pub fn first_embedding(
    host: &KPartiteHypergraph,
    pattern: &PatternGraph,
    opts: &SearchOptions,
) -> Result<Option<Embedding>> {
    let mut found = None;
    for_each_embedding(host, pattern, opts, |a| {
        found = Some(Embedding(a.to_vec()));
        Flow::Stop
    })?;
    Ok(found)
}

/// Number of labelled embeddings.
pub fn count_embeddings(
    host: &KPartiteHypergraph,
    pattern: &PatternGraph,
    opts: &SearchOptions,
) -> Result<u64> {
    for_each_embedding(host, pattern, opts, |_| Flow::Continue)
}
