//! On-disk formats. Hosts and patterns share one JSON document with fields
//! `k`, `part_sizes` and `edges`; canonical form keeps edges sorted
//! lexicographically, which `KPartiteHypergraph::new` enforces on load.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::{KPartiteHypergraph, PatternGraph};

#[derive(Serialize, Deserialize)]
struct HypergraphDoc {
    k: usize,
    part_sizes: Vec<usize>,
    edges: Vec<Vec<u32>>,
}

pub fn hypergraph_to_string(h: &KPartiteHypergraph) -> String {
    let doc = HypergraphDoc {
        k: h.k(),
        part_sizes: h.part_sizes().to_vec(),
        edges: h.edges().map(|e| e.to_vec()).collect(),
    };
    serde_json::to_string(&doc).expect("hypergraph serializes")
}

pub fn hypergraph_from_str(s: &str) -> Result<KPartiteHypergraph> {
    let doc: HypergraphDoc =
        serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))?;
    KPartiteHypergraph::new(doc.k, doc.part_sizes, doc.edges)
}

pub fn write_hypergraph(path: &Path, h: &KPartiteHypergraph) -> Result<()> {
    fs::write(path, hypergraph_to_string(h) + "\n")?;
    Ok(())
}

pub fn read_hypergraph(path: &Path) -> Result<KPartiteHypergraph> {
    hypergraph_from_str(&fs::read_to_string(path)?)
}

pub fn write_pattern(path: &Path, p: &PatternGraph) -> Result<()> {
    write_hypergraph(path, p.as_host())
}

pub fn read_pattern(path: &Path) -> Result<PatternGraph> {
    let h = read_hypergraph(path)?;
    PatternGraph::new(h.k(), h.part_sizes().to_vec(), h.edges().map(|e| e.to_vec()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::gen_iid;

    #[test]
    fn round_trip_preserves_host() {
        let h = gen_iid(3, 4, 0.5, 1).unwrap();
        let s = hypergraph_to_string(&h);
        let back = hypergraph_from_str(&s).unwrap();
        assert_eq!(h, back);
    }

    #[test]
    fn load_rejects_illegal_documents() {
        assert!(hypergraph_from_str("{\"k\":3,\"part_sizes\":[1,1,1],\"edges\":[[0,0,2]]}").is_err());
        assert!(hypergraph_from_str("not json").is_err());
    }
}
