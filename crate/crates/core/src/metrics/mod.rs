//! Structural analysis of knowledge graphs: centralities, whole-graph
//! statistics and shape patterns.

mod centrality;
mod patterns;
mod selection;
mod stats;

pub use centrality::{
    betweenness_centrality, centrality, closeness_centrality, degree_centrality, pagerank,
    CentralityScores, Metric, PageRankParams,
};
pub use patterns::{classify_patterns, PatternFlags};
pub use selection::{top_fraction_selection, PredictedImportantSet};
pub use stats::{graph_statistics, GraphStatistics, RANK_TOLERANCE};

use std::collections::{BTreeSet, VecDeque};

use crate::model::KnowledgeGraph;

/// Index-based view of a graph. Node `i` is `ids[i]`; parallel edges between
/// the same ordered pair are collapsed.
#[derive(Debug, Clone)]
pub(crate) struct Digraph {
    pub ids: Vec<u32>,
    pub out: Vec<Vec<usize>>,
    pub inc: Vec<Vec<usize>>,
}

impl Digraph {
    pub fn from_kg(kg: &KnowledgeGraph) -> Self {
        let ids: Vec<u32> = kg.nodes.iter().map(|n| n.id).collect();
        let index = |id: u32| ids.iter().position(|&x| x == id);
        let pairs: BTreeSet<(usize, usize)> = kg
            .edges
            .iter()
            .filter_map(|e| Some((index(e.src)?, index(e.dst)?)))
            .filter(|(a, b)| a != b)
            .collect();
        let mut out = vec![Vec::new(); ids.len()];
        let mut inc = vec![Vec::new(); ids.len()];
        for (a, b) in pairs {
            out[a].push(b);
            inc[b].push(a);
        }
        Self { ids, out, inc }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    /// BFS distances from `source` following `adj`; `None` = unreachable.
    pub fn bfs(adj: &[Vec<usize>], source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; adj.len()];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].expect("queued nodes have a distance");
            for &w in &adj[v] {
                if dist[w].is_none() {
                    dist[w] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Neighbor sets of the undirected simple projection.
    pub fn undirected(&self) -> Vec<BTreeSet<usize>> {
        let mut adj = vec![BTreeSet::new(); self.len()];
        for (a, outs) in self.out.iter().enumerate() {
            for &b in outs {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        adj
    }
}

pub(crate) fn is_connected(adj: &[BTreeSet<usize>]) -> bool {
    if adj.is_empty() {
        return true;
    }
    let lists: Vec<Vec<usize>> = adj.iter().map(|s| s.iter().copied().collect()).collect();
    Digraph::bfs(&lists, 0).iter().all(Option::is_some)
}
