use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Digraph;
use crate::model::KnowledgeGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Pagerank,
    Degree,
    Betweenness,
    Closeness,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::Pagerank,
        Metric::Degree,
        Metric::Betweenness,
        Metric::Closeness,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Pagerank => "pagerank",
            Metric::Degree => "degree",
            Metric::Betweenness => "betweenness",
            Metric::Closeness => "closeness",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                format!(
                    "unknown metric {s:?} (expected pagerank, degree, betweenness or closeness)"
                )
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralityScores {
    pub metric: Metric,
    pub scores: BTreeMap<u32, f64>,
}

impl CentralityScores {
    fn from_vec(metric: Metric, g: &Digraph, values: Vec<f64>) -> Self {
        Self {
            metric,
            scores: g.ids.iter().copied().zip(values).collect(),
        }
    }

    pub fn get(&self, id: u32) -> Option<f64> {
        self.scores.get(&id).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PageRankParams {
    pub damping: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for PageRankParams {
    fn default() -> Self {
        Self {
            damping: 0.85,
            tolerance: 1e-10,
            max_iterations: 1000,
        }
    }
}

pub fn centrality(kg: &KnowledgeGraph, metric: Metric) -> CentralityScores {
    match metric {
        Metric::Pagerank => pagerank(kg, &PageRankParams::default()),
        Metric::Degree => degree_centrality(kg),
        Metric::Betweenness => betweenness_centrality(kg),
        Metric::Closeness => closeness_centrality(kg),
    }
}

/// Power-iteration PageRank on the unweighted digraph.
///
/// Rank held by nodes without out-edges is spread uniformly over all nodes.
/// Iteration stops once the L1 change drops below `tolerance` or after
/// `max_iterations` sweeps.
pub fn pagerank(kg: &KnowledgeGraph, params: &PageRankParams) -> CentralityScores {
    let g = Digraph::from_kg(kg);
    let n = g.len();
    if n == 0 {
        return CentralityScores::from_vec(Metric::Pagerank, &g, Vec::new());
    }
    let d = params.damping;
    let nf = n as f64;
    let mut rank = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    for _ in 0..params.max_iterations {
        let dangling: f64 = (0..n)
            .filter(|&v| g.out[v].is_empty())
            .map(|v| rank[v])
            .sum();
        let base = (1.0 - d) / nf + d * dangling / nf;
        next.iter_mut().for_each(|x| *x = base);
        for (v, outs) in g.out.iter().enumerate() {
            if outs.is_empty() {
                continue;
            }
            let share = d * rank[v] / outs.len() as f64;
            for &w in outs {
                next[w] += share;
            }
        }
        let change: f64 = rank.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut rank, &mut next);
        if change < params.tolerance {
            break;
        }
    }
    let total: f64 = rank.iter().sum();
    rank.iter_mut().for_each(|x| *x /= total);
    CentralityScores::from_vec(Metric::Pagerank, &g, rank)
}

/// `(in-degree + out-degree) / (|V| - 1)`; zero for a single node.
pub fn degree_centrality(kg: &KnowledgeGraph) -> CentralityScores {
    let g = Digraph::from_kg(kg);
    let n = g.len();
    let values = (0..n)
        .map(|v| {
            if n < 2 {
                0.0
            } else {
                (g.out[v].len() + g.inc[v].len()) as f64 / (n - 1) as f64
            }
        })
        .collect();
    CentralityScores::from_vec(Metric::Degree, &g, values)
}

/// Directed shortest-path betweenness by dependency accumulation over BFS
/// shortest-path DAGs, normalized by `(|V|-1)(|V|-2)`.
pub fn betweenness_centrality(kg: &KnowledgeGraph) -> CentralityScores {
    let g = Digraph::from_kg(kg);
    let n = g.len();
    let mut bc = vec![0.0; n];
    if n >= 3 {
        for s in 0..n {
            let mut order = Vec::with_capacity(n);
            let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
            let mut sigma = vec![0.0f64; n];
            let mut dist: Vec<Option<usize>> = vec![None; n];
            sigma[s] = 1.0;
            dist[s] = Some(0);
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                order.push(v);
                let dv = dist[v].expect("queued");
                for &w in &g.out[v] {
                    if dist[w].is_none() {
                        dist[w] = Some(dv + 1);
                        queue.push_back(w);
                    }
                    if dist[w] == Some(dv + 1) {
                        sigma[w] += sigma[v];
                        preds[w].push(v);
                    }
                }
            }
            let mut delta = vec![0.0f64; n];
            while let Some(w) = order.pop() {
                for &v in &preds[w] {
                    delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
                }
                if w != s {
                    bc[w] += delta[w];
                }
            }
        }
        let norm = ((n - 1) * (n - 2)) as f64;
        bc.iter_mut().for_each(|x| *x /= norm);
    }
    CentralityScores::from_vec(Metric::Betweenness, &g, bc)
}

/// Closeness over incoming distances, scaled by the share of nodes that can
/// reach `v`: `(r / (|V|-1)) * (r / sum_d)`, zero when nothing reaches `v`.
pub fn closeness_centrality(kg: &KnowledgeGraph) -> CentralityScores {
    let g = Digraph::from_kg(kg);
    let n = g.len();
    let values = (0..n)
        .map(|v| {
            let dist = Digraph::bfs(&g.inc, v);
            let (reach, sum) = dist
                .iter()
                .enumerate()
                .filter(|(u, _)| *u != v)
                .filter_map(|(_, d)| *d)
                .fold((0usize, 0usize), |(r, s), d| (r + 1, s + d));
            if reach == 0 || n < 2 {
                0.0
            } else {
                let r = reach as f64;
                (r / (n - 1) as f64) * (r / sum as f64)
            }
        })
        .collect();
    CentralityScores::from_vec(Metric::Closeness, &g, values)
}
