use serde::{Deserialize, Serialize};

use super::patterns::{classify, PatternFlags};
use super::{is_connected, Digraph};
use crate::model::KnowledgeGraph;

/// Pivot magnitude below which a column counts as dependent in the
/// adjacency-rank elimination.
pub const RANK_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStatistics {
    pub node_count: usize,
    pub edge_count: usize,
    pub is_weakly_connected: bool,
    /// `2|E| / |V|`.
    pub average_degree: f64,
    /// Mean directed distance over ordered reachable pairs; 0 when none.
    pub average_path_length: f64,
    pub clustering_coefficient: f64,
    /// Longest directed distance over reachable pairs; 0 when none.
    pub diameter: usize,
    /// `|E| / (|V| (|V|-1))`.
    pub density: f64,
    pub triangle_count: usize,
    /// Numerical rank of the directed adjacency matrix.
    pub adjacency_rank: usize,
    pub pattern_flags: PatternFlags,
}

pub fn graph_statistics(kg: &KnowledgeGraph) -> GraphStatistics {
    let g = Digraph::from_kg(kg);
    let n = g.len();
    let m = g.edge_count();
    let undirected = g.undirected();

    let mut pairs = 0usize;
    let mut dist_sum = 0usize;
    let mut diameter = 0usize;
    for s in 0..n {
        for (t, d) in Digraph::bfs(&g.out, s).into_iter().enumerate() {
            if let (true, Some(d)) = (t != s, d) {
                pairs += 1;
                dist_sum += d;
                diameter = diameter.max(d);
            }
        }
    }

    let mut triangles = 0usize;
    let mut local_sum = 0.0;
    for (v, nbrs) in undirected.iter().enumerate() {
        let k = nbrs.len();
        let links = nbrs
            .iter()
            .flat_map(|&a| nbrs.iter().map(move |&b| (a, b)))
            .filter(|&(a, b)| a < b && undirected[a].contains(&b))
            .count();
        triangles += nbrs
            .iter()
            .filter(|&&a| a > v)
            .map(|&a| {
                nbrs.iter()
                    .filter(|&&b| b > a && undirected[a].contains(&b))
                    .count()
            })
            .sum::<usize>();
        if k >= 2 {
            local_sum += 2.0 * links as f64 / (k * (k - 1)) as f64;
        }
    }

    GraphStatistics {
        node_count: n,
        edge_count: m,
        is_weakly_connected: is_connected(&undirected),
        average_degree: if n == 0 {
            0.0
        } else {
            2.0 * m as f64 / n as f64
        },
        average_path_length: if pairs == 0 {
            0.0
        } else {
            dist_sum as f64 / pairs as f64
        },
        clustering_coefficient: if n == 0 { 0.0 } else { local_sum / n as f64 },
        diameter,
        density: if n < 2 {
            0.0
        } else {
            m as f64 / (n * (n - 1)) as f64
        },
        triangle_count: triangles,
        adjacency_rank: adjacency_rank(&g),
        pattern_flags: classify(&g),
    }
}

fn adjacency_rank(g: &Digraph) -> usize {
    let n = g.len();
    let mut a = vec![vec![0.0f64; n]; n];
    for (i, outs) in g.out.iter().enumerate() {
        for &j in outs {
            a[i][j] = 1.0;
        }
    }
    let mut rank = 0;
    for col in 0..n {
        if rank == n {
            break;
        }
        let pivot = (rank..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .expect("non-empty range");
        if a[pivot][col].abs() <= RANK_TOLERANCE {
            continue;
        }
        a.swap(rank, pivot);
        for row in 0..n {
            if row != rank {
                let factor = a[row][col] / a[rank][col];
                if factor != 0.0 {
                    let pivot_row = a[rank].clone();
                    for (x, p) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                        *x -= factor * p;
                    }
                }
            }
        }
        rank += 1;
    }
    rank
}
