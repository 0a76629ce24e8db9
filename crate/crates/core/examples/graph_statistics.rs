//! Whole-graph statistics and shape flags for a few small graphs.

use gazegraph::metrics::graph_statistics;
use gazegraph::KnowledgeGraph;

type Shape = (&'static str, u32, &'static [(u32, u32)]);

fn main() {
    let shapes: [Shape; 5] = [
        ("triangle", 3, &[(1, 2), (2, 3), (3, 1)]),
        ("star", 5, &[(1, 2), (1, 3), (1, 4), (1, 5)]),
        ("path", 4, &[(1, 2), (2, 3), (3, 4)]),
        ("K4", 4, &[(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]),
        ("split", 4, &[(1, 2), (3, 4)]),
    ];
    for (name, n, edges) in shapes {
        let s = graph_statistics(&KnowledgeGraph::skeleton(n, edges));
        println!(
            "{name:<9} n={} m={} connected={} deg={:.2} path={:.3} diam={} density={:.3} cc={:.3} tri={} rank={} {:?}",
            s.node_count,
            s.edge_count,
            s.is_weakly_connected,
            s.average_degree,
            s.average_path_length,
            s.diameter,
            s.density,
            s.clustering_coefficient,
            s.triangle_count,
            s.adjacency_rank,
            s.pattern_flags.names()
        );
    }
}
