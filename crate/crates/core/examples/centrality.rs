//! The four centralities on a small graph, plus top-fraction selection.

use gazegraph::metrics::{centrality, top_fraction_selection, Metric};
use gazegraph::{Edge, KnowledgeGraph, Node};

fn main() {
    let kg = KnowledgeGraph::new(
        "demo",
        vec![
            Node::new(1, "Person", "Reynolds"),
            Node::new(2, "Organization", "MGM"),
            Node::new(3, "Date", "1950"),
            Node::new(4, "Film", "Singin' in the Rain"),
        ],
        vec![
            Edge::new(1, 2, "signed with"),
            Edge::new(2, 3, "in"),
            Edge::new(1, 4, "starred in"),
            Edge::new(4, 2, "produced by"),
        ],
    );

    for metric in [
        Metric::Pagerank,
        Metric::Degree,
        Metric::Betweenness,
        Metric::Closeness,
    ] {
        let scores = centrality(&kg, metric);
        let top = top_fraction_selection(&scores, 0.5);
        let row: Vec<String> = scores
            .scores
            .iter()
            .map(|(id, s)| format!("{id}:{s:.4}"))
            .collect();
        println!("{metric:<12} {}   top half {:?}", row.join("  "), top.ids);
    }
}
