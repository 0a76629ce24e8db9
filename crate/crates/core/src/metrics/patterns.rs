use serde::{Deserialize, Serialize};

use super::{is_connected, Digraph};
use crate::model::KnowledgeGraph;

/// Shape classes of the undirected simple projection. The flags are
/// independent; a triangle is both a cycle and complete, a 3-node star is
/// also a path.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternFlags {
    pub star: bool,
    pub cycle: bool,
    pub path: bool,
    pub complete: bool,
}

impl PatternFlags {
    pub fn names(&self) -> Vec<&'static str> {
        [
            (self.star, "star"),
            (self.cycle, "cycle"),
            (self.path, "path"),
            (self.complete, "complete"),
        ]
        .into_iter()
        .filter_map(|(on, name)| on.then_some(name))
        .collect()
    }
}

pub fn classify_patterns(kg: &KnowledgeGraph) -> PatternFlags {
    classify(&Digraph::from_kg(kg))
}

pub(crate) fn classify(g: &Digraph) -> PatternFlags {
    let n = g.len();
    if n < 2 {
        return PatternFlags::default();
    }
    let adj = g.undirected();
    let degree: Vec<usize> = adj.iter().map(|s| s.len()).collect();
    let connected = is_connected(&adj);
    let count = |d: usize| degree.iter().filter(|&&x| x == d).count();

    let star = n >= 3 && degree.iter().any(|&d| d == n - 1) && count(1) == n - 1;
    let cycle = n >= 3 && connected && count(2) == n;
    let path = connected && count(1) == 2 && count(2) == n - 2;
    let complete = n >= 3 && degree.iter().all(|&d| d == n - 1);
    PatternFlags {
        star,
        cycle,
        path,
        complete,
    }
}
