use std::collections::BTreeSet;

use super::CentralityScores;

/// Nodes a centrality metric predicts to be important.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictedImportantSet {
    pub ids: BTreeSet<u32>,
}

impl PredictedImportantSet {
    pub fn contains(&self, id: u32) -> bool {
        self.ids.contains(&id)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Top `ceil(fraction * |V|)` nodes by score, ties at the cut going to the
/// smaller node id.
///
/// # Panics
/// When `fraction` is outside `(0, 1]`.
pub fn top_fraction_selection(scores: &CentralityScores, fraction: f64) -> PredictedImportantSet {
    assert!(
        fraction > 0.0 && fraction <= 1.0,
        "fraction must be in (0, 1], got {fraction}"
    );
    let n = scores.scores.len();
    // Guard against products such as 0.7 * 10 = 7.000000000000001.
    let k = ((fraction * n as f64) - 1e-9).ceil().max(0.0) as usize;
    let mut ranked: Vec<(u32, f64)> = scores.scores.iter().map(|(&id, &s)| (id, s)).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    PredictedImportantSet {
        ids: ranked
            .into_iter()
            .take(k.min(n))
            .map(|(id, _)| id)
            .collect(),
    }
}
