//! ROC curves and AUC of centrality scores against binary importance labels.
//!
//! The area is computed by the trapezoidal rule on integer true/false
//! positive counts, which makes it exactly the Mann-Whitney statistic with
//! ties counted one half.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredLabel {
    pub label: bool,
    pub score: f64,
}

impl ScoredLabel {
    pub fn new(label: bool, score: f64) -> Self {
        Self { label, score }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MissingClass {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AucError {
    #[error("AUC undefined: no {} labels", match .0 { MissingClass::Positive => "positive", MissingClass::Negative => "negative" })]
    SingleClass(MissingClass),
    #[error("non-finite score {0}")]
    NonFiniteScore(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Scores at or above this value are predicted positive. The first point
    /// uses `+inf`.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
    pub positives: usize,
    pub negatives: usize,
}

/// Sweeps a threshold over the distinct scores from high to low.
pub fn roc_curve(pairs: &[ScoredLabel]) -> Result<RocCurve, AucError> {
    if let Some(bad) = pairs.iter().find(|p| !p.score.is_finite()) {
        return Err(AucError::NonFiniteScore(bad.score));
    }
    let positives = pairs.iter().filter(|p| p.label).count();
    let negatives = pairs.len() - positives;
    if positives == 0 {
        return Err(AucError::SingleClass(MissingClass::Positive));
    }
    if negatives == 0 {
        return Err(AucError::SingleClass(MissingClass::Negative));
    }

    let mut sorted = pairs.to_vec();
    sorted.sort_by(|a, b| b.score.total_cmp(&a.score));

    let (p, n) = (positives as f64, negatives as f64);
    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    let (mut tp, mut fp) = (0u64, 0u64);
    // Twice the area in units of one positive-negative pair.
    let mut doubled_area: u128 = 0;
    let mut i = 0;
    while i < sorted.len() {
        let threshold = sorted[i].score;
        let (prev_tp, prev_fp) = (tp, fp);
        while i < sorted.len() && sorted[i].score == threshold {
            if sorted[i].label {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        doubled_area += u128::from(fp - prev_fp) * u128::from(tp + prev_tp);
        let point = RocPoint {
            fpr: fp as f64 / n,
            tpr: tp as f64 / p,
            threshold,
        };
        let last = points.last().expect("curve starts with the origin");
        if last.fpr != point.fpr || last.tpr != point.tpr {
            points.push(point);
        } else {
            // Same operating point reached at a lower threshold.
            points.last_mut().expect("non-empty").threshold = threshold;
        }
    }
    let auc = doubled_area as f64 / (2.0 * p * n);
    Ok(RocCurve {
        points,
        auc,
        positives,
        negatives,
    })
}

pub fn auc(pairs: &[ScoredLabel]) -> Result<f64, AucError> {
    roc_curve(pairs).map(|c| c.auc)
}

/// Writes `threshold,fpr,tpr` rows.
pub fn write_roc_csv<W: Write>(curve: &RocCurve, writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["threshold", "fpr", "tpr"])?;
    for pt in &curve.points {
        w.write_record([
            pt.threshold.to_string(),
            pt.fpr.to_string(),
            pt.tpr.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pairs(labels: &[u8], scores: &[f64]) -> Vec<ScoredLabel> {
        labels
            .iter()
            .zip(scores)
            .map(|(&l, &s)| ScoredLabel::new(l == 1, s))
            .collect()
    }

    /// Counts correctly ordered positive/negative pairs directly.
    fn pairwise(pairs: &[ScoredLabel]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for p in pairs.iter().filter(|p| p.label) {
            for q in pairs.iter().filter(|q| !q.label) {
                den += 1.0;
                if p.score > q.score {
                    num += 1.0;
                } else if p.score == q.score {
                    num += 0.5;
                }
            }
        }
        num / den
    }

    #[test]
    fn perfect_separation() {
        assert_eq!(
            auc(&pairs(&[1, 1, 0, 0], &[0.9, 0.8, 0.2, 0.1])).unwrap(),
            1.0
        );
    }

    #[test]
    fn all_tied_is_chance() {
        let curve = roc_curve(&pairs(&[1, 0, 1, 0], &[0.3; 4])).unwrap();
        assert_eq!(curve.auc, 0.5);
        assert_eq!(curve.points.len(), 2);
    }

    #[test]
    fn three_of_four_pairs_ordered() {
        let p = pairs(&[1, 0, 1, 0], &[0.9, 0.8, 0.7, 0.1]);
        assert_eq!(pairwise(&p), 0.75);
        assert_eq!(auc(&p).unwrap(), 0.75);
    }

    #[test]
    fn inverted_scores() {
        assert_eq!(
            auc(&pairs(&[1, 1, 0, 0], &[0.1, 0.2, 0.8, 0.9])).unwrap(),
            0.0
        );
    }

    #[test]
    fn single_class_errors_name_the_missing_class() {
        assert_eq!(
            auc(&pairs(&[0, 0], &[0.1, 0.2])),
            Err(AucError::SingleClass(MissingClass::Positive))
        );
        assert_eq!(
            auc(&pairs(&[1], &[0.1])),
            Err(AucError::SingleClass(MissingClass::Negative))
        );
    }

    #[test]
    fn nan_rejected() {
        assert!(matches!(
            auc(&pairs(&[1, 0], &[f64::NAN, 0.1])),
            Err(AucError::NonFiniteScore(_))
        ));
    }

    #[test]
    fn curve_endpoints_and_csv() {
        let curve = roc_curve(&pairs(&[1, 0, 1, 0], &[0.9, 0.8, 0.7, 0.1])).unwrap();
        let first = curve.points.first().unwrap();
        let last = curve.points.last().unwrap();
        assert_eq!((first.fpr, first.tpr), (0.0, 0.0));
        assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        let mut buf = Vec::new();
        write_roc_csv(&curve, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("threshold,fpr,tpr\ninf,0,0\n0.9,0,0.5\n"));
    }

    fn arb_pairs() -> impl Strategy<Value = Vec<ScoredLabel>> {
        proptest::collection::vec((any::<bool>(), 0u8..8), 2..200)
            .prop_filter("both classes", |v| {
                v.iter().any(|p| p.0) && v.iter().any(|p| !p.0)
            })
            .prop_map(|v| {
                v.into_iter()
                    .map(|(l, s)| ScoredLabel::new(l, f64::from(s) / 4.0))
                    .collect()
            })
    }

    proptest! {
        #[test]
        fn matches_pairwise_oracle(p in arb_pairs()) {
            prop_assert!((auc(&p).unwrap() - pairwise(&p)).abs() <= 1e-12);
        }

        #[test]
        fn negation_complements(p in arb_pairs()) {
            let neg: Vec<ScoredLabel> = p.iter().map(|x| ScoredLabel::new(x.label, -x.score)).collect();
            // Exact in rationals; the two float divisions may round by an ulp.
            prop_assert!((auc(&p).unwrap() + auc(&neg).unwrap() - 1.0).abs() <= 1e-15);
        }

        #[test]
        fn monotone_transform_invariant(p in arb_pairs()) {
            let t: Vec<ScoredLabel> = p.iter().map(|x| ScoredLabel::new(x.label, x.score.powi(3) + 7.0)).collect();
            prop_assert_eq!(auc(&p).unwrap(), auc(&t).unwrap());
        }

        #[test]
        fn curve_is_monotone(p in arb_pairs()) {
            let c = roc_curve(&p).unwrap();
            for w in c.points.windows(2) {
                prop_assert!(w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr);
            }
        }
    }
}
