//! ROC curve and AUC over scored labels, written as CSV to stdout.

use gazegraph::eval::{auc, roc_curve, write_roc_csv, ScoredLabel};

fn main() {
    let pairs = [
        ScoredLabel::new(true, 0.9),
        ScoredLabel::new(false, 0.8),
        ScoredLabel::new(true, 0.7),
        ScoredLabel::new(true, 0.5),
        ScoredLabel::new(false, 0.5),
        ScoredLabel::new(false, 0.2),
    ];
    let curve = roc_curve(&pairs).expect("both classes present");
    println!(
        "{} positives, {} negatives, AUC {:.4}",
        curve.positives, curve.negatives, curve.auc
    );
    write_roc_csv(&curve, std::io::stdout()).expect("stdout");

    // One class only: AUC is undefined rather than 0.5.
    let single = [ScoredLabel::new(true, 0.3), ScoredLabel::new(true, 0.6)];
    println!("single class: {:?}", auc(&single));
}
