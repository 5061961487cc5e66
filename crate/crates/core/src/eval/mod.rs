//! ROC/AUC evaluation and the planted synthetic benchmark.

mod bench;

pub use bench::{generate_benchmark, Benchmark};

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::compat::{canonical_pair, EncodingSet, Scorer};
use crate::corpus::{Catalog, CompatPair};
use crate::error::{Error, Result};
use crate::exec::Exec;

/// Published AUCs on the original clothing data, shown for context only.
pub const REFERENCE_AUC_ELEMENTS: f64 = 0.655;
pub const REFERENCE_AUC_IMAGE_BASELINE: f64 = 0.804;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredPair {
    pub pair: CompatPair,
    pub score: f64,
}

/// Mann-Whitney statistic as an exact fraction `(2·concordant + tied, 2·P·N)`.
pub fn auc_fraction(scores: &[(f64, bool)]) -> Result<(u128, u128)> {
    let positives = scores.iter().filter(|s| s.1).count();
    let negatives = scores.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass {
            positives,
            negatives,
        });
    }
    if let Some(i) = scores.iter().position(|s| !s.0.is_finite()) {
        return Err(Error::NonFinite {
            value: scores[i].0,
            position: i,
        });
    }
    let mut sorted: Vec<(f64, bool)> = scores.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut numer: u128 = 0;
    let mut neg_below: u128 = 0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        let (mut p, mut n) = (0u128, 0u128);
        while j < sorted.len() && sorted[j].0 == sorted[i].0 {
            if sorted[j].1 {
                p += 1;
            } else {
                n += 1;
            }
            j += 1;
        }
        numer += p * (2 * neg_below + n);
        neg_below += n;
        i = j;
    }
    Ok((numer, 2 * positives as u128 * negatives as u128))
}

pub fn roc_auc(scored: &[ScoredPair]) -> Result<f64> {
    let v: Vec<(f64, bool)> = scored
        .iter()
        .map(|s| (s.score, s.pair.is_compatible()))
        .collect();
    let (n, d) = auc_fraction(&v)?;
    Ok(n as f64 / d as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub threshold: f64,
}

/// One point per distinct score, highest threshold first, starting at (0, 0).
pub fn roc_points(scored: &[ScoredPair]) -> Result<Vec<RocPoint>> {
    let positives = scored.iter().filter(|s| s.pair.is_compatible()).count();
    let negatives = scored.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass {
            positives,
            negatives,
        });
    }
    let mut sorted: Vec<(f64, bool)> = scored
        .iter()
        .map(|s| (s.score, s.pair.is_compatible()))
        .collect();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut out = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let t = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == t {
            if sorted[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        out.push(RocPoint {
            fpr: fp as f64 / negatives as f64,
            tpr: tp as f64 / positives as f64,
            threshold: t,
        });
    }
    Ok(out)
}

pub fn roc_to_text(points: &[RocPoint]) -> String {
    let mut out = String::from("# fpr tpr threshold\n");
    for p in points {
        let _ = writeln!(out, "{} {} {}", p.fpr, p.tpr, p.threshold);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairBreakdown {
    /// Undefined when the class pair has only one label among its test pairs.
    pub auc: Option<f64>,
    pub positives: usize,
    pub negatives: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub auc: f64,
    pub positives: usize,
    pub negatives: usize,
    pub per_pair: BTreeMap<(String, String), PairBreakdown>,
    /// Test pairs whose class pair has no model, by class pair.
    pub skipped: BTreeMap<(String, String), usize>,
}

impl EvalReport {
    pub fn skipped_total(&self) -> usize {
        self.skipped.values().sum()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# visual compatibility evaluation");
        let _ = writeln!(
            out,
            "# published reference (not reproduced): elements {REFERENCE_AUC_ELEMENTS}, image-level baseline {REFERENCE_AUC_IMAGE_BASELINE}"
        );
        let _ = writeln!(out, "auc {}", self.auc);
        let _ = writeln!(out, "positives {}", self.positives);
        let _ = writeln!(out, "negatives {}", self.negatives);
        let _ = writeln!(out, "skipped {}", self.skipped_total());
        for ((a, b), p) in &self.per_pair {
            let auc = p.auc.map_or("undefined".to_string(), |v| v.to_string());
            let _ = writeln!(
                out,
                "pair {a} {b} auc {auc} positives {} negatives {}",
                p.positives, p.negatives
            );
        }
        for ((a, b), n) in &self.skipped {
            let _ = writeln!(out, "skipped_pair {a} {b} count {n}");
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub report: EvalReport,
    pub scored: Vec<ScoredPair>,
}

fn class_of<'a>(catalog: &'a Catalog, item: &str) -> Result<&'a str> {
    catalog
        .get(item)
        .map(|c| c.class_label.as_str())
        .ok_or_else(|| Error::UnknownItem(item.to_string()))
}

/// Scores test pairs from precomputed per-class encodings. Pairs without a
/// class-pair model are skipped and counted.
pub fn evaluate(
    pairs: &[CompatPair],
    catalog: &Catalog,
    encodings: &BTreeMap<String, EncodingSet>,
    scorer: &Scorer,
    exec: &Exec,
) -> Result<Evaluation> {
    let mut skipped = BTreeMap::new();
    let mut todo = Vec::new();
    for p in pairs {
        let ca = class_of(catalog, &p.item_a)?;
        let cb = class_of(catalog, &p.item_b)?;
        let ((x, y), _) = canonical_pair(ca, cb);
        let key = (x.to_string(), y.to_string());
        if scorer.has_model(ca, cb) {
            todo.push((p, ca, cb, key));
        } else {
            *skipped.entry(key).or_insert(0) += 1;
        }
    }
    if todo.is_empty() {
        return Err(Error::Empty("scorable test pairs"));
    }
    let lookup = |class: &str, item: &str| {
        encodings
            .get(class)
            .and_then(|set| set.get(item))
            .ok_or_else(|| Error::UnknownItem(format!("{item} has no {class} encoding")))
    };
    let scores = exec.try_map(&todo, |(p, ca, cb, _)| {
        let (s, _) =
            scorer.score_encodings(ca, lookup(ca, &p.item_a)?, cb, lookup(cb, &p.item_b)?)?;
        Ok(s)
    })?;
    let scored: Vec<ScoredPair> = todo
        .iter()
        .zip(&scores)
        .map(|((p, ..), &score)| ScoredPair {
            pair: (*p).clone(),
            score,
        })
        .collect();
    let mut groups: BTreeMap<(String, String), Vec<ScoredPair>> = BTreeMap::new();
    for ((.., key), s) in todo.iter().zip(&scored) {
        groups.entry(key.clone()).or_default().push(s.clone());
    }
    let per_pair = groups
        .into_iter()
        .map(|(key, group)| {
            let positives = group.iter().filter(|s| s.pair.is_compatible()).count();
            let b = PairBreakdown {
                auc: roc_auc(&group).ok(),
                positives,
                negatives: group.len() - positives,
            };
            (key, b)
        })
        .collect();
    let positives = scored.iter().filter(|s| s.pair.is_compatible()).count();
    let report = EvalReport {
        auc: roc_auc(&scored)?,
        positives,
        negatives: scored.len() - positives,
        per_pair,
        skipped,
    };
    Ok(Evaluation { report, scored })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(score: f64, label: u8) -> ScoredPair {
        ScoredPair {
            pair: CompatPair {
                item_a: "a".into(),
                item_b: "b".into(),
                label,
            },
            score,
        }
    }

    fn auc(scores: &[f64], labels: &[u8]) -> f64 {
        let v: Vec<_> = scores.iter().zip(labels).map(|(&s, &l)| sp(s, l)).collect();
        roc_auc(&v).unwrap()
    }

    #[test]
    fn examples() {
        assert_eq!(auc(&[0.9, 0.8, 0.3, 0.1], &[1, 1, 0, 0]), 1.0);
        assert_eq!(auc(&[0.9, 0.8, 0.3, 0.1], &[1, 0, 1, 0]), 0.75);
        assert_eq!(auc(&[0.4; 6], &[1, 0, 1, 0, 0, 1]), 0.5);
        assert!(roc_auc(&[sp(0.1, 1), sp(0.2, 1)]).is_err());
        assert!(roc_auc(&[sp(f64::NAN, 1), sp(0.2, 0)]).is_err());
    }

    #[test]
    fn roc_curve_ends() {
        let v = [sp(0.9, 1), sp(0.8, 0), sp(0.8, 1), sp(0.1, 0)];
        let pts = roc_points(&v).unwrap();
        assert_eq!(pts.len(), 4);
        assert_eq!((pts[0].fpr, pts[0].tpr), (0.0, 0.0));
        assert_eq!((pts[3].fpr, pts[3].tpr), (1.0, 1.0));
        assert_eq!((pts[2].fpr, pts[2].tpr), (0.5, 1.0));
        // trapezoid area equals the rank statistic
        let area: f64 = pts
            .windows(2)
            .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
            .sum();
        assert!((area - roc_auc(&v).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn report_text_lists_counts() {
        let mut per_pair = BTreeMap::new();
        per_pair.insert(
            ("a".to_string(), "b".to_string()),
            PairBreakdown {
                auc: Some(0.75),
                positives: 2,
                negatives: 2,
            },
        );
        let mut skipped = BTreeMap::new();
        skipped.insert(("a".to_string(), "c".to_string()), 3);
        let r = EvalReport {
            auc: 0.75,
            positives: 2,
            negatives: 2,
            per_pair,
            skipped,
        };
        let t = r.to_text();
        assert!(t.contains("0.655") && t.contains("0.804"));
        assert!(t.contains("pair a b auc 0.75 positives 2 negatives 2"));
        assert!(t.contains("skipped 3\n"));
    }
}
