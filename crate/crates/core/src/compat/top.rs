use std::fmt::Write as _;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::{build_pair_matrix, LabelItems, PairEncoding};
use crate::elements::{
    build_inverted_index, fit_background_with, retrieve_members, BackgroundStats, LdaClassifier,
    LdaSolver,
};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::fraction::Fraction;
use crate::miner::{mine_rules_with, Itemset, MiningConfig, Rule, TransactionDb};
use crate::textfmt::{fmt_f64, fmt_items, keyed, Lines};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopParams {
    pub k: usize,
    pub mining: MiningConfig,
    pub cap: usize,
    pub reg_scale: f64,
}

impl Default for TopParams {
    fn default() -> Self {
        TopParams {
            k: 10,
            mining: MiningConfig {
                min_support: Fraction::new(1, 2000),
                min_confidence: Fraction::new(3, 4),
                min_len: 3,
                max_len: 6,
                top_k_binarize: 10,
                consequent_items: None,
                cross_group_boundary: None,
            },
            cap: 4000,
            reg_scale: 0.01,
        }
    }
}

/// Share of a global element budget for one class pair, proportional to
/// its training volume and at least one.
pub fn top_budget(total_cap: usize, pair_volume: usize, total_volume: usize) -> usize {
    if total_volume == 0 {
        return total_cap;
    }
    ((total_cap as u128 * pair_volume as u128 / total_volume as u128) as usize).max(1)
}

/// Rules `antecedent ⇒ {compatible}` whose antecedent spans both classes,
/// truncated to the `cap` strongest in canonical order.
pub fn mine_top(
    db: &TransactionDb,
    mining: &MiningConfig,
    (n_a, n_b): (usize, usize),
    cap: usize,
    exec: &Exec,
) -> Result<Vec<Rule>> {
    if db.n_items() != n_a + n_b + 2 {
        return Err(Error::DimensionMismatch {
            expected: n_a + n_b + 2,
            found: db.n_items(),
        });
    }
    let labels = LabelItems::for_sizes(n_a, n_b);
    let config = MiningConfig {
        consequent_items: Some(vec![labels.compatible]),
        cross_group_boundary: Some(n_a as u32),
        ..mining.clone()
    };
    let mut rules = mine_rules_with(db, &config, exec)?;
    // the other label bin can never co-occur with the consequent
    rules.retain(|r| !r.antecedent.items.contains(&labels.incompatible));
    rules.truncate(cap);
    Ok(rules)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TopElement {
    pub element_id: u32,
    /// Antecedent over concatenated element ids, with its own cover count.
    pub pattern: Itemset,
    /// Pairs covered by the antecedent and labeled compatible.
    pub joint_count: u64,
    pub classifier: LdaClassifier,
}

impl TopElement {
    pub fn support(&self) -> Ratio<u64> {
        Ratio::new(self.joint_count, self.pattern.total)
    }

    pub fn confidence(&self) -> Ratio<u64> {
        Ratio::new(self.joint_count, self.pattern.count)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompatModel {
    pub class_a: String,
    pub class_b: String,
    pub n_a: usize,
    pub n_b: usize,
    pub k: usize,
    pub min_support: Fraction,
    pub min_confidence: Fraction,
    pub bank_a: String,
    pub bank_b: String,
    pub top_elements: Vec<TopElement>,
    pub config: String,
    /// Present right after training only; not persisted.
    pub background: Option<BackgroundStats>,
}

/// One classifier per rule: positives are the compatible pairs covered by
/// the antecedent, the background is every pair encoding of the class pair.
/// Rules without covering positives are skipped.
pub fn train_top(
    rules: &[Rule],
    pairs: &[(PairEncoding, u8)],
    k: usize,
    reg_scale: f64,
    exec: &Exec,
) -> Result<Vec<TopElement>> {
    let first = pairs.first().ok_or(Error::Empty("pair encodings"))?;
    let n_a = first.0.n_a;
    let n_b = first.0.encoding.len() - n_a;
    let db = build_pair_matrix(pairs, k, (n_a, n_b))?;
    let index = build_inverted_index(&db);
    let compatible = LabelItems::for_sizes(n_a, n_b).compatible;
    let rows: Vec<&[f64]> = pairs.iter().map(|(p, _)| p.encoding.as_slice()).collect();
    let background = fit_background_with(&rows, exec)?;
    let solver = LdaSolver::new(&background, reg_scale)?;
    let trained = exec.map(rules, |r| -> Result<Option<(u64, LdaClassifier)>> {
        let mut key = r.antecedent.items.clone();
        key.push(compatible);
        let tids = retrieve_members(&index, &key);
        if tids.is_empty() {
            return Ok(None);
        }
        let positives: Vec<&[f64]> = tids.iter().map(|&t| rows[t as usize]).collect();
        Ok(Some((tids.len() as u64, solver.train(&positives)?)))
    });
    let mut elements = Vec::new();
    for (rule, t) in rules.iter().zip(trained) {
        match t? {
            None => log::warn!(
                "skipping top-level pattern {:?}: no covering compatible pairs",
                rule.antecedent.items
            ),
            Some((joint, classifier)) => {
                if classifier.is_degenerate() {
                    log::warn!(
                        "top-level pattern {:?} has degenerate weights",
                        rule.antecedent.items
                    );
                }
                elements.push(TopElement {
                    element_id: elements.len() as u32,
                    pattern: rule.antecedent.clone(),
                    joint_count: joint,
                    classifier,
                });
            }
        }
    }
    Ok(elements)
}

/// Output of top-level mining for one class pair, before training.
#[derive(Clone, Debug, PartialEq)]
pub struct TopRules {
    pub class_a: String,
    pub class_b: String,
    pub n_a: usize,
    pub n_b: usize,
    pub k: usize,
    pub transactions: u64,
    pub compatible_count: u64,
    pub rules: Vec<Rule>,
    pub config: String,
}

impl TopRules {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "format top-rules/1");
        let _ = writeln!(out, "classes {} {}", self.class_a, self.class_b);
        let _ = writeln!(out, "sizes {} {}", self.n_a, self.n_b);
        let _ = writeln!(out, "k {}", self.k);
        let _ = writeln!(out, "transactions {}", self.transactions);
        let _ = writeln!(out, "compatible {}", self.compatible_count);
        let _ = writeln!(out, "count {}", self.rules.len());
        let _ = writeln!(out, "config {}", self.config);
        for r in &self.rules {
            let _ = writeln!(
                out,
                "rule items {} antecedent {} joint {}",
                fmt_items(&r.antecedent.items),
                r.antecedent.count,
                r.joint_count()
            );
        }
        out
    }

    pub fn from_text(text: &str, source: &str) -> Result<Self> {
        let mut l = Lines::new(text, source);
        l.expect_format("top-rules/1")?;
        let (class_a, class_b) = l.field2("classes")?;
        let (n_a, n_b) = l.field2("sizes")?;
        let n_a: usize = n_a.parse().map_err(|_| l.err("bad size"))?;
        let n_b: usize = n_b.parse().map_err(|_| l.err("bad size"))?;
        let k = l.parsed("k")?;
        let m: u64 = l.parsed("transactions")?;
        let y: u64 = l.parsed("compatible")?;
        let count: usize = l.parsed("count")?;
        let config = l.field("config")?.to_string();
        let compatible = LabelItems::for_sizes(n_a, n_b).compatible;
        let mut rules = Vec::with_capacity(count);
        for _ in 0..count {
            let v = l.field("rule")?;
            let f = keyed(&l, v, &["items", "antecedent", "joint"])?;
            let items = l.parse_items(f[0])?;
            let x: u64 = f[1].parse().map_err(|_| l.err("bad count"))?;
            let joint: u64 = f[2].parse().map_err(|_| l.err("bad count"))?;
            if x == 0 || joint > x || m == 0 {
                return Err(l.err("inconsistent rule counts"));
            }
            rules.push(Rule {
                antecedent: Itemset {
                    items,
                    count: x,
                    total: m,
                },
                consequent: Itemset {
                    items: vec![compatible],
                    count: y,
                    total: m,
                },
                support: Ratio::new(joint, m),
                confidence: Ratio::new(joint, x),
            });
        }
        if !l.at_end() {
            return Err(l.err("trailing content"));
        }
        Ok(TopRules {
            class_a: class_a.to_string(),
            class_b: class_b.to_string(),
            n_a,
            n_b,
            k,
            transactions: m,
            compatible_count: y,
            rules,
            config,
        })
    }
}

impl CompatModel {
    pub fn dim(&self) -> usize {
        self.n_a + self.n_b
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "format compat-model/1");
        let _ = writeln!(out, "classes {} {}", self.class_a, self.class_b);
        let _ = writeln!(out, "sizes {} {}", self.n_a, self.n_b);
        let _ = writeln!(out, "k {}", self.k);
        let _ = writeln!(
            out,
            "thresholds {} {}",
            self.min_support, self.min_confidence
        );
        let _ = writeln!(out, "banks {} {}", self.bank_a, self.bank_b);
        let _ = writeln!(out, "count {}", self.top_elements.len());
        let _ = writeln!(out, "config {}", self.config);
        for e in &self.top_elements {
            let _ = writeln!(
                out,
                "element {} items {} antecedent {} joint {} total {} bias {}",
                e.element_id,
                fmt_items(&e.pattern.items),
                e.pattern.count,
                e.joint_count,
                e.pattern.total,
                fmt_f64(e.classifier.bias)
            );
            let w: Vec<String> = e.classifier.weights.iter().map(|&v| fmt_f64(v)).collect();
            let _ = writeln!(out, "weights {}", w.join(" "));
        }
        out
    }

    pub fn from_text(text: &str, source: &str) -> Result<Self> {
        let mut l = Lines::new(text, source);
        l.expect_format("compat-model/1")?;
        let (class_a, class_b) = l.field2("classes")?;
        let (n_a, n_b) = l.field2("sizes")?;
        let n_a: usize = n_a.parse().map_err(|_| l.err("bad size"))?;
        let n_b: usize = n_b.parse().map_err(|_| l.err("bad size"))?;
        let k = l.parsed("k")?;
        let (s, c) = l.field2("thresholds")?;
        let min_support: Fraction = s.parse()?;
        let min_confidence: Fraction = c.parse()?;
        let (bank_a, bank_b) = l.field2("banks")?;
        let count: usize = l.parsed("count")?;
        let config = l.field("config")?.to_string();
        let mut top_elements = Vec::with_capacity(count);
        for expected in 0..count {
            let head = l.field("element")?;
            let (id, rest) = head
                .split_once(' ')
                .ok_or_else(|| l.err("bad element line"))?;
            let element_id: u32 = id.parse().map_err(|_| l.err("bad element id"))?;
            if element_id as usize != expected {
                return Err(l.err("element ids must be dense"));
            }
            let f = keyed(&l, rest, &["items", "antecedent", "joint", "total", "bias"])?;
            let items = l.parse_items(f[0])?;
            if items.iter().any(|&i| i as usize >= n_a + n_b) {
                return Err(l.err("pattern item outside the pair encoding"));
            }
            let pattern = Itemset {
                items,
                count: f[1].parse().map_err(|_| l.err("bad count"))?,
                total: f[3].parse().map_err(|_| l.err("bad total"))?,
            };
            let joint_count = f[2].parse().map_err(|_| l.err("bad count"))?;
            let bias = l.parse_f64(f[4])?;
            let weights = {
                let w = l.field("weights")?;
                l.parse_f64s(w, n_a + n_b)?
            };
            top_elements.push(TopElement {
                element_id,
                pattern,
                joint_count,
                classifier: LdaClassifier { weights, bias },
            });
        }
        if !l.at_end() {
            return Err(l.err("trailing content"));
        }
        Ok(CompatModel {
            class_a: class_a.to_string(),
            class_b: class_b.to_string(),
            n_a,
            n_b,
            k,
            min_support,
            min_confidence,
            bank_a: bank_a.to_string(),
            bank_b: bank_b.to_string(),
            top_elements,
            config,
            background: None,
        })
    }
}
