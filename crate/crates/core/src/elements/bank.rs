use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{
    build_inverted_index, dedup_patterns, fit_background_with, retrieve_members, select_elements,
    BackgroundStats, LdaClassifier, LdaSolver,
};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::features::RegionFeature;
use crate::miner::{matrix_from_rows, mine_frequent_with, Itemset, MiningConfig, TransactionDb};
use crate::textfmt::{fmt_f64, fmt_items, keyed, Lines};

/// Regions of every image of one class, in catalog order.
pub type ClassRegions = [(String, Vec<RegionFeature>)];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseParams {
    pub k: usize,
    pub mining: MiningConfig,
    pub cap: usize,
    pub reg_scale: f64,
}

impl Default for BaseParams {
    fn default() -> Self {
        BaseParams {
            k: 20,
            mining: MiningConfig::default(),
            cap: 4000,
            reg_scale: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MemberRef {
    pub item_id: String,
    pub region: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseElement {
    pub element_id: u32,
    pub class_label: String,
    pub pattern: Itemset,
    /// Covering regions; empty when the element was loaded from disk.
    pub members: Vec<MemberRef>,
    pub member_count: usize,
    pub classifier: LdaClassifier,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaseBank {
    pub class_label: String,
    pub dim: usize,
    pub k: usize,
    pub elements: Vec<BaseElement>,
    /// Opaque provenance line echoed into the model file.
    pub config: String,
}

/// Deduplicated, capped patterns for one class together with the size of
/// the transaction database they were mined from.
#[derive(Clone, Debug, PartialEq)]
pub struct BasePatterns {
    pub class_label: String,
    pub dim: usize,
    pub k: usize,
    pub transactions: u64,
    pub patterns: Vec<Itemset>,
    pub config: String,
}

fn flatten(regions: &ClassRegions) -> (Vec<&RegionFeature>, Vec<MemberRef>) {
    let mut feats = Vec::new();
    let mut refs = Vec::new();
    for (item, rs) in regions {
        for (i, r) in rs.iter().enumerate() {
            feats.push(r);
            refs.push(MemberRef {
                item_id: item.clone(),
                region: i as u32,
            });
        }
    }
    (feats, refs)
}

fn base_db(feats: &[&RegionFeature], k: usize) -> Result<TransactionDb> {
    matrix_from_rows(feats.iter().map(|r| r.activation.as_slice()), k)
}

pub fn mine_base_patterns(
    class_label: &str,
    regions: &ClassRegions,
    params: &BaseParams,
    exec: &Exec,
) -> Result<BasePatterns> {
    let (feats, _) = flatten(regions);
    let db = base_db(&feats, params.k)?;
    let mined = mine_frequent_with(&db, &params.mining, exec)?;
    log::info!(
        "{class_label}: {} transactions, {} frequent patterns",
        db.len(),
        mined.len()
    );
    let patterns = select_elements(dedup_patterns(mined), params.cap);
    Ok(BasePatterns {
        class_label: class_label.to_string(),
        dim: db.n_items(),
        k: params.k,
        transactions: db.len() as u64,
        patterns,
        config: String::new(),
    })
}

/// One classifier per pattern, trained on the regions whose top-`k` set
/// contains the pattern. `background` defaults to the class's own regions.
pub fn train_base_bank(
    regions: &ClassRegions,
    patterns: &BasePatterns,
    reg_scale: f64,
    background: Option<&BackgroundStats>,
    exec: &Exec,
) -> Result<BaseBank> {
    let (feats, refs) = flatten(regions);
    let db = base_db(&feats, patterns.k)?;
    if db.len() as u64 != patterns.transactions || db.n_items() != patterns.dim {
        return Err(Error::Config(format!(
            "patterns for {} were mined from {} transactions of dim {}, regions give {} of dim {}",
            patterns.class_label,
            patterns.transactions,
            patterns.dim,
            db.len(),
            db.n_items()
        )));
    }
    let index = build_inverted_index(&db);
    let rows: Vec<&[f32]> = feats.iter().map(|r| r.activation.as_slice()).collect();
    let fitted;
    let background = match background {
        Some(b) => b,
        None => {
            fitted = fit_background_with(&rows, exec)?;
            &fitted
        }
    };
    let solver = LdaSolver::new(background, reg_scale)?;
    let trained = exec.map(&patterns.patterns, |p| {
        let tids = retrieve_members(&index, &p.items);
        let positives: Vec<&[f32]> = tids.iter().map(|&t| rows[t as usize]).collect();
        let classifier = solver.train(&positives)?;
        Ok((tids, classifier))
    });
    let mut elements = Vec::with_capacity(trained.len());
    for (id, (pattern, result)) in patterns.patterns.iter().zip(trained).enumerate() {
        let (tids, classifier): (Vec<u32>, LdaClassifier) = result?;
        elements.push(BaseElement {
            element_id: id as u32,
            class_label: patterns.class_label.clone(),
            pattern: pattern.clone(),
            member_count: tids.len(),
            members: tids.iter().map(|&t| refs[t as usize].clone()).collect(),
            classifier,
        });
    }
    Ok(BaseBank {
        class_label: patterns.class_label.clone(),
        dim: patterns.dim,
        k: patterns.k,
        elements,
        config: patterns.config.clone(),
    })
}

impl BaseBank {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn classifiers(&self) -> impl Iterator<Item = &LdaClassifier> {
        self.elements.iter().map(|e| &e.classifier)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "format base-bank/1");
        let _ = writeln!(out, "class {}", self.class_label);
        let _ = writeln!(out, "dim {}", self.dim);
        let _ = writeln!(out, "k {}", self.k);
        let _ = writeln!(out, "count {}", self.elements.len());
        let _ = writeln!(out, "config {}", self.config);
        for e in &self.elements {
            let _ = writeln!(
                out,
                "element {} items {} count {} total {} members {} bias {}",
                e.element_id,
                fmt_items(&e.pattern.items),
                e.pattern.count,
                e.pattern.total,
                e.member_count,
                fmt_f64(e.classifier.bias)
            );
            let w: Vec<String> = e.classifier.weights.iter().map(|&v| fmt_f64(v)).collect();
            let _ = writeln!(out, "weights {}", w.join(" "));
        }
        out
    }

    pub fn from_text(text: &str, source: &str) -> Result<Self> {
        let mut l = Lines::new(text, source);
        l.expect_format("base-bank/1")?;
        let class_label = l.field("class")?.to_string();
        let dim: usize = l.parsed("dim")?;
        let k: usize = l.parsed("k")?;
        let count: usize = l.parsed("count")?;
        let config = l.field("config")?.to_string();
        let mut elements = Vec::with_capacity(count);
        for expected_id in 0..count {
            let head = l.field("element")?;
            let (id, rest) = head
                .split_once(' ')
                .ok_or_else(|| l.err("bad element line"))?;
            let f = keyed(&l, rest, &["items", "count", "total", "members", "bias"])?;
            let element_id: u32 = id.parse().map_err(|_| l.err("bad element id"))?;
            if element_id as usize != expected_id {
                return Err(l.err(format!("element ids must be dense, found {element_id}")));
            }
            let pattern = Itemset {
                items: l.parse_items(f[0])?,
                count: f[1].parse().map_err(|_| l.err("bad count"))?,
                total: f[2].parse().map_err(|_| l.err("bad total"))?,
            };
            let member_count = f[3].parse().map_err(|_| l.err("bad member count"))?;
            let bias = l.parse_f64(f[4])?;
            let w = l.field("weights")?;
            let weights = l.parse_f64s(w, dim)?;
            elements.push(BaseElement {
                element_id,
                class_label: class_label.clone(),
                pattern,
                members: Vec::new(),
                member_count,
                classifier: LdaClassifier { weights, bias },
            });
        }
        if !l.at_end() {
            return Err(l.err("trailing content after last element"));
        }
        Ok(BaseBank {
            class_label,
            dim,
            k,
            elements,
            config,
        })
    }
}

impl BasePatterns {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "format base-patterns/1");
        let _ = writeln!(out, "class {}", self.class_label);
        let _ = writeln!(out, "dim {}", self.dim);
        let _ = writeln!(out, "k {}", self.k);
        let _ = writeln!(out, "transactions {}", self.transactions);
        let _ = writeln!(out, "count {}", self.patterns.len());
        let _ = writeln!(out, "config {}", self.config);
        for p in &self.patterns {
            let _ = writeln!(out, "pattern {} {}", fmt_items(&p.items), p.count);
        }
        out
    }

    pub fn from_text(text: &str, source: &str) -> Result<Self> {
        let mut l = Lines::new(text, source);
        l.expect_format("base-patterns/1")?;
        let class_label = l.field("class")?.to_string();
        let dim = l.parsed("dim")?;
        let k = l.parsed("k")?;
        let transactions: u64 = l.parsed("transactions")?;
        let count: usize = l.parsed("count")?;
        let config = l.field("config")?.to_string();
        let mut patterns = Vec::with_capacity(count);
        for _ in 0..count {
            let v = l.field("pattern")?;
            let (items, c) = v.split_once(' ').ok_or_else(|| l.err("bad pattern line"))?;
            patterns.push(Itemset {
                items: l.parse_items(items)?,
                count: c.parse().map_err(|_| l.err("bad count"))?,
                total: transactions,
            });
        }
        if !l.at_end() {
            return Err(l.err("trailing content after last pattern"));
        }
        Ok(BasePatterns {
            class_label,
            dim,
            k,
            transactions,
            patterns,
            config,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{synth_features, CompatTable, Sampling, SyntheticSpec};
    use crate::fraction::Fraction;
    use crate::miner::binarize_topk;

    fn spec() -> SyntheticSpec {
        let classes = vec!["a".to_string(), "b".to_string()];
        SyntheticSpec {
            dim: 24,
            compat_table: CompatTable::identity(&classes, 2),
            classes,
            styles_per_class: 2,
            signature_size: 3,
            boost_range: (0.5, 1.0),
            noise_level: 0.1,
            seed: 3,
            image_size: (256, 256),
            sampling: Sampling::default(),
        }
    }

    fn regions() -> Vec<(String, Vec<RegionFeature>)> {
        let s = spec();
        (0..20)
            .map(|i| {
                (
                    format!("a{i}"),
                    synth_features(&s, "a", i % 2, 6, i as u64).unwrap(),
                )
            })
            .collect()
    }

    fn params() -> BaseParams {
        BaseParams {
            k: 4,
            mining: MiningConfig {
                min_support: Fraction::new(1, 20),
                min_len: 2,
                max_len: 4,
                ..MiningConfig::default()
            },
            cap: 50,
            reg_scale: 0.01,
        }
    }

    #[test]
    fn members_contain_pattern() {
        let r = regions();
        let p = mine_base_patterns("a", &r, &params(), &Exec::sequential()).unwrap();
        assert!(!p.patterns.is_empty());
        let bank = train_base_bank(&r, &p, 0.01, None, &Exec::sequential()).unwrap();
        let by_item: std::collections::HashMap<_, _> = r.iter().cloned().collect();
        for e in &bank.elements {
            assert_eq!(e.member_count as u64, e.pattern.count);
            for m in &e.members {
                let f = &by_item[&m.item_id][m.region as usize];
                let top = binarize_topk(&f.activation, 4).unwrap();
                assert!(e.pattern.items.iter().all(|i| top.contains(i)));
            }
        }
        // both styles' signatures are found
        let sigs = spec().signatures();
        for sig in &sigs["a"] {
            assert!(bank.elements.iter().any(|e| &e.pattern.items == sig));
        }
    }

    #[test]
    fn bank_and_patterns_round_trip() {
        let r = regions();
        let p = mine_base_patterns("a", &r, &params(), &Exec::sequential()).unwrap();
        let text = p.to_text();
        let back = BasePatterns::from_text(&text, "p").unwrap();
        assert_eq!(back, p);
        let bank = train_base_bank(&r, &p, 0.01, None, &Exec::sequential()).unwrap();
        let text = bank.to_text();
        let loaded = BaseBank::from_text(&text, "bank").unwrap();
        assert_eq!(loaded.to_text(), text);
        for (a, b) in loaded.elements.iter().zip(&bank.elements) {
            assert_eq!(a.classifier, b.classifier);
        }
    }

    #[test]
    fn parallel_training_identical() {
        let r = regions();
        let p = mine_base_patterns("a", &r, &params(), &Exec::sequential()).unwrap();
        let seq = train_base_bank(&r, &p, 0.01, None, &Exec::sequential()).unwrap();
        let par = train_base_bank(&r, &p, 0.01, None, &Exec::parallel(8).unwrap()).unwrap();
        assert_eq!(seq.to_text(), par.to_text());
    }

    #[test]
    fn stale_patterns_rejected() {
        let r = regions();
        let p = mine_base_patterns("a", &r, &params(), &Exec::sequential()).unwrap();
        assert!(train_base_bank(&r[..5], &p, 0.01, None, &Exec::sequential()).is_err());
    }
}
