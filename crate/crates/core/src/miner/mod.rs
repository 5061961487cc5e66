//! Transaction databases, exact support/confidence and itemset/rule mining.

mod bitset;
mod mine;

pub use mine::{mine_frequent, mine_frequent_with, mine_rules, mine_rules_with};

use std::cmp::Ordering;
use std::fmt::Write as _;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::RegionFeature;
use crate::fraction::Fraction;

pub type ItemId = u32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transaction {
    pub tid: u32,
    pub items: Vec<ItemId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransactionDb {
    transactions: Vec<Transaction>,
    n_items: usize,
}

impl TransactionDb {
    /// Builds a database with tids assigned in input order. Item lists are
    /// sorted and deduplicated; ids must be below `n_items`.
    pub fn new(rows: Vec<Vec<ItemId>>, n_items: usize) -> Result<Self> {
        let transactions = rows
            .into_iter()
            .enumerate()
            .map(|(tid, mut items)| {
                items.sort_unstable();
                items.dedup();
                if let Some(&last) = items.last() {
                    if last as usize >= n_items {
                        return Err(Error::InvalidItemset(format!(
                            "item {last} outside universe of {n_items}"
                        )));
                    }
                }
                Ok(Transaction {
                    tid: tid as u32,
                    items,
                })
            })
            .collect::<Result<_>>()?;
        Ok(TransactionDb {
            transactions,
            n_items,
        })
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.transactions
    }

    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    /// Debug dump: one line per transaction, space-separated item ids.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.transactions {
            for (i, item) in t.items.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{item}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str, n_items: usize) -> Result<Self> {
        let rows = text
            .lines()
            .enumerate()
            .map(|(i, line)| {
                line.split_whitespace()
                    .map(|f| {
                        f.parse::<ItemId>().map_err(|_| {
                            Error::parse("transactions", i + 1, format!("bad item {f:?}"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        TransactionDb::new(rows, n_items)
    }
}

/// A sorted, non-empty item set with its exact covering count over `total`
/// transactions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Itemset {
    pub items: Vec<ItemId>,
    pub count: u64,
    pub total: u64,
}

impl Itemset {
    pub fn support(&self) -> Ratio<u64> {
        Ratio::new(self.count, self.total)
    }

    /// Canonical order: descending support, then lexicographic items.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        cmp_support_desc(self.count, self.total, other.count, other.total)
            .then_with(|| self.items.cmp(&other.items))
    }
}

fn cmp_support_desc(ca: u64, ta: u64, cb: u64, tb: u64) -> Ordering {
    let a = ca as u128 * tb as u128;
    let b = cb as u128 * ta as u128;
    b.cmp(&a)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub antecedent: Itemset,
    pub consequent: Itemset,
    pub support: Ratio<u64>,
    pub confidence: Ratio<u64>,
}

impl Rule {
    /// Covering count of antecedent and consequent together.
    pub fn joint_count(&self) -> u64 {
        // support = joint / total exactly, so scale back
        *self.support.numer() * (self.antecedent.total / *self.support.denom())
    }

    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        other
            .support
            .cmp(&self.support)
            .then_with(|| self.antecedent.items.cmp(&other.antecedent.items))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiningConfig {
    pub min_support: Fraction,
    pub min_confidence: Fraction,
    pub min_len: usize,
    pub max_len: usize,
    pub top_k_binarize: usize,
    pub consequent_items: Option<Vec<ItemId>>,
    pub cross_group_boundary: Option<ItemId>,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig {
            min_support: Fraction::new(1, 100),
            min_confidence: Fraction::new(3, 4),
            min_len: 3,
            max_len: 6,
            top_k_binarize: 20,
            consequent_items: None,
            cross_group_boundary: None,
        }
    }
}

impl MiningConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_len == 0 || self.min_len > self.max_len {
            return Err(Error::Config(format!(
                "length bounds {}..={} invalid",
                self.min_len, self.max_len
            )));
        }
        let s = self.min_support.ratio();
        if *s.numer() == 0 || s > Ratio::from_integer(1) {
            return Err(Error::Config(format!("min_support {s} outside (0, 1]")));
        }
        if self.min_confidence.ratio() > Ratio::from_integer(1) {
            return Err(Error::Config("min_confidence above 1".into()));
        }
        Ok(())
    }
}

/// Indices of the `k` largest values, ties toward the lower index, sorted.
pub fn binarize_topk<T: Copy + Into<f64>>(vector: &[T], k: usize) -> Result<Vec<ItemId>> {
    if k == 0 {
        return Err(Error::Config("top-k binarization needs k >= 1".into()));
    }
    if k > vector.len() {
        return Err(Error::KTooLarge {
            k,
            dim: vector.len(),
        });
    }
    let values: Vec<f64> = vector.iter().map(|&v| v.into()).collect();
    if let Some(position) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            value: values[position],
            position,
        });
    }
    let mut idx: Vec<ItemId> = (0..values.len() as ItemId).collect();
    let by_rank = |a: &ItemId, b: &ItemId| {
        values[*b as usize]
            .total_cmp(&values[*a as usize])
            .then(a.cmp(b))
    };
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, by_rank);
        idx.truncate(k);
    }
    idx.sort_unstable();
    Ok(idx)
}

/// One transaction per region: the top-`k` activation indices.
pub fn build_base_matrix(regions: &[RegionFeature], k: usize) -> Result<TransactionDb> {
    matrix_from_rows(regions.iter().map(|r| r.activation.as_slice()), k)
}

pub(crate) fn matrix_from_rows<'a>(
    rows: impl IntoIterator<Item = &'a [f32]>,
    k: usize,
) -> Result<TransactionDb> {
    let mut dim = None;
    let rows = rows
        .into_iter()
        .map(|r| {
            let d = *dim.get_or_insert(r.len());
            if r.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: r.len(),
                });
            }
            binarize_topk(r, k)
        })
        .collect::<Result<Vec<_>>>()?;
    let dim = dim.ok_or(Error::Empty("region list"))?;
    TransactionDb::new(rows, dim)
}

fn check_itemset(db: &TransactionDb, items: &[ItemId]) -> Result<()> {
    if items.is_empty() {
        return Err(Error::InvalidItemset("empty itemset".into()));
    }
    if let Some(&bad) = items.iter().find(|&&i| i as usize >= db.n_items()) {
        return Err(Error::InvalidItemset(format!(
            "item {bad} outside universe of {}",
            db.n_items()
        )));
    }
    Ok(())
}

/// Number of transactions containing every item of `items` (any order).
pub fn cover_count(db: &TransactionDb, items: &[ItemId]) -> u64 {
    let mut sorted = items.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    db.transactions()
        .iter()
        .filter(|t| is_sorted_subset(&sorted, &t.items))
        .count() as u64
}

pub(crate) fn is_sorted_subset(needle: &[ItemId], hay: &[ItemId]) -> bool {
    let mut h = hay.iter();
    needle.iter().all(|n| h.any(|x| x == n))
}

/// Fraction of transactions containing `items`.
pub fn support(db: &TransactionDb, items: &[ItemId]) -> Result<Ratio<u64>> {
    check_itemset(db, items)?;
    if db.is_empty() {
        return Err(Error::Empty("transaction database"));
    }
    Ok(Ratio::new(cover_count(db, items), db.len() as u64))
}

/// `supp(X ∪ Y) / supp(X)`.
pub fn confidence(
    db: &TransactionDb,
    antecedent: &[ItemId],
    consequent: &[ItemId],
) -> Result<Ratio<u64>> {
    check_itemset(db, antecedent)?;
    check_itemset(db, consequent)?;
    if antecedent.iter().any(|a| consequent.contains(a)) {
        return Err(Error::InvalidItemset(
            "antecedent and consequent overlap".into(),
        ));
    }
    let x = cover_count(db, antecedent);
    if x == 0 {
        return Err(Error::UndefinedConfidence);
    }
    let union: Vec<ItemId> = antecedent.iter().chain(consequent).copied().collect();
    Ok(Ratio::new(cover_count(db, &union), x))
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: ItemId = 0;
    const B: ItemId = 1;
    const C: ItemId = 2;

    fn abc() -> TransactionDb {
        TransactionDb::new(vec![vec![A, B], vec![A], vec![B, C], vec![A, B, C]], 3).unwrap()
    }

    #[test]
    fn topk_examples() {
        assert_eq!(
            binarize_topk(&[0.9f32, 0.1, 0.5, 0.7], 2).unwrap(),
            vec![0, 3]
        );
        assert_eq!(binarize_topk(&[0.5f32, 0.5, 0.1], 2).unwrap(), vec![0, 1]);
        assert_eq!(
            binarize_topk(&[0.5f32, 0.2, 0.1], 3).unwrap(),
            vec![0, 1, 2]
        );
        assert!(matches!(
            binarize_topk(&[0.5f32], 2),
            Err(Error::KTooLarge { k: 2, dim: 1 })
        ));
        assert!(binarize_topk(&[f64::NAN, 1.0], 1).is_err());
    }

    #[test]
    fn topk_ties_prefer_low_index() {
        let v = [1.0f64, 3.0, 3.0, 2.0, 3.0];
        assert_eq!(binarize_topk(&v, 2).unwrap(), vec![1, 2]);
        assert_eq!(binarize_topk(&v, 4).unwrap(), vec![1, 2, 3, 4]);
    }

    #[test]
    fn base_matrix_shape() {
        use crate::features::{RegionFeature, RegionGeometry};
        let g = RegionGeometry {
            x: 0,
            y: 0,
            width: 1,
            height: 1,
        };
        let regions: Vec<RegionFeature> = [
            [0.1f32, 0.9, 0.3, 0.2, 0.0],
            [0.5, 0.1, 0.3, 0.2, 0.7],
            [0.5, 0.1, 0.3, 0.2, 0.7],
        ]
        .iter()
        .map(|a| RegionFeature {
            geometry: g,
            activation: a.to_vec(),
        })
        .collect();
        let db = build_base_matrix(&regions, 2).unwrap();
        assert_eq!((db.len(), db.n_items()), (3, 5));
        assert!(db.transactions().iter().all(|t| t.items.len() == 2));
        assert_eq!(db.transactions()[1].items, db.transactions()[2].items);
        assert_ne!(db.transactions()[1].tid, db.transactions()[2].tid);
        assert!(build_base_matrix(&[], 2).is_err());
    }

    #[test]
    fn support_examples() {
        let db = abc();
        assert_eq!(support(&db, &[A, B]).unwrap(), Ratio::new(1, 2));
        assert_eq!(support(&db, &[A]).unwrap(), Ratio::new(3, 4));
        let full = TransactionDb::new(vec![vec![0, 1], vec![1]], 2).unwrap();
        assert_eq!(support(&full, &[1]).unwrap(), Ratio::from_integer(1));
        assert!(support(&db, &[]).is_err());
    }

    #[test]
    fn confidence_examples() {
        let db = abc();
        assert_eq!(confidence(&db, &[A], &[B]).unwrap(), Ratio::new(2, 3));
        let db2 = TransactionDb::new(vec![vec![0], vec![1], vec![0, 2]], 3).unwrap();
        assert_eq!(
            confidence(&db2, &[0], &[1]).unwrap(),
            Ratio::from_integer(0)
        );
        assert_eq!(
            confidence(&db2, &[2], &[0]).unwrap(),
            Ratio::from_integer(1)
        );
        assert!(matches!(
            confidence(&db2, &[1, 2], &[0]),
            Err(Error::UndefinedConfidence)
        ));
    }

    #[test]
    fn dump_round_trip() {
        let db = abc();
        assert_eq!(db.to_text(), "0 1\n0\n1 2\n0 1 2\n");
        assert_eq!(TransactionDb::from_text(&db.to_text(), 3).unwrap(), db);
    }

    #[test]
    fn config_validation() {
        assert!(MiningConfig::default().validate().is_ok());
        let mut c = MiningConfig {
            min_len: 4,
            max_len: 3,
            ..MiningConfig::default()
        };
        assert!(c.validate().is_err());
        c = MiningConfig {
            min_support: Fraction::new(0, 1),
            ..MiningConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
