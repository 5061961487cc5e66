//! Level-wise frequent itemset enumeration over vertical tid bitsets.
//!
//! Level `l+1` candidates join two level-`l` sets sharing their first
//! `l-1` items; a candidate survives only if every `l`-subset was frequent.
//! Prefix groups are independent and are counted in parallel, then
//! concatenated in group order, so output never depends on worker count.

use std::collections::HashSet;

use num_rational::Ratio;

use super::bitset::TidSet;
use super::{ItemId, Itemset, MiningConfig, Rule, TransactionDb};
use crate::error::{Error, Result};
use crate::exec::Exec;

struct Node {
    items: Vec<ItemId>,
    tids: TidSet,
    count: u64,
}

fn vertical(db: &TransactionDb) -> Vec<TidSet> {
    let mut cols = vec![TidSet::empty(db.len()); db.n_items()];
    for (row, t) in db.transactions().iter().enumerate() {
        for &i in &t.items {
            cols[i as usize].insert(row);
        }
    }
    cols
}

/// All itemsets over `columns` (restricted to `allowed`) of length
/// `1..=max_len` whose bitset count reaches `min_count`, with counts.
fn levelwise(
    columns: &[TidSet],
    allowed: impl Fn(ItemId) -> bool,
    min_count: u64,
    max_len: usize,
    exec: &Exec,
) -> Vec<(Vec<ItemId>, u64)> {
    let mut level: Vec<Node> = columns
        .iter()
        .enumerate()
        .filter(|(i, _)| allowed(*i as ItemId))
        .filter_map(|(i, c)| {
            let count = c.count();
            (count >= min_count).then(|| Node {
                items: vec![i as ItemId],
                tids: c.clone(),
                count,
            })
        })
        .collect();
    let mut found: Vec<(Vec<ItemId>, u64)> = Vec::new();
    let mut len = 1;
    loop {
        found.extend(level.iter().map(|n| (n.items.clone(), n.count)));
        if len >= max_len || level.len() < 2 {
            break;
        }
        let groups = prefix_groups(&level);
        let known: HashSet<&[ItemId]> = level.iter().map(|n| n.items.as_slice()).collect();
        let next: Vec<Vec<Node>> = exec.map(&groups, |&(start, end)| {
            let mut out = Vec::new();
            let mut probe = Vec::with_capacity(len);
            for i in start..end {
                for j in i + 1..end {
                    let (a, b) = (&level[i], &level[j]);
                    let mut items = a.items.clone();
                    items.push(*b.items.last().unwrap());
                    // dropping either of the last two items gives a or b
                    let pruned = (0..len.saturating_sub(1)).any(|drop| {
                        probe.clear();
                        probe.extend(
                            items
                                .iter()
                                .enumerate()
                                .filter(|&(p, _)| p != drop)
                                .map(|(_, &x)| x),
                        );
                        !known.contains(probe.as_slice())
                    });
                    if pruned {
                        continue;
                    }
                    let count = a.tids.and_count(&b.tids);
                    if count >= min_count {
                        out.push(Node {
                            items,
                            tids: a.tids.and(&b.tids),
                            count,
                        });
                    }
                }
            }
            out
        });
        level = next.into_iter().flatten().collect();
        len += 1;
    }
    found
}

/// Contiguous runs of a lexicographically sorted level sharing all but the
/// last item.
fn prefix_groups(level: &[Node]) -> Vec<(usize, usize)> {
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..=level.len() {
        let boundary = i == level.len() || {
            let (p, q) = (&level[start].items, &level[i].items);
            p[..p.len() - 1] != q[..q.len() - 1]
        };
        if boundary {
            if i - start >= 2 {
                groups.push((start, i));
            }
            start = i;
        }
    }
    groups
}

pub fn mine_frequent(db: &TransactionDb, config: &MiningConfig) -> Result<Vec<Itemset>> {
    mine_frequent_with(db, config, &Exec::sequential())
}

/// Every itemset with length in `min_len..=max_len` and support at least
/// `min_support`, in canonical order.
pub fn mine_frequent_with(
    db: &TransactionDb,
    config: &MiningConfig,
    exec: &Exec,
) -> Result<Vec<Itemset>> {
    config.validate()?;
    if db.is_empty() {
        return Err(Error::Empty("transaction database"));
    }
    let m = db.len() as u64;
    let min_count = config.min_support.min_count(m).max(1);
    let columns = vertical(db);
    let mut out: Vec<Itemset> = levelwise(&columns, |_| true, min_count, config.max_len, exec)
        .into_iter()
        .filter(|(items, _)| items.len() >= config.min_len)
        .map(|(items, count)| Itemset {
            items,
            count,
            total: m,
        })
        .collect();
    out.sort_by(Itemset::canonical_cmp);
    Ok(out)
}

pub fn mine_rules(db: &TransactionDb, config: &MiningConfig) -> Result<Vec<Rule>> {
    mine_rules_with(db, config, &Exec::sequential())
}

/// Rules `X ⇒ Y` for the configured consequent `Y`: `X` disjoint from `Y`,
/// within the length bounds, `supp(X ∪ Y) >= min_support`,
/// `conf >= min_confidence` and, when a boundary `b` is set, `X` holding
/// items on both sides of `b`.
pub fn mine_rules_with(
    db: &TransactionDb,
    config: &MiningConfig,
    exec: &Exec,
) -> Result<Vec<Rule>> {
    config.validate()?;
    if db.is_empty() {
        return Err(Error::Empty("transaction database"));
    }
    let mut consequent = config
        .consequent_items
        .clone()
        .ok_or_else(|| Error::Config("rule mining needs consequent_items".into()))?;
    consequent.sort_unstable();
    consequent.dedup();
    if consequent.is_empty() {
        return Err(Error::InvalidItemset("empty consequent".into()));
    }
    if let Some(&bad) = consequent.iter().find(|&&c| c as usize >= db.n_items()) {
        return Err(Error::InvalidItemset(format!(
            "consequent item {bad} outside universe of {}",
            db.n_items()
        )));
    }
    let m = db.len() as u64;
    let min_count = config.min_support.min_count(m).max(1);
    let columns = vertical(db);
    let mut with_y = TidSet::full(db.len());
    for &c in &consequent {
        with_y = with_y.and(&columns[c as usize]);
    }
    let y_count = with_y.count();
    let conditional: Vec<TidSet> = columns.iter().map(|c| c.and(&with_y)).collect();
    let boundary = config.cross_group_boundary;
    let candidates: Vec<(Vec<ItemId>, u64)> = levelwise(
        &conditional,
        |i| consequent.binary_search(&i).is_err(),
        min_count,
        config.max_len,
        exec,
    )
    .into_iter()
    .filter(|(items, _)| items.len() >= config.min_len)
    .filter(|(items, _)| match boundary {
        Some(b) => items[0] < b && *items.last().unwrap() >= b,
        None => true,
    })
    .collect();
    let min_conf = config.min_confidence.ratio();
    let rules: Vec<Option<Rule>> = exec.map(&candidates, |(items, joint)| {
        let mut tids = columns[items[0] as usize].clone();
        for &i in &items[1..] {
            tids = tids.and(&columns[i as usize]);
        }
        let x_count = tids.count();
        let confidence = Ratio::new(*joint, x_count);
        (confidence >= min_conf).then(|| Rule {
            antecedent: Itemset {
                items: items.clone(),
                count: x_count,
                total: m,
            },
            consequent: Itemset {
                items: consequent.clone(),
                count: y_count,
                total: m,
            },
            support: Ratio::new(*joint, m),
            confidence,
        })
    });
    let mut rules: Vec<Rule> = rules.into_iter().flatten().collect();
    rules.sort_by(Rule::canonical_cmp);
    Ok(rules)
}
