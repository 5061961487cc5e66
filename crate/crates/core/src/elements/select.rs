use std::collections::HashSet;

use crate::miner::Itemset;

/// Drops patterns whose item set already appeared; first occurrence wins.
pub fn dedup_patterns(patterns: Vec<Itemset>) -> Vec<Itemset> {
    let mut seen = HashSet::new();
    patterns
        .into_iter()
        .filter(|p| seen.insert(p.items.clone()))
        .collect()
}

/// At most `cap` patterns by descending support, ties lexicographic.
pub fn select_elements(mut patterns: Vec<Itemset>, cap: usize) -> Vec<Itemset> {
    patterns.sort_by(Itemset::canonical_cmp);
    patterns.truncate(cap);
    patterns
}
