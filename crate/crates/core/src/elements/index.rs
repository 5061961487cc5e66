use crate::miner::{ItemId, TransactionDb};

/// Item id → ascending tids of the transactions containing it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvertedIndex {
    postings: Vec<Vec<u32>>,
}

impl InvertedIndex {
    pub fn postings(&self, item: ItemId) -> &[u32] {
        self.postings.get(item as usize).map_or(&[], Vec::as_slice)
    }

    pub fn n_items(&self) -> usize {
        self.postings.len()
    }

    pub fn total_postings(&self) -> usize {
        self.postings.iter().map(Vec::len).sum()
    }
}

pub fn build_inverted_index(db: &TransactionDb) -> InvertedIndex {
    let mut postings = vec![Vec::new(); db.n_items()];
    for t in db.transactions() {
        for &i in &t.items {
            postings[i as usize].push(t.tid);
        }
    }
    InvertedIndex { postings }
}

/// Tids containing every item of `pattern`. Postings are intersected
/// shortest first.
pub fn retrieve_members(index: &InvertedIndex, pattern: &[ItemId]) -> Vec<u32> {
    let mut lists: Vec<&[u32]> = pattern.iter().map(|&i| index.postings(i)).collect();
    if lists.is_empty() {
        return Vec::new();
    }
    lists.sort_by_key(|l| l.len());
    let mut acc = lists[0].to_vec();
    for l in &lists[1..] {
        if acc.is_empty() {
            break;
        }
        acc = intersect_sorted(&acc, l);
    }
    acc
}

pub(crate) fn intersect_sorted(small: &[u32], large: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(small.len());
    if large.len() > 16 * small.len() {
        let mut rest = large;
        for &x in small {
            match rest.binary_search(&x) {
                Ok(p) => {
                    out.push(x);
                    rest = &rest[p + 1..];
                }
                Err(p) => rest = &rest[p..],
            }
        }
        return out;
    }
    let (mut i, mut j) = (0, 0);
    while i < small.len() && j < large.len() {
        match small[i].cmp(&large[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(small[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn postings_example() {
        let db = TransactionDb::new(vec![vec![0, 1], vec![0], vec![1]], 3).unwrap();
        let idx = build_inverted_index(&db);
        assert_eq!(idx.postings(0), &[0, 1]);
        assert_eq!(idx.postings(1), &[0, 2]);
        assert!(idx.postings(2).is_empty());
        assert_eq!(idx.total_postings(), 4);
    }

    #[test]
    fn members_example() {
        let db = TransactionDb::new(vec![vec![1, 5, 9], vec![1, 2], vec![1, 5, 7]], 10).unwrap();
        let idx = build_inverted_index(&db);
        assert_eq!(retrieve_members(&idx, &[1, 5]), vec![0, 2]);
        assert_eq!(retrieve_members(&idx, &[1]), idx.postings(1));
        assert!(retrieve_members(&idx, &[1, 3]).is_empty());
    }

    proptest! {
        #[test]
        fn matches_subset_scan(
            rows in proptest::collection::vec(proptest::collection::vec(0u32..20, 0..8), 1..120),
            pattern in proptest::collection::btree_set(0u32..20, 1..4),
        ) {
            let db = TransactionDb::new(rows, 20).unwrap();
            let idx = build_inverted_index(&db);
            let p: Vec<u32> = pattern.into_iter().collect();
            let brute: Vec<u32> = db
                .transactions()
                .iter()
                .filter(|t| p.iter().all(|i| t.items.contains(i)))
                .map(|t| t.tid)
                .collect();
            prop_assert_eq!(retrieve_members(&idx, &p), brute);
            let n: usize = db.transactions().iter().map(|t| t.items.len()).sum();
            prop_assert_eq!(idx.total_postings(), n);
        }

        #[test]
        fn galloping_matches_merge(
            a in proptest::collection::btree_set(0u32..5000, 0..20),
            b in proptest::collection::btree_set(0u32..5000, 0..2000),
        ) {
            let a: Vec<u32> = a.into_iter().collect();
            let b: Vec<u32> = b.into_iter().collect();
            let expected: Vec<u32> = a.iter().copied().filter(|x| b.contains(x)).collect();
            prop_assert_eq!(intersect_sorted(&a, &b), expected);
        }
    }
}
