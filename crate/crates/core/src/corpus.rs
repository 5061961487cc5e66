//! Catalog, class set and labeled pair loading, plus deterministic splitting.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The declared set of object classes, in canonical (lexicographic) order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassSet(BTreeSet<String>);

impl ClassSet {
    pub fn new<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ClassSet(names.into_iter().map(Into::into).collect())
    }

    pub fn contains(&self, class: &str) -> bool {
        self.0.contains(class)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_text(&self) -> String {
        self.iter().map(|c| format!("{c}\n")).collect()
    }
}

/// One class name per line; blank lines and `#` comments ignored.
pub fn parse_classes(text: &str, source: &str) -> Result<ClassSet> {
    let mut set = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.contains(char::is_whitespace) || line.contains(',') {
            return Err(Error::parse(
                source,
                i + 1,
                format!("invalid class name {line:?}"),
            ));
        }
        if !set.insert(line.to_string()) {
            return Err(Error::parse(
                source,
                i + 1,
                format!("class {line:?} listed twice"),
            ));
        }
    }
    Ok(ClassSet(set))
}

pub fn load_classes(path: &Path) -> Result<ClassSet> {
    let text = read_to_string(path)?;
    parse_classes(&text, &path.display().to_string())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogItem {
    pub item_id: String,
    pub class_label: String,
    /// Feature file path as written in the catalog (relative paths are
    /// resolved against the catalog's directory).
    pub feature_source: PathBuf,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Catalog {
    items: Vec<CatalogItem>,
    by_id: HashMap<String, usize>,
}

impl Catalog {
    pub fn new(items: Vec<CatalogItem>, classes: &ClassSet) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(items.len());
        for (i, item) in items.iter().enumerate() {
            if !classes.contains(&item.class_label) {
                return Err(Error::UnknownClass(item.class_label.clone()));
            }
            if by_id.insert(item.item_id.clone(), i).is_some() {
                return Err(Error::DuplicateId(item.item_id.clone()));
            }
        }
        Ok(Catalog { items, by_id })
    }

    pub fn items(&self) -> &[CatalogItem] {
        &self.items
    }

    pub fn get(&self, id: &str) -> Option<&CatalogItem> {
        self.by_id.get(id).map(|&i| &self.items[i])
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Items of one class, in catalog order.
    pub fn of_class<'a>(&'a self, class: &'a str) -> impl Iterator<Item = &'a CatalogItem> + 'a {
        self.items.iter().filter(move |it| it.class_label == class)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for it in &self.items {
            let _ = writeln!(
                out,
                "{}\t{}\t{}",
                it.item_id,
                it.class_label,
                it.feature_source.display()
            );
        }
        out
    }
}

pub fn parse_catalog(text: &str, source: &str, classes: &ClassSet) -> Result<Catalog> {
    let mut items = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() != 3 || fields.iter().any(|f| f.trim().is_empty()) {
            return Err(Error::parse(
                source,
                i + 1,
                "expected `item_id<TAB>class_label<TAB>feature_file_path`",
            ));
        }
        items.push(CatalogItem {
            item_id: fields[0].trim().to_string(),
            class_label: fields[1].trim().to_string(),
            feature_source: PathBuf::from(fields[2].trim()),
        });
    }
    Catalog::new(items, classes)
}

pub fn load_catalog(path: &Path, classes: &ClassSet) -> Result<Catalog> {
    let text = read_to_string(path)?;
    parse_catalog(&text, &path.display().to_string(), classes)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CompatPair {
    pub item_a: String,
    pub item_b: String,
    pub label: u8,
}

impl CompatPair {
    pub fn is_compatible(&self) -> bool {
        self.label == 1
    }

    fn unordered_key(&self) -> (&str, &str) {
        if self.item_a <= self.item_b {
            (&self.item_a, &self.item_b)
        } else {
            (&self.item_b, &self.item_a)
        }
    }
}

/// `item_a,item_b,label` per line; `#` lines ignored. Exact repeats are
/// dropped, repeats with a different label are an error.
pub fn parse_pairs(text: &str, source: &str, catalog: &Catalog) -> Result<Vec<CompatPair>> {
    let mut pairs: Vec<CompatPair> = Vec::new();
    let mut seen: HashMap<(String, String), u8> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                source,
                i + 1,
                "expected `item_a,item_b,label`",
            ));
        }
        let label = match fields[2] {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(Error::parse(
                    source,
                    i + 1,
                    format!("label {other:?} is not 0 or 1"),
                ))
            }
        };
        for id in &fields[..2] {
            if catalog.get(id).is_none() {
                return Err(Error::UnknownItem(id.to_string()));
            }
        }
        if fields[0] == fields[1] {
            return Err(Error::SelfPair(fields[0].to_string()));
        }
        let pair = CompatPair {
            item_a: fields[0].to_string(),
            item_b: fields[1].to_string(),
            label,
        };
        let (a, b) = pair.unordered_key();
        match seen.get(&(a.to_string(), b.to_string())) {
            Some(&l) if l == label => {
                log::debug!("{source}:{}: duplicate pair dropped", i + 1);
                continue;
            }
            Some(_) => return Err(Error::ConflictingPair(a.to_string(), b.to_string())),
            None => {
                seen.insert((a.to_string(), b.to_string()), label);
            }
        }
        pairs.push(pair);
    }
    Ok(pairs)
}

pub fn load_pairs(path: &Path, catalog: &Catalog) -> Result<Vec<CompatPair>> {
    let text = read_to_string(path)?;
    parse_pairs(&text, &path.display().to_string(), catalog)
}

pub fn pairs_to_text(pairs: &[CompatPair]) -> String {
    let mut out = String::new();
    for p in pairs {
        let _ = writeln!(out, "{},{},{}", p.item_a, p.item_b, p.label);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train_pairs: Vec<CompatPair>,
    pub test_pairs: Vec<CompatPair>,
    pub seed: u64,
}

/// Seeded partition; both halves keep the input's relative order.
pub fn split_dataset(pairs: &[CompatPair], test_fraction: f64, seed: u64) -> Result<DatasetSplit> {
    if pairs.is_empty() {
        return Err(Error::Empty("pair list"));
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!(
            "test_fraction {test_fraction} outside (0, 1)"
        )));
    }
    let n_test = (test_fraction * pairs.len() as f64).round() as usize;
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut is_test = vec![false; pairs.len()];
    for &i in &order[..n_test] {
        is_test[i] = true;
    }
    let (mut train_pairs, mut test_pairs) = (Vec::new(), Vec::new());
    for (pair, test) in pairs.iter().zip(is_test) {
        if test {
            test_pairs.push(pair.clone());
        } else {
            train_pairs.push(pair.clone());
        }
    }
    Ok(DatasetSplit {
        train_pairs,
        test_pairs,
        seed,
    })
}

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classes() -> ClassSet {
        ClassSet::new(["jeans", "shirts"])
    }

    fn catalog() -> Catalog {
        parse_catalog(
            "a\tshirts\ta.feat\nb\tjeans\tb.feat\nc\tshirts\tc.feat\n",
            "cat",
            &classes(),
        )
        .unwrap()
    }

    #[test]
    fn three_line_catalog() {
        let cat = catalog();
        assert_eq!(cat.len(), 3);
        assert_eq!(cat.get("b").unwrap().class_label, "jeans");
        assert_eq!(cat.of_class("shirts").count(), 2);
    }

    #[test]
    fn empty_catalog() {
        assert!(parse_catalog("", "cat", &classes()).unwrap().is_empty());
    }

    #[test]
    fn duplicate_id_named() {
        let err = parse_catalog("a\tshirts\tx\na\tjeans\ty\n", "cat", &classes()).unwrap_err();
        assert!(matches!(err, Error::DuplicateId(ref id) if id == "a"));
    }

    #[test]
    fn unknown_class_and_malformed() {
        let err = parse_catalog("a\thats\tx\n", "cat", &classes()).unwrap_err();
        assert!(matches!(err, Error::UnknownClass(_)));
        let err = parse_catalog("a\tshirts\tx\nb shirts y\n", "cat", &classes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn catalog_round_trip() {
        let cat = catalog();
        let again = parse_catalog(&cat.to_text(), "again", &classes()).unwrap();
        assert_eq!(cat, again);
    }

    #[test]
    fn class_file() {
        let set = parse_classes("# c\nshirts\n\njeans\n", "classes").unwrap();
        assert_eq!(set.iter().collect::<Vec<_>>(), ["jeans", "shirts"]);
        assert!(parse_classes("a\na\n", "classes").is_err());
    }

    #[test]
    fn pair_lines() {
        let cat = catalog();
        let pairs = parse_pairs("# header\na,b,1\n", "p", &cat).unwrap();
        assert_eq!(
            pairs,
            vec![CompatPair {
                item_a: "a".into(),
                item_b: "b".into(),
                label: 1
            }]
        );
        assert!(matches!(
            parse_pairs("a,a,1\n", "p", &cat).unwrap_err(),
            Error::SelfPair(_)
        ));
        assert!(matches!(
            parse_pairs("a,z,0\n", "p", &cat).unwrap_err(),
            Error::UnknownItem(ref z) if z == "z"
        ));
        assert!(matches!(
            parse_pairs("a,b,2\n", "p", &cat).unwrap_err(),
            Error::Parse { line: 1, .. }
        ));
    }

    #[test]
    fn conflicting_duplicates_rejected() {
        let cat = catalog();
        assert!(matches!(
            parse_pairs("a,b,1\nb,a,0\n", "p", &cat).unwrap_err(),
            Error::ConflictingPair(..)
        ));
        assert_eq!(parse_pairs("a,b,1\nb,a,1\n", "p", &cat).unwrap().len(), 1);
    }

    fn many_pairs(n: usize) -> Vec<CompatPair> {
        (0..n)
            .map(|i| CompatPair {
                item_a: format!("a{i}"),
                item_b: format!("b{i}"),
                label: (i % 2) as u8,
            })
            .collect()
    }

    #[test]
    fn split_sizes() {
        let s = split_dataset(&many_pairs(10), 0.2, 7).unwrap();
        assert_eq!((s.train_pairs.len(), s.test_pairs.len()), (8, 2));
        let s = split_dataset(&many_pairs(4), 0.5, 1).unwrap();
        assert_eq!((s.train_pairs.len(), s.test_pairs.len()), (2, 2));
    }

    #[test]
    fn split_is_deterministic_partition() {
        let pairs = many_pairs(57);
        let a = split_dataset(&pairs, 0.3, 11).unwrap();
        let b = split_dataset(&pairs, 0.3, 11).unwrap();
        assert_eq!(a, b);
        let mut all: Vec<_> = a.train_pairs.iter().chain(&a.test_pairs).cloned().collect();
        all.sort_by(|x, y| x.item_a.cmp(&y.item_a));
        let mut expected = pairs.clone();
        expected.sort_by(|x, y| x.item_a.cmp(&y.item_a));
        assert_eq!(all, expected);
    }

    #[test]
    fn split_errors() {
        assert!(split_dataset(&[], 0.2, 1).is_err());
        assert!(split_dataset(&many_pairs(3), 1.0, 1).is_err());
    }
}
