use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Catalog, CatalogItem, ClassSet, CompatPair, DatasetSplit};
use crate::error::{Error, Result};
use crate::features::{mix_seed, synth_features, RegionFeature, SyntheticSpec};

/// A generated corpus with planted styles.
#[derive(Clone, Debug, PartialEq)]
pub struct Benchmark {
    pub classes: ClassSet,
    pub catalog: Catalog,
    /// Region features per item, in catalog order.
    pub features: Vec<(String, Vec<RegionFeature>)>,
    pub styles: BTreeMap<String, usize>,
    pub split: DatasetSplit,
}

const MAX_DRAWS_PER_PAIR: usize = 1000;

/// Styles are dealt evenly then shuffled within each class. Pairs are drawn
/// over the class pairs named by the compat table, half compatible, with no
/// repeats across train and test.
pub fn generate_benchmark(
    spec: &SyntheticSpec,
    images_per_class: usize,
    train_pairs: usize,
    test_pairs: usize,
    seed: u64,
) -> Result<Benchmark> {
    spec.validate()?;
    if spec.compat_table.is_empty() {
        return Err(Error::Synthetic(
            "compat table has no positive entries".into(),
        ));
    }
    if images_per_class == 0 {
        return Err(Error::Synthetic("images_per_class must be positive".into()));
    }
    let n_regions = spec
        .sampling
        .plan(spec.image_size.0, spec.image_size.1)?
        .len();
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0xB0));
    let mut items = Vec::new();
    let mut styles = BTreeMap::new();
    let mut by_class: BTreeMap<&str, Vec<(String, usize)>> = BTreeMap::new();
    for class in &spec.classes {
        let mut dealt: Vec<usize> = (0..images_per_class)
            .map(|i| i % spec.styles_per_class)
            .collect();
        dealt.shuffle(&mut rng);
        for (i, style) in dealt.into_iter().enumerate() {
            let id = format!("{class}-{i:04}");
            items.push(CatalogItem {
                item_id: id.clone(),
                class_label: class.clone(),
                feature_source: PathBuf::from(format!("features/{id}.feat")),
            });
            styles.insert(id.clone(), style);
            by_class.entry(class).or_default().push((id, style));
        }
    }
    let classes = ClassSet::new(spec.classes.iter().cloned());
    let catalog = Catalog::new(items, &classes)?;
    let features = catalog
        .items()
        .iter()
        .enumerate()
        .map(|(i, it)| {
            let f = synth_features(
                spec,
                &it.class_label,
                styles[&it.item_id],
                n_regions,
                mix_seed(seed, 0x1_0000_0000 + i as u64),
            )?;
            Ok((it.item_id.clone(), f))
        })
        .collect::<Result<Vec<_>>>()?;

    let class_pairs: Vec<(String, String)> = spec
        .compat_table
        .entries()
        .map(|((a, _), (b, _))| (a.clone(), b.clone()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut seen = BTreeSet::new();
    let mut draw = |count: usize, rng: &mut ChaCha8Rng| -> Result<Vec<CompatPair>> {
        let want_pos = count / 2;
        let (mut pos, mut neg) = (0, 0);
        let mut out = Vec::with_capacity(count);
        let mut draws = 0;
        while out.len() < count {
            draws += 1;
            if draws > MAX_DRAWS_PER_PAIR * count.max(1) {
                return Err(Error::Synthetic(format!(
                    "could not draw {count} distinct balanced pairs"
                )));
            }
            let (ca, cb) = &class_pairs[rng.gen_range(0..class_pairs.len())];
            let (ia, sa) = by_class[ca.as_str()].choose(rng).expect("class has images");
            let (ib, sb) = by_class[cb.as_str()].choose(rng).expect("class has images");
            if ia == ib {
                continue;
            }
            let label =
                spec.compat_table
                    .is_compatible(&(ca.clone(), *sa), &(cb.clone(), *sb)) as u8;
            let need = if label == 1 {
                pos < want_pos
            } else {
                neg < count - want_pos
            };
            let key = if ia <= ib {
                (ia.clone(), ib.clone())
            } else {
                (ib.clone(), ia.clone())
            };
            if !need || seen.contains(&key) {
                continue;
            }
            seen.insert(key);
            if label == 1 {
                pos += 1;
            } else {
                neg += 1;
            }
            out.push(CompatPair {
                item_a: ia.clone(),
                item_b: ib.clone(),
                label,
            });
        }
        Ok(out)
    };
    let train = draw(train_pairs, &mut rng)?;
    let test = draw(test_pairs, &mut rng)?;
    Ok(Benchmark {
        classes,
        catalog,
        features,
        styles,
        split: DatasetSplit {
            train_pairs: train,
            test_pairs: test,
            seed,
        },
    })
}
